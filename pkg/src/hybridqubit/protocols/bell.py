"""Two-photon states, local channels, concurrence and the CHSH parameter."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..channel.ops import run_channel
from ..channel.qplate import qplate_radial_coeffs
from ..modes import BasisSpec, SpinOrbitState, make_basis, rotate_frame
from .transfer import Channel, TotalLossError, check_encoding, detect_amplitudes, prepare, thetas_of

_S2 = 1 / math.sqrt(2)
_Y = np.array([[0, -1j], [1j, 0]])

PHI_MINUS = np.array([_S2, 0, 0, -_S2], dtype=complex)


@dataclass(frozen=True)
class TwoPhotonPureState:
    """Schmidt-form sum of product terms (coefficient, arm A, arm B)."""

    terms: tuple[tuple[complex, SpinOrbitState, SpinOrbitState], ...]
    encoding: str = "hybrid"

    def __post_init__(self):
        check_encoding(self.encoding)
        if not 0 < len(self.terms) <= 4:
            raise ValueError("a two-photon state needs between 1 and 4 Schmidt terms")
        weight = sum(abs(c) ** 2 * a.norm2 * b.norm2 for c, a, b in self.terms)
        if weight > 1 + 1e-12:
            raise ValueError(f"Schmidt weight {weight} exceeds 1")

    @property
    def basis(self) -> BasisSpec:
        return self.terms[0][1].basis


def bell_state_logical(basis: BasisSpec | None = None, encoding: str = "hybrid") -> TwoPhotonPureState:
    """(|0 0> - |1 1>)/sqrt(2) with both arms prepared in ``encoding``."""
    basis = basis or make_basis()
    qp = None if encoding == "polarization" else qplate_radial_coeffs(basis)
    zero = prepare(np.array([1, 0]), encoding, basis, qp)
    one = prepare(np.array([0, 1]), encoding, basis, qp)
    return TwoPhotonPureState(((_S2, zero, zero), (-_S2, one, one)), encoding)


def _arm(s: SpinOrbitState, channel: Channel, theta: float, encoding: str, qp) -> np.ndarray:
    return detect_amplitudes(rotate_frame(run_channel(s, channel), theta), encoding, qp)


def _joint_density(tp: TwoPhotonPureState, chan_a, chan_b, theta_a, theta_b, qp) -> np.ndarray:
    psi = 0
    for c, a, b in tp.terms:
        da = _arm(a, chan_a, theta_a, tp.encoding, qp)
        db = _arm(b, chan_b, theta_b, tp.encoding, qp)
        psi = psi + c * np.einsum("ia,jb->iajb", da, db)
    # trace the residual (non-logical) indices
    return np.einsum("iajb,kalb->ijkl", psi, np.conj(psi)).reshape(4, 4)


def apply_local(tp: TwoPhotonPureState, chan_a: Channel = (), chan_b: Channel = (),
                theta_a=0.0, theta_b=0.0) -> tuple[np.ndarray, float]:
    """Send each arm through its own channel and rotated detector; return (rho, survival).

    Angles may be sequences, in which case the (subnormalized) detected
    matrices are averaged over all angle pairs before renormalization.
    """
    qp = None if tp.encoding == "polarization" else qplate_radial_coeffs(tp.basis)
    ta, tb = thetas_of(theta_a), thetas_of(theta_b)
    acc = np.zeros((4, 4), dtype=complex)
    for a in ta:
        for b in tb:
            acc += _joint_density(tp, chan_a, chan_b, a, b, qp)
    acc /= ta.size * tb.size
    survival = float(np.trace(acc).real)
    if survival < 1e-12:
        raise TotalLossError(f"joint survival {survival:.3e} is below 1e-12")
    return acc / survival, survival


_EIG_FLOOR = 1e-14


def concurrence(rho: np.ndarray) -> float:
    """Wootters concurrence max(0, l1 - l2 - l3 - l4).

    The l_i are the singular values of sqrt(rho) (Y x Y) sqrt(rho)*, which equal
    the square roots of the eigenvalues of rho (Y x Y) rho* (Y x Y) without
    taking square roots of rounding-level eigenvalues. Eigenvalues of rho
    below 1e-14 (relative) are treated as zero.
    """
    w, v = np.linalg.eigh(rho)
    w = np.where(w > _EIG_FLOOR * max(w.max(), 0.0), w, 0.0)
    sq = (v * np.sqrt(w)) @ v.conj().T
    lam = np.linalg.svd(sq @ np.kron(_Y, _Y) @ sq.conj(), compute_uv=False)
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def _projector_pair(v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Projectors on v (outcome 0) and its orthogonal complement (outcome 1)."""
    p0 = np.outer(v, v.conj())
    return p0, np.eye(2) - p0


def _rotated(angle: float) -> np.ndarray:
    return np.array([math.cos(angle), math.sin(angle)], dtype=complex)


# Alice measures {|0>,|1>} and {|+>,|->}; Bob uses the same bases rotated by pi/8
ALICE_BASES = (_rotated(0.0), _rotated(math.pi / 4))
BOB_BASES = (_rotated(math.pi / 8), _rotated(math.pi / 4 + math.pi / 8))


def _observable(v: np.ndarray, sign: int) -> np.ndarray:
    p0, p1 = _projector_pair(v)
    return sign * (p0 - p1)


def _correlators(rho: np.ndarray, signs: tuple[int, int, int, int]) -> np.ndarray:
    sa0, sa1, sb0, sb1 = signs
    alice = (_observable(ALICE_BASES[0], sa0), _observable(ALICE_BASES[1], sa1))
    bob = (_observable(BOB_BASES[0], sb0), _observable(BOB_BASES[1], sb1))
    return np.array([[np.trace(rho @ np.kron(a, b)).real for b in bob] for a in alice])


def _s_value(e: np.ndarray) -> float:
    # S = |E(a0,b0) + E(a1,b0) + E(a0,b1) - E(a1,b1)|
    return abs(e[0, 0] + e[1, 0] + e[0, 1] - e[1, 1])


@lru_cache(maxsize=1)
def chsh_labeling() -> tuple[int, int, int, int]:
    """Outcome relabeling (signs for a0, a1, b0, b1) maximizing S on the ideal (|00> - |11>)/sqrt(2).

    The 16 sign patterns are scanned in a fixed order and the first maximizer
    is kept, so the choice is deterministic.
    """
    rho = np.outer(PHI_MINUS, PHI_MINUS.conj())
    best, best_s = None, -1.0
    for signs in itertools.product((1, -1), repeat=4):
        s = _s_value(_correlators(rho, signs))
        if s > best_s + 1e-12:
            best, best_s = signs, s
    return best


def chsh_correlators(rho: np.ndarray) -> np.ndarray:
    """E[x, y] for Alice setting x and Bob setting y under the fixed labeling."""
    return _correlators(rho, chsh_labeling())


def chsh_S(rho: np.ndarray) -> float:
    """CHSH parameter with the fixed measurement bases; frame rotations are applied upstream."""
    return float(_s_value(chsh_correlators(rho)))


def werner_state(p: float) -> np.ndarray:
    return p * np.outer(PHI_MINUS, PHI_MINUS.conj()) + (1 - p) * np.eye(4) / 4


def check_density(rho: np.ndarray, tol: float = 1e-10) -> None:
    """Raise ValueError unless rho is a Hermitian, unit-trace, PSD 4x4 matrix."""
    if rho.shape != (4, 4):
        raise ValueError(f"expected a 4x4 density matrix, got shape {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > 1e-12:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > 1e-10:
        raise ValueError("density matrix trace is not 1")
    if np.linalg.eigvalsh(rho).min() < -tol:
        raise ValueError("density matrix has a negative eigenvalue")
