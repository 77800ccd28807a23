"""Mode-coupling tensors C[m, m', p, p'] and their action on states."""
from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..modes import L, R, BasisSpec, SpinOrbitState
from ..numerics import PolarGrid
from .masks import Mask, mode_values

_CHUNK = 16384


class PolAction(enum.Enum):
    IDENTITY = "identity"
    SWAP_WITH_OAM_SHIFT = "swap_with_oam_shift"


@dataclass(frozen=True)
class ModeCoupling:
    """|m, p> -> sum C[m, m', p, p'] |m', p'>, with m stored at index m + m_max.

    For ``SWAP_WITH_OAM_SHIFT`` the tensor is the L-input map (L -> R); the
    R-input map is its mirror image C[-m, -m', p, p'] and outputs L.
    """

    basis: BasisSpec
    C: np.ndarray = field(repr=False)
    pol_action: PolAction = PolAction.IDENTITY

    def __post_init__(self):
        n_m, n_p = self.basis.n_m, self.basis.n_p
        if self.C.shape != (n_m, n_m, n_p, n_p):
            raise ValueError(f"coupling shape {self.C.shape} does not match basis")
        c = np.array(self.C, dtype=complex)
        c.flags.writeable = False
        object.__setattr__(self, "C", c)

    def block(self, m: int, m_prime: int) -> np.ndarray:
        """The (p, p') matrix for a fixed pair of OAM indices."""
        return self.C[self.basis.m_index(m), self.basis.m_index(m_prime)]

    def __call__(self, s: SpinOrbitState) -> SpinOrbitState:
        return apply_coupling(s, self)


def identity_coupling(basis: BasisSpec) -> ModeCoupling:
    c = np.einsum("ab,pq->abpq", np.eye(basis.n_m), np.eye(basis.n_p))
    return ModeCoupling(basis, c)


def apply_coupling(s: SpinOrbitState, c: ModeCoupling) -> SpinOrbitState:
    if s.basis != c.basis:
        raise ValueError(f"basis mismatch: state {s.basis} vs coupling {c.basis}")
    if c.pol_action is PolAction.IDENTITY:
        return SpinOrbitState(s.basis, np.einsum("mnpq,smp->snq", c.C, s.amp))
    out = np.zeros(s.basis.shape, dtype=complex)
    out[R] = np.einsum("mnpq,mp->nq", c.C, s.amp[L])
    out[L] = np.einsum("mnpq,mp->nq", c.C[::-1, ::-1], s.amp[R])
    return SpinOrbitState(s.basis, out)


def compose(first: ModeCoupling, second: ModeCoupling) -> ModeCoupling:
    """Coupling of ``first`` followed by ``second`` (truncated basis)."""
    if first.basis != second.basis:
        raise ValueError("cannot compose couplings on different bases")
    if PolAction.SWAP_WITH_OAM_SHIFT in (first.pol_action, second.pol_action):
        raise ValueError("composition is defined for spatial (polarization-preserving) couplings only")
    return ModeCoupling(first.basis, np.einsum("abpq,bcqr->acpr", first.C, second.C))


def mask_coupling(mask: Mask, basis: BasisSpec, grid: PolarGrid = PolarGrid()) -> ModeCoupling:
    """C[m, m', p, p'] = <LG_{p',m'} | mask | LG_{p,m}> by polar quadrature."""
    rho, phi, wt = mask.quadrature(grid, basis.w0)
    n = basis.n_m * basis.n_p
    flat = np.zeros((n, n), dtype=complex)
    for i in range(0, rho.size, _CHUNK):
        sl = slice(i, i + _CHUNK)
        keep = wt[sl] != 0
        r, ph, w = rho[sl][keep], phi[sl][keep], wt[sl][keep]
        if r.size == 0:
            continue
        out_modes = mode_values(basis, r, ph)
        perturbed = mask.apply(basis, r, ph)
        flat += out_modes.conj().T @ (w[:, None] * perturbed)
    # flat is indexed [(m', p'), (m, p)]
    c = flat.reshape(basis.n_m, basis.n_p, basis.n_m, basis.n_p).transpose(2, 0, 3, 1)
    return ModeCoupling(basis, c)


def check_invariance(c: ModeCoupling, tol: float = 1e-9) -> tuple[bool, float]:
    """Test C[-1,-1,p,p'] == C[+1,+1,p,p'] for all radial indices.

    The deviation is scaled by max(1, largest |C| entry).
    """
    dev = np.max(np.abs(c.block(-1, -1) - c.block(1, 1)))
    max_dev = float(dev / max(1.0, float(np.max(np.abs(c.C)))))
    return max_dev <= tol, max_dev


def column_norms(c: ModeCoupling) -> np.ndarray:
    """Retained norm^2 of each input mode, indexed [m + m_max, p]."""
    return np.sum(np.abs(c.C) ** 2, axis=(1, 3))


def norm_capture(c: ModeCoupling, s: SpinOrbitState) -> float:
    """Fraction of a state's norm that stays inside the truncated basis."""
    return apply_coupling(s, c).norm2 / s.norm2


COUPLING_COLUMNS = ("m", "m_prime", "p", "p_prime", "re", "im")


def coupling_rows(c: ModeCoupling):
    """Rows of the coefficient table, values formatted to 12 significant digits."""
    for (a, b, p, q), v in np.ndenumerate(c.C):
        yield [a - c.basis.m_max, b - c.basis.m_max, p, q, f"{v.real:.12g}", f"{v.imag:.12g}"]


def write_coupling_table(c: ModeCoupling, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(COUPLING_COLUMNS)
    w.writerows(coupling_rows(c))


def write_coupling_csv(c: ModeCoupling, path) -> None:
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            write_coupling_table(c, fh)
    except OSError as exc:
        raise OSError(f"cannot write coupling table to {path}: {exc}") from exc


def read_coupling_csv(path, basis: BasisSpec) -> ModeCoupling:
    c = np.zeros((basis.n_m, basis.n_m, basis.n_p, basis.n_p), dtype=complex)
    with Path(path).open(newline="") as fh:
        for row in csv.DictReader(fh):
            c[basis.m_index(int(row["m"])), basis.m_index(int(row["m_prime"])),
              int(row["p"]), int(row["p_prime"])] = complex(float(row["re"]), float(row["im"]))
    return ModeCoupling(basis, c)
