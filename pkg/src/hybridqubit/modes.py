"""Truncated spin-orbit state space.

Conventions (every other module imports these, nothing redefines them):

* Circular polarization |L> carries spin +1 (``SIGMA[L] = +1``), |R> carries -1.
* OAM index m: |l> is m = +1, |r> is m = -1.
* Logical basis: 0_L = |L, m=-1>, 1_L = |R, m=+1>; both have zero total
  angular momentum, so a frame rotation by theta multiplies every amplitude
  (pol, m, p) by exp(-i (sigma + m) theta) and leaves them untouched.
* Linear polarizations: H = (R + L)/sqrt2, V = i (R - L)/sqrt2, so a linear
  state at angle chi is (e^{i chi} R + e^{-i chi} L)/sqrt2.
* A polarization qubit is (alpha, beta) = amplitudes of (|R>, |L>), the
  order used by the q-plate encoder: alpha -> 0_L, beta -> 1_L.

Amplitudes are stored dense as an array of shape ``(2, 2*m_max + 1, p_max + 1)``
indexed ``[pol, m + m_max, p]`` with ``pol`` in ``(L, R)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

L = 0
R = 1
POLS = (L, R)
SIGMA = {L: +1, R: -1}
POL_NAMES = {L: "L", R: "R"}

SURVIVAL_FLOOR = 1e-12


@dataclass(frozen=True)
class BasisSpec:
    m_max: int = 5
    p_max: int = 8
    w0: float = 1.0
    k: float = 7.9e3

    def __post_init__(self):
        if self.m_max < 1:
            raise ValueError(f"m_max must be >= 1 so that m = +-1 exists, got {self.m_max}")
        if self.p_max < 0:
            raise ValueError(f"p_max must be >= 0, got {self.p_max}")
        if not self.w0 > 0:
            raise ValueError(f"beam waist w0 must be positive, got {self.w0}")
        if not self.k > 0:
            raise ValueError(f"wavenumber k must be positive, got {self.k}")

    @property
    def n_m(self) -> int:
        return 2 * self.m_max + 1

    @property
    def n_p(self) -> int:
        return self.p_max + 1

    @property
    def shape(self) -> tuple[int, int, int]:
        return (2, self.n_m, self.n_p)

    @property
    def dim(self) -> int:
        return 2 * self.n_m * self.n_p

    @property
    def m_values(self) -> np.ndarray:
        return np.arange(-self.m_max, self.m_max + 1)

    def m_index(self, m: int) -> int:
        if abs(m) > self.m_max:
            raise IndexError(f"m = {m} outside truncation |m| <= {self.m_max}")
        return m + self.m_max


def make_basis(m_max: int = 5, p_max: int = 8, w0: float = 1.0, k: float = 7.9e3) -> BasisSpec:
    return BasisSpec(int(m_max), int(p_max), float(w0), float(k))


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class SpinOrbitState:
    """Single-photon amplitudes over (polarization, m, p); possibly subnormalized."""

    basis: BasisSpec
    amp: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.amp.shape != self.basis.shape:
            raise ValueError(f"amplitude shape {self.amp.shape} does not match basis {self.basis.shape}")
        object.__setattr__(self, "amp", _frozen(self.amp))

    @classmethod
    def zeros(cls, basis: BasisSpec) -> "SpinOrbitState":
        return cls(basis, np.zeros(basis.shape, dtype=complex))

    @classmethod
    def from_components(cls, basis: BasisSpec, comps: Mapping[tuple[int, int, int], complex]) -> "SpinOrbitState":
        amp = np.zeros(basis.shape, dtype=complex)
        for (pol, m, p), a in comps.items():
            amp[pol, basis.m_index(m), p] += a
        return cls(basis, amp)

    def amplitude(self, pol: int, m: int, p: int) -> complex:
        if abs(m) > self.basis.m_max or not 0 <= p <= self.basis.p_max:
            return 0j
        return complex(self.amp[pol, self.basis.m_index(m), p])

    @property
    def norm2(self) -> float:
        return float(np.sum(np.abs(self.amp) ** 2))

    def scaled(self, factor: complex) -> "SpinOrbitState":
        return SpinOrbitState(self.basis, self.amp * factor)

    def __add__(self, other: "SpinOrbitState") -> "SpinOrbitState":
        _same_basis(self, other)
        return SpinOrbitState(self.basis, self.amp + other.amp)

    def support(self, tol: float = 0.0) -> set[tuple[int, int, int]]:
        """(pol, m, p) triples carrying amplitude above ``tol``."""
        idx = np.argwhere(np.abs(self.amp) > tol)
        return {(int(a), int(b) - self.basis.m_max, int(c)) for a, b, c in idx}


def basis_state(basis: BasisSpec, pol: int, m: int, p: int) -> SpinOrbitState:
    return SpinOrbitState.from_components(basis, {(pol, m, p): 1.0})


def _same_basis(a: SpinOrbitState, b: SpinOrbitState) -> None:
    if a.basis != b.basis:
        raise ValueError(f"basis mismatch: {a.basis} vs {b.basis}")


def rotate_frame(s: SpinOrbitState, theta: float) -> SpinOrbitState:
    """Rotate the transverse frame by ``theta`` about the propagation axis."""
    sigma = np.array([SIGMA[L], SIGMA[R]])[:, None, None]
    m = s.basis.m_values[None, :, None]
    return SpinOrbitState(s.basis, s.amp * np.exp(-1j * (sigma + m) * theta))


def inner_product(a: SpinOrbitState, b: SpinOrbitState) -> complex:
    _same_basis(a, b)
    return complex(np.vdot(a.amp, b.amp))


@dataclass(frozen=True)
class PolarizationQubit:
    """Polarization qubit alpha|R> + beta|L>, normalized to 1e-12."""

    alpha: complex
    beta: complex

    def __post_init__(self):
        n = abs(self.alpha) ** 2 + abs(self.beta) ** 2
        if abs(n - 1.0) > 1e-12:
            raise ValueError(f"qubit not normalized: |alpha|^2 + |beta|^2 = {n}")
        object.__setattr__(self, "alpha", complex(self.alpha))
        object.__setattr__(self, "beta", complex(self.beta))

    @classmethod
    def normalized(cls, alpha: complex, beta: complex) -> "PolarizationQubit":
        n = math.sqrt(abs(alpha) ** 2 + abs(beta) ** 2)
        if n == 0:
            raise ValueError("cannot normalize the zero vector")
        return cls(alpha / n, beta / n)

    @classmethod
    def linear(cls, chi: float) -> "PolarizationQubit":
        """Linear polarization at angle ``chi`` from H."""
        s = 1 / math.sqrt(2)
        return cls(s * np.exp(1j * chi), s * np.exp(-1j * chi))

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.alpha, self.beta])


QUBIT_R = PolarizationQubit(1, 0)
QUBIT_L = PolarizationQubit(0, 1)
QUBIT_H = PolarizationQubit.linear(0.0)
QUBIT_V = PolarizationQubit.linear(math.pi / 2)


def qubit_fidelity(a: PolarizationQubit, b: PolarizationQubit) -> float:
    return float(min(1.0, abs(np.vdot(a.vector, b.vector)) ** 2))


@dataclass(frozen=True)
class Detection:
    """Outcome of the single-mode-fiber projection.

    ``qubit`` is None when the photon is lost (survival below 1e-12).
    """

    qubit: PolarizationQubit | None
    survival: float
    amplitudes: np.ndarray = field(repr=False, compare=False)

    @property
    def defined(self) -> bool:
        return self.qubit is not None


def fundamental_amplitudes(s: SpinOrbitState) -> np.ndarray:
    """Unnormalized (R, L) amplitudes of the m = 0, p = 0 component."""
    i0 = s.basis.m_index(0)
    return np.array([s.amp[R, i0, 0], s.amp[L, i0, 0]])


def project_fundamental(s: SpinOrbitState) -> Detection:
    """Single-mode fiber: keep only m = 0, p = 0 and read out the polarization."""
    v = fundamental_amplitudes(s)
    survival = float(np.sum(np.abs(v) ** 2))
    if survival < SURVIVAL_FLOOR:
        return Detection(None, survival, v)
    v = v / math.sqrt(survival)
    return Detection(PolarizationQubit(v[0], v[1]), survival, v)


# logical labels: name -> (amplitude of 0_L, amplitude of 1_L)
_S2 = 1 / math.sqrt(2)
LOGICAL_STATES: dict[str, tuple[complex, complex]] = {
    "0": (1, 0),
    "1": (0, 1),
    "+": (_S2, _S2),
    "-": (_S2, -_S2),
    "+i": (_S2, 1j * _S2),
    "-i": (_S2, -1j * _S2),
}
BB84_LABELS = ("0", "1", "+", "-")
MUB_LABELS = ("0", "1", "+", "-", "+i", "-i")


def logical_vector(label: str) -> np.ndarray:
    try:
        a, b = LOGICAL_STATES[label]
    except KeyError:
        raise ValueError(f"unknown logical state {label!r}; expected one of {sorted(LOGICAL_STATES)}") from None
    return np.array([a, b], dtype=complex)


def polarization_to_logical_linear(v: np.ndarray) -> np.ndarray:
    """(R, L) amplitudes -> (H, V) amplitudes, the polarization-encoding logical basis."""
    r, l_ = v[..., 0], v[..., 1]
    return np.stack([(r + l_) * _S2, -1j * (r - l_) * _S2], axis=-1)


def logical_linear_to_polarization(v: np.ndarray) -> np.ndarray:
    """(H, V) amplitudes -> (R, L) amplitudes."""
    h, vv = v[..., 0], v[..., 1]
    return np.stack([(h + 1j * vv) * _S2, (h - 1j * vv) * _S2], axis=-1)
