"""Single-photon preparation, transmission and detection for the three encodings.

Each encoding maps a logical qubit (amplitudes on |0>, |1>) to a transverse
state and reads a detected photon back as a subnormalized 2x2 density matrix
in the same logical basis. Its trace is the survival probability.

  hybrid        q-plate encoder, q-plate decoder + fundamental-mode filter
  polarization  TEM00 photon with logical basis |H>, |V>
  oam           q-plate encoder followed by a horizontal polarizer; read out
                on the (m = -1, m = +1, p = 0) subspace with polarization traced
"""
from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np

from ..channel.coupling import ModeCoupling
from ..channel.ops import erase_polarization, run_channel
from ..channel.qplate import QPlateSpec, encode, qplate_apply, qplate_radial_coeffs
from ..modes import (
    L,
    R,
    SURVIVAL_FLOOR,
    BasisSpec,
    PolarizationQubit,
    SpinOrbitState,
    fundamental_amplitudes,
    logical_linear_to_polarization,
    make_basis,
    polarization_to_logical_linear,
    rotate_frame,
)

ENCODINGS = ("hybrid", "polarization", "oam")
Channel = Sequence[Callable[[SpinOrbitState], SpinOrbitState]]


class TotalLossError(RuntimeError):
    """No photon reaches the detector, so the detected qubit is undefined."""


def check_encoding(encoding: str) -> None:
    if encoding not in ENCODINGS:
        raise ValueError(f"unknown encoding {encoding!r}; expected one of {ENCODINGS}")


def infer_basis(channel: Iterable, basis: BasisSpec | None = None) -> BasisSpec:
    """Explicit basis, else the basis of the first coupling in the channel, else the default."""
    if basis is not None:
        return basis
    for stage in channel:
        if isinstance(stage, ModeCoupling):
            return stage.basis
    return make_basis()


def thetas_of(theta) -> np.ndarray:
    t = np.atleast_1d(np.asarray(theta, dtype=float))
    if t.ndim != 1 or t.size == 0:
        raise ValueError("theta must be an angle or a nonempty 1D sequence of angles")
    return t


def prepare(logical: np.ndarray, encoding: str, basis: BasisSpec, qp: QPlateSpec | None = None) -> SpinOrbitState:
    check_encoding(encoding)
    a, b = np.asarray(logical, dtype=complex)
    if encoding == "polarization":
        r, l_ = logical_linear_to_polarization(np.array([a, b]))
        return SpinOrbitState.from_components(basis, {(R, 0, 0): r, (L, 0, 0): l_})
    s = encode(PolarizationQubit(a, b), basis, qp)
    if encoding == "oam":
        s = erase_polarization(s, 0.0)
    return s


def detect_amplitudes(s: SpinOrbitState, encoding: str, qp: QPlateSpec | None = None) -> np.ndarray:
    """Detected amplitudes as a (2, r) matrix: logical index x residual index.

    r = 1 for hybrid and polarization; for oam the residual index is the
    (traced-out) polarization.
    """
    check_encoding(encoding)
    if encoding == "hybrid":
        return fundamental_amplitudes(qplate_apply(s, qp))[:, None]
    if encoding == "polarization":
        return polarization_to_logical_linear(fundamental_amplitudes(s))[:, None]
    b = s.basis
    return s.amp[:, [b.m_index(-1), b.m_index(1)], 0].T


def transmit(logical, channel: Channel, theta: float, encoding: str, basis: BasisSpec,
             qp: QPlateSpec | None = None) -> np.ndarray:
    """Prepare, send through ``channel``, rotate the receiver frame by ``theta``, detect."""
    s = prepare(logical, encoding, basis, qp)
    s = rotate_frame(run_channel(s, channel), theta)
    return detect_amplitudes(s, encoding, qp)


def detected_density(logical, channel: Channel, theta, encoding: str, basis: BasisSpec | None = None,
                     qp: QPlateSpec | None = None) -> np.ndarray:
    """Subnormalized detected 2x2 density, averaged uniformly over the angles in ``theta``.

    Averaging the subnormalized matrices mixes raw detection events, as
    pooling counts from several angles would.
    """
    basis = infer_basis(channel, basis)
    if encoding != "polarization":
        qp = qp or qplate_radial_coeffs(basis)
    rho = np.zeros((2, 2), dtype=complex)
    ts = thetas_of(theta)
    for t in ts:
        m = transmit(logical, channel, t, encoding, basis, qp)
        rho += m @ m.conj().T
    return rho / ts.size


def conditional_fidelity(rho: np.ndarray, logical) -> tuple[float, float]:
    """(fidelity, survival) of a subnormalized detected density against a pure target."""
    v = np.asarray(logical, dtype=complex)
    survival = float(np.trace(rho).real)
    if survival < SURVIVAL_FLOOR:
        raise TotalLossError(f"detected survival {survival:.3e} is below {SURVIVAL_FLOOR}")
    return float((v.conj() @ rho @ v).real / survival), survival
