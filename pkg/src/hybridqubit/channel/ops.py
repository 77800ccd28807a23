"""Elementary channel stages and the pure-OAM comparison readout.

A channel is an ordered sequence of callables ``SpinOrbitState -> SpinOrbitState``;
``ModeCoupling`` instances qualify directly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from ..modes import L, R, SURVIVAL_FLOOR, SpinOrbitState, rotate_frame

Stage = Callable[[SpinOrbitState], SpinOrbitState]


def free_propagate(s: SpinOrbitState, zeta: float) -> SpinOrbitState:
    """Gouy phase exp(-i (2p + |m| + 1) zeta) on every LG component."""
    b = s.basis
    order = 2 * np.arange(b.n_p)[None, :] + np.abs(b.m_values)[:, None] + 1
    return SpinOrbitState(b, s.amp * np.exp(-1j * order * zeta)[None])


def erase_polarization(s: SpinOrbitState, polarizer_angle: float) -> SpinOrbitState:
    """Project onto linear polarization at ``polarizer_angle`` (OAM untouched)."""
    e = np.exp(1j * polarizer_angle)
    proj = (s.amp[R] / e + s.amp[L] * e) / math.sqrt(2)
    out = np.empty_like(s.amp)
    out[R] = proj * e / math.sqrt(2)
    out[L] = proj / e / math.sqrt(2)
    return SpinOrbitState(s.basis, out)


def oam_density(s: SpinOrbitState) -> np.ndarray:
    """Unnormalized 2x2 density over (m=-1, p=0), (m=+1, p=0), polarization traced out."""
    b = s.basis
    v = s.amp[:, [b.m_index(-1), b.m_index(1)], 0]
    return v.T @ v.conj()


def oam_decode(s: SpinOrbitState, reference) -> tuple[float | None, float]:
    """Conditional fidelity with an OAM qubit ``reference`` = (amp of m=-1, amp of m=+1).

    Returns ``(None, survival)`` when nothing reaches the p = 0 subspace.
    """
    ref = np.asarray(reference, dtype=complex)
    if abs(np.vdot(ref, ref) - 1) > 1e-12:
        raise ValueError("OAM reference qubit must be normalized")
    rho = oam_density(s)
    survival = float(np.trace(rho).real)
    if survival < SURVIVAL_FLOOR:
        return None, survival
    return float((ref.conj() @ rho @ ref).real / survival), survival


@dataclass(frozen=True)
class Rotation:
    theta: float

    def __call__(self, s):
        return rotate_frame(s, self.theta)


@dataclass(frozen=True)
class Propagation:
    zeta: float

    def __call__(self, s):
        return free_propagate(s, self.zeta)


@dataclass(frozen=True)
class Efficiency:
    """Polarization- and mode-independent transmission (e.g. plate losses)."""

    eta: float

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"efficiency must lie in [0, 1], got {self.eta}")

    def __call__(self, s):
        return s.scaled(math.sqrt(self.eta))


@dataclass(frozen=True)
class Polarizer:
    angle: float = 0.0

    def __call__(self, s):
        return erase_polarization(s, self.angle)


def run_channel(s: SpinOrbitState, stages: Iterable[Stage]) -> SpinOrbitState:
    for stage in stages:
        s = stage(s)
    return s
