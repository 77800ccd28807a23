"""Spatial perturbations of the transverse field.

Every perturbation answers two questions for the coupling engine:
``quadrature(grid, w0)`` lays the integration nodes over the region where
light survives (by default polar nodes bounded by ``limits(phi, w0)``; None
means the whole disk), and ``apply(basis, rho, phi)`` returns the perturbed
basis modes evaluated at those nodes.

Sharp masks (apertures, knife-edges) are described through their edges
rather than as discontinuous transmissions, which keeps the quadrature
spectrally accurate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..modes import BasisSpec
from ..numerics import PolarGrid, legendre_nodes, lg_radial_all


def mode_values(basis: BasisSpec, rho, phi) -> np.ndarray:
    """All basis LG modes at the given points; shape ``(n_pts, n_m * n_p)``.

    Column ``(m + m_max) * n_p + p`` holds LG_{p,m}.
    """
    rho = np.asarray(rho, dtype=float)
    phi = np.asarray(phi, dtype=float)
    out = np.empty((rho.size, basis.n_m, basis.n_p), dtype=complex)
    radial = {a: lg_radial_all(basis.p_max, a, rho, basis.w0) for a in range(basis.m_max + 1)}
    for i, m in enumerate(basis.m_values):
        out[:, i, :] = (radial[abs(m)] * np.exp(1j * m * phi)).T
    return out.reshape(rho.size, -1)


class Mask:
    """Base class: a multiplicative transmission over the whole disk."""

    def limits(self, phi: np.ndarray, w0: float):
        return None

    def quadrature(self, grid: PolarGrid, w0: float):
        """Nodes ``(rho, phi, weight)`` covering the transmitted region."""
        return grid.points(w0, lambda ph: self.limits(ph, w0))

    def transmission(self, rho, phi):
        return np.ones_like(rho, dtype=complex)

    def apply(self, basis: BasisSpec, rho, phi) -> np.ndarray:
        t = np.asarray(self.transmission(rho, phi))
        if np.any(np.abs(t) > 1 + 1e-12):
            raise ValueError(f"{type(self).__name__}: |t| exceeds 1 (passive masks cannot amplify)")
        return t[:, None] * mode_values(basis, rho, phi)

    @property
    def mirror_symmetric(self) -> bool:
        """Whether the perturbation has a mirror plane through the beam axis."""
        return True


@dataclass(frozen=True)
class CircularAperture(Mask):
    radius: float = math.inf
    center_offset: tuple[float, float] = (0.0, 0.0)

    def limits(self, phi, w0):
        a = self.radius
        cx, cy = self.center_offset
        if math.isinf(a):
            return None
        ux, uy = np.cos(phi), np.sin(phi)
        proj = ux * cx + uy * cy
        disc = proj**2 - (cx * cx + cy * cy) + a * a
        root = np.sqrt(np.clip(disc, 0.0, None))
        if cx * cx + cy * cy < a * a:
            return [(np.zeros_like(phi), proj + root)]
        lo = np.where(disc > 0, proj - root, 0.0)
        hi = np.where(disc > 0, proj + root, 0.0)
        return [(np.clip(lo, 0.0, None), np.clip(hi, 0.0, None))]


@dataclass(frozen=True)
class KnifeEdge(Mask):
    """Half-plane obstruction transmitting x' > edge_position.

    x' is the coordinate along ``orientation`` (radians from the x axis).
    """

    edge_position: float = 0.0
    orientation: float = 0.0

    def limits(self, phi, w0):
        c = np.cos(phi - self.orientation)
        xe = self.edge_position
        big = math.inf
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = xe / c
        if xe >= 0:
            lo = np.where(c > 0, ratio, big)
            return [(lo, np.full_like(phi, big))]
        hi = np.where(c < 0, ratio, big)
        return [(np.zeros_like(phi), hi)]

    def quadrature(self, grid, w0):
        # Gauss-Legendre on the rectangle [edge, R] x [-R, R] in edge-aligned axes.
        # Polar nodes would see the edge as rho = edge / cos(phi), which the
        # azimuthal rule resolves only slowly when the edge is off axis.
        r_cut = grid.r_max * w0
        xe = min(max(self.edge_position, -r_cut), r_cut)
        x, wx = legendre_nodes(grid.n_radial)
        y, wy = legendre_nodes(grid.n_azimuthal)
        half = 0.5 * (r_cut - xe)
        u = xe + half * (x + 1.0)
        v = r_cut * y
        uu, vv = np.meshgrid(u, v, indexing="ij")
        wt = np.outer(half * wx, r_cut * wy).ravel()
        c, s = math.cos(self.orientation), math.sin(self.orientation)
        gx, gy = (uu * c - vv * s).ravel(), (uu * s + vv * c).ravel()
        return np.hypot(gx, gy), np.arctan2(gy, gx), wt

    @staticmethod
    def from_coverage(coverage: float, orientation: float, w0: float) -> "KnifeEdge":
        """Edge placed to block ``coverage`` of a TEM00 beam's power."""
        from statistics import NormalDist

        if not 0.0 < coverage < 1.0:
            raise ValueError(f"coverage must lie in (0, 1), got {coverage}")
        # TEM00 intensity along x is Gaussian with standard deviation w0/2
        return KnifeEdge(0.5 * w0 * NormalDist().inv_cdf(coverage), orientation)


@dataclass(frozen=True)
class PhaseScreen(Mask):
    """Pure phase mask t = exp(i phase(rho, phi))."""

    phase: Callable[[np.ndarray, np.ndarray], np.ndarray]

    def transmission(self, rho, phi):
        return np.exp(1j * np.asarray(self.phase(rho, phi), dtype=float))


def random_phase_screen(seed: int, strength: float = 0.5, n_modes: int = 8, w0: float = 1.0) -> PhaseScreen:
    """Smooth random screen: a sum of ``n_modes`` plane-wave cosines.

    Spatial frequencies are drawn in [0.2, 1.5]/w0 with random direction and
    offset; amplitudes are normal with standard deviation ``strength`` rad.
    """
    rng = np.random.default_rng(seed)
    amps = rng.normal(0.0, strength, n_modes)
    mags = rng.uniform(0.2, 1.5, n_modes) / w0
    dirs = rng.uniform(0.0, 2 * np.pi, n_modes)
    offs = rng.uniform(0.0, 2 * np.pi, n_modes)
    kx, ky = mags * np.cos(dirs), mags * np.sin(dirs)

    def phase(rho, phi):
        x = (rho * np.cos(phi))[..., None]
        y = (rho * np.sin(phi))[..., None]
        return np.sum(amps * np.cos(kx * x + ky * y + offs), axis=-1)

    return PhaseScreen(phase)


@dataclass(frozen=True)
class ArbitraryMultiplicative(Mask):
    """Any pointwise complex transmission with |t| <= 1."""

    t: Callable[[np.ndarray, np.ndarray], np.ndarray]
    symmetric: bool = False

    def transmission(self, rho, phi):
        return np.asarray(self.t(rho, phi), dtype=complex)

    @property
    def mirror_symmetric(self) -> bool:
        return self.symmetric


def _eval_at(basis: BasisSpec, x, y) -> np.ndarray:
    return mode_values(basis, np.hypot(x, y), np.arctan2(y, x))


@dataclass(frozen=True)
class EllipticalScaling(Mask):
    """Area-preserving stretch by sqrt(axis_ratio) along ``orientation``."""

    axis_ratio: float = 1.0
    orientation: float = 0.0

    def __post_init__(self):
        if not self.axis_ratio > 0:
            raise ValueError("axis_ratio must be positive")

    def apply(self, basis, rho, phi):
        c, s = math.cos(self.orientation), math.sin(self.orientation)
        x, y = rho * np.cos(phi), rho * np.sin(phi)
        u = (x * c + y * s) / math.sqrt(self.axis_ratio)
        v = (-x * s + y * c) * math.sqrt(self.axis_ratio)
        return _eval_at(basis, u * c - v * s, u * s + v * c)


@dataclass(frozen=True)
class Displacement(Mask):
    """Parallel beam displacement by ``delta`` towards azimuth ``angle``."""

    delta: float = 0.0
    angle: float = 0.0

    def apply(self, basis, rho, phi):
        x = rho * np.cos(phi) - self.delta * math.cos(self.angle)
        y = rho * np.sin(phi) - self.delta * math.sin(self.angle)
        return _eval_at(basis, x, y)


@dataclass(frozen=True)
class Tilt(Mask):
    """Beam tilt: linear phase exp(i alpha rho cos(phi - eta)), alpha = k sin(gamma)."""

    alpha: float = 0.0
    eta: float = 0.0

    def transmission(self, rho, phi):
        return np.exp(1j * self.alpha * rho * np.cos(phi - self.eta))


@dataclass(frozen=True)
class DisplacementTilt(Mask):
    """Displacement followed by a tilt about the original axis."""

    delta: float = 0.0
    angle: float = 0.0
    alpha: float = 0.0
    eta: float = 0.0

    def apply(self, basis, rho, phi):
        shifted = Displacement(self.delta, self.angle).apply(basis, rho, phi)
        return Tilt(self.alpha, self.eta).transmission(rho, phi)[:, None] * shifted

    @property
    def mirror_symmetric(self) -> bool:
        if self.delta == 0 or self.alpha == 0:
            return True
        return math.isclose(math.sin(self.angle - self.eta), 0.0, abs_tol=1e-12)
