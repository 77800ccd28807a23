"""Special functions, Gauss-Legendre quadrature and the polar overlap engine.

Everything here works on the waist plane of a paraxial beam. Lengths are in
the same units as the beam waist ``w0``; the polar grid's radial cutoff is
expressed in units of ``w0``.

The Bessel and Laguerre routines are written out in full (recurrences plus
ascending series) so the analytic coefficient formulas have no hidden
dependency; tests compare them against extended-precision series.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

ScalarField = Callable[[np.ndarray, np.ndarray], np.ndarray]

J_X_MAX = 200.0
I_X_MAX = 100.0

_RESCALE_AT = 1e200


class ConvergenceError(RuntimeError):
    """Raised when an adaptive quadrature fails to settle within its node cap."""

    def __init__(self, message: str, estimates: tuple[complex, complex]):
        super().__init__(f"{message} (last two estimates: {estimates[0]!r}, {estimates[1]!r})")
        self.estimates = estimates


# --------------------------------------------------------------------------
# Laguerre polynomials
# --------------------------------------------------------------------------

def assoc_laguerre(p: int, a: float, x):
    """Generalized Laguerre polynomial L_p^a(x) by upward three-term recurrence."""
    if p < 0:
        raise ValueError(f"Laguerre degree must be >= 0, got {p}")
    return laguerre_all(p, a, x)[p]


def laguerre_all(p_max: int, a: float, x) -> np.ndarray:
    """All L_k^a(x) for k = 0..p_max, stacked along the first axis."""
    x = np.asarray(x, dtype=float)
    out = np.empty((p_max + 1,) + x.shape)
    out[0] = 1.0
    if p_max >= 1:
        out[1] = 1.0 + a - x
    for k in range(1, p_max):
        out[k + 1] = ((2 * k + 1 + a - x) * out[k] - (k + a) * out[k - 1]) / (k + 1)
    return out


# --------------------------------------------------------------------------
# Bessel functions
# --------------------------------------------------------------------------

def _even_start(order: float) -> int:
    m = int(order)
    return m + (m % 2) + 2


def _j_series(n_max: int, x: np.ndarray) -> np.ndarray:
    # ascending series, used only where cancellation is harmless (x < 2)
    out = np.zeros((n_max + 1, x.size))
    half = x / 2.0
    q = -(half * half)
    for n in range(n_max + 1):
        term = half**n / math.factorial(n)
        acc = term.copy()
        for k in range(1, 40):
            term = term * q / (k * (k + n))
            acc += term
            if np.all(np.abs(term) <= 1e-17 * np.maximum(np.abs(acc), 1e-300)):
                break
        out[n] = acc
    return out


def _j_miller(n_max: int, x: np.ndarray) -> np.ndarray:
    top = max(n_max, float(x.max()))
    start = _even_start(top + 30 + 12 * top ** (1 / 3))
    out = np.zeros((n_max + 1, x.size))
    j_next = np.zeros_like(x)
    j_cur = np.full_like(x, 1e-30)
    norm = np.zeros_like(x)
    for k in range(start, 0, -1):
        j_prev = (2.0 * k / x) * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        big = np.abs(j_cur) > _RESCALE_AT
        if big.any():
            s = np.where(big, 1.0 / _RESCALE_AT, 1.0)
            j_cur, j_next, norm = j_cur * s, j_next * s, norm * s
            out *= s
        if k - 1 <= n_max:
            out[k - 1] = j_cur
        if (k - 1) % 2 == 0 and k - 1 > 0:
            norm += 2.0 * j_cur
    norm += j_cur
    return out / norm


def bessel_j_orders(n_max: int, x) -> np.ndarray:
    """J_n(x) for every n = 0..n_max; shape ``(n_max + 1,) + x.shape``.

    Ascending series below x = 2, normalized downward Miller recurrence
    elsewhere. Absolute accuracy is about 1e-13 on [0, 200].
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(x > J_X_MAX):
        raise ValueError(f"bessel_j argument outside supported range [0, {J_X_MAX}]")
    flat = x.ravel()
    out = np.zeros((n_max + 1, flat.size))
    small = flat < 2.0
    if small.any():
        out[:, small] = _j_series(n_max, flat[small])
    if (~small).any():
        out[:, ~small] = _j_miller(n_max, flat[~small])
    return out.reshape((n_max + 1,) + x.shape)


def bessel_j(n: int, x):
    """Bessel function of the first kind J_n(x) for integer n >= 0, 0 <= x <= 200."""
    if n < 0:
        raise ValueError("bessel_j requires n >= 0; use J_{-n} = (-1)^n J_n")
    return bessel_j_orders(n, x)[n]


def _i_series_scaled(n_max: int, x: np.ndarray) -> np.ndarray:
    out = np.zeros((n_max + 1, x.size))
    half = x / 2.0
    q = half * half
    damp = np.exp(-x)
    for n in range(n_max + 1):
        term = half**n / math.factorial(n)
        acc = term.copy()
        for k in range(1, 200):
            term = term * q / (k * (k + n))
            acc += term
            if np.all(term <= 1e-17 * np.maximum(acc, 1e-300)):
                break
        out[n] = acc * damp
    return out


def _i_miller_scaled(n_max: int, x: np.ndarray) -> np.ndarray:
    top = float(x.max())
    start = _even_start(n_max + 40 + 10 * math.sqrt(top))
    out = np.zeros((n_max + 1, x.size))
    i_next = np.zeros_like(x)
    i_cur = np.full_like(x, 1e-30)
    norm = np.zeros_like(x)
    for k in range(start, 0, -1):
        i_prev = (2.0 * k / x) * i_cur + i_next
        i_next, i_cur = i_cur, i_prev
        big = i_cur > _RESCALE_AT
        if big.any():
            s = np.where(big, 1.0 / _RESCALE_AT, 1.0)
            i_cur, i_next, norm = i_cur * s, i_next * s, norm * s
            out *= s
        if k - 1 <= n_max:
            out[k - 1] = i_cur
        if k - 1 > 0:
            norm += 2.0 * i_cur
    norm += i_cur
    # I_0 + 2 sum_k I_k = e^x, so dividing by the sum yields e^{-x} I_n
    return out / norm


def bessel_i_scaled_orders(n_max: int, x) -> np.ndarray:
    """Exponentially scaled e^{-x} I_n(x) for n = 0..n_max, 0 <= x <= 100."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(x > I_X_MAX):
        raise ValueError(f"bessel_i_mod argument outside supported range [0, {I_X_MAX}]")
    flat = x.ravel()
    out = np.zeros((n_max + 1, flat.size))
    small = flat < 10.0
    if small.any():
        out[:, small] = _i_series_scaled(n_max, flat[small])
    if (~small).any():
        out[:, ~small] = _i_miller_scaled(n_max, flat[~small])
    return out.reshape((n_max + 1,) + x.shape)


def bessel_i_mod(n: int, x):
    """Modified Bessel function I_n(x), relative accuracy ~1e-13 on [0, 100]."""
    if n < 0:
        raise ValueError("bessel_i_mod requires n >= 0; I_{-n} = I_n")
    x = np.asarray(x, dtype=float)
    return bessel_i_scaled_orders(n, x)[n] * np.exp(x)


# --------------------------------------------------------------------------
# Quadrature
# --------------------------------------------------------------------------

@lru_cache(maxsize=64)
def legendre_nodes(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [-1, 1] (read-only arrays)."""
    if n < 2:
        raise ValueError("Gauss-Legendre rule needs n >= 2")
    x, w = np.polynomial.legendre.leggauss(n)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def gauss_legendre(f: Callable[[np.ndarray], np.ndarray], lo: float, hi: float, n: int) -> complex:
    """n-point Gauss-Legendre estimate of the integral of ``f`` over [lo, hi].

    ``f`` is called once with the full node array.
    """
    x, w = legendre_nodes(n)
    half = 0.5 * (hi - lo)
    nodes = lo + half * (x + 1.0)
    val = np.sum(w * f(nodes)) * half
    return complex(val) if np.iscomplexobj(val) else float(val)


def integrate_adaptive(f, lo: float, hi: float, tol: float = 1e-10,
                       n_start: int = 16, n_cap: int = 4096):
    """Double the Gauss-Legendre order until two estimates agree to ``tol``.

    Agreement is relative to max(1, |estimate|).
    """
    n = n_start
    prev = gauss_legendre(f, lo, hi, n)
    while n < n_cap:
        n *= 2
        cur = gauss_legendre(f, lo, hi, n)
        if abs(cur - prev) <= tol * max(1.0, abs(cur)):
            return cur
        prev = cur
    raise ConvergenceError(f"Gauss-Legendre did not converge on [{lo}, {hi}] with {n_cap} nodes", (prev, cur))


# --------------------------------------------------------------------------
# Laguerre-Gauss modes
# --------------------------------------------------------------------------

def lg_norm(p: int, m: int, w0: float) -> float:
    a = abs(m)
    return math.sqrt(2.0 * math.factorial(p) / (math.pi * math.factorial(p + a))) / w0


def lg_radial_all(p_max: int, a: int, rho, w0: float) -> np.ndarray:
    """Real radial profiles R_{p,a}(rho) for p = 0..p_max at the waist.

    LG_{p,m}(rho, phi) = R_{p,|m|}(rho) e^{i m phi}, each with unit L2 norm.
    """
    rho = np.asarray(rho, dtype=float)
    u = 2.0 * rho**2 / w0**2
    env = (math.sqrt(2.0) * rho / w0) ** a * np.exp(-rho**2 / w0**2)
    lag = laguerre_all(p_max, a, u)
    norms = np.array([lg_norm(p, a, w0) for p in range(p_max + 1)])
    return norms.reshape((-1,) + (1,) * rho.ndim) * lag * env


def lg_field(p: int, m: int, rho, phi, w0: float):
    """Normalized LG_{p,m} amplitude at the waist plane."""
    if p < 0:
        raise ValueError("radial index p must be >= 0")
    radial = lg_radial_all(p, abs(m), rho, w0)[p]
    return radial * np.exp(1j * m * np.asarray(phi))


def lg_mode(p: int, m: int, w0: float = 1.0) -> ScalarField:
    return lambda rho, phi: lg_field(p, m, rho, phi, w0)


# --------------------------------------------------------------------------
# Polar grid and overlap engine
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class PolarGrid:
    """Gauss-Legendre in rho times equispaced trapezoid in phi."""

    n_radial: int = 200
    n_azimuthal: int = 256
    r_max: float = 8.0

    def __post_init__(self):
        if self.n_radial < 32:
            raise ValueError(f"n_radial must be >= 32, got {self.n_radial}")
        if self.n_azimuthal < 64:
            raise ValueError(f"n_azimuthal must be >= 64, got {self.n_azimuthal}")
        if self.r_max < 4:
            raise ValueError(f"r_max must be >= 4 (units of w0), got {self.r_max}")

    def scaled(self, factor: float) -> "PolarGrid":
        """Grid with node counts multiplied by ``factor`` (convergence studies)."""
        return PolarGrid(max(32, int(round(self.n_radial * factor))),
                         max(64, int(round(self.n_azimuthal * factor))), self.r_max)

    def azimuths(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.n_azimuthal) / self.n_azimuthal

    def points(self, w0: float = 1.0, limits=None):
        """Flattened quadrature nodes ``(rho, phi, weight)`` including the rho Jacobian.

        ``limits`` maps the azimuth array to a list of ``(lo, hi)`` radial
        intervals (arrays of the same length); by default the whole disk
        ``[0, r_max * w0]``. Intervals are clipped to the disk and a separate
        Gauss-Legendre rule is laid over each, so sharp-edged masks whose edge
        is a smooth function of phi still integrate spectrally.
        """
        r_cut = self.r_max * w0
        phi = self.azimuths()
        pieces = None if limits is None else limits(phi)
        if pieces is None:
            pieces = [(np.zeros_like(phi), np.full_like(phi, r_cut))]
        x, w = legendre_nodes(self.n_radial)
        dphi = 2.0 * np.pi / self.n_azimuthal
        rhos, phis, wts = [], [], []
        for lo, hi in pieces:
            lo = np.clip(np.broadcast_to(lo, phi.shape), 0.0, r_cut)
            hi = np.clip(np.broadcast_to(hi, phi.shape), 0.0, r_cut)
            half = np.where(hi > lo, 0.5 * (hi - lo), 0.0)
            rho = lo[:, None] + half[:, None] * (x[None, :] + 1.0)
            rhos.append(rho.ravel())
            phis.append(np.repeat(phi, self.n_radial))
            wts.append((half[:, None] * w[None, :] * rho * dphi).ravel())
        return np.concatenate(rhos), np.concatenate(phis), np.concatenate(wts)


def overlap(a: ScalarField, b: ScalarField, grid: PolarGrid = PolarGrid(), w0: float = 1.0,
            limits=None) -> complex:
    """<a|b> = integral of conj(a) b over the disk (rho drho dphi)."""
    rho, phi, wt = grid.points(w0, limits)
    return complex(np.sum(wt * np.conj(a(rho, phi)) * b(rho, phi)))


def parseval_sum(f: ScalarField, p_max: int, m_max: int, grid: PolarGrid = PolarGrid(),
                 w0: float = 1.0) -> float:
    """Sum of |<LG_{p,m}|f>|^2 over the truncated LG set."""
    total = 0.0
    for m in range(-m_max, m_max + 1):
        for p in range(p_max + 1):
            total += abs(overlap(lg_mode(p, m, w0), f, grid, w0)) ** 2
    return total


def field_norm2(f: ScalarField, grid: PolarGrid = PolarGrid(), w0: float = 1.0) -> float:
    return overlap(f, f, grid, w0).real
