"""Closed-form radial integrals for displaced and tilted LG(p=0, m=+-1) beams.

All coefficients are C[m, m; 0, 0] = <LG_{0,m} | perturbed LG_{0,m}>, with the
prefactor 2 pi A^2 / w0^2 = 8 / w0^4 fixed by the unperturbed value C = 1.
The projection of the displaced field onto LG_{0,m} contributes one power of
rho on top of the polar measure, so the radial weight of the displacement
and combined integrals is rho^2 [rho I_0 - delta I_1] (resp. rho^2 [rho S_0 - delta S_1]).
"""
from __future__ import annotations

import math
import warnings

import numpy as np

from ..numerics import (
    ScalarField,
    bessel_i_scaled_orders,
    bessel_j_orders,
    integrate_adaptive,
)

N_SUM = 40
_TAIL_TOL = 1e-12
_ENVELOPE_REACH = 7.0  # in w0; exp(-2*7^2) is far below double precision


class SumTruncationWarning(RuntimeWarning):
    pass


def _check_m(m: int) -> None:
    if m not in (-1, 1):
        raise ValueError(f"analytic coefficients are derived for m = +-1, got {m}")


def _upper(delta: float, w0: float) -> float:
    return 0.5 * delta + _ENVELOPE_REACH * w0


def displacement_coeff_analytic(delta: float, m: int, w0: float) -> float:
    """C[m,m;0,0] for a beam displaced by ``delta``; the sign of m does not enter."""
    _check_m(m)
    if delta < 0:
        raise ValueError("displacement delta must be >= 0")
    if delta == 0:
        return 1.0

    def integrand(rho):
        x = 2.0 * rho * delta / w0**2
        i_s = bessel_i_scaled_orders(1, x)
        # exp(-(2 rho^2 + delta^2)/w0^2) I_n(x) = exp(-(rho^2 + (rho - delta)^2)/w0^2) e^{-x} I_n(x)
        env = np.exp(-(rho**2 + (rho - delta) ** 2) / w0**2)
        return rho**2 * env * (rho * i_s[0] - delta * i_s[1])

    return float(8.0 / w0**4 * integrate_adaptive(integrand, 0.0, _upper(delta, w0), tol=1e-14))


def _tilt_integral(alpha: float, w0: float) -> float:
    def integrand(rho):
        return rho**3 * np.exp(-2.0 * rho**2 / w0**2) * bessel_j_orders(0, alpha * rho)[0]

    return float(8.0 / w0**4 * integrate_adaptive(integrand, 0.0, _ENVELOPE_REACH * w0, tol=1e-14))


def tilt_coeff_analytic(gamma: float, k: float, w0: float) -> float:
    """C[m,m;0,0] for a tilt by ``gamma``; independent of the tilt azimuth and of sign(m)."""
    if not 0.0 <= gamma < math.pi / 2:
        raise ValueError("tilt angle gamma must lie in [0, pi/2)")
    return _tilt_integral(k * math.sin(gamma), w0)


def tilt_coeff_from_alpha(alpha: float, w0: float) -> float:
    """Same as :func:`tilt_coeff_analytic` parametrized by alpha = k sin(gamma)."""
    return _tilt_integral(alpha, w0)


def _combined_terms(rho, delta, alpha, phase, m, w0, n_sum):
    x = 2.0 * rho * delta / w0**2
    i_s = bessel_i_scaled_orders(n_sum + 1, x)
    j_pos = bessel_j_orders(n_sum, alpha * rho)
    n = np.arange(-n_sum, n_sum + 1)
    sign = np.where(n < 0, (-1.0) ** np.abs(n), 1.0)
    j_all = sign[:, None] * j_pos[np.abs(n)]
    rot = np.exp(1j * n * phase)[:, None]
    s0_terms = i_s[np.abs(n)] * j_all * rot
    s1_terms = i_s[np.minimum(np.abs(n - m), n_sum + 1)] * j_all * rot
    env = np.exp(-(rho**2 + (rho - delta) ** 2) / w0**2)
    return env, s0_terms, s1_terms


def combined_coeff_analytic(delta: float, theta_d: float, gamma: float, eta: float, m: int,
                            k: float, w0: float, n_sum: int = N_SUM) -> complex:
    """C[m,m;0,0] for displacement (delta, theta_d) followed by tilt (gamma, eta).

    The Bessel sums run over |n| <= n_sum; a :class:`SumTruncationWarning` is
    issued if the outermost retained terms still exceed 1e-12.
    """
    _check_m(m)
    if delta < 0:
        raise ValueError("displacement delta must be >= 0")
    if not 0.0 <= gamma < math.pi / 2:
        raise ValueError("tilt angle gamma must lie in [0, pi/2)")
    return combined_coeff_from_alpha(delta, theta_d, k * math.sin(gamma), eta, m, w0, n_sum)


def combined_coeff_from_alpha(delta, theta_d, alpha, eta, m, w0, n_sum=N_SUM) -> complex:
    _check_m(m)
    phase = theta_d - eta + math.pi / 2
    tail = [0.0]

    def integrand(rho):
        env, s0, s1 = _combined_terms(rho, delta, alpha, phase, m, w0, n_sum)
        weight = rho**2 * env
        edge = np.abs(np.concatenate([s0[[0, -1]], s1[[0, -1]]])) * weight * np.maximum(rho, delta)
        tail[0] = max(tail[0], float(edge.max()))
        return weight * (rho * s0.sum(axis=0) - delta * s1.sum(axis=0))

    val = 8.0 / w0**4 * integrate_adaptive(integrand, 0.0, _upper(delta, w0), tol=1e-14)
    if tail[0] * 8.0 / w0**4 > _TAIL_TOL:
        warnings.warn(f"Bessel sum truncated at |n| <= {n_sum} with last term {tail[0]:.2e}",
                      SumTruncationWarning, stacklevel=2)
    return complex(val)


def displaced_lg1_field(delta: float, theta_d: float, m: int, w0: float, n_sum: int = 60) -> ScalarField:
    """LG_{0,m} (m = +-1) translated by (delta, theta_d), written as a modified-Bessel series.

    E = (A/w0) (rho e^{+-i phi} - delta e^{+-i theta}) exp(-(rho^2 + delta^2)/w0^2)
        * sum_n I_n(2 rho delta / w0^2) e^{i n (phi - theta)}
    """
    _check_m(m)
    a_over_w0 = 2.0 / (math.sqrt(math.pi) * w0**2)

    def field(rho, phi):
        rho = np.asarray(rho, dtype=float)
        phi = np.asarray(phi, dtype=float)
        x = 2.0 * rho * delta / w0**2
        i_s = bessel_i_scaled_orders(n_sum, x)
        rel = phi - theta_d
        series = i_s[0] + 2.0 * sum(i_s[n] * np.cos(n * rel) for n in range(1, n_sum + 1))
        env = np.exp(-((rho - delta) ** 2) / w0**2)
        pre = rho * np.exp(1j * m * phi) - delta * np.exp(1j * m * theta_d)
        return a_over_w0 * pre * env * series

    return field


def tilt_phase(alpha: float, eta: float) -> ScalarField:
    return lambda rho, phi: np.exp(1j * alpha * np.asarray(rho) * np.cos(np.asarray(phi) - eta))
