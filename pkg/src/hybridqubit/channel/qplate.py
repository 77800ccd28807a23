"""Tuned q = 1/2 plate: universal encoder/decoder between polarization and hybrid qubits.

The plate is modeled as an ideal thin element that swaps circular
polarization and multiplies the field by exp(+i phi) for L input and
exp(-i phi) for R input. Its radial coefficients are the overlaps

    Q[|m|, |m'|, p, p'] = 2 pi * integral R_{p',|m'|}(rho) R_{p,|m|}(rho) rho drho,

which depend only on |m| and |m'|. They are real; the LG sign convention
(L_p^a(0) > 0) makes the dominant p' = 0 coefficient positive.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np

from ..modes import L, R, BasisSpec, Detection, PolarizationQubit, SpinOrbitState, project_fundamental
from ..numerics import PolarGrid, legendre_nodes, lg_radial_all
from .coupling import ModeCoupling, PolAction, apply_coupling


@dataclass(frozen=True)
class QPlateSpec:
    basis: BasisSpec
    Q: np.ndarray = field(repr=False, compare=False)
    q: float = 0.5
    delta: float = math.pi

    def coeff(self, a: int, b: int) -> np.ndarray:
        """(p, p') matrix Q for |m| = a -> |m'| = b."""
        return self.Q[a, b]

    @cached_property
    def coupling(self) -> ModeCoupling:
        basis = self.basis
        c = np.zeros((basis.n_m, basis.n_m, basis.n_p, basis.n_p))
        for m in range(-basis.m_max, basis.m_max):
            c[basis.m_index(m), basis.m_index(m + 1)] = self.Q[abs(m), abs(m + 1)]
        return ModeCoupling(basis, c, PolAction.SWAP_WITH_OAM_SHIFT)


@lru_cache(maxsize=16)
def qplate_radial_coeffs(basis: BasisSpec, grid: PolarGrid = PolarGrid()) -> QPlateSpec:
    x, w = legendre_nodes(grid.n_radial)
    r_cut = grid.r_max * basis.w0
    rho = 0.5 * r_cut * (x + 1.0)
    wr = 0.5 * r_cut * w * rho * 2.0 * np.pi
    radial = [lg_radial_all(basis.p_max, a, rho, basis.w0) for a in range(basis.m_max + 1)]
    n_a = basis.m_max + 1
    Q = np.zeros((n_a, n_a, basis.n_p, basis.n_p))
    for a in range(n_a):
        for b in (a - 1, a + 1):
            if 0 <= b < n_a:
                Q[a, b] = (radial[a] * wr) @ radial[b].T
    Q.flags.writeable = False
    return QPlateSpec(basis, Q)


def qplate_apply(s: SpinOrbitState, qp: QPlateSpec | None = None) -> SpinOrbitState:
    """|L,m,p> -> sum Q |R,m+1,p'>,  |R,m,p> -> sum Q |L,m-1,p'>.

    Components pushed past |m| = m_max are dropped; the norm deficit is the
    truncation loss.
    """
    qp = qp or qplate_radial_coeffs(s.basis)
    return apply_coupling(s, qp.coupling)


def encode(q: PolarizationQubit, basis: BasisSpec, qp: QPlateSpec | None = None) -> SpinOrbitState:
    """Map alpha|R> + beta|L> in TEM00 to alpha|0_L> + beta|1_L>."""
    s = SpinOrbitState.from_components(basis, {(R, 0, 0): q.alpha, (L, 0, 0): q.beta})
    return qplate_apply(s, qp)


def decode(s: SpinOrbitState, qp: QPlateSpec | None = None) -> Detection:
    """Second q-plate followed by single-mode-fiber projection."""
    return project_fundamental(qplate_apply(s, qp))


def projected_amplitudes(c: ModeCoupling, qp: QPlateSpec | None = None) -> tuple[complex, complex]:
    """Encoder -> spatial coupling -> decoder amplitudes (A_minus, A_plus) on the fundamental mode.

    A_minus = sum Q[0,1;0,p] C[-1,-1;p,p'] Q[1,0;p',0] carries |0_L>, A_plus the
    same with C[+1,+1] carries |1_L>. A polarization-preserving coupling
    cannot mix the two, so the decoded qubit is (alpha A_minus, beta A_plus)
    and the transmission fidelity is 1 for every input iff A_minus == A_plus.
    """
    if c.pol_action is not PolAction.IDENTITY:
        raise ValueError("projected amplitudes are defined for spatial couplings only")
    qp = qp or qplate_radial_coeffs(c.basis)
    enc = qp.coeff(0, 1)[0]
    dec = qp.coeff(1, 0)[:, 0]
    return complex(enc @ c.block(-1, -1) @ dec), complex(enc @ c.block(1, 1) @ dec)


def predicted_mub_fidelity(a_minus: complex, a_plus: complex) -> float:
    """Six-state average fidelity of the decoded qubit (alpha A_minus, beta A_plus)."""
    den = abs(a_minus) ** 2 + abs(a_plus) ** 2
    if den < 1e-24:
        raise ValueError("no amplitude reaches the detector")
    f_eq = abs(a_minus + a_plus) ** 2 / (2 * den)
    return (1 + 2 * f_eq) / 3
