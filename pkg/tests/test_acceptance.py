"""Acceptance criteria, one test each, at their stated tolerances and runtime budgets.

Every test prints a single ``criterion N: PASS|FAIL | ...`` line (collected again
in the terminal summary) and then asserts the verdict.
"""
import math
import time

import mpmath
import numpy as np

from hybridqubit.channel import (
    CircularAperture,
    Displacement,
    DisplacementTilt,
    EllipticalScaling,
    KnifeEdge,
    Tilt,
    check_invariance,
    combined_coeff_from_alpha,
    compose,
    decode,
    displacement_coeff_analytic,
    encode,
    free_propagate,
    mask_coupling,
    predicted_mub_fidelity,
    projected_amplitudes,
    qplate_radial_coeffs,
    random_phase_screen,
    tilt_coeff_from_alpha,
    tilt_phase,
)
from hybridqubit.modes import PolarizationQubit, qubit_fidelity
from hybridqubit.numerics import (
    PolarGrid,
    assoc_laguerre,
    bessel_i_scaled_orders,
    bessel_j_orders,
    lg_mode,
    overlap,
)
from hybridqubit.protocols import (
    PHI_MINUS,
    apply_local,
    bb84_run,
    bell_state_logical,
    chsh_S,
    concurrence,
    key_fraction,
    mub_average_fidelity,
    tomography_probs,
    tomography_reconstruct,
    werner_state,
)
from hybridqubit.scenarios import load_preset, run_scenario
from oracles import oracle_chsh_polarization, shifted_lg

THETAS = np.radians(np.arange(0, 360, 15))
TSIRELSON = 2 * math.sqrt(2)


class Checks:
    """Collects named sub-checks and renders a one-line verdict."""

    def __init__(self):
        self.t0 = time.perf_counter()
        self.failed = []
        self.notes = []

    def check(self, ok, label):
        if not ok:
            self.failed.append(label)
        return ok

    def note(self, text):
        self.notes.append(text)

    def finish(self, record, number, budget):
        elapsed = time.perf_counter() - self.t0
        self.check(elapsed < budget, f"runtime {elapsed:.1f}s >= {budget}s")
        parts = [f"{elapsed:.1f}s"] + self.notes
        if self.failed:
            parts.append("failed: " + "; ".join(self.failed))
        passed = not self.failed
        record(number, passed, ", ".join(parts))
        return passed


def test_criterion_1_rotation_invariance(record_criterion):
    ck = Checks()
    worst = max(abs(bb84_run([], t, "hybrid").avg_fidelity - 1) for t in THETAS)
    rng = np.random.default_rng(1)
    mixed = bb84_run([], rng.uniform(0, 2 * np.pi, 64), "hybrid").avg_fidelity
    ck.check(worst <= 1e-9, f"hybrid max dev {worst:.1e}")
    ck.check(abs(mixed - 1) <= 1e-9, f"hybrid random-theta {mixed:.12f}")
    dev = max(abs(bb84_run([], t, "polarization").avg_fidelity - math.cos(t) ** 2) for t in THETAS)
    ck.check(dev <= 1e-9, f"polarization cos^2 dev {dev:.1e}")
    f19 = bb84_run([], math.radians(19), "polarization").avg_fidelity
    f20 = bb84_run([], math.radians(20), "polarization").avg_fidelity
    ck.check(f19 >= 0.89 > f20, f"threshold crossing F(19)={f19:.4f} F(20)={f20:.4f}")
    ck.note(f"hybrid dev {worst:.1e}, F_pol(19)={f19:.4f}, F_pol(20)={f20:.4f}")
    assert ck.finish(record_criterion, 1, 5.0)


def test_criterion_2_key_fraction(record_criterion):
    ck = Checks()
    r = key_fraction(0.0065, 0.041)
    ck.check(0.69 <= r <= 0.71, f"r = {r:.4f}")
    ck.note(f"r = {r:.4f}")
    assert ck.finish(record_criterion, 2, 1.0)


def test_criterion_3_chsh(record_criterion):
    ck = Checks()
    tp = bell_state_logical()
    dev = max(abs(chsh_S(apply_local(tp, theta_a=t)[0]) - TSIRELSON) for t in THETAS)
    ck.check(dev <= 1e-6, f"hybrid S dev {dev:.1e}")
    rng = np.random.default_rng(2)
    rho_mix, _ = apply_local(tp, theta_a=rng.uniform(0, 2 * np.pi, 48), theta_b=rng.uniform(0, 2 * np.pi, 48))
    s_mix = chsh_S(rho_mix)
    ck.check(abs(s_mix - TSIRELSON) <= 1e-6, f"mixture S {s_mix:.9f}")
    pol = bell_state_logical(encoding="polarization")
    pdev = 0.0
    for t in THETAS:
        s = chsh_S(apply_local(pol, theta_a=t)[0])
        pdev = max(pdev, abs(s - oracle_chsh_polarization(t)), abs(s - TSIRELSON * abs(math.cos(2 * t))))
    ck.check(pdev <= 1e-6, f"polarization law dev {pdev:.1e}")
    ck.note(f"hybrid dev {dev:.1e}, mixture S={s_mix:.9f}, polarization dev {pdev:.1e}")
    assert ck.finish(record_criterion, 3, 5.0)


def _tilted(alpha, eta, field):
    phase = tilt_phase(alpha, eta)
    return lambda r, f: phase(r, f) * field(r, f)


def test_criterion_4_analytic_coefficients(record_criterion):
    ck = Checks()
    grid = PolarGrid(n_radial=160, n_azimuthal=128)
    worst = zero_err = 0.0
    zeros = 0
    for delta in (0.1, 0.25, 0.5, 1.0):
        for alpha in (0.5, 1.0, 2.0):
            for m in (1, -1):
                ref = lg_mode(0, m)
                cases = [
                    (displacement_coeff_analytic(delta, m, 1.0), shifted_lg(0, m, delta, 0.7)),
                    (tilt_coeff_from_alpha(alpha, 1.0), _tilted(alpha, 0.7, lg_mode(0, m))),
                ]
                for theta_d, eta in ((0.7, 0.7), (0.3, 1.1), (1.9, 0.3)):
                    cases.append((combined_coeff_from_alpha(delta, theta_d, alpha, eta, m, 1.0),
                                  _tilted(alpha, eta, shifted_lg(0, m, delta, theta_d))))
                for value, field in cases:
                    oracle = overlap(ref, field, grid)
                    if abs(oracle) < 1e-12:
                        # exact zero (parallel delta = 1, alpha w0 = 2): relative error is undefined
                        zeros += 1
                        zero_err = max(zero_err, abs(value - oracle))
                    else:
                        worst = max(worst, abs(value - oracle) / abs(oracle))
    ck.check(worst <= 1e-5, f"max relative error {worst:.1e}")
    ck.check(zero_err <= 1e-12, f"absolute error at exact zeros {zero_err:.1e}")

    sign_dev = 0.0
    for delta in (0.1, 0.5, 1.0):
        sign_dev = max(sign_dev, abs(displacement_coeff_analytic(delta, 1, 1.0) - displacement_coeff_analytic(delta, -1, 1.0)))
        for theta_d, eta in ((0.4, 0.4), (0.4, 0.4 + math.pi), (2.2, 2.2 - math.pi)):
            a = combined_coeff_from_alpha(delta, theta_d, 1.5, eta, 1, 1.0)
            b = combined_coeff_from_alpha(delta, theta_d, 1.5, eta, -1, 1.0)
            sign_dev = max(sign_dev, abs(a - b))
    ck.check(sign_dev <= 1e-12, f"sign dependence {sign_dev:.1e} in symmetric cases")
    crossed = abs(combined_coeff_from_alpha(0.5, math.pi / 2, 1.0, 0.0, 1, 1.0)
                  - combined_coeff_from_alpha(0.5, math.pi / 2, 1.0, 0.0, -1, 1.0))
    ck.check(crossed > 1e-3, f"crossed difference {crossed:.1e}")
    ck.note(f"max rel err {worst:.1e}, {zeros} exact zeros within {zero_err:.1e}, symmetric sign dev {sign_dev:.1e}, crossed |C+ - C-| = {crossed:.3e}")
    assert ck.finish(record_criterion, 4, 60.0)


def _symmetric_masks(rng, n):
    out = []
    kinds = ("aperture", "knife", "elliptical", "parallel", "antiparallel", "tilt", "displacement")
    for i in range(n):
        kind = kinds[i % len(kinds)]
        ang = rng.uniform(0, 2 * np.pi)
        if kind == "aperture":
            r = rng.uniform(0, 0.5)
            out.append(CircularAperture(rng.uniform(0.2, 2.0), (r * math.cos(ang), r * math.sin(ang))))
        elif kind == "knife":
            out.append(KnifeEdge(rng.uniform(-1.0, 1.0), ang))
        elif kind == "elliptical":
            out.append(EllipticalScaling(rng.uniform(0.6, 1.6), ang))
        elif kind == "parallel":
            out.append(DisplacementTilt(rng.uniform(0.1, 1.0), ang, rng.uniform(0.5, 2.5), ang))
        elif kind == "antiparallel":
            out.append(DisplacementTilt(rng.uniform(0.1, 1.0), ang, rng.uniform(0.5, 2.5), ang + math.pi))
        elif kind == "tilt":
            out.append(Tilt(rng.uniform(0.5, 2.5), ang))
        else:
            out.append(Displacement(rng.uniform(0.1, 1.0), ang))
    return out


def _projected_verdict(c):
    a_minus, a_plus = projected_amplitudes(c)
    return abs(a_minus - a_plus) <= 1e-9 * max(abs(a_minus), abs(a_plus)), predicted_mub_fidelity(a_minus, a_plus)


def test_criterion_5_invariance_theorem(record_criterion, basis):
    ck = Checks()
    rng = np.random.default_rng(5)

    symmetric = [mask_coupling(mk, basis) for mk in _symmetric_masks(rng, 49)]
    symmetric.append(mask_coupling(random_phase_screen(int(rng.integers(1000)), 0.5), basis))
    sym_fail = 0
    sym_min = 1.0
    for c in symmetric:
        holds, _ = check_invariance(c)
        proj_ok, predicted = _projected_verdict(c)
        f = mub_average_fidelity([c], 0.0, "hybrid", basis)
        sym_min = min(sym_min, f)
        if not (holds and proj_ok and f >= 1 - 1e-8 and abs(predicted - f) <= 1e-9):
            sym_fail += 1
    ck.check(sym_fail == 0, f"{sym_fail} symmetric masks misclassified")

    asymmetric = []
    for _ in range(10):
        ang = rng.uniform(0, 2 * np.pi)
        offset = rng.uniform(math.pi / 4, 3 * math.pi / 4) * rng.choice([-1, 1])
        mk = DisplacementTilt(rng.uniform(0.5, 1.0), ang + offset, rng.uniform(1.5, 2.5), ang)
        asymmetric.append(mask_coupling(mk, basis))
    disp = mask_coupling(Displacement(0.8, math.pi / 2), basis)
    tilt = mask_coupling(Tilt(2.0, 0.0), basis)
    asymmetric.append(compose(disp, tilt))
    asymmetric.append(compose(compose(disp, tilt), mask_coupling(CircularAperture(1.5, (0.1, 0.0)), basis)))
    asym_fail = 0
    asym_max = 0.0
    for c in asymmetric:
        holds, _ = check_invariance(c)
        proj_ok, predicted = _projected_verdict(c)
        f = mub_average_fidelity([c], 0.0, "hybrid", basis)
        asym_max = max(asym_max, f)
        if holds or proj_ok or not f < 1 - 1e-4 or abs(predicted - f) > 1e-9:
            asym_fail += 1
    ck.check(asym_fail == 0, f"{asym_fail} asymmetric masks misclassified")
    ck.note(f"{len(symmetric)} invariant masks min F={sym_min:.12f}, "
            f"{len(asymmetric)} asymmetric max F={asym_max:.6f}")
    assert ck.finish(record_criterion, 5, 120.0)


def _strictly_decreasing(values):
    return bool(np.all(np.diff(values) < 0))


def _column(rows, name):
    return np.array([r[name] for r in rows], dtype=float)


def test_criterion_6_aperture_and_knife(record_criterion):
    ck = Checks()
    runs = {name: run_scenario(load_preset(name)) for name in (
        "si-fig6a-hybrid-centered", "si-fig6a-hybrid-offcenter", "si-fig6a-hybrid-rotated",
        "si-fig6c-knife-hybrid", "si-fig6a-oam-centered", "si-fig6a-oam-offcenter", "si-fig6c-knife-oam")}
    hybrid_min = min(_column(runs[n], "fidelity").min() for n in runs if "hybrid" in n)
    ck.check(hybrid_min >= 0.999, f"hybrid min F {hybrid_min:.6f}")
    centered = _column(runs["si-fig6a-oam-centered"], "fidelity")
    ck.check(np.max(np.abs(centered - 1)) <= 1e-9, "OAM centered pinhole not 1")
    off = _column(runs["si-fig6a-oam-offcenter"], "fidelity")
    ck.check(_strictly_decreasing(off), f"OAM off-center not strictly decreasing ({int(np.sum(np.diff(off) >= 0))} rises)")
    knife = _column(runs["si-fig6c-knife-oam"], "fidelity")
    ck.check(_strictly_decreasing(knife), f"OAM knife not strictly decreasing ({int(np.sum(np.diff(knife) >= 0))} rises)")
    bad_survival = [n for n, rows in runs.items() if not _strictly_decreasing(_column(rows, "survival"))]
    ck.check(not bad_survival, f"survival not decreasing in {bad_survival}")
    ck.note(f"hybrid min F={hybrid_min:.6f}, OAM off-center F {off[0]:.6f}->{off[-1]:.6f}, "
            f"OAM knife F at 50% = {knife[9]:.12f}, end {knife[-1]:.4f}")
    assert ck.finish(record_criterion, 6, 120.0)


def test_criterion_7_round_trip(record_criterion, basis):
    ck = Checks()
    rng = np.random.default_rng(7)
    qubits = [PolarizationQubit.normalized(*(rng.normal(size=2) + 1j * rng.normal(size=2))) for _ in range(20)]
    plain = [decode(encode(q, basis)) for q in qubits]
    f_min = min(qubit_fidelity(d.qubit, q) for d, q in zip(plain, qubits))
    s_min = min(d.survival for d in plain)
    ck.check(f_min >= 1 - 1e-9, f"fidelity {f_min:.12f}")
    ck.check(s_min >= 0.999, f"survival {s_min:.4f} < 0.999")
    prop = [decode(free_propagate(encode(q, basis), math.pi / 2)) for q in qubits]
    fp_min = min(qubit_fidelity(d.qubit, q) for d, q in zip(prop, qubits))
    sp_max = max(d.survival for d in prop)
    ck.check(fp_min >= 1 - 1e-9, f"propagated fidelity {fp_min:.12f}")
    ck.check(sp_max < 1, "propagated survival not below 1")
    extra = 1 - sp_max / s_min
    ck.note(f"survival {s_min:.4f}, with zeta=pi/2 {sp_max:.4f} (extra radial loss {extra:.1%})")
    assert ck.finish(record_criterion, 7, 5.0)


def _laguerre_oracle(p, a, x):
    terms = [mpmath.binomial(p + a, p - j) * (-x) ** j / mpmath.factorial(j) for j in range(p + 1)]
    return float(sum(terms)), float(sum(abs(t) for t in terms))


def _j_oracle(n, x):
    h = mpmath.mpf(x) / 2
    total, k = mpmath.mpf(0), 0
    while True:
        term = (-1) ** k * h ** (2 * k + n) / (mpmath.factorial(k) * mpmath.factorial(k + n))
        total += term
        if k > h and abs(term) < mpmath.mpf(10) ** -40:
            return float(total)
        k += 1


def _i_scaled_oracle(n, x):
    h = mpmath.mpf(x) / 2
    total, k = mpmath.mpf(0), 0
    while True:
        term = h ** (2 * k + n) / (mpmath.factorial(k) * mpmath.factorial(k + n))
        total += term
        if k > h and term < total * mpmath.mpf(10) ** -30:
            return float(total * mpmath.exp(-x))
        k += 1


def test_criterion_8_special_functions_and_grid(record_criterion, basis):
    ck = Checks()
    rng = np.random.default_rng(8)
    n_pts = 1000
    with mpmath.workdps(80):
        lag = 0.0
        for _ in range(n_pts):
            p, a, x = int(rng.integers(0, 21)), float(rng.uniform(0, 10)), float(rng.uniform(0, 128))
            ref, scale = _laguerre_oracle(p, mpmath.mpf(a), mpmath.mpf(x))
            lag = max(lag, abs(assoc_laguerre(p, a, x) - ref) / max(scale, 1.0))
        jerr = ierr = 0.0
        for _ in range(n_pts):
            n, x = int(rng.integers(0, 31)), float(rng.uniform(0, 60))
            jerr = max(jerr, abs(bessel_j_orders(n, x)[n] - _j_oracle(n, x)))
            ref = _i_scaled_oracle(n, x)
            ierr = max(ierr, abs(bessel_i_scaled_orders(n, x)[n] - ref) / ref)
    ck.check(lag <= 1e-12, f"Laguerre scaled error {lag:.1e}")
    ck.check(jerr <= 1e-10, f"J error {jerr:.1e}")
    ck.check(ierr <= 1e-10, f"I relative error {ierr:.1e}")

    fine = PolarGrid().scaled(2)
    q_dev = float(np.max(np.abs(qplate_radial_coeffs(basis).Q - qplate_radial_coeffs(basis, fine).Q)))
    masks = [CircularAperture(0.6), CircularAperture(0.5, (0.05, 0.1)), KnifeEdge(0.3, 0.4), KnifeEdge(0.0, 1.0),
             Displacement(0.7, 0.3), Tilt(2.0, 1.1), DisplacementTilt(0.5, math.pi / 2, 1.0, 0.0),
             EllipticalScaling(1.4, 0.5), random_phase_screen(3, 0.5)]
    m_dev = max(float(np.max(np.abs(mask_coupling(mk, basis).C - mask_coupling(mk, basis, fine).C))) for mk in masks)
    ck.check(q_dev <= 1e-8, f"q-plate refinement {q_dev:.1e}")
    ck.check(m_dev <= 1e-8, f"mask refinement {m_dev:.1e}")
    ck.note(f"Laguerre {lag:.1e}, J {jerr:.1e}, I {ierr:.1e}, grid: Q {q_dev:.1e}, masks {m_dev:.1e}")
    assert ck.finish(record_criterion, 8, 60.0)


def test_criterion_9_tomography_and_concurrence(record_criterion):
    ck = Checks()
    rng = np.random.default_rng(9)
    rt = 0.0
    for _ in range(100):
        g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        rho = g @ g.conj().T
        rho /= np.trace(rho).real
        rt = max(rt, float(np.max(np.abs(tomography_reconstruct(tomography_probs(rho), repair=False) - rho))))
    ck.check(rt <= 1e-10, f"round trip {rt:.1e}")
    c_phi = concurrence(np.outer(PHI_MINUS, PHI_MINUS.conj()))
    ck.check(abs(c_phi - 1) <= 1e-9, f"C(phi-) {c_phi}")
    c_w = concurrence(werner_state(0.9))
    ck.check(abs(c_w - 0.85) <= 1e-9, f"C(Werner 0.9) {c_w}")
    tp = bell_state_logical()
    r0 = tomography_reconstruct(tomography_probs(apply_local(tp, theta_a=0.0)[0]))
    r45 = tomography_reconstruct(tomography_probs(apply_local(tp, theta_a=math.pi / 4)[0]))
    d45 = float(np.max(np.abs(r45 - r0)))
    ck.check(d45 <= 1e-9, f"theta_A=45 vs 0 {d45:.1e}")
    ck.note(f"round trip {rt:.1e}, C(phi-)={c_phi:.12f}, C(W0.9)={c_w:.12f}, 45 vs 0 {d45:.1e}")
    assert ck.finish(record_criterion, 9, 5.0)
