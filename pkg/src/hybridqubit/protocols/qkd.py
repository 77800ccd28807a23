"""BB84 figures of merit and MUB-averaged transmission fidelity."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..modes import BB84_LABELS, MUB_LABELS, BasisSpec, logical_vector
from .transfer import Channel, conditional_fidelity, detected_density

SECURITY_THRESHOLD = 0.89


def binary_entropy(x: float) -> float:
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"binary entropy is defined on [0, 1], got {x}")
    if x in (0.0, 1.0):
        return 0.0
    return -x * math.log2(x) - (1 - x) * math.log2(1 - x)


def key_fraction(qber_z: float, qber_x: float) -> float:
    """Asymptotic BB84 secret-key fraction max(0, 1 - h(e_z) - h(e_x))."""
    for name, e in (("qber_z", qber_z), ("qber_x", qber_x)):
        if not 0.0 <= e <= 0.5:
            raise ValueError(f"{name} must lie in [0, 0.5], got {e}")
    return max(0.0, 1.0 - binary_entropy(qber_z) - binary_entropy(qber_x))


@dataclass(frozen=True)
class StateResult:
    fidelity: float
    survival: float


def state_results(channel: Channel, theta, encoding: str, labels=MUB_LABELS,
                  basis: BasisSpec | None = None) -> dict[str, StateResult]:
    out = {}
    for label in labels:
        v = logical_vector(label)
        f, surv = conditional_fidelity(detected_density(v, channel, theta, encoding, basis), v)
        out[label] = StateResult(f, surv)
    return out


@dataclass(frozen=True)
class Bb84Report:
    fidelities: dict[str, float]
    survivals: dict[str, float]
    qber_z: float
    qber_x: float
    avg_fidelity: float
    key_fraction: float
    secure: bool


def bb84_run(channel: Channel, theta, encoding: str = "hybrid", basis: BasisSpec | None = None) -> Bb84Report:
    """Send the four BB84 states; ``theta`` is an angle or a sequence of angles to mix."""
    res = state_results(channel, theta, encoding, BB84_LABELS, basis)
    fid = {k: r.fidelity for k, r in res.items()}
    # clip rounding residue so that a perfect channel reports exactly zero
    qz = min(1.0, max(0.0, 1.0 - 0.5 * (fid["0"] + fid["1"])))
    qx = min(1.0, max(0.0, 1.0 - 0.5 * (fid["+"] + fid["-"])))
    avg = float(np.mean(list(fid.values())))
    # beyond 0.5 the formula's domain ends and no key can be distilled
    r = key_fraction(qz, qx) if max(qz, qx) <= 0.5 else 0.0
    return Bb84Report(fid, {k: r_.survival for k, r_ in res.items()}, qz, qx, avg, r,
                      avg >= SECURITY_THRESHOLD)


def mub_average_fidelity(channel: Channel, theta=0.0, encoding: str = "hybrid",
                         basis: BasisSpec | None = None) -> float:
    """Mean conditional fidelity over the six eigenstates of X, Y and Z."""
    res = state_results(channel, theta, encoding, MUB_LABELS, basis)
    return float(np.mean([r.fidelity for r in res.values()]))
