"""Two-qubit state tomography by linear inversion over 6 x 6 MUB projectors."""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from ..modes import MUB_LABELS, logical_vector


@lru_cache(maxsize=1)
def _projectors() -> np.ndarray:
    """(36, 4, 4) projectors, ordered Alice-major over the six MUB states."""
    vs = [logical_vector(k) for k in MUB_LABELS]
    out = []
    for a in vs:
        for b in vs:
            v = np.kron(a, b)
            out.append(np.outer(v, v.conj()))
    return np.array(out)


@lru_cache(maxsize=1)
def _measurement_map() -> np.ndarray:
    # p_k = Tr(P_k rho) = sum_ij conj(P_k)_ij rho_ij for Hermitian P_k
    m = _projectors().conj().reshape(36, 16)
    if np.linalg.matrix_rank(m) != 16:
        raise np.linalg.LinAlgError("tomographic projector set is not informationally complete")
    return m


def tomography_probs(rho: np.ndarray) -> np.ndarray:
    return (_measurement_map() @ np.asarray(rho, dtype=complex).reshape(16)).real


def psd_repair(rho: np.ndarray) -> np.ndarray:
    """Clip negative eigenvalues to zero and renormalize the trace."""
    w, v = np.linalg.eigh(rho)
    w = np.clip(w, 0.0, None)
    out = (v * w) @ v.conj().T
    return out / np.trace(out).real


def tomography_reconstruct(probs, repair: bool = True) -> np.ndarray:
    """Least-squares inversion of the 36 probabilities, Hermitian with unit trace."""
    p = np.asarray(probs, dtype=float)
    if p.shape != (36,):
        raise ValueError(f"expected 36 probabilities, got shape {p.shape}")
    vec, *_ = np.linalg.lstsq(_measurement_map(), p.astype(complex), rcond=None)
    rho = vec.reshape(4, 4)
    rho = 0.5 * (rho + rho.conj().T)
    rho = rho / np.trace(rho).real
    return psd_repair(rho) if repair else rho


def sample_probs(probs, shots: int, seed: int | None = None) -> np.ndarray:
    """Multinomial shot-noise estimate of the probabilities (demonstration only).

    Each of the nine basis pairs is measured ``shots`` times; its four
    outcomes are sampled jointly.
    """
    if shots <= 0:
        raise ValueError("shots must be positive")
    rng = np.random.default_rng(seed)
    p = np.asarray(probs, dtype=float).reshape(6, 6)
    out = np.empty_like(p)
    for ba in range(3):
        for bb in range(3):
            block = p[2 * ba:2 * ba + 2, 2 * bb:2 * bb + 2]
            q = np.clip(block.ravel(), 0.0, None)
            counts = rng.multinomial(shots, q / q.sum())
            out[2 * ba:2 * ba + 2, 2 * bb:2 * bb + 2] = counts.reshape(2, 2) / shots
    return out.ravel()
