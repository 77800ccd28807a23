"""Protocol-level metrics built on the single-photon channel."""
from .bell import (
    PHI_MINUS,
    TwoPhotonPureState,
    apply_local,
    bell_state_logical,
    check_density,
    chsh_correlators,
    chsh_labeling,
    chsh_S,
    concurrence,
    werner_state,
)
from .qkd import (
    SECURITY_THRESHOLD,
    Bb84Report,
    StateResult,
    bb84_run,
    binary_entropy,
    key_fraction,
    mub_average_fidelity,
    state_results,
)
from .tomography import psd_repair, sample_probs, tomography_probs, tomography_reconstruct
from .transfer import ENCODINGS, TotalLossError, detected_density, prepare, transmit
