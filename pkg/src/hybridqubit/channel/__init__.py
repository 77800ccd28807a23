"""Physical transformations between source and detector."""
from .analytic import (
    SumTruncationWarning,
    combined_coeff_analytic,
    combined_coeff_from_alpha,
    displaced_lg1_field,
    displacement_coeff_analytic,
    tilt_coeff_analytic,
    tilt_coeff_from_alpha,
    tilt_phase,
)
from .coupling import (
    ModeCoupling,
    PolAction,
    apply_coupling,
    check_invariance,
    column_norms,
    compose,
    identity_coupling,
    mask_coupling,
    norm_capture,
    read_coupling_csv,
    write_coupling_csv,
    write_coupling_table,
)
from .masks import (
    ArbitraryMultiplicative,
    CircularAperture,
    Displacement,
    DisplacementTilt,
    EllipticalScaling,
    KnifeEdge,
    Mask,
    PhaseScreen,
    Tilt,
    mode_values,
    random_phase_screen,
)
from .ops import (
    Efficiency,
    Polarizer,
    Propagation,
    Rotation,
    erase_polarization,
    free_propagate,
    oam_decode,
    oam_density,
    run_channel,
)
from .qplate import (
    QPlateSpec,
    decode,
    encode,
    predicted_mub_fidelity,
    projected_amplitudes,
    qplate_apply,
    qplate_radial_coeffs,
)
