"""Numerical laboratory for single-qubit randomized benchmarking with
gate-dependent noise: exact and approximate decay theories, gauge analysis
of the average gateset infidelity, and a seeded simulation harness."""

from .superop import (
    Superoperator,
    State,
    Effect,
    ChoiMatrix,
    rotation_channel,
    depolarizing_channel,
    identity_channel,
    zero_channel,
    channel_from_unitary,
    compose,
    born_probability,
    to_choi,
    choi_eigenvalues,
    is_cp,
    is_tp,
    is_unital,
    is_unitary_channel,
    agi,
    agi_haar_oracle,
    diamond_distance,
)
from .clifford import (
    CliffordGroup,
    CompilationTable,
    GateSet,
    Perfect,
    CoherentZ,
    GeneralPrimitive,
    GateIndependent,
    CustomPrimitive,
    generate_clifford_group,
    compile_cliffords,
    build_gateset,
    error_maps,
    average_error_map,
    gateset_to_json_dict,
)
from .protocol import (
    DEFAULT_LENGTHS,
    Spam,
    RBConfig,
    RBDataset,
    FitResult,
    RBEstimate,
    FitError,
    sample_rb_sequence,
    survival_probability,
    run_rb,
    fit_decay,
    estimate_r,
)
from .theory import (
    RMatrix,
    SpectralDecay,
    GammaResult,
    DeltaBound,
    build_r_matrix,
    exact_decay,
    build_l_map,
    gamma_and_r_gamma,
    predicted_decay,
    delta_diamond,
    brute_force_pm,
)
from .gauge import (
    GaugeTransform,
    GaugeReport,
    CounterexampleRow,
    EpsilonMinResult,
    WallmanGauge,
    apply_gauge,
    agsi,
    agsi_of,
    m_alpha,
    counterexample_epsilon_min,
    epsilon_min_search,
    wallman_gauge,
)

__version__ = "0.1.0"
