"""Facilitated exclusion / stack dynamics on rings.

Synchronous facilitated simple exclusion and its stack companion,
with exact finite-ring stationary analysis, transfer-operator cylinder
probabilities, direct stationary samplers, and statistical checks.
"""

from .backend import backend_name, kernels
from .dynamics import (
    CoupledState,
    FreezeResult,
    MemberResult,
    Observer,
    TrajectorySummary,
    coupled_step,
    cylinder_observer,
    evolve,
    frozen_observer,
    parity_observer,
    region_observer,
    run,
    step_fssep,
    step_ssm,
    until_frozen,
    until_member,
)
from .exact import (
    EnumeratedRingProb,
    FiniteMarkovModel,
    StationaryResult,
    TransferSpec,
    cylinder_prob,
    density,
    enumerate_even_ring,
    fugacity_of_density,
    ring_cylinder_prob,
    ring_word_prob_enumerated,
    site_marginal,
    stationary_and_detailed_balance,
    transfer_spec,
    transition_matrix,
)
from .gibbs import (
    ParitySource,
    basic_state_sample,
    sample_etis,
    sample_etis_batch,
    sample_even_gibbs,
    sample_even_gibbs_batch,
)
from .lattice import (
    DecompositionError,
    Region,
    as_exclusion,
    as_stack,
    bernoulli_ring,
    classify_regions,
    decompose_regions,
    delta,
    dump_ring,
    fixed_count_ring,
    height_profile,
    is_frozen,
    is_frozen_stack,
    load_ring,
    member_H,
    member_left_right,
    member_spaced_stacks,
    minimal_period,
    parity_map,
    rotate,
)
from .rng import RngContext
from .stats import (
    AbsorptionResult,
    ChiSquareReport,
    CorrelationReport,
    CylinderTable,
    QuenchResult,
    RenewalRecord,
    StationarityReport,
    cylinder_table,
    find_markers,
    halfdensity_convergence,
    marker_gaps,
    quench_lowdensity,
    renewal_independence_test,
    rooted_window,
    stationarity_test,
    tv_distance,
    two_point_correlation,
)
from .substitution import (
    PHI,
    PHI_LEFT,
    PHI_RIGHT,
    NotInImage,
    SubstitutionRule,
    apply,
    parse_image,
    phi_image,
    phi_rule,
    pull_back_sample,
    push_forward_sample,
)

__version__ = "0.1.0"
