"""arithlift: hermitian-lattice arithmetic over imaginary quadratic fields,
Weil representations on finite quadratic modules, incoherent Eisenstein
coefficients, Rankin-Selberg central derivatives, and the intersection-number
bookkeeping tying them together."""

from .quadfield import (
    AN,
    ArithmeticNumber,
    FracIdeal,
    IdealClassRep,
    QuadField,
    chi,
    dirichlet_L,
    ideal_class_reps,
    kronecker,
    hilbert_symbol,
    lchi_log_derivative_at_0,
    new_field,
    rho,
    rho_local,
)
from .hermlat import (
    DiffSet,
    HermitianLattice,
    RankOneSpec,
    aut_size,
    diff_set,
    genus_rank_one,
    incoherent_rank_one,
    lambda_twist,
    local_invariant,
    nearby_rank_one,
    rep_number,
    rep_number_weighted,
    standard_incoherent,
)
from .fqm import (
    FiniteQuadraticModule,
    SFunction,
    discriminant_module,
    gamma_infinity,
    gamma_p,
    gamma_Q,
    is_isotropic,
    lift_functional,
    nonzero_phi_basis,
    phi_basis,
    phi_r,
    rank_one_spec_module,
    restrict_to_sublattice,
    transfer_invariant,
    weil_generators,
)
from .qexpand import (
    GreenBoundaryData,
    HarmonicFormData,
    QExpansion,
    boundary_mult,
    boundary_mult_simple,
    constant_term,
    e2,
    eta_theta,
    green_fourier_value,
    pairing,
    reg_pairing,
    reg_pairing_over_4pi,
    scalar_theta,
    serre_derivative,
    sigma1,
    special_V,
    theta_operator,
    theta_series,
    xi_image,
)
from .eisenstein import (
    EisensteinCoefficients,
    aplus,
    cm_value_rhs,
    ct_f_eisenstein_theta,
    holomorphic_part,
    siegel_weil_theta,
)
from .lfunc import (
    AmbientSpace,
    KernelEvaluator,
    LSeriesSpec,
    NewformData,
    build_vector_stream,
    completed_L,
    completion_factor,
    corollary_product_vs_sum,
    direct_L,
    epsilon_Q,
    eta_weighted_stream,
    g_twist,
    induce,
    ingest_newform,
    L_prime_at_0,
    scalar_vector_decomposition_check,
    theorem_maintheo2_rhs,
    validate_hecke,
)
from .intersect import (
    CycleConfig,
    chowla_selberg_rhs,
    deg_cm_cycle,
    deg_X_hat,
    geometric_count,
    local_combo_check,
    main_theorem_rhs,
    nu_p,
    proper_identity_check,
    taut_pairing,
    weakly_holomorphic_ledger,
)

__version__ = "0.1.0"
