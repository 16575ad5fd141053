# Import the public API of the sub modules of pyolcpm
# F401 is ignored because they will be used from not here but a user of the library
from pyolcpm.cli import dumps, load, parse, serialize  # noqa: F401
from pyolcpm.errors import (  # noqa: F401
    BalanceViolationError,
    BudgetExceededError,
    EnumerationInfeasibleError,
    InfeasibleParametersError,
    InstanceValidationError,
    SupportShapeError,
)
from pyolcpm.frugal import (  # noqa: F401
    FrugalTrace,
    UtilityReport,
    acceptance_prob_exact,
    blocking_set,
    exact_utilities,
    expected_max_surrogate,
    run_frugal,
)
from pyolcpm.grades import (  # noqa: F401
    GradeCurve,
    critical_values,
    grade_at,
    grade_curve,
    grades,
    perturbation_epsilon,
    perturbed_costs,
    surrogate,
)
from pyolcpm.matroid import (  # noqa: F401
    GraphicMatroid,
    LaminarMatroid,
    MatroidOracle,
    ParallelExtension,
    PartitionMatroid,
    UniformMatroid,
    max_weight_independent_set,
)
from pyolcpm.model import (  # noqa: F401
    LinearContract,
    OlcpmInstance,
    OutcomeDistribution,
    UpmInstance,
    realization_iter,
    validate,
)
from pyolcpm.sampler import (  # noqa: F401
    AcceptanceEstimate,
    SampleConfig,
    sample_acceptance,
    utility_from_acceptance,
)
from pyolcpm.solver import (  # noqa: F401
    ContractSolution,
    fpras_oracle,
    solve_exact,
    solve_fpras_balanced,
    solve_fpras_bounded_support,
    solve_via_upm,
    sweep,
)
from pyolcpm.upm import (  # noqa: F401
    ReductionParams,
    choose_reduction_params,
    olcpm_to_upm,
    upm_cleanup,
    upm_exact,
    upm_monte_carlo,
    upm_to_olcpm,
    upm_to_olcpm_bounded_support,
    upm_uniform_poly,
    upm_via_olcpm,
    upm_via_olcpm_approx,
)
