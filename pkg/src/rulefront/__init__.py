"""rulefront: Pareto frontiers of interpretable rule-set subgroups.

Given per-observation treatment-effect estimates over discrete covariates,
the package searches for rule sets (OR-of-ANDs over binary conditions) that
trade off subgroup size against subgroup effect size, reduces them to a
Pareto front, and supports split-sample inference with power-based rule-set
selection.
"""

from .anneal import (
    AnnealerConfig,
    AnnealingChain,
    ChainResult,
    acceptance_probability,
    calibrate_t0,
    fg_probability,
    run_chain,
    run_restarts,
)
from .errors import (
    BudgetExceededError,
    ConfigError,
    DataError,
    DegenerateInputError,
    EmptyPoolError,
    InsufficientDataError,
    RuleFrontError,
    SearchError,
    StructuralError,
)
from .estimators import FrontierSearch, SubgroupSearch
from .exhaustive import (
    EnumerationBudget,
    enumerate_rulesets,
    exact_argmax,
    exact_front,
)
from .frontier import (
    DEFAULT_ALPHA_GRID,
    DEFAULT_WEIGHT_GRID,
    Front,
    FrontierPoint,
    pareto_filter,
    point_from_ruleset,
    sweep,
)
from .inference import (
    SplitPlan,
    TestResult,
    compare_groups,
    diff_in_means,
    plug_in_covariance,
    power,
    power_rank,
    split,
)
from .mining import (
    DiscretizationSpec,
    RulePool,
    VariableSpec,
    cull,
    discretize,
    mine_rules,
    quantile_cut,
)
from .model import (
    Condition,
    CoverageMask,
    Dataset,
    Rule,
    RuleSet,
    coverage_of_rule,
    coverage_of_ruleset,
    format_ruleset,
    parse_ruleset,
    subgroup_effect,
)
from .objective import (
    Constraints,
    ObjectiveConfig,
    evaluate,
    evaluate_linear,
    is_feasible,
)
from .simulate import (
    ContinuousDgpSpec,
    DiscreteDgpSpec,
    FaceValidity,
    face_validity,
    gen_continuous,
    gen_discrete,
    interaction_catalog,
)

__version__ = "0.1.0"

__all__ = [
    "AnnealerConfig", "AnnealingChain", "ChainResult", "acceptance_probability",
    "calibrate_t0", "fg_probability", "run_chain", "run_restarts",
    "BudgetExceededError", "ConfigError", "DataError", "DegenerateInputError",
    "EmptyPoolError", "InsufficientDataError", "RuleFrontError", "SearchError",
    "StructuralError",
    "FrontierSearch", "SubgroupSearch",
    "EnumerationBudget", "enumerate_rulesets", "exact_argmax", "exact_front",
    "DEFAULT_ALPHA_GRID", "DEFAULT_WEIGHT_GRID", "Front", "FrontierPoint",
    "pareto_filter", "point_from_ruleset", "sweep",
    "SplitPlan", "TestResult", "compare_groups", "diff_in_means",
    "plug_in_covariance", "power", "power_rank", "split",
    "DiscretizationSpec", "RulePool", "VariableSpec", "cull", "discretize",
    "mine_rules", "quantile_cut",
    "Condition", "CoverageMask", "Dataset", "Rule", "RuleSet",
    "coverage_of_rule", "coverage_of_ruleset", "format_ruleset",
    "parse_ruleset", "subgroup_effect",
    "Constraints", "ObjectiveConfig", "evaluate", "evaluate_linear",
    "is_feasible",
    "ContinuousDgpSpec", "DiscreteDgpSpec", "FaceValidity", "face_validity",
    "gen_continuous", "gen_discrete", "interaction_catalog",
    "__version__",
]
