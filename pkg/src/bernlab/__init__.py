"""bernlab: a numerical lab for mean estimation under Bernoulli product
measures with infinitely many coordinates.

Profiles and their scale functionals, seeded product-measure sampling with
certified tail brackets, the estimator zoo, closed-form and minimax bounds,
an exact small-instance oracle, and a reproducible experiment runner.
"""

__version__ = "0.1.0"

from .profiles import (  # noqa: F401
    CertificationError,
    FunctionalReport,
    Profile,
    SignSeq,
    TailSumBracket,
    dot,
    functional_S,
    functional_T,
    profile_from_json,
    profile_to_json,
    reflect,
    tail_sum,
)
from .oracle import ExactDeviation, exact_deviation  # noqa: F401
from .sampler import (  # noqa: F401
    DeviationEstimate,
    SampleBlock,
    deviation_mc,
    load_sample_block,
    sample_block,
    save_sample_block,
    truncation_index,
)
from .estimators import (  # noqa: F401
    BeyondRule,
    Estimate,
    eme,
    hybrid_estimate,
    majority_sign,
    phi_test,
    truncated_estimate,
)
from .bounds import (  # noqa: F401
    MinimaxInstance,
    TightBoundReport,
    alpha_ie,
    bernoulli_kl,
    fano_bound,
    minimax_instance,
    solve_qprime,
    step_profiles,
    tight_bound,
    union_lower_bound,
)
from .experiments import (  # noqa: F401
    ConfigError,
    ExperimentConfig,
    ResultTable,
    run,
)
