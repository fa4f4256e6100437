"""Time-varying coefficient models for longitudinal data.

Coefficient functions are expanded over radial Gaussian kernels or truncated
power splines and estimated by weighted least squares with a subject-level
bootstrap, a conjugate two-block Gibbs sampler, or coordinate-ascent
variational inference.  Knot counts are chosen by a predictive
cross-validation criterion.
"""

__version__ = "0.1.0"

from .basis import (
    BasisFamily,
    BasisSpec,
    DesignBundle,
    basis_matrix,
    build_design,
    coefficient_curve,
    default_bandwidth,
    eval_basis,
    make_spec,
    place_knots_equal,
    place_knots_quantile,
    split_alpha,
)
from .bootstrap import (
    DrawSource,
    PosteriorDraws,
    bootstrap_fit,
    percentile_interval,
    resample_subjects,
)
from .data import (
    CsvSchema,
    LongitudinalDataset,
    SubjectRecord,
    ingest_csv,
    subject_uniform_weights,
    write_csv,
)
from .engines import EngineResult, fit_engine
from .errors import (
    BootstrapDegeneracyError,
    CsvParseError,
    DataError,
    DesignError,
    EmptyDataError,
    InsufficientDataError,
    KnotError,
    NumericalError,
    SchemaError,
    SelectionError,
    SingularDesignError,
    TvcmError,
)
from .frequentist import WlsFit, fit_wls, predict, predict_rows
from .mcmc import PriorSpec, available_backends, default_prior, dic, gibbs, gibbs_backend, whiten
from .selection import amse, crossval_amse, knot_search, made, pcv, pcv_loo, select_knots
from .simgen import (
    SimReport,
    SimTruth,
    gen_scenario1,
    gen_scenario2,
    run_replications,
    scenario1_beta0,
    scenario1_correlation_bounds,
    scenario2_betas,
)
from .vb import VariationalPosterior, elbo, vb_fit, vb_sample
