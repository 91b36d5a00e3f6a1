"""Structural breaks, market efficiency, and directed causality for price panels."""

from .beast import (
    ExtractedChangepoint,
    Hyperparams,
    PosteriorSummary,
    classify_slope_sign,
    run_sampler,
    trend_correlation_matrix,
)
from .errors import BreakscopeError
from .events import (
    BreakpointReport,
    Event,
    EventCatalog,
    classify_breakpoints,
    default_catalog,
    load_catalog,
    relation_between,
)
from .hurst import classify_efficiency, expected_rs, ghe, hurst_rs, rolling_ghe
from .infotheory import (
    DiscreteJoint,
    binned_mi,
    knn_cmi,
    knn_mi,
    mi_decoupling,
    mi_knn,
    mutual_information_discrete,
    rolling_mi,
)
from .pmime import (
    PmimeResult,
    build_mixed_embedding,
    causality_network,
    partial_transfer_entropy,
    pmime,
    rolling_pmime,
    transfer_entropy,
)
from .series import (
    Panel,
    RollingSeries,
    RollingWindowSpec,
    TimePoint,
    TimeSeries,
    drop_negative_prices,
    jarque_bera,
    load_csv,
    log_returns,
    log_transform,
    pearson_correlation_matrix,
    rolling_apply,
)
from .synth import (
    GeneratorSpec,
    brute_force_mi,
    gaussian_mi_oracle,
    gen_fbm,
    gen_fgn,
    gen_piecewise,
    gen_var_coupled,
    gen_white_noise,
    generate,
)

__version__ = "0.1.0"
