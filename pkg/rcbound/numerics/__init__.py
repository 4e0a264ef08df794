from .logdomain import (
    LN2,
    NEG_INF,
    LogReal,
    from_log,
    log1mexp,
    log_add,
    log_binomial,
    log_binomial_pmf,
    log_binomial_tail,
    log_binomial_tails,
    log_sub,
    log_sum,
    to_log,
)

from .special import (
    GammaParams,
    NoncentralChi2Params,
    gamma_log_cdf,
    gamma_log_pdf,
    gamma_log_sf,
    gamma_quantile,
    log_gammainc,
    log_gammaincc,
    ncx2_log_cdf,
    ncx2_log_cdf_sf,
    ncx2_log_pdf,
    ncx2_log_sf,
    ncx2_quantile,
    ncx2_tail_quantiles,
)

from .quadrature import (
    QuadratureConfig,
    QuadratureResult,
    integrate_1d,
    integrate_1d_batch,
    integrate_2d_iterated,
)
