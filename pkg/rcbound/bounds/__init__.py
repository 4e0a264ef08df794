from rcbound.bounds.baselines import bec_converse, bec_dt, bec_rcu
from rcbound.bounds.channels import (
    awgn_rc_exact,
    awgn_rc_lower,
    awgn_rc_series,
    awgn_rc_upper,
    bec_rc,
    bsc_rc,
)
from rcbound.bounds.dispatch import evaluate
from rcbound.bounds.kernel import (
    TieMass,
    continuous_kernel,
    correct_prob_kernel,
    direct_sum_kernel,
    log_correct_prob,
    log_error_prob,
)
