from rcbound.oracle.direct import rc_direct_bec, rc_direct_bsc
from rcbound.oracle.simulate import SimConfig, SimResult, mc_integral_awgn, simulate_ensemble
