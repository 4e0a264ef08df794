#!/usr/bin/env python3
# Maximal rates on the BEC(0.5) at error probability 1e-3: the exact
# random-coding bound against RCU, DT and the converse.
# Usage: bec_rates.py [out.csv]

import traceback
import sys

from rcbound.cli import main

N_GRID = "8,16,32,64,128,256,512"

args = [
    "sweep",
    "--channel", "bec",
    "--delta", "0.5",
    "--epsilon", "1e-3",
    "--n-grid", N_GRID,
    "--methods", "rc,rcu,dt,converse",
    # the achievability bounds cannot reach 1e-3 at n = 8 and 16
    "--allow-infeasible",
]
if len(sys.argv) > 1:
    args += ["--out", sys.argv[1]]

try:
    main(args)
except SystemExit:
    raise
except Exception:
    print(traceback.format_exc(), file=sys.stderr)
    sys.exit(100)
