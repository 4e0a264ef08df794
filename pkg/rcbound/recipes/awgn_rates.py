#!/usr/bin/env python3
# Maximal rates on the real AWGN channel at SNR 1 and error probability 1e-3
# from the upper and lower Gaussian bounds.
# Usage: awgn_rates.py [out.csv]

import traceback
import sys

from rcbound.cli import main

N_GRID = "50,100,200,400"

args = [
    "sweep",
    "--channel", "awgn",
    "--gamma", "1.0",
    "--epsilon", "1e-3",
    "--n-grid", N_GRID,
    "--methods", "awgn-upper,awgn-lower",
    "--rate-tol", "1e-5",
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
