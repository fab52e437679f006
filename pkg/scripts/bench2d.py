#!/usr/bin/env python3
"""Run the 2-D benchmark: targets A-D, CBO vs the gradient-flow baseline.

Defaults reproduce the comparison protocol (20 paired seeds, horizon 10,
sigma=5, lambda=1, alpha=1e4, N=20; target C at dt=0.05). Any CLI flag of
`gausscbo bench2d` can be appended, e.g.:

    python3 scripts/bench2d.py --seeds 100 --out results_2d --workers 4
"""

import sys

from gausscbo.cli import main

if __name__ == "__main__":
    sys.exit(main(["bench2d", *sys.argv[1:]]))
