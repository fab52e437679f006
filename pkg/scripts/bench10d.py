#!/usr/bin/env python3
"""Run the d=10 random-mixture study (relative KL, CBO vs gradient flow).

Desk scale by default (5 instances, horizon 30); pass --full for the complete
protocol (20 instances, horizon 75). Example:

    python3 scripts/bench10d.py --full --out results_d10
"""

import sys

from gausscbo.cli import main

if __name__ == "__main__":
    sys.exit(main(["bench10d", *sys.argv[1:]]))
