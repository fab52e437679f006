#!/usr/bin/env python3
"""Parameter-sensitivity sweeps for the CBO optimizer.

Sweeps sigma, the particle count, or the rebase frequency on one target.
Examples:

    python3 scripts/sweep.py sigma --target A --seeds 10
    python3 scripts/sweep.py particles --values 5,10,20,40
    python3 scripts/sweep.py rebase_every --values 0.1,0.4,1.6,12.8
"""

import sys

from gausscbo.cli import main

if __name__ == "__main__":
    sys.exit(main(["sweep", *sys.argv[1:]]))
