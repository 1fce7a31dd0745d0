#!/usr/bin/env python3
"""Run every experiment kind with its default configuration.

Outputs land in out/<kind>/ as CSV plus a metadata sidecar. Pass an
alternative output root as the first argument.
"""

import sys
from pathlib import Path

from resetctrl.config import default_config, qubit_defaults
from resetctrl.experiments import EXPERIMENT_KINDS, run_experiment

QUBIT_KINDS = {"chernoff", "dissipative", "strobe", "gradual", "lie"}


def main() -> int:
    root = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("out")
    for kind in EXPERIMENT_KINDS:
        cfg = qubit_defaults() if kind in QUBIT_KINDS else default_config()
        print(f"== {kind} -> {root / kind}")
        code = run_experiment(cfg, kind, root / kind, quiet=False)
        if code != 0:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
