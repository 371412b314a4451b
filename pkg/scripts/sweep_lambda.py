#!/usr/bin/env python3
"""Full sparsity sweep over the default grid lambda in {1, 10, 15, 20, 25}.

All seven precoder variants, 10 network setups, 1e6 bits per UE — the
overnight-scale run.  `--quick` shrinks it to 1 setup and 2e3 bits per
UE for a smoke pass (about a minute); anything else on the command line
is forwarded to `cfonebit run`, so e.g.

    python3 scripts/sweep_lambda.py --quick --threads 4 --out results/smoke
    python3 scripts/sweep_lambda.py --setups 10 --out results/full
"""

import json
import sys
import tempfile

from cfonebit import cli
from cfonebit.config import (
    ExperimentPlan,
    NetworkConfig,
    SolverConfig,
    plan_to_flat,
)


def main(argv: list[str] | None = None) -> int:
    extra = sys.argv[1:] if argv is None else list(argv)
    quick = "--quick" in extra
    if quick:
        extra = [a for a in extra if a != "--quick"]
    plan = ExperimentPlan(
        network=NetworkConfig(seed=1),
        solver=SolverConfig(gamma_scale=0.9, psi=1.5, max_iters=700,
                            tolerance=0.0),
        bits_per_ue=2_000 if quick else 1_000_000,
        num_setups=1 if quick else 10,
        master_seed=1,
    )
    with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as f:
        json.dump(plan_to_flat(plan), f, indent=2, sort_keys=True)
        cfg_path = f.name
    args = ["run", "--config", cfg_path]
    if not any(a == "--out" or a.startswith("--out=") for a in extra):
        args += ["--out", "results/sweep"]
    return cli.main(args + extra)


if __name__ == "__main__":
    sys.exit(main())
