#!/usr/bin/env python3
"""Scaled antenna-activity / BER experiment (minutes, not hours).

100 single-antenna APs serve 60 UEs; 1e4 bits per UE over 2 network
setups, lambda in {1, 15, 25}, comparing the sparsity-regularized
precoder against sign-quantized RZF with aligned and with random
antenna deactivation.  Results land in results/scaled/ as two CSVs
plus a manifest.json that reproduces the run byte-for-byte:

    python3 scripts/run_scaled_experiment.py --threads 4

Any extra arguments are forwarded to `cfonebit run`.
"""

import json
import sys
import tempfile

from cfonebit import cli
from cfonebit.config import (
    ExperimentPlan,
    NetworkConfig,
    Precoder,
    SolverConfig,
    plan_to_flat,
)


def main(argv: list[str] | None = None) -> int:
    extra = sys.argv[1:] if argv is None else list(argv)
    plan = ExperimentPlan(
        network=NetworkConfig(seed=1),
        solver=SolverConfig(gamma_scale=0.9, psi=1.5, max_iters=700,
                            tolerance=0.0),
        lambdas=(1.0, 15.0, 25.0),
        bits_per_ue=10_000,
        num_setups=2,
        precoders=(Precoder.GREEN, Precoder.RZF1_ALIGNED, Precoder.RZF1_ACR),
        master_seed=1,
        batch_size=512,
    )
    with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as f:
        json.dump(plan_to_flat(plan), f, indent=2, sort_keys=True)
        cfg_path = f.name
    args = ["run", "--config", cfg_path]
    if not any(a == "--out" or a.startswith("--out=") for a in extra):
        args += ["--out", "results/scaled"]
    return cli.main(args + extra)


if __name__ == "__main__":
    sys.exit(main())
