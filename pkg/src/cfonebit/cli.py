"""Command-line front end: run experiments, validate configs, check proxes.

Configuration precedence: defaults < config file (--config) < environment
variables (CFONEBIT_<KEY>, upper-cased flat key) < command-line flags.  The
flat key schema is defined in :mod:`cfonebit.config`; ``cfonebit validate``
prints the resolved configuration.

Outputs of ``cfonebit run`` in --out:

* ``ber_per_ue.csv``       — lambda, precoder, ue_rank, avg_ber (UEs ranked
  by their average BER, best first)
* ``antenna_activity.csv`` — lambda, avg_active_antennas, precoder,
  overall_avg_ber
* ``manifest.json``        — resolved config, seed streams, versions,
  timings; feeding it back as --config reproduces the CSVs byte for byte

Exit codes: 0 success, 1 configuration error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys

import numpy as np

from . import __version__
from .config import (ConfigError, ExperimentPlan, FLAT_KEYS, Precoder,
                     plan_from_flat, plan_to_flat)
from .channel import lift_vector
from .harness import RunResult, channel_for_setup, run_experiment
from .precoder import kappa_for
from .splitting import (prox_group_lasso, prox_group_lasso_bruteforce,
                        prox_linf_sq, prox_linf_sq_bruteforce, solve)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2
ENV_PREFIX = "CFONEBIT_"

log = logging.getLogger("cfonebit")


def _fmt(v: float) -> str:
    return f"{float(v):.10g}"


# ---------------------------------------------------------------------------
# output writers
# ---------------------------------------------------------------------------

def write_ber_csv(path: str, result: RunResult) -> None:
    with open(path, "w", newline="") as f:
        wr = csv.writer(f)
        wr.writerow(["lambda", "precoder", "ue_rank", "avg_ber"])
        for li, lam in enumerate(result.lambdas):
            for pi, p in enumerate(result.precoders):
                for rank in range(result.num_ues):
                    wr.writerow([_fmt(lam), p.value, rank + 1,
                                 _fmt(result.per_ue_ranked_ber[li, pi, rank])])


def write_activity_csv(path: str, result: RunResult) -> None:
    with open(path, "w", newline="") as f:
        wr = csv.writer(f)
        wr.writerow(["lambda", "avg_active_antennas", "precoder", "overall_avg_ber"])
        for li, lam in enumerate(result.lambdas):
            for pi, p in enumerate(result.precoders):
                wr.writerow([_fmt(lam), _fmt(result.activity_by_precoder[li, pi]),
                             p.value, _fmt(result.overall_avg_ber[li, pi])])


def build_manifest(plan: ExperimentPlan, result: RunResult, threads: int) -> dict:
    import scipy
    return {
        "config": plan_to_flat(plan),
        "seed_manifest": result.seed_manifest,
        "fallbacks": result.fallbacks,
        "timings_s": {k: round(v, 3) for k, v in result.timings.items()},
        "threads": threads,
        "versions": {
            "cfonebit": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": sys.version.split()[0],
        },
    }


def write_solver_trace(path: str, plan: ExperimentPlan) -> None:
    """Trace the first symbol of setup 0 for each lambda (diagnostics)."""
    import dataclasses

    from . import qpsk
    from .harness import _traffic_block

    channel = channel_for_setup(plan, 0)
    bits, _ = _traffic_block(plan.master_seed, 0, 0, 1, plan.network.num_ues)
    s_r = lift_vector(qpsk.modulate(bits)[:, 0])
    kappa = kappa_for(plan.network.antennas_per_ap, plan.network.num_ues,
                      channel.sigma2, plan.network.downlink_power_w)
    with open(path, "w", newline="") as f:
        wr = csv.writer(f)
        wr.writerow(["lambda", "iter", "objective", "residual"])
        for lam in plan.lambdas:
            cfg = dataclasses.replace(plan.solver, kappa=kappa, lam=lam)
            solve(s_r, channel.h_r, cfg,
                  smax_sq=channel.largest_singular_value_sq,
                  trace=lambda it, obj, res, _l=lam: wr.writerow(
                      [_fmt(_l), it, _fmt(obj), _fmt(res)]))


# ---------------------------------------------------------------------------
# configuration assembly
# ---------------------------------------------------------------------------

def load_config_file(path: str) -> dict:
    with open(path) as f:
        data = json.load(f)
    if not isinstance(data, dict):
        raise ConfigError("config", "config file must hold a JSON object")
    if "config" in data and isinstance(data["config"], dict):
        data = data["config"]  # manifest.json round-trip
    return data


def _parse_env_value(key: str, raw: str):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        pass
    if "," in raw:
        parts = [p.strip() for p in raw.split(",") if p.strip()]
        out = []
        for p in parts:
            try:
                out.append(json.loads(p))
            except json.JSONDecodeError:
                out.append(p)
        return out
    return raw


def env_overrides(environ=None) -> dict:
    environ = os.environ if environ is None else environ
    out = {}
    for key in FLAT_KEYS:
        raw = environ.get(ENV_PREFIX + key.upper())
        if raw is not None:
            out[key] = _parse_env_value(key, raw)
    return out


def _csv_floats(text: str) -> list[float]:
    try:
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise ConfigError("lambdas", f"could not parse {text!r} as a comma list of numbers")


def flag_overrides(args: argparse.Namespace) -> dict:
    out = {}
    if args.lambda_grid is not None:
        out["lambdas"] = _csv_floats(args.lambda_grid)
    if args.bits_per_ue is not None:
        out["bits_per_ue"] = args.bits_per_ue
    if args.setups is not None:
        out["num_setups"] = args.setups
    if args.seed is not None:
        out["seed"] = args.seed
    if args.precoders is not None:
        out["precoders"] = [p.strip() for p in args.precoders.split(",") if p.strip()]
    return out


def resolve_plan(args: argparse.Namespace) -> ExperimentPlan:
    flat = {}
    if args.config:
        flat.update(load_config_file(args.config))
    flat.update(env_overrides())
    flat.update(flag_overrides(args))
    return plan_from_flat(flat)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_run(args: argparse.Namespace) -> int:
    try:
        plan = resolve_plan(args)
    except ConfigError as exc:
        log.error("invalid configuration — %s", exc)
        return EXIT_CONFIG
    except (OSError, json.JSONDecodeError) as exc:
        log.error("could not read config: %s", exc)
        return EXIT_CONFIG

    try:
        os.makedirs(args.out, exist_ok=True)
        log.info("running %d setups x %d lambdas x %d symbols (%d bits/UE, %d threads)",
                 plan.num_setups, len(plan.lambdas), plan.symbols_per_setup,
                 plan.bits_per_ue, args.threads)

        def progress(done, total):
            if done % max(1, total // 20) == 0 or done == total:
                log.info("progress: %d/%d tasks", done, total)

        result = run_experiment(plan, threads=args.threads, progress=progress)
        write_ber_csv(os.path.join(args.out, "ber_per_ue.csv"), result)
        write_activity_csv(os.path.join(args.out, "antenna_activity.csv"), result)
        with open(os.path.join(args.out, "manifest.json"), "w") as f:
            json.dump(build_manifest(plan, result, args.threads), f,
                      indent=2, sort_keys=True)
            f.write("\n")
        if args.trace:
            write_solver_trace(os.path.join(args.out, "solver_trace.csv"), plan)
        log.info("wrote ber_per_ue.csv, antenna_activity.csv, manifest.json to %s",
                 args.out)
        return EXIT_OK
    except Exception as exc:  # noqa: BLE001 — CLI boundary
        log.error("run failed: %s", exc)
        return EXIT_RUNTIME


def cmd_validate(args: argparse.Namespace) -> int:
    try:
        plan = resolve_plan(args)
    except ConfigError as exc:
        log.error("invalid configuration — %s", exc)
        return EXIT_CONFIG
    except (OSError, json.JSONDecodeError) as exc:
        log.error("could not read config: %s", exc)
        return EXIT_CONFIG
    print(json.dumps(plan_to_flat(plan), indent=2, sort_keys=True))
    return EXIT_OK


def prox_check(n_cases: int, seed: int) -> tuple[float, float]:
    """Compare both prox implementations against their brute-force oracles.

    Returns the max deviations (infinity-norm prox, group prox) over random
    instances of dimension <= 16, including weight-0 and threshold-0 cases.
    """
    rng = np.random.default_rng(seed)
    dev_linf = 0.0
    dev_group = 0.0
    for i in range(n_cases):
        dim = int(rng.integers(1, 17))
        v = rng.standard_normal(dim) * 10.0 ** rng.uniform(-2, 2)
        w = 0.0 if i % 7 == 0 else float(np.abs(rng.standard_normal())) * 3.0
        fast = prox_linf_sq(v, w)
        ref = prox_linf_sq_bruteforce(v, w)
        dev_linf = max(dev_linf, float(np.abs(fast - ref).max()))

        pair = rng.standard_normal(2) * 10.0 ** rng.uniform(-1, 1)
        thresh = 0.0 if i % 9 == 0 else float(np.abs(rng.standard_normal()))
        fast_pair = prox_group_lasso(np.array([pair[0], pair[1]]), thresh)
        ref_pair = prox_group_lasso_bruteforce(pair, thresh)
        dev_group = max(dev_group, float(np.abs(fast_pair - ref_pair).max()))
    return dev_linf, dev_group


def cmd_prox_check(args: argparse.Namespace) -> int:
    if args.cases < 1:
        log.error("--cases must be >= 1")
        return EXIT_CONFIG
    dev_linf, dev_group = prox_check(args.cases, args.seed)
    print(f"prox_linf_sq     max deviation: {dev_linf:.3e} (bound 1e-06)")
    print(f"prox_group_lasso max deviation: {dev_group:.3e} (bound 1e-08)")
    ok = dev_linf <= 1e-6 and dev_group <= 1e-8
    print("OK" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_RUNTIME


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cfonebit",
        description="One-bit cell-free precoding experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment plan")
    val_p = sub.add_parser("validate", help="validate and print the resolved config")
    for p in (run_p, val_p):
        p.add_argument("--config", help="JSON config file (flat schema or a manifest.json)")
        p.add_argument("--lambda", dest="lambda_grid", metavar="CSV",
                       help="comma list of regularization weights, e.g. 1,15,25")
        p.add_argument("--bits-per-ue", type=int, metavar="N")
        p.add_argument("--setups", type=int, metavar="N")
        p.add_argument("--seed", type=int, metavar="N")
        p.add_argument("--precoders", metavar="LIST",
                       help="comma list from: " + ",".join(x.value for x in Precoder))
    run_p.add_argument("--out", default="out", help="output directory (default: out)")
    run_p.add_argument("--threads", type=int, default=1)
    run_p.add_argument("--trace", action="store_true",
                       help="verbose logging plus solver_trace.csv for the first symbol")

    chk_p = sub.add_parser("prox-check", help="verify proximal operators against brute force")
    chk_p.add_argument("--cases", type=int, default=100)
    chk_p.add_argument("--seed", type=int, default=0)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if getattr(args, "trace", False) else logging.INFO,
        format="%(levelname)s %(message)s", stream=sys.stderr)
    if args.command == "run":
        return cmd_run(args)
    if args.command == "validate":
        return cmd_validate(args)
    return cmd_prox_check(args)


if __name__ == "__main__":
    sys.exit(main())
