"""Acceptance gate: one test per shipped guarantee, one printed line each.

Criteria 4-6 share a single scaled Monte Carlo run (100 APs, 60 UEs,
1e4 bits/UE, 2 setups, lambda in {1, 15, 25}) held in a module-scoped
fixture; it dominates the runtime of this file (several minutes on one
core).  Everything else is fast and self-contained.

Run just this gate with:  pytest tests/test_acceptance.py -s
"""

import time

import numpy as np
import pytest

from cfonebit.cli import prox_check, write_activity_csv, write_ber_csv
from cfonebit.config import (
    ExperimentPlan,
    NetworkConfig,
    Precoder,
    SolverConfig,
)
from cfonebit.harness import run_experiment
from cfonebit.qpsk import demodulate
from cfonebit.splitting import grad_d1, objective, solve
from reference import random_instance, reference_solution


def _report(request, ok: bool, label: str, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] {label}: {detail}"
    lines = getattr(request.config, "acceptance_lines", None)
    if lines is None:
        lines = []
        request.config.acceptance_lines = lines
    lines.append(line)
    print(line)
    assert ok, line


# ---------------------------------------------------------------------------
# 1. proximal operators vs brute-force oracles
# ---------------------------------------------------------------------------

def test_criterion_1_prox_oracles(request):
    t0 = time.perf_counter()
    dev_linf, dev_group = prox_check(100, seed=0)
    took = time.perf_counter() - t0
    ok = dev_linf <= 1e-6 and dev_group <= 1e-8 and took < 10.0
    _report(request, ok, "criterion 1 (prox oracles)",
            f"inf-norm dev {dev_linf:.2e} (tol 1e-6), "
            f"group dev {dev_group:.2e} (tol 1e-8), {took:.1f}s (<10s)")


# ---------------------------------------------------------------------------
# 2. solver objective vs independently computed optimum
# ---------------------------------------------------------------------------

def test_criterion_2_solver_vs_reference(request):
    rng = np.random.default_rng(2)
    lams = (0.0, 1.0, 10.0)
    worst = 0.0
    t0 = time.perf_counter()
    for i in range(20):
        s_r, h_r, kappa = random_instance(rng, m=8, k=4)
        lam = lams[i % 3]
        _, obj_ref = reference_solution(s_r, h_r, kappa, lam)
        cfg = SolverConfig(lam=lam, kappa=kappa, gamma_scale=0.9, psi=1.5,
                           max_iters=60_000, tolerance=1e-12)
        state = solve(s_r, h_r, cfg)
        obj = float(objective(state.a_r, s_r, h_r, kappa, lam))
        worst = max(worst, abs(obj - obj_ref) / abs(obj_ref))
    took = time.perf_counter() - t0
    ok = worst <= 1e-4 and took < 60.0
    _report(request, ok, "criterion 2 (solver vs reference)",
            f"worst relative objective gap {worst:.2e} over 20 instances "
            f"(tol 1e-4), {took:.1f}s (<60s)")


# ---------------------------------------------------------------------------
# 3. data-term gradient vs central finite differences
# ---------------------------------------------------------------------------

def test_criterion_3_gradient_check(request):
    rng = np.random.default_rng(3)
    worst = 0.0
    t0 = time.perf_counter()
    for _ in range(50):
        m = int(rng.integers(2, 10))
        k = int(rng.integers(1, 6))
        s_r, h_r, _ = random_instance(rng, m=m, k=k)
        a = rng.standard_normal(2 * m)
        g = grad_d1(a, s_r, h_r)
        eps = 1e-6
        fd = np.empty_like(g)
        for i in range(a.size):
            up, dn = a.copy(), a.copy()
            up[i] += eps
            dn[i] -= eps
            fd[i] = (objective(up, s_r, h_r, 0, 0)
                     - objective(dn, s_r, h_r, 0, 0)) / (2 * eps)
        worst = max(worst, float(np.linalg.norm(fd - g) / np.linalg.norm(g)))
    took = time.perf_counter() - t0
    ok = worst <= 1e-5 and took < 5.0
    _report(request, ok, "criterion 3 (gradient check)",
            f"worst relative FD error {worst:.2e} over 50 instances "
            f"(tol 1e-5), {took:.1f}s (<5s)")


# ---------------------------------------------------------------------------
# 4-6. scaled Monte Carlo run, shared across the trend criteria
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def scaled_run():
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
    t0 = time.perf_counter()
    result = run_experiment(plan, threads=1)
    return result, time.perf_counter() - t0


def test_criterion_4_activity_trend(request, scaled_run):
    result, took = scaled_run
    act = result.avg_active_antennas  # (n_lam,); == percent since L*N = 100
    ok = (act[0] >= 95.0
          and 70.0 <= act[1] <= 90.0
          and 40.0 <= act[2] <= 60.0
          and took < 1800.0)
    _report(request, ok, "criterion 4 (activity trend)",
            f"active antennas at lambda (1, 15, 25) = "
            f"({act[0]:.1f}, {act[1]:.1f}, {act[2]:.1f}) of 100 "
            f"vs windows (>=95, 80+/-10, 50+/-10); "
            f"run took {took / 60:.1f} min (<30)")


def test_criterion_5_benchmark_ordering(request, scaled_run):
    result, _ = scaled_run
    ber = result.overall_avg_ber  # rows: lambda; cols: green, aligned, acr
    g15, a15, r15 = ber[1]
    g25, a25, r25 = ber[2]
    ok = (g15 < a15 and g15 < r15
          and g25 < a25 and g25 < r25
          and r25 >= a25)
    _report(request, ok, "criterion 5 (benchmark ordering)",
            f"BER lambda=15: green {g15:.4f} < aligned {a15:.4f}, "
            f"acr {r15:.4f}; lambda=25: green {g25:.4f} < aligned {a25:.4f} "
            f"<= acr {r25:.4f}")


def test_criterion_6_monotone_sparsity(request, scaled_run):
    result, _ = scaled_run
    per_setup = result.green_active_per_setup  # (num_setups, n_lam)
    diffs = np.diff(per_setup, axis=1)
    violations = int((diffs > 1e-9).sum())
    rate = violations / diffs.size
    ok = rate <= 0.02
    _report(request, ok, "criterion 6 (monotone sparsity)",
            f"{violations}/{diffs.size} increasing steps across setups "
            f"({rate:.1%}, tol 2%)")


# ---------------------------------------------------------------------------
# 7. byte-identical CSVs for any worker count
# ---------------------------------------------------------------------------

def test_criterion_7_csv_determinism(request, tmp_path):
    plan = ExperimentPlan(
        network=NetworkConfig(num_aps=12, num_ues=3, seed=7),
        solver=SolverConfig(gamma_scale=0.9, psi=1.5, max_iters=200,
                            tolerance=0.0),
        lambdas=(0.5, 2.0),
        bits_per_ue=40,
        num_setups=2,
        master_seed=7,
        batch_size=7,
    )
    blobs = {}
    for threads in (1, 3):
        res = run_experiment(plan, threads=threads)
        ber = tmp_path / f"ber_{threads}.csv"
        act = tmp_path / f"activity_{threads}.csv"
        write_ber_csv(str(ber), res)
        write_activity_csv(str(act), res)
        blobs[threads] = (ber.read_bytes(), act.read_bytes())
    ok = blobs[1] == blobs[3]
    _report(request, ok, "criterion 7 (determinism)",
            "1-thread and 3-thread CSVs byte-identical" if ok
            else "1-thread and 3-thread CSVs differ")


# ---------------------------------------------------------------------------
# 8. demodulation is invariant to the positive receiver scale
# ---------------------------------------------------------------------------

def test_criterion_8_qpsk_scale_invariance(request):
    rng = np.random.default_rng(8)
    bad = 0
    for _ in range(1000):
        shat = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        beta = float(10.0 ** rng.uniform(-6.0, 6.0))
        if not np.array_equal(demodulate(shat), demodulate(beta * shat)):
            bad += 1
    ok = bad == 0
    _report(request, ok, "criterion 8 (scale invariance)",
            f"{bad}/1000 scaled pairs demodulated differently")
