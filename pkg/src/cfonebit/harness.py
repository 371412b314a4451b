"""Monte Carlo BER experiment harness.

Runs the full protocol: per-setup channel draws, QPSK symbol streams, the
sparsity-regularized one-bit precoder with its aligned/random-deactivation
benchmarks, transmission over the noisy downlink, and per-UE bit error
accounting across a lambda sweep.

Reproducibility scheme
----------------------
Every random draw derives from ``ExperimentPlan.master_seed`` through tagged
``numpy.random.SeedSequence`` streams:

* channel of setup i:       (master_seed, TAG_CHANNEL, i)
* traffic of symbol t:      (master_seed, TAG_TRAFFIC, i, t)   (bits + noise)
* random deactivation:      (master_seed, TAG_ACR, i, lambda_index, t)

Traffic streams do not depend on lambda or precoder, so every precoder sees
identical payloads and noise; error counts are integers and blocks write to
disjoint accumulator slots, so results are bit-identical for any worker
count and any batch partition of fixed size.
"""

from __future__ import annotations

import dataclasses
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import qpsk
from .baselines import acr_mask, rzf_precode_block, squid_precode_block
from .channel import ChannelMatrix, sample_channel
from .config import ExperimentPlan, Precoder
from .precoder import BlockPrecodeResult, PrecodeSolution, kappa_for, precode_block

TAG_CHANNEL = 101
TAG_TRAFFIC = 202
TAG_ACR = 303

MAX_FALLBACK_RATE = 0.01


class HarnessError(RuntimeError):
    """Aborted run (for example, excessive precoder failure rate)."""


@dataclass(frozen=True)
class RunResult:
    """Aggregated experiment outputs; axes ordered (lambda, precoder, ue)."""

    lambdas: tuple[float, ...]
    precoders: tuple[Precoder, ...]
    num_ues: int
    num_antennas: int
    num_setups: int
    bits_per_ue: int
    per_ue_avg_ber: np.ndarray        # (n_lam, n_prec, K)
    per_ue_ranked_ber: np.ndarray     # same, sorted ascending per (lam, prec)
    overall_avg_ber: np.ndarray       # (n_lam, n_prec)
    avg_active_antennas: np.ndarray   # (n_lam,) green precoder activity
    activity_by_precoder: np.ndarray  # (n_lam, n_prec)
    green_active_per_setup: np.ndarray  # (num_setups, n_lam)
    fallbacks: dict[str, int]
    timings: dict[str, float]
    seed_manifest: dict


# ---------------------------------------------------------------------------
# seeded streams
# ---------------------------------------------------------------------------

def channel_for_setup(plan: ExperimentPlan, setup: int) -> ChannelMatrix:
    rng = np.random.default_rng(
        np.random.SeedSequence((plan.master_seed, TAG_CHANNEL, setup)))
    return sample_channel(plan.network, rng)


def _traffic_block(master: int, setup: int, start: int, stop: int,
                   k: int) -> tuple[np.ndarray, np.ndarray]:
    """Payload bits (K, B, 2) and unit-variance noise (K, B) for a block."""
    batch = stop - start
    bits = np.empty((k, batch, 2), dtype=np.uint8)
    noise = np.empty((k, batch), dtype=complex)
    for j, sym in enumerate(range(start, stop)):
        g = np.random.default_rng(
            np.random.SeedSequence((master, TAG_TRAFFIC, setup, sym)))
        bits[:, j, :] = g.integers(0, 2, size=(k, 2), dtype=np.uint8)
        re = g.standard_normal(k)
        im = g.standard_normal(k)
        noise[:, j] = (re + 1j * im) / np.sqrt(2.0)
    return bits, noise


def _acr_masks(master: int, setup: int, lam_idx: int, start: int, stop: int,
               counts: np.ndarray, m: int) -> np.ndarray:
    """Per-symbol random masks matching the green precoder's active counts.

    Both ACR variants of a symbol share one mask draw."""
    out = np.zeros((m, stop - start), dtype=bool)
    for j, sym in enumerate(range(start, stop)):
        g = np.random.default_rng(
            np.random.SeedSequence((master, TAG_ACR, setup, lam_idx, sym)))
        out[:, j] = acr_mask(int(counts[j]), m, g)
    return out


def transmit_symbol(sol: PrecodeSolution, channel: ChannelMatrix,
                    rng: np.random.Generator) -> np.ndarray:
    """Receive side of one channel use: shat = beta * (H x + noise)."""
    k = channel.num_ues
    noise = (rng.standard_normal(k) + 1j * rng.standard_normal(k)) / np.sqrt(2.0)
    return sol.beta * (channel.h @ sol.x + noise * np.sqrt(channel.sigma2))


# ---------------------------------------------------------------------------
# per-block worker
# ---------------------------------------------------------------------------

@dataclass
class _BlockStats:
    errors: dict[Precoder, np.ndarray] = field(default_factory=dict)
    active: dict[Precoder, int] = field(default_factory=dict)
    seconds: dict[Precoder, float] = field(default_factory=dict)
    green_fallbacks: int = 0
    green_symbols: int = 0
    green_active: int = 0


def _count_errors(res: BlockPrecodeResult, channel: ChannelMatrix,
                  noise: np.ndarray, bits: np.ndarray) -> np.ndarray:
    shat = res.beta[None, :] * (channel.h @ res.x + noise)
    rx = qpsk.demodulate(shat)
    return (rx != bits).sum(axis=(1, 2)).astype(np.int64)


def _run_block(plan: ExperimentPlan, channel: ChannelMatrix, lam: float,
               lam_idx: int, setup: int, start: int, stop: int,
               include_plain: bool) -> _BlockStats:
    net = plan.network
    k, m = channel.h.shape
    bits, noise_unit = _traffic_block(plan.master_seed, setup, start, stop, k)
    sym = qpsk.modulate(bits)
    noise = noise_unit * np.sqrt(channel.sigma2)
    kappa = kappa_for(net.antennas_per_ap, k, channel.sigma2, net.downlink_power_w)
    base_cfg = dataclasses.replace(plan.solver, kappa=kappa)

    stats = _BlockStats()
    green: BlockPrecodeResult | None = None
    if any(p.needs_green_mask for p in plan.precoders):
        green = precode_block(sym, channel, base_cfg.with_lam(lam),
                              net.downlink_power_w, net.antennas_per_ap,
                              plan.tau_off, on_all_off="strongest")
        stats.green_fallbacks = green.fallbacks
        stats.green_symbols = stop - start
        stats.green_active = int(green.active_mask.sum())

    masks_acr: np.ndarray | None = None
    if any(p.is_acr for p in plan.precoders):
        counts = green.active_mask.sum(axis=0)
        masks_acr = _acr_masks(plan.master_seed, setup, lam_idx, start, stop,
                               counts, m)

    for p in plan.precoders:
        if p.family in ("rzf1", "squid") and not (p.is_aligned or p.is_acr) \
                and not include_plain:
            continue  # lambda-independent; computed once at the first lambda
        if p is Precoder.GREEN:
            res = green
        else:
            masks = None
            if p.is_aligned:
                masks = green.active_mask
            elif p.is_acr:
                masks = masks_acr
            if p.family == "rzf1":
                res = rzf_precode_block(sym, channel, masks, plan.rzf_reg_scale,
                                        net.downlink_power_w, net.antennas_per_ap)
            else:
                res = squid_precode_block(sym, channel, base_cfg, masks,
                                          net.downlink_power_w, net.antennas_per_ap)
        stats.errors[p] = _count_errors(res, channel, noise, bits)
        stats.active[p] = int(res.active_mask.sum())
        stats.seconds[p] = res.seconds
    return stats


# ---------------------------------------------------------------------------
# experiment driver
# ---------------------------------------------------------------------------

def run_experiment(plan: ExperimentPlan, threads: int = 1,
                   progress: Callable[[int, int], None] | None = None) -> RunResult:
    """Execute a plan and aggregate BER/activity tables.

    ``threads`` parallelizes over (setup, lambda, symbol-block) tasks; the
    result is bit-identical for any thread count.  ``progress(done, total)``
    is invoked from the coordinating thread as tasks complete.
    """
    plan.validate()
    if threads < 1:
        raise ValueError("threads must be >= 1")
    n_lam = len(plan.lambdas)
    n_prec = len(plan.precoders)
    k = plan.network.num_ues
    m = plan.network.num_antennas
    sym_per_setup = plan.symbols_per_setup

    channels = [channel_for_setup(plan, i) for i in range(plan.num_setups)]

    blocks = [(start, min(start + plan.batch_size, sym_per_setup))
              for start in range(0, sym_per_setup, plan.batch_size)]
    tasks = [(setup, lam_idx, start, stop)
             for setup in range(plan.num_setups)
             for lam_idx in range(n_lam)
             for (start, stop) in blocks]

    def run_task(t):
        setup, lam_idx, start, stop = t
        return _run_block(plan, channels[setup], plan.lambdas[lam_idx],
                          lam_idx, setup, start, stop,
                          include_plain=(lam_idx == 0))

    results: list[_BlockStats] = []
    if threads == 1:
        for i, t in enumerate(tasks):
            results.append(run_task(t))
            if progress:
                progress(i + 1, len(tasks))
    else:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            for i, stats in enumerate(ex.map(run_task, tasks)):
                results.append(stats)
                if progress:
                    progress(i + 1, len(tasks))

    # --- aggregate (sequential, fixed task order) ---
    errors = np.zeros((plan.num_setups, n_lam, n_prec, k), dtype=np.int64)
    active = np.zeros((plan.num_setups, n_lam, n_prec), dtype=np.int64)
    green_active = np.zeros((plan.num_setups, n_lam), dtype=np.int64)
    timings = {p.value: 0.0 for p in plan.precoders}
    green_fallbacks = 0
    green_symbols = 0

    for t, stats in zip(tasks, results):
        setup, lam_idx, _, _ = t
        for p, err in stats.errors.items():
            pi = plan.precoders.index(p)
            errors[setup, lam_idx, pi] += err
            active[setup, lam_idx, pi] += stats.active[p]
            timings[p.value] += stats.seconds[p]
        green_active[setup, lam_idx] += stats.green_active
        green_fallbacks += stats.green_fallbacks
        green_symbols += stats.green_symbols

    # mask-free baselines are lambda-independent: replicate their first-lambda
    # results across the grid instead of recomputing identical solves
    for pi, p in enumerate(plan.precoders):
        if p.family in ("rzf1", "squid") and not (p.is_aligned or p.is_acr):
            for lam_idx in range(1, n_lam):
                errors[:, lam_idx, pi] = errors[:, 0, pi]
                active[:, lam_idx, pi] = active[:, 0, pi]

    if green_symbols and green_fallbacks / green_symbols > MAX_FALLBACK_RATE:
        raise HarnessError(
            f"precoder failure rate {green_fallbacks / green_symbols:.2%} exceeds "
            f"{MAX_FALLBACK_RATE:.0%} ({green_fallbacks}/{green_symbols} symbols "
            "rescued from all-off quantization)")

    per_setup_ber = errors / float(plan.bits_per_ue)       # (S, n_lam, n_prec, K)
    per_ue = per_setup_ber.mean(axis=0)                    # (n_lam, n_prec, K)
    ranked = np.sort(per_ue, axis=-1)
    overall = per_ue.mean(axis=-1)
    act_by_prec = active.sum(axis=0) / float(plan.num_setups * sym_per_setup)
    green_act_setup = green_active / float(sym_per_setup)  # (S, n_lam)
    has_green_info = any(p.needs_green_mask for p in plan.precoders)
    avg_active = green_act_setup.mean(axis=0) if has_green_info \
        else np.full(n_lam, float(m))

    seed_manifest = {
        "master_seed": plan.master_seed,
        "streams": {
            "channel": [plan.master_seed, TAG_CHANNEL, "<setup>"],
            "traffic": [plan.master_seed, TAG_TRAFFIC, "<setup>", "<symbol>"],
            "acr": [plan.master_seed, TAG_ACR, "<setup>", "<lambda_index>", "<symbol>"],
        },
    }
    return RunResult(
        lambdas=tuple(plan.lambdas), precoders=tuple(plan.precoders),
        num_ues=k, num_antennas=m, num_setups=plan.num_setups,
        bits_per_ue=plan.bits_per_ue,
        per_ue_avg_ber=per_ue, per_ue_ranked_ber=ranked,
        overall_avg_ber=overall, avg_active_antennas=avg_active,
        activity_by_precoder=act_by_prec,
        green_active_per_setup=green_act_setup,
        fallbacks={"green": green_fallbacks, "green_symbols": green_symbols},
        timings=timings, seed_manifest=seed_manifest,
    )
