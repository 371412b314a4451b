"""Mapping relaxed solver outputs to the one-bit transmit codebook.

Each antenna either transmits a point of {±sqrt(P/2N) ± j sqrt(P/2N)} or is
shut down (exact zero).  The relaxed solution chooses which: groups whose
norm falls below a small fraction of the largest group norm are switched
off, the rest keep only their component signs.  The receiver-side scale
beta is recovered afterwards as the minimizer of the reception MSE for the
quantized vector — the solver's own scale is discarded.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .channel import ChannelMatrix, lift_vector
from .config import SolverConfig
from .splitting import group_norms, solve, solve_batch

BETA_FLOOR = 1e-12


class AllAntennasOffError(RuntimeError):
    """The quantizer switched every antenna off (no transmit signal)."""


def kappa_for(antennas_per_ap: int, num_ues: int, sigma2: float, power: float) -> float:
    """Infinity-norm weight 2*N*K*sigma^2 / P tying the relaxation to the
    per-antenna power constraint."""
    return 2.0 * antennas_per_ap * num_ues * sigma2 / power


def codebook_level(power: float, antennas_per_ap: int) -> float:
    """Per-component magnitude sqrt(P / (2N)) of an active antenna."""
    return float(np.sqrt(power / (2.0 * antennas_per_ap)))


def sign_nonneg(v: np.ndarray) -> np.ndarray:
    """Component sign with sign(0) = +1."""
    return np.where(v < 0, -1.0, 1.0)


def quantize(b_r: np.ndarray, power: float, antennas_per_ap: int,
             tau_off: float) -> tuple[np.ndarray, np.ndarray]:
    """Map a relaxed vector (or column batch) to the codebook.

    Antenna m goes dark iff its group norm is <= tau_off times the largest
    group norm (an all-zero input turns everything off); active antennas
    keep component signs at the codebook level.  Scale-invariant in b_r.
    """
    gn = group_norms(b_r)
    top = gn.max(axis=0)
    active = gn > tau_off * top
    level = codebook_level(power, antennas_per_ap)
    m = b_r.shape[0] // 2
    x = level * (sign_nonneg(b_r[:m]) + 1j * sign_nonneg(b_r[m:])) * active
    return x, active


def optimal_beta(x: np.ndarray, s: np.ndarray, h: np.ndarray, sigma2: float) -> float | np.ndarray:
    """MSE-optimal receiver scale for a fixed transmit vector.

    beta = Re(s^H H x) / (||Hx||^2 + K sigma^2), floored at a tiny positive
    value to honor beta > 0.  Vector inputs give a scalar; (K, B) batches
    give one beta per column.
    """
    x = np.asarray(x)
    if not np.any(x != 0, axis=0).all():
        raise AllAntennasOffError("all antennas deactivated")
    hx = h @ x
    num = (np.conj(s) * hx).real.sum(axis=0)
    den = (np.abs(hx) ** 2).sum(axis=0) + s.shape[0] * sigma2
    return np.maximum(BETA_FLOOR, num / den)


def mse_value(x: np.ndarray, beta: float | np.ndarray, s: np.ndarray,
              h: np.ndarray, sigma2: float) -> float | np.ndarray:
    """Reception MSE ||s - beta*H*x||^2 + sigma^2 * K * beta^2."""
    err = s - beta * (h @ x)
    return (np.abs(err) ** 2).sum(axis=0) + sigma2 * s.shape[0] * beta**2


@dataclass(frozen=True)
class PrecodeSolution:
    """One precoded symbol: relaxed vector, codebook vector, scale, mask."""

    b_r: np.ndarray
    x: np.ndarray
    beta: float
    active_mask: np.ndarray
    mse: float


def precode_symbol(s: np.ndarray, channel: ChannelMatrix, solver_cfg: SolverConfig,
                   tau_off: float = 1e-3, power: float = 1.0,
                   antennas_per_ap: int = 1) -> PrecodeSolution:
    """Solve, quantize, and rescale one symbol vector.

    ``solver_cfg.kappa`` must already hold 2NK*sigma^2/P for the target
    network (:func:`kappa_for`).  Raises :class:`AllAntennasOffError` when
    quantization leaves no antenna active (callers may fall back; the
    Monte Carlo harness activates the strongest group and counts the
    event).
    """
    state = solve(lift_vector(s), channel.h_r, solver_cfg,
                  smax_sq=channel.largest_singular_value_sq)
    x, active = quantize(state.a_r, power, antennas_per_ap, tau_off)
    if not active.any():
        raise AllAntennasOffError("all antennas deactivated")
    beta = float(optimal_beta(x, s, channel.h, channel.sigma2))
    mse = float(mse_value(x, beta, s, channel.h, channel.sigma2))
    return PrecodeSolution(b_r=state.a_r, x=x, beta=beta, active_mask=active, mse=mse)


@dataclass(frozen=True)
class BlockPrecodeResult:
    """Column-stacked precoding results for a batch of symbols."""

    b_r: np.ndarray          # (2M, B) relaxed vectors
    x: np.ndarray            # (M, B) codebook vectors
    beta: np.ndarray         # (B,)
    active_mask: np.ndarray  # (M, B) bool
    mse: np.ndarray          # (B,)
    iters: np.ndarray        # (B,) solver iterations
    fallbacks: int           # symbols rescued from an all-off quantization
    seconds: float


def precode_block(sym: np.ndarray, channel: ChannelMatrix, solver_cfg: SolverConfig,
                  power: float, antennas_per_ap: int, tau_off: float,
                  on_all_off: str = "strongest") -> BlockPrecodeResult:
    """Batched precoding of a (K, B) symbol block over a shared channel.

    ``on_all_off`` selects the degenerate-output policy: "strongest"
    activates the largest-norm group (counted in ``fallbacks``); "raise"
    propagates :class:`AllAntennasOffError`.
    """
    t0 = time.perf_counter()
    out = solve_batch(lift_vector(sym), channel.h_r, solver_cfg,
                      smax_sq=channel.largest_singular_value_sq)
    x, active = quantize(out.a_r, power, antennas_per_ap, tau_off)
    dead = ~active.any(axis=0)
    fallbacks = int(dead.sum())
    if fallbacks:
        if on_all_off == "raise":
            raise AllAntennasOffError("all antennas deactivated")
        level = codebook_level(power, antennas_per_ap)
        m = x.shape[0]
        strongest = group_norms(out.a_r[:, dead]).argmax(axis=0)
        cols = np.where(dead)[0]
        active[strongest, cols] = True
        x[strongest, cols] = level * (
            sign_nonneg(out.a_r[strongest, cols])
            + 1j * sign_nonneg(out.a_r[m + strongest, cols]))
    beta = optimal_beta(x, sym, channel.h, channel.sigma2)
    mse = mse_value(x, beta, sym, channel.h, channel.sigma2)
    return BlockPrecodeResult(b_r=out.a_r, x=x, beta=beta, active_mask=active,
                              mse=mse, iters=out.iters, fallbacks=fallbacks,
                              seconds=time.perf_counter() - t0)
