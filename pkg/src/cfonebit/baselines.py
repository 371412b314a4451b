"""Benchmark precoders: one-bit RZF, a SQUID-style splitting baseline, and
random antenna deactivation (ACR).

All baselines emit codebook-valid transmit vectors under an externally
supplied antenna mask, so they can be "aligned" (reuse the green precoder's
per-symbol mask) or "ACR" (random mask of the same size).  RZF is the
classic regularized zero-forcing solution sign-quantized per component; the
SQUID-style baseline reuses the splitting engine with the group-sparsity
weight removed and every active antenna forced to transmit.
"""

from __future__ import annotations

import time

import numpy as np

from .channel import ChannelMatrix, lift_vector
from .config import SolverConfig
from .precoder import (BlockPrecodeResult, PrecodeSolution, codebook_level,
                       mse_value, optimal_beta, sign_nonneg)
from .splitting import solve_batch


def rzf_weights(h: np.ndarray, s: np.ndarray, reg: float) -> np.ndarray:
    """Linear RZF in dual form: w = H^H (H H^H + reg*I)^-1 s.

    ``s`` may be a (K,) vector or (K, B) batch sharing the same channel.
    """
    k_num = h.shape[0]
    gram = h @ h.conj().T + reg * np.eye(k_num)
    return h.conj().T @ np.linalg.solve(gram, s)


def rzf_precode_block(sym: np.ndarray, channel: ChannelMatrix,
                      masks: np.ndarray | None, reg_scale: float,
                      power: float = 1.0, antennas_per_ap: int = 1) -> BlockPrecodeResult:
    """One-bit RZF on a (K, B) block with optional per-symbol masks.

    Inactive columns of the channel are removed before the RZF solve (the
    K x K Gram is downdated when only a few antennas are off, rebuilt
    otherwise); every active antenna transmits its component signs.
    """
    t0 = time.perf_counter()
    h = channel.h
    k_num, m = h.shape
    batch = sym.shape[1]
    reg = reg_scale * k_num * channel.sigma2 / power
    level = codebook_level(power, antennas_per_ap)
    eye = reg * np.eye(k_num)

    if masks is None:
        w = rzf_weights(h, sym, reg)
        x = level * (sign_nonneg(w.real) + 1j * sign_nonneg(w.imag))
        active = np.ones((m, batch), dtype=bool)
        b_r = lift_vector(w)
    else:
        active = np.asarray(masks, dtype=bool)
        gram_full = h @ h.conj().T
        x = np.zeros((m, batch), dtype=complex)
        b_r = np.zeros((2 * m, batch))
        for t in range(batch):
            on = active[:, t]
            n_off = m - int(on.sum())
            if n_off == 0:
                gram = gram_full
            elif n_off <= m // 2:
                h_off = h[:, ~on]
                gram = gram_full - h_off @ h_off.conj().T
            else:
                h_on = h[:, on]
                gram = h_on @ h_on.conj().T
            z = np.linalg.solve(gram + eye, sym[:, t])
            w_on = h[:, on].conj().T @ z
            x[on, t] = level * (sign_nonneg(w_on.real) + 1j * sign_nonneg(w_on.imag))
            b_r[np.concatenate([np.where(on)[0], m + np.where(on)[0]]), t] = \
                np.concatenate([w_on.real, w_on.imag])
    beta = optimal_beta(x, sym, h, channel.sigma2)
    mse = mse_value(x, beta, sym, h, channel.sigma2)
    return BlockPrecodeResult(b_r=b_r, x=x, beta=np.atleast_1d(beta),
                              active_mask=active, mse=np.atleast_1d(mse),
                              iters=np.zeros(batch, dtype=int), fallbacks=0,
                              seconds=time.perf_counter() - t0)


def rzf_precode(s: np.ndarray, channel: ChannelMatrix,
                active_mask: np.ndarray | None = None, reg_scale: float = 1.0,
                power: float = 1.0, antennas_per_ap: int = 1) -> PrecodeSolution:
    """Single-symbol one-bit RZF (see :func:`rzf_precode_block`)."""
    masks = None if active_mask is None else np.asarray(active_mask, bool)[:, None]
    out = rzf_precode_block(s[:, None], channel, masks, reg_scale,
                            power=power, antennas_per_ap=antennas_per_ap)
    return PrecodeSolution(b_r=out.b_r[:, 0], x=out.x[:, 0], beta=float(out.beta[0]),
                           active_mask=out.active_mask[:, 0], mse=float(out.mse[0]))


def squid_precode_block(sym: np.ndarray, channel: ChannelMatrix, cfg: SolverConfig,
                        masks: np.ndarray | None = None,
                        power: float = 1.0, antennas_per_ap: int = 1) -> BlockPrecodeResult:
    """SQUID-style one-bit precoding: the splitting engine without the
    group-sparsity term, every unmasked antenna forced on.

    With ``masks`` given, masked antennas are excluded from the solve itself
    (coordinate pinning, equivalent to deleting channel columns); the active
    ones are sign-quantized regardless of magnitude — there is no zero level
    in this baseline.
    """
    t0 = time.perf_counter()
    m = channel.h.shape[1]
    batch = sym.shape[1]
    coord_mask = None
    if masks is not None:
        masks = np.asarray(masks, dtype=bool)
        coord_mask = np.concatenate([masks, masks], axis=0)
    out = solve_batch(lift_vector(sym), channel.h_r, cfg.with_lam(0.0),
                      coord_mask=coord_mask,
                      smax_sq=channel.largest_singular_value_sq)
    active = np.ones((m, batch), dtype=bool) if masks is None else masks
    level = codebook_level(power, antennas_per_ap)
    x = level * (sign_nonneg(out.a_r[:m]) + 1j * sign_nonneg(out.a_r[m:])) * active
    beta = optimal_beta(x, sym, channel.h, channel.sigma2)
    mse = mse_value(x, beta, sym, channel.h, channel.sigma2)
    return BlockPrecodeResult(b_r=out.a_r, x=x, beta=np.atleast_1d(beta),
                              active_mask=active, mse=np.atleast_1d(mse),
                              iters=out.iters, fallbacks=0,
                              seconds=time.perf_counter() - t0)


def squid_precode(s: np.ndarray, channel: ChannelMatrix, cfg: SolverConfig,
                  active_mask: np.ndarray | None = None,
                  power: float = 1.0, antennas_per_ap: int = 1) -> PrecodeSolution:
    """Single-symbol SQUID-style precoding."""
    masks = None if active_mask is None else np.asarray(active_mask, bool)[:, None]
    out = squid_precode_block(s[:, None], channel, cfg, masks,
                              power=power, antennas_per_ap=antennas_per_ap)
    return PrecodeSolution(b_r=out.b_r[:, 0], x=out.x[:, 0], beta=float(out.beta[0]),
                           active_mask=out.active_mask[:, 0], mse=float(out.mse[0]))


def acr_mask(target_active: int, m: int, rng: np.random.Generator) -> np.ndarray:
    """Uniformly random mask with exactly ``target_active`` antennas on."""
    if not (1 <= target_active <= m):
        raise ValueError(f"target_active must be in [1, {m}], got {target_active}")
    mask = np.zeros(m, dtype=bool)
    mask[rng.choice(m, size=target_active, replace=False)] = True
    return mask
