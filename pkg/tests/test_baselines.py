import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cfonebit.baselines import (acr_mask, rzf_precode, rzf_precode_block,
                                rzf_weights, squid_precode,
                                squid_precode_block)
from cfonebit.channel import ChannelMatrix
from cfonebit.config import SolverConfig
from cfonebit.precoder import kappa_for
from cfonebit.splitting import solve_batch
from cfonebit.channel import lift_vector


def _channel(rng, k=3, m=8):
    h = (rng.standard_normal((k, m)) + 1j * rng.standard_normal((k, m))) / np.sqrt(2)
    return ChannelMatrix.from_h(h, sigma2=1.0)


def _qpsk_block(rng, k, b):
    return (rng.choice([-1.0, 1.0], (k, b))
            + 1j * rng.choice([-1.0, 1.0], (k, b))) / np.sqrt(2)


# ---------------------------------------------------------------------------
# one-bit RZF
# ---------------------------------------------------------------------------

def test_rzf_weights_dual_equals_primal():
    rng = np.random.default_rng(0)
    ch = _channel(rng)
    s = _qpsk_block(rng, 3, 2)
    reg = 0.7
    w = rzf_weights(ch.h, s, reg)
    m = ch.h.shape[1]
    primal = np.linalg.solve(ch.h.conj().T @ ch.h + reg * np.eye(m),
                             ch.h.conj().T @ s)
    np.testing.assert_allclose(w, primal, atol=1e-10)


def test_rzf_block_unmasked():
    rng = np.random.default_rng(1)
    ch = _channel(rng)
    sym = _qpsk_block(rng, 3, 4)
    out = rzf_precode_block(sym, ch, masks=None, reg_scale=1.0)
    assert out.active_mask.all()
    w = rzf_weights(ch.h, sym, 3 * 1.0 / 1.0)  # K * sigma2 / P
    level = np.sqrt(0.5)
    expect = level * (np.where(w.real < 0, -1, 1) + 1j * np.where(w.imag < 0, -1, 1))
    np.testing.assert_array_equal(out.x, expect)
    np.testing.assert_array_equal(out.b_r, lift_vector(w))
    assert (out.beta > 0).all()


@pytest.mark.parametrize("n_off", [1, 6])  # exercises downdate and rebuild paths
def test_rzf_masked_equals_submatrix_solve(n_off):
    rng = np.random.default_rng(2)
    ch = _channel(rng, k=3, m=8)
    sym = _qpsk_block(rng, 3, 3)
    masks = np.ones((8, 3), dtype=bool)
    for t in range(3):
        off = rng.choice(8, size=n_off, replace=False)
        masks[off, t] = False
    out = rzf_precode_block(sym, ch, masks, reg_scale=1.0)
    for t in range(3):
        on = masks[:, t]
        sub = ChannelMatrix.from_h(ch.h[:, on], sigma2=1.0)
        ref = rzf_precode_block(sym[:, t:t + 1], sub, masks=None, reg_scale=1.0)
        np.testing.assert_allclose(out.x[on, t], ref.x[:, 0], atol=1e-9)
        np.testing.assert_array_equal(out.x[~on, t], 0)
        assert out.beta[t] == pytest.approx(float(ref.beta[0]))


def test_rzf_solo_wrapper():
    rng = np.random.default_rng(3)
    ch = _channel(rng)
    s = _qpsk_block(rng, 3, 1)[:, 0]
    mask = np.array([True] * 6 + [False] * 2)
    solo = rzf_precode(s, ch, active_mask=mask)
    block = rzf_precode_block(s[:, None], ch, mask[:, None], reg_scale=1.0)
    np.testing.assert_array_equal(solo.x, block.x[:, 0])
    assert solo.beta == float(block.beta[0])
    np.testing.assert_array_equal(solo.active_mask, mask)


def test_rzf_reg_scale_changes_solution():
    rng = np.random.default_rng(4)
    ch = _channel(rng)
    sym = _qpsk_block(rng, 3, 1)
    a = rzf_precode_block(sym, ch, None, reg_scale=1.0)
    b = rzf_precode_block(sym, ch, None, reg_scale=100.0)
    assert not np.allclose(a.b_r, b.b_r)


# ---------------------------------------------------------------------------
# SQUID-style baseline
# ---------------------------------------------------------------------------

def test_squid_is_sign_quantized_lambda_zero_solve():
    rng = np.random.default_rng(5)
    ch = _channel(rng)
    sym = _qpsk_block(rng, 3, 2)
    cfg = SolverConfig(lam=7.0, kappa=kappa_for(1, 3, 1.0, 1.0),
                       max_iters=80, tolerance=0.0)
    out = squid_precode_block(sym, ch, cfg)
    # the lam on the config must be ignored (replaced by 0)
    ref = solve_batch(lift_vector(sym), ch.h_r, cfg.with_lam(0.0),
                      smax_sq=ch.largest_singular_value_sq)
    m = 8
    level = np.sqrt(0.5)
    expect = level * (np.where(ref.a_r[:m] < 0, -1, 1)
                      + 1j * np.where(ref.a_r[m:] < 0, -1, 1))
    np.testing.assert_array_equal(out.x, expect)
    assert out.active_mask.all()
    assert (np.abs(out.x) > 0).all()  # no zero level in this baseline


def test_squid_masked_excludes_antennas_from_solve():
    rng = np.random.default_rng(6)
    ch = _channel(rng, k=3, m=6)
    sym = _qpsk_block(rng, 3, 2)
    cfg = SolverConfig(lam=0.0, kappa=kappa_for(1, 3, 1.0, 1.0),
                       max_iters=100, tolerance=0.0)
    masks = np.array([[True, True, False, True, False, True],
                      [True, False, True, True, True, False]]).T
    out = squid_precode_block(sym, ch, cfg, masks=masks)
    np.testing.assert_array_equal(out.active_mask, masks)
    np.testing.assert_array_equal(out.x[~masks], 0)
    for t in range(2):
        on = masks[:, t]
        sub = ChannelMatrix.from_h(ch.h[:, on], sigma2=1.0)
        ref = solve_batch(lift_vector(sym[:, t:t + 1]), sub.h_r, cfg,
                          smax_sq=ch.largest_singular_value_sq)
        level = np.sqrt(0.5)
        n_on = on.sum()
        expect = level * (np.where(ref.a_r[:n_on, 0] < 0, -1, 1)
                          + 1j * np.where(ref.a_r[n_on:, 0] < 0, -1, 1))
        np.testing.assert_array_equal(out.x[on, t], expect)


def test_squid_solo_wrapper():
    rng = np.random.default_rng(7)
    ch = _channel(rng)
    s = _qpsk_block(rng, 3, 1)[:, 0]
    cfg = SolverConfig(kappa=kappa_for(1, 3, 1.0, 1.0), max_iters=60, tolerance=0.0)
    solo = squid_precode(s, ch, cfg)
    block = squid_precode_block(s[:, None], ch, cfg)
    np.testing.assert_array_equal(solo.x, block.x[:, 0])
    assert solo.beta == float(block.beta[0])


# ---------------------------------------------------------------------------
# random deactivation masks
# ---------------------------------------------------------------------------

@given(st.integers(1, 24), st.integers(0, 500))
def test_acr_mask_size(target, seed):
    m = 24
    mask = acr_mask(target, m, np.random.default_rng(seed))
    assert mask.shape == (m,)
    assert mask.sum() == target


def test_acr_mask_bounds():
    rng = np.random.default_rng(8)
    with pytest.raises(ValueError):
        acr_mask(0, 10, rng)
    with pytest.raises(ValueError):
        acr_mask(11, 10, rng)


def test_acr_mask_deterministic_per_seed():
    a = acr_mask(5, 20, np.random.default_rng(99))
    b = acr_mask(5, 20, np.random.default_rng(99))
    np.testing.assert_array_equal(a, b)


def test_acr_mask_is_uniform_ish():
    # every antenna should be chosen roughly equally often
    hits = np.zeros(10)
    for seed in range(2000):
        hits += acr_mask(3, 10, np.random.default_rng(seed))
    freq = hits / 2000
    np.testing.assert_allclose(freq, 0.3, atol=0.05)
