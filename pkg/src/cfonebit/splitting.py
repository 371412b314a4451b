"""Three-operator splitting solver for the relaxed one-bit precoding problem.

The problem, in the real-lifted variables b in R^{2M}:

    minimize  ||s - H b||^2  +  kappa * ||b||_inf^2  +  lam * sum_m ||b_m||_2

where group m pairs coordinate m with coordinate M+m (real and imaginary
part of one antenna).  The smooth data term is handled by its gradient, the
squared infinity norm and the group-lasso term by their proximal operators,
combined in the Davis-Yin forward-Douglas-Rachford iteration:

    a <- prox_{gamma*d3}(c)
    b <- prox_{gamma*d2}(2a - c - gamma * grad_d1(a))
    c <- c + psi * (b - a)

Batched solves share the channel across symbol columns so the per-iteration
work is two GEMMs; per-column freezing reproduces the scalar stopping rule
exactly.  Convergence requires gamma < 1/sigma_max^2(H) and
psi < 2 - gamma * sigma_max^2(H).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .config import SolverConfig


class SolverDiverged(RuntimeError):
    """Non-finite iterates encountered; carries the iteration index."""

    def __init__(self, iteration: int):
        self.iteration = iteration
        super().__init__(f"solver diverged at iteration {iteration}")


@dataclass(frozen=True)
class SolverState:
    """Final iterates of one solve; ``a_r`` is the solution estimate."""

    a_r: np.ndarray
    b_r: np.ndarray
    c_r: np.ndarray
    iters: int
    residual: float


@dataclass(frozen=True)
class BatchSolveResult:
    """Column-stacked solver states for a batch of symbol vectors."""

    a_r: np.ndarray          # (2M, B)
    b_r: np.ndarray
    c_r: np.ndarray
    iters: np.ndarray        # (B,) iterations each column actually ran
    residual: np.ndarray     # (B,) residual at each column's last update


# ---------------------------------------------------------------------------
# objective pieces
# ---------------------------------------------------------------------------

def group_norms(v: np.ndarray) -> np.ndarray:
    """Per-antenna group norms ||(v_m, v_{M+m})||_2; shape (M,) or (M, B)."""
    m = v.shape[0] // 2
    return np.sqrt(v[:m] ** 2 + v[m:] ** 2)


def objective(b_r: np.ndarray, s_r: np.ndarray, h_r: np.ndarray,
              kappa: float, lam: float) -> float | np.ndarray:
    """Relaxed objective; scalar for vectors, per-column for batches."""
    resid = s_r - h_r @ b_r
    data = (resid ** 2).sum(axis=0)
    peak = np.abs(b_r).max(axis=0)
    groups = group_norms(b_r).sum(axis=0)
    return data + kappa * peak ** 2 + lam * groups


def grad_d1(a_r: np.ndarray, s_r: np.ndarray, h_r: np.ndarray) -> np.ndarray:
    """Gradient of the data term ||s - H a||^2."""
    return 2.0 * (h_r.T @ (h_r @ a_r - s_r))


# ---------------------------------------------------------------------------
# proximal operators
# ---------------------------------------------------------------------------

def prox_group_lasso(v: np.ndarray, thresh: float) -> np.ndarray:
    """Group soft-thresholding: scale each group by max(0, 1 - thresh/norm).

    Groups with norm <= thresh (including exactly-zero groups) return
    exactly (0, 0).  Accepts (2M,) vectors or (2M, B) batches.
    """
    m = v.shape[0] // 2
    g = group_norms(v)
    scale = np.zeros_like(g)
    big = g > thresh
    scale[big] = 1.0 - thresh / g[big]
    return np.concatenate([v[:m] * scale, v[m:] * scale], axis=0)


def prox_linf_sq(v: np.ndarray, w: float) -> np.ndarray:
    """Prox of (w/2) * ||.||_inf^2 via the sort-and-scan construction.

    e = |v|; f = e sorted descending; g_m = (sum of the m largest) / (w + m);
    alpha = max(0, max_m g_m); output clips |v| at alpha, keeping signs
    (sign of 0 counts as +1).  w = 0 reduces to the identity.
    """
    e = np.abs(v)
    f = np.sort(e, axis=0)[::-1]
    denom = w + np.arange(1, v.shape[0] + 1, dtype=float)
    if v.ndim == 2:
        denom = denom[:, None]
    g = np.cumsum(f, axis=0) / denom
    alpha = np.maximum(0.0, g.max(axis=0))
    signs = np.where(v < 0, -1.0, 1.0)
    return np.minimum(e, alpha) * signs


# ---------------------------------------------------------------------------
# Davis-Yin iteration
# ---------------------------------------------------------------------------

def solve_batch(s_r: np.ndarray, h_r: np.ndarray, cfg: SolverConfig,
                c_init: np.ndarray | None = None,
                coord_mask: np.ndarray | None = None,
                smax_sq: float | None = None) -> BatchSolveResult:
    """Run the splitting iteration on a column batch of lifted symbols.

    ``coord_mask`` (bool, (2M,) or (2M, B), True = coordinate in play)
    restricts a solve to a subset of antennas: masked coordinates are pinned
    to zero at both proximal inputs, which is equivalent to deleting the
    corresponding channel columns (zeros never win the infinity-norm scan
    and contribute nothing to the data term).

    Columns freeze once their residual ||b - a||_2 drops to the tolerance:
    their recorded state is the last one they updated, so early-frozen
    columns do not drift while the rest of the batch keeps iterating.  The
    matrix products always run at the full batch width, which keeps a run
    reproducible for a fixed column partition; against a one-column solve
    the iterates agree only to machine precision (BLAS kernels round
    differently at different widths).
    """
    cfg.validate()
    two_m = h_r.shape[1]
    if s_r.ndim != 2:
        raise ValueError("s_r must be (2K, B); use solve() for single vectors")
    batch = s_r.shape[1]

    if smax_sq is None:
        smax_sq = float(np.linalg.norm(h_r, 2) ** 2)
    gamma = cfg.resolved_gamma(smax_sq)
    tol = cfg.resolved_tolerance(two_m)
    w = 2.0 * gamma * cfg.kappa
    shrink = gamma * cfg.lam

    c = np.zeros((two_m, batch)) if c_init is None else np.array(c_init, dtype=float, copy=True)
    if c.shape != (two_m, batch):
        raise ValueError(f"c_init must have shape {(two_m, batch)}")
    mask = None
    if coord_mask is not None:
        cm = np.asarray(coord_mask, dtype=bool)
        mask = np.broadcast_to(cm[:, None] if cm.ndim == 1 else cm, (two_m, batch))
        c = np.where(mask, c, 0.0)

    a_fin = np.zeros_like(c)
    b_fin = np.zeros_like(c)
    iters = np.zeros(batch, dtype=int)
    res_fin = np.full(batch, np.inf)
    active = np.ones(batch, dtype=bool)

    for it in range(1, cfg.max_iters + 1):
        a = prox_group_lasso(c, shrink)
        v = 2.0 * a - c - gamma * grad_d1(a, s_r, h_r)
        if mask is not None:
            v = np.where(mask, v, 0.0)
        b = prox_linf_sq(v, w)
        delta = b - a
        res = np.sqrt((delta ** 2).sum(axis=0))
        if not np.all(np.isfinite(res)):
            raise SolverDiverged(it)
        c[:, active] += cfg.psi * delta[:, active]
        a_fin[:, active] = a[:, active]
        b_fin[:, active] = b[:, active]
        iters[active] = it
        res_fin[active] = res[active]
        active = active & (res > tol)
        if not active.any():
            break

    return BatchSolveResult(a_r=a_fin, b_r=b_fin, c_r=c, iters=iters, residual=res_fin)


def solve(s_r: np.ndarray, h_r: np.ndarray, cfg: SolverConfig,
          c_r_init: np.ndarray | None = None,
          smax_sq: float | None = None,
          trace: Callable[[int, float, float], None] | None = None) -> SolverState:
    """Single-vector solve; thin wrapper over a one-column batch.

    ``trace(iter, objective, residual)`` is called once per iteration when
    given (diagnostics only; adds an objective evaluation per step).
    """
    if trace is None:
        out = solve_batch(s_r[:, None], h_r, cfg,
                          c_init=None if c_r_init is None else c_r_init[:, None],
                          smax_sq=smax_sq)
        return SolverState(a_r=out.a_r[:, 0], b_r=out.b_r[:, 0], c_r=out.c_r[:, 0],
                           iters=int(out.iters[0]), residual=float(out.residual[0]))

    # traced path: run iteration-by-iteration (diagnostics, not hot path)
    cfg.validate()
    two_m = h_r.shape[1]
    if smax_sq is None:
        smax_sq = float(np.linalg.norm(h_r, 2) ** 2)
    gamma = cfg.resolved_gamma(smax_sq)
    tol = cfg.resolved_tolerance(two_m)
    w = 2.0 * gamma * cfg.kappa
    c = np.zeros(two_m) if c_r_init is None else np.array(c_r_init, dtype=float, copy=True)
    a = b = np.zeros(two_m)
    res = np.inf
    it = 0
    for it in range(1, cfg.max_iters + 1):
        a = prox_group_lasso(c, gamma * cfg.lam)
        b = prox_linf_sq(2.0 * a - c - gamma * grad_d1(a, s_r, h_r), w)
        res = float(np.linalg.norm(b - a))
        if not np.isfinite(res):
            raise SolverDiverged(it)
        c += cfg.psi * (b - a)
        trace(it, float(objective(a, s_r, h_r, cfg.kappa, cfg.lam)), res)
        if res <= tol:
            break
    return SolverState(a_r=a, b_r=b, c_r=c, iters=it, residual=res)


# ---------------------------------------------------------------------------
# brute-force prox oracles (diagnostics; also backing `cfonebit prox-check`)
# ---------------------------------------------------------------------------

def prox_linf_sq_bruteforce(v: np.ndarray, w: float) -> np.ndarray:
    """Independent prox of (w/2)||.||_inf^2 by 1-D search over the clip level.

    For a fixed clip level alpha the inner minimizer is clip(|v|, alpha) with
    v's signs, so the prox reduces to minimizing
    G(alpha) = 0.5 * sum((|v| - alpha)_+^2) + (w/2) * alpha^2 over alpha >= 0.
    """
    e = np.abs(np.asarray(v, dtype=float))
    top = float(e.max(initial=0.0))
    if top == 0.0:
        return np.zeros_like(e)

    def g_of(alpha: float) -> float:
        over = np.clip(e - alpha, 0.0, None)
        return 0.5 * float((over ** 2).sum()) + 0.5 * w * alpha ** 2

    out = minimize_scalar(g_of, bounds=(0.0, top), method="bounded",
                          options={"xatol": 1e-13})
    alpha = float(out.x)
    # the exact minimizer of a piecewise quadratic: polish by one closed-form
    # step on the active piece (coordinates above alpha stay above nearby)
    over = e > alpha
    if w + over.sum() > 0:
        alpha = max(0.0, float(e[over].sum()) / (w + over.sum()))
    signs = np.where(np.asarray(v) < 0, -1.0, 1.0)
    return np.minimum(e, alpha) * signs


def prox_group_lasso_bruteforce(pair: np.ndarray, thresh: float) -> np.ndarray:
    """Independent 2-D numerical minimization of 0.5||u-c||^2 + thresh*||u||.

    Nelder-Mead locates the basin; damped Newton steps on the smooth region
    (u != 0, where grad = (u-c) + thresh*u/||u|| and the Hessian is explicit)
    then polish to machine precision.  The origin is kept as a separate
    candidate since the objective is nonsmooth there.
    """
    c = np.asarray(pair, dtype=float)

    def fun(u):
        return 0.5 * ((u - c) ** 2).sum() + thresh * np.sqrt((u ** 2).sum())

    best = np.zeros(2)
    best_val = fun(best)
    for start in (c, 0.5 * c):
        res = minimize(fun, start, method="Nelder-Mead",
                       options={"xatol": 1e-14, "fatol": 1e-16, "maxiter": 4000})
        def grad_of(u):
            nu = float(np.sqrt((u ** 2).sum()))
            if nu == 0.0:
                return None, 0.0
            return (u - c) + thresh * u / nu, nu

        u = np.array(res.x, dtype=float)
        for _ in range(60):
            grad, nu = grad_of(u)
            if grad is None:
                break
            gnorm = float(np.sqrt((grad ** 2).sum()))
            if gnorm <= 1e-15 * max(1.0, float(np.abs(c).max())):
                break
            # Hessian = I + (thresh/nu)(I - uu^T/nu^2): eigenvalue 1 along u,
            # 1 + thresh/nu across it, so invert analytically.  Function
            # values are useless for step control this close to the optimum
            # (differences underflow); the gradient norm is not.
            par = (grad @ u) / nu ** 2 * u
            step = par + (grad - par) / (1.0 + thresh / nu)
            t = 1.0
            u_next = u - step
            g_next, _ = grad_of(u_next)
            while (g_next is None
                   or np.sqrt((g_next ** 2).sum()) >= gnorm) and t > 1e-8:
                t *= 0.5
                u_next = u - t * step
                g_next, _ = grad_of(u_next)
            if g_next is None or np.sqrt((g_next ** 2).sum()) >= gnorm:
                break
            u = u_next
        if fun(u) < best_val:
            best, best_val = u, fun(u)
    return best
