"""Randomly shifted piecewise-constant Markov signals and their time reversal.

A chain X~_i drives X_t = X~_i on consecutive unit intervals whose common
offset is uniform on [0, 1). Observing the channel at SNR ``snr`` over a
length-e piece of symbol i is equivalent to one Gaussian statistic

    T_i = g_i X~_i + sqrt(g_i) Z_i,      g_i = snr * e_i,

so every finite-SNR quantity reduces to HMM smoothing with per-symbol
information weights g_i.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.sparse.csgraph import connected_components

from . import _rng
from ._numerics import gauss_legendre
from .errors import InvalidParameter, ReducibleChain
from .model import Dtmc
from .sim import McConfig, McEstimate, summarize


def dtmc_stationary(transition) -> np.ndarray:
    """Stationary law of an irreducible chain (left null vector of P - I)."""
    P = np.asarray(transition, dtype=float)
    n_comp, _ = connected_components(P > 0, directed=True, connection="strong")
    if n_comp != 1:
        raise ReducibleChain()
    n = P.shape[0]
    lhs = np.vstack([P.T - np.eye(n), np.ones(n)])
    rhs = np.zeros(n + 1)
    rhs[-1] = 1.0
    mu, *_ = np.linalg.lstsq(lhs, rhs, rcond=None)
    mu = np.clip(mu, 0.0, None)
    return mu / mu.sum()


def dtmc_reverse(chain: Dtmc) -> Dtmc:
    """P^R[i, j] = mu[j] P[j, i] / mu[i]."""
    mu, P = chain.stationary, chain.transition
    rev = (P.T * mu[None, :]) / mu[:, None]
    rev = rev / rev.sum(axis=1, keepdims=True)
    return Dtmc(chain.values, rev, stationary=mu)


def prediction_variance(chain: Dtmc, steps: int = 1) -> float:
    """sum_x mu(x) Var(X~_k | X~_0 = x) with k = ``steps``."""
    if steps < 0:
        raise InvalidParameter("steps", "must be non-negative")
    Pk = np.linalg.matrix_power(chain.transition, steps)
    x = chain.values
    mean = Pk @ x
    var = Pk @ (x * x) - mean * mean
    return float(chain.stationary @ var)


def lmmse_infinite_snr(chain: Dtmc, d: float) -> float:
    """Noise-free lookahead error of the shifted process.

    A symbol boundary falls inside the gap (d, 0] with probability |d| for
    -1 <= d < 0; deeper gaps mix the n- and (n+1)-step prediction variances.
    """
    d = float(d)
    if d >= 0:
        return 0.0
    if d == -math.inf:
        return chain.var0
    gap = -d
    n = int(math.floor(gap))
    frac = gap - n
    lo = prediction_variance(chain, n) if n else 0.0
    if frac == 0.0:
        return lo
    return (1.0 - frac) * lo + frac * prediction_variance(chain, n + 1)


# ---------------------------------------------------------------- HMM engine

def simulate_chain(chain: Dtmc, n_symbols: int, n_paths: int, rng: np.random.Generator):
    """Stationary state-index paths, shape (n_paths, n_symbols)."""
    cum_mu = np.cumsum(chain.stationary)
    cum_P = np.cumsum(chain.transition, axis=1)
    u = rng.random((n_paths, n_symbols))
    states = np.empty((n_paths, n_symbols), dtype=np.intp)
    states[:, 0] = np.minimum(np.searchsorted(cum_mu, u[:, 0], side="right"), cum_mu.size - 1)
    for i in range(1, n_symbols):
        rows = cum_P[states[:, i - 1]]
        states[:, i] = np.minimum((u[:, i, None] >= rows).sum(axis=1), cum_mu.size - 1)
    return states


def posterior_moments(chain: Dtmc, info: np.ndarray, stats: np.ndarray, target: int):
    """Posterior mean and variance of X~ at column ``target`` given all statistics.

    ``info`` has shape (n_symbols,) or (n_paths, n_symbols); ``stats`` has
    shape (n_paths, n_symbols).
    """
    x = chain.values
    P = chain.transition
    n_paths, n_sym = stats.shape
    info = np.broadcast_to(info, stats.shape)
    # log-likelihood x*T - g x^2 / 2, shape (paths, symbols, states)
    loglik = stats[:, :, None] * x[None, None, :] - 0.5 * info[:, :, None] * (x * x)[None, None, :]
    loglik -= loglik.max(axis=2, keepdims=True)
    lik = np.exp(loglik)

    fwd = chain.stationary[None, :] * lik[:, 0, :]
    fwd /= fwd.sum(axis=1, keepdims=True)
    for i in range(1, target + 1):
        fwd = (fwd @ P) * lik[:, i, :]
        fwd /= fwd.sum(axis=1, keepdims=True)
    bwd = np.ones((n_paths, x.size))
    for i in range(n_sym - 1, target, -1):
        bwd = (lik[:, i, :] * bwd) @ P.T
        bwd /= bwd.sum(axis=1, keepdims=True)
    post = fwd * bwd
    post /= post.sum(axis=1, keepdims=True)
    mean = post @ x
    var = post @ (x * x) - mean * mean
    return mean, np.maximum(var, 0.0)


@dataclass(frozen=True)
class WindowDesign:
    """Per-symbol information weights for one quadrature node.

    ``info`` covers symbols 0..n-1 and ``target`` indexes the symbol being
    estimated.
    """

    info: np.ndarray
    target: int


def window_variance_paths(chain: Dtmc, designs, weights, rng: np.random.Generator,
                          n_paths: int, *, estimator: str = "posterior") -> np.ndarray:
    """Per-path weighted sum over designs of the estimation error.

    All designs share one chain path and one noise draw per symbol (common
    random numbers), so differences between designs are low-variance.
    """
    if estimator not in ("posterior", "residual"):
        raise InvalidParameter("estimator", "must be 'posterior' or 'residual'")
    n_sym = max(d.info.size for d in designs)
    states = simulate_chain(chain, n_sym, n_paths, rng)
    noise = rng.standard_normal((n_paths, n_sym))
    xs = chain.values[states]
    total = np.zeros(n_paths)
    for des, w in zip(designs, weights):
        k = des.info.size
        # align every design to the end of the shared path
        xs_k, z_k = xs[:, n_sym - k:], noise[:, n_sym - k:]
        stats = des.info[None, :] * xs_k + np.sqrt(des.info)[None, :] * z_k
        mean, var = posterior_moments(chain, des.info, stats, des.target)
        if estimator == "posterior":
            total += w * var
        else:
            total += w * (xs_k[:, des.target] - mean) ** 2
    return total


def _mc_window(chain: Dtmc, designs, weights, mc: McConfig, tag: str,
               estimator: str = "posterior") -> McEstimate:
    def draw(rng, n):
        return window_variance_paths(chain, designs, weights, rng, n, estimator=estimator)

    per = np.concatenate(_rng.run_blocks(draw, mc.seed, tag, _rng.block_sizes(mc.paths)))
    return summarize(per)


def _h_design(gamma1: float, gamma2: float, snr: float, hist_len: int) -> WindowDesign:
    info = np.concatenate([np.full(hist_len, snr), [snr * gamma1, snr * gamma2]])
    return WindowDesign(info, hist_len)


def _gap_design(exposure: float, snr: float, hist_len: int) -> WindowDesign:
    # past fully observed up to symbol -2, symbol -1 partly, target and successor unseen
    info = np.concatenate([np.full(hist_len - 1, snr), [snr * exposure, 0.0, 0.0]])
    return WindowDesign(info, hist_len)


def hmm_window_variance(chain: Dtmc, gamma1: float, gamma2: float, *, snr: float = 1.0,
                        hist_len: int = 50, mc: McConfig = McConfig(),
                        estimator: str = "posterior") -> McEstimate:
    """h(g1, g2) = Var(X~_0 | full past, exposure g1 on X~_0, exposure g2 on X~_1)."""
    for name, g in (("gamma1", gamma1), ("gamma2", gamma2)):
        if not 0.0 <= g <= 1.0:
            raise InvalidParameter(name, "exposure must lie in [0, 1]")
    if hist_len < 1:
        raise InvalidParameter("hist_len", "must be >= 1")
    des = _h_design(gamma1, gamma2, snr, hist_len)
    return _mc_window(chain, [des], [1.0], mc, "h", estimator)


def shifted_designs(d: float, snr: float, hist_len: int, nodes: int = 16):
    """Quadrature designs for lmmse(d) of the shifted process, -1 <= d <= 1.

    v is the time from the start of the next symbol boundary after 0 back
    to 1 (uniform on [0, 1]); the integrand has a kink at v = d (d >= 0)
    or v = 1 + d (d < 0), so each side gets its own Gauss-Legendre rule.
    """
    if not -1.0 <= d <= 1.0:
        raise InvalidParameter("d", "shifted-process lookahead must lie in [-1, 1]")
    designs, weights = [], []
    if d >= 0:
        pieces = [((0.0, d), lambda v: _h_design(1.0, d - v, snr, hist_len)),
                  ((d, 1.0), lambda v: _h_design(1.0 + d - v, 0.0, snr, hist_len))]
    else:
        pieces = [((0.0, 1.0 + d), lambda v: _h_design(1.0 + d - v, 0.0, snr, hist_len)),
                  ((1.0 + d, 1.0), lambda v: _gap_design(2.0 + d - v, snr, hist_len))]
    for (a, b), make in pieces:
        if b - a <= 0:
            continue
        v, w = gauss_legendre(nodes, a, b)
        for vi, wi in zip(v, w):
            designs.append(make(float(vi)))
            weights.append(float(wi))
    return designs, weights


def lmmse_shifted(chain: Dtmc, d: float, *, snr: float = 1.0, hist_len: int = 50,
                  mc: McConfig = McConfig(), nodes: int = 16,
                  estimator: str = "posterior") -> McEstimate:
    """MC estimate of lmmse(d, snr) for the shifted chain, -1 <= d <= 1."""
    designs, weights = shifted_designs(d, snr, hist_len, nodes)
    return _mc_window(chain, designs, weights, mc, f"shifted:{d!r}:{snr!r}", estimator)


def jump_designs(d: float, l: float, snr_past: float, gamma_future: float, hist_len: int,
                 nodes: int = 16):
    """Designs for f(snr, gamma, d, l) = Var(X_d | Y up to l + d), SNR jump at 0.

    The symbol holding time d starts at d - u with u uniform on [0, 1).
    """
    if d < 0 or l < 0 or not math.isfinite(d + l):
        raise InvalidParameter("d/l", "need finite non-negative d and l")
    end = d + l
    n_future = int(math.ceil(l)) + 1
    n_past = hist_len + int(math.ceil(d)) + 1
    ks = np.arange(-n_past, n_future + 1)
    breaks = sorted({0.0, 1.0, d % 1.0, (-l) % 1.0})
    designs, weights = [], []
    for a, b in zip(breaks[:-1], breaks[1:]):
        if b - a <= 1e-15:
            continue
        for u, w in zip(*gauss_legendre(nodes, a, b)):
            lo = d - u + ks
            hi = lo + 1.0
            past = np.clip(np.minimum(hi, 0.0) - lo, 0.0, 1.0)
            fut = np.clip(np.minimum(hi, end) - np.maximum(lo, 0.0), 0.0, 1.0)
            info = snr_past * past + gamma_future * fut
            designs.append(WindowDesign(info, n_past))
            weights.append(float(w))
    return designs, weights


def jump_f_markov(chain: Dtmc, snr_past: float, gamma_future: float, d: float, l: float, *,
                  hist_len: int = 50, mc: McConfig = McConfig(), nodes: int = 16) -> McEstimate:
    designs, weights = jump_designs(d, l, snr_past, gamma_future, hist_len, nodes)
    tag = f"jump-markov:{snr_past!r}:{gamma_future!r}:{d!r}:{l!r}"
    return _mc_window(chain, designs, weights, mc, tag)


@dataclass(frozen=True)
class Theorem2Row:
    d: float
    lmmse_fwd: float
    lmmse_rev: float
    stderr_fwd: float
    stderr_rev: float
    significant: bool
    inf_snr_fwd: float
    inf_snr_rev: float


@dataclass(frozen=True)
class Theorem2Report:
    rows: list
    var0_fwd: float
    var0_rev: float
    cmmse_fwd: Optional[McEstimate]
    cmmse_rev: Optional[McEstimate]
    anchors_agree: bool

    def table(self) -> list[dict]:
        return [row.__dict__.copy() for row in self.rows]


def theorem2_report(chain: Dtmc, d_grid, *, snr: float = 1.0, hist_len: int = 50,
                    mc: McConfig = McConfig(), nodes: int = 16,
                    progress: Optional[Callable[[float], None]] = None) -> Theorem2Report:
    """Forward vs reversed lookahead errors on a d grid inside [-1, 1]."""
    rev = dtmc_reverse(chain)
    rows, anchors = [], {}
    for d in np.atleast_1d(np.asarray(d_grid, dtype=float)):
        if progress:
            progress(float(d))
        f = lmmse_shifted(chain, float(d), snr=snr, hist_len=hist_len, mc=mc, nodes=nodes)
        r = lmmse_shifted(rev, float(d), snr=snr, hist_len=hist_len, mc=mc, nodes=nodes)
        se = math.hypot(f.stderr, r.stderr)
        rows.append(Theorem2Row(float(d), f.value, r.value, f.stderr, r.stderr,
                                abs(f.value - r.value) > 3.0 * se,
                                lmmse_infinite_snr(chain, d), lmmse_infinite_snr(rev, d)))
        if d == 0.0:
            anchors = {"fwd": f, "rev": r}
    cf, cr = anchors.get("fwd"), anchors.get("rev")
    agree = abs(chain.var0 - rev.var0) <= 1e-12 * max(1.0, chain.var0)
    if cf is not None:
        agree = agree and abs(cf.value - cr.value) <= 3.0 * math.hypot(cf.stderr, cr.stderr)
    return Theorem2Report(rows, chain.var0, rev.var0, cf, cr, agree)


def example_chain() -> Dtmc:
    """Three-state example chain on values (5, 0, -5)."""
    P = [[0.6, 0.4, 0.0], [0.0, 0.2, 0.8], [0.875, 0.0, 0.125]]
    return Dtmc([5.0, 0.0, -5.0], P)
