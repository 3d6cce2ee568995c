"""Small numerical kernels: bisection, Gauss-Legendre rules, clamped exponentials."""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import QuadratureFailure, RootFindingFailure

EXP_CLAMP = 700.0


def clamped_exp(x):
    """exp with the argument clipped to +-700 so large lookaheads never overflow."""
    return np.exp(np.clip(x, -EXP_CLAMP, EXP_CLAMP))


def bisect(func: Callable[[float], float], lo: float, hi: float, *,
           tol: float = 1e-12, max_iter: int = 200) -> float:
    """Root of a monotone function on [lo, hi].

    Stops when |func(mid)| <= tol or the bracket collapses to machine
    resolution; raises RootFindingFailure when the bracket holds no sign change.
    """
    flo, fhi = func(lo), func(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if np.sign(flo) == np.sign(fhi):
        raise RootFindingFailure(f"no sign change on [{lo}, {hi}]: f={flo:.3g}, {fhi:.3g}")
    mid = 0.5 * (lo + hi)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fmid = func(mid)
        if abs(fmid) <= tol or hi - lo <= 4 * np.finfo(float).eps * max(1.0, abs(mid)):
            return mid
        if np.sign(fmid) == np.sign(flo):
            lo, flo = mid, fmid
        else:
            hi = mid
    return mid


@lru_cache(maxsize=64)
def _legendre(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(n: int, a: float, b: float):
    """Nodes and weights of the n-point rule mapped to [a, b]."""
    x, w = _legendre(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def tensor_gauss_legendre(func, box, *, n_start: int = 16, tol: float = 1e-6,
                          n_max: int = 256):
    """Integrate func(x, y) (vectorized) over box=((ax, bx), (ay, by)).

    Doubles the node count until successive estimates agree within tol.
    Returns (value, nodes_used).
    """
    (ax, bx), (ay, by) = box
    prev = None
    n = n_start
    while n <= n_max:
        xs, wx = gauss_legendre(n, ax, bx)
        ys, wy = gauss_legendre(n, ay, by)
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        val = float(wx @ func(X, Y) @ wy)
        if prev is not None and abs(val - prev) <= tol:
            return val, n
        prev = val
        n *= 2
    raise QuadratureFailure(f"tensor Gauss-Legendre did not settle to {tol} within {n_max} nodes")


def log_sum_exp(a, axis=-1):
    m = np.max(a, axis=axis, keepdims=True)
    return np.squeeze(m, axis=axis) + np.log(np.sum(np.exp(a - m), axis=axis))


def is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


def finite_or_inf(x: float) -> float:
    x = float(x)
    if math.isnan(x):
        raise ValueError("NaN is not a lookahead")
    return x
