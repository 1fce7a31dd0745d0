"""Adaptive Gauss-Legendre quadrature with node doubling.

Piecewise-continuous integrands are handled by splitting the domain at
supplied breakpoints; within each smooth piece the node count doubles
until two successive refinements agree to tolerance.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .qcore import ConvergenceError


@lru_cache(maxsize=None)
def _gl_nodes(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def _segments(a: float, b: float, breakpoints: Sequence[float]) -> list[tuple[float, float]]:
    cuts = sorted({float(p) for p in breakpoints if a < p < b})
    edges = [a] + cuts + [b]
    return [(lo, hi) for lo, hi in zip(edges[:-1], edges[1:]) if hi > lo]


def _fixed_quad(f: Callable[[float], object], lo: float, hi: float, n: int):
    x, w = _gl_nodes(n)
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    total = None
    for xi, wi in zip(x, w):
        val = f(mid + half * xi)
        term = wi * np.asarray(val) if np.ndim(val) else wi * val
        total = term if total is None else total + term
    return half * total


def integrate_scalar(
    f: Callable[[float], float],
    a: float = 0.0,
    b: float = 1.0,
    *,
    breakpoints: Sequence[float] = (),
    tol: float = 1e-10,
    start_nodes: int = 8,
    node_cap: int = 2 ** 13,
) -> float:
    """Integrate a piecewise-smooth scalar function to absolute tolerance."""
    if b <= a:
        return 0.0
    segs = _segments(a, b, breakpoints)
    n = start_nodes
    prev = sum(_fixed_quad(f, lo, hi, n) for lo, hi in segs)
    while n <= node_cap:
        n *= 2
        cur = sum(_fixed_quad(f, lo, hi, n) for lo, hi in segs)
        if abs(cur - prev) < tol:
            return float(cur)
        prev = cur
    raise ConvergenceError("scalar quadrature did not converge", abs(cur - prev), n)


def integrate_operator(
    f: Callable[[float], np.ndarray],
    a: float = 0.0,
    b: float = 1.0,
    *,
    breakpoints: Sequence[float] = (),
    rtol: float = 1e-8,
    start_nodes: int = 8,
    node_cap: int = 2 ** 12,
) -> np.ndarray:
    """Integrate a matrix-valued function to relative Frobenius tolerance."""
    if b <= a:
        raise ValueError("integrate_operator needs b > a")
    segs = _segments(a, b, breakpoints)
    n = start_nodes
    prev = sum(_fixed_quad(f, lo, hi, n) for lo, hi in segs)
    while n <= node_cap:
        n *= 2
        cur = sum(_fixed_quad(f, lo, hi, n) for lo, hi in segs)
        scale = max(float(np.linalg.norm(cur)), 1e-300)
        resid = float(np.linalg.norm(cur - prev)) / scale
        if resid < rtol:
            return cur
        prev = cur
    raise ConvergenceError("operator quadrature did not converge", resid, n)
