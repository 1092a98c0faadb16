"""Quadrature, certified maximisation of periodic functions, integer threshold search."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar


class QuadratureError(RuntimeError):
    """Raised when a quadrature does not reach its tolerance."""


class CertificationError(RuntimeError):
    """Raised when a certified maximum cannot be produced within the requested margin."""


class SearchCapError(RuntimeError):
    """Raised when an integer search exceeds its cap."""


class MarginWarning(UserWarning):
    """A computed quantity sits closer to a decision boundary than the configured margin."""


@dataclass(frozen=True)
class QuadratureConfig:
    order: int = 16
    panels: int = 64
    tol: float = 1e-10
    max_doublings: int = 6

    def __post_init__(self):
        if self.order < 2 or self.panels < 1 or not self.tol > 0:
            raise ValueError(f"invalid quadrature config {self}")


@dataclass(frozen=True)
class QuadResult:
    value: float
    err_est: float

    def __iter__(self):
        return iter((self.value, self.err_est))


@dataclass(frozen=True)
class CertifiedMax:
    """The true supremum lies in [value, value + margin]."""

    value: float
    argmax: float
    margin: float

    @property
    def upper(self) -> float:
        return self.value + self.margin


@dataclass(frozen=True)
class ThresholdResult:
    value: int
    witness_below: float
    witness_at: float
    evaluations: dict = field(default_factory=dict, compare=False, repr=False)


@lru_cache(maxsize=64)
def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(order)
    return (x + 1.0) / 2.0, w / 2.0


def _composite(f, edges: np.ndarray, order: int) -> float:
    x, w = gauss_legendre(order)
    h = np.diff(edges)
    nodes = edges[:-1, None] + h[:, None] * x[None, :]
    vals = np.asarray(f(nodes.ravel()), dtype=float).reshape(nodes.shape)
    return float(np.sum((vals @ w) * h))


def integrate(f: Callable, a: float, b: float, cfg: QuadratureConfig | None = None) -> QuadResult:
    """Composite Gauss-Legendre on ``[a, b]`` with panel doubling until two successive
    estimates agree within ``cfg.tol``.  ``f`` must accept numpy arrays."""
    cfg = cfg or QuadratureConfig()
    if not a < b:
        raise ValueError("need a < b")
    n = cfg.panels
    prev = _composite(f, np.linspace(a, b, n + 1), cfg.order)
    for _ in range(cfg.max_doublings):
        n *= 2
        cur = _composite(f, np.linspace(a, b, n + 1), cfg.order)
        err = abs(cur - prev)
        if not math.isfinite(cur):
            raise QuadratureError("non-finite integrand value")
        if err <= cfg.tol:
            return QuadResult(cur, err)
        prev = cur
    raise QuadratureError(f"no convergence after {cfg.max_doublings} doublings (last difference {err:.3e})")


def integrate_pieces(f: Callable, edges, order: int = 8, tol: float = 1e-10,
                     chunk: int = 1 << 15) -> QuadResult:
    """Gauss-Legendre on each piece between consecutive ``edges``.

    The error estimate compares against the same rule on halved pieces; the halved
    value is returned.  Work is chunked so arbitrarily many pieces fit in memory.
    """
    edges = np.asarray(edges, dtype=float)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) < 0):
        raise ValueError("edges must be a nondecreasing array of length >= 2")
    x, w = gauss_legendre(order)
    xh = np.concatenate([x / 2, 0.5 + x / 2])
    wh = np.concatenate([w / 2, w / 2])
    coarse = []
    fine = []
    for s in range(0, edges.size - 1, chunk):
        e = edges[s:s + chunk + 1]
        h = np.diff(e)
        nodes = e[:-1, None] + h[:, None] * np.concatenate([x, xh])[None, :]
        vals = np.asarray(f(nodes.ravel()), dtype=float).reshape(nodes.shape)
        coarse.append(np.sum((vals[:, :order] @ w) * h))
        fine.append(np.sum((vals[:, order:] @ wh) * h))
    value = float(np.sum(fine))
    err = abs(value - float(np.sum(coarse)))
    if not math.isfinite(value):
        raise QuadratureError("non-finite integrand value")
    if err > tol:
        raise QuadratureError(f"piecewise rule error estimate {err:.3e} exceeds tol {tol:.3e}")
    return QuadResult(value, err)


def max_periodic(f: Callable, deriv_bound: float | None = None, tol: float = 1e-9, *,
                 curvature_bound: float | None = None, lo: float = 0.0, hi: float = 1.0,
                 chunk: int = 1 << 18) -> CertifiedMax:
    """Certified maximum of ``f`` on ``[lo, hi]`` (one period by default).

    Either ``deriv_bound`` (a Lipschitz constant) or ``curvature_bound`` (an upper bound
    for ``-f''`` in the distributional sense) must be given.  A uniform grid is chosen so
    that between adjacent nodes ``f`` cannot exceed the larger endpoint value by more
    than ``tol``; the best node is then refined locally.
    """
    if curvature_bound is None and deriv_bound is None:
        raise ValueError("need deriv_bound or curvature_bound")
    for c in (deriv_bound, curvature_bound):
        if c is not None and (not math.isfinite(c) or c < 0):
            raise ValueError(f"invalid bound {c!r}")
    length = hi - lo
    if curvature_bound is not None:
        step = math.sqrt(8.0 * tol / curvature_bound) if curvature_bound > 0 else length
    else:
        step = 2.0 * tol / deriv_bound if deriv_bound > 0 else length
    # a hair of slack so rounding in h cannot push the margin past tol
    n = max(2, int(math.ceil(length / step * (1 + 1e-6))))
    if n > 1 << 34:
        raise CertificationError(f"grid of {n} points needed for margin {tol}")
    h = length / n

    best_v = -math.inf
    best_x = lo
    pair_max = -math.inf
    prev_last = None
    for s in range(0, n + 1, chunk):
        idx = np.arange(s, min(s + chunk, n + 1))
        xs = lo + idx * h
        v = np.asarray(f(xs), dtype=float)
        if not np.all(np.isfinite(v)):
            raise CertificationError("non-finite function value on the grid")
        if prev_last is not None:
            v_ext = np.concatenate([[prev_last], v])
        else:
            v_ext = v
        if v_ext.size > 1:
            if curvature_bound is not None:
                pm = np.maximum(v_ext[:-1], v_ext[1:]).max()
            else:
                pm = (0.5 * (v_ext[:-1] + v_ext[1:])).max()
            pair_max = max(pair_max, float(pm))
        k = int(np.argmax(v))
        if v[k] > best_v:
            best_v, best_x = float(v[k]), float(xs[k])
        prev_last = float(v[-1])

    if curvature_bound is not None:
        upper = pair_max + curvature_bound * h * h / 8.0
    else:
        upper = pair_max + deriv_bound * h / 2.0
    upper = max(upper, best_v)

    a = max(lo, best_x - h)
    b = min(hi, best_x + h)
    if b > a:
        r = minimize_scalar(lambda t: -float(np.asarray(f(np.array([t])))[0]), bounds=(a, b),
                            method="bounded", options={"xatol": 1e-14 + 1e-12 * abs(best_x)})
        if r.success and -r.fun > best_v:
            best_v, best_x = float(-r.fun), float(r.x)
    margin = max(0.0, upper - best_v)
    if margin > tol * (1 + 1e-9) + 1e-15:
        raise CertificationError(f"certified margin {margin:.3e} exceeds {tol:.3e}")
    return CertifiedMax(best_v, best_x, margin)


def _unpack(r):
    if isinstance(r, tuple):
        return bool(r[0]), float(r[1])
    return bool(r), math.nan


def smallest_true(predicate: Callable[[int], object], start: int = 1, *, linear_steps: int = 64,
                  cap: int = 1 << 40, warn_margin: float | None = None) -> ThresholdResult:
    """Least ``n >= start`` with ``predicate(n)`` true, assuming monotonicity.

    ``predicate`` returns a bool or a pair ``(bool, slack)`` where ``slack`` measures the
    distance to the decision boundary.  The first ``linear_steps`` candidates are scanned
    one by one; after that the search gallops and bisects.
    """
    seen: dict[int, tuple[bool, float]] = {}

    def ev(n):
        if n not in seen:
            seen[n] = _unpack(predicate(n))
        return seen[n][0]

    n = start
    found = None
    while n < start + linear_steps:
        if n > cap:
            raise SearchCapError(f"search passed cap {cap}")
        if ev(n):
            found = n
            break
        n += 1
    if found is None:
        lo = n - 1  # known false
        step = 1
        hi = lo + step
        while not ev(hi):
            lo = hi
            step *= 2
            hi = lo + step
            if hi > cap:
                raise SearchCapError(f"search passed cap {cap}")
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if ev(mid):
                hi = mid
            else:
                lo = mid
        found = hi
    if found > start:
        ev(found - 1)
        if seen[found - 1][0]:
            raise RuntimeError(f"predicate not monotone near {found}")
        below = seen[found - 1][1]
    else:
        below = math.nan
    at = seen[found][1]
    if warn_margin is not None:
        close = [w for w in (below, at) if math.isfinite(w) and abs(w) < warn_margin]
        if close:
            warnings.warn(f"threshold at {found} decided with slack {min(map(abs, close)):.3e} "
                          f"(below={below!r}, at={at!r})", MarginWarning, stacklevel=2)
    return ThresholdResult(found, below, at, dict(seen))
