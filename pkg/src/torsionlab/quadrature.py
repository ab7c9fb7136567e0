"""Quadrature utilities: specs, certified Gaussian truncation, stable reduction.

Everything numerical in the kernel and geometry layers funnels through this
module so that tolerances are explicit and summation order is deterministic
(pairwise tree reduction), making results bit-stable across worker counts.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate


class QuadratureError(RuntimeError):
    """Raised when a requested tolerance cannot be certified."""


@dataclass(frozen=True)
class QuadratureSpec:
    """How to integrate: method, tolerances, subdivision budget, truncation.

    The truncation radius bounds the discarded tail of exp(-r^2/4)-type
    integrands; ``gaussian_truncation_radius`` certifies it against the
    absolute tolerance.
    """

    method: str = "adaptive"          # adaptive | tanh-sinh | gauss
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_subdivisions: int = 200
    truncation_radius: float = 40.0
    gauss_points: int = 160

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise QuadratureError("tolerances must be positive")
        if self.method not in ("adaptive", "tanh-sinh", "gauss"):
            raise QuadratureError(f"unknown quadrature method {self.method!r}")
        if self.truncation_radius <= 0 or self.max_subdivisions < 10:
            raise QuadratureError("bad truncation radius or subdivision budget")

    def halved(self) -> "QuadratureSpec":
        return QuadratureSpec(self.method, self.abs_tol / 2, self.rel_tol / 2,
                              self.max_subdivisions * 2, self.truncation_radius,
                              min(2 * self.gauss_points, 2000))


DEFAULT_SPEC = QuadratureSpec()


def gaussian_truncation_radius(tol: float, t_max: float = 1.0, scale: float = 1.0) -> float:
    """Radius r with ∫_r^∞ exp(-u^2/(4 t_max)) du < tol/scale, via the erfc bound.

    Uses erfc(z) <= exp(-z^2), so the tail is below sqrt(pi t_max) e^{-r^2/4t_max}.
    """
    if tol <= 0:
        raise QuadratureError("tolerance must be positive")
    budget = tol / max(scale, 1e-300)
    r = 2.0 * math.sqrt(t_max * max(1.0, -math.log(min(budget, 0.5))))
    # certified: sqrt(pi t) erfc(r / sqrt(4t)) <= sqrt(pi t) exp(-r^2/4t)
    while math.sqrt(math.pi * t_max) * math.exp(-r * r / (4 * t_max)) >= budget:
        r *= 1.25
    return r


def pairwise_sum(values) -> float:
    """Deterministic pairwise tree reduction (order independent of chunking)."""
    vals = list(values)
    if not vals:
        return 0.0
    while len(vals) > 1:
        nxt = [vals[i] + vals[i + 1] for i in range(0, len(vals) - 1, 2)]
        if len(vals) % 2:
            nxt.append(vals[-1])
        vals = nxt
    return vals[0]


def worker_count() -> int:
    raw = os.environ.get("TORSIONLAB_WORKERS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def parallel_map(fn, items):
    """Map preserving order; threads when TORSIONLAB_WORKERS > 1."""
    items = list(items)
    workers = worker_count()
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


@lru_cache(maxsize=64)
def gauss_nodes(npts: int, lo: float = 0.0, hi: float = 1.0):
    """Gauss-Legendre nodes/weights on [lo, hi] (cached)."""
    x, w = np.polynomial.legendre.leggauss(npts)
    mid, half = 0.5 * (hi + lo), 0.5 * (hi - lo)
    return mid + half * x, half * w


@lru_cache(maxsize=32)
def tanh_sinh_nodes(levels: int = 10, cutoff: float = 4.4):
    """tanh-sinh nodes/weights on (0, 1), symmetric, double-exponential decay."""
    h = cutoff / (2 ** levels)
    k = np.arange(-2 ** levels, 2 ** levels + 1)
    t = k * h
    u = 0.5 * math.pi * np.sinh(t)
    # 0.5 (tanh(u) + 1) computed cancellation-free near x = 0
    with np.errstate(over="ignore", under="ignore"):
        ex = np.exp(-2.0 * np.abs(u))
        x = np.where(u < 0, ex / (1.0 + ex), 1.0 / (1.0 + ex))
        w = 0.25 * math.pi * h * np.cosh(t) / np.cosh(u) ** 2
    keep = (x > 0.0) & (x < 1.0) & (w > 1e-300)
    return x[keep], w[keep]


def integrate_1d(fn, lo, hi, spec: QuadratureSpec = DEFAULT_SPEC, *, points=None):
    """Adaptive 1-D integral with an error estimate; raises on tolerance failure.

    ``fn`` is scalar->scalar; for vectorized fixed rules use ``fixed_quad_1d``.
    """
    kwargs = dict(epsabs=spec.abs_tol, epsrel=spec.rel_tol, limit=spec.max_subdivisions)
    if points is not None:
        kwargs["points"] = points
    value, err = integrate.quad(fn, lo, hi, **kwargs)
    scale = max(1.0, abs(value))
    if err > 100 * max(spec.abs_tol, spec.rel_tol * scale):
        raise QuadratureError(
            f"1-D quadrature error estimate {err:.3e} exceeds tolerance "
            f"(abs {spec.abs_tol:.1e}, rel {spec.rel_tol:.1e})")
    return value, err


def fixed_quad_1d(vec_fn, lo, hi, spec: QuadratureSpec = DEFAULT_SPEC):
    """Vectorized Gauss (or tanh-sinh) rule with two-resolution certification."""
    if spec.method == "tanh-sinh":
        x, w = tanh_sinh_nodes()
        xs = lo + (hi - lo) * x
        coarse = pairwise_sum((hi - lo) * w * np.asarray(vec_fn(xs)))
        x2, w2 = tanh_sinh_nodes(levels=11)
        xs2 = lo + (hi - lo) * x2
        fine = pairwise_sum((hi - lo) * w2 * np.asarray(vec_fn(xs2)))
    else:
        x, w = gauss_nodes(spec.gauss_points, lo, hi)
        coarse = pairwise_sum(w * np.asarray(vec_fn(x)))
        x2, w2 = gauss_nodes(int(spec.gauss_points * 1.6) + 1, lo, hi)
        fine = pairwise_sum(w2 * np.asarray(vec_fn(x2)))
    err = abs(fine - coarse)
    scale = max(1.0, abs(fine))
    if err > 100 * max(spec.abs_tol, spec.rel_tol * scale):
        raise QuadratureError(f"fixed rule refinement gap {err:.3e} above tolerance")
    return fine, err


def integrate_2d(fn, x_lo, x_hi, y_lo, y_hi, spec: QuadratureSpec = DEFAULT_SPEC):
    """Nested adaptive 2-D integral (y inner, x outer)."""
    value, err = integrate.dblquad(
        lambda y, x: fn(x, y), x_lo, x_hi, y_lo, y_hi,
        epsabs=spec.abs_tol, epsrel=spec.rel_tol)
    scale = max(1.0, abs(value))
    if err > 1000 * max(spec.abs_tol, spec.rel_tol * scale):
        raise QuadratureError(f"2-D quadrature error estimate {err:.3e} above tolerance")
    return value, err
