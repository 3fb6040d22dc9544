"""Position histograms, Welch's t-test and the Bhattacharyya distance.

The Student t tail probability is computed from the regularized incomplete
beta function, evaluated with a modified-Lentz continued fraction; this is
accurate to about 1e-13 relative over the ranges used here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

_BETACF_EPS = 1e-15
_BETACF_TINY = 1e-300
_BETACF_MAXITER = 10_000


class DegenerateSampleError(ValueError):
    pass


def _betacf(a: float, b: float, x: float) -> float:
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _BETACF_TINY:
        d = _BETACF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _BETACF_MAXITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _BETACF_TINY:
            d = _BETACF_TINY
        c = 1.0 + aa / c
        if abs(c) < _BETACF_TINY:
            c = _BETACF_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _BETACF_TINY:
            d = _BETACF_TINY
        c = 1.0 + aa / c
        if abs(c) < _BETACF_TINY:
            c = _BETACF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _BETACF_EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and 0 <= x <= 1."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must lie in [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return x
    ln_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    # the continued fraction converges fast only below the mean; use symmetry above it
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_two_tailed_p(t: float, df: float) -> float:
    """P(|T| >= |t|) for Student's t with ``df`` degrees of freedom."""
    if df <= 0:
        raise ValueError("df must be positive")
    if math.isinf(t):
        return 0.0
    return regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t))


class WelchResult(NamedTuple):
    t: float
    df: float
    p: float


def welch_t_test(xs: Sequence[float], ys: Sequence[float]) -> WelchResult:
    """Two-sample t-test without the equal-variance assumption (two-tailed)."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.size < 2 or y.size < 2:
        raise DegenerateSampleError("each sample needs at least two values")
    vx = x.var(ddof=1) / x.size
    vy = y.var(ddof=1) / y.size
    se2 = vx + vy
    if se2 == 0:
        raise DegenerateSampleError("both samples have zero variance")
    t = (x.mean() - y.mean()) / math.sqrt(se2)
    df = se2 * se2 / (vx * vx / (x.size - 1) + vy * vy / (y.size - 1))
    return WelchResult(float(t), float(df), t_two_tailed_p(float(t), float(df)))


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    counts: np.ndarray

    @property
    def bins(self) -> int:
        return len(self.counts)

    def normalized(self) -> np.ndarray:
        total = self.counts.sum()
        if total == 0:
            raise ValueError("empty histogram")
        return self.counts / total

    @classmethod
    def from_counts(cls, counts: Sequence[float]) -> "Histogram":
        counts = np.asarray(counts, dtype=float)
        return cls(np.linspace(0.0, 1.0, len(counts) + 1), counts)


def build_histogram(samples: Sequence[float], bins: int = 20) -> Histogram:
    """Uniform bins over [0, 1]; each bin is right-open except the last."""
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise ValueError("cannot build a histogram from no samples")
    if bins < 1:
        raise ValueError("bins must be >= 1")
    if x.min() < 0.0 or x.max() > 1.0:
        raise ValueError("samples must lie in [0, 1]")
    counts, edges = np.histogram(x, bins=bins, range=(0.0, 1.0))
    return Histogram(edges, counts)


def bhattacharyya_distance(h1: Histogram, h2: Histogram) -> float:
    """``-ln sum sqrt(p q)``; ``inf`` when the normalized histograms share no mass."""
    if h1.bins != h2.bins or not np.allclose(h1.edges, h2.edges):
        raise ValueError("histograms must share the same binning")
    p, q = h1.normalized(), h2.normalized()
    if np.array_equal(p, q):
        return 0.0
    bc = float(np.sqrt(p * q).sum())
    if bc == 0.0:
        return math.inf
    return max(0.0, -math.log(bc))
