"""Exact small-instance analysis of the crossing function.

With positions fixed and at most ~20 points, the crossing indicator is a
Boolean function of the color bits and everything is computable by
enumeration: the full truth table, influences, the probability derivative
and the classical inequalities relating variance, influences and the
query statistics of the exploration algorithm.  Coloring index omega has
bit k equal to the color of point k (1 = blue).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import Configuration, Rect
from .crossing import CrossingFrame
from .explore import run_algorithm_colors
from .geometry import Scene
from .mc import replica_rng

__all__ = [
    "FunctionTable",
    "InequalityReport",
    "NonMonotoneError",
    "QueryStats",
    "algorithm_query_stats",
    "bks_statistic",
    "check_influence_upper_bound",
    "check_margulis_russo",
    "check_osss",
    "check_schramm_steif",
    "exact_function_table",
    "exact_influence",
    "exact_noise_correlation",
    "sample_positions_instance",
    "table_mean",
    "table_variance",
]

MAX_TABLE_BITS = 20
MAX_PAIRING_BITS = 12


class NonMonotoneError(ValueError):
    """The table is not monotone in the color bits."""


@dataclass(frozen=True)
class InequalityReport:
    lhs: float
    rhs: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs + 1e-9

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs


@dataclass(frozen=True)
class FunctionTable:
    """Truth table of the crossing function over all colorings."""

    values: np.ndarray  # uint8, length 2^n_bits
    n_bits: int
    rect: tuple

    def __len__(self) -> int:
        return self.values.size


def sample_positions_instance(count: int, rng: np.random.Generator) -> Configuration:
    """Fixed-size instance: ``count`` uniform positions at matching density."""
    xy = rng.random((count, 2))
    colors = np.zeros(count, dtype=np.uint8)
    return Configuration(xy=xy, colors=colors, intensity_used=float(count),
                         blue_prob_used=0.5)


def exact_function_table(config: Configuration, rect: Rect) -> FunctionTable:
    """Enumerate f over all colorings of the fixed positions."""
    n = len(config)
    if n > MAX_TABLE_BITS:
        raise ValueError(f"table size 2^{n} exceeds the 2^{MAX_TABLE_BITS} limit")
    frame = CrossingFrame(Scene(config.xy), rect)
    size = 1 << n
    values = np.zeros(size, dtype=np.uint8)
    bits = np.arange(n)
    for omega in range(size):
        blue = ((omega >> bits) & 1).astype(bool)
        values[omega] = frame.blue_horizontal(blue)
    return FunctionTable(values=values, n_bits=n, rect=rect.as_tuple())


def _weights(n_bits: int, p: float) -> np.ndarray:
    """pi_p(omega) for every coloring index."""
    w = np.ones(1)
    for _ in range(n_bits):
        w = np.concatenate([w * (1.0 - p), w * p])
    return w


def table_mean(table: FunctionTable, p: float) -> float:
    return float(_weights(table.n_bits, p) @ table.values)


def table_variance(table: FunctionTable, p: float) -> float:
    m = table_mean(table, p)
    return m - m * m


def is_monotone(table: FunctionTable) -> bool:
    f = table.values
    for k in range(table.n_bits):
        idx = np.arange(f.size)
        low = idx[(idx >> k) & 1 == 0]
        if (f[low] > f[low | (1 << k)]).any():
            return False
    return True


def exact_influence(table: FunctionTable, index: int, p: float) -> float:
    """P_p[f changes when bit ``index`` flips]."""
    f = table.values
    w = _weights(table.n_bits, p)
    flipped = f[np.arange(f.size) ^ (1 << index)]
    return float(w @ (f != flipped))


def _influences(table: FunctionTable, p: float) -> np.ndarray:
    return np.array([exact_influence(table, k, p) for k in range(table.n_bits)])


def bks_statistic(table: FunctionTable, p: float) -> float:
    """Sum of squared influences (the noise-sensitivity criterion)."""
    inf = _influences(table, p)
    return float((inf ** 2).sum())


def derivative_of_mean(table: FunctionTable, p: float) -> float:
    """Exact d/dp of P_p[f=1] from the polynomial form of the mean."""
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie strictly inside (0,1)")
    f = table.values.astype(float)
    w = _weights(table.n_bits, p)
    ones = np.zeros(f.size)
    idx = np.arange(f.size)
    for k in range(table.n_bits):
        ones += (idx >> k) & 1
    score = ones / p - (table.n_bits - ones) / (1.0 - p)
    return float((w * score) @ f)


def check_margulis_russo(table: FunctionTable, p: float = 0.5) -> InequalityReport:
    """d/dp P_p[f=1] versus the influence sum; exact equality when monotone.

    The report's rhs is the influence sum plus the 1e-9 equality budget,
    so ``holds`` means |derivative - sum| <= 1e-9.
    """
    if not is_monotone(table):
        raise NonMonotoneError("Margulis-Russo requires a monotone table")
    lhs = derivative_of_mean(table, p)
    rhs = float(_influences(table, p).sum())
    return InequalityReport(lhs=abs(lhs - rhs), rhs=0.0)


def exact_noise_correlation(table: FunctionTable, eps: float, p: float) -> float:
    """E_p[f(omega) f(omega^eps)] - E_p[f]^2 by per-bit kernel pairing."""
    n = table.n_bits
    if n > MAX_PAIRING_BITS:
        raise ValueError(f"pairing sum limited to {MAX_PAIRING_BITS} bits")
    f = table.values.astype(float).reshape((2,) * n) if n else table.values.astype(float)
    # resampling kernel K[b, b'] = P(bit becomes b' | was b)
    K = np.array([[1.0 - eps + eps * (1.0 - p), eps * p],
                  [eps * (1.0 - p), 1.0 - eps + eps * p]])
    tf = f
    for axis in range(n):
        tf = np.tensordot(K, tf, axes=([1], [axis]))
        tf = np.moveaxis(tf, 0, axis)
    w = _weights(n, p).reshape((2,) * n) if n else _weights(n, p)
    mean = float((w * f).sum())
    return float((w * f * tf).sum()) - mean * mean


@dataclass(frozen=True)
class QueryStats:
    """Per-bit query probabilities of the color-query exploration.

    Exact over colorings (every coloring enumerated with its weight),
    Monte Carlo over the algorithm's line coin; ``per_coin`` has shape
    (coins, n_bits) so rhs inflation can use the coin-sample spread.
    """

    delta: np.ndarray
    per_coin: np.ndarray
    coins: int

    @property
    def delta_max(self) -> float:
        return float(self.delta.max())

    @property
    def delta_max_se(self) -> float:
        k = int(self.delta.argmax())
        if self.coins < 2:
            return 0.0
        return float(self.per_coin[:, k].std(ddof=1) / math.sqrt(self.coins))

    def rhs_se(self, scale: np.ndarray) -> float:
        """Std error of mean_coins(sum_k per_coin * scale_k)."""
        if self.coins < 2:
            return 0.0
        per = self.per_coin @ scale
        return float(per.std(ddof=1) / math.sqrt(self.coins))


def algorithm_query_stats(config: Configuration, rect: Rect, p: float = 0.5,
                          coins: int = 8, seed: int = 0) -> QueryStats:
    """Run the color-query algorithm over all colorings x sampled lines."""
    n = len(config)
    if n > MAX_PAIRING_BITS:
        raise ValueError(f"query statistics limited to {MAX_PAIRING_BITS} bits")
    scene = Scene(config.xy)
    w = _weights(n, p)
    bits = np.arange(n)
    per_coin = np.zeros((coins, n))
    for c in range(coins):
        rng = replica_rng(seed, c)
        x0 = rect.a + rect.width / 3.0 + rng.random() * (rect.width / 3.0)
        for omega in range(1 << n):
            colors = ((omega >> bits) & 1).astype(np.uint8)
            cfg = config.replace(colors=colors)
            tr = run_algorithm_colors(cfg, rect, x0=x0, scene=scene)
            q = np.zeros(n)
            q[tr.queried] = 1.0
            per_coin[c] += w[omega] * q
    delta = per_coin.mean(axis=0)
    return QueryStats(delta=delta, per_coin=per_coin, coins=coins)


def check_osss(table: FunctionTable, stats: QueryStats,
               p: float = 0.5) -> InequalityReport:
    """Var_p(f) <= p(1-p) sum_k delta_k Inf_k, coin noise inflated 3 sigma."""
    lhs = table_variance(table, p)
    inf = _influences(table, p)
    scale = p * (1.0 - p) * inf
    rhs = float(stats.delta @ scale) + 3.0 * stats.rhs_se(scale)
    return InequalityReport(lhs=lhs, rhs=rhs)


def check_schramm_steif(table: FunctionTable, delta_max: float, eps: float,
                        m: int, p: float = 0.5,
                        delta_max_se: float = 0.0) -> InequalityReport:
    """Exact noise correlation versus exp(-eps m) + m^2 delta_max."""
    if m < 0:
        raise ValueError("m must be nonnegative")
    lhs = exact_noise_correlation(table, eps, p)
    rhs = math.exp(-eps * m) + m * m * (delta_max + 3.0 * delta_max_se)
    return InequalityReport(lhs=lhs, rhs=rhs)


def check_influence_upper_bound(table: FunctionTable, delta_max: float,
                                p: float = 0.5,
                                delta_max_se: float = 0.0) -> InequalityReport:
    """Influence sum against both revealment-based upper bounds.

    lhs is the influence sum, rhs the binding (smaller) of
    sqrt(n sum Inf^2) and sqrt(n delta_max)/(p(1-p)); ``holds`` therefore
    certifies both inequalities at once.
    """
    if not is_monotone(table):
        raise NonMonotoneError("the influence upper bound needs monotonicity")
    inf = _influences(table, p)
    n = table.n_bits
    lhs = float(inf.sum())
    rhs_cs = math.sqrt(n * float((inf ** 2).sum()))
    rhs_rev = math.sqrt(n * (delta_max + 3.0 * delta_max_se)) / (p * (1.0 - p))
    return InequalityReport(lhs=lhs, rhs=min(rhs_cs, rhs_rev))
