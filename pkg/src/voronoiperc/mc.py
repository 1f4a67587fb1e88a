"""Monte Carlo estimators with deterministic per-replica seeding.

Replica r of an experiment with master seed s uses the generator
PCG64(splitmix64(s + (r+1)*GOLDEN)), so results are a pure function of
(parameters, seed) no matter how replicas are scheduled across threads;
reductions always run in replica order.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .config import Configuration, Rect, sample_configuration
from .crossing import CrossingFrame, has_blue_horizontal_crossing
from .explore import MesoGrid, estimate_revealment
from .geometry import Scene
from .perturb import (TwoStageSample, coupled_triple, epsilon_noise,
                      resample_colors, resample_positions, two_stage_sample)

__all__ = [
    "MCEstimate",
    "WindowEstimate",
    "WindowUnresolvedError",
    "RNG_SCHEME",
    "replica_seed",
    "replica_rng",
    "crossing_probability",
    "noise_correlation",
    "conditional_variance",
    "threshold_window",
    "one_arm_probability",
    "large_cell_probability",
    "srs_disagreement",
    "revealment_tail",
    "max_revealment_samples",
    "pav_nondecreasing",
]

RNG_SCHEME = "pcg64-splitmix64-v1"

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def replica_seed(master_seed: int, replica: int) -> int:
    """64-bit mix of (master seed, replica index); splitmix64 finalizer."""
    z = (master_seed + (replica + 1) * _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def replica_rng(master_seed: int, replica: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(replica_seed(master_seed, replica)))


def run_replicas(worker, reps: int, seed: int, threads: int = 1) -> list:
    """worker(replica_index, rng) fanned out; results in replica order."""
    results = [None] * reps
    if threads <= 1:
        for r in range(reps):
            results[r] = worker(r, replica_rng(seed, r))
        return results

    def chunk(lo, hi):
        for r in range(lo, hi):
            results[r] = worker(r, replica_rng(seed, r))

    bounds = np.linspace(0, reps, threads + 1).astype(int)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(chunk, bounds[t], bounds[t + 1])
                   for t in range(threads)]
        for f in futures:
            f.result()
    return results


@dataclass(frozen=True)
class MCEstimate:
    """Monte Carlo mean with its standard error and provenance."""

    mean: float
    std_error: float
    reps: int
    seed: int
    params: dict = field(default_factory=dict, compare=False)

    def ci95(self) -> tuple[float, float]:
        half = 1.96 * self.std_error
        return (self.mean - half, self.mean + half)


def _estimate(values: np.ndarray, seed: int, params: dict) -> MCEstimate:
    values = np.asarray(values, dtype=float)
    reps = values.size
    if reps < 2:
        raise ValueError("need at least 2 replicas")
    sd = float(values.std(ddof=1))
    return MCEstimate(mean=float(values.mean()), std_error=sd / math.sqrt(reps),
                      reps=reps, seed=seed, params=params)


# ---------------------------------------------------------------------------
# crossing probability and noise correlations

def crossing_probability(n: float, p: float, rect: Rect, reps: int, seed: int,
                         threads: int = 1) -> MCEstimate:
    """P[f_R = 1] over independent configurations."""

    def worker(r, rng):
        cfg = sample_configuration(n, p, rng)
        return float(has_blue_horizontal_crossing(cfg, rect))

    vals = run_replicas(worker, reps, seed, threads)
    return _estimate(np.asarray(vals), seed,
                     {"op": "crossing_probability", "n": n, "p": p,
                      "rect": rect.as_tuple(), "reps": reps})


_NOISE_KINDS = ("eps_noise", "color", "position", "thin_couple")


def _noise_pair(kind: str, n: float, p: float, eps: float,
                rng: np.random.Generator) -> tuple[Configuration, Configuration]:
    if kind == "eps_noise":
        cfg = sample_configuration(n, p, rng)
        return cfg, epsilon_noise(cfg, eps, n, p, rng)
    if kind == "color":
        cfg = sample_configuration(n, p, rng)
        return cfg, resample_colors(cfg, eps, rng)
    if kind == "position":
        cfg = sample_configuration(n, p, rng)
        return cfg, resample_positions(cfg, eps, rng)
    if kind == "thin_couple":
        # two independent 1/k subsamples of a dense cloud couple like an
        # eps-noise pair at eps = 1 - 1/k, so here k = 1/(1-eps)
        if eps >= 1.0:
            k = np.inf
        else:
            k = 1.0 / (1.0 - eps)
        if not np.isfinite(k):
            return sample_configuration(n, p, rng), sample_configuration(n, p, rng)
        ts = two_stage_sample(n, k, p, rng)
        m1 = rng.random(len(ts.dense)) < (1.0 / k)
        m2 = rng.random(len(ts.dense)) < (1.0 / k)
        return ts.masked(m1), ts.masked(m2)
    raise ValueError(f"unknown noise kind {kind!r}; choose from {_NOISE_KINDS}")


def noise_correlation(n: float, p: float, eps: float, rect: Rect, reps: int,
                      kind: str, seed: int, threads: int = 1) -> MCEstimate:
    """Cov(f(sample), f(perturbed sample)) under the requested coupling.

    The paired sample covariance (1/(reps-1) normalization) is unbiased
    for E[f f~] - E[f]^2 because both marginals share the same law.
    """

    def worker(r, rng):
        cfg, other = _noise_pair(kind, n, p, eps, rng)
        return (float(has_blue_horizontal_crossing(cfg, rect)),
                float(has_blue_horizontal_crossing(other, rect)))

    pairs = np.asarray(run_replicas(worker, reps, seed, threads))
    x, y = pairs[:, 0], pairs[:, 1]
    cx, cy = x - x.mean(), y - y.mean()
    cov = float(np.dot(cx, cy) / (reps - 1))
    se = float(np.std(cx * cy, ddof=1) / math.sqrt(reps))
    return MCEstimate(mean=cov, std_error=se, reps=reps, seed=seed,
                      params={"op": "noise_correlation", "kind": kind, "n": n,
                              "p": p, "eps": eps, "rect": rect.as_tuple(),
                              "reps": reps})


def conditional_variance(n: float, k: float, p: float, rect: Rect,
                         outer_reps: int = 512, inner_reps: int = 32,
                         seed: int = 0, threads: int = 1) -> MCEstimate:
    """Var(E[f_R | dense cloud]) by nested Monte Carlo.

    The naive variance of inner means overshoots by the mean inner
    sampling variance / inner_reps; the standard ANOVA correction
    subtracts it.
    """
    if inner_reps < 2:
        raise ValueError("inner_reps must be at least 2")

    def worker(r, rng):
        ts = two_stage_sample(n, k, p, rng)
        vals = np.empty(inner_reps)
        for i in range(inner_reps):
            mask = rng.random(len(ts.dense)) < (1.0 / k)
            vals[i] = float(has_blue_horizontal_crossing(ts.masked(mask), rect))
        return vals.mean(), vals.var(ddof=1)

    res = np.asarray(run_replicas(worker, outer_reps, seed, threads))
    means, ivars = res[:, 0], res[:, 1]
    centered = (means - means.mean()) ** 2 * (outer_reps / (outer_reps - 1.0))
    g = centered - ivars / inner_reps
    est = float(g.mean())
    se = float(g.std(ddof=1) / math.sqrt(outer_reps))
    return MCEstimate(mean=est, std_error=se, reps=outer_reps, seed=seed,
                      params={"op": "conditional_variance", "n": n, "k": k,
                              "p": p, "rect": rect.as_tuple(),
                              "outer_reps": outer_reps, "inner_reps": inner_reps})


# ---------------------------------------------------------------------------
# threshold window

class WindowUnresolvedError(RuntimeError):
    """The fitted curve never exits (eps, 1-eps) on the supplied grid."""


@dataclass(frozen=True)
class WindowEstimate:
    """Interval of p where the fitted crossing curve sits in (eps, 1-eps)."""

    p_lo: float
    p_hi: float
    eps_level: float
    grid: list
    seed: int

    @property
    def width(self) -> float:
        return self.p_hi - self.p_lo


def pav_nondecreasing(y: np.ndarray, w: np.ndarray | None = None) -> np.ndarray:
    """Pool-adjacent-violators fit of a nondecreasing sequence."""
    y = np.asarray(y, dtype=float)
    w = np.ones_like(y) if w is None else np.asarray(w, dtype=float)
    vals, wts, counts = [], [], []
    for yi, wi in zip(y, w):
        vals.append(yi)
        wts.append(wi)
        counts.append(1)
        while len(vals) > 1 and vals[-2] > vals[-1]:
            wtot = wts[-2] + wts[-1]
            vnew = (vals[-2] * wts[-2] + vals[-1] * wts[-1]) / wtot
            vals[-2:] = [vnew]
            wts[-2:] = [wtot]
            counts[-2:] = [counts[-2] + counts[-1]]
    return np.repeat(vals, counts)


def _interp_crossing(p_grid, fit, level):
    if fit[0] > level:
        return None
    for i in range(len(fit) - 1):
        if fit[i] <= level < fit[i + 1]:
            span = fit[i + 1] - fit[i]
            frac = (level - fit[i]) / span
            return float(p_grid[i] + frac * (p_grid[i + 1] - p_grid[i]))
    return None


def _crn_jump(n, p_grid, rect, rng):
    """Grid index of the first p with a crossing, under shared randomness.

    Positions are fixed; colors are blue where a shared uniform is below
    p, so the crossing indicator is nondecreasing in p along the grid and
    has a single jump that binary search locates.
    """
    count = int(rng.poisson(n)) if n > 0 else 0
    xy = rng.random((count, 2))
    u = rng.random(count)
    if count == 0:
        return len(p_grid)  # all red at every p: never crosses
    scene = Scene(xy)
    frame = CrossingFrame(scene, rect)

    def f(ip):
        return frame.blue_horizontal(u < p_grid[ip])

    lo, hi = 0, len(p_grid) - 1
    if not f(hi):
        return len(p_grid)
    if f(lo):
        return 0
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if f(mid):
            hi = mid
        else:
            lo = mid
    return hi


def threshold_window(n: float, eps_level: float, rect: Rect, p_grid,
                     reps_per_point: int, seed: int,
                     threads: int = 1) -> WindowEstimate:
    """Isotonic crossing curve on the grid and its (eps, 1-eps) window."""
    p_grid = np.asarray(p_grid, dtype=float)
    if p_grid.ndim != 1 or len(p_grid) < 2 or (np.diff(p_grid) <= 0).any():
        raise ValueError("p_grid must be strictly increasing")
    if p_grid.min() < 0 or p_grid.max() > 1:
        raise ValueError("p_grid must lie within [0,1]")
    if not 0.0 < eps_level < 0.5:
        raise ValueError("eps_level must lie in (0, 1/2)")

    jumps = np.asarray(run_replicas(lambda r, rng: _crn_jump(n, p_grid, rect, rng),
                                    reps_per_point, seed, threads))
    curve = np.array([(jumps <= i).mean() for i in range(len(p_grid))])
    fit = pav_nondecreasing(curve)
    grid = []
    for i, p in enumerate(p_grid):
        q = curve[i]
        se = math.sqrt(max(q * (1 - q), 1e-300) / reps_per_point)
        grid.append((float(p), MCEstimate(mean=float(q), std_error=se,
                                          reps=reps_per_point, seed=seed,
                                          params={"op": "crossing_curve",
                                                  "n": n, "p": float(p)})))
    p_lo = _interp_crossing(p_grid, fit, eps_level)
    p_hi = _interp_crossing(p_grid, fit, 1.0 - eps_level)
    if p_lo is None or p_hi is None:
        raise WindowUnresolvedError(
            f"crossing curve does not exit ({eps_level}, {1 - eps_level}) "
            f"on the grid [{p_grid[0]}, {p_grid[-1]}]")
    return WindowEstimate(p_lo=p_lo, p_hi=p_hi, eps_level=eps_level,
                          grid=grid, seed=seed)


# ---------------------------------------------------------------------------
# one-arm and large-cell events

def _poly_rect_area(poly: np.ndarray, rect: Rect) -> float:
    """Area of a convex polygon clipped to a rectangle."""
    pts = poly
    for gx, gy, c in ((1.0, 0.0, rect.b), (-1.0, 0.0, -rect.a),
                      (0.0, 1.0, rect.d), (0.0, -1.0, -rect.c)):
        if len(pts) == 0:
            return 0.0
        s = gx * pts[:, 0] + gy * pts[:, 1] - c
        out = []
        for i in range(len(pts)):
            j = (i + 1) % len(pts)
            if s[i] <= 0:
                out.append(pts[i])
            if (s[i] <= 0) != (s[j] <= 0):
                t = s[i] / (s[i] - s[j])
                out.append(pts[i] + t * (pts[j] - pts[i]))
        pts = np.asarray(out) if out else np.empty((0, 2))
    if len(pts) < 3:
        return 0.0
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y)))


def one_arm_probability(n: float, cell_center, reps: int, seed: int,
                        p: float = 0.5, threads: int = 1) -> MCEstimate:
    """P[a blue path joins the 3m-square at C to the sqrt(m)-square boundary].

    C is the mesh cell containing ``cell_center``; decisions run over blue
    cells clipped to the sqrt(m)-square intersected with S.
    """
    grid = MesoGrid.for_intensity(n)
    m = grid.mesh
    cx = min(grid.g - 1, max(0, int(cell_center[0] * grid.g)))
    cy = min(grid.g - 1, max(0, int(cell_center[1] * grid.g)))
    ccx, ccy = (cx + 0.5) * m, (cy + 0.5) * m
    side = math.sqrt(m)
    outer = Rect(max(0.0, ccx - side / 2), min(1.0, ccx + side / 2),
                 max(0.0, ccy - side / 2), min(1.0, ccy + side / 2))
    if outer.width <= kernels.POS_TOL or outer.height <= kernels.POS_TOL:
        raise ValueError("the sqrt(m)-square around the cell degenerates in S")
    inner = Rect(max(outer.a, ccx - 1.5 * m), min(outer.b, ccx + 1.5 * m),
                 max(outer.c, ccy - 1.5 * m), min(outer.d, ccy + 1.5 * m))
    # target: the original square's perimeter, the parts inside S
    segs = []
    for x in (ccx - side / 2, ccx + side / 2):
        if 0.0 <= x <= 1.0 and outer.height > kernels.POS_TOL:
            segs.append(((x, outer.c), (x, outer.d)))
    for y in (ccy - side / 2, ccy + side / 2):
        if 0.0 <= y <= 1.0 and outer.width > kernels.POS_TOL:
            segs.append(((outer.a, y), (outer.b, y)))

    def worker(r, rng):
        cfg = sample_configuration(n, p, rng)
        if cfg.is_empty:
            return 0.0
        scene = Scene(cfg.xy)
        blue = cfg.blue_mask
        if not blue.any():
            return 0.0
        lengths = scene.edge_lengths_in(outer)
        pairs = scene.edges[lengths > kernels.POS_TOL]
        keep = blue[pairs[:, 0]] & blue[pairs[:, 1]]
        sub = pairs[keep]
        labels = kernels.label_components(
            scene.n, np.ascontiguousarray(sub[:, 0]), np.ascontiguousarray(sub[:, 1]))
        target = np.zeros(scene.n, dtype=bool)
        for p0, p1 in segs:
            target |= scene.segment_lengths(p0, p1) > kernels.POS_TOL
        target &= blue
        if not target.any():
            return 0.0
        verts, offsets = scene.polygons
        bb = scene.bboxes
        cand = np.nonzero(blue & (bb[:, 0] < inner.b) & (bb[:, 2] > inner.a)
                          & (bb[:, 1] < inner.d) & (bb[:, 3] > inner.c))[0]
        source = np.zeros(scene.n, dtype=bool)
        for i in cand:
            if _poly_rect_area(verts[offsets[i]:offsets[i + 1]], inner) > kernels.POS_TOL:
                source[i] = True
        if not source.any():
            return 0.0
        hit = np.zeros(scene.n, dtype=bool)
        hit[labels[source]] = True
        return float(hit[labels[target]].any())

    vals = run_replicas(worker, reps, seed, threads)
    return _estimate(np.asarray(vals), seed,
                     {"op": "one_arm_probability", "n": n, "p": p,
                      "cell_center": tuple(cell_center), "reps": reps})


def large_cell_probability(n: float, reps: int, seed: int,
                           threads: int = 1) -> MCEstimate:
    """P[some clipped cell has site-to-vertex radius above n^(-1/3)]."""
    threshold = n ** (-1.0 / 3.0)

    def worker(r, rng):
        cfg = sample_configuration(n, 0.5, rng)
        if cfg.is_empty:
            return 0.0
        return float(Scene(cfg.xy).radii.max() > threshold)

    vals = run_replicas(worker, reps, seed, threads)
    return _estimate(np.asarray(vals), seed,
                     {"op": "large_cell_probability", "n": n, "reps": reps,
                      "threshold": threshold})


# ---------------------------------------------------------------------------
# square-root stability and revealment statistics

def srs_disagreement(n: float, eps: float, rect: Rect, reps: int, seed: int,
                     threads: int = 1) -> MCEstimate:
    """P[f differs between the coupled eps-noise and position-resample]."""

    def worker(r, rng):
        tri = coupled_triple(n, eps, rng)
        return float(has_blue_horizontal_crossing(tri.eta2, rect)
                     != has_blue_horizontal_crossing(tri.eta3, rect))

    vals = run_replicas(worker, reps, seed, threads)
    return _estimate(np.asarray(vals), seed,
                     {"op": "srs_disagreement", "n": n, "eps": eps,
                      "rect": rect.as_tuple(), "reps": reps})


def max_revealment_samples(n: float, k: float, rect: Rect, dense_reps: int,
                           inner_reps: int, seed: int,
                           threads: int = 1) -> np.ndarray:
    """Max-revealment estimate per independent dense configuration."""

    def worker(r, rng):
        ts = two_stage_sample(n, k, 0.5, rng)
        est = estimate_revealment(ts, rect, inner_reps, rng)
        return est.maximum

    return np.asarray(run_replicas(worker, dense_reps, seed, threads))


def revealment_tail(n: float, k: float, rect: Rect, dense_reps: int,
                    inner_reps: int, threshold: float, seed: int,
                    threads: int = 1) -> MCEstimate:
    """Fraction of dense draws whose max revealment exceeds the threshold."""
    if not 0.0 <= threshold <= 1.0:
        raise ValueError("threshold must lie in [0,1]")
    samples = max_revealment_samples(n, k, rect, dense_reps, inner_reps,
                                     seed, threads)
    return _estimate((samples > threshold).astype(float), seed,
                     {"op": "revealment_tail", "n": n, "k": k,
                      "threshold": threshold, "dense_reps": dense_reps,
                      "inner_reps": inner_reps})
