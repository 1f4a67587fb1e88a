"""Perturbation couplings that preserve the sampling law.

Every operation keeps the point order of its input (point identity is
positional), so couplings can be compared index by index.  The two-stage
construction realizes a configuration as a Bernoulli(1/k) subsample of a
denser Poisson cloud, turning continuum noise into bit noise on presence
indicators.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import Configuration, sample_configuration

__all__ = [
    "CoupledTriple",
    "TwoStageSample",
    "coupled_triple",
    "discrete_noise",
    "eps_map",
    "epsilon_noise",
    "resample_colors",
    "resample_positions",
    "sprinkle",
    "thin",
    "two_stage_sample",
]


def thin(config: Configuration, keep_prob: float, rng: np.random.Generator) -> Configuration:
    """Keep each point independently with probability keep_prob."""
    if not 0.0 <= keep_prob <= 1.0:
        raise ValueError("keep_prob must lie in [0,1]")
    keep = rng.random(len(config)) < keep_prob
    return config.replace(xy=config.xy[keep], colors=config.colors[keep],
                          intensity_used=config.intensity_used * keep_prob)


def sprinkle(config: Configuration, add_intensity: float, p: float,
             rng: np.random.Generator) -> Configuration:
    """Union with a fresh independent Poisson(add_intensity) colored sample."""
    if add_intensity < 0:
        raise ValueError("add_intensity must be nonnegative")
    fresh = sample_configuration(add_intensity, p, rng)
    return config.replace(
        xy=np.vstack([config.xy, fresh.xy]),
        colors=np.concatenate([config.colors, fresh.colors]),
        intensity_used=config.intensity_used + add_intensity)


def epsilon_noise(config: Configuration, eps: float, n: float, p: float,
                  rng: np.random.Generator) -> Configuration:
    """Thin by 1-eps, then sprinkle an independent Poisson(eps*n) sample.

    The output has the same marginal law as the input; the correlation
    with the input decreases in eps (eps=1 is a full resample).
    """
    if not 0.0 <= eps <= 1.0:
        raise ValueError("eps must lie in [0,1]")
    kept = thin(config, 1.0 - eps, rng)
    out = sprinkle(kept, eps * n, p, rng)
    return out.replace(intensity_used=float(n), blue_prob_used=float(p))


def resample_colors(config: Configuration, eps: float,
                    rng: np.random.Generator) -> Configuration:
    """Each point gets a fresh Bernoulli(p) color with probability eps."""
    if not 0.0 <= eps <= 1.0:
        raise ValueError("eps must lie in [0,1]")
    n = len(config)
    hit = rng.random(n) < eps
    fresh = (rng.random(n) < config.blue_prob_used).astype(np.uint8)
    colors = np.where(hit, fresh, config.colors).astype(np.uint8)
    return config.replace(colors=colors)


def resample_positions(config: Configuration, eps: float,
                       rng: np.random.Generator) -> Configuration:
    """Each point gets a fresh uniform location with probability eps.

    Colors and the point count are conserved.
    """
    if not 0.0 <= eps <= 1.0:
        raise ValueError("eps must lie in [0,1]")
    n = len(config)
    hit = rng.random(n) < eps
    fresh = rng.random((n, 2))
    xy = np.where(hit[:, None], fresh, config.xy)
    return config.replace(xy=xy)


@dataclass(frozen=True)
class TwoStageSample:
    """Dense Poisson(k*n) cloud plus Bernoulli(1/k) presence bits.

    The masked subset is distributed exactly like a direct Poisson(n)
    sample; conditional on the dense cloud the bits are i.i.d.
    """

    dense: Configuration
    mask: np.ndarray
    k: float
    n: float

    def __post_init__(self):
        mask = np.ascontiguousarray(self.mask, dtype=bool)
        if mask.shape[0] != len(self.dense):
            raise ValueError("mask length must match the dense point count")
        mask.setflags(write=False)
        object.__setattr__(self, "mask", mask)

    def masked(self, mask: np.ndarray | None = None) -> Configuration:
        """Configuration of the present points (optionally a fresh mask)."""
        m = self.mask if mask is None else np.asarray(mask, dtype=bool)
        return self.dense.replace(xy=self.dense.xy[m], colors=self.dense.colors[m],
                                  intensity_used=self.n)


def two_stage_sample(n: float, k: float, p: float,
                     rng: np.random.Generator) -> TwoStageSample:
    """Sample the dense cloud at intensity k*n and i.i.d. Bernoulli(1/k) bits."""
    if k <= 1.0:
        raise ValueError("k must exceed 1")
    if n <= 0:
        raise ValueError("n must be positive")
    dense = sample_configuration(k * n, p, rng)
    mask = rng.random(len(dense)) < (1.0 / k)
    return TwoStageSample(dense=dense, mask=mask, k=float(k), n=float(n))


def discrete_noise(ts: TwoStageSample, eps: float,
                   rng: np.random.Generator) -> np.ndarray:
    """Resample each presence bit Bernoulli(1/k) with probability eps.

    The returned mask has the same conditional law as the input mask, so
    (masked, noised-masked) is a coupling of two law-preserving samples.
    """
    if not 0.0 <= eps <= 1.0:
        raise ValueError("eps must lie in [0,1]")
    m = ts.mask.shape[0]
    hit = rng.random(m) < eps
    fresh = rng.random(m) < (1.0 / ts.k)
    return np.where(hit, fresh, ts.mask)


def eps_map(eps_prime: float, k: float) -> float:
    """Bit-noise level reproducing a continuum eps_prime perturbation.

    Resampling presence bits at rate eps_prime/(1 - 1/k) couples the
    masked pair exactly like (sample, eps_prime-noised sample).
    """
    if k <= 1.0:
        raise ValueError("k must exceed 1")
    bound = 1.0 - 1.0 / k
    if eps_prime < 0 or eps_prime > bound:
        raise ValueError(f"eps_prime must lie in [0, {bound}] for k={k}")
    return eps_prime / bound


@dataclass(frozen=True)
class CoupledTriple:
    """Three configurations coupling epsilon-noise with position resampling.

    (eta1, eta2) is distributed like (sample, eps-noised sample); (eta1,
    eta3) like (sample, position-resampled sample); eta2 and eta3 share
    their retained points and their fresh-point prefix per color.
    """

    eta1: Configuration
    eta2: Configuration
    eta3: Configuration
    eps: float
    n: float


def coupled_triple(n: float, eps: float, rng: np.random.Generator) -> CoupledTriple:
    """Build the triple from shared uniforms and Poisson counts per color.

    Per color: L, M, N independent Poisson with means (1-eps)n/2, eps*n/2,
    eps*n/2; shared points X_1.. and fresh points Y_1..; then
    eta1 = X[:L+M], eta2 = X[:L] + Y[:N], eta3 = X[:L] + Y[:M].
    """
    if not 0.0 <= eps <= 1.0:
        raise ValueError("eps must lie in [0,1]")
    if n <= 0:
        raise ValueError("n must be positive")
    parts1, parts2, parts3 = [], [], []
    for color in (0, 1):
        L = int(rng.poisson((1.0 - eps) * n / 2.0))
        M = int(rng.poisson(eps * n / 2.0))
        N = int(rng.poisson(eps * n / 2.0))
        shared = rng.random((L + M, 2))
        fresh = rng.random((max(M, N), 2))
        parts1.append((shared[:L + M], color))
        parts2.append((np.vstack([shared[:L], fresh[:N]]), color))
        parts3.append((np.vstack([shared[:L], fresh[:M]]), color))
    def assemble(parts):
        xy = np.vstack([pts for pts, _ in parts])
        colors = np.concatenate([np.full(len(pts), col, dtype=np.uint8)
                                 for pts, col in parts])
        return Configuration(xy=xy, colors=colors, intensity_used=float(n),
                             blue_prob_used=0.5)
    return CoupledTriple(eta1=assemble(parts1), eta2=assemble(parts2),
                         eta3=assemble(parts3), eps=float(eps), n=float(n))
