"""Statistical checks on the mixed noise: variance sums, Lindeberg truncation
ratios, Kolmogorov-Smirnov distances, and convergence sweeps in the block
size b.

The triangular-array terms behind a middle bin at frequency l are
Y_i = N[i] * cos(2 pi i l / b); their variance sum has the closed form
b sigma^2 / 2 for l outside {0, b/2} and b sigma^2 on those two bins.  The
truncation ratio

    (1 / s_b^2) * sum_i E[ Y_i^2 * 1{|Y_i| >= eps * s_b} ]

tends to 0 as b grows for any finite-variance law, which is what drives
every bin's noise to a Gaussian limit; the sweeps here measure that
convergence directly as a KS distance against N(0, sigma^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from . import mc
from .mixer import effective_noise, representative_bin
from .network import NoiseSpec

__all__ = [
    "GoodnessReport",
    "NoiseSampleSet",
    "s_b_squared",
    "lindeberg_ratio",
    "ks_statistic",
    "ks_critical_value",
    "ks2_critical_value",
    "sample_effective_noise",
    "sample_effective_bin",
    "convergence_sweep",
    "cross_bin_covariance",
]

_CHUNK = 20_000


def s_b_squared(sigma: float, b: int, ell: int) -> float:
    """Variance sum of the frequency-l cosine-weighted noise terms.

    Equals b sigma^2 / 2 except at l in {0, b/2}, where the cosines are
    all +/-1 and the sum is b sigma^2.
    """
    if b < 2 or b % 2 != 0:
        raise ValueError(f"block size must be even and >= 2, got {b}")
    if not (0 <= ell <= b - 1):
        raise ValueError(f"bin {ell} outside 0..{b - 1}")
    if ell in (0, b // 2):
        return b * sigma * sigma
    return b * sigma * sigma / 2.0


def lindeberg_ratio(
    spec: NoiseSpec,
    b: int,
    ell: int,
    eps: float,
    trials: int = 200_000,
    rng: np.random.Generator | None = None,
) -> float:
    """Truncation ratio of the cosine-weighted noise array at level eps.

    Exact summation for the discrete families; Monte Carlo over ``trials``
    draws otherwise.  Requires a middle bin (l not in {0, b/2}) and a
    non-degenerate law.
    """
    if eps <= 0.0:
        raise ValueError("eps must be > 0")
    if ell in (0, b // 2):
        raise ValueError(f"bin {ell} is not a middle bin for b={b}")
    if spec.variance == 0.0:
        raise ValueError("degenerate sigma=0 law has no Lindeberg ratio")
    sb2 = s_b_squared(spec.sigma, b, ell)
    thr = eps * math.sqrt(sb2)
    c = np.cos(2.0 * np.pi * np.arange(b) * ell / b)

    if spec.is_discrete:
        atoms, probs = spec.atom_table()
        prod = np.abs(atoms[:, None] * c[None, :])
        contrib = (atoms**2)[:, None] * (c**2)[None, :] * (prod >= thr)
        return float(np.sum(probs[:, None] * contrib) / sb2)

    if rng is None:
        rng = np.random.default_rng(0)
    x = np.abs(spec.sample(rng, trials))
    order = np.sort(x)
    tail_sq = np.concatenate([np.cumsum((order**2)[::-1])[::-1], [0.0]])
    total = 0.0
    for ci in c:
        a = abs(ci)
        if a == 0.0:
            continue
        idx = np.searchsorted(order, thr / a, side="left")
        total += ci * ci * tail_sq[idx] / trials
    return float(total / sb2)


def ks_statistic(samples, sigma2: float) -> float:
    """One-sample KS distance of ``samples`` against N(0, sigma2)."""
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    n = x.size
    if n == 0:
        raise ValueError("need at least one sample")
    if sigma2 <= 0.0:
        raise ValueError("target variance must be > 0")
    cdf = norm.cdf(x / math.sqrt(sigma2))
    grid = np.arange(1, n + 1) / n
    d_plus = np.max(grid - cdf)
    d_minus = np.max(cdf - (grid - 1.0 / n))
    return float(max(d_plus, d_minus))


def ks_critical_value(n: int, alpha: float = 0.01) -> float:
    """Asymptotic one-sample KS critical value c(alpha) / sqrt(n)."""
    if n < 1 or not (0.0 < alpha < 1.0):
        raise ValueError("need n >= 1 and 0 < alpha < 1")
    return math.sqrt(-0.5 * math.log(alpha / 2.0)) / math.sqrt(n)


def ks2_critical_value(n1: int, n2: int, alpha: float = 0.01) -> float:
    """Asymptotic two-sample KS critical value."""
    if n1 < 1 or n2 < 1 or not (0.0 < alpha < 1.0):
        raise ValueError("need n1, n2 >= 1 and 0 < alpha < 1")
    return math.sqrt(-0.5 * math.log(alpha / 2.0)) * math.sqrt((n1 + n2) / (n1 * n2))


@dataclass(frozen=True)
class NoiseSampleSet:
    """Effective-noise draws, one row per canonical bin."""

    samples: np.ndarray  # (bins, trials)
    source: NoiseSpec
    b: int


@dataclass(frozen=True)
class GoodnessReport:
    family: str
    sigma2: float
    b: int
    bin: int
    trials: int
    ks: float
    critical: float
    variance: float
    passed: bool


def sample_effective_noise(
    spec: NoiseSpec, b: int, trials: int, rng: np.random.Generator
) -> NoiseSampleSet:
    """Run ``trials`` fresh physical noise blocks through the receive map."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    cols = []
    done = 0
    while done < trials:
        m = min(_CHUNK, trials - done)
        block = spec.sample(rng, m * b).reshape(m, b)
        cols.append(effective_noise(block).T)
        done += m
    return NoiseSampleSet(np.hstack(cols), spec, b)


def sample_effective_bin(
    spec: NoiseSpec, b: int, canonical_bin: int, trials: int, rng: np.random.Generator
) -> np.ndarray:
    """Effective-noise draws at a single canonical bin (memory-light)."""
    out = np.empty(trials)
    done = 0
    while done < trials:
        m = min(_CHUNK, trials - done)
        block = spec.sample(rng, m * b).reshape(m, b)
        out[done : done + m] = effective_noise(block)[:, canonical_bin]
        done += m
    return out


def convergence_sweep(
    spec: NoiseSpec,
    b_list,
    trials: int,
    bin_kind: str | int = "II",
    seed: int = 0,
    alpha: float = 0.01,
    threads: int = 1,
) -> list[GoodnessReport]:
    """KS of the selected bin's effective noise against N(0, sigma^2), per b.

    ``bin_kind`` picks a channel type ("I", "II", "III", "IV") or an
    explicit canonical bin index.  The returned sequence is the empirical
    convergence evidence: for non-Gaussian laws the distances shrink as b
    grows, for Gaussian laws every b passes (the transform preserves the
    law exactly).
    """
    blist = [int(b) for b in b_list]
    if blist != sorted(blist) or any(b % 2 for b in blist):
        raise ValueError("b_list must be ascending and even")
    sigma2 = spec.variance
    if sigma2 <= 0.0:
        raise ValueError("convergence sweep needs sigma^2 > 0")

    def one(idx_b):
        idx, b = idx_b
        canon = representative_bin(b, bin_kind) if isinstance(bin_kind, str) else int(bin_kind)
        rng = np.random.default_rng(np.random.SeedSequence((int(seed), idx)))
        draws = sample_effective_bin(spec, b, canon, trials, rng)
        ks = ks_statistic(draws, sigma2)
        crit = ks_critical_value(trials, alpha)
        return GoodnessReport(
            family=spec.family,
            sigma2=sigma2,
            b=b,
            bin=canon,
            trials=trials,
            ks=ks,
            critical=crit,
            variance=float(np.var(draws)),
            passed=bool(ks < crit),
        )

    return mc.parallel_map(one, list(enumerate(blist)), threads)


def cross_bin_covariance(samples) -> np.ndarray:
    """Empirical covariance across bins; diagonal ~ sigma^2, off-diagonal ~ 0."""
    m = samples.samples if isinstance(samples, NoiseSampleSet) else np.asarray(samples)
    if m.ndim != 2 or m.shape[1] < 100:
        raise ValueError("need a (bins, trials) matrix with >= 100 trials")
    return np.cov(m)
