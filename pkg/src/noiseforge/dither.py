"""Dithered quantization of received signals and the derandomization search.

A read y quantized at resolution m becomes floor(y to the 2**-m grid) plus
a dither u drawn from the open interval (-2**-m-1, 2**-m-1).  Adding the
dither gives the quantized read a density that approaches the original law
as m grows, which is what the two-sample KS sweep here measures.  Fixing
the dither vector turns the randomized scheme back into a deterministic
one with reading precision m; the search below picks the best of a finite
candidate set, whose error estimate can never exceed the candidate average.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import ks_2samp

from . import mc
from .coding import CodingScheme, floor_precision, run_scheme
from .network import NetworkModel, NoiseSpec, draw_noise_batch

__all__ = [
    "DitherSpec",
    "dither_quantize",
    "apply_dither",
    "density_convergence_test",
    "DitherCandidate",
    "DitherSearchResult",
    "derandomize_dither",
]


@dataclass(frozen=True)
class DitherSpec:
    """Resolution plus a fixed per-node, per-time dither vector."""

    m: int
    u: np.ndarray  # shape (|V|, n), entries strictly inside (-2**-m-1, 2**-m-1)

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        half = 2.0 ** (-self.m - 1)
        if np.any(np.abs(u) >= half):
            raise ValueError(f"dither entries must lie strictly inside (+-{half})")
        u = u.copy()
        u.flags.writeable = False
        object.__setattr__(self, "u", u)


def dither_quantize(y, m: int, u):
    """floor(y to the 2**-m grid) + u, with |u| < 2**-(m+1) enforced."""
    half = 2.0 ** (-m - 1)
    u_arr = np.asarray(u, dtype=float)
    if np.any(np.abs(u_arr) >= half):
        raise ValueError(f"dither {u!r} outside the open interval (+-{half})")
    out = floor_precision(y, m) + u_arr
    if np.isscalar(y) or np.ndim(y) == 0:
        return float(out)
    return out


def apply_dither(scheme: CodingScheme, m: int, u) -> CodingScheme:
    """Deterministic scheme whose relays/decoders see floor_m(y) + u.

    The dither is absorbed into the node functions, so the result has
    reading precision m: flooring the inputs again changes nothing.
    """
    u = np.asarray(u, dtype=float)
    n = scheme.block_length

    def wrap_relay(v, fn):
        uv = u[v]

        def relay(t, reads):
            return fn(t, floor_precision(reads, m) + uv[:t])

        return relay

    def wrap_decoder(dest, fn):
        ud = u[dest]

        def decoder(reads):
            return fn(floor_precision(reads, m) + ud)

        return decoder

    if u.ndim != 2 or u.shape[1] != n:
        raise ValueError(f"dither shape {u.shape} does not match (|V|, {n})")
    DitherSpec(m, u)  # bounds check
    return CodingScheme(
        block_length=n,
        demands=scheme.demands,
        rates=scheme.rates,
        encoders=scheme.encoders,
        relays={v: wrap_relay(v, fn) for v, fn in scheme.relays.items()},
        decoders={key: wrap_decoder(key[1], fn) for key, fn in scheme.decoders.items()},
        power=scheme.power,
        precision=m,
    )


def density_convergence_test(
    spec: NoiseSpec,
    m_list,
    trials: int,
    rng: np.random.Generator,
) -> list[tuple[int, float]]:
    """Two-sample KS between quantized-plus-dithered draws and fresh draws.

    Only laws with a density qualify; the discrete families are rejected.
    Distances shrink along an ascending m list, down to the two-sample
    sampling floor once the grid is much finer than the sample spacing.
    """
    ms = [int(m) for m in m_list]
    if ms != sorted(ms):
        raise ValueError("m_list must be ascending")
    if spec.is_discrete:
        raise ValueError(f"{spec.family} has no density; dither convergence undefined")
    if spec.variance == 0.0:
        raise ValueError("degenerate sigma=0 law has no density")
    out = []
    for m in ms:
        y = spec.sample(rng, trials)
        half = 2.0 ** (-m - 1)
        u = rng.uniform(-half, half, trials)
        quantized = floor_precision(y, m) + u
        fresh = spec.sample(rng, trials)
        out.append((m, float(ks_2samp(quantized, fresh).statistic)))
    return out


@dataclass(frozen=True)
class DitherCandidate:
    candidate_id: int
    errors: int
    trials: int
    estimate: float
    ci_low: float
    ci_high: float
    selected: bool


@dataclass(frozen=True)
class DitherSearchResult:
    spec: DitherSpec
    candidates: tuple[DitherCandidate, ...]
    best_estimate: float
    mean_estimate: float


def _estimate_with_dither(scheme, net, m, u, trials, seed) -> int:
    """Errors of the m-quantized scheme under dither u (common random numbers)."""
    quantized = apply_dither(scheme, m, u)
    n = scheme.block_length
    counts = [scheme.message_count(i) for i in range(len(scheme.demands))]
    errors = 0
    sizes = mc.chunk_sizes(trials, 4096)
    rngs = mc.chunk_rngs(seed, len(sizes))
    for size, rng in zip(sizes, rngs):
        msgs = np.stack([rng.integers(1, c + 1, size) for c in counts], axis=1)
        noise = draw_noise_batch(net, n, size, rng)
        for j in range(size):
            if run_scheme(quantized, net, msgs[j], noise[j]).error:
                errors += 1
    return errors


def derandomize_dither(
    scheme: CodingScheme,
    net: NetworkModel,
    m: int,
    candidates: int,
    trials: int,
    rng: np.random.Generator,
    threads: int = 1,
) -> DitherSearchResult:
    """Search random dither vectors and keep the best.

    Every candidate is scored on the same message/noise draws, so the
    returned minimum is at most the candidate average by construction.
    """
    if candidates < 1:
        raise ValueError("need at least one candidate")
    half = 2.0 ** (-m - 1)
    nv, n = net.num_nodes, scheme.block_length
    vecs = []
    for _ in range(candidates):
        u = rng.uniform(-half, half, (nv, n))
        while np.any(np.abs(u) >= half):
            u = rng.uniform(-half, half, (nv, n))
        vecs.append(u)
    eval_seed = int(rng.integers(0, 2**63 - 1))

    counts = mc.parallel_map(
        lambda u: _estimate_with_dither(scheme, net, m, u, trials, eval_seed),
        vecs,
        threads,
    )

    estimates = [k / trials for k in counts]
    best = int(np.argmin(estimates))
    rows = []
    for i, k in enumerate(counts):
        lo, hi = mc.wilson_interval(k, trials)
        rows.append(
            DitherCandidate(i, k, trials, estimates[i], lo, hi, selected=(i == best))
        )
    return DitherSearchResult(
        spec=DitherSpec(m, vecs[best]),
        candidates=tuple(rows),
        best_estimate=estimates[best],
        mean_estimate=float(np.mean(estimates)),
    )
