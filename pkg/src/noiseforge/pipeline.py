"""The headline construction: wrap an inner scheme with the mixer and
interleaver to obtain a block-length b*k scheme whose per-bin noise tends
to Gaussian, and measure everything that entails.

``transform_scheme`` runs b copies of a finite-precision inner scheme in
parallel.  At effective time t each node assembles one input per bin,
pushes the length-b vector through the transmit map, and sends the b
physical values over times b*t .. b*t+b-1; receivers apply the receive map
to each completed physical block, so a relay acting at effective time t
sees exactly the effective reads of blocks 0..t-1.  Bin l therefore
experiences the original network with the bin-l effective noise, and the
interleaver view groups the reads into b logical blocks of k uses with
i.i.d. noise inside each block.

The per-bin error rates eps_kb (max over bins) are estimated by Monte
Carlo with Wilson intervals and compared against the inner scheme's error
eps_k on the matching Gaussian network.  The rate side is covered by the
Fano bound R (1 - eps_kb) - 1/k, a plug-in mutual-information estimate of
the per-block superchannel, and a toy random outer code with exhaustive
decoding.  A convexity probe checks the geometric fact behind the whole
argument: the set of noise vectors producing one fixed floored read
trajectory is convex, so within-cell perturbations can never flip a read.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import mc
from .coding import CodingScheme, MessageVector, floor_precision, run_scheme
from .interleaver import interleave
from .mixer import receive_transform, transmit_transform
from .network import NetworkModel, NoiseSpec, draw_noise_batch

__all__ = [
    "TransformedScheme",
    "TransformedRun",
    "transform_scheme",
    "run_transformed",
    "draw_bin_messages",
    "ErrorEstimate",
    "estimate_error_probability",
    "BinEstimate",
    "ExperimentReport",
    "epsilon_kb_report",
    "gaussian_twin",
    "fano_rate_bound",
    "superchannel_mi",
    "ProbeResult",
    "convexity_probe",
    "OuterCodeResult",
    "toy_outer_code",
]

_CHUNK = 4096
_POWER_SLACK = 1e-9


@dataclass(frozen=True)
class TransformedScheme:
    """b parallel copies of a finite-precision inner scheme, length b*k."""

    inner: CodingScheme
    b: int

    @property
    def block_length(self) -> int:
        return self.b * self.inner.block_length


def transform_scheme(inner: CodingScheme, b: int) -> TransformedScheme:
    """Wrap ``inner`` with the length-b mixing transform.

    The inner scheme must declare a finite reading precision: the per-bin
    decisions have to be functions of floored effective reads for the
    error sets to behave under the Gaussian limit.
    """
    if inner.precision is None:
        raise ValueError("transform requires an inner scheme with finite precision")
    if b < 2 or b % 2 != 0:
        raise ValueError(f"mixing block size must be even and >= 2, got {b}")
    return TransformedScheme(inner, b)


def draw_bin_messages(ts: TransformedScheme, rng: np.random.Generator) -> np.ndarray:
    """Uniform messages, one per (bin, demand); shape (b, L)."""
    counts = [ts.inner.message_count(i) for i in range(len(ts.inner.demands))]
    return np.stack([rng.integers(1, c + 1, ts.b) for c in counts], axis=1)


@dataclass(frozen=True)
class TransformedRun:
    """One execution of the transformed scheme.

    ``effective_reads`` has shape (|V|, k, b): per node, physical-block
    index, bin.  ``bin_errors[l]`` flags any demand decoded wrong in bin l.
    """

    effective_reads: np.ndarray
    decoded: np.ndarray  # (b, L) per bin and demand (last destination's decision)
    bin_errors: np.ndarray  # (b,) bool; errs when any demand at any destination errs
    avg_power: np.ndarray  # per-node average transmit power over the b*k uses


def run_transformed(
    ts: TransformedScheme,
    net: NetworkModel,
    messages: np.ndarray,
    noise: np.ndarray,
) -> TransformedRun:
    """Run the composite scheme over b*k physical steps.

    ``messages`` has shape (b, L); ``noise`` has shape (|V|, b*k).  Relay
    functions are applied per bin with the causal schedule above; decoders
    see the floored bin-l logical block of k effective reads.
    """
    inner = ts.inner
    b, k = ts.b, inner.block_length
    nv = net.num_nodes
    rho = inner.precision
    messages = np.asarray(messages, dtype=int)
    if messages.shape != (b, len(inner.demands)):
        raise ValueError(f"messages shape {messages.shape} != ({b}, {len(inner.demands)})")
    noise = np.asarray(noise, dtype=float)
    if noise.shape != (nv, b * k):
        raise ValueError(f"noise shape {noise.shape} != ({nv}, {b * k})")

    counts = [inner.message_count(i) for i in range(len(inner.demands))]
    for i, c in enumerate(counts):
        if np.any(messages[:, i] < 1) or np.any(messages[:, i] > c):
            raise ValueError(f"demand {i} messages outside 1..{c}")

    # One codeword per (demand, bin), stacked (b, k) for fast column access.
    codewords = []
    for i, (s, _) in enumerate(inner.demands):
        cw = np.stack([
            np.asarray(inner.encoders[s](int(w)), dtype=float) for w in messages[:, i]
        ])
        codewords.append(cw)

    gt = net.gain_matrix.T
    eff = np.empty((nv, k, b))
    effq = np.empty((nv, k, b))
    d = np.zeros((nv, b))
    power_acc = np.zeros(nv)
    for t in range(k):
        d[:] = 0.0
        for i, (s, _) in enumerate(inner.demands):
            d[s, :] = codewords[i][:, t]
        for v, fn in inner.relays.items():
            past = effq[v, :t, :]
            d[v, :] = [fn(t, past[:, l]) for l in range(b)]
        x = transmit_transform(d)
        power_acc += np.sum(x * x, axis=1)
        y = gt @ x + noise[:, t * b : (t + 1) * b]
        e = receive_transform(y)
        eff[:, t, :] = e
        effq[:, t, :] = floor_precision(e, rho)

    avg_power = power_acc / (b * k)
    assert np.all(avg_power <= net.power * (1.0 + _POWER_SLACK) + _POWER_SLACK), (
        f"physical power {avg_power.max()} exceeds budget {net.power}"
    )

    decoded = np.empty((b, len(inner.demands)), dtype=int)
    bin_errors = np.zeros(b, dtype=bool)
    for i, (_, dests) in enumerate(inner.demands):
        for dest in dests:
            logical = interleave(effq[dest])  # (b, k): bin-l logical blocks
            dec = inner.decoders[(i, dest)]
            for l in range(b):
                w_hat = int(dec(logical[l]))
                decoded[l, i] = w_hat
                if w_hat != messages[l, i]:
                    bin_errors[l] = True
    eff.flags.writeable = False
    return TransformedRun(eff, decoded, bin_errors, avg_power)


@dataclass(frozen=True)
class ErrorEstimate:
    errors: int
    trials: int
    estimate: float
    ci_low: float
    ci_high: float

    @classmethod
    def from_counts(cls, errors: int, trials: int) -> "ErrorEstimate":
        lo, hi = mc.wilson_interval(errors, trials)
        return cls(errors, trials, errors / trials, lo, hi)


def estimate_error_probability(
    scheme: CodingScheme,
    net: NetworkModel,
    trials: int,
    seed: int,
    threads: int = 1,
) -> ErrorEstimate:
    """Monte Carlo error probability with uniform messages each trial.

    Deterministic in ``seed`` for any thread count: trials are split into
    fixed chunks with spawned generators and merged in chunk order.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    n = scheme.block_length
    counts = [scheme.message_count(i) for i in range(len(scheme.demands))]
    sizes = mc.chunk_sizes(trials, _CHUNK)
    rngs = mc.chunk_rngs(seed, len(sizes))

    def one(args):
        size, rng = args
        msgs = np.stack([rng.integers(1, c + 1, size) for c in counts], axis=1)
        noise = draw_noise_batch(net, n, size, rng)
        errs = 0
        for j in range(size):
            if run_scheme(scheme, net, msgs[j], noise[j]).error:
                errs += 1
        return errs

    totals = mc.parallel_map(one, list(zip(sizes, rngs)), threads)
    return ErrorEstimate.from_counts(int(sum(totals)), trials)


@dataclass(frozen=True)
class BinEstimate:
    bin: int
    errors: int
    trials: int
    estimate: float
    ci_low: float
    ci_high: float


@dataclass(frozen=True)
class ExperimentReport:
    """Per-bin error estimates of the transformed scheme plus context."""

    b: int
    k: int
    trials: int
    seed: int
    eps_k: ErrorEstimate  # inner scheme on the Gaussian twin network
    bins: tuple[BinEstimate, ...]
    eps_kb: float
    worst_bin: int
    fano_bounds: tuple[float, ...]  # per demand, at the measured eps_kb


def gaussian_twin(net: NetworkModel) -> NetworkModel:
    """Same topology, gains and variances, with Gaussian noise laws."""
    return NetworkModel(
        labels=net.labels,
        gains=net.gains,
        power=net.power,
        noise=tuple(NoiseSpec("gaussian", s.variance) for s in net.noise),
    )


def epsilon_kb_report(
    ts: TransformedScheme,
    net: NetworkModel,
    trials: int,
    seed: int,
    threads: int = 1,
    baseline_trials: int | None = None,
) -> ExperimentReport:
    """Estimate each bin's error rate and the Gaussian-network baseline.

    The baseline eps_k runs the inner scheme on :func:`gaussian_twin` with
    the same trial budget (unless overridden), so the comparison is
    Monte Carlo against Monte Carlo.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    inner, b = ts.inner, ts.b
    n = ts.block_length
    sizes = mc.chunk_sizes(trials, _CHUNK)
    rngs = mc.chunk_rngs(seed, len(sizes), 1)

    def one(args):
        size, rng = args
        errs = np.zeros(b, dtype=int)
        for _ in range(size):
            msgs = draw_bin_messages(ts, rng)
            noise = draw_noise_batch(net, n, 1, rng)[0]
            errs += run_transformed(ts, net, msgs, noise).bin_errors
        return errs

    tallies = mc.parallel_map(one, list(zip(sizes, rngs)), threads)
    bin_errors = np.sum(tallies, axis=0)

    bins = []
    for l in range(b):
        lo, hi = mc.wilson_interval(int(bin_errors[l]), trials)
        bins.append(BinEstimate(l, int(bin_errors[l]), trials, bin_errors[l] / trials, lo, hi))
    worst = int(np.argmax([be.estimate for be in bins]))
    eps_kb = bins[worst].estimate

    base = estimate_error_probability(
        inner, gaussian_twin(net), baseline_trials or trials, seed + 1, threads
    )
    k = inner.block_length
    fano = tuple(fano_rate_bound(r, eps_kb, k) for r in inner.rates)
    return ExperimentReport(
        b=b, k=k, trials=trials, seed=seed, eps_k=base,
        bins=tuple(bins), eps_kb=eps_kb, worst_bin=worst, fano_bounds=fano,
    )


def fano_rate_bound(rate: float, eps, k: int) -> float:
    """Achievable-rate lower bound R (1 - eps) - 1/k.

    ``eps`` may be a per-destination iterable (a multicast session), in
    which case the worst destination's error applies.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    try:
        e = max(float(v) for v in eps)
    except TypeError:
        e = float(eps)
    if not (0.0 <= e <= 1.0):
        raise ValueError(f"error probability {e} outside [0, 1]")
    return rate * (1.0 - e) - 1.0 / k


def superchannel_mi(counts) -> float:
    """Plug-in mutual information (bits) of an empirical joint count table.

    Rows index sent symbols, columns decoded symbols.  Divide by the block
    length in network uses to get a per-use rate.
    """
    c = np.asarray(counts, dtype=float)
    if c.ndim != 2 or c.size == 0:
        raise ValueError("counts must be a nonempty 2-D table")
    if np.any(c < 0):
        raise ValueError("counts must be nonnegative")
    total = c.sum()
    if total <= 0:
        raise ValueError("counts must have positive mass")
    p = c / total
    px = p.sum(axis=1, keepdims=True)
    py = p.sum(axis=0, keepdims=True)
    nz = p > 0
    return float(np.sum(p[nz] * np.log2(p[nz] / (px @ py)[nz])))


@dataclass(frozen=True)
class ProbeResult:
    probes: int
    violations: int
    resamples: int


def _forced_signals(
    scheme: CodingScheme, net: NetworkModel, messages: MessageVector, qreads: np.ndarray
) -> np.ndarray:
    """Noiseless received signals when relays are fed the fixed floored reads."""
    n = scheme.block_length
    nv = net.num_nodes
    codewords = {
        s: np.asarray(scheme.encoders[s](messages.values[i]), dtype=float)
        for i, (s, _) in enumerate(scheme.demands)
    }
    gt = net.gain_matrix.T
    sig = np.empty((nv, n))
    x = np.zeros(nv)
    for t in range(n):
        x[:] = 0.0
        for s, cw in codewords.items():
            x[s] = cw[t]
        for v, fn in scheme.relays.items():
            x[v] = fn(t, qreads[v, :t])
        sig[:, t] = gt @ x
    return sig


def convexity_probe(
    inner: CodingScheme,
    net: NetworkModel,
    probes: int,
    rng: np.random.Generator,
    read_floor=floor_precision,
    alphas: tuple[float, ...] = (0.25, 0.5, 0.75),
    max_resample: int = 1000,
) -> ProbeResult:
    """Check that within-cell noise perturbations never move any read.

    For fixed messages and noise z, record the floored read trajectory,
    invert the flooring cell of every read the scheme consumes, and draw a
    second noise z' from those cells (re-run and resample on the rare
    float-boundary mismatch).  Convex combinations of z and z' must then
    reproduce the same trajectory; each combination that does not counts
    as one violation.  ``read_floor`` is the read quantizer under audit:
    the shipped flooring yields zero violations, and substituting a
    rounding quantizer in a test build makes the probe fire at cell
    boundaries, which is the sensitivity check.
    """
    rho = inner.precision
    if rho is None:
        raise ValueError("convexity probe needs a finite-precision scheme")
    n = inner.block_length
    readers = list(inner.reading_nodes())
    step = 2.0**-rho
    violations = 0
    resamples = 0
    for _ in range(probes):
        w = MessageVector.uniform(inner, rng)
        z = draw_noise_batch(net, n, 1, rng)[0]
        base = run_scheme(inner, net, w, z)
        qreads = floor_precision(base.reads, rho)
        sig = _forced_signals(inner, net, w, qreads)
        low = qreads - sig

        z_alt = None
        for _ in range(max_resample):
            cand = z.copy()
            cand[readers] = low[readers] + rng.uniform(0.0, step, (len(readers), n))
            rerun = run_scheme(inner, net, w, cand)
            if np.array_equal(
                floor_precision(rerun.reads[readers], rho), qreads[readers]
            ):
                z_alt = cand
                break
            resamples += 1
        if z_alt is None:
            violations += len(alphas)
            continue

        for a in alphas:
            mix = a * z + (1.0 - a) * z_alt
            run = run_scheme(inner, net, w, mix, read_floor=read_floor)
            if not np.array_equal(
                read_floor(run.reads[readers], rho), qreads[readers]
            ):
                violations += 1
    return ProbeResult(probes, violations, resamples)


@dataclass(frozen=True)
class OuterCodeResult:
    codebook_size: int
    outer_block: int
    trials: int
    symbol_error_rate: float  # per bk-block symbol (any bin wrong)
    message_error_rate: float  # outer codeword decoded wrong
    rate_bits_per_use: float


def toy_outer_code(
    ts: TransformedScheme,
    net: NetworkModel,
    codebook_size: int,
    outer_block: int,
    trials: int,
    seed: int,
) -> OuterCodeResult:
    """End-to-end demo: a random outer code over the per-block superchannel.

    A superchannel symbol is the tuple of b per-bin messages carried by one
    b*k-use block.  The outer code draws ``codebook_size`` random sequences
    of ``outer_block`` symbols and decodes by exhaustive nearest (fewest
    disagreeing bins), which is maximum likelihood for a symmetric
    per-bin error model.  Desk scale only: alphabet <= 16, block <= 4.
    """
    inner, b = ts.inner, ts.b
    counts = [inner.message_count(i) for i in range(len(inner.demands))]
    alphabet = int(np.prod(counts)) ** b
    if alphabet > 16 or outer_block > 4:
        raise ValueError("toy outer code is desk scale: alphabet <= 16, block <= 4")
    if codebook_size < 2:
        raise ValueError("need at least two outer codewords")
    rng = np.random.default_rng(np.random.SeedSequence((seed, 2)))
    # Codeword: (outer_block, b, L) message array per outer symbol slot.
    codebook = [
        np.stack([draw_bin_messages(ts, rng) for _ in range(outer_block)])
        for _ in range(codebook_size)
    ]
    n = ts.block_length
    sym_errors = 0
    msg_errors = 0
    for _ in range(trials):
        idx = int(rng.integers(0, codebook_size))
        sent = codebook[idx]
        received = np.empty_like(sent)
        for j in range(outer_block):
            noise = draw_noise_batch(net, n, 1, rng)[0]
            run = run_transformed(ts, net, sent[j], noise)
            received[j] = run.decoded
            if run.bin_errors.any():
                sym_errors += 1
        scores = [
            int(np.sum(np.any(cw != received, axis=2)))  # disagreeing bins
            for cw in codebook
        ]
        if int(np.argmin(scores)) != idx:
            msg_errors += 1
    return OuterCodeResult(
        codebook_size=codebook_size,
        outer_block=outer_block,
        trials=trials,
        symbol_error_rate=sym_errors / (trials * outer_block),
        message_error_rate=msg_errors / trials,
        rate_bits_per_use=math.log2(codebook_size) / (outer_block * n),
    )
