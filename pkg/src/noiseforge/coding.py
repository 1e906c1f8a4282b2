"""Coding schemes: encoders, causal relays, decoders, reading precision.

A scheme of block length n runs over n synchronous network steps.  Sources
transmit codeword entries; every other node may relay, where the transmit
value at time t is a function of the reads at times < t (at t=0 the relay
is a constant).  When a scheme declares a reading precision rho, every read
handed to a relay or decoder is first floored to the 2**-rho grid, so the
scheme's decisions are invariant under that flooring by construction.

Three concrete desk-scale schemes are provided: uncoded PAM over a single
link, a repetition code, and an amplify-and-forward relay scheme.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from .network import NetworkModel, TrafficDemand

__all__ = [
    "floor_precision",
    "CodingScheme",
    "MessageVector",
    "SchemeRun",
    "run_scheme",
    "PowerReport",
    "check_power",
    "build_inner_scheme",
    "InfeasibleSchemeError",
    "nearest_point_decoder",
    "clipped_relay",
]

Encoder = Callable[[int], np.ndarray]
Relay = Callable[[int, np.ndarray], float]
Decoder = Callable[[np.ndarray], int]

_POWER_TOL = 1e-12


class InfeasibleSchemeError(ValueError):
    """Raised when requested scheme parameters cannot be realized."""


def floor_precision(x, rho: int):
    """Largest multiple of 2**-rho not exceeding x: 2**-rho * floor(2**rho * x).

    Exact for any float input because scaling by powers of two is exact.
    Accepts scalars or arrays.
    """
    if rho < 0:
        raise ValueError("precision must be >= 0")
    scaled = np.floor(np.ldexp(np.asarray(x, dtype=float), rho))
    out = np.ldexp(scaled, -rho)
    if np.isscalar(x) or np.ndim(x) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class CodingScheme:
    """Block code for a network with demands.

    encoders: source node -> (message -> length-n codeword), one per demand
    relays:   node -> (t, reads at times < t) -> transmit value
    decoders: (demand index, destination node) -> (length-n reads -> message)

    Every codeword must satisfy average power <= power; relay outputs are
    expected to be clipped so any trajectory satisfies the same bound.
    Messages are 1-based: demand i draws from {1, ..., 2**(n * rate_i)}.
    """

    block_length: int
    demands: TrafficDemand
    rates: tuple[float, ...]
    encoders: Mapping[int, Encoder]
    relays: Mapping[int, Relay]
    decoders: Mapping[tuple[int, int], Decoder]
    power: float
    precision: int | None = None

    def __post_init__(self):
        if self.block_length < 1:
            raise ValueError("block length must be >= 1")
        if len(self.rates) != len(self.demands):
            raise ValueError("one rate per demand required")
        sources = [s for s, _ in self.demands]
        if len(set(sources)) != len(sources):
            raise ValueError("each demand needs a distinct source node")
        if self.precision is not None and self.precision < 0:
            raise ValueError("precision must be >= 0")
        object.__setattr__(self, "rates", tuple(float(r) for r in self.rates))
        object.__setattr__(self, "encoders", dict(self.encoders))
        object.__setattr__(self, "relays", dict(self.relays))
        object.__setattr__(self, "decoders", dict(self.decoders))

    def message_count(self, demand_idx: int) -> int:
        """Size of demand's message set, 2**(n * R); must be integral."""
        raw = 2.0 ** (self.block_length * self.rates[demand_idx])
        m = round(raw)
        if m < 1 or abs(raw - m) > 1e-9:
            raise ValueError(f"2**(n*R) = {raw} is not a positive integer")
        return m

    def reading_nodes(self) -> tuple[int, ...]:
        """Nodes whose reads the scheme actually consumes."""
        nodes = set(self.relays)
        for _, dests in self.demands:
            nodes.update(dests)
        return tuple(sorted(nodes))


@dataclass(frozen=True)
class MessageVector:
    """One message per demand, each in {1, ..., 2**(n * R_i)}."""

    values: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(int(w) for w in self.values))

    @classmethod
    def uniform(cls, scheme: CodingScheme, rng: np.random.Generator) -> "MessageVector":
        return cls(
            tuple(
                int(rng.integers(1, scheme.message_count(i) + 1))
                for i in range(len(scheme.demands))
            )
        )

    def validate(self, scheme: CodingScheme) -> None:
        if len(self.values) != len(scheme.demands):
            raise ValueError("one message per demand required")
        for i, w in enumerate(self.values):
            m = scheme.message_count(i)
            if not (1 <= w <= m):
                raise ValueError(f"message {w} for demand {i} outside 1..{m}")


@dataclass(frozen=True)
class SchemeRun:
    """Outcome of one scheme execution."""

    reads: np.ndarray  # raw received values, shape (|V|, n)
    decoded: dict[tuple[int, int], int]  # (demand, destination) -> message
    demand_errors: tuple[bool, ...]
    error: bool


def run_scheme(
    scheme: CodingScheme,
    net: NetworkModel,
    messages,
    noise,
    read_floor: Callable = floor_precision,
) -> SchemeRun:
    """Simulate n synchronous steps and decode.

    ``noise`` has shape (|V|, n).  Relay transmissions at time t see only
    reads at times < t.  When the scheme has precision rho, ``read_floor``
    (flooring, by default) is applied to every read before relays and
    decoders see it.  Deterministic: equal inputs give bit-equal outputs.
    """
    if not isinstance(messages, MessageVector):
        messages = MessageVector(tuple(messages))
    messages.validate(scheme)
    n = scheme.block_length
    nv = net.num_nodes
    noise = np.asarray(noise, dtype=float)
    if noise.shape != (nv, n):
        raise ValueError(f"noise shape {noise.shape} does not match ({nv}, {n})")

    codewords = []
    for i, (s, _) in enumerate(scheme.demands):
        cw = np.asarray(scheme.encoders[s](messages.values[i]), dtype=float)
        if cw.shape != (n,):
            raise ValueError(f"encoder for demand {i} returned shape {cw.shape}")
        codewords.append(cw)

    rho = scheme.precision
    gt = net.gain_matrix.T
    reads = np.empty((nv, n))
    qreads = np.empty((nv, n))
    x = np.zeros(nv)
    for t in range(n):
        x[:] = 0.0
        for i, (s, _) in enumerate(scheme.demands):
            x[s] = codewords[i][t]
        for v, fn in scheme.relays.items():
            x[v] = fn(t, qreads[v, :t])
        y = gt @ x + noise[:, t]
        reads[:, t] = y
        qreads[:, t] = y if rho is None else read_floor(y, rho)

    decoded: dict[tuple[int, int], int] = {}
    errors = []
    for i, (_, dests) in enumerate(scheme.demands):
        ok = True
        for d in dests:
            w_hat = int(scheme.decoders[(i, d)](qreads[d]))
            decoded[(i, d)] = w_hat
            ok = ok and (w_hat == messages.values[i])
        errors.append(not ok)
    reads.flags.writeable = False
    return SchemeRun(reads, decoded, tuple(errors), any(errors))


@dataclass(frozen=True)
class PowerReport:
    codeword_violations: tuple[tuple[int, int, float], ...]  # (demand, message, power)
    max_relay_power: float
    relay_violations: int
    trials: int

    @property
    def passed(self) -> bool:
        return not self.codeword_violations and self.relay_violations == 0


def check_power(scheme: CodingScheme, trials: int, rng: np.random.Generator,
                max_enumerate: int = 4096) -> PowerReport:
    """Verify codeword power exactly and probe relay power on random reads.

    Codewords are enumerated when the message set is small, sampled
    otherwise.  Relay trajectories are wide Gaussian probes (3 sqrt(P)).
    """
    n = scheme.block_length
    p = scheme.power
    bound = p * (1.0 + _POWER_TOL) + _POWER_TOL

    cw_violations = []
    for i, (s, _) in enumerate(scheme.demands):
        m = scheme.message_count(i)
        if m <= max_enumerate:
            msgs = range(1, m + 1)
        else:
            msgs = (int(w) for w in rng.integers(1, m + 1, size=trials))
        for w in msgs:
            cw = np.asarray(scheme.encoders[s](w), dtype=float)
            avg = float(np.mean(cw**2))
            if avg > bound:
                cw_violations.append((i, w, avg))

    max_power = 0.0
    relay_violations = 0
    rho = scheme.precision
    for _ in range(trials if scheme.relays else 0):
        y = rng.normal(0.0, 3.0 * math.sqrt(p), n)
        if rho is not None:
            y = floor_precision(y, rho)
        for fn in scheme.relays.values():
            out = np.array([fn(t, y[:t]) for t in range(n)])
            avg = float(np.mean(out**2))
            max_power = max(max_power, avg)
            if avg > bound:
                relay_violations += 1
    return PowerReport(tuple(cw_violations), max_power, relay_violations,
                       trials if scheme.relays else 0)


def nearest_point_decoder(targets: np.ndarray, rho: int | None) -> Decoder:
    """Decode to the message whose noiseless read vector is closest.

    ``targets`` has one row per message (1-based order).  Equidistant reads
    resolve to the smaller message index.
    """
    targets = np.atleast_2d(np.asarray(targets, dtype=float))

    def decode(reads: np.ndarray) -> int:
        r = np.asarray(reads, dtype=float)
        if rho is not None:
            r = floor_precision(r, rho)
        d2 = np.sum((targets - r) ** 2, axis=1)
        return int(np.argmin(d2)) + 1

    return decode


def clipped_relay(fn: Relay, bound: float) -> Relay:
    """Clamp relay outputs to [-bound, bound]."""

    def relay(t: int, reads: np.ndarray) -> float:
        return float(np.clip(fn(t, reads), -bound, bound))

    return relay


def _single_unicast(demand: TrafficDemand) -> tuple[int, int]:
    if len(demand) != 1 or len(demand.demands[0][1]) != 1:
        raise InfeasibleSchemeError("scheme preset needs a single unicast demand")
    s, dests = demand.demands[0]
    return s, dests[0]


def _pam_levels(points: int, power: float) -> np.ndarray:
    # Peak-constrained spacing: the outermost point sits at sqrt(P), so
    # every codeword individually meets the average power bound.
    if points < 2:
        raise InfeasibleSchemeError("constellation needs at least 2 points")
    amp = math.sqrt(power)
    return amp * (2.0 * np.arange(points) - (points - 1)) / (points - 1)


def build_inner_scheme(
    kind: str,
    net: NetworkModel,
    demand: TrafficDemand,
    *,
    precision: int | None = 8,
    points: int = 2,
    repeats: int = 3,
    rate: float | None = None,
) -> CodingScheme:
    """Construct one of the built-in desk-scale schemes.

    kind = "uncoded_pam":  n=1 PAM over a single link, rate log2(points).
    kind = "repetition":   antipodal symbol repeated ``repeats`` times.
    kind = "af_relay":     2-step amplify-and-forward on the s/v/d triangle,
                           relay gain sqrt(P / (h_sv**2 P + sigma_v**2)).

    Decoders are nearest-point over the floored reads.  A ``rate`` above
    what the constellation supports is rejected.
    """
    p = net.power
    if kind == "uncoded_pam":
        s, d = _single_unicast(demand)
        if (s, d) not in net.gains:
            raise InfeasibleSchemeError(f"no edge between demand endpoints ({s}, {d})")
        h = net.gains[(s, d)]
        levels = _pam_levels(points, p)
        nominal = math.log2(points)
        r = nominal if rate is None else float(rate)
        if r > nominal + 1e-12:
            raise InfeasibleSchemeError(
                f"rate {r} exceeds capacity log2({points}) of the constellation"
            )
        count = round(2.0**r)
        if abs(2.0**r - count) > 1e-9 or count < 1:
            raise InfeasibleSchemeError(f"2**rate = {2.0 ** r} is not integral")
        encoder = lambda w: np.array([levels[w - 1]])
        decoder = nearest_point_decoder((h * levels[:count])[:, None], precision)
        return CodingScheme(
            block_length=1,
            demands=demand,
            rates=(r,),
            encoders={s: encoder},
            relays={},
            decoders={(0, d): decoder},
            power=p,
            precision=precision,
        )

    if kind == "repetition":
        s, d = _single_unicast(demand)
        if (s, d) not in net.gains:
            raise InfeasibleSchemeError(f"no edge between demand endpoints ({s}, {d})")
        if repeats < 1:
            raise InfeasibleSchemeError("repetition factor must be >= 1")
        h = net.gains[(s, d)]
        amp = math.sqrt(p)
        codebook = np.array([[-amp] * repeats, [amp] * repeats])
        encoder = lambda w: codebook[w - 1]
        decoder = nearest_point_decoder(h * codebook, precision)
        return CodingScheme(
            block_length=repeats,
            demands=demand,
            rates=(1.0 / repeats,),
            encoders={s: encoder},
            relays={},
            decoders={(0, d): decoder},
            power=p,
            precision=precision,
        )

    if kind == "af_relay":
        s, d = _single_unicast(demand)
        relay_nodes = [
            v
            for v in range(net.num_nodes)
            if v not in (s, d) and (s, v) in net.gains and (v, d) in net.gains
        ]
        if (s, d) not in net.gains or len(relay_nodes) != 1:
            raise InfeasibleSchemeError(
                "af_relay needs edges (s,v), (s,d), (v,d) with a unique relay"
            )
        v = relay_nodes[0]
        h_sd = net.gains[(s, d)]
        h_sv = net.gains[(s, v)]
        h_vd = net.gains[(v, d)]
        sigma2_v = net.noise[v].variance
        amp = math.sqrt(p)
        gain = math.sqrt(p / (h_sv**2 * p + sigma2_v))
        encoder = lambda w: np.array([amp if w == 2 else -amp, 0.0])

        def raw_relay(t: int, reads: np.ndarray) -> float:
            if t == 0:
                return 0.0
            y = reads[0] if precision is None else floor_precision(reads[0], precision)
            return gain * y

        # Silent at t=0, so clipping at sqrt(2P) still keeps every length-2
        # trajectory under average power P.
        relay = clipped_relay(raw_relay, math.sqrt(2.0 * p))
        targets = np.array(
            [
                [-h_sd * amp, -h_vd * gain * h_sv * amp],
                [h_sd * amp, h_vd * gain * h_sv * amp],
            ]
        )
        decoder = nearest_point_decoder(targets, precision)
        return CodingScheme(
            block_length=2,
            demands=demand,
            rates=(0.5,),
            encoders={s: encoder},
            relays={v: relay},
            decoders={(0, d): decoder},
            power=p,
            precision=precision,
        )

    raise InfeasibleSchemeError(f"unknown scheme kind {kind!r}")
