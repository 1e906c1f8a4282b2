"""Additive-noise network model: topology, channel gains, noise laws, demands.

A network is a directed graph on nodes 0..|V|-1 with a real gain per edge, a
per-node average power budget P, and a zero-mean noise law per node.  One
synchronous time step maps transmit values to received values:

    Y[v] = sum over in-neighbors u of  h[u,v] * X[u]  +  N[v]

Node identifiers are dense integers internally; human-readable labels are
kept only for I/O and diagnostics.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

__all__ = [
    "NOISE_FAMILIES",
    "NoiseSpec",
    "NetworkModel",
    "TrafficDemand",
    "sample_noise",
    "propagate_step",
    "validate_network",
    "draw_network_noise",
    "draw_noise_batch",
    "network_from_dict",
    "load_network",
    "single_link_network",
    "relay_network",
]

NOISE_FAMILIES = (
    "gaussian",
    "uniform",
    "laplace",
    "rademacher",
    "shifted_exponential",
    "discrete_pmf",
)

_PMF_SUM_TOL = 1e-12
_VAR_MATCH_TOL = 1e-9


@dataclass(frozen=True)
class NoiseSpec:
    """A zero-mean noise law with variance ``variance``.

    Every family is parameterized so that the mean is exactly 0 and the
    variance matches ``variance`` analytically:

    * gaussian            N(0, v)
    * uniform             U(-a, a) with a = sqrt(3 v)
    * laplace             scale sqrt(v / 2)
    * rademacher          +/- sqrt(v) with probability 1/2 each
    * shifted_exponential Exp(scale sqrt(v)) - sqrt(v)
    * discrete_pmf        user-supplied atoms/probs, re-centered to mean 0;
                          the variance is derived from the pmf

    ``variance`` may be 0 (point mass at 0), which is handy for noiseless
    round-trip checks.
    """

    family: str
    variance: float | None = None
    atoms: tuple[float, ...] | None = None
    probs: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.family not in NOISE_FAMILIES:
            raise ValueError(f"unknown noise family {self.family!r}")
        if self.family == "discrete_pmf":
            self._init_discrete()
        else:
            if self.atoms is not None or self.probs is not None:
                raise ValueError("atoms/probs are only valid for discrete_pmf")
            if self.variance is None:
                raise ValueError(f"{self.family} noise requires a variance")
            v = float(self.variance)
            if not math.isfinite(v) or v < 0.0:
                raise ValueError(f"variance must be finite and >= 0, got {v}")
            object.__setattr__(self, "variance", v)

    def _init_discrete(self):
        if self.atoms is None or self.probs is None:
            raise ValueError("discrete_pmf requires atoms and probs")
        atoms = tuple(float(a) for a in self.atoms)
        probs = tuple(float(p) for p in self.probs)
        if len(atoms) != len(probs) or not atoms:
            raise ValueError("atoms and probs must be nonempty and equal length")
        if any(not math.isfinite(a) for a in atoms):
            raise ValueError("atoms must be finite")
        if any(p < 0.0 for p in probs):
            raise ValueError("probabilities must be nonnegative")
        if abs(sum(probs) - 1.0) > _PMF_SUM_TOL:
            raise ValueError(f"probabilities sum to {sum(probs)!r}, not 1")
        # Re-center so the law has mean exactly 0, then derive the variance.
        mean = sum(p * a for a, p in zip(atoms, probs))
        atoms = tuple(a - mean for a in atoms)
        var = sum(p * a * a for a, p in zip(atoms, probs))
        if self.variance is not None and abs(float(self.variance) - var) > _VAR_MATCH_TOL * max(1.0, var):
            raise ValueError(
                f"declared variance {self.variance} does not match pmf variance {var}"
            )
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "variance", var)

    @property
    def sigma(self) -> float:
        return math.sqrt(self.variance)

    @property
    def is_discrete(self) -> bool:
        return self.family in ("rademacher", "discrete_pmf")

    def atom_table(self) -> tuple[np.ndarray, np.ndarray]:
        """Atoms and probabilities for the discrete families."""
        if self.family == "rademacher":
            s = self.sigma
            return np.array([-s, s]), np.array([0.5, 0.5])
        if self.family == "discrete_pmf":
            return np.asarray(self.atoms), np.asarray(self.probs)
        raise ValueError(f"{self.family} noise has no atom table")

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Draw ``count`` i.i.d. values; deterministic for a fixed generator state."""
        if count < 1:
            raise ValueError("count must be >= 1")
        s = self.sigma
        if self.family == "gaussian":
            return rng.normal(0.0, s, count)
        if self.family == "uniform":
            a = s * math.sqrt(3.0)
            return rng.uniform(-a, a, count)
        if self.family == "laplace":
            return rng.laplace(0.0, s / math.sqrt(2.0), count)
        if self.family == "rademacher":
            return s * (2.0 * rng.integers(0, 2, count) - 1.0)
        if self.family == "shifted_exponential":
            return rng.exponential(s, count) - s
        atoms, probs = self.atom_table()
        return rng.choice(atoms, size=count, p=probs)


def sample_noise(spec: NoiseSpec, rng: np.random.Generator, count: int) -> np.ndarray:
    """i.i.d. draws from ``spec``; see :meth:`NoiseSpec.sample`."""
    return spec.sample(rng, count)


@dataclass(frozen=True)
class TrafficDemand:
    """Which node holds a message wanted by which set of nodes.

    ``demands`` is an ordered tuple of (source, destinations) pairs; a
    single-destination pair is a unicast session, several destinations make
    a multicast session.
    """

    demands: tuple[tuple[int, tuple[int, ...]], ...]

    def __post_init__(self):
        norm = tuple(
            (int(s), tuple(int(d) for d in dests)) for s, dests in self.demands
        )
        object.__setattr__(self, "demands", norm)

    def __len__(self) -> int:
        return len(self.demands)

    def __iter__(self):
        return iter(self.demands)


@dataclass(frozen=True)
class NetworkModel:
    """Directed additive-noise network.

    ``gains`` maps directed edges (u, v) to a real channel gain; the edge
    set is exactly the key set.  Construction is permissive so that
    :func:`validate_network` can report violations; simulation entry points
    assume a valid model.
    """

    labels: tuple[str, ...]
    gains: Mapping[tuple[int, int], float]
    power: float
    noise: tuple[NoiseSpec, ...]
    gain_matrix: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        labels = tuple(str(x) for x in self.labels)
        object.__setattr__(self, "labels", labels)
        gains = {(int(u), int(v)): float(h) for (u, v), h in dict(self.gains).items()}
        object.__setattr__(self, "gains", gains)
        object.__setattr__(self, "power", float(self.power))
        object.__setattr__(self, "noise", tuple(self.noise))
        n = len(labels)
        mat = np.zeros((n, n))
        for (u, v), h in gains.items():
            if 0 <= u < n and 0 <= v < n and u != v:
                mat[u, v] = h
        mat.flags.writeable = False
        object.__setattr__(self, "gain_matrix", mat)

    @property
    def num_nodes(self) -> int:
        return len(self.labels)

    @property
    def edges(self) -> tuple[tuple[int, int], ...]:
        return tuple(sorted(self.gains))

    def node_index(self, label: str) -> int:
        return self.labels.index(str(label))

    def in_neighbors(self, v: int) -> tuple[int, ...]:
        return tuple(sorted(u for (u, w) in self.gains if w == v))


def propagate_step(net: NetworkModel, transmit, noise) -> np.ndarray:
    """One synchronous step: Y[v] = sum_u h[u,v] X[u] + N[v].

    ``transmit`` and ``noise`` are length-|V| vectors indexed by node.
    Linear in both arguments.
    """
    x = np.asarray(transmit, dtype=float)
    z = np.asarray(noise, dtype=float)
    n = net.num_nodes
    if x.shape != (n,) or z.shape != (n,):
        raise ValueError(f"expected length-{n} transmit and noise vectors")
    return net.gain_matrix.T @ x + z


def draw_network_noise(net: NetworkModel, steps: int, rng: np.random.Generator) -> np.ndarray:
    """Per-node noise realizations for ``steps`` time steps, shape (|V|, steps)."""
    return draw_noise_batch(net, steps, 1, rng)[0]


def draw_noise_batch(
    net: NetworkModel, steps: int, count: int, rng: np.random.Generator
) -> np.ndarray:
    """``count`` independent noise realizations, shape (count, |V|, steps).

    Nodes are sampled in index order, so the draw order is reproducible.
    """
    out = np.empty((count, net.num_nodes, steps))
    for v, spec in enumerate(net.noise):
        if spec.variance == 0.0:
            out[:, v, :] = 0.0
        else:
            out[:, v, :] = spec.sample(rng, count * steps).reshape(count, steps)
    return out


def validate_network(net: NetworkModel, demand: TrafficDemand | None = None) -> list[str]:
    """Report violations of the model invariants; an empty list means valid."""
    report: list[str] = []
    n = net.num_nodes
    if n == 0:
        report.append("network has no nodes")
    if not math.isfinite(net.power) or net.power <= 0.0:
        report.append(f"power budget must be finite and > 0, got {net.power}")
    if len(net.noise) != n:
        report.append(f"{len(net.noise)} noise specs for {n} nodes")
    for (u, v), h in sorted(net.gains.items()):
        if not (0 <= u < n) or not (0 <= v < n):
            report.append(f"edge ({u}, {v}) references an unknown node")
        elif u == v:
            report.append(f"edge ({u}, {v}) is a self-loop")
        if not math.isfinite(h):
            report.append(f"edge ({u}, {v}) has non-finite gain {h}")
    if demand is not None:
        for i, (s, dests) in enumerate(demand):
            if not (0 <= s < n):
                report.append(f"demand {i} has unknown source {s}")
            if not dests:
                report.append(f"demand {i} has an empty destination set")
            if s in dests:
                report.append(f"demand {i} includes its source {s} among destinations")
            for d in dests:
                if not (0 <= d < n):
                    report.append(f"demand {i} has unknown destination {d}")
    return report


# ---------------------------------------------------------------------------
# JSON ingestion
#
# {"nodes": [...], "edges": [[u, v, gain], ...], "power": P,
#  "noise": {node: {"family": ..., "variance": ...}, ...},
#  "demands": [[source, [dest, ...]], ...]}
#
# Nodes may be arbitrary labels; edges, noise keys and demands refer to them.
# Nodes absent from the noise map are noiseless (variance 0).
# ---------------------------------------------------------------------------


def _noise_spec_from_dict(doc: dict) -> NoiseSpec:
    if not isinstance(doc, dict) or "family" not in doc:
        raise ValueError(f"noise spec must be an object with a 'family', got {doc!r}")
    return NoiseSpec(
        family=doc["family"],
        variance=doc.get("variance"),
        atoms=tuple(doc["atoms"]) if "atoms" in doc else None,
        probs=tuple(doc["probs"]) if "probs" in doc else None,
    )


def network_from_dict(doc: dict) -> tuple[NetworkModel, TrafficDemand]:
    for key in ("nodes", "edges", "power"):
        if key not in doc:
            raise ValueError(f"network document is missing {key!r}")
    labels = tuple(str(x) for x in doc["nodes"])
    if len(set(labels)) != len(labels):
        raise ValueError("duplicate node labels")
    index = {lab: i for i, lab in enumerate(labels)}

    gains: dict[tuple[int, int], float] = {}
    for entry in doc["edges"]:
        try:
            u, v, h = entry
        except (TypeError, ValueError):
            raise ValueError(f"edge entry {entry!r} is not [u, v, gain]") from None
        if str(u) not in index or str(v) not in index:
            raise ValueError(f"edge {entry!r} references an unknown node")
        gains[(index[str(u)], index[str(v)])] = float(h)

    noise_doc = doc.get("noise", {})
    specs = []
    for lab in labels:
        if lab in noise_doc:
            specs.append(_noise_spec_from_dict(noise_doc[lab]))
        else:
            specs.append(NoiseSpec("gaussian", 0.0))
    for lab in noise_doc:
        if str(lab) not in index:
            raise ValueError(f"noise map references unknown node {lab!r}")

    demands = []
    for entry in doc.get("demands", []):
        try:
            s, dests = entry
        except (TypeError, ValueError):
            raise ValueError(f"demand entry {entry!r} is not [source, [dests...]]") from None
        if str(s) not in index:
            raise ValueError(f"demand {entry!r} references unknown source")
        for d in dests:
            if str(d) not in index:
                raise ValueError(f"demand {entry!r} references unknown destination {d!r}")
        demands.append((index[str(s)], tuple(index[str(d)] for d in dests)))

    net = NetworkModel(labels, gains, float(doc["power"]), tuple(specs))
    return net, TrafficDemand(tuple(demands))


def load_network(path: str | Path) -> tuple[NetworkModel, TrafficDemand]:
    p = Path(path)
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"network file {p} is not valid JSON: {exc}") from exc
    return network_from_dict(doc)


def single_link_network(
    gain: float,
    power: float,
    noise: NoiseSpec,
    source_noise: NoiseSpec | None = None,
) -> tuple[NetworkModel, TrafficDemand]:
    """Two nodes s -> d with receiver noise ``noise``."""
    zero = NoiseSpec("gaussian", 0.0)
    net = NetworkModel(
        labels=("s", "d"),
        gains={(0, 1): gain},
        power=power,
        noise=(source_noise or zero, noise),
    )
    return net, TrafficDemand(((0, (1,)),))


def relay_network(
    h_sd: float,
    h_sv: float,
    h_vd: float,
    power: float,
    relay_noise: NoiseSpec,
    dest_noise: NoiseSpec,
    source_noise: NoiseSpec | None = None,
) -> tuple[NetworkModel, TrafficDemand]:
    """Three-node relay channel: edges (s,v), (s,d), (v,d)."""
    zero = NoiseSpec("gaussian", 0.0)
    net = NetworkModel(
        labels=("s", "v", "d"),
        gains={(0, 1): h_sv, (0, 2): h_sd, (1, 2): h_vd},
        power=power,
        noise=(source_noise or zero, relay_noise, dest_noise),
    )
    return net, TrafficDemand(((0, (2,)),))
