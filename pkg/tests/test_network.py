import json
import math

import numpy as np
import pytest

from noiseforge import (
    NetworkModel,
    NoiseSpec,
    TrafficDemand,
    load_network,
    network_from_dict,
    propagate_step,
    relay_network,
    sample_noise,
    single_link_network,
    validate_network,
)

ALL_FAMILIES = [
    NoiseSpec("gaussian", 1.7),
    NoiseSpec("uniform", 0.8),
    NoiseSpec("laplace", 2.3),
    NoiseSpec("rademacher", 1.0),
    NoiseSpec("shifted_exponential", 0.5),
    NoiseSpec("discrete_pmf", atoms=(-2.0, 0.0, 1.0, 3.0), probs=(0.2, 0.3, 0.4, 0.1)),
]


def fourth_central_moment(spec: NoiseSpec) -> float:
    # Analytic mu_4 per family, for the variance-estimator standard error.
    v = spec.variance
    if spec.family == "gaussian":
        return 3.0 * v * v
    if spec.family == "uniform":
        return 9.0 * v * v / 5.0
    if spec.family == "laplace":
        return 6.0 * v * v
    if spec.family == "rademacher":
        return v * v
    if spec.family == "shifted_exponential":
        return 9.0 * v * v
    atoms, probs = spec.atom_table()
    return float(np.sum(probs * atoms**4))


def test_rademacher_two_point_support():
    spec = NoiseSpec("rademacher", 1.0)
    x = sample_noise(spec, np.random.default_rng(42), 4)
    assert set(np.unique(x)) <= {-1.0, 1.0}


def test_uniform_support_is_sqrt3():
    spec = NoiseSpec("uniform", 1.0)
    x = sample_noise(spec, np.random.default_rng(0), 10_000)
    root3 = math.sqrt(3.0)
    assert np.all(x > -root3) and np.all(x < root3)


def test_gaussian_moments_at_desk_scale():
    # Tolerances from the standard-error formulas at 1e6 samples:
    # SE(mean) = 2e-3, SE(var) ~ sigma^2 sqrt(2/n) ~ 5.7e-3.
    spec = NoiseSpec("gaussian", 4.0)
    x = sample_noise(spec, np.random.default_rng(7), 1_000_000)
    assert -0.01 < x.mean() < 0.01
    assert 3.97 < x.var() < 4.03


@pytest.mark.parametrize("spec", ALL_FAMILIES, ids=lambda s: s.family)
def test_every_family_matches_mean_and_variance(spec):
    n = 1_000_000
    x = sample_noise(spec, np.random.default_rng(11), n)
    se_mean = spec.sigma / math.sqrt(n)
    se_var = math.sqrt(max(fourth_central_moment(spec) - spec.variance**2, 0.0) / n)
    assert abs(x.mean()) < 4.0 * se_mean
    # The sample-mean correction adds an O(v/n) bias term on top of the
    # fourth-moment standard error (dominant for rademacher, where mu4 = v^2).
    assert abs(x.var() - spec.variance) < 4.0 * se_var + 16.0 * spec.variance / n


@pytest.mark.parametrize("spec", ALL_FAMILIES, ids=lambda s: s.family)
def test_equal_seeds_are_bit_identical(spec):
    a = sample_noise(spec, np.random.default_rng(123), 500)
    b = sample_noise(spec, np.random.default_rng(123), 500)
    assert np.array_equal(a, b)


def test_zero_variance_is_a_point_mass():
    for family in ("gaussian", "uniform", "rademacher", "laplace", "shifted_exponential"):
        x = sample_noise(NoiseSpec(family, 0.0), np.random.default_rng(1), 100)
        assert np.all(x == 0.0)


def test_invalid_specs_rejected():
    with pytest.raises(ValueError):
        NoiseSpec("gaussian", -1.0)
    with pytest.raises(ValueError):
        NoiseSpec("gaussian", math.inf)
    with pytest.raises(ValueError):
        NoiseSpec("discrete_pmf", atoms=(0.0, 1.0), probs=(0.5, 0.4))
    with pytest.raises(ValueError):
        NoiseSpec("discrete_pmf", atoms=(0.0,), probs=(0.5, 0.5))
    with pytest.raises(ValueError):
        NoiseSpec("discrete_pmf", atoms=(0.0, 1.0), probs=(1.5, -0.5))
    with pytest.raises(ValueError):
        NoiseSpec("cauchy", 1.0)
    with pytest.raises(ValueError):
        sample_noise(NoiseSpec("gaussian", 1.0), np.random.default_rng(0), 0)


def test_discrete_pmf_recenters_atoms():
    spec = NoiseSpec("discrete_pmf", atoms=(0.0, 1.0), probs=(0.5, 0.5))
    assert spec.atoms == (-0.5, 0.5)
    assert spec.variance == pytest.approx(0.25)
    with pytest.raises(ValueError):
        NoiseSpec("discrete_pmf", variance=9.0, atoms=(0.0, 1.0), probs=(0.5, 0.5))


def test_propagate_single_edge():
    net, _ = single_link_network(2.0, 1.0, NoiseSpec("gaussian", 1.0))
    y = propagate_step(net, [3.0, 0.0], [0.0, 0.5])
    assert y[1] == 6.5


def test_propagate_all_zero():
    net, _ = relay_network(1.0, 1.0, 1.0, 1.0, NoiseSpec("gaussian", 1.0), NoiseSpec("gaussian", 1.0))
    assert np.all(propagate_step(net, np.zeros(3), np.zeros(3)) == 0.0)


def test_propagate_relay_superposition():
    net, _ = relay_network(1.0, 1.0, 1.0, 1.0, NoiseSpec("gaussian", 1.0), NoiseSpec("gaussian", 1.0))
    n_v = 0.25
    y = propagate_step(net, [1.0, 2.0, 0.0], [0.0, n_v, -1.0])
    assert y[2] == 2.0  # h_sd*1 + h_vd*2 - 1
    assert y[1] == 1.0 + n_v


def test_propagate_is_linear():
    rng = np.random.default_rng(3)
    net, _ = relay_network(0.7, 1.3, -0.4, 2.0, NoiseSpec("gaussian", 1.0), NoiseSpec("uniform", 0.5))
    for _ in range(25):
        x1, x2 = rng.normal(size=(2, 3))
        z1, z2 = rng.normal(size=(2, 3))
        a, c = rng.normal(size=2)
        lhs = propagate_step(net, a * x1 + c * x2, a * z1 + c * z2)
        rhs = a * propagate_step(net, x1, z1) + c * propagate_step(net, x2, z2)
        assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_validate_clean_relay_is_empty():
    net, demand = relay_network(0.5, 1.0, 1.0, 1.0, NoiseSpec("gaussian", 1.0), NoiseSpec("gaussian", 1.0))
    assert validate_network(net, demand) == []


def test_validate_reports_unknown_edge_node():
    net = NetworkModel(("a", "b"), {(0, 5): 1.0}, 1.0, (NoiseSpec("gaussian", 0.0),) * 2)
    report = validate_network(net)
    assert len(report) == 1 and "(0, 5)" in report[0]


def test_validate_reports_source_in_destinations():
    net, _ = single_link_network(1.0, 1.0, NoiseSpec("gaussian", 1.0))
    bad = TrafficDemand(((0, (0, 1)),))
    report = validate_network(net, bad)
    assert len(report) == 1 and "source" in report[0]


def test_validate_reports_bad_power_and_self_loop():
    net = NetworkModel(("a", "b"), {(0, 0): 1.0}, -1.0, (NoiseSpec("gaussian", 0.0),) * 2)
    report = validate_network(net)
    assert any("power" in r for r in report)
    assert any("self-loop" in r for r in report)


def test_json_round_trip(tmp_path):
    doc = {
        "nodes": ["s", "v", "d"],
        "edges": [["s", "v", 1.0], ["s", "d", 0.5], ["v", "d", 1.0]],
        "power": 2.0,
        "noise": {
            "v": {"family": "uniform", "variance": 1.0},
            "d": {"family": "discrete_pmf", "atoms": [-1.0, 0.0, 3.0], "probs": [0.5, 0.25, 0.25]},
        },
        "demands": [["s", ["d"]]],
    }
    path = tmp_path / "net.json"
    path.write_text(json.dumps(doc))
    net, demand = load_network(path)
    assert net.labels == ("s", "v", "d")
    assert net.gains[(0, 2)] == 0.5
    assert net.power == 2.0
    assert net.noise[0].variance == 0.0  # omitted nodes are noiseless
    assert net.noise[2].family == "discrete_pmf"
    assert sum(p * a for a, p in zip(net.noise[2].atoms, net.noise[2].probs)) == pytest.approx(0.0)
    assert demand.demands == ((0, (2,)),)
    assert validate_network(net, demand) == []


def test_json_rejects_unknown_labels():
    doc = {"nodes": ["a"], "edges": [["a", "zz", 1.0]], "power": 1.0}
    with pytest.raises(ValueError, match="unknown node"):
        network_from_dict(doc)
    doc = {"nodes": ["a", "b"], "edges": [], "power": 1.0, "demands": [["a", ["zz"]]]}
    with pytest.raises(ValueError, match="unknown destination"):
        network_from_dict(doc)
