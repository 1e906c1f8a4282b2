import math

import numpy as np
import pytest

from noiseforge import (
    DitherSpec,
    NoiseSpec,
    apply_dither,
    build_inner_scheme,
    density_convergence_test,
    derandomize_dither,
    dither_quantize,
    estimate_error_probability,
    run_scheme,
    single_link_network,
)


def two_sample_ks_oracle(x, y):
    # Hand-rolled ECDF sup distance, to cross-check the scipy implementation.
    x, y = np.sort(x), np.sort(y)
    grid = np.concatenate([x, y])
    fx = np.searchsorted(x, grid, side="right") / x.size
    fy = np.searchsorted(y, grid, side="right") / y.size
    return np.max(np.abs(fx - fy))


def test_dither_quantize_examples():
    assert dither_quantize(1.37, 2, 0.1) == pytest.approx(1.35)
    assert dither_quantize(1.37, 2, 0.0) == 1.25
    with pytest.raises(ValueError):
        dither_quantize(1.37, 2, 0.2)  # 0.2 >= 2**-3


def test_dither_quantize_error_bracket():
    # Floor error in (-2^-m, 0] plus dither in (+-2^-(m+1)): the exact
    # envelope is (-3 * 2^-(m+1), 2^-(m+1)).
    rng = np.random.default_rng(0)
    for m in (0, 2, 6):
        half = 2.0 ** (-m - 1)
        y = rng.normal(scale=5.0, size=500)
        u = rng.uniform(-half, half, size=500)
        q = dither_quantize(y, m, u)
        err = q - y
        assert np.all(err > -3.0 * half) and np.all(err < half)


def test_dither_spec_bounds():
    DitherSpec(3, np.full((2, 4), 0.06))
    with pytest.raises(ValueError):
        DitherSpec(3, np.full((2, 4), 0.0625))  # exactly at the boundary


def test_density_convergence_gaussian_strictly_decreasing():
    spec = NoiseSpec("gaussian", 1.0)
    for seed in (0, 1, 2):
        rows = density_convergence_test(spec, [1, 3, 5, 8], 50_000, np.random.default_rng(seed))
        ks = [v for _, v in rows]
        assert ks[0] > ks[1] > ks[2] > ks[3], (seed, ks)


def test_density_convergence_reaches_sampling_floor():
    # With a grid much finer than the sample spacing, the quantized draws
    # are indistinguishable from a fresh-vs-fresh baseline.
    spec = NoiseSpec("gaussian", 1.0)
    rng = np.random.default_rng(3)
    n = 50_000
    (_, fine_ks), = density_convergence_test(spec, [12], n, rng)
    baseline = two_sample_ks_oracle(spec.sample(rng, n), spec.sample(rng, n))
    # Both sit at the two-sample noise floor ~ c / sqrt(n/2).
    floor = 2.0 / math.sqrt(n / 2)
    assert fine_ks < floor and baseline < floor


def test_density_convergence_coarse_quantization_dominates():
    # m=0 on uniform(-1/2, 1/2): the quantized law is far from the source.
    spec = NoiseSpec("uniform", 1.0 / 12.0)
    rows = density_convergence_test(spec, [0], 50_000, np.random.default_rng(4))
    assert rows[0][1] > 0.2


def test_density_convergence_rejects_discrete():
    with pytest.raises(ValueError, match="density"):
        density_convergence_test(NoiseSpec("rademacher", 1.0), [1], 100, np.random.default_rng(0))


def test_two_sample_ks_matches_oracle():
    from scipy.stats import ks_2samp

    rng = np.random.default_rng(5)
    x, y = rng.normal(size=300), rng.normal(0.3, 1.0, size=200)
    assert abs(ks_2samp(x, y).statistic - two_sample_ks_oracle(x, y)) < 1e-12


def test_apply_dither_scheme_has_precision_m():
    # Absorbing the dither yields a deterministic scheme invariant under
    # flooring its reads at resolution m.
    net, demand = single_link_network(1.0, 1.0, NoiseSpec("gaussian", 1.0))
    inner = build_inner_scheme("uncoded_pam", net, demand, precision=None)
    rng = np.random.default_rng(6)
    u = rng.uniform(-2.0**-9, 2.0**-9, (2, 1))
    quantized = apply_dither(inner, 8, u)
    assert quantized.precision == 8
    for _ in range(200):
        w = int(rng.integers(1, 3))
        z = rng.normal(size=(2, 1))
        a = run_scheme(quantized, net, [w], z)
        # shift the read anywhere within its floor-8 cell: decisions fixed
        from noiseforge import floor_precision

        cell_low = floor_precision(a.reads[1, 0], 8)
        signal = a.reads[1, 0] - z[1, 0]
        z2 = z.copy()
        z2[1, 0] = cell_low - signal + rng.uniform(0.0, 2.0**-8)
        b = run_scheme(quantized, net, [w], z2)
        assert a.decoded == b.decoded


def test_derandomize_noiseless_achieves_zero():
    net, demand = single_link_network(1.0, 1.0, NoiseSpec("gaussian", 0.0))
    inner = build_inner_scheme("uncoded_pam", net, demand, precision=None)
    res = derandomize_dither(inner, net, m=4, candidates=3, trials=500, rng=np.random.default_rng(7))
    assert res.best_estimate == 0.0
    assert all(c.estimate == 0.0 for c in res.candidates)


def test_derandomize_selection_inequality_and_ci_closeness():
    net, demand = single_link_network(1.0, 1.0, NoiseSpec("gaussian", 1.0))
    inner = build_inner_scheme("uncoded_pam", net, demand, precision=None)
    res = derandomize_dither(inner, net, m=8, candidates=8, trials=20_000, rng=np.random.default_rng(8))
    assert res.best_estimate <= res.mean_estimate  # argmin property, exact
    assert sum(c.selected for c in res.candidates) == 1
    plain = estimate_error_probability(inner, net, 50_000, seed=9)
    # candidate mean within a joint CI of the unquantized error
    halfwidth = 4.0 * math.sqrt(plain.estimate * (1 - plain.estimate) / 20_000)
    assert abs(res.mean_estimate - plain.estimate) < halfwidth


def test_derandomize_m_sweep_converges_to_unquantized():
    net, demand = single_link_network(1.0, 1.0, NoiseSpec("gaussian", 1.0))
    inner = build_inner_scheme("uncoded_pam", net, demand, precision=None)
    plain = estimate_error_probability(inner, net, 60_000, seed=10)
    gaps = []
    for m in (2, 8):
        res = derandomize_dither(inner, net, m=m, candidates=4, trials=60_000, rng=np.random.default_rng(11))
        gaps.append(abs(res.best_estimate - plain.estimate))
    assert gaps[-1] < 0.01
    assert gaps[-1] <= gaps[0] + 0.005  # coarse grids sit farther out
