"""noiseforge: additive-noise network simulation and verification toolkit.

Builds networks with arbitrary zero-mean noise laws, runs coding schemes
with finite reading precision over them, and verifies the machinery that
makes a Gaussian-designed scheme work unchanged on non-Gaussian noise:
DFT-based noise mixing, block interleaving, dithered quantization, and the
error/rate accounting that ties them together.
"""

from .coding import (
    CodingScheme,
    InfeasibleSchemeError,
    MessageVector,
    SchemeRun,
    build_inner_scheme,
    check_power,
    floor_precision,
    run_scheme,
)
from .dither import (
    DitherSpec,
    apply_dither,
    density_convergence_test,
    derandomize_dither,
    dither_quantize,
)
from .interleaver import deinterleave, interleave
from .mixer import (
    bin_kinds,
    effective_noise,
    pack,
    receive_transform,
    representative_bin,
    transmit_transform,
    unpack,
)
from .network import (
    NetworkModel,
    NoiseSpec,
    TrafficDemand,
    draw_network_noise,
    draw_noise_batch,
    load_network,
    network_from_dict,
    propagate_step,
    relay_network,
    sample_noise,
    single_link_network,
    validate_network,
)
from .noiselab import (
    GoodnessReport,
    NoiseSampleSet,
    convergence_sweep,
    cross_bin_covariance,
    ks_critical_value,
    ks_statistic,
    lindeberg_ratio,
    s_b_squared,
    sample_effective_noise,
)
from .pipeline import (
    ErrorEstimate,
    ExperimentReport,
    TransformedScheme,
    convexity_probe,
    epsilon_kb_report,
    estimate_error_probability,
    fano_rate_bound,
    gaussian_twin,
    run_transformed,
    superchannel_mi,
    toy_outer_code,
    transform_scheme,
)

__version__ = "0.1.0"
