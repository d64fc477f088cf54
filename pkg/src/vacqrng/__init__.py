"""vacqrng: post-measurement chain for vacuum-fluctuation QRNGs.

Modules
-------
entropy    effective iid model, min-entropy bounds, leftover-hash sizing
spectral   Welch PSD estimation, entropy rate, variance confidence intervals
simulate   synthetic colored-Gaussian captures, ADC quantization, beat records
calibrate  transfer-function extraction and the vacuum-PSD lower bound
extractor  bit-exact Toeplitz hashing (reference and high-throughput paths)
cli        pipeline orchestration and plot-data generation
"""

__version__ = "0.1.0"

from . import errors
from .entropy import (
    AdcSpec,
    EntropyReport,
    IidParams,
    NoiseModel,
    fold_classical_noise,
    homodyne_upper_bound,
    iid_params_from_variances,
    min_entropy_lower_bound,
    optimize_delta,
    secure_length,
    worst_case_min_entropy,
)

__all__ = [
    "errors",
    "AdcSpec",
    "EntropyReport",
    "IidParams",
    "NoiseModel",
    "fold_classical_noise",
    "homodyne_upper_bound",
    "iid_params_from_variances",
    "min_entropy_lower_bound",
    "optimize_delta",
    "secure_length",
    "worst_case_min_entropy",
    "__version__",
]
