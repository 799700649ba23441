"""Gray-image segmentation from echo-state-network equilibrium features.

The pipeline has four stages:

1. Generate a random tanh reservoir (``reservoir``).
2. Tune its per-neuron gain/bias with intrinsic plasticity so outputs over
   the pixel stream approach a target Gaussian (``ip``).
3. Extract a feature vector per pixel as the reservoir's equilibrium state
   under that pixel's intensity (``features``).
4. Cluster pixels in feature (or raw intensity) space (``clustering``).

``pipeline`` and ``cli`` wire these stages into file-based commands.
"""

from .clustering import (
    Segmentation,
    fuzzy_cmeans,
    hard_threshold,
    kmeans,
    label_agreement,
    otsu_multilevel,
    segment,
    subtractive_clustering,
)
from .config import PipelineConfig, load_config
from .errors import ConfigError, DataError, NumericalError
from .features import (
    FeatureMap,
    extract_features,
    feature_histograms,
    load_features,
    save_features,
    select_features,
)
from .image_io import (
    GrayImage,
    load_gray,
    make_synthetic_benchmark,
    save_gray,
    write_label_image,
)
from .ip import IPConfig, empirical_kl, ip_step, ip_tune, stream_responses
from .reservoir import (
    Reservoir,
    generate_reservoir,
    load_reservoir,
    save_reservoir,
    settle,
    spectral_radius,
    step,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DataError",
    "FeatureMap",
    "GrayImage",
    "IPConfig",
    "NumericalError",
    "PipelineConfig",
    "Reservoir",
    "Segmentation",
    "empirical_kl",
    "extract_features",
    "feature_histograms",
    "fuzzy_cmeans",
    "generate_reservoir",
    "hard_threshold",
    "ip_step",
    "ip_tune",
    "kmeans",
    "label_agreement",
    "load_config",
    "load_features",
    "load_gray",
    "load_reservoir",
    "make_synthetic_benchmark",
    "otsu_multilevel",
    "save_features",
    "save_gray",
    "save_reservoir",
    "segment",
    "select_features",
    "settle",
    "spectral_radius",
    "step",
    "stream_responses",
    "subtractive_clustering",
    "write_label_image",
]
