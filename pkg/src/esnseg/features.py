"""Per-pixel feature vectors from reservoir equilibrium states.

Each pixel's scaled intensity is fed to the reservoir as a constant input
from a fresh zero state; the settled state is that pixel's feature vector.
Because the settled state depends only on the intensity value, extraction
memoizes over unique intensities (an 8-bit image has at most 256), which is
behavior-preserving and orders of magnitude faster than settling per pixel.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DataError
from .image_io import GrayImage, atomic_write_bytes, atomic_write_text
from .reservoir import Reservoir, settle

_MAGIC = b"ESNF"


@dataclass
class FeatureMap:
    """Per-pixel feature vectors on an image grid.

    ``converged_fraction`` is the share of pixels whose settling met the
    tolerance within the iteration budget (None when loaded from a file,
    which does not store it).
    """

    width: int
    height: int
    n_features: int
    data: np.ndarray            # (height, width, n_features)
    converged_fraction: Optional[float] = None

    def points(self) -> np.ndarray:
        """Pixels flattened to an (n_pixels, n_features) matrix."""
        return self.data.reshape(-1, self.n_features)


def extract_features(res: Reservoir, img: GrayImage, n_it: int, tol: float,
                     memoize: bool = True) -> FeatureMap:
    """Settle the reservoir on every pixel intensity.

    With ``memoize=True`` each unique intensity is settled once and the
    result shared across equal pixels; the output is bit-identical to the
    unmemoized path because settling is a deterministic function of the
    intensity.
    """
    if res.input_dim != 1:
        raise DataError("feature extraction expects a scalar-input reservoir")
    pixels = img.pixels()
    if pixels.size and np.max(np.abs(pixels)) > 1.0:
        raise DataError("image intensities must lie in [-1, 1]")

    n = res.n_neurons
    if memoize:
        unique, inverse = np.unique(pixels, return_inverse=True)
        states = np.empty((unique.size, n))
        flags = np.empty(unique.size, dtype=bool)
        for i, u in enumerate(unique):
            states[i], flags[i], _ = settle(res, u, n_it, tol)
        data = states[inverse]
        converged = flags[inverse]
    else:
        data = np.empty((pixels.size, n))
        converged = np.empty(pixels.size, dtype=bool)
        for i, u in enumerate(pixels):
            data[i], converged[i], _ = settle(res, u, n_it, tol)

    return FeatureMap(
        width=img.width,
        height=img.height,
        n_features=n,
        data=data.reshape(img.height, img.width, n),
        converged_fraction=float(converged.mean()),
    )


def select_features(fm: FeatureMap, indices) -> FeatureMap:
    """Keep only the chosen neuron columns (zero-based), order preserved."""
    indices = list(indices)
    if not indices:
        raise DataError("feature selection needs at least one index")
    if len(set(indices)) != len(indices):
        raise DataError(f"duplicate feature indices: {indices}")
    for i in indices:
        if not 0 <= i < fm.n_features:
            raise DataError(f"feature index {i} out of range 0..{fm.n_features - 1}")
    return FeatureMap(
        width=fm.width,
        height=fm.height,
        n_features=len(indices),
        data=fm.data[:, :, indices].copy(),
        converged_fraction=fm.converged_fraction,
    )


def feature_histograms(fm: FeatureMap, bins: int):
    """Per-neuron histograms over equal-width bins spanning [-1, 1].

    Returns (counts, edges) where counts has shape (n_features, bins) and
    each row sums to width*height.
    """
    if bins < 2:
        raise DataError("bins must be >= 2")
    edges = np.linspace(-1.0, 1.0, bins + 1)
    pts = fm.points()
    counts = np.empty((fm.n_features, bins), dtype=np.int64)
    for j in range(fm.n_features):
        counts[j], _ = np.histogram(np.clip(pts[:, j], -1.0, 1.0),
                                    bins=bins, range=(-1.0, 1.0))
    return counts, edges


def write_feature_histograms_csv(counts, edges, path) -> None:
    """CSV with one row per (neuron, bin): neuron, bin_left, bin_right, count."""
    lines = ["neuron,bin_left,bin_right,count"]
    for j in range(counts.shape[0]):
        for i in range(counts.shape[1]):
            lines.append(f"{j},{edges[i]!r},{edges[i + 1]!r},{int(counts[j, i])}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def save_features(fm: FeatureMap, path) -> None:
    """Binary format: magic 'ESNF', then width, height, n_features as
    little-endian uint32, then row-major little-endian float64 data."""
    header = _MAGIC + struct.pack("<III", fm.width, fm.height, fm.n_features)
    payload = np.ascontiguousarray(fm.data, dtype="<f8").tobytes()
    atomic_write_bytes(path, header + payload)


def load_features(path) -> FeatureMap:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 16 or blob[:4] != _MAGIC:
        raise DataError(f"not a feature-map file: {path}")
    width, height, n_features = struct.unpack("<III", blob[4:16])
    expected = width * height * n_features * 8
    if len(blob) - 16 != expected:
        raise DataError(f"feature-map file {path} is truncated or padded")
    data = np.frombuffer(blob, dtype="<f8", offset=16).astype(float)
    return FeatureMap(
        width=width,
        height=height,
        n_features=n_features,
        data=data.reshape(height, width, n_features),
    )
