"""Image loading, intensity scaling and label-image output.

Pixel intensities are kept as floats in [-1, 1]: an 8-bit value v maps to
2*(v/255) - 1 and a 16-bit value to 2*(v/65535) - 1.  Colour inputs are
reduced with BT.601 luma (0.299 R + 0.587 G + 0.114 B) before scaling.
All file writes are atomic (temp file in the target directory, then rename).
"""

from __future__ import annotations

import io
import os
import tempfile
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .errors import DataError


def atomic_write_bytes(path, data: bytes) -> None:
    """Write bytes to ``path`` via a temp file so no partial file survives."""
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


@dataclass
class GrayImage:
    """Grid of scaled pixel intensities in [-1, 1]."""

    width: int
    height: int
    intensities: np.ndarray     # (height, width) floats in [-1, 1]
    source_depth: int = 8       # bits per channel of the origin file

    def pixels(self) -> np.ndarray:
        """Raster-order (row-major) view of the intensities."""
        return self.intensities.reshape(-1)


def _scale(values: np.ndarray, depth: int) -> np.ndarray:
    full = float(2 ** depth - 1)
    return 2.0 * (values / full) - 1.0


def load_gray(path) -> GrayImage:
    """Load a PNG or PGM file as a GrayImage.

    Supported modes: 8-bit gray, 16-bit gray, 8-bit RGB/RGBA (alpha is
    ignored).  Colour is converted with BT.601 luma on the raw channel
    values, without intermediate rounding.
    """
    try:
        img = Image.open(path)
        img.load()
    except FileNotFoundError:
        raise
    except Exception as exc:
        raise DataError(f"cannot read image {path}: {exc}") from exc

    mode = img.mode
    arr = np.asarray(img)
    if mode == "L":
        vals = _scale(arr.astype(float), 8)
        depth = 8
    elif mode in ("I", "I;16"):
        vals = _scale(arr.astype(float), 16)
        depth = 16
    elif mode in ("RGB", "RGBA"):
        rgb = arr[..., :3].astype(float)
        luma = 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]
        vals = _scale(luma, 8)
        depth = 8
    else:
        raise DataError(f"unsupported image mode {mode!r} in {path} "
                        "(need 8/16-bit gray or RGB)")
    height, width = vals.shape
    return GrayImage(width=width, height=height, intensities=vals, source_depth=depth)


def _encode_image(arr: np.ndarray, path) -> bytes:
    ext = os.path.splitext(os.fspath(path))[1].lower()
    if ext == ".png":
        fmt = "PNG"
    elif ext in (".pgm", ".ppm", ".pnm"):
        fmt = "PPM"
    else:
        raise DataError(f"unsupported output format {ext!r} (use .png or .pgm)")
    buf = io.BytesIO()
    Image.fromarray(arr, mode="L").save(buf, format=fmt)
    return buf.getvalue()


def write_label_image(seg, path) -> None:
    """Render a segmentation as an 8-bit gray PNG/PGM.

    Label l becomes round(255*l/(k-1)); a single-class segmentation renders
    all zeros.
    """
    labels = np.asarray(seg.labels)
    if seg.k == 1:
        gray = np.zeros(labels.shape, dtype=np.uint8)
    else:
        gray = np.round(255.0 * labels / (seg.k - 1)).astype(np.uint8)
    atomic_write_bytes(path, _encode_image(gray, path))


def save_gray(img: GrayImage, path) -> None:
    """Write a GrayImage back to an 8-bit PNG/PGM (inverts the scaling)."""
    v = np.round(255.0 * (img.intensities + 1.0) / 2.0)
    arr = np.clip(v, 0, 255).astype(np.uint8)
    atomic_write_bytes(path, _encode_image(arr, path))


# Geometry of the synthetic benchmark, as fractions of a 256x256 design:
# a horizontal background ramp, a rectangle and a disc at distinct 8-bit
# levels, giving intensity modes near -0.45, +0.004 and +0.451.
_RAMP_LEVELS = (58, 82)
_RECT_LEVEL = 128
_DISC_LEVEL = 185
_RECT_ROWS = (140 / 256, 252 / 256)
_RECT_COLS = (20 / 256, 166 / 256)
_DISC_CENTER = (70 / 256, 190 / 256)
_DISC_RADIUS = 64 / 256


def make_synthetic_benchmark(width: int, height: int, seed: int,
                             noise_amplitude: float = 0.05) -> GrayImage:
    """Deterministic trimodal test image.

    A horizontal gradient background (8-bit levels 58..82, intensities about
    -0.545..-0.357), a filled rectangle at level 128 (intensity 1/255) and a
    filled disc at level 185 (intensity ~0.451), plus uniform noise of the
    given amplitude.  The result is quantized to 8-bit levels, so it behaves
    exactly like an image loaded from an 8-bit file and has at most 256
    distinct intensities.
    """
    if width < 16 or height < 16:
        raise DataError("benchmark image must be at least 16x16")
    rng = np.random.default_rng(seed)
    img = np.empty((height, width))
    lo, hi = (_scale(np.array([v], float), 8)[0] for v in _RAMP_LEVELS)
    img[:] = np.linspace(lo, hi, width)[None, :]

    r0, r1 = (int(round(f * height)) for f in _RECT_ROWS)
    c0, c1 = (int(round(f * width)) for f in _RECT_COLS)
    img[r0:r1, c0:c1] = _scale(np.array([_RECT_LEVEL], float), 8)[0]

    cy, cx = _DISC_CENTER[0] * height, _DISC_CENTER[1] * width
    radius = _DISC_RADIUS * min(width, height)
    yy, xx = np.mgrid[0:height, 0:width]
    disc = (yy - cy) ** 2 + (xx - cx) ** 2 <= radius ** 2
    img[disc] = _scale(np.array([_DISC_LEVEL], float), 8)[0]

    if noise_amplitude:
        img += rng.uniform(-noise_amplitude, noise_amplitude, size=img.shape)
    np.clip(img, -1.0, 1.0, out=img)
    levels = np.round(255.0 * (img + 1.0) / 2.0)
    img = _scale(levels, 8)
    return GrayImage(width=width, height=height, intensities=img, source_depth=8)


def intensity_histogram(img: GrayImage, bins: int = 64, shift: float = 0.0):
    """Counts of (optionally shifted) intensities over equal-width bins
    spanning [-1, 1].  Shifted values are clipped into the range so counts
    always sum to width*height.  Returns (counts, edges)."""
    if bins < 2:
        raise DataError("bins must be >= 2")
    vals = np.clip(img.pixels() + shift, -1.0, 1.0)
    return np.histogram(vals, bins=bins, range=(-1.0, 1.0))


def write_histogram_csv(counts, edges, path) -> None:
    lines = ["bin_left,bin_right,count"]
    for i, c in enumerate(counts):
        lines.append(f"{edges[i]!r},{edges[i + 1]!r},{int(c)}")
    atomic_write_text(path, "\n".join(lines) + "\n")
