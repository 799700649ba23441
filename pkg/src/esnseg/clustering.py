"""Clustering and thresholding methods for pixel segmentation.

All algorithms are pure functions, deterministic under fixed seeds:

- k-means (k-means++ seeding, Lloyd iterations, empty-cluster repair)
- hard thresholding at equally spaced levels
- multi-level Otsu thresholding by exhaustive search over bin boundaries
- fuzzy c-means
- subtractive clustering (potential / mountain method)

``segment`` dispatches any of them over an image or feature map and wraps
the result in a :class:`Segmentation`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, permutations
from typing import Optional

import numpy as np

from .errors import DataError
from .features import FeatureMap
from .image_io import GrayImage


@dataclass
class Segmentation:
    """Per-pixel cluster labels plus the clustering metadata."""

    width: int
    height: int
    k: int
    labels: np.ndarray                       # (height, width) ints in 0..k-1
    centroids: Optional[np.ndarray] = None   # (k, d) where applicable
    method: str = ""
    sse: Optional[float] = None              # k-means only
    thresholds: Optional[np.ndarray] = None  # threshold methods only
    params: dict = field(default_factory=dict)

    def label_counts(self) -> np.ndarray:
        return np.bincount(self.labels.ravel(), minlength=self.k)


# ---------------------------------------------------------------------------
# k-means


def _as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2:
        raise DataError(f"points must be an n x d matrix, got shape {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise DataError("points contain non-finite values")
    return pts


def _assign(points, centroids):
    # Squared-distance expansion; argmin breaks ties toward the lowest index.
    d2 = ((points ** 2).sum(axis=1)[:, None]
          - 2.0 * points @ centroids.T
          + (centroids ** 2).sum(axis=1)[None, :])
    return np.argmin(d2, axis=1)


def _plusplus_init(points, k, rng):
    n = points.shape[0]
    centroids = np.empty((k, points.shape[1]))
    centroids[0] = points[rng.integers(n)]
    d2 = ((points - centroids[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total > 0:
            centroids[j] = points[rng.choice(n, p=d2 / total)]
        else:
            centroids[j] = points[rng.integers(n)]
        d2 = np.minimum(d2, ((points - centroids[j]) ** 2).sum(axis=1))
    return centroids


def _repair_empty(points, centroids, labels, k):
    """Give each empty cluster the point currently farthest from its centroid."""
    counts = np.bincount(labels, minlength=k)
    empties = np.flatnonzero(counts == 0)
    if empties.size == 0:
        return labels
    labels = labels.copy()
    dist = ((points - centroids[labels]) ** 2).sum(axis=1)
    for j in empties:
        order = np.argsort(-dist, kind="stable")
        for p in order:
            if counts[labels[p]] > 1:
                counts[labels[p]] -= 1
                labels[p] = j
                counts[j] = 1
                dist[p] = -1.0          # not available for further repairs
                break
    return labels


def _lloyd(points, centroids, max_iter, tol):
    """Lloyd iterations from given start centroids.

    Ends at an assignment-stable fixed point (or after max_iter / once the
    centroid movement drops to ``tol``); the returned labels always satisfy
    the nearest-centroid condition for the returned centroids.
    """
    k = centroids.shape[0]
    sse_history = []
    for _ in range(max_iter):
        labels = _assign(points, centroids)
        labels = _repair_empty(points, centroids, labels, k)
        new_centroids = np.stack([points[labels == j].mean(axis=0) for j in range(k)])
        sse_history.append(float(((points - new_centroids[labels]) ** 2).sum()))
        move = float(np.max(np.abs(new_centroids - centroids)))
        centroids = new_centroids
        if move <= tol:
            break
    labels = _assign(points, centroids)
    sse = float(((points - centroids[labels]) ** 2).sum())
    return labels, centroids, sse, sse_history


def kmeans(points, k: int, seed: int, max_iter: int = 300, tol: float = 0.0,
           n_init: int = 10):
    """Best-of-``n_init`` k-means with k-means++ seeding.

    Restart ``t`` draws its seeding from ``(seed, t)``, so results are
    deterministic for a fixed seed.  Ties in point assignment go to the
    lowest centroid index; a cluster that empties is repaired by granting it
    the point farthest from its current centroid.

    Returns ``(labels, centroids, sse)``.
    """
    pts = _as_points(points)
    if k < 1:
        raise DataError("k must be >= 1")
    if pts.shape[0] < k:
        raise DataError(f"need at least k={k} points, got {pts.shape[0]}")
    if n_init < 1:
        raise DataError("n_init must be >= 1")
    best = None
    for trial in range(n_init):
        rng = np.random.default_rng([int(seed), trial])
        start = _plusplus_init(pts, k, rng)
        labels, centroids, sse, _ = _lloyd(pts, start, max_iter, tol)
        if best is None or sse < best[2]:
            best = (labels, centroids, sse)
    return best


# ---------------------------------------------------------------------------
# thresholding


def equal_thresholds(k: int, lo: float = -1.0, hi: float = 1.0) -> np.ndarray:
    """The k-1 equally spaced interior thresholds of [lo, hi]."""
    if k < 2:
        raise DataError("k must be >= 2")
    if not hi > lo:
        raise DataError("hi must exceed lo")
    return lo + (hi - lo) * np.arange(1, k) / k


def hard_threshold(values, k: int, lo: float = -1.0, hi: float = 1.0) -> np.ndarray:
    """Label values by k-1 fixed thresholds equally spaced over [lo, hi].

    A value equal to a threshold takes the higher label.
    """
    vals = np.asarray(values, dtype=float)
    if vals.size and (vals.min() < lo or vals.max() > hi):
        raise DataError(f"values outside [{lo}, {hi}]")
    thr = equal_thresholds(k, lo, hi)
    return np.searchsorted(thr, vals, side="right")


def otsu_multilevel(values, k: int, bins: int = 64):
    """Multi-level Otsu thresholds by exhaustive search over bin boundaries.

    Histograms the values, then searches all (k-1)-subsets of interior bin
    boundaries for the one maximizing the between-class variance.  Ties go
    to the lexicographically smallest threshold tuple.  Practical for
    k <= 5.

    Returns ``(thresholds, labels)``.
    """
    vals = np.asarray(values, dtype=float).ravel()
    if not 2 <= k <= 5:
        raise DataError("otsu_multilevel supports 2 <= k <= 5")
    if bins < k:
        raise DataError("bins must be >= k")
    if vals.size == 0:
        raise DataError("no values to threshold")
    vmin, vmax = float(vals.min()), float(vals.max())
    if vmax <= vmin:
        raise DataError("values are constant; fewer than k nonempty bins")
    counts, edges = np.histogram(vals, bins=bins, range=(vmin, vmax))
    if np.count_nonzero(counts) < k:
        raise DataError(f"fewer than k={k} nonempty histogram bins")

    w = counts / counts.sum()
    mids = 0.5 * (edges[:-1] + edges[1:])
    cum_w = np.concatenate([[0.0], np.cumsum(w)])
    cum_m = np.concatenate([[0.0], np.cumsum(w * mids)])

    best_score = -np.inf
    best_cut = None
    for cut in combinations(range(1, bins), k - 1):
        bounds = (0,) + cut + (bins,)
        score = 0.0
        valid = True
        for a, b in zip(bounds[:-1], bounds[1:]):
            wc = cum_w[b] - cum_w[a]
            if wc <= 0.0:
                valid = False
                break
            mc = (cum_m[b] - cum_m[a]) / wc
            score += wc * mc * mc
        if valid and score > best_score:
            best_score = score
            best_cut = cut
    thresholds = edges[list(best_cut)]
    labels = np.searchsorted(thresholds, vals, side="right")
    return thresholds, labels


# ---------------------------------------------------------------------------
# fuzzy c-means


def fuzzy_cmeans(points, k: int, m: float = 2.0, seed: int = 0,
                 max_iter: int = 300, tol: float = 1e-6,
                 init_memberships=None):
    """Standard fuzzy c-means.

    Memberships are initialized pseudo-randomly from ``seed`` (rows
    normalized) unless an explicit matrix is given.  Alternates
    membership^m-weighted centroid updates with membership updates
    proportional to distance^(-2/(m-1)), stopping when the largest
    membership change falls below ``tol``.  A point coinciding with a
    centroid gets membership 1 there.

    Returns ``(memberships, labels, centroids)``.
    """
    pts = _as_points(points)
    n = pts.shape[0]
    if k < 1:
        raise DataError("k must be >= 1")
    if n < k:
        raise DataError(f"need at least k={k} points, got {n}")
    if not m > 1:
        raise DataError("fuzzifier m must be > 1")
    if init_memberships is None:
        rng = np.random.default_rng(int(seed))
        u = rng.random((n, k))
        u /= u.sum(axis=1, keepdims=True)
    else:
        u = np.asarray(init_memberships, dtype=float).copy()
        if u.shape != (n, k):
            raise DataError(f"init_memberships must have shape ({n}, {k})")
        u /= u.sum(axis=1, keepdims=True)

    power = 1.0 / (m - 1.0)
    centroids = None
    for _ in range(max_iter):
        um = u ** m
        centroids = (um.T @ pts) / um.sum(axis=0)[:, None]
        d2 = ((pts[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        zero_rows = np.flatnonzero((d2 == 0.0).any(axis=1))
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = d2 ** (-power)
            u_new = inv / inv.sum(axis=1, keepdims=True)
        for i in zero_rows:
            u_new[i] = 0.0
            u_new[i, int(np.argmin(d2[i]))] = 1.0
        change = float(np.max(np.abs(u_new - u)))
        u = u_new
        if change < tol:
            break
    labels = np.argmax(u, axis=1)
    return u, labels, centroids


# ---------------------------------------------------------------------------
# subtractive clustering


def _pairwise_sq_dists(a, b):
    return ((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2)


def subtractive_clustering(points, ra: float, weights=None,
                           accept_ratio: float = 0.5, reject_ratio: float = 0.15,
                           rb_factor: float = 1.5):
    """Cluster-center selection by potential subtraction.

    Each point's potential is a weighted sum of Gaussian kernels
    exp(-4 |x_i - x_j|^2 / ra^2); the highest-potential point becomes a
    center and its neighborhood's potential (kernel radius rb = 1.5 ra) is
    subtracted.  Candidates above ``accept_ratio`` of the first potential are
    accepted outright, below ``reject_ratio`` selection stops, and the gray
    zone applies the usual distance test (d_min/ra + P/P1 >= 1).  Optional
    ``weights`` count duplicate points, which leaves the selected centers
    unchanged versus expanding the duplicates.

    Returns ``(centers, labels)`` with labels by nearest center.
    """
    pts = _as_points(points)
    n = pts.shape[0]
    if n < 1:
        raise DataError("need at least one point")
    if not ra > 0:
        raise DataError("ra must be positive")
    if weights is None:
        w = np.ones(n)
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != (n,) or np.any(w <= 0):
            raise DataError("weights must be positive, one per point")

    alpha = 4.0 / (ra * ra)
    rb = rb_factor * ra
    beta = 4.0 / (rb * rb)

    # Chunked accumulation keeps memory O(n * chunk) for large inputs.
    potential = np.zeros(n)
    chunk = 2048
    for start in range(0, n, chunk):
        d2 = _pairwise_sq_dists(pts[start:start + chunk], pts)
        potential[start:start + chunk] = np.exp(-alpha * d2) @ w

    first_idx = int(np.argmax(potential))
    p_first = float(potential[first_idx])
    center_idx = []
    p = potential.copy()
    while len(center_idx) < n:
        i = int(np.argmax(p))
        p_i = float(p[i])
        if center_idx:
            if p_i < reject_ratio * p_first:
                break
            if p_i <= accept_ratio * p_first:
                d_min = np.sqrt(min(((pts[i] - pts[c]) ** 2).sum() for c in center_idx))
                if d_min / ra + p_i / p_first < 1.0:
                    p[i] = 0.0          # revoke this candidate, try the next
                    if p.max() < reject_ratio * p_first:
                        break
                    continue
        center_idx.append(i)
        p = p - p_i * np.exp(-beta * ((pts - pts[i]) ** 2).sum(axis=1))

    centers = pts[center_idx]
    labels = _assign(pts, centers)
    return centers, labels


# ---------------------------------------------------------------------------
# comparison metric and dispatch


def label_agreement(labels_a, labels_b, k: Optional[int] = None) -> float:
    """Fraction of positions with equal labels under the best label
    permutation (cluster numbering is arbitrary)."""
    a = np.asarray(labels_a).ravel()
    b = np.asarray(labels_b).ravel()
    if a.shape != b.shape:
        raise DataError("label arrays must have equal length")
    if k is None:
        k = int(max(a.max(), b.max())) + 1
    if k > 8:
        raise DataError("label_agreement is exhaustive; k must be <= 8")
    best = 0.0
    for perm in permutations(range(k)):
        mapped = np.array(perm)[a]
        best = max(best, float(np.mean(mapped == b)))
    return best


def _source_points(source):
    if isinstance(source, GrayImage):
        return source.pixels()[:, None], source.width, source.height
    if isinstance(source, FeatureMap):
        return source.points(), source.width, source.height
    raise DataError(f"cannot segment a {type(source).__name__}")


def segment(source, method: str, k: int = 3, seed: int = 0, n_init: int = 10,
            max_iter: int = 300, tol: float = 1e-6, fcm_m: float = 2.0,
            ra: float = 0.4, bins: int = 64, lo: float = -1.0,
            hi: float = 1.0) -> Segmentation:
    """Segment an image or feature map with the chosen method.

    Methods: ``kmeans``, ``fcm``, ``subtractive``, ``hard``, ``otsu``.
    Threshold methods require scalar-valued pixels (an image or a
    single-feature map).  Subtractive clustering determines its own cluster
    count; the other methods use ``k``.
    """
    pts, width, height = _source_points(source)
    shape = (height, width)

    if method == "kmeans":
        labels, centroids, sse = kmeans(pts, k, seed, max_iter=max_iter,
                                        tol=0.0, n_init=n_init)
        return Segmentation(width, height, k, labels.reshape(shape), centroids,
                            method, sse=sse,
                            params={"k": k, "seed": seed, "n_init": n_init})
    if method == "fcm":
        _, labels, centroids = fuzzy_cmeans(pts, k, m=fcm_m, seed=seed,
                                            max_iter=max_iter, tol=tol)
        return Segmentation(width, height, k, labels.reshape(shape), centroids,
                            method, params={"k": k, "seed": seed, "m": fcm_m})
    if method == "subtractive":
        # Collapsing duplicate points with count weights is exact and turns an
        # O(n_pixels^2) potential computation into one over unique values.
        uniq, inverse, counts = np.unique(pts, axis=0, return_inverse=True,
                                          return_counts=True)
        centers, ulabels = subtractive_clustering(uniq, ra, weights=counts.astype(float))
        labels = ulabels[inverse]
        return Segmentation(width, height, centers.shape[0],
                            labels.reshape(shape), centers, method,
                            params={"ra": ra})
    if method in ("hard", "otsu"):
        if pts.shape[1] != 1:
            raise DataError(f"method {method!r} needs scalar values, "
                            f"got {pts.shape[1]} features")
        vals = pts[:, 0]
        if method == "hard":
            labels = hard_threshold(vals, k, lo, hi)
            thr = equal_thresholds(k, lo, hi)
        else:
            thr, labels = otsu_multilevel(vals, k, bins)
        return Segmentation(width, height, k, labels.reshape(shape), None,
                            method, thresholds=thr,
                            params={"k": k, "bins": bins} if method == "otsu"
                            else {"k": k, "lo": lo, "hi": hi})
    raise DataError(f"unknown segmentation method {method!r}")
