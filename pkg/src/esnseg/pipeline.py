"""File-based pipeline commands: tune, extract, segment, compare, synth,
histogram.

Every command is deterministic given its configuration and inputs (all
randomness is seeded from the config), writes outputs atomically, and echoes
the effective configuration into its output directory so any artifact can be
reproduced.  Staging through files is lossless: reservoir JSON and feature
binaries round-trip floats exactly, so a staged run produces bit-identical
labels to an in-process run.
"""

from __future__ import annotations

import os

import numpy as np

from . import clustering, features, image_io, ip, reservoir
from .config import PipelineConfig, config_to_toml
from .errors import DataError

# One-based labels 1, 3 and 8 in the reference comparison.
DEFAULT_SELECTED_NEURONS = (0, 2, 7)

COMPARE_CELLS = (
    "intensities_hard",
    "intensities_otsu",
    "intensities_fcm",
    "intensities_subtractive",
    "intensities_kmeans",
    "features_initial_kmeans",
    "features_tuned_kmeans",
    "features_selected_kmeans",
)


def _prepare_out(cfg: PipelineConfig, out_dir) -> str:
    out_dir = os.fspath(out_dir)
    os.makedirs(out_dir, exist_ok=True)
    image_io.atomic_write_text(os.path.join(out_dir, "effective_config.toml"),
                               config_to_toml(cfg))
    return out_dir


def _ip_config(cfg: PipelineConfig) -> ip.IPConfig:
    return ip.IPConfig(mu_target=cfg.mu_target, sigma_target=cfg.sigma_target,
                       eta=cfg.eta, n_ip=cfg.n_ip)


def cmd_synth(cfg: PipelineConfig, out_path, width: int = 256, height: int = 256,
              image_seed: int = 1, noise_amplitude: float = 0.05) -> str:
    """Write the synthetic benchmark image."""
    img = image_io.make_synthetic_benchmark(width, height, image_seed,
                                            noise_amplitude=noise_amplitude)
    image_io.save_gray(img, out_path)
    return os.fspath(out_path)


def cmd_tune(cfg: PipelineConfig, image_path, out_dir):
    """Generate a reservoir, tune it on the image, write both reservoir
    serializations and the per-epoch tuning log."""
    out_dir = _prepare_out(cfg, out_dir)
    img = image_io.load_gray(image_path)
    initial = reservoir.generate_reservoir(cfg.n_r, 1, cfg.spectral_radius, cfg.seed)
    tuned, log = ip.ip_tune(initial, img.pixels(), _ip_config(cfg), return_log=True)

    paths = {
        "initial": os.path.join(out_dir, "reservoir_initial.json"),
        "tuned": os.path.join(out_dir, "reservoir_tuned.json"),
        "log": os.path.join(out_dir, "tuning_log.csv"),
    }
    reservoir.save_reservoir(initial, paths["initial"])
    reservoir.save_reservoir(tuned, paths["tuned"])
    ip.write_tuning_log(log, paths["log"])
    return {"paths": paths, "log": log, "initial": initial, "tuned": tuned}


def cmd_extract(cfg: PipelineConfig, reservoir_path, image_path, out_dir,
                neurons=None):
    """Extract equilibrium-state features and write the feature binary plus
    per-neuron histogram CSV.  ``neurons`` are zero-based indices."""
    out_dir = _prepare_out(cfg, out_dir)
    res = reservoir.load_reservoir(reservoir_path)
    img = image_io.load_gray(image_path)
    fm = features.extract_features(res, img, cfg.n_it, cfg.tol)
    if neurons is not None:
        fm = features.select_features(fm, neurons)

    paths = {
        "features": os.path.join(out_dir, "features.bin"),
        "histograms": os.path.join(out_dir, "feature_histograms.csv"),
    }
    features.save_features(fm, paths["features"])
    counts, edges = features.feature_histograms(fm, cfg.otsu_bins)
    features.write_feature_histograms_csv(counts, edges, paths["histograms"])
    return {"paths": paths, "features": fm}


def _segment_source(cfg: PipelineConfig, source) -> clustering.Segmentation:
    return clustering.segment(
        source, cfg.method, k=cfg.k, seed=cfg.cluster_seed, n_init=cfg.n_init,
        fcm_m=cfg.fcm_m, ra=cfg.subtractive_ra, bins=cfg.otsu_bins,
    )


def _summary_rows(cell: str, seg: clustering.Segmentation):
    counts = seg.label_counts()
    sse = "" if seg.sse is None else repr(seg.sse)
    thr = ("" if seg.thresholds is None
           else ";".join(repr(float(t)) for t in seg.thresholds))
    return [f"{cell},{seg.method},{seg.k},{label},{int(count)},{sse},{thr}"
            for label, count in enumerate(counts)]


def _write_summary(rows, path):
    header = "cell,method,k,label,count,sse,thresholds"
    image_io.atomic_write_text(path, "\n".join([header] + rows) + "\n")


def cmd_segment(cfg: PipelineConfig, out_dir, image_path=None, features_path=None):
    """Segment an image or a stored feature map; write the label image and a
    summary CSV (per-label pixel counts, SSE and thresholds where present)."""
    if (image_path is None) == (features_path is None):
        raise DataError("cmd_segment needs exactly one of image_path or features_path")
    out_dir = _prepare_out(cfg, out_dir)
    if image_path is not None:
        source = image_io.load_gray(image_path)
    else:
        source = features.load_features(features_path)
    seg = _segment_source(cfg, source)

    paths = {
        "labels": os.path.join(out_dir, "labels.png"),
        "summary": os.path.join(out_dir, "summary.csv"),
    }
    image_io.write_label_image(seg, paths["labels"])
    _write_summary(_summary_rows("segment", seg), paths["summary"])
    return {"paths": paths, "segmentation": seg}


def cmd_histogram(cfg: PipelineConfig, out_dir, image_path=None,
                  features_path=None, bins: int = 64, shift: float = 0.0):
    """Write an intensity histogram CSV for an image, or per-neuron
    histograms for a feature file.  ``shift`` offsets image intensities
    before binning (useful for side-by-side comparisons); no shift is
    applied by default."""
    if (image_path is None) == (features_path is None):
        raise DataError("cmd_histogram needs exactly one of image_path or features_path")
    out_dir = _prepare_out(cfg, out_dir)
    path = os.path.join(out_dir, "histogram.csv")
    if image_path is not None:
        img = image_io.load_gray(image_path)
        counts, edges = image_io.intensity_histogram(img, bins=bins, shift=shift)
        image_io.write_histogram_csv(counts, edges, path)
    else:
        fm = features.load_features(features_path)
        counts, edges = features.feature_histograms(fm, bins)
        features.write_feature_histograms_csv(counts, edges, path)
    return {"paths": {"histogram": path}}


def _agreement_csv(cells, segs, path):
    names = [c for c in cells if segs.get(c) is not None]
    lines = ["cell," + ",".join(names)]
    for a in names:
        row = [a]
        for b in names:
            if a == b:
                row.append("1.0")
                continue
            try:
                agr = clustering.label_agreement(segs[a].labels, segs[b].labels)
                row.append(repr(agr))
            except DataError:
                row.append("")
        lines.append(",".join(row))
    image_io.atomic_write_text(path, "\n".join(lines) + "\n")


def cmd_compare(cfg: PipelineConfig, image_path, out_dir,
                selected_neurons=DEFAULT_SELECTED_NEURONS):
    """Run the full comparison matrix on one image.

    Five methods on raw intensities (hard threshold, multi-level Otsu, fuzzy
    c-means, subtractive, k-means) plus k-means on initial-reservoir
    features, tuned features and a selected-neuron subset.  Writes one label
    image per cell, a pairwise best-permutation agreement matrix and a
    summary CSV.  A failing cell is recorded and the rest still complete.
    """
    out_dir = _prepare_out(cfg, out_dir)
    img = image_io.load_gray(image_path)
    initial = reservoir.generate_reservoir(cfg.n_r, 1, cfg.spectral_radius, cfg.seed)
    tuned, log = ip.ip_tune(initial, img.pixels(), _ip_config(cfg), return_log=True)
    fm_initial = features.extract_features(initial, img, cfg.n_it, cfg.tol)
    fm_tuned = features.extract_features(tuned, img, cfg.n_it, cfg.tol)
    fm_selected = features.select_features(fm_tuned, list(selected_neurons))

    reservoir.save_reservoir(initial, os.path.join(out_dir, "reservoir_initial.json"))
    reservoir.save_reservoir(tuned, os.path.join(out_dir, "reservoir_tuned.json"))
    ip.write_tuning_log(log, os.path.join(out_dir, "tuning_log.csv"))

    methods = {
        "intensities_hard": (img, "hard"),
        "intensities_otsu": (img, "otsu"),
        "intensities_fcm": (img, "fcm"),
        "intensities_subtractive": (img, "subtractive"),
        "intensities_kmeans": (img, "kmeans"),
        "features_initial_kmeans": (fm_initial, "kmeans"),
        "features_tuned_kmeans": (fm_tuned, "kmeans"),
        "features_selected_kmeans": (fm_selected, "kmeans"),
    }

    segs = {}
    errors = {}
    summary_rows = []
    for cell in COMPARE_CELLS:
        source, method = methods[cell]
        try:
            seg = clustering.segment(
                source, method, k=cfg.k, seed=cfg.cluster_seed, n_init=cfg.n_init,
                fcm_m=cfg.fcm_m, ra=cfg.subtractive_ra, bins=cfg.otsu_bins,
            )
            image_io.write_label_image(seg, os.path.join(out_dir, cell + ".png"))
            segs[cell] = seg
            summary_rows.extend(_summary_rows(cell, seg))
        except Exception as exc:      # record the failure, keep going
            segs[cell] = None
            errors[cell] = f"{type(exc).__name__}: {exc}"
            summary_rows.append(f"{cell},{method},,,,error: {exc},")

    _write_summary(summary_rows, os.path.join(out_dir, "summary.csv"))
    _agreement_csv(COMPARE_CELLS, segs, os.path.join(out_dir, "agreement.csv"))
    return {
        "out_dir": out_dir,
        "segmentations": segs,
        "errors": errors,
        "log": log,
        "initial": initial,
        "tuned": tuned,
        "features": {"initial": fm_initial, "tuned": fm_tuned,
                     "selected": fm_selected},
    }
