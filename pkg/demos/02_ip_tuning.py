"""Effect of intrinsic-plasticity tuning on the reservoir's output statistics.

Tunes gain/bias over the benchmark image's pixel stream and compares the
pooled neuron-output distribution before and after: the tuned outputs are
squeezed toward the target Gaussian N(0, 0.1^2) and the histogram KL
divergence drops epoch by epoch.
"""

import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from esnseg import (
    IPConfig,
    empirical_kl,
    generate_reservoir,
    ip_tune,
    make_synthetic_benchmark,
    stream_responses,
)

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

img = make_synthetic_benchmark(128, 128, seed=1)
res = generate_reservoir(10, 1, 0.9, seed=36)
cfg = IPConfig()    # N(0, 0.1^2) target, 5 epochs

tuned, log = ip_tune(res, img.pixels(), cfg, return_log=True)
for row in log:
    print(f"epoch {row['epoch']}: mean {row['mean']:+.4f}  "
          f"std {row['std']:.4f}  kl {row['kl']:.4f}")

before = stream_responses(res, img.pixels()).ravel()
after = stream_responses(tuned, img.pixels()).ravel()
print(f"\npooled std  before {before.std():.3f} -> after {after.std():.3f} "
      f"(target {cfg.sigma_target})")
print(f"kl to target before {empirical_kl(before, 0, 0.1):.3f} "
      f"-> after {empirical_kl(after, 0, 0.1):.3f}")

fig, axes = plt.subplots(1, 3, figsize=(12, 3.5))
axes[0].hist(img.pixels(), bins=64, range=(-1, 1), color="gray")
axes[0].set_title("pixel intensities")
axes[1].hist(before, bins=64, range=(-1, 1), color="tab:blue")
axes[1].set_title("outputs, untuned reservoir")
axes[2].hist(after, bins=64, range=(-1, 1), color="tab:green")
axes[2].set_title("outputs, tuned reservoir")
for ax in axes:
    ax.set_xlim(-1, 1)
fig.tight_layout()
fig.savefig(os.path.join(OUT, "02_output_histograms.png"), dpi=120)
print("wrote output/02_output_histograms.png")

fig, ax = plt.subplots(figsize=(5, 3.5))
ax.plot([r["epoch"] for r in log], [r["kl"] for r in log], marker="o")
ax.set_xlabel("tuning epoch")
ax.set_ylabel("KL divergence to N(0, 0.01)")
ax.set_title("Tuning drives outputs toward the target")
fig.tight_layout()
fig.savefig(os.path.join(OUT, "02_kl_per_epoch.png"), dpi=120)
print("wrote output/02_kl_per_epoch.png")
