"""Side-by-side 3-class segmentations: five classic methods on raw
intensities versus k-means on reservoir features.

Reproduces the package's full comparison matrix on the synthetic benchmark
and prints the pairwise best-permutation label agreements.
"""

import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

from esnseg import PipelineConfig, label_agreement, load_gray
from esnseg.pipeline import COMPARE_CELLS, cmd_compare, cmd_synth

HERE = os.path.dirname(__file__)
OUT = os.path.join(HERE, "output")
os.makedirs(OUT, exist_ok=True)

cfg = PipelineConfig()
image_path = os.path.join(OUT, "benchmark.png")
cmd_synth(cfg, image_path, width=128, height=128)
result = cmd_compare(cfg, image_path, os.path.join(OUT, "comparison"))

print("cell                          classes   pixel counts")
for cell in COMPARE_CELLS:
    seg = result["segmentations"][cell]
    print(f"{cell:<30}{seg.k:<10}{seg.label_counts().tolist()}")

print("\nagreement with intensity k-means (best label permutation):")
base = result["segmentations"]["intensities_kmeans"].labels
for cell in COMPARE_CELLS:
    if cell == "intensities_kmeans":
        continue
    agr = label_agreement(result["segmentations"][cell].labels, base)
    print(f"  {cell:<30}{agr:.4f}")

fig, axes = plt.subplots(3, 3, figsize=(10, 10))
axes[0, 0].imshow(load_gray(image_path).intensities, cmap="gray", vmin=-1, vmax=1)
axes[0, 0].set_title("input", fontsize=9)
for ax, cell in zip(axes.ravel()[1:], COMPARE_CELLS):
    ax.imshow(result["segmentations"][cell].labels, cmap="viridis")
    ax.set_title(cell, fontsize=8)
for ax in axes.ravel():
    ax.axis("off")
fig.tight_layout()
fig.savefig(os.path.join(OUT, "04_comparison_grid.png"), dpi=120)
print("\nwrote output/04_comparison_grid.png and output/comparison/*")
