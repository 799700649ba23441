"""Reservoir equilibrium states as a function of input intensity.

Feeds constant intensities to a random tanh reservoir and watches the state
settle toward a fixed point.  The settled state vector is what later serves
as a pixel's feature vector, so this script is the "one pixel" view of the
whole approach.
"""

import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from esnseg import generate_reservoir, settle, step

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

res = generate_reservoir(10, 1, spectral_radius_target=0.9, seed=36)
print(f"reservoir: {res.n_neurons} neurons, spectral radius target "
      f"{res.spectral_radius_target}, seed {res.seed}")

# --- settling trajectories for a handful of intensities -------------------
fig, axes = plt.subplots(1, 3, figsize=(12, 3.5), sharey=True)
for ax, u in zip(axes, (-0.8, 0.1, 0.6)):
    r = np.zeros(res.n_neurons)
    track = [r]
    for _ in range(50):
        r = step(res, u, r)
        track.append(r)
    ax.plot(np.array(track))
    ax.set_title(f"input u = {u}")
    ax.set_xlabel("iteration")
axes[0].set_ylabel("neuron state")
fig.suptitle("State trajectories under constant input (zero start)")
fig.tight_layout()
fig.savefig(os.path.join(OUT, "01_trajectories.png"), dpi=120)
print("wrote output/01_trajectories.png")

# --- equilibrium value of each neuron across the intensity range ----------
intensities = np.linspace(-1, 1, 201)
equilibria = np.empty((intensities.size, res.n_neurons))
converged = 0
for i, u in enumerate(intensities):
    equilibria[i], ok, _ = settle(res, u, n_it=50, tol=1e-6)
    converged += ok
print(f"{converged}/{intensities.size} intensities met the 1e-6 tolerance "
      f"within 50 iterations (strong drives settle fastest)")

fig, ax = plt.subplots(figsize=(7, 4.5))
for j in range(res.n_neurons):
    ax.plot(intensities, equilibria[:, j], label=f"neuron {j + 1}")
ax.set_xlabel("pixel intensity")
ax.set_ylabel("equilibrium state")
ax.set_title("Each neuron maps intensity to its own response curve")
ax.legend(fontsize=7, ncol=2)
fig.tight_layout()
fig.savefig(os.path.join(OUT, "01_equilibrium_curves.png"), dpi=120)
print("wrote output/01_equilibrium_curves.png")
