"""Random tanh reservoirs: generation, state updates and equilibrium states.

A reservoir is a pool of recurrently connected tanh neurons with fixed random
weights.  The state update for input ``u`` is

    r_new = tanh(gain * (w_in @ u) + w_res @ r_prev + bias)

where ``gain`` and ``bias`` are per-neuron parameters (all ones / all zeros
until tuned).  Feeding a constant input repeatedly drives the state toward an
equilibrium; those settled states are used as per-pixel features elsewhere in
the package.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, NumericalError

# Above this size the dense eigen-solve is replaced by ARPACK.
_DENSE_EIG_LIMIT = 64


@dataclass
class Reservoir:
    """Fixed random recurrent network plus per-neuron gain/bias.

    Immutable by convention once generated or tuned: operations that adjust
    gain/bias return a new instance.
    """

    n_neurons: int
    input_dim: int
    w_in: np.ndarray            # (n_neurons, input_dim)
    w_res: np.ndarray           # (n_neurons, n_neurons)
    gain: np.ndarray            # (n_neurons,)
    bias: np.ndarray            # (n_neurons,)
    spectral_radius_target: float
    seed: int = field(default=0)

    def copy(self) -> "Reservoir":
        return Reservoir(
            n_neurons=self.n_neurons,
            input_dim=self.input_dim,
            w_in=self.w_in.copy(),
            w_res=self.w_res.copy(),
            gain=self.gain.copy(),
            bias=self.bias.copy(),
            spectral_radius_target=self.spectral_radius_target,
            seed=self.seed,
        )


def spectral_radius(m: np.ndarray) -> float:
    """Largest absolute eigenvalue magnitude of a square matrix.

    Uses a dense eigen-decomposition for small matrices and ARPACK for large
    ones, falling back to the dense solve if the iterative solver does not
    converge.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DataError(f"spectral_radius needs a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DataError("spectral_radius: matrix has non-finite entries")
    n = m.shape[0]
    if n <= _DENSE_EIG_LIMIT:
        return float(np.max(np.abs(np.linalg.eigvals(m))))
    from scipy.sparse.linalg import ArpackNoConvergence, eigs

    try:
        vals = eigs(m, k=1, which="LM", return_eigenvectors=False,
                    maxiter=n * 100, tol=1e-12)
        return float(np.abs(vals[0]))
    except ArpackNoConvergence:
        pass
    try:
        return float(np.max(np.abs(np.linalg.eigvals(m))))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"spectral radius computation failed: {exc}") from exc


def _draw_weights(n_neurons, input_dim, rng):
    # Fully connected, entries uniform on [-1, 1].
    w_res = rng.uniform(-1.0, 1.0, size=(n_neurons, n_neurons))
    w_in = rng.uniform(-1.0, 1.0, size=(n_neurons, input_dim))
    return w_in, w_res


def generate_reservoir(n_neurons: int, input_dim: int, spectral_radius_target: float,
                       seed: int) -> Reservoir:
    """Draw a random fully connected reservoir and rescale its recurrent
    weights to the requested spectral radius.

    Identical arguments produce a bit-identical reservoir.  A degenerate draw
    (spectral radius below 1e-12, so rescaling is undefined) is replaced by a
    redraw with an incremented seed; a warning reports the substitution.
    """
    if n_neurons < 1:
        raise DataError("n_neurons must be >= 1")
    if input_dim < 1:
        raise DataError("input_dim must be >= 1")
    if not spectral_radius_target > 0:
        raise DataError("spectral_radius_target must be positive")

    attempt_seed = int(seed)
    for _ in range(100):
        rng = np.random.default_rng(attempt_seed)
        w_in, w_res = _draw_weights(n_neurons, input_dim, rng)
        rho = spectral_radius(w_res)
        if rho >= 1e-12:
            break
        warnings.warn(
            f"degenerate reservoir draw for seed {attempt_seed} "
            f"(spectral radius {rho:.3g}); retrying with seed {attempt_seed + 1}"
        )
        attempt_seed += 1
    else:
        raise NumericalError("could not draw a non-degenerate reservoir")

    w_res *= spectral_radius_target / rho
    return Reservoir(
        n_neurons=n_neurons,
        input_dim=input_dim,
        w_in=w_in,
        w_res=w_res,
        gain=np.ones(n_neurons),
        bias=np.zeros(n_neurons),
        spectral_radius_target=float(spectral_radius_target),
        seed=attempt_seed,
    )


def _as_input(res: Reservoir, u) -> np.ndarray:
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if u.shape != (res.input_dim,):
        raise DataError(f"input has shape {u.shape}, expected ({res.input_dim},)")
    return u


def step(res: Reservoir, u, r_prev: np.ndarray) -> np.ndarray:
    """One state update: tanh(gain * (w_in @ u) + w_res @ r_prev + bias)."""
    u = _as_input(res, u)
    r_prev = np.asarray(r_prev, dtype=float)
    if r_prev.shape != (res.n_neurons,):
        raise DataError(f"state has shape {r_prev.shape}, expected ({res.n_neurons},)")
    return np.tanh(res.gain * (res.w_in @ u) + res.w_res @ r_prev + res.bias)


def settle(res: Reservoir, u, n_it: int, tol: float, r0=None):
    """Iterate the state update with a constant input until it settles.

    Starts from the zero state (or ``r0``), stops early once the infinity
    norm of the state change drops below ``tol``, and never runs more than
    ``n_it`` steps.

    Returns ``(state, converged, iterations_used)``.
    """
    if n_it < 1:
        raise DataError("n_it must be >= 1")
    if not tol > 0:
        raise DataError("tol must be positive")
    u = _as_input(res, u)
    if r0 is None:
        r = np.zeros(res.n_neurons)
    else:
        r = np.asarray(r0, dtype=float).copy()
        if r.shape != (res.n_neurons,):
            raise DataError(f"r0 has shape {r.shape}, expected ({res.n_neurons},)")
    drive = res.gain * (res.w_in @ u) + res.bias
    w_res = res.w_res
    for k in range(1, n_it + 1):
        r_new = np.tanh(drive + w_res @ r)
        delta = np.max(np.abs(r_new - r))
        r = r_new
        if delta < tol:
            return r, True, k
    return r, False, n_it


def save_reservoir(res: Reservoir, path) -> None:
    """Serialize a reservoir to JSON with full round-trip float precision."""
    from .image_io import atomic_write_text

    doc = {
        "n_r": res.n_neurons,
        "input_dim": res.input_dim,
        "spectral_radius_target": res.spectral_radius_target,
        "seed": res.seed,
        "w_in": res.w_in.ravel().tolist(),        # row-major
        "w_res": res.w_res.ravel().tolist(),      # row-major
        "gain": res.gain.tolist(),
        "bias": res.bias.tolist(),
    }
    atomic_write_text(path, json.dumps(doc))


def load_reservoir(path) -> Reservoir:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"not a reservoir file: {path} ({exc})") from exc
    try:
        n = int(doc["n_r"])
        d = int(doc["input_dim"])
        res = Reservoir(
            n_neurons=n,
            input_dim=d,
            w_in=np.array(doc["w_in"], dtype=float).reshape(n, d),
            w_res=np.array(doc["w_res"], dtype=float).reshape(n, n),
            gain=np.array(doc["gain"], dtype=float),
            bias=np.array(doc["bias"], dtype=float),
            spectral_radius_target=float(doc["spectral_radius_target"]),
            seed=int(doc["seed"]),
        )
    except (KeyError, ValueError) as exc:
        raise DataError(f"malformed reservoir file {path}: {exc}") from exc
    if res.gain.shape != (n,) or res.bias.shape != (n,):
        raise DataError(f"malformed reservoir file {path}: bad gain/bias length")
    return res
