import json
from unittest import mock

import numpy as np
import pytest

from esnseg import (
    DataError,
    Reservoir,
    generate_reservoir,
    load_reservoir,
    save_reservoir,
    settle,
    spectral_radius,
    step,
)
from esnseg import reservoir as reservoir_mod


def make_manual(w_in, w_res, gain=None, bias=None):
    w_in = np.atleast_2d(np.asarray(w_in, float))
    if w_in.shape[0] == 1 and w_in.shape[1] != 1:
        w_in = w_in.T
    w_res = np.atleast_2d(np.asarray(w_res, float))
    n = w_res.shape[0]
    return Reservoir(
        n_neurons=n,
        input_dim=w_in.shape[1],
        w_in=w_in,
        w_res=w_res,
        gain=np.ones(n) if gain is None else np.asarray(gain, float),
        bias=np.zeros(n) if bias is None else np.asarray(bias, float),
        spectral_radius_target=spectral_radius(w_res) if n > 0 else 0.0,
        seed=0,
    )


class TestSpectralRadius:
    def test_diagonal(self):
        assert spectral_radius(np.diag([0.5, -0.3])) == pytest.approx(0.5)

    def test_permutation(self):
        assert spectral_radius(np.array([[0.0, 1.0], [1.0, 0.0]])) == pytest.approx(1.0)

    def test_matches_dense_oracle(self):
        m = np.random.default_rng(42).uniform(-1, 1, (10, 10))
        oracle = np.max(np.abs(np.linalg.eigvals(m)))
        assert spectral_radius(m) == pytest.approx(oracle, rel=1e-9)

    def test_large_matrix_iterative_path(self):
        # 128x128 exceeds the dense cutoff, exercising ARPACK
        m = np.random.default_rng(7).uniform(-1, 1, (128, 128))
        oracle = np.max(np.abs(np.linalg.eigvals(m)))
        assert spectral_radius(m) == pytest.approx(oracle, rel=1e-9)

    def test_rejects_non_square(self):
        with pytest.raises(DataError):
            spectral_radius(np.ones((2, 3)))

    def test_rejects_non_finite(self):
        with pytest.raises(DataError):
            spectral_radius(np.array([[np.nan, 0.0], [0.0, 1.0]]))


class TestGenerate:
    def test_spectral_radius_hits_target(self):
        res = generate_reservoir(10, 1, 0.9, seed=42)
        assert spectral_radius(res.w_res) == pytest.approx(0.9, rel=1e-9)

    def test_one_neuron_radius_is_abs(self):
        res = generate_reservoir(1, 1, 0.5, seed=3)
        assert abs(res.w_res[0, 0]) == pytest.approx(0.5)

    def test_deterministic(self):
        a = generate_reservoir(10, 1, 0.9, seed=42)
        b = generate_reservoir(10, 1, 0.9, seed=42)
        assert np.array_equal(a.w_in, b.w_in)
        assert np.array_equal(a.w_res, b.w_res)

    def test_gain_bias_initialization(self):
        res = generate_reservoir(5, 2, 0.9, seed=1)
        assert np.array_equal(res.gain, np.ones(5))
        assert np.array_equal(res.bias, np.zeros(5))
        assert res.w_in.shape == (5, 2)
        assert np.all(np.isfinite(res.w_res))

    def test_degenerate_draw_regenerates_with_next_seed(self):
        real = reservoir_mod._draw_weights
        calls = {"n": 0}

        def fake(n_neurons, input_dim, rng):
            calls["n"] += 1
            if calls["n"] == 1:
                return np.zeros((n_neurons, input_dim)), np.zeros((n_neurons, n_neurons))
            return real(n_neurons, input_dim, rng)

        with mock.patch.object(reservoir_mod, "_draw_weights", side_effect=fake):
            with pytest.warns(UserWarning, match="degenerate"):
                res = generate_reservoir(4, 1, 0.9, seed=10)
        assert res.seed == 11
        assert spectral_radius(res.w_res) == pytest.approx(0.9, rel=1e-9)

    @pytest.mark.parametrize("kwargs", [
        dict(n_neurons=0, input_dim=1, spectral_radius_target=0.9, seed=0),
        dict(n_neurons=3, input_dim=0, spectral_radius_target=0.9, seed=0),
        dict(n_neurons=3, input_dim=1, spectral_radius_target=0.0, seed=0),
    ])
    def test_rejects_bad_arguments(self, kwargs):
        with pytest.raises(DataError):
            generate_reservoir(**kwargs)


class TestStep:
    def test_all_zero_input_gives_zero_state(self):
        res = generate_reservoir(6, 1, 0.9, seed=0)
        out = step(res, 0.0, np.zeros(6))
        assert np.array_equal(out, np.zeros(6))

    def test_scalar_case(self):
        res = make_manual([1.0], [[0.0]])
        out = step(res, 0.5, np.array([0.77]))
        assert out[0] == pytest.approx(np.tanh(0.5))

    def test_bias_only(self):
        res = make_manual(np.zeros((3, 1)), np.zeros((3, 3)), bias=[0.2, -0.4, 1.0])
        out = step(res, 0.9, np.array([0.1, 0.2, 0.3]))
        assert out == pytest.approx(np.tanh([0.2, -0.4, 1.0]))

    def test_dimension_mismatch(self):
        res = generate_reservoir(4, 1, 0.9, seed=0)
        with pytest.raises(DataError):
            step(res, [0.1, 0.2], np.zeros(4))
        with pytest.raises(DataError):
            step(res, 0.1, np.zeros(5))


class TestSettle:
    def test_memoryless_reservoir_converges_in_two_steps(self):
        res = make_manual(np.array([[0.3], [-0.8]]), np.zeros((2, 2)),
                          gain=[1.5, 0.5], bias=[0.1, -0.2])
        state, converged, used = settle(res, 0.4, 50, 1e-6)
        assert converged and used == 2
        expected = np.tanh(res.gain * (res.w_in[:, 0] * 0.4) + res.bias)
        assert np.array_equal(state, expected)

    def test_zero_input_zero_bias_settles_at_origin(self):
        res = generate_reservoir(8, 1, 0.9, seed=5)
        state, converged, used = settle(res, 0.0, 50, 1e-6)
        assert converged and used == 1
        assert np.array_equal(state, np.zeros(8))

    def test_saturating_inputs_converge_under_reference_config(self):
        # seed 42, strong drives: the tolerance is met inside the budget
        res = generate_reservoir(10, 1, 0.9, seed=42)
        for u in (-0.9, -0.5, 0.3, 0.6, 1.0):
            state, converged, used = settle(res, u, 50, 1e-6)
            assert converged, f"u={u} did not settle"
            # long-run oracle: keep iterating far beyond the budget
            deep, _, _ = settle(res, u, 500, 1e-15)
            assert np.max(np.abs(state - deep)) < 1e-5

    def test_fixed_point_property(self):
        res = generate_reservoir(10, 1, 0.9, seed=42)
        state, converged, _ = settle(res, 0.7, 50, 1e-6)
        assert converged
        assert np.max(np.abs(step(res, 0.7, state) - state)) < 1e-6

    def test_states_stay_inside_open_interval(self):
        res = generate_reservoir(10, 1, 0.9, seed=8)
        for u in (-1.0, -0.3, 0.2, 1.0):
            state, _, _ = settle(res, u, 50, 1e-6)
            assert np.all(state > -1.0) and np.all(state < 1.0)

    def test_deterministic(self):
        res = generate_reservoir(10, 1, 0.9, seed=9)
        a = settle(res, 0.31, 50, 1e-6)
        b = settle(res, 0.31, 50, 1e-6)
        assert np.array_equal(a[0], b[0]) and a[1:] == b[1:]

    def test_equilibrium_independent_of_initial_state(self):
        # Echo-state check: from zero and from random starts the iteration
        # reaches the same equilibrium.  Needs a horizon well past the
        # 50-step budget; at 50 steps the residual coupling is ~1e-4.
        rng = np.random.default_rng(123)
        for seed in range(10):
            res = generate_reservoir(10, 1, 0.9, seed=seed)
            base, _, _ = settle(res, 0.8, 500, 1e-15)
            for _ in range(10):
                r0 = rng.uniform(-1, 1, 10)
                alt, _, _ = settle(res, 0.8, 500, 1e-15, r0=r0)
                assert np.max(np.abs(alt - base)) < 1e-5

    def test_rejects_bad_arguments(self):
        res = generate_reservoir(3, 1, 0.9, seed=0)
        with pytest.raises(DataError):
            settle(res, 0.1, 0, 1e-6)
        with pytest.raises(DataError):
            settle(res, 0.1, 10, 0.0)
        with pytest.raises(DataError):
            settle(res, 0.1, 10, 1e-6, r0=np.zeros(4))


class TestSerialization:
    def test_round_trip_is_exact(self, tmp_path):
        res = generate_reservoir(10, 1, 0.9, seed=42)
        path = tmp_path / "reservoir.json"
        save_reservoir(res, path)
        back = load_reservoir(path)
        assert back.n_neurons == res.n_neurons
        assert back.input_dim == res.input_dim
        assert back.seed == res.seed
        assert back.spectral_radius_target == res.spectral_radius_target
        assert np.array_equal(back.w_in, res.w_in)
        assert np.array_equal(back.w_res, res.w_res)
        assert np.array_equal(back.gain, res.gain)
        assert np.array_equal(back.bias, res.bias)

    def test_serialization_is_byte_stable(self, tmp_path):
        res = generate_reservoir(6, 1, 0.9, seed=2)
        p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
        save_reservoir(res, p1)
        save_reservoir(res, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_row_major_layout(self, tmp_path):
        res = generate_reservoir(3, 2, 0.9, seed=4)
        path = tmp_path / "r.json"
        save_reservoir(res, path)
        doc = json.loads(path.read_text())
        assert doc["w_in"] == res.w_in.ravel().tolist()
        assert doc["w_res"][:3] == res.w_res[0].tolist()

    def test_malformed_file_errors(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("not json")
        with pytest.raises(DataError):
            load_reservoir(path)
        path.write_text(json.dumps({"n_r": 2}))
        with pytest.raises(DataError):
            load_reservoir(path)
