import numpy as np
import pytest

from esnseg import (
    DataError,
    FeatureMap,
    GrayImage,
    extract_features,
    feature_histograms,
    generate_reservoir,
    load_features,
    make_synthetic_benchmark,
    save_features,
    select_features,
    settle,
)
from esnseg.features import write_feature_histograms_csv

from test_reservoir import make_manual


def small_image(values):
    arr = np.asarray(values, dtype=float)
    return GrayImage(width=arr.shape[1], height=arr.shape[0], intensities=arr)


class TestExtract:
    def test_constant_image_repeats_the_settled_state(self):
        res = generate_reservoir(10, 1, 0.9, seed=42)
        img = small_image(np.full((4, 5), 0.37))
        fm = extract_features(res, img, 50, 1e-6)
        expected, _, _ = settle(res, 0.37, 50, 1e-6)
        assert fm.data.shape == (4, 5, 10)
        assert np.array_equal(fm.data, np.broadcast_to(expected, (4, 5, 10)))

    def test_memoryless_reservoir_features_are_pointwise_tanh(self):
        res = make_manual(np.array([[0.4], [-0.9]]), np.zeros((2, 2)),
                          gain=[2.0, 1.0], bias=[0.0, 0.3])
        img = small_image([[0.1, -0.5], [0.8, 0.0]])
        fm = extract_features(res, img, 50, 1e-6)
        for (i, j), u in np.ndenumerate(img.intensities):
            expected = np.tanh(res.gain * (res.w_in[:, 0] * u) + res.bias)
            assert np.array_equal(fm.data[i, j], expected)

    def test_cache_is_behavior_preserving(self):
        res = generate_reservoir(6, 1, 0.9, seed=1)
        img = make_synthetic_benchmark(24, 24, seed=2)
        cached = extract_features(res, img, 50, 1e-6, memoize=True)
        plain = extract_features(res, img, 50, 1e-6, memoize=False)
        assert np.array_equal(cached.data, plain.data)
        assert cached.converged_fraction == plain.converged_fraction

    def test_subrectangle_matches_slice_of_full_extraction(self):
        res = generate_reservoir(5, 1, 0.9, seed=3)
        img = make_synthetic_benchmark(32, 32, seed=1)
        full = extract_features(res, img, 50, 1e-6)
        sub = GrayImage(width=10, height=8,
                        intensities=img.intensities[4:12, 6:16].copy())
        part = extract_features(res, sub, 50, 1e-6)
        assert np.array_equal(part.data, full.data[4:12, 6:16])

    def test_equal_intensities_share_bitwise_equal_vectors(self):
        res = generate_reservoir(5, 1, 0.9, seed=4)
        img = small_image([[0.25, -0.1], [0.25, 0.25]])
        fm = extract_features(res, img, 50, 1e-6)
        assert np.array_equal(fm.data[0, 0], fm.data[1, 0])
        assert np.array_equal(fm.data[0, 0], fm.data[1, 1])

    def test_values_inside_open_interval(self):
        res = generate_reservoir(8, 1, 0.9, seed=5)
        img = make_synthetic_benchmark(16, 16, seed=1)
        fm = extract_features(res, img, 50, 1e-6)
        assert np.all(fm.data > -1.0) and np.all(fm.data < 1.0)

    def test_out_of_range_intensity_rejected(self):
        res = generate_reservoir(3, 1, 0.9, seed=0)
        with pytest.raises(DataError):
            extract_features(res, small_image([[1.2]]), 50, 1e-6)


class TestSelect:
    def make_fm(self):
        rng = np.random.default_rng(0)
        data = rng.uniform(-0.9, 0.9, (3, 4, 6))
        return FeatureMap(width=4, height=3, n_features=6, data=data,
                          converged_fraction=1.0)

    def test_identity_selection(self):
        fm = self.make_fm()
        out = select_features(fm, list(range(6)))
        assert np.array_equal(out.data, fm.data)

    def test_single_column_projection(self):
        fm = self.make_fm()
        out = select_features(fm, [0])
        assert out.n_features == 1
        assert np.array_equal(out.data[..., 0], fm.data[..., 0])

    def test_composition_is_index_composition(self):
        fm = self.make_fm()
        oneshot = select_features(fm, [5, 1])
        staged = select_features(select_features(fm, [2, 5, 1]), [1, 2])
        assert np.array_equal(oneshot.data, staged.data)

    @pytest.mark.parametrize("indices", [[], [0, 0], [6], [-1]])
    def test_bad_indices_rejected(self, indices):
        with pytest.raises(DataError):
            select_features(self.make_fm(), indices)


class TestHistograms:
    def test_constant_column_lands_in_one_bin(self):
        data = np.full((2, 3, 1), 0.5)
        fm = FeatureMap(width=3, height=2, n_features=1, data=data)
        counts, edges = feature_histograms(fm, 64)
        assert counts.sum() == 6
        assert np.count_nonzero(counts[0]) == 1

    def test_even_split_halves(self):
        data = np.array([[[-0.75]], [[0.25]]] * 5).reshape(10, 1, 1)
        fm = FeatureMap(width=1, height=10, n_features=1, data=data)
        counts, _ = feature_histograms(fm, 4)
        assert counts[0].tolist() == [5, 0, 5, 0]

    def test_counts_sum_to_pixel_count_per_neuron(self):
        rng = np.random.default_rng(1)
        data = rng.uniform(-1, 1, (7, 9, 3))
        fm = FeatureMap(width=9, height=7, n_features=3, data=data)
        counts, _ = feature_histograms(fm, 16)
        assert np.all(counts.sum(axis=1) == 63)

    def test_csv_layout(self, tmp_path):
        fm = FeatureMap(width=2, height=1, n_features=2,
                        data=np.zeros((1, 2, 2)))
        counts, edges = feature_histograms(fm, 4)
        path = tmp_path / "hist.csv"
        write_feature_histograms_csv(counts, edges, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "neuron,bin_left,bin_right,count"
        assert len(lines) == 1 + 2 * 4


class TestFileFormat:
    def test_round_trip_is_bit_exact(self, tmp_path):
        rng = np.random.default_rng(2)
        data = rng.uniform(-1, 1, (5, 4, 3))
        fm = FeatureMap(width=4, height=5, n_features=3, data=data,
                        converged_fraction=0.5)
        path = tmp_path / "f.bin"
        save_features(fm, path)
        back = load_features(path)
        assert (back.width, back.height, back.n_features) == (4, 5, 3)
        assert np.array_equal(back.data, fm.data)
        assert back.converged_fraction is None

    def test_header_layout(self, tmp_path):
        fm = FeatureMap(width=2, height=3, n_features=1, data=np.zeros((3, 2, 1)))
        path = tmp_path / "f.bin"
        save_features(fm, path)
        blob = path.read_bytes()
        assert blob[:4] == b"ESNF"
        assert int.from_bytes(blob[4:8], "little") == 2
        assert int.from_bytes(blob[8:12], "little") == 3
        assert int.from_bytes(blob[12:16], "little") == 1
        assert len(blob) == 16 + 6 * 8

    def test_corrupt_files_rejected(self, tmp_path):
        path = tmp_path / "f.bin"
        path.write_bytes(b"NOPE" + b"\x00" * 20)
        with pytest.raises(DataError):
            load_features(path)
        path.write_bytes(b"ESNF" + (2).to_bytes(4, "little") * 3 + b"\x00" * 7)
        with pytest.raises(DataError):
            load_features(path)
