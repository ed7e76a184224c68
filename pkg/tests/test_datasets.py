"""CSV ingestion, splitting, and seeded subsampling."""

import numpy as np
import pytest

from monotune.datasets import (
    Dataset,
    DatasetError,
    bundled_dataset_path,
    generate_classification_dataset,
    load_csv_dataset,
    save_csv_dataset,
    split_dataset,
    subsample,
)


def write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def csv_rows(n, labels=None):
    lines = ["a,b,label"]
    for i in range(n):
        label = labels[i] if labels is not None else i % 2
        lines.append(f"{i}.0,{i + 1}.5,{label}")
    return "\n".join(lines) + "\n"


class TestLoadCsv:
    def test_parses_features_and_labels(self, tmp_path):
        ds = load_csv_dataset(write(tmp_path, csv_rows(12)))
        assert ds.n == 12
        assert ds.F == 2
        assert ds.feature_names == ("a", "b")
        assert ds.features[3, 0] == 3.0
        assert list(np.unique(ds.labels)) == [0, 1]

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_csv_dataset(tmp_path / "nope.csv")

    def test_non_binary_label_is_schema_error(self, tmp_path):
        text = csv_rows(11) + "1.0,2.0,2\n"
        with pytest.raises(DatasetError, match="non-binary label"):
            load_csv_dataset(write(tmp_path, text))

    def test_nan_cell_is_parse_error_naming_the_cell(self, tmp_path):
        text = "a,b,label\n" + "1.0,2.0,0\n" * 10 + "1.0,NaN,1\n"
        with pytest.raises(DatasetError, match=r"row 12, column 2"):
            load_csv_dataset(write(tmp_path, text))

    def test_non_numeric_cell_is_parse_error(self, tmp_path):
        text = "a,b,label\n" + "1.0,2.0,0\n" * 10 + "oops,2.0,1\n"
        with pytest.raises(DatasetError, match=r"row 12, column 1"):
            load_csv_dataset(write(tmp_path, text))

    def test_wrong_label_header(self, tmp_path):
        with pytest.raises(DatasetError, match="label"):
            load_csv_dataset(write(tmp_path, "a,b,target\n1,2,0\n"))

    def test_too_small_rejected(self, tmp_path):
        with pytest.raises(DatasetError, match="too small"):
            load_csv_dataset(write(tmp_path, csv_rows(3)))

    def test_roundtrip_exact(self, tmp_path):
        ds = generate_classification_dataset(n=50, F=4, informative=2, seed=1)
        path = tmp_path / "roundtrip.csv"
        save_csv_dataset(ds, path)
        back = load_csv_dataset(path)
        assert np.array_equal(ds.features, back.features)
        assert np.array_equal(ds.labels, back.labels)
        assert ds.feature_names == back.feature_names


class TestSplit:
    @pytest.fixture
    def small(self):
        X = np.arange(20, dtype=float).reshape(10, 2)
        return Dataset(X, np.array([0, 1] * 5), ("a", "b"))

    def test_sizes(self, small):
        train, valid, heldout = split_dataset(small, seed=0)
        assert (train.n, valid.n, heldout.n) == (6, 2, 2)

    def test_determinism(self, small):
        a = split_dataset(small, seed=0)
        b = split_dataset(small, seed=0)
        for x, y in zip(a, b):
            assert np.array_equal(x.features, y.features)

    def test_partition_property(self, small):
        parts = split_dataset(small, seed=0)
        rows = np.concatenate([p.features[:, 0] for p in parts])
        assert sorted(rows.tolist()) == sorted(small.features[:, 0].tolist())
        assert len(set(rows.tolist())) == small.n

    def test_single_class_split_rejected(self, small):
        # seed 1 puts a single class into the validation part
        with pytest.raises(DatasetError, match="single class"):
            split_dataset(small, seed=1)

    def test_invalid_fractions(self, small):
        with pytest.raises(ValueError):
            split_dataset(small, train_frac=0.8, valid_frac=0.3)
        with pytest.raises(ValueError):
            split_dataset(small, train_frac=0.0, valid_frac=0.2)


class TestSubsample:
    def test_ceiling_rule(self):
        ds = generate_classification_dataset(n=100, F=3, informative=2, seed=2)
        assert subsample(ds, 0.1, seed=0).n == 10
        assert subsample(ds, 0.101, seed=0).n == 11

    def test_full_fraction_keeps_row_multiset(self):
        ds = generate_classification_dataset(n=40, F=3, informative=2, seed=3)
        sub = subsample(ds, 1.0, seed=5)
        assert sorted(sub.features[:, 0].tolist()) == sorted(ds.features[:, 0].tolist())

    def test_different_seeds_differ(self):
        ds = generate_classification_dataset(n=200, F=3, informative=2, seed=4)
        a = subsample(ds, 0.1, seed=0)
        b = subsample(ds, 0.1, seed=1)
        assert not np.array_equal(a.features, b.features)

    def test_determinism(self):
        ds = generate_classification_dataset(n=200, F=3, informative=2, seed=4)
        a = subsample(ds, 0.2, seed=9)
        b = subsample(ds, 0.2, seed=9)
        assert np.array_equal(a.features, b.features)

    def test_single_class_draw_errors_after_retries(self):
        X = np.arange(40, dtype=float).reshape(20, 2)
        ds = Dataset(X, np.zeros(20, dtype=int), ("a", "b"))
        with pytest.raises(DatasetError, match="two-class"):
            subsample(ds, 0.5, seed=0)

    def test_invalid_fraction(self):
        ds = generate_classification_dataset(n=20, F=2, informative=1, seed=5)
        with pytest.raises(ValueError):
            subsample(ds, 0.0, seed=0)
        with pytest.raises(ValueError):
            subsample(ds, 1.1, seed=0)


class TestBundledDataset:
    def test_loads_with_expected_shape(self):
        ds = load_csv_dataset(bundled_dataset_path())
        assert ds.n == 2000
        assert ds.F == 20
        assert set(np.unique(ds.labels)) == {0, 1}
