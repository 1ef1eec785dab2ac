import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fohybrid.data import (
    NO_RESIDUAL,
    Dataset,
    ResidualSpec,
    Schema,
    SplitSpec,
    fit_standardizer,
    generate_synthetic,
    load_dataset,
    load_points,
    split,
    split_indices,
    unit_factor,
    write_dataset,
)
from fohybrid.errors import (
    ConfigError,
    DegenerateFeatureError,
    ParseError,
    SchemaError,
    ValidationError,
)
from fohybrid.physics import physical_flux
from fohybrid.point import FEATURES, OperatingPoint, validate_features


def test_lmh_conversion():
    assert 36 * unit_factor("jw", "LMH") == pytest.approx(1e-5, rel=1e-15)
    assert unit_factor("cf_in", "mM") == 1e-3
    assert unit_factor("t_psl", "um") == 1e-6
    with pytest.raises(SchemaError):
        unit_factor("A", "furlongs")


def test_csv_round_trip_is_exact(tmp_path):
    d = generate_synthetic(50, seed=3)
    path = tmp_path / "d.csv"
    write_dataset(d, path)
    back = load_dataset(path)
    assert np.array_equal(back.X, d.X)
    assert np.array_equal(back.jw_measured, d.jw_measured)
    assert back.provenance == "experimental"


def test_full_size_round_trip(tmp_path):
    d = generate_synthetic(2974, seed=0)
    write_dataset(d, tmp_path / "d.csv")
    back = load_dataset(tmp_path / "d.csv")
    assert len(back) == 2974 and back.provenance == "experimental"


def test_schema_renames_and_units(tmp_path):
    path = tmp_path / "lab.csv"
    header = ["Cf (mM)"] + list(FEATURES[1:]) + ["Jw (LMH)"]
    row = [10.0, 1.0, 0.15, 0.15, 2e-12, 0.6, 2.0, 1e-4, 0.1, 2e-3, 36.0]
    path.write_text(",".join(header) + "\n" + ",".join(map(str, row)) + "\n")
    schema = Schema(columns={"cf_in": "Cf (mM)", "jw": "Jw (LMH)"},
                    units={"cf_in": "mM", "jw": "LMH"})
    d = load_dataset(path, schema)
    assert d.X[0, 0] == pytest.approx(0.01)
    assert d.jw_measured[0] == pytest.approx(1e-5)
    pts = load_points(path, schema)
    assert pts.shape == (1, 10)


def test_missing_column_and_bad_cells(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("cf_in,cd_in\n0.1,1\n")
    with pytest.raises(SchemaError, match="uf_in"):
        load_dataset(p)
    cols = list(FEATURES) + ["jw"]
    p.write_text(",".join(cols) + "\n" + ",".join(["0.01"] * 5 + ["abc"] + ["1"] * 5) + "\n")
    with pytest.raises(ParseError, match="row 0"):
        load_dataset(p)
    p.write_text("")
    with pytest.raises(SchemaError):
        load_dataset(p)


def test_validation_names_row_and_feature():
    X = np.tile(OperatingPoint(0.01, 1.0, 0.15, 0.15, 2e-12, 0.6, 2.0, 1e-4, 0.1, 2e-3).to_array(), (3, 1))
    X[2, FEATURES.index("eps_psl")] = 1.5
    with pytest.raises(ValidationError, match=r"row 2.*eps_psl"):
        validate_features(X)
    with pytest.raises(ValidationError):
        Dataset(X[:2], [1e-6, -1e-6])


def test_split_sizes_and_determinism():
    d = generate_synthetic(2974, seed=0)
    train, test = split(d, SplitSpec(n_train=120, seed=0))
    assert (len(train), len(test)) == (120, 2854)
    a = split_indices(2974, SplitSpec(seed=7))
    b = split_indices(2974, SplitSpec(seed=7))
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    first = split_indices(10, SplitSpec(n_train=3, mode="deterministic-first-k"))
    assert list(first[0]) == [0, 1, 2]
    with pytest.raises(ConfigError):
        split_indices(10, SplitSpec(n_train=10))


def test_standardizer_round_trip_and_degenerate():
    d = generate_synthetic(30, seed=1)
    s = fit_standardizer(d)
    Z = s.standardize(d.X)
    assert np.allclose(Z.mean(axis=0), 0, atol=1e-12)
    assert np.allclose(s.destandardize(Z), d.X, rtol=1e-14)
    X = d.X.copy()
    X[:, FEATURES.index("L_x")] = 0.1
    with pytest.raises(DegenerateFeatureError, match="L_x"):
        fit_standardizer(Dataset(X, d.jw_measured))


def test_generation_is_seeded_and_noise_free_equals_physics():
    a = generate_synthetic(40, seed=5)
    b = generate_synthetic(40, seed=5)
    assert np.array_equal(a.X, b.X) and np.array_equal(a.jw_measured, b.jw_measured)
    assert a.provenance == "synthetic(seed=5)"
    clean = generate_synthetic(40, seed=5, residual_spec=NO_RESIDUAL, noise_cv=0.0)
    assert np.allclose(clean.jw_measured, physical_flux(clean.X), rtol=1e-15)


def test_residual_amplitude_limit():
    with pytest.raises(ConfigError):
        ResidualSpec(amplitude=0.3)
    with pytest.raises(ConfigError):
        generate_synthetic(10, noise_cv=-0.1)


def test_default_residual_is_visible():
    d = generate_synthetic(500, seed=2)
    rel = np.abs(d.jw_measured - physical_flux(d.X)) / d.jw_measured
    assert 100 * rel.mean() >= 3.0


@settings(max_examples=25, deadline=None)
@given(n=st.integers(3, 60), k=st.integers(1, 50), seed=st.integers(0, 2**32 - 1))
def test_split_is_partition(n, k, seed):
    k = min(k, n - 1)
    tr, te = split_indices(n, SplitSpec(n_train=k, seed=seed))
    assert len(tr) == k
    assert sorted(np.concatenate([tr, te]).tolist()) == list(range(n))
