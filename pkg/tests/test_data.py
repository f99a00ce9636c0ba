import numpy as np
import pytest

from stablesqf.data import (
    Dataset,
    Series,
    SynthSpec,
    gen_synthetic,
    load_dataset,
    save_dataset,
    series_stats,
    standardize,
    destandardize,
)


def test_series_coerces_and_validates():
    s = Series("a", [1, 2, 3], period=4)
    assert s.values.dtype == float
    with pytest.raises(ValueError):
        Series("a", [1.0], period=0)


def test_dataset_container():
    ds = Dataset([Series("a", [1.0]), Series("b", [2.0])])
    assert len(ds) == 2
    assert [s.sid for s in ds] == ["a", "b"]
    assert ds[1].sid == "b"
    assert ds.by_id("a").values[0] == 1.0
    with pytest.raises(KeyError):
        ds.by_id("zzz")


def test_roundtrip(tmp_path):
    ds = gen_synthetic(SynthSpec(n_series=3, length=25, period=12), seed=7)
    p = tmp_path / "panel.csv"
    save_dataset(ds, p)
    back = load_dataset(p, period=12)
    assert len(back) == 3
    for a, b in zip(ds, back):
        assert a.sid == b.sid
        assert b.period == 12
        np.testing.assert_array_equal(a.values, b.values)


def test_save_is_byte_stable(tmp_path):
    ds = gen_synthetic(SynthSpec(n_series=2, length=10), seed=0)
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    save_dataset(ds, p1)
    save_dataset(gen_synthetic(SynthSpec(n_series=2, length=10), seed=0), p2)
    assert p1.read_bytes() == p2.read_bytes()
    assert b"\r" not in p1.read_bytes()


def write(tmp_path, text):
    p = tmp_path / "bad.csv"
    p.write_text(text)
    return p


def test_loader_rejects_bad_header(tmp_path):
    p = write(tmp_path, "id,t,y\na,0,1.0\n")
    with pytest.raises(ValueError, match="expected header"):
        load_dataset(p)


def test_loader_reports_line_numbers(tmp_path):
    head = "series_id,time_index,value\n"
    cases = [
        (head + "a,0,1.0\na,1\n", r"bad\.csv:3: expected 3 columns"),
        (head + "a,zero,1.0\n", r"bad\.csv:2: time_index 'zero'"),
        (head + "a,0,1.0\na,1,much\n", r"bad\.csv:3: value 'much'"),
        (head + "a,0,nan\n", r"bad\.csv:2: non-finite"),
        (head + "a,0,1.0\na,1,1.5\na,3,2.0\n", r"bad\.csv:4: .*jumps from time_index 1 to 3"),
    ]
    for text, pattern in cases:
        with pytest.raises(ValueError, match=pattern):
            load_dataset(write(tmp_path, text))


def test_loader_rejects_empty(tmp_path):
    with pytest.raises(ValueError, match="no data rows"):
        load_dataset(write(tmp_path, "series_id,time_index,value\n"))


def test_loader_allows_interleaved_series(tmp_path):
    p = write(tmp_path, "series_id,time_index,value\na,0,1.0\nb,0,5.0\na,1,2.0\nb,1,6.0\n")
    ds = load_dataset(p)
    np.testing.assert_array_equal(ds.by_id("a").values, [1.0, 2.0])
    np.testing.assert_array_equal(ds.by_id("b").values, [5.0, 6.0])


def test_synthetic_shape_and_determinism():
    spec = SynthSpec(n_series=5, length=40, period=12)
    ds = gen_synthetic(spec, seed=3)
    assert len(ds) == 5
    for s in ds:
        assert s.values.shape == (40,)
        assert np.all(s.values >= 0.0)
        assert s.period == 12
    ds2 = gen_synthetic(spec, seed=3)
    for a, b in zip(ds, ds2):
        np.testing.assert_array_equal(a.values, b.values)
    ds3 = gen_synthetic(spec, seed=4)
    assert not np.array_equal(ds[0].values, ds3[0].values)


def test_synthetic_has_seasonal_structure():
    # with noise off, values repeat with the period once the trend is removed
    spec = SynthSpec(n_series=1, length=48, period=12, trend_scale=0.0,
                     noise_scale=0.0, season_scale=4.0)
    y = gen_synthetic(spec, seed=0)[0].values
    np.testing.assert_allclose(y[:36], y[12:], atol=1e-9)
    assert y.std() > 0.5


def test_zero_inflation_rate():
    spec = SynthSpec(n_series=50, length=200, zero_rate=0.5, level_range=(20.0, 50.0))
    ds = gen_synthetic(spec, seed=1)
    vals = np.concatenate([s.values for s in ds])
    zero_frac = np.mean(vals == 0.0)
    assert zero_frac == pytest.approx(0.5, abs=0.02)
    # average interval between nonzero observations ~ 1/(1-rate) = 2
    gaps = []
    for s in ds:
        nz = np.flatnonzero(s.values > 0)
        if nz.size > 1:
            gaps.append(np.diff(nz).mean())
    assert np.mean(gaps) == pytest.approx(2.0, rel=0.1)


def test_series_stats_and_standardize_roundtrip():
    y = np.array([2.0, 4.0, 6.0, 100.0])
    loc, scale = series_stats(y, exclude_last=1)
    assert loc == pytest.approx(4.0)
    assert scale == pytest.approx(np.std([2.0, 4.0, 6.0]))
    z = standardize(y, loc, scale)
    np.testing.assert_allclose(destandardize(z, loc, scale), y)
    # constant series hits the floor instead of dividing by zero
    _, s0 = series_stats(np.full(5, 3.0))
    assert s0 == 1e-8
    with pytest.raises(ValueError):
        series_stats(np.array([1.0, 2.0]), exclude_last=2)
