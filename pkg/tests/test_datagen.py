import numpy as np
import pytest
from scipy import stats

from npmle_lab.datagen import Dataset, InputLaw, load_dataset, one_hot, sample_dataset, save_dataset
from npmle_lab.errors import ArgumentError, ParseError
from npmle_lab.models import build_model


def test_point_mass_labels():
    m = build_model("constant", {"probs": [1.0, 0.0, 0.0]})
    ds = sample_dataset(m, 200, seed=3)
    assert np.all(ds.labels == 0)


def test_uniform_frequencies():
    K, n = 4, 100_000
    m = build_model("constant", {"probs": [0.25] * 4})
    ds = sample_dataset(m, n, seed=11)
    freq = np.bincount(ds.labels, minlength=K) / n
    sigma = np.sqrt(0.25 * 0.75 / n)
    assert np.all(np.abs(freq - 0.25) <= 4 * sigma)


def test_determinism():
    m = build_model("stock-gam")
    a, b = sample_dataset(m, 500, seed=9), sample_dataset(m, 500, seed=9)
    assert np.array_equal(a.X, b.X) and np.array_equal(a.Y, b.Y)
    c = sample_dataset(m, 500, seed=10)
    assert not np.array_equal(a.X, c.X)


def test_chi_square_goodness_of_fit():
    m = build_model("stock-gam")
    law = InputLaw("uniform", 1)
    ds = sample_dataset(m, 100_000, law, seed=5)
    bins = 20
    edges = np.linspace(0, 1, bins + 1)
    which = np.clip(np.digitize(ds.X[:, 0], edges) - 1, 0, bins - 1)
    fine = np.linspace(0, 1, 20001)[:, None]
    eta1 = m(fine)[:, 0]
    fine_bin = np.clip(np.digitize(fine[:, 0], edges) - 1, 0, bins - 1)
    chi2 = 0.0
    for b in range(bins):
        sel = which == b
        nb = sel.sum()
        p = eta1[fine_bin == b].mean()
        obs = (ds.labels[sel] == 0).sum()
        chi2 += (obs - nb * p) ** 2 / (nb * p * (1 - p))
    assert stats.chi2.sf(chi2, bins) > 1e-4


def test_mixture_law():
    law = InputLaw("mixture", 2)
    assert law.gamma == 0.5 and law.Gamma == pytest.approx(0.5 + 0.5 * 1.5**2)
    X = law.sample(np.random.default_rng(0), 50_000)
    assert X.min() >= 0 and X.max() <= 1
    # mean of each coordinate is 1/2 by symmetry, variance between uniform and Beta(2,2)
    assert np.allclose(X.mean(axis=0), 0.5, atol=0.01)
    grid = (np.arange(200) + 0.5) / 200
    g = np.stack(np.meshgrid(grid, grid), -1).reshape(-1, 2)
    assert law.density(g).mean() == pytest.approx(1.0, abs=1e-4)


def test_round_trip(tmp_path):
    m = build_model("stock-gam")
    ds = sample_dataset(m, 300, seed=2)
    path = tmp_path / "d.csv"
    save_dataset(ds, path)
    raw = path.read_bytes()
    assert b"\r\n" not in raw
    back = load_dataset(path)
    assert back == ds
    assert np.array_equal(back.X, ds.X)


def _write(tmp_path, text):
    p = tmp_path / "bad.csv"
    p.write_text(text, encoding="utf-8")
    return p


def test_parse_errors(tmp_path):
    m = build_model("stock-gam")
    ds = sample_dataset(m, 5, seed=2)
    good = tmp_path / "g.csv"
    save_dataset(ds, good)
    lines = good.read_text().splitlines()
    with pytest.raises(ParseError, match="line"):
        load_dataset(_write(tmp_path, "\n".join(lines[:-2]) + "\n"))
    bad_label = lines[:-1] + [lines[-1].rsplit(",", 1)[0] + ",3"]
    with pytest.raises(ParseError, match="line"):
        load_dataset(_write(tmp_path, "\n".join(bad_label) + "\n"), K=2)
    bad_x = lines[:-1] + ["1.5,1"]
    with pytest.raises(ParseError):
        load_dataset(_write(tmp_path, "\n".join(bad_x) + "\n"))
    with pytest.raises(ParseError):
        load_dataset(_write(tmp_path, "a,b\n"))


def test_dataset_invariants():
    with pytest.raises(Exception):
        Dataset(np.array([[1.5]]), one_hot(np.array([0]), 2), 0, "")
    with pytest.raises(ArgumentError):
        sample_dataset(build_model("stock-gam"), 0)
