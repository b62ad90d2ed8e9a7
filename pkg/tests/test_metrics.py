import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from npmle_lab.datagen import InputLaw
from npmle_lab.errors import ArgumentError, DataError
from npmle_lab.metrics import (
    as_simplex, bernstein_seminorm_sq, c_gamma, exp_moment_slack, expectation, gp_function,
    hellinger_sq, kl, midpoint, risk, risk_kl, risk_truncated_kl, truncated_kl,
)
from npmle_lab.models import build_model

from .conftest import random_simplex

mp.mp.dps = 40


def const(p):
    p = np.asarray(p, dtype=float)
    return lambda X: np.tile(p, (np.atleast_2d(X).shape[0], 1))


def test_hellinger_examples():
    assert hellinger_sq([0.3, 0.7], [0.3, 0.7]) == 0.0
    assert hellinger_sq([1, 0], [0, 1]) == 1.0
    want = mp.mpf(1) / 2 * ((mp.sqrt("0.5") - mp.sqrt("0.25")) ** 2 + (mp.sqrt("0.5") - mp.sqrt("0.75")) ** 2)
    assert hellinger_sq([0.5, 0.5], [0.25, 0.75]) == pytest.approx(float(want), rel=1e-14)


def test_hellinger_dimension_mismatch():
    with pytest.raises(ArgumentError):
        hellinger_sq([0.5, 0.5], [0.2, 0.3, 0.5])


def test_kl_examples():
    assert kl([0.4, 0.6], [0.4, 0.6]) == 0.0
    assert kl([1, 0], [0, 1]) == math.inf
    want = 0.5 * mp.log(2) + 0.5 * mp.log(mp.mpf(2) / 3)
    assert kl([0.5, 0.5], [0.25, 0.75]) == pytest.approx(float(want), rel=1e-14)


def test_truncated_kl_examples():
    assert truncated_kl([0.2, 0.8], [0.2, 0.8], 3.0) == 0.0
    assert truncated_kl([1, 0], [0.5, 0.5], 0.5) == pytest.approx(0.5)
    assert truncated_kl([1, 0], [0.5, 0.5], 1.0) == pytest.approx(math.log(2))
    assert truncated_kl([1, 0], [0, 1], 10.0) == 10.0
    with pytest.raises(ArgumentError):
        truncated_kl([1, 0], [0, 1], 0.0)


def test_off_simplex_rejected():
    with pytest.raises(DataError):
        as_simplex([0.5, 0.6])
    with pytest.raises(DataError):
        as_simplex([1.2, -0.2])
    assert np.all(as_simplex([1 + 1e-12, -1e-12]) >= 0)


@pytest.mark.parametrize("K", [2, 5, 10])
def test_divergence_inequalities_bulk(rng, K):
    p, q = random_simplex(rng, 20000, K), random_simplex(rng, 20000, K)
    h, k = hellinger_sq(p, q), kl(p, q)
    assert np.all(2 * h <= k + 1e-12)
    assert np.all(truncated_kl(p, q, 2.0) <= k + 1e-12)
    assert np.all((h >= 0) & (h <= 1))
    assert np.allclose(h, hellinger_sq(q, p), atol=1e-15)
    assert np.all(h <= 16 * hellinger_sq(0.5 * (p + q), q) + 1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2**31 - 1), st.floats(0.01, 5), st.floats(0.01, 5))
def test_truncated_kl_monotone_in_B(K, seed, b1, b2):
    r = np.random.default_rng(seed)
    p, q = random_simplex(r, 50, K), random_simplex(r, 50, K)
    lo, hi = sorted((b1, b2))
    assert np.all(truncated_kl(p, q, lo) <= truncated_kl(p, q, hi) + 1e-15)


def test_risk_constants():
    law = InputLaw("uniform", 2)
    e, p = const([0.5, 0.5]), const([0.25, 0.75])
    assert risk(e, e, law).value == 0.0
    assert risk(e, p, law).value == pytest.approx(hellinger_sq([0.5, 0.5], [0.25, 0.75]), rel=1e-12)
    assert risk(const([1, 0]), const([0, 1]), law).value == pytest.approx(1.0)
    assert risk_kl(e, p, law).value == pytest.approx(kl([0.5, 0.5], [0.25, 0.75]), rel=1e-12)
    assert risk_truncated_kl(e, p, 0.1, law).value == pytest.approx(truncated_kl([0.5, 0.5], [0.25, 0.75], 0.1))


def test_risk_truncated_below_kl(rng):
    law = InputLaw("uniform", 1)
    for _ in range(100):
        a, b = random_simplex(rng, 2, 3, spiky=False)
        assert risk_truncated_kl(const(a), const(b), 1.0, law).value <= risk_kl(const(a), const(b), law).value + 1e-12


def test_risk_argument_errors():
    law = InputLaw("uniform", 1)
    e = const([0.5, 0.5])
    with pytest.raises(ArgumentError):
        risk(e, e, law, budget=0)
    with pytest.raises(DataError):
        risk(e, const([0.7, 0.7]), law)


def test_risk_mc_deterministic_and_matches_quadrature():
    model = build_model("stock-gam", {"beta": 1.0})
    law = InputLaw("mixture", 1)
    other = const([0.3, 0.7])
    q = risk(model, other, law, method="quadrature")
    a = risk(model, other, law, method="mc", budget=20000, seed=4)
    b = risk(model, other, law, method="mc", budget=20000, seed=4)
    assert a.value == b.value
    assert abs(a.value - q.value) <= 3 * math.hypot(a.error, q.error)


def test_quadrature_vs_mc_2d():
    law = InputLaw("uniform", 2)
    fn = lambda X: np.sin(3 * X[:, 0]) * X[:, 1] ** 2
    q = expectation(fn, law, method="quadrature")
    m = expectation(fn, law, method="mc", budget=50000, seed=1)
    assert abs(q.value - m.value) <= 3 * math.hypot(q.error, m.error)


def test_gp_function_properties(rng):
    X = np.zeros((1, 1))
    g = gp_function(const([1, 0]), const([0.5, 0.5]))
    assert g(X)[0, 0] == pytest.approx(0.5 * math.log(1.5))
    assert np.all(gp_function(const([0.2, 0.8]), const([0.2, 0.8]))(X) == 0)
    low = math.inf
    for _ in range(200):
        p, pt = random_simplex(rng, 2, 4)
        low = min(low, float(gp_function(const(p), const(pt))(np.zeros((500, 1))).min()))
    assert low >= -0.5 * math.log(2) - 1e-12


def test_bernstein_constant_and_zero():
    law = InputLaw("uniform", 1)
    eta = const([0.3, 0.7])
    zero = lambda X: np.zeros((len(X), 2))
    assert bernstein_seminorm_sq(zero, 1.0, eta, law).value == 0.0
    c, M = 0.7, 2.0
    g = lambda X: np.full((len(X), 2), c)
    assert bernstein_seminorm_sq(g, M, eta, law).value == pytest.approx(2 * M**2 * (math.exp(c / M) - 1 - c / M), rel=1e-12)
    pt = const([0.4, 0.6])
    assert bernstein_seminorm_sq(gp_function(pt, pt), 1.0, eta, law).value == 0.0
    bad = lambda X: np.full((len(X), 2), np.nan)
    with pytest.raises(DataError):
        bernstein_seminorm_sq(bad, 1.0, eta, law)


def test_bernstein_vs_hellinger_lemma(rng):
    law = InputLaw("uniform", 1)
    for _ in range(50):
        eta, p, pt = random_simplex(rng, 3, 3, spiky=False)
        c0_sq = float(np.max(eta / pt))
        lhs = bernstein_seminorm_sq(gp_function(const(p), const(pt)), 1.0, const(eta), law).value
        rhs = 16 * c0_sq * risk(midpoint(const(p), const(pt)), const(pt), law).value
        assert lhs <= rhs + 1e-12


@pytest.mark.parametrize("Gamma", [0.1, math.log(2), 1.0])
def test_exp_moment_inequality(Gamma):
    x = np.linspace(-Gamma, 10, 10_000)
    assert exp_moment_slack(x, Gamma).min() >= -1e-12
    assert c_gamma(Gamma) == pytest.approx(2 * (math.exp(Gamma) - 1 - Gamma) / (math.exp(-Gamma) - 1) ** 2)
