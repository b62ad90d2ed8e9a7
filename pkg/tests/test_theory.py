import json
import math
from pathlib import Path

import numpy as np
import pytest

from npmle_lab.errors import ArgumentError, AssumptionViolation
from npmle_lab.models import CompositionSpec, build_model, effective_smoothness, rate_phi_n
from npmle_lab.theory import (
    A_constant, assumption_ratio, besov_effective, besov_rate, bracketing_from_covering, covering_bound_dnn,
    critical_radius, entropy_integral_bound, evaluate, k_rate, oracle_rhs, svb_rate, theory_pipeline,
)

ORACLES = json.loads((Path(__file__).parent / "oracles" / "theory_oracles.json").read_text())


def rel(a, b):
    return abs(a - b) / abs(b)


def test_covering_examples():
    assert covering_bound_dnn(0.1, 2, 5, 1, 10) == pytest.approx(40 * math.log(6) + 10 * math.log(20), rel=1e-14)
    assert covering_bound_dnn(0.1, 2, 5, 0.3, 10) == covering_bound_dnn(0.1, 2, 5, 1.0, 10)
    base = covering_bound_dnn(0.1, 2, 5, 2, 10)
    assert covering_bound_dnn(0.1, 2, 5, 2, 11) >= base
    assert covering_bound_dnn(0.1, 3, 5, 2, 10) >= base
    assert covering_bound_dnn(0.1, 2, 6, 2, 10) >= base
    assert covering_bound_dnn(0.1, 2, 5, 3, 10) >= base
    assert covering_bound_dnn(0.2, 2, 5, 2, 10) <= base
    with pytest.raises(ArgumentError):
        covering_bound_dnn(0.0, 2, 5, 1, 10)


def test_bracketing():
    cov = lambda d: covering_bound_dnn(d, 2, 5, 1, 10)
    assert bracketing_from_covering(0.1, 2, 1.0, cov) == cov(0.05)
    assert bracketing_from_covering(0.1, 2, 4.0, cov) == cov(0.1 / (2 * 2.0))
    assert bracketing_from_covering(0.1, 2, 8.0, cov) >= bracketing_from_covering(0.1, 2, 2.0, cov)


def test_entropy_integral():
    a = 1.0
    near = entropy_integral_bound(a * (1 - 1e-12), 10, 2, a)
    assert near == pytest.approx(a * math.sqrt(40) * math.sqrt(math.pi), rel=1e-5)
    for delta in np.linspace(0.01, 0.99, 50):
        assert entropy_integral_bound(delta, 1, 1, 1.0) >= delta
    with pytest.raises(ArgumentError):
        entropy_integral_bound(1.0, 10, 2, 1.0)


def test_critical_radius_shape():
    assert critical_radius(100, 5, 10, 10**6) < critical_radius(100, 5, 10, 10**4)
    n = 10**4
    assert critical_radius(200, 5, 10, n) > critical_radius(100, 5, 10, n)
    assert critical_radius(100, 6, 10, n) > critical_radius(100, 5, 10, n)
    with pytest.raises(ArgumentError):
        critical_radius(1, 1, 0.01, 4)


def test_oracle_rhs_examples():
    assert oracle_rhs(0, 0, 0, 10, 0) == 0
    assert oracle_rhs(1, 0.1, 0.01, 1000, 1) == pytest.approx(20.561, rel=1e-12)
    a, b = oracle_rhs(2, 0.1, 0.0, 100), oracle_rhs(2, 0.1, 0.5, 100)
    assert (b - a) / 0.5 == pytest.approx(514 * 3)


def test_assumption_ratio():
    model = build_model("stock-gam")
    assert assumption_ratio(model, model) == pytest.approx(1.0)
    eta = build_model("constant", {"probs": [0.9, 0.1]})
    half = build_model("constant", {"probs": [0.5, 0.5]})
    assert assumption_ratio(eta, half) == pytest.approx(1.8)
    hole = build_model("constant", {"probs": [1.0, 0.0]})
    with pytest.raises(AssumptionViolation) as exc:
        assumption_ratio(eta, hole)
    assert exc.value.where and exc.value.where[0][1] == 1


def test_A_constant_examples():
    assert A_constant(2, 1, 1, 1, 2, [1.0], [1]) == pytest.approx(8.0)
    k2 = A_constant(2, 3, 10, 4, 64, [1.0], [1])
    k3 = A_constant(3, 3, 10, 4, 64, [1.0], [1])
    assert k3 / k2 == pytest.approx(2 * math.sqrt(3) / math.sqrt(2))
    assert A_constant(2, 3, 10, 4, 128, [1.0], [1]) > k2
    with pytest.raises(ArgumentError):
        A_constant(2, 3, 10, 4, 1, [1.0], [1])


def spec_of(beta, t):
    return CompositionSpec(len(beta) - 1, [max(t)] * (len(beta) + 1), t, beta, 1.0, 2)


def test_rate_variants():
    spec = spec_of([2.0, 0.5, 3.0], [2, 1, 1])
    assert svb_rate(0.0, spec, 4096) == pytest.approx(rate_phi_n(spec, 4096)[0])
    bs = effective_smoothness(spec)
    big = svb_rate(1e9, spec, 4096)
    assert big == pytest.approx(4096.0**-1, rel=1e-3)
    assert k_rate(spec, 4096, K=1) == pytest.approx(rate_phi_n(spec, 4096)[0])
    with pytest.raises(ArgumentError):
        svb_rate(-1, spec, 100)
    assert len(bs) == 3


def test_besov():
    assert besov_effective([1, 1])[0] == pytest.approx(0.5)
    bt, bb = besov_effective([2, 2])
    assert bt == pytest.approx(1.0) and bb == 2.0
    assert besov_rate(bt, 10_000) == pytest.approx(0.01)
    assert besov_effective([1.7])[0] == pytest.approx(1.7)


def check_oracles():
    """(name, computed, expected) for every frozen oracle case."""
    from npmle_lab.minimax import grid_m_n

    out = []
    for c in ORACLES["covering"]:
        a = c["args"]
        out.append(("covering", covering_bound_dnn(a["delta"], a["L"], a["m_inf"], a["B"], a["s"]), c["value"]))
    for c in ORACLES["entropy_integral"]:
        a = c["args"]
        out.append(("entropy_integral", entropy_integral_bound(a["delta"], a["s"], a["L"], a["A"]), c["value"]))
    for c in ORACLES["critical_radius"]:
        a = c["args"]
        out.append(("critical_radius", critical_radius(a["s"], a["L"], a["A"], a["n"]), c["value"]))
    for c in ORACLES["oracle_rhs"]:
        a = c["args"]
        out.append(("oracle_rhs", oracle_rhs(a["c0_sq"], a["delta_n"], a["approx_risk"], a["n"], a["c"]), c["value"]))
    for c in ORACLES["A_constant"]:
        a = c["args"]
        out.append(("A_constant", A_constant(a["K"], a["B"], a["m_inf"], a["L"], a["N"], a["beta_star"], a["t"]), c["value"]))
    for c in ORACLES["m_n"]:
        a = c["args"]
        out.append(("m_n", grid_m_n(a["rho"], a["K"], a["n"], a["beta_dstar"], a["t_star"]), c["value"]))
    for c in ORACLES["beta_star"]:
        for got, want in zip(effective_smoothness(c["args"]["beta"]), c["value"]):
            out.append(("beta_star", got, want))
    for c in ORACLES["phi_n"]:
        a = c["args"]
        out.append(("phi_n", rate_phi_n(spec_of(a["beta"], a["t"]), a["n"])[0], c["value"]))
    for c in ORACLES["besov"]:
        out.append(("besov", besov_effective(c["args"]["beta"])[0], c["value"]))
    return out


def test_frozen_oracles():
    for name, got, want in check_oracles():
        assert rel(got, want) <= 1e-9, name


def test_pipeline_slope():
    spec = spec_of([1.0], [1])
    ns = [2**k for k in range(8, 21)]
    y = [math.log(theory_pipeline(spec, n)["rhs"] / math.log(n) ** 3) for n in ns]
    slope = np.polyfit(np.log(ns), y, 1)[0]
    assert abs(slope - (-0.5)) <= 0.05


def test_evaluate_dispatch():
    assert evaluate("covering", {"delta": 0.1, "L": 2, "m_inf": 5, "B": 1, "s": 10}) == covering_bound_dnn(0.1, 2, 5, 1, 10)
    with pytest.raises(ArgumentError):
        evaluate("nope", {})
    with pytest.raises(ArgumentError):
        evaluate("covering", {"delta": 0.1})
