import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from orlicz_lab import verify as V
from orlicz_lab.errors import DomainTooSmall, InvalidInput
from orlicz_lab.orlicz_core import (BUILTINS, E, E_E, GaugeFamilySpec, closed_form_F_sjolin,
                                    orlicz)
from orlicz_lab.sampled import constant, indicator, meanzero

FAMILY = [2.0**-k for k in range(6, 13)]


def spike(delta, width=4.0, cells=16):
    """Indicator on [-width, width] with ``cells`` cells inside the support."""
    n = int(round(2 * width * cells / (2 * delta)))
    return indicator(delta, n, (-width, width))


# ---- verdict plumbing ------------------------------------------------------------------

def test_verdict_json_round_trip_and_field_order():
    v = V.sandwich_check(V.random_pairs(20, seed=1))
    d = v.to_dict()
    assert list(d) == ["name", "passed", "empirical_constant", "witnesses", "params"]
    assert all(list(w) == ["x", "lhs", "rhs"] for w in d["witnesses"])
    back = V.CheckVerdict.from_json(v.to_json())
    assert back.to_json() == v.to_json()


def test_checkers_are_deterministic():
    a = V.sandwich_check(V.random_pairs(50, seed=4)).to_json()
    b = V.sandwich_check(V.random_pairs(50, seed=4)).to_json()
    assert a == b


# ---- weak type ------------------------------------------------------------------------------

def test_weak_upper_zero_function():
    v = V.weak_type_upper(constant(0.0, 256), alphas=[1.0, 10.0])
    assert v.passed and v.empirical_constant == 0.0


def test_weak_upper_family_stable():
    consts = [V.weak_type_upper(spike(d)).empirical_constant for d in FAMILY]
    assert all(math.isfinite(c) for c in consts)
    assert max(consts) / min(consts) <= 2


def test_weak_upper_against_oracle_distribution():
    # lambda(a) = 2 max(1/a - delta, delta) from the closed-form maximal function
    d = 2.0**-8
    f = spike(d)
    alphas = V.default_alphas(f)
    v = V.weak_type_upper(f, alphas)
    ratios = np.array(v.params["ratios"])
    oracle = 2 * np.maximum(1 / alphas - d, d) / (2 / alphas)
    np.testing.assert_allclose(ratios, oracle, atol=4 * f.h * alphas.max() / 2)


@pytest.mark.parametrize("c", [0.5, 3.0, 17.0])
def test_weak_upper_invariant_under_scaling(c):
    f = spike(2.0**-7)
    alphas = np.geomspace(20, 100, 9)
    a = V.weak_type_upper(f, alphas).empirical_constant
    b = V.weak_type_upper(f.scaled(c), c * alphas).empirical_constant
    assert b == pytest.approx(a, rel=1e-12)


def test_weak_lower_family_bounded_below():
    consts = [V.weak_type_lower(spike(d)).empirical_constant for d in FAMILY]
    assert min(consts) >= 0.1


def test_weak_lower_vacuous_and_scaling():
    f = spike(2.0**-8)
    v = V.weak_type_lower(f, alphas=[2e3, 5e3])
    assert v.passed and v.params["tested"] == 0
    a = V.weak_type_lower(f).empirical_constant
    b = V.weak_type_lower(f.scaled(2.0)).empirical_constant
    assert 0.5 <= a / b <= 2


def test_weak_lower_errors():
    with pytest.raises(DomainTooSmall):
        V.weak_type_lower(indicator(0.1, 1024, (-2, 2)))
    with pytest.raises(InvalidInput):
        V.weak_type_lower(meanzero(0.1, 1024, (-4, 4)))
    with pytest.raises(InvalidInput):
        V.weak_type_lower(spike(2.0**-8), alphas=[1.0])


# ---- away / reflection ------------------------------------------------------------------------

def test_away_bound_indicator():
    d = 2.0**-8
    f = spike(d)
    v = V.away_bound(f, [3.0])
    # max of M f outside [-3, 3] is 1/(3 + delta) (first cell centre just beyond 3)
    x = v.witnesses[0]["x"]
    assert v.witnesses[0]["lhs"] == pytest.approx(1 / (abs(x) + d), rel=1e-12)
    assert v.empirical_constant == pytest.approx(v.witnesses[0]["lhs"] * 2 * 2 / 2, rel=1e-12)
    assert v.passed


def test_away_bound_zero_scaling_and_uniformity():
    assert V.away_bound(constant(0.0, 512, (-4, 4)), [3.0]).empirical_constant == 0.0
    f = spike(2.0**-8)
    a = V.away_bound(f, [2.5, 3.0, 3.5])
    b = V.away_bound(f.scaled(2.0), [2.5, 3.0, 3.5])
    assert a.empirical_constant == pytest.approx(b.empirical_constant, rel=1e-12)
    assert max(a.params["per_r"]) / min(a.params["per_r"]) < 2


def test_away_bound_domain_too_small():
    with pytest.raises(DomainTooSmall):
        V.away_bound(indicator(0.1, 1024, (-2, 2)), [3.0])


def test_reflection_indicator():
    f = indicator(0.25, 4096, (-2, 2))
    v = V.reflection_bound(f)
    assert v.passed
    # near |x| = 1 the point and its mirror almost coincide
    x = f.x[(f.x > 1) & (f.x < 1.01)][0]
    from orlicz_lab.maximal import analytic_maximal_indicator as A
    ratio = A(0.25, x) / A(0.25, 1 / x)
    assert ratio == pytest.approx(1.0, abs=0.02)
    assert v.empirical_constant <= 1.0 + 1e-9
    assert V.reflection_bound(f.scaled(2.0)).empirical_constant == pytest.approx(
        v.empirical_constant, rel=1e-12)


def test_reflection_zero_is_vacuous():
    v = V.reflection_bound(constant(0.0, 512, (-2, 2)))
    assert v.passed and v.empirical_constant == 0.0


# ---- Stein criterion -------------------------------------------------------------------------

def test_stein_below_alpha_is_zero():
    f = indicator(0.5, 256, (-2, 2))
    crit, func = V.stein_criterion(f, GaugeFamilySpec(BUILTINS["psi0"]), alpha0=E_E)
    assert crit == 0.0 and func > 0


def test_stein_family_grows_together():
    fam = GaugeFamilySpec(BUILTINS["psi0"])
    vals = [V.stein_criterion(spike(d, 2.0), fam, E_E) for d in FAMILY]
    crit = [c for c, _ in vals]
    func = [g for _, g in vals]
    assert np.all(np.diff(crit) > 0) and np.all(np.diff(func) > 0)
    r = np.array(func) / np.array(crit)
    assert r.max() / r.min() <= 4


def test_stein_sjolin_matches_closed_form():
    fam = GaugeFamilySpec(BUILTINS["sjolin"], "none")
    for d in (2.0**-8, 2.0**-12):
        crit, _ = V.stein_criterion(spike(d, 2.0), fam, E)
        oracle = 2 * d / d * (closed_form_F_sjolin(1 / d) - closed_form_F_sjolin(E))
        assert crit == pytest.approx(oracle, rel=5e-2)


# ---- sandwich and doubling -------------------------------------------------------------------

def test_sandwich_origin_and_large_t():
    v = V.sandwich_check([(0.0, 0.0)])
    assert v.passed and v.empirical_constant == 0.0
    big = V.sandwich_check([(0.0, 1e9)])
    assert 1 < big.empirical_constant < 2


def test_sandwich_random_pairs():
    v = V.sandwich_check(V.random_pairs(300, seed=11))
    assert v.passed and v.params["violations"] == 0 and v.empirical_constant <= 2


def test_doubling_check():
    rng = np.random.default_rng(5)
    s = 10 ** rng.uniform(-6, 6, 2000)
    t = np.exp(rng.uniform(0, 14, 2000))
    assert V.doubling_check(np.column_stack((s, t))).passed
    with pytest.raises(InvalidInput):
        V.doubling_check([(1.0, 0.5)])


# ---- translation ----------------------------------------------------------------------------

def test_translation_identity_and_symmetry():
    f = spike(2.0**-8)
    v0 = V.translation_check(f, 0.0)
    assert v0.params["ratio"] == 1.0
    plus = V.translation_check(f, 1.0)
    minus = V.translation_check(f, -1.0)
    assert plus.passed and math.isfinite(plus.empirical_constant)
    assert plus.params["ratio"] == pytest.approx(minus.params["ratio"], rel=1e-12)


def test_translation_out_of_domain():
    with pytest.raises(DomainTooSmall):
        V.translation_check(spike(2.0**-8), 5.0)


# ---- mean zero -----------------------------------------------------------------------------

def test_mean_zero_divergence_for_spike():
    v = V.mean_zero_necessity(indicator(0.01, 4096), checkpoints=[16, 64, 256])
    assert v.passed and v.params["prediction"] == "divergent"
    assert v.empirical_constant > 0
    assert np.all(np.diff(v.params["partials"]) > 0)


def test_mean_zero_convergence_for_pair():
    v = V.mean_zero_necessity(meanzero(2.0**-8, 4096))
    assert v.passed and v.params["prediction"] == "convergent"
    assert v.params["last_decade_increment"] <= 1e-3 * v.params["total"]


def test_mean_zero_of_zero():
    v = V.mean_zero_necessity(constant(0.0, 256))
    assert v.passed
    assert v.params["total"] == 0.0


def test_mean_zero_errors():
    with pytest.raises(DomainTooSmall):
        V.mean_zero_necessity(indicator(0.01, 4096), tail=(1.0, 100.0))
    with pytest.raises(InvalidInput):
        V.mean_zero_necessity(indicator(0.01, 4096, (-4, 4)), ball=(0.0, 0.001))


# ---- M*S relation -----------------------------------------------------------------------

def test_ms_relation_trivial_factor():
    v = V.ms_relation_check(orlicz("llogl"), orlicz("one"), E, [10.0, 100.0])
    assert v.passed and v.params["tested"] == 0
    assert all(x >= 0 for x in v.params["lhs"])


def test_ms_relation_sjolin_split():
    v = V.ms_relation_check(orlicz("llogl"), orlicz("loglogp"), E, np.geomspace(E_E, 1e8, 20))
    assert v.passed and v.empirical_constant > 0.5


def test_ms_relation_lie_split_in_log_space():
    m = orlicz("product:identity:loglogp")
    v = V.ms_relation_check(m, orlicz("log4p"), E, np.linspace(16, 1e5, 10), log_space=True)
    assert v.passed and v.params["tested"] == 10


@given(st.floats(20, 1e6))
def test_ms_relation_lhs_is_f_times_s(t):
    from orlicz_lab.orlicz_core import f_alpha
    v = V.ms_relation_check(orlicz("llogl"), orlicz("loglogp"), E, [t])
    expected = f_alpha(orlicz("llogl"), E, t) * float(orlicz("loglogp")(t))
    assert v.params["lhs"][0] == pytest.approx(expected, rel=1e-8)
