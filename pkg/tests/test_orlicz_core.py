import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from orlicz_lab.errors import EmptyRegion, InvalidInput, NonConvergence
from orlicz_lab.orlicz_core import (BUILTINS, E, E_E, GAUGE_NAMES, HLOG, GaugeFamilySpec,
                                    OrliczFunction, closed_form_F_sjolin,
                                    closed_form_F_sjolin_log, compose_product, eval_gauge,
                                    f_alpha, family_properties, lie_target_log, log_plus_iter,
                                    musielak, orlicz, orlicz_functional, sandwich_integral)
from orlicz_lab.sampled import constant, indicator

mp.mp.dps = 40


def mp_logp(t, k):
    x = mp.mpf(t)
    for _ in range(k):
        x = mp.log(x) if x > 1 else mp.mpf(0)
    return x


# ---- log_plus_iter ------------------------------------------------------------

def test_log_plus_iter_at_one():
    assert log_plus_iter(1.0, 1) == 0.0


def test_log_plus_iter_e_e():
    assert log_plus_iter(E_E, 2) == pytest.approx(1.0, rel=1e-15)


def test_log_plus_iter_million_matches_mpmath():
    # the high-precision value is 2.62579..., not 2.6268
    oracle = float(mp_logp(10**6, 2))
    assert log_plus_iter(1e6, 2) == pytest.approx(oracle, rel=1e-14)
    assert oracle == pytest.approx(2.6258, abs=1e-4)


@given(st.floats(0, 1e300), st.integers(1, 4))
def test_log_plus_iter_against_mpmath(t, k):
    assert log_plus_iter(t, k) == pytest.approx(float(mp_logp(t, k)), rel=1e-12, abs=1e-300)


def test_log_plus_iter_below_one_is_zero():
    assert np.all(log_plus_iter(np.array([0.0, 0.5, 1.0]), 1) == 0)


# ---- Musielak gauge --------------------------------------------------------------

def test_eval_gauge_zero():
    assert eval_gauge(HLOG, 0.0, 0.0) == 0.0


def test_eval_gauge_value():
    oracle = 1 / (mp.log(mp.e + 1) + 1)
    assert float(eval_gauge(HLOG, 0.0, 1.0)) == pytest.approx(float(oracle), rel=1e-14)
    assert float(oracle) == pytest.approx(0.43229, abs=1e-5)


def test_eval_gauge_decreasing_in_s():
    vals = [float(eval_gauge(HLOG, s, 5.0)) for s in (0, 1, 10)]
    assert vals[0] > vals[1] > vals[2]


@given(st.floats(0, 1e6), st.floats(0, 1e6))
def test_gauge_is_t_times_kernel(s, t):
    assert float(HLOG.eval(s, t)) == float(t * HLOG.kernel(s, t))


@given(st.floats(0, 1e4), st.floats(0, 1e4), st.floats(0, 1e4))
def test_gauge_monotone(s, t1, t2):
    lo, hi = sorted((t1, t2))
    assert HLOG.eval(s, lo) <= HLOG.eval(s, hi)
    assert HLOG.eval(lo, s) >= HLOG.eval(hi, s)


def test_family_with_psi0_is_hlog():
    fam = GaugeFamilySpec(BUILTINS["psi0"])
    s = np.geomspace(1e-3, 1e3, 15)
    t = np.geomspace(1e-3, 1e6, 15)[:, None]
    np.testing.assert_allclose(fam.Psi(s, t), HLOG.eval(s, t), rtol=1e-13)


def test_family_psi_is_derivative():
    fam = GaugeFamilySpec(BUILTINS["sjolin"])
    for s in (0.0, 0.5, 3.0):
        for t in (20.0, 300.0, 1e5):
            h = 1e-5 * t
            fd = (fam.Psi(s, t + h) - fam.Psi(s, t - h)) / (2 * h)
            assert float(fam.psi(s, t)) == pytest.approx(float(fd), rel=1e-6)


def test_musielak_registry():
    assert musielak("hlog") is HLOG
    assert float(musielak("llogl")(3.0, math.e)) == pytest.approx(math.e)
    with pytest.raises(InvalidInput):
        musielak("nope")


# ---- Orlicz built-ins ---------------------------------------------------------------

@pytest.mark.parametrize("name", [n for n in GAUGE_NAMES])
def test_builtin_basic_invariants(name):
    phi = orlicz(name)
    ts = np.concatenate(([0.0], np.geomspace(1e-6, 1e30, 400)))
    v = phi.eval(ts)
    assert v[0] == 0.0
    assert np.all(np.diff(v) >= 0)
    assert np.all(phi.deriv(ts) >= 0)
    if name != "lie":
        assert v[-1] > 1e28


def test_lie_grows_beyond_its_switch_on_point():
    # the fourth iterate turns positive at exp(e^e) ~ 3.8e6, so the gauge
    # is already unbounded in double precision
    phi = orlicz("lie")
    assert phi(3e6) == 0.0
    assert phi(1e300) > 1e299


@pytest.mark.parametrize("name", [n for n in GAUGE_NAMES])
def test_builtin_derivative_matches_finite_difference(name):
    phi = orlicz(name)
    ts = np.geomspace(1.5, 1e12, 60)
    kinks = np.array(phi.kinks + (1.0, E))
    ts = ts[np.min(np.abs(ts[:, None] - kinks[None, :]), axis=1) > 1e-6 + 1e-3 * ts]
    for t in ts:
        h = 1e-6 * t
        fd = (phi(t + h) - phi(t - h)) / (2 * h)
        assert float(phi.deriv(t)) == pytest.approx(fd, rel=1e-5, abs=1e-12)


@pytest.mark.parametrize("name", [n for n in GAUGE_NAMES])
def test_log_forms_agree_with_direct(name):
    phi = orlicz(name)
    lf = phi.log_form
    for t in np.geomspace(0.1, 1e100, 50):
        u = math.log(t)
        assert float(lf.value(u)) == pytest.approx(float(phi(t)), rel=1e-12)
        assert float(lf.deriv(u)) == pytest.approx(float(phi.deriv(t)), rel=1e-12, abs=1e-300)


def test_lie_log_form_reaches_huge_arguments():
    lf = orlicz("lie").log_form
    u = 1e6  # t = e^(10^6)
    l1, l2 = u, math.log(u)
    l4 = math.log(math.log(math.log(l1)))
    assert float(lf.ratio(u)) == pytest.approx(l2 * l4, rel=1e-14)


def test_registry_unknown_and_product():
    with pytest.raises(InvalidInput):
        orlicz("unknown")
    with pytest.raises(InvalidInput):
        orlicz("product:llogl")
    assert orlicz("product:llogl:loglogp").factors is not None


# ---- compose_product -------------------------------------------------------------------

def test_product_identity():
    phi = compose_product(orlicz("identity"), orlicz("one"))
    ts = np.geomspace(1e-5, 1e5, 30)
    np.testing.assert_array_equal(phi(ts), ts)
    np.testing.assert_array_equal(phi.deriv(ts), np.ones_like(ts))


def test_product_gives_sjolin():
    phi = compose_product(orlicz("llogl"), orlicz("loglogp"))
    ts = np.geomspace(1e-3, 1e20, 100)
    np.testing.assert_allclose(phi(ts), orlicz("sjolin")(ts), rtol=1e-14)


def test_product_derivative_finite_difference():
    phi = orlicz("product:llogl:loglogp")
    for t in np.geomspace(2, 1e8, 20):
        if abs(t - E) < 1e-3:
            continue
        h = 1e-6 * t
        fd = (phi(t + h) - phi(t - h)) / (2 * h)
        assert float(phi.deriv(t)) == pytest.approx(fd, rel=1e-4)


# ---- f_alpha ---------------------------------------------------------------------------

def test_f_alpha_identity_is_log():
    assert f_alpha(orlicz("identity"), 1.0, E) == pytest.approx(1.0, rel=1e-12)


def test_f_alpha_zero_below_alpha():
    assert f_alpha(orlicz("psi0"), 5.0, 4.0) == 0.0


def _custom(deriv):
    return OrliczFunction("custom", lambda t: t, deriv)


@pytest.mark.parametrize("y", [10.0, 1e3, 1e6])
def test_integration_by_parts_identity(y):
    # int_e^y d(a)/log(a) = y/log y - e + int_e^y d(a)/log^2(a), each side by f_alpha
    lhs = f_alpha(_custom(lambda s: s / math.log(s)), E, y)
    rhs = y / math.log(y) - E + f_alpha(_custom(lambda s: s / math.log(s) ** 2), E, y)
    assert lhs == pytest.approx(rhs, rel=1e-6)


@pytest.mark.parametrize("y", [E, 10.0, 1e4, 1e9])
def test_f_alpha_psi0_against_mpmath(y):
    def psi0_over_s(s):
        L = mp.log(mp.e + s)
        return 1 / (s * L) - 1 / ((mp.e + s) * L**2)
    oracle = mp.quad(psi0_over_s, [mp.e, 10, 1e3, 1e6, y] if y > 1e6 else [mp.e, y])
    assert f_alpha(orlicz("psi0"), E, y) == pytest.approx(float(oracle), rel=1e-9, abs=1e-15)


def test_f_alpha_sjolin_closed_form():
    q = f_alpha(orlicz("sjolin"), E_E, 1e4)
    c = closed_form_F_sjolin(1e4) - closed_form_F_sjolin(E_E)
    assert q == pytest.approx(c, rel=1e-6)


@given(st.floats(1.0, 1e6), st.floats(1.0, 1e6), st.floats(1.0, 1e6),
       st.sampled_from(["psi0", "llogl", "lloglogl", "sjolin"]))
def test_f_alpha_additive(a, b, c, name):
    a, b, c = sorted((a, b, c))
    phi = orlicz(name)
    whole = f_alpha(phi, a, c)
    parts = f_alpha(phi, a, b) + f_alpha(phi, b, c)
    assert whole == pytest.approx(parts, rel=1e-9, abs=1e-12)


def test_f_alpha_nonconvergence_on_pathological_psi():
    # psi(s)/s = (s - 2)^-2 is not integrable across s = 2
    wild = _custom(lambda s: s / (s - 2.0) ** 2 if s != 2 else 0.0)
    with pytest.raises(NonConvergence):
        f_alpha(wild, 1.0, 1e3)


# ---- closed forms -----------------------------------------------------------------------

def test_closed_form_at_one():
    assert closed_form_F_sjolin(1.0) == 0.0


def test_closed_form_at_e_e():
    # log+ t = e and log+ log+ t = 1 at t = e^e
    oracle = mp.e**2 / 2 + mp.e - mp.e**2 / 4
    assert closed_form_F_sjolin(E_E) == pytest.approx(float(oracle), rel=1e-14)
    assert closed_form_F_sjolin(E) == pytest.approx(-0.25, rel=1e-14)


def test_closed_form_derivative_at_100():
    t, h = 100.0, 0.1
    fd = (closed_form_F_sjolin(t + h) - closed_form_F_sjolin(t - h)) / (2 * h)
    assert fd == pytest.approx(float(orlicz("sjolin").deriv(t)) / t, rel=1e-4)


@given(st.floats(1.0, 700.0))
def test_closed_form_log_space_agrees(u):
    assert closed_form_F_sjolin_log(u) == pytest.approx(closed_form_F_sjolin(math.exp(u)), rel=1e-12)


def test_lie_target_log():
    assert lie_target_log(10.0) == -math.inf
    u = 400.0
    direct = math.log(orlicz("psi0")(math.exp(u)) * log_plus_iter(math.exp(u), 4))
    assert lie_target_log(u) == pytest.approx(direct, rel=1e-13)


# ---- functionals -------------------------------------------------------------------------

def test_functional_of_zero():
    assert orlicz_functional(constant(0.0, 128), HLOG) == 0.0


def test_functional_of_constant():
    phi = orlicz("llogl")
    assert orlicz_functional(constant(3.0, 128), phi) == pytest.approx(2 * phi(3.0), rel=1e-12)


def test_functional_of_indicator_lloglogl():
    delta = 1e-6
    # a grid with h = delta puts exactly two cells inside the support
    f = indicator(delta, int(round(2 / delta)), domain=(-1.0, 1.0))
    val = orlicz_functional(f, orlicz("lloglogl"))
    oracle = 2 * mp_logp(1 / delta, 2)
    assert val == pytest.approx(float(oracle), rel=1e-9)
    assert float(oracle) == pytest.approx(5.2516, abs=1e-4)


def test_functional_empty_region():
    with pytest.raises(EmptyRegion):
        orlicz_functional(constant(1.0, 16), HLOG, (5.0, 6.0))


# ---- structural gauge properties -----------------------------------------------------------

@given(st.floats(1e-6, 1e6), st.floats(1.0, 1e6))
def test_doubling_inequality(s, t):
    psi0 = orlicz("psi0")
    mid = psi0(s * t)
    assert t / (1 + math.log(t)) * psi0(s) <= mid <= t * psi0(s)


@given(st.floats(0, 1e3, allow_subnormal=False), st.floats(0, 1e3, allow_subnormal=False))
def test_sandwich(s, t):
    psi = float(HLOG.eval(s, t))
    mid = sandwich_integral(s, t)
    assert psi * (1 - 1e-9) <= mid <= 2 * psi * (1 + 1e-9) + 1e-300


def test_sandwich_integral_against_mpmath():
    for s, t in ((0.0, 1.0), (3.0, 500.0), (100.0, 1e6)):
        oracle = mp.quad(lambda x: 1 / (mp.log(mp.e + x) + mp.log(mp.e + s)), [0, t])
        assert sandwich_integral(s, t) == pytest.approx(float(oracle), rel=1e-10)


@given(st.floats(0, 5.0), st.floats(0, 1e12))
def test_local_comparability(x, t):
    R = 5.0
    c = 1 + math.log(E + R)
    a = math.log(E + t)
    b = math.log((E + x) * (E + t))
    assert a <= b <= c * a * (1 + 1e-15)


def test_family_properties_on_compact():
    fam = GaugeFamilySpec(BUILTINS["psi0"])
    radii = np.linspace(0, 2, 9)
    props = family_properties(fam, radii, np.geomspace(0.1, 1e6, 20), alpha0=1.0, beta0=100.0)
    assert np.all(props["argmin_radius"] == radii.max())
    assert np.all(props["argmax_radius"] == radii.min())
    assert 1 < props["doubling_constant"] <= 2
    assert math.isfinite(props["max_log_integral"])
