import dataclasses

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from saxscan.scatter import (
    SHAPE_CLASSES,
    CylinderParams,
    DABParams,
    EllipsoidParams,
    FuzzySphereParams,
    HollowCylinderParams,
    MixtureParams,
    PolymerEVParams,
    ShapeClass,
    SphereParams,
    TeubnerStreyParams,
    intensity_cylinder,
    intensity_dab,
    intensity_ellipsoid,
    intensity_fuzzy_sphere,
    intensity_hollow_cylinder,
    intensity_mixture,
    intensity_polymer_ev,
    intensity_sphere,
    intensity_teubner_strey,
    make_qgrid,
    model_intensity,
    sample_params,
)
from saxscan.scatter.formfactors import (
    orientation_orders,
    orientation_rule,
    sphere_amplitude,
    teubner_strey_coefficients,
)

# frozen from tests/oracles/compute_values.py
SPHERE_Q01_R30 = 0.11949293384195360124
PROLATE_10_3_Q02 = 0.13230872026953266934
CYLINDER_5_200_Q005 = 0.29063639791769407163
HOLLOW_05_10_100_Q01 = 0.21867336078148516378
CYLINDER_10_1000_Q1 = 2.8834478969376211839e-7
PROLATE_80_5_Q2 = 1.1893004230544294933e-9
TAN_ROOT = 4.4934094579090641753

Q = make_qgrid()
ANISOTROPIC = {
    ShapeClass.ELLIPSOID_PROLATE: intensity_ellipsoid,
    ShapeClass.ELLIPSOID_OBLATE: intensity_ellipsoid,
    ShapeClass.CYLINDER_LONG: intensity_cylinder,
    ShapeClass.DISK: intensity_cylinder,
    ShapeClass.CYLINDER_HOLLOW: intensity_hollow_cylinder,
    ShapeClass.CYLINDER_LONG_HOLLOW: intensity_hollow_cylinder,
}


def one(f, q, p):
    return float(f(np.array([q]), p)[0])


def loglog_slope(q, i):
    return np.polyfit(np.log(q), np.log(i), 1)[0]


def test_qgrid():
    assert Q.size == 500 and Q[0] == pytest.approx(1e-3) and Q[-1] == pytest.approx(3.0)
    assert np.all(np.diff(Q) > 0)
    np.testing.assert_allclose(np.diff(np.log(Q)), np.log(3000) / 499, rtol=1e-10)


@pytest.mark.parametrize("f, p, q, ref, tol", [
    (intensity_sphere, SphereParams(30), 0.1, SPHERE_Q01_R30, 1e-12),
    (intensity_ellipsoid, EllipsoidParams(10, 3), 0.2, PROLATE_10_3_Q02, 1e-10),
    (intensity_cylinder, CylinderParams(5, 200), 0.05, CYLINDER_5_200_Q005, 1e-10),
    (intensity_hollow_cylinder, HollowCylinderParams(10, 5, 100), 0.1, HOLLOW_05_10_100_Q01,
     1e-10),
    (intensity_cylinder, CylinderParams(10, 1000), 1.0, CYLINDER_10_1000_Q1, 1e-8),
    (intensity_ellipsoid, EllipsoidParams(80, 5), 2.0, PROLATE_80_5_Q2, 1e-8),
])
def test_high_precision_oracles(f, p, q, ref, tol):
    assert one(f, q, p) == pytest.approx(ref, rel=tol)


def test_sphere_first_minimum():
    assert sphere_amplitude(TAN_ROOT) ** 2 < 1e-9
    x = np.linspace(4.3, 4.7, 4001)
    assert x[np.argmin(sphere_amplitude(x) ** 2)] == pytest.approx(TAN_ROOT, abs=1e-4)


def test_sphere_amplitude_series_branch_continuous():
    x = np.array([1e-3 * (1 - 1e-9), 1e-3 * (1 + 1e-9)])
    a = sphere_amplitude(x)
    assert abs(a[0] - a[1]) < 1e-12
    assert sphere_amplitude(0.0) == 1.0


def test_sphere_amplitude_against_mpmath():
    mp.mp.dps = 40
    xs = np.concatenate([np.linspace(0, 0.3, 61), [1.0, 4.0, 30.0, 500.0]])
    ref = [float(3 * (mp.sin(mp.mpf(x)) - x * mp.cos(mp.mpf(x))) / mp.mpf(x) ** 3) if x else 1.0
           for x in xs]
    np.testing.assert_allclose(sphere_amplitude(xs), ref, rtol=1e-13, atol=1e-16)


def test_fuzzy_sphere_identities():
    sph = intensity_sphere(Q, SphereParams(25))
    np.testing.assert_array_equal(intensity_fuzzy_sphere(Q, FuzzySphereParams(25, 0.0)), sph)
    fz = intensity_fuzzy_sphere(Q, FuzzySphereParams(25, 3.0))
    mask = sph > 1e-300
    np.testing.assert_allclose(fz[mask] / sph[mask], np.exp(-(3.0 * Q[mask]) ** 2), rtol=1e-10)


def test_dab_closed_form():
    p = DABParams(10.0)
    assert one(intensity_dab, 0.1, p) == pytest.approx(2000 * np.pi, rel=1e-14)
    assert one(intensity_dab, 0.0, DABParams(7.0, 2.0, 0.5)) == pytest.approx(
        2.0 * 8 * np.pi * 343 + 0.5, rel=1e-14)
    big = DABParams(100.0)
    last = Q >= 0.3
    assert loglog_slope(Q[last], intensity_dab(Q[last], big)) == pytest.approx(-4, abs=0.05)


def test_teubner_strey_rational_function():
    p = TeubnerStreyParams(30.0, 20.0)
    a2, c1, c2 = teubner_strey_coefficients(30.0, 20.0)
    mp.mp.dps = 30
    k2 = (2 * mp.pi / 30) ** 2
    ref_a2 = (k2 + mp.mpf(1) / 400) ** 2
    ref_c1 = -2 * k2 + mp.mpf(2) / 400
    ref = np.array([float(1 / (ref_a2 + ref_c1 * mp.mpf(q) ** 2 + mp.mpf(q) ** 4)) for q in Q])
    np.testing.assert_allclose(intensity_teubner_strey(Q, p), ref, rtol=1e-12)
    assert (a2, c1, c2) == pytest.approx((float(ref_a2), float(ref_c1), 1.0), rel=1e-14)
    assert one(intensity_teubner_strey, 0.0, p) == pytest.approx(1 / a2, rel=1e-14)


@pytest.mark.parametrize("d, xi", [(30, 20), (10, 15), (100, 60), (50, 100)])
def test_teubner_strey_peak(d, xi):
    a2, c1, c2 = teubner_strey_coefficients(d, xi)
    assert c1 < 0
    q_star = np.sqrt(-c1 / (2 * c2))
    i = np.argmax(intensity_teubner_strey(Q, TeubnerStreyParams(d, xi)))
    assert Q[max(i - 1, 0)] <= q_star <= Q[min(i + 1, Q.size - 1)]


def test_teubner_strey_rejects_nonpositive_denominator(monkeypatch):
    # the (d, xi) form always gives a positive denominator, so force a bad one
    import saxscan.scatter.formfactors as ff

    monkeypatch.setattr(ff, "teubner_strey_coefficients", lambda d, xi: (1.0, -3.0, 1.0))
    with pytest.raises(ValueError):
        ff.intensity_teubner_strey(Q, TeubnerStreyParams(30.0, 20.0))


@settings(max_examples=200, deadline=None)
@given(d=st.floats(1, 1000), ratio=st.floats(0.01, 100))
def test_teubner_strey_denominator_positive(d, ratio):
    a2, c1, c2 = teubner_strey_coefficients(d, d * ratio)
    q2 = np.linspace(0, 10, 1001) ** 2
    assert np.all(a2 + c1 * q2 + c2 * q2 * q2 > 0)


def debye(x):
    return 2 * (np.expm1(-x) + x) / x**2


def test_polymer_ev_debye_limit():
    for rg in (2.0, 10.0, 50.0):
        got = intensity_polymer_ev(Q, PolymerEVParams(rg, 0.5))
        np.testing.assert_allclose(got, debye((Q * rg) ** 2), rtol=1e-6)


@pytest.mark.parametrize("nu", [0.33, 0.5, 0.6])
def test_polymer_ev_asymptotic_slope(nu):
    rg = 50.0
    last = Q >= 3.0 / np.sqrt(10)
    slope = loglog_slope(Q[last], intensity_polymer_ev(Q[last], PolymerEVParams(rg, nu)))
    assert slope == pytest.approx(-1 / nu, abs=0.1)


def test_polymer_ev_series_and_gamma_branches_agree():
    nu, rg = 0.41, 7.0
    c = (2 * nu + 1) * (2 * nu + 2) / 6
    u_edge = 0.5
    q_edge = np.sqrt(u_edge / c) / rg
    q = q_edge * np.array([1 - 1e-9, 1 + 1e-9])
    a, b = intensity_polymer_ev(q, PolymerEVParams(rg, nu))
    assert a == pytest.approx(b, rel=1e-8)


def test_polymer_ev_domain():
    with pytest.raises(ValueError):
        PolymerEVParams(5.0, 0.7)


def test_ellipsoid_aspect_one_is_sphere():
    got = intensity_ellipsoid(Q, EllipsoidParams(20, 1.0))
    ref = intensity_sphere(Q, SphereParams(20))
    mask = ref > 1e-12 * ref.max()
    np.testing.assert_allclose(got[mask], ref[mask], rtol=1e-6)


def test_hollow_with_vanishing_core_is_cylinder():
    got = intensity_hollow_cylinder(Q, HollowCylinderParams(8.0, 8e-7, 300.0))
    ref = intensity_cylinder(Q, CylinderParams(8.0, 300.0))
    np.testing.assert_allclose(got, ref, rtol=1e-6)


def test_cylinder_axial_factor_decreases_with_length():
    # at fixed q the orientation average shrinks as the rod gets longer
    q = np.array([0.05])
    vals = [intensity_cylinder(q, CylinderParams(2.0, L))[0] for L in (10, 50, 200, 1000)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    # L -> 0 approaches the thin-disk limit 2 / (qR)^2 (1 - J1(2qR) / (qR))
    thin = intensity_cylinder(np.array([0.1]), CylinderParams(100.0, 1e-3))[0]
    x = 10.0
    ref = 2 / x**2 * (1 - float(mp.besselj(1, 2 * x)) / x)
    assert thin == pytest.approx(ref, rel=1e-6)


def test_mixture_limits_and_linearity():
    s, c = SphereParams(12.0), CylinderParams(3.0, 150.0)
    i_s, i_c = intensity_sphere(Q, s), intensity_cylinder(Q, c)
    np.testing.assert_allclose(intensity_mixture(Q, MixtureParams(s, c, 1.0)), i_s, rtol=1e-6)
    np.testing.assert_allclose(intensity_mixture(Q, MixtureParams(s, c, 0.5)), 0.5 * (i_s + i_c),
                               rtol=1e-13)
    mix = intensity_mixture(Q, MixtureParams(s, c, 0.3, background=0.25))
    assert np.all(mix - 0.25 >= np.minimum(i_s, i_c) * (1 - 1e-12))
    assert np.all(mix - 0.25 <= np.maximum(i_s, i_c) * (1 + 1e-12))


@settings(max_examples=30, deadline=None)
@given(w=st.floats(0.01, 0.99), r=st.floats(2, 100), rc=st.floats(2, 20))
def test_mixture_convex_combination(w, r, rc):
    s, c = SphereParams(r), CylinderParams(rc, 30 * rc)
    i_s, i_c = intensity_sphere(Q, s), intensity_cylinder(Q, c)
    mix = intensity_mixture(Q, MixtureParams(s, c, w))
    assert np.all(mix >= np.minimum(i_s, i_c) * (1 - 1e-12))
    assert np.all(mix <= np.maximum(i_s, i_c) * (1 + 1e-12))


def test_orientation_rule_integrates_sin():
    for n in (76, 152, 760):
        alpha, w = orientation_rule(n)
        assert alpha.size == n and np.all((alpha > 0) & (alpha < np.pi / 2))
        assert w.sum() == pytest.approx(1.0, rel=1e-14)


def test_orientation_orders():
    orders = orientation_orders(Q, 1000.0)
    assert orders[0] == 76 and np.all(orders % 76 == 0)
    assert np.all(np.diff(orders) >= 0)
    assert np.all(orders >= 0.9 * Q * 1000.0)
    np.testing.assert_array_equal(orientation_orders(Q, 1000.0, 152), 2 * orders)
    with pytest.raises(ValueError):
        orientation_orders(Q, 10.0, 0)


@pytest.mark.parametrize("shape", list(ANISOTROPIC))
def test_orientation_average_converged(shape):
    rng = np.random.default_rng(shape.code)
    f = ANISOTROPIC[shape]
    for _ in range(15):
        p = dataclasses.replace(sample_params(shape, rng), pd=0.0)
        # stretch the dispersed size by the largest polydispersity excursion
        field = p.dispersed
        p = dataclasses.replace(p, **{field: getattr(p, field) * 1.6})
        if hasattr(p, "radius_core"):
            p = dataclasses.replace(p, radius_core=p.radius_core * 1.6)
        a, b = f(Q, p, 76), f(Q, p, 152)
        assert np.max(np.abs(a / b - 1)) < 1e-5


def tiny_q_limit(shape, p):
    return float(model_intensity(shape, np.array([1e-5]), p)[0])


@pytest.mark.parametrize("shape", SHAPE_CLASSES)
def test_forward_limit(shape):
    rng = np.random.default_rng(100 + shape.code)
    for _ in range(5):
        p = dataclasses.replace(sample_params(shape, rng), background=0.3)
        # sampled records are normalized so the structure term is 1 at q = 0
        assert tiny_q_limit(shape, p) == pytest.approx(1.3, rel=1e-3)
        p2 = dataclasses.replace(p, scale=2.5 * p.scale)
        assert tiny_q_limit(shape, p2) == pytest.approx(2.8, rel=1e-3)


@pytest.mark.slow
@pytest.mark.parametrize("shape", SHAPE_CLASSES)
def test_intensity_finite_and_above_background(shape):
    rng = np.random.default_rng(200 + shape.code)
    for _ in range(1000):
        p = sample_params(shape, rng)
        bkg = float(np.exp(rng.uniform(np.log(1e-6), 0.0)))
        p = dataclasses.replace(p, background=bkg)
        i = model_intensity(shape, Q, p)
        assert i.shape == (500,)
        assert np.all(np.isfinite(i))
        assert np.all(i >= bkg)
