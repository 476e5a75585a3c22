import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gcflab import closed_flow as cf
from gcflab.errors import AlphaEqualsOne, InsufficientSamples, StepTooLarge, TimeOrder
from gcflab.geometry import SphereGrid


def circle(r=1.0, alpha=1.0, size=256, n=1, t=0.0):
    g = SphereGrid(n, size)
    return cf.make_state(g, np.full(size, r), alpha, t=t)


def run(shape="circle", alpha=1.0, n=1, size=256, t_stop=0.1, ds=0.01, **kw):
    return cf.run_closed(cf.ClosedConfig(n=n, alpha=alpha, shape=shape, size=size, t_stop=t_stop,
                                         sample_interval=ds, **kw))


class TestStep:
    def test_unit_circle_alpha_one(self):
        s = circle()
        dt = 0.5 * cf.dt_max(s)
        np.testing.assert_allclose(cf.step_closed(s, dt).h, 1 - dt, rtol=1e-13)

    def test_radius_two_alpha_two(self):
        s = circle(r=2.0, alpha=2.0)
        dt = 0.5 * cf.dt_max(s)
        np.testing.assert_allclose(cf.step_closed(s, dt).h, 2 - 0.25 * dt, rtol=1e-13)

    def test_sphere_half_power(self):
        s = circle(n=2, size=65, alpha=0.5)
        dt = 0.5 * cf.dt_max(s)
        np.testing.assert_allclose(cf.step_closed(s, dt).h, 1 - dt, rtol=1e-13)

    def test_step_too_large(self):
        s = circle()
        with pytest.raises(StepTooLarge):
            cf.step_closed(s, 2 * cf.dt_max(s))

    def test_time_advances(self):
        s = circle()
        assert cf.step_closed(s, 1e-5).t == pytest.approx(1e-5)


class TestPField:
    @pytest.mark.parametrize("r", [0.5, 1.0, 2.0])
    def test_circle_alpha_one(self, r):
        pf = cf.p_scalar_field(circle(r=r))
        np.testing.assert_allclose(pf.P, r**-2, rtol=1e-12)

    @pytest.mark.parametrize("alpha", [0.3, 1.0, 2.5])
    def test_unit_sphere(self, alpha):
        pf = cf.p_scalar_field(circle(n=2, size=65, alpha=alpha))
        np.testing.assert_allclose(pf.P, 2.0, rtol=1e-12)

    @pytest.mark.parametrize("n, r, alpha", [(1, 0.7, 1.5), (2, 1.3, 0.8)])
    def test_round_closed_form(self, n, r, alpha):
        size = 256 if n == 1 else 65
        pf = cf.p_scalar_field(circle(r=r, alpha=alpha, n=n, size=size))
        np.testing.assert_allclose(pf.P, n * r ** (-n * alpha - 1), rtol=1e-12)

    def test_curve_tensor_norm_is_p_squared(self):
        g = SphereGrid(1, 256)
        h = cf.initial_support(g, "ellipse", axes=(1.0, 0.6))
        pf = cf.p_scalar_field(cf.make_state(g, h, 1.3))
        np.testing.assert_allclose(pf.tensor_norm, pf.P**2, rtol=1e-12)

    def test_time_difference_matches_spatial_formula(self):
        g = SphereGrid(1, 256)
        s = cf.make_state(g, cf.initial_support(g, "ellipse", axes=(1.0, 0.6)), 1.5)
        spatial = cf.p_scalar_field(s).P
        dt = 0.01 * cf.dt_max(s)
        temporal = cf.p_time_difference(s, dt)
        assert np.max(np.abs(temporal - spatial)) / np.max(np.abs(spatial)) < 1e-3


class TestEntropies:
    def test_unit_circle(self):
        rec = cf.entropies(circle())
        assert rec.N == pytest.approx(2 * math.pi, rel=1e-12)
        assert rec.J == pytest.approx(2 * math.pi, rel=1e-12)

    def test_unit_sphere(self):
        rec = cf.entropies(circle(n=2, size=129))
        assert rec.N == pytest.approx(4 * math.pi, rel=1e-12)
        assert rec.J == pytest.approx(8 * math.pi, rel=1e-12)

    @pytest.mark.parametrize("n, r, alpha", [(1, 0.6, 2.0), (2, 1.4, 0.7)])
    def test_round_closed_forms(self, n, r, alpha):
        size = 256 if n == 1 else 129
        rec = cf.entropies(circle(r=r, alpha=alpha, n=n, size=size))
        wn = 2 * math.pi if n == 1 else 4 * math.pi
        assert rec.N == pytest.approx(wn * r ** (n - n * alpha), rel=1e-12)
        assert rec.J == pytest.approx(n * wn * r ** (n - 2 * n * alpha - 1), rel=1e-12)

    @settings(max_examples=25, deadline=None)
    @given(
        coeffs=st.lists(st.floats(-0.02, 0.02), min_size=3, max_size=3),
        phase=st.floats(0, 2 * math.pi),
    )
    def test_total_curvature_invariant_for_curves(self, coeffs, phase):
        g = SphereGrid(1, 256)
        th = g.angles
        h = 1.0 + sum(c * np.cos((k + 2) * th + phase) for k, c in enumerate(coeffs))
        rec = cf.entropies(cf.make_state(g, h, 1.0))
        assert rec.N == pytest.approx(2 * math.pi, rel=1e-10)


class TestSeriesChecks:
    def test_circle_alpha_one_first_derivative_vanishes(self):
        r = run()
        chk = cf.check_first_derivative(r.records, 1.0)
        assert np.max(np.abs(chk.relative)) < 1e-10

    def test_circle_alpha_two_first_derivative(self):
        r = run(alpha=2.0, size=512, t_stop=0.2, ds=0.01, dt_cap=1e-4)
        chk = cf.check_first_derivative(r.records, 2.0)
        assert np.max(np.abs(chk.slack / np.abs([x.J for x in r.records[2:-2]]))) < 1e-3

    def test_ellipse_first_derivative_refines(self):
        fine = run("ellipse", alpha=0.7, size=256, t_stop=0.06, ds=0.002)
        coarse = run("ellipse", alpha=0.7, size=128, t_stop=0.06, ds=0.004)
        e_fine = np.max(np.abs(cf.check_first_derivative(fine.records, 0.7).relative))
        e_coarse = np.max(np.abs(cf.check_first_derivative(coarse.records, 0.7).relative))
        assert e_fine < 1e-2
        assert e_fine < e_coarse

    def test_circle_monotonicity_equality(self):
        chk = cf.check_monotonicity(run(size=512, t_stop=0.2, ds=0.005).records, 1.0, 1)
        assert np.max(np.abs(chk.slack2.relative)) < 1e-3
        assert chk.alpha_in_range

    def test_ellipse_monotonicity_strict(self):
        chk = cf.check_monotonicity(run("ellipse", size=256, t_stop=0.05, ds=0.002).records, 1.0, 1)
        assert np.all(chk.slack2.relative > 0)

    def test_sphere_monotonicity_equality(self):
        r = run(shape="sphere", n=2, size=129, t_stop=0.1, ds=0.005)
        chk = cf.check_monotonicity(r.records, 1.0, 2)
        assert np.max(np.abs(chk.slack2.relative)) < 1e-3

    def test_dissipation_identity_ellipse(self):
        r = run("ellipse", alpha=1.5, size=256, t_stop=0.05, ds=0.002)
        chk = cf.check_dissipation_identity(r.records, 1.5)
        assert np.max(np.abs(chk.relative)) < 1e-2

    def test_dissipation_identity_spheroid(self):
        r = cf.run_closed(cf.ClosedConfig(n=2, alpha=1.0, shape="spheroid", axes=(1.0, 0.7), size=129,
                                          t_stop=0.04, sample_interval=0.002))
        chk = cf.check_dissipation_identity(r.records, 1.0)
        assert np.max(np.abs(chk.relative)) < 1e-2

    @pytest.mark.parametrize("alpha", [2.0, 0.7])
    def test_circle_concavity(self, alpha):
        r = run(alpha=alpha, size=256, t_stop=0.15, ds=0.01)
        chk = cf.check_concavity(r.records, alpha)
        assert np.all(chk.relative <= 1e-6)

    def test_circle_alpha_two_concavity_matches_closed_form(self):
        # N^(alpha/(1-alpha)) = r^2/(4 pi^2) with r^3 = 1 - 3t
        r = run(alpha=2.0, size=512, t_stop=0.15, ds=0.01, dt_cap=1e-4)
        chk = cf.check_concavity(r.records, 2.0)
        t = chk.t
        exact = (1 / (4 * math.pi**2)) * (2 / 3) * (-1 / 3) * 9 * (1 - 3 * t) ** (-4 / 3)
        np.testing.assert_allclose(chk.slack, exact, rtol=1e-2)
        assert np.all(exact < 0)

    def test_concavity_needs_alpha_not_one(self):
        with pytest.raises(AlphaEqualsOne):
            cf.check_concavity(run(t_stop=0.05).records, 1.0)

    def test_insufficient_samples(self):
        with pytest.raises(InsufficientSamples):
            cf.check_first_derivative(run(t_stop=0.02).records, 1.0)


class TestHarnack:
    def test_circle_positive(self):
        r = run(t_stop=0.2, ds=0.05)
        assert cf.check_harnack(cf.state_at(r, 0.05), cf.state_at(r, 0.1)) > 0

    def test_sphere_closed_form(self):
        r = run(shape="sphere", n=2, size=129, t_stop=0.1, ds=0.05)
        s1, s2 = cf.state_at(r, 0.05), cf.state_at(r, 0.1)
        r1, r2 = (cf.sphere_radius(1.0, t, 2, 1.0) for t in (0.05, 0.1))
        expected = (r1 / r2) ** 2 - (0.5) ** (2 / 3)
        assert cf.check_harnack(s1, s2) == pytest.approx(expected, rel=1e-4)

    def test_ellipse_slack(self):
        r = run("ellipse", size=256, t_stop=0.1, ds=0.05)
        assert cf.check_harnack(cf.state_at(r, 0.05), cf.state_at(r, 0.1)) >= -1e-3

    def test_time_order(self):
        r = run(t_stop=0.1, ds=0.05)
        with pytest.raises(TimeOrder):
            cf.check_harnack(cf.state_at(r, 0.1), cf.state_at(r, 0.05))
        with pytest.raises(TimeOrder):
            cf.check_harnack(cf.state_at(r, 0.0), cf.state_at(r, 0.05))


class TestRun:
    def test_circle_radius(self):
        r = run(size=512, t_stop=0.3, ds=0.1)
        assert np.mean(r.final.h) == pytest.approx(math.sqrt(0.4), rel=1e-3)
        assert r.status == "completed"

    def test_sphere_radius(self):
        r = run(shape="sphere", n=2, size=129, t_stop=0.2, ds=0.1)
        assert np.mean(r.final.h) == pytest.approx(0.4 ** (1 / 3), rel=1e-3)

    def test_records_on_sample_grid(self):
        r = run(t_stop=0.1, ds=0.02)
        np.testing.assert_allclose([x.t for x in r.records], np.arange(6) * 0.02, atol=1e-14)

    def test_extinction_stops_run(self):
        r = run(t_stop=0.6, ds=0.05, w_floor=0.2)
        assert r.status == "extinction"
        assert r.records[-1].t < 0.5

    def test_fill_slacks_shapes(self):
        r = run("ellipse", alpha=1.5, t_stop=0.05, ds=0.005)
        recs = cf.fill_slacks(r)
        # the earlier sample must sit at or past the t = 0.01 floor
        assert recs[2].harnack_slack is None and recs[3].harnack_slack is not None
        assert recs[1].mono_slack2 is None and recs[2].mono_slack2 is not None
        assert recs[-2].concavity_dd is None and recs[-3].concavity_dd is not None

    def test_state_at_missing(self):
        with pytest.raises(KeyError):
            cf.state_at(run(t_stop=0.02), 0.015)

    def test_sphere_radius_formula(self):
        assert cf.sphere_radius(1.0, 0.3, 1, 1.0) == pytest.approx(math.sqrt(0.4))
