import math

import numpy as np
import pytest

from gcflab import graph_flow as gf
from gcflab.errors import ConvexityLost, EpsilonOutOfRange, SolitonDomainMismatch, StepTooLarge, TimeOrder
from gcflab.geometry import DomainGrid, DomainSpec
from gcflab.soliton import grim_reaper, radial_translator


@pytest.fixture(scope="module")
def grim():
    return grim_reaper(1.0, margin=0.25)


@pytest.fixture(scope="module")
def disk():
    return radial_translator(2, 1.0, 1.0, margin=0.25)


def pinned_state(profile, spacing, offset=0.0):
    grid = DomainGrid(profile.domain, spacing, band=profile.domain.margin)
    u0 = gf.initial_field("translator", grid, profile, offset=offset)
    ring = gf.boundary_for("pinned", grid, u0, soliton=profile, offset=offset)
    return gf.make_graph_state(grid, u0, profile.alpha, ring)


class TestStep:
    def test_grim_reaper_translates(self, grim):
        s = pinned_state(grim, 0.01)
        dt = 0.5 * gf.graph_dt_max(s)
        nxt = gf.step_graph(s, dt)
        m = s.grid.inner
        np.testing.assert_allclose((nxt.u - s.u)[m] / dt, math.pi / 2, rtol=1e-3)

    def test_disk_translator_speed(self, disk):
        errs = []
        for h in (0.05, 0.025):
            s = pinned_state(disk, h)
            ut = gf.graph_speed(s)
            errs.append(np.max(np.abs(ut[s.grid.inner] - 2.0)))
            assert ut[s.grid.center_index()] == pytest.approx(2.0, rel=5e-3)
        assert errs[1] < 2e-2
        assert errs[0] / errs[1] > 3

    def test_ring_follows_boundary_rule(self, grim):
        s = pinned_state(grim, 0.02)
        dt = 0.5 * gf.graph_dt_max(s)
        nxt = gf.step_graph(s, dt)
        ring = s.grid.ring
        np.testing.assert_allclose(nxt.u[ring], s.u[ring] + grim.lam * dt, rtol=1e-14)

    def test_step_too_large(self, grim):
        s = pinned_state(grim, 0.02)
        with pytest.raises(StepTooLarge):
            gf.step_graph(s, 1.5 * gf.graph_dt_max(s))

    def test_small_alpha_rejected(self, grim):
        s = pinned_state(grim, 0.05)
        with pytest.raises(ValueError):
            gf.make_graph_state(s.grid, s.u, 0.5, s.boundary)

    def test_concave_data_rejected(self, grim):
        grid = DomainGrid(grim.domain, 0.05)
        u0 = grid.sample(lambda x: -(x**2))
        with pytest.raises(ConvexityLost):
            gf.make_graph_state(grid, u0, 1.0, gf.Boundary("transport", u0, 1.0))

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            gf.Boundary("free", np.zeros(3), 1.0)


class TestBarriers:
    def test_zero_epsilon_gives_equal_shapes(self, disk):
        grid = DomainGrid(disk.domain, 0.1)
        u0 = gf.initial_field("translator", grid, disk)
        pair = gf.make_barriers(disk.domain, 0.0, disk, u0, grid)
        assert pair.s_lower == pair.s_upper == 1.0
        lo, hi = pair.on_grid(grid)
        np.testing.assert_allclose((hi - lo)[grid.nodes], 2 * pair.offset)

    def test_speeds(self, disk):
        grid = DomainGrid(disk.domain, 0.1, shrink=gf.barrier_scales(0.1, 2, 1.0)[1])
        u0 = gf.initial_field("translator", grid, disk)
        pair = gf.make_barriers(disk.domain, 0.1, disk, u0, grid)
        assert pair.upper_speed == pytest.approx(2.2, rel=1e-5)
        assert pair.lower_speed == pytest.approx(1.8, rel=1e-5)

    def test_scaled_translator_speed(self):
        # s u(x/s) translates over s Omega at lam(s Omega) = s^(-n alpha) lam(Omega)
        s_lo, s_hi = gf.barrier_scales(0.1, 2, 1.0)
        assert s_lo ** (-2) == pytest.approx(0.9)
        assert s_hi ** (-2) == pytest.approx(1.1)

    def test_initial_bracketing(self, disk):
        grid = DomainGrid(disk.domain, 0.1, shrink=gf.barrier_scales(0.05, 2, 1.0)[1])
        u0 = gf.initial_field("paraboloid", grid)
        pair = gf.make_barriers(disk.domain, 0.05, disk, u0, grid)
        lo, hi = pair.on_grid(grid)
        m = grid.nodes
        assert np.all(lo[m] <= u0[m]) and np.all(u0[m] <= hi[m])

    @pytest.mark.parametrize("eps0", [-0.01, 1 / 6, 0.3])
    def test_epsilon_out_of_range(self, disk, eps0):
        grid = DomainGrid(disk.domain, 0.1)
        with pytest.raises(EpsilonOutOfRange):
            gf.make_barriers(disk.domain, eps0, disk, gf.initial_field("translator", grid, disk), grid)

    def test_grid_must_be_shrunk(self, disk):
        grid = DomainGrid(disk.domain, 0.1)
        with pytest.raises(SolitonDomainMismatch):
            gf.make_barriers(disk.domain, 0.1, disk, gf.initial_field("translator", grid, disk), grid)

    def test_profile_domain_mismatch(self, grim, disk):
        grid = DomainGrid(disk.domain, 0.1)
        with pytest.raises(SolitonDomainMismatch):
            gf.make_barriers(disk.domain, 0.0, grim, gf.initial_field("translator", grid, disk), grid)


class TestComparison:
    def test_translator_inside_barriers(self, grim):
        cfg = gf.GraphConfig(spacing=0.05, mode="barrier", eps0=0.05, initial="translator", t_stop=1.0,
                             sample_interval=0.5)
        run = gf.run_graph(cfg, grim)
        for c in run.comparisons:
            assert c.lower_violation == 0 and c.upper_violation == 0
            assert c.node is None

    def test_corrupted_node_reported(self, grim):
        cfg = gf.GraphConfig(spacing=0.05, mode="barrier", eps0=0.05, initial="translator", t_stop=0.0)
        state, pair = gf.setup_graph(cfg, grim)
        u = state.u.copy()
        lo, _ = pair.on_grid(state.grid)
        node = state.grid.center_index()
        u[node] = lo[node] - 1.0
        bad = gf.GraphFlowState(u=u, t=0.0, alpha=1.0, grid=state.grid, boundary=state.boundary)
        rep = gf.check_comparison(bad, pair)
        assert rep.node == node
        assert rep.lower_violation == pytest.approx(1.0)
        assert not rep.passed


class TestHarnack:
    def test_exact_translator(self):
        lam, t1, t2 = 2.0, 0.5, 2.0
        ut = np.full(5, lam)
        mask = np.ones(5, bool)
        slack = gf.check_time_harnack(ut, t1, ut, t2, mask, 2, 1.0)
        assert slack == pytest.approx(lam * (1 - (t1 / t2) ** (2 / 3)), rel=1e-14)

    def test_exponent(self):
        assert gf.time_harnack_exponent(1, 1.0) == 0.5
        assert gf.time_harnack_exponent(2, 2.0) == pytest.approx(0.8)

    def test_time_order(self):
        ut = np.ones(3)
        mask = np.ones(3, bool)
        with pytest.raises(TimeOrder):
            gf.check_time_harnack(ut, 1.0, ut, 0.5, mask, 1, 1.0)
        with pytest.raises(TimeOrder):
            gf.check_time_harnack(ut, 0.001, ut, 0.5, mask, 1, 1.0)


class TestMonitors:
    def test_paraboloid_center(self):
        grid = DomainGrid(DomainSpec.disk(1.0, margin=0.25), 0.05)
        u0 = gf.initial_field("paraboloid", grid)
        s = gf.make_graph_state(grid, u0, 1.0, gf.Boundary("transport", u0, 1.0))
        only = np.zeros(grid.shape, bool)
        only[grid.center_index()] = True
        rec = gf.interior_monitor(s, only)
        assert rec.max_inv_lambda_min == pytest.approx(1.0, abs=1e-12)
        assert rec.max_inv_nu == pytest.approx(1.0, abs=1e-12)
        assert rec.min_ut == pytest.approx(1.0, abs=1e-12)

    def test_shifted_translator_has_zero_profile_error(self, disk):
        grid = DomainGrid(disk.domain, 0.1)
        u = gf.initial_field("translator", grid, disk)
        assert gf.normalized_difference(u + 5.0, u, grid.inner) == pytest.approx(0.0, abs=1e-14)
        assert gf.centered_difference(u + 5.0, u, grid.inner) == pytest.approx(0.0, abs=1e-14)

    def test_convergence_monitor_on_translator(self, grim):
        run = gf.run_graph(gf.GraphConfig(spacing=0.02, mode="pinned", initial="translator", t_stop=0.5,
                                          sample_interval=0.25), grim)
        rep = gf.convergence_monitor(run.states, grim)
        assert np.max(rep.profile_err) < 1e-3
        assert np.max(rep.speed_err) < 1e-3 * grim.lam


class TestEntropies:
    def test_translator_p_integral_refines_away(self, disk):
        ratios = []
        for h in (0.05, 0.025):
            s = pinned_state(disk, h)
            later = gf.step_graph(s, 0.5 * gf.graph_dt_max(s))
            ent = gf.graph_technical_entropies(s, later)
            assert ent.excluded < 0.5 * s.grid.inner.sum()
            ratios.append(ent.D2 / ent.N)
        assert ratios[1] < 0.1
        assert ratios[0] / ratios[1] > 3

    def test_curve_translator(self, grim):
        s = pinned_state(grim, 0.01)
        later = gf.step_graph(s, 0.5 * gf.graph_dt_max(s))
        ent = gf.graph_technical_entropies(s, later)
        assert ent.D2 < 1e-3 * ent.N
        assert ent.N > 0

    def test_time_order(self, grim):
        s = pinned_state(grim, 0.05)
        with pytest.raises(TimeOrder):
            gf.graph_p_field(s, s)


class TestInitialData:
    def test_logbarrier_is_convex_everywhere(self):
        sq = DomainSpec.polygon(((-1, -1), (1, -1), (1, 1), (-1, 1)), margin=0.25)
        grid = DomainGrid(sq, 0.1)
        u0 = gf.initial_field("logbarrier", grid, amplitude=0.5)
        assert np.all(np.isfinite(u0[grid.nodes]))
        s = gf.make_graph_state(grid, u0, 1.0, gf.Boundary("transport", u0, 1.0))
        assert gf.interior_monitor(s).min_ut > 0

    def test_needs_profile(self):
        grid = DomainGrid(DomainSpec.interval(1.0), 0.1)
        with pytest.raises(ValueError):
            gf.initial_field("scaled", grid)

    def test_unknown_kind(self, grim):
        grid = DomainGrid(grim.domain, 0.1)
        with pytest.raises(ValueError):
            gf.initial_field("wobbly", grid, grim)

    def test_perturbed_is_seeded(self, disk):
        grid = DomainGrid(disk.domain, 0.1)
        a = gf.initial_field("perturbed", grid, disk, seed=3)
        b = gf.initial_field("perturbed", grid, disk, seed=3)
        np.testing.assert_array_equal(a[grid.nodes], b[grid.nodes])


class TestRun:
    def test_samples_and_positivity(self, grim):
        run = gf.run_graph(gf.GraphConfig(spacing=0.05, t_stop=1.0, sample_interval=0.25), grim)
        np.testing.assert_allclose(run.times, [0, 0.25, 0.5, 0.75, 1.0], atol=1e-14)
        assert all(r.min_ut > 0 for r in run.interior)

    def test_transport_needs_speed(self):
        grid = DomainGrid(DomainSpec.interval(1.0), 0.1)
        with pytest.raises(ValueError):
            gf.boundary_for("transport", grid, np.zeros(grid.shape))

    @pytest.mark.slow
    def test_interval_converges(self, grim):
        run = gf.run_graph(gf.GraphConfig(spacing=0.05, t_stop=10.0, sample_interval=1.0), grim)
        rep = gf.convergence_monitor(run.states, grim)
        assert rep.speed_err[-1] < 2e-2 * grim.lam
        assert rep.profile_err[-1] < 1e-2
        assert rep.profile_err[-1] < rep.profile_err[0]
