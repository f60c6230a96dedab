"""Flows and finite-difference verification of the variation formulas."""

import numpy as np
import pytest

import lorstab as ls
from lorstab.harmonics import HarmonicField
from lorstab.surfaces import mdot
from lorstab.variation import flow_rule_positions

CONST = HarmonicField(constant=1.0)
Y10 = HarmonicField(terms=((1, 0, 1.0),))
Y20 = HarmonicField(terms=((2, 0, 1.0),))


class TestFlow:
    def test_zero_time_is_base(self, slice_mesh):
        var = ls.NormalVariation(base=slice_mesh(1.0, 3), amplitude=Y10)
        assert ls.flow(var, 0.0) is var.base

    def test_unit_amplitude_translates_slices(self, slice_mesh):
        var = ls.NormalVariation(base=slice_mesh(1.0, 3), amplitude=CONST)
        snap = ls.flow(var, 0.05)
        want = ls.build_slice(2, 1.05).meshed(3)
        assert np.abs(snap.cache.vertices - want.cache.vertices).max() < 1e-10

    def test_matches_flow_rule(self, slice_mesh):
        var = ls.NormalVariation(base=slice_mesh(1.0, 3), amplitude=Y20)
        for t in (0.01, -0.03):
            snap = ls.flow(var, t)
            assert np.abs(snap.cache.vertices - flow_rule_positions(var, t)).max() < 1e-10

    def test_stays_on_hyperquadric(self, slice_mesh):
        var = ls.NormalVariation(base=slice_mesh(1.0, 3), amplitude=Y10)
        snap = ls.flow(var, 0.01)
        assert np.abs(mdot(snap.cache.vertices, snap.cache.vertices) - 1.0).max() < 1e-10

    def test_variational_field_is_normal_amplitude(self, slice_mesh):
        base = slice_mesh(1.0, 3)
        var = ls.NormalVariation(base=base, amplitude=Y20)
        h = 1e-4
        vel = (ls.flow(var, h).cache.vertices - ls.flow(var, -h).cache.vertices) / (2 * h)
        want = var.values()[:, None] * base.cache.normal
        assert np.abs(vel - want).max() < 1e-8

    def test_t_max_enforced(self, slice_mesh):
        var = ls.NormalVariation(base=slice_mesh(1.0, 3), amplitude=CONST, t_max=0.1)
        with pytest.raises(ls.FlowError):
            ls.flow(var, 0.2)

    def test_spacelike_loss_raises(self, slice_mesh):
        steep = HarmonicField(terms=((1, 1, 40.0),))
        var = ls.NormalVariation(base=slice_mesh(1.0, 3), amplitude=steep)
        with pytest.raises(ls.FlowError) as err:
            ls.flow(var, 0.05)
        assert err.value.vertex is not None

    def test_graph_base_rejected(self, graph_mesh):
        with pytest.raises(ValueError, match="slice base"):
            ls.NormalVariation(base=graph_mesh(1.0, ((2, 0, 0.05),), 3), amplitude=CONST)


class TestRArea:
    def test_total_area(self, slice_mesh):
        surf = slice_mesh(1.0, 5)
        want = 4 * np.pi * np.cosh(1.0) ** 2
        assert abs(ls.r_area(surf, 0) - want) / want < 1e-3

    def test_first_order_umbilical(self, slice_mesh):
        surf = slice_mesh(1.0, 5)
        want = 2 * np.tanh(1.0) * 4 * np.pi * np.cosh(1.0) ** 2
        assert abs(ls.r_area(surf, 1) - want) / want < 1e-3

    def test_equator_first_order_vanishes(self):
        surf = ls.build_slice(2, 0.0).meshed(3)
        assert abs(ls.r_area(surf, 1)) < 1e-12


class TestVolumeBalance:
    def test_zero_amplitude(self, slice_mesh):
        var = ls.NormalVariation(base=slice_mesh(1.0, 3), amplitude=HarmonicField(constant=0.0))
        for t in (0.02, 0.1):
            assert ls.volume_balance(var, t) == pytest.approx(0.0, abs=1e-12)

    def test_zero_time(self, slice_mesh):
        var = ls.NormalVariation(base=slice_mesh(1.0, 3), amplitude=CONST)
        assert ls.volume_balance(var, 0.0) == 0.0

    def test_derivative_matches_area_integral(self, slice_mesh):
        var = ls.NormalVariation(base=slice_mesh(1.0, 4), amplitude=CONST)
        chk = ls.volume_derivative_check(var, h=1e-3)
        assert chk.rel_error <= 1e-3
        assert chk.lhs > 0

    def test_mean_zero_amplitude_preserves_volume(self, slice_mesh):
        var = ls.NormalVariation(base=slice_mesh(1.0, 4), amplitude=Y10)
        chk = ls.volume_derivative_check(var, h=1e-3)
        area = var.base.cache.area
        assert abs(chk.lhs) <= 1e-4 * area

    def test_sign_flips_with_amplitude(self, slice_mesh):
        base = slice_mesh(1.0, 3)
        up = ls.NormalVariation(base=base, amplitude=CONST)
        down = ls.NormalVariation(base=base, amplitude=HarmonicField(constant=-1.0))
        assert ls.volume_balance(up, 0.05) > 0
        assert ls.volume_balance(down, 0.05) == pytest.approx(-ls.volume_balance(up, 0.05), rel=1e-10)


class TestFirstVariation:
    def test_expanding_slice(self, slice_mesh):
        var = ls.NormalVariation(base=slice_mesh(1.0, 5), amplitude=CONST)
        chk = ls.verify_first_variation(var, 0, h=1e-3)
        assert chk.rel_error <= 1e-3
        # area of slices grows like cosh^2
        want = 8 * np.pi * np.cosh(1.0) * np.sinh(1.0)
        assert chk.lhs == pytest.approx(want, rel=2e-3)

    def test_first_order_constant_convention(self, slice_mesh):
        var = ls.NormalVariation(base=slice_mesh(1.0, 5), amplitude=CONST)
        chk = ls.verify_first_variation(var, 1, h=1e-3)
        assert chk.rel_error <= 1e-3

    def test_mean_zero_amplitude(self, slice_mesh):
        var = ls.NormalVariation(base=slice_mesh(1.0, 5), amplitude=Y20)
        chk = ls.verify_first_variation(var, 1, h=1e-3)
        assert chk.rel_error <= 5e-3

    def test_richardson_estimates_truncation(self, slice_mesh):
        var = ls.NormalVariation(base=slice_mesh(1.0, 4), amplitude=CONST)
        coarse = ls.verify_first_variation(var, 0, h=4e-3)
        fine = ls.verify_first_variation(var, 0, h=1e-3)
        assert fine.richardson < coarse.richardson


class TestSrEvolution:
    @pytest.mark.parametrize("r", [0, 1])
    def test_uniform_flow(self, slice_mesh, r):
        var = ls.NormalVariation(base=slice_mesh(1.0, 5), amplitude=CONST)
        chk = ls.verify_sr_evolution(var, r, h=1e-3)
        assert chk.rel_error <= 1e-3

    def test_degree_one_amplitude(self, slice_mesh):
        var = ls.NormalVariation(base=slice_mesh(1.0, 5), amplitude=Y10)
        chk = ls.verify_sr_evolution(var, 0, h=1e-3)
        assert chk.rel_error <= 2e-2

    def test_uniform_flow_matches_closed_form(self, slice_mesh):
        # S_1 of the slice family has derivative -n sech^2 in the flow time
        var = ls.NormalVariation(base=slice_mesh(1.0, 4), amplitude=CONST)
        snaps = [ls.flow(var, t) for t in (-1e-3, 1e-3)]
        lhs = (snaps[1].cache.sigma[:, 1] - snaps[0].cache.sigma[:, 1]) / 2e-3
        want = -2.0 / np.cosh(1.0) ** 2
        assert np.abs(lhs - want).max() < 1e-5


class TestSecondVariation:
    def test_threshold_mode(self, slice_mesh):
        var = ls.NormalVariation(base=slice_mesh(1.0, 5), amplitude=Y10)
        chk = ls.verify_second_variation(var, 1, h=1e-2)
        assert chk.rel_error <= 1e-2
        scale = 2 * np.cosh(1.0) ** 2 * (2 * np.tanh(1.0) / np.cosh(1.0) ** 2)
        assert abs(chk.lhs) <= 1e-2 * scale

    def test_higher_mode_negative_both_sides(self, slice_mesh):
        var = ls.NormalVariation(base=slice_mesh(1.0, 5), amplitude=Y20)
        chk = ls.verify_second_variation(var, 0, h=1e-2)
        assert chk.lhs < 0 and chk.rhs < 0
        assert chk.rel_error <= 2e-2

    def test_mean_zero_required(self, slice_mesh):
        var = ls.NormalVariation(base=slice_mesh(1.0, 3), amplitude=CONST)
        with pytest.raises(ValueError, match="mean-zero"):
            ls.verify_second_variation(var, 1, h=1e-2)


class TestFunctionalTrace:
    def test_stencil_and_lagrange_constant(self, slice_mesh):
        var = ls.NormalVariation(base=slice_mesh(1.0, 4), amplitude=Y10)
        trace = ls.functional_trace(var, 1, h=1e-2)
        assert trace.t_nodes == pytest.approx(np.array([-0.02, -0.01, 0.0, 0.01, 0.02]))
        # b_r * mean(H_{r+1}) + c_r with c_1 = n*c
        want = 2.0 + 2.0 * np.tanh(1.0) ** 2
        assert trace.lambda_lagrange == pytest.approx(want, rel=1e-6)
        assert trace.volume_values[2] == 0.0
        assert trace.richardson_second >= 0.0

    def test_jacobi_critical_for_mean_zero(self, slice_mesh):
        var = ls.NormalVariation(base=slice_mesh(1.0, 4), amplitude=Y20)
        trace = ls.functional_trace(var, 1, h=1e-3)
        scale = max(abs(v) for v in trace.jacobi_values)
        assert abs(trace.first_central) <= 1e-6 * max(1.0, scale)
