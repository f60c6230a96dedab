"""Slice and graph surface construction, fundamental forms, and fields."""

import numpy as np
import pytest

import lorstab as ls
from lorstab.harmonics import HarmonicField, SphericalHarmonic
from lorstab.surfaces import (
    ambient_field,
    export_surface_mesh,
    mdot,
    shape_operator_mesh_estimate,
    sphere_area,
    surface_from_mesh_file,
)

AXIS = np.array([0.0, 0.0, 0.0, 1.0])


class TestSliceClosedForms:
    def test_umbilicity_and_curvatures(self):
        sl = ls.build_slice(3, 1.0)
        assert sl.umbilicity_factor == pytest.approx(-np.tanh(1.0))
        table = sl.curvature_table()
        for r in range(4):
            assert table.mean[r] == pytest.approx(np.tanh(1.0) ** r, rel=1e-12)

    def test_equator_is_geodesic(self):
        sl = ls.build_slice(2, 0.0)
        assert np.abs(sl.shape_spectrum().operator()).max() == 0.0

    def test_reference_values(self):
        sl = ls.build_slice(2, 1.0)
        assert sl.curvature_table().mean[1] == pytest.approx(0.76159, abs=1e-5)
        assert sl.curvature_table().mean[2] == pytest.approx(0.58002, abs=1e-5)

    def test_area_and_eigenvalues(self):
        sl = ls.build_slice(2, 0.7)
        assert sl.area() == pytest.approx(4 * np.pi * np.cosh(0.7) ** 2)
        assert sl.laplace_eigenvalue() == pytest.approx(2 / np.cosh(0.7) ** 2)
        assert sl.operator_eigenvalue(1) == pytest.approx(2 * np.tanh(0.7) / np.cosh(0.7) ** 2)
        assert sphere_area(2) == pytest.approx(4 * np.pi)
        assert sphere_area(3) == pytest.approx(2 * np.pi**2)

    def test_meshed_requires_n2(self):
        with pytest.raises(ValueError):
            ls.build_slice(3, 1.0).meshed(3)


class TestMeshedSliceGeometry:
    def test_shape_operator_exact(self, slice_mesh):
        surf = slice_mesh(1.0, 4)
        want = -np.tanh(1.0) * np.eye(2)
        assert np.abs(surf.cache.shape - want).max() < 1e-12
        spectrum = ls.shape_operator_at(surf, 17)
        assert spectrum.matrix == pytest.approx(want, abs=1e-12)

    def test_cache_invariants(self, slice_mesh):
        surf = slice_mesh(1.0, 4)
        c = surf.cache
        assert np.abs(mdot(c.vertices, c.vertices) - 1.0).max() < 1e-12
        assert np.abs(mdot(c.normal, c.normal) + 1.0).max() < 1e-9
        for a in range(2):
            assert np.abs(mdot(c.normal, c.frame[:, :, a])).max() < 1e-9
            assert np.abs(mdot(c.frame[:, :, a], c.frame[:, :, a]) - 1.0).max() < 1e-9
        # future-pointing: negative product against the future cone generator
        assert (mdot(c.normal, np.broadcast_to(AXIS, c.normal.shape)) < 0).all()

    def test_area_converges_quadratically(self):
        exact = 4 * np.pi * np.cosh(1.0) ** 2
        errs = [
            abs(ls.build_slice(2, 1.0).meshed(level).cache.area - exact) / exact
            for level in (3, 4, 5)
        ]
        orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
        assert (orders > 1.9).all()

    def test_chronology_of_future_slice(self, slice_mesh):
        surf = slice_mesh(1.0, 3)
        assert (mdot(surf.cache.vertices, np.broadcast_to(AXIS, surf.cache.vertices.shape)) < 0).all()

    def test_h2_positive_off_equator(self, slice_mesh):
        assert slice_mesh(1.0, 3).cache.mean[:, 2].min() > 0

    def test_rotated_axis_equivariance(self):
        axis = np.array([0.3, -0.1, 0.2, 1.2])
        axis = axis / np.sqrt(-ls.minkowski_inner(axis, axis))
        surf = ls.build_slice(2, 1.0, axis=axis).meshed(3)
        c = surf.cache
        assert np.abs(c.shape - (-np.tanh(1.0)) * np.eye(2)).max() < 1e-12
        assert np.abs(mdot(c.vertices, c.vertices) - 1.0).max() < 1e-12
        assert abs(c.area - 4 * np.pi * np.cosh(1.0) ** 2) / c.area < 5e-3
        eta = ls.support_function(surf, surf.axis)
        assert np.abs(eta + np.cosh(1.0)).max() < 1e-9


class TestGraphConstruction:
    def test_zero_amplitude_matches_slice(self, slice_mesh):
        graph = ls.build_graph(1.0, perturbations=(), level=3)
        assert graph.cache.vertices == pytest.approx(slice_mesh(1.0, 3).cache.vertices, abs=0)
        assert graph.is_slice

    def test_small_perturbation_is_spacelike(self, graph_mesh):
        surf = graph_mesh(1.0, ((2, 0, 0.05),), 4)
        assert surf.cache.metric_ratio > 1.0
        assert surf.cache.metric_ratio < 1.01

    def test_large_amplitude_fails_with_vertex(self):
        with pytest.raises(ls.GraphConstructionError, match="not spacelike at vertex") as err:
            ls.build_graph(1.0, perturbations=((1, 1, 10.0),), level=3)
        assert err.value.vertex is not None

    def test_vertex_count_matches_level(self, graph_mesh):
        surf = graph_mesh(1.0, ((2, 0, 0.05),), 4)
        assert surf.cache.vertices.shape[0] == 10 * 4**4 + 2

    def test_shape_eigenvalues_near_umbilic(self, graph_mesh):
        surf = graph_mesh(1.0, ((2, 0, 0.05),), 4)
        assert np.abs(surf.cache.shape_eigs + np.tanh(1.0)).max() < 0.15


class TestMeshShapeEstimate:
    def test_slice_convergence(self):
        errs = []
        for level in (3, 4, 5):
            surf = ls.build_slice(2, 1.0).meshed(level)
            est = shape_operator_mesh_estimate(surf)
            errs.append(np.abs(est - surf.cache.shape).max())
        orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
        assert (orders > 1.8).all()

    def test_graph_agreement(self, graph_mesh):
        surf = graph_mesh(1.0, ((2, 0, 0.05),), 4)
        est = shape_operator_mesh_estimate(surf)
        assert np.abs(est - surf.cache.shape).max() < 5e-3


class TestSupportFunction:
    def test_conformal_constant_on_slice(self, slice_mesh):
        surf = slice_mesh(1.0, 4)
        eta = ls.support_function(surf, surf.axis)
        assert np.abs(eta + np.cosh(1.0)).max() < 1e-9
        assert np.abs(eta - eta.mean()).max() < 1e-9

    def test_killing_boost_degree_one(self, slice_mesh):
        surf = slice_mesh(1.0, 4)
        spec = ls.KillingFieldSpec(u=np.eye(4)[0], v=AXIS, k=2.0)
        eta = ls.support_function(surf, spec)
        assert eta == pytest.approx(-2.0 * surf.cache.sphere_q[:, 0], abs=1e-12)
        assert abs(np.sum(surf.cache.weights * eta)) < 1e-10 * surf.cache.area

    def test_spatial_rotation_is_tangent(self, slice_mesh):
        surf = slice_mesh(1.0, 3)
        spec = ls.KillingFieldSpec(u=np.eye(4)[0], v=np.eye(4)[1], k=1.0)
        assert np.abs(ls.support_function(surf, spec)).max() < 1e-12

    def test_equator_unit_support(self):
        surf = ls.build_slice(2, 0.0).meshed(3)
        eta = ls.support_function(surf, surf.axis)
        assert np.abs(np.abs(eta) - 1.0).max() < 1e-12

    def test_ambient_field_tangency(self, slice_mesh):
        surf = slice_mesh(1.0, 3)
        v = ambient_field(surf, surf.axis)
        assert np.abs(mdot(v, surf.cache.vertices)).max() < 1e-12


class TestTangentialGradient:
    def test_constant_field_vanishes(self, slice_mesh):
        surf = slice_mesh(1.0, 3)
        grad = ls.tangential_gradient(surf, np.full(surf.cache.vertices.shape[0], 3.7))
        assert np.abs(grad).max() < 1e-12

    def test_degree_one_norm(self, slice_mesh):
        surf = slice_mesh(1.0, 5)
        q = surf.cache.sphere_q
        h = SphericalHarmonic(1, 0)
        grad = ls.tangential_gradient(surf, h.value(q))
        got = np.sqrt(np.abs(mdot(grad, grad)))
        want = np.linalg.norm(h.sphere_gradient(q), axis=1) / np.cosh(1.0)
        mask = want > 0.1 * want.max()
        assert np.abs(got[mask] - want[mask]).max() / want.max() < 0.05

    def test_linear_chart_field_first_order(self):
        errs = []
        for level in (3, 4):
            surf = ls.build_slice(2, 1.0).meshed(level)
            q = surf.cache.sphere_q
            values = 2.0 + 3.0 * q[:, 0] - q[:, 1]
            grad = ls.tangential_gradient(surf, values)
            direction = np.array([3.0, -1.0, 0.0])
            want_s2 = direction[None, :] - (q @ direction)[:, None] * q
            want = np.linalg.norm(want_s2, axis=1) / np.cosh(1.0)
            got = np.sqrt(np.abs(mdot(grad, grad)))
            errs.append(np.abs(got - want).max() / want.max())
        assert errs[1] < 0.7 * errs[0]


class TestMeshFileSurfaces:
    def test_roundtrip(self, tmp_path):
        surf = ls.build_graph(1.0, perturbations=((2, 0, 0.05), (3, 1, 0.01)), level=3)
        path = tmp_path / "surface.mesh"
        export_surface_mesh(path, surf)
        back, residual = surface_from_mesh_file(path)
        assert residual < 1e-10
        assert np.abs(back.cache.vertices - surf.cache.vertices).max() < 1e-10
        terms = dict(((l, m), a) for l, m, a in back.height.terms)
        assert terms[(2, 0)] == pytest.approx(0.05, abs=1e-10)
        assert terms[(3, 1)] == pytest.approx(0.01, abs=1e-10)
        assert back.height.constant == pytest.approx(1.0, abs=1e-10)

    def test_out_of_family_rejected(self, tmp_path):
        surf = ls.build_graph(1.0, perturbations=((8, 3, 0.02),), level=3)
        path = tmp_path / "foreign.mesh"
        export_surface_mesh(path, surf)
        with pytest.raises(ls.GraphConstructionError, match="harmonic height graph"):
            surface_from_mesh_file(path, fit_lmax=6)

    def test_off_quadric_rejected(self, tmp_path):
        surf = ls.build_graph(1.0, perturbations=(), level=3)
        bad = surf.mesh.vertices.copy()
        bad[5] *= 1.01
        from lorstab.mesh import TriangleMesh, save_mesh

        path = tmp_path / "off.mesh"
        save_mesh(path, TriangleMesh(vertices=bad, faces=surf.mesh.faces))
        with pytest.raises(ls.GraphConstructionError, match="hyperquadric"):
            surface_from_mesh_file(path)
