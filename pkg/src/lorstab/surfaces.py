"""Closed spacelike surfaces in the unit hyperquadric.

Two families: totally umbilical slices of the warped chart (any dimension,
fully closed-form) and height graphs over the unit 2-sphere (meshed).  For
graphs the first and second fundamental data are computed analytically from
the harmonic height expansion and sampled at mesh vertices; the mesh itself
only carries integration and finite elements.

Conventions fixed here and relied on everywhere else:
  * the unit normal N is future-pointing (its Lorentz product with the
    time axis is negative);
  * the shape operator is A = -(tangential part of the ambient derivative
    of N), so the slice at height s0 has A = -tanh(s0) * identity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb, gamma, pi
from pathlib import Path

import numpy as np

from .curvature import ShapeSpectrum, batched_elementary, curvature_table
from .harmonics import HarmonicField, harmonic_basis
from .lorentz import ConformalFieldSpec, KillingFieldSpec, orthonormal_completion
from .mesh import TriangleMesh, icosphere, load_mesh, validate_closed_oriented

__all__ = [
    "GraphConstructionError",
    "SliceSurface",
    "GraphSurface",
    "GeometryCache",
    "build_slice",
    "build_graph",
    "shape_operator_at",
    "shape_operator_mesh_estimate",
    "support_function",
    "tangential_gradient",
    "surface_from_mesh_file",
    "export_surface_mesh",
    "mdot",
    "sphere_area",
]

_FRAME_TOL = 1e-6


class GraphConstructionError(ValueError):
    """Construction failed; carries the worst offending vertex."""

    def __init__(self, message: str, vertex: int | None = None):
        super().__init__(message)
        self.vertex = vertex


def mdot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Batched Lorentz inner product along the last axis."""
    prod = a * b
    return prod[..., :-1].sum(axis=-1) - prod[..., -1]


def sphere_area(n: int) -> float:
    """Surface measure of the unit n-sphere."""
    return 2.0 * pi ** ((n + 1) / 2.0) / gamma((n + 1) / 2.0)


def _default_axis(n: int) -> np.ndarray:
    a = np.zeros(n + 2)
    a[-1] = 1.0
    return a


@dataclass(frozen=True)
class SliceSurface:
    """Totally umbilical leaf of the warped chart at height s0 (any n)."""

    n: int
    s0: float
    axis: ConformalFieldSpec

    @property
    def umbilicity_factor(self) -> float:
        return -np.tanh(self.s0)

    @property
    def intrinsic_radius(self) -> float:
        return float(np.cosh(self.s0))

    def shape_spectrum(self) -> ShapeSpectrum:
        return ShapeSpectrum(n=self.n, eigenvalues=(self.umbilicity_factor,) * self.n)

    def curvature_table(self):
        """Closed form: mean curvature of order r equals tanh(s0)^r."""
        return curvature_table(self.shape_spectrum())

    def area(self) -> float:
        return sphere_area(self.n) * np.cosh(self.s0) ** self.n

    def laplace_eigenvalue(self, l: int = 1) -> float:
        """Laplace-Beltrami eigenvalue l(l+n-1) of the round sphere, scaled to radius cosh(s0)."""
        return l * (l + self.n - 1) / np.cosh(self.s0) ** 2

    def operator_eigenvalue(self, r: int, l: int = 1) -> float:
        """Closed-form eigenvalue of the order-r operator on the slice."""
        return comb(self.n - 1, r) * np.tanh(self.s0) ** r * self.laplace_eigenvalue(l)

    def meshed(self, level: int) -> "GraphSurface":
        if self.n != 2:
            raise ValueError("meshed slices are only available for n = 2")
        return build_graph(self.s0, perturbations=(), level=level, axis=self.axis.a)


@dataclass
class GeometryCache:
    """Per-vertex and per-face geometric data of a built graph surface."""

    sphere_q: np.ndarray          # (V, 3) directions on the unit sphere
    vertices: np.ndarray          # (V, 4) ambient positions
    normal: np.ndarray            # (V, 4) future unit normals
    frame: np.ndarray             # (V, 4, 2) orthonormal tangent frames
    shape: np.ndarray             # (V, 2, 2) shape operator in the frame
    shape_eigs: np.ndarray        # (V, 2) principal curvatures
    sigma: np.ndarray             # (V, 3) elementary symmetric values
    mean: np.ndarray              # (V, 3) normalized mean curvatures
    weights: np.ndarray           # (V,) lumped area weights
    area: float
    faces: np.ndarray             # (F, 3)
    face_area: np.ndarray         # (F,)
    face_frame: np.ndarray        # (F, 4, 2)
    face_grad: np.ndarray         # (F, 2, 3) hat-function gradients in the face frame
    mass: "object"                # scipy csr, consistent mass matrix
    metric_ratio: float           # max induced-metric anisotropy over vertices


@dataclass
class GraphSurface:
    """Height graph over the unit 2-sphere, embedded in the hyperquadric."""

    height: HarmonicField
    axis: ConformalFieldSpec
    frame_map: np.ndarray         # Lorentz frame with the axis as time direction
    mesh: TriangleMesh
    cache: GeometryCache
    _memo: dict = field(default_factory=dict, repr=False)

    n: int = 2

    @property
    def s0(self) -> float:
        return self.height.constant

    @property
    def is_slice(self) -> bool:
        return not self.height.terms

    @property
    def level(self) -> int | None:
        return self.mesh.level

    def as_slice(self) -> SliceSurface:
        if not self.is_slice:
            raise ValueError("surface carries nonzero perturbations")
        return SliceSurface(n=2, s0=self.s0, axis=self.axis)


def _vertex_sphere_frames(q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal tangent frames on the unit sphere from projected fixed
    axis pairs, falling back to the next pair near degeneracy."""
    v = q.shape[0]
    w1 = np.zeros((v, 3))
    w2 = np.zeros((v, 3))
    done = np.zeros(v, dtype=bool)
    for i, j in ((0, 1), (1, 2), (2, 0)):
        todo = ~done
        if not todo.any():
            break
        cand1 = -q[todo, i : i + 1] * q[todo]
        cand1[:, i] += 1.0
        n1 = np.linalg.norm(cand1, axis=1)
        cand2 = -q[todo, j : j + 1] * q[todo]
        cand2[:, j] += 1.0
        safe1 = n1 >= _FRAME_TOL
        cand1[safe1] /= n1[safe1, None]
        cand2 -= np.einsum("vi,vi->v", cand2, cand1)[:, None] * cand1
        n2 = np.linalg.norm(cand2, axis=1)
        ok = safe1 & (n2 >= _FRAME_TOL)
        cand2[ok] /= n2[ok, None]
        idx = np.flatnonzero(todo)[ok]
        w1[idx] = cand1[ok]
        w2[idx] = cand2[ok]
        done[idx] = True
    if not done.all():
        raise GraphConstructionError(
            f"degenerate tangent frame at vertex {int(np.flatnonzero(~done)[0])}",
            vertex=int(np.flatnonzero(~done)[0]),
        )
    return w1, w2


def _face_geometry(vertices: np.ndarray, faces: np.ndarray):
    """Lorentz edge data of flat faces: areas, orthonormal face frames,
    and hat-function gradients expressed in those frames."""
    p0 = vertices[faces[:, 0]]
    e1 = vertices[faces[:, 1]] - p0
    e2 = vertices[faces[:, 2]] - p0
    g11 = mdot(e1, e1)
    g12 = mdot(e1, e2)
    g22 = mdot(e2, e2)
    det = g11 * g22 - g12 * g12
    if (g11 <= 0).any() or (det <= 0).any():
        worst = int(np.argmin(np.minimum(g11, det)))
        raise GraphConstructionError(
            f"face {worst} is not spacelike (degenerate induced metric)", vertex=int(faces[worst, 0])
        )
    area = 0.5 * np.sqrt(det)
    l1 = np.sqrt(g11)
    f1 = e1 / l1[:, None]
    t2 = e2 - (g12 / g11)[:, None] * e1
    l2 = np.sqrt(g22 - g12 * g12 / g11)
    f2 = t2 / l2[:, None]
    # 2D vertex coordinates in the (f1, f2) frame: (0,0), (l1,0), (g12/l1, l2)
    x1, y1 = l1, np.zeros_like(l1)
    x2, y2 = g12 / l1, l2
    det2 = x1 * y2 - x2 * y1
    grad = np.empty((faces.shape[0], 2, 3))
    grad[:, 0, 1] = y2 / det2
    grad[:, 1, 1] = -x2 / det2
    grad[:, 0, 2] = -y1 / det2
    grad[:, 1, 2] = x1 / det2
    grad[:, :, 0] = -grad[:, :, 1] - grad[:, :, 2]
    face_frame = np.stack([f1, f2], axis=2)
    return area, face_frame, grad


def _consistent_mass(faces: np.ndarray, area: np.ndarray, nv: int):
    from scipy.sparse import coo_matrix

    f = faces.shape[0]
    local = (np.ones((3, 3)) + np.eye(3)) / 12.0
    rows = np.repeat(faces, 3, axis=1).reshape(f, 3, 3)
    cols = np.tile(faces, (1, 3)).reshape(f, 3, 3)
    vals = area[:, None, None] * local[None]
    m = coo_matrix((vals.ravel(), (rows.ravel(), cols.ravel())), shape=(nv, nv)).tocsr()
    return (m + m.T) / 2.0


def build_graph(
    s0: float,
    perturbations=(),
    level: int = 4,
    axis: np.ndarray | None = None,
    base: tuple[np.ndarray, np.ndarray] | None = None,
) -> GraphSurface:
    """Build the graph surface with height s0 + sum of harmonic perturbations.

    ``perturbations`` is a sequence of (l, m, amplitude).  The surface must be
    spacelike at every vertex; otherwise construction fails naming the worst
    vertex.  ``base`` overrides the icosphere with explicit (points, faces).
    """
    height = HarmonicField(constant=float(s0), terms=tuple(perturbations))
    axis = _default_axis(2) if axis is None else np.asarray(axis, dtype=float)
    spec = ConformalFieldSpec(a=axis)
    frame_map = orthonormal_completion(axis)

    if base is None:
        q, faces = icosphere(level)
        mesh_level = level
    else:
        q, faces = base
        q = np.asarray(q, dtype=float)
        faces = np.asarray(faces, dtype=int)
        validate_closed_oriented(faces, q.shape[0])
        mesh_level = None

    u = height.value(q)
    g = height.sphere_gradient(q)
    hs = height.sphere_hessian(q)

    phi = np.cosh(u)
    sinh_u = np.sinh(u)
    gnorm2 = np.einsum("vi,vi->v", g, g)
    margin = phi * phi - gnorm2
    if (margin <= 0).any():
        worst = int(np.argmin(margin))
        raise GraphConstructionError(
            f"surface is not spacelike at vertex {worst}: |grad u| = "
            f"{np.sqrt(gnorm2[worst]):.6g} >= cosh(u) = {phi[worst]:.6g}",
            vertex=worst,
        )
    metric_ratio = float(np.max(phi * phi / margin))

    w1, w2 = _vertex_sphere_frames(q)
    u1 = np.einsum("vi,vi->v", g, w1)
    u2 = np.einsum("vi,vi->v", g, w2)
    h11 = np.einsum("vi,vij,vj->v", w1, hs, w1)
    h12 = np.einsum("vi,vij,vj->v", w1, hs, w2)
    h22 = np.einsum("vi,vij,vj->v", w2, hs, w2)

    v = q.shape[0]
    alpha = phi / np.sqrt(margin)
    tanh_u = sinh_u / phi

    def chart_vec(spatial: np.ndarray, time: np.ndarray) -> np.ndarray:
        return np.concatenate([spatial, time[:, None]], axis=1)

    x1 = chart_vec(sinh_u[:, None] * u1[:, None] * q + phi[:, None] * w1, phi * u1)
    x2 = chart_vec(sinh_u[:, None] * u2[:, None] * q + phi[:, None] * w2, phi * u2)
    normal_can = alpha[:, None] * chart_vec(sinh_u[:, None] * q + g / phi[:, None], phi)
    verts_can = chart_vec(phi[:, None] * q, sinh_u)

    # induced metric and second fundamental form in the (w1, w2) chart frame
    g11m = phi * phi - u1 * u1
    g12m = -u1 * u2
    g22m = phi * phi - u2 * u2
    b = np.empty((v, 2, 2))
    b[:, 0, 0] = alpha * (-h11 - sinh_u * phi + 2.0 * tanh_u * u1 * u1)
    b[:, 0, 1] = b[:, 1, 0] = alpha * (-h12 + 2.0 * tanh_u * u1 * u2)
    b[:, 1, 1] = alpha * (-h22 - sinh_u * phi + 2.0 * tanh_u * u2 * u2)

    l11 = np.sqrt(g11m)
    l21 = g12m / l11
    l22 = np.sqrt(g22m - l21 * l21)
    # A = L^-1 B L^-T in the orthonormalized frame; E = [X1, X2] L^-T
    inv_l = np.zeros((v, 2, 2))
    inv_l[:, 0, 0] = 1.0 / l11
    inv_l[:, 1, 0] = -l21 / (l11 * l22)
    inv_l[:, 1, 1] = 1.0 / l22
    shape = np.einsum("vab,vbc,vdc->vad", inv_l, b, inv_l)
    shape = (shape + np.transpose(shape, (0, 2, 1))) / 2.0
    frame_can = np.einsum("vib,vab->via", np.stack([x1, x2], axis=2), inv_l)

    # carry everything to ambient coordinates of the requested axis
    verts = verts_can @ frame_map.T
    normal = normal_can @ frame_map.T
    frame = np.einsum("ij,vja->via", frame_map, frame_can)

    eigs = np.linalg.eigvalsh(shape)
    sigma = batched_elementary(eigs)
    mean = sigma * np.array([1.0, -0.5, 1.0])[None, :]

    face_area, face_frame, face_grad = _face_geometry(verts, faces)
    mass = _consistent_mass(faces, face_area, v)
    weights = np.asarray(mass.sum(axis=1)).ravel()

    cache = GeometryCache(
        sphere_q=q,
        vertices=verts,
        normal=normal,
        frame=frame,
        shape=shape,
        shape_eigs=eigs,
        sigma=sigma,
        mean=mean,
        weights=weights,
        area=float(weights.sum()),
        faces=faces,
        face_area=face_area,
        face_frame=face_frame,
        face_grad=face_grad,
        mass=mass,
        metric_ratio=metric_ratio,
    )
    tri = TriangleMesh(vertices=verts, faces=faces, level=mesh_level)
    return GraphSurface(height=height, axis=spec, frame_map=frame_map, mesh=tri, cache=cache)


def build_slice(n: int, s0: float, axis: np.ndarray | None = None) -> SliceSurface:
    """Totally umbilical slice at height s0; closed-form geometry for any n."""
    axis = _default_axis(n) if axis is None else np.asarray(axis, dtype=float)
    return SliceSurface(n=n, s0=float(s0), axis=ConformalFieldSpec(a=axis))


def shape_operator_at(surface: GraphSurface, vertex: int) -> ShapeSpectrum:
    """Shape operator at one vertex, in the cached orthonormal frame."""
    return ShapeSpectrum(n=2, matrix=surface.cache.shape[vertex])


def _vertex_adjacency(faces: np.ndarray, nv: int) -> list[np.ndarray]:
    neigh: list[set[int]] = [set() for _ in range(nv)]
    for a, b, c in faces:
        neigh[a].update((b, c))
        neigh[b].update((a, c))
        neigh[c].update((a, b))
    return [np.array(sorted(s), dtype=int) for s in neigh]


def shape_operator_mesh_estimate(surface: GraphSurface) -> np.ndarray:
    """Discrete second-fundamental-form fit per vertex, (V, 2, 2).

    Independent of the analytic path: fits II(t, t) = 2 <N, p_j - p_i> over
    the one-ring in the cached tangent frame.  Used to cross-check the
    analytic shape operators.
    """
    cache = surface.cache
    nv = cache.vertices.shape[0]
    adjacency = _vertex_adjacency(cache.faces, nv)
    j = np.array([1.0, 1.0, 1.0, -1.0])
    out = np.empty((nv, 2, 2))
    for i in range(nv):
        delta = cache.vertices[adjacency[i]] - cache.vertices[i]
        t = (delta * j) @ cache.frame[i]          # (k, 2) tangential components
        rhs = 2.0 * mdot(delta, np.broadcast_to(cache.normal[i], delta.shape))
        design = np.stack([t[:, 0] ** 2, 2.0 * t[:, 0] * t[:, 1], t[:, 1] ** 2], axis=1)
        coef, *_ = np.linalg.lstsq(design, rhs, rcond=None)
        out[i] = [[coef[0], coef[1]], [coef[1], coef[2]]]
    return out


def support_function(surface: GraphSurface, spec: ConformalFieldSpec | KillingFieldSpec) -> np.ndarray:
    """Normal component of the ambient field along the surface, per vertex."""
    cache = surface.cache
    p = cache.vertices
    if isinstance(spec, ConformalFieldSpec):
        pa = mdot(p, spec.a[None, :])
        field_values = spec.a[None, :] - pa[:, None] * p
    else:
        up = mdot(p, spec.u[None, :])
        vp = mdot(p, spec.v[None, :])
        field_values = spec.k * (up[:, None] * spec.v[None, :] - vp[:, None] * spec.u[None, :])
    return mdot(field_values, cache.normal)


def ambient_field(surface: GraphSurface, spec: ConformalFieldSpec | KillingFieldSpec) -> np.ndarray:
    """Field values at the vertices, (V, 4)."""
    p = surface.cache.vertices
    if isinstance(spec, ConformalFieldSpec):
        pa = mdot(p, spec.a[None, :])
        return spec.a[None, :] - pa[:, None] * p
    up = mdot(p, spec.u[None, :])
    vp = mdot(p, spec.v[None, :])
    return spec.k * (up[:, None] * spec.v[None, :] - vp[:, None] * spec.u[None, :])


def tangential_gradient(surface: GraphSurface, values: np.ndarray) -> np.ndarray:
    """Piecewise-linear surface gradient of a vertex field, averaged onto
    vertices, as ambient tangent vectors (V, 4)."""
    cache = surface.cache
    faces = cache.faces
    fvals = values[faces]                                    # (F, 3)
    comp = np.einsum("fam,fm->fa", cache.face_grad, fvals)   # (F, 2) in the face frame
    grad_face = np.einsum("fia,fa->fi", cache.face_frame, comp)  # (F, 4)
    nv = values.shape[0]
    acc = np.zeros((nv, 4))
    wacc = np.zeros(nv)
    w = cache.face_area
    for corner in range(3):
        np.add.at(acc, faces[:, corner], grad_face * w[:, None])
        np.add.at(wacc, faces[:, corner], w)
    acc /= wacc[:, None]
    j = np.array([1.0, 1.0, 1.0, -1.0])
    comps = np.einsum("vi,via->va", acc * j, cache.frame)
    return np.einsum("via,va->vi", cache.frame, comps)


def surface_from_mesh_file(
    path: str | Path,
    axis: np.ndarray | None = None,
    fit_lmax: int = 6,
    fit_tol: float = 1e-6,
) -> tuple[GraphSurface, float]:
    """Load a mesh and rebuild it as a member of the harmonic height family.

    The vertex heights over the axis sphere are least-squares fitted by
    harmonics up to ``fit_lmax``; returns the surface (using the file's own
    connectivity) and the max fit residual.  Meshes that are not graphs in
    the family within ``fit_tol`` are rejected.
    """
    tri = load_mesh(path)
    axis = _default_axis(2) if axis is None else np.asarray(axis, dtype=float)
    frame_map = orthonormal_completion(axis)
    j = np.diag([1.0, 1.0, 1.0, -1.0])
    inv = j @ frame_map.T @ j
    can = tri.vertices @ inv.T
    norms = mdot(tri.vertices, tri.vertices)
    if np.abs(norms - 1.0).max() > 1e-8:
        worst = int(np.argmax(np.abs(norms - 1.0)))
        raise GraphConstructionError(f"vertex {worst} is not on the unit hyperquadric", vertex=worst)
    s = np.arcsinh(can[:, 3])
    q = can[:, :3] / np.cosh(s)[:, None]
    q /= np.linalg.norm(q, axis=1, keepdims=True)

    basis = harmonic_basis(fit_lmax, l_min=1)
    design = np.column_stack([np.ones(len(s))] + [h.value(q) for h in basis])
    coef, *_ = np.linalg.lstsq(design, s, rcond=None)
    residual = float(np.abs(design @ coef - s).max())
    if residual > fit_tol:
        worst = int(np.argmax(np.abs(design @ coef - s)))
        raise GraphConstructionError(
            f"mesh is not a harmonic height graph (fit residual {residual:.3g} "
            f"at vertex {worst}, limit {fit_tol:.3g})",
            vertex=worst,
        )
    terms = tuple(
        (h.l, h.m, float(a)) for h, a in zip(basis, coef[1:]) if abs(a) > 1e-12
    )
    surf = build_graph(float(coef[0]), perturbations=terms, axis=axis, base=(q, tri.faces))
    return surf, residual


def export_surface_mesh(path: str | Path, surface: GraphSurface) -> None:
    from .mesh import save_mesh

    save_mesh(path, surface.mesh)
