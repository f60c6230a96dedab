"""Stability harness: hypothesis checks, the constant-vs-eigenvalue gap,
the second-variation quadratic form, and the field identity checks.

The verdict is three-valued.  The eigenvalue criterion is an equivalence
only under its hypotheses (positive constant next-order mean curvature,
constant comparison field, surface on one side of the equator, conformal
divergence nonvanishing), so hypothesis failure is reported as its own
outcome rather than mapped to "unstable".
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np
from scipy.sparse import coo_matrix

from .curvature import batched_stability_constant
from .fem import EigenResult, OperatorPair, assemble, first_eigenvalue_meanzero, weak_residual
from .lorentz import ConformalFieldSpec, KillingFieldSpec
from .surfaces import GraphSurface, ambient_field, mdot, support_function, tangential_gradient

__all__ = [
    "Tolerances",
    "StabilityReport",
    "QuadraticFormSample",
    "DegenerateFieldError",
    "stability_field",
    "analyze",
    "jacobi_second_variation",
    "killing_eigen_check",
    "conformal_identity_check",
]

_PSI_FLOOR = 1e-10


class DegenerateFieldError(ValueError):
    """The ambient field is tangent everywhere; its support function vanishes."""


@dataclass(frozen=True)
class Tolerances:
    gap: float = 2e-2          # relative gap budget at level 5; halves per level
    constancy: float = 1e-6
    solver: float = 1e-8
    seed: int = 0

    def gap_at_level(self, level: int | None) -> float:
        if level is None:
            return self.gap
        return self.gap * 2.0 ** (5 - level)


@dataclass(frozen=True)
class StabilityReport:
    r: int
    level: int | None
    h_next_mean: float
    h_next_min: float
    h_next_max: float
    h_next_residual: float
    lambda_mean: float
    lambda_residual: float
    eigen: EigenResult
    gap: float
    min_newton_eig: float
    h2_positive: bool
    has_elliptic_point: bool
    psi_min_abs: float
    chronology: str
    verdict: str
    tol_gap: float
    tol_gap_effective: float
    tol_constancy: float
    tol_solver: float

    @property
    def lambda1(self) -> float:
        return self.eigen.lambda1


@dataclass(frozen=True)
class QuadraticFormSample:
    values: np.ndarray            # mean-zero test function (projected)
    value: float                  # second-variation quadratic form
    scale: float                  # magnitude of the two competing terms
    projected_mass_fraction: float


def stability_field(surface: GraphSurface, r: int, c: float = 1.0) -> np.ndarray:
    """Per-vertex comparison constant c tr(P_r) - tr(A^2 P_r)."""
    key = ("stability_field", r, c)
    if key not in surface._memo:
        surface._memo[key] = batched_stability_constant(surface.cache.shape, c, r)
    return surface._memo[key]


def _weighted_mean(values: np.ndarray, weights: np.ndarray) -> float:
    return float(np.sum(values * weights) / np.sum(weights))


def _constancy_residual(values: np.ndarray, mean: float) -> float:
    return float(np.abs(values - mean).max() / max(abs(mean), 1e-30))


def _chronology(surface: GraphSurface) -> tuple[str, np.ndarray]:
    ap = mdot(surface.cache.vertices, surface.axis.a[None, :])
    if (ap < -_PSI_FLOOR).all():
        return "future", ap
    if (ap > _PSI_FLOOR).all():
        return "past", ap
    return "mixed", ap


def analyze(surface: GraphSurface, r: int, tolerances: Tolerances = Tolerances()) -> StabilityReport:
    """Full stability analysis of a built surface at order r (ambient c = 1)."""
    cache = surface.cache
    if not 0 <= r <= surface.n - 1:
        raise ValueError(f"order r={r} out of range [0, {surface.n - 1}]")

    h_next = cache.mean[:, r + 1]
    h_next_mean = _weighted_mean(h_next, cache.weights)
    h_next_residual = _constancy_residual(h_next, h_next_mean)

    lam_field = stability_field(surface, r)
    lam_mean = _weighted_mean(lam_field, cache.weights)
    lam_residual = _constancy_residual(lam_field, lam_mean)

    pair = assemble(surface, r)
    eigen = first_eigenvalue_meanzero(pair, tol=tolerances.solver, seed=tolerances.seed)
    gap = lam_mean - eigen.lambda1

    h2 = cache.mean[:, 2]
    eigs = cache.shape_eigs
    definite = np.logical_or((eigs > 0).all(axis=1), (eigs < 0).all(axis=1))
    chronology, ap = _chronology(surface)
    psi_min_abs = float(np.abs(ap).min())   # conformal factor is -<p, a>

    tol_gap_eff = tolerances.gap_at_level(surface.level)
    hypotheses_ok = (
        h_next.min() > 0.0
        and h_next_residual <= tolerances.constancy
        and lam_residual <= tolerances.constancy
        and chronology in ("future", "past")
        and psi_min_abs > _PSI_FLOOR
    )
    if not hypotheses_ok:
        verdict = "hypotheses-violated"
    elif abs(gap) <= tol_gap_eff * max(1.0, abs(lam_mean)):
        verdict = "stable"
    else:
        verdict = "unstable"

    return StabilityReport(
        r=r,
        level=surface.level,
        h_next_mean=h_next_mean,
        h_next_min=float(h_next.min()),
        h_next_max=float(h_next.max()),
        h_next_residual=h_next_residual,
        lambda_mean=lam_mean,
        lambda_residual=lam_residual,
        eigen=eigen,
        gap=gap,
        min_newton_eig=pair.min_newton_eig,
        h2_positive=bool(h2.min() > 0.0),
        has_elliptic_point=bool(definite.any()),
        psi_min_abs=psi_min_abs,
        chronology=chronology,
        verdict=verdict,
        tol_gap=tolerances.gap,
        tol_gap_effective=tol_gap_eff,
        tol_constancy=tolerances.constancy,
        tol_solver=tolerances.solver,
    )


def weighted_mass_matrix(surface: GraphSurface, vertex_weights: np.ndarray):
    """Consistent mass matrix with a per-face weight (corner average)."""
    cache = surface.cache
    faces = cache.faces
    w_face = vertex_weights[faces].mean(axis=1) * cache.face_area
    local = (np.ones((3, 3)) + np.eye(3)) / 12.0
    f = faces.shape[0]
    rows = np.repeat(faces, 3, axis=1).reshape(f, 3, 3)
    cols = np.tile(faces, (1, 3)).reshape(f, 3, 3)
    vals = w_face[:, None, None] * local[None]
    nv = cache.vertices.shape[0]
    m = coo_matrix((vals.ravel(), (rows.ravel(), cols.ravel())), shape=(nv, nv)).tocsr()
    return (m + m.T) / 2.0


def jacobi_second_variation(surface: GraphSurface, r: int, values: np.ndarray) -> QuadraticFormSample:
    """Second variation of the constrained functional at a mean-zero function.

    (r+1) * [ - f'Kf + f' M_lam f ] with the comparison field integrated
    consistently; the input is projected onto mean-zero first and the
    removed mass fraction recorded.
    """
    cache = surface.cache
    values = np.asarray(values, dtype=float)
    total = float(cache.weights.sum())
    mean = float(cache.weights @ values) / total
    norm_before = float(np.abs(values).max())
    projected = values - mean
    if np.abs(projected).max() <= 1e-14 * max(1.0, norm_before):
        raise ValueError("test function vanishes after mean-zero projection")
    frac = abs(mean) / max(norm_before, 1e-30)

    pair = assemble(surface, r)
    lam_field = stability_field(surface, r)
    m_lam = weighted_mass_matrix(surface, lam_field)
    quad_k = float(projected @ (pair.stiffness @ projected))
    quad_lam = float(projected @ (m_lam @ projected))
    value = (r + 1) * (-quad_k + quad_lam)
    scale = (r + 1) * max(abs(quad_k), abs(quad_lam), 1e-30)
    return QuadraticFormSample(values=projected, value=value, scale=scale, projected_mass_fraction=frac)


def killing_eigen_check(surface: GraphSurface, r: int, spec: KillingFieldSpec,
                        solver_tol: float = 1e-8) -> float:
    """Weak eigen-defect of the Killing support function at the comparison constant."""
    eta = support_function(surface, spec)
    field = ambient_field(surface, spec)
    field_scale = float(np.abs(field).max())
    if float(np.abs(eta).max()) <= 1e-10 * max(field_scale, 1e-30):
        raise DegenerateFieldError("Killing field is tangent everywhere; support function vanishes")
    pair = assemble(surface, r)
    lam_mean = _weighted_mean(stability_field(surface, r), surface.cache.weights)
    return weak_residual(pair, eta, lam_mean)


def conformal_identity_check(surface: GraphSurface, r: int, spec: ConformalFieldSpec) -> float:
    """Pointwise residual of the conformal support-function identity.

    Both sides are paired weakly against hat functions, converted back to
    point values through the lumped mass, and compared relative to the
    largest constituent term.  Constancy of the next-order curvature is not
    required; the gradient term is evaluated with the discrete tangential
    gradient.
    """
    cache = surface.cache
    n = surface.n
    b_r = (n - r) * comb(n, r)

    eta = support_function(surface, spec)
    p = cache.vertices
    psi = -mdot(p, spec.a[None, :])
    n_psi = -mdot(cache.normal, spec.a[None, :])
    h_r = cache.mean[:, r]
    h_next = cache.mean[:, r + 1]
    v_field = ambient_field(surface, spec)
    grad_h = tangential_gradient(surface, h_next)
    v_grad = mdot(v_field, grad_h)

    lam_field = stability_field(surface, r)      # c tr(P_r) - tr(A^2 P_r)
    term1 = -lam_field * eta                     # {tr(A^2 P_r) - c tr(P_r)} eta
    term2 = -b_r * h_r * n_psi
    term3 = b_r * h_next * psi
    term4 = (b_r / (r + 1)) * v_grad
    rhs_values = term1 + term2 + term3 + term4

    pair = assemble(surface, r)
    lhs_weak = -(pair.stiffness @ eta)
    rhs_weak = pair.mass @ rhs_values
    defect = (lhs_weak - rhs_weak) / cache.weights
    scale = float((np.abs(term1) + np.abs(term2) + np.abs(term3) + np.abs(term4)).max())
    return float(np.abs(defect).max() / max(scale, 1e-30))
