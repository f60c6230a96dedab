"""Weak-form discretization of the curvature operators and the constrained
eigenvalue solver.

The order-r operator div(P_r grad f) is assembled as a pair of sparse
symmetric forms on piecewise-linear mesh functions:

    K[f, g] ~ integral of <P_r grad f, grad g>        (stiffness)
    M[f, g] ~ integral of f g                         (consistent mass)

so that the constrained first eigenvalue is the minimum of (f'Kf)/(f'Mf)
over mean-zero f, matching the Rayleigh quotient of the stability
criterion after one integration by parts.  Constants are annihilated by K
up to roundoff; they are deflated, never part of the reported spectrum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix, csr_matrix
from scipy.sparse.linalg import splu

from .curvature import batched_newton
from .surfaces import GraphSurface

__all__ = [
    "OperatorPair",
    "EigenResult",
    "SolverError",
    "assemble",
    "first_eigenvalue_meanzero",
    "smallest_eigenvalues_meanzero",
    "weak_residual",
    "strong_form_check",
    "dump_operator",
]


class SolverError(RuntimeError):
    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class OperatorPair:
    """Stiffness/mass pair for one operator order on one surface."""

    stiffness: csr_matrix
    mass: csr_matrix
    r: int
    nvertices: int
    min_newton_eig: float   # smallest vertex eigenvalue of P_r (ellipticity bookkeeping)

    @property
    def elliptic(self) -> bool:
        return self.min_newton_eig > 0.0

    def lumped(self) -> np.ndarray:
        return np.asarray(self.mass.sum(axis=1)).ravel()


@dataclass(frozen=True)
class EigenResult:
    lambda1: float
    eigenfunction: np.ndarray
    iterations: int
    residual: float
    degenerate: bool = False
    indefinite: bool = False


def newton_vertex_matrices(surface: GraphSurface, r: int) -> np.ndarray:
    """P_r at every vertex, in each vertex frame; memoized on the surface."""
    key = ("newton", r)
    if key not in surface._memo:
        cache = surface.cache
        surface._memo[key] = batched_newton(cache.shape, cache.sigma, r)
    return surface._memo[key]


def assemble(surface: GraphSurface, r: int) -> OperatorPair:
    """Assemble the order-r stiffness/mass pair on a built surface.

    Per face, P_r is the arithmetic mean of the three vertex matrices after
    projection onto the face frame (first-order transport); stiffness
    entries integrate <P_r grad phi_i, grad phi_j> with the constant
    per-face gradients of the hat functions.
    """
    if not 0 <= r <= surface.n - 1:
        raise ValueError(f"order r={r} out of range [0, {surface.n - 1}]")
    key = ("operator", r)
    if key in surface._memo:
        return surface._memo[key]
    cache = surface.cache
    if cache.faces.size == 0:
        raise ValueError("surface mesh has no faces")

    p_vertex = newton_vertex_matrices(surface, r)
    min_eig = float(np.linalg.eigvalsh(p_vertex).min())

    j = np.array([1.0, 1.0, 1.0, -1.0])
    frames = cache.frame * j[None, :, None]            # (V, 4, 2), metric applied
    corner_frames = frames[cache.faces]                # (F, 3, 4, 2)
    transport = np.einsum("fcia,fib->fcab", corner_frames, cache.face_frame)
    p_corner = p_vertex[cache.faces]                   # (F, 3, 2, 2)
    p_face = np.einsum("fcab,fcad,fcde->fcbe", transport, p_corner, transport).mean(axis=1)
    p_face = (p_face + np.transpose(p_face, (0, 2, 1))) / 2.0

    k_local = np.einsum("f,fam,fab,fbn->fmn", cache.face_area, cache.face_grad, p_face, cache.face_grad)
    f = cache.faces.shape[0]
    rows = np.repeat(cache.faces, 3, axis=1).reshape(f, 3, 3)
    cols = np.tile(cache.faces, (1, 3)).reshape(f, 3, 3)
    nv = cache.vertices.shape[0]
    k = coo_matrix((k_local.ravel(), (rows.ravel(), cols.ravel())), shape=(nv, nv)).tocsr()
    k = (k + k.T) / 2.0

    pair = OperatorPair(stiffness=k, mass=cache.mass, r=r, nvertices=nv, min_newton_eig=min_eig)
    surface._memo[key] = pair
    return pair


def _project_meanzero(x: np.ndarray, mass_column: np.ndarray, total: float) -> np.ndarray:
    if x.ndim == 1:
        return x - (mass_column @ x) / total
    return x - np.outer(np.ones(x.shape[0]), mass_column @ x) / total


def weak_residual(op: OperatorPair, f: np.ndarray, mu: float) -> float:
    """Scaled eigen-defect |K f - mu M f| in the (diagonally approximated)
    inverse-mass norm, relative to the mass norm of f."""
    f = np.asarray(f, dtype=float)
    fnorm = float(np.sqrt(f @ (op.mass @ f)))
    if fnorm == 0.0:
        raise ValueError("zero function")
    rho = op.stiffness @ f - mu * (op.mass @ f)
    lump = op.lumped()
    return float(np.sqrt(np.sum(rho * rho / lump)) / fnorm)


def smallest_eigenvalues_meanzero(
    op: OperatorPair,
    k: int = 1,
    tol: float = 1e-8,
    maxiter: int = 500,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray, int, np.ndarray]:
    """Bottom-k generalized eigenpairs on the mean-zero subspace.

    Deflated shift-inverted subspace iteration with a direct sparse
    factorization; deterministic for a fixed seed.  Returns (values,
    vectors, iterations, residuals); vectors are mass-orthonormal and
    mean-zero with a fixed sign convention.
    """
    kk = op.stiffness
    mm = op.mass
    nv = op.nvertices
    mass_column = np.asarray(mm.sum(axis=1)).ravel()
    total = float(mass_column.sum())

    kscale = float(np.abs(kk.data).max()) if kk.nnz else 0.0
    if kscale < 1e-14 * max(1.0, float(np.abs(mm.data).max())):
        rng = np.random.default_rng(seed)
        x = _project_meanzero(rng.standard_normal(nv), mass_column, total)
        x /= np.sqrt(x @ (mm @ x))
        return np.zeros(k), np.tile(x, (k, 1)).T, 0, np.zeros(k)

    lam_scale = float(np.abs(kk.diagonal()).max() / mass_column.min())
    shift = 1e-5 * lam_scale
    rng = np.random.default_rng(seed)
    # buffer past k so the block boundary clears eigenvalue multiplets
    nb = min(nv - 1, k + max(2, (k + 1) // 2))
    x = rng.standard_normal((nv, nb))

    for attempt in range(4):
        lu = splu((kk + shift * mm).tocsc())
        y = _project_meanzero(x, mass_column, total)
        iterations = 0
        values = np.zeros(nb)
        residuals = np.full(k, np.inf)
        for iterations in range(1, maxiter + 1):
            y = lu.solve(mm @ y)
            y = _project_meanzero(y, mass_column, total)
            # mass-orthonormalize the block
            c = y.T @ (mm @ y)
            w, vecs = np.linalg.eigh(c)
            w = np.maximum(w, 1e-300)
            y = y @ (vecs / np.sqrt(w)) @ vecs.T
            # Rayleigh-Ritz on the block
            kp = y.T @ (kk @ y)
            values, rot = np.linalg.eigh((kp + kp.T) / 2.0)
            y = y @ rot
            residuals = np.array([weak_residual(op, y[:, i], values[i]) for i in range(k)])
            if residuals.max() < tol:
                break
        if values.min() > -0.5 * shift:
            break
        shift *= 100.0   # spectrum reaches below the shift window; widen and retry
    else:
        raise SolverError("could not bracket an indefinite spectrum", residual=float(residuals.max()))

    if residuals.max() >= tol:
        raise SolverError(
            f"eigensolver did not converge in {maxiter} iterations "
            f"(residual {residuals.max():.3e})",
            residual=float(residuals.max()),
        )
    vectors = y[:, :k]
    for i in range(k):
        lead = np.argmax(np.abs(vectors[:, i]))
        if vectors[lead, i] < 0:
            vectors[:, i] = -vectors[:, i]
    return values[:k], vectors, iterations, residuals


def first_eigenvalue_meanzero(
    op: OperatorPair,
    tol: float = 1e-8,
    maxiter: int = 500,
    seed: int = 0,
) -> EigenResult:
    """Constrained first eigenvalue: min of the Rayleigh quotient over
    mean-zero functions, with the constant kernel deflated."""
    kscale = float(np.abs(op.stiffness.data).max()) if op.stiffness.nnz else 0.0
    degenerate = kscale < 1e-14 * max(1.0, float(np.abs(op.mass.data).max()))
    values, vectors, iterations, residuals = smallest_eigenvalues_meanzero(
        op, k=1, tol=tol, maxiter=maxiter, seed=seed
    )
    lam = float(values[0])
    vec = vectors[:, 0]
    scale = max(1.0, float(np.abs(op.stiffness.diagonal()).max() / op.lumped().min()))
    return EigenResult(
        lambda1=lam,
        eigenfunction=vec,
        iterations=iterations,
        residual=float(residuals[0]),
        degenerate=degenerate,
        indefinite=lam < -tol * scale,
    )


def strong_form_check(surface: GraphSurface, r: int, test_field, battery=None) -> float:
    """Discrepancy between the analytic operator action on a slice and the
    assembled weak form, over a battery of test functions.

    ``test_field`` is a HarmonicField; only slices are supported, where the
    operator action reduces to a known multiple of the Laplace-Beltrami
    action on the fiber sphere.  Returns the max discrepancy relative to the
    largest pairing magnitude in the battery.
    """
    if not surface.is_slice:
        raise ValueError("analytic operator action is only closed-form on slices")
    from math import comb

    from .harmonics import HarmonicField

    slice_surface = surface.as_slice()
    cache = surface.cache
    pair = assemble(surface, r)
    factor = comb(surface.n - 1, r) * np.tanh(surface.s0) ** r
    radius2 = np.cosh(surface.s0) ** 2

    q = cache.sphere_q
    f_vals = test_field.value(q)
    lf = np.zeros_like(f_vals)
    for l, m, a in test_field.terms:
        from .harmonics import SphericalHarmonic

        lf += -a * l * (l + 1) * SphericalHarmonic(l, m).value(q)
    lf = factor * lf / radius2   # analytic action of the order-r operator

    if battery is None:
        battery = [HarmonicField(constant=1.0)] + [
            HarmonicField(terms=((l, m, 1.0),)) for l in range(1, 4) for m in range(-l, l + 1)
        ]
    lhs = []
    rhs = []
    for g in battery:
        g_vals = g.value(q)
        lhs.append(float(np.sum(cache.weights * g_vals * lf)))
        rhs.append(float(-(g_vals @ (pair.stiffness @ f_vals))))
    lhs = np.array(lhs)
    rhs = np.array(rhs)
    kinf = float(np.abs(pair.stiffness.data).max()) if pair.stiffness.nnz else 0.0
    floor = max(kinf * float(np.abs(f_vals).max()), 1e-30)
    scale = max(np.abs(lhs).max(), np.abs(rhs).max(), floor)
    return float(np.abs(lhs - rhs).max() / scale)


def dump_operator(op: OperatorPair, stem) -> None:
    """Write both matrices in coordinate text format, sorted by (row, col)."""
    from pathlib import Path

    for name, mat in (("stiffness", op.stiffness), ("mass", op.mass)):
        coo = mat.tocoo()
        order = np.lexsort((coo.col, coo.row))
        lines = [
            f"{coo.row[i]} {coo.col[i]} {format(coo.data[i], '.17g')}"
            for i in order
        ]
        Path(f"{stem}.{name}.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
