"""Pointwise algebra of the shape operator.

Elementary symmetric functions of principal curvatures, normalized mean
curvatures, Newton transformations and their trace identities, the
stability constant entering the eigenvalue criterion, and the integrand
polynomial / constant of the generalized area functional.  Everything here
is exact value-level algebra, valid for any dimension ``n`` and any ambient
curvature ``c``; no mesh or discretization enters.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

__all__ = [
    "ShapeSpectrum",
    "CurvatureTable",
    "NewtonTransform",
    "elementary_symmetric",
    "curvature_table",
    "newton_transform",
    "newton_traces",
    "stability_constant",
    "stability_constant_binomial",
    "r_area_integrand",
    "variation_constant",
]

_SYM_RTOL = 1e-12
_CHARPOLY_RTOL = 1e-10


@dataclass(frozen=True)
class ShapeSpectrum:
    """Shape operator at one point: eigenvalues and/or a symmetric matrix.

    Either representation may be given; when both are present they must
    describe the same operator (matching characteristic polynomials).
    The matrix is expressed in an orthonormal tangent frame.
    """

    n: int
    eigenvalues: tuple[float, ...] | None = None
    matrix: np.ndarray | None = None

    def __post_init__(self):
        if self.eigenvalues is None and self.matrix is None:
            raise ValueError("ShapeSpectrum needs eigenvalues or a matrix")
        if self.eigenvalues is not None:
            object.__setattr__(self, "eigenvalues", tuple(float(v) for v in self.eigenvalues))
            if len(self.eigenvalues) != self.n:
                raise ValueError(f"expected {self.n} eigenvalues, got {len(self.eigenvalues)}")
        if self.matrix is not None:
            m = np.asarray(self.matrix, dtype=float)
            if m.shape != (self.n, self.n):
                raise ValueError(f"matrix shape {m.shape} does not match n={self.n}")
            scale = max(1.0, float(np.abs(m).max()))
            if float(np.abs(m - m.T).max()) > _SYM_RTOL * scale:
                raise ValueError("shape operator matrix is not symmetric")
            object.__setattr__(self, "matrix", (m + m.T) / 2.0)
        if self.eigenvalues is not None and self.matrix is not None:
            got = _charpoly(np.array(self.eigenvalues))
            want = _charpoly(np.linalg.eigvalsh(self.matrix))
            scale = np.maximum(1.0, np.abs(want))
            if float(np.abs(got - want).max() / scale.max()) > _CHARPOLY_RTOL:
                raise ValueError("eigenvalue and matrix representations disagree")

    def values(self) -> np.ndarray:
        """Principal curvatures, ascending."""
        if self.eigenvalues is not None:
            return np.sort(np.array(self.eigenvalues, dtype=float))
        return np.linalg.eigvalsh(self.matrix)

    def operator(self) -> np.ndarray:
        """The operator as a symmetric matrix (diagonal if only eigenvalues given)."""
        if self.matrix is not None:
            return self.matrix
        return np.diag(self.eigenvalues)


@dataclass(frozen=True)
class CurvatureTable:
    """All orders at once: elementary symmetric values, normalized mean
    curvatures, and the integer trace factors (n-r)*C(n,r)."""

    n: int
    elementary: tuple[float, ...]      # sigma_r of the principal curvatures, r = 0..n
    mean: tuple[float, ...]            # (-1)^r * elementary[r] / C(n,r)
    trace_factor: tuple[int, ...]      # (n-r)*C(n,r), r = 0..n


@dataclass(frozen=True)
class NewtonTransform:
    """One Newton transformation: order and matrix in the frame of A."""

    r: int
    matrix: np.ndarray


def _charpoly(values: np.ndarray) -> np.ndarray:
    # coefficients (sigma_0..sigma_n) of prod (t + v_i), used only for the
    # representation-consistency check
    return np.array([elementary_symmetric(values, r) for r in range(len(values) + 1)])


def elementary_symmetric(values, r: int) -> float:
    """r-th elementary symmetric polynomial of ``values``.

    Computed by the one-pass coefficient recurrence of prod_i (1 + v_i t)
    (numerically stable; no subset enumeration).  sigma_0 = 1.
    """
    values = np.asarray(values, dtype=float)
    n = values.size
    if not 0 <= r <= n:
        raise ValueError(f"order r={r} out of range [0, {n}]")
    coeff = np.zeros(r + 1)
    coeff[0] = 1.0
    top = 0
    for v in values:
        top = min(top + 1, r)
        coeff[1 : top + 1] += v * coeff[0:top]
    return float(coeff[r])


def _elementary_all(values: np.ndarray) -> np.ndarray:
    """sigma_0..sigma_n in one pass."""
    n = values.size
    coeff = np.zeros(n + 1)
    coeff[0] = 1.0
    for k, v in enumerate(values):
        coeff[1 : k + 2] = coeff[1 : k + 2] + v * coeff[0 : k + 1]
    return coeff


def curvature_table(shape: ShapeSpectrum) -> CurvatureTable:
    """Elementary symmetric values and mean curvatures of a shape operator.

    mean[r] satisfies C(n,r) * mean[r] = (-1)^r * elementary[r], i.e. it is
    the r-th elementary symmetric mean of the negated principal curvatures.
    """
    n = shape.n
    s = _elementary_all(shape.values())
    h = np.array([(-1.0) ** r * s[r] / comb(n, r) for r in range(n + 1)])
    b = tuple((n - r) * comb(n, r) for r in range(n + 1))
    return CurvatureTable(n=n, elementary=tuple(s), mean=tuple(h), trace_factor=b)


def newton_transform(shape: ShapeSpectrum, r: int) -> NewtonTransform:
    """r-th Newton transformation of the shape operator.

    P_0 = I and P_r = (-1)^r sigma_r I + A P_{r-1}; shares eigenvectors with
    A, and P_n vanishes (Cayley-Hamilton).
    """
    n = shape.n
    if not 0 <= r <= n:
        raise ValueError(f"order r={r} out of range [0, {n}]")
    a = shape.operator()
    s = _elementary_all(np.linalg.eigvalsh(a))
    p = np.eye(n)
    for k in range(1, r + 1):
        p = (-1.0) ** k * s[k] * np.eye(n) + a @ p
    return NewtonTransform(r=r, matrix=(p + p.T) / 2.0)


def newton_traces(shape: ShapeSpectrum, r: int) -> tuple[float, float, float]:
    """(tr P_r, tr A P_r, tr A^2 P_r), computed from the matrices.

    Contract: these equal the closed forms (-1)^r (n-r) sigma_r,
    (-1)^r (r+1) sigma_{r+1} and (-1)^r (sigma_1 sigma_{r+1}
    - (r+2) sigma_{r+2}), with sigma past index n read as zero.
    """
    n = shape.n
    if not 0 <= r <= n - 1:
        raise ValueError(f"order r={r} out of range [0, {n - 1}]")
    a = shape.operator()
    p = newton_transform(shape, r).matrix
    ap = a @ p
    return float(np.trace(p)), float(np.trace(ap)), float(np.trace(a @ ap))


def stability_constant(shape: ShapeSpectrum, c: float, r: int) -> float:
    """The constant compared against the first eigenvalue: c*tr(P_r) - tr(A^2 P_r)."""
    tr_p, _, tr_a2p = newton_traces(shape, r)
    return c * tr_p - tr_a2p


def stability_constant_binomial(shape: ShapeSpectrum, c: float, r: int) -> float:
    """Companion closed form of ``stability_constant`` in mean curvatures.

    c(n-r)C(n,r)H_r - n H_1 C(n,r+1) H_{r+1} + (r+2) C(n,r+2) H_{r+2},
    with H past index n read as zero.  Must agree with the trace form.
    """
    n = shape.n
    if not 0 <= r <= n - 1:
        raise ValueError(f"order r={r} out of range [0, {n - 1}]")
    h = list(curvature_table(shape).mean) + [0.0, 0.0]
    out = c * (n - r) * comb(n, r) * h[r]
    out -= n * h[1] * comb(n, r + 1) * h[r + 1]
    if r + 2 <= n:
        out += (r + 2) * comb(n, r + 2) * h[r + 2]
    return float(out)


def r_area_integrand(table: CurvatureTable, c: float, r: int) -> float:
    """Integrand of the order-r area functional at one point.

    F_0 = 1, F_1 = -sigma_1, and
    F_r = (-1)^r sigma_r - c (n - r + 1) / (r - 1) * F_{r-2}.
    """
    n = table.n
    if not 0 <= r <= n - 1:
        raise ValueError(f"order r={r} out of range [0, {n - 1}]")
    s = table.elementary
    f = [1.0, -s[1] if n >= 1 else 0.0]
    for k in range(2, r + 1):
        f.append((-1.0) ** k * s[k] - c * (n - k + 1) / (k - 1) * f[k - 2])
    return float(f[r])


def variation_constant(n: int, c: float, r: int) -> float:
    """Additive constant in the first variation of the order-r area.

    Zero for even r.  For odd r it is
    -[n (n-2) ... (n-r+1)] / [(r-1) (r-3) ... 2] * (-c)^((r+1)/2),
    empty products being 1, so the first odd value is n*c.
    """
    if not 0 <= r <= n - 1:
        raise ValueError(f"order r={r} out of range [0, {n - 1}]")
    if r % 2 == 0:
        return 0.0
    num = 1.0
    k = n
    while k >= n - r + 1:
        num *= k
        k -= 2
    den = 1.0
    k = r - 1
    while k >= 2:
        den *= k
        k -= 2
    return -(num / den) * (-c) ** ((r + 1) // 2)


# ---------------------------------------------------------------------------
# batched helpers used by the surface cache (same algebra, vectorized over
# points; cross-checked against the scalar path in tests)

def batched_elementary(eigs: np.ndarray) -> np.ndarray:
    """sigma_0..sigma_n per row of an (V, n) eigenvalue array -> (V, n+1)."""
    v, n = eigs.shape
    coeff = np.zeros((v, n + 1))
    coeff[:, 0] = 1.0
    for k in range(n):
        coeff[:, 1 : k + 2] = coeff[:, 1 : k + 2] + eigs[:, k, None] * coeff[:, 0 : k + 1]
    return coeff


def batched_newton(a: np.ndarray, sigma: np.ndarray, r: int) -> np.ndarray:
    """P_r per point for an (V, n, n) operator stack and its sigma table."""
    v, n, _ = a.shape
    eye = np.broadcast_to(np.eye(n), (v, n, n))
    p = np.array(eye)
    for k in range(1, r + 1):
        p = (-1.0) ** k * sigma[:, k, None, None] * eye + np.einsum("vij,vjk->vik", a, p)
    return (p + np.transpose(p, (0, 2, 1))) / 2.0


def batched_stability_constant(a: np.ndarray, c: float, r: int) -> np.ndarray:
    """c*tr(P_r) - tr(A^2 P_r) per point for an (V, n, n) operator stack."""
    eigs = np.linalg.eigvalsh(a)
    sigma = batched_elementary(eigs)
    p = batched_newton(a, sigma, r)
    tr_p = np.trace(p, axis1=1, axis2=2)
    a2 = np.einsum("vij,vjk->vik", a, a)
    tr_a2p = np.einsum("vij,vji->v", a2, p)
    return c * tr_p - tr_a2p
