"""Real spherical harmonics as restrictions of harmonic polynomials.

Each Y_{l,m} is represented by the homogeneous harmonic polynomial R of
degree l with Y = R on the unit sphere.  Values, intrinsic (tangential)
gradients, and intrinsic Hessians then follow from ambient polynomial
derivatives:

    grad_S Y = grad R - l R q          (Euler's relation removes the radial part)
    Hess_S Y(X, W) = Hess R(X, W) - l R <X, W>   for tangent X, W.

Orthonormal on the unit sphere; m > 0 are the cos-type, m < 0 the sin-type
sectors.  No Condon-Shortley phase.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial, pi, sqrt

import numpy as np

__all__ = ["SphericalHarmonic", "HarmonicField", "harmonic_basis"]


class _Poly:
    """Polynomial in three variables: exponent rows (i, j, k) and coefficients."""

    __slots__ = ("exps", "coeffs")

    def __init__(self, terms: dict[tuple[int, int, int], float]):
        items = sorted((e, c) for e, c in terms.items() if c != 0.0)
        if not items:
            items = [((0, 0, 0), 0.0)]
        self.exps = np.array([e for e, _ in items], dtype=int)
        self.coeffs = np.array([c for _, c in items], dtype=float)

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        mono = np.prod(pts[:, None, :] ** self.exps[None, :, :], axis=2)
        return mono @ self.coeffs

    def diff(self, axis: int) -> "_Poly":
        terms: dict[tuple[int, int, int], float] = {}
        for e, c in zip(self.exps, self.coeffs):
            if e[axis] == 0:
                continue
            e2 = list(e)
            e2[axis] -= 1
            key = tuple(e2)
            terms[key] = terms.get(key, 0.0) + c * e[axis]
        return _Poly(terms)


def _legendre_core(l: int, m: int) -> list[Fraction]:
    """Coefficients c_k of the degree-(l-m) homogeneous Legendre core
    sum_k c_k z^(l-m-2k) (x^2+y^2+z^2)^k."""
    if l == m:
        dfact = Fraction(1)
        for i in range(3, 2 * m, 2):
            dfact *= i
        return [dfact]
    if l == m + 1:
        return [(2 * m + 1) * c for c in _legendre_core(m, m)]
    prev = _legendre_core(l - 1, m)    # degree l-1-m
    prev2 = _legendre_core(l - 2, m)   # degree l-2-m
    out = [Fraction(0)] * (len(prev2) + 1)
    for k, c in enumerate(prev):
        out[k] += Fraction(2 * l - 1) * c
    for k, c in enumerate(prev2):
        out[k + 1] -= Fraction(l - 1 + m) * c
    return [c / (l - m) for c in out]


def _sector(m: int) -> dict[tuple[int, int, int], Fraction]:
    """Monomials of Re (x+iy)^m for m >= 0, of Im (x+iy)^|m| for m < 0."""
    want_im = m < 0
    m = abs(m)
    out: dict[tuple[int, int, int], Fraction] = {}
    for j in range(m + 1):
        cyc = j % 4
        if want_im and cyc in (1, 3):
            out[(m - j, j, 0)] = Fraction(comb(m, j)) * (1 if cyc == 1 else -1)
        elif not want_im and cyc in (0, 2):
            out[(m - j, j, 0)] = Fraction(comb(m, j)) * (1 if cyc == 0 else -1)
    return out


def _r2_power(k: int) -> dict[tuple[int, int, int], Fraction]:
    """Monomials of (x^2 + y^2 + z^2)^k."""
    out: dict[tuple[int, int, int], Fraction] = {(0, 0, 0): Fraction(1)}
    for _ in range(k):
        nxt: dict[tuple[int, int, int], Fraction] = {}
        for (i, j, kk), c in out.items():
            for d in range(3):
                e = [i, j, kk]
                e[d] += 2
                key = tuple(e)
                nxt[key] = nxt.get(key, Fraction(0)) + c
        out = nxt
    return out


@lru_cache(maxsize=None)
def _harmonic_poly(l: int, m: int) -> _Poly:
    if not (0 <= abs(m) <= l):
        raise ValueError(f"invalid harmonic order (l={l}, m={m})")
    core = _legendre_core(l, abs(m))
    sector = _sector(m)
    norm = sqrt((2 * l + 1) / (4.0 * pi) * factorial(l - abs(m)) / factorial(l + abs(m)))
    if m != 0:
        norm *= sqrt(2.0)
    terms: dict[tuple[int, int, int], Fraction] = {}
    for k, c in enumerate(core):
        zpow = l - abs(m) - 2 * k
        for er, cr in _r2_power(k).items():
            for es, cs in sector.items():
                key = (es[0] + er[0], es[1] + er[1], es[2] + er[2] + zpow)
                terms[key] = terms.get(key, Fraction(0)) + c * cr * cs
    return _Poly({e: float(c) * norm for e, c in terms.items()})


@dataclass(frozen=True)
class SphericalHarmonic:
    """One orthonormal real harmonic Y_{l,m} with exact sphere derivatives."""

    l: int
    m: int

    @property
    def poly(self) -> _Poly:
        return _harmonic_poly(self.l, self.m)

    def value(self, q: np.ndarray) -> np.ndarray:
        return self.poly(q)

    def sphere_gradient(self, q: np.ndarray) -> np.ndarray:
        """Tangential gradient at unit points q, shape (V, 3)."""
        q = np.atleast_2d(q)
        grad = np.stack([self.poly.diff(axis)(q) for axis in range(3)], axis=1)
        return grad - self.l * self.value(q)[:, None] * q

    def sphere_hessian(self, q: np.ndarray) -> np.ndarray:
        """Intrinsic Hessian as an ambient (V, 3, 3) form on tangent vectors."""
        q = np.atleast_2d(q)
        v = q.shape[0]
        hess = np.empty((v, 3, 3))
        for i in range(3):
            di = self.poly.diff(i)
            for j in range(i, 3):
                hess[:, i, j] = hess[:, j, i] = di.diff(j)(q)
        proj = np.eye(3)[None] - q[:, :, None] * q[:, None, :]
        hess = np.einsum("vij,vjk,vkl->vil", proj, hess, proj)
        return hess - self.l * self.value(q)[:, None, None] * proj


@dataclass(frozen=True)
class HarmonicField:
    """Constant plus a finite real-harmonic expansion on the unit sphere."""

    constant: float = 0.0
    terms: tuple[tuple[int, int, float], ...] = ()

    def __post_init__(self):
        object.__setattr__(
            self, "terms",
            tuple((int(l), int(m), float(a)) for l, m, a in self.terms),
        )
        for l, m, _ in self.terms:
            if not (0 <= abs(m) <= l):
                raise ValueError(f"invalid harmonic order (l={l}, m={m})")

    def scaled(self, factor: float) -> "HarmonicField":
        return HarmonicField(
            constant=factor * self.constant,
            terms=tuple((l, m, factor * a) for l, m, a in self.terms),
        )

    def shifted(self, offset: float) -> "HarmonicField":
        return HarmonicField(constant=self.constant + offset, terms=self.terms)

    def plus(self, other: "HarmonicField", factor: float = 1.0) -> "HarmonicField":
        return HarmonicField(
            constant=self.constant + factor * other.constant,
            terms=self.terms + tuple((l, m, factor * a) for l, m, a in other.terms),
        )

    def value(self, q: np.ndarray) -> np.ndarray:
        q = np.atleast_2d(q)
        out = np.full(q.shape[0], self.constant)
        for l, m, a in self.terms:
            out += a * SphericalHarmonic(l, m).value(q)
        return out

    def sphere_gradient(self, q: np.ndarray) -> np.ndarray:
        q = np.atleast_2d(q)
        out = np.zeros((q.shape[0], 3))
        for l, m, a in self.terms:
            out += a * SphericalHarmonic(l, m).sphere_gradient(q)
        return out

    def sphere_hessian(self, q: np.ndarray) -> np.ndarray:
        q = np.atleast_2d(q)
        out = np.zeros((q.shape[0], 3, 3))
        for l, m, a in self.terms:
            out += a * SphericalHarmonic(l, m).sphere_hessian(q)
        return out


def harmonic_basis(l_max: int, l_min: int = 0) -> list[SphericalHarmonic]:
    """All (l, m) with l_min <= l <= l_max, ordered by l then m."""
    return [SphericalHarmonic(l, m) for l in range(l_min, l_max + 1) for m in range(-l, l + 1)]
