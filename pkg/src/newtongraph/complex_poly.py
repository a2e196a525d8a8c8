"""Polynomials, rational maps on the Riemann sphere, and Newton map construction.

Coefficient lists are ascending: ``coeffs[i]`` multiplies ``z**i``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import (
    DegenerateMapError,
    IndeterminacyError,
    InvalidSpecError,
    NumericalError,
)

ROOT_TOL = 1e-12
MAX_SWEEPS = 200
CLUSTER_TOL = 1e-7
COMMON_FACTOR_TOL = 1e-9


class Infinity:
    """The point at infinity of the Riemann sphere (singleton ``INF``)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INF"

    def __reduce__(self):
        return (Infinity, ())


INF = Infinity()
SpherePoint = Union[complex, Infinity]


def is_inf(z) -> bool:
    return z is INF


def chordal(a: SpherePoint, b: SpherePoint) -> float:
    """Chordal distance on the Riemann sphere (diameter 2)."""
    if is_inf(a) and is_inf(b):
        return 0.0
    if is_inf(a):
        a, b = b, a
    if is_inf(b):
        return 2.0 / math.sqrt(1.0 + abs(a) ** 2)
    return 2.0 * abs(a - b) / math.sqrt((1.0 + abs(a) ** 2) * (1.0 + abs(b) ** 2))


# ---------------------------------------------------------------------------
# Polynomials


@dataclass(frozen=True)
class Polynomial:
    coeffs: tuple

    def __post_init__(self):
        c = [complex(x) for x in self.coeffs]
        while len(c) > 1 and c[-1] == 0:
            c.pop()
        if not c:
            c = [0j]
        object.__setattr__(self, "coeffs", tuple(c))

    @property
    def degree(self) -> int:
        if len(self.coeffs) == 1 and self.coeffs[0] == 0:
            return -1
        return len(self.coeffs) - 1

    @property
    def leading(self) -> complex:
        return self.coeffs[-1]

    def __call__(self, z: complex) -> complex:
        acc = 0j
        for a in reversed(self.coeffs):
            acc = acc * z + a
        return acc

    def eval_array(self, z: np.ndarray) -> np.ndarray:
        acc = np.zeros_like(z, dtype=complex)
        for a in reversed(self.coeffs):
            acc = acc * z + a
        return acc

    def deriv(self, m: int = 1) -> "Polynomial":
        if self.degree < m:
            return Polynomial((0,))
        return Polynomial(tuple(npoly.polyder(np.array(self.coeffs), m)))

    def __add__(self, other: "Polynomial") -> "Polynomial":
        return Polynomial(tuple(npoly.polyadd(self.coeffs, other.coeffs)))

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return Polynomial(tuple(npoly.polysub(self.coeffs, other.coeffs)))

    def __mul__(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            return Polynomial(tuple(npoly.polymul(self.coeffs, other.coeffs)))
        return Polynomial(tuple(complex(other) * a for a in self.coeffs))

    __rmul__ = __mul__

    def taylor(self, z0: complex) -> list:
        """Coefficients of the expansion about ``z0`` (repeated synthetic division)."""
        c = list(self.coeffs)
        n = len(c)
        out = []
        for _ in range(n):
            # divide c by (z - z0): remainder is the next Taylor coefficient
            acc = 0j
            q = [0j] * (len(c) - 1)
            for i in range(len(c) - 1, -1, -1):
                acc = acc * z0 + c[i]
                if i > 0:
                    q[i - 1] = acc
            out.append(acc)
            c = q
            if not c:
                break
        return out

    def roots(self) -> list:
        """All roots with multiplicity (Aberth iteration + Newton polish)."""
        return aberth_roots(self.coeffs)

    def to_json(self) -> dict:
        return {"coeffs": [{"re": a.real, "im": a.imag} for a in self.coeffs]}


def _cauchy_radius(c: Sequence[complex]) -> float:
    lead = abs(c[-1])
    return 1.0 + max(abs(a) / lead for a in c[:-1])


def aberth_roots(coeffs: Sequence[complex], tol: float = ROOT_TOL, max_sweeps: int = MAX_SWEEPS) -> list:
    c = [complex(a) for a in coeffs]
    while len(c) > 1 and c[-1] == 0:
        c.pop()
    n = len(c) - 1
    if n <= 0:
        return []
    zeros_at_origin = 0
    while c[0] == 0 and len(c) > 1:
        c.pop(0)
        zeros_at_origin += 1
    n = len(c) - 1
    roots = [0j] * zeros_at_origin
    if n == 0:
        return roots
    if n == 1:
        return roots + [-c[0] / c[1]]

    a = np.array(c, dtype=complex)
    da = npoly.polyder(a)
    center = -c[-2] / (n * c[-1])
    shifted = Polynomial(tuple(c)).taylor(center)
    # geometric-mean root distance from the centroid is a tighter start than Cauchy's bound
    radius = abs(shifted[0] / shifted[-1]) ** (1.0 / n) if shifted[0] != 0 else 0.0
    radius = min(max(radius, 1e-3), _cauchy_radius(shifted))
    z = center + radius * np.exp(1j * (2 * np.pi * np.arange(n) / n + 0.4))
    for _ in range(max_sweeps):
        p = npoly.polyval(z, a)
        dp = npoly.polyval(z, da)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = p / dp
            diff = z[:, None] - z[None, :]
            np.fill_diagonal(diff, 1.0)
            inv = 1.0 / diff
            np.fill_diagonal(inv, 0.0)
            s = inv.sum(axis=1)
            w = ratio / (1.0 - ratio * s)
        w = np.where(np.isfinite(w), w, 0.0)
        z = z - w
        if np.all(np.abs(w) <= tol * (1.0 + np.abs(z))):
            break
    else:
        resid = np.abs(npoly.polyval(z, a))
        scale = np.polynomial.polynomial.polyval(np.abs(z), np.abs(a))
        if np.any(resid > 1e-8 * scale):
            raise NumericalError("Aberth iteration did not converge", residuals=resid.tolist())
    z = _polish(z, a, da)
    return roots + [complex(x) for x in z]


def _polish(z, a, da, steps: int = 3):
    z = z.copy()
    for _ in range(steps):
        p = npoly.polyval(z, a)
        dp = npoly.polyval(z, da)
        with np.errstate(divide="ignore", invalid="ignore"):
            cand = z - p / dp
        ok = np.isfinite(cand) & (np.abs(npoly.polyval(cand, a)) < np.abs(p))
        z = np.where(ok, cand, z)
    return z


def cluster_roots(poly: Polynomial, roots: Sequence[complex], tol: float = CLUSTER_TOL) -> list:
    """Merge numerically spread multiple roots into ``(center, multiplicity)`` pairs.

    Roots closer than ``tol`` (relative) always merge. Larger clusters merge only
    when their radius is consistent with a multiple root perturbed by rounding,
    judged from the polynomial's Taylor coefficients at the candidate center.
    """
    clusters = [[complex(r)] for r in roots]

    def center(cl):
        return sum(cl) / len(cl)

    merged = True
    while merged:
        merged = False
        best = None
        for i in range(len(clusters)):
            ci = center(clusters[i])
            for j in range(i + 1, len(clusters)):
                cj = center(clusters[j])
                dist = abs(ci - cj)
                if best is None or dist < best[0]:
                    best = (dist, i, j)
        if best is None:
            break
        dist, i, j = best
        cand = clusters[i] + clusters[j]
        c = center(cand)
        if dist <= tol * max(1.0, abs(c)) or _plausible_multiple(poly, cand):
            clusters[i] = cand
            del clusters[j]
            merged = True

    out = []
    for cl in clusters:
        k = len(cl)
        c = center(cl)
        if k > 1:
            c = _refine_multiple(poly, c, k)
        out.append((c, k))
    out.sort(key=lambda t: (round(t[0].real, 9), round(t[0].imag, 9)))
    return out


def _plausible_multiple(poly: Polynomial, cluster) -> bool:
    k = len(cluster)
    c = sum(cluster) / k
    rho = max(abs(z - c) for z in cluster)
    t = poly.taylor(c)
    if len(t) <= k or t[k] == 0:
        return False
    # rounding noise is relative to the coefficient size, not to |p(c)|
    scale = sum(abs(a) * max(1.0, abs(c)) ** i for i, a in enumerate(poly.coeffs))
    expected = 10.0 * (1e-12 * scale / abs(t[k])) ** (1.0 / k)
    return rho <= expected and rho <= 1e-3 * max(1.0, abs(c))


def _refine_multiple(poly: Polynomial, c: complex, k: int) -> complex:
    # a k-fold root of p is a simple root of p^(k-1)
    g = poly.deriv(k - 1)
    dg = poly.deriv(k)
    for _ in range(5):
        d = dg(c)
        if d == 0:
            break
        step = g(c) / d
        if not cmath.isfinite(step):
            break
        c2 = c - step
        if abs(g(c2)) >= abs(g(c)):
            break
        c = c2
    return c


def roots_with_multiplicity(poly: Polynomial, tol: float = CLUSTER_TOL) -> list:
    return cluster_roots(poly, poly.roots(), tol)


# ---------------------------------------------------------------------------
# Root specifications


@dataclass(frozen=True)
class RootSpec:
    roots: tuple  # of (complex location, int multiplicity)

    def __post_init__(self):
        norm = []
        for loc, m in self.roots:
            m = int(m)
            if m < 1:
                raise InvalidSpecError(f"multiplicity must be >= 1, got {m}")
            norm.append((complex(loc), m))
        if not norm:
            raise InvalidSpecError("root specification is empty")
        for i in range(len(norm)):
            for j in range(i + 1, len(norm)):
                if abs(norm[i][0] - norm[j][0]) <= CLUSTER_TOL * max(1.0, abs(norm[i][0])):
                    raise InvalidSpecError(f"duplicate root location {norm[i][0]}")
        object.__setattr__(self, "roots", tuple(norm))

    @property
    def degree(self) -> int:
        return sum(m for _, m in self.roots)

    @classmethod
    def simple(cls, locations: Iterable[complex]) -> "RootSpec":
        return cls(tuple((z, 1) for z in locations))


def polynomial_from_roots(spec: RootSpec) -> Polynomial:
    expanded = []
    for z, m in spec.roots:
        expanded.extend([z] * m)
    return Polynomial(tuple(npoly.polyfromroots(expanded).astype(complex)))


# ---------------------------------------------------------------------------
# Rational maps


@dataclass(frozen=True)
class RationalMap:
    """``num/den`` acting on the Riemann sphere.

    ``roots`` is set when the map was built as a Newton map and records the
    polynomial's distinct roots with multiplicities (these are the finite fixed
    points). ``flags`` lists reasons the map fails the Newton-map degree gate.
    """

    num: Polynomial
    den: Polynomial
    roots: tuple = ()
    flags: tuple = ()

    @property
    def degree(self) -> int:
        return max(self.num.degree, self.den.degree)

    def __call__(self, z: SpherePoint) -> SpherePoint:
        return evaluate(self, z)

    def finite(self, z: complex) -> complex:
        """Fast evaluation at a finite non-pole point; no sphere handling."""
        return self.num(z) / self.den(z)

    def value_and_derivative(self, z: complex):
        n = 0j
        dn = 0j
        for a in reversed(self.num.coeffs):
            dn = dn * z + n
            n = n * z + a
        d = 0j
        dd = 0j
        for a in reversed(self.den.coeffs):
            dd = dd * z + d
            d = d * z + a
        return n / d, (dn * d - n * dd) / (d * d)

    def derivative(self, z: complex) -> complex:
        return self.value_and_derivative(z)[1]

    def eval_array(self, z: np.ndarray) -> np.ndarray:
        return self.num.eval_array(z) / self.den.eval_array(z)

    def conjugate_at_infinity(self) -> "RationalMap":
        """The map ``w -> 1/f(1/w)``."""
        D = self.degree
        a = list(self.num.coeffs) + [0j] * (D + 1 - len(self.num.coeffs))
        b = list(self.den.coeffs) + [0j] * (D + 1 - len(self.den.coeffs))
        return RationalMap(Polynomial(tuple(reversed(b))), Polynomial(tuple(reversed(a))))

    def taylor(self, z0: complex, order: int) -> list:
        """Taylor coefficients of ``f`` about a finite non-pole ``z0`` up to ``order``."""
        n = self.num.taylor(z0) + [0j] * (order + 1)
        d = self.den.taylor(z0) + [0j] * (order + 1)
        if d[0] == 0:
            raise IndeterminacyError("Taylor expansion requested at a pole", location=z0)
        out = []
        for k in range(order + 1):
            acc = n[k] - sum(out[j] * d[k - j] for j in range(k))
            out.append(acc / d[0])
        return out

    def preimage_poly(self, w: SpherePoint) -> Polynomial:
        """Polynomial whose roots are the finite preimages of ``w``."""
        if is_inf(w):
            return self.den
        return self.num - self.den * w


def evaluate(f: RationalMap, z: SpherePoint) -> SpherePoint:
    if is_inf(z):
        dn, dd = f.num.degree, f.den.degree
        if dn > dd:
            return INF
        if dn == dd:
            return f.num.leading / f.den.leading
        return 0j
    z = complex(z)
    n = f.num(z)
    d = f.den(z)
    if d == 0:
        if n == 0:
            raise IndeterminacyError("0/0 evaluating rational map", location=z)
        return INF
    return n / d


def poles_of(f: RationalMap) -> list:
    """Finite poles as ``(location, order)``; total order equals ``deg den``."""
    if f.den.degree <= 0:
        return []
    return roots_with_multiplicity(f.den)


def newton_map_from_roots(spec: RootSpec) -> RationalMap:
    return _newton_map(polynomial_from_roots(spec), list(spec.roots))


def newton_map(p: Polynomial) -> RationalMap:
    """Reduced Newton map ``(z p' - p)/p'`` of ``p``.

    The common factor ``(z - xi)**(m - 1)`` at each multiple root is divided out,
    so the degree equals the number of distinct roots.
    """
    if p.degree <= 1:
        raise DegenerateMapError(f"polynomial of degree {p.degree} has a degenerate Newton map")
    return _newton_map(p, roots_with_multiplicity(p))


def _newton_map(p: Polynomial, roots: list) -> RationalMap:
    if p.degree <= 1:
        raise DegenerateMapError(f"polynomial of degree {p.degree} has a degenerate Newton map")
    dp = p.deriv()
    num = Polynomial((0, 1)) * dp - p
    den = dp
    for xi, m in roots:
        if m > 1:
            factor = npoly.polyfromroots([xi] * (m - 1))
            num = Polynomial(tuple(npoly.polydiv(num.coeffs, factor)[0]))
            den = Polynomial(tuple(npoly.polydiv(den.coeffs, factor)[0]))
    flags = []
    if len(roots) < 3:
        flags.append(f"degree {len(roots)} < 3: not a Newton map in the classification sense")
    return RationalMap(num, den, roots=tuple((complex(z), int(m)) for z, m in roots), flags=tuple(flags))


def reduce_common_factors(num: Polynomial, den: Polynomial, tol: float = COMMON_FACTOR_TOL) -> RationalMap:
    """Cancel common roots of ``num`` and ``den`` detected by root matching."""
    nr = list(num.roots()) if num.degree > 0 else []
    dr = list(den.roots()) if den.degree > 0 else []
    kept_n, kept_d = [], list(dr)
    for z in nr:
        hit = None
        for i, w in enumerate(kept_d):
            if abs(z - w) <= tol * max(1.0, abs(z)):
                hit = i
                break
        if hit is None:
            kept_n.append(z)
        else:
            kept_d.pop(hit)
    if len(kept_n) == len(nr):
        return RationalMap(num, den)
    n = Polynomial(tuple(npoly.polyfromroots(kept_n).astype(complex) * num.leading)) if kept_n else Polynomial((num.leading,))
    d = Polynomial(tuple(npoly.polyfromroots(kept_d).astype(complex) * den.leading)) if kept_d else Polynomial((den.leading,))
    return RationalMap(n, d)


# ---------------------------------------------------------------------------
# JSON input


def _cplx(obj) -> complex:
    return complex(float(obj.get("re", 0.0)), float(obj.get("im", 0.0)))


def map_from_json(data: dict) -> RationalMap:
    """Build a Newton map from ``{"roots": [...]}`` or ``{"coeffs": [...]}``."""
    if "roots" in data:
        spec = RootSpec(tuple((_cplx(r), int(r.get("mult", 1))) for r in data["roots"]))
        return newton_map_from_roots(spec)
    if "coeffs" in data:
        return newton_map(Polynomial(tuple(_cplx(c) for c in data["coeffs"])))
    raise InvalidSpecError("input must contain 'roots' or 'coeffs'")


def rootspec_to_json(spec: RootSpec) -> dict:
    return {"roots": [{"re": z.real, "im": z.imag, "mult": m} for z, m in spec.roots]}
