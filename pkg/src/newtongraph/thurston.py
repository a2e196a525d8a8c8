"""Thurston transformation matrices, Perron eigenvalues and orbifold signatures."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import InvalidSpecError, NumericalError

EIG_TOL = 1e-13
MAX_POWER_ITER = 200_000
OBSTRUCTION_TOL = 1e-10


@dataclass(frozen=True)
class LiftDatum:
    source: int
    components: tuple  # of (target index or None, degree)


def thurston_matrix(data, n: Optional[int] = None) -> np.ndarray:
    """``M[j][i]`` sums ``1/k`` over preimage components of curve ``i`` isotopic to curve ``j``."""
    data = list(data)
    if n is None:
        n = 1 + max(
            [d.source for d in data]
            + [t for d in data for t, _ in d.components if t is not None],
            default=-1,
        )
    m = np.zeros((n, n))
    for d in data:
        if not 0 <= d.source < n:
            raise InvalidSpecError(f"curve index {d.source} out of range for {n} curves")
        for target, k in d.components:
            if k < 1:
                raise InvalidSpecError(f"mapping degree must be >= 1, got {k}")
            if target is None:
                continue
            if not 0 <= target < n:
                raise InvalidSpecError(f"curve index {target} out of range for {n} curves")
            m[target, d.source] += 1.0 / k
    return m


def _as_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidSpecError("matrix must be square")
    if (a < 0).any():
        raise InvalidSpecError("matrix must be nonnegative")
    return a


def strongly_connected_components(a: np.ndarray) -> list:
    """Index sets of the strongly connected components of the support digraph."""
    n, labels = connected_components(csr_matrix(a > 0), directed=True, connection="strong")
    return [np.nonzero(labels == c)[0].tolist() for c in range(n)]


def _block_radius(b: np.ndarray) -> float:
    """Spectral radius of an irreducible nonnegative block.

    Power iteration on ``B + I`` (primitive, same Perron vector) squeezed by the
    Collatz-Wielandt bounds ``min (Bx)_i/x_i <= rho <= max (Bx)_i/x_i``.
    """
    n = b.shape[0]
    if n == 1:
        return float(b[0, 0])
    if not b.any():
        return 0.0
    shifted = b + np.eye(n)
    x = np.ones(n) / n
    lo = hi = 0.0
    for _ in range(MAX_POWER_ITER):
        y = shifted @ x
        ratio = y / x
        lo, hi = ratio.min() - 1.0, ratio.max() - 1.0
        if hi - lo <= EIG_TOL * max(1.0, hi):
            return 0.5 * (lo + hi)
        x = y / y.sum()
    raise NumericalError("power iteration did not converge", lower=lo, upper=hi)


def leading_eigenvalue(m) -> float:
    """Spectral radius of a nonnegative matrix, block by strongly connected block."""
    a = _as_matrix(m)
    if a.size == 0:
        return 0.0
    return max(_block_radius(a[np.ix_(c, c)]) for c in strongly_connected_components(a))


def is_irreducible(m) -> bool:
    """Strong connectivity of the support digraph.

    The ``k = 0`` power is the identity, so diagonal pairs are always reachable;
    a 1x1 matrix is therefore irreducible, even ``[[0]]``.
    """
    a = _as_matrix(m)
    n = a.shape[0]
    # transitive closure by repeated squaring; matrices here are small
    reach = (a > 0) | np.eye(n, dtype=bool)
    for _ in range(max(1, n - 1).bit_length()):
        reach = (reach.astype(np.int64) @ reach.astype(np.int64)) > 0
    return bool(reach.all())


@dataclass(frozen=True)
class ObstructionReport:
    eigenvalue: float
    irreducible: bool

    @property
    def obstruction_candidate(self) -> bool:
        return self.irreducible and self.eigenvalue >= 1 - OBSTRUCTION_TOL

    @property
    def verdict(self) -> str:
        return "obstruction candidate" if self.obstruction_candidate else "no obstruction"

    def to_json(self) -> dict:
        return {
            "eigenvalue": self.eigenvalue,
            "irreducible": self.irreducible,
            "verdict": self.verdict,
        }


def obstruction_verdict(data) -> ObstructionReport:
    """Accepts lift data or a ready matrix."""
    data = list(data) if not isinstance(data, np.ndarray) else data
    if isinstance(data, np.ndarray) or (data and not isinstance(data[0], LiftDatum)):
        m = _as_matrix(data)
    else:
        m = thurston_matrix(data)
    return ObstructionReport(leading_eigenvalue(m), is_irreducible(m))


def lift_data_from_json(obj: dict) -> tuple:
    n = int(obj["curves"])
    lifts = [
        LiftDatum(int(l["source"]), tuple((c.get("target"), int(c["degree"])) for c in l["components"]))
        for l in obj["lifts"]
    ]
    return n, lifts


# ---------------------------------------------------------------------------
# Orbifold


INFINITE = math.inf


@dataclass(frozen=True)
class OrbifoldMapData:
    points: tuple
    image: dict  # x -> g(x)
    degree: dict  # x -> deg_x(g)

    def __post_init__(self):
        pts = set(self.points)
        for x in self.points:
            if self.image.get(x) not in pts:
                raise InvalidSpecError(f"image of {x!r} is not a marked point")
            if int(self.degree.get(x, 1)) < 1:
                raise InvalidSpecError(f"local degree at {x!r} must be >= 1")

    def preimages(self, x) -> list:
        return [y for y in self.points if self.image[y] == x]


@dataclass(frozen=True)
class OrbifoldSignature:
    v: dict
    chi: object  # Fraction, or -inf never occurs
    hyperbolic: bool

    def to_json(self) -> dict:
        return {
            "v": {str(k): ("inf" if val == INFINITE else val) for k, val in self.v.items()},
            "chi": str(self.chi),
            "hyperbolic": self.hyperbolic,
        }


def _lcm(a, b):
    if a == INFINITE or b == INFINITE:
        return INFINITE
    return a * b // math.gcd(a, b)


def _forced_infinite(data: OrbifoldMapData) -> set:
    """Points on a cycle with degree product > 1, and everything downstream."""
    inf = set()
    for x in data.points:
        seen = []
        y = x
        while y not in seen:
            seen.append(y)
            y = data.image[y]
        if y == x:
            prod = 1
            for z in seen:
                prod *= int(data.degree.get(z, 1))
            if prod > 1:
                inf.add(x)
    frontier = list(inf)
    while frontier:
        y = data.image[frontier.pop()]
        if y not in inf:
            inf.add(y)
            frontier.append(y)
    return inf


def orbifold_signature(data: OrbifoldMapData) -> OrbifoldSignature:
    """Least ``v`` with ``v(y) deg_y | v(g(y))``, the Euler characteristic and hyperbolicity."""
    inf = _forced_infinite(data)
    v = {x: (INFINITE if x in inf else 1) for x in data.points}
    for _ in range(len(data.points) + 1):
        changed = False
        for x in data.points:
            if v[x] == INFINITE:
                continue
            new = v[x]
            for y in data.preimages(x):
                req = INFINITE if v[y] == INFINITE else v[y] * int(data.degree.get(y, 1))
                new = _lcm(new, req)
            if new != v[x]:
                v[x] = new
                changed = True
        if not changed:
            break
    chi = Fraction(2)
    for x in data.points:
        chi -= 1 if v[x] == INFINITE else 1 - Fraction(1, v[x])
    return OrbifoldSignature(v, chi, chi < 0)


def orbifold_data_from_json(obj: dict) -> OrbifoldMapData:
    pts = tuple(str(p) for p in obj["points"])
    image = {str(k): str(val) for k, val in obj["map"].items()}
    degree = {str(k): int(val) for k, val in obj.get("degree", {}).items()}
    return OrbifoldMapData(pts, image, degree)


def orbifold_data_from_graph(g, m) -> OrbifoldMapData:
    """Marked set of a Newton graph: its critical vertices and their forward orbits."""
    marked = set()
    for v in g.vertices:
        if m.local_degree.get(v, 1) > 1:
            x = v
            while x not in marked:
                marked.add(x)
                x = m.vertex_map[x]
    pts = tuple(sorted(marked))
    return OrbifoldMapData(
        pts,
        {x: m.vertex_map[x] for x in pts},
        {x: int(m.local_degree.get(x, 1)) for x in pts},
    )
