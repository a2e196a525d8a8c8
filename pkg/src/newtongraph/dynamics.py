"""Orbits, fixed and critical points, basins, internal rays and curve lifting."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .complex_poly import (
    INF,
    RationalMap,
    SpherePoint,
    evaluate,
    is_inf,
    roots_with_multiplicity,
)
from .errors import (
    IndeterminacyError,
    LiftAmbiguityError,
    NotNewtonMapError,
    NumericalError,
    TracingError,
)

EPS_FIX = 1e-9
ESCAPE_RADIUS = 1e6
MAX_ITER = 10_000
MULTIPLIER_TOL = 1e-9


@dataclass(frozen=True)
class Options:
    eps_fix: float = EPS_FIX
    escape_radius: float = ESCAPE_RADIUS
    max_iter: int = MAX_ITER


DEFAULT_OPTIONS = Options()


@dataclass(frozen=True)
class FixedPointRecord:
    location: SpherePoint
    multiplier: complex
    m: object  # int for finite fixed points, "infinity" at INF
    classification: str


@dataclass(frozen=True)
class CriticalPointRecord:
    location: complex
    local_degree: int
    orbit: tuple
    fate: tuple  # ("fixed", index, steps) | ("converges", index) | ("unresolved",)

    @property
    def landed(self) -> bool:
        return self.fate[0] == "fixed"


@dataclass(frozen=True)
class BasinVerdict:
    outcome: str  # "converges" | "escapes" | "undecided"
    root_index: Optional[int] = None
    iterations: int = 0


@dataclass(frozen=True)
class RayPolyline:
    root_index: int
    j: int
    points: tuple
    landing: SpherePoint = INF
    departure_angle: float = 0.0

    def to_json(self) -> list:
        return [{"re": z.real, "im": z.imag} for z in self.points]


def _classify(mu: complex, tol: float) -> str:
    a = abs(mu)
    if a < tol:
        return "superattracting"
    if a < 1 - tol:
        return "attracting"
    if a > 1 + tol:
        return "repelling"
    return "indifferent"


def multiplier_at_infinity(f: RationalMap) -> Optional[complex]:
    """Multiplier of ``w -> 1/f(1/w)`` at 0, or None when infinity is not fixed."""
    dn, dd = f.num.degree, f.den.degree
    if dn <= dd:
        return None
    if dn == dd + 1:
        return f.den.leading / f.num.leading
    return 0j


def finite_fixed_points(f: RationalMap) -> list:
    if f.roots:
        return [z for z, _ in f.roots]
    poly = f.num - f.den * type(f.num)((0, 1))
    return [z for z, _ in roots_with_multiplicity(poly)]


def classify_fixed_points(f: RationalMap, tol: float = MULTIPLIER_TOL) -> list:
    """Finite fixed points with recovered integer ``m`` plus the record at infinity.

    Raises NotNewtonMapError if a finite multiplier is not ``(m-1)/m``.
    """
    from .complex_poly import Polynomial

    poly = f.num - f.den * Polynomial((0, 1))
    found = [z for z, _ in roots_with_multiplicity(poly)]
    records = []
    for z in found:
        mu = f.derivative(z)
        if abs(mu) < tol:
            m = 1
        elif abs(1 - mu) < tol:
            raise NotNewtonMapError("parabolic fixed point", multiplier=mu, location=z)
        else:
            m = max(1, round((1 / (1 - mu)).real))
        if abs(mu - (m - 1) / m) >= tol:
            raise NotNewtonMapError(
                f"fixed point {z} has multiplier {mu}, not of the form (m-1)/m", multiplier=mu, location=z
            )
        records.append(FixedPointRecord(z, mu, m, _classify(mu, tol)))
    records.sort(key=lambda r: (round(r.location.real, 9), round(r.location.imag, 9)))
    mu_inf = multiplier_at_infinity(f)
    if mu_inf is not None:
        records.append(FixedPointRecord(INF, mu_inf, "infinity", _classify(mu_inf, tol)))
    return records


@dataclass
class NewtonReport:
    ok: bool
    degree: int
    reasons: list = field(default_factory=list)
    fixed_points: list = field(default_factory=list)


def is_newton_map(f: RationalMap, tol: float = MULTIPLIER_TOL) -> NewtonReport:
    d = f.degree
    rep = NewtonReport(ok=True, degree=d)
    if d < 3:
        rep.ok = False
        rep.reasons.append(f"degree {d} < 3")
    try:
        rep.fixed_points = classify_fixed_points(f, tol)
    except NotNewtonMapError as exc:
        rep.ok = False
        rep.reasons.append(str(exc))
        return rep
    inf_rec = [r for r in rep.fixed_points if is_inf(r.location)]
    if not inf_rec:
        rep.ok = False
        rep.reasons.append("infinity is not a fixed point")
    elif inf_rec[0].classification != "repelling":
        rep.ok = False
        rep.reasons.append(f"infinity is {inf_rec[0].classification}, not repelling")
    return rep


def critical_polynomial(f: RationalMap):
    return f.num.deriv() * f.den - f.num * f.den.deriv()


def _landing_model(f: RationalMap, fixed: list):
    """Per finite fixed point: (local degree k, |leading Taylor coefficient|)."""
    out = []
    for z in fixed:
        t = f.taylor(z, max(f.degree, 2) + 1)
        scale = max(abs(c) for c in t[1:]) or 1.0
        k = 1
        while k < len(t) - 1 and abs(t[k]) <= 1e-9 * scale:
            k += 1
        out.append((k, abs(t[k]) if k < len(t) else 1.0))
    return out


def iterate_orbit(f: RationalMap, z: SpherePoint, fixed: list, models: list, cutoff: int, opts: Options = DEFAULT_OPTIONS):
    """Iterate until an exact landing on a fixed point, natural convergence, or cutoff.

    Landing is distinguished from convergence by a jump test: the step that
    enters the ``eps_fix`` neighbourhood of a root must start from a point the
    local model ``|a| d**k`` cannot bring that close.
    """
    orbit = [z]
    prev_dist = None
    for step in range(cutoff + 1):
        if is_inf(z) or abs(z) > opts.escape_radius:
            return tuple(orbit), ("fixed", len(fixed), step)
        dists = [abs(z - x) for x in fixed]
        i = int(np.argmin(dists)) if dists else -1
        if i >= 0 and dists[i] <= opts.eps_fix:
            if step == 0:
                return tuple(orbit), ("fixed", i, 0)
            k, a = models[i]
            predicted = a * prev_dist[i] ** k if k > 1 else abs(f.derivative(fixed[i])) * prev_dist[i]
            if predicted >= 100 * opts.eps_fix:
                return tuple(orbit), ("fixed", i, step)
            return tuple(orbit), ("converges", i)
        if step == cutoff:
            break
        prev_dist = dists
        try:
            z = evaluate(f, z)
        except IndeterminacyError:
            break
        orbit.append(z)
    return tuple(orbit), ("unresolved",)


def critical_points(f: RationalMap, cutoff: int = 50, opts: Options = DEFAULT_OPTIONS) -> list:
    """Critical points with local degrees; multiple poles are included via the
    critical polynomial ``num' den - num den'``. A deficit in its degree is
    critical multiplicity at infinity."""
    w = critical_polynomial(f)
    d = f.degree
    fixed = finite_fixed_points(f)
    models = _landing_model(f, fixed)
    recs = []
    found = roots_with_multiplicity(w) if w.degree > 0 else []
    for c, mult in found:
        orbit, fate = iterate_orbit(f, c, fixed, models, cutoff, opts)
        recs.append(CriticalPointRecord(c, mult + 1, orbit, fate))
    deficit = (2 * d - 2) - sum(m for _, m in found)
    if deficit > 0:
        recs.append(CriticalPointRecord(INF, deficit + 1, (INF,), ("fixed", len(fixed), 0)))
    return recs


@dataclass
class PCFReport:
    verdict: str  # "true" | "undecided"
    landing_steps: list

    @property
    def is_pcf(self) -> bool:
        return self.verdict == "true"


def is_postcritically_fixed(f: RationalMap, cutoff: int = 50, opts: Options = DEFAULT_OPTIONS) -> PCFReport:
    recs = critical_points(f, cutoff, opts)
    steps = []
    ok = True
    for r in recs:
        if r.fate[0] == "fixed":
            steps.append((r.location, r.fate[2]))
        else:
            ok = False
            steps.append((r.location, None))
    return PCFReport("true" if ok else "undecided", steps)


def basin_roots(f: RationalMap) -> list:
    return finite_fixed_points(f)


def basin_index(f: RationalMap, z: SpherePoint, opts: Options = DEFAULT_OPTIONS, roots: Optional[list] = None) -> BasinVerdict:
    roots = basin_roots(f) if roots is None else roots
    for it in range(opts.max_iter + 1):
        if is_inf(z) or abs(z) > opts.escape_radius:
            return BasinVerdict("escapes", None, it)
        for i, r in enumerate(roots):
            if abs(z - r) <= opts.eps_fix:
                return BasinVerdict("converges", i, it)
        if it == opts.max_iter:
            break
        try:
            z = evaluate(f, z)
        except IndeterminacyError:
            break
    return BasinVerdict("undecided", None, opts.max_iter)


def basin_index_array(f: RationalMap, z: np.ndarray, opts: Options = DEFAULT_OPTIONS, roots: Optional[list] = None):
    """Vectorised ``basin_index``: returns (root index or -1 escape or -2 undecided, iterations)."""
    roots = basin_roots(f) if roots is None else roots
    z = np.array(z, dtype=complex)
    shape = z.shape
    z = z.ravel().copy()
    label = np.full(z.shape, -2, dtype=np.int64)
    iters = np.zeros(z.shape, dtype=np.int64)
    active = np.arange(z.size)
    r = np.array(roots, dtype=complex)
    for it in range(opts.max_iter + 1):
        zz = z[active]
        with np.errstate(all="ignore"):
            esc = ~np.isfinite(zz) | (np.abs(zz) > opts.escape_radius)
            d = np.abs(zz[:, None] - r[None, :]) if r.size else np.full((zz.size, 0), np.inf)
        conv = (d <= opts.eps_fix).any(axis=1) & ~esc
        label[active[esc]] = -1
        iters[active[esc]] = it
        if conv.any():
            label[active[conv]] = np.argmin(d[conv], axis=1)
            iters[active[conv]] = it
        active = active[~(esc | conv)]
        if active.size == 0 or it == opts.max_iter:
            break
        with np.errstate(all="ignore"):
            z[active] = f.eval_array(z[active])
    iters[active] = opts.max_iter
    return label.reshape(shape), iters.reshape(shape)


# ---------------------------------------------------------------------------
# Curve lifting


def _newton_solve(f: RationalMap, target: complex, w: complex, iters: int = 12):
    for _ in range(iters):
        fw, dfw = f.value_and_derivative(w)
        if dfw == 0 or not cmath.isfinite(fw):
            return w, False
        r = fw - target
        if abs(r) <= 1e-13 * (1.0 + abs(target)):
            return w, True
        step = r / dfw
        w = w - step
        if abs(step) <= 1e-15 * (1.0 + abs(w)):
            return w, True
    fw = f.finite(w)
    return w, abs(fw - target) <= 1e-11 * (1.0 + abs(target))


def _lift_segment(f: RationalMap, w: complex, c0: complex, c1: complex, out: list, depth: int = 0):
    fw, dfw = f.value_and_derivative(w)
    if abs(dfw) < 1e-300 or not cmath.isfinite(dfw):
        raise LiftAmbiguityError("derivative vanishes along the lift (critical point)", point=w)
    pred = w + (c1 - c0) / dfw
    z, ok = _newton_solve(f, c1, pred)
    if ok and abs(z - pred) <= 0.25 * abs(pred - w) + 1e-12 * (1.0 + abs(z)):
        out.append(z)
        return z
    if depth >= 40:
        if abs(c1 - c0) <= 1e-14 * (1.0 + abs(c0)):
            raise LiftAmbiguityError("lift collapsed near a critical value", point=w, value=c0)
        raise NumericalError("corrector diverged while lifting", point=w, value=c0)
    mid = 0.5 * (c0 + c1)
    w = _lift_segment(f, w, c0, mid, out, depth + 1)
    return _lift_segment(f, w, mid, c1, out, depth + 1)


def lift_curve(f: RationalMap, curve: Sequence[complex], start: complex) -> list:
    """Continuous lift of ``curve`` through ``f`` beginning at ``start``.

    Predictor-corrector continuation: tangent predictor ``dc / f'(w)`` then a
    Newton corrector, with segment halving whenever the corrected point drifts
    from the prediction (a sign of a branch jump).
    """
    if not curve:
        return []
    c0 = complex(curve[0])
    fs = f.finite(start)
    if abs(fs - c0) > 1e-7 * (1.0 + abs(c0)):
        raise ValueError(f"start {start} maps to {fs}, not to the first curve point {c0}")
    out = [complex(start)]
    w = complex(start)
    for c1 in curve[1:]:
        c1 = complex(c1)
        if c1 == c0:
            out.append(w)
            continue
        n = len(out)
        w = _lift_segment(f, w, c0, c1, out)
        # keep one output point per input sample
        if len(out) - n > 1:
            del out[n:-1]
        c0 = c1
    return out


def lift_curve_dense(f: RationalMap, curve: Sequence[complex], start: complex) -> list:
    """Like ``lift_curve`` but keeps the subdivision points (finer polyline)."""
    out = [complex(start)]
    w = complex(start)
    c0 = complex(curve[0])
    for c1 in curve[1:]:
        c1 = complex(c1)
        if c1 != c0:
            w = _lift_segment(f, w, c0, c1, out)
        c0 = c1
    return out


# ---------------------------------------------------------------------------
# Internal rays


def local_degree_at(f: RationalMap, z: complex) -> tuple:
    """(k, a): ``f(z + u) - f(z) ~ a u**k``."""
    t = f.taylor(z, max(f.degree, 2) + 1)
    scale = max(abs(c) for c in t[1:]) or 1.0
    k = 1
    while k < len(t) - 1 and abs(t[k]) <= 1e-9 * scale:
        k += 1
    return k, t[k]


def fixed_ray_directions(f: RationalMap, xi: complex) -> list:
    """Unit directions at ``xi`` of the fixed internal rays, one per access."""
    k, a = local_degree_at(f, xi)
    if k < 2:
        raise TracingError("root is not superattracting; internal rays need m = 1", root=xi)
    base = -cmath.phase(a)
    return [cmath.exp(1j * (base + 2 * math.pi * j) / (k - 1)) for j in range(k - 1)]


def trace_internal_ray(
    f: RationalMap,
    root_index: int,
    j: int,
    opts: Options = DEFAULT_OPTIONS,
    samples_per_segment: int = 16,
    max_segments: int = 4000,
) -> RayPolyline:
    """Fixed internal ray ``j`` (1-based) of the immediate basin of root ``root_index``.

    A first fundamental segment is laid out in the Böttcher-linearised disc
    around the root, then extended outwards segment by segment: each new segment
    is the lift of the previous one through the branch that fixes the ray. The
    tracing stops once the ray leaves the escape radius (landing at infinity).
    """
    if not f.roots:
        raise TracingError("map carries no root data; build it with newton_map")
    xi, m = f.roots[root_index]
    if m != 1:
        raise TracingError(f"root {xi} has multiplicity {m}; rays require superattracting roots", root=xi)
    k, a = local_degree_at(f, xi)
    if k < 2:
        raise TracingError(f"root {xi} is not superattracting", root=xi)
    if not 1 <= j <= k - 1:
        raise ValueError(f"ray index {j} outside 1..{k - 1}")
    e = fixed_ray_directions(f, xi)[j - 1]
    # |a| u0^(k-1) = 1e-9: the model a u^k is accurate to ~1e-9 relative there
    u0 = (1e-9 / abs(a)) ** (1.0 / (k - 1))
    p0 = xi + u0 * e
    s = (u0 / abs(a)) ** (1.0 / k)
    p1, ok = _newton_solve(f, p0, xi + s * e)
    if not ok:
        raise TracingError("could not seed the ray near its root", root=xi)
    seg = [p0 + (p1 - p0) * t / (samples_per_segment - 1) for t in range(samples_per_segment)]
    points = [complex(xi)] + seg
    last = seg
    for _ in range(max_segments):
        try:
            nxt = lift_curve_dense(f, last, last[-1])
        except NumericalError as exc:
            raise TracingError(f"ray tracing stalled: {exc}", last_point=points[-1]) from exc
        nxt = _thin(nxt, samples_per_segment)
        points.extend(nxt[1:])
        last = nxt
        if abs(points[-1]) > opts.escape_radius:
            return RayPolyline(root_index, j, tuple(points), INF, cmath.phase(e))
    raise TracingError("ray did not reach the escape radius", last_point=points[-1])


def _thin(pts: list, target: int) -> list:
    """Drop interior samples so a segment keeps roughly ``target`` points."""
    if len(pts) <= 2 * target:
        return pts
    step = len(pts) / (target - 1)
    idx = sorted({min(len(pts) - 1, int(round(i * step))) for i in range(target)} | {0, len(pts) - 1})
    return [pts[i] for i in idx]


def distance_to_polyline(p: complex, poly: Sequence[complex]) -> float:
    arr = np.asarray(poly, dtype=complex)
    a = arr[:-1]
    b = arr[1:]
    ab = b - a
    denom = np.abs(ab) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(denom > 0, ((p - a) * np.conj(ab)).real / denom, 0.0)
    t = np.clip(t, 0.0, 1.0)
    proj = a + t * ab
    return float(np.min(np.abs(p - proj))) if len(proj) else float(abs(p - arr[0]))
