"""Locate and classify the degeneracy locus of a 2-form.

Everything is driven by ``c = top_power(omega)``.  Candidate hypersurfaces
come from bounded trial division (coordinate hyperplanes, ``v +- w``,
indefinite sums of three squares) and from user input; each surviving
candidate gets an exact order of vanishing (negative for poles) and is then
certified at sample points on the surface.  Points where ``c`` and ``dc``
both vanish and which no higher-order surface explains are reported with
the Hessian signature of ``c``.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.optimize import least_squares

from .forms import Chart, DiffForm, ext_deriv, top_power
from .symbolic import (DomainError, Monomial, PoleError, Polynomial, SymbolicError, SymExpr, as_expr,
                       compile_many)

__all__ = [
    "HypersurfaceSpec",
    "SurfaceReport",
    "CriticalPoint",
    "SingularityReport",
    "NonPrincipalVanishing",
    "UnresolvableCoefficient",
    "order_along",
    "order_along_radial",
    "detect_hypersurfaces",
    "sample_surface",
    "morse_signature",
    "classify",
    "loglog_order",
]

ZERO_TOL = 1e-12


class NonPrincipalVanishing(SymbolicError):
    """``c`` vanishes on the surface but trial division finds no factor."""


class UnresolvableCoefficient(SymbolicError):
    """``c`` vanishes somewhere that no candidate hypersurface accounts for."""


Point = dict[str, Fraction | float]


@dataclass(frozen=True)
class HypersurfaceSpec:
    polynomial: SymExpr
    label: str = ""
    samples: tuple[Point, ...] = ()
    boundary: bool = False

    def __post_init__(self):
        h = as_expr(self.polynomial)
        if not h.is_polynomial() or h.radicals:
            raise ValueError(f"defining function must be a polynomial, got {h}")
        if h.is_constant():
            raise ValueError("defining polynomial is a unit")
        object.__setattr__(self, "polynomial", h)
        if not self.label:
            object.__setattr__(self, "label", f"{h} = 0")
        for p in self.samples:
            v = h.evaluate(p)
            if abs(v) > ZERO_TOL * max(1.0, max(abs(float(x)) for x in p.values()) if p else 1.0):
                raise ValueError(f"sample {p} is not on {self.label}")

    @property
    def poly(self) -> Polynomial:
        return self.polynomial.num

    def single_variable(self) -> str | None:
        p = self.poly
        if len(p.terms) == 1:
            (m, _), = p.terms.items()
            if len(m) == 1 and m[0][1] == 1:
                return m[0][0]
        return None

    def with_samples(self, samples: Sequence[Point]) -> "HypersurfaceSpec":
        return HypersurfaceSpec(self.polynomial, self.label, tuple(samples), self.boundary)


# -- orders -------------------------------------------------------------------


def _multiplicity(p: Polynomial, h: Polynomial) -> int:
    k = 0
    while not p.is_zero():
        q = p.divide_exact(h)
        if q is None:
            break
        p, k = q, k + 1
    return k


def _raw_order(c: SymExpr, h: HypersurfaceSpec) -> Fraction:
    v = h.single_variable()
    if v is not None:
        return Fraction(c.num.min_exponent(v)) - Fraction(c.den.min_exponent(v))
    hp = h.poly
    return Fraction(_multiplicity(c.num, hp) - _multiplicity(c.den, hp))


def order_along_radial(c: SymExpr, var: str) -> Fraction:
    """Order along ``var = 0`` for a radial variable, via ``var = rho^2``.

    After the substitution every exponent is an integer, so the order in
    ``rho`` comes from plain monomial multiplicities; halving it gives the
    order in ``var``.
    """
    rho = "_rho_" + var
    e = c.substitute({var: SymExpr.var(rho) ** 2})
    if e.has_half_integer_exponents() and rho in e.radial:
        raise SymbolicError("substitution left half-integer exponents")
    k = Fraction(e.num.min_exponent(rho)) - Fraction(e.den.min_exponent(rho))
    return k / 2


def order_along(c, h: HypersurfaceSpec | SymExpr | str, samples: Sequence[Point] = ()) -> Fraction:
    """Multiplicity of ``h`` in the numerator minus that in the denominator.

    Radial hyperplanes go through :func:`order_along_radial`.  When the
    result is 0 but ``c`` vanishes at every sample of ``{h = 0}``, the zero
    is not principal along ``h`` and :class:`NonPrincipalVanishing` is raised.
    """
    c = as_expr(c)
    if not isinstance(h, HypersurfaceSpec):
        h = HypersurfaceSpec(as_expr(h) if not isinstance(h, str) else SymExpr.var(h))
    if c.is_zero():
        raise SymbolicError("order of the zero function is undefined")
    v = h.single_variable()
    if v is not None and v in c.radial:
        k = order_along_radial(c, v)
    else:
        k = _raw_order(c, h)
    pts = list(samples) or list(h.samples)
    if k == 0 and pts:
        vals = []
        for p in pts:
            try:
                vals.append(abs(float(c.evaluate(p))))
            except (PoleError, DomainError):
                vals.append(math.inf)
        if all(x < 1e-10 for x in vals):
            raise NonPrincipalVanishing(f"{c} vanishes on {h.label} but {h.polynomial} divides neither part")
    return k


def loglog_order(c, point: Mapping[str, float], var: str, scales: Sequence[float] | None = None) -> float:
    """Least-squares slope of ``log|c|`` against ``log var`` as ``var -> 0``."""
    c = as_expr(c)
    ts = np.geomspace(1e-2, 1e-6, 9) if scales is None else np.asarray(scales, dtype=float)
    xs, ys = [], []
    for t in ts:
        p = {k: float(x) for k, x in point.items()}
        p[var] = float(t)
        xs.append(math.log(t))
        ys.append(math.log(abs(float(c.evaluate(p)))))
    slope, _ = np.polyfit(xs, ys, 1)
    return float(slope)


# -- candidate surfaces ----------------------------------------------------------


def _poly_vars(p: Polynomial, radicals: Mapping[str, Polynomial]) -> list[str]:
    return sorted(v for v in p.variables() if v not in radicals)


def _candidates(variables: Sequence[str], deg2: set[str], radial: frozenset[str]) -> list[tuple[str, SymExpr]]:
    out: list[tuple[str, SymExpr]] = []
    x = {v: SymExpr.var(v, radial=v in radial) for v in variables}
    for v in variables:
        out.append((f"{v} = 0", x[v]))
    for v, w in itertools.combinations(variables, 2):
        out.append((f"{v} - {w} = 0", x[v] - x[w]))
        out.append((f"{v} + {w} = 0", x[v] + x[w]))
    sq = sorted(deg2)
    for a, b, c in itertools.combinations(sq, 3):
        for signs in ((1, 1, -1), (1, -1, 1), (-1, 1, 1)):
            h = x[a] ** 2 * signs[0] + x[b] ** 2 * signs[1] + x[c] ** 2 * signs[2]
            out.append((f"{h} = 0", h))
    return out


def _same_surface(a: SymExpr, b: SymExpr) -> bool:
    q = a / b
    return q.is_constant()


def detect_hypersurfaces(c, chart: Chart | None = None,
                         user: Iterable[HypersurfaceSpec] = ()) -> list[HypersurfaceSpec]:
    """Candidate hypersurfaces along which ``c`` has nonzero order.

    Radicands of adjoined square roots that divide the denominator mark the
    chart boundary; they are returned with ``boundary=True``.
    """
    c = as_expr(c)
    found: list[HypersurfaceSpec] = []
    if c.is_zero():
        return found
    for part in (c.num, c.den):
        variables = _poly_vars(part, c.radicals)
        deg2 = {v for v in variables if part.degree_in(v) >= 2}
        for label, h in _candidates(variables, deg2, c.radial):
            if any(_same_surface(h, f.polynomial) for f in found):
                continue
            spec = HypersurfaceSpec(h, label)
            if _raw_order(c, spec) != 0:
                found.append(spec)
    for radicand in sorted(c.radicals.values(), key=str):
        found.append(HypersurfaceSpec(SymExpr(radicand), f"{radicand} = 0 (radicand, chart boundary)",
                                      boundary=True))
    for spec in user:
        if not any(_same_surface(spec.polynomial, f.polynomial) for f in found):
            found.append(spec)
    return found


# -- sampling --------------------------------------------------------------------


def _random_value(rng: random.Random, radial: bool, shrink: int = 0) -> Fraction:
    # range [-3, 3], halved every time ``shrink`` grows by one
    while True:
        x = Fraction(rng.randint(-30, 30), rng.choice((10, 14, 20)) * 2 ** shrink)
        if radial:
            x = abs(x)
        if x != 0:
            return x


def _in_domain(point: Point, chart: Chart, radicands: Iterable[Polynomial]) -> bool:
    for v in chart.radial:
        if v in point and point[v] < 0:
            return False
    for r in radicands:
        try:
            if r.evaluate(point) <= 0:
                return False
        except KeyError:
            return False
    return True


def sample_surface(h: HypersurfaceSpec, chart: Chart, count: int = 5, seed: int = 0,
                   radicands: Iterable[Polynomial] = (), tries: int = 400) -> list[Point]:
    """Points on ``{h = 0}`` inside the chart domain.

    Solves exactly for a variable of degree 1 when one exists (rational
    points), otherwise uses the quadratic formula in a degree-2 variable.
    """
    rng = random.Random(seed)
    rads = list(radicands)
    p = h.poly
    hv = sorted(p.variables())
    lin = [v for v in hv if p.degree_in(v) == 1]
    quad = [v for v in hv if p.degree_in(v) == 2]
    out: list[Point] = []
    for attempt in range(tries):
        if len(out) >= count:
            break
        free = {v: _random_value(rng, v in chart.radial, attempt // 50) for v in chart.variables}
        if lin:
            v = lin[0]
            parts = p.by_power(v)
            a = parts.get(1, Polynomial()).evaluate(free)
            b = parts.get(0, Polynomial()).evaluate(free)
            if a == 0:
                continue
            free[v] = -Fraction(b) / Fraction(a)
        elif quad:
            v = quad[0]
            parts = p.by_power(v)
            a = float(parts.get(2, Polynomial()).evaluate(free))
            b = float(parts.get(1, Polynomial()).evaluate(free))
            cc = float(parts.get(0, Polynomial()).evaluate(free))
            disc = b * b - 4 * a * cc
            if a == 0 or disc < 0:
                continue
            root = (-b + rng.choice((-1, 1)) * math.sqrt(disc)) / (2 * a)
            free = {k: float(x) for k, x in free.items()}
            free[v] = root
        else:
            break
        if _in_domain(free, chart, rads):
            out.append(free)
    return out


def sample_chart(chart: Chart, count: int = 12, seed: int = 0, radicands: Iterable[Polynomial] = ()) -> list[Point]:
    rng = random.Random(seed)
    rads = list(radicands)
    out: list[Point] = []
    for attempt in range(count * 40):
        if len(out) >= count:
            break
        p = {v: _random_value(rng, v in chart.radial, attempt // 50) for v in chart.variables}
        if _in_domain(p, chart, rads):
            out.append(p)
    return out


def _safe_eval(e: SymExpr, p: Point) -> float | None:
    try:
        return float(e.evaluate(p))
    except (PoleError, DomainError, ZeroDivisionError, ValueError):
        return None


def _nonzero(x: float | None, scale: float = 1.0) -> bool:
    return x is not None and math.isfinite(x) and abs(x) > 1e-10 * scale


# -- critical points ----------------------------------------------------------------


@dataclass(frozen=True)
class CriticalPoint:
    point: dict[str, float]
    signature: tuple[int, ...] | None  # eigenvalue signs, None when the Hessian is degenerate
    kind: str  # "hyperbolic", "elliptic", "degenerate"
    variables: tuple[str, ...] = ()
    eigenvalues: tuple[float, ...] = ()

    def signature_str(self) -> str:
        if self.signature is None:
            return "degenerate"
        return "(" + ",".join("+" if s > 0 else "-" for s in self.signature) + ")"


def _hessian_fn(c: SymExpr, variables: Sequence[str]):
    grads = [c.diff(v) for v in variables]
    hess = [[grads[i].diff(variables[j]) for j in range(len(variables))] for i in range(len(variables))]
    flat = [e for row in hess for e in row]
    return flat, len(variables)


def morse_signature(c, point: Mapping[str, float], variables: Sequence[str] | None = None,
                    chart: Chart | None = None) -> CriticalPoint:
    """Eigenvalue signs of the Hessian of ``c`` at ``point``.

    The Hessian is restricted to the variables that occur in ``c``; an
    eigenvalue below ``1e-9 * max(1, |H|)`` makes the point degenerate and
    no signature is produced.
    """
    c = as_expr(c)
    if variables is None:
        variables = [v for v in (chart.variables if chart else sorted(c.variables())) if v in c.variables()]
    variables = list(variables)
    pt = {k: float(v) for k, v in point.items()}
    if not variables:
        return CriticalPoint(pt, None, "degenerate", (), ())
    flat, n = _hessian_fn(c, variables)
    vals = [e.evaluate({k: point[k] for k in e.variables()}) if e.variables() else e.constant_value() for e in flat]
    hmat = np.array([float(x) for x in vals]).reshape(n, n)
    hmat = 0.5 * (hmat + hmat.T)
    eig = np.linalg.eigvalsh(hmat)
    scale = max(1.0, float(np.max(np.abs(eig))) if eig.size else 1.0)
    if np.any(np.abs(eig) < 1e-9 * scale):
        return CriticalPoint(pt, None, "degenerate", tuple(variables), tuple(float(e) for e in eig))
    signs = tuple(1 if e > 0 else -1 for e in sorted(eig, reverse=True))
    kind = "elliptic" if len(set(signs)) == 1 else "hyperbolic"
    return CriticalPoint(pt, signs, kind, tuple(variables), tuple(float(e) for e in eig))


def _critical_search(c: SymExpr, chart: Chart, seed: int, radicands: Sequence[Polynomial],
                     seeds: int = 6) -> list[dict[str, float]]:
    variables = [v for v in chart.variables if v in c.variables()]
    if not variables or c.is_constant():
        return []
    grads = [c.diff(v) for v in variables]
    found: list[dict[str, float]] = []

    # the chart origin, exactly, when it lies in the domain
    origin = {v: Fraction(0) for v in chart.variables}
    if _in_domain(origin, chart, radicands):
        c0 = _safe_eval(c, origin)
        if c0 == 0 and all(_safe_eval(g, origin) == 0 for g in grads):
            found.append({v: 0.0 for v in chart.variables})

    f = compile_many([c] + grads, variables)
    rng = np.random.default_rng(seed)
    lo = np.array([0.0 if v in chart.radial else -2.0 for v in variables])
    hi = np.full(len(variables), 2.0)
    big = np.full(len(variables) + 1, 1e3)

    def resid(x):
        try:
            out = np.asarray(f(x), dtype=float)
        except (ZeroDivisionError, DomainError, OverflowError, ValueError):
            return big
        return out if np.all(np.isfinite(out)) else big

    others = {v: 1.0 for v in chart.variables if v not in variables}
    for _ in range(seeds):
        x0 = rng.uniform(lo, hi)
        x0 = np.clip(x0, lo + 1e-3 * (lo == 0), hi)
        try:
            sol = least_squares(resid, x0, bounds=(lo, hi), xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=400)
        except ValueError:
            continue
        if not np.all(np.isfinite(sol.fun)) or np.linalg.norm(sol.fun) > 1e-9:
            continue
        x = np.where(np.abs(sol.x) < 1e-7, 0.0, sol.x)
        pt = dict(others)
        pt.update(zip(variables, (float(t) for t in x)))
        if any(max(abs(pt[v] - q[v]) for v in variables) < 1e-3 for q in found):
            continue
        found.append(pt)
    return found


# -- reports --------------------------------------------------------------------


@dataclass
class SurfaceReport:
    label: str
    polynomial: str
    order: Fraction
    kind: str  # "fold", "pole", "dirac-pole", "dirac-zero", "boundary"
    verdict: str
    transverse: bool | None = None
    certified: bool = True
    samples: list[dict[str, str]] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "polynomial": self.polynomial,
            "order": str(self.order),
            "kind": self.kind,
            "verdict": self.verdict,
            "transverse": self.transverse,
            "certified": self.certified,
            "samples": self.samples,
            "notes": self.notes,
        }


@dataclass
class SingularityReport:
    verdict: str  # "symplectic", "b^m", "m-folded", "mixed-dirac", "degenerate-nontransverse"
    m: Fraction | None
    top_coefficient: str
    chart: str
    surfaces: list[SurfaceReport] = field(default_factory=list)
    critical_points: list[CriticalPoint] = field(default_factory=list)
    closed: bool = True
    notes: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def label(self) -> str:
        if self.verdict == "b^m":
            return f"b^{self.m}"
        if self.verdict == "m-folded":
            return f"{self.m}-folded"
        return self.verdict

    @property
    def transverse(self) -> bool:
        return not self.critical_points and all(s.transverse is not False for s in self.surfaces)

    def order_of(self, polynomial) -> Fraction | None:
        target = as_expr(polynomial)
        for s in self.surfaces:
            if _same_surface(as_expr(_parse_poly(s.polynomial)), target):
                return s.order
        return None

    def to_dict(self) -> dict:
        return {
            "verdict": self.label,
            "kind": self.verdict,
            "m": None if self.m is None else str(self.m),
            "chart": self.chart,
            "top_coefficient": self.top_coefficient,
            "closed": self.closed,
            "transverse": self.transverse,
            "surfaces": [s.to_dict() for s in self.surfaces],
            "critical_points": [
                {"point": {k: repr(v) for k, v in sorted(cp.point.items())}, "signature": cp.signature_str(),
                 "type": cp.kind, "variables": list(cp.variables),
                 "eigenvalues": [repr(e) for e in cp.eigenvalues]}
                for cp in self.critical_points
            ],
            "notes": self.notes,
            "warnings": self.warnings,
        }

    def to_text(self) -> str:
        lines = [f"verdict: {self.label}", f"chart: {self.chart}", f"top coefficient: {self.top_coefficient}",
                 f"closed: {'yes' if self.closed else 'NO'}"]
        for s in self.surfaces:
            t = "" if s.transverse is None else f", transverse={'yes' if s.transverse else 'no'}"
            lines.append(f"surface {s.label}: order {s.order}, {s.kind} -> {s.verdict}{t}")
            lines += [f"  note: {n}" for n in s.notes]
        for cp in self.critical_points:
            pt = ", ".join(f"{k}={v:.6g}" for k, v in sorted(cp.point.items()) if k in cp.variables)
            lines.append(f"critical point ({pt}): signature {cp.signature_str()} [{cp.kind}]")
        lines += [f"note: {n}" for n in self.notes]
        lines += [f"warning: {w}" for w in self.warnings]
        return "\n".join(lines) + "\n"


def _parse_poly(text: str) -> SymExpr:
    from .grammar import parse_expr
    return parse_expr(text)


def _fmt_point(p: Point) -> dict[str, str]:
    return {k: str(v) if isinstance(v, Fraction) else repr(float(v)) for k, v in sorted(p.items())}


def _all_radicands(omega: DiffForm, c: SymExpr) -> list[Polynomial]:
    rads = dict(c.radicals)
    for e in omega.coeffs.values():
        rads.update(e.radicals)
    return list(rads.values())


def _on_surface(h: SymExpr, p: Mapping[str, float]) -> bool:
    v = _safe_eval(h, p)
    return v is not None and abs(v) < 1e-7


def classify(omega: DiffForm, chart: Chart | None = None, user_surfaces: Iterable[HypersurfaceSpec] = (),
             seed: int = 0, samples: int = 5) -> SingularityReport:
    """Classify the singular locus of a 2-form (see module docstring)."""
    chart = chart or omega.chart
    if chart != omega.chart:
        raise ValueError("form does not live on the given chart")
    if omega.degree != 2 or chart.dimension % 2:
        raise ValueError("classify needs a 2-form on an even-dimensional chart")
    c = top_power(omega)
    rads = _all_radicands(omega, c)
    closed = ext_deriv(omega).is_zero()
    report = SingularityReport("symplectic", None, str(c), chart.name, closed=closed)
    if not closed:
        report.warnings.append("form is not closed; verdict describes the top power only")
    if c.is_zero():
        raise UnresolvableCoefficient("top power vanishes identically")

    user_surfaces = list(user_surfaces)
    specs = detect_hypersurfaces(c, chart, user_surfaces)
    rng_seed = seed
    folds: list[tuple[HypersurfaceSpec, Fraction, SymExpr]] = []
    poles: list[tuple[HypersurfaceSpec, Fraction, SymExpr]] = []
    residual = c
    for i, spec in enumerate(specs):
        pts = list(spec.samples) or sample_surface(spec, chart, samples, rng_seed + 17 * i, rads)
        spec = spec.with_samples(pts)
        if spec.boundary:
            report.surfaces.append(SurfaceReport(spec.label, str(spec.polynomial), Fraction(0), "boundary",
                                                 "out-of-chart", None, True, [_fmt_point(p) for p in pts[:3]],
                                                 ["flagged as outside the chart; not classified"]))
            continue
        k = order_along(c, spec)
        if k == 0:
            if spec in user_surfaces:
                report.notes.append(f"{spec.label}: order 0, not part of the singular locus")
            continue
        h = spec.polynomial
        rescaled = c / (h ** k)
        residual = residual / (h ** k)
        vals = [_safe_eval(rescaled, p) for p in pts]
        nondeg = bool(pts) and all(_nonzero(v) for v in vals)
        sr = SurfaceReport(spec.label, str(h), k, "fold" if k > 0 else "pole", "", None, nondeg,
                           [_fmt_point(p) for p in pts[:3]])
        if not pts:
            sr.notes.append("no sample points found on the surface inside the chart")
        if k.denominator != 1:
            sr.notes.append("fractional order via radial variable")
        if k > 0:
            if k == 1:
                dc = [c.diff(v) for v in chart.variables if v in c.variables()]
                sr.transverse = bool(pts) and all(any(_nonzero(_safe_eval(g, p)) for g in dc) for p in pts)
            else:
                sr.transverse = nondeg
            sr.verdict = f"{k}-folded" if nondeg else "degenerate"
            folds.append((spec, k, rescaled))
        else:
            m = -k
            coeff_orders = [order_along(e, spec) for e in omega.coeffs.values()]
            worst = min(coeff_orders) if coeff_orders else Fraction(0)
            ok_poles = worst >= -m
            if not ok_poles:
                sr.notes.append(f"a coefficient of the form has a pole of order {-worst} > {m}")
            sr.certified = nondeg and ok_poles
            sr.transverse = sr.certified
            sr.verdict = f"b^{m}" if m.denominator == 1 and sr.certified else "degenerate"
            poles.append((spec, k, rescaled))
        if not nondeg and pts:
            sr.notes.append("rescaled coefficient vanishes at a sample point")
        report.surfaces.append(sr)

    # coefficient-level poles that cancel in the top power
    known = [as_expr(s.polynomial) for s in specs]
    dirac_poles: list[SurfaceReport] = []
    for e in omega.coeffs.values():
        if e.den.is_constant():
            continue
        for spec in detect_hypersurfaces(SymExpr(Polynomial.const(1), e.den, e.radial)):
            if spec.boundary or any(_same_surface(spec.polynomial, h) for h in known):
                continue
            known.append(spec.polynomial)
            worst = min(order_along(x, spec) for x in omega.coeffs.values())
            pts = sample_surface(spec, chart, samples, rng_seed + 1000 + len(known), rads)
            dirac_poles.append(SurfaceReport(spec.label, str(spec.polynomial), worst, "dirac-pole", "dirac-pole",
                                             None, True, [_fmt_point(p) for p in pts[:3]],
                                             ["form coefficients have a pole here while the top power does not"]))
    if dirac_poles:
        report.surfaces.extend(dirac_poles)
        zeros: list[SurfaceReport] = []
        for e in omega.coeffs.values():
            for spec in detect_hypersurfaces(SymExpr(e.num, None, e.radial, e.radicals)):
                if spec.boundary or any(_same_surface(spec.polynomial, h) for h in known):
                    continue
                known.append(spec.polynomial)
                zeros.append(SurfaceReport(spec.label, str(spec.polynomial), order_along(e, spec), "dirac-zero",
                                           "dirac-zero", None, True, [],
                                           ["zero of a form coefficient"]))
        report.surfaces.extend(zeros)

    # Critical points of c on {c = 0} that no fold of order > 1 explains.
    # Dividing out h^(k-1) for those folds leaves simple zeros there, so the
    # search runs on the reduced coefficient.
    reduced = c
    for spec, k, rescaled in folds:
        if k > 1:
            reduced = reduced / (spec.polynomial ** (k - 1))
    for p in _critical_search(reduced, chart, seed, rads):
        report.critical_points.append(morse_signature(c, p, chart=chart))

    if report.critical_points:
        report.verdict = "degenerate-nontransverse"
        return report

    pole_surfaces = [s for s in report.surfaces if s.kind == "pole"]
    fold_surfaces = [s for s in report.surfaces if s.kind == "fold"]
    if dirac_poles:
        report.verdict = "mixed-dirac"
        return report
    if not pole_surfaces and not fold_surfaces:
        _check_nonvanishing(residual, chart, seed, rads)
        report.verdict = "symplectic"
        return report
    if pole_surfaces and fold_surfaces:
        report.verdict = "mixed-dirac"
        return report
    group = pole_surfaces or fold_surfaces
    orders = {s.order for s in group}
    if len(orders) != 1 or not all(s.certified for s in group):
        report.verdict = "mixed-dirac" if len(orders) != 1 else "degenerate-nontransverse"
        if report.verdict == "degenerate-nontransverse":
            report.notes.append("singular surface fails the sample certification")
        return report
    _check_nonvanishing(residual, chart, seed, rads)
    k = orders.pop()
    if pole_surfaces:
        if k.denominator != 1:
            report.verdict = "mixed-dirac"
            report.notes.append(f"pole of fractional order {-k}")
            return report
        report.verdict, report.m = "b^m", -k
    else:
        report.verdict, report.m = "m-folded", k
        if k.denominator != 1:
            report.notes.append("fractional order via radial variable")
    return report


def _check_nonvanishing(residual: SymExpr, chart: Chart, seed: int, rads: Sequence[Polynomial]) -> None:
    """Raise unless ``residual`` (``c`` with the known surfaces divided out) keeps a sign."""
    if residual.is_constant():
        return
    pts = sample_chart(chart, 24, seed + 7, rads)
    vals = [_safe_eval(residual, p) for p in pts]
    vals = [v for v in vals if v is not None]
    if any(abs(v) < 1e-12 for v in vals) or (vals and min(vals) < 0 < max(vals)):
        raise UnresolvableCoefficient(f"{residual} vanishes inside the chart and no candidate factor explains it")
