"""Differential forms with rational-function coefficients on a single chart.

A k-form is stored as ``{(i1 < ... < ik): coefficient}`` over the chart's
variable indices.  Angular coordinates only ever appear through their
differentials, so they are ordinary basis covectors here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from typing import Iterable, Mapping, Sequence

from .grammar import parse_expr
from .symbolic import Number, SymExpr, as_expr, compile_many

__all__ = [
    "Chart",
    "DiffForm",
    "CoordinateMap",
    "ChartMismatch",
    "wedge",
    "ext_deriv",
    "pullback",
    "top_power",
    "top_power_by_wedge",
    "compose",
    "pfaffian",
]


class ChartMismatch(ValueError):
    """Operands live on different charts, or a map does not fit a form."""


@dataclass(frozen=True)
class Chart:
    name: str
    variables: tuple[str, ...]
    radial: frozenset[str] = frozenset()
    angular: frozenset[str] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "radial", frozenset(self.radial))
        object.__setattr__(self, "angular", frozenset(self.angular))
        if len(set(self.variables)) != len(self.variables):
            raise ValueError(f"chart {self.name!r}: duplicate variable names")
        extra = (self.radial | self.angular) - set(self.variables)
        if extra:
            raise ValueError(f"chart {self.name!r}: flags on unknown variables {sorted(extra)}")

    @property
    def dimension(self) -> int:
        return len(self.variables)

    def index(self, var: str) -> int:
        try:
            return self.variables.index(var)
        except ValueError:
            raise ChartMismatch(f"{var!r} is not a coordinate of chart {self.name!r}") from None

    def var(self, name: str) -> SymExpr:
        self.index(name)
        return SymExpr.var(name, radial=name in self.radial)

    def vars(self) -> list[SymExpr]:
        return [self.var(v) for v in self.variables]

    def parse(self, text: str, line: int = 1, column: int = 1) -> SymExpr:
        return parse_expr(text, radial=self.radial, line=line, column=column)

    def canonical_form(self) -> "DiffForm":
        """``sum_i dx_i ^ dx_{i+n}``: first half positions, second half momenta."""
        n, rem = divmod(self.dimension, 2)
        if rem:
            raise ValueError(f"chart {self.name!r} has odd dimension")
        return DiffForm(self, 2, {(i, i + n): as_expr(1) for i in range(n)})

    def point(self, values: Mapping[str, Number] | Sequence[Number]) -> dict[str, Number]:
        if isinstance(values, Mapping):
            return dict(values)
        if len(values) != self.dimension:
            raise ValueError(f"expected {self.dimension} coordinates, got {len(values)}")
        return dict(zip(self.variables, values))


def _sort_sign(idx: Sequence[int]) -> tuple[int, tuple[int, ...]]:
    """Sign of the sorting permutation (0 if an index repeats) and the sorted tuple."""
    arr = list(idx)
    sign = 1
    for i in range(1, len(arr)):
        j = i
        while j > 0 and arr[j - 1] > arr[j]:
            arr[j - 1], arr[j] = arr[j], arr[j - 1]
            sign = -sign
            j -= 1
    for a, b in zip(arr, arr[1:]):
        if a == b:
            return 0, ()
    return sign, tuple(arr)


class DiffForm:
    """Alternating k-form on ``chart`` with :class:`SymExpr` coefficients."""

    __slots__ = ("chart", "degree", "coeffs")

    def __init__(self, chart: Chart, degree: int, coeffs: Mapping[Sequence[int], object] | None = None):
        if degree < 0 or degree > chart.dimension:
            raise ValueError(f"degree {degree} impossible on a {chart.dimension}-dimensional chart")
        acc: dict[tuple[int, ...], SymExpr] = {}
        for idx, c in (coeffs or {}).items():
            if len(idx) != degree:
                raise ValueError(f"index {idx} does not have length {degree}")
            if any(not 0 <= i < chart.dimension for i in idx):
                raise ValueError(f"index {idx} out of range")
            sign, key = _sort_sign(idx)
            if not sign:
                continue
            c = as_expr(c)
            acc[key] = acc[key] + c * sign if key in acc else c * sign
        self.chart = chart
        self.degree = degree
        self.coeffs = {k: v for k, v in acc.items() if not v.is_zero()}

    @classmethod
    def from_names(cls, chart: Chart, terms: Mapping[Sequence[str], object], degree: int | None = None) -> "DiffForm":
        """Build from ``{("x", "y"): coeff}``; coefficient strings are parsed on ``chart``."""
        out = {}
        for names, c in terms.items():
            if isinstance(names, str):
                names = (names,)
            idx = tuple(chart.index(v) for v in names)
            out[idx] = chart.parse(c) if isinstance(c, str) else c
            if degree is None:
                degree = len(idx)
        return cls(chart, degree or 0, out)

    @classmethod
    def scalar(cls, chart: Chart, f) -> "DiffForm":
        return cls(chart, 0, {(): f})

    @classmethod
    def d(cls, chart: Chart, var: str) -> "DiffForm":
        return cls(chart, 1, {(chart.index(var),): 1})

    # -- queries -------------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.coeffs

    def coefficient(self, *names: str) -> SymExpr:
        idx = tuple(self.chart.index(v) for v in names)
        sign, key = _sort_sign(idx)
        if not sign:
            return as_expr(0)
        return self.coeffs.get(key, as_expr(0)) * sign

    def terms(self) -> list[tuple[tuple[str, ...], SymExpr]]:
        return [(tuple(self.chart.variables[i] for i in k), c) for k, c in sorted(self.coeffs.items())]

    def _check(self, other: "DiffForm") -> None:
        if self.chart != other.chart:
            raise ChartMismatch(f"chart {self.chart.name!r} vs {other.chart.name!r}")

    def __eq__(self, other) -> bool:
        if not isinstance(other, DiffForm):
            return NotImplemented
        if self.chart != other.chart or self.degree != other.degree:
            return False
        keys = self.coeffs.keys() | other.coeffs.keys()
        zero = as_expr(0)
        return all(self.coeffs.get(k, zero) == other.coeffs.get(k, zero) for k in keys)

    __hash__ = None  # type: ignore[assignment]

    # -- linear structure ----------------------------------------------------

    def __add__(self, other: "DiffForm") -> "DiffForm":
        self._check(other)
        if self.degree != other.degree:
            raise ValueError("cannot add forms of different degree")
        out = dict(self.coeffs)
        for k, c in other.coeffs.items():
            out[k] = out[k] + c if k in out else c
        return DiffForm(self.chart, self.degree, out)

    def __neg__(self) -> "DiffForm":
        return DiffForm(self.chart, self.degree, {k: -c for k, c in self.coeffs.items()})

    def __sub__(self, other: "DiffForm") -> "DiffForm":
        return self + (-other)

    def scale(self, f) -> "DiffForm":
        f = as_expr(f)
        return DiffForm(self.chart, self.degree, {k: c * f for k, c in self.coeffs.items()})

    def __mul__(self, f) -> "DiffForm":
        if isinstance(f, DiffForm):
            return wedge(self, f)
        return self.scale(f)

    __rmul__ = scale

    def __xor__(self, other: "DiffForm") -> "DiffForm":
        return wedge(self, other)

    def map_coefficients(self, fn) -> "DiffForm":
        return DiffForm(self.chart, self.degree, {k: fn(c) for k, c in self.coeffs.items()})

    # -- numerics ------------------------------------------------------------

    def matrix_function(self):
        """For a 2-form, a float function ``x -> A`` with ``A[i][j] = omega(d_i, d_j)``."""
        if self.degree != 2:
            raise ValueError("coefficient matrix needs a 2-form")
        import numpy as np

        keys = sorted(self.coeffs)
        n = self.chart.dimension
        if not keys:
            return lambda x: np.zeros((n, n))
        f = compile_many([self.coeffs[k] for k in keys], self.chart.variables)
        rows = np.array([k[0] for k in keys])
        cols = np.array([k[1] for k in keys])

        def mat(x):
            vals = np.asarray(f(x), dtype=float)
            a = np.zeros((n, n))
            a[rows, cols] = vals
            a[cols, rows] = -vals
            return a

        return mat

    def __str__(self) -> str:
        if not self.coeffs:
            return "0"
        parts = []
        for names, c in self.terms():
            basis = "^".join(f"d{v}" for v in names)
            parts.append(f"({c}) {basis}" if basis else f"({c})")
        return " + ".join(parts)

    def __repr__(self) -> str:
        return f"DiffForm<{self.chart.name}, {self.degree}>({self})"


def wedge(a: DiffForm, b: DiffForm) -> DiffForm:
    """Graded-antisymmetric product."""
    a._check(b)
    deg = a.degree + b.degree
    if deg > a.chart.dimension:
        raise ValueError(f"wedge degree {deg} exceeds chart dimension {a.chart.dimension}")
    out: dict[tuple[int, ...], SymExpr] = {}
    for ka, ca in a.coeffs.items():
        for kb, cb in b.coeffs.items():
            sign, key = _sort_sign(ka + kb)
            if not sign:
                continue
            term = ca * cb
            if sign < 0:
                term = -term
            out[key] = out[key] + term if key in out else term
    return DiffForm(a.chart, deg, out)


def ext_deriv(a: DiffForm) -> DiffForm:
    """Exterior derivative ``d``.  ``d`` of a top-degree form is returned as
    the zero form of the same degree, since no higher degree exists."""
    chart = a.chart
    if a.degree == chart.dimension:
        return DiffForm(chart, a.degree, {})
    out: dict[tuple[int, ...], SymExpr] = {}
    for key, c in a.coeffs.items():
        free = c.variables()
        for j, v in enumerate(chart.variables):
            if j in key or v not in free:
                continue
            dc = c.diff(v)
            if dc.is_zero():
                continue
            sign, k = _sort_sign((j,) + key)
            term = dc if sign > 0 else -dc
            out[k] = out[k] + term if k in out else term
    return DiffForm(chart, a.degree + 1, out)


@dataclass(frozen=True)
class CoordinateMap:
    """``target coordinates = components(source coordinates)``.

    ``inverse`` optionally expresses source coordinates through target ones,
    valid on the open set described by ``domain``.
    """

    name: str
    source: Chart
    target: Chart
    components: tuple[SymExpr, ...]
    inverse: tuple[SymExpr, ...] | None = None
    domain: str = ""

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(as_expr(c) for c in self.components))
        if len(self.components) != self.target.dimension:
            raise ValueError(f"map {self.name!r}: {len(self.components)} components for a "
                             f"{self.target.dimension}-dimensional target")
        if self.inverse is not None:
            object.__setattr__(self, "inverse", tuple(as_expr(c) for c in self.inverse))
            if len(self.inverse) != self.source.dimension:
                raise ValueError(f"map {self.name!r}: inverse has wrong length")
        extra = set().union(*(c.variables() for c in self.components)) - set(self.source.variables)
        if extra:
            raise ValueError(f"map {self.name!r}: components use unknown variables {sorted(extra)}")

    @classmethod
    def from_strings(cls, name: str, source: Chart, target: Chart, components: Mapping[str, str] | Sequence[str],
                     inverse: Mapping[str, str] | Sequence[str] | None = None, domain: str = "") -> "CoordinateMap":
        def parse_all(chart_in: Chart, chart_out: Chart, spec):
            if isinstance(spec, Mapping):
                spec = [spec.get(v, v) for v in chart_out.variables]
            return tuple(chart_in.parse(s) if isinstance(s, str) else as_expr(s) for s in spec)

        comps = parse_all(source, target, components)
        inv = parse_all(target, source, inverse) if inverse is not None else None
        return cls(name, source, target, comps, inv, domain)

    @classmethod
    def identity(cls, chart: Chart) -> "CoordinateMap":
        return cls(f"identity:{chart.name}", chart, chart, tuple(chart.vars()), tuple(chart.vars()))

    def substitution(self) -> dict[str, SymExpr]:
        return dict(zip(self.target.variables, self.components))

    def jacobian(self) -> list[list[SymExpr]]:
        """``J[j][i] = d target_j / d source_i``."""
        return [[c.diff(v) for v in self.source.variables] for c in self.components]

    def differentials(self) -> list[DiffForm]:
        """Pulled-back coordinate differentials ``d(phi_j)`` as 1-forms on the source."""
        out = []
        for c in self.components:
            free = c.variables()
            out.append(DiffForm(self.source, 1, {(i,): c.diff(v) for i, v in enumerate(self.source.variables)
                                                 if v in free}))
        return out

    def inverse_map(self) -> "CoordinateMap":
        if self.inverse is None:
            raise ValueError(f"map {self.name!r} has no declared inverse")
        return CoordinateMap(f"{self.name}^-1", self.target, self.source, self.inverse, self.components, self.domain)

    def check_inverse(self) -> bool:
        """``map(inverse(y)) == y`` and ``inverse(map(x)) == x`` semantically."""
        if self.inverse is None:
            return False
        fwd = [c.substitute(dict(zip(self.source.variables, self.inverse))) for c in self.components]
        back = [c.substitute(self.substitution()) for c in self.inverse]
        return (all(f == v for f, v in zip(fwd, self.target.vars()))
                and all(b == v for b, v in zip(back, self.source.vars())))

    def __call__(self, point: Mapping[str, Number] | Sequence[Number]) -> list[float]:
        p = self.source.point(point)
        return [c.evaluate(p) for c in self.components]

    def compiled(self):
        return compile_many(self.components, self.source.variables)

    def compiled_inverse(self):
        if self.inverse is None:
            raise ValueError(f"map {self.name!r} has no declared inverse")
        return compile_many(self.inverse, self.target.variables)


def pullback(phi: CoordinateMap, a: DiffForm) -> DiffForm:
    """``phi^* a`` for ``a`` living on ``phi.target``."""
    if a.chart != phi.target:
        raise ChartMismatch(f"form lives on {a.chart.name!r}, map {phi.name!r} targets {phi.target.name!r}")
    subs = phi.substitution()
    diffs = phi.differentials()
    cache: dict[tuple[int, ...], DiffForm] = {(): DiffForm(phi.source, 0, {(): 1})}

    def basis(key: tuple[int, ...]) -> DiffForm:
        if key not in cache:
            cache[key] = wedge(basis(key[:-1]), diffs[key[-1]])
        return cache[key]

    out = DiffForm(phi.source, a.degree, {})
    for key, c in a.coeffs.items():
        b = basis(key)
        if b.is_zero():
            continue
        cs = c.substitute(subs)
        out = out + b.scale(cs)
    return out


def compose(phi: CoordinateMap, psi: CoordinateMap) -> CoordinateMap:
    """``phi o psi``: first ``psi`` (source -> middle), then ``phi`` (middle -> target)."""
    if psi.target != phi.source:
        raise ChartMismatch(f"cannot compose {phi.name!r} after {psi.name!r}: chart mismatch")
    subs = psi.substitution()
    comps = tuple(c.substitute(subs) for c in phi.components)
    inv = None
    if phi.inverse is not None and psi.inverse is not None:
        inv = tuple(c.substitute(dict(zip(phi.source.variables, phi.inverse))) for c in psi.inverse)
    return CoordinateMap(f"{phi.name}.{psi.name}", psi.source, phi.target, comps, inv,
                         "; ".join(x for x in (psi.domain, phi.domain) if x))


def pfaffian(entries: Mapping[tuple[int, int], SymExpr], indices: Sequence[int]) -> SymExpr:
    """Pfaffian of the antisymmetric matrix given by its upper-triangular ``entries``.

    Expands along the sparsest remaining row with memoisation on the set of
    remaining indices, which keeps the blown-up charts (18 or more
    dimensions, few nonzeros per row) tractable.
    """
    nbrs: dict[int, set[int]] = {i: set() for i in indices}
    for (i, j), c in entries.items():
        if c.is_zero() or i not in nbrs or j not in nbrs:
            continue
        nbrs[i].add(j)
        nbrs[j].add(i)

    def entry(a: int, b: int) -> SymExpr:
        return entries[(a, b)] if a < b else -entries[(b, a)]

    memo: dict[tuple[int, ...], SymExpr] = {}
    zero = as_expr(0)

    def pf(rem: tuple[int, ...]) -> SymExpr:
        if not rem:
            return as_expr(1)
        if len(rem) % 2:
            return zero
        if rem in memo:
            return memo[rem]
        live = set(rem)
        p = min(range(len(rem)), key=lambda k: len(nbrs[rem[k]] & live))
        a = rem[p]
        rest = rem[:p] + rem[p + 1:]
        total = zero
        for jpos, b in enumerate(rest):
            if b not in nbrs[a]:
                continue
            sub = pf(rest[:jpos] + rest[jpos + 1:])
            if sub.is_zero():
                continue
            term = entry(a, b) * sub
            total = total + term if jpos % 2 == 0 else total - term
        if p % 2:
            total = -total
        memo[rem] = total
        return total

    return pf(tuple(sorted(indices)))


def top_power(omega: DiffForm, n: int | None = None) -> SymExpr:
    """Coefficient ``c`` with ``omega^n = c vol``.

    ``vol = dx_1 ^ dx_{n+1} ^ dx_2 ^ dx_{n+2} ^ ... ^ dx_n ^ dx_2n`` pairs each
    coordinate with its canonical partner, so the canonical form gives ``n!``.
    Computed as ``n! * Pf(A)`` with the reordering sign folded in.
    """
    dim = omega.chart.dimension
    if omega.degree != 2:
        raise ValueError("top_power needs a 2-form")
    if n is None:
        n = dim // 2
    if 2 * n != dim:
        raise ValueError(f"2n = {2 * n} does not match chart dimension {dim}")
    pf = pfaffian(omega.coeffs, range(dim))
    return pf * (math.factorial(n) * _darboux_sign(n))


def _darboux_sign(n: int) -> int:
    """Sign of ``dx_1 ^ ... ^ dx_2n`` relative to the paired volume form."""
    return -1 if (n * (n - 1) // 2) % 2 else 1


def top_power_by_wedge(omega: DiffForm, n: int | None = None) -> SymExpr:
    """Same as :func:`top_power`, by repeated wedge products (slow; used as a cross-check)."""
    dim = omega.chart.dimension
    n = dim // 2 if n is None else n
    if 2 * n != dim:
        raise ValueError(f"2n = {2 * n} does not match chart dimension {dim}")
    acc = reduce(wedge, [omega] * n)
    return acc.coeffs.get(tuple(range(dim)), as_expr(0)) * _darboux_sign(n)
