"""Exact multivariate rational functions over Q.

Two extensions beyond plain ``Q(x1, ..., xn)`` are supported:

* variables flagged *radial* (strictly positive, like a radius) may carry
  half-integer exponents, so ``r^(7/2)`` is an honest monomial;
* square roots of polynomials that are not perfect squares are adjoined as
  auxiliary variables named ``sqrt(<radicand>)``.  A reduced expression is
  linear in every such radical and its denominator is radical free, which
  makes zero testing a plain polynomial computation.

No multivariate factorisation is attempted.  Reduction removes common
monomials, cancels an exact divisor of the denominator when one is found by
trial division, and normalises the denominator to be monic.
"""

from __future__ import annotations

import math
from fractions import Fraction
from itertools import combinations
from typing import Callable, Iterable, Mapping, Sequence, Union

Exponent = Union[int, Fraction]
Number = Union[int, Fraction, float]

__all__ = [
    "SymbolicError",
    "PoleError",
    "DomainError",
    "ExponentError",
    "Monomial",
    "Polynomial",
    "SymExpr",
    "arith",
    "differentiate",
    "evaluate",
    "substitute",
    "as_expr",
]


class SymbolicError(ValueError):
    """Base class for errors raised by the symbolic layer."""


class PoleError(SymbolicError, ZeroDivisionError):
    """Denominator vanishes at the evaluation point, or division by zero."""


class DomainError(SymbolicError):
    """Negative value for a radial variable or a negative radicand."""


class ExponentError(SymbolicError):
    """A fractional exponent would land on a variable that is not radial."""


def _exp(e: Exponent) -> Exponent:
    if isinstance(e, Fraction):
        if e.denominator == 1:
            return int(e)
        if e.denominator != 2:
            raise ExponentError(f"only half-integer exponents are supported, got {e}")
    return e


class Monomial(tuple):
    """Power product stored as a sorted tuple of ``(variable, exponent)`` pairs.

    Exponents are nonzero ints, or halves of odd ints on radial variables.
    Negative exponents are tolerated transiently (Laurent monomials) while a
    :class:`SymExpr` is being normalised.
    """

    __slots__ = ()

    def __new__(cls, items: Iterable[tuple[str, Exponent]] = ()):
        acc: dict[str, Exponent] = {}
        for v, e in items:
            acc[v] = acc.get(v, 0) + e
        return tuple.__new__(cls, tuple(sorted((v, _exp(e)) for v, e in acc.items() if e != 0)))

    @classmethod
    def _raw(cls, items) -> "Monomial":
        return tuple.__new__(cls, items)

    @property
    def degree(self) -> Exponent:
        return sum((e for _, e in self), 0)

    def exponent(self, var: str) -> Exponent:
        for v, e in self:
            if v == var:
                return e
        return 0

    def variables(self) -> tuple[str, ...]:
        return tuple(v for v, _ in self)

    def __mul__(self, other: "Monomial") -> "Monomial":
        if not self:
            return other
        if not other:
            return self
        d = dict(self)
        for v, e in other:
            d[v] = d.get(v, 0) + e
        return Monomial._raw(tuple(sorted((v, _exp(e)) for v, e in d.items() if e != 0)))

    def __truediv__(self, other: "Monomial") -> "Monomial":
        d = dict(self)
        for v, e in other:
            d[v] = d.get(v, 0) - e
        return Monomial._raw(tuple(sorted((v, _exp(e)) for v, e in d.items() if e != 0)))

    def __pow__(self, k: int) -> "Monomial":
        if k == 0:
            return ONE
        return Monomial._raw(tuple((v, _exp(e * k)) for v, e in self))

    def divides(self, other: "Monomial") -> bool:
        od = dict(other)
        return all(od.get(v, 0) >= e for v, e in self)

    def without(self, var: str) -> "Monomial":
        return Monomial._raw(tuple(p for p in self if p[0] != var))

    def key(self, order: Sequence[str]) -> tuple:
        """Graded-lex sort key with respect to the variable order ``order``."""
        d = dict(self)
        return (self.degree, tuple(d.get(v, 0) for v in order))

    def __repr__(self) -> str:
        return f"Monomial({tuple(self)!r})"


ONE = Monomial()


def _fmt_power(v: str, e: Exponent) -> str:
    if e == 1:
        return v
    if isinstance(e, Fraction):
        return f"{v}^({e.numerator}/{e.denominator})"
    if e < 0:
        return f"{v}^({e})"
    return f"{v}^{e}"


def _fmt_coeff(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


class Polynomial:
    """Sparse polynomial with rational coefficients, keyed by :class:`Monomial`."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[Monomial, Number] | None = None):
        d: dict[Monomial, Fraction] = {}
        if terms:
            for m, c in terms.items():
                c = Fraction(c)
                if c:
                    m = m if isinstance(m, Monomial) else Monomial(m)
                    d[m] = d.get(m, 0) + c
                    if not d[m]:
                        del d[m]
        self.terms = d

    @classmethod
    def _wrap(cls, d: dict) -> "Polynomial":
        p = object.__new__(cls)
        p.terms = d
        return p

    @classmethod
    def const(cls, c: Number) -> "Polynomial":
        c = Fraction(c)
        return cls._wrap({ONE: c} if c else {})

    @classmethod
    def var(cls, name: str, exponent: Exponent = 1) -> "Polynomial":
        return cls._wrap({Monomial._raw(((name, _exp(exponent)),)): Fraction(1)})

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and ONE in self.terms)

    def is_monomial(self) -> bool:
        return len(self.terms) == 1

    def constant_value(self) -> Fraction:
        return self.terms.get(ONE, Fraction(0))

    def variables(self) -> set[str]:
        out: set[str] = set()
        for m in self.terms:
            out.update(v for v, _ in m)
        return out

    def __eq__(self, other) -> bool:
        if isinstance(other, Polynomial):
            return self.terms == other.terms
        return NotImplemented

    def __hash__(self) -> int:
        return hash(frozenset(self.terms.items()))

    def __add__(self, other: "Polynomial") -> "Polynomial":
        if not other.terms:
            return self
        d = dict(self.terms)
        for m, c in other.terms.items():
            s = d.get(m, 0) + c
            if s:
                d[m] = s
            else:
                d.pop(m, None)
        return Polynomial._wrap(d)

    def __neg__(self) -> "Polynomial":
        return Polynomial._wrap({m: -c for m, c in self.terms.items()})

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return self + (-other)

    def __mul__(self, other: "Polynomial") -> "Polynomial":
        if not self.terms or not other.terms:
            return Polynomial._wrap({})
        d: dict[Monomial, Fraction] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = m1 * m2
                s = d.get(m, 0) + c1 * c2
                if s:
                    d[m] = s
                else:
                    d.pop(m, None)
        return Polynomial._wrap(d)

    def scale(self, c: Number) -> "Polynomial":
        c = Fraction(c)
        if not c:
            return Polynomial._wrap({})
        return Polynomial._wrap({m: v * c for m, v in self.terms.items()})

    def shift(self, mono: Monomial) -> "Polynomial":
        """Multiply by a monomial."""
        if not mono:
            return self
        return Polynomial._wrap({m * mono: c for m, c in self.terms.items()})

    def __pow__(self, k: int) -> "Polynomial":
        if k < 0:
            raise ValueError("negative power of a polynomial")
        result = Polynomial.const(1)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def diff(self, var: str) -> "Polynomial":
        """Formal partial derivative; may produce Laurent terms for radial variables."""
        d: dict[Monomial, Fraction] = {}
        for m, c in self.terms.items():
            e = m.exponent(var)
            if e:
                nm = m * Monomial._raw(((var, -1),))
                d[nm] = d.get(nm, 0) + c * e
        return Polynomial._wrap({m: c for m, c in d.items() if c})

    def min_exponent(self, var: str) -> Exponent:
        return min((m.exponent(var) for m in self.terms), default=0)

    def by_power(self, var: str) -> dict[Exponent, "Polynomial"]:
        """Group terms by the exponent of ``var``: ``self = sum(P_e * var^e)``."""
        groups: dict[Exponent, dict] = {}
        for m, c in self.terms.items():
            e = m.exponent(var)
            groups.setdefault(e, {})[m.without(var) if e else m] = c
        return {e: Polynomial._wrap(d) for e, d in groups.items()}

    def degree_in(self, var: str) -> Exponent:
        return max((m.exponent(var) for m in self.terms), default=0)

    def total_degree(self) -> Exponent:
        return max((m.degree for m in self.terms), default=0)

    def order(self) -> list[str]:
        return sorted(self.variables())

    def sorted_terms(self, order: Sequence[str] | None = None) -> list[tuple[Monomial, Fraction]]:
        order = self.order() if order is None else order
        return sorted(self.terms.items(), key=lambda t: t[0].key(order), reverse=True)

    def leading_term(self, order: Sequence[str] | None = None) -> tuple[Monomial, Fraction]:
        order = self.order() if order is None else order
        return max(self.terms.items(), key=lambda t: t[0].key(order))

    def content(self) -> Fraction:
        """Positive rational content: gcd of numerators over lcm of denominators."""
        g = 0
        lcm = 1
        for c in self.terms.values():
            g = math.gcd(g, c.numerator)
            lcm = lcm * c.denominator // math.gcd(lcm, c.denominator)
        return Fraction(g, lcm) if g else Fraction(0)

    def divide_exact(self, divisor: "Polynomial") -> "Polynomial | None":
        """Quotient if ``divisor`` divides ``self`` exactly, else ``None``.

        Uses graded-lex multivariate division; the first leading term that is
        not divisible proves a nonzero remainder.
        """
        if divisor.is_zero():
            raise PoleError("division by the zero polynomial")
        if self.is_zero():
            return self
        if divisor.is_monomial():
            (dm, dc), = divisor.terms.items()
            if not all(dm.divides(m) for m in self.terms):
                return None
            inv = 1 / dc
            return Polynomial._wrap({m / dm: c * inv for m, c in self.terms.items()})
        order = sorted(self.variables() | divisor.variables())
        if not divisor.variables() <= self.variables():
            return None
        lm, lc = divisor.leading_term(order)
        rest = {m: c for m, c in divisor.terms.items() if m != lm}
        rem = dict(self.terms)
        quot: dict[Monomial, Fraction] = {}
        while rem:
            m, c = max(rem.items(), key=lambda t: t[0].key(order))
            if not lm.divides(m):
                return None
            qm = m / lm
            qc = c / lc
            quot[qm] = qc
            del rem[m]
            for dm, dc in rest.items():
                k = dm * qm
                s = rem.get(k, 0) - dc * qc
                if s:
                    rem[k] = s
                else:
                    rem.pop(k, None)
        return Polynomial._wrap(quot)

    def sqrt(self, allow_half: Iterable[str] = ()) -> "Polynomial | None":
        """Exact square root with positive leading coefficient, or ``None``.

        Odd exponents may only be halved on variables listed in ``allow_half``.
        """
        if self.is_zero():
            return self
        allow_half = set(allow_half)
        order = self.order()

        def half(m: Monomial) -> Monomial | None:
            out = []
            for v, e in m:
                h = Fraction(e) / 2
                if h.denominator != 1 and (h.denominator != 2 or v not in allow_half):
                    return None
                out.append((v, _exp(h)))
            return Monomial._raw(tuple(out))

        lm, lc = self.leading_term(order)
        rc = _rational_sqrt(lc)
        rm = half(lm)
        if rc is None or rm is None:
            return None
        root = Polynomial._wrap({rm: rc})
        lead_key = rm.key(order)
        for _ in range(len(self.terms) + 2):
            rem = self - root * root
            if rem.is_zero():
                return root
            m, c = rem.leading_term(order)
            if not rm.divides(m):
                return None
            tm = m / rm
            if any(e < 0 for _, e in tm) or tm.key(order) >= lead_key:
                return None
            root = root + Polynomial._wrap({tm: c / (2 * rc)})
        return None

    def evaluate(self, values: Mapping[str, Number]) -> Number:
        total: Number = 0
        for m, c in self.terms.items():
            term: Number = c
            for v, e in m:
                x = values[v]
                term = term * (x ** e)
            total = total + term
        return total

    def to_string(self, order: Sequence[str] | None = None) -> str:
        if not self.terms:
            return "0"
        parts: list[str] = []
        for i, (m, c) in enumerate(self.sorted_terms(order)):
            neg = c < 0
            a = -c if neg else c
            if m:
                body = "*".join(_fmt_power(v, e) for v, e in m)
                text = body if a == 1 else f"{_fmt_coeff(a)}*{body}"
            else:
                text = _fmt_coeff(a)
            if i == 0:
                parts.append(f"-{text}" if neg else text)
            else:
                parts.append(f" - {text}" if neg else f" + {text}")
        return "".join(parts)

    def __str__(self) -> str:
        return self.to_string()

    def __repr__(self) -> str:
        return f"Polynomial('{self}')"


def _rational_sqrt(c: Fraction) -> Fraction | None:
    if c < 0:
        return None
    n, d = c.numerator, c.denominator
    rn, rd = math.isqrt(n), math.isqrt(d)
    if rn * rn == n and rd * rd == d:
        return Fraction(rn, rd)
    return None


def _squarefree_split(n: int) -> tuple[int, int]:
    """Return ``(a, b)`` with ``n = a**2 * b`` and ``b`` free of small square factors."""
    a, b = 1, n
    p = 2
    while p * p <= b and p < 2000:
        while b % (p * p) == 0:
            b //= p * p
            a *= p
        p += 1
    r = math.isqrt(b)
    if r * r == b:
        a *= r
        b = 1
    return a, b


# ---------------------------------------------------------------------------
# Rational functions
# ---------------------------------------------------------------------------

_ZERO = Polynomial._wrap({})
_ONEP = Polynomial.const(1)


class SymExpr:
    """Reduced quotient ``num/den`` of polynomials, immutable.

    ``radial`` lists variables allowed to carry half-integer exponents.
    ``radicals`` maps each adjoined ``sqrt(...)`` variable to its radicand.
    Equality is semantic (``a/b == c/d`` iff ``a*d - c*b`` vanishes); the
    class is therefore unhashable.
    """

    __slots__ = ("num", "den", "radial", "radicals")
    __hash__ = None  # type: ignore[assignment]

    def __init__(self, num: Polynomial, den: Polynomial | None = None,
                 radial: Iterable[str] = (), radicals: Mapping[str, Polynomial] | None = None):
        n, d, rads = _normalize(num, den if den is not None else _ONEP, dict(radicals or {}))
        object.__setattr__(self, "num", n)
        object.__setattr__(self, "den", d)
        object.__setattr__(self, "radial", frozenset(radial))
        object.__setattr__(self, "radicals", rads)
        self._check_radial()

    def __setattr__(self, *_):
        raise AttributeError("SymExpr is immutable")

    @classmethod
    def _trusted(cls, num, den, radial, radicals) -> "SymExpr":
        e = object.__new__(cls)
        object.__setattr__(e, "num", num)
        object.__setattr__(e, "den", den)
        object.__setattr__(e, "radial", radial)
        object.__setattr__(e, "radicals", radicals)
        return e

    def _check_radial(self) -> None:
        for p in (self.num, self.den):
            for m in p.terms:
                for v, e in m:
                    if isinstance(e, Fraction) and v not in self.radial:
                        raise ExponentError(f"half-integer exponent on non-radial variable {v!r}")

    # -- constructors --------------------------------------------------------

    @classmethod
    def const(cls, c: Number) -> "SymExpr":
        return cls._trusted(Polynomial.const(c), _ONEP, frozenset(), {})

    @classmethod
    def var(cls, name: str, radial: bool = False) -> "SymExpr":
        if name.startswith("sqrt("):
            raise SymbolicError("variable names may not start with 'sqrt('")
        return cls._trusted(Polynomial.var(name), _ONEP, frozenset((name,) if radial else ()), {})

    @classmethod
    def sqrt(cls, e: "SymExpr | Number") -> "SymExpr":
        """Nonnegative square root.

        Perfect squares are extracted exactly (taking the root with positive
        leading coefficient); radial monomial factors go to half-integer
        exponents; whatever is left is adjoined as a radical.  Denominators
        are assumed positive on the domain of interest.
        """
        e = as_expr(e)
        if e.radicals:
            raise SymbolicError("nested radicals are not supported")
        if e.num.is_zero():
            return e
        rn, rd = e.num.sqrt(e.radial), e.den.sqrt(e.radial)
        if rn is not None and rd is not None:
            return SymExpr(rn, rd, e.radial)
        # sqrt(N/D) = sqrt(N*D)/D
        prod = e.num * e.den
        radial_part = {v: prod.min_exponent(v) for v in e.radial}
        radial_part = {v: x for v, x in radial_part.items() if x > 0}
        mono = Monomial(radial_part.items())
        rest = prod.shift(mono ** -1) if mono else prod
        half = Monomial((v, Fraction(x) / 2) for v, x in radial_part.items())
        c = rest.content()
        prim = rest.scale(1 / c)
        a, b = _squarefree_split(c.numerator * c.denominator)
        outer = Fraction(a, c.denominator)
        radicand = prim.scale(b)
        root = radicand.sqrt()
        pref = SymExpr(Polynomial._wrap({half: outer}), e.den, e.radial)
        if root is not None:
            return pref * SymExpr(root, None, e.radial)
        if radicand.is_constant() and radicand.constant_value() == 1:
            return pref
        name = f"sqrt({radicand})"
        rad = cls._trusted(Polynomial.var(name), _ONEP, e.radial, {name: radicand})
        return pref * rad

    # -- basic queries -------------------------------------------------------

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_constant(self) -> bool:
        return self.num.is_constant() and self.den.is_constant()

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise SymbolicError(f"{self} is not constant")
        return self.num.constant_value() / self.den.constant_value()

    def is_polynomial(self) -> bool:
        return self.den.is_constant() and not self.radicals

    def variables(self) -> set[str]:
        """Free variables, looking through radicals to their radicands."""
        out = (self.num.variables() | self.den.variables()) - set(self.radicals)
        for r in self.radicals.values():
            out |= r.variables()
        return out

    def has_half_integer_exponents(self) -> bool:
        return any(isinstance(e, Fraction) for p in (self.num, self.den) for m in p.terms for _, e in m)

    # -- arithmetic ----------------------------------------------------------

    def _merge(self, other: "SymExpr"):
        rad = self.radial | other.radial
        if not other.radicals:
            rads = self.radicals
        elif not self.radicals:
            rads = other.radicals
        else:
            rads = {**self.radicals, **other.radicals}
        return rad, rads

    def __add__(self, other) -> "SymExpr":
        other = as_expr(other)
        if other.num.is_zero():
            return self
        if self.num.is_zero():
            return other
        rad, rads = self._merge(other)
        a, b, c, d = self.num, self.den, other.num, other.den
        if b == d:
            return SymExpr._build(a + c, b, rad, rads)
        q = b.divide_exact(d) if not d.is_constant() else None
        if q is not None:
            return SymExpr._build(a + c * q, b, rad, rads)
        q = d.divide_exact(b) if not b.is_constant() else None
        if q is not None:
            return SymExpr._build(a * q + c, d, rad, rads)
        return SymExpr._build(a * d + c * b, b * d, rad, rads)

    __radd__ = __add__

    def __neg__(self) -> "SymExpr":
        return SymExpr._trusted(-self.num, self.den, self.radial, self.radicals)

    def __sub__(self, other) -> "SymExpr":
        return self + (-as_expr(other))

    def __rsub__(self, other) -> "SymExpr":
        return as_expr(other) - self

    def __mul__(self, other) -> "SymExpr":
        other = as_expr(other)
        rad, rads = self._merge(other)
        if other.is_constant() and not other.radicals:
            c = other.constant_value()
            return SymExpr._trusted(self.num.scale(c), self.den, rad, self.radicals) if c else SymExpr._build(_ZERO, _ONEP, rad, {})
        return SymExpr._build(self.num * other.num, self.den * other.den, rad, rads)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "SymExpr":
        other = as_expr(other)
        if other.num.is_zero():
            raise PoleError(f"division of {self} by zero")
        rad, rads = self._merge(other)
        return SymExpr._build(self.num * other.den, self.den * other.num, rad, rads)

    def __rtruediv__(self, other) -> "SymExpr":
        return as_expr(other) / self

    def __pow__(self, k) -> "SymExpr":
        if isinstance(k, Fraction) and k.denominator == 1:
            k = int(k)
        if isinstance(k, int):
            if k < 0:
                return as_expr(1) / (self ** (-k))
            return SymExpr._build(self.num ** k, self.den ** k, self.radial, self.radicals)
        k = Fraction(k)
        if k.denominator != 2:
            raise ExponentError(f"unsupported exponent {k}")
        root = _exact_sqrt(self)
        if root is None:
            raise ExponentError(f"({self})^({k}) needs a radial variable or a perfect square base")
        return root ** int(2 * k)

    def __eq__(self, other) -> bool:
        try:
            other = as_expr(other)
        except TypeError:
            return NotImplemented
        diff = self.num * other.den - other.num * self.den
        if diff.is_zero():
            return True
        rads = {**self.radicals, **other.radicals}
        if not rads:
            return False
        n, _, _ = _normalize(diff, _ONEP, rads)
        return n.is_zero()

    def __ne__(self, other) -> bool:
        r = self.__eq__(other)
        return r if r is NotImplemented else not r

    # -- calculus and substitution ------------------------------------------

    def diff(self, var: str) -> "SymExpr":
        """Exact partial derivative, with the chain rule through radicals."""
        dn = self._poly_diff(self.num, var)
        if self.den.is_constant():
            return dn * as_expr(1 / self.den.constant_value())
        dd = self._poly_diff(self.den, var)
        n = self._lift(self.num)
        d = self._lift(self.den)
        return (dn * d - n * dd) / (d * d)

    def _lift(self, p: Polynomial) -> "SymExpr":
        return SymExpr._build(p, _ONEP, self.radial, self.radicals)

    def _poly_diff(self, p: Polynomial, var: str) -> "SymExpr":
        out = self._lift(p.diff(var))
        for name, radicand in self.radicals.items():
            if var not in radicand.variables():
                continue
            dp = p.diff(name)
            if dp.is_zero():
                continue
            # d sqrt(R) = R' / (2 sqrt(R)) = R' sqrt(R) / (2 R)
            k = SymExpr._trusted(Polynomial.var(name), _ONEP, self.radial, {name: radicand})
            rexpr = SymExpr._build(radicand, _ONEP, self.radial, {})
            dk = self._lift_any(radicand.diff(var)) * k / (2 * rexpr)
            out = out + self._lift(dp) * dk
        return out

    def _lift_any(self, p: Polynomial) -> "SymExpr":
        return SymExpr._build(p, _ONEP, self.radial, {})

    def substitute(self, mapping: Mapping[str, "SymExpr | Number"]) -> "SymExpr":
        """Simultaneous substitution ``var -> expression``."""
        mapping = {v: as_expr(x) for v, x in mapping.items()}
        if not mapping:
            return self
        radial = set(self.radial)
        for x in mapping.values():
            radial |= x.radial
        radial = frozenset(radial)
        values: dict[str, SymExpr] = {}
        for name, radicand in self.radicals.items():
            if radicand.variables() & mapping.keys():
                new_rad = self._lift_any(radicand)._subst_poly(radicand, mapping, radial, {})
                values[name] = SymExpr.sqrt(new_rad)
        num = self._subst_poly(self.num, mapping, radial, values)
        den = self._subst_poly(self.den, mapping, radial, values)
        return num / den

    def _subst_poly(self, p: Polynomial, mapping, radial, radical_values) -> "SymExpr":
        cache: dict[tuple[str, Exponent], SymExpr] = {}

        def power(v: str, e: Exponent) -> SymExpr:
            key = (v, e)
            if key not in cache:
                base = mapping.get(v) if v in mapping else radical_values.get(v)
                if isinstance(e, Fraction):
                    root = _exact_sqrt(base)
                    if root is None:
                        raise ExponentError(
                            f"cannot substitute {base} for radial {v!r}: not a square of a "
                            "polynomial or of a radial variable")
                    cache[key] = root ** int(2 * e)
                else:
                    cache[key] = base ** e
            return cache[key]

        touched = set(mapping) | set(radical_values)
        plain: dict[Monomial, Fraction] = {}
        total = SymExpr._build(_ZERO, _ONEP, radial, {})
        groups: dict[Monomial, list] = {}
        for m, c in p.terms.items():
            hit = tuple((v, e) for v, e in m if v in touched)
            if not hit:
                plain[m] = c
                continue
            keep = Monomial._raw(tuple((v, e) for v, e in m if v not in touched))
            groups.setdefault(Monomial._raw(hit), []).append((keep, c))
        rads_left = {k: v for k, v in self.radicals.items() if k not in radical_values}
        if plain:
            total = SymExpr._build(Polynomial._wrap(plain), _ONEP, radial, rads_left)
        for hit, rest in groups.items():
            factor = None
            for v, e in hit:
                f = power(v, e)
                factor = f if factor is None else factor * f
            coeff = SymExpr._build(Polynomial._wrap(dict(rest)), _ONEP, radial, rads_left)
            total = total + coeff * factor
        return total

    def cancel(self, candidates: Iterable[Polynomial | "SymExpr"]) -> "SymExpr":
        """Reduce further by trial division with user-supplied candidate factors."""
        num, den = self.num, self.den
        for f in candidates:
            if isinstance(f, SymExpr):
                if not f.is_polynomial():
                    continue
                f = f.num
            if f.is_constant():
                continue
            while True:
                qn = num.divide_exact(f)
                if qn is None:
                    break
                qd = den.divide_exact(f)
                if qd is None:
                    break
                num, den = qn, qd
        return SymExpr._build(num, den, self.radial, self.radicals)

    # -- evaluation ----------------------------------------------------------

    def evaluate(self, point: Mapping[str, Number]) -> Number:
        """Numeric value; exact ``Fraction`` when inputs are rational and no radicals
        or half-integer exponents are involved."""
        vals: dict[str, Number] = {}
        exact = not self.radicals and not self.has_half_integer_exponents()
        for v in self.variables():
            if v not in point:
                raise SymbolicError(f"no value supplied for variable {v!r}")
            x = point[v]
            if isinstance(x, float) or not isinstance(x, (int, Fraction)):
                exact = False
                x = float(x)
            if v in self.radial and x < 0:
                raise DomainError(f"radial variable {v!r} must be nonnegative, got {x}")
            vals[v] = x
        if not exact:
            vals = {v: float(x) for v, x in vals.items()}
        for name, radicand in self.radicals.items():
            s = radicand.evaluate(vals)
            if s < 0:
                raise DomainError(f"negative radicand in {name}: {s}")
            vals[name] = math.sqrt(s)
        den = self.den.evaluate(vals)
        if den == 0:
            raise PoleError(f"pole of {self} at {dict(point)}")
        num = self.num.evaluate(vals)
        if exact:
            return Fraction(num) / Fraction(den)
        return float(num) / float(den)

    def compile(self, variables: Sequence[str]) -> Callable[[Sequence[float]], float]:
        """Float evaluator taking a vector ordered like ``variables``."""
        return _compile([self], variables, scalar=True)

    # -- text ----------------------------------------------------------------

    def __str__(self) -> str:
        if self.den == _ONEP:
            return str(self.num)
        num_s = str(self.num)
        if len(self.num.terms) > 1:
            num_s = f"({num_s})"
        den_s = str(self.den)
        simple = (len(self.den.terms) == 1 and len(next(iter(self.den.terms))) == 1
                  and next(iter(self.den.terms.values())) == 1)
        if not simple:
            den_s = f"({den_s})"
        return f"{num_s}/{den_s}"

    def __repr__(self) -> str:
        return f"SymExpr('{self}')"

    # -- internal ------------------------------------------------------------

    @staticmethod
    def _build(num: Polynomial, den: Polynomial, radial, radicals) -> "SymExpr":
        n, d, rads = _normalize(num, den, dict(radicals))
        return SymExpr._trusted(n, d, frozenset(radial), rads)


def _exact_sqrt(e: "SymExpr | None") -> "SymExpr | None":
    if e is None or e.radicals:
        return None
    rn, rd = e.num.sqrt(e.radial), e.den.sqrt(e.radial)
    if rn is not None and rd is not None:
        return SymExpr(rn, rd, e.radial)
    # radial monomial times perfect square
    if e.num.is_monomial():
        (m, c), = e.num.terms.items()
        if all(v in e.radial for v, _ in m) and rd is not None:
            rc = _rational_sqrt(c)
            if rc is not None:
                half = Monomial((v, Fraction(x) / 2) for v, x in m)
                return SymExpr(Polynomial._wrap({half: rc}), rd, e.radial)
    return None


def _normalize(num: Polynomial, den: Polynomial, radicals: dict[str, Polynomial]):
    if den.is_zero():
        raise PoleError("zero denominator")
    if num.is_zero():
        return _ZERO, _ONEP, {}
    if radicals:
        num, den = _reduce_radicals(num, den, radicals)
    num, den = _clear_monomials(num, den)
    num, den = _cancel(num, den, radicals)
    if not den.is_constant():
        _, lc = den.leading_term()
    else:
        lc = den.constant_value()
    if lc != 1:
        inv = 1 / lc
        num, den = num.scale(inv), den.scale(inv)
    if radicals:
        used = num.variables() | den.variables()
        radicals = {k: v for k, v in radicals.items() if k in used}
    return num, den, radicals


def _reduce_powers(p: Polynomial, name: str, radicand: Polynomial) -> Polynomial:
    """Rewrite ``p`` so that ``name`` appears at most linearly (``name^2 = radicand``)."""
    groups = p.by_power(name)
    if all(e in (0, 1) for e in groups):
        return p
    out = _ZERO
    kvar = Polynomial.var(name)
    for e, q in groups.items():
        e = int(e)
        part = q * (radicand ** (e // 2))
        if e % 2:
            part = part * kvar
        out = out + part
    return out


def _reduce_radicals(num: Polynomial, den: Polynomial, radicals: dict[str, Polynomial]):
    for name in sorted(radicals):
        radicand = radicals[name]
        num = _reduce_powers(num, name, radicand)
        den = _reduce_powers(den, name, radicand)
        g = den.by_power(name)
        if 1 in g:
            c = g.get(0, _ZERO)
            e = g[1]
            conj = c - e * Polynomial.var(name)
            num = _reduce_powers(num * conj, name, radicand)
            den = c * c - e * e * radicand
            if den.is_zero():
                raise PoleError("denominator vanishes identically after rationalisation")
    return num, den


def _clear_monomials(num: Polynomial, den: Polynomial):
    shift: dict[str, Exponent] = {}
    for v in num.variables() | den.variables():
        a, b = num.min_exponent(v), den.min_exponent(v)
        c = min(a, b)
        if c:
            shift[v] = -c
    if not shift:
        return num, den
    mono = Monomial(shift.items())
    return num.shift(mono), den.shift(mono)


def _root_chain(p: Polynomial) -> list[Polynomial]:
    out = []
    cur = p
    for _ in range(6):
        r = cur.sqrt()
        if r is None or r.is_constant():
            break
        out.append(r)
        cur = r
    return out


def _cancel(num: Polynomial, den: Polynomial, radicals: dict[str, Polynomial]):
    if den.is_constant() or den.is_monomial():
        return num, den
    for _ in range(64):
        q = num.divide_exact(den)
        if q is not None:
            return q, _ONEP
        changed = False
        cands = _root_chain(den) + [r for r in radicals.values() if not r.is_constant()]
        for f in cands:
            if f.is_constant() or f.is_monomial():
                continue
            qn = num.divide_exact(f)
            if qn is None:
                continue
            qd = den.divide_exact(f)
            if qd is None:
                continue
            num, den = qn, qd
            changed = True
            break
        if not changed or den.is_constant():
            break
    return num, den


# ---------------------------------------------------------------------------
# Functional surface
# ---------------------------------------------------------------------------

def as_expr(x) -> SymExpr:
    if isinstance(x, SymExpr):
        return x
    if isinstance(x, (int, Fraction, float)):
        return SymExpr.const(x)
    if isinstance(x, Polynomial):
        return SymExpr(x)
    if isinstance(x, str):
        from .grammar import parse_expr
        return parse_expr(x)
    raise TypeError(f"cannot convert {type(x).__name__} to SymExpr")


def arith(a, b, op: str) -> SymExpr:
    """Binary arithmetic by name: ``add``, ``sub``, ``mul`` or ``div``."""
    a, b = as_expr(a), as_expr(b)
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ValueError(f"unknown operation {op!r}")


def differentiate(e, var: str) -> SymExpr:
    return as_expr(e).diff(var)


def evaluate(e, point: Mapping[str, Number]) -> Number:
    return as_expr(e).evaluate(point)


def substitute(e, var: str, replacement) -> SymExpr:
    return as_expr(e).substitute({var: as_expr(replacement)})


# ---------------------------------------------------------------------------
# Code generation for fast float evaluation
# ---------------------------------------------------------------------------

def _rpow(x: float, e: float) -> float:
    if x < 0:
        raise DomainError(f"radial variable must be nonnegative, got {x}")
    return x ** e


def _poly_code(p: Polynomial, names: Mapping[str, str]) -> str:
    if p.is_zero():
        return "0.0"
    parts = []
    for m, c in p.terms.items():
        factors = [repr(float(c))]
        for v, e in m:
            x = names[v]
            if isinstance(e, Fraction):
                factors.append(f"_rpow({x}, {float(e)!r})")
            elif e == 1:
                factors.append(x)
            else:
                factors.append(f"{x}**{e}")
        parts.append("*".join(factors))
    return " + ".join(parts)


def _compile(exprs: Sequence[SymExpr], variables: Sequence[str], scalar: bool = False):
    index = {v: i for i, v in enumerate(variables)}
    names: dict[str, str] = {}
    lines = ["def _f(_v):"]
    needed = set()
    radicals: dict[str, Polynomial] = {}
    for e in exprs:
        needed |= e.variables()
        radicals.update(e.radicals)
    missing = needed - index.keys()
    if missing:
        raise SymbolicError(f"variables {sorted(missing)} not in {list(variables)}")
    for v in sorted(needed):
        names[v] = f"x{index[v]}"
        lines.append(f"    x{index[v]} = _v[{index[v]}]")
    for j, (name, radicand) in enumerate(sorted(radicals.items())):
        names[name] = f"k{j}"
        lines.append(f"    k{j} = _sqrt({_poly_code(radicand, names)})")
    outs = []
    for i, e in enumerate(exprs):
        lines.append(f"    n{i} = {_poly_code(e.num, names)}")
        lines.append(f"    d{i} = {_poly_code(e.den, names)}")
        outs.append(f"n{i}/d{i}")
    lines.append(f"    return {outs[0] if scalar else '(' + ', '.join(outs) + ',)'}")
    ns = {"_sqrt": _checked_sqrt, "_rpow": _rpow}
    exec("\n".join(lines), ns)
    return ns["_f"]


def _checked_sqrt(x: float) -> float:
    if x < 0:
        raise DomainError(f"negative radicand {x}")
    return math.sqrt(x)


def compile_many(exprs: Sequence[SymExpr], variables: Sequence[str]):
    """Compile several expressions into one function returning a tuple."""
    return _compile(list(exprs), variables)


def all_pairs(items):
    return combinations(items, 2)
