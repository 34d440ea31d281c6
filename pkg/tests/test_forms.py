from fractions import Fraction
from itertools import combinations
from math import factorial

import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import polynomials
from singular_symplectic.forms import (Chart, ChartMismatch, CoordinateMap, DiffForm, compose, ext_deriv, pullback,
                                       top_power, top_power_by_wedge, wedge)
from singular_symplectic.symbolic import SymExpr, as_expr
from singular_symplectic import systems

XYZ = Chart("xyz", ("x", "y", "z"))
ABC = Chart("abc", ("a", "b", "c"))


@st.composite
def forms(draw, chart=XYZ, degree=None):
    k = draw(st.integers(0, 2)) if degree is None else degree
    coeffs = {}
    for idx in combinations(range(chart.dimension), k):
        if draw(st.booleans()):
            coeffs[idx] = draw(polynomials(chart.variables, max_terms=3, max_degree=2))
    return DiffForm(chart, k, coeffs)


@st.composite
def polynomial_maps(draw, source=ABC, target=XYZ):
    comps = tuple(draw(polynomials(source.variables, max_terms=3, max_degree=2)) for _ in target.variables)
    return CoordinateMap("random", source, target, comps)


# -- wedge -----------------------------------------------------------------------------------


def test_wedge_disjoint():
    c = Chart("c", ("x", "y", "z", "w"))
    a = DiffForm.from_names(c, {("x", "y"): 1})
    b = DiffForm.from_names(c, {("z", "w"): 1})
    assert wedge(a, b) == DiffForm.from_names(c, {("x", "y", "z", "w"): 1})


def test_wedge_chart_mismatch():
    with pytest.raises(ChartMismatch):
        wedge(DiffForm.d(XYZ, "x"), DiffForm.d(ABC, "a"))


def test_levi_civita_square():
    omega = systems.levi_civita_entry().form
    sq = omega ^ omega
    # omega ^ omega is 2(u1^2 + u2^2) du1^dW1^du2^dW2
    assert sq.coefficient("u1", "W1", "u2", "W2") == as_expr("2*u1^2 + 2*u2^2")


@given(forms(degree=1), forms())
def test_graded_antisymmetry(a, b):
    sign = (-1) ** (a.degree * b.degree)
    assert wedge(a, b) == wedge(b, a).scale(sign)


# -- exterior derivative --------------------------------------------------------------------------


def test_d_canonical_is_zero():
    assert ext_deriv(Chart("c", ("q1", "q2", "p1", "p2")).canonical_form()).is_zero()


def test_d_of_pulled_back_forms_vanishes():
    for name in ("levi-civita", "ks", "mcgehee-collapse"):
        assert ext_deriv(systems.get_entry(name).form).is_zero(), name


def test_d_single_term():
    c = Chart("c", ("x1", "y1"))
    a = DiffForm.from_names(c, {("x1",): "y1"})
    assert ext_deriv(a) == DiffForm.from_names(c, {("x1", "y1"): -1})


@given(forms())
def test_d_squared_is_zero(a):
    if a.degree + 2 <= a.chart.dimension:
        assert ext_deriv(ext_deriv(a)).is_zero()


@given(forms(degree=1), forms(degree=1))
def test_leibniz(a, b):
    lhs = ext_deriv(wedge(a, b))
    rhs = wedge(ext_deriv(a), b) - wedge(a, ext_deriv(b))
    assert lhs == rhs


# -- pullback ---------------------------------------------------------------------------------------


def test_levi_civita_pullback_displayed():
    got = pullback(systems.levi_civita_map(), systems.KEPLER_CHART.canonical_form())
    want = DiffForm.from_names(systems.LC_CHART, {
        ("u1", "W1"): "u1", ("u2", "W1"): "-u2", ("u2", "W2"): "u1", ("u1", "W2"): "u2"})
    assert got == want


def test_ks_pullback_displayed():
    c = systems.KS_SOURCE
    got = pullback(systems.ks_map(), systems.KS_TARGET.canonical_form())
    d = {v: DiffForm.d(c, v) for v in c.variables}
    u0, u1, u2 = c.var("u0"), c.var("u1"), c.var("u2")
    want = (wedge(d["u0"] * u0 - d["u1"] * u1 - d["u2"] * u2, d["W0"])
            + wedge(d["u1"] * u0 + d["u0"] * u1, d["W1"])
            + wedge(d["u2"] * u0 + d["u0"] * u2, d["W2"]))
    assert got == want


def test_identity_pullback():
    omega = systems.projective_form()
    assert pullback(CoordinateMap.identity(omega.chart), omega) == omega


def test_pullback_chart_mismatch():
    with pytest.raises(ChartMismatch):
        pullback(systems.levi_civita_map(), DiffForm.d(XYZ, "x"))


@pytest.mark.parametrize("masses", [(1, 1, 1), (1, 2, 3)])
def test_collapse_pullback_displayed(masses):
    """The pulled-back collapse form against the closed form written out term by term."""
    phi = systems.mcgehee_collapse_map(masses)
    c = phi.source
    diag = [Fraction(m) for m in masses for _ in range(3)]
    r = c.var("r")
    d = {v: DiffForm.d(c, v) for v in c.variables}
    mu = systems.collapse_mu(masses, c)
    sqrt_r = SymExpr.sqrt(r)
    want = DiffForm(c, 2, {})
    for i in range(1, 9):
        s, z = c.var(f"s{i}"), c.var(f"z{i}")
        want = want + wedge(d["r"], d[f"z{i}"]) * (s / sqrt_r) + wedge(d[f"s{i}"], d[f"z{i}"]) * sqrt_r \
            - wedge(d[f"s{i}"], d["r"]) * (z / (2 * sqrt_r))
    pref = 1 / SymExpr.sqrt(r * mu * diag[8])
    inner = wedge(d["r"], d["z9"]) * mu
    z9 = c.var("z9")
    for i in range(1, 9):
        ms = c.var(f"s{i}") * diag[i - 1]
        inner = inner - wedge(d[f"s{i}"], d["z9"]) * (r * ms) + wedge(d[f"s{i}"], d["r"]) * (z9 * ms / 2)
    want = want + inner * pref
    assert pullback(phi, phi.target.canonical_form()) == want


@settings(max_examples=30)
@given(polynomial_maps(), forms(), forms(degree=1))
def test_pullback_commutes_with_wedge(phi, a, b):
    if a.degree + b.degree <= 3:
        assert pullback(phi, wedge(a, b)) == wedge(pullback(phi, a), pullback(phi, b))


@settings(max_examples=30)
@given(polynomial_maps(), forms())
def test_pullback_commutes_with_d(phi, a):
    if a.degree < 3:
        assert pullback(phi, ext_deriv(a)) == ext_deriv(pullback(phi, a))


# -- compose ---------------------------------------------------------------------------------------------


def test_compose_identity():
    phi = systems.levi_civita_map()
    composed = compose(CoordinateMap.identity(phi.target), phi)
    assert all(a == b for a, b in zip(composed.components, phi.components))
    assert composed.source == phi.source and composed.target == phi.target


def test_compose_leaves_angular_pair():
    # r = 2/x^2 followed by a rescaling of the radial coordinate; dalpha^dG is untouched
    polar = systems.POLAR_CHART
    scale = CoordinateMap.from_strings("scale", polar, polar, {"r": "3*r"})
    phi = compose(scale, systems.mcgehee_infinity_map())
    omega = DiffForm.from_names(polar, {("alpha", "G"): 1})
    assert pullback(phi, omega) == DiffForm.from_names(phi.source, {("alpha", "G"): 1})


@settings(max_examples=30)
@given(polynomial_maps(source=XYZ, target=XYZ), polynomial_maps(source=ABC, target=XYZ), forms())
def test_compose_is_functorial(phi, psi, a):
    assert pullback(compose(phi, psi), a) == pullback(psi, pullback(phi, a))


# -- top power ----------------------------------------------------------------------------------------------


@pytest.mark.parametrize("n", range(1, 6))
def test_canonical_top_power(n):
    chart = Chart(f"R{2 * n}", tuple(f"q{i}" for i in range(n)) + tuple(f"p{i}" for i in range(n)))
    assert top_power(chart.canonical_form(), n) == as_expr(factorial(n))


def test_top_power_dimension_mismatch():
    with pytest.raises(ValueError):
        top_power(Chart("c", ("a", "b", "c", "d")).canonical_form(), 3)


@settings(max_examples=25)
@given(forms(chart=Chart("c4", ("x", "y", "z", "w")), degree=2))
def test_pfaffian_matches_repeated_wedge(omega):
    assert top_power(omega) == top_power_by_wedge(omega)


def _sympy_top_power_squared(phi):
    """``(n! Pf A)^2 = (n!)^2 det A`` with ``A = J^T Omega J`` built independently in sympy."""
    src = sp.symbols(phi.source.variables)
    comps = [sp.sympify(str(c).replace("^", "**"), locals=dict(zip(phi.source.variables, src)))
             for c in phi.components]
    jac = sp.Matrix(comps).jacobian(src)
    n = len(comps) // 2
    omega = sp.zeros(2 * n)
    for i in range(n):
        omega[i, i + n], omega[i + n, i] = 1, -1
    a = jac.T * omega * jac
    return sp.cancel(sp.factorial(n) ** 2 * a.det(method="berkowitz")), src


@pytest.mark.parametrize("mapname", ["levi-civita", "ks", "jacobi", "levi-civita-symplectic"])
def test_top_power_against_sympy(mapname):
    phi = systems.get_map(mapname)
    want, src = _sympy_top_power_squared(phi)
    c = top_power(pullback(phi, phi.target.canonical_form()))
    got = sp.sympify(str(c * c).replace("^", "**"), locals={str(s): s for s in src})
    assert sp.simplify(got - want) == 0


def test_levi_civita_and_ks_top_powers():
    lc = top_power(systems.levi_civita_entry().form)
    ks = top_power(systems.ks_entry().form)
    assert lc == as_expr("2*u1^2 + 2*u2^2")
    assert ks == as_expr("6*u0*(u0^2 + u1^2 + u2^2)")


def test_collapse_top_power():
    phi = systems.mcgehee_collapse_map((1, 2, 3))
    c = top_power(pullback(phi, phi.target.canonical_form()))
    r = phi.source.var("r")
    mu = systems.collapse_mu((1, 2, 3), phi.source)
    ratio = c / (r ** 3 * SymExpr.sqrt(r) / SymExpr.sqrt(mu * 3))
    assert ratio.is_constant()
    assert ratio.constant_value() == factorial(9)


def test_map_inverses():
    for name in ("jacobi",):
        assert systems.get_map(name).check_inverse()
