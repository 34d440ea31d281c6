import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from singular_symplectic import systems
from singular_symplectic.forms import CoordinateMap, ext_deriv, pullback, top_power
from singular_symplectic.singularity import classify, order_along
from singular_symplectic.symbolic import as_expr

PARAMS = systems.BodyParams()


def bisect_kepler(mean_anomaly, e):
    lo, hi = 0.0, 2 * math.pi
    f = lambda x: x - e * math.sin(x) - mean_anomaly  # noqa: E731
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(lo) * f(mid) <= 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


# -- parameters --------------------------------------------------------------------------------


def test_body_params_validation():
    with pytest.raises(ValueError):
        systems.BodyParams(masses=(1, -1, 1))
    with pytest.raises(ValueError):
        systems.BodyParams(mu=Fraction(3, 2))
    assert systems.BodyParams(masses=(1, 1, 1)).reduced_mass == Fraction(1, 2)


# -- Jacobi coordinates ------------------------------------------------------------------------------


def test_jacobi_is_canonical():
    phi = systems.jacobi_map(systems.BodyParams(masses=(1, 3, 1)))
    assert pullback(phi, phi.target.canonical_form()) == phi.source.canonical_form()


def test_jacobi_equal_masses_midpoint():
    phi = systems.jacobi_map(PARAMS)
    x = phi([1.0, 2.0, 3.0, -4.0, 0, 0, 0, 0])
    assert np.allclose(x[:2], [2.0, -1.0])


def test_jacobi_inverse():
    phi = systems.jacobi_map(systems.BodyParams(masses=(2, 5, 1)))
    assert phi.check_inverse()


# -- Levi-Civita and KS -----------------------------------------------------------------------------------


def test_levi_civita_real_axis():
    assert np.allclose(systems.levi_civita_map()([1.0, 0.0, 0.3, 0.4]), [0.5, 0.0, 0.3, 0.4])


def test_levi_civita_symplectic_variant_is_canonical():
    phi = systems.levi_civita_symplectic_map()
    assert pullback(phi, phi.target.canonical_form()) == phi.source.canonical_form()


def test_lift_is_a_preimage(rng):
    phi = systems.levi_civita_symplectic_map()
    for x in rng.uniform(-2, 2, (10, 4)):
        assert np.allclose(phi(systems.lift_to_levi_civita(x)), x)


def test_ks_axis_point():
    assert np.allclose(systems.ks_map()([1.0, 0, 0, 0, 0, 0])[:3], [0.5, 0, 0])


def test_ks_top_power_is_multiple_of_u0_w0():
    c = top_power(systems.ks_entry().form)
    w0 = systems.ks_map().components[0]
    u0 = systems.KS_SOURCE.var("u0")
    ratio = c / (u0 * w0 * 2)
    # the pulled-back form gives u0 (u0^2 + u1^2 + u2^2), not u0 w0
    assert not ratio.is_constant()
    assert order_along(c, u0) == 1


# -- total collapse ---------------------------------------------------------------------------------


def test_collapse_unit_radius_keeps_momenta():
    phi = systems.mcgehee_collapse_map()
    x = np.zeros(18)
    x[0] = 1.0
    x[1] = 0.3
    x[9:] = np.arange(9) * 0.1
    out = phi(x)
    assert np.allclose(out[9:], x[9:])


@pytest.mark.parametrize("n, order", [(2, Fraction(2)), (3, Fraction(7, 2)), (4, Fraction(5))])
def test_collapse_orders(n, order):
    assert systems.collapse_order(n) == order


def test_collapse_outside_chart():
    phi = systems.mcgehee_collapse_map()
    x = np.zeros(18)
    x[0], x[1] = 1.0, 2.0  # mu(s) = 1 - 4 < 0
    with pytest.raises(ValueError):
        phi(x)


# -- restricted three-body problem ------------------------------------------------------------------------


@pytest.mark.parametrize("mean", [0.0, 0.3, 1.0, 2.5, math.pi, 5.0])
@pytest.mark.parametrize("e", [0.0, 0.2, 0.5, 0.9])
def test_kepler_equation(mean, e):
    big_e = systems.kepler_equation_solve(mean, e)
    assert abs(big_e - e * math.sin(big_e) - mean) < 1e-13
    if e == 0:
        assert big_e == mean
    if mean == math.pi:
        assert abs(big_e - math.pi) < 1e-15


def test_kepler_equation_bisection_oracle():
    assert abs(systems.kepler_equation_solve(1.0, 0.5) - bisect_kepler(1.0, 0.5)) < 1e-12


def test_kepler_equation_rejects_hyperbolic():
    with pytest.raises(ValueError):
        systems.kepler_equation_solve(1.0, 1.0)


def test_primaries_circular():
    (q1, _), (q2, _) = systems.primaries(0.7, 0.1)
    assert abs(np.linalg.norm(q2 - q1) - 1.0) < 1e-15
    assert np.allclose(0.9 * q1 + 0.1 * q2, 0)


def test_primaries_elliptic_velocity():
    h = 1e-6
    (a, va), _ = systems.primaries(1.3, 0.2, 0.4)
    (ap, _), _ = systems.primaries(1.3 + h, 0.2, 0.4)
    (am, _), _ = systems.primaries(1.3 - h, 0.2, 0.4)
    assert np.allclose((ap - am) / (2 * h), va, atol=1e-8)


def test_r3bp_angular_pair_is_canonical():
    entry = systems.r3bp_mcgehee_entry()
    from singular_symplectic.dynamics import poisson_bracket
    alpha, big_g = entry.chart.var("alpha"), entry.chart.var("G")
    assert poisson_bracket(alpha, big_g, entry.system, [0.5, 0.1, 0.2, 0.3]) == 1.0


# -- two fixed centers ----------------------------------------------------------------------------------


def test_two_center_constants_resolved():
    ca, cb, resid, exact = systems.resolve_two_center_constants(PARAMS)
    assert (ca, cb) == systems.TWO_CENTER_CONSTANTS
    assert resid < 1e-10 and exact


def test_two_center_one_center_limit():
    params = systems.BodyParams(m_b=0)
    h = systems.two_center_hamiltonian(params)
    g = systems.two_center_integral(params, *systems.TWO_CENTER_CONSTANTS)
    q1, q2, p1, p2 = systems.TWO_CENTER_CHART.vars()
    (a1, a2), (b1, b2) = params.center_a, params.center_b
    x, y = q1 - a1, q2 - a2
    u1, u2 = as_expr(b1 - a1), as_expr(b2 - a2)
    la = x * p2 - y * p1
    # Laplace-Runge-Lenz vector about A: p x L - m_A q_A / |q_A|
    dist = systems._norm(x, y)
    lrl = (p2 * la - x * params.m_a / dist, -(p1 * la) - y * params.m_a / dist)
    assert g == la * la - (u1 * lrl[0] + u2 * lrl[1])
    assert systems._bracket_sym(h, g).is_zero()


def test_two_center_bracket_is_exactly_zero():
    entry = systems.two_fixed_center_entry(PARAMS)
    assert systems._bracket_sym(entry.system.hamiltonian, entry.system.first_integrals["G"]).is_zero()


# -- projective form ------------------------------------------------------------------------------------


def test_projective_form_closed():
    assert ext_deriv(systems.projective_form()).is_zero()


def test_projective_form_at_unit_screen():
    from singular_symplectic.dynamics import poisson_matrix
    form = systems.projective_form()
    amat = form.matrix_function()(np.array([0.0, 1.0, 0.3, -0.2]))
    want = np.zeros((4, 4))
    order = {v: i for i, v in enumerate(form.chart.variables)}
    for (a, b), c in {("v1", "q1"): 1.0, ("v2", "q2"): -1.0, ("q1", "q2"): -0.3}.items():
        want[order[a], order[b]], want[order[b], order[a]] = c, -c
    assert np.allclose(amat, want)
    pi = poisson_matrix(form, [0.0, 1.0, 0.3, -0.2])
    assert np.allclose(pi @ amat.T, np.eye(4))


# -- catalog --------------------------------------------------------------------------------------------------


@pytest.mark.parametrize("name", [n for n in systems.ENTRY_NAMES])
def test_goldens(name):
    entry = systems.get_entry(name)
    assert entry.golden.compare(classify(entry.form)) == []


def test_catalog_maps_with_inverses():
    for name in systems.MAP_NAMES:
        phi = systems.get_map(name)
        if phi.inverse is not None:
            assert phi.check_inverse(), name


def test_identity_map_default_chart():
    assert systems.get_map("identity").source == systems.KEPLER_CHART
    assert isinstance(systems.get_map("identity"), CoordinateMap)


def test_unknown_names():
    with pytest.raises(KeyError):
        systems.get_entry("nope")
    with pytest.raises(KeyError):
        systems.get_map("nope")


@given(st.integers(1, 6))
def test_darboux_lookup(m):
    assert systems.get_entry(f"darboux-bm:{m}").golden.verdict == f"b^{m}"
    assert systems.get_entry("darboux-bm:m", systems.BodyParams(m=m)).golden.verdict == f"b^{m}"
