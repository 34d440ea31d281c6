from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from singular_symplectic.symbolic import Monomial, Polynomial, SymExpr

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

VARS = ("x", "y", "z")


@st.composite
def polynomials(draw, variables=VARS, max_terms=4, max_degree=3):
    terms = {}
    for _ in range(draw(st.integers(1, max_terms))):
        exps = tuple((v, draw(st.integers(0, max_degree))) for v in variables)
        mono = Monomial((v, e) for v, e in exps if e)
        terms[mono] = terms.get(mono, 0) + draw(st.integers(-5, 5))
    return SymExpr(Polynomial({m: Fraction(c) for m, c in terms.items() if c}))


@st.composite
def rational_functions(draw, variables=VARS):
    num = draw(polynomials(variables))
    den = draw(polynomials(variables, max_terms=2, max_degree=2))
    if den.is_zero():
        den = SymExpr.const(1)
    return num / den


@st.composite
def rational_points(draw, variables=VARS):
    return {v: Fraction(draw(st.integers(-7, 7)), draw(st.integers(1, 5))) for v in variables}


@pytest.fixture(scope="session")
def rng():
    import numpy as np
    return np.random.default_rng(20240)


# -- acceptance summary ------------------------------------------------------------------

_CRITERIA: dict[int, tuple[str, bool]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion reported in the summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call" and not rep.failed:
        return
    number, title = mark.args
    ok = rep.passed if rep.when == "call" else False
    prev = _CRITERIA.get(number, (title, True))[1]
    _CRITERIA[number] = (title, prev and ok)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, ok = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {title}")
