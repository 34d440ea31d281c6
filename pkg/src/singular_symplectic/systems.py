"""Catalog of celestial-mechanics charts, maps, forms and Hamiltonian systems.

Every entry carries a golden classification that the test-suite and the
``check`` command compare against :func:`singularity.classify`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np

from .dynamics import HamiltonianSystem
from .forms import Chart, CoordinateMap, DiffForm, pullback, top_power
from .grammar import parse_expr
from .singularity import SingularityReport, order_along
from .symbolic import SymExpr, as_expr

__all__ = [
    "BodyParams",
    "Golden",
    "CatalogEntry",
    "ENTRY_NAMES",
    "MAP_NAMES",
    "get_entry",
    "get_map",
    "jacobi_map",
    "kepler_equation_solve",
    "levi_civita_entry",
    "levi_civita_regularized",
    "lift_to_levi_civita",
    "ks_entry",
    "mcgehee_collapse_map",
    "mcgehee_collapse_entry",
    "collapse_order",
    "r3bp_mcgehee_entry",
    "r3bp_polar_system",
    "two_fixed_center_entry",
    "two_center_integral",
    "resolve_two_center_constants",
    "projective_form_entry",
    "darboux_entry",
    "kepler_planar_entry",
    "kepler_initial_state",
    "kepler_period",
]


def _q(x) -> Fraction:
    """Exact rational from an int, Fraction, decimal string or float (via its repr)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (float, np.floating)):
        return Fraction(repr(float(x)))
    return Fraction(x)


@dataclass(frozen=True)
class BodyParams:
    masses: tuple[Fraction, Fraction, Fraction] = (Fraction(1), Fraction(1), Fraction(1))
    grav: Fraction = Fraction(1)
    mu: Fraction = Fraction(1, 10)
    e: float = 0.0
    center_a: tuple[Fraction, Fraction] = (Fraction(-1), Fraction(0))
    center_b: tuple[Fraction, Fraction] = (Fraction(1), Fraction(0))
    m_a: Fraction = Fraction(1)
    m_b: Fraction = Fraction(3, 5)
    m: int = 2

    def __post_init__(self):
        object.__setattr__(self, "masses", tuple(_q(x) for x in self.masses))
        for name in ("grav", "mu", "m_a", "m_b"):
            object.__setattr__(self, name, _q(getattr(self, name)))
        object.__setattr__(self, "center_a", tuple(_q(x) for x in self.center_a))
        object.__setattr__(self, "center_b", tuple(_q(x) for x in self.center_b))
        if len(self.masses) != 3 or any(m <= 0 for m in self.masses):
            raise ValueError("three positive masses required")
        if self.grav <= 0:
            raise ValueError("gravitational constant must be positive")
        if not 0 < self.mu < 1:
            raise ValueError("mu must lie in (0, 1)")
        if not 0 <= self.e < 1:
            raise ValueError("eccentricity must lie in [0, 1)")
        if self.m_a <= 0 or self.m_b < 0:
            raise ValueError("center masses must be positive (m_b may be 0)")
        if self.center_a == self.center_b:
            raise ValueError("fixed centers must differ")
        if int(self.m) != self.m or self.m < 1:
            raise ValueError("model order m must be a positive integer")

    @property
    def reduced_mass(self) -> Fraction:
        m1, m2, _ = self.masses
        return m1 * m2 / (m1 + m2)

    @property
    def coupling(self) -> Fraction:
        """``G m1 m2``, the strength of the two-body attraction."""
        m1, m2, _ = self.masses
        return self.grav * m1 * m2


@dataclass(frozen=True)
class Golden:
    verdict: str
    orders: Mapping[str, Fraction] = field(default_factory=dict)
    morse: tuple[str, ...] | None = None

    @classmethod
    def from_dict(cls, d: Mapping) -> "Golden":
        return cls(d["verdict"], {k: Fraction(v) for k, v in d.get("orders", {}).items()},
                   tuple(d["morse"]) if d.get("morse") is not None else None)

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "orders": {k: str(v) for k, v in self.orders.items()},
                "morse": list(self.morse) if self.morse is not None else None}

    def compare(self, report: SingularityReport) -> list[str]:
        """Mismatches between this golden record and ``report`` (empty when they agree)."""
        out = []
        if report.label != self.verdict:
            out.append(f"verdict: expected {self.verdict}, got {report.label}")
        for poly, k in self.orders.items():
            got = report.order_of(parse_expr(poly))
            if got != k:
                out.append(f"order along {poly} = 0: expected {k}, got {got}")
        if self.morse is not None:
            got = tuple(cp.signature_str() for cp in report.critical_points)
            if got != self.morse:
                out.append(f"Morse signatures: expected {list(self.morse)}, got {list(got)}")
        return out


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    summary: str
    chart: Chart
    form: DiffForm
    golden: Golden
    maps: Mapping[str, CoordinateMap] = field(default_factory=dict)
    system: HamiltonianSystem | None = None
    initial_states: Mapping[str, tuple[float, ...]] = field(default_factory=dict)
    t_end: float | None = None
    drift_integrals: tuple[str, ...] = ()
    drift_threshold: float = 1e-8
    notes: tuple[str, ...] = ()
    data: Mapping[str, object] = field(default_factory=dict)


def _chart(name: str, variables: str, radial: str = "", angular: str = "") -> Chart:
    return Chart(name, tuple(variables.split()), frozenset(radial.split()), frozenset(angular.split()))


def _norm(*xs: SymExpr) -> SymExpr:
    return SymExpr.sqrt(sum((x * x for x in xs), as_expr(0)))


# -- two-body and Kepler ------------------------------------------------------------


def jacobi_map(params: BodyParams = BodyParams()) -> CoordinateMap:
    """Planar two-body positions/momenta -> (centre of mass, relative) coordinates."""
    m1, m2, _ = params.masses
    n1, n2 = m1 / (m1 + m2), m2 / (m1 + m2)
    src = _chart("two-body", "q11 q12 q21 q22 p11 p12 p21 p22")
    tgt = _chart("jacobi", "g1 g2 w1 w2 G1 G2 W1 W2")
    comps, inv = {}, {}
    for a in ("1", "2"):
        comps[f"g{a}"] = f"{n1}*q1{a} + {n2}*q2{a}"
        comps[f"w{a}"] = f"q2{a} - q1{a}"
        comps[f"G{a}"] = f"p1{a} + p2{a}"
        comps[f"W{a}"] = f"-{n2}*p1{a} + {n1}*p2{a}"
        inv[f"q1{a}"] = f"g{a} - {n2}*w{a}"
        inv[f"q2{a}"] = f"g{a} + {n1}*w{a}"
        inv[f"p1{a}"] = f"{n1}*G{a} - W{a}"
        inv[f"p2{a}"] = f"{n2}*G{a} + W{a}"
    return CoordinateMap.from_strings("jacobi", src, tgt, comps, inv)


def two_body_system(params: BodyParams = BodyParams()) -> HamiltonianSystem:
    m1, m2, _ = params.masses
    chart = jacobi_map(params).source
    v = {n: chart.var(n) for n in chart.variables}
    kin = (v["p11"] ** 2 + v["p12"] ** 2) / (2 * m1) + (v["p21"] ** 2 + v["p22"] ** 2) / (2 * m2)
    h = kin - as_expr(params.grav * m1 * m2) / _norm(v["q21"] - v["q11"], v["q22"] - v["q12"])
    return HamiltonianSystem(chart, chart.canonical_form(), h,
                             {"G1": v["p11"] + v["p21"], "G2": v["p12"] + v["p22"]})


KEPLER_CHART = _chart("kepler-planar", "w1 w2 W1 W2")


def planar_projection_map() -> CoordinateMap:
    """Spatial Kepler chart -> planar one, for motion in the (w1, w2) plane."""
    src = _chart("kepler-spatial", "w1 w2 w3 W1 W2 W3")
    return CoordinateMap.from_strings("planar-projection", src, KEPLER_CHART, {}, None,
                                      "angular momentum along the third axis")


def kepler_system(params: BodyParams = BodyParams()) -> HamiltonianSystem:
    c = KEPLER_CHART
    w1, w2, W1, W2 = c.vars()
    h = (W1 * W1 + W2 * W2) / (2 * params.reduced_mass) - as_expr(params.coupling) / _norm(w1, w2)
    return HamiltonianSystem(c, c.canonical_form(), h, {"H": h, "L": w1 * W2 - w2 * W1},
                             singular_guard=_norm(w1, w2))


def kepler_period(params: BodyParams, a: float) -> float:
    return 2 * math.pi * math.sqrt(a ** 3 * float(params.reduced_mass) / float(params.coupling))


def kepler_initial_state(params: BodyParams, kind: str = "circular", radius: float = 1.0,
                         e: float = 0.5) -> tuple[float, ...]:
    """``circular``: speed from ``|W|^2/M = k/|w|``; ``collision``: at rest;
    ``elliptic``: at aphelion of an orbit with semi-major axis ``radius``."""
    m, k = float(params.reduced_mass), float(params.coupling)
    if kind == "circular":
        return (radius, 0.0, 0.0, math.sqrt(m * k / radius))
    if kind == "collision":
        return (radius, 0.0, 0.0, 0.0)
    if kind == "elliptic":
        ra = radius * (1 + e)
        speed = math.sqrt(k / m * (2 / ra - 1 / radius))
        return (-ra, 0.0, 0.0, -m * speed)
    raise ValueError(f"unknown initial state kind {kind!r}")


def kepler_planar_entry(params: BodyParams = BodyParams()) -> CatalogEntry:
    sys = kepler_system(params)
    return CatalogEntry(
        "kepler-planar", "planar Kepler problem in relative coordinates, canonical form",
        KEPLER_CHART, KEPLER_CHART.canonical_form(), Golden("symplectic"),
        {"jacobi": jacobi_map(params), "planar-projection": planar_projection_map()},
        sys,
        {"default": kepler_initial_state(params, "elliptic"), "circular": kepler_initial_state(params),
         "collision": kepler_initial_state(params, "collision")},
        10 * kepler_period(params, 1.0), ("H", "L"), 1e-8)


# -- Levi-Civita ------------------------------------------------------------------


LC_CHART = _chart("levi-civita", "u1 u2 W1 W2")
LC_SYMPLECTIC_CHART = _chart("levi-civita-symplectic", "u1 u2 U1 U2")


def levi_civita_map() -> CoordinateMap:
    """``w = u^2 / 2`` as complex squaring; momenta untouched."""
    return CoordinateMap.from_strings("levi-civita", LC_CHART, KEPLER_CHART,
                                      {"w1": "1/2*u1^2 - 1/2*u2^2", "w2": "u1*u2"}, None, "u != 0")


def levi_civita_symplectic_map() -> CoordinateMap:
    """``w = u^2 / 2`` together with ``W = U / conj(u)``."""
    return CoordinateMap.from_strings(
        "levi-civita-symplectic", LC_SYMPLECTIC_CHART, KEPLER_CHART,
        {"w1": "1/2*u1^2 - 1/2*u2^2", "w2": "u1*u2",
         "W1": "(U1*u1 - U2*u2)/(u1^2 + u2^2)", "W2": "(U1*u2 + U2*u1)/(u1^2 + u2^2)"},
        None, "u != 0")


def levi_civita_regularized(params: BodyParams, energy: float) -> HamiltonianSystem:
    """Regularized Kepler flow on the level ``H = energy``.

    ``K = |u|^2/2 (H - energy) = |U|^2/(4M) - k - energy |u|^2 / 2`` on the
    canonical ``(u, U)`` chart; its flow at ``K = 0`` follows the Kepler flow
    in the fictitious time ``tau`` with ``dt = |w| dtau = |u|^2/2 dtau``.
    """
    c = LC_SYMPLECTIC_CHART
    u1, u2, U1, U2 = c.vars()
    h = _q(energy)
    k = (U1 * U1 + U2 * U2) / (4 * params.reduced_mass) - as_expr(params.coupling) - (u1 * u1 + u2 * u2) * (h / 2)
    clock = (u1 * u1 + u2 * u2) / 2
    return HamiltonianSystem(c, c.canonical_form(), k, {"K": k, "L": (u1 * U2 - u2 * U1) / 2},
                             clock=clock)


def lift_to_levi_civita(state: Sequence[float]) -> tuple[float, ...]:
    """A preimage ``(u, U)`` of ``(w, W)`` under the symplectic Levi-Civita map."""
    w = complex(state[0], state[1])
    big_w = complex(state[2], state[3])
    u = np.sqrt(2 * w)
    big_u = big_w * u.conjugate()
    return (u.real, u.imag, big_u.real, big_u.imag)


def levi_civita_entry(params: BodyParams = BodyParams()) -> CatalogEntry:
    phi = levi_civita_map()
    form = pullback(phi, KEPLER_CHART.canonical_form())
    return CatalogEntry(
        "levi-civita", "Levi-Civita squaring w = u^2/2 with unchanged momenta",
        LC_CHART, form,
        Golden("degenerate-nontransverse", {}, ("(+,+)",)),
        {"levi-civita": phi, "levi-civita-symplectic": levi_civita_symplectic_map()},
        None, {}, None, (), 1e-8,
        ("top power is 2(u1^2 + u2^2): it vanishes only at u = 0, a critical point of "
         "definite (elliptic) Morse type",),
    )


# -- Kustaanheimo-Stiefel ----------------------------------------------------------------


KS_SOURCE = _chart("ks", "u0 u1 u2 W0 W1 W2")
KS_TARGET = _chart("kepler-spatial-w", "w0 w1 w2 W0 W1 W2")


def ks_map() -> CoordinateMap:
    """KS map restricted to the section ``u3 = 0``."""
    return CoordinateMap.from_strings("ks", KS_SOURCE, KS_TARGET,
                                      {"w0": "1/2*u0^2 - 1/2*u1^2 - 1/2*u2^2", "w1": "u0*u1", "w2": "u0*u2"},
                                      None, "u0 != 0")


def ks_entry(params: BodyParams = BodyParams()) -> CatalogEntry:
    phi = ks_map()
    form = pullback(phi, KS_TARGET.canonical_form())
    return CatalogEntry(
        "ks", "Kustaanheimo-Stiefel map on the u3 = 0 section",
        KS_SOURCE, form,
        Golden("degenerate-nontransverse", {"u0": Fraction(1)}, ("degenerate",)),
        {"ks": phi}, None, {}, None, (), 1e-8,
        ("top power is 6 u0 (u0^2 + u1^2 + u2^2): a simple fold along u0 = 0 and a "
         "degenerate critical point at u = 0; the quadratic factor is definite",),
    )


# -- total collapse ---------------------------------------------------------------------------


def _collapse_charts(n_bodies: int):
    dim = 3 * n_bodies
    s = " ".join(f"s{i}" for i in range(1, dim))
    z = " ".join(f"z{i}" for i in range(1, dim + 1))
    src = _chart("mcgehee-collapse", f"r {s} {z}", radial="r")
    q = " ".join(f"q{i}" for i in range(1, dim + 1))
    p = " ".join(f"p{i}" for i in range(1, dim + 1))
    return src, _chart(f"{n_bodies}-body", f"{q} {p}")


def mcgehee_collapse_map(masses: Sequence = (1, 1, 1)) -> CoordinateMap:
    """``q_i = r s_i`` (i < 3n), last position from the mass-weighted unit sphere,
    ``p_i = z_i / sqrt(r)``."""
    masses = [_q(m) for m in masses]
    diag = [m for m in masses for _ in range(3)]
    dim = len(diag)
    src, tgt = _collapse_charts(len(masses))
    mu = " - ".join(["1"] + [f"{diag[i]}*s{i + 1}^2" for i in range(dim - 1)])
    comps = {f"q{i + 1}": f"r*s{i + 1}" for i in range(dim - 1)}
    comps[f"q{dim}"] = f"r*sqrt(({mu})/{diag[-1]})"
    for i in range(dim):
        comps[f"p{i + 1}"] = f"z{i + 1}*r^(-1/2)"
    return CoordinateMap.from_strings("mcgehee-collapse", src, tgt, comps, None,
                                      f"r > 0, q{dim} > 0 (mass-weighted sphere radicand positive)")


def collapse_mu(masses: Sequence = (1, 1, 1), chart: Chart | None = None) -> SymExpr:
    diag = [_q(m) for m in masses for _ in range(3)]
    chart = chart or _collapse_charts(len(masses))[0]
    out = as_expr(1)
    for i in range(len(diag) - 1):
        out = out - chart.var(f"s{i + 1}") ** 2 * diag[i]
    return out


def collapse_order(n_bodies: int, masses: Sequence | None = None) -> Fraction:
    """Order of the top power along ``r = 0`` for the ``n_bodies`` total-collapse chart."""
    masses = masses or [1 + i for i in range(n_bodies)]
    phi = mcgehee_collapse_map(masses)
    c = top_power(pullback(phi, phi.target.canonical_form()))
    return order_along(c, phi.source.var("r"))


def mcgehee_collapse_entry(params: BodyParams = BodyParams()) -> CatalogEntry:
    phi = mcgehee_collapse_map(params.masses)
    form = pullback(phi, phi.target.canonical_form())
    return CatalogEntry(
        "mcgehee-collapse", "three-body total collapse blow-up (r, s, z)",
        phi.source, form,
        Golden("7/2-folded", {"r": Fraction(7, 2)}),
        {"mcgehee-collapse": phi}, None, {}, None, (), 1e-8,
        ("top power is proportional to r^(7/2) / sqrt(m9 * mu(s)); the mu(s) = 0 boundary "
         "lies outside the chart and is not classified",),
    )


# -- restricted three-body problem at infinity --------------------------------------------------


R3BP_CHART = _chart("r3bp-mcgehee", "x alpha y G", angular="alpha")
POLAR_CHART = _chart("polar", "r alpha y G", radial="r", angular="alpha")


def mcgehee_infinity_map() -> CoordinateMap:
    return CoordinateMap.from_strings("mcgehee-infinity", R3BP_CHART, POLAR_CHART, {"r": "2/x^2"}, None, "x > 0")


def kepler_equation_solve(mean_anomaly: float, e: float, tol: float = 1e-13, max_iter: int = 50) -> float:
    """Eccentric anomaly ``E`` with ``E - e sin E = M``, by damped Newton from ``E0 = M``."""
    if not 0 <= e < 1:
        raise ValueError("eccentricity must lie in [0, 1)")
    m = float(mean_anomaly)
    big_e = m
    for _ in range(max_iter):
        res = big_e - e * math.sin(big_e) - m
        if abs(res) < tol:
            return big_e
        step = res / (1 - e * math.cos(big_e))
        lam = 1.0
        while lam > 1e-4:
            cand = big_e - lam * step
            if abs(cand - e * math.sin(cand) - m) < abs(res):
                break
            lam *= 0.5
        big_e -= lam * step
    res = big_e - e * math.sin(big_e) - m
    if abs(res) < tol:
        return big_e
    raise ArithmeticError(f"Kepler equation did not converge (residual {res:.3e})")


def primaries(t: float, mu: float, e: float = 0.0):
    """Positions and velocities of the two primaries (total mass 1, unit semi-major axis).

    Returns ``((q1, v1), (q2, v2))`` with mass ``1 - mu`` at ``q1`` and ``mu`` at ``q2``.
    """
    if e == 0.0:
        rel = np.array([math.cos(t), math.sin(t)])
        vel = np.array([-math.sin(t), math.cos(t)])
    else:
        big_e = kepler_equation_solve(t, e)
        b = math.sqrt(1 - e * e)
        edot = 1.0 / (1 - e * math.cos(big_e))
        rel = np.array([math.cos(big_e) - e, b * math.sin(big_e)])
        vel = np.array([-math.sin(big_e), b * math.cos(big_e)]) * edot
    return (-mu * rel, -mu * vel), ((1 - mu) * rel, (1 - mu) * vel)


def _potential_and_grad(q: np.ndarray, t: float, mu: float, e: float):
    """``U`` and its derivatives in ``q`` and ``t``."""
    (q1, v1), (q2, v2) = primaries(t, mu, e)
    u = 0.0
    dq = np.zeros(2)
    dt = 0.0
    for m, qi, vi in ((1 - mu, q1, v1), (mu, q2, v2)):
        d = q - qi
        dist = math.hypot(d[0], d[1])
        u += m / dist
        g = -m * d / dist ** 3
        dq += g
        dt -= g @ vi
    return u, dq, dt


def _r3bp_callables(mu: float, e: float, radial_from_x: bool):
    def pieces(x):
        if radial_from_x:
            xx, alpha = x[0], x[1]
            r = 2.0 / (xx * xx)
            dr = -4.0 / xx ** 3
        else:
            r, alpha = x[0], x[1]
            dr = 1.0
        return r, dr, alpha

    def hamiltonian(x, t):
        r, _, alpha = pieces(x)
        y, big_g = x[2], x[3]
        q = np.array([r * math.cos(alpha), r * math.sin(alpha)])
        u, _, _ = _potential_and_grad(q, t, mu, e)
        return 0.5 * y * y + big_g * big_g / (2 * r * r) - u

    def gradient(x, t):
        r, dr, alpha = pieces(x)
        y, big_g = x[2], x[3]
        ca, sa = math.cos(alpha), math.sin(alpha)
        q = np.array([r * ca, r * sa])
        _, du, dut = _potential_and_grad(q, t, mu, e)
        dh_dr = -big_g * big_g / r ** 3 - du @ np.array([ca, sa])
        dh_dalpha = -du @ np.array([-r * sa, r * ca])
        return np.array([dh_dr * dr, dh_dalpha, y, big_g / (r * r)]), -dut

    def guard(x, t):
        r, _, alpha = pieces(x)
        q = np.array([r * math.cos(alpha), r * math.sin(alpha)])
        (q1, _), (q2, _) = primaries(t, mu, e)
        base = min(np.hypot(*(q - q1)), np.hypot(*(q - q2)))
        return min(abs(x[0]), base) if radial_from_x else min(r, base)

    return hamiltonian, gradient, guard


def r3bp_mcgehee_entry(params: BodyParams = BodyParams()) -> CatalogEntry:
    form = DiffForm.from_names(R3BP_CHART, {("x", "y"): "-4/x^3", ("alpha", "G"): "1"})
    mu, e = float(params.mu), float(params.e)
    h, grad, guard = _r3bp_callables(mu, e, True)
    sys = HamiltonianSystem(R3BP_CHART, form, h, {}, singular_guard=guard, time_variable="t", gradient=grad)
    return CatalogEntry(
        "r3bp-mcgehee", "restricted three-body problem near infinity, r = 2/x^2",
        R3BP_CHART, form, Golden("b^3", {"x": Fraction(-3)}),
        {"mcgehee-infinity": mcgehee_infinity_map()}, sys,
        {"default": (0.4, 0.3, 0.2, 1.1)}, 20.0, ("extended_energy",), 1e-8,
        ("primaries on circular orbits by default; elliptic motion via the eccentricity parameter",),
    )


def r3bp_polar_system(params: BodyParams = BodyParams()) -> HamiltonianSystem:
    """The same problem on the canonical polar chart ``(r, alpha, y, G)``."""
    h, grad, guard = _r3bp_callables(float(params.mu), float(params.e), False)
    return HamiltonianSystem(POLAR_CHART, POLAR_CHART.canonical_form(), h, {}, singular_guard=guard,
                             time_variable="t", gradient=grad)


# -- two fixed centers -----------------------------------------------------------------------------


TWO_CENTER_CHART = _chart("two-fixed-center", "q1 q2 p1 p2")


def two_center_integral(params: BodyParams, c_a, c_b) -> SymExpr:
    """``L_A L_B + c_A m_A <q_A, u>/|q_A| + c_B m_B <q_B, u>/|q_B|`` with ``u = B - A``."""
    q1, q2, p1, p2 = TWO_CENTER_CHART.vars()
    (a1, a2), (b1, b2) = params.center_a, params.center_b
    qa = (q1 - a1, q2 - a2)
    qb = (q1 - b1, q2 - b2)
    u = (b1 - a1, b2 - a2)
    la = qa[0] * p2 - qa[1] * p1
    lb = qb[0] * p2 - qb[1] * p1
    ta = (qa[0] * u[0] + qa[1] * u[1]) / _norm(*qa)
    tb = (qb[0] * u[0] + qb[1] * u[1]) / _norm(*qb)
    return la * lb + ta * (as_expr(_q(c_a)) * params.m_a) + tb * (as_expr(_q(c_b)) * params.m_b)


def two_center_hamiltonian(params: BodyParams) -> SymExpr:
    q1, q2, p1, p2 = TWO_CENTER_CHART.vars()
    (a1, a2), (b1, b2) = params.center_a, params.center_b
    h = (p1 * p1 + p2 * p2) / 2 - as_expr(params.m_a) / _norm(q1 - a1, q2 - a2)
    if params.m_b:
        h = h - as_expr(params.m_b) / _norm(q1 - b1, q2 - b2)
    return h


def _bracket_sym(f: SymExpr, g: SymExpr) -> SymExpr:
    out = as_expr(0)
    for q, p in (("q1", "p1"), ("q2", "p2")):
        out = out + f.diff(q) * g.diff(p) - f.diff(p) * g.diff(q)
    return out


def resolve_two_center_constants(params: BodyParams = BodyParams(), points: int = 20, seed: int = 0):
    """Fit ``(c_A, c_B)`` so that ``{H, G} = 0``.

    ``{H, G}`` is affine in the constants, so a least-squares solve over
    random phase-space points determines them; the result is rounded to a
    small-denominator rational and then confirmed by exact symbolic
    cancellation.  Returns ``(c_A, c_B, residual_norm, exact_zero)``.
    """
    h = two_center_hamiltonian(params)
    base = _bracket_sym(h, two_center_integral(params, 0, 0))
    ea = _bracket_sym(h, two_center_integral(params, 1, 0)) - base
    eb = _bracket_sym(h, two_center_integral(params, 0, 1)) - base
    f = [e.compile(TWO_CENTER_CHART.variables) for e in (base, ea, eb)]
    rng = np.random.default_rng(seed)
    rows, rhs = [], []
    while len(rows) < points:
        x = rng.uniform(-2, 2, 4)
        try:
            vals = [fn(x) for fn in f]
        except (ZeroDivisionError, ValueError):
            continue
        rows.append(vals[1:])
        rhs.append(-vals[0])
    a, b = np.array(rows), np.array(rhs)
    if params.m_b == 0:
        sol, *_ = np.linalg.lstsq(a[:, :1], b, rcond=None)
        sol = np.array([sol[0], 0.0])
    else:
        sol, *_ = np.linalg.lstsq(a, b, rcond=None)
    resid = float(np.linalg.norm(a @ sol - b))
    ca, cb = (Fraction(float(v)).limit_denominator(12) for v in sol)
    exact = _bracket_sym(h, two_center_integral(params, ca, cb)).is_zero()
    return ca, cb, resid, exact


TWO_CENTER_CONSTANTS = (Fraction(1), Fraction(-1))


def two_fixed_center_entry(params: BodyParams = BodyParams()) -> CatalogEntry:
    """Euler's two-center problem with its quadratic-in-momenta second integral.

    The potential-term constants of the second integral are ``c_A = 1`` and
    ``c_B = -1`` (see :func:`resolve_two_center_constants`, which re-derives
    them numerically).
    """
    c = TWO_CENTER_CHART
    h = two_center_hamiltonian(params)
    g = two_center_integral(params, *TWO_CENTER_CONSTANTS)
    q1, q2, _, _ = c.vars()
    (a1, a2), (b1, b2) = params.center_a, params.center_b
    guard = ((q1 - a1) ** 2 + (q2 - a2) ** 2) * ((q1 - b1) ** 2 + (q2 - b2) ** 2)
    sys = HamiltonianSystem(c, c.canonical_form(), h, {"H": h, "G": g}, singular_guard=guard)
    return CatalogEntry(
        "two-fixed-center", "particle attracted by two fixed centers A and B",
        c, c.canonical_form(), Golden("symplectic"), {}, sys,
        {"default": (0.0, 1.0, 1.1, 0.0)}, 100.0, ("H", "G"), 1e-7,
        ("second integral G = L_A L_B + m_A <q_A,u>/|q_A| - m_B <q_B,u>/|q_B|, u = B - A",),
        {"c_A": TWO_CENTER_CONSTANTS[0], "c_B": TWO_CENTER_CONSTANTS[1]},
    )


# -- projective two-center form ------------------------------------------------------------------


PROJECTIVE_CHART = _chart("projective-two-center", "q1 q2 v1 v2")


def projective_form() -> DiffForm:
    return DiffForm.from_names(PROJECTIVE_CHART, {
        ("v1", "q1"): "1",
        ("q1", "v2"): "q1/q2",
        ("q2", "v1"): "q1/q2",
        ("q1", "q2"): "(v2*q1 - v1*q2)/q2^2",
        ("v2", "q2"): "q1^2/q2^2 - 1",
    })


def projective_form_entry(params: BodyParams | None = None) -> CatalogEntry:
    return CatalogEntry(
        "projective-two-center", "canonical form after central projection to the screen q2 = 1",
        PROJECTIVE_CHART, projective_form(),
        Golden("mixed-dirac", {"q2": Fraction(-2), "q1": Fraction(1), "q1 - q2": Fraction(1),
                               "q1 + q2": Fraction(1)}),
        notes=("only the transformed 2-form is cataloged; the projection map on momenta is not",),
    )


# -- Darboux models -----------------------------------------------------------------------------------


DARBOUX_CHART = _chart("darboux", "x1 x2 y1 y2")


def darboux_entry(kind: str, m: int = 1) -> CatalogEntry:
    """``dx1^dy1 / y1^m + dx2^dy2`` (kind ``b``) or ``y1^m dx1^dy1 + dx2^dy2`` (kind ``folded``)."""
    if m < 1:
        raise ValueError("m must be a positive integer")
    if kind == "b":
        coeff, golden, name = f"1/y1^{m}", Golden(f"b^{m}", {"y1": Fraction(-m)}), "darboux-b" if m == 1 else f"darboux-bm:{m}"
    elif kind == "folded":
        coeff, golden, name = f"y1^{m}", Golden(f"{m}-folded", {"y1": Fraction(m)}), f"darboux-folded:{m}"
    else:
        raise ValueError(f"unknown Darboux model {kind!r}")
    form = DiffForm.from_names(DARBOUX_CHART, {("x1", "y1"): coeff, ("x2", "y2"): "1"})
    return CatalogEntry(name, f"{kind} Darboux model of order {m}", DARBOUX_CHART, form, golden)


# -- lookup ---------------------------------------------------------------------------------------------


ENTRY_NAMES = ("kepler-planar", "levi-civita", "ks", "mcgehee-collapse", "r3bp-mcgehee", "two-fixed-center",
               "projective-two-center", "darboux-b", "darboux-bm:m", "darboux-folded")

MAP_NAMES = ("identity", "jacobi", "levi-civita", "levi-civita-symplectic", "ks", "mcgehee-collapse",
             "mcgehee-infinity", "planar-projection")

_BUILDERS: dict[str, Callable[[BodyParams], CatalogEntry]] = {
    "kepler-planar": kepler_planar_entry,
    "levi-civita": levi_civita_entry,
    "ks": ks_entry,
    "mcgehee-collapse": mcgehee_collapse_entry,
    "r3bp-mcgehee": r3bp_mcgehee_entry,
    "two-fixed-center": two_fixed_center_entry,
    "projective-two-center": projective_form_entry,
}


def get_entry(name: str, params: BodyParams = BodyParams()) -> CatalogEntry:
    """Look up an entry; ``darboux-bm:<m>`` and ``darboux-folded[:<m>]`` take the
    order from the name, falling back to ``params.m``."""
    if name in _BUILDERS:
        return _BUILDERS[name](params)
    base, _, arg = name.partition(":")
    if base in ("darboux-b", "darboux-bm", "darboux-folded"):
        if base == "darboux-b":
            if arg:
                raise KeyError(name)
            return darboux_entry("b", 1)
        m = params.m if arg in ("", "m") else int(arg)
        return darboux_entry("b" if base == "darboux-bm" else "folded", m)
    raise KeyError(f"unknown catalog entry {name!r}; known: {', '.join(ENTRY_NAMES)}")


def get_map(name: str, params: BodyParams = BodyParams(), chart: Chart | None = None) -> CoordinateMap:
    builders = {
        "jacobi": lambda: jacobi_map(params),
        "levi-civita": levi_civita_map,
        "levi-civita-symplectic": levi_civita_symplectic_map,
        "ks": ks_map,
        "mcgehee-collapse": lambda: mcgehee_collapse_map(params.masses),
        "mcgehee-infinity": mcgehee_infinity_map,
        "planar-projection": planar_projection_map,
        "identity": lambda: CoordinateMap.identity(chart or KEPLER_CHART),
    }
    if name not in builders:
        raise KeyError(f"unknown map {name!r}; known: {', '.join(MAP_NAMES)}")
    return builders[name]()
