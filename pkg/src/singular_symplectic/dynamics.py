"""Hamiltonian dynamics on the nondegenerate part of a 2-form.

Sign conventions: with ``A[i][j] = omega(d_i, d_j)`` the Poisson matrix is
``Pi = -A^{-1}``, the Hamiltonian field is ``X = Pi dH`` (so that
``i_X omega = dH`` and ``{q, p} = 1`` for the canonical form), and
``{f, g} = df . Pi . dg``.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Sequence

import numpy as np

from .forms import Chart, DiffForm
from .symbolic import DomainError, SymbolicError, SymExpr, compile_many

__all__ = [
    "DegeneratePoint",
    "IllConditioned",
    "HamiltonianSystem",
    "IntegrationOptions",
    "Trajectory",
    "poisson_matrix",
    "ham_field",
    "poisson_bracket",
    "integrate",
    "reparametrize",
    "monitor_integrals",
    "leapfrog",
    "finite_difference_gradient",
    "dense_states",
    "arclength",
    "arclength_align",
]

T_END = "t_end"
GUARD = "singular_guard_triggered"
STEP_FAILURE = "step_failure"


class DegeneratePoint(ValueError):
    """The 2-form is degenerate (or nearly so) at the evaluated point."""


class IllConditioned(UserWarning):
    pass


ScalarFn = Callable[[np.ndarray, float], float]


def _scalar(fn, variables: Sequence[str], time_var: str | None) -> ScalarFn:
    """Wrap a SymExpr or a callable ``f(x)`` / ``f(x, t)`` as ``f(x, t)``."""
    if isinstance(fn, SymExpr):
        names = list(variables) + ([time_var] if time_var else [])
        f = fn.compile(names)
        if time_var:
            return lambda x, t: f(np.append(x, t))
        return lambda x, t: f(x)
    try:
        import inspect
        nparams = len(inspect.signature(fn).parameters)
    except (TypeError, ValueError):
        nparams = 2
    if nparams >= 2:
        return fn
    return lambda x, t: fn(x)


def finite_difference_gradient(f: ScalarFn, x: np.ndarray, t: float = 0.0, step: float = 1e-6) -> np.ndarray:
    """Central differences with step ``step * max(1, |x_i|)``."""
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        h = step * max(1.0, abs(x[i]))
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = (f(xp, t) - f(xm, t)) / (2 * h)
    return g


def poisson_matrix(omega, p: np.ndarray | Sequence[float] | Mapping[str, float], scale: float = 1.0) -> np.ndarray:
    """``Pi = -A^{-1}`` at ``p`` for a 2-form ``omega`` (or a matrix function ``p -> A``)."""
    if isinstance(omega, DiffForm):
        if isinstance(p, Mapping):
            p = [p[v] for v in omega.chart.variables]
        amat = omega.matrix_function()(np.asarray(p, dtype=float))
    else:
        amat = np.asarray(omega(np.asarray(p, dtype=float)), dtype=float)
    return _invert(amat, scale)


def _invert(amat: np.ndarray, scale: float = 1.0) -> np.ndarray:
    n = amat.shape[0]
    if not np.all(np.isfinite(amat)):
        raise DegeneratePoint("form coefficients are not finite here")
    det = np.linalg.det(amat)
    if abs(det) < 1e-12 * scale ** n:
        raise DegeneratePoint(f"|det| = {abs(det):.3e} below tolerance")
    pi = -np.linalg.solve(amat, np.eye(n))
    cond = np.linalg.cond(amat)
    if cond > 1e12:
        warnings.warn(f"coefficient matrix condition number {cond:.3e}", IllConditioned, stacklevel=3)
    return 0.5 * (pi - pi.T)


@dataclass(frozen=True)
class HamiltonianSystem:
    """A Hamiltonian, a structure and optional extras on one chart.

    ``structure`` is a 2-form or a function returning the Poisson matrix.
    ``hamiltonian`` and the first integrals are SymExprs (exact gradients)
    or callables ``f(x)`` / ``f(x, t)`` (finite-difference gradients unless
    ``gradient`` is supplied as ``(x, t) -> (dH/dx, dH/dt)``).  When
    ``time_variable`` is set the Hamiltonian depends on that name as time.
    ``time_factor`` multiplies the field (``dt = f dtau``); ``clock`` instead
    only sets ``dt/dtau`` for a field already written in ``tau``.
    """

    chart: Chart
    structure: object
    hamiltonian: object
    first_integrals: Mapping[str, object] = field(default_factory=dict)
    time_factor: object | None = None
    singular_guard: object | None = None
    time_variable: str | None = None
    gradient: Callable[[np.ndarray, float], tuple[np.ndarray, float]] | None = None
    clock: object | None = None
    scale: float = 1.0

    @property
    def autonomous(self) -> bool:
        if self.time_variable is None:
            return True
        h = self.hamiltonian
        return isinstance(h, SymExpr) and self.time_variable not in h.variables()

    def _fns(self) -> "_Compiled":
        cached = getattr(self, "_compiled", None)
        if cached is None:
            cached = _Compiled(self)
            object.__setattr__(self, "_compiled", cached)
        return cached

    def energy(self, x, t: float = 0.0) -> float:
        return self._fns().h(np.asarray(x, dtype=float), t)

    def integral(self, name: str, x, t: float = 0.0) -> float:
        return self._fns().integrals[name](np.asarray(x, dtype=float), t)


class _Compiled:
    """Float callables derived from a system, built once."""

    def __init__(self, sys: HamiltonianSystem):
        vars_ = sys.chart.variables
        tv = sys.time_variable
        self.n = len(vars_)
        self.h = _scalar(sys.hamiltonian, vars_, tv)
        if sys.gradient is not None:
            self.grad = sys.gradient
        elif isinstance(sys.hamiltonian, SymExpr):
            exprs = [sys.hamiltonian.diff(v) for v in vars_]
            exprs.append(sys.hamiltonian.diff(tv) if tv else SymExpr.const(0))
            names = list(vars_) + ([tv] if tv else [])
            g = compile_many(exprs, names)
            if tv:
                def grad(x, t, g=g):
                    out = g(np.append(x, t))
                    return np.array(out[:-1]), out[-1]
            else:
                def grad(x, t, g=g):
                    out = g(x)
                    return np.array(out[:-1]), 0.0
            self.grad = grad
        else:
            h = self.h

            def grad(x, t):
                dt = 1e-6 * max(1.0, abs(t))
                ht = (h(x, t + dt) - h(x, t - dt)) / (2 * dt) if tv else 0.0
                return finite_difference_gradient(h, x, t), ht
            self.grad = grad
        self.integrals = {k: _scalar(f, vars_, tv) for k, f in sys.first_integrals.items()}
        self.factor = _scalar(sys.time_factor, vars_, None) if sys.time_factor is not None else None
        self.guard = _scalar(sys.singular_guard, vars_, None) if sys.singular_guard is not None else None
        self.clock = _scalar(sys.clock, vars_, None) if sys.clock is not None else None
        st = sys.structure
        if isinstance(st, DiffForm):
            constant = all(c.is_constant() for c in st.coeffs.values())
            amat = st.matrix_function()
            if constant:
                pi = _invert(amat(np.zeros(self.n)), sys.scale)
                self.pi = lambda x, pi=pi: pi
            else:
                self.pi = lambda x: _invert(amat(x), sys.scale)
        else:
            self.pi = lambda x: np.asarray(st(x), dtype=float)

    def field(self, x: np.ndarray, t: float) -> tuple[np.ndarray, float, float]:
        """``(dx/dtau, dt/dtau, de/dtau)`` with ``e`` conjugate to time."""
        gx, gt = self.grad(x, t)
        f = self.factor(x, t) if self.factor else 1.0
        if not f > 0:
            raise DomainError(f"time factor {f} is not positive")
        rate = self.clock(x, t) if self.clock else f
        return f * (self.pi(x) @ gx), rate, -rate * gt


def ham_field(sys: HamiltonianSystem, p, t: float = 0.0) -> np.ndarray:
    """``Pi(p) dH(p, t)``, multiplied by the time factor when present."""
    x = _as_state(sys.chart, p)
    return sys._fns().field(x, t)[0]


def _as_state(chart: Chart, p) -> np.ndarray:
    if isinstance(p, Mapping):
        return np.array([float(p[v]) for v in chart.variables])
    return np.asarray(p, dtype=float)


def _gradient_of(f, sys: HamiltonianSystem, x: np.ndarray, t: float) -> np.ndarray:
    if isinstance(f, SymExpr):
        names = list(sys.chart.variables) + ([sys.time_variable] if sys.time_variable else [])
        g = compile_many([f.diff(v) for v in sys.chart.variables], names)
        return np.array(g(np.append(x, t) if sys.time_variable else x))
    return finite_difference_gradient(_scalar(f, sys.chart.variables, sys.time_variable), x, t)


def poisson_bracket(f, g, sys: HamiltonianSystem, p, t: float = 0.0) -> float:
    """``df . Pi . dg`` at ``p``; ``f`` and ``g`` are SymExprs or callables."""
    x = _as_state(sys.chart, p)
    pi = sys._fns().pi(x)
    return float(_gradient_of(f, sys, x, t) @ pi @ _gradient_of(g, sys, x, t))


def reparametrize(sys: HamiltonianSystem, factor, samples: Sequence = ()) -> HamiltonianSystem:
    """Multiply the vector field by ``factor`` (``dt = factor dtau``)."""
    f = _scalar(factor, sys.chart.variables, None)
    for p in samples:
        v = f(_as_state(sys.chart, p), 0.0)
        if not v > 0:
            raise ValueError(f"time factor {v} is not positive at {p}")
    if sys.time_factor is None:
        new = factor
    elif isinstance(factor, SymExpr) and isinstance(sys.time_factor, SymExpr):
        new = sys.time_factor * factor
    else:
        old = _scalar(sys.time_factor, sys.chart.variables, None)
        new = lambda x, t: old(x, t) * f(x, t)  # noqa: E731
    return replace(sys, time_factor=new)


# -- integration -----------------------------------------------------------------


@dataclass(frozen=True)
class IntegrationOptions:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    guard_eps: float = 1e-6
    max_steps: int = 200_000
    first_step: float | None = None
    max_step: float = math.inf


@dataclass
class Trajectory:
    variables: tuple[str, ...]
    times: np.ndarray
    states: np.ndarray
    physical_times: np.ndarray
    integrals: dict[str, np.ndarray]
    reason: str
    message: str = ""
    error_estimate: float = 0.0
    steps: int = 0
    rejected: int = 0
    rates: np.ndarray | None = None  # d(state)/dtau at each sample, for dense output

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def column(self, name: str) -> np.ndarray:
        return self.states[:, self.variables.index(name)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        names = sorted(self.integrals)
        w.writerow(["tau", "t", *self.variables, *names])
        for i in range(len(self.times)):
            w.writerow([repr(float(self.times[i])), repr(float(self.physical_times[i])),
                        *(repr(float(v)) for v in self.states[i]),
                        *(repr(float(self.integrals[k][i])) for k in names)])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "variables": list(self.variables),
            "tau": [float(t) for t in self.times],
            "t": [float(t) for t in self.physical_times],
            "states": [[float(v) for v in row] for row in self.states],
            "integrals": {k: [float(v) for v in vals] for k, vals in sorted(self.integrals.items())},
            "termination": self.reason,
            "message": self.message,
            "steps": self.steps,
            "rejected_steps": self.rejected,
            "error_estimate": self.error_estimate,
        }


# Dormand-Prince 5(4) tableau
_C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1, 1])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
_B4 = np.array([5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


class _StepError(Exception):
    pass


def _dp_step(rhs, y: np.ndarray, tau: float, h: float, k0: np.ndarray):
    ks = [k0]
    for i in range(1, 7):
        yi = y + h * sum(a * k for a, k in zip(_A[i], ks))
        ki = rhs(yi, tau + _C[i] * h)
        ks.append(ki)
    ks_arr = np.array(ks)
    y_new = y + h * (_B5 @ ks_arr)
    err = h * (_E @ ks_arr)
    return y_new, err, ks[-1]


def integrate(sys: HamiltonianSystem, x0, t_span: tuple[float, float],
              opts: IntegrationOptions | None = None) -> Trajectory:
    """Adaptive Dormand-Prince 5(4) integration of the Hamiltonian flow.

    The internal state is ``(x, t)`` plus the momentum ``e`` conjugate to time
    for non-autonomous systems; ``t`` is physical time, which differs from the
    integration variable ``tau`` when a time factor is present.  Stops early
    when ``|guard| < guard_eps`` (crossing located by bisection on the step).
    """
    opts = opts or IntegrationOptions()
    fns = sys._fns()
    n = fns.n
    nonauto = not sys.autonomous
    x0 = _as_state(sys.chart, x0)
    tau0, tau1 = map(float, t_span)
    if tau1 <= tau0:
        raise ValueError("t_span must be increasing")
    t_start = tau0
    if fns.guard is not None and abs(fns.guard(x0, t_start)) < opts.guard_eps:
        raise ValueError("initial state is on the guarded singular set")
    e0 = -fns.h(x0, t_start) if nonauto else 0.0

    def rhs(y, tau):
        x = y[:n]
        t = y[n]
        dx, dt, de = fns.field(x, t)
        out = np.empty_like(y)
        out[:n] = dx
        out[n] = dt
        if nonauto:
            out[n + 1] = de
        if not np.all(np.isfinite(out)):
            raise _StepError("non-finite vector field")
        return out

    def safe_rhs(y, tau):
        try:
            return rhs(y, tau)
        except (DegeneratePoint, DomainError, ZeroDivisionError, OverflowError, SymbolicError,
                FloatingPointError, np.linalg.LinAlgError) as exc:
            raise _StepError(str(exc)) from exc

    y = np.concatenate([x0, [t_start], [e0] if nonauto else []])
    names = sorted(fns.integrals)
    rec_tau, rec_y = [tau0], [y.copy()]

    try:
        k = safe_rhs(y, tau0)
    except _StepError as exc:
        raise DegeneratePoint(f"cannot evaluate the vector field at the initial state: {exc}") from None
    rec_k = [k.copy()]

    scale0 = opts.abs_tol + opts.rel_tol * np.abs(y)
    if opts.first_step:
        h = opts.first_step
    else:
        d0 = np.sqrt(np.mean((y / scale0) ** 2))
        d1 = np.sqrt(np.mean((k / scale0) ** 2))
        h = 0.01 * d0 / d1 if d0 > 1e-5 and d1 > 1e-5 else 1e-6
        h = min(h, abs(tau1 - tau0))
    h = min(h, opts.max_step)
    tau = tau0
    reason, message = T_END, ""
    steps = rejected = 0
    err_total = 0.0
    with np.errstate(over="raise", invalid="raise", divide="raise"):
        while tau < tau1:
            if steps >= opts.max_steps:
                reason, message = STEP_FAILURE, f"max_steps={opts.max_steps} reached"
                break
            h = min(h, tau1 - tau, opts.max_step)
            if h < 1e-14 * max(1.0, abs(tau)):
                reason, message = STEP_FAILURE, f"step size underflow at tau={tau!r}"
                break
            try:
                y_new, err, k_new = _dp_step(safe_rhs, y, tau, h, k)
                sc = opts.abs_tol + opts.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
                en = float(np.sqrt(np.mean((err / sc) ** 2)))
                if not math.isfinite(en):
                    raise _StepError("non-finite error estimate")
            except (_StepError, FloatingPointError) as exc:
                rejected += 1
                h *= 0.25
                message = str(exc)
                continue
            if en > 1.0:
                rejected += 1
                h *= max(0.2, 0.9 * en ** -0.2)
                continue
            g_new = fns.guard(y_new[:n], y_new[n]) if fns.guard is not None else None
            if g_new is not None and abs(g_new) < opts.guard_eps:
                y, tau = _refine_guard(safe_rhs, fns, n, y, tau, h, k, opts.guard_eps)
                rec_tau.append(tau)
                rec_y.append(y.copy())
                try:
                    rec_k.append(safe_rhs(y, tau))
                except _StepError:
                    rec_k.append(np.full_like(y, np.nan))
                steps += 1
                reason, message = GUARD, f"|guard| reached {opts.guard_eps:g}"
                break
            steps += 1
            err_total += float(np.max(np.abs(err)))
            tau += h
            y, k = y_new, k_new
            rec_tau.append(tau)
            rec_y.append(y.copy())
            rec_k.append(k.copy())
            h *= min(5.0, 0.9 * en ** -0.2) if en > 0 else 5.0
    states = np.array(rec_y)
    integ = {}
    for name in names:
        f = fns.integrals[name]
        integ[name] = np.array([f(s[:n], s[n]) for s in states])
    integ.setdefault("H", np.array([fns.h(s[:n], s[n]) for s in states]))
    if nonauto:
        integ["extended_energy"] = np.array([fns.h(s[:n], s[n]) + s[n + 1] for s in states])
    return Trajectory(tuple(sys.chart.variables), np.array(rec_tau), states[:, :n], states[:, n], integ,
                      reason, message, err_total, steps, rejected, np.array(rec_k)[:, :n])


def _refine_guard(rhs, fns, n, y, tau, h, k, eps):
    """Bisect the step length so that ``|guard|`` lands just below ``eps``."""
    lo, hi = 0.0, h
    y_hi = None
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        try:
            y_mid, _, _ = _dp_step(rhs, y, tau, mid, k)
            g = abs(fns.guard(y_mid[:n], y_mid[n]))
        except (_StepError, FloatingPointError):
            hi = mid
            continue
        if g < eps:
            hi, y_hi = mid, y_mid
        else:
            lo = mid
        if hi - lo <= 1e-13 * max(1.0, abs(tau)):
            break
    if y_hi is None:
        y_hi, _, _ = _dp_step(rhs, y, tau, hi, k)
    return y_hi, tau + hi


def dense_states(traj: Trajectory, sub: int = 10) -> tuple[np.ndarray, np.ndarray]:
    """Cubic Hermite interpolation between recorded samples, ``sub`` points per step."""
    if traj.rates is None or len(traj.times) < 2:
        return traj.times.copy(), traj.states.copy()
    taus, out = [traj.times[:1]], [traj.states[:1]]
    theta = np.linspace(0.0, 1.0, sub + 1)[1:, None]
    h00 = 2 * theta ** 3 - 3 * theta ** 2 + 1
    h10 = theta ** 3 - 2 * theta ** 2 + theta
    h01 = -2 * theta ** 3 + 3 * theta ** 2
    h11 = theta ** 3 - theta ** 2
    for i in range(len(traj.times) - 1):
        dt = traj.times[i + 1] - traj.times[i]
        y0, y1 = traj.states[i], traj.states[i + 1]
        k0, k1 = traj.rates[i], traj.rates[i + 1]
        if not (np.all(np.isfinite(k0)) and np.all(np.isfinite(k1))):
            seg = y0 + theta * (y1 - y0)
        else:
            seg = h00 * y0 + h10 * dt * k0 + h01 * y1 + h11 * dt * k1
        taus.append(traj.times[i] + theta[:, 0] * dt)
        out.append(seg)
    return np.concatenate(taus), np.vstack(out)


def arclength(points: np.ndarray) -> np.ndarray:
    """Cumulative chord length along a polyline (first entry 0)."""
    seg = np.linalg.norm(np.diff(points, axis=0), axis=1)
    return np.concatenate([[0.0], np.cumsum(seg)])


def arclength_align(a: np.ndarray, b: np.ndarray, count: int = 2000) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Resample two curves with a common start at equal arclengths.

    Both polylines are reparametrized by chord length and interpolated with
    cubic splines on ``count`` points of ``[0, min(length_a, length_b)]``.
    Returns ``(s, a_resampled, b_resampled)``.
    """
    from scipy.interpolate import CubicSpline

    sa, sb = arclength(a), arclength(b)
    ka, kb = np.concatenate([[True], np.diff(sa) > 0]), np.concatenate([[True], np.diff(sb) > 0])
    s = np.linspace(0.0, min(sa[-1], sb[-1]), count)
    return s, CubicSpline(sa[ka], a[ka])(s), CubicSpline(sb[kb], b[kb])(s)


def monitor_integrals(traj: Trajectory, names: Sequence[str] | None = None) -> dict[str, float]:
    """Maximum relative drift ``|I - I0| / |I0|`` (absolute when ``|I0| < 1e-12``)."""
    out = {}
    for name in names if names is not None else sorted(traj.integrals):
        vals = traj.integrals[name]
        i0 = vals[0]
        d = np.max(np.abs(vals - i0))
        out[name] = float(d / abs(i0) if abs(i0) >= 1e-12 else d)
    return out


def leapfrog(sys: HamiltonianSystem, x0, dt: float, steps: int) -> np.ndarray:
    """Kick-drift-kick for separable ``H = T(p) + V(q)`` on a canonical chart.

    The chart is split into positions (first half) and momenta (second half).
    Returns the array of states, one row per step including the start.
    """
    fns = sys._fns()
    n = fns.n // 2
    x = _as_state(sys.chart, x0).copy()
    out = [x.copy()]
    for _ in range(steps):
        g, _ = fns.grad(x, 0.0)
        x[n:] -= 0.5 * dt * g[:n]
        g, _ = fns.grad(x, 0.0)
        x[:n] += dt * g[n:]
        g, _ = fns.grad(x, 0.0)
        x[n:] -= 0.5 * dt * g[:n]
        out.append(x.copy())
    return np.array(out)
