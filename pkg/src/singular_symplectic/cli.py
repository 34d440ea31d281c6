"""Command-line front end: ``classify``, ``pullback``, ``simulate``, ``check``, ``list``.

Exit codes: 0 success, 1 usage or parse error, 2 inconclusive analysis,
3 failed check (golden mismatch or integral drift above threshold).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from . import systems
from .dynamics import IntegrationOptions, integrate, monitor_integrals
from .formats import format_form, load_form, parse_form
from .forms import ChartMismatch, DiffForm, ext_deriv, pullback
from .grammar import ParseError
from .singularity import NonPrincipalVanishing, UnresolvableCoefficient, classify
from .symbolic import SymbolicError

EXIT_OK, EXIT_USAGE, EXIT_INCONCLUSIVE, EXIT_CHECK = 0, 1, 2, 3

CONFIG_KEYS = {
    "entry": str, "form": str, "map": str, "out": str, "format": str, "rel_tol": float, "abs_tol": float,
    "guard_eps": float, "max_steps": int, "seed": int, "m": int, "e": float, "mu": str, "masses": str,
    "t_end": float, "golden": str,
}


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    entry: str | None = None
    form: str | None = None
    map: str | None = None
    out: str | None = None
    format: str = "text"
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    guard_eps: float = 1e-6
    max_steps: int = 200_000
    seed: int = 0
    m: int | None = None
    e: float | None = None
    mu: str | None = None
    masses: str | None = None
    t_end: float | None = None
    golden: str | None = None
    circular: bool = False
    collision: bool = False
    extra: dict = field(default_factory=dict)

    def params(self) -> systems.BodyParams:
        kw = {}
        if self.masses:
            parts = [p.strip() for p in self.masses.split(",") if p.strip()]
            if len(parts) != 3:
                raise UsageError("--masses needs three comma-separated values")
            kw["masses"] = tuple(Fraction(p) for p in parts)
        if self.mu is not None:
            kw["mu"] = Fraction(self.mu)
        if self.e is not None:
            kw["e"] = float(self.e)
        if self.m is not None:
            kw["m"] = int(self.m)
        try:
            return systems.BodyParams(**kw)
        except (ValueError, ZeroDivisionError) as exc:
            raise UsageError(str(exc)) from None

    def options(self) -> IntegrationOptions:
        return IntegrationOptions(rel_tol=self.rel_tol, abs_tol=self.abs_tol, guard_eps=self.guard_eps,
                                  max_steps=self.max_steps)


def read_config(path: str) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    p = Path(path)
    if not p.exists():
        raise UsageError(f"config file {path!r} does not exist")
    for no, raw in enumerate(p.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or key not in CONFIG_KEYS:
            raise UsageError(f"{path}:{no}: unknown or malformed config line {raw!r}")
        try:
            out[key] = CONFIG_KEYS[key](value.strip())
        except ValueError:
            raise UsageError(f"{path}:{no}: bad value for {key}") from None
    return out


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--entry")
    common.add_argument("--form", help="form file, 'canonical', or a catalog entry name")
    common.add_argument("--map")
    common.add_argument("--out")
    common.add_argument("--format", choices=("json", "csv", "text"))
    common.add_argument("--rel-tol", dest="rel_tol", type=float)
    common.add_argument("--abs-tol", dest="abs_tol", type=float)
    common.add_argument("--guard-eps", dest="guard_eps", type=float)
    common.add_argument("--max-steps", dest="max_steps", type=int)
    common.add_argument("--t-end", dest="t_end", type=float)
    common.add_argument("--seed", type=int)
    common.add_argument("--m", type=int)
    common.add_argument("--e", type=float)
    common.add_argument("--mu")
    common.add_argument("--masses")
    common.add_argument("--config")

    ap = argparse.ArgumentParser(prog="singsym", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("classify", parents=[common], help="classify the singular locus of a form")
    p.add_argument("target", nargs="?")
    p = sub.add_parser("pullback", parents=[common], help="pull a form back along a catalog map")
    p.add_argument("map_name", nargs="?")
    p.add_argument("form_name", nargs="?")
    p = sub.add_parser("simulate", parents=[common], help="integrate a catalog system")
    p.add_argument("target", nargs="?")
    p.add_argument("--circular", action="store_true")
    p.add_argument("--collision", action="store_true")
    p = sub.add_parser("check", parents=[common], help="run golden checks over the catalog")
    p.add_argument("--golden")
    sub.add_parser("list", parents=[common], help="list catalog entries and maps")
    return ap


def build_config(argv: Sequence[str]) -> RunConfig:
    ns = _parser().parse_args(argv)
    values = {}
    if ns.config:
        values.update(read_config(ns.config))
    for key in CONFIG_KEYS:
        v = getattr(ns, key, None)
        if v is not None:
            values[key] = v
    target = getattr(ns, "target", None)
    if target:
        values["entry"] = target
    if getattr(ns, "map_name", None):
        values["map"] = ns.map_name
    if getattr(ns, "form_name", None):
        values["form"] = ns.form_name
    cfg = RunConfig(ns.command, **values)
    cfg.circular = getattr(ns, "circular", False)
    cfg.collision = getattr(ns, "collision", False)
    if cfg.format not in ("json", "csv", "text"):
        raise UsageError(f"unknown format {cfg.format!r}")
    if cfg.form and Path(cfg.form).suffix and not Path(cfg.form).exists() and cfg.form not in systems.ENTRY_NAMES:
        raise UsageError(f"form file {cfg.form!r} does not exist")
    return cfg


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _emit(text: str, cfg: RunConfig) -> None:
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)


def _entry(name: str, cfg: RunConfig) -> systems.CatalogEntry:
    try:
        return systems.get_entry(name, cfg.params())
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None


def _load_form(spec: str, cfg: RunConfig, chart=None) -> DiffForm:
    if spec == "canonical":
        if chart is None:
            raise UsageError("'canonical' needs a chart (use it with a map)")
        return chart.canonical_form()
    path = Path(spec)
    if path.exists():
        return load_form(path)
    return _entry(spec, cfg).form


def cmd_classify(cfg: RunConfig) -> int:
    if cfg.form:
        form = _load_form(cfg.form, cfg)
        golden = None
    elif cfg.entry:
        entry = _entry(cfg.entry, cfg)
        form, golden = entry.form, entry.golden
    else:
        raise UsageError("classify needs an entry name or --form FILE")
    try:
        report = classify(form, seed=cfg.seed)
    except (UnresolvableCoefficient, NonPrincipalVanishing) as exc:
        sys.stderr.write(f"inconclusive: {exc}\n")
        return EXIT_INCONCLUSIVE
    if cfg.format == "json":
        data = report.to_dict()
        if golden is not None:
            data["golden"] = golden.to_dict()
        _emit(_dumps(data), cfg)
    else:
        _emit(report.to_text(), cfg)
    return EXIT_OK


def cmd_pullback(cfg: RunConfig) -> int:
    if not cfg.map or not cfg.form:
        raise UsageError("pullback needs a map name and a form ('canonical', entry name or file)")
    try:
        phi = systems.get_map(cfg.map, cfg.params())
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None
    form = _load_form(cfg.form, cfg, phi.target)
    if cfg.map == "identity" and form.chart != phi.target:
        phi = systems.get_map("identity", cfg.params(), form.chart)
    try:
        out = pullback(phi, form)
    except ChartMismatch as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    text = format_form(out)
    if cfg.format == "json":
        _emit(_dumps({"map": phi.name, "source": phi.source.name, "target": phi.target.name, "form": text,
                      "terms": [{"basis": list(names), "coefficient": str(c)} for names, c in out.terms()],
                      "closed": ext_deriv(out).is_zero()}), cfg)
    else:
        _emit(text, cfg)
    return EXIT_OK


def cmd_simulate(cfg: RunConfig) -> int:
    if not cfg.entry:
        raise UsageError("simulate needs a catalog entry")
    entry = _entry(cfg.entry, cfg)
    if entry.system is None:
        raise UsageError(f"entry {entry.name!r} has no Hamiltonian system")
    sys_ = entry.system
    kind = "circular" if cfg.circular else "collision" if cfg.collision else "default"
    if kind not in entry.initial_states:
        raise UsageError(f"entry {entry.name!r} has no {kind!r} initial state")
    x0 = entry.initial_states[kind]
    thresholds = {name: entry.drift_threshold for name in entry.drift_integrals}
    if kind == "circular":
        from dataclasses import replace
        w1, w2 = sys_.chart.var("w1"), sys_.chart.var("w2")
        radius = systems.SymExpr.sqrt(w1 * w1 + w2 * w2)
        sys_ = replace(sys_, first_integrals={**sys_.first_integrals, "radius": radius})
        thresholds["radius"] = 1e-8
    if kind == "collision":
        thresholds = {}  # energy is not resolved up to the collision; only the stop reason matters
    t_end = cfg.t_end if cfg.t_end is not None else entry.t_end
    traj = integrate(sys_, x0, (0.0, t_end), cfg.options())
    drift = monitor_integrals(traj)
    violations = {k: drift[k] for k, lim in thresholds.items() if k in drift and drift[k] > lim}
    summary = {
        "entry": entry.name,
        "initial_state": kind,
        "termination": traj.reason,
        "message": traj.message,
        "steps": traj.steps,
        "t_end": float(traj.physical_times[-1]),
        "drift": drift,
        "thresholds": thresholds,
        "violations": violations,
    }
    fmt = cfg.format if cfg.format != "text" else "csv"
    if fmt == "json":
        body = _dumps({"summary": summary, "trajectory": traj.to_dict()})
    else:
        body = traj.to_csv()
    if cfg.out:
        Path(cfg.out).write_text(body)
        sys.stdout.write(_dumps(summary))
    else:
        sys.stdout.write(body)
        if fmt != "json":
            sys.stderr.write(_dumps(summary))
    return EXIT_CHECK if violations else EXIT_OK


def _check_entry(entry: systems.CatalogEntry, golden: systems.Golden, cfg: RunConfig) -> tuple[list[str], list[str]]:
    fails, info = [], []
    if not ext_deriv(entry.form).is_zero():
        fails.append("form is not closed")
    for name, phi in entry.maps.items():
        if phi.inverse is not None and not phi.check_inverse():
            fails.append(f"map {name}: declared inverse does not invert")
    try:
        report = classify(entry.form, seed=cfg.seed)
    except (UnresolvableCoefficient, NonPrincipalVanishing) as exc:
        return fails + [f"classification inconclusive: {exc}"], info
    fails += golden.compare(report)
    info.append(f"verdict {report.label}")
    for cp in report.critical_points:
        info.append(f"Morse signature {cp.signature_str()} ({cp.kind})")
    if entry.system is not None and entry.drift_integrals and entry.t_end:
        x0 = entry.initial_states["default"]
        traj = integrate(entry.system, x0, (0.0, entry.t_end), cfg.options())
        drift = monitor_integrals(traj, entry.drift_integrals)
        for k, v in drift.items():
            info.append(f"drift {k} {v:.2e}")
            if v > entry.drift_threshold:
                fails.append(f"drift of {k}: {v:.3e} > {entry.drift_threshold:g}")
    return fails, info


def check_names(cfg: RunConfig) -> list[str]:
    if cfg.entry:
        return [cfg.entry]
    names = [n for n in systems.ENTRY_NAMES if n != "darboux-bm:m"]
    names += [f"darboux-bm:{m}" for m in range(2, 7)] + [f"darboux-folded:{m}" for m in range(1, 7)]
    return names


def cmd_check(cfg: RunConfig) -> int:
    overrides = {}
    if cfg.golden:
        try:
            overrides = json.loads(Path(cfg.golden).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read golden file: {exc}") from None
    rows, failed = [], 0
    for name in check_names(cfg):
        entry = _entry(name, cfg)
        golden = systems.Golden.from_dict(overrides[name]) if name in overrides else entry.golden
        fails, info = _check_entry(entry, golden, cfg)
        failed += bool(fails)
        rows.append({"entry": name, "status": "FAIL" if fails else "pass", "failures": fails, "info": info})
    if cfg.format == "json":
        _emit(_dumps({"results": rows, "failed": failed}), cfg)
    else:
        lines = []
        width = max(len(r["entry"]) for r in rows)
        for r in rows:
            lines.append(f"{r['entry']:<{width}}  {r['status']}  {'; '.join(r['info'])}")
            lines += [f"{'':<{width}}    expected-vs-actual: {f}" for f in r["failures"]]
        lines.append(f"{len(rows) - failed}/{len(rows)} entries pass")
        _emit("\n".join(lines) + "\n", cfg)
    return EXIT_CHECK if failed else EXIT_OK


def cmd_list(cfg: RunConfig) -> int:
    entries = []
    for name in systems.ENTRY_NAMES:
        e = _entry(name, cfg)
        entries.append({"name": name, "summary": e.summary, "chart": list(e.chart.variables),
                        "golden": e.golden.verdict if name != "darboux-bm:m" else "b^m",
                        "simulate": e.system is not None})
    if cfg.format == "json":
        _emit(_dumps({"entries": entries, "maps": list(systems.MAP_NAMES)}), cfg)
    else:
        lines = ["entries:"] + [f"  {e['name']:<22} {e['summary']}" for e in entries]
        lines += ["maps:"] + [f"  {m}" for m in systems.MAP_NAMES]
        _emit("\n".join(lines) + "\n", cfg)
    return EXIT_OK


COMMANDS = {"classify": cmd_classify, "pullback": cmd_pullback, "simulate": cmd_simulate, "check": cmd_check,
            "list": cmd_list}


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        cfg = build_config(argv)
        np.random.seed(cfg.seed)
        return COMMANDS[cfg.command](cfg)
    except SystemExit as exc:  # argparse
        return EXIT_USAGE if exc.code else EXIT_OK
    except ParseError as exc:
        sys.stderr.write(f"parse error: {exc}\n")
        return EXIT_USAGE
    except (UsageError, ChartMismatch) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except SymbolicError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
