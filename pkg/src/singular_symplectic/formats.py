"""Line-oriented text format for charts, forms and coordinate maps.

A form file::

    # comments and blank lines are ignored
    chart mcgehee: x alpha y G
    angular: alpha
    form:
    dx ^ dy = -4/x^3
    dalpha ^ dG = 1

A map file::

    map levi-civita
    source u: u1 u2 W1 W2
    target w: w1 w2 W1 W2
    components:
    w1 = 1/2*u1^2 - 1/2*u2^2
    w2 = u1*u2
    inverse:
    ...
    domain: u1 > 0

``radial:`` / ``angular:`` lines flag variables of the chart declared just
before them.  Target variables without a component line map identically.
"""

from __future__ import annotations

import re
from pathlib import Path

from .forms import Chart, CoordinateMap, DiffForm
from .grammar import ParseError

__all__ = ["parse_form", "format_form", "parse_map", "format_map", "load_form", "load_map", "format_chart"]

_CHART = re.compile(r"^(chart|source|target)\s+([^:\s]+)\s*:\s*(.*)$")
_NAME = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


def _lines(text: str):
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if line.strip():
            indent = len(line) - len(line.lstrip())
            yield no, indent + 1, line.strip()


class _ChartBuilder:
    def __init__(self, kind: str, name: str, variables: list[str], line: int):
        self.kind = kind
        self.name = name
        self.variables = variables
        self.radial: set[str] = set()
        self.angular: set[str] = set()
        self.line = line

    def build(self) -> Chart:
        try:
            return Chart(self.name, tuple(self.variables), frozenset(self.radial), frozenset(self.angular))
        except ValueError as exc:
            raise ParseError(str(exc), self.line, 1) from None


def _chart_line(no: int, col: int, line: str) -> _ChartBuilder | None:
    m = _CHART.match(line)
    if not m:
        return None
    names = m.group(3).split()
    for v in names:
        if not _NAME.match(v):
            raise ParseError(f"bad variable name {v!r}", no, col + line.index(v))
    if not names:
        raise ParseError("chart declares no variables", no, col)
    return _ChartBuilder(m.group(1), m.group(2), names, no)


def _flag_line(no: int, col: int, line: str, current: _ChartBuilder | None) -> bool:
    key, sep, rest = line.partition(":")
    key = key.strip()
    if not sep or key not in ("radial", "angular"):
        return False
    if current is None:
        raise ParseError(f"{key!r} before any chart declaration", no, col)
    for v in rest.split():
        if v not in current.variables:
            raise ParseError(f"{v!r} is not a variable of chart {current.name!r}", no, col + line.index(v))
        (current.radial if key == "radial" else current.angular).add(v)
    return True


def _assignment(no: int, col: int, line: str) -> tuple[str, str, int]:
    lhs, sep, rhs = line.partition("=")
    if not sep:
        raise ParseError("expected '<lhs> = <expression>'", no, col)
    return lhs.strip(), rhs, col + len(lhs) + 1 + (len(rhs) - len(rhs.lstrip()))


def parse_form(text: str) -> DiffForm:
    chart_b: _ChartBuilder | None = None
    chart: Chart | None = None
    in_body = False
    degree: int | None = None
    terms: dict[tuple[int, ...], object] = {}
    for no, col, line in _lines(text):
        if not in_body:
            b = _chart_line(no, col, line)
            if b is not None:
                if b.kind != "chart":
                    raise ParseError(f"unexpected {b.kind!r} in a form file", no, col)
                chart_b = b
                continue
            if _flag_line(no, col, line, chart_b):
                continue
            if line.rstrip(":").strip() == "form" and line.endswith(":"):
                if chart_b is None:
                    raise ParseError("form body before chart declaration", no, col)
                chart = chart_b.build()
                in_body = True
                continue
            raise ParseError(f"unexpected line {line!r}", no, col)
        assert chart is not None
        lhs, rhs, rcol = _assignment(no, col, line)
        if lhs in ("1", "scalar"):
            idx: tuple[int, ...] = ()
        else:
            idx_list = []
            for part in lhs.split("^"):
                part = part.strip()
                if not part.startswith("d") or part[1:] not in chart.variables:
                    raise ParseError(f"bad basis differential {part!r}", no, col + line.index(part) if part else col)
                idx_list.append(chart.index(part[1:]))
            idx = tuple(idx_list)
        if degree is None:
            degree = len(idx)
        elif degree != len(idx):
            raise ParseError("mixed degrees in one form", no, col)
        coeff = chart.parse(rhs.strip(), line=no, column=rcol)
        if len(set(idx)) != len(idx):
            raise ParseError("repeated differential", no, col)
        if idx in terms:
            raise ParseError("duplicate basis element", no, col)
        terms[idx] = coeff
    if chart is None:
        if chart_b is None:
            raise ParseError("no chart declared", 1, 1)
        chart = chart_b.build()
    return DiffForm(chart, degree if degree is not None else 2, terms)


def format_chart(chart: Chart, kind: str = "chart") -> str:
    out = [f"{kind} {chart.name}: {' '.join(chart.variables)}"]
    for flag in ("radial", "angular"):
        vals = [v for v in chart.variables if v in getattr(chart, flag)]
        if vals:
            out.append(f"{flag}: {' '.join(vals)}")
    return "\n".join(out)


def format_form(form: DiffForm) -> str:
    lines = [format_chart(form.chart), "form:"]
    for names, c in form.terms():
        lhs = " ^ ".join(f"d{v}" for v in names) if names else "1"
        lines.append(f"{lhs} = {c}")
    return "\n".join(lines) + "\n"


def parse_map(text: str) -> CoordinateMap:
    name = None
    builders: dict[str, _ChartBuilder] = {}
    current: _ChartBuilder | None = None
    section = None
    comps: dict[str, tuple[str, int, int]] = {}
    inv: dict[str, tuple[str, int, int]] = {}
    domain = ""
    for no, col, line in _lines(text):
        if line.startswith("map ") and name is None:
            name = line[4:].strip()
            continue
        b = _chart_line(no, col, line)
        if b is not None:
            if b.kind == "chart":
                raise ParseError("map files declare 'source' and 'target' charts", no, col)
            builders[b.kind] = current = b
            continue
        if _flag_line(no, col, line, current):
            continue
        if line.startswith("domain:"):
            domain = line[len("domain:"):].strip()
            continue
        if line in ("components:", "inverse:"):
            section = line[:-1]
            continue
        if section is None:
            raise ParseError(f"unexpected line {line!r}", no, col)
        lhs, rhs, rcol = _assignment(no, col, line)
        (comps if section == "components" else inv)[lhs] = (rhs.strip(), no, rcol)
    for kind in ("source", "target"):
        if kind not in builders:
            raise ParseError(f"missing {kind} chart", 1, 1)
    src, tgt = builders["source"].build(), builders["target"].build()

    def build(spec, chart_in: Chart, chart_out: Chart):
        for v, (_, no, c) in spec.items():
            if v not in chart_out.variables:
                raise ParseError(f"{v!r} is not a variable of chart {chart_out.name!r}", no, 1)
        out = []
        for v in chart_out.variables:
            if v in spec:
                s, no, c = spec[v]
                out.append(chart_in.parse(s, line=no, column=c))
            else:
                if v not in chart_in.variables:
                    raise ParseError(f"no expression for {v!r}", 1, 1)
                out.append(chart_in.var(v))
        return tuple(out)

    components = build(comps, src, tgt)
    inverse = build(inv, tgt, src) if inv else None
    try:
        return CoordinateMap(name or "map", src, tgt, components, inverse, domain)
    except ValueError as exc:
        raise ParseError(str(exc), 1, 1) from None


def format_map(phi: CoordinateMap) -> str:
    lines = [f"map {phi.name}", format_chart(phi.source, "source"), format_chart(phi.target, "target"),
             "components:"]
    lines += [f"{v} = {c}" for v, c in zip(phi.target.variables, phi.components)]
    if phi.inverse is not None:
        lines.append("inverse:")
        lines += [f"{v} = {c}" for v, c in zip(phi.source.variables, phi.inverse)]
    if phi.domain:
        lines.append(f"domain: {phi.domain}")
    return "\n".join(lines) + "\n"


def load_form(path: str | Path) -> DiffForm:
    return parse_form(Path(path).read_text())


def load_map(path: str | Path) -> CoordinateMap:
    return parse_map(Path(path).read_text())
