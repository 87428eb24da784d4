"""TOML model-definition files.

A file declares one model: metric and frame (or vertical field) as
expression strings in the ``expr`` grammar, plus parameters, domain, grid,
optional base data and optional constant curvature. No code is executed.

Example::

    name = "nil"
    kind = "framed"
    coordinates = ["x", "y", "z"]

    [metric]
    xx = "1.0"
    yy = "1.0 + x^2"
    yz = "-x"
    ...

    [frame]
    e1 = ["1.0", "0.0", "0.0"]
    ...
"""

from __future__ import annotations

import math
import re
from pathlib import Path

import tomli
import tomli_w

from .expr import COORDS, ExprError, parse, to_string
from .geometry import METRIC_KEYS, Domain, FrameSpec, Grid, MetricSpec
from .models import ModelCatalogEntry
from .submersion import BaseSpec, FramedModel, VerticalFieldModel

KINDS = ("framed", "vertical-field")


class ModelFileError(ValueError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None, source: str = "<model>"):
        self.message = message
        self.line = line
        self.column = column
        self.source = source
        where = source if line is None else f"{source}:{line}:{column}"
        super().__init__(f"{where}: {message}")


def _locate(text: str, section: str | None, key: str) -> tuple[int | None, int | None]:
    """Best-effort (line, column) of ``key = ...`` inside ``[section]``."""
    current = None
    pat = re.compile(r'^\s*"?' + re.escape(key) + r'"?\s*=\s*')
    for n, line in enumerate(text.splitlines(), 1):
        head = re.match(r"^\s*\[([^\]]+)\]\s*$", line)
        if head:
            current = head.group(1).strip()
            continue
        if current == section:
            m = pat.match(line)
            if m:
                return n, m.end() + 1
    return None, None


class _Reader:
    def __init__(self, text: str, source: str):
        self.text = text
        self.source = source

    def fail(self, message, section=None, key=None, offset=None):
        line, col = _locate(self.text, section, key) if key else (None, None)
        if line is not None and offset is not None:
            col += offset + 1  # skip the opening quote
        raise ModelFileError(message, line, col, self.source)

    def expr(self, s, params, section, key):
        if not isinstance(s, str):
            self.fail(f"{key}: expression must be a string", section, key)
        try:
            return parse(s, params)
        except ExprError as exc:
            self.fail(f"{section}.{key}: {exc.detail}", section, key, exc.offset)

    def read(self) -> ModelCatalogEntry:
        try:
            doc = tomli.loads(self.text)
        except tomli.TOMLDecodeError as exc:
            m = re.search(r"line (\d+), column (\d+)", str(exc))
            line, col = (int(m.group(1)), int(m.group(2))) if m else (None, None)
            raise ModelFileError(str(exc).split(" (at")[0], line, col, self.source) from None

        name = doc.get("name")
        if not isinstance(name, str) or not name:
            self.fail("missing 'name'")
        kind = doc.get("kind", "framed")
        if kind not in KINDS:
            self.fail(f"kind must be one of {KINDS}", None, "kind")
        coords = doc.get("coordinates", list(COORDS))
        if list(coords) != list(COORDS):
            self.fail("coordinates must be [\"x\", \"y\", \"z\"]", None, "coordinates")
        params = doc.get("parameters", {})
        for k, v in params.items():
            if not isinstance(v, (int, float)) or isinstance(v, bool):
                self.fail(f"parameter {k} must be a number", "parameters", k)
        params = {k: float(v) for k, v in params.items()}
        curvature = doc.get("curvature")
        if curvature is not None and not isinstance(curvature, (int, float)):
            self.fail("curvature must be a number", None, "curvature")

        domain = self._domain(doc.get("domain", {}))
        grid = self._grid(doc.get("grid"))

        metric_doc = doc.get("metric")
        if not isinstance(metric_doc, dict):
            self.fail("missing [metric] table")
        entries = {}
        for k in METRIC_KEYS:
            entries[k] = self.expr(metric_doc.get(k, "0"), params, "metric", k)
        extra = set(metric_doc) - set(METRIC_KEYS)
        if extra:
            self.fail(f"unknown metric entries {sorted(extra)}", "metric", sorted(extra)[0])
        metric = MetricSpec(entries, domain)

        common = dict(name=name, metric=metric, params=params, grid=grid,
                      curvature=None if curvature is None else float(curvature))
        if kind == "framed":
            fr = doc.get("frame")
            if not isinstance(fr, dict) or set(fr) != {"e1", "e2", "e3"}:
                self.fail("[frame] must define e1, e2, e3")
            vectors = tuple(self._vector(fr[k], 3, params, "frame", k) for k in ("e1", "e2", "e3"))
            base = self._base(doc.get("base"), params)
            model = FramedModel(frame=FrameSpec(vectors), base=base, **common)
        else:
            vt = doc.get("vertical")
            if not isinstance(vt, dict) or "e3" not in vt:
                self.fail("[vertical] must define e3")
            model = VerticalFieldModel(vertical=self._vector(vt["e3"], 3, params, "vertical", "e3"), **common)
        return ModelCatalogEntry(name, kind, model, doc.get("provenance", ""))

    def _vector(self, comps, n, params, section, key):
        if not isinstance(comps, list) or len(comps) != n:
            self.fail(f"{section}.{key} must be a list of {n} expression strings", section, key)
        return tuple(self.expr(c, params, section, key) for c in comps)

    def _domain(self, d) -> Domain:
        bounds = []
        for c in COORDS:
            lo, hi = d.get(c, [-math.inf, math.inf])
            bounds.append((None if lo == -math.inf else float(lo), None if hi == math.inf else float(hi)))
        return Domain(tuple(bounds))

    def _grid(self, g):
        if g is None:
            return None
        ranges = []
        for c in COORDS:
            r = g.get(c)
            if not isinstance(r, list) or len(r) != 3 or int(r[2]) < 1:
                self.fail(f"grid.{c} must be [lo, hi, count]", "grid", c)
            ranges.append((float(r[0]), float(r[1]), int(r[2])))
        return Grid(tuple(ranges))

    def _base(self, b, params):
        if b is None:
            return None
        coords = b.get("coordinates")
        metric = b.get("metric", {})
        frame = b.get("frame", {})
        try:
            h = {k: self.expr(metric.get(k, "0"), params, "base.metric", k) for k in ("11", "12", "22")}
            eps = [self._vector(frame.get(k), 2, params, "base.frame", k) for k in ("e1", "e2")]
            return BaseSpec.from_strings(coords, h, eps, params)
        except ModelFileError:
            raise
        except (ValueError, TypeError) as exc:
            self.fail(f"base: {exc}", "base", "coordinates")


def loads(text: str, source: str = "<model>") -> ModelCatalogEntry:
    return _Reader(text, source).read()


def load(path: str | Path) -> ModelCatalogEntry:
    p = Path(path)
    return loads(p.read_text(encoding="utf-8"), str(p))


def _bounds(lo, hi):
    return [-math.inf if lo is None else float(lo), math.inf if hi is None else float(hi)]


def to_document(entry: ModelCatalogEntry) -> dict:
    m = entry.model
    if isinstance(m, FramedModel) and not isinstance(m.frame, FrameSpec):
        raise TypeError(f"model {m.name!r} has a computed frame and cannot be written to a file")
    doc = {"name": m.name, "kind": entry.kind, "coordinates": list(COORDS)}
    if entry.provenance:
        doc["provenance"] = entry.provenance
    if m.curvature is not None:
        doc["curvature"] = float(m.curvature)
    if m.params:
        doc["parameters"] = {k: float(v) for k, v in m.params.items()}
    dom = {}
    for c, (lo, hi) in zip(COORDS, m.domain.bounds):
        if lo is not None or hi is not None:
            dom[c] = _bounds(lo, hi)
    if dom:
        doc["domain"] = dom
    if m.grid is not None:
        doc["grid"] = {c: [float(lo), float(hi), n] for c, (lo, hi, n) in zip(COORDS, m.grid.ranges)}
    doc["metric"] = m.metric.strings()
    if isinstance(m, FramedModel):
        doc["frame"] = {f"e{i + 1}": v for i, v in enumerate(m.frame.strings())}
        if m.base is not None:
            doc["base"] = m.base.strings()
    else:
        doc["vertical"] = {"e3": [to_string(c) for c in m.vertical]}
    return doc


_ARRAY = re.compile(r"\[\n((?:[ ]+[^\[\]\n]+,\n)+)\]")


def _inline(match) -> str:
    items = [line.strip().rstrip(",") for line in match.group(1).splitlines()]
    return "[" + ", ".join(items) + "]"


def dumps(entry: ModelCatalogEntry) -> str:
    # tomli_w writes one array item per line; flat arrays read better inline
    return _ARRAY.sub(_inline, tomli_w.dumps(to_document(entry)))
