"""Scenario files: JSON documents validated against scenario.schema.json."""
from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources

import jsonschema

from .exact import Q, Qvec
from .lp import Tolerances
from .measure import Box, ConvexPartition, ConvexRegion, DiscreteMeasure, GridMeasure
from .persuasion import Objective
from .power import PowerDiagram

FORMAT_VERSION = 1


class ScenarioError(ValueError):
    pass


def schema():
    return json.loads(resources.files("fusions").joinpath("scenario.schema.json").read_text())


def _line_of(text, path):
    """Best-effort line number of the deepest named key of a JSON path."""
    keys = [p for p in path if isinstance(p, str)]
    if not keys:
        return None
    m = re.search(r'"%s"\s*:' % re.escape(keys[-1]), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


@dataclass
class Scenario:
    raw: dict
    box: Box
    res: tuple
    text_hash: str
    options: dict = field(default_factory=dict)

    # ------------------------------------------------------------ builders

    def prior(self) -> GridMeasure:
        p = self.raw["prior"]
        if p["kind"] == "uniform":
            return GridMeasure.uniform(self.box, self.res)
        if p["kind"] == "table":
            if len(p["masses"]) != _count(self.res):
                raise ScenarioError(f"prior.masses has {len(p['masses'])} entries, grid needs {_count(self.res)}")
            return GridMeasure(self.box, self.res, [Q(v) for v in p["masses"]])
        # atoms must sit on cell centers of the grid
        g = GridMeasure.uniform(self.box, self.res)
        pos = {pt: k for k, pt in enumerate(g.points)}
        masses = [Fraction(0)] * len(g)
        for a in p["atoms"]:
            pt = Qvec(a["point"])
            if pt not in pos:
                raise ScenarioError(f"prior atom {a['point']} is not a cell center of the {self.res} grid")
            masses[pos[pt]] += Q(a["mass"])
        return GridMeasure(self.box, self.res, masses)

    def fusion(self) -> DiscreteMeasure:
        if "fusion" not in self.raw:
            raise ScenarioError("this command needs a 'fusion'")
        at = self.raw["fusion"]["atoms"]
        return DiscreteMeasure([a["point"] for a in at], [a["mass"] for a in at], box=self.box)

    def diagram(self):
        d = self.raw.get("diagram")
        if d is None:
            return None
        if len(d["sites"]) != len(d["weights"]):
            raise ScenarioError("diagram needs one weight per site")
        return PowerDiagram(d["sites"], d["weights"], self.box)

    def partition(self):
        p = self.raw.get("partition")
        if p is None:
            return None
        cells = [ConvexRegion([(Qvec(h["a"]), Q(h["b"])) for h in c["halfspaces"]]) for c in p["cells"]]
        return ConvexPartition(cells)

    def objective(self, key="objective") -> Objective:
        o = self.raw.get(key)
        if o is None:
            raise ScenarioError(f"this command needs an '{key}'")
        return build_objective(o, self, key)

    @property
    def mode(self):
        return self.options.get("mode", "auto")

    @property
    def seed(self):
        return int(self.options.get("seed", 0))

    def tolerances(self):
        t = self.options.get("tolerances", {})
        base = Tolerances()
        return Tolerances(feas=t.get("feasibility", base.feas), duality=t.get("duality", base.duality),
                          uniqueness=t.get("uniqueness", base.uniqueness), cert=t.get("certificate", base.cert))


def _count(res):
    out = 1
    for r in res:
        out *= r
    return out


def build_objective(o, sc: Scenario, key="objective") -> Objective:
    if o["kind"] in ("max_affine", "min_affine"):
        pieces = [(p["gradient"], p["intercept"]) for p in o["pieces"]]
        if any(len(g) != sc.box.dim for g, _ in pieces):
            raise ScenarioError(f"{key}: gradient dimension differs from the box")
        f = Objective.max_affine if o["kind"] == "max_affine" else Objective.min_affine
        return f(pieces, name=key)
    if o["kind"] == "quadratic":
        return Objective.quadratic(o["center"], o["coef"], o["lipschitz"], name=key)
    g = GridMeasure.uniform(sc.box, sc.res)
    if len(o["values"]) != len(g):
        raise ScenarioError(f"{key}.values has {len(o['values'])} entries, grid needs {len(g)}")
    return Objective.table(g, o["values"], name=key)


def parse(text: str, grid=None, mode=None, seed=None, tolerances=None) -> Scenario:
    """Validate and load a scenario; command-line overrides win over the file."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioError(f"line {e.lineno}, column {e.colno}: {e.msg}") from None
    v = jsonschema.Draft202012Validator(schema())
    errs = sorted(v.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errs:
        msgs = []
        for e in errs[:5]:
            path = "/".join(str(p) for p in e.absolute_path) or "<root>"
            line = _line_of(text, list(e.absolute_path))
            where = f"line {line}, " if line else ""
            msgs.append(f"{where}field {path}: {e.message}")
        raise ScenarioError("; ".join(msgs))
    box = Box(raw["box"]["lower"], raw["box"]["upper"])
    res = tuple(grid) if grid else tuple(raw["grid"])
    if len(res) != box.dim:
        raise ScenarioError(f"grid has {len(res)} axes, box has {box.dim}")
    opts = dict(raw.get("options", {}))
    if mode:
        opts["mode"] = mode
    if seed is not None:
        opts["seed"] = seed
    given = {k: v for k, v in (tolerances or {}).items() if v is not None}
    if given:
        t = dict(opts.get("tolerances", {}))
        t.update(given)
        if any(v <= 0 for v in t.values()):
            raise ScenarioError("tolerances must be positive")
        opts["tolerances"] = t
    canon = json.dumps({"scenario": raw, "grid": list(res), "options": opts}, sort_keys=True)
    return Scenario(raw, box, res, hashlib.sha256(canon.encode()).hexdigest()[:16], opts)


def load(path, **overrides) -> Scenario:
    with open(path) as f:
        return parse(f.read(), **overrides)
