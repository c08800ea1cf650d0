"""JSON formats for spaces, functions, sets, sequences and grids.

Space:    {"cells": [{"id": 0, "weight": 0.2, "divisible": true}, ...] | "weights": [...],
           "tail": {"kind": "geometric", "a": 1, "r": 0.5, "start": 1}}
Function: {"space": <space>, "values": [...] | {"<id>": v}, "tail": [{"start", "stop", "b", "rho", "sigma"}]}
Sequence: {"family": "chi_shrinking" | "n_chi_shrinking" | "escaping_box", "n_max": 64, "half_line": false}
          {"family": "explicit", "space": <space>, "terms": [<fn>...], "limit": <fn>}
          {"family": "constant" | "geometric_perturbation", "space", "f", "h", "rate", "n_max"}
Grid:     {"bounds": [[lo, hi], ...], "cells": [n, ...], "values": [...row-major...]}
"""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .errors import ParseError
from .measure import Cell, MeasurableFn, MeasurableSet, MeasureSpace, TailFamily, TailSegment
from . import sequences as seqs


def _reject_constant(name):
    raise ParseError(f"non-finite number {name} in input")


def loads(text: str):
    try:
        return json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from None


def load_path(path) -> object:
    return loads(Path(path).read_text())


def _num(x, what: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ParseError(f"{what} must be a number, got {x!r}")
    if not math.isfinite(x):
        raise ParseError(f"{what} must be finite")
    return float(x)


def _guard(fn, *args):
    try:
        return fn(*args)
    except ParseError:
        raise
    except (ValueError, KeyError, TypeError, IndexError) as exc:
        raise ParseError(str(exc)) from None


def space_from_json(obj: dict) -> MeasureSpace:
    def build():
        if "cells" in obj:
            cells = [Cell(int(c["id"]), _num(c["weight"], "weight"), bool(c.get("divisible", True)))
                     for c in obj["cells"]]
        else:
            cells = [Cell(i, _num(w, "weight")) for i, w in enumerate(obj.get("weights", []))]
        tail = None
        if obj.get("tail"):
            t = obj["tail"]
            tail = TailFamily(t["kind"], a=_num(t.get("a", 0.0), "a"), r=_num(t.get("r", 0.0), "r"),
                              c=_num(t.get("c", 0.0), "c"), s=_num(t.get("s", 0.0), "s"),
                              start=int(t.get("start", 1)))
        return MeasureSpace(cells, tail)

    return _guard(build)


def space_to_json(space: MeasureSpace) -> dict:
    out = {"cells": [{"id": c.id, "weight": c.weight, "divisible": c.divisible} for c in space.cells]}
    if space.has_tail:
        t = space.tail
        out["tail"] = {"kind": t.kind, "a": t.a, "r": t.r, "c": t.c, "s": t.s, "start": t.start}
    return out


def segment_from_json(s: dict) -> TailSegment:
    stop = s.get("stop")
    return TailSegment(int(s["start"]), None if stop is None else int(stop), _num(s["b"], "b"),
                       _num(s.get("rho", 1.0), "rho"), _num(s.get("sigma", 0.0), "sigma"))


def fn_from_json(obj: dict, space: MeasureSpace | None = None) -> MeasurableFn:
    def build():
        sp = space if space is not None else space_from_json(obj["space"])
        vals = obj.get("values", [])
        if isinstance(vals, dict):
            arr = np.zeros(len(sp))
            for k, v in vals.items():
                arr[sp.index[int(k)]] = _num(v, "value")
        else:
            arr = np.array([_num(v, "value") for v in vals]) if vals else np.zeros(len(sp))
        tail = tuple(segment_from_json(s) for s in obj.get("tail", []))
        return MeasurableFn(sp, arr, tail)

    return _guard(build)


def fn_to_json(f: MeasurableFn, with_space: bool = True) -> dict:
    out = {"values": f.values.tolist(),
           "tail": [{"start": s.start, "stop": s.stop, "b": s.b, "rho": s.rho, "sigma": s.sigma} for s in f.tail]}
    if with_space:
        out["space"] = space_to_json(f.space)
    return out


def set_from_json(obj, space: MeasureSpace) -> MeasurableSet:
    """{"cells": [ids] | {"id": fraction}, "tail": [[lo, hi|null], ...]} or "all"."""
    def build():
        if obj == "all":
            return MeasurableSet.whole(space)
        cells = obj.get("cells", [])
        tail = tuple((int(lo), None if hi is None else int(hi)) for lo, hi in obj.get("tail", []))
        if isinstance(cells, dict):
            return MeasurableSet.of_cells(space, (), tail, {int(k): _num(v, "fraction") for k, v in cells.items()})
        return MeasurableSet.of_cells(space, [int(c) for c in cells], tail)

    return _guard(build)


def sequence_from_json(obj: dict):
    def build():
        fam = obj.get("family")
        n_max = int(obj.get("n_max", seqs.DEFAULT_N))
        if n_max < 4:
            raise ParseError("n_max must be at least 4")
        if fam in ("chi_shrinking", "n_chi_shrinking"):
            return seqs.FAMILIES[fam](n_max, bool(obj.get("half_line", False)))
        if fam == "escaping_box":
            return seqs.escaping_box(n_max)
        if fam == "explicit":
            sp = space_from_json(obj["space"])
            terms = [fn_from_json(t, sp) for t in obj["terms"]]
            limit = fn_from_json(obj["limit"], sp) if obj.get("limit") is not None else None
            return seqs.explicit(terms, limit)
        if fam == "constant":
            sp = space_from_json(obj["space"])
            return seqs.constant(fn_from_json(obj["f"], sp), n_max)
        if fam == "geometric_perturbation":
            sp = space_from_json(obj["space"])
            rate = _num(obj["rate"], "rate")
            if not 0 < rate < 1:
                raise ParseError("rate must lie in (0, 1)")
            return seqs.geometric_perturbation(fn_from_json(obj["f"], sp), fn_from_json(obj["h"], sp), rate, n_max)
        raise ParseError(f"unknown sequence family {fam!r}")

    return _guard(build)


def sequence_to_json(seq) -> dict:
    """Explicit form of any sequence (terms materialized)."""
    out = {"family": "explicit", "space": space_to_json(seq.space),
           "terms": [fn_to_json(f, False) for f in seq.terms()]}
    if seq.limit is not None:
        out["limit"] = fn_to_json(seq.limit, False)
    return out


def grid_from_json(obj: dict):
    from .approx import GridBox

    def build():
        box = GridBox(tuple(tuple(_num(v, "bound") for v in b) for b in obj["bounds"]),
                      tuple(int(n) for n in obj["cells"]))
        vals = np.array([_num(v, "value") for v in obj["values"]], dtype=float)
        if vals.size != int(np.prod(box.cells)):
            raise ParseError(f"grid needs {int(np.prod(box.cells))} values, got {vals.size}")
        return box, vals.reshape(box.cells)

    return _guard(build)
