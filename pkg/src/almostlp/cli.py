"""almostlp command line.

Exit codes: 0 pass, 1 property violation, 2 parse error, 3 unsupported
family or tolerance, 4 missing input, 5 only inconclusive verdicts.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import approx, convergence, functionals, gallery, serialize
from .errors import (
    DominationViolated,
    GridTooCoarse,
    ImplicationViolation,
    InfiniteMeasureSet,
    MissingLimit,
    NotMember,
    ParamOutOfDomain,
    ParseError,
    ToleranceNotReached,
    UnknownEntry,
    UnsupportedFamilyCombination,
)

EXIT_OK, EXIT_VIOLATION, EXIT_PARSE, EXIT_UNSUPPORTED, EXIT_MISSING, EXIT_INCONCLUSIVE = range(6)


class _Exit(Exception):
    def __init__(self, code: int, payload: dict):
        self.code = code
        self.payload = payload


def _json_default(o):
    if isinstance(o, (np.floating,)):
        o = float(o)
    if isinstance(o, float):
        return None if not math.isfinite(o) else o
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (set, tuple)):
        return list(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _finite(obj):
    """Replace inf/nan floats by strings so the output is strict JSON."""
    if isinstance(obj, dict):
        return {str(k): _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def emit(payload: dict, out=None):
    text = json.dumps(_finite(payload), indent=2, default=_json_default, allow_nan=False)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def _read(path):
    if path is None:
        raise _Exit(EXIT_MISSING, {"error": "missing input file"})
    p = Path(path)
    if not p.exists():
        raise _Exit(EXIT_MISSING, {"error": f"no such file: {path}"})
    return serialize.load_path(p)


def _grid(text: str | None) -> list[float] | None:
    if text is None:
        return None
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ParseError(f"bad grid {text!r}") from None
    if not vals or any(not (v > 0 and math.isfinite(v)) for v in vals):
        raise ParseError("grids must be positive and finite")
    if any(b >= a for a, b in zip(vals, vals[1:])):
        raise ParseError("grids must be sorted in strictly descending order")
    return vals


def _verdict_code(verdicts) -> int:
    verdicts = list(verdicts)
    if verdicts and all(v == convergence.INCONCLUSIVE for v in verdicts):
        return EXIT_INCONCLUSIVE
    return EXIT_OK


# ---------------------------------------------------------------------------
# commands


def cmd_norm(a) -> tuple[int, dict]:
    f = serialize.fn_from_json(_read(a.input))
    tol = a.tol
    lp = functionals.integrate_p(f, a.p, None, tol)
    al = functionals.alpha_norm_p(f, a.p, None, tol)
    out = {
        "p": a.p,
        "lp": lp.value ** (1 / a.p) if lp.finite else math.inf,
        "lp_power": {"value": lp.value, "error": lp.error},
        "alpha_p": al.value ** (1 / a.p) if al.finite else math.inf,
        "alpha_power": {"value": al.value, "error": al.error},
        "frechet_mu": functionals.frechet_mu(f, tol),
        "seminorms": [],
    }
    for text in a.set or []:
        obj = serialize.loads(text) if text.strip().startswith(("{", '"')) else \
            {"cells": [int(x) for x in text.split(",") if x.strip()]}
        F = serialize.set_from_json(obj, f.space)
        out["seminorms"].append({"set": convergence.set_to_json(F),
                                 "value": functionals.alpha_seminorm_on(f, a.p, F, tol)})
    return EXIT_OK, out


def cmd_member(a) -> tuple[int, dict]:
    f = serialize.fn_from_json(_read(a.input))
    m = functionals.lambda_p_member(f, a.p, _grid(a.deltas))
    out = m.to_json()
    out["in_lp"] = functionals.in_lp(f, a.p)
    out["alpha_finite"] = functionals.alpha_norm_p(f, a.p).finite
    return (EXIT_INCONCLUSIVE if m.verdict == "inconclusive" else EXIT_OK), out


def _sequence(a):
    obj = _read(a.input)
    if a.n_max is not None and obj.get("family") != "explicit":
        obj = dict(obj, n_max=a.n_max)
    return serialize.sequence_from_json(obj)


def _plot_svg(report: convergence.ConvergenceReport, path: str):
    """Static log-scale plot of the norm traces."""
    series = [(m, report.entries[m].evidence.get("trace")) for m in ("Lp", "alpha_p", "alpha_cauchy")]
    series = [(m, np.asarray(t, dtype=float)) for m, t in series if t]
    W, H, pad = 640, 400, 40
    colors = ["#1f77b4", "#d62728", "#2ca02c"]
    vals = np.concatenate([t[np.isfinite(t) & (t > 0)] for _, t in series]) if series else np.array([1.0])
    lo, hi = (math.log10(vals.min()), math.log10(vals.max())) if vals.size else (0.0, 1.0)
    if hi - lo < 1e-9:
        lo, hi = lo - 1, hi + 1
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}">',
             f'<rect x="{pad}" y="{pad}" width="{W - 2 * pad}" height="{H - 2 * pad}" fill="none" stroke="black"/>']
    for (name, t), col in zip(series, colors):
        pts = []
        for i, v in enumerate(t):
            if not (math.isfinite(v) and v > 0):
                continue
            x = pad + (W - 2 * pad) * i / max(len(t) - 1, 1)
            y = H - pad - (H - 2 * pad) * (math.log10(v) - lo) / (hi - lo)
            pts.append(f"{x:.1f},{y:.1f}")
        parts.append(f'<polyline fill="none" stroke="{col}" points="{" ".join(pts)}"><title>{name}</title></polyline>')
    parts.append(f'<text x="{pad}" y="{pad - 10}">log10 trace in [{lo:.2f}, {hi:.2f}] vs n</text></svg>')
    Path(path).write_text("\n".join(parts) + "\n")


def cmd_classify(a) -> tuple[int, dict | str]:
    seq = _sequence(a)
    if seq.limit is None:
        raise MissingLimit("classify needs a sequence with a candidate limit")
    rep = convergence.classify(seq, a.p, a.tol)
    if a.plot:
        _plot_svg(rep, a.plot)
    code = _verdict_code(rep.verdicts().values())
    if a.format == "csv":
        return code, rep.to_csv()
    return code, rep.to_json()


def cmd_vitali(a) -> tuple[int, dict]:
    seq = _sequence(a)
    fn = {"classic": convergence.vitali_classic, "alpha": convergence.vitali_alpha,
          "lambda": convergence.vitali_lambda}[a.variant]
    rep = fn(seq, a.p, a.tol)
    out = rep.to_json()
    if seq.space.is_finite_measure and a.variant == "lambda":
        out["note"] = "finite measure space: tightness holds with E = X"
    if rep.consistent is False:
        return EXIT_VIOLATION, out
    return _verdict_code([rep.main.verdict] + [r.verdict for r in rep.legs.values()]), out


def cmd_axioms(a) -> tuple[int, dict]:
    ps = a.p or [1.0, 1.5, 2.0, 3.0]
    reports = [functionals.fnorm_axioms_check(None, p, a.trials, a.seed + i, a.cells) for i, p in enumerate(ps)]
    out = {"axioms": [r.to_json() for r in reports]}
    if a.chain:
        chain = functionals.estimate_chain_suite(a.trials, a.seed, min(a.cells, 12), tuple(ps))
        reports.append(chain)
        out["estimate_chain"] = chain.to_json()
    ok = all(r.passed for r in reports)
    out["passed"] = ok
    return (EXIT_OK if ok else EXIT_VIOLATION), out


def cmd_approx(a) -> tuple[int, dict]:
    if a.method == "mollify":
        box, vals = serialize.grid_from_json(_read(a.input))
        rep = approx.mollify(box, vals, a.h, a.p, a.eps)
        out = rep.to_json()
        if a.values:
            out["phi"] = rep.phi.ravel().tolist()
        return EXIT_OK, out
    f = serialize.fn_from_json(_read(a.input))
    if a.method == "ladder":
        steps = approx.simple_ladder(f, a.levels)
        dominated = all(np.all(np.abs(s.values) <= np.abs(f.values)) for s in steps)
        dist = [functionals.alpha_norm_p(s - f, a.p).value ** (1 / a.p) for s in steps]
        out = {"levels": a.levels, "dominated": dominated, "alpha_distance": dist,
               "steps": [serialize.fn_to_json(s, False) for s in steps]}
        return (EXIT_OK if dominated else EXIT_VIOLATION), out
    if a.eps is None:
        raise ParseError(f"approx {a.method} needs --eps")
    if a.method == "truncate":
        t = approx.truncate_to_lp(f, a.p, a.eps)
        out = t.to_json()
        out["g"] = serialize.fn_to_json(t.g, False)
        return (EXIT_OK if t.certified else EXIT_VIOLATION), out
    net = approx.rational_simple_net(f, a.p, a.eps)
    out = net.to_json()
    return (EXIT_OK if net.distance < 2 * a.eps else EXIT_VIOLATION), out


GALLERY_OPTS = ("p", "eps", "R", "d", "n", "k_max", "trials")


def cmd_gallery(a) -> tuple[int, dict]:
    if a.action == "list":
        return EXIT_OK, {"entries": gallery.list_entries()}
    if not a.name:
        raise _Exit(EXIT_MISSING, {"error": "gallery run needs an entry name"})
    params = {}
    for kv in a.param or []:
        if "=" not in kv:
            raise ParseError(f"--param expects key=value, got {kv!r}")
        k, v = kv.split("=", 1)
        params[k.strip()] = v.strip()
    for k in GALLERY_OPTS:
        v = getattr(a, k, None)
        if v is not None:
            params[k] = v
    entry = gallery._BY_NAME.get(a.name)
    if entry is not None and any(p.name == "seed" for p in entry.params):
        params.setdefault("seed", a.seed)
    rep = gallery.run_entry(a.name, params)
    return (EXIT_OK if rep.passed else EXIT_VIOLATION), rep.to_json()


def cmd_report(a) -> tuple[int, dict]:
    if a.validate:
        obj = _read(a.input)
        verdicts = obj.get("verdicts") or obj.get("classify", {}).get("verdicts")
        if not isinstance(verdicts, dict):
            raise ParseError("report has no verdicts")
        finite = bool(obj.get("finite_measure", False))
        convergence.assert_lattice(verdicts, finite)
        return EXIT_OK, {"valid": True, "verdicts": verdicts}
    seq = _sequence(a)
    out = {"sequence": seq.name, "p": a.p, "finite_measure": seq.space.is_finite_measure}
    rep = convergence.classify(seq, a.p, a.tol)
    out["classify"] = rep.to_json()
    out["verdicts"] = rep.verdicts()
    out["vitali"] = {v.theorem: v.to_json() for v in (convergence.vitali_classic(seq, a.p, a.tol),
                                                       convergence.vitali_alpha(seq, a.p, a.tol),
                                                       convergence.vitali_lambda(seq, a.p, a.tol))}
    bad = [k for k, v in out["vitali"].items() if v["consistent"] is False]
    if a.csv:
        Path(a.csv).write_text(rep.to_csv())
    return (EXIT_VIOLATION if bad else EXIT_OK), out


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="almostlp", description="Almost-L_p spaces: norms, membership, convergence.")
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--seed", type=int, default=0, help="seed for randomized commands")
    shared.add_argument("--out", default=None, help="write output to this file instead of stdout")
    sub = ap.add_subparsers(dest="command", required=True)
    def common(p):
        p.add_argument("--p", type=float, default=1.0)
        p.add_argument("--tol", type=float, default=None)

    p = sub.add_parser("norm", parents=[shared], help="L_p, alpha_p, Frechet and seminorms of a function")
    p.add_argument("input")
    p.add_argument("--set", action="append", help="cell ids '0,2' or a set JSON object; repeatable")
    common(p)

    p = sub.add_parser("member", parents=[shared], help="almost-L_p membership with witness sets")
    p.add_argument("input")
    p.add_argument("--deltas", help="descending comma-separated grid")
    common(p)

    def seq_opts(p):
        p.add_argument("input")
        p.add_argument("--n-max", type=int, default=None)
        common(p)

    p = sub.add_parser("classify", parents=[shared], help="convergence report for a sequence")
    seq_opts(p)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--plot", default=None, help="write an SVG trace plot")

    p = sub.add_parser("vitali", parents=[shared], help="Vitali theorem legs")
    p.add_argument("variant", choices=("classic", "alpha", "lambda"))
    seq_opts(p)

    p = sub.add_parser("axioms", parents=[shared], help="randomized F-norm axiom suite")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--p", type=float, action="append")
    p.add_argument("--cells", type=int, default=16)
    p.add_argument("--chain", action="store_true", help="also run the estimate-chain suite")

    p = sub.add_parser("approx", parents=[shared], help="ladder, truncation, mollification, dyadic net")
    p.add_argument("method", choices=("ladder", "truncate", "mollify", "net"))
    p.add_argument("input")
    p.add_argument("--p", type=float, default=1.0)
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--levels", type=int, default=8)
    p.add_argument("--h", type=float, default=None)
    p.add_argument("--values", action="store_true", help="include mollified grid values")

    p = sub.add_parser("gallery", parents=[shared], help="named examples")
    p.add_argument("action", choices=("list", "run"))
    p.add_argument("name", nargs="?")
    p.add_argument("--param", action="append", help="key=value; repeatable")
    p.add_argument("--p", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--R", type=float)
    p.add_argument("--d", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--k-max", dest="k_max", type=int)
    p.add_argument("--trials", type=int)

    p = sub.add_parser("report", parents=[shared], help="full report for a sequence, or --validate a saved one")
    seq_opts(p)
    p.add_argument("--validate", action="store_true")
    p.add_argument("--csv", default=None, help="also write traces as CSV")
    return ap


COMMANDS = {"norm": cmd_norm, "member": cmd_member, "classify": cmd_classify, "vitali": cmd_vitali,
            "axioms": cmd_axioms, "approx": cmd_approx, "gallery": cmd_gallery, "report": cmd_report}


def _check_args(args):
    if getattr(args, "tol", None) is None and hasattr(args, "tol"):
        sequence_cmd = args.command in ("classify", "vitali", "report")
        args.tol = convergence.TRACE_TOL if sequence_cmd else functionals.DEFAULT_TOL
    if hasattr(args, "tol") and not args.tol > 0:
        raise ParseError("tolerance must be positive")
    ps = args.p if isinstance(getattr(args, "p", None), list) else [getattr(args, "p", None)]
    if any(p is not None and not p >= 1 for p in ps):
        raise ParseError("p must be >= 1")


def run(argv=None) -> tuple[int, object, str | None]:
    """Parse and dispatch; returns (exit code, payload, output path)."""
    args = build_parser().parse_args(argv)
    out = args.out
    try:
        _check_args(args)
        code, payload = COMMANDS[args.command](args)
    except _Exit as e:
        return e.code, e.payload, out
    except ImplicationViolation as e:
        return EXIT_VIOLATION, {"error": str(e), "upstream": e.upstream, "downstream": e.downstream}, out
    except (DominationViolated, NotMember) as e:
        return EXIT_VIOLATION, {"error": str(e), "kind": type(e).__name__}, out
    except (ParseError, UnknownEntry, ParamOutOfDomain) as e:
        return EXIT_PARSE, {"error": str(e), "kind": type(e).__name__}, out
    except GridTooCoarse as e:
        payload = {"error": str(e), "kind": "GridTooCoarse"}
        if e.best is not None:
            payload["best"] = e.best.to_json()
        return EXIT_UNSUPPORTED, payload, out
    except (UnsupportedFamilyCombination, ToleranceNotReached, InfiniteMeasureSet) as e:
        return EXIT_UNSUPPORTED, {"error": str(e), "kind": type(e).__name__}, out
    except MissingLimit as e:
        return EXIT_MISSING, {"error": str(e), "kind": "MissingLimit"}, out
    return code, payload, out


def main(argv=None) -> int:
    code, payload, out = run(argv)
    if isinstance(payload, str):
        if out:
            Path(out).write_text(payload)
        else:
            sys.stdout.write(payload)
        return code
    if code not in (EXIT_OK, EXIT_INCONCLUSIVE) and "error" in payload:
        print(f"almostlp: {payload['error']}", file=sys.stderr)
    emit(payload, out)
    return code


if __name__ == "__main__":
    sys.exit(main())
