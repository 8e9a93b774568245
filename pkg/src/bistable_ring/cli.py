"""Command-line front end: ``bistable-ring <command> [flags]``.

Each command writes one record (JSON, or CSV rows) plus a manifest that
echoes the resolved configuration. JSON output embeds the manifest under
``"manifest"``; CSV output puts it in ``<out>.manifest.json`` (or on stderr
when writing to stdout). Exit status: 0 success, 1 invalid input, 2
numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .model import ModelParams

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
COMMANDS = ("landscape", "graph", "bifurcation", "cm", "conjecture", "symdyn", "n4", "simulate", "arrhenius")


class ValidationError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


def _num(x):
    """JSON-safe float (shortest round-trip repr; non-finite values become strings)."""
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    x = float(x)
    return x if math.isfinite(x) else repr(x)


def _vec(v) -> list:
    return [_num(t) for t in np.asarray(v, dtype=float).ravel()]


# --- commands ------------------------------------------------------------------


def _params(a) -> ModelParams:
    if a.n is None or a.gamma is None:
        raise ValidationError("--n and --gamma are required")
    return ModelParams(a.n, a.gamma)


def cmd_landscape(a):
    from .landscape import find_stationary_points

    p = _params(a)
    s = find_stationary_points(p, strategy=a.strategy)
    rows = []
    for i, q in enumerate(s.points):
        n_neg, n_zero, n_pos = q.index_type
        rows.append(
            {"id": i, "orbit": q.orbit_id, "value": _num(q.value), "residual": _num(q.residual),
             "n_neg": n_neg, "n_zero": n_zero, "n_pos": n_pos, "coords": _vec(q.coords)}
        )
    summary = {"count": len(s), "index_counts": {str(k): v for k, v in sorted(s.index_counts().items())},
               "degenerate": s.n_degenerate(), "orbits": len(s.orbits)}
    return {"summary": summary, "points": rows}


def _range(a) -> np.ndarray:
    step = a.gamma_step or 0.005
    k = int(math.floor((a.gamma_max - a.gamma_min) / step + 1e-9))
    return np.round(a.gamma_min + step * np.arange(k + 1), 12)


def cmd_graph(a):
    from .landscape import DisconnectedGraphError, barrier_height, connect_saddles, find_stationary_points

    if a.gamma is None and a.gamma_min is not None and a.gamma_max is not None:
        curve = []
        for g in _range(a):
            p = ModelParams(a.n, float(g))
            try:
                h = barrier_height(p, connect_saddles(p, find_stationary_points(p)))
            except DisconnectedGraphError:
                # at a bifurcation value the gate saddle is degenerate
                log.warning("gamma=%g: no nondegenerate path between I- and I+", g)
                h = math.nan
            curve.append({"gamma": _num(g), "h": _num(h)})
        return {"barrier_curve": curve}
    p = _params(a)
    s = find_stationary_points(p)
    graph = connect_saddles(p, s)
    edges = [{"source": e.source, "target": e.target, "saddle": e.saddle, "barrier": _num(e.barrier), "resolved": e.resolved}
             for e in graph.edges]
    return {"vertices": graph.vertices, "values": {str(v): _num(graph.value(v)) for v in graph.vertices},
            "edges": edges, "unresolved": graph.unresolved, "h": _num(barrier_height(p, graph))}


def cmd_bifurcation(a):
    from .landscape import scan_bifurcations

    if a.n is None or a.gamma_min is None or a.gamma_max is None:
        raise ValidationError("bifurcation needs --n, --gamma-min and --gamma-max")
    d = scan_bifurcations(a.gamma_min, a.gamma_max, a.n, step=a.gamma_step or 0.005)
    events = [{"gamma": _num(e.gamma), "lo": _num(e.lo), "hi": _num(e.hi), "count_before": e.count_before,
               "count_after": e.count_after, "resolved": e.resolved} for e in d.events]
    grid = [{"gamma": _num(g), "count": c, "index_counts": {str(k): v for k, v in sorted(ic.items())}, "degenerate": dg}
            for g, c, ic, dg in zip(d.gamma_grid, d.counts, d.index_counts, d.degenerate)]
    return {"events": events, "grid": grid, "_diagram": d}


def cmd_cm(a):
    from .cmanifold import compute_h_table, leading_angular_coefficient

    if a.n is None:
        raise ValidationError("cm needs --n")
    tab = compute_h_table(a.n, precision=a.precision)
    coef = leading_angular_coefficient(a.n, a.precision)
    entries = [{"n": i, "m": j, "h": _num(v)} for i, j, v in tab.entries()]
    out = {"precision_bits": tab.precision_bits, "entries": entries,
           "leading": {"indices": list(coef.indices), "value": _num(coef.value), "bound": _num(coef.bound), "sign": coef.sign}}
    if a.n == 4:
        out["c03"] = _num(tab.c(0, 3))
    else:
        out["c21"] = _num(tab.c(2, 1))
    return out


def cmd_conjecture(a):
    from .cmanifold import conjecture_check

    rows = []
    for r in conjecture_check(a.n_max, a.precision):
        rows.append({"n": r.n_particles, "precision_bits": r.precision_bits, "coefficient": _num(r.coefficient.value),
                     "sign": r.coefficient.sign, "lemma_ok": r.lemma_ok, "conjecture_ok": r.conjecture_ok})
    return {"rows": rows, "all_positive": all(r["sign"] == "+" for r in rows)}


def cmd_symdyn(a):
    from .symdyn import improved_threshold, periodic_points, pruning_probe, strip_condition

    out = {"improved_threshold": _num(improved_threshold())}
    if a.gamma is not None:
        out["basic"] = strip_condition(a.gamma, "basic")
        out["improved"] = strip_condition(a.gamma, "improved")
        n_max = a.n or 6
        out["periodic"] = [{"n": k, "distinct": periodic_points(a.gamma, k, check_strips=False).n_distinct, "expected": 3**k}
                           for k in range(1, n_max + 1)]
    if a.n is not None and a.gamma is None:
        rep = pruning_probe(0.0, 0.5, a.n)
        out["pruning"] = {"first_loss": _num(rep.first_loss if rep.first_loss is not None else math.nan), "lost_words": rep.lost_words}
    return out


def cmd_n4(a):
    from .landscape import n4_feasibility_end, n4_hessian_det, n4_reduced_roots, n4_root_count_events
    from .model import hessian, index_type

    out = {"feasibility_end": _num(n4_feasibility_end()),
           "root_count_events": [{"gamma": _num(g), "before": b, "after": c} for g, b, c in n4_root_count_events()]}
    if a.gamma is not None:
        p = ModelParams(4, a.gamma)
        roots = []
        for r in n4_reduced_roots(a.gamma):
            item = {"w": _num(r.w), "feasible": r.feasible, "points": [_vec(x) for x in r.points]}
            if r.w != 0:
                item["det"] = _num(n4_hessian_det(a.gamma, r.w))
            item["index"] = [index_type(np.linalg.eigvalsh(hessian(p, x)))[0] for x in r.points]
            roots.append(item)
        out["roots"] = roots
    return out


def _sde_setup(a, sigma):
    from .sde import HittingSpec, SdeParams, critical_orbit

    p = _params(a)
    if not a.r < a.R:
        raise ValidationError("--r must be smaller than --R")
    spec = HittingSpec(p.n, a.r, a.R, critical_orbit(p))
    return SdeParams(p, sigma, seed=a.seed, max_time=a.max_time), spec


def cmd_simulate(a):
    from .sde import first_return_conditioned, run_hits, summarise

    if not a.sigma or len(a.sigma) != 1:
        raise ValidationError("simulate needs exactly one --sigma")
    s, spec = _sde_setup(a, a.sigma[0])
    if a.conditioned:
        st = first_return_conditioned(s, spec, n_success=a.trials)
        return {"n_trials": st.n_trials, "n_success": st.n_success, "passage_O": _num(st.passage_O),
                "passage_A": _num(st.passage_A), "_records": st.records}
    recs = run_hits(s, spec, a.trials)
    q = summarise(recs)
    return {"n_hits": q.n_hits, "n_censored": q.n_censored, "mean_tau": _num(q.mean_tau), "ci95": _vec(q.ci95),
            "passage_O": _num(np.mean([r.min_dist_O < spec.r_small for r in recs])), "_records": recs}


def cmd_arrhenius(a):
    from .sde import arrhenius_fit

    if not a.sigma or len(a.sigma) < 3:
        raise ValidationError("arrhenius needs at least three --sigma values")
    s, spec = _sde_setup(a, max(a.sigma))
    st = arrhenius_fit(s, a.sigma, a.trials, spec)
    per = [{"sigma": _num(q.sigma), "n_hits": q.n_hits, "n_censored": q.n_censored, "mean_tau": _num(q.mean_tau),
            "ci95": _vec(q.ci95)} for q in st.per_sigma]
    return {"slope": _num(st.slope), "intercept": _num(st.intercept), "stderr": _num(st.slope_stderr),
            "per_sigma": per, "monotone": st.monotone(), "_records": st.hit_times}


HANDLERS = {name: globals()[f"cmd_{name}"] for name in COMMANDS}


# --- output ----------------------------------------------------------------------


def _csv_rows(command: str, result: dict) -> tuple[list[str], list[list]]:
    if "_records" in result:
        from .sde import CSV_COLUMNS

        return list(CSV_COLUMNS), [[_num(v) for v in r.row()] for r in result["_records"]]
    if command == "landscape":
        n = len(result["points"][0]["coords"]) if result["points"] else 0
        head = ["id", "orbit", "value", "residual", "n_neg", "n_zero", "n_pos"] + [f"x{i}" for i in range(n)]
        return head, [[q[k] for k in head[:7]] + q["coords"] for q in result["points"]]
    if command == "bifurcation":
        return ["gamma", "lo", "hi", "count_before", "count_after", "resolved"], [list(e.values()) for e in result["events"]]
    if command == "graph" and "barrier_curve" in result:
        return ["gamma", "h"], [[r["gamma"], r["h"]] for r in result["barrier_curve"]]
    if command == "graph":
        return ["source", "target", "saddle", "barrier", "resolved"], [list(e.values()) for e in result["edges"]]
    if command == "conjecture":
        return list(result["rows"][0]), [list(r.values()) for r in result["rows"]]
    raise ValidationError(f"command {command!r} has no CSV form; use --format json")


def _public(result: dict) -> dict:
    return {k: v for k, v in result.items() if not k.startswith("_")}


def write_output(command: str, result: dict, manifest: dict, fmt: str, out: str | None) -> None:
    if fmt == "json":
        text = json.dumps({"manifest": manifest, "result": _public(result)}, indent=1) + "\n"
        if out:
            Path(out).write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)
        return
    head, rows = _csv_rows(command, result)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(head)
    w.writerows(rows)
    mtext = json.dumps(manifest, indent=1) + "\n"
    if out:
        Path(out).write_text(buf.getvalue(), encoding="utf-8")
        Path(out + ".manifest.json").write_text(mtext, encoding="utf-8")
    else:
        sys.stdout.write(buf.getvalue())
        sys.stderr.write(mtext)


def emit_plot_data(result, kind: str, path) -> int:
    """Write a plotting table and return the number of data rows.

    ``diagram``: ``gamma, branch, coordinate, value, index`` from a bifurcation
    diagram (one row per orbit representative and grid point).
    ``graph``: ``gamma, h`` barrier curve from a list of ``{"gamma", "h"}`` records.
    ``path``: ``step, state, value`` from a list of ``(label, value)`` pairs.
    """
    rows: list[list] = []
    if kind == "diagram":
        head = ["gamma", "branch", "coordinate", "value", "index"]
        for g, reps in zip(result.gamma_grid, result.branches):
            for b, (x, v, idx) in enumerate(reps):
                rows.append([_num(g), b, _num(x[0]), _num(v), "" if idx is None else idx])
    elif kind == "graph":
        head = ["gamma", "h"]
        rows = [[r["gamma"], r["h"]] for r in result]
    elif kind == "path":
        head = ["step", "state", "value"]
        rows = [[k, label, _num(v)] for k, (label, v) in enumerate(result)]
    else:
        raise ValidationError(f"unknown plot kind {kind!r}")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(head)
        w.writerows(rows)
    return len(rows)


def droplet_profile(n: int, gamma: float) -> list[tuple[str, float]]:
    """Potential along the droplet path, each uncoupled state continued by Newton."""
    from .landscape import droplet_path, newton_refine
    from .model import potential

    p = ModelParams(n, gamma)
    states = droplet_path(n)
    x, ok = newton_refine(p, np.array(states))
    if not ok.all():
        raise FloatingPointError("droplet states did not converge; gamma too large")
    sym = {-1.0: "-", 0.0: "0", 1.0: "+"}
    return [("".join(sym[float(t)] for t in st), float(potential(p, xi))) for st, xi in zip(states, x)]


# --- entry point -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="bistable-ring", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--n", type=int)
    ap.add_argument("--gamma", type=float)
    ap.add_argument("--gamma-min", type=float)
    ap.add_argument("--gamma-max", type=float)
    ap.add_argument("--gamma-step", type=float)
    ap.add_argument("--sigma", type=float, action="append")
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--r", type=float, default=0.1)
    ap.add_argument("--R", type=float, default=0.4)
    ap.add_argument("--max-time", type=float, default=1e5)
    ap.add_argument("--precision", default="double")
    ap.add_argument("--n-max", type=int, default=31)
    ap.add_argument("--strategy", choices=("seed_grid", "continuation"), default="seed_grid")
    ap.add_argument("--conditioned", action="store_true", help="simulate: passage statistics of successful excursions")
    ap.add_argument("--out")
    ap.add_argument("--format", choices=("json", "csv"), default="json")
    ap.add_argument("--plot-data", help="also write a plotting table (diagram, barrier curve or droplet path)")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def _manifest(a) -> dict:
    cfg = {k: v for k, v in sorted(vars(a).items()) if k != "verbose"}
    return {"tool": "bistable-ring", "version": __version__, "schema": SCHEMA_VERSION, "command": a.command, "config": cfg}


def _numerical_errors() -> tuple:
    from .cmanifold import CutoffError
    from .landscape import DisconnectedGraphError
    from .sde import UnderpoweredError

    return (ArithmeticError, np.linalg.LinAlgError, DisconnectedGraphError, UnderpoweredError, CutoffError, RuntimeError)


NUMERICAL_ERRORS = _numerical_errors()


def parse_and_dispatch(argv=None) -> int:
    try:
        a = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
        if a.n is not None and a.n < 2:
            raise ValidationError("--n must be at least 2")
        if a.gamma is not None and a.gamma < 0:
            raise ValidationError("--gamma must be >= 0")
        if a.sigma and any(s <= 0 for s in a.sigma):
            raise ValidationError("--sigma must be positive")
        if a.trials < 1:
            raise ValidationError("--trials must be positive")
        result = HANDLERS[a.command](a)
        write_output(a.command, result, _manifest(a), a.format, a.out)
        if a.plot_data:
            if a.command == "bifurcation":
                emit_plot_data(result["_diagram"], "diagram", a.plot_data)
            elif a.command == "graph" and "barrier_curve" in result:
                emit_plot_data(result["barrier_curve"], "graph", a.plot_data)
            elif a.command == "graph":
                emit_plot_data(droplet_profile(a.n, a.gamma), "path", a.plot_data)
            else:
                raise ValidationError(f"--plot-data is not available for {a.command!r}")
        return 0
    except NUMERICAL_ERRORS as exc:
        sys.stderr.write(f"numerical failure: {type(exc).__name__}: {exc}\n")
        return 2
    except (ValidationError, ValueError, TypeError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


def main() -> None:
    sys.exit(parse_and_dispatch())


if __name__ == "__main__":
    main()
