"""``parity-opt`` command line.

Exit status: 0 on success, 2 when inputs fail validation (bad CSV rows,
invalid measure, degenerate group), 1 on I/O errors or solver failure.
Every JSON report carries ``"schema": 1``.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import data, dual, fair_score, lin_frac, unaware
from .barycenter import DEFAULT_GRID, barycenter_knots, barycenter_objective
from .errors import DualSolverError, NoFeasibleClassifierError

SCHEMA = 1
EXIT_OK, EXIT_IO, EXIT_INVALID = 0, 1, 2


def _clean(obj):
    # numpy scalars and arrays to plain JSON types; floats keep their shortest repr
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        return value if np.isfinite(value) else None
    return obj


def write_json(payload, path=None):
    text = json.dumps(_clean({"schema": SCHEMA, **payload}), indent=2, allow_nan=False)
    if path is None or path == "-":
        print(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")


def _read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _load_measure(path, model):
    return lin_frac.measure_from_spec(_read_json(path), label_prior=model.label_prior)


# reports, also used by tests to compare against the command line

def fit_report(model, table):
    return {
        "groups": model.groups,
        "priors": [model.gs.priors[s] for s in model.groups],
        "sizes": [len(model.gs.groups[s]) for s in model.groups],
        "gamma_star": model.gamma_star,
        "label_prior": model.label_prior,
        "observed_label_rate": table.label_prior() if table is not None else None,
        "grid": model.grid,
        "w2_objective": barycenter_objective(model.gs, model.barycenter),
    }


def threshold_report(model, measure):
    check = lin_frac.require_valid(measure)
    theta = lin_frac.solve_threshold(measure, model)
    residual = lin_frac.fixed_point_residual(measure, model, theta) if check.branch == "C1" else None
    return {
        "measure": {"name": measure.name, "n": list(measure.n), "d": list(measure.d),
                    "label_prior": measure.label_prior},
        "branch": check.branch,
        "theta_star": theta,
        "optimal_utility": lin_frac.optimal_utility(measure, model, theta),
        "fixed_point_residual": residual,
        "group_thresholds": fair_score.group_thresholds(model, theta),
    }


def evaluation_report(model, table, measure):
    """Metrics of the optimal classifier for ``measure`` on the rows of ``table``.

    The utility uses labels when the table has them and the scores otherwise.
    """
    spec = lin_frac.classifier(measure, model)
    eval_gs = table.to_grouped()
    truth = table.labels if table.has_labels else table.scores
    total = table.weights.sum()
    predictions = np.zeros(len(table), dtype=int)
    rates = {}
    for s in table.group_ids:
        if s not in model.gs.groups:
            raise ValueError(f"group {s!r} is not in the model")
        mask = table.groups == s
        predictions[mask] = spec.predict(table.scores[mask], s)
        w = table.weights[mask]
        rates[s] = float(np.dot(w, predictions[mask]) / w.sum())
    stats = lin_frac.ConfusionStats(
        float(np.dot(table.weights, truth * predictions) / total),
        float(np.dot(table.weights, predictions) / total),
    )
    values = list(rates.values())
    return {
        "measure": measure.name,
        "theta_star": spec.theta,
        "utility": lin_frac.utility(measure, stats),
        "utility_source": "labels" if table.has_labels else "scores",
        "dp_gap": fair_score.dp_gap(model, eval_gs),
        "positive_rate_gap": max(values) - min(values),
        "positive_rates": rates,
        "group_thresholds": spec.thresholds,
        "clamped_fraction": fair_score.clamped_fraction(model, eval_gs),
    }


def unaware_report(joint):
    result = unaware.solve_unaware(joint)
    payload = {
        "tv": result.tv,
        "bayes_everywhere": result.bayes_everywhere,
        "supports": None,
        "lambda": None,
        "classifier": [{"point": x, "g": int(g)} for x, g in zip(joint.points, result.classifier)],
        "dp_residual": result.dp_residual,
        "dp_within_tol": result.dp_residual <= dual.DEFAULT_TOL,
        "risk": result.risk,
    }
    if not result.bayes_everywhere:
        red = result.reduced
        pts = np.array(joint.points, dtype=object)
        payload["supports"] = {
            "q1": {str(x): q for x, q in zip(pts[red.support1], red.q1[red.support1])},
            "q2": {str(x): q for x, q in zip(pts[red.support2], red.q2[red.support2])},
            "bayes_region": [str(x) for x in pts[red.bayes_region]],
        }
        payload["eta_tilde"] = {str(x): v for x, v in zip(pts[~red.bayes_region], red.eta_tilde[~red.bayes_region])}
        payload["lambda"] = result.solution.lam
        payload["dual_objective"] = result.solution.objective
    return payload


def plot_rows(model, points=201):
    rows = []
    for s, d in model.gs.groups.items():
        xs = np.linspace(d.atoms[0], d.atoms[-1], points)
        rows += [(f"cdf:{s}", x, y) for x, y in zip(xs, d.interp_cdf(xs))]
    ranks, values = barycenter_knots(model.gs)
    rows += [("cdf:barycenter", x, y) for x, y in zip(values, ranks)]
    rows.append(("gamma_star", 0.5, model.gamma_star))
    for s, beta in fair_score.group_thresholds(model, 0.5).items():
        rows.append((f"threshold:{s}", beta, model.gamma_star))
    return rows


# subcommands

def cmd_fit(args):
    table = data.ingest(args.input)
    model = fair_score.fit(table.to_grouped(), grid=args.grid)
    model.save(args.out)
    write_json(fit_report(model, table), args.report)


def cmd_threshold(args):
    model = fair_score.FairScoreModel.load(args.model)
    write_json(threshold_report(model, _load_measure(args.measure, model)), args.out)


def cmd_evaluate(args):
    model = fair_score.FairScoreModel.load(args.model)
    table = data.ingest(args.input)
    write_json(evaluation_report(model, table, _load_measure(args.measure, model)), args.out)


def cmd_reduce(args):
    write_json(unaware_report(unaware.DiscreteJoint2.from_json(args.joint)), args.out)


def cmd_plot(args):
    model = fair_score.FairScoreModel.load(args.model)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh)
        out.writerow(["curve", "x", "y"])
        for curve, x, y in plot_rows(model, args.points):
            out.writerow([curve, repr(float(x)), repr(float(y))])


def cmd_synth(args):
    spec = _read_json(args.spec)
    seed = args.seed if args.seed is not None else spec.get("seed", data.default_seed())
    data.synth_table(spec, seed, labels=args.labels).write_csv(args.out)


def build_parser():
    parser = argparse.ArgumentParser(prog="parity-opt", description="Optimal classification under demographic parity.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit the fair-score model on a score CSV")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--grid", type=int, default=DEFAULT_GRID)
    p.add_argument("--report", default=None, help="where to write the fit summary (stdout by default)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("threshold", help="optimal threshold for a linear-fractional measure")
    p.add_argument("--model", required=True)
    p.add_argument("--measure", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("evaluate", help="metrics of the optimal classifier on a score CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--measure", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("reduce-unaware", help="two-group unaware classifier on a discrete joint")
    p.add_argument("--joint", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("plot-data", help="CDF and threshold curves as curve,x,y rows")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--points", type=int, default=201)
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("synth", help="sample a synthetic score CSV")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--labels", action="store_true")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (DualSolverError, NoFeasibleClassifierError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, KeyError, TypeError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
