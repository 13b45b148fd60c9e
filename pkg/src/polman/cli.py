"""Command-line front end: ``polman {measure|mitigate|eval|sweep-eta|sweep-gamma|sweep-pairs|temporal}``."""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import tempfile
from dataclasses import fields, replace

import numpy as np

from .embedding import ingest_embeddings
from .evaluation import builtin_embedder, delta_pct, temporal_polarization_curve
from .graph import cumulative_snapshots, largest_connected_component, read_edge_list, write_edge_list
from .pipeline import (RunConfig, StageError, mean_std, measure_graph, run_seed, run_seeds, stage,
                       training_graph)
from .polarization import measure, opinion_polarization
from .spectral import signed_laplacian

logger = logging.getLogger("polman")

COMMANDS = ("measure", "mitigate", "eval", "sweep-eta", "sweep-gamma", "sweep-pairs", "temporal")


def _floats(text):
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text):
    return [int(x) for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polman",
                                     description="Embedding-aware polarization measurement and mitigation "
                                                 "for signed networks.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="JSON file with run settings; flags override it")
    parser.add_argument("--dataset", help="signed edge list (src dst sign [timestamp])")
    parser.add_argument("--format", dest="fmt", choices=("tsv", "csv"))
    parser.add_argument("--embeddings", help="node embeddings for the training graph ('n d' header)")
    parser.add_argument("--mitigated-embeddings", help="node embeddings for the augmented graph")
    parser.add_argument("--eta", type=float)
    parser.add_argument("--tau", type=float)
    parser.add_argument("--d-max", dest="d_max", type=int)
    parser.add_argument("--gamma", type=float)
    parser.add_argument("--seeds", type=_ints, help="comma-separated seed list (default 0,1,2,3,4)")
    parser.add_argument("--k", dest="k_override", type=int, help="skip k estimation and use this k")
    parser.add_argument("--min-size", type=int, help="minimum community size counted when estimating k")
    parser.add_argument("--runs", type=int, help="Louvain runs for estimating k")
    parser.add_argument("--top-n", type=int)
    parser.add_argument("--min-community", type=int)
    parser.add_argument("--prune", action=argparse.BooleanOptionalAction, default=None)
    parser.add_argument("--dim", type=int, help="built-in embedding dimension")
    parser.add_argument("--conflict-policy", choices=("last-wins", "majority", "drop"))
    parser.add_argument("--output", "-o", help="output directory")
    parser.add_argument("--etas", type=_floats, help="sweep-eta grid")
    parser.add_argument("--gammas", type=_floats, help="sweep-gamma grid")
    parser.add_argument("--taus", type=_floats, help="sweep-pairs tau grid")
    parser.add_argument("--d-maxes", type=_ints, help="sweep-pairs d_max grid")
    parser.add_argument("--num-snapshots", type=int)
    parser.add_argument("--binning", choices=("time", "count"))
    parser.add_argument("--opinions", help="temporal: 'node value' opinions; switches to the opinion measure")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    return parser


CONFIG_KEYS = {f.name for f in fields(RunConfig)}


def load_config(args) -> tuple:
    """Merge the JSON config file with command-line flags."""
    raw = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            raw = json.load(fh)
    grids = {k: raw.pop(k) for k in ("etas", "gammas", "taus", "d_maxes") if k in raw}
    unknown = set(raw) - CONFIG_KEYS
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    for name in CONFIG_KEYS:
        val = getattr(args, name, None)
        if val is not None:
            raw[name] = val
    for name in ("etas", "gammas", "taus", "d_maxes"):
        val = getattr(args, name, None)
        if val is not None:
            grids[name] = val
    return RunConfig(**raw), grids


def _atomic_write(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _load(cfg: RunConfig):
    if not cfg.dataset:
        raise ValueError("no dataset given (use --dataset or the config file)")
    with stage("load"):
        records = read_edge_list(cfg.dataset, cfg.fmt)
    ext = None
    if cfg.embeddings:
        with stage("load_embeddings"), open(cfg.embeddings, encoding="utf-8") as fh:
            ext = ingest_embeddings(fh)
    return records, ext


def _load_mitigated(path):
    if not path:
        return None
    with stage("load_embeddings"), open(path, encoding="utf-8") as fh:
        return ingest_embeddings(fh)


def cmd_measure(cfg: RunConfig, grids, args) -> dict:
    records, ext = _load(cfg)

    def one(seed):
        _, _, g = training_graph(records, cfg, seed)
        H, k, Zhat, rep = measure_graph(g, cfg, seed, ext)
        d = rep.to_dict()
        d.update(seed=seed, nodes=g.n, edges=g.num_edges)
        return d

    per_seed = run_seeds(one, cfg.seeds)
    report = {"command": "measure", "config": cfg.to_dict(), "seeds": per_seed,
              "score": mean_std([r["score"] for r in per_seed])}
    _atomic_write(os.path.join(cfg.output, "report.json"), _json(report))
    return report


def _mitigation_runs(cfg, args, do_eval):
    records, ext = _load(cfg)
    ext_m = _load_mitigated(getattr(args, "mitigated_embeddings", None))
    return run_seeds(lambda s: run_seed(records, cfg, s, do_mitigate=True, do_eval=do_eval,
                                        external=ext, external_mitigated=ext_m), cfg.seeds)


def _seed_summary(run) -> dict:
    before, after = run.report.score, run.report_mitigated.score
    return {"seed": run.seed, "k": run.k, "P_before": before, "P_after": after,
            "delta_P_pct": delta_pct(after, before), "added_edges": len(run.plan.added_edges),
            "selected_pairs": [list(p) for p in run.plan.selected_pairs]}


def cmd_mitigate(cfg: RunConfig, grids, args) -> dict:
    runs = _mitigation_runs(cfg, args, do_eval=False)
    out = cfg.output
    for run in runs:
        buf = io.StringIO()
        write_edge_list(run.augmented, buf, header="augmented")
        _atomic_write(os.path.join(out, f"augmented_seed{run.seed}.tsv"), buf.getvalue())
        plan = run.plan.to_dict()
        plan["P_before"] = run.report.to_dict()
        plan["P_after"] = run.report_mitigated.to_dict()
        _atomic_write(os.path.join(out, f"plan_seed{run.seed}.json"), _json(plan))
    per_seed = [_seed_summary(r) for r in runs]
    report = {"command": "mitigate", "config": cfg.to_dict(), "seeds": per_seed,
              "P_before": mean_std([r["P_before"] for r in per_seed]),
              "P_after": mean_std([r["P_after"] for r in per_seed]),
              "delta_P_pct": mean_std([r["delta_P_pct"] for r in per_seed])}
    _atomic_write(os.path.join(out, "mitigation_report.json"), _json(report))
    return report


def table_row(runs) -> dict:
    """Seed-averaged baseline, mitigated and delta columns for accuracy, Macro-F1 and P."""
    def avg(values):
        return float(np.mean(values))
    acc_b = avg([r.eval_baseline.accuracy for r in runs])
    acc_m = avg([r.eval_mitigated.accuracy for r in runs])
    f1_b = avg([r.eval_baseline.macro_f1 for r in runs])
    f1_m = avg([r.eval_mitigated.macro_f1 for r in runs])
    p_b = avg([r.report.score for r in runs])
    p_m = avg([r.report_mitigated.score for r in runs])
    return {
        "accuracy": {"baseline": acc_b, "mitigated": acc_m, "delta_pct": delta_pct(acc_m, acc_b)},
        "macro_f1": {"baseline": f1_b, "mitigated": f1_m, "delta_pct": delta_pct(f1_m, f1_b)},
        "polarization": {"baseline": p_b, "mitigated": p_m, "delta_pct": delta_pct(p_m, p_b)},
        "std": {
            "accuracy_baseline": float(np.std([r.eval_baseline.accuracy for r in runs])),
            "accuracy_mitigated": float(np.std([r.eval_mitigated.accuracy for r in runs])),
            "macro_f1_baseline": float(np.std([r.eval_baseline.macro_f1 for r in runs])),
            "macro_f1_mitigated": float(np.std([r.eval_mitigated.macro_f1 for r in runs])),
            "polarization_baseline": float(np.std([r.report.score for r in runs])),
            "polarization_mitigated": float(np.std([r.report_mitigated.score for r in runs])),
        },
    }


def cmd_eval(cfg: RunConfig, grids, args) -> dict:
    runs = _mitigation_runs(cfg, args, do_eval=True)
    out = cfg.output
    base = {"config": cfg.to_dict(), "seeds": [dict(seed=r.seed, **r.eval_baseline.to_dict()) for r in runs]}
    mit = {"config": cfg.to_dict(), "seeds": [dict(seed=r.seed, **r.eval_mitigated.to_dict()) for r in runs]}
    _atomic_write(os.path.join(out, "eval_baseline.json"), _json(base))
    _atomic_write(os.path.join(out, "eval_mitigated.json"), _json(mit))
    summary = {"command": "eval", "config": cfg.to_dict(), "table": table_row(runs),
               "seeds": [_seed_summary(r) for r in runs]}
    _atomic_write(os.path.join(out, "eval_summary.json"), _json(summary))
    return summary


def cmd_sweep_eta(cfg: RunConfig, grids, args) -> dict:
    etas = grids.get("etas", [0.1, 0.3, 0.5, 0.7, 0.9])
    if len(etas) < 2:
        raise ValueError("sweep-eta needs at least two eta values")
    records, ext = _load(cfg)

    def one(seed):
        _, _, g = training_graph(records, cfg, seed)
        _, _, Zhat, _ = measure_graph(g, cfg, seed, ext)
        with stage("measure"):
            return [measure(g, Zhat, eta).score for eta in etas]

    scores = np.array(run_seeds(one, cfg.seeds))
    rows = [(eta, float(scores[:, t].mean()), float(scores[:, t].std())) for t, eta in enumerate(etas)]
    _atomic_write(os.path.join(cfg.output, "sweep_eta.csv"),
                  _csv(("eta", "polarization", "polarization_std"), rows))
    return {"rows": rows}


def _grid_rows(cfg, args, settings, names):
    if not settings:
        raise ValueError("empty parameter grid")
    records, ext = _load(cfg)
    ext_m = _load_mitigated(getattr(args, "mitigated_embeddings", None))
    rows = []
    for values in settings:
        sub = replace(cfg, **dict(zip(names, values)))
        runs = run_seeds(lambda s: run_seed(records, sub, s, do_mitigate=True, do_eval=True,
                                            external=ext, external_mitigated=ext_m), sub.seeds)
        t = table_row(runs)
        rows.append((*values, t["accuracy"]["mitigated"], t["macro_f1"]["mitigated"],
                     t["polarization"]["delta_pct"]))
    return rows


def cmd_sweep_gamma(cfg: RunConfig, grids, args) -> dict:
    gammas = grids.get("gammas", [0.5, 1.0, 1.5, 2.0])
    rows = _grid_rows(cfg, args, [(g,) for g in gammas], ("gamma",))
    _atomic_write(os.path.join(cfg.output, "sweep_gamma.csv"),
                  _csv(("gamma", "accuracy", "macro_f1", "delta_P"), rows))
    return {"rows": rows}


def cmd_sweep_pairs(cfg: RunConfig, grids, args) -> dict:
    taus = grids.get("taus", [0.5, 0.6, 0.7, 0.8, 0.9])
    dms = grids.get("d_maxes", [2, 3])
    rows = _grid_rows(cfg, args, [(t, d) for t in taus for d in dms], ("tau", "d_max"))
    _atomic_write(os.path.join(cfg.output, "sweep_pairs.csv"),
                  _csv(("tau", "d_max", "accuracy", "macro_f1", "delta_P"), rows))
    return {"rows": rows}


def _read_opinions(path) -> dict:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            node = int(parts[0]) if parts[0].lstrip("-").isdigit() else parts[0]
            out[node] = float(parts[1])
    return out


def cmd_temporal(cfg: RunConfig, grids, args) -> dict:
    records, _ = _load(cfg)
    with stage("snapshots"):
        snaps = cumulative_snapshots(records, cfg.num_snapshots, cfg.binning, cfg.conflict_policy)
    if args.opinions:
        opinions = _read_opinions(args.opinions)

        def one(seed):
            series = []
            for t, snap in zip(snaps.cut_times, snaps.snapshots):
                g = largest_connected_component(snap)
                L = signed_laplacian(g, 1.0)
                o = {u: opinions.get(u, 0.0) for u in g.node_list()}
                series.append((t, opinion_polarization(L, o)))
            return series
    else:
        def one(seed):
            with stage("temporal"):
                return temporal_polarization_curve(snaps, cfg.eta, builtin_embedder(cfg.dim), seed,
                                                   cfg.min_size, cfg.runs, cfg.k_override)

    curves = run_seeds(one, cfg.seeds)
    by_time = {}
    for curve in curves:
        for t, p in curve:
            by_time.setdefault(t, []).append(p)
    rows = [(t, float(np.mean(ps)), float(np.std(ps))) for t, ps in sorted(by_time.items())]
    _atomic_write(os.path.join(cfg.output, "temporal.csv"),
                  _csv(("time", "polarization", "polarization_std"), rows))
    return {"rows": rows}


HANDLERS = {
    "measure": cmd_measure, "mitigate": cmd_mitigate, "eval": cmd_eval, "sweep-eta": cmd_sweep_eta,
    "sweep-gamma": cmd_sweep_gamma, "sweep-pairs": cmd_sweep_pairs, "temporal": cmd_temporal,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg, grids = load_config(args)
    except (ValueError, TypeError, OSError) as exc:
        parser.error(str(exc))
    try:
        HANDLERS[args.command](cfg, grids, args)
    except StageError as exc:
        print(f"polman: error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        # precondition failures outside any pipeline stage
        print(f"polman: error: {exc}", file=sys.stderr)
        return 2
    print(f"polman {args.command}: wrote results to {cfg.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
