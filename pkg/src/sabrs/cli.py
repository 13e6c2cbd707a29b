"""Command line front end: ``sabrs plan|validate|replay|bench|plot|models``."""

from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import os
import re
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

from . import envs
from .explore import ExploreParams
from .export import (ExportError, certificate_document, dumps, load_strategy, read_json, run_report,
                     strategy_document, write_json)
from .nhs import ModelError
from .planner import WINNING, PlannerConfig, run
from .rrt import rrt_baseline
from .svg import render
from .validate import ReplayMismatch, verify_winning

log = logging.getLogger("sabrs")

BENCH_COLUMNS = ["algorithm", "env", "trials", "successes", "success_pct", "mean_time_s", "std_err_s",
                 "mean_expansions"]


def _setup_logging():
    level = os.environ.get("SABRS_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")


def parse_seeds(text: str) -> list[int]:
    """``"3"``, ``"0-19"`` or ``"1,5,9"``."""
    out = []
    for part in filter(None, (p.strip() for p in text.split(","))):
        m = re.fullmatch(r"(\d+)-(\d+)", part)
        if m:
            out.extend(range(int(m[1]), int(m[2]) + 1))
        elif part.isdigit():
            out.append(int(part))
        else:
            raise argparse.ArgumentTypeError(f"bad seed list {text!r}")
    if len(set(out)) != len(out):
        raise argparse.ArgumentTypeError("seeds must be distinct")
    return out


def _warm(text):
    if text in ("off", "goal"):
        return text
    v = float(text)
    if v < 0:
        raise argparse.ArgumentTypeError("warm start seconds must be >= 0")
    return v


def _planner_args(p):
    p.add_argument("--k", type=int, default=5000, help="expansions per selected strategy")
    p.add_argument("--e", type=float, default=0.0005, help="exploration constant")
    p.add_argument("--time-limit", type=float, default=60.0, help="wall-clock budget in seconds")
    p.add_argument("--warm-start", type=_warm, default="goal", help="off, goal or a number of seconds")
    p.add_argument("--guided-prob", type=float, default=0.1)
    p.add_argument("--prune-prob", type=float, default=0.05)
    p.add_argument("--t-prop", type=float, default=2.0, help="maximum propagation duration")
    p.add_argument("--max-iterations", type=int, default=None)


def _config(a, seed) -> PlannerConfig:
    return PlannerConfig(k=a.k, e=a.e, t_max=a.time_limit, warm_start=a.warm_start, guided_prob=a.guided_prob,
                         prune_prob=a.prune_prob, explore=ExploreParams(t_prop=a.t_prop), seed=seed,
                         max_iterations=a.max_iterations)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sabrs", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="synthesise a strategy")
    p.add_argument("--model", required=True, help="built-in model name or model file")
    p.add_argument("--seed", type=int, default=0)
    _planner_args(p)
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--anytime", action="store_true", help="exit 0 even without a winning strategy")
    p.add_argument("--plot", action="store_true", help="also write strategy.svg")
    p.add_argument("--full-tree", action="store_true", help="export every tree node")

    p = sub.add_parser("validate", help="certify an exported strategy")
    p.add_argument("strategy")
    p.add_argument("--out", default=None, help="certificate file (default: stdout)")

    p = sub.add_parser("replay", help="print the execution branches of an exported strategy")
    p.add_argument("strategy")
    p.add_argument("--csv", default=None, help="write sampled trajectories to this file")

    p = sub.add_parser("bench", help="seeded success-rate table")
    p.add_argument("--model", "--models", dest="models", required=True, help="comma-separated model names")
    p.add_argument("--algorithms", default="sabrs,rrt")
    p.add_argument("--seeds", type=parse_seeds, default=parse_seeds("0-19"))
    _planner_args(p)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default=None, help="CSV file (default: stdout)")

    p = sub.add_parser("plot", help="draw an exported strategy as SVG")
    p.add_argument("strategy")
    p.add_argument("--out", default=None)

    p = sub.add_parser("models", help="list built-in models")
    p.add_argument("--write", default=None, help="dump every built-in model as YAML into this directory")
    return ap


# --- commands -----------------------------------------------------------------

def cmd_plan(a) -> int:
    model = envs.load_model(a.model)
    cfg = _config(a, a.seed)
    res = run(model, cfg)
    cert = verify_winning(model, res.strategy, res.tree)
    if res.status == WINNING and not cert.certified:
        log.error("planner reported a winning strategy that failed certification")
        res.status = "uncertified"
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    meta = {"seed": a.seed, "status": res.status, "root_cost": res.root_cost}
    doc = strategy_document(model, res.tree, res.strategy, full_tree=a.full_tree, meta=meta)
    write_json(out / "strategy.json", doc)
    write_json(out / "report.json", run_report(model, cfg, res, cert))
    write_json(out / "certificate.json", certificate_document(model, cert))
    if a.plot:
        (out / "strategy.svg").write_text(render(model, cert.branches, model.name), encoding="utf-8")
    print(f"{model.name}: {res.status}, root cost {res.root_cost:.4f}, {len(res.tree)} nodes, "
          f"{res.iterations} iterations, {res.wall_time:.2f}s, certified={cert.certified}")
    return 0 if cert.certified or a.anytime else 1


def _load(path):
    return load_strategy(read_json(path))


def cmd_validate(a) -> int:
    model, tree, st = _load(a.strategy)
    cert = verify_winning(model, st, tree)
    text = dumps(certificate_document(model, cert))
    if a.out:
        Path(a.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0 if cert.certified else 1


def cmd_replay(a) -> int:
    model, tree, st = _load(a.strategy)
    cert = verify_winning(model, st, tree)
    for i, b in enumerate(cert.branches):
        modes = " -> ".join(model.modes[q].name for q in b.modes())
        print(f"branch {i}: {b.terminal} after {b.end_time:.2f}s via {modes}")
    if a.csv:
        with open(a.csv, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["branch", "time", "mode"] + [f"x{d}" for d in range(max(m.dim for m in model.modes))])
            for i, b in enumerate(cert.branches):
                for t, q, x in b.samples():
                    w.writerow([i, repr(t), model.modes[q].name] + [repr(v) for v in x])
    return 0 if cert.certified else 1


def cmd_plot(a) -> int:
    model, tree, st = _load(a.strategy)
    cert = verify_winning(model, st, tree)
    svg = render(model, cert.branches, model.name)
    out = a.out or str(Path(a.strategy).with_suffix(".svg"))
    Path(out).write_text(svg, encoding="utf-8")
    print(f"wrote {out} ({cert.n_branches} branches)")
    return 0


def bench_trial(algorithm: str, name: str, seed: int, cfg: PlannerConfig) -> tuple:
    """One seeded trial; returns ``(certified, wall time, expansions)``."""
    model = envs.load_model(name)
    if algorithm == "sabrs":
        res = run(model, replace(cfg, seed=seed))
    elif algorithm == "rrt":
        res = rrt_baseline(model, t_max=cfg.t_max, seed=seed, params=cfg.explore)
    else:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    return verify_winning(model, res.strategy, res.tree).certified, res.wall_time, res.expansions


def bench_table(rows) -> list[dict]:
    """Aggregate ``(algorithm, env, certified, time, expansions)`` trial rows."""
    groups: dict = {}
    for alg, env, ok, t, n in rows:
        groups.setdefault((alg, env), []).append((ok, t, n))
    table = []
    for (alg, env), trials in groups.items():
        wins = [(t, n) for ok, t, n in trials if ok]
        row = {"algorithm": alg, "env": env, "trials": len(trials), "successes": len(wins),
               "success_pct": f"{100.0 * len(wins) / len(trials):.1f}"}
        if wins:
            times = [t for t, _ in wins]
            se = statistics.stdev(times) / math.sqrt(len(times)) if len(times) > 1 else 0.0
            row.update(mean_time_s=f"{statistics.fmean(times):.3f}", std_err_s=f"{se:.3f}",
                       mean_expansions=f"{statistics.fmean(n for _, n in wins):.1f}")
        else:
            row.update(mean_time_s="—", std_err_s="—", mean_expansions="—")
        table.append(row)
    return table


def format_table(table) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=BENCH_COLUMNS, lineterminator="\n")
    w.writeheader()
    w.writerows(table)
    return buf.getvalue()


def cmd_bench(a) -> int:
    names = [n.strip() for n in a.models.split(",") if n.strip()]
    algs = [s.strip() for s in a.algorithms.split(",") if s.strip()]
    if not a.seeds:
        raise SystemExit("bench needs at least one seed")
    cfg = _config(a, 0)
    jobs = [(alg, name, seed) for name in names for alg in algs for seed in a.seeds]
    if a.jobs > 1:
        with ProcessPoolExecutor(a.jobs) as ex:
            results = list(ex.map(bench_trial, *zip(*jobs), [cfg] * len(jobs)))
    else:
        results = [bench_trial(alg, name, seed, cfg) for alg, name, seed in jobs]
    rows = [(alg, name, *r) for (alg, name, _), r in zip(jobs, results)]
    text = format_table(bench_table(rows))
    if a.out:
        Path(a.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_models(a) -> int:
    if a.write:
        for p in envs.write_models(a.write):
            print(p)
        return 0
    for name in envs.model_names():
        print(name)
    return 0


COMMANDS = {
    "plan": cmd_plan,
    "validate": cmd_validate,
    "replay": cmd_replay,
    "bench": cmd_bench,
    "plot": cmd_plot,
    "models": cmd_models,
}


def main(argv=None) -> int:
    _setup_logging()
    a = build_parser().parse_args(argv)
    try:
        return COMMANDS[a.command](a)
    except (ModelError, ExportError, ReplayMismatch, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
