"""Command-line entry point: ``otocsim {oracle,run,sweep,gibbs,validate}``."""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .dynamics import XXZParams, build_xxz
from .harness import (
    ExperimentConfig,
    format_number,
    load_config,
    oracle_table,
    paper_default_config,
    run_sweep,
    table_to_csv,
    table_to_json,
    validate,
    write_outputs,
)
from .oracle import ORACLE_COLUMNS
from .thermal import GibbsSpec, OptimizerConfig, TFDAnsatz, vqa_optimize


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", help="flat key = value config file")
    p.add_argument("--delta", type=float, help="restrict the sweep to one anisotropy")
    p.add_argument("--beta", type=float)
    p.add_argument("--shots", type=int)
    p.add_argument("--reps", type=int)
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--theta", type=float, help="ISM coupling strength")
    p.add_argument("--exact-gates", action="store_true", help="dense propagators instead of Trotter circuits")
    p.add_argument("--workers", type=int)
    p.add_argument("--out", metavar="PATH", help="output path (extension optional); stdout if omitted")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="otocsim", description="Simulate OTOC measurement protocols on an XXZ chain.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (("oracle", "exact C, Re F and Im F over the grid"),
                        ("run", "one protocol over the configured grid"),
                        ("sweep", "every configured protocol over the grid"),
                        ("gibbs", "variational thermal-state preparation report")):
        p = sub.add_parser(name, help=help_)
        _common(p)
        if name == "run":
            p.add_argument("--protocol", required=True, type=str.upper, choices=("RTM", "WMM", "ISM"))
        else:
            p.add_argument("--protocol", type=str.upper, choices=("RTM", "WMM", "ISM"), help=argparse.SUPPRESS)
    p = sub.add_parser("validate", help="identity and agreement self-checks; nonzero exit on failure")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--seed", type=int, default=0)
    return parser


def effective_config(args: argparse.Namespace) -> ExperimentConfig:
    """Defaults, then the config file, then command-line flags."""
    cfg = load_config(args.config) if args.config else paper_default_config()
    overrides = {}
    if args.delta is not None:
        overrides["deltas"] = [args.delta]
    for flag, key in (("beta", "beta"), ("shots", "shots"), ("reps", "reps"), ("seed", "master_seed"),
                      ("theta", "theta"), ("workers", "workers")):
        val = getattr(args, flag)
        if val is not None:
            overrides[key] = val
    if args.exact_gates:
        overrides["evolution_mode"] = "exact-gate"
    if getattr(args, "protocol", None):
        overrides["protocols"] = [args.protocol]
    if args.out:
        overrides["output_path"] = args.out
    return replace(cfg, **overrides) if overrides else cfg


def _emit(text: str) -> None:
    sys.stdout.write(text)
    if not text.endswith("\n"):
        sys.stdout.write("\n")


def _cmd_oracle(args, cfg: ExperimentConfig) -> int:
    rows = oracle_table(cfg)
    if args.format == "json":
        text = json.dumps({"config": cfg.to_dict(), "rows": rows}, indent=2)
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(ORACLE_COLUMNS)
        for r in rows:
            w.writerow([format_number(r[c]) for c in ORACLE_COLUMNS])
        text = buf.getvalue()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        _emit(text)
    return 0


def _cmd_sweep(args, cfg: ExperimentConfig) -> int:
    table = run_sweep(cfg)
    if args.out:
        for path in write_outputs(table, args.out, (args.format,)):
            logging.info("wrote %s", path)
    else:
        _emit(table_to_json(table) if args.format == "json" else table_to_csv(table))
    return 0


def _cmd_gibbs(args, cfg: ExperimentConfig) -> int:
    reports = []
    for di, delta in enumerate(cfg.deltas):
        H = build_xxz(XXZParams(cfg.n, delta, cfg.field_strength(delta)))
        res = vqa_optimize(GibbsSpec(H, cfg.beta), TFDAnsatz(cfg.n, cfg.vqa_layers_a, cfg.vqa_layers_s),
                           OptimizerConfig(max_evals=cfg.vqa_max_evals, seed=cfg.master_seed + di))
        reports.append(json.loads(res.to_json()))
    text = json.dumps(reports, indent=2)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        _emit(text)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.command == "validate":
        report = validate(seed=args.seed)
        _emit(report.to_json() if args.format == "json" else "\n".join(report.lines()))
        return 0 if report.passed else 1
    try:
        cfg = effective_config(args)
    except (OSError, ValueError) as exc:
        print(f"otocsim: {exc}", file=sys.stderr)
        return 2
    handler = {"oracle": _cmd_oracle, "run": _cmd_sweep, "sweep": _cmd_sweep, "gibbs": _cmd_gibbs}[args.command]
    return handler(args, cfg)


if __name__ == "__main__":
    sys.exit(main())
