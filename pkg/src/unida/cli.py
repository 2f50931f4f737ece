"""Command-line entry point.

Subcommands: calibrate, train, distill, zero-shot, evaluate, run, report.
Every data-facing subcommand reads a key=value experiment config (see
:mod:`unida.runner`) and writes its artifacts under ``--out``.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from .calibration import CalibrationResult
from .exceptions import ConfigError, UnidaError
from .metrics import EvalReport
from .runner import (
    DISTILL,
    DISTILL_FIXED,
    ZERO_SHOT,
    AggregateReport,
    ExperimentConfig,
    aggregate,
    emit_tables,
    parse_config,
    prepare_pipeline,
    run_seed,
)
from .scoring import NEG_ENTROPY, ScoreRule, default_threshold, head_logits, predict_with_reject
from .training import load_linear_head, save_linear_head, train_source_only, distill as distill_head
from .metrics import evaluate as evaluate_metrics

NOTES = (
    "nll term is a per-sample mean; "
    "nmi compares predicted labels (OUT as one cluster) against private-class "
    "ground truth on target-private samples only"
)


def _load_config(args) -> ExperimentConfig:
    config = parse_config(args.config)
    if getattr(args, "seeds", None):
        seeds = tuple(int(s) for s in args.seeds.split(",") if s.strip())
        config = dataclasses.replace(config, seeds=seeds)
    return config


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_calibration(out: Path, name: str, result: CalibrationResult) -> None:
    lines = [
        f"tau_opt={result.tau_opt!r}",
        f"ece_in={result.ece_in!r}",
        f"ece_out={result.ece_out!r}",
        f"nll_in={result.nll_in!r}",
        f"objective={result.objective!r}",
        f"n_bins={result.bins_in.n_bins}",
        f"notes={NOTES}",
    ]
    (out / f"calibration_{name}.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    bins = result.bins_in
    rows = ["bin_lo,bin_hi,count,conf,acc"]
    for i in range(bins.n_bins):
        rows.append(
            f"{bins.edges[i]!r},{bins.edges[i + 1]!r},{bins.counts[i]},"
            f"{bins.mean_confidence[i]!r},{bins.mean_accuracy[i]!r}"
        )
    (out / f"calibration_bins_{name}.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")


def _write_curve(out: Path, run_id: str, report: EvalReport) -> None:
    if not report.curve:
        return
    rows = ["theta,ccr,fpr"]
    rows += [f"{p.threshold!r},{p.ccr!r},{p.fpr!r}" for p in report.curve]
    (out / f"curve_{run_id}.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")


def _write_aggregate(out: Path, agg: AggregateReport) -> None:
    (out / "report.csv").write_text(emit_tables([agg], "csv"), encoding="utf-8")
    (out / f"aggregate_{agg.name}.json").write_text(agg.to_json() + "\n", encoding="utf-8")


def cmd_calibrate(args) -> int:
    config = _load_config(args)
    if config.method not in (DISTILL, DISTILL_FIXED):
        config = dataclasses.replace(config, method=DISTILL_FIXED, tau_override=None)
    ctx = prepare_pipeline(config)
    if ctx.calibration is None:
        raise ConfigError("calibration was skipped (tau_override set?)")
    out = _outdir(args)
    _write_calibration(out, config.name, ctx.calibration)
    print(f"tau_opt={ctx.calibration.tau_opt:.6g} objective={ctx.calibration.objective:.6g}")
    return 0


def cmd_train(args) -> int:
    config = _load_config(args)
    ctx = prepare_pipeline(dataclasses.replace(config, method="source_only"))
    out = _outdir(args)
    for seed in config.seeds:
        trace = train_source_only(ctx.source_view, dataclasses.replace(config.train, seed=seed))
        head_file = out / f"head_{config.name}_seed{seed}.udfs"
        save_linear_head(head_file, trace.head, {"method": "source_only", "seed": str(seed)})
        print(f"seed {seed}: final loss {trace.losses[-1]:.6f} -> {head_file}")
    return 0


def cmd_distill(args) -> int:
    config = _load_config(args)
    ctx = prepare_pipeline(dataclasses.replace(config, method=DISTILL))
    out = _outdir(args)
    if ctx.calibration is not None:
        _write_calibration(out, config.name, ctx.calibration)
    for seed in config.seeds:
        trace = distill_head(ctx.target_view.without_labels(), ctx.teacher_target,
                             ctx.tau, dataclasses.replace(config.train, seed=seed))
        head_file = out / f"head_{config.name}_seed{seed}.udfs"
        save_linear_head(head_file, trace.head,
                         {"method": DISTILL, "seed": str(seed), "tau": repr(ctx.tau)})
        print(f"seed {seed}: tau {ctx.tau:.6g}, final loss {trace.losses[-1]:.6f} -> {head_file}")
    return 0


def cmd_zero_shot(args) -> int:
    config = dataclasses.replace(_load_config(args), method=ZERO_SHOT)
    ctx = prepare_pipeline(config)
    report = run_seed(ctx, config.seeds[0])
    agg = aggregate(config, [report], None)
    out = _outdir(args)
    _write_aggregate(out, agg)
    _write_curve(out, f"{config.name}_seed{config.seeds[0]}", report)
    print(emit_tables([agg], "csv"), end="")
    return 0


def cmd_evaluate(args) -> int:
    config = _load_config(args)
    head_path = args.head or config.head_path
    if not head_path:
        raise ConfigError("evaluate needs --head or head_path in the config")
    config = dataclasses.replace(config, method="source_only")
    ctx = prepare_pipeline(config)
    head, _ = load_linear_head(head_path)
    logits = head_logits(head, ctx.target_view)
    rule = ScoreRule(NEG_ENTROPY, default_threshold(NEG_ENTROPY, ctx.split.n_source_classes))
    predictions, scores = predict_with_reject(logits, 1.0, rule)
    report = evaluate_metrics(predictions, scores, ctx.target_view.original_labels, ctx.split,
                              argmax_predictions=logits.argmax(axis=1))
    agg = aggregate(config, [report], None)
    out = _outdir(args)
    _write_aggregate(out, agg)
    _write_curve(out, config.name, report)
    print(emit_tables([agg], "csv"), end="")
    return 0


def cmd_run(args) -> int:
    config = _load_config(args)
    ctx = prepare_pipeline(config)
    reports = [run_seed(ctx, seed) for seed in config.seeds]
    tau = ctx.tau if config.method in (DISTILL, DISTILL_FIXED) else None
    agg = aggregate(config, reports, tau)
    out = _outdir(args)
    _write_aggregate(out, agg)
    for seed, report in zip(config.seeds, reports):
        _write_curve(out, f"{config.name}_seed{seed}", report)
    if ctx.calibration is not None:
        _write_calibration(out, config.name, ctx.calibration)
    print(emit_tables([agg], "csv"), end="")
    return 0


def cmd_report(args) -> int:
    out = Path(args.out)
    files = sorted(out.rglob("aggregate_*.json"))
    if not files:
        raise ConfigError(f"no aggregate_*.json files under {out}")
    aggs = [AggregateReport.from_json(f.read_text(encoding="utf-8")) for f in files]
    table = emit_tables(aggs, args.format)
    suffix = "csv" if args.format == "csv" else "md"
    (out / f"report.{suffix}").write_text(table, encoding="utf-8")
    print(table, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="unida",
                                     description="Universal domain adaptation on frozen embeddings")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, needs_config=True):
        p = sub.add_parser(name)
        if needs_config:
            p.add_argument("--config", required=True, help="experiment config file")
            p.add_argument("--seeds", help="comma-separated seed override, e.g. 0,1,2")
        p.add_argument("--out", default=".", help="output directory")
        p.set_defaults(fn=fn)
        return p

    add("calibrate", cmd_calibrate)
    add("train", cmd_train)
    add("distill", cmd_distill)
    add("zero-shot", cmd_zero_shot)
    eval_p = add("evaluate", cmd_evaluate)
    eval_p.add_argument("--head", help="path to a serialized linear head")
    add("run", cmd_run)
    report_p = add("report", cmd_report, needs_config=False)
    report_p.add_argument("--format", choices=("csv", "markdown"), default="csv")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except UnidaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
