"""Command-line surface: one subcommand per operation, seed-deterministic.

Every command maps to a single library operation; all randomness flows from
the `--seed` flag. Defaults come from the bundled sample taxonomy and the
reference calibration; a JSON `--config` overrides them.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from importlib import resources
from pathlib import Path

from . import campaign, costmodel, evaluate, planner, taxonomy, workersim


def sample_taxonomy_path() -> Path:
    return Path(resources.files("annocamp").joinpath("data/sample_taxonomy.json"))


class Config:
    """Resolved defaults: taxonomy, time model, calibration, budget."""

    def __init__(self, doc: dict | None = None):
        self.doc = doc or {}

    @classmethod
    def load(cls, path: str | None) -> "Config":
        if path is None:
            return cls()
        return cls(json.loads(Path(path).read_text(encoding="utf-8")))

    def taxonomy_path(self, override: str | None = None) -> Path:
        if override:
            return Path(override)
        if "taxonomy" in self.doc:
            return Path(self.doc["taxonomy"])
        return sample_taxonomy_path()

    def taxonomy(self, override: str | None = None) -> taxonomy.Taxonomy:
        return taxonomy.load_taxonomy(self.taxonomy_path(override))

    def time_model(self) -> costmodel.TimeModel:
        if "time_model" in self.doc:
            tm = self.doc["time_model"]
            return costmodel.TimeModel(float(tm["a"]), float(tm["b"]))
        return costmodel.DEFAULT_TIME_MODEL

    def budget(self) -> costmodel.HitBudget:
        if "budget" in self.doc:
            b = self.doc["budget"]
            return costmodel.HitBudget(
                target_seconds=float(b.get("target_seconds", 150.0)),
                pay_per_hit=float(b.get("pay_per_hit", 0.40)),
            )
        return costmodel.HitBudget()

    def anchors(self) -> tuple[workersim.AccuracyAnchor, ...]:
        if "anchors" in self.doc:
            return tuple(
                workersim.AccuracyAnchor(
                    k=int(a["k"]),
                    recall=float(a["recall"]),
                    precision=float(a["precision"]),
                    iteration_minutes=float(a["iteration_minutes"]),
                )
                for a in self.doc["anchors"]
            )
        return workersim.DEFAULT_ANCHORS

    def correlation_targets(self):
        if "correlation_targets" in self.doc:
            return tuple((int(n), float(r)) for n, r in self.doc["correlation_targets"])
        return workersim.DEFAULT_MULTI_PASS_RECALL

    def behavior(self, fit_correlation: bool = True) -> workersim.WorkerBehavior:
        prevalence = float(self.doc.get("prevalence", workersim.DEFAULT_PREVALENCE))
        qtop = int(self.doc.get("qtop", workersim.DEFAULT_QTOP))
        behavior = workersim.calibrate(self.anchors(), prevalence=prevalence, qtop=qtop)
        if fit_correlation:
            behavior = workersim.fit_hard_mixture(
                behavior, k=qtop, targets=self.correlation_targets()
            )
        return behavior

    def modifiers(self) -> workersim.ModifierSet:
        doc = self.doc.get("modifiers", {})
        return workersim.ModifierSet(
            positive_bias=bool(doc.get("positive_bias", False)),
            grouping=bool(doc.get("grouping", False)),
            summary_prompt=bool(doc.get("summary_prompt", False)),
            forced_response=bool(doc.get("forced_response", False)),
        )


def _write_text(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text, encoding="utf-8")


def _write_csv(header, rows, out: str | None) -> None:
    if out is None:
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    else:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        with open(out, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)


def _fmt_opt(value) -> str:
    return "" if value is None else f"{value:.6f}"


def _modifiers_from_args(args, config: Config) -> workersim.ModifierSet:
    from_args = workersim.ModifierSet(
        positive_bias=args.positive_bias,
        grouping=args.grouping,
        summary_prompt=args.summary_prompt,
        forced_response=args.forced_response,
    )
    return from_args if from_args.any else config.modifiers()


def cmd_fit_time(args, config: Config) -> int:
    observations = costmodel.read_timings_csv(args.timings)
    model = costmodel.fit_time_model(observations)
    _write_text(model.to_json(), args.out)
    return 0


def cmd_calibrate(args, config: Config) -> int:
    behavior = config.behavior(fit_correlation=not args.independence)
    _write_text(json.dumps(workersim.behavior_to_dict(behavior), indent=2), args.out)
    return 0


def cmd_pack_hits(args, config: Config) -> int:
    tax = config.taxonomy(args.taxonomy)
    truths = workersim.load_truths(args.videos)
    plan = taxonomy.partition_questions(tax, args.k, args.seed)
    known = (
        {t.video_id: campaign.gate_positives(tax, t) for t in truths}
        if args.positive_bias
        else None
    )
    hits = campaign.pack_hits(
        [t.video_id for t in truths],
        plan,
        config.budget(),
        config.time_model(),
        args.seed,
        positive_bias=args.positive_bias,
        grouping=args.grouping,
        known_positives=known,
    )
    doc = [
        {
            "hit_id": h.hit_id,
            "subset_index": h.subset_index,
            "videos": list(h.video_ids),
            "slots": [
                [{"question": s.question_id, "gold": s.gold} for s in per_video]
                for per_video in h.slots
            ],
            "expected_seconds": h.expected_seconds,
            "pay": h.pay,
        }
        for h in hits
    ]
    _write_text(json.dumps(doc, indent=2), args.out)
    return 0


def cmd_simulate(args, config: Config) -> int:
    tax = config.taxonomy(args.taxonomy)
    truths = workersim.load_truths(args.videos)
    behavior = config.behavior()
    pool = (
        workersim.sample_worker_pool(args.workers, behavior, args.spammer_fraction, args.seed)
        if args.workers
        else None
    )
    events = campaign.run_campaign(
        tax,
        truths,
        args.k,
        args.iterations,
        behavior,
        args.seed,
        modifiers=_modifiers_from_args(args, config),
        model=config.time_model(),
        budget=config.budget(),
        pool=pool,
        threads=args.threads,
    )
    if args.out is None:
        raise SystemExit("simulate requires --out (event CSV path)")
    campaign.write_events_csv(events, args.out)
    return 0


def cmd_ingest(args, config: Config) -> int:
    tax = config.taxonomy(args.taxonomy)
    result = campaign.ingest(args.events, tax)
    header = ["worker", "tasks", "median_seconds", "gold_recall", "positive_rate"]
    rows = [
        [
            s.worker_id,
            s.tasks_completed,
            f"{s.median_seconds_per_task:.6f}",
            _fmt_opt(s.gold_recall),
            f"{s.positive_rate:.6f}",
        ]
        for s in result.stats
    ]
    _write_csv(header, rows, args.out)
    return 0


def cmd_aggregate(args, config: Config) -> int:
    tax = config.taxonomy(args.taxonomy)
    result = campaign.ingest(args.events, tax)
    matrix = evaluate.aggregate(result.events, tax)
    binary = matrix.binary(args.threshold)
    header = ["video", "label", "votes", "positive"]
    rows = []
    for row, video_id in enumerate(matrix.video_ids):
        for label in range(tax.label_count):
            votes = int(matrix.votes[row, label])
            if votes:
                rows.append([video_id, label, votes, int(binary[row, label])])
    _write_csv(header, rows, args.out)
    return 0


def cmd_metrics(args, config: Config) -> int:
    tax = config.taxonomy(args.taxonomy)
    truths = workersim.load_truths(args.videos)
    result = campaign.ingest(args.events, tax)
    matrix = evaluate.aggregate(result.events, tax)
    truth = evaluate.truth_matrix(truths, tax.label_count, matrix.video_ids)
    scored = evaluate.metrics(matrix.binary(args.threshold), truth)
    minutes, affirmative = evaluate.event_stats(result.events)
    header = [
        "experiment",
        "k",
        "iterations",
        "modifiers",
        "recall",
        "precision",
        "minutes_per_video",
    ]
    rows = [
        [
            args.experiment,
            args.k if args.k is not None else "",
            matrix.iterations,
            args.modifiers,
            _fmt_opt(scored.recall),
            _fmt_opt(scored.precision),
            f"{minutes:.6f}",
        ]
    ]
    _write_csv(header, rows, args.out)
    return 0


def cmd_plan(args, config: Config) -> int:
    behavior = config.behavior(fit_correlation=not args.independence)
    constraint = planner.BudgetConstraint(
        max_minutes_per_video=args.budget_minutes,
        min_precision=args.min_precision,
    )
    k_values = (
        [int(k) for k in args.k_values.split(",")] if args.k_values else None
    )
    if args.enumerate:
        if args.out is None:
            raise SystemExit("plan --enumerate requires --out (CSV path)")
        plans = planner.enumerate_plans(
            behavior,
            config.time_model(),
            constraint,
            k_values or [k for k, _ in behavior.recall_points],
            max_n=args.max_n or 10,
        )
        planner.write_plans_csv(plans, args.out)
        return 0
    plan = planner.optimize(
        behavior, config.time_model(), constraint, k_values=k_values, max_n=args.max_n
    )
    doc = dataclasses.asdict(plan)
    doc["modifiers"] = plan.modifiers.label()
    _write_text(json.dumps(doc, indent=2), args.out)
    return 0


def cmd_qc(args, config: Config) -> int:
    stats = []
    with open(args.stats, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            stats.append(
                campaign.WorkerStats(
                    worker_id=row["worker"],
                    tasks_completed=int(row["tasks"]),
                    median_seconds_per_task=float(row["median_seconds"]),
                    gold_recall=float(row["gold_recall"]) if row["gold_recall"] else None,
                    positive_rate=float(row["positive_rate"]),
                )
            )
    flags = campaign.qc_flag(
        stats, campaign.QcThresholds(mad_z=args.mad_z, min_workers=args.min_workers)
    )
    header = ["worker", "signal", "z"]
    rows = [
        [flag.worker_id, signal, f"{flag.z_scores[signal]:.4f}"]
        for flag in flags
        for signal in flag.signals
    ]
    _write_csv(header, rows, args.out)
    return 0


def cmd_verify_queue(args, config: Config) -> int:
    tax = config.taxonomy(args.taxonomy)
    result = campaign.ingest(args.events, tax)
    matrix = evaluate.aggregate(result.events, tax)
    done = set()
    if args.done:
        with open(args.done, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                done.add((row["video"], int(row["label"])))
    queue = campaign.build_verification_queue(
        matrix, threshold=args.threshold, already_verified=done
    )
    _write_csv(["video", "label"], [[t.video, t.label] for t in queue], args.out)
    return 0


def cmd_reproduce(args, config: Config) -> int:
    if args.out is None:
        raise SystemExit("reproduce requires --out (CSV path)")
    campaign.reproduce(args.name, args.seed, args.out, threads=args.threads)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master seed for all randomness")
    common.add_argument("--config", default=None, help="JSON config file")
    common.add_argument("--out", default=None, help="output path (default: stdout)")

    parser = argparse.ArgumentParser(
        prog="annocamp",
        description="Plan, simulate and evaluate multi-label video annotation campaigns.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit-time", parents=[common], help="fit the linear task-time model")
    p.add_argument("--timings", required=True, help="questions,seconds[,video_seconds] CSV")
    p.set_defaults(func=cmd_fit_time)

    p = sub.add_parser("calibrate", parents=[common], help="build the worker model")
    p.add_argument(
        "--independence",
        action="store_true",
        help="skip fitting the multi-pass difficulty mixture",
    )
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("pack-hits", parents=[common], help="pack videos into HIT specs")
    p.add_argument("--taxonomy", default=None)
    p.add_argument("--videos", required=True, help="ground-truth JSONL")
    p.add_argument("--k", type=int, required=True, help="questions per task")
    p.add_argument("--positive-bias", action="store_true")
    p.add_argument("--grouping", action="store_true")
    p.set_defaults(func=cmd_pack_hits)

    p = sub.add_parser("simulate", parents=[common], help="simulate an annotation campaign")
    p.add_argument("--taxonomy", default=None)
    p.add_argument("--videos", required=True, help="ground-truth JSONL")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--iterations", type=int, default=1)
    p.add_argument("--workers", type=int, default=0, help="worker pool size (0: one worker)")
    p.add_argument("--spammer-fraction", type=float, default=0.0)
    p.add_argument("--positive-bias", action="store_true")
    p.add_argument("--grouping", action="store_true")
    p.add_argument("--summary-prompt", action="store_true")
    p.add_argument("--forced-response", action="store_true")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("ingest", parents=[common], help="validate events, emit worker stats")
    p.add_argument("--taxonomy", default=None)
    p.add_argument("--events", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("aggregate", parents=[common], help="fold events into labels")
    p.add_argument("--taxonomy", default=None)
    p.add_argument("--events", required=True)
    p.add_argument("--threshold", type=int, default=1)
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("metrics", parents=[common], help="score aggregated labels vs truth")
    p.add_argument("--taxonomy", default=None)
    p.add_argument("--events", required=True)
    p.add_argument("--videos", required=True)
    p.add_argument("--threshold", type=int, default=1)
    p.add_argument("--experiment", default="adhoc")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--modifiers", default="none")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("plan", parents=[common], help="pick the best strategy for a budget")
    p.add_argument("--budget-minutes", type=float, required=True)
    p.add_argument("--min-precision", type=float, default=None)
    p.add_argument("--k-values", default=None, help="comma-separated interface sizes")
    p.add_argument("--max-n", type=int, default=None)
    p.add_argument("--independence", action="store_true")
    p.add_argument(
        "--enumerate",
        action="store_true",
        help="emit every feasible plan as CSV instead of the optimum",
    )
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("qc", parents=[common], help="flag outlier workers")
    p.add_argument("--stats", required=True, help="worker stats CSV from ingest")
    p.add_argument("--mad-z", type=float, default=3.0)
    p.add_argument("--min-workers", type=int, default=5)
    p.set_defaults(func=cmd_qc)

    p = sub.add_parser("verify-queue", parents=[common], help="queue predicted positives")
    p.add_argument("--taxonomy", default=None)
    p.add_argument("--events", required=True)
    p.add_argument("--threshold", type=int, default=1)
    p.add_argument("--done", default=None, help="CSV of already-verified video,label pairs")
    p.set_defaults(func=cmd_verify_queue)

    p = sub.add_parser("reproduce", parents=[common], help="run a bundled experiment")
    p.add_argument("name", choices=campaign.EXPERIMENTS)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_reproduce)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    config = Config.load(args.config)
    return args.func(args, config)


if __name__ == "__main__":
    sys.exit(main())
