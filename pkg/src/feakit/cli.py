"""Single entry point exposing the pipeline as subcommands.

Exit codes: 0 success, 1 operational failure, 2 usage/config error. Every
subcommand honors ``--config <path>`` and ``--seed``.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from collections import Counter
from pathlib import Path

from .client import ProtocolError, RequestError, ScriptExhaustedError, TransportError, client_from_config
from .config import ConfigError, RunConfig, load_config
from .dataset import balance_by_frequency, clean_dataset, compute_sample_id, read_jsonl, write_jsonl
from .evaluation import evaluate_run
from .grpo import export_training_batch, rollout_group
from .prompts import render_sft_prompt
from .review import DEFAULT_HOST, DEFAULT_PORT, ReviewStore, build_server
from .synthesis import SynthesisAborted, bootstrap_sft_set, iter_tasks, synthesize_sample, write_outcome_log

logger = logging.getLogger(__name__)

OPERATIONAL_ERRORS = (
    TransportError,
    RequestError,
    ProtocolError,
    ScriptExhaustedError,
    SynthesisAborted,
    OSError,
    ValueError,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="feakit", description="Facial emotion analysis pipeline toolkit.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="path to a key=value or JSON config file")
    common.add_argument("--seed", type=int, help="override the configured random seed")
    common.add_argument("--root", help="dataset root directory (images beside the JSONL files)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("id", parents=[common], help="compute the sample id for an identity triple")
    p.add_argument("--dataset", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("--question", required=True)

    p = sub.add_parser("validate", parents=[common], help="validate and clean unified-schema JSONL files")
    p.add_argument("data", nargs="+", help="JSONL files to validate")
    p.add_argument("--out", help="write dropped-record reports to this JSONL file")
    p.add_argument("--check-images", action="store_true", help="require image files under --root")

    p = sub.add_parser("balance", parents=[common], help="frequency-balance a corpus toward the median class count")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--key", choices=["emotion", "au"], default="emotion")

    p = sub.add_parser("synth", parents=[common], help="run the generate-filter-retry synthesis loop over a task file")
    p.add_argument("--tasks", required=True, help="unified-schema JSONL of gold-labeled tasks")
    p.add_argument("--out", required=True, help="accepted records JSONL")
    p.add_argument("--log", help="outcome log JSONL")
    p.add_argument("--mode", choices=["strict", "superset"])

    p = sub.add_parser("sft-bootstrap", parents=[common], help="collect n accepted samples for the SFT bootstrap set")
    p.add_argument("--tasks", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("-n", type=int, default=300, help="target number of accepted samples")
    p.add_argument("--mode", choices=["strict", "superset"])

    p = sub.add_parser("rollout", parents=[common], help="sample response groups, score, export advantage batch")
    p.add_argument("--data", required=True, help="gold records JSONL")
    p.add_argument("--out", required=True, help="training batch JSONL")
    p.add_argument("-G", "--group-size", type=int, dest="group_size")
    p.add_argument("--temperature", type=float, default=1.0)
    p.add_argument("--figures", help="directory for reward/advantage histograms")

    p = sub.add_parser("eval", parents=[common], help="evaluate a predictions file against a gold file")
    p.add_argument("--predictions", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--out", help="report JSON path")
    p.add_argument("--figures", help="directory for metric bar charts")
    p.add_argument("--judge", action="store_true", help="also compute the 0-10 judge score via the configured client")

    p = sub.add_parser("serve-review", parents=[common], help="serve the manual-inspection API and UI")
    p.add_argument("--candidates", required=True, help="candidate records JSONL")
    p.add_argument("--journal", help="decision journal path (default: <candidates>.journal.jsonl)")
    p.add_argument("--ui-dir", help="directory with the built review UI")
    p.add_argument("--host", default=DEFAULT_HOST)
    p.add_argument("--port", type=int, default=DEFAULT_PORT)
    p.add_argument("--export-approved", help="export accepted records to this path and exit")

    return parser


def _load(args: argparse.Namespace) -> RunConfig:
    config = load_config(args.config)
    if args.seed is not None:
        config.seed = args.seed
    if getattr(args, "root", None):
        config.root = args.root
    if getattr(args, "group_size", None):
        config.group_size = args.group_size
    if getattr(args, "mode", None):
        config.filter_mode = args.mode
    return config


def _resolve(path: str | None, config: RunConfig) -> str | None:
    """Relative file arguments resolve against --root when one is configured."""
    if path is None or config.root is None or Path(path).is_absolute():
        return path
    return str(Path(config.root) / path)


def cmd_id(args, config: RunConfig) -> int:
    print(compute_sample_id(args.dataset, args.image, args.question))
    return 0


def cmd_validate(args, config: RunConfig) -> int:
    image_root = config.root if args.check_images else None
    if args.check_images and image_root is None:
        raise ConfigError("missing config key: root (required by --check-images)")
    all_reports = []
    for data_path in (_resolve(p, config) for p in args.data):
        records, skipped = read_jsonl(data_path)
        kept, dropped = clean_dataset(records, config.au_vocab(), config.emotion_vocab(), image_root)
        issue_counts = Counter(code for report in dropped for code, _ in report.issues)
        print(f"{data_path}: {len(kept)} kept, {len(dropped)} dropped, {len(skipped)} malformed lines")
        for code, count in sorted(issue_counts.items()):
            print(f"  {code}: {count}")
        for report in dropped:
            print(f"  drop {report.record_id or '<no id>'}: " + "; ".join(msg for _, msg in report.issues))
        all_reports.extend(dropped)
    if args.out:
        with Path(_resolve(args.out, config)).open("w", encoding="utf-8") as fh:
            for report in all_reports:
                fh.write(json.dumps({"id": report.record_id, "issues": report.issues}, ensure_ascii=False) + "\n")
    return 0


def cmd_balance(args, config: RunConfig) -> int:
    records, skipped = read_jsonl(_resolve(args.data, config))
    if skipped:
        print(f"warning: skipped {len(skipped)} malformed lines", file=sys.stderr)
    balanced = balance_by_frequency(records, key=args.key, seed=config.seed)
    write_jsonl(balanced, _resolve(args.out, config))
    if args.key == "emotion":
        before = Counter(r.primary_label() for r in records)
        after = Counter(r.primary_label() for r in balanced)
    else:
        before = Counter(t for r in records for t in r.aus)
        after = Counter(t for r in balanced for t in r.aus)
    print(f"balanced {len(records)} -> {len(balanced)} records (key={args.key}, seed={config.seed})")
    for label in sorted(before):
        print(f"  {label}: {before[label]} -> {after.get(label, 0)}")
    return 0


def cmd_synth(args, config: RunConfig) -> int:
    client = client_from_config(config.require_endpoint())
    records, _ = read_jsonl(_resolve(args.tasks, config))
    outcomes = []
    accepted = []
    for task in iter_tasks(records):
        outcome = synthesize_sample(
            task,
            client,
            config.retry,
            config.filter_mode,
            config.generation_params(),
            config.au_vocab(),
            config.emotion_vocab(),
        )
        outcomes.append(outcome)
        if outcome.accepted_record is not None:
            accepted.append(outcome.accepted_record)
    write_jsonl(accepted, _resolve(args.out, config))
    if args.log:
        write_outcome_log(outcomes, _resolve(args.log, config))
    print(f"accepted {len(accepted)}/{len(outcomes)} tasks -> {args.out}")
    return 0


def cmd_sft_bootstrap(args, config: RunConfig) -> int:
    client = client_from_config(config.require_endpoint())
    records, _ = read_jsonl(_resolve(args.tasks, config))
    accepted = bootstrap_sft_set(
        iter_tasks(records),
        client,
        config.retry,
        args.n,
        config.filter_mode,
        config.generation_params(),
        config.au_vocab(),
        config.emotion_vocab(),
    )
    write_jsonl(accepted, _resolve(args.out, config))
    if len(accepted) < args.n:
        print(f"shortfall: only {len(accepted)} of {args.n} requested samples accepted", file=sys.stderr)
    print(f"bootstrap set: {len(accepted)} records -> {args.out}")
    return 0


def cmd_rollout(args, config: RunConfig) -> int:
    client = client_from_config(config.require_endpoint())
    records, _ = read_jsonl(_resolve(args.data, config))
    emo_vocab = config.emotion_vocab()
    au_vocab = config.au_vocab()
    params = config.generation_params(temperature=args.temperature)
    groups = []
    for record in records:
        if not record.aus or not record.labels:
            logger.warning("skipping %s: rollout needs gold AUs and a label", record.id)
            continue
        prompt = render_sft_prompt(record.question, emo_vocab)
        groups.append(
            rollout_group(prompt, record, config.group_size, params, client, config.reward, au_vocab, emo_vocab)
        )
    batch_path = _resolve(args.out, config)
    count = export_training_batch(groups, batch_path)
    print(f"exported {count} responses across {len(groups)} groups (G={config.group_size}) -> {batch_path}")
    if args.figures:
        from .report import save_batch_figures

        for path in save_batch_figures(batch_path, _resolve(args.figures, config)):
            print(f"figure: {path}")
    return 0


def cmd_eval(args, config: RunConfig) -> int:
    judge_client = None
    if args.judge:
        judge_client = client_from_config(config.require_endpoint())
    report = evaluate_run(
        _resolve(args.predictions, config),
        _resolve(args.gold, config),
        config.au_vocab(),
        config.emotion_vocab(),
        report_path=_resolve(args.out, config),
        judge_client=judge_client,
        judge_params=config.generation_params(temperature=0.0) if judge_client else None,
    )
    print(f"joined {report.counts['joined']} rows "
          f"({report.counts['orphan_predictions']} orphan predictions, "
          f"{report.counts['unmatched_gold']} unmatched gold)")
    print(f"AU F1 avg: {report.per_au_f1_avg:.4f}")
    print(f"accuracy: micro {report.micro_accuracy:.4f}, macro {report.macro_accuracy:.4f}")
    print(f"ROUGE-L mean: {report.rouge_l_mean:.4f}")
    if report.rege is not None:
        print(f"REGE: {report.rege:.2f}")
    if report.judge_mean is not None:
        print(f"judge mean: {report.judge_mean:.2f}")
    if args.out:
        print(f"report: {args.out}")
    if args.figures:
        from .report import save_eval_figures

        for path in save_eval_figures(report, _resolve(args.figures, config)):
            print(f"figure: {path}")
    return 0


def cmd_serve_review(args, config: RunConfig) -> int:
    candidates = _resolve(args.candidates, config)
    journal = _resolve(args.journal, config) or f"{candidates}.journal.jsonl"
    store = ReviewStore(candidates, journal)
    if args.export_approved:
        out_path = _resolve(args.export_approved, config)
        count = store.export_approved(out_path)
        print(f"exported {count} approved records -> {out_path}")
        return 0
    server = build_server(store, image_root=config.root, ui_dir=args.ui_dir, host=args.host, port=args.port)
    print(f"review service on http://{args.host}:{server.server_address[1]} "
          f"({store.stats()['total']} items, journal: {journal})")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()
    return 0


HANDLERS = {
    "id": cmd_id,
    "validate": cmd_validate,
    "balance": cmd_balance,
    "synth": cmd_synth,
    "sft-bootstrap": cmd_sft_bootstrap,
    "rollout": cmd_rollout,
    "eval": cmd_eval,
    "serve-review": cmd_serve_review,
}


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        config = _load(args)
        return HANDLERS[args.command](args, config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OPERATIONAL_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
