"""Command-line surface: train, predict, score, synth.

Every command is driven by a JSON config file; repeated ``--set
key.path=value`` flags override individual keys.  Exit codes: 0 success,
1 usage error, 2 data or format error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import torch

from .corpus import SynthConfig, generate_synthetic, load_corpus, save_corpus, split_corpus
from .errors import (
    AlignmentError,
    CheckpointError,
    ConfigError,
    FormatError,
    InvalidInput,
    SchemaError,
)
from .evaluator import PARTITIONS, breakdown, render_table, score
from .encoder import EncoderConfig
from .frame_codec import LabelSchema, encode_frames
from .inferencer import extract_events, load_predictions, prediction_record, write_predictions
from .trainer import TrainConfig, evaluate, load_checkpoint, save_checkpoint, train


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would sys.exit(2); we map usage errors to 1
        raise UsageError(message)


def _load_json(path, what: str) -> dict:
    if not os.path.exists(path):
        raise UsageError(f"{what} file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{what} file {path} is not valid JSON: {exc.msg}") from None


def _apply_overrides(cfg: dict, overrides: list[str]) -> dict:
    for item in overrides:
        if "=" not in item:
            raise UsageError(f"--set expects key.path=value, got {item!r}")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = cfg
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise UsageError(f"--set path {key!r} crosses a non-object value")
        node[parts[-1]] = value
    return cfg


def _dataclass_from(cls, section: dict, what: str):
    try:
        return cls(**section)
    except TypeError as exc:
        unknown = sorted(set(section) - {f for f in cls.__dataclass_fields__})
        if unknown:
            raise UsageError(f"unknown {what} config key(s): {', '.join(unknown)}") from None
        raise UsageError(f"bad {what} config: {exc}") from None
    except ConfigError as exc:
        raise UsageError(f"bad {what} config: {exc}") from None


def _require(cfg: dict, key: str):
    if key not in cfg:
        raise UsageError(f"config is missing required key {key!r}")
    return cfg[key]


def _load_schema(path) -> LabelSchema:
    return LabelSchema.from_dict(_load_json(path, "schema"))


def cmd_train(args) -> int:
    cfg = _apply_overrides(_load_json(args.config, "config"), args.set or [])
    schema = _load_schema(_require(cfg, "schema_path"))
    train_path, dev_path = _require(cfg, "train_path"), _require(cfg, "dev_path")
    out_dir = _require(cfg, "out_dir")
    for p in (train_path, dev_path):
        if not os.path.exists(p):
            raise UsageError(f"corpus file not found: {p}")
    train_examples = load_corpus(train_path, schema)
    dev_examples = load_corpus(dev_path, schema)

    train_section = dict(cfg.get("train", {}))
    if "max_tuples" not in train_section:
        longest = max((len(ex.gold) for ex in train_examples + dev_examples), default=1)
        train_section["max_tuples"] = longest + 1  # keep one null slot for the stop signal
    train_config = _dataclass_from(TrainConfig, train_section, "train")

    encoder_section = dict(cfg.get("encoder", {}))
    encoder_section.setdefault("dropout", train_config.dropout)
    encoder_config = _dataclass_from(EncoderConfig, encoder_section, "encoder")
    d_p = int(cfg.get("decoder", {}).get("d_p", 968))
    dtype = {"float32": torch.float32, "float64": torch.float64}.get(cfg.get("dtype", "float32"))
    if dtype is None:
        raise UsageError(f"unsupported dtype {cfg.get('dtype')!r}")

    os.makedirs(out_dir, exist_ok=True)
    log_path = os.path.join(out_dir, "train_log.jsonl")
    with open(log_path, "w", encoding="utf-8") as log_fh:
        def log_fn(entry):
            log_fh.write(json.dumps(entry) + "\n")
            log_fh.flush()
            print(
                f"epoch {entry['epoch']:3d}  loss {entry['train_loss']:.4f}  "
                f"dev ARC F1 {entry['dev_arc_f1']:.3f}"
            )

        result = train(train_examples, dev_examples, schema, train_config,
                       encoder_config, d_p=d_p, dtype=dtype, log_fn=log_fn)

    ckpt_path = os.path.join(out_dir, "checkpoint.pt")
    save_checkpoint(ckpt_path, result.model, train_config=train_config,
                    config_echo=cfg, log=result.log)
    with open(os.path.join(out_dir, "config.json"), "w", encoding="utf-8") as fh:
        json.dump(cfg, fh, indent=2, sort_keys=True)

    report = evaluate(result.model, dev_examples, max_steps=train_config.max_tuples)
    print(f"best epoch {result.best_epoch} (dev ARC F1 {result.best_dev_arc:.3f})")
    print(render_table(report, title="dev"))
    print(f"checkpoint written to {ckpt_path}")
    return 0


def cmd_predict(args) -> int:
    model, payload = load_checkpoint(args.checkpoint, device=args.device)
    schema = model.schema
    examples = load_corpus(args.corpus, schema)
    max_steps = args.max_steps
    if max_steps is None:
        tc = payload.get("train_config") or {}
        max_steps = int(tc.get("max_tuples", 8))
    records = [
        prediction_record(ex.id, ex.sentence, extract_events(ex.sentence, model, max_steps))
        for ex in examples
    ]
    write_predictions(args.out, records)
    with open(args.out + ".meta.json", "w", encoding="utf-8") as fh:
        json.dump(
            {"checkpoint": args.checkpoint, "corpus": args.corpus, "max_steps": max_steps,
             "config_echo": payload.get("config_echo")},
            fh, indent=2, sort_keys=True,
        )
    print(f"wrote {len(records)} prediction line(s) to {args.out}")
    return 0


def cmd_score(args) -> int:
    schema = _load_schema(args.schema)
    gold = load_corpus(args.gold, schema)
    raw_preds = load_predictions(args.pred)
    predictions = {}
    for ex in gold:
        if ex.id in raw_preds:
            try:
                tuples = encode_frames(ex.sentence, raw_preds[ex.id], schema)
            except InvalidInput as exc:
                raise FormatError(f"prediction for {ex.id}: {exc}") from None
            predictions[ex.id] = [t for t in tuples if not t.is_null]
    extra = sorted(set(raw_preds) - {ex.id for ex in gold})
    if extra:
        raise AlignmentError(f"prediction ids without gold sentences: {extra[:10]}")

    report = score(predictions, gold, ai_requires_etype=not args.relaxed_ai)
    for rule in args.breakdown or []:
        report.breakdowns[rule] = breakdown(predictions, gold, rule,
                                            ai_requires_etype=not args.relaxed_ai)
    print(render_table(report))
    payload = report.to_dict()
    payload["config_echo"] = {
        "pred": args.pred, "gold": args.gold, "schema": args.schema,
        "breakdown": list(args.breakdown or []), "relaxed_ai": args.relaxed_ai,
    }
    if args.json_out:
        with open(args.json_out, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
        print(f"report written to {args.json_out}")
    else:
        print(json.dumps(payload, sort_keys=True))
    return 0


def cmd_synth(args) -> int:
    cfg = _apply_overrides(_load_json(args.config, "config"), args.set or [])
    section = {k: v for k, v in cfg.items() if k != "split"}
    config = _dataclass_from(SynthConfig, section, "synth")
    if config.num_sentences == 0:
        raise UsageError("num_sentences must be positive")
    examples, schema = generate_synthetic(config)
    splits = split_corpus(examples, tuple(cfg.get("split", (529, 30, 40))))

    os.makedirs(args.out_dir, exist_ok=True)
    for name, part in zip(("train", "dev", "test"), splits):
        save_corpus(part, os.path.join(args.out_dir, f"{name}.jsonl"))
    with open(os.path.join(args.out_dir, "schema.json"), "w", encoding="utf-8") as fh:
        json.dump(schema.to_dict(), fh, indent=2, sort_keys=True)
    with open(os.path.join(args.out_dir, "config.json"), "w", encoding="utf-8") as fh:
        json.dump(cfg, fh, indent=2, sort_keys=True)
    sizes = "/".join(str(len(part)) for part in splits)
    print(f"wrote {sizes} sentences (train/dev/test) to {args.out_dir}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="evframes", description=__doc__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("train", help="train a model from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("predict", help="decode a corpus with a trained checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--max-steps", type=int, default=None)
    p.add_argument("--device", default="cpu")
    p.set_defaults(fn=cmd_predict)

    p = sub.add_parser("score", help="score predictions against gold")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--breakdown", action="append", choices=PARTITIONS)
    p.add_argument("--json-out", default=None)
    p.add_argument("--relaxed-ai", action="store_true",
                   help="credit argument spans regardless of predicted event type")
    p.set_defaults(fn=cmd_score)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.set_defaults(fn=cmd_synth)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "fn", None):
            parser.print_help()
            return 1
        return args.fn(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (FormatError, SchemaError, AlignmentError, InvalidInput, CheckpointError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - last-resort mapping to exit code 3
        print(f"runtime error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
