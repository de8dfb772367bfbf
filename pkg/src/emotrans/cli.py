"""Command-line entry point.

Subcommands: ``stats``, ``transitions``, ``train``, ``eval``, ``predict``.
Every command prints a JSON document to stdout that embeds the effective
configuration (flags over config-file values over defaults), so re-running
with the embedded config reproduces the artifact. With ``--out-dir`` the
report path additionally writes CSV tables and PNG figures next to the JSON.

Exit status: 0 on success, 1 on usage/configuration errors, 2 on data
errors (missing or malformed files, unknown roles, bad checkpoints).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .affect import Emotion, PersonalityTraits
from .dataset import (
    MAIN_ROLE_PERSONALITIES,
    DataError,
    Split,
    dataset_stats,
    parse_triples,
    transition_dispersion,
    transition_matrix,
)
from .features import DEFAULT_DIM, DEFAULT_SEED, EmbeddingError, FeaturizerConfig
from .metrics import render_results_table
from .models import (
    CheckpointError,
    ConfigError,
    Model,
    ModelConfig,
    Task,
    Variant,
    load_checkpoint,
    save_checkpoint,
)
from .training import TrainConfig, evaluate, train

DATA_DIR_ENV = "EMOTRANS_DATA_DIR"
DEFAULT_DATA_NAME = "peld.csv"

USAGE_EXIT = 1
DATA_EXIT = 2


class CliError(Exception):
    """Usage-level problem detected after argument parsing."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on usage errors; this tool reserves 2
    # for data errors, so remap.
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(USAGE_EXIT, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="emotrans", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="command")

    def add_common(p: argparse.ArgumentParser, with_data: bool = True) -> None:
        p.add_argument("--config", help="config file (JSON object or key=value lines)")
        p.add_argument("--out-dir", help="directory for CSV/PNG artifacts")
        if with_data:
            p.add_argument("--data", help=f"triple CSV (default ${DATA_DIR_ENV}/{DEFAULT_DATA_NAME})")
            p.add_argument("--strict", action="store_true", help="abort on malformed rows")

    p_stats = sub.add_parser("stats", help="corpus statistics report")
    add_common(p_stats)

    p_trans = sub.add_parser("transitions", help="emotion transition matrices and dispersion")
    add_common(p_trans)
    p_trans.add_argument("--role", help="restrict to one responder role")

    p_train = sub.add_parser("train", help="train a model variant")
    add_common(p_train)
    _add_model_flags(p_train)
    p_train.add_argument("--epochs", type=int, default=50)
    p_train.add_argument("--batch-size", type=int, default=32)
    p_train.add_argument("--lr", type=float, default=1e-3)
    p_train.add_argument("--gamma", type=float, default=2.0)
    p_train.add_argument("--alpha", choices=("balanced", "uniform"), default="balanced",
                         help="focal-loss class weighting")
    p_train.add_argument("--selection", choices=("w-avg", "m-avg"), default="w-avg",
                         help="valid-set model selection metric")
    p_train.add_argument("--checkpoint-out", help="checkpoint path (default <out-dir>/checkpoint.json)")

    p_eval = sub.add_parser("eval", help="evaluate a checkpoint on a split")
    add_common(p_eval)
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--split", choices=("train", "valid", "test"), default="test")

    p_pred = sub.add_parser("predict", help="select the response emotion for one exchange")
    add_common(p_pred, with_data=False)
    p_pred.add_argument("--data", help="optional triple CSV for role personality lookup")
    p_pred.add_argument("--checkpoint", help="trained model (omit for an untrained model)")
    _add_model_flags(p_pred)
    p_pred.add_argument("--u1", required=True, help="preceding system utterance")
    p_pred.add_argument("--e1", required=True, help="emotion of u1")
    p_pred.add_argument("--u2", required=True, help="user utterance")
    p_pred.add_argument("--role", help="responder role name for personality lookup")
    p_pred.add_argument("--ocean", help="explicit personality as o,c,e,a,n")
    return parser


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--variant", choices=[v.value for v in Variant], default=Variant.PET_CLS.value)
    p.add_argument("--task", choices=[t.value for t in Task], default=Task.EMOTION.value)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--hidden", type=int, default=64)
    p.add_argument("--dim", type=int, default=DEFAULT_DIM, help="hashing featurizer dimension")
    p.add_argument("--feat-seed", type=int, default=DEFAULT_SEED, help="hashing featurizer seed")
    p.add_argument("--embeddings", help="precomputed embedding TSV (switches featurizer mode)")


def _load_config_file(path: str) -> dict[str, str]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read config file {path}: {exc}") from exc
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise CliError(f"bad JSON config file {path}: {exc}") from exc
        if not isinstance(doc, dict):
            raise CliError(f"config file {path} must hold a JSON object")
        return {str(k): v for k, v in doc.items()}
    values: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise CliError(f"{path}:{lineno}: expected key=value")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


def _apply_config_file(parser: _Parser, argv: list[str]) -> argparse.Namespace:
    """Parse twice so config-file values become defaults that explicit
    flags override."""
    args = parser.parse_args(argv)
    if not args.command:
        parser.error("a subcommand is required")
    if getattr(args, "config", None):
        file_values = _load_config_file(args.config)
        subparser = parser._subparsers._group_actions[0].choices[args.command]  # type: ignore[union-attr]
        valid = {a.dest for a in subparser._actions}
        unknown = [k for k in file_values if k.replace("-", "_") not in valid]
        if unknown:
            raise CliError(f"config file keys not recognized by '{args.command}': {unknown}")
        defaults = {k.replace("-", "_"): v for k, v in file_values.items()}
        # re-coerce string values through the subparser's own type functions
        for action in subparser._actions:
            value = defaults.get(action.dest)
            if not isinstance(value, str):
                continue
            if action.type is not None:
                defaults[action.dest] = action.type(value)
            elif isinstance(action, argparse._StoreTrueAction):
                defaults[action.dest] = value.lower() in ("1", "true", "yes")
        subparser.set_defaults(**defaults)
        args = parser.parse_args(argv)
    return args


def _resolve_data_path(args: argparse.Namespace) -> str:
    if getattr(args, "data", None):
        return args.data
    data_dir = os.environ.get(DATA_DIR_ENV)
    if data_dir:
        return str(Path(data_dir) / DEFAULT_DATA_NAME)
    raise CliError(f"--data is required (or set ${DATA_DIR_ENV})")


def _featurizer_config(args: argparse.Namespace) -> FeaturizerConfig:
    if getattr(args, "embeddings", None):
        from .features import load_embeddings

        table = load_embeddings(args.embeddings)
        return FeaturizerConfig(mode="embeddings", dim=table.dim, seed=0,
                                embeddings_path=args.embeddings)
    return FeaturizerConfig(mode="hash", dim=args.dim, seed=args.feat_seed)


def _effective_config(args: argparse.Namespace, **extra) -> dict:
    skip = {"command", "config"}
    doc = {k: v for k, v in sorted(vars(args).items()) if k not in skip and v is not None}
    doc.update(extra)
    return doc


def _emit(doc: dict, out_dir: str | None, name: str) -> None:
    text = json.dumps(doc, indent=2)
    print(text)
    if out_dir:
        Path(out_dir, name).write_text(text + "\n", encoding="utf-8")


def _ensure_out_dir(args: argparse.Namespace) -> str | None:
    out_dir = getattr(args, "out_dir", None)
    if out_dir:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
    return out_dir


# ---------------------------------------------------------------------------
# Command handlers


def _cmd_stats(args: argparse.Namespace) -> int:
    data_path = _resolve_data_path(args)
    dataset = parse_triples(data_path, strict=args.strict)
    stats = dataset_stats(dataset)
    out_dir = _ensure_out_dir(args)
    doc = {
        "command": "stats",
        "config": _effective_config(args, data=data_path),
        "skipped_rows": dataset.skipped_rows,
        **stats.to_json_dict(),
    }
    _emit(doc, out_dir, "stats.json")
    if out_dir:
        from . import report

        report.write_stats_csv(stats, str(Path(out_dir, "stats.csv")))
        report.save_stats_figure(stats, str(Path(out_dir, "emotion_counts.png")))
    return 0


def _cmd_transitions(args: argparse.Namespace) -> int:
    data_path = _resolve_data_path(args)
    dataset = parse_triples(data_path, strict=args.strict)
    out_dir = _ensure_out_dir(args)
    doc = {"command": "transitions", "config": _effective_config(args, data=data_path)}

    if args.role:
        matrix = transition_matrix(dataset, args.role)
        matrices = [matrix]
        doc["matrix"] = matrix.to_json_dict()
        dispersion = None
    else:
        overall = transition_matrix(dataset)
        per_role = [transition_matrix(dataset, role) for role in sorted(dataset.role_table)]
        matrices = [overall, *per_role]
        doc["overall"] = overall.to_json_dict()
        doc["roles"] = {m.role: m.to_json_dict() for m in per_role}
        dispersion = transition_dispersion(per_role) if len(per_role) >= 2 else None
        doc["dispersion"] = dispersion.to_json_dict() if dispersion else None

    _emit(doc, out_dir, "transitions.json")
    if out_dir:
        from . import report

        for m in matrices:
            tag = (m.role or "all").lower().replace(" ", "_")
            report.write_transition_csv(m, str(Path(out_dir, f"transitions_{tag}.csv")))
        report.save_transition_figure(matrices, str(Path(out_dir, "transitions.png")))
        if dispersion is not None:
            report.write_dispersion_csv(dispersion, str(Path(out_dir, "dispersion.csv")))
            report.save_dispersion_figure(dispersion, str(Path(out_dir, "dispersion.png")))
    return 0


def _cmd_train(args: argparse.Namespace) -> int:
    data_path = _resolve_data_path(args)
    dataset = parse_triples(data_path, strict=args.strict)
    cfg = TrainConfig(
        variant=Variant(args.variant),
        task=Task(args.task),
        epochs=args.epochs,
        batch_size=args.batch_size,
        seed=args.seed,
        lr=args.lr,
        hidden=args.hidden,
        gamma=args.gamma,
        alpha_mode=args.alpha,
        selection_metric=args.selection,
        featurizer=_featurizer_config(args),
    )
    model, history = train(dataset, cfg)

    out_dir = _ensure_out_dir(args)
    ckpt_path = args.checkpoint_out or (str(Path(out_dir, "checkpoint.json")) if out_dir else None)
    if ckpt_path:
        save_checkpoint(model, ckpt_path)

    doc = {
        "command": "train",
        "config": {**_effective_config(args, data=data_path), "train_config": cfg.to_json_dict()},
        "selected_epoch": history.selected_epoch,
        "valid_score": model.valid_score,
        "checkpoint": ckpt_path,
        "history": history.to_json_dict(),
    }
    _emit(doc, out_dir, "history.json")
    if out_dir:
        from . import report

        report.write_history_csv(history, str(Path(out_dir, "history.csv")))
        report.save_history_figure(history, str(Path(out_dir, "training_curves.png")))
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    data_path = _resolve_data_path(args)
    dataset = parse_triples(data_path, strict=args.strict)
    model = load_checkpoint(args.checkpoint)
    split = Split.parse(args.split)
    metrics = evaluate(model, dataset, split)
    out_dir = _ensure_out_dir(args)
    doc = {
        "command": "eval",
        "config": _effective_config(args, data=data_path,
                                    variant=model.config.variant.value,
                                    task=model.config.task.value),
        "split": split.value,
        "metrics": metrics.to_json_dict(),
    }
    _emit(doc, out_dir, "metrics.json")
    if out_dir:
        from . import report

        name = model.config.variant.value
        report.write_metrics_csv(metrics, str(Path(out_dir, "metrics.csv")))
        report.save_confusion_figure(metrics, str(Path(out_dir, "confusion.png")))
        table = render_results_table([(name, metrics)])
        Path(out_dir, "results_table.txt").write_text(table + "\n", encoding="utf-8")
    return 0


def _parse_ocean(raw: str) -> PersonalityTraits:
    parts = raw.split(",")
    if len(parts) != 5:
        raise CliError("--ocean needs 5 comma-separated numbers: o,c,e,a,n")
    try:
        return PersonalityTraits(*(float(x) for x in parts))
    except ValueError as exc:
        raise CliError(f"bad --ocean value: {exc}") from exc


def _resolve_personality(args: argparse.Namespace) -> tuple[str, PersonalityTraits]:
    if args.ocean:
        return (args.role or "custom", _parse_ocean(args.ocean))
    if not args.role:
        raise CliError("predict needs --role or --ocean for the personality")
    if args.data:
        table = parse_triples(args.data).role_table
    else:
        table = MAIN_ROLE_PERSONALITIES
    if args.role not in table:
        raise DataError(f"unknown role name: {args.role!r}")
    return (args.role, table[args.role])


def _cmd_predict(args: argparse.Namespace) -> int:
    role, personality = _resolve_personality(args)
    if args.checkpoint:
        model = load_checkpoint(args.checkpoint)
    else:
        model = Model(
            ModelConfig(
                variant=Variant(args.variant),
                task=Task(args.task),
                featurizer=_featurizer_config(args),
                hidden=args.hidden,
                seed=args.seed,
            )
        )
    try:
        e1 = Emotion.parse(args.e1)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    prediction = model.predict_parts(args.u1, e1, args.u2, personality)
    out_dir = _ensure_out_dir(args)
    doc = {
        "command": "predict",
        "config": _effective_config(
            args, role=role,
            variant=model.config.variant.value, task=model.config.task.value,
        ),
        "prediction": prediction.to_json_dict(),
    }
    _emit(doc, out_dir, "prediction.json")
    return 0


_HANDLERS = {
    "stats": _cmd_stats,
    "transitions": _cmd_transitions,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "predict": _cmd_predict,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = _apply_config_file(parser, list(sys.argv[1:] if argv is None else argv))
        return _HANDLERS[args.command](args)
    except CliError as exc:
        print(f"emotrans: error: {exc}", file=sys.stderr)
        return USAGE_EXIT
    except ConfigError as exc:
        print(f"emotrans: configuration error: {exc}", file=sys.stderr)
        return USAGE_EXIT
    except (DataError, EmbeddingError, CheckpointError) as exc:
        print(f"emotrans: data error: {exc}", file=sys.stderr)
        return DATA_EXIT


if __name__ == "__main__":
    sys.exit(main())
