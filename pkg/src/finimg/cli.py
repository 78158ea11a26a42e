"""Command line interface.

Subcommands: synth, encode, train, evaluate, compare, grid-search. A
JSON config file mirroring ExperimentConfig can seed any run; explicit
flags override file values. Exit code 0 on success, 2 on failure with a
stage-labeled message on stderr.
"""
from __future__ import annotations

import argparse
import json
import sys
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from .data import (
    apply_standardizer,
    fit_standardizer,
    load_dataset,
    out_of_time_split,
    save_csv,
)
from .encoding import arrange, default_spec, render_pgm, save_grid
from .experiment import (
    ALL_METHODS,
    ExperimentConfig,
    emit_report,
    evaluate_pipeline,
    fit_pipeline,
    grid_tensor,
    load_or_generate,
    load_pipeline,
    run_compare,
    save_pipeline,
)
from .nnet import TrainConfig, build_cnn1d, build_cnn2d, grid_search
from .schema import save_schema
from .synthetic import SyntheticSpec, generate_synthetic


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage


@contextmanager
def _stage(name: str):
    try:
        yield
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc


def _parse_years(text: str) -> tuple[int, int]:
    lo, _, hi = text.partition(":")
    return int(lo), int(hi or lo)


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--data", help="data CSV path")
    p.add_argument("--schema", help="schema CSV path")
    p.add_argument("--test-year", type=int, dest="test_year")
    p.add_argument("--seed", type=int, help="training seed")
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--batch", type=int)
    p.add_argument("--out", help="output directory")


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(raw, dict):
        raise ValueError(f"{path}: config must be a JSON object")
    return raw


def _experiment_config(args, extra: dict | None = None) -> ExperimentConfig:
    """Merge config file values with CLI flags (flags win)."""
    raw = _load_config_file(getattr(args, "config", None))
    raw.update(extra or {})

    def pick(flag, key, default):
        value = getattr(args, flag, None)
        if value is not None:
            return value
        return raw.get(key, default)

    train_raw = dict(raw.get("train", {}))
    train = TrainConfig(
        learning_rate=pick("lr", "_", train_raw.get("learning_rate", 1e-3)),
        epochs=pick("epochs", "_", train_raw.get("epochs", 30)),
        batch_size=pick("batch", "_", train_raw.get("batch_size", 32)),
        seed=pick("seed", "_", train_raw.get("seed", 0)),
        optimizer=train_raw.get("optimizer", "adam"),
    )
    synthetic = None
    if raw.get("synthetic"):
        s = raw["synthetic"]
        counts = s.get("section_counts")
        synthetic = SyntheticSpec(
            n_per_year=s.get("n_per_year", 800),
            years=tuple(s.get("years", (2012, 2016))),
            kind=s.get("kind", "fundamental"),
            section_counts=dict(counts) if counts else None,
            factor_strength=s.get("factor_strength", 0.9),
            noise=s.get("noise", 1.0),
            seed=s.get("seed", 0),
        )
    methods = getattr(args, "methods", None) or raw.get("methods") or list(
        ExperimentConfig.__dataclass_fields__["methods"].default
    )
    return ExperimentConfig(
        data=pick("data", "data", None),
        schema=pick("schema", "schema", None),
        synthetic=synthetic,
        test_year=pick("test_year", "test_year", 2016),
        methods=tuple(methods),
        randomization_runs=pick("runs", "randomization_runs", 30),
        training_seeds=pick("training_seeds", "training_seeds", 1),
        train=train,
        arrangement_seed=pick("arrangement_seed", "arrangement_seed", 0),
        autoencoder_code_dim=raw.get("autoencoder_code_dim"),
        output_dir=pick("out", "output_dir", "out"),
    )


def _cmd_synth(args) -> int:
    with _stage("config"):
        spec = SyntheticSpec(
            n_per_year=args.n_per_year,
            years=_parse_years(args.years),
            kind=args.kind,
            section_counts=(
                {label: args.features_per_section for label in _section_labels(args.kind)}
                if args.features_per_section
                else None
            ),
            factor_strength=args.factor_strength,
            noise=args.noise,
            seed=args.seed if args.seed is not None else 0,
        )
        out = Path(args.out or "out")
    with _stage("data"):
        ds = generate_synthetic(spec)
        out.mkdir(parents=True, exist_ok=True)
        save_csv(ds, out / "data.csv")
        save_schema(ds.schema, out / "schema.csv")
    print(f"wrote {out / 'data.csv'} ({len(ds)} observations) and {out / 'schema.csv'}")
    return 0


def _section_labels(kind: str):
    from .schema import FUNDAMENTAL_SECTIONS, RATIO_CATEGORIES

    return FUNDAMENTAL_SECTIONS if kind == "fundamental" else RATIO_CATEGORIES


def _cmd_encode(args) -> int:
    with _stage("data"):
        ds = load_dataset(args.data, args.schema)
        if not 0 <= args.row < len(ds):
            raise ValueError(f"row {args.row} outside 0..{len(ds) - 1}")
        vector = np.where(np.isnan(ds.values[args.row]), 0.0, ds.values[args.row])
    with _stage("encode"):
        spec = default_spec(args.method, ds.schema, seed=args.seed or 0)
        grid = arrange(vector, ds.schema, spec)
        out = Path(args.out or "out")
        out.mkdir(parents=True, exist_ok=True)
        stem = out / args.method
        save_grid(grid, f"{stem}_cells.csv", f"{stem}_provenance.csv")
        render_pgm(grid, f"{stem}.pgm")
    print(f"encoded row {args.row} as {grid.rows}x{grid.cols} {args.method} grid "
          f"({grid.pad_count()} zero-pad cells) under {out}/")
    return 0


def _cmd_train(args) -> int:
    with _stage("config"):
        config = _experiment_config(args)
    with _stage("data"):
        ds = load_or_generate(config)
    with _stage("train"):
        pipe, record, _ = fit_pipeline(config, args.method, ds, config.train.seed,
                                       arrangement_seed=config.arrangement_seed)
        out = Path(config.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        save_pipeline(pipe, out / "model.npz")
        _write_record_csv(out / "metrics.csv", record)
    print(f"{args.method}: test accuracy {record.accuracy:.3f}, "
          f"notch distance {_na(record.cond_notch)} -> {out / 'model.npz'}")
    return 0


def _na(x) -> str:
    return "n/a" if x is None else f"{x:.3f}"


def _write_record_csv(path: Path, record) -> None:
    lines = [
        "method,accuracy,abs_notch,cond_notch,n_test",
        ",".join([
            record.method,
            f"{record.accuracy:.6f}",
            f"{record.abs_notch:.6f}",
            "" if record.cond_notch is None else f"{record.cond_notch:.6f}",
            str(record.n_test),
        ]),
    ]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _cmd_evaluate(args) -> int:
    with _stage("data"):
        ds = load_dataset(args.data, args.schema)
    with _stage("evaluate"):
        pipe = load_pipeline(args.model)
        record = evaluate_pipeline(pipe, ds, args.test_year)
        if args.out:
            out = Path(args.out)
            out.mkdir(parents=True, exist_ok=True)
            _write_record_csv(out / "metrics.csv", record)
    print(f"{record.method}: accuracy {record.accuracy:.3f}, "
          f"abs notch {record.abs_notch:.3f}, cond notch {_na(record.cond_notch)} "
          f"on {record.n_test} observations")
    return 0


def _cmd_compare(args) -> int:
    with _stage("config"):
        config = _experiment_config(args)
        formats = tuple(args.format.split(",")) if args.format else ("csv", "markdown")
    with _stage("data"):
        ds = load_or_generate(config)
    with _stage("train"):
        report = run_compare(config, ds)
    with _stage("report"):
        written = emit_report(report, config.output_dir, formats)
    for row in report.rows:
        star = "*" if row.significant else ""
        se = f" ({row.accuracy_stderr:.3f})" if row.accuracy_stderr is not None else ""
        print(f"{row.method:>14}: {row.accuracy_mean:.3f}{se}{star}")
    print(f"report files: {', '.join(str(p) for p in written)}")
    return 0


def _cmd_grid_search(args) -> int:
    with _stage("config"):
        config = _experiment_config(args)
        grid = [int(x) for x in args.grid.split(",")]
    with _stage("data"):
        ds = load_or_generate(config)
    with _stage("train"):
        train_raw, test_raw = out_of_time_split(ds, config.test_year)
        params = fit_standardizer(train_raw)
        train_ds = apply_standardizer(train_raw, params)
        test_ds = apply_standardizer(test_raw, params)
        d = len(ds.schema)
        if args.model == "cnn1d":
            def builder(n1, n2):
                return build_cnn1d(d, filters1=n1, filters2=n2)

            tx, vx = train_ds.values[:, None, :], test_ds.values[:, None, :]
        else:
            spec = default_spec(args.model, ds.schema, seed=config.arrangement_seed)
            probe = arrange(np.zeros(d), ds.schema, spec)

            def builder(n1, n2):
                return build_cnn2d(probe.rows, probe.cols, filters1=n1, filters2=n2)

            tx = grid_tensor(train_ds.values, probe)
            vx = grid_tensor(test_ds.values, probe)
        best, rows = grid_search(builder, grid, (tx, train_ds.labels),
                                 (vx, test_ds.labels), config.train)
    with _stage("report"):
        out = Path(config.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        lines = ["neurons1,neurons2,train_accuracy,val_accuracy,parameter_count,error"]
        for r in rows:
            lines.append(",".join([
                str(r.neurons1), str(r.neurons2),
                "" if r.train_accuracy is None else f"{r.train_accuracy:.6f}",
                "" if r.val_accuracy is None else f"{r.val_accuracy:.6f}",
                str(r.parameter_count),
                r.error or "",
            ]))
        (out / "grid_search.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"best (neurons1, neurons2) = {best}; table -> {out / 'grid_search.csv'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="finimg",
        description="Image encodings of financial feature vectors and CNN comparisons",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset CSV")
    p.add_argument("--n-per-year", type=int, default=800, dest="n_per_year")
    p.add_argument("--years", default="2012:2016")
    p.add_argument("--kind", choices=("fundamental", "ratio"), default="fundamental")
    p.add_argument("--features-per-section", type=int, dest="features_per_section")
    p.add_argument("--factor-strength", type=float, default=0.9, dest="factor_strength")
    p.add_argument("--noise", type=float, default=1.0)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("encode", help="image one observation and render it")
    p.add_argument("--data", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--method", required=True,
                   choices=("sa", "ra", "cca", "wcr", "bcr", "hva", "hvr"))
    p.add_argument("--row", type=int, default=0)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_encode)

    p = sub.add_parser("train", help="train one method and checkpoint the pipeline")
    _add_common_flags(p)
    p.add_argument("--method", required=True, choices=ALL_METHODS)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("evaluate", help="evaluate a checkpointed pipeline")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--test-year", type=int, dest="test_year")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("compare", help="run the full encoding comparison protocol")
    _add_common_flags(p)
    p.add_argument("--methods", type=lambda s: s.split(","))
    p.add_argument("--runs", type=int, help="randomization runs per randomized method")
    p.add_argument("--training-seeds", type=int, dest="training_seeds")
    p.add_argument("--arrangement-seed", type=int, dest="arrangement_seed")
    p.add_argument("--format", help="comma-separated: csv,markdown")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("grid-search", help="tune conv filter counts on a grid")
    _add_common_flags(p)
    p.add_argument("--model", default="sa", choices=("sa", "cca", "hva", "cnn1d"))
    p.add_argument("--grid", default="16,32,64,128")
    p.set_defaults(func=_cmd_grid_search)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except StageError as exc:
        print(f"error {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
