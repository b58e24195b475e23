"""Command-line interface.

Subcommands::

    run       full cascade: screen, refine, train, evaluate
    screen    stage 1 only, writes stage1.json
    refine    stage 2, reads stage1.json, writes stage2.json + wald_table.txt
    train     stage 3, reads stage2.json, writes stage3.json
    evaluate  reads all stage artifacts, writes evaluation.json,
              roc_points.csv and the assembled cascade_report.json
    synth     generate a synthetic two-class CSV

Experiment options can come from flags or from a ``key=value`` config file
(``--config``); flags override the file, the file overrides built-in
defaults, and unknown config keys are rejected.  Every JSON artifact
embeds a schema version, the master seed and the resolved experiment
configuration, so later stages can refuse to chain onto artifacts
produced under different settings.  Operational knobs (``--out``,
``--threads``, ``--no-text``) do not affect results and are not part of
that echoed configuration.

Exit codes: 0 on success, 1 on runtime failures (bad data, non-converged
fits, missing artifacts), 2 on usage errors (unknown flags, invalid
values, contradictory options).  Runtime failures print a single
``error: ...`` line to stderr.
"""

import argparse
import os
import sys

from . import __version__, logit, metrics, neighbors, pipeline, render, tabular


def _parse_bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {raw!r}")


def _parse_opt_int(raw: str):
    lowered = raw.strip().lower()
    if lowered in ("none", "auto"):
        return None
    return int(raw)


def _parse_opt_float(raw: str):
    lowered = raw.strip().lower()
    if lowered == "none":
        return None
    return float(raw)


def _parse_opt_str(raw: str):
    lowered = raw.strip().lower()
    if lowered == "none":
        return None
    return raw.strip()


# experiment keys: parser function and built-in default; these and only
# these may appear in a config file, and they form the echoed config
_KEYS = {
    "data": (str, None),
    "label": (str, None),
    "seed": (int, 0),
    "train_fraction": (float, 0.7),
    "stratify_split": (_parse_bool, False),
    "trees": (int, 500),
    "mtry": (_parse_opt_int, None),
    "min_leaf": (int, 1),
    "max_depth": (_parse_opt_int, None),
    "importance_threshold": (_parse_opt_float, 6.0),
    "importance_rule": (_parse_opt_str, None),
    "correlation_floor": (float, 0.1),
    "alpha": (float, 0.05),
    "max_elimination_rounds": (_parse_opt_int, None),
    "k_max": (_parse_opt_int, None),
    "folds": (int, 5),
    "stratify_cv": (_parse_bool, False),
    "select_on_all": (_parse_bool, False),
}

_STAGE_COMMANDS = ("run", "screen", "refine", "train", "evaluate")


def _add_experiment_options(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", metavar="FILE",
                     help="key=value file with experiment options")
    sub.add_argument("--data", metavar="CSV", help="input table")
    sub.add_argument("--label", metavar="COLUMN", help="label column name")
    sub.add_argument("--out", metavar="DIR", default="out",
                     help="artifact directory (default: out)")
    sub.add_argument("--seed", metavar="N", help="master seed (default: 0)")
    sub.add_argument("--train-fraction", metavar="F",
                     help="train share of the split (default: 0.7)")
    sub.add_argument("--stratify-split", action="store_true", default=None,
                     help="apply the split per class")
    sub.add_argument("--trees", metavar="N", help="forest size (default: 500)")
    sub.add_argument("--mtry", metavar="N",
                     help="features tried per node (default: auto = floor sqrt)")
    sub.add_argument("--min-leaf", metavar="N",
                     help="minimum rows per leaf (default: 1)")
    sub.add_argument("--max-depth", metavar="N",
                     help="tree depth cap (default: none)")
    sub.add_argument("--importance-threshold", metavar="X",
                     help="fixed stage-1 importance cut (default: 6.0)")
    sub.add_argument("--importance-rule", metavar="RULE",
                     help="derive the cut instead: median-q3")
    sub.add_argument("--correlation-floor", metavar="X",
                     help="minimum |spearman| vs labels (default: 0.1)")
    sub.add_argument("--alpha", metavar="X",
                     help="stage-2 significance level (default: 0.05)")
    sub.add_argument("--max-elimination-rounds", metavar="N",
                     help="cap on stage-2 drops (default: none)")
    sub.add_argument("--k-max", metavar="N",
                     help="largest k considered (default: auto = floor sqrt)")
    sub.add_argument("--folds", metavar="N",
                     help="cross-validation folds (default: 5)")
    sub.add_argument("--stratify-cv", action="store_true", default=None,
                     help="stratify the cross-validation folds")
    sub.add_argument("--select-on-all", action="store_true", default=None,
                     help="train stage 3 on every feature, ignoring stages 1-2")
    sub.add_argument("--threads", type=int, default=1, metavar="N",
                     help="worker threads for tree growing (default: 1)")
    sub.add_argument("--no-text", action="store_true",
                     help="skip plain-text artifacts (wald_table.txt)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="slicascade",
        description="Three-stage cascade classifier for binary screening data.",
    )
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True,
                                     metavar="COMMAND")
    help_text = {
        "run": "run the full cascade and write all artifacts",
        "screen": "stage 1: forest + correlation screening",
        "refine": "stage 2: logistic backward elimination",
        "train": "stage 3: cross-validated k-NN training",
        "evaluate": "score the held-out split and assemble the report",
    }
    for name in _STAGE_COMMANDS:
        sub = commands.add_parser(name, help=help_text[name])
        _add_experiment_options(sub)
    synth = commands.add_parser("synth", help="generate a synthetic CSV")
    synth.add_argument("--n", type=int, required=True, help="number of rows")
    synth.add_argument("--informative", type=int, required=True,
                       help="number of class-shifted columns")
    synth.add_argument("--noise", type=int, default=0,
                       help="number of pure-noise columns (default: 0)")
    synth.add_argument("--shift", type=float, default=1.5,
                       help="class-1 mean shift in informative columns")
    synth.add_argument("--seed", type=int, default=0, help="generator seed")
    synth.add_argument("--out", required=True, metavar="CSV",
                       help="output file path")
    return parser


def _read_config_file(path):
    if not os.path.exists(path):
        raise ValueError(f"config file not found: {path}")
    entries = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ValueError(
                    f"line {lineno} of {path} is not key=value: {text!r}"
                )
            key, raw = text.split("=", 1)
            key = key.strip().lower().replace("-", "_")
            if key in entries:
                raise ValueError(f"duplicate key {key!r} in {path}")
            entries[key] = raw.strip()
    return entries


def resolve_settings(args, parser) -> dict:
    """Merge defaults, config file and flags into one settings dict."""
    settings = {key: default for key, (_, default) in _KEYS.items()}
    explicit = set()
    if args.config:
        try:
            entries = _read_config_file(args.config)
        except ValueError as exc:
            parser.error(str(exc))
        for key, raw in entries.items():
            if key not in _KEYS:
                parser.error(
                    f"unknown config key {key!r}; allowed keys: "
                    + ", ".join(sorted(_KEYS))
                )
            parse, _ = _KEYS[key]
            try:
                settings[key] = parse(raw)
            except ValueError as exc:
                parser.error(f"bad config value for {key}: {exc}")
            explicit.add(key)
    for key, (parse, _) in _KEYS.items():
        raw = getattr(args, key)
        if raw is None:
            continue
        if isinstance(raw, str):
            try:
                settings[key] = parse(raw)
            except ValueError as exc:
                parser.error(f"bad value for --{key.replace('_', '-')}: {exc}")
        else:
            settings[key] = raw
        explicit.add(key)
    if settings["importance_rule"] is not None:
        if "importance_threshold" in explicit and \
                settings["importance_threshold"] is not None:
            parser.error(
                "--importance-threshold and --importance-rule are mutually "
                "exclusive; set at most one"
            )
        settings["importance_threshold"] = None
    for required in ("data", "label"):
        if settings[required] is None:
            parser.error(f"--{required} is required (flag or config file)")
    settings["out"] = args.out
    settings["threads"] = args.threads
    settings["no_text"] = bool(args.no_text)
    try:
        _build_config(settings).validate()
    except ValueError as exc:
        parser.error(str(exc))
    return settings


def _build_config(settings) -> pipeline.CascadeConfig:
    return pipeline.CascadeConfig(
        seed=settings["seed"],
        train_fraction=settings["train_fraction"],
        stratify_split=settings["stratify_split"],
        n_trees=settings["trees"],
        mtry=settings["mtry"],
        min_leaf=settings["min_leaf"],
        max_depth=settings["max_depth"],
        importance_threshold=settings["importance_threshold"],
        importance_rule=settings["importance_rule"],
        correlation_floor=settings["correlation_floor"],
        alpha=settings["alpha"],
        max_elimination_rounds=settings["max_elimination_rounds"],
        k_max=settings["k_max"],
        folds=settings["folds"],
        stratify_cv=settings["stratify_cv"],
        select_on_all=settings["select_on_all"],
        threads=settings["threads"],
    )


def _echo(settings) -> dict:
    return {key: settings[key] for key in _KEYS}


def _envelope(settings) -> dict:
    return {
        "schema_version": render.SCHEMA_VERSION,
        "master_seed": settings["seed"],
        "config": _echo(settings),
    }


def _write_artifact(outdir, filename, text) -> str:
    os.makedirs(outdir, exist_ok=True)
    path = os.path.join(outdir, filename)
    render.write_text(path, text)
    return path


def _write_evaluation(outdir, evaluation_dict, roc) -> None:
    payload = {
        "schema_version": render.SCHEMA_VERSION,
        "evaluation": evaluation_dict,
    }
    _write_artifact(outdir, "evaluation.json", render.json_dumps(payload))
    _write_artifact(outdir, "roc_points.csv", render.roc_csv(roc))


def _load_stage_artifact(settings, filename) -> dict:
    path = os.path.join(settings["out"], filename)
    if not os.path.exists(path):
        raise FileNotFoundError(
            f"missing artifact {path}; run the earlier stage first"
        )
    payload = render.read_json(path)
    version = payload.get("schema_version")
    if version != render.SCHEMA_VERSION:
        raise ValueError(
            f"{filename} has schema_version {version!r}, "
            f"expected {render.SCHEMA_VERSION!r}"
        )
    if payload.get("master_seed") != settings["seed"]:
        raise ValueError(
            f"{filename} was produced with master seed "
            f"{payload.get('master_seed')}, current seed is {settings['seed']}"
        )
    echo = payload.get("config", {})
    mine = _echo(settings)
    if echo != mine:
        diffs = sorted(
            key for key in set(echo) | set(mine)
            if echo.get(key) != mine.get(key)
        )
        raise ValueError(
            f"{filename} was produced under a different configuration "
            f"(differs at: {', '.join(diffs)})"
        )
    return payload


def _load_and_split(settings):
    data = tabular.load_csv(settings["data"], settings["label"])
    seeds = pipeline.derive_seeds(settings["seed"])
    pair = tabular.split(
        data, settings["train_fraction"], seeds["split"],
        stratify=settings["stratify_split"],
    )
    return data, seeds, pair


def cmd_run(args, parser) -> int:
    settings = resolve_settings(args, parser)
    data = tabular.load_csv(settings["data"], settings["label"])
    report = pipeline.run_cascade(data, _build_config(settings))
    payload = {**_envelope(settings), **pipeline.report_body(report)}
    _write_artifact(settings["out"], "cascade_report.json",
                    render.json_dumps(payload))
    _write_evaluation(settings["out"], metrics.report_dict(report.evaluation),
                      report.roc)
    if not settings["no_text"]:
        _write_artifact(settings["out"], "wald_table.txt",
                        logit.format_wald_table(report.stage2.table))
    ev = report.evaluation
    print(
        f"run: kept {len(report.stage1.kept_names)} features, "
        f"{len(report.stage2.trace.surviving)} survived refinement, "
        f"k={report.stage3.selection.chosen_k}; "
        f"test accuracy {ev.accuracy:.4f} on {ev.n_rows} rows"
    )
    print(f"artifacts written to {settings['out']}")
    return 0


def cmd_screen(args, parser) -> int:
    settings = resolve_settings(args, parser)
    _, seeds, pair = _load_and_split(settings)
    cfg = _build_config(settings)
    result = pipeline.stage1_screen(
        pair.train, cfg.forest_params(seeds["forest"]), cfg.criteria(),
        threads=settings["threads"],
    )
    payload = {
        **_envelope(settings),
        "seeds": seeds,
        "split": pipeline.split_section(pair, settings["stratify_split"]),
        "stage1": pipeline.stage1_section(result),
    }
    _write_artifact(settings["out"], "stage1.json", render.json_dumps(payload))
    print(
        f"screen: kept {len(result.kept_names)} of {len(result.names)} "
        f"features (threshold {result.threshold:.4f}, "
        f"oob error {result.model.oob_error:.4f})"
    )
    return 0


def cmd_refine(args, parser) -> int:
    settings = resolve_settings(args, parser)
    stage1 = _load_stage_artifact(settings, "stage1.json")
    _, _, pair = _load_and_split(settings)
    result = pipeline.stage2_refine(
        pair.train, stage1["stage1"]["kept"], settings["alpha"],
        max_rounds=settings["max_elimination_rounds"],
    )
    payload = {**_envelope(settings),
               "stage2": pipeline.stage2_section(result)}
    _write_artifact(settings["out"], "stage2.json", render.json_dumps(payload))
    if not settings["no_text"]:
        _write_artifact(settings["out"], "wald_table.txt",
                        logit.format_wald_table(result.table))
    print(
        f"refine: {len(result.trace.surviving)} of "
        f"{len(result.input_names)} features significant at "
        f"alpha={settings['alpha']}"
    )
    return 0


def cmd_train(args, parser) -> int:
    settings = resolve_settings(args, parser)
    stage2 = _load_stage_artifact(settings, "stage2.json")
    _, seeds, pair = _load_and_split(settings)
    result = pipeline.stage3_train(
        pair.train, stage2["stage2"]["surviving"], seeds["folds"],
        k_max=settings["k_max"], folds=settings["folds"],
        stratify=settings["stratify_cv"],
        select_on_all=settings["select_on_all"],
    )
    payload = {**_envelope(settings),
               "stage3": pipeline.stage3_section(result)}
    _write_artifact(settings["out"], "stage3.json", render.json_dumps(payload))
    if not settings["no_text"]:
        _write_artifact(settings["out"], "k_selection.txt",
                        neighbors.format_selection_table(result.selection))
    print(
        f"train: chose k={result.selection.chosen_k} over "
        f"{result.selection.folds} folds on {len(result.features)} features"
    )
    return 0


def cmd_evaluate(args, parser) -> int:
    settings = resolve_settings(args, parser)
    stage1 = _load_stage_artifact(settings, "stage1.json")
    stage2 = _load_stage_artifact(settings, "stage2.json")
    stage3 = _load_stage_artifact(settings, "stage3.json")
    _, _, pair = _load_and_split(settings)
    features = stage3["stage3"]["features"]
    chosen_k = stage3["stage3"]["k_selection"]["chosen_k"]
    model = neighbors.fit_knn(pair.train.select(features), chosen_k)
    evaluation, roc = pipeline.evaluate_model(model, pair.test)
    evaluation_dict = metrics.report_dict(evaluation)
    _write_evaluation(settings["out"], evaluation_dict, roc)
    payload = {
        **_envelope(settings),
        "seeds": stage1["seeds"],
        "split": stage1["split"],
        "stage1": stage1["stage1"],
        "stage2": stage2["stage2"],
        "stage3": stage3["stage3"],
        "evaluation": evaluation_dict,
    }
    _write_artifact(settings["out"], "cascade_report.json",
                    render.json_dumps(payload))
    print(
        f"evaluate: accuracy {evaluation.accuracy:.4f} on "
        f"{evaluation.n_rows} test rows (k={chosen_k})"
    )
    return 0


def cmd_synth(args, parser) -> int:
    try:
        data = tabular.synth_dataset(
            args.n, args.informative, args.noise, args.seed, shift=args.shift
        )
    except tabular.DataValidationError as exc:
        parser.error(str(exc))
    tabular.write_csv(data, args.out, label_column="group")
    c0, c1 = data.class_counts()
    print(
        f"synth: wrote {data.n_rows} rows ({c0} class 0, {c1} class 1), "
        f"{data.n_features} features to {args.out}"
    )
    return 0


_HANDLERS = {
    "run": cmd_run,
    "screen": cmd_screen,
    "refine": cmd_refine,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "synth": cmd_synth,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _HANDLERS[args.command](args, parser)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
