"""Command-line frontend: ``shortspam <subcommand> ...``.

Data goes to files or stdout, diagnostics to stderr. Passing ``-`` as a path
reads stdin or writes stdout. Every run that writes to a file also writes
``<output>.manifest.json`` with the configuration, library versions, seeds
and input digests; only its ``created_at`` field varies between identical runs.

Exit codes: 0 success, 1 domain error (bad data, missing file), 2 usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import platform
import sys
from collections.abc import Callable, Sequence
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

import numpy as np

from shortspam import __version__
from shortspam import eval as ev
from shortspam import forensics, synth
from shortspam.enrich import ALL_SOURCES, Source, load_verdict_store, load_whois_store, label_dataset
from shortspam.errors import ShortSpamError
from shortspam.features import Mode, dumps_matrix, extract, read_matrix
from shortspam.learn import (
    DEFAULT_BACKEND,
    DEFAULT_SEED,
    TrainParams,
    available_backends,
    load_model,
    make_trainer,
    predict_matrix,
    save_model,
    train,
)
from shortspam.model import Dataset, Label, dumps_dataset, load_dataset

ENV_WHOIS = "SHORTSPAM_WHOIS"
ENV_VERDICTS = "SHORTSPAM_VERDICTS_DIR"
KINDS = ("naive_bayes", "decision_tree", "random_forest")
FORMATS = ("text", "json", "csv")


# -- io helpers ----------------------------------------------------------------


def _emit(text: str, path: str) -> None:
    if path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text, encoding="utf-8")


def _digest(path: str) -> str | None:
    if path == "-" or not Path(path).is_file():
        return None
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _note(msg: str) -> None:
    print(msg, file=sys.stderr)


def _config(args: argparse.Namespace) -> dict[str, Any]:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func",) and not k.startswith("_")}


def write_manifest(args: argparse.Namespace, out: str, inputs: Sequence[str] = (),
                   seeds: dict[str, int] | None = None, manifest_path: str | None = None) -> None:
    """Write the run manifest beside ``out``; nothing is written for stdout."""
    if out == "-" and manifest_path is None:
        return
    doc = {
        "command": args.command,
        "config": _config(args),
        "inputs": {p: _digest(p) for p in inputs if p},
        "seeds": seeds or {},
        "versions": {
            "shortspam": __version__,
            "numpy": np.__version__,
            "python": platform.python_version(),
            "backend": getattr(args, "backend", None) or DEFAULT_BACKEND,
        },
        "created_at": datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ"),
    }
    path = manifest_path or f"{out}.manifest.json"
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n", encoding="utf-8")


def _whois_path(args: argparse.Namespace) -> str:
    path = args.whois or os.environ.get(ENV_WHOIS)
    if not path:
        raise ShortSpamError(f"no WHOIS fixture: pass --whois or set {ENV_WHOIS}")
    return path


def _params(args: argparse.Namespace) -> TrainParams:
    return TrainParams(
        tree_count=args.trees,
        max_depth=args.max_depth,
        min_leaf=args.min_leaf,
        features_per_split=args.features_per_split,
        seed=args.seed,
        bootstrap=not args.no_bootstrap,
    )


def _matrix(args: argparse.Namespace):
    m = read_matrix(args.input)
    mode = getattr(args, "mode", None)
    if mode is not None and Mode(mode) is not m.mode:
        m = m.project(Mode(mode))
    return m


# -- subcommands ------------------------------------------------------------------


def cmd_ingest(args: argparse.Namespace) -> int:
    ds = load_dataset(args.input)
    _note(ds.load_report.summary())
    _emit(dumps_dataset(ds), args.out)
    write_manifest(args, args.out, [args.input])
    return 0


def cmd_label(args: argparse.Namespace) -> int:
    directory = args.verdicts_dir or os.environ.get(ENV_VERDICTS)
    if not directory:
        raise ShortSpamError(f"no verdict fixtures: pass --verdicts-dir or set {ENV_VERDICTS}")
    if not Path(directory).is_dir():
        raise ShortSpamError(f"verdict directory {directory} does not exist")
    providers = [Source(s) for s in args.providers.split(",")] if args.providers else list(ALL_SOURCES)
    ds = load_dataset(args.input)
    labeled, report = label_dataset(ds, providers, load_verdict_store(directory, providers))
    _note(json.dumps(report.to_dict(), sort_keys=True) if args.format == "json" else
          f"labeled {report.malicious} malicious, {report.benign} benign "
          f"({report.overwritten} overwritten, {report.changed} changed)")
    _emit(dumps_dataset(labeled), args.out)
    write_manifest(args, args.out, [args.input])
    return 0


def cmd_extract(args: argparse.Namespace) -> int:
    whois = _whois_path(args)
    ds = load_dataset(args.input)
    m = extract(ds, load_whois_store(whois), Mode(args.mode))
    _emit(dumps_matrix(m), args.out)
    write_manifest(args, args.out, [args.input, whois])
    return 0


def cmd_split(args: argparse.Namespace) -> int:
    m = read_matrix(args.input)
    tr, te = ev.split_holdout(m, args.test_fraction, args.seed)
    _emit(dumps_matrix(tr), args.train_out)
    _emit(dumps_matrix(te), args.test_out)
    _note(f"train {len(tr)} rows, test {len(te)} rows")
    write_manifest(args, args.train_out, [args.input], {"split": args.seed})
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    m = _matrix(args)
    model = train(args.kind, m, _params(args), workers=args.workers, backend=args.backend)
    if args.out == "-":
        _emit(model.dumps(), "-")
    else:
        save_model(model, args.out)
    oob = model.parameters.get("oob_accuracy") if args.kind == "random_forest" else None
    _note(f"trained {args.kind} on {len(m)} rows, {len(m.feature_names)} features"
          + (f", out-of-bag accuracy {oob:.4f}" if oob is not None else ""))
    write_manifest(args, args.out, [args.input], {"train": args.seed})
    return 0


def cmd_predict(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    m = read_matrix(args.input)
    labels, scores = predict_matrix(model, m, backend=args.backend)
    rows = [
        {"global_hash": v.global_hash, "label": "malicious" if y else "benign", "score": float(s)}
        for v, y, s in zip(m.rows, labels, scores)
    ]
    if args.format == "json":
        text = json.dumps(rows, indent=2) + "\n"
    elif args.format == "csv":
        text = "global_hash,label,score\n" + "".join(
            f"{r['global_hash']},{r['label']},{r['score']!r}\n" for r in rows)
    else:
        text = "".join(f"{r['global_hash']:<24}{r['label']:<11}{r['score']:.4f}\n" for r in rows)
    _emit(text, args.out)
    write_manifest(args, args.out, [args.model, args.input])
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    m = read_matrix(args.input)
    report = ev.evaluate(model, m, backend=args.backend)
    report.label = args.name or model.kind
    _emit(ev.render_report(report, args.format), args.out)
    write_manifest(args, args.out, [args.model, args.input])
    return 0


def cmd_crossval(args: argparse.Namespace) -> int:
    m = _matrix(args)
    trainer = make_trainer(args.kind, _params(args), workers=1, backend=args.backend)
    report = ev.cross_validate(trainer, m, args.folds, args.seed, workers=args.workers,
                               backend=args.backend)
    report.label = args.kind
    _emit(ev.render_report(report, args.format), args.out)
    write_manifest(args, args.out, [args.input], {"folds": args.seed, "train": args.seed})
    return 0


def cmd_rank(args: argparse.Namespace) -> int:
    m = _matrix(args)
    _emit(ev.render_ranking(ev.info_gain_rank(m, args.bins), args.format), args.out)
    write_manifest(args, args.out, [args.input])
    return 0


def cmd_susfac(args: argparse.Namespace) -> int:
    ds = load_dataset(args.input)
    grid = forensics.default_grid(args.step)
    _emit(forensics.render(forensics.susfac_distribution(ds, grid), args.format), args.out)
    write_manifest(args, args.out, [args.input])
    return 0


def cmd_communities(args: argparse.Namespace) -> int:
    ds = load_dataset(args.input)
    report = forensics.detect_communities(forensics.account_items(ds, args.by), args.threshold,
                                          args.min_size)
    _emit(forensics.render(report, args.format), args.out)
    write_manifest(args, args.out, [args.input])
    return 0


def cmd_liveness(args: argparse.Namespace) -> int:
    whois = _whois_path(args)
    ds = load_dataset(args.input)
    if args.label != "all":
        keep = {h: l for h, l in ds.links.items() if l.label is Label(args.label)}
        ds = Dataset(keep, ds.encoders, {h: c for h, c in ds.clicks.items() if h in keep})
    report = forensics.domain_liveness(ds, load_whois_store(whois))
    _emit(forensics.render(report, args.format), args.out)
    write_manifest(args, args.out, [args.input, whois])
    return 0


def cmd_persistence(args: argparse.Namespace) -> int:
    ds = load_dataset(args.input)
    report = forensics.persistence(ds, args.top_n, args.cutoff)
    _emit(forensics.render(report, args.format), args.out)
    write_manifest(args, args.out, [args.input])
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    p = synth.SynthParams(
        n_links=args.n_links,
        malicious_fraction=args.malicious_fraction,
        zero_click_fraction_malicious=args.zero_click_malicious,
        zero_click_fraction_benign=args.zero_click_benign,
        seed=args.seed,
        separation=args.separation,
    )
    paths = synth.write_output(synth.generate(p), args.out_dir)
    _note(f"wrote {paths['dataset']}, {paths['whois']}, {paths['verdicts']}/, {paths['manifest']}")
    write_manifest(args, args.out_dir, seeds={"synth": args.seed},
                   manifest_path=str(Path(args.out_dir) / "run.manifest.json"))
    return 0


# -- parser -------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser, *, fmt: bool = True, out: bool = True) -> None:
    if out:
        p.add_argument("--out", "-o", default="-", help="output path (default: stdout)")
    if fmt:
        p.add_argument("--format", choices=FORMATS, default="text")


def _add_input(p: argparse.ArgumentParser, what: str) -> None:
    p.add_argument("--in", "-i", dest="input", default="-", help=f"{what} (default: stdin)")


def _add_backend(p: argparse.ArgumentParser) -> None:
    p.add_argument("--backend", choices=available_backends(), default=None,
                   help=f"kernel implementation (default: {DEFAULT_BACKEND})")


def _add_train_params(p: argparse.ArgumentParser) -> None:
    p.add_argument("--kind", choices=KINDS, default="random_forest")
    p.add_argument("--mode", choices=[m.value for m in Mode], default=None,
                   help="feature subset (default: whatever the input has)")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--trees", type=int, default=TrainParams.tree_count)
    p.add_argument("--max-depth", type=int, default=None)
    p.add_argument("--min-leaf", type=int, default=1)
    p.add_argument("--features-per-split", type=int, default=None)
    p.add_argument("--no-bootstrap", action="store_true")
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    _add_backend(p)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="shortspam", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    def add(name: str, fn: Callable[[argparse.Namespace], int], help: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help, description=help)
        p.set_defaults(func=fn)
        return p

    p = add("ingest", cmd_ingest, "validate a JSONL dataset and re-emit it normalised")
    _add_input(p, "dataset JSONL")
    _add_common(p, fmt=False)

    p = add("label", cmd_label, "label links from blacklist verdict fixtures")
    _add_input(p, "dataset JSONL")
    _add_common(p)
    p.add_argument("--verdicts-dir", default=None, help=f"fixture directory (env {ENV_VERDICTS})")
    p.add_argument("--providers", default=None,
                   help="comma-separated subset of " + ",".join(s.value for s in ALL_SOURCES))

    p = add("extract", cmd_extract, "compute the feature matrix (CSV)")
    _add_input(p, "labeled dataset JSONL")
    _add_common(p, fmt=False)
    p.add_argument("--whois", default=None, help=f"WHOIS fixture JSONL (env {ENV_WHOIS})")
    p.add_argument("--mode", choices=[m.value for m in Mode], default=Mode.FULL.value)

    p = add("split", cmd_split, "stratified train/test holdout split")
    _add_input(p, "feature CSV")
    p.add_argument("--train-out", required=True)
    p.add_argument("--test-out", required=True)
    p.add_argument("--test-fraction", type=float, default=0.25)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)

    p = add("train", cmd_train, "train a classifier")
    _add_input(p, "feature CSV")
    _add_common(p, fmt=False)
    _add_train_params(p)

    p = add("predict", cmd_predict, "score feature rows with a trained model")
    _add_input(p, "feature CSV")
    p.add_argument("--url-features", dest="input", help="alias for --in")
    p.add_argument("--model", required=True)
    _add_common(p)
    _add_backend(p)

    p = add("evaluate", cmd_evaluate, "evaluate a model on a labeled feature CSV")
    _add_input(p, "feature CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--name", default=None, help="row label in the results table")
    _add_common(p)
    _add_backend(p)

    p = add("crossval", cmd_crossval, "stratified k-fold cross-validation")
    _add_input(p, "feature CSV")
    _add_common(p)
    _add_train_params(p)
    p.add_argument("--folds", type=int, default=10)

    p = add("rank", cmd_rank, "rank features by information gain")
    _add_input(p, "feature CSV")
    _add_common(p)
    p.add_argument("--mode", choices=[m.value for m in Mode], default=None)
    p.add_argument("--bins", type=int, default=10)

    p = add("susfac", cmd_susfac, "cumulative suspicion-factor distribution of encoders")
    _add_input(p, "dataset JSONL")
    _add_common(p)
    p.add_argument("--step", type=int, default=1, help="grid step in hundredths")

    p = add("communities", cmd_communities, "group encoders with overlapping targets")
    _add_input(p, "dataset JSONL")
    _add_common(p)
    p.add_argument("--by", choices=("domain", "url"), default="domain")
    p.add_argument("--threshold", type=float, default=forensics.DEFAULT_COMMUNITY_THRESHOLD)
    p.add_argument("--min-size", type=int, default=2)

    p = add("liveness", cmd_liveness, "fraction of target domains that are dead")
    _add_input(p, "dataset JSONL")
    _add_common(p)
    p.add_argument("--whois", default=None, help=f"WHOIS fixture JSONL (env {ENV_WHOIS})")
    p.add_argument("--label", choices=("all", "malicious", "benign"), default="all")

    p = add("persistence", cmd_persistence, "clicks on warned links after a cutoff")
    _add_input(p, "dataset JSONL")
    _add_common(p)
    p.add_argument("--top-n", type=int, default=1000)
    p.add_argument("--cutoff", type=int, default=0, help="epoch seconds")

    p = add("synth", cmd_synth, "generate a synthetic dataset with fixtures")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--n-links", type=int, default=synth.SynthParams.n_links)
    p.add_argument("--malicious-fraction", type=float, default=synth.SynthParams.malicious_fraction)
    p.add_argument("--zero-click-malicious", type=float,
                   default=synth.SynthParams.zero_click_fraction_malicious)
    p.add_argument("--zero-click-benign", type=float,
                   default=synth.SynthParams.zero_click_fraction_benign)
    p.add_argument("--seed", type=int, default=synth.SynthParams.seed)
    p.add_argument("--separation", choices=sorted(synth.MIX), default="easy")
    return parser


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ShortSpamError, ValueError, OSError) as exc:
        _note(f"shortspam {args.command}: error: {exc}")
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
