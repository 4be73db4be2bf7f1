"""Command-line front end.

Exit codes: 0 success, 1 usage error (bad flags or config), 2 data error.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from hypograph import __version__
from hypograph.ingest import IngestError, load_dataset
from hypograph.pipeline import (
    ConfigError,
    RunConfig,
    coerce_config,
    file_digest,
    read_config_file,
    run_pipeline,
    write_artifacts,
)
from hypograph.synth import SynthError, SynthSpec, gen_dataset, write_dataset

USAGE_ERROR = 1
DATA_ERROR = 2

# command -> last pipeline step it runs
STEP_OF = {
    "featurize": "featurize",
    "train": "train",
    "hypotheses": "hypotheses",
    "combine": "combine",
    "verify": "verify",
    "run": "verify",
}

# (flag, config key, type, help)
COMMON_FLAGS = (
    ("--radius", "radius", int, "environment radius R (default 3)"),
    ("--stages", "stages", int, "boosting stages M (default 200)"),
    ("--shrinkage", "shrinkage", float, "shrinkage gamma (default 0.1)"),
    ("--depth", "depth", int, "maximum tree depth (default 3)"),
    ("--min-leaf", "min_leaf", int, "minimum samples per leaf (default 5)"),
    ("--subsample", "subsample", float, "row subsampling per stage (default 1.0)"),
    ("--colsample", "colsample", float, "column subsampling per stage (default 1.0)"),
    ("--top-k", "top_k", int, "features considered for hypotheses (default 30)"),
    ("--d-min", "d_min", float, "minimum |d| for a directional hypothesis (default 0.2)"),
    ("--support-min", "support_min", str, "minimum support per side (default max(5, 0.5%% of n))"),
    ("--bins", "bins", int, "histogram bins (default 40)"),
    ("--property", "property", str, "property name used in sentences (default y)"),
    ("--ops", "ops", str, "comma-separated operators for combinations (default AND,OR,XOR)"),
    ("--k", "k", int, "features entering combination search (default 30)"),
    ("--gain-min", "gain_min", float, "minimum interaction gain (default 0.1)"),
    ("--tau", "tau", int, "matched-pair Hamming threshold (default 2)"),
    ("--match-scope", "match_scope", str, "features counted by the Hamming distance: top or all (default top)"),
    ("--min-pairs", "min_pairs", int, "pairs needed before agreement is judged (default 10)"),
    ("--verify-top", "verify_top", int, "hypotheses to verify (default 10)"),
    ("--oracle", "oracle", str, "property oracle: synth:<ground_truth.json> or a command"),
    ("--attempts", "attempts", int, "mutation attempts per sample (default 200)"),
    ("--mutation-samples", "mutation_samples", str, "samples tried by the mutation protocol (default 200, 'all')"),
    ("--validation", "validation", float, "validation fraction (default 0.1)"),
    ("--seed", "seed", int, "random seed (default 0)"),
    ("--threads", "threads", int, "worker threads for mutation testing (default 1)"),
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE_ERROR, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hypograph", description="Mine subgraph hypotheses from labeled-graph datasets.")
    parser.add_argument("--version", action="version", version=f"hypograph {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a planted-rule dataset")
    p.add_argument("--spec", required=True, help="synth spec JSON file")
    p.add_argument("--out", required=True, help="output dataset (JSON lines)")
    p.add_argument("--truth", help="ground-truth output (default: ground_truth.json next to --out)")
    p.add_argument("--seed", type=int, help="override the spec seed")

    helps = {
        "featurize": "write the feature matrix and subgraph registry",
        "train": "train the boosted ensemble",
        "hypotheses": "rank single-feature hypotheses",
        "combine": "search logical combinations of features",
        "verify": "check hypotheses by matched pairs and mutations",
        "run": "the whole pipeline",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--data", required=True, help="graph JSON lines, or molecule file (.smi/.tsv/.txt)")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--config", help="flat 'key = value' config file; flags override it")
        p.add_argument("--triples", action="store_true", default=None, help="also search triples (K <= 15)")
        p.add_argument("--timings", action="store_true", default=None,
                       help="record timings in the manifest (breaks byte-identical reruns)")
        for flag, key, kind, text in COMMON_FLAGS:
            p.add_argument(flag, dest=key, type=kind, default=None, help=text)
    return parser


def _config_from(args) -> RunConfig:
    values = {}
    if args.config:
        values.update(read_config_file(args.config))
    raw = {}
    for _, key, kind, _ in COMMON_FLAGS:
        v = getattr(args, key)
        if v is not None:
            raw[key] = str(v)
    for key in ("triples", "timings"):
        if getattr(args, key):
            raw[key] = "true"
    if raw.get("mutation_samples", "").lower() == "all":
        raw["mutation_samples"] = "none"
    values.update(coerce_config(raw))
    return RunConfig(**values)


def _synth(args) -> int:
    spec = SynthSpec.load(args.spec)
    if args.seed is not None:
        spec = SynthSpec.from_json({**spec.to_json(), "seed": args.seed})
    ds, truth = gen_dataset(spec)
    truth_path = write_dataset(ds, truth, args.out, args.truth)
    print(f"wrote {len(ds)} graphs to {args.out} and ground truth to {truth_path}", file=sys.stderr)
    return 0


def _pipeline(args) -> int:
    config = _config_from(args)
    ds = load_dataset(args.data)
    if len(ds) == 0:
        raise IngestError("dataset is empty", source=args.data)
    res = run_pipeline(ds, config, STEP_OF[args.command])
    inputs = {Path(args.data).name: file_digest(args.data)}
    if args.config:
        inputs[Path(args.config).name] = file_digest(args.config)
    if config.oracle and config.oracle.startswith("synth:"):
        path = config.oracle[len("synth:"):]
        inputs[Path(path).name] = file_digest(path)
    written = write_artifacts(res, args.out, args.command, inputs)
    print(f"{args.command}: wrote {len(written)} files to {args.out}", file=sys.stderr)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "synth":
            return _synth(args)
        return _pipeline(args)
    except ConfigError as exc:
        print(f"hypograph: error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except (IngestError, SynthError, ValueError, OSError) as exc:
        print(f"hypograph: error: {exc}", file=sys.stderr)
        return DATA_ERROR


if __name__ == "__main__":
    sys.exit(main())
