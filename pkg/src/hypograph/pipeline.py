"""End-to-end workflow: featurize, train, hypothesize, combine, verify, write artifacts."""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import math
import platform
import time
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Callable

import numpy as np

import hypograph
from hypograph import _kernels
from hypograph.boost import BoostConfig, BoostedEnsemble, fit_ensemble, importances, predict_matrix, ranked_features
from hypograph.combine import OPS, CombineConfig, MacroFeature, macro_row, search_macro_features
from hypograph.combine import CSV_COLUMNS as COMBINE_COLUMNS
from hypograph.fingerprint import HASH_VERSION, FeatureMatrix, SubgraphRegistry, featurize_dataset, format_id
from hypograph.hypothesis import CSV_COLUMNS as HYPOTHESIS_COLUMNS
from hypograph.hypothesis import Hypothesis, HypothesisConfig, generate_hypotheses, hypothesis_row
from hypograph.ingest import Dataset
from hypograph.render import render_histogram_svg, render_subgraph_dot
from hypograph.verify import MatchConfig, MutationConfig, make_oracle, matched_pairs, mutation_test


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    radius: int = 3
    stages: int = 200
    shrinkage: float = 0.1
    depth: int = 3
    min_leaf: int = 5
    subsample: float = 1.0
    colsample: float = 1.0
    top_k: int = 30
    d_min: float = 0.2
    support_min: int | None = None
    bins: int = 40
    property: str = "y"
    ops: tuple[str, ...] = OPS
    k: int = 30
    gain_min: float = 0.1
    triples: bool = False
    tau: int = 2
    match_scope: str = "top"
    min_pairs: int = 10
    verify_top: int = 10
    oracle: str | None = None
    attempts: int = 200
    mutation_samples: int | None = 200
    validation: float = 0.1
    seed: int = 0
    threads: int = 1
    timings: bool = False

    def __post_init__(self):
        if self.radius < 0:
            raise ConfigError("radius must be >= 0")
        if not 0 <= self.validation < 1:
            raise ConfigError("validation fraction must be in [0, 1)")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        try:
            self.boost_config()
            self.combine_config()
            MatchConfig(self.tau, self.match_scope, self.min_pairs)
            MutationConfig(self.attempts, self.seed, self.mutation_samples, self.min_pairs, self.threads)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.top_k < 1 or self.bins < 2 or self.verify_top < 0:
            raise ConfigError("top_k must be >= 1, bins >= 2, verify_top >= 0")

    def boost_config(self) -> BoostConfig:
        return BoostConfig(self.stages, self.shrinkage, self.depth, self.min_leaf, self.seed,
                           self.subsample, self.colsample)

    def hypothesis_config(self) -> HypothesisConfig:
        return HypothesisConfig(self.top_k, self.d_min, self.support_min, self.bins, self.property)

    def combine_config(self) -> CombineConfig:
        return CombineConfig(self.k, self.ops, self.gain_min, self.support_min, self.d_min, self.triples)

    def to_json(self) -> dict:
        out = dataclasses.asdict(self)
        out["ops"] = list(self.ops)
        return out


def _convert(name: str, kind, raw: str):
    text = raw.strip()
    optional = "None" in str(kind)
    if optional and text.lower() in ("", "none", "auto"):
        return None
    base = str(kind).replace(" | None", "")
    try:
        if base == "bool":
            if text.lower() in ("1", "true", "yes", "on"):
                return True
            if text.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if base == "int":
            return int(text)
        if base == "float":
            return float(text)
        if base.startswith("tuple"):
            return tuple(p.strip().upper() for p in text.split(",") if p.strip())
        return text
    except ValueError:
        raise ConfigError(f"bad value {raw!r} for {name}") from None


FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def coerce_config(values: dict[str, str]) -> dict:
    out = {}
    for key, raw in values.items():
        name = key.replace("-", "_")
        if name not in FIELD_TYPES:
            raise ConfigError(f"unknown config key {key!r}")
        out[name] = _convert(name, FIELD_TYPES[name], raw)
    return out


def read_config_file(path: str | Path) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment line."""
    values = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ConfigError(f"{path}: config file not found") from None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = stripped.split("=", 1)
        key = key.strip()
        try:
            values.update(coerce_config({key: value}))
        except ConfigError as exc:
            raise ConfigError(f"{path}:{lineno}: {exc}") from None
    return values


# ---------------------------------------------------------------------------
# results


@dataclass
class RunResult:
    config: RunConfig
    dataset: Dataset
    matrix: FeatureMatrix | None = None
    registry: SubgraphRegistry | None = None
    ensemble: BoostedEnsemble | None = None
    importance: dict[int, float] = field(default_factory=dict)
    train_rows: np.ndarray | None = None
    val_rows: np.ndarray | None = None
    validation_mse: float | None = None
    hypotheses: list[Hypothesis] = field(default_factory=list)
    combined: list[MacroFeature] = field(default_factory=list)
    verification: list[dict] = field(default_factory=list)
    timings: dict[str, float] = field(default_factory=dict)

    @property
    def reported(self) -> list[Hypothesis]:
        return [h for h in self.hypotheses if not h.suppressed]


STEPS = ("featurize", "train", "hypotheses", "combine", "verify")


def split_rows(n: int, fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Seeded train/validation split; validation may be empty for tiny data."""
    n_val = int(round(fraction * n))
    if n - n_val < 2:
        n_val = 0
    perm = np.random.default_rng([seed, 90210]).permutation(n)
    return np.sort(perm[n_val:]), np.sort(perm[:n_val])


def run_pipeline(ds: Dataset, config: RunConfig, until: str = "verify",
                 oracle: Callable | None = None) -> RunResult:
    if len(ds) == 0:
        raise ValueError("dataset is empty")
    steps = STEPS[: STEPS.index(until) + 1]
    res = RunResult(config, ds)
    clock = time.perf_counter

    t = clock()
    res.matrix, res.registry = featurize_dataset(ds, config.radius)
    res.timings["featurize"] = clock() - t
    if "train" not in steps:
        return res

    if len(ds) < 2:
        raise ValueError("need at least two samples to train")
    t = clock()
    y = ds.targets
    res.train_rows, res.val_rows = split_rows(len(ds), config.validation, config.seed)
    X_train = res.matrix.take(res.train_rows)
    res.ensemble = fit_ensemble(X_train, y[res.train_rows], config.boost_config())
    res.importance = importances(res.ensemble, X_train)
    if len(res.val_rows):
        pred = predict_matrix(res.ensemble, res.matrix.take(res.val_rows))
        res.validation_mse = float(np.mean((y[res.val_rows] - pred) ** 2))
    res.timings["train"] = clock() - t
    if "hypotheses" not in steps:
        return res

    t = clock()
    res.hypotheses = generate_hypotheses(
        res.ensemble, res.matrix, y, res.registry, config.hypothesis_config(),
        include_suppressed=True, table=res.importance,
    )
    res.timings["hypotheses"] = clock() - t
    if "combine" not in steps:
        return res

    t = clock()
    candidates = ranked_features(res.importance)[: config.k]
    res.combined = search_macro_features(candidates, res.matrix, y, config.combine_config())
    res.timings["combine"] = clock() - t
    if "verify" not in steps:
        return res

    t = clock()
    if oracle is None and config.oracle:
        oracle = make_oracle(config.oracle)
    context = [h.feature for h in res.hypotheses]
    match_cfg = MatchConfig(config.tau, config.match_scope, config.min_pairs)
    mut_cfg = MutationConfig(config.attempts, config.seed, config.mutation_samples, config.min_pairs, config.threads)
    for h in res.reported[: config.verify_top]:
        entry = {
            "hypothesis": h.feature_expr,
            "direction": h.stats.direction,
            "s": h.stats.s,
            "matched_pairs": matched_pairs(ds, res.matrix, h.feature, match_cfg, context, h.stats.direction).to_json(),
        }
        if oracle is not None:
            entry["mutation"] = mutation_test(
                ds, h.feature, oracle, res.registry, mut_cfg, context, h.stats.direction
            ).to_json()
        res.verification.append(entry)
    res.timings["verify"] = clock() - t
    return res


# ---------------------------------------------------------------------------
# artifacts


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _json_text(obj) -> str:
    return json.dumps(_finite(obj), indent=1, sort_keys=True, allow_nan=False) + "\n"


def _finite(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return "nan" if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj


def file_digest(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_artifacts(res: RunResult, out: str | Path, command: str, inputs: dict[str, str]) -> list[Path]:
    """Write every artifact the run produced, in a fixed order."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    def put(name: str, text: str) -> None:
        path = out / name
        path.write_text(text, encoding="utf-8")
        written.append(path)

    if res.ensemble is None and res.matrix is not None:
        put("features.json", _json_text(res.matrix.to_json()))
        put("registry.json", _json_text(res.registry.to_json()))
    if res.ensemble is not None:
        put("model.json", res.ensemble.dumps() + "\n")
        put("importances.csv", _csv_text(
            ("rank", "feature", "importance"),
            [(i + 1, format_id(f), repr(res.importance[f])) for i, f in enumerate(ranked_features(res.importance))],
        ))
    if res.hypotheses:
        put("hypotheses.csv", _csv_text(HYPOTHESIS_COLUMNS, [hypothesis_row(h) for h in res.reported]))
        put("hypotheses.json", _json_text({"hypotheses": [h.to_json() for h in res.hypotheses]}))
        for h in res.reported:
            caption = f"{h.feature_expr} {h.subgraph}"
            put(f"hist_{h.feature_expr}.svg", render_histogram_svg(h.histogram, caption, res.config.property))
            put(f"motif_{h.feature_expr}.dot", render_subgraph_dot(res.registry[h.feature], h.feature_expr))
    elif res.ensemble is not None and command in ("hypotheses", "combine", "verify", "run"):
        put("hypotheses.csv", _csv_text(HYPOTHESIS_COLUMNS, []))
        put("hypotheses.json", _json_text({"hypotheses": []}))
    if command in ("combine", "verify", "run") and res.ensemble is not None:
        put("combined_hypotheses.csv", _csv_text(
            COMBINE_COLUMNS, [macro_row(i + 1, m) for i, m in enumerate(res.combined)]
        ))
    if command in ("verify", "run") and res.ensemble is not None:
        put("verification.json", _json_text({"reports": res.verification}))
    put("manifest.json", _json_text(manifest(res, command, inputs)))
    return written


def manifest(res: RunResult, command: str, inputs: dict[str, str]) -> dict:
    import scipy

    out = {
        "tool": "hypograph",
        "version": hypograph.__version__,
        "command": command,
        "hash_version": HASH_VERSION,
        "kernel_backend": _kernels.BACKEND,
        "modules": {"numpy": np.__version__, "scipy": scipy.__version__, "python": platform.python_version()},
        "config": res.config.to_json(),
        "inputs": inputs,
        "dataset": {"name": res.dataset.name, "n_samples": len(res.dataset)},
    }
    if res.matrix is not None:
        out["features"] = {"n_features": res.matrix.n_features, "collisions": len(res.registry.collisions)}
    if res.ensemble is not None:
        out["model"] = {
            "n_train": int(len(res.train_rows)),
            "n_validation": int(len(res.val_rows)),
            "train_mse": res.ensemble.train_mse[-1],
            "validation_mse": res.validation_mse,
        }
    if res.config.timings:
        out["timings"] = {k: round(v, 6) for k, v in res.timings.items()}
    return out


__all__ = [
    "ConfigError",
    "RunConfig",
    "RunResult",
    "coerce_config",
    "file_digest",
    "read_config_file",
    "run_pipeline",
    "split_rows",
    "write_artifacts",
]
