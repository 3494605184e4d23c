"""Command-line entry point: ``rare-event <command> [options]``.

Every command reads an experiment configuration (YAML or JSON, see
``ExperimentConfig``), applies ``--set key=value`` overrides and the
convenience flags, validates the result and only then starts computing.
Reports are JSON-lines files written to the output directory, which
defaults to ``$RARE_EVENT_OUTPUT_DIR`` or ``./rare_event_out``.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import re
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from . import __version__
from .classifiers import FAMILIES, ClassifierSpec
from .csvio import ingest_csv, write_csv
from .errors import ConfigError, RareEventError
from .evaluation import (
    GRID_PRESETS,
    EvalPolicy,
    ExperimentReport,
    HyperGrid,
    compare_fold_strategies,
    cross_validate,
    grid_preset,
    nested_grid_search,
)
from .folds import find_event_episodes, partition_folds, sample_blocks
from .synth import generate, preset
from .timeseries import PatternSet, TimeSeries, impute_missing, make_patterns

log = logging.getLogger("rare_event")

OUTPUT_ENV = "RARE_EVENT_OUTPUT_DIR"
DEFAULT_OUTPUT = "rare_event_out"
EXIT_IO = 74
RESAMPLE_MODES = ("none", "undersample", "oversample")
METRIC_NAMES = ("balanced_accuracy", "accuracy")


# -- configuration ---------------------------------------------------------


def to_ticks(value, tick_minutes: int, what: str) -> int:
    """``24`` means 24 ticks, ``"24h"`` means 24 hours; hours must fit exactly."""
    if isinstance(value, bool):
        raise ConfigError(f"{what}: expected ticks or hours, got {value!r}")
    if isinstance(value, (int, np.integer)):
        ticks = int(value)
    elif isinstance(value, str) and re.fullmatch(r"\s*\d+\s*", value):
        ticks = int(value)
    elif isinstance(value, str) and (m := re.fullmatch(r"\s*(\d+(?:\.\d+)?)\s*h\s*", value)):
        minutes = float(m.group(1)) * 60.0
        ticks = round(minutes / tick_minutes)
        if ticks * tick_minutes != minutes:
            raise ConfigError(
                f"{what}: {value} is not a whole number of {tick_minutes}-minute ticks"
            )
    else:
        raise ConfigError(f"{what}: cannot read {value!r} as ticks or hours")
    if ticks < 1:
        raise ConfigError(f"{what} must be at least one tick")
    return ticks


@dataclass
class ExperimentConfig:
    """Validated experiment description.

    ``input`` (CSV path) and ``synth`` (``{"preset": name, ...overrides}``)
    are mutually exclusive. ``omega`` and ``beta`` accept ticks or strings
    such as ``"24h"``. ``classifiers`` entries look like
    ``{"family": "gnb", "hyperparameters": {...}}``; for ``gridsearch`` an
    entry may instead carry ``"grid"``: a preset name or a mapping of
    hyperparameter to value list.
    """

    input: str | None = None
    input_sha256: str | None = None
    synth: dict | None = None
    tick_minutes: int | None = None
    impute: str = "mean"
    tau: int = 4
    omega: list = field(default_factory=lambda: [24])
    beta: Any = 1000
    include_event: bool = True
    resample: str = "none"
    fold_strategy: str = "blocks"
    k: int | None = None
    classifiers: list = field(default_factory=lambda: [{"family": "gnb"}])
    seed: int = 0
    resample_seed: int | None = None
    metric: str = "balanced_accuracy"
    roc_auc: bool = False
    joint_lag_scaling: bool = False
    traces: bool = False

    RUNTIME_KEYS = ("workers", "output_dir")

    @classmethod
    def from_mapping(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        for key in cls.RUNTIME_KEYS:
            data.pop(key, None)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        cfg = cls(**data)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if (self.input is None) == (self.synth is None):
            raise ConfigError("exactly one of 'input' and 'synth' must be given")
        if self.synth is not None:
            if not isinstance(self.synth, dict) or "preset" not in self.synth:
                raise ConfigError("'synth' must be a mapping with a 'preset' key")
            overrides = {k: v for k, v in self.synth.items() if k != "preset"}
            try:
                preset(self.synth["preset"], **_synth_overrides(overrides))
            except TypeError as exc:
                raise ConfigError(f"synth: {exc}") from None
        if self.tick_minutes is not None and (
            not isinstance(self.tick_minutes, int) or self.tick_minutes < 1
        ):
            raise ConfigError("tick_minutes must be a positive integer")
        _check_choice("impute", self.impute, ("mean", "forward_fill"))
        if not isinstance(self.tau, int) or isinstance(self.tau, bool) or self.tau < 0:
            raise ConfigError("tau must be a non-negative integer")
        if not isinstance(self.omega, list):
            self.omega = [self.omega]
        if not self.omega:
            raise ConfigError("omega must list at least one value")
        if not isinstance(self.include_event, bool):
            raise ConfigError("include_event must be true or false")
        _check_choice("resample", self.resample, RESAMPLE_MODES)
        _check_choice("fold_strategy", self.fold_strategy, ("blocks", "partition"))
        if self.k is not None and (not isinstance(self.k, int) or self.k < 2):
            raise ConfigError("k must be an integer >= 2")
        _check_choice("metric", self.metric, METRIC_NAMES)
        if not isinstance(self.seed, int):
            raise ConfigError("seed must be an integer")
        if not isinstance(self.classifiers, list) or not self.classifiers:
            raise ConfigError("classifiers must be a non-empty list")
        for i, entry in enumerate(self.classifiers):
            if isinstance(entry, str):
                entry = self.classifiers[i] = {"family": entry}
            if not isinstance(entry, dict):
                raise ConfigError(f"classifiers[{i}] must be a mapping")
            extra = set(entry) - {"family", "hyperparameters", "grid", "name"}
            if extra:
                raise ConfigError(f"classifiers[{i}]: unknown keys {sorted(extra)}")
            grid = entry.get("grid")
            if isinstance(grid, str):
                _check_choice(f"classifiers[{i}].grid", grid, GRID_PRESETS)
            elif grid is not None:
                if "family" not in entry or not isinstance(grid, dict):
                    raise ConfigError(f"classifiers[{i}]: a custom grid needs 'family' and axes")
                HyperGrid.from_axes(entry["family"], grid)
                for combo in HyperGrid.from_axes(entry["family"], grid):
                    ClassifierSpec(entry["family"], combo)
            else:
                if entry.get("family") not in FAMILIES:
                    raise ConfigError(
                        f"classifiers[{i}]: family must be one of {', '.join(FAMILIES)}"
                    )
                ClassifierSpec(entry["family"], entry.get("hyperparameters") or {})

    def to_dict(self) -> dict:
        return asdict(self)

    # -- resolution ------------------------------------------------------

    def load_series(self) -> TimeSeries:
        if self.synth is not None:
            overrides = {k: v for k, v in self.synth.items() if k != "preset"}
            cfg = preset(self.synth["preset"], **_synth_overrides(overrides))
            if self.tick_minutes is not None:
                cfg = cfg.with_(tick_minutes=self.tick_minutes)
            series = generate(cfg)
        else:
            path = Path(self.input).resolve()
            self.input = str(path)
            digest = hashlib.sha256(path.read_bytes()).hexdigest()
            if self.input_sha256 is not None and self.input_sha256 != digest:
                log.warning("%s changed since the report was written", path)
            self.input_sha256 = digest
            series = ingest_csv(path, self.tick_minutes or 60)
        if series.has_missing:
            series = impute_missing(series, self.impute)
        return series

    def omega_ticks(self, tick_minutes: int) -> list[int]:
        return [to_ticks(w, tick_minutes, "omega") for w in self.omega]

    def beta_ticks(self, tick_minutes: int) -> int:
        return to_ticks(self.beta, tick_minutes, "beta")

    def policy(self, include_event: bool | None = None) -> EvalPolicy:
        return EvalPolicy(
            include_event=self.include_event if include_event is None else include_event,
            resample=self.resample,
            resample_seed=self.seed if self.resample_seed is None else self.resample_seed,
            joint_lag_scaling=self.joint_lag_scaling,
            metric=self.metric,
            with_auc=self.roc_auc,
            keep_traces=self.traces,
        )


def _check_choice(name, value, options):
    if value not in options:
        raise ConfigError(f"{name} must be one of {', '.join(options)}; got {value!r}")


def _synth_overrides(d: dict) -> dict:
    out = dict(d)
    for key in ("event_duration", "precursor_features", "ar_coef"):
        if isinstance(out.get(key), list):
            out[key] = tuple(out[key])
    return out


def _parse_value(text: str):
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError:
        return text


def apply_override(data: dict, assignment: str) -> None:
    """``a.b=value`` sets ``data["a"]["b"]``; the value is read as YAML."""
    if "=" not in assignment:
        raise ConfigError(f"--set expects key=value, got {assignment!r}")
    key, raw = assignment.split("=", 1)
    parts = key.strip().split(".")
    target = data
    for p in parts[:-1]:
        if not isinstance(target.get(p), dict):
            target[p] = {}
        target = target[p]
    target[parts[-1]] = _parse_value(raw)


def load_config_file(path) -> dict:
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = yaml.safe_load(text) if text.strip() else {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return data


# -- experiment helpers ----------------------------------------------------


def _base_label(entry: dict) -> str:
    if entry.get("name"):
        return str(entry["name"])
    return entry.get("family") or f"grid-{entry['grid']}"


def _label(entry: dict, index: int, entries: list) -> str:
    base = _base_label(entry)
    clash = sum(_base_label(e) == base for e in entries) > 1
    return f"{base}-{index}" if clash else base


def _spec(entry: dict, seed: int) -> ClassifierSpec:
    if entry.get("grid") is not None:
        raise ConfigError("grid entries are only valid for the gridsearch command")
    return ClassifierSpec(entry["family"], entry.get("hyperparameters") or {}, seed)


def _grid(entry: dict, n_columns: int) -> HyperGrid:
    grid = entry.get("grid")
    if isinstance(grid, str):
        return grid_preset(grid, n_columns)
    if isinstance(grid, dict):
        return HyperGrid.from_axes(entry["family"], grid)
    return HyperGrid(entry["family"], (dict(entry.get("hyperparameters") or {}),))


def _foldset(cfg: ExperimentConfig, patterns: PatternSet, beta: int):
    if cfg.fold_strategy == "blocks":
        return sample_blocks(patterns, beta, include_event=cfg.include_event)
    k = cfg.k or len(find_event_episodes(patterns.original_labels))
    return partition_folds(patterns, k, cfg.include_event)


def _single_run_config(cfg: ExperimentConfig, omega, classifiers) -> dict:
    d = cfg.to_dict()
    d["omega"] = [omega]
    d["classifiers"] = classifiers
    return d


@dataclass
class Output:
    directory: Path
    written: list = field(default_factory=list)

    def write(self, name: str, text: str) -> Path:
        self.directory.mkdir(parents=True, exist_ok=True)
        path = self.directory / name
        path.write_text(text, encoding="utf-8")
        self.written.append(path)
        return path

    def report(self, stem: str, report: ExperimentReport) -> Path:
        path = self.write(f"{stem}.jsonl", report.to_jsonl())
        self.write(f"{stem}.timings.json", json.dumps(report.timings, indent=2, sort_keys=True))
        return path

    def traces(self, stem: str, report: ExperimentReport, first_tick: int) -> None:
        for r in report.results:
            if r is None or r.trace is None:
                continue
            suffix = "-".join(str(k) for k in r.key)
            tr = r.trace
            ticks = [t + first_tick - 1 for t in tr["ticks"]]
            rows = ["tick,probability,warning_label"]
            rows += [f"{t},{p!r},{y}" for t, p, y in zip(ticks, tr["probability"], tr["warning_label"])]
            self.write(f"{stem}.fold{suffix}.trace.csv", "\n".join(rows) + "\n")
            self.write(
                f"{stem}.fold{suffix}.trace.svg",
                svg_trace(ticks, tr["probability"], tr["warning_label"], f"{stem} fold {suffix}"),
            )


def svg_trace(ticks, probability, warning, title: str, width=900, height=260) -> str:
    """Static line plot: predicted probability in blue, warning label in red."""
    left, right, top, bottom = 50, 15, 30, 35
    w, h = width - left - right, height - top - bottom
    t = np.asarray(ticks, dtype=float)
    t0, t1 = (t.min(), t.max()) if t.size else (0.0, 1.0)
    span = (t1 - t0) or 1.0

    def xy(tt, v):
        return f"{left + (tt - t0) / span * w:.2f},{top + (1.0 - v) * h:.2f}"

    prob = " ".join(xy(a, b) for a, b in zip(t, probability))
    warn = []
    for i, (a, b) in enumerate(zip(t, warning)):
        if i:
            warn.append(xy(a, warning[i - 1]))
        warn.append(xy(a, b))
    esc = title.replace("&", "&amp;").replace("<", "&lt;")
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">\n'
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>\n'
        f'<text x="{left}" y="18" font-family="sans-serif" font-size="13">{esc}</text>\n'
        f'<rect x="{left}" y="{top}" width="{w}" height="{h}" fill="none" stroke="#888"/>\n'
        f'<text x="{left - 8}" y="{top + 4}" text-anchor="end" font-size="11">1</text>\n'
        f'<text x="{left - 8}" y="{top + h + 4}" text-anchor="end" font-size="11">0</text>\n'
        f'<text x="{left}" y="{height - 10}" font-size="11">tick {int(t0)}</text>\n'
        f'<text x="{left + w}" y="{height - 10}" text-anchor="end" font-size="11">tick {int(t1)}</text>\n'
        f'<polyline fill="none" stroke="red" stroke-width="1.5" points="{" ".join(warn)}"/>\n'
        f'<polyline fill="none" stroke="blue" stroke-width="1" points="{prob}"/>\n'
        "</svg>\n"
    )


# -- commands --------------------------------------------------------------


def cmd_synth(cfg: ExperimentConfig, args, out: Output) -> int:
    if cfg.synth is None:
        raise ConfigError("synth needs a synthetic preset (--preset or synth.preset)")
    series = cfg.load_series()
    target = Path(args.output) if args.output else out.directory / f"{cfg.synth['preset']}.csv"
    target.parent.mkdir(parents=True, exist_ok=True)
    write_csv(series, target)
    n_ev = len(find_event_episodes(series.events))
    print(f"wrote {target}: {series.n_ticks} ticks, {series.n_features} features, {n_ev} events")
    return 0


def cmd_label(cfg: ExperimentConfig, args, out: Output) -> int:
    series = cfg.load_series()
    lines = []
    for omega in cfg.omega_ticks(series.tick_minutes):
        p = make_patterns(series, cfg.tau, omega)
        rows = ["tick,event,warning_label"]
        off = series.first_tick - 1
        rows += [
            f"{t + off},{int(e)},{int(w)}"
            for t, e, w in zip(p.ticks, p.original_labels, p.warning_labels)
        ]
        path = out.write(f"labels-w{omega}.csv", "\n".join(rows) + "\n")
        n_pos = int(p.warning_labels.sum())
        lines.append(f"omega={omega}: {len(p)} patterns, {n_pos} warning-labelled -> {path}")
    print("\n".join(lines))
    return 0


def cmd_blocks(cfg: ExperimentConfig, args, out: Output) -> int:
    series = cfg.load_series()
    omega = cfg.omega_ticks(series.tick_minutes)[0]
    beta = cfg.beta_ticks(series.tick_minutes)
    p = make_patterns(series, cfg.tau, omega)
    fs = _foldset(cfg, p, beta)
    off = series.first_tick - 1
    desc = []
    for d in fs.describe():
        d = dict(d)
        d["first_tick"] += off
        d["last_tick"] += off
        desc.append(d)
    doc = {"strategy": fs.strategy, "k": fs.k, "beta": beta, "omega": omega,
           "folds": desc, "notes": list(fs.notes)}
    path = out.write(f"folds-{fs.strategy}.json", json.dumps(doc, indent=2, sort_keys=True) + "\n")
    print(f"{fs.k} {fs.strategy} folds -> {path}")
    for note in fs.notes:
        print(f"note: {note}")
    return 0


def _run_cv(cfg: ExperimentConfig, args, out: Output) -> list[Path]:
    series = cfg.load_series()
    beta = cfg.beta_ticks(series.tick_minutes)
    paths = []
    for raw_omega, omega in zip(cfg.omega, cfg.omega_ticks(series.tick_minutes)):
        p = make_patterns(series, cfg.tau, omega)
        fs = _foldset(cfg, p, beta)
        for i, entry in enumerate(cfg.classifiers):
            stem = f"cv-{_label(entry, i, cfg.classifiers)}-w{omega}"
            run_cfg = _single_run_config(cfg, raw_omega, [entry])
            report = cross_validate(fs, _spec(entry, cfg.seed), cfg.policy(), args.workers,
                                    config={"experiment": run_cfg, "command": "cv"})
            paths.append(out.report(stem, report))
            if cfg.traces:
                out.traces(stem, report, series.first_tick)
            scores = " ".join(
                "skip" if f["skipped"] else f"{f['score']:.3f}" for f in report.folds
            )
            print(f"{stem}: mean {report.mean:.4f} [{scores}]")
    return paths


def cmd_cv(cfg, args, out) -> int:
    _run_cv(cfg, args, out)
    return 0


def _run_gridsearch(cfg: ExperimentConfig, args, out: Output) -> list[Path]:
    series = cfg.load_series()
    beta = cfg.beta_ticks(series.tick_minutes)
    paths = []
    omegas = cfg.omega_ticks(series.tick_minutes)
    for raw_omega, omega in zip(cfg.omega, omegas):
        p = make_patterns(series, cfg.tau, omega)
        fs = _foldset(cfg, p, beta)
        for i, entry in enumerate(cfg.classifiers):
            grid = _grid(entry, p.n_columns)
            stem = f"gridsearch-{_label(entry, i, cfg.classifiers)}-w{omega}"
            run_cfg = _single_run_config(cfg, raw_omega, [entry])
            result = nested_grid_search(fs, grid, cfg.policy(), cfg.seed, args.workers,
                                        config={"experiment": run_cfg, "command": "gridsearch"})
            paths.append(out.report(stem, result.report))
            if cfg.traces:
                out.traces(stem, result.report, series.first_tick)
            print(f"{stem}: mean {result.mean_score:.4f} over {len(grid)} combinations")
    return paths


def cmd_gridsearch(cfg, args, out) -> int:
    _run_gridsearch(cfg, args, out)
    return 0


def _run_compare(cfg: ExperimentConfig, args, out: Output) -> list[Path]:
    series = cfg.load_series()
    beta = cfg.beta_ticks(series.tick_minutes)
    specs = [_spec(e, cfg.seed) for e in cfg.classifiers]
    paths = []
    for raw_omega, omega in zip(cfg.omega, cfg.omega_ticks(series.tick_minutes)):
        run_cfg = _single_run_config(cfg, raw_omega, cfg.classifiers)
        cmp = compare_fold_strategies(
            series, cfg.tau, omega, beta, specs, (False, True), cfg.policy(), args.workers,
            config={"experiment": run_cfg, "command": "compare-folds"},
        )
        stem = f"compare-folds-w{omega}"
        paths.append(out.report(stem, cmp.report))
        table = cmp.table()
        cols = [c for c in table[0] if c not in ("strategy", "variant")] if table else []
        lines = [",".join(["strategy", "variant", *cols])]
        for row in table:
            cells = [row["strategy"], row["variant"]]
            cells += ["" if row.get(c) is None else f"{row[c]:.6f}" for c in cols]
            lines.append(",".join(cells))
        out.write(f"{stem}.table.csv", "\n".join(lines) + "\n")
        print(f"{stem}:")
        print("\n".join("  " + line for line in lines))
    return paths


def cmd_compare(cfg, args, out) -> int:
    _run_compare(cfg, args, out)
    return 0


RUNNERS = {"cv": _run_cv, "gridsearch": _run_gridsearch, "compare-folds": _run_compare}


def cmd_report(args) -> int:
    path = Path(args.report)
    text = path.read_text(encoding="utf-8")
    try:
        report = ExperimentReport.from_jsonl(text)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"{path}: {exc}") from None
    s = report.summary
    print(f"{path.name}: {report.kind}, metric {s.get('metric')}")
    for f in report.folds:
        keys = [k for k in ("classifier", "variant", "strategy", "fold") if k in f]
        head = " ".join(f"{k}={f[k]}" for k in keys)
        score = f.get("score", f.get("outer_score"))
        status = f"skipped ({f.get('reason')})" if f.get("skipped") else f"{score:.4f}"
        print(f"  {head}: {status}")
    if s.get("mean_score") is not None:
        print(f"  mean {s['mean_score']:.4f} over {s.get('n_scored')} scored folds")
    for row in s.get("table", []):
        print("  " + ", ".join(f"{k}={v:.4f}" if isinstance(v, float) else f"{k}={v}"
                               for k, v in row.items()))
    if not args.rerun:
        return 0
    cmd = report.config.get("command")
    if cmd not in RUNNERS:
        raise ConfigError(f"{path}: report does not record a rerunnable command")
    cfg = ExperimentConfig.from_mapping(report.config["experiment"])
    out = Output(Path(args.output_dir or _default_output()))
    produced = RUNNERS[cmd](cfg, args, out)
    same = any(p.read_bytes() == text.encode("utf-8") for p in produced)
    print("rerun reproduces the report byte for byte" if same else "rerun DIFFERS from the report")
    return 0 if same else 3


COMMANDS = {
    "synth": cmd_synth,
    "label": cmd_label,
    "blocks": cmd_blocks,
    "cv": cmd_cv,
    "gridsearch": cmd_gridsearch,
    "compare-folds": cmd_compare,
}


def _default_output() -> str:
    return os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rare-event", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-c", "--config", help="YAML or JSON experiment configuration")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one configuration key (repeatable)")
    common.add_argument("--input", help="CSV file with tick,<features>,event columns")
    common.add_argument("--preset", help="synthetic preset instead of an input file")
    common.add_argument("--synth-seed", type=int, help="seed for the synthetic preset")
    common.add_argument("--tau", type=int)
    common.add_argument("--omega", action="append", help="ticks, or hours as e.g. 24h (repeatable)")
    common.add_argument("--beta", help="block length in ticks, or hours as e.g. 1000h")
    common.add_argument("--classifier", action="append", choices=FAMILIES,
                        help="classifier family with default hyperparameters (repeatable)")
    common.add_argument("--grid", action="append", choices=GRID_PRESETS,
                        help="named grid for gridsearch (repeatable)")
    common.add_argument("--resample", choices=RESAMPLE_MODES)
    common.add_argument("--seed", type=int)
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("-o", "--output-dir", help=f"default: ${OUTPUT_ENV} or ./{DEFAULT_OUTPUT}")
    common.add_argument("-v", "--verbose", action="store_true")

    helps = {
        "synth": "write a synthetic series as CSV",
        "label": "write warning labels for each omega",
        "blocks": "describe the cross-validation folds",
        "cv": "modified k-fold cross-validation",
        "gridsearch": "nested cross-validation with an inner grid search",
        "compare-folds": "whole training folds versus sampled event blocks",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, parents=[common], help=text)
        if name == "synth":
            p.add_argument("--output", help="CSV path (default: <output-dir>/<preset>.csv)")
    rp = sub.add_parser("report", help="summarise a report, optionally rerun it")
    rp.add_argument("report")
    rp.add_argument("--rerun", action="store_true",
                    help="rerun from the embedded configuration and compare bytes")
    rp.add_argument("--workers", type=int, default=1)
    rp.add_argument("-o", "--output-dir")
    rp.add_argument("-v", "--verbose", action="store_true")
    return parser


def resolve_config(args) -> ExperimentConfig:
    data = load_config_file(args.config) if args.config else {}
    for assignment in args.set:
        apply_override(data, assignment)
    if args.input:
        data["input"] = args.input
        data.pop("synth", None)
    if args.preset:
        data["synth"] = {"preset": args.preset}
        data.pop("input", None)
    if args.synth_seed is not None:
        if not isinstance(data.get("synth"), dict):
            raise ConfigError("--synth-seed needs a synthetic preset")
        data["synth"]["seed"] = args.synth_seed
    if args.tau is not None:
        data["tau"] = args.tau
    if args.omega:
        data["omega"] = [_parse_value(w) for w in args.omega]
    if args.beta is not None:
        data["beta"] = _parse_value(args.beta)
    entries = [{"family": f} for f in args.classifier or []]
    entries += [{"grid": g} for g in args.grid or []]
    if entries:
        data["classifiers"] = entries
    if args.resample:
        data["resample"] = args.resample
    if args.seed is not None:
        data["seed"] = args.seed
    if args.command == "synth" and data.get("input") is not None and data.get("synth") is None:
        raise ConfigError("synth needs a synthetic preset (--preset or synth.preset)")
    return ExperimentConfig.from_mapping(data)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    if getattr(args, "workers", 1) < 1:
        parser.error("--workers must be at least 1")
    try:
        if args.command == "report":
            return cmd_report(args)
        cfg = resolve_config(args)
        out = Output(Path(args.output_dir or _default_output()))
        return COMMANDS[args.command](cfg, args, out)
    except RareEventError as exc:
        print(f"error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
