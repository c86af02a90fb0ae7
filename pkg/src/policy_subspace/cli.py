"""Command line driver: train, adapt, report, sweep and gradcheck.

Outputs go to seed-scoped paths so seeds can run in separate processes::

    <out>/<family>/<run>/config.yaml
    <out>/<family>/<run>/seed<s>/{model.ckpt, log.jsonl, adapt.jsonl, paths/}
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .adapt import AdaptReport, k_shot_select, selection_histogram
from .algos.config import FAMILY_DEFAULTS, TrainConfig, default_config
from .algos.trainer import METHODS, TrainedModel, read_log, train_method, write_log
from .envs import FAMILIES, held_out_variants, make_variant
from .envs.maze import Maze2d, render_path, trace_path

log = logging.getLogger("policy_subspace")

BETA_GRID = (0.01, 0.1, 1.0, 10.0)
K_GRID = (1, 5, 10, 20)


@dataclass
class ExperimentConfig:
    method: str = "lop"
    family: str = "CartPole"
    train_variant: str = "train"
    # None means every held-out variant of the family
    test_variants: list | None = None
    k: list = field(default_factory=lambda: [10])
    # adaptation episodes per candidate; None picks 1 on deterministic variants, else 10
    episodes: int | None = None
    seeds: list = field(default_factory=lambda: [0])
    out: str = "runs"
    # run directory name, defaults to the method
    name: str | None = None
    ensemble_size: int = 10
    perf_episodes: int = 100
    train: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; known: {sorted(METHODS)}")
        if self.family not in FAMILIES or self.family not in FAMILY_DEFAULTS:
            raise ValueError(f"unknown family {self.family!r}")
        if self.method == "lc" and FAMILIES[self.family].action_kind != "continuous":
            raise ValueError("lc needs a family with continuous actions")
        self.k = [int(k) for k in self.k]
        self.seeds = [int(s) for s in self.seeds]
        if not self.seeds:
            raise ValueError("seeds must be non-empty")
        if not self.k or min(self.k) < 1:
            raise ValueError("K values must be >= 1")
        if self.episodes is not None and self.episodes < 1:
            raise ValueError("episodes must be >= 1")
        if self.test_variants is not None:
            self.test_variants = list(self.test_variants)
        for v in [self.train_variant, *self.variants_under_test]:
            try:
                make_variant(self.family, v)
            except KeyError as err:
                raise ValueError(err.args[0]) from None
        self.train = {k: list(v) if isinstance(v, tuple) else v for k, v in self.train.items()}
        self.train_config(self.seeds[0])  # fail fast on bad overrides

    @property
    def variants_under_test(self) -> list[str]:
        if self.test_variants is None:
            return held_out_variants(self.family)
        return self.test_variants

    @property
    def run_name(self) -> str:
        return self.name or self.method

    def train_config(self, seed: int) -> TrainConfig:
        merged = {**default_config(self.family).to_dict(), **self.train, "seed": seed}
        return TrainConfig.from_dict(merged)

    def run_dir(self) -> Path:
        return Path(self.out) / self.family / self.run_name

    def seed_dir(self, seed: int) -> Path:
        return self.run_dir() / f"seed{seed}"

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        unknown = set(d) - {f.name for f in dataclasses.fields(cls)}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    def dumps(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    @classmethod
    def loads(cls, text: str) -> "ExperimentConfig":
        data = yaml.safe_load(text) or {}
        if not isinstance(data, dict):
            raise ValueError("config must be a mapping")
        return cls.from_dict(data)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.loads(Path(path).read_text())

    def save(self, path) -> None:
        Path(path).write_text(self.dumps())


# -- pipelines ----------------------------------------------------------------

def run_train(cfg: ExperimentConfig) -> list[Path]:
    """Train every seed and write checkpoint plus training log."""
    cfg.run_dir().mkdir(parents=True, exist_ok=True)
    cfg.save(cfg.run_dir() / "config.yaml")
    paths = []
    for seed in cfg.seeds:
        res = train_method(cfg.method, cfg.family, cfg.train_config(seed),
                           ensemble_k=cfg.ensemble_size)
        d = cfg.seed_dir(seed)
        d.mkdir(parents=True, exist_ok=True)
        res.model.save(d / "model.ckpt")
        write_log(res.log, d / "log.jsonl")
        log.info("trained %s seed %d (%d env steps)", cfg.run_name, seed, res.env_steps)
        paths.append(d / "model.ckpt")
    return paths


def load_checkpoint(cfg: ExperimentConfig, seed: int) -> TrainedModel:
    path = cfg.seed_dir(seed) / "model.ckpt"
    if not path.exists():
        raise FileNotFoundError(f"missing checkpoint {path}")
    return TrainedModel.load(path)


def adapt_model(model: TrainedModel, cfg: ExperimentConfig, seed: int,
                ks=None) -> list[AdaptReport]:
    reports = []
    for name in [cfg.train_variant, *cfg.variants_under_test]:
        variant = make_variant(cfg.family, name)
        for k in ks or cfg.k:
            reports.append(k_shot_select(model, variant, k, cfg.episodes, seed, cfg.perf_episodes))
    return reports


def export_paths(model: TrainedModel, cfg: ExperimentConfig, reports, directory: Path) -> None:
    """Draw the selected candidate's maze trajectory for every report."""
    directory.mkdir(parents=True, exist_ok=True)
    for r in reports:
        variant = make_variant(cfg.family, r.variant)
        cand = model.candidates(r.k)[r.selected]
        dyn = variant.dynamics()
        grid = render_path(dyn.layout, trace_path(variant, model.act_fn(cand)))
        header = f"{cfg.run_name} {r.variant} K={r.k} {cand.label} return={r.perf_mean:g}\n"
        (directory / f"{r.variant}-K{r.k}.txt").write_text(header + grid + "\n")


def run_adapt(cfg: ExperimentConfig, ks=None) -> dict[int, list[AdaptReport]]:
    out = {}
    for seed in cfg.seeds:
        model = load_checkpoint(cfg, seed)
        reports = adapt_model(model, cfg, seed, ks)
        d = cfg.seed_dir(seed)
        write_log([r.to_dict() for r in reports], d / "adapt.jsonl")
        if isinstance(make_variant(cfg.family).dynamics(), Maze2d):
            export_paths(model, cfg, reports, d / "paths")
        out[seed] = reports
    return out


def load_reports(cfg: ExperimentConfig) -> dict[int, list[AdaptReport]]:
    out = {}
    for seed in cfg.seeds:
        path = cfg.seed_dir(seed) / "adapt.jsonl"
        if not path.exists():
            raise FileNotFoundError(f"missing adaptation log {path}")
        out[seed] = [AdaptReport.from_dict(d) for d in read_log(path)]
    return out


# -- tables -------------------------------------------------------------------

def display_name(variant: str) -> str:
    if variant.startswith("test") and variant[4:].isdigit():
        return f"Test Env #{variant[4:]}"
    return variant


@dataclass
class ResultTable:
    rows: list
    columns: list
    mean: np.ndarray
    std: np.ndarray

    def cell(self, row: str, column: str) -> tuple[float, float]:
        i, j = self.rows.index(row), self.columns.index(column)
        return float(self.mean[i, j]), float(self.std[i, j])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["variant"] + [f"{c} {s}" for c in self.columns for s in ("mean", "std")])
        for i, row in enumerate(self.rows):
            w.writerow([row] + [f"{v:.6g}" for j in range(len(self.columns))
                                for v in (self.mean[i, j], self.std[i, j])])
        return buf.getvalue()

    def to_text(self) -> str:
        cells = [[""] + list(self.columns)]
        for i, row in enumerate(self.rows):
            cells.append([row] + [f"{self.mean[i, j]:.1f} ± {self.std[i, j]:.1f}"
                                  for j in range(len(self.columns))])
        widths = [max(len(r[j]) for r in cells) for j in range(len(cells[0]))]
        lines = ["  ".join(c.ljust(w) if j == 0 else c.rjust(w)
                           for j, (c, w) in enumerate(zip(r, widths))) for r in cells]
        return "\n".join(lines) + "\n"


def build_table(columns: dict[str, dict[int, list[AdaptReport]]], train_variant: str,
                test_variants: list[str]) -> ResultTable:
    """Rows are test variants, the train variant and the average over test rows.

    ``columns`` maps a column name to ``{seed: reports}``; every report in a
    column must share one K.  Cells are mean and population std over seeds.
    """
    variants = list(test_variants) + [train_variant]
    mean = np.zeros((len(variants) + 1, len(columns)))
    std = np.zeros_like(mean)
    for j, by_seed in enumerate(columns.values()):
        per_seed = np.zeros((len(by_seed), len(variants)))
        for s, reports in enumerate(by_seed.values()):
            lookup = {r.variant: r.perf_mean for r in reports}
            for i, v in enumerate(variants):
                if v not in lookup:
                    raise KeyError(f"no report for variant {v!r}")
                per_seed[s, i] = lookup[v]
        mean[:-1, j] = per_seed.mean(0)
        std[:-1, j] = per_seed.std(0)
        avg = per_seed[:, :len(test_variants)].mean(1)
        mean[-1, j], std[-1, j] = avg.mean(), avg.std()
    rows = [display_name(v) for v in test_variants] + [display_name(train_variant), "Average"]
    return ResultTable(rows, list(columns), mean, std)


def split_by_k(cfg: ExperimentConfig, reports: dict[int, list[AdaptReport]]) -> dict:
    """``{column: {seed: reports}}`` with one column per K."""
    ks = sorted({r.k for rs in reports.values() for r in rs})
    return {f"{cfg.run_name} K={k}": {s: [r for r in rs if r.k == k] for s, rs in reports.items()}
            for k in ks}


def histograms_csv(columns: dict, test_variants: list[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["column", "seed", "counts"])
    for name, by_seed in columns.items():
        for seed, reports in by_seed.items():
            tests = [r for r in reports if r.variant in test_variants]
            w.writerow([name, seed, " ".join(str(int(c)) for c in selection_histogram(tests))])
    return buf.getvalue()


def write_report(configs: list[ExperimentConfig], directory: Path, stem: str = "report",
                 reports: dict | None = None) -> ResultTable:
    columns = {}
    for cfg in configs:
        got = reports[cfg.run_name] if reports else load_reports(cfg)
        columns.update(split_by_k(cfg, got))
    base = configs[0]
    table = build_table(columns, base.train_variant, base.variants_under_test)
    directory.mkdir(parents=True, exist_ok=True)
    (directory / f"{stem}.csv").write_text(table.to_csv())
    (directory / f"{stem}.txt").write_text(table.to_text())
    (directory / f"{stem}_histograms.csv").write_text(
        histograms_csv(columns, base.variants_under_test))
    return table


# -- sweeps -------------------------------------------------------------------

def sweep_beta(cfg: ExperimentConfig, betas=BETA_GRID) -> ResultTable:
    configs, reports = [], {}
    for beta in betas:
        c = cfg.replace(name=f"{cfg.method}-beta{beta:g}", train={**cfg.train, "beta": beta})
        run_train(c)
        reports[c.run_name] = run_adapt(c)
        configs.append(c)
    return write_report(configs, cfg.run_dir().parent, f"sweep_beta_{cfg.method}", reports)


def sweep_k(cfg: ExperimentConfig, ks=K_GRID) -> ResultTable:
    if not all((cfg.seed_dir(s) / "model.ckpt").exists() for s in cfg.seeds):
        run_train(cfg)
    c = cfg.replace(k=list(ks))
    reports = {c.run_name: run_adapt(c)}
    return write_report([c], cfg.run_dir().parent, f"sweep_k_{cfg.run_name}", reports)


# -- entry point --------------------------------------------------------------

def _experiment(args) -> ExperimentConfig:
    data = {}
    if args.config:
        data = yaml.safe_load(Path(args.config).read_text()) or {}
    for key in ("method", "family", "out"):
        if getattr(args, key) is not None:
            data[key] = getattr(args, key)
    if args.seed:
        data["seeds"] = list(args.seed)
    if getattr(args, "k", None):
        data["k"] = list(args.k)
    return ExperimentConfig.from_dict(data)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="policy-subspace",
                                description="Train policy subspaces and adapt them K-shot.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="YAML experiment config")
        sp.add_argument("--seed", type=int, action="append", help="seed (repeatable)")
        sp.add_argument("--out", help="output root")
        sp.add_argument("--method", choices=sorted(METHODS))
        sp.add_argument("--family", choices=sorted(FAMILY_DEFAULTS))
        sp.add_argument("-v", "--verbose", action="store_true")

    common(sub.add_parser("train", help="train and checkpoint every seed"))
    sp = sub.add_parser("adapt", help="K-shot selection on every variant")
    common(sp)
    sp.add_argument("--k", type=int, action="append")
    sp = sub.add_parser("report", help="tables from adaptation logs")
    common(sp)
    sp.add_argument("--methods", help="comma separated methods to put side by side")
    sp = sub.add_parser("sweep", help="beta or K ablation")
    common(sp)
    sp.add_argument("--over", choices=("beta", "k"), default="beta")
    sp = sub.add_parser("gradcheck", help="finite-difference gradient audit")
    sp.add_argument("--seed", type=int, action="append")
    sp.add_argument("--instances", type=int, default=100)
    sp.add_argument("-v", "--verbose", action="store_true")
    return p


def _gradcheck(args) -> int:
    from .gradcheck import TOLERANCE, run_suite

    results = run_suite(args.instances, (args.seed or [0])[0])
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status} {r.name:40s} n={r.instances:3d} max_rel_error={r.worst.max_rel_error:.2e}")
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} cases within {TOLERANCE:g}")
    return 1 if failed else 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(message)s")
    if args.command == "gradcheck":
        return _gradcheck(args)
    cfg = _experiment(args)
    if args.command == "train":
        for path in run_train(cfg):
            print(path)
    elif args.command == "adapt":
        for seed, reports in run_adapt(cfg).items():
            for r in reports:
                print(json.dumps({"seed": seed, "variant": r.variant, "k": r.k,
                                  "selected": r.labels[r.selected], "perf": r.perf_mean}))
    elif args.command == "report":
        methods = args.methods.split(",") if args.methods else [cfg.method]
        configs = [cfg.replace(method=m, name=None if m != cfg.method else cfg.name)
                   for m in methods]
        print(write_report(configs, cfg.run_dir().parent).to_text(), end="")
    elif args.command == "sweep":
        table = sweep_beta(cfg) if args.over == "beta" else sweep_k(cfg)
        print(table.to_text(), end="")
    return 0


if __name__ == "__main__":
    sys.exit(main())
