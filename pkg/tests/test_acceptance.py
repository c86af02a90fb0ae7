"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Criteria 8-14 train full-budget models.  Checkpoints are cached under
``.cache/acceptance`` (override with ``POLICY_SUBSPACE_CACHE``); the cache key
covers the method, the training config and a hash of the package source, so
stale models are never reused after a code change.
"""

import hashlib
import json
import os
from functools import cache
from pathlib import Path

import numpy as np
import pytest

import policy_subspace
from policy_subspace.adapt import diversity_probe, k_shot_select, select_best
from policy_subspace.algos import TrainedModel, compute_gae, default_config, train_method, \
    train_single
from policy_subspace.cli import ExperimentConfig, run_train
from policy_subspace.envs import held_out_variants, make_variant
from policy_subspace.envs.maze import HORIZON, load_layout, shortest_path_length
from policy_subspace.gradcheck import TOLERANCE, run_suite
from policy_subspace.subspace import (AnchorSet, SimplexWeight, bezier3_weights,
                                      collapse_metrics, cosine_sq_penalty, mix_anchors)

from oracles import bfs_path, gae_brute_force, grid_from_text, mc_minus_baseline

SEEDS = range(5)
MAZE_TESTS = held_out_variants("Maze2d")
MAZE_METHODS = ("single", "lop", "cop", "bop", "diayn_r", "diayn_r_cont", "ensemble")
ENSEMBLE_K = 10

_ROOT = Path(__file__).resolve().parents[1]
CACHE = Path(os.environ.get("POLICY_SUBSPACE_CACHE", _ROOT / ".cache" / "acceptance"))


def _source_hash() -> str:
    h = hashlib.sha256()
    pkg = Path(policy_subspace.__file__).parent
    for path in sorted(pkg.rglob("*")):
        if path.suffix in (".py", ".txt"):
            h.update(path.relative_to(pkg).as_posix().encode())
            h.update(path.read_bytes())
    return h.hexdigest()


@cache
def trained(method: str, family: str, seed: int) -> TrainedModel:
    cfg = default_config(family, seed=seed)
    key = hashlib.sha256(json.dumps([method, ENSEMBLE_K, cfg.to_dict(), _source_hash()],
                                    sort_keys=True).encode()).hexdigest()[:16]
    path = CACHE / family / f"{method}-seed{seed}-{key}.ckpt"
    if path.exists():
        return TrainedModel.load(path)
    model = train_method(method, family, cfg, ensemble_k=ENSEMBLE_K).model
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    model.save(tmp)
    tmp.replace(path)
    return model


@cache
def cartpole_perf(method: str, seed: int) -> dict:
    """Post-selection Perf (K=10, E=10) on every CartPole variant."""
    model = trained(method, "CartPole", seed)
    return {v: k_shot_select(model, make_variant("CartPole", v), 10, 10, seed).perf_mean
            for v in ["train", *held_out_variants("CartPole")]}


@cache
def maze_perf(method: str, seed: int, k: int = 10) -> dict:
    model = trained(method, "Maze2d", seed)
    return {v: k_shot_select(model, make_variant("Maze2d", v), k, 1, seed).perf_mean
            for v in ["train", *MAZE_TESTS]}


# -- property suites ------------------------------------------------------------

def test_criterion_01_gradient_oracle(verdict):
    results = run_suite(n_instances=130, seed=0)
    worst = max(r.worst.max_rel_error for r in results)
    n = sum(r.instances for r in results)
    ok = all(r.passed for r in results) and n >= 100
    assert verdict(1, "gradient oracle", ok,
                   f"{n} instances over {len(results)} loss terms, worst rel error {worst:.1e} "
                   f"(tol {TOLERANCE:g})")


def test_criterion_02_gae_oracle(verdict):
    worst = 0.0
    for i in range(100):
        rng = np.random.default_rng([2, i])
        r, v = rng.normal(size=(12, 4)), rng.normal(size=(12, 4))
        d, b = rng.random((12, 4)) < 0.2, rng.normal(size=4)
        gamma, lam = rng.uniform(0.5, 1.0), rng.uniform()
        nxt = np.vstack([v[1:], b[None]])
        td = r + gamma * nxt * (1 - d) - v
        errs = [compute_gae(r, v, d, b, gamma, 0.0).advantages - td,
                compute_gae(r, v, d, b, gamma, 1.0).advantages
                - mc_minus_baseline(r, v, d, b, gamma),
                compute_gae(r, v, d, b, gamma, lam).advantages
                - gae_brute_force(r, v, d, b, gamma, lam)]
        worst = max(worst, max(float(np.abs(e).max()) for e in errs))
    assert verdict(2, "GAE oracle", worst <= 1e-10,
                   f"100 batches with terminals, max abs error {worst:.1e}")


def test_criterion_03_subspace_identities(verdict):
    dev = dict(vertex=0.0, affine=0.0, bezier_end=0.0, bezier_sum=0.0, cos_scale=0.0)
    for i in range(200):
        rng = np.random.default_rng([3, i])
        n, p = int(rng.integers(2, 5)), int(rng.integers(2, 40))
        s = AnchorSet(rng.normal(scale=5.0, size=(n, p)))
        for k in range(n):
            dev["vertex"] = max(dev["vertex"], float(np.abs(
                mix_anchors(s, SimplexWeight(np.eye(n)[k])) - s.anchors[k]).max()))
        w1, w2, a = rng.dirichlet(np.ones(n)), rng.dirichlet(np.ones(n)), rng.uniform()
        gap = mix_anchors(s, a * w1 + (1 - a) * w2) - (a * mix_anchors(s, w1)
                                                       + (1 - a) * mix_anchors(s, w2))
        dev["affine"] = max(dev["affine"], float(np.abs(gap).max()) / np.abs(s.anchors).max())
        b = AnchorSet(rng.normal(size=(3, p)), "bezier3")
        dev["bezier_end"] = max(dev["bezier_end"],
                                float(np.abs(mix_anchors(b, bezier3_weights(0.0)) - b.anchors[0]).max()),
                                float(np.abs(mix_anchors(b, bezier3_weights(1.0)) - b.anchors[2]).max()))
        dev["bezier_sum"] = max(dev["bezier_sum"], abs(bezier3_weights(rng.uniform()).w.sum() - 1))
        scaled = s.anchors.copy()
        scaled[int(rng.integers(n))] *= 10 ** rng.uniform(-3, 3)
        dev["cos_scale"] = max(dev["cos_scale"], abs(cosine_sq_penalty(scaled)[0]
                                                     - cosine_sq_penalty(s.anchors)[0]))
    ok = (dev["vertex"] == 0.0 and dev["bezier_end"] == 0.0 and dev["affine"] <= 1e-12
          and dev["bezier_sum"] <= 1e-15 and dev["cos_scale"] <= 1e-12)
    assert verdict(3, "subspace identities", ok,
                   ", ".join(f"{k} {v:.1e}" for k, v in dev.items()))


def _strip(log):
    return [{k: v for k, v in rec.items() if k not in ("intrinsic", "disc_loss", "aux_logq")}
            for rec in log]


def _same(a, b):
    return (np.array_equal(a.model.anchors, b.model.anchors)
            and np.array_equal(a.model.critic, b.model.critic) and _strip(a.log) == _strip(b.log))


def test_criterion_04_beta_zero_reductions(verdict):
    checks = []
    for seed in range(3):
        cfg = default_config("Maze2d", seed=seed, beta=0.0, total_steps=32 * 16 * 8)
        checks.append(_same(train_method("diayn_r", "Maze2d", cfg),
                            train_single("Maze2d", cfg, conditioning="skill")))
        cfg = default_config("PointReacher", seed=seed, beta=0.0, total_steps=16 * 20 * 8)
        checks.append(_same(train_method("lc", "PointReacher", cfg),
                            train_single("PointReacher", cfg, algo="ppo", conditioning="scalar")))
    assert verdict(4, "beta=0 reductions", all(checks),
                   f"{sum(checks)}/{len(checks)} bit-exact (DIAYN+R vs skill-augmented single, "
                   "Lc vs PPO; 3 seeds)")


def test_criterion_05_maze_bfs_oracle(verdict):
    train = len(bfs_path(grid_from_text(load_layout().render()))) - 1
    tests = {}
    for v in MAZE_TESTS:
        layout = make_variant("Maze2d", v).dynamics().layout
        path = bfs_path(grid_from_text(layout.render()))
        tests[v] = None if path is None else len(path) - 1
        assert tests[v] == shortest_path_length(layout)
    ok = train == 16 and all(d is not None and d <= HORIZON for d in tests.values())
    assert verdict(5, "maze BFS oracle", ok, f"train {train}, walled {tests}")


def test_criterion_06_best_of_k(verdict):
    bad = 0
    for i in range(2000):
        rng = np.random.default_rng([6, i])
        table = rng.integers(-5, 5, size=int(rng.integers(1, 25))).astype(float)
        first = next(j for j, x in enumerate(table) if x == table.max())
        sel = select_best(table)
        bad += sel != first or select_best(table.copy()) != sel
        picks = [table[select_best(table[:m])] for m in range(1, len(table) + 1)]
        bad += any(b < a for a, b in zip(picks, picks[1:]))
    assert verdict(6, "best-of-K monotonicity and tie-break", bad == 0,
                   f"2000 synthetic tables, {bad} violations")


def test_criterion_07_run_determinism(verdict, tmp_path):
    tiny = {"total_steps": 32 * 16 * 3}
    jobs = [("Maze2d", m, tiny) for m in MAZE_METHODS] + [("PointReacher", "lc", tiny), ("Maze2d", "lop", {})]
    mismatches = []
    for family, method, train in jobs:
        files = []
        for rep in ("a", "b"):
            cfg = ExperimentConfig(method=method, family=family, seeds=[3], train=train,
                                   ensemble_size=2, out=str(tmp_path / rep))
            run_train(cfg)
            d = cfg.seed_dir(3)
            files.append(((d / "log.jsonl").read_bytes(), (d / "model.ckpt").read_bytes()))
        if files[0] != files[1]:
            mismatches.append(f"{family}/{method}")
    assert verdict(7, "full-run determinism", not mismatches,
                   f"{len(jobs)} runs repeated (incl. full-budget Maze2d lop), "
                   f"mismatched: {mismatches or 'none'}")


# -- desk-scale reproductions ---------------------------------------------------------

def test_criterion_08_cartpole_train(verdict):
    per_seed = [cartpole_perf("single", s)["train"] for s in SEEDS]
    mean = float(np.mean(per_seed))
    assert verdict(8, "CartPole single train return", mean >= 190,
                   f"mean {mean:.1f} over seeds {np.round(per_seed, 1).tolist()}")


def test_criterion_09_cartpole_adaptation(verdict):
    tests = held_out_variants("CartPole")
    avg = {m: [float(np.mean([cartpole_perf(m, s)[v] for v in tests])) for s in SEEDS]
           for m in ("single", "lop")}
    lop, single = np.mean(avg["lop"]), np.mean(avg["single"])
    assert verdict(9, "CartPole LoP vs single (K=10)", lop >= single - 5,
                   f"LoP {lop:.1f} vs single {single:.1f} ({len(tests)}-variant averages)")


def test_criterion_10_maze_train(verdict):
    misses = [f"{m}/seed{s}={maze_perf(m, s)['train']:g}" for m in MAZE_METHODS for s in SEEDS
              if maze_perf(m, s)["train"] != -16.0]
    assert verdict(10, "Maze2d train return -16", not misses,
                   f"{len(MAZE_METHODS)} methods x {len(SEEDS)} seeds, misses: {misses or 'none'}")


def test_criterion_11_maze_walled(verdict):
    single = {v: float(np.mean([maze_perf("single", s)[v] for s in SEEDS])) for v in MAZE_TESTS}
    n_fail = sum(x == -100.0 for x in single.values())
    lop = float(np.mean([np.mean([maze_perf("lop", s)[v] for v in MAZE_TESTS]) for s in SEEDS]))
    ok = n_fail >= 3 and lop >= -60
    assert verdict(11, "Maze2d walled tests (K=10)", ok,
                   f"single at -100 on {n_fail}/4 variants {single}; LoP average {lop:.1f} "
                   "(needs >= -60)")


def test_criterion_12_anchor_divergence(verdict):
    cos2 = {f"{fam}/seed{s}": float(collapse_metrics(trained("lop", fam, s).anchors)["cos2"][0, 1])
            for fam in ("CartPole", "Maze2d") for s in SEEDS}
    worst = max(cos2.values())
    assert verdict(12, "LoP anchor divergence", worst <= 0.05,
                   f"{len(cos2)} runs with beta=1, max cos^2 {worst:.1e}")


def test_criterion_13_probe_direction(verdict):
    train = make_variant("Maze2d")
    acc = {m: [diversity_probe(trained(m, "Maze2d", s), train, 5, seed=s).heldout_accuracy
               for s in SEEDS] for m in ("diayn_r", "lop")}
    wins = sum(d >= lop for d, lop in zip(acc["diayn_r"], acc["lop"]))
    assert verdict(13, "diversity probe DIAYN+R >= LoP (K=5)", wins >= 4,
                   f"{wins}/5 seeds; DIAYN+R {np.round(acc['diayn_r'], 3).tolist()}, "
                   f"LoP {np.round(acc['lop'], 3).tolist()} (chance 0.2)")


def test_criterion_14_k_ablation(verdict):
    curves = {}
    for s in SEEDS:
        curves[s] = [float(np.mean([maze_perf("lop", s, k)[v] for v in MAZE_TESTS]))
                     for k in (1, 5, 10, 20)]
    bad = [s for s, c in curves.items() if any(b < a for a, b in zip(c, c[1:]))]
    assert verdict(14, "LoP K-ablation 1/5/10/20", not bad,
                   f"per-seed curves {curves}, decreasing on seeds {bad or 'none'}")
