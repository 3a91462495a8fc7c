"""Prebuilt experiment suites over synthetic data.

Every suite trains one scorer per (variant, seed) cell on a shared per-seed
split, evaluates on the test block with the loss's native prediction rule,
and emits ResultRows. Cells are independent; NCRL_LAB_THREADS > 1 runs them
in a thread pool without changing the output row order.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from ..datagen import (SyntheticConfig, generate, inject_false_negatives,
                       inject_symmetric_noise, split, strip_none_instances)
from ..metrics import evaluate, micro_f1_flags
from ..model import ADAPTIVE_KINDS, TrainConfig, train
from ..prediction import (COARSE_GRID, adaptive_flags, global_flags,
                          sweep_global_threshold)
from .dataio import ResultRow
from .seeds import derive_seed

METRIC_NAMES = ("micro_f1", "macro_f1", "micro_precision", "micro_recall",
                "mean_ap", "mean_ncre")

TRAIN_FRACTION = 0.7
DEV_FRACTION = 0.15


@dataclass
class ExperimentConfig:
    kind: str
    synth: SyntheticConfig
    train_configs: list
    seeds: list
    output_path: Optional[str] = None

    def validate(self) -> None:
        if not self.seeds:
            raise ValueError("need at least one seed")
        if not self.train_configs:
            raise ValueError("need at least one training configuration")
        self.synth.validate()
        for tc in self.train_configs:
            tc.validate()


def thread_cap() -> int:
    raw = os.environ.get("NCRL_LAB_THREADS", "1")
    try:
        cap = int(raw)
    except ValueError as exc:
        raise ValueError(f"NCRL_LAB_THREADS must be an integer, got {raw!r}") from exc
    return max(1, cap)


def _run_jobs(jobs: list) -> list:
    cap = thread_cap()
    if cap == 1 or len(jobs) <= 1:
        return [job() for job in jobs]
    with ThreadPoolExecutor(max_workers=cap) as pool:
        return list(pool.map(lambda job: job(), jobs))


def make_splits(synth: SyntheticConfig, seed: int):
    """Per-seed train/dev/test blocks; configured noise lands on train only."""
    clean = replace(synth, seed=derive_seed(seed, "data"),
                    noise_false_negative_rate=0.0, noise_symmetric_rate=0.0)
    data = generate(clean)
    n_train = max(1, int(TRAIN_FRACTION * len(data)))
    n_dev = max(1, int(DEV_FRACTION * len(data)))
    if n_train + n_dev >= len(data):
        raise ValueError(
            f"num_instances {len(data)} too small for a train/dev/test split"
        )
    train_part, dev_part, test_part = split(data, n_train, n_dev)
    if synth.noise_false_negative_rate > 0:
        train_part = inject_false_negatives(
            train_part, synth.noise_false_negative_rate,
            derive_seed(seed, "noise-fn"))
    if synth.noise_symmetric_rate > 0:
        train_part = inject_symmetric_noise(
            train_part, synth.noise_symmetric_rate,
            derive_seed(seed, "noise-sym"))
    return train_part, dev_part, test_part


def _native_test_flags(scorer, loss_kind: str, dev_part, test_scores):
    if loss_kind in ADAPTIVE_KINDS:
        return adaptive_flags(test_scores)
    t, _ = sweep_global_threshold(scorer.forward(dev_part.features),
                                  dev_part.labels, COARSE_GRID)
    return global_flags(test_scores, t)


def run_cell(experiment: str, tc: TrainConfig, seed: int, splits) -> list:
    """Train one (variant, seed) cell and measure it on the test block."""
    train_part, dev_part, test_part = splits
    started = time.perf_counter()
    cfg = replace(tc, seed=derive_seed(seed, "train", tc.loss_kind, tc.gamma))
    try:
        scorer, _ = train(train_part, dev_part, cfg)
    except FloatingPointError:
        return [ResultRow(experiment, tc.loss_kind, tc.gamma, seed, "train",
                          "error", 1.0, time.perf_counter() - started)]
    test_scores = scorer.forward(test_part.features)
    flags = _native_test_flags(scorer, tc.loss_kind, dev_part, test_scores)
    stats = evaluate(test_scores, test_part.labels, flags).as_dict()
    seconds = time.perf_counter() - started
    return [ResultRow(experiment, tc.loss_kind, tc.gamma, seed, "test",
                      name, stats[name], seconds) for name in METRIC_NAMES]


def summarize(rows: list, experiment: str) -> list:
    """Mean and std rows over seeds per (loss, gamma, metric), in row order."""
    groups: dict = {}
    order = []
    for row in rows:
        if row.metric == "error" or row.seed == "all":
            continue
        key = (row.loss, row.gamma, row.metric)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(row)
    out = []
    for loss, gamma, metric in order:
        cells = groups[(loss, gamma, metric)]
        values = np.array([r.value for r in cells])
        seconds = float(sum(r.seconds for r in cells))
        std = float(values.std(ddof=1)) if len(values) > 1 else 0.0
        out.append(ResultRow(experiment, loss, gamma, "all", "test",
                             f"{metric}_mean", float(values.mean()), seconds))
        out.append(ResultRow(experiment, loss, gamma, "all", "test",
                             f"{metric}_std", std, seconds))
    return out


def run_compare(config: ExperimentConfig) -> list:
    """Train every configured loss on the same per-seed data; emit summaries."""
    config.validate()
    jobs = []
    for seed in config.seeds:
        splits = make_splits(config.synth, seed)
        for tc in config.train_configs:
            jobs.append(lambda tc=tc, seed=seed, splits=splits:
                        run_cell(config.kind, tc, seed, splits))
    rows: list = []
    for cell_rows in _run_jobs(jobs):
        rows.extend(cell_rows)
    rows.extend(summarize(rows, config.kind))
    return rows


# the six ablation variants: full loss, no margin regularization, no margin
# shifting, neither, and the two BCE baselines
_ABLATION_TABLE = (
    ("ncrl_final", "base"),
    ("ncrl_noreg", "base"),
    ("ncrl_final", 0.0),
    ("ncrl_plain", 0.0),
    ("bce", 0.0),
    ("bce_shifted", "base"),
)


def ablation_variants(base: TrainConfig) -> list:
    return [
        replace(base, loss_kind=kind,
                gamma=base.gamma if gamma == "base" else gamma)
        for kind, gamma in _ABLATION_TABLE
    ]


def run_ablation(config: ExperimentConfig) -> list:
    """Six-variant component ablation built from the first training config."""
    config.validate()
    expanded = replace(
        config, train_configs=ablation_variants(config.train_configs[0])
    )
    return run_compare(expanded)


def run_gamma_sweep(config: ExperimentConfig, gammas) -> list:
    """Full loss trained at each shift value; plot-ready rows."""
    config.validate()
    if len(gammas) == 0:
        raise ValueError("need at least one gamma value")
    base = config.train_configs[0]
    variants = [replace(base, loss_kind="ncrl_final", gamma=float(g))
                for g in gammas]
    return run_compare(replace(config, train_configs=variants))


def _no_none_cell(base: TrainConfig, regime: str, parts, seed: int) -> list:
    train_part, dev_part, test_part = parts
    experiment = f"no_none_{regime}"
    started = time.perf_counter()
    cfg = replace(base, seed=derive_seed(seed, "train", regime, base.loss_kind))
    scorer, _ = train(train_part, dev_part, cfg)
    test_scores = scorer.forward(test_part.features)
    adaptive_f1 = micro_f1_flags(adaptive_flags(test_scores), test_part.labels)
    t, _ = sweep_global_threshold(scorer.forward(dev_part.features),
                                  dev_part.labels, COARSE_GRID)
    swept_f1 = micro_f1_flags(global_flags(test_scores, t), test_part.labels)
    seconds = time.perf_counter() - started
    return [
        ResultRow(experiment, base.loss_kind, base.gamma, seed, "test",
                  "micro_f1_adaptive", float(adaptive_f1), seconds),
        ResultRow(experiment, base.loss_kind, base.gamma, seed, "test",
                  "micro_f1_swept", float(swept_f1), seconds),
    ]


def run_no_none_study(config: ExperimentConfig) -> list:
    """Train on full vs none-stripped data, score with both prediction rules.

    The stripped regime removes none-class instances from train, dev, and
    test, reproducing corpora where every instance has at least one label.
    """
    config.validate()
    base = config.train_configs[0]
    jobs = []
    for seed in config.seeds:
        full = make_splits(config.synth, seed)
        stripped = tuple(strip_none_instances(part) for part in full)
        for regime, parts in (("full", full), ("stripped", stripped)):
            jobs.append(lambda regime=regime, parts=parts, seed=seed:
                        _no_none_cell(base, regime, parts, seed))
    rows: list = []
    for cell_rows in _run_jobs(jobs):
        rows.extend(cell_rows)
    return rows
