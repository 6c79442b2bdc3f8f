"""Cross-validation over consecutive-day folds, repeated over seeds, in three
training modes: transfer (fine-tune pretrained weights), cold (fresh
initialization) and a logistic-regression baseline.

Metrics are pooled over all test-day windows of a fold. Aggregates are the
mean and sample standard deviation over every fold x seed run of a mode.
"""

from __future__ import annotations

import csv
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace

import numpy as np

from .dataset import WindowSet
from .errors import DomainError
from .models import (NetworkConfig, NetworkWeights, TrainConfig, fit_logistic,
                     predict, predict_logistic, train)

MODE_ORDER = ("transfer", "cold", "logistic")


def accuracy(predictions, labels) -> float:
    p = np.asarray(predictions)
    y = np.asarray(labels)
    if p.shape != y.shape:
        raise DomainError(f"length mismatch: {p.shape} vs {y.shape}")
    if p.size == 0:
        raise DomainError("no predictions to score")
    return float(np.mean(p == y))


def f1(predictions, labels, positive_class: int = 1) -> float:
    p = np.asarray(predictions)
    y = np.asarray(labels)
    if p.shape != y.shape:
        raise DomainError(f"length mismatch: {p.shape} vs {y.shape}")
    tp = int(np.sum((p == positive_class) & (y == positive_class)))
    fp = int(np.sum((p == positive_class) & (y != positive_class)))
    fn = int(np.sum((p != positive_class) & (y == positive_class)))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


@dataclass(frozen=True)
class FoldSpec:
    train_days: tuple[int, ...]
    test_days: tuple[int, ...]
    k: int

    def __post_init__(self):
        if len(self.train_days) != self.k or not self.test_days:
            raise DomainError("fold must have k training days and >= 1 test day")
        if set(self.train_days) & set(self.test_days):
            raise DomainError("train and test days overlap")


def make_folds(n_days: int, k: int, wraparound: bool = False) -> list[FoldSpec]:
    """Consecutive k-day training blocks; the remaining days are the test
    set. Linear enumeration gives n_days - k + 1 folds; with wraparound the
    block may cross the end, giving n_days folds."""
    if n_days < 2:
        raise DomainError("need at least two days to form folds")
    if not 1 <= k < n_days:
        raise DomainError(f"k must lie in [1, {n_days - 1}], got {k}")
    starts = range(n_days if wraparound else n_days - k + 1)
    folds = []
    for s in starts:
        train_days = tuple((s + i) % n_days for i in range(k))
        test_days = tuple(d for d in range(n_days) if d not in train_days)
        folds.append(FoldSpec(train_days, test_days, k))
    return folds


@dataclass(frozen=True)
class RunResult:
    k: int
    fold: int
    seed: int
    mode: str
    accuracy: float
    f1: float
    epochs_to_best: int

    def __post_init__(self):
        if not 0.0 <= self.accuracy <= 1.0 or not 0.0 <= self.f1 <= 1.0:
            raise DomainError("metrics must lie in [0, 1]")


@dataclass(frozen=True)
class Aggregate:
    k: int
    mode: str
    n_runs: int
    accuracy_mean: float
    accuracy_std: float
    f1_mean: float
    f1_std: float
    epochs_mean: float
    epochs_std: float


@dataclass
class ProtocolResult:
    runs: list[RunResult]
    aggregates: list[Aggregate]


def _concat_days(samples_by_day: list[WindowSet], days: tuple[int, ...]) -> WindowSet:
    return WindowSet.concat([samples_by_day[d] for d in days])


def _run_single(samples_by_day, base, net_config, train_config,
                k: int, fold_index: int, fold: FoldSpec, seed: int,
                mode: str) -> RunResult:
    train_set = _concat_days(samples_by_day, fold.train_days)
    test_set = _concat_days(samples_by_day, fold.test_days)
    try:
        if mode == "logistic":
            lw = fit_logistic(train_set)
            preds = predict_logistic(lw, test_set.inputs)
            epochs = lw.iterations
        else:
            cfg = replace(train_config, seed=seed)
            weights, report = train(train_set, net_config, cfg,
                                    base=base if mode == "transfer" else None)
            preds = predict(weights, test_set.inputs)
            epochs = report.epochs_to_best
    except (DomainError, RuntimeError) as exc:
        raise type(exc)(f"k={k} fold={fold_index} seed={seed} mode={mode}: {exc}") from exc
    return RunResult(k, fold_index, seed, mode,
                     accuracy(preds, test_set.labels),
                     f1(preds, test_set.labels), int(epochs))


_WORKER_STATE: dict = {}


def _init_worker(samples_by_day, base, net_config, train_config):
    _WORKER_STATE["args"] = (samples_by_day, base, net_config, train_config)


def _worker(task):
    return _run_single(*_WORKER_STATE["args"], *task)


def aggregate_runs(runs: list[RunResult]) -> list[Aggregate]:
    out = []
    keys = sorted({(r.k, r.mode) for r in runs},
                  key=lambda km: (km[0], MODE_ORDER.index(km[1])))
    for k, mode in keys:
        sel = [r for r in runs if r.k == k and r.mode == mode]
        acc = np.array([r.accuracy for r in sel])
        f1s = np.array([r.f1 for r in sel])
        eps = np.array([r.epochs_to_best for r in sel], dtype=float)

        def std(v):
            return float(np.std(v, ddof=1)) if len(v) > 1 else 0.0

        out.append(Aggregate(k, mode, len(sel),
                             float(acc.mean()), std(acc),
                             float(f1s.mean()), std(f1s),
                             float(eps.mean()), std(eps)))
    return out


def run_protocol(samples_by_day: list[WindowSet],
                 base: NetworkWeights | None = None,
                 ks=(1, 2, 3, 4),
                 n_seeds: int = 10,
                 net_config: NetworkConfig = NetworkConfig(),
                 train_config: TrainConfig = TrainConfig(),
                 base_seed: int = 0,
                 modes: tuple[str, ...] | None = None,
                 wraparound: bool = False,
                 jobs: int = 1) -> ProtocolResult:
    """Every fold x seed x mode combination, in deterministic order.

    Seeds are base_seed .. base_seed + n_seeds - 1. Transfer mode requires
    pretrained base weights and is included by default when they are given.
    With jobs > 1 runs execute in worker processes; results are identical
    to a serial run.
    """
    if isinstance(ks, int):
        ks = (ks,)
    if n_seeds < 1:
        raise DomainError("need at least one seed")
    if modes is None:
        modes = MODE_ORDER if base is not None else ("cold", "logistic")
    unknown = set(modes) - set(MODE_ORDER)
    if unknown:
        raise DomainError(f"unknown modes: {sorted(unknown)}")
    if "transfer" in modes and base is None:
        raise DomainError("transfer mode needs base weights")

    n_days = len(samples_by_day)
    tasks = []
    for k in ks:
        for fold_index, fold in enumerate(make_folds(n_days, k, wraparound)):
            for seed in range(base_seed, base_seed + n_seeds):
                for mode in modes:
                    tasks.append((k, fold_index, fold, seed, mode))

    if jobs > 1:
        workers = min(jobs, len(tasks), os.cpu_count() or 1)
        with ProcessPoolExecutor(
                max_workers=workers, initializer=_init_worker,
                initargs=(samples_by_day, base, net_config, train_config)) as ex:
            runs = list(ex.map(_worker, tasks))
    else:
        runs = [_run_single(samples_by_day, base, net_config, train_config, *t)
                for t in tasks]
    return ProtocolResult(runs, aggregate_runs(runs))


def result_to_dict(result: ProtocolResult) -> dict:
    return {
        "runs": [asdict(r) for r in result.runs],
        "aggregates": [asdict(a) for a in result.aggregates],
    }


def render_report(result: ProtocolResult) -> str:
    """Plain-text table: one row per (k, mode) with mean +- std columns."""
    lines = [f"{'k':>2}  {'mode':<8}  {'n':>3}  {'accuracy':>17}  "
             f"{'f1':>17}  {'epochs':>14}"]
    for a in result.aggregates:
        lines.append(
            f"{a.k:>2}  {a.mode:<8}  {a.n_runs:>3}  "
            f"{a.accuracy_mean:.3f} (+-{a.accuracy_std:.3f})  "
            f"{a.f1_mean:.3f} (+-{a.f1_std:.3f})  "
            f"{a.epochs_mean:6.1f} (+-{a.epochs_std:.1f})")
    return "\n".join(lines) + "\n"


def write_runs_csv(path, result: ProtocolResult) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "fold", "seed", "mode", "accuracy", "f1",
                         "epochs_to_best"])
        for r in result.runs:
            writer.writerow([r.k, r.fold, r.seed, r.mode,
                             repr(r.accuracy), repr(r.f1), r.epochs_to_best])
