"""Repeated random-holdout cross validation and parameter sweeps."""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import List, Optional, Sequence

import numpy as np

from primalsvm.corpus import FeatureMode, RawRecord, build_vocabulary, make_instances
from primalsvm.numerics import KernelSpec
from primalsvm.optim import CapExceededError, GdConfig, NewtonConfig, PegasosConfig
from primalsvm.svm import MulticlassSvm, train_binary, train_multiclass

THREADS_ENV = "PRIMAL_SVM_THREADS"

DEFAULT_GRIDS = {
    "eta": [0.01, 0.02, 0.03, 0.04, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 1, 2, 3, 4, 5],
    "lambda": [0.001, 0.01, 0.1, 1, 10],
}

# sweepable parameter -> (config types it applies to, setter)
_PARAMS = {
    "eta": ((GdConfig,), lambda c, v: replace(c, eta=float(v))),
    "iters": ((GdConfig,), lambda c, v: replace(c, max_iters=int(v))),
    "lambda": ((PegasosConfig, NewtonConfig), lambda c, v: replace(c, lam=float(v))),
    "k": ((PegasosConfig,), lambda c, v: replace(c, k=int(v))),
    "T": ((PegasosConfig,), lambda c, v: replace(c, T=int(v))),
    "sigma": ((NewtonConfig,),
              lambda c, v: replace(c, kernel=KernelSpec(c.kernel.kind, float(v)))),
}
SWEEP_PARAMS = tuple(_PARAMS)

ALG_NAMES = {GdConfig: "GD", PegasosConfig: "SSG", NewtonConfig: "NM"}


@dataclass(frozen=True)
class RunSpec:
    optimizer: object
    mode: str = "bin"
    feature_mode: FeatureMode = FeatureMode.BINARY
    force: bool = False

    def __post_init__(self):
        if self.mode not in ("bin", "multi"):
            raise ValueError(f"mode must be 'bin' or 'multi', got {self.mode!r}")
        if type(self.optimizer) not in ALG_NAMES:
            raise TypeError(f"unsupported optimizer config {type(self.optimizer).__name__}")

    @property
    def alg_name(self) -> str:
        return ALG_NAMES[type(self.optimizer)]

    def describe(self) -> dict:
        cfg = asdict(self.optimizer)
        return {"alg": self.alg_name, "mode": self.mode,
                "features": self.feature_mode.value, "optimizer": cfg}


@dataclass(frozen=True)
class CvConfig:
    rounds: int = 10
    holdout_fraction: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if not 0 < self.holdout_fraction < 1:
            raise ValueError("holdout_fraction must lie in (0, 1)")


@dataclass
class RoundResult:
    accuracy: float
    train_time: float
    n_train: int
    n_test: int


@dataclass
class CvReport:
    per_round: List[RoundResult]
    mean_accuracy: float
    mean_time: float
    config_echo: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"mean_accuracy": self.mean_accuracy, "mean_time": self.mean_time,
                "per_round": [asdict(r) for r in self.per_round],
                "config": self.config_echo}


@dataclass
class SweepCell:
    value: float
    report: Optional[CvReport] = None
    error: Optional[str] = None


def split_round(n: int, round_seed: int, holdout_fraction: float):
    if n < 2:
        raise ValueError("need at least two instances to split")
    perm = np.random.Generator(np.random.PCG64(round_seed)).permutation(n)
    n_test = min(n - 1, max(1, math.floor(n * holdout_fraction)))
    return perm[n_test:], perm[:n_test]


def accuracy(predictions: Sequence[int], truths: Sequence[int]) -> float:
    if len(predictions) != len(truths):
        raise ValueError(f"length mismatch: {len(predictions)} predictions, "
                         f"{len(truths)} truths")
    if not truths:
        raise ValueError("accuracy of an empty set is undefined")
    return sum(int(p == t) for p, t in zip(predictions, truths)) / len(truths)


def default_threads() -> int:
    try:
        return max(0, int(os.environ.get(THREADS_ENV, "0")))
    except ValueError:
        return 0


def fit(records: Sequence[RawRecord], spec: RunSpec, optimizer=None):
    """Build a vocabulary on ``records`` and train; returns (model, vocab, train_time)."""
    vocab = build_vocabulary(records)
    data = make_instances(records, vocab, spec.feature_mode)
    cfg = optimizer if optimizer is not None else spec.optimizer
    start = time.perf_counter()
    if spec.mode == "multi":
        model = train_multiclass(data, cfg, dim=vocab.size, force=spec.force)
    else:
        model = train_binary(data, cfg, dim=vocab.size, force=spec.force)
    return model, vocab, time.perf_counter() - start


def predict(model, xs) -> List[int]:
    if isinstance(model, MulticlassSvm):
        return model.predict_many(xs)
    return [1 if v >= 0 else -1 for v in model.decision_values(xs)]


def _round_optimizer(cfg, r: int):
    if isinstance(cfg, PegasosConfig):
        return replace(cfg, seed=cfg.seed + r)
    return cfg


def _run_round(records, spec: RunSpec, cfg: CvConfig, r: int) -> RoundResult:
    train_idx, test_idx = split_round(len(records), cfg.seed + r, cfg.holdout_fraction)
    train = [records[i] for i in train_idx]
    test = [records[i] for i in test_idx]
    model, vocab, train_time = fit(train, spec, _round_optimizer(spec.optimizer, r))
    test_data = make_instances(test, vocab, spec.feature_mode)
    truths = [d.sentiment if spec.mode == "multi" else d.binary_label for d in test_data]
    acc = accuracy(predict(model, [d.features for d in test_data]), truths)
    return RoundResult(acc, train_time, len(train), len(test))


def cross_validate(records: Sequence[RawRecord], spec: RunSpec, cfg: CvConfig,
                   threads: Optional[int] = None) -> CvReport:
    """Run ``cfg.rounds`` independent random-holdout rounds.

    Round ``r`` uses seed ``cfg.seed + r`` for its split and, for Pegasos,
    ``optimizer.seed + r`` for sampling. The vocabulary is rebuilt from each
    round's training portion. Only the training call is timed.
    """
    n = len(records)
    n_train = n - min(n - 1, max(1, math.floor(n * cfg.holdout_fraction)))
    if isinstance(spec.optimizer, NewtonConfig) and n_train > spec.optimizer.max_n \
            and not spec.force:
        raise CapExceededError(
            f"Newton training on {n_train} instances exceeds the cap of "
            f"{spec.optimizer.max_n}; full-size Newton runs do not terminate in "
            "reasonable time (subsample the data or use --force)")
    threads = default_threads() if threads is None else threads
    rounds = range(cfg.rounds)
    if threads > 0:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda r: _run_round(records, spec, cfg, r), rounds))
    else:
        results = [_run_round(records, spec, cfg, r) for r in rounds]
    echo = spec.describe()
    echo["cv"] = asdict(cfg)
    return CvReport(results,
                    sum(r.accuracy for r in results) / len(results),
                    sum(r.train_time for r in results) / len(results),
                    echo)


def override(optimizer, param: str, value):
    if param not in _PARAMS:
        raise ValueError(f"unknown parameter {param!r}; valid: {', '.join(SWEEP_PARAMS)}")
    types, setter = _PARAMS[param]
    if not isinstance(optimizer, types):
        valid = [p for p, (ts, _) in _PARAMS.items() if isinstance(optimizer, ts)]
        raise ValueError(f"parameter {param!r} does not apply to "
                         f"{ALG_NAMES[type(optimizer)]}; valid: {', '.join(valid)}")
    return setter(optimizer, value)


def sweep(records, spec: RunSpec, param: str, values: Sequence[float], cfg: CvConfig,
          threads: Optional[int] = None) -> List[SweepCell]:
    if not values:
        raise ValueError("sweep grid is empty")
    if not all(math.isfinite(v) for v in values):
        raise ValueError("sweep grid values must be finite")
    override(spec.optimizer, param, values[0])  # validate the name up front
    cells = []
    for v in values:
        try:
            cell_spec = replace(spec, optimizer=override(spec.optimizer, param, v))
            cells.append(SweepCell(v, report=cross_validate(records, cell_spec, cfg, threads)))
        except (ValueError, ArithmeticError, RuntimeError) as exc:
            cells.append(SweepCell(v, error=f"{type(exc).__name__}: {exc}"))
    return cells


def best_cell(cells: Sequence[SweepCell]) -> Optional[SweepCell]:
    ok = [c for c in cells if c.report is not None]
    if not ok:
        return None
    return max(ok, key=lambda c: c.report.mean_accuracy)
