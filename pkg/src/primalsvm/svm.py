"""Binary SVM models and the ordinal multiclass scheme built from them.

A multiclass model holds four pairwise classifiers for the adjacent label
pairs (0,1), (1,2), (2,3), (3,4), each trained with the higher label as +1.
The signs of their four decision values form a pattern; a table of
(pattern, label) counts collected on the training set turns a pattern into
a label, and patterns never seen in training fall back to the label prior.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from primalsvm.numerics import KernelSpec, SparseVector, cross_kernel, design_matrix
from primalsvm.optim import (GdConfig, KernelTrainResult, NewtonConfig, PegasosConfig,
                             gd_train, newton_train, pegasos_train)

PAIRS = ((0, 1), (1, 2), (2, 3), (3, 4))
FORMAT_NAME = "primalsvm-model"
FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    pass


@dataclass
class BinarySvm:
    """Either a linear model (``w``, ``b``) or a kernel expansion (``kernel``)."""

    w: Optional[np.ndarray] = None
    b: float = 0.0
    kernel: Optional[KernelTrainResult] = None

    @property
    def is_linear(self) -> bool:
        return self.kernel is None

    def decision_values(self, xs: Sequence[SparseVector]) -> np.ndarray:
        """Vectorized ``decision_value`` over many inputs."""
        if not len(xs):
            return np.empty(0)
        if self.is_linear:
            # features beyond the training dimension have no weight
            X = design_matrix([_clip(x, len(self.w)) for x in xs], len(self.w))
            return X @ self.w + self.b
        res = self.kernel
        sv = sorted(i for i in res.sv_indices if res.beta[i] != 0.0)
        if not sv:
            return np.zeros(len(xs))
        refs = [res.train_refs[i] for i in sv]
        dim = max(max(x.max_index for x in refs), max(x.max_index for x in xs)) + 1
        K = cross_kernel(res.kernel, design_matrix(list(xs), dim), design_matrix(refs, dim))
        # row-wise reduction: a row's value does not depend on the batch size
        return (K * res.beta[sv]).sum(axis=1)


def _clip(x: SparseVector, dim: int) -> SparseVector:
    if x.max_index < dim:
        return x
    keep = x.indices < dim
    return SparseVector(x.indices[keep], x.values[keep])


def fit_bias(w: np.ndarray, data, labels=None) -> float:
    """Mean of ``y - w.x`` over points with margin below one; 0 if there are none."""
    if not data:
        raise ValueError("fit_bias needs data")
    y = np.asarray(labels if labels is not None else [d.binary_label for d in data],
                   dtype=np.float64)
    f = design_matrix([d.features for d in data], len(w)) @ w
    sv = y * f < 1.0
    if not sv.any():
        return 0.0
    return float(np.mean(y[sv] - f[sv]))


def decision_value(model: BinarySvm, x: SparseVector) -> float:
    # shares the batch path so table building and prediction agree bit for bit
    return float(model.decision_values([x])[0])


def predict_binary(model: BinarySvm, x: SparseVector) -> int:
    return 1 if decision_value(model, x) >= 0 else -1


def train_binary(data, cfg, dim: Optional[int] = None, labels=None,
                 force: bool = False) -> BinarySvm:
    """Train with the optimizer selected by the type of ``cfg``.

    Linear optimizers get a post-hoc bias; the kernel path has none.
    """
    if isinstance(cfg, NewtonConfig):
        return BinarySvm(kernel=newton_train(data, cfg, labels=labels, force=force))
    if isinstance(cfg, GdConfig):
        res = gd_train(data, cfg, dim=dim, labels=labels)
    elif isinstance(cfg, PegasosConfig):
        res = pegasos_train(data, cfg, dim=dim, labels=labels)
    else:
        raise TypeError(f"unsupported optimizer config {type(cfg).__name__}")
    return BinarySvm(w=res.w, b=fit_bias(res.w, data, labels))


# --- multiclass ---

@dataclass
class PatternTable:
    counts: Dict[Tuple[int, ...], List[int]] = field(default_factory=dict)
    prior: List[int] = field(default_factory=lambda: [0] * 5)

    def total(self) -> int:
        return sum(sum(row) for row in self.counts.values())


@dataclass
class MulticlassSvm:
    pairwise: List[BinarySvm]
    table: PatternTable

    def patterns(self, xs: Sequence[SparseVector]) -> np.ndarray:
        vals = np.column_stack([m.decision_values(xs) for m in self.pairwise])
        return np.where(vals >= 0, 1, -1)

    def predict_many(self, xs: Sequence[SparseVector]) -> List[int]:
        return [self._label_for(tuple(int(s) for s in row)) for row in self.patterns(xs)]

    def _label_for(self, pattern) -> int:
        row = self.table.counts.get(pattern)
        if row is None:
            row = self.table.prior
        # argmax returns the first maximum, i.e. ties go to the lower label
        return int(np.argmax(row))


def sign_pattern(models: Sequence[BinarySvm], x: SparseVector) -> Tuple[int, ...]:
    return tuple(1 if m.decision_values([x])[0] >= 0 else -1 for m in models)


def build_pattern_table(models: Sequence[BinarySvm], data) -> PatternTable:
    table = PatternTable(defaultdict(lambda: [0] * 5))
    if data:
        patterns = MulticlassSvm(list(models), table).patterns([d.features for d in data])
        for row, inst in zip(patterns, data):
            table.counts[tuple(int(s) for s in row)][inst.sentiment] += 1
            table.prior[inst.sentiment] += 1
    table.counts = dict(table.counts)
    return table


def train_multiclass(data, cfg, dim: Optional[int] = None, force: bool = False) -> MulticlassSvm:
    models = []
    for j, (lo, hi) in enumerate(PAIRS):
        subset = [d for d in data if d.sentiment in (lo, hi)]
        n_hi = sum(d.sentiment == hi for d in subset)
        if n_hi == 0 or n_hi == len(subset):
            missing = lo if n_hi else hi
            raise ValueError(f"label pair ({lo},{hi}) has no instances of label {missing}")
        labels = [1 if d.sentiment == hi else -1 for d in subset]
        pair_cfg = replace(cfg, seed=cfg.seed + j) if isinstance(cfg, PegasosConfig) else cfg
        models.append(train_binary(subset, pair_cfg, dim=dim, labels=labels, force=force))
    return MulticlassSvm(models, build_pattern_table(models, data))


def predict_multiclass(model: MulticlassSvm, x: SparseVector) -> int:
    return model._label_for(sign_pattern(model.pairwise, x))


# --- serialization ---

def _binary_to_dict(m: BinarySvm) -> dict:
    if m.is_linear:
        return {"kind": "linear", "b": m.b, "w": m.w.tolist()}
    res = m.kernel
    sv = sorted(i for i in res.sv_indices if res.beta[i] != 0.0)
    return {
        "kind": "kernel",
        "kernel": {"type": res.kernel.kind, "sigma": res.kernel.sigma},
        "support": [[int(i), float(res.beta[i]), res.train_refs[i].entries()] for i in sv],
    }


def _binary_from_dict(d: dict) -> BinarySvm:
    if d["kind"] == "linear":
        return BinarySvm(w=np.asarray(d["w"], dtype=np.float64), b=float(d["b"]))
    if d["kind"] != "kernel":
        raise ModelFormatError(f"unknown binary model kind {d['kind']!r}")
    spec = KernelSpec(d["kernel"]["type"], d["kernel"]["sigma"])
    support = d["support"]
    # reindex the retained support vectors densely; other points carry beta = 0
    beta = np.array([s[1] for s in support], dtype=np.float64)
    refs = [SparseVector.from_pairs([tuple(p) for p in s[2]]) for s in support]
    res = KernelTrainResult(beta, frozenset(range(len(support))), spec, refs,
                            wall_time=0.0, converged=True)
    return BinarySvm(kernel=res)


def model_to_dict(model, vocab_words: Sequence[str], feature_mode: str) -> dict:
    header = {"format": FORMAT_NAME, "version": FORMAT_VERSION,
              "dim": len(vocab_words), "features": feature_mode,
              "vocabulary": list(vocab_words)}
    if isinstance(model, MulticlassSvm):
        header["mode"] = "multi"
        header["pairwise"] = [_binary_to_dict(m) for m in model.pairwise]
        header["patterns"] = [[list(p), row] for p, row in sorted(model.table.counts.items())]
        header["prior"] = list(model.table.prior)
    else:
        header["mode"] = "bin"
        header["model"] = _binary_to_dict(model)
    return header


def model_from_dict(d: dict):
    """Returns (model, vocabulary words, feature mode string)."""
    if d.get("format") != FORMAT_NAME:
        raise ModelFormatError("not a primalsvm model file")
    if d.get("version") != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model version {d.get('version')!r} "
                               f"(expected {FORMAT_VERSION})")
    if d["mode"] == "multi":
        table = PatternTable({tuple(p): list(row) for p, row in d["patterns"]},
                             list(d["prior"]))
        model = MulticlassSvm([_binary_from_dict(m) for m in d["pairwise"]], table)
    elif d["mode"] == "bin":
        model = _binary_from_dict(d["model"])
    else:
        raise ModelFormatError(f"unknown mode {d['mode']!r}")
    return model, d["vocabulary"], d["features"]


def save_model(path, model, vocab_words, feature_mode: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model, vocab_words, feature_mode), fh)
        fh.write("\n")


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"model file is not valid JSON: {exc}") from exc
    return model_from_dict(d)
