"""Primal SVM trainers: batch gradient descent, kernel Newton, Pegasos.

None of the trainers fits a bias; the hyperplane is homogeneous while
optimizing and the offset is fitted afterwards (see ``svm.fit_bias``).

All trainers take a list of ``Instance`` and read ``binary_label`` unless
``labels`` is given explicitly, which is how the multiclass pairs relabel
their subsets.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from primalsvm.numerics import (KernelSpec, SparseVector, design_matrix, gram,
                                kernel_eval, solve_spd, sparse_dot)

log = logging.getLogger(__name__)


class TrainingError(RuntimeError):
    pass


class DivergenceError(TrainingError):
    def __init__(self, iteration: int, value: float):
        super().__init__(f"objective became non-finite ({value}) at iteration {iteration}; "
                         "learning rate too large")
        self.iteration = iteration


class CapExceededError(TrainingError):
    pass


@dataclass(frozen=True)
class GdConfig:
    eta: float = 0.001
    max_iters: int = 100
    rel_tol: float = 1e-6
    reg: float = 0.0
    # divide loss and gradient by n; keeps eta on a dataset-size independent scale
    average: bool = False

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.rel_tol < 0 or self.reg < 0:
            raise ValueError("rel_tol and reg must be non-negative")


@dataclass(frozen=True)
class NewtonConfig:
    lam: float = 1.0
    kernel: KernelSpec = field(default_factory=KernelSpec.linear)
    base_size: int = 1000
    max_newton_iters: int = 5
    max_n: int = 4000

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        if self.base_size < 1 or self.max_newton_iters < 1:
            raise ValueError("base_size and max_newton_iters must be >= 1")


@dataclass(frozen=True)
class PegasosConfig:
    lam: float = 0.01
    k: int = 10
    T: int = 5000
    seed: int = 0

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        if self.k < 1 or self.T < 1:
            raise ValueError("k and T must be >= 1")


@dataclass
class LinearTrainResult:
    w: np.ndarray
    objective_trace: List[float]
    wall_time: float
    converged: bool = True


@dataclass
class KernelTrainResult:
    beta: np.ndarray
    sv_indices: frozenset
    kernel: KernelSpec
    train_refs: List[SparseVector]
    wall_time: float
    converged: bool
    iterations: int = 0

    def decision(self, x: SparseVector) -> float:
        return sum(self.beta[i] * kernel_eval(self.kernel, self.train_refs[i], x)
                   for i in sorted(self.sv_indices) if self.beta[i] != 0.0)


def _labels(data, labels) -> np.ndarray:
    if labels is None:
        labels = [inst.binary_label for inst in data]
    y = np.asarray(labels, dtype=np.float64)
    if len(y) != len(data):
        raise ValueError("labels and data differ in length")
    if not np.all(np.abs(y) == 1):
        raise ValueError("binary labels must be +1 or -1")
    return y


def _dim(data, dim):
    need = max((inst.features.max_index for inst in data), default=-1) + 1
    if dim is None:
        return need
    if need > dim:
        raise IndexError(f"feature index {need - 1} exceeds dimension {dim}")
    return dim


# --- quadratic hinge (gradient descent) ---

def quad_hinge_loss(w: np.ndarray, x: SparseVector, y: int) -> float:
    return max(0.0, 1.0 - y * sparse_dot(x, w)) ** 2


def _quad_hinge_obj_grad(w, X, y):
    slack = 1.0 - y * (X @ w)
    active = slack > 0
    obj = float(np.sum(slack[active] ** 2))
    coef = np.where(active, -2.0 * slack * y, 0.0)
    return obj, X.T @ coef


def quad_hinge_grad(w: np.ndarray, data, labels=None) -> np.ndarray:
    """Gradient of the summed quadratic hinge loss over ``data``."""
    if not data:
        raise ValueError("quad_hinge_grad needs data")
    X = design_matrix([inst.features for inst in data], len(w))
    return _quad_hinge_obj_grad(w, X, _labels(data, labels))[1]


def gd_train(data, cfg: GdConfig, dim: Optional[int] = None, labels=None) -> LinearTrainResult:
    if not data:
        raise ValueError("gd_train needs data")
    start = time.perf_counter()
    dim = _dim(data, dim)
    X = design_matrix([inst.features for inst in data], dim)
    y = _labels(data, labels)
    w = np.zeros(dim)
    trace = []
    converged = False
    for it in range(1, cfg.max_iters + 1):
        # overflow shows up as a non-finite objective and is reported below
        with np.errstate(over="ignore", invalid="ignore"):
            obj, grad = _quad_hinge_obj_grad(w, X, y)
            if cfg.average:
                obj, grad = obj / len(y), grad / len(y)
            if cfg.reg:
                obj += cfg.reg * float(w @ w)
                grad = grad + 2.0 * cfg.reg * w
        if not math.isfinite(obj):
            raise DivergenceError(it, obj)
        if trace and abs(obj - trace[-1]) <= cfg.rel_tol * (1.0 + trace[-1]):
            trace.append(obj)
            converged = True
            break
        trace.append(obj)
        w = w - cfg.eta * grad
    if not np.all(np.isfinite(w)):
        raise DivergenceError(len(trace), float("nan"))
    return LinearTrainResult(w, trace, time.perf_counter() - start, converged)


# --- Newton with recursive working sets ---

def newton_train(data, cfg: NewtonConfig, labels=None, force: bool = False) -> KernelTrainResult:
    n = len(data)
    if n < 1:
        raise ValueError("newton_train needs data")
    if n > cfg.max_n and not force:
        raise CapExceededError(
            f"{n} training instances exceed the Newton cap of {cfg.max_n}; the cost grows "
            "cubically with the support set and full-size runs do not finish in "
            "reasonable time (raise max_n or pass force to override)")
    start = time.perf_counter()
    xs = [inst.features for inst in data]
    y = _labels(data, labels)
    K = gram(cfg.kernel, xs)
    beta, sv, converged, iters = _newton(K, y, n, cfg)
    return KernelTrainResult(beta, frozenset(sv), cfg.kernel, xs,
                             time.perf_counter() - start, converged, iters)


def _newton(K, y, n, cfg):
    """Solve on the leading ``n`` points of K/y; returns (beta, sv, converged, iters)."""
    if n > cfg.base_size:
        half = n // 2
        prev, _, _, _ = _newton(K, y, half, cfg)
        sv = np.flatnonzero(prev)
    else:
        sv = np.arange(n)
    Kn = K[:n, :n]
    yn = y[:n]
    beta = np.zeros(n)
    converged = False
    iters = 0
    solved = sv
    for iters in range(1, cfg.max_newton_iters + 1):
        beta = np.zeros(n)
        if len(sv):
            A = Kn[np.ix_(sv, sv)] + cfg.lam * np.eye(len(sv))
            beta[sv] = solve_spd(A, yn[sv])
        solved = sv
        sv = np.flatnonzero(yn * (Kn @ beta) < 1.0)
        if np.array_equal(sv, solved):
            converged = True
            break
    if not converged:
        log.info("newton: working set still changing after %d iterations (n=%d)", iters, n)
    return beta, solved, converged, iters


# --- Pegasos ---

def project_to_ball(w: np.ndarray, lam: float) -> np.ndarray:
    norm = float(np.linalg.norm(w))
    if norm == 0.0:
        return w
    scale = min(1.0, 1.0 / (math.sqrt(lam) * norm))
    return w * scale if scale < 1.0 else w


def _pegasos_update(w, Xb, yb, t, lam):
    active = 1.0 - yb * (Xb @ w) > 0
    m = int(active.sum())
    # w - (lam*w - sum(yx)/m) / (lam*t), with the lam*w part folded into one scale
    w_half = (1.0 - 1.0 / t) * w
    if m:
        w_half = w_half + (Xb.T @ np.where(active, yb, 0.0)) / (lam * t * m)
    return project_to_ball(w_half, lam)


def pegasos_step(w: np.ndarray, batch, t: int, lam: float, labels=None) -> np.ndarray:
    """One subgradient step on ``batch`` followed by projection.

    An empty violator set leaves only the regularizer term in the step.
    """
    if t < 1 or not lam > 0:
        raise ValueError("t must be >= 1 and lambda positive")
    Xb = design_matrix([inst.features for inst in batch], len(w))
    return _pegasos_update(w, Xb, _labels(batch, labels), t, lam)


def pegasos_objective(w, X, y, lam) -> float:
    hinge = np.maximum(0.0, 1.0 - y * (X @ w))
    return 0.5 * lam * float(w @ w) + float(hinge.mean())


def pegasos_train(data, cfg: PegasosConfig, dim: Optional[int] = None, labels=None,
                  callback: Optional[Callable[[int, np.ndarray], None]] = None) -> LinearTrainResult:
    """Pegasos with k distinct instances per step drawn from a PCG64 stream.

    ``objective_trace`` holds the regularized hinge objective on each
    iteration's sample, evaluated before the step. ``callback(t, w)`` is
    called with w_{t+1} after every step.
    """
    n = len(data)
    if n == 0:
        raise ValueError("pegasos_train needs data")
    if cfg.k > n:
        raise ValueError(f"subset size k={cfg.k} exceeds training set size {n}")
    start = time.perf_counter()
    dim = _dim(data, dim)
    X = design_matrix([inst.features for inst in data], dim)
    y = _labels(data, labels)
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    w = np.zeros(dim)
    trace = []
    for t in range(1, cfg.T + 1):
        if cfg.k == n:
            Xb, yb = X, y
        else:
            pick = np.sort(rng.choice(n, size=cfg.k, replace=False))
            Xb, yb = X[pick], y[pick]
        trace.append(pegasos_objective(w, Xb, yb, cfg.lam))
        w = _pegasos_update(w, Xb, yb, t, cfg.lam)
        if callback is not None:
            callback(t, w)
    return LinearTrainResult(w, trace, time.perf_counter() - start)
