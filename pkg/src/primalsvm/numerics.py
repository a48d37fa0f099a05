"""Sparse vector arithmetic, kernels and the SPD solve used by Newton."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg
import scipy.sparse


class SingularMatrixError(ArithmeticError):
    pass


class SparseVector:
    """Sorted (index, value) pairs; zeros are never stored."""

    __slots__ = ("indices", "values")

    def __init__(self, indices, values):
        indices = np.asarray(indices, dtype=np.int64)
        values = np.asarray(values, dtype=np.float64)
        if indices.shape != values.shape or indices.ndim != 1:
            raise ValueError("indices and values must be 1-d arrays of equal length")
        if len(indices) and (indices[0] < 0 or np.any(np.diff(indices) <= 0)):
            raise ValueError("indices must be non-negative and strictly increasing")
        if np.any(values == 0):
            raise ValueError("zero values must not be stored")
        self.indices = indices
        self.values = values

    @classmethod
    def empty(cls):
        return cls(np.empty(0, dtype=np.int64), np.empty(0))

    @classmethod
    def from_pairs(cls, pairs):
        pairs = sorted(pairs)
        return cls([i for i, _ in pairs], [v for _, v in pairs])

    @classmethod
    def from_dense(cls, x):
        x = np.asarray(x, dtype=np.float64)
        nz = np.flatnonzero(x)
        return cls(nz, x[nz])

    def entries(self):
        return list(zip(self.indices.tolist(), self.values.tolist()))

    def to_dense(self, dim: int) -> np.ndarray:
        out = np.zeros(dim)
        out[self.indices] = self.values
        return out

    @property
    def max_index(self) -> int:
        return int(self.indices[-1]) if len(self.indices) else -1

    def __len__(self):
        return len(self.indices)

    def __eq__(self, other):
        if not isinstance(other, SparseVector):
            return NotImplemented
        return (np.array_equal(self.indices, other.indices)
                and np.array_equal(self.values, other.values))

    def __repr__(self):
        return f"SparseVector({self.entries()!r})"


@dataclass(frozen=True)
class KernelSpec:
    """``kind`` is "linear" or "rbf"; ``sigma`` is only read for rbf."""

    kind: str = "linear"
    sigma: float = 1.0

    def __post_init__(self):
        if self.kind not in ("linear", "rbf"):
            raise ValueError(f"unknown kernel {self.kind!r}")
        if self.kind == "rbf" and not self.sigma > 0:
            raise ValueError("rbf sigma must be positive")

    @classmethod
    def linear(cls):
        return cls("linear")

    @classmethod
    def rbf(cls, sigma: float = 1.0):
        return cls("rbf", sigma)


def sparse_dot(a: SparseVector, b: np.ndarray) -> float:
    if len(a) and a.indices[-1] >= len(b):
        raise IndexError(f"sparse index {a.indices[-1]} out of range for length {len(b)}")
    return float(np.dot(a.values, b[a.indices]))


def _merge(a: SparseVector, b: SparseVector):
    """Yield (va, vb) over the union of indices of two sorted vectors."""
    ai, av, bi, bv = a.indices, a.values, b.indices, b.values
    i = j = 0
    while i < len(ai) and j < len(bi):
        if ai[i] == bi[j]:
            yield av[i], bv[j]
            i += 1
            j += 1
        elif ai[i] < bi[j]:
            yield av[i], 0.0
            i += 1
        else:
            yield 0.0, bv[j]
            j += 1
    for k in range(i, len(ai)):
        yield av[k], 0.0
    for k in range(j, len(bi)):
        yield 0.0, bv[k]


def sparse_sparse_dot(a: SparseVector, b: SparseVector) -> float:
    return float(sum(x * y for x, y in _merge(a, b)))


def sparse_dist_sq(a: SparseVector, b: SparseVector) -> float:
    return float(sum((x - y) ** 2 for x, y in _merge(a, b)))


def kernel_eval(spec: KernelSpec, a: SparseVector, b: SparseVector) -> float:
    if spec.kind == "linear":
        return sparse_sparse_dot(a, b)
    return math.exp(-sparse_dist_sq(a, b) / (2.0 * spec.sigma ** 2))


def design_matrix(xs: Sequence[SparseVector], dim: int | None = None) -> scipy.sparse.csr_matrix:
    """Stack sparse vectors as rows of a CSR matrix with ``dim`` columns."""
    if dim is None:
        dim = max((x.max_index for x in xs), default=-1) + 1
    indptr = np.zeros(len(xs) + 1, dtype=np.int64)
    np.cumsum([len(x) for x in xs], out=indptr[1:])
    if xs:
        indices = np.concatenate([x.indices for x in xs])
        data = np.concatenate([x.values for x in xs])
    else:
        indices, data = np.empty(0, dtype=np.int64), np.empty(0)
    if len(indices) and indices.max() >= dim:
        raise IndexError(f"feature index {indices.max()} out of range for dimension {dim}")
    return scipy.sparse.csr_matrix((data, indices, indptr), shape=(len(xs), dim))


def cross_kernel(spec: KernelSpec, A: scipy.sparse.csr_matrix,
                 B: scipy.sparse.csr_matrix) -> np.ndarray:
    """Dense kernel block K[i, j] = k(A_i, B_j) for row-stacked inputs."""
    inner = np.asarray((A @ B.T).todense(), dtype=np.float64)
    if spec.kind == "linear":
        return inner
    sq_a = np.asarray(A.multiply(A).sum(axis=1)).ravel()
    sq_b = np.asarray(B.multiply(B).sum(axis=1)).ravel()
    dist = sq_a[:, None] - 2.0 * inner + sq_b[None, :]
    np.maximum(dist, 0.0, out=dist)
    return np.exp(-dist / (2.0 * spec.sigma ** 2))


def gram(spec: KernelSpec, xs) -> np.ndarray:
    """Symmetric Gram matrix over a list of SparseVectors or a CSR matrix."""
    X = xs if scipy.sparse.issparse(xs) else design_matrix(xs)
    if X.shape[0] == 0:
        raise ValueError("gram needs at least one vector")
    K = cross_kernel(spec, X, X)
    # mirror the upper triangle so K is exactly symmetric
    upper = np.triu(K, 1)
    K = upper + upper.T + np.diag(np.diag(K))
    if spec.kind == "rbf":
        np.fill_diagonal(K, 1.0)
    return K


def solve_spd(A: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Solve ``A x = y`` for symmetric positive definite ``A`` by Cholesky."""
    A = np.asarray(A, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if A.shape == (0, 0):
        return np.empty(0)
    try:
        factor = scipy.linalg.cho_factor(A, lower=True, check_finite=True)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(
            f"matrix is not positive definite ({exc}); regularization too small "
            "or duplicated rows") from exc
    x = scipy.linalg.cho_solve(factor, y)
    # one round of iterative refinement tightens the residual on poorly scaled systems
    r = y - A @ x
    if np.max(np.abs(r)) > 1e-10 * (1.0 + np.max(np.abs(y))):
        x = x + scipy.linalg.cho_solve(factor, r)
    return x
