"""Synthetic data builders shared by the test modules."""

import numpy as np

from primalsvm.corpus import Instance
from primalsvm.numerics import SparseVector


def separable(seed, n=200, d=20, margin=1.0):
    """Linearly separable points through the origin with functional margin >= ``margin``.

    A random unit direction u is drawn; Gaussian points with |u.x| < margin
    are rejected and the rest are labeled sign(u.x).
    """
    rng = np.random.default_rng(seed)
    u = rng.normal(size=d)
    u /= np.linalg.norm(u)
    out = []
    while len(out) < n:
        x = rng.normal(size=d)
        s = float(u @ x)
        if abs(s) >= margin:
            y = 1 if s > 0 else -1
            out.append(Instance(SparseVector.from_dense(x), 3 if y > 0 else 1, y))
    return out


def random_sparse(rng, d, density=0.4, integer=False):
    mask = rng.random(d) < density
    if not mask.any():
        mask[rng.integers(d)] = True
    idx = np.flatnonzero(mask)
    if integer:
        vals = rng.integers(1, 4, size=len(idx)).astype(float)
    else:
        vals = rng.normal(size=len(idx))
        vals[vals == 0] = 1.0
    return SparseVector(idx, vals)


def random_instances(rng, n, d, density=0.4):
    out = []
    for _ in range(n):
        y = 1 if rng.random() < 0.5 else -1
        out.append(Instance(random_sparse(rng, d, density), 3 if y > 0 else 1, y))
    return out
