"""Random instance generators shared by the property and acceptance tests."""
from fractions import Fraction as F

import numpy as np

from fusions.measure import Box, DiscreteMeasure, GridMeasure


def random_fusion(mu, rng, k):
    """A fusion of mu obtained by pooling a random labelling."""
    lab = rng.integers(0, k, len(mu))
    pts, ws = [], []
    for c in range(k):
        idx = [i for i in range(len(mu)) if lab[i] == c and mu.masses[i]]
        if idx:
            m = sum((mu.masses[i] for i in idx), F(0))
            pts.append(tuple(sum(mu.masses[i] * mu.points[i][a] for i in idx) / m for a in range(mu.dim)))
            ws.append(m)
    return DiscreteMeasure(pts, ws)


def random_grid(rng, max_side=12, dim=2):
    """Grid prior on [0,1]^dim with random side lengths and random integer weights."""
    res = tuple(int(r) for r in rng.integers(2, max_side + 1, dim))
    w = rng.integers(0, 4, int(np.prod(res)))
    if w.sum() == 0:
        w[0] = 1
    return GridMeasure.from_table(Box((0,) * dim, (1,) * dim), w.reshape(res))
