"""Independent reference computations used by the unit and acceptance tests.

Everything here is written with explicit Python loops over scalars so the
vectorized library code is checked against a genuinely separate path.
"""

from __future__ import annotations

import numpy as np


def gram_loops(a) -> list[list[float]]:
    d, v_dim = len(a), len(a[0])
    return [
        [sum(a[r][i] * a[r][j] for r in range(d)) for j in range(v_dim)] for i in range(v_dim)
    ]


def scalar_update_encode(a, w, wb, eps) -> np.ndarray:
    """Triple-loop reference for the encode multiplicative rule."""
    v_dim, h_dim = len(w), len(w[0])
    o_dim = len(wb[0])
    gram = gram_loops(a)
    out = [[0.0] * h_dim for _ in range(v_dim)]
    for v in range(v_dim):
        for h in range(h_dim):
            num = sum(gram[v][u] * wb[h][u] for u in range(v_dim))
            den = 0.0
            for u in range(v_dim):
                for k in range(h_dim):
                    for o in range(o_dim):
                        den += gram[v][u] * w[u][k] * wb[k][o] * wb[h][o]
            if den == 0.0:
                den = eps
            out[v][h] = w[v][h] * num / den
    return np.array(out)


def scalar_update_decode(a, w, wb, eps) -> np.ndarray:
    """Triple-loop reference for the decode multiplicative rule."""
    v_dim, h_dim = len(w), len(w[0])
    o_dim = len(wb[0])
    gram = gram_loops(a)
    out = [[0.0] * o_dim for _ in range(h_dim)]
    for h in range(h_dim):
        for o in range(o_dim):
            num = sum(w[u][h] * gram[u][o] for u in range(v_dim))
            den = 0.0
            for u in range(v_dim):
                for z in range(v_dim):
                    for k in range(h_dim):
                        den += w[u][h] * gram[u][z] * w[z][k] * wb[k][o]
            if den == 0.0:
                den = eps
            out[h][o] = wb[h][o] * num / den
    return np.array(out)
