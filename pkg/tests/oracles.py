"""Independent reference computations used as test oracles.

Nothing here calls the closed forms under test: stationary laws come
from dense linear solves on truncated generators, moments from explicit
enumeration of transitions.
"""

from __future__ import annotations

import numpy as np

from lobfluct.model import HcParams


def generator_matrix(params: HcParams, K: int) -> np.ndarray:
    """Spread generator on {1..K}; the up move out of K is dropped."""
    Q = np.zeros((K, K))
    gp, am, bp = params.gamma_plus, params.alpha_minus, params.beta_plus
    for k in range(1, K + 1):
        i = k - 1
        if k < K:
            Q[i, i + 1] += gp
        if k >= 2:
            for j in range(1, k):
                Q[i, j - 1] += (am + bp) / (k - 1)
        Q[i, i] = -Q[i].sum()
    return Q


def stationary_from_generator(params: HcParams, K: int) -> np.ndarray:
    Q = generator_matrix(params, K)
    A = np.vstack([Q.T, np.ones(K)])
    b = np.zeros(K + 1)
    b[-1] = 1.0
    sol, *_ = np.linalg.lstsq(A, b, rcond=None)
    return sol


def jump_matrix(params: HcParams, K: int) -> np.ndarray:
    P = np.zeros((K, K))
    p, q = params.p, params.q
    P[0, 1] = 1.0
    for k in range(2, K + 1):
        i = k - 1
        if k < K:
            P[i, i + 1] = p
        else:
            P[i, i] += p
        for j in range(1, k):
            P[i, j - 1] += q / (k - 1)
    return P


def stationary_jump(params: HcParams, K: int) -> np.ndarray:
    P = jump_matrix(params, K)
    A = np.vstack([(P.T - np.eye(K)), np.ones(K)])
    b = np.zeros(K + 1)
    b[-1] = 1.0
    sol, *_ = np.linalg.lstsq(A, b, rcond=None)
    return sol


def increment_moments(params: HcParams, K: int = 300) -> tuple[float, float]:
    """``(E F, E F^2)`` of one bid increment under the stationary jump law,
    by enumerating every transition and both outcomes of ``F``."""
    pi = stationary_jump(params, K)
    gp, gm = params.gamma_plus, params.gamma_minus
    a = params.beta_minus / gp  # opening moves the bid down
    c = params.beta_plus / gm  # closing moves the bid up
    m1 = m2 = 0.0
    for k in range(1, K + 1):
        w = pi[k - 1]
        up = 1.0 if k == 1 else params.p
        m1 += w * up * a * (-1.0)
        m2 += w * up * a * 1.0
        if k >= 2:
            for j in range(1, k):
                pr = params.q / (k - 1)
                d = k - j
                m1 += w * pr * c * d
                m2 += w * pr * c * d * d
    return m1, m2
