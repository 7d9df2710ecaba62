"""Compiled inner loops. Kept free of Python objects so they run without the GIL."""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def sgd_span(users, items, ratings, start, stop,
             user_factors, item_factors, user_bias, item_bias,
             alphas, betas, with_bias, counts):
    """One SGD pass over entries [start, stop), mutating the model in place.

    Per entry: the error is computed once against the current parameters,
    then the bias updates run before the factor loop; within each factor
    index the item update uses the pre-update user value. Returns the index
    of the first entry whose error is non-finite (the pass stops there), or
    -1 on a clean pass. When counts is non-empty, counts[n] is incremented
    for every processed entry n.
    """
    k = user_factors.shape[1]
    track = counts.shape[0] > 0
    for n in range(start, stop):
        u = users[n]
        i = items[n]
        dot = 0.0
        for f in range(k):
            dot += user_factors[u, f] * item_factors[i, f]
        if with_bias:
            pred = dot + user_bias[u] + item_bias[i]
        else:
            pred = dot
        err = ratings[n] - pred
        if not np.isfinite(err):
            return n
        if with_bias:
            user_bias[u] += alphas[2] * (err - betas[2] * user_bias[u])
            item_bias[i] += alphas[3] * (err - betas[3] * item_bias[i])
        for f in range(k):
            p_old = user_factors[u, f]
            user_factors[u, f] = p_old + alphas[0] * (err * item_factors[i, f] - betas[0] * p_old)
            item_factors[i, f] = item_factors[i, f] + alphas[1] * (err * p_old - betas[1] * item_factors[i, f])
        if track:
            counts[n] += 1
    return -1


@njit(cache=True, nogil=True)
def sum_squared_error(users, items, ratings,
                      user_factors, item_factors, user_bias, item_bias):
    """Sum of squared prediction errors over the given entries."""
    k = user_factors.shape[1]
    total = 0.0
    for n in range(users.shape[0]):
        u = users[n]
        i = items[n]
        dot = 0.0
        for f in range(k):
            dot += user_factors[u, f] * item_factors[i, f]
        e = ratings[n] - (dot + user_bias[u] + item_bias[i])
        total += e * e
    return total
