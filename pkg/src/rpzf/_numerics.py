"""Binomial helpers shared by the chain builder and the closed forms."""
from __future__ import annotations

import math

import numpy as np

# math.comb(n, k) fits a double for every k once n stays below this.
_EXACT_COMB_MAX = 1020


def comb(n: int, k: int) -> float:
    if k < 0 or k > n:
        return 0.0
    if n <= _EXACT_COMB_MAX:
        return float(math.comb(n, k))
    return math.exp(log_comb(n, k))


def log_comb(n: int, k: int) -> float:
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def power(base: float, e: int) -> float:
    """base**e with the 0**0 = 1 convention made explicit."""
    if e == 0:
        return 1.0
    return base ** e


def binom_pmf(n: int, success: float, failure: float | None = None) -> np.ndarray:
    """Probability of k successes in n trials, k = 0..n.

    ``failure`` may be passed when 1 - success is known more accurately than
    the subtraction would give it.
    """
    failure = 1.0 - success if failure is None else failure
    out = np.zeros(n + 1)
    if success <= 0.0:
        out[0] = 1.0
        return out
    if failure <= 0.0:
        out[n] = 1.0
        return out
    if n <= _EXACT_COMB_MAX:
        for k in range(n + 1):
            out[k] = math.comb(n, k) * power(success, k) * power(failure, n - k)
        return out
    ls, lf = math.log(success), math.log(failure)
    for k in range(n + 1):
        out[k] = math.exp(log_comb(n, k) + k * ls + (n - k) * lf)
    return out


def thinning_matrix(size: int, p: float) -> np.ndarray:
    """T[i, j] = C(i, j) p^(i-j) (1-p)^j: keep j of i blue vertices when each reverts w.p. p."""
    t = np.zeros((size + 1, size + 1))
    for i in range(size + 1):
        t[i, : i + 1] = binom_pmf(i, 1.0 - p, p)
    return t
