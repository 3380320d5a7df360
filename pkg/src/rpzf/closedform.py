"""Closed forms for one RPZF step on K_n, K_{m,n} and the star, plus threshold sweeps.

Powers of probabilities close to 0 or 1 are taken in log space so the
expressions stay accurate for n up to about 10^6.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from ._numerics import binom_pmf, comb, log_comb, power
from .chain import Variant, as_variant, check_p
from .errors import DomainError


def _xlog(k: float, x: float) -> float:
    """k * log(x) with 0 * log(0) = 0."""
    if k == 0:
        return 0.0
    if x <= 0.0:
        return -math.inf
    return k * math.log(x)


def _xlog1p(k: float, x: float) -> float:
    """k * log1p(x) with 0 * log1p(-1) = 0."""
    if k == 0:
        return 0.0
    if x <= -1.0:
        return -math.inf
    return k * math.log1p(x)


def _check_nb(n: int, b: int, lo: int = 0, hi: int | None = None):
    hi = n if hi is None else hi
    if n < 2:
        raise DomainError(f"need n >= 2, got {n}")
    if not lo <= b <= hi:
        raise DomainError(f"need {lo} <= b <= {hi}, got b={b}")


def escape_nb(n: int, b: int) -> float:
    """(1 - b/(n-1))^b: probability a fixed white vertex of K_n escapes b blue vertices."""
    _check_nb(n, b)
    if b >= n - 1:
        return power(1.0 - b / (n - 1), b)
    return math.exp(_xlog1p(b, -b / (n - 1)))


def q_nb(n: int, b: int) -> float:
    """q(n, b) = 1 - (1 - b/(n-1))^b."""
    return 1.0 - escape_nb(n, b)


def _log_force_all(n: int, b: int) -> float:
    """log q(n, b)^(n-b), the log-probability that phase 1 turns K_n all blue."""
    if b == n:
        return 0.0
    return _xlog1p(n - b, -escape_nb(n, b))


def kn_pzf_matrix(n: int) -> np.ndarray:
    """PZF transition matrix K(n) on K_n; row/column r stands for r + 1 blue vertices."""
    if n < 2:
        raise DomainError(f"need n >= 2, got {n}")
    K = np.zeros((n, n))
    for i in range(1, n + 1):
        g = escape_nb(n, i)
        K[i - 1, i - 1:] = binom_pmf(n - i, 1.0 - g, g)
    return K


def _check_pmf_args(n, b, p, k):
    _check_nb(n, b, lo=1)
    check_p(p)
    if not 0 <= k <= n:
        raise DomainError(f"need 0 <= k <= n, got k={k}")


def _pmf_sum_form(n, b, p, k, log_space):
    """Sum over the phase-1 blue count i of F_{b,i} (R_S)_{i,k}."""
    g = escape_nb(n, b)
    q = 1.0 - g
    total = 0.0
    for i in range(max(b, k), n + 1):
        if log_space:
            lt = (log_comb(n - b, i - b) + log_comb(i, k) + _xlog(k, 1 - p) + _xlog(i - k, p)
                  + _xlog(i - b, q) + _xlog(n - i, g))
            total += math.exp(lt)
        else:
            total += (comb(n - b, i - b) * comb(i, k) * power(1 - p, k) * power(p, i - k)
                      * power(q, i - b) * power(g, n - i))
    return total


def _pmf_poisson_binomial(n, b, p, k, log_space):
    """Binomial(b, 1-p) kept blue plus Binomial(n-b, (1-p) q) newly blue and kept."""
    g = escape_nb(n, b)
    new = (1 - p) * (1.0 - g)
    not_new = p + (1 - p) * g
    total = 0.0
    for i in range(0, min(b, k) + 1):
        if k - i > n - b:
            continue
        if log_space:
            lt = (log_comb(n - b, k - i) + log_comb(b, i) + _xlog(i, 1 - p) + _xlog(b - i, p)
                  + _xlog(k - i, new) + _xlog(n - b - (k - i), not_new))
            total += math.exp(lt)
        else:
            total += (comb(n - b, k - i) * comb(b, i) * power(1 - p, i) * power(p, b - i)
                      * power(new, k - i) * power(not_new, n - b - (k - i)))
    return total


def kn_one_step_pmf(n: int, b: int, p: float, variant, k: int, formula: int = 2,
                    log_space: bool = True) -> float:
    """P_b[X_1 = k] on K_n.

    ``formula=1`` sums over the intermediate phase-1 count; ``formula=2`` is the
    Poisson-binomial form. DARPZF moves the reverted mass of an all-blue phase-1
    outcome back onto k = n.
    """
    _check_pmf_args(n, b, p, k)
    variant = as_variant(variant)
    if formula == 1:
        prob = _pmf_sum_form(n, b, p, k, log_space)
    elif formula == 2:
        prob = _pmf_poisson_binomial(n, b, p, k, log_space)
    else:
        raise DomainError(f"formula must be 1 or 2, got {formula}")
    if variant is Variant.DARPZF:
        log_all = _log_force_all(n, b)
        prob -= math.exp(log_comb(n, k) + _xlog(n - k, p) + _xlog(k, 1 - p) + log_all)
        if k == n:
            prob += math.exp(log_all)
    return prob


def kn_one_step_dieout(n: int, b: int, p: float, variant) -> float:
    """P_b[X_1 = 0] on K_n for 1 <= b <= n - 2."""
    _check_nb(n, b, lo=1, hi=n - 2)
    p = check_p(p)
    variant = as_variant(variant)
    g = escape_nb(n, b)
    prob = math.exp(_xlog(b, p) + _xlog(n - b, p + (1 - p) * g))
    if variant is Variant.DARPZF:
        prob -= math.exp(_xlog(n, p) + _log_force_all(n, b))
    return prob


def kn_dieout_limit(b: int, p: float) -> float:
    """Large-n limit p^b exp(b^2 (p - 1)) of the one-step die-out probability."""
    p = check_p(p)
    return p ** b * math.exp(b * b * (p - 1))


def kn_one_step_expectation(n: int, b: int, p: float, variant) -> float:
    """E_b[X_1] on K_n: (1-p)(b + (n-b) q(n,b)), plus n p q(n,b)^(n-b) for DARPZF."""
    _check_nb(n, b)
    p = check_p(p)
    variant = as_variant(variant)
    e = (1 - p) * (b + (n - b) * q_nb(n, b))
    if variant is Variant.DARPZF:
        e += n * p * math.exp(_log_force_all(n, b))
    return e


def kn_expectation_gap(n: int, b: int, p: float) -> float:
    """n - E_b[X_1^D] on K_n, written without cancellation."""
    _check_nb(n, b)
    p = check_p(p)
    g = escape_nb(n, b)
    return (1 - p) * (n - b) * g - n * p * math.expm1(_log_force_all(n, b))


def kn_one_step_force_probability(n: int, b: int) -> float:
    """P_b[X_1^D = n] = q(n, b)^(n - b)."""
    _check_nb(n, b)
    return math.exp(_log_force_all(n, b))


def bipartite_force_across(part_size: int, b_U: int, b_V: int) -> float:
    """Probability that the blue vertices of U force every white vertex of V in one phase 1.

    ``part_size`` is |V|; b_U blue vertices sit in U and b_V in V.
    """
    if part_size < 1 or not 0 <= b_V <= part_size or b_U < 0:
        raise DomainError(f"bad arguments part_size={part_size}, b_U={b_U}, b_V={b_V}")
    white = part_size - b_V
    if white == 0:
        return 1.0
    if b_U == 0:
        return 0.0
    base = 1.0 - (b_V + 1) / part_size
    escape = power(base, b_U) if base <= 0.0 else math.exp(_xlog1p(b_U, -(b_V + 1) / part_size))
    return math.exp(_xlog1p(white, -escape))


def _check_star(n, b):
    if n < 3:
        raise DomainError(f"star needs n >= 3, got {n}")
    if not 1 <= b <= n:
        raise DomainError(f"need 1 <= b <= n with the universal vertex blue, got b={b}")


def star_one_step_expectation(n: int, b: int, p: float, variant) -> float:
    """E_b[X_1] on the star K_{1,n-1} when the universal vertex is among the b blue ones."""
    _check_star(n, b)
    p = check_p(p)
    variant = as_variant(variant)
    e = (1 - p) * (b + (n - b) * b / (n - 1))
    if variant is Variant.DARPZF:
        e += n * p * star_one_step_force_probability(n, b)
    return e


def star_one_step_force_probability(n: int, b: int) -> float:
    _check_star(n, b)
    return math.exp(_xlog1p(n - b, -(n - 1 - b) / (n - 1))) if b < n - 1 else 1.0


def star_expectation_gap(n: int, b: int, p: float) -> float:
    _check_star(n, b)
    p = check_p(p)
    log_all = _xlog1p(n - b, -(n - 1 - b) / (n - 1)) if b < n - 1 else 0.0
    return (1 - p) * (n - b) * (1 - b / (n - 1)) - n * p * math.expm1(log_all)


EXPECTATION_GAP = "expectation_gap"
FORCE_PROB = "one_step_force_prob"


@dataclass
class ThresholdSweep:
    family: str
    b_rule: str
    metric: str
    p: float | None
    n_grid: list[int]
    b_values: list = field(default_factory=list)
    values: list[float] = field(default_factory=list)

    columns = ("n", "b_n", "metric_value")

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(self.columns) + "\n")
        for n, b, v in zip(self.n_grid, self.b_values, self.values):
            b = "/".join(map(str, b)) if isinstance(b, tuple) else str(b)
            buf.write(f"{n},{b},{v!r}\n")
        return buf.getvalue()


def sqrt_log_rule(n: int, c: float) -> int:
    """ceil(sqrt(n log n^c)), capped at n."""
    return min(n, math.ceil(math.sqrt(n * c * math.log(n))))


def threshold_sweep(family: str, metric: str, n_grid, exponent: float | None = None,
                    p: float = 0.5, offset: int | None = None, offset_exponent: float | None = None,
                    bipartite_rule: str = "balanced") -> ThresholdSweep:
    """Evaluate a one-step threshold metric along a grid of graph sizes.

    complete:  b_n = ceil(sqrt(n log n^c)) with c = ``exponent``.
    star:      b_n = n - 1 - C (``offset``) or n - 1 - ceil(n^a) (``offset_exponent``).
    bipartite: K_{n,n} with b_U = b_V = ceil(sqrt(n log n^c)) ("balanced") or
               b_U = n, b_V = ceil(log n^c) ("full"); only the force probability is defined.
    """
    n_grid = [int(n) for n in n_grid]
    if any(b <= a for a, b in zip(n_grid, n_grid[1:])):
        raise DomainError("n_grid must be strictly increasing")
    if metric not in (EXPECTATION_GAP, FORCE_PROB):
        raise DomainError(f"unknown metric {metric!r}")
    if metric == EXPECTATION_GAP:
        p = check_p(p)
    sweep = ThresholdSweep(family, "", metric, p if metric == EXPECTATION_GAP else None, n_grid)

    if family == "complete":
        if exponent is None:
            raise DomainError("complete sweep needs an exponent c")
        sweep.b_rule = f"ceil(sqrt(n*log(n^{exponent})))"
        for n in n_grid:
            b = sqrt_log_rule(n, exponent)
            v = (kn_expectation_gap(n, b, p) if metric == EXPECTATION_GAP
                 else kn_one_step_force_probability(n, b))
            sweep.b_values.append(b)
            sweep.values.append(v)
    elif family == "star":
        if (offset is None) == (offset_exponent is None):
            raise DomainError("star sweep needs exactly one of offset or offset_exponent")
        if offset is not None:
            sweep.b_rule = f"n-1-{offset}"
        else:
            sweep.b_rule = f"n-1-ceil(n^{offset_exponent})"
        for n in n_grid:
            b = n - 1 - (offset if offset is not None else math.ceil(n ** offset_exponent))
            if b < 1:
                raise DomainError(f"rule gives b_n = {b} < 1 at n = {n}")
            v = (star_expectation_gap(n, b, p) if metric == EXPECTATION_GAP
                 else star_one_step_force_probability(n, b))
            sweep.b_values.append(b)
            sweep.values.append(v)
    elif family == "bipartite":
        if metric != FORCE_PROB:
            raise DomainError("bipartite sweeps support only the one-step force probability")
        if exponent is None:
            raise DomainError("bipartite sweep needs an exponent c")
        for n in n_grid:
            if bipartite_rule == "balanced":
                sweep.b_rule = f"b_U=b_V=ceil(sqrt(n*log(n^{exponent})))"
                bu = bv = sqrt_log_rule(n, exponent)
            elif bipartite_rule == "full":
                sweep.b_rule = f"b_U=n,b_V=ceil(log(n^{exponent}))"
                bu, bv = n, min(n, math.ceil(exponent * math.log(n)))
            else:
                raise DomainError(f"unknown bipartite rule {bipartite_rule!r}")
            v = bipartite_force_across(n, bu, bv) * bipartite_force_across(n, bv, bu)
            sweep.b_values.append((bu, bv))
            sweep.values.append(v)
    else:
        raise DomainError(f"unknown sweep family {family!r}")
    return sweep
