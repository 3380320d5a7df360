"""Absorbing-chain quantities for RPZF: visit counts, absorption times, exit odds."""
from __future__ import annotations

import io
import json
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .chain import TransitionBundle, Variant, as_variant, build_bundle, build_forcing
from .errors import BracketError, DomainError, NumericalError, SingularityError
from .graph import Graph
from .statespace import StateSpace

P_LO, P_HI = 1e-9, 1.0 - 1e-9


def _lu(A: np.ndarray):
    if not np.all(np.isfinite(A)):
        raise SingularityError("matrix has non-finite entries")
    with warnings.catch_warnings():
        warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
        try:
            lu, piv = scipy.linalg.lu_factor(A, check_finite=False)
        except (scipy.linalg.LinAlgWarning, np.linalg.LinAlgError) as exc:
            raise SingularityError(f"I - Q is singular: {exc}") from None
    if np.any(np.diag(lu) == 0.0):
        raise SingularityError("I - Q is singular (zero pivot)")
    return lu, piv


def _i_minus_q(Q: np.ndarray) -> np.ndarray:
    Q = np.asarray(Q, dtype=np.float64)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise DomainError(f"Q must be square, got shape {Q.shape}")
    if Q.size and (Q.min() < 0.0 or Q.sum(axis=1).max() > 1.0 + 1e-12):
        raise SingularityError("Q is not substochastic; I - Q may be singular")
    return np.eye(Q.shape[0]) - Q


def fundamental_matrix(Q) -> tuple[np.ndarray, float]:
    """N = (I - Q)^-1 by pivoted LU, with the residual max|(I - Q) N - I|."""
    A = _i_minus_q(Q)
    if A.size == 0:
        return np.zeros((0, 0)), 0.0
    factor = _lu(A)
    N = scipy.linalg.lu_solve(factor, np.eye(A.shape[0]), check_finite=False)
    residual = float(np.abs(A @ N - np.eye(A.shape[0])).sum(axis=1).max())
    return N, residual


def expected_absorption_times(N: np.ndarray) -> np.ndarray:
    return N @ np.ones(N.shape[1])


def absorption_probabilities(Q_D, a1, a2) -> tuple[np.ndarray, float]:
    """C = (I - Q_D)^-1 [a1 a2]: columns are die-out and fully-force probabilities."""
    A = _i_minus_q(Q_D)
    rhs = np.column_stack([np.asarray(a1, float), np.asarray(a2, float)])
    if rhs.shape[0] != A.shape[0]:
        raise DomainError("a1/a2 length does not match Q_D")
    if A.size == 0:
        return np.zeros((0, 2)), 0.0
    C = scipy.linalg.lu_solve(_lu(A), rhs, check_finite=False)
    residual = float(np.abs(A @ C - rhs).max())
    return C, residual


@dataclass(frozen=True, eq=False)
class AbsorptionReport:
    variant: Variant
    p: float
    states: np.ndarray      # transient state indices, aligned with rows of N, t, C
    blue_count: np.ndarray
    N: np.ndarray
    t: np.ndarray
    C: np.ndarray | None
    residuals: dict

    def row(self, state_index: int) -> int:
        hits = np.flatnonzero(self.states == state_index)
        if not hits.size:
            raise DomainError(f"state {state_index} is not transient")
        return int(hits[0])

    def expabs(self, state_index: int) -> float:
        return float(self.t[self.row(state_index)])

    def die_out(self, state_index: int) -> float:
        if self.C is None:
            return 1.0
        return float(self.C[self.row(state_index), 0])

    columns = ("state_index", "blue_count", "t_i", "c_die", "c_force")

    def records(self) -> list[dict]:
        out = []
        for k, i in enumerate(self.states):
            rec = {"state_index": int(i), "blue_count": int(self.blue_count[k]),
                   "t_i": float(self.t[k]), "c_die": None, "c_force": None}
            if self.C is not None:
                rec["c_die"], rec["c_force"] = float(self.C[k, 0]), float(self.C[k, 1])
            out.append(rec)
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(self.columns) + "\n")
        for rec in self.records():
            buf.write(",".join(_fmt(rec[c]) for c in self.columns) + "\n")
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({"variant": self.variant.value, "p": self.p,
                           "columns": list(self.columns), "rows": self.records(),
                           "residuals": self.residuals})


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def analyze(bundle: TransitionBundle) -> AbsorptionReport:
    N, res_n = fundamental_matrix(bundle.Q)
    t = expected_absorption_times(N)
    C, res_c = None, None
    if bundle.variant is Variant.DARPZF:
        C, res_c = absorption_probabilities(bundle.Q, bundle.a1, bundle.a2)
    states = bundle.transient
    return AbsorptionReport(bundle.variant, bundle.p, states, bundle.space.blue_count[states],
                            N, t, C, {"fundamental": res_n, "absorption": res_c})


def _die_out_solver(g: Graph, ss: StateSpace, state_index: int):
    F = build_forcing(g, ss)
    if not 1 <= state_index < ss.s:
        raise DomainError(f"state {state_index} is not transient under DARPZF")
    row = state_index - 1

    def die_out(p: float) -> float:
        b = build_bundle(g, ss, p, Variant.DARPZF, forcing=F)
        A = np.eye(ss.s - 1) - b.Q
        rhs = np.column_stack([b.a1, b.a2])
        return float(scipy.linalg.lu_solve(_lu(A), rhs, check_finite=False)[row, 0])

    return die_out


def die_out_curve(g: Graph, ss: StateSpace, state_index: int, ps) -> np.ndarray:
    die_out = _die_out_solver(g, ss, state_index)
    return np.array([die_out(p) for p in ps])


def critical_reversion_probability(g: Graph, ss: StateSpace, state_index: int,
                                   tol: float = 1e-7, scan: bool = False) -> float:
    """Reversion probability at which DARPZF from S_i dies out with probability 1/2.

    Bisection on p in [1e-9, 1 - 1e-9]. With ``scan`` a 0.01-resolution sweep
    warns if the die-out curve crosses 1/2 more than once.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    die_out = _die_out_solver(g, ss, state_index)
    lo, hi = P_LO, P_HI
    f_lo, f_hi = die_out(lo) - 0.5, die_out(hi) - 0.5
    if not (f_lo < 0.0 < f_hi):
        raise BracketError(f"die-out minus 1/2 is {f_lo:.3g} at p={lo} and {f_hi:.3g} at p={hi}")
    if scan:
        grid = np.arange(1, 100) / 100
        signs = np.sign([die_out(p) - 0.5 for p in grid])
        crossings = int(np.count_nonzero(np.diff(signs[signs != 0])))
        if crossings > 1:
            warnings.warn(f"die-out probability crosses 1/2 {crossings} times; "
                          "returning the bisection root", RuntimeWarning, stacklevel=2)
    mid, f_mid = lo, f_lo
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f_mid = die_out(mid) - 0.5
        if abs(f_mid) <= tol or hi - lo < 1e-15:
            break
        if f_mid < 0.0:
            lo = mid
        else:
            hi = mid
    if abs(f_mid) > tol:
        raise NumericalError(f"bisection stalled with |c - 1/2| = {abs(f_mid):.3g}")
    return mid


def pzf_expected_propagation_time(g: Graph, ss: StateSpace, start_state: int) -> float:
    """Expected PZF propagation time via ept = ((M - 1 e_s^T - I)^-1)_{start, s} + 1.

    M is the forcing matrix restricted to nonempty colorings; the all-white
    state never reaches all-blue and would make the system singular.
    """
    if not 1 <= start_state <= ss.s:
        raise DomainError(f"start state must be nonempty, got index {start_state}")
    M = build_forcing(g, ss)[1:, 1:]
    k = M.shape[0]
    A = M - np.outer(np.ones(k), np.eye(k)[-1]) - np.eye(k)
    e_s = np.zeros(k)
    e_s[-1] = 1.0
    # (A^-1)_{i, s} is the i-th entry of the solution of A x = e_s.
    x = scipy.linalg.lu_solve(_lu(A), e_s, check_finite=False)
    return float(x[start_state - 1]) + 1.0
