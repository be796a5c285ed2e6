"""Dense two-phase simplex for linear programs with variable bounds.

Rows are brought to equality form with one slack per row; rows whose slack
value starts outside its bounds get an artificial column driven out in
phase 1. Nonbasic variables rest on a bound (lower or upper), the basis
inverse is kept explicitly and refreshed periodically, and pricing switches
from the steepest-violation rule to Bland's least-index rule after a fixed
number of iterations so degenerate models cannot cycle.

The implementation is deliberately self-contained (numpy only): layout
models are small enough that a dense basis inverse is fast, and avoiding
third-party solver state keeps runs bit-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericError

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

_ENTER_TOL = 1e-9      # reduced-cost threshold for entering candidates
_PIVOT_TOL = 1e-10     # smallest acceptable pivot magnitude
_RATIO_TIE = 1e-12     # window for ratio-test ties
_FEAS_TOL = 1e-7       # residual infeasibility tolerance after phase 1
_REFRESH_EVERY = 256   # basis-inverse refactorization cadence


@dataclass
class LpResult:
    status: str
    x: np.ndarray | None
    objective: float | None
    iterations: int
    # optimal-basis snapshot, reusable as ``start`` for a re-solve with
    # slightly different bounds (branch-and-bound children)
    basis: np.ndarray | None = None
    at_upper: np.ndarray | None = None


class PreparedLp:
    """Reusable standard form: the column block [A | I_slack | I_art] plus
    slack bounds and costs never change between solves of the same model,
    so branch-and-bound prepares once and re-solves with fresh bounds."""

    def __init__(self, c, A, senses, b):
        c = np.asarray(c, dtype=float)
        A = np.asarray(A, dtype=float)
        b = np.asarray(b, dtype=float)
        self.n = c.size
        self.m = b.size
        if A.shape != (self.m, self.n):
            raise ValueError(f"A has shape {A.shape}, expected ({self.m}, {self.n})")
        self.A_full = np.hstack([A, np.eye(self.m), np.eye(self.m)])
        self.b = b
        self.slack_lo = np.empty(self.m)
        self.slack_hi = np.empty(self.m)
        for r, sense in enumerate(senses):
            if sense == "<=":
                self.slack_lo[r], self.slack_hi[r] = 0.0, math.inf
            elif sense == "=":
                self.slack_lo[r], self.slack_hi[r] = 0.0, 0.0
            elif sense == ">=":
                self.slack_lo[r], self.slack_hi[r] = -math.inf, 0.0
            else:
                raise ValueError(f"unknown sense {sense!r}")
        self.cost2 = np.zeros(self.n + 2 * self.m)
        self.cost2[:self.n] = c

    def solve(self, lower, upper, max_iter: int | None = None, start=None) -> LpResult:
        """Solve with fresh bounds. ``start`` is an optional (basis, at_upper)
        snapshot from a previous solve of the same prepared model; when the
        warm path cannot be trusted it falls back to a cold solve."""
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        if np.any(lower > upper + 1e-12):
            return LpResult(INFEASIBLE, None, None, 0)
        if np.any(~np.isfinite(lower) & ~np.isfinite(upper)):
            raise ValueError("free variables (both bounds infinite) are not supported")
        if self.m == 0:
            c = self.cost2[:self.n]
            x = np.where(c >= 0, lower, upper)
            if np.any(~np.isfinite(x)):
                return LpResult(UNBOUNDED, None, None, 0)
            return LpResult(OPTIMAL, x, float(c @ x), 0)
        if start is not None:
            try:
                return _Simplex(self, lower, upper, max_iter, start=start).run()
            except NumericError:
                pass   # cold retry below
        return _Simplex(self, lower, upper, max_iter).run()


def solve_lp(c, A, senses, b, lower, upper, max_iter: int | None = None) -> LpResult:
    """Minimize c @ x subject to A x (senses) b and lower <= x <= upper.

    ``senses`` holds one of "<=", "=", ">=" per row. Every variable needs at
    least one finite bound. Returns status optimal / infeasible / unbounded;
    raises NumericError when the arithmetic cannot be trusted (never a
    silently wrong answer).
    """
    return PreparedLp(c, A, senses, b).solve(lower, upper, max_iter)


class _Simplex:
    def __init__(self, prep: PreparedLp, lower, upper, max_iter):
        n, m = prep.n, prep.m
        self.n, self.m = n, m
        self.N = n + 2 * m   # structural | slack | artificial
        self.A_full = prep.A_full   # read-only share
        self.b = prep.b

        lo = np.empty(self.N)
        hi = np.empty(self.N)
        lo[:n], hi[:n] = lower, upper
        lo[n:n + m] = prep.slack_lo
        hi[n:n + m] = prep.slack_hi
        # artificial slots start frozen at zero; activated only where needed
        lo[n + m:], hi[n + m:] = 0.0, 0.0
        self.lo, self.hi = lo, hi

        self.cost2 = prep.cost2

        self.x = np.zeros(self.N)
        self.basic = np.zeros(self.N, dtype=bool)
        self.at_upper = np.zeros(self.N, dtype=bool)
        self.basis = np.empty(m, dtype=int)
        self.Binv = np.eye(m)
        self.iterations = 0
        self.max_iter = max_iter if max_iter is not None else 20000 + 50 * (m + n)
        self.bland_after = 2000 + 5 * (m + n)

    # --- setup ------------------------------------------------------------

    def _initial_basis(self) -> np.ndarray:
        """Slack basis, with artificials substituted where a slack starts out
        of bounds. Returns the phase-1 cost vector (all-zero when clean)."""
        n, m = self.n, self.m
        for j in range(n):
            if math.isfinite(self.lo[j]):
                self.x[j] = self.lo[j]
            else:
                self.x[j] = self.hi[j]
                self.at_upper[j] = True
        resid = self.b - self.A_full[:, :n] @ self.x[:n]

        cost1 = np.zeros(self.N)
        for r in range(m):
            s = n + r
            a = n + m + r
            if self.lo[s] - _FEAS_TOL <= resid[r] <= self.hi[s] + _FEAS_TOL:
                self.basis[r] = s
                self.x[s] = resid[r]
                self.basic[s] = True
            else:
                sv = self.hi[s] if resid[r] > self.hi[s] else self.lo[s]
                self.x[s] = sv
                self.at_upper[s] = resid[r] > self.hi[s]
                val = resid[r] - sv
                if val > 0:
                    self.lo[a], self.hi[a] = 0.0, math.inf
                    cost1[a] = 1.0
                else:
                    self.lo[a], self.hi[a] = -math.inf, 0.0
                    cost1[a] = -1.0
                self.x[a] = val
                self.basis[r] = a
                self.basic[a] = True
        return cost1

    # --- core iteration ---------------------------------------------------

    def _refresh(self):
        """Refactor the basis inverse and recompute basic values exactly."""
        try:
            self.Binv = np.linalg.inv(self.A_full[:, self.basis])
        except np.linalg.LinAlgError as exc:
            raise NumericError("singular basis matrix") from exc
        xn = self.x.copy()
        xn[self.basis] = 0.0
        self.x[self.basis] = self.Binv @ (self.b - self.A_full @ xn)

    def _iterate(self, cost, phase: int) -> str:
        m = self.m
        fixed = (self.hi - self.lo) <= 0.0
        since_refresh = 0
        while True:
            if self.iterations >= self.max_iter:
                raise NumericError(f"simplex iteration limit {self.max_iter} exceeded")
            self.iterations += 1
            since_refresh += 1
            if since_refresh >= _REFRESH_EVERY:
                self._refresh()
                since_refresh = 0

            y = self.Binv.T @ cost[self.basis]
            red = cost - y @ self.A_full
            eligible = ~self.basic & ~fixed & (
                (~self.at_upper & (red < -_ENTER_TOL))
                | (self.at_upper & (red > _ENTER_TOL))
            )
            idx = np.flatnonzero(eligible)
            if idx.size == 0:
                return OPTIMAL
            bland = self.iterations > self.bland_after
            if bland:
                e = int(idx[0])                       # least index
            else:
                e = int(idx[np.argmax(np.abs(red[idx]))])

            direction = -1.0 if self.at_upper[e] else 1.0
            col = self.Binv @ self.A_full[:, e]
            delta = direction * col   # basic values move by -t * delta

            xb = self.x[self.basis]
            lo_b = self.lo[self.basis]
            hi_b = self.hi[self.basis]
            t_arr = np.full(m, math.inf)
            pos = delta > _PIVOT_TOL
            neg = delta < -_PIVOT_TOL
            # (x - (-inf)) / d and (x - inf) / (-d) both give +inf: unbounded rows drop out
            t_arr[pos] = (xb[pos] - lo_b[pos]) / delta[pos]
            t_arr[neg] = (xb[neg] - hi_b[neg]) / delta[neg]
            np.maximum(t_arr, 0.0, out=t_arr)
            t_basic = float(t_arr.min()) if m else math.inf
            t_flip = self.hi[e] - self.lo[e]

            if not math.isfinite(t_basic) and not math.isfinite(t_flip):
                if phase == 1:
                    raise NumericError("phase-1 objective unbounded (inconsistent state)")
                return UNBOUNDED

            if t_flip < t_basic - _RATIO_TIE:
                # entering variable reaches its opposite bound first: plain flip
                self.x[self.basis] = xb - t_flip * delta
                self.x[e] = self.hi[e] if direction > 0 else self.lo[e]
                self.at_upper[e] = direction > 0
                continue

            ties = np.flatnonzero(t_arr <= t_basic + _RATIO_TIE)
            if bland:
                leave = int(ties[np.argmin(self.basis[ties])])
            else:
                leave = int(ties[np.argmax(np.abs(delta[ties]))])
            piv = col[leave]
            if abs(piv) < _PIVOT_TOL:
                self._refresh()
                since_refresh = 0
                continue

            t = t_arr[leave]
            out = self.basis[leave]
            leave_to_upper = delta[leave] < 0
            self.x[self.basis] = xb - t * delta
            self.x[e] = (self.hi[e] if self.at_upper[e] else self.lo[e]) + direction * t
            self.x[out] = self.hi[out] if leave_to_upper else self.lo[out]
            self.basic[out] = False
            self.at_upper[out] = leave_to_upper
            self.basis[leave] = e
            self.basic[e] = True

            row = self.Binv[leave] / piv
            self.Binv -= np.outer(col, row)
            self.Binv[leave] = row

    # --- driver -----------------------------------------------------------

    def run(self) -> LpResult:
        n, m = self.n, self.m
        art = slice(n + m, self.N)
        cost1 = self._initial_basis()
        if np.any(cost1 != 0.0):
            self._iterate(cost1, phase=1)
            if float(np.abs(self.x[art]).sum()) > _FEAS_TOL:
                return LpResult(INFEASIBLE, None, None, self.iterations)
            # retire artificials: clamp to zero and freeze
            self.x[art] = np.where(np.abs(self.x[art]) <= _FEAS_TOL, 0.0, self.x[art])
            self.lo[art] = 0.0
            self.hi[art] = 0.0
            self._refresh()

        status = self._iterate(self.cost2, phase=2)
        if status == UNBOUNDED:
            return LpResult(UNBOUNDED, None, None, self.iterations)

        self._refresh()
        xs = self.x[:n].copy()
        drift = self._bound_violation()
        if drift > 1e-6:
            raise NumericError(f"solution drifted out of bounds by {drift:.3g}")
        return LpResult(OPTIMAL, xs, float(self.cost2[:n] @ xs), self.iterations)

    def _bound_violation(self) -> float:
        lo_v = np.where(np.isfinite(self.lo), self.lo - self.x, -math.inf)
        hi_v = np.where(np.isfinite(self.hi), self.x - self.hi, -math.inf)
        return float(max(lo_v.max(initial=0.0), hi_v.max(initial=0.0), 0.0))
