"""Nonlinear least-squares calibration of the adoption curve to trajectories.

Fits (p, q) by damped Gauss-Newton (Levenberg-Marquardt style adaptive
damping) with the analytic Jacobian of the closed-form curve, box-projected
to p in [1e-6, 1], q in [0, 1]. The fit window runs from tick 0 through the
first saturated tick, so post-saturation flat tail ticks never influence the
fit.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from diffusim.bass import BassParams, bass_curve
from diffusim.engine import AdoptionTrajectory

P_MIN, P_MAX = 1e-6, 1.0
Q_MIN, Q_MAX = 0.0, 1.0
STEP_TOL = 1e-10
MAX_ITERATIONS = 500


class DegenerateTrajectory(ValueError):
    """Observed proportions have zero variance; r-squared is undefined."""


@dataclass(frozen=True)
class FitResult:
    """Outcome of one least-squares fit.

    at_bound flags whether each fitted coefficient landed on its box bound
    (p on [1e-6, 1], q on [0, 1]), which preserves diagnosability of
    saturating fits. residual_history holds the accepted sum-of-squares
    sequence, which is non-increasing by construction.
    """

    params: BassParams
    r_squared: float
    residual_sum: float
    iterations: int
    converged: bool
    p_at_bound: bool
    q_at_bound: bool
    residual_history: tuple[float, ...]

    def to_json(self) -> str:
        return json.dumps(
            {
                "p": self.params.p,
                "q": self.params.q,
                "r_squared": self.r_squared,
                "residual_sum": self.residual_sum,
                "iterations": self.iterations,
                "converged": self.converged,
                "p_at_bound": self.p_at_bound,
                "q_at_bound": self.q_at_bound,
            },
            indent=2,
        )


def _curve_and_jacobian(p: float, q: float, t: np.ndarray):
    """Closed-form curve n(t) = p(1-E)/(p+qE), E = exp(-(p+q)t), with its
    partial derivatives wrt p and q."""
    e = np.exp(-(p + q) * t)
    denom = p + q * e
    n = p * (1.0 - e) / denom
    te = t * e
    # d/dp [p(1-E)] = (1-E) + p t E ; d/dp denom = 1 - q t E
    dn_dp = ((1.0 - e) + p * te) / denom - p * (1.0 - e) * (1.0 - q * te) / denom**2
    # d/dq [p(1-E)] = p t E ; d/dq denom = E (1 - q t)
    dn_dq = (p * te) / denom - p * (1.0 - e) * e * (1.0 - q * t) / denom**2
    return n, dn_dp, dn_dq


def _clip(p: float, q: float) -> tuple[float, float]:
    return min(max(p, P_MIN), P_MAX), min(max(q, Q_MIN), Q_MAX)


def fit_window(traj: AdoptionTrajectory) -> np.ndarray:
    """Observed proportions from tick 0 through the first saturated tick
    (or the whole record when the run never saturated)."""
    props = np.asarray(traj.proportions, dtype=float)
    if traj.saturated_at is not None:
        props = props[: traj.saturated_at + 1]
    return props


def fit_bass(traj: AdoptionTrajectory, init: BassParams | None = None) -> FitResult:
    """Least-squares fit of the adoption curve to a trajectory.

    Minimizes sum_t (observed_t - n(p, q, t))^2 over the fit window by
    damped Gauss-Newton with analytic Jacobian. Default start: p0 =
    max(observed tick-1 proportion, 1e-3), q0 = 0.5. Convergence when the
    relative parameter step drops below 1e-10; the iteration cap (500) sets
    converged=False rather than raising.

    Raises:
        DegenerateTrajectory: observed window has zero variance.
        ValueError: fewer than 4 ticks or fewer than 2 distinct values.
    """
    y = fit_window(traj)
    if len(y) < 4:
        raise ValueError(f"trajectory too short to fit: {len(y)} ticks")
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        # zero variance subsumes the 2-distinct-values precondition
        raise DegenerateTrajectory("observed proportions have zero variance")

    t = np.arange(len(y), dtype=float)
    if init is None:
        p0 = max(float(y[1]), 1e-3)
        q0 = 0.5
    else:
        p0, q0 = init.p, init.q
    p, q = _clip(p0, q0)

    def sse(pv: float, qv: float) -> float:
        resid = y - _curve_and_jacobian(pv, qv, t)[0]
        return float(resid @ resid)

    current = sse(p, q)
    history = [current]
    lam = 1e-3
    converged = False
    iteration = 0
    for iteration in range(1, MAX_ITERATIONS + 1):
        n, dn_dp, dn_dq = _curve_and_jacobian(p, q, t)
        resid = y - n
        j = np.column_stack((dn_dp, dn_dq))
        jtj = j.T @ j
        jtr = j.T @ resid
        stepped = False
        for _ in range(60):
            damped = jtj + lam * np.diag(np.maximum(np.diag(jtj), 1e-14))
            try:
                delta = np.linalg.solve(damped, jtr)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            cand_p, cand_q = _clip(p + float(delta[0]), q + float(delta[1]))
            cand_sse = sse(cand_p, cand_q)
            if cand_sse <= current:
                step = math.hypot(cand_p - p, cand_q - q)
                scale = math.hypot(p, q)
                p, q, current = cand_p, cand_q, cand_sse
                history.append(current)
                lam = max(lam * 0.25, 1e-12)
                stepped = True
                if step <= STEP_TOL * max(scale, 1e-30):
                    converged = True
                break
            lam *= 10.0
            if lam > 1e12:
                break
        if converged or not stepped:
            # no acceptable step exists at any damping: local minimum
            converged = converged or not stepped
            break

    r_squared = 1.0 - current / ss_tot
    return FitResult(
        params=BassParams(p, q),
        r_squared=r_squared,
        residual_sum=current,
        iterations=iteration,
        converged=converged,
        p_at_bound=(p <= P_MIN or p >= P_MAX),
        q_at_bound=(q <= Q_MIN or q >= Q_MAX),
        residual_history=tuple(history),
    )


def jacobian_check(params: BassParams, t: float) -> tuple[float, float]:
    """Analytic-minus-central-difference discrepancy of (dn/dp, dn/dq).

    Central differences use step 1e-6 on each coefficient; both entries
    should be far below 1e-6 anywhere in the fitted range.
    """
    h = 1e-6
    t_arr = np.asarray([float(t)])
    _, dn_dp, dn_dq = _curve_and_jacobian(params.p, params.q, t_arr)
    fd_p = (
        bass_curve(BassParams(params.p + h, params.q), t)
        - bass_curve(BassParams(params.p - h, params.q), t)
    ) / (2 * h)
    fd_q = (
        bass_curve(BassParams(params.p, params.q + h), t)
        - bass_curve(BassParams(params.p, params.q - h), t)
    ) / (2 * h)
    return float(dn_dp[0] - fd_p), float(dn_dq[0] - fd_q)


def read_trajectory_csv(path) -> AdoptionTrajectory:
    """Load a trajectory from CSV with header tick,proportion (an extra
    adopters column, as written by the engine export, is accepted)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        try:
            tick_col = header.index("tick")
            prop_col = header.index("proportion")
        except ValueError as exc:
            raise ValueError(f"missing tick/proportion columns in {header}") from exc
        ticks = []
        props = []
        for row in reader:
            if not row:
                continue
            ticks.append(int(row[tick_col]))
            props.append(float(row[prop_col]))
    if ticks != list(range(len(ticks))):
        raise ValueError("ticks must be consecutive from 0")
    props_arr = np.asarray(props, dtype=float)
    saturated = int(np.argmax(props_arr >= 1.0)) if np.any(props_arr >= 1.0) else None
    # population unknown from proportions alone; use denominator 1
    return AdoptionTrajectory(
        proportions=props_arr,
        population=1,
        saturated_at=saturated,
    )
