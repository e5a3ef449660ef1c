"""Explicit shrinking-dimer saddle-dynamics stepper.

One scheme serves both the standard search (true force) and the
surrogate-driven search: the state relaxes along the reflected force
while k direction vectors track the most unstable subspace through
dimer Hessian-vector products, re-orthonormalized every step. The
dimer half-length follows a closed-form shrinking schedule.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import Diverged
from .forces import ForceOracle, dimer_hv
from .linalg import DirectionFrame, gram_schmidt

DIMER_KINDS = ("exponential", "polynomial")


@dataclass(frozen=True)
class DimerSchedule:
    """Closed-form shrinking law for the dimer half-length."""

    kind: str
    l0: float

    def __post_init__(self):
        if self.kind not in DIMER_KINDS:
            raise ValueError(f"unknown dimer schedule {self.kind!r}")
        if self.l0 <= 0:
            raise ValueError("l0 must be positive")


def dimer_schedule(schedule: DimerSchedule, tau: float, n: int) -> float:
    """Dimer half-length after n steps of size tau.

    exponential: l0 * exp(-n tau);  polynomial: l0 / (1 + (n tau)^2).
    """
    t = n * tau
    if schedule.kind == "exponential":
        return schedule.l0 * float(np.exp(-t))
    return schedule.l0 / (1.0 + t * t)


@dataclass(frozen=True)
class SdParams:
    """Stepper parameters; beta/gamma are the state/direction relaxations."""

    tau: float
    k: int
    schedule: DimerSchedule
    tol_x: float = 1e-6
    max_steps: int = 20000
    beta: float = 1.0
    gamma: float = 1.0
    divergence_bound: float = 1e6

    def __post_init__(self):
        if min(self.tau, self.tol_x, self.beta, self.gamma) <= 0:
            raise ValueError("tau, tol_x, beta, gamma must be positive")
        if self.k < 0:
            raise ValueError("k must be non-negative")


@dataclass(frozen=True)
class SdState:
    """Iterate of the dynamics: position, direction frame, step index, dimer length."""

    x: np.ndarray
    frame: DirectionFrame
    n: int = 0
    l: float = 0.0

    @staticmethod
    def initial(x, frame: DirectionFrame, params: SdParams) -> "SdState":
        return SdState(x=np.asarray(x, dtype=float), frame=frame, n=0,
                       l=dimer_schedule(params.schedule, params.tau, 0))


class RunStatus(str, enum.Enum):
    CONVERGED = "converged"
    MAX_STEPS = "max_steps"
    REGION_EXIT = "region_exit"
    DIVERGED = "diverged"


@dataclass
class SaddleRunResult:
    final: SdState
    status: RunStatus
    n_steps: int
    N_f: int
    exit_point: Optional[np.ndarray] = None
    trajectory: Optional[list] = None
    subproblems: Optional[list] = None


def sd_step(force: ForceOracle, state: SdState, params: SdParams) -> SdState:
    """One explicit step of the shrinking-dimer saddle dynamics.

    x' = x + tau*beta*(I - 2 sum_j v_j v_j^T) F(x); each direction moves by
    tau*gamma times the dimer product reflected through
    (I - v_i v_i^T - 2 sum_{j<i} v_j v_j^T), then the frame is
    re-orthonormalized. Consumes exactly 1 + 2k force queries.
    """
    x = state.x
    v = state.frame.vectors
    k = v.shape[0]
    f = force.evaluate(x)
    w = f - 2.0 * (v.T @ (v @ f)) if k else f
    x_new = x + params.tau * params.beta * w

    if k:
        h = np.empty_like(v)
        for i in range(k):
            h[i] = dimer_hv(force, x, v[i], state.l).hv
        coeff = v @ h.T  # coeff[j, i] = v_j . h_i
        tilde = np.empty_like(v)
        for i in range(k):
            g = h[i] - coeff[i, i] * v[i]
            if i:
                g -= 2.0 * (coeff[:i, i] @ v[:i])
            tilde[i] = v[i] + params.tau * params.gamma * g
        frame_new = gram_schmidt(tilde)
    else:
        frame_new = state.frame

    n_new = state.n + 1
    return SdState(x=x_new, frame=frame_new, n=n_new,
                   l=dimer_schedule(params.schedule, params.tau, n_new))


def run_sd(force: ForceOracle, init: SdState, params: SdParams,
           region=None, record_trajectory: bool = False) -> SaddleRunResult:
    """Iterate sd_step until convergence, step budget, or region exit.

    Stopping cases, checked in order after each step:
      - region exit: the new iterate leaves the trust region. The returned
        state is the last in-region one (pre-exit frame included); the
        offending point is reported as ``exit_point``.
      - convergence: ||x_n - x_{n-1}||_inf <= tol_x.
      - step budget: params.max_steps steps taken.

    N_f is the oracle counter delta over the run. Raises Diverged (with the
    partial result attached) if the iterate's max-norm exceeds the bound.
    """
    count0 = force.query_counter
    state = init
    steps = 0
    trajectory = [init.x.copy()] if record_trajectory else None

    def result(status, exit_point=None):
        return SaddleRunResult(final=state, status=status, n_steps=steps,
                               N_f=force.query_counter - count0,
                               exit_point=exit_point, trajectory=trajectory)

    while steps < params.max_steps:
        new_state = sd_step(force, state, params)
        steps += 1
        if np.max(np.abs(new_state.x)) > params.divergence_bound:
            err = Diverged(f"|x| exceeded {params.divergence_bound:g} "
                           f"after {steps} steps")
            err.partial = result(RunStatus.DIVERGED, exit_point=new_state.x)
            raise err
        if region is not None and not region.contains(new_state.x):
            return result(RunStatus.REGION_EXIT, exit_point=new_state.x.copy())
        residual = float(np.max(np.abs(new_state.x - state.x)))
        state = new_state
        if record_trajectory:
            trajectory.append(state.x.copy())
        if residual <= params.tol_x:
            return result(RunStatus.CONVERGED)
    return result(RunStatus.MAX_STEPS)


def write_trajectory_csv(path, trajectory, params: SdParams, n_offset: int = 0):
    """Dump a recorded trajectory with per-step dimer length and step size."""
    trajectory = [np.asarray(x) for x in trajectory]
    dim = trajectory[0].size if trajectory else 0
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step"] + [f"x_{i}" for i in range(dim)]
                        + ["l", "residual_infnorm"])
        prev = None
        for i, x in enumerate(trajectory):
            n = n_offset + i
            res = float(np.max(np.abs(x - prev))) if prev is not None else 0.0
            writer.writerow([n] + [repr(float(c)) for c in x]
                            + [repr(dimer_schedule(params.schedule, params.tau, n)),
                               repr(res)])
            prev = x
