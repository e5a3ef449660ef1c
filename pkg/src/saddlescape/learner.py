"""Sequential surrogate learning around the latent search trajectory.

The search is split into hypercube trust-region subproblems: sample the
true force inside the current region, fit the surrogate, run the saddle
dynamics on the surrogate until it leaves the region, then judge the
surrogate's reliability at the exit point and enlarge/keep/shrink the
region before resampling. Only the sampling steps query the true force,
so the query count is exactly N_sam + (number of updates) * N_new.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .dynamics import RunStatus, SaddleRunResult, SdParams, SdState, run_sd
from .errors import Diverged, FitFailure
from .forces import ForceOracle
from .gp import FitConfig, TrainingSet, fit, uncertainty_radius, update_data

ACTIONS = ("enlarge", "shrink", "keep")


@dataclass(frozen=True)
class TrustRegion:
    """Hypercube {x : ||x - center||_inf <= half_width}."""

    center: np.ndarray
    half_width: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        if self.half_width <= 0:
            raise ValueError("half_width must be positive")

    def contains(self, x) -> bool:
        return bool(np.max(np.abs(np.asarray(x) - self.center)) <= self.half_width)

    def clip(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.clip(x, self.center - self.half_width, self.center + self.half_width)


@dataclass
class GpsdParams:
    """Everything the sequential learner needs beyond the stepper itself."""

    sd: SdParams
    initial_region: TrustRegion
    n_sam: int = 100
    n_new: int = 100
    tol_l: float = 0.05
    tol_u: float = 0.15
    seed: int = 0
    delta_min: float = 1e-4
    delta_max: Optional[float] = None  # defaults to 10x the initial half-width
    max_shrink_streak: int = 8
    fit_restarts: int = 4
    fit_max_iter: int = 60
    refit_max_iter: int = 30

    def __post_init__(self):
        if not 0 < self.tol_l < self.tol_u:
            raise ValueError("need 0 < tol_l < tol_u")
        if min(self.n_sam, self.n_new) < 2:
            raise ValueError("n_sam and n_new must be at least 2")
        if self.delta_max is None:
            self.delta_max = 10.0 * self.initial_region.half_width
        if self.delta_min > self.initial_region.half_width:
            raise ValueError("delta_min exceeds the initial half-width")


def lhs_sample(region: TrustRegion, m: int, rng: np.random.Generator) -> np.ndarray:
    """m Latin-hypercube points in the region.

    Per coordinate the m points occupy m distinct equal-width strata, one
    point per stratum, uniformly jittered inside it; the stratum-to-point
    assignment is an independent uniform permutation per coordinate.
    """
    if m < 1:
        raise ValueError("m must be positive")
    dim = region.center.size
    u = np.empty((m, dim))
    for d in range(dim):
        strata = rng.permutation(m)
        u[:, d] = (strata + rng.uniform(size=m)) / m
    lo = region.center - region.half_width
    return lo[None, :] + 2.0 * region.half_width * u


def trust_region_update(r: float, params: GpsdParams, region: TrustRegion,
                        exit_point) -> tuple[TrustRegion, str]:
    """Reliability-driven region move.

    r < tol_l: recenter on the exit point and double the width (capped);
    r > tol_u: keep the center, halve the width (floored);
    otherwise: recenter and keep the width.
    """
    exit_point = np.asarray(exit_point, dtype=float)
    if r < params.tol_l:
        width = min(2.0 * region.half_width, params.delta_max)
        return TrustRegion(exit_point.copy(), width), "enlarge"
    if r > params.tol_u:
        width = max(region.half_width / 2.0, params.delta_min)
        return TrustRegion(region.center.copy(), width), "shrink"
    return TrustRegion(exit_point.copy(), region.half_width), "keep"


def _restart_point(result: SaddleRunResult, new_region: TrustRegion) -> np.ndarray:
    """Latest trajectory point inside the shrunk region; clip as last resort."""
    if result.trajectory:
        for x in reversed(result.trajectory):
            if new_region.contains(x):
                return np.asarray(x, dtype=float).copy()
    return new_region.clip(result.final.x)


def _evaluate_batch(oracle: ForceOracle, points: np.ndarray) -> TrainingSet:
    values = np.array([oracle.evaluate(p) for p in points])
    return TrainingSet(points, values)


def _non_duplicate_mask(points: np.ndarray, existing: np.ndarray) -> np.ndarray:
    """Mask of `points` rows farther than 1e-12 (max-norm) from all `existing`."""
    if existing.shape[0] == 0 or points.shape[0] == 0:
        return np.ones(points.shape[0], dtype=bool)
    from scipy.spatial.distance import cdist

    gaps = cdist(points, existing, "chebyshev")
    return gaps.min(axis=1) > 1e-12


def run_gpsd(true_force: ForceOracle, init: SdState, params: GpsdParams,
             sampler: Optional[Callable] = None,
             on_subproblem: Optional[Callable] = None) -> SaddleRunResult:
    """Model-free saddle search: surrogate dynamics inside moving trust regions.

    ``sampler(region, m, rng) -> (m, N) points`` defaults to lhs_sample;
    benchmark-specific smooth samplers can be plugged in. ``on_subproblem``
    receives one record dict per finished subproblem (also collected on the
    returned result as ``subproblems``).

    The returned N_f is the true-force counter delta, which by construction
    equals n_sam + (updates) * n_new. FitFailure and Diverged propagate with
    the partial result attached.
    """
    if not params.initial_region.contains(init.x):
        raise ValueError("initial state lies outside the initial trust region")
    sampler = sampler if sampler is not None else lhs_sample
    rng = np.random.default_rng(params.seed)
    seed_seq = np.random.SeedSequence(params.seed)
    count0 = true_force.query_counter

    region = params.initial_region
    points = sampler(region, params.n_sam, rng)
    data = _evaluate_batch(true_force, points)
    records = []

    def partial_result(state, status, steps):
        res = SaddleRunResult(final=state, status=status, n_steps=steps,
                              N_f=true_force.query_counter - count0)
        res.subproblems = records
        return res

    def fit_seed():
        return int(seed_seq.spawn(1)[0].generate_state(1)[0])

    try:
        model = fit(data, FitConfig(n_restarts=params.fit_restarts,
                                    max_iter=params.fit_max_iter,
                                    seed=fit_seed(), region=region))
    except FitFailure as exc:
        exc.partial = partial_result(init, RunStatus.MAX_STEPS, 0)
        raise

    state = init
    steps_total = 0
    shrink_streak = 0
    subproblem = 0
    while True:
        budget = params.sd.max_steps - steps_total
        if budget <= 0:
            return partial_result(state, RunStatus.MAX_STEPS, steps_total)
        oracle = model.as_oracle()
        sd_params = replace(params.sd, max_steps=budget)
        try:
            result = run_sd(oracle, state, sd_params, region=region,
                            record_trajectory=True)
        except Diverged as exc:
            exc.partial = partial_result(exc.partial.final if exc.partial else state,
                                         RunStatus.DIVERGED,
                                         steps_total + (exc.partial.n_steps if exc.partial else 0))
            raise
        steps_total += result.n_steps

        record = {
            "subproblem_index": subproblem,
            "region_center": np.asarray(region.center).tolist(),
            "delta": region.half_width,
            "action": None,
            "r": None,
            "n_steps": result.n_steps,
            "N_f_cumulative": true_force.query_counter - count0,
        }

        if result.status is not RunStatus.REGION_EXIT:
            records.append(record)
            if on_subproblem:
                on_subproblem(record)
            final = partial_result(result.final, result.status, steps_total)
            return final

        r = uncertainty_radius(model, result.exit_point)
        new_region, action = trust_region_update(r, params, region, result.exit_point)
        record["action"] = action
        record["r"] = r

        shrink_streak = shrink_streak + 1 if action == "shrink" else 0
        if shrink_streak > params.max_shrink_streak:
            records.append(record)
            if on_subproblem:
                on_subproblem(record)
            return partial_result(result.final, RunStatus.MAX_STEPS, steps_total)

        if action == "shrink":
            restart_x = _restart_point(result, new_region)
        else:
            restart_x = np.asarray(result.exit_point, dtype=float).copy()
        state = SdState(x=restart_x, frame=result.final.frame,
                        n=result.final.n, l=result.final.l)

        new_points = sampler(new_region, params.n_new, rng)
        fresh = _evaluate_batch(true_force, new_points)
        record["N_f_cumulative"] = true_force.query_counter - count0
        records.append(record)
        if on_subproblem:
            on_subproblem(record)

        keep = np.fromiter((new_region.contains(x) for x in data.X), dtype=bool,
                           count=data.m)
        fresh_mask = _non_duplicate_mask(fresh.X, data.X[keep])
        if not fresh_mask.all():
            fresh = fresh.filter(fresh_mask)
        try:
            model = update_data(
                model, fresh, lambda x: new_region.contains(x),
                region=new_region,
                config=FitConfig(n_restarts=0, max_iter=params.refit_max_iter,
                                 seed=fit_seed(), region=new_region))
        except FitFailure as exc:
            exc.partial = partial_result(state, RunStatus.MAX_STEPS, steps_total)
            raise
        data = model.data
        region = new_region
        subproblem += 1


def write_subproblem_log(path, records):
    """One JSON record per subproblem, newline-delimited."""
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")
