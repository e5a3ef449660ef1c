"""Uniform abstraction over the force F: R^N -> R^N.

Analytic, simulation-backed or surrogate forces all go through a
ForceOracle so that every query is counted exactly once. The two-point
(dimer) Hessian-vector estimate lives here as well.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np

from .errors import SimulationFailure

ORACLE_KINDS = ("analytic", "simulation", "surrogate")


class ForceOracle:
    """Counted, deterministic access to a force field.

    The query counter increases by exactly one per evaluate call, never by
    dimension. Counter updates are lock-protected so composite routines may
    evaluate concurrently when ``reentrant`` is True.
    """

    def __init__(self, fn, dim: int, kind: str = "analytic", reentrant: bool = True,
                 name: str = "", batch_fn=None):
        if kind not in ORACLE_KINDS:
            raise ValueError(f"unknown oracle kind {kind!r}")
        self._fn = fn
        self._batch_fn = batch_fn
        self.dim = int(dim)
        self.kind = kind
        self.reentrant = bool(reentrant) and kind != "simulation"
        self.name = name or kind
        self._count = 0
        self._lock = threading.Lock()

    @property
    def query_counter(self) -> int:
        return self._count

    def evaluate(self, x) -> np.ndarray:
        """Return F(x) and increment the query counter by one."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"expected shape ({self.dim},), got {x.shape}")
        if not np.all(np.isfinite(x)):
            raise ValueError("evaluation point contains non-finite entries")
        with self._lock:
            self._count += 1
        out = np.asarray(self._fn(x), dtype=float)
        if self.kind == "simulation" and not np.all(np.isfinite(out)):
            raise SimulationFailure(f"{self.name}: simulation diverged (NaN/Inf force)")
        return out

    def peek(self, x) -> np.ndarray:
        """Uncounted evaluation, for diagnostics only (e.g. final residuals)."""
        return np.asarray(self._fn(np.asarray(x, dtype=float)), dtype=float)

    def __repr__(self):
        return (f"ForceOracle(name={self.name!r}, dim={self.dim}, kind={self.kind!r}, "
                f"queries={self._count})")


@dataclass(frozen=True)
class DimerEval:
    """Two-point Hessian-vector estimate along a unit direction."""

    hv: np.ndarray
    dimer_length: float


def evaluate_counted(oracle: ForceOracle, x) -> np.ndarray:
    """F(x) through the counter; one query."""
    return oracle.evaluate(x)


def dimer_hv(oracle: ForceOracle, x, v, l: float) -> DimerEval:
    """Estimate H(x) v from two force queries separated by 2l along v.

    hv = (F(x + l v) - F(x - l v)) / (2 l); exact for linear forces,
    O(l^2) bias otherwise. Consumes exactly 2 queries.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    if l <= 0:
        raise ValueError("dimer half-length l must be positive")
    if abs(np.linalg.norm(v) - 1.0) > 1e-10:
        raise ValueError("direction v must have unit norm")
    fp = oracle.evaluate(x + l * v)
    fm = oracle.evaluate(x - l * v)
    hv = (fp - fm) / (2.0 * l)
    if not np.all(np.isfinite(hv)):
        raise SimulationFailure("dimer evaluation produced non-finite values")
    return DimerEval(hv=hv, dimer_length=l)
