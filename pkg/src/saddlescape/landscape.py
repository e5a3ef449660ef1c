"""Downward-search construction of solution landscapes.

From a parent saddle, child searches are spawned along the parent's
unstable directions at a reduced target index, verified against the true
force, deduplicated, and linked into a directed graph whose ranks are
Morse indices (highest on top).
"""

from __future__ import annotations

import concurrent.futures
import json
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Tuple

import numpy as np

from .dynamics import RunStatus, SdParams, SdState, run_sd
from .errors import Diverged, FitFailure, SaddleSearchError
from .forces import ForceOracle
from .learner import GpsdParams, TrustRegion, run_gpsd
from .linalg import (DirectionFrame, default_zero_tol, fd_jacobian_sym,
                     morse_index, sym_eigen)


@dataclass
class SaddleRecord:
    """A verified stationary point with its spectral data and run metadata."""

    x: np.ndarray
    index: int
    degenerate: int
    eigenvalues: np.ndarray
    frame: DirectionFrame  # unstable directions, most unstable first
    N_f: int = 0
    residual_infnorm: float = 0.0
    metadata: dict = field(default_factory=dict)


def classify_stationary_point(x, jacobian_fn, force_value=None,
                              zero_tol: Optional[float] = None) -> SaddleRecord:
    """Build a SaddleRecord from the force Jacobian at x.

    ``jacobian_fn(x)`` must return the (symmetrized) Jacobian of the force;
    unstable directions are its positive-eigenvalue eigenvectors.
    """
    x = np.asarray(x, dtype=float)
    eig = sym_eigen(jacobian_fn(x))
    tol = zero_tol if zero_tol is not None else default_zero_tol(eig)
    index, degenerate = morse_index(eig, tol)
    if index:
        vectors = eig.eigenvectors[:, -index:][:, ::-1].T.copy()
        for row in vectors:
            nz = np.flatnonzero(np.abs(row) > 1e-12)
            if nz.size and row[nz[0]] < 0:
                row *= -1.0
        frame = DirectionFrame(vectors)
    else:
        frame = DirectionFrame.empty(x.size)
    residual = float(np.max(np.abs(force_value))) if force_value is not None else 0.0
    return SaddleRecord(x=x, index=index, degenerate=degenerate,
                        eigenvalues=eig.eigenvalues, frame=frame,
                        residual_infnorm=residual)


@dataclass
class SaddleNode:
    id: int
    record: SaddleRecord
    parent_edges: List[Tuple[int, int, int]] = field(default_factory=list)

    @property
    def index(self) -> int:
        return self.record.index


class LandscapeGraph:
    """Nodes keyed by insertion order; edges live on each node."""

    def __init__(self, dedup_tol: float = 1e-3):
        self.nodes: List[SaddleNode] = []
        self.dedup_tol = dedup_tol
        self.failed_probes: List[dict] = []

    def register_node(self, record: SaddleRecord,
                      dedup_tol: Optional[float] = None) -> Tuple[int, bool]:
        """Insert or merge a record; equal-index nodes within tolerance merge."""
        tol = self.dedup_tol if dedup_tol is None else dedup_tol
        for node in self.nodes:
            if node.record.index == record.index and \
                    np.max(np.abs(node.record.x - record.x)) <= tol:
                return node.id, False
        node = SaddleNode(id=len(self.nodes), record=record)
        self.nodes.append(node)
        return node.id, True

    def add_edge(self, parent_id: int, child_id: int, direction: int, sign: int):
        self.nodes[child_id].parent_edges.append((parent_id, direction, sign))

    def edges(self):
        for node in self.nodes:
            for parent_id, direction, sign in node.parent_edges:
                yield parent_id, node.id, direction, sign

    # -- export ----------------------------------------------------------

    def to_json(self) -> str:
        doc = {
            "nodes": [{
                "id": n.id,
                "x": np.asarray(n.record.x).tolist(),
                "index": n.record.index,
                "degenerate": n.record.degenerate,
                "eigenvalues": np.asarray(n.record.eigenvalues).tolist(),
                "N_f": n.record.N_f,
                "residual_infnorm": n.record.residual_infnorm,
            } for n in self.nodes],
            "edges": [{"parent": p, "child": c, "direction": d, "sign": s}
                      for p, c, d, s in self.edges()],
            "failed_probes": self.failed_probes,
        }
        return json.dumps(doc, indent=2)

    def to_dot(self) -> str:
        lines = ["digraph landscape {", "  rankdir=TB;"]
        by_index = {}
        for node in self.nodes:
            by_index.setdefault(node.record.index, []).append(node)
        for idx in sorted(by_index, reverse=True):
            names = " ".join(f"n{n.id};" for n in by_index[idx])
            lines.append(f"  {{ rank=same; {names} }}")
        for node in self.nodes:
            lines.append(f'  n{node.id} [label="idx={node.record.index}"];')
        for p, c, d, s in self.edges():
            sign = "+" if s > 0 else "-"
            lines.append(f'  n{p} -> n{c} [label="v{d}{sign}"];')
        lines.append("}")
        return "\n".join(lines)


def export_graph(graph: LandscapeGraph, fmt: str) -> str:
    """Render the graph as a JSON document or a DOT digraph."""
    fmt = fmt.upper()
    if fmt == "JSON":
        return graph.to_json()
    if fmt == "DOT":
        return graph.to_dot()
    raise ValueError(f"unknown export format {fmt!r}")


@dataclass
class LandscapeConfig:
    """Everything downward probes need, for either search engine.

    ``oracle_factory`` must return a fresh counted oracle per call so probe
    runs may execute in parallel; ``jacobian_fn`` provides the verification
    Jacobian (analytic where available, else finite differences on an
    uncounted oracle).
    """

    sd: SdParams
    oracle_factory: Callable[[], ForceOracle]
    engine: str = "sd"  # "sd" | "gpsd"
    jacobian_fn: Optional[Callable] = None
    perturb_eps: float = 0.1
    dedup_tol: float = 1e-3
    residual_bound: float = 1e-6
    seed: int = 0
    max_nodes: int = 64
    exhaustive: bool = False
    jobs: int = 1
    # gpsd-only settings
    gpsd_delta: float = 0.1
    gpsd_n_sam: int = 60
    gpsd_n_new: int = 60
    gpsd_tol_l: float = 0.05
    gpsd_tol_u: float = 0.15
    gpsd_sampler: Optional[Callable] = None

    def __post_init__(self):
        if self.engine not in ("sd", "gpsd"):
            raise ValueError(f"unknown engine {self.engine!r}")
        if self.jacobian_fn is None:
            factory = self.oracle_factory

            def fd_jac(x, _factory=factory):
                probe = _factory()
                return fd_jacobian_sym(probe, x, step=1e-5)

            self.jacobian_fn = fd_jac


def _run_probe(config: LandscapeConfig, parent: SaddleRecord, target: int,
               direction: int, sign: int, seed: int):
    """One child search; returns a SaddleRecord or a failure reason string."""
    x0 = parent.x + sign * config.perturb_eps * parent.frame.vectors[direction]
    frame0 = parent.frame.take(target) if target else DirectionFrame.empty(x0.size)
    sd_params = replace(config.sd, k=target)
    oracle = config.oracle_factory()
    state = SdState.initial(x0, frame0, sd_params)
    try:
        if config.engine == "sd":
            result = run_sd(oracle, state, sd_params)
        else:
            params = GpsdParams(
                sd=sd_params,
                initial_region=TrustRegion(center=x0, half_width=config.gpsd_delta),
                n_sam=config.gpsd_n_sam, n_new=config.gpsd_n_new,
                tol_l=config.gpsd_tol_l, tol_u=config.gpsd_tol_u, seed=seed)
            result = run_gpsd(oracle, state, params, sampler=config.gpsd_sampler)
    except (Diverged, FitFailure) as exc:
        return f"{type(exc).__name__}: {exc}"
    if result.status is not RunStatus.CONVERGED:
        return f"status={result.status.value}"
    x_final = result.final.x
    residual = float(np.max(np.abs(config.oracle_factory().peek(x_final))))
    if residual > config.residual_bound:
        return f"residual {residual:.3e} above bound {config.residual_bound:g}"
    record = classify_stationary_point(x_final, config.jacobian_fn)
    record.residual_infnorm = residual
    record.N_f = result.N_f
    if record.index >= parent.index:
        return f"index {record.index} not below parent {parent.index}"
    return record


def downward_search(parent: SaddleNode, target_index: int,
                    config: LandscapeConfig,
                    graph: Optional[LandscapeGraph] = None,
                    seed_offset: int = 0) -> List[SaddleNode]:
    """Probe below one parent at one target index; returns the child nodes.

    For each unstable direction past the target and each sign, a child run
    starts from the perturbed parent with the first ``target_index`` parent
    directions as its initial frame. Diverged or non-converged probes are
    recorded on the graph as failed probes, not nodes.
    """
    if not 0 <= target_index < parent.index:
        raise ValueError("target index must satisfy 0 <= m < parent index")
    graph = graph if graph is not None else LandscapeGraph(config.dedup_tol)
    probes = [(target_index, i, s)
              for i in range(target_index, parent.index) for s in (1, -1)]
    seeds = [config.seed + 7919 * (seed_offset + j + 1) for j in range(len(probes))]

    def run(job):
        (m, i, s), seed = job
        return _run_probe(config, parent.record, m, i, s, seed)

    if config.jobs > 1:
        with concurrent.futures.ThreadPoolExecutor(config.jobs) as pool:
            outcomes = list(pool.map(run, zip(probes, seeds)))
    else:
        outcomes = [run(job) for job in zip(probes, seeds)]

    children = []
    for (m, i, s), outcome in zip(probes, outcomes):
        if isinstance(outcome, str):
            graph.failed_probes.append(
                {"parent": parent.id, "target": m, "direction": i, "sign": s,
                 "reason": outcome})
            continue
        child_id, is_new = graph.register_node(outcome, config.dedup_tol)
        graph.add_edge(parent.id, child_id, i, s)
        if is_new:
            children.append(graph.nodes[child_id])
    return children


def build_landscape(root: SaddleRecord, config: LandscapeConfig) -> LandscapeGraph:
    """Breadth-first downward construction from a verified parent saddle.

    Default schedule probes target index k-1 from each index-k node and
    recurses on newly found saddles; ``exhaustive`` probes every target
    m < k instead.
    """
    graph = LandscapeGraph(config.dedup_tol)
    root_id, _ = graph.register_node(root)
    queue = [root_id]
    probe_batch = 0
    while queue and len(graph.nodes) < config.max_nodes:
        node = graph.nodes[queue.pop(0)]
        k = node.record.index
        if k == 0:
            continue
        targets = range(k - 1, -1, -1) if config.exhaustive else [k - 1]
        for m in targets:
            fresh = downward_search(node, m, config, graph=graph,
                                    seed_offset=probe_batch * 1000)
            probe_batch += 1
            queue.extend(n.id for n in fresh)
    return graph
