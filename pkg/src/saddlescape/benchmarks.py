"""Built-in test systems exposed as counted force oracles.

Three families: a four-dimensional Rosenbrock-type energy (analytic),
a plant/control codesign objective whose force requires simulating a
small ODE system (simulation-backed), and a one-dimensional nonlocal
phase-field model built on a fractional Laplacian (analytic on a grid).
"""

from __future__ import annotations

import math
import threading
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateSpectrum
from .forces import ForceOracle
from .linalg import DirectionFrame, EigenDecomposition, sym_eigen, symmetrize

# ----------------------------------------------------------------------
# Rosenbrock-type energy in R^4


@dataclass(frozen=True)
class RosenbrockParams:
    a: float
    b: float
    c: float
    d: float


#: Coefficient sets under which (1,1,1,1) is a saddle of index 1..4.
ROSENBROCK_CASES = {
    "i": RosenbrockParams(-0.5, 0.5, 0.5, 2.0),
    "ii": RosenbrockParams(-0.5, 0.5, -0.5, 2.0),
    "iii": RosenbrockParams(-0.5, -0.5, -0.5, 2.0),
    "iv": RosenbrockParams(-0.5, -0.5, -0.5, -2.0),
}

ROSENBROCK_X0 = np.array([0.7, 0.8, 1.2, 0.7])


def rosenbrock_force(x, p: RosenbrockParams):
    """Energy and analytic force F = -grad E of the chained quartic energy.

    E = a(x4-x3^2)^2 + b(x3-x2^2)^2 + c(x2-x1^2)^2 + d(1-x1)^2.

    Returns (F, E).
    """
    x1, x2, x3, x4 = np.asarray(x, dtype=float)
    t3 = x4 - x3 * x3
    t2 = x3 - x2 * x2
    t1 = x2 - x1 * x1
    t0 = 1.0 - x1
    e = p.a * t3 * t3 + p.b * t2 * t2 + p.c * t1 * t1 + p.d * t0 * t0
    g1 = -4.0 * p.c * x1 * t1 - 2.0 * p.d * t0
    g2 = 2.0 * p.c * t1 - 4.0 * p.b * x2 * t2
    g3 = 2.0 * p.b * t2 - 4.0 * p.a * x3 * t3
    g4 = 2.0 * p.a * t3
    return -np.array([g1, g2, g3, g4]), float(e)


def rosenbrock_energy(x, p: RosenbrockParams) -> float:
    return rosenbrock_force(x, p)[1]


def rosenbrock_oracle(p: RosenbrockParams) -> ForceOracle:
    return ForceOracle(lambda x: rosenbrock_force(x, p)[0], dim=4,
                       kind="analytic", name="rosenbrock")


# ----------------------------------------------------------------------
# Codesign problem: plant design variable a plus control u(t) on [0, 0.1]


@dataclass(frozen=True)
class PlantGrid:
    """Uniform time grid shared by the control and the simulated states."""

    t_end: float = 0.1
    mesh: float = 0.01

    @property
    def n_nodes(self) -> int:
        return round(self.t_end / self.mesh) + 1

    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.t_end, self.n_nodes)


CODESIGN_GRID = PlantGrid()
CODESIGN_DIM = 1 + CODESIGN_GRID.n_nodes

#: Starting points used in the codesign experiments (constant vectors).
CODESIGN_CASES = {"i": 0.2, "ii": 0.1, "iii": 0.05}


def simulate_plant(a: float, u, grid: PlantGrid = CODESIGN_GRID):
    """Forward-Euler trajectory of the plant states (eta, xi) on the grid.

    d(eta)/dt = -a*eta + xi^2,  d(xi)/dt = eta - 2a^2*xi - eta^2 + u,
    with eta(0) = xi(0) = 1. Returns the two grid functions.
    """
    u = np.asarray(u, dtype=float)
    n = grid.n_nodes
    if u.shape != (n,):
        raise ValueError(f"control must have {n} nodes, got {u.shape}")
    h = grid.mesh
    eta = np.empty(n)
    xi = np.empty(n)
    eta[0] = 1.0
    xi[0] = 1.0
    for j in range(n - 1):
        eta[j + 1] = eta[j] + h * (-a * eta[j] + xi[j] * xi[j])
        xi[j + 1] = xi[j] + h * (eta[j] - 2.0 * a * a * xi[j] - eta[j] * eta[j] + u[j])
    return eta, xi


class _CodesignForce:
    """Force for the codesign objective; every call simulates the plant once.

    The state packs (a, u(t_0), ..., u(t_10)). The force is
    [a, -xi(t)^2 u(t)] with xi from the Euler-discrete trajectory.
    """

    def __init__(self, grid: PlantGrid = CODESIGN_GRID):
        self.grid = grid
        self.n_simulations = 0
        self._lock = threading.Lock()

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        a, u = x[0], x[1:]
        with self._lock:
            self.n_simulations += 1
        _, xi = simulate_plant(a, u, self.grid)
        return np.concatenate(([a], -xi * xi * u))


def codesign_oracle(grid: PlantGrid = CODESIGN_GRID) -> ForceOracle:
    """Simulation-backed oracle; exposes ``n_simulations`` (the N_s counter)."""
    fn = _CodesignForce(grid)
    oracle = ForceOracle(fn, dim=1 + grid.n_nodes, kind="simulation",
                         reentrant=False, name="codesign")
    oracle.simulation_source = fn
    return oracle


def codesign_force(x, grid: PlantGrid = CODESIGN_GRID) -> np.ndarray:
    """Uncounted convenience wrapper around the codesign force."""
    return _CodesignForce(grid)(x)


# ----------------------------------------------------------------------
# Nonlocal phase-field model on (-1, 1) with zero exterior condition


@dataclass(frozen=True)
class PhaseFieldConfig:
    alpha: float = 1.5
    h: float = 2.0 ** -5
    kappa: float = 0.02
    inv_eta_sq: float = 30.0

    def __post_init__(self):
        if not 0.0 < self.alpha < 2.0:
            raise ValueError("alpha must lie in (0, 2)")

    @property
    def n_interior(self) -> int:
        return round(2.0 / self.h) - 1

    def grid(self) -> np.ndarray:
        """Interior nodes of (-1, 1), symmetric about 0."""
        n = self.n_interior
        return -1.0 + self.h * np.arange(1, n + 1)


def frac_weights(alpha: float, count: int) -> np.ndarray:
    """Fractional centered-difference weights w_0 .. w_{count-1}.

    w_j = (-1)^j Gamma(alpha+1) / (Gamma(alpha/2 - j + 1) Gamma(alpha/2 + j + 1)),
    computed by the stable ratio recurrence
    w_{j+1} = w_j (j - alpha/2) / (j + 1 + alpha/2).
    """
    w = np.empty(count)
    w[0] = math.gamma(alpha + 1.0) / math.gamma(alpha / 2.0 + 1.0) ** 2
    for j in range(count - 1):
        w[j + 1] = w[j] * (j - alpha / 2.0) / (j + 1.0 + alpha / 2.0)
    return w


def frac_laplacian_matrix(cfg: PhaseFieldConfig) -> np.ndarray:
    """Dense symmetric Toeplitz discretization of the fractional Laplacian.

    A[i, j] = h^{-alpha} w_{|i-j|} on the interior nodes; the zero exterior
    condition is absorbed by truncation.
    """
    n = cfg.n_interior
    w = frac_weights(cfg.alpha, n)
    idx = np.abs(np.arange(n)[:, None] - np.arange(n)[None, :])
    return cfg.h ** (-cfg.alpha) * w[idx]


def phasefield_force(u, cfg: PhaseFieldConfig, a_matrix: np.ndarray) -> np.ndarray:
    """F(u) = -kappa (A u + (1/eta^2) (u-1)(u-1/2)u), elementwise cubic."""
    u = np.asarray(u, dtype=float)
    cubic = (u - 1.0) * (u - 0.5) * u
    return -cfg.kappa * (a_matrix @ u + cfg.inv_eta_sq * cubic)


def phasefield_jacobian(u, cfg: PhaseFieldConfig, a_matrix: np.ndarray) -> np.ndarray:
    """Analytic Jacobian -kappa (A + (1/eta^2) diag(3u^2 - 3u + 1/2))."""
    u = np.asarray(u, dtype=float)
    diag = cfg.inv_eta_sq * (3.0 * u * u - 3.0 * u + 0.5)
    return symmetrize(-cfg.kappa * (a_matrix + np.diag(diag)))


def phasefield_oracle(cfg: PhaseFieldConfig, a_matrix=None) -> ForceOracle:
    a = frac_laplacian_matrix(cfg) if a_matrix is None else a_matrix
    return ForceOracle(lambda u: phasefield_force(u, cfg, a), dim=cfg.n_interior,
                       kind="analytic", name="phasefield")


def phasefield_initial_state(cfg: PhaseFieldConfig) -> np.ndarray:
    """The bump profile 0.5 (1 - x^2) on the interior nodes."""
    x = cfg.grid()
    return 0.5 * (1.0 - x * x)


def smooth_mode_basis(cfg: PhaseFieldConfig, n_modes: int = 6) -> np.ndarray:
    """Rows are sin(q pi (x+1)/2), q = 1..n_modes, on the interior nodes."""
    x = cfg.grid()
    q = np.arange(1, n_modes + 1)[:, None]
    return np.sin(q * np.pi * (x[None, :] + 1.0) / 2.0)


def smooth_curve_sampler(cfg: PhaseFieldConfig, n_modes: int = 6):
    """Trust-region sampler producing smooth perturbations of the center.

    Mode coefficients are Latin-hypercube stratified and scaled so the
    perturbation's max-norm stays within the region half-width; samples are
    clipped to the region as a final safeguard.
    """
    basis = smooth_mode_basis(cfg, n_modes)

    def sample(region, m: int, rng: np.random.Generator) -> np.ndarray:
        from .learner import lhs_sample, TrustRegion

        coeff_region = TrustRegion(center=np.zeros(n_modes),
                                   half_width=region.half_width / n_modes)
        coeffs = lhs_sample(coeff_region, m, rng)
        perturb = coeffs @ basis
        points = region.center[None, :] + perturb
        lo = region.center - region.half_width
        hi = region.center + region.half_width
        return np.clip(points, lo[None, :], hi[None, :])

    return sample


# ----------------------------------------------------------------------
# Initial unstable directions


def init_directions(jacobian, k: int) -> DirectionFrame:
    """Orthonormal eigenvectors of the k largest eigenvalues of H = grad F.

    Ordered by descending eigenvalue (most unstable first) with signs fixed
    so the first component above 1e-12 in magnitude is positive.

    Warns with DegenerateSpectrum when the spectral gap at the cut is below
    1e-10; the frame is still returned.
    """
    eig = jacobian if isinstance(jacobian, EigenDecomposition) else sym_eigen(jacobian)
    lam = eig.eigenvalues
    n = lam.size
    if not 1 <= k <= n:
        raise ValueError(f"k={k} out of range for dimension {n}")
    if k < n and abs(lam[n - k] - lam[n - k - 1]) < 1e-10:
        warnings.warn(
            f"eigenvalue gap at cut k={k} is below 1e-10; direction frame is "
            "not uniquely determined", DegenerateSpectrum, stacklevel=2)
    vectors = eig.eigenvectors[:, n - k:][:, ::-1].T.copy()
    for row in vectors:
        nz = np.flatnonzero(np.abs(row) > 1e-12)
        if nz.size and row[nz[0]] < 0:
            row *= -1.0
    return DirectionFrame(vectors)
