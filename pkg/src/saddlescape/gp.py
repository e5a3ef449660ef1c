"""Multi-output Gaussian-process regression of force observations.

Outputs are modeled as independent GPs sharing one squared-exponential
kernel (signal scale sigma_f, length scale sigma_l) with a separate
observation noise per output. Because the kernel matrix K(X, X) is shared,
one symmetric eigendecomposition factorizes every output block
K + sigma_{s,i}^2 I at once; hyperparameters and noises are inferred by
maximizing the marginal likelihood with analytic gradients.

Training inputs are affinely mapped onto [-1, 1]^N using a trust region's
center and half-width, and outputs are standardized per dimension, so a
fixed prior range for the hyperparameters stays meaningful while regions
shrink and grow. Predictions are always returned in original coordinates.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.spatial.distance import cdist

from .errors import FactorizationFailure, FitFailure
from .forces import ForceOracle

#: Optimization bounds in normalized coordinates.
SIGMA_F_BOUNDS = (1e-2, 1e2)
SIGMA_L_BOUNDS = (5e-2, 5.0)
NOISE_BOUNDS = (1e-6, 10.0)

#: Per-output noise floor, relative to that output's standard deviation.
NOISE_FLOOR = 1e-6

_DUPLICATE_TOL = 1e-12
_JITTER_START = 1e-10
_JITTER_MAX = 1e-4


@dataclass(frozen=True)
class Hyperparams:
    """Kernel scales; both strictly positive, optimized in log-space."""

    sigma_f: float
    sigma_l: float

    def __post_init__(self):
        if self.sigma_f <= 0 or self.sigma_l <= 0:
            raise ValueError("sigma_f and sigma_l must be positive")


@dataclass(frozen=True)
class NoiseModel:
    """Per-output observation noise standard deviations."""

    sigmas: np.ndarray

    def __post_init__(self):
        s = np.atleast_1d(np.asarray(self.sigmas, dtype=float))
        if np.any(s < 0):
            raise ValueError("noise standard deviations must be non-negative")
        object.__setattr__(self, "sigmas", s)


def se_kernel(x, x2, hyper: Hyperparams) -> float:
    """Squared-exponential covariance sigma_f^2 exp(-|x-x2|^2 / (2 sigma_l^2))."""
    x = np.asarray(x, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if x.shape != x2.shape:
        raise ValueError("kernel arguments must have matching shape")
    d2 = float(np.sum((x - x2) ** 2))
    return hyper.sigma_f ** 2 * math.exp(-d2 / (2.0 * hyper.sigma_l ** 2))


class TrainingSet:
    """Paired sample locations and force observations, duplicates rejected."""

    def __init__(self, locations, observations):
        x = np.atleast_2d(np.asarray(locations, dtype=float))
        y = np.atleast_2d(np.asarray(observations, dtype=float))
        if x.shape[0] != y.shape[0]:
            raise ValueError("locations and observations must pair up")
        if x.shape[0] and x.shape[1] != y.shape[1]:
            raise ValueError("locations and observations must share the dimension")
        if x.shape[0] > 1:
            gaps = cdist(x, x, "chebyshev")
            np.fill_diagonal(gaps, np.inf)
            if gaps.min() <= _DUPLICATE_TOL:
                i, j = np.unravel_index(np.argmin(gaps), gaps.shape)
                raise ValueError(f"duplicate training locations {i} and {j}")
        self.X = x
        self.Y = y

    @property
    def m(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def __len__(self):
        return self.m

    def filter(self, keep_mask) -> "TrainingSet":
        mask = np.asarray(keep_mask, dtype=bool)
        return TrainingSet(self.X[mask], self.Y[mask])

    def extend(self, other: "TrainingSet") -> "TrainingSet":
        return TrainingSet(np.vstack([self.X, other.X]),
                           np.vstack([self.Y, other.Y]))

    @staticmethod
    def empty(dim: int) -> "TrainingSet":
        return TrainingSet(np.zeros((0, dim)), np.zeros((0, dim)))


@dataclass(frozen=True)
class Normalization:
    """Affine input map onto [-1,1]^N plus per-output standardization."""

    center: np.ndarray
    halfwidth: float
    y_mean: np.ndarray
    y_std: np.ndarray

    @staticmethod
    def identity(dim: int) -> "Normalization":
        return Normalization(np.zeros(dim), 1.0, np.zeros(dim), np.ones(dim))

    @staticmethod
    def from_data(data: TrainingSet, region=None) -> "Normalization":
        if region is not None:
            center = np.asarray(region.center, dtype=float).copy()
            halfwidth = float(region.half_width)
        else:
            center = data.X.mean(axis=0)
            spread = np.ptp(data.X, axis=0) if data.m else np.zeros(data.dim)
            halfwidth = float(np.max(spread) / 2.0) if data.m else 1.0
            if halfwidth < 1e-12:
                halfwidth = 1.0
        y_mean = data.Y.mean(axis=0) if data.m else np.zeros(data.dim)
        y_std = data.Y.std(axis=0) if data.m else np.ones(data.dim)
        y_std = np.where(y_std > 1e-12, y_std, 1.0)
        return Normalization(center, halfwidth, y_mean, y_std)

    def norm_x(self, x):
        return (np.asarray(x, dtype=float) - self.center) / self.halfwidth

    def norm_y(self, y):
        return (np.asarray(y, dtype=float) - self.y_mean) / self.y_std


def _floored_noise(raw_sigmas, y_std) -> np.ndarray:
    """Normalized noises with the relative floor applied."""
    return np.maximum(np.asarray(raw_sigmas, dtype=float) / y_std, NOISE_FLOOR)


def _eigh_with_jitter(k_matrix):
    """Eigendecomposition of the kernel matrix under the jitter policy.

    Adds 1e-10 * mean(diag) on indefiniteness, escalating tenfold up to
    1e-4 * mean(diag). Returns (eigenvalues, eigenvectors) with the jitter
    already folded into the eigenvalues.
    """
    try:
        lam, q = np.linalg.eigh(k_matrix)
    except np.linalg.LinAlgError as exc:
        raise FactorizationFailure(f"eigendecomposition failed: {exc}") from exc
    scale = float(np.mean(np.diag(k_matrix))) if k_matrix.size else 1.0
    if lam.size and lam[0] <= -NOISE_FLOOR ** 2:
        jitter = _JITTER_START * scale
        while jitter <= _JITTER_MAX * scale:
            if lam[0] + jitter > -NOISE_FLOOR ** 2:
                return lam + jitter, q
            jitter *= 10.0
        raise FactorizationFailure(
            f"kernel matrix indefinite (min eigenvalue {lam[0]:.3e}) even at "
            f"maximum jitter")
    return lam, q


class _MarginalLikelihood:
    """Log-evidence of the independent-output GP and its analytic gradient.

    Parameter vector phi = [log sigma_f, log sigma_l, log sigma_{s,1..N}].
    One eigendecomposition of the shared kernel matrix serves every output
    block; the most recent factorization is cached so a line-search value
    evaluation is reused by the following gradient evaluation.
    """

    def __init__(self, x_points, y_points):
        self.X = np.asarray(x_points, dtype=float)
        self.Y = np.asarray(y_points, dtype=float)
        self.m, self.n_out = self.Y.shape
        self.S = cdist(self.X, self.X, "sqeuclidean")
        self._key = None
        self._state = None

    def _factor(self, phi):
        key = phi.tobytes()
        if key == self._key:
            return self._state
        sf2 = math.exp(2.0 * phi[0])
        sl2 = math.exp(2.0 * phi[1])
        sig2 = np.exp(2.0 * phi[2:])
        k_matrix = sf2 * np.exp(-self.S / (2.0 * sl2))
        lam, q = _eigh_with_jitter(k_matrix)
        d = lam[:, None] + sig2[None, :]
        if np.min(d) <= 0.0:
            raise FactorizationFailure("non-positive marginal variance")
        ytil = q.T @ self.Y
        g = ytil / d
        value = (-0.5 * float(np.sum(ytil * g))
                 - 0.5 * float(np.sum(np.log(d)))
                 - 0.5 * self.m * self.n_out * math.log(2.0 * math.pi))
        self._key = key
        self._state = dict(k=k_matrix, lam=lam, q=q, d=d, g=g, sig2=sig2,
                           sl2=sl2, value=value)
        return self._state

    def value(self, phi) -> float:
        try:
            return self._factor(phi)["value"]
        except FactorizationFailure:
            return -np.inf

    def value_and_grad(self, phi):
        st = self._factor(phi)
        lam, d, g, sig2 = st["lam"], st["d"], st["g"], st["sig2"]
        grad = np.empty(2 + self.n_out)
        grad[0] = float(np.sum(lam[:, None] * g * g) - np.sum(lam[:, None] / d))
        m_tilde = st["q"].T @ (st["k"] * (self.S / st["sl2"])) @ st["q"]
        quad = float(np.sum((m_tilde @ g) * g))
        trace = float(np.sum(np.diag(m_tilde)[:, None] / d))
        grad[1] = 0.5 * (quad - trace)
        grad[2:] = sig2 * ((g * g).sum(axis=0) - (1.0 / d).sum(axis=0))
        return st["value"], grad


def log_marginal_likelihood(data: TrainingSet, hyper: Hyperparams,
                            noise: NoiseModel):
    """Gaussian log-evidence of the data and its analytic gradient.

    The gradient is taken with respect to the log-parameters, ordered
    [log sigma_f, log sigma_l, log sigma_{s,1}, ..., log sigma_{s,N}].
    Noises below the floor are evaluated at the floor.

    Raises FactorizationFailure if the kernel matrix stays indefinite after
    maximum jitter escalation.
    """
    if data.m < 1:
        raise ValueError("marginal likelihood needs at least one observation")
    scale = data.Y.std(axis=0)
    scale = np.where(scale > 1e-12, scale, 1.0)
    sig = np.maximum(noise.sigmas, NOISE_FLOOR * scale)
    phi = np.concatenate(([math.log(hyper.sigma_f), math.log(hyper.sigma_l)],
                          np.log(sig)))
    problem = _MarginalLikelihood(data.X, data.Y)
    value, grad = problem.value_and_grad(phi)
    return value, grad


@dataclass
class FitConfig:
    """Settings for marginal-likelihood training."""

    min_points: int = 2
    n_restarts: int = 4
    max_iter: int = 200
    seed: int = 0
    region: object = None
    normalize: bool = True
    warm_start: Optional[np.ndarray] = None  # phi in the new normalized space

    def bounds(self, n_out: int):
        lo = np.concatenate(([math.log(SIGMA_F_BOUNDS[0]), math.log(SIGMA_L_BOUNDS[0])],
                             np.full(n_out, math.log(NOISE_BOUNDS[0]))))
        hi = np.concatenate(([math.log(SIGMA_F_BOUNDS[1]), math.log(SIGMA_L_BOUNDS[1])],
                             np.full(n_out, math.log(NOISE_BOUNDS[1]))))
        return lo, hi


def _ascend(problem: _MarginalLikelihood, phi0, lo, hi, max_iter: int):
    """Projected gradient ascent with a backtracking line search in log-space.

    Stops on the iteration budget, a failed line search, or when the summed
    gain over the last five accepted steps becomes negligible.
    """
    phi = np.clip(phi0, lo, hi)
    value = problem.value(phi)
    if not np.isfinite(value):
        return -np.inf, phi
    _, grad = problem.value_and_grad(phi)
    step = 0.25
    recent_gains = []
    for _ in range(max_iter):
        direction = grad / max(float(np.max(np.abs(grad))), 1e-300)
        accepted = None
        while step >= 1e-6:
            cand = np.clip(phi + step * direction, lo, hi)
            if np.array_equal(cand, phi):
                break
            cand_value = problem.value(cand)
            if cand_value > value:
                accepted = (cand, cand_value)
                break
            step *= 0.5
        if accepted is None:
            break
        recent_gains.append(accepted[1] - value)
        phi, value = accepted
        _, grad = problem.value_and_grad(phi)
        step = min(step * 1.5, 1.0)
        if len(recent_gains) >= 5:
            if sum(recent_gains[-5:]) < 1e-4 * (1.0 + abs(value)):
                break
    return value, phi


class GpSurrogate:
    """Immutable fitted surrogate; safe to share across threads.

    Hyperparameters and the cached factorization live in the normalized
    coordinates defined by ``transform``; predictions are de-normalized so
    callers only ever see original coordinates.
    """

    def __init__(self, data: TrainingSet, hyper: Hyperparams,
                 noise: Optional[NoiseModel] = None,
                 transform: Optional[Normalization] = None):
        dim = data.dim
        self.data = data
        self.hyper = hyper
        self.transform = transform if transform is not None else Normalization.identity(dim)
        raw = noise.sigmas if noise is not None else np.zeros(dim)
        if raw.shape != (dim,):
            raise ValueError("noise model dimension mismatch")
        self._sig_norm = _floored_noise(raw, self.transform.y_std)
        self.noise = NoiseModel(self._sig_norm * self.transform.y_std)
        self._build()

    def _build(self):
        t = self.transform
        if self.data.m == 0:
            self._z = np.zeros((0, self.data.dim))
            self._q = self._lam = self._d = self._coef = None
            return
        self._z = t.norm_x(self.data.X)
        yn = t.norm_y(self.data.Y)
        s = cdist(self._z, self._z, "sqeuclidean")
        k_matrix = self.hyper.sigma_f ** 2 * np.exp(-s / (2.0 * self.hyper.sigma_l ** 2))
        lam, q = _eigh_with_jitter(k_matrix)
        self._lam, self._q = lam, q
        self._d = lam[:, None] + self._sig_norm[None, :] ** 2
        self._coef = (q.T @ yn) / self._d

    @property
    def dim(self) -> int:
        return self.data.dim

    def predict(self, x):
        """Posterior mean and per-output variance at x, original coordinates."""
        t = self.transform
        sf2 = self.hyper.sigma_f ** 2
        if self.data.m == 0:
            mean_n = np.zeros(self.dim)
            var_n = np.full(self.dim, sf2)
        else:
            z = t.norm_x(x)
            d2 = np.sum((self._z - z[None, :]) ** 2, axis=1)
            kstar = sf2 * np.exp(-d2 / (2.0 * self.hyper.sigma_l ** 2))
            w = self._q.T @ kstar
            mean_n = w @ self._coef
            var_n = np.maximum(sf2 - (w * w) @ (1.0 / self._d), 0.0)
        mean = t.y_mean + t.y_std * mean_n
        var = t.y_std ** 2 * var_n
        return mean, var

    def predict_mean(self, x):
        return self.predict(x)[0]

    def uncertainty(self, x) -> float:
        return float(np.max(self.predict(x)[1]))

    def as_oracle(self) -> ForceOracle:
        return ForceOracle(self.predict_mean, dim=self.dim, kind="surrogate",
                           name="gp-surrogate")

    def phi(self) -> np.ndarray:
        """Current parameters as the log-vector used by the optimizer."""
        return np.concatenate(([math.log(self.hyper.sigma_f),
                                math.log(self.hyper.sigma_l)],
                               np.log(self._sig_norm)))

    # -- serialization ---------------------------------------------------

    def to_json(self) -> str:
        def hexlist(a):
            return [float(v).hex() for v in np.asarray(a, dtype=float).ravel()]

        t = self.transform
        doc = {
            "format": "gp-surrogate-v1",
            "dim": self.dim,
            "m": self.data.m,
            "locations": hexlist(self.data.X),
            "observations": hexlist(self.data.Y),
            "sigma_f": float(self.hyper.sigma_f).hex(),
            "sigma_l": float(self.hyper.sigma_l).hex(),
            "noise": hexlist(self.noise.sigmas),
            "transform": {
                "center": hexlist(t.center),
                "halfwidth": float(t.halfwidth).hex(),
                "y_mean": hexlist(t.y_mean),
                "y_std": hexlist(t.y_std),
            },
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "GpSurrogate":
        doc = json.loads(text)
        if doc.get("format") != "gp-surrogate-v1":
            raise ValueError("unrecognized surrogate document")
        dim, m = doc["dim"], doc["m"]

        def arr(values, shape):
            return np.array([float.fromhex(v) for v in values]).reshape(shape)

        data = TrainingSet(arr(doc["locations"], (m, dim)),
                           arr(doc["observations"], (m, dim)))
        hyper = Hyperparams(float.fromhex(doc["sigma_f"]),
                            float.fromhex(doc["sigma_l"]))
        noise = NoiseModel(arr(doc["noise"], (dim,)))
        tdoc = doc["transform"]
        transform = Normalization(arr(tdoc["center"], (dim,)),
                                  float.fromhex(tdoc["halfwidth"]),
                                  arr(tdoc["y_mean"], (dim,)),
                                  arr(tdoc["y_std"], (dim,)))
        return cls(data, hyper, noise, transform)

    @staticmethod
    def prior(dim: int, hyper: Hyperparams,
              transform: Optional[Normalization] = None) -> "GpSurrogate":
        """Data-free surrogate: prior mean 0 and variance sigma_f^2 per output."""
        return GpSurrogate(TrainingSet.empty(dim), hyper, transform=transform)


def fit(data: TrainingSet, config: Optional[FitConfig] = None) -> GpSurrogate:
    """Train a surrogate by multi-start gradient ascent on the log-evidence.

    The best of the default (or warm) start plus ``n_restarts`` log-uniform
    draws wins. Raises FitFailure when no start reaches a finite likelihood.
    """
    config = config if config is not None else FitConfig()
    if data.m < config.min_points:
        raise ValueError(f"need at least {config.min_points} points, got {data.m}")
    transform = (Normalization.from_data(data, config.region)
                 if config.normalize else Normalization.identity(data.dim))
    z = transform.norm_x(data.X)
    yn = transform.norm_y(data.Y)
    problem = _MarginalLikelihood(z, yn)
    lo, hi = config.bounds(data.dim)

    starts = []
    if config.warm_start is not None:
        starts.append(np.asarray(config.warm_start, dtype=float))
    else:
        starts.append(np.concatenate(([0.0, 0.0], np.full(data.dim, math.log(1e-2)))))
    rng = np.random.default_rng(config.seed)
    for _ in range(config.n_restarts):
        draw = np.concatenate((
            [rng.uniform(math.log(SIGMA_F_BOUNDS[0]), math.log(SIGMA_F_BOUNDS[1])),
             rng.uniform(math.log(SIGMA_L_BOUNDS[0]), math.log(SIGMA_L_BOUNDS[1]))],
            rng.uniform(math.log(NOISE_BOUNDS[0]), math.log(0.5), size=data.dim)))
        starts.append(draw)

    # explore every start briefly, then spend the remaining budget on the
    # champion only
    explore = min(25, config.max_iter)
    best_value, best_phi = -np.inf, None
    for phi0 in starts:
        value, phi = _ascend(problem, phi0, lo, hi, explore)
        if value > best_value:
            best_value, best_phi = value, phi
    if best_phi is None or not np.isfinite(best_value):
        raise FitFailure("no start produced a finite marginal likelihood")
    if config.max_iter > explore:
        best_value, best_phi = _ascend(problem, best_phi, lo, hi,
                                       config.max_iter - explore)

    hyper = Hyperparams(math.exp(best_phi[0]), math.exp(best_phi[1]))
    noise = NoiseModel(np.exp(best_phi[2:]) * transform.y_std)
    return GpSurrogate(data, hyper, noise, transform)


def predict(model: GpSurrogate, x):
    """Posterior mean and variance vectors at x (original coordinates)."""
    return model.predict(x)


def uncertainty_radius(model: GpSurrogate, x) -> float:
    """Reliability statistic: the largest predictive variance across outputs."""
    return model.uncertainty(x)


def update_data(model: GpSurrogate, additions: TrainingSet,
                retained_filter: Callable, region=None,
                config: Optional[FitConfig] = None) -> GpSurrogate:
    """New surrogate over filtered-old plus new data, warm-started.

    ``retained_filter`` is a predicate on sample locations; additions must be
    disjoint (within 1e-12, max-norm) from the retained points. When the
    trust region changed, pass it as ``region`` so input normalization and
    the warm-started length scale are rescaled consistently.
    """
    mask = np.fromiter((bool(retained_filter(x)) for x in model.data.X),
                       dtype=bool, count=model.data.m)
    kept = model.data.filter(mask)
    if kept.m and additions.m:
        gaps = cdist(additions.X, kept.X, "chebyshev")
        if gaps.min() <= _DUPLICATE_TOL:
            raise ValueError("additions duplicate retained training points")
    merged = kept.extend(additions) if kept.m else additions

    new_region = region
    old_halfwidth = model.transform.halfwidth
    if new_region is None:
        class _Keep:
            center = model.transform.center
            half_width = model.transform.halfwidth
        new_region = _Keep()

    warm = model.phi().copy()
    ratio = old_halfwidth / float(new_region.half_width)
    warm[1] = math.log(min(max(model.hyper.sigma_l * ratio, SIGMA_L_BOUNDS[0]),
                           SIGMA_L_BOUNDS[1]))
    # noise re-expressed against the merged data's output scale
    new_std = merged.Y.std(axis=0)
    new_std = np.where(new_std > 1e-12, new_std, 1.0)
    warm[2:] = np.log(_floored_noise(model.noise.sigmas, new_std))

    if config is None:
        config = FitConfig(n_restarts=0, region=new_region, warm_start=warm)
    else:
        config.region = new_region
        if config.warm_start is None:
            config.warm_start = warm
    return fit(merged, config)
