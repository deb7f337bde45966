"""Motion, sensor, birth and clutter models shared by both filters.

State layouts: the coordinated-turn (CT) state is ``[px, vx, py, vy, omega]``
and the constant-velocity (CV) state is ``[px, vx, py, vy]``. Positions always
sit at indices 0 and 2, which is what the random walk and the sensors read.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import kernels
from .kernels import OMEGA_EPS, wrap_angle

POS = (0, 2)
CLUTTER, TARGET = 0, 1


class ModelError(ValueError):
    pass


def _finite(*vals):
    for v in vals:
        if not np.all(np.isfinite(v)):
            raise ModelError(f"non-finite value: {v!r}")


def _check_psd(cov, tol=1e-9):
    cov = np.asarray(cov, dtype=float)
    if not np.allclose(cov, cov.T, atol=tol * max(1.0, np.abs(cov).max())):
        raise ModelError("covariance is not symmetric")
    if cov.size and np.linalg.eigvalsh(cov).min() < -tol * max(1.0, np.abs(cov).max()):
        raise ModelError("covariance is not positive semi-definite")


def _g_matrix(T):
    h = 0.5 * T * T
    return np.array([[h, 0.0], [T, 0.0], [0.0, h], [0.0, T]])


def ct_matrix(omega, T):
    """4x4 coordinated-turn transition for ``[px, vx, py, vy]``."""
    _finite(omega, T)
    if T <= 0:
        raise ModelError("sampling period must be positive")
    s, c = math.sin(omega * T), math.cos(omega * T)
    if abs(omega) < OMEGA_EPS:
        a, b = T, 0.0
    else:
        a, b = s / omega, 2.0 * math.sin(0.5 * omega * T) ** 2 / omega
    return np.array([
        [1.0, a, 0.0, -b],
        [0.0, c, 0.0, -s],
        [0.0, b, 1.0, a],
        [0.0, s, 0.0, c],
    ])


def _ct_omega_derivative(omega, T, vx, vy):
    # d/d(omega) of F(omega) @ [px, vx, py, vy]
    s, c = math.sin(omega * T), math.cos(omega * T)
    if abs(omega * T) < 1e-4:
        da = -omega * T ** 3 / 3.0
        db = 0.5 * T ** 2 - omega ** 2 * T ** 4 / 8.0
    else:
        da = (omega * T * c - s) / omega ** 2
        db = (omega * T * s - (1.0 - c)) / omega ** 2
    return np.array([
        da * vx - db * vy,
        -T * s * vx - T * c * vy,
        db * vx + da * vy,
        T * c * vx - T * s * vy,
    ])


@dataclass(frozen=True)
class CoordinatedTurnModel:
    T: float = 1.0
    sigma_w: float = 5.0
    sigma_omega: float = math.pi / 180.0

    dim = 5

    def __post_init__(self):
        _finite(self.T, self.sigma_w, self.sigma_omega)
        if self.T <= 0 or self.sigma_w < 0 or self.sigma_omega < 0:
            raise ModelError("invalid coordinated-turn parameters")

    def noise_cov(self):
        Q = np.zeros((5, 5))
        G = _g_matrix(self.T)
        Q[:4, :4] = self.sigma_w ** 2 * G @ G.T
        Q[4, 4] = self.sigma_omega ** 2
        return Q

    def transition(self, x):
        x = np.asarray(x, dtype=float)
        out = np.empty(5)
        out[:4] = ct_matrix(x[4], self.T) @ x[:4]
        out[4] = x[4]
        return out

    def jacobian(self, x):
        J = np.zeros((5, 5))
        J[:4, :4] = ct_matrix(x[4], self.T)
        J[:4, 4] = _ct_omega_derivative(x[4], self.T, x[1], x[3])
        J[4, 4] = 1.0
        return J

    def predict_moments(self, mean, cov):
        return ct_predict_moments(mean, cov, self)

    def sample(self, X, rng):
        """Propagate a ``(P, 5)`` particle batch one step."""
        X = np.ascontiguousarray(X, dtype=float)
        noise = rng.standard_normal((X.shape[0], 3))
        noise[:, :2] *= self.sigma_w
        noise[:, 2] *= self.sigma_omega
        return kernels.ct_step(X, float(self.T), noise)


@dataclass(frozen=True)
class ConstantVelocityModel:
    T: float = 1.0
    sigma_w: float = 1.0

    dim = 4

    def __post_init__(self):
        _finite(self.T, self.sigma_w)
        if self.T <= 0 or self.sigma_w < 0:
            raise ModelError("invalid constant-velocity parameters")

    @property
    def F(self):
        return ct_matrix(0.0, self.T)

    def noise_cov(self):
        G = _g_matrix(self.T)
        return self.sigma_w ** 2 * G @ G.T

    def transition(self, x):
        return self.F @ np.asarray(x, dtype=float)

    def jacobian(self, x):
        return self.F

    def predict_moments(self, mean, cov):
        _check_psd(cov)
        F = self.F
        P = F @ cov @ F.T + self.noise_cov()
        return F @ mean, 0.5 * (P + P.T)

    def sample(self, X, rng):
        X = np.asarray(X, dtype=float)
        w = rng.standard_normal((X.shape[0], 2)) * self.sigma_w
        return X @ self.F.T + w @ _g_matrix(self.T).T


@dataclass(frozen=True)
class RandomWalkModel:
    """Position-only random walk for clutter generators."""

    sigma_rw: float = 10.0

    def __post_init__(self):
        _finite(self.sigma_rw)
        if self.sigma_rw < 0:
            raise ModelError("sigma_rw must be >= 0")

    def sample(self, X, rng):
        X = np.array(X, dtype=float, copy=True)
        if self.sigma_rw > 0:
            d = rng.standard_normal((2, X.shape[0]))
            X[:, POS[0]] += self.sigma_rw * d[0]
            X[:, POS[1]] += self.sigma_rw * d[1]
        return X


def ct_predict_moments(mean, cov, model):
    """First-order (EKF) propagation of a CT Gaussian."""
    mean = np.asarray(mean, dtype=float)
    cov = np.asarray(cov, dtype=float)
    _finite(mean, cov)
    _check_psd(cov)
    J = model.jacobian(mean)
    P = J @ cov @ J.T + model.noise_cov()
    return model.transition(mean), 0.5 * (P + P.T)


def ct_sample(state, model, rng):
    """Draw one successor of a single CT state."""
    state = np.asarray(state, dtype=float)
    _finite(state)
    return model.sample(state[None, :], rng)[0]


def rw_sample(state, model, rng):
    state = np.asarray(state, dtype=float)
    return model.sample(state[None, :], rng)[0]


@dataclass(frozen=True)
class BearingRangeModel:
    """Bearing measured from the +y axis, ``atan2(px, py)``, plus range."""

    sigma_theta: float = 2.0 * math.pi / 180.0
    sigma_r: float = 10.0
    origin: tuple = (0.0, 0.0)
    theta_min: float = -math.pi
    theta_max: float = math.pi
    r_max: float = 1500.0

    def __post_init__(self):
        _finite(self.sigma_theta, self.sigma_r, self.origin, self.r_max)
        if self.sigma_theta <= 0 or self.sigma_r <= 0:
            raise ModelError("bearing/range noise must be positive")
        if not (self.theta_max > self.theta_min and self.r_max > 0):
            raise ModelError("empty observation region")
        object.__setattr__(self, "origin", tuple(float(v) for v in self.origin))

    @property
    def R(self):
        return np.diag([self.sigma_theta ** 2, self.sigma_r ** 2])

    @property
    def area(self):
        return (self.theta_max - self.theta_min) * self.r_max

    def measure(self, x):
        dx, dy = x[0] - self.origin[0], x[2] - self.origin[1]
        if dx == 0.0 and dy == 0.0:
            raise ModelError("bearing undefined at the sensor origin")
        return np.array([math.atan2(dx, dy), math.hypot(dx, dy)])

    def linearize(self, x):
        """Predicted measurement and Jacobian at ``x``."""
        zhat = self.measure(x)
        dx, dy = x[0] - self.origin[0], x[2] - self.origin[1]
        r2 = dx * dx + dy * dy
        r = math.sqrt(r2)
        H = np.zeros((2, len(x)))
        H[0, 0], H[0, 2] = dy / r2, -dx / r2
        H[1, 0], H[1, 2] = dx / r, dy / r
        return zhat, H

    def residual(self, z, zhat):
        e = np.asarray(z, dtype=float) - zhat
        e[..., 0] = wrap_angle(e[..., 0])
        return e

    def loglik_batch(self, X, Z):
        if len(Z) == 0:
            return np.empty((len(X), 0))
        return kernels.bearing_range_loglik_batch(
            np.ascontiguousarray(X, dtype=float), np.ascontiguousarray(Z, dtype=float),
            self.origin[0], self.origin[1], float(self.sigma_theta), float(self.sigma_r))

    def sample(self, x, rng):
        z = self.measure(x) + rng.standard_normal(2) * [self.sigma_theta, self.sigma_r]
        z[0] = wrap_angle(z[0])
        return z

    def contains(self, Z):
        Z = np.atleast_2d(Z)
        return ((Z[:, 0] >= self.theta_min) & (Z[:, 0] <= self.theta_max)
                & (Z[:, 1] >= 0.0) & (Z[:, 1] <= self.r_max))

    def sample_clutter(self, n, rng):
        th = rng.uniform(self.theta_min, self.theta_max, n)
        r = rng.uniform(0.0, self.r_max, n)
        return np.column_stack([th, r])

    def surveillance_box(self):
        return (self.origin[0] - self.r_max, self.origin[0] + self.r_max,
                self.origin[1] - self.r_max, self.origin[1] + self.r_max)


def bearing_range_loglik(z, x, model):
    x = np.asarray(x, dtype=float)
    zhat = model.measure(x)
    e = model.residual(z, zhat)
    st, sr = model.sigma_theta, model.sigma_r
    return -math.log(2.0 * math.pi * st * sr) - 0.5 * ((e[0] / st) ** 2 + (e[1] / sr) ** 2)


@dataclass(frozen=True)
class LinearPositionModel:
    """``z = H x + v`` with H selecting ``(px, py)``; ``region`` is ``(x0, x1, y0, y1)``."""

    Sigma: np.ndarray = field(default_factory=lambda: np.eye(2))
    dim: int = 4
    region: tuple = (0.0, 1000.0, 0.0, 1000.0)

    def __post_init__(self):
        S = np.array(self.Sigma, dtype=float).reshape(2, 2)
        _finite(S)
        if not np.allclose(S, S.T):
            raise ModelError("Sigma must be symmetric")
        try:
            L = np.linalg.cholesky(S)
        except np.linalg.LinAlgError:
            raise ModelError("Sigma must be positive definite") from None
        object.__setattr__(self, "Sigma", S)
        object.__setattr__(self, "_Sinv", np.linalg.inv(S))
        object.__setattr__(self, "_logdet", 2.0 * float(np.log(np.diag(L)).sum()))
        x0, x1, y0, y1 = (float(v) for v in self.region)
        if not (x1 > x0 and y1 > y0):
            raise ModelError("empty observation region")
        object.__setattr__(self, "region", (x0, x1, y0, y1))

    @property
    def H(self):
        H = np.zeros((2, self.dim))
        H[0, POS[0]] = H[1, POS[1]] = 1.0
        return H

    @property
    def R(self):
        return self.Sigma

    @property
    def area(self):
        x0, x1, y0, y1 = self.region
        return (x1 - x0) * (y1 - y0)

    def measure(self, x):
        return np.array([x[POS[0]], x[POS[1]]], dtype=float)

    def linearize(self, x):
        H = np.zeros((2, len(x)))
        H[0, POS[0]] = H[1, POS[1]] = 1.0
        return self.measure(x), H

    def residual(self, z, zhat):
        return np.asarray(z, dtype=float) - zhat

    def loglik_batch(self, X, Z):
        if len(Z) == 0:
            return np.empty((len(X), 0))
        return kernels.position_loglik_batch(
            np.ascontiguousarray(X, dtype=float), np.ascontiguousarray(Z, dtype=float),
            POS[0], POS[1], self._Sinv, self._logdet)

    def sample(self, x, rng):
        return self.measure(x) + np.linalg.cholesky(self.Sigma) @ rng.standard_normal(2)

    def contains(self, Z):
        Z = np.atleast_2d(Z)
        x0, x1, y0, y1 = self.region
        return (Z[:, 0] >= x0) & (Z[:, 0] <= x1) & (Z[:, 1] >= y0) & (Z[:, 1] <= y1)

    def sample_clutter(self, n, rng):
        x0, x1, y0, y1 = self.region
        return np.column_stack([rng.uniform(x0, x1, n), rng.uniform(y0, y1, n)])

    def surveillance_box(self):
        return self.region


def linear_position_loglik(z, x, model):
    e = np.asarray(z, dtype=float) - model.H @ np.asarray(x, dtype=float)
    return float(-math.log(2.0 * math.pi) - 0.5 * model._logdet - 0.5 * e @ model._Sinv @ e)


@dataclass(frozen=True)
class GaussianMixture:
    weights: np.ndarray
    means: np.ndarray
    covs: np.ndarray

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        m = np.atleast_2d(np.asarray(self.means, dtype=float))
        P = np.asarray(self.covs, dtype=float)
        if P.ndim == 2:
            P = P[None]
        if not (len(w) == len(m) == len(P)):
            raise ModelError("mixture arrays disagree in length")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", m)
        object.__setattr__(self, "covs", P)

    @classmethod
    def single(cls, mean, cov):
        return cls(np.ones(1), np.asarray(mean, dtype=float)[None],
                   np.asarray(cov, dtype=float)[None])

    def __len__(self):
        return len(self.weights)

    def mean(self):
        return self.weights @ self.means

    @cached_property
    def _chol(self):
        d = self.means.shape[1]
        return np.array([np.linalg.cholesky(P + 1e-12 * np.eye(d)) for P in self.covs])

    def sample(self, n, rng):
        L = self._chol
        if len(self.weights) == 1:
            return self.means[0] + rng.standard_normal((n, L.shape[1])) @ L[0].T
        comp = rng.choice(len(self.weights), size=n, p=self.weights / self.weights.sum())
        out = np.empty((n, self.means.shape[1]))
        for c in np.unique(comp):
            sel = comp == c
            out[sel] = self.means[c] + rng.standard_normal((sel.sum(), L.shape[1])) @ L[c].T
        return out


@dataclass(frozen=True)
class BirthComponent:
    """One birth entry: existence (also the GLMB birth-label weight), density, class."""

    r: float
    density: GaussianMixture | None = None
    u: int = TARGET

    def __post_init__(self):
        if not 0.0 < self.r <= 1.0:
            raise ModelError("birth existence must lie in (0, 1]")
        if self.u not in (CLUTTER, TARGET):
            raise ModelError("class label must be 0 or 1")
        if self.density is not None and abs(self.density.weights.sum() - 1.0) > 1e-9:
            raise ModelError("birth mixture weights must sum to 1")
        if self.density is None and self.u == TARGET:
            raise ModelError("target births need a density")


@dataclass(frozen=True)
class SurvivalDetectionSpec:
    p_S1: float = 0.99
    p_S0: float = 0.90
    p_D1: float = 0.98
    p_D0: float = 0.50

    def __post_init__(self):
        for name in ("p_S1", "p_S0", "p_D1", "p_D0"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ModelError(f"{name} must lie in [0, 1]")

    def p_S(self, u):
        return np.where(np.asarray(u) == TARGET, self.p_S1, self.p_S0)

    def p_D(self, u):
        return np.where(np.asarray(u) == TARGET, self.p_D1, self.p_D0)


@dataclass(frozen=True)
class ModelSet:
    motion: CoordinatedTurnModel | ConstantVelocityModel
    sensor: BearingRangeModel | LinearPositionModel
    clutter_motion: RandomWalkModel = RandomWalkModel()
    probs: SurvivalDetectionSpec = SurvivalDetectionSpec()

    @property
    def dim(self):
        return self.motion.dim
