"""Gaussians, Gaussian mixtures and the Gaussian algebra used by the paths.

Every density here works on a single point of shape ``(d,)`` or on a batch of
shape ``(n, d)``; batched calls return one value (or one row) per point.
Covariances are factorised once at construction, so evaluating scores costs a
triangular multiply rather than a solve.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Protocol, runtime_checkable

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import logsumexp

from anneal_path.errors import InputError

LOG_2PI = float(np.log(2.0 * np.pi))


@runtime_checkable
class TargetDensity(Protocol):
    """Anything the samplers can target.

    Only the unnormalised log-density and its gradient are required; the
    normalising constant never enters the Langevin updates.
    """

    dim: int

    def log_density(self, x: np.ndarray) -> np.ndarray | float: ...

    def score(self, x: np.ndarray) -> np.ndarray: ...


def as_points(x, dim: int) -> tuple[np.ndarray, bool]:
    """Coerce ``x`` to a ``(n, dim)`` float array.

    Returns the array and whether the input was a single point.
    """
    arr = np.asarray(x, dtype=float)
    single = arr.ndim <= 1
    arr = np.atleast_2d(arr) if arr.ndim <= 1 else arr
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise InputError(f"expected points of dimension {dim}, got shape {np.shape(x)}")
    return arr, single


def _full_covariance(cov, dim: int) -> np.ndarray:
    cov = np.asarray(cov, dtype=float)
    if cov.ndim == 0:
        return float(cov) * np.eye(dim)
    if cov.ndim == 1:
        if cov.shape[0] != dim:
            raise InputError(f"diagonal covariance has length {cov.shape[0]}, expected {dim}")
        return np.diag(cov)
    if cov.shape != (dim, dim):
        raise InputError(f"covariance has shape {cov.shape}, expected {(dim, dim)}")
    return cov


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class GaussianParams:
    """A multivariate normal ``N(mean, covariance)``.

    ``covariance`` may be passed as a scalar (isotropic), a vector (diagonal)
    or a full symmetric positive-definite matrix; it is stored in full.

    Raises:
        InputError: If the covariance is not symmetric positive definite.
    """

    mean: np.ndarray
    covariance: np.ndarray
    chol: np.ndarray = field(init=False, repr=False)
    whiten: np.ndarray = field(init=False, repr=False)
    log_det: float = field(init=False, repr=False)

    def __post_init__(self):
        mean = np.atleast_1d(np.array(self.mean, dtype=float))
        if mean.ndim != 1:
            raise InputError("mean must be a vector")
        cov = np.array(_full_covariance(self.covariance, mean.shape[0]))
        if not np.all(np.isfinite(cov)) or not np.all(np.isfinite(mean)):
            raise InputError("Gaussian parameters must be finite")
        scale = max(1.0, float(np.max(np.abs(cov))))
        if np.max(np.abs(cov - cov.T)) > 1e-12 * scale:
            raise InputError("covariance is not symmetric")
        cov = 0.5 * (cov + cov.T)
        try:
            chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError as exc:
            raise InputError("covariance is not positive definite") from exc
        whiten = solve_triangular(chol, np.eye(mean.shape[0]), lower=True)
        object.__setattr__(self, "mean", _readonly(mean))
        object.__setattr__(self, "covariance", _readonly(cov))
        object.__setattr__(self, "chol", _readonly(chol))
        object.__setattr__(self, "whiten", _readonly(whiten))
        object.__setattr__(self, "log_det", float(2.0 * np.sum(np.log(np.diag(chol)))))

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    @property
    def precision(self) -> np.ndarray:
        return self.whiten.T @ self.whiten

    def _whitened(self, pts: np.ndarray) -> np.ndarray:
        return np.einsum("ij,nj->ni", self.whiten, pts - self.mean)

    def log_density(self, x):
        pts, single = as_points(x, self.dim)
        z = self._whitened(pts)
        out = -0.5 * np.sum(z * z, axis=1) - 0.5 * self.log_det - 0.5 * self.dim * LOG_2PI
        return float(out[0]) if single else out

    def density(self, x):
        return np.exp(self.log_density(x))

    def score(self, x):
        """Gradient of the log-density, ``-covariance^{-1} (x - mean)``."""
        pts, single = as_points(x, self.dim)
        out = -np.einsum("ji,nj->ni", self.whiten, self._whitened(pts))
        return out[0] if single else out

    def density_gradient(self, x):
        """Gradient of the density itself: ``score(x) * density(x)``."""
        pts, single = as_points(x, self.dim)
        out = self.score(pts) * self.density(pts)[:, None]
        return out[0] if single else out

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if n < 1:
            raise InputError("n must be at least 1")
        eps = rng.standard_normal((n, self.dim))
        return self.mean + np.einsum("ij,nj->ni", self.chol, eps)

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "covariance": self.covariance.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> GaussianParams:
        return cls(data["mean"], data["covariance"])


def _check_same_dim(a: GaussianParams, b: GaussianParams) -> None:
    if a.dim != b.dim:
        raise InputError(f"dimension mismatch: {a.dim} vs {b.dim}")


def gaussian_product(a: GaussianParams, b: GaussianParams) -> tuple[GaussianParams, float]:
    """Pointwise product of two Gaussian densities.

    ``N(x; a) * N(x; b) = exp(log_norm) * N(x; c)`` with ``c`` the returned
    Gaussian (precision-weighted mean, harmonic covariance) and
    ``log_norm = log N(mean_a; mean_b, cov_a + cov_b)``.
    """
    _check_same_dim(a, b)
    total = a.covariance + b.covariance
    # cov_a (cov_a + cov_b)^{-1} cov_b, symmetric by construction
    cov = a.covariance @ np.linalg.solve(total, b.covariance)
    mean = b.covariance @ np.linalg.solve(total, a.mean) + a.covariance @ np.linalg.solve(total, b.mean)
    log_norm = GaussianParams(b.mean, total).log_density(a.mean)
    return GaussianParams(mean, 0.5 * (cov + cov.T)), float(log_norm)


def gaussian_convolve(a: GaussianParams, b: GaussianParams) -> GaussianParams:
    """Law of the sum of independent draws from ``a`` and ``b``."""
    _check_same_dim(a, b)
    return GaussianParams(a.mean + b.mean, a.covariance + b.covariance)


def gaussian_shift(g: GaussianParams, shift) -> GaussianParams:
    """``N(x - shift; mean, cov)`` as a density in ``x``."""
    shift = np.asarray(shift, dtype=float)
    if shift.shape != g.mean.shape:
        raise InputError("shift has the wrong dimension")
    return GaussianParams(g.mean + shift, g.covariance)


def gaussian_rescale(g: GaussianParams, a: float) -> tuple[GaussianParams, float]:
    """``N(x / a; mean, cov) = exp(log_factor) * N(x; a mean, a^2 cov)``.

    ``log_factor`` is ``dim * log|a|``.
    """
    if a == 0:
        raise InputError("scale factor must be nonzero")
    return GaussianParams(a * g.mean, a * a * g.covariance), g.dim * float(np.log(abs(a)))


@dataclass(frozen=True, eq=False)
class GaussianMixture:
    """A finite mixture ``sum_m w_m N(mean_m, cov_m)``.

    Weights must be non-negative and sum to one within 1e-12. All mixture
    evaluations go through log-sum-exp, so far-separated components do not
    underflow.
    """

    components: tuple[GaussianParams, ...]
    weights: np.ndarray
    means: np.ndarray = field(init=False, repr=False)
    _whiten_t: np.ndarray = field(init=False, repr=False)
    _whitened_means_t: np.ndarray = field(init=False, repr=False)
    _means_t: np.ndarray = field(init=False, repr=False)
    _iso_inv_std: np.ndarray | None = field(init=False, repr=False)
    _log_coef: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise InputError("a mixture needs at least one component")
        dims = {c.dim for c in comps}
        if len(dims) != 1:
            raise InputError(f"components disagree on dimension: {sorted(dims)}")
        w = np.array(self.weights, dtype=float).ravel()
        if w.shape[0] != len(comps):
            raise InputError(f"{w.shape[0]} weights for {len(comps)} components")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise InputError("weights must be finite and non-negative")
        if abs(w.sum() - 1.0) > 1e-12:
            raise InputError(f"weights sum to {w.sum()!r}, not 1")
        whiten = np.stack([c.whiten for c in comps])
        means = np.stack([c.mean for c in comps])
        with np.errstate(divide="ignore"):
            log_w = np.log(w)
        d = means.shape[1]
        log_coef = log_w - 0.5 * np.array([c.log_det for c in comps]) - 0.5 * d * LOG_2PI
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "weights", _readonly(w))
        object.__setattr__(self, "means", _readonly(means))
        object.__setattr__(self, "_whiten_t", _readonly(np.ascontiguousarray(whiten.transpose(1, 2, 0))))
        wm = np.einsum("mij,mj->mi", whiten, means)
        object.__setattr__(self, "_whitened_means_t", _readonly(np.ascontiguousarray(wm.T)))
        object.__setattr__(self, "_means_t", _readonly(np.ascontiguousarray(means.T)))
        covs = np.stack([c.covariance for c in comps])
        variances = covs[:, 0, 0]
        iso = np.array_equal(covs, variances[:, None, None] * np.eye(d)[None])
        object.__setattr__(self, "_iso_inv_std", _readonly(1.0 / np.sqrt(variances)) if iso else None)
        object.__setattr__(self, "_log_coef", _readonly(log_coef))

    @classmethod
    def from_arrays(cls, weights, means, covariances) -> GaussianMixture:
        """Build from stacked parameters.

        ``covariances`` holds one entry per component: a scalar, a diagonal
        vector or a full matrix.
        """
        means = np.asarray(means, dtype=float)
        if means.ndim != 2:
            raise InputError("means must be a 2-D array (components x dim)")
        if len(covariances) != means.shape[0]:
            raise InputError("need one covariance per component")
        comps = tuple(GaussianParams(m, c) for m, c in zip(means, covariances))
        return cls(comps, weights)

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    @property
    def n_components(self) -> int:
        return self.means.shape[0]

    @property
    def covariances(self) -> np.ndarray:
        return np.stack([c.covariance for c in self.components])

    # Hot-path layout: whitened residuals are stored as (d, n, M) so every
    # arithmetic step runs on contiguous (n, M) planes. No BLAS calls, so each
    # row's result does not depend on the batch it is evaluated in.
    def _whitened(self, pts: np.ndarray) -> np.ndarray:
        n, d = pts.shape
        z = np.empty((d, n, self.n_components))
        if self._iso_inv_std is not None:
            for i in range(d):
                np.subtract(pts[:, i, None], self._means_t[i][None], out=z[i])
                z[i] *= self._iso_inv_std[None]
            return z
        for i in range(d):
            zi = z[i]
            np.multiply(pts[:, 0, None], self._whiten_t[i, 0][None], out=zi)
            for j in range(1, d):
                zi += pts[:, j, None] * self._whiten_t[i, j][None]
            zi -= self._whitened_means_t[i][None]
        return z

    def _component_log_densities(self, z: np.ndarray) -> np.ndarray:
        q = np.square(z[0])
        for i in range(1, z.shape[0]):
            q += np.square(z[i])
        q *= -0.5
        q += self._log_coef[None]
        return q

    def log_density(self, x):
        pts, single = as_points(x, self.dim)
        out = logsumexp(self._component_log_densities(self._whitened(pts)), axis=1)
        return float(out[0]) if single else out

    def responsibilities(self, x) -> np.ndarray:
        """Posterior component probabilities ``r_m(x)``, shape ``(n, M)``."""
        pts, single = as_points(x, self.dim)
        r = _softmax(self._component_log_densities(self._whitened(pts)))
        return r[0] if single else r

    def score(self, x):
        """``sum_m r_m(x) cov_m^{-1} (mean_m - x)``."""
        pts, single = as_points(x, self.dim)
        z = self._whitened(pts)
        r = _softmax(self._component_log_densities(z))
        d = self.dim
        out = np.empty_like(pts)
        if self._iso_inv_std is not None:
            rz = r * self._iso_inv_std[None]
            for k in range(d):
                out[:, k] = -np.sum(rz * z[k], axis=1)
            return out[0] if single else out
        out[:] = 0.0
        for i in range(d):
            v = r * z[i]
            for k in range(d):
                out[:, k] -= np.sum(v * self._whiten_t[i, k][None], axis=1)
        return out[0] if single else out

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if n < 1:
            raise InputError("n must be at least 1")
        labels = rng.choice(self.n_components, size=n, p=self.weights)
        eps = rng.standard_normal((n, self.dim))
        chol = np.stack([c.chol for c in self.components])
        return self.means[labels] + np.einsum("nij,nj->ni", chol[labels], eps)

    def mean(self) -> np.ndarray:
        return self.weights @ self.means

    def covariance(self) -> np.ndarray:
        mu = self.mean()
        centred = self.means - mu
        return np.einsum("m,mij->ij", self.weights, self.covariances) + np.einsum(
            "m,mi,mj->ij", self.weights, centred, centred
        )

    def permuted(self, order) -> GaussianMixture:
        order = list(order)
        return GaussianMixture(tuple(self.components[i] for i in order), self.weights[order])

    def to_dict(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "means": self.means.tolist(),
            "covariances": self.covariances.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> GaussianMixture:
        try:
            weights, means, covs = data["weights"], data["means"], data["covariances"]
        except (KeyError, TypeError) as exc:
            raise InputError("mixture needs 'weights', 'means' and 'covariances'") from exc
        return cls.from_arrays(weights, means, covs)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> GaussianMixture:
        return cls.from_dict(json.loads(text))


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - np.max(logits, axis=1, keepdims=True)
    # exp underflows to subnormals below about -708, which is very slow
    np.maximum(shifted, -700.0, out=shifted)
    e = np.exp(shifted)
    return e / np.sum(e, axis=1, keepdims=True)


def gmm_log_density(gmm: GaussianMixture, x):
    return gmm.log_density(x)


def gmm_score(gmm: GaussianMixture, x):
    return gmm.score(x)


def gmm_sample(gmm: GaussianMixture, n: int, rng: np.random.Generator) -> np.ndarray:
    return gmm.sample(n, rng)
