"""Annealing schedules and path scores.

A path is a family of distributions ``mu_lambda`` indexed by an annealing
level ``lambda`` in ``[0, 1]``, running from an easy proposal (``lambda = 0``)
to the target (``lambda = 1``). Four ways of evaluating its score are provided:

* ``dilation``: the Dirac-proposal limit of the convolutional path. Each
  ``mu_lambda`` is the target rescaled by ``sqrt(lambda)``, so its score is
  ``score(x / sqrt(lambda)) / sqrt(lambda)``.
* ``geometric``: ``mu_lambda ∝ proposal^(1 - lambda) target^lambda``.
* ``convolutional_exact_gmm``: the convolutional path of a Gaussian mixture
  with a centred Gaussian proposal, which stays a Gaussian mixture.
* ``convolutional_mc``: the generic Monte Carlo estimator of the
  convolutional score, with an inner Langevin chain on the posterior
  ``m(y | x) ∝ target(y) N(y; x / sqrt(lambda), (1/lambda - 1) I)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from anneal_path.errors import InputError, NumericalError
from anneal_path.gaussian import GaussianMixture, GaussianParams, TargetDensity, as_points

SCHEDULE_KINDS = ("linear", "exponential")
PATH_VARIANTS = ("dilation", "geometric", "convolutional_exact_gmm", "convolutional_mc")


@dataclass(frozen=True)
class Schedule:
    """Map from algorithm time ``t >= 0`` to annealing level ``lambda``.

    ``linear``: ``min(1, t)``. ``exponential``: ``min(1, exp(-2 (T - t)))``,
    which starts at ``exp(-2 T)``.
    """

    kind: str = "linear"
    horizon: float | None = None

    def __post_init__(self):
        if self.kind not in SCHEDULE_KINDS:
            raise InputError(f"unknown schedule kind {self.kind!r}")
        if self.kind == "exponential" and (self.horizon is None or not self.horizon > 0):
            raise InputError("exponential schedule needs a positive horizon T")

    def __call__(self, t: float) -> float:
        return schedule_eval(self, t)

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.horizon is not None:
            out["T"] = self.horizon
        return out


def schedule_eval(s: Schedule, t: float) -> float:
    if not t >= 0:
        raise InputError(f"schedule time must be non-negative, got {t!r}")
    if s.kind == "linear":
        return min(1.0, float(t))
    return min(1.0, math.exp(-2.0 * (s.horizon - t)))


def _check_level(lam: float, allow_zero: bool) -> float:
    lam = float(lam)
    low_ok = lam >= 0 if allow_zero else lam > 0
    if not (low_ok and lam <= 1):
        bound = "[0, 1]" if allow_zero else "(0, 1]"
        raise InputError(f"annealing level must lie in {bound}, got {lam!r}")
    return lam


def dilation_score(target: TargetDensity, x, lam: float):
    """Score of the target dilated by ``sqrt(lam)``.

    Raises:
        InputError: For ``lam <= 0``; the Dirac endpoint has no finite score.
    """
    lam = _check_level(lam, allow_zero=False)
    root = math.sqrt(lam)
    return target.score(np.asarray(x, dtype=float) / root) / root


def geometric_score(target: TargetDensity, proposal: GaussianParams, x, lam: float):
    """``(1 - lam) * score_proposal(x) + lam * score_target(x)``."""
    lam = _check_level(lam, allow_zero=True)
    if proposal.dim != target.dim:
        raise InputError(f"proposal dimension {proposal.dim} != target dimension {target.dim}")
    if lam == 1.0:
        return target.score(x)
    if lam == 0.0:
        return proposal.score(x)
    return (1.0 - lam) * proposal.score(x) + lam * target.score(x)


def convolutional_gmm_path(gmm: GaussianMixture, proposal: GaussianParams, lam: float) -> GaussianMixture:
    """The convolutional path of a Gaussian mixture at level ``lam``.

    Weights are unchanged, means shrink to ``sqrt(lam) * mean_m`` and
    covariances become ``(1 - lam) * cov_0 + lam * cov_m``.

    Raises:
        InputError: If the proposal is not centred or dimensions differ.
    """
    lam = _check_level(lam, allow_zero=True)
    if proposal.dim != gmm.dim:
        raise InputError("proposal and mixture dimensions differ")
    if np.any(proposal.mean != 0):
        raise InputError("the closed-form mixture path needs a zero-mean proposal")
    root = math.sqrt(lam)
    comps = tuple(
        GaussianParams(root * c.mean, (1.0 - lam) * proposal.covariance + lam * c.covariance)
        for c in gmm.components
    )
    return GaussianMixture(comps, gmm.weights)


def dilated_gmm(gmm: GaussianMixture, lam: float) -> GaussianMixture:
    """The dilation path of a mixture: means ``sqrt(lam) mean_m``, covariances ``lam cov_m``."""
    lam = _check_level(lam, allow_zero=False)
    root = math.sqrt(lam)
    return GaussianMixture(
        tuple(GaussianParams(root * c.mean, lam * c.covariance) for c in gmm.components), gmm.weights
    )


def interpolant_samples(
    target: GaussianMixture, proposal: GaussianParams, lam: float, n: int, rng: np.random.Generator
) -> np.ndarray:
    """Draws ``sqrt(1 - lam) x_proposal + sqrt(lam) x_target`` with independent inputs."""
    lam = _check_level(lam, allow_zero=True)
    x_nu = proposal.sample(n, rng)
    x_pi = target.sample(n, rng)
    return math.sqrt(1.0 - lam) * x_nu + math.sqrt(lam) * x_pi


@dataclass(frozen=True)
class MCEstimatorConfig:
    """Settings of the Monte Carlo convolutional score estimator.

    Attributes:
        n_samples: Independent inner chains per score query.
        n_iter: Langevin iterations per inner chain; the first half is
            discarded as burn-in and every remaining state is averaged.
        step: Inner step size as a fraction of the blur variance
            ``v / (1 + v)`` with ``v = 1/lambda - 1``; for a unit-scale target
            this keeps the step a fixed fraction of the inverse curvature.
    """

    n_samples: int = 1000
    n_iter: int = 100
    step: float = 0.2
    burn_in: float = 0.5

    def __post_init__(self):
        if self.n_samples < 1:
            raise InputError("the Monte Carlo estimator needs at least one inner sample")
        if self.n_iter < 2:
            raise InputError("inner chains need at least two iterations")
        if not 0 < self.step < 2:
            raise InputError("inner step fraction must lie in (0, 2)")
        if not 0 <= self.burn_in < 1:
            raise InputError("burn-in fraction must lie in [0, 1)")

    def to_dict(self) -> dict:
        return {"n_samples": self.n_samples, "n_iter": self.n_iter, "step": self.step, "burn_in": self.burn_in}


@dataclass(frozen=True)
class MCDiagnostics:
    n_chains: int
    n_iter: int
    n_kept: int
    step_size: float
    score_queries: int
    grad_norm_mean: float
    grad_norm_max: float


def _mc_score_at_level(target: TargetDensity, x, lam: float, inner: MCEstimatorConfig, rng: np.random.Generator):
    pts, single = as_points(x, target.dim)
    n, d = pts.shape
    # lam = exp(-2 (T - t)): scale = e^{T-t}, blur variance = e^{2(T-t)} - 1
    scale = 1.0 / math.sqrt(lam)
    var = 1.0 / lam - 1.0
    if not var > 0:
        raise InputError("the Monte Carlo estimator needs lambda < 1")
    h = inner.step * var / (1.0 + var)
    centre = scale * pts  # (n, d)
    y = np.repeat(centre[:, None, :], inner.n_samples, axis=1)  # (n, S, d)
    keep_from = int(inner.burn_in * inner.n_iter)
    acc = np.zeros_like(y)
    norm_sum = 0.0
    norm_max = 0.0
    noise_scale = math.sqrt(2.0 * h)
    for it in range(inner.n_iter):
        grad = target.score(y.reshape(-1, d)).reshape(y.shape) - (y - centre[:, None, :]) / var
        if not np.all(np.isfinite(grad)):
            raise NumericalError(f"non-finite score in inner chain at iteration {it}", iteration=it)
        norms = np.sqrt(np.sum(grad * grad, axis=2))
        norm_sum += float(np.sum(norms))
        norm_max = max(norm_max, float(np.max(norms)))
        y = y + h * grad + noise_scale * rng.standard_normal(y.shape)
        if it >= keep_from:
            acc += y
    n_kept = inner.n_iter - keep_from
    post_mean = acc.sum(axis=1) / (n_kept * inner.n_samples)
    est = (1.0 / scale) / (1.0 - 1.0 / scale**2) * (post_mean - centre)
    queries = n * inner.n_samples * inner.n_iter
    diag = MCDiagnostics(
        n_chains=n * inner.n_samples,
        n_iter=inner.n_iter,
        n_kept=n_kept,
        step_size=h,
        score_queries=queries,
        grad_norm_mean=norm_sum / queries,
        grad_norm_max=norm_max,
    )
    return (est[0] if single else est), diag


def convolutional_mc_score(
    target: TargetDensity, x, t: float, T: float, inner: MCEstimatorConfig, rng: np.random.Generator
):
    """Monte Carlo estimate of the convolutional-path score at time ``t``.

    With ``lambda = exp(-2 (T - t))`` and a standard normal proposal, the score
    is ``e^{-(T-t)} / (1 - e^{-2(T-t)}) * E[y - e^{T-t} x]`` under
    ``m(y | x) ∝ target(y) N(y; e^{T-t} x, (e^{2(T-t)} - 1) I)``. The
    expectation is replaced by an average over unadjusted Langevin chains
    started at ``e^{T-t} x``.

    Returns:
        ``(score, diagnostics)``.

    Raises:
        InputError: If ``t >= T`` or the configuration is degenerate.
        NumericalError: If an inner chain produces a non-finite score.
    """
    if not 0 <= t < T:
        raise InputError(f"need 0 <= t < T, got t={t!r}, T={T!r}")
    return _mc_score_at_level(target, x, math.exp(-2.0 * (T - t)), inner, rng)


@dataclass(frozen=True, eq=False)
class PathScore:
    """Evaluates ``grad log mu_lambda(x)`` for one choice of path.

    Attributes:
        variant: One of ``PATH_VARIANTS``.
        target: The final distribution.
        proposal: Starting Gaussian; must be ``None`` for ``dilation`` (its
            proposal is a Dirac at the origin). The Monte Carlo variant uses a
            standard normal.
        inner: Estimator settings, ``convolutional_mc`` only.
    """

    variant: str
    target: TargetDensity
    proposal: GaussianParams | None = None
    inner: MCEstimatorConfig | None = None

    def __post_init__(self):
        if self.variant not in PATH_VARIANTS:
            raise InputError(f"unknown path variant {self.variant!r}")
        if self.variant == "dilation" and self.proposal is not None:
            raise InputError("the dilation path has a Dirac proposal; do not pass one")
        if self.variant in ("geometric", "convolutional_exact_gmm"):
            if self.proposal is None:
                raise InputError(f"the {self.variant} path needs a Gaussian proposal")
            if self.proposal.dim != self.target.dim:
                raise InputError("proposal and target dimensions differ")
        if self.variant == "convolutional_exact_gmm" and not isinstance(self.target, GaussianMixture):
            raise InputError("the exact convolutional path needs a GaussianMixture target")
        if self.variant == "convolutional_mc":
            if self.inner is None:
                object.__setattr__(self, "inner", MCEstimatorConfig())
            if self.proposal is not None and not (
                np.all(self.proposal.mean == 0) and np.allclose(self.proposal.covariance, np.eye(self.target.dim))
            ):
                raise InputError("the Monte Carlo estimator is defined for a standard normal proposal")

    @property
    def dim(self) -> int:
        return self.target.dim

    def queries_per_point(self) -> int:
        """Target-score evaluations needed for one path-score evaluation."""
        if self.variant == "convolutional_mc":
            return self.inner.n_samples * self.inner.n_iter
        return 1

    def __call__(self, x, lam: float, rng: np.random.Generator | None = None):
        lam = _check_level(lam, allow_zero=self.variant == "geometric")
        if self.variant == "dilation":
            return dilation_score(self.target, x, lam)
        if self.variant == "geometric":
            return geometric_score(self.target, self.proposal, x, lam)
        if self.variant == "convolutional_exact_gmm":
            if lam == 1.0:
                return self.target.score(x)
            return convolutional_gmm_path(self.target, self.proposal, lam).score(x)
        if lam == 1.0:
            return self.target.score(x)
        if rng is None:
            raise InputError("the Monte Carlo path needs a random stream")
        return _mc_score_at_level(self.target, x, lam, self.inner, rng)[0]

    def to_dict(self) -> dict:
        out = {"kind": self.variant}
        if self.proposal is not None:
            out["proposal"] = self.proposal.to_dict()
        if self.inner is not None:
            out["inner"] = self.inner.to_dict()
        return out


@dataclass(frozen=True)
class RecursiveCostModel:
    """Windowed recursive estimator: ``N_p`` particles, ``N_i`` iterations, ``N_s`` windows."""

    particles_per_window: int
    iterations_per_window: int
    windows: int

    def __post_init__(self):
        for name in ("particles_per_window", "iterations_per_window", "windows"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or isinstance(value, bool) or value < 1:
                raise InputError(f"{name} must be an integer >= 1, got {value!r}")


def recursive_cost(model: RecursiveCostModel) -> int:
    """Target-score queries of the recursive estimator, ``(N_p * N_i) ** N_s``, as an exact int."""
    return (int(model.particles_per_window) * int(model.iterations_per_window)) ** int(model.windows)
