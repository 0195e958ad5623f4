"""Unadjusted Langevin engines, plain and annealed along a path.

One iteration of the annealed sampler is::

    lam = schedule(k * h)
    s = path_score(x, lam)
    h_eff = effective_step(policy, s)          # per particle
    x = x + h_eff * s + sqrt(2 * h_eff) * eps

Schedule time advances by the base step ``h`` only, so the annealing horizon
does not depend on how the adaptive policy rescales individual particles.

Noise comes from a single Philox stream keyed by the master seed and is drawn
as one ``(n, d)`` block per iteration, in particle order, before any parallel
work. Score evaluation may be split across threads by particle chunks; every
row is computed independently, so the trajectory is bit-identical for any
number of workers.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from anneal_path.errors import InputError, NumericalError
from anneal_path.gaussian import GaussianParams, TargetDensity
from anneal_path.paths import PATH_VARIANTS, MCEstimatorConfig, PathScore, Schedule

STEP_KINDS = ("fixed", "time_adaptive", "position_adaptive")
INIT_KINDS = ("dirac_at_origin", "gaussian", "uniform")


@dataclass(frozen=True)
class StepPolicy:
    """Step-size rule.

    ``fixed`` uses ``h``; ``time_adaptive`` uses ``h`` divided by the cloud's
    mean squared score norm; ``position_adaptive`` uses
    ``h / max(c, |score(x)|)`` per particle, which caps the drift at ``h``
    when ``c = 1``.
    """

    kind: str = "position_adaptive"
    h: float = 1e-3
    c: float = 1.0

    def __post_init__(self):
        if self.kind not in STEP_KINDS:
            raise InputError(f"unknown step policy {self.kind!r}")
        if not (self.h > 0 and math.isfinite(self.h)):
            raise InputError(f"base step must be positive, got {self.h!r}")
        if not self.c > 0:
            raise InputError(f"step bound c must be positive, got {self.c!r}")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "h": self.h, "c": self.c}


def effective_step(policy: StepPolicy, score, k: int = 0):
    """Step size applied at iteration ``k`` given the score(s) there.

    ``score`` is one vector ``(d,)`` or a cloud ``(n, d)``. Returns a float for
    a single vector and an ``(n,)`` array for a cloud.
    """
    s = np.asarray(score, dtype=float)
    single = s.ndim == 1
    s2 = np.atleast_2d(s)
    n = s2.shape[0]
    if policy.kind == "fixed":
        out = np.full(n, policy.h)
    elif policy.kind == "time_adaptive":
        mean_sq = float(np.mean(np.sum(s2 * s2, axis=1)))
        out = np.full(n, policy.h / mean_sq if mean_sq > 0 else policy.h)
    else:
        norms = np.sqrt(np.sum(s2 * s2, axis=1))
        out = policy.h / np.maximum(policy.c, norms)
    if not np.all(out > 0):
        raise NumericalError("step size underflowed to zero; the score is too large")
    return float(out[0]) if single else out


def ula_step(x, score, h, noise):
    """``x + h * score + sqrt(2 h) * noise`` for one particle or a cloud.

    Raises:
        InputError: If a step size is not positive.
        NumericalError: If the result is not finite; ``particle`` holds the
            index of the first bad row.
    """
    x = np.asarray(x, dtype=float)
    h = np.asarray(h, dtype=float)
    if np.any(h <= 0):
        raise InputError("step sizes must be positive")
    if x.ndim == 2 and h.ndim == 1:
        h = h[:, None]
    out = x + h * np.asarray(score, dtype=float) + np.sqrt(2.0 * h) * np.asarray(noise, dtype=float)
    finite = np.isfinite(out)
    if not np.all(finite):
        bad = int(np.argmin(np.all(finite, axis=1))) if out.ndim == 2 else 0
        raise NumericalError(f"non-finite position for particle {bad}", particle=bad)
    return out


@dataclass(frozen=True)
class InitSpec:
    """Initial particle law.

    ``dirac_at_origin``: every particle at 0. ``gaussian``: ``N(mean, cov)``,
    defaulting to the standard normal. ``uniform``: independent coordinates
    on ``[low, high]``.
    """

    kind: str = "dirac_at_origin"
    mean: tuple | None = None
    covariance: object = None
    low: float = -1.0
    high: float = 1.0

    def __post_init__(self):
        if self.kind not in INIT_KINDS:
            raise InputError(f"unknown initialisation {self.kind!r}")
        if self.kind == "uniform" and not self.low < self.high:
            raise InputError("uniform initialisation needs low < high")

    def draw(self, n: int, dim: int, rng: np.random.Generator) -> np.ndarray:
        if self.kind == "dirac_at_origin":
            return np.zeros((n, dim))
        if self.kind == "uniform":
            return rng.uniform(self.low, self.high, size=(n, dim))
        mean = np.zeros(dim) if self.mean is None else self.mean
        cov = 1.0 if self.covariance is None else self.covariance
        return GaussianParams(mean, cov).sample(n, rng)

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "gaussian":
            if self.mean is not None:
                out["mean"] = list(self.mean)
            if self.covariance is not None:
                out["covariance"] = np.asarray(self.covariance).tolist()
        if self.kind == "uniform":
            out.update(low=self.low, high=self.high)
        return out


@dataclass(frozen=True)
class RunConfig:
    """Everything that defines one sampler run except the target.

    ``path`` is ``None`` for plain ULA, otherwise a variant name from
    ``PATH_VARIANTS``; ``proposal`` and ``inner`` are forwarded to
    :class:`~anneal_path.paths.PathScore`.
    """

    n_particles: int = 1000
    n_iter: int = 10_000
    step: StepPolicy = field(default_factory=StepPolicy)
    schedule: Schedule = field(default_factory=Schedule)
    path: str | None = "dilation"
    proposal: GaussianParams | None = None
    inner: MCEstimatorConfig | None = None
    init: InitSpec = field(default_factory=InitSpec)
    checkpoint_stride: int = 1000
    seed: int = 0
    jobs: int = 1

    def __post_init__(self):
        if self.n_particles < 1:
            raise InputError("need at least one particle")
        if self.n_iter < 0:
            raise InputError("iteration count must be non-negative")
        if self.checkpoint_stride < 1:
            raise InputError("checkpoint stride must be at least 1")
        if self.jobs < 1:
            raise InputError("jobs must be at least 1")
        if self.path is not None and self.path not in PATH_VARIANTS:
            raise InputError(f"unknown path {self.path!r}")
        if self.path == "dilation" and self.init.kind != "dirac_at_origin":
            raise InputError("the dilation path starts from a Dirac at the origin")

    def to_dict(self) -> dict:
        return {
            "particles": self.n_particles,
            "iterations": self.n_iter,
            "step": self.step.to_dict(),
            "schedule": self.schedule.to_dict(),
            "path": self.path,
            "proposal": None if self.proposal is None else self.proposal.to_dict(),
            "inner": None if self.inner is None else self.inner.to_dict(),
            "init": self.init.to_dict(),
            "checkpoint_stride": self.checkpoint_stride,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class ParticleCloud:
    """Snapshot of the particles after ``iteration`` updates.

    ``t`` is the accumulated schedule time (``iteration * h``) and ``lam`` the
    annealing level used at that iteration (1 for plain ULA).
    """

    positions: np.ndarray
    iteration: int
    t: float
    lam: float
    score_queries: int
    wall_time_ms: float
    seed: int

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    def sidecar(self) -> dict:
        return {
            "iteration": self.iteration,
            "t": self.t,
            "lambda": self.lam,
            "wall_time_ms": self.wall_time_ms,
            "score_query_count": self.score_queries,
        }


def _streams(seed: int) -> tuple[np.random.Generator, np.random.Generator, np.random.Generator]:
    init_ss, noise_ss, inner_ss = np.random.SeedSequence(seed).spawn(3)
    return (
        np.random.Generator(np.random.Philox(init_ss)),
        np.random.Generator(np.random.Philox(noise_ss)),
        np.random.Generator(np.random.Philox(inner_ss)),
    )


def _chunked(fn, x: np.ndarray, jobs: int, pool: ThreadPoolExecutor | None) -> np.ndarray:
    if pool is None or x.shape[0] < 2 * jobs:
        return fn(x)
    bounds = np.linspace(0, x.shape[0], jobs + 1).astype(int)
    parts = pool.map(fn, [x[a:b] for a, b in zip(bounds[:-1], bounds[1:])])
    return np.concatenate(list(parts), axis=0)


def _quiet(fn, *args):
    # overflow is reported as a NumericalError, not as warnings
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        return fn(*args)


def _run(config: RunConfig, target: TargetDensity, score_at, queries_per_point: int, lam_fixed: bool):
    init_rng, noise_rng, inner_rng = _streams(config.seed)
    x = config.init.draw(config.n_particles, target.dim, init_rng)
    h = config.step.h
    start = time.perf_counter()
    queries = 0

    def snapshot(k: int, lam: float) -> ParticleCloud:
        pos = x.copy()
        pos.setflags(write=False)
        return ParticleCloud(
            positions=pos,
            iteration=k,
            t=k * h,
            lam=lam,
            score_queries=queries,
            wall_time_ms=1000.0 * (time.perf_counter() - start),
            seed=config.seed,
        )

    first_lam = 1.0 if lam_fixed else config.schedule(0.0)
    trajectory = [snapshot(0, first_lam)]
    pool = ThreadPoolExecutor(max_workers=config.jobs) if config.jobs > 1 else None
    try:
        for k in range(1, config.n_iter + 1):
            lam = 1.0 if lam_fixed else config.schedule(k * h)
            noise = noise_rng.standard_normal(x.shape)
            s = _chunked(lambda chunk: _quiet(score_at, chunk, lam, inner_rng), x, config.jobs, pool)
            queries += queries_per_point * x.shape[0]
            try:
                with np.errstate(over="ignore", invalid="ignore"):
                    h_eff = effective_step(config.step, s, k)
                if not np.all(np.isfinite(s)):
                    bad = int(np.argmin(np.all(np.isfinite(s), axis=1)))
                    raise NumericalError(f"non-finite score for particle {bad}", particle=bad)
                x = ula_step(x, s, h_eff, noise)
            except NumericalError as exc:
                err = NumericalError(
                    f"run diverged at iteration {k}, particle {exc.particle} (lambda={lam:.6g})",
                    iteration=k,
                    particle=exc.particle,
                )
                err.trajectory = trajectory
                raise err from None
            if k % config.checkpoint_stride == 0 or k == config.n_iter:
                trajectory.append(snapshot(k, lam))
    finally:
        if pool is not None:
            pool.shutdown()
    return trajectory


def run_annealed(config: RunConfig, target: TargetDensity) -> list[ParticleCloud]:
    """Annealed ULA along ``config.path``; returns the checkpoint trajectory.

    The first entry is the initial cloud (iteration 0); further checkpoints
    follow every ``checkpoint_stride`` iterations, and the final iteration is
    always included.

    Raises:
        InputError: If the configuration is inconsistent with the target.
        NumericalError: If any particle becomes non-finite. The exception
            carries the iteration, the particle index and the checkpoints
            recorded so far.
    """
    if config.path is None:
        return run_plain(config, target)
    proposal = config.proposal
    if proposal is None and config.path in ("geometric", "convolutional_exact_gmm"):
        proposal = GaussianParams(np.zeros(target.dim), 1.0)
    path = PathScore(config.path, target, proposal, config.inner)
    if config.path == "dilation" and config.schedule(config.step.h) <= 0:
        raise InputError("the schedule must be positive from the first iteration on")

    if config.path == "convolutional_mc":
        def score_at(chunk, lam, rng):
            return path(chunk, lam, rng)
        if config.jobs > 1:
            # the inner chains share one random stream, so they cannot be split
            config = replace(config, jobs=1)
    else:
        def score_at(chunk, lam, rng):
            return path(chunk, lam)

    return _run(config, target, score_at, path.queries_per_point(), lam_fixed=False)


def run_plain(config: RunConfig, target: TargetDensity) -> list[ParticleCloud]:
    """Plain ULA on the target; same checkpointing and errors as :func:`run_annealed`.

    ``config.path`` and ``config.schedule`` are ignored and every checkpoint
    reports ``lam = 1``.
    """

    def score_at(chunk, lam, rng):
        return target.score(chunk)

    return _run(config, target, score_at, 1, lam_fixed=True)


def write_checkpoint(cloud: ParticleCloud, directory) -> tuple[Path, Path]:
    """Write ``particles_<k>.csv`` (columns ``x_1..x_d``) and its JSON sidecar."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    csv_path = directory / f"particles_{cloud.iteration}.csv"
    d = cloud.positions.shape[1]
    header = ",".join(f"x_{i + 1}" for i in range(d))
    lines = [header] + [",".join(repr(float(v)) for v in row) for row in cloud.positions]
    csv_path.write_text("\n".join(lines) + "\n")
    json_path = directory / f"particles_{cloud.iteration}.json"
    json_path.write_text(json.dumps(cloud.sidecar(), indent=2) + "\n")
    return csv_path, json_path


def read_checkpoint(csv_path) -> np.ndarray:
    return np.loadtxt(csv_path, delimiter=",", skiprows=1, ndmin=2)
