"""Convergence diagnostics between a particle cloud and a target.

KSD only needs the target's score; MMD, the k-NN KL estimates and the
Sinkhorn OT cost compare the cloud with reference samples; MMS counts
particles per mixture component.

Quadratic kernel sums are evaluated in row blocks; each row is reduced by
numpy and the row sums are combined with ``math.fsum``, so the value does not
depend on the block size.
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Callable, NamedTuple

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import logsumexp

from anneal_path.errors import InputError
from anneal_path.gaussian import GaussianMixture

METRIC_NAMES = ("ksd", "mmd", "kl", "rev_kl", "ot", "mms")
_BLOCK = 512


@dataclass(frozen=True)
class MetricConfig:
    """Kernel and solver settings for the diagnostics.

    Attributes:
        ksd_beta: Exponent of the inverse multiquadric base kernel
            ``(1 + |x - y|^2)^(-beta)``.
        mmd_bandwidth: ``h`` in the Gaussian kernel ``exp(-|x - y|^2 / (2 h))``.
        knn_k: Neighbour order of the KL estimator.
        ot_epsilon: Entropic regularisation, relative to the standardised cost.
        ot_max_iter: Sinkhorn iteration cap.
        ot_tol: Stop when the L1 row-marginal violation falls below this.
        ot_standardize: Divide both point sets by the reference set's mean
            pairwise distance before solving (the result is scaled back).
        mms_rule: Particle-to-mode assignment; only ``nearest_mean``.
    """

    ksd_beta: float = 0.5
    mmd_bandwidth: float = 1.0
    knn_k: int = 1
    ot_epsilon: float = 0.05
    ot_max_iter: int = 2000
    ot_tol: float = 1e-6
    ot_standardize: bool = True
    mms_rule: str = "nearest_mean"

    def __post_init__(self):
        if not 0 <= self.ksd_beta <= 1:
            raise InputError("IMQ exponent must lie in [0, 1]")
        if not self.mmd_bandwidth > 0:
            raise InputError("MMD bandwidth must be positive")
        if self.knn_k < 1:
            raise InputError("k must be at least 1")
        if not self.ot_epsilon > 0:
            raise InputError("OT regularisation must be positive")
        if self.ot_max_iter < 1 or not self.ot_tol > 0:
            raise InputError("invalid Sinkhorn stopping rule")
        if self.mms_rule != "nearest_mean":
            raise InputError(f"unknown MMS assignment rule {self.mms_rule!r}")

    def to_dict(self) -> dict:
        return asdict(self)


def _points(a, name: str, min_rows: int = 1) -> np.ndarray:
    arr = np.asarray(a, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise InputError(f"{name} must be an (n, d) array")
    if arr.shape[0] < min_rows:
        raise InputError(f"{name} needs at least {min_rows} rows, got {arr.shape[0]}")
    return arr


def _sq_dists(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # explicit differences rather than the |a|^2 - 2ab + |b|^2 expansion: exact zeros on the diagonal
    out = np.zeros((a.shape[0], b.shape[0]))
    for j in range(a.shape[1]):
        out += np.square(a[:, j, None] - b[None, :, j])
    return out


def _kernel_row_sums(a: np.ndarray, b: np.ndarray, kernel: Callable) -> list[float]:
    rows = []
    for start in range(0, a.shape[0], _BLOCK):
        rows.extend(np.sum(kernel(a[start : start + _BLOCK], b), axis=1).tolist())
    return rows


def ksd(cloud, target_score: Callable, cfg: MetricConfig = MetricConfig()) -> float:
    """Kernel Stein discrepancy of ``cloud`` against the target with score ``target_score``.

    V-statistic (all ``n^2`` pairs, diagonal included) of the Langevin Stein
    kernel built on the IMQ base kernel; returns the square root of the
    clamped-at-zero value.
    """
    x = _points(cloud, "cloud")
    n, d = x.shape
    s = np.asarray(target_score(x), dtype=float).reshape(n, d)
    beta = cfg.ksd_beta

    def stein(xa, sa_idx):
        sa = s[sa_idx]
        diff = np.stack([xa[:, j, None] - x[None, :, j] for j in range(d)], axis=2)  # (b, n, d)
        r2 = np.sum(np.square(diff), axis=2)
        u = 1.0 + r2
        base = u ** (-beta)
        g = 2.0 * beta * u ** (-beta - 1.0)  # grad_y K' = g * (x - y) = -grad_x K'
        ss = sa @ s.T if d > 1 else sa * s.T
        sx_diff = np.einsum("bj,bnj->bn", sa, diff)
        sy_diff = np.einsum("nj,bnj->bn", s, diff)
        trace = 2.0 * beta * d * u ** (-beta - 1.0) - 4.0 * beta * (beta + 1.0) * r2 * u ** (-beta - 2.0)
        return ss * base + g * sx_diff - g * sy_diff + trace

    rows = []
    for start in range(0, n, _BLOCK):
        idx = slice(start, start + _BLOCK)
        rows.extend(np.sum(stein(x[idx], idx), axis=1).tolist())
    value = math.fsum(rows) / (n * n)
    return math.sqrt(max(0.0, value))


def mmd(cloud, reference, cfg: MetricConfig = MetricConfig()) -> float:
    """Maximum mean discrepancy with the Gaussian kernel.

    Within-set terms are U-statistics (diagonal excluded), the cross term is a
    V-statistic; the squared value is clamped at zero before the square root,
    which makes ``mmd(A, A)`` exactly zero.
    """
    x = _points(cloud, "cloud", 2)
    y = _points(reference, "reference", 2)
    if x.shape[1] != y.shape[1]:
        raise InputError("cloud and reference dimensions differ")
    two_h = 2.0 * cfg.mmd_bandwidth

    def kern(a, b):
        return np.exp(-_sq_dists(a, b) / two_h)

    n, m = x.shape[0], y.shape[0]
    kxx = (math.fsum(_kernel_row_sums(x, x, kern)) - n) / (n * (n - 1))
    kyy = (math.fsum(_kernel_row_sums(y, y, kern)) - m) / (m * (m - 1))
    if x.shape[0] <= y.shape[0]:
        kxy = math.fsum(_kernel_row_sums(x, y, kern)) / (n * m)
    else:
        kxy = math.fsum(_kernel_row_sums(y, x, kern)) / (n * m)
    return math.sqrt(max(0.0, kxx + kyy - 2.0 * kxy))


class KLEstimate(NamedTuple):
    kl: float
    rev_kl: float
    excluded: int


def _knn_divergence(x: np.ndarray, y: np.ndarray, k: int) -> tuple[float, int]:
    n, d = x.shape
    m = y.shape[0]
    within = cKDTree(x).query(x, k=k + 1)[0]
    within = within[:, k] if within.ndim == 2 else within
    across = cKDTree(y).query(x, k=k)[0]
    across = across[:, k - 1] if across.ndim == 2 else across
    ok = (within > 0) & (across > 0)
    excluded = int(n - np.count_nonzero(ok))
    if not np.any(ok):
        return math.nan, excluded
    log_ratio = np.log(across[ok]) - np.log(within[ok])
    return float(d * np.mean(log_ratio) + math.log(m / (n - 1))), excluded


def knn_kl(cloud, reference, cfg: MetricConfig = MetricConfig()) -> KLEstimate:
    """k-nearest-neighbour estimates of ``KL(cloud || reference)`` and its reverse.

    Uses ``(d/n) sum_i log(s_k(x_i) / r_k(x_i)) + log(m / (n - 1))`` with
    ``r_k`` the within-sample and ``s_k`` the cross-sample k-th neighbour
    distance. Points whose neighbour distance is zero (duplicates) are left
    out; ``excluded`` counts them over both directions. Estimates may be
    slightly negative.
    """
    k = cfg.knn_k
    x = _points(cloud, "cloud", k + 1)
    y = _points(reference, "reference", k + 1)
    if x.shape[1] != y.shape[1]:
        raise InputError("cloud and reference dimensions differ")
    kl, ex1 = _knn_divergence(x, y, k)
    rev, ex2 = _knn_divergence(y, x, k)
    if ex1 or ex2:
        warnings.warn(f"k-NN KL: {ex1 + ex2} points with zero neighbour distance were excluded", RuntimeWarning)
    return KLEstimate(kl, rev, ex1 + ex2)


@dataclass(frozen=True)
class SinkhornResult:
    """Entropic OT estimate.

    ``value`` is the square root of the transport cost of the entropic plan,
    in the input units; it upper-bounds the unregularised 2-Wasserstein
    distance. ``epsilon`` is the regularisation used on the standardised cost.
    """

    value: float
    converged: bool
    n_iter: int
    epsilon: float
    marginal_error: float


def _mean_pairwise_distance(y: np.ndarray, cap: int = 2000) -> float:
    y = y[:cap]
    if y.shape[0] < 2:
        return 0.0
    total = math.fsum(np.sum(np.sqrt(_sq_dists(y[i : i + _BLOCK], y)), axis=1).sum() for i in range(0, y.shape[0], _BLOCK))
    return total / (y.shape[0] * (y.shape[0] - 1))


def sinkhorn_w2(cloud, reference, cfg: MetricConfig = MetricConfig()) -> SinkhornResult:
    """Entropic 2-Wasserstein estimate with log-domain Sinkhorn iterations.

    Uniform weights, squared Euclidean cost. Iterates until the row-marginal
    L1 violation is below ``cfg.ot_tol`` or ``cfg.ot_max_iter`` is reached;
    in the latter case ``converged`` is ``False`` and the current plan's
    cost is still reported.
    """
    x = _points(cloud, "cloud")
    y = _points(reference, "reference")
    if x.shape[1] != y.shape[1]:
        raise InputError("cloud and reference dimensions differ")
    scale = _mean_pairwise_distance(y) if cfg.ot_standardize else 1.0
    if not scale > 0:
        scale = 1.0
    cost = _sq_dists(x / scale, y / scale)
    n, m = cost.shape
    eps = cfg.ot_epsilon
    log_a = np.full(n, -math.log(n))
    log_b = np.full(m, -math.log(m))
    f = np.zeros(n)
    g = np.zeros(m)
    neg_c = -cost / eps
    err = math.inf
    it = 0
    converged = False
    while it < cfg.ot_max_iter:
        it += 1
        f = -eps * logsumexp(neg_c + (g / eps + log_b)[None, :], axis=1)
        g = -eps * logsumexp(neg_c + (f / eps + log_a)[:, None], axis=0)
        if it % 5 == 0 or it == cfg.ot_max_iter:
            log_p = neg_c + (f / eps + log_a)[:, None] + (g / eps + log_b)[None, :]
            err = float(np.sum(np.abs(np.exp(logsumexp(log_p, axis=1)) - np.exp(log_a))))
            if err < cfg.ot_tol:
                converged = True
                break
    log_p = neg_c + (f / eps + log_a)[:, None] + (g / eps + log_b)[None, :]
    transport = math.fsum(np.sum(np.exp(log_p) * cost, axis=1).tolist())
    return SinkhornResult(
        value=scale * math.sqrt(max(0.0, transport)),
        converged=converged,
        n_iter=it,
        epsilon=eps,
        marginal_error=err,
    )


def assign_modes(cloud, gmm: GaussianMixture) -> np.ndarray:
    """Index of the nearest component mean (Euclidean) for every particle."""
    x = _points(cloud, "cloud")
    return np.argmin(_sq_dists(x, gmm.means), axis=1)


def mode_counts(cloud, gmm: GaussianMixture) -> np.ndarray:
    return np.bincount(assign_modes(cloud, gmm), minlength=gmm.n_components)


def mms(cloud, gmm: GaussianMixture) -> float:
    """Multimodality score: RMSE between per-mode particle counts and ``w_m * n``."""
    x = _points(cloud, "cloud")
    actual = mode_counts(x, gmm)
    expected = gmm.weights * x.shape[0]
    return math.sqrt(math.fsum(np.square(actual - expected).tolist()) / gmm.n_components)


def occupied_modes(cloud, gmm: GaussianMixture, radius: float = 3.0) -> np.ndarray:
    """Boolean mask of components with at least one particle within ``radius``
    component standard deviations (Mahalanobis distance) of their mean."""
    x = _points(cloud, "cloud")
    occupied = np.zeros(gmm.n_components, dtype=bool)
    for m, comp in enumerate(gmm.components):
        z = np.einsum("ij,nj->ni", comp.whiten, x - comp.mean)
        occupied[m] = bool(np.any(np.sum(z * z, axis=1) <= radius * radius))
    return occupied


@dataclass
class DiagnosticsReport:
    """Per-checkpoint metric values of one run.

    ``rows`` holds one dict per checkpoint with ``iteration`` plus one entry
    per name in ``metrics``.
    """

    label: str
    metrics: tuple[str, ...]
    rows: list[dict] = field(default_factory=list)
    notes: dict = field(default_factory=dict)

    @property
    def iterations(self) -> list[int]:
        return [int(r["iteration"]) for r in self.rows]

    def final(self) -> dict:
        return dict(self.rows[-1]) if self.rows else {}

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["iteration", *self.metrics])
        for row in self.rows:
            writer.writerow([row["iteration"], *(_fmt(row[name]) for name in self.metrics)])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "metrics": list(self.metrics),
            "rows": [{k: _json_value(v) for k, v in r.items()} for r in self.rows],
            "notes": self.notes,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> DiagnosticsReport:
        try:
            rows = [{k: (math.nan if v is None else v) for k, v in r.items()} for r in data["rows"]]
            return cls(data.get("label", "run"), tuple(data["metrics"]), rows, data.get("notes", {}))
        except (KeyError, TypeError) as exc:
            raise InputError("not a diagnostics report") from exc


def _fmt(v) -> str:
    return repr(float(v))


def _json_value(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def evaluate(
    cloud,
    *,
    metrics=METRIC_NAMES,
    target_score: Callable | None = None,
    reference=None,
    gmm: GaussianMixture | None = None,
    cfg: MetricConfig = MetricConfig(),
) -> dict:
    """Compute the requested metrics for one cloud; returns ``{name: value}``."""
    out = {}
    if "ksd" in metrics:
        out["ksd"] = ksd(cloud, target_score, cfg)
    if "mmd" in metrics:
        out["mmd"] = mmd(cloud, reference, cfg)
    if "kl" in metrics or "rev_kl" in metrics:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            est = knn_kl(cloud, reference, cfg)
        out["kl"], out["rev_kl"] = est.kl, est.rev_kl
    if "ot" in metrics:
        out["ot"] = sinkhorn_w2(cloud, reference, cfg).value
    if "mms" in metrics:
        out["mms"] = mms(cloud, gmm)
    return {name: out[name] for name in metrics}
