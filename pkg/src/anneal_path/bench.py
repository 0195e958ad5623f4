"""Experiment orchestration: configs, presets, runs, reports and comparisons.

An experiment config is one JSON document::

    {
      "target":   {"preset": "rings40"}            # or {"weights", "means", "covariances"}
      "path":     {"kind": "dilation"}             # geometric | convolutional_exact_gmm |
                                                   # convolutional_mc | none
      "schedule": {"kind": "linear"}               # or {"kind": "exponential", "T": 2.0}
      "run":      {"particles": 1000, "iterations": 10000,
                   "step": {"kind": "position_adaptive", "h": 0.001, "c": 1.0},
                   "init": {"kind": "dirac_at_origin"}, "checkpoint_stride": 1000},
      "metrics":  {"enabled": ["ksd", "mmd", "kl", "rev_kl", "ot", "mms"],
                   "ksd": {"beta": 0.5}, "mmd": {"bandwidth": 1.0}, "kl": {"k": 1},
                   "ot": {"epsilon": 0.05, "max_iter": 2000, "tol": 1e-6},
                   "reference_samples": null, "standardize": false},
      "output":   {"dir": "out", "label": "dilation"},
      "seed": 0
    }

Every section except ``target`` is optional.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from anneal_path.errors import InputError, NumericalError
from anneal_path.gaussian import GaussianMixture, GaussianParams
from anneal_path.metrics import METRIC_NAMES, DiagnosticsReport, MetricConfig, evaluate, mms, mode_counts, occupied_modes
from anneal_path.paths import PATH_VARIANTS, MCEstimatorConfig, RecursiveCostModel, Schedule, recursive_cost
from anneal_path.sampler import InitSpec, RunConfig, StepPolicy, run_annealed, run_plain, write_checkpoint

PRESETS = ("grid16", "rings40")
_SECTIONS = {"target", "path", "schedule", "run", "metrics", "output", "seed"}


class ConfigError(InputError):
    """Invalid experiment configuration; ``line`` points into the source text when known."""

    def __init__(self, message: str, line: int | None = None, source: str | None = None):
        where = f"{source or 'config'}:{line}: " if line is not None else f"{source or 'config'}: "
        super().__init__(where + message)
        self.line = line


def load_preset(name: str) -> GaussianMixture:
    """The frozen mixture layout of a preset."""
    if name not in PRESETS:
        raise InputError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}")
    data = json.loads(resources.files("anneal_path").joinpath("data", f"{name}.json").read_text())
    return GaussianMixture.from_dict(data)


def preset_description(name: str) -> str:
    if name not in PRESETS:
        raise InputError(f"unknown preset {name!r}")
    data = json.loads(resources.files("anneal_path").joinpath("data", f"{name}.json").read_text())
    return data["description"]


def preset_config(name: str, path: str = "dilation", seed: int = 0) -> dict:
    """Experiment template for a preset: 1000 particles, 10 000 iterations,
    base step 0.001, linear schedule, position-adaptive steps.

    ``path`` may be any path variant or ``"none"`` for plain ULA. Every path
    except dilation starts from a standard normal.
    """
    if name not in PRESETS:
        raise InputError(f"unknown preset {name!r}")
    init = {"kind": "dirac_at_origin"} if path == "dilation" else {"kind": "gaussian"}
    return {
        "target": {"preset": name},
        "path": {"kind": path},
        "schedule": {"kind": "linear"},
        "run": {
            "particles": 1000,
            "iterations": 10_000,
            "step": {"kind": "position_adaptive", "h": 0.001, "c": 1.0},
            "init": init,
            "checkpoint_stride": 1000,
        },
        "metrics": {
            "enabled": list(METRIC_NAMES),
            "standardize": name == "rings40",
        },
        "output": {"label": path if path != "none" else "plain"},
        "seed": seed,
    }


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    """A validated experiment; ``resolved`` is the config with all defaults filled in."""

    target: GaussianMixture
    run: RunConfig
    metrics: tuple[str, ...]
    metric_config: MetricConfig
    reference_samples: int
    standardize: bool
    output_dir: str | None
    label: str
    resolved: dict


def _line_of(text: str | None, key: str) -> int | None:
    if not text:
        return None
    pattern = re.compile(r'"' + re.escape(key) + r'"\s*:')
    for i, line in enumerate(text.splitlines(), start=1):
        if pattern.search(line):
            return i
    return None


class _Reader:
    """Typed access to one config section with line-numbered errors."""

    def __init__(self, data, section: str, text: str | None, source: str | None):
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ConfigError(f"section '{section}' must be an object", _line_of(text, section), source)
        self.data, self.section, self.text, self.source = data, section, text, source
        self.used: set[str] = set()

    def fail(self, key: str, message: str):
        raise ConfigError(f"{self.section}.{key}: {message}", _line_of(self.text, key), self.source)

    def get(self, key: str, kind, default=None, check=None, required=False):
        self.used.add(key)
        if key not in self.data or self.data[key] is None:
            if required:
                raise ConfigError(f"{self.section}: missing required key '{key}'", _line_of(self.text, self.section), self.source)
            return default
        value = self.data[key]
        if kind is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if kind is not None and (not isinstance(value, kind) or (kind is int and isinstance(value, bool))):
            self.fail(key, f"expected {getattr(kind, '__name__', kind)}, got {type(value).__name__}")
        if check is not None and not check(value):
            self.fail(key, f"invalid value {value!r}")
        return value

    def sub(self, key: str) -> _Reader:
        self.used.add(key)
        return _Reader(self.data.get(key), f"{self.section}.{key}", self.text, self.source)

    def finish(self):
        extra = sorted(set(self.data) - self.used)
        if extra:
            self.fail(extra[0], "unknown key")


def parse_config(data: dict, text: str | None = None, source: str | None = None) -> ExperimentConfig:
    """Validate a config dict (``text`` is the raw JSON, used for line numbers).

    Raises:
        ConfigError: On any structural or semantic problem.
    """
    if not isinstance(data, dict):
        raise ConfigError("top level must be a JSON object", 1, source)
    extra = sorted(set(data) - _SECTIONS)
    if extra:
        raise ConfigError(f"unknown section '{extra[0]}'", _line_of(text, extra[0]), source)
    if "target" not in data:
        raise ConfigError("missing required section 'target'", None, source)
    try:
        return _parse(data, text, source)
    except ConfigError:
        raise
    except InputError as exc:
        raise ConfigError(str(exc), None, source) from exc


def _parse(data: dict, text: str | None, source: str | None) -> ExperimentConfig:
    seed = data.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError("seed must be a non-negative integer", _line_of(text, "seed"), source)

    tgt = _Reader(data["target"], "target", text, source)
    preset = tgt.get("preset", str, check=lambda v: v in PRESETS)
    if preset is not None:
        tgt.finish()
        target = load_preset(preset)
        target_resolved = {"preset": preset}
    else:
        try:
            target = GaussianMixture.from_dict(tgt.data)
        except InputError as exc:
            raise ConfigError(f"target: {exc}", _line_of(text, "target"), source) from exc
        target_resolved = target.to_dict()
    d = target.dim

    pth = _Reader(data.get("path"), "path", text, source)
    kind = pth.get("kind", str, "dilation", check=lambda v: v in PATH_VARIANTS or v == "none")
    proposal = None
    prop_raw = pth.get("proposal", dict)
    if prop_raw is not None:
        try:
            proposal = GaussianParams(prop_raw.get("mean", np.zeros(d)), prop_raw.get("covariance", 1.0))
        except (InputError, AttributeError) as exc:
            pth.fail("proposal", str(exc))
        if proposal.dim != d:
            pth.fail("proposal", "dimension does not match the target")
    inner = None
    if kind == "convolutional_mc":
        inn = pth.sub("inner")
        inner = MCEstimatorConfig(
            n_samples=inn.get("n_samples", int, 1000, check=lambda v: v >= 1),
            n_iter=inn.get("n_iter", int, 100, check=lambda v: v >= 2),
            step=inn.get("step", float, 0.2, check=lambda v: 0 < v < 2),
            burn_in=inn.get("burn_in", float, 0.5, check=lambda v: 0 <= v < 1),
        )
        inn.finish()
    else:
        pth.used.add("inner")
    pth.finish()

    sch = _Reader(data.get("schedule"), "schedule", text, source)
    sched_kind = sch.get("kind", str, "linear", check=lambda v: v in ("linear", "exponential"))
    horizon = sch.get("T", float, check=lambda v: v > 0, required=sched_kind == "exponential")
    sch.finish()
    schedule = Schedule(sched_kind, horizon)

    rn = _Reader(data.get("run"), "run", text, source)
    n = rn.get("particles", int, 1000, check=lambda v: v >= 1)
    iters = rn.get("iterations", int, 10_000, check=lambda v: v >= 0)
    stride = rn.get("checkpoint_stride", int, 1000, check=lambda v: v >= 1)
    st = rn.sub("step")
    step = StepPolicy(
        kind=st.get("kind", str, "position_adaptive", check=lambda v: v in ("fixed", "time_adaptive", "position_adaptive")),
        h=st.get("h", float, 1e-3, check=lambda v: v > 0 and math.isfinite(v)),
        c=st.get("c", float, 1.0, check=lambda v: v > 0),
    )
    st.finish()
    ini = rn.sub("init")
    default_init = "dirac_at_origin" if kind == "dilation" else "gaussian"
    init_kind = ini.get("kind", str, default_init, check=lambda v: v in ("dirac_at_origin", "gaussian", "uniform"))
    init = InitSpec(
        kind=init_kind,
        mean=tuple(ini.get("mean", list)) if "mean" in ini.data else None,
        covariance=ini.get("covariance", (float, int, list)),
        low=ini.get("low", float, -1.0),
        high=ini.get("high", float, 1.0),
    )
    ini.finish()
    rn.finish()
    if kind == "dilation" and init.kind != "dirac_at_origin":
        raise ConfigError("the dilation path must start from dirac_at_origin", _line_of(text, "init"), source)
    run = RunConfig(
        n_particles=n,
        n_iter=iters,
        step=step,
        schedule=schedule,
        path=None if kind == "none" else kind,
        proposal=proposal,
        inner=inner,
        init=init,
        checkpoint_stride=stride,
        seed=seed,
    )

    met = _Reader(data.get("metrics"), "metrics", text, source)
    enabled = met.get("enabled", list, list(METRIC_NAMES))
    bad = [m for m in enabled if m not in METRIC_NAMES]
    if bad:
        met.fail("enabled", f"unknown metric {bad[0]!r}")
    enabled = tuple(m for m in METRIC_NAMES if m in enabled)
    ref_n = met.get("reference_samples", int, n, check=lambda v: v >= 2)
    standardize = met.get("standardize", bool, False)
    k_sec, m_sec, l_sec, o_sec = met.sub("ksd"), met.sub("mmd"), met.sub("kl"), met.sub("ot")
    mcfg = MetricConfig(
        ksd_beta=k_sec.get("beta", float, 0.5, check=lambda v: 0 <= v <= 1),
        mmd_bandwidth=m_sec.get("bandwidth", float, 1.0, check=lambda v: v > 0),
        knn_k=l_sec.get("k", int, 1, check=lambda v: v >= 1),
        ot_epsilon=o_sec.get("epsilon", float, 0.05, check=lambda v: v > 0),
        ot_max_iter=o_sec.get("max_iter", int, 2000, check=lambda v: v >= 1),
        ot_tol=o_sec.get("tol", float, 1e-6, check=lambda v: v > 0),
    )
    for sec in (k_sec, m_sec, l_sec, o_sec, met):
        sec.finish()

    out = _Reader(data.get("output"), "output", text, source)
    out_dir = out.get("dir", str)
    label = out.get("label", str, kind if kind != "none" else "plain")
    out.finish()

    resolved = {
        "target": target_resolved,
        "path": {"kind": kind, **({"proposal": proposal.to_dict()} if proposal is not None else {}),
                 **({"inner": inner.to_dict()} if inner is not None else {})},
        "schedule": schedule.to_dict(),
        "run": {
            "particles": n,
            "iterations": iters,
            "step": step.to_dict(),
            "init": init.to_dict(),
            "checkpoint_stride": stride,
        },
        "metrics": {
            "enabled": list(enabled),
            "ksd": {"beta": mcfg.ksd_beta},
            "mmd": {"bandwidth": mcfg.mmd_bandwidth},
            "kl": {"k": mcfg.knn_k},
            "ot": {"epsilon": mcfg.ot_epsilon, "max_iter": mcfg.ot_max_iter, "tol": mcfg.ot_tol},
            "reference_samples": ref_n,
            "standardize": standardize,
        },
        "output": {"dir": out_dir, "label": label},
        "seed": seed,
    }
    return ExperimentConfig(target, run, enabled, mcfg, ref_n, standardize, out_dir, label, resolved)


def load_config(path, seed: int | None = None) -> ExperimentConfig:
    """Read and validate a JSON config file, optionally overriding its seed."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", None, str(path)) from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON: {exc.msg} (column {exc.colno})", exc.lineno, str(path)) from exc
    if seed is not None:
        if not isinstance(data, dict):
            raise ConfigError("top level must be a JSON object", 1, str(path))
        data["seed"] = seed
    return parse_config(data, text, str(path))


@dataclass
class ExperimentResult:
    report: DiagnosticsReport
    trajectory: list
    files: dict[str, Path]


def _derived_rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, stream])))


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_manifest(out: Path, cfg: ExperimentConfig, files: dict[str, Path], status: dict) -> Path:
    manifest = {
        "config": cfg.resolved,
        "status": status,
        "files": {name: {"sha256": _sha256(p), "bytes": p.stat().st_size} for name, p in sorted(files.items())},
    }
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def run_experiment(cfg: ExperimentConfig, out_dir=None, jobs: int = 1) -> ExperimentResult:
    """Run one configured experiment and write its artifacts.

    Writes ``particles_<k>.csv`` / ``particles_<k>.json`` per checkpoint,
    ``metrics.csv`` and ``metrics.json`` when any metric is enabled,
    ``final.svg`` for planar targets, and ``manifest.json`` with the resolved
    config and a SHA-256 of every file.

    Raises:
        InputError: If no output directory is given.
        NumericalError: If the sampler diverges; the checkpoints recorded up
            to the failure and the manifest are still written.
    """
    out_dir = out_dir if out_dir is not None else cfg.output_dir
    if out_dir is None:
        raise InputError("no output directory given")
    out = Path(out_dir)
    run_cfg = RunConfig(**{**cfg.run.__dict__, "jobs": max(1, int(jobs))})
    out.mkdir(parents=True, exist_ok=True)
    files: dict[str, Path] = {}

    def save_checkpoints(trajectory):
        for cloud in trajectory:
            csv_p, json_p = write_checkpoint(cloud, out)
            files[csv_p.name] = csv_p
            files[json_p.name] = json_p

    try:
        trajectory = run_annealed(run_cfg, cfg.target) if run_cfg.path else run_plain(run_cfg, cfg.target)
    except NumericalError as exc:
        save_checkpoints(exc.trajectory or [])
        _write_manifest(out, cfg, files, {"ok": False, "error": str(exc), "iteration": exc.iteration, "particle": exc.particle})
        raise
    save_checkpoints(trajectory)

    report = DiagnosticsReport(cfg.label, cfg.metrics)
    final = trajectory[-1].positions
    report.notes = {
        "occupied_modes": int(np.count_nonzero(occupied_modes(final, cfg.target))),
        "n_modes": cfg.target.n_components,
        "final_mode_counts": mode_counts(final, cfg.target).tolist(),
        "score_queries": trajectory[-1].score_queries,
    }
    if cfg.metrics:
        reference = cfg.target.sample(cfg.reference_samples, _derived_rng(cfg.run.seed, 1))
        if cfg.standardize:
            centre, spread = reference.mean(axis=0), reference.std(axis=0)
            score = cfg.target.score

            def std_score(z, _c=centre, _s=spread):
                return _s * score(_c + _s * z)

            ref_m, score_m = (reference - centre) / spread, std_score
        else:
            centre, spread = 0.0, 1.0
            ref_m, score_m = reference, cfg.target.score
        sample_metrics = tuple(m for m in cfg.metrics if m != "mms")
        for cloud in trajectory:
            # mode assignment stays in target coordinates
            values = evaluate(
                (cloud.positions - centre) / spread,
                metrics=sample_metrics,
                target_score=score_m,
                reference=ref_m,
                cfg=cfg.metric_config,
            )
            if "mms" in cfg.metrics:
                values["mms"] = mms(cloud.positions, cfg.target)
            report.rows.append({"iteration": cloud.iteration, **{m: values[m] for m in cfg.metrics}})
        (out / "metrics.csv").write_text(report.to_csv())
        (out / "metrics.json").write_text(report.to_json())
        files["metrics.csv"] = out / "metrics.csv"
        files["metrics.json"] = out / "metrics.json"
    if cfg.target.dim == 2:
        (out / "final.svg").write_text(scatter_svg(final, cfg.target, title=f"{cfg.label}, iteration {trajectory[-1].iteration}"))
        files["final.svg"] = out / "final.svg"
    files["manifest.json"] = _write_manifest(out, cfg, files, {"ok": True})
    return ExperimentResult(report, trajectory, files)


def compare_runs(reports: list[DiagnosticsReport]) -> tuple[str, dict]:
    """Merge reports that share a checkpoint grid.

    Returns a CSV with one column group per run (``<label>:<metric>``) plus
    differences to the first run (``<label>-<first>:<metric>``), and a summary
    of the final-checkpoint values keyed by label.

    Raises:
        InputError: With fewer than two reports, mismatched checkpoint grids or
            no metric common to all reports.
    """
    if len(reports) < 2:
        raise InputError("comparison needs at least two reports")
    grid = reports[0].iterations
    for r in reports[1:]:
        if r.iterations != grid:
            raise InputError(f"report {r.label!r} has a different checkpoint grid")
    common = [m for m in reports[0].metrics if all(m in r.metrics for r in reports)]
    if not common:
        raise InputError("reports share no metric")
    labels = []
    for i, r in enumerate(reports):
        label = r.label
        while label in labels:
            label = f"{r.label}#{i}"
        labels.append(label)
    header = ["iteration"]
    header += [f"{lab}:{m}" for lab in labels for m in common]
    header += [f"{lab}-{labels[0]}:{m}" for lab in labels[1:] for m in common]
    lines = [",".join(header)]
    for row_i, it in enumerate(grid):
        vals = [str(it)]
        vals += [repr(float(r.rows[row_i][m])) for r in reports for m in common]
        vals += [repr(_difference(r.rows[row_i][m], reports[0].rows[row_i][m])) for r in reports[1:] for m in common]
        lines.append(",".join(vals))
    summary = {
        "iteration": grid[-1] if grid else None,
        "metrics": common,
        "final": {lab: {m: _finite_or_none(r.rows[-1][m]) for m in common} for lab, r in zip(labels, reports)},
    }
    return "\n".join(lines) + "\n", summary


def _difference(a, b) -> float:
    a, b = float(a), float(b)
    if a == b or (math.isnan(a) and math.isnan(b)):
        return 0.0
    return a - b


def _finite_or_none(v):
    v = float(v)
    return v if math.isfinite(v) else None


def estimate_mc_cost(
    models: list[RecursiveCostModel], dilation_iterations: int | None = None, dilation_particles: int | None = None
) -> list[dict]:
    """Score-query counts of the recursive Monte Carlo estimator per configuration,
    followed by the dilation sampler's ``iterations * particles`` for contrast."""
    if not models:
        raise InputError("need at least one cost model")
    rows = [
        {
            "method": "recursive_mc",
            "N_p": m.particles_per_window,
            "N_i": m.iterations_per_window,
            "N_s": m.windows,
            "score_queries": recursive_cost(m),
        }
        for m in models
    ]
    if dilation_iterations is not None and dilation_particles is not None:
        rows.append(
            {
                "method": "dilation",
                "iterations": dilation_iterations,
                "particles": dilation_particles,
                "score_queries": int(dilation_iterations) * int(dilation_particles),
            }
        )
    return rows


def cost_table_csv(rows: list[dict]) -> str:
    lines = ["method,N_p,N_i,N_s,iterations,particles,score_queries"]
    for r in rows:
        lines.append(
            ",".join(
                str(r.get(k, "")) for k in ("method", "N_p", "N_i", "N_s", "iterations", "particles", "score_queries")
            )
        )
    return "\n".join(lines) + "\n"


def parse_cost_config(data) -> tuple[list[RecursiveCostModel], int | None, int | None]:
    """``{"models": [{"particles_per_window", "iterations_per_window", "windows"}, ...],
    "dilation": {"iterations", "particles"}}``."""
    if not isinstance(data, dict) or not isinstance(data.get("models"), list):
        raise ConfigError("cost config needs a 'models' list")
    models = []
    for i, m in enumerate(data["models"]):
        try:
            models.append(RecursiveCostModel(m["particles_per_window"], m["iterations_per_window"], m["windows"]))
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"models[{i}]: needs particles_per_window, iterations_per_window, windows") from exc
        except InputError as exc:
            raise ConfigError(f"models[{i}]: {exc}") from exc
    dil = data.get("dilation") or {}
    return models, dil.get("iterations"), dil.get("particles")


def scatter_svg(points, gmm: GaussianMixture, title: str = "", size: int = 480) -> str:
    """SVG of ``points`` (one ``<circle class="particle">`` each) over contour
    lines of the mixture log-density. Planar targets only."""
    import contourpy

    pts = np.asarray(points, dtype=float)
    if gmm.dim != 2 or pts.ndim != 2 or pts.shape[1] != 2:
        raise InputError("scatter plots need planar data")
    spread = np.sqrt(np.max(gmm.covariances[:, [0, 1], [0, 1]], axis=1))
    lo = np.min(gmm.means - 3 * spread[:, None], axis=0)
    hi = np.max(gmm.means + 3 * spread[:, None], axis=0)
    finite = pts[np.all(np.isfinite(pts), axis=1)]
    if finite.size:
        lo, hi = np.minimum(lo, finite.min(axis=0)), np.maximum(hi, finite.max(axis=0))
    pad = 0.05 * (hi - lo)
    lo, hi = lo - pad, hi + pad
    margin = 20

    def to_px(xy):
        u = margin + (xy[..., 0] - lo[0]) / (hi[0] - lo[0]) * (size - 2 * margin)
        v = size - margin - (xy[..., 1] - lo[1]) / (hi[1] - lo[1]) * (size - 2 * margin)
        return u, v

    gx, gy = np.linspace(lo[0], hi[0], 160), np.linspace(lo[1], hi[1], 160)
    xx, yy = np.meshgrid(gx, gy)
    logp = gmm.log_density(np.column_stack([xx.ravel(), yy.ravel()])).reshape(xx.shape)
    top = float(np.max(logp))
    gen = contourpy.contour_generator(gx, gy, logp)
    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
        f'<text x="{margin}" y="14" font-size="12" font-family="sans-serif">{_xml_escape(title)}</text>',
        '<g class="contours" fill="none" stroke="#1f77b4" stroke-width="0.8">',
    ]
    for drop in (0.5, 2.0, 4.5):
        for line in gen.lines(top - drop):
            u, v = to_px(np.asarray(line))
            coords = " ".join(f"{a:.1f},{b:.1f}" for a, b in zip(u, v))
            parts.append(f'<polyline points="{coords}"/>')
    parts.append("</g>")
    parts.append('<g class="particles" fill="#d62728" fill-opacity="0.6">')
    u, v = to_px(np.where(np.isfinite(pts), pts, 0.0))
    for a, b in zip(u, v):
        parts.append(f'<circle class="particle" cx="{a:.2f}" cy="{b:.2f}" r="1.6"/>')
    parts.append("</g>")
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _xml_escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def load_report(path) -> DiagnosticsReport:
    try:
        return DiagnosticsReport.from_dict(json.loads(Path(path).read_text()))
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read report {path}: {exc}") from exc


def with_overrides(base: dict, **sections) -> dict:
    """Deep-copied config with top-level sections merged one level deep."""
    out = copy.deepcopy(base)
    for key, value in sections.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = {**out[key], **value}
        else:
            out[key] = value
    return out
