"""Experiment harness: configs, runners, metrics, statistics, sweeps.

An experiment is described by a plain-text INI config (sections
``[experiment]``, ``[schedule]``, ``[guidance]``, optional
``[degradation]``).  Unknown sections or keys are rejected.  The harness
resolves the prior, the observation operator, a ground-truth image and a
measurement, runs the configured sampler over a seed list, and reports
per-seed metrics plus aggregates:

  * residual ||A x_out - A x_gt|| (against y when no ground truth exists),
  * log-density of x_out under the exact restoration posterior,
  * the mixture component the output is assigned to and whether it
    matches the requested condition (the response-rate analog of a
    prompt-following metric),
  * PSNR against the ground truth when available.

``trajectory_stats`` turns recorded clean-estimate snapshots into
per-step convergence statistics; ``sweep`` repeats an experiment over a
grid of one guidance knob with shared seeds.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import configparser

import numpy as np

from .degrade import DegradationSpec, degradation_operator, synthesize_lq
from .diffusion import NoiseSchedule, make_linear_schedule
from .fileio import read_csv, read_manifest, read_pgm, write_csv, write_pgm
from .gmm import (
    GmmPrior,
    component_assign,
    condition_restrict,
    denoiser_from_prior,
    gmm_exact_posterior,
    gmm_sample,
)
from .guidance import (
    GuidanceConfig,
    Trajectory,
    TrajectoryStep,
    coarse_restore,
    ddnm_sample,
    dps_sample,
    mcs_sample,
    unguided_sample,
)
from .operators import LinearOperator, CompositeOperator, avgpool_op, gaussian_blur_op
from .priors import collision_prior, load_prior, scalar_pair_prior
from .wavelets import detail_energy

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "SeedResult",
    "RunReport",
    "load_experiment_config",
    "parse_operator_spec",
    "parse_prior_spec",
    "parse_seed_list",
    "parse_condition",
    "parse_ratio",
    "run_experiment",
    "trajectory_stats",
    "sweep",
    "SAMPLERS",
]

SAMPLERS = ("mcs", "dps", "ddnm", "unguided")


class ConfigError(ValueError):
    """Invalid experiment configuration (unknown key, bad value, missing file)."""


@dataclass
class ExperimentConfig:
    prior_spec: str = "collision:"
    operator_spec: str = "avgpool: s=8"
    sampler: str = "mcs"
    condition: tuple[str, ...] | None = None
    seeds: tuple[int, ...] = (0,)
    output_dir: str | None = None
    snapshot_stride: int = 5
    dump_snapshots: bool = False
    gt_spec: str = "component: first"
    measurement_noise: float = 0.0
    measurement_seed: int = 0
    restorer: str = "pinv"
    restorer_salt: int = 77
    restore_sigma: float = 0.0
    schedule_steps: int = 150
    beta_start: float = 1e-4
    beta_end: float = 0.02
    guidance: GuidanceConfig = field(default_factory=GuidanceConfig)
    degradation: DegradationSpec | None = None
    base_dir: Path = field(default_factory=Path)

    def __post_init__(self) -> None:
        if self.sampler not in SAMPLERS:
            raise ConfigError(f"sampler must be one of {SAMPLERS}, got {self.sampler!r}")
        if not self.seeds:
            raise ConfigError("seed list must be nonempty")
        if self.snapshot_stride < 1:
            raise ConfigError("snapshot_stride must be >= 1")
        if self.measurement_noise < 0.0:
            raise ConfigError("measurement_noise must be >= 0")
        if self.restore_sigma < 0.0:
            raise ConfigError("restore_sigma must be >= 0")
        if self.restorer != "pinv" and not self.restorer.startswith("sample"):
            raise ConfigError(
                f"restorer must be 'pinv', 'sample' or 'sample:LABEL', got {self.restorer!r}"
            )


@dataclass
class SeedResult:
    seed: int
    residual: float
    log_density: float
    label: str
    match: bool | None
    psnr: float | None


@dataclass
class RunReport:
    sampler: str
    condition: tuple[str, ...] | None
    results: list[SeedResult]
    response_rate: float | None
    mean_residual: float
    mean_log_density: float
    mean_psnr: float | None
    output_dir: str | None = None

    def recompute_aggregates(self) -> dict:
        """Aggregates recomputed from the per-seed rows (integrity check)."""
        matches = [r.match for r in self.results if r.match is not None]
        psnrs = [r.psnr for r in self.results if r.psnr is not None]
        return {
            "response_rate": (sum(matches) / len(matches)) if matches else None,
            "mean_residual": float(np.mean([r.residual for r in self.results])),
            "mean_log_density": float(np.mean([r.log_density for r in self.results])),
            "mean_psnr": float(np.mean(psnrs)) if psnrs else None,
        }


# -- spec-string parsing -----------------------------------------------------

def _parse_kv(body: str, what: str) -> dict[str, str]:
    out: dict[str, str] = {}
    body = body.strip()
    if not body:
        return out
    for item in body.split(","):
        if "=" not in item:
            raise ConfigError(f"malformed {what} entry {item!r} (expected key=value)")
        key, val = item.split("=", 1)
        out[key.strip()] = val.strip()
    return out


def _take(kv: dict, what: str, allowed: set[str]) -> None:
    unknown = set(kv) - allowed
    if unknown:
        raise ConfigError(f"unknown {what} keys: {sorted(unknown)}")


def parse_prior_spec(spec: str, base_dir: Path = Path(".")) -> GmmPrior:
    """Resolve a prior from ``collision: ...``, ``pair: ...`` or a file path."""
    spec = spec.strip()
    if spec.startswith("collision:"):
        kv = _parse_kv(spec[len("collision:"):], "prior")
        _take(kv, "collision prior", {"size", "block", "detail_norm", "sigma"})
        try:
            return collision_prior(
                size=int(kv.get("size", 16)),
                block=int(kv.get("block", 8)),
                detail_norm=float(kv.get("detail_norm", 1.2)),
                sigma=float(kv.get("sigma", 0.05)),
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    if spec.startswith("pair:"):
        kv = _parse_kv(spec[len("pair:"):], "prior")
        _take(kv, "pair prior", {"offset", "sigma"})
        return scalar_pair_prior(
            offset=float(kv.get("offset", 0.6)), sigma=float(kv.get("sigma", 0.25))
        )
    path = base_dir / spec
    if not path.exists():
        raise ConfigError(f"prior file {path} does not exist")
    try:
        return load_prior(path)
    except ValueError as exc:
        raise ConfigError(f"bad prior file {path}: {exc}") from exc


def parse_operator_spec(spec: str, shape: tuple[int, int]) -> LinearOperator:
    """Build an operator for a given input shape.

    Forms: ``identity``, ``avgpool: s=8``, ``blur: sigma=1.5[, k=9]``, or
    ``compose:[specA; specB; ...]`` applying the parts left to right.
    """
    spec = spec.strip()
    h, w = shape
    try:
        if spec == "identity":
            return avgpool_op(h, w, 1)
        if spec == "mean":
            from .operators import DenseOperator

            return DenseOperator(np.full((1, h * w), 1.0 / (h * w)), shape, (1, 1))
        if spec.startswith("avgpool:"):
            kv = _parse_kv(spec[len("avgpool:"):], "operator")
            _take(kv, "avgpool", {"s"})
            if "s" not in kv:
                raise ConfigError("avgpool needs s=<factor>")
            return avgpool_op(h, w, int(kv["s"]))
        if spec.startswith("blur:"):
            kv = _parse_kv(spec[len("blur:"):], "operator")
            _take(kv, "blur", {"sigma", "k"})
            if "sigma" not in kv:
                raise ConfigError("blur needs sigma=<std>")
            sigma = float(kv["sigma"])
            from .guidance import blur_kernel_size

            k = int(kv["k"]) if "k" in kv else blur_kernel_size(sigma, min(h, w))
            return gaussian_blur_op(h, w, sigma, k)
        if spec.startswith("compose:"):
            body = spec[len("compose:"):].strip()
            if not (body.startswith("[") and body.endswith("]")):
                raise ConfigError("compose expects compose:[specA; specB; ...]")
            parts = [p.strip() for p in body[1:-1].split(";") if p.strip()]
            if not parts:
                raise ConfigError("compose needs at least one part")
            ops = []
            cur = shape
            for part in parts:
                op = parse_operator_spec(part, cur)
                ops.append(op)
                cur = op.out_shape
            return CompositeOperator(ops)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    raise ConfigError(f"unrecognised operator spec {spec!r}")


def parse_seed_list(text: str) -> tuple[int, ...]:
    """Parse ``a..b`` (inclusive) or a comma-separated list."""
    text = text.strip()
    if ".." in text:
        a, b = text.split("..", 1)
        lo, hi = int(a), int(b)
        if hi < lo:
            raise ConfigError(f"empty seed range {text!r}")
        return tuple(range(lo, hi + 1))
    try:
        seeds = tuple(int(v.strip()) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise ConfigError(f"bad seed list {text!r}") from exc
    if not seeds:
        raise ConfigError("seed list must be nonempty")
    return seeds


def parse_condition(text: str | None) -> tuple[str, ...] | None:
    if text is None:
        return None
    text = text.strip()
    if text.lower() in ("null", "none", ""):
        return None
    return tuple(s.strip() for s in text.split(",") if s.strip())


def parse_ratio(text) -> tuple[float, float]:
    """Parse a weight ratio ``w1/w2`` (or an existing pair)."""
    if isinstance(text, (tuple, list)):
        w1, w2 = text
        return float(w1), float(w2)
    parts = str(text).split("/")
    if len(parts) != 2:
        raise ConfigError(f"weight ratio must look like w1/w2, got {text!r}")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError as exc:
        raise ConfigError(f"bad weight ratio {text!r}") from exc


# -- config files ------------------------------------------------------------

_EXPERIMENT_KEYS = {
    "prior", "operator", "sampler", "condition", "seeds", "output",
    "snapshot_stride", "dump_snapshots", "gt", "measurement_noise",
    "measurement_seed", "restorer", "restorer_salt", "restore_sigma",
    "manifest", "manifest_entry",
}
_SCHEDULE_KEYS = {"steps", "beta_start", "beta_end"}
_GUIDANCE_KEYS = {
    "eta_forward", "eta_reverse", "boundary", "weight_ratio", "update_rule",
    "gradient_target", "t_start_fraction", "wavelet_levels",
}
_DEGRADATION_KEYS = {"sigma", "s", "delta", "q", "seed"}


def load_experiment_config(path) -> ExperimentConfig:
    """Read and validate an experiment config file (fail-fast on unknowns)."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    cp = configparser.ConfigParser()
    try:
        cp.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    known_sections = {"experiment", "schedule", "guidance", "degradation"}
    unknown = set(cp.sections()) - known_sections
    if unknown:
        raise ConfigError(f"unknown sections: {sorted(unknown)}")
    if "experiment" not in cp:
        raise ConfigError("config needs an [experiment] section")

    exp = cp["experiment"]
    _check_keys(exp, _EXPERIMENT_KEYS, "experiment")
    kwargs: dict = {"base_dir": path.parent}
    manifest = exp.get("manifest")
    if manifest is not None:
        kwargs["gt_spec"] = f"manifest:{manifest}|{exp.get('manifest_entry', '')}"
    elif "manifest_entry" in exp:
        raise ConfigError("manifest_entry without manifest")
    try:
        if "prior" in exp:
            kwargs["prior_spec"] = exp["prior"]
        if "operator" in exp:
            kwargs["operator_spec"] = exp["operator"]
        if "sampler" in exp:
            kwargs["sampler"] = exp["sampler"]
        if "condition" in exp:
            kwargs["condition"] = parse_condition(exp["condition"])
        if "seeds" in exp:
            kwargs["seeds"] = parse_seed_list(exp["seeds"])
        if "output" in exp:
            kwargs["output_dir"] = exp["output"]
        if "snapshot_stride" in exp:
            kwargs["snapshot_stride"] = exp.getint("snapshot_stride")
        if "dump_snapshots" in exp:
            kwargs["dump_snapshots"] = exp.getboolean("dump_snapshots")
        if "gt" in exp and manifest is None:
            kwargs["gt_spec"] = exp["gt"]
        if "measurement_noise" in exp:
            kwargs["measurement_noise"] = exp.getfloat("measurement_noise")
        if "measurement_seed" in exp:
            kwargs["measurement_seed"] = exp.getint("measurement_seed")
        if "restorer" in exp:
            kwargs["restorer"] = exp["restorer"].strip()
        if "restorer_salt" in exp:
            kwargs["restorer_salt"] = exp.getint("restorer_salt")
        if "restore_sigma" in exp:
            kwargs["restore_sigma"] = exp.getfloat("restore_sigma")
    except ValueError as exc:
        raise ConfigError(f"bad [experiment] value: {exc}") from exc

    if "schedule" in cp:
        sec = cp["schedule"]
        _check_keys(sec, _SCHEDULE_KEYS, "schedule")
        try:
            if "steps" in sec:
                kwargs["schedule_steps"] = sec.getint("steps")
            if "beta_start" in sec:
                kwargs["beta_start"] = sec.getfloat("beta_start")
            if "beta_end" in sec:
                kwargs["beta_end"] = sec.getfloat("beta_end")
        except ValueError as exc:
            raise ConfigError(f"bad [schedule] value: {exc}") from exc

    gkwargs: dict = {}
    if "guidance" in cp:
        sec = cp["guidance"]
        _check_keys(sec, _GUIDANCE_KEYS, "guidance")
        try:
            for name in ("eta_forward", "eta_reverse", "boundary", "t_start_fraction"):
                if name in sec:
                    gkwargs[name] = sec.getfloat(name)
            if "wavelet_levels" in sec:
                gkwargs["wavelet_levels"] = sec.getint("wavelet_levels")
            if "weight_ratio" in sec:
                gkwargs["weight_ratio"] = parse_ratio(sec["weight_ratio"])
            for name in ("update_rule", "gradient_target"):
                if name in sec:
                    gkwargs[name] = sec[name]
        except ValueError as exc:
            raise ConfigError(f"bad [guidance] value: {exc}") from exc
    try:
        kwargs["guidance"] = GuidanceConfig(**gkwargs)
    except ValueError as exc:
        raise ConfigError(f"bad guidance config: {exc}") from exc

    if "degradation" in cp:
        sec = cp["degradation"]
        _check_keys(sec, _DEGRADATION_KEYS, "degradation")
        for key in _DEGRADATION_KEYS:
            if key not in sec:
                raise ConfigError(f"[degradation] missing key {key}")
        try:
            kwargs["degradation"] = DegradationSpec(
                sigma=sec.getfloat("sigma"),
                s=sec.getint("s"),
                delta=sec.getfloat("delta"),
                q=sec.getint("q"),
                seed=sec.getint("seed"),
            )
        except ValueError as exc:
            raise ConfigError(f"bad [degradation] value: {exc}") from exc

    return ExperimentConfig(**kwargs)


def _check_keys(section, allowed: set[str], name: str) -> None:
    unknown = set(section.keys()) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in [{name}]: {sorted(unknown)}")


# -- experiment assembly -----------------------------------------------------

def _resolve_gt(cfg: ExperimentConfig, prior: GmmPrior, shape: tuple[int, int]):
    """Ground truth per ``gt``: a component mean, a prior draw, or a PGM."""
    spec = cfg.gt_spec.strip()
    if spec.startswith("component:"):
        label = spec[len("component:"):].strip()
        if label == "first":
            label = prior.labels[0]
        if label not in prior.labels:
            raise ConfigError(f"gt component {label!r} not among prior labels {prior.labels}")
        k = prior.labels.index(label)
        return prior.means[k].reshape(shape), label
    if spec.startswith("sample:"):
        seed = int(spec[len("sample:"):])
        x, label = gmm_sample(prior, np.random.default_rng(seed))
        return x.reshape(shape), label
    path = cfg.base_dir / spec
    if not path.exists():
        raise ConfigError(f"gt image {path} does not exist")
    img = read_pgm(path)
    if img.shape != shape:
        raise ConfigError(f"gt image shape {img.shape} does not match prior {shape}")
    return img, None


def _resolve_measurement(cfg: ExperimentConfig, A: LinearOperator, prior: GmmPrior):
    """Build (gt, y, noise_var) for the experiment.

    Routes: explicit [degradation] pipeline, a manifest entry pointing at
    an existing degraded PGM, or the default linear measurement
    y = A(gt) + noise.
    """
    shape = prior.image_shape
    if shape is None:
        raise ConfigError("prior does not define an image shape")
    if cfg.gt_spec.startswith("manifest:"):
        body = cfg.gt_spec[len("manifest:"):]
        man_path, entry = body.split("|", 1)
        man_path = cfg.base_dir / man_path
        if not man_path.exists():
            raise ConfigError(f"manifest {man_path} does not exist")
        entries = read_manifest(man_path)
        if entry:
            matches = [e for e in entries if e["filename"] == entry]
            if not matches:
                raise ConfigError(f"manifest has no entry {entry!r}")
            chosen = matches[0]
        else:
            if not entries:
                raise ConfigError(f"manifest {man_path} is empty")
            chosen = entries[0]
        y = read_pgm(man_path.parent / chosen["filename"])
        if A.out_shape != y.shape:
            raise ConfigError(
                f"operator output {A.out_shape} does not match degraded image {y.shape}"
            )
        nv = (chosen["delta"] / 255.0) ** 2
        return None, y, nv
    gt, _ = _resolve_gt(cfg, prior, shape)
    if cfg.degradation is not None:
        y = synthesize_lq(gt, cfg.degradation)
        if A.out_shape != y.shape:
            raise ConfigError(
                f"operator output {A.out_shape} does not match degraded image {y.shape}"
            )
        nv = (cfg.degradation.delta / 255.0) ** 2
        return gt, y, nv
    y = A.apply(gt)
    if cfg.measurement_noise > 0.0:
        mrng = np.random.default_rng(cfg.measurement_seed)
        y = y + np.sqrt(cfg.measurement_noise) * mrng.standard_normal(y.shape)
    return gt, y, cfg.measurement_noise


def _psnr(x: np.ndarray, ref: np.ndarray) -> float:
    mse = float(np.mean((x - ref) ** 2))
    if mse == 0.0:
        return float("inf")
    return float(10.0 * np.log10(1.0 / mse))


def _make_restorer(cfg: ExperimentConfig, prior: GmmPrior, A: LinearOperator, y, noise_var):
    """Per-seed coarse restoration standing in for a pretrained restorer.

    ``pinv`` is the deterministic pseudo-inverse lift (plus optional
    smoothing).  ``sample`` draws a fresh image from the exact restoration
    posterior for every seed -- a generative restorer that commits to one
    plausible mode of an ambiguous measurement; ``sample:LABEL`` restricts
    the draw to one component (a restorer with a house style).
    """
    if cfg.restorer == "pinv":
        y0 = coarse_restore(y, A, cfg.restore_sigma)
        return lambda seed: y0
    label = None
    if ":" in cfg.restorer:
        _, label = cfg.restorer.split(":", 1)
        label = label.strip()
    try:
        p = prior if label is None else condition_restrict(prior, (label,))
    except ValueError as exc:
        raise ConfigError(f"bad restorer label: {exc}") from exc
    post = gmm_exact_posterior(p, A, np.asarray(y).ravel(), noise_var)
    shape = prior.image_shape

    def restore(seed: int):
        rng = np.random.default_rng((seed, cfg.restorer_salt))
        return post.sample(rng)[0].reshape(shape)

    return restore


def run_experiment(cfg: ExperimentConfig) -> RunReport:
    """Run the configured sampler over all seeds and assemble the report."""
    prior = parse_prior_spec(cfg.prior_spec, cfg.base_dir)
    if prior.image_shape is None:
        raise ConfigError("prior does not define an image shape")
    shape = prior.image_shape
    A = parse_operator_spec(cfg.operator_spec, shape)
    if A.in_shape != shape:
        raise ConfigError(f"operator domain {A.in_shape} does not match prior {shape}")
    sched = make_linear_schedule(cfg.schedule_steps, cfg.beta_start, cfg.beta_end)
    gt, y, noise_var = _resolve_measurement(cfg, A, prior)
    restorer = _make_restorer(cfg, prior, A, y, noise_var)
    denoiser = denoiser_from_prior(prior, sched)
    posterior = gmm_exact_posterior(prior, A, y.ravel(), noise_var)
    cond = cfg.condition
    target = A.apply(gt) if gt is not None else y

    out_dir = None
    if cfg.output_dir is not None:
        out_dir = Path(cfg.output_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_pgm(out_dir / "input_y.pgm", y)
        if cfg.restorer == "pinv":
            write_pgm(out_dir / "restored_y0.pgm", restorer(0))
        if gt is not None:
            write_pgm(out_dir / "gt.pgm", gt)

    results: list[SeedResult] = []
    for seed in cfg.seeds:
        rng = np.random.default_rng(seed)
        y0 = restorer(seed)
        traj = None
        if cfg.sampler == "mcs":
            x0, traj = mcs_sample(
                denoiser, y0, A, cond, cfg.guidance, sched, rng, cfg.snapshot_stride
            )
        elif cfg.sampler == "unguided":
            x0, traj = unguided_sample(
                denoiser, y0, cond, cfg.guidance, sched, rng, cfg.snapshot_stride
            )
        elif cfg.sampler == "dps":
            x0 = dps_sample(denoiser, y, A, cfg.guidance, sched, rng, cond)
        else:
            x0 = ddnm_sample(denoiser, y, A, sched, rng, cond)
        label = component_assign(prior, x0)
        result = SeedResult(
            seed=seed,
            residual=float(np.linalg.norm(A.apply(x0) - target)),
            log_density=float(posterior.log_density(x0)),
            label=label,
            match=(label in cond) if cond is not None else None,
            psnr=_psnr(x0, gt) if gt is not None else None,
        )
        results.append(result)
        if out_dir is not None:
            write_pgm(out_dir / f"seed_{seed:04d}.pgm", x0)
            if traj is not None:
                _write_trajectory(out_dir, seed, traj, cfg.dump_snapshots)

    report = RunReport(
        sampler=cfg.sampler,
        condition=cond,
        results=results,
        output_dir=str(out_dir) if out_dir is not None else None,
        **recomputed_or_empty(results),
    )
    if out_dir is not None:
        (out_dir / "report.txt").write_text(format_report(report))
    return report


def recomputed_or_empty(results: list[SeedResult]) -> dict:
    matches = [r.match for r in results if r.match is not None]
    psnrs = [r.psnr for r in results if r.psnr is not None]
    return {
        "response_rate": (sum(matches) / len(matches)) if matches else None,
        "mean_residual": float(np.mean([r.residual for r in results])),
        "mean_log_density": float(np.mean([r.log_density for r in results])),
        "mean_psnr": float(np.mean(psnrs)) if psnrs else None,
    }


def format_report(report: RunReport) -> str:
    cond = ",".join(report.condition) if report.condition else "null"
    lines = [
        "run report",
        f"sampler: {report.sampler}",
        f"condition: {cond}",
        f"seeds: {len(report.results)}",
        f"response_rate: {_fmt(report.response_rate)}",
        f"mean_residual: {_fmt(report.mean_residual)}",
        f"mean_log_density: {_fmt(report.mean_log_density)}",
        f"mean_psnr: {_fmt(report.mean_psnr)}",
        "",
        "seed residual log_density label match psnr",
    ]
    for r in report.results:
        lines.append(
            f"{r.seed} {r.residual!r} {r.log_density!r} {r.label} "
            f"{_fmt(r.match)} {_fmt(r.psnr)}"
        )
    return "\n".join(lines) + "\n"


def _fmt(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, bool):
        return "yes" if v else "no"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_trajectory(out_dir: Path, seed: int, traj: Trajectory, dump: bool) -> None:
    rows = []
    for i, step in enumerate(traj.steps):
        snap_name = ""
        if dump and step.x0_snapshot is not None:
            snap_name = f"snap_{seed:04d}_t{step.t:04d}.npy"
            np.save(out_dir / snap_name, step.x0_snapshot)
        rows.append(
            (step.t, step.measurement or "none", step.loss, step.grad_norm, snap_name)
        )
    write_csv(
        out_dir / f"traj_{seed:04d}.csv",
        ["t", "measurement", "loss", "grad_norm", "snapshot"],
        rows,
    )


def load_trajectory(csv_path) -> Trajectory:
    """Rebuild a trajectory from a dumped CSV plus its snapshot files."""
    csv_path = Path(csv_path)
    header, rows = read_csv(csv_path)
    expected = ["t", "measurement", "loss", "grad_norm", "snapshot"]
    if header != expected:
        raise ConfigError(f"{csv_path} is not a trajectory CSV (header {header})")
    steps = []
    for row in rows:
        t, measurement, loss, grad_norm, snap_name = row
        snap = None
        if snap_name:
            snap_file = csv_path.parent / snap_name
            if not snap_file.exists():
                raise ConfigError(f"snapshot file {snap_file} is missing")
            snap = np.load(snap_file)
        steps.append(
            TrajectoryStep(
                t=int(t),
                measurement=None if measurement == "none" else measurement,
                loss=float(loss),
                grad_norm=float(grad_norm),
                x0_snapshot=snap,
            )
        )
    return Trajectory(steps=steps)


def trajectory_stats(traj: Trajectory) -> list[dict]:
    """Convergence statistics over the recorded clean-estimate snapshots.

    Per snapshot step (t decreasing):
      * ``change_var``  -- pixel variance of the change since the previous
        recorded snapshot (0 for the first); the per-step movement of the
        clean estimate, which shrinks as the trajectory crystallises,
      * ``pixel_var``   -- spatial variance of the snapshot itself,
      * ``detail_energy`` -- squared norm of its high-frequency bands,
      * ``loss``        -- the guidance loss recorded at that step.
    """
    snaps = traj.snapshots()
    if not snaps:
        raise ValueError("trajectory has no snapshots to analyse")
    rows = []
    prev = None
    for step in snaps:
        img = step.x0_snapshot
        change_var = 0.0 if prev is None else float(np.var(img - prev))
        rows.append(
            {
                "t": step.t,
                "change_var": change_var,
                "pixel_var": float(np.var(img)),
                "detail_energy": detail_energy(img),
                "loss": step.loss,
            }
        )
        prev = img
    return rows


def write_stats_csv(path, rows: list[dict]) -> None:
    write_csv(
        path,
        ["t", "change_var", "pixel_var", "detail_energy", "loss"],
        [(r["t"], r["change_var"], r["pixel_var"], r["detail_energy"], r["loss"]) for r in rows],
    )


def sweep(cfg: ExperimentConfig, axis: str, grid: list) -> list[dict]:
    """Repeat the experiment across one knob with shared seeds.

    ``axis`` is ``boundary`` (grid of fractions) or ``ratio`` (grid of
    ``w1/w2``).  Returns one row of aggregates per grid point.
    """
    if axis not in ("boundary", "ratio"):
        raise ConfigError(f"sweep axis must be boundary or ratio, got {axis!r}")
    if not grid:
        raise ConfigError("sweep grid must be nonempty")
    rows = []
    for value in grid:
        if axis == "boundary":
            setting = float(value)
            gcfg = dataclasses.replace(cfg.guidance, boundary=setting)
            tag = f"boundary_{setting:g}"
            label = f"{setting:g}"
        else:
            w1, w2 = parse_ratio(value)
            gcfg = dataclasses.replace(cfg.guidance, weight_ratio=(w1, w2))
            tag = f"ratio_{w1:g}-{w2:g}"
            label = f"{w1:g}/{w2:g}"
        sub_out = None
        if cfg.output_dir is not None:
            sub_out = str(Path(cfg.output_dir) / tag)
        sub = dataclasses.replace(cfg, guidance=gcfg, output_dir=sub_out)
        report = run_experiment(sub)
        rows.append(
            {
                "setting": label,
                "response_rate": report.response_rate,
                "mean_residual": report.mean_residual,
                "mean_log_density": report.mean_log_density,
            }
        )
    if cfg.output_dir is not None:
        out = Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_csv(
            out / f"sweep_{axis}.csv",
            ["setting", "response_rate", "mean_residual", "mean_log_density"],
            [
                (
                    r["setting"],
                    "-" if r["response_rate"] is None else r["response_rate"],
                    r["mean_residual"],
                    r["mean_log_density"],
                )
                for r in rows
            ],
        )
    return rows
