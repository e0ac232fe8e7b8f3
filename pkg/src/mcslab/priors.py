"""Ready-made mixture priors and the prior definition file format.

The workhorse is the *collision* prior: two equally weighted components
whose means share a smooth base image and differ only by orthogonal
stripe patterns with zero mean over every aligned ``block x block``
square.  Average pooling at that block size therefore maps both means to
the same low-resolution image -- the degraded observation carries no
information about which component produced it, and only conditioning (or
guidance acting on fine structure) can steer a sampler between them.

Priors can be saved to and loaded from a plain-text INI file holding the
grid size and, per component, a weight, a mean vector and a variance
vector (or scalar).  Unknown sections or keys are errors.
"""

from __future__ import annotations

import configparser
from pathlib import Path

import numpy as np

from .gmm import GmmPrior

__all__ = [
    "collision_prior",
    "stripe_pattern",
    "smooth_base",
    "point_prior",
    "checker_prior",
    "scalar_pair_prior",
    "load_prior",
    "save_prior",
]


def stripe_pattern(size: int, period: int, axis: int) -> np.ndarray:
    """Unit-norm sinusoidal stripes with zero sum over every period-run.

    ``axis = 0`` varies along rows (horizontal bands), ``axis = 1`` along
    columns (vertical bands).  Because each full period sums to zero, all
    aligned ``period x period`` block means vanish, and patterns along the
    two axes are mutually orthogonal.
    """
    if size % period:
        raise ValueError("period must divide size")
    ramp = np.sin(2.0 * np.pi * (np.arange(size) + 0.5) / period)
    pat = np.tile(ramp, (size, 1))
    if axis == 0:
        pat = pat.T
    elif axis != 1:
        raise ValueError("axis must be 0 or 1")
    return pat / np.linalg.norm(pat)


def smooth_base(size: int, lo: float = 0.25, hi: float = 0.75) -> np.ndarray:
    """Radial bump spanning [lo, hi]; the shared low-frequency content."""
    c = (size - 1) / 2.0
    i, j = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
    r2 = (i - c) ** 2 + (j - c) ** 2
    bump = np.exp(-r2 / (2.0 * (size / 4.0) ** 2))
    return lo + (hi - lo) * bump


def collision_prior(
    size: int = 16,
    block: int = 8,
    detail_norm: float = 1.2,
    sigma: float = 0.05,
) -> GmmPrior:
    """Two-component prior indistinguishable after block-mean pooling.

    Component means are ``base + detail_norm * pattern`` with the two
    stripe patterns oriented along different axes; both have identical
    ``block``-pooled images.  ``sigma`` is the per-pixel standard
    deviation of every component.
    """
    if detail_norm <= 0.0 or sigma <= 0.0:
        raise ValueError("detail_norm and sigma must be positive")
    base = smooth_base(size)
    pv = stripe_pattern(size, block, axis=1)
    ph = stripe_pattern(size, block, axis=0)
    means = np.stack([(base + detail_norm * pv).ravel(), (base + detail_norm * ph).ravel()])
    variances = np.full((2, size * size), sigma**2)
    return GmmPrior(
        weights=np.array([0.5, 0.5]),
        means=means,
        variances=variances,
        labels=("vstripes", "hstripes"),
        image_shape=(size, size),
    )


def point_prior(mean: np.ndarray, sigma: float = 1e-4, label: str = "point") -> GmmPrior:
    """Single near-point-mass component around a given image."""
    mean = np.asarray(mean, dtype=np.float64)
    return GmmPrior(
        weights=np.array([1.0]),
        means=mean.ravel()[None, :],
        variances=np.full((1, mean.size), sigma**2),
        labels=(label,),
        image_shape=mean.shape if mean.ndim == 2 else None,
    )


def checker_prior(delta: float = 1.0, sigma: float = 0.35) -> GmmPrior:
    """Smallest image-shaped collision toy: 2x2 grid, d = 4.

    Component means differ by +/- delta times a zero-mean checkerboard, so
    a 2x2 average pool (or any mean measurement) cannot tell them apart,
    while the single detail coefficient separates them completely.
    """
    if delta <= 0.0 or sigma <= 0.0:
        raise ValueError("delta and sigma must be positive")
    u = np.array([[0.5, -0.5], [-0.5, 0.5]])
    means = np.stack([(0.5 + delta * u).ravel(), (0.5 - delta * u).ravel()])
    return GmmPrior(
        weights=np.array([0.5, 0.5]),
        means=means,
        variances=np.full((2, 4), sigma**2),
        labels=("plus", "minus"),
        image_shape=(2, 2),
    )


def scalar_pair_prior(offset: float = 0.6, sigma: float = 0.25) -> GmmPrior:
    """d = 2 collision toy: two components with a common coordinate mean.

    Means (m + u, m - u) and (m - u, m + u) coincide after averaging the
    two coordinates, so a mean measurement cannot separate them.
    """
    m = 0.5
    means = np.array([[m + offset, m - offset], [m - offset, m + offset]])
    return GmmPrior(
        weights=np.array([0.5, 0.5]),
        means=means,
        variances=np.full((2, 2), sigma**2),
        labels=("up", "down"),
        image_shape=(1, 2),
    )


# -- file format -------------------------------------------------------------

_MIXTURE_KEYS = {"height", "width", "labels"}
_COMPONENT_KEYS = {"weight", "mean", "variance"}


def save_prior(path, prior: GmmPrior) -> None:
    """Write a prior definition file (sections [mixture], [component.*])."""
    if prior.image_shape is None:
        raise ValueError("prior needs image_shape to be written to a file")
    h, w = prior.image_shape
    lines = ["[mixture]", f"height = {h}", f"width = {w}", f"labels = {', '.join(prior.labels)}", ""]
    for k, lab in enumerate(prior.labels):
        lines.append(f"[component.{lab}]")
        lines.append(f"weight = {float(prior.weights[k])!r}")
        lines.append("mean =")
        lines.extend(_wrap_vector(prior.means[k]))
        v = prior.variances[k]
        if np.all(v == v[0]):
            lines.append(f"variance = {float(v[0])!r}")
        else:
            lines.append("variance =")
            lines.extend(_wrap_vector(v))
        lines.append("")
    Path(path).write_text("\n".join(lines))


def _wrap_vector(vec: np.ndarray, per_line: int = 8) -> list[str]:
    out = []
    for i in range(0, vec.size, per_line):
        chunk = " ".join(repr(float(v)) for v in vec[i : i + per_line])
        out.append(f"    {chunk}")
    return out


def load_prior(path) -> GmmPrior:
    """Read a prior definition file; unknown sections or keys are errors."""
    cp = configparser.ConfigParser()
    read = cp.read(path)
    if not read:
        raise ValueError(f"cannot read prior file {path}")
    if "mixture" not in cp:
        raise ValueError("prior file needs a [mixture] section")
    mix = cp["mixture"]
    unknown = set(mix.keys()) - _MIXTURE_KEYS
    if unknown:
        raise ValueError(f"unknown keys in [mixture]: {sorted(unknown)}")
    try:
        h = mix.getint("height")
        w = mix.getint("width")
    except (TypeError, ValueError) as exc:
        raise ValueError("height/width must be integers") from exc
    if h is None or w is None or h < 1 or w < 1:
        raise ValueError("height/width must be positive integers")
    labels = tuple(s.strip() for s in mix.get("labels", "").split(",") if s.strip())
    if not labels:
        raise ValueError("labels must list at least one component")
    d = h * w
    expected_sections = {f"component.{lab}" for lab in labels}
    actual_sections = set(cp.sections()) - {"mixture"}
    if actual_sections != expected_sections:
        raise ValueError(
            f"component sections {sorted(actual_sections)} do not match labels {sorted(labels)}"
        )
    weights, means, variances = [], [], []
    for lab in labels:
        sec = cp[f"component.{lab}"]
        unknown = set(sec.keys()) - _COMPONENT_KEYS
        if unknown:
            raise ValueError(f"unknown keys in [component.{lab}]: {sorted(unknown)}")
        for key in _COMPONENT_KEYS:
            if key not in sec:
                raise ValueError(f"[component.{lab}] missing key {key}")
        weights.append(float(sec["weight"]))
        mean = _parse_vector(sec["mean"], d, f"[component.{lab}] mean")
        means.append(mean)
        var_vals = sec["variance"].split()
        if len(var_vals) == 1:
            variances.append(np.full(d, float(var_vals[0])))
        else:
            variances.append(_parse_vector(sec["variance"], d, f"[component.{lab}] variance"))
    return GmmPrior(
        weights=np.array(weights),
        means=np.stack(means),
        variances=np.stack(variances),
        labels=labels,
        image_shape=(h, w),
    )


def _parse_vector(text: str, d: int, what: str) -> np.ndarray:
    vals = np.array([float(v) for v in text.split()])
    if vals.size != d:
        raise ValueError(f"{what} has {vals.size} entries, expected {d}")
    return vals
