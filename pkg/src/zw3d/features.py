"""Attack-invariant clip features.

A normalized clip is condensed into a single temporal reference image (a
weighted mean of sampled frames), each frame is scored by how far its pixels
deviate from the reference image's 8-neighborhoods, the deviations are
contrast-normalized with an arctan ratio, and ring-shaped partitions around
the frame center are reduced to weighted centroids. Rings and 8-neighborhoods
are preserved by flips and quarter-turn rotations about the frame center, so
the resulting vector is exactly invariant under those maps; the temporal
averaging and arctan normalization buy robustness against noise, filtering,
and global intensity changes.

The production geometry is a 320x320x100 volume, 16 rings of width 10, and a
16x100 = 1600-dimensional feature. All stages also run on reduced geometries
for cross-checking against brute-force implementations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .frameio import NormalizedClip

FEATURE_DIM = 1600
DISCARD = -1


@dataclass(frozen=True)
class FeatureParams:
    """Geometry and sampling constants for one feature extraction."""

    size: int = 320          # spatial side of the normalized volume
    frames: int = 100        # temporal depth K
    ring_count: int = 16     # rings N (central disc counts as ring 0)
    ring_width: float = 10.0 # radial width r
    tiri_stride: int = 5     # sample frames k = stride, 2*stride, ...
    tiri_samples: int = 20   # number of sampled frames M
    decay: float = 1.0       # weight base a, w_k = a**k (1.0 = plain mean)

    def __post_init__(self):
        if self.tiri_stride * self.tiri_samples > self.frames:
            raise ValueError("TIRI sampling exceeds frame count")
        if self.ring_count * self.ring_width > self.size / 2 + 1e-9:
            raise ValueError("rings do not fit inside the frame")

    @property
    def dim(self) -> int:
        return self.ring_count * self.frames

    @property
    def center(self) -> float:
        """Geometric center of the 1-based pixel grid 1..size."""
        return (self.size + 1) / 2.0


DEFAULT_PARAMS = FeatureParams()


@dataclass
class FeatureVector:
    """Z-scored feature of length ring_count*frames, ordered frame-major.

    ``values[k*N + n]`` is the centroid of ring ``n`` in frame ``k``. When the
    pre-normalization feature is constant (blank clip), ``degenerate`` is set
    and the values are all zero.
    """

    values: np.ndarray
    role: str
    degenerate: bool = False

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1:
            raise ValueError("feature values must be a flat vector")


def compute_tiri(volume: np.ndarray, params: FeatureParams = DEFAULT_PARAMS) -> np.ndarray:
    """Temporally informative representative image of a volume.

    Weighted mean of frames k = stride*m for m = 1..M with weights a**k; the
    default a = 1 makes it the plain average of the sampled frames.
    """
    ks = params.tiri_stride * np.arange(1, params.tiri_samples + 1)
    w = params.decay ** ks.astype(np.float64)
    acc = np.tensordot(volume[:, :, ks - 1], w, axes=([2], [0]))
    return acc / w.sum()


def tiri_deviation(volume: np.ndarray, tiri: np.ndarray) -> np.ndarray:
    """Per-frame maximal absolute difference against reference 8-neighborhoods.

    For each interior pixel, the deviation is the largest |tiri(neighbor) -
    frame(pixel)| over the pixel's 8 neighbors in the reference image. Border
    rows/columns have no full neighborhood; they are left at zero and must be
    excluded by downstream consumers (see ``interior_mask``).
    """
    shifts = (
        tiri[:-2, :-2], tiri[:-2, 1:-1], tiri[:-2, 2:],
        tiri[1:-1, :-2], tiri[1:-1, 2:],
        tiri[2:, :-2], tiri[2:, 1:-1], tiri[2:, 2:],
    )
    nbr_max = np.maximum.reduce(shifts)
    nbr_min = np.minimum.reduce(shifts)
    inner = volume[1:-1, 1:-1, :]
    # max over neighbors a of |a - x| is max(max_a - x, x - min_a)
    dev_inner = np.maximum(nbr_max[:, :, None] - inner, inner - nbr_min[:, :, None])
    dev = np.zeros_like(volume)
    dev[1:-1, 1:-1, :] = dev_inner
    return dev


def normalize_deviation(dev: np.ndarray, tiri: np.ndarray) -> np.ndarray:
    """arctan(deviation / reference) in [0, pi/2].

    Zero reference pixels take the limit convention: 0 where the deviation is
    also 0, pi/2 otherwise.
    """
    t = np.broadcast_to(tiri[:, :, None] if dev.ndim == 3 else tiri, dev.shape)
    ratio = np.zeros_like(dev)
    np.divide(dev, t, out=ratio, where=t > 0)
    out = np.arctan(ratio)
    out[(t == 0) & (dev > 0)] = math.pi / 2
    return out


def interior_mask(params: FeatureParams = DEFAULT_PARAMS) -> np.ndarray:
    """Boolean mask of pixels whose 8-neighborhood is fully inside the frame."""
    m = np.zeros((params.size, params.size), dtype=bool)
    m[1:-1, 1:-1] = True
    return m


def ring_index(i: float, j: float, params: FeatureParams = DEFAULT_PARAMS) -> int:
    """Ring number of 1-based pixel (i, j), or DISCARD outside the last ring.

    Ring n covers the half-open annulus n*r <= Dist < (n+1)*r around the
    frame's geometric center.
    """
    c = params.center
    dist = math.hypot(i - c, j - c)
    n = int(dist // params.ring_width)
    return n if n < params.ring_count else DISCARD


def ring_labels(params: FeatureParams = DEFAULT_PARAMS) -> np.ndarray:
    """Ring number per pixel as an int array; DISCARD outside the last ring."""
    c = params.center - 1.0  # 0-based center
    ax = np.arange(params.size, dtype=np.float64) - c
    dist = np.hypot(ax[:, None], ax[None, :])
    labels = np.floor(dist / params.ring_width).astype(np.int64)
    labels[labels >= params.ring_count] = DISCARD
    return labels


def ring_centroids(
    norm: np.ndarray, tiri: np.ndarray, params: FeatureParams = DEFAULT_PARAMS
) -> np.ndarray:
    """Reference-weighted mean of normalized deviations per (ring, frame).

    Border pixels and pixels outside the last ring are excluded from both
    sums; rings whose weight sum is zero yield 0. Output is flattened
    frame-major: entry k*N + n is ring n of frame k.
    """
    n_rings, n_frames = params.ring_count, norm.shape[2]
    labels = ring_labels(params)
    valid = (labels >= 0) & interior_mask(params)
    lab = labels[valid]
    w = tiri[valid]
    denom = np.bincount(lab, weights=w, minlength=n_rings)
    v = np.zeros((n_rings, n_frames), dtype=np.float64)
    for k in range(n_frames):
        num = np.bincount(lab, weights=w * norm[:, :, k][valid], minlength=n_rings)
        np.divide(num, denom, out=v[:, k], where=denom > 0)
    return v.T.ravel()


def zscore(f: np.ndarray) -> tuple[np.ndarray, bool]:
    """Standardize to sample mean 0 / sample std 1 (ddof=1).

    A near-zero standard deviation (< 1e-12) marks the feature degenerate and
    yields the zero vector instead of dividing by noise.
    """
    f = np.asarray(f, dtype=np.float64)
    mu = f.mean()
    sigma = f.std(ddof=1)
    if sigma < 1e-12:
        return np.zeros_like(f), True
    return (f - mu) / sigma, False


_PLAN_CACHE: dict[FeatureParams, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}


def _ring_plan(params: FeatureParams):
    """Flat indices of ring-valid interior pixels, sorted by ring.

    Returns (flat pixel indices, segment starts per ring, pixel count per
    ring); cached per params since the geometry is fixed.
    """
    if params not in _PLAN_CACHE:
        labels = ring_labels(params)
        valid = (labels >= 0) & interior_mask(params)
        flat = np.flatnonzero(valid.ravel())
        lab = labels.ravel()[flat]
        order = np.argsort(lab, kind="stable")
        flat, lab = flat[order], lab[order]
        starts = np.searchsorted(lab, np.arange(params.ring_count))
        counts = np.diff(np.append(starts, lab.size))
        _PLAN_CACHE[params] = (flat, starts.astype(np.intp), counts)
    return _PLAN_CACHE[params]


def extract_feature(
    clip: NormalizedClip | np.ndarray,
    params: FeatureParams = DEFAULT_PARAMS,
    role: str | None = None,
) -> FeatureVector:
    """Full pipeline: reference image, deviations, arctan, centroids, z-score.

    Numerically this is the composition compute_tiri -> tiri_deviation ->
    normalize_deviation -> ring_centroids -> zscore, but it gathers only the
    ring-valid interior pixels once and reduces rings with contiguous
    segment sums, which reorders additions (differences stay at float
    rounding level, ~1e-15).
    """
    if isinstance(clip, NormalizedClip):
        volume, role = clip.volume, clip.role
    else:
        volume = np.asarray(clip, dtype=np.float64)
        role = role or "2d"
    if volume.shape != (params.size, params.size, params.frames):
        raise ValueError(f"volume shape {volume.shape} does not match params")

    tiri = compute_tiri(volume, params)
    flat, starts, counts = _ring_plan(params)

    shifts = (
        tiri[:-2, :-2], tiri[:-2, 1:-1], tiri[:-2, 2:],
        tiri[1:-1, :-2], tiri[1:-1, 2:],
        tiri[2:, :-2], tiri[2:, 1:-1], tiri[2:, 2:],
    )
    full = np.zeros_like(tiri)
    full[1:-1, 1:-1] = np.maximum.reduce(shifts)
    nmax = full.ravel()[flat]
    full[1:-1, 1:-1] = np.minimum.reduce(shifts)
    nmin = full.ravel()[flat]

    r = volume.reshape(-1, params.frames)[flat]  # (pixels, frames) copy
    dev = nmax[:, None] - r
    np.subtract(r, nmin[:, None], out=r)
    np.maximum(dev, r, out=dev)

    t = tiri.ravel()[flat]
    zero_rows = np.flatnonzero(t <= 0)
    dev_at_zero = dev[zero_rows].copy() if zero_rows.size else None
    np.divide(dev, t[:, None], out=dev, where=(t > 0)[:, None])
    np.arctan(dev, out=dev)
    if zero_rows.size:
        dev[zero_rows] = np.where(dev_at_zero > 0, math.pi / 2, 0.0)

    np.multiply(dev, t[:, None], out=dev)
    reduce_at = np.minimum(starts, max(flat.size - 1, 0))
    num = np.add.reduceat(dev, reduce_at, axis=0)
    den = np.add.reduceat(t, reduce_at)
    num[counts == 0] = 0.0
    v = np.zeros_like(num)
    np.divide(num, den[:, None], out=v, where=(den > 0)[:, None])

    fn, degenerate = zscore(v.T.ravel())
    return FeatureVector(values=fn, role=role, degenerate=degenerate)


def dump_debug(path, tiri: np.ndarray, f: np.ndarray) -> None:
    """Write the reference image and raw centroid vector as little-endian f64."""
    from pathlib import Path

    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    tiri.astype("<f8").tofile(path / "tiri.f64")
    np.asarray(f, dtype="<f8").tofile(path / "centroids.f64")
