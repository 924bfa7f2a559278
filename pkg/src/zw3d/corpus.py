"""Procedural desk-scale test corpus.

Each synthetic clip pairs a textured 2D sequence with a smooth depth
sequence, both seeded and bit-reproducible. The 2D channel mixes drifting
sinusoidal gratings with wandering Gaussian blobs (structured texture at
several scales, mild temporal motion); the depth channel is a slowly moving
composition of large blobs over a tilted ramp, quantized to gray levels, the
usual region-wise smooth look of calibrated depth maps.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .frameio import FrameSequence, save_clip
from .shares import save_watermark


def _grid(size: int):
    ax = np.linspace(0.0, 1.0, size)
    return np.meshgrid(ax, ax, indexing="ij")


def _texture_volume(rng: np.random.Generator, frames: int, size: int) -> np.ndarray:
    yy, xx = _grid(size)
    t = np.arange(frames, dtype=np.float64)[:, None, None]
    vol = np.zeros((frames, size, size), dtype=np.float64)

    for _ in range(5):
        theta = rng.uniform(0, np.pi)
        cycles = rng.uniform(1.5, 5.0)
        phase = rng.uniform(0, 2 * np.pi)
        drift = rng.uniform(-0.12, 0.12)
        amp = rng.uniform(0.5, 1.0)
        carrier = cycles * 2 * np.pi * (np.cos(theta) * xx + np.sin(theta) * yy)
        vol += amp * np.sin(carrier[None, :, :] + phase + drift * t)

    for _ in range(3):
        cx, cy = rng.uniform(0.2, 0.8, size=2)
        radius = rng.uniform(0.08, 0.25)
        vx, vy = rng.uniform(-0.002, 0.002, size=2)
        amp = rng.uniform(-1.2, 1.2)
        dx = xx[None, :, :] - (cx + vx * t)
        dy = yy[None, :, :] - (cy + vy * t)
        vol += amp * np.exp(-(dx * dx + dy * dy) / (2 * radius * radius))

    return vol


def _depth_volume(rng: np.random.Generator, frames: int, size: int) -> np.ndarray:
    """Region-wise constant depth: elliptical objects over a tilted backdrop.

    Real calibrated depth maps are smooth inside objects with crisp
    silhouettes; the edges are what carries the depth channel's identity.
    Objects drift slowly and nearer ones paint over farther ones.
    """
    yy, xx = _grid(size)
    t = np.arange(frames, dtype=np.float64)[:, None, None]
    gx, gy = rng.uniform(-0.25, 0.25, size=2)
    backdrop = 0.35 + gx * (xx - 0.5) + gy * (yy - 0.5)
    vol = np.broadcast_to(backdrop, (frames, size, size)).copy()

    objects = []
    for _ in range(int(rng.integers(3, 6))):
        objects.append(dict(
            center=rng.uniform(0.15, 0.85, size=2),
            axes=rng.uniform(0.07, 0.28, size=2),
            theta=rng.uniform(0, np.pi),
            depth=rng.uniform(0.15, 0.95),
            velocity=rng.uniform(-0.0025, 0.0025, size=2),
        ))
    # painter's order: nearer objects (larger depth value) occlude farther
    for obj in sorted(objects, key=lambda o: o["depth"]):
        cx, cy = obj["center"]
        vx, vy = obj["velocity"]
        ct, st = np.cos(obj["theta"]), np.sin(obj["theta"])
        dx = xx[None, :, :] - (cx + vx * t)
        dy = yy[None, :, :] - (cy + vy * t)
        u = (ct * dx + st * dy) / obj["axes"][0]
        v = (-st * dx + ct * dy) / obj["axes"][1]
        vol[u * u + v * v <= 1.0] = obj["depth"]

    return vol


def _to_uint8(vol: np.ndarray, lo: float, hi: float) -> np.ndarray:
    vmin, vmax = vol.min(), vol.max()
    if vmax - vmin < 1e-12:
        scaled = np.full_like(vol, (lo + hi) / 2.0)
    else:
        scaled = lo + (vol - vmin) / (vmax - vmin) * (hi - lo)
    return np.clip(np.rint(scaled), 0, 255).astype(np.uint8)


def _colorize(gray: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Give a gray frame stack a mild per-channel tint, keeping structure."""
    gains = rng.uniform(0.75, 1.0, size=3)
    offsets = rng.uniform(0.0, 30.0, size=3)
    chans = [np.clip(np.rint(gray.astype(np.float64) * g + o), 0, 255) for g, o in zip(gains, offsets)]
    return np.stack(chans, axis=-1).astype(np.uint8)


def make_clip(seed: int, frames: int = 64, size: int = 96, color: bool = False):
    """One synthetic (2d, depth) FrameSequence pair."""
    rng = np.random.default_rng(seed)
    tex = _to_uint8(_texture_volume(rng, frames, size), 25.0, 230.0)
    dep = np.clip(np.rint(_depth_volume(rng, frames, size) * 255), 0, 255).astype(np.uint8)
    if color:
        tex = _colorize(tex, rng)
    frames_2d = [tex[k] for k in range(frames)]
    frames_dep = [dep[k] for k in range(frames)]
    return (
        FrameSequence(frames=frames_2d, role="2d"),
        FrameSequence(frames=frames_dep, role="depth"),
    )


def make_watermark(seed: int) -> np.ndarray:
    """Seeded random 40x40 watermark bits."""
    rng = np.random.default_rng(seed)
    return rng.integers(0, 2, size=(40, 40), dtype=np.uint8)


def generate_corpus(
    out_dir,
    clips: int = 20,
    frames: int = 64,
    size: int = 96,
    seed: int = 0,
    color: bool = False,
) -> list[str]:
    """Write a corpus of clip directories; returns the clip ids.

    Layout per clip: ``<out>/<id>/2d/frame_*.p?m``, ``<out>/<id>/depth/...``,
    plus per-clip ``watermark_2d.pbm`` and ``watermark_depth.pbm``.
    """
    out_dir = Path(out_dir)
    ids = []
    for c in range(clips):
        clip_id = f"clip{c:03d}"
        seq2d, seqdep = make_clip(seed * 100003 + c, frames=frames, size=size, color=color)
        base = out_dir / clip_id
        save_clip(base / "2d", seq2d)
        save_clip(base / "depth", seqdep)
        save_watermark(base / "watermark_2d.pbm", make_watermark(seed * 100003 + c + 50021))
        save_watermark(base / "watermark_depth.pbm", make_watermark(seed * 100003 + c + 70003))
        ids.append(clip_id)
    return ids
