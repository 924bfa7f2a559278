"""False-positive/false-negative estimation, DET curves, and BER tables.

Score populations follow the retrieval semantics: *impostor* scores are
distances between distinct registered clips (a score below threshold is a
false positive), *genuine* scores are distances between a clip and its own
attacked version (a score at or above threshold is a false negative).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .fusion import feature_distance, fuse_scores, fused_ber, pairwise_distances
from .shares import ber, recover_from_feature

CHANNELS = ("2d", "depth", "fused")


@dataclass
class DetPoint:
    threshold: float
    pfp: float
    pfn: float


def compute_rates(genuine_scores, impostor_scores, threshold: float) -> tuple[float, float]:
    """(false-positive, false-negative) fractions at one threshold.

    A match requires score < threshold, so impostors strictly below count as
    false positives and genuines at or above count as false negatives.
    """
    genuine = np.asarray(genuine_scores, dtype=np.float64)
    impostor = np.asarray(impostor_scores, dtype=np.float64)
    if genuine.size == 0 or impostor.size == 0:
        raise ValueError("score lists must be nonempty")
    pfp = float((impostor < threshold).sum()) / impostor.size
    pfn = float((genuine >= threshold).sum()) / genuine.size
    return pfp, pfn


def det_curve(genuine_scores, impostor_scores) -> list[DetPoint]:
    """Sweep thresholds over the merged score set (plus both extremes).

    The first point is always (pfp=0, pfn=1) and the last (pfp=1, pfn=0);
    pfp is nondecreasing and pfn nonincreasing along the curve.
    """
    genuine = np.asarray(genuine_scores, dtype=np.float64)
    impostor = np.asarray(impostor_scores, dtype=np.float64)
    if genuine.size == 0 or impostor.size == 0:
        raise ValueError("score lists must be nonempty")
    merged = np.unique(np.concatenate([genuine, impostor]))
    thresholds = np.concatenate([[0.0], merged, [np.nextafter(merged[-1], np.inf)]])
    return [DetPoint(float(t), *compute_rates(genuine_scores, impostor_scores, float(t)))
            for t in np.unique(thresholds)]


# ---------------------------------------------------------------------------
# score populations from a registry plus an attacked-feature corpus
# ---------------------------------------------------------------------------
#
# A corpus is an iterable of (clip_id, attack_name, fn_2d, fn_depth) holding
# the features extracted from the attacked 2D and depth channels of a
# registered clip.

def impostor_scores(db, channel: str = "fused", gamma: float = 0.1) -> list[float]:
    """All distinct-registered-pair distances for one channel."""
    features = [(fn2d, fndep) for _, fn2d, fndep in db.iterate_features()]
    d2d, ddep, dfus = pairwise_distances(features, gamma)
    return {"2d": d2d, "depth": ddep, "fused": dfus}[channel]


def genuine_scores(db, corpus, channel: str = "fused", gamma: float = 0.1) -> list[float]:
    """Original-vs-attacked same-clip distances for one channel."""
    stored = {rid: (fn2d, fndep) for rid, fn2d, fndep in db.iterate_features()}
    out = []
    for clip_id, _attack, fn2d, fndep in corpus:
        ref2d, refdep = stored[clip_id]
        a = feature_distance(fn2d, ref2d)
        b = feature_distance(fndep, refdep)
        out.append({"2d": a, "depth": b, "fused": fuse_scores(a, b, gamma)}[channel])
    return out


def ber_table(db, corpus, gamma: float = 0.1, attack_order=None) -> list[dict]:
    """Mean watermark-recovery BER per (attack, channel) over a corpus.

    For each corpus entry the watermark is recovered from the attacked
    feature against the stored ownership share and compared with the stored
    original. Rows come out one per (attack, channel) with channels 2d,
    depth, and fused (per-clip fusion, then mean), ordered by
    ``attack_order`` when given, else by first appearance.
    """
    per_attack: dict[str, list[tuple[float, float, float]]] = {}
    for clip_id, attack, fn2d, fndep in corpus:
        o2d, odep, w2d, wdep = db.lookup_ownership(clip_id)
        b2d = ber(w2d, recover_from_feature(fn2d, o2d))
        bdep = ber(wdep, recover_from_feature(fndep, odep))
        per_attack.setdefault(attack, []).append((b2d, bdep, fused_ber(b2d, bdep, gamma)))
    names = list(per_attack)
    if attack_order is not None:
        ordered = [a for a in attack_order if a in per_attack]
        names = ordered + [a for a in names if a not in ordered]
    rows = []
    for attack in names:
        triples = np.array(per_attack[attack], dtype=np.float64)
        for ci, channel in enumerate(CHANNELS):
            rows.append({
                "attack": attack,
                "channel": channel,
                "mean_ber": float(triples[:, ci].mean()),
                "n": len(triples),
            })
    return rows


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------

def write_det_csv(path, points: list[DetPoint]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["threshold", "pfp", "pfn"])
        for p in points:
            writer.writerow([repr(p.threshold), repr(p.pfp), repr(p.pfn)])


def write_ber_csv(path, rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["attack", "channel", "mean_ber", "n"])
        writer.writeheader()
        writer.writerows(rows)
