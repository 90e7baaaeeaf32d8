"""Scoring of tracker output against scripted ground truth.

Per output tick, each truth object inside the evaluation region (front
semicircle, 20 m) is matched to the nearest estimated object by greedy
nearest-first unique assignment; a match within the 2 m gate counts as
tracked.  Range and bearing errors are RMS over tracked ticks relative to
the ego position.  A tracked object counts as classified when its maximum
class probability reaches the confidence floor; correct, mis- and
unclassified fractions partition the tracked ticks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .models import EgoPose, wrap_angle
from .rbpf import Snapshot, TrackerConfig, track_stream

GATE_RADIUS = 2.0
EVAL_RANGE = 20.0
CONFIDENCE_FLOOR = 0.95


@dataclass
class TrackingReport:
    object_tracked: float
    range_rms: float
    bearing_rms: float
    correct_class: float
    mis_class: float
    unclassified: float
    n_returns: int
    n_truth_ticks: int

    def table(self) -> str:
        return ("tracked  range_rms  bearing_rms  correct  mis  "
                "unclassified  returns\n"
                f"{self.object_tracked:7.3f}  {self.range_rms:9.3f}  "
                f"{self.bearing_rms:11.4f}  {self.correct_class:7.3f}  "
                f"{self.mis_class:4.3f}  {self.unclassified:12.3f}  "
                f"{self.n_returns:7d}")


@dataclass
class CountErrorCdf:
    errors: np.ndarray
    cdf: np.ndarray        # sorted errors; empirical CDF support
    rms: float

    @classmethod
    def from_errors(cls, errors) -> "CountErrorCdf":
        e = np.asarray(errors, dtype=float)
        rms = float(np.sqrt(np.mean(e * e))) if e.size else 0.0
        return cls(e, np.sort(e), rms)


def _polar(ego: EgoPose, x: float, y: float) -> tuple[float, float]:
    dx, dy = x - ego.x, y - ego.y
    return math.hypot(dx, dy), float(wrap_angle(math.atan2(dy, dx)
                                                - ego.heading))


def _in_eval_region(ego: EgoPose, x: float, y: float,
                    eval_range: float) -> bool:
    r, b = _polar(ego, x, y)
    return r <= eval_range and abs(b) <= math.pi / 2.0


def _greedy_match(truths, records, gate: float):
    """Nearest-first unique truth-estimate pairing within the gate."""
    pairs = []
    for i, ts in enumerate(truths):
        for j, rec in enumerate(records):
            d = math.hypot(rec.position[0] - ts.x, rec.position[1] - ts.y)
            if d <= gate:
                pairs.append((d, i, j))
    pairs.sort()
    used_t, used_r, out = set(), set(), []
    for d, i, j in pairs:
        if i in used_t or j in used_r:
            continue
        used_t.add(i)
        used_r.add(j)
        out.append((i, j))
    return out


def score_run(truth_log, snapshots: list[Snapshot],
              ego: EgoPose = EgoPose(), gate: float = GATE_RADIUS,
              eval_range: float = EVAL_RANGE,
              confidence_floor: float = CONFIDENCE_FLOOR,
              class_filter: str | None = None) -> TrackingReport:
    """Score one run; ``class_filter`` restricts truth objects to one class."""
    snap_by_time = {round(s.time, 6): s for s in snapshots}
    n_truth_ticks = 0
    range_sq, bearing_sq = [], []
    n_matched = n_correct = n_mis = 0
    for t, truths in truth_log:
        snap = snap_by_time.get(round(t, 6))
        truths = [ts for ts in truths
                  if _in_eval_region(ego, ts.x, ts.y, eval_range)
                  and (class_filter is None or ts.class_name == class_filter)]
        n_truth_ticks += len(truths)
        if snap is None or not truths:
            continue
        for i, j in _greedy_match(truths, snap.records, gate):
            ts, rec = truths[i], snap.records[j]
            n_matched += 1
            rt, bt = _polar(ego, ts.x, ts.y)
            re, be = _polar(ego, rec.position[0], rec.position[1])
            range_sq.append((re - rt) ** 2)
            bearing_sq.append(float(wrap_angle(be - bt)) ** 2)
            if rec.class_probs.max() >= confidence_floor:
                if rec.class_name == ts.class_name:
                    n_correct += 1
                else:
                    n_mis += 1
    tracked = n_matched / n_truth_ticks if n_truth_ticks else 0.0
    rng_rms = math.sqrt(np.mean(range_sq)) if range_sq else 0.0
    brg_rms = math.sqrt(np.mean(bearing_sq)) if bearing_sq else 0.0
    if n_matched:
        correct = n_correct / n_matched
        mis = n_mis / n_matched
    else:
        correct = mis = 0.0
    return TrackingReport(tracked, rng_rms, brg_rms, correct, mis,
                          1.0 - correct - mis, n_matched, n_truth_ticks)


def object_counts(snapshots: list[Snapshot],
                  confidence_floor: float = CONFIDENCE_FLOOR):
    """Per-tick overall and classified object counts."""
    overall = np.array([len(s.records) for s in snapshots], dtype=float)
    classified = np.array(
        [sum(1 for r in s.records if r.class_probs.max() >= confidence_floor)
         for s in snapshots], dtype=float)
    return overall, classified


def particle_study(measurements, config: TrackerConfig,
                   counts=(1, 4, 8, 12, 16, 20), benchmark: int = 50,
                   output_rate: float = 10.0):
    """Replay one stream at several particle counts against a benchmark run.

    Returns {count: (overall CountErrorCdf, classified CountErrorCdf)}.
    """
    bench_cfg = replace(config, num_particles=benchmark)
    bench = track_stream(measurements, bench_cfg, output_rate)
    b_total, b_class = object_counts(bench)
    out = {}
    for count in counts:
        snaps = track_stream(measurements,
                             replace(config, num_particles=count),
                             output_rate)
        total, classified = object_counts(snaps)
        n = min(total.size, b_total.size)
        out[count] = (
            CountErrorCdf.from_errors(np.abs(total[:n] - b_total[:n])),
            CountErrorCdf.from_errors(np.abs(classified[:n] - b_class[:n])))
    return out
