"""Object classification from filter-bank statistics.

Three classifiers live here:

* a recursive class posterior over a bank of class-conditioned filters,
  updated with per-class measurement likelihoods and clamped away from 0/1
  so a run of bad measurements cannot freeze the recursion at machine zero;
* a batch chi-squared classifier that scores accumulated NIS sums against
  each model's degrees of freedom;
* a forward/reverse heading classifier for bimodal camera heading
  detections, which splits each detection into a line angle plus a binary
  direction variable.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .filters import GaussianBelief, NisAccumulator
from .models import wrap_angle
from .stats import chi2_logpdf

# Posterior clamp; probabilities are kept inside [EPS, 1 - EPS].
EPS = 1e-6


@dataclass
class ClassPosterior:
    probs: np.ndarray

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=float)
        if self.probs.ndim != 1 or self.probs.size < 1:
            raise ValueError("probs must be a non-empty vector")
        if abs(self.probs.sum() - 1.0) > 1e-9:
            raise ValueError("probs must sum to 1")

    @classmethod
    def uniform(cls, n: int) -> "ClassPosterior":
        return cls(np.full(n, 1.0 / n))

    def copy(self) -> "ClassPosterior":
        return ClassPosterior(self.probs.copy())

    def argmax(self) -> int:
        return int(np.argmax(self.probs))


def _clamp_normalize(p: np.ndarray) -> np.ndarray:
    p = p / p.sum()
    p = np.clip(p, EPS, 1.0 - EPS)
    return p / p.sum()


def update_class_posterior(post: ClassPosterior,
                           likelihoods) -> ClassPosterior:
    """Bayes update of the class posterior with per-class likelihoods."""
    lik = np.asarray(likelihoods, dtype=float)
    if lik.shape != post.probs.shape:
        raise ValueError("likelihood vector length must match posterior")
    if np.any(lik < 0) or not np.all(np.isfinite(lik)):
        raise ValueError("likelihoods must be finite and >= 0")
    if not np.any(lik > 0):
        warnings.warn("all-zero likelihood vector; posterior unchanged",
                      RuntimeWarning, stacklevel=2)
        return post.copy()
    return ClassPosterior(_clamp_normalize(post.probs * lik))


def update_class_posterior_log(post: ClassPosterior,
                               log_likelihoods) -> ClassPosterior:
    """Same update with log-likelihood inputs (underflow-safe composition)."""
    ll = np.asarray(log_likelihoods, dtype=float)
    ll = ll - ll.max()
    return update_class_posterior(post, np.exp(ll))


def classify_batch(accs: list[NisAccumulator]) -> tuple[int, np.ndarray]:
    """Pick the dynamics model whose accumulated NIS is most probable.

    Each accumulator's summed NIS is scored with the chi-squared log
    density at ``count * meas_dim`` degrees of freedom; the highest score
    wins, ties broken by lowest index.
    """
    if any(a.count < 1 for a in accs):
        raise ValueError("every accumulator needs at least one measurement")
    scores = np.array([chi2_logpdf(a.sum, a.count * a.meas_dim)
                       for a in accs])
    return int(np.argmax(scores)), scores


@dataclass
class HeadingBelief:
    """Forward/reverse direction belief for a wheeled object."""

    count_fwd: int = 0
    count_rev: int = 0
    posterior_fwd: float = 0.5

    def copy(self) -> "HeadingBelief":
        return HeadingBelief(self.count_fwd, self.count_rev,
                             self.posterior_fwd)

    def map_reversed(self) -> bool:
        """MAP decision by counts; with a uniform prior this equals the
        posterior decision."""
        return self.count_rev > self.count_fwd


def update_heading(belief: HeadingBelief, z_theta: float,
                   predicted_theta: float,
                   detection_precision: float) -> tuple[HeadingBelief, float]:
    """Process one bimodal heading detection.

    The residual is evaluated for the raw detection and for the detection
    rotated by pi; the closer of the two is treated as the line-angle
    measurement to apply, and the agreeing/disagreeing count and the
    direction posterior are updated with the detector's precision as
    evidence strength.  Returns the updated belief and the angle to feed to
    the filter update.
    """
    if not 0.5 < detection_precision < 1.0:
        raise ValueError("detection_precision must be in (0.5, 1)")
    r_fwd = wrap_angle(z_theta - predicted_theta)
    r_rev = wrap_angle(z_theta + math.pi - predicted_theta)
    agree = abs(r_fwd) <= abs(r_rev)
    out = belief.copy()
    p = detection_precision
    if agree:
        out.count_fwd += 1
        lik_fwd, lik_rev = p, 1.0 - p
        angle = z_theta
    else:
        out.count_rev += 1
        lik_fwd, lik_rev = 1.0 - p, p
        angle = wrap_angle(z_theta + math.pi)
    num = lik_fwd * out.posterior_fwd
    den = num + lik_rev * (1.0 - out.posterior_fwd)
    out.posterior_fwd = float(np.clip(num / den, EPS, 1.0 - EPS))
    return out, angle


def init_bank_from_positions(z0, z1, dt: float, models,
                             noise_cov) -> list[GaussianBelief]:
    """Initialize one belief per model from the first two position fixes.

    Position is the second fix; velocity is the finite difference, so its
    covariance is twice the position noise divided by dt^2.  Wheeled
    headings start on the difference direction with variance growing as
    the implied speed shrinks.
    """
    z0 = np.asarray(z0, dtype=float)
    z1 = np.asarray(z1, dtype=float)
    R = np.asarray(noise_cov, dtype=float)
    d = (z1 - z0) / dt
    speed = float(np.hypot(d[0], d[1]))
    vel_var = 2.0 * float(np.trace(R)) / 2.0 / dt ** 2
    bank = []
    for model in models:
        cov = np.zeros((4, 4))
        cov[:2, :2] = R
        if model.wheeled:
            mean = np.array([z1[0], z1[1], speed,
                             math.atan2(d[1], d[0])])
            cov[2, 2] = vel_var
            cov[3, 3] = min(vel_var / max(speed, 0.5) ** 2,
                            math.pi ** 2 / 3.0)
        else:
            mean = np.array([z1[0], z1[1], d[0], d[1]])
            cov[2, 2] = vel_var
            cov[3, 3] = vel_var
        bank.append(GaussianBelief(mean, cov))
    return bank


def classify_position_track(measurements, dt: float, class_names,
                            noise_cov) -> tuple[int, np.ndarray]:
    """Batch-classify a position-measurement track against a model bank.

    Runs one filter per candidate class over the track, accumulating NIS
    from the third fix on (the first two seed the state), and scores the
    accumulated statistics with the chi-squared density.  Returns the
    winning class index and per-class averaged NIS.
    """
    from .models import MeasurementModel, make_motion_model

    zs = np.asarray(measurements, dtype=float)
    if zs.shape[0] < 3:
        raise ValueError("need at least three measurements")
    from .filters import kf_predict, kf_update

    models = [make_motion_model(c) for c in class_names]
    mm = MeasurementModel("position", noise_cov)
    bank = init_bank_from_positions(zs[0], zs[1], dt, models, noise_cov)
    accs = [NisAccumulator(meas_dim=2) for _ in models]
    for k in range(2, zs.shape[0]):
        for j, model in enumerate(models):
            bank[j] = kf_predict(bank[j], model, dt)
            bank[j], innov = kf_update(bank[j], zs[k], mm, model)
            accs[j].add(innov.nis)
    idx, _ = classify_batch(accs)
    eps = np.array([a.sum / a.count for a in accs])
    return idx, eps


def flip_wheeled_belief(belief: GaussianBelief) -> GaussianBelief:
    """Reverse a wheeled belief: v -> -v, theta -> theta + pi.

    The covariance transforms through the linear map diag(1, 1, -1, 1);
    the flip is an involution on (mean, cov).
    """
    mean = belief.mean.copy()
    mean[2] = -mean[2]
    mean[3] = wrap_angle(mean[3] + math.pi)
    J = np.diag([1.0, 1.0, -1.0, 1.0])
    return GaussianBelief(mean, J @ belief.cov @ J)


def apply_heading_flip(track) -> None:
    """Flip every wheeled belief of a track in place and swap the
    direction counts so the corrected orientation becomes 'forward'."""
    for j, model in enumerate(track.models):
        if model.wheeled:
            track.bank[j] = flip_wheeled_belief(track.bank[j])
    h = track.heading
    track.heading = HeadingBelief(h.count_rev, h.count_fwd,
                                  1.0 - h.posterior_fwd)
