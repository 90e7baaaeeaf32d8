"""Kalman / extended Kalman filtering with innovation consistency statistics.

Covariance updates use the Joseph form throughout; angle-valued residual
components are wrapped to (-pi, pi] before the innovation is formed.  The
normalized innovation squared (NIS) of each update is returned so callers
can accumulate whiteness statistics per dynamics model and score them
against the chi-squared distribution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .models import EgoPose, MeasurementModel, MotionModel, substeps, wrap_angle
from .stats import chi2_cdf

# Relative eigenvalue slack accepted before a covariance is declared broken.
_PSD_TOL = 1e-10

LOG_TWO_PI = math.log(2.0 * math.pi)


class FilterNumericsError(RuntimeError):
    """Raised when a covariance loses positive definiteness or S is singular."""


@dataclass
class GaussianBelief:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float)
        self.cov = np.asarray(self.cov, dtype=float)
        if self.cov.shape != (self.mean.size, self.mean.size):
            raise ValueError("cov shape must match mean")

    def copy(self) -> "GaussianBelief":
        return GaussianBelief(self.mean.copy(), self.cov.copy())


@dataclass
class InnovationRecord:
    residual: np.ndarray
    cov: np.ndarray
    nis: float


@dataclass
class NisAccumulator:
    """Running sum of NIS values for one dynamics model."""

    meas_dim: int
    count: int = 0
    sum: float = 0.0

    def add(self, nis: float) -> None:
        if nis < 0:
            raise ValueError("nis must be >= 0")
        self.count += 1
        self.sum += nis


def _symmetrize(P: np.ndarray) -> np.ndarray:
    return 0.5 * (P + P.T)


def _check_psd(P: np.ndarray, context: str) -> np.ndarray:
    # Cholesky of the slack-shifted matrix is much cheaper than an
    # eigendecomposition and fails exactly when an eigenvalue is below
    # the accepted slack.
    scale = max(float(np.max(np.abs(P))), 1.0)
    try:
        np.linalg.cholesky(P + (_PSD_TOL * scale) * np.eye(P.shape[0]))
    except np.linalg.LinAlgError:
        eig = float(np.linalg.eigvalsh(P)[0])
        raise FilterNumericsError(f"covariance not PSD after {context}: "
                                  f"min eigenvalue {eig:.3e}") from None
    return P


def kf_predict(belief: GaussianBelief, model: MotionModel,
               dt: float) -> GaussianBelief:
    """Propagate a belief through the motion model.

    ``dt == 0`` is the identity.  Long intervals are sub-stepped per the
    model discretization rules.
    """
    if dt < 0:
        raise ValueError("dt must be >= 0")
    if dt == 0:
        return belief.copy()
    x = belief.mean.copy()
    P = belief.cov.copy()
    correction = getattr(model, "predict_cov_correction", None)
    for h in substeps(dt):
        F = model.jacobian(x, h)
        Q = model.process_noise_cov(x, h)
        Pn = F @ P @ F.T + Q
        if correction is not None:
            # Second-order spread of the nonlinear transition.  Without it
            # the predicted covariance understates the effect of heading
            # uncertainty and the innovation statistics run hot.
            Pn += correction(x, P, h)
        x = model.predict_state(x, h)
        P = _symmetrize(Pn)
    _check_psd(P, "predict")
    return GaussianBelief(x, P)


def _innovation(belief: GaussianBelief, z: np.ndarray, mm: MeasurementModel,
                model: MotionModel, ego: EgoPose):
    z = np.asarray(z, dtype=float)
    if z.shape != (mm.dim,):
        raise ValueError(f"measurement dimension {z.shape} != {mm.dim}")
    zhat, H = mm.predict(model, belief.mean, ego)
    y = z - zhat
    y[mm.angular] = wrap_angle(y[mm.angular])
    S = _symmetrize(H @ belief.cov @ H.T + mm.noise_cov)
    return y, S, H


def _solve_spd(S: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    try:
        L = np.linalg.cholesky(S)
    except np.linalg.LinAlgError as exc:
        raise FilterNumericsError("singular innovation covariance") from exc
    return np.linalg.solve(L.T, np.linalg.solve(L, rhs))


def kf_update(belief: GaussianBelief, z, mm: MeasurementModel,
              model: MotionModel,
              ego: EgoPose = EgoPose()) -> tuple[GaussianBelief, InnovationRecord]:
    """Measurement update returning the posterior and innovation record."""
    y, S, H = _innovation(belief, z, mm, model, ego)
    try:
        L = np.linalg.cholesky(S)
    except np.linalg.LinAlgError as exc:
        raise FilterNumericsError("singular innovation covariance") from exc
    rhs = np.linalg.solve(L.T, np.linalg.solve(L, np.column_stack([y, H @ belief.cov])))
    Sinv_y = rhs[:, 0]
    nis = float(y @ Sinv_y)
    K = rhs[:, 1:].T
    mean = model.wrap_state(belief.mean + K @ y)
    IKH = np.eye(belief.mean.size) - K @ H
    P = _symmetrize(IKH @ belief.cov @ IKH.T + K @ mm.noise_cov @ K.T)
    _check_psd(P, "update")
    return GaussianBelief(mean, P), InnovationRecord(y, S, nis)


def meas_log_likelihood(belief: GaussianBelief, z, mm: MeasurementModel,
                        model: MotionModel, ego: EgoPose = EgoPose()) -> float:
    """Log density of the residual under N(0, S); belief is not modified."""
    y, S, _ = _innovation(belief, z, mm, model, ego)
    nis = float(y @ _solve_spd(S, y))
    sign, logdet = np.linalg.slogdet(S)
    if sign <= 0:
        raise FilterNumericsError("singular innovation covariance")
    return -0.5 * (nis + logdet + mm.dim * LOG_TWO_PI)


def meas_likelihood(belief: GaussianBelief, z, mm: MeasurementModel,
                    model: MotionModel, ego: EgoPose = EgoPose()) -> float:
    return math.exp(meas_log_likelihood(belief, z, mm, model, ego))


def nis_average(acc: NisAccumulator) -> tuple[float, float]:
    """Averaged NIS and the chi-squared CDF percentile of the summed NIS.

    The sum of ``count`` NIS values of dimension ``meas_dim`` is
    chi-squared with ``count * meas_dim`` degrees of freedom under a
    consistent filter.
    """
    if acc.count < 1:
        raise ValueError("accumulator is empty")
    mean = acc.sum / acc.count
    percentile = chi2_cdf(acc.sum, acc.count * acc.meas_dim)
    return mean, percentile


def gate_chi2_threshold(meas_dim: int, confidence: float = 0.997) -> float:
    """Per-measurement NIS gate threshold (optional engineering gate)."""
    from .stats import chi2_ppf

    return chi2_ppf(confidence, meas_dim)
