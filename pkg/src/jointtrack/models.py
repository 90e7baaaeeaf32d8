"""Motion and measurement models for urban object tracking.

Two motion model families are provided: a double-integrator random walk for
pedestrians (state ``[x1, x2, v1, v2]``, east/north position and velocity)
and a unicycle model for wheeled objects (state ``[x1, x2, v, theta]``,
position, signed ground speed, heading).  Discretization is single-step
Euler per measurement interval; long intervals are sub-stepped to keep the
linearization honest.  Continuous noise channels are mapped to discrete
process noise as ``G Q G^T dt`` (first order).

Measurement models cover position-only sensors (GPS, lidar cluster
centroids), radar (range, bearing, radial speed) and camera detections
(bearing, range).  Camera heading is handled separately by the heading
classifier, not as a row of these models.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * math.pi

# Intervals longer than this get sub-stepped at <= MAX_SUBSTEP seconds.
SUBSTEP_TRIGGER = 1.5
MAX_SUBSTEP = 0.5


def wrap_angle(theta):
    """Wrap an angle (scalar or array) to (-pi, pi]."""
    return math.pi - (math.pi - theta) % TWO_PI


@dataclass(frozen=True)
class NoiseSpec:
    """Continuous-time process noise levels for one object class.

    ``accel_sd`` is the acceleration noise in m/s^2.  ``rot_sd`` is the
    heading-rate noise in deg/s and applies only to wheeled classes.
    """

    accel_sd: float
    rot_sd: float | None = None
    class_id: str = ""

    def __post_init__(self):
        if not self.accel_sd >= 0:
            raise ValueError("accel_sd must be >= 0")
        if self.rot_sd is not None and not self.rot_sd >= 0:
            raise ValueError("rot_sd must be >= 0")

    @property
    def rot_sd_rad(self) -> float:
        if self.rot_sd is None:
            raise ValueError(f"class {self.class_id!r} has no rotation noise")
        return math.radians(self.rot_sd)


# Per-class process noise levels (acceleration m/s^2, rotation deg/s).
CLASS_NOISE: dict[str, NoiseSpec] = {
    "pedestrian": NoiseSpec(0.04, None, "pedestrian"),
    "car": NoiseSpec(0.6, 15.0, "car"),
    "bus": NoiseSpec(0.4, 15.0, "bus"),
    "cyclist": NoiseSpec(0.31, 15.0, "cyclist"),
}


def _check_finite(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError(f"non-finite state: {x}")
    return x


class PedestrianModel:
    """Linear constant-velocity model with acceleration process noise."""

    dim = 4
    wheeled = False

    def __init__(self, noise: NoiseSpec):
        self.noise = noise

    def predict_state(self, x, dt: float):
        x = _check_finite(x)
        if not dt > 0:
            raise ValueError("dt must be > 0")
        out = x.copy()
        out[0] += x[2] * dt
        out[1] += x[3] * dt
        return out

    def jacobian(self, x, dt: float):
        F = np.eye(4)
        F[0, 2] = dt
        F[1, 3] = dt
        return F

    def process_noise_cov(self, x, dt: float):
        q = self.noise.accel_sd ** 2 * dt
        Q = np.zeros((4, 4))
        Q[2, 2] = q
        Q[3, 3] = q
        return Q

    # Accessors shared with the wheeled model so callers can stay generic.
    def position(self, x):
        return np.asarray(x[:2], dtype=float)

    def velocity_xy(self, x):
        return np.array([x[2], x[3]], dtype=float)

    def wrap_state(self, x):
        return np.asarray(x, dtype=float)


class WheeledModel:
    """Unicycle model; EKF linearization, heading wrapped to (-pi, pi].

    Speed is signed: a track may carry negative speed with reversed heading
    and still predict the same positions, which is what the heading-flip
    correction relies on.
    """

    dim = 4
    wheeled = True

    def __init__(self, noise: NoiseSpec):
        if noise.rot_sd is None:
            raise ValueError("wheeled model requires rotation noise")
        self.noise = noise

    def predict_state(self, x, dt: float):
        x = _check_finite(x)
        if not dt > 0:
            raise ValueError("dt must be > 0")
        out = x.copy()
        v, th = x[2], x[3]
        out[0] += v * math.cos(th) * dt
        out[1] += v * math.sin(th) * dt
        out[3] = wrap_angle(th)
        return out

    def jacobian(self, x, dt: float):
        v, th = x[2], x[3]
        F = np.eye(4)
        F[0, 2] = math.cos(th) * dt
        F[0, 3] = -v * math.sin(th) * dt
        F[1, 2] = math.sin(th) * dt
        F[1, 3] = v * math.cos(th) * dt
        return F

    def process_noise_cov(self, x, dt: float):
        Q = np.zeros((4, 4))
        Q[2, 2] = self.noise.accel_sd ** 2 * dt
        Q[3, 3] = self.noise.rot_sd_rad ** 2 * dt
        return Q

    def hessians(self, x, dt: float):
        """Second derivatives of the position components of predict_state.

        Only the position outputs are nonlinear (through speed and
        heading); returns (output index, Hessian) pairs for them.
        """
        v, th = x[2], x[3]
        Hx = np.zeros((4, 4))
        Hx[2, 3] = Hx[3, 2] = -math.sin(th) * dt
        Hx[3, 3] = -v * math.cos(th) * dt
        Hy = np.zeros((4, 4))
        Hy[2, 3] = Hy[3, 2] = math.cos(th) * dt
        Hy[3, 3] = -v * math.sin(th) * dt
        return [(0, Hx), (1, Hy)]

    def predict_cov_correction(self, x, P, dt: float):
        """Second-order covariance terms 0.5*tr(Hi P Hj P) of the
        transition, expanded in closed form over the (speed, heading)
        block the Hessians live in.  Matches the generic Hessian formula
        exactly but without any matrix products.
        """
        v, th = x[2], x[3]
        a = (-math.sin(th) * dt, math.cos(th) * dt)
        b = (-v * math.cos(th) * dt, -v * math.sin(th) * dt)
        pvv, pvt, ptt = P[2, 2], P[2, 3], P[3, 3]
        out = np.zeros((4, 4))
        m = [None, None]
        for i in range(2):
            # rows of [[0, a],[a, b]] @ [[pvv, pvt],[pvt, ptt]]
            m[i] = (a[i] * pvt, a[i] * ptt,
                    a[i] * pvv + b[i] * pvt, a[i] * pvt + b[i] * ptt)
        for i in range(2):
            for j in range(2):
                tr = (m[i][0] * m[j][0] + m[i][1] * m[j][2]
                      + m[i][2] * m[j][1] + m[i][3] * m[j][3])
                out[i, j] = 0.5 * tr
        return out

    def position(self, x):
        return np.asarray(x[:2], dtype=float)

    def velocity_xy(self, x):
        v, th = x[2], x[3]
        return np.array([v * math.cos(th), v * math.sin(th)])

    def wrap_state(self, x):
        out = np.asarray(x, dtype=float).copy()
        out[3] = wrap_angle(out[3])
        return out


MotionModel = PedestrianModel | WheeledModel


def make_motion_model(class_name: str) -> MotionModel:
    noise = CLASS_NOISE[class_name]
    if noise.rot_sd is None:
        return PedestrianModel(noise)
    return WheeledModel(noise)


def substeps(dt: float) -> list[float]:
    """Split an interval into Euler sub-steps of at most MAX_SUBSTEP."""
    if dt <= SUBSTEP_TRIGGER:
        return [dt]
    n = math.ceil(dt / MAX_SUBSTEP)
    return [dt / n] * n


@dataclass(frozen=True)
class EgoPose:
    """Ego vehicle pose; measurement frames are relative to it."""

    x: float = 0.0
    y: float = 0.0
    heading: float = 0.0
    vx: float = 0.0
    vy: float = 0.0


@dataclass
class MeasurementModel:
    """Measurement function: kind, noise covariance and angular components.

    ``kind`` is one of ``position``, ``radar``, ``camera``.  ``angular``
    marks measurement components that are angles so residuals get wrapped.
    """

    kind: str
    noise_cov: np.ndarray
    angular: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        R = np.asarray(self.noise_cov, dtype=float)
        if R.ndim != 2 or R.shape[0] != R.shape[1]:
            raise ValueError("noise_cov must be square")
        if not np.allclose(R, R.T):
            raise ValueError("noise_cov must be symmetric")
        if np.any(np.linalg.eigvalsh(R) <= 0):
            raise ValueError("noise_cov must be positive definite")
        self.noise_cov = R
        if self.angular is None:
            default = {
                "position": [False, False],
                "radar": [False, True, False],
                "camera": [True, False],
            }
            self.angular = np.array(default[self.kind])
        else:
            self.angular = np.asarray(self.angular, dtype=bool)
        if self.angular.shape != (R.shape[0],):
            raise ValueError("angular mask length must match noise_cov")

    @property
    def dim(self) -> int:
        return self.noise_cov.shape[0]

    def predict(self, model: MotionModel, x, ego: EgoPose = EgoPose()):
        """Predicted measurement and its Jacobian at the given state."""
        x = _check_finite(x)
        if self.kind == "heading":
            # Scalar heading observation of a wheeled state.
            H = np.zeros((1, 4))
            H[0, 3] = 1.0
            return np.array([wrap_angle(x[3])]), H
        if self.kind == "position":
            z = model.position(x)
            H = np.zeros((2, 4))
            H[0, 0] = 1.0
            H[1, 1] = 1.0
            return z, H
        dx = x[0] - ego.x
        dy = x[1] - ego.y
        r2 = dx * dx + dy * dy
        r = math.sqrt(r2)
        if r < 1e-6:
            raise ValueError("object at ego origin: degenerate geometry")
        bearing = wrap_angle(math.atan2(dy, dx) - ego.heading)
        db = np.array([-dy / r2, dx / r2, 0.0, 0.0])
        dr = np.array([dx / r, dy / r, 0.0, 0.0])
        if self.kind == "camera":
            z = np.array([bearing, r])
            return z, np.vstack([db, dr])
        if self.kind == "radar":
            vxy = model.velocity_xy(x)
            vrx = vxy[0] - ego.vx
            vry = vxy[1] - ego.vy
            s = dx * vrx + dy * vry
            rrate = s / r
            drr = np.zeros(4)
            drr[0] = vrx / r - s * dx / (r2 * r)
            drr[1] = vry / r - s * dy / (r2 * r)
            if isinstance(model, PedestrianModel):
                drr[2] = dx / r
                drr[3] = dy / r
            else:
                v, th = x[2], x[3]
                drr[2] = (dx * math.cos(th) + dy * math.sin(th)) / r
                drr[3] = (-dx * v * math.sin(th) + dy * v * math.cos(th)) / r
            z = np.array([r, bearing, rrate])
            return z, np.vstack([dr, db, drr])
        raise ValueError(f"unknown measurement kind {self.kind!r}")


@dataclass
class Measurement:
    """One timestamped sensor observation.

    ``values`` is kind-specific: ``position``/``lidar`` -> (east, north),
    ``radar`` -> (range, bearing, radial speed), ``camera`` -> (bearing,
    range).  ``label`` is an optional weak class label with the emitting
    sensor's precision.  ``heading`` carries the camera's vehicle-heading
    detection when present.
    """

    time: float
    sensor: str
    kind: str
    values: np.ndarray
    label: str | None = None
    label_precision: float = 0.0
    heading: float | None = None
    heading_precision: float = 0.0
    truth_id: str | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)

    def position_estimate(self, ego: EgoPose = EgoPose()) -> np.ndarray:
        """Back out a world-frame position from the measurement values."""
        if self.kind in ("position", "lidar"):
            return self.values[:2].copy()
        if self.kind == "radar":
            r, b = self.values[0], self.values[1]
        elif self.kind == "camera":
            b, r = self.values[0], self.values[1]
        else:
            raise ValueError(f"unknown measurement kind {self.kind!r}")
        a = b + ego.heading
        return np.array([ego.x + r * math.cos(a), ego.y + r * math.sin(a)])


def measurement_values(kind: str, model: MotionModel, x, ego: EgoPose,
                       noise_cov: np.ndarray) -> np.ndarray:
    """Noise-free measurement of a true state (simulator support)."""
    mm = MeasurementModel(_model_kind(kind), noise_cov)
    z, _ = mm.predict(model, x, ego)
    return z


def _model_kind(kind: str) -> str:
    """Map sensor stream kinds onto measurement-model kinds."""
    return {"gps": "position", "lidar": "position", "radar": "radar",
            "camera": "camera"}.get(kind, kind)
