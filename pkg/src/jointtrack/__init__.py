"""Joint data association, multi-object tracking and model classification.

A Rao-Blackwellized particle filter samples measurement-to-object
assignments while each hypothesized object carries a bank of Kalman /
extended Kalman filters, one per candidate motion class.  Innovation
statistics from the bank drive a recursive class posterior, so tracking
and classification share one estimator.  Supporting modules provide the
motion and measurement models, chi-square utilities, a lidar person
detector, a sensor simulator and scoring metrics.
"""

from .classify import (ClassPosterior, HeadingBelief, apply_heading_flip,
                       classify_batch, classify_position_track,
                       init_bank_from_positions, update_class_posterior,
                       update_class_posterior_log, update_heading)
from .clustering import (LoGGrid, PointCloud2D, cluster_cars, detect_people,
                         extract_person_peaks, person_kernel)
from .filters import (FilterNumericsError, GaussianBelief, InnovationRecord,
                      NisAccumulator, gate_chi2_threshold, kf_predict,
                      kf_update, meas_likelihood, meas_log_likelihood,
                      nis_average)
from .metrics import (CountErrorCdf, TrackingReport, object_counts,
                      particle_study, score_run)
from .models import (CLASS_NOISE, EgoPose, Measurement, MeasurementModel,
                     NoiseSpec, PedestrianModel, WheeledModel,
                     make_motion_model, wrap_angle)
from .rbpf import (JointTracker, ObjectTrack, Particle, Snapshot,
                   TrackerConfig, save_snapshots, track_stream)
from .sim import (Scenario, SensorSpec, TruthObject, generate_mc_track,
                  gps_classification_study, intersection_scenario,
                  load_scenario, load_stream, run_mc_study, run_scenario,
                  save_scenario, save_stream, standard_sensors)
from .stats import chi2_cdf, chi2_logpdf, chi2_pdf, chi2_ppf

__all__ = [
    "CLASS_NOISE", "ClassPosterior", "CountErrorCdf", "EgoPose",
    "FilterNumericsError", "GaussianBelief", "HeadingBelief",
    "InnovationRecord", "JointTracker", "LoGGrid", "Measurement",
    "MeasurementModel", "NisAccumulator", "NoiseSpec", "ObjectTrack",
    "Particle", "PedestrianModel", "PointCloud2D", "Scenario", "SensorSpec",
    "Snapshot", "TrackerConfig", "TrackingReport", "TruthObject",
    "WheeledModel", "apply_heading_flip", "chi2_cdf", "chi2_logpdf",
    "chi2_pdf", "chi2_ppf", "classify_batch", "classify_position_track",
    "cluster_cars", "detect_people", "extract_person_peaks",
    "gate_chi2_threshold", "generate_mc_track", "gps_classification_study",
    "init_bank_from_positions", "intersection_scenario",
    "kf_predict", "kf_update", "load_scenario", "load_stream",
    "make_motion_model", "meas_likelihood", "meas_log_likelihood",
    "nis_average", "object_counts", "particle_study", "person_kernel",
    "run_mc_study", "run_scenario", "save_scenario", "save_snapshots",
    "save_stream", "score_run", "standard_sensors", "track_stream",
    "update_class_posterior", "update_class_posterior_log", "update_heading",
    "wrap_angle",
]

__version__ = "0.1.0"
