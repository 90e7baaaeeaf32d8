"""Joint association, tracking and classification at an intersection.

One car turns through an intersection while two pedestrians cross; a
parked observer watches with camera, lidar and radar.  The tracker runs
the full pipeline (particle filter over assignments, per-track filter
banks, class posteriors, heading direction handling) and the run is scored
against the scripted ground truth.  A second pass drops the camera to show
what lidar + radar alone deliver.
"""

from jointtrack import TrackerConfig, track_stream
from jointtrack.metrics import score_run
from jointtrack.sim import intersection_scenario, run_scenario


def run(subset: str, seed: int = 0):
    scenario = intersection_scenario("sunny", subset, seed=seed)
    config = TrackerConfig(
        classes=("car", "pedestrian"),
        num_particles=8,
        seed=seed,
        sensor_noise={s.sensor_id: s.noise_cov for s in scenario.sensors})
    stream, truth_log = run_scenario(scenario, label_classes=config.classes)
    snapshots = track_stream(stream, config,
                             output_rate=scenario.output_rate,
                             t_start=0.0, t_end=scenario.duration)
    return score_run(truth_log, snapshots, ego=scenario.ego), len(stream)


for subset in ("CLR", "LR", "CR"):
    report, n_meas = run(subset)
    print(f"sensors {subset}  ({n_meas} measurements)")
    print(report.table())
    print()

print("Camera labels carry most of the classification evidence, so the")
print("L+R row falls behind on correct classification while staying")
print("comparable on the pure tracking columns.")
