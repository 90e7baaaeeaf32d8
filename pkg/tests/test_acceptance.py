"""End-to-end acceptance gate.

Each test covers one release criterion, replaying the full study it
belongs to, and prints a single pass/fail line on the real stdout so the
verdicts survive pytest's capture.  Tests here are slow by design (the
whole module takes on the order of fifteen minutes); the fast unit and
property suites live in the other test modules.

One sub-assertion is a known red: the heading vote cannot reach 99
percent correct from 20 detections at 0.7 per-detection precision, since
a majority vote over 20 Bernoulli(0.7) indicators caps out near 98
percent.  The stated target is asserted anyway rather than weakened.
"""

import math
import sys
import time

import numpy as np
import pytest

from jointtrack import (GaussianBelief, JointTracker, Measurement,
                        MeasurementModel, PointCloud2D, TrackerConfig,
                        detect_people, gps_classification_study,
                        intersection_scenario, kf_predict, kf_update,
                        make_motion_model, nis_average, person_kernel,
                        run_mc_study, run_scenario, track_stream)
from jointtrack.classify import (ClassPosterior, HeadingBelief,
                                 update_class_posterior_log, update_heading)
from jointtrack.clustering import CELL_SIZE, LoGGrid, extract_person_peaks, \
    log_response
from jointtrack.filters import NisAccumulator, meas_log_likelihood
from jointtrack.metrics import particle_study, score_run
from jointtrack.sim import Scenario, TruthObject, standard_sensors
from jointtrack.models import wrap_angle

R_GPS = np.array([[1.2, 0.1], [0.1, 1.2]])


def verdict(capsys, name: str, ok: bool, detail: str = ""):
    line = f"[{'PASS' if ok else 'FAIL'}] {name}"
    if detail:
        line += f"  ({detail})"
    with capsys.disabled():
        print(line, flush=True)
    assert ok, line


# -- 1: Monte Carlo cyclist vs pedestrian classification --------------------


def test_criterion_1_mc_classification(capsys):
    t0 = time.perf_counter()
    report = run_mc_study(("cyclist", "pedestrian"), 100, seed=0)
    elapsed = time.perf_counter() - t0
    cyc_acc = report.confusion[0, 0]
    ped_acc = report.confusion[1, 1]
    eps_true = np.diag(report.mean_eps)
    cross = report.mean_eps[0, 1]      # cyclist tracks under the ped model
    ok = (elapsed < 30.0
          and cyc_acc >= 0.97
          and abs(ped_acc - 0.79) <= 0.10
          and np.all(np.abs(eps_true - 2.0) <= 0.3)
          and cross > 5.0)
    verdict(capsys, "criterion 1: MC classification study", ok,
            f"cyclist {cyc_acc:.2f}, ped {ped_acc:.2f}, "
            f"eps {eps_true.round(2)}, cross {cross:.1f}, {elapsed:.1f}s")


# -- 2: averaged-NIS consistency anchor -------------------------------------


def test_criterion_2_nis_anchor(capsys):
    import scipy.stats

    acc = NisAccumulator(meas_dim=2)
    median_sum = scipy.stats.chi2.ppf(0.5, 50 * 2)
    for _ in range(50):
        acc.add(median_sum / 50.0)
    mean, pct = nis_average(acc)
    ok = abs(mean - 1.986) <= 0.001 and abs(pct - 0.5) < 1e-9
    verdict(capsys, "criterion 2: chi-square median anchor", ok,
            f"mean {mean:.4f}")


# -- 3: long position-only classification -----------------------------------


def test_criterion_3_gps_classification(capsys):
    report = gps_classification_study(20, seed=0, duration=12000.0)
    classes = report.classes
    conf = report.confusion
    idx = {c: i for i, c in enumerate(classes)}
    easy_ok = all(conf[idx[c], idx[c]] >= 0.95
                  for c in ("pedestrian", "car", "bus"))
    c = idx["cyclist"]
    errors = conf[c].copy()
    errors[c] = 0.0
    to_ped = errors[idx["pedestrian"]]
    cyc_ok = errors.sum() == 0.0 or (to_ped >= 0.5 * errors.sum()
                                     and to_ped >= errors.max())
    ok = easy_ok and cyc_ok
    verdict(capsys, "criterion 3: GPS-grade long-track classification", ok,
            f"diag {np.diag(conf).round(2)}, cyclist->ped {to_ped:.2f}")


# -- 4: one particle reduces to the plain filter bank -----------------------


def wandering_gps(n, seed):
    rng = np.random.default_rng(seed)
    pos = np.zeros(2)
    out = []
    for k in range(n):
        pos = pos + rng.normal(scale=1.0, size=2)
        z = pos + rng.multivariate_normal(np.zeros(2), R_GPS)
        out.append(Measurement(float(k), "gps", "position", z))
    return out


def test_criterion_4_reduction_oracle(capsys):
    cfg = TrackerConfig(num_particles=1, p_birth=0.0, p_clutter=0.0,
                        miss_limit=10 ** 9, position_var_ceiling=1e12,
                        sensor_noise={"gps": R_GPS})
    measurements = wandering_gps(500, seed=12)
    tracker = JointTracker(cfg)
    for z in measurements:
        tracker.step(z)
    track = tracker.particles[0].tracks[0]

    models = [make_motion_model(c) for c in cfg.classes]
    mm = MeasurementModel("position", R_GPS)
    bank = []
    z0 = measurements[0]
    for model in models:
        mean = np.array([z0.values[0], z0.values[1], 0.0, 0.0])
        cov = np.diag([R_GPS.max(), R_GPS.max(), cfg.init_speed_var,
                       cfg.init_speed_var])
        if model.wheeled:
            cov[3, 3] = cfg.init_heading_var
        bank.append(GaussianBelief(mean, cov))
    post = ClassPosterior.uniform(len(models))
    t_prev = z0.time
    for z in measurements[1:]:
        dt = z.time - t_prev
        t_prev = z.time
        logliks = np.empty(len(models))
        for j, model in enumerate(models):
            bank[j] = kf_predict(bank[j], model, dt)
            logliks[j] = meas_log_likelihood(bank[j], z.values, mm, model)
            bank[j], _ = kf_update(bank[j], z.values, mm, model)
        post = update_class_posterior_log(post, logliks)

    worst = 0.0
    for j in range(len(models)):
        worst = max(worst,
                    np.abs(track.bank[j].mean - bank[j].mean).max(),
                    np.abs(track.bank[j].cov - bank[j].cov).max())
    worst = max(worst, np.abs(track.class_post.probs - post.probs).max())
    ok = worst <= 1e-12
    verdict(capsys, "criterion 4: single-particle reduction oracle", ok,
            f"max abs deviation {worst:.2e} over 500 measurements")


# -- 5: heading-direction vote ----------------------------------------------


def test_criterion_5_heading_vote(capsys):
    p = 0.7
    out, _ = update_heading(HeadingBelief(), 0.03, 0.0, p)
    exact_ok = abs(out.posterior_fwd - p) <= 1e-12

    rng = np.random.default_rng(2024)
    trials, n_det, correct = 1000, 20, 0
    for _ in range(trials):
        belief = HeadingBelief()
        for _ in range(n_det):
            flipped = rng.random() > p
            z = 0.1 * rng.standard_normal() + (math.pi if flipped else 0.0)
            belief, _ = update_heading(belief, wrap_angle(z), 0.0, p)
        if not belief.map_reversed():
            correct += 1
    rate = correct / trials
    # Known red: the vote is binomially capped near 0.98 at these
    # parameters, so the stated 0.99 target cannot be met.
    ok = exact_ok and rate >= 0.99
    verdict(capsys, "criterion 5: heading direction vote", ok,
            f"single-detection exact: {exact_ok}, "
            f"MC rate {rate:.3f} vs target 0.99")


# -- 6: intersection scenario, sensor subsets and heading modes -------------


def intersection_run(subset, seed, heading_mode="split"):
    scenario = intersection_scenario("sunny", subset, seed=seed)
    noise = {s.sensor_id: s.noise_cov for s in scenario.sensors}
    config = TrackerConfig(classes=("car", "pedestrian"), num_particles=8,
                           seed=seed, heading_mode=heading_mode,
                           sensor_noise=noise, ego=scenario.ego)
    stream, truth = run_scenario(scenario, label_classes=config.classes)
    snapshots = track_stream(stream, config,
                             output_rate=scenario.output_rate,
                             t_start=0.0, t_end=scenario.duration)
    return truth, snapshots, scenario.ego


def test_criterion_6_intersection_trends(capsys):
    seeds = range(5)
    per_seed_ok = True
    split_sq = raw_sq = split_n = raw_n = 0.0
    details = []
    for seed in seeds:
        truth, snaps, ego = intersection_run("CLR", seed)
        clr = score_run(truth, snaps, ego=ego)
        clr_car = score_run(truth, snaps, ego=ego, class_filter="car")
        truth, snaps, ego = intersection_run("LR", seed)
        lr = score_run(truth, snaps, ego=ego)
        lr_car = score_run(truth, snaps, ego=ego, class_filter="car")
        truth, snaps, ego = intersection_run("CR", seed)
        cr_car = score_run(truth, snaps, ego=ego, class_filter="car")
        truth, snaps, ego = intersection_run("CLR", seed, heading_mode="raw")
        raw = score_run(truth, snaps, ego=ego)

        split_sq += clr.bearing_rms ** 2 * clr.n_returns
        split_n += clr.n_returns
        raw_sq += raw.bearing_rms ** 2 * raw.n_returns
        raw_n += raw.n_returns
        seed_ok = (clr.object_tracked >= 0.95
                   and clr.correct_class >= lr.correct_class
                   and cr_car.correct_class >= lr_car.correct_class)
        per_seed_ok = per_seed_ok and seed_ok
        details.append(f"s{seed}:{'+' if seed_ok else '-'}")
    split_rms = math.sqrt(split_sq / split_n)
    raw_rms = math.sqrt(raw_sq / raw_n)
    heading_ok = split_rms < raw_rms
    ok = per_seed_ok and heading_ok
    verdict(capsys, "criterion 6: intersection sensor-subset trends", ok,
            f"{' '.join(details)}, bearing split {split_rms:.5f} "
            f"vs raw {raw_rms:.5f} pooled over 5 seeds")


# -- 7: particle-count study ------------------------------------------------


def plateau_scenario(seed):
    objects = [
        TruthObject("car1", "car", [(0.0, 16.0, 7.0), (20.0, -12.0, 7.0)]),
        TruthObject("ped1", "pedestrian",
                    [(0.0, 5.0, -5.0), (20.0, 5.0, 5.0)]),
    ]
    return Scenario(duration=20.0, objects=objects,
                    sensors=standard_sensors("sunny"), seed=seed)


def test_criterion_7_particle_study_trend(capsys):
    pool = {1: ([], []), 8: ([], []), 20: ([], [])}
    for seed in range(3):
        scenario = plateau_scenario(seed)
        noise = {s.sensor_id: s.noise_cov for s in scenario.sensors}
        config = TrackerConfig(classes=("car", "pedestrian"), seed=seed,
                               sensor_noise=noise)
        stream, _ = run_scenario(scenario, label_classes=config.classes)
        out = particle_study(stream, config, counts=(1, 8, 20), benchmark=50,
                             output_rate=scenario.output_rate)
        for count, (overall, classified) in out.items():
            pool[count][0].append(overall.errors)
            pool[count][1].append(classified.errors)

    def pooled_rms(parts):
        e = np.concatenate(parts)
        return float(np.sqrt(np.mean(e * e)))

    overall_1 = pooled_rms(pool[1][0])
    overall_20 = pooled_rms(pool[20][0])
    class_8 = pooled_rms(pool[8][1])
    class_20 = pooled_rms(pool[20][1])
    ok = overall_20 < overall_1 and class_8 <= 1.10 * class_20
    verdict(capsys, "criterion 7: particle-count study trend", ok,
            f"overall rms 1p {overall_1:.2f} vs 20p {overall_20:.2f}, "
            f"classified 8p {class_8:.2f} vs 20p {class_20:.2f}, "
            "pooled over 3 seeds")


# -- 8: person-sized peak response ------------------------------------------


def test_criterion_8_clustering_kernel(capsys):
    rng = np.random.default_rng(3)
    blob = np.column_stack([rng.normal(0.0, 0.1, 8),
                            rng.normal(0.0, 0.1, 8),
                            rng.uniform(0.4, 1.7, 8)])
    single = len(detect_people(PointCloud2D(blob))) == 1

    # A uniform field, evaluated away from the truncation boundary.
    xs = np.arange(-5.0, 5.01, 0.25)
    flat = PointCloud2D(np.array([[x, y, 0.9] for x in xs for y in xs]))
    grid = log_response(flat)
    n = grid.responses.shape[0]
    k = n // 4
    interior = LoGGrid(grid.origin + k * CELL_SIZE,
                       grid.responses[k:-k, k:-k])
    flat_peaks = len(extract_person_peaks(interior))
    all_negative = bool(np.all(interior.responses < 0.0))

    center = float(person_kernel(0.0))
    center_ok = abs(center - 1.807) <= 0.001
    ok = single and flat_peaks == 0 and all_negative and center_ok
    verdict(capsys, "criterion 8: person-peak clustering", ok,
            f"blob peaks 1: {single}, flat peaks {flat_peaks}, "
            f"interior negative: {all_negative}, L(0) {center:.4f}")


# -- 9: cross-cutting properties --------------------------------------------


def test_criterion_9_property_suite(capsys):
    rng = np.random.default_rng(17)

    tracker = JointTracker(TrackerConfig(num_particles=8, seed=1))
    weights_ok = True
    for z in wandering_gps(60, seed=4):
        tracker.step(z)
        total = sum(p.weight for p in tracker.particles)
        weights_ok &= abs(total - 1.0) <= 1e-12

    mm = MeasurementModel("position", R_GPS)
    model = make_motion_model("car")
    belief = GaussianBelief(np.array([0.0, 0.0, 3.0, 0.2]),
                            np.diag([2.0, 2.0, 1.0, 0.5]))
    psd_ok = True
    for k in range(50):
        belief = kf_predict(belief, model, 0.5)
        z = belief.mean[:2] + rng.normal(scale=1.0, size=2)
        belief, _ = kf_update(belief, z, mm, model)
        psd_ok &= bool(np.min(np.linalg.eigvalsh(belief.cov)) >= -1e-10)

    jac_ok = True
    h = 1e-6
    for class_name in ("pedestrian", "car", "bus", "cyclist"):
        m = make_motion_model(class_name)
        for _ in range(20):
            x = np.array([rng.uniform(-10, 10), rng.uniform(-10, 10),
                          rng.uniform(0.3, 12.0), rng.uniform(-3.0, 3.0)])
            dt = float(rng.uniform(0.05, 1.4))
            F = m.jacobian(x, dt)
            fd = np.empty((4, 4))
            for j in range(4):
                e = np.zeros(4)
                e[j] = h
                d = m.predict_state(x + e, dt) - m.predict_state(x - e, dt)
                if m.wheeled:
                    d[3] = wrap_angle(d[3])
                fd[:, j] = d / (2.0 * h)
            scale = np.maximum(np.abs(F), 1.0)
            jac_ok &= bool(np.all(np.abs(F - fd) / scale <= 1e-5))

    post = ClassPosterior.uniform(4)
    for _ in range(30):
        post = update_class_posterior_log(post, rng.normal(size=4))
    partition_ok = abs(post.probs.sum() - 1.0) <= 1e-12

    def run_once():
        cfg = TrackerConfig(num_particles=6, seed=7)
        return track_stream(wandering_gps(40, seed=21), cfg, output_rate=2.0)

    a, b = run_once(), run_once()
    det_ok = len(a) == len(b)
    for sa, sb in zip(a, b):
        det_ok &= sa.time == sb.time and len(sa.records) == len(sb.records)
        for ra, rb in zip(sa.records, sb.records):
            det_ok &= (ra.id == rb.id
                       and np.array_equal(ra.class_probs, rb.class_probs)
                       and np.array_equal(ra.position, rb.position)
                       and np.array_equal(ra.cov_diag, rb.cov_diag))

    ok = weights_ok and psd_ok and jac_ok and partition_ok and det_ok
    verdict(capsys, "criterion 9: cross-cutting properties", ok,
            f"weights {weights_ok}, psd {psd_ok}, jacobians {jac_ok}, "
            f"partition {partition_ok}, determinism {det_ok}")
