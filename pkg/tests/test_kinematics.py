"""Trajectory-analysis tests.

Synthetic movements use the minimum-jerk profile

    s(u) = D * (10 u^3 - 15 u^4 + 6 u^5),   u = (t - t0) / T in [0, 1]

whose peak speed is 1.875 * D / T (0.78125 m/s for D = 0.25 m,
T = 0.6 s).  With a 50 mm/s threshold the detector clips a predictable
sliver at each end of the movement; solving 1.875*D/T * (u - u0)... the
crossing positions numerically gives a total clipped displacement
2*s(u_cross) of

    D = 0.20 m, T = 0.4 s  ->  0.848 mm
    D = 0.25 m, T = 0.4 s  ->  0.750 mm
    D = 0.30 m, T = 0.4 s  ->  0.679 mm

all comfortably inside the 1 mm recovery budget.

The dual-pass second-order Butterworth at 10 Hz (250 Hz sampling) has
amplitude gain 0.9999 at 1 Hz and 0.0244 at 25 Hz, and exactly zero
phase, which the gain and cross-correlation tests pin down.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

import vackit.kinematics as kin
from vackit.errors import DataFormatError, DomainError
from vackit.geometry import EyeGeometry
from vackit.kinematics import (
    AnalyzedTrial,
    EyePose,
    MovementSegment,
    TargetSpec,
    Trajectory,
    TrialOutcome,
    VelocitySeries,
    analyze_trials,
    detect_segment,
    differentiate,
    lowpass_filter,
    read_trajectories_csv,
    trial_outcome,
    write_outcomes_csv,
    write_summary_csv,
    write_trajectories_csv,
)

FS = 250.0
EYES = EyeGeometry(ipd=0.063)
POSE = EyePose()


def _minimum_jerk_trajectory(distance: float, duration: float,
                             rest: float = 0.24, fs: float = FS,
                             trial_id: str = "t0") -> Trajectory:
    total = 2 * rest + duration
    n = int(round(total * fs)) + 1
    t = np.arange(n) / fs
    u = np.clip((t - rest) / duration, 0.0, 1.0)
    z = distance * (10 * u**3 - 15 * u**4 + 6 * u**5)
    zeros = np.zeros_like(t)
    return Trajectory(trial_id=trial_id, sample_rate=fs, t=t,
                      x=zeros, y=zeros, z=z)


def _sine_trajectory(freq: float, amp: float = 0.01, seconds: float = 2.0,
                     fs: float = FS) -> Trajectory:
    n = int(round(seconds * fs)) + 1
    t = np.arange(n) / fs
    z = amp * np.sin(2 * math.pi * freq * t)
    zeros = np.zeros_like(t)
    return Trajectory(trial_id="sine", sample_rate=fs, t=t,
                      x=zeros, y=zeros, z=z)


def _tone_amplitude(signal: np.ndarray, t: np.ndarray, freq: float) -> float:
    # exact for a pure tone: least-squares projection onto sin/cos
    basis = np.column_stack([np.sin(2 * math.pi * freq * t),
                             np.cos(2 * math.pi * freq * t)])
    coef, *_ = np.linalg.lstsq(basis, signal, rcond=None)
    return float(np.hypot(coef[0], coef[1]))


class TestTrajectoryValidation:
    def test_too_few_samples(self):
        t = np.arange(10) / FS
        with pytest.raises(DomainError):
            Trajectory("short", FS, t, t, t, t)

    def test_nonuniform_sampling(self):
        t = np.arange(30) / FS
        t[10] += 0.5 / FS
        z = np.zeros(30)
        with pytest.raises(DomainError):
            Trajectory("gap", FS, t, z, z, z)

    def test_non_increasing_timestamps(self):
        t = np.arange(30) / FS
        t[5] = t[4]
        z = np.zeros(30)
        with pytest.raises(DomainError):
            Trajectory("dup", FS, t, z, z, z)

    def test_length_mismatch(self):
        t = np.arange(30) / FS
        with pytest.raises(DomainError):
            Trajectory("len", FS, t, t, t, t[:-1])


class TestLowpassFilter:
    def test_dc_gain_is_one(self):
        n = 300
        t = np.arange(n) / FS
        flat = Trajectory("dc", FS, t, np.zeros(n), np.zeros(n),
                          np.full(n, 0.5))
        out = lowpass_filter(flat, 10.0)
        np.testing.assert_allclose(out.z, 0.5, atol=1e-12)

    def test_passband_gain_at_1hz(self):
        traj = _sine_trajectory(1.0)
        out = lowpass_filter(traj, 10.0)
        keep = slice(50, -50)  # drop edge transients
        gain = (_tone_amplitude(out.z[keep], traj.t[keep], 1.0)
                / _tone_amplitude(traj.z[keep], traj.t[keep], 1.0))
        assert gain >= 0.99
        assert gain == pytest.approx(0.99990, abs=5e-4)

    def test_stopband_gain_at_25hz(self):
        traj = _sine_trajectory(25.0)
        out = lowpass_filter(traj, 10.0)
        keep = slice(50, -50)
        gain = (_tone_amplitude(out.z[keep], traj.t[keep], 25.0)
                / _tone_amplitude(traj.z[keep], traj.t[keep], 25.0))
        assert gain <= 0.03

    def test_zero_phase(self):
        traj = _sine_trajectory(1.0)
        out = lowpass_filter(traj, 10.0)
        a = traj.z[50:-50] - np.mean(traj.z[50:-50])
        b = out.z[50:-50] - np.mean(out.z[50:-50])
        xcorr = np.correlate(b, a, mode="full")
        assert int(np.argmax(xcorr)) == len(a) - 1  # peak at lag 0

    def test_cutoff_bounds_checked(self):
        traj = _sine_trajectory(1.0)
        with pytest.raises(DomainError):
            lowpass_filter(traj, 0.0)
        with pytest.raises(DomainError):
            lowpass_filter(traj, FS / 2)


class TestDifferentiate:
    def test_linear_ramp_exact(self):
        n = 100
        t = np.arange(n) / FS
        z = 0.37 * t
        traj = Trajectory("ramp", FS, t, np.zeros(n), np.zeros(n), z)
        v = differentiate(traj)
        np.testing.assert_allclose(v.vz, 0.37, rtol=1e-12)
        np.testing.assert_allclose(v.vx, 0.0, atol=1e-15)

    def test_peak_speed_of_minimum_jerk(self):
        traj = _minimum_jerk_trajectory(0.25, 0.6)
        v = differentiate(traj)
        assert float(np.max(v.depth)) == pytest.approx(0.78125, rel=5e-3)

    def test_filtered_peak_speed_within_one_percent(self):
        traj = _minimum_jerk_trajectory(0.25, 0.6)
        v = differentiate(lowpass_filter(traj, 10.0))
        assert float(np.max(v.depth)) == pytest.approx(0.78125, rel=0.01)


class TestDetectSegment:
    def test_brackets_the_movement(self):
        traj = _minimum_jerk_trajectory(0.25, 0.4)
        seg = detect_segment(differentiate(lowpass_filter(traj, 10.0)))
        assert seg is not None
        # movement occupies [0.24, 0.64] s
        assert 0.23 <= seg.onset_time <= 0.30
        assert 0.58 <= seg.termination_time <= 0.66

    def test_no_crossing_returns_none(self):
        traj = _minimum_jerk_trajectory(0.005, 0.4)  # peak 23 mm/s
        assert detect_segment(differentiate(lowpass_filter(traj, 10.0))) is None

    def test_hysteresis_rejects_single_sample_blips(self):
        n = 200
        t = np.arange(n) / FS
        v = np.zeros(n)
        v[40] = 1.0               # one-sample spike: shorter than 20 ms
        v[100:140] = 0.4          # sustained movement
        series = VelocitySeries(t=t, vx=np.zeros(n), vy=np.zeros(n), vz=v,
                                sample_rate=FS)
        seg = detect_segment(series, threshold=0.05)
        assert seg is not None
        assert seg.onset_index == 100

    def test_segmentation_idempotent_on_velocity_window(self):
        traj = _minimum_jerk_trajectory(0.25, 0.4)
        v = differentiate(lowpass_filter(traj, 10.0))
        seg = detect_segment(v)
        i0, i1 = seg.onset_index, seg.termination_index
        sub = VelocitySeries(t=v.t[i0:i1 + 1], vx=v.vx[i0:i1 + 1],
                             vy=v.vy[i0:i1 + 1], vz=v.vz[i0:i1 + 1],
                             sample_rate=v.sample_rate)
        again = detect_segment(sub)
        assert again is not None
        assert abs(again.onset_index - 0) <= 1
        assert abs(again.termination_index - (i1 - i0)) <= 1

    def test_segmentation_idempotent_on_truncated_trajectory(self):
        # detection runs downstream of the filter, so truncate the
        # filtered trajectory; re-filtering a window with no rest padding
        # is out of scope for the idempotence guarantee
        for d, duration in [(0.20, 0.4), (0.25, 0.4), (0.30, 0.4),
                            (0.25, 0.6)]:
            traj = _minimum_jerk_trajectory(d, duration)
            filtered = lowpass_filter(traj, 10.0)
            seg = detect_segment(differentiate(filtered))
            i0, i1 = seg.onset_index, seg.termination_index
            sub = Trajectory("sub", FS, filtered.t[i0:i1 + 1],
                             filtered.x[i0:i1 + 1], filtered.y[i0:i1 + 1],
                             filtered.z[i0:i1 + 1])
            again = detect_segment(differentiate(sub))
            assert again is not None
            assert abs(again.onset_index - 0) <= 1
            assert abs(again.termination_index - (i1 - i0)) <= 1


class TestTrialOutcome:
    def test_distance_recovery_within_one_millimeter(self):
        for d in (0.20, 0.25, 0.30):
            traj = _minimum_jerk_trajectory(d, 0.4)
            target = TargetSpec(trial_id=traj.trial_id, reach_m=d)
            out = trial_outcome(traj, target, EYES, POSE)
            assert out.valid
            assert abs(out.movement_distance - d) < 1e-3
            # the detector always clips a little at both ends
            assert out.movement_distance < d

    def test_clipped_displacement_matches_prediction(self):
        # the continuous-time crossing positions bound the miss from
        # above; sampling can only move each endpoint inward by up to one
        # at-threshold sample (0.05 m/s / 250 Hz = 0.2 mm per side)
        predicted_miss = {0.20: 0.848e-3, 0.25: 0.750e-3, 0.30: 0.679e-3}
        sample_slip = 2 * 0.05 / FS
        for d, miss in predicted_miss.items():
            traj = _minimum_jerk_trajectory(d, 0.4)
            target = TargetSpec(trial_id=traj.trial_id, reach_m=d)
            out = trial_outcome(traj, target, EYES, POSE)
            realized = d - out.movement_distance
            assert miss - sample_slip - 1e-4 < realized < miss + 1e-4

    def test_slow_trial_rejected(self):
        traj = _minimum_jerk_trajectory(0.005, 0.4)
        out = trial_outcome(traj, TargetSpec(trial_id="t0", reach_m=0.25),
                            EYES, POSE)
        assert not out.valid
        assert out.rejection_reason == "slow"
        assert out.movement_distance is None

    def test_false_start_rejected(self):
        traj = _minimum_jerk_trajectory(0.25, 0.4)  # onset near 0.25 s
        early = TargetSpec(trial_id="t0", reach_m=0.25, go_cue_time_s=0.5)
        out = trial_outcome(traj, early, EYES, POSE)
        assert not out.valid
        assert out.rejection_reason == "false start"
        ok = TargetSpec(trial_id="t0", reach_m=0.25, go_cue_time_s=0.1)
        assert trial_outcome(traj, ok, EYES, POSE).valid

    def test_distance_error_offset_is_onset_depth(self):
        # structurally, distance error = endpoint error - filtered onset
        # depth; pin that identity down before the special case below
        traj = _minimum_jerk_trajectory(0.25, 0.4)
        target = TargetSpec(trial_id="t0", reach_m=0.25)
        out = trial_outcome(traj, target, EYES, POSE)
        z_onset = lowpass_filter(traj, 10.0).z[out.segment.onset_index]
        assert (out.distance_error - out.endpoint_error) == pytest.approx(
            -z_onset, abs=1e-15)

    def test_distance_error_equals_endpoint_error_from_home(self):
        # shift the whole path so the filtered onset sample sits exactly
        # at z = 0; a depth offset does not change velocities, so the
        # segment is the same and the two error measures coincide
        traj = _minimum_jerk_trajectory(0.25, 0.4)
        target = TargetSpec(trial_id="t0", reach_m=0.25)
        first = trial_outcome(traj, target, EYES, POSE)
        base = lowpass_filter(traj, 10.0).z[first.segment.onset_index]
        shifted = Trajectory("t0", FS, traj.t, traj.x, traj.y, traj.z - base)
        out = trial_outcome(shifted, target, EYES, POSE)
        assert out.segment == first.segment
        assert abs(out.distance_error - out.endpoint_error) < 1e-9

    def test_spatial_scaling_is_exact(self):
        # doubling the coordinates and the threshold doubles the distance
        # measures bit for bit (every operation scales by a power of two)
        traj = _minimum_jerk_trajectory(0.25, 0.4)
        doubled = Trajectory("x2", FS, traj.t, 2 * traj.x, 2 * traj.y,
                             2 * traj.z)
        target1 = TargetSpec(trial_id="t0", reach_m=0.25)
        target2 = TargetSpec(trial_id="x2", reach_m=0.50)
        out1 = trial_outcome(traj, target1, EYES, POSE, threshold=0.05)
        out2 = trial_outcome(doubled, target2, EYES, POSE, threshold=0.10)
        assert out1.valid and out2.valid
        assert out1.segment.onset_index == out2.segment.onset_index
        assert out1.segment.termination_index == out2.segment.termination_index
        assert out2.movement_distance == 2 * out1.movement_distance

    def test_undershoot_gives_negative_disparity_difference(self):
        traj = _minimum_jerk_trajectory(0.25, 0.4)
        out = trial_outcome(traj, TargetSpec(trial_id="t0", reach_m=0.25),
                            EYES, POSE)
        # the clipped endpoint stops short of the target, which sits
        # farther from the eyes, so the hand subtends a larger angle
        assert out.disparity_difference < 0

    def test_disparity_difference_matches_eye_frame_angles(self):
        traj = _minimum_jerk_trajectory(0.25, 0.4)
        target = TargetSpec(trial_id="t0", reach_m=0.25)
        out = trial_outcome(traj, target, EYES, POSE)
        filtered = lowpass_filter(traj, 10.0)
        i1 = out.segment.termination_index
        d_target = POSE.eye_distance(0.25)
        d_hand = float(POSE.eye_distance_of(filtered.x[i1], filtered.y[i1],
                                            filtered.z[i1]))
        expected = (2 * math.atan2(EYES.half_ipd, d_target)
                    - 2 * math.atan2(EYES.half_ipd, d_hand))
        assert out.disparity_difference == pytest.approx(expected, abs=1e-15)


class TestEyePose:
    def test_seated_geometry_distances(self):
        expected = {0.20: 0.6103277807866851, 0.25: 0.6519202405202649,
                    0.30: 0.6946221994724902, 0.35: 0.7382411530116700}
        for reach, d in expected.items():
            assert POSE.eye_distance(reach) == pytest.approx(d, abs=1e-15)

    def test_colocated_pose_is_euclidean_depth(self):
        pose = EyePose(behind_m=0.0, above_m=0.0)
        assert pose.eye_distance(0.4) == pytest.approx(0.4, rel=1e-15)


class TestAnalyzeTrials:
    def _batch(self):
        t1 = _minimum_jerk_trajectory(0.20, 0.4, trial_id="a")
        t2 = _minimum_jerk_trajectory(0.30, 0.4, trial_id="b")
        targets = {
            "a": TargetSpec(trial_id="a", reach_m=0.20, participant_id="p0",
                            condition="original"),
            "b": TargetSpec(trial_id="b", reach_m=0.30, participant_id="p0",
                            condition="original"),
        }
        return [t2, t1], targets

    def test_ordered_by_trial_id(self):
        trajectories, targets = self._batch()
        analyzed = analyze_trials(trajectories, targets, EYES, POSE)
        assert [a.outcome.trial_id for a in analyzed] == ["a", "b"]
        assert all(a.outcome.valid for a in analyzed)

    def test_missing_target_flagged_not_fatal(self):
        trajectories, targets = self._batch()
        del targets["b"]
        analyzed = analyze_trials(trajectories, targets, EYES, POSE)
        by_id = {a.outcome.trial_id: a.outcome for a in analyzed}
        assert by_id["a"].valid
        assert not by_id["b"].valid
        assert by_id["b"].rejection_reason == "no target"

    def test_per_trial_ipd_override(self):
        traj = _minimum_jerk_trajectory(0.25, 0.4, trial_id="a")
        narrow = {"a": TargetSpec(trial_id="a", reach_m=0.25, ipd_m=0.055)}
        wide = {"a": TargetSpec(trial_id="a", reach_m=0.25, ipd_m=0.070)}
        out_n = analyze_trials([traj], narrow, EYES, POSE)[0].outcome
        out_w = analyze_trials([traj], wide, EYES, POSE)[0].outcome
        # wider eyes subtend larger angles, so the same undershoot maps to
        # a larger magnitude disparity difference
        assert abs(out_w.disparity_difference) > abs(out_n.disparity_difference)


class TestTrajectoryCsv:
    def test_round_trip(self, tmp_path):
        traj = _minimum_jerk_trajectory(0.25, 0.4, trial_id="p0-a")
        path = tmp_path / "traj.csv"
        write_trajectories_csv([traj], path)
        back, rejected = read_trajectories_csv(path)
        assert rejected == []
        assert len(back) == 1
        assert np.array_equal(back[0].z, traj.z)
        assert back[0].sample_rate == pytest.approx(FS, rel=1e-9)

    def test_gap_becomes_missing_data(self, tmp_path):
        traj = _minimum_jerk_trajectory(0.25, 0.4, trial_id="gappy")
        keep = np.ones(len(traj), dtype=bool)
        keep[50:53] = False  # drop 3 consecutive samples
        path = tmp_path / "gap.csv"
        write_trajectories_csv([Trajectory("ok", FS, traj.t, traj.x, traj.y,
                                           traj.z)], path)
        lines = path.read_text().splitlines()
        body = [line.replace("ok", "gappy") for i, line in
                enumerate(lines[1:]) if keep[i]]
        path.write_text("\n".join([lines[0]] + body) + "\n")
        trajectories, rejected = read_trajectories_csv(path)
        assert trajectories == []
        assert len(rejected) == 1
        assert rejected[0].rejection_reason == "missing data"

    def test_short_trial_becomes_missing_data(self, tmp_path):
        path = tmp_path / "short.csv"
        rows = ["trial_id,t,x,y,z"]
        rows += [f"tiny,{i / FS},0,0,0" for i in range(10)]
        path.write_text("\n".join(rows) + "\n")
        trajectories, rejected = read_trajectories_csv(path)
        assert trajectories == []
        assert rejected[0].rejection_reason == "missing data"

    def test_bad_header_is_file_error(self, tmp_path):
        path = tmp_path / "hdr.csv"
        path.write_text("id,t,x,y,z\n")
        with pytest.raises(DataFormatError) as exc:
            read_trajectories_csv(path)
        assert exc.value.line == 1

    def test_bad_row_reports_line(self, tmp_path):
        path = tmp_path / "row.csv"
        path.write_text("trial_id,t,x,y,z\nt0,0.0,0,0,0\nt0,oops,0,0,0\n")
        with pytest.raises(DataFormatError) as exc:
            read_trajectories_csv(path)
        assert exc.value.line == 3

    def test_non_increasing_time_is_file_error(self, tmp_path):
        path = tmp_path / "time.csv"
        rows = ["trial_id,t,x,y,z"]
        rows += [f"t0,{i / FS},0,0,0" for i in range(30)]
        rows.append(f"t0,{10 / FS},0,0,0")
        path.write_text("\n".join(rows) + "\n")
        with pytest.raises(DataFormatError):
            read_trajectories_csv(path)


class TestOutcomeWriters:
    def _analyzed(self):
        traj = _minimum_jerk_trajectory(0.25, 0.4, trial_id="a")
        target = TargetSpec(trial_id="a", reach_m=0.25, participant_id="p0",
                            condition="original")
        outcome = trial_outcome(traj, target, EYES, POSE)
        rejected = AnalyzedTrial(
            target=TargetSpec(trial_id="b", reach_m=0.25, participant_id="p0",
                              condition="original"),
            outcome=TrialOutcome(trial_id="b", valid=False,
                                 rejection_reason="missing data"),
        )
        return [AnalyzedTrial(target=target, outcome=outcome), rejected]

    def test_outcomes_schema(self, tmp_path):
        path = tmp_path / "outcomes.csv"
        write_outcomes_csv(self._analyzed(), path)
        lines = path.read_text().splitlines()
        assert lines[0] == ",".join(kin.OUTCOME_HEADER)
        assert len(lines) == 3
        valid_row = lines[1].split(",")
        assert valid_row[4] == "1"
        rejected_row = lines[2].split(",")
        assert rejected_row[4] == "0"
        assert rejected_row[5] == "missing data"
        assert rejected_row[8] == ""  # no measures on invalid trials

    def test_summary_covers_valid_trials_only(self, tmp_path):
        path = tmp_path / "summary.csv"
        write_summary_csv(self._analyzed(), path)
        lines = path.read_text().splitlines()
        assert len(lines) == 2  # header + the one (condition, reach) cell
        row = lines[1].split(",")
        assert row[0] == "original"
        assert int(row[2]) == 1
