"""Tests for trajectory preprocessing and files."""

import os
import tempfile
import unittest

import numpy as np

from affordance_words.errors import DegenerateTrajectory, MalformedData, TooShort
from affordance_words.trajectory import (
    CSV_HEADER,
    FeatureSequence,
    ManifestEntry,
    Trajectory,
    preprocess,
    read_manifest,
    read_trajectory_csv,
    write_manifest,
    write_trajectory_csv,
)


def _spiral(n=40, duration=1.3, seed=0):
    rng = np.random.default_rng(seed)
    t = np.sort(rng.uniform(0.0, duration, n))
    t[0], t[-1] = 0.0, duration
    hand = np.column_stack([np.cos(3 * t), np.sin(3 * t), t]) * 0.3
    torso = np.tile([0.0, 0.0, 1.2], (n, 1)) + rng.normal(0, 0.001, (n, 3))
    return Trajectory(t, hand + torso, torso)


class TestTrajectory(unittest.TestCase):
    """Tests for Trajectory validation."""

    def test_rejects_non_increasing_time(self):
        """Timestamps must strictly increase."""
        with self.assertRaises(ValueError):
            Trajectory([0.0, 0.0], np.zeros((2, 3)), np.zeros((2, 3)))

    def test_rejects_shape_mismatch(self):
        """Positions need one row per timestamp."""
        with self.assertRaises(ValueError):
            Trajectory([0.0, 1.0], np.zeros((3, 3)), np.zeros((2, 3)))

    def test_rejects_nan(self):
        """Non-finite values are rejected."""
        hand = np.array([[0.0, 0.0, np.nan], [1.0, 0.0, 0.0]])
        with self.assertRaises(ValueError):
            Trajectory([0.0, 1.0], hand, np.zeros((2, 3)))


class TestPreprocess(unittest.TestCase):
    """Tests for preprocess."""

    def test_unit_maximum_norm(self):
        """The largest feature vector has norm one."""
        seq = preprocess(_spiral())
        self.assertAlmostEqual(np.linalg.norm(seq.samples, axis=1).max(), 1.0)
        self.assertEqual(seq.dim, 3)

    def test_uniform_grid_length(self):
        """1.3 s at 30 samples/s gives floor(39) + 1 samples."""
        self.assertEqual(len(preprocess(_spiral(), rate=30.0)), 40)
        self.assertEqual(len(preprocess(_spiral(), rate=10.0)), 14)

    def test_translation_invariance(self):
        """Moving hand and torso together leaves the features unchanged."""
        traj = _spiral()
        shift = np.array([5.0, -3.0, 2.0])
        moved = Trajectory(traj.t, traj.hand + shift, traj.torso + shift)
        np.testing.assert_allclose(
            preprocess(moved).samples, preprocess(traj).samples, atol=1e-12
        )

    def test_scale_invariance(self):
        """Scaling positions about the origin leaves the features unchanged."""
        traj = _spiral()
        scaled = Trajectory(traj.t, traj.hand * 2.5, traj.torso * 2.5)
        np.testing.assert_allclose(
            preprocess(scaled).samples, preprocess(traj).samples, atol=1e-12
        )

    def test_time_offset_invariance(self):
        """Only elapsed time matters."""
        traj = _spiral()
        later = Trajectory(traj.t + 100.0, traj.hand, traj.torso)
        np.testing.assert_allclose(
            preprocess(later).samples, preprocess(traj).samples, atol=1e-9
        )

    def test_linear_interpolation(self):
        """Samples between frames are interpolated linearly."""
        traj = Trajectory(
            [0.0, 1.0],
            [[0.0, 0.0, 0.0], [2.0, 0.0, 0.0]],
            np.zeros((2, 3)),
        )
        seq = preprocess(traj, rate=4.0)
        np.testing.assert_allclose(seq.samples[:, 0], [0.0, 0.25, 0.5, 0.75, 1.0])

    def test_degenerate(self):
        """A hand glued to the torso cannot be normalized."""
        torso = np.tile([0.0, 0.0, 1.2], (10, 1))
        traj = Trajectory(np.linspace(0, 1, 10), torso.copy(), torso)
        with self.assertRaises(DegenerateTrajectory):
            preprocess(traj)

    def test_too_short(self):
        """Less than one sample period gives a single sample."""
        traj = Trajectory([0.0, 0.02], np.ones((2, 3)), np.zeros((2, 3)))
        with self.assertRaises(TooShort):
            preprocess(traj, rate=30.0)

    def test_bad_rate(self):
        """The rate must be positive."""
        with self.assertRaises(ValueError):
            preprocess(_spiral(), rate=0.0)

    def test_feature_sequence_needs_samples(self):
        """An empty sequence is invalid."""
        with self.assertRaises(ValueError):
            FeatureSequence(np.zeros((0, 3)), 30.0)


class TestFiles(unittest.TestCase):
    """Tests for trajectory CSV and manifest files."""

    def test_csv_round_trip(self):
        """Written trajectories are read back exactly."""
        traj = _spiral()
        with tempfile.TemporaryDirectory() as tmpdir:
            path = os.path.join(tmpdir, "g.csv")
            write_trajectory_csv(path, traj)
            with open(path) as f:
                self.assertEqual(f.readline().strip(), CSV_HEADER)
            loaded = read_trajectory_csv(path)
        np.testing.assert_array_equal(loaded.t, traj.t)
        np.testing.assert_array_equal(loaded.hand, traj.hand)
        np.testing.assert_array_equal(loaded.torso, traj.torso)

    def test_csv_bad_header(self):
        """A wrong header is malformed data."""
        with tempfile.TemporaryDirectory() as tmpdir:
            path = os.path.join(tmpdir, "g.csv")
            with open(path, "w") as f:
                f.write("time,x,y,z\n0,1,2,3\n")
            with self.assertRaises(MalformedData):
                read_trajectory_csv(path)

    def test_csv_bad_values(self):
        """Non-numeric cells are malformed data."""
        with tempfile.TemporaryDirectory() as tmpdir:
            path = os.path.join(tmpdir, "g.csv")
            with open(path, "w") as f:
                f.write(CSV_HEADER + "\n0,1,2,3,4,5,6\n1,a,2,3,4,5,6\n")
            with self.assertRaises(MalformedData):
                read_trajectory_csv(path)

    def test_csv_single_frame(self):
        """One frame is not a trajectory."""
        with tempfile.TemporaryDirectory() as tmpdir:
            path = os.path.join(tmpdir, "g.csv")
            with open(path, "w") as f:
                f.write(CSV_HEADER + "\n0,1,2,3,4,5,6\n")
            with self.assertRaises(MalformedData):
                read_trajectory_csv(path)

    def test_csv_missing_file(self):
        """Missing files surface as OSError."""
        with self.assertRaises(OSError):
            read_trajectory_csv("/nonexistent/g.csv")

    def test_manifest_resolves_relative_paths(self):
        """Relative files resolve against the manifest's folder."""
        with tempfile.TemporaryDirectory() as tmpdir:
            path = os.path.join(tmpdir, "gestures.jsonl")
            write_manifest(
                path,
                [
                    ManifestEntry("trajectories/000000.csv", "tap"),
                    ManifestEntry(
                        "trajectories/000001.csv",
                        "grasp",
                        {"shape": "box", "size": "big", "objvel": "slow"},
                    ),
                ],
            )
            entries = read_manifest(path)
        expected = os.path.join(tmpdir, "trajectories/000000.csv")
        self.assertEqual(entries[0].file, expected)
        self.assertEqual(entries[0].action, "tap")
        self.assertIsNone(entries[0].context)
        self.assertEqual(entries[1].context["objvel"], "slow")

    def test_manifest_missing_action(self):
        """Entries need both file and action."""
        with tempfile.TemporaryDirectory() as tmpdir:
            path = os.path.join(tmpdir, "gestures.jsonl")
            with open(path, "w") as f:
                f.write('{"file": "a.csv"}\n')
            with self.assertRaises(MalformedData):
                read_manifest(path)


if __name__ == "__main__":
    unittest.main()
