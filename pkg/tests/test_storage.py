"""Unit tests for ReportStorage."""

import json
import os
import shutil
import tempfile
import unittest
from unittest.mock import patch

import numpy as np

from wavepax.propagate import GridSpec
from wavepax.storage import ReportStorage


class TestReportStorage(unittest.TestCase):
    """Test cases for ReportStorage."""

    def setUp(self):
        """Set up test fixtures."""
        self.temp_dir = tempfile.mkdtemp()
        self.out_dir = os.path.join(self.temp_dir, "run")
        self.storage = ReportStorage(self.out_dir, config_hash="abc123")

    def tearDown(self):
        """Clean up test fixtures."""
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def test_save_json(self):
        """Test saving a report creates the directory and embeds the hash."""
        path = self.storage.save_json("certificate", {"C_T": 12.5, "req": {"ok": True}})

        self.assertTrue(path.exists())
        with open(path, "r") as f:
            loaded = json.load(f)
        self.assertEqual(loaded["C_T"], 12.5)
        self.assertEqual(loaded["config_hash"], "abc123")
        self.assertEqual(self.storage.load_json("certificate"), loaded)

    def test_save_json_without_hash(self):
        """Test a storage without hash writes the report unchanged."""
        storage = ReportStorage(self.out_dir)
        storage.save_json("flow", {"T_D": 1.5})
        self.assertNotIn("config_hash", storage.load_json("flow"))

    def test_save_and_load_csv(self):
        """Test a CSV series keeps its header and values."""
        rows = [[0.0, 1.0, 0.0], [0.5, 0.8775825618903728, -0.479425538604203]]
        self.storage.save_csv("flow", ["t", "x", "p"], rows)

        header, values = self.storage.load_csv("flow")
        self.assertEqual(header, ["t", "x", "p"])
        np.testing.assert_array_equal(values, np.array(rows))

    def test_empty_csv(self):
        """Test a header-only CSV loads as an empty array with the right width."""
        self.storage.save_csv("empty", ["shift", "mass"], [])
        header, values = self.storage.load_csv("empty")
        self.assertEqual(header, ["shift", "mass"])
        self.assertEqual(values.shape, (0, 2))

    def test_field_dump(self):
        """Test a complex field round-trips with its grid header."""
        grid = GridSpec(2, 4.0, 8)
        values = (np.arange(64) + 1j * np.arange(64)[::-1]).reshape(grid.shape)
        self.storage.save_field("field_000", values, grid, 0.25)

        self.assertEqual(os.path.getsize(os.path.join(self.out_dir, "field_000.bin")), 64 * 16)
        loaded, loaded_grid, t = self.storage.load_field("field_000")
        np.testing.assert_array_equal(loaded, values)
        self.assertEqual(loaded_grid, grid)
        self.assertEqual(t, 0.25)

    def test_manifest(self):
        """Test the manifest lists every artifact once with the hash."""
        self.storage.save_json("riccati", {"residual": 1e-9})
        self.storage.save_csv("riccati", ["t", "y1", "y2", "y3", "a"], [[0.0, 0.0, 1.0, 0.0, 1.0]])
        self.storage.save_json("riccati", {"residual": 2e-9})
        path = self.storage.write_manifest()

        with open(path, "r") as f:
            manifest = json.load(f)
        self.assertEqual(manifest["config_hash"], "abc123")
        self.assertEqual(manifest["artifacts"], ["riccati.csv", "riccati.json"])

    def test_load_missing_file(self):
        """Test loading a missing report raises."""
        with self.assertRaises(FileNotFoundError):
            self.storage.load_json("nothing")

    @patch("wavepax.storage.json.dump", side_effect=TypeError("not serializable"))
    def test_save_error_is_reraised(self, mock_dump):
        """Test a failing write is logged and re-raised."""
        with self.assertLogs("wavepax.storage", level="ERROR"):
            with self.assertRaises(TypeError):
                self.storage.save_json("broken", {"value": object()})
        self.assertNotIn("broken.json", self.storage.artifacts)


if __name__ == "__main__":
    unittest.main()
