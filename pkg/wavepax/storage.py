"""
Storage module for JSON reports, CSV series and binary field dumps.
"""

import csv
import json
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .propagate import GridSpec

logger = logging.getLogger(__name__)


class ReportStorage:
    """
    Writes the artifacts of one run into an output directory.

    Every JSON report carries the config hash, and ``manifest.json`` lists
    the artifacts written so far.
    """

    def __init__(self, out_dir: str, config_hash: Optional[str] = None):
        """
        Initialize storage.

        Args:
            out_dir: Output directory, created if missing
            config_hash: SHA-256 of the experiment configuration
        """
        self.out_dir = Path(out_dir)
        self.config_hash = config_hash
        self.artifacts: List[str] = []

    def _path(self, name: str) -> Path:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        return self.out_dir / name

    def _record(self, name: str) -> None:
        if name not in self.artifacts:
            self.artifacts.append(name)

    def save_json(self, name: str, report: Dict) -> Path:
        """
        Save a JSON report.

        Args:
            name: File name without extension
            report: JSON-serializable dictionary
        """
        path = self._path(f"{name}.json")
        document = dict(report)
        if self.config_hash is not None:
            document["config_hash"] = self.config_hash
        try:
            with open(path, "w", encoding="utf-8") as f:
                json.dump(document, f, indent=2, sort_keys=True)
            self._record(path.name)
            logger.info(f"Saved report to {path}")
        except Exception as e:
            logger.error(f"Error saving to {path}: {e}")
            raise
        return path

    def save_csv(self, name: str, header: Sequence[str], rows: Sequence[Sequence]) -> Path:
        """
        Save a series as CSV with a header row.

        Args:
            name: File name without extension
            header: Column names
            rows: Numeric rows
        """
        path = self._path(f"{name}.csv")
        try:
            with open(path, "w", encoding="utf-8", newline="") as f:
                writer = csv.writer(f)
                writer.writerow(header)
                writer.writerows(rows)
            self._record(path.name)
            logger.info(f"Saved {len(rows)} rows to {path}")
        except Exception as e:
            logger.error(f"Error saving to {path}: {e}")
            raise
        return path

    def save_field(self, name: str, values: np.ndarray, grid: GridSpec, t: float) -> Path:
        """
        Dump a complex field as raw complex128 in C order plus a JSON header.

        Args:
            name: Base file name
            values: Field of shape grid.shape
            grid: Grid the field lives on
            t: Time of the sample
        """
        path = self._path(f"{name}.bin")
        header = {"dim": grid.dim, "L": grid.half_width, "n": grid.points_per_dim, "t": float(t)}
        try:
            np.ascontiguousarray(values, dtype=np.complex128).tofile(path)
            with open(self._path(f"{name}.json"), "w", encoding="utf-8") as f:
                json.dump(header, f, indent=2)
            self._record(path.name)
            self._record(f"{name}.json")
            logger.debug(f"Saved field dump {path} at t={t}")
        except Exception as e:
            logger.error(f"Error saving field to {path}: {e}")
            raise
        return path

    def load_json(self, name: str) -> Dict:
        path = self.out_dir / f"{name}.json"
        try:
            with open(path, "r", encoding="utf-8") as f:
                return json.load(f)
        except Exception as e:
            logger.error(f"Error loading from {path}: {e}")
            raise

    def load_csv(self, name: str) -> Tuple[List[str], np.ndarray]:
        """
        Load a CSV series.

        Returns:
            (header, rows as a float array)
        """
        path = self.out_dir / f"{name}.csv"
        try:
            with open(path, "r", encoding="utf-8", newline="") as f:
                reader = csv.reader(f)
                header = next(reader)
                rows = [[float(value) for value in row] for row in reader if row]
        except Exception as e:
            logger.error(f"Error loading from {path}: {e}")
            raise
        return header, np.array(rows, dtype=float).reshape(-1, len(header))

    def load_field(self, name: str) -> Tuple[np.ndarray, GridSpec, float]:
        """
        Load a field dump.

        Returns:
            (values, grid, t)
        """
        header = self.load_json(name)
        grid = GridSpec(int(header["dim"]), float(header["L"]), int(header["n"]))
        path = self.out_dir / f"{name}.bin"
        try:
            values = np.fromfile(path, dtype=np.complex128).reshape(grid.shape)
        except Exception as e:
            logger.error(f"Error loading field from {path}: {e}")
            raise
        return values, grid, float(header["t"])

    def write_manifest(self) -> Path:
        """List every artifact written by this storage with the config hash."""
        path = self._path("manifest.json")
        try:
            with open(path, "w", encoding="utf-8") as f:
                json.dump({"config_hash": self.config_hash, "artifacts": sorted(self.artifacts)}, f, indent=2)
        except Exception as e:
            logger.error(f"Error saving manifest to {path}: {e}")
            raise
        return path
