"""Values on a regular grid with a missing-data mask, and their file format.

Counts are stored as a CSV of integers in row-major order with ``-1`` marking
missing cells. A JSON sidecar next to the CSV records ``rows``, ``cols`` and
``cell_size``.
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import ValidationError

MISSING = -1


@dataclass(frozen=True)
class MaskedGrid:
    """Grid values with a boolean mask (``True`` = observed).

    Attributes
    ----------
    values : ndarray
        Real or integer matrix. Entries under a ``False`` mask are ignored.
    mask : ndarray of bool
    cell_size : float
        Domain units per cell.
    """

    values: np.ndarray
    mask: np.ndarray
    cell_size: float = 1.0

    def __post_init__(self):
        values = np.asarray(self.values)
        mask = np.asarray(self.mask, dtype=bool)
        if values.ndim != 2:
            raise ValidationError(f"grid values must be a matrix, got shape {values.shape}")
        if mask.shape != values.shape:
            raise ValidationError(f"mask shape {mask.shape} does not match values {values.shape}")
        if not float(self.cell_size) > 0:
            raise ValidationError(f"cell_size must be positive, got {self.cell_size}")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "cell_size", float(self.cell_size))

    @classmethod
    def from_counts(cls, counts, cell_size=1.0):
        """Build a grid from integer counts in which ``-1`` marks missing cells."""
        counts = np.asarray(counts)
        if not np.issubdtype(counts.dtype, np.integer):
            if not np.all(counts == np.round(counts)):
                raise ValidationError("counts must be integers")
            counts = counts.astype(np.int64)
        if np.any(counts < MISSING):
            raise ValidationError("counts must be non-negative or -1 for missing")
        return cls(counts, counts != MISSING, cell_size)

    @property
    def shape(self):
        return self.values.shape

    @property
    def n_observed(self):
        return int(self.mask.sum())

    def to_counts(self):
        """Integer matrix with ``-1`` in every unobserved cell."""
        out = np.asarray(self.values).astype(np.int64)
        if np.any(out[self.mask] < 0) or np.any(out[self.mask] != self.values[self.mask]):
            raise ValidationError("observed values are not non-negative integers")
        out[~self.mask] = MISSING
        return out

    def write(self, path):
        """Write ``path`` (CSV) and ``path`` with suffix ``.json`` (sidecar)."""
        path = Path(path)
        np.savetxt(path, self.to_counts(), fmt="%d", delimiter=",")
        meta = {"rows": self.shape[0], "cols": self.shape[1], "cell_size": self.cell_size}
        sidecar_path(path).write_text(json.dumps(meta, indent=2) + "\n")

    @classmethod
    def read(cls, path):
        path = Path(path)
        counts = np.loadtxt(path, delimiter=",", dtype=np.int64, ndmin=2)
        meta_path = sidecar_path(path)
        cell_size = 1.0
        if meta_path.exists():
            meta = json.loads(meta_path.read_text())
            if (meta["rows"], meta["cols"]) != counts.shape:
                raise ValidationError(
                    f"sidecar shape {(meta['rows'], meta['cols'])} does not match CSV {counts.shape}"
                )
            cell_size = meta.get("cell_size", 1.0)
        return cls.from_counts(counts, cell_size)


def sidecar_path(path):
    return Path(path).with_suffix(".json")
