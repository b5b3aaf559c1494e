"""The sampled-field record shared by synthesis, file I/O and extraction."""

import warnings
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .errors import PeriodGridMismatchError, TraceValidationWarning

GRID_REL_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class FieldTrace:
    """Uniformly sampled complex field values along the propagation axis.

    One frequency, one field component, one straight line parallel to z.
    ``structure_period_p`` is the period the extraction will use; for a
    uniform structure any positive value works.  The period should be an
    integer multiple of ``dz`` so period-spaced triplets land on samples;
    a violation is reported as a :class:`TraceValidationWarning` here and
    becomes a hard :class:`PeriodGridMismatchError` once triplets are
    actually requested.
    """

    frequency: float
    values: np.ndarray
    z_start: float
    dz: float
    structure_period_p: float
    component_label: str = "Ey"
    transverse_position: Tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if not self.frequency > 0.0:
            raise ValueError("frequency must be > 0")
        if not self.dz > 0.0:
            raise ValueError("dz must be > 0")
        if not self.structure_period_p > 0.0:
            raise ValueError("structure_period_p must be > 0")
        values = np.array(self.values, dtype=np.complex128, copy=True)
        if values.ndim != 1 or values.size == 0:
            raise ValueError("values must be a nonempty 1-D sequence")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(
            self, "transverse_position", tuple(float(v) for v in self.transverse_position)
        )
        for message in self.alignment_warnings():
            warnings.warn(TraceValidationWarning(message), stacklevel=3)

    @property
    def count(self) -> int:
        return int(self.values.size)

    @property
    def z(self) -> np.ndarray:
        """Sample positions in meters."""
        return self.z_start + self.dz * np.arange(self.count)

    @property
    def z_end(self) -> float:
        return self.z_start + self.dz * (self.count - 1)

    def alignment_warnings(self) -> Tuple[str, ...]:
        """Soft-invariant violations worth recording alongside the data."""
        ratio = self.structure_period_p / self.dz
        stride = round(ratio)
        if stride < 1 or abs(ratio - stride) > GRID_REL_TOL * ratio:
            return (
                f"period {self.structure_period_p:g} m is not an integer "
                f"multiple of dz {self.dz:g} m (ratio {ratio:.12g}); "
                "triplet extraction will refuse this trace",
            )
        return ()

    def period_stride(self) -> int:
        """Number of samples per period.

        Raises ``PeriodGridMismatchError`` if the period is off the grid
        by more than 1e-9 relative; values are never interpolated.
        """
        ratio = self.structure_period_p / self.dz
        stride = round(ratio)
        if stride < 1 or abs(ratio - stride) > GRID_REL_TOL * ratio:
            raise PeriodGridMismatchError(
                f"period/dz = {ratio:.12g} is not an integer within {GRID_REL_TOL:g} relative"
            )
        return stride
