"""Canonical trace file format, generic column import, triplet extraction.

The on-disk format is UTF-8 text: ``# key=value`` header lines (one per
:class:`TraceFileHeader` field, in order), optional ``# warning=...``
records, a literal ``z_m,re,im`` column line, then one CSV row per sample
printed with 17 significant digits so the decimal round-trip is exact.
"""

import cmath
import io
import math
import os
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from .errors import (
    GridError,
    HeaderError,
    MappingError,
    ParseError,
)
from .extraction import SampleTriplet
from .trace import FieldTrace

FORMAT_VERSION = 1
COLUMN_LINE = "z_m,re,im"
HEADER_KEYS = (
    "format_version",
    "frequency_hz",
    "period_m",
    "component",
    "x_m",
    "y_m",
    "z_start_m",
    "dz_m",
    "count",
)

PathOrFile = Union[str, os.PathLike, io.TextIOBase]


def _fmt(value: float) -> str:
    return format(value, ".17g")


def _read_lines(source: PathOrFile) -> List[str]:
    if isinstance(source, (str, os.PathLike)):
        with open(source, "r", encoding="utf-8") as handle:
            return handle.read().splitlines()
    return source.read().splitlines()


@dataclass(frozen=True)
class TraceFileHeader:
    """Header block of a canonical trace file."""

    format_version: int
    frequency_hz: float
    period_m: float
    component: str
    x_m: float
    y_m: float
    z_start_m: float
    dz_m: float
    count: int

    def __post_init__(self):
        if self.count < 3:
            raise ValueError("count must be >= 3")
        if not self.dz_m > 0.0 or not self.period_m > 0.0 or not self.frequency_hz > 0.0:
            raise ValueError("frequency, period and dz must be > 0")

    @classmethod
    def from_trace(cls, trace: FieldTrace) -> "TraceFileHeader":
        x, y = trace.transverse_position
        return cls(
            format_version=FORMAT_VERSION,
            frequency_hz=trace.frequency,
            period_m=trace.structure_period_p,
            component=trace.component_label,
            x_m=x,
            y_m=y,
            z_start_m=trace.z_start,
            dz_m=trace.dz,
            count=trace.count,
        )

    def lines(self) -> List[str]:
        return [
            f"# format_version={self.format_version}",
            f"# frequency_hz={_fmt(self.frequency_hz)}",
            f"# period_m={_fmt(self.period_m)}",
            f"# component={self.component}",
            f"# x_m={_fmt(self.x_m)}",
            f"# y_m={_fmt(self.y_m)}",
            f"# z_start_m={_fmt(self.z_start_m)}",
            f"# dz_m={_fmt(self.dz_m)}",
            f"# count={self.count}",
        ]


def write_trace(trace: FieldTrace, destination: PathOrFile) -> None:
    """Write a trace in the canonical format.

    Soft invariant violations (a period off the sample grid) do not block
    the write; they are embedded as ``# warning=`` records so readers see
    them again.
    """
    header = TraceFileHeader.from_trace(trace)
    lines = header.lines()
    for message in trace.alignment_warnings():
        lines.append(f"# warning={message}")
    lines.append(COLUMN_LINE)
    z = trace.z
    for i in range(trace.count):
        v = trace.values[i]
        lines.append(f"{_fmt(z[i])},{_fmt(v.real)},{_fmt(v.imag)}")
    text = "\n".join(lines) + "\n"
    if isinstance(destination, (str, os.PathLike)):
        with open(destination, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
    else:
        destination.write(text)


def read_trace(source: PathOrFile) -> FieldTrace:
    """Read a canonical trace file back into a :class:`FieldTrace`.

    Violations surface as typed errors, never silent fixes: bad header
    blocks raise :class:`HeaderError`, malformed rows raise
    :class:`ParseError` with the offending line number, and z values off
    the uniform grid raise :class:`GridError`.
    """
    lines = _read_lines(source)
    header_values: Dict[str, str] = {}
    warnings_seen: List[str] = []
    data_start = None
    for number, line in enumerate(lines, start=1):
        text = line.strip()
        if not text:
            continue
        if text.startswith("#"):
            if data_start is not None:
                raise ParseError("header line after data section", number)
            key, sep, value = text.lstrip("#").strip().partition("=")
            if not sep:
                raise ParseError("header line without '='", number)
            key = key.strip()
            if key == "warning":
                warnings_seen.append(value.strip())
                continue
            if key not in HEADER_KEYS:
                raise HeaderError(f"unknown header key {key!r} (line {number})")
            if key in header_values:
                raise HeaderError(f"duplicate header key {key!r} (line {number})")
            header_values[key] = value.strip()
        elif data_start is None:
            if text != COLUMN_LINE:
                raise ParseError(f"expected column line {COLUMN_LINE!r}", number)
            data_start = number + 1
            break
    if data_start is None:
        raise HeaderError("no data section found")
    missing = [k for k in HEADER_KEYS if k not in header_values]
    if missing:
        raise HeaderError(f"missing header keys: {', '.join(missing)}")
    try:
        header = TraceFileHeader(
            format_version=int(header_values["format_version"]),
            frequency_hz=float(header_values["frequency_hz"]),
            period_m=float(header_values["period_m"]),
            component=header_values["component"],
            x_m=float(header_values["x_m"]),
            y_m=float(header_values["y_m"]),
            z_start_m=float(header_values["z_start_m"]),
            dz_m=float(header_values["dz_m"]),
            count=int(header_values["count"]),
        )
    except ValueError as exc:
        raise HeaderError(str(exc)) from exc

    z_values: List[float] = []
    samples: List[complex] = []
    for number, line in enumerate(lines[data_start - 1:], start=data_start):
        text = line.strip()
        if not text:
            continue
        parts = text.split(",")
        if len(parts) != 3:
            raise ParseError(f"expected 3 comma-separated fields, got {len(parts)}", number)
        try:
            z, re, im = (float(part) for part in parts)
        except ValueError as exc:
            raise ParseError(str(exc), number) from exc
        z_values.append(z)
        samples.append(complex(re, im))
    if len(samples) != header.count:
        raise ParseError(
            f"count mismatch: header says {header.count}, found {len(samples)} rows"
        )
    tol = GRID_ABS_FACTOR * header.dz_m
    for i, z in enumerate(z_values):
        expected = header.z_start_m + i * header.dz_m
        if abs(z - expected) > tol:
            raise GridError(
                f"data row {i + 1} (file line {data_start + i}): z = {z!r} "
                f"deviates from the uniform grid value {expected!r}"
            )
    return FieldTrace(
        frequency=header.frequency_hz,
        values=np.asarray(samples, dtype=np.complex128),
        z_start=header.z_start_m,
        dz=header.dz_m,
        structure_period_p=header.period_m,
        component_label=header.component,
        transverse_position=(header.x_m, header.y_m),
    )


GRID_ABS_FACTOR = 1e-9


@dataclass(frozen=True)
class ColumnMapping:
    """How to pull one complex component out of a delimited export.

    Exactly one representation must be mapped: ``re_col``/``im_col`` or
    ``mag_col``/``phase_deg_col``.  Scales convert the export's units to
    meters and to the (unit-agnostic) field amplitude.
    """

    z_col: int
    re_col: Optional[int] = None
    im_col: Optional[int] = None
    mag_col: Optional[int] = None
    phase_deg_col: Optional[int] = None
    z_scale: float = 1.0
    field_scale: float = 1.0
    delimiter: str = ","
    skip_rows: int = 0

    def __post_init__(self):
        cartesian = (self.re_col is not None) and (self.im_col is not None)
        polar = (self.mag_col is not None) and (self.phase_deg_col is not None)
        if cartesian == polar:
            raise ValueError("map either re/im columns or mag/phase columns")
        cols = [self.z_col] + [
            c for c in (self.re_col, self.im_col, self.mag_col, self.phase_deg_col)
            if c is not None
        ]
        if len(set(cols)) != len(cols):
            raise ValueError("mapped columns must be distinct")
        if any(c < 0 for c in cols):
            raise ValueError("column indices must be >= 0")
        if not self.z_scale > 0.0 or not self.field_scale > 0.0:
            raise ValueError("scale factors must be > 0")
        if self.skip_rows < 0:
            raise ValueError("skip_rows must be >= 0")
        if not self.delimiter:
            raise ValueError("delimiter must be nonempty")

    @property
    def polar(self) -> bool:
        return self.mag_col is not None


def import_columns(
    source: PathOrFile,
    mapping: ColumnMapping,
    header_overrides: Dict[str, object],
) -> FieldTrace:
    """Build a trace from an arbitrary delimited export.

    ``header_overrides`` supplies what the bare columns cannot:
    ``frequency_hz`` and ``period_m`` are required, ``component``, ``x_m``
    and ``y_m`` are optional.  Rows are sorted by z and validated against
    a uniform grid; duplicated z values raise :class:`GridError`.
    """
    overrides = dict(header_overrides)
    try:
        frequency = float(overrides.pop("frequency_hz"))
        period = float(overrides.pop("period_m"))
    except KeyError as exc:
        raise HeaderError(f"header override {exc.args[0]!r} is required") from exc
    component = str(overrides.pop("component", "imported"))
    x_m = float(overrides.pop("x_m", 0.0))
    y_m = float(overrides.pop("y_m", 0.0))
    if overrides:
        raise HeaderError(f"unknown header overrides: {sorted(overrides)}")

    rows: List[Tuple[float, complex]] = []
    skipped = 0
    for number, line in enumerate(_read_lines(source), start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        if skipped < mapping.skip_rows:
            skipped += 1
            continue
        parts = [part.strip() for part in text.split(mapping.delimiter)]
        needed = [mapping.z_col]
        needed += (
            [mapping.mag_col, mapping.phase_deg_col]
            if mapping.polar
            else [mapping.re_col, mapping.im_col]
        )
        if max(needed) >= len(parts):
            raise MappingError(
                f"line {number}: row has {len(parts)} columns, "
                f"mapping needs index {max(needed)}"
            )
        try:
            z = float(parts[mapping.z_col]) * mapping.z_scale
            if mapping.polar:
                mag = float(parts[mapping.mag_col]) * mapping.field_scale
                phase = math.radians(float(parts[mapping.phase_deg_col]))
                value = mag * cmath.exp(1j * phase)
            else:
                value = mapping.field_scale * complex(
                    float(parts[mapping.re_col]), float(parts[mapping.im_col])
                )
        except ValueError as exc:
            raise ParseError(str(exc), number) from exc
        rows.append((z, value))
    if len(rows) < 3:
        raise ParseError(f"need at least 3 data rows, found {len(rows)}")

    rows.sort(key=lambda item: item[0])
    z_sorted = np.array([r[0] for r in rows])
    values = np.array([r[1] for r in rows], dtype=np.complex128)
    dz = (z_sorted[-1] - z_sorted[0]) / (len(rows) - 1)
    if not dz > 0.0:
        raise GridError("z values collapse onto a single point")
    diffs = np.diff(z_sorted)
    bad = np.nonzero(np.abs(diffs - dz) > GRID_ABS_FACTOR * dz)[0]
    if bad.size:
        i = int(bad[0])
        raise GridError(
            f"non-uniform z spacing between sorted rows {i + 1} and {i + 2}: "
            f"{diffs[i]!r} vs expected {dz!r}"
        )
    return FieldTrace(
        frequency=frequency,
        values=values,
        z_start=float(z_sorted[0]),
        dz=float(dz),
        structure_period_p=period,
        component_label=component,
        transverse_position=(x_m, y_m),
    )


def parse_mapping_file(path: Union[str, os.PathLike]) -> Tuple[ColumnMapping, Dict[str, object]]:
    """Read a ``key=value`` mapping config.

    Integer keys: z_col, re_col, im_col, mag_col, phase_deg_col, skip_rows.
    Float keys: z_scale, field_scale, frequency_hz, period_m, x_m, y_m.
    String keys: delimiter, component.  Header keys are returned separately
    as overrides for :func:`import_columns`.
    """
    int_keys = {"z_col", "re_col", "im_col", "mag_col", "phase_deg_col", "skip_rows"}
    float_keys = {"z_scale", "field_scale"}
    str_keys = {"delimiter"}
    override_float = {"frequency_hz", "period_m", "x_m", "y_m"}
    override_str = {"component"}
    mapping_kwargs: Dict[str, object] = {}
    overrides: Dict[str, object] = {}
    with open(path, "r", encoding="utf-8") as handle:
        for number, line in enumerate(handle, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            key, sep, value = text.partition("=")
            if not sep:
                raise MappingError(f"line {number}: expected key=value, got {text!r}")
            key = key.strip()
            value = value.strip()
            try:
                if key in int_keys:
                    mapping_kwargs[key] = int(value)
                elif key in float_keys:
                    mapping_kwargs[key] = float(value)
                elif key in str_keys:
                    mapping_kwargs[key] = value
                elif key in override_float:
                    overrides[key] = float(value)
                elif key in override_str:
                    overrides[key] = value
                else:
                    raise MappingError(f"line {number}: unknown mapping key {key!r}")
            except ValueError as exc:
                raise MappingError(f"line {number}: {exc}") from exc
    try:
        mapping = ColumnMapping(**mapping_kwargs)
    except (TypeError, ValueError) as exc:
        raise MappingError(str(exc)) from exc
    return mapping, overrides


def triplets_from_trace(
    trace: FieldTrace,
    stride_override: Optional[int] = None,
) -> List[Tuple[int, SampleTriplet]]:
    """Every period-spaced triplet the sample grid supports.

    Returns ``(center_index, triplet)`` pairs for each index with both
    neighbors in range; a trace of N samples and stride k yields N - 2k
    triplets.  No interpolation is ever performed: the period must land on
    the grid (``stride_override`` replaces the per-trace stride, using
    ``stride_override * dz`` as the effective period).
    """
    if stride_override is None:
        stride = trace.period_stride()
        period = trace.structure_period_p
    else:
        stride = int(stride_override)
        if stride < 1:
            raise ValueError("stride_override must be >= 1")
        period = stride * trace.dz
    values = trace.values
    result = []
    for n in range(stride, trace.count - stride):
        result.append(
            (
                n,
                SampleTriplet(
                    complex(values[n - stride]),
                    complex(values[n]),
                    complex(values[n + stride]),
                    period,
                ),
            )
        )
    return result
