"""Field-trace generators with known ground truth.

Single-mode and forward+backward superpositions for uniform guides, the
interior field of a finite cascade of unit cells computed by chaining the
equivalent transmission-line relations back from the termination, and
deterministic complex-Gaussian noise injection.
"""

import cmath
import dataclasses
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import PeriodGridMismatchError, ResonanceOverflowError
from .oracles import LayerSpec, UnitCellSpec, te10_kz, wave_impedance
from .trace import FieldTrace

DIVISION_REL_TOL = 1e-9


@dataclass(frozen=True)
class TerminationSpec:
    """Load at the far end of a finite cascade."""

    kind: str
    reflection_coefficient: complex = 0.0

    _KINDS = ("matched", "short", "open", "reflection")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ValueError(f"kind must be one of {self._KINDS}, got {self.kind!r}")
        if self.kind == "reflection" and abs(self.reflection_coefficient) > 1.0:
            raise ValueError("|reflection coefficient| must be <= 1")

    @property
    def gamma(self) -> complex:
        """Reflection coefficient at the load plane."""
        if self.kind == "matched":
            return 0.0
        if self.kind == "short":
            return -1.0
        if self.kind == "open":
            return 1.0
        return self.reflection_coefficient

    @classmethod
    def matched(cls) -> "TerminationSpec":
        return cls("matched")

    @classmethod
    def short(cls) -> "TerminationSpec":
        return cls("short")

    @classmethod
    def open(cls) -> "TerminationSpec":
        return cls("open")

    @classmethod
    def reflection(cls, gamma: complex) -> "TerminationSpec":
        return cls("reflection", gamma)


def synth_uniform_trace(
    k_z: complex,
    forward_amp: complex,
    backward_amp: complex,
    z_start: float,
    dz: float,
    count: int,
    period_p: float,
    frequency: float,
    component_label: str = "Ey",
    transverse_position: Tuple[float, float] = (0.0, 0.0),
) -> FieldTrace:
    """Uniform-guide trace: ``A*exp(-j*k_z*z) + B*exp(+j*k_z*z)``.

    Any positive ``period_p`` that is an integer multiple of ``dz`` is a
    valid period for a uniform structure.
    """
    if count < 3:
        raise ValueError("need at least 3 samples")
    _require_divisible(period_p, dz, "period_p")
    z = z_start + dz * np.arange(count)
    values = forward_amp * np.exp(-1j * k_z * z) + backward_amp * np.exp(1j * k_z * z)
    return FieldTrace(
        frequency=frequency,
        values=values,
        z_start=z_start,
        dz=dz,
        structure_period_p=period_p,
        component_label=component_label,
        transverse_position=transverse_position,
    )


def synth_periodic_trace(
    cell: UnitCellSpec,
    n_cells: int,
    termination: TerminationSpec,
    source_amp: complex,
    frequency: float,
    dz: float,
    end_contamination: float = 0.0,
    contamination_decay: Optional[float] = None,
    overflow_ratio: float = 1e12,
) -> FieldTrace:
    """Total modal voltage inside a finite cascade of ``n_cells`` cells.

    The cascade runs from z = 0 (source side) to z = n_cells * p, loaded
    by ``termination`` and driven by a matched source injecting a forward
    wave of amplitude ``source_amp`` at z = 0.  Per-section forward and
    backward amplitudes are obtained by walking the element transfer
    relations from the load plane back to the source, so voltage and
    current are continuous across every internal interface by
    construction.

    ``end_contamination`` optionally adds a small parasitic component
    decaying from both ends (rate ``contamination_decay``, default 2/p),
    mimicking the localized non-modal fields that real finite structures
    carry near their source and load; it is zero by default and the trace
    is then an exact two-wave field in every section.

    Raises
    ------
    PeriodGridMismatchError
        If ``dz`` does not divide every layer length.
    ResonanceOverflowError
        If internal amplitudes exceed ``overflow_ratio`` times the source.
    """
    if n_cells < 1:
        raise ValueError("n_cells must be >= 1")
    if source_amp == 0:
        raise ValueError("source amplitude must be nonzero")
    p = cell.period_p
    for element in cell.elements:
        if isinstance(element, LayerSpec):
            _require_divisible(element.length, dz, "layer length")

    # per-section constants (cache: cells repeat the same layer objects)
    kz_cache = {}
    z0_cache = {}
    for element in cell.elements:
        if isinstance(element, LayerSpec) and element.medium not in kz_cache:
            kz_cache[element.medium] = te10_kz(frequency, element.medium)
            z0_cache[element.medium] = wave_impedance(frequency, element.medium)
    reference = cell.reference_medium

    flat = list(cell.elements) * n_cells
    sections = []  # (z0, length, kz, z0_imp), source to load order
    cursor = 0.0
    for element in flat:
        if isinstance(element, LayerSpec):
            sections.append(
                (cursor, element.length, kz_cache[element.medium], z0_cache[element.medium])
            )
            cursor += element.length
    total_length = cursor

    # load state, then walk right to left applying each element relation
    gamma = termination.gamma
    z_last = sections[-1][3]
    voltage = 1.0 + gamma
    current = (1.0 - gamma) / z_last
    amplitudes: list = [None] * len(sections)
    sec = len(sections)
    z_ref = None
    for element in reversed(flat):
        if isinstance(element, LayerSpec):
            sec -= 1
            _, length, kz, z0 = sections[sec]
            phase = cmath.exp(1j * kz * length)
            fwd = 0.5 * (voltage + z0 * current) * phase
            bwd = 0.5 * (voltage - z0 * current) / phase
            amplitudes[sec] = (fwd, bwd)
            voltage = fwd + bwd
            current = (fwd - bwd) / z0
        else:
            if z_ref is None:
                z_ref = wave_impedance(frequency, reference)
            current = current + element.normalized_admittance / z_ref * voltage

    source_fwd = amplitudes[0][0]
    if source_fwd == 0:
        raise ResonanceOverflowError("no forward wave content at the source plane")
    scale = source_amp / source_fwd
    peak = max(max(abs(f), abs(b)) for f, b in amplitudes) * abs(scale)
    if peak > overflow_ratio * abs(source_amp):
        raise ResonanceOverflowError(
            f"internal amplitude {peak:.3g} exceeds {overflow_ratio:g} x source"
        )

    steps = round(total_length / dz)
    count = steps + 1
    values = np.empty(count, dtype=np.complex128)
    for index, (z0_pos, length, kz, _) in enumerate(sections):
        first = round(z0_pos / dz)
        last = round((z0_pos + length) / dz)
        stop = last + 1 if index == len(sections) - 1 else last
        local = np.arange(first, stop) * dz - z0_pos
        fwd, bwd = amplitudes[index]
        values[first:stop] = scale * (
            fwd * np.exp(-1j * kz * local) + bwd * np.exp(1j * kz * local)
        )

    if end_contamination:
        decay = contamination_decay if contamination_decay is not None else 2.0 / p
        grid = np.arange(count) * dz
        near = abs(scale) * (abs(amplitudes[0][0]) + abs(amplitudes[0][1]))
        far = abs(scale) * (abs(amplitudes[-1][0]) + abs(amplitudes[-1][1]))
        values = values + end_contamination * (
            near * np.exp(-decay * grid) + far * np.exp(-decay * (total_length - grid))
        )

    return FieldTrace(
        frequency=frequency,
        values=values,
        z_start=0.0,
        dz=dz,
        structure_period_p=p,
    )


def add_noise(trace: FieldTrace, relative_sigma: float, seed: int) -> FieldTrace:
    """Perturb every sample with an independent complex Gaussian.

    The per-sample standard deviation (total over both quadratures) is
    ``relative_sigma`` times the largest magnitude in the trace.  Output
    is deterministic for a given seed; ``relative_sigma = 0`` returns the
    trace unchanged.
    """
    if relative_sigma < 0.0:
        raise ValueError("relative_sigma must be >= 0")
    if relative_sigma == 0.0:
        return trace
    rng = np.random.default_rng(seed)
    sigma = relative_sigma * float(np.max(np.abs(trace.values)))
    per_axis = sigma / math.sqrt(2.0)
    noise = per_axis * (
        rng.standard_normal(trace.count) + 1j * rng.standard_normal(trace.count)
    )
    return dataclasses.replace(trace, values=trace.values + noise)


def _require_divisible(span: float, dz: float, what: str) -> None:
    ratio = span / dz
    if round(ratio) < 1 or abs(ratio - round(ratio)) > DIVISION_REL_TOL * ratio:
        raise PeriodGridMismatchError(
            f"{what} {span:g} m is not an integer multiple of dz {dz:g} m"
        )
