"""Independent ground-truth dispersion calculators.

Two routes that never touch sampled field data: the closed-form propagation
constant of a single waveguide mode (TE10 of a rectangular guide, or TEM as
the kc = 0 limit), and the Bloch eigenvalue of a cascaded two-port unit
cell built from transmission-line sections and ideal shunt admittances.
"""

import cmath
import math
from dataclasses import dataclass
from typing import Optional, Tuple, Union

from .errors import AmbiguousOrientationError, DegenerateCellError, ZeroImpedanceError
from .extraction import orient_roots, unit_product_roots

C0 = 299_792_458.0        # vacuum speed of light, m/s
MU0 = 4.0e-7 * math.pi    # vacuum permeability, H/m

ABCD_DET_TOL = 1e-9


@dataclass(frozen=True)
class WaveguideSpec:
    """Single-mode fill description of a guide cross-section.

    ``cutoff_wavenumber_kc`` is pi/a for the dominant mode of a rectangular
    guide of width a; zero gives a TEM plane wave.  Loss enters through a
    frequency-constant loss tangent.
    """

    cutoff_wavenumber_kc: float = 0.0
    rel_permittivity: float = 1.0
    loss_tangent: float = 0.0

    def __post_init__(self):
        if self.cutoff_wavenumber_kc < 0.0:
            raise ValueError("cutoff wavenumber must be >= 0")
        if not self.rel_permittivity > 0.0:
            raise ValueError("relative permittivity must be > 0")
        if self.loss_tangent < 0.0:
            raise ValueError("loss tangent must be >= 0")

    @classmethod
    def te10(cls, width_a: float, rel_permittivity: float = 1.0,
             loss_tangent: float = 0.0) -> "WaveguideSpec":
        """Dominant mode of a rectangular guide of width ``width_a`` meters."""
        if not width_a > 0.0:
            raise ValueError("guide width must be > 0")
        return cls(math.pi / width_a, rel_permittivity, loss_tangent)

    @property
    def cutoff_frequency(self) -> float:
        """Lossless cutoff in Hz (0 for TEM)."""
        return C0 * self.cutoff_wavenumber_kc / (
            2.0 * math.pi * math.sqrt(self.rel_permittivity)
        )


def te10_kz(freq: float, spec: WaveguideSpec) -> complex:
    """Closed-form complex propagation constant, rad/m - j*Np/m.

    ``k_z = sqrt(eps_c*k0**2 - kc**2)`` with ``eps_c = eps_r*(1 - j*tan_d)``
    and ``k0 = 2*pi*f/c``.  The branch is fixed to ``Re >= 0, Im <= 0``
    (a passive forward-decaying wave): above cutoff and lossless the result
    is purely real, below cutoff purely imaginary, never an error.
    """
    if not freq > 0.0:
        raise ValueError("frequency must be > 0")
    k0 = 2.0 * math.pi * freq / C0
    eps_c = spec.rel_permittivity * complex(1.0, -spec.loss_tangent)
    kz = cmath.sqrt(eps_c * k0 * k0 - spec.cutoff_wavenumber_kc**2)
    if kz.imag > 0.0 or (kz.imag == 0.0 and kz.real < 0.0):
        kz = -kz
    return kz


def wave_impedance(freq: float, spec: WaveguideSpec) -> complex:
    """TE wave impedance ``omega*mu0/k_z`` (TEM impedance when kc = 0).

    Raises ``ZeroImpedanceError`` when ``k_z`` vanishes exactly at the
    evaluation frequency (the cutoff singularity).
    """
    kz = te10_kz(freq, spec)
    if kz == 0:
        raise ZeroImpedanceError(
            f"k_z = 0 at {freq:g} Hz: wave impedance diverges at cutoff"
        )
    return 2.0 * math.pi * freq * MU0 / kz


@dataclass(frozen=True)
class LayerSpec:
    """Finite-length guide section filled with a single medium."""

    length: float
    medium: WaveguideSpec

    def __post_init__(self):
        if not self.length > 0.0:
            raise ValueError("layer length must be > 0")


@dataclass(frozen=True)
class ShuntElementSpec:
    """Zero-length shunt discontinuity.

    The admittance is normalized to the wave impedance of the cell's
    reference section and denormalized per frequency; an idealized
    stand-in for irises and similar thin obstacles.
    """

    normalized_admittance: complex

    def __post_init__(self):
        if not (math.isfinite(self.normalized_admittance.real)
                and math.isfinite(self.normalized_admittance.imag)):
            raise ValueError("shunt admittance must be finite")


CellElement = Union[LayerSpec, ShuntElementSpec]


@dataclass(frozen=True)
class UnitCellSpec:
    """Ordered element cascade making up one period.

    ``period_p`` defaults to the summed layer lengths and, when given
    explicitly, must agree with that sum to 1e-12 relative.
    """

    elements: Tuple[CellElement, ...]
    period_p: Optional[float] = None

    def __post_init__(self):
        elements = tuple(self.elements)
        object.__setattr__(self, "elements", elements)
        lengths = [e.length for e in elements if isinstance(e, LayerSpec)]
        if not lengths:
            raise ValueError("a unit cell needs at least one layer")
        total = math.fsum(lengths)
        if self.period_p is None:
            object.__setattr__(self, "period_p", total)
        elif abs(self.period_p - total) > 1e-12 * total:
            raise ValueError(
                f"period_p {self.period_p!r} does not match the layer sum {total!r}"
            )

    @property
    def reference_medium(self) -> WaveguideSpec:
        """Medium of the first layer; normalization reference for shunts."""
        for element in self.elements:
            if isinstance(element, LayerSpec):
                return element.medium
        raise ValueError("cell has no layers")  # unreachable after validation


@dataclass(frozen=True)
class ABCDMatrix:
    """2x2 voltage/current transfer matrix of a reciprocal two-port."""

    a: complex
    b: complex
    c: complex
    d: complex

    def __post_init__(self):
        if abs(self.determinant - 1.0) > ABCD_DET_TOL:
            raise ValueError(
                f"ABCD determinant must be 1 (reciprocity), got {self.determinant!r}"
            )

    @property
    def determinant(self) -> complex:
        return self.a * self.d - self.b * self.c

    @property
    def trace(self) -> complex:
        return self.a + self.d

    def __matmul__(self, other: "ABCDMatrix") -> "ABCDMatrix":
        return ABCDMatrix(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    @classmethod
    def identity(cls) -> "ABCDMatrix":
        return cls(1.0, 0.0, 0.0, 1.0)


def element_abcd(
    element: CellElement,
    freq: float,
    reference: Optional[WaveguideSpec] = None,
) -> ABCDMatrix:
    """Transfer matrix of a single cell element at one frequency.

    Layers map to the exact line-section matrix
    ``[[cos(kz*l), j*Z*sin(kz*l)], [j*sin(kz*l)/Z, cos(kz*l)]]``; shunts map
    to ``[[1, 0], [Y, 1]]`` with Y denormalized by the reference medium's
    wave impedance (``reference`` is required for shunts).
    """
    if isinstance(element, LayerSpec):
        kz = te10_kz(freq, element.medium)
        z0 = wave_impedance(freq, element.medium)
        theta = kz * element.length
        cos_t = cmath.cos(theta)
        sin_t = cmath.sin(theta)
        return ABCDMatrix(cos_t, 1j * z0 * sin_t, 1j * sin_t / z0, cos_t)
    if isinstance(element, ShuntElementSpec):
        if reference is None:
            raise ValueError("shunt elements need a reference medium to denormalize")
        y = element.normalized_admittance / wave_impedance(freq, reference)
        return ABCDMatrix(1.0, 0.0, y, 1.0)
    raise TypeError(f"unsupported cell element {element!r}")


def cell_abcd(cell: UnitCellSpec, freq: float) -> ABCDMatrix:
    """Ordered product of the element matrices of one unit cell."""
    reference = cell.reference_medium
    matrix = ABCDMatrix.identity()
    for element in cell.elements:
        matrix = matrix @ element_abcd(element, freq, reference=reference)
    return matrix


def bloch_kz(
    cell_matrix: ABCDMatrix,
    period_p: float,
    reference: Optional[complex] = None,
) -> complex:
    """Bloch propagation constant of a periodic cascade of ``cell_matrix``.

    The cell eigenvalues solve ``lam**2 - (A+D)*lam + 1 = 0``, the same
    quadratic shape as the three-point extraction, and the forward one is
    picked with the identical orientation convention (magnitude, then
    positive phase, with an optional caller reference for sweep
    continuity).  Returns ``beta - j*alpha`` with beta on the principal
    branch ``(-pi/p, pi/p]``; unwrapping across frequency belongs to the
    sweep layer.

    Raises ``DegenerateCellError`` when A + D = +-2 leaves the orientation
    ambiguous (band-edge degeneracy) and no reference is supplied.
    """
    if not period_p > 0.0:
        raise ValueError("period must be > 0")
    if abs(cell_matrix.determinant - 1.0) > 1e-6:
        raise ValueError("cell matrix determinant is not 1")
    lam_big, lam_small = unit_product_roots(cell_matrix.trace)
    try:
        pair = orient_roots(lam_big, lam_small, reference=reference)
    except AmbiguousOrientationError as exc:
        raise DegenerateCellError(str(exc)) from exc
    log_lam = cmath.log(pair.u_forward)
    return complex(log_lam.imag / period_p, -log_lam.real / period_p)
