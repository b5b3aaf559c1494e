"""Three-point extraction of complex propagation constants.

A guided wave in a structure that repeats every ``p`` meters is multiplied
by a fixed complex factor ``u = exp(j*k_z*p)`` per period, where
``k_z = beta - j*alpha``.  Sampling one field component at ``z - p``, ``z``
and ``z + p`` ties the forward factor ``u`` and the backward factor ``1/u``
together through the quadratic

    u**2 * E(z) - u * [E(z-p) + E(z+p)] + E(z) = 0

whose two roots are exactly the forward/backward pair, no matter how the
total field splits between the two travel directions.  Everything in this
module is a pure function of its inputs.
"""

import cmath
import math
from dataclasses import dataclass
from typing import Literal, Optional, Tuple

from .errors import (
    AmbiguousOrientationError,
    CenterNodeError,
    DegenerateTripletError,
    SingularAmplitudeSystemError,
)

TAU = 2.0 * math.pi

#: How ``u_forward`` was chosen.
OrientationRule = Literal["magnitude", "phase-sign", "caller-override", "degenerate"]

DEFAULT_NODE_THRESHOLD = 1e-6
DEFAULT_ABS_FLOOR = 1e-300
DEFAULT_TIE_EPS = 1e-9

ROOT_PRODUCT_TOL = 1e-10


@dataclass(frozen=True)
class SampleTriplet:
    """Three complex field samples spaced one period apart.

    The samples are unit-agnostic: any single E or H component works, and
    any common scale factor cancels in the extraction.

    Parameters
    ----------
    e_minus, e_center, e_plus:
        Complex field values at ``z - p``, ``z`` and ``z + p``.
    period_p:
        Sampling period in meters, > 0.
    """

    e_minus: complex
    e_center: complex
    e_plus: complex
    period_p: float

    def __post_init__(self):
        if not self.period_p > 0.0:
            raise ValueError(f"period_p must be > 0, got {self.period_p!r}")
        if self.e_minus == 0 and self.e_center == 0 and self.e_plus == 0:
            raise DegenerateTripletError("all three samples are zero")

    @property
    def condition(self) -> float:
        """Center magnitude over the larger neighbor magnitude.

        Small values mean the center sample sits near a field node, where
        the division in the root formula amplifies sample errors.  Use it
        to rank candidate sampling points.
        """
        side = max(abs(self.e_minus), abs(self.e_plus))
        if side == 0.0:
            return math.inf
        return abs(self.e_center) / side


@dataclass(frozen=True)
class RootPair:
    """Oriented pair of per-period Floquet factors.

    ``u_forward * u_backward == 1`` (the quadratic has unit constant and
    leading coefficient after normalization), which is validated here.
    """

    u_forward: complex
    u_backward: complex
    orientation_rule: OrientationRule

    def __post_init__(self):
        if abs(self.u_forward * self.u_backward - 1.0) > ROOT_PRODUCT_TOL:
            raise ValueError(
                "u_forward * u_backward must equal 1, got "
                f"{self.u_forward * self.u_backward!r}"
            )


@dataclass(frozen=True)
class PropagationEstimate:
    """One extraction result.

    ``beta`` (rad/m) and ``alpha`` (Np/m) describe the forward root via
    ``u_forward = exp(alpha*p + 1j*beta*p)``.  ``condition`` is the triplet
    conditioning metric; ``residual`` is the multimode residual when a
    fourth sample was available, else ``None``.
    """

    beta: float
    alpha: float
    u_pair: RootPair
    condition: float
    residual: Optional[float] = None


def unit_product_roots(q: complex) -> Tuple[complex, complex]:
    """Roots of ``u**2 - q*u + 1 = 0``, larger magnitude first.

    The larger root is computed with the cancellation-safe sign choice and
    the smaller one as its exact reciprocal, so the pair keeps a unit
    product even when the discriminant nearly vanishes at band edges.
    """
    disc = cmath.sqrt(q * q - 4.0)
    # pick the sign that adds in magnitude instead of cancelling
    if q.real * disc.real + q.imag * disc.imag < 0.0:
        disc = -disc
    u_big = 0.5 * (q + disc)
    return u_big, 1.0 / u_big


def raw_root_pair(
    triplet: SampleTriplet,
    node_threshold: float = DEFAULT_NODE_THRESHOLD,
    abs_floor: float = DEFAULT_ABS_FLOOR,
) -> Tuple[complex, complex]:
    """Unoriented Floquet factor pair of a triplet, larger magnitude first.

    Raises
    ------
    DegenerateTripletError
        If all three magnitudes are at or below ``abs_floor``.
    CenterNodeError
        If the center sample is smaller than ``node_threshold`` times the
        larger neighbor; the sampling point sits on a field node and the
        caller should pick another point or component.
    """
    m_minus = abs(triplet.e_minus)
    m_center = abs(triplet.e_center)
    m_plus = abs(triplet.e_plus)
    if max(m_minus, m_center, m_plus) <= abs_floor:
        raise DegenerateTripletError(
            f"all samples at or below the floor {abs_floor:g}; no wave present"
        )
    if m_center / max(m_minus, m_plus, abs_floor) < node_threshold:
        raise CenterNodeError(
            "center sample lies on a field node "
            f"(|E(z)| / max|E(z+-p)| = {m_center / max(m_minus, m_plus, abs_floor):.3g})"
        )
    q = (triplet.e_minus + triplet.e_plus) / triplet.e_center
    return unit_product_roots(q)


def orient_roots(
    u1: complex,
    u2: complex,
    reference: Optional[complex] = None,
    tie_eps: float = DEFAULT_TIE_EPS,
) -> RootPair:
    """Split an unordered unit-product root pair into forward/backward.

    The forward wave decays along +z in a passive structure, so its factor
    satisfies ``|u| >= 1``; that magnitude rule decides whenever the two
    magnitudes differ by more than ``tie_eps``.  In the lossless tie (both
    magnitudes at 1) the root with phase in ``(0, pi]`` is taken as forward,
    the conventional positive-phase branch.  A caller ``reference`` (the
    forward factor at a neighboring frequency) overrides both rules and
    picks the root closest to it, which keeps sweeps branch-continuous.

    Raises
    ------
    AmbiguousOrientationError
        At a lossless band edge, where both roots sit at phase ~0 or ~pi
        on the unit circle and no reference is supplied.  The exception is
        deliberate: guessing there would silently flip branches.  The only
        exception is the exact double root at u = +1 (a constant field),
        where every convention agrees and the pair is returned with rule
        ``"degenerate"``.
    """
    if abs(u1 * u2 - 1.0) > ROOT_PRODUCT_TOL:
        raise ValueError("root pair does not satisfy u1*u2 = 1")
    if reference is not None:
        if abs(u1 - reference) <= abs(u2 - reference):
            return RootPair(u1, u2, "caller-override")
        return RootPair(u2, u1, "caller-override")
    if u1 == u2:
        # unit product forces the double root onto +-1
        if u1.real > 0.0:
            return RootPair(u1, u2, "degenerate")
        raise AmbiguousOrientationError(
            "double root at u = -1 (band edge); forward direction undefined "
            "without a reference"
        )
    mag1, mag2 = abs(u1), abs(u2)
    if abs(mag1 - 1.0) <= tie_eps and abs(mag2 - 1.0) <= tie_eps:
        phase1 = cmath.phase(u1)
        folded = abs(phase1)
        if folded <= tie_eps or folded >= math.pi - tie_eps:
            raise AmbiguousOrientationError(
                f"band edge tie at phase {phase1:+.3e} rad: forward root "
                "undecidable without a reference"
            )
        if 0.0 < phase1 <= math.pi:
            return RootPair(u1, u2, "phase-sign")
        return RootPair(u2, u1, "phase-sign")
    if mag1 > mag2:
        return RootPair(u1, u2, "magnitude")
    return RootPair(u2, u1, "magnitude")


def solve_u_pair(
    triplet: SampleTriplet,
    reference: Optional[complex] = None,
    node_threshold: float = DEFAULT_NODE_THRESHOLD,
    abs_floor: float = DEFAULT_ABS_FLOOR,
    tie_eps: float = DEFAULT_TIE_EPS,
) -> RootPair:
    """Solve the three-point quadratic and orient the resulting pair."""
    u1, u2 = raw_root_pair(triplet, node_threshold=node_threshold, abs_floor=abs_floor)
    return orient_roots(u1, u2, reference=reference, tie_eps=tie_eps)


def estimate_propagation(
    triplet: SampleTriplet,
    branch_offset: int = 0,
    reference: Optional[complex] = None,
    node_threshold: float = DEFAULT_NODE_THRESHOLD,
    abs_floor: float = DEFAULT_ABS_FLOOR,
    tie_eps: float = DEFAULT_TIE_EPS,
) -> PropagationEstimate:
    """Phase and attenuation constants from one triplet.

    ``beta`` is the principal phase of the forward root plus
    ``2*pi*branch_offset``, divided by the period; ``alpha`` is
    ``ln|u_forward| / p``.  Multi-branch resolution across a frequency
    sweep belongs to the sweep layer, not here; ``branch_offset`` defaults
    to the principal branch.
    """
    pair = solve_u_pair(
        triplet,
        reference=reference,
        node_threshold=node_threshold,
        abs_floor=abs_floor,
        tie_eps=tie_eps,
    )
    p = triplet.period_p
    beta = (cmath.phase(pair.u_forward) + TAU * branch_offset) / p
    alpha = math.log(abs(pair.u_forward)) / p
    return PropagationEstimate(
        beta=beta, alpha=alpha, u_pair=pair, condition=triplet.condition
    )


def multimode_residual(
    e_minus: complex,
    e_center: complex,
    e_plus: complex,
    e_plus2: complex,
    pair: RootPair,
) -> float:
    """Consistency check of the single-pair wave model on a fourth sample.

    The forward/backward amplitudes A, B are solved from

        E(z)   = A + B
        E(z+p) = A/u + B*u

    and the prediction ``A/u**2 + B*u**2`` is compared against the actual
    ``E(z+2p)``.  The returned residual is that mismatch over the largest
    of the four sample magnitudes: ~0 for a clean single Floquet mode,
    large when two different propagation constants are superposed (a case
    the three-point extraction cannot represent) or when samples are noisy.

    Raises
    ------
    SingularAmplitudeSystemError
        When ``u_forward**2 == 1`` exactly; the 2x2 system is singular at
        that band-edge degeneracy.
    """
    u = pair.u_forward
    det = u - 1.0 / u
    if det == 0:
        raise SingularAmplitudeSystemError(
            "u_forward**2 == 1; forward/backward amplitudes are not separable"
        )
    fwd = (e_center * u - e_plus) / det
    bwd = e_center - fwd
    predicted = fwd / (u * u) + bwd * (u * u)
    scale = max(abs(e_minus), abs(e_center), abs(e_plus), abs(e_plus2))
    return abs(e_plus2 - predicted) / scale
