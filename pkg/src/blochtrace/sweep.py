"""Frequency-sweep driver: aggregation, branch tracking, band annotation.

Per frequency, many triplets are reduced to one :class:`DispersionPoint`
with shared root orientation and spread statistics.  Across frequency,
integer phase branches are resolved by continuity from a low-frequency
anchor, so the per-cell phase shift may legitimately exceed pi in higher
passbands instead of folding back.  Stopbands are annotated afterwards,
and curves can be compared or shifted to another space harmonic.
"""

import cmath
import math
import os
import warnings as _warnings
from bisect import bisect_left
from dataclasses import dataclass, replace
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .errors import (
    BranchJumpWarning,
    CenterNodeError,
    DegenerateTripletError,
    HeaderError,
    NoValidTripletsError,
    ParseError,
    SingularAmplitudeSystemError,
)
from .extraction import (
    AmbiguousOrientationError,
    PropagationEstimate,
    RootPair,
    SampleTriplet,
    TAU,
    multimode_residual,
    orient_roots,
    raw_root_pair,
    unit_product_roots,
)
from .oracles import UnitCellSpec, WaveguideSpec, cell_abcd, te10_kz
from .trace import FieldTrace

FLAG_BAND_EDGE = "band_edge"
FLAG_LOW_CONDITION = "low_condition"
FLAG_HIGH_RESIDUAL = "high_residual"
FLAG_ORIENTATION_AMBIGUOUS = "orientation_ambiguous"

CURVE_COLUMN_LINE = (
    "frequency_hz,beta_rad_per_m,alpha_np_per_m,beta_p_rad,sigma_beta,sigma_alpha,flags"
)


@dataclass(frozen=True)
class ExtractionThresholds:
    """Tunable limits used while reducing triplets to sweep points."""

    node_threshold: float = 1e-6        # center/neighbor ratio treated as a node
    abs_floor_rel: float = 1e-30        # x trace max -> dead-sample floor
    low_condition: float = 0.05         # mean condition below this sets a flag
    high_residual: float = 1e-3         # max residual above this sets a flag
    band_edge_tol: float = 0.05         # rad distance of beta*p from m*pi
    tie_eps: float = 1e-9
    orientation_mag_tol: float = 0.01   # |u|-1 below this is treated as lossless


DEFAULT_THRESHOLDS = ExtractionThresholds()


@dataclass(frozen=True)
class DispersionPoint:
    """One aggregated extraction result at a single frequency."""

    frequency: float
    beta: float
    alpha: float
    beta_p: float
    n_samples: int
    sigma_beta: float
    sigma_alpha: float
    mean_condition: float
    max_residual: float
    flags: frozenset

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if self.sigma_beta < 0.0 or self.sigma_alpha < 0.0:
            raise ValueError("sigma values must be >= 0")
        object.__setattr__(self, "flags", frozenset(self.flags))


@dataclass(frozen=True)
class StopbandAnnotation:
    """Frequency interval where the per-cell phase pins to a pi multiple."""

    f_low: float
    f_high: float
    pi_multiple: int
    kind: str = "lossless"   # "lossless" (hard) or "transition" (lossy)


@dataclass(frozen=True)
class DispersionCurve:
    """Frequency-ordered branch-tracked dispersion data.

    ``points`` always reflect the current ``harmonic_index``; when the
    curve has been shifted, ``base_points`` retains the harmonic-0 data so
    shifting back is an exact inverse.
    """

    points: Tuple[DispersionPoint, ...]
    period_p: float
    branch_anchor: str
    stopbands: Tuple[StopbandAnnotation, ...] = ()
    harmonic_index: int = 0
    warnings: Tuple[str, ...] = ()
    base_points: Optional[Tuple[DispersionPoint, ...]] = None

    def __post_init__(self):
        points = tuple(self.points)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "stopbands", tuple(self.stopbands))
        object.__setattr__(self, "warnings", tuple(self.warnings))
        if not points:
            raise ValueError("a curve needs at least one point")
        freqs = [pt.frequency for pt in points]
        if any(b <= a for a, b in zip(freqs, freqs[1:])):
            raise ValueError("frequencies must be strictly increasing")

    @property
    def frequencies(self) -> Tuple[float, ...]:
        return tuple(pt.frequency for pt in self.points)


# ---------------------------------------------------------------------------
# per-frequency aggregation
# ---------------------------------------------------------------------------

def aggregate_frequency(
    triplets: Sequence[SampleTriplet],
    period_p: float,
    frequency: float,
    reference: Optional[complex] = None,
    fourth_samples: Optional[Sequence[Optional[complex]]] = None,
    thresholds: ExtractionThresholds = DEFAULT_THRESHOLDS,
    abs_floor: float = 1e-300,
) -> DispersionPoint:
    """Reduce many triplets at one frequency to a single sweep point.

    All triplets are oriented against a shared forward factor: the caller
    ``reference`` if given (normally the previous frequency's forward
    root), otherwise the first triplet that orients unambiguously.  Phase
    means are taken after aligning each principal phase to that shared
    branch, and sample standard deviations quantify the spread (the
    position independence of the method makes them an error estimate).

    ``fourth_samples``, when provided, runs the multimode residual per
    triplet and records the worst value.

    Raises :class:`NoValidTripletsError` when every triplet fails its
    preconditions (node centers, dead samples).
    """
    valid: List[Tuple[int, SampleTriplet, complex, complex]] = []
    for index, triplet in enumerate(triplets):
        if abs(triplet.period_p - period_p) > 1e-12 * period_p:
            raise ValueError("triplet period does not match the aggregation period")
        try:
            u_big, u_small = raw_root_pair(
                triplet, node_threshold=thresholds.node_threshold, abs_floor=abs_floor
            )
        except (CenterNodeError, DegenerateTripletError):
            continue
        valid.append((index, triplet, u_big, u_small))
    if not valid:
        raise NoValidTripletsError(
            f"no usable triplet among {len(triplets)} at {frequency:g} Hz"
        )

    ambiguous = False
    shared = reference
    if shared is None:
        # single-mode data has one q = u + 1/u for every triplet, so the
        # mean suppresses sample noise before the orientation is judged
        q_mean = sum(u_big + u_small for _, _, u_big, u_small in valid) / len(valid)
        shared, ambiguous = _orient_standalone(q_mean, thresholds)

    ref_phase = cmath.phase(shared)
    betas: List[float] = []
    alphas: List[float] = []
    conditions: List[float] = []
    residuals: List[float] = []
    for index, triplet, u_big, u_small in valid:
        pair = orient_roots(u_big, u_small, reference=shared)
        forward = pair.u_forward
        phase = ref_phase + math.remainder(cmath.phase(forward) - ref_phase, TAU)
        betas.append(phase / triplet.period_p)
        alphas.append(math.log(abs(forward)) / triplet.period_p)
        conditions.append(triplet.condition)
        if fourth_samples is not None and fourth_samples[index] is not None:
            try:
                residuals.append(
                    multimode_residual(
                        triplet.e_minus,
                        triplet.e_center,
                        triplet.e_plus,
                        fourth_samples[index],
                        pair,
                    )
                )
            except SingularAmplitudeSystemError:
                pass

    n = len(valid)
    beta = math.fsum(betas) / n
    alpha = math.fsum(alphas) / n
    sigma_beta = _sample_std(betas, beta)
    sigma_alpha = _sample_std(alphas, alpha)
    mean_condition = math.fsum(conditions) / n
    max_residual = max(residuals) if residuals else math.nan
    beta_p = beta * period_p

    flags = set()
    if ambiguous:
        flags |= {FLAG_ORIENTATION_AMBIGUOUS, FLAG_BAND_EDGE}
    if mean_condition < thresholds.low_condition:
        flags.add(FLAG_LOW_CONDITION)
    if residuals and max_residual > thresholds.high_residual:
        flags.add(FLAG_HIGH_RESIDUAL)
    if _pi_distance(beta_p) <= thresholds.band_edge_tol:
        flags.add(FLAG_BAND_EDGE)

    return DispersionPoint(
        frequency=frequency,
        beta=beta,
        alpha=alpha,
        beta_p=beta_p,
        n_samples=n,
        sigma_beta=sigma_beta,
        sigma_alpha=sigma_alpha,
        mean_condition=mean_condition,
        max_residual=max_residual,
        flags=frozenset(flags),
    )


def _sample_std(values: List[float], mean: float) -> float:
    if len(values) < 2:
        return 0.0
    return math.sqrt(
        math.fsum((v - mean) ** 2 for v in values) / (len(values) - 1)
    )


def _orient_standalone(q: complex, thresholds: ExtractionThresholds):
    """Forward root of ``u**2 - q*u + 1`` with no neighboring-frequency help.

    The decay rule applies only when the magnitudes split by more than
    ``orientation_mag_tol`` (sample errors push |u| off the unit circle,
    so the strict per-triplet epsilon would flip on perturbation
    artifacts); otherwise the positive-phase convention decides.  Returns
    ``(root, ambiguous)`` where ``ambiguous`` marks the band-edge tie that
    a strict orientation would refuse.
    """
    u_big, u_small = unit_product_roots(q)
    if abs(abs(u_big) - 1.0) > thresholds.orientation_mag_tol:
        return u_big, False
    phase = cmath.phase(u_big)
    folded = abs(phase)
    if folded <= thresholds.tie_eps or folded >= math.pi - thresholds.tie_eps:
        return u_big, True
    return (u_big if 0.0 < phase <= math.pi else u_small), False


def _pi_distance(beta_p: float) -> float:
    if math.isnan(beta_p):
        return math.inf
    return abs(beta_p - math.pi * round(beta_p / math.pi))


# ---------------------------------------------------------------------------
# per-trace helpers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TripletEstimate:
    """Per-sampling-point extraction detail."""

    index: int
    z: float
    estimate: PropagationEstimate


def _trace_triplet_data(
    trace: FieldTrace,
    margin_cells: float,
    stride_override: Optional[int],
):
    """Indexed interior triplets, fourth samples and the dead-sample floor."""
    if stride_override is None:
        stride = trace.period_stride()
        period = trace.structure_period_p
    else:
        stride = int(stride_override)
        if stride < 1:
            raise ValueError("stride_override must be >= 1")
        period = stride * trace.dz
    values = trace.values
    margin = margin_cells * period
    z_lo = trace.z_start + margin - 1e-9 * trace.dz
    z_hi = trace.z_end - margin + 1e-9 * trace.dz
    rows: List[Tuple[int, SampleTriplet, Optional[complex]]] = []
    for n in range(stride, trace.count - stride):
        z_n = trace.z_start + n * trace.dz
        if z_n < z_lo or z_n > z_hi:
            continue
        try:
            triplet = SampleTriplet(
                complex(values[n - stride]),
                complex(values[n]),
                complex(values[n + stride]),
                period,
            )
        except DegenerateTripletError:
            continue
        fourth = complex(values[n + 2 * stride]) if n + 2 * stride < trace.count else None
        rows.append((n, triplet, fourth))
    peak = float(max(abs(complex(v)) for v in values))
    return period, rows, peak


def extract_trace_point(
    trace: FieldTrace,
    thresholds: ExtractionThresholds = DEFAULT_THRESHOLDS,
    margin_cells: float = 0.5,
    reference: Optional[complex] = None,
    stride_override: Optional[int] = None,
) -> DispersionPoint:
    """Aggregate every interior triplet of one trace into a sweep point.

    ``margin_cells`` periods are skipped at both trace ends to stay clear
    of source and termination contamination.
    """
    period, rows, peak = _trace_triplet_data(trace, margin_cells, stride_override)
    if not rows:
        raise NoValidTripletsError(
            "interior window keeps no triplet; lower margin_cells or extend the trace"
        )
    return aggregate_frequency(
        [row[1] for row in rows],
        period,
        trace.frequency,
        reference=reference,
        fourth_samples=[row[2] for row in rows],
        thresholds=thresholds,
        abs_floor=thresholds.abs_floor_rel * peak,
    )


def triplet_estimates(
    trace: FieldTrace,
    thresholds: ExtractionThresholds = DEFAULT_THRESHOLDS,
    margin_cells: float = 0.0,
    reference: Optional[complex] = None,
    stride_override: Optional[int] = None,
) -> List[TripletEstimate]:
    """Per-point estimates along a trace, with residuals where available.

    Shares one orientation across all points, like
    :func:`aggregate_frequency`, but keeps every sampling point separate;
    useful for position-dependence studies and multimode screening.
    """
    period, rows, peak = _trace_triplet_data(trace, margin_cells, stride_override)
    abs_floor = thresholds.abs_floor_rel * peak

    solved: List[Tuple[int, SampleTriplet, complex, complex, Optional[complex]]] = []
    for n, triplet, fourth in rows:
        try:
            u_big, u_small = raw_root_pair(
                triplet, node_threshold=thresholds.node_threshold, abs_floor=abs_floor
            )
        except (CenterNodeError, DegenerateTripletError):
            continue
        solved.append((n, triplet, u_big, u_small, fourth))
    if not solved:
        raise NoValidTripletsError("no usable triplet in the requested window")

    shared = reference
    if shared is None:
        for _, _, u_big, u_small, _ in solved:
            try:
                shared = orient_roots(u_big, u_small, tie_eps=thresholds.tie_eps).u_forward
                break
            except AmbiguousOrientationError:
                continue
        if shared is None:
            shared = solved[0][2]

    out: List[TripletEstimate] = []
    for n, triplet, u_big, u_small, fourth in solved:
        pair = orient_roots(u_big, u_small, reference=shared)
        beta = cmath.phase(pair.u_forward) / triplet.period_p
        alpha = math.log(abs(pair.u_forward)) / triplet.period_p
        residual = None
        if fourth is not None:
            try:
                residual = multimode_residual(
                    triplet.e_minus, triplet.e_center, triplet.e_plus, fourth, pair
                )
            except SingularAmplitudeSystemError:
                residual = None
        out.append(
            TripletEstimate(
                index=n,
                z=trace.z_start + n * trace.dz,
                estimate=PropagationEstimate(
                    beta=beta,
                    alpha=alpha,
                    u_pair=pair,
                    condition=triplet.condition,
                    residual=residual,
                ),
            )
        )
    return out


# ---------------------------------------------------------------------------
# branch tracking across frequency
# ---------------------------------------------------------------------------

class _BranchTracker:
    """Keeps root orientation and phase branch continuous along a sweep.

    After the first point the forward root is whichever candidate keeps the
    complex propagation constant (unwrapped beta together with alpha)
    closest to the previous one; that stays stable under sample noise,
    where the raw magnitude rule would flip on perturbation artifacts.  At
    a lossless band edge the two continuations are exactly symmetric
    (beta*p leaves a pi multiple either way) and continuity alone cannot
    decide, so the tracker keeps the trend the curve had before the edge
    and falls back to passivity (alpha >= 0), which is what mode tracking
    by excitation does.  The first point uses the decay rule when the
    magnitudes clearly split, else the positive-phase convention or a
    caller-supplied anchor.
    """

    def __init__(self, period_p: float, anchor_beta: Optional[float] = None,
                 tie_eps: float = 1e-9, tie_frac: float = 0.25,
                 first_mag_tol: float = 0.01):
        self.period_p = period_p
        self.anchor_beta = anchor_beta
        self.tie_eps = tie_eps
        self.tie_frac = tie_frac
        self.first_mag_tol = first_mag_tol
        self.beta_prev: Optional[float] = None
        self.alpha_prev = 0.0
        self.trend = 1.0

    def choose(self, u_big: complex, u_small: complex) -> Tuple[complex, frozenset]:
        p = self.period_p
        if self.beta_prev is None:
            if self.anchor_beta is not None:
                pick = min((u_big, u_small), key=self._anchor_distance)
                return pick, frozenset()
            if abs(abs(u_big) - 1.0) > self.first_mag_tol:
                return u_big, frozenset()
            phase = cmath.phase(u_big)
            folded = abs(phase)
            flags = set()
            if folded <= self.tie_eps or folded >= math.pi - self.tie_eps:
                flags |= {FLAG_BAND_EDGE, FLAG_ORIENTATION_AMBIGUOUS}
            pick = u_big if 0.0 < phase <= math.pi else u_small
            return pick, frozenset(flags)
        candidates = []
        for root in (u_big, u_small):
            phase = cmath.phase(root)
            m = round((self.beta_prev * p - phase) / TAU)
            beta = (phase + TAU * m) / p
            alpha = math.log(abs(root)) / p
            dist = math.hypot(beta - self.beta_prev, alpha - self.alpha_prev)
            candidates.append((dist, beta, alpha, root))
        (d1, b1, a1, r1), (d2, b2, a2, r2) = candidates
        if abs(d1 - d2) > self.tie_frac * max(d1, d2, 1e-300):
            return (r1, frozenset()) if d1 < d2 else (r2, frozenset())
        # near-symmetric continuation: a band edge
        flags = frozenset({FLAG_BAND_EDGE})
        sign1 = math.copysign(1.0, b1 - self.beta_prev) if b1 != self.beta_prev else 0.0
        sign2 = math.copysign(1.0, b2 - self.beta_prev) if b2 != self.beta_prev else 0.0
        if sign1 != sign2:
            # beta leaves the pinned value either way: keep the trend
            if sign1 == self.trend:
                return r1, flags
            if sign2 == self.trend:
                return r2, flags
        if max(abs(a1), abs(a2)) > 0.1 * max(d1, d2):
            # alphas split decisively (stopband entry): prefer passive decay
            return (r1, flags) if a1 >= a2 else (r2, flags)
        return (r1, flags) if d1 <= d2 else (r2, flags)

    def _anchor_distance(self, root: complex) -> float:
        phase = cmath.phase(root)
        m = round((self.anchor_beta * self.period_p - phase) / TAU)
        return abs((phase + TAU * m) / self.period_p - self.anchor_beta)

    def advance(self, beta_principal: float, alpha: float) -> float:
        p = self.period_p
        if self.beta_prev is None:
            if self.anchor_beta is None:
                beta = beta_principal
            else:
                m = round((self.anchor_beta - beta_principal) * p / TAU)
                beta = beta_principal + TAU * m / p
        else:
            m = round((self.beta_prev - beta_principal) * p / TAU)
            beta = beta_principal + TAU * m / p
            delta = beta - self.beta_prev
            if abs(delta) > 1e-6 * math.pi / p:
                self.trend = math.copysign(1.0, delta)
        self.beta_prev = beta
        self.alpha_prev = alpha
        return beta


# ---------------------------------------------------------------------------
# sweep drivers
# ---------------------------------------------------------------------------

def extract_curve(
    traces: Iterable[FieldTrace],
    thresholds: ExtractionThresholds = DEFAULT_THRESHOLDS,
    margin_cells: float = 0.5,
    anchor_beta: Optional[float] = None,
    stride_override: Optional[int] = None,
) -> DispersionCurve:
    """Run the full extraction over traces spanning a frequency band.

    Traces sharing a frequency are pooled into one aggregation.  Root
    orientation is chained from point to point and the phase branch is
    unwrapped from the lowest frequency (offset 0 unless ``anchor_beta``
    pins it elsewhere).
    """
    by_freq: Dict[float, List[FieldTrace]] = {}
    for trace in traces:
        by_freq.setdefault(trace.frequency, []).append(trace)
    if not by_freq:
        raise ValueError("no traces supplied")
    freqs = sorted(by_freq)

    period = None
    points: List[DispersionPoint] = []
    tracker: Optional[_BranchTracker] = None
    for freq in freqs:
        bundle = by_freq[freq]
        triplets: List[SampleTriplet] = []
        fourths: List[Optional[complex]] = []
        floor = math.inf
        for trace in bundle:
            trace_period, rows, peak = _trace_triplet_data(
                trace, margin_cells, stride_override
            )
            if period is None:
                period = trace_period
            elif abs(trace_period - period) > 1e-12 * period:
                raise ValueError("traces disagree about the structure period")
            triplets.extend(row[1] for row in rows)
            fourths.extend(row[2] for row in rows)
            floor = min(floor, thresholds.abs_floor_rel * peak)
        if tracker is None:
            tracker = _BranchTracker(period, anchor_beta=anchor_beta,
                                     tie_eps=thresholds.tie_eps,
                                     first_mag_tol=thresholds.orientation_mag_tol)
        reference, extra_flags = _representative_reference(
            triplets, tracker, thresholds, floor
        )
        point = aggregate_frequency(
            triplets,
            period,
            freq,
            reference=reference,
            fourth_samples=fourths,
            thresholds=thresholds,
            abs_floor=floor,
        )
        if extra_flags:
            point = replace(point, flags=point.flags | extra_flags)
        tracker.advance(point.beta, point.alpha)
        points.append(point)

    if len(points) == 1:
        return DispersionCurve(
            points=tuple(points),
            period_p=period,
            branch_anchor=_anchor_text(points[0], 0),
        )
    return unwrap_curve(points, period, anchor_beta=anchor_beta)


def _representative_reference(
    triplets: Sequence[SampleTriplet],
    tracker: _BranchTracker,
    thresholds: ExtractionThresholds,
    abs_floor: float,
) -> Tuple[Optional[complex], frozenset]:
    """Forward root for this frequency picked by the branch tracker.

    The root pair comes from the best-conditioned triplet available, the
    one least sensitive to sample errors.
    """
    best = None
    best_condition = -1.0
    for triplet in triplets:
        if triplet.condition <= best_condition:
            continue
        try:
            pair = raw_root_pair(
                triplet, node_threshold=thresholds.node_threshold, abs_floor=abs_floor
            )
        except (CenterNodeError, DegenerateTripletError):
            continue
        best = pair
        best_condition = triplet.condition
    if best is None:
        return None, frozenset()
    return tracker.choose(*best)


def te10_curve(
    spec: WaveguideSpec,
    frequencies: Sequence[float],
    period_p: float = math.nan,
) -> DispersionCurve:
    """Closed-form dispersion curve of a single uniform mode.

    ``period_p`` only feeds the beta*p column (useful when the curve will
    be compared against a periodic extraction); the closed form itself
    needs no period and no unwrapping.
    """
    points = []
    for freq in sorted(frequencies):
        kz = te10_kz(freq, spec)
        beta = kz.real
        alpha = -kz.imag
        points.append(
            DispersionPoint(
                frequency=freq,
                beta=beta,
                alpha=alpha,
                beta_p=beta * period_p,
                n_samples=1,
                sigma_beta=0.0,
                sigma_alpha=0.0,
                mean_condition=math.nan,
                max_residual=math.nan,
                flags=frozenset(),
            )
        )
    return DispersionCurve(
        points=tuple(points),
        period_p=period_p,
        branch_anchor="closed-form mode dispersion",
    )


def bloch_curve(
    cell: UnitCellSpec,
    frequencies: Sequence[float],
    anchor_beta: Optional[float] = None,
    thresholds: ExtractionThresholds = DEFAULT_THRESHOLDS,
) -> DispersionCurve:
    """Bloch eigenvalue sweep of a unit cell, branch-tracked like a trace.

    Uses the same orientation and unwrapping policy as
    :func:`extract_curve`, so the two outputs are directly comparable.
    """
    period = cell.period_p
    tracker = _BranchTracker(period, anchor_beta=anchor_beta,
                             tie_eps=thresholds.tie_eps,
                             first_mag_tol=thresholds.orientation_mag_tol)
    points = []
    for freq in sorted(frequencies):
        matrix = cell_abcd(cell, freq)
        u_big, u_small = unit_product_roots(matrix.trace)
        forward, extra_flags = tracker.choose(u_big, u_small)
        log_f = cmath.log(forward)
        beta = log_f.imag / period
        alpha = log_f.real / period
        tracker.advance(beta, alpha)
        beta_p = beta * period
        flags = set(extra_flags)
        if _pi_distance(beta_p) <= thresholds.band_edge_tol:
            flags.add(FLAG_BAND_EDGE)
        points.append(
            DispersionPoint(
                frequency=freq,
                beta=beta,
                alpha=alpha,
                beta_p=beta_p,
                n_samples=1,
                sigma_beta=0.0,
                sigma_alpha=0.0,
                mean_condition=math.nan,
                max_residual=math.nan,
                flags=frozenset(flags),
            )
        )
    if len(points) == 1:
        return DispersionCurve(
            points=tuple(points), period_p=period,
            branch_anchor=_anchor_text(points[0], 0),
        )
    return unwrap_curve(points, period, anchor_beta=anchor_beta)


# ---------------------------------------------------------------------------
# unwrapping, annotation, shifting, comparison
# ---------------------------------------------------------------------------

def unwrap_curve(
    points: Sequence[DispersionPoint],
    period_p: float,
    anchor_beta: Optional[float] = None,
    jump_tol: Optional[float] = None,
) -> DispersionCurve:
    """Resolve integer phase branches by continuity along frequency.

    Each point's beta becomes ``principal + 2*pi*m/p`` with the integer m
    minimizing the distance to the previous unwrapped value.  The lowest
    frequency anchors the branch at m = 0, or at the branch closest to a
    caller-supplied ``anchor_beta``.  When the best continuation still
    jumps by more than ``jump_tol`` (default pi/(2p), meaning the sweep is
    too coarse) a :class:`BranchJumpWarning` is recorded on the curve and
    emitted, never raised.
    """
    pts = sorted(points, key=lambda pt: pt.frequency)
    if len(pts) < 2:
        raise ValueError("unwrapping needs at least 2 frequency points")
    if not period_p > 0.0:
        raise ValueError("unwrapping needs a positive period")
    if jump_tol is None:
        jump_tol = math.pi / (2.0 * period_p)

    recorded: List[str] = []
    out: List[DispersionPoint] = []
    if anchor_beta is None:
        m0 = 0
    else:
        m0 = round((anchor_beta - pts[0].beta) * period_p / TAU)
    beta_prev = pts[0].beta + TAU * m0 / period_p
    out.append(replace(pts[0], beta=beta_prev, beta_p=beta_prev * period_p))
    for pt in pts[1:]:
        m = round((beta_prev - pt.beta) * period_p / TAU)
        beta = pt.beta + TAU * m / period_p
        if abs(beta - beta_prev) > jump_tol:
            message = (
                f"branch jump of {abs(beta - beta_prev) * period_p:.4g} rad/cell "
                f"between {out[-1].frequency:g} Hz and {pt.frequency:g} Hz; "
                "the sweep may be too coarse"
            )
            recorded.append(message)
            _warnings.warn(BranchJumpWarning(message), stacklevel=2)
        out.append(replace(pt, beta=beta, beta_p=beta * period_p))
        beta_prev = beta
    return DispersionCurve(
        points=tuple(out),
        period_p=period_p,
        branch_anchor=_anchor_text(out[0], m0),
        warnings=tuple(recorded),
    )


def _anchor_text(point: DispersionPoint, m0: int) -> str:
    return (
        f"anchored at {point.frequency:g} Hz with branch offset {m0} "
        f"(beta = {point.beta:.9g} rad/m)"
    )


def detect_stopbands(
    curve: DispersionCurve,
    lossless: bool = True,
    edge_tol: float = 1e-3,
    alpha_floor: float = 1e-6,
) -> DispersionCurve:
    """Annotate the stopbands of an unwrapped curve.

    Lossless mode finds maximal runs where beta*p sits on an integer
    multiple of pi within ``edge_tol`` while alpha exceeds ``alpha_floor``
    (the defining signature of a lossless gap).  Lossy mode looks for
    local alpha maxima whose beta*p passes near a pi multiple and labels
    the surrounding rise-and-fall as a soft ``"transition"`` band, since
    loss removes the hard pinning.  An empty annotation list is a valid
    result.
    """
    pts = curve.points
    annotations: List[StopbandAnnotation] = []
    if lossless:
        run_start = None
        run_multiple = None
        last_index = None
        for i, pt in enumerate(pts):
            multiple = round(pt.beta_p / math.pi) if not math.isnan(pt.beta_p) else None
            inside = (
                multiple is not None
                and _pi_distance(pt.beta_p) <= edge_tol
                and pt.alpha > alpha_floor
            )
            if inside and run_start is not None and multiple == run_multiple:
                last_index = i
            elif inside:
                if run_start is not None:
                    annotations.append(
                        StopbandAnnotation(
                            pts[run_start].frequency, pts[last_index].frequency,
                            run_multiple, "lossless",
                        )
                    )
                run_start = i
                last_index = i
                run_multiple = multiple
            elif run_start is not None:
                annotations.append(
                    StopbandAnnotation(
                        pts[run_start].frequency, pts[last_index].frequency,
                        run_multiple, "lossless",
                    )
                )
                run_start = None
                run_multiple = None
        if run_start is not None:
            annotations.append(
                StopbandAnnotation(
                    pts[run_start].frequency, pts[last_index].frequency,
                    run_multiple, "lossless",
                )
            )
    else:
        alphas = [pt.alpha for pt in pts]
        seen = set()
        for i in range(1, len(pts) - 1):
            if alphas[i] <= alpha_floor:
                continue
            if alphas[i] < alphas[i - 1] or alphas[i] < alphas[i + 1]:
                continue
            if alphas[i] == alphas[i - 1]:
                continue  # plateau: only its first sample counts
            beta_p = pts[i].beta_p
            if math.isnan(beta_p) or _pi_distance(beta_p) > math.pi / 4.0:
                continue
            left = i
            while left > 0 and alphas[left - 1] <= alphas[left]:
                left -= 1
            right = i
            while right < len(pts) - 1 and alphas[right + 1] <= alphas[right]:
                right += 1
            key = (left, right)
            if key in seen:
                continue
            seen.add(key)
            annotations.append(
                StopbandAnnotation(
                    pts[left].frequency, pts[right].frequency,
                    round(beta_p / math.pi), "transition",
                )
            )
    return replace(curve, stopbands=tuple(annotations))


def shift_space_harmonic(curve: DispersionCurve, n: int) -> DispersionCurve:
    """Move the curve to space harmonic ``n`` away from its current one.

    Beta shifts by ``2*pi*n/p`` pointwise, alpha is untouched, and the
    harmonic index is recorded.  Shifts compose exactly: shifting by n and
    then -n restores the original points bit for bit because harmonic-0
    data is kept alongside.
    """
    if n == 0:
        return curve
    if not curve.period_p > 0.0:
        raise ValueError("harmonic shifts need a positive period")
    base = (
        curve.base_points
        if curve.harmonic_index != 0 and curve.base_points is not None
        else curve.points
    )
    total = curve.harmonic_index + n
    if total == 0:
        return replace(curve, points=base, harmonic_index=0, base_points=None)
    offset = TAU * total / curve.period_p
    shifted = tuple(
        replace(pt, beta=pt.beta + offset, beta_p=pt.beta_p + TAU * total)
        for pt in base
    )
    return replace(curve, points=shifted, harmonic_index=total, base_points=base)


@dataclass(frozen=True)
class CurveComparison:
    """Error metrics between two curves over their frequency overlap."""

    n_compared: int
    n_excluded: int
    f_low: float
    f_high: float
    max_beta_rel: float
    rms_beta_rel: float
    max_alpha_abs: float
    rms_alpha_abs: float

    def to_dict(self) -> dict:
        return {
            "n_compared": self.n_compared,
            "n_excluded": self.n_excluded,
            "f_low_hz": _json_float(self.f_low),
            "f_high_hz": _json_float(self.f_high),
            "max_beta_rel": _json_float(self.max_beta_rel),
            "rms_beta_rel": _json_float(self.rms_beta_rel),
            "max_alpha_abs_np_per_m": _json_float(self.max_alpha_abs),
            "rms_alpha_abs_np_per_m": _json_float(self.rms_alpha_abs),
        }


def compare_curves(
    a: DispersionCurve,
    b: DispersionCurve,
    exclude_flags: frozenset = frozenset({FLAG_BAND_EDGE}),
) -> CurveComparison:
    """Beta/alpha error report of curve ``a`` against reference ``b``.

    ``b`` is interpolated linearly in frequency onto ``a``'s points inside
    the overlap.  Beta errors are relative to the reference's |k_z|
    (``hypot(beta, alpha)``), which stays meaningful through cutoff where
    beta alone passes through zero; alpha errors are absolute.  Points
    carrying any of ``exclude_flags`` on either side are skipped, band
    edges by default, where eigen-solvers and extraction both degrade.
    """
    f_low = max(a.points[0].frequency, b.points[0].frequency)
    f_high = min(a.points[-1].frequency, b.points[-1].frequency)
    if f_low > f_high:
        raise ValueError("curves do not overlap in frequency")
    fb = [pt.frequency for pt in b.points]
    beta_errors: List[float] = []
    alpha_errors: List[float] = []
    excluded = 0
    for pt in a.points:
        if not f_low <= pt.frequency <= f_high:
            continue
        if pt.flags & exclude_flags:
            excluded += 1
            continue
        j = bisect_left(fb, pt.frequency)
        if j < len(fb) and fb[j] == pt.frequency:
            lo = hi = j
            weight = 0.0
        else:
            lo, hi = j - 1, j
            weight = (pt.frequency - fb[lo]) / (fb[hi] - fb[lo])
        if (b.points[lo].flags | b.points[hi].flags) & exclude_flags:
            excluded += 1
            continue
        beta_ref = (1.0 - weight) * b.points[lo].beta + weight * b.points[hi].beta
        alpha_ref = (1.0 - weight) * b.points[lo].alpha + weight * b.points[hi].alpha
        scale = max(math.hypot(beta_ref, alpha_ref), 1e-300)
        beta_errors.append(abs(pt.beta - beta_ref) / scale)
        alpha_errors.append(abs(pt.alpha - alpha_ref))
    if beta_errors:
        max_beta = max(beta_errors)
        rms_beta = math.sqrt(math.fsum(e * e for e in beta_errors) / len(beta_errors))
        max_alpha = max(alpha_errors)
        rms_alpha = math.sqrt(math.fsum(e * e for e in alpha_errors) / len(alpha_errors))
    else:
        max_beta = rms_beta = max_alpha = rms_alpha = math.nan
    return CurveComparison(
        n_compared=len(beta_errors),
        n_excluded=excluded,
        f_low=f_low,
        f_high=f_high,
        max_beta_rel=max_beta,
        rms_beta_rel=rms_beta,
        max_alpha_abs=max_alpha,
        rms_alpha_abs=rms_alpha,
    )


# ---------------------------------------------------------------------------
# curve serialization
# ---------------------------------------------------------------------------

def _fmt(value: float) -> str:
    return format(value, ".17g")


def _json_float(value) -> Optional[float]:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return None
    return float(value)


def write_curve_csv(curve: DispersionCurve, destination) -> None:
    """Plot-ready CSV: three comment lines of metadata, then the spec columns."""
    lines = [
        f"# period_m={_fmt(curve.period_p)}",
        f"# branch_anchor={curve.branch_anchor}",
        f"# harmonic_index={curve.harmonic_index}",
        CURVE_COLUMN_LINE,
    ]
    for pt in curve.points:
        flags = "|".join(sorted(pt.flags))
        lines.append(
            f"{_fmt(pt.frequency)},{_fmt(pt.beta)},{_fmt(pt.alpha)},"
            f"{_fmt(pt.beta_p)},{_fmt(pt.sigma_beta)},{_fmt(pt.sigma_alpha)},{flags}"
        )
    text = "\n".join(lines) + "\n"
    if isinstance(destination, (str, os.PathLike)):
        with open(destination, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
    else:
        destination.write(text)


def read_curve_csv(source) -> DispersionCurve:
    """Read a curve CSV produced by :func:`write_curve_csv`."""
    if isinstance(source, (str, os.PathLike)):
        with open(source, "r", encoding="utf-8") as handle:
            lines = handle.read().splitlines()
    else:
        lines = source.read().splitlines()
    period = math.nan
    anchor = ""
    harmonic = 0
    points: List[DispersionPoint] = []
    column_seen = False
    for number, raw in enumerate(lines, start=1):
        text = raw.strip()
        if not text:
            continue
        if text.startswith("#"):
            key, sep, value = text.lstrip("#").strip().partition("=")
            if sep:
                key = key.strip()
                if key == "period_m":
                    period = float(value)
                elif key == "branch_anchor":
                    anchor = value
                elif key == "harmonic_index":
                    harmonic = int(value)
            continue
        if not column_seen:
            if text != CURVE_COLUMN_LINE:
                raise ParseError(f"expected column line {CURVE_COLUMN_LINE!r}", number)
            column_seen = True
            continue
        parts = text.split(",")
        if len(parts) != 7:
            raise ParseError(f"expected 7 fields, got {len(parts)}", number)
        try:
            freq, beta, alpha, beta_p, sigma_b, sigma_a = (float(x) for x in parts[:6])
        except ValueError as exc:
            raise ParseError(str(exc), number) from exc
        flags = frozenset(f for f in parts[6].split("|") if f)
        points.append(
            DispersionPoint(
                frequency=freq,
                beta=beta,
                alpha=alpha,
                beta_p=beta_p,
                n_samples=1,
                sigma_beta=sigma_b,
                sigma_alpha=sigma_a,
                mean_condition=math.nan,
                max_residual=math.nan,
                flags=flags,
            )
        )
    if not column_seen:
        raise HeaderError("no curve column line found")
    if not points:
        raise ParseError("curve file has no data rows")
    return DispersionCurve(
        points=tuple(points),
        period_p=period,
        branch_anchor=anchor,
        harmonic_index=harmonic,
    )


def curve_report(curve: DispersionCurve) -> dict:
    """Machine-readable sweep summary for the JSON side channel."""
    return {
        "n_points": len(curve.points),
        "frequency_range_hz": [curve.points[0].frequency, curve.points[-1].frequency],
        "period_m": _json_float(curve.period_p),
        "branch_anchor": curve.branch_anchor,
        "harmonic_index": curve.harmonic_index,
        "stopbands": [
            {
                "f_low_hz": band.f_low,
                "f_high_hz": band.f_high,
                "pi_multiple": band.pi_multiple,
                "kind": band.kind,
            }
            for band in curve.stopbands
        ],
        "warnings": list(curve.warnings),
    }
