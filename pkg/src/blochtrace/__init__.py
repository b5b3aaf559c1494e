"""Complex propagation constants of uniform and 1-D periodic transmission
structures, extracted from three period-spaced complex field samples and
validated against built-in analytic and transfer-matrix dispersion
references."""

from .errors import (
    AmbiguousOrientationError,
    BlochTraceError,
    BranchJumpWarning,
    CenterNodeError,
    DegenerateCellError,
    DegenerateTripletError,
    GridError,
    HeaderError,
    MappingError,
    NoValidTripletsError,
    ParseError,
    PeriodGridMismatchError,
    ResonanceOverflowError,
    SingularAmplitudeSystemError,
    TraceIOError,
    TraceValidationWarning,
    ZeroImpedanceError,
)
from .extraction import (
    PropagationEstimate,
    RootPair,
    SampleTriplet,
    estimate_propagation,
    multimode_residual,
    orient_roots,
    raw_root_pair,
    solve_u_pair,
    unit_product_roots,
)
from .oracles import (
    ABCDMatrix,
    C0,
    LayerSpec,
    MU0,
    ShuntElementSpec,
    UnitCellSpec,
    WaveguideSpec,
    bloch_kz,
    cell_abcd,
    element_abcd,
    te10_kz,
    wave_impedance,
)
from .synth import TerminationSpec, add_noise, synth_periodic_trace, synth_uniform_trace
from .sweep import (
    CurveComparison,
    DEFAULT_THRESHOLDS,
    DispersionCurve,
    DispersionPoint,
    ExtractionThresholds,
    StopbandAnnotation,
    TripletEstimate,
    aggregate_frequency,
    bloch_curve,
    compare_curves,
    curve_report,
    detect_stopbands,
    extract_curve,
    extract_trace_point,
    read_curve_csv,
    shift_space_harmonic,
    te10_curve,
    triplet_estimates,
    unwrap_curve,
    write_curve_csv,
)
from .trace import FieldTrace
from .traceio import (
    ColumnMapping,
    TraceFileHeader,
    import_columns,
    parse_mapping_file,
    read_trace,
    triplets_from_trace,
    write_trace,
)

__version__ = "0.1.0"
