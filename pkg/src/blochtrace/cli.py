"""Command line front end.

Subcommands: ``synth`` (generate trace files), ``extract`` (traces to a
dispersion curve), ``oracle`` (reference curves), ``compare`` (diff two
curve CSVs).  Lengths accept an mm/cm/um suffix and frequencies accept
kHz/MHz/GHz/THz; files always carry SI units.  Exit codes: 0 success,
1 comparison tolerance exceeded, 2 input/config error, 3 numerical error.
"""

import argparse
import glob
import json
import math
import os
import re
import sys
from typing import List, Optional

from .errors import (
    AmbiguousOrientationError,
    BlochTraceError,
    CenterNodeError,
    DegenerateCellError,
    DegenerateTripletError,
    NoValidTripletsError,
    ResonanceOverflowError,
    SingularAmplitudeSystemError,
    TraceIOError,
    ZeroImpedanceError,
)
from .oracles import LayerSpec, ShuntElementSpec, UnitCellSpec, WaveguideSpec, te10_kz
from .synth import TerminationSpec, add_noise, synth_periodic_trace, synth_uniform_trace
from .sweep import (
    DEFAULT_THRESHOLDS,
    ExtractionThresholds,
    bloch_curve,
    compare_curves,
    curve_report,
    detect_stopbands,
    extract_curve,
    read_curve_csv,
    shift_space_harmonic,
    te10_curve,
    write_curve_csv,
)
from .traceio import import_columns, parse_mapping_file, read_trace, write_trace

EXIT_OK = 0
EXIT_TOLERANCE = 1
EXIT_INPUT = 2
EXIT_NUMERICAL = 3

_NUMERICAL_ERRORS = (
    CenterNodeError,
    DegenerateTripletError,
    AmbiguousOrientationError,
    SingularAmplitudeSystemError,
    ZeroImpedanceError,
    DegenerateCellError,
    ResonanceOverflowError,
    NoValidTripletsError,
)

_LENGTH_UNITS = {"": 1.0, "m": 1.0, "cm": 1e-2, "mm": 1e-3, "um": 1e-6}
_FREQ_UNITS = {"": 1.0, "hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9, "thz": 1e12}
_QUANTITY_RE = re.compile(r"^\s*([-+]?[0-9.]+(?:[eE][-+]?[0-9]+)?)\s*([a-zA-Z]*)\s*$")


def parse_length(text: str) -> float:
    """'8mm' -> 0.008; bare numbers are meters."""
    match = _QUANTITY_RE.match(text)
    if not match or match.group(2).lower() not in _LENGTH_UNITS:
        raise argparse.ArgumentTypeError(f"cannot parse length {text!r}")
    value = float(match.group(1)) * _LENGTH_UNITS[match.group(2).lower()]
    if not value > 0.0:
        raise argparse.ArgumentTypeError(f"length must be > 0, got {text!r}")
    return value


def parse_frequency(text: str) -> float:
    """'25GHz' -> 2.5e10; bare numbers are Hz."""
    match = _QUANTITY_RE.match(text)
    if not match or match.group(2).lower() not in _FREQ_UNITS:
        raise argparse.ArgumentTypeError(f"cannot parse frequency {text!r}")
    value = float(match.group(1)) * _FREQ_UNITS[match.group(2).lower()]
    if not value > 0.0:
        raise argparse.ArgumentTypeError(f"frequency must be > 0, got {text!r}")
    return value


def parse_complex(text: str) -> complex:
    try:
        return complex(text.replace(" ", ""))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"cannot parse complex value {text!r}") from exc


_MEDIUM_RE = re.compile(r"^eps([0-9.eE+-]+?)(?:tand([0-9.eE+-]+))?$")


def parse_cell(text: str, width_a: float) -> UnitCellSpec:
    """Cell DSL: comma-separated elements.

    ``vacuum:3mm`` | ``eps2.2:3mm`` | ``eps2.2tand0.005:3mm`` |
    ``shunt:0.5j`` (normalized shunt admittance, zero length).
    """
    elements: List = []
    for token in text.split(","):
        head, sep, tail = token.strip().partition(":")
        if not sep:
            raise argparse.ArgumentTypeError(f"cell element {token!r} lacks ':'")
        if head == "shunt":
            elements.append(ShuntElementSpec(parse_complex(tail)))
            continue
        if head == "vacuum":
            medium = WaveguideSpec.te10(width_a)
        else:
            match = _MEDIUM_RE.match(head)
            if not match:
                raise argparse.ArgumentTypeError(f"cannot parse medium {head!r}")
            eps = float(match.group(1))
            tand = float(match.group(2)) if match.group(2) else 0.0
            medium = WaveguideSpec.te10(width_a, eps, tand)
        elements.append(LayerSpec(parse_length(tail), medium))
    return UnitCellSpec(tuple(elements))


def parse_termination(text: str) -> TerminationSpec:
    if text in ("matched", "short", "open"):
        return TerminationSpec(text)
    head, sep, tail = text.partition("=")
    if head == "reflection" and sep:
        return TerminationSpec("reflection", parse_complex(tail))
    raise argparse.ArgumentTypeError(
        f"termination must be matched|short|open|reflection=<gamma>, got {text!r}"
    )


def _env_float(name: str, fallback: float) -> float:
    raw = os.environ.get(name)
    if raw is None:
        return fallback
    try:
        return float(raw)
    except ValueError as exc:
        raise ValueError(f"environment override {name}={raw!r} is not a number") from exc


def thresholds_from_env() -> ExtractionThresholds:
    """Defaults, overridable through BLOCHTRACE_* environment variables."""
    base = DEFAULT_THRESHOLDS
    return ExtractionThresholds(
        node_threshold=_env_float("BLOCHTRACE_NODE_THRESHOLD", base.node_threshold),
        abs_floor_rel=base.abs_floor_rel,
        low_condition=_env_float("BLOCHTRACE_LOW_CONDITION", base.low_condition),
        high_residual=_env_float("BLOCHTRACE_HIGH_RESIDUAL", base.high_residual),
        band_edge_tol=_env_float("BLOCHTRACE_BAND_EDGE_TOL", base.band_edge_tol),
        tie_eps=base.tie_eps,
    )


def _sweep_frequencies(args) -> List[float]:
    if args.f is not None:
        return [args.f]
    if args.f_start is None or args.f_stop is None:
        raise ValueError("give --f or --f-start/--f-stop")
    if args.f_start >= args.f_stop:
        raise ValueError("--f-start must be below --f-stop")
    n = args.n_freq
    if n < 2:
        raise ValueError("--n-freq must be >= 2")
    step = (args.f_stop - args.f_start) / (n - 1)
    return [args.f_start + i * step for i in range(n)]


def _add_sweep_args(parser) -> None:
    parser.add_argument("--f", type=parse_frequency, default=None,
                        help="single frequency (e.g. 25GHz)")
    parser.add_argument("--f-start", type=parse_frequency, default=None)
    parser.add_argument("--f-stop", type=parse_frequency, default=None)
    parser.add_argument("--n-freq", type=int, default=201,
                        help="sweep point count (default 201)")


def cmd_synth(args) -> int:
    frequencies = _sweep_frequencies(args)
    os.makedirs(args.out_dir, exist_ok=True)
    written = []
    for index, freq in enumerate(frequencies):
        if args.mode == "uniform":
            spec = WaveguideSpec.te10(args.a, args.eps_r, args.tan_delta)
            trace = synth_uniform_trace(
                te10_kz(freq, spec),
                args.forward,
                args.backward,
                z_start=0.0,
                dz=args.dz,
                count=args.count,
                period_p=args.p,
                frequency=freq,
                component_label=args.component,
            )
        else:
            cell = parse_cell(args.cell, args.a)
            if args.cells < 1:
                raise ValueError("--cells must be >= 1")
            trace = synth_periodic_trace(
                cell,
                args.cells,
                args.termination,
                args.source,
                freq,
                args.dz,
                end_contamination=args.end_contamination,
            )
        if args.noise_sigma > 0.0:
            trace = add_noise(trace, args.noise_sigma, args.seed + index)
        path = os.path.join(args.out_dir, f"trace_{index:04d}.csv")
        write_trace(trace, path)
        written.append(path)
    print(f"wrote {len(written)} trace file(s) to {args.out_dir}")
    return EXIT_OK


def cmd_extract(args) -> int:
    paths: List[str] = []
    for pattern in args.traces:
        expanded = sorted(glob.glob(pattern))
        paths.extend(expanded if expanded else [pattern])
    if not paths:
        raise ValueError("no input traces")
    if args.mapping:
        mapping, overrides = parse_mapping_file(args.mapping)
        traces = [import_columns(path, mapping, dict(overrides)) for path in paths]
    else:
        traces = [read_trace(path) for path in paths]
    thresholds = thresholds_from_env()
    curve = extract_curve(
        traces,
        thresholds=thresholds,
        margin_cells=args.margin_cells,
        anchor_beta=args.anchor_beta,
    )
    curve = detect_stopbands(
        curve,
        lossless=not args.lossy,
        edge_tol=args.edge_tol,
        alpha_floor=args.alpha_floor,
    )
    if args.harmonic:
        curve = shift_space_harmonic(curve, args.harmonic)
    write_curve_csv(curve, args.out_csv)
    if args.out_json:
        _write_json(args.out_json, curve_report(curve))
    for message in curve.warnings:
        print(f"warning: {message}", file=sys.stderr)
    print(f"extracted {len(curve.points)} point(s) -> {args.out_csv}")
    return EXIT_OK


def cmd_oracle(args) -> int:
    frequencies = _sweep_frequencies(args)
    if args.kind == "te10":
        spec = WaveguideSpec.te10(args.a, args.eps_r, args.tan_delta)
        curve = te10_curve(spec, frequencies, period_p=args.p if args.p else math.nan)
    else:
        cell = parse_cell(args.cell, args.a)
        curve = bloch_curve(cell, frequencies, anchor_beta=args.anchor_beta)
        curve = detect_stopbands(
            curve,
            lossless=not args.lossy,
            edge_tol=args.edge_tol,
            alpha_floor=args.alpha_floor,
        )
    write_curve_csv(curve, args.out_csv)
    if args.out_json:
        _write_json(args.out_json, curve_report(curve))
    print(f"evaluated {len(curve.points)} oracle point(s) -> {args.out_csv}")
    return EXIT_OK


def cmd_compare(args) -> int:
    test = read_curve_csv(args.test)
    reference = read_curve_csv(args.ref)
    comparison = compare_curves(test, reference)
    payload = comparison.to_dict()
    if args.out_json:
        _write_json(args.out_json, payload)
    print(json.dumps(payload, indent=2, sort_keys=True))
    failed = False
    if args.tol_beta is not None:
        failed |= not (comparison.max_beta_rel <= args.tol_beta)
    if args.tol_alpha is not None:
        failed |= not (comparison.max_alpha_abs <= args.tol_alpha)
    return EXIT_TOLERANCE if failed else EXIT_OK


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blochtrace",
        description="Complex propagation constants from three-point field samples.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", help="generate synthetic trace files")
    synth_sub = synth.add_subparsers(dest="mode", required=True)
    uniform = synth_sub.add_parser("uniform", help="uniform guide trace")
    periodic = synth_sub.add_parser("periodic", help="finite periodic cascade trace")
    for sp in (uniform, periodic):
        _add_sweep_args(sp)
        sp.add_argument("--a", type=parse_length, required=True, help="guide width")
        sp.add_argument("--dz", type=parse_length, required=True)
        sp.add_argument("--out-dir", required=True)
        sp.add_argument("--noise-sigma", type=float, default=0.0)
        sp.add_argument("--seed", type=int, default=0)
    uniform.add_argument("--eps-r", type=float, default=1.0)
    uniform.add_argument("--tan-delta", type=float, default=0.0)
    uniform.add_argument("--p", type=parse_length, required=True,
                         help="period used by the extraction")
    uniform.add_argument("--count", type=int, default=64)
    uniform.add_argument("--forward", type=parse_complex, default=1.0 + 0.0j)
    uniform.add_argument("--backward", type=parse_complex, default=0.0j)
    uniform.add_argument("--component", default="Ey")
    periodic.add_argument("--cell", required=True,
                          help="e.g. vacuum:3mm,eps2.2tand0.005:3mm")
    periodic.add_argument("--cells", type=int, required=True)
    periodic.add_argument("--termination", type=parse_termination,
                          default=TerminationSpec.matched())
    periodic.add_argument("--source", type=parse_complex, default=1.0 + 0.0j)
    periodic.add_argument("--end-contamination", type=float, default=0.0,
                          help="relative parasitic amplitude decaying from both ends")

    extract = sub.add_parser("extract", help="traces -> dispersion curve CSV/JSON")
    extract.add_argument("--traces", nargs="+", required=True,
                         help="trace files or globs, one frequency per file")
    extract.add_argument("--mapping", default=None,
                         help="key=value column mapping config for raw CSV imports")
    extract.add_argument("--out-csv", required=True)
    extract.add_argument("--out-json", default=None)
    extract.add_argument("--margin-cells", type=float, default=0.5)
    extract.add_argument("--harmonic", type=int, default=0,
                         help="shift the result to space harmonic n")
    extract.add_argument("--anchor-beta", type=float, default=None)
    extract.add_argument("--lossy", action="store_true",
                         help="annotate stopbands as lossy transitions")
    extract.add_argument("--edge-tol", type=float,
                         default=_env_float("BLOCHTRACE_EDGE_TOL", 1e-3))
    extract.add_argument("--alpha-floor", type=float,
                         default=_env_float("BLOCHTRACE_ALPHA_FLOOR", 1e-6))

    oracle = sub.add_parser("oracle", help="reference dispersion curves")
    oracle_sub = oracle.add_subparsers(dest="kind", required=True)
    te10 = oracle_sub.add_parser("te10", help="closed-form uniform guide")
    bloch = oracle_sub.add_parser("bloch", help="unit-cell eigenvalue sweep")
    for sp in (te10, bloch):
        _add_sweep_args(sp)
        sp.add_argument("--a", type=parse_length, required=True)
        sp.add_argument("--out-csv", required=True)
        sp.add_argument("--out-json", default=None)
    te10.add_argument("--eps-r", type=float, default=1.0)
    te10.add_argument("--tan-delta", type=float, default=0.0)
    te10.add_argument("--p", type=parse_length, default=None,
                      help="optional period for the beta_p column")
    bloch.add_argument("--cell", required=True)
    bloch.add_argument("--anchor-beta", type=float, default=None)
    bloch.add_argument("--lossy", action="store_true")
    bloch.add_argument("--edge-tol", type=float,
                       default=_env_float("BLOCHTRACE_EDGE_TOL", 1e-3))
    bloch.add_argument("--alpha-floor", type=float,
                       default=_env_float("BLOCHTRACE_ALPHA_FLOOR", 1e-6))

    compare = sub.add_parser("compare", help="diff two curve CSVs")
    compare.add_argument("--test", required=True, help="curve under test")
    compare.add_argument("--ref", required=True, help="reference curve")
    compare.add_argument("--tol-beta", type=float, default=None,
                         help="max allowed relative beta error")
    compare.add_argument("--tol-alpha", type=float, default=None,
                         help="max allowed absolute alpha error, Np/m")
    compare.add_argument("--out-json", default=None)
    return parser


_COMMANDS = {
    "synth": cmd_synth,
    "extract": cmd_extract,
    "oracle": cmd_oracle,
    "compare": cmd_compare,
}


def main(argv: Optional[List[str]] = None) -> int:
    try:
        parser = build_parser()
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except _NUMERICAL_ERRORS as exc:
        print(f"blochtrace: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (TraceIOError, OSError, ValueError, BlochTraceError,
            argparse.ArgumentTypeError) as exc:
        print(f"blochtrace: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
