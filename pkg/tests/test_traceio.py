import io
import math
import warnings

import numpy as np
import pytest

import blochtrace as bt

from conftest import DZ, PERIOD


@pytest.fixture
def sample_trace(vacuum_guide):
    kz = bt.te10_kz(25e9, vacuum_guide)
    return bt.synth_uniform_trace(
        kz, 1.0, 0.2 - 0.1j, z_start=0.001, dz=DZ, count=40,
        period_p=PERIOD, frequency=25e9, component_label="Ey",
        transverse_position=(0.0, 0.001),
    )


def roundtrip(trace):
    buffer = io.StringIO()
    bt.write_trace(trace, buffer)
    buffer.seek(0)
    return bt.read_trace(buffer)


class TestCanonicalFormat:
    def test_roundtrip_identity(self, sample_trace):
        back = roundtrip(sample_trace)
        assert back.frequency == sample_trace.frequency
        assert back.structure_period_p == sample_trace.structure_period_p
        assert back.dz == sample_trace.dz
        assert back.z_start == sample_trace.z_start
        assert back.component_label == sample_trace.component_label
        assert back.transverse_position == sample_trace.transverse_position
        assert np.array_equal(back.values, sample_trace.values)
        # the decimal representation is exact, so 1e-15 relative holds trivially
        assert np.max(np.abs(back.values - sample_trace.values)) <= 1e-15 * np.max(
            np.abs(sample_trace.values)
        )

    def test_roundtrip_large_trace(self, vacuum_guide):
        kz = bt.te10_kz(25e9, vacuum_guide)
        trace = bt.synth_uniform_trace(
            kz, 1.3 - 0.4j, 0.05j, z_start=0.0, dz=DZ, count=1000,
            period_p=PERIOD, frequency=25e9,
        )
        assert np.array_equal(roundtrip(trace).values, trace.values)

    def test_header_count_matches_rows(self, sample_trace):
        buffer = io.StringIO()
        bt.write_trace(sample_trace, buffer)
        text = buffer.getvalue()
        assert f"# count={sample_trace.count}" in text
        data_rows = [
            line for line in text.splitlines()
            if line and not line.startswith("#") and line != "z_m,re,im"
        ]
        assert len(data_rows) == sample_trace.count

    def test_write_requires_three_samples(self, sample_trace):
        import dataclasses
        short = dataclasses.replace(sample_trace, values=sample_trace.values[:2])
        with pytest.raises(ValueError):
            bt.write_trace(short, io.StringIO())

    def test_misaligned_period_warns_and_records(self, vacuum_guide):
        with pytest.warns(bt.TraceValidationWarning):
            trace = bt.FieldTrace(
                frequency=25e9,
                values=np.ones(8, dtype=complex),
                z_start=0.0,
                dz=DZ,
                structure_period_p=1.5 * DZ,
            )
        buffer = io.StringIO()
        bt.write_trace(trace, buffer)
        assert "# warning=" in buffer.getvalue()
        buffer.seek(0)
        with pytest.warns(bt.TraceValidationWarning):
            back = bt.read_trace(buffer)
        with pytest.raises(bt.PeriodGridMismatchError):
            bt.triplets_from_trace(back)


class TestReadErrors:
    def _text(self, sample_trace):
        buffer = io.StringIO()
        bt.write_trace(sample_trace, buffer)
        return buffer.getvalue()

    def test_shuffled_z_row(self, sample_trace):
        lines = self._text(sample_trace).splitlines()
        lines[12], lines[13] = lines[13], lines[12]   # swap two data rows
        with pytest.raises(bt.GridError) as err:
            bt.read_trace(io.StringIO("\n".join(lines)))
        assert "row" in str(err.value)

    def test_missing_key(self, sample_trace):
        lines = [l for l in self._text(sample_trace).splitlines()
                 if not l.startswith("# dz_m=")]
        with pytest.raises(bt.HeaderError):
            bt.read_trace(io.StringIO("\n".join(lines)))

    def test_duplicate_key(self, sample_trace):
        lines = self._text(sample_trace).splitlines()
        lines.insert(1, lines[1])
        with pytest.raises(bt.HeaderError):
            bt.read_trace(io.StringIO("\n".join(lines)))

    def test_unknown_key(self, sample_trace):
        lines = self._text(sample_trace).splitlines()
        lines.insert(1, "# voltage=3")
        with pytest.raises(bt.HeaderError):
            bt.read_trace(io.StringIO("\n".join(lines)))

    def test_malformed_row_names_line(self, sample_trace):
        lines = self._text(sample_trace).splitlines()
        lines[15] = "not,a number,0"
        with pytest.raises(bt.ParseError) as err:
            bt.read_trace(io.StringIO("\n".join(lines)))
        assert "line 16" in str(err.value)

    def test_count_mismatch(self, sample_trace):
        lines = self._text(sample_trace).splitlines()
        del lines[-3:]
        with pytest.raises(bt.ParseError):
            bt.read_trace(io.StringIO("\n".join(lines)))

    def test_empty_data_section(self, sample_trace):
        lines = [l for l in self._text(sample_trace).splitlines()
                 if l.startswith("#") or l == "z_m,re,im"]
        with pytest.raises(bt.ParseError):
            bt.read_trace(io.StringIO("\n".join(lines)))

    def test_missing_column_line(self, sample_trace):
        lines = [l for l in self._text(sample_trace).splitlines() if l.startswith("#")]
        with pytest.raises(bt.HeaderError):
            bt.read_trace(io.StringIO("\n".join(lines)))


class TestImportColumns:
    def _rows(self, kz, count=40, scale_z=1e3):
        # z in millimeters, re/im columns
        rows = []
        for n in range(count):
            z = n * DZ
            v = np.exp(-1j * kz * z)
            rows.append(f"{z * scale_z:.10f},{v.real:.12e},{v.imag:.12e}")
        return rows

    def test_millimeter_z_scale(self, vacuum_guide):
        kz = bt.te10_kz(25e9, vacuum_guide).real
        text = "\n".join(["z_mm,re,im"] + self._rows(kz))
        mapping = bt.ColumnMapping(z_col=0, re_col=1, im_col=2, z_scale=1e-3,
                                  skip_rows=1)
        trace = bt.import_columns(
            io.StringIO(text), mapping,
            {"frequency_hz": 25e9, "period_m": PERIOD},
        )
        assert trace.dz == pytest.approx(DZ, rel=1e-9)
        point = bt.extract_trace_point(trace, margin_cells=0.0)
        assert point.beta == pytest.approx(kz, rel=1e-9)

    def test_polar_equivalence(self, vacuum_guide):
        kz = bt.te10_kz(25e9, vacuum_guide).real
        cart_rows = []
        polar_rows = []
        for n in range(40):
            z = n * DZ
            v = complex(np.exp(-1j * kz * z))
            cart_rows.append(f"{z},{v.real!r},{v.imag!r}")
            polar_rows.append(f"{z},{abs(v)!r},{math.degrees(math.atan2(v.imag, v.real))!r}")
        overrides = {"frequency_hz": 25e9, "period_m": PERIOD}
        cart = bt.import_columns(
            io.StringIO("\n".join(cart_rows)),
            bt.ColumnMapping(z_col=0, re_col=1, im_col=2), dict(overrides),
        )
        polar = bt.import_columns(
            io.StringIO("\n".join(polar_rows)),
            bt.ColumnMapping(z_col=0, mag_col=1, phase_deg_col=2), dict(overrides),
        )
        pc = bt.extract_trace_point(cart, margin_cells=0.0)
        pp = bt.extract_trace_point(polar, margin_cells=0.0)
        assert pp.beta == pytest.approx(pc.beta, rel=1e-12)
        assert pp.alpha == pytest.approx(pc.alpha, abs=1e-12 * abs(pc.beta))

    def test_unsorted_input_is_sorted(self):
        rows = ["0.002,1,0", "0.000,1,0", "0.001,1,0"]
        trace = bt.import_columns(
            io.StringIO("\n".join(rows)),
            bt.ColumnMapping(z_col=0, re_col=1, im_col=2),
            {"frequency_hz": 1e9, "period_m": 0.001},
        )
        assert trace.z_start == 0.0
        assert trace.count == 3

    def test_duplicate_z_rejected(self):
        rows = ["0.000,1,0", "0.001,1,0", "0.001,1,0", "0.002,1,0"]
        with pytest.raises(bt.GridError):
            bt.import_columns(
                io.StringIO("\n".join(rows)),
                bt.ColumnMapping(z_col=0, re_col=1, im_col=2),
                {"frequency_hz": 1e9, "period_m": 0.001},
            )

    def test_short_row_raises_mapping_error(self):
        rows = ["0.000,1,0", "0.001,1", "0.002,1,0"]
        with pytest.raises(bt.MappingError):
            bt.import_columns(
                io.StringIO("\n".join(rows)),
                bt.ColumnMapping(z_col=0, re_col=1, im_col=2),
                {"frequency_hz": 1e9, "period_m": 0.001},
            )

    def test_required_overrides(self):
        with pytest.raises(bt.HeaderError):
            bt.import_columns(
                io.StringIO("0,1,0\n0.001,1,0\n0.002,1,0"),
                bt.ColumnMapping(z_col=0, re_col=1, im_col=2),
                {"frequency_hz": 1e9},
            )

    def test_mapping_validation(self):
        with pytest.raises(ValueError):
            bt.ColumnMapping(z_col=0)                       # no representation
        with pytest.raises(ValueError):
            bt.ColumnMapping(z_col=0, re_col=0, im_col=1)   # overlapping columns
        with pytest.raises(ValueError):
            bt.ColumnMapping(z_col=0, re_col=1, im_col=2, z_scale=0.0)

    def test_mapping_file(self, tmp_path):
        config = tmp_path / "mapping.cfg"
        config.write_text(
            "# export mapping\n"
            "z_col=0\nre_col=1\nim_col=2\nz_scale=1e-3\nskip_rows=1\n"
            "frequency_hz=2.5e10\nperiod_m=0.006\ncomponent=Ey\n"
        )
        mapping, overrides = bt.parse_mapping_file(config)
        assert mapping.z_scale == 1e-3
        assert mapping.skip_rows == 1
        assert overrides == {"frequency_hz": 2.5e10, "period_m": 0.006,
                             "component": "Ey"}

    def test_mapping_file_unknown_key(self, tmp_path):
        config = tmp_path / "mapping.cfg"
        config.write_text("z_col=0\nre_col=1\nim_col=2\nwavelength=3\n")
        with pytest.raises(bt.MappingError):
            bt.parse_mapping_file(config)


class TestTriplets:
    def test_466_points_yield_442_triplets(self, vacuum_guide):
        kz = bt.te10_kz(25e9, vacuum_guide)
        trace = bt.synth_uniform_trace(
            kz, 1.0, 0.0, z_start=0.0, dz=DZ, count=466,
            period_p=PERIOD, frequency=25e9,
        )
        stride = round(PERIOD / DZ)
        triplets = bt.triplets_from_trace(trace)
        assert len(triplets) == 466 - 2 * stride == 442
        index, first = triplets[0]
        assert index == stride
        assert first.period_p == PERIOD

    def test_three_point_trace_single_triplet(self):
        trace = bt.FieldTrace(1e9, np.array([1.0, 2.0, 3.0]), 0.0, 0.001, 0.001)
        triplets = bt.triplets_from_trace(trace)
        assert len(triplets) == 1
        assert triplets[0][0] == 1

    def test_off_grid_period_raises(self):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", bt.TraceValidationWarning)
            trace = bt.FieldTrace(1e9, np.ones(8), 0.0, 0.001, 0.0015)
        with pytest.raises(bt.PeriodGridMismatchError):
            bt.triplets_from_trace(trace)

    def test_stride_override_period(self):
        trace = bt.FieldTrace(1e9, np.ones(10), 0.0, 0.001, 0.002)
        triplets = bt.triplets_from_trace(trace, stride_override=3)
        assert triplets[0][1].period_p == pytest.approx(0.003)
        assert len(triplets) == 10 - 6
