import cmath
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import blochtrace as bt
from blochtrace.oracles import C0

from conftest import WIDTH_A, make_ab_cell


class TestTe10Kz:
    def test_cutoff_frequency_value(self, vacuum_guide):
        # c/(2a) for the dominant mode of an empty guide
        assert vacuum_guide.cutoff_frequency == pytest.approx(C0 / (2 * WIDTH_A))
        assert vacuum_guide.cutoff_frequency == pytest.approx(18.737e9, rel=1e-3)

    def test_near_cutoff_is_small(self, vacuum_guide):
        kz = bt.te10_kz(18.75e9, vacuum_guide)
        k0 = 2 * math.pi * 18.75e9 / C0
        assert abs(kz) < 0.05 * k0

    def test_propagating_value(self, vacuum_guide):
        # hand evaluation of sqrt(k0^2 - kc^2) at 25 GHz
        k0 = 2 * math.pi * 25e9 / C0
        expected = math.sqrt(k0**2 - (math.pi / WIDTH_A) ** 2)
        kz = bt.te10_kz(25e9, vacuum_guide)
        assert kz.real == pytest.approx(expected, rel=1e-12)
        assert kz.real == pytest.approx(346.9, rel=1e-3)
        assert kz.imag == 0.0

    def test_evanescent_value(self, vacuum_guide):
        k0 = 2 * math.pi * 10e9 / C0
        expected = math.sqrt((math.pi / WIDTH_A) ** 2 - k0**2)
        kz = bt.te10_kz(10e9, vacuum_guide)
        assert kz.real == 0.0
        assert -kz.imag == pytest.approx(expected, rel=1e-12)
        assert -kz.imag == pytest.approx(332.0, rel=1e-2)

    def test_rejects_nonpositive_frequency(self, vacuum_guide):
        with pytest.raises(ValueError):
            bt.te10_kz(0.0, vacuum_guide)

    def test_tem_limit(self):
        tem = bt.WaveguideSpec(0.0, 4.0, 0.0)
        kz = bt.te10_kz(10e9, tem)
        assert kz.real == pytest.approx(2.0 * 2 * math.pi * 10e9 / C0, rel=1e-12)


@given(
    freq=st.floats(min_value=1e8, max_value=1e11),
    width=st.floats(min_value=0.001, max_value=0.05),
    eps=st.floats(min_value=0.5, max_value=12.0),
    tand=st.floats(min_value=0.0, max_value=0.3),
)
@settings(max_examples=200)
def test_property_branch_convention(freq, width, eps, tand):
    kz = bt.te10_kz(freq, bt.WaveguideSpec.te10(width, eps, tand))
    assert kz.real >= 0.0
    assert kz.imag <= 0.0
    if tand == 0.0:
        # lossless dichotomy away from the exact cutoff point
        assert kz.real == 0.0 or kz.imag == 0.0


class TestSpecValidation:
    def test_waveguide_spec_bounds(self):
        with pytest.raises(ValueError):
            bt.WaveguideSpec(-1.0)
        with pytest.raises(ValueError):
            bt.WaveguideSpec(1.0, 0.0)
        with pytest.raises(ValueError):
            bt.WaveguideSpec(1.0, 1.0, -0.1)

    def test_layer_needs_positive_length(self, vacuum_guide):
        with pytest.raises(ValueError):
            bt.LayerSpec(0.0, vacuum_guide)

    def test_cell_needs_layer(self):
        with pytest.raises(ValueError):
            bt.UnitCellSpec((bt.ShuntElementSpec(1j),))

    def test_cell_period_consistency(self, vacuum_guide):
        layer = bt.LayerSpec(0.003, vacuum_guide)
        assert bt.UnitCellSpec((layer, layer)).period_p == pytest.approx(0.006)
        with pytest.raises(ValueError):
            bt.UnitCellSpec((layer, layer), period_p=0.007)

    def test_abcd_requires_unit_determinant(self):
        with pytest.raises(ValueError):
            bt.ABCDMatrix(1.0, 0.0, 0.0, 2.0)


class TestElementAbcd:
    def test_short_layer_is_identity(self, vacuum_guide):
        m = bt.element_abcd(bt.LayerSpec(1e-9, vacuum_guide), 25e9)
        assert m.a == pytest.approx(1.0, abs=1e-9)
        assert m.d == pytest.approx(1.0, abs=1e-9)
        assert abs(m.b) < 1e-3     # ohms scale, kz*l ~ 3e-7
        assert abs(m.c) < 1e-9

    def test_zero_shunt_is_identity(self, vacuum_guide):
        m = bt.element_abcd(bt.ShuntElementSpec(0.0), 25e9, reference=vacuum_guide)
        assert (m.a, m.b, m.c, m.d) == (1.0, 0.0, 0.0, 1.0)

    def test_shunt_requires_reference(self):
        with pytest.raises(ValueError):
            bt.element_abcd(bt.ShuntElementSpec(1j), 25e9)

    def test_vacuum_layer_cosine(self, vacuum_guide):
        beta = bt.te10_kz(25e9, vacuum_guide).real
        m = bt.element_abcd(bt.LayerSpec(0.003, vacuum_guide), 25e9)
        assert m.a == pytest.approx(math.cos(beta * 0.003), rel=1e-12)
        assert m.a == pytest.approx(math.cos(1.0407), rel=1e-3)

    def test_zero_impedance_at_exact_cutoff(self):
        freq = 15e9
        kc = 2 * math.pi * freq / C0   # cutoff exactly at freq
        spec = bt.WaveguideSpec(kc)
        with pytest.raises(bt.ZeroImpedanceError):
            bt.element_abcd(bt.LayerSpec(0.003, spec), freq)


class TestCellAbcd:
    def test_single_layer_cell_matches_element(self, vacuum_guide):
        layer = bt.LayerSpec(0.006, vacuum_guide)
        cell = bt.UnitCellSpec((layer,))
        m_cell = bt.cell_abcd(cell, 20e9)
        m_elem = bt.element_abcd(layer, 20e9)
        assert m_cell.a == m_elem.a and m_cell.b == m_elem.b

    def test_two_half_layers_group_property(self, vacuum_guide):
        half = bt.LayerSpec(0.003, vacuum_guide)
        full = bt.LayerSpec(0.006, vacuum_guide)
        m2 = bt.cell_abcd(bt.UnitCellSpec((half, half)), 25e9)
        m1 = bt.element_abcd(full, 25e9)
        for got, want in ((m2.a, m1.a), (m2.b, m1.b), (m2.c, m1.c), (m2.d, m1.d)):
            assert abs(got - want) <= 1e-12 * max(1.0, abs(want))

    def test_ab_cell_determinant(self, ab_cell):
        m = bt.cell_abcd(ab_cell, 16e9)
        assert abs(m.determinant - 1.0) <= 1e-10


@given(
    freq=st.floats(min_value=5e9, max_value=40e9),
    width=st.floats(min_value=0.004, max_value=0.015),
    eps=st.floats(min_value=1.0, max_value=5.0),
    tand=st.floats(min_value=0.0, max_value=0.1),
    lengths=st.lists(st.floats(min_value=0.0005, max_value=0.005), min_size=1, max_size=3),
    shunt_im=st.floats(min_value=-2.0, max_value=2.0),
)
@settings(max_examples=100)
def test_property_cascade_determinant(freq, width, eps, tand, lengths, shunt_im):
    guide = bt.WaveguideSpec.te10(width, eps, tand)
    elements = [bt.LayerSpec(l, guide) for l in lengths]
    elements.append(bt.ShuntElementSpec(complex(0.0, shunt_im)))
    cell = bt.UnitCellSpec(tuple(elements))
    try:
        m = bt.cell_abcd(cell, freq)
    except bt.ZeroImpedanceError:
        return
    assert abs(m.determinant - 1.0) <= 1e-9


class TestBlochKz:
    def test_uniform_cell_reproduces_te10(self, vacuum_guide):
        # a uniform guide is periodic with any period below the fold
        kz_direct = bt.te10_kz(25e9, vacuum_guide)
        for p in (0.002, 0.006):
            cell = bt.UnitCellSpec((bt.LayerSpec(p, vacuum_guide),))
            kz_bloch = bt.bloch_kz(bt.cell_abcd(cell, 25e9), p)
            assert abs(kz_bloch - kz_direct) <= 1e-10 * abs(kz_direct)

    def test_uniform_cell_evanescent(self, vacuum_guide):
        kz_direct = bt.te10_kz(12e9, vacuum_guide)
        cell = bt.UnitCellSpec((bt.LayerSpec(0.006, vacuum_guide),))
        kz_bloch = bt.bloch_kz(bt.cell_abcd(cell, 12e9), 0.006)
        assert abs(kz_bloch - kz_direct) <= 1e-10 * abs(kz_direct)

    def test_ab_passband_opens_near_14_7ghz(self, ab_cell):
        # lowest frequency with |A+D|/2 <= 1
        freqs = [10e9 + i * 0.05e9 for i in range(241)]
        edge = next(
            f for f in freqs if abs(bt.cell_abcd(ab_cell, f).trace.real) / 2 <= 1
        )
        assert edge == pytest.approx(14.7e9, abs=0.3e9)

    def test_stopband_pins_phase(self, ab_cell):
        # inside the first stopband above the opening: beta*p = pi, alpha > 0
        kz = bt.bloch_kz(bt.cell_abcd(ab_cell, 25e9), ab_cell.period_p)
        assert kz.real * ab_cell.period_p == pytest.approx(math.pi, abs=1e-9)
        assert -kz.imag > 0.0
        # below the first passband: beta*p = 0, alpha > 0
        kz0 = bt.bloch_kz(bt.cell_abcd(ab_cell, 12e9), ab_cell.period_p)
        assert kz0.real == pytest.approx(0.0, abs=1e-9)
        assert -kz0.imag > 0.0

    def test_loss_continuity(self):
        freq = 20e9  # first passband, away from edges
        reference = bt.bloch_kz(bt.cell_abcd(make_ab_cell(0.0), freq), 0.006)
        gaps = []
        for tand in (1e-2, 1e-3, 1e-4):
            kz = bt.bloch_kz(bt.cell_abcd(make_ab_cell(tand), freq), 0.006)
            gaps.append(abs(kz - reference))
        assert gaps[0] > gaps[1] > gaps[2]

    def test_degenerate_cell_error(self):
        matrix = bt.ABCDMatrix(-1.0, 0.0, 0.0, -1.0)   # trace -2, eigenvalue -1 twice
        with pytest.raises(bt.DegenerateCellError):
            bt.bloch_kz(matrix, 0.006)

    def test_identity_cell_is_degenerate_but_trivial(self):
        # trace +2 pins the eigenvalue at +1: a zero-phase cell
        kz = bt.bloch_kz(bt.ABCDMatrix.identity(), 0.006)
        assert kz == 0.0

    def test_rejects_non_reciprocal(self):
        bad = bt.ABCDMatrix(1.0, 0.0, 0.0, 1.0)
        object.__setattr__(bad, "a", 2.0)
        with pytest.raises(ValueError):
            bt.bloch_kz(bad, 0.006)
