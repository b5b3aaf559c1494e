import cmath

import pytest

import blochtrace as bt

WIDTH_A = 0.008          # guide width, m
PERIOD = 0.006           # unit cell / sampling period, m
DZ = 0.0005              # sample spacing, m (12 samples per period)


@pytest.fixture(scope="session")
def vacuum_guide():
    return bt.WaveguideSpec.te10(WIDTH_A)


@pytest.fixture(scope="session")
def filled_guide():
    return bt.WaveguideSpec.te10(WIDTH_A, 2.2, 0.005)


def make_ab_cell(loss_tangent=0.0):
    """3 mm vacuum + 3 mm eps_r = 2.2 cell in an 8 mm guide."""
    vac = bt.WaveguideSpec.te10(WIDTH_A)
    filled = bt.WaveguideSpec.te10(WIDTH_A, 2.2, loss_tangent)
    return bt.UnitCellSpec((bt.LayerSpec(0.003, vac), bt.LayerSpec(0.003, filled)))


@pytest.fixture(scope="session")
def ab_cell():
    return make_ab_cell()


def forward_triplet(u, period=1.0, amplitude=1.0 + 0.0j):
    """Triplet of a pure forward wave with per-period factor ``u``."""
    return bt.SampleTriplet(amplitude * u, amplitude, amplitude / u, period)


def two_wave_samples(u, fwd, bwd, offsets):
    """Samples of ``fwd`` and ``bwd`` waves at period multiples ``offsets``.

    The forward wave gains a factor u toward -z and 1/u toward +z.
    """
    return [fwd * u ** (-n) + bwd * u ** n for n in offsets]


def sweep(start_hz, stop_hz, count):
    step = (stop_hz - start_hz) / (count - 1)
    return [start_hz + i * step for i in range(count)]
