import pytest

from homtree.calibration import CALIBRATORS, load_calibration, verify_calibration


def test_all_constants_stored():
    assert set(load_calibration()) == set(CALIBRATORS)


@pytest.mark.parametrize("name", ["pointwise_C_star", "small_time_norm", "bessel_J_C", "kunze_stein"])
def test_constant_reproduces(name):
    stored, fresh, ok = verify_calibration([name])[name]
    assert ok, (stored, fresh)


@pytest.mark.slow
def test_scattering_constant_reproduces():
    stored, fresh, ok = verify_calibration(["scattering_K"])["scattering_K"]
    assert ok, (stored, fresh)
