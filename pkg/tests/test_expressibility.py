import numpy as np
import pytest

from qpqc.encodings import EncodingSpec
from qpqc.expressibility import (FramePotentialEstimate,
                                 estimate_frame_potential,
                                 haar_frame_potential, jackknife_std_error)
from qpqc.sim import CapacityError


def test_haar_values():
    assert haar_frame_potential(16, 1) == pytest.approx(1 / 16)
    assert haar_frame_potential(16, 2) == pytest.approx(1 / 136)
    assert haar_frame_potential(256, 1) == pytest.approx(1 / 256)


def test_haar_value_matches_monte_carlo():
    est = estimate_frame_potential(None, 4, 2, 4000, input_sampler_seed=0)
    assert abs(est.mean - 1 / 136) <= 3 * est.std_error


def test_haar_self_test_ratio_near_one():
    for t in (1, 2):
        est = estimate_frame_potential(None, 4, t, 2000,
                                       input_sampler_seed=1)
        assert abs(est.ratio - 1.0) <= 3 * est.std_error / est.haar_ref


def test_second_moment_below_first():
    for spec in (None, EncodingSpec("qaoa_z"), EncodingSpec("ring")):
        f1 = estimate_frame_potential(spec, 4, 1, 1000, input_sampler_seed=2)
        f2 = estimate_frame_potential(spec, 4, 2, 1000, input_sampler_seed=2)
        assert f2.mean <= f1.mean


def test_estimates_are_seed_deterministic():
    a = estimate_frame_potential(EncodingSpec("qaoa_x"), 4, 1, 500,
                                 input_sampler_seed=3)
    b = estimate_frame_potential(EncodingSpec("qaoa_x"), 4, 1, 500,
                                 input_sampler_seed=3)
    assert a.mean == b.mean and a.std_error == b.std_error


def test_std_error_scales_like_inverse_sqrt():
    small = estimate_frame_potential(None, 3, 1, 2000, input_sampler_seed=4)
    big = estimate_frame_potential(None, 3, 1, 4000, input_sampler_seed=4)
    ratio = big.std_error / small.std_error
    assert abs(ratio - 1 / np.sqrt(2)) < 0.2 / np.sqrt(2)


def test_jackknife_matches_classic_formula():
    rng = np.random.default_rng(5)
    x = rng.uniform(size=300)
    classic = x.std(ddof=1) / np.sqrt(x.size)
    assert jackknife_std_error(x) == pytest.approx(classic, rel=1e-10)


def test_amplitude_ensemble_supported():
    est = estimate_frame_potential(EncodingSpec("amplitude"), 3, 1, 500,
                                   input_sampler_seed=6)
    assert 0.0 < est.mean <= 1.0


def test_validation():
    with pytest.raises(ValueError):
        haar_frame_potential(16, 3)
    with pytest.raises(ValueError):
        haar_frame_potential(1, 1)
    with pytest.raises(CapacityError):
        estimate_frame_potential(None, 13, 1, 500, input_sampler_seed=0)
    with pytest.raises(ValueError):
        estimate_frame_potential(None, 3, 1, 50, input_sampler_seed=0)
    with pytest.raises(ValueError):
        FramePotentialEstimate(1, 0.1, 0.01, 1, 0.1)
    with pytest.raises(ValueError):
        FramePotentialEstimate(1, 0.1, -0.01, 10, 0.1)
