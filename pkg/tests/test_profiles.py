import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wavekiln.corestate import Variant
from wavekiln.profiles import (HeatProfile, PowerTailProfile, canonical_profiles, domain_conditions,
                               random_domain_profiles, slow_tail_profiles)
from numpy.polynomial import Polynomial

VARIANTS = ["DirichletA", "NeumannA", "NeumannB"]


@given(st.integers(0, 2 ** 31), st.sampled_from(VARIANTS), st.sampled_from([1, 2]))
def test_random_profiles_meet_domain_conditions(seed, variant, level):
    t = random_domain_profiles(variant, seed, level=level)
    for _ in range(level):
        assert np.max(np.abs(domain_conditions(t))) < 1e-10
        t = t.generator()


@pytest.mark.parametrize("variant", VARIANTS)
def test_canonical_is_in_second_domain(variant):
    t = canonical_profiles(variant)
    assert t.variant is Variant.parse(variant)
    assert np.max(np.abs(domain_conditions(t))) < 1e-10
    assert np.max(np.abs(domain_conditions(t.generator()))) < 1e-10


def test_heat_profile_derivative_matches_difference():
    p = HeatProfile(Polynomial([1.0, -0.5, 0.2]), 0.3)
    x, h = np.linspace(0.1, 5, 20), 1e-5
    fd = (p(x + h) - p(x - h)) / (2 * h)
    assert np.allclose(p.deriv()(x), fd, atol=1e-8)


def test_power_tail_derivatives_and_taper():
    p = PowerTailProfile(0.6, 2.0, 0, (10.0, 20.0), 4.0)
    x, h = np.linspace(0.0, 8.0, 17), 1e-5
    fd = (p(x + h) - p(x - h)) / (2 * h)
    assert np.allclose(p.deriv()(x), fd, atol=1e-8)
    assert np.all(p(np.array([20.0, 30.0])) == 0)
    assert p(0.0) == pytest.approx(2.0)


def test_slow_tail_profiles_in_second_domain():
    t = slow_tail_profiles("DirichletA")
    assert np.max(np.abs(domain_conditions(t))) < 1e-10
    assert np.max(np.abs(domain_conditions(t.generator()))) < 1e-10


def test_sample_default_heat_spacing():
    x = canonical_profiles("NeumannB").sample(101, None, 40.0)
    assert x.w.spacing == pytest.approx(0.02)
