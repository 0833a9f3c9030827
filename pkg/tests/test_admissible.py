import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from helpers import reconstruct_dirichlet
from wavekiln.admissible import (apply_generator, check_range, densify_distance, densify_plan, densify_range,
                                 domain_residuals, make_admissible, range_condition_names, tail_integrals)
from wavekiln.corestate import State, state_norm
from wavekiln.exceptions import (ContractViolation, DomainConditionError, InconclusiveError,
                                 TooSmallEpsilonError)
from wavekiln.profiles import canonical_profiles, random_domain_state


def zero(variant="DirichletA"):
    return State.from_functions(variant, 0.0, 0.0, 0.0, wave_n=101, heat_n=801, heat_L=40)


def h_example(r):
    return (1 - r) * np.exp(-r)


def example_range_state(f0):
    # f(-1) must vanish for a DirichletA state, the value at the interface is f0
    return State.from_functions("DirichletA", lambda s: f0 * (s + 1), lambda s: np.cos(s), h_example,
                                wave_n=201, heat_n=4001, heat_L=40)


class TestApplyGenerator:
    def test_zero(self):
        assert state_norm(apply_generator(zero())) == 0

    @given(st.floats(-1e3, 1e3))
    def test_neumann_a_kernel(self, c):
        x = State.from_functions("NeumannA", c, 0.0, 0.0, wave_n=101, heat_n=401, heat_L=20)
        assert state_norm(apply_generator(x)) == 0

    def test_sine_displacement_fails_coupling(self):
        x = State.from_functions("DirichletA", lambda s: np.sin(np.pi * (s + 1)), 0.0, 0.0,
                                 wave_n=201, heat_n=401, heat_L=20)
        with pytest.raises(DomainConditionError) as info:
            apply_generator(x)
        assert "u'(0) = w'(0)" in info.value.violations
        assert info.value.violations["u'(0) = w'(0)"] == pytest.approx(np.pi, rel=1e-6)

    def test_exact_on_smooth_profiles(self):
        rng = np.random.default_rng(4)
        from wavekiln.profiles import random_domain_profiles

        t = random_domain_profiles("NeumannB", rng)
        x = t.sample(401, 2001, 40)
        y = apply_generator(x)
        ref = t.generator().sample(401, 2001, 40)
        assert state_norm(y - ref) <= 1e-6 * state_norm(ref)

    def test_rejects_non_state(self):
        with pytest.raises(ContractViolation):
            apply_generator(np.zeros(3))


class TestCheckRange:
    def test_zero(self):
        r = check_range(zero())
        assert r.passed and r.compat_residual == 0 and r.tail_norm_a == 0 and r.tail_norm_b == 0

    def test_tail_integrals_match_quadrature(self):
        y = example_range_state(-1.0)
        t1, t2 = tail_integrals(y.w)
        for xi in (0.0, 0.5, 2.0, 7.5):
            q1 = quad(h_example, xi, np.inf)[0]
            q2 = quad(lambda t: quad(h_example, t, np.inf)[0], xi, np.inf)[0]
            assert t1.at(xi) == pytest.approx(q1, abs=1e-9)
            assert t2.at(xi) == pytest.approx(q2, abs=1e-9)
        # closed forms: T1 = -xi e^-xi, T2 = -(xi + 1) e^-xi
        assert np.allclose(t1.values, -t1.nodes * np.exp(-t1.nodes), atol=1e-9)
        assert np.allclose(t2.values, -(t2.nodes + 1) * np.exp(-t2.nodes), atol=1e-9)

    def test_compatible_interface_value_passes(self):
        r = check_range(example_range_state(-1.0))
        assert r.passed and set(r.conditions) == {"tail_a", "tail_b", "compat"}
        # ||xi e^-xi||^2 = 1/4 and ||(xi+1) e^-xi||^2 = 5/4
        assert r.tail_norm_a == pytest.approx(0.5, abs=1e-9)
        assert r.tail_norm_b == pytest.approx(math.sqrt(1.25), abs=1e-9)

    def test_zero_interface_value_fails_with_unit_residual(self):
        r = check_range(example_range_state(0.0))
        assert not r.conditions["compat"] and not r.passed
        assert r.compat_residual == pytest.approx(1.0, abs=1e-9)

    def test_long_tail_is_inconclusive(self):
        y = State.from_functions("DirichletA", 0.0, 0.0, lambda r: 1 / (1 + r) ** 2, wave_n=101, heat_n=801,
                                 heat_L=40)
        with pytest.raises(InconclusiveError):
            check_range(y)

    def test_condition_names(self):
        assert range_condition_names("NeumannB") == ("tail_a", "tail_b", "mass")
        assert range_condition_names("NeumannA") == ("tail_a", "tail_b", "compat", "mass")
        r = check_range(zero("NeumannB"))
        assert set(r.conditions) == {"tail_a", "tail_b", "mass"} and r.compat_residual == 0

    def test_report_lines(self):
        lines = check_range(example_range_state(-1.0)).as_lines()
        assert lines[0] == "variant=DirichletA" and lines[-1] == "passed=true"


class TestMakeAdmissible:
    def test_zero(self):
        z = State.from_functions("DirichletA", 0.0, 0.0, 0.0, wave_n=201, heat_n=2001, heat_L=40)
        assert state_norm(make_admissible(z)) == 0

    @pytest.mark.parametrize("variant", ["DirichletA", "NeumannA", "NeumannB"])
    def test_canonical_datum_passes(self, variant):
        x = make_admissible(canonical_profiles(variant).sample(801, None, 40.0))
        assert check_range(x).passed
        # A z is one difference level down from z, so its own couplings hold less tightly
        assert max(domain_residuals(x).values()) < 1e-4

    def test_linearity(self):
        # coarse wave grid: roundoff in the second differences scales like 1/h^2
        z1 = random_domain_state("DirichletA", 1, level=2, wave_n=101)
        z2 = random_domain_state("DirichletA", 2, level=2, wave_n=101)
        lhs = make_admissible(z1 + z2)
        rhs = make_admissible(z1) + make_admissible(z2)
        assert state_norm(lhs - rhs) <= 1e-12 * state_norm(lhs)

    def test_level_one_state_rejected(self):
        # in D(A) but not D(A^2): A z breaks the couplings
        z = random_domain_state("DirichletA", 5, level=1)
        with pytest.raises(DomainConditionError) as info:
            make_admissible(z)
        assert all(k.startswith("A z: ") for k in info.value.violations)


@pytest.mark.parametrize("seed", range(20))
def test_generator_image_lies_in_range(seed):
    z = random_domain_state("DirichletA", seed, level=1)
    assert check_range(apply_generator(z)).passed


@pytest.mark.parametrize("seed", range(5))
def test_reconstruction_inverts_the_generator(seed):
    z = random_domain_state("DirichletA", seed, level=2, wave_n=801, heat_n=4001, heat_L=40)
    y = apply_generator(z)
    x = reconstruct_dirichlet(y)
    back = apply_generator(x)
    assert state_norm(back - y) <= 1e-6 * state_norm(y)


class TestDensify:
    def test_already_in_range_moves_less_than_sqrt2_eps(self):
        y = make_admissible(canonical_profiles("NeumannA").sample(401, None, 40.0))
        eps = 0.1
        y0, plan = densify_range(y, eps)
        assert check_range(y0).passed
        assert densify_distance(y, y0) < math.sqrt(2) * eps

    def test_mass_cut_length(self):
        y = State.from_functions("NeumannA", 0.0, 1.0, 0.0, wave_n=101, heat_n=401, heat_L=40)
        plan = densify_plan(y, 0.25)
        assert plan.r0 == pytest.approx(1.0, abs=1e-12)
        assert plan.xi0 == pytest.approx(math.exp(4) - 1, rel=1e-12)
        # int_0^xi0 eps / (1 + r) dr recovers the mass
        assert 0.25 * math.log1p(plan.xi0) == pytest.approx(1.0, rel=1e-12)

    def test_small_epsilon_is_loud(self):
        y = State.from_functions("NeumannA", 0.0, 1.0, 0.0, wave_n=101, heat_n=401, heat_L=40)
        with pytest.raises(TooSmallEpsilonError) as info:
            densify_range(y, 0.25)
        assert info.value.needed_length > 1e5

    def test_only_neumann_a(self):
        with pytest.raises(ContractViolation):
            densify_range(zero("NeumannB"), 0.5)

    @pytest.mark.parametrize("seed", range(50))
    def test_three_eps_bound(self, seed):
        rng = np.random.default_rng(seed)
        y = random_domain_state("NeumannA", rng, wave_n=201, heat_n=1501, heat_L=30,
                                amplitude=rng.uniform(0.05, 0.5))
        eps = rng.uniform(0.2, 1.0)
        while densify_plan(y, eps).needed_length > 1e5:
            eps *= 1.5
        y0, _ = densify_range(y, eps)
        assert check_range(y0).passed
        assert densify_distance(y, y0) < 3 * eps
