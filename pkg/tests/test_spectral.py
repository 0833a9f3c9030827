import cmath
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wavekiln.exceptions import ContractViolation
from wavekiln.spectral import (CharacteristicKind, Rect, axis_margin, branch_root, char_derivative, char_value,
                               eigen_locus_fit, find_roots, newton, principal_sqrt, winding_number,
                               winding_number_by_argument)

finite = st.floats(-1e3, 1e3, allow_nan=False)


def mp_char(kind, lam):
    lam = mpmath.mpc(lam)
    sq = mpmath.sqrt(lam)
    if kind == "DirichletA":
        return mpmath.cosh(lam) + sq * mpmath.sinh(lam)
    return sq * mpmath.cosh(lam) + mpmath.sinh(lam)


class TestPrincipalSqrt:
    def test_examples(self):
        assert principal_sqrt(1) == 1
        assert principal_sqrt(-1) == pytest.approx(1j, abs=1e-15)
        assert principal_sqrt(1j) == pytest.approx((1 + 1j) * math.sqrt(0.5), abs=1e-15)

    def test_squares_back_vectorised(self):
        rng = np.random.default_rng(1)
        lam = (rng.standard_normal(10_000) + 1j * rng.standard_normal(10_000)) * 10.0 ** rng.uniform(-3, 3, 10_000)
        r = principal_sqrt(lam)
        assert np.max(np.abs(r * r - lam) / np.abs(lam)) <= 1e-14

    @given(finite, finite)
    def test_positive_real_part_off_cut(self, a, b):
        lam = complex(a, b)
        if b == 0 and a <= 0:
            return
        assert principal_sqrt(lam).real > 0

    @given(finite, finite)
    def test_matches_cmath(self, a, b):
        assert principal_sqrt(complex(a, b)) == pytest.approx(cmath.sqrt(complex(a, b)), rel=1e-15, abs=1e-300)


class TestCharValue:
    def test_anchor_at_one(self):
        assert abs(char_value("DirichletA", 1.0) - math.e) <= 1e-12 * math.e

    def test_at_zero(self):
        assert char_value("DirichletA", 0.0) == 1
        assert char_value("NeumannB", 0.0) == 0

    @given(st.floats(1e-3, 50), st.floats(-50, 50))
    def test_conjugate_symmetry(self, a, b):
        lam = complex(a, b)
        for kind in ("DirichletA", "NeumannB"):
            v, vc = char_value(kind, lam), char_value(kind, lam.conjugate())
            assert vc == pytest.approx(v.conjugate(), rel=1e-12, abs=1e-12)

    @given(st.floats(0.1, 5), st.floats(-5, 5))
    def test_derivative_matches_difference(self, a, b):
        lam, h = complex(a, b), 1e-6
        for kind in ("DirichletA", "NeumannB"):
            fd = (char_value(kind, lam + h) - char_value(kind, lam - h)) / (2 * h)
            assert char_derivative(kind, lam) == pytest.approx(fd, rel=1e-6, abs=1e-6)

    def test_kind_parse(self):
        assert CharacteristicKind.parse("neumannb") is CharacteristicKind.NEUMANN_B
        with pytest.raises(ContractViolation):
            CharacteristicKind.parse("robin")


class TestAxisMargin:
    @pytest.mark.parametrize("lo,hi", [(1e-3, 1e-1), (10.0, 1e4)])
    def test_lower_bound_one_third(self, lo, hi):
        assert axis_margin("DirichletA", lo, hi) >= 1.0 / 3.0

    def test_full_range_positive_and_matches_dense_oracle(self):
        s = np.logspace(-4, 4, 1_000_000)
        lam = 1j * s
        sq = np.sqrt(lam)
        dense = np.min(np.abs(np.cosh(lam) + sq * np.sinh(lam)))
        m = axis_margin("DirichletA", 1e-4, 1e4)
        assert m > 0
        # the module's own sampling is coarser: it can only overestimate the minimum
        assert dense <= m * (1 + 1e-12)
        assert m == pytest.approx(dense, rel=0.02)

    def test_bad_range(self):
        with pytest.raises(ContractViolation):
            axis_margin("DirichletA", 0.0, 1.0)
        with pytest.raises(ContractViolation):
            axis_margin("DirichletA", 2.0, 1.0)


class TestFindRoots:
    def test_one_root_near_pi(self):
        roots = find_roots("DirichletA", (-2.0, -1e-6, 2.0, 5.0))
        assert len(roots) == 1
        lam = roots[0].lam
        assert lam.real < 0 and abs(lam.imag - math.pi) < 0.5
        oracle = complex(mpmath.findroot(lambda z: mp_char("DirichletA", z), lam + 0.01j))
        assert abs(lam - oracle) < 1e-10

    def test_low_rectangle_holds_the_first_root(self):
        # the rectangle [-2, -1e-6] x [0.1, 2]i contains the first zero near 0.82i
        roots = find_roots("DirichletA", (-2.0, -1e-6, 0.1, 2.0))
        assert len(roots) == 1
        oracle = complex(mpmath.findroot(lambda z: mp_char("DirichletA", z), -0.3 + 0.8j))
        assert abs(roots[0].lam - oracle) < 1e-10
        z = mpmath.mpc(roots[0].lam)
        assert abs(mp_char("DirichletA", z)) < 1e-10

    def test_neumann_conjugate_pairs(self):
        roots = find_roots("NeumannB", (-3.0, -1e-6, -10.0, 10.0))
        lams = np.array([r.lam for r in roots])
        assert len(lams) > 0 and len(lams) % 2 == 0
        for z in lams:
            assert np.min(np.abs(lams - z.conjugate())) < 1e-9

    def test_records_satisfy_invariants(self):
        roots = find_roots("DirichletA", (-3.0, -1e-6, 0.0, 50.0))
        assert all(r.residual < 1e-10 and r.lam.real < 0 for r in roots)
        lams = np.array([r.lam for r in roots])
        gaps = np.abs(lams[:, None] - lams[None, :]) + np.eye(len(lams))
        assert gaps.min() > 1e-8

    def test_winding_recount_per_cell(self):
        roots = find_roots("DirichletA", (-3.0, -1e-6, 0.0, 30.0))
        cells = {r.cell for r in roots}
        for cell in cells:
            inside = sum(1 for r in roots if r.cell == cell)
            assert winding_number_by_argument("DirichletA", cell) == inside

    def test_region_must_be_in_left_half_plane(self):
        with pytest.raises(ContractViolation):
            find_roots("DirichletA", (-1.0, 1.0, 1.0, 2.0))

    def test_empty_region(self):
        assert winding_number("DirichletA", Rect(-2.0, -1.0, 0.1, 0.2)) == 0

    def test_newton_converges_from_nearby_point(self):
        lam, _, _ = newton("DirichletA", -0.3 + 3.5j)
        assert abs(char_value("DirichletA", lam)) < 1e-10

    def test_branch_roots_approach_axis(self):
        re = [abs(branch_root("DirichletA", k).lam.real) for k in (2, 4, 8)]
        assert re[0] > re[1] > re[2]


def test_locus_fit_small_branch_count_reports_residual():
    fit = eigen_locus_fit("DirichletA", 4)
    assert np.isfinite(fit.exponent) and fit.residual >= 0


def test_locus_fit_needs_four_branches():
    with pytest.raises(ContractViolation):
        eigen_locus_fit("DirichletA", 3)
