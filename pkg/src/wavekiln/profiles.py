"""Closed-form smooth profiles with exact derivatives.

Wave components are polynomials on [-1, 0]; heat components are
``P(xi) * exp(-beta xi^2)``, which stay in the same family under
differentiation.  Random states satisfying the boundary and coupling
conditions of a generator domain (or of the domain of its square) are built
by projecting random coefficients onto the null space of those linear
conditions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial
from scipy.linalg import null_space

from ._validation import check_int
from .corestate import DEFAULT_HEAT_LENGTH, GridFunction, State, Variant, odd_points


@dataclass(frozen=True)
class WaveProfile:
    poly: Polynomial

    def __call__(self, x):
        return self.poly(np.asarray(x, dtype=float))

    def deriv(self, m=1):
        return WaveProfile(self.poly.deriv(m))

    def __add__(self, other):
        return WaveProfile(self.poly + other.poly)

    def scale(self, c):
        return WaveProfile(self.poly * c)


@dataclass(frozen=True)
class HeatProfile:
    poly: Polynomial
    beta: float = 0.25

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.poly(x) * np.exp(-self.beta * x * x)

    def deriv(self, m=1):
        p = self.poly
        for _ in range(m):
            p = p.deriv() - Polynomial([0.0, 2.0 * self.beta]) * p
        return HeatProfile(p, self.beta)

    def __add__(self, other):
        return HeatProfile(self.poly + other.poly, self.beta)

    def scale(self, c):
        return HeatProfile(self.poly * c, self.beta)


@dataclass(frozen=True)
class ProfileTriple:
    variant: Variant
    u: WaveProfile
    v: WaveProfile
    w: HeatProfile

    def generator(self) -> "ProfileTriple":
        """Exact image under ``(v, u'', w'')`` or, for NeumannB, ``(v', u', w'')``."""
        if self.variant is Variant.NEUMANN_B:
            return ProfileTriple(self.variant, self.v.deriv(), self.u.deriv(), self.w.deriv(2))
        return ProfileTriple(self.variant, self.v, self.u.deriv(2), self.w.deriv(2))

    def sample(self, wave_n=401, heat_n=None, heat_L=DEFAULT_HEAT_LENGTH) -> State:
        # default heat spacing 0.02 keeps nested differences at the interface near 1e-8
        wave_n = odd_points(wave_n)
        heat_n = odd_points(heat_n if heat_n is not None else 50 * heat_L + 1)
        return State(
            self.variant,
            GridFunction.sample(self.u, -1.0, 0.0, wave_n),
            GridFunction.sample(self.v, -1.0, 0.0, wave_n),
            GridFunction.sample(self.w, 0.0, heat_L, heat_n),
        )

    def scale(self, c):
        return ProfileTriple(self.variant, self.u.scale(c), self.v.scale(c), self.w.scale(c))


def domain_conditions(t: ProfileTriple):
    """Residuals of the generator-domain boundary and coupling conditions."""
    u, v, w = t.u, t.v, t.w
    if t.variant is Variant.DIRICHLET_A:
        return [u(-1.0), v(-1.0), u.deriv()(0.0) - w.deriv()(0.0), v(0.0) - w(0.0)]
    if t.variant is Variant.NEUMANN_A:
        return [u.deriv()(-1.0), u.deriv()(0.0) - w.deriv()(0.0), v(0.0) - w(0.0)]
    return [u(-1.0), u(0.0) - w.deriv()(0.0), v(0.0) - w(0.0)]


def _basis(variant, wave_degree, heat_degree, beta):
    size = 2 * (wave_degree + 1) + heat_degree + 1

    def triple(c):
        c = np.asarray(c, dtype=float)
        nu = wave_degree + 1
        return ProfileTriple(
            variant,
            WaveProfile(Polynomial(c[:nu])),
            WaveProfile(Polynomial(c[nu:2 * nu])),
            HeatProfile(Polynomial(c[2 * nu:]), beta),
        )

    return size, triple


def constraint_matrix(variant, level=1, wave_degree=7, heat_degree=6, beta=0.25):
    """Rows of the linear conditions for membership in D(A) (level 1) or D(A^2) (level 2)."""
    variant = Variant.parse(variant)
    size, triple = _basis(variant, wave_degree, heat_degree, beta)
    rows = []
    for k in range(size):
        e = np.zeros(size)
        e[k] = 1.0
        t = triple(e)
        conds = []
        for _ in range(level):
            conds.extend(domain_conditions(t))
            t = t.generator()
        rows.append(conds)
    return np.asarray(rows, dtype=float).T, triple


def random_domain_profiles(variant, rng, level=1, amplitude=1.0, wave_degree=7, heat_degree=6,
                           beta=0.25) -> ProfileTriple:
    """Random smooth triple in D(A^level) with coefficients decaying like 1/k!."""
    level = check_int(level, "level", 1)
    rng = np.random.default_rng(rng)
    C, triple = constraint_matrix(variant, level, wave_degree, heat_degree, beta)
    N = null_space(C)
    nu = wave_degree + 1
    decay = np.concatenate([_inv_factorials(nu), _inv_factorials(nu), _inv_factorials(heat_degree + 1)])
    c = rng.standard_normal(C.shape[1]) * decay
    c = N @ (N.T @ c)
    t = triple(c)
    # normalise so the sampled wave velocity and heat profile are O(amplitude)
    xs = np.linspace(-1.0, 0.0, 65)
    xh = np.linspace(0.0, 12.0, 193)
    peak = max(np.max(np.abs(t.u(xs))), np.max(np.abs(t.v(xs))), np.max(np.abs(t.w(xh))), 1e-300)
    return t.scale(amplitude / peak)


def _inv_factorials(n):
    return np.array([1.0 / math.factorial(k) for k in range(n)])


def random_domain_state(variant, rng, level=1, wave_n=401, heat_n=None, heat_L=DEFAULT_HEAT_LENGTH,
                        amplitude=1.0) -> State:
    return random_domain_profiles(variant, rng, level, amplitude).sample(wave_n, heat_n, heat_L)


@dataclass(frozen=True)
class PowerTailProfile:
    """``coef * d^order/dxi^order (1 + xi/length)^(-beta)``, optionally times a smooth taper.

    The taper equals 1 on ``[0, taper[0]]`` and 0 beyond ``taper[1]``; it only
    multiplies sampled values, so derivatives are exact on the untapered part
    (in particular at the interface).
    """

    beta: float
    coef: float = 1.0
    order: int = 0
    taper: tuple = None
    length: float = 1.0

    def _base(self, x):
        k = self.order
        falling = 1.0
        for i in range(k):
            falling *= -(self.beta + i) / self.length
        return self.coef * falling * (1.0 + x / self.length) ** (-self.beta - k)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = self._base(x)
        if self.taper is not None:
            from .resolvent import smoothstep

            a, b = self.taper
            out = out * smoothstep((b - x) / (b - a))
        return out

    def deriv(self, m=1):
        return PowerTailProfile(self.beta, self.coef, self.order + m, self.taper, self.length)

    def scale(self, c):
        return PowerTailProfile(self.beta, self.coef * c, self.order, self.taper, self.length)


def heat_driven_profiles(variant, heat, level=2, wave_degree=7) -> ProfileTriple:
    """Triple in ``D(A^level)`` with the given heat profile.

    The wave polynomials are the least-norm solution of the boundary and
    coupling conditions given the heat profile's derivatives at the interface.
    """
    variant = Variant.parse(variant)
    level = check_int(level, "level", 1)
    nu = wave_degree + 1

    def triple(c):
        return ProfileTriple(variant, WaveProfile(Polynomial(c[:nu])), WaveProfile(Polynomial(c[nu:])), heat)

    def conds(t):
        out = []
        for _ in range(level):
            out.extend(domain_conditions(t))
            t = t.generator()
        return np.asarray(out, dtype=float)

    r0 = conds(triple(np.zeros(2 * nu)))
    C = np.empty((r0.size, 2 * nu))
    for k in range(2 * nu):
        e = np.zeros(2 * nu)
        e[k] = 1.0
        C[:, k] = conds(triple(e)) - r0
    c = np.linalg.lstsq(C, -r0, rcond=None)[0]
    return triple(c)


def canonical_profiles(variant, level=2) -> ProfileTriple:
    """Deterministic smooth datum: heat part ``exp(-xi^2/4)``, least-norm wave part."""
    return heat_driven_profiles(variant, HeatProfile(Polynomial([1.0]), 0.25), level)


def slow_tail_profiles(variant, beta=0.55, taper=(30.0, 60.0), length=4.0, level=2) -> ProfileTriple:
    """Triple in ``D(A^level)`` whose heat part is ``(1 + xi/length)^(-beta)``, cut off smoothly far out."""
    heat = PowerTailProfile(float(beta), 1.0, 0, tuple(taper), float(length))
    return heat_driven_profiles(variant, heat, level)
