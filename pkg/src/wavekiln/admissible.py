"""Generator application and admissibility classes.

Conditions are checked numerically on the sampled grids.  All residuals are
always reported; booleans use a relative tolerance (default 1e-6) so callers
can apply stricter gates themselves.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_positive
from .corestate import GridFunction, State, Variant, fd_first, fd_second, odd_points, state_norm
from .exceptions import ContractViolation, DomainConditionError, InconclusiveError, TooSmallEpsilonError

logger = logging.getLogger(__name__)

DOMAIN_TOL = 1e-6
# conditions on A z are evaluated on differences of differences (one order lower)
SECOND_LEVEL_TOL = 1e-3
RANGE_TOL = 1e-6
SUPPORT_TOL = 1e-10
SUPPORT_FRACTION = 0.9
HEAT_LENGTH_CAP = 1e5
# corrections supported on fewer nodes than this are widened to this many spacings
MIN_SUPPORT_NODES = 8


def _scale(x: State):
    vals = [np.max(np.abs(gf.values)) for gf in (x.u, x.v, x.w)]
    return max(1.0, *vals)


def domain_residuals(x: State) -> dict:
    """Absolute residuals of the boundary and coupling conditions of ``x``'s generator domain."""
    u, v, w = x.u, x.v, x.w
    du = fd_first(u.values, u.spacing)
    dw0 = fd_first(w.values[:5], w.spacing)[0]
    if x.variant is Variant.DIRICHLET_A:
        res = {
            "u(-1) = 0": abs(u.values[0]),
            "v(-1) = 0": abs(v.values[0]),
            "u'(0) = w'(0)": abs(du[-1] - dw0),
            "v(0) = w(0)": abs(v.values[-1] - w.values[0]),
        }
    elif x.variant is Variant.NEUMANN_A:
        res = {
            "u'(-1) = 0": abs(du[0]),
            "u'(0) = w'(0)": abs(du[-1] - dw0),
            "v(0) = w(0)": abs(v.values[-1] - w.values[0]),
        }
    else:
        res = {
            "u(-1) = 0": abs(u.values[0]),
            "u(0) = w'(0)": abs(u.values[-1] - dw0),
            "v(0) = w(0)": abs(v.values[-1] - w.values[0]),
        }
    return {k: float(r) for k, r in res.items()}


def domain_violations(x: State, tol=DOMAIN_TOL) -> dict:
    scale = _scale(x)
    return {k: r for k, r in domain_residuals(x).items() if r > tol * scale}


def _image(x: State) -> State:
    u, v, w = x.u, x.v, x.w
    if x.variant is Variant.NEUMANN_B:
        first = v.with_values(fd_first(v.values, v.spacing))
        second = u.with_values(fd_first(u.values, u.spacing))
    else:
        first = v
        second = u.with_values(fd_second(u.values, u.spacing))
    heat = w.with_values(fd_second(w.values, w.spacing))
    return first, second, heat


def apply_generator(x: State, tol=DOMAIN_TOL, check=True) -> State:
    """``(v, u'', w'')``, or ``(v', u', w'')`` for NeumannB, by fourth-order differences.

    Raises :class:`DomainConditionError` naming every violated condition when
    ``check`` is set and ``x`` is not numerically in the domain.
    """
    if not isinstance(x, State):
        raise ContractViolation("expected a State")
    if check:
        bad = domain_violations(x, tol)
        if bad:
            raise DomainConditionError(bad)
    first, second, heat = _image(x)
    return State(x.variant, first, second, heat)


# range ---------------------------------------------------------------------

@dataclass(frozen=True)
class AdmissibilityReport:
    """Outcome of :func:`check_range`.

    ``conditions`` maps each condition name of the variant to a pass flag.
    ``mass_residual`` is only meaningful for the Neumann variants and is 0
    for DirichletA.
    """

    variant: Variant
    conditions: dict
    tail_norm_a: float
    tail_norm_b: float
    compat_residual: float
    mass_residual: float
    scale: float = 1.0
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("tail_norm_a", "tail_norm_b", "compat_residual", "mass_residual"):
            if not getattr(self, name) >= 0:
                raise ContractViolation(f"{name} must be nonnegative")

    @property
    def passed(self) -> bool:
        return all(self.conditions.values())

    @property
    def in_domain(self):
        return list(self.conditions.items())

    def as_lines(self):
        lines = [f"variant={self.variant.value}"]
        lines += [f"{k}={'pass' if ok else 'fail'}" for k, ok in self.conditions.items()]
        lines += [
            f"tail_norm_a={self.tail_norm_a:.12g}",
            f"tail_norm_b={self.tail_norm_b:.12g}",
            f"compat_residual={self.compat_residual:.6e}",
            f"mass_residual={self.mass_residual:.6e}",
            f"passed={'true' if self.passed else 'false'}",
        ]
        return lines


def range_condition_names(variant):
    variant = Variant.parse(variant)
    if variant is Variant.DIRICHLET_A:
        return ("tail_a", "tail_b", "compat")
    if variant is Variant.NEUMANN_A:
        return ("tail_a", "tail_b", "compat", "mass")
    return ("tail_a", "tail_b", "mass")


def tail_integrals(h: GridFunction):
    """``(T1, T2)`` with ``T1(xi) = int_xi^L h`` and ``T2(xi) = int_xi^L T1``."""
    t1 = h.cumulative(reverse=True)
    return t1, t1.cumulative(reverse=True)


def check_support(h: GridFunction, fraction=SUPPORT_FRACTION, tol=SUPPORT_TOL):
    edge = fraction * h.right
    vals = np.abs(h.values)
    ref = max(float(vals.max()), 1e-300)
    beyond = vals[h.nodes > edge]
    if beyond.size and beyond.max() > tol * ref:
        raise InconclusiveError(
            f"heat component is not numerically supported in [0, {edge:.4g}] "
            f"(max |h| beyond = {beyond.max():.3e}); tail integrals would depend on the truncation"
        )


def check_range(y: State, tol=RANGE_TOL) -> AdmissibilityReport:
    """Range conditions for the variant of ``y = (f, g, h)``.

    Tail integrals are reverse cumulative Simpson sums from the truncation
    edge, exact when ``h`` vanishes beyond its support.
    """
    f, g, h = y.u, y.v, y.w
    if np.max(np.abs(h.values)) > 0:
        check_support(h)
    t1, t2 = tail_integrals(h)
    norm_a, norm_b = t1.l2_norm(), t2.l2_norm()
    scale = state_norm(y)
    compat = abs(f.values[-1] - t2.values[0])
    mass = abs(g.integral() + h.integral())

    def ok(r):
        return bool(r <= tol * scale)

    conditions = {"tail_a": bool(np.isfinite(norm_a)), "tail_b": bool(np.isfinite(norm_b))}
    if y.variant is not Variant.NEUMANN_B:
        conditions["compat"] = ok(compat)
    if y.variant is not Variant.DIRICHLET_A:
        conditions["mass"] = ok(mass)
    return AdmissibilityReport(
        y.variant, conditions, norm_a, norm_b,
        float(compat) if y.variant is not Variant.NEUMANN_B else 0.0,
        float(mass) if y.variant is not Variant.DIRICHLET_A else 0.0,
        scale,
        {"f(0)": complex(f.values[-1]), "T2(0)": complex(t2.values[0])},
    )


def make_admissible(z: State, tol=DOMAIN_TOL, second_tol=SECOND_LEVEL_TOL, verify=True) -> State:
    """``x = A z`` for ``z`` numerically in ``D(A^2)``; then ``x`` is in ``D(A)`` and the range of ``A``."""
    x = apply_generator(z, tol)
    second = domain_violations(x, second_tol)
    if second:
        raise DomainConditionError({f"A z: {k}": r for k, r in second.items()})
    if verify:
        report = check_range(x)
        if not report.passed:
            raise InconclusiveError("generated state failed its own range check: " + "; ".join(report.as_lines()))
    return x


# constructive density (NeumannA) -------------------------------------------

@dataclass(frozen=True)
class DensifyPlan:
    """Quantities of the three-step correction before any grid is built.

    ``xi0`` solves ``int_0^xi0 eps/(1+r) dr = r0``; ``tau = exp(c0/eps) - 1``
    where ``c0 = |c|`` is the compatibility defect left after the mass
    correction (continuous formulas; the sampled corrections are rescaled
    to make the discrete conditions exact).
    """

    epsilon: float
    cut: float
    r0: float
    theta: float
    xi0: float
    c: complex
    tau: float
    needed_length: float


def _cut_point(h: GridFunction, budget):
    # smallest node a with ||h chi_(a, L)|| <= budget
    sq = np.abs(h.values) ** 2
    tail = GridFunction(h.left, h.right, sq).cumulative(reverse=True).values
    idx = np.nonzero(np.sqrt(np.maximum(tail, 0.0)) <= budget)[0]
    j = int(idx[0]) if idx.size else h.n_points - 1
    j = min(j, int(np.floor(SUPPORT_FRACTION * (h.n_points - 1))))
    return j


def _mass_shape(nodes, xi0):
    return np.where(nodes < xi0, 1.0 / (nodes + 1.0), 0.0)


def _compat_shape(nodes, tau):
    return np.where(nodes < tau, 1.0 / (nodes + 1.0) ** 2, 0.0)


def _t2_at_zero(values, h):
    gf = GridFunction(0.0, h * (len(values) - 1), values)
    return tail_integrals(gf)[1].values[0]


def _plan(y: State, epsilon, cut_fraction):
    if y.variant is not Variant.NEUMANN_A:
        raise ContractViolation("densify_range is defined for NeumannA states")
    eps = check_positive(epsilon, "epsilon")
    h = y.w.astype(complex)
    j = _cut_point(h, cut_fraction * eps)
    h0 = h.values.copy()
    h0[j + 1:] = 0.0
    h0 = h.with_values(h0)
    m = y.v.integral() + h0.integral()
    r0, theta = abs(m), (float(np.angle(m)) % (2 * np.pi))
    xi0 = math.expm1(r0 / eps) if r0 / eps < 700 else math.inf
    # continuous c after the mass correction: T2(h1)(0) = -eps e^{i theta} (xi0 - log(1 + xi0))
    t2h1 = -eps * np.exp(1j * theta) * (xi0 - r0 / eps) if np.isfinite(xi0) else -np.inf
    c = complex(y.u.values[-1] - _t2_at_zero(h0.values, h.spacing) - t2h1)
    c0 = abs(c)
    tau = math.expm1(c0 / eps) if c0 / eps < 700 else math.inf
    need = max(y.w.right, 1.2 * xi0, 1.2 * tau)
    return DensifyPlan(eps, float(h.nodes[j]), float(r0), theta, float(xi0), c, float(tau), float(need)), h0


def densify_plan(y: State, epsilon, cut_fraction=0.1) -> DensifyPlan:
    return _plan(y, epsilon, cut_fraction)[0]


def extend_heat(x: State, length) -> State:
    """Zero-extend the heat component to ``[0, >= length]`` keeping its spacing."""
    w = x.w
    if length <= w.right:
        return x
    # the tolerance keeps a length that is already a whole number of spacings from gaining a node
    n = odd_points(int(math.ceil(length / w.spacing - 1e-9)) + 1)
    vals = np.zeros(n, dtype=w.values.dtype)
    vals[:w.n_points] = w.values
    return x.replace(w=GridFunction(0.0, w.spacing * (n - 1), vals))


def densify_range(y: State, epsilon, cut_fraction=0.1, cap=HEAT_LENGTH_CAP, tol=1e-12):
    """Nearby element of the NeumannA range, built by the three corrections.

    1. cut ``h`` to compact support ``h0``;
    2. cancel the mass ``r0 e^{i theta}`` with ``h1 = -eps e^{i theta}/(1+xi)`` on ``(0, xi0)``;
    3. cancel the remaining compatibility defect with ``h2 = eps e^{i sigma}/(1+xi)^2`` on
       ``(0, tau)`` and shift ``f`` and ``g`` by ``kappa = eps tau e^{i sigma}/(tau+1)``.

    Returns ``(y0, plan)``.  Raises :class:`TooSmallEpsilonError` when the corrections
    need a heat domain longer than ``cap``.
    """
    plan, h0 = _plan(y, epsilon, cut_fraction)
    if plan.needed_length > cap:
        raise TooSmallEpsilonError(plan.needed_length, cap)
    eps = plan.epsilon
    big = extend_heat(y.replace(w=h0), plan.needed_length / SUPPORT_FRACTION)
    hw = big.w.spacing
    nodes = big.w.nodes
    hv = big.w.values.astype(complex)
    fv = big.u.values.astype(complex)
    gv = big.v.values.astype(complex)
    scale = max(1.0, state_norm(y))

    # mass correction
    mass = big.v.integral() + big.w.integral()
    if abs(mass) > tol * scale:
        shape = _mass_shape(nodes, max(plan.xi0, MIN_SUPPORT_NODES * hw))
        integ = big.w.with_values(shape).integral()
        h1 = -mass / integ * shape
        hv = hv + h1

    # compatibility correction with the matching f, g shifts
    c = fv[-1] - _t2_at_zero(hv, hw)
    if abs(c) > tol * scale:
        shape = _compat_shape(nodes, max(plan.tau, MIN_SUPPORT_NODES * hw))
        i_s = big.w.with_values(shape).integral()
        m_s = _t2_at_zero(shape, hw)
        beta = c / (m_s + i_s)
        kappa = beta * i_s
        hv = hv + beta * shape
        fv = fv - kappa
        gv = gv - kappa

    y0 = State(Variant.NEUMANN_A, big.u.with_values(fv), big.v.with_values(gv), big.w.with_values(hv))
    return y0, plan


def densify_distance(y: State, y0: State) -> float:
    """``||y - y0||`` after zero-extending both heat components to a common grid."""
    length = max(y.w.right, y0.w.right)
    a, b = extend_heat(y, length), extend_heat(y0, length)
    if a.w.n_points != b.w.n_points:
        raise ContractViolation("heat grids of y and y0 have different spacings")
    return state_norm(a - b)
