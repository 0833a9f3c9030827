"""Closed-form resolvent of the Dirichlet generator and derived quantities.

For ``y = (f, g, h)`` and ``lam`` off the spectrum, ``x = R(lam, A) y`` is

    u = a sinh(lam (xi + 1)) - U,    v = lam u - f,    w = G * h + b exp(-sqrt(lam) xi)

with ``U(xi) = (1/lam) int_{-1}^xi sinh(lam (xi - r)) (lam f + g)(r) dr``,
``G(xi) = exp(-sqrt(lam) |xi|) / (2 sqrt(lam))`` and ``(a, b)`` fixed by the
two coupling conditions at the interface.  All running integrals use product
integration against cubic interpolants, so oscillatory kernels at large
``|lam|`` are handled without resolving the kernel itself.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._expquad import exp_cumulative, exp_cumulative_reverse
from ._validation import as_complex, check_int, check_positive
from .corestate import DEFAULT_HEAT_LENGTH, GridFunction, State, Variant, fd_first, odd_points, state_norm
from .exceptions import ContractViolation, ConvergenceError, NearEigenvalueError
from .spectral import CharacteristicKind, char_value, principal_sqrt

logger = logging.getLogger(__name__)

NEAR_EIGEN_TOL = 1e-8
DET_TOL = 1e-12
TAIL_EXPONENT = 12.0
COUPLING_TOL = 1e-8
POWER_TOL = 1e-6
POWER_MAX_ITER = 200
# grid refinement for the norm estimator: nodes per unit of |lam| on the wave
# side and per unit of |sqrt(lam)| on the heat side
WAVE_PER_FREQ = 4.0
HEAT_PER_ROOT = 10.0
BASE_HEAT_SPACING = 0.05


def truncation_length(lam, minimum=DEFAULT_HEAT_LENGTH):
    """``max(minimum, 12 / Re sqrt(lam))``: the homogeneous heat tail is below e^-12 at the end."""
    re = principal_sqrt(lam).real
    if re <= 0:
        raise ContractViolation(f"lambda={lam!r} lies on the cut; no decaying heat tail")
    return max(float(minimum), TAIL_EXPONENT / re)


def grid_policy(lam, wave_n=2001, heat_spacing=BASE_HEAT_SPACING):
    """Wave points, heat points and truncation length resolving ``R(lam, A)`` at ``lam``."""
    lam = as_complex(lam)
    L = truncation_length(lam)
    wave_h = min(1.0 / (wave_n - 1), 1.0 / (WAVE_PER_FREQ * max(abs(lam), 1e-300)))
    heat_h = min(heat_spacing, 1.0 / (HEAT_PER_ROOT * abs(principal_sqrt(lam))))
    n_wave = odd_points(int(math.ceil(1.0 / wave_h)) + 1)
    n_heat = odd_points(int(math.ceil(L / heat_h)) + 1)
    return n_wave, n_heat, L


@dataclass(frozen=True)
class ResolventInput:
    """Spectral parameter, data ``y = (f, g, h)`` and heat truncation length (defaults to ``y``'s grid)."""

    lam: complex
    y: State
    heat_truncation: float = None

    def __post_init__(self):
        lam = as_complex(self.lam)
        object.__setattr__(self, "lam", lam)
        if not isinstance(self.y, State) or self.y.variant is not Variant.DIRICHLET_A:
            raise ContractViolation("resolvent data must be a DirichletA State")
        if lam.imag == 0 and lam.real <= 0:
            raise ContractViolation(f"lambda={lam!r} lies on the continuous spectrum (-inf, 0]")
        L = self.y.w.right if self.heat_truncation is None else check_positive(self.heat_truncation, "heat_truncation")
        if abs(L - self.y.w.right) > 1e-9 * L:
            raise ContractViolation("heat_truncation must equal the right end of the heat grid")
        object.__setattr__(self, "heat_truncation", float(L))
        ch = abs(char_value(CharacteristicKind.DIRICHLET_A, lam))
        if ch <= NEAR_EIGEN_TOL:
            raise NearEigenvalueError(lam, ch)
        need = TAIL_EXPONENT / principal_sqrt(lam).real
        if L < need * (1 - 1e-12):
            raise ContractViolation(f"heat truncation L={L:.6g} is below 12/Re sqrt(lambda) = {need:.6g}")


def _wave_integrals(lam, f: GridFunction, g: GridFunction):
    """``(U, U')`` on the wave grid."""
    if lam == 0:
        raise ContractViolation("lambda must be nonzero")
    if f.n_points != g.n_points or f.left != g.left or f.right != g.right:
        raise ContractViolation("f and g are sampled on different grids")
    phi = lam * f.values + g.values
    ep = exp_cumulative(phi, f.spacing, lam)
    em = exp_cumulative(phi, f.spacing, -lam)
    return (ep - em) / (2.0 * lam), 0.5 * (ep + em)


def u_particular(lam, f: GridFunction, g: GridFunction, xi=None, derivative=False):
    """``U_lam`` (or ``U'_lam`` if ``derivative``) at grid node ``xi``, or on the whole grid if ``xi`` is None."""
    lam = as_complex(lam)
    U, dU = _wave_integrals(lam, f, g)
    vals = dU if derivative else U
    if xi is None:
        return f.with_values(vals)
    if not -1.0 <= float(xi) <= 0.0:
        raise ContractViolation("xi must lie in [-1, 0]")
    return complex(vals[f.node_index(xi)])


def _heat_parts(lam, h: GridFunction):
    sq = principal_sqrt(lam)
    W = exp_cumulative_reverse(h.values, h.spacing, sq) / (2.0 * sq)
    S = exp_cumulative(h.values, h.spacing, -sq) / (2.0 * sq)
    return W, S


def heat_tail(lam, h: GridFunction, xi=None, order=3):
    """``W_lam(xi) = e^{sqrt(lam) xi}/(2 sqrt(lam)) int_xi^L h(r) e^{-sqrt(lam) r} dr``.

    ``order=1`` integrates against the piecewise-linear interpolant of ``h``,
    which is preferable for data with jumps.
    """
    lam = as_complex(lam)
    sq = principal_sqrt(lam)
    if sq == 0:
        raise ContractViolation("lambda must be nonzero")
    W = exp_cumulative_reverse(h.values, h.spacing, sq, order) / (2.0 * sq)
    if xi is None:
        return h.with_values(W)
    if not 0.0 <= float(xi) <= h.right:
        raise ContractViolation("xi must lie in [0, L]")
    return complex(W[h.node_index(xi)])


def green_convolve(lam, h: GridFunction) -> GridFunction:
    """``(G_lam * h)`` on ``h``'s grid via the split into a backward and a forward decaying integral."""
    lam = as_complex(lam)
    if principal_sqrt(lam) == 0:
        raise ContractViolation("lambda must be nonzero")
    W, S = _heat_parts(lam, h)
    return h.with_values(W + S)


def interface_matrix(lam):
    lam = as_complex(lam)
    sq = principal_sqrt(lam)
    return np.array([[lam * np.sinh(lam), -1.0], [lam * np.cosh(lam), sq]], dtype=complex)


def _solve2(lam, r1, r2):
    sq = principal_sqrt(lam)
    sh, ch = np.sinh(lam), np.cosh(lam)
    det = lam * (ch + sq * sh)
    if abs(det) < DET_TOL:
        raise NearEigenvalueError(lam, abs(det))
    a = (sq * r1 + r2) / det
    b = (lam * sh * r2 - lam * ch * r1) / det
    return complex(a), complex(b)


def interface_rhs(lam, y: State):
    U, dU = _wave_integrals(lam, y.u, y.v)
    W0 = heat_tail(lam, y.w).values[0]
    sq = principal_sqrt(lam)
    return complex(lam * U[-1] + y.u.values[-1] + W0), complex(dU[-1] + sq * W0)


def solve_interface(lam, y: State):
    """``(a(lam), b(lam))`` by explicit inversion of the 2x2 interface system."""
    lam = as_complex(lam)
    r1, r2 = interface_rhs(lam, y)
    return _solve2(lam, r1, r2)


@dataclass(frozen=True)
class ResolventReport:
    """Coupling residuals of a resolvent image, relative to ``scale``."""

    lam: complex
    a: complex
    b: complex
    u_left: float
    velocity_coupling: float
    flux_coupling: float
    scale: float

    @property
    def max_relative(self):
        return max(self.u_left, self.velocity_coupling, self.flux_coupling) / self.scale

    @property
    def ok(self):
        return self.max_relative <= COUPLING_TOL

    def line(self):
        return (f"lambda={self.lam.real:.17g}{self.lam.imag:+.17g}j a={self.a:.10g} b={self.b:.10g} "
                f"u(-1)={self.u_left:.3e} v(0)-w(0)={self.velocity_coupling:.3e} "
                f"u'(0)-w'(0)={self.flux_coupling:.3e} ok={'true' if self.ok else 'false'}")


def apply_resolvent(inp, y: State = None, return_report=False):
    """``R(lam, A) y`` sampled on ``y``'s grids.

    Accepts a :class:`ResolventInput` or ``(lam, y)``.  The three coupling
    rows are checked from the interface values and reported; a failure to
    meet them to 1e-8 relative is logged.
    """
    if not isinstance(inp, ResolventInput):
        inp = ResolventInput(inp, y)
    lam, y = inp.lam, inp.y
    f, g, h = y.u, y.v, y.w
    sq = principal_sqrt(lam)
    U, dU = _wave_integrals(lam, f, g)
    W, S = _heat_parts(lam, h)
    r1 = lam * U[-1] + f.values[-1] + W[0]
    r2 = dU[-1] + sq * W[0]
    a, b = _solve2(lam, r1, r2)
    xw = f.nodes
    u = a * np.sinh(lam * (xw + 1.0)) - U
    u[0] = 0.0
    v = lam * u - f.values
    w = W + S + b * np.exp(-sq * h.nodes)
    du0 = a * lam * np.cosh(lam) - dU[-1]
    dw0 = sq * W[0] - sq * b
    x = State(Variant.DIRICHLET_A, f.with_values(u), f.with_values(v), h.with_values(w))
    scale = max(abs(u).max(), abs(v).max(), abs(w).max(), abs(du0), 1e-300)
    report = ResolventReport(lam, a, b, float(abs(u[0])), float(abs(v[-1] - w[0])), float(abs(du0 - dw0)), float(scale))
    if not report.ok:
        logger.warning("resolvent coupling residual %.3e above tolerance", report.max_relative)
    return (x, report) if return_report else x


def discrete_generator(x: State) -> State:
    """``A_h x = (v, u'', w'')`` by fourth-order differences, without domain checks."""
    from .admissible import _image

    first, second, heat = _image(x)
    return State(Variant.NEUMANN_A, first, second, heat)


def resolvent_residual(lam, y: State, x: State = None) -> float:
    """``||(lam - A_h) x - y|| / ||y||`` in the state norm, ``x = R(lam, A) y`` unless given."""
    lam = as_complex(lam)
    if x is None:
        x = apply_resolvent(lam, y)
    ax = discrete_generator(x)
    r1 = lam * x.u.values - ax.u.values - y.u.values
    r2 = lam * x.v.values - ax.v.values - y.v.values
    r3 = lam * x.w.values - ax.w.values - y.w.values
    res = State(Variant.NEUMANN_A, x.u.with_values(r1), x.v.with_values(r2), x.w.with_values(r3))
    # r1 vanishes identically in exact arithmetic; measure it in the Dirichlet norm
    fu = res.u.derivative()
    num = math.sqrt(np.dot(fu.weights, abs(fu.values) ** 2) + res.v.l2_norm() ** 2 + res.w.l2_norm() ** 2)
    den = state_norm(y)
    if den == 0:
        return 0.0
    return num / den


# norm estimation -----------------------------------------------------------

def _flip(x: State) -> State:
    # J = diag(-1, 1, 1): the adjoint satisfies A* = J A J, so R(is)* = J R(-is) J
    return x.replace(u=-x.u)


@dataclass(frozen=True)
class ScanPoint:
    s: float
    norm_estimate: float
    iterations: int
    grid_n: int
    truncation: float
    heat_n: int = 0
    converged: bool = True

    def __post_init__(self):
        if not self.norm_estimate > 0:
            raise ContractViolation("norm estimate must be positive")
        if self.s == 0:
            raise ContractViolation("s must be nonzero")


def _start_vector(s, wave_n, heat_n, L):
    k = math.sqrt(abs(s) / 2.0)
    xw = np.linspace(-1.0, 0.0, wave_n)
    xh = np.linspace(0.0, L, heat_n)
    f = np.sin(0.5 * np.pi * (xw + 1.0)) + 0.3 * np.sin(2.5 * np.pi * (xw + 1.0))
    g = np.cos(0.5 * np.pi * xw) + 0.2
    # a profile spread over the whole truncated half-line picks up the slow heat
    # modes that dominate as s -> 0; the exponentials seed the interface modes
    h = np.cos(0.5 * np.pi * xh / L) + np.exp(-k * xh) * np.cos(k * xh) + np.exp(-xh)
    return State(Variant.DIRICHLET_A, GridFunction(-1.0, 0.0, f.astype(complex)),
                 GridFunction(-1.0, 0.0, g.astype(complex)), GridFunction(0.0, L, h.astype(complex)))


def resolvent_norm(s, grid_n=2001, tol=POWER_TOL, max_iter=POWER_MAX_ITER, heat_spacing=BASE_HEAT_SPACING,
                   start: State = None) -> ScanPoint:
    """Estimate ``||R(is, A)||`` by power iteration on ``R(is)* R(is)``.

    Grids follow :func:`grid_policy`; ``grid_n`` is the minimum number of wave
    points.  Each estimate ``||R y|| / ||y||`` is a lower bound for the norm
    of the discrete map, so the iteration climbs monotonically in practice.
    """
    s = float(s)
    if s == 0 or not math.isfinite(s):
        raise ContractViolation("s must be finite and nonzero")
    grid_n = check_int(grid_n, "grid_n", 101)
    lam = 1j * s
    n_wave, n_heat, L = grid_policy(lam, grid_n, heat_spacing)
    y = start if start is not None else _start_vector(s, n_wave, n_heat, L)
    y = y * (1.0 / state_norm(y))
    prev = prev2 = None
    for it in range(1, max_iter + 1):
        x = apply_resolvent(lam, y)
        est = state_norm(x)
        z = _flip(apply_resolvent(-lam, _flip(x)))
        nz = state_norm(z)
        if nz == 0:
            break
        y = z * (1.0 / nz)
        if prev is not None and abs(est - prev) <= tol * est:
            return ScanPoint(s, est, it, n_wave, L, n_heat, True)
        prev2, prev = prev, est
    raise ConvergenceError(
        f"power iteration at s={s:.6g} did not converge in {max_iter} steps (last estimates {prev2}, {prev})",
        last=(prev2, prev),
    )


def _workers():
    env = os.environ.get("WAVEKILN_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ContractViolation(f"WAVEKILN_THREADS must be an integer, got {env!r}") from None
    return min(4, os.cpu_count() or 1)


def scan_frequencies(s_min, s_max, points_per_decade):
    """Log-spaced positive frequencies: ``points_per_decade`` per decade plus the right endpoint."""
    s_min = check_positive(s_min, "s_min")
    s_max = check_positive(s_max, "s_max")
    if not s_max > s_min:
        raise ContractViolation("s_max must exceed s_min")
    ppd = check_int(points_per_decade, "points_per_decade", 1)
    decades = math.log10(s_max / s_min)
    n = int(round(decades * ppd))
    if abs(n - decades * ppd) > 1e-9:
        n = int(math.ceil(decades * ppd))
    return s_min * (s_max / s_min) ** (np.arange(n + 1) / n)


def peak_frequencies(s_min, s_max, kind=CharacteristicKind.DIRICHLET_A, max_points=None):
    """Imaginary parts of eigenvalues with ordinates in ``[s_min, s_max]``.

    With ``max_points`` only that many log-spaced branches are solved.
    """
    from .spectral import branch_ordinate, branch_root

    k_lo = 1
    while branch_ordinate(kind, k_lo) + math.pi / 2 < s_min:
        k_lo += 1
    k_hi = k_lo
    while branch_ordinate(kind, k_hi + 1) - math.pi / 2 <= s_max:
        k_hi += 1
    ks = np.arange(k_lo, k_hi + 1)
    if max_points is not None and ks.size > max_points:
        ks = np.unique(np.round(np.geomspace(k_lo, k_hi, max_points)).astype(int))
    out = [branch_root(kind, int(k)).lam.imag for k in ks]
    return np.asarray([t for t in out if s_min <= t <= s_max])


def scan(s_min, s_max, points_per_decade=8, grid_n=2001, refine_peaks=False, peak_points=None,
         workers=None, **kwargs):
    """Resolvent-norm estimates along the positive imaginary axis, sorted by ``s``.

    ``R(-is) = conj-symmetric`` to ``R(is)`` (real coefficients), so negative
    frequencies carry no new information.  With ``refine_peaks`` the
    eigenvalue ordinates in the range are added as sample points.
    """
    s_vals = list(scan_frequencies(s_min, s_max, points_per_decade))
    if refine_peaks:
        s_vals += list(peak_frequencies(s_min, s_max, max_points=peak_points))
    s_vals = sorted(set(float(s) for s in s_vals))
    workers = workers or _workers()
    if workers > 1 and len(s_vals) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            points = list(ex.map(lambda s: resolvent_norm(s, grid_n, **kwargs), s_vals))
    else:
        points = [resolvent_norm(s, grid_n, **kwargs) for s in s_vals]
    return sorted(points, key=lambda p: p.s)


# approximate eigenvectors on the continuous spectrum ------------------------

def _mollifier(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def smoothstep(t):
    """Smooth transition from 0 (t <= 0) to 1 (t >= 1) built from ``exp(-1/t)``."""
    a = _mollifier(t)
    b = _mollifier(1.0 - np.asarray(t, dtype=float))
    return a / (a + b)


def bump(z):
    """Smooth bump equal to 1 on ``|z| <= 1/2`` and 0 on ``|z| >= 1``."""
    return smoothstep(2.0 * (1.0 - np.abs(np.asarray(z, dtype=float))))


def approx_eigvec(lam, n, heat_L=None, points_per_unit=20) -> State:
    """``(0, 0, h_n)`` with ``h_n(xi) = exp(i sqrt(-lam) xi) / sqrt(n) * bump(xi/n - 1)``."""
    lam = as_complex(lam)
    if lam.imag != 0 or lam.real > 0:
        raise ContractViolation("approximate eigenvectors are defined for real lambda <= 0")
    n = check_int(n, "n", 1)
    L = float(2 * n if heat_L is None else heat_L)
    if L < 2 * n:
        raise ContractViolation(f"heat grid [0, {L}] is shorter than the bump support [0, {2 * n}]")
    heat_n = odd_points(int(math.ceil(points_per_unit * L)) + 1)
    xh = np.linspace(0.0, L, heat_n)
    mu = math.sqrt(-lam.real)
    h = np.exp(1j * mu * xh) / math.sqrt(n) * bump(xh / n - 1.0)
    wave_n = 101
    zero = GridFunction(-1.0, 0.0, np.zeros(wave_n, dtype=complex))
    return State(Variant.DIRICHLET_A, zero, zero, GridFunction(0.0, L, h))


def approx_eigvec_residual(lam, n, **kwargs):
    """``(||(lam - A_h) x_n||, ||x_n||)``."""
    x = approx_eigvec(lam, n, **kwargs)
    ax = discrete_generator(x)
    lam = complex(lam)
    r = x.w.with_values(lam * x.w.values - ax.w.values)
    return r.l2_norm(), state_norm(x)
