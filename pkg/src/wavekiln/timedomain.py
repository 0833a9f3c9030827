"""Time integration of the coupled wave-heat system.

Space: a staggered (mimetic) grid.  Wave velocity ``p`` lives at the wave
nodes, wave strain ``q`` at the cell centres, heat ``w`` at the heat nodes.
The interface node is shared, ``p_N = w_0``, and carries the lumped mass
``h/2 + h_w/2``; the two coupling conditions are then built in and the
interface flux cancels identically.

Time: implicit midpoint (Crank-Nicolson for the whole linear system).  The
discrete energy then satisfies

    E^{n+1} - E^n = -dt * sum_k (w_{k+1} - w_k)^2 / h_w   at the midpoint state,

exactly, and with a zero-flux far end the discrete mass
``sum m_j p_j + sum m_k w_k`` is conserved exactly.  The scheme is second
order in space and time and unconditionally stable; the step-size bound
``dt <= 0.9 h`` is kept as a contract so that waves stay time-resolved.

NeumannA and NeumannB share the same dynamics: the first slot is the
displacement for NeumannA and the slope for NeumannB.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import asdict, dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_int, check_positive
from .corestate import DEFAULT_HEAT_LENGTH, EnergyTrace, GridFunction, State, Variant, odd_points
from .exceptions import ContractViolation, EnergyDriftError, MassDriftError, TruncationError
from .fitting import DecayFit, PowerLawFit

logger = logging.getLogger(__name__)

CFL_LIMIT = 0.9
BALANCE_TOL = 1e-3
MASS_TOL = 1e-6
MONITOR_TOL = 1e-6
MONITOR_FRACTION = 0.1
DEFAULT_WINDOW = (0.3, 0.9)


class FarBoundary(str, enum.Enum):
    DIRICHLET_ZERO = "dirichlet_zero"
    NEUMANN_ZERO = "neumann_zero"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        for m in cls:
            if m.value == str(value).lower():
                return m
        raise ContractViolation(f"unknown far boundary {value!r}; expected dirichlet_zero or neumann_zero")


def min_heat_length(t_final):
    """Diffusion-front containment: three widths of ``2 sqrt(t)`` plus a margin of 5."""
    return 6.0 * math.sqrt(t_final) + 5.0


def default_heat_length(t_final):
    # a Gaussian front still has relative amplitude ~1e-4 at three widths;
    # 9 sqrt(t) keeps the last tenth of the domain below the 1e-6 monitor
    return max(DEFAULT_HEAT_LENGTH, math.ceil(9.0 * math.sqrt(t_final) + 5.0))


@dataclass(frozen=True)
class SimConfig:
    variant: Variant
    t_final: float
    dt: float
    wave_n: int
    heat_n: int
    heat_L: float = DEFAULT_HEAT_LENGTH
    far_bc: FarBoundary = FarBoundary.DIRICHLET_ZERO
    monitor_tol: float = MONITOR_TOL
    check_length: bool = True

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant.parse(self.variant))
        object.__setattr__(self, "far_bc", FarBoundary.parse(self.far_bc))
        check_positive(self.t_final, "t_final")
        check_positive(self.dt, "dt")
        check_int(self.wave_n, "wave_n", 5)
        check_int(self.heat_n, "heat_n", 5)
        check_positive(self.heat_L, "heat_L")
        if self.dt > CFL_LIMIT * self.wave_spacing * (1 + 1e-12):
            raise ContractViolation(
                f"dt={self.dt:.6g} exceeds {CFL_LIMIT} x wave spacing {self.wave_spacing:.6g}"
            )
        if self.check_length and self.heat_L < min_heat_length(self.t_final) * (1 - 1e-12):
            raise ContractViolation(
                f"heat_L={self.heat_L:.6g} is below 6 sqrt(t_final) + 5 = {min_heat_length(self.t_final):.6g}"
            )

    @property
    def wave_spacing(self):
        return 1.0 / (self.wave_n - 1)

    @property
    def heat_spacing(self):
        return self.heat_L / (self.heat_n - 1)

    @property
    def n_steps(self):
        return int(math.ceil(self.t_final / self.dt - 1e-9))

    @classmethod
    def default(cls, variant, t_final, wave_n=201, heat_spacing=0.05, cfl=0.5, heat_L=None, **kw):
        """Config with ``dt = cfl * h`` and ``heat_L = max(40, 9 sqrt(t) + 5)``."""
        L = heat_L if heat_L is not None else default_heat_length(t_final)
        heat_n = odd_points(int(math.ceil(L / heat_spacing)) + 1)
        return cls(variant, t_final, cfl / (wave_n - 1), wave_n, heat_n, float(L), **kw)

    def as_dict(self):
        d = asdict(self)
        d["variant"] = self.variant.value
        d["far_bc"] = self.far_bc.value
        return d


class _System:
    """Mass matrix, generator matrix and factorized midpoint operator for a config."""

    def __init__(self, config: SimConfig):
        self.config = config
        N = config.wave_n - 1
        M = config.heat_n - 1
        h, hw = config.wave_spacing, config.heat_spacing
        self.N, self.M, self.h, self.hw = N, M, h, hw
        # full layout: p_0..p_N (p_N is the shared interface value), w_1..w_M, q_0..q_{N-1}
        ip = np.arange(N + 1)
        iw = np.concatenate([[N], N + np.arange(1, M + 1)])  # w_k -> index, w_0 = p_N
        iq = N + M + 1 + np.arange(N)
        size = N + M + 1 + N
        mass = np.zeros(size)
        rows, cols, vals = [], [], []

        def add(r, c, v):
            rows.append(r)
            cols.append(c)
            vals.append(v)

        mass[iq] = h
        for i in range(N):
            add(iq[i], ip[i + 1], 1.0)
            add(iq[i], ip[i], -1.0)
        mass[ip[1:N]] = h
        for j in range(1, N):
            add(ip[j], iq[j], 1.0)
            add(ip[j], iq[j - 1], -1.0)
        mass[ip[0]] = 0.5 * h
        add(ip[0], iq[0], 1.0)
        # interface node: wave half cell + heat half cell, flux eliminated
        mass[ip[N]] = 0.5 * h + 0.5 * hw
        add(ip[N], iq[N - 1], -1.0)
        add(ip[N], iw[1], 1.0 / hw)
        add(ip[N], ip[N], -1.0 / hw)
        for k in range(1, M):
            mass[iw[k]] = hw
            add(iw[k], iw[k - 1], 1.0 / hw)
            add(iw[k], iw[k], -2.0 / hw)
            add(iw[k], iw[k + 1], 1.0 / hw)
        mass[iw[M]] = 0.5 * hw
        add(iw[M], iw[M - 1], 1.0 / hw)
        add(iw[M], iw[M], -1.0 / hw)
        K = sp.csr_matrix((vals, (rows, cols)), shape=(size, size))

        active = np.ones(size, dtype=bool)
        if config.variant is Variant.DIRICHLET_A:
            active[ip[0]] = False
        if config.far_bc is FarBoundary.DIRICHLET_ZERO:
            active[iw[M]] = False
        self.ip, self.iw, self.iq, self.size = ip, iw, iq, size
        self.active = active
        self.mass = mass
        act = np.nonzero(active)[0]
        Ka = K[act][:, act]
        Ma = sp.diags(mass[act])
        dt = config.dt
        self.K = Ka
        self.lhs = splu((Ma - 0.5 * dt * Ka).tocsc())
        self.rhs = (Ma + 0.5 * dt * Ka).tocsr()
        self.act = act
        self.mass_act = mass[act]
        # trapezoid weights on the nodes for the displacement norm
        self.wave_trap = np.full(N + 1, h)
        self.wave_trap[[0, -1]] = 0.5 * h

    # state conversion ----------------------------------------------------
    def pack(self, x: State):
        cfg = self.config
        if x.variant is not cfg.variant:
            raise ContractViolation(f"state variant {x.variant.value} does not match config {cfg.variant.value}")
        if x.u.n_points != cfg.wave_n or x.w.n_points != cfg.heat_n or abs(x.w.right - cfg.heat_L) > 1e-9 * cfg.heat_L:
            raise ContractViolation("state grids do not match the simulation config")
        dtype = complex if x.is_complex else float
        z = np.zeros(self.size, dtype=dtype)
        z[self.ip] = x.v.values
        theta = 0.5 * (x.v.values[-1] + x.w.values[0])
        z[self.ip[-1]] = theta
        z[self.iw[1:]] = x.w.values[1:]
        u = np.asarray(x.u.values)
        if cfg.variant is Variant.NEUMANN_B:
            z[self.iq] = 0.5 * (u[1:] + u[:-1])
            disp = None
        else:
            z[self.iq] = np.diff(u) / self.h
            disp = u.astype(dtype).copy()
        z[~self.active] = 0.0
        return z, disp

    def unpack(self, z, disp, template: State) -> State:
        cfg = self.config
        p = z[self.ip]
        w = np.concatenate([[z[self.ip[-1]]], z[self.iw[1:]]])
        if cfg.variant is Variant.NEUMANN_B:
            q = z[self.iq]
            slope = np.empty(self.N + 1, dtype=q.dtype)
            slope[1:-1] = 0.5 * (q[1:] + q[:-1])
            slope[0] = 0.0
            slope[-1] = 1.5 * q[-1] - 0.5 * q[-2]
            first = slope
        else:
            first = disp
        return State(cfg.variant, template.u.with_values(first), template.v.with_values(p), template.w.with_values(w))

    # dynamics --------------------------------------------------------------
    def advance(self, za):
        r = self.rhs @ za
        if np.iscomplexobj(r):
            return self.lhs.solve(r.real) + 1j * self.lhs.solve(r.imag)
        return self.lhs.solve(r)

    def full(self, za):
        z = np.zeros(self.size, dtype=za.dtype)
        z[self.act] = za
        return z

    def energy(self, za):
        return 0.5 * float(np.dot(self.mass_act, np.abs(za) ** 2))

    def heat_nodes(self, z):
        return np.concatenate([[z[self.ip[-1]]], z[self.iw[1:]]])

    def dissipation(self, z):
        w = self.heat_nodes(z)
        return float(np.sum(np.abs(np.diff(w)) ** 2) / self.hw)

    def mass_functional(self, z):
        # int v + int w: the strain unknowns do not carry mass
        m = self.mass.copy()
        m[self.iq] = 0.0
        val = np.dot(m, z)
        return complex(val) if np.iscomplexobj(z) else float(val)

    def x_norm(self, za, disp):
        e2 = 2.0 * self.energy(za)
        if self.config.variant is Variant.NEUMANN_A and disp is not None:
            e2 += float(np.dot(self.wave_trap, np.abs(disp) ** 2))
        return math.sqrt(e2)


_SYSTEM_CACHE = {}


def _system(config: SimConfig) -> _System:
    key = (config.variant, config.dt, config.wave_n, config.heat_n, config.heat_L, config.far_bc)
    sys_ = _SYSTEM_CACHE.get(key)
    if sys_ is None:
        if len(_SYSTEM_CACHE) > 8:
            _SYSTEM_CACHE.clear()
        sys_ = _SYSTEM_CACHE[key] = _System(config)
    return sys_


def step(state: State, config: SimConfig) -> State:
    """Advance ``state`` by one step of ``config.dt``."""
    sys_ = _system(config)
    z, disp = sys_.pack(state)
    za = z[sys_.act]
    zn = sys_.advance(za)
    full_new = sys_.full(zn)
    if disp is not None:
        disp = disp + 0.5 * config.dt * (z[sys_.ip] + full_new[sys_.ip])
    return sys_.unpack(full_new, disp, state)


def simulate(initial: State, config: SimConfig, sample_every=1, check_balance=True, monitor=True,
             callback=None):
    """Run to ``t_final``; returns ``(trace, final_state)``.  See :func:`run`."""
    sample_every = check_int(sample_every, "sample_every", 1)
    sys_ = _system(config)
    z, disp = sys_.pack(initial)
    za = z[sys_.act]
    dt = config.dt
    n_steps = config.n_steps
    E0 = sys_.energy(za)
    tail = sys_.heat_nodes(z).shape[0]
    tail_start = int(math.floor((1.0 - MONITOR_FRACTION) * (tail - 1)))
    times, energies, diss, norms, masses = [0.0], [E0], [sys_.dissipation(z)], [sys_.x_norm(za, disp)], []
    masses.append(sys_.mass_functional(z))
    cum = 0.0
    drift = 0.0
    full_prev = z
    ref_amp = config.monitor_tol * math.sqrt(E0) if E0 > 0 else 0.0
    for n in range(1, n_steps + 1):
        zn = sys_.advance(za)
        full_new = sys_.full(zn)
        cum += dt * sys_.dissipation(0.5 * (full_prev + full_new))
        if disp is not None:
            disp = disp + 0.5 * dt * (full_prev[sys_.ip] + full_new[sys_.ip])
        za, full_prev = zn, full_new
        if n % sample_every == 0 or n == n_steps:
            E = sys_.energy(za)
            if E0 > 0:
                drift = max(drift, abs(E - E0 + cum) / E0)
            times.append(n * dt)
            energies.append(E)
            diss.append(sys_.dissipation(full_new))
            norms.append(sys_.x_norm(za, disp))
            masses.append(sys_.mass_functional(full_new))
            if monitor and E0 > 0:
                far = np.max(np.abs(sys_.heat_nodes(full_new)[tail_start:]))
                if far > ref_amp:
                    raise TruncationError(
                        f"heat amplitude {far:.3e} in the last {MONITOR_FRACTION:.0%} of the domain at t={n * dt:.6g} "
                        f"exceeds {config.monitor_tol:.1e} sqrt(E0); increase heat_L"
                    )
            if callback is not None:
                callback(n * dt, sys_.unpack(full_new, None if disp is None else disp.copy(), initial))
    if check_balance and config.variant in (Variant.DIRICHLET_A, Variant.NEUMANN_B) and drift > BALANCE_TOL:
        raise EnergyDriftError(drift, BALANCE_TOL)
    mass_arr = np.asarray(masses)
    meta = {
        "config": config.as_dict(),
        "steps": n_steps,
        "balance_drift": drift,
        "dissipated": cum,
        "mass_complex": bool(np.iscomplexobj(mass_arr)),
    }
    trace = EnergyTrace(np.asarray(times), np.asarray(energies), np.asarray(diss), np.asarray(norms),
                        np.real(mass_arr) if not np.iscomplexobj(mass_arr) else np.abs(mass_arr), meta)
    final = sys_.unpack(full_prev, disp, initial)
    return trace, final


def run(initial: State, config: SimConfig, sample_every=1, **kwargs) -> EnergyTrace:
    """Integrate to ``t_final`` recording energy, instantaneous dissipation, state norm and mass.

    The discrete balance ``|E(t_k) - E(0) + int_0^t_k D|`` is tracked with the
    scheme's own midpoint dissipation and must stay below ``1e-3 E(0)`` for
    DirichletA and NeumannB.  A heat amplitude above ``monitor_tol * sqrt(E0)``
    in the last tenth of the domain aborts the run.
    """
    return simulate(initial, config, sample_every, **kwargs)[0]


def decay_fit(trace: EnergyTrace, window_fraction=DEFAULT_WINDOW, window=None) -> DecayFit:
    """Log-log fit of energy against time on ``window`` (absolute) or ``window_fraction`` of ``t_final``."""
    t = trace.times
    if window is None:
        lo, hi = window_fraction
        if not 0 < lo < hi <= 1:
            raise ContractViolation("window fractions must satisfy 0 < lo < hi <= 1")
        t_end = t[-1]
        window = (lo * t_end, hi * t_end)
    mask = (t >= window[0] - 1e-12) & (t <= window[1] + 1e-12)
    if np.any(trace.energies[mask] <= 0):
        raise ContractViolation("energy must be strictly positive on the fit window")
    return PowerLawFit(x_range=(window[0] - 1e-12, window[1] + 1e-12)).fit(t, trace.energies).to_decay_fit()


def resample(x: State, wave_n, heat_n, heat_L) -> State:
    """Cubic-spline transfer of ``x`` onto new grids; the heat profile is zero beyond its old range."""
    from scipy.interpolate import CubicSpline

    def tx(gf, left, right, n, extend_zero=False):
        xs = np.linspace(left, right, n)
        spline = CubicSpline(gf.nodes, gf.values)
        vals = spline(np.clip(xs, gf.left, gf.right))
        if extend_zero:
            vals = np.where(xs > gf.right, 0.0, vals)
        return GridFunction(left, right, vals)

    u = tx(x.u, -1.0, 0.0, wave_n)
    if x.variant is Variant.DIRICHLET_A:
        u = u.with_values(np.concatenate([[0.0], u.values[1:]]))
    return State(x.variant, u, tx(x.v, -1.0, 0.0, wave_n), tx(x.w, 0.0, heat_L, heat_n, True))


def neumann_growth_demo(mass=1.0, t_final=100.0, wave_n=101, heat_spacing=0.1, initial: State = None,
                        sample_every=10, heat_L=None):
    """NeumannA run from ``(0, v, w)`` carrying the given conserved mass.

    Default data is ``v = mass`` on (-1, 0), ``w = 0``.  Returns the trace
    (with ``x_norm`` including the displacement) and checks that the discrete
    mass stays within 1e-6 relative of its initial value.
    """
    check_positive(t_final, "t_final")
    L = heat_L if heat_L is not None else default_heat_length(t_final)
    cfg = SimConfig.default(Variant.NEUMANN_A, t_final, wave_n=wave_n, heat_spacing=heat_spacing, heat_L=L,
                            far_bc=FarBoundary.NEUMANN_ZERO)
    if initial is None:
        if mass == 0:
            raise ContractViolation("mass must be nonzero for the default data (pass initial= otherwise)")
        initial = State.from_functions(Variant.NEUMANN_A, 0.0, float(mass), 0.0, wave_n=cfg.wave_n,
                                       heat_n=cfg.heat_n, heat_L=cfg.heat_L)
    trace = run(initial, cfg, sample_every=sample_every)
    m = trace.mass
    ref = max(abs(m[0]), 1e-300)
    dev = float(np.max(np.abs(m - m[0]))) / ref if abs(m[0]) > 0 else float(np.max(np.abs(m)))
    trace.meta["mass_drift"] = dev
    if abs(m[0]) > 0 and dev > MASS_TOL:
        raise MassDriftError(f"discrete mass drifted by {dev:.3e} relative (tolerance {MASS_TOL:.0e})")
    return trace


class DecayRateEstimator(BaseEstimator):
    """Simulate from an initial state and fit the energy decay exponent.

    ``fit(X)`` takes a :class:`State` (or a list with one) and stores
    ``trace_`` and ``decay_``; ``exponent_`` is the fitted power and
    ``predict(t)`` evaluates the fitted law.
    """

    def __init__(self, t_final=200.0, wave_n=201, heat_spacing=0.05, cfl=0.5, window=(60.0, 180.0),
                 sample_every=20):
        self.t_final = t_final
        self.wave_n = wave_n
        self.heat_spacing = heat_spacing
        self.cfl = cfl
        self.window = window
        self.sample_every = sample_every

    def config_for(self, variant) -> SimConfig:
        return SimConfig.default(variant, self.t_final, wave_n=self.wave_n, heat_spacing=self.heat_spacing,
                                 cfl=self.cfl)

    def fit(self, X, y=None):
        x = X[0] if isinstance(X, (list, tuple)) else X
        cfg = self.config_for(x.variant)
        if x.u.n_points != cfg.wave_n or x.w.n_points != cfg.heat_n or x.w.right != cfg.heat_L:
            x = resample(x, cfg.wave_n, cfg.heat_n, cfg.heat_L)
        self.trace_ = run(x, cfg, sample_every=self.sample_every)
        self.decay_ = decay_fit(self.trace_, window=self.window)
        self.exponent_ = self.decay_.exponent
        return self

    def predict(self, t):
        """Fitted energy ``amplitude * t**exponent`` at times ``t``."""
        check_is_fitted(self, "decay_")
        return self.decay_.predict(t)
