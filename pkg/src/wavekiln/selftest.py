"""Fast invariant suite behind ``wavekiln --self-test`` (well under a minute)."""

from __future__ import annotations

import math
import sys
import time

import numpy as np


def _anchor():
    from .spectral import char_value

    return abs(char_value("DirichletA", 1.0) - math.e) / math.e < 1e-12


def _sqrt_branch():
    from .spectral import principal_sqrt

    rng = np.random.default_rng(0)
    lam = rng.standard_normal(10_000) * 10 + 1j * rng.standard_normal(10_000) * 10
    r = principal_sqrt(lam)
    return bool(np.all(np.abs(r * r - lam) <= 1e-14 * np.abs(lam) * 4) and np.all(r.real > 0))


def _axis_margin():
    from .spectral import axis_margin

    lo = min(axis_margin("DirichletA", 1e-3, 1e-1), axis_margin("DirichletA", 10, 1e4))
    return lo >= 1.0 / 3.0 and axis_margin("DirichletA", 1e-4, 1e4) > 0


def _roots_left():
    from .spectral import find_roots

    roots = find_roots("DirichletA", (-3.0, -1e-6, 0.0, 20.0))
    return len(roots) > 0 and all(r.lam.real < 0 and r.residual < 1e-10 for r in roots)


def _weights():
    from .corestate import GridFunction

    g = GridFunction.zeros(0.0, 3.7, 101)
    return abs(g.weights.sum() - 3.7) <= 1e-12 * 3.7


def _resolvent_identity():
    from .corestate import State
    from .resolvent import grid_policy, resolvent_residual

    n_w, n_h, L = grid_policy(1j, wave_n=801)
    y = State.from_functions("DirichletA", lambda x: (x + 1) * np.cos(3 * x), lambda x: 1 + np.sin(2 * x),
                             lambda r: np.exp(-r * r / 8), wave_n=n_w, heat_n=n_h, heat_L=L)
    return resolvent_residual(1j, y) < 1e-6


def _neumann_kernel():
    from .admissible import apply_generator
    from .corestate import State

    x = State.from_functions("NeumannA", 1.0, 0.0, 0.0, wave_n=51, heat_n=101, heat_L=10)
    img = apply_generator(x)
    return all(not np.any(c.values) for c in (img.u, img.v, img.w))


def _admissible():
    from .admissible import check_range, make_admissible
    from .profiles import random_domain_state

    return all(check_range(make_admissible(random_domain_state(v, s, level=2))).passed
               for v in ("DirichletA", "NeumannB") for s in range(3))


def _energy_decrease():
    from .profiles import random_domain_state
    from .timedomain import SimConfig, resample, run

    cfg = SimConfig.default("DirichletA", 5.0, wave_n=101, heat_spacing=0.1)
    x = resample(random_domain_state("DirichletA", 1), cfg.wave_n, cfg.heat_n, cfg.heat_L)
    E = run(x, cfg).energies
    return bool(np.all(np.diff(E) <= 1e-12 * E[0]))


def _mass():
    from .timedomain import neumann_growth_demo

    tr = neumann_growth_demo(1.0, 10.0, sample_every=5)
    return tr.meta["mass_drift"] < 1e-6


def _densify():
    from .admissible import check_range, densify_distance, densify_range
    from .profiles import random_domain_state

    y = random_domain_state("NeumannA", 2, level=1, heat_n=1601, amplitude=0.1)
    y0, _ = densify_range(y, 0.5)
    return check_range(y0).passed and densify_distance(y, y0) < 1.5


CHECKS = [
    ("characteristic anchor char(1) = e", _anchor),
    ("principal sqrt squares back, Re > 0", _sqrt_branch),
    ("imaginary-axis margin", _axis_margin),
    ("roots lie in the left half-plane", _roots_left),
    ("quadrature weights sum to the length", _weights),
    ("resolvent identity (i - A_h) R(i) y = y", _resolvent_identity),
    ("NeumannA kernel (1,0,0) maps to 0", _neumann_kernel),
    ("make_admissible output passes the range check", _admissible),
    ("Dirichlet energy non-increasing", _energy_decrease),
    ("NeumannA discrete mass conserved", _mass),
    ("range densification within 3 epsilon", _densify),
]


def run_self_test(stream=None) -> bool:
    stream = stream or sys.stdout
    ok_all = True
    for name, fn in CHECKS:
        t0 = time.perf_counter()
        try:
            ok = bool(fn())
            err = ""
        except Exception as exc:  # report and keep going
            ok, err = False, f" ({type(exc).__name__}: {exc})"
        ok_all &= ok
        print(f"{'PASS' if ok else 'FAIL'} {name} [{time.perf_counter() - t0:.2f}s]{err}", file=stream)
    print(f"self-test {'passed' if ok_all else 'FAILED'}", file=stream)
    return ok_all
