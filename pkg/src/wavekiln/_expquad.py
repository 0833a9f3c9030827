"""Running integrals against exponential kernels on uniform grids.

``exp_cumulative(phi, h, mu)`` returns, at every node ``x_j``,

    C_j = int_{x_0}^{x_j} exp(mu (x_j - r)) phi(r) dr

using product integration: on each panel the exponential is integrated
exactly against the cubic Lagrange interpolant of ``phi`` through four
neighbouring nodes, and panels are chained by ``C_{j+1} = e^{mu h} C_j + P_j``.
Accuracy therefore does not degrade when ``|mu| h`` is large.
"""

import numpy as np
from scipy.signal import lfilter

_SERIES_RADIUS = 1.0
_SERIES_TERMS = 30

# cubic Lagrange basis on offsets (-1, 0, 1, 2), (0, 1, 2, 3), (-2, -1, 0, 1);
# monomial coefficients in t of each basis polynomial, row per node
_STENCILS = {}
for _name, _offs in (("mid", (-1, 0, 1, 2)), ("first", (0, 1, 2, 3)), ("last", (-2, -1, 0, 1))):
    _rows = []
    for _i, _oi in enumerate(_offs):
        _p = np.poly1d([1.0])
        for _k, _ok in enumerate(_offs):
            if _k != _i:
                _p = _p * np.poly1d([1.0, -_ok]) / (_oi - _ok)
        _rows.append(_p.coeffs[::-1])  # ascending powers
    _STENCILS[_name] = (np.asarray(_offs), np.asarray(_rows))


def exp_moments(z):
    """``m_k = int_0^1 t^k exp(z (1 - t)) dt`` for k = 0..3."""
    z = complex(z)
    if abs(z) < _SERIES_RADIUS:
        out = np.zeros(4, dtype=complex)
        for k in range(4):
            term = 1.0 / (k + 1)  # n = 0 term: k!/(k+1)!
            acc = term
            for n in range(1, _SERIES_TERMS):
                term = term * z / (k + n + 1)
                acc += term
            out[k] = acc
        return out
    m = np.empty(4, dtype=complex)
    m[0] = np.expm1(z) / z
    for k in range(1, 4):
        m[k] = (k * m[k - 1] - 1.0) / z
    return m


def panel_weights(z, h):
    """Weights per stencil: ``P = sum_i w_i phi[j + off_i]`` for a panel with ``z = mu h``."""
    m = exp_moments(z)
    return {name: (offs, h * rows @ m) for name, (offs, rows) in _STENCILS.items()}


def panel_integrals(phi, h, mu, order=3):
    """``P_j = int_{x_j}^{x_{j+1}} exp(mu (x_{j+1} - r)) phi(r) dr`` for every panel.

    ``order=1`` uses the linear interpolant on each panel instead, which
    never looks past the panel ends (exact for data with jumps at nodes).
    """
    phi = np.asarray(phi)
    n = phi.shape[0]
    if order == 1:
        m = exp_moments(mu * h)
        return h * ((m[0] - m[1]) * phi[:-1] + m[1] * phi[1:])
    if order != 3:
        raise ValueError("order must be 1 or 3")
    if n < 4:
        raise ValueError("product integration needs at least 4 nodes")
    weights = panel_weights(mu * h, h)
    out = np.empty(n - 1, dtype=complex)
    offs, w = weights["mid"]
    j = np.arange(1, n - 2)
    out[1:n - 2] = sum(wi * phi[j + o] for wi, o in zip(w, offs))
    offs, w = weights["first"]
    out[0] = sum(wi * phi[o] for wi, o in zip(w, offs))
    offs, w = weights["last"]
    out[n - 2] = sum(wi * phi[n - 2 + o] for wi, o in zip(w, offs))
    return out


def exp_cumulative(phi, h, mu, order=3):
    """Running exponential-kernel integral from the left end (see module docstring)."""
    mu = complex(mu)
    p = panel_integrals(phi, h, mu, order)
    growth = np.exp(mu * h)
    out = np.empty(p.shape[0] + 1, dtype=complex)
    out[0] = 0.0
    out[1:] = lfilter([1.0], [1.0, -growth], p)
    return out


def exp_cumulative_reverse(phi, h, kappa, order=3):
    """``B_j = int_{x_j}^{x_end} exp(-kappa (r - x_j)) phi(r) dr`` at every node."""
    return exp_cumulative(np.asarray(phi)[::-1], h, -complex(kappa), order)[::-1]
