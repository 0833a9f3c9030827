"""Test-side utilities: independent oracles that the package itself does not expose."""

import numpy as np
from scipy.interpolate import CubicSpline

from wavekiln.corestate import GridFunction, State


def x_inner(a: State, b: State) -> complex:
    """DirichletA inner product <u', U'> + <v, V> + <w, W>."""
    return a.u.derivative().inner(b.u.derivative()) + a.v.inner(b.v) + a.w.inner(b.w)


def flip(x: State) -> State:
    return x.replace(u=-x.u)


def reconstruct_dirichlet(y: State) -> State:
    """Preimage of ``y = (f, g, h)`` under ``(u, v, w) -> (v, u'', w'')``.

    w is the iterated tail integral of h, v = f, and
    u(xi) = int_{-1}^xi int_{-1}^t g + (w'(0) - int g) (xi + 1).
    """
    f, g, h = y.u, y.v, y.w
    # spline antiderivatives keep the quadrature error smooth, so the
    # differences taken afterwards do not amplify node-to-node noise
    r = h.nodes
    H = CubicSpline(r, h.values).antiderivative(2)
    end = r[-1]
    t1_0 = H(end, 1) - H(0.0, 1)
    w = H(r) - H(end) - H(end, 1) * (r - end)
    xi = g.nodes
    G = CubicSpline(xi, g.values).antiderivative(2)
    G1 = G(xi, 1) - G(-1.0, 1)
    GG = G(xi) - G(-1.0) - G(-1.0, 1) * (xi + 1.0)
    u = GG + (-t1_0 - G1[-1]) * (xi + 1.0)
    return State(y.variant, g.with_values(u), f, h.with_values(w))


def direct_green(lam, h: GridFunction):
    """O(n^2) trapezoid evaluation of the half-line convolution with e^{-sqrt(lam)|xi - r|} / (2 sqrt(lam))."""
    from wavekiln.spectral import principal_sqrt

    sq = principal_sqrt(lam)
    x = h.nodes
    K = np.exp(-sq * np.abs(x[:, None] - x[None, :])) / (2.0 * sq)
    wts = np.full(x.size, h.spacing)
    wts[0] = wts[-1] = 0.5 * h.spacing
    return K @ (wts * h.values)
