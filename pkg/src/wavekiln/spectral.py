"""Characteristic functions of the two generators and their zeros.

The point spectrum of each generator is the zero set, in the open left
half-plane, of

* ``cosh(lam) + sqrt(lam) * sinh(lam)`` for the Dirichlet system,
* ``sqrt(lam) * cosh(lam) + sinh(lam)`` for the Neumann slope formulation,

with the principal square root (cut along the negative real axis).
Zeros are located by counting with the argument principle on rectangles,
subdividing until each cell holds one zero, and polishing with Newton.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass

import numpy as np

from ._validation import as_complex, check_int, check_positive
from .exceptions import BranchNotFoundError, ContractViolation, IndeterminateCellError
from .fitting import DecayFit, power_law_fit

logger = logging.getLogger(__name__)

ROOT_TOLERANCE = 1e-10
NEWTON_STEP_TOL = 1e-13
CUT_GUARD = 1e-8
DISTINCT_TOL = 1e-8
BOUNDARY_POINTS = 1024
MAX_BOUNDARY_POINTS = 1 << 16
MAX_DEPTH = 24
MARGIN_POINTS_PER_DECADE = 512
_DE_HALF_WIDTH = 3.2


class CharacteristicKind(str, enum.Enum):
    DIRICHLET_A = "DirichletA"
    NEUMANN_B = "NeumannB"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        for member in cls:
            if member.value.lower() == str(value).lower():
                return member
        raise ContractViolation(f"unknown characteristic kind {value!r}")


def principal_sqrt(lam):
    """Square root with arguments in (-pi/2, pi/2].

    Points on the negative real axis map to the positive imaginary axis
    regardless of the sign of a zero imaginary part.
    """
    z = np.asarray(lam, dtype=complex)
    r = np.sqrt(z)
    on_cut = (z.imag == 0) & (z.real < 0)
    if np.any(on_cut):
        r = np.where(on_cut, 1j * np.sqrt(np.abs(z.real)), r)
    return r.item() if r.ndim == 0 else r


def char_value(kind, lam):
    """Characteristic function of ``kind`` at ``lam`` (scalar or array)."""
    kind = CharacteristicKind.parse(kind)
    z = np.asarray(lam, dtype=complex)
    sq = principal_sqrt(z)
    if kind is CharacteristicKind.DIRICHLET_A:
        out = np.cosh(z) + sq * np.sinh(z)
    else:
        out = sq * np.cosh(z) + np.sinh(z)
    return out.item() if np.ndim(out) == 0 else out


def char_derivative(kind, lam):
    """Complex derivative of :func:`char_value` (off the cut and off 0)."""
    kind = CharacteristicKind.parse(kind)
    z = np.asarray(lam, dtype=complex)
    sq = principal_sqrt(z)
    ch, sh = np.cosh(z), np.sinh(z)
    if kind is CharacteristicKind.DIRICHLET_A:
        out = sh + sh / (2.0 * sq) + sq * ch
    else:
        out = ch / (2.0 * sq) + sq * sh + ch
    return out.item() if np.ndim(out) == 0 else out


def _log_derivative(kind, z):
    """``f'/f`` of the function whose zeros are counted.

    For NeumannB the factor ``sqrt(lam)`` (zero at the origin, no zeros in the
    open left half-plane) is divided out so contours may pass close to 0.
    """
    ratio = char_derivative(kind, z) / char_value(kind, z)
    if kind is CharacteristicKind.NEUMANN_B:
        ratio = ratio - 0.5 / z
    return ratio


def _counting_value(kind, z):
    f = char_value(kind, z)
    if kind is CharacteristicKind.NEUMANN_B:
        f = f / principal_sqrt(z)
    return f


def axis_samples(s_min, s_max, points_per_decade=MARGIN_POINTS_PER_DECADE):
    decades = math.log10(s_max / s_min)
    n = max(2, int(math.ceil(decades * points_per_decade)) + 1)
    return np.logspace(math.log10(s_min), math.log10(s_max), n)


def axis_margin(kind, s_min, s_max, n_samples=None):
    """Minimum of ``|char(i s)|`` over log-spaced ``s`` in ``[s_min, s_max]`` and its mirror."""
    s_min = check_positive(s_min, "s_min")
    s_max = check_positive(s_max, "s_max")
    if not s_min < s_max:
        raise ContractViolation("axis_margin needs 0 < s_min < s_max")
    if n_samples is None:
        s = axis_samples(s_min, s_max)
    else:
        n = check_int(n_samples, "n_samples", 2)
        s = np.logspace(math.log10(s_min), math.log10(s_max), n)
    s = np.concatenate([s, -s])
    return float(np.min(np.abs(char_value(kind, 1j * s))))


@dataclass(frozen=True)
class Rect:
    """Closed rectangle ``[re_min, re_max] x [im_min, im_max]`` in the complex plane."""

    re_min: float
    re_max: float
    im_min: float
    im_max: float

    @property
    def is_empty(self):
        return not (self.re_max > self.re_min and self.im_max > self.im_min)

    @property
    def center(self):
        return complex(0.5 * (self.re_min + self.re_max), 0.5 * (self.im_min + self.im_max))

    @property
    def width(self):
        return self.re_max - self.re_min

    @property
    def height(self):
        return self.im_max - self.im_min

    def contains(self, z, pad=0.0):
        return (self.re_min - pad <= z.real <= self.re_max + pad
                and self.im_min - pad <= z.imag <= self.im_max + pad)

    def split(self, frac=0.5):
        if self.width >= self.height:
            cut = self.re_min + frac * self.width
            return (Rect(self.re_min, cut, self.im_min, self.im_max),
                    Rect(cut, self.re_max, self.im_min, self.im_max))
        cut = self.im_min + frac * self.height
        return (Rect(self.re_min, self.re_max, self.im_min, cut),
                Rect(self.re_min, self.re_max, cut, self.im_max))

    def corners(self):
        return [complex(self.re_min, self.im_min), complex(self.re_max, self.im_min),
                complex(self.re_max, self.im_max), complex(self.re_min, self.im_max)]

    def boundary(self, n):
        """Counter-clockwise path of about ``n`` equally spaced points (corners once)."""
        perim = 2.0 * (self.width + self.height)
        corners = self.corners()
        pts = []
        for a, b in zip(corners, corners[1:] + corners[:1]):
            m = max(8, int(round(n * abs(b - a) / perim)))
            pts.append(a + (b - a) * (np.arange(m) / m))
        return np.concatenate(pts)

    def quadrature(self, n):
        """Nodes and weights ``dz`` for contour integrals, ``n // 4`` per edge.

        Each edge uses the trapezoid rule after a double-exponential change of
        variables, which clusters nodes at the corners.
        """
        m = max(16, n // 4)
        x = np.linspace(-_DE_HALF_WIDTH, _DE_HALF_WIDTH, m + 1)
        arg = 0.5 * np.pi * np.sinh(x)
        t = 0.5 * (1.0 + np.tanh(arg))
        dt = 0.25 * np.pi * np.cosh(x) / np.cosh(arg) ** 2 * (x[1] - x[0])
        corners = self.corners()
        pts, dz = [], []
        for a, b in zip(corners, corners[1:] + corners[:1]):
            pts.append(a + (b - a) * t)
            dz.append((b - a) * dt)
        return np.concatenate(pts), np.concatenate(dz)

    def as_tuple(self):
        return (self.re_min, self.re_max, self.im_min, self.im_max)


@dataclass(frozen=True)
class RootRecord:
    lam: complex
    residual: float
    cell: Rect
    newton_iterations: int


def winding_number(kind, cell: Rect, n_points=BOUNDARY_POINTS):
    """Argument-principle count ``(1/2 pi i) \\oint f'/f`` by the trapezoid rule.

    The point count doubles until two successive estimates round to the same
    integer and sit within 0.05 of it.
    """
    previous = None
    n = n_points
    while n <= MAX_BOUNDARY_POINTS:
        z, dz = cell.quadrature(n)
        f = _counting_value(kind, z)
        if np.min(np.abs(f)) < 1e-12:
            raise IndeterminateCellError(cell.as_tuple(), "characteristic function vanishes on the contour")
        val = np.sum(_log_derivative(kind, z) * dz) / (2j * np.pi)
        count = round(val.real)
        near = abs(val - count) < 0.05
        if near and previous is not None and previous == count:
            return int(count)
        previous = count if near else None
        n *= 2
    raise IndeterminateCellError(cell.as_tuple(), "winding number did not stabilise")


def winding_number_by_argument(kind, cell: Rect, n_points=1 << 14):
    """Independent count: total change of ``arg f`` along a fine contour, divided by 2 pi."""
    z = cell.boundary(n_points)
    f = _counting_value(kind, np.append(z, z[0]))
    dphi = np.angle(f[1:] / f[:-1])
    if np.max(np.abs(dphi)) > 0.5 * np.pi:
        raise IndeterminateCellError(cell.as_tuple(), "contour too coarse for argument tracking")
    return int(round(np.sum(dphi) / (2 * np.pi)))


def _contour_centroid(kind, cell: Rect, n=BOUNDARY_POINTS * 4):
    """Location of the single zero inside ``cell`` from the first contour moment."""
    z, dz = cell.quadrature(n)
    return complex(np.sum(z * _log_derivative(kind, z) * dz) / (2j * np.pi))


def newton(kind, z0, max_iter=60):
    z = complex(z0)
    for it in range(1, max_iter + 1):
        f = char_value(kind, z)
        d = char_derivative(kind, z)
        if d == 0:
            return z, it, False
        step = f / d
        z -= step
        if z.real < 0 and abs(z.imag) < CUT_GUARD:
            return z, it, False
        if abs(step) < NEWTON_STEP_TOL * max(1.0, abs(z)):
            return z, it, True
    return z, max_iter, False


def _clip_region(region: Rect):
    """Pieces of ``region`` that avoid the cut by the guard strip."""
    if region.is_empty:
        return []
    if region.re_max >= 0:
        raise ContractViolation("search region must lie in the open left half-plane (re_max < 0)")
    pieces = []
    if region.im_max > CUT_GUARD:
        pieces.append(Rect(region.re_min, region.re_max, max(region.im_min, CUT_GUARD), region.im_max))
    if region.im_min < -CUT_GUARD:
        pieces.append(Rect(region.re_min, region.re_max, region.im_min, min(region.im_max, -CUT_GUARD)))
    return [p for p in pieces if not p.is_empty]


def _refine(kind, cell: Rect):
    seeds = [cell.center]
    for seed_fn in (lambda: _contour_centroid(kind, cell),):
        seeds.append(seed_fn())
    for seed in seeds:
        z, its, ok = newton(kind, seed)
        if not ok:
            continue
        res = abs(char_value(kind, z))
        pad = 1e-12 * max(1.0, abs(z))
        if res <= ROOT_TOLERANCE and cell.contains(z, pad) and z.real < 0:
            return RootRecord(z, float(res), cell, its)
    return None


_SPLIT_FRACTIONS = (0.5, 0.4617, 0.5383)


def _search(kind, cell: Rect, count: int, depth: int):
    if count == 0:
        return []
    if count == 1:
        rec = _refine(kind, cell)
        if rec is not None:
            return [rec]
    if depth >= MAX_DEPTH:
        reason = "multiple zero" if count > 1 else "Newton refinement failed"
        raise IndeterminateCellError(cell.as_tuple(), f"{reason} at maximum depth (count={count})")
    last_error = None
    for frac in _SPLIT_FRACTIONS:
        children = cell.split(frac)
        try:
            counts = [winding_number(kind, c) for c in children]
        except IndeterminateCellError as exc:
            last_error = exc
            continue
        if sum(counts) != count or min(counts) < 0:
            last_error = IndeterminateCellError(cell.as_tuple(), f"child counts {counts} do not sum to {count}")
            continue
        out = []
        for c, k in zip(children, counts):
            out.extend(_search(kind, c, k, depth + 1))
        return out
    raise last_error


def find_roots(kind, region, max_roots=1000):
    """Zeros of the characteristic function inside a left-half-plane rectangle.

    Parameters
    ----------
    kind : CharacteristicKind or str
    region : Rect or tuple ``(re_min, re_max, im_min, im_max)``
    max_roots : int
        Upper bound on the number of zeros accepted; exceeding it is an error.

    Returns
    -------
    list of RootRecord sorted by imaginary part.
    """
    kind = CharacteristicKind.parse(kind)
    check_int(max_roots, "max_roots", 1)
    if not isinstance(region, Rect):
        region = Rect(*map(float, region))
    roots = []
    for piece in _clip_region(region):
        count = _piece_count(kind, piece)
        if count > max_roots:
            raise ContractViolation(f"region holds {count} zeros, more than max_roots={max_roots}")
        found = _search(kind, piece, count, 0)
        if len(found) != count:
            raise IndeterminateCellError(piece.as_tuple(), f"found {len(found)} zeros, expected {count}")
        roots.extend(found)
    roots.sort(key=lambda r: (r.lam.imag, r.lam.real))
    for a, b in zip(roots, roots[1:]):
        if abs(a.lam - b.lam) < DISTINCT_TOL:
            raise IndeterminateCellError(b.cell.as_tuple(), "duplicate zero reported by adjacent cells")
    if len(roots) > max_roots:
        raise ContractViolation(f"found {len(roots)} zeros, more than max_roots={max_roots}")
    return roots


def _piece_count(kind, piece):
    try:
        return winding_number(kind, piece)
    except IndeterminateCellError:
        pass
    # a zero sits near the outer contour; count the two halves instead
    for frac in _SPLIT_FRACTIONS:
        try:
            return sum(winding_number(kind, c) for c in piece.split(frac))
        except IndeterminateCellError:
            continue
    raise IndeterminateCellError(piece.as_tuple(), "outer contour passes through a zero")


def branch_ordinate(kind, k):
    """Imaginary part the k-th zero approaches for large k."""
    kind = CharacteristicKind.parse(kind)
    if kind is CharacteristicKind.DIRICHLET_A:
        return math.pi * k
    return math.pi * (k - 0.5)


def branch_root(kind, k, re_min=-3.0):
    """The zero of branch ``k`` (nearest to ``i * branch_ordinate``) within its strip."""
    c = branch_ordinate(kind, k)
    cell = Rect(re_min, -CUT_GUARD, max(c - 0.5 * math.pi, CUT_GUARD), c + 0.5 * math.pi)
    roots = find_roots(kind, cell)
    if not roots:
        raise BranchNotFoundError(k, CharacteristicKind.parse(kind).value)
    return min(roots, key=lambda r: abs(r.lam - 1j * c))


def eigen_locus_fit(kind, n_branches=12) -> DecayFit:
    """Fit ``|Re lam_k| = C |Im lam_k|**p`` over the first ``n_branches`` zeros."""
    kind = CharacteristicKind.parse(kind)
    check_int(n_branches, "n_branches", 4)
    lams = []
    for k in range(1, n_branches + 1):
        try:
            lams.append(branch_root(kind, k).lam)
        except (IndeterminateCellError, BranchNotFoundError) as exc:
            raise BranchNotFoundError(k, kind.value) from exc
    lams = np.asarray(lams)
    return power_law_fit(np.abs(lams.imag), np.abs(lams.real))
