"""Grids, states, norms and the energy functional.

Everything here is immutable: grid functions own a read-only copy of their
samples and every operation returns a new object.
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np
from scipy.integrate import cumulative_simpson

from ._validation import check_array_1d, check_int, check_same_grid
from .exceptions import ContractViolation

DEFAULT_HEAT_LENGTH = 40.0
# u(-1) must vanish to this relative tolerance in a DirichletA state
U_LEFT_TOL = 1e-6


class Variant(str, enum.Enum):
    """Boundary variant of the coupled system.

    ``DirichletA`` and ``NeumannA`` carry the wave displacement in the first
    slot; ``NeumannB`` carries the wave slope instead.
    """

    DIRICHLET_A = "DirichletA"
    NEUMANN_A = "NeumannA"
    NEUMANN_B = "NeumannB"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        for member in cls:
            if member.value.lower() == str(value).lower():
                return member
        raise ContractViolation(f"unknown variant {value!r}; expected one of {[m.value for m in cls]}")

    @property
    def wave_dirichlet(self):
        return self is Variant.DIRICHLET_A


def simpson_weights(n, h):
    """Composite Simpson weights for ``n`` (odd) equally spaced nodes."""
    if n < 3 or n % 2 == 0:
        raise ContractViolation(f"composite Simpson needs an odd number of points >= 3, got {n}")
    w = np.full(n, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return w * (h / 3.0)


def fd_first(values, h):
    """Fourth-order first derivative; one-sided stencils at the two ends."""
    f = np.asarray(values)
    n = f.shape[0]
    if n < 5:
        raise ContractViolation("fourth-order differences need at least 5 points")
    d = np.empty_like(f, dtype=np.result_type(f, float))
    d[2:-2] = (f[:-4] - 8.0 * f[1:-3] + 8.0 * f[3:-1] - f[4:]) / (12.0 * h)
    d[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / (12.0 * h)
    d[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / (12.0 * h)
    d[-1] = (25.0 * f[-1] - 48.0 * f[-2] + 36.0 * f[-3] - 16.0 * f[-4] + 3.0 * f[-5]) / (12.0 * h)
    d[-2] = (3.0 * f[-1] + 10.0 * f[-2] - 18.0 * f[-3] + 6.0 * f[-4] - f[-5]) / (12.0 * h)
    return d


def fd_second(values, h):
    """Fourth-order second derivative; one-sided six-point stencils at the ends."""
    f = np.asarray(values)
    n = f.shape[0]
    if n < 6:
        raise ContractViolation("fourth-order second differences need at least 6 points")
    d = np.empty_like(f, dtype=np.result_type(f, float))
    h2 = 12.0 * h * h
    # written on first differences so constants map to exactly zero
    e = np.diff(f, axis=0)
    d[2:-2] = (e[:-3] - 15.0 * e[1:-2] + 15.0 * e[2:-1] - e[3:]) / h2
    d[0] = (-45.0 * e[0] + 109.0 * e[1] - 105.0 * e[2] + 51.0 * e[3] - 10.0 * e[4]) / h2
    d[1] = (-10.0 * e[0] + 5.0 * e[1] + 9.0 * e[2] - 5.0 * e[3] + e[4]) / h2
    d[-1] = (45.0 * e[-1] - 109.0 * e[-2] + 105.0 * e[-3] - 51.0 * e[-4] + 10.0 * e[-5]) / h2
    d[-2] = (10.0 * e[-1] - 5.0 * e[-2] - 9.0 * e[-3] + 5.0 * e[-4] - e[-5]) / h2
    return d


def odd_points(n):
    """Smallest odd integer >= n (and >= 3)."""
    n = max(int(np.ceil(n)), 3)
    return n if n % 2 == 1 else n + 1


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Samples of a function on a uniform grid including both endpoints.

    The number of points must be odd so that composite Simpson weights apply.
    """

    left: float
    right: float
    values: np.ndarray

    def __post_init__(self):
        left = float(self.left)
        right = float(self.right)
        if not right > left:
            raise ContractViolation(f"right endpoint {right} must exceed left endpoint {left}")
        vals = check_array_1d(self.values, "values")
        n = vals.shape[0]
        if n < 3 or n % 2 == 0:
            raise ContractViolation(f"n_points must be odd and >= 3, got {n}")
        if not np.iscomplexobj(vals):
            vals = vals.astype(float)
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)
        object.__setattr__(self, "values", vals)

    # construction ---------------------------------------------------------
    @classmethod
    def sample(cls, func: Callable, left, right, n_points) -> "GridFunction":
        n = check_int(n_points, "n_points", 3)
        xi = np.linspace(left, right, n)
        return cls(left, right, np.asarray(func(xi)) * np.ones(n))

    @classmethod
    def zeros(cls, left, right, n_points, dtype=float) -> "GridFunction":
        return cls(left, right, np.zeros(check_int(n_points, "n_points", 3), dtype=dtype))

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.left, self.right, values)

    # geometry -------------------------------------------------------------
    @property
    def n_points(self) -> int:
        return self.values.shape[0]

    @property
    def spacing(self) -> float:
        return (self.right - self.left) / (self.n_points - 1)

    @cached_property
    def nodes(self) -> np.ndarray:
        xi = np.linspace(self.left, self.right, self.n_points)
        xi.setflags(write=False)
        return xi

    @cached_property
    def weights(self) -> np.ndarray:
        w = simpson_weights(self.n_points, self.spacing)
        w.setflags(write=False)
        return w

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.values)

    # calculus -------------------------------------------------------------
    def integral(self) -> complex | float:
        val = np.dot(self.weights, self.values)
        return complex(val) if self.is_complex else float(val)

    def l2_norm(self) -> float:
        return float(np.sqrt(np.dot(self.weights, np.abs(self.values) ** 2)))

    def inner(self, other: "GridFunction") -> complex:
        check_same_grid(self, other)
        return complex(np.dot(self.weights, self.values * np.conj(other.values)))

    def derivative(self) -> "GridFunction":
        return self.with_values(fd_first(self.values, self.spacing))

    def second_derivative(self) -> "GridFunction":
        return self.with_values(fd_second(self.values, self.spacing))

    def cumulative(self, reverse=False) -> "GridFunction":
        """Running integral from the left end, or towards the right end if ``reverse``.

        ``reverse=True`` gives ``xi -> int_xi^right f``.
        """
        vals = self.values[::-1] if reverse else self.values
        if np.iscomplexobj(vals):
            # scipy's cumulative_simpson silently drops imaginary parts
            part = (cumulative_simpson(vals.real, dx=self.spacing, initial=0.0)
                    + 1j * cumulative_simpson(vals.imag, dx=self.spacing, initial=0.0))
        else:
            part = cumulative_simpson(vals, dx=self.spacing, initial=0.0)
        if reverse:
            return self.with_values(part[::-1])
        return self.with_values(part)

    def at(self, xi) -> complex | float:
        """Value at a grid node (raises if ``xi`` is not a node)."""
        j = self.node_index(xi)
        return self.values[j].item()

    def node_index(self, xi) -> int:
        pos = (float(xi) - self.left) / self.spacing
        j = int(round(pos))
        if j < 0 or j >= self.n_points or abs(pos - j) > 1e-9 * max(1.0, abs(pos)):
            raise ContractViolation(f"xi={xi} is not a node of the grid [{self.left}, {self.right}]")
        return j

    # arithmetic -----------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, GridFunction):
            check_same_grid(self, other)
            return other.values
        return other

    def __add__(self, other):
        return self.with_values(self.values + self._coerce(other))

    def __sub__(self, other):
        return self.with_values(self.values - self._coerce(other))

    def __mul__(self, other):
        return self.with_values(self.values * self._coerce(other))

    __radd__ = __add__
    __rmul__ = __mul__

    def __neg__(self):
        return self.with_values(-self.values)

    def conj(self):
        return self.with_values(np.conj(self.values))

    def astype(self, dtype):
        return self.with_values(self.values.astype(dtype))

    def allclose(self, other, rtol=1e-12, atol=0.0):
        check_same_grid(self, other)
        return bool(np.allclose(self.values, other.values, rtol=rtol, atol=atol))

    def __repr__(self):
        kind = "complex" if self.is_complex else "real"
        return f"GridFunction([{self.left}, {self.right}], n={self.n_points}, {kind})"

    # serialization --------------------------------------------------------
    def to_csv(self, fh=None):
        """Write columns ``xi, re, im``; returns the text when ``fh`` is None."""
        out = io.StringIO() if fh is None else fh
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["xi", "re", "im"])
        vals = self.values.astype(complex)
        for x, z in zip(self.nodes, vals):
            writer.writerow([_fmt(x), _fmt(z.real), _fmt(z.imag)])
        if fh is None:
            return out.getvalue()
        return None

    @classmethod
    def from_rows(cls, rows):
        arr = np.asarray([[float(r[0]), float(r[1]), float(r[2])] for r in rows])
        if arr.shape[0] < 3:
            raise ContractViolation("a grid function needs at least 3 rows")
        xi = arr[:, 0]
        vals = arr[:, 1] + 1j * arr[:, 2]
        if not np.any(arr[:, 2]):
            vals = arr[:, 1]
        gf = cls(xi[0], xi[-1], vals)
        if not np.allclose(gf.nodes, xi, rtol=0, atol=1e-9 * max(1.0, abs(xi[-1] - xi[0]))):
            raise ContractViolation("xi column is not a uniform grid")
        return gf

    @classmethod
    def from_csv(cls, text):
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or [c.strip() for c in rows[0]] != ["xi", "re", "im"]:
            raise ContractViolation("grid function CSV must start with header xi,re,im")
        return cls.from_rows([r for r in rows[1:] if r])


def _fmt(x):
    return format(float(x), ".17g")


@dataclass(frozen=True, eq=False)
class State:
    """A triple ``(u, v, w)``: wave slot, wave velocity on [-1, 0], heat profile on [0, L]."""

    variant: Variant
    u: GridFunction
    v: GridFunction
    w: GridFunction

    def __post_init__(self):
        variant = Variant.parse(self.variant)
        object.__setattr__(self, "variant", variant)
        u, v, w = self.u, self.v, self.w
        for name, gf in (("u", u), ("v", v), ("w", w)):
            if not isinstance(gf, GridFunction):
                raise ContractViolation(f"{name} must be a GridFunction")
        check_same_grid(u, v, "u", "v")
        if abs(u.left + 1.0) > 1e-12 or abs(u.right) > 1e-12:
            raise ContractViolation("wave components must live on [-1, 0]")
        if abs(w.left) > 1e-12:
            raise ContractViolation("heat component must start at 0")
        if any(gf.is_complex for gf in (u, v, w)):
            for name in ("u", "v", "w"):
                gf = getattr(self, name)
                if not gf.is_complex:
                    object.__setattr__(self, name, gf.astype(complex))
        if variant is Variant.DIRICHLET_A:
            scale = max(1.0, float(np.max(np.abs(self.u.values))))
            if abs(self.u.values[0]) > U_LEFT_TOL * scale:
                raise ContractViolation(f"DirichletA state needs u(-1) = 0, got {self.u.values[0]!r}")

    @classmethod
    def from_functions(cls, variant, u, v, w, wave_n=201, heat_n=801, heat_L=DEFAULT_HEAT_LENGTH):
        """Sample callables (or scalars) on fresh grids."""
        def sample(fn, left, right, n):
            if callable(fn):
                return GridFunction.sample(fn, left, right, n)
            return GridFunction.sample(lambda x: np.full_like(x, fn, dtype=np.result_type(fn, float)), left, right, n)

        wave_n = odd_points(wave_n)
        heat_n = odd_points(heat_n)
        return cls(
            variant,
            sample(u, -1.0, 0.0, wave_n),
            sample(v, -1.0, 0.0, wave_n),
            sample(w, 0.0, heat_L, heat_n),
        )

    @classmethod
    def zeros_like(cls, other: "State", dtype=None) -> "State":
        dt = dtype or (complex if other.is_complex else float)
        z = lambda gf: GridFunction.zeros(gf.left, gf.right, gf.n_points, dt)
        return cls(other.variant, z(other.u), z(other.v), z(other.w))

    @property
    def is_complex(self):
        return self.u.is_complex

    @property
    def heat_length(self):
        return self.w.right

    def replace(self, **kwargs) -> "State":
        fields = {"variant": self.variant, "u": self.u, "v": self.v, "w": self.w}
        fields.update(kwargs)
        return State(**fields)

    def _check(self, other):
        if not isinstance(other, State) or other.variant is not self.variant:
            raise ContractViolation("states must share a variant")

    def __add__(self, other):
        self._check(other)
        return State(self.variant, self.u + other.u, self.v + other.v, self.w + other.w)

    def __sub__(self, other):
        self._check(other)
        return State(self.variant, self.u - other.u, self.v - other.v, self.w - other.w)

    def __mul__(self, c):
        return State(self.variant, self.u * c, self.v * c, self.w * c)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __repr__(self):
        return f"State({self.variant.value}, u={self.u!r}, w={self.w!r})"

    # serialization --------------------------------------------------------
    def to_csv(self) -> str:
        out = io.StringIO()
        out.write(f"# variant={self.variant.value}\n")
        for name in ("u", "v", "w"):
            out.write(f"# block={name}\n")
            getattr(self, name).to_csv(out)
        return out.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "State":
        variant = None
        blocks: dict[str, list] = {}
        current = None
        for raw in text.splitlines():
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                key = key.strip()
                if key == "variant":
                    variant = Variant.parse(val.strip())
                elif key == "block":
                    current = val.strip()
                    blocks[current] = []
                continue
            if current is None:
                raise ContractViolation("data line before any '# block=' header")
            cells = [c.strip() for c in line.split(",")]
            if cells == ["xi", "re", "im"]:
                continue
            blocks[current].append(cells)
        if variant is None:
            raise ContractViolation("state CSV lacks a '# variant=' header")
        missing = {"u", "v", "w"} - set(blocks)
        if missing:
            raise ContractViolation(f"state CSV lacks blocks {sorted(missing)}")
        return cls(variant, *(GridFunction.from_rows(blocks[k]) for k in ("u", "v", "w")))


@dataclass(frozen=True, eq=False)
class EnergyTrace:
    """Energy history of a simulation."""

    times: np.ndarray
    energies: np.ndarray
    dissipation: np.ndarray
    x_norm: Optional[np.ndarray] = None
    mass: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        arrays = {}
        for name in ("times", "energies", "dissipation", "x_norm", "mass"):
            val = getattr(self, name)
            if val is None:
                continue
            arr = np.asarray(val, dtype=float).copy()
            arr.setflags(write=False)
            arrays[name] = arr
            object.__setattr__(self, name, arr)
        n = arrays["times"].shape[0]
        if any(a.shape != (n,) for a in arrays.values()):
            raise ContractViolation("trace sequences must have equal lengths")
        if n > 1 and np.any(np.diff(arrays["times"]) <= 0):
            raise ContractViolation("trace times must be strictly increasing")
        if np.any(arrays["energies"] < 0) or np.any(arrays["dissipation"] < 0):
            raise ContractViolation("energies and dissipation must be nonnegative")

    def __len__(self):
        return self.times.shape[0]

    COLUMNS = ("t", "energy", "dissipation", "x_norm", "mass")

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(self.COLUMNS)
        nan = np.full(len(self), np.nan)
        cols = [self.times, self.energies, self.dissipation,
                self.x_norm if self.x_norm is not None else nan,
                self.mass if self.mass is not None else nan]
        for row in zip(*cols):
            writer.writerow([_fmt(x) for x in row])
        return out.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "EnergyTrace":
        rows = [r for r in csv.reader(io.StringIO(text)) if r]
        if not rows or tuple(c.strip() for c in rows[0]) != cls.COLUMNS:
            raise ContractViolation(f"trace CSV header must be {','.join(cls.COLUMNS)}")
        arr = np.asarray([[float(c) for c in r] for r in rows[1:]], dtype=float).reshape(-1, 5)
        opt = lambda col: None if np.all(np.isnan(col)) else col
        return cls(arr[:, 0], arr[:, 1], arr[:, 2], opt(arr[:, 3]), opt(arr[:, 4]))


def _check_norm_grids(x: State):
    if not isinstance(x, State):
        raise ContractViolation("expected a State")
    if x.u.n_points < 5:
        raise ContractViolation("wave grid needs at least 5 points for derivatives")


def _sq(gf):
    return float(np.dot(gf.weights, np.abs(gf.values) ** 2))


def state_norm(x: State) -> float:
    """Norm of ``x`` in the variant's state space.

    DirichletA uses ``||u'||`` for the first slot, NeumannA the full H^1 norm
    of ``u`` and NeumannB the plain L^2 norm of the slope variable.
    """
    _check_norm_grids(x)
    if x.variant is Variant.NEUMANN_B:
        first = _sq(x.u)
    elif x.variant is Variant.NEUMANN_A:
        first = _sq(x.u) + _sq(x.u.derivative())
    else:
        first = _sq(x.u.derivative())
    return float(np.sqrt(first + _sq(x.v) + _sq(x.w)))


def energy(x: State) -> float:
    """Half the strain + velocity + heat integral; the displacement itself never enters."""
    _check_norm_grids(x)
    first = _sq(x.u) if x.variant is Variant.NEUMANN_B else _sq(x.u.derivative())
    return 0.5 * (first + _sq(x.v) + _sq(x.w))
