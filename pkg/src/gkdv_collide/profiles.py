"""Soliton profiles, the auxiliary function phi, grids and moment identities.

Q is the even positive solution of Q'' + Q^p = Q,

    Q(x) = ((p+1) / (2 cosh^2((p-1) x / 2)))^(1/(p-1)),

and Q_c(x) = c^(1/(p-1)) Q(sqrt(c) x) solves Q_c'' + Q_c^p = c Q_c.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import integrate

from .errors import GridMismatch, InvalidParameter, TailTruncation, UnsupportedExponent

SUPPORTED_P = (2, 4)


@dataclass(frozen=True)
class SolitonParams:
    """Exponent p and speed ratio c of the small soliton."""

    p: int
    c: float | None = None

    def __post_init__(self):
        if self.p not in SUPPORTED_P:
            raise UnsupportedExponent(f"p must be 2 or 4, got {self.p}", p=self.p)
        if self.c is not None and not (0.0 < self.c < 1.0):
            raise InvalidParameter(f"c must lie in (0, 1), got {self.c}", c=self.c)

    @property
    def q(self) -> float:
        return 1.0 / (self.p - 1) - 0.25

    @property
    def T_c(self) -> float:
        return self._c() ** (-0.5 - 0.01)

    def n0(self, k0: int, l0: int) -> float:
        """Residual exponent (1/2 - 1/100) min(k0/(p-1), 1+l0)."""
        return 0.49 * min(k0 / (self.p - 1), 1 + l0)

    def with_c(self, c: float) -> "SolitonParams":
        return SolitonParams(self.p, c)

    def _c(self) -> float:
        if self.c is None:
            raise InvalidParameter("speed ratio c is not set")
        return self.c


def _p(params) -> int:
    if isinstance(params, SolitonParams):
        return params.p
    p = int(params)
    if p not in SUPPORTED_P:
        raise UnsupportedExponent(f"p must be 2 or 4, got {p}", p=p)
    return p


def _sech2(s):
    # 4 e^{-2|s|} / (1 + e^{-2|s|})^2, safe for large |s|
    e = np.exp(-2.0 * np.abs(s))
    return 4.0 * e / (1.0 + e) ** 2


def eval_Q(params, x, deriv: int = 0):
    """Q and its first four derivatives, from closed forms."""
    p = _p(params)
    x = np.asarray(x, dtype=float)
    Q = ((p + 1) / 2.0 * _sech2((p - 1) * x / 2.0)) ** (1.0 / (p - 1))
    if deriv == 0:
        return Q
    phi = np.tanh((p - 1) * x / 2.0)
    Q1 = -phi * Q
    if deriv == 1:
        return Q1
    Qp1 = Q ** (p - 1)
    Q2 = Q - Q * Qp1
    if deriv == 2:
        return Q2
    if deriv == 3:
        return Q1 * (1.0 - p * Qp1)
    if deriv == 4:
        return Q2 * (1.0 - p * Qp1) - p * (p - 1) * Q ** (p - 2) * Q1**2
    raise ValueError("deriv must be between 0 and 4")


def eval_Qc(params, x, deriv: int = 0, c: float | None = None):
    """Q_c(x) = c^(1/(p-1)) Q(sqrt(c) x) and derivatives."""
    p = _p(params)
    if c is None:
        c = params._c() if isinstance(params, SolitonParams) else None
    if c is None:
        raise InvalidParameter("speed ratio c is not set")
    s = np.sqrt(c)
    return c ** (1.0 / (p - 1)) * s**deriv * eval_Q(p, s * np.asarray(x, dtype=float), deriv)


def eval_phi(params, x, deriv: int = 0):
    """phi = tanh((p-1)x/2) = -Q'/Q and its first three derivatives."""
    p = _p(params)
    x = np.asarray(x, dtype=float)
    m = (p - 1) / 2.0
    phi = np.tanh(m * x)
    if deriv == 0:
        return phi
    d1 = m * _sech2(m * x)
    if deriv == 1:
        return d1
    d2 = -(p - 1) * phi * d1
    if deriv == 2:
        return d2
    if deriv == 3:
        return -(p - 1) * (d1 * d1 + phi * d2)
    raise ValueError("deriv must be between 0 and 3")


def eval_L_phi(params, x, deriv: int = 0):
    """L(phi) = -phi'' + phi - p Q^(p-1) phi, or its first derivative."""
    p = _p(params)
    V = p * eval_Q(p, x) ** (p - 1)
    if deriv == 0:
        return -eval_phi(p, x, 2) + eval_phi(p, x) - V * eval_phi(p, x)
    if deriv == 1:
        dV = p * (p - 1) * eval_Q(p, x) ** (p - 2) * eval_Q(p, x, 1)
        return (-eval_phi(p, x, 3) + eval_phi(p, x, 1)
                - dV * eval_phi(p, x) - V * eval_phi(p, x, 1))
    raise ValueError("deriv must be 0 or 1")


# ---------------------------------------------------------------- grids


@dataclass(frozen=True)
class Grid:
    """Uniform grid on [x_min, x_max] with n points, both ends included."""

    x_min: float
    x_max: float
    n: int

    def __post_init__(self):
        if self.n < 6 or not self.x_max > self.x_min:
            raise InvalidParameter("grid needs n >= 6 and x_max > x_min",
                                   n=self.n, x_min=self.x_min, x_max=self.x_max)

    @classmethod
    def symmetric(cls, half_width: float, n: int) -> "Grid":
        return cls(-float(half_width), float(half_width), int(n))

    @property
    def h(self) -> float:
        return (self.x_max - self.x_min) / (self.n - 1)

    @cached_property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n)

    @property
    def period(self) -> float:
        return self.x_max - self.x_min

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        m = self.n - 1
        return 2.0 * np.pi * np.fft.rfftfreq(m, d=self.h)

    def is_symmetric(self) -> bool:
        return abs(self.x_min + self.x_max) < 1e-12 * (self.x_max - self.x_min)


class GridFunction:
    """Samples of a real function on a Grid."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid, values):
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.n,):
            raise GridMismatch("sample count does not match grid",
                               expected=grid.n, got=values.shape[0])
        self.grid = grid
        self.values = values

    @classmethod
    def from_callable(cls, grid: Grid, f) -> "GridFunction":
        return cls(grid, f(grid.x))

    def _check(self, other):
        if isinstance(other, GridFunction):
            if other.grid != self.grid:
                raise GridMismatch("functions live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return GridFunction(self.grid, self.values + self._check(other))

    __radd__ = __add__

    def __sub__(self, other):
        return GridFunction(self.grid, self.values - self._check(other))

    def __rsub__(self, other):
        return GridFunction(self.grid, self._check(other) - self.values)

    def __mul__(self, other):
        return GridFunction(self.grid, self.values * self._check(other))

    __rmul__ = __mul__

    def __neg__(self):
        return GridFunction(self.grid, -self.values)

    def __pow__(self, k):
        return GridFunction(self.grid, self.values**k)

    def integrate(self) -> float:
        """Composite Simpson rule over the whole grid."""
        return float(integrate.simpson(self.values, dx=self.grid.h))

    def inner(self, other) -> float:
        return (self * other).integrate()

    def norm(self) -> float:
        return float(np.sqrt(max(self.inner(self), 0.0)))

    def cumulative(self, origin: str = "left") -> "GridFunction":
        """x -> integral of f from the left edge (or from 0) to x."""
        F = integrate.cumulative_simpson(self.values, dx=self.grid.h, initial=0.0)
        if origin == "zero":
            F = F - np.interp(0.0, self.grid.x, F)
        elif origin != "left":
            raise ValueError("origin must be 'left' or 'zero'")
        return GridFunction(self.grid, F)

    def derivative(self, order: int = 1, method: str = "fd4") -> "GridFunction":
        if order == 0:
            return self
        if method == "spectral":
            return GridFunction(self.grid, spectral_derivative(self.values, self.grid, order))
        if method != "fd4":
            raise ValueError("method must be 'fd4' or 'spectral'")
        v = self.values
        while order >= 2:
            v = _fd4_second(v, self.grid.h)
            order -= 2
        if order == 1:
            v = _fd4_first(v, self.grid.h)
        return GridFunction(self.grid, v)

    def __call__(self, x):
        return np.interp(x, self.grid.x, self.values, left=0.0, right=0.0)


def _fd4_first(f, h):
    d = np.empty_like(f)
    d[2:-2] = (f[:-4] - 8 * f[1:-3] + 8 * f[3:-1] - f[4:]) / (12 * h)
    d[0] = (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]) / (12 * h)
    d[1] = (-3 * f[0] - 10 * f[1] + 18 * f[2] - 6 * f[3] + f[4]) / (12 * h)
    d[-1] = (25 * f[-1] - 48 * f[-2] + 36 * f[-3] - 16 * f[-4] + 3 * f[-5]) / (12 * h)
    d[-2] = (3 * f[-1] + 10 * f[-2] - 18 * f[-3] + 6 * f[-4] - f[-5]) / (12 * h)
    return d


def _fd4_second(f, h):
    d = np.empty_like(f)
    h2 = 12 * h * h
    d[2:-2] = (-f[:-4] + 16 * f[1:-3] - 30 * f[2:-2] + 16 * f[3:-1] - f[4:]) / h2
    d[0] = (45 * f[0] - 154 * f[1] + 214 * f[2] - 156 * f[3] + 61 * f[4] - 10 * f[5]) / h2
    d[1] = (10 * f[0] - 15 * f[1] - 4 * f[2] + 14 * f[3] - 6 * f[4] + f[5]) / h2
    d[-1] = (45 * f[-1] - 154 * f[-2] + 214 * f[-3] - 156 * f[-4] + 61 * f[-5] - 10 * f[-6]) / h2
    d[-2] = (10 * f[-1] - 15 * f[-2] - 4 * f[-3] + 14 * f[-4] - 6 * f[-5] + f[-6]) / h2
    return d


def spectral_derivative(values, grid: Grid, order: int = 1):
    """Fourier derivative treating the grid as one period (last point = first)."""
    f = values[:-1]
    k = grid.wavenumbers
    fh = np.fft.rfft(f) * (1j * k) ** order
    if (grid.n - 1) % 2 == 0 and order % 2 == 1:
        fh[-1] = 0.0
    d = np.fft.irfft(fh, n=grid.n - 1)
    return np.append(d, d[0])


def spectral_antiderivative(values, grid: Grid):
    """Zero-mean periodic antiderivative; the mean of f must be negligible."""
    f = values[:-1]
    k = grid.wavenumbers
    fh = np.fft.rfft(f)
    out = np.zeros_like(fh)
    out[1:] = fh[1:] / (1j * k[1:])
    if (grid.n - 1) % 2 == 0:
        out[-1] = 0.0
    d = np.fft.irfft(out, n=grid.n - 1)
    return np.append(d, d[0])


# ---------------------------------------------------------------- moments


def default_profile_grid(n: int = 2**14 + 1, half_width: float = 40.0) -> Grid:
    return Grid.symmetric(half_width, n)


def moments(params, grid: Grid | None = None, tol: float = 1e-14) -> dict:
    """Quadrature moments of Q: int Q^k for k = 1..6 and p+1, int Q'^2, E(Q)."""
    p = _p(params)
    grid = grid or default_profile_grid()
    Q = eval_Q(p, grid.x)
    edge = max(Q[0], Q[-1])
    if edge > tol:
        raise TailTruncation("Q is not negligible at the grid edge",
                             edge_value=edge, tol=tol)
    dQ = eval_Q(p, grid.x, 1)
    simp = lambda f: float(integrate.simpson(f, dx=grid.h))
    out = {f"int_Q{k}": simp(Q**k) for k in range(1, 7)}
    out["int_Q"] = out["int_Q1"]
    out["int_Qp1"] = out[f"int_Q{p + 1}"]
    out["int_dQ2"] = simp(dQ**2)
    out["energy"] = 0.5 * out["int_dQ2"] - out["int_Qp1"] / (p + 1)
    return out


def energy(p: int, u: np.ndarray, du: np.ndarray, h: float) -> float:
    """E(u) = 1/2 int u_x^2 - 1/(p+1) int u^(p+1) on uniform samples."""
    return float(0.5 * np.sum(du**2) * h - np.sum(u ** (p + 1)) * h / (p + 1))
