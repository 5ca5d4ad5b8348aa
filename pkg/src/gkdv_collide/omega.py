"""Solver for the model system

    (L A)' + a (3Q - 2Q^p)'               = F
    (L B)' + 3a Q'' - 3A'' - p Q^(p-1) A  = G

for functions of the form f = fbar + ftilde + phi * fhat, where fbar decays
and ftilde, fhat are polynomials.  Polynomial growth is removed analytically
first; what remains is a pair of problems for decaying functions that are
solved with the inverse of L and a choice of the two scalars a and b.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.interpolate import BPoly

from .errors import Degenerate, StructureViolation
from .linop import OperatorContext, solve_L, special_solutions
from .profiles import eval_L_phi, eval_phi, eval_Q

POLY_TOL = 1e-11


# ---------------------------------------------------------------- polynomials


class Polynomial:
    """Real polynomial in the monomial basis with a derived parity tag."""

    __slots__ = ("coef",)
    __array_ufunc__ = None

    def __init__(self, coef=(0.0,)):
        c = np.atleast_1d(np.asarray(coef, dtype=float)).copy()
        c = npoly.polytrim(c, 0.0) if c.size else np.zeros(1)
        self.coef = c

    @classmethod
    def const(cls, v: float) -> "Polynomial":
        return cls([v])

    @property
    def degree(self) -> int:
        nz = np.nonzero(np.abs(self.coef) > 0)[0]
        return int(nz[-1]) if nz.size else -1

    @property
    def is_zero(self) -> bool:
        return self.degree < 0

    @property
    def parity(self) -> str:
        nz = np.nonzero(np.abs(self.coef) > 0)[0]
        if nz.size == 0:
            return "zero"
        if np.all(nz % 2 == 0):
            return "even"
        if np.all(nz % 2 == 1):
            return "odd"
        return "none"

    def has_parity(self, kind: str) -> bool:
        return self.parity in ("zero", kind)

    def __call__(self, x):
        return npoly.polyval(x, self.coef)

    def __add__(self, other):
        other = _as_poly(other)
        return Polynomial(npoly.polyadd(self.coef, other.coef))

    __radd__ = __add__

    def __sub__(self, other):
        other = _as_poly(other)
        return Polynomial(npoly.polysub(self.coef, other.coef))

    def __rsub__(self, other):
        return _as_poly(other) - self

    def __neg__(self):
        return Polynomial(-self.coef)

    def __mul__(self, other):
        if isinstance(other, Polynomial):
            return Polynomial(npoly.polymul(self.coef, other.coef))
        return Polynomial(self.coef * float(other))

    __rmul__ = __mul__

    def deriv(self, m: int = 1) -> "Polynomial":
        if self.coef.size <= m:
            return Polynomial()
        return Polynomial(npoly.polyder(self.coef, m))

    def integ0(self) -> "Polynomial":
        """x -> integral of the polynomial from 0 to x."""
        return Polynomial(npoly.polyint(self.coef, lbnd=0.0))

    def chop(self, tol: float) -> "Polynomial":
        c = self.coef.copy()
        c[np.abs(c) < tol] = 0.0
        return Polynomial(c)

    def max_abs_coef(self) -> float:
        return float(np.max(np.abs(self.coef)))

    def tolist(self) -> list:
        return [float(v) for v in self.coef]

    def __repr__(self):
        return f"Polynomial({self.tolist()})"


def _as_poly(v) -> Polynomial:
    return v if isinstance(v, Polynomial) else Polynomial([float(v)])


def solve_poly_ode(R: Polynomial) -> Polynomial:
    """The polynomial P with -P'' + P = R, namely P = sum_j R^(2j)."""
    P = Polynomial()
    term = R
    while not term.is_zero:
        P = P + term
        term = term.deriv(2)
    return P


# ---------------------------------------------------------------- structured functions


class StructuredFunction:
    """f = ybar + tilde + phi * hat on the grid of an operator context."""

    __slots__ = ("ctx", "ybar", "tilde", "hat", "_interp")
    __array_ufunc__ = None

    def __init__(self, ctx: OperatorContext, ybar=None, tilde=None, hat=None):
        self.ctx = ctx
        n = ctx.grid.n
        self.ybar = np.zeros(n) if ybar is None else np.asarray(ybar, dtype=float)
        self.tilde = Polynomial() if tilde is None else _as_poly(tilde)
        self.hat = Polynomial() if hat is None else _as_poly(hat)
        self._interp = None

    # -- construction helpers
    @classmethod
    def decaying(cls, ctx, values):
        return cls(ctx, values)

    @classmethod
    def zero(cls, ctx):
        return cls(ctx)

    @property
    def phi(self):
        return eval_phi(self.ctx.p, self.ctx.grid.x)

    def values(self) -> np.ndarray:
        x = self.ctx.grid.x
        return self.ybar + self.tilde(x) + self.phi * self.hat(x)

    def _lift(self, other):
        if isinstance(other, StructuredFunction):
            return other
        if isinstance(other, Polynomial):
            return StructuredFunction(self.ctx, None, other)
        if np.isscalar(other):
            return StructuredFunction(self.ctx, None, Polynomial.const(other))
        return StructuredFunction(self.ctx, other)

    def __add__(self, other):
        o = self._lift(other)
        return StructuredFunction(self.ctx, self.ybar + o.ybar, self.tilde + o.tilde, self.hat + o.hat)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __neg__(self):
        return StructuredFunction(self.ctx, -self.ybar, -self.tilde, -self.hat)

    def __mul__(self, other):
        x = self.ctx.grid.x
        if np.isscalar(other):
            return StructuredFunction(self.ctx, self.ybar * other, self.tilde * other, self.hat * other)
        if not isinstance(other, (StructuredFunction, Polynomial)):
            # a decaying sampled multiplier: the product decays
            return StructuredFunction(self.ctx, np.asarray(other) * self.values())
        o = self._lift(other)
        phi = self.phi
        P1, R1, P2, R2 = self.tilde, self.hat, o.tilde, o.hat
        ybar = (self.ybar * o.values() + o.ybar * (P1(x) + phi * R1(x))
                - (1.0 - phi**2) * (R1 * R2)(x))
        return StructuredFunction(self.ctx, ybar, P1 * P2 + R1 * R2, P1 * R2 + R1 * P2)

    __rmul__ = __mul__

    def deriv(self, m: int = 1) -> "StructuredFunction":
        out = self
        for _ in range(m):
            out = out._deriv1()
        return out

    def _deriv1(self):
        x = self.ctx.grid.x
        dphi = eval_phi(self.ctx.p, x, 1)
        ybar = self.ctx.d(self.ybar) + dphi * self.hat(x)
        return StructuredFunction(self.ctx, ybar, self.tilde.deriv(), self.hat.deriv())

    def apply_L(self) -> "StructuredFunction":
        return -self.deriv(2) + self - self.ctx.potential * _poly_free(self)

    # -- parity and size
    def parity_ok(self, role: str, tol: float = 1e-9) -> bool:
        """role 'even': ybar even, tilde even, hat odd; 'odd' the reverse."""
        y = self.ybar
        scale = max(np.max(np.abs(y)), 1.0)
        if role == "even":
            return (np.max(np.abs(y - y[::-1])) <= tol * scale
                    and self.tilde.has_parity("even") and self.hat.has_parity("odd"))
        return (np.max(np.abs(y + y[::-1])) <= tol * scale
                and self.tilde.has_parity("odd") and self.hat.has_parity("even"))

    def chop(self, tol: float = POLY_TOL) -> "StructuredFunction":
        return StructuredFunction(self.ctx, self.ybar, self.tilde.chop(tol), self.hat.chop(tol))

    def symmetrize(self, role: str) -> "StructuredFunction":
        s = 1.0 if role == "even" else -1.0
        y = 0.5 * (self.ybar + s * self.ybar[::-1])
        tilde = _keep_parity(self.tilde, role)
        hat = _keep_parity(self.hat, "odd" if role == "even" else "even")
        return StructuredFunction(self.ctx, y, tilde, hat)

    # -- evaluation off the grid
    def __call__(self, y, deriv: int = 0, method: str = "fourier"):
        """Evaluate f or one of its first two derivatives at arbitrary points.

        The decaying part is evaluated from its trigonometric interpolant
        (method='fourier') or from piecewise quintic Hermite polynomials
        built from spectral derivatives (method='hermite'); it is set to zero
        outside the grid.  Polynomial and phi parts are evaluated exactly.
        """
        y = np.asarray(y, dtype=float)
        if deriv not in (0, 1, 2):
            raise ValueError("deriv must be 0, 1 or 2")
        g = self.ctx.grid
        inside = (y >= g.x_min) & (y <= g.x_max)
        ib = np.zeros_like(y)
        if method == "fourier":
            ib[inside] = fourier_interpolate(g, self.ybar[None, :], y[inside], (deriv,))[0, 0]
        elif method == "hermite":
            if self._interp is None:
                d1 = self.ctx.d(self.ybar, 1)
                d2 = self.ctx.d(self.ybar, 2)
                self._interp = BPoly.from_derivatives(g.x, np.column_stack([self.ybar, d1, d2]))
            ib[inside] = self._interp(y[inside], nu=deriv)
        else:
            raise ValueError("method must be 'fourier' or 'hermite'")
        return ib + self._closed_part(y, deriv)

    def _closed_part(self, y, deriv: int):
        # Leibniz rule for (phi * hat)^(deriv)
        p = self.ctx.p
        out = self.tilde.deriv(deriv)(y)
        for j in range(deriv + 1):
            out = out + comb(deriv, j) * eval_phi(p, y, j) * self.hat.deriv(deriv - j)(y)
        return out

    def to_dict(self) -> dict:
        return {"ybar": self.ybar.tolist(), "tilde": self.tilde.tolist(), "hat": self.hat.tolist()}

    def __repr__(self):
        return (f"StructuredFunction(|ybar|max={np.max(np.abs(self.ybar)):.3g}, "
                f"tilde={self.tilde.tolist()}, hat={self.hat.tolist()})")


def fourier_interpolate(grid, rows: np.ndarray, y: np.ndarray, derivs=(0,),
                        chunk: int = 4096) -> np.ndarray:
    """Trigonometric interpolant of periodic samples and its derivatives.

    rows has shape (r, n) with the last column repeating the first.  The
    result has shape (len(derivs), r, len(y)).
    """
    rows = np.atleast_2d(np.asarray(rows, dtype=float))[:, :-1]
    m = rows.shape[1]
    coef = np.fft.rfft(rows, axis=1) / m
    coef[:, 1:] *= 2.0
    if m % 2 == 0:
        coef[:, -1] = 0.0
    k = 2 * np.pi * np.fft.rfftfreq(m, grid.h)
    y = np.asarray(y, dtype=float)
    out = np.empty((len(derivs), rows.shape[0], y.size))
    for s in range(0, y.size, chunk):
        ys = y[s:s + chunk] - grid.x_min
        E = np.exp(1j * np.outer(ys, k))
        for i, d in enumerate(derivs):
            out[i, :, s:s + chunk] = (E @ (coef * (1j * k) ** d).T).real.T
    return out


def _poly_free(f: StructuredFunction) -> np.ndarray:
    return f.values()


def _keep_parity(P: Polynomial, kind: str) -> Polynomial:
    c = P.coef.copy()
    idx = np.arange(c.size)
    c[(idx % 2) != (0 if kind == "even" else 1)] = 0.0
    return Polynomial(c)


# ---------------------------------------------------------------- the model system


@dataclass
class PeelResult:
    A_tilde: Polynomial
    A_hat: Polynomial
    B_tilde: Polynomial
    B_hat_star: Polynomial
    cF: np.ndarray
    cG: np.ndarray


@dataclass
class OmegaSolution:
    a: float
    A: StructuredFunction
    B: StructuredFunction
    b: float
    gamma: float = 0.0
    delta: float = 0.0
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"a": self.a, "b": self.b, "gamma": self.gamma, "delta": self.delta,
                "A": self.A.to_dict(), "B": self.B.to_dict(),
                "diagnostics": {k: float(v) for k, v in self.diagnostics.items()}}


def peel_polynomials(ctx: OperatorContext, F: StructuredFunction, G: StructuredFunction) -> PeelResult:
    """Remove the polynomial parts of (F, G).

    Returns the polynomial parts of A and B (without the free constant b)
    and the decaying right-hand sides left for the reduced system.
    """
    if not (F.tilde.has_parity("odd") and F.hat.has_parity("even")
            and G.tilde.has_parity("even") and G.hat.has_parity("odd")):
        raise StructureViolation("F needs odd tilde / even hat, G even tilde / odd hat",
                                 F_tilde=F.tilde, F_hat=F.hat, G_tilde=G.tilde, G_hat=G.hat)
    At = solve_poly_ode(F.tilde.integ0())
    Ah = solve_poly_ode(F.hat.integ0())
    Bt = solve_poly_ode((G.tilde + 3 * At.deriv(2)).integ0())
    Bh = solve_poly_ode((G.hat + 3 * Ah.deriv(2)).integ0())
    PA = StructuredFunction(ctx, None, At, Ah)
    PB = StructuredFunction(ctx, None, Bt, Bh)
    cF = F - PA.apply_L().deriv()
    cG = G - PB.apply_L().deriv() + 3 * PA.deriv(2) + ctx.potential * PA.values()
    for name, f in (("F", cF), ("G", cG)):
        size = max(f.tilde.max_abs_coef(), f.hat.max_abs_coef())
        if size > POLY_TOL * max(1.0, np.max(np.abs(f.ybar))):
            raise StructureViolation(f"polynomial part of reduced {name} did not cancel", size=size)
    return PeelResult(At, Ah, Bt, Bh, cF.ybar, cG.ybar)


def solve_model_system(ctx: OperatorContext, F: StructuredFunction, G: StructuredFunction,
                       degenerate_tol: float = 1e-10) -> OmegaSolution:
    p = ctx.p
    x = ctx.grid.x
    pot = ctx.potential
    Q = ctx.Q
    sp = special_solutions(ctx)
    Z0, V0 = sp["Z0"].values, sp["V0"].values
    pk = peel_polynomials(ctx, F, G)

    H = ctx.antiderivative(pk.cF)
    if ctx.grid.is_symmetric():
        H = 0.5 * (H + H[::-1])
    Hbar = solve_L(ctx, H).values
    d2Hbar = Hbar - pot * Hbar - H
    D = 3 * d2Hbar + pot * Hbar + pk.cG

    z0q = ctx.integrate(Z0 * Q)
    if abs(z0q) < degenerate_tol:
        raise Degenerate("<Z0, Q> vanishes", inner=z0q)
    a = ctx.integrate(D * Q) / z0q
    g = D - a * Z0
    if ctx.grid.is_symmetric():
        g = 0.5 * (g + g[::-1])
    b = 0.5 * ctx.integrate(g)

    # int_0^x g = b phi + R with R decaying, since int phi' = 2
    R = ctx.antiderivative(g - b * eval_phi(p, x, 1))
    R = R - np.interp(0.0, x, R)
    if ctx.grid.is_symmetric():
        R = 0.5 * (R - R[::-1])
    E = R + b * (eval_phi(p, x) - eval_L_phi(p, x))
    Bbar = solve_L(ctx, E).values

    A = StructuredFunction(ctx, Hbar - a * V0, pk.A_tilde, pk.A_hat)
    B = StructuredFunction(ctx, Bbar, pk.B_tilde, pk.B_hat_star + b)
    diag = {
        "E_inner_dQ": ctx.integrate(E * ctx.dQ),
        "E_edge": float(max(abs(E[0]), abs(E[-1]))),
        "H_edge": float(max(abs(H[0]), abs(H[-1]))),
        "Z0Q": z0q,
    }
    return OmegaSolution(a, A, B, b, diagnostics=diag)


def omega_residuals(ctx: OperatorContext, sol: OmegaSolution, F: StructuredFunction,
                    G: StructuredFunction) -> tuple[float, float]:
    """Max-norm residuals of both equations on the grid."""
    p = ctx.p
    x = ctx.grid.x
    Q = ctx.Q
    dsrc = 3 * eval_Q(p, x, 1) - 2 * p * Q ** (p - 1) * eval_Q(p, x, 1)
    rA = sol.A.apply_L().deriv() + sol.a * dsrc - F
    rB = (sol.B.apply_L().deriv() + 3 * sol.a * eval_Q(p, x, 2) - 3 * sol.A.deriv(2)
          - ctx.potential * sol.A.values() - G)
    return float(np.max(np.abs(rA.values()))), float(np.max(np.abs(rB.values())))


def gauge_shift(sol: OmegaSolution, gamma: float, delta: float, base: OmegaSolution) -> OmegaSolution:
    """Move along the homogeneous family (a10, 1 + A10, B10) and (0, 0, Q')."""
    ctx = sol.A.ctx
    dQ = ctx.dQ
    A = sol.A + (base.A + 1.0) * gamma
    B = sol.B + base.B * gamma + StructuredFunction(ctx, delta * dQ)
    return OmegaSolution(sol.a + gamma * base.a, A, B, sol.b + gamma * base.b,
                         sol.gamma + gamma, sol.delta + delta, dict(sol.diagnostics))
