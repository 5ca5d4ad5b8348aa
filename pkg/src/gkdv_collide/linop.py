"""The linearized operator L w = -w'' + w - p Q^(p-1) w around Q.

L is self-adjoint with kernel spanned by Q'.  For h orthogonal to Q' there is
a unique f orthogonal to Q' with L f = h, and f decays when h does.  The
inverse is computed from a bordered system

    [ L    q ] [f]   [h]
    [ q^T  0 ] [m] = [0],      q = quadrature weights * Q',

so the multiplier m absorbs any Q' component of h and f is pinned to the
orthogonal complement.  Two discretizations are available: a sparse
five-point fourth-order stencil ("fd4", Dirichlet zero at both edges) and a
dense Fourier collocation ("spectral") which is far more accurate for the
smooth, decaying data produced by the cascade.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import GridMismatch, NotOrthogonal, SolveFailure
from .profiles import (Grid, GridFunction, SolitonParams, _p, eval_Q,
                       spectral_antiderivative, spectral_derivative)

DEFAULT_FD_GRID = Grid.symmetric(40.0, 2**14 + 1)
DEFAULT_SPECTRAL_GRID = Grid.symmetric(40.0, 2**11 + 1)


@dataclass
class OperatorContext:
    params: SolitonParams
    grid: Grid
    method: str = "fd4"
    orth_tol: float = 1e-8
    orth_atol: float = 1e-11
    residual_tol: float = 1e-6
    _factor: object = field(default=None, init=False, repr=False)

    def __post_init__(self):
        if self.method not in ("fd4", "spectral"):
            raise ValueError("method must be 'fd4' or 'spectral'")
        if not isinstance(self.params, SolitonParams):
            self.params = SolitonParams(_p(self.params))
        p = self.params.p
        x = self.grid.x
        self.Q = eval_Q(p, x)
        self.dQ = eval_Q(p, x, 1)
        self.potential = p * self.Q ** (p - 1)
        if self.method == "fd4":
            h = self.grid.h
            n = self.grid.n
            c = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / (12 * h * h)
            D2 = sp.diags([np.full(n - abs(o), c[o + 2]) for o in range(-2, 3)],
                          list(range(-2, 3)), format="csr")
            self._D2 = D2
            self.matrix = (-D2 + sp.identity(n) - sp.diags(self.potential)).tocsc()
            self.weights = np.full(n, h)
        else:
            m = self.grid.n - 1
            self._D2 = _fourier_d2(m, self.grid.period)
            L = -self._D2 + np.eye(m) - np.diag(self.potential[:-1])
            self.matrix = L
            self.weights = np.full(m, self.grid.h)

    @property
    def p(self) -> int:
        return self.params.p

    # -- helpers ---------------------------------------------------------
    def gf(self, values) -> GridFunction:
        return GridFunction(self.grid, values)

    def d(self, values, order: int = 1) -> np.ndarray:
        """Derivative consistent with the context's discretization."""
        values = np.asarray(values, dtype=float)
        if self.method == "spectral":
            return spectral_derivative(values, self.grid, order)
        return GridFunction(self.grid, values).derivative(order, "fd4").values

    def antiderivative(self, values) -> np.ndarray:
        """x -> integral from the left edge, for data of (numerically) zero mean."""
        values = np.asarray(values, dtype=float)
        if self.method == "spectral":
            F = spectral_antiderivative(values, self.grid)
            return F - F[0]
        return GridFunction(self.grid, values).cumulative("left").values

    def integrate(self, values) -> float:
        return GridFunction(self.grid, values).integrate()

    def _factorize(self):
        if self._factor is None:
            q = self.weights * (self.dQ[:-1] if self.method == "spectral" else self.dQ)
            if self.method == "spectral":
                m = len(q)
                M = np.zeros((m + 1, m + 1))
                M[:m, :m] = self.matrix
                M[:m, m] = q
                M[m, :m] = q
                self._factor = ("dense", sla.lu_factor(M))
            else:
                M = sp.bmat([[self.matrix, sp.csc_matrix(q[:, None])],
                             [sp.csr_matrix(q[None, :]), None]], format="csc")
                self._factor = ("sparse", spla.splu(M))
        return self._factor


def _fourier_d2(m: int, period: float) -> np.ndarray:
    """Dense Fourier second-derivative matrix on m equispaced periodic nodes."""
    if m % 2:
        raise ValueError("spectral grid needs an even number of periodic nodes")
    h = 2 * np.pi / m
    j = np.arange(1, m)
    col = np.empty(m)
    col[0] = -np.pi**2 / (3 * h * h) - 1.0 / 6.0
    col[1:] = -0.5 * (-1.0) ** j / np.sin(h * j / 2) ** 2
    col *= (2 * np.pi / period) ** 2
    return sla.toeplitz(col)


def make_context(p, method: str = "fd4", grid: Grid | None = None) -> OperatorContext:
    params = p if isinstance(p, SolitonParams) else SolitonParams(int(p))
    if grid is None:
        grid = DEFAULT_FD_GRID if method == "fd4" else DEFAULT_SPECTRAL_GRID
    return OperatorContext(params, grid, method)


def _values(ctx: OperatorContext, f) -> np.ndarray:
    if isinstance(f, GridFunction):
        if f.grid != ctx.grid:
            raise GridMismatch("function is not sampled on the operator grid")
        return f.values
    f = np.asarray(f, dtype=float)
    if f.shape != (ctx.grid.n,):
        raise GridMismatch("sample count does not match operator grid",
                           expected=ctx.grid.n, got=f.shape[0])
    return f


def apply_L(ctx: OperatorContext, f) -> GridFunction:
    v = _values(ctx, f)
    if ctx.method == "fd4":
        return ctx.gf(ctx.matrix @ v)
    out = ctx.matrix @ v[:-1]
    return ctx.gf(np.append(out, out[0]))


def solve_L(ctx: OperatorContext, h) -> GridFunction:
    """Unique f orthogonal to Q' with L f = h."""
    hv = _values(ctx, h)
    hn = np.sqrt(ctx.integrate(hv * hv))
    qn = np.sqrt(ctx.integrate(ctx.dQ * ctx.dQ))
    proj = ctx.integrate(hv * ctx.dQ)
    if abs(proj) > ctx.orth_tol * hn * qn + ctx.orth_atol:
        raise NotOrthogonal("right-hand side is not orthogonal to Q'",
                            inner=proj, relative=abs(proj) / (hn * qn))
    if hn == 0:
        return ctx.gf(np.zeros_like(hv))
    kind, fac = ctx._factorize()
    if kind == "dense":
        rhs = np.append(hv[:-1], 0.0)
        sol = sla.lu_solve(fac, rhs)
        f = np.append(sol[:-1], sol[0])
    else:
        rhs = np.append(hv, 0.0)
        sol = fac.solve(rhs)
        f = sol[:-1]
    if not np.all(np.isfinite(sol)):
        raise SolveFailure("constrained solve produced non-finite values")
    # the multiplier carries the (tolerated) Q' component of h
    res = apply_L(ctx, f).values + sol[-1] * ctx.grid.h * ctx.dQ - hv
    rel = np.sqrt(ctx.integrate(res * res)) / max(hn, ctx.orth_atol)
    if rel > ctx.residual_tol:
        raise SolveFailure("constrained solve did not reproduce the right-hand side",
                           relative_residual=rel)
    return ctx.gf(f)


def special_solutions(ctx: OperatorContext) -> dict:
    """Closed forms V0, V1 and the functions Z0, Z1 built from them.

    L V0 = 3Q - 2Q^p and L V1 = p Q^(p-1).  Z0 = 3Q'' + 3V0'' + pQ^(p-1)V0 and
    Z1 = 3V1'' + pQ^(p-1)V1 + pQ^(p-1).  Second derivatives are taken from
    the equations for V0 and V1, so no differencing is involved.
    """
    p = ctx.p
    x = ctx.grid.x
    Q, dQ = ctx.Q, ctx.dQ
    d2Q = eval_Q(p, x, 2)
    d3Q = eval_Q(p, x, 3)
    pot = ctx.potential
    V0 = -Q / (p - 1) - 1.5 * x * dQ
    dV0 = -dQ / (p - 1) - 1.5 * (dQ + x * d2Q)
    V1, dV1 = _v1(ctx)
    d2V0 = V0 - pot * V0 - (3 * Q - 2 * Q**p)
    d2V1 = V1 - pot * V1 - pot
    Z0 = 3 * d2Q + 3 * d2V0 + pot * V0
    Z1 = 3 * d2V1 + pot * V1 + pot
    return {
        "V0": ctx.gf(V0), "V1": ctx.gf(V1), "Z0": ctx.gf(Z0), "Z1": ctx.gf(Z1),
        "dV0": ctx.gf(dV0), "dV1": ctx.gf(dV1),
        "d2V0": ctx.gf(d2V0), "d2V1": ctx.gf(d2V1), "d3Q": ctx.gf(d3Q),
    }


def int0_Q2(ctx: OperatorContext) -> np.ndarray:
    """x -> int_0^x Q^2, written as (M/2) phi + (decaying zero-mean primitive)."""
    from .profiles import eval_phi
    p = ctx.p
    x = ctx.grid.x
    Q2 = ctx.Q**2
    M = ctx.integrate(Q2)
    phi = eval_phi(p, x)
    rest = Q2 - 0.5 * M * eval_phi(p, x, 1)
    R = ctx.antiderivative(rest)
    R = R - np.interp(0.0, x, R)
    R = 0.5 * (R - R[::-1]) if ctx.grid.is_symmetric() else R
    return 0.5 * M * phi + R


def _v1(ctx: OperatorContext):
    p = ctx.p
    x = ctx.grid.x
    Q, dQ = ctx.Q, ctx.dQ
    if p == 2:
        V1 = -2 * Q - x * dQ
        dV1 = -3 * dQ - x * eval_Q(p, x, 2)
        return V1, dV1
    I2 = int0_Q2(ctx)
    d2Q = eval_Q(p, x, 2)
    V1 = (dQ * I2 - 2 * Q**3) / 3.0
    dV1 = (d2Q * I2 + dQ * Q**2 - 6 * Q**2 * dQ) / 3.0
    return V1, dV1


@dataclass
class DecayReport:
    rate_left: float
    rate_right: float
    boundary_magnitude: float
    decaying: bool

    @property
    def rate(self) -> float:
        return min(self.rate_left, self.rate_right)


def decay_check(f: GridFunction, floor: float = 1e-13, boundary_tol: float = 1e-8,
                min_rate: float = 0.1) -> DecayReport:
    """Fit log|f| against |x| on each tail and report the exponential rate."""
    x = f.grid.x
    v = np.abs(f.values)
    scale = v.max() if v.size else 0.0
    if scale == 0.0:
        return DecayReport(np.inf, np.inf, 0.0, True)
    rel = v / scale
    bmag = float(max(rel[0], rel[-1]))
    rates = []
    for side in (x < 0, x > 0):
        xs, rs = np.abs(x[side]), rel[side]
        outer = xs > 0.5 * xs.max() * 0.2
        use = outer & (rs > floor) & (rs < 1e-3)
        if use.sum() < 5:
            # already below the floor everywhere in the outer region
            use = outer & (rs > 0)
            if use.sum() < 5 or rs[outer].max() <= floor:
                rates.append(np.inf)
                continue
        slope = np.polyfit(xs[use], np.log(rs[use]), 1)[0]
        rates.append(float(-slope))
    decaying = bool(min(rates) > min_rate and bmag < boundary_tol)
    return DecayReport(rates[0], rates[1], bmag, decaying)
