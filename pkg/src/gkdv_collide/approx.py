"""The approximate two-soliton v(t, x), its residual and the corrected v_#.

Everything is written in the frame moving with the large soliton, where the
equation reads  d_t v + d_x(d_x^2 v - v + v^p) = 0.  With y_c = x + (1-c)t,
y = x - alpha(y_c) and alpha' = beta = sum a_kl c^l Q_c^k,

    v = Q(y) + Q_c(y_c) + sum_kl c^l (Q_c^k(y_c) A_kl(y) + (Q_c^k)'(y_c) B_kl(y)).

Time derivatives are taken analytically through (y, y_c); space derivatives
by FFT on a wide periodic grid that contains both solitons and their tails.
"""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.interpolate import CubicHermiteSpline

from . import __version__
from .cascade import CascadeSolution
from .errors import InvalidParameter, WrongExponent
from .omega import StructuredFunction
from .profiles import SolitonParams, eval_Q, eval_Qc, moments

ALPHA_HALF_WIDTH = 40.0
ALPHA_STEP = 0.005


def _qck(p: int, c: float, k: int, s, deriv: int = 0):
    """(Q_c^k)^(deriv)(s) for deriv in 0, 1, 2."""
    Qc = eval_Qc(p, s, 0, c)
    if deriv == 0:
        return Qc**k
    if deriv == 1:
        return k * Qc ** (k - 1) * eval_Qc(p, s, 1, c)
    if deriv == 2:
        # uses Q_c'^2 = c Q_c^2 - 2 Q_c^(p+1) / (p+1)
        return c * k * k * Qc**k - k * (2 * k + p - 1) / (p + 1) * Qc ** (k + p - 1)
    raise ValueError("deriv must be 0, 1 or 2")


@dataclass
class ApproxSolution:
    """A cascade specialised to a speed ratio c, with the table of alpha."""

    cascade: CascadeSolution
    c: float
    orders: tuple | None = None
    constants: dict = field(default_factory=dict, init=False)

    def __post_init__(self):
        self.params = SolitonParams(self.cascade.params.p, self.c)
        if self.orders is None:
            self.orders = tuple(self.cascade.orders)
        self.orders = tuple(sorted((tuple(o) for o in self.orders), key=lambda kl: (sum(kl), kl)))
        for o in self.orders:
            if o not in self.cascade.entries:
                raise InvalidParameter(f"order {o} is not in the cascade", order=str(o))
        self._build_alpha()

    @property
    def p(self) -> int:
        return self.params.p

    @property
    def T_c(self) -> float:
        return self.params.T_c

    @property
    def k0(self) -> int:
        return max(k for k, _ in self.orders)

    @property
    def l0(self) -> int:
        return max(l for _, l in self.orders)

    # -- alpha and beta
    def _build_alpha(self):
        p, c = self.p, self.c
        u = np.arange(-ALPHA_HALF_WIDTH, ALPHA_HALF_WIDTH + ALPHA_STEP / 2, ALPHA_STEP)
        Q = eval_Q(p, u)
        i0 = len(u) // 2
        alpha = np.zeros_like(u)
        beta = np.zeros_like(u)
        for k, l in self.orders:
            a = self.cascade[(k, l)].a
            Ik = cumulative_simpson(Q**k, x=u, initial=0.0)
            Ik = Ik - Ik[i0]
            alpha += a * c ** (l + k / (p - 1) - 0.5) * Ik
            beta += a * c ** (l + k / (p - 1)) * Q**k
        self._alpha_spline = CubicHermiteSpline(u / np.sqrt(c), 0.5 * (alpha - alpha[::-1]), beta)
        self._alpha_edge = 0.5 * (alpha[-1] - alpha[0])
        self._s_max = ALPHA_HALF_WIDTH / np.sqrt(c)
        K_alpha = np.max(np.abs(alpha)) / c ** (1 / (p - 1) - 0.5)
        K_beta = np.max(np.abs(beta)) / c ** (1 / (p - 1))
        self.constants = {"K_alpha": float(K_alpha), "K_beta": float(K_beta),
                          "min_one_plus_beta": float(1 + beta.min()),
                          "half_Delta": float(self._alpha_edge)}

    def alpha(self, s):
        s = np.asarray(s, dtype=float)
        out = np.where(s > 0, self._alpha_edge, -self._alpha_edge).astype(float)
        inside = np.abs(s) <= self._s_max
        out[inside] = self._alpha_spline(s[inside])
        return out

    def beta(self, s, deriv: int = 0):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        for k, l in self.orders:
            out += self.cascade[(k, l)].a * self.c**l * _qck(self.p, self.c, k, s, deriv)
        return out

    @cached_property
    def Delta(self) -> float:
        """Total shift of the large soliton, sum a_kl c^(k/(p-1)+l-1/2) int Q^k."""
        m = moments(self.p)
        return float(sum(self.cascade[(k, l)].a * self.c ** (k / (self.p - 1) + l - 0.5) * m[f"int_Q{k}"]
                         for k, l in self.orders))

    @cached_property
    def Delta_c(self) -> float:
        return 2.0 * self.cascade[(1, 0)].b

    # -- grids
    def wide_grid(self, t: float = 0.0, h: float = 0.06, tail: float = 36.0) -> np.ndarray:
        """Periodic grid holding both solitons at time t, tails below round-off."""
        half = 40.0 + tail / np.sqrt(self.c) + (1 - self.c) * abs(t)
        n = int(2 ** np.ceil(np.log2(2 * half / h)))
        return -half + 2 * half * np.arange(n) / n

    def coords(self, t: float, x):
        x = np.asarray(x, dtype=float)
        yc = x + (1 - self.c) * t
        return x - self.alpha(yc), yc


def _check_window(apx: ApproxSolution, t: float):
    if abs(t) > apx.T_c * (1 + 1e-12):
        warnings.warn(f"t={t:g} lies outside [-T_c, T_c] (T_c={apx.T_c:g})", stacklevel=3)


def _terms(apx: ApproxSolution, t: float, x, with_time: bool = False):
    """Pieces of v at (t, x): Q(y), Q_c(y_c), W and optionally d_t v."""
    p, c = apx.p, apx.c
    y, yc = apx.coords(t, x)
    Qy = eval_Q(p, y)
    Qcy = eval_Qc(p, yc, 0, c)
    W = np.zeros_like(y)
    dt = None
    if with_time:
        dty = -(1 - c) * apx.beta(yc)
        dt = eval_Q(p, y, 1) * dty + (1 - c) * eval_Qc(p, yc, 1, c)
    for k, l in apx.orders:
        e = apx.cascade[(k, l)]
        cl = c**l
        q0, q1 = _qck(p, c, k, yc, 0), _qck(p, c, k, yc, 1)
        A, B = e.A(y), e.B(y)
        W += cl * (q0 * A + q1 * B)
        if with_time:
            q2 = _qck(p, c, k, yc, 2)
            dt += cl * ((1 - c) * (q1 * A + q2 * B) + dty * (q0 * e.A(y, 1) + q1 * e.B(y, 1)))
    return Qy, Qcy, W, dt


def eval_v(apx: ApproxSolution, t: float, x) -> np.ndarray:
    """v(t, x) in the frame of the large soliton."""
    _check_window(apx, t)
    Qy, Qcy, W, _ = _terms(apx, t, x)
    return Qy + Qcy + W


def eval_W(apx: ApproxSolution, t: float, x) -> np.ndarray:
    """v - Q(y) - Q_c(y_c)."""
    return _terms(apx, t, x)[2]


def _sharp_factor(apx: ApproxSolution) -> float:
    # coefficient s with w_# = s (Q_c^2)'(y_c) (1 + V1(y)); see eval_v_sharp
    return -apx.cascade[(2, 0)].b


def _v1_function(apx: ApproxSolution) -> StructuredFunction:
    from .linop import special_solutions
    ctx = apx.cascade.ctx
    if not hasattr(apx, "_v1_sf"):
        apx._v1_sf = StructuredFunction(ctx, special_solutions(ctx)["V1"].values)
    return apx._v1_sf


def _sharp_terms(apx: ApproxSolution, t: float, x, with_time: bool = False):
    if apx.p != 4:
        raise WrongExponent("v_# is defined for p=4 only", p=apx.p)
    c = apx.c
    y, yc = apx.coords(t, x)
    V1 = _v1_function(apx)
    s = _sharp_factor(apx)
    one_V1 = 1.0 + V1(y)
    w = s * _qck(4, c, 2, yc, 1) * one_V1
    if not with_time:
        return w, None
    dty = -(1 - c) * apx.beta(yc)
    dt = s * ((1 - c) * _qck(4, c, 2, yc, 2) * one_V1 + _qck(4, c, 2, yc, 1) * V1(y, 1) * dty)
    return w, dt


def eval_v_sharp(apx: ApproxSolution, t: float, x) -> np.ndarray:
    """v_# = v + w_#, w_# = s (Q_c^2)'(y_c)(1 + V1(y)).

    The constant s equals -B_20(+inf) = -b_20, the value that removes the
    (Q_c^2)' mismatch of v with a pure two-soliton at t = -T_c.
    """
    w, _ = _sharp_terms(apx, t, x)
    return eval_v(apx, t, x) + w


# ---------------------------------------------------------------- residual


def _spectral(values: np.ndarray, L: float):
    n = values.size
    k = 2 * np.pi * np.fft.fftfreq(n, L / n)
    return np.fft.fft(values), k


def _dx(values: np.ndarray, L: float, order: int = 1) -> np.ndarray:
    f, k = _spectral(values, L)
    return np.fft.ifft((1j * k) ** order * f).real


def l2(values: np.ndarray, h: float) -> float:
    return float(np.sqrt(h * np.sum(values * values)))


def h1(values: np.ndarray, L: float, c: float = 1.0) -> float:
    """(||f'||^2 + c ||f||^2)^(1/2) on a periodic grid of length L."""
    h = L / values.size
    return float(np.sqrt(l2(_dx(values, L), h) ** 2 + c * l2(values, h) ** 2))


@dataclass
class ResidualReport:
    t: float
    x: np.ndarray
    S: np.ndarray
    norms: dict

    def as_grid(self):
        return self.x, self.S


def _residual(apx: ApproxSolution, t: float, sharp: bool, h: float) -> ResidualReport:
    _check_window(apx, t)
    x = apx.wide_grid(t, h)
    L = 2 * -x[0]
    Qy, Qcy, W, dtv = _terms(apx, t, x, with_time=True)
    v = Qy + Qcy + W
    if sharp:
        w, dtw = _sharp_terms(apx, t, x, with_time=True)
        v, dtv = v + w, dtv + dtw
    f, k = _spectral(v, L)
    g = np.fft.fft(v**apx.p)
    flux = np.fft.ifft(1j * k * (-(k**2) * f - f + g)).real
    S = dtv + flux
    hx = L / x.size
    fs = np.fft.fft(S)
    norms = {f"dx{j}": l2(np.fft.ifft((1j * k) ** j * fs).real, hx) for j in range(3)}
    return ResidualReport(t, x, S, norms)


def residual_S(apx: ApproxSolution, t: float, h: float = 0.06) -> ResidualReport:
    """S = d_t v + d_x(d_x^2 v - v + v^p) and ||d_x^j S||_L2 for j = 0, 1, 2."""
    return _residual(apx, t, False, h)


def residual_S_sharp(apx: ApproxSolution, t: float, h: float = 0.06) -> ResidualReport:
    """Same as residual_S for v_# (p=4 only)."""
    return _residual(apx, t, True, h)


def recomposition_error(apx: ApproxSolution, side: int, h: float = 0.06) -> dict:
    """Distances of v(side*T_c) to the shifted two-soliton.

    err_full subtracts the two shifted solitons and the (Q_c^2)' correction,
    err_two_soliton only the solitons (H1 norm), err_dx is the L2 norm of the
    x-derivative of the latter.  right_tail is the H1 norm of
    v - Q(. - side*Delta/2) on x > -T_c/2 (side=+1) or x < T_c/2 (side=-1).
    """
    if apx.p != 4:
        raise WrongExponent("recomposition estimates are stated for p=4", p=apx.p)
    if (2, 0) not in apx.orders:
        raise InvalidParameter("recomposition needs the (2,0) order in the cascade")
    if side not in (1, -1):
        raise InvalidParameter("side must be +1 or -1", side=side)
    c, T = apx.c, apx.T_c
    t = side * T
    x = apx.wide_grid(t, h)
    L = 2 * -x[0]
    v = eval_v(apx, t, x)
    yc = x + (1 - c) * t
    two = (eval_Q(4, x - side * apx.Delta / 2)
           + eval_Qc(4, yc - side * apx.Delta_c / 2, 0, c))
    # v carries B_20(-side*inf) (Q_c^2)'(y_c) = -side * b_20 (Q_c^2)'(y_c)
    corr = -side * apx.cascade[(2, 0)].b * _qck(4, c, 2, yc, 1)
    d = v - two
    err_full = h1(d - corr, L)
    err_two = h1(d, L)
    err_dx = l2(_dx(d, L), L / x.size)
    tail_mask = (side * x > -T / 2).astype(float)
    tail = v - eval_Q(4, x - side * apx.Delta / 2)
    right_tail = float(np.sqrt((L / x.size) * np.sum(tail_mask * (tail**2 + _dx(tail, L) ** 2))))
    return {"t": t, "err_full": err_full, "err_two_soliton": err_two, "err_dx": err_dx,
            "right_tail": right_tail, "Delta": apx.Delta, "Delta_c": apx.Delta_c}


def sharp_closeness(apx: ApproxSolution, side: int, h: float = 0.06) -> float:
    """H1 distance of v_#(side*T_c) to the shifted two-soliton.

    For side=+1 the doubled (Q_c^2)' mismatch is subtracted as well.
    """
    c, T = apx.c, apx.T_c
    t = side * T
    x = apx.wide_grid(t, h)
    L = 2 * -x[0]
    yc = x + (1 - c) * t
    two = (eval_Q(4, x - side * apx.Delta / 2)
           + eval_Qc(4, yc - side * apx.Delta_c / 2, 0, c))
    d = eval_v_sharp(apx, t, x) - two
    if side == 1:
        d -= 2 * _sharp_factor(apx) * _qck(4, c, 2, yc - apx.Delta_c / 2, 1)
    return h1(d, L)


# ---------------------------------------------------------------- p = 2 oracle


def p2_explicit_match(c: float, t, x) -> np.ndarray:
    """Explicit two-soliton of the KdV equation (p=2), in the original frame.

    U = 6 d_x^2 log(1 + e^eta1 + e^eta2 + alpha e^(eta1+eta2)) with
    eta1 = x - t, eta2 = sqrt(c)(x - c t), alpha = ((1-sqrt c)/(1+sqrt c))^2.
    Writing the sum as sum_i exp(theta_i) with slopes s_i in x, the second
    derivative of the log is the variance of s under the softmax weights.
    """
    if not 0 < c < 1:
        raise InvalidParameter("c must lie in (0, 1)", c=c)
    t, x = np.broadcast_arrays(np.asarray(t, float), np.asarray(x, float))
    sc = np.sqrt(c)
    e1 = x - t
    e2 = sc * (x - c * t)
    la = 2 * np.log((1 - sc) / (1 + sc))
    theta = np.stack([np.zeros_like(e1), e1, e2, e1 + e2 + la])
    slope = np.array([0.0, 1.0, sc, 1.0 + sc]).reshape(-1, *([1] * e1.ndim))
    theta = theta - theta.max(axis=0)
    w = np.exp(theta)
    w /= w.sum(axis=0)
    mean = (w * slope).sum(axis=0)
    return 6.0 * ((w * slope**2).sum(axis=0) - mean**2)


def p2_shifts(c: float) -> dict:
    """Phase shifts of the explicit two-soliton: large +Delta', small -Delta'/sqrt(c)."""
    sc = np.sqrt(c)
    d = -2 * np.log((1 - sc) / (1 + sc))
    return {"Delta_prime": float(d), "Delta_prime_c": float(-d / sc)}


# ---------------------------------------------------------------- sweeps


def fit_slope(cs, values) -> float:
    cs, values = np.asarray(cs, float), np.asarray(values, float)
    return float(np.polyfit(np.log(cs), np.log(values), 1)[0])


def residual_sweep(cascade: CascadeSolution, cs, orders=None, t: float = 0.0) -> list:
    """Rows (c, k0, l0, norm_name, value, fitted_slope) for ||d_x^j S(t)||."""
    rows = []
    per_c = []
    for c in cs:
        apx = ApproxSolution(cascade, c, orders)
        per_c.append((c, apx.k0, apx.l0, residual_S(apx, t).norms))
    for name in ("dx0", "dx1", "dx2"):
        slope = fit_slope([r[0] for r in per_c], [r[3][name] for r in per_c]) if len(per_c) > 1 else float("nan")
        for c, k0, l0, norms in per_c:
            rows.append({"c": c, "k0": k0, "l0": l0, "norm_name": f"S_{name}",
                         "value": norms[name], "fitted_slope": slope})
    return rows


def write_sweep_csv(rows: list, path, meta: dict | None = None) -> None:
    cols = ["c", "k0", "l0", "norm_name", "value", "fitted_slope"]
    with open(path, "w", newline="") as fh:
        meta = dict(meta or {}, version=__version__)
        fh.write("# " + " ".join(f"{k}={v}" for k, v in sorted(meta.items())) + "\n")
        w = csv.DictWriter(fh, fieldnames=cols)
        w.writeheader()
        for r in rows:
            w.writerow({k: r[k] for k in cols})
