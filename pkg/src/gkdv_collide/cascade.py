"""Right-hand sides of the first systems of the cascade and their solution.

The approximate solution is expanded over the family c^l Q_c^k, c^l (Q_c^k)'.
At each order (k, l) the unknowns (a_kl, A_kl, B_kl) solve the model system
with data (F_kl, G_kl) that only involve lower orders.  The orders handled
here are (1,0), (2,0) and (1,1).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .errors import UnsupportedOrder
from .linop import OperatorContext, make_context
from .omega import OmegaSolution, StructuredFunction, gauge_shift, omega_residuals, solve_model_system
from .profiles import SolitonParams, eval_Q, moments

EXPLICIT_ORDERS = ((1, 0), (2, 0), (1, 1))

# constants of the polynomial part of A_20 and A_11 for the p=2 solution that
# matches the explicit two-soliton
P2_TILDE_TARGET = {(2, 0): -2.0, (1, 1): 2.0}


def precedes(a, b) -> bool:
    """(k', l') strictly below (k, l) in the partial order of the cascade."""
    (k1, l1), (k2, l2) = a, b
    return (k1 < k2 and l1 <= l2) or (k1 <= k2 and l1 < l2)


def parse_orders(text: str) -> list:
    out = []
    for chunk in text.replace(" ", "").split(";"):
        if not chunk:
            continue
        k, l = chunk.split(",")
        out.append((int(k), int(l)))
    return out


@dataclass
class CascadeSolution:
    params: SolitonParams
    ctx: OperatorContext
    entries: dict = field(default_factory=dict)
    gauge: str = "canonical"
    residuals: dict = field(default_factory=dict)

    @property
    def orders(self) -> list:
        return sorted(self.entries, key=lambda kl: (kl[0] + kl[1], kl))

    @property
    def k0(self) -> int:
        return max(k for k, _ in self.entries)

    @property
    def l0(self) -> int:
        return max(l for _, l in self.entries)

    def __getitem__(self, kl) -> OmegaSolution:
        return self.entries[tuple(kl)]

    def scalars(self) -> dict:
        return {f"{k},{l}": {"a": e.a, "b": e.b} for (k, l), e in self.entries.items()}

    def to_dict(self) -> dict:
        g = self.ctx.grid
        return {
            "version": __version__,
            "p": self.params.p,
            "gauge": self.gauge,
            "grid": {"x_min": g.x_min, "x_max": g.x_max, "n": g.n, "method": self.ctx.method},
            "entries": {f"{k},{l}": e.to_dict() for (k, l), e in self.entries.items()},
            "residuals": {f"{k},{l}": list(v) for (k, l), v in self.residuals.items()},
        }

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def from_dict(cls, d: dict) -> "CascadeSolution":
        from .omega import Polynomial
        from .profiles import Grid
        gd = d["grid"]
        params = SolitonParams(int(d["p"]))
        ctx = OperatorContext(params, Grid(gd["x_min"], gd["x_max"], gd["n"]), gd["method"])
        entries = {}
        for key, e in d["entries"].items():
            k, l = (int(s) for s in key.split(","))
            A = StructuredFunction(ctx, e["A"]["ybar"], Polynomial(e["A"]["tilde"]), Polynomial(e["A"]["hat"]))
            B = StructuredFunction(ctx, e["B"]["ybar"], Polynomial(e["B"]["tilde"]), Polynomial(e["B"]["hat"]))
            entries[(k, l)] = OmegaSolution(e["a"], A, B, e["b"], e.get("gamma", 0.0),
                                            e.get("delta", 0.0), e.get("diagnostics", {}))
        res = {tuple(int(s) for s in k.split(",")): tuple(v) for k, v in d.get("residuals", {}).items()}
        return cls(params, ctx, entries, d.get("gauge", "canonical"), res)

    @classmethod
    def from_json(cls, path) -> "CascadeSolution":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def assemble_FG(k: int, l: int, prior: CascadeSolution):
    """F_kl and G_kl as structured functions."""
    if (k, l) not in EXPLICIT_ORDERS:
        raise UnsupportedOrder(f"no explicit right-hand side for order ({k},{l})", k=k, l=l)
    ctx = prior.ctx
    p = ctx.p
    x = ctx.grid.x
    Q = ctx.Q
    dQ, d2Q, d3Q = (eval_Q(p, x, j) for j in (1, 2, 3))
    S = lambda v: StructuredFunction(ctx, v)

    if (k, l) == (1, 0):
        return S(p * (p - 1) * Q ** (p - 2) * dQ), S(p * Q ** (p - 1))

    for need in [(1, 0)]:
        if need not in prior.entries:
            raise UnsupportedOrder(f"order ({k},{l}) needs ({need[0]},{need[1]}) first", k=k, l=l)
    e = prior.entries[(1, 0)]
    a, A, B = e.a, e.A, e.B
    dA, d2A, dB, d2B = A.deriv(), A.deriv(2), B.deriv(), B.deriv(2)
    potB = B * (p * Q ** (p - 1))

    if (k, l) == (1, 1):
        F = 3 * dA + 3 * d2B + potB
        G = 3 * dB
        return F, G

    if p == 2:
        F = ((A * A - A).deriv() - (3 * d2B + B * (2 * Q))
             - a * (S(Q) + 3 * d2A + A * (2 * Q)).deriv() + S(3 * a * a * d3Q))
        G = (A + A * A + (A * B - 2 * B).deriv()
             - (a / 2) * (9 * dA + 3 * d2B + B * (2 * Q)).deriv() + S(1.5 * a * a * d2Q))
        return F, G
    one_A = A + 1.0
    F = ((one_A * one_A * (6 * Q**2)).deriv()
         - a * (S(4 * Q**3) + 3 * d2A + A * (4 * Q**3)).deriv() + S(3 * a * a * d3Q))
    G = (one_A * one_A * (6 * Q**2) + (B * one_A * (6 * Q**2)).deriv()
         - (a / 2) * (9 * dA + 3 * d2B + B * (4 * Q**3)).deriv() + S(1.5 * a * a * d2Q))
    return F, G


def solve_cascade(params, orders=EXPLICIT_ORDERS, ctx: OperatorContext | None = None,
                  gauge: str = "canonical") -> CascadeSolution:
    """Solve the requested systems in increasing order.

    gauge='canonical' keeps the raw solver output.  gauge='explicit' (p=2
    only) moves (2,0) and (1,1) along the homogeneous family so that the
    constants of their polynomial parts match the explicit two-soliton.
    """
    params = params if isinstance(params, SolitonParams) else SolitonParams(int(params))
    orders = [tuple(o) for o in orders]
    for o in orders:
        if o not in EXPLICIT_ORDERS:
            raise UnsupportedOrder(f"order {o} is outside the explicit list", k=o[0], l=o[1])
        for q in EXPLICIT_ORDERS:
            if precedes(q, o) and q not in orders:
                raise UnsupportedOrder(f"order {o} requires {q}", k=o[0], l=o[1])
    ctx = ctx or make_context(params, "spectral")
    sol = CascadeSolution(params, ctx, gauge=gauge)
    for o in sorted(orders, key=lambda kl: (kl[0] + kl[1], kl)):
        F, G = assemble_FG(*o, sol)
        ent = solve_model_system(ctx, F, G)
        ent.A = ent.A.chop()
        ent.B = ent.B.chop()
        if gauge == "explicit" and params.p == 2 and o in P2_TILDE_TARGET:
            gamma = P2_TILDE_TARGET[o] - float(ent.A.tilde(0.0))
            ent = gauge_shift(ent, gamma, 0.0, sol.entries[(1, 0)])
        sol.entries[o] = ent
        sol.residuals[o] = omega_residuals(ctx, ent, F, G)
    return sol


def shift_constants(sol: CascadeSolution, c: float, convention: str = "raw") -> dict:
    """Delta = sum a_kl c^(k/(p-1)+l-1/2) int Q^k and Delta_c = 2 b_10.

    With convention='canonical' the recorded gauge parameters are removed
    first, so the result does not depend on the gauge of each entry.
    """
    p = sol.params.p
    m = moments(p)
    base = sol.entries[(1, 0)]
    delta = 0.0
    for (k, l), e in sol.entries.items():
        a = e.a
        if convention == "canonical":
            a = a - e.gamma * base.a
        delta += a * c ** (k / (p - 1) + l - 0.5) * m[f"int_Q{k}"]
    b10 = base.b - (base.gamma * base.b if convention == "canonical" else 0.0)
    return {"Delta": delta, "Delta_c": 2.0 * b10}


def closed_forms(p: int) -> dict:
    """Closed-form values of a_10, b_10, b_20 in terms of the moments of Q."""
    m = moments(p)
    I1, I2, I3 = m["int_Q1"], m["int_Q2"], m["int_Q3"]
    if p == 2:
        return {"a10": 2 / 3, "b10": -2.0, "a20": -4 / 9, "a11": 2 / 3, "b20": 4 / 3}
    return {
        "a10": -2 * I1 / I2,
        "b10": -0.5 * I3 + I1**2 / (6 * I2),
        "b20": -I2 / 18 - 0.75 * I1 * I3 / I2 - I1**3 / (18 * I2**2),
        "Delta_c": -I3 + I1**2 / (3 * I2),
        "Delta_leading_coef": -2 * I1**2 / I2,
    }
