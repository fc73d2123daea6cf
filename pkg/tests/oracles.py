"""Independent reference computations used to pin expected values.

Everything here deliberately avoids the closed forms used by the package:
kinetics are evaluated in exact rational arithmetic, equilibria and matched
acid levels by sign-change bisection on directly integrated residuals, and
layer speeds by phase-plane shooting.
"""
from __future__ import annotations

from fractions import Fraction

import numpy as np
from scipy.integrate import quad, solve_ivp


def exact_kinetics(params, u, v, w):
    """Reaction terms evaluated in exact rational arithmetic."""
    a = Fraction(str(params.a))
    d1 = Fraction(str(params.delta1))
    d2 = Fraction(str(params.delta2))
    d3 = Fraction(str(params.delta3))
    rho = Fraction(str(params.rho))
    u, v, w = Fraction(str(u)), Fraction(str(v)), Fraction(str(w))
    f = u * (1 - u - d1 * w)
    g = rho * v * (1 - v) * (v - a) - d2 * v * w
    h = d3 * (v - w)
    return float(f), float(g), float(h)


def bisect(fn, lo, hi, iters=200):
    flo = fn(lo)
    assert flo * fn(hi) < 0, "oracle bisection requires a sign change"
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = fn(mid)
        if fm == 0.0:
            return mid
        if flo * fm < 0:
            hi = mid
        else:
            lo, flo = mid, fm
    return 0.5 * (lo + hi)


def tumor_levels_by_bisection(params):
    """(V-, V+): nontrivial zeros of the tumor kinetics at v = w."""
    g = lambda v: params.rho * (1 - v) * (v - params.a) - params.delta2 * v
    # scan for sign changes on (a, 1+a)
    vs = np.linspace(params.a + 1e-12, 1.0 + params.a, 20001)
    gs = np.array([g(v) for v in vs])
    roots = []
    for i in range(len(vs) - 1):
        if gs[i] == 0.0:
            roots.append(vs[i])
        elif gs[i] * gs[i + 1] < 0:
            roots.append(bisect(g, vs[i], vs[i + 1]))
    assert len(roots) == 2, f"expected two tumor levels, found {roots}"
    return min(roots), max(roots)


def w_star_by_quadrature(params):
    """Matched acid level via direct quadrature of the branch integrand."""
    _, v_plus = tumor_levels_by_bisection(params)

    def integrand(z):
        rad = (1 - params.a) ** 2 - 4 * params.delta2 * z / params.rho
        return 1 + params.a + np.sqrt(rad)

    def residual(w):
        val, _ = quad(integrand, v_plus, w, limit=200)
        return v_plus**2 + val

    return bisect(residual, 1e-12, v_plus - 1e-12)


def layer_speed_by_shooting(params, w, diffusivity, c_lo=1e-6, c_hi=None):
    """Front speed of D v'' - c v' + rho v (1-v)(v-a) - delta2 v w = 0.

    Integrates out of the saddle at v = 0 along its unstable direction and
    bisects on c between overshoot and fall-back outcomes.
    """
    rad = (1 - params.a) ** 2 - 4 * params.delta2 * w / params.rho
    v_plus = 0.5 * (1 + params.a + np.sqrt(rad))
    g = lambda v: params.rho * v * (1 - v) * (v - params.a) - params.delta2 * v * w
    gp0 = -params.rho * params.a - params.delta2 * w  # g'(0)

    if c_hi is None:
        c_hi = 3.0 * np.sqrt(diffusivity * params.rho)

    def outcome(c):
        lam = (c + np.sqrt(c * c - 4 * diffusivity * gp0)) / (2 * diffusivity)
        v0 = 1e-9
        y0 = [v0, lam * v0]
        xi_max = 400.0 / lam + 400.0 * np.sqrt(diffusivity / params.rho) / max(v_plus, 1e-3)

        def rhs(_, y):
            return [y[1], (c * y[1] - g(y[0])) / diffusivity]

        def hit_top(_, y):
            return y[0] - (v_plus + 1e-9)
        hit_top.terminal = True
        hit_top.direction = 1

        def fell_back(_, y):
            return y[1]
        fell_back.terminal = True
        fell_back.direction = -1

        sol = solve_ivp(rhs, (0.0, xi_max), y0, rtol=1e-11, atol=1e-13,
                        events=[hit_top, fell_back], max_step=xi_max / 50)
        if sol.t_events[0].size:
            return "overshoot"
        if sol.t_events[1].size:
            return "fallback"
        return "converged"

    lo_kind, hi_kind = outcome(c_lo), outcome(c_hi)
    assert lo_kind != hi_kind and "converged" not in (lo_kind, hi_kind), (
        f"shooting bracket invalid: {lo_kind} at {c_lo}, {hi_kind} at {c_hi}")
    lo, hi = c_lo, c_hi
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        kind = outcome(mid)
        if kind == "converged":
            return mid
        if kind == lo_kind:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-13 * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


def weighted_layer_integrals(layer, c_star, u_star, delta1, w_star):
    """Closed forms of the weighted interface quadratures.

    For the tanh interface v = (v+/2)(1 + tanh(b xi)) under the weight
    e^{-mu xi}, the substitution x = e^{2 b xi} turns each integral into a
    beta function; with m = mu/(2b) in (0, 1):

        int v_xi^2 e^{-mu xi} dxi   = v+^2 b pi m (1 - m^2) / (3 sin pi m)
        int v v_xi e^{-mu xi} dxi   = v+^2 pi m (1 - m) / (2 sin pi m)
        int ubar dxi                = mu / (2 F_u) * (the first integral)

    where the last follows by integrating the tissue-response ODE
    c ubar' + F_u ubar + v_xi (v_xi e^{-mu xi})' = 0 over the line.
    """
    b, vp = layer.steepness, layer.v_plus
    mu = c_star / layer.diffusivity
    m = mu / (2.0 * b)
    sin = np.sin(np.pi * m)
    j_v = vp**2 * b * np.pi * m * (1.0 - m * m) / (3.0 * sin)
    int_v_vbar = vp**2 * np.pi * m * (1.0 - m) / (2.0 * sin)
    f_u = 1.0 - 2.0 * u_star - delta1 * w_star
    int_ubar = mu / (2.0 * f_u) * j_v if u_star > 0.0 else 0.0
    return {"j_v": j_v, "int_v_vbar": int_v_vbar, "int_ubar": int_ubar}
