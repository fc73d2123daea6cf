"""Finite-epsilon traveling-wave boundary-value solver.

The wave ODE system in the frame xi = x + c t is

    c u' = u (1 - u - delta1 w)
    c v' = ((1 + kappa - u) v')' + rho v (1 - v)(v - a) - delta2 v w
    c w' = delta3 (v - w) + w'' / eps^2

discretized on a symmetric grid with exact clamping to the far-field states,
a pointwise anchor on v fixing the translate, and the speed c as the bordered
unknown of a damped Newton iteration. The acid equation is stored in
diffusion-scaled form, eps^2 (delta3 (v - w) - c w') + w'', which has the
same zero set but keeps the residual norm measurable in float64 for epsilon
down to 1e-4 and the Newton rows well scaled.

The linearization assembled here doubles as the spectral operator of the
stability module; at transverse wavenumber ell it gains -ell^2 times
diag(0, 1 + kappa - u, 1/eps^2).
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .banded import BandAssembler, BandedLU
from .errors import HomotopyStuck, NewtonDiverged, WrongBranch
from .grids import Grid1D
from .model import ModelParams, reaction_jet
from .singular import SingularFront, build_singular_front

__all__ = [
    "FrontProfile",
    "default_grid",
    "tw_residual",
    "assemble_operator",
    "transverse_weight",
    "solve_front",
    "measure_gap_width",
    "continue_front",
]

KL, KU = 4, 3  # bandwidths of the interleaved (u, v, w) linearization


@dataclass(frozen=True)
class FrontProfile:
    """A converged traveling front with its speed and bookkeeping."""

    params: ModelParams
    grid: Grid1D
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    c: float
    residual_norm: float
    newton_iterations: int
    singular: SingularFront

    @property
    def regime_kind(self) -> str:
        return self.singular.regime.kind

    @property
    def left_state(self) -> tuple[float, float, float]:
        return (1.0, 0.0, 0.0)

    @property
    def right_state(self) -> tuple[float, float, float]:
        vp = self.singular.orbits.v_plus_eq
        u_right = 1.0 - self.params.delta1 * vp
        return (max(u_right, 0.0), vp, vp)

    def derivative(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Interior profile derivatives on the grid stencils."""
        g = self.grid
        return (g.first_derivative(self.u), g.first_derivative(self.v),
                g.first_derivative(self.w))


def default_grid(params: ModelParams, singular: SingularFront | None = None,
                 *, dx_factor: float = 1.0, zeta_half: float = 10.0,
                 n_max_uniform: int = 26001) -> Grid1D:
    """Grid sized from the singular front: slow extent, layer-scale spacing.

    The half-width covers `zeta_half` slow units (acid tails decay like
    exp(-sqrt(delta3) |zeta|)); the target spacing resolves the layer
    steepness. When a uniform grid would need too many nodes the sinh-
    stretched variant is used, keeping the same center spacing and a far
    field that still resolves the slow acid scale.
    """
    if singular is None:
        singular = build_singular_front(params)
    sd3 = np.sqrt(params.delta3)
    b = singular.layer.steepness
    xi_half = max(zeta_half / sd3 / params.epsilon, 40.0 / b)
    dx = 0.04 * dx_factor / b
    n_uniform = int(np.ceil(2.0 * xi_half / dx)) + 1
    if n_uniform <= n_max_uniform:
        return Grid1D.uniform(xi_half, n_uniform)
    h_slow = 0.03 * dx_factor / (params.epsilon * sd3)
    ratio = max(h_slow / dx, 2.0)
    beta = float(np.arccosh(ratio))
    n = int(np.ceil(2.0 * xi_half * beta / (dx * np.sinh(beta)))) + 1
    return Grid1D.stretched(xi_half, n, beta)


def tw_residual(params: ModelParams, grid: Grid1D, u: np.ndarray, v: np.ndarray,
                w: np.ndarray, c: float,
                singular: SingularFront | None = None):
    """Residual triple of the wave system on the full grid.

    Interior rows hold the discretized equations (acid row in its
    diffusion-scaled form); boundary rows hold the clamping defect against
    the far-field states.
    """
    if singular is None:
        singular = build_singular_front(params)
    jet = reaction_jet(params, u[1:-1], v[1:-1], w[1:-1])
    eps2 = params.epsilon**2

    r_u = np.empty_like(u)
    r_v = np.empty_like(v)
    r_w = np.empty_like(w)
    r_u[1:-1] = jet.F - c * grid.first_derivative(u)
    r_v[1:-1] = (jet.G + grid.flux_divergence(1.0 + params.kappa - u, v)
                 - c * grid.first_derivative(v))
    r_w[1:-1] = eps2 * (jet.H - c * grid.first_derivative(w)) + grid.second_derivative(w)

    vp = singular.orbits.v_plus_eq
    u_right = max(1.0 - params.delta1 * vp, 0.0)
    r_u[0], r_v[0], r_w[0] = u[0] - 1.0, v[0], w[0]
    r_u[-1], r_v[-1], r_w[-1] = u[-1] - u_right, v[-1] - vp, w[-1] - vp
    return r_u, r_v, r_w


def _interleave(r_u, r_v, r_w) -> np.ndarray:
    out = np.empty(3 * r_u.size)
    out[0::3], out[1::3], out[2::3] = r_u, r_v, r_w
    return out


def assemble_operator(params: ModelParams, grid: Grid1D, u: np.ndarray,
                      v: np.ndarray, w: np.ndarray, c: float, *,
                      newton_scaling: bool, ell: float = 0.0) -> BandAssembler:
    """Banded linearization on the interior unknowns (Dirichlet eliminated).

    With newton_scaling=True the acid rows carry the eps^2 diffusion scaling
    of the Newton residual; with False they are the raw spectral operator
    rows (reaction and advection as-is, diffusion times 1/eps^2), and ell
    adds the transverse term -ell^2 diag(0, 1 + kappa - u, 1/eps^2).
    """
    m = grid.n - 2
    jet = reaction_jet(params, u[1:-1], v[1:-1], w[1:-1])
    eps2 = params.epsilon**2
    react_w = eps2 if newton_scaling else 1.0
    diff_w = 1.0 if newton_scaling else 1.0 / eps2

    a1, b1, c1 = grid.d1
    a2, b2, c2 = grid.d2
    hm, hp, hbar = grid.h_minus, grid.h_plus, grid.h_bar
    dcoef = 1.0 + params.kappa - u
    d_lo = 0.5 * (dcoef[:-2] + dcoef[1:-1]) / (hm * hbar)   # D_{i-1/2} weight
    d_hi = 0.5 * (dcoef[1:-1] + dcoef[2:]) / (hp * hbar)    # D_{i+1/2} weight
    dv_lo = (v[1:-1] - v[:-2]) / (hm * hbar)                # (v_i - v_{i-1})/...
    dv_hi = (v[2:] - v[1:-1]) / (hp * hbar)

    asm = BandAssembler(3 * m, KL, KU)
    k = np.arange(m)
    iu, iv, iw = 3 * k, 3 * k + 1, 3 * k + 2

    # u rows: F_u - c d1 on u, F_w on w
    asm.add(iu, iu, jet.F_u - c * b1)
    asm.add(iu[1:], iu[:-1], -c * a1[1:])
    asm.add(iu[:-1], iu[1:], -c * c1[:-1])
    asm.add(iu, iw, jet.F_w)

    # v rows: diffusion + advection + kinetics, plus coupling to u through
    # the degenerate coefficient 1 + kappa - u
    asm.add(iv, iv, jet.G_v - d_hi - d_lo - c * b1)
    asm.add(iv[1:], iv[:-1], d_lo[1:] - c * a1[1:])
    asm.add(iv[:-1], iv[1:], d_hi[:-1] - c * c1[:-1])
    asm.add(iv, iw, jet.G_w)
    asm.add(iv, iu, 0.5 * (dv_lo - dv_hi))
    asm.add(iv[1:], iu[:-1], 0.5 * dv_lo[1:])
    asm.add(iv[:-1], iu[1:], -0.5 * dv_hi[:-1])

    # w rows
    asm.add(iw, iv, react_w * params.delta3)
    asm.add(iw, iw, react_w * (-params.delta3 - c * b1) + diff_w * b2)
    asm.add(iw[1:], iw[:-1], react_w * (-c * a1[1:]) + diff_w * a2[1:])
    asm.add(iw[:-1], iw[1:], react_w * (-c * c1[:-1]) + diff_w * c2[:-1])

    if ell != 0.0:
        ell2 = ell * ell
        asm.add(iv, iv, -ell2 * dcoef[1:-1])
        asm.add(iw, iw, np.full(m, -ell2 * diff_w))
    return asm


def transverse_weight(params: ModelParams, u: np.ndarray) -> np.ndarray:
    """Interleaved diagonal of the transverse-diffusion weight
    diag(0, 1 + kappa - u, 1/eps^2) on the interior nodes."""
    m = u.size - 2
    out = np.empty(3 * m)
    out[0::3] = 0.0
    out[1::3] = 1.0 + params.kappa - u[1:-1]
    out[2::3] = 1.0 / params.epsilon**2
    return out


def _speed_column(params: ModelParams, grid: Grid1D, u, v, w) -> np.ndarray:
    eps2 = params.epsilon**2
    return _interleave(-grid.first_derivative(u), -grid.first_derivative(v),
                       -eps2 * grid.first_derivative(w))


def _check_branch(params: ModelParams, singular: SingularFront, u, v, w):
    vp = singular.orbits.v_plus_eq
    u_right = max(1.0 - params.delta1 * vp, 0.0)
    near_left = abs(u[1] - 1.0) + abs(v[1]) + abs(w[1])
    near_right = abs(u[-2] - u_right) + abs(v[-2] - vp) + abs(w[-2] - vp)
    v_max = float(np.max(v))
    checks = [
        (near_left < 2e-2, f"left tail defect {near_left:.3e}"),
        (near_right < 2e-2, f"right tail defect {near_right:.3e}"),
        (0.5 * singular.v_plus_star < v_max < 1.3 * singular.v_plus_star,
         f"tumor peak {v_max:.3f} vs layer level {singular.v_plus_star:.3f}"),
    ]
    for ok, msg in checks:
        if not ok:
            raise WrongBranch(f"converged to a non-front solution: {msg}")


def solve_front(params: ModelParams, grid: Grid1D | None = None,
                initial: tuple[np.ndarray, np.ndarray, np.ndarray, float] | None = None,
                *, singular: SingularFront | None = None, tol: float = 1e-11,
                max_iter: int = 40) -> FrontProfile:
    """Damped bordered Newton for the front and its speed.

    Initialized from the singular skeleton unless an explicit profile is
    given. The translate is fixed by anchoring v at the node nearest xi = 0
    to half the layer amplitude v+(w*).
    """
    if singular is None:
        singular = build_singular_front(params)
    if grid is None:
        grid = default_grid(params, singular)

    vp = singular.orbits.v_plus_eq
    u_right = max(1.0 - params.delta1 * vp, 0.0)

    if initial is None:
        u, v, w = singular.sample(grid.xi)
        c = singular.c_star
    else:
        u, v, w, c = initial
        u, v, w = u.copy(), v.copy(), w.copy()
    u[0], v[0], w[0] = 1.0, 0.0, 0.0
    u[-1], v[-1], w[-1] = u_right, vp, vp

    i_anchor = grid.nearest(0.0)
    v_target = 0.5 * singular.v_plus_star
    anchor_col = 3 * (i_anchor - 1) + 1  # interleaved interior index of v there

    def merit(uu, vv, ww, cc):
        r = tw_residual(params, grid, uu, vv, ww, cc, singular)
        rnorm = max(np.max(np.abs(r[0][1:-1])), np.max(np.abs(r[1][1:-1])),
                    np.max(np.abs(r[2][1:-1])))
        return max(rnorm, abs(vv[i_anchor] - v_target))

    current = merit(u, v, w, c)
    iterations = 0
    for iterations in range(1, max_iter + 1):
        if current < tol:
            break
        r = tw_residual(params, grid, u, v, w, c, singular)
        rhs = _interleave(r[0][1:-1], r[1][1:-1], r[2][1:-1])
        asm = assemble_operator(params, grid, u, v, w, c, newton_scaling=True)
        lu = BandedLU(asm)
        z1 = lu.solve(-rhs)
        z2 = lu.solve(-_speed_column(params, grid, u, v, w))
        r_phase = v[i_anchor] - v_target
        denom = z2[anchor_col]
        if denom == 0.0:
            raise NewtonDiverged("phase row decoupled from the speed update")
        dc = -(r_phase + z1[anchor_col]) / denom
        dx = z1 + dc * z2

        du, dv, dw = dx[0::3], dx[1::3], dx[2::3]
        alpha, accepted = 1.0, False
        for _ in range(10):
            u_new, v_new, w_new = u.copy(), v.copy(), w.copy()
            u_new[1:-1] += alpha * du
            v_new[1:-1] += alpha * dv
            w_new[1:-1] += alpha * dw
            c_new = c + alpha * dc
            new = merit(u_new, v_new, w_new, c_new)
            if new < current * (1.0 - 0.25 * alpha) or new < tol:
                u, v, w, c, current, accepted = u_new, v_new, w_new, c_new, new, True
                break
            alpha *= 0.5
        if not accepted:
            if current < 1e-9:
                break  # stagnating at the evaluation-noise floor
            raise NewtonDiverged(
                f"no descent at iteration {iterations}, residual {current:.3e}")
    else:
        if current >= max(tol, 1e-9):
            raise NewtonDiverged(
                f"residual {current:.3e} after {max_iter} iterations")

    _check_branch(params, singular, u, v, w)
    return FrontProfile(params=params, grid=grid, u=u, v=v, w=w, c=float(c),
                        residual_norm=float(current),
                        newton_iterations=iterations, singular=singular)


def _crossing(xi: np.ndarray, f: np.ndarray, level: float, rising: bool) -> float | None:
    """First xi where f crosses the level in the given direction."""
    s = f - level
    if rising:
        hits = np.nonzero((s[:-1] < 0) & (s[1:] >= 0))[0]
    else:
        hits = np.nonzero((s[:-1] >= 0) & (s[1:] < 0))[0]
    if hits.size == 0:
        return None
    i = hits[0]
    t = s[i] / (s[i] - s[i + 1])
    return float(xi[i] + t * (xi[i + 1] - xi[i]))


def measure_gap_width(profile: FrontProfile, threshold_factor: float = 10.0) -> float:
    """Width of the dead zone where both u and v sit below a small threshold.

    The threshold defaults to 10 epsilon. Returns 0.0 when tissue never dies
    before the tumor arrives.
    """
    thr = threshold_factor * profile.params.epsilon
    xi = profile.grid.xi
    left = _crossing(xi, profile.u, thr, rising=False)
    right = _crossing(xi, profile.v, thr, rising=True)
    if left is None or right is None or right <= left:
        return 0.0
    both_low = (profile.u[1:-1] < thr) & (profile.v[1:-1] < thr)
    if not np.any(both_low):
        return 0.0
    return right - left


def continue_front(params: ModelParams, param_name: str, values,
                   base: FrontProfile | None = None, *, max_bisections: int = 4,
                   tol: float = 1e-11) -> list[FrontProfile]:
    """Re-solve the front along a sequence of values of one parameter.

    Warm-starts each solve from the previous profile (interpolated when the
    grid changes), falling back to the singular skeleton and then to
    parameter-step bisection. Raises HomotopyStuck when a gap between
    consecutive values cannot be crossed even after `max_bisections` splits.
    """
    profiles: list[FrontProfile] = []
    prev = base

    def solve_at(value, prev_profile):
        p = replace(params, **{param_name: float(value)})
        singular = build_singular_front(p)
        grid = default_grid(p, singular)
        initial = None
        if prev_profile is not None:
            initial = (
                np.interp(grid.xi, prev_profile.grid.xi, prev_profile.u),
                np.interp(grid.xi, prev_profile.grid.xi, prev_profile.v),
                np.interp(grid.xi, prev_profile.grid.xi, prev_profile.w),
                prev_profile.c,
            )
        try:
            return solve_front(p, grid, initial, singular=singular, tol=tol)
        except (NewtonDiverged, WrongBranch):
            if initial is None:
                raise
            return solve_front(p, grid, None, singular=singular, tol=tol)

    for value in values:
        stack = [(float(value), 0)]
        while stack:
            target, depth = stack.pop()
            try:
                prev = solve_at(target, prev)
            except (NewtonDiverged, WrongBranch) as exc:
                if depth >= max_bisections:
                    raise HomotopyStuck(
                        f"{param_name}={target:.6g} unreachable after "
                        f"{depth} bisections: {exc}") from exc
                anchor = getattr(prev.params, param_name) if prev is not None else None
                if anchor is None:
                    raise HomotopyStuck(
                        f"{param_name}={target:.6g} failed with no base point") from exc
                midpoint = 0.5 * (anchor + target)
                stack.append((target, depth + 1))
                stack.append((midpoint, depth + 1))
                continue
            if abs(getattr(prev.params, param_name) - value) < 1e-14 * max(1.0, abs(value)):
                profiles.append(prev)
    return profiles
