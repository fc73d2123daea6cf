"""Linearized transverse stability of computed front profiles.

The long-wavelength curvature coefficient lambda_c,2 (the quadratic growth
rate of transverse perturbations with wavenumber ell) is computed by three
independent routes:

* Solvability: the discrete Fredholm ratio built from the adjoint null
  vector of the linearization about the profile.
* Asymptotic: the leading-order interface expansion through the layer
  adjoint and the slow acid orbits.
* QuadraticFit: curvature of the tracked eigenvalue branch lambda_c(ell).

Operators are assembled once per (profile, ell) and are immutable after
assembly, so independent wavenumbers can be processed concurrently.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.linalg import eig as dense_eig

from .banded import BandAssembler, BandedLU
from .bvp import FrontProfile, assemble_operator, default_grid
from .errors import (
    AdjointDegenerate,
    BranchLost,
    DivergentWeight,
    EigSolverFailure,
)
from .grids import Grid1D
from .model import ModelParams
from .singular import LayerFront, SingularFront

__all__ = [
    "LinearizedOperator",
    "SpectrumResult",
    "AdjointSolution",
    "Lambda2Result",
    "assemble_L",
    "spectrum_1d",
    "critical_curve",
    "solve_adjoint",
    "lambda2_solvability",
    "lambda2_asymptotic",
    "lambda2_from_curve",
    "sign_criterion",
]


@dataclass(frozen=True)
class LinearizedOperator:
    """Banded discretization of the linearization at transverse wavenumber ell.

    Acts on interleaved (u, v, w) interior unknowns with homogeneous
    Dirichlet conditions eliminated; immutable after assembly.
    """

    params: ModelParams
    grid: Grid1D
    ell: float
    matrix: BandAssembler
    profile_id: str

    @property
    def n(self) -> int:
        return self.matrix.n

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.matrix.matvec(x)

    def rmatvec(self, x: np.ndarray) -> np.ndarray:
        return self.matrix.rmatvec(x)

    def scale(self) -> float:
        """Magnitude of the largest entry, the natural residual scale."""
        return float(np.max(np.abs(self.matrix.ab)))


@dataclass(frozen=True)
class SpectrumResult:
    ell: float
    eigenvalues: tuple[complex, ...]  # sorted by real part, descending
    leading: complex                  # branch continuing the translation mode
    n_unstable_excluding_translation: int


@dataclass(frozen=True)
class AdjointSolution:
    """Bounded null solution of the transposed linearization.

    Normalized so the pairing with the profile derivative equals one.
    """

    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    residual: float  # transposed-operator residual relative to its scale


@dataclass(frozen=True)
class Lambda2Result:
    value: float
    method: str  # Solvability | Asymptotic | QuadraticFit
    sign: int
    components: dict[str, float] = field(default_factory=dict)


def assemble_L(profile: FrontProfile, ell: float = 0.0) -> LinearizedOperator:
    """Linearization about the profile, with the transverse -ell^2 terms."""
    asm = assemble_operator(profile.params, profile.grid, profile.u, profile.v,
                            profile.w, profile.c, newton_scaling=False, ell=ell)
    pid = f"n={profile.grid.xi.size};c={profile.c:.12g};ell={ell:.8g}"
    return LinearizedOperator(params=profile.params, grid=profile.grid,
                              ell=ell, matrix=asm, profile_id=pid)


def _wave_derivative(profile: FrontProfile) -> np.ndarray:
    du, dv, dw = profile.derivative()
    out = np.empty(3 * du.size)
    out[0::3], out[1::3], out[2::3] = du, dv, dw
    return out


def _inverse_iteration(op: LinearizedOperator, sigma: complex,
                       seed: np.ndarray, *, max_iter: int = 40,
                       tol: float = 1e-13, accept: float = 1e-9,
                       transposed: bool = False):
    """Shifted inverse iteration with Rayleigh updates.

    Returns (eigenvalue, unit eigenvector, relative residual). The residual
    is measured against the operator's entry scale, which is the honest
    floor for an operator carrying the 1/eps^2 acid diffusion. Rayleigh
    updates can limit-cycle on complex pairs of the nonsymmetric matrix, so
    the best iterate is kept and returned if it clears `accept`.
    """
    scale = op.scale()
    x = seed.astype(np.result_type(seed.dtype, type(sigma)), copy=True)
    x /= np.linalg.norm(x)
    lam = sigma
    best_lam, best_x, best_res = lam, x, np.inf
    for _ in range(max_iter):
        try:
            lu = BandedLU(op.matrix.shifted(lam))
        except np.linalg.LinAlgError:
            lu = BandedLU(op.matrix.shifted(lam + 1e-13 * max(scale, 1.0)))
        y = lu.solve(x, transposed=transposed)
        ny = np.linalg.norm(y)
        if not np.isfinite(ny) or ny == 0.0:
            raise EigSolverFailure("inverse iteration produced a non-finite step")
        x = y / ny
        ax = op.rmatvec(x) if transposed else op.matvec(x)
        lam = np.vdot(x, ax)
        res = float(np.linalg.norm(ax - lam * x) / scale)
        if res < best_res:
            best_lam, best_x, best_res = lam, x.copy(), res
        if res < tol:
            break
    if best_res > accept:
        raise EigSolverFailure(
            f"no eigenpair near shift {sigma:.6g} after {max_iter} iterations "
            f"(relative residual {best_res:.3e})")
    if abs(best_lam.imag) <= 1e-12 * max(1.0, abs(best_lam.real)):
        best_lam = best_lam.real
    return best_lam, best_x, best_res


def _prolong(coarse: Grid1D, fine: Grid1D, vec: np.ndarray) -> np.ndarray:
    """Interpolate an interleaved interior vector between grids."""
    xc, xf = coarse.xi[1:-1], fine.xi[1:-1]
    out = np.empty(3 * xf.size, dtype=vec.dtype)
    for comp in range(3):
        col = vec[comp::3]
        if np.iscomplexobj(vec):
            out[comp::3] = (np.interp(xf, xc, col.real)
                            + 1j * np.interp(xf, xc, col.imag))
        else:
            out[comp::3] = np.interp(xf, xc, col)
    return out


def _coarse_operator(profile: FrontProfile, max_nodes: int):
    """Dense-solvable restriction of the linearization for seed eigenvalues."""
    n_fine = profile.grid.xi.size
    factor = max(1.0, n_fine / max_nodes)
    grid = default_grid(profile.params, profile.singular, dx_factor=factor,
                        n_max_uniform=max_nodes)
    while grid.xi.size > max_nodes:
        factor *= 1.3
        grid = default_grid(profile.params, profile.singular, dx_factor=factor,
                            n_max_uniform=max_nodes)
    u = np.interp(grid.xi, profile.grid.xi, profile.u)
    v = np.interp(grid.xi, profile.grid.xi, profile.v)
    w = np.interp(grid.xi, profile.grid.xi, profile.w)
    asm = assemble_operator(profile.params, grid, u, v, w, profile.c,
                            newton_scaling=False, ell=0.0)
    return grid, asm


def spectrum_1d(profile: FrontProfile, n_eigs: int = 12, *,
                coarse_max_nodes: int = 900,
                unstable_tol: float = 1e-4) -> SpectrumResult:
    """Rightmost eigenvalues of the linearization at ell = 0.

    A dense eigensolve on a coarsened restriction seeds shifted inverse
    iteration on the full grid; complex eigenvalues are refined once and
    emitted together with their conjugates (the operator is real).
    """
    op = assemble_L(profile, 0.0)
    qprime = _wave_derivative(profile)
    coarse_grid, coarse_asm = _coarse_operator(profile, coarse_max_nodes)
    vals, vecs = dense_eig(coarse_asm.to_dense())
    order = np.argsort(-vals.real)

    refined: list[complex] = []
    leading = None
    leading_overlap = 0.0
    qn = qprime / np.linalg.norm(qprime)
    seen: list[complex] = []
    scale = op.scale()
    for idx in order:
        if len(refined) >= n_eigs:
            break
        lam_c = vals[idx]
        if lam_c.imag < -1e-12 * max(1.0, abs(lam_c.real)):
            continue  # conjugate twin handled with its partner
        seed = _prolong(coarse_grid, profile.grid, np.ascontiguousarray(vecs[:, idx]))
        sigma = complex(lam_c) if abs(lam_c.imag) > 1e-12 else float(lam_c.real)
        lam, vec, _ = _inverse_iteration(op, sigma, seed)
        if any(abs(lam - s) <= 1e-9 * max(1.0, abs(s)) + 1e-13 * scale for s in seen):
            continue
        seen.append(lam)
        overlap = abs(np.vdot(vec, qn))
        if overlap > leading_overlap:
            leading_overlap, leading = overlap, lam
        refined.append(complex(lam))
        if abs(complex(lam).imag) > 0.0:
            refined.append(complex(lam).conjugate())
    if leading is None:
        raise EigSolverFailure("no eigenvalue could be refined from the coarse seeds")

    # truncate without splitting a conjugate pair across the cut
    ranked = sorted(refined, key=lambda z: (-z.real, -abs(z.imag), -z.imag))
    eigs: list[complex] = []
    i = 0
    while i < len(ranked) and len(eigs) < n_eigs:
        z = ranked[i]
        if z.imag != 0.0:
            if len(eigs) + 2 > n_eigs:
                break
            eigs.extend(ranked[i:i + 2])
            i += 2
        else:
            eigs.append(z)
            i += 1
    eigs.sort(key=lambda z: (-z.real, -z.imag))
    n_unstable = sum(1 for z in eigs
                     if z.real > unstable_tol and z != complex(leading))
    return SpectrumResult(ell=0.0, eigenvalues=tuple(eigs),
                          leading=complex(leading),
                          n_unstable_excluding_translation=n_unstable)


def critical_curve(profile: FrontProfile, ell_values) -> list[tuple[float, float]]:
    """Track the eigenvalue branch continuing from the translation mode.

    Follows the branch over the given wavenumbers by seeding each inverse
    iteration with the previous eigenvector; identity is enforced through
    eigenvector overlap.
    """
    op0 = assemble_L(profile, 0.0)
    lam0, vec0, _ = _inverse_iteration(op0, 0.0, _wave_derivative(profile))
    lam0 = float(np.real(lam0))
    history: list[tuple[float, float]] = [(0.0, lam0)]
    prev_vec = vec0

    out: list[tuple[float, float]] = []
    for ell in ell_values:
        ell = float(ell)
        if ell == 0.0:
            out.append((0.0, lam0))
            continue
        # predict along the branch, quadratic in ell
        (l1, v1) = history[-1]
        if len(history) >= 2:
            (l0_, v0_) = history[-2]
            slope = (v1 - v0_) / (l1**2 - l0_**2)
            sigma = v1 + slope * (ell**2 - l1**2)
        else:
            sigma = v1
        op = assemble_L(profile, ell)
        lam, vec, _ = _inverse_iteration(op, float(sigma), np.real(prev_vec))
        overlap = abs(np.vdot(vec, prev_vec)) / (
            np.linalg.norm(vec) * np.linalg.norm(prev_vec))
        if overlap < 0.5:
            raise BranchLost(
                f"eigenvector overlap {overlap:.3f} < 0.5 at ell={ell:.6g}")
        lam = float(np.real(lam))
        history.append((ell, lam))
        prev_vec = vec
        out.append((ell, lam))
    return out


def _two_smallest_singular_values(op: LinearizedOperator, *, iters: int = 20,
                                  seed: int = 0) -> tuple[float, float]:
    """Smallest two singular values by deflated inverse iteration on A^T A."""
    lu = BandedLU(op.matrix)
    rng = np.random.default_rng(seed)
    x1 = rng.standard_normal(op.n)
    x2 = rng.standard_normal(op.n)
    for _ in range(iters):
        # (A^T A)^{-1} x = A^{-1} A^{-T} x
        x1 = lu.solve(lu.solve(x1, transposed=True))
        x1 /= np.linalg.norm(x1)
        x2 = lu.solve(lu.solve(x2, transposed=True))
        x2 -= (x1 @ x2) * x1
        nx2 = np.linalg.norm(x2)
        if nx2 == 0.0:
            x2 = rng.standard_normal(op.n)
            nx2 = np.linalg.norm(x2)
        x2 /= nx2
    s1 = float(np.linalg.norm(op.matvec(x1)))
    s2 = float(np.linalg.norm(op.matvec(x2)))
    return (s1, s2) if s1 <= s2 else (s2, s1)


def solve_adjoint(profile: FrontProfile) -> AdjointSolution:
    """Null vector of the transposed linearization, unit-paired with the wave
    derivative.

    The vector is found by transposed inverse iteration at the translation
    eigenvalue; degeneracy of the null space is guarded by comparing the two
    smallest singular values of the operator.
    """
    op = assemble_L(profile, 0.0)
    qprime = _wave_derivative(profile)
    lam0, _, _ = _inverse_iteration(op, 0.0, qprime)

    s1, s2 = _two_smallest_singular_values(op)
    if s2 < 10.0 * s1:
        raise AdjointDegenerate(
            f"null space ambiguous: smallest singular values {s1:.3e}, {s2:.3e}")

    rng = np.random.default_rng(1)
    lam_a, y, res = _inverse_iteration(op, float(np.real(lam0)),
                                       rng.standard_normal(op.n),
                                       transposed=True)
    y = np.real(y)
    pairing = float(y @ qprime)
    if abs(pairing) < 1e-8 * np.linalg.norm(y) * np.linalg.norm(qprime):
        raise AdjointDegenerate(
            f"adjoint pairing with the wave derivative is degenerate "
            f"({pairing:.3e})")
    y = y / pairing

    n_nodes = profile.grid.xi.size
    full = np.zeros((3, n_nodes))
    full[0, 1:-1], full[1, 1:-1], full[2, 1:-1] = y[0::3], y[1::3], y[2::3]
    return AdjointSolution(u=full[0], v=full[1], w=full[2], residual=res)


def lambda2_solvability(profile: FrontProfile) -> Lambda2Result:
    """Curvature coefficient from the discrete solvability ratio.

    The adjoint null vector absorbs the quadrature weights of the grid, so
    the pairings reduce to plain dot products; the acid term carries the
    1/eps^2 disparity and is accumulated with compensated summation.
    """
    adj = solve_adjoint(profile)
    du, dv, dw = profile.derivative()
    p = profile.params
    inv_eps2 = 1.0 / p.epsilon**2
    dcoef = 1.0 + p.kappa - profile.u[1:-1]

    num_v = math.fsum(dcoef * dv * adj.v[1:-1])
    num_w = math.fsum(inv_eps2 * dw * adj.w[1:-1])
    den = math.fsum(du * adj.u[1:-1]) + math.fsum(dv * adj.v[1:-1]) \
        + math.fsum(dw * adj.w[1:-1])
    value = -(num_v + num_w) / den
    return Lambda2Result(
        value=value, method="Solvability", sign=int(np.sign(value)),
        components={"numerator_v": num_v, "numerator_w": num_w,
                    "denominator": den, "adjoint_residual": adj.residual})


def _weight_rates(layer: LayerFront, c_star: float) -> tuple[float, float]:
    """(profile decay rate of v_xi, growth rate of the adjoint weight)."""
    kappa_plus = 2.0 * layer.steepness
    mu = c_star / layer.diffusivity
    return kappa_plus, mu


def _layer_integrals(layer: LayerFront, c_star: float, u_star: float,
                     f_u: float) -> dict[str, float]:
    """Weighted layer quadratures entering the leading-order coefficient.

    All integrands decay exponentially; the truncation points come from the
    analytic envelopes of the tanh layer against the adjoint weight.
    """
    kappa_plus, mu = _weight_rates(layer, c_star)
    if 2.0 * kappa_plus <= mu:
        raise DivergentWeight(
            f"adjoint weight grows at rate {mu:.4g}, profile decays at rate "
            f"{2.0 * kappa_plus:.4g}; weighted integrals diverge")
    # envelope e^{-(2 kappa_plus - mu)|xi|} on the left, e^{-(2 kappa_plus +
    # mu) xi} on the right; truncate below 1e-14 with margin
    xi_left = -40.0 / (2.0 * kappa_plus - mu)
    xi_right = 40.0 / (2.0 * kappa_plus + mu) + 40.0 / kappa_plus

    def weighted(f):
        val, err = quad(f, xi_left, xi_right, limit=200, epsabs=1e-13,
                        epsrel=1e-12)
        return val

    j_v = weighted(lambda x: layer.v_xi(x)**2 * np.exp(-mu * x))
    int_v_vbar = weighted(lambda x: layer.v(x) * layer.v_xi(x) * np.exp(-mu * x))

    int_ubar = 0.0
    if u_star > 0.0:
        # adjoint tissue response: c u' + F_u u + v_xi vbar_xi = 0 integrated
        # backward from the tumor side where the forcing has died out
        def rhs(x, y):
            vbar_xi = (layer.v_xixi(x) - mu * layer.v_xi(x)) * np.exp(-mu * x)
            force = layer.v_xi(x) * vbar_xi
            return [-(f_u * y[0] + force) / c_star, y[0]]

        sol = solve_ivp(rhs, (xi_right, xi_left), [0.0, 0.0],
                        rtol=1e-11, atol=1e-14, method="RK45")
        if not sol.success:
            raise DivergentWeight(
                f"adjoint tissue integration failed: {sol.message}")
        int_ubar = -float(sol.y[1, -1])
    return {"j_v": j_v, "int_v_vbar": int_v_vbar, "int_ubar": int_ubar}


def _coupling_integral(singular: SingularFront) -> tuple[float, dict[str, float]]:
    p = singular.params
    c_star = singular.c_star
    if c_star <= 0.0:
        raise DivergentWeight(
            f"leading-order expansion assumes an invading front; got speed "
            f"{c_star:.6g} <= 0")
    u_star = singular.u_star
    f_u = 1.0 - 2.0 * u_star - p.delta1 * singular.w_star
    parts = _layer_integrals(singular.layer, c_star, u_star, f_u)
    coupling_u = p.delta1 * u_star * parts["int_ubar"]
    coupling_v = p.delta2 * parts["int_v_vbar"]
    coupling = coupling_u + coupling_v
    parts.update({"coupling_u": coupling_u, "coupling_v": coupling_v})
    return coupling, parts


def lambda2_asymptotic(singular: SingularFront,
                       params: ModelParams | None = None) -> Lambda2Result:
    """Curvature coefficient from the sharp-interface expansion.

    Two effects compete: the acid gradient behind the front destabilizes
    transverse ripples through the coupling integral (carrying the 1/eps
    prefactor), while the tumor interface's own transverse diffusion
    stabilizes them by -(1+kappa-u*). Both terms are exposed in the
    components for auditing against the discrete solvability route.
    """
    p = params if params is not None else singular.params
    if params is not None and params != singular.params:
        raise ValueError("params disagree with the singular front's parameters")
    coupling, parts = _coupling_integral(singular)
    slow = singular.orbits.I_minus + singular.orbits.I_plus
    v_plus_star = singular.v_plus_star
    alpha_ratio = -coupling / (p.delta3 * v_plus_star)
    p_star = np.sqrt(p.delta3) * singular.w_star
    # destabilizing acid feedback, O(1/eps) in the coupling strength
    coupling_term = coupling * slow / (
        p.epsilon * p.delta3 * v_plus_star * parts["j_v"])
    # the interface's own transverse diffusion contributes -(1+kappa-u*)
    # exactly: the weighted pairing of v_xi with itself reproduces the fast
    # denominator, so the ratio collapses to the layer diffusivity
    interface_diffusion = singular.layer.diffusivity
    value = coupling_term - interface_diffusion
    return Lambda2Result(
        value=value, method="Asymptotic", sign=int(np.sign(value)),
        components={
            "slow_integral": slow,
            "fast_weighted_norm": parts["j_v"],
            "coupling_integral": coupling,
            "coupling_u": parts["coupling_u"],
            "coupling_v": parts["coupling_v"],
            "coupling_term": coupling_term,
            "interface_diffusion": interface_diffusion,
            "alpha_ratio": alpha_ratio,
            "w_bar_correction": p.epsilon * alpha_ratio * p_star,
            "epsilon": p.epsilon,
        })


def sign_criterion(singular: SingularFront,
                   params: ModelParams | None = None) -> int:
    """Sign of the coupling integral, the leading-order stability verdict."""
    if params is not None and params != singular.params:
        raise ValueError("params disagree with the singular front's parameters")
    coupling, _ = _coupling_integral(singular)
    return int(np.sign(coupling))


def lambda2_from_curve(profile: FrontProfile, *, ell_max: float | None = None,
                       n_points: int = 7) -> Lambda2Result:
    """Curvature coefficient fitted from the tracked branch lambda_c(ell).

    The window is capped by the wavenumber where the transverse acid
    response changes character (ell ~ eps sqrt(delta3)); a quartic term in
    the fit absorbs the remainder.
    """
    p = profile.params
    if ell_max is None:
        ell_max = 0.8 * p.epsilon * np.sqrt(p.delta3)
    op0 = assemble_L(profile, 0.0)
    lam0, _, _ = _inverse_iteration(op0, 0.0, _wave_derivative(profile))
    lam0 = float(np.real(lam0))

    # shrink the window until the quartic remainder is a small correction
    # at the window edge, so the fitted curvature is window-independent
    coef = np.zeros(2)
    shrinks = 0
    while True:
        ells = ell_max * np.arange(1, n_points + 1) / n_points
        curve = critical_curve(profile, ells)
        ls = np.array([ell for ell, _ in curve])
        lams = np.array([lam for _, lam in curve]) - lam0
        basis = np.column_stack([(ls / ell_max)**2, (ls / ell_max)**4])
        coef, *_ = np.linalg.lstsq(basis, lams, rcond=None)
        if abs(coef[1]) <= 0.1 * abs(coef[0]) or shrinks >= 6:
            break
        ell_max *= 0.5
        shrinks += 1
    value = float(coef[0] / ell_max**2)
    quartic = float(coef[1] / ell_max**4)
    return Lambda2Result(
        value=value, method="QuadraticFit", sign=int(np.sign(value)),
        components={"ell_max": float(ell_max), "lambda0": lam0,
                    "quartic_coeff": quartic, "n_points": float(n_points),
                    "window_shrinks": float(shrinks)})
