"""Sharp-interface construction of the invasion front.

For small epsilon the front splits into a fast tumor interface at a frozen
acid level w (the layer) and slow acid dynamics on the manifolds where the
tumor kinetics are at rest (the reduced flow). This module builds all the
pieces: the slow-manifold tumor branches, the explicit tanh layer front and
its speed, the matched acid level w*, the slow orbits with their conserved
energies, and the resulting regime classification (benign, malignant with or
without a healthy-tissue gap).

Throughout, zeta = epsilon * xi denotes the slow traveling-wave variable.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from .errors import BeyondFold, IntegrationFailure, NoRoot, SubspaceInvalid
from .model import ModelParams, compute_v_pm

__all__ = [
    "LayerFront",
    "SlowOrbits",
    "Regime",
    "GapWidth",
    "SingularFront",
    "layer_branches",
    "layer_front",
    "layer_speed",
    "solve_w_star",
    "hamiltonian_minus",
    "hamiltonian_plus",
    "slow_orbits",
    "classify_regime",
    "singular_gap_width",
    "build_singular_front",
]

# Tolerance deciding when delta1*w* is treated as exactly 1.
CROSSOVER_TOL = 1e-8


def _radicand(params: ModelParams, w) -> np.ndarray:
    """(1-a)^2 - 4 delta2 w / rho, the discriminant of the frozen-w kinetics."""
    return (1.0 - params.a) ** 2 - 4.0 * params.delta2 * np.asarray(w, dtype=float) / params.rho


def layer_branches(params: ModelParams, w: float) -> tuple[float, float]:
    """Tumor rest states (v-(w), v+(w)) of the layer kinetics at acid level w.

    Raises BeyondFold past the fold w_fold = rho (1-a)^2 / (4 delta2).
    """
    w = float(w)
    if w < 0.0:
        raise ValueError(f"acid level must be nonnegative, got {w}")
    rad = float(_radicand(params, w))
    if rad < 0.0:
        raise BeyondFold(f"acid level w={w} lies beyond the fold of the tumor branches")
    root = np.sqrt(rad)
    return 0.5 * (1.0 + params.a - root), 0.5 * (1.0 + params.a + root)


def _diffusivity(params: ModelParams, w: float, subspace: str) -> float:
    """Effective tumor diffusivity on the invaded subspace.

    'healthy' means the layer propagates into tissue with u = 1 - delta1 w,
    'empty' means the tissue is already destroyed (u = 0).
    """
    if subspace == "healthy":
        if params.delta1 * w >= 1.0:
            raise SubspaceInvalid(
                f"healthy subspace needs delta1*w < 1, got {params.delta1 * w:.6g}"
            )
        return params.kappa + params.delta1 * w
    if subspace == "empty":
        return 1.0 + params.kappa
    raise ValueError(f"subspace must be 'healthy' or 'empty', got {subspace!r}")


def layer_speed(params: ModelParams, w: float, subspace: str) -> float:
    """Propagation speed of the planar tumor interface at frozen acid level w.

    The cubic layer kinetics rho v (v - v-)(v+ - v) with diffusivity D admit
    the explicit front below, whose speed is sqrt(2 D rho) (v+/2 - v-).
    """
    d = _diffusivity(params, w, subspace)
    v_minus, v_plus = layer_branches(params, w)
    return float(np.sqrt(2.0 * d * params.rho) * (0.5 * v_plus - v_minus))


@dataclass(frozen=True)
class LayerFront:
    """Explicit tanh interface v(xi) = (v_plus/2) (1 + tanh(b xi)) at frozen w."""

    w: float
    subspace: str
    u: float
    diffusivity: float
    v_minus: float
    v_plus: float
    speed: float
    steepness: float  # b above; layer width ~ 1/b

    def v(self, xi) -> np.ndarray:
        return 0.5 * self.v_plus * (1.0 + np.tanh(self.steepness * np.asarray(xi, dtype=float)))

    def v_xi(self, xi) -> np.ndarray:
        sech2 = 1.0 / np.cosh(self.steepness * np.asarray(xi, dtype=float)) ** 2
        return 0.5 * self.v_plus * self.steepness * sech2

    def v_xixi(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        t = np.tanh(self.steepness * xi)
        return -self.v_plus * self.steepness**2 * (1.0 - t * t) * t


def layer_front(params: ModelParams, w: float, subspace: str) -> LayerFront:
    """The rising tumor interface at acid level w on the given subspace."""
    d = _diffusivity(params, w, subspace)
    v_minus, v_plus = layer_branches(params, w)
    u = 0.0 if subspace == "empty" else 1.0 - params.delta1 * w
    b = 0.5 * v_plus * np.sqrt(params.rho / (2.0 * d))
    c = layer_speed(params, w, subspace)
    return LayerFront(float(w), subspace, float(u), float(d), v_minus, v_plus, c, float(b))


def _v_plus_antiderivative(params: ModelParams, z) -> np.ndarray:
    """Antiderivative of the upper tumor branch v+(.)."""
    z = np.asarray(z, dtype=float)
    if params.delta2 == 0.0:
        # v+ == 1 identically
        return z
    rad = _radicand(params, z)
    return 0.5 * ((1.0 + params.a) * z
                  - params.rho / (6.0 * params.delta2) * np.power(rad, 1.5))


def solve_w_star(params: ModelParams) -> float:
    """Acid level selected by matching the slow orbits across the interface.

    w* is the root of (V+)^2 + int_{V+}^{w} (1 + a + sqrt(radicand(z))) dz = 0
    in (0, V+). For delta2 = 0 the integrand is the constant 2 and w* = 1/2
    exactly. w* never depends on delta1.
    """
    if params.delta2 == 0.0:
        return 0.5
    _, v_plus_eq = compute_v_pm(params)

    phi = lambda z: 2.0 * _v_plus_antiderivative(params, z)

    def residual(w):
        return v_plus_eq**2 + phi(w) - phi(v_plus_eq)

    lo, hi = 0.0, v_plus_eq
    if residual(lo) >= 0.0 or residual(hi) <= 0.0:
        raise NoRoot(
            f"matching residual does not change sign on (0, {v_plus_eq:.6g}); "
            f"endpoint values {residual(lo):.3e}, {residual(hi):.3e}"
        )
    return float(brentq(residual, lo, hi, xtol=1e-15, rtol=8.9e-16, maxiter=200))


def hamiltonian_minus(params: ModelParams, w, p) -> np.ndarray:
    """Conserved energy of the slow flow ahead of the interface (v = 0)."""
    w = np.asarray(w, dtype=float)
    p = np.asarray(p, dtype=float)
    return 0.5 * p * p - 0.5 * params.delta3 * w * w


def _orbit_gap(params: ModelParams, w, v_plus_eq: float) -> np.ndarray:
    """S(w) = 2 int_{V+}^{w} (z - v+(z)) dz, so that p = sqrt(delta3 S) behind."""
    w = np.asarray(w, dtype=float)
    return (w * w - v_plus_eq**2
            - 2.0 * (_v_plus_antiderivative(params, w)
                     - _v_plus_antiderivative(params, v_plus_eq)))


def hamiltonian_plus(params: ModelParams, w, p, v_plus_eq: float | None = None) -> np.ndarray:
    """Conserved energy of the slow flow behind the interface (v = v+(w)).

    Normalized to vanish at the tumorous rest state (V+, 0).
    """
    if v_plus_eq is None:
        _, v_plus_eq = compute_v_pm(params)
    p = np.asarray(p, dtype=float)
    return 0.5 * p * p - 0.5 * params.delta3 * _orbit_gap(params, w, v_plus_eq)


@dataclass(frozen=True)
class SlowOrbits:
    """Sampled heteroclinic acid orbits w(zeta) on both sides of the interface.

    The minus orbit runs over zeta <= 0 (ahead, exponential decay to 0); the
    plus orbit over zeta >= 0 (behind, saddle approach to V+ at rate
    `saddle_rate`). I_minus and I_plus are the squared-slope integrals
    int (dw/dzeta)^2 dzeta of the two halves.
    """

    w_star: float
    v_plus_eq: float
    I_minus: float
    I_plus: float
    saddle_rate: float
    zeta_minus: np.ndarray
    w_minus: np.ndarray
    p_minus: np.ndarray
    zeta_plus: np.ndarray
    w_plus: np.ndarray
    p_plus: np.ndarray


def _v_plus_branch_derivative(params: ModelParams, w: float) -> float:
    """d v+/dw, needed for the saddle rate at V+."""
    if params.delta2 == 0.0:
        return 0.0
    rad = float(_radicand(params, w))
    if rad <= 0.0:
        raise BeyondFold(f"branch derivative undefined at the fold, w={w}")
    return -(params.delta2 / params.rho) / np.sqrt(rad)


def slow_orbits(params: ModelParams, w_star: float | None = None,
                n_samples: int = 600) -> SlowOrbits:
    """Construct both slow acid orbits through the matching point.

    Ahead of the interface the orbit is explicit, w = w* exp(sqrt(delta3)
    zeta). Behind it, the orbit follows the zero level of the conserved
    energy; zeta(w) and I_plus are computed by adaptive quadrature along it.
    """
    _, v_plus_eq = compute_v_pm(params)
    if w_star is None:
        w_star = solve_w_star(params)
    sd3 = np.sqrt(params.delta3)

    zeta_minus = np.linspace(-12.0 / sd3, 0.0, n_samples)
    w_minus = w_star * np.exp(sd3 * zeta_minus)
    p_minus = sd3 * w_minus
    i_minus = 0.5 * sd3 * w_star**2

    def p_of_w(w):
        gap = _orbit_gap(params, w, v_plus_eq)
        return np.sqrt(params.delta3 * np.maximum(gap, 0.0))

    # Cluster samples toward the saddle: V+ - w shrinks quadratically in t.
    span = v_plus_eq - w_star
    if span <= 0.0:
        raise IntegrationFailure(
            f"matched acid level w*={w_star:.6g} is not below V+={v_plus_eq:.6g}"
        )
    t = np.linspace(0.0, 1.0, n_samples)
    w_plus = v_plus_eq - span * (1.0 - t) ** 2
    w_plus[0] = w_star
    w_plus = w_plus[:-1]  # stop short of the saddle itself
    p_plus = p_of_w(w_plus)

    inv_p = lambda w: 1.0 / p_of_w(w)
    zeta_plus = np.empty_like(w_plus)
    zeta_plus[0] = 0.0
    with warnings.catch_warnings():
        # the error estimator is pessimistic on the short near-saddle
        # segments; accuracy there is controlled by the sampling itself
        warnings.simplefilter("ignore", IntegrationWarning)
        for j in range(1, len(w_plus)):
            seg, seg_err = quad(inv_p, w_plus[j - 1], w_plus[j], limit=200)
            if not np.isfinite(seg):
                raise IntegrationFailure(
                    f"slow-orbit time map diverged near w={w_plus[j]:.6g}")
            zeta_plus[j] = zeta_plus[j - 1] + seg

    # integrate in s with w = V+ - s^2: near the equilibria fold the saddle
    # degenerates and p(w) develops a root-type corner at V+; the quadratic
    # substitution keeps the integrand smooth there
    i_plus, err = quad(lambda s: 2.0 * s * p_of_w(v_plus_eq - s * s),
                       0.0, np.sqrt(span), limit=200)
    if not np.isfinite(i_plus) or err > 1e-9 * max(1.0, abs(i_plus)):
        raise IntegrationFailure(f"I_plus quadrature error {err:.3e}")

    mu = np.sqrt(params.delta3 * (1.0 - _v_plus_branch_derivative(params, v_plus_eq)))
    return SlowOrbits(
        w_star=float(w_star),
        v_plus_eq=float(v_plus_eq),
        I_minus=float(i_minus),
        I_plus=float(i_plus),
        saddle_rate=float(mu),
        zeta_minus=zeta_minus,
        w_minus=w_minus,
        p_minus=p_minus,
        zeta_plus=zeta_plus,
        w_plus=w_plus,
        p_plus=p_plus,
    )


@dataclass(frozen=True)
class Regime:
    """Front classification from the singular construction.

    kind is one of 'Benign' (tissue survives behind the front),
    'MalignantNoGap' (tissue destroyed, interfaces locked together),
    'MalignantGap' (acid kills the tissue ahead of the tumor interface),
    or 'Crossover' (delta1 w* = 1 to within tolerance).
    """

    kind: str
    v_minus_eq: float
    v_plus_eq: float
    w_star: float
    delta1_v_plus: float
    delta1_w_star: float


def classify_regime(params: ModelParams) -> Regime:
    """Decide the front type from delta1 V+ and delta1 w*."""
    v_minus_eq, v_plus_eq = compute_v_pm(params)
    w_star = solve_w_star(params)
    d1v = params.delta1 * v_plus_eq
    d1w = params.delta1 * w_star
    if d1v < 1.0:
        kind = "Benign"
    elif abs(d1w - 1.0) < CROSSOVER_TOL:
        kind = "Crossover"
    elif d1w > 1.0:
        kind = "MalignantGap"
    else:
        kind = "MalignantNoGap"
    return Regime(kind, float(v_minus_eq), float(v_plus_eq), float(w_star),
                  float(d1v), float(d1w))


@dataclass(frozen=True)
class GapWidth:
    """Width of the dead-tissue gap between acid and tumor interfaces."""

    zeta: float
    xi: float


def singular_gap_width(params: ModelParams, regime: Regime | None = None) -> GapWidth:
    """Predicted gap width: the slow time the acid needs to decay from
    delta1 w = delta1 w* down to 1 along the explicit minus orbit."""
    if regime is None:
        regime = classify_regime(params)
    if regime.kind != "MalignantGap":
        return GapWidth(0.0, 0.0)
    zeta = float(np.log(regime.delta1_w_star) / np.sqrt(params.delta3))
    return GapWidth(zeta, zeta / params.epsilon)


@dataclass(frozen=True)
class SingularFront:
    """Complete leading-order front: layer at w*, slow orbits, classification."""

    params: ModelParams
    regime: Regime
    w_star: float
    v_plus_star: float  # tumor level right behind the interface, v+(w*)
    u_star: float       # tissue level at the interface
    c_star: float       # leading-order wave speed
    layer: LayerFront
    orbits: SlowOrbits
    gap: GapWidth

    def sample(self, xi: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Composite leading-order profile on a traveling-wave grid.

        Used as the initial guess for the finite-epsilon boundary-value
        solver; the tissue component is max(1 - delta1 w, 0) in every regime.
        """
        xi = np.asarray(xi, dtype=float)
        zeta = self.params.epsilon * xi
        sd3 = np.sqrt(self.params.delta3)

        w = np.empty_like(xi)
        ahead = zeta <= 0.0
        w[ahead] = self.w_star * np.exp(sd3 * zeta[ahead])

        zp, wp = self.orbits.zeta_plus, self.orbits.w_plus
        interp = PchipInterpolator(zp, wp, extrapolate=False)
        behind = ~ahead
        zb = zeta[behind]
        wb = np.where(zb <= zp[-1], interp(np.minimum(zb, zp[-1])), np.nan)
        # beyond the sampled orbit: saddle-rate tail into V+
        tail = zb > zp[-1]
        gap_last = self.orbits.v_plus_eq - wp[-1]
        wb[tail] = self.orbits.v_plus_eq - gap_last * np.exp(
            -self.orbits.saddle_rate * (zb[tail] - zp[-1]))
        w[behind] = wb

        v = self.layer.v(xi)
        v_plus_w = 0.5 * (1.0 + self.params.a + np.sqrt(np.maximum(_radicand(self.params, w), 0.0)))
        v = np.where(zeta > 0.0, v + (v_plus_w - self.v_plus_star), v)

        u = np.maximum(1.0 - self.params.delta1 * w, 0.0)
        return u, v, w


def build_singular_front(params: ModelParams) -> SingularFront:
    """Assemble the full singular front at the matched acid level."""
    regime = classify_regime(params)
    w_star = regime.w_star
    orbits = slow_orbits(params, w_star)
    if regime.kind == "MalignantGap":
        subspace = "empty"
    else:
        subspace = "healthy" if regime.delta1_w_star < 1.0 else "empty"
    layer = layer_front(params, w_star, subspace)
    gap = singular_gap_width(params, regime)
    return SingularFront(
        params=params,
        regime=regime,
        w_star=w_star,
        v_plus_star=layer.v_plus,
        u_star=layer.u,
        c_star=layer.speed,
        layer=layer,
        orbits=orbits,
        gap=gap,
    )
