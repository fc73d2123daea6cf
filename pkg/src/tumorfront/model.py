"""Reaction kinetics, equilibria, and their stability.

The model couples healthy tissue u, tumor tissue v with an Allee threshold a,
and acid w:

    u_t = u (1 - u - delta1 w)
    v_t = rho v (1 - v) (v - a) - delta2 v w + div((1 + kappa - u) grad v)
    w_t = delta3 (v - w) + (1/eps^2) lap w

All routines in this module concern the space-independent kinetics; the
spatial operators live in the boundary-value and simulation modules.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ComplexRoots, NotEquilibrium

__all__ = [
    "ModelParams",
    "ReactionJet",
    "SteadyState",
    "reaction_jet",
    "compute_v_pm",
    "steady_states",
    "steady_state_stability",
]


@dataclass(frozen=True)
class ModelParams:
    """Kinetic and scaling parameters.

    Constraints: 0 < a < 1, kappa > 0, delta1 > 0, delta2 >= 0, delta3 > 0,
    rho > 0, 0 < epsilon < 1. Acid typically harms tissue more than tumor
    (delta2 < delta1), but nothing in the construction needs that ordering,
    so it is not enforced.
    """

    a: float
    kappa: float
    delta1: float
    delta2: float
    delta3: float
    rho: float
    epsilon: float

    def __post_init__(self):
        if not 0.0 < self.a < 1.0:
            raise ValueError(f"a must lie in (0, 1), got {self.a}")
        if self.kappa <= 0.0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if self.delta1 <= 0.0:
            raise ValueError(f"delta1 must be positive, got {self.delta1}")
        if self.delta2 < 0.0:
            raise ValueError(f"delta2 must be nonnegative, got {self.delta2}")
        if self.delta3 <= 0.0:
            raise ValueError(f"delta3 must be positive, got {self.delta3}")
        if self.rho <= 0.0:
            raise ValueError(f"rho must be positive, got {self.rho}")
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")


@dataclass(frozen=True)
class ReactionJet:
    """Reaction terms and the first partials used by every linearization.

    The omitted partials (F_v, G_u, H_u) vanish identically.
    """

    F: np.ndarray
    G: np.ndarray
    H: np.ndarray
    F_u: np.ndarray
    F_w: np.ndarray
    G_v: np.ndarray
    G_w: np.ndarray
    H_v: np.ndarray
    H_w: np.ndarray


def reaction_jet(params: ModelParams, u, v, w) -> ReactionJet:
    """Evaluate the kinetics and their partials at (u, v, w), elementwise."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    a, d1, d2, d3, rho = params.a, params.delta1, params.delta2, params.delta3, params.rho

    F = u * (1.0 - u - d1 * w)
    G = rho * v * (1.0 - v) * (v - a) - d2 * v * w
    H = d3 * (v - w)

    F_u = 1.0 - 2.0 * u - d1 * w
    F_w = -d1 * u
    G_v = rho * (2.0 * (1.0 + a) * v - 3.0 * v * v - a) - d2 * w
    G_w = -d2 * v
    H_v = d3 * np.ones_like(v)
    H_w = -d3 * np.ones_like(w)
    return ReactionJet(F, G, H, F_u, F_w, G_v, G_w, H_v, H_w)


def compute_v_pm(params: ModelParams) -> tuple[float, float]:
    """Tumor equilibrium levels (V-, V+).

    These are the nontrivial roots of rho (1 - v)(v - a) = delta2 v, i.e. of
    rho v^2 - (rho (1 + a) - delta2) v + rho a = 0. Raises ComplexRoots when
    the discriminant is negative (the tumor states do not exist).
    """
    a, d2, rho = params.a, params.delta2, params.rho
    if d2 == 0.0:
        # the quadratic factors as rho (1 - v)(v - a): roots exactly a and 1
        return a, 1.0
    half_sum = (rho * (1.0 + a) - d2) / (2.0 * rho)
    disc = half_sum * half_sum - a
    if disc < 0.0:
        raise ComplexRoots(
            f"no tumor equilibria: (rho(1+a)-delta2)^2 < 4 rho^2 a for "
            f"a={a}, delta2={d2}, rho={rho}"
        )
    root = float(np.sqrt(disc))
    return half_sum - root, half_sum + root


@dataclass(frozen=True)
class SteadyState:
    """A spatially homogeneous equilibrium with kinetic stability data.

    `stable` applies the small-diffusion criteria (F_u < 0, plus negative
    trace and positive determinant of the (v, w) kinetics block), which decide
    stability of the full reaction-diffusion system for u <= 1.
    """

    label: str
    u: float
    v: float
    w: float
    stable: bool
    eigenvalues: tuple[complex, complex, complex]


def _kinetics_eigenvalues(params: ModelParams, u: float, v: float, w: float):
    jet = reaction_jet(params, u, v, w)
    block = np.array([[float(jet.G_v), float(jet.G_w)], [float(jet.H_v), float(jet.H_w)]])
    lam_vw = np.linalg.eigvals(block)
    return float(jet.F_u), (complex(lam_vw[0]), complex(lam_vw[1]))


def _classify(params: ModelParams, label: str, u: float, v: float, w: float) -> SteadyState:
    f_u, lam_vw = _kinetics_eigenvalues(params, u, v, w)
    jet = reaction_jet(params, u, v, w)
    trace = float(jet.G_v + jet.H_w)
    det = float(jet.G_v * jet.H_w - jet.G_w * jet.H_v)
    stable = f_u < 0.0 and trace < 0.0 and det > 0.0
    eigs = (complex(f_u), lam_vw[0], lam_vw[1])
    return SteadyState(label, u, v, w, stable, eigs)


def steady_states(params: ModelParams) -> list[SteadyState]:
    """All homogeneous equilibria, with stability flags.

    P1 = extinction, P2 = healthy tissue, P3+/- = coexistence, P4+/- = tumor
    only. P3/P4 are present only when the tumor levels V+/- exist.
    """
    out = [
        _classify(params, "P1", 0.0, 0.0, 0.0),
        _classify(params, "P2", 1.0, 0.0, 0.0),
    ]
    try:
        v_minus, v_plus = compute_v_pm(params)
    except ComplexRoots:
        return out
    for tag, veq in (("-", v_minus), ("+", v_plus)):
        out.append(_classify(params, f"P3{tag}", 1.0 - params.delta1 * veq, veq, veq))
        out.append(_classify(params, f"P4{tag}", 0.0, veq, veq))
    return out


def steady_state_stability(params: ModelParams, state: tuple[float, float, float],
                           tol: float = 1e-9) -> SteadyState:
    """Classify an explicitly given equilibrium.

    Raises NotEquilibrium when the kinetics do not vanish at the state to
    within `tol`.
    """
    u, v, w = (float(x) for x in state)
    jet = reaction_jet(params, u, v, w)
    defect = max(abs(float(jet.F)), abs(float(jet.G)), abs(float(jet.H)))
    if defect > tol:
        raise NotEquilibrium(f"kinetics defect {defect:.3e} at state {state}")
    return _classify(params, "custom", u, v, w)
