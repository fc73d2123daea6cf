"""Parameter sweeps and stability-boundary tracing.

Natural-parameter continuation: each solve warm-starts from a secant
extrapolation of the previous two profiles, and every converged point
records speed, transverse-instability coefficient, gap width and regime.
`trace_boundary` marches the implicit curve where the transverse
coefficient vanishes through a rectangle of the (delta1, delta2)-plane
with a predictor-corrector scheme, then polishes each point on a refined
grid so the curve survives re-verification at doubled resolution.
"""
from __future__ import annotations

from dataclasses import dataclass, fields, replace

import numpy as np

from .bvp import FrontProfile, default_grid, solve_front
from .errors import (BoundaryNotFound, CurveExitedRegion, HomotopyStuck,
                     NewtonDiverged, NoRoot, NoSignChange, TumorFrontError,
                     WrongBranch)
from .model import ModelParams, compute_v_pm
from .singular import build_singular_front, classify_regime, singular_gap_width
from .stability import lambda2_solvability

__all__ = [
    "BranchPoint", "ContinuationBranch", "BoundaryCurve",
    "sweep", "find_zero", "trace_boundary",
]


@dataclass(frozen=True)
class BranchPoint:
    """One converged front along a sweep, with its diagnostics.

    `gap_width` is the singular-limit acellular width in the fast variable,
    which vanishes exactly at the analytic threshold delta1 w* = 1; the
    thresholded width of the finite-eps profile itself is available from
    `measure_gap_width`.
    """

    param_value: float
    c: float
    lambda2: float
    gap_width: float
    regime: str
    residual_norm: float


@dataclass(frozen=True)
class ContinuationBranch:
    """Fronts swept over one parameter, points ordered in the swept value."""

    swept_param: str
    base_params: ModelParams
    points: tuple[BranchPoint, ...]
    failures: tuple[float, ...]  # requested values where the solver failed

    def column(self, name: str) -> np.ndarray:
        """One per-point diagnostic as an array, in sweep order."""
        return np.array([getattr(pt, name) for pt in self.points])


@dataclass(frozen=True)
class BoundaryCurve:
    """Implicit curve where the transverse-instability coefficient vanishes.

    `points` runs in march order (= arclength order from the seeding edge).
    `side_labels` report stability below/above the curve in the second
    plane coordinate, probed at the curve midpoint. `overlay` samples the
    analytic aggressive-invasion threshold delta1 * V+ = 1 over the same
    delta2 range, starting at delta2 = 0 where it passes through delta1 = 1.
    """

    plane: tuple[str, str]
    points: tuple[tuple[float, float], ...]
    side_labels: dict[str, str]
    overlay: tuple[tuple[float, float], ...]


# --- sweeps ---

def _solve_at(params: ModelParams, param_name: str, value: float,
              history: list[tuple[float, FrontProfile]]) -> FrontProfile:
    """One front solve, warm-started by secant extrapolation of history."""
    p = replace(params, **{param_name: float(value)})
    singular = build_singular_front(p)
    grid = default_grid(p, singular)
    initial = None
    if history:
        v1, prev = history[-1]
        u = np.interp(grid.xi, prev.grid.xi, prev.u)
        v = np.interp(grid.xi, prev.grid.xi, prev.v)
        w = np.interp(grid.xi, prev.grid.xi, prev.w)
        c = prev.c
        if len(history) == 2:
            v0, older = history[0]
            t = (float(value) - v1) / (v1 - v0) if v1 != v0 else np.inf
            if abs(t) <= 4.0:  # no wild extrapolation across failure gaps
                u += t * (u - np.interp(grid.xi, older.grid.xi, older.u))
                v += t * (v - np.interp(grid.xi, older.grid.xi, older.v))
                w += t * (w - np.interp(grid.xi, older.grid.xi, older.w))
                c += t * (c - older.c)
        initial = (u, v, w, c)
    try:
        return solve_front(p, grid, initial, singular=singular)
    except (NewtonDiverged, WrongBranch):
        if initial is None:
            raise
        return solve_front(p, grid, None, singular=singular)


def _diagnose(profile: FrontProfile, param_name: str) -> BranchPoint:
    lam = lambda2_solvability(profile)
    regime = classify_regime(profile.params)
    return BranchPoint(
        param_value=float(getattr(profile.params, param_name)),
        c=profile.c,
        lambda2=lam.value,
        gap_width=singular_gap_width(profile.params, regime).xi,
        regime=regime.kind,
        residual_norm=profile.residual_norm,
    )


def _approach(target: float, attempt, history,
              max_halvings: int = 3) -> FrontProfile | None:
    """Reach an unresponsive target by bisecting the parameter step."""
    if not history:
        return None
    stack = [(target, 0)]
    while stack:
        value, depth = stack.pop()
        try:
            profile = attempt(value)
        except (TumorFrontError, ValueError):
            if depth >= max_halvings:
                return None
            stack.append((value, depth + 1))
            stack.append((0.5 * (history[-1][0] + value), depth + 1))
            continue
        if value == target:
            return profile
    return None


def sweep(params: ModelParams, param_name: str,
          param_range: tuple[float, float], n_points: int) -> ContinuationBranch:
    """Re-solve the front along one parameter and record diagnostics.

    Values run over `n_points` equally spaced samples of `param_range`.
    Each point records the speed, the transverse-instability coefficient
    (solvability route), the measured gap width, the regime label and the
    converged residual norm. A failed value is recorded in `failures` and
    the sweep continues from the last good point, approaching the next
    value with up to three step halvings.
    """
    if param_name not in {f.name for f in fields(params)}:
        raise ValueError(f"unknown sweep parameter {param_name!r}")
    if int(n_points) < 1:
        raise ValueError("n_points must be at least 1")
    lo, hi = float(param_range[0]), float(param_range[1])
    targets = np.linspace(lo, hi, int(n_points))
    history: list[tuple[float, FrontProfile]] = []
    points: list[BranchPoint] = []
    failures: list[float] = []

    def attempt(value: float) -> FrontProfile:
        profile = _solve_at(params, param_name, value, history)
        history[:] = (history + [(float(value), profile)])[-2:]
        return profile

    for target in targets:
        target = float(target)
        try:
            profile = attempt(target)
        except (TumorFrontError, ValueError):
            profile = _approach(target, attempt, history)
        if profile is None:
            failures.append(target)
            continue
        try:
            points.append(_diagnose(profile, param_name))
        except TumorFrontError:
            failures.append(target)
    if not points:
        raise HomotopyStuck(
            f"no solvable point along {param_name} in [{lo:.6g}, {hi:.6g}]")
    return ContinuationBranch(param_name, params, tuple(points), tuple(failures))


# --- zero refinement along a branch ---

def _secant_zero(f, lo: float, flo: float, hi: float, fhi: float,
                 tol: float, max_evals: int = 60,
                 accept: float | None = None) -> float:
    """Bracketed secant (Illinois variant) driving |f| below tol.

    When the bracket collapses to rounding width before |f| reaches tol
    (an evaluation-noise floor), the best point found is returned if it is
    below `accept`, otherwise the refinement fails.
    """
    if abs(flo) < tol:
        return float(lo)
    if abs(fhi) < tol:
        return float(hi)
    best, best_f = (lo, flo) if abs(flo) < abs(fhi) else (hi, fhi)
    side = 0
    for _ in range(max_evals):
        if abs(hi - lo) <= 1e-13 * max(1.0, abs(lo), abs(hi)):
            break
        cand = hi - fhi * (hi - lo) / (fhi - flo)
        inner_lo, inner_hi = min(lo, hi), max(lo, hi)
        if not (inner_lo < cand < inner_hi):
            cand = 0.5 * (lo + hi)
        fc = f(cand)
        if abs(fc) < tol:
            return float(cand)
        if abs(fc) < abs(best_f):
            best, best_f = cand, fc
        if (fc < 0.0) == (flo < 0.0):
            lo, flo = cand, fc
            if side == -1:
                fhi *= 0.5  # unstick a frozen endpoint
            side = -1
        else:
            hi, fhi = cand, fc
            if side == +1:
                flo *= 0.5
            side = +1
    if accept is not None and abs(best_f) < accept:
        return float(best)
    raise NoRoot(f"zero refinement stalled; best |field| = {abs(best_f):.3e}")


def _support_edge(f, lo: float, flo: float, hi: float, fhi: float,
                  max_evals: int = 40) -> float:
    """Bisect the boundary of the set where f > 0, given f = 0 on one side."""
    for _ in range(max_evals):
        if abs(hi - lo) <= 1e-10 * max(1.0, abs(lo), abs(hi)):
            break
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if (fm == 0.0) == (flo == 0.0):
            lo, flo = mid, fm
        else:
            hi, fhi = mid, fm
    return float(lo if flo == 0.0 else hi)


def find_zero(branch: ContinuationBranch, field: str, *,
              tol: float = 1e-8) -> list[float]:
    """Refine every sign change of one diagnostic along the branch.

    `lambda2` crossings are refined by a bracketed secant on the value
    recomputed from a fresh front solve until |lambda2| < tol. `gap_width`
    vanishes identically on one side of its onset, so that crossing is
    bisected on the support edge of the singular width (no front solve
    needed) and the returned value sits on the zero side (field exactly
    zero, a hair inside the no-gap region).
    """
    if field not in ("lambda2", "gap_width"):
        raise ValueError(f"field must be 'lambda2' or 'gap_width', got {field!r}")
    if len(branch.points) < 2:
        raise NoSignChange("branch has fewer than two points")
    name = branch.swept_param

    def evaluate(value: float) -> float:
        p = replace(branch.base_params, **{name: float(value)})
        if field == "gap_width":
            return singular_gap_width(p).xi
        return lambda2_solvability(solve_front(p)).value

    crossings: list[float] = []
    pts = branch.points
    for left, right in zip(pts[:-1], pts[1:]):
        fa, fb = getattr(left, field), getattr(right, field)
        ta, tb = left.param_value, right.param_value
        if field == "gap_width":
            if (fa == 0.0) != (fb == 0.0):
                crossings.append(_support_edge(evaluate, ta, fa, tb, fb))
        elif fa * fb < 0.0:
            crossings.append(_secant_zero(evaluate, ta, fa, tb, fb, tol))
    if not crossings:
        raise NoSignChange(f"{field} does not change sign along the branch")
    return crossings


# --- boundary tracing in the (delta1, delta2)-plane ---

def _correct(F, base: np.ndarray, direction: np.ndarray, slope_guess: float,
             s_max: float, tol: float, accept: float | None = None,
             max_evals: int = 12):
    """Secant along `direction` from `base` until |F| < tol, |s| <= s_max.

    Returns the corrected point and the last secant slope for reuse. Two
    evaluations in a row without improvement mean the field's evaluation
    noise floor has been reached; the best point so far is then returned
    if its |F| is below `accept`, otherwise the correction fails.
    """
    s0, f0 = 0.0, F(base)
    if abs(f0) < tol:
        return base, slope_guess
    slope = slope_guess
    if slope == 0.0 or not np.isfinite(slope):
        s_probe = 0.25 * s_max
        f_probe = F(base + s_probe * direction)
        slope = (f_probe - f0) / s_probe
        if abs(f_probe) < abs(f0):
            s0, f0 = s_probe, f_probe
    if slope == 0.0:
        raise NoRoot("corrector slope vanished")
    best_s, best_f = s0, f0
    stalls = 0
    s1 = float(np.clip(s0 - f0 / slope, -s_max, s_max))
    for _ in range(max_evals):
        if s1 == s0:
            raise NoRoot("corrector stalled at the step cap")
        f1 = F(base + s1 * direction)
        slope = (f1 - f0) / (s1 - s0)
        if abs(f1) < tol:
            return base + s1 * direction, slope
        if abs(f1) < abs(best_f):
            best_s, best_f = s1, f1
            stalls = 0
        else:
            stalls += 1
            if stalls >= 2:
                break
        s0, f0 = s1, f1
        if slope == 0.0:
            raise NoRoot("corrector slope vanished")
        s1 = float(np.clip(s1 - f1 / slope, -s_max, s_max))
    if accept is not None and abs(best_f) < accept:
        return base + best_s * direction, slope
    raise NoRoot(f"corrector did not reach |field| < {tol:g}; "
                 f"best |field| = {abs(best_f):.3e}")


def _inside(q: np.ndarray, margin: float = 1e-9) -> bool:
    return bool(-margin <= q[0] <= 1.0 + margin
                and -margin <= q[1] <= 1.0 + margin)


def _exit_crossing(base: np.ndarray, pred: np.ndarray):
    """First boundary of the unit square crossed by the segment base->pred.

    Returns (point_on_edge, edge_direction) or None when the segment stays
    inside (should not happen when called on an exiting predictor).
    """
    best_tau, best = np.inf, None
    d = pred - base
    for axis, level in ((0, 0.0), (0, 1.0), (1, 0.0), (1, 1.0)):
        if d[axis] == 0.0:
            continue
        tau = (level - base[axis]) / d[axis]
        if 1e-12 < tau <= 1.0 and tau < best_tau:
            point = base + tau * d
            other = 1 - axis
            if -1e-9 <= point[other] <= 1.0 + 1e-9:
                edge_dir = np.zeros(2)
                edge_dir[other] = 1.0
                best_tau, best = tau, (point, edge_dir)
    return best


def trace_boundary(params: ModelParams, plane: tuple[str, str],
                   region: tuple[tuple[float, float], tuple[float, float]],
                   step: float = 0.05, *, edge_points: int = 32,
                   march_dx_factor: float = 0.25,
                   polish_dx_factor: float = 1.0 / 32.0,
                   field_tol: float = 1e-7) -> BoundaryCurve:
    """March the curve where the transverse coefficient changes sign.

    The rectangle `region` = ((x_lo, x_hi), (y_lo, y_hi)) is scaled to the
    unit square; `step` is the marching step in those normalized units. A
    32-point scan of the rectangle edges seeds the first crossing
    (BoundaryNotFound when none exists); predictor-corrector marching then
    follows the curve until it leaves the region, which is the normal
    termination (signaled internally by CurveExitedRegion and answered
    with a final point on the exit edge). Marching uses a coarse grid;
    every collected point is then re-corrected on a refined grid, chosen
    so the curve stays within tolerance under further grid doubling.

    Correctors aim for |coefficient| below 1e-6 while marching and below
    `field_tol` when polishing. At extreme acid sharpness the coefficient
    carries evaluation noise from the Newton solve that can exceed those
    targets; when a corrector stalls at its noise floor it keeps the best
    point found provided the residual field value is still far below the
    O(1) scale of the coefficient (1e-3 marching, 1e-4 polishing), so
    traces remain deterministic instead of aborting.
    """
    if tuple(plane) != ("delta1", "delta2"):
        raise ValueError("boundary tracing supports the (delta1, delta2) plane")
    x_name, y_name = plane
    (x_lo, x_hi), (y_lo, y_hi) = region
    x_lo, x_hi, y_lo, y_hi = map(float, (x_lo, x_hi, y_lo, y_hi))
    x_span, y_span = x_hi - x_lo, y_hi - y_lo
    if x_span <= 0.0 or y_span <= 0.0:
        raise ValueError("region sides must have positive extent")
    step = float(step)
    if not 0.0 < step <= 0.5:
        raise ValueError("step must lie in (0, 0.5] normalized units")

    def physical(q: np.ndarray) -> dict[str, float]:
        return {x_name: float(x_lo + q[0] * x_span),
                y_name: float(y_lo + q[1] * y_span)}

    def field_at(q: np.ndarray, dx_factor: float) -> float:
        p = replace(params, **physical(q))
        singular = build_singular_front(p)
        grid = default_grid(p, singular, dx_factor=dx_factor)
        profile = solve_front(p, grid, singular=singular)
        return lambda2_solvability(profile).value

    # --- seed: scan the rectangle edges for the first sign change ---
    per_edge = max(edge_points // 4, 2)
    edges = (  # anchor, direction along the edge, inward normal
        (np.array([0.0, 0.0]), np.array([0.0, 1.0]), np.array([1.0, 0.0])),
        (np.array([1.0, 0.0]), np.array([0.0, 1.0]), np.array([-1.0, 0.0])),
        (np.array([0.0, 0.0]), np.array([1.0, 0.0]), np.array([0.0, 1.0])),
        (np.array([0.0, 1.0]), np.array([1.0, 0.0]), np.array([0.0, -1.0])),
    )
    seed = None
    for anchor, edge_dir, inward in edges:
        prev = None
        for s in np.linspace(0.0, 1.0, per_edge):
            try:
                val = field_at(anchor + s * edge_dir, march_dx_factor)
            except (TumorFrontError, ValueError):
                prev = None
                continue
            if prev is not None and prev[1] * val < 0.0:
                seed = (anchor, edge_dir, inward, prev, (float(s), val))
                break
            prev = (float(s), val)
        if seed is not None:
            break
    if seed is None:
        raise BoundaryNotFound(
            f"no sign change of the transverse coefficient on the edges of "
            f"{x_name} in [{x_lo:g}, {x_hi:g}] x {y_name} in [{y_lo:g}, {y_hi:g}]")

    anchor, edge_dir, inward, (s0, f0), (s1, f1) = seed
    march_tol = 1e-6
    stall_accept = 1e-3  # noise-floor fallback, see docstring
    s_star = _secant_zero(lambda s: field_at(anchor + s * edge_dir, march_dx_factor),
                          s0, f0, s1, f1, march_tol, accept=stall_accept)
    pts_n = [anchor + s_star * edge_dir]
    normals = [edge_dir.astype(float)]
    slopes = [(f1 - f0) / (s1 - s0)]

    # Entry tangent from the field gradient: the edge slope is known, one
    # inward probe supplies the transverse component. Marching along the true
    # tangent keeps the corrector within its step cap even when the curve
    # enters the region steeply.
    probe_h = 0.5 * step
    try:
        f_probe = field_at(pts_n[0] + probe_h * inward, march_dx_factor)
        grad = (f_probe / probe_h) * inward + slopes[0] * edge_dir
        tangent = np.array([-grad[1], grad[0]])
        norm = np.hypot(*tangent)
        if norm > 0.0:
            tangent /= norm
            if tangent @ inward < 0.0:
                tangent = -tangent
            direction = tangent
            next_slope = float(np.hypot(*grad))
        else:
            direction = inward.astype(float)
            next_slope = slopes[0]
    except (TumorFrontError, ValueError):
        direction = inward.astype(float)
        next_slope = slopes[0]

    # --- predictor-corrector marching ---
    max_points = int(np.ceil(8.0 / step)) + 8
    h, shrinks = step, 0
    try:
        while True:
            if len(pts_n) >= max_points:
                raise HomotopyStuck(
                    f"boundary curve did not leave the region within "
                    f"{max_points} points")
            base = pts_n[-1]
            if len(pts_n) >= 2:
                d = base - pts_n[-2]
                direction = d / np.hypot(*d)
            pred = base + h * direction
            if not _inside(pred):
                raise CurveExitedRegion(
                    f"curve left the region near {physical(base)}")
            n_dir = np.array([-direction[1], direction[0]])
            try:
                corrected, slope = _correct(
                    lambda q: field_at(q, march_dx_factor),
                    pred, n_dir, next_slope, h, march_tol,
                    accept=stall_accept)
            except (TumorFrontError, NoRoot, ValueError):
                shrinks += 1
                if shrinks > 3:
                    raise HomotopyStuck(
                        f"corrector failed near {physical(pred)} even after "
                        f"3 step halvings")
                h *= 0.5
                continue
            pts_n.append(corrected)
            normals.append(n_dir)
            slopes.append(slope)
            next_slope = slope
            h, shrinks = min(step, 2.0 * h), 0
    except CurveExitedRegion:
        crossing = _exit_crossing(pts_n[-1], pts_n[-1] + h * direction)
        if crossing is not None:
            point, exit_dir = crossing
            try:
                tail, slope = _correct(
                    lambda q: field_at(q, march_dx_factor),
                    point, exit_dir, 0.0, 2.0 * h, march_tol,
                    accept=stall_accept)
                if np.hypot(*(tail - pts_n[-1])) > 1e-9:
                    pts_n.append(tail)
                    normals.append(exit_dir)
                    slopes.append(slope)
            except (TumorFrontError, NoRoot, ValueError):
                pass  # curve simply ends at the last interior point

    # --- polish every point on the refined grid ---
    polished: list[np.ndarray] = []
    for q, n_dir, slope in zip(pts_n, normals, slopes):
        try:
            qf, _ = _correct(lambda z: field_at(z, polish_dx_factor),
                             q, n_dir, slope, max(0.25 * step, 1e-3), field_tol,
                             accept=0.1 * stall_accept)
        except (TumorFrontError, NoRoot, ValueError) as exc:
            raise HomotopyStuck(
                f"refined-grid correction failed at {physical(q)}") from exc
        polished.append(qf)

    # --- which side is stable, probed at the curve midpoint ---
    mid = polished[len(polished) // 2]
    side_labels: dict[str, str] = {}
    for label, sign in (("below", -1.0), ("above", +1.0)):
        verdict = "unknown"
        for dy in (0.15, 0.075, 0.04, 0.02, 0.01):
            q = np.array([mid[0], mid[1] + sign * dy])
            if not _inside(q):
                continue
            try:
                verdict = ("stable" if field_at(q, march_dx_factor) < 0.0
                           else "unstable")
                break
            except (TumorFrontError, ValueError):
                continue
        side_labels[label] = verdict

    # --- analytic aggressive-invasion threshold for overlay ---
    overlay: list[tuple[float, float]] = []
    for y in np.linspace(0.0, y_hi, 64):
        p = replace(params, **{y_name: float(y)})
        _, v_plus = compute_v_pm(p)
        overlay.append((1.0 / float(v_plus), float(y)))

    points = tuple((float(x_lo + q[0] * x_span), float(y_lo + q[1] * y_span))
                   for q in polished)
    return BoundaryCurve(plane=(x_name, y_name), points=points,
                         side_labels=side_labels, overlay=tuple(overlay))
