"""Two-dimensional comoving simulation of the invasion front.

The fields evolve on a rectangle with Neumann conditions in the wave
direction and periodic conditions transversally. One step is first-order
IMEX: the stiff acid terms (the scaled Laplacian and the linear relaxation)
are implicit, everything else is explicit. The implicit solve factors per
direction into two symmetric tridiagonal systems whose Cholesky factors are
cached; the periodic direction adds a rank-one Sherman-Morrison correction.
Advection by the frame speed uses a third-order upwind-biased stencil and
the tumor cross-diffusion uses conservative flux differences with
arithmetic-mean face coefficients; overall spatial accuracy is second
order, with the sharper advection keeping planar fronts nearly stationary
in their own frame. All updates are plain vectorized array operations with
a fixed evaluation order: identical inputs give bit-identical trajectories.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded

from .bvp import FrontProfile
from .errors import BlowUp, ValidationError, WindowTooShort
from .model import ModelParams, reaction_jet
from .singular import build_singular_front

BLOWUP_LIMIT = 1e3


@dataclass(frozen=True)
class Field2D:
    """Simulation state in the comoving frame.

    Arrays are indexed [i, j] with i along the wave direction (spacing dx,
    first node at x0) and j transversal (spacing dy, periodic). The frame
    moves with the speed of the seeding 1D profile.
    """

    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    x0: float
    dx: float
    dy: float
    time: float
    frame_speed: float
    params: ModelParams

    @property
    def nx(self) -> int:
        return self.u.shape[0]

    @property
    def ny(self) -> int:
        return self.u.shape[1]

    @property
    def x(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.nx)


@dataclass(frozen=True)
class SimConfig:
    """Run control for one simulation.

    `dt` must satisfy the explicit stability bounds checked in `run`
    against the actual grid and parameters; snapshots (full fields plus
    transverse-mode diagnostics) are taken every `snapshot_interval` time
    units, which must be a multiple of dt to keep the cadence exact.
    """

    Lx: float
    Ly: float
    nx: int
    ny: int
    dt: float
    t_end: float
    snapshot_interval: float
    noise_amplitude: float = 1e-3
    rng_seed: int = 0
    bc: str = "neumann-x-periodic-y"

    def __post_init__(self):
        if self.bc != "neumann-x-periodic-y":
            raise ValidationError(f"unsupported boundary conditions {self.bc!r}")
        for name in ("Lx", "Ly", "dt", "t_end", "snapshot_interval"):
            if not getattr(self, name) > 0.0:
                raise ValidationError(f"{name} must be positive")
        if self.nx < 4:
            raise ValidationError("nx must be at least 4")
        if self.ny != 1 and self.ny < 3:
            raise ValidationError("ny must be 1 (planar fast path) or >= 3")
        if self.noise_amplitude < 0.0:
            raise ValidationError("noise_amplitude must be nonnegative")
        if self.snapshot_interval < self.dt:
            raise ValidationError("snapshot_interval must be >= dt")


@dataclass(frozen=True)
class ModeDiagnostics:
    """Transverse Fourier diagnostics collected at every snapshot.

    Amplitudes use the physical normalization: column k = 0 is the signed
    transverse mean and column k > 0 is the amplitude of the cos/sin pair
    at wavenumber ell[k] = 2 pi k / Ly (half weight at the Nyquist mode).
    `interface` tracks the level crossing of v at half the interface tumor
    level per transverse node; `midslice` tracks v along the row closest
    to the mean interface position.
    """

    times: np.ndarray
    ell: np.ndarray
    interface: np.ndarray
    midslice: np.ndarray
    interface_level: float


@dataclass(frozen=True)
class SimResult:
    snapshots: tuple[Field2D, ...]
    diagnostics: ModeDiagnostics


# --- implicit acid solves -------------------------------------------------

_SOLVER_CACHE: dict[tuple, tuple] = {}


def _axis_solver(n: int, beta: float, periodic: bool):
    """Cholesky data for (I - beta D2) on n nodes along one axis."""
    key = (n, float(beta), periodic)
    hit = _SOLVER_CACHE.get(key)
    if hit is not None:
        return hit
    ab = np.empty((2, n))
    ab[0, :] = -beta  # superdiagonal (ab[0, 0] unused)
    ab[1, :] = 1.0 + 2.0 * beta
    if periodic:
        # A = T - beta z z^T with z = e_0 + e_{n-1}: the corner entries of
        # the periodic operator cancel and T stays tridiagonal SPD
        ab[1, 0] += beta
        ab[1, -1] += beta
        cb = cholesky_banded(ab)
        z = np.zeros(n)
        z[0] = z[-1] = 1.0
        q = cho_solve_banded((cb, False), z)
        denom = 1.0 - beta * (q[0] + q[-1])
        data = (cb, q, denom)
    else:
        # Neumann: mirrored ghost removes one neighbor at each end
        ab[1, 0] -= beta
        ab[1, -1] -= beta
        cb = cholesky_banded(ab)
        data = (cb, None, None)
    _SOLVER_CACHE[key] = data
    return data


def _solve_axis(rhs: np.ndarray, beta: float, periodic: bool) -> np.ndarray:
    """Solve (I - beta D2) X = rhs along the first axis (batched)."""
    cb, q, denom = _axis_solver(rhs.shape[0], beta, periodic)
    y = cho_solve_banded((cb, False), rhs)
    if periodic:
        y = y + q[:, None] * (beta * (y[0] + y[-1]) / denom)
    return y


_PLANE_CACHE: dict[tuple, tuple] = {}


def _plane_solver(nx: int, ny: int, beta_x: float, beta_y: float):
    """Cholesky data for (I - beta_x D2x - beta_y D2y), per y Fourier mode.

    The periodic y difference diagonalizes to -(2 - 2 cos theta); each
    transverse mode then needs its own Neumann tridiagonal in x, shifted
    by its y eigenvalue.
    """
    key = (nx, ny, float(beta_x), float(beta_y))
    hit = _PLANE_CACHE.get(key)
    if hit is not None:
        return hit
    theta = 2.0 * np.pi * np.arange(ny // 2 + 1) / ny
    shifts = beta_y * (2.0 - 2.0 * np.cos(theta))
    factors = []
    for s in shifts:
        ab = np.empty((2, nx))
        ab[0, :] = -beta_x  # superdiagonal (ab[0, 0] unused)
        ab[1, :] = 1.0 + s + 2.0 * beta_x
        ab[1, 0] -= beta_x  # mirrored-ghost Neumann ends
        ab[1, -1] -= beta_x
        factors.append(cholesky_banded(ab))
    data = tuple(factors)
    _PLANE_CACHE[key] = data
    return data


def _solve_plane(rhs: np.ndarray, beta_x: float, beta_y: float) -> np.ndarray:
    """Solve (I - beta_x D2x - beta_y D2y) X = rhs, x Neumann, y periodic.

    The operator is inverted whole rather than per direction: a factored
    pair of axis solves leaves an O(beta_x beta_y) cross term that acts
    as extra transverse stiffness wherever the field curves along x, and
    for a stiff acid layer that biases transverse growth rates at first
    order in dt.
    """
    nx, ny = rhs.shape
    factors = _plane_solver(nx, ny, beta_x, beta_y)
    spec = np.fft.rfft(rhs, axis=1)
    cols = np.empty((nx, 2))
    for m, cb in enumerate(factors):
        cols[:, 0] = spec[:, m].real
        cols[:, 1] = spec[:, m].imag
        out = cho_solve_banded((cb, False), cols)
        spec[:, m] = out[:, 0] + 1j * out[:, 1]
    return np.fft.irfft(spec, n=ny, axis=1)


# --- spatial operators ----------------------------------------------------

def _advection(phi: np.ndarray, c: float, dx: float) -> np.ndarray:
    """Upwind-biased c * d(phi)/dx along the first axis, Neumann ends.

    Third-order four-point stencil biased against the flow; its leading
    truncation term acts as a mild hyperviscosity, so the scheme stays
    stable under the diffusive dt bound and the frame speed is clean
    enough that a planar front drifts only at the level of the remaining
    second-order flux truncation. Lower-order one-sided fallbacks fill
    the rows next to the boundaries, where the fields are flat.
    """
    out = np.zeros_like(phi)
    if c == 0.0:
        return out
    if c > 0.0:
        out[2:-1] = (2.0 * phi[3:] + 3.0 * phi[2:-1] - 6.0 * phi[1:-2]
                     + phi[:-3]) / (6.0 * dx)
        out[-1] = (3.0 * phi[-1] - 4.0 * phi[-2] + phi[-3]) / (2.0 * dx)
        out[1] = (phi[1] - phi[0]) / dx
    else:
        out[1:-2] = -(2.0 * phi[:-3] + 3.0 * phi[1:-2] - 6.0 * phi[2:-1]
                      + phi[3:]) / (6.0 * dx)
        out[0] = -(3.0 * phi[0] - 4.0 * phi[1] + phi[2]) / (2.0 * dx)
        out[-2] = (phi[-1] - phi[-2]) / dx
    return c * out


def _cross_diffusion(v: np.ndarray, coeff: np.ndarray, dx: float,
                     dy: float) -> np.ndarray:
    """div(coeff grad v): conservative fluxes, arithmetic-mean faces."""
    fx = 0.5 * (coeff[1:] + coeff[:-1]) * (v[1:] - v[:-1]) / dx
    out = np.zeros_like(v)
    out[:-1] += fx / dx   # each interior face adds to its left cell and
    out[1:] -= fx / dx    # subtracts from its right cell: zero-sum scatter
    if v.shape[1] > 1:
        cy = 0.5 * (coeff + np.roll(coeff, -1, axis=1))
        fy = cy * (np.roll(v, -1, axis=1) - v) / dy
        out += (fy - np.roll(fy, 1, axis=1)) / dy
    return out


def step(field: Field2D, dt: float) -> Field2D:
    """One IMEX step; raises BlowUp past the magnitude guard."""
    p = field.params
    u, v, w, c = field.u, field.v, field.w, field.frame_speed

    # acid first: explicit advection, then the joint implicit relaxation +
    # Laplacian. Scaling the diffusion coefficient by gamma makes a
    # planar steady front an exact fixed point of the whole update (no
    # dt-dependent profile distortion).
    gamma = 1.0 + dt * p.delta3
    wstar = (w - dt * _advection(w, c, field.dx) + dt * p.delta3 * v) / gamma
    beta_x = dt / gamma / (p.epsilon * field.dx) ** 2
    if field.ny > 1:
        beta_y = dt / gamma / (p.epsilon * field.dy) ** 2
        w1 = _solve_plane(wstar, beta_x, beta_y)
    else:
        w1 = _solve_axis(wstar, beta_x, periodic=False)

    jet = reaction_jet(p, u, v, w1)
    u1 = u + dt * (jet.F - _advection(u, c, field.dx))
    dv = jet.G + _cross_diffusion(v, 1.0 + p.kappa - u, field.dx, field.dy)
    v1 = v + dt * (dv - _advection(v, c, field.dx))

    t1 = field.time + dt
    worst = max(np.max(np.abs(u1)), np.max(np.abs(v1)), np.max(np.abs(w1)))
    if not np.isfinite(worst) or worst > BLOWUP_LIMIT:
        raise BlowUp(f"field magnitude {worst:.3e} exceeds {BLOWUP_LIMIT:g} "
                     f"at t = {t1:.6g}")
    # the sharp advection stencil can undershoot slightly below zero on
    # grid-scale noise; clip (after the guard) to keep the density a density
    return replace(field, u=u1, v=np.maximum(v1, 0.0), w=w1, time=t1)


# --- initialization -------------------------------------------------------

def init_planar(profile: FrontProfile, ny: int, Ly: float,
                noise_amplitude: float, seed: int, *,
                nx: int = 512,
                x_span: tuple[float, float] | None = None) -> Field2D:
    """Extend a 1D front constantly in y and add positive noise to v.

    The wave-direction grid spans the profile's own domain with nx uniform
    nodes, or the window `x_span` of it; a window tighter than the full
    profile buys spatial resolution at fixed nx, and a few acid decay
    lengths of margin around the interfaces is enough for growth-rate
    work. The noise is uniform on [0, noise_amplitude) per node, drawn
    from a fresh seeded generator so identical arguments give identical
    fields.
    """
    xi = profile.grid.xi
    if x_span is None:
        x_span = (float(xi[0]), float(xi[-1]))
    lo, hi = float(x_span[0]), float(x_span[1])
    if not lo < hi:
        raise ValidationError(f"x_span must be increasing, got {x_span}")
    if lo < xi[0] - 1e-9 or hi > xi[-1] + 1e-9:
        raise ValidationError(
            f"x_span {x_span} is not contained in the profile domain "
            f"({xi[0]:.6g}, {xi[-1]:.6g})"
        )
    x = np.linspace(lo, hi, nx)
    u = np.repeat(np.interp(x, xi, profile.u)[:, None], ny, axis=1)
    v = np.repeat(np.interp(x, xi, profile.v)[:, None], ny, axis=1)
    w = np.repeat(np.interp(x, xi, profile.w)[:, None], ny, axis=1)
    if noise_amplitude > 0.0:
        rng = np.random.default_rng(seed)
        v = v + rng.uniform(0.0, noise_amplitude, size=v.shape)
    return Field2D(u=u, v=v, w=w, x0=float(x[0]),
                   dx=float(x[1] - x[0]), dy=float(Ly / ny), time=0.0,
                   frame_speed=profile.c, params=profile.params)


# --- diagnostics ----------------------------------------------------------

def interface_positions(field: Field2D, level: float) -> np.ndarray:
    """Per-column x where v first crosses `level` (linear interpolation)."""
    v = field.v
    above = v >= level
    idx = np.argmax(above, axis=0)
    idx = np.clip(idx, 1, field.nx - 1)
    j = np.arange(field.ny)
    v0, v1 = v[idx - 1, j], v[idx, j]
    frac = np.clip((level - v0) / np.where(v1 != v0, v1 - v0, 1.0), 0.0, 1.0)
    return field.x0 + (idx - 1 + frac) * field.dx


def _mode_amplitudes(signal: np.ndarray) -> np.ndarray:
    """Signed mean plus physical cosine-pair amplitudes per wavenumber."""
    n = signal.shape[-1]
    spec = np.abs(np.fft.rfft(signal)) / n
    spec[1:] *= 2.0
    if n % 2 == 0:
        spec[-1] *= 0.5
    spec[0] = np.mean(signal)
    return spec


def stable_dt(field: Field2D, safety: float = 0.9) -> float:
    """Largest time step inside the explicit stability bounds, times safety.

    The binding constraints are the cross-diffusion bound on the harmonic
    mesh size, the explicit kinetics rate, and the advective CFL of the
    comoving frame; the returned step clears all three.
    """
    if not 0.0 < safety <= 1.0:
        raise ValidationError(f"safety must lie in (0, 1], got {safety}")
    p = field.params
    h2 = field.dx**2
    if field.ny > 1:
        h2 = 1.0 / (1.0 / field.dx**2 + 1.0 / field.dy**2)
    rate = max(1.0 + p.delta1, p.rho * (1.0 + p.a) + p.delta2)
    bounds = [0.2 * h2 / (1.0 + p.kappa), 1.5 / rate]
    if field.frame_speed != 0.0:
        bounds.append(0.25 * field.dx / abs(field.frame_speed))
    return safety * min(bounds)


def _stability_limit(field: Field2D, dt: float) -> None:
    p = field.params
    h2 = field.dx**2
    if field.ny > 1:
        h2 = 1.0 / (1.0 / field.dx**2 + 1.0 / field.dy**2)
    bound = 0.2 * h2 / (1.0 + p.kappa)
    if dt > bound * (1.0 + 1e-12):
        raise ValidationError(
            f"dt = {dt:g} violates the cross-diffusion bound {bound:.6g}")
    rate = max(1.0 + p.delta1, p.rho * (1.0 + p.a) + p.delta2)
    if dt * rate > 1.5:
        raise ValidationError(
            f"dt = {dt:g} too large for explicit kinetics (rate {rate:.3g})")
    if abs(field.frame_speed) * dt / field.dx > 0.25:
        raise ValidationError("dt violates the advective CFL bound")


def run(config: SimConfig, initial: Field2D) -> SimResult:
    """Advance to t_end, collecting snapshots and mode diagnostics.

    The frame speed stays fixed at the seeding profile's c. Snapshot
    cadence is exact in steps: snapshot_interval and t_end are rounded to
    the nearest step count.
    """
    if (initial.nx, initial.ny) != (config.nx, config.ny):
        raise ValidationError(
            f"initial field is {initial.nx}x{initial.ny}, "
            f"config expects {config.nx}x{config.ny}")
    if abs(initial.dx * (config.nx - 1) - config.Lx) > 1e-9 * config.Lx:
        raise ValidationError("initial dx does not match config Lx")
    if abs(initial.dy * config.ny - config.Ly) > 1e-9 * config.Ly:
        raise ValidationError("initial dy does not match config Ly")
    _stability_limit(initial, config.dt)

    level = 0.5 * build_singular_front(initial.params).v_plus_star
    n_per = int(round(config.snapshot_interval / config.dt))
    n_steps = int(round(config.t_end / config.dt))

    snapshots: list[Field2D] = []
    times: list[float] = []
    iface_rows: list[np.ndarray] = []
    slice_rows: list[np.ndarray] = []

    def collect(f: Field2D) -> None:
        snapshots.append(f)
        times.append(f.time)
        pos = interface_positions(f, level)
        iface_rows.append(_mode_amplitudes(pos))
        i_mid = int(np.clip(round((np.mean(pos) - f.x0) / f.dx), 0, f.nx - 1))
        slice_rows.append(_mode_amplitudes(f.v[i_mid]))

    field = initial
    collect(field)
    for i in range(1, n_steps + 1):
        field = step(field, config.dt)
        if i % n_per == 0:
            collect(field)

    ell = 2.0 * np.pi * np.arange(config.ny // 2 + 1) / config.Ly
    diag = ModeDiagnostics(times=np.array(times), ell=ell,
                           interface=np.array(iface_rows),
                           midslice=np.array(slice_rows),
                           interface_level=level)
    return SimResult(snapshots=tuple(snapshots), diagnostics=diag)


def growth_rates(diag: ModeDiagnostics,
                 window: tuple[float, float]) -> list[tuple[float, float]]:
    """Exponential rate per transverse mode, fitted inside `window`.

    Log-linear least squares on the interface amplitudes; a mode is fitted
    only where its amplitude grows monotonically through the window, so
    decaying or noise-floor modes are omitted from the result.
    """
    t0, t1 = window
    sel = (diag.times >= t0 - 1e-9) & (diag.times <= t1 + 1e-9)
    if int(np.sum(sel)) < 5:
        raise WindowTooShort(
            f"window [{t0:g}, {t1:g}] holds {int(np.sum(sel))} snapshots; "
            f"need at least 5")
    t = diag.times[sel]
    out: list[tuple[float, float]] = []
    for k in range(1, diag.ell.size):
        amps = diag.interface[sel, k]
        if np.all(amps > 0.0) and np.all(np.diff(amps) > 0.0):
            sigma = float(np.polyfit(t, np.log(amps), 1)[0])
            out.append((float(diag.ell[k]), sigma))
    return out
