"""Command-line front end for the invasion-front toolkit.

Commands: classify, singular, tw, spectrum, lambda2, sweep, boundary,
simulate, verify. Every run writes its artifacts (JSON for structured
results, CSV for bulk numbers, PNG report figures) into the output
directory together with a manifest echoing the fully resolved
configuration and the code version, so the manifest alone reproduces
the run bit for bit. Exit codes: 0 on success, 1 on a numerical
failure (a machine-readable error object goes to stderr), 2 on usage
errors. The TUMORFRONT_LOG environment variable ({error, info, debug})
controls logging verbosity on stderr.
"""
from __future__ import annotations

import argparse
import contextlib
import csv
import filecmp
import io
import json
import logging
import os
import sys
import tempfile
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .bvp import FrontProfile, default_grid, measure_gap_width, solve_front
from .config import RunConfig, parse_config, serialize
from .continuation import sweep as run_sweep
from .continuation import trace_boundary
from .errors import TumorFrontError
from .model import steady_states
from .simulate import SimConfig, SimResult, init_planar, stable_dt
from .simulate import run as run_simulation
from .singular import SingularFront, build_singular_front
from .stability import (
    critical_curve,
    lambda2_asymptotic,
    lambda2_from_curve,
    lambda2_solvability,
    spectrum_1d,
)

log = logging.getLogger("tumorfront.cli")

COMMANDS = ("classify", "singular", "tw", "spectrum", "lambda2",
            "sweep", "boundary", "simulate", "verify")

# Golden regression cases shipped with the package: (name, command).
GOLDEN_CASES = (
    ("classify-reference", "classify"),
    ("singular-reference", "singular"),
    ("tw-reference", "tw"),
    ("lambda2-reference", "lambda2"),
    ("spectrum-reference", "spectrum"),
    ("simulate-tiny", "simulate"),
)


# --- serialization helpers --------------------------------------------------

def _fmt(value) -> str:
    """Shortest exact decimal for a float; plain repr for ints/str."""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.17g" % float(value)
    return str(value)


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])
    log.info("wrote %s", path)


def _write_json(path: Path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
    log.info("wrote %s", path)


def _write_manifest(out: Path, command: str, config: RunConfig) -> None:
    _write_json(out / "manifest.json", {
        "version": __version__,
        "command": command,
        "config": serialize(config),
    })


def _solve_profile(config: RunConfig) -> FrontProfile:
    singular = build_singular_front(config.params)
    grid = default_grid(config.params, singular,
                        dx_factor=config.tw.dx_factor,
                        zeta_half=config.tw.zeta_half)
    log.info("solving front on %d nodes", grid.xi.size)
    return solve_front(config.params, grid, singular=singular)


def _new_figure(width: float, height: float):
    # local import keeps figure-free commands light
    from matplotlib.figure import Figure
    return Figure(figsize=(width, height), dpi=130)


def _save_figure(fig, path: Path) -> None:
    fig.savefig(path, bbox_inches="tight")
    log.info("wrote %s", path)


# --- commands ----------------------------------------------------------------

def _cmd_classify(config: RunConfig, out: Path, figures: bool) -> None:
    p = config.params
    singular = build_singular_front(p)
    regime = singular.regime
    # far-field states of the front: healthy tissue ahead, invaded behind
    behind = "P4+" if regime.delta1_v_plus >= 1.0 else "P3+"
    states = []
    for st in steady_states(p):
        states.append({
            "label": st.label,
            "U": st.u, "V": st.v, "W": st.w,
            "stable": st.stable,
            "relevant": st.label in ("P2", behind),
        })
    _write_json(out / "steady_states.json", states)
    print(regime.kind)


def _cmd_singular(config: RunConfig, out: Path, figures: bool) -> None:
    front = build_singular_front(config.params)
    orbits = front.orbits
    _write_json(out / "singular.json", {
        "regime": front.regime.kind,
        "w_star": front.w_star,
        "c_star": front.c_star,
        "u_star": front.u_star,
        "v_plus_star": front.v_plus_star,
        "gap_width_zeta": front.gap.zeta,
        "gap_width_xi": front.gap.xi,
        "I_minus": orbits.I_minus,
        "I_plus": orbits.I_plus,
    })
    rows = []
    for z, w, p_ in zip(orbits.zeta_minus, orbits.w_minus, orbits.p_minus):
        rows.append((z, w, p_, "minus"))
    for z, w, p_ in zip(orbits.zeta_plus, orbits.w_plus, orbits.p_plus):
        rows.append((z, w, p_, "plus"))
    _write_csv(out / "singular_orbit.csv", ["zeta", "w", "p", "branch"], rows)
    if figures:
        _fig_singular(front, out / "singular.png")


def _fig_singular(front: SingularFront, path: Path) -> None:
    fig = _new_figure(8.0, 3.2)
    ax_orbit, ax_zeta = fig.subplots(1, 2)
    o = front.orbits
    ax_orbit.plot(o.w_minus, o.p_minus, label="ahead")
    ax_orbit.plot(o.w_plus, o.p_plus, label="behind")
    ax_orbit.axvline(front.w_star, color="0.6", lw=0.8, ls=":")
    ax_orbit.set_xlabel("w")
    ax_orbit.set_ylabel("p = dw/dzeta")
    ax_orbit.legend(frameon=False)
    ax_zeta.plot(o.zeta_minus, o.w_minus)
    ax_zeta.plot(o.zeta_plus, o.w_plus)
    ax_zeta.set_xlabel("zeta")
    ax_zeta.set_ylabel("w")
    fig.suptitle(f"singular front, {front.regime.kind}")
    _save_figure(fig, path)


def _cmd_tw(config: RunConfig, out: Path, figures: bool) -> None:
    profile = _solve_profile(config)
    _write_csv(out / "profile.csv", ["xi", "u", "v", "w"],
               zip(profile.grid.xi, profile.u, profile.v, profile.w))
    _write_json(out / "tw.json", {
        "c": profile.c,
        "residual_norm": profile.residual_norm,
        "gap_width": measure_gap_width(profile),
        "regime": profile.regime_kind,
    })
    if figures:
        _fig_profile(profile, out / "profile.png")


def _fig_profile(profile: FrontProfile, path: Path) -> None:
    fig = _new_figure(7.0, 3.4)
    ax = fig.subplots()
    xi = profile.grid.xi
    ax.plot(xi, profile.u, label="u (tissue)")
    ax.plot(xi, profile.v, label="v (tumor)")
    ax.plot(xi, profile.w, label="w (acid)")
    ax.set_xlabel("xi")
    ax.set_title(f"traveling front, c = {profile.c:.6g}")
    ax.legend(frameon=False)
    _save_figure(fig, path)


def _cmd_spectrum(config: RunConfig, out: Path, figures: bool) -> None:
    profile = _solve_profile(config)
    opts = config.spectrum
    rows: list[tuple[float, float, float]] = []
    if 0.0 in opts.ell:
        res = spectrum_1d(profile, n_eigs=opts.n_eigenvalues)
        for lam in res.eigenvalues:
            rows.append((0.0, float(np.real(lam)), float(np.imag(lam))))
    positive = [l for l in opts.ell if l > 0.0]
    if positive:
        for ell, lam in critical_curve(profile, positive):
            rows.append((float(ell), float(lam), 0.0))
    _write_csv(out / "spectrum.csv", ["ell", "re", "im"], rows)
    if figures:
        _fig_spectrum(rows, out / "spectrum.png")


def _fig_spectrum(rows, path: Path) -> None:
    fig = _new_figure(8.0, 3.2)
    ax_plane, ax_curve = fig.subplots(1, 2)
    zero = [(re, im) for ell, re, im in rows if ell == 0.0]
    if zero:
        re, im = zip(*zero)
        ax_plane.scatter(re, im, s=18)
    ax_plane.axvline(0.0, color="0.6", lw=0.8)
    ax_plane.set_xlabel("Re lambda")
    ax_plane.set_ylabel("Im lambda")
    ax_plane.set_title("spectrum at ell = 0")
    branch = sorted((ell, re) for ell, re, _ in rows if ell > 0.0)
    if branch:
        ells, res = zip(*branch)
        ax_curve.plot(ells, res, marker="o", ms=3)
    ax_curve.axhline(0.0, color="0.6", lw=0.8)
    ax_curve.set_xlabel("ell")
    ax_curve.set_ylabel("leading Re lambda")
    ax_curve.set_title("transverse branch")
    _save_figure(fig, path)


def _cmd_lambda2(config: RunConfig, out: Path, figures: bool) -> None:
    routes = config.lambda2.routes
    results = []
    profile: FrontProfile | None = None
    singular: SingularFront | None = None
    for route in routes:
        if route == "asymptotic":
            if singular is None:
                singular = build_singular_front(config.params)
            res = lambda2_asymptotic(singular)
        else:
            if profile is None:
                profile = _solve_profile(config)
            if route == "solvability":
                res = lambda2_solvability(profile)
            else:  # quadratic-fit
                res = lambda2_from_curve(profile)
        log.info("lambda2 via %s: %.9g", res.method, res.value)
        results.append({
            "value": res.value,
            "method": res.method,
            "sign": res.sign,
            "components": dict(res.components),
        })
    _write_json(out / "lambda2.json", results)


def _cmd_sweep(config: RunConfig, out: Path, figures: bool) -> None:
    opts = config.sweep
    branch = run_sweep(config.params, opts.param, opts.range, opts.n_points)
    if branch.failures:
        log.warning("sweep failed at %d of %d values: %s",
                    len(branch.failures), opts.n_points,
                    ", ".join("%g" % v for v in branch.failures))
    rows = [(pt.param_value, pt.c, pt.lambda2, pt.gap_width, pt.regime)
            for pt in branch.points]
    _write_csv(out / "sweep.csv",
               [opts.param, "c", "lambda2", "gap_width", "regime"], rows)
    if figures:
        _fig_sweep(opts.param, rows, out / "sweep.png")


def _fig_sweep(param: str, rows, path: Path) -> None:
    fig = _new_figure(8.0, 3.2)
    ax_c, ax_l2 = fig.subplots(1, 2)
    x = [r[0] for r in rows]
    ax_c.plot(x, [r[1] for r in rows], marker="o", ms=3)
    ax_c.set_xlabel(param)
    ax_c.set_ylabel("c")
    ax_l2.plot(x, [r[2] for r in rows], marker="o", ms=3, color="C1")
    ax_l2.axhline(0.0, color="0.6", lw=0.8)
    ax_l2.set_xlabel(param)
    ax_l2.set_ylabel("lambda2")
    _save_figure(fig, path)


def _cmd_boundary(config: RunConfig, out: Path, figures: bool) -> None:
    opts = config.boundary
    curve = trace_boundary(config.params, opts.plane, opts.region,
                           step=opts.step, edge_points=opts.edge_points,
                           march_dx_factor=opts.march_dx_factor,
                           polish_dx_factor=opts.polish_dx_factor,
                           field_tol=opts.field_tol)
    unstable = [side for side, verdict in curve.side_labels.items()
                if verdict == "unstable"]
    side = unstable[0] if len(unstable) == 1 else "unknown"
    x_name, y_name = curve.plane
    _write_csv(out / "boundary.csv", [x_name, y_name, "side"],
               [(x, y, side) for x, y in curve.points])
    _write_csv(out / "overlay.csv", [x_name, y_name], list(curve.overlay))
    if figures:
        _fig_boundary(curve, out / "boundary.png")


def _fig_boundary(curve, path: Path) -> None:
    fig = _new_figure(5.2, 3.8)
    ax = fig.subplots()
    if curve.points:
        x, y = zip(*curve.points)
        ax.plot(x, y, marker=".", ms=3, label="lambda2 = 0")
    if curve.overlay:
        ox, oy = zip(*curve.overlay)
        ax.plot(ox, oy, color="red", lw=1.2, label="aggressive-invasion threshold")
    ax.set_xlabel(curve.plane[0])
    ax.set_ylabel(curve.plane[1])
    labels = ", ".join(f"{k}: {v}" for k, v in sorted(curve.side_labels.items()))
    ax.set_title(labels)
    ax.legend(frameon=False)
    _save_figure(fig, path)


def _write_field_csv(path: Path, values: np.ndarray, field, time: float) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([_fmt(field.nx), _fmt(field.ny), _fmt(field.dx),
                         _fmt(field.dy), _fmt(time)])
        for row in values:  # row-major: one line per x node
            writer.writerow([_fmt(x) for x in row])
    log.info("wrote %s", path)


def _cmd_simulate(config: RunConfig, out: Path, figures: bool) -> RunConfig:
    opts = config.simulate
    profile = _solve_profile(config)
    field = init_planar(profile, ny=opts.ny, Ly=opts.Ly,
                        noise_amplitude=opts.noise_amplitude,
                        seed=config.rng_seed, nx=opts.nx, x_span=opts.x_span)
    dt = opts.dt if opts.dt is not None else stable_dt(field)
    # materialize the resolved stepping so the manifest is self-contained;
    # an explicit span is kept verbatim (reconstructing the endpoint from
    # dx would perturb the grid, and with it every replayed artifact)
    xi = profile.grid.xi
    span = (opts.x_span if opts.x_span is not None
            else (float(xi[0]), float(xi[-1])))
    config = replace(config, simulate=replace(opts, dt=dt, x_span=span))
    sim = SimConfig(Lx=span[1] - span[0], Ly=opts.Ly, nx=opts.nx, ny=opts.ny,
                    dt=dt, t_end=opts.t_end,
                    snapshot_interval=opts.snapshot_interval,
                    noise_amplitude=opts.noise_amplitude,
                    rng_seed=config.rng_seed)
    log.info("stepping %d x %d grid at dt = %g to t = %g",
             opts.nx, opts.ny, dt, opts.t_end)
    result = run_simulation(sim, field)

    for i, snap in enumerate(result.snapshots):
        for name in ("u", "v", "w"):
            _write_field_csv(out / f"{name}_{i:04d}.csv",
                             getattr(snap, name), snap, snap.time)
    diag = result.diagnostics
    rows = []
    for it, t in enumerate(diag.times):
        for k, ell in enumerate(diag.ell):
            rows.append((t, k, ell, diag.interface[it, k]))
    _write_csv(out / "diagnostics.csv", ["time", "k", "ell_k", "amplitude"], rows)
    if figures:
        _fig_simulate(result, out / "simulate.png")
    return config


def _fig_simulate(result: SimResult, path: Path) -> None:
    fig = _new_figure(8.4, 3.4)
    ax_map, ax_amp = fig.subplots(1, 2)
    last = result.snapshots[-1]
    extent = (last.x[0], last.x[-1], 0.0, last.ny * last.dy)
    im = ax_map.imshow(last.v.T, origin="lower", extent=extent,
                       aspect="auto", cmap="viridis")
    fig.colorbar(im, ax=ax_map, label="v")
    ax_map.set_xlabel("x")
    ax_map.set_ylabel("y")
    ax_map.set_title(f"tumor density at t = {last.time:g}")
    diag = result.diagnostics
    n_show = min(5, diag.interface.shape[1] - 1)
    for k in range(1, n_show + 1):
        amps = diag.interface[:, k]
        if np.all(amps > 0.0):
            ax_amp.semilogy(diag.times, amps, label=f"k = {k}")
    ax_amp.set_xlabel("t")
    ax_amp.set_ylabel("interface mode amplitude")
    ax_amp.legend(frameon=False, fontsize=8)
    _save_figure(fig, path)


_RUNNERS = {
    "classify": _cmd_classify,
    "singular": _cmd_singular,
    "tw": _cmd_tw,
    "spectrum": _cmd_spectrum,
    "lambda2": _cmd_lambda2,
    "sweep": _cmd_sweep,
    "boundary": _cmd_boundary,
    "simulate": _cmd_simulate,
}


def dispatch(command: str, config: RunConfig, out: Path, *,
             figures: bool = True) -> None:
    """Run one command, writing its artifacts and manifest into `out`."""
    out.mkdir(parents=True, exist_ok=True)
    resolved = _RUNNERS[command](config, out, figures)
    _write_manifest(out, command, resolved if resolved is not None else config)


# --- golden regressions -------------------------------------------------------

def _goldens_root() -> Path:
    return Path(__file__).resolve().parent / "goldens"


def _replay_case(name: str, command: str, fresh: Path) -> list[str]:
    """Re-run one golden case and return the list of mismatched files."""
    case = _goldens_root() / name
    config = parse_config(case / "config.json")
    dispatch(command, config, fresh, figures=False)
    expected = case / "expected"
    mismatches: list[str] = []
    want = sorted(p.name for p in expected.iterdir())
    have = {p.name for p in fresh.iterdir()}
    for fname in want:
        if fname not in have:
            mismatches.append(f"{fname} (missing)")
        elif not filecmp.cmp(expected / fname, fresh / fname, shallow=False):
            mismatches.append(fname)
    for fname in sorted(have - set(want)):
        mismatches.append(f"{fname} (unexpected)")
    return mismatches


def _cmd_verify(regenerate: bool) -> int:
    root = _goldens_root()
    status = 0
    for name, command in GOLDEN_CASES:
        case = root / name
        if regenerate:
            expected = case / "expected"
            expected.mkdir(parents=True, exist_ok=True)
            for old in expected.iterdir():
                old.unlink()
            config = parse_config(case / "config.json")
            # commands narrate to stdout; only the per-case verdict belongs here
            with contextlib.redirect_stdout(io.StringIO()):
                dispatch(command, config, expected, figures=False)
            print(f"{name}: regenerated")
            continue
        with tempfile.TemporaryDirectory() as tmp:
            with contextlib.redirect_stdout(io.StringIO()):
                mismatches = _replay_case(name, command, Path(tmp))
        if mismatches:
            status = 1
            print(f"{name}: MISMATCH ({', '.join(mismatches)})")
        else:
            print(f"{name}: ok")
    return status


# --- entry point ---------------------------------------------------------------

def _setup_logging() -> None:
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    name = os.environ.get("TUMORFRONT_LOG", "error").lower()
    logging.basicConfig(stream=sys.stderr, level=levels.get(name, logging.ERROR),
                        format="%(levelname)s %(name)s: %(message)s")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tumorfront",
        description="Traveling tumor-invasion fronts: speeds, spectra, "
                    "transverse stability and 2D simulation.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    helps = {
        "classify": "regime of the parameter set; writes steady states",
        "singular": "leading-order front: speed, interface, slow orbits",
        "tw": "finite-thickness traveling front and its speed",
        "spectrum": "1D spectrum and the transverse eigenvalue branch",
        "lambda2": "transverse-instability coefficient by chosen routes",
        "sweep": "front diagnostics along one parameter",
        "boundary": "trace the transverse stability boundary in a plane",
        "simulate": "2D comoving simulation with seeded interface noise",
        "verify": "replay committed golden runs and report diffs",
    }
    for name in COMMANDS:
        sp = sub.add_parser(name, help=helps[name])
        if name == "verify":
            sp.add_argument("--regenerate", action="store_true",
                            help="rebuild the stored golden outputs")
        else:
            sp.add_argument("--config", required=True, metavar="PATH",
                            help="JSON run configuration")
            sp.add_argument("--out", metavar="DIR",
                            help="artifact directory (default: config "
                                 "output_dir, else '.')")
            sp.add_argument("--seed", type=int, metavar="N",
                            help="override the configured rng_seed")
        sp.add_argument("--threads", type=int, metavar="N",
                        help="cap BLAS/LAPACK threads (default: all cores)")
    return parser


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    args = _build_parser().parse_args(argv)
    try:
        if args.threads is not None:
            from threadpoolctl import threadpool_limits
            threadpool_limits(limits=args.threads)
        if args.command == "verify":
            return _cmd_verify(args.regenerate)
        config = parse_config(args.config)
        if args.seed is not None:
            config = replace(config, rng_seed=args.seed)
        out = Path(args.out or config.output_dir or ".")
        dispatch(args.command, config, out)
        return 0
    except TumorFrontError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
