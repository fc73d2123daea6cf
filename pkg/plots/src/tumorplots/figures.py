"""The five figure kinds, each a pure function of the artifact files.

Every renderer takes the directory a tumorfront command wrote into and
produces one PNG. Inputs are read through `artifacts`; nothing is ever
recomputed, interpolated, or fitted here. Saved images carry no timestamp
or tool-version metadata, so identical inputs give identical bytes.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np
from matplotlib.figure import Figure

from .artifacts import FieldSnapshot, read_field, read_table
from .errors import SchemaMismatch

# axis symbols for the quantities the artifacts carry
SYMBOLS = {
    "a": "$a$",
    "delta1": r"$\delta_1$",
    "delta2": r"$\delta_2$",
    "delta3": r"$\delta_3$",
    "rho": r"$\rho$",
    "kappa": r"$\kappa$",
    "epsilon": r"$\varepsilon$",
}

HEATMAP_CMAP = "viridis"  # low = dark blue, high = bright yellow


def _symbol(column: str) -> str:
    return SYMBOLS.get(column, column)


def _new_figure(width: float, height: float) -> Figure:
    return Figure(figsize=(width, height), dpi=130, layout="constrained")


def _save(fig: Figure, out: Path) -> Path:
    out.parent.mkdir(parents=True, exist_ok=True)
    # suppress the tool-version text chunk: reruns must be byte-identical
    fig.savefig(out, metadata={"Software": None})
    return out


# --- profiles (+ spectra when present) --------------------------------------

def profiles(in_dir: Path, out: Path) -> Path:
    table = read_table(in_dir / "profile.csv")
    table.require("xi", "u", "v", "w")
    xi = table.floats("xi")
    spectrum_path = in_dir / "spectrum.csv"
    with_spectrum = spectrum_path.is_file()
    fig = _new_figure(10.5 if with_spectrum else 6.5, 3.2)
    axes = fig.subplots(1, 3 if with_spectrum else 1, squeeze=False)[0]

    ax = axes[0]
    for name, label in (("u", "$u$ (tissue)"), ("v", "$v$ (tumor)"),
                        ("w", "$w$ (acid)")):
        ax.plot(xi, table.floats(name), label=label)
    ax.set_xlabel(r"$\xi$")
    ax.set_ylabel("density / concentration")
    ax.legend(frameon=False)
    ax.set_title("traveling front")

    if with_spectrum:
        spec = read_table(spectrum_path)
        spec.require("ell", "re", "im")
        ell = spec.floats("ell")
        re, im = spec.floats("re"), spec.floats("im")

        ax_plane = axes[1]
        at_zero = ell == 0.0
        if np.any(at_zero):
            ax_plane.scatter(re[at_zero], im[at_zero], s=18)
        ax_plane.axvline(0.0, color="0.6", lw=0.8)
        ax_plane.set_xlabel(r"Re $\lambda$")
        ax_plane.set_ylabel(r"Im $\lambda$")
        ax_plane.set_title(r"spectrum at $\ell = 0$")

        ax_branch = axes[2]
        transverse = ell > 0.0
        if np.any(transverse):
            order = np.argsort(ell[transverse])
            ax_branch.plot(ell[transverse][order], re[transverse][order],
                           marker="o", ms=3)
        ax_branch.axhline(0.0, color="0.6", lw=0.8)
        ax_branch.set_xlabel(r"$\ell$")
        ax_branch.set_ylabel(r"leading Re $\lambda$")
        ax_branch.set_title("transverse branch")
    return _save(fig, out)


# --- gap width along a sweep -------------------------------------------------

def gapwidth(in_dir: Path, out: Path) -> Path:
    table = read_table(in_dir / "sweep.csv")
    table.require("gap_width")
    param = table.columns[0]
    fig = _new_figure(4.6, 3.4)
    ax = fig.subplots()
    ax.plot(table.floats(param), table.floats("gap_width"), marker="o", ms=3)
    ax.set_xlabel(_symbol(param))
    ax.set_ylabel("gap width")
    ax.set_title(f"acellular gap vs {_symbol(param)}")
    return _save(fig, out)


# --- speed and transverse coefficient along a sweep ---------------------------

def sweep(in_dir: Path, out: Path) -> Path:
    table = read_table(in_dir / "sweep.csv")
    table.require("c", "lambda2")
    param = table.columns[0]
    x = table.floats(param)
    fig = _new_figure(8.2, 3.3)
    ax_c, ax_l2 = fig.subplots(1, 2)
    ax_c.plot(x, table.floats("c"), marker="o", ms=3)
    ax_c.set_xlabel(_symbol(param))
    ax_c.set_ylabel("$c$")
    ax_c.set_title("front speed")
    ax_l2.plot(x, table.floats("lambda2"), marker="o", ms=3, color="C1")
    ax_l2.axhline(0.0, color="0.6", lw=0.8)
    ax_l2.set_xlabel(_symbol(param))
    ax_l2.set_ylabel(r"$\lambda_{c,2}$")
    ax_l2.set_title("transverse coefficient")
    return _save(fig, out)


# --- stability boundary with the aggressive-invasion overlay ------------------

def boundary(in_dir: Path, out: Path) -> Path:
    curve = read_table(in_dir / "boundary.csv")
    curve.require("side")
    named = [c for c in curve.columns if c != "side"]
    if len(named) < 2:
        raise SchemaMismatch(
            f"boundary.csv: needs two coordinate columns, has {named}",
            missing=("x", "y"))
    x_name, y_name = named[0], named[1]
    overlay = read_table(in_dir / "overlay.csv")
    overlay.require(x_name, y_name)

    fig = _new_figure(5.0, 3.8)
    ax = fig.subplots()
    ax.plot(curve.floats(x_name), curve.floats(y_name), marker=".", ms=3,
            label=r"$\lambda_{c,2} = 0$")
    ax.plot(overlay.floats(x_name), overlay.floats(y_name), color="red",
            lw=1.2, label="aggressive-invasion threshold")
    ax.set_xlabel(_symbol(x_name))
    ax.set_ylabel(_symbol(y_name))
    sides = set(curve.strings("side"))
    if len(sides) == 1:
        side = sides.pop()
        ax.set_title(f"transversely unstable {side} the curve")
    ax.legend(frameon=False)
    return _save(fig, out)


# --- 2D snapshot heatmaps ------------------------------------------------------

def _snapshot_indices(in_dir: Path) -> list[str]:
    tags = sorted(p.stem.split("_", 1)[1] for p in in_dir.glob("v_*.csv"))
    if not tags:
        raise SchemaMismatch(f"no v_*.csv snapshots in {in_dir}",
                             missing=("v_*.csv",))
    if len(tags) <= 3:
        return tags
    return [tags[0], tags[len(tags) // 2], tags[-1]]


def heatmap(in_dir: Path, out: Path) -> Path:
    tags = _snapshot_indices(in_dir)
    fields: list[tuple[str, list[FieldSnapshot]]] = []
    for name in ("u", "v", "w"):
        paths = [in_dir / f"{name}_{tag}.csv" for tag in tags]
        if all(p.is_file() for p in paths):
            fields.append((name, [read_field(p) for p in paths]))
    if not fields:
        raise SchemaMismatch(
            f"no complete u/v/w snapshot set in {in_dir}",
            missing=tuple(f"{n}_NNNN.csv" for n in ("u", "v", "w")))

    nrows, ncols = len(fields), len(tags)
    fig = _new_figure(3.1 * ncols + 0.9, 2.4 * nrows)
    axes = fig.subplots(nrows, ncols, squeeze=False)
    for i, (name, snaps) in enumerate(fields):
        # one scale per field so panels along a row are comparable
        vmin = min(float(s.values.min()) for s in snaps)
        vmax = max(float(s.values.max()) for s in snaps)
        for j, snap in enumerate(snaps):
            ax = axes[i][j]
            extent = (0.0, (snap.nx - 1) * snap.dx, 0.0, snap.ny * snap.dy)
            im = ax.imshow(snap.values.T, origin="lower", extent=extent,
                           aspect="auto", cmap=HEATMAP_CMAP,
                           vmin=vmin, vmax=vmax)
            if i == nrows - 1:
                ax.set_xlabel(r"$\xi$")
            if j == 0:
                ax.set_ylabel(f"${name}$      $y$")
            if i == 0:
                ax.set_title(f"$t = {snap.time:g}$")
        fig.colorbar(im, ax=axes[i][-1])
    return _save(fig, out)


KINDS = {
    "profiles": profiles,
    "gapwidth": gapwidth,
    "sweep": sweep,
    "boundary": boundary,
    "heatmap": heatmap,
}


def render(kind: str, in_dir: Path, out: Path) -> Path:
    """Draw one figure kind from the artifacts in `in_dir` into `out`."""
    try:
        draw = KINDS[kind]
    except KeyError:
        raise SchemaMismatch(
            f"unknown figure kind {kind!r}; choose from "
            f"{', '.join(sorted(KINDS))}") from None
    return draw(Path(in_dir), Path(out))
