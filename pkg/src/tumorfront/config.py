"""Run configuration for the command-line tools.

A run is described by one JSON object with a required `params` section
and optional per-command sections; omitted sections and keys take the
defaults below. Parsing is strict: unknown keys are rejected rather
than ignored so a typo cannot silently fall back to a default, and
every invalid value is reported with the offending key named.
`serialize` emits the fully resolved configuration, which is what the
manifest written next to every artifact set contains, so a manifest is
sufficient to reproduce a run bit for bit.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from .errors import ParseError, UnknownKey, ValidationError
from .model import ModelParams

PARAM_FIELDS = tuple(f.name for f in fields(ModelParams))

# Sweep windows for the parameters with a distinguished default range;
# sweeps over any other parameter must state their range explicitly.
SWEEP_RANGES = {"a": (0.05, 0.45), "delta1": (0.05, 15.0)}

LAMBDA2_ROUTES = ("solvability", "asymptotic", "quadratic-fit")


# --- value coercion --------------------------------------------------------

def _as_float(section: str, key: str, raw) -> float:
    # bool is an int subclass; reject it explicitly
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise ValidationError(f"{section}.{key} must be a number, got {raw!r}")
    return float(raw)


def _as_int(section: str, key: str, raw) -> int:
    if isinstance(raw, bool) or not isinstance(raw, int):
        raise ValidationError(f"{section}.{key} must be an integer, got {raw!r}")
    return int(raw)


def _as_str(section: str, key: str, raw) -> str:
    if not isinstance(raw, str):
        raise ValidationError(f"{section}.{key} must be a string, got {raw!r}")
    return raw


def _as_pair(section: str, key: str, raw) -> tuple[float, float]:
    if not isinstance(raw, (list, tuple)) or len(raw) != 2:
        raise ValidationError(f"{section}.{key} must be a pair of numbers, got {raw!r}")
    return (_as_float(section, key, raw[0]), _as_float(section, key, raw[1]))


def _as_float_tuple(section: str, key: str, raw) -> tuple[float, ...]:
    if not isinstance(raw, (list, tuple)) or not raw:
        raise ValidationError(f"{section}.{key} must be a non-empty list of numbers, got {raw!r}")
    return tuple(_as_float(section, key, x) for x in raw)


def _as_str_tuple(section: str, key: str, raw) -> tuple[str, ...]:
    if not isinstance(raw, (list, tuple)) or not raw:
        raise ValidationError(f"{section}.{key} must be a non-empty list of strings, got {raw!r}")
    return tuple(_as_str(section, key, x) for x in raw)


def _reject_unknown(section: str, raw: dict, known: tuple[str, ...]) -> None:
    for key in sorted(raw):
        if key not in known:
            raise UnknownKey(f"unknown key {key!r} in section {section!r}")


def _take_section(data: dict, name: str) -> dict:
    raw = data.pop(name, None)
    if raw is None:
        return {}
    if not isinstance(raw, dict):
        raise ValidationError(f"{name} must be an object, got {raw!r}")
    return dict(raw)


# --- per-command option blocks ---------------------------------------------

@dataclass(frozen=True)
class TwOptions:
    """Front solve: grid refinement factor and slow-scale half-width.

    These govern every command that needs a converged front profile, not
    just `tw` itself.
    """

    dx_factor: float = 1.0
    zeta_half: float = 10.0

    def __post_init__(self):
        if self.dx_factor <= 0.0:
            raise ValidationError(f"tw.dx_factor must be positive, got {self.dx_factor}")
        if self.zeta_half <= 0.0:
            raise ValidationError(f"tw.zeta_half must be positive, got {self.zeta_half}")


@dataclass(frozen=True)
class SpectrumOptions:
    """Transverse wavenumbers and eigenvalue count for `spectrum`."""

    ell: tuple[float, ...] = (0.0, 0.02, 0.04, 0.06, 0.08, 0.1)
    n_eigenvalues: int = 12

    def __post_init__(self):
        object.__setattr__(self, "ell", _as_float_tuple("spectrum", "ell", self.ell))
        if min(self.ell) < 0.0:
            raise ValidationError(f"spectrum.ell must be nonnegative, got {min(self.ell)}")
        if self.n_eigenvalues < 1:
            raise ValidationError(
                f"spectrum.n_eigenvalues must be at least 1, got {self.n_eigenvalues}"
            )


@dataclass(frozen=True)
class Lambda2Options:
    """Which routes to the transverse-instability coefficient to evaluate."""

    routes: tuple[str, ...] = ("solvability",)

    def __post_init__(self):
        object.__setattr__(self, "routes", tuple(self.routes))
        for route in self.routes:
            if route not in LAMBDA2_ROUTES:
                raise ValidationError(
                    f"lambda2.routes entries must be one of {LAMBDA2_ROUTES}, got {route!r}"
                )
        if len(set(self.routes)) != len(self.routes):
            raise ValidationError(f"lambda2.routes has duplicates: {self.routes}")


@dataclass(frozen=True)
class SweepOptions:
    """One-parameter continuation: swept name, window and sample count."""

    param: str = "a"
    range: tuple[float, float] | None = None
    n_points: int = 24

    def __post_init__(self):
        if self.param not in PARAM_FIELDS:
            raise ValidationError(
                f"sweep.param must be one of {PARAM_FIELDS}, got {self.param!r}"
            )
        if self.range is None:
            default = SWEEP_RANGES.get(self.param)
            if default is None:
                raise ValidationError(
                    f"sweep.range is required for parameter {self.param!r}"
                )
            object.__setattr__(self, "range", default)
        lo, hi = self.range
        if not lo < hi:
            raise ValidationError(f"sweep.range must be increasing, got {self.range}")
        if self.n_points < 2:
            raise ValidationError(f"sweep.n_points must be at least 2, got {self.n_points}")


@dataclass(frozen=True)
class BoundaryOptions:
    """Stability-boundary tracing: plane, search region and march control."""

    plane: tuple[str, str] = ("delta1", "delta2")
    region: tuple[tuple[float, float], tuple[float, float]] = ((2.0, 15.0), (0.01, 0.2))
    step: float = 0.05
    edge_points: int = 32
    march_dx_factor: float = 0.25
    polish_dx_factor: float = 1.0 / 32.0
    field_tol: float = 1e-7

    def __post_init__(self):
        object.__setattr__(self, "plane", tuple(self.plane))
        for name in self.plane:
            if name not in PARAM_FIELDS:
                raise ValidationError(
                    f"boundary.plane entries must be one of {PARAM_FIELDS}, got {name!r}"
                )
        if len(self.plane) != 2 or self.plane[0] == self.plane[1]:
            raise ValidationError(
                f"boundary.plane must name two distinct parameters, got {self.plane}"
            )
        region = tuple(tuple(float(v) for v in axis) for axis in self.region)
        object.__setattr__(self, "region", region)
        for axis, (lo, hi) in zip(self.plane, region):
            if not lo < hi:
                raise ValidationError(
                    f"boundary.region for {axis!r} must be increasing, got ({lo}, {hi})"
                )
        if self.step <= 0.0:
            raise ValidationError(f"boundary.step must be positive, got {self.step}")
        if self.edge_points < 4:
            raise ValidationError(
                f"boundary.edge_points must be at least 4, got {self.edge_points}"
            )
        for key in ("march_dx_factor", "polish_dx_factor", "field_tol"):
            if getattr(self, key) <= 0.0:
                raise ValidationError(
                    f"boundary.{key} must be positive, got {getattr(self, key)}"
                )


@dataclass(frozen=True)
class SimulateOptions:
    """Two-dimensional run: box, grid, stepping, noise and seed.

    `x_span` is the window of the front profile used as the wave-direction
    domain (null takes the profile's full domain); `dt` null lets the run
    choose the largest stable step.
    """

    Ly: float = 100.0
    nx: int = 512
    ny: int = 256
    x_span: tuple[float, float] | None = None
    dt: float | None = None
    t_end: float = 4000.0
    snapshot_interval: float = 100.0
    noise_amplitude: float = 1e-3

    def __post_init__(self):
        if self.Ly <= 0.0:
            raise ValidationError(f"simulate.Ly must be positive, got {self.Ly}")
        if self.nx < 4:
            raise ValidationError(f"simulate.nx must be at least 4, got {self.nx}")
        if self.ny != 1 and self.ny < 3:
            raise ValidationError(f"simulate.ny must be 1 or at least 3, got {self.ny}")
        if self.x_span is not None:
            span = (float(self.x_span[0]), float(self.x_span[1]))
            object.__setattr__(self, "x_span", span)
            if not span[0] < span[1]:
                raise ValidationError(f"simulate.x_span must be increasing, got {span}")
        if self.dt is not None and self.dt <= 0.0:
            raise ValidationError(f"simulate.dt must be positive, got {self.dt}")
        if self.t_end <= 0.0:
            raise ValidationError(f"simulate.t_end must be positive, got {self.t_end}")
        if self.snapshot_interval <= 0.0:
            raise ValidationError(
                f"simulate.snapshot_interval must be positive, got {self.snapshot_interval}"
            )
        if self.noise_amplitude < 0.0:
            raise ValidationError(
                f"simulate.noise_amplitude must be nonnegative, got {self.noise_amplitude}"
            )


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved configuration for one command-line invocation.

    `output_dir` is where artifacts land unless the command line says
    otherwise; `rng_seed` seeds the simulation noise and can likewise be
    overridden from the command line.
    """

    params: ModelParams
    tw: TwOptions = TwOptions()
    spectrum: SpectrumOptions = SpectrumOptions()
    lambda2: Lambda2Options = Lambda2Options()
    sweep: SweepOptions = SweepOptions()
    boundary: BoundaryOptions = BoundaryOptions()
    simulate: SimulateOptions = SimulateOptions()
    output_dir: str | None = None
    rng_seed: int = 0

    def __post_init__(self):
        if self.output_dir is not None and not isinstance(self.output_dir, str):
            raise ValidationError(
                f"output_dir must be a string, got {self.output_dir!r}"
            )
        if self.rng_seed < 0:
            raise ValidationError(f"rng_seed must be nonnegative, got {self.rng_seed}")


# --- parsing ----------------------------------------------------------------

def _build_params(raw) -> ModelParams:
    if not isinstance(raw, dict):
        raise ValidationError(f"params must be an object, got {raw!r}")
    _reject_unknown("params", raw, PARAM_FIELDS)
    for key in PARAM_FIELDS:
        if key not in raw:
            raise ValidationError(f"params is missing {key!r}")
    values = {key: _as_float("params", key, raw[key]) for key in PARAM_FIELDS}
    try:
        return ModelParams(**values)
    except ValueError as exc:  # constraint messages already name the key
        raise ValidationError(str(exc)) from exc


def _build_tw(raw: dict) -> TwOptions:
    _reject_unknown("tw", raw, ("dx_factor", "zeta_half"))
    kwargs = {}
    for key in ("dx_factor", "zeta_half"):
        if key in raw:
            kwargs[key] = _as_float("tw", key, raw[key])
    return TwOptions(**kwargs)


def _build_spectrum(raw: dict) -> SpectrumOptions:
    _reject_unknown("spectrum", raw, ("ell", "n_eigenvalues"))
    kwargs = {}
    if "ell" in raw:
        kwargs["ell"] = _as_float_tuple("spectrum", "ell", raw["ell"])
    if "n_eigenvalues" in raw:
        kwargs["n_eigenvalues"] = _as_int("spectrum", "n_eigenvalues", raw["n_eigenvalues"])
    return SpectrumOptions(**kwargs)


def _build_lambda2(raw: dict) -> Lambda2Options:
    _reject_unknown("lambda2", raw, ("routes",))
    kwargs = {}
    if "routes" in raw:
        kwargs["routes"] = _as_str_tuple("lambda2", "routes", raw["routes"])
    return Lambda2Options(**kwargs)


def _build_sweep(raw: dict) -> SweepOptions:
    _reject_unknown("sweep", raw, ("param", "range", "n_points"))
    kwargs = {}
    if "param" in raw:
        kwargs["param"] = _as_str("sweep", "param", raw["param"])
    if raw.get("range") is not None:
        kwargs["range"] = _as_pair("sweep", "range", raw["range"])
    if "n_points" in raw:
        kwargs["n_points"] = _as_int("sweep", "n_points", raw["n_points"])
    return SweepOptions(**kwargs)


def _build_boundary(raw: dict) -> BoundaryOptions:
    known = ("plane", "region", "step", "edge_points",
             "march_dx_factor", "polish_dx_factor", "field_tol")
    _reject_unknown("boundary", raw, known)
    kwargs = {}
    if "plane" in raw:
        plane = _as_str_tuple("boundary", "plane", raw["plane"])
        if len(plane) != 2:
            raise ValidationError(f"boundary.plane must name two parameters, got {list(plane)}")
        kwargs["plane"] = plane
    if "region" in raw:
        if not isinstance(raw["region"], (list, tuple)) or len(raw["region"]) != 2:
            raise ValidationError(
                f"boundary.region must be a pair of ranges, got {raw['region']!r}"
            )
        kwargs["region"] = tuple(
            _as_pair("boundary", "region", axis) for axis in raw["region"]
        )
    for key in ("step", "march_dx_factor", "polish_dx_factor", "field_tol"):
        if key in raw:
            kwargs[key] = _as_float("boundary", key, raw[key])
    if "edge_points" in raw:
        kwargs["edge_points"] = _as_int("boundary", "edge_points", raw["edge_points"])
    return BoundaryOptions(**kwargs)


def _build_simulate(raw: dict) -> SimulateOptions:
    known = ("Ly", "nx", "ny", "x_span", "dt", "t_end",
             "snapshot_interval", "noise_amplitude")
    _reject_unknown("simulate", raw, known)
    kwargs = {}
    for key in ("Ly", "t_end", "snapshot_interval", "noise_amplitude"):
        if key in raw:
            kwargs[key] = _as_float("simulate", key, raw[key])
    for key in ("nx", "ny"):
        if key in raw:
            kwargs[key] = _as_int("simulate", key, raw[key])
    if raw.get("x_span") is not None:
        kwargs["x_span"] = _as_pair("simulate", "x_span", raw["x_span"])
    if raw.get("dt") is not None:
        kwargs["dt"] = _as_float("simulate", "dt", raw["dt"])
    return SimulateOptions(**kwargs)


def parse_config_data(data) -> RunConfig:
    """Build a validated RunConfig from an already-decoded JSON object."""
    if not isinstance(data, dict):
        raise ValidationError(
            f"configuration root must be an object, got {type(data).__name__}"
        )
    data = dict(data)
    raw_params = data.pop("params", None)
    if raw_params is None:
        raise ValidationError("missing required section 'params'")
    kwargs = {}
    if data.get("output_dir") is not None:
        kwargs["output_dir"] = _as_str("top level", "output_dir", data["output_dir"])
    data.pop("output_dir", None)
    if "rng_seed" in data:
        kwargs["rng_seed"] = _as_int("top level", "rng_seed", data.pop("rng_seed"))
    config = RunConfig(
        params=_build_params(raw_params),
        tw=_build_tw(_take_section(data, "tw")),
        spectrum=_build_spectrum(_take_section(data, "spectrum")),
        lambda2=_build_lambda2(_take_section(data, "lambda2")),
        sweep=_build_sweep(_take_section(data, "sweep")),
        boundary=_build_boundary(_take_section(data, "boundary")),
        simulate=_build_simulate(_take_section(data, "simulate")),
        **kwargs,
    )
    _reject_unknown(
        "top level", data,
        ("params", "tw", "spectrum", "lambda2", "sweep", "boundary", "simulate"),
    )
    return config


def parse_config(path: str | Path) -> RunConfig:
    """Read and validate a JSON configuration file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read configuration file {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path} is not valid JSON: {exc}") from exc
    return parse_config_data(data)


def serialize(config: RunConfig) -> dict:
    """JSON-ready dict of the full configuration.

    Round-trips: parse_config_data(serialize(config)) == config, also
    after a pass through json.dumps/loads (tuples become lists).
    """
    return asdict(config)
