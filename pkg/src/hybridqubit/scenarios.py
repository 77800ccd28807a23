"""Configuration-driven sweeps producing CSV tables.

A scenario is a TOML document::

    name = "si-fig6a-oam-offcenter"
    protocol = "mub_fidelity"     # bb84 | mub_fidelity | chsh | tomography | coeffs
    encoding = "oam"              # hybrid | polarization | oam
    theta = 0.0                   # receiver rotation in degrees; a list mixes angles

    [basis]                       # optional, defaults shown
    m_max = 5
    p_max = 8
    w0 = 1.0
    k = 7.9e3

    [grid]                        # optional quadrature resolution
    n_radial = 200
    n_azimuthal = 256
    r_max = 8.0

    [sweep]
    name = "radius"
    start = 2.0
    stop = 0.2
    step = -0.1                   # or: values = [...]

    [[channel]]
    op = "aperture"
    radius = "$radius"            # "$<sweep name>" is replaced by the sweep value
    offset = [0.05, 0.0]

Angles (including the Gouy phase ``zeta``) are in degrees; lengths are in
units of the beam waist w0; ``alpha`` is the tilt wavevector times w0.
Sweeping ``theta`` rotates the receiver instead of a channel parameter.
"""
from __future__ import annotations

import csv
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Any, Callable

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .channel import (
    CircularAperture,
    Displacement,
    DisplacementTilt,
    Efficiency,
    EllipticalScaling,
    KnifeEdge,
    Mask,
    ModeCoupling,
    Propagation,
    Rotation,
    Tilt,
    check_invariance,
    combined_coeff_from_alpha,
    compose,
    displacement_coeff_analytic,
    identity_coupling,
    mask_coupling,
    predicted_mub_fidelity,
    projected_amplitudes,
    qplate_apply,
    random_phase_screen,
    tilt_coeff_from_alpha,
)
from .modes import BasisSpec, make_basis
from .numerics import ConvergenceError, PolarGrid
from .protocols import (
    ENCODINGS,
    PHI_MINUS,
    apply_local,
    bb84_run,
    bell_state_logical,
    chsh_S,
    concurrence,
    mub_average_fidelity,
    state_results,
    tomography_probs,
    tomography_reconstruct,
)
from .protocols.transfer import prepare

PROTOCOLS = ("bb84", "mub_fidelity", "chsh", "tomography", "coeffs")


class ConfigError(ValueError):
    """Invalid scenario configuration; the message starts with the offending field path."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


# --------------------------------------------------------------------------
# channel operation registry
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class QPlateStage:
    """A q-plate inserted in the channel (allowed in runs, rejected by the classifier)."""

    def __call__(self, s):
        return qplate_apply(s)


def _tilt_alpha(p: dict, k: float, w0: float) -> float:
    if ("alpha" in p) == ("gamma" in p):
        raise ValueError("give exactly one of alpha (times w0) or gamma (degrees)")
    if "alpha" in p:
        return float(p["alpha"]) / w0
    return k * math.sin(math.radians(float(p["gamma"])))


def _knife(p: dict, w0: float) -> KnifeEdge:
    orient = math.radians(float(p.get("orientation", 0.0)))
    if ("coverage" in p) == ("edge" in p):
        raise ValueError("give exactly one of coverage or edge")
    if "coverage" in p:
        return KnifeEdge.from_coverage(float(p["coverage"]), orient, w0)
    return KnifeEdge(float(p["edge"]) * w0, orient)


def _aperture(p: dict, w0: float) -> CircularAperture:
    radius = float(p["radius"])
    if not radius > 0:
        raise ValueError("radius must be positive")
    ox, oy = (float(v) for v in p.get("offset", (0.0, 0.0)))
    return CircularAperture(radius * w0, (ox * w0, oy * w0))


def _nonneg(x, name):
    x = float(x)
    if x < 0:
        raise ValueError(f"{name} must be >= 0")
    return x


@dataclass(frozen=True)
class OpSpec:
    build: Callable[[dict, BasisSpec], Any]
    allowed: frozenset
    required: frozenset = frozenset()


def _op(build, allowed=(), required=()):
    return OpSpec(build, frozenset(allowed) | frozenset(required), frozenset(required))


REGISTRY: dict[str, OpSpec] = {
    "rotate": _op(lambda p, b: Rotation(math.radians(float(p["angle"]))), required=["angle"]),
    "propagate": _op(lambda p, b: Propagation(math.radians(float(p["zeta"]))), required=["zeta"]),
    "displacement": _op(
        lambda p, b: Displacement(_nonneg(p["delta"], "delta") * b.w0, math.radians(float(p.get("angle", 0.0)))),
        allowed=["angle"], required=["delta"]),
    "tilt": _op(
        lambda p, b: Tilt(_tilt_alpha(p, b.k, b.w0), math.radians(float(p.get("eta", 0.0)))),
        allowed=["alpha", "gamma", "eta"]),
    "combined": _op(
        lambda p, b: DisplacementTilt(_nonneg(p["delta"], "delta") * b.w0, math.radians(float(p.get("angle", 0.0))),
                                      _tilt_alpha(p, b.k, b.w0), math.radians(float(p.get("eta", 0.0)))),
        allowed=["angle", "alpha", "gamma", "eta"], required=["delta"]),
    "aperture": _op(lambda p, b: _aperture(p, b.w0), allowed=["offset"], required=["radius"]),
    "knife": _op(lambda p, b: _knife(p, b.w0), allowed=["coverage", "edge", "orientation"]),
    "phase_screen": _op(
        lambda p, b: random_phase_screen(int(p["seed"]), float(p.get("strength", 0.5)), int(p.get("n_modes", 8)), b.w0),
        allowed=["strength", "n_modes"], required=["seed"]),
    "elliptical": _op(
        lambda p, b: EllipticalScaling(float(p["axis_ratio"]), math.radians(float(p.get("orientation", 0.0)))),
        allowed=["orientation"], required=["axis_ratio"]),
    "efficiency_scalar": _op(lambda p, b: Efficiency(float(p["eta"])), required=["eta"]),
    "qplate": _op(lambda p, b: QPlateStage()),
}


# --------------------------------------------------------------------------
# configuration
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class StageSpec:
    op: str
    params: dict = field(hash=False, compare=True)


@dataclass(frozen=True)
class Sweep:
    name: str
    values: tuple[float, ...]


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    protocol: str
    encoding: str
    sweep: Sweep
    channel: tuple[StageSpec, ...] = ()
    basis: BasisSpec = field(default_factory=make_basis)
    grid: PolarGrid = PolarGrid()
    theta: tuple[float, ...] = (0.0,)
    output: str | None = None

    def with_grid_scale(self, factor: float) -> "ScenarioConfig":
        if not factor > 0:
            raise ConfigError("grid-scale", "must be positive")
        return replace(self, grid=self.grid.scaled(factor))


def _sweep_values(d: dict) -> tuple[float, ...]:
    if "values" in d:
        vals = d["values"]
        if not isinstance(vals, list) or not vals:
            raise ConfigError("sweep.values", "must be a nonempty list")
        return tuple(float(v) for v in vals)
    try:
        start, stop, step = float(d["start"]), float(d["stop"]), float(d["step"])
    except KeyError as exc:
        raise ConfigError(f"sweep.{exc.args[0]}", "missing (give values or start/stop/step)") from None
    if step == 0 or (stop - start) * step < 0:
        raise ConfigError("sweep.step", "range is empty or step has the wrong sign")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    # round to suppress accumulated float noise, e.g. 0.30000000000000004
    return tuple(round(start + i * step, 12) for i in range(n))


def _substitute(params: dict, var: str, value: float) -> dict:
    key = "$" + var
    out = {}
    for k, v in params.items():
        if isinstance(v, str) and v.startswith("$"):
            if v != key:
                raise ConfigError(k, f"unknown placeholder {v!r} (sweep variable is {var!r})")
            v = value
        elif isinstance(v, list):
            v = [value if x == key else x for x in v]
        out[k] = v
    return out


def build_stage(spec: StageSpec, basis: BasisSpec, path: str = "channel"):
    try:
        entry = REGISTRY[spec.op]
    except KeyError:
        raise ConfigError(f"{path}.op", f"unknown operation {spec.op!r}; known: {sorted(REGISTRY)}") from None
    extra = set(spec.params) - entry.allowed
    if extra:
        raise ConfigError(f"{path}", f"unexpected parameter(s) {sorted(extra)} for {spec.op!r}")
    missing = entry.required - set(spec.params)
    if missing:
        raise ConfigError(f"{path}", f"missing parameter(s) {sorted(missing)} for {spec.op!r}")
    try:
        return entry.build(spec.params, basis)
    except (TypeError, ValueError) as exc:
        raise ConfigError(path, str(exc)) from None


def _parse_channel(items, path: str = "channel") -> tuple[StageSpec, ...]:
    if not isinstance(items, list):
        raise ConfigError(path, "must be an array of tables")
    out = []
    for i, item in enumerate(items):
        if not isinstance(item, dict) or "op" not in item:
            raise ConfigError(f"{path}[{i}]", "each stage needs an 'op' key")
        params = {k: v for k, v in item.items() if k != "op"}
        out.append(StageSpec(str(item["op"]), params))
    return tuple(out)


def _parse_basis(d: dict) -> BasisSpec:
    allowed = {"m_max", "p_max", "w0", "k"}
    extra = set(d) - allowed
    if extra:
        raise ConfigError("basis", f"unexpected key(s) {sorted(extra)}")
    try:
        return make_basis(**d)
    except (TypeError, ValueError) as exc:
        raise ConfigError("basis", str(exc)) from None


def _parse_grid(d: dict) -> PolarGrid:
    try:
        return PolarGrid(**d)
    except (TypeError, ValueError) as exc:
        raise ConfigError("grid", str(exc)) from None


def config_from_dict(d: dict) -> ScenarioConfig:
    known = {"name", "protocol", "encoding", "theta", "basis", "grid", "sweep", "channel", "output"}
    extra = set(d) - known
    if extra:
        raise ConfigError("<root>", f"unexpected key(s) {sorted(extra)}")
    protocol = d.get("protocol")
    if protocol not in PROTOCOLS:
        raise ConfigError("protocol", f"must be one of {PROTOCOLS}, got {protocol!r}")
    encoding = d.get("encoding", "hybrid")
    if encoding not in ENCODINGS:
        raise ConfigError("encoding", f"must be one of {ENCODINGS}, got {encoding!r}")
    if "sweep" not in d:
        raise ConfigError("sweep", "missing")
    sw = d["sweep"]
    if "name" not in sw:
        raise ConfigError("sweep.name", "missing")
    sweep = Sweep(str(sw["name"]), _sweep_values(sw))
    theta = d.get("theta", 0.0)
    theta = tuple(float(t) for t in (theta if isinstance(theta, list) else [theta]))
    if not theta:
        raise ConfigError("theta", "must not be empty")
    cfg = ScenarioConfig(
        name=str(d.get("name", "scenario")),
        protocol=protocol,
        encoding=encoding,
        sweep=sweep,
        channel=_parse_channel(d.get("channel", [])),
        basis=_parse_basis(d.get("basis", {})),
        grid=_parse_grid(d.get("grid", {})),
        theta=theta,
        output=d.get("output"),
    )
    # every stage must build at every sweep point before any heavy work starts
    for v in sweep.values:
        _stages_at(cfg, v)
    return cfg


def load_config(path) -> ScenarioConfig:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(str(path), f"invalid TOML: {exc}") from None
    return config_from_dict(data)


def preset_names() -> list[str]:
    root = resources.files("hybridqubit") / "presets"
    return sorted(p.name[:-5] for p in root.iterdir() if p.is_file() and p.name.endswith(".toml"))


def preset_path(name: str):
    p = resources.files("hybridqubit") / "presets" / f"{name}.toml"
    if not p.is_file():
        raise ConfigError("preset", f"unknown preset {name!r}; available: {preset_names()}")
    return p


def channel_library_path():
    """Bundled reference channels for the invariance classifier."""
    return resources.files("hybridqubit") / "presets" / "library" / "channel-library.toml"


def load_preset(name: str) -> ScenarioConfig:
    with preset_path(name).open("rb") as fh:
        return config_from_dict(tomllib.load(fh))


# --------------------------------------------------------------------------
# execution
# --------------------------------------------------------------------------

@lru_cache(maxsize=256)
def _coupling(mask: Mask, basis: BasisSpec, grid: PolarGrid) -> ModeCoupling:
    return mask_coupling(mask, basis, grid)


def _stages_at(cfg: ScenarioConfig, value: float) -> list:
    out = []
    for i, spec in enumerate(cfg.channel):
        params = _substitute(spec.params, cfg.sweep.name, value)
        out.append(build_stage(StageSpec(spec.op, params), cfg.basis, f"channel[{i}]"))
    return out


def materialize(stages, basis: BasisSpec, grid: PolarGrid) -> list:
    return [_coupling(s, basis, grid) if isinstance(s, Mask) else s for s in stages]


def _thetas(cfg: ScenarioConfig, value: float) -> np.ndarray:
    deg = (value,) if cfg.sweep.name == "theta" else cfg.theta
    return np.radians(np.asarray(deg, dtype=float))


def spatial_coupling(stages, basis: BasisSpec, grid: PolarGrid) -> ModeCoupling:
    """Compose a pipeline of spatial stages into one coupling tensor."""
    c = identity_coupling(basis)
    for i, s in enumerate(stages):
        if isinstance(s, (QPlateStage, Rotation)):
            raise ConfigError(f"channel[{i}]", f"{type(s).__name__} is not a spatial transmission stage")
        if isinstance(s, Mask):
            nxt = _coupling(s, basis, grid)
        elif isinstance(s, ModeCoupling):
            nxt = s
        elif isinstance(s, Propagation):
            order = 2 * np.arange(basis.n_p)[None, :] + np.abs(basis.m_values)[:, None] + 1
            diag = np.exp(-1j * order * s.zeta)
            nxt = ModeCoupling(basis, np.einsum("ab,ap,pq->abpq", np.eye(basis.n_m), diag, np.eye(basis.n_p)))
        elif isinstance(s, Efficiency):
            nxt = ModeCoupling(basis, math.sqrt(s.eta) * identity_coupling(basis).C)
        else:
            raise ConfigError(f"channel[{i}]", f"unsupported stage {s!r}")
        c = compose(c, nxt)
    return c


def _transmittivity(stages, encoding: str, basis: BasisSpec) -> float:
    """Fraction of the prepared beam's power passing the channel, averaged over |0>, |1>."""
    tot = 0.0
    for v in (np.array([1, 0]), np.array([0, 1])):
        s = prepare(v, encoding, basis)
        out = s
        for st in stages:
            out = st(out)
        tot += out.norm2 / s.norm2
    return tot / 2


def _invariance_dev(stages, basis, grid) -> float | None:
    try:
        return check_invariance(spatial_coupling(stages, basis, grid))[1]
    except ConfigError:
        return None


def _row_bb84(cfg, value, stages):
    rep = bb84_run(stages, _thetas(cfg, value), cfg.encoding, cfg.basis)
    f = rep.fidelities
    return {
        cfg.sweep.name: value, "f_0": f["0"], "f_1": f["1"], "f_plus": f["+"], "f_minus": f["-"],
        "qber_z": rep.qber_z, "qber_x": rep.qber_x, "avg_fidelity": rep.avg_fidelity,
        "key_fraction": rep.key_fraction, "secure": rep.secure,
        "survival": float(np.mean(list(rep.survivals.values()))),
    }


def _row_mub(cfg, value, stages):
    res = state_results(stages, _thetas(cfg, value), cfg.encoding, basis=cfg.basis)
    return {
        cfg.sweep.name: value,
        "fidelity": float(np.mean([r.fidelity for r in res.values()])),
        "survival": float(np.mean([r.survival for r in res.values()])),
        "transmittivity": _transmittivity(stages, cfg.encoding, cfg.basis),
        "max_dev": _invariance_dev(stages, cfg.basis, cfg.grid),
    }


def _row_chsh(cfg, value, stages):
    tp = bell_state_logical(cfg.basis, cfg.encoding)
    rho, surv = apply_local(tp, stages, (), _thetas(cfg, value), 0.0)
    return {cfg.sweep.name: value, "S": chsh_S(rho), "concurrence": concurrence(rho), "survival": surv}


def _row_tomography(cfg, value, stages):
    tp = bell_state_logical(cfg.basis, cfg.encoding)
    rho, surv = apply_local(tp, stages, (), _thetas(cfg, value), 0.0)
    rec = tomography_reconstruct(tomography_probs(rho))
    row = {cfg.sweep.name: value,
           "fidelity_phi_minus": float((PHI_MINUS.conj() @ rec @ PHI_MINUS).real),
           "concurrence": concurrence(rec), "S": chsh_S(rec), "survival": surv}
    for i in range(4):
        for j in range(4):
            row[f"re_{i}{j}"] = rec[i, j].real
            row[f"im_{i}{j}"] = rec[i, j].imag
    return row


def _analytic_pair(stages, basis) -> tuple[complex, complex] | None:
    """Closed-form C[-1,-1;0,0], C[+1,+1;0,0] when the pipeline is a single displacement/tilt."""
    if len(stages) != 1:
        return None
    s, w0 = stages[0], basis.w0
    if isinstance(s, Displacement):
        v = displacement_coeff_analytic(s.delta, 1, w0)
        return v, v
    if isinstance(s, Tilt):
        v = tilt_coeff_from_alpha(s.alpha, w0)
        return v, v
    if isinstance(s, DisplacementTilt):
        return tuple(combined_coeff_from_alpha(s.delta, s.angle, s.alpha, s.eta, m, w0) for m in (-1, 1))
    return None


def _row_coeffs(cfg, value, stages):
    c = spatial_coupling(stages, cfg.basis, cfg.grid)
    holds, dev = check_invariance(c)
    cm, cp = c.block(-1, -1)[0, 0], c.block(1, 1)[0, 0]
    an = _analytic_pair(stages, cfg.basis)
    row = {cfg.sweep.name: value, "c_minus_re": cm.real, "c_minus_im": cm.imag,
           "c_plus_re": cp.real, "c_plus_im": cp.imag, "max_dev": dev, "holds": holds,
           "analytic_minus_re": None, "analytic_minus_im": None,
           "analytic_plus_re": None, "analytic_plus_im": None}
    if an is not None:
        row.update(analytic_minus_re=complex(an[0]).real, analytic_minus_im=complex(an[0]).imag,
                   analytic_plus_re=complex(an[1]).real, analytic_plus_im=complex(an[1]).imag)
    return row


_ROW = {"bb84": _row_bb84, "mub_fidelity": _row_mub, "chsh": _row_chsh,
        "tomography": _row_tomography, "coeffs": _row_coeffs}


def _run_point(cfg: ScenarioConfig, value: float) -> dict:
    try:
        stages = materialize(_stages_at(cfg, value), cfg.basis, cfg.grid)
        return _ROW[cfg.protocol](cfg, value, stages)
    except ConvergenceError as exc:
        raise ConvergenceError(f"{cfg.sweep.name}={value}: {exc}", exc.estimates) from exc


def run_scenario(cfg: ScenarioConfig, threads: int = 1) -> list[dict]:
    """One row per sweep point, in sweep order whatever the worker count."""
    if threads <= 1:
        return [_run_point(cfg, v) for v in cfg.sweep.values]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda v: _run_point(cfg, v), cfg.sweep.values))


# --------------------------------------------------------------------------
# output
# --------------------------------------------------------------------------

def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.12g}"
    return str(v)


def write_rows(rows: list[dict], fh, columns=None) -> None:
    if columns is None:
        if not rows:
            raise ValueError("columns are required to write an empty table")
        columns = list(rows[0])
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([format_value(r.get(c)) for c in columns])


def emit_csv(rows: list[dict], path, columns=None) -> None:
    """Write rows as CSV (header row, 12 significant digits, LF line endings)."""
    path = Path(path)
    try:
        with path.open("w", newline="", encoding="utf-8") as fh:
            write_rows(rows, fh, columns)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


# --------------------------------------------------------------------------
# invariance classifier
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ClassifyReport:
    holds: bool
    max_dev: float
    predicted_fidelity: float
    direct_fidelity: float

    @property
    def agrees(self) -> bool:
        """Prediction and direct computation agree, and the verdict matches the fidelity."""
        close = abs(self.predicted_fidelity - self.direct_fidelity) <= 1e-9
        return close and (self.holds == (self.direct_fidelity >= 1 - 1e-8))


def classify_stages(stages, basis: BasisSpec, grid: PolarGrid = PolarGrid()) -> ClassifyReport:
    c = spatial_coupling(stages, basis, grid)
    holds, dev = check_invariance(c)
    predicted = predicted_mub_fidelity(*projected_amplitudes(c))
    direct = mub_average_fidelity([c], 0.0, "hybrid", basis)
    return ClassifyReport(holds, dev, predicted, direct)


def classify_channel(channel: list[dict], basis: BasisSpec | None = None,
                     grid: PolarGrid = PolarGrid()) -> ClassifyReport:
    """Classify a pipeline given as a list of ``{"op": ..., **params}`` tables."""
    basis = basis or make_basis()
    specs = _parse_channel(channel)
    stages = [build_stage(s, basis, f"channel[{i}]") for i, s in enumerate(specs)]
    return classify_stages(stages, basis, grid)


CLASSIFY_COLUMNS = ("name", "holds", "max_dev", "predicted_fidelity", "direct_fidelity", "agrees")


def classify_config(data: dict, grid_scale: float = 1.0) -> list[dict]:
    """Rows for a ``[library.<name>]`` collection of channels, or a single ``channel`` list."""
    basis = _parse_basis(data.get("basis", {}))
    grid = _parse_grid(data.get("grid", {})).scaled(grid_scale)
    if "library" in data:
        entries = data["library"]
        if not isinstance(entries, dict) or not entries:
            raise ConfigError("library", "must be a nonempty table of named channels")
        items = [(name, e.get("channel", []), f"library.{name}.channel") for name, e in entries.items()]
    else:
        items = [(str(data.get("name", "channel")), data.get("channel", []), "channel")]
    rows = []
    for name, channel, path in items:
        specs = _parse_channel(channel, path)
        stages = [build_stage(s, basis, f"{path}[{i}]") for i, s in enumerate(specs)]
        r = classify_stages(stages, basis, grid)
        rows.append({"name": name, "holds": r.holds, "max_dev": r.max_dev,
                     "predicted_fidelity": r.predicted_fidelity, "direct_fidelity": r.direct_fidelity,
                     "agrees": r.agrees})
    return rows


def coupling_from_config(data: dict, grid_scale: float = 1.0) -> ModeCoupling:
    """Composed coupling of a mask config (``basis``, ``grid``, ``channel``; no sweep)."""
    basis = _parse_basis(data.get("basis", {}))
    grid = _parse_grid(data.get("grid", {})).scaled(grid_scale)
    specs = _parse_channel(data.get("channel", []))
    stages = [build_stage(s, basis, f"channel[{i}]") for i, s in enumerate(specs)]
    return spatial_coupling(stages, basis, grid)
