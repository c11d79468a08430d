"""Run configuration: a versioned, human-writable JSON schema with strict
validation (unknown keys are errors) and deterministic serialization.

The canonical dict form produced by to_dict() contains every field with
defaults applied; load(to_dict()) round-trips to an equal config, and its
sha256 identifies the run in manifests and checkpoints.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .dynamics import get_model
from .errors import ConfigError
from .grid import GridSpec, TWO_PI, VectorField
from .integrators import IntegratorConfig
from .noise import NoiseModel, make_constant_mode, make_divfree_mode
from .presets import PRESET_MODELS

SCHEMA_VERSION = 1

_DEFAULT_SCHEME = {
    "bi": "rk4",
    "maxwell": "rk4",
    "mhd": "rk4",
    "maxwell-expectation": "rk4",
    "bi-stratonovich": "heun",
    "maxwell-stratonovich": "heun",
    "mhd-stratonovich": "heun",
    "euler-vorticity": "rk4",  # heun once noise modes are configured
    "bi-ito": "euler-maruyama",
    "maxwell-ito": "euler-maruyama",
}

_ALLOWED_SCHEMES = {
    "bi": ("rk4",),
    "maxwell": ("rk4",),
    "mhd": ("rk4",),
    "maxwell-expectation": ("rk4",),
    "bi-stratonovich": ("heun",),
    "maxwell-stratonovich": ("heun",),
    "mhd-stratonovich": ("heun",),
    "euler-vorticity": ("rk4", "heun"),
    "bi-ito": ("euler-maruyama",),
    "maxwell-ito": ("euler-maruyama",),
}

def _require_keys(section: str, data: dict, allowed: set[str], required: set[str] = frozenset()):
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"{section}: unknown key(s) {sorted(unknown)}")
    missing = required - set(data)
    if missing:
        raise ConfigError(f"{section}: missing required key(s) {sorted(missing)}")


@dataclass(frozen=True)
class InitialConfig:
    preset: str
    seed: int = 0
    amplitude: float = 0.1
    kmax: int = 2
    k: int = 1
    momentum_amplitude: float = 0.3

    def to_dict(self) -> dict:
        return {
            "preset": self.preset,
            "seed": self.seed,
            "amplitude": self.amplitude,
            "kmax": self.kmax,
            "k": self.k,
            "momentum_amplitude": self.momentum_amplitude,
        }


@dataclass(frozen=True)
class NoiseModeConfig:
    type: str  # "constant" | "harmonic"
    a: tuple[float, float, float]
    amplitude: float = 1.0
    k: tuple[int, int, int] = (0, 0, 0)
    phase: float = 0.0

    def to_dict(self) -> dict:
        d = {"type": self.type, "a": list(self.a), "amplitude": self.amplitude}
        if self.type == "harmonic":
            d["k"] = list(self.k)
            d["phase"] = self.phase
        return d


@dataclass(frozen=True)
class EnsembleConfig:
    members: int = 1
    seed: int = 0

    def to_dict(self) -> dict:
        return {"members": self.members, "seed": self.seed}


@dataclass(frozen=True)
class OutputConfig:
    directory: str | None = None
    snapshot_interval: int = 0  # steps; 0 disables (final state still written)
    diagnostics_interval: int = 10
    checkpoint_interval: int = 0  # steps; 0 disables

    def to_dict(self) -> dict:
        return {
            "directory": self.directory,
            "snapshot_interval": self.snapshot_interval,
            "diagnostics_interval": self.diagnostics_interval,
            "checkpoint_interval": self.checkpoint_interval,
        }


@dataclass(frozen=True)
class RunConfig:
    model: str
    grid: GridSpec
    initial: InitialConfig
    noise_modes: tuple[NoiseModeConfig, ...]
    integrator: IntegratorConfig
    ensemble: EnsembleConfig = field(default_factory=EnsembleConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "model": self.model,
            "grid": {
                "nx": self.grid.nx,
                "ny": self.grid.ny,
                "nz": self.grid.nz,
                "Lx": self.grid.Lx,
                "Ly": self.grid.Ly,
                "Lz": self.grid.Lz,
                "dealias": self.grid.dealias,
            },
            "initial": self.initial.to_dict(),
            "noise": {"modes": [m.to_dict() for m in self.noise_modes]},
            "integrator": {
                "scheme": self.integrator.scheme,
                "dt": self.integrator.dt,
                "t_end": self.integrator.t_end,
                "cfl_guard": self.integrator.cfl_guard,
            },
            "ensemble": self.ensemble.to_dict(),
            "output": self.output.to_dict(),
        }

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def sha256(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()

    def build_noise(self, grid: GridSpec | None = None) -> NoiseModel:
        g = grid if grid is not None else self.grid
        modes: list[VectorField] = []
        for i, m in enumerate(self.noise_modes):
            try:
                if m.type == "constant":
                    modes.append(make_constant_mode(g, m.a, m.amplitude))
                else:
                    modes.append(make_divfree_mode(g, m.k, m.a, m.phase, m.amplitude))
            except Exception as exc:
                raise ConfigError(f"noise.modes[{i}]: {exc}") from exc
        return NoiseModel.from_modes(g, modes)


def _parse_grid(data: dict) -> GridSpec:
    _require_keys(
        "grid", data, {"nx", "ny", "nz", "Lx", "Ly", "Lz", "dealias"}, {"nx", "ny", "nz"}
    )
    try:
        return GridSpec(
            nx=int(data["nx"]),
            ny=int(data["ny"]),
            nz=int(data["nz"]),
            Lx=float(data.get("Lx", TWO_PI)),
            Ly=float(data.get("Ly", TWO_PI)),
            Lz=float(data.get("Lz", TWO_PI)),
            dealias=bool(data.get("dealias", True)),
        )
    except ValueError as exc:
        raise ConfigError(f"grid: {exc}") from exc


def _parse_initial(data: dict, model_kind: str) -> InitialConfig:
    _require_keys(
        "initial",
        data,
        {"preset", "seed", "amplitude", "kmax", "k", "momentum_amplitude"},
    )
    default_preset = "helical-orthogonal" if model_kind == "mhd" else "random-band-limited"
    preset = data.get("preset", default_preset)
    if preset not in PRESET_MODELS:
        raise ConfigError(
            f"initial.preset: unknown preset {preset!r}; known: {sorted(PRESET_MODELS)}"
        )
    if model_kind not in PRESET_MODELS[preset]:
        raise ConfigError(f"initial.preset: {preset!r} does not support {model_kind} models")
    return InitialConfig(
        preset=preset,
        seed=int(data.get("seed", 0)),
        amplitude=float(data.get("amplitude", 0.1)),
        kmax=int(data.get("kmax", 2)),
        k=int(data.get("k", 1)),
        momentum_amplitude=float(data.get("momentum_amplitude", 0.3)),
    )


def _parse_noise(data: dict) -> tuple[NoiseModeConfig, ...]:
    _require_keys("noise", data, {"modes"})
    modes = []
    for i, m in enumerate(data.get("modes", [])):
        _require_keys(
            f"noise.modes[{i}]", m, {"type", "a", "k", "phase", "amplitude"}, {"type", "a"}
        )
        mtype = m["type"]
        if mtype not in ("constant", "harmonic"):
            raise ConfigError(f"noise.modes[{i}].type: {mtype!r} not in (constant, harmonic)")
        a = tuple(float(x) for x in m["a"])
        if len(a) != 3:
            raise ConfigError(f"noise.modes[{i}].a: need 3 components")
        if mtype == "harmonic":
            if "k" not in m:
                raise ConfigError(f"noise.modes[{i}]: harmonic modes need a wavevector k")
            k = tuple(int(x) for x in m["k"])
            if len(k) != 3:
                raise ConfigError(f"noise.modes[{i}].k: need 3 components")
        else:
            k = (0, 0, 0)
        modes.append(
            NoiseModeConfig(
                type=mtype,
                a=a,
                amplitude=float(m.get("amplitude", 1.0)),
                k=k,
                phase=float(m.get("phase", 0.0)),
            )
        )
    return tuple(modes)


def _parse_integrator(data: dict, model: str, grid: GridSpec, has_noise: bool) -> IntegratorConfig:
    _require_keys("integrator", data, {"scheme", "dt", "t_end", "cfl_guard"})
    cfl_guard = float(data.get("cfl_guard", 0.5))
    default_scheme = _DEFAULT_SCHEME[model]
    if model == "euler-vorticity" and has_noise:
        default_scheme = "heun"
    scheme = data.get("scheme", default_scheme)
    if scheme not in _ALLOWED_SCHEMES[model]:
        raise ConfigError(
            f"integrator.scheme: {scheme!r} is not valid for model {model!r} "
            f"(allowed: {_ALLOWED_SCHEMES[model]})"
        )
    if model == "euler-vorticity" and has_noise and scheme != "heun":
        raise ConfigError("integrator.scheme: noisy euler-vorticity runs need heun")
    dt = data.get("dt")
    if dt is None:
        dt = cfl_guard * grid.min_spacing  # unit characteristic speed
    t_end = float(data.get("t_end", 1.0))
    try:
        return IntegratorConfig(scheme=scheme, dt=float(dt), t_end=t_end, cfl_guard=cfl_guard)
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(f"integrator: {exc}") from exc


def parse_config(data: dict) -> RunConfig:
    """Validate a configuration dict and apply defaults."""
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    _require_keys(
        "config",
        data,
        {"schema", "model", "grid", "initial", "noise", "integrator", "ensemble", "output"},
        {"model", "grid"},
    )
    schema = data.get("schema", SCHEMA_VERSION)
    if schema != SCHEMA_VERSION:
        raise ConfigError(f"schema: version {schema} unsupported (expected {SCHEMA_VERSION})")
    model_name = data["model"]
    try:
        model = get_model(model_name)
    except Exception as exc:
        raise ConfigError(f"model: {exc}") from exc
    grid = _parse_grid(data["grid"])
    initial = _parse_initial(data.get("initial", {}), model.kind)
    noise_modes = _parse_noise(data.get("noise", {"modes": []}))
    if noise_modes and model.calculus is None and not model.expectation:
        raise ConfigError(
            f"noise: model {model_name!r} is deterministic; use its stochastic variant"
        )
    integrator = _parse_integrator(
        data.get("integrator", {}), model_name, grid, bool(noise_modes)
    )

    ens_data = data.get("ensemble", {})
    _require_keys("ensemble", ens_data, {"members", "seed"})
    ensemble = EnsembleConfig(
        members=int(ens_data.get("members", 1)), seed=int(ens_data.get("seed", 0))
    )
    if ensemble.members < 1:
        raise ConfigError("ensemble.members: must be >= 1")

    out_data = data.get("output", {})
    _require_keys(
        "output",
        out_data,
        {"directory", "snapshot_interval", "diagnostics_interval", "checkpoint_interval"},
    )
    output = OutputConfig(
        directory=out_data.get("directory"),
        snapshot_interval=int(out_data.get("snapshot_interval", 0)),
        diagnostics_interval=int(out_data.get("diagnostics_interval", 10)),
        checkpoint_interval=int(out_data.get("checkpoint_interval", 0)),
    )
    if output.diagnostics_interval < 1:
        raise ConfigError("output.diagnostics_interval: must be >= 1")

    config = RunConfig(
        model=model_name,
        grid=grid,
        initial=initial,
        noise_modes=noise_modes,
        integrator=integrator,
        ensemble=ensemble,
        output=output,
    )
    config.build_noise()  # surfaces divergence-free violations at load time
    return config


def load_config(path: str | Path) -> RunConfig:
    """Read and validate a JSON config file."""
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    return parse_config(data)
