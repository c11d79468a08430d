"""Run orchestration: single-member integration loops, ensemble dispatch,
checkpoint/resume, and the output tree.

Members are independent: each one draws its Wiener increments from a
counter-based stream keyed by (ensemble seed, member index, step), so the
sequential loop here could be replaced by any worker pool without changing a
single byte of the results. Resume is bit-exact because the loop is indexed
by absolute step number and carries no hidden state.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, parse_config
from .diagnostics import DiagnosticsRecord, collect_record
from .dynamics import (
    MHDState,
    ModelSpec,
    VorticityState,
    get_model,
    make_drift,
    make_ito_correction,
    make_noise_op,
)
from .em_fields import EMState
from .errors import NumericalError
from .grid import GridSpec, VectorField
from .integrators import check_finite, euler_maruyama_step, heun_stratonovich_step, rk4_step
from .noise import WienerDriver
from .outputs import (
    read_checkpoint,
    write_checkpoint,
    write_ensemble_summary,
    write_manifest,
    write_snapshot,
)
from .presets import build_initial_state


@dataclass
class MemberResult:
    member: int
    records: list[DiagnosticsRecord]
    final_arrays: tuple[np.ndarray, ...]
    csv_text: str
    files: list[str]


@dataclass
class EnsembleResult:
    config: RunConfig
    members: list[MemberResult]
    output_dir: Path | None


def state_to_arrays(state) -> tuple[np.ndarray, ...]:
    if isinstance(state, EMState):
        return (state.D.values, state.B.values)
    if isinstance(state, MHDState):
        return (state.P.values, state.B.values)
    if isinstance(state, VorticityState):
        return (state.w.values,)
    raise TypeError(type(state))


def arrays_to_state(model: ModelSpec, grid: GridSpec, arrs: tuple[np.ndarray, ...]):
    if model.kind == "em":
        return EMState(VectorField(grid, arrs[0]), VectorField(grid, arrs[1]))
    if model.kind == "mhd":
        return MHDState(VectorField(grid, arrs[0]), VectorField(grid, arrs[1]))
    return VorticityState(VectorField(grid, arrs[0]))


def _field_names(model: ModelSpec) -> tuple[str, ...]:
    return {"em": ("D", "B"), "mhd": ("P", "B"), "vorticity": ("w",)}[model.kind]


def initial_arrays(config: RunConfig) -> tuple[np.ndarray, ...]:
    model = get_model(config.model)
    ic = config.initial
    state = build_initial_state(
        model.kind,
        config.grid,
        ic.preset,
        ic.seed,
        ic.amplitude,
        ic.kmax,
        ic.k,
        ic.momentum_amplitude,
    )
    return state_to_arrays(state)


def _check_cfl(config: RunConfig, model: ModelSpec, arrs) -> None:
    grid = config.grid
    if model.kind == "vorticity":
        from .dynamics import _curl_inv_arrays

        u = _curl_inv_arrays(grid, arrs[0])
        speed = float(np.sqrt(np.max(np.sum(u * u, axis=0))))
    else:
        speed = 1.0  # wave speed bounds the material velocity for these systems
    courant = speed * config.integrator.dt / grid.min_spacing
    if courant > config.integrator.cfl_guard:
        raise NumericalError(
            f"CFL guard breached: speed*dt/dx = {courant:.3f} > {config.integrator.cfl_guard}"
        )


def run_member(
    config: RunConfig,
    member: int,
    out_dir: Path | None = None,
    start_step: int = 0,
    start_arrays: tuple[np.ndarray, ...] | None = None,
    csv_prefix: str | None = None,
) -> MemberResult:
    """Integrate one ensemble member from start_step to the end of the run."""
    grid = config.grid
    model = get_model(config.model)
    noise = config.build_noise()
    drift = make_drift(model, grid, noise if model.expectation else None)
    scheme = config.integrator.scheme
    dt = config.integrator.dt
    n_steps = config.integrator.n_steps

    noise_op = None
    if model.calculus is not None:
        noise_op = make_noise_op(model, grid, noise)
    if model.calculus == "ito":
        correction = make_ito_correction(model, grid, noise)

        def ito_drift(arrs):
            f = drift(arrs)
            c = correction(arrs)
            return tuple(a + b for a, b in zip(f, c))

    else:
        ito_drift = drift

    driver = WienerDriver(config.ensemble.seed, member, noise.n_modes)
    arrs = tuple(a.copy() for a in (start_arrays or initial_arrays(config)))
    records: list[DiagnosticsRecord] = []
    if csv_prefix is not None:
        csv_lines = csv_prefix.rstrip("\n").split("\n")
    else:
        csv_lines = [",".join(DiagnosticsRecord.CSV_COLUMNS)]
    files: list[str] = []
    member_dir = None
    if out_dir is not None:
        member_dir = Path(out_dir) / f"member_{member:04d}"
        member_dir.mkdir(parents=True, exist_ok=True)

    def sample(step: int) -> None:
        state = arrays_to_state(model, grid, arrs)
        rec = collect_record(state, config.model, time=step * dt)
        records.append(rec)
        csv_lines.append(",".join(rec.csv_row()))

    def snapshot(step: int) -> None:
        if member_dir is None:
            return
        for name, vals in zip(_field_names(model), arrs):
            paths = write_snapshot(
                member_dir,
                f"step_{step:06d}_{name}",
                vals,
                grid,
                time=step * dt,
                step=step,
                seed=config.ensemble.seed,
            )
            files.extend(str(p.relative_to(out_dir)) for p in paths)

    def checkpoint(step: int) -> None:
        if member_dir is None:
            return
        path = member_dir / f"checkpoint_{step:06d}.npz"
        write_checkpoint(
            path,
            config.canonical_json(),
            member,
            step,
            step * dt,
            arrs,
            "\n".join(csv_lines) + "\n",
        )
        files.append(str(path.relative_to(out_dir)))

    diag_every = config.output.diagnostics_interval
    snap_every = config.output.snapshot_interval
    ckpt_every = config.output.checkpoint_interval

    try:
        _check_cfl(config, model, arrs)
        if start_step == 0:
            sample(0)
            if snap_every:
                snapshot(0)
        for step in range(start_step, n_steps):
            if model.calculus is None:
                arrs = rk4_step(arrs, drift, dt)
            else:
                dW = driver.increments(step, dt)
                if scheme == "heun":
                    arrs = heun_stratonovich_step(arrs, drift, noise_op, dt, dW)
                elif scheme == "euler-maruyama":
                    arrs = euler_maruyama_step(arrs, ito_drift, noise_op, dt, dW)
                else:  # deterministic rk4 on a transport model without modes
                    arrs = rk4_step(arrs, drift, dt)
            done = step + 1
            check_finite(arrs, context=f"at step {done}")
            if done % diag_every == 0 or done == n_steps:
                sample(done)
                if model.kind == "vorticity":
                    _check_cfl(config, model, arrs)
            if snap_every and (done % snap_every == 0 or done == n_steps):
                snapshot(done)
            if ckpt_every and done % ckpt_every == 0:
                checkpoint(done)
    except NumericalError as exc:
        raise NumericalError(f"member {member}: {exc}") from exc

    if member_dir is not None and not snap_every:
        snapshot(n_steps)  # final state is always preserved

    csv_text = "\n".join(csv_lines) + "\n"
    if member_dir is not None:
        csv_path = member_dir / "diagnostics.csv"
        csv_path.write_text(csv_text)
        files.append(str(csv_path.relative_to(out_dir)))

    return MemberResult(member, records, arrs, csv_text, files)


def _summary_stats(members: list[MemberResult]) -> tuple[np.ndarray, dict]:
    times = np.array([r.time for r in members[0].records])
    stats: dict[str, dict[str, list[float]]] = {}
    scalar_fields = ("energy", "momentum_x", "momentum_y", "momentum_z")

    def value(rec: DiagnosticsRecord, name: str) -> float:
        if name == "energy":
            return rec.energy
        return rec.momentum[{"momentum_x": 0, "momentum_y": 1, "momentum_z": 2}[name]]

    m = len(members)
    for name in scalar_fields:
        series = np.array([[value(r, name) for r in mem.records] for mem in members])
        mean = series.mean(axis=0)
        stderr = (
            series.std(axis=0, ddof=1) / np.sqrt(m) if m > 1 else np.zeros_like(mean)
        )
        stats[name] = {
            "mean": [float(v) for v in mean],
            "stderr": [float(v) for v in stderr],
        }
    return times, stats


def run_ensemble(config: RunConfig, output_root: str | Path | None = None) -> EnsembleResult:
    """Integrate all members; write snapshots, diagnostics, summary and the
    manifest when an output directory is configured. Bit-reproducible for a
    fixed config."""
    out_dir: Path | None = None
    if config.output.directory is not None:
        root = Path(output_root) if output_root is not None else Path(".")
        out_dir = root / config.output.directory
        out_dir.mkdir(parents=True, exist_ok=True)

    members = [
        run_member(config, m, out_dir) for m in range(config.ensemble.members)
    ]

    if out_dir is not None:
        times, stats = _summary_stats(members)
        summary = write_ensemble_summary(out_dir, times, stats)
        files = [str(summary.relative_to(out_dir))]
        for mem in members:
            files.extend(mem.files)
        seeds = [
            {"member": m.member, "base_seed": config.ensemble.seed, "stream": [config.ensemble.seed, m.member]}
            for m in members
        ]
        write_manifest(
            out_dir, config.to_dict(), config.sha256(), __version__, seeds, files
        )
    return EnsembleResult(config, members, out_dir)


def resume_member(checkpoint_path: str | Path, output_root: str | Path | None = None) -> MemberResult:
    """Continue a checkpointed member to the end of its configured run.

    The continuation takes the identical code path as the uninterrupted run
    (absolute step indexing, counter-based noise), so the final state and
    the diagnostics CSV are bit-identical to a run that never stopped.
    """
    ck = read_checkpoint(checkpoint_path)
    config = parse_config(json.loads(ck.config_json))
    out_dir: Path | None = None
    if config.output.directory is not None:
        root = Path(output_root) if output_root is not None else Path(".")
        out_dir = root / config.output.directory
    return run_member(
        config,
        ck.member,
        out_dir,
        start_step=ck.step,
        start_arrays=ck.state_arrays,
        csv_prefix=ck.csv_text,
    )
