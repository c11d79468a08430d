"""Named initial conditions.

Every preset returns fields already truncated to the grid's dealias band (so
products stay alias-free from the first step) and satisfying the structural
constraints of the model kind it supports.
"""

from __future__ import annotations

import numpy as np

from .dynamics import MHDState, VorticityState
from .em_fields import EMState
from .errors import ConfigError
from .grid import GridSpec, VectorField, _truncate, curl, project_divfree

PRESET_MODELS = {
    "plane-wave": ("em",),
    "taylor-green": ("vorticity",),
    "abc": ("vorticity",),
    "random-band-limited": ("em", "mhd", "vorticity"),
    "helical-orthogonal": ("mhd",),
}


def _preset_rng(seed: int, salt: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.Philox(key=[np.uint64(seed & 0xFFFFFFFFFFFFFFFF), np.uint64(2)],
                         counter=[0, 0, 0, np.uint64(salt)])
    )


def random_divfree_field(
    grid: GridSpec, seed: int, salt: int, kmax: int, amplitude: float,
    divfree: bool = True,
) -> VectorField:
    """Zero-mean random field with |k_i| <= kmax, scaled to a max pointwise
    norm of `amplitude`."""
    rng = _preset_rng(seed, salt)
    raw = rng.standard_normal((3, *grid.shape))
    spec = grid.rfft(raw)
    mx = np.abs(np.fft.fftfreq(grid.nx) * grid.nx) <= kmax
    my = np.abs(np.fft.fftfreq(grid.ny) * grid.ny) <= kmax
    mz = np.fft.rfftfreq(grid.nz) * grid.nz <= kmax
    spec *= mx[:, None, None] & my[None, :, None] & mz[None, None, :]
    spec[..., 0, 0, 0] = 0.0
    vals = grid.irfft(spec)
    field = VectorField(grid, vals)
    if divfree:
        field = project_divfree(field)
    scale = field.max_norm()
    if scale == 0.0:
        raise ConfigError("initial.kmax: no modes survive the band limit")
    return VectorField(grid, field.values * (amplitude / scale))


def plane_wave(grid: GridSpec, amplitude: float, k: int = 1) -> EMState:
    """Right-moving weak-field wave: D = (0, a cos kx, 0), B = (0, 0, a cos kx)."""
    if k == 0:
        raise ConfigError("initial.k: plane-wave mode index must be nonzero")
    X, _, _ = grid.meshgrid()
    zero = np.zeros_like(X)
    c = amplitude * np.cos(2.0 * np.pi * k * X / grid.Lx)
    return EMState(
        VectorField(grid, np.stack([zero, c, zero])),
        VectorField(grid, np.stack([zero, zero, c])),
    )


def taylor_green(grid: GridSpec, amplitude: float) -> VorticityState:
    """Vorticity of the classic cellular velocity field."""
    X, Y, Z = grid.meshgrid()
    u = amplitude * np.stack(
        [
            np.sin(X) * np.cos(Y) * np.cos(Z),
            -np.cos(X) * np.sin(Y) * np.cos(Z),
            np.zeros_like(X),
        ]
    )
    return VorticityState(curl(VectorField(grid, u)))


def abc_field(grid: GridSpec, amplitude: float) -> VectorField:
    """Equal-coefficient swirl field; a curl eigenfield with eigenvalue 1."""
    X, Y, Z = grid.meshgrid()
    return VectorField(
        grid,
        amplitude
        * np.stack(
            [np.sin(Z) + np.cos(Y), np.sin(X) + np.cos(Z), np.sin(Y) + np.cos(X)]
        ),
    )


def helical_orthogonal(
    grid: GridSpec,
    seed: int,
    amplitude: float,
    kmax: int,
    momentum_amplitude: float,
) -> MHDState:
    """High-field data with P.B = 0 pointwise and h bounded away from zero.

    B is a unit-norm circularly polarized mode plus a small random div-free
    part (|B| >= 1 - amplitude everywhere); P = w x B for a smooth random w,
    so the orthogonality constraint holds to roundoff at t = 0.
    """
    if amplitude >= 0.5:
        raise ConfigError(
            "initial.amplitude: helical-orthogonal needs amplitude < 0.5 to keep h positive"
        )
    _, _, Z = grid.meshgrid()
    B = np.stack([np.cos(Z), np.sin(Z), np.zeros_like(Z)])
    if amplitude > 0.0:
        pert = random_divfree_field(grid, seed, salt=1, kmax=kmax, amplitude=amplitude)
        B = B + pert.values
    w = random_divfree_field(
        grid, seed, salt=2, kmax=kmax, amplitude=momentum_amplitude, divfree=False
    )
    P = np.cross(w.values, B, axis=0)
    P = _truncate(grid, P) if grid.dealias else P
    # re-orthogonalize after truncation so the monitored constraint starts at
    # roundoff rather than at spectral-tail level
    B_t = _truncate(grid, B) if grid.dealias else B
    h2 = np.sum(B_t * B_t, axis=0)
    P = P - B_t * (np.sum(P * B_t, axis=0) / h2)[None]
    return MHDState(VectorField(grid, P), VectorField(grid, B_t))


def build_initial_state(
    model_kind: str,
    grid: GridSpec,
    preset: str,
    seed: int,
    amplitude: float,
    kmax: int,
    k: int,
    momentum_amplitude: float,
):
    """Dispatch a named preset for the given model kind."""
    if preset not in PRESET_MODELS:
        raise ConfigError(
            f"initial.preset: unknown preset {preset!r}; known: {sorted(PRESET_MODELS)}"
        )
    if model_kind not in PRESET_MODELS[preset]:
        raise ConfigError(
            f"initial.preset: {preset!r} does not support {model_kind} models"
        )
    if preset == "plane-wave":
        return plane_wave(grid, amplitude, k)
    if preset == "taylor-green":
        return taylor_green(grid, amplitude)
    if preset == "abc":
        return VorticityState(abc_field(grid, amplitude))
    if preset == "helical-orthogonal":
        return helical_orthogonal(grid, seed, amplitude, kmax, momentum_amplitude)
    # random-band-limited
    if model_kind == "em":
        D = random_divfree_field(grid, seed, salt=3, kmax=kmax, amplitude=amplitude)
        B = random_divfree_field(grid, seed, salt=4, kmax=kmax, amplitude=amplitude)
        return EMState(D, B)
    if model_kind == "mhd":
        P = random_divfree_field(
            grid, seed, salt=5, kmax=kmax, amplitude=amplitude, divfree=False
        )
        B = random_divfree_field(grid, seed, salt=6, kmax=kmax, amplitude=amplitude)
        return MHDState(P, B)
    w = random_divfree_field(grid, seed, salt=7, kmax=kmax, amplitude=amplitude)
    return VorticityState(w)
