"""Right-hand sides for every evolution system: deterministic Born-Infeld and
Maxwell, their Stratonovich/Ito stochastic versions, the expectation PDE of
the weak-field limit, stochastic Euler vorticity, and the high-field
pressureless-MHD limit.

Stochastic transport enters every system the same way: the increment over a
step is the Lie derivative of the state along xi_eff = sum_i xi_i dW_i (the
transport is linear in xi, so the modes collapse into one effective field).
The Ito corrections are the only per-mode quadratic terms; spatially uniform
modes get an exact spectral fast path there.

The integrator-facing layer works on bare tuples of arrays; the public ops
take validated state objects and return fields.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .em_fields import EMState
from .errors import ConstraintError, NumericalError
from .grid import (
    GridSpec,
    VectorField,
    _curl_arr,
    _div_arr,
    _truncate,
    max_div,
    mean_component,
)
from .noise import NoiseModel

MHD_H_FLOOR = 1e-8
MODEL_NAMES = (
    "bi",
    "maxwell",
    "bi-stratonovich",
    "bi-ito",
    "maxwell-stratonovich",
    "maxwell-ito",
    "maxwell-expectation",
    "euler-vorticity",
    "mhd",
    "mhd-stratonovich",
)


@dataclass(frozen=True)
class ModelSpec:
    """Static description of one evolution system."""

    name: str
    kind: str  # "em" | "mhd" | "vorticity"
    closure: str | None = None  # "bi" | "maxwell" for em kinds
    calculus: str | None = None  # None | "stratonovich" | "ito"
    expectation: bool = False


_MODELS = {
    "bi": ModelSpec("bi", "em", "bi"),
    "maxwell": ModelSpec("maxwell", "em", "maxwell"),
    "bi-stratonovich": ModelSpec("bi-stratonovich", "em", "bi", "stratonovich"),
    "bi-ito": ModelSpec("bi-ito", "em", "bi", "ito"),
    "maxwell-stratonovich": ModelSpec(
        "maxwell-stratonovich", "em", "maxwell", "stratonovich"
    ),
    "maxwell-ito": ModelSpec("maxwell-ito", "em", "maxwell", "ito"),
    "maxwell-expectation": ModelSpec(
        "maxwell-expectation", "em", "maxwell", expectation=True
    ),
    "euler-vorticity": ModelSpec("euler-vorticity", "vorticity", None, "stratonovich"),
    "mhd": ModelSpec("mhd", "mhd"),
    "mhd-stratonovich": ModelSpec("mhd-stratonovich", "mhd", None, "stratonovich"),
}


def get_model(name: str) -> ModelSpec:
    try:
        return _MODELS[name]
    except KeyError:
        raise ConstraintError(
            f"unknown model {name!r}; expected one of {sorted(_MODELS)}"
        ) from None


# ---------------------------------------------------------------------------
# additional state types


@dataclass(frozen=True)
class MHDState:
    """Momentum density P and magnetic flux B of the high-field limit."""

    P: VectorField
    B: VectorField
    hmin: float = MHD_H_FLOOR

    @property
    def grid(self) -> GridSpec:
        return self.P.grid

    def h_values(self) -> np.ndarray:
        return np.sqrt(np.sum(self.P.values**2 + self.B.values**2, axis=0))

    def validate(self, div_tol: float = 1e-8) -> None:
        d = max_div(self.B)
        if d > div_tol:
            raise ConstraintError(f"max|div B| = {d:.3e} exceeds {div_tol}")
        hmin_seen = float(np.min(self.h_values()))
        if hmin_seen <= self.hmin:
            raise NumericalError(
                f"energy density floor breached: min h = {hmin_seen:.3e} <= {self.hmin}"
            )


@dataclass(frozen=True)
class VorticityState:
    """Divergence-free, zero-mean vorticity field."""

    w: VectorField

    @property
    def grid(self) -> GridSpec:
        return self.w.grid

    def validate(self, div_tol: float = 1e-8) -> None:
        d = max_div(self.w)
        if d > div_tol:
            raise ConstraintError(f"max|div w| = {d:.3e} exceeds {div_tol}")
        m = float(np.max(np.abs(mean_component(self.w))))
        if m > 1e-10:
            raise ConstraintError(
                f"vorticity carries a mean mode (|{m:.3e}|); curl_inv has no preimage"
            )


# ---------------------------------------------------------------------------
# array-level kernels (hot paths; no validation)


def _em_drift_arrays(
    grid: GridSpec, closure: str, D: np.ndarray, B: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    if closure == "bi":
        P = np.cross(D, B, axis=0)
        Hd = np.sqrt(1.0 + np.sum(D * D + B * B + P * P, axis=0))
        E = (D + np.cross(B, P, axis=0)) / Hd
        H = (B - np.cross(D, P, axis=0)) / Hd
        mask = grid.dealias
    else:
        E, H = D, B
        mask = False  # linear terms need no truncation
    return _curl_arr(grid, H, mask=mask), -_curl_arr(grid, E, mask=mask)


def _transport_2form(grid: GridSpec, xi_eff: np.ndarray, F: np.ndarray) -> np.ndarray:
    """curl(xi_eff x F) = -sum_i dW_i Lie_xi_i F for xi_eff = sum dW_i xi_i."""
    return _curl_arr(grid, np.cross(xi_eff, F, axis=0), mask=grid.dealias)


def _double_lie_2form(
    grid: GridSpec, noise: NoiseModel, F: np.ndarray
) -> np.ndarray:
    """(1/2) sum_i Lie_xi_i(Lie_xi_i F) with a spectral fast path for the
    spatially uniform modes (their double Lie derivative is -(xi.k)^2)."""
    out = np.zeros_like(F)
    const = noise.constant_vectors()
    if len(const):
        spec = grid.rfft(F)
        xk = (
            const[:, 0, None, None, None] * grid.kx
            + const[:, 1, None, None, None] * grid.ky
            + const[:, 2, None, None, None] * grid.kz
        )
        mult = -0.5 * np.sum(xk**2, axis=0)
        out += grid.irfft(mult * spec)
    for i in noise.nonconstant_indices():
        xi = noise.xis[i].values
        l1 = -_curl_arr(grid, np.cross(xi, F, axis=0), mask=grid.dealias)
        l2 = -_curl_arr(grid, np.cross(xi, l1, axis=0), mask=grid.dealias)
        out += 0.5 * l2
    return out


def _lie_1form_density_arrays(
    grid: GridSpec, xi: np.ndarray, grad_xi: np.ndarray, P: np.ndarray
) -> np.ndarray:
    """d_j(xi^j P_k) + P_j d_k xi^j, truncated per the grid policy."""
    out = np.empty_like(P)
    for k in range(3):
        out[k] = _div_arr(grid, xi * P[k][None])
    out += np.einsum("j...,kj...->k...", P, grad_xi)
    return _truncate(grid, out) if grid.dealias else out


def _curl_inv_arrays(grid: GridSpec, B: np.ndarray) -> np.ndarray:
    spec = grid.rfft(B)
    inv = grid.inv_k2
    pot = 1j * np.stack(
        [
            (grid.ky * spec[2] - grid.kz * spec[1]) * inv,
            (grid.kz * spec[0] - grid.kx * spec[2]) * inv,
            (grid.kx * spec[1] - grid.ky * spec[0]) * inv,
        ]
    )
    return grid.irfft(pot)


def _mhd_drift_arrays(
    grid: GridSpec, P: np.ndarray, B: np.ndarray, hmin: float
) -> tuple[np.ndarray, np.ndarray]:
    h = np.sqrt(np.sum(P * P + B * B, axis=0))
    h_floor = float(np.min(h))
    if h_floor <= hmin:
        raise NumericalError(
            f"energy density floor breached in flux assembly: min h = {h_floor:.3e}"
        )
    v = P / h
    flux = (P[None, :] * P[:, None] - B[None, :] * B[:, None]) / h  # [j, i]
    spec = grid.rfft(flux)
    if grid.dealias:
        spec *= grid.dealias_mask
    dspec = -1j * (
        grid.kx * spec[0] + grid.ky * spec[1] + grid.kz * spec[2]
    )  # contract over j
    dP = grid.irfft(dspec)
    dB = _curl_arr(grid, np.cross(v, B, axis=0), mask=grid.dealias)
    return dP, dB


def _vorticity_drift_arrays(grid: GridSpec, w: np.ndarray) -> np.ndarray:
    u = _curl_inv_arrays(grid, w)
    return _curl_arr(grid, np.cross(u, w, axis=0), mask=grid.dealias)


# ---------------------------------------------------------------------------
# integrator-facing closures

Arrays = tuple[np.ndarray, ...]


def make_drift(
    model: ModelSpec,
    grid: GridSpec,
    noise: NoiseModel | None = None,
    hmin: float = MHD_H_FLOOR,
) -> Callable[[Arrays], Arrays]:
    if model.expectation:
        if noise is None:
            raise ConstraintError("maxwell-expectation requires a noise model")

        def f(arrs: Arrays) -> Arrays:
            D, B = arrs
            dD, dB = _em_drift_arrays(grid, "maxwell", D, B)
            return (
                dD + _double_lie_2form(grid, noise, D),
                dB + _double_lie_2form(grid, noise, B),
            )

        return f
    if model.kind == "em":

        def f(arrs: Arrays) -> Arrays:
            return _em_drift_arrays(grid, model.closure, *arrs)

        return f
    if model.kind == "mhd":

        def f(arrs: Arrays) -> Arrays:
            return _mhd_drift_arrays(grid, *arrs, hmin=hmin)

        return f
    if model.kind == "vorticity":

        def f(arrs: Arrays) -> Arrays:
            return (_vorticity_drift_arrays(grid, arrs[0]),)

        return f
    raise ConstraintError(f"no drift for model kind {model.kind!r}")


def make_noise_op(
    model: ModelSpec, grid: GridSpec, noise: NoiseModel
) -> Callable[[Arrays, np.ndarray], Arrays]:
    """Returns g(state, dW) -> transport increment along sum_i xi_i dW_i."""

    if model.kind in ("em", "vorticity"):

        def g(arrs: Arrays, dW: np.ndarray) -> Arrays:
            if noise.n_modes == 0:
                return tuple(np.zeros_like(a) for a in arrs)
            xi_eff = noise.combine(dW)
            return tuple(_transport_2form(grid, xi_eff, a) for a in arrs)

        return g
    if model.kind == "mhd":

        def g(arrs: Arrays, dW: np.ndarray) -> Arrays:
            P, B = arrs
            if noise.n_modes == 0:
                return (np.zeros_like(P), np.zeros_like(B))
            xi_eff = noise.combine(dW)
            grad_eff = np.tensordot(dW, noise.grad_stacked(), axes=(0, 0))
            dP = -_lie_1form_density_arrays(grid, xi_eff, grad_eff, P)
            dB = _transport_2form(grid, xi_eff, B)
            return (dP, dB)

        return g
    raise ConstraintError(f"no noise operator for model kind {model.kind!r}")


def make_ito_correction(
    model: ModelSpec, grid: GridSpec, noise: NoiseModel
) -> Callable[[Arrays], Arrays]:
    if model.kind != "em":
        raise ConstraintError("Ito corrections are implemented for the em systems only")

    def c(arrs: Arrays) -> Arrays:
        if noise.n_modes == 0:
            return tuple(np.zeros_like(a) for a in arrs)
        return tuple(_double_lie_2form(grid, noise, a) for a in arrs)

    return c


# ---------------------------------------------------------------------------
# public spec-level operations


def bi_rhs(state: EMState, closure: str = "bi") -> tuple[VectorField, VectorField]:
    """Deterministic field equations (dD, dB) = (curl H, -curl E) with (E, H)
    from the chosen closure's variational derivatives."""
    if closure not in ("bi", "maxwell"):
        raise ConstraintError(f"unknown closure {closure!r}")
    grid = state.grid
    dD, dB = _em_drift_arrays(grid, closure, state.D.values, state.B.values)
    return VectorField(grid, dD), VectorField(grid, dB)


def stochastic_increment(
    state: EMState, noise: NoiseModel, dW: np.ndarray
) -> tuple[VectorField, VectorField]:
    """Stratonovich transport increment (dD, dB) = -sum_i Lie_xi_i (D, B) dW_i;
    both outputs are curls, hence exactly divergence-free."""
    grid = state.grid
    if noise.n_modes == 0 or not np.any(dW):
        return VectorField.zeros(grid), VectorField.zeros(grid)
    xi_eff = noise.combine(np.asarray(dW, dtype=float))
    dD = _transport_2form(grid, xi_eff, state.D.values)
    dB = _transport_2form(grid, xi_eff, state.B.values)
    return VectorField(grid, dD), VectorField(grid, dB)


def ito_drift_correction(
    state: EMState, noise: NoiseModel
) -> tuple[VectorField, VectorField]:
    """The (1/2) sum_i Lie_xi_i(Lie_xi_i .) drift term that converts the
    Stratonovich transport to Ito form."""
    grid = state.grid
    cD = _double_lie_2form(grid, noise, state.D.values)
    cB = _double_lie_2form(grid, noise, state.B.values)
    return VectorField(grid, cD), VectorField(grid, cB)


def expectation_rhs(
    state: EMState, noise: NoiseModel, closure: str = "maxwell"
) -> tuple[VectorField, VectorField]:
    """Deterministic PDE for the ensemble means in the weak-field limit:
    d<D>/dt = curl<B> + (1/2) sum_i Lie_xi_i(Lie_xi_i <D>), and likewise for
    <B> with -curl<D>. Only the weak-field (maxwell) closure is admissible."""
    if closure != "maxwell":
        raise ConstraintError(
            "the expectation equations hold in the weak-field limit; use the maxwell closure"
        )
    grid = state.grid
    dD, dB = _em_drift_arrays(grid, "maxwell", state.D.values, state.B.values)
    dD = dD + _double_lie_2form(grid, noise, state.D.values)
    dB = dB + _double_lie_2form(grid, noise, state.B.values)
    return VectorField(grid, dD), VectorField(grid, dB)


def euler_vorticity_rhs(
    state: VorticityState, noise: NoiseModel, dW: np.ndarray, dt: float
) -> VectorField:
    """Combined vorticity increment curl((u dt + sum_i xi_i dW_i) x w) with
    u recovered from w by the periodic Biot-Savart inverse."""
    state.validate()
    grid = state.grid
    w = state.w.values
    vel = _curl_inv_arrays(grid, w) * dt
    if noise.n_modes and np.any(dW):
        vel = vel + noise.combine(np.asarray(dW, dtype=float))
    return VectorField(grid, _curl_arr(grid, np.cross(vel, w, axis=0), mask=grid.dealias))


def mhd_rhs(state: MHDState) -> tuple[VectorField, VectorField]:
    """Conservative-form fluxes of the high-field limit:
    dP = -div(P P/h - B B/h), dB = curl(P x B / h)."""
    grid = state.grid
    dP, dB = _mhd_drift_arrays(grid, state.P.values, state.B.values, state.hmin)
    return VectorField(grid, dP), VectorField(grid, dB)


def mhd_stochastic_increment(
    state: MHDState, noise: NoiseModel, dW: np.ndarray
) -> tuple[VectorField, VectorField]:
    """Transport increment for the high-field system: the momentum moves as a
    1-form density, the flux as a 2-form."""
    grid = state.grid
    if noise.n_modes == 0 or not np.any(dW):
        return VectorField.zeros(grid), VectorField.zeros(grid)
    dWv = np.asarray(dW, dtype=float)
    xi_eff = noise.combine(dWv)
    grad_eff = np.tensordot(dWv, noise.grad_stacked(), axes=(0, 0))
    dP = -_lie_1form_density_arrays(grid, xi_eff, grad_eff, state.P.values)
    dB = _transport_2form(grid, xi_eff, state.B.values)
    return VectorField(grid, dP), VectorField(grid, dB)
