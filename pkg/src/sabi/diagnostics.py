"""Conserved-quantity monitors, constraint residuals, tracer loops, and the
Hamiltonian-structure identity checks.

The bracket checks pair smeared linear functionals F_xi = <P, xi> instead of
distributional kernels (a delta-function bracket is untestable on a grid),
and they compute products without dealias truncation: the identities hold at
quadrature level only if no paired mode is discarded, so inputs must be
band-limited tightly enough that the products stay alias-free.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import MHDState, VorticityState, _curl_inv_arrays
from .em_fields import EMState, bi_energy_density, maxwell_energy_density
from .errors import ConstraintError, NumericalError
from .grid import (
    VectorField,
    _curl_arr,
    _div_arr,
    _grad_arr,
    _grad_vector_arr,
    curl_inv,
    evaluate_at_points,
    max_div,
)
from .noise import NoiseModel

# {F_xi, F_eta} = LP_BRACKET_SIGN * <P, [xi, eta]>, calibrated once by the
# brute-force canonical-bracket computation and asserted in the tests.
LP_BRACKET_SIGN = -1.0


@dataclass(frozen=True)
class DiagnosticsRecord:
    """One sample of the monitored quantities; None marks a field that the
    model does not define (kept as empty cells in the CSV)."""

    time: float
    energy: float
    momentum: tuple[float, float, float]
    div_d: float | None = None
    div_b: float | None = None
    helicity: float | None = None
    pb_orth: float | None = None
    circulation: float | None = None
    vorticity_residual: float | None = None

    def validate(self) -> None:
        values = [self.time, self.energy, *self.momentum] + [
            v
            for v in (
                self.div_d,
                self.div_b,
                self.helicity,
                self.pb_orth,
                self.circulation,
                self.vorticity_residual,
            )
            if v is not None
        ]
        if not np.all(np.isfinite(values)):
            raise NumericalError(f"non-finite diagnostics at t={self.time}")

    CSV_COLUMNS = (
        "time",
        "energy",
        "momentum_x",
        "momentum_y",
        "momentum_z",
        "div_d",
        "div_b",
        "helicity",
        "pb_orth",
        "circulation",
        "vorticity_residual",
    )

    def csv_row(self) -> list[str]:
        def fmt(v):
            return "" if v is None else repr(float(v))

        return [
            fmt(self.time),
            fmt(self.energy),
            fmt(self.momentum[0]),
            fmt(self.momentum[1]),
            fmt(self.momentum[2]),
            fmt(self.div_d),
            fmt(self.div_b),
            fmt(self.helicity),
            fmt(self.pb_orth),
            fmt(self.circulation),
            fmt(self.vorticity_residual),
        ]


# ---------------------------------------------------------------------------
# integrals


def total_energy(state: EMState | MHDState | VorticityState, model: str) -> float:
    """Volume integral of the model's energy density."""
    if isinstance(state, EMState):
        closure = "bi" if model.startswith("bi") else "maxwell"
        dens = bi_energy_density(state) if closure == "bi" else maxwell_energy_density(state)
        return float(np.mean(dens.values)) * state.grid.volume
    if isinstance(state, MHDState):
        h = state.h_values()
        hmin = float(np.min(h))
        if hmin <= state.hmin:
            raise NumericalError(
                f"degenerate high-field state: min h = {hmin:.3e} at the floor"
            )
        return float(np.mean(h)) * state.grid.volume
    if isinstance(state, VorticityState):
        u = _curl_inv_arrays(state.grid, state.w.values)
        return 0.5 * float(np.mean(np.sum(u * u, axis=0))) * state.grid.volume
    raise ConstraintError(f"no energy functional for {type(state).__name__}")


def total_momentum(state: EMState | MHDState | VorticityState) -> np.ndarray:
    """Volume integral of the momentum density (D x B for the field systems,
    P for the high-field limit, the velocity for vorticity runs)."""
    if isinstance(state, EMState):
        P = np.cross(state.D.values, state.B.values, axis=0)
        return P.mean(axis=(1, 2, 3)) * state.grid.volume
    if isinstance(state, MHDState):
        return state.P.values.mean(axis=(1, 2, 3)) * state.grid.volume
    if isinstance(state, VorticityState):
        u = _curl_inv_arrays(state.grid, state.w.values)
        return u.mean(axis=(1, 2, 3)) * state.grid.volume
    raise ConstraintError(f"no momentum functional for {type(state).__name__}")


def magnetic_helicity(B: VectorField) -> float:
    """int A.B over the box with A the div-free zero-mean potential.

    Gauge invariant on the torus: shifting A by any gradient changes the
    integral by int grad(psi).B = -int psi div B = 0.
    """
    A = curl_inv(B)  # validates div B and the mean mode
    return float(np.mean(np.sum(A.values * B.values, axis=0))) * B.grid.volume


def pb_orthogonality(state: MHDState) -> float:
    """max |P.B| / h, the monitored constraint of the high-field system."""
    pb = np.abs(np.sum(state.P.values * state.B.values, axis=0))
    return float(np.max(pb / state.h_values()))


# ---------------------------------------------------------------------------
# tracer loops


@dataclass(frozen=True)
class TracerLoop:
    """Closed polygonal loop; points stay unwrapped in R^3 so segment vectors
    are geometric while field evaluation wraps them periodically."""

    points: np.ndarray  # (n, 3)

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] < 3:
            raise ValueError("loop needs an (n>=3, 3) array of points")
        object.__setattr__(self, "points", pts)

    @classmethod
    def circle(
        cls,
        center: tuple[float, float, float],
        radius: float,
        n_points: int = 256,
        plane: str = "xy",
    ) -> "TracerLoop":
        theta = np.linspace(0.0, 2.0 * np.pi, n_points, endpoint=False)
        c = np.asarray(center, dtype=float)
        pts = np.tile(c, (n_points, 1))
        ax = {"xy": (0, 1), "yz": (1, 2), "xz": (0, 2)}[plane]
        pts[:, ax[0]] += radius * np.cos(theta)
        pts[:, ax[1]] += radius * np.sin(theta)
        return cls(pts)


def loop_circulation(loop: TracerLoop, v: VectorField) -> float:
    """Trapezoidal closed-loop integral of v . dx over the polygon."""
    vals = evaluate_at_points(v, loop.points)  # (n, 3)
    seg = np.roll(loop.points, -1, axis=0) - loop.points
    mid = 0.5 * (vals + np.roll(vals, -1, axis=0))
    return float(np.sum(mid * seg))


def advect_loop(
    loop: TracerLoop,
    v_start: VectorField,
    dt: float,
    v_end: VectorField | None = None,
    noise: NoiseModel | None = None,
    dW: np.ndarray | None = None,
) -> TracerLoop:
    """Heun update of the loop points along v dt + sum_i xi_i dW_i.

    The same dW vector that moved the fields over this step must be passed
    here, so the loop rides the identical realization of the transport.
    v_end, when given, is the velocity field after the step (corrector stage).
    """
    xi_eff: VectorField | None = None
    if noise is not None and dW is not None and noise.n_modes and np.any(dW):
        xi_eff = VectorField(v_start.grid, noise.combine(np.asarray(dW, dtype=float)))

    def displacement(points: np.ndarray, v_field: VectorField) -> np.ndarray:
        disp = evaluate_at_points(v_field, points) * dt
        if xi_eff is not None:
            disp = disp + evaluate_at_points(xi_eff, points)
        return disp

    d0 = displacement(loop.points, v_start)
    predictor = loop.points + d0
    d1 = displacement(predictor, v_end if v_end is not None else v_start)
    return TracerLoop(loop.points + 0.5 * (d0 + d1))


# ---------------------------------------------------------------------------
# Hamiltonian-structure identities


def lp_bracket_check(
    D: VectorField, A: VectorField, xi: VectorField, eta: VectorField
) -> tuple[float, float]:
    """Canonical bracket of the smeared momentum functionals versus the
    momentum pairing with the vector-field bracket.

    F_xi(D, A) = int A . curl(xi x D) has the closed-form derivatives
    dF/dA = curl(xi x D) and dF/dD = (curl A) x xi, so the canonical bracket
    is assembled directly; the right side is LP_BRACKET_SIGN * <P, [xi, eta]>
    with P = D x curl A and [xi, eta] = (xi.grad)eta - (eta.grad)xi.
    """
    grid = D.grid
    for name, f in (("D", D), ("xi", xi), ("eta", eta)):
        d = max_div(f)
        if d > 1e-8:
            raise ConstraintError(f"lp_bracket_check: max|div {name}| = {d:.3e}")
    vol = grid.cell_volume
    B = _curl_arr(grid, A.values)

    def pair(a: np.ndarray, b: np.ndarray) -> float:
        return float(np.sum(a * b) * vol)

    dF_dD = np.cross(B, xi.values, axis=0)
    dF_dA = _curl_arr(grid, np.cross(xi.values, D.values, axis=0))
    dK_dD = np.cross(B, eta.values, axis=0)
    dK_dA = _curl_arr(grid, np.cross(eta.values, D.values, axis=0))
    lhs = pair(dF_dD, dK_dA) - pair(dK_dD, dF_dA)

    gxi = _grad_vector_arr(grid, xi.values)
    geta = _grad_vector_arr(grid, eta.values)
    bracket = np.einsum("j...,jk...->k...", xi.values, geta) - np.einsum(
        "j...,jk...->k...", eta.values, gxi
    )
    P = np.cross(D.values, B, axis=0)
    rhs = LP_BRACKET_SIGN * pair(P, bracket)
    return lhs, rhs


def km_bracket_residual(state: EMState) -> float:
    """Relative L2 mismatch between the two routes to the momentum equation:
    the conservative stress form versus transport plus the force terms built
    from independent variational derivatives (B/H and D/H).

    Both routes are assembled from raw (untruncated) products; for smooth
    band-limited states the mismatch sits at spectral-tail level.
    """
    grid = state.grid
    D, B = state.D.values, state.B.values
    P = np.cross(D, B, axis=0)
    Hd = np.sqrt(1.0 + np.sum(D * D + B * B + P * P, axis=0))
    v, gam, bet = P / Hd, D / Hd, B / Hd

    # stress-divergence route
    T = (P[None, :] * P[:, None] - D[None, :] * D[:, None] - B[None, :] * B[:, None]) / Hd
    spec = grid.rfft(T)
    dP1 = grid.irfft(-1j * (grid.kx * spec[0] + grid.ky * spec[1] + grid.kz * spec[2]))
    dP1 += _grad_arr(grid, 1.0 / Hd)

    # transport + diamond-force route
    grad_v = _grad_vector_arr(grid, v)
    lie_p = np.empty_like(P)
    for k in range(3):
        lie_p[k] = _div_arr(grid, v * P[k][None])
    lie_p += np.einsum("j...,kj...->k...", P, grad_v)
    forces = np.cross(B, _curl_arr(grid, bet), axis=0) + np.cross(
        D, _curl_arr(grid, gam), axis=0
    )
    dP2 = -lie_p - forces

    num = float(np.sqrt(np.sum((dP1 - dP2) ** 2) * grid.cell_volume))
    den = float(np.sqrt(np.sum(dP1**2) * grid.cell_volume))
    return num / max(den, 1e-30)


def vorticity_transport_residual(state: EMState, closure: str = "bi") -> float:
    """Relative L2 residual of the curl of the momentum-velocity equation:
    d(curl v)/dt - curl(v x curl v) + curl(gamma x curl gamma
    + beta x curl beta), with the time derivative chained through the field
    equations. Vanishes at spectral-tail level on smooth states.
    """
    from .dynamics import _em_drift_arrays

    grid = state.grid
    D, B = state.D.values, state.B.values
    P = np.cross(D, B, axis=0)
    Hd = np.sqrt(1.0 + np.sum(D * D + B * B + P * P, axis=0))
    v, gam, bet = P / Hd, D / Hd, B / Hd
    E = (D + np.cross(B, P, axis=0)) / Hd
    Hf = (B - np.cross(D, P, axis=0)) / Hd

    dD, dB = _em_drift_arrays(grid, closure, D, B)
    dP = np.cross(dD, B, axis=0) + np.cross(D, dB, axis=0)
    dH = np.sum(E * dD + Hf * dB, axis=0)
    dv = (dP - v * dH[None]) / Hd
    d_vort = _curl_arr(grid, dv)

    vort = _curl_arr(grid, v)
    transport = _curl_arr(grid, np.cross(v, vort, axis=0))
    forces = _curl_arr(
        grid,
        np.cross(gam, _curl_arr(grid, gam), axis=0)
        + np.cross(bet, _curl_arr(grid, bet), axis=0),
    )
    residual = d_vort - transport + forces
    num = float(np.sqrt(np.sum(residual**2) * grid.cell_volume))
    den = float(np.sqrt(np.sum(d_vort**2) * grid.cell_volume))
    return num / max(den, 1e-30)


# ---------------------------------------------------------------------------
# per-model record assembly


def collect_record(
    state: EMState | MHDState | VorticityState,
    model: str,
    time: float,
    circulation: float | None = None,
    with_helicity: bool = True,
) -> DiagnosticsRecord:
    mom = total_momentum(state)
    if isinstance(state, EMState):
        rec = DiagnosticsRecord(
            time=time,
            energy=total_energy(state, model),
            momentum=tuple(float(m) for m in mom),
            div_d=max_div(state.D),
            div_b=max_div(state.B),
            circulation=circulation,
        )
    elif isinstance(state, MHDState):
        rec = DiagnosticsRecord(
            time=time,
            energy=total_energy(state, model),
            momentum=tuple(float(m) for m in mom),
            div_b=max_div(state.B),
            helicity=magnetic_helicity(state.B) if with_helicity else None,
            pb_orth=pb_orthogonality(state),
            circulation=circulation,
        )
    else:
        rec = DiagnosticsRecord(
            time=time,
            energy=total_energy(state, model),
            momentum=tuple(float(m) for m in mom),
            div_b=max_div(state.w),
            circulation=circulation,
        )
    rec.validate()
    return rec
