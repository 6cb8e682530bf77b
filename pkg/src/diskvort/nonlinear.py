"""Advection term, its harmonic/admissible split, and the elliptic correction.

The advection of a vorticity field by its own Biot-Savart velocity is
the polar Jacobian

    Lambda = u . grad omega = (1/r)(d_r psi d_theta omega
                                    - d_theta psi d_r omega),

sampled pseudo-spectrally and decomposed by ``from_grid`` into the
admissible part (consumed by the parabolic track) and the harmonic
moments (consumed by the elliptic correction).  Because the stream
dictionary is clamped at the boundary, u.n = 0 holds exactly and the
classical identities survive discretization: radial fields are steady,
the pairing with the stream vanishes, and the disk mean of Lambda is
zero.

The elliptic correction inverts nu times the negative Laplacian on the
harmonic moments: for each component a r^k trig(k theta) of h, the
stream correction

    psi_B = (a/nu) (r^{k+2} - r^k)/(4k+4) trig(k theta)

satisfies Delta psi_B = h/nu with psi_B = 0 on the boundary (k = 0:
(a/nu)(r^2-1)/4), and omega_B is its admissible projection.  The sign
makes the harmonic moments of nu Delta omega_B equal +h, which is what
keeping the total vorticity admissible demands.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import (
    GridField,
    HarmonicExpansion,
    PolarGrid,
    SpectralField,
    _harm_const,
    biot_savart,
    from_grid,
    to_grid,
)

__all__ = [
    "AdvectionResult",
    "advection",
    "velocity_max",
    "elliptic_correction",
    "elliptic_stream_values",
    "advection_time_derivative",
]


@dataclass
class AdvectionResult:
    """Bergman split of the advection term plus its raw grid norm."""

    projected: SpectralField
    harmonic: HarmonicExpansion
    raw_l2_norm: float


def advection(omega: SpectralField, grid: PolarGrid) -> AdvectionResult:
    """u . grad omega for u = perpendicular gradient of the stream."""
    if omega.kind != "vorticity":
        raise ValueError("advection expects a vorticity field")
    if grid.table is not omega.table:
        raise ValueError("grid was built for a different table")
    psi = biot_savart(omega)
    dpsi_r = to_grid(psi, grid, "d_r").values
    dpsi_t = to_grid(psi, grid, "d_theta").values
    dom_r = to_grid(omega, grid, "d_r").values
    dom_t = to_grid(omega, grid, "d_theta").values
    rr = grid.r[:, None]
    lam_vals = (dpsi_r * dom_t - dpsi_t * dom_r) / rr
    raw = float(np.sqrt(max(grid.integrate(lam_vals**2), 0.0)))
    projected, harmonic, _ = from_grid(GridField(grid, lam_vals), omega.table)
    return AdvectionResult(projected=projected, harmonic=harmonic, raw_l2_norm=raw)


def velocity_max(omega: SpectralField, grid: PolarGrid) -> float:
    """Max pointwise speed of the Biot-Savart velocity on the grid."""
    psi = biot_savart(omega)
    dpsi_r = to_grid(psi, grid, "d_r").values
    dpsi_t = to_grid(psi, grid, "d_theta").values
    rr = grid.r[:, None]
    u_r = -dpsi_t / rr
    u_t = dpsi_r
    return float(np.sqrt(np.max(u_r**2 + u_t**2)))


def elliptic_stream_values(
    h: HarmonicExpansion, nu: float, r, theta, what: str = "value"
) -> np.ndarray:
    """Closed-form stream correction psi_B with Delta psi_B = h/nu.

    Component-wise: a r^k trig maps to (a/nu)(r^{k+2}-r^k)/(4k+4) trig,
    which vanishes at r = 1.  ``what`` selects value or d_r (the
    elliptic solve needs values; tests probe the derivative too).
    """
    if not (nu > 0.0):
        raise ValueError(f"viscosity must be positive, got {nu}")
    if what not in ("value", "d_r"):
        raise ValueError(f"what must be value|d_r, got {what!r}")
    r = np.asarray(r, dtype=float)
    theta = np.asarray(theta, dtype=float)
    out = np.zeros(np.broadcast(r, theta).shape)
    for k in range(h.degree + 1):
        for coeff, trig in ((h.a[k], np.cos), (h.b[k], np.sin)):
            if coeff == 0.0:
                continue
            amp = coeff * _harm_const(k) / nu  # raw amplitude of a r^k term
            if what == "value":
                rad = (r ** (k + 2) - r**k) / (4.0 * k + 4.0)
            elif k == 0:
                rad = 0.5 * r
            else:
                rad = ((k + 2) * r ** (k + 1) - k * r ** (k - 1)) / (4.0 * k + 4.0)
            out = out + amp * rad * trig(k * theta)
    return out


def elliptic_correction(
    h: HarmonicExpansion, nu: float, grid: PolarGrid
) -> tuple[SpectralField, GridField]:
    """Admissible vorticity omega_B whose Laplacian carries moments h/nu.

    Returns (omega_B, psi_B sampled on the grid).  omega_B is the
    projection of the closed-form stream correction, so its own harmonic
    moments vanish by construction.
    """
    table = grid.table
    if h.degree > table.K:
        raise ValueError(
            f"harmonic degree {h.degree} exceeds table angular bound {table.K}"
        )
    rr, tt = grid.node_polar()
    vals = elliptic_stream_values(h, nu, rr, tt)
    psi_b = GridField(grid, vals)
    omega_b, _, _ = from_grid(psi_b, table)
    return omega_b, psi_b


def advection_time_derivative(
    current: AdvectionResult, previous: AdvectionResult, dt: float
) -> HarmonicExpansion:
    """Backward difference of the harmonic moments between two steps."""
    if not (dt > 0.0):
        raise ValueError(f"dt must be positive, got {dt}")
    if current.harmonic.degree != previous.harmonic.degree:
        raise ValueError("harmonic expansions live on different bases")
    return (current.harmonic - previous.harmonic) * (1.0 / dt)
