"""Exact diagonal semigroup, exponential time differencing, decay fits.

The linear vorticity operator is diagonal in the eigenbasis, so its
semigroup is the exact mode-wise factor e^{-nu lambda t}; stiffness
never enters.  Inhomogeneous problems step by exponential time
differencing built on

    phi1(z) = (e^z - 1)/z,      phi2(z) = (e^z - 1 - z)/z^2,

each with a Taylor branch below |z| = 1e-5 to dodge cancellation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .fields import SpectralField

__all__ = [
    "Trajectory",
    "DecayFit",
    "phi1",
    "phi2",
    "propagate",
    "duhamel_step",
    "fit_decay_rate",
]

_SERIES_CUT = 1e-5


def phi1(z):
    """(e^z - 1)/z with a 6-term series branch for small |z|."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < _SERIES_CUT
    out = np.empty_like(z)
    zs = z[small]
    out[small] = 1.0 + zs * (
        1.0 / 2 + zs * (1.0 / 6 + zs * (1.0 / 24 + zs * (1.0 / 120 + zs / 720)))
    )
    zb = z[~small]
    out[~small] = np.expm1(zb) / zb
    return out if out.ndim else float(out)


def phi2(z):
    """(e^z - 1 - z)/z^2 with a 6-term series branch for small |z|."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < _SERIES_CUT
    out = np.empty_like(z)
    zs = z[small]
    out[small] = 1.0 / 2 + zs * (
        1.0 / 6 + zs * (1.0 / 24 + zs * (1.0 / 120 + zs * (1.0 / 720 + zs / 5040)))
    )
    zb = z[~small]
    out[~small] = (np.expm1(zb) - zb) / (zb * zb)
    return out if out.ndim else float(out)


def propagate(field: SpectralField, nu: float, t: float) -> SpectralField:
    """Exact heat flow: coefficients scaled by e^{-nu lambda t}."""
    if not (nu > 0.0):
        raise ValueError(f"viscosity must be positive, got {nu}")
    if t < 0.0:
        raise ValueError(f"time must be nonnegative, got {t}")
    factors = np.exp(-nu * field.table.lam * t)
    return SpectralField(field.table, factors * field.coeffs, field.kind)


def duhamel_step(
    field: SpectralField,
    forcing_eval: Callable[[float], SpectralField],
    nu: float,
    t: float,
    dt: float,
    scheme: str = "etd2rk",
) -> SpectralField:
    """One exponential-integrator step of u' = -nu lambda u + f(t).

    etd1 is first order; etd2rk adds the phi2 correction from the
    forcing increment over the step (exponential trapezoid), second
    order for time-dependent forcing.
    """
    if not (nu > 0.0):
        raise ValueError(f"viscosity must be positive, got {nu}")
    if not (dt > 0.0):
        raise ValueError(f"dt must be positive, got {dt}")
    if scheme not in ("etd1", "etd2rk"):
        raise ValueError(f"scheme must be etd1|etd2rk, got {scheme!r}")
    lam = field.table.lam
    z = -nu * lam * dt
    f0 = forcing_eval(t)
    if f0.table is not field.table or f0.kind != field.kind:
        raise ValueError("forcing field incompatible with the state field")
    new = np.exp(z) * field.coeffs + dt * phi1(z) * f0.coeffs
    if scheme == "etd2rk":
        f1 = forcing_eval(t + dt)
        if f1.table is not field.table or f1.kind != field.kind:
            raise ValueError("forcing field incompatible with the state field")
        new = new + dt * phi2(z) * (f1.coeffs - f0.coeffs)
    return SpectralField(field.table, new, field.kind)


@dataclass
class Trajectory:
    """Time-ordered states with optional aligned diagnostics rows."""

    times: np.ndarray
    states: tuple
    diagnostics: Optional[tuple] = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = tuple(self.states)
        if self.times.ndim != 1 or self.times.size != len(self.states):
            raise ValueError("times and states must align")
        if self.times.size >= 2 and np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        if self.diagnostics is not None:
            self.diagnostics = tuple(self.diagnostics)
            if len(self.diagnostics) != self.times.size:
                raise ValueError("diagnostics must align with times")

    def __len__(self) -> int:
        return self.times.size

    def series(self, extract) -> list[tuple[float, float]]:
        """(t, extract(state)) pairs, e.g. for decay fitting."""
        return [(float(t), float(extract(s))) for t, s in zip(self.times, self.states)]

    def to_csv(self, path) -> None:
        import dataclasses

        with open(path, "w", newline="") as f:
            if self.diagnostics is None:
                f.write("t\n")
                for t in self.times:
                    f.write(f"{t:.17g}\n")
                return
            names = [fld.name for fld in dataclasses.fields(self.diagnostics[0])]
            f.write(",".join(names) + "\n")
            for row in self.diagnostics:
                vals = [getattr(row, n) for n in names]
                f.write(",".join(f"{v:.17g}" for v in vals) + "\n")


@dataclass(frozen=True)
class DecayFit:
    """Least-squares exponential-rate fit over a time window."""

    window: tuple[float, float]
    rate: float
    intercept: float
    r_squared: float
    n_samples: int


def fit_decay_rate(
    series: Sequence[tuple[float, float]],
    window: Optional[tuple[float, float]] = None,
) -> DecayFit:
    """Fit value ~ C e^{-rate t} on the window by least squares in log.

    The window defaults to the last half of the series (transients from
    higher modes die there first).  Nonpositive values inside the window
    are an error: the series is not in the exponential regime.
    """
    pts = [(float(t), float(v)) for t, v in series]
    if len(pts) < 2:
        raise ValueError("need at least 2 samples overall")
    t_all = np.array([p[0] for p in pts])
    if window is None:
        t0, t1 = float(t_all[0]), float(t_all[-1])
        window = (t0 + 0.5 * (t1 - t0), t1)
    lo, hi = float(window[0]), float(window[1])
    sel = [(t, v) for t, v in pts if lo <= t <= hi]
    if len(sel) < 4:
        raise ValueError(f"need >= 4 samples inside window {window}, got {len(sel)}")
    vals = np.array([v for _, v in sel])
    if np.any(vals <= 0.0):
        raise ValueError("nonpositive values in window: not an exponential regime")
    ts = np.array([t for t, _ in sel])
    logv = np.log(vals)
    A = np.stack([ts, np.ones_like(ts)], axis=1)
    sol, *_ = np.linalg.lstsq(A, logv, rcond=None)
    slope, intercept = float(sol[0]), float(sol[1])
    pred = A @ sol
    ss_res = float(np.sum((logv - pred) ** 2))
    ss_tot = float(np.sum((logv - logv.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 and ss_res < 1e-28 else max(0.0, 1.0 - ss_res / max(ss_tot, 1e-300))
    return DecayFit(
        window=(lo, hi),
        rate=-slope,
        intercept=intercept,
        r_squared=min(1.0, r2),
        n_samples=len(sel),
    )
