"""Multiply connected machinery on the annulus R < r < 1.

The simply connected solver never sees circulation: on the disk every
stream function is single-valued and the vorticity determines the
velocity.  With a hole, three new objects appear and this module builds
discrete versions of each:

* the circulation generator xi (harmonic, zero on the outer circle,
  carrying flux -1 through the inner one) and its Bergman projection
  Omega = P xi;
* the pairing functional zeta, evaluated through the Dirichlet part of
  the trace split (volume and boundary routes agree);
* flux conditions tying the circulation rate to the vorticity flux off
  the inner wall (Lamb), exercised on a linear Stokes evolution.

Alongside these, a dense Galerkin discretization checks that the
vorticity-side and stream-side Stokes operators share their lowest
eigenvalue and that the intermediate (zero-mean-flux) operator sits
below both.

Scalar fields are passed as callables f(r, theta, what) with what in
{"value", "d_r", "d_theta"}; r and theta broadcast.  Everything is
single-annulus: one hole exercises every mechanism.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh, expm, null_space

from .specfun import bessel_j, bessel_y, gauss_legendre

__all__ = [
    "AnnulusGeometry",
    "XiFunction",
    "HarmonicElement",
    "ProjectedField",
    "GalerkinOperator",
    "SpectraResult",
    "BoundaryReport",
    "CirculationRun",
    "harmonic_basis",
    "bergman_project",
    "xi_circulation",
    "omega_big",
    "q1_dirichlet_split",
    "zeta_pairing",
    "newtonian_bs_annulus",
    "galerkin_spectra",
    "annulus_stokes_circulation",
]


@dataclass(frozen=True)
class AnnulusGeometry:
    """Annulus r_inner < r < 1 with its quadrature resolution."""

    r_inner: float
    n_radial: int = 200
    n_angular: int = 256

    def __post_init__(self):
        if not (0.05 <= self.r_inner <= 0.95):
            raise ValueError(
                f"inner radius must lie in [0.05, 0.95], got {self.r_inner}"
            )
        if self.n_radial < 16 or self.n_angular < 16:
            raise ValueError("quadrature resolution too small (min 16)")

    def radial_rule(self):
        return _radial_rule(self.r_inner, self.n_radial)

    def theta(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.n_angular) / self.n_angular

    def area(self) -> float:
        return math.pi * (1.0 - self.r_inner**2)


@lru_cache(maxsize=32)
def _radial_rule(r_inner: float, n: int):
    rule = gauss_legendre(n, r_inner, 1.0)
    return rule.nodes, rule.weights


def _integrate(geom: AnnulusGeometry, values: np.ndarray) -> float:
    """Quadrature of a (n_radial, n_angular) sample table over the annulus."""
    r, wr = geom.radial_rule()
    wtheta = 2.0 * np.pi / geom.n_angular
    return float(np.sum((wr * r) @ values) * wtheta)


def _sample(geom: AnnulusGeometry, f, what: str = "value") -> np.ndarray:
    r, _ = geom.radial_rule()
    th = geom.theta()
    return np.asarray(f(r[:, None], th[None, :], what), dtype=float)


# ---------------------------------------------------------------------------
# harmonic basis with zero inner-circle flux


@dataclass(frozen=True)
class HarmonicElement:
    """One L2-normalized zero-flux harmonic: const or r^(+-k) trig."""

    k: int
    parity: str  # "cos" | "sin"; k = 0 is the constant, parity "cos"
    expo: int  # +k or -k (0 for the constant)
    scale: float

    def __call__(self, r, theta, what: str = "value"):
        r = np.asarray(r, dtype=float)
        theta = np.asarray(theta, dtype=float)
        k, e = self.k, self.expo
        if what == "value":
            rad = self.scale * r**e
            ang = np.cos(k * theta) if self.parity == "cos" else np.sin(k * theta)
        elif what == "d_r":
            rad = self.scale * e * r ** (e - 1) if e != 0 else np.zeros_like(r)
            ang = np.cos(k * theta) if self.parity == "cos" else np.sin(k * theta)
        elif what == "d_theta":
            rad = self.scale * r**e
            ang = (
                -k * np.sin(k * theta)
                if self.parity == "cos"
                else k * np.cos(k * theta)
            )
        else:
            raise ValueError(f"unknown what: {what!r}")
        return rad * ang


def harmonic_basis(geom: AnnulusGeometry, degree: int):
    """Zero-flux harmonics up to angular degree: {1, r^(+-k) trig}.

    log r is excluded by construction: it alone carries inner flux.
    Every element is normalized to unit L2 norm over the annulus.
    """
    if degree < 0:
        raise ValueError("degree must be nonnegative")
    R = geom.r_inner
    out = []

    def nrm(expo: int, k: int) -> float:
        # int r^(2e) r dr over (R, 1), times the angular factor
        p = 2 * expo + 2
        radial = math.log(1.0 / R) if p == 0 else (1.0 - R**p) / p
        ang = 2.0 * math.pi if k == 0 else math.pi
        return 1.0 / math.sqrt(radial * ang)

    out.append(HarmonicElement(0, "cos", 0, nrm(0, 0)))
    for k in range(1, degree + 1):
        for expo in (k, -k):
            s = nrm(expo, k)
            out.append(HarmonicElement(k, "cos", expo, s))
            out.append(HarmonicElement(k, "sin", expo, s))
    return tuple(out)


@dataclass
class ProjectedField:
    """f minus its least-squares component in the harmonic basis."""

    base: object
    basis: tuple
    coeffs: np.ndarray
    condition: float

    def __call__(self, r, theta, what: str = "value"):
        vals = np.asarray(self.base(r, theta, what), dtype=float)
        for c, h in zip(self.coeffs, self.basis):
            if c != 0.0:
                vals = vals - c * h(r, theta, what)
        return vals


def bergman_project(geom: AnnulusGeometry, f, degree: int = 8) -> ProjectedField:
    """L2-orthogonal removal of the zero-flux harmonic content of f.

    Least squares in the harmonic basis; the Gram condition number is
    reported and values above 1e12 are an error (the raw monomials
    degenerate for thin or strongly off-center bases).
    """
    basis = harmonic_basis(geom, degree)
    r, wr = geom.radial_rule()
    th = geom.theta()
    wtheta = 2.0 * np.pi / geom.n_angular
    w = (wr * r)[:, None] * wtheta
    tables = [h(r[:, None], th[None, :]) for h in basis]
    fv = _sample(geom, f)
    n = len(basis)
    H = np.empty((n, n))
    b = np.empty(n)
    for i in range(n):
        b[i] = float(np.sum(w * tables[i] * fv))
        for j in range(i, n):
            H[i, j] = H[j, i] = float(np.sum(w * tables[i] * tables[j]))
    cond = float(np.linalg.cond(H))
    if cond > 1e12:
        raise RuntimeError(
            f"harmonic basis is ill-conditioned (cond = {cond:.3e} > 1e12)"
        )
    coeffs = np.linalg.solve(H, b)
    return ProjectedField(base=f, basis=basis, coeffs=coeffs, condition=cond)


# ---------------------------------------------------------------------------
# circulation generator and its projection


@dataclass(frozen=True)
class XiFunction:
    """xi = log(r) / 2pi: harmonic, zero outer trace, inner flux -1."""

    geom: AnnulusGeometry

    def __call__(self, r, theta=None, what: str = "value"):
        r = np.asarray(r, dtype=float)
        if what == "value":
            vals = np.log(r) / (2.0 * np.pi)
        elif what == "d_r":
            vals = 1.0 / (2.0 * np.pi * r)
        elif what == "d_theta":
            vals = np.zeros_like(r)
        else:
            raise ValueError(f"unknown what: {what!r}")
        if theta is not None:
            vals = np.broadcast_to(
                vals, np.broadcast(r, np.asarray(theta, dtype=float)).shape
            ).copy()
        return vals

    def inner_flux(self) -> float:
        """Quadrature of the outward-from-fluid normal derivative at r = R."""
        R = self.geom.r_inner
        th = self.geom.theta()
        # n = -e_r on the inner circle
        integrand = -self(np.full_like(th, R), th, "d_r")
        return float(np.sum(integrand) * (2.0 * np.pi / th.size) * R)


def xi_circulation(geom: AnnulusGeometry) -> XiFunction:
    return XiFunction(geom)


def omega_big(geom: AnnulusGeometry, xi: XiFunction, degree: int = 8) -> ProjectedField:
    """Omega = P xi: same inner flux as xi, orthogonal to zero-flux harmonics.

    Since xi is radial and harmonic, only the constant component is
    removed, but the least-squares route goes through the full basis so
    the orthogonality is a computed fact rather than an assumption.
    """
    return bergman_project(geom, xi, degree)


# ---------------------------------------------------------------------------
# Dirichlet trace split and the zeta pairing


def _trace_fourier(values: np.ndarray, degree: int):
    """Cos/sin trace coefficients (degree+1,) from uniform samples."""
    M = values.size
    th = 2.0 * np.pi * np.arange(M) / M
    cos_c = np.empty(degree + 1)
    sin_c = np.zeros(degree + 1)
    for k in range(degree + 1):
        wgt = 1.0 / M if k == 0 else 2.0 / M
        cos_c[k] = wgt * float(values @ np.cos(k * th))
        if k >= 1:
            sin_c[k] = wgt * float(values @ np.sin(k * th))
    return cos_c, sin_c


@dataclass
class _HarmonicExtension:
    """Sum of a constant and r^(+-k) trig terms matching boundary traces."""

    terms: list  # (k, parity, c_plus, c_minus); k = 0 stores (0, "cos", a, 0)

    def __call__(self, r, theta, what: str = "value"):
        r = np.asarray(r, dtype=float)
        theta = np.asarray(theta, dtype=float)
        out = np.zeros(np.broadcast(r, theta).shape)
        for k, parity, cp, cm in self.terms:
            if k == 0:
                if what == "value":
                    out = out + cp
                continue
            if what == "value":
                rad = cp * r**k + cm * r ** (-k)
                ang = np.cos(k * theta) if parity == "cos" else np.sin(k * theta)
            elif what == "d_r":
                rad = cp * k * r ** (k - 1) - cm * k * r ** (-k - 1)
                ang = np.cos(k * theta) if parity == "cos" else np.sin(k * theta)
            elif what == "d_theta":
                rad = cp * r**k + cm * r ** (-k)
                ang = (
                    -k * np.sin(k * theta) if parity == "cos" else k * np.cos(k * theta)
                )
            else:
                raise ValueError(f"unknown what: {what!r}")
            out = out + rad * ang
        return out


@dataclass
class Q1Split:
    """omega + harmonic extension: zero outer trace, constant inner trace."""

    base: object
    extension: _HarmonicExtension
    inner_constant: float

    def __call__(self, r, theta, what: str = "value"):
        return np.asarray(self.base(r, theta, what), dtype=float) + self.extension(
            r, theta, what
        )


def q1_dirichlet_split(geom: AnnulusGeometry, omega, degree: int = 8) -> Q1Split:
    """Correct omega by zero-flux harmonics into the stream trace class.

    The correction h solves (omega + h)|_{r=1} = 0 exactly per angular
    mode up to the given degree, and (omega + h)|_{r=R} = constant; for
    k >= 1 both traces are matched (two coefficients per mode), for
    k = 0 only the outer trace can be matched and the inner constant is
    whatever remains.
    """
    R = geom.r_inner
    th = geom.theta()
    w1 = np.asarray(omega(np.ones_like(th), th, "value"), dtype=float)
    wR = np.asarray(omega(np.full_like(th, R), th, "value"), dtype=float)
    c1, s1 = _trace_fourier(w1, degree)
    cR, sR = _trace_fourier(wR, degree)
    terms = [(0, "cos", -c1[0], 0.0)]
    inner_constant = cR[0] - c1[0]
    for k in range(1, degree + 1):
        A = np.array([[1.0, 1.0], [R**k, R ** (-k)]])
        for parity, outer, inner in (("cos", c1[k], cR[k]), ("sin", s1[k], sR[k])):
            if outer == 0.0 and inner == 0.0:
                continue
            cp, cm = np.linalg.solve(A, np.array([-outer, -inner]))
            terms.append((k, parity, cp, cm))
    return Q1Split(base=omega, extension=_HarmonicExtension(terms), inner_constant=inner_constant)


def zeta_pairing(
    geom: AnnulusGeometry, xi: XiFunction, omega, degree: int = 8, method: str = "volume"
) -> float:
    """<zeta, omega> = -(grad xi, grad Q1 omega), or its boundary form.

    The gradient of xi is radial, so the volume route reduces to a
    weighted quadrature of the radial derivative of the Dirichlet part;
    the boundary route uses that Q1 omega is constant on the inner
    circle and the xi flux is -1, giving exactly that constant.
    """
    split = q1_dirichlet_split(geom, omega, degree)
    if method == "boundary":
        R = geom.r_inner
        th = geom.theta()
        vals = split(np.full_like(th, R), th, "value")
        return float(np.mean(vals))
    if method != "volume":
        raise ValueError(f"unknown method: {method!r}")
    r, wr = geom.radial_rule()
    th = geom.theta()
    dq = split(r[:, None], th[None, :], "d_r")
    xi_r = xi(r, None, "d_r")  # 1 / (2 pi r)
    wtheta = 2.0 * np.pi / geom.n_angular
    return -float(np.sum((wr * r * xi_r) @ dq) * wtheta)


# ---------------------------------------------------------------------------
# Newtonian potential boundary report


@dataclass(frozen=True)
class BoundaryReport:
    outer_max: float
    inner_stddev: float
    normal_max: float


def newtonian_bs_annulus(
    geom: AnnulusGeometry,
    omega,
    degree: int = 8,
    n_boundary: int = 64,
    fd_step: float = 1e-2,
) -> BoundaryReport:
    """Certify the boundary behavior of the Newtonian potential of omega.

    For data orthogonal to every zero-flux harmonic the log-kernel
    potential must vanish on the outer circle, be constant on the inner
    one, and have zero normal derivative there; the report carries the
    three measured defects.  The normal derivative is sampled by finite
    differences along the inward normal, through the hole where the
    potential must stay constant (it is C^1 across the interface, so
    flatness there certifies the boundary condition).  Inputs failing
    the orthogonality precondition (relative component above 1e-8) are
    rejected.
    """
    if not 0.0 < fd_step <= geom.r_inner / 8.0:
        raise ValueError(
            f"fd_step must lie in (0, r_inner/8], got {fd_step}"
        )
    basis = harmonic_basis(geom, degree)
    fv = _sample(geom, omega)
    norm = math.sqrt(abs(_integrate(geom, fv * fv)))
    if norm == 0.0:
        return BoundaryReport(0.0, 0.0, 0.0)
    r, wr = geom.radial_rule()
    th = geom.theta()
    w = (wr * r)[:, None] * (2.0 * np.pi / geom.n_angular)
    for h in basis:
        comp = float(np.sum(w * h(r[:, None], th[None, :]) * fv))
        if abs(comp) > 1e-8 * norm:
            raise ValueError(
                "omega is not orthogonal to the zero-flux harmonics "
                f"(component {comp:.3e} against k={h.k} {h.parity} r^{h.expo})"
            )
    # tensor quadrature nodes as points in the plane
    xs = (r[:, None] * np.cos(th)[None, :]).ravel()
    ys = (r[:, None] * np.sin(th)[None, :]).ravel()
    dens = (w * fv).ravel()

    def potential(px, py):
        d2 = (xs - px) ** 2 + (ys - py) ** 2
        d2 = np.maximum(d2, 1e-280)
        return float(dens @ (0.5 * np.log(d2))) / (2.0 * np.pi)

    R = geom.r_inner
    angles = 2.0 * np.pi * np.arange(n_boundary) / n_boundary
    outer = np.array([potential(np.cos(a), np.sin(a)) for a in angles])
    inner = np.array([potential(R * np.cos(a), R * np.sin(a)) for a in angles])
    normal = np.empty(n_boundary)
    for i, a in enumerate(angles):
        c, s = np.cos(a), np.sin(a)
        chain = [potential((R - m * fd_step) * c, (R - m * fd_step) * s) for m in range(5)]
        normal[i] = max(
            abs(chain[m + 1] - chain[m]) / fd_step for m in range(4)
        )
    return BoundaryReport(
        outer_max=float(np.max(np.abs(outer))),
        inner_stddev=float(np.std(inner)),
        normal_max=float(np.max(np.abs(normal))),
    )


# ---------------------------------------------------------------------------
# dense Galerkin spectra


def _legendre_tables(n_poly: int, R: float, nodes: np.ndarray, max_deriv: int = 2):
    """Values and derivatives of the mapped Legendre family at the nodes."""
    from numpy.polynomial import Legendre

    polys = [Legendre.basis(i, domain=[R, 1.0]) for i in range(n_poly + 1)]
    tables = []
    for d in range(max_deriv + 1):
        tables.append(np.stack([p.deriv(d)(nodes) if d else p(nodes) for p in polys]))
    ends = {}
    for point, label in ((R, "R"), (1.0, "1")):
        for d in range(max_deriv + 2):
            ends[(label, d)] = np.array(
                [p.deriv(d)(point) if d else p(point) for p in polys]
            )
    return tables, ends


@dataclass
class GalerkinOperator:
    """One constrained trial block: symmetric forms plus constraint rows."""

    mode: int
    space: str  # "S" | "V" | "Z"
    stiffness: np.ndarray
    mass: np.ndarray
    constraints: np.ndarray


@dataclass
class SpectraResult:
    lambda_S: float
    lambda_V: float
    lambda_Z: float
    per_mode_S: dict
    per_mode_V: dict
    per_mode_Z: dict
    operators: list = field(default_factory=list)


def _constraint_rows(ends, kind: str, k: int) -> np.ndarray:
    rows = [ends[("1", 0)]]
    if kind == "S":
        rows.append(ends[("1", 1)])
        rows.append(ends[("R", 1)])
        if k >= 1:
            rows.append(ends[("R", 0)])
    elif kind == "Z":
        if k >= 1:
            rows.append(ends[("R", 0)])
        else:
            rows.append(ends[("R", 1)])
    elif kind == "V":
        if k >= 1:
            rows.append(ends[("R", 0)])
    else:
        raise ValueError(f"unknown space kind: {kind!r}")
    return np.stack(rows)


def galerkin_spectra(
    geom: AnnulusGeometry, n_poly: int = 24, k_max: int = 4, n_eigs: int = 4
) -> SpectraResult:
    """Lowest eigenvalues of the three annulus Stokes quotients per mode.

    S: min ||Delta psi||^2 / ||grad psi||^2 over clamped streams;
    Z: the same quotient with only the traces (and the k=0 inner flux)
    constrained; V: min ||grad psi||^2 / ||P psi||^2 over the stream
    trace class, realized through the projected mass so that the
    vorticity-side operator never needs an explicit inverse.  S and V
    produce the same lowest value; the Z value can only sit below.
    """
    if n_poly < 6 or k_max < 3:
        raise ValueError("trial space too small (need n_poly >= 6, k_max >= 3)")
    R = geom.r_inner
    nq = 2 * n_poly + 16
    rule = gauss_legendre(nq, R, 1.0)
    rq, wq = rule.nodes, rule.weights
    (T0, T1, T2), ends = _legendre_tables(n_poly, R, rq)
    per_S, per_V, per_Z = {}, {}, {}
    operators = []
    for k in range(k_max + 1):
        lap = T2 + T1 / rq - (k * k) * T0 / rq**2
        grad_w = wq * rq
        G = (T1 * grad_w) @ T1.T + (k * k) * ((T0 * (wq / rq)) @ T0.T)
        D = (lap * grad_w) @ lap.T
        M2 = (T0 * grad_w) @ T0.T

        def reduced(kind):
            C = _constraint_rows(ends, kind, k)
            N = null_space(C)
            if N.shape[1] == 0:
                raise RuntimeError(
                    f"constraints exhaust the trial space (mode {k}, {kind})"
                )
            return C, N

        try:
            # S: pencil (D, G) on the clamped space
            C_S, N_S = reduced("S")
            Gs = N_S.T @ G @ N_S
            Ds = N_S.T @ D @ N_S
            vals_S = np.sort(eigh(Ds, Gs, eigvals_only=True))[:n_eigs]
            operators.append(GalerkinOperator(k, "S", Ds, Gs, C_S))

            # Z: same pencil, weaker constraints
            C_Z, N_Z = reduced("Z")
            Gz = N_Z.T @ G @ N_Z
            Dz = N_Z.T @ D @ N_Z
            vals_Z = np.sort(eigh(Dz, Gz, eigvals_only=True))[:n_eigs]
            operators.append(GalerkinOperator(k, "Z", Dz, Gz, C_Z))

            # V: pencil (G, projected mass), solved inverted since the
            # projected mass is only semidefinite up to approximation
            C_V, N_V = reduced("V")
            if k == 0:
                hs = [np.ones_like(rq)]
            else:
                hs = [rq**k, rq ** (-k)]
            Hh = np.array([[float(np.sum(grad_w * a * b)) for b in hs] for a in hs])
            Ch = np.array([(T0 * grad_w) @ h for h in hs]).T  # (n+1, nh)
            MP = M2 - Ch @ np.linalg.solve(Hh, Ch.T)
            Gv = N_V.T @ G @ N_V
            MPv = N_V.T @ MP @ N_V
            mu = np.sort(eigh(MPv, Gv, eigvals_only=True))
            vals_V = np.sort(1.0 / mu[mu > 0][-n_eigs:])
            operators.append(GalerkinOperator(k, "V", Gv, MPv, C_V))
        except np.linalg.LinAlgError as exc:
            raise RuntimeError(f"Galerkin assembly failed at mode {k}: {exc}") from exc
        per_S[k] = np.asarray(vals_S)
        per_Z[k] = np.asarray(vals_Z)
        per_V[k] = np.asarray(vals_V)
    return SpectraResult(
        lambda_S=min(float(v[0]) for v in per_S.values()),
        lambda_V=min(float(v[0]) for v in per_V.values()),
        lambda_Z=min(float(v[0]) for v in per_Z.values()),
        per_mode_S=per_S,
        per_mode_V=per_V,
        per_mode_Z=per_Z,
        operators=operators,
    )


# ---------------------------------------------------------------------------
# Stokes evolution with circulation (k = 0 sector)


def _cumulative_moment(geom: AnnulusGeometry, omega0, targets: np.ndarray) -> np.ndarray:
    """int_R^t omega(s) s ds at each ascending target radius.

    This is the zero-circulation azimuthal velocity of a radial
    vorticity profile, up to the 1/r factor applied by the caller.
    """
    xg, wg = np.polynomial.legendre.leggauss(16)
    out = np.empty(targets.size)
    acc = 0.0
    left = geom.r_inner
    for i, t in enumerate(targets):
        half = 0.5 * (t - left)
        mid = 0.5 * (t + left)
        s = mid + half * xg
        vals = np.asarray(omega0(s, np.zeros_like(s), "value"), dtype=float)
        acc += half * float(wg @ (vals * s))
        out[i] = acc
        left = t
    return out


@dataclass
class CirculationRun:
    times: np.ndarray
    gamma: np.ndarray
    flux: np.ndarray  # nu times the inner-circle vorticity flux
    lamb_residual: float
    scale: float
    burn_in: float

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as f:
            f.write("t,gamma,flux\n")
            for t, g, q in zip(self.times, self.gamma, self.flux):
                f.write(f"{t:.17g},{g:.17g},{q:.17g}\n")


def annulus_stokes_circulation(
    geom: AnnulusGeometry,
    gamma0: float,
    nu: float,
    t_final: float,
    omega0=None,
    n_poly: int = 28,
    n_out: int = 80,
    burn_in: float | None = None,
) -> CirculationRun:
    """Linear Stokes run in the axisymmetric sector, tracking circulation.

    The state is the azimuthal velocity profile u(r, t) with the heat
    dynamics d_t u = nu d_r omega, omega = u' + u/r, discretized by the
    symmetric vorticity form int omega_u omega_v r dr on polynomial
    trials.  Constraint rows select the sector: a circulation-free
    state (gamma0 = 0) is pinned at both walls, so the inner-circle
    line integral of the velocity vanishes identically and zero
    circulation is invariant by construction.  With circulation only
    the outer wall is pinned; the free inner value leaves omega(R) = 0
    as the natural condition (the wall sheet has shed) and the
    circulation decays by the vorticity flux off the wall.  The state
    advances by matrix exponential of the dense generator.

    The circulation carrier is the compatible profile 1/r - r (scaled
    to the requested line integral at the inner wall); its vorticity is
    the constant harmonic, so the regular vorticity part of the initial
    state is zero.  The optional omega0 callable supplies regular
    initial vorticity; only its axisymmetric part participates, sampled
    at theta = 0.

    At each output time the run records Gamma(t), the line integral of
    the velocity around the inner circle, and nu times the vorticity
    flux through it (radial normal).  The Lamb residual is the largest
    |dGamma/dt - flux| over the interior output times past the burn-in
    window (default 0.16 (1-R)^2 / nu, capped at half the horizon: the
    natural condition at the inner wall only holds weakly at t = 0 and
    the first moments of the run relax it), with the time derivative
    taken by centered differences, divided by `scale`.
    """
    if not (nu > 0.0):
        raise ValueError(f"viscosity must be positive, got {nu}")
    if not (t_final > 0.0):
        raise ValueError(f"horizon must be positive, got {t_final}")
    if n_out < 5:
        raise ValueError("need at least 5 output times")
    R = geom.r_inner
    nq = 2 * n_poly + 16
    rule = gauss_legendre(nq, R, 1.0)
    rq, wq = rule.nodes, rule.weights
    (T0, T1, T2), ends = _legendre_tables(n_poly, R, rq)

    rows = [ends[("1", 0)]]
    if gamma0 == 0.0:
        rows.append(ends[("R", 0)])
    N = null_space(np.stack(rows))
    rw = wq * rq
    omega_t = T1 + T0 / rq  # vorticity of each trial
    M = N.T @ ((T0 * rw) @ T0.T) @ N
    S = N.T @ ((omega_t * rw) @ omega_t.T) @ N
    gen = -np.linalg.solve(M, S)

    # initial velocity: circulation carrier plus the zero-circulation
    # velocity of the optional regular vorticity
    u0 = gamma0 / (2.0 * np.pi * (1.0 - R * R)) * (1.0 / rq - rq)
    if omega0 is not None:
        u0 = u0 + _cumulative_moment(geom, omega0, rq) / rq
    c = np.linalg.solve(M, N.T @ ((T0 * rw) @ u0))

    # circulation and flux read-out rows at the inner wall
    gamma_row = 2.0 * np.pi * R * (ends[("R", 0)] @ N)
    omega_d_end = ends[("R", 2)] + ends[("R", 1)] / R - ends[("R", 0)] / R**2
    flux_row = nu * 2.0 * np.pi * R * (omega_d_end @ N)

    if burn_in is None:
        burn_in = min(0.16 * (1.0 - R) ** 2 / nu, 0.5 * t_final)
    elif burn_in < 0.0 or burn_in > 0.5 * t_final:
        raise ValueError("burn_in must lie in [0, t_final / 2]")

    dt = t_final / n_out
    prop = expm(dt * nu * gen)
    times = np.empty(n_out + 1)
    gamma = np.empty(n_out + 1)
    flux = np.empty(n_out + 1)
    state = c.copy()
    for m in range(n_out + 1):
        times[m] = m * dt
        gamma[m] = float(gamma_row @ state)
        flux[m] = float(flux_row @ state)
        if m < n_out:
            state = prop @ state

    dgamma = (gamma[2:] - gamma[:-2]) / (2.0 * dt)
    keep = times[1:-1] >= burn_in
    resid = np.abs(dgamma[keep] - flux[1:-1][keep])
    scale = max(
        float(np.max(np.abs(flux[1:-1][keep]))),
        float(np.max(np.abs(dgamma[keep]))),
        nu * max(1.0, float(np.max(np.abs(gamma)))),
    )
    return CirculationRun(
        times=times,
        gamma=gamma,
        flux=flux,
        lamb_residual=float(np.max(resid)) / scale,
        scale=scale,
        burn_in=float(burn_in),
    )
