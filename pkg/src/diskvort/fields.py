"""Spectral fields on the disk: norms, projections, Biot-Savart, grids.

A ``SpectralField`` stores coefficients against an ``EigenTable`` with a
``kind`` tag.  Vorticity coefficients w_n expand in the eigenfunctions
e_n; stream coefficients t_n expand in the lifted dictionary

    phi_n(r, theta) = c_n [J_k(sqrt(lam) r) - J_k(sqrt(lam)) r^k] trig,

which satisfies Delta phi_n = -lam_n e_n and has both value and normal
derivative zero at r = 1.  That makes the diagonal maps exact:

* ``biot_savart``: t_n = -w_n / lam_n solves Delta psi = omega with the
  clamped boundary conditions,
* ``laplacian``: multiply by -lam_n, the exact inverse,
* ``norm_at(field, m)``: sqrt(sum lam^m w^2) for vorticity and
  sqrt(sum lam^{m+1} t^2) for streams, so the Biot-Savart isometry
  norm_at(omega, m) == norm_at(psi, m+1) holds to the last bit.

Grid work uses a Gauss-Legendre radial rule times a uniform angular
rule.  ``from_grid`` is the discrete orthogonal decomposition into the
eigen-span, the harmonic span (low-degree harmonic polynomials), and a
reported remainder; nothing is dropped silently.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field as dc_field

import numpy as np

from .specfun import bessel_j, gauss_legendre
from .spectrum import EigenTable, ModeIndex

__all__ = [
    "SpectralField",
    "HarmonicExpansion",
    "PolarGrid",
    "GridField",
    "CompositeField",
    "NewtonianResult",
    "norm_at",
    "biot_savart",
    "laplacian",
    "to_grid",
    "from_grid",
    "newtonian_potential",
    "greens_potential",
    "q1_split",
]

_KINDS = ("vorticity", "stream")


class SpectralField:
    """Coefficient vector over an EigenTable plus a vorticity/stream tag."""

    __slots__ = ("table", "coeffs", "kind")

    def __init__(self, table: EigenTable, coeffs, kind: str):
        if kind not in _KINDS:
            raise ValueError(f"kind must be one of {_KINDS}, got {kind!r}")
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (len(table),):
            raise ValueError(
                f"coefficient shape {coeffs.shape} does not match table with "
                f"{len(table)} modes"
            )
        self.table = table
        self.coeffs = coeffs
        self.kind = kind

    @classmethod
    def zeros(cls, table: EigenTable, kind: str = "vorticity") -> "SpectralField":
        return cls(table, np.zeros(len(table)), kind)

    @classmethod
    def from_mode(
        cls,
        table: EigenTable,
        mode: ModeIndex,
        amplitude: float = 1.0,
        kind: str = "vorticity",
    ) -> "SpectralField":
        c = np.zeros(len(table))
        c[table.position(mode)] = amplitude
        return cls(table, c, kind)

    def copy(self) -> "SpectralField":
        return SpectralField(self.table, self.coeffs.copy(), self.kind)

    def _compatible(self, other: "SpectralField") -> None:
        if not isinstance(other, SpectralField):
            raise TypeError(f"expected SpectralField, got {type(other).__name__}")
        if other.table is not self.table:
            raise ValueError("fields built on different tables cannot be combined")
        if other.kind != self.kind:
            raise ValueError(f"cannot combine kind {self.kind!r} with {other.kind!r}")

    def __add__(self, other: "SpectralField") -> "SpectralField":
        self._compatible(other)
        return SpectralField(self.table, self.coeffs + other.coeffs, self.kind)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        self._compatible(other)
        return SpectralField(self.table, self.coeffs - other.coeffs, self.kind)

    def __mul__(self, scalar) -> "SpectralField":
        return SpectralField(self.table, self.coeffs * float(scalar), self.kind)

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralField":
        return SpectralField(self.table, -self.coeffs, self.kind)

    def to_json(self) -> str:
        rows = [
            {"k": m.k, "j": m.j, "parity": m.parity, "coeff": self.coeffs[i]}
            for i, m in enumerate(self.table.modes)
        ]
        return json.dumps(rows, indent=1)

    @classmethod
    def from_json(cls, table: EigenTable, text: str, kind: str = "vorticity"):
        rows = json.loads(text)
        c = np.zeros(len(table))
        for row in rows:
            m = ModeIndex(row["k"], row["j"], row["parity"])
            c[table.position(m)] = row["coeff"]
        return cls(table, c, kind)


def norm_at(field: SpectralField, index: int) -> float:
    """Scale-of-spaces norm: level ``index`` of the vorticity chain, or of
    the stream chain for stream-tagged fields (one power of lambda up)."""
    if not isinstance(index, (int, np.integer)) or not (-4 <= index <= 4):
        raise ValueError(f"norm index must be an integer in [-4, 4], got {index!r}")
    power = index if field.kind == "vorticity" else index + 1
    return float(np.sqrt(np.sum(field.table.lam**power * field.coeffs**2)))


def biot_savart(omega: SpectralField) -> SpectralField:
    """Stream function with Delta psi = omega, clamped boundary."""
    if omega.kind != "vorticity":
        raise ValueError("biot_savart expects a vorticity field")
    return SpectralField(omega.table, -omega.coeffs / omega.table.lam, "stream")


def laplacian(psi: SpectralField) -> SpectralField:
    """Exact inverse of biot_savart: coefficients scaled by -lambda."""
    if psi.kind != "stream":
        raise ValueError("laplacian expects a stream field")
    return SpectralField(psi.table, -psi.table.lam * psi.coeffs, "vorticity")


# ---------------------------------------------------------------------------
# harmonic expansions


def _harm_const(k: int) -> float:
    if k == 0:
        return 1.0 / np.sqrt(np.pi)
    return np.sqrt((2.0 * k + 2.0) / np.pi)


@dataclass
class HarmonicExpansion:
    """Low-degree harmonic polynomial in the L^2-orthonormal basis
    h_0 = 1/sqrt(pi), h_k = sqrt((2k+2)/pi) r^k {cos,sin}(k theta)."""

    a: np.ndarray  # cosine coefficients, index = angular degree
    b: np.ndarray  # sine coefficients; b[0] is structurally zero

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        if self.a.shape != self.b.shape or self.a.ndim != 1 or self.a.size < 1:
            raise ValueError("coefficient arrays must be equal-length 1-d, size >= 1")
        if self.b[0] != 0.0:
            raise ValueError("b[0] must be zero: there is no sin(0*theta) function")

    @classmethod
    def zeros(cls, degree: int) -> "HarmonicExpansion":
        return cls(np.zeros(degree + 1), np.zeros(degree + 1))

    @property
    def degree(self) -> int:
        return self.a.size - 1

    def copy(self) -> "HarmonicExpansion":
        return HarmonicExpansion(self.a.copy(), self.b.copy())

    def norm_l2(self) -> float:
        return float(np.sqrt(np.sum(self.a**2) + np.sum(self.b**2)))

    def __add__(self, other: "HarmonicExpansion") -> "HarmonicExpansion":
        n = max(self.degree, other.degree) + 1
        a, b = np.zeros(n), np.zeros(n)
        a[: self.a.size] += self.a
        b[: self.b.size] += self.b
        a[: other.a.size] += other.a
        b[: other.b.size] += other.b
        return HarmonicExpansion(a, b)

    def __sub__(self, other: "HarmonicExpansion") -> "HarmonicExpansion":
        return self + (-1.0) * other

    def __mul__(self, scalar) -> "HarmonicExpansion":
        return HarmonicExpansion(self.a * float(scalar), self.b * float(scalar))

    __rmul__ = __mul__

    def eval(self, r, theta, what: str = "value") -> np.ndarray:
        """Pointwise values (or d_r / d_theta) at broadcastable r, theta."""
        r = np.asarray(r, dtype=float)
        theta = np.asarray(theta, dtype=float)
        out = np.zeros(np.broadcast(r, theta).shape)
        for k in range(self.degree + 1):
            ak, bk = self.a[k], self.b[k]
            if ak == 0.0 and bk == 0.0:
                continue
            c = _harm_const(k)
            if what == "value":
                rad = c * r**k
                ang = ak * np.cos(k * theta) + bk * np.sin(k * theta)
            elif what == "d_r":
                rad = c * k * r ** (k - 1) if k >= 1 else np.zeros_like(r)
                ang = ak * np.cos(k * theta) + bk * np.sin(k * theta)
            elif what == "d_theta":
                rad = c * r**k
                ang = k * (-ak * np.sin(k * theta) + bk * np.cos(k * theta))
            else:
                raise ValueError(f"what must be value|d_r|d_theta, got {what!r}")
            out = out + rad * ang
        return out


# ---------------------------------------------------------------------------
# grids


class PolarGrid:
    """Gauss-Legendre (radial) x uniform (angular) tensor grid for one table.

    The angular count must beat the quadratic-nonlinearity aliasing bound
    max(2K+2, 3K+1).  Basis profiles and their radial derivatives are
    cached per angular wavenumber at construction.
    """

    def __init__(self, table: EigenTable, n_radial: int | None = None, n_angular: int | None = None):
        K, J = table.K, table.J
        if n_radial is None:
            n_radial = 2 * J + K + 8
        if n_angular is None:
            n_angular = 3 * K + 2
        floor = max(2 * K + 2, 3 * K + 1)
        if n_angular < floor:
            raise ValueError(
                f"angular count {n_angular} under aliasing floor {floor} for K={K}"
            )
        if n_radial < J + 2:
            raise ValueError(f"radial count {n_radial} too small for J={J}")
        self.table = table
        self.radial_rule = gauss_legendre(int(n_radial), 0.0, 1.0)
        self.r = self.radial_rule.nodes
        self.wr = self.radial_rule.weights
        self.n_radial = int(n_radial)
        self.n_angular = int(n_angular)
        self.theta = 2.0 * np.pi * np.arange(self.n_angular) / self.n_angular
        self.wtheta = 2.0 * np.pi / self.n_angular

        # positions grouped by (k, parity); row order = increasing j
        groups: dict[tuple[int, str], list[int]] = {}
        for i, m in enumerate(table.modes):
            groups.setdefault((m.k, m.parity), []).append(i)
        for pos in groups.values():
            pos.sort(key=lambda i: table.modes[i].j)
        self.groups = {key: np.array(pos) for key, pos in groups.items()}

        self._cos = {k: np.cos(k * self.theta) for k in range(K + 1)}
        self._sin = {k: np.sin(k * self.theta) for k in range(K + 1)}

        # radial profile stacks, shape (J, n_radial) per wavenumber
        r = self.r
        self._prof: dict[tuple[int, str, str], np.ndarray] = {}
        for k in range(K + 1):
            pos = self.groups[(k, "cos")]
            alpha = table.alpha[pos]
            cnorm = table.norm[pos]
            jk_at_1 = np.array([bessel_j(k, a) for a in alpha])
            jval = np.stack([bessel_j(k, a * r) for a in alpha])
            jder = np.stack([a * bessel_j(k, a * r, derivative=True) for a in alpha])
            rk = r**k
            rkm1 = r ** (k - 1) if k >= 1 else np.zeros_like(r)
            cn = cnorm[:, None]
            self._prof[(k, "vorticity", "value")] = cn * jval
            self._prof[(k, "vorticity", "d_r")] = cn * jder
            self._prof[(k, "stream", "value")] = cn * (jval - jk_at_1[:, None] * rk)
            self._prof[(k, "stream", "d_r")] = cn * (
                jder - k * jk_at_1[:, None] * rkm1
            )

    def node_polar(self):
        """Meshgrid arrays (n_radial, n_angular) of r and theta."""
        return np.meshgrid(self.r, self.theta, indexing="ij")

    def integrate(self, values: np.ndarray) -> float:
        """Disk integral of a sampled function (Jacobian r included)."""
        values = np.asarray(values)
        if values.shape != (self.n_radial, self.n_angular):
            raise ValueError("value shape does not match grid")
        return float(self.wtheta * np.dot(self.wr * self.r, values.sum(axis=1)))

    def inner(self, u: np.ndarray, v: np.ndarray) -> float:
        return self.integrate(np.asarray(u) * np.asarray(v))


@dataclass
class GridField:
    """Sampled values over a PolarGrid, row = radial node, column = angle."""

    grid: PolarGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n_radial, self.grid.n_angular):
            raise ValueError(
                f"value shape {self.values.shape} does not match grid "
                f"({self.grid.n_radial}, {self.grid.n_angular})"
            )

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as f:
            f.write("r,theta,value\n")
            for i, r in enumerate(self.grid.r):
                for m, t in enumerate(self.grid.theta):
                    f.write(f"{r:.17g},{t:.17g},{self.values[i, m]:.17g}\n")

    @classmethod
    def from_csv(cls, grid: PolarGrid, path) -> "GridField":
        data = np.loadtxt(path, delimiter=",", skiprows=1)
        if data.shape[0] != grid.n_radial * grid.n_angular:
            raise ValueError("csv row count does not match grid size")
        vals = data[:, 2].reshape(grid.n_radial, grid.n_angular)
        return cls(grid, vals)


def to_grid(field: SpectralField, grid: PolarGrid, what: str = "value") -> GridField:
    """Pointwise samples of the field or its exact analytic derivative."""
    if grid.table is not field.table:
        raise ValueError("grid was built for a different table")
    if what not in ("value", "d_r", "d_theta"):
        raise ValueError(f"what must be value|d_r|d_theta, got {what!r}")
    out = np.zeros((grid.n_radial, grid.n_angular))
    for (k, parity), pos in grid.groups.items():
        g = field.coeffs[pos]
        if not np.any(g):
            continue
        prof_what = "value" if what == "d_theta" else what
        radial = g @ grid._prof[(k, field.kind, prof_what)]
        if what == "d_theta":
            if k == 0:
                continue
            ang = -k * grid._sin[k] if parity == "cos" else k * grid._cos[k]
        else:
            ang = grid._cos[k] if parity == "cos" else grid._sin[k]
        out += np.outer(radial, ang)
    return GridField(grid, out)


def from_grid(values: GridField, table: EigenTable):
    """Discrete orthogonal decomposition of a sampled function.

    Returns ``(spectral, harmonic, residual)``: the projection onto the
    eigen-span, the projection onto harmonic polynomials of degree <= K,
    and the grid L^2 norm of what neither part represents.
    """
    grid = values.grid
    if grid.table is not table:
        raise ValueError("grid was built for a different table")
    v = values.values
    wtheta = grid.wtheta
    wr_r = grid.wr * grid.r

    coeffs = np.zeros(len(table))
    K = table.K
    a = np.zeros(K + 1)
    b = np.zeros(K + 1)
    for k in range(K + 1):
        for parity in ("cos",) if k == 0 else ("cos", "sin"):
            ang = grid._cos[k] if parity == "cos" else grid._sin[k]
            radial_signal = v @ (ang * wtheta)  # (n_radial,)
            pos = grid.groups[(k, parity)]
            prof = grid._prof[(k, "vorticity", "value")]
            coeffs[pos] = prof @ (wr_r * radial_signal)
            hk = _harm_const(k) * grid.r**k
            moment = float(np.dot(wr_r * hk, radial_signal))
            if parity == "cos":
                a[k] = moment
            else:
                b[k] = moment

    spectral = SpectralField(table, coeffs, "vorticity")
    harmonic = HarmonicExpansion(a, b)
    rr, tt = grid.node_polar()
    rec = to_grid(spectral, grid).values + harmonic.eval(rr, tt)
    residual = float(np.sqrt(max(grid.integrate((v - rec) ** 2), 0.0)))
    return spectral, harmonic, residual


# ---------------------------------------------------------------------------
# composite fields (eigen-span plus harmonic tail)


@dataclass
class CompositeField:
    """Sum of an eigen-span field and a harmonic polynomial tail."""

    spectral: SpectralField
    harmonic: HarmonicExpansion

    def sample(self, grid: PolarGrid, what: str = "value") -> np.ndarray:
        rr, tt = grid.node_polar()
        return to_grid(self.spectral, grid, what).values + self.harmonic.eval(
            rr, tt, what
        )

    def eval_boundary(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        table = self.spectral.table
        out = self.harmonic.eval(np.ones_like(theta), theta)
        for i, m in enumerate(table.modes):
            c = self.spectral.coeffs[i]
            if c == 0.0:
                continue
            trace = c * table.norm[i] * bessel_j(m.k, table.alpha[i])
            ang = np.cos(m.k * theta) if m.parity == "cos" else np.sin(m.k * theta)
            out = out + trace * ang
        return out


def q1_split(omega: SpectralField, harmonic: HarmonicExpansion | None = None):
    """Split off the harmonic extension of the boundary trace.

    Returns ``(dirichlet, extension)`` where ``extension`` is the
    harmonic polynomial matching the input's boundary trace and
    ``dirichlet = input - extension`` vanishes on the boundary.  The
    dirichlet part realizes the H^1_0 representative whose Bergman
    projection is the input's eigen-span part.
    """
    if omega.kind != "vorticity":
        raise ValueError("q1_split expects a vorticity-tagged field")
    table = omega.table
    K = table.K
    if harmonic is None:
        harmonic = HarmonicExpansion.zeros(K)
    if harmonic.degree > K:
        raise ValueError(
            f"harmonic degree {harmonic.degree} exceeds table angular bound {K}"
        )
    ta = np.zeros(K + 1)
    tb = np.zeros(K + 1)
    for i, m in enumerate(table.modes):
        c = omega.coeffs[i]
        if c == 0.0:
            continue
        trace = c * table.norm[i] * bessel_j(m.k, table.alpha[i])
        if m.parity == "cos":
            ta[m.k] += trace
        else:
            tb[m.k] += trace
    ext_a = np.array([ta[k] / _harm_const(k) for k in range(K + 1)])
    ext_b = np.array([tb[k] / _harm_const(k) for k in range(K + 1)])
    ext_b[0] = 0.0
    trace_ext = HarmonicExpansion(ext_a, ext_b)
    extension = trace_ext + harmonic
    dirichlet = CompositeField(omega.copy(), harmonic - extension)
    return dirichlet, extension


# ---------------------------------------------------------------------------
# Newtonian potential (verification quadrature, not a solver path)


@dataclass
class NewtonianResult:
    """Potential values plus per-point quadrature proximity flags."""

    values: np.ndarray
    near_node: np.ndarray  # True where the point sits closer than half a
    # radial cell to some quadrature node (accuracy degraded)


def newtonian_potential(omega_samples: GridField, eval_points) -> NewtonianResult:
    """psi(x) = (1/2pi) int ln|x - y| omega(y) dy by tensor quadrature.

    For admissible vorticities (no harmonic moments) this reproduces the
    clamped Biot-Savart stream inside the disk and vanishes outside.
    """
    grid = omega_samples.grid
    pts = np.atleast_2d(np.asarray(eval_points, dtype=float))
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("eval_points must have shape (n, 2)")
    rr, tt = grid.node_polar()
    ynodes = np.stack([(rr * np.cos(tt)).ravel(), (rr * np.sin(tt)).ravel()], axis=1)
    wq = (np.outer(grid.wr * grid.r, np.full(grid.n_angular, grid.wtheta))).ravel()
    dens = omega_samples.values.ravel()
    gaps = np.diff(grid.r)
    guard = 0.5 * float(np.min(gaps)) if gaps.size else 0.25
    vals = np.empty(pts.shape[0])
    flags = np.empty(pts.shape[0], dtype=bool)
    for i, p in enumerate(pts):
        d2 = np.sum((ynodes - p) ** 2, axis=1)
        dmin = np.sqrt(float(np.min(d2)))
        flags[i] = dmin < guard
        d2 = np.maximum(d2, 1e-280)
        vals[i] = float(np.dot(wq * dens, 0.5 * np.log(d2))) / (2.0 * np.pi)
    if np.any(flags):
        warnings.warn(
            "newtonian_potential: some evaluation points sit within half a "
            "radial cell of a quadrature node; those values are degraded",
            stacklevel=2,
        )
    return NewtonianResult(values=vals, near_node=flags)


def greens_potential(omega_samples: GridField, eval_points) -> NewtonianResult:
    """Stream function from the disk Green function (image-point kernel).

    G(x, y) = (1/2pi)[ln|x - y| - (1/2) ln(|x|^2|y|^2 - 2 x.y + 1)];
    the correction equals ln(|y| |x - y/|y|^2|) written in a form smooth
    through x = 0 and y = 0.  It is harmonic in y over the closed disk,
    so for admissible data the result matches the plain Newtonian
    potential.  Points must lie strictly inside the unit disk.
    """
    grid = omega_samples.grid
    pts = np.atleast_2d(np.asarray(eval_points, dtype=float))
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("eval_points must have shape (n, 2)")
    radii2 = np.sum(pts**2, axis=1)
    if np.any(radii2 >= 1.0):
        raise ValueError("greens_potential is defined for interior points only")
    rr, tt = grid.node_polar()
    ynodes = np.stack([(rr * np.cos(tt)).ravel(), (rr * np.sin(tt)).ravel()], axis=1)
    wq = (np.outer(grid.wr * grid.r, np.full(grid.n_angular, grid.wtheta))).ravel()
    dens = omega_samples.values.ravel()
    y2 = np.sum(ynodes**2, axis=1)
    gaps = np.diff(grid.r)
    guard = 0.5 * float(np.min(gaps)) if gaps.size else 0.25
    vals = np.empty(pts.shape[0])
    flags = np.empty(pts.shape[0], dtype=bool)
    for i, p in enumerate(pts):
        d2 = np.sum((ynodes - p) ** 2, axis=1)
        dmin = np.sqrt(float(np.min(d2)))
        flags[i] = dmin < guard
        d2 = np.maximum(d2, 1e-280)
        image = radii2[i] * y2 - 2.0 * (ynodes @ p) + 1.0
        kernel = 0.5 * (np.log(d2) - np.log(image))
        vals[i] = float(np.dot(wq * dens, kernel)) / (2.0 * np.pi)
    if np.any(flags):
        warnings.warn(
            "greens_potential: some evaluation points sit within half a "
            "radial cell of a quadrature node; those values are degraded",
            stacklevel=2,
        )
    return NewtonianResult(values=vals, near_node=flags)
