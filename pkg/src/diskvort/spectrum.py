"""Eigenvalue table of the vorticity Stokes operator on the unit disk.

The eigenfunctions are

    e_{k,j}(r, theta) = c_{k,j} J_k(sqrt(lambda) r) {cos, sin}(k theta),

where sqrt(lambda_{k,j}) = alpha_{k+1,j} is the j-th positive zero of
J_{k+1}.  That zero condition is exactly orthogonality to the harmonic
polynomial r^k {cos,sin}(k theta): by the standard recurrence,

    int_0^1 J_k(alpha r) r^{k+1} dr = J_{k+1}(alpha) / alpha,

so the mode sits in the closed span of admissible vorticities (no
harmonic component) if and only if alpha kills J_{k+1}.  The smallest
eigenvalue is alpha_{1,1}^2 = 14.6819706...

Normalization uses int_0^1 J_k(alpha r)^2 r dr = J_k(alpha)^2 / 2, which
holds when J_{k+1}(alpha) = 0, giving |c| = 1/(sqrt(pi)|J_0(alpha)|) for
k = 0 and sqrt(2/pi)/|J_k(alpha)| for k >= 1.  The sign makes the radial
profile positive at r = 1/2 (fallback +1 if it vanishes there).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .specfun import bessel_j, bessel_j_zero, gauss_legendre

__all__ = [
    "ModeIndex",
    "EigenTable",
    "build_table",
    "eigenfunction_eval",
    "membership_residuals",
]

_PARITIES = ("cos", "sin")


@dataclass(frozen=True)
class ModeIndex:
    """Angular wavenumber k, radial index j (1-based), angular parity."""

    k: int
    j: int
    parity: str

    def __post_init__(self):
        if self.k < 0:
            raise ValueError(f"angular wavenumber must be >= 0, got {self.k}")
        if self.j < 1:
            raise ValueError(f"radial index must be >= 1, got {self.j}")
        if self.parity not in _PARITIES:
            raise ValueError(f"parity must be 'cos' or 'sin', got {self.parity!r}")
        if self.k == 0 and self.parity == "sin":
            raise ValueError("k = 0 modes are radial; only 'cos' parity exists")


def _norm_const(k: int, alpha: float) -> float:
    jk = bessel_j(k, alpha)
    base = 1.0 / (np.sqrt(np.pi) * abs(jk)) if k == 0 else np.sqrt(2.0 / np.pi) / abs(jk)
    probe = bessel_j(k, 0.5 * alpha)
    if probe < 0.0:
        return -base
    return base


class EigenTable:
    """Modes of the disk vorticity operator, sorted by ascending eigenvalue.

    Ties (the cos/sin pair of one (k, j)) are broken by (k, parity) with
    cos first, so the ordering is deterministic.
    """

    def __init__(self, K: int, J: int, modes, lam, alpha, norm):
        self.K = int(K)
        self.J = int(J)
        self.modes: tuple[ModeIndex, ...] = tuple(modes)
        self.lam = np.asarray(lam, dtype=float)
        self.alpha = np.asarray(alpha, dtype=float)
        self.norm = np.asarray(norm, dtype=float)
        self._pos = {m: i for i, m in enumerate(self.modes)}
        if not (len(self.modes) == self.lam.size == self.alpha.size == self.norm.size):
            raise ValueError("inconsistent table arrays")
        if np.any(np.diff(self.lam) < 0):
            raise ValueError("eigenvalues must be sorted ascending")

    def __len__(self) -> int:
        return len(self.modes)

    @property
    def n_modes(self) -> int:
        return len(self.modes)

    @property
    def lambda_min(self) -> float:
        return float(self.lam[0])

    @property
    def lambda_max(self) -> float:
        return float(self.lam[-1])

    def position(self, mode: ModeIndex) -> int:
        try:
            return self._pos[mode]
        except KeyError:
            raise KeyError(f"mode {mode} not in table (K={self.K}, J={self.J})") from None

    def __contains__(self, mode: ModeIndex) -> bool:
        return mode in self._pos

    def to_json(self) -> str:
        payload = {
            "K": self.K,
            "J": self.J,
            "modes": [
                {
                    "k": m.k,
                    "j": m.j,
                    "parity": m.parity,
                    "lambda": self.lam[i],
                    "alpha": self.alpha[i],
                    "norm": self.norm[i],
                }
                for i, m in enumerate(self.modes)
            ],
        }
        return json.dumps(payload, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "EigenTable":
        payload = json.loads(text)
        modes = [ModeIndex(d["k"], d["j"], d["parity"]) for d in payload["modes"]]
        lam = [d["lambda"] for d in payload["modes"]]
        alpha = [d["alpha"] for d in payload["modes"]]
        norm = [d["norm"] for d in payload["modes"]]
        return cls(payload["K"], payload["J"], modes, lam, alpha, norm)


def build_table(K: int, J: int) -> EigenTable:
    """All modes with k <= K and radial index j <= J, eigenvalue-sorted."""
    if not isinstance(K, (int, np.integer)) or K < 0:
        raise ValueError(f"K must be a nonnegative integer, got {K!r}")
    if not isinstance(J, (int, np.integer)) or J < 1:
        raise ValueError(f"J must be a positive integer, got {J!r}")
    rows = []
    for k in range(K + 1):
        for j in range(1, J + 1):
            a = bessel_j_zero(k + 1, j)
            lam = a * a
            c = _norm_const(k, a)
            parities = ("cos",) if k == 0 else _PARITIES
            for p in parities:
                rows.append((lam, k, _PARITIES.index(p), ModeIndex(k, j, p), a, c))
    rows.sort(key=lambda t: (t[0], t[1], t[2]))
    modes = [t[3] for t in rows]
    lam = [t[0] for t in rows]
    alpha = [t[4] for t in rows]
    norm = [t[5] for t in rows]
    return EigenTable(K, J, modes, lam, alpha, norm)


def _angular(mode: ModeIndex, theta: np.ndarray) -> np.ndarray:
    if mode.k == 0:
        return np.ones_like(theta)
    arg = mode.k * theta
    return np.cos(arg) if mode.parity == "cos" else np.sin(arg)


def eigenfunction_eval(table: EigenTable, mode, r, theta) -> np.ndarray:
    """Pointwise values of one eigenfunction; r and theta broadcast."""
    if isinstance(mode, ModeIndex):
        n = table.position(mode)
    else:
        n = int(mode)
        if not (0 <= n < len(table)):
            raise IndexError(f"mode position {n} out of range [0, {len(table)})")
    m = table.modes[n]
    r = np.asarray(r, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if np.any(r < 0.0) or np.any(r > 1.0 + 1e-12):
        raise ValueError("radial coordinate must lie in [0, 1]")
    radial = table.norm[n] * bessel_j(m.k, table.alpha[n] * r)
    return radial * _angular(m, theta)


def membership_residuals(table: EigenTable, n_radial: int | None = None) -> dict:
    """Quadrature checks that the table is what it claims to be.

    Returns per-mode arrays:

    * ``normalization``: | ||e||_{L^2}^2 - 1 |
    * ``harmonic_moment``: |(e, h)| against the unit-norm harmonic
      polynomial with the same angular symmetry (the only one that can
      couple); zero is membership in the admissible-vorticity space
    * ``orthogonality``: max off-diagonal Gram entry among same-symmetry
      mode pairs (scalar), the cross-symmetry entries vanishing exactly
    """
    if n_radial is None:
        n_radial = int(np.ceil(table.alpha.max())) + 24
    rule = gauss_legendre(n_radial, 0.0, 1.0)
    r, w = rule.nodes, rule.weights
    wr = w * r

    normalization = np.empty(len(table))
    harmonic_moment = np.empty(len(table))
    ortho = 0.0
    for (k, parity) in {(m.k, m.parity) for m in table.modes}:
        pos = [i for i, m in enumerate(table.modes) if m.k == k and m.parity == parity]
        ang = 2.0 * np.pi if k == 0 else np.pi
        profiles = np.stack(
            [table.norm[i] * bessel_j(k, table.alpha[i] * r) for i in pos]
        )
        gram = ang * (profiles * wr) @ profiles.T
        normalization[pos] = np.abs(np.diag(gram) - 1.0)
        off = gram - np.diag(np.diag(gram))
        if off.size:
            ortho = max(ortho, float(np.max(np.abs(off))))
        # unit-norm harmonic r^k trig(k theta): ||.||^2 = ang_h / (2k+2)
        ang_h = 2.0 * np.pi if k == 0 else np.pi
        ch = np.sqrt((2.0 * k + 2.0) / ang_h)
        hvals = ch * r**k
        harmonic_moment[pos] = np.abs(ang * (profiles * wr) @ hvals)
    return {
        "normalization": normalization,
        "harmonic_moment": harmonic_moment,
        "orthogonality": ortho,
    }
