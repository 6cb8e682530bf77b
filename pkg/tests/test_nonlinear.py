"""Advection term and elliptic correction."""

import numpy as np
import pytest

from diskvort.fields import (
    GridField,
    HarmonicExpansion,
    PolarGrid,
    SpectralField,
    biot_savart,
    from_grid,
    norm_at,
    to_grid,
)
from diskvort.nonlinear import (
    advection,
    advection_time_derivative,
    elliptic_correction,
    elliptic_stream_values,
    velocity_max,
)
from diskvort.spectrum import ModeIndex, build_table


@pytest.fixture(scope="module")
def table():
    return build_table(5, 5)


@pytest.fixture(scope="module")
def grid(table):
    return PolarGrid(table)


@pytest.fixture(scope="module")
def fine_grid(table):
    # oversized for triple-product quadrature in pairing checks
    return PolarGrid(table, n_radial=3 * table.J + 2 * table.K + 12)


def random_v0_field(table, seed):
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(len(table)) / table.lam
    f = SpectralField(table, c, "vorticity")
    return f * (1.0 / norm_at(f, 0))


def advection_values(omega, grid):
    psi = biot_savart(omega)
    dpsi_r = to_grid(psi, grid, "d_r").values
    dpsi_t = to_grid(psi, grid, "d_theta").values
    dom_r = to_grid(omega, grid, "d_r").values
    dom_t = to_grid(omega, grid, "d_theta").values
    return (dpsi_r * dom_t - dpsi_t * dom_r) / grid.r[:, None]


# ---------------------------------------------------------------------------
# advection


def test_radial_field_is_steady(table, grid):
    c = np.zeros(len(table))
    for j in range(1, table.J + 1):
        c[table.position(ModeIndex(0, j, "cos"))] = 1.0 / j
    omega = SpectralField(table, c, "vorticity")
    res = advection(omega, grid)
    assert norm_at(res.projected, 0) < 1e-10
    assert res.harmonic.norm_l2() < 1e-10
    assert res.raw_l2_norm < 1e-10


def test_single_nonradial_mode_not_steady(table, grid):
    omega = SpectralField.from_mode(table, ModeIndex(1, 1, "cos"))
    res = advection(omega, grid)
    assert res.raw_l2_norm > 1e-3


def test_parseval_inequality(table, grid):
    for seed in range(5):
        omega = random_v0_field(table, seed)
        res = advection(omega, grid)
        lhs = norm_at(res.projected, 0) ** 2 + res.harmonic.norm_l2() ** 2
        assert lhs <= res.raw_l2_norm**2 + 1e-8


def test_skew_symmetry_pairing(table, fine_grid):
    # <Lambda, psi> = 0: advection cannot change the V_{-1} energy
    for seed in range(20):
        omega = random_v0_field(table, seed)
        lam_vals = advection_values(omega, fine_grid)
        psi_vals = to_grid(biot_savart(omega), fine_grid).values
        pairing = abs(fine_grid.inner(lam_vals, psi_vals))
        assert pairing <= 1e-8 * norm_at(omega, 0) ** 3


def test_mean_conservation(table, fine_grid):
    for seed in range(10):
        omega = random_v0_field(table, seed + 100)
        lam_vals = advection_values(omega, fine_grid)
        assert abs(fine_grid.integrate(lam_vals)) < 1e-9


def test_two_mode_refined_grid_oracle(table, grid):
    omega = SpectralField.from_mode(table, ModeIndex(0, 1, "cos")) + SpectralField.from_mode(
        table, ModeIndex(1, 1, "cos")
    )
    res = advection(omega, grid)
    fine = PolarGrid(table, n_radial=4 * grid.n_radial, n_angular=4 * grid.n_angular)
    ref = advection(omega, fine)
    np.testing.assert_allclose(res.projected.coeffs, ref.projected.coeffs, atol=1e-6)
    assert (res.harmonic - ref.harmonic).norm_l2() < 1e-6


def test_advection_validation(table, grid):
    psi = biot_savart(random_v0_field(table, 1))
    with pytest.raises(ValueError):
        advection(psi, grid)
    other = build_table(5, 5)
    with pytest.raises(ValueError):
        advection(SpectralField.zeros(other), grid)


def test_velocity_max_positive(table, grid):
    omega = random_v0_field(table, 33)
    assert velocity_max(omega, grid) > 0.0


# ---------------------------------------------------------------------------
# elliptic correction


def test_elliptic_zero(table, grid):
    h = HarmonicExpansion.zeros(table.K)
    omega_b, psi_b = elliptic_correction(h, 1.0, grid)
    assert np.max(np.abs(omega_b.coeffs)) == 0.0
    assert np.max(np.abs(psi_b.values)) == 0.0


def test_elliptic_fd_laplacian_oracle(table):
    # Delta psi_B = h / nu, by second-order finite differences
    h = HarmonicExpansion.zeros(table.K)
    h.a[1] = 1.0  # harmonic function: ch_1 * r cos(theta)
    nu = 1.0
    r0, t0, step = 0.57, 0.8, 1e-4

    def f(r, t):
        return float(elliptic_stream_values(h, nu, r, t))

    frr = (f(r0 + step, t0) - 2 * f(r0, t0) + f(r0 - step, t0)) / step**2
    fr = (f(r0 + step, t0) - f(r0 - step, t0)) / (2 * step)
    ftt = (f(r0, t0 + step) - 2 * f(r0, t0) + f(r0, t0 - step)) / step**2
    lap = frr + fr / r0 + ftt / r0**2
    want = h.eval(r0, t0) / nu
    assert lap == pytest.approx(float(want), rel=1e-5)


def test_elliptic_fd_laplacian_k0_and_nu(table):
    h = HarmonicExpansion.zeros(table.K)
    h.a[0] = 2.0
    nu = 0.25
    r0, step = 0.4, 1e-4

    def f(r):
        return float(elliptic_stream_values(h, nu, r, 0.0))

    lap = (f(r0 + step) - 2 * f(r0) + f(r0 - step)) / step**2 + (
        f(r0 + step) - f(r0 - step)
    ) / (2 * step) / r0
    want = float(h.eval(r0, 0.0)) / nu
    assert lap == pytest.approx(want, rel=1e-5)


def test_elliptic_boundary_trace(table):
    rng = np.random.default_rng(5)
    h = HarmonicExpansion(rng.standard_normal(table.K + 1), np.r_[0.0, rng.standard_normal(table.K)])
    theta = np.linspace(0.0, 2 * np.pi, 37)
    vals = elliptic_stream_values(h, 0.7, np.ones_like(theta), theta)
    assert np.max(np.abs(vals)) < 1e-12


def test_elliptic_dr_matches_fd(table):
    h = HarmonicExpansion.zeros(table.K)
    h.a[2], h.b[1] = 0.6, -1.1
    nu, r0, t0, step = 0.5, 0.63, 2.2, 1e-6
    fd = (
        float(elliptic_stream_values(h, nu, r0 + step, t0))
        - float(elliptic_stream_values(h, nu, r0 - step, t0))
    ) / (2 * step)
    an = float(elliptic_stream_values(h, nu, r0, t0, what="d_r"))
    assert an == pytest.approx(fd, rel=1e-8)


def test_omega_b_is_admissible(table, grid):
    h = HarmonicExpansion.zeros(table.K)
    h.a[0], h.a[1], h.b[2] = 0.3, -0.9, 1.2
    omega_b, _ = elliptic_correction(h, 0.1, grid)
    _, harm, _ = from_grid(to_grid(omega_b, grid), table)
    assert harm.norm_l2() < 1e-8


def test_elliptic_linearity(table, grid):
    # the correction is linear in its harmonic argument, which the
    # solver exploits to commute it with time differencing
    h1 = HarmonicExpansion.zeros(table.K)
    h2 = HarmonicExpansion.zeros(table.K)
    h1.a[1], h2.b[2] = 0.8, -0.5
    nu = 0.3
    w1, _ = elliptic_correction(h1, nu, grid)
    w2, _ = elliptic_correction(h2, nu, grid)
    wsum, _ = elliptic_correction(h1 + 2.0 * h2, nu, grid)
    np.testing.assert_allclose(
        wsum.coeffs, w1.coeffs + 2.0 * w2.coeffs, atol=1e-14
    )


def test_elliptic_validation(table, grid):
    h = HarmonicExpansion.zeros(table.K + 3)
    h.a[table.K + 3] = 1.0
    with pytest.raises(ValueError):
        elliptic_correction(h, 1.0, grid)
    with pytest.raises(ValueError):
        elliptic_stream_values(HarmonicExpansion.zeros(2), -1.0, 0.5, 0.0)


# ---------------------------------------------------------------------------
# time derivative of the harmonic moments


def test_advection_td_identical_inputs(table, grid):
    omega = random_v0_field(table, 9)
    res = advection(omega, grid)
    td = advection_time_derivative(res, res, 0.01)
    assert td.norm_l2() == 0.0


def test_advection_td_linear_slope(table, grid):
    omega = random_v0_field(table, 13)
    res0 = advection(omega, grid)
    res1 = advection(omega, grid)
    res1.harmonic = res0.harmonic + 0.02 * HarmonicExpansion(
        np.ones(table.K + 1), np.zeros(table.K + 1)
    )
    td = advection_time_derivative(res1, res0, 0.02)
    np.testing.assert_allclose(td.a, np.ones(table.K + 1), rtol=1e-12)


def test_advection_td_first_order_vs_centered(table, grid):
    # backward difference drifts from the centered difference at O(dt)
    def h_of_t(t):
        h = HarmonicExpansion.zeros(table.K)
        h.a[1] = np.sin(t)
        return h

    omega = random_v0_field(table, 17)
    base = advection(omega, grid)

    def result_at(t):
        r = advection(omega, grid)
        r.harmonic = h_of_t(t)
        return r

    t0 = 0.7
    errs = []
    for dt in (0.1, 0.05):
        backward = advection_time_derivative(result_at(t0), result_at(t0 - dt), dt)
        centered = (h_of_t(t0 + dt) - h_of_t(t0 - dt)) * (1.0 / (2 * dt))
        errs.append((backward - centered).norm_l2())
    assert errs[1] == pytest.approx(errs[0] / 2.0, rel=0.15)
    assert base.raw_l2_norm >= 0.0


def test_advection_td_validation(table, grid):
    omega = random_v0_field(table, 19)
    res = advection(omega, grid)
    with pytest.raises(ValueError):
        advection_time_derivative(res, res, 0.0)
