"""Exact propagation, ETD stepping, and decay-rate fitting."""

import numpy as np
import pytest

from diskvort.fields import SpectralField, norm_at
from diskvort.semigroup import (
    DecayFit,
    Trajectory,
    duhamel_step,
    fit_decay_rate,
    phi1,
    phi2,
    propagate,
)
from diskvort.spectrum import ModeIndex, build_table


@pytest.fixture(scope="module")
def table():
    return build_table(4, 4)


def random_field(table, seed):
    rng = np.random.default_rng(seed)
    return SpectralField(table, rng.standard_normal(len(table)) / table.lam, "vorticity")


# ---------------------------------------------------------------------------
# phi functions


def test_phi_values_at_zero():
    assert phi1(0.0) == pytest.approx(1.0, abs=1e-15)
    assert phi2(0.0) == pytest.approx(0.5, abs=1e-15)


def test_phi_branch_continuity():
    # series and direct branches agree where they meet
    for z in (9.9e-6, 1.01e-5, -9.9e-6, -1.01e-5):
        direct1 = np.expm1(z) / z
        direct2 = (np.expm1(z) - z) / z**2
        assert phi1(z) == pytest.approx(direct1, rel=1e-12)
        assert phi2(z) == pytest.approx(direct2, rel=1e-10)


def test_phi_known_value():
    assert phi1(1.0) == pytest.approx(np.e - 1.0, rel=1e-14)
    assert phi2(1.0) == pytest.approx(np.e - 2.0, rel=1e-14)
    assert phi1(-50.0) == pytest.approx((np.exp(-50.0) - 1.0) / -50.0, rel=1e-13)


def test_phi_vectorized():
    z = np.array([-2.0, -1e-7, 0.0, 1e-7, 2.0])
    v1, v2 = phi1(z), phi2(z)
    assert v1.shape == z.shape and v2.shape == z.shape
    assert np.all(np.isfinite(v1)) and np.all(np.isfinite(v2))


# ---------------------------------------------------------------------------
# propagate


def test_propagate_identity_at_zero(table):
    f = random_field(table, 5)
    g = propagate(f, 0.3, 0.0)
    np.testing.assert_array_equal(g.coeffs, f.coeffs)


def test_propagate_halving(table):
    m = ModeIndex(0, 1, "cos")
    f = SpectralField.from_mode(table, m)
    lam = table.lam[table.position(m)]
    nu = 0.1
    t = np.log(2.0) / (nu * lam)
    g = propagate(f, nu, t)
    assert g.coeffs[table.position(m)] == pytest.approx(0.5, rel=1e-14)


def test_propagate_semigroup_property(table):
    f = random_field(table, 9)
    a = propagate(propagate(f, 0.2, 0.7), 0.2, 1.1)
    b = propagate(f, 0.2, 1.8)
    np.testing.assert_allclose(a.coeffs, b.coeffs, rtol=1e-14, atol=1e-300)


@pytest.mark.parametrize("level", [-2, -1, 0, 1, 2])
def test_propagate_decay_every_level(table, level):
    f = random_field(table, 3)
    nu, t = 0.15, 0.8
    g = propagate(f, nu, t)
    bound = np.exp(-nu * table.lambda_min * t) * norm_at(f, level)
    assert norm_at(g, level) <= bound * (1 + 1e-12)


def test_propagate_validation(table):
    f = random_field(table, 1)
    with pytest.raises(ValueError):
        propagate(f, 0.0, 1.0)
    with pytest.raises(ValueError):
        propagate(f, 0.1, -1.0)


# ---------------------------------------------------------------------------
# duhamel


def test_duhamel_zero_forcing_is_propagate(table):
    f = random_field(table, 11)
    zero = SpectralField.zeros(table)
    for scheme in ("etd1", "etd2rk"):
        g = duhamel_step(f, lambda t: zero, 0.1, 0.0, 0.05, scheme)
        want = propagate(f, 0.1, 0.05)
        np.testing.assert_allclose(g.coeffs, want.coeffs, rtol=1e-14)


def test_duhamel_constant_forcing_steady_state(table):
    m = ModeIndex(1, 1, "cos")
    n = table.position(m)
    force = SpectralField.from_mode(table, m, amplitude=3.0)
    nu = 0.2
    u = SpectralField.zeros(table)
    for i in range(400):
        u = duhamel_step(u, lambda t: force, nu, i * 0.05, 0.05, "etd1")
    target = 3.0 / (nu * table.lam[n])
    assert u.coeffs[n] == pytest.approx(target, rel=1e-10)


def test_duhamel_etd2rk_second_order(table):
    # forcing sin t on one mode vs closed-form particular solution
    m = ModeIndex(0, 1, "cos")
    n = table.position(m)
    nu = 0.1
    a = nu * table.lam[n]

    def exact(t):
        return (a * np.sin(t) - np.cos(t) + np.exp(-a * t)) / (1.0 + a * a)

    errs = []
    for dt in (1e-2, 5e-3, 2.5e-3):
        u = SpectralField.zeros(table)
        steps = round(1.0 / dt)
        for i in range(steps):
            t = i * dt

            def forcing(s):
                f = SpectralField.zeros(table)
                f.coeffs[n] = np.sin(s)
                return f

            u = duhamel_step(u, forcing, nu, t, dt, "etd2rk")
        errs.append(abs(u.coeffs[n] - exact(1.0)))
    order1 = np.log2(errs[0] / errs[1])
    order2 = np.log2(errs[1] / errs[2])
    assert order1 > 1.8 and order2 > 1.8


def test_duhamel_validation(table):
    f = random_field(table, 2)
    zero = SpectralField.zeros(table)
    with pytest.raises(ValueError):
        duhamel_step(f, lambda t: zero, 0.1, 0.0, -0.1)
    with pytest.raises(ValueError):
        duhamel_step(f, lambda t: zero, 0.1, 0.0, 0.1, scheme="euler")
    alien = SpectralField.zeros(build_table(4, 4))
    with pytest.raises(ValueError):
        duhamel_step(f, lambda t: alien, 0.1, 0.0, 0.1)


def test_stokes_energy_identity_second_order(table):
    # homogeneous flow: half d/dt ||w||_0^2 + nu ||w||_1^2 = 0; the
    # trapezoid-discretized residual per step shrinks at O(dt^2)
    f = random_field(table, 21)
    nu = 0.1

    def residual(dt):
        g = propagate(f, nu, dt)
        dE = 0.5 * (norm_at(g, 0) ** 2 - norm_at(f, 0) ** 2) / dt
        diss = 0.5 * nu * (norm_at(f, 1) ** 2 + norm_at(g, 1) ** 2)
        return abs(dE + diss)

    r1, r2, r4 = residual(1e-2), residual(5e-3), residual(2.5e-3)
    assert np.log2(r1 / r2) > 1.8
    assert np.log2(r2 / r4) > 1.8


# ---------------------------------------------------------------------------
# decay fit


def test_fit_exact_exponential():
    ts = np.linspace(0.0, 4.0, 41)
    series = [(t, np.exp(-3.0 * t)) for t in ts]
    fit = fit_decay_rate(series)
    assert fit.rate == pytest.approx(3.0, abs=1e-10)
    assert fit.r_squared > 1.0 - 1e-12
    assert fit.window[0] == pytest.approx(2.0)


def test_fit_propagate_series(table):
    m = ModeIndex(0, 1, "cos")
    f = SpectralField.from_mode(table, m)
    nu = 0.1
    ts = np.linspace(0.0, 5.0, 26)
    series = [(t, norm_at(propagate(f, nu, t), 0)) for t in ts]
    fit = fit_decay_rate(series)
    assert fit.rate == pytest.approx(nu * table.lambda_min, abs=1e-8)


def test_fit_with_noise():
    rng = np.random.default_rng(7)
    ts = np.linspace(0.0, 6.0, 121)
    series = [(t, np.exp(-2.0 * t) * (1.0 + 0.01 * rng.uniform(-1, 1))) for t in ts]
    fit = fit_decay_rate(series)
    assert fit.rate == pytest.approx(2.0, rel=0.02)


def test_fit_validation():
    with pytest.raises(ValueError):
        fit_decay_rate([(0.0, 1.0), (1.0, 0.5)])  # too few in window
    ts = np.linspace(0, 1, 10)
    bad = [(t, 1.0 - t) for t in ts]  # hits zero/negative in window
    with pytest.raises(ValueError):
        fit_decay_rate(bad, window=(0.0, 1.0))


def test_fit_explicit_window():
    ts = np.linspace(0.0, 10.0, 101)
    series = [(t, np.exp(-1.5 * t)) for t in ts]
    fit = fit_decay_rate(series, window=(7.0, 10.0))
    assert isinstance(fit, DecayFit)
    assert fit.n_samples == 31
    assert fit.rate == pytest.approx(1.5, abs=1e-9)


# ---------------------------------------------------------------------------
# trajectory


def test_trajectory_validation(table):
    f = random_field(table, 1)
    with pytest.raises(ValueError):
        Trajectory(times=[0.0, 0.0], states=[f, f])
    with pytest.raises(ValueError):
        Trajectory(times=[0.0, 1.0], states=[f])
    tr = Trajectory(times=[0.0, 1.0], states=[f, propagate(f, 0.1, 1.0)])
    assert len(tr) == 2
    series = tr.series(lambda s: norm_at(s, 0))
    assert series[0][1] > series[1][1]


def test_trajectory_csv(tmp_path, table):
    from dataclasses import dataclass

    @dataclass
    class Row:
        t: float
        energy: float

    f = random_field(table, 4)
    tr = Trajectory(
        times=[0.0, 0.5],
        states=[f, propagate(f, 0.1, 0.5)],
        diagnostics=[Row(0.0, 1.0), Row(0.5, 0.8)],
    )
    path = tmp_path / "traj.csv"
    tr.to_csv(path)
    text = path.read_text().splitlines()
    assert text[0] == "t,energy"
    assert len(text) == 3
    assert float(text[2].split(",")[1]) == 0.8
