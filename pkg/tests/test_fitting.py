import math

import numpy as np
import pytest

import oracles
from odfkit import (
    BeamGeometry,
    FitInputError,
    GammaDecayEstimator,
    OdfDrive,
    PrecessionEstimator,
    ScanDataset,
    ThermalState,
    ThermometryEstimator,
    TrapIonConfig,
    f0_from_jbar,
    fit_far_detuned_gamma,
    fit_precession,
    fit_thermometry,
    force_magnitude,
    golden_section_max,
    j_bar,
    optimize_theta,
    precession_lineshape,
    simulate_precession,
    simulate_thermometry,
    thermometry_lineshape,
    weighted_f0,
)

CFG = TrapIonConfig()
GEOM = BeamGeometry(theta_odf=math.radians(28.0))
DRIVE = OdfDrive()
MU = CFG.omega_com + 2 * math.pi * np.linspace(-3e3, 3e3, 30)


def _thermometry_dataset(n_bar=1.27, sigma=1e-3, mu=MU):
    p = thermometry_lineshape(GEOM, DRIVE, CFG, ThermalState(n_bar), mu)
    return ScanDataset(abscissa=mu / (2 * math.pi), p_up=p,
                       sigma=np.full(len(mu), sigma), meta={"kind": "thermometry"})


def _check_jacobian(est, x, params, rel_steps):
    """Central finite differences against the analytic Jacobian.

    Comparison is elementwise at 1e-5 relative with the denominator floored
    at a small fraction of the column scale, which keeps near-zero entries
    from amplifying finite-difference roundoff.
    """
    analytic = est.jacobian(x, params)
    for k, rel in enumerate(rel_steps):
        h = rel * max(abs(params[k]), 1e-30)
        up = list(params)
        dn = list(params)
        up[k] += h
        dn[k] -= h
        fd = (est.predict(x, up) - est.predict(x, dn)) / (up[k] - dn[k])
        scale = max(np.max(np.abs(fd)), 1e-300)
        denom = np.maximum(np.abs(fd), 1e-2 * scale)
        assert np.max(np.abs(analytic[:, k] - fd) / denom) < 1e-5


# -- Jacobians ---------------------------------------------------------------------


def test_thermometry_jacobian_matches_fd():
    est = ThermometryEstimator(GEOM, DRIVE, CFG)
    params = (CFG.omega_com + 2 * math.pi * 120.0, 2.1)
    _check_jacobian(est, MU, params, rel_steps=(1e-9, 1e-6))


def test_thermometry_jacobian_matches_fd_hot():
    est = ThermometryEstimator(GEOM, DRIVE, CFG)
    params = (CFG.omega_com - 2 * math.pi * 75.0, 9.4)
    _check_jacobian(est, MU, params, rel_steps=(1e-9, 1e-6))


def test_precession_jacobian_matches_fd():
    est = PrecessionEstimator(gamma=100.0, tau=500e-6)
    grid = np.linspace(0.05, 2 * math.pi, 40)
    _check_jacobian(est, grid, (1500.0,), rel_steps=(1e-6,))


def test_gamma_jacobian_matches_fd():
    est = GammaDecayEstimator()
    grid = np.linspace(0.25e-3, 5e-3, 20)
    _check_jacobian(est, grid, (95.0,), rel_steps=(1e-6,))


# -- zero-noise round trips -----------------------------------------------------------


def test_thermometry_zero_noise_round_trip():
    ds = _thermometry_dataset(n_bar=1.27)
    result = fit_thermometry(ds, GEOM, DRIVE, CFG)
    assert result.converged
    assert result.params["omega_com"] == pytest.approx(CFG.omega_com, rel=1e-6)
    assert result.params["n_bar"] == pytest.approx(1.27, rel=1e-6)


def test_thermometry_zero_noise_hot():
    ds = _thermometry_dataset(n_bar=10.7)
    result = fit_thermometry(ds, GEOM, DRIVE, CFG)
    assert result.converged
    assert result.params["n_bar"] == pytest.approx(10.7, rel=1e-6)


def test_precession_zero_noise_round_trip():
    jb = 1641.5482756446918
    grid = np.linspace(0, 2 * math.pi, 40)
    p = precession_lineshape(jb, 100.0, 500e-6, grid)
    ds = ScanDataset(abscissa=grid, p_up=p, sigma=np.full(len(grid), 1e-3),
                     meta={"kind": "precession"})
    result = fit_precession(ds, gamma=100.0, tau=500e-6)
    assert result.converged
    assert result.params["j_bar"] == pytest.approx(jb, rel=1e-6)


def test_gamma_zero_noise_round_trip():
    grid = np.linspace(0.25e-3, 5e-3, 20)
    p = 0.5 * (1 - np.exp(-2 * 100.0 * grid))
    ds = ScanDataset(abscissa=grid, p_up=p, sigma=np.full(len(grid), 1e-3),
                     meta={"kind": "gamma"})
    result = fit_far_detuned_gamma(ds)
    assert result.converged
    assert result.params["gamma"] == pytest.approx(100.0, rel=1e-6)


# -- permutation invariance -----------------------------------------------------------


def _shuffled(ds, seed=123):
    order = np.random.default_rng(seed).permutation(len(ds))
    return ScanDataset(abscissa=ds.abscissa[order], p_up=ds.p_up[order],
                       sigma=ds.sigma[order], meta=dict(ds.meta))


def test_thermometry_permutation_invariance():
    ds = simulate_thermometry(GEOM, DRIVE, CFG, ThermalState(1.27), MU, shots=500, seed=8)
    a = fit_thermometry(ds, GEOM, DRIVE, CFG)
    b = fit_thermometry(_shuffled(ds), GEOM, DRIVE, CFG)
    assert b.params["omega_com"] == pytest.approx(a.params["omega_com"], rel=1e-9)
    assert b.params["n_bar"] == pytest.approx(a.params["n_bar"], rel=1e-9)


def test_precession_permutation_invariance():
    ds = simulate_precession(1641.5, 100.0, 500e-6, np.linspace(0, 2 * math.pi, 40),
                             shots=500, seed=8)
    a = fit_precession(ds, 100.0, 500e-6)
    b = fit_precession(_shuffled(ds), 100.0, 500e-6)
    assert b.params["j_bar"] == pytest.approx(a.params["j_bar"], rel=1e-9)


# -- result structure ------------------------------------------------------------------


def test_fit_result_reports_both_sigma_conventions():
    ds = simulate_thermometry(GEOM, DRIVE, CFG, ThermalState(1.27), MU, shots=500, seed=2)
    result = fit_thermometry(ds, GEOM, DRIVE, CFG)
    for name in ("omega_com", "n_bar"):
        assert result.sigmas[name] >= result.sigmas_unscaled[name] > 0
    if result.chi2_reduced <= 1.0:
        assert result.sigmas == result.sigmas_unscaled
    assert result.chi2_reduced >= 0
    # covariance is symmetric positive semidefinite
    assert np.allclose(result.covariance, result.covariance.T)
    assert np.all(np.linalg.eigvalsh(result.covariance) >= -1e-30)


def test_chi2_scaling_flag():
    ds = simulate_thermometry(GEOM, DRIVE, CFG, ThermalState(1.27), MU, shots=500, seed=2)
    scaled = fit_thermometry(ds, GEOM, DRIVE, CFG, scale_sigma_by_chi2=True)
    raw = fit_thermometry(ds, GEOM, DRIVE, CFG, scale_sigma_by_chi2=False)
    assert raw.sigmas == raw.sigmas_unscaled
    assert scaled.params == raw.params


def test_thermometry_requires_six_points():
    ds = _thermometry_dataset(mu=CFG.omega_com + 2 * math.pi * np.linspace(-3e3, 3e3, 5))
    with pytest.raises(FitInputError):
        fit_thermometry(ds, GEOM, DRIVE, CFG)


def test_estimator_params_round_trip():
    est = ThermometryEstimator(GEOM, DRIVE, CFG)
    params = est.get_params()
    est.set_params(init_n_bar=2.0)
    assert est.init_n_bar == 2.0
    with pytest.raises(ValueError):
        est.set_params(unknown=1)
    assert set(params) >= {"geom", "drive", "cfg", "init_n_bar"}


def test_unfitted_estimator_raises():
    with pytest.raises(FitInputError):
        PrecessionEstimator(gamma=100.0, tau=500e-6).predict(np.array([0.1]))


# -- weighted F0 combination ------------------------------------------------------------


def test_weighted_f0_frozen_example():
    est = weighted_f0([(1.0, 28.0, 2.0), (2.0, 34.0, 4.0)])
    assert est.f0 == pytest.approx(29.2, rel=1e-12)
    assert est.sigma == pytest.approx(1.7888543819998317, rel=1e-12)


def test_weighted_f0_is_inverse_variance_mean():
    entries = [(1.0, 30.0, 1.5), (2.0, 31.0, 2.5), (3.0, 29.5, 1.0)]
    est = weighted_f0(entries)
    w = np.array([1 / s ** 2 for _, _, s in entries])
    v = np.array([f for _, f, _ in entries])
    assert est.f0 == pytest.approx(float((w * v).sum() / w.sum()), rel=1e-14)
    assert est.per_detuning == tuple(entries)


def test_weighted_f0_permutation_invariant():
    entries = [(1.0, 30.0, 1.5), (2.0, 31.0, 2.5), (3.0, 29.5, 1.0)]
    a = weighted_f0(entries)
    b = weighted_f0(entries[::-1])
    assert a.f0 == pytest.approx(b.f0, rel=1e-14)
    assert a.sigma == pytest.approx(b.sigma, rel=1e-14)


def test_weighted_f0_sigma_shrinks_with_entries():
    entries = [(1.0, 30.0, 2.0), (2.0, 30.1, 2.0), (3.0, 29.9, 2.0), (4.0, 30.0, 2.0)]
    sigmas = [weighted_f0(entries[:k]).sigma for k in range(1, 5)]
    assert all(b < a for a, b in zip(sigmas, sigmas[1:]))


def test_weighted_f0_validation():
    with pytest.raises(FitInputError):
        weighted_f0([])
    with pytest.raises(FitInputError):
        weighted_f0([(1.0, 30.0, 0.0)])


def test_f0_from_jbar_inverts_coupling():
    delta = 2 * math.pi * 2e3
    jb = j_bar(30e-24, CFG, delta)
    f0, sigma = f0_from_jbar(jb, 0.1 * jb, CFG, delta)
    assert f0 == pytest.approx(30e-24, rel=1e-12)
    assert sigma == pytest.approx(0.05 * f0, rel=1e-12)
    with pytest.raises(FitInputError):
        f0_from_jbar(-jb, 0.1 * jb, CFG, delta)


# -- design optimizer -------------------------------------------------------------------


def test_golden_section_simple_maximum():
    x, fx = golden_section_max(lambda x: -(x - 2.0) ** 2, 0.0, 5.0)
    assert x == pytest.approx(2.0, abs=1e-7)
    assert fx == pytest.approx(0.0, abs=1e-12)


def test_optimize_theta_matches_grid_oracle_50_cases():
    rng = np.random.default_rng(77)
    for _ in range(50):
        n_bar = float(rng.uniform(0.0, 30.0))
        lam = float(rng.uniform(280e-9, 350e-9))
        lo = float(rng.uniform(12.0, 20.0))
        hi = float(rng.uniform(lo + 2.0, 36.0))
        state = ThermalState(n_bar)
        theta_star, _ = optimize_theta(
            CFG, DRIVE, state, constraints=(math.radians(lo), math.radians(hi)),
            laser_wavelength=lam)

        def ratio(theta):
            g = BeamGeometry(theta_odf=theta, laser_wavelength=lam)
            return force_magnitude(g, DRIVE, CFG, state).f0 / DRIVE.gamma

        grid_theta, _ = oracles.grid_max(ratio, math.radians(lo), math.radians(hi))
        assert abs(math.degrees(theta_star - grid_theta)) < 0.01


def test_optimize_theta_rejects_windows_outside_limits():
    for window in ((11.0, 30.0), (14.0, 37.0)):
        with pytest.raises(FitInputError):
            optimize_theta(CFG, DRIVE, ThermalState(1.27),
                           constraints=tuple(math.radians(v) for v in window))
    with pytest.raises(FitInputError):
        optimize_theta(CFG, DRIVE, ThermalState(1.27),
                       constraints=(math.radians(20.0), math.radians(20.0)))


def test_optimize_theta_boundary_for_cold_crystal():
    # cold-crystal turnover sits far above the window, so the edge wins
    theta, _ = optimize_theta(CFG, DRIVE, ThermalState(1.27))
    assert theta == pytest.approx(math.radians(36.0), abs=1e-9)


def test_optimize_theta_interior_for_hot_crystal():
    # hot-crystal rolloff pulls the optimum inside the window
    theta, _ = optimize_theta(CFG, DRIVE, ThermalState(10.7))
    assert math.radians(12.0) < theta < math.radians(36.0)
    assert math.degrees(theta) == pytest.approx(26.97, abs=0.01)


def test_optimize_theta_gamma_invariance():
    # argmax of F0/Gamma equals argmax of F0 for constant Gamma
    a, _ = optimize_theta(CFG, OdfDrive(gamma=50.0), ThermalState(10.7))
    b, _ = optimize_theta(CFG, OdfDrive(gamma=200.0), ThermalState(10.7))
    assert a == pytest.approx(b, abs=1e-9)
