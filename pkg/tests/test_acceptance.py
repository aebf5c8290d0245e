"""End-to-end acceptance suite.

Eight top-level checks, one per shipped guarantee, each printing a single
PASS/FAIL line (run pytest with -s or check the captured output).  The
heavier statistical checks reuse the independent oracles in oracles.py.
"""

import math
import time

import numpy as np
import pytest

import oracles
from odfkit import (
    CHI_TO_JBAR,
    HBAR,
    BeamGeometry,
    DriftModel,
    FitInputError,
    OdfDrive,
    PathNoiseModel,
    ThermalState,
    TrapIonConfig,
    delta_k,
    effective_wavelength,
    fit_far_detuned_gamma,
    fit_precession,
    fit_thermometry,
    force_magnitude,
    ground_state_extent,
    j_bar,
    loop_phases,
    misalignment_phase,
    optimize_theta,
    path_noise_phase_rms,
    simulate_angle_drift,
    simulate_gamma_decay,
    simulate_path_noise,
    simulate_precession,
    simulate_thermometry,
    thermal_extent_sq,
)

CFG = TrapIonConfig()
Z0 = ground_state_extent(CFG)


def report(number, label, condition, detail=""):
    verdict = "PASS" if condition else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"criterion {number} [{label}]: {verdict}{suffix}")
    assert condition, f"criterion {number} [{label}] failed{suffix}"


def geom(theta_deg, **kw):
    return BeamGeometry(theta_odf=math.radians(theta_deg), **kw)


def test_criterion_1_geometry_identities():
    start = time.time()
    lam = effective_wavelength(geom(28.0))
    phase = misalignment_phase(geom(28.0, tilt_error=math.radians(0.002)), 150e-6)
    ok = abs(lam - 647e-9) <= 1e-9 and abs(phase - 2.9) <= 0.1
    elapsed = time.time() - start
    report(1, "geometry identities", ok and elapsed < 1.0,
           f"lambda_odf = {lam * 1e9:.2f} nm, edge phase = {phase:.3f} deg, {elapsed:.2f} s")


def test_criterion_2_ratio_reproduction():
    start = time.time()
    drive = OdfDrive()

    def ratio(theta_deg, n_bar):
        s = force_magnitude(geom(theta_deg), drive, CFG, ThermalState(n_bar))
        return s.f0_over_gamma

    cold = ratio(28.0, 1.27) / ratio(14.0, 1.27)
    hot = ratio(28.0, 10.7) / ratio(14.0, 10.7)
    ok = abs(cold - 1.9) <= 0.3 and hot < 1.5
    elapsed = time.time() - start
    report(2, "force-ratio reproduction", ok and elapsed < 1.0,
           f"cold ratio = {cold:.3f}, hot ratio = {hot:.3f}, {elapsed:.2f} s")


def test_criterion_3_loop_closure_and_coupling_convention():
    start = time.time()
    tau = 500e-6
    worst_alpha = 0.0
    for f0 in (3e-24, 3e-23, 3e-22):
        for k in range(1, 6):
            lp = loop_phases(f0, CFG, 2 * math.pi * k / tau, tau, "spin_echo")
            worst_alpha = max(worst_alpha, abs(lp.alpha_total))
    delta = 2 * math.pi / tau
    lp = loop_phases(30e-24, CFG, delta, tau, "spin_echo")
    rel = abs(CHI_TO_JBAR * lp.chi_arm / tau - j_bar(30e-24, CFG, delta)) / j_bar(30e-24, CFG, delta)
    ok = worst_alpha < 1e-12 and rel < 1e-9
    elapsed = time.time() - start
    report(3, "loop closure and coupling convention", ok and elapsed < 1.0,
           f"max |alpha| = {worst_alpha:.1e}, convention residual = {rel:.1e}, {elapsed:.2f} s")


def test_criterion_4_oracle_equivalence():
    start = time.time()
    tau = 500e-6
    s_vals = np.linspace(0.1, 20.0, 20)
    f0_vals = np.logspace(math.log10(3e-24), math.log10(3e-22), 20)
    S, F0 = np.meshgrid(s_vals, f0_vals)
    delta = S / tau
    f = F0 * Z0 / (2 * HBAR)
    num_mag, num_chi = oracles.phase_space_trajectory(f, delta, tau, "spin_echo")
    worst = 0.0
    for i in range(20):
        for j in range(20):
            lp = loop_phases(float(F0[i, j]), CFG, float(delta[i, j]), tau, "spin_echo")
            worst = max(worst,
                        abs(abs(lp.alpha_total) - num_mag[i, j]) / num_mag[i, j],
                        abs(lp.chi_arm - num_chi[i, j]) / abs(num_chi[i, j]))
    dw_worst = 0.0
    for n_bar in (0.0, 1.27, 10.7):
        state = ThermalState(n_bar)
        dw = force_magnitude(geom(28.0), OdfDrive(), CFG, state).debye_waller
        mc = oracles.mc_debye_waller(delta_k(geom(28.0)), thermal_extent_sq(CFG, state))
        dw_worst = max(dw_worst, abs(dw - mc))
    ok = worst < 1e-6 and dw_worst < 5e-4
    elapsed = time.time() - start
    report(4, "oracle equivalence", ok and elapsed < 120.0,
           f"loop-phase residual = {worst:.1e}, Debye-Waller residual = {dw_worst:.1e}, "
           f"{elapsed:.1f} s")


def test_criterion_5_round_trip_estimation():
    start = time.time()
    # thermometry: scan chosen for sensitivity to both occupations
    therm_geom = geom(14.0)
    therm_drive = OdfDrive(delta_ac=2 * math.pi * 1000.0)
    mu = CFG.omega_com + 2 * math.pi * np.linspace(-3e3, 3e3, 100)
    fractions = {}
    for n_bar, tol in ((10.7, 0.5), (1.27, 0.20)):
        hits = 0
        for seed in range(300):
            ds = simulate_thermometry(therm_geom, therm_drive, CFG, ThermalState(n_bar),
                                      mu, shots=500, seed=seed)
            result = fit_thermometry(ds, therm_geom, therm_drive, CFG)
            hits += int(abs(result.params["n_bar"] - n_bar) <= tol)
        fractions[n_bar] = hits / 300.0
    therm_ok = all(frac >= 0.68 for frac in fractions.values())

    # precession: relative sigma below 10 percent
    jb_true = j_bar(30e-24, CFG, 2 * math.pi * 2e3)
    prec_ok = True
    for seed in range(20):
        ds = simulate_precession(jb_true, 100.0, 500e-6,
                                 np.linspace(0, 2 * math.pi, 40), shots=500, seed=seed)
        result = fit_precession(ds, 100.0, 500e-6)
        rel_sigma = result.sigmas["j_bar"] / abs(result.params["j_bar"])
        rel_err = abs(result.params["j_bar"] - jb_true) / jb_true
        prec_ok = prec_ok and rel_sigma < 0.10 and rel_err < 0.10

    # decoherence rate across the characterized range
    tau_grid = np.linspace(0.25e-3, 5e-3, 20)
    gamma_hits = 0
    gamma_total = 0
    for gamma in (80.0, 100.0, 120.0):
        for seed in range(20):
            ds = simulate_gamma_decay(gamma, tau_grid, shots=500, seed=seed)
            result = fit_far_detuned_gamma(ds)
            gamma_hits += int(abs(result.params["gamma"] - gamma) / gamma < 0.10)
            gamma_total += 1
    gamma_ok = gamma_hits / gamma_total >= 0.90
    elapsed = time.time() - start
    report(5, "round-trip estimation", therm_ok and prec_ok and gamma_ok and elapsed < 300.0,
           f"n_bar recovery 10.7: {fractions[10.7]:.0%}, 1.27: {fractions[1.27]:.0%}, "
           f"gamma within 10%: {gamma_hits}/{gamma_total}, {elapsed:.1f} s")


def test_criterion_6_fitter_correctness():
    start = time.time()
    from test_fitting import (
        test_gamma_jacobian_matches_fd,
        test_gamma_zero_noise_round_trip,
        test_precession_jacobian_matches_fd,
        test_precession_permutation_invariance,
        test_precession_zero_noise_round_trip,
        test_thermometry_jacobian_matches_fd,
        test_thermometry_permutation_invariance,
        test_thermometry_zero_noise_round_trip,
    )

    checks = (
        test_thermometry_jacobian_matches_fd,
        test_precession_jacobian_matches_fd,
        test_gamma_jacobian_matches_fd,
        test_thermometry_zero_noise_round_trip,
        test_precession_zero_noise_round_trip,
        test_gamma_zero_noise_round_trip,
        test_thermometry_permutation_invariance,
        test_precession_permutation_invariance,
    )
    failed = []
    for check in checks:
        try:
            check()
        except AssertionError:
            failed.append(check.__name__)
    elapsed = time.time() - start
    report(6, "fitter correctness", not failed,
           f"jacobians, zero-noise round trips, permutation invariance, {elapsed:.1f} s"
           + (f"; failed: {failed}" if failed else ""))


def test_criterion_7_stability_pipeline():
    start = time.time()
    drift = simulate_angle_drift(DriftModel(linear_rate=0.002, rms_jitter=0.0), 6000.0, 10.0)
    drift_ok = bool(np.all(np.abs(drift.p_up) <= 6e-3))
    noise = simulate_path_noise(PathNoiseModel(target_rms=12e-9, seed=0), 200.0, 100.0)
    rms = math.sqrt(float(np.mean(noise.p_up ** 2)))
    phi = path_noise_phase_rms(rms, 647e-9)
    noise_ok = abs(phi - 6.7) <= 0.5
    elapsed = time.time() - start
    report(7, "stability pipeline", drift_ok and noise_ok,
           f"drift end = {drift.p_up[-1]:.4f} deg, phase rms = {phi:.2f} deg, {elapsed:.2f} s")


def test_criterion_8_optimizer():
    start = time.time()
    drive = OdfDrive()
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(50):
        n_bar = float(rng.uniform(0.0, 30.0))
        lam = float(rng.uniform(280e-9, 350e-9))
        lo = float(rng.uniform(12.0, 20.0))
        hi = float(rng.uniform(lo + 2.0, 36.0))
        state = ThermalState(n_bar)
        theta_star, _ = optimize_theta(
            CFG, drive, state, constraints=(math.radians(lo), math.radians(hi)),
            laser_wavelength=lam)

        def ratio(theta):
            g = BeamGeometry(theta_odf=theta, laser_wavelength=lam)
            return force_magnitude(g, drive, CFG, state).f0 / drive.gamma

        grid_theta, _ = oracles.grid_max(ratio, math.radians(lo), math.radians(hi))
        worst = max(worst, abs(math.degrees(theta_star - grid_theta)))
    try:
        optimize_theta(CFG, drive, ThermalState(1.27),
                       constraints=(math.radians(10.0), math.radians(36.0)))
        rejects = False
    except FitInputError:
        rejects = True
    elapsed = time.time() - start
    report(8, "angle optimizer", worst < 0.01 and rejects,
           f"worst grid deviation = {worst:.4f} deg, window guard ok, {elapsed:.1f} s")
