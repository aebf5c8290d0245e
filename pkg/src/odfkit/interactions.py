"""Spin-motion physics: force magnitude, coupling, loop phases, lineshapes.

The spin-dependent force on the COM mode has magnitude

    F0 = hbar |delta_ac| delta_k exp(-delta_k^2 <z^2> / 2),

the exponential being the Debye-Waller suppression from the thermal
wavepacket extent.  Off resonance by delta = mu - omega_com, the drive
pushes the mode around a phase-space loop; per arm of duration tau the
spin-dependent displacement and enclosed (geometric) phase are

    alpha_arm = (F0 z0 / (2 hbar delta)) (1 - e^{i delta tau})
    chi_arm   = (F0 z0 / (2 hbar))^2 (tau - sin(delta tau)/delta) / delta

and the spin-echo pi pulse flips the drive sign for the second arm, so
alpha_total = alpha_arm (1 - e^{i delta tau}) closes exactly whenever
delta tau is a multiple of 2 pi.  At loop closure chi_arm / tau equals
half the uniform Ising coupling

    jbar = F0^2 / (4 hbar M omega_com delta),

which fixes the convention: jbar = 2 chi_arm / tau (regression-tested
against a numerical phase-space-trajectory oracle).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import HBAR
from .core import OdfDrive, ThermalState, TrapIonConfig, detuning, ground_state_extent, thermal_extent_sq
from .geometry import BeamGeometry, delta_k

# chi_arm / tau = jbar / 2 at loop closure (delta tau = 2 pi k); see module docstring
CHI_TO_JBAR = 2.0


class ResonanceSingularityError(ValueError):
    """Operation requires a nonzero detuning."""


@dataclass(frozen=True)
class InteractionStrengths:
    f0: float  # N
    debye_waller: float  # dimensionless, in (0, 1]
    lamb_dicke: float  # dimensionless, delta_k * z0
    j_bar: float | None = None  # rad/s; None exactly on resonance
    f0_over_gamma: float | None = None  # N s; None when gamma = 0


@dataclass(frozen=True)
class LoopPhases:
    alpha_total: complex  # net displacement after the sequence, phase-space quanta
    chi_arm: float  # rad, geometric phase accumulated per arm


def _q(s):
    """(2 - 2 cos s) / s^2, series-protected near s = 0."""
    s = np.asarray(s, dtype=float)
    small = np.abs(s) < 1e-2
    ss = np.where(small, 1.0, s)
    exact = (2.0 - 2.0 * np.cos(ss)) / (ss * ss)
    s2 = s * s
    series = 1.0 - s2 / 12.0 + s2 * s2 / 360.0 - s2 * s2 * s2 / 20160.0
    return np.where(small, series, exact)


def _dq(s):
    """d/ds of _q."""
    s = np.asarray(s, dtype=float)
    small = np.abs(s) < 1e-2
    ss = np.where(small, 1.0, s)
    exact = (2.0 * ss * np.sin(ss) - 4.0 + 4.0 * np.cos(ss)) / (ss ** 3)
    s2 = s * s
    series = -s / 6.0 + s * s2 / 90.0 - s * s2 * s2 / 3360.0
    return np.where(small, series, exact)


def _r(s):
    """(1 - sin(s)/s) / s, series-protected near s = 0."""
    s = np.asarray(s, dtype=float)
    small = np.abs(s) < 1e-2
    ss = np.where(small, 1.0, s)
    exact = (1.0 - np.sin(ss) / ss) / ss
    s2 = s * s
    series = s / 6.0 - s * s2 / 120.0 + s * s2 * s2 / 5040.0
    return np.where(small, series, exact)


def _dr(s):
    """d/ds of _r."""
    s = np.asarray(s, dtype=float)
    small = np.abs(s) < 1e-2
    ss = np.where(small, 1.0, s)
    exact = -1.0 / (ss * ss) - np.cos(ss) / (ss * ss) + 2.0 * np.sin(ss) / (ss ** 3)
    s2 = s * s
    series = 1.0 / 6.0 - s2 / 40.0 + s2 * s2 / 1008.0
    return np.where(small, series, exact)


def force_magnitude(
    geom: BeamGeometry,
    drive: OdfDrive,
    cfg: TrapIonConfig,
    state: ThermalState,
) -> InteractionStrengths:
    """Evaluate F0 and the derived coupling figures for one operating point."""
    dk = delta_k(geom)
    z0 = ground_state_extent(cfg)
    zsq = thermal_extent_sq(cfg, state)
    dw = math.exp(-0.5 * dk * dk * zsq)
    f0 = HBAR * abs(drive.delta_ac) * dk * dw
    delta = detuning(drive, cfg)
    jb = j_bar(f0, cfg, delta) if delta != 0.0 else None
    ratio = f0 / drive.gamma if drive.gamma > 0 else None
    return InteractionStrengths(
        f0=f0,
        debye_waller=dw,
        lamb_dicke=dk * z0,
        j_bar=jb,
        f0_over_gamma=ratio,
    )


def j_bar(f0: float, cfg: TrapIonConfig, delta: float) -> float:
    """Uniform pairwise Ising coupling F0^2 / (4 hbar M omega_com delta), rad/s."""
    if delta == 0.0:
        raise ResonanceSingularityError("j_bar diverges at delta = 0")
    return f0 * f0 / (4.0 * HBAR * cfg.ion_mass * cfg.omega_com * delta)


def loop_phases(
    f0: float,
    cfg: TrapIonConfig,
    delta: float,
    tau: float,
    sequence: str = "spin_echo",
) -> LoopPhases:
    """Spin-dependent displacement and geometric phase of the driven COM mode.

    sequence is "single_arm" (one drive period tau) or "spin_echo" (two
    arms with the drive sign flipped by the central pi pulse).  delta = 0
    is handled by the analytic limits, not an error.
    """
    if tau <= 0:
        raise ValueError(f"tau must be > 0, got {tau}")
    if sequence not in ("single_arm", "spin_echo"):
        raise ValueError(f"unknown sequence {sequence!r}")
    z0 = ground_state_extent(cfg)
    f = f0 * z0 / (2.0 * HBAR)  # rad/s
    s = delta * tau
    # (1 - e^{is}) / delta = tau (1 - e^{is}) / s with limit -i tau at s = 0
    if abs(s) < 1e-8:
        one_minus_eis_over_delta = tau * (-1j + s / 2.0 + 1j * s * s / 6.0)
    else:
        one_minus_eis_over_delta = (1.0 - np.exp(1j * s)) / delta
    alpha_arm = f * one_minus_eis_over_delta
    if sequence == "spin_echo":
        alpha_total = alpha_arm * (1.0 - np.exp(1j * s))
    else:
        alpha_total = alpha_arm
    chi = f * f * tau ** 2 * float(_r(s))
    return LoopPhases(alpha_total=complex(alpha_total), chi_arm=chi)


def _lineshape_factors(f, delta, tau, n_ions, n_bar):
    """C_ss and C_sm of the spin-echo sequence for drive scale f = F0 z0 / (2 hbar)."""
    s = delta * tau
    q = _q(s)
    alpha_sq = f * f * delta * delta * tau ** 4 * q * q
    j = f * f * tau ** 2 * _r(s)
    c_ss = np.cos(4.0 * j) ** (n_ions - 1)
    c_sm = np.exp(-2.0 * alpha_sq * (2.0 * n_bar + 1.0))
    return c_ss, c_sm


def thermometry_lineshape(
    geom: BeamGeometry,
    drive: OdfDrive,
    cfg: TrapIonConfig,
    state: ThermalState,
    mu_grid,
) -> np.ndarray:
    """Bright-state population P_up(mu) of the spin-echo thermometry scan.

    P_up = (1 - e^{-2 Gamma tau} C_ss C_sm) / 2 with
    C_ss = cos(4 J)^(N-1), J the per-arm geometric phase, and
    C_sm = exp(-2 |alpha_total|^2 (2 nbar + 1)).
    """
    mu = np.asarray(mu_grid, dtype=float)
    strengths = force_magnitude(geom, drive, cfg, state)
    z0 = ground_state_extent(cfg)
    f = strengths.f0 * z0 / (2.0 * HBAR)
    delta = mu - cfg.omega_com
    c_ss, c_sm = _lineshape_factors(f, delta, drive.tau, cfg.n_ions, state.n_bar)
    baseline = math.exp(-2.0 * drive.gamma * drive.tau)
    return 0.5 * (1.0 - baseline * c_ss * c_sm)


def precession_lineshape(j_bar: float, gamma: float, tau: float, theta1_grid) -> np.ndarray:
    """Mean-field precession P_up(theta1) of the tipping-angle scan.

    P_up = (1 + e^{-2 Gamma tau} sin(theta1) sin(2 jbar cos(theta1) 2 tau)) / 2.
    """
    if tau <= 0:
        raise ValueError(f"tau must be > 0, got {tau}")
    theta1 = np.asarray(theta1_grid, dtype=float)
    baseline = math.exp(-2.0 * gamma * tau)
    return 0.5 * (1.0 + baseline * np.sin(theta1) * np.sin(4.0 * j_bar * tau * np.cos(theta1)))


def ratio_curve(
    theta_grid,
    drive: OdfDrive,
    cfg: TrapIonConfig,
    state: ThermalState,
    laser_wavelength: float = 313.1e-9,
) -> list[tuple[float, float, float, float]]:
    """(theta_odf, F0, Gamma, F0/Gamma) across a theta grid at fixed power.

    |delta_ac| and Gamma are held theta-independent, matching the
    fixed-optical-power comparison the ratio is defined for.
    """
    if drive.gamma <= 0:
        raise ValueError("ratio_curve requires gamma > 0")
    rows = []
    for theta in np.asarray(theta_grid, dtype=float):
        geom = BeamGeometry(theta_odf=float(theta), laser_wavelength=laser_wavelength)
        s = force_magnitude(geom, drive, cfg, state)
        rows.append((float(theta), s.f0, drive.gamma, s.f0 / drive.gamma))
    return rows


def force_turnover_angle(
    cfg: TrapIonConfig,
    state: ThermalState,
    laser_wavelength: float = 313.1e-9,
) -> float:
    """Angle theta* where dF0/dtheta = 0, or nan when F0 is monotone below pi.

    With x = sin(theta/2), F0 is proportional to x exp(-a x^2) with
    a = 2 k0^2 z0^2 (2 nbar + 1), so the turnover sits at x = 1/sqrt(2 a).
    """
    k0 = 2.0 * math.pi / laser_wavelength
    z0 = ground_state_extent(cfg)
    a = 2.0 * k0 * k0 * z0 * z0 * (2.0 * state.n_bar + 1.0)
    x_star = 1.0 / math.sqrt(2.0 * a)
    if x_star >= 1.0:
        return math.nan
    return 2.0 * math.asin(x_star)
