//! Fabry-Perot field seen by the atom.
//!
//! The atom's dispersive response shifts the cavity round-trip phase by
//! `k_L Delta L`, which depends on the local Rabi frequency, which in turn
//! depends on the intracavity intensity. `solve_cavity_field` finds the
//! self-consistent operating point by Picard iteration.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::NormalizedParams;

/// Intracavity intensity `I0 (1/Tmirror) / (1 + F^2 sin^2 phi)`.
pub fn airy_intensity(phi: f64, finesse: f64, mirror_transmission: f64, injected: f64) -> f64 {
    injected / mirror_transmission * transmitted_fraction(phi, finesse)
}

/// `S / I0 = 1 / (1 + F^2 sin^2 phi)`.
pub fn transmitted_fraction(phi: f64, finesse: f64) -> f64 {
    let s = finesse * phi.sin();
    1.0 / (1.0 + s * s)
}

/// Squared Rabi frequency at reduced position `x`:
/// `(Gamma^2 / 2)(I_c / I_s) cos^2(x / 2)`.
pub fn rabi_squared(intracavity: f64, x: f64, gamma: f64, saturation: f64) -> f64 {
    let c = (0.5 * x).cos();
    0.5 * gamma * gamma * intracavity / saturation * c * c
}

/// Kerr phase `k_L Delta L` produced by the atom for a given `Omega^2`.
pub fn kerr_dephasing(omega2: f64, np: &NormalizedParams) -> f64 {
    let d = np.delta_over_gamma;
    np.kerr_scale * d / (d * d + omega2 / (2.0 * np.gamma * np.gamma) + 0.25)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StartGuess {
    /// `I_c = airy_intensity(phi0)`, i.e. the empty cavity.
    BareCavity,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Relative change of `I_c` between iterations at which to stop.
    pub tol: f64,
    pub max_iter: usize,
    /// Weight of the new iterate, in `(0, 1]`. 1 is plain Picard iteration.
    pub relaxation: f64,
    pub start: StartGuess,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-12,
            max_iter: 50,
            relaxation: 1.0,
            start: StartGuess::BareCavity,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityOperatingPoint {
    /// `I_c` (W/m^2).
    pub intracavity_intensity: f64,
    /// `S / I0`.
    pub transmission: f64,
    /// `k_L Delta L` (rad).
    pub kerr_phase: f64,
    /// `Omega^2` at the atom (rad^2/s^2).
    pub rabi_squared: f64,
    pub kick_strength: f64,
    pub iterations: usize,
}

/// Self-consistent field with the atom at reduced position `x`.
pub fn solve_cavity_field(x: f64, np: &NormalizedParams, opts: &SolverOptions) -> Result<CavityOperatingPoint> {
    if !(opts.tol > 0.0) || opts.max_iter == 0 {
        return Err(Error::parameter("tol", "solver needs tol > 0 and max_iter >= 1"));
    }
    if !(opts.relaxation > 0.0 && opts.relaxation <= 1.0) {
        return Err(Error::parameter("relaxation", "must lie in (0, 1]"));
    }
    let airy = |phase: f64| airy_intensity(phase, np.finesse, np.mirror_transmission, np.injected_intensity);

    let mut intensity = match opts.start {
        StartGuess::BareCavity => airy(np.phi0),
        StartGuess::Zero => 0.0,
    };
    let mut residual = f64::INFINITY;
    for iteration in 1..=opts.max_iter {
        let omega2 = rabi_squared(intensity, x, np.gamma, np.saturation_intensity);
        let kerr_phase = kerr_dephasing(omega2, np);
        let phase = np.phi0 + 0.5 * kerr_phase;
        let target = airy(phase);
        residual = if target == intensity {
            0.0
        } else {
            ((target - intensity) / target).abs()
        };
        if residual < opts.tol {
            return Ok(CavityOperatingPoint {
                intracavity_intensity: target,
                transmission: transmitted_fraction(phase, np.finesse),
                kerr_phase,
                rabi_squared: omega2,
                kick_strength: np.kick_calibration * target,
                iterations: iteration,
            });
        }
        intensity = if opts.relaxation == 1.0 {
            target
        } else {
            intensity + opts.relaxation * (target - intensity)
        };
    }
    Err(Error::Solver {
        iterations: opts.max_iter,
        residual,
    })
}

/// Quarter period `[m pi/2, (m+1) pi/2]` of the Airy function in which the
/// whole reachable phase interval lies. On such a quarter `sin^2` is monotone,
/// so the transmission determines the phase uniquely.
pub fn check_operating_flank(np: &NormalizedParams) -> Result<i64> {
    let vacuum = kerr_dephasing(0.0, np);
    let (a, b) = (np.phi0, np.phi0 + 0.5 * vacuum);
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let quarter = (0.5 * (lo + hi) / FRAC_PI_2).floor();
    let start = quarter * FRAC_PI_2;
    if lo < start || hi > start + FRAC_PI_2 {
        return Err(Error::parameter(
            "phi0",
            format!("reachable phase interval [{lo:e}, {hi:e}] straddles an extremum of the Airy function"),
        ));
    }
    Ok(quarter as i64)
}

/// Checks on a grid over `X in [0, pi]` that the transmission is strictly
/// monotone in `cos^2(X/2)`, which is what makes the inversion unique.
pub fn check_monotone_response(np: &NormalizedParams, opts: &SolverOptions) -> Result<()> {
    const GRID: usize = 64;
    if np.kerr_scale == 0.0 || np.delta_over_gamma == 0.0 {
        return Err(Error::parameter(
            "kerr_scale",
            "no Kerr shift: the transmission carries no position information",
        ));
    }
    let mut prev: Option<f64> = None;
    let mut direction = 0.0;
    for i in 0..=GRID {
        let x = PI * i as f64 / GRID as f64;
        let s = solve_cavity_field(x, np, opts)?.transmission;
        if let Some(p) = prev {
            let step = (s - p).signum();
            if s == p || (direction != 0.0 && step != direction) {
                return Err(Error::parameter(
                    "phi0",
                    format!("transmission is not strictly monotone in position near X = {x:.4}"),
                ));
            }
            direction = step;
        }
        prev = Some(s);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    /// `max |k_L Delta L|` over one spatial period.
    pub max_kerr_phase: f64,
    /// `(F / 2) max |k_L Delta L|`, the small-signal estimate.
    pub transmission_variation: f64,
    /// `max S - min S` of the self-consistent transmission over one period.
    pub transmission_swing: f64,
    /// `(max K - min K) / mean K` over one spatial period.
    pub kick_variation: f64,
    /// Set when `kick_variation` exceeds 5 %.
    pub kick_variation_warning: bool,
}

pub const KICK_VARIATION_LIMIT: f64 = 0.05;

pub fn sensitivity_report(np: &NormalizedParams, opts: &SolverOptions) -> Result<SensitivityReport> {
    const GRID: usize = 256;
    let mut max_kerr: f64 = 0.0;
    let (mut lo, mut hi, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
    let (mut s_lo, mut s_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..GRID {
        let x = 2.0 * PI * i as f64 / GRID as f64;
        let op = solve_cavity_field(x, np, opts)?;
        max_kerr = max_kerr.max(op.kerr_phase.abs());
        s_lo = s_lo.min(op.transmission);
        s_hi = s_hi.max(op.transmission);
        // K is proportional to I_c; the ratio does not depend on the calibration.
        lo = lo.min(op.intracavity_intensity);
        hi = hi.max(op.intracavity_intensity);
        sum += op.intracavity_intensity;
    }
    let mean = sum / GRID as f64;
    let kick_variation = if mean > 0.0 { (hi - lo) / mean } else { 0.0 };
    Ok(SensitivityReport {
        max_kerr_phase: max_kerr,
        transmission_variation: 0.5 * np.finesse * max_kerr,
        transmission_swing: s_hi - s_lo,
        kick_variation,
        kick_variation_warning: kick_variation > KICK_VARIATION_LIMIT,
    })
}
