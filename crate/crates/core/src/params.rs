//! Laboratory parameters, reduction to map units and validity diagnostics.
//!
//! Everything here is an SI scalar. The reduced map works with the position
//! `X = 2 k_L x` and momentum `P = (2 k_L T / M) p`; the kick strength is
//! calibrated so that the self-consistent cavity field at `X = 0` produces the
//! requested `K`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::cavity::{self, SolverOptions};
use crate::error::{Error, Result};

pub const HBAR: f64 = 1.054_571_817e-34;
pub const PLANCK: f64 = 6.626_070_15e-34;
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Laboratory-frame description of one atom in a pulsed cavity standing wave.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Laser wavelength (m).
    #[serde(rename = "lambda_L")]
    pub wavelength: f64,
    /// Atom mass (kg).
    #[serde(rename = "M")]
    pub mass: f64,
    /// Natural linewidth (rad/s).
    #[serde(rename = "Gamma")]
    pub gamma: f64,
    /// Laser-atom detuning (rad/s).
    #[serde(rename = "Delta")]
    pub detuning: f64,
    /// Kick period (s).
    #[serde(rename = "T")]
    pub period: f64,
    /// Pulse duration (s).
    #[serde(rename = "tau")]
    pub pulse: f64,
    /// Injected intensity (W/m^2).
    #[serde(rename = "I0")]
    pub injected_intensity: f64,
    /// Saturation intensity (W/m^2).
    #[serde(rename = "I_s")]
    pub saturation_intensity: f64,
    /// Mirror intensity transmission, in (0, 1).
    #[serde(rename = "Tmirror")]
    pub mirror_transmission: f64,
    /// Physical cavity length (m).
    #[serde(rename = "L")]
    pub cavity_length: f64,
    /// Linear size of the effective atomic volume (m).
    #[serde(rename = "L_at")]
    pub atomic_size: f64,
    /// Planned number of kicks.
    pub n_kicks: u64,
    /// Finesse parameter override. When absent it follows from the mirrors
    /// as `2 sqrt(1 - Tmirror) / Tmirror`.
    #[serde(rename = "F", default, skip_serializing_if = "Option::is_none")]
    pub finesse: Option<f64>,
}

impl PhysicalParams {
    pub const PRESET_NAMES: &'static [&'static str] = &["cesium-default"];

    /// Cesium D2 line in a 100 µm, F = 1e6 cavity kicked every 20 µs.
    ///
    /// The injected intensity is chosen so that the peak saturation term
    /// `Omega^2 / (2 Gamma^2)` is about 1e-3 of `(Delta/Gamma)^2`, which keeps
    /// the per-kick fluorescence probability near 0.02 and the spatial
    /// variation of `K` far below a percent.
    pub fn cesium_default() -> Self {
        let gamma = 1.0 / 30e-9;
        PhysicalParams {
            wavelength: 852e-9,
            mass: 2.207e-25,
            gamma,
            detuning: 1e3 * gamma,
            period: 20e-6,
            pulse: 1.2e-6,
            injected_intensity: 0.16,
            saturation_intensity: 20.0,
            mirror_transmission: 1e-6,
            cavity_length: 1e-4,
            atomic_size: 100e-6,
            n_kicks: 150,
            finesse: Some(1e6),
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "cesium-default" => Some(Self::cesium_default()),
            _ => None,
        }
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    /// Recoil frequency `hbar k_L^2 / (2M)` (rad/s).
    pub fn recoil_frequency(&self) -> f64 {
        let k = self.wavenumber();
        HBAR * k * k / (2.0 * self.mass)
    }

    /// Finesse parameter implied by the mirror transmission alone.
    pub fn mirror_finesse(&self) -> f64 {
        let t = self.mirror_transmission;
        2.0 * (1.0 - t).sqrt() / t
    }

    pub fn finesse(&self) -> f64 {
        self.finesse.unwrap_or_else(|| self.mirror_finesse())
    }

    /// Photon lifetime `L / (c Tmirror)` (s).
    pub fn photon_lifetime(&self) -> f64 {
        self.cavity_length / (SPEED_OF_LIGHT * self.mirror_transmission)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lambda_L", self.wavelength),
            ("M", self.mass),
            ("Gamma", self.gamma),
            ("T", self.period),
            ("tau", self.pulse),
            ("I_s", self.saturation_intensity),
            ("Tmirror", self.mirror_transmission),
            ("L", self.cavity_length),
            ("L_at", self.atomic_size),
        ];
        for (field, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::parameter(field, format!("must be finite and positive, got {value}")));
            }
        }
        if !(self.injected_intensity.is_finite() && self.injected_intensity >= 0.0) {
            return Err(Error::parameter(
                "I0",
                format!("must be finite and non-negative, got {}", self.injected_intensity),
            ));
        }
        if !self.detuning.is_finite() {
            return Err(Error::parameter("Delta", "must be finite"));
        }
        if self.mirror_transmission >= 1.0 {
            return Err(Error::parameter("Tmirror", "must be below 1"));
        }
        if let Some(f) = self.finesse {
            if !(f.is_finite() && f > 1.0) {
                return Err(Error::parameter("F", format!("must be finite and above 1, got {f}")));
            }
        }
        Ok(())
    }
}

/// The reduced-unit bundle consumed by the cavity model, the simulator and
/// the inversion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizedParams {
    /// Target kick strength at the reference position `X = 0`.
    pub k_nominal: f64,
    /// Effective Planck constant `8 omega_r T`.
    pub kbar: f64,
    /// Finesse parameter.
    pub finesse: f64,
    pub mirror_transmission: f64,
    /// Bare-cavity operating phase in `[0, pi)`.
    pub phi0: f64,
    /// `3 pi / (2 (k_L L_at)^2)`.
    pub kerr_scale: f64,
    pub delta_over_gamma: f64,
    /// `Gamma tau / 2`.
    pub g_scale: f64,
    /// `C` in `K = C I_c` (m^2/W).
    pub kick_calibration: f64,
    /// Injected intensity (W/m^2).
    pub injected_intensity: f64,
    /// Saturation intensity (W/m^2).
    pub saturation_intensity: f64,
    /// Natural linewidth (rad/s).
    pub gamma: f64,
}

impl NormalizedParams {
    pub fn detuning(&self) -> f64 {
        self.delta_over_gamma * self.gamma
    }

    pub fn pulse_duration(&self) -> f64 {
        2.0 * self.g_scale / self.gamma
    }

    /// Kerr phase `k_L Delta L` with the atom at a node of the standing wave.
    pub fn vacuum_kerr_phase(&self) -> f64 {
        cavity::kerr_dephasing(0.0, self)
    }
}

/// Half-transmission point on the rising flank of the Airy peak.
pub fn default_operating_phase(finesse: f64) -> f64 {
    (1.0 / finesse).min(1.0).asin()
}

/// Reduces laboratory parameters to map units and calibrates the kick
/// strength against the self-consistent field at `X = 0`.
pub fn normalize(p: &PhysicalParams, k_target: f64, phi0: f64) -> Result<NormalizedParams> {
    p.validate()?;
    if !(k_target.is_finite() && k_target >= 0.0) {
        return Err(Error::parameter("K_target", format!("must be finite and non-negative, got {k_target}")));
    }
    if !phi0.is_finite() {
        return Err(Error::parameter("phi0", "must be finite"));
    }

    let k = p.wavenumber();
    let kbar = finite("kbar", 8.0 * p.recoil_frequency() * p.period)?;
    let kerr_scale = finite("kerr_scale", 3.0 * PI / (2.0 * (k * p.atomic_size).powi(2)))?;

    let mut np = NormalizedParams {
        k_nominal: k_target,
        kbar,
        finesse: finite("F", p.finesse())?,
        mirror_transmission: p.mirror_transmission,
        phi0: phi0.rem_euclid(PI),
        kerr_scale,
        delta_over_gamma: finite("Delta", p.detuning / p.gamma)?,
        g_scale: finite("g_scale", p.gamma * p.pulse / 2.0)?,
        kick_calibration: 0.0,
        injected_intensity: p.injected_intensity,
        saturation_intensity: p.saturation_intensity,
        gamma: p.gamma,
    };
    // phi0 reduced to [0, pi) can land exactly on pi after rounding.
    if np.phi0 >= PI {
        np.phi0 = 0.0;
    }
    cavity::check_operating_flank(&np)?;

    if k_target > 0.0 {
        let reference = cavity::solve_cavity_field(0.0, &np, &SolverOptions::default())?;
        if reference.intracavity_intensity <= 0.0 {
            return Err(Error::parameter("I0", "zero intracavity intensity cannot produce a non-zero kick"));
        }
        np.kick_calibration = finite("kick_calibration", k_target / reference.intracavity_intensity)?;
    }
    Ok(np)
}

fn finite(field: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::parameter(field, format!("non-finite value {value}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValidityWarning {
    /// More than a tenth of the δ-kick limit `N_max` is planned.
    KickCountNearLimit { n_kicks: u64, n_max: f64 },
    /// Pulses shorter than three photon lifetimes cannot be switched cleanly.
    PulseTooShort { pulse: f64, photon_lifetime: f64 },
    /// Configured `F` disagrees with `2 sqrt(R) / Tmirror` by more than 1 %.
    FinesseInconsistent { configured: f64, from_mirrors: f64 },
    /// `|Delta| < 10 Gamma`: the far-detuned picture is doubtful.
    SmallDetuning { delta_over_gamma: f64 },
}

impl std::fmt::Display for ValidityWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ValidityWarning::KickCountNearLimit { n_kicks, n_max } => {
                write!(f, "{n_kicks} kicks exceeds N_max/10 (N_max = {n_max:.3e})")
            }
            ValidityWarning::PulseTooShort { pulse, photon_lifetime } => write!(
                f,
                "pulse {pulse:.3e} s is shorter than 3 photon lifetimes ({:.3e} s)",
                3.0 * photon_lifetime
            ),
            ValidityWarning::FinesseInconsistent { configured, from_mirrors } => write!(
                f,
                "F = {configured:.4e} but mirrors imply 2 sqrt(R)/Tmirror = {from_mirrors:.4e}"
            ),
            ValidityWarning::SmallDetuning { delta_over_gamma } => {
                write!(f, "|Delta/Gamma| = {delta_over_gamma:.3} is below 10")
            }
        }
    }
}

/// Kick strength evaluated with the three prefactor conventions found in the
/// literature, using the bare-cavity field at the half-transmission point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KickFormulas {
    /// `omega_r T tau Omega0^2 / Delta`, from `K = 4 V0 k_L^2 T tau / M` with
    /// `V0 = hbar Omega0^2 / (8 Delta)`.
    pub light_shift: f64,
    /// `omega_r T^2 Omega0^2 / (2 Delta)`.
    pub half_omega_t_squared: f64,
    /// `(omega_r T)(Gamma T)(Gamma/Delta) Airy I0 / I_s`.
    pub saturation_form: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    /// `[lambda^2 M c Tmirror / (2 h L)]^2`.
    pub n_max: f64,
    /// Left over right side of `<p^2>^{1/2} tau / M << lambda` at `n_kicks`,
    /// with `<p^2>^{1/2} ~ 2 hbar k_L sqrt(N)`.
    pub delta_kick_ratio: f64,
    /// `L / (c Tmirror)` (s).
    pub photon_lifetime: f64,
    pub kick_formulas: KickFormulas,
    pub warnings: Vec<ValidityWarning>,
}

impl ValidityReport {
    pub fn passed(&self) -> bool {
        self.warnings.is_empty()
    }
}

pub fn max_kicks(p: &PhysicalParams) -> f64 {
    let root = p.wavelength.powi(2) * p.mass * SPEED_OF_LIGHT * p.mirror_transmission
        / (2.0 * PLANCK * p.cavity_length);
    root * root
}

pub fn check_delta_kick_validity(p: &PhysicalParams) -> ValidityReport {
    let n_max = max_kicks(p);
    let k = p.wavenumber();
    let p_rms = 2.0 * HBAR * k * (p.n_kicks as f64).sqrt();
    let delta_kick_ratio = p_rms * p.pulse / p.mass / p.wavelength;
    let photon_lifetime = p.photon_lifetime();

    let mut warnings = Vec::new();
    if p.n_kicks as f64 > n_max / 10.0 {
        warnings.push(ValidityWarning::KickCountNearLimit { n_kicks: p.n_kicks, n_max });
    }
    if p.pulse < 3.0 * photon_lifetime {
        warnings.push(ValidityWarning::PulseTooShort { pulse: p.pulse, photon_lifetime });
    }
    if let Some(configured) = p.finesse {
        let from_mirrors = p.mirror_finesse();
        if ((configured - from_mirrors) / configured).abs() > 0.01 {
            warnings.push(ValidityWarning::FinesseInconsistent { configured, from_mirrors });
        }
    }
    let delta_over_gamma = p.detuning / p.gamma;
    if delta_over_gamma.abs() < 10.0 {
        warnings.push(ValidityWarning::SmallDetuning { delta_over_gamma });
    }

    ValidityReport {
        n_max,
        delta_kick_ratio,
        photon_lifetime,
        kick_formulas: kick_formulas(p),
        warnings,
    }
}

fn kick_formulas(p: &PhysicalParams) -> KickFormulas {
    let f = p.finesse();
    let phi = default_operating_phase(f);
    let airy = 1.0 / (1.0 + (f * phi.sin()).powi(2));
    let i_c = cavity::airy_intensity(phi, f, p.mirror_transmission, p.injected_intensity);
    let omega0_sq = p.gamma * p.gamma / 2.0 * i_c / p.saturation_intensity;
    let wr = p.recoil_frequency();
    let (t, delta) = (p.period, p.detuning);
    KickFormulas {
        light_shift: wr * t * p.pulse * omega0_sq / delta,
        half_omega_t_squared: 0.5 * wr * t * t * omega0_sq / delta,
        saturation_form: (wr * t) * (p.gamma * t) * (p.gamma / delta) * airy / p.mirror_transmission
            * p.injected_intensity
            / p.saturation_intensity,
    }
}

/// Ehrenfest and localization times in units of the kick period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timescales {
    pub ehrenfest: f64,
    pub localization: f64,
    /// Set when `kbar > 1`, where `ln(1/kbar)` would be negative.
    pub deep_quantum: bool,
}

pub fn timescales(np: &NormalizedParams) -> Timescales {
    let raw = (1.0 / np.kbar).ln();
    Timescales {
        ehrenfest: raw.max(0.0),
        localization: (np.k_nominal / np.kbar).powi(2),
        deep_quantum: raw < 0.0,
    }
}
