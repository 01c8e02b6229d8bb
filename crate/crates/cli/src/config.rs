//! Run configuration: a flat TOML file whose physical keys mirror
//! [`PhysicalParams`] (SI units), layered over a named preset.
//!
//! ```toml
//! preset = "cesium-default"
//! T = 20e-6
//! K_target = 0.8
//! g_override = 0.0
//! n_trajectories = 20
//! seed = 0
//! ```

use std::path::{Path, PathBuf};

use kickrotor::dynamics::initial_grid;
use kickrotor::params::{default_operating_phase, normalize};
use kickrotor::reconstruct::default_eps;
use kickrotor::{NormalizedParams, PhysicalParams, SimOptions, SolverOptions, SpontaneousEmission, State};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const DEFAULT_PRESET: &str = "cesium-default";
pub const NOISELESS_DELTA: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Initial conditions of the ensemble.
#[derive(Debug, Clone, PartialEq)]
pub enum Initials {
    /// Cell centres of a near-square grid over the torus.
    Grid,
    List(Vec<State>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub preset: Option<String>,
    pub physical: PhysicalParams,
    pub k_target: f64,
    /// Bare-cavity operating phase; `None` selects the half-width point.
    pub phi0: Option<f64>,
    pub g_override: Option<f64>,
    pub n_trajectories: usize,
    pub initials: Initials,
    pub seed: u64,
    pub solver_tol: f64,
    pub eps: Option<f64>,
    pub delta: Option<f64>,
    pub out: PathBuf,
    pub format: Format,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            preset: Some(DEFAULT_PRESET.to_string()),
            physical: PhysicalParams::cesium_default(),
            k_target: 0.8,
            phi0: None,
            g_override: None,
            n_trajectories: 20,
            initials: Initials::Grid,
            seed: 0,
            solver_tol: SolverOptions::default().tol,
            eps: None,
            delta: None,
            out: PathBuf::from("out"),
            format: Format::Csv,
        }
    }
}

#[allow(non_snake_case)]
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    preset: Option<String>,
    lambda_L: Option<f64>,
    M: Option<f64>,
    Gamma: Option<f64>,
    Delta: Option<f64>,
    T: Option<f64>,
    tau: Option<f64>,
    I0: Option<f64>,
    I_s: Option<f64>,
    Tmirror: Option<f64>,
    L: Option<f64>,
    L_at: Option<f64>,
    n_kicks: Option<u64>,
    F: Option<f64>,
    K_target: Option<f64>,
    phi0: Option<f64>,
    g_override: Option<f64>,
    n_trajectories: Option<usize>,
    initials: Option<Vec<[f64; 2]>>,
    seed: Option<u64>,
    solver_tol: Option<f64>,
    eps: Option<f64>,
    delta: Option<f64>,
    out: Option<PathBuf>,
    format: Option<Format>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub kicks: Option<u64>,
    pub trajectories: Option<usize>,
    pub g_override: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        let mut cfg = RunConfig::default();
        let preset = raw.preset.clone().unwrap_or_else(|| DEFAULT_PRESET.to_string());
        cfg.physical = PhysicalParams::preset(&preset).ok_or_else(|| {
            CliError::Config(format!(
                "unknown preset {preset:?}; known: {}",
                PhysicalParams::PRESET_NAMES.join(", ")
            ))
        })?;
        cfg.preset = Some(preset);

        let p = &mut cfg.physical;
        let set = |slot: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        set(&mut p.wavelength, raw.lambda_L);
        set(&mut p.mass, raw.M);
        set(&mut p.gamma, raw.Gamma);
        set(&mut p.detuning, raw.Delta);
        set(&mut p.period, raw.T);
        set(&mut p.pulse, raw.tau);
        set(&mut p.injected_intensity, raw.I0);
        set(&mut p.saturation_intensity, raw.I_s);
        set(&mut p.mirror_transmission, raw.Tmirror);
        set(&mut p.cavity_length, raw.L);
        set(&mut p.atomic_size, raw.L_at);
        if let Some(n) = raw.n_kicks {
            p.n_kicks = n;
        }
        if raw.F.is_some() {
            p.finesse = raw.F;
        }

        set(&mut cfg.k_target, raw.K_target);
        cfg.phi0 = raw.phi0;
        cfg.g_override = raw.g_override;
        if let Some(n) = raw.n_trajectories {
            cfg.n_trajectories = n;
        }
        if let Some(list) = raw.initials {
            cfg.initials = Initials::List(list.into_iter().map(|[x, p]| State::new(x, p)).collect());
            if raw.n_trajectories.is_none() {
                cfg.n_trajectories = cfg.initial_count();
            }
        }
        if let Some(seed) = raw.seed {
            cfg.seed = seed;
        }
        set(&mut cfg.solver_tol, raw.solver_tol);
        cfg.eps = raw.eps;
        cfg.delta = raw.delta;
        if let Some(out) = raw.out {
            cfg.out = out;
        }
        if let Some(format) = raw.format {
            cfg.format = format;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Loads `path` (or the defaults) and applies `over`, then checks the
    /// invariants.
    pub fn resolve(path: Option<&Path>, over: &Overrides) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => Self::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(seed) = over.seed {
            cfg.seed = seed;
        }
        if let Some(k) = over.kicks {
            cfg.physical.n_kicks = k;
        }
        if let Some(n) = over.trajectories {
            cfg.n_trajectories = n;
        }
        if over.g_override.is_some() {
            cfg.g_override = over.g_override;
        }
        if let Some(out) = &over.out {
            cfg.out = out.clone();
        }
        if let Some(f) = over.format {
            cfg.format = f;
        }
        cfg.check()?;
        Ok(cfg)
    }

    pub fn check(&self) -> Result<()> {
        if self.physical.n_kicks < 1 {
            return Err(CliError::Config("n_kicks must be at least 1".into()));
        }
        if self.n_trajectories < 1 {
            return Err(CliError::Config("n_trajectories must be at least 1".into()));
        }
        if let Initials::List(list) = &self.initials {
            if list.len() != self.n_trajectories {
                return Err(CliError::Config(format!(
                    "{} initial conditions listed for {} trajectories",
                    list.len(),
                    self.n_trajectories
                )));
            }
        }
        if let Some(g) = self.g_override {
            if !(0.0..1.0).contains(&g) {
                return Err(CliError::Config(format!("g_override must lie in [0, 1), got {g}")));
            }
        }
        for (name, v) in [("eps", self.eps), ("delta", self.delta)] {
            if let Some(v) = v {
                if !(v > 0.0) {
                    return Err(CliError::Config(format!("{name} must be positive, got {v}")));
                }
            }
        }
        if !(self.solver_tol > 0.0) {
            return Err(CliError::Config("solver_tol must be positive".into()));
        }
        self.physical.validate()?;
        Ok(())
    }

    fn initial_count(&self) -> usize {
        match &self.initials {
            Initials::Grid => self.n_trajectories,
            Initials::List(l) => l.len(),
        }
    }

    pub fn operating_phase(&self) -> f64 {
        self.phi0.unwrap_or_else(|| default_operating_phase(self.physical.finesse()))
    }

    pub fn normalized(&self) -> Result<NormalizedParams> {
        Ok(normalize(&self.physical, self.k_target, self.operating_phase())?)
    }

    pub fn initial_states(&self) -> Vec<State> {
        match &self.initials {
            Initials::Grid => initial_grid(self.n_trajectories),
            Initials::List(l) => l.clone(),
        }
    }

    pub fn emission(&self) -> SpontaneousEmission {
        match self.g_override {
            Some(g) => SpontaneousEmission::Constant(g),
            None => SpontaneousEmission::PositionDependent,
        }
    }

    pub fn solver(&self) -> SolverOptions {
        SolverOptions {
            tol: self.solver_tol,
            ..SolverOptions::default()
        }
    }

    pub fn sim_options(&self) -> SimOptions {
        SimOptions {
            emission: self.emission(),
            solver: self.solver(),
        }
    }
}

/// Coherence tolerance: configured, or the default for the emission mode the
/// series was produced with.
pub fn coherence_eps(configured: Option<f64>, np: &NormalizedParams, emission: SpontaneousEmission) -> f64 {
    configured.unwrap_or_else(|| default_eps(np, emission.is_active()))
}

/// Match radius: configured, `1e-3` for noiseless runs, `kbar` with recoils.
pub fn match_delta(configured: Option<f64>, np: &NormalizedParams, emission: SpontaneousEmission) -> f64 {
    configured.unwrap_or(if emission.is_active() { np.kbar } else { NOISELESS_DELTA })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_the_default() {
        assert_eq!(RunConfig::from_toml_str("").unwrap(), RunConfig::default());
    }

    #[test]
    fn physical_keys_override_preset() {
        let cfg = RunConfig::from_toml_str("T = 2e-5\nTmirror = 2e-6\nF = 1e6\nn_kicks = 40\n").unwrap();
        assert_eq!(cfg.physical.period, 2e-5);
        assert_eq!(cfg.physical.mirror_transmission, 2e-6);
        assert_eq!(cfg.physical.n_kicks, 40);
        assert_eq!(cfg.physical.wavelength, 852e-9);
    }

    #[test]
    fn unknown_keys_and_presets_are_rejected() {
        assert!(matches!(RunConfig::from_toml_str("Kappa = 1.0"), Err(CliError::Config(_))));
        assert!(matches!(RunConfig::from_toml_str("preset = \"rubidium\""), Err(CliError::Config(_))));
    }

    #[test]
    fn explicit_initials_set_the_count() {
        let cfg = RunConfig::from_toml_str("initials = [[0.1, 0.2], [1.0, 2.0]]").unwrap();
        assert_eq!(cfg.n_trajectories, 2);
        assert_eq!(cfg.initial_states()[1], State::new(1.0, 2.0));
        let bad = RunConfig::from_toml_str("initials = [[0.1, 0.2]]\nn_trajectories = 3").unwrap();
        assert!(bad.check().is_err());
    }

    #[test]
    fn overrides_win() {
        let over = Overrides {
            seed: Some(9),
            kicks: Some(12),
            trajectories: Some(3),
            g_override: Some(0.05),
            out: Some(PathBuf::from("elsewhere")),
            format: Some(Format::Json),
        };
        let cfg = RunConfig::resolve(None, &over).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.physical.n_kicks, 12);
        assert_eq!(cfg.n_trajectories, 3);
        assert_eq!(cfg.emission(), SpontaneousEmission::Constant(0.05));
        assert_eq!(cfg.format, Format::Json);
    }

    #[test]
    fn invariants_checked() {
        for text in ["n_kicks = 0", "n_trajectories = 0", "g_override = 1.0", "eps = -1.0", "T = -1.0"] {
            let cfg = RunConfig::from_toml_str(text).unwrap();
            assert!(cfg.check().is_err(), "{text}");
        }
    }

    #[test]
    fn tolerance_defaults_follow_emission() {
        let np = RunConfig::default().normalized().unwrap();
        let off = SpontaneousEmission::Constant(0.0);
        assert_eq!(match_delta(None, &np, off), NOISELESS_DELTA);
        assert_eq!(match_delta(None, &np, SpontaneousEmission::PositionDependent), np.kbar);
        assert_eq!(match_delta(Some(0.5), &np, off), 0.5);
        assert!(coherence_eps(None, &np, off) < coherence_eps(None, &np, SpontaneousEmission::Constant(0.1)));
    }
}
