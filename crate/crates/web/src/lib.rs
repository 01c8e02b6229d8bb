//! Browser bindings for the kicked-rotor simulator.
//!
//! Three operations back the demo page: a phase portrait of an ensemble
//! overlaid with its reconstruction from the transmission record, the
//! transmission and kick strength as functions of atomic position, and the
//! first-return map of the transmission. Results cross the boundary as flat
//! `Float64Array`s.

use std::f64::consts::TAU;

use kickrotor::cavity::solve_cavity_field;
use kickrotor::dynamics::{initial_grid, simulate_ensemble};
use kickrotor::metrics::{ensemble_summary, mirror};
use kickrotor::params::{default_operating_phase, normalize};
use kickrotor::reconstruct::{reconstruct_trajectory, ReconstructOptions, TransmissionSeries, NOISELESS_EPS};
use kickrotor::{
    NormalizedParams, PhysicalParams, ReconstructedTrajectory, SimOptions, SolverOptions, SpontaneousEmission,
    TrajectoryRecord,
};
use wasm_bindgen::prelude::*;

/// Match radius used for the fidelity readout.
pub const MATCH_DELTA: f64 = 1e-3;

const MAX_POINTS: usize = 200_000;

fn cesium(k: f64) -> kickrotor::Result<NormalizedParams> {
    let p = PhysicalParams::cesium_default();
    normalize(&p, k, default_operating_phase(p.finesse()))
}

fn emission(g: f64) -> SpontaneousEmission {
    if g > 0.0 {
        SpontaneousEmission::Constant(g)
    } else {
        SpontaneousEmission::Disabled
    }
}

fn ensemble(k: f64, g: f64, trajectories: usize, kicks: usize, seed: u64) -> Result<Vec<TrajectoryRecord>, String> {
    if trajectories == 0 || kicks < 3 {
        return Err("need at least one trajectory of three kicks".into());
    }
    if trajectories.saturating_mul(kicks) > MAX_POINTS {
        return Err(format!("at most {MAX_POINTS} points per request"));
    }
    if !(0.0..=1.0).contains(&g) {
        return Err(format!("emission probability {g} outside [0, 1]"));
    }
    let np = cesium(k).map_err(|e| e.to_string())?;
    let opts = SimOptions {
        emission: emission(g),
        solver: SolverOptions::default(),
    };
    simulate_ensemble(&initial_grid(trajectories), kicks, &np, &opts, seed)
        .into_iter()
        .collect::<kickrotor::Result<Vec<_>>>()
        .map_err(|e| e.to_string())
}

/// Truth and reconstruction for one ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct Portrait {
    /// `(x, p)` pairs on the torus, one per reconstructed kick.
    pub truth: Vec<f64>,
    /// Reconstructed `(x, p)` pairs, mirrored where the trajectory scored
    /// against the reflected truth.
    pub recon: Vec<f64>,
    /// Indices into the point list where a restart happened.
    pub restart_points: Vec<u32>,
    pub matched_fraction: f64,
    pub restarts: usize,
    pub flagged: usize,
}

pub fn phase_portrait(k: f64, g: f64, trajectories: usize, kicks: usize, seed: u64) -> Result<Portrait, String> {
    let truths = ensemble(k, g, trajectories, kicks, seed)?;
    let opts = ReconstructOptions {
        eps: NOISELESS_EPS,
        ..ReconstructOptions::default()
    };
    let pairs: Vec<(TrajectoryRecord, ReconstructedTrajectory)> = truths
        .into_iter()
        .map(|t| {
            let series = TransmissionSeries::new(t.transmissions(), t.params)?;
            let r = reconstruct_trajectory(&series, &opts)?;
            Ok((t, r))
        })
        .collect::<kickrotor::Result<_>>()
        .map_err(|e: kickrotor::Error| e.to_string())?;
    let summary = ensemble_summary(&pairs, MATCH_DELTA).map_err(|e| e.to_string())?;

    let mut out = Portrait {
        truth: Vec::new(),
        recon: Vec::new(),
        restart_points: Vec::new(),
        matched_fraction: summary.total.matched_fraction,
        restarts: summary.total.restarts,
        flagged: summary.total.flagged,
    };
    for ((t, r), report) in pairs.iter().zip(&summary.per_trajectory) {
        let truth = t.phase_points();
        for (pt, tp) in r.points.iter().zip(truth) {
            let shown = if report.mirrored { mirror((pt.x, pt.p)) } else { (pt.x, pt.p) };
            if pt.restart {
                out.restart_points.push((out.truth.len() / 2) as u32);
            }
            out.truth.extend([tp.0, tp.1]);
            out.recon.extend([shown.0, shown.1]);
        }
    }
    Ok(out)
}

/// `samples` rows of `(x, S/I0, K_eff)` over one period of the standing wave.
pub fn transmission_curve(k: f64, samples: usize) -> Result<Vec<f64>, String> {
    if samples < 2 {
        return Err("need at least two samples".into());
    }
    let np = cesium(k).map_err(|e| e.to_string())?;
    let opts = SolverOptions::default();
    let mut out = Vec::with_capacity(3 * samples);
    for i in 0..samples {
        let x = TAU * i as f64 / (samples - 1) as f64;
        let op = solve_cavity_field(x, &np, &opts).map_err(|e| e.to_string())?;
        out.extend([x, op.transmission, op.kick_strength]);
    }
    Ok(out)
}

/// `(S_n, S_n+1)` pairs, taken within each trajectory.
pub fn first_return(k: f64, g: f64, trajectories: usize, kicks: usize, seed: u64) -> Result<Vec<f64>, String> {
    let truths = ensemble(k, g, trajectories, kicks, seed)?;
    let mut out = Vec::with_capacity(2 * trajectories * (kicks - 1));
    for t in &truths {
        for w in t.transmissions().windows(2) {
            out.extend([w[0], w[1]]);
        }
    }
    Ok(out)
}

#[wasm_bindgen]
pub struct PortraitView {
    inner: Portrait,
}

#[wasm_bindgen]
impl PortraitView {
    pub fn truth(&self) -> Vec<f64> {
        self.inner.truth.clone()
    }

    pub fn recon(&self) -> Vec<f64> {
        self.inner.recon.clone()
    }

    #[wasm_bindgen(js_name = restartPoints)]
    pub fn restart_points(&self) -> Vec<u32> {
        self.inner.restart_points.clone()
    }

    #[wasm_bindgen(getter, js_name = matchedFraction)]
    pub fn matched_fraction(&self) -> f64 {
        self.inner.matched_fraction
    }

    #[wasm_bindgen(getter)]
    pub fn restarts(&self) -> usize {
        self.inner.restarts
    }

    #[wasm_bindgen(getter)]
    pub fn flagged(&self) -> usize {
        self.inner.flagged
    }
}

#[wasm_bindgen(js_name = phasePortrait)]
pub fn phase_portrait_js(k: f64, g: f64, trajectories: usize, kicks: usize, seed: u32) -> Result<PortraitView, JsError> {
    phase_portrait(k, g, trajectories, kicks, seed as u64)
        .map(|inner| PortraitView { inner })
        .map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = transmissionCurve)]
pub fn transmission_curve_js(k: f64, samples: usize) -> Result<Vec<f64>, JsError> {
    transmission_curve(k, samples).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = firstReturn)]
pub fn first_return_js(k: f64, g: f64, trajectories: usize, kicks: usize, seed: u32) -> Result<Vec<f64>, JsError> {
    first_return(k, g, trajectories, kicks, seed as u64).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_portrait_overlays_truth() {
        let p = phase_portrait(0.8, 0.0, 4, 60, 0).unwrap();
        assert_eq!(p.truth.len(), 2 * 4 * 59);
        assert_eq!(p.truth.len(), p.recon.len());
        assert_eq!(p.matched_fraction, 1.0);
        assert_eq!(p.flagged, 0);
        assert_eq!(p.restart_points.len(), p.restarts);
        for (a, b) in p.truth.chunks(2).zip(p.recon.chunks(2)) {
            let d = kickrotor::metrics::plain_torus_distance((a[0], a[1]), (b[0], b[1]));
            assert!(d < MATCH_DELTA, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn recoils_show_up_in_the_readout() {
        let clean = phase_portrait(0.8, 0.0, 6, 100, 3).unwrap();
        let noisy = phase_portrait(0.8, 0.1, 6, 100, 3).unwrap();
        assert!(noisy.matched_fraction < clean.matched_fraction);
    }

    #[test]
    fn curve_spans_one_period() {
        let c = transmission_curve(0.8, 65).unwrap();
        assert_eq!(c.len(), 3 * 65);
        assert_eq!(c[0], 0.0);
        assert!((c[3 * 64] - TAU).abs() < 1e-12);
        // Even in x, so both ends agree.
        assert!((c[1] - c[3 * 64 + 1]).abs() < 1e-12);
        assert!((c[2] - 0.8).abs() < 1e-9);
        assert!(c.chunks(3).all(|r| r[1] > 0.0 && r[1] <= 1.0));
    }

    #[test]
    fn first_return_pairs_stay_within_trajectories() {
        let fr = first_return(0.8, 0.0, 3, 10, 1).unwrap();
        assert_eq!(fr.len(), 2 * 3 * 9);
        // Consecutive pairs chain inside a trajectory.
        assert_eq!(fr[1], fr[2]);
    }

    #[test]
    fn bad_requests_are_rejected() {
        assert!(phase_portrait(0.8, 0.0, 0, 10, 0).is_err());
        assert!(phase_portrait(0.8, 2.0, 1, 10, 0).is_err());
        assert!(first_return(0.8, 0.0, 1000, 1000, 0).is_err());
        assert!(transmission_curve(0.8, 1).is_err());
    }
}
