//! Phase-space reconstruction from the cavity transmission series.
//!
//! Each transmission sample fixes `cos^2(X/2)`, i.e. the position up to
//! `x -> 2pi - x` (multiples of `2pi` are irrelevant on the torus). Momenta
//! follow from consecutive positions because the flight between kicks is free.
//! Branches are chosen greedily and checked three positions at a time against
//! the kick relation `p2 = p1 - K2 sin x2 (mod 2pi)`. A check whose residual
//! reaches `eps` counts as a restart. The branches of the last three positions
//! are then settled by the combination with the smallest worst-case residual,
//! and a restart whose best combination still reaches `eps` is flagged.
//!
//! Branch enumeration order, fixed so restart counts are reproducible:
//! each position has a *chosen* branch (the one currently held) and a
//! *flipped* one; the 2^3 combinations for positions `(n-2, n-1, n)` are
//! visited lexicographically with `n` varying fastest, starting from
//! (chosen, chosen, chosen). Ties keep the earliest combination.

use std::f64::consts::{FRAC_PI_2, TAU};

use serde::{Deserialize, Serialize};

use crate::angle::{arc_distance, wrap_2pi, wrap_pi};
use crate::cavity::{airy_intensity, check_monotone_response, check_operating_flank, SolverOptions};
use crate::error::{Error, Result};
use crate::params::NormalizedParams;

/// Slack on `sin^2` above 1 before a sample is rejected.
const SIN2_SLACK: f64 = 1e-9;
/// Band around `[0, 1]` in which `cos^2` is clamped instead of rejected.
const COS2_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmissionSeries {
    pub samples: Vec<f64>,
    pub params: NormalizedParams,
}

impl TransmissionSeries {
    pub fn new(samples: Vec<f64>, params: NormalizedParams) -> Result<Self> {
        if samples.len() < 3 {
            return Err(Error::Size(format!(
                "a transmission series needs at least 3 samples, got {}",
                samples.len()
            )));
        }
        for (i, &s) in samples.iter().enumerate() {
            if !(s > 0.0 && s <= 1.0) {
                return Err(Error::SignalOutOfRange {
                    value: s,
                    reason: "S/I0 must lie in (0, 1]".into(),
                }
                .at_sample(i));
            }
        }
        Ok(TransmissionSeries { samples, params })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconstructOptions {
    /// Acceptance threshold on the coherence residual (rad).
    pub eps: f64,
    /// Convergence threshold on successive position estimates (rad).
    pub tol: f64,
    pub max_iter: usize,
    /// Start from the flipped branch of the first position.
    pub first_flipped: bool,
}

impl Default for ReconstructOptions {
    fn default() -> Self {
        ReconstructOptions {
            eps: NOISELESS_EPS,
            tol: 1e-12,
            max_iter: 50,
            first_flipped: false,
        }
    }
}

pub const NOISELESS_EPS: f64 = 1e-3 * TAU;

/// `1e-3 * 2pi` without spontaneous emission; with it, wide enough to pass a
/// single recoil of `kbar`.
pub fn default_eps(np: &NormalizedParams, spontaneous_emission: bool) -> f64 {
    if spontaneous_emission {
        NOISELESS_EPS.max(np.kbar)
    } else {
        NOISELESS_EPS
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Inversion {
    /// `X mod 2pi` folded into `[0, pi]`.
    pub x_base: f64,
    pub intracavity_intensity: f64,
    pub kick_strength: f64,
    pub iterations: usize,
}

/// Recovers the folded position, intracavity intensity and kick strength from
/// one transmission sample.
///
/// Starting from the empty-cavity intensity, each pass inverts the Airy
/// relation on the operating flank for the round-trip phase, reads off the
/// Kerr phase, inverts the Kerr response for `Omega^2`, divides by the
/// standing-wave peak to get `cos^2(X/2)`, and refreshes `I_c` from the
/// recovered phase.
pub fn invert_transmission(s: f64, np: &NormalizedParams, tol: f64, max_iter: usize) -> Result<Inversion> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::SignalOutOfRange {
            value: s,
            reason: "S/I0 must lie in (0, 1]".into(),
        });
    }
    if np.kerr_scale == 0.0 || np.delta_over_gamma == 0.0 {
        return Err(Error::parameter("kerr_scale", "no Kerr shift: position cannot be inferred"));
    }
    let quarter = check_operating_flank(np)?;

    let sin2 = (1.0 / s - 1.0) / (np.finesse * np.finesse);
    if !(0.0..=1.0 + SIN2_SLACK).contains(&sin2) {
        return Err(Error::SignalOutOfRange {
            value: s,
            reason: format!("implied sin^2 of the round-trip phase is {sin2}"),
        });
    }
    let a = sin2.min(1.0).sqrt().asin();
    let q = quarter as f64;
    let phase = if quarter.rem_euclid(2) == 0 {
        q * FRAC_PI_2 + a
    } else {
        (q + 1.0) * FRAC_PI_2 - a
    };
    let kerr_phase = 2.0 * (phase - np.phi0);
    if kerr_phase == 0.0 || kerr_phase.signum() != np.delta_over_gamma.signum() {
        return Err(Error::SignalOutOfRange {
            value: s,
            reason: format!("implied Kerr phase {kerr_phase:e} has the wrong sign for the detuning"),
        });
    }
    let d = np.delta_over_gamma;
    // Omega^2 / (2 Gamma^2), from inverting the Kerr response
    let saturation = np.kerr_scale * d / kerr_phase - d * d - 0.25;

    let airy = |phi: f64| airy_intensity(phi, np.finesse, np.mirror_transmission, np.injected_intensity);
    let mut intensity = airy(np.phi0);
    let mut previous: Option<f64> = None;
    let mut step = f64::INFINITY;
    for iteration in 1..=max_iter {
        // Omega0^2 / (2 Gamma^2) = I_c / (4 I_s)
        let cos2 = 4.0 * saturation * np.saturation_intensity / intensity;
        // the first pass uses the empty-cavity intensity and may overshoot
        if iteration > 1 && !(-COS2_SLACK..=1.0 + COS2_SLACK).contains(&cos2) {
            return Err(Error::InconsistentSignal { value: s, cos2 });
        }
        let x = 2.0 * cos2.clamp(0.0, 1.0).sqrt().acos();
        intensity = airy(np.phi0 + 0.5 * kerr_phase);
        if let Some(prev) = previous {
            step = (x - prev).abs();
            if step < tol {
                return Ok(Inversion {
                    x_base: x,
                    intracavity_intensity: intensity,
                    kick_strength: np.kick_calibration * intensity,
                    iterations: iteration,
                });
            }
        }
        previous = Some(x);
    }
    Err(Error::InversionNonConvergence {
        iterations: max_iter,
        step,
    })
}

/// The two positions on `[0, 2pi)` sharing a transmission: `x` and `2pi - x`.
pub fn candidate_positions(x_base: f64) -> Vec<f64> {
    let mirrored = wrap_2pi(TAU - x_base);
    if mirrored == x_base {
        vec![x_base]
    } else {
        vec![x_base, mirrored]
    }
}

/// `{(x_next - x_prev), (x_next + x_prev)} mod 2pi`; the overall sign of the
/// momentum is not observable.
pub fn candidate_momenta(x_prev: f64, x_next: f64) -> Vec<f64> {
    let diff = wrap_2pi(x_next - x_prev);
    let sum = wrap_2pi(x_next + x_prev);
    if diff == sum {
        vec![diff]
    } else {
        vec![diff, sum]
    }
}

/// `|p2 - p1 + K2 sin x2|` wrapped to `[0, pi]`, minimized over the joint
/// sign flip of both momenta.
pub fn coherence_residual(p1: f64, p2: f64, x2: f64, k2: f64) -> f64 {
    let kick = k2 * x2.sin();
    let direct = wrap_pi(p2 - p1 + kick).abs();
    let negated = wrap_pi(p1 - p2 + kick).abs();
    direct.min(negated)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconstructedPoint {
    pub n: usize,
    pub x: f64,
    pub p: f64,
    /// A coherence test centred on this kick failed and triggered a restart.
    pub restart: bool,
    /// No branch combination passed the test centred on this kick.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructedTrajectory {
    /// One point per kick except the last, whose momentum needs the next
    /// position.
    pub points: Vec<ReconstructedPoint>,
    pub restarts: usize,
    pub flagged: Vec<usize>,
    /// Kick strength recovered from each sample.
    pub kick_strengths: Vec<f64>,
}

impl ReconstructedTrajectory {
    pub fn phase_points(&self) -> Vec<(f64, f64)> {
        self.points.iter().map(|p| (p.x, p.p)).collect()
    }
}

struct Branches<'a> {
    base: &'a [f64],
    kicks: &'a [f64],
    flipped: Vec<bool>,
}

impl Branches<'_> {
    fn position(&self, n: usize) -> f64 {
        if self.flipped[n] {
            wrap_2pi(TAU - self.base[n])
        } else {
            self.base[n]
        }
    }

    fn momentum(&self, n: usize) -> f64 {
        wrap_2pi(self.position(n + 1) - self.position(n))
    }

    /// Residual of the kick relation centred on `mid`.
    fn residual(&self, mid: usize) -> f64 {
        coherence_residual(self.momentum(mid - 1), self.momentum(mid), self.position(mid), self.kicks[mid])
    }

    /// Worst residual over the triple centred on `first + 1` and the older
    /// triples sharing a position toggled by `combo`.
    fn window_score(&self, first: usize, combo: u8) -> f64 {
        left_triples(first, combo)
            .map(|m| self.residual(m))
            .fold(self.residual(first + 1), f64::max)
    }

    fn toggle(&mut self, first: usize, combo: u8) {
        for j in 0..3 {
            if combo & (0b100 >> j) != 0 {
                self.flipped[first + j] = !self.flipped[first + j];
            }
        }
    }
}

pub fn reconstruct_trajectory(ts: &TransmissionSeries, opts: &ReconstructOptions) -> Result<ReconstructedTrajectory> {
    let n = ts.samples.len();
    if n < 3 {
        return Err(Error::Size(format!("a transmission series needs at least 3 samples, got {n}")));
    }
    let np = &ts.params;
    check_monotone_response(np, &SolverOptions::default())?;

    let mut base = Vec::with_capacity(n);
    let mut kicks = Vec::with_capacity(n);
    for (i, &s) in ts.samples.iter().enumerate() {
        let inv = invert_transmission(s, np, opts.tol, opts.max_iter).map_err(|e| e.at_sample(i))?;
        base.push(inv.x_base);
        kicks.push(inv.kick_strength);
    }

    let mut br = Branches {
        base: &base,
        kicks: &kicks,
        flipped: vec![false; n],
    };
    // The first momentum is always the difference of the first two positions.
    br.flipped[0] = opts.first_flipped;
    br.flipped[1] = opts.first_flipped;
    let mut restart = vec![false; n];
    let mut flagged = Vec::new();

    for newest in 2..n {
        // Greedy: keep the momentum as close as possible to the previous one.
        let previous = br.momentum(newest - 2);
        let keep = arc_distance(wrap_2pi(base[newest] - br.position(newest - 1)), previous);
        let flip = arc_distance(wrap_2pi(TAU - base[newest] - br.position(newest - 1)), previous);
        br.flipped[newest] = flip < keep;

        let mid = newest - 1;
        restart[mid] = br.residual(mid) >= opts.eps;

        // Every combination is scored by the worst residual among the new
        // triple and the older triples it touches; the best one is kept.
        // The branch path never looks at eps, so raising eps can only remove
        // restarts and flags.
        let first = newest - 2;
        let mut best = (br.window_score(first, 0), 0u8);
        for combo in 1u8..8 {
            br.toggle(first, combo);
            let score = br.window_score(first, combo);
            if score < best.0 {
                best = (score, combo);
            }
            br.toggle(first, combo);
        }
        br.toggle(first, best.1);
        if best.0 >= opts.eps {
            flagged.push(mid);
        }
    }

    let restarts = restart.iter().filter(|&&r| r).count();
    let points = (0..n - 1)
        .map(|i| ReconstructedPoint {
            n: i,
            x: br.position(i),
            p: br.momentum(i),
            restart: restart[i],
            flagged: flagged.binary_search(&i).is_ok(),
        })
        .collect();
    Ok(ReconstructedTrajectory {
        points,
        restarts,
        flagged,
        kick_strengths: kicks,
    })
}

/// Centres of already-tested triples, left of the window starting at
/// `first`, that contain a position toggled by `combo`.
fn left_triples(first: usize, combo: u8) -> impl Iterator<Item = usize> {
    let mut centres = Vec::with_capacity(2);
    // toggling `first` touches the triples centred on first-1 and first
    if combo & 0b100 != 0 {
        centres.extend([first.checked_sub(1), Some(first)]);
    }
    // toggling `first + 1` touches the triple centred on first
    if combo & 0b010 != 0 {
        centres.push(Some(first));
    }
    centres.sort();
    centres.dedup();
    centres.into_iter().flatten().filter(move |&m| m >= 1 && m + 1 < first + 2)
}
