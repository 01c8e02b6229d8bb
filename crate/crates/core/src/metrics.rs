//! Reconstruction quality.
//!
//! Distances live on the torus `[0, 2pi)^2` and are taken modulo the map's
//! reflection `(x, p) -> (-x, -p)`, which the transmission cannot resolve.

use serde::{Deserialize, Serialize};

use crate::angle::{wrap_2pi, wrap_pi};
use crate::dynamics::TrajectoryRecord;
use crate::error::{Error, Result};
use crate::reconstruct::ReconstructedTrajectory;

pub type PhasePoint = (f64, f64);

pub fn mirror(a: PhasePoint) -> PhasePoint {
    (wrap_2pi(-a.0), wrap_2pi(-a.1))
}

/// Wrapped Euclidean distance, without the reflection.
pub fn plain_torus_distance(a: PhasePoint, b: PhasePoint) -> f64 {
    wrap_pi(a.0 - b.0).hypot(wrap_pi(a.1 - b.1))
}

pub fn torus_distance(a: PhasePoint, b: PhasePoint) -> f64 {
    plain_torus_distance(a, b).min(plain_torus_distance(mirror(a), b))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub matched_fraction: f64,
    pub mean_distance: f64,
    pub restart_fraction: f64,
    pub flagged_fraction: f64,
    pub n_points: usize,
    pub matched: usize,
    pub restarts: usize,
    pub flagged: usize,
    /// The reconstruction was scored against the mirror image of the truth.
    pub mirrored: bool,
}

/// Scores a reconstruction against its ground truth, aligned by kick index.
///
/// The reflection is chosen once for the whole trajectory, by majority over
/// the points that match under either element.
pub fn trajectory_fidelity(
    truth: &TrajectoryRecord,
    recon: &ReconstructedTrajectory,
    delta: f64,
) -> Result<FidelityReport> {
    let n_truth = truth.kicks.len();
    let n_recon = recon.points.len();
    if n_recon == 0 {
        return Err(Error::Size("empty reconstruction".into()));
    }
    if n_recon != n_truth && n_recon + 1 != n_truth {
        return Err(Error::Alignment(format!(
            "{n_recon} reconstructed points against {n_truth} kicks"
        )));
    }

    let mut pairs = Vec::with_capacity(n_recon);
    for pt in &recon.points {
        let k = truth
            .kicks
            .get(pt.n)
            .ok_or_else(|| Error::Alignment(format!("reconstructed kick {} has no ground truth", pt.n)))?;
        let t = (wrap_2pi(k.x), wrap_2pi(k.p));
        let r = (pt.x, pt.p);
        pairs.push((plain_torus_distance(r, t), plain_torus_distance(mirror(r), t)));
    }

    let direct = pairs.iter().filter(|d| d.0 < delta).count();
    let reflected = pairs.iter().filter(|d| d.1 < delta).count();
    let mirrored = reflected > direct;
    let pick = |d: &(f64, f64)| if mirrored { d.1 } else { d.0 };

    let matched = if mirrored { reflected } else { direct };
    let mean_distance = pairs.iter().map(pick).sum::<f64>() / n_recon as f64;
    let flagged = recon.flagged.len();
    Ok(FidelityReport {
        matched_fraction: matched as f64 / n_recon as f64,
        mean_distance,
        restart_fraction: recon.restarts as f64 / n_recon as f64,
        flagged_fraction: flagged as f64 / n_recon as f64,
        n_points: n_recon,
        matched,
        restarts: recon.restarts,
        flagged,
        mirrored,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub total: FidelityReport,
    pub per_trajectory: Vec<FidelityReport>,
}

/// Pools point counts over the ensemble; fractions are ratios of totals.
pub fn ensemble_summary(
    pairs: &[(TrajectoryRecord, ReconstructedTrajectory)],
    delta: f64,
) -> Result<EnsembleSummary> {
    if pairs.is_empty() {
        return Err(Error::Size("no trajectories to summarize".into()));
    }
    let per_trajectory = pairs
        .iter()
        .map(|(t, r)| trajectory_fidelity(t, r, delta))
        .collect::<Result<Vec<_>>>()?;
    Ok(EnsembleSummary {
        total: pool(&per_trajectory),
        per_trajectory,
    })
}

fn pool(reports: &[FidelityReport]) -> FidelityReport {
    let n: usize = reports.iter().map(|r| r.n_points).sum();
    let matched: usize = reports.iter().map(|r| r.matched).sum();
    let restarts: usize = reports.iter().map(|r| r.restarts).sum();
    let flagged: usize = reports.iter().map(|r| r.flagged).sum();
    let distance: f64 = reports.iter().map(|r| r.mean_distance * r.n_points as f64).sum();
    let nf = n as f64;
    FidelityReport {
        matched_fraction: matched as f64 / nf,
        mean_distance: distance / nf,
        restart_fraction: restarts as f64 / nf,
        flagged_fraction: flagged as f64 / nf,
        n_points: n,
        matched,
        restarts,
        flagged,
        mirrored: reports.iter().filter(|r| r.mirrored).count() * 2 > reports.len(),
    }
}
