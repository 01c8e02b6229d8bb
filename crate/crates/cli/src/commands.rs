//! The subcommands. Each returns an [`Outcome`] for `main` to print; files go
//! under the configured output directory.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use kickrotor::cavity::sensitivity_report;
use kickrotor::dynamics::simulate_ensemble;
use kickrotor::metrics::{ensemble_summary, mirror};
use kickrotor::params::{check_delta_kick_validity, timescales};
use kickrotor::reconstruct::{reconstruct_trajectory, ReconstructOptions, TransmissionSeries};
use kickrotor::{EnsembleSummary, Error, SpontaneousEmission, TrajectoryRecord};
use serde_json::json;

use crate::config::{coherence_eps, match_delta, RunConfig};
use crate::error::{CliError, Result};
use crate::io::{self, FirstReturnRow, Header, PhaseRow, ReconstructionRow, Schema, SeriesRow, TrajectoryRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    Warnings,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::Warnings => 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub warnings: Vec<String>,
    /// Text report for humans.
    pub text: String,
    /// The same content for machines.
    pub json: serde_json::Value,
    pub written: Vec<PathBuf>,
}

impl Outcome {
    pub fn status(&self) -> Status {
        if self.warnings.is_empty() {
            Status::Ok
        } else {
            Status::Warnings
        }
    }
}

pub const TRAJECTORY_PREFIX: &str = "trajectory";
pub const SERIES_PREFIX: &str = "series";
pub const RECONSTRUCTION_PREFIX: &str = "reconstruction";

pub fn cmd_validate(cfg: &RunConfig) -> Result<Outcome> {
    let report = check_delta_kick_validity(&cfg.physical);
    let np = cfg.normalized()?;
    let times = timescales(&np);
    let sens = sensitivity_report(&np, &cfg.solver())?;

    let mut warnings: Vec<String> = report.warnings.iter().map(|w| w.to_string()).collect();
    if sens.kick_variation_warning {
        warnings.push(format!(
            "kick strength varies by {:.2} % over a period",
            100.0 * sens.kick_variation
        ));
    }

    let mut text = String::new();
    let _ = writeln!(text, "preset               {}", cfg.preset.as_deref().unwrap_or("-"));
    let _ = writeln!(text, "K_target             {}", np.k_nominal);
    let _ = writeln!(text, "kbar                 {:.6}", np.kbar);
    let _ = writeln!(text, "F                    {:.6e}", np.finesse);
    let _ = writeln!(text, "phi0                 {:.6e} rad", np.phi0);
    let _ = writeln!(text, "kerr_scale           {:.6e}", np.kerr_scale);
    let _ = writeln!(text, "vacuum k_L dL        {:.6e} rad", np.vacuum_kerr_phase());
    let _ = writeln!(text, "max |k_L dL|         {:.6e} rad", sens.max_kerr_phase);
    let _ = writeln!(text, "dS/I0 estimate       {:.4} %", 100.0 * sens.transmission_variation);
    let _ = writeln!(text, "S swing over period  {:.4e}", sens.transmission_swing);
    let _ = writeln!(text, "kick variation       {:.4} %", 100.0 * sens.kick_variation);
    let _ = writeln!(text, "N_max                {:.4e}", report.n_max);
    let _ = writeln!(text, "delta-kick ratio     {:.4e}", report.delta_kick_ratio);
    let _ = writeln!(text, "photon lifetime      {:.4e} s", report.photon_lifetime);
    let k = &report.kick_formulas;
    let _ = writeln!(
        text,
        "K from V0 conventions  light-shift {:.4e}  half-omega-T^2 {:.4e}  saturation {:.4e}",
        k.light_shift, k.half_omega_t_squared, k.saturation_form
    );
    let _ = writeln!(
        text,
        "Ehrenfest time       {:.4} kicks{}",
        times.ehrenfest,
        if times.deep_quantum { " (kbar > 1: deep quantum regime)" } else { "" }
    );
    let _ = writeln!(text, "localization time    {:.4} kicks", times.localization);
    let _ = writeln!(text, "verdict              {}", if warnings.is_empty() { "pass" } else { "warn" });

    let json = json!({
        "physical": cfg.physical,
        "normalized": np,
        "validity": report,
        "timescales": times,
        "sensitivity": sens,
        "vacuum_kerr_phase": np.vacuum_kerr_phase(),
        "warnings": warnings,
    });
    Ok(Outcome {
        warnings,
        text,
        json,
        written: Vec::new(),
    })
}

fn create_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn indexed(dir: &Path, prefix: &str, index: &str, cfg: &RunConfig) -> PathBuf {
    dir.join(format!("{prefix}_{index}.{}", cfg.format.extension()))
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<Outcome> {
    let np = cfg.normalized()?;
    let validity = check_delta_kick_validity(&cfg.physical);
    let mut warnings: Vec<String> = validity.warnings.iter().map(|w| w.to_string()).collect();
    let sens = sensitivity_report(&np, &cfg.solver())?;
    if sens.kick_variation_warning {
        warnings.push(format!(
            "kick strength varies by {:.2} % over a period",
            100.0 * sens.kick_variation
        ));
    }

    let emission = cfg.emission();
    let initials = cfg.initial_states();
    let n_kicks = cfg.physical.n_kicks as usize;
    let runs = simulate_ensemble(&initials, n_kicks, &np, &cfg.sim_options(), cfg.seed);

    create_out(&cfg.out)?;
    let mut written = Vec::new();
    let mut failures = Vec::new();
    let mut recoils = 0usize;
    for (i, run) in runs.into_iter().enumerate() {
        let t = match run {
            Ok(t) => t,
            Err(e) => {
                failures.push(format!("trajectory {i}: {e}"));
                continue;
            }
        };
        recoils += t.kicks.iter().filter(|k| k.se_dp != 0.0).count();
        let index = format!("{i:03}");
        let path = indexed(&cfg.out, TRAJECTORY_PREFIX, &index, cfg);
        let header = Header::for_run(Schema::Trajectory, &t, Some(cfg.physical), emission);
        io::write_file(&path, &header, &io::trajectory_rows(&t), cfg.format)?;
        written.push(path);

        let path = indexed(&cfg.out, SERIES_PREFIX, &index, cfg);
        let header = Header::for_run(Schema::Series, &t, Some(cfg.physical), emission);
        io::write_file(&path, &header, &io::series_rows(&t), cfg.format)?;
        written.push(path);
    }
    if !failures.is_empty() {
        return Err(CliError::Input(failures.join("\n")));
    }

    let text = format!(
        "simulated {} trajectories x {n_kicks} kicks (seed {}, {} recoils) into {}\n",
        initials.len(),
        cfg.seed,
        recoils,
        cfg.out.display()
    );
    let json = json!({
        "trajectories": initials.len(),
        "kicks": n_kicks,
        "seed": cfg.seed,
        "recoils": recoils,
        "files": written,
        "warnings": warnings,
    });
    Ok(Outcome {
        warnings,
        text,
        json,
        written,
    })
}

/// Files named on the command line, with directories replaced by their
/// `<prefix>_*` entries in name order.
pub fn expand_inputs(inputs: &[PathBuf], prefix: &str) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(input)
                .map_err(|e| CliError::io(input, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| {
                    let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
                    name.starts_with(&format!("{prefix}_")) && (name.ends_with(".csv") || name.ends_with(".json"))
                })
                .collect();
            found.sort();
            if found.is_empty() {
                return Err(CliError::Input(format!("{}: no {prefix}_* files", input.display())));
            }
            out.extend(found);
        } else {
            out.push(input.clone());
        }
    }
    if out.is_empty() {
        return Err(CliError::Input("no input files".into()));
    }
    Ok(out)
}

/// `series_007.csv` -> `007`; other names keep their whole stem.
fn index_of(path: &Path) -> String {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    match stem.rsplit_once('_') {
        Some((_, idx)) if !idx.is_empty() => idx.to_string(),
        _ => stem.to_string(),
    }
}

fn located(path: &Path, e: Error) -> CliError {
    match e {
        Error::AtSample { index, source } => CliError::parse(path, io::csv_line(index), format!("sample n = {index}: {source}")),
        other => CliError::Core(other),
    }
}

pub fn cmd_reconstruct(cfg: &RunConfig, inputs: &[PathBuf]) -> Result<Outcome> {
    let files = expand_inputs(inputs, SERIES_PREFIX)?;
    create_out(&cfg.out)?;
    let mut warnings = Vec::new();
    let mut written = Vec::new();
    let mut summary = Vec::new();
    let (mut points, mut restarts, mut flagged) = (0usize, 0usize, 0usize);
    for path in &files {
        let (header, rows) = io::read_file::<SeriesRow>(path, Schema::Series)?;
        let samples = io::series_samples(&rows, path)?;
        let np = header
            .params
            .ok_or_else(|| CliError::parse(path, 1, "metadata lacks `params`"))?;
        let emission = header.emission.unwrap_or(SpontaneousEmission::Disabled);
        let ts = TransmissionSeries::new(samples, np).map_err(|e| located(path, e))?;
        let opts = ReconstructOptions {
            eps: coherence_eps(cfg.eps, &np, emission),
            tol: cfg.solver_tol,
            ..ReconstructOptions::default()
        };
        let r = reconstruct_trajectory(&ts, &opts).map_err(|e| located(path, e))?;

        let out = indexed(&cfg.out, RECONSTRUCTION_PREFIX, &index_of(path), cfg);
        let h = Header {
            seed: header.seed,
            stream: header.stream,
            emission: header.emission,
            params: Some(np),
            kick_strengths: Some(r.kick_strengths.clone()),
            ..Header::new(Schema::Reconstruction)
        };
        io::write_file(&out, &h, &io::reconstruction_rows(&r), cfg.format)?;
        if !r.flagged.is_empty() {
            warnings.push(format!(
                "{}: {} point(s) failed every branch combination",
                path.display(),
                r.flagged.len()
            ));
        }
        points += r.points.len();
        restarts += r.restarts;
        flagged += r.flagged.len();
        summary.push(json!({
            "input": path,
            "output": out,
            "points": r.points.len(),
            "restarts": r.restarts,
            "flagged": r.flagged,
            "eps": opts.eps,
        }));
        written.push(out);
    }
    let text = format!(
        "reconstructed {} series: {points} points, {restarts} restarts, {flagged} flagged\n",
        files.len()
    );
    Ok(Outcome {
        warnings,
        text,
        json: json!({ "points": points, "restarts": restarts, "flagged": flagged, "series": summary }),
        written,
    })
}

/// Loads truth and reconstruction files and pairs them by index.
pub fn load_pairs(
    truth: &Path,
    recon: &Path,
) -> Result<(Vec<(TrajectoryRecord, kickrotor::ReconstructedTrajectory)>, SpontaneousEmission)> {
    let truths = expand_inputs(&[truth.to_path_buf()], TRAJECTORY_PREFIX)?;
    let recons = expand_inputs(&[recon.to_path_buf()], RECONSTRUCTION_PREFIX)?;
    let paired: Vec<(PathBuf, PathBuf)> = if truths.len() == 1 && recons.len() == 1 {
        vec![(truths[0].clone(), recons[0].clone())]
    } else {
        let mut out = Vec::new();
        for t in &truths {
            let idx = index_of(t);
            let r = recons
                .iter()
                .find(|r| index_of(r) == idx)
                .ok_or_else(|| CliError::Input(format!("no reconstruction for {}", t.display())))?;
            out.push((t.clone(), r.clone()));
        }
        if out.len() != recons.len() {
            return Err(CliError::Input(format!(
                "{} reconstructions for {} trajectories",
                recons.len(),
                out.len()
            )));
        }
        out
    };

    let mut emission = SpontaneousEmission::Disabled;
    let mut pairs = Vec::with_capacity(paired.len());
    for (tp, rp) in &paired {
        let (th, trows) = io::read_file::<TrajectoryRow>(tp, Schema::Trajectory)?;
        let (rh, rrows) = io::read_file::<ReconstructionRow>(rp, Schema::Reconstruction)?;
        if let Some(e) = th.emission {
            if e.is_active() {
                emission = e;
            }
        }
        pairs.push((io::trajectory_from(&th, &trows, tp)?, io::reconstruction_from(&rh, &rrows, rp)?));
    }
    Ok((pairs, emission))
}

pub fn cmd_compare(cfg: &RunConfig, truth: &Path, recon: &Path) -> Result<Outcome> {
    let (pairs, emission) = load_pairs(truth, recon)?;
    let np = pairs[0].0.params;
    let delta = match_delta(cfg.delta, &np, emission);
    let summary: EnsembleSummary = ensemble_summary(&pairs, delta)?;

    create_out(&cfg.out)?;
    let mut truth_rows = Vec::new();
    let mut recon_rows = Vec::new();
    for ((t, r), rep) in pairs.iter().zip(&summary.per_trajectory) {
        truth_rows.extend(t.phase_points().into_iter().map(|(x, p)| PhaseRow { x, p }));
        // Reconstructions are drawn in the reflection class they were scored in.
        recon_rows.extend(r.phase_points().into_iter().map(|a| {
            let (x, p) = if rep.mirrored { mirror(a) } else { a };
            PhaseRow { x, p }
        }));
    }
    let ext = cfg.format.extension();
    let truth_path = cfg.out.join(format!("phase_truth.{ext}"));
    let recon_path = cfg.out.join(format!("phase_recon.{ext}"));
    let fidelity_path = cfg.out.join("fidelity.json");
    io::write_file(&truth_path, &Header::new(Schema::PhaseMap), &truth_rows, cfg.format)?;
    io::write_file(&recon_path, &Header::new(Schema::PhaseMap), &recon_rows, cfg.format)?;
    let json = json!({ "delta": delta, "summary": summary });
    let mut body = serde_json::to_string_pretty(&json).expect("report serializes");
    body.push('\n');
    std::fs::write(&fidelity_path, body).map_err(|e| CliError::io(&fidelity_path, e))?;

    let t = &summary.total;
    let mut text = String::new();
    let _ = writeln!(text, "trajectories       {}", pairs.len());
    let _ = writeln!(text, "points             {}", t.n_points);
    let _ = writeln!(text, "delta              {delta:.6e} rad");
    let _ = writeln!(text, "matched fraction   {:.6}", t.matched_fraction);
    let _ = writeln!(text, "mean distance      {:.6e} rad", t.mean_distance);
    let _ = writeln!(text, "restart fraction   {:.6} ({} restarts)", t.restart_fraction, t.restarts);
    let _ = writeln!(text, "flagged fraction   {:.6} ({} flagged)", t.flagged_fraction, t.flagged);
    Ok(Outcome {
        warnings: Vec::new(),
        text,
        json,
        written: vec![truth_path, recon_path, fidelity_path],
    })
}

pub fn cmd_first_return(cfg: &RunConfig, inputs: &[PathBuf]) -> Result<Outcome> {
    let files = expand_inputs(inputs, SERIES_PREFIX)?;
    let mut rows = Vec::new();
    for path in &files {
        let (_, series) = io::read_file::<SeriesRow>(path, Schema::Series)?;
        let samples = io::series_samples(&series, path)?;
        if samples.len() < 2 {
            return Err(CliError::Core(Error::Size(format!(
                "{}: a first-return map needs at least 2 samples, got {}",
                path.display(),
                samples.len()
            ))));
        }
        rows.extend(samples.windows(2).map(|w| FirstReturnRow { S_n: w[0], S_next: w[1] }));
    }
    create_out(&cfg.out)?;
    let path = cfg.out.join(format!("first_return.{}", cfg.format.extension()));
    io::write_file(&path, &Header::new(Schema::FirstReturn), &rows, cfg.format)?;
    Ok(Outcome {
        warnings: Vec::new(),
        text: format!("{} first-return pairs from {} series\n", rows.len(), files.len()),
        json: json!({ "pairs": rows.len(), "series": files.len(), "file": path }),
        written: vec![path],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(dir: &Path) -> RunConfig {
        RunConfig {
            out: dir.to_path_buf(),
            n_trajectories: 2,
            g_override: Some(0.0),
            physical: kickrotor::PhysicalParams {
                n_kicks: 30,
                ..kickrotor::PhysicalParams::cesium_default()
            },
            ..RunConfig::default()
        }
    }

    #[test]
    fn index_from_names() {
        assert_eq!(index_of(Path::new("a/series_007.csv")), "007");
        assert_eq!(index_of(Path::new("data.csv")), "data");
    }

    #[test]
    fn pipeline_in_process() {
        let dir = tempfile::tempdir().unwrap();
        let c = cfg(dir.path());
        let sim = cmd_simulate(&c).unwrap();
        assert_eq!(sim.written.len(), 4);
        let rec = cmd_reconstruct(&c, &[dir.path().to_path_buf()]).unwrap();
        assert_eq!(rec.written.len(), 2);
        let cmp = cmd_compare(&c, dir.path(), dir.path()).unwrap();
        assert_eq!(cmp.json["summary"]["total"]["matched_fraction"], 1.0);
        let fr = cmd_first_return(&c, &[dir.path().to_path_buf()]).unwrap();
        assert_eq!(fr.json["pairs"], 2 * 29);
    }

    #[test]
    fn parked_atom_gives_constant_series() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = cfg(dir.path());
        c.n_trajectories = 1;
        // sin 0 is exactly zero, so the atom never moves.
        c.initials = crate::config::Initials::List(vec![kickrotor::State::new(0.0, 0.0)]);
        cmd_simulate(&c).unwrap();
        let (_, rows) = io::read_file::<SeriesRow>(&dir.path().join("series_000.csv"), Schema::Series).unwrap();
        assert!(rows.iter().all(|r| r.S_over_I0 == rows[0].S_over_I0));
        let fr = cmd_first_return(&c, &[dir.path().to_path_buf()]).unwrap();
        let (_, pts) = io::read_file::<FirstReturnRow>(&fr.written[0], Schema::FirstReturn).unwrap();
        assert!(pts.iter().all(|p| p.S_n == p.S_next && p.S_n == pts[0].S_n));
    }
}
