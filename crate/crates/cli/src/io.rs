//! File schemas.
//!
//! CSV files start with one `# ` line holding the JSON [`Header`], followed by
//! a column-name row and the data. JSON files hold `{"header": .., "rows": ..}`
//! with the same column names. Floats are written in their shortest exactly
//! round-tripping form, so `decode(encode(x)) == x`.

use std::path::Path;

use kickrotor::{
    NormalizedParams, PhysicalParams, ReconstructedTrajectory, SpontaneousEmission, State, TrajectoryRecord,
};
use kickrotor::dynamics::KickRecord;
use kickrotor::reconstruct::ReconstructedPoint;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::Format;
use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schema {
    Trajectory,
    Series,
    Reconstruction,
    FirstReturn,
    PhaseMap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub schema: Schema,
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stream: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<State>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emission: Option<SpontaneousEmission>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<NormalizedParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub physical: Option<PhysicalParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kick_strengths: Option<Vec<f64>>,
}

impl Header {
    pub fn new(schema: Schema) -> Self {
        Header {
            schema,
            schema_version: SCHEMA_VERSION,
            seed: None,
            stream: None,
            initial: None,
            emission: None,
            params: None,
            physical: None,
            kick_strengths: None,
        }
    }

    /// Header shared by the trajectory and series files of one run.
    pub fn for_run(schema: Schema, t: &TrajectoryRecord, physical: Option<PhysicalParams>, emission: SpontaneousEmission) -> Self {
        Header {
            seed: Some(t.seed),
            stream: Some(t.stream),
            initial: Some(t.initial),
            emission: Some(emission),
            params: Some(t.params),
            physical,
            ..Header::new(schema)
        }
    }
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub n: usize,
    pub X: f64,
    pub P: f64,
    pub K_eff: f64,
    pub S_over_I0: f64,
    pub se_dp: f64,
    pub g_a: f64,
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub n: usize,
    pub S_over_I0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionRow {
    pub n: usize,
    pub x: f64,
    pub p: f64,
    pub restart_flag: u8,
    pub flagged: u8,
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirstReturnRow {
    pub S_n: f64,
    pub S_next: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseRow {
    pub x: f64,
    pub p: f64,
}

#[derive(Serialize)]
struct DocRef<'a, R> {
    header: &'a Header,
    rows: &'a [R],
}

#[derive(Deserialize)]
struct Doc<R> {
    header: Header,
    rows: Vec<R>,
}

pub fn encode<R: Serialize>(header: &Header, rows: &[R], format: Format) -> Result<String> {
    let json_err = |e: serde_json::Error| CliError::Input(format!("serialization failed: {e}"));
    match format {
        Format::Json => {
            let mut text = serde_json::to_string_pretty(&DocRef { header, rows }).map_err(json_err)?;
            text.push('\n');
            Ok(text)
        }
        Format::Csv => {
            let mut out = String::from("# ");
            out.push_str(&serde_json::to_string(header).map_err(json_err)?);
            out.push('\n');
            let mut w = csv::Writer::from_writer(Vec::new());
            for row in rows {
                w.serialize(row)
                    .map_err(|e| CliError::Input(format!("serialization failed: {e}")))?;
            }
            let body = w
                .into_inner()
                .map_err(|e| CliError::Input(format!("serialization failed: {e}")))?;
            out.push_str(&String::from_utf8(body).expect("csv output is utf-8"));
            Ok(out)
        }
    }
}

/// Parses either format; the first character decides which.
pub fn decode<R: DeserializeOwned>(text: &str, path: &Path) -> Result<(Header, Vec<R>)> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('{') {
        let doc: Doc<R> = serde_json::from_str(text).map_err(|e| CliError::parse(path, e.line(), e.to_string()))?;
        return check_version(doc.header, path).map(|h| (h, doc.rows));
    }
    let (first, body) = text.split_once('\n').unwrap_or((text, ""));
    let meta = first
        .strip_prefix('#')
        .ok_or_else(|| CliError::parse(path, 1, "missing '#' metadata line"))?;
    let header: Header =
        serde_json::from_str(meta.trim()).map_err(|e| CliError::parse(path, 1, format!("metadata: {e}")))?;
    let header = check_version(header, path)?;
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    let mut rows = Vec::new();
    for rec in reader.deserialize() {
        let row: R = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize + 1);
            CliError::parse(path, line, e.to_string())
        })?;
        rows.push(row);
    }
    Ok((header, rows))
}

fn check_version(h: Header, path: &Path) -> Result<Header> {
    if h.schema_version != SCHEMA_VERSION {
        return Err(CliError::parse(
            path,
            1,
            format!("schema version {} is not supported (expected {SCHEMA_VERSION})", h.schema_version),
        ));
    }
    Ok(h)
}

pub fn write_file<R: Serialize>(path: &Path, header: &Header, rows: &[R], format: Format) -> Result<()> {
    let text = encode(header, rows, format)?;
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn read_file<R: DeserializeOwned>(path: &Path, expected: Schema) -> Result<(Header, Vec<R>)> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let (header, rows) = decode(&text, path)?;
    if header.schema != expected {
        return Err(CliError::parse(
            path,
            1,
            format!("expected a {expected:?} file, found {:?}", header.schema),
        ));
    }
    Ok((header, rows))
}

/// 1-based file line of data row `i` in the CSV layout.
pub fn csv_line(i: usize) -> usize {
    i + 3
}

pub fn trajectory_rows(t: &TrajectoryRecord) -> Vec<TrajectoryRow> {
    t.kicks
        .iter()
        .map(|k| TrajectoryRow {
            n: k.n,
            X: k.x,
            P: k.p,
            K_eff: k.kick_strength,
            S_over_I0: k.transmission,
            se_dp: k.se_dp,
            g_a: k.g_a,
        })
        .collect()
}

pub fn series_rows(t: &TrajectoryRecord) -> Vec<SeriesRow> {
    t.kicks
        .iter()
        .map(|k| SeriesRow {
            n: k.n,
            S_over_I0: k.transmission,
        })
        .collect()
}

pub fn reconstruction_rows(r: &ReconstructedTrajectory) -> Vec<ReconstructionRow> {
    r.points
        .iter()
        .map(|p| ReconstructionRow {
            n: p.n,
            x: p.x,
            p: p.p,
            restart_flag: p.restart as u8,
            flagged: p.flagged as u8,
        })
        .collect()
}

fn require<T>(v: Option<T>, field: &str, path: &Path) -> Result<T> {
    v.ok_or_else(|| CliError::parse(path, 1, format!("metadata lacks `{field}`")))
}

fn check_indices(ns: impl Iterator<Item = usize>, path: &Path) -> Result<()> {
    for (i, n) in ns.enumerate() {
        if n != i {
            return Err(CliError::parse(path, csv_line(i), format!("expected n = {i}, found {n}")));
        }
    }
    Ok(())
}

pub fn trajectory_from(header: &Header, rows: &[TrajectoryRow], path: &Path) -> Result<TrajectoryRecord> {
    check_indices(rows.iter().map(|r| r.n), path)?;
    Ok(TrajectoryRecord {
        params: require(header.params, "params", path)?,
        seed: require(header.seed, "seed", path)?,
        stream: require(header.stream, "stream", path)?,
        initial: require(header.initial, "initial", path)?,
        kicks: rows
            .iter()
            .map(|r| KickRecord {
                n: r.n,
                x: r.X,
                p: r.P,
                kick_strength: r.K_eff,
                transmission: r.S_over_I0,
                se_dp: r.se_dp,
                g_a: r.g_a,
            })
            .collect(),
    })
}

/// Samples in file order, after checking the index column.
pub fn series_samples(rows: &[SeriesRow], path: &Path) -> Result<Vec<f64>> {
    check_indices(rows.iter().map(|r| r.n), path)?;
    Ok(rows.iter().map(|r| r.S_over_I0).collect())
}

pub fn reconstruction_from(header: &Header, rows: &[ReconstructionRow], path: &Path) -> Result<ReconstructedTrajectory> {
    check_indices(rows.iter().map(|r| r.n), path)?;
    let flag = |v: u8, i: usize| match v {
        0 => Ok(false),
        1 => Ok(true),
        other => Err(CliError::parse(path, csv_line(i), format!("flag must be 0 or 1, found {other}"))),
    };
    let mut points = Vec::with_capacity(rows.len());
    for (i, r) in rows.iter().enumerate() {
        points.push(ReconstructedPoint {
            n: r.n,
            x: r.x,
            p: r.p,
            restart: flag(r.restart_flag, i)?,
            flagged: flag(r.flagged, i)?,
        });
    }
    Ok(ReconstructedTrajectory {
        restarts: points.iter().filter(|p| p.restart).count(),
        flagged: points.iter().filter(|p| p.flagged).map(|p| p.n).collect(),
        points,
        kick_strengths: header.kick_strengths.clone().unwrap_or_default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use kickrotor::dynamics::simulate_trajectory;
    use kickrotor::reconstruct::{reconstruct_trajectory, ReconstructOptions, TransmissionSeries};
    use kickrotor::SimOptions;

    fn sample() -> TrajectoryRecord {
        let cfg = crate::config::RunConfig::default();
        let np = cfg.normalized().unwrap();
        let opts = SimOptions {
            emission: SpontaneousEmission::Constant(0.3),
            ..SimOptions::default()
        };
        simulate_trajectory(State::new(0.3, 1.7), 40, &np, &opts, 5).unwrap()
    }

    fn round_trip<R: Serialize + DeserializeOwned>(h: &Header, rows: &[R], f: Format) -> (Header, Vec<R>) {
        let text = encode(h, rows, f).unwrap();
        decode(&text, Path::new("mem")).unwrap()
    }

    #[test]
    fn trajectory_round_trips_exactly() {
        let t = sample();
        let h = Header::for_run(Schema::Trajectory, &t, Some(PhysicalParams::cesium_default()), SpontaneousEmission::Constant(0.3));
        for f in [Format::Csv, Format::Json] {
            let (h2, rows) = round_trip(&h, &trajectory_rows(&t), f);
            assert_eq!(h2, h);
            assert_eq!(trajectory_from(&h2, &rows, Path::new("mem")).unwrap(), t);
        }
    }

    #[test]
    fn reconstruction_round_trips_exactly() {
        let t = sample();
        let ts = TransmissionSeries::new(t.transmissions(), t.params).unwrap();
        let r = reconstruct_trajectory(&ts, &ReconstructOptions::default()).unwrap();
        let h = Header {
            kick_strengths: Some(r.kick_strengths.clone()),
            ..Header::new(Schema::Reconstruction)
        };
        for f in [Format::Csv, Format::Json] {
            let (h2, rows) = round_trip(&h, &reconstruction_rows(&r), f);
            assert_eq!(reconstruction_from(&h2, &rows, Path::new("mem")).unwrap(), r);
        }
    }

    #[test]
    fn awkward_floats_survive() {
        let rows: Vec<PhaseRow> = [0.1, 1e-300, 5e-324, f64::MAX, 2.0 / 3.0, std::f64::consts::TAU.next_down()]
            .iter()
            .map(|&x| PhaseRow { x, p: -x })
            .collect();
        let (_, back) = round_trip(&Header::new(Schema::PhaseMap), &rows, Format::Csv);
        assert_eq!(back, rows);
    }

    #[test]
    fn csv_layout() {
        let rows = [SeriesRow { n: 0, S_over_I0: 0.5 }];
        let text = encode(&Header::new(Schema::Series), &rows, Format::Csv).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], r##"# {"schema":"series","schema_version":1}"##);
        assert_eq!(lines[1], "n,S_over_I0");
        assert_eq!(lines[2], "0,0.5");
    }

    #[test]
    fn parse_errors_carry_lines() {
        let text = "# {\"schema\":\"series\",\"schema_version\":1}\nn,S_over_I0\n0,0.5\n1,abc\n";
        match decode::<SeriesRow>(text, Path::new("s.csv")) {
            Err(CliError::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
        let text = "# {\"schema\":\"series\",\"schema_version\":7}\nn,S_over_I0\n";
        assert!(decode::<SeriesRow>(text, Path::new("s.csv")).is_err());
        assert!(decode::<SeriesRow>("n,S_over_I0\n", Path::new("s.csv")).is_err());
    }

    #[test]
    fn gaps_in_index_are_rejected() {
        let rows = [SeriesRow { n: 0, S_over_I0: 0.5 }, SeriesRow { n: 2, S_over_I0: 0.5 }];
        match series_samples(&rows, Path::new("s.csv")) {
            Err(CliError::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
    }
}
