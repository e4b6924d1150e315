//! CSV and JSON result files.
//!
//! CSV writes one row per `(kind, N)` plus a `<path>.hist.csv` sidecar with
//! the histograms. JSON writes the same rows as an array, each carrying its
//! own histogram. All reals are rounded to 12 significant digits.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Histogram, PointStats, SweepResult};
use crate::ensembles::EnsembleKind;

pub const CSV_HEADER: [&str; 9] = [
    "ensemble",
    "k",
    "N",
    "samples",
    "mean",
    "std",
    "stderr",
    "violation_fraction",
    "seed",
];

pub const HIST_HEADER: [&str; 6] = ["ensemble", "k", "N", "bin_lo", "bin_hi", "count"];

#[derive(Debug, Error)]
pub enum EmitError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {message}")]
    Schema { path: PathBuf, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(format!("unknown format '{other}' (expected csv or json)")),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Csv => "csv",
            Self::Json => "json",
        })
    }
}

/// Rounds to 12 significant digits.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

/// Shortest decimal text of [`round12`]`(x)`.
pub fn format12(x: f64) -> String {
    round12(x).to_string()
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".hist.csv");
    PathBuf::from(s)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Row {
    ensemble: String,
    k: Option<u32>,
    #[serde(rename = "N")]
    n: usize,
    samples: usize,
    mean: f64,
    std: f64,
    stderr: f64,
    violation_fraction: f64,
    seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct HistRow {
    ensemble: String,
    k: Option<u32>,
    #[serde(rename = "N")]
    n: usize,
    bin_lo: f64,
    bin_hi: f64,
    count: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Bin {
    bin_lo: f64,
    bin_hi: f64,
    count: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct JsonRow {
    #[serde(flatten)]
    row: Row,
    histogram: Vec<Bin>,
}

fn row_of(p: &PointStats, seed: u64) -> Row {
    Row {
        ensemble: p.kind.label().to_string(),
        k: p.kind.k(),
        n: p.n,
        samples: p.samples,
        mean: round12(p.mean),
        std: round12(p.std),
        stderr: round12(p.stderr),
        violation_fraction: round12(p.violation_fraction),
        seed,
    }
}

fn bins_of(h: &Histogram) -> Vec<Bin> {
    h.counts
        .iter()
        .enumerate()
        .map(|(i, &count)| Bin {
            bin_lo: round12(h.edges[i]),
            bin_hi: round12(h.edges[i + 1]),
            count,
        })
        .collect()
}

fn kind_of(ensemble: &str, k: Option<u32>) -> Result<EnsembleKind, String> {
    match (ensemble, k) {
        ("structured", Some(k)) => Ok(EnsembleKind::Structured { k }),
        ("structured", None) => Err("structured row without k".into()),
        (other, None) => other.parse(),
        (other, Some(_)) => Err(format!("k given for non-structured ensemble '{other}'")),
    }
}

fn k_field(k: Option<u32>) -> String {
    k.map(|k| k.to_string()).unwrap_or_default()
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> EmitError + '_ {
    move |source| EmitError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> EmitError + '_ {
    move |source| EmitError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

pub fn emit_results(
    result: &SweepResult,
    format: OutputFormat,
    path: &Path,
) -> Result<(), EmitError> {
    let create = |p: &Path| File::create(p).map(BufWriter::new).map_err(io_err(p));
    match format {
        OutputFormat::Csv => {
            write_csv(result, create(path)?).map_err(csv_err(path))?;
            let side = sidecar_path(path);
            write_hist_csv(result, create(&side)?).map_err(csv_err(&side))
        }
        OutputFormat::Json => write_json(result, create(path)?).map_err(|source| EmitError::Json {
            path: path.to_path_buf(),
            source,
        }),
    }
}

/// Main result table in CSV form.
pub fn write_csv<W: Write>(result: &SweepResult, out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for p in &result.points {
        w.write_record([
            p.kind.label().to_string(),
            k_field(p.kind.k()),
            p.n.to_string(),
            p.samples.to_string(),
            format12(p.mean),
            format12(p.std),
            format12(p.stderr),
            format12(p.violation_fraction),
            result.master_seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Histogram table in CSV form, one line per bin.
pub fn write_hist_csv<W: Write>(result: &SweepResult, out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HIST_HEADER)?;
    for p in &result.points {
        for b in bins_of(&p.histogram) {
            w.write_record([
                p.kind.label().to_string(),
                k_field(p.kind.k()),
                p.n.to_string(),
                b.bin_lo.to_string(),
                b.bin_hi.to_string(),
                b.count.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<W: Write>(result: &SweepResult, mut out: W) -> Result<(), serde_json::Error> {
    let rows: Vec<JsonRow> = result
        .points
        .iter()
        .map(|p| JsonRow {
            row: row_of(p, result.master_seed),
            histogram: bins_of(&p.histogram),
        })
        .collect();
    serde_json::to_writer_pretty(&mut out, &rows)?;
    out.write_all(b"\n").map_err(serde_json::Error::io)?;
    out.flush().map_err(serde_json::Error::io)
}

/// Reads back what [`emit_results`] wrote. For CSV the sidecar is required.
pub fn load_results(path: &Path, format: OutputFormat) -> Result<SweepResult, EmitError> {
    let schema = |message: String| EmitError::Schema {
        path: path.to_path_buf(),
        message,
    };
    let mut rows: Vec<(Row, Vec<Bin>)> = match format {
        OutputFormat::Json => {
            let file = File::open(path).map_err(io_err(path))?;
            let parsed: Vec<JsonRow> =
                serde_json::from_reader(std::io::BufReader::new(file)).map_err(|source| {
                    EmitError::Json {
                        path: path.to_path_buf(),
                        source,
                    }
                })?;
            parsed.into_iter().map(|r| (r.row, r.histogram)).collect()
        }
        OutputFormat::Csv => {
            let main: Vec<Row> = read_csv(path, &CSV_HEADER)?;
            let side_path = sidecar_path(path);
            let hist: Vec<HistRow> = read_csv(&side_path, &HIST_HEADER)?;
            main.into_iter()
                .map(|r| {
                    let bins = hist
                        .iter()
                        .filter(|h| h.ensemble == r.ensemble && h.k == r.k && h.n == r.n)
                        .map(|h| Bin {
                            bin_lo: h.bin_lo,
                            bin_hi: h.bin_hi,
                            count: h.count,
                        })
                        .collect();
                    (r, bins)
                })
                .collect()
        }
    };
    if rows.is_empty() {
        return Err(schema("no result rows".into()));
    }
    let master_seed = rows[0].0.seed;
    let samples_per_point = rows[0].0.samples;
    let mut points = Vec::with_capacity(rows.len());
    for (row, bins) in rows.drain(..) {
        if row.seed != master_seed {
            return Err(schema(format!("mixed seeds {master_seed} and {}", row.seed)));
        }
        if bins.is_empty() {
            return Err(schema(format!(
                "no histogram for {} k={:?} N={}",
                row.ensemble, row.k, row.n
            )));
        }
        let kind = kind_of(&row.ensemble, row.k).map_err(schema)?;
        let mut edges: Vec<f64> = bins.iter().map(|b| b.bin_lo).collect();
        edges.push(bins.last().expect("non-empty").bin_hi);
        points.push(PointStats {
            kind,
            n: row.n,
            samples: row.samples,
            mean: row.mean,
            std: row.std,
            stderr: row.stderr,
            violation_fraction: row.violation_fraction,
            histogram: Histogram {
                edges,
                counts: bins.iter().map(|b| b.count).collect(),
            },
        });
    }
    Ok(SweepResult {
        samples_per_point,
        master_seed,
        points,
    })
}

fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path, header: &[&str]) -> Result<Vec<T>, EmitError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let found = r.headers().map_err(csv_err(path))?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(EmitError::Schema {
            path: path.to_path_buf(),
            message: format!(
                "expected header '{}', found '{}'",
                header.join(","),
                found.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    r.deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(csv_err(path))
}
