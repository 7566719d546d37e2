use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Column names, in order.
pub const HEADER: [&str; 15] = [
    "experiment_id",
    "algorithm",
    "seed",
    "S",
    "K",
    "r",
    "eps",
    "horizon",
    "checkpoint",
    "cum_regret",
    "samples_used",
    "policy_gap",
    "candidate_set_size",
    "partition_size",
    "wall_clock_ms",
];

/// One output row per (seed, checkpoint). Fields that do not apply to the
/// algorithm are `None` and written as empty cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub experiment_id: String,
    pub algorithm: String,
    pub seed: u64,
    pub contexts: usize,
    pub actions: usize,
    pub blocks: Option<usize>,
    pub eps: Option<f64>,
    pub horizon: Option<u64>,
    pub checkpoint: u64,
    pub cum_regret: f64,
    pub samples_used: Option<u64>,
    pub policy_gap: Option<f64>,
    pub candidate_set_size: Option<usize>,
    pub partition_size: Option<usize>,
    pub wall_clock_ms: f64,
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn opt_float(v: Option<f64>) -> String {
    v.map(format_float).unwrap_or_default()
}

impl MetricsRow {
    pub fn fields(&self) -> [String; 15] {
        [
            self.experiment_id.clone(),
            self.algorithm.clone(),
            self.seed.to_string(),
            self.contexts.to_string(),
            self.actions.to_string(),
            opt(self.blocks),
            opt_float(self.eps),
            opt(self.horizon),
            self.checkpoint.to_string(),
            format_float(self.cum_regret),
            opt(self.samples_used),
            opt_float(self.policy_gap),
            opt(self.candidate_set_size),
            opt(self.partition_size),
            format_float(self.wall_clock_ms),
        ]
    }

    fn from_record(rec: &csv::StringRecord) -> Result<Self> {
        if rec.len() != HEADER.len() {
            return Err(Error::Validation(format!("expected {} columns, found {}", HEADER.len(), rec.len())));
        }
        fn req<T: std::str::FromStr>(s: &str, col: &str) -> Result<T> {
            s.parse().map_err(|_| Error::Validation(format!("bad value {s:?} in column {col}")))
        }
        fn optional<T: std::str::FromStr>(s: &str, col: &str) -> Result<Option<T>> {
            if s.is_empty() {
                Ok(None)
            } else {
                req(s, col).map(Some)
            }
        }
        Ok(Self {
            experiment_id: rec[0].to_owned(),
            algorithm: rec[1].to_owned(),
            seed: req(&rec[2], HEADER[2])?,
            contexts: req(&rec[3], HEADER[3])?,
            actions: req(&rec[4], HEADER[4])?,
            blocks: optional(&rec[5], HEADER[5])?,
            eps: optional(&rec[6], HEADER[6])?,
            horizon: optional(&rec[7], HEADER[7])?,
            checkpoint: req(&rec[8], HEADER[8])?,
            cum_regret: req(&rec[9], HEADER[9])?,
            samples_used: optional(&rec[10], HEADER[10])?,
            policy_gap: optional(&rec[11], HEADER[11])?,
            candidate_set_size: optional(&rec[12], HEADER[12])?,
            partition_size: optional(&rec[13], HEADER[13])?,
            wall_clock_ms: req(&rec[14], HEADER[14])?,
        })
    }
}

/// Writes the CSV (header first, LF line endings) to any sink.
pub fn write_csv<W: Write>(rows: &[MetricsRow], sink: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(sink);
    w.write_record(HEADER)?;
    for row in rows {
        w.write_record(row.fields())?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_results(rows: &[MetricsRow], path: &Path) -> Result<()> {
    let file = File::create(path)?;
    write_csv(rows, std::io::BufWriter::new(file))
}

pub fn read_csv<R: Read>(source: R) -> Result<Vec<MetricsRow>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(source);
    let header = r.headers()?.clone();
    if header.iter().ne(HEADER.iter().copied()) {
        return Err(Error::Validation(format!("unexpected CSV header: {:?}", header.iter().collect::<Vec<_>>())));
    }
    r.records().map(|rec| MetricsRow::from_record(&rec?)).collect()
}

pub fn read_results(path: &Path) -> Result<Vec<MetricsRow>> {
    read_csv(File::open(path)?)
}

/// SHA-256 (hex) over every column except wall-clock time, one LF-terminated
/// comma-joined line per row.
pub fn determinism_hash(rows: &[MetricsRow]) -> String {
    let mut h = Sha256::new();
    for row in rows {
        let fields = row.fields();
        h.update(fields[..HEADER.len() - 1].join(",").as_bytes());
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn sample_row(seed: u64, checkpoint: u64) -> MetricsRow {
        MetricsRow {
            experiment_id: "e,1".into(),
            algorithm: "uniform".into(),
            seed,
            contexts: 10,
            actions: 5,
            blocks: Some(2),
            eps: None,
            horizon: Some(1000),
            checkpoint,
            cum_regret: 0.1 + checkpoint as f64 / 3.0,
            samples_used: None,
            policy_gap: None,
            candidate_set_size: None,
            partition_size: Some(2),
            wall_clock_ms: 12.5,
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let rows = vec![sample_row(1, 10), sample_row(2, 20)];
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(!text.contains('\r'));
        assert_eq!(text.lines().next().unwrap().split(',').count(), 15);
        assert_eq!(read_csv(&buf[..]).unwrap(), rows);
    }

    #[test]
    fn empty_rows_give_header_only() {
        let mut buf = Vec::new();
        write_csv(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), HEADER.join(",") + "\n");
    }

    #[test]
    fn hash_ignores_wall_clock() {
        let a = vec![sample_row(1, 10)];
        let mut b = a.clone();
        b[0].wall_clock_ms = 99.0;
        assert_eq!(determinism_hash(&a), determinism_hash(&b));
        b[0].cum_regret += 1e-12;
        assert_ne!(determinism_hash(&a), determinism_hash(&b));
    }

    #[test]
    fn seventeen_significant_digits() {
        let s = format_float(std::f64::consts::PI);
        assert_eq!(s, "3.1415926535897931e0");
        assert_eq!(s.parse::<f64>().unwrap(), std::f64::consts::PI);
    }
}
