use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::MetricsRow;

/// Order statistics of a sample. Quantiles interpolate linearly between
/// order statistics (the default of numpy and R type 7).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub iqr: f64,
    pub min: f64,
    pub max: f64,
}

/// Type-7 quantile of an ascending sample.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

impl Stats {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let (q1, q3) = (quantile(&v, 0.25), quantile(&v, 0.75));
        Some(Self {
            n: v.len(),
            mean: v.iter().sum::<f64>() / v.len() as f64,
            median: quantile(&v, 0.5),
            q1,
            q3,
            iqr: q3 - q1,
            min: v[0],
            max: v[v.len() - 1],
        })
    }
}

/// Aggregate over seeds. Regret rows group by checkpoint; PAC rows (those
/// with a policy gap) group per algorithm, with `checkpoint = None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub experiment_id: String,
    pub algorithm: String,
    pub checkpoint: Option<u64>,
    pub seeds: usize,
    pub regret: Stats,
    pub gap: Option<Stats>,
    pub samples: Option<Stats>,
    /// Fraction of runs with gap at most the threshold.
    pub success_rate: Option<f64>,
}

pub fn summarize(rows: &[MetricsRow], gap_threshold: Option<f64>) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(String, String, Option<u64>), Vec<&MetricsRow>> = BTreeMap::new();
    for row in rows {
        let checkpoint = if row.policy_gap.is_some() { None } else { Some(row.checkpoint) };
        groups.entry((row.experiment_id.clone(), row.algorithm.clone(), checkpoint)).or_default().push(row);
    }
    groups
        .into_iter()
        .map(|((experiment_id, algorithm, checkpoint), members)| {
            let regret: Vec<f64> = members.iter().map(|r| r.cum_regret).collect();
            let gaps: Vec<f64> = members.iter().filter_map(|r| r.policy_gap).collect();
            let samples: Vec<f64> = members.iter().filter_map(|r| r.samples_used.map(|s| s as f64)).collect();
            let success_rate = match (gap_threshold, gaps.is_empty()) {
                (Some(t), false) => Some(gaps.iter().filter(|&&g| g <= t).count() as f64 / gaps.len() as f64),
                _ => None,
            };
            SummaryRow {
                experiment_id,
                algorithm,
                checkpoint,
                seeds: members.len(),
                regret: Stats::of(&regret).expect("groups are nonempty"),
                gap: Stats::of(&gaps),
                samples: Stats::of(&samples),
                success_rate,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_match_numpy() {
        // numpy.quantile([1, 2, 3, 4], [0.25, 0.5, 0.75]) == [1.75, 2.5, 3.25]
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.25), 1.75);
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert_eq!(quantile(&v, 0.75), 3.25);
        let s = Stats::of(&[7.0]).unwrap();
        assert_eq!((s.median, s.mean, s.iqr), (7.0, 7.0, 0.0));
    }
}
