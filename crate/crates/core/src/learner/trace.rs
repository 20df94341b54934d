use std::io::Write;

use serde::{Deserialize, Serialize};

/// One recorded index estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: u64,
    /// Empty when the computation failed.
    pub indices: Vec<f64>,
    /// `|estimate - truth|` per state, when the truth is known.
    pub abs_errors: Option<Vec<f64>>,
    /// `||M - M_hat||_inf` when the true arm is known (model-based runs only).
    pub model_error: Option<f64>,
    pub ewisc_ms: Option<f64>,
    pub indexable: Option<bool>,
    pub error: Option<String>,
}

impl TraceRecord {
    pub fn is_ok(&self) -> bool {
        self.error.is_none() && !self.indices.is_empty()
    }
}

/// Time series of index estimates from one learning run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningTrace {
    pub algorithm: String,
    pub num_states: usize,
    pub horizon: u64,
    pub seed: u64,
    pub records: Vec<TraceRecord>,
    /// Number of index computations performed.
    pub index_calls: usize,
    /// Step at which every state-action pair had been visited.
    pub covered_at: Option<u64>,
}

impl LearningTrace {
    pub fn new(algorithm: &str, num_states: usize, horizon: u64, seed: u64) -> Self {
        LearningTrace {
            algorithm: algorithm.to_string(),
            num_states,
            horizon,
            seed,
            records: Vec::new(),
            index_calls: 0,
            covered_at: None,
        }
    }

    /// Last successful record at or before `t`.
    pub fn latest_at(&self, t: u64) -> Option<&TraceRecord> {
        self.records.iter().rev().find(|r| r.t <= t && r.is_ok())
    }

    pub fn last_ok(&self) -> Option<&TraceRecord> {
        self.records.iter().rev().find(|r| r.is_ok())
    }

    /// Appends a record, keeping `t` strictly increasing; a record at the
    /// same step as the previous one replaces it.
    pub fn push(&mut self, record: TraceRecord) {
        if let Some(last) = self.records.last_mut() {
            assert!(record.t >= last.t, "trace steps must increase");
            if last.t == record.t {
                *last = record;
                return;
            }
        }
        self.records.push(record);
    }
}

pub fn abs_errors(estimate: &[f64], truth: &[f64]) -> Vec<f64> {
    assert_eq!(estimate.len(), truth.len(), "dimension mismatch");
    estimate.iter().zip(truth).map(|(e, t)| (e - t).abs()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorMetrics {
    pub t: u64,
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

/// `(min, median, max)` of a set of errors. The median of an even count is
/// the mean of the two middle values.
pub fn order_statistics(errors: &[f64]) -> (f64, f64, f64) {
    assert!(!errors.is_empty());
    let mut v = errors.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let median = if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    };
    (v[0], median, v[n - 1])
}

/// Per recorded step, order statistics of `|truth - estimate|`. Failed
/// records are skipped.
pub fn error_metrics(trace: &LearningTrace, truth: &[f64]) -> Vec<ErrorMetrics> {
    trace
        .records
        .iter()
        .filter(|r| r.is_ok())
        .map(|r| {
            let (min, median, max) = order_statistics(&abs_errors(&r.indices, truth));
            ErrorMetrics { t: r.t, min, median, max }
        })
        .collect()
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `t,state,estimate,truth,abs_error,indexable,ewisc_ms`, one row per
/// recorded step and state. Unknown fields are left empty.
pub fn write_trace_csv<W: Write>(trace: &LearningTrace, truth: Option<&[f64]>, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "state", "estimate", "truth", "abs_error", "indexable", "ewisc_ms"])?;
    for r in trace.records.iter().filter(|r| r.is_ok()) {
        for (s, &est) in r.indices.iter().enumerate() {
            let (tr, err) = match truth {
                Some(tv) => (fmt_f64(tv[s]), fmt_f64((est - tv[s]).abs())),
                None => (String::new(), String::new()),
            };
            w.write_record([
                r.t.to_string(),
                s.to_string(),
                fmt_f64(est),
                tr,
                err,
                r.indexable.map(|b| b.to_string()).unwrap_or_default(),
                r.ewisc_ms.map(fmt_f64).unwrap_or_default(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes `t,min_err,median_err,max_err`.
pub fn write_metrics_csv<W: Write>(metrics: &[ErrorMetrics], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "min_err", "median_err", "max_err"])?;
    for m in metrics {
        w.write_record([m.t.to_string(), fmt_f64(m.min), fmt_f64(m.median), fmt_f64(m.max)])?;
    }
    w.flush()?;
    Ok(())
}

/// About `per_decade` log-spaced integer steps in `[1, horizon]`, always
/// ending with `horizon`.
pub fn log_spaced_steps(horizon: u64, per_decade: usize) -> Vec<u64> {
    if horizon == 0 {
        return Vec::new();
    }
    let decades = (horizon as f64).log10();
    let n = (decades * per_decade as f64).ceil() as usize;
    let mut steps: Vec<u64> = (0..=n)
        .map(|k| 10f64.powf(decades * k as f64 / n.max(1) as f64).round() as u64)
        .map(|t| t.clamp(1, horizon))
        .collect();
    steps.push(horizon);
    steps.sort_unstable();
    steps.dedup();
    steps
}
