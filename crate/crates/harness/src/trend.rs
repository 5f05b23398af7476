//! Monotonicity annotation of per-rank estimate series.

use serde::{Deserialize, Serialize};

use pregeomzol_core::Estimate64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendRow {
    pub n: u32,
    pub event: String,
    pub estimate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub successes: u64,
    pub samples: u64,
    pub budget_exceeded: u64,
    /// `start`, `up`, `down`, `flat`, or `undecided` when no sample was decided.
    pub direction: String,
    /// The step from the previous rank runs against the series trend.
    pub non_monotone: bool,
    pub seed: u64,
    pub spec_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesSummary {
    pub event: String,
    /// Sign of last minus first decided estimate: `up`, `down` or `flat`.
    pub trend: String,
    pub first: Option<f64>,
    pub last: Option<f64>,
    pub non_monotone_segments: Vec<(u32, u32)>,
}

fn direction(delta: f64) -> &'static str {
    if delta > 0.0 {
        "up"
    } else if delta < 0.0 {
        "down"
    } else {
        "flat"
    }
}

/// Rows grouped by event in first-appearance order, each group by rank.
pub fn annotate(estimates: &[Estimate64], spec_hash: &str) -> (Vec<TrendRow>, Vec<SeriesSummary>) {
    let mut events: Vec<&str> = Vec::new();
    for e in estimates {
        if !events.contains(&e.event.as_str()) {
            events.push(&e.event);
        }
    }
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for event in events {
        let mut series: Vec<&Estimate64> = estimates.iter().filter(|e| e.event == event).collect();
        series.sort_by_key(|e| e.n);
        let decided: Vec<&&Estimate64> = series.iter().filter(|e| !e.estimate.is_nan()).collect();
        let first = decided.first().map(|e| e.estimate);
        let last = decided.last().map(|e| e.estimate);
        let trend = match (first, last) {
            (Some(a), Some(b)) => direction(b - a),
            _ => "flat",
        };
        let mut flagged = Vec::new();
        let mut prev: Option<&Estimate64> = None;
        for e in &series {
            let (dir, bad) = if e.estimate.is_nan() {
                ("undecided", false)
            } else if let Some(p) = prev {
                let d = direction(e.estimate - p.estimate);
                let bad = d != "flat" && d != trend;
                if bad {
                    flagged.push((p.n, e.n));
                }
                (d, bad)
            } else {
                ("start", false)
            };
            if !e.estimate.is_nan() {
                prev = Some(e);
            }
            rows.push(TrendRow {
                n: e.n,
                event: e.event.clone(),
                estimate: e.estimate,
                ci_lo: e.ci_lo,
                ci_hi: e.ci_hi,
                successes: e.successes,
                samples: e.samples,
                budget_exceeded: e.budget_exceeded,
                direction: dir.into(),
                non_monotone: bad,
                seed: e.seed,
                spec_hash: spec_hash.into(),
            });
        }
        summaries.push(SeriesSummary {
            event: event.into(),
            trend: trend.into(),
            first,
            last,
            non_monotone_segments: flagged,
        });
    }
    (rows, summaries)
}
