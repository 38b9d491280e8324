use serde::{Deserialize, Serialize};

use super::{SchedulerKind, SimReport};
use crate::error::ModelError;

/// Per-run means over a set of replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub scheduler: SchedulerKind,
    pub replications: usize,
    pub intervals: usize,
    pub completion_rate: f64,
    /// Standard error of `completion_rate` across replications (0 for one run).
    pub completion_rate_se: f64,
    pub tasks_completed: f64,
    pub sensing_failures: f64,
    pub transmit_failures: f64,
    pub sensing_skipped: f64,
    pub transmit_skipped: f64,
    pub latency_seconds: f64,
}

impl Aggregate {
    pub fn failures(&self) -> f64 {
        self.sensing_failures + self.transmit_failures
    }

    pub fn from_reports(reports: &[SimReport]) -> Result<Self, ModelError> {
        let first = reports
            .first()
            .ok_or_else(|| ModelError::Dimension("no simulation reports to aggregate".into()))?;
        let summaries: Vec<_> = reports.iter().map(SimReport::summary).collect();
        if summaries
            .iter()
            .any(|s| s.scheduler != first.scheduler || s.intervals != summaries[0].intervals)
        {
            return Err(ModelError::Dimension(
                "replications differ in scheduler or horizon".into(),
            ));
        }
        let n = summaries.len() as f64;
        let mean = |f: &dyn Fn(&super::SimSummary) -> f64| summaries.iter().map(f).sum::<f64>() / n;
        let rate = mean(&|s| s.completion_rate);
        let se = if summaries.len() > 1 {
            let var = summaries
                .iter()
                .map(|s| (s.completion_rate - rate).powi(2))
                .sum::<f64>()
                / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        Ok(Aggregate {
            scheduler: first.scheduler,
            replications: summaries.len(),
            intervals: summaries[0].intervals,
            completion_rate: rate,
            completion_rate_se: se,
            tasks_completed: mean(&|s| s.tasks_completed as f64),
            sensing_failures: mean(&|s| s.sensing_failures as f64),
            transmit_failures: mean(&|s| s.transmit_failures as f64),
            sensing_skipped: mean(&|s| s.sensing_skipped as f64),
            transmit_skipped: mean(&|s| s.transmit_skipped as f64),
            latency_seconds: mean(&|s| s.latency_seconds),
        })
    }
}

/// Relative changes of the candidate against the baseline, in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Deltas {
    /// Increase in completed tasks.
    pub completion_gain_pct: f64,
    /// Reduction in power failures (sensing + transmit).
    pub failure_reduction_pct: f64,
    /// Reduction in total execution latency.
    pub latency_reduction_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub baseline: Aggregate,
    pub candidate: Aggregate,
    pub deltas: Deltas,
}

/// `100 * (base - cand) / base`; 0 when both are 0.
fn reduction(base: f64, cand: f64) -> f64 {
    if base == 0.0 {
        if cand == 0.0 {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    } else {
        100.0 * (base - cand) / base
    }
}

/// Paired comparison of two sets of replications. Replication `k` of each
/// side must come from the same seed and stream, so both schedulers see the
/// same harvest sequence.
pub fn compare(baseline: &[SimReport], candidate: &[SimReport]) -> Result<ComparisonReport, ModelError> {
    if baseline.len() != candidate.len() {
        return Err(ModelError::Dimension(format!(
            "{} baseline runs vs {} candidate runs",
            baseline.len(),
            candidate.len()
        )));
    }
    for (b, c) in baseline.iter().zip(candidate) {
        if b.seed != c.seed || b.stream != c.stream || b.delta_t != c.delta_t || b.sensing_duration != c.sensing_duration || b.intervals.len() != c.intervals.len() {
            return Err(ModelError::Dimension(
                "compared runs do not share seed, timing and horizon".into(),
            ));
        }
    }
    let b = Aggregate::from_reports(baseline)?;
    let c = Aggregate::from_reports(candidate)?;
    let deltas = Deltas {
        completion_gain_pct: 0.0 - reduction(b.tasks_completed, c.tasks_completed),
        failure_reduction_pct: reduction(b.failures(), c.failures()),
        latency_reduction_pct: reduction(b.latency_seconds, c.latency_seconds),
    };
    Ok(ComparisonReport {
        baseline: b,
        candidate: c,
        deltas,
    })
}
