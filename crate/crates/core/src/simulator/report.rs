use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::SchedulerKind;

/// Outcome of one main interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalRecord {
    pub index: usize,
    pub sensing_start: Option<usize>,
    pub tx_start: Option<usize>,
    pub sensing_done: bool,
    pub tx_done: bool,
    pub fail_s: bool,
    pub fail_t: bool,
    /// Continuous capacitor voltage at the end of the interval.
    pub v_end: f64,
}

impl IntervalRecord {
    pub fn failed(&self) -> bool {
        self.fail_s || self.fail_t
    }

    /// Completed-task contribution `xi_s * (1 + xi_t)`, in {0, 1, 2}.
    pub fn completed(&self) -> u32 {
        u32::from(self.sensing_done) * (1 + u32::from(self.tx_done))
    }

    /// Delay against the ideal schedule (sense at 0, transmit right after
    /// sensing), in sub-intervals. `None` for intervals with a power failure.
    pub fn latency_slots(&self, sensing_duration: usize) -> Option<usize> {
        if self.failed() {
            return None;
        }
        let sensing = self.sensing_start.unwrap_or(0);
        let tx = match (self.sensing_start, self.tx_start) {
            (Some(s), Some(t)) => t - (s + sensing_duration),
            _ => 0,
        };
        Some(sensing + tx)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSummary {
    pub scheduler: SchedulerKind,
    pub intervals: usize,
    pub sensing_completed: usize,
    pub transmit_completed: usize,
    /// Sum of `xi_s * (1 + xi_t)` over intervals.
    pub tasks_completed: usize,
    pub completion_rate: f64,
    pub sensing_failures: usize,
    pub transmit_failures: usize,
    /// Intervals in which the task was never started.
    pub sensing_skipped: usize,
    pub transmit_skipped: usize,
    pub latency_seconds: f64,
    pub mean_v_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub scheduler: SchedulerKind,
    pub delta_t: f64,
    pub sensing_duration: usize,
    pub seed: u64,
    /// Replication stream under `seed`.
    pub stream: u64,
    pub intervals: Vec<IntervalRecord>,
}

impl SimReport {
    pub fn summary(&self) -> SimSummary {
        let n = self.intervals.len();
        let count = |f: &dyn Fn(&IntervalRecord) -> bool| self.intervals.iter().filter(|r| f(r)).count();
        let tasks: usize = self.intervals.iter().map(|r| r.completed() as usize).sum();
        SimSummary {
            scheduler: self.scheduler,
            intervals: n,
            sensing_completed: count(&|r| r.sensing_done),
            transmit_completed: count(&|r| r.tx_done),
            tasks_completed: tasks,
            completion_rate: if n == 0 { 0.0 } else { tasks as f64 / n as f64 },
            sensing_failures: count(&|r| r.fail_s),
            transmit_failures: count(&|r| r.fail_t),
            sensing_skipped: count(&|r| r.sensing_start.is_none()),
            transmit_skipped: count(&|r| r.tx_start.is_none()),
            latency_seconds: self.latency(),
            mean_v_end: if n == 0 {
                0.0
            } else {
                self.intervals.iter().map(|r| r.v_end).sum::<f64>() / n as f64
            },
        }
    }

    /// Total execution latency in seconds over intervals without failures.
    pub fn latency(&self) -> f64 {
        let slots: usize = self
            .intervals
            .iter()
            .filter_map(|r| r.latency_slots(self.sensing_duration))
            .sum();
        slots as f64 * self.delta_t
    }

    /// Cumulative average of completed tasks per interval after each
    /// interval.
    pub fn running_rate(&self) -> Vec<f64> {
        let mut total = 0u64;
        self.intervals
            .iter()
            .enumerate()
            .map(|(k, r)| {
                total += u64::from(r.completed());
                total as f64 / (k + 1) as f64
            })
            .collect()
    }

    /// One row per interval: index, sensing_start, tx_start, fail_s, fail_t,
    /// v_end. Missing starts are empty cells.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let cell = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
        writeln!(out, "index,sensing_start,tx_start,fail_s,fail_t,v_end")?;
        for r in &self.intervals {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.index,
                cell(r.sensing_start),
                cell(r.tx_start),
                u8::from(r.fail_s),
                u8::from(r.fail_t),
                crate::fmt_sig(r.v_end),
            )?;
        }
        Ok(())
    }
}
