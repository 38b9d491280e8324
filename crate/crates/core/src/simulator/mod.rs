//! Seeded Monte-Carlo simulation of the device under a scheduler.
//!
//! Every sub-interval draws exactly one harvest current from the run's
//! stream, whatever the device is doing, so schedulers sharing a seed see
//! the same harvest sequence.

mod compare;
mod report;
mod scheduler;

pub use compare::{compare, Aggregate, ComparisonReport, Deltas};
pub use report::{IntervalRecord, SimReport, SimSummary};
pub use scheduler::{Scheduler, SchedulerKind};

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy_model::{quantize, DeviceParams, HarvestModel, Mode};
use crate::error::ModelError;
use crate::mdp::{Action, MdpModel, State};

/// How the device is advanced between decisions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimMode {
    /// Continuous voltage driven by sampled harvest currents.
    #[default]
    Physical,
    /// Sample the MDP itself: voltage levels move by the micro matrices and
    /// a task succeeds with its safety probability. Used to validate the
    /// solver's analytic rates.
    Model,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub params: DeviceParams,
    pub harvest: HarvestModel,
    pub scheduler: Scheduler,
    pub horizon_seconds: f64,
    pub master_seed: u64,
    /// Defaults to `v_max` when `None`.
    pub initial_voltage: Option<f64>,
    pub mode: SimMode,
}

impl SimConfig {
    pub fn new(params: DeviceParams, harvest: HarvestModel, scheduler: Scheduler) -> Self {
        SimConfig {
            params,
            harvest,
            scheduler,
            horizon_seconds: 2000.0,
            master_seed: 0,
            initial_voltage: None,
            mode: SimMode::Physical,
        }
    }

    /// Number of main intervals in the horizon.
    pub fn intervals(&self) -> Result<usize, ModelError> {
        let len = self.params.interval_seconds();
        let k = self.horizon_seconds / len;
        let rounded = k.round();
        if !(rounded >= 1.0 && (k - rounded).abs() < 1e-9 * rounded.max(1.0)) {
            return Err(ModelError::InvalidParam {
                field: "horizon_seconds",
                reason: format!(
                    "must be a positive multiple of the {len} s main interval, got {}",
                    self.horizon_seconds
                ),
            });
        }
        Ok(rounded as usize)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        self.params.validate()?;
        self.harvest.validate()?;
        self.intervals()?;
        if let Some(v) = self.initial_voltage {
            if !(0.0..=self.params.v_max).contains(&v) {
                return Err(ModelError::InvalidParam {
                    field: "initial_voltage",
                    reason: format!("must lie in [0, {}], got {v}", self.params.v_max),
                });
            }
        }
        Ok(())
    }
}

/// Generator for replication `stream` of a run seeded with `master_seed`.
pub fn stream_rng(master_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

/// Run one replication on stream 0 of `config.master_seed`.
pub fn simulate(config: &SimConfig) -> Result<SimReport, ModelError> {
    simulate_stream(config, 0, None)
}

/// Run one replication per stream `0..replications` in parallel. The result
/// does not depend on the number of worker threads. `model` is needed only
/// in [`SimMode::Model`].
pub fn simulate_replications(
    config: &SimConfig,
    replications: usize,
    model: Option<&MdpModel>,
) -> Result<Vec<SimReport>, ModelError> {
    config.validate()?;
    (0..replications as u64)
        .into_par_iter()
        .map(|k| simulate_stream(config, k, model))
        .collect()
}

/// [`simulate`] in [`SimMode::Model`] requires the model whose kernels are
/// sampled; pass it here.
pub fn simulate_with_model(config: &SimConfig, model: &MdpModel, stream: u64) -> Result<SimReport, ModelError> {
    simulate_stream(config, stream, Some(model))
}

fn simulate_stream(config: &SimConfig, stream: u64, model: Option<&MdpModel>) -> Result<SimReport, ModelError> {
    config.validate()?;
    let mut rng = stream_rng(config.master_seed, stream);
    let intervals = config.intervals()?;
    let records = match config.mode {
        SimMode::Physical => Physical::new(config).run(intervals, &mut rng),
        SimMode::Model => {
            let model = model.ok_or_else(|| ModelError::InvalidParam {
                field: "mode",
                reason: "model-mode simulation needs the MDP model".into(),
            })?;
            ModelChain::new(config, model)?.run(intervals, &mut rng)
        }
    };
    Ok(SimReport {
        scheduler: config.scheduler.kind(),
        delta_t: config.params.delta_t,
        sensing_duration: config.params.sensing_duration,
        seed: config.master_seed,
        stream,
        intervals: records,
    })
}

/// Physical device: continuous voltage, per-step failure checks.
struct Physical<'a> {
    config: &'a SimConfig,
    /// Per mode: (decay, resistance * (1 - decay)).
    coeffs: [(f64, f64); 3],
    integrate: f64,
}

impl<'a> Physical<'a> {
    fn new(config: &'a SimConfig) -> Self {
        let p = &config.params;
        let coeff = |m: Mode| {
            let d = p.decay(m);
            (d, p.resistance(m) * (1.0 - d))
        };
        Physical {
            config,
            coeffs: [coeff(Mode::Sleep), coeff(Mode::Sensing), coeff(Mode::Transmitting)],
            integrate: p.delta_t / p.capacitance,
        }
    }

    fn step(&self, mode: Option<Mode>, v: f64, i: f64) -> f64 {
        let next = match mode {
            None => v + i * self.integrate,
            Some(m) => {
                let (d, g) = self.coeffs[m as usize];
                v * d + g * i
            }
        };
        next.min(self.config.params.v_max)
    }

    fn run<R: Rng>(&self, intervals: usize, rng: &mut R) -> Vec<IntervalRecord> {
        let p = &self.config.params;
        let m = p.subintervals;
        let mut v = self.config.initial_voltage.unwrap_or(p.v_max);
        let mut out = Vec::with_capacity(intervals);
        for index in 0..intervals {
            let mut rec = IntervalRecord {
                index,
                sensing_start: None,
                tx_start: None,
                sensing_done: false,
                tx_done: false,
                fail_s: false,
                fail_t: false,
                v_end: 0.0,
            };
            let mut tau = 0;
            let mut flag = 0u8;
            while tau < m {
                // Load detached after a failure, and the device is off below
                // the turn-off threshold: harvest-only charging.
                if rec.failed() || v < p.v_out {
                    v = self.step(None, v, self.config.harvest.sample(rng));
                    tau += 1;
                    continue;
                }
                let action = self.config.scheduler.decide(p, v, tau, flag);
                let (mode, n, next_flag) = match action {
                    Action::Sleeping => (Mode::Sleep, 1, flag),
                    Action::Sensing => {
                        rec.sensing_start = Some(tau);
                        (Mode::Sensing, p.sensing_duration, 1)
                    }
                    Action::Transmitting => {
                        rec.tx_start = Some(tau);
                        (Mode::Transmitting, p.transmit_duration.unwrap_or(1), 2)
                    }
                };
                let mut failed = false;
                for _ in 0..n {
                    v = self.step(Some(mode), v, self.config.harvest.sample(rng));
                    tau += 1;
                    if action.is_task() && v < p.v_out {
                        failed = true;
                        break;
                    }
                }
                match (action, failed) {
                    (Action::Sensing, true) => rec.fail_s = true,
                    (Action::Transmitting, true) => rec.fail_t = true,
                    (Action::Sensing, false) => rec.sensing_done = true,
                    (Action::Transmitting, false) => rec.tx_done = true,
                    (Action::Sleeping, _) => {}
                }
                flag = next_flag;
            }
            rec.v_end = v;
            out.push(rec);
        }
        out
    }
}

/// The MDP sampled directly.
struct ModelChain<'a> {
    config: &'a SimConfig,
    model: &'a MdpModel,
    sleep: Vec<WeightedIndex<f64>>,
    sensing: Vec<WeightedIndex<f64>>,
    transmitting: Option<Vec<WeightedIndex<f64>>>,
}

impl<'a> ModelChain<'a> {
    fn new(config: &'a SimConfig, model: &'a MdpModel) -> Result<Self, ModelError> {
        let rows = |k: &crate::mdp::LevelKernel| -> Result<Vec<WeightedIndex<f64>>, ModelError> {
            k.rows()
                .map(|r| WeightedIndex::new(r).map_err(|e| ModelError::Dimension(e.to_string())))
                .collect()
        };
        Ok(ModelChain {
            config,
            model,
            sleep: rows(&model.micro.sleep)?,
            sensing: rows(&model.micro.sensing)?,
            transmitting: model.micro.transmitting.as_ref().map(rows).transpose()?,
        })
    }

    fn run<R: Rng>(&self, intervals: usize, rng: &mut R) -> Vec<IntervalRecord> {
        let p = &self.config.params;
        let grid = &self.model.grid;
        let m = p.subintervals;
        let mut level = quantize(self.config.initial_voltage.unwrap_or(p.v_max), grid);
        let mut out = Vec::with_capacity(intervals);
        for index in 0..intervals {
            let mut rec = IntervalRecord {
                index,
                sensing_start: None,
                tx_start: None,
                sensing_done: false,
                tx_done: false,
                fail_s: false,
                fail_t: false,
                v_end: 0.0,
            };
            let mut tau = 0;
            let mut flag = 0u8;
            while tau < m {
                let state = State { level, tau, flag };
                let action = self.config.scheduler.decide(p, grid.level(level), tau, flag);
                let allowed = self.model.space.allowed_actions(state);
                let action = if allowed.contains(&action) { action } else { Action::Sleeping };
                match action {
                    Action::Sleeping => {
                        level = self.sleep[level].sample(rng);
                        tau += 1;
                    }
                    Action::Sensing => {
                        rec.sensing_start = Some(tau);
                        let ok = rng.gen::<f64>() < self.model.safety.sensing[level];
                        rec.sensing_done = ok;
                        rec.fail_s = !ok;
                        level = self.sensing[level].sample(rng);
                        tau += p.sensing_duration;
                        flag = 1;
                    }
                    Action::Transmitting => {
                        rec.tx_start = Some(tau);
                        let safety = self.model.safety.transmitting.as_ref().map_or(0.0, |t| t[level]);
                        let ok = rng.gen::<f64>() < safety;
                        rec.tx_done = ok;
                        rec.fail_t = !ok;
                        let rows = self.transmitting.as_ref().expect("transmit allowed");
                        level = rows[level].sample(rng);
                        tau += p.transmit_duration.unwrap_or(1);
                        flag = 2;
                    }
                }
            }
            rec.v_end = grid.level(level);
            out.push(rec);
        }
        out
    }
}
