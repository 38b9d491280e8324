//! Capacitor voltage dynamics of an RC-modelled battery-less device.
//!
//! Each operating mode draws a constant current `I_i` at the nominal voltage
//! `E`, so the load is a resistance `R_i = E / I_i`. With a harvested current
//! that is constant over each sub-interval of length `dt`, one step of the
//! capacitor voltage is
//!
//! ```text
//! v' = v * exp(-dt / (R_i C)) + R_i (1 - exp(-dt / (R_i C))) * i_h
//! ```
//!
//! and `n` steps compose into a deterministic decay of `v0` plus a weighted sum
//! of the `n` harvested currents. The probabilistic helpers below exploit that
//! split: the weighted sum does not depend on `v0`, so its law is computed once
//! by sequential convolution and then shifted per starting voltage.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Device operating mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "l")]
    Sleep,
    #[serde(rename = "s")]
    Sensing,
    #[serde(rename = "t")]
    Transmitting,
}

impl FromStr for Mode {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "l" | "sleep" | "sleeping" => Ok(Mode::Sleep),
            "s" | "sensing" => Ok(Mode::Sensing),
            "t" | "transmit" | "transmitting" => Ok(Mode::Transmitting),
            other => Err(ModelError::UnknownMode(other.to_string())),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Sleep => "l",
            Mode::Sensing => "s",
            Mode::Transmitting => "t",
        })
    }
}

/// The two schedulable tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Task {
    #[serde(rename = "s")]
    Sensing,
    #[serde(rename = "t")]
    Transmitting,
}

impl Task {
    pub fn mode(self) -> Mode {
        match self {
            Task::Sensing => Mode::Sensing,
            Task::Transmitting => Mode::Transmitting,
        }
    }
}

impl FromStr for Task {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "s" | "sensing" => Ok(Task::Sensing),
            "t" | "transmit" | "transmitting" => Ok(Task::Transmitting),
            other => Err(ModelError::UnknownTask(other.to_string())),
        }
    }
}

/// Physical and timing constants of the device.
///
/// Durations and the sensing deadline are counted in sub-intervals.
/// `transmit_duration = None` describes a sensing-only device (no transmit
/// task, task flag limited to {0, 1}).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeviceParams {
    pub capacitance: f64,
    pub v_out: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub delta_t: f64,
    pub subintervals: usize,
    pub sensing_deadline: usize,
    pub sensing_duration: usize,
    pub transmit_duration: Option<usize>,
    pub sleep_current: f64,
    pub sensing_current: f64,
    pub transmit_current: f64,
    /// Voltage at which the mode currents are specified. Defaults to `v_max`.
    #[serde(default)]
    pub nominal_voltage: Option<f64>,
    pub grid_levels: usize,
}

impl Default for DeviceParams {
    fn default() -> Self {
        Self::reference()
    }
}

impl DeviceParams {
    /// Reference configuration: 4.7 mF, 1.8-3.3 V, 50 x 20 ms sub-intervals,
    /// sensing 0.1 s with a 0.3 s deadline, transmitting 0.4 s, 30 levels.
    pub fn reference() -> Self {
        DeviceParams {
            capacitance: 4.7e-3,
            v_out: 1.8,
            v_min: 1.8,
            v_max: 3.3,
            delta_t: 0.02,
            subintervals: 50,
            sensing_deadline: 15,
            sensing_duration: 5,
            transmit_duration: Some(20),
            sleep_current: 0.1e-3,
            sensing_current: 1.7e-3,
            transmit_current: 4.36e-3,
            nominal_voltage: None,
            grid_levels: 30,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let positive = |field: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(ModelError::InvalidParam {
                    field,
                    reason: format!("must be finite and > 0, got {v}"),
                })
            }
        };
        positive("capacitance", self.capacitance)?;
        positive("delta_t", self.delta_t)?;
        positive("v_max", self.v_max)?;
        positive("sleep_current", self.sleep_current)?;
        positive("sensing_current", self.sensing_current)?;
        positive("transmit_current", self.transmit_current)?;
        positive("nominal_voltage", self.nominal_voltage())?;
        if !(self.v_min.is_finite() && self.v_min >= 0.0) {
            return Err(ModelError::InvalidParam {
                field: "v_min",
                reason: format!("must be >= 0, got {}", self.v_min),
            });
        }
        if !(self.v_out.is_finite() && self.v_out >= 0.0) {
            return Err(ModelError::InvalidParam {
                field: "v_out",
                reason: format!("must be >= 0, got {}", self.v_out),
            });
        }
        if self.v_min > self.v_max {
            return Err(ModelError::InvalidParam {
                field: "v_min",
                reason: format!("v_min {} exceeds v_max {}", self.v_min, self.v_max),
            });
        }
        if self.v_out > self.v_max {
            return Err(ModelError::InvalidParam {
                field: "v_out",
                reason: format!("v_out {} exceeds v_max {}", self.v_out, self.v_max),
            });
        }
        if self.grid_levels < 2 {
            return Err(ModelError::InvalidParam {
                field: "grid_levels",
                reason: format!("need at least 2 levels, got {}", self.grid_levels),
            });
        }
        if self.subintervals == 0 {
            return Err(ModelError::InvalidParam {
                field: "subintervals",
                reason: "must be positive".into(),
            });
        }
        if self.sensing_duration == 0 {
            return Err(ModelError::InvalidParam {
                field: "sensing_duration",
                reason: "must be positive".into(),
            });
        }
        let m = self.subintervals;
        if self.sensing_deadline + self.sensing_duration > m {
            return Err(ModelError::Window(format!(
                "d_s + n_s = {} exceeds M = {m}",
                self.sensing_deadline + self.sensing_duration
            )));
        }
        if let Some(nt) = self.transmit_duration {
            if nt == 0 {
                return Err(ModelError::InvalidParam {
                    field: "transmit_duration",
                    reason: "must be positive (use null for a sensing-only device)".into(),
                });
            }
            if self.sensing_duration + nt > m {
                return Err(ModelError::Window(format!(
                    "n_s + n_t = {} exceeds M = {m}",
                    self.sensing_duration + nt
                )));
            }
        }
        Ok(())
    }

    pub fn nominal_voltage(&self) -> f64 {
        self.nominal_voltage.unwrap_or(self.v_max)
    }

    pub fn current(&self, mode: Mode) -> f64 {
        match mode {
            Mode::Sleep => self.sleep_current,
            Mode::Sensing => self.sensing_current,
            Mode::Transmitting => self.transmit_current,
        }
    }

    /// Load resistance `E / I_i` of a mode.
    pub fn resistance(&self, mode: Mode) -> f64 {
        self.nominal_voltage() / self.current(mode)
    }

    /// One-step decay factor `exp(-dt / (R_i C))`.
    pub fn decay(&self, mode: Mode) -> f64 {
        (-self.delta_t / (self.resistance(mode) * self.capacitance)).exp()
    }

    /// Task duration in sub-intervals (`n_s` or `n_t`).
    pub fn duration(&self, task: Task) -> Result<usize, ModelError> {
        match task {
            Task::Sensing => Ok(self.sensing_duration),
            Task::Transmitting => self.transmit_duration.ok_or(ModelError::NoTransmitTask),
        }
    }

    /// Main interval length `M * dt` in seconds.
    pub fn interval_seconds(&self) -> f64 {
        self.subintervals as f64 * self.delta_t
    }

    pub fn grid(&self) -> Result<VoltageGrid, ModelError> {
        VoltageGrid::new(self.v_min, self.v_max, self.grid_levels)
    }

    /// Weight of the harvested current of step `j` (0-based) in the final
    /// voltage after `n` steps of `mode`.
    fn step_weight(&self, mode: Mode, n: usize, j: usize) -> f64 {
        let d = self.decay(mode);
        self.resistance(mode) * (1.0 - d) * d.powi((n - 1 - j) as i32)
    }
}

/// Single sub-interval update of the capacitor voltage.
pub fn step_voltage(params: &DeviceParams, mode: Mode, v: f64, current: f64) -> f64 {
    let d = params.decay(mode);
    v * d + params.resistance(mode) * (1.0 - d) * current
}

/// Capacitor voltage after executing `mode` for `currents.len()` consecutive
/// sub-intervals starting from `v0`. The result is not clamped.
pub fn voltage_after(
    mode: Mode,
    v0: f64,
    currents: &[f64],
    params: &DeviceParams,
) -> Result<f64, ModelError> {
    if v0 < 0.0 {
        return Err(ModelError::NegativeVoltage(v0));
    }
    if let Some(&bad) = currents.iter().find(|c| **c < 0.0) {
        return Err(ModelError::NegativeCurrent(bad));
    }
    let n = currents.len();
    let d = params.decay(mode);
    // Factor e^{-n x} into the sum so each weight is e^{-(n-1-j) x} <= 1.
    let mut acc = 0.0;
    for &c in currents {
        acc = acc * d + c;
    }
    Ok(v0 * d.powi(n as i32) + params.resistance(mode) * (1.0 - d) * acc)
}

/// Distribution of the harvested current in each sub-interval (i.i.d.).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum HarvestModel {
    /// Uniform on `[lo, hi]` amps.
    Uniform { lo: f64, hi: f64 },
    /// Finite support of `(amps, probability)` pairs.
    Discrete { support: Vec<(f64, f64)> },
}

impl HarvestModel {
    pub fn uniform_ma(hi_ma: f64) -> Self {
        HarvestModel::Uniform {
            lo: 0.0,
            hi: hi_ma * 1e-3,
        }
    }

    pub fn constant(amps: f64) -> Self {
        HarvestModel::Discrete {
            support: vec![(amps, 1.0)],
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        match self {
            HarvestModel::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && *lo >= 0.0 && lo < hi) {
                    return Err(ModelError::Harvest(format!(
                        "uniform requires 0 <= lo < hi, got [{lo}, {hi}]"
                    )));
                }
            }
            HarvestModel::Discrete { support } => {
                if support.is_empty() {
                    return Err(ModelError::Harvest("empty support".into()));
                }
                let mut total = 0.0;
                for &(amps, p) in support {
                    if !(amps.is_finite() && amps >= 0.0) {
                        return Err(ModelError::Harvest(format!("negative current {amps}")));
                    }
                    if !(p.is_finite() && p >= 0.0) {
                        return Err(ModelError::Harvest(format!("bad probability {p}")));
                    }
                    total += p;
                }
                if (total - 1.0).abs() > 1e-12 {
                    return Err(ModelError::Harvest(format!(
                        "probabilities sum to {total}, expected 1"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn max_current(&self) -> f64 {
        match self {
            HarvestModel::Uniform { hi, .. } => *hi,
            HarvestModel::Discrete { support } => support
                .iter()
                .filter(|(_, p)| *p > 0.0)
                .map(|(a, _)| *a)
                .fold(0.0, f64::max),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            HarvestModel::Uniform { lo, hi } => 0.5 * (lo + hi),
            HarvestModel::Discrete { support } => support.iter().map(|(a, p)| a * p).sum(),
        }
    }

    /// Discrete atoms used by the convolution machinery. A uniform law is cut
    /// into `bins` equal-width cells represented by their midpoints.
    pub fn atoms(&self, bins: usize) -> Result<Vec<(f64, f64)>, ModelError> {
        match self {
            HarvestModel::Uniform { lo, hi } => {
                if bins < 2 {
                    return Err(ModelError::TooFewBins(bins));
                }
                let w = (hi - lo) / bins as f64;
                let p = 1.0 / bins as f64;
                Ok((0..bins).map(|k| (lo + (k as f64 + 0.5) * w, p)).collect())
            }
            HarvestModel::Discrete { support } => {
                Ok(support.iter().copied().filter(|(_, p)| *p > 0.0).collect())
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            HarvestModel::Uniform { lo, hi } => lo + (hi - lo) * rng.gen::<f64>(),
            HarvestModel::Discrete { support } => {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                for &(amps, p) in support {
                    acc += p;
                    if u < acc {
                        return amps;
                    }
                }
                support.last().map(|s| s.0).unwrap_or(0.0)
            }
        }
    }
}

/// Uniform grid of `N_v` voltage levels on `[v_min, v_max]`.
///
/// Level indices are 0-based throughout the crate: level 0 is `v_min`,
/// level `N_v - 1` is `v_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoltageGrid {
    levels: Vec<f64>,
}

impl VoltageGrid {
    pub fn new(v_min: f64, v_max: f64, n: usize) -> Result<Self, ModelError> {
        if n < 2 {
            return Err(ModelError::Grid(format!("need at least 2 levels, got {n}")));
        }
        if !(v_min.is_finite() && v_max.is_finite() && v_min < v_max) {
            return Err(ModelError::Grid(format!(
                "need v_min < v_max, got [{v_min}, {v_max}]"
            )));
        }
        let h = (v_max - v_min) / (n - 1) as f64;
        let mut levels: Vec<f64> = (0..n).map(|k| v_min + k as f64 * h).collect();
        levels[0] = v_min;
        levels[n - 1] = v_max;
        Ok(VoltageGrid { levels })
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn v_min(&self) -> f64 {
        self.levels[0]
    }

    pub fn v_max(&self) -> f64 {
        self.levels[self.levels.len() - 1]
    }

    pub fn spacing(&self) -> f64 {
        (self.v_max() - self.v_min()) / (self.len() - 1) as f64
    }

    pub fn level(&self, idx: usize) -> f64 {
        self.levels[idx]
    }

    fn check(&self) -> Result<(), ModelError> {
        if self.levels.len() < 2 || !(self.v_min() < self.v_max()) {
            return Err(ModelError::Grid("fewer than 2 distinct levels".into()));
        }
        Ok(())
    }
}

/// Nearest grid level, clamping out-of-range voltages to the end levels.
/// Exact midpoints round up.
pub fn quantize(v: f64, grid: &VoltageGrid) -> usize {
    let n = grid.len();
    if v <= grid.v_min() {
        return 0;
    }
    if v >= grid.v_max() {
        return n - 1;
    }
    let pos = (v - grid.v_min()) / grid.spacing();
    ((pos + 0.5).floor() as usize).min(n - 1)
}

/// How a continuous voltage is mapped onto the grid when building a
/// distribution over levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quantizer {
    /// All mass on the nearest level (see [`quantize`]).
    Nearest,
    /// Mass split between the two bracketing levels in proportion to
    /// proximity; preserves the mean of the clamped voltage.
    #[default]
    Linear,
}

impl Quantizer {
    fn deposit(self, v: f64, mass: f64, grid: &VoltageGrid, out: &mut [f64]) {
        match self {
            Quantizer::Nearest => out[quantize(v, grid)] += mass,
            Quantizer::Linear => {
                let n = grid.len();
                let v = v.clamp(grid.v_min(), grid.v_max());
                let pos = (v - grid.v_min()) / grid.spacing();
                let k = (pos.floor() as usize).min(n - 1);
                let frac = pos - k as f64;
                if k + 1 >= n || frac <= 0.0 {
                    out[k] += mass;
                } else {
                    out[k] += mass * (1.0 - frac);
                    out[k + 1] += mass * frac;
                }
            }
        }
    }
}

/// Numerical resolution of the convolution machinery.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvolutionSettings {
    /// Atoms used for a continuous harvest law.
    pub current_bins: usize,
    /// Nodes of the lattice carrying the law of the harvested contribution.
    pub sum_nodes: usize,
}

impl Default for ConvolutionSettings {
    fn default() -> Self {
        ConvolutionSettings {
            current_bins: 256,
            sum_nodes: 4096,
        }
    }
}

/// Law of the harvested contribution `S = sum_j w_j i_j` to the final voltage
/// of an `n`-step execution, carried on a uniform lattice `k * step`.
#[derive(Debug, Clone, PartialEq)]
pub struct HarvestContribution {
    /// Deterministic decay factor of the initial voltage over the execution.
    pub decay: f64,
    pub step: f64,
    pub masses: Vec<f64>,
}

impl HarvestContribution {
    pub fn new(
        params: &DeviceParams,
        mode: Mode,
        n_steps: usize,
        harvest: &HarvestModel,
        settings: ConvolutionSettings,
    ) -> Result<Self, ModelError> {
        if n_steps < 1 {
            return Err(ModelError::ZeroSteps);
        }
        if settings.current_bins < 2 {
            return Err(ModelError::TooFewBins(settings.current_bins));
        }
        harvest.validate()?;
        let atoms = harvest.atoms(settings.current_bins)?;
        let decay = params.decay(mode).powi(n_steps as i32);
        let weights: Vec<f64> = (0..n_steps)
            .map(|j| params.step_weight(mode, n_steps, j))
            .collect();
        let i_max = atoms.iter().map(|a| a.0).fold(0.0, f64::max);
        let s_max: f64 = weights.iter().sum::<f64>() * i_max;
        if s_max <= 0.0 {
            return Ok(HarvestContribution {
                decay,
                step: 0.0,
                masses: vec![1.0],
            });
        }
        let nodes = settings.sum_nodes.max(2);
        let step = s_max / (nodes - 1) as f64;
        let mut cur = vec![0.0; nodes];
        cur[0] = 1.0;
        let mut hi = 0usize;
        let mut next = vec![0.0; nodes];
        for &w in &weights {
            next[..].fill(0.0);
            let mut new_hi = 0usize;
            for &(amps, p) in &atoms {
                let offset = w * amps / step;
                let base = offset.floor() as usize;
                let frac = offset - base as f64;
                for (k, &m) in cur[..=hi].iter().enumerate() {
                    if m == 0.0 {
                        continue;
                    }
                    let idx = (k + base).min(nodes - 1);
                    let mp = m * p;
                    if frac > 0.0 && idx + 1 < nodes {
                        next[idx] += mp * (1.0 - frac);
                        next[idx + 1] += mp * frac;
                        new_hi = new_hi.max(idx + 1);
                    } else {
                        next[idx] += mp;
                        new_hi = new_hi.max(idx);
                    }
                }
            }
            std::mem::swap(&mut cur, &mut next);
            hi = new_hi;
        }
        cur.truncate(hi + 1);
        Ok(HarvestContribution {
            decay,
            step,
            masses: cur,
        })
    }

    /// `P(S >= t)`, treating each lattice mass as spread uniformly over its cell.
    pub fn tail(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        if self.masses.len() == 1 {
            return if t <= 0.0 { 1.0 } else { 0.0 };
        }
        let mut p = 0.0;
        for (k, &m) in self.masses.iter().enumerate() {
            let s = k as f64 * self.step;
            let frac = ((s + 0.5 * self.step - t) / self.step).clamp(0.0, 1.0);
            p += m * frac;
        }
        p.clamp(0.0, 1.0)
    }

    /// Law over grid levels of the clamped final voltage from `v0`.
    pub fn level_distribution(&self, v0: f64, grid: &VoltageGrid, quantizer: Quantizer) -> Vec<f64> {
        let mut out = vec![0.0; grid.len()];
        let base = v0 * self.decay;
        for (k, &m) in self.masses.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            quantizer.deposit(base + k as f64 * self.step, m, grid, &mut out);
        }
        let total: f64 = out.iter().sum();
        if total > 0.0 {
            out.iter_mut().for_each(|p| *p /= total);
        }
        out
    }

    /// `P(final voltage >= threshold)` from `v0`, without quantization.
    pub fn prob_at_least(&self, v0: f64, threshold: f64) -> f64 {
        self.tail(threshold - v0 * self.decay)
    }
}

/// Distribution over grid levels of the voltage after `n_steps` of `mode`
/// from `v0`, clamped to `[v_min, v_max]`.
#[allow(clippy::too_many_arguments)]
pub fn final_voltage_distribution(
    params: &DeviceParams,
    mode: Mode,
    v0: f64,
    n_steps: usize,
    harvest: &HarvestModel,
    grid: &VoltageGrid,
    settings: ConvolutionSettings,
    quantizer: Quantizer,
) -> Result<Vec<f64>, ModelError> {
    grid.check()?;
    if v0 < 0.0 {
        return Err(ModelError::NegativeVoltage(v0));
    }
    let contribution = HarvestContribution::new(params, mode, n_steps, harvest, settings)?;
    Ok(contribution.level_distribution(v0, grid, quantizer))
}

/// Probability that the final voltage after the whole task stays at or above
/// `v_out`. Intermediate dips are not considered.
pub fn safety_probability(
    task: Task,
    v0: f64,
    params: &DeviceParams,
    harvest: &HarvestModel,
    settings: ConvolutionSettings,
) -> Result<f64, ModelError> {
    if v0 < 0.0 {
        return Err(ModelError::NegativeVoltage(v0));
    }
    let n = params.duration(task)?;
    let contribution = HarvestContribution::new(params, task.mode(), n, harvest, settings)?;
    Ok(contribution.prob_at_least(v0, params.v_out))
}

/// Safety probability at every grid level, sharing one convolution.
pub fn safety_table(
    task: Task,
    params: &DeviceParams,
    harvest: &HarvestModel,
    grid: &VoltageGrid,
    settings: ConvolutionSettings,
) -> Result<Vec<f64>, ModelError> {
    let n = params.duration(task)?;
    let contribution = HarvestContribution::new(params, task.mode(), n, harvest, settings)?;
    Ok(grid
        .levels()
        .iter()
        .map(|&v| contribution.prob_at_least(v, params.v_out))
        .collect())
}
