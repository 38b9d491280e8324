//! Named experiment presets and the generic one-variable sweep.
//!
//! Each recipe pins the parameters its figure or table was produced with and
//! takes simulation settings (horizon, seed, replications) from the base
//! configuration.

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::energy_model::{safety_table, HarvestModel, Task};
use crate::error::RunError;
use crate::mdp::{MdpModel, RewardConfig};
use crate::simulator::{compare, simulate_replications, ComparisonReport, Scheduler};
use crate::solver::{solve_model, upper_thresholds, Solution, Threshold, ThresholdEntry};
use crate::table::{Cell, Table};

/// Model, solution and the OSTB-vs-ALAP comparison for one configuration.
pub struct Experiment {
    pub model: MdpModel,
    pub solution: Solution,
    pub comparison: ComparisonReport,
}

pub fn solve(cfg: &RunConfig) -> Result<(MdpModel, Solution), RunError> {
    let model = cfg.build_model()?;
    let solution = solve_model(&model, &cfg.solve_options())?;
    Ok((model, solution))
}

/// OSTB (candidate) against ALAP (baseline) on shared seeds.
pub fn compare_schedulers(cfg: &RunConfig, model: &MdpModel, solution: &Solution) -> Result<ComparisonReport, RunError> {
    let runs = |s: Scheduler| simulate_replications(&cfg.sim_config(s), cfg.sim.replications, Some(model));
    let alap = runs(Scheduler::Alap)?;
    let ostb = runs(Scheduler::ostb(model, solution.policy.clone()))?;
    Ok(compare(&alap, &ostb)?)
}

pub fn experiment(cfg: &RunConfig) -> Result<Experiment, RunError> {
    let (model, solution) = solve(cfg)?;
    let comparison = compare_schedulers(cfg, &model, &solution)?;
    Ok(Experiment {
        model,
        solution,
        comparison,
    })
}

/// Parameters a sweep can vary. Currents are in mA, capacitance in mF,
/// durations and deadlines in sub-intervals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum SweepVar {
    /// Upper end of a uniform harvest law `U[0, x]` mA.
    Gamma,
    CapacitanceMf,
    VOut,
    NominalVoltage,
    SensingDuration,
    TransmitDuration,
    SensingDeadline,
    GridLevels,
}

impl SweepVar {
    pub fn name(self) -> &'static str {
        match self {
            SweepVar::Gamma => "gamma_ma",
            SweepVar::CapacitanceMf => "capacitance_mf",
            SweepVar::VOut => "v_out",
            SweepVar::NominalVoltage => "nominal_voltage",
            SweepVar::SensingDuration => "sensing_duration",
            SweepVar::TransmitDuration => "transmit_duration",
            SweepVar::SensingDeadline => "sensing_deadline",
            SweepVar::GridLevels => "grid_levels",
        }
    }

    /// `cfg` with this variable set to `x`.
    pub fn apply(self, cfg: &RunConfig, x: f64) -> Result<RunConfig, RunError> {
        let mut c = cfg.clone();
        let count = |x: f64| -> Result<usize, RunError> {
            if x >= 0.0 && x.fract() == 0.0 {
                Ok(x as usize)
            } else {
                Err(RunError::Config(format!("{} must be a whole number, got {x}", self.name())))
            }
        };
        match self {
            SweepVar::Gamma => c.harvest = HarvestModel::uniform_ma(x),
            SweepVar::CapacitanceMf => c.device.capacitance = x * 1e-3,
            SweepVar::VOut => c.device.v_out = x,
            SweepVar::NominalVoltage => c.device.nominal_voltage = Some(x),
            SweepVar::SensingDuration => c.device.sensing_duration = count(x)?,
            SweepVar::TransmitDuration => c.device.transmit_duration = Some(count(x)?),
            SweepVar::SensingDeadline => c.device.sensing_deadline = count(x)?,
            SweepVar::GridLevels => c.device.grid_levels = count(x)?,
        }
        c.validate()?;
        Ok(c)
    }
}

const SWEEP_HEADER: &[&str] = &[
    "model_tasks",
    "model_reward",
    "ostb_rate",
    "ostb_rate_se",
    "alap_rate",
    "alap_rate_se",
    "ostb_sensing_failures",
    "ostb_transmit_failures",
    "alap_sensing_failures",
    "alap_transmit_failures",
    "ostb_latency_s",
    "alap_latency_s",
];

fn sweep_cells(e: &Experiment) -> Vec<Cell> {
    let (o, a) = (&e.comparison.candidate, &e.comparison.baseline);
    vec![
        e.solution.gain.tasks_completed.into(),
        e.solution.gain.reward_per_interval.into(),
        o.completion_rate.into(),
        o.completion_rate_se.into(),
        a.completion_rate.into(),
        a.completion_rate_se.into(),
        o.sensing_failures.into(),
        o.transmit_failures.into(),
        a.sensing_failures.into(),
        a.transmit_failures.into(),
        o.latency_seconds.into(),
        a.latency_seconds.into(),
    ]
}

/// Solve and simulate at every value of `var`.
pub fn sweep(cfg: &RunConfig, var: SweepVar, values: &[f64]) -> Result<Table, RunError> {
    let mut header = vec![var.name()];
    header.extend_from_slice(SWEEP_HEADER);
    let mut table = Table::new("sweep", &header);
    for &x in values {
        let e = experiment(&var.apply(cfg, x)?)?;
        let mut row = vec![Cell::Num(x)];
        row.extend(sweep_cells(&e));
        table.push(row);
    }
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Recipe {
    /// Safety probability and reward curves against voltage.
    Fig3,
    /// Threshold levels across the permissible windows.
    Fig4,
    /// Running completion rate for three capacitances.
    Fig5,
    /// Completion rate against the harvest range for three turn-off thresholds.
    Fig6,
    /// Power failures per task and harvest law.
    Tab2,
    /// Total execution latency per harvest law.
    Tab3,
    /// Average reward against the sensing and transmitting durations.
    Combined,
    /// Relative improvements of OSTB over ALAP at 4.7 mF.
    Headline,
}

pub const FIG5_CAPACITANCES_MF: [f64; 3] = [2.7, 4.7, 6.8];
pub const FIG6_V_OUT: [f64; 3] = [1.8, 2.1, 2.4];
pub const TABLE_GAMMAS_MA: [f64; 3] = [3.0, 6.0, 9.0];
pub const HEADLINE_GAMMA_MA: f64 = 6.0;
pub const THETAS: [f64; 3] = [0.7, 0.9, 0.95];

/// 1.0, 1.5, ..., 12.5 mA.
pub fn fig6_gammas() -> Vec<f64> {
    (2..=25).map(|k| k as f64 * 0.5).collect()
}

impl Recipe {
    pub const ALL: [Recipe; 8] = [
        Recipe::Fig3,
        Recipe::Fig4,
        Recipe::Fig5,
        Recipe::Fig6,
        Recipe::Tab2,
        Recipe::Tab3,
        Recipe::Combined,
        Recipe::Headline,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Recipe::Fig3 => "fig3",
            Recipe::Fig4 => "fig4",
            Recipe::Fig5 => "fig5",
            Recipe::Fig6 => "fig6",
            Recipe::Tab2 => "tab2",
            Recipe::Tab3 => "tab3",
            Recipe::Combined => "combined",
            Recipe::Headline => "headline",
        }
    }

    /// Base configuration with this recipe's pinned parameters.
    pub fn config(self, base: &RunConfig) -> RunConfig {
        let mut c = base.clone();
        match self {
            Recipe::Fig3 => {
                c.device.capacitance = 2.7e-3;
                c.device.v_out = 2.4;
                c.harvest = HarvestModel::uniform_ma(3.0);
            }
            Recipe::Fig4 => {
                c.device.sensing_deadline = 15;
                c.device.sensing_duration = 5;
                c.device.transmit_duration = Some(20);
                c.harvest = HarvestModel::uniform_ma(3.0);
                c.reward = RewardConfig::Basic;
            }
            Recipe::Fig5 | Recipe::Fig6 | Recipe::Tab2 | Recipe::Tab3 | Recipe::Combined => {
                c.harvest = HarvestModel::uniform_ma(3.0);
            }
            Recipe::Headline => {
                c.device.capacitance = 4.7e-3;
                c.harvest = HarvestModel::uniform_ma(HEADLINE_GAMMA_MA);
            }
        }
        c
    }

    pub fn run(self, base: &RunConfig) -> Result<Vec<Table>, RunError> {
        let cfg = self.config(base);
        match self {
            Recipe::Fig3 => fig3(&cfg).map(|t| vec![t]),
            Recipe::Fig4 => fig4(&cfg).map(|t| vec![t]),
            Recipe::Fig5 => fig5(&cfg),
            Recipe::Fig6 => fig6(&cfg).map(|t| vec![t]),
            Recipe::Tab2 | Recipe::Tab3 => {
                let runs = distribution_runs(&cfg)?;
                Ok(vec![if self == Recipe::Tab2 { tab2(&runs) } else { tab3(&runs) }])
            }
            Recipe::Combined => combined(&cfg).map(|t| vec![t]),
            Recipe::Headline => headline(&cfg).map(|t| vec![t]),
        }
    }
}

fn fig3(cfg: &RunConfig) -> Result<Table, RunError> {
    let mut header = vec!["task", "level", "voltage", "p_safe", "basic"];
    let names: Vec<String> = THETAS.iter().map(|t| format!("sigmoid_theta_{t}")).collect();
    header.extend(names.iter().map(String::as_str));
    let mut table = Table::new("fig3", &header);
    let grid = cfg.device.grid()?;
    let sigmoid = |theta| RewardConfig::Sigmoid { beta: 15.0, theta };
    for task in [Task::Sensing, Task::Transmitting] {
        let safety = safety_table(task, &cfg.device, &cfg.harvest, &grid, cfg.solver.build.convolution)?;
        let curves: Vec<Vec<f64>> = THETAS.iter().map(|&t| sigmoid(t).table(&safety)).collect();
        let basic = RewardConfig::Basic.table(&safety);
        for (k, &v) in grid.levels().iter().enumerate() {
            let mut row: Vec<Cell> = vec![task_name(task).into(), k.into(), v.into(), safety[k].into(), basic[k].into()];
            row.extend(curves.iter().map(|c| Cell::Num(c[k])));
            table.push(row);
        }
    }
    Ok(table)
}

fn task_name(task: Task) -> &'static str {
    match task {
        Task::Sensing => "sensing",
        Task::Transmitting => "transmitting",
    }
}

/// Harvest ranges compared in the threshold figure (mA).
pub const FIG4_GAMMAS_MA: [f64; 2] = [0.3, 3.0];

fn fig4(cfg: &RunConfig) -> Result<Table, RunError> {
    let mut table = Table::new(
        "fig4",
        &["gamma_ma", "task", "tau", "threshold_level", "threshold_voltage", "step_structured"],
    );
    for gamma in FIG4_GAMMAS_MA {
        let mut c = cfg.clone();
        c.harvest = HarvestModel::uniform_ma(gamma);
        let (model, sol) = solve(&c)?;
        let upper = upper_thresholds(&sol.policy, &model.space);
        let broken: Vec<(usize, u8)> = sol
            .violations
            .iter()
            .filter_map(|v| match v {
                crate::error::SolverError::NotThreshold { tau, flag, .. } => Some((*tau, *flag)),
                _ => None,
            })
            .collect();
        let mut emit = |task: Task, flag: u8, entries: &[ThresholdEntry]| {
            for e in entries {
                table.push(vec![
                    gamma.into(),
                    task_name(task).into(),
                    e.tau.into(),
                    threshold_cell(e.threshold),
                    e.threshold.level().map(|l| model.grid.level(l)).into(),
                    (if broken.contains(&(e.tau, flag)) { "no" } else { "yes" }).into(),
                ]);
            }
        };
        emit(Task::Sensing, 0, &upper.sensing);
        emit(Task::Transmitting, 1, &upper.transmitting);
    }
    Ok(table)
}

fn fig5(cfg: &RunConfig) -> Result<Vec<Table>, RunError> {
    let mut series = Table::new("fig5", &["capacitance_mf", "interval", "ostb_rate", "alap_rate"]);
    let mut summary = Table::new(
        "fig5_summary",
        &["capacitance_mf", "ostb_rate", "alap_rate", "completion_gain_pct"],
    );
    for c_mf in FIG5_CAPACITANCES_MF {
        let c = SweepVar::CapacitanceMf.apply(cfg, c_mf)?;
        let (model, sol) = solve(&c)?;
        let mean_running = |s: Scheduler| -> Result<Vec<f64>, RunError> {
            let reps = simulate_replications(&c.sim_config(s), c.sim.replications, Some(&model))?;
            let mut acc = vec![0.0; reps[0].intervals.len()];
            for r in &reps {
                for (a, x) in acc.iter_mut().zip(r.running_rate()) {
                    *a += x / reps.len() as f64;
                }
            }
            Ok(acc)
        };
        let ostb = mean_running(Scheduler::ostb(&model, sol.policy.clone()))?;
        let alap = mean_running(Scheduler::Alap)?;
        for (k, (o, a)) in ostb.iter().zip(&alap).enumerate() {
            series.push(vec![c_mf.into(), (k + 1).into(), (*o).into(), (*a).into()]);
        }
        let (o, a) = (*ostb.last().unwrap_or(&0.0), *alap.last().unwrap_or(&0.0));
        let gain = if a > 0.0 { 100.0 * (o - a) / a } else { f64::NAN };
        summary.push(vec![c_mf.into(), o.into(), a.into(), gain.into()]);
    }
    Ok(vec![series, summary])
}

fn fig6(cfg: &RunConfig) -> Result<Table, RunError> {
    let mut header = vec!["v_out", "gamma_ma"];
    header.extend_from_slice(SWEEP_HEADER);
    let mut table = Table::new("fig6", &header);
    for v_out in FIG6_V_OUT {
        let c = SweepVar::VOut.apply(cfg, v_out)?;
        for gamma in fig6_gammas() {
            let e = experiment(&SweepVar::Gamma.apply(&c, gamma)?)?;
            let mut row = vec![Cell::Num(v_out), Cell::Num(gamma)];
            row.extend(sweep_cells(&e));
            table.push(row);
        }
    }
    Ok(table)
}

/// OSTB vs ALAP under `U[0, 3]`, `U[0, 6]` and `U[0, 9]` mA.
pub fn distribution_runs(cfg: &RunConfig) -> Result<Vec<(f64, ComparisonReport)>, RunError> {
    TABLE_GAMMAS_MA
        .iter()
        .map(|&g| Ok((g, experiment(&SweepVar::Gamma.apply(cfg, g)?)?.comparison)))
        .collect()
}

pub fn tab2(runs: &[(f64, ComparisonReport)]) -> Table {
    let mut t = Table::new(
        "tab2",
        &["gamma_ma", "ostb_sensing", "alap_sensing", "ostb_transmitting", "alap_transmitting"],
    );
    for (g, r) in runs {
        t.push(vec![
            (*g).into(),
            r.candidate.sensing_failures.into(),
            r.baseline.sensing_failures.into(),
            r.candidate.transmit_failures.into(),
            r.baseline.transmit_failures.into(),
        ]);
    }
    t
}

pub fn tab3(runs: &[(f64, ComparisonReport)]) -> Table {
    let mut t = Table::new("tab3", &["gamma_ma", "ostb_latency_s", "alap_latency_s", "ratio"]);
    for (g, r) in runs {
        let (o, a) = (r.candidate.latency_seconds, r.baseline.latency_seconds);
        t.push(vec![(*g).into(), o.into(), a.into(), (if a > 0.0 { o / a } else { f64::NAN }).into()]);
    }
    t
}

/// Sensing durations 5..=10 with `n_t = 40`; transmit durations 20..=40
/// (step 2) with `n_s = 5`.
pub fn combined_points() -> Vec<(&'static str, usize, usize)> {
    let mut pts: Vec<_> = (5..=10).map(|ns| ("sensing", ns, 40)).collect();
    pts.extend((20..=40).step_by(2).map(|nt| ("transmitting", 5, nt)));
    pts
}

fn combined(cfg: &RunConfig) -> Result<Table, RunError> {
    let mut table = Table::new(
        "combined",
        &["sweep", "sensing_s", "transmitting_s", "theta", "reward_per_interval", "tasks_per_interval"],
    );
    for (sweep, ns, nt) in combined_points() {
        for theta in THETAS {
            let mut c = cfg.clone();
            c.device.sensing_duration = ns;
            c.device.transmit_duration = Some(nt);
            c.reward = RewardConfig::Sigmoid { beta: 25.0, theta };
            c.validate()?;
            let (_, sol) = solve(&c)?;
            let dt = c.device.delta_t;
            table.push(vec![
                sweep.into(),
                (ns as f64 * dt).into(),
                (nt as f64 * dt).into(),
                theta.into(),
                sol.gain.reward_per_interval.into(),
                sol.gain.tasks_completed.into(),
            ]);
        }
    }
    Ok(table)
}

pub fn headline_table(r: &ComparisonReport) -> Table {
    let mut t = Table::new("headline", &["metric", "ostb", "alap", "improvement_pct"]);
    let (o, a, d) = (&r.candidate, &r.baseline, &r.deltas);
    t.push(vec!["tasks_completed".into(), o.tasks_completed.into(), a.tasks_completed.into(), d.completion_gain_pct.into()]);
    t.push(vec!["power_failures".into(), o.failures().into(), a.failures().into(), d.failure_reduction_pct.into()]);
    t.push(vec!["latency_s".into(), o.latency_seconds.into(), a.latency_seconds.into(), d.latency_reduction_pct.into()]);
    t
}

fn headline(cfg: &RunConfig) -> Result<Table, RunError> {
    Ok(headline_table(&experiment(cfg)?.comparison))
}

/// Threshold as written in tables: level index or `never`.
pub fn threshold_cell(t: Threshold) -> Cell {
    match t {
        Threshold::Level(l) => Cell::Int(l as i64),
        Threshold::Never => Cell::Text("never".into()),
    }
}
