use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use ostb::config::{Format, RunConfig};
use ostb::energy_model::HarvestModel;
use ostb::error::RunError;
use ostb::manifest::Manifest;
use ostb::mdp::{MdpDocument, MdpModel};
use ostb::recipes::{self, Recipe, SweepVar};
use ostb::simulator::{simulate_replications, Aggregate, Scheduler, SchedulerKind};
use ostb::solver::{solve_model, PolicyDocument, Solution};
use ostb::table::Table;

#[derive(Parser)]
#[command(name = "ostb", version, about = "Optimal threshold scheduling for battery-less sensing devices")]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `sim.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Emit only this format.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Apply a named experiment preset.
    #[arg(long, global = true, value_enum)]
    recipe: Option<Recipe>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the MDP and write `model.json`.
    Build,
    /// Solve for the optimal policy; writes `policy.json` and `solution.json`.
    Solve {
        /// Solve a previously built model instead of rebuilding it.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Fail (exit 4) unless the policy induces a single recurrent class.
        #[arg(long)]
        verify_unichain: bool,
    },
    /// Simulate one scheduler over all replications.
    Simulate {
        #[arg(long, value_enum, default_value_t = SchedulerArg::Ostb)]
        scheduler: SchedulerArg,
        /// Policy file from `solve`; solved on the fly when absent.
        #[arg(long)]
        policy: Option<PathBuf>,
    },
    /// OSTB against ALAP on shared seeds, or a comparison recipe.
    Compare,
    /// Vary one parameter, or run a recipe.
    Sweep {
        #[arg(long, value_enum)]
        var: Option<SweepVar>,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
    },
    /// Check solver consistency and structure on the configured model.
    Verify,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum SchedulerArg {
    Ostb,
    Alap,
    AsapGreedy,
}

struct Ctx {
    cfg: RunConfig,
    hash: String,
    recipe: Option<Recipe>,
    dir: PathBuf,
    manifest: Manifest,
}

impl Ctx {
    fn new(cli: &Cli, command: &str) -> Result<Self, RunError> {
        let mut manifest = Manifest::start(command);
        let mut cfg = match &cli.config {
            Some(path) => {
                let cfg = RunConfig::load(path)?;
                manifest.input(path)?;
                cfg
            }
            None if cli.recipe.is_some() => RunConfig::with_harvest(HarvestModel::uniform_ma(3.0)),
            None => return Err(RunError::Config("no --config given (and no --recipe)".into())),
        };
        if let Some(seed) = cli.seed {
            cfg.sim.seed = seed;
        }
        if let Some(out) = &cli.out {
            cfg.output.dir = out.clone();
        }
        if let Some(f) = cli.format {
            cfg.output.formats = vec![f];
        }
        if let Some(r) = cli.recipe {
            cfg = r.config(&cfg);
        }
        cfg.validate()?;
        let hash = cfg.hash();
        manifest.config_hash = Some(hash.clone());
        manifest.seed = Some(cfg.sim.seed);
        manifest.recipe = cli.recipe.map(|r| r.name().to_string());
        let dir = cfg.output.dir.clone();
        std::fs::create_dir_all(&dir)?;
        Ok(Ctx {
            cfg,
            hash,
            recipe: cli.recipe,
            dir,
            manifest,
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), RunError> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes)?;
        self.manifest.output(&path)?;
        Ok(())
    }

    fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<(), RunError> {
        let text = serde_json::to_string_pretty(value).map_err(|e| RunError::Io(std::io::Error::other(e)))?;
        self.write(name, (text + "\n").as_bytes())
    }

    /// JSON payload carrying the config hash.
    fn stamped(&self, payload: Value) -> Value {
        json!({
            "config_hash": self.hash,
            "recipe": self.recipe.map(Recipe::name),
            "data": payload,
        })
    }

    fn emit_table(&mut self, stem: &str, table: &Table) -> Result<(), RunError> {
        if self.cfg.wants(Format::Csv) {
            let mut buf = Vec::new();
            table.write_csv(&mut buf).map_err(|e| RunError::Io(std::io::Error::other(e)))?;
            self.write(&format!("{stem}.csv"), &buf)?;
        }
        if self.cfg.wants(Format::Json) {
            let v = self.stamped(table.to_json());
            self.write_json(&format!("{stem}.json"), &v)?;
        }
        Ok(())
    }

    fn finish(self) -> Result<(), RunError> {
        self.manifest.finish(&self.dir)?;
        Ok(())
    }
}

fn threshold_table(model: &MdpModel, sol: &Solution) -> Table {
    let mut t = Table::new("thresholds", &["task", "tau", "threshold_level", "threshold_voltage"]);
    if let Some(th) = &sol.thresholds {
        for (task, entries) in [("sensing", &th.sensing), ("transmitting", &th.transmitting)] {
            for e in entries {
                let volts = e.threshold.level().map(|l| model.grid.level(l));
                t.push(vec![task.into(), e.tau.into(), recipes::threshold_cell(e.threshold), volts.into()]);
            }
        }
    }
    t
}

fn solution_json(model: &MdpModel, sol: &Solution) -> Value {
    json!({
        "lp_gain": sol.occupation.gain,
        "rvi_gain": sol.rvi.gain,
        "gain_gap": sol.gain_gap(),
        "lp_iterations": sol.occupation.iterations,
        "rvi_iterations": sol.rvi.iterations,
        "flow_residual": sol.occupation.flow_residual(&model.mdp),
        "gain": {
            "reward_per_interval": sol.gain.reward_per_interval,
            "tasks_per_interval": sol.gain.tasks_completed,
            "sensing_completed": sol.gain.sensing_completed,
            "transmit_completed": sol.gain.transmit_completed,
            "intervals_per_epoch": sol.gain.intervals_per_epoch,
        },
        "thresholds": sol.thresholds,
        "violations": sol.violations.iter().map(ToString::to_string).collect::<Vec<_>>(),
        "recurrence": {
            "closed_classes": sol.recurrence.closed_classes.len(),
            "transient_states": sol.recurrence.transient_states,
            "start_recurrent": sol.recurrence.start_recurrent,
            "unichain": sol.recurrence.is_unichain(),
        },
    })
}

fn cmd_build(cli: &Cli) -> Result<(), RunError> {
    let mut ctx = Ctx::new(cli, "build")?;
    let model = ctx.cfg.build_model()?;
    eprintln!("built model: {} states, {} state-action pairs", model.n_states(), model.mdp.n_pairs());
    ctx.write_json("model.json", &model.to_document())?;
    ctx.finish()
}

fn cmd_solve(cli: &Cli, model_path: Option<&Path>, verify_unichain: bool) -> Result<(), RunError> {
    let mut ctx = Ctx::new(cli, "solve")?;
    let model = match model_path {
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            let doc: MdpDocument =
                serde_json::from_str(&text).map_err(|e| RunError::Config(format!("{}: {e}", p.display())))?;
            ctx.manifest.input(p)?;
            MdpModel::from_document(doc)?
        }
        None => ctx.cfg.build_model()?,
    };
    let sol = solve_model(&model, &ctx.cfg.solve_options())?;
    eprintln!(
        "gain {:.9} (rvi {:.9}), {:.6} tasks/interval, {} threshold violations",
        sol.occupation.gain,
        sol.rvi.gain,
        sol.gain.tasks_completed,
        sol.violations.len()
    );
    ctx.write_json("policy.json", &PolicyDocument::new(&model, &sol))?;
    let summary = ctx.stamped(solution_json(&model, &sol));
    ctx.write_json("solution.json", &summary)?;
    ctx.emit_table("thresholds", &threshold_table(&model, &sol))?;
    let unichain = sol.recurrence.passes();
    ctx.finish()?;
    if verify_unichain && !unichain {
        return Err(RunError::Verification(format!(
            "policy has {} closed classes",
            sol.recurrence.closed_classes.len()
        )));
    }
    Ok(())
}

fn cmd_simulate(cli: &Cli, which: SchedulerArg, policy: Option<&Path>) -> Result<(), RunError> {
    let mut ctx = Ctx::new(cli, "simulate")?;
    let model = ctx.cfg.build_model()?;
    let scheduler = match which {
        SchedulerArg::Alap => Scheduler::Alap,
        SchedulerArg::AsapGreedy => Scheduler::AsapGreedy,
        SchedulerArg::Ostb => {
            let policy = match policy {
                Some(p) => {
                    let text = std::fs::read_to_string(p)?;
                    let doc: PolicyDocument =
                        serde_json::from_str(&text).map_err(|e| RunError::Config(format!("{}: {e}", p.display())))?;
                    ctx.manifest.input(p)?;
                    doc.policy(&model).map_err(|e| RunError::Config(format!("{}: {e}", p.display())))?
                }
                None => solve_model(&model, &ctx.cfg.solve_options())?.policy,
            };
            Scheduler::ostb(&model, policy)
        }
    };
    let kind: SchedulerKind = scheduler.kind();
    let reports = simulate_replications(&ctx.cfg.sim_config(scheduler), ctx.cfg.sim.replications, Some(&model))?;
    let agg = Aggregate::from_reports(&reports)?;
    eprintln!(
        "{kind}: {:.4} tasks/interval, {:.1} + {:.1} failures, {:.2} s latency (mean of {} runs)",
        agg.completion_rate, agg.sensing_failures, agg.transmit_failures, agg.latency_seconds, agg.replications
    );
    if ctx.cfg.wants(Format::Csv) {
        let mut buf = Vec::new();
        reports[0].write_csv(&mut buf)?;
        ctx.write(&format!("simulate_{kind}.csv"), &buf)?;
    }
    if ctx.cfg.wants(Format::Json) {
        let summaries: Vec<_> = reports.iter().map(|r| r.summary()).collect();
        let v = ctx.stamped(json!({ "aggregate": agg, "replications": summaries }));
        ctx.write_json(&format!("simulate_{kind}.json"), &v)?;
    }
    ctx.finish()
}

fn run_recipe(ctx: &mut Ctx, recipe: Recipe) -> Result<(), RunError> {
    for table in recipe.run(&ctx.cfg)? {
        eprintln!("{}: {} rows", table.name, table.rows.len());
        ctx.emit_table(&table.name.clone(), &table)?;
    }
    Ok(())
}

fn cmd_compare(cli: &Cli) -> Result<(), RunError> {
    let mut ctx = Ctx::new(cli, "compare")?;
    if let Some(r) = ctx.recipe.filter(|r| matches!(r, Recipe::Tab2 | Recipe::Tab3 | Recipe::Headline)) {
        run_recipe(&mut ctx, r)?;
        return ctx.finish();
    }
    let e = recipes::experiment(&ctx.cfg)?;
    let d = e.comparison.deltas;
    eprintln!(
        "ostb vs alap: completion {:+.2}%, failures -{:.2}%, latency -{:.2}%",
        d.completion_gain_pct, d.failure_reduction_pct, d.latency_reduction_pct
    );
    ctx.emit_table("comparison", &recipes::headline_table(&e.comparison))?;
    if ctx.cfg.wants(Format::Json) {
        let v = ctx.stamped(serde_json::to_value(&e.comparison).expect("report serializes"));
        ctx.write_json("comparison_report.json", &v)?;
    }
    ctx.finish()
}

fn cmd_sweep(cli: &Cli, var: Option<SweepVar>, values: &[f64]) -> Result<(), RunError> {
    let mut ctx = Ctx::new(cli, "sweep")?;
    match (ctx.recipe, var) {
        (Some(r), None) => run_recipe(&mut ctx, r)?,
        (_, Some(var)) if !values.is_empty() => {
            let table = recipes::sweep(&ctx.cfg, var, values)?;
            ctx.emit_table(&format!("sweep_{}", var.name()), &table)?;
        }
        (_, Some(_)) => return Err(RunError::Config("--var needs --values".into())),
        (None, None) => return Err(RunError::Config("sweep needs --var/--values or --recipe".into())),
    }
    ctx.finish()
}

fn cmd_verify(cli: &Cli) -> Result<(), RunError> {
    let mut ctx = Ctx::new(cli, "verify")?;
    let model = ctx.cfg.build_model()?;
    let sol = solve_model(&model, &ctx.cfg.solve_options())?;
    let occ = &sol.occupation;
    let residual = occ.flow_residual(&model.mdp);
    let checks = [
        ("lp_rvi_relative_gap", sol.gain_gap(), sol.gain_gap() <= 1e-6),
        ("occupation_total_error", (occ.total() - 1.0).abs(), (occ.total() - 1.0).abs() <= 1e-8),
        ("flow_residual", residual, residual <= 1e-8),
        (
            "stationary_gain_error",
            (sol.gain.gain - occ.gain).abs(),
            (sol.gain.gain - occ.gain).abs() <= 1e-6,
        ),
        ("threshold_violations", sol.violations.len() as f64, sol.violations.is_empty()),
        (
            "closed_classes",
            sol.recurrence.closed_classes.len() as f64,
            sol.recurrence.passes(),
        ),
    ];
    let mut table = Table::new("verify", &["check", "value", "pass"]);
    for (name, value, pass) in &checks {
        eprintln!("{} {name} = {value:e}", if *pass { "PASS" } else { "FAIL" });
        table.push(vec![(*name).into(), (*value).into(), (if *pass { "yes" } else { "no" }).into()]);
    }
    for v in &sol.violations {
        eprintln!("  {v}");
    }
    ctx.emit_table("verify", &table)?;
    ctx.finish()?;
    let failed: Vec<&str> = checks.iter().filter(|c| !c.2).map(|c| c.0).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(RunError::Verification(failed.join(", ")))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start {n} worker threads: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::Build => cmd_build(&cli),
        Command::Solve {
            model,
            verify_unichain,
        } => cmd_solve(&cli, model.as_deref(), *verify_unichain),
        Command::Simulate { scheduler, policy } => cmd_simulate(&cli, *scheduler, policy.as_deref()),
        Command::Compare => cmd_compare(&cli),
        Command::Sweep { var, values } => cmd_sweep(&cli, *var, values),
        Command::Verify => cmd_verify(&cli),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
