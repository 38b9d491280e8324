use ostb::config::RunConfig;
use ostb::energy_model::HarvestModel;
use ostb::recipes;

// Paired OSTB-vs-ALAP comparison over 20 seeded replications, run in
// parallel. Replication k of both schedulers sees the same harvest draws.
// The 2.4 V nominal voltage puts the device near its energy budget.
fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = RunConfig::with_harvest(HarvestModel::uniform_ma(3.0));
    cfg.device.nominal_voltage = Some(2.4);
    cfg.sim.replications = 20;
    cfg.sim.seed = 1;

    let e = recipes::experiment(&cfg)?;
    let r = &e.comparison;
    for a in [&r.baseline, &r.candidate] {
        println!(
            "{:>5}: {:.4} +- {:.4} tasks/interval, {:.1} failures, {:.1} s latency",
            a.scheduler.to_string(),
            a.completion_rate,
            a.completion_rate_se,
            a.failures(),
            a.latency_seconds
        );
    }
    println!("{}", serde_json::to_string_pretty(&r.deltas)?);
    Ok(())
}
