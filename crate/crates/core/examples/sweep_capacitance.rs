use ostb::config::RunConfig;
use ostb::energy_model::HarvestModel;
use ostb::recipes::{sweep, SweepVar};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = RunConfig::with_harvest(HarvestModel::uniform_ma(3.0));
    cfg.device.nominal_voltage = Some(2.4);
    cfg.sim.replications = 5;
    let table = sweep(&cfg, SweepVar::CapacitanceMf, &[2.7, 3.3, 4.7, 6.8])?;
    table.write_csv(std::io::stdout())?;
    Ok(())
}
