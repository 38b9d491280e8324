//! Safety probability of each task against the starting voltage, for the
//! reference device under a 0-3 mA uniform harvest.
//!
//! ```bash
//! cargo run --example safety_curve
//! ```

use ostb::energy_model::{safety_table, ConvolutionSettings, DeviceParams, HarvestModel, Task};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = DeviceParams::reference();
    let harvest = HarvestModel::uniform_ma(3.0);
    let grid = params.grid()?;
    let settings = ConvolutionSettings::default();

    let sensing = safety_table(Task::Sensing, &params, &harvest, &grid, settings)?;
    let transmitting = safety_table(Task::Transmitting, &params, &harvest, &grid, settings)?;

    println!("level  voltage  p_safe(sense)  p_safe(transmit)");
    for (k, v) in grid.levels().iter().enumerate() {
        println!("{k:>5}  {v:>7.4}  {:>13.6}  {:>16.6}", sensing[k], transmitting[k]);
    }
    Ok(())
}
