//! Run one of the named experiment recipes and print its tables as CSV.
//!
//! ```bash
//! cargo run --release --example recipe -- fig4
//! ```

use clap::ValueEnum;
use ostb::config::RunConfig;
use ostb::energy_model::HarvestModel;
use ostb::recipes::Recipe;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "fig3".into());
    let recipe = Recipe::from_str(&name, true)?;
    let base = RunConfig::with_harvest(HarvestModel::uniform_ma(3.0));
    for table in recipe.run(&base)? {
        println!("# {}", table.name);
        table.write_csv(std::io::stdout())?;
    }
    Ok(())
}
