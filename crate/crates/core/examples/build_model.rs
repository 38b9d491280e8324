//! Builds the scheduling MDP for the reference device and writes it as JSON.

use ostb::energy_model::{DeviceParams, HarvestModel};
use ostb::mdp::{BuildOptions, MdpModel, RewardConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = MdpModel::build(
        &DeviceParams::reference(),
        &HarvestModel::uniform_ma(3.0),
        RewardConfig::Basic,
        BuildOptions::default(),
    )?;

    println!("states:       {}", model.n_states());
    println!("superstates:  {}", model.space.superstates().len());
    println!("decidable:    {}", model.space.decidable_superstates().count());
    println!("pairs:        {}", model.mdp.n_pairs());
    println!("nonzeros:     {}", model.kernel().nnz());
    println!("row error:    {:.1e}", model.kernel().max_row_error());
    println!("fingerprint:  {}", model.fingerprint());

    let path = std::env::temp_dir().join("ostb_model.json");
    std::fs::write(&path, serde_json::to_string(&model.to_document())?)?;
    println!("written to {}", path.display());
    Ok(())
}
