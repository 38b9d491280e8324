use ostb::energy_model::{
    final_voltage_distribution, voltage_after, ConvolutionSettings, DeviceParams, HarvestModel, Mode, Quantizer,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = DeviceParams::reference();
    let grid = p.grid()?;
    let harvest = HarvestModel::uniform_ma(3.0);

    // deterministic trajectory: five sensing steps at a constant 1 mA
    let v = voltage_after(Mode::Sensing, 2.8, &[1e-3; 5], &p)?;
    println!("2.8 V after sensing at 1 mA: {v:.6} V");

    for q in [Quantizer::Nearest, Quantizer::Linear] {
        let d = final_voltage_distribution(&p, Mode::Sensing, 2.8, 5, &harvest, &grid, ConvolutionSettings::default(), q)?;
        let support: Vec<String> = d
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 1e-4)
            .map(|(k, w)| format!("{:.3} V: {w:.4}", grid.level(k)))
            .collect();
        println!("{q:?}: {}", support.join(", "));
    }
    Ok(())
}
