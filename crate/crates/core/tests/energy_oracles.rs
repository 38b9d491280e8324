//! Monte-Carlo and closed-form oracles for the capacitor model. The
//! reference trajectories are stepped here from the RC formula directly,
//! without going through the crate's voltage routines.

use ostb::energy_model::{
    final_voltage_distribution, safety_probability, voltage_after, ConvolutionSettings, DeviceParams,
    HarvestModel, Mode, Quantizer, Task,
};
use ostb::mdp::{BuildOptions, MdpModel, RewardConfig};
mod common;

use common::{final_voltage, rc_step};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn nearest(p: &DeviceParams, v: f64) -> usize {
    let h = (p.v_max - p.v_min) / (p.grid_levels - 1) as f64;
    let x = ((v.clamp(p.v_min, p.v_max) - p.v_min) / h + 0.5).floor() as usize;
    x.min(p.grid_levels - 1)
}

#[test]
fn sensing_distribution_matches_monte_carlo() {
    let p = DeviceParams::reference();
    let h = HarvestModel::uniform_ma(3.0);
    let grid = p.grid().unwrap();
    let exact = final_voltage_distribution(
        &p,
        Mode::Sensing,
        2.8,
        5,
        &h,
        &grid,
        ConvolutionSettings::default(),
        Quantizer::Nearest,
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 1_000_000;
    let mut hist = vec![0.0; p.grid_levels];
    for _ in 0..n {
        hist[nearest(&p, final_voltage(&p, p.sensing_current, 2.8, 5, 3e-3, &mut rng))] += 1.0 / n as f64;
    }
    let tv: f64 = 0.5 * exact.iter().zip(&hist).map(|(a, b)| (a - b).abs()).sum::<f64>();
    assert!(tv < 5e-3, "total variation {tv}");
}

#[test]
fn safety_probability_matches_monte_carlo_low_capacitance() {
    let p = DeviceParams {
        capacitance: 2.7e-3,
        v_out: 2.4,
        ..DeviceParams::reference()
    };
    let h = HarvestModel::uniform_ma(3.0);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let n = 1_000_000;
    for (task, load, steps, v0) in [
        (Task::Sensing, p.sensing_current, p.sensing_duration, 2.41),
        (Task::Transmitting, p.transmit_current, p.transmit_duration.unwrap(), 2.67),
    ] {
        let exact = safety_probability(task, v0, &p, &h, ConvolutionSettings::default()).unwrap();
        let ok = (0..n)
            .filter(|_| final_voltage(&p, load, v0, steps, 3e-3, &mut rng) >= p.v_out)
            .count();
        let mc = ok as f64 / n as f64;
        assert!(exact > 0.1 && exact < 0.95, "{task:?} at {v0} V is not in the uncertain region: {exact}");
        assert!((exact - mc).abs() < 1e-3, "{task:?}: convolution {exact} vs Monte-Carlo {mc}");
    }
}

#[test]
fn sensing_micro_matrix_matches_empirical_transitions() {
    let p = DeviceParams::reference();
    let model = MdpModel::build(&p, &HarvestModel::uniform_ma(3.0), RewardConfig::Basic, BuildOptions::default()).unwrap();
    let levels = model.grid.levels().to_vec();
    let h = (p.v_max - p.v_min) / (p.grid_levels - 1) as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let n = 1_000_000;
    for (i, &v0) in levels.iter().enumerate() {
        // the kernel splits each landing voltage linearly between the two
        // bracketing levels; do the same per sample
        let mut emp = vec![0.0; levels.len()];
        for _ in 0..n {
            let v = final_voltage(&p, p.sensing_current, v0, 5, 3e-3, &mut rng).clamp(p.v_min, p.v_max);
            let pos = (v - p.v_min) / h;
            let k = (pos.floor() as usize).min(levels.len() - 1);
            let frac = pos - k as f64;
            if k + 1 < levels.len() {
                emp[k] += (1.0 - frac) / n as f64;
                emp[k + 1] += frac / n as f64;
            } else {
                emp[k] += 1.0 / n as f64;
            }
        }
        let row = model.micro.sensing.row(i);
        for (j, (a, b)) in row.iter().zip(&emp).enumerate() {
            assert!((a - b).abs() < 5e-3, "A_s[{i}][{j}] = {a}, empirical {b}");
        }
    }
}

#[test]
fn voltage_after_matches_reference_stepping() {
    let p = DeviceParams::reference();
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..200 {
        let n = rng.gen_range(1..30);
        let currents: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 9e-3).collect();
        let v0 = rng.gen_range(0.0..3.3);
        for (mode, load) in [
            (Mode::Sleep, p.sleep_current),
            (Mode::Sensing, p.sensing_current),
            (Mode::Transmitting, p.transmit_current),
        ] {
            let reference = currents.iter().fold(v0, |v, &i| rc_step(&p, load, v, i));
            let got = voltage_after(mode, v0, &currents, &p).unwrap();
            assert!((got - reference).abs() <= 1e-12 * reference.abs().max(1.0), "{got} vs {reference}");
        }
    }
}

#[test]
fn depleted_capacitor_cannot_transmit_safely() {
    // the largest reachable voltage from 0 after n_t steps at the top
    // current stays below v_out, so the safety probability is exactly 0
    let p = DeviceParams::reference();
    let bound = (0..p.transmit_duration.unwrap()).fold(0.0, |v, _| rc_step(&p, p.transmit_current, v, 3e-3));
    assert!(bound < p.v_out);
    let s = safety_probability(Task::Transmitting, 0.0, &p, &HarvestModel::uniform_ma(3.0), ConvolutionSettings::default()).unwrap();
    assert_eq!(s, 0.0);
}

#[test]
fn refining_current_bins_barely_moves_safety() {
    let p = DeviceParams::reference();
    let h = HarvestModel::uniform_ma(3.0);
    let coarse = ConvolutionSettings {
        current_bins: 128,
        ..ConvolutionSettings::default()
    };
    let fine = ConvolutionSettings {
        current_bins: 512,
        ..ConvolutionSettings::default()
    };
    for k in 0..30 {
        let v0 = 1.8 + 1.5 * k as f64 / 29.0;
        for task in [Task::Sensing, Task::Transmitting] {
            let a = safety_probability(task, v0, &p, &h, coarse).unwrap();
            let b = safety_probability(task, v0, &p, &h, fine).unwrap();
            assert!((a - b).abs() < 1e-3, "{task:?} at {v0}: {a} vs {b}");
        }
    }
}
