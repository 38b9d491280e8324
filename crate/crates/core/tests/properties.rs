use ostb::energy_model::{
    final_voltage_distribution, quantize, safety_probability, voltage_after, ConvolutionSettings, DeviceParams,
    HarvestModel, Mode, Quantizer, Task, VoltageGrid,
};
use ostb::fmt_sig;
use ostb::mdp::{MicroMatrices, RewardConfig};
use proptest::prelude::*;

fn mode() -> impl Strategy<Value = Mode> {
    prop_oneof![Just(Mode::Sleep), Just(Mode::Sensing), Just(Mode::Transmitting)]
}

fn coarse() -> ConvolutionSettings {
    ConvolutionSettings {
        current_bins: 64,
        sum_nodes: 1024,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn voltage_is_monotone_in_start_and_currents(
        m in mode(),
        v0 in 0.0..3.3f64,
        dv in 0.0..0.5f64,
        currents in prop::collection::vec(0.0..9e-3f64, 1..40),
        bump in 0.0..1e-3f64,
    ) {
        let p = DeviceParams::reference();
        let base = voltage_after(m, v0, &currents, &p).unwrap();
        prop_assert!(voltage_after(m, v0 + dv, &currents, &p).unwrap() >= base);
        let more: Vec<f64> = currents.iter().map(|i| i + bump).collect();
        prop_assert!(voltage_after(m, v0, &more, &p).unwrap() >= base);
        prop_assert!(base >= 0.0);
    }

    #[test]
    fn quantize_picks_a_nearest_level(v in 0.0..4.0f64, n in 2usize..40) {
        let grid = VoltageGrid::new(1.8, 3.3, n).unwrap();
        let k = quantize(v, &grid);
        let d = (grid.level(k) - v).abs();
        prop_assert!(grid.levels().iter().all(|&l| d <= (l - v).abs() + 1e-12));
    }

    #[test]
    fn final_distribution_is_a_probability_vector(
        m in mode(),
        v0 in 1.5..3.3f64,
        n in 1usize..25,
        hi in 0.0..9.0f64,
        linear in any::<bool>(),
    ) {
        let p = DeviceParams::reference();
        let grid = p.grid().unwrap();
        let q = if linear { Quantizer::Linear } else { Quantizer::Nearest };
        let d = final_voltage_distribution(&p, m, v0, n, &HarvestModel::uniform_ma(hi), &grid, coarse(), q).unwrap();
        prop_assert_eq!(d.len(), grid.len());
        prop_assert!(d.iter().all(|&x| x >= 0.0));
        prop_assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn safety_grows_with_voltage_and_harvest(
        v0 in 1.8..3.3f64,
        dv in 0.0..0.3f64,
        hi in 0.5..9.0f64,
        transmit in any::<bool>(),
    ) {
        let p = DeviceParams::reference();
        let task = if transmit { Task::Transmitting } else { Task::Sensing };
        let h = HarvestModel::uniform_ma(hi);
        let a = safety_probability(task, v0, &p, &h, coarse()).unwrap();
        let b = safety_probability(task, (v0 + dv).min(3.3), &p, &h, coarse()).unwrap();
        let c = safety_probability(task, v0, &p, &HarvestModel::uniform_ma(hi * 1.5), coarse()).unwrap();
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!(b >= a - 1e-9, "{} < {}", b, a);
        prop_assert!(c >= a - 1e-9, "{} < {}", c, a);
    }

    #[test]
    fn rewards_are_bounded_and_monotone(
        beta in 1.0..40.0f64,
        theta in 0.0..1.0f64,
        mut safety in prop::collection::vec(0.0..1.0f64, 2..30),
    ) {
        safety.sort_by(f64::total_cmp);
        for cfg in [RewardConfig::Basic, RewardConfig::Sigmoid { beta, theta }] {
            let r = cfg.table(&safety);
            prop_assert!(r.windows(2).all(|w| w[0] <= w[1] + 1e-15));
            prop_assert!(r.iter().all(|&x| (0.0..=1.0 + 1e-12).contains(&x)));
        }
    }

    #[test]
    fn fmt_sig_keeps_six_significant_digits(x in prop::num::f64::NORMAL) {
        let s = fmt_sig(x);
        let back: f64 = s.parse().unwrap();
        prop_assert!((back - x).abs() <= 5e-6 * x.abs(), "{} -> {}", x, s);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn micro_matrices_are_stochastic(
        c_mf in 1.0..10.0f64,
        levels in 3usize..12,
        hi in 0.0..9.0f64,
    ) {
        let p = DeviceParams {
            capacitance: c_mf * 1e-3,
            grid_levels: levels,
            ..DeviceParams::reference()
        };
        let grid = p.grid().unwrap();
        let micro = MicroMatrices::build(&p, &HarvestModel::uniform_ma(hi), &grid, coarse(), Quantizer::Linear).unwrap();
        for k in [Some(&micro.sleep), Some(&micro.sensing), micro.transmitting.as_ref()].into_iter().flatten() {
            prop_assert!(k.max_row_error() < 1e-9);
            prop_assert!(k.rows().flatten().all(|&x| x >= 0.0));
        }
        prop_assert_eq!(micro.dim(), levels);
    }
}
