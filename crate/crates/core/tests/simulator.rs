use ostb::energy_model::{DeviceParams, HarvestModel};
use ostb::mdp::{Action, BuildOptions, MdpModel, RewardConfig};
use ostb::simulator::{
    compare, simulate, simulate_replications, simulate_with_model, Scheduler, SchedulerKind, SimConfig, SimMode,
    SimReport,
};
use ostb::solver::{solve_model, SolveOptions};

fn ostb_scheduler(harvest_ma: f64) -> Scheduler {
    let model = MdpModel::build(
        &DeviceParams::reference(),
        &HarvestModel::uniform_ma(harvest_ma),
        RewardConfig::Basic,
        BuildOptions::default(),
    )
    .unwrap();
    let sol = solve_model(&model, &SolveOptions::default()).unwrap();
    Scheduler::ostb(&model, sol.policy)
}

fn config(scheduler: Scheduler, harvest: HarvestModel, horizon: f64) -> SimConfig {
    SimConfig {
        horizon_seconds: horizon,
        ..SimConfig::new(DeviceParams::reference(), harvest, scheduler)
    }
}

#[test]
fn alap_acts_only_at_the_last_slot_of_each_window() {
    let p = DeviceParams::reference();
    let alap = Scheduler::Alap;
    for tau in 0..p.subintervals {
        let sense = alap.decide(&p, 3.3, tau, 0);
        assert_eq!(sense, if tau == 15 { Action::Sensing } else { Action::Sleeping }, "tau {tau}");
        let tx = alap.decide(&p, 3.3, tau, 1);
        assert_eq!(tx, if tau == 30 { Action::Transmitting } else { Action::Sleeping }, "tau {tau}");
        assert_eq!(alap.decide(&p, 3.3, tau, 2), Action::Sleeping);
    }
}

#[test]
fn asap_acts_at_the_first_slot_of_each_window() {
    let p = DeviceParams::reference();
    let asap = Scheduler::AsapGreedy;
    assert_eq!(asap.decide(&p, 1.0, 0, 0), Action::Sensing);
    assert_eq!(asap.decide(&p, 1.0, 4, 1), Action::Sleeping);
    assert_eq!(asap.decide(&p, 1.0, 5, 1), Action::Transmitting);
    assert_eq!(asap.decide(&p, 1.0, 31, 1), Action::Sleeping);
}

#[test]
fn abundant_harvest_completes_every_interval() {
    // 9 mA continuous covers even the transmit load at 1.8 V
    let harvest = HarvestModel::constant(9e-3);
    for scheduler in [Scheduler::Alap, Scheduler::AsapGreedy, ostb_scheduler(9.0)] {
        let kind = scheduler.kind();
        let report = simulate(&config(scheduler, harvest.clone(), 200.0)).unwrap();
        let s = report.summary();
        assert_eq!(s.intervals, 200);
        assert_eq!(s.tasks_completed, 400, "{kind}");
        assert_eq!(s.sensing_failures + s.transmit_failures, 0, "{kind}");
    }
}

#[test]
fn alap_latency_is_half_a_second_per_interval() {
    let report = simulate(&config(Scheduler::Alap, HarvestModel::constant(9e-3), 100.0)).unwrap();
    // sensing waits 15 slots and transmission 30 - 20 = 10 more, at 20 ms each
    for r in &report.intervals {
        assert_eq!(r.latency_slots(report.sensing_duration), Some(25));
    }
    assert!((report.latency() - 50.0).abs() < 1e-9);
    let asap = simulate(&config(Scheduler::AsapGreedy, HarvestModel::constant(9e-3), 100.0)).unwrap();
    assert_eq!(asap.latency(), 0.0);
}

#[test]
fn without_harvest_ostb_stops_starting_tasks() {
    let report = simulate(&config(ostb_scheduler(3.0), HarvestModel::constant(0.0), 400.0)).unwrap();
    let tail = &report.intervals[300..];
    assert!(tail.iter().all(|r| r.sensing_start.is_none() && r.tx_start.is_none()));
    assert!(tail.iter().all(|r| r.v_end < DeviceParams::reference().v_out));
    // whatever it started early on, it never ran the capacitor dry mid-task
    // more than a handful of times
    let s = report.summary();
    assert!(s.sensing_failures + s.transmit_failures <= 2, "{s:?}");
}

#[test]
fn replications_do_not_depend_on_thread_count() {
    let cfg = config(Scheduler::Alap, HarvestModel::uniform_ma(3.0), 200.0);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| simulate_replications(&cfg, 8, None).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(one[0], simulate(&cfg).unwrap());
    assert_ne!(one[0].intervals, one[1].intervals, "streams must differ");
}

#[test]
fn records_are_internally_consistent() {
    let p = DeviceParams {
        nominal_voltage: Some(1.8),
        ..DeviceParams::reference()
    };
    for scheduler in [Scheduler::Alap, Scheduler::AsapGreedy] {
        let cfg = SimConfig {
            horizon_seconds: 400.0,
            ..SimConfig::new(p.clone(), HarvestModel::uniform_ma(3.0), scheduler)
        };
        let report = simulate(&cfg).unwrap();
        let s = report.summary();
        assert!(s.sensing_failures + s.transmit_failures > 0, "this setting should be stressed");
        for r in &report.intervals {
            assert!(r.v_end >= 0.0 && r.v_end <= p.v_max);
            assert!(!(r.fail_s && r.sensing_done));
            assert!(!(r.fail_t && r.tx_done));
            assert!(!r.sensing_done || r.sensing_start.is_some());
            assert!(!r.fail_s || r.sensing_start.is_some());
            assert!(r.tx_start.is_none() || r.sensing_done, "transmit requires a completed sensing");
            assert!(!r.tx_done || r.tx_start.is_some());
            if let Some(t) = r.tx_start {
                assert!(t >= r.sensing_start.unwrap() + p.sensing_duration);
                assert!(t + p.transmit_duration.unwrap() <= p.subintervals);
            }
        }
        assert_eq!(
            s.tasks_completed,
            report.intervals.iter().map(|r| r.completed() as usize).sum::<usize>()
        );
        assert_eq!(s.sensing_completed + s.sensing_failures + s.sensing_skipped, s.intervals);
        let rate = report.running_rate();
        assert!((rate.last().unwrap() - s.completion_rate).abs() < 1e-12);
    }
}

#[test]
fn comparing_a_scheduler_with_itself_gives_zero_deltas() {
    let cfg = config(Scheduler::AsapGreedy, HarvestModel::uniform_ma(3.0), 200.0);
    let runs = simulate_replications(&cfg, 4, None).unwrap();
    let report = compare(&runs, &runs).unwrap();
    assert_eq!(report.baseline, report.candidate);
    assert_eq!(report.deltas.completion_gain_pct, 0.0);
    assert_eq!(report.deltas.failure_reduction_pct, 0.0);
    assert_eq!(report.deltas.latency_reduction_pct, 0.0);
    assert_eq!(report.baseline.scheduler, SchedulerKind::AsapGreedy);
}

#[test]
fn mismatched_runs_are_rejected() {
    let cfg = config(Scheduler::Alap, HarvestModel::uniform_ma(3.0), 200.0);
    let runs = simulate_replications(&cfg, 3, None).unwrap();
    assert!(compare(&runs, &runs[..2]).is_err());
    let other_seed: Vec<SimReport> = simulate_replications(&SimConfig { master_seed: 9, ..cfg.clone() }, 3, None).unwrap();
    assert!(compare(&runs, &other_seed).is_err());
    let shorter = simulate_replications(&SimConfig { horizon_seconds: 100.0, ..cfg }, 3, None).unwrap();
    assert!(compare(&runs, &shorter).is_err());
}

#[test]
fn horizon_must_be_whole_intervals() {
    let cfg = config(Scheduler::Alap, HarvestModel::uniform_ma(3.0), 10.5);
    assert!(simulate(&cfg).is_err());
    let cfg = SimConfig {
        initial_voltage: Some(4.0),
        ..config(Scheduler::Alap, HarvestModel::uniform_ma(3.0), 10.0)
    };
    assert!(simulate(&cfg).is_err());
}

#[test]
fn model_mode_is_reproducible_and_needs_the_model() {
    let model = MdpModel::build(
        &DeviceParams::reference(),
        &HarvestModel::uniform_ma(1.5),
        RewardConfig::Basic,
        BuildOptions::default(),
    )
    .unwrap();
    let sol = solve_model(&model, &SolveOptions::default()).unwrap();
    let cfg = SimConfig {
        mode: SimMode::Model,
        ..config(Scheduler::ostb(&model, sol.policy), HarvestModel::uniform_ma(1.5), 400.0)
    };
    let a = simulate_with_model(&cfg, &model, 3).unwrap();
    assert_eq!(a, simulate_with_model(&cfg, &model, 3).unwrap());
    assert!(simulate(&cfg).is_err());
    let rate = a.summary().completion_rate;
    assert!((rate - sol.gain.tasks_completed).abs() < 0.15, "{rate} vs {}", sol.gain.tasks_completed);
}
