mod common;

use sidewalk_core::rollout::{bench, run_rollouts, Aggregate, Policy};
use sidewalk_core::{TaskConfig, TaskId};

#[test]
fn aggregates_match_recomputation() {
    let world = common::world(1, 1, 1, 14.0, 2);
    let report = run_rollouts(&world, Policy::Random, TaskConfig::new(TaskId::AllObs), 200, 4).unwrap();
    let rows = &report.rows;
    assert_eq!(rows.len(), 200);
    let n = rows.len() as f64;
    let rewards: Vec<f64> = rows.iter().map(|r| r.total_reward).collect();
    let mean = rewards.iter().sum::<f64>() / n;
    let sd = (rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n).sqrt();
    let lengths: Vec<f64> = rows.iter().map(|r| r.length as f64).collect();
    let lmean = lengths.iter().sum::<f64>() / n;
    let a = &report.aggregate;
    assert!((a.reward_mean - mean).abs() < 1e-9);
    assert!((a.reward_sd - sd).abs() < 1e-9);
    assert!((a.length_mean - lmean).abs() < 1e-9);
    assert_eq!(a.success_rate, rows.iter().filter(|r| r.success).count() as f64 / n);
    assert!(rows.iter().all(|r| r.length <= report.horizon.unwrap()));
    assert_eq!(Aggregate::from_rows(&[]).episodes, 0);
}

#[test]
fn rollouts_are_deterministic_and_serialize() {
    let world = common::world(2, 1, 0, 20.0, 2);
    let config = TaskConfig {
        gps_sigma: 3.0,
        ..TaskConfig::new(TaskId::NoImg)
    };
    let a = run_rollouts(&world, Policy::Random, config, 50, 9).unwrap();
    let b = run_rollouts(&world, Policy::Random, config, 50, 9).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.to_csv().unwrap(), b.to_csv().unwrap());
    assert_ne!(a, run_rollouts(&world, Policy::Random, config, 50, 10).unwrap());
    let csv = a.to_csv().unwrap();
    assert_eq!(csv.lines().next().unwrap(), "episode,seed,success,length,total_reward");
    assert_eq!(csv.lines().count(), 51);
    let back: sidewalk_core::rollout::RolloutReport = serde_json::from_str(&a.to_json().unwrap()).unwrap();
    assert_eq!(back, a);
}

#[test]
fn oracle_always_succeeds() {
    let world = common::world(3, 1, 1, 14.0, 2);
    for task in [TaskId::AllObs, TaskId::Sparse, TaskId::Intersection] {
        let report = run_rollouts(&world, Policy::Oracle, TaskConfig::new(task), 100, 1).unwrap();
        assert_eq!(report.aggregate.success_rate, 1.0, "{task}");
    }
}

#[test]
fn skipping_observations_is_faster_and_stable() {
    let world = common::world(4, 1, 1, 14.0, 2);
    let mut last = None;
    for _ in 0..3 {
        let with = bench(&world, TaskId::AllObs, 20_000, true, 0).unwrap();
        let without = bench(&world, TaskId::AllObs, 20_000, false, 0).unwrap();
        let again = bench(&world, TaskId::AllObs, 20_000, false, 0).unwrap();
        let ratio = without.steps_per_sec / again.steps_per_sec;
        last = Some((with.steps_per_sec, without.steps_per_sec, ratio));
        if without.steps_per_sec > with.steps_per_sec && (0.75..=1.25).contains(&ratio) {
            assert!(with.peak_rss_kib.is_some());
            return;
        }
    }
    panic!("timings never settled: {last:?}");
}
