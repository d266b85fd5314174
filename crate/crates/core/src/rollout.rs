//! Seeded policy rollouts, their reports, and the step-throughput benchmark.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::{Action, EpisodeState, TaskConfig, TaskId};
use crate::error::Result;
use crate::oracle;
use crate::world::World;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    Random,
    Oracle,
}

impl FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "random" => Ok(Policy::Random),
            "oracle" => Ok(Policy::Oracle),
            _ => Err(format!("unknown policy {s:?} (expected random or oracle)")),
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Policy::Random => "random",
            Policy::Oracle => "oracle",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRow {
    pub episode: u32,
    pub seed: u64,
    pub success: bool,
    pub length: u32,
    pub total_reward: f64,
}

/// Means and population standard deviations over episode rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub episodes: u32,
    pub success_rate: f64,
    pub reward_mean: f64,
    pub reward_sd: f64,
    pub length_mean: f64,
    pub length_sd: f64,
}

fn mean_sd(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = xs.clone().sum::<f64>() / n as f64;
    let var = xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
    (mean, var.sqrt())
}

impl Aggregate {
    pub fn from_rows(rows: &[EpisodeRow]) -> Aggregate {
        let n = rows.len();
        let (reward_mean, reward_sd) = mean_sd(rows.iter().map(|r| r.total_reward));
        let (length_mean, length_sd) = mean_sd(rows.iter().map(|r| r.length as f64));
        Aggregate {
            episodes: n as u32,
            success_rate: if n == 0 {
                0.0
            } else {
                rows.iter().filter(|r| r.success).count() as f64 / n as f64
            },
            reward_mean,
            reward_sd,
            length_mean,
            length_sd,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RolloutReport {
    pub policy: Policy,
    pub task: TaskId,
    pub seed: u64,
    pub horizon: Option<u32>,
    pub rows: Vec<EpisodeRow>,
    pub aggregate: Aggregate,
}

impl RolloutReport {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row)?;
        }
        let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn summary(&self) -> String {
        let a = &self.aggregate;
        format!(
            "{} on {}: {} episodes, success {:.1}%, reward {:.3} ± {:.3}, length {:.1} ± {:.1}",
            self.policy,
            self.task,
            a.episodes,
            100.0 * a.success_rate,
            a.reward_mean,
            a.reward_sd,
            a.length_mean,
            a.length_sd
        )
    }
}

/// Runs `episodes` seeded episodes. Episode seeds are drawn from a ChaCha
/// stream keyed by `seed`; the random policy draws from a second stream of
/// the per-episode generator so its choices never alias the reset draws.
pub fn run_rollouts(
    world: &World,
    policy: Policy,
    config: TaskConfig,
    episodes: u32,
    seed: u64,
) -> Result<RolloutReport> {
    let mut seeds = ChaCha8Rng::seed_from_u64(seed);
    let legal = config.task.legal_actions();
    let mut rows = Vec::with_capacity(episodes as usize);
    let mut horizon = None;
    for episode in 0..episodes {
        let ep_seed = seeds.next_u64();
        let mut actions = ChaCha8Rng::seed_from_u64(ep_seed);
        actions.set_stream(1);
        let (mut state, _) = EpisodeState::reset(world, config, ep_seed)?;
        horizon = Some(state.horizon());
        while !state.is_terminated() {
            let action = match policy {
                Policy::Random => legal[actions.random_range(0..legal.len())],
                Policy::Oracle => oracle::act(world, &state)?,
            };
            state.step_without_observation(world, action)?;
        }
        rows.push(EpisodeRow {
            episode,
            seed: ep_seed,
            success: state.succeeded(),
            length: state.steps(),
            total_reward: state.total_reward(),
        });
    }
    let aggregate = Aggregate::from_rows(&rows);
    Ok(RolloutReport {
        policy,
        task: config.task,
        seed,
        horizon,
        rows,
        aggregate,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub steps: u64,
    pub observe: bool,
    pub seconds: f64,
    pub steps_per_sec: f64,
    /// Peak resident set size in KiB, where the platform reports it.
    pub peak_rss_kib: Option<u64>,
}

/// Peak resident memory of this process from `/proc/self/status`.
pub fn peak_rss_kib() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    status
        .lines()
        .find_map(|l| l.strip_prefix("VmHWM:"))
        .and_then(|v| v.split_whitespace().next())
        .and_then(|v| v.parse().ok())
}

/// Single-session throughput of uniformly random legal actions, resetting
/// whenever an episode ends. With `observe`, every step assembles the full
/// low-resolution observation.
pub fn bench(world: &World, task: TaskId, steps: u64, observe: bool, seed: u64) -> Result<BenchReport> {
    let config = TaskConfig::new(task);
    let legal = task.legal_actions();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut episode_seed = seed;
    let (mut state, _) = EpisodeState::reset(world, config, episode_seed)?;
    let start = Instant::now();
    let mut sink = 0usize;
    for _ in 0..steps {
        if state.is_terminated() {
            episode_seed = episode_seed.wrapping_add(1);
            state = EpisodeState::reset(world, config, episode_seed)?.0;
        }
        let action: Action = legal[rng.random_range(0..legal.len())];
        if observe {
            let r = state.step(world, action)?;
            sink = sink.wrapping_add(r.observation.image.as_ref().map_or(0, |i| i.hwc_bytes()[0] as usize));
        } else {
            state.step_without_observation(world, action)?;
        }
    }
    let seconds = start.elapsed().as_secs_f64();
    std::hint::black_box(sink);
    Ok(BenchReport {
        steps,
        observe,
        seconds,
        steps_per_sec: steps as f64 / seconds.max(1e-12),
        peak_rss_kib: peak_rss_kib(),
    })
}
