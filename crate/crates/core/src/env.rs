//! Episode state machine: task catalogue, reset/step, success and horizon.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::annotations::{visible_labels, Goal, VisibleLabels, FOV_DEGREES};
use crate::error::{Error, Result};
use crate::graph::{turn, NodeId, Pose, TurnAction, Wedge, WEDGE_COUNT};
use crate::observation::{
    crop_image, encode_house_numbers, encode_street_names, gps_observation, GpsNoise, Observation, TextObs,
};
use crate::panorama::Resolution;
use crate::rewards::{read_cost, sparse_reward, RewardKind, RewardTracker};
use crate::world::{GoalContext, World};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Action {
    LeftBig,
    LeftSmall,
    Forward,
    RightSmall,
    RightBig,
    Read,
    Done,
}

impl Action {
    pub const ALL: [Action; 7] = [
        Action::LeftBig,
        Action::LeftSmall,
        Action::Forward,
        Action::RightSmall,
        Action::RightBig,
        Action::Read,
        Action::Done,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Action::LeftBig => "LEFT_BIG",
            Action::LeftSmall => "LEFT_SMALL",
            Action::Forward => "FORWARD",
            Action::RightSmall => "RIGHT_SMALL",
            Action::RightBig => "RIGHT_BIG",
            Action::Read => "READ",
            Action::Done => "DONE",
        }
    }

    /// Position in `Action::ALL`; the wire protocol accepts it in place of
    /// the name.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Action> {
        Action::ALL.get(i).copied()
    }

    pub fn as_turn(self) -> Option<TurnAction> {
        match self {
            Action::LeftBig => Some(TurnAction::LeftBig),
            Action::LeftSmall => Some(TurnAction::LeftSmall),
            Action::RightSmall => Some(TurnAction::RightSmall),
            Action::RightBig => Some(TurnAction::RightBig),
            _ => None,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Action {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Action::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown action {s:?}"))
    }
}

const MOVES: [Action; 5] = [
    Action::LeftBig,
    Action::LeftSmall,
    Action::Forward,
    Action::RightSmall,
    Action::RightBig,
];
const MOVES_READ: [Action; 6] = [
    Action::LeftBig,
    Action::LeftSmall,
    Action::Forward,
    Action::RightSmall,
    Action::RightBig,
    Action::Read,
];
const MOVES_DONE: [Action; 6] = [
    Action::LeftBig,
    Action::LeftSmall,
    Action::Forward,
    Action::RightSmall,
    Action::RightBig,
    Action::Done,
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Modalities {
    pub image: bool,
    pub gps: bool,
    pub text: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TaskId {
    AllObs,
    NoImg,
    #[serde(rename = "NoGPS")]
    NoGps,
    ImgOnly,
    Intersection,
    CostlyTxt,
    Sparse,
    Explorer,
}

impl TaskId {
    pub const ALL: [TaskId; 8] = [
        TaskId::AllObs,
        TaskId::NoImg,
        TaskId::NoGps,
        TaskId::ImgOnly,
        TaskId::Intersection,
        TaskId::CostlyTxt,
        TaskId::Sparse,
        TaskId::Explorer,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TaskId::AllObs => "AllObs",
            TaskId::NoImg => "NoImg",
            TaskId::NoGps => "NoGPS",
            TaskId::ImgOnly => "ImgOnly",
            TaskId::Intersection => "Intersection",
            TaskId::CostlyTxt => "CostlyTxt",
            TaskId::Sparse => "Sparse",
            TaskId::Explorer => "Explorer",
        }
    }

    pub fn modalities(self) -> Modalities {
        let (image, gps, text) = match self {
            TaskId::NoImg => (false, true, true),
            TaskId::NoGps => (true, false, true),
            TaskId::ImgOnly => (true, false, false),
            _ => (true, true, true),
        };
        Modalities { image, gps, text }
    }

    pub fn reward_kind(self) -> RewardKind {
        match self {
            TaskId::CostlyTxt => RewardKind::DenseCostlyRead,
            TaskId::Sparse => RewardKind::Sparse,
            TaskId::Explorer => RewardKind::MultiGoal,
            _ => RewardKind::Dense,
        }
    }

    pub fn legal_actions(self) -> &'static [Action] {
        match self {
            TaskId::CostlyTxt => &MOVES_READ,
            TaskId::Sparse => &MOVES_DONE,
            _ => &MOVES,
        }
    }

    pub fn is_legal(self, action: Action) -> bool {
        self.legal_actions().contains(&action)
    }
}

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TaskId {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        TaskId::ALL
            .into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown task {s:?}"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TaskConfig {
    pub task: TaskId,
    /// Overrides the world's derived horizon.
    pub horizon: Option<u32>,
    pub gps_sigma: f64,
    pub resolution: Resolution,
}

impl TaskConfig {
    pub fn new(task: TaskId) -> TaskConfig {
        TaskConfig {
            task,
            horizon: None,
            gps_sigma: 0.0,
            resolution: Resolution::Low,
        }
    }

    pub fn modalities(&self) -> Modalities {
        self.task.modalities()
    }

    pub fn reward_kind(&self) -> RewardKind {
        self.task.reward_kind()
    }
}

/// Step cap for `task` on `world`: the longest oracle trajectory over the
/// task's start distribution, plus one for the terminal DONE in Sparse.
pub fn horizon(world: &World, task: TaskId) -> Result<u32> {
    let h = world.horizons();
    let base = match task {
        TaskId::Intersection => h.intersection.ok_or_else(|| no_intersection(task))?,
        _ => h.segment,
    };
    Ok(base + u32::from(task == TaskId::Sparse))
}

fn no_intersection(task: TaskId) -> Error {
    Error::TaskUnavailable(
        task.name().into(),
        "no addressed door has a neighbouring street segment across an intersection".into(),
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    pub agent_xy_m: [f64; 2],
    pub goal_xy_m: [f64; 2],
    pub hop_distance: u32,
    pub visible_text: Vec<String>,
    pub success: bool,
    /// Noisy agent-minus-goal offset in meters, when GPS is observed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gps_rel_m: Option<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepResult {
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

#[derive(Clone, Debug)]
pub struct EpisodeState {
    config: TaskConfig,
    pose: Pose,
    goal: GoalContext,
    steps: u32,
    horizon: u32,
    tracker: RewardTracker,
    rng: ChaCha8Rng,
    gps_noise: GpsNoise,
    terminated: bool,
    success: bool,
    total_reward: f64,
}

/// Draws a goal uniformly over eligible addresses and a start pose
/// uniformly over the task's start nodes and all wedges.
pub fn sample_task<R: Rng + ?Sized>(world: &World, task: TaskId, rng: &mut R) -> Result<(Goal, Pose)> {
    let (goal, starts): (&Goal, &[NodeId]) = match task {
        TaskId::Intersection => {
            let pool = world.intersection_goals();
            if pool.is_empty() {
                return Err(no_intersection(task));
            }
            let (g, s) = &pool[rng.random_range(0..pool.len())];
            (g, s)
        }
        _ => {
            let pool = world.segment_goals();
            let g = &pool[rng.random_range(0..pool.len())];
            (g, &world.graph().segment_of(g.node).nodes)
        }
    };
    loop {
        let node = starts[rng.random_range(0..starts.len())];
        let wedge = Wedge::wrapping(rng.random_range(0..WEDGE_COUNT as i64));
        let pose = Pose::new(node, wedge);
        if !world.is_success_pose(goal, pose) {
            return Ok((goal.clone(), pose));
        }
    }
}

impl EpisodeState {
    pub fn reset(world: &World, config: TaskConfig, seed: u64) -> Result<(EpisodeState, StepResult)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (goal, start) = sample_task(world, config.task, &mut rng)?;
        Self::start(world, config, goal, start, rng)
    }

    /// Starts an episode at an explicit goal and pose.
    pub fn start(
        world: &World,
        config: TaskConfig,
        goal: Goal,
        pose: Pose,
        mut rng: ChaCha8Rng,
    ) -> Result<(EpisodeState, StepResult)> {
        if !(config.gps_sigma >= 0.0 && config.gps_sigma.is_finite()) {
            return Err(Error::InvalidWorld(format!("gps sigma {} is not a finite non-negative number", config.gps_sigma)));
        }
        if !world.has_resolution(config.resolution) {
            return Err(Error::TaskUnavailable(
                config.task.name().into(),
                "world has no full-resolution panoramas".into(),
            ));
        }
        let horizon = match config.horizon {
            Some(h) => h,
            None => horizon(world, config.task)?,
        };
        let ctx = world.goal_context(&goal);
        let gps_noise = GpsNoise::sample(config.gps_sigma, &mut rng);
        let tracker = RewardTracker::start(world, &ctx, pose);
        let mut state = EpisodeState {
            config,
            pose,
            goal: ctx,
            steps: 0,
            horizon,
            tracker,
            rng,
            gps_noise,
            terminated: false,
            success: false,
            total_reward: 0.0,
        };
        let labels = visible_labels(world.annotations(), pose, FOV_DEGREES);
        if config.reward_kind() == RewardKind::MultiGoal {
            let numbers: Vec<&str> = labels.house_numbers.iter().map(|h| h.text.as_str()).collect();
            state.tracker.mark_seen(&numbers);
        }
        let text = config.task != TaskId::CostlyTxt;
        let observation = state.observe(world, &labels, text)?;
        let info = state.info(world, &labels, observation.1);
        Ok((
            state,
            StepResult {
                observation: observation.0,
                reward: 0.0,
                done: false,
                info,
            },
        ))
    }

    pub fn config(&self) -> &TaskConfig {
        &self.config
    }

    pub fn pose(&self) -> Pose {
        self.pose
    }

    pub fn goal(&self) -> &GoalContext {
        &self.goal
    }

    pub fn steps(&self) -> u32 {
        self.steps
    }

    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    pub fn is_terminated(&self) -> bool {
        self.terminated
    }

    pub fn succeeded(&self) -> bool {
        self.success
    }

    pub fn total_reward(&self) -> f64 {
        self.total_reward
    }

    pub fn tracker(&self) -> &RewardTracker {
        &self.tracker
    }

    pub fn step(&mut self, world: &World, action: Action) -> Result<StepResult> {
        let (reward, done, labels_pose) = self.advance(world, action)?;
        let labels = visible_labels(world.annotations(), labels_pose, FOV_DEGREES);
        let text = self.config.task != TaskId::CostlyTxt || action == Action::Read;
        let (observation, rel) = self.observe(world, &labels, text)?;
        let info = self.info(world, &labels, rel);
        Ok(StepResult {
            observation,
            reward,
            done,
            info,
        })
    }

    /// Applies `action` without assembling an observation; returns
    /// `(reward, done)`.
    pub fn step_without_observation(&mut self, world: &World, action: Action) -> Result<(f64, bool)> {
        let (reward, done, _) = self.advance(world, action)?;
        Ok((reward, done))
    }

    fn advance(&mut self, world: &World, action: Action) -> Result<(f64, bool, Pose)> {
        if self.terminated {
            return Err(Error::EpisodeTerminated);
        }
        let task = self.config.task;
        if !task.is_legal(action) {
            return Err(Error::IllegalAction {
                action: action.name().into(),
                task: task.name().into(),
                legal: task
                    .legal_actions()
                    .iter()
                    .map(|a| a.name())
                    .collect::<Vec<_>>()
                    .join(", "),
            });
        }
        let prev = self.pose;
        let next = match action {
            Action::Forward => match world.graph().forward_target(prev) {
                Some(n) => Pose::new(n, prev.wedge),
                None => prev,
            },
            a => match a.as_turn() {
                Some(t) => turn(prev, t),
                None => prev,
            },
        };
        self.pose = next;
        let at_goal = world.is_success_pose(&self.goal.goal, next);
        let reward = match self.config.reward_kind() {
            RewardKind::Dense => self.tracker.dense_reward(world, &self.goal, prev, next),
            RewardKind::DenseCostlyRead => {
                let r = self.tracker.dense_reward(world, &self.goal, prev, next);
                if action == Action::Read {
                    r + read_cost()
                } else {
                    r
                }
            }
            RewardKind::Sparse => {
                if action == Action::Done {
                    sparse_reward(at_goal)
                } else {
                    0.0
                }
            }
            RewardKind::MultiGoal => {
                let labels = visible_labels(world.annotations(), next, FOV_DEGREES);
                let numbers: Vec<&str> = labels.house_numbers.iter().map(|h| h.text.as_str()).collect();
                self.tracker.multi_goal_reward(&numbers)
            }
        };
        self.steps += 1;
        self.total_reward += reward;
        self.success = match task {
            TaskId::Sparse => action == Action::Done && at_goal,
            TaskId::Explorer => false,
            _ => at_goal,
        };
        let ended = match task {
            TaskId::Sparse => action == Action::Done,
            TaskId::Explorer => false,
            _ => self.success,
        };
        self.terminated = ended || self.steps >= self.horizon;
        Ok((reward, self.terminated, next))
    }

    fn observe(
        &mut self,
        world: &World,
        labels: &VisibleLabels<'_>,
        deliver_text: bool,
    ) -> Result<(Observation, Option<[f64; 2]>)> {
        let m = self.config.modalities();
        let mut obs = Observation::default();
        let mut rel = None;
        if m.image {
            let res = self.config.resolution;
            let pano = world.panoramas().get(self.pose.node, res)?;
            obs.image = Some(crop_image(pano, self.pose.wedge, FOV_DEGREES, res.observation_size()));
        }
        if m.gps {
            let reading = gps_observation(
                &world.graph().bbox(),
                world.node_xy(self.pose.node),
                self.goal.goal_xy,
                &self.gps_noise,
                &mut self.rng,
            )?;
            obs.gps = Some(reading.obs);
            rel = Some(reading.rel_m);
        }
        if m.text && deliver_text {
            let numbers: Vec<&str> = labels.house_numbers.iter().map(|h| h.text.as_str()).collect();
            let signs: Vec<&str> = labels.street_signs.iter().map(|s| s.name.as_str()).collect();
            obs.text = Some(TextObs {
                house_numbers: encode_house_numbers(&numbers)?,
                street_names: encode_street_names(&signs, world.vocabulary())?,
            });
        }
        Ok((obs, rel))
    }

    fn info(&self, world: &World, labels: &VisibleLabels<'_>, gps_rel_m: Option<[f64; 2]>) -> StepInfo {
        StepInfo {
            agent_xy_m: world.node_xy(self.pose.node),
            goal_xy_m: self.goal.goal_xy,
            hop_distance: self.goal.hop_distance(self.pose.node),
            visible_text: labels.texts(),
            success: self.success,
            gps_rel_m,
        }
    }
}

/// Whether the episode's current pose frames the goal door at the goal node.
pub fn is_success(world: &World, state: &EpisodeState) -> bool {
    world.is_success_pose(&state.goal.goal, state.pose)
}
