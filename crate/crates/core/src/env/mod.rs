//! Episode lifecycle: reset, step, rollout.

mod trajectory;

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::render::{render_frame, stack_observation, Frame, Observation, ViewKind, STACK_DEPTH};
use crate::scoring::{score_states, Score};
use crate::sim::{step_sim, Action, WorkspaceState};
use crate::tasks::{episode_spec, variant_applicable, EpisodeSpec, TaskId, VariantKind};

pub use trajectory::{
    decode_trajectory, encode_trajectory, load_trajectory, replay_trajectory, save_trajectory, save_trajectory_with,
    trajectory_path, SaveOptions, Trajectory, TRAJECTORY_FORMAT_VERSION, TRAJECTORY_MAGIC,
};

/// What a policy sees at each step.
#[derive(Debug, Clone, Copy)]
pub struct PolicyInput<'a> {
    pub task: TaskId,
    pub t: u32,
    pub horizon: u32,
    pub state: &'a WorkspaceState,
    /// Present when the policy asked for pixels.
    pub observation: Option<&'a Observation>,
}

/// A (possibly stateful) mapping from observations to actions.
pub trait Policy: Send {
    fn act(&mut self, input: &PolicyInput<'_>) -> Result<Action>;

    /// Called once before the first `act` of every episode.
    fn begin_episode(&mut self, _task: TaskId, _horizon: u32, _view: ViewKind) -> Result<()> {
        Ok(())
    }

    /// State-only policies return false so rollouts can skip rendering.
    fn wants_pixels(&self) -> bool {
        true
    }
}

/// Replays a fixed list of actions, then no-ops.
#[derive(Debug, Clone)]
pub struct ActionSequence {
    actions: Vec<Action>,
}

impl ActionSequence {
    pub fn new(actions: Vec<Action>) -> Self {
        Self { actions }
    }
}

impl Policy for ActionSequence {
    fn act(&mut self, input: &PolicyInput<'_>) -> Result<Action> {
        Ok(self.actions.get(input.t as usize).copied().unwrap_or(Action::NOOP))
    }

    fn wants_pixels(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone)]
pub struct StepResult {
    pub observation: Observation,
    pub t: u32,
    pub done: bool,
    /// Present exactly when `done`.
    pub score: Option<Score>,
}

#[derive(Debug, Clone)]
struct Episode {
    states: Vec<WorkspaceState>,
    actions: Vec<Action>,
    frames: VecDeque<Frame>,
    render: bool,
}

/// One task variant instance with an in-flight episode.
#[derive(Debug, Clone)]
pub struct Environment {
    spec: EpisodeSpec,
    view: ViewKind,
    episode: Option<Episode>,
}

/// Builds an environment for `(task, variant, seed)`. It must be reset before stepping.
pub fn make_env(task: TaskId, variant: VariantKind, seed: u64, view: ViewKind) -> Result<Environment> {
    if !variant_applicable(task, variant) {
        return Err(Error::UnsupportedVariant { task, variant });
    }
    Ok(Environment::from_spec(episode_spec(task, variant, seed)?, view))
}

impl Environment {
    pub fn from_spec(spec: EpisodeSpec, view: ViewKind) -> Self {
        Self {
            spec,
            view,
            episode: None,
        }
    }

    pub fn spec(&self) -> &EpisodeSpec {
        &self.spec
    }

    pub fn view(&self) -> ViewKind {
        self.view
    }

    pub fn horizon(&self) -> u32 {
        self.spec.horizon
    }

    /// Current state, if reset.
    pub fn state(&self) -> Option<&WorkspaceState> {
        self.episode.as_ref().and_then(|e| e.states.last())
    }

    pub fn t(&self) -> u32 {
        self.episode.as_ref().map_or(0, |e| e.actions.len() as u32)
    }

    pub fn is_done(&self) -> bool {
        self.t() >= self.spec.horizon && self.episode.is_some()
    }

    pub fn reset(&mut self) -> Observation {
        self.begin(true);
        self.observation().expect("rendering enabled")
    }

    fn begin(&mut self, render: bool) {
        let s0 = self.spec.initial_state.clone();
        let mut frames = VecDeque::with_capacity(STACK_DEPTH);
        if render {
            frames.push_back(render_frame(&s0, self.view));
        }
        self.episode = Some(Episode {
            states: vec![s0],
            actions: Vec::with_capacity(self.spec.horizon as usize),
            frames,
            render,
        });
    }

    /// The current 4-frame observation, when frames are being rendered.
    pub fn observation(&self) -> Option<Observation> {
        let e = self.episode.as_ref()?;
        if !e.render {
            return None;
        }
        let frames: Vec<Frame> = e.frames.iter().cloned().collect();
        stack_observation(&frames, self.view).ok()
    }

    pub fn step(&mut self, action: Action) -> Result<StepResult> {
        if !self.episode.as_ref().ok_or(Error::NotReset)?.render {
            return Err(Error::InvalidParameter("environment was reset without rendering".into()));
        }
        let score = self.advance(action)?;
        Ok(StepResult {
            observation: self.observation().expect("rendering enabled"),
            t: self.t(),
            done: score.is_some(),
            score,
        })
    }

    /// Steps with a raw action index, rejecting anything outside 0..=17.
    pub fn step_index(&mut self, index: i64) -> Result<StepResult> {
        let a = u8::try_from(index)
            .ok()
            .and_then(|i| Action::new(i).ok())
            .ok_or(Error::InvalidAction(index))?;
        self.step(a)
    }

    /// Advances one control step; returns the score once the horizon is reached.
    fn advance(&mut self, action: Action) -> Result<Option<Score>> {
        let horizon = self.spec.horizon;
        let view = self.view;
        let e = self.episode.as_mut().ok_or(Error::NotReset)?;
        if e.actions.len() as u32 >= horizon {
            return Err(Error::EpisodeFinished);
        }
        let next = step_sim(e.states.last().expect("non-empty"), action, &self.spec.rho);
        if e.render {
            if e.frames.len() == STACK_DEPTH {
                e.frames.pop_front();
            }
            e.frames.push_back(render_frame(&next, view));
        }
        e.states.push(next);
        e.actions.push(action);
        if e.actions.len() as u32 == horizon {
            Ok(Some(score_states(self.spec.task, &e.states[0], e.states.last().expect("non-empty"))?))
        } else {
            Ok(None)
        }
    }

    /// The completed episode, once `done`.
    pub fn trajectory(&self) -> Result<Trajectory> {
        let e = self.episode.as_ref().ok_or(Error::NotReset)?;
        if (e.actions.len() as u32) < self.spec.horizon {
            return Err(Error::IncompleteEpisode {
                steps: e.actions.len(),
                horizon: self.spec.horizon as usize,
            });
        }
        Trajectory::scored(self.spec.clone(), e.actions.clone(), e.states.clone(), self.view)
    }
}

/// Runs a full episode from reset under `policy` and returns the scored trajectory.
pub fn rollout(env: &mut Environment, policy: &mut dyn Policy) -> Result<Trajectory> {
    let pixels = policy.wants_pixels();
    env.begin(pixels);
    policy.begin_episode(env.spec.task, env.spec.horizon, env.view)?;
    while !env.is_done() {
        let obs = if pixels { env.observation() } else { None };
        let state = env.state().expect("reset").clone();
        let input = PolicyInput {
            task: env.spec.task,
            t: env.t(),
            horizon: env.spec.horizon,
            state: &state,
            observation: obs.as_ref(),
        };
        let action = policy
            .act(&input)
            .map_err(|e| Error::Policy(format!("step {}: {e}", input.t)))?;
        env.advance(action)?;
    }
    env.trajectory()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{Gripper, Longitudinal, Angular};

    #[test]
    fn inapplicable_variant_rejected() {
        assert!(matches!(
            make_env(TaskId::MoveToCorner, VariantKind::Layout, 0, ViewKind::Egocentric),
            Err(Error::UnsupportedVariant { .. })
        ));
    }

    #[test]
    fn horizon_contract() {
        let mut env = make_env(TaskId::MoveToRegion, VariantKind::Demo, 0, ViewKind::Egocentric).unwrap();
        assert_eq!(env.horizon(), 40);
        assert!(matches!(env.step(Action::NOOP), Err(Error::NotReset)));
        let obs = env.reset();
        assert_eq!(obs.frames.len(), 4);
        for t in 1..=40 {
            let r = env.step(Action::NOOP).unwrap();
            assert_eq!(r.t, t);
            assert_eq!(r.done, t == 40);
            assert_eq!(r.score.is_some(), t == 40);
        }
        assert!(matches!(env.step(Action::NOOP), Err(Error::EpisodeFinished)));
        let traj = env.trajectory().unwrap();
        assert_eq!(traj.actions.len(), 40);
        assert_eq!(traj.states.len(), 41);
    }

    #[test]
    fn reset_restores_initial_state() {
        let mut env = make_env(TaskId::MatchRegions, VariantKind::Jitter, 3, ViewKind::Allocentric).unwrap();
        let o1 = env.reset();
        let fwd = Action::from_parts(Gripper::Open, Longitudinal::Forward, Angular::Left);
        for _ in 0..5 {
            env.step(fwd).unwrap();
        }
        let o2 = env.reset();
        assert_eq!(o1, o2);
        assert_eq!(env.state().unwrap(), &env.spec().initial_state);
    }

    #[test]
    fn invalid_action_index() {
        let mut env = make_env(TaskId::MoveToRegion, VariantKind::Demo, 0, ViewKind::Egocentric).unwrap();
        env.reset();
        assert!(matches!(env.step_index(18), Err(Error::InvalidAction(18))));
        assert!(matches!(env.step_index(-1), Err(Error::InvalidAction(-1))));
        assert_eq!(env.step_index(17).unwrap().t, 1);
    }

    #[test]
    fn action_sequence_is_recorded() {
        let seq: Vec<Action> = (0..80).map(|i| Action::new((i * 7 % 18) as u8).unwrap()).collect();
        let mut env = make_env(TaskId::MoveToCorner, VariantKind::Demo, 0, ViewKind::Egocentric).unwrap();
        let traj = rollout(&mut env, &mut ActionSequence::new(seq.clone())).unwrap();
        assert_eq!(traj.actions, seq);
        let again = rollout(&mut env, &mut ActionSequence::new(seq)).unwrap();
        assert_eq!(traj, again);
    }

    #[test]
    fn stepping_through_step_matches_rollout() {
        let seq: Vec<Action> = (0..40).map(|i| Action::new((i * 5 % 18) as u8).unwrap()).collect();
        let mut env = make_env(TaskId::MoveToRegion, VariantKind::All, 9, ViewKind::Egocentric).unwrap();
        env.reset();
        let mut last = None;
        for a in &seq {
            last = Some(env.step(*a).unwrap());
        }
        let stepped = env.trajectory().unwrap();
        let rolled = rollout(&mut env, &mut ActionSequence::new(seq)).unwrap();
        assert_eq!(stepped, rolled);
        assert_eq!(last.unwrap().score, stepped.score);
    }
}
