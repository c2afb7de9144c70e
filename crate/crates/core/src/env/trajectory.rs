//! Recorded episodes and their binary container.
//!
//! Layout (integers little-endian, floats as IEEE-754 bit patterns):
//!
//! ```text
//! magic      8 bytes  "MAGTRAJ\0"
//! version    u32
//! task       u8       TaskId index
//! variant    u8       VariantKind index
//! seed       u64
//! rho        5 × f64  block_friction, robot_friction, motor_rot, motor_long, motor_grip
//! horizon    u32
//! view       u8       0 = egocentric, 1 = allocentric
//! flags      u8       bit 0: state section present; bit 1: score present
//! score      f64      0.0 when absent
//! actions    horizon × u8
//! states     optional: u32 count, then count encoded states
//! checksum   u64      FNV-1a 64 over every preceding byte
//! ```
//!
//! An encoded state is `t: u32`, the robot (pose, velocity, angular velocity,
//! gripper byte, grip flag byte, and if gripping the block id and offset pose),
//! then `u32` block count and blocks (id, shape, colour, pose, velocity,
//! angular velocity), then `u32` region count and regions (id, colour, centre,
//! width, height).

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::hash::fnv1a64;
use crate::render::ViewKind;
use crate::scoring::Score;
#[cfg(test)]
use crate::scoring::score_states;
use crate::sim::{
    step_sim, Action, Block, BlockShape, DynamicsVector, EntityColour, GoalRegion, Grip, Pose, RobotConfig,
    WorkspaceState,
};
use crate::tasks::{episode_spec, EpisodeSpec, TaskId, VariantKind};

pub const TRAJECTORY_MAGIC: [u8; 8] = *b"MAGTRAJ\0";
pub const TRAJECTORY_FORMAT_VERSION: u32 = 1;

const FLAG_STATES: u8 = 1;
const FLAG_SCORE: u8 = 2;

/// A complete episode: `horizon` actions and `horizon + 1` states.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub spec: EpisodeSpec,
    pub actions: Vec<Action>,
    pub states: Vec<WorkspaceState>,
    pub score: Option<Score>,
    pub view: ViewKind,
    pub format_version: u32,
}

impl Trajectory {
    /// Builds a trajectory and attaches its score.
    pub fn scored(spec: EpisodeSpec, actions: Vec<Action>, states: Vec<WorkspaceState>, view: ViewKind) -> Result<Self> {
        let mut t = Trajectory {
            spec,
            actions,
            states,
            score: None,
            view,
            format_version: TRAJECTORY_FORMAT_VERSION,
        };
        t.score = Some(crate::scoring::score_trajectory(t.spec.task, &t)?);
        Ok(t)
    }

    pub fn initial_state(&self) -> &WorkspaceState {
        &self.states[0]
    }

    pub fn final_state(&self) -> &WorkspaceState {
        self.states.last().expect("trajectory has states")
    }
}

/// Re-simulates `actions` from `spec.initial_state`. The result uses the egocentric view tag.
pub fn replay_trajectory(spec: &EpisodeSpec, actions: &[Action]) -> Result<Trajectory> {
    if actions.len() != spec.horizon as usize {
        return Err(Error::LengthMismatch {
            expected: spec.horizon as usize,
            actual: actions.len(),
        });
    }
    let mut states = Vec::with_capacity(actions.len() + 1);
    states.push(spec.initial_state.clone());
    for a in actions {
        let next = step_sim(states.last().expect("non-empty"), *a, &spec.rho);
        states.push(next);
    }
    Trajectory::scored(spec.clone(), actions.to_vec(), states, ViewKind::Egocentric)
}

/// `<root>/<task>/<variant>/<seed>.traj`.
pub fn trajectory_path(root: &Path, task: TaskId, variant: VariantKind, seed: u64) -> PathBuf {
    root.join(task.name()).join(variant.name()).join(format!("{seed}.traj"))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SaveOptions {
    /// Omit the state section; loading re-simulates from `(task, variant, seed)`.
    pub elide_states: bool,
}

pub fn save_trajectory(traj: &Trajectory, path: &Path) -> Result<()> {
    save_trajectory_with(traj, path, SaveOptions::default())
}

pub fn save_trajectory_with(traj: &Trajectory, path: &Path, options: SaveOptions) -> Result<()> {
    let bytes = encode_trajectory(traj, options)?;
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|source| Error::PathIo {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, bytes).map_err(|source| Error::PathIo {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_trajectory(path: &Path) -> Result<Trajectory> {
    let bytes = fs::read(path).map_err(|source| Error::PathIo {
        path: path.to_path_buf(),
        source,
    })?;
    decode_trajectory(&bytes)
}

pub fn encode_trajectory(traj: &Trajectory, options: SaveOptions) -> Result<Vec<u8>> {
    let h = traj.spec.horizon as usize;
    if traj.actions.len() != h || traj.states.len() != h + 1 {
        return Err(Error::IncompleteEpisode {
            steps: traj.actions.len(),
            horizon: h,
        });
    }
    if options.elide_states {
        let derived = episode_spec(traj.spec.task, traj.spec.variant, traj.spec.seed)?;
        if derived != traj.spec {
            return Err(Error::InvalidParameter(
                "states can only be elided when the episode derives from (task, variant, seed)".into(),
            ));
        }
    }
    let mut w = Writer::default();
    w.bytes(&TRAJECTORY_MAGIC);
    w.u32(TRAJECTORY_FORMAT_VERSION);
    w.u8(traj.spec.task.index());
    w.u8(traj.spec.variant.index());
    w.u64(traj.spec.seed);
    for v in traj.spec.rho.to_array() {
        w.f64(v);
    }
    w.u32(traj.spec.horizon);
    w.u8(traj.view.index());
    let mut flags = 0;
    if !options.elide_states {
        flags |= FLAG_STATES;
    }
    if traj.score.is_some() {
        flags |= FLAG_SCORE;
    }
    w.u8(flags);
    w.f64(traj.score.map_or(0.0, Score::value));
    for a in &traj.actions {
        w.u8(a.index());
    }
    if !options.elide_states {
        w.u32(traj.states.len() as u32);
        for s in &traj.states {
            write_state(&mut w, s);
        }
    }
    let sum = fnv1a64(&w.buf);
    w.u64(sum);
    Ok(w.buf)
}

pub fn decode_trajectory(bytes: &[u8]) -> Result<Trajectory> {
    if bytes.len() < 12 {
        return Err(Error::CorruptFile("file too short".into()));
    }
    if bytes[..8] != TRAJECTORY_MAGIC {
        return Err(Error::UnsupportedFormat("bad magic".into()));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if version != TRAJECTORY_FORMAT_VERSION {
        return Err(Error::UnsupportedFormat(format!("version {version}")));
    }
    if bytes.len() < 20 {
        return Err(Error::CorruptFile("file too short".into()));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 8);
    let stored = u64::from_le_bytes(tail.try_into().expect("8 bytes"));
    if fnv1a64(body) != stored {
        return Err(Error::CorruptFile("checksum mismatch".into()));
    }

    let mut r = Reader { buf: body, pos: 12 };
    let task = TaskId::from_index(r.u8()?).ok_or_else(|| corrupt("task index"))?;
    let variant = VariantKind::from_index(r.u8()?).ok_or_else(|| corrupt("variant index"))?;
    let seed = r.u64()?;
    let mut rho = [0.0; 5];
    for v in &mut rho {
        *v = r.f64()?;
    }
    let rho = DynamicsVector::from_array(rho);
    let horizon = r.u32()?;
    let view = ViewKind::from_index(r.u8()?).ok_or_else(|| corrupt("view"))?;
    let flags = r.u8()?;
    if flags & !(FLAG_STATES | FLAG_SCORE) != 0 {
        return Err(corrupt("unknown flag bits"));
    }
    let score_raw = r.f64()?;
    let score = (flags & FLAG_SCORE != 0).then(|| Score::new(score_raw));
    let actions = r
        .take(horizon as usize)?
        .iter()
        .map(|&b| Action::new(b).map_err(|_| corrupt("action byte")))
        .collect::<Result<Vec<_>>>()?;

    let (spec, states) = if flags & FLAG_STATES != 0 {
        let n = r.u32()? as usize;
        if n != horizon as usize + 1 {
            return Err(corrupt("state count"));
        }
        let states = (0..n).map(|_| read_state(&mut r)).collect::<Result<Vec<_>>>()?;
        let spec = EpisodeSpec {
            task,
            variant,
            seed,
            initial_state: states[0].clone(),
            rho,
            horizon,
        };
        (spec, states)
    } else {
        let spec = episode_spec(task, variant, seed)?;
        if spec.rho != rho || spec.horizon != horizon {
            return Err(corrupt("header disagrees with the derived episode"));
        }
        let states = replay_trajectory(&spec, &actions)?.states;
        (spec, states)
    };
    if r.pos != body.len() {
        return Err(corrupt("trailing bytes"));
    }
    Ok(Trajectory {
        spec,
        actions,
        states,
        score,
        view,
        format_version: version,
    })
}

fn corrupt(what: &str) -> Error {
    Error::CorruptFile(what.to_string())
}

#[derive(Default)]
struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn bytes(&mut self, b: &[u8]) {
        self.buf.extend_from_slice(b);
    }
    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.bytes(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.bytes(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.bytes(&v.to_bits().to_le_bytes());
    }
    fn pose(&mut self, p: &Pose) {
        self.f64(p.x);
        self.f64(p.y);
        self.f64(p.theta);
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or_else(|| corrupt("truncated"))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }
    fn pose(&mut self) -> Result<Pose> {
        Ok(Pose {
            x: self.f64()?,
            y: self.f64()?,
            theta: self.f64()?,
        })
    }
    fn colour(&mut self) -> Result<EntityColour> {
        EntityColour::from_index(self.u8()?).ok_or_else(|| corrupt("colour"))
    }
}

fn write_state(w: &mut Writer, s: &WorkspaceState) {
    w.u32(s.t);
    let r = &s.robot;
    w.pose(&r.pose);
    w.f64(r.lin_vel[0]);
    w.f64(r.lin_vel[1]);
    w.f64(r.ang_vel);
    w.u8(u8::from(r.gripper_closed));
    match &r.grip {
        Some(g) => {
            w.u8(1);
            w.u32(g.block_id);
            w.pose(&g.offset);
        }
        None => w.u8(0),
    }
    w.u32(s.blocks.len() as u32);
    for b in &s.blocks {
        w.u32(b.id);
        w.u8(b.shape.index());
        w.u8(b.colour.index());
        w.pose(&b.pose);
        w.f64(b.lin_vel[0]);
        w.f64(b.lin_vel[1]);
        w.f64(b.ang_vel);
    }
    w.u32(s.regions.len() as u32);
    for g in &s.regions {
        w.u32(g.id);
        w.u8(g.colour.index());
        w.f64(g.centre[0]);
        w.f64(g.centre[1]);
        w.f64(g.width);
        w.f64(g.height);
    }
}

fn read_state(r: &mut Reader<'_>) -> Result<WorkspaceState> {
    let t = r.u32()?;
    let pose = r.pose()?;
    let lin_vel = [r.f64()?, r.f64()?];
    let ang_vel = r.f64()?;
    let gripper_closed = match r.u8()? {
        0 => false,
        1 => true,
        _ => return Err(corrupt("gripper byte")),
    };
    let grip = match r.u8()? {
        0 => None,
        1 => Some(Grip {
            block_id: r.u32()?,
            offset: r.pose()?,
        }),
        _ => return Err(corrupt("grip flag")),
    };
    let nb = r.u32()? as usize;
    let mut blocks = Vec::with_capacity(nb.min(1024));
    for _ in 0..nb {
        let id = r.u32()?;
        let shape = BlockShape::from_index(r.u8()?).ok_or_else(|| corrupt("shape"))?;
        let colour = r.colour()?;
        blocks.push(Block {
            id,
            shape,
            colour,
            pose: r.pose()?,
            lin_vel: [r.f64()?, r.f64()?],
            ang_vel: r.f64()?,
        });
    }
    let nr = r.u32()? as usize;
    let mut regions = Vec::with_capacity(nr.min(1024));
    for _ in 0..nr {
        regions.push(GoalRegion {
            id: r.u32()?,
            colour: r.colour()?,
            centre: [r.f64()?, r.f64()?],
            width: r.f64()?,
            height: r.f64()?,
        });
    }
    Ok(WorkspaceState {
        robot: RobotConfig {
            pose,
            lin_vel,
            ang_vel,
            gripper_closed,
            grip,
        },
        blocks,
        regions,
        t,
    })
}
