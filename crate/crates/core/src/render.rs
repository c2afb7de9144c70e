//! Software rasterizer producing 96×96 RGB8 observation frames.
//!
//! Each frame is rendered at 384×384 and box-filtered 4×4 down to 96×96 with
//! integer arithmetic. Output pixels whose footprint touches no entity are
//! filled directly; the rest are supersampled.

use std::io::Cursor;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::geometry::shape_contains_local;
use crate::sim::{
    BlockShape, EntityColour, Pose, WorkspaceState, BLOCK_RADIUS, CAPTURE_HALF_ANGLE, ROBOT_JAW_RADIUS, ROBOT_RADIUS,
    WORKSPACE_HALF,
};

pub const FRAME_SIZE: usize = 96;
pub const FRAME_BYTES: usize = FRAME_SIZE * FRAME_SIZE * 3;
pub const STACK_DEPTH: usize = 4;
const SUPERSAMPLE: usize = 4;

/// Egocentric window side length in workspace units.
pub const EGO_WINDOW: f64 = 2.4;
/// Pixel at which the robot centre appears in egocentric frames.
pub const EGO_ANCHOR: (usize, usize) = (48, 72);

pub type Rgb = [u8; 3];

/// The fixed palette.
pub mod palette {
    use super::Rgb;

    pub const RED: Rgb = [228, 26, 28];
    pub const GREEN: Rgb = [77, 175, 74];
    pub const BLUE: Rgb = [55, 126, 184];
    pub const YELLOW: Rgb = [255, 217, 47];
    pub const ROBOT: Rgb = [100, 100, 100];
    pub const FINGER: Rgb = [40, 40, 40];
    pub const BACKGROUND: Rgb = [255, 255, 255];
    pub const BORDER: Rgb = [60, 60, 60];
}

fn entity_rgb(c: EntityColour) -> Rgb {
    match c {
        EntityColour::Red => palette::RED,
        EntityColour::Green => palette::GREEN,
        EntityColour::Blue => palette::BLUE,
        EntityColour::Yellow => palette::YELLOW,
    }
}

/// Region interior: 2 parts colour to 3 parts white.
fn region_fill(c: Rgb) -> Rgb {
    c.map(|v| ((2 * u32::from(v) + 3 * 255) / 5) as u8)
}

/// Block outline: 3/5 of the fill colour.
fn block_edge(c: Rgb) -> Rgb {
    c.map(|v| (u32::from(v) * 3 / 5) as u8)
}

const REGION_OUTLINE: f64 = 0.02;
const BLOCK_OUTLINE: f64 = 0.012;
const FINGER_HALF_WIDTH: f64 = 0.022;
const FINGER_INNER: f64 = 0.09;
const FINGER_OUTER: f64 = 0.23;
const FINGER_OPEN_ANGLE: f64 = 38.0 * std::f64::consts::PI / 180.0;
const FINGER_CLOSED_ANGLE: f64 = 24.0 * std::f64::consts::PI / 180.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ViewKind {
    Egocentric,
    Allocentric,
}

impl ViewKind {
    pub fn index(self) -> u8 {
        match self {
            ViewKind::Egocentric => 0,
            ViewKind::Allocentric => 1,
        }
    }

    /// `"ego"` or `"allo"`.
    pub fn short_name(self) -> &'static str {
        match self {
            ViewKind::Egocentric => "ego",
            ViewKind::Allocentric => "allo",
        }
    }

    pub fn from_index(i: u8) -> Option<Self> {
        match i {
            0 => Some(ViewKind::Egocentric),
            1 => Some(ViewKind::Allocentric),
            _ => None,
        }
    }
}

impl std::str::FromStr for ViewKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ego" | "egocentric" => Ok(ViewKind::Egocentric),
            "allo" | "allocentric" => Ok(ViewKind::Allocentric),
            _ => Err(Error::InvalidParameter(format!("unknown view '{s}'"))),
        }
    }
}

/// A 96×96 RGB8 image, row-major from the top-left corner.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Frame {
    data: Vec<u8>,
}

impl std::fmt::Debug for Frame {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Frame({}x{} rgb8)", FRAME_SIZE, FRAME_SIZE)
    }
}

impl Frame {
    pub fn filled(c: Rgb) -> Self {
        Self {
            data: c.iter().copied().cycle().take(FRAME_BYTES).collect(),
        }
    }

    pub fn from_raw(data: Vec<u8>) -> Result<Self> {
        if data.len() != FRAME_BYTES {
            return Err(Error::InvalidParameter(format!(
                "frame needs {FRAME_BYTES} bytes, got {}",
                data.len()
            )));
        }
        Ok(Self { data })
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.data
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> Rgb {
        let i = (y * FRAME_SIZE + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set_pixel(&mut self, x: usize, y: usize, c: Rgb) {
        let i = (y * FRAME_SIZE + x) * 3;
        self.data[i..i + 3].copy_from_slice(&c);
    }

    pub fn to_png(&self) -> Vec<u8> {
        encode_png(&self.data, FRAME_SIZE as u32, FRAME_SIZE as u32)
    }

    pub fn from_png(bytes: &[u8]) -> Result<Self> {
        let decoder = png::Decoder::new(Cursor::new(bytes));
        let mut reader = decoder
            .read_info()
            .map_err(|e| Error::InvalidParameter(format!("png: {e}")))?;
        let mut buf = vec![0; reader.output_buffer_size().unwrap_or(FRAME_BYTES)];
        let info = reader
            .next_frame(&mut buf)
            .map_err(|e| Error::InvalidParameter(format!("png: {e}")))?;
        if info.width as usize != FRAME_SIZE
            || info.height as usize != FRAME_SIZE
            || info.color_type != png::ColorType::Rgb
            || info.bit_depth != png::BitDepth::Eight
        {
            return Err(Error::InvalidParameter("png is not a 96x96 RGB8 image".into()));
        }
        buf.truncate(info.buffer_size());
        Frame::from_raw(buf)
    }
}

/// Encodes raw RGB8 data as a PNG with fixed encoder settings.
pub fn encode_png(rgb: &[u8], width: u32, height: u32) -> Vec<u8> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, width, height);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        enc.set_compression(png::Compression::Fast);
        let mut w = enc.write_header().expect("png header to memory");
        w.write_image_data(rgb).expect("png data to memory");
    }
    out
}

/// Four frames ordered oldest to newest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Observation {
    pub frames: [Frame; STACK_DEPTH],
    pub view: ViewKind,
}

impl Observation {
    pub fn newest(&self) -> &Frame {
        &self.frames[STACK_DEPTH - 1]
    }

    /// The frames concatenated along the channel axis: 96×96×12, row-major.
    pub fn channel_stacked(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(FRAME_BYTES * STACK_DEPTH);
        for p in 0..FRAME_SIZE * FRAME_SIZE {
            for f in &self.frames {
                out.extend_from_slice(&f.data[p * 3..p * 3 + 3]);
            }
        }
        out
    }
}

/// Pads a history of up to four frames (oldest first) by repeating the oldest.
pub fn stack_observation(history: &[Frame], view: ViewKind) -> Result<Observation> {
    if history.is_empty() {
        return Err(Error::InvalidParameter("empty frame history".into()));
    }
    let recent = &history[history.len().saturating_sub(STACK_DEPTH)..];
    let pad = STACK_DEPTH - recent.len();
    let frames = std::array::from_fn(|i| if i < pad { recent[0].clone() } else { recent[i - pad].clone() });
    Ok(Observation { frames, view })
}

/// Maps canvas coordinates (in output-pixel units) to world coordinates.
#[derive(Debug, Clone, Copy)]
struct ViewTransform {
    origin: [f64; 2],
    du: [f64; 2],
    dv: [f64; 2],
    anchor: [f64; 2],
}

impl ViewTransform {
    fn new(state: &WorkspaceState, view: ViewKind) -> Self {
        match view {
            ViewKind::Allocentric => {
                let s = 2.0 * WORKSPACE_HALF / FRAME_SIZE as f64;
                ViewTransform {
                    origin: [-WORKSPACE_HALF, WORKSPACE_HALF],
                    du: [s, 0.0],
                    dv: [0.0, -s],
                    anchor: [0.0, 0.0],
                }
            }
            ViewKind::Egocentric => {
                let s = EGO_WINDOW / FRAME_SIZE as f64;
                let r = state.robot.pose;
                let fwd = r.heading();
                let right = [fwd[1], -fwd[0]];
                ViewTransform {
                    origin: [r.x, r.y],
                    du: [right[0] * s, right[1] * s],
                    dv: [-fwd[0] * s, -fwd[1] * s],
                    anchor: [EGO_ANCHOR.0 as f64 + 0.5, EGO_ANCHOR.1 as f64 + 0.5],
                }
            }
        }
    }

    fn world(&self, u: f64, v: f64) -> [f64; 2] {
        let a = u - self.anchor[0];
        let b = v - self.anchor[1];
        [
            self.origin[0] + a * self.du[0] + b * self.dv[0],
            self.origin[1] + a * self.du[1] + b * self.dv[1],
        ]
    }

    /// World distance spanned by one output pixel.
    fn pixel_size(&self) -> f64 {
        (self.du[0] * self.du[0] + self.du[1] * self.du[1]).sqrt()
    }
}

struct BlockDraw {
    centre: [f64; 2],
    pose: Pose,
    shape: BlockShape,
    fill: Rgb,
    edge: Rgb,
}

struct RegionDraw {
    bounds: (f64, f64, f64, f64),
    fill: Rgb,
    edge: Rgb,
}

struct Scene {
    robot: Pose,
    finger_angle: f64,
    blocks: Vec<BlockDraw>,
    regions: Vec<RegionDraw>,
}

enum Candidate {
    Robot,
    Block(usize),
    Region(usize),
}

impl Scene {
    fn new(state: &WorkspaceState) -> Self {
        Scene {
            robot: state.robot.pose,
            finger_angle: if state.robot.gripper_closed {
                FINGER_CLOSED_ANGLE
            } else {
                FINGER_OPEN_ANGLE
            },
            blocks: state
                .blocks
                .iter()
                .map(|b| {
                    let fill = entity_rgb(b.colour);
                    BlockDraw {
                        centre: b.pose.position(),
                        pose: b.pose,
                        shape: b.shape,
                        fill,
                        edge: block_edge(fill),
                    }
                })
                .collect(),
            regions: state
                .regions
                .iter()
                .map(|r| {
                    let c = entity_rgb(r.colour);
                    RegionDraw {
                        bounds: r.bounds(),
                        fill: region_fill(c),
                        edge: c,
                    }
                })
                .collect(),
        }
    }

    /// Entities that may cover a disk of radius `r` around `p`, top-most first.
    /// The list stops at the first entity that covers the whole disk in one
    /// colour; if that is the first entry, the colour is returned.
    fn candidates(&self, p: [f64; 2], r: f64, out: &mut Vec<Candidate>) -> Option<Rgb> {
        out.clear();
        let dist2 = |c: [f64; 2]| {
            let d = [p[0] - c[0], p[1] - c[1]];
            d[0] * d[0] + d[1] * d[1]
        };
        let covered = |cand: Candidate, colour: Rgb, out: &mut Vec<Candidate>| {
            let uniform = out.is_empty().then_some(colour);
            out.push(cand);
            uniform
        };
        let robot_d2 = dist2(self.robot.position());
        let reach = FINGER_OUTER + FINGER_HALF_WIDTH + r;
        if robot_d2 <= reach * reach {
            let inner = ROBOT_JAW_RADIUS - r;
            if inner > 0.0 && robot_d2 <= inner * inner {
                return covered(Candidate::Robot, palette::ROBOT, out);
            }
            out.push(Candidate::Robot);
        }
        for (i, b) in self.blocks.iter().enumerate().rev() {
            let reach = BLOCK_RADIUS + r;
            if dist2(b.centre) <= reach * reach {
                out.push(Candidate::Block(i));
            }
        }
        for (i, g) in self.regions.iter().enumerate().rev() {
            let (x0, y0, x1, y1) = g.bounds;
            if p[0] + r >= x0 && p[0] - r <= x1 && p[1] + r >= y0 && p[1] - r <= y1 {
                let inset = (p[0] - x0).min(x1 - p[0]).min(p[1] - y0).min(y1 - p[1]);
                if inset > REGION_OUTLINE + r {
                    return covered(Candidate::Region(i), g.fill, out);
                }
                out.push(Candidate::Region(i));
            }
        }
        None
    }

    fn robot_colour(&self, p: [f64; 2]) -> Option<Rgb> {
        let local = self.robot.to_local(p);
        let r2 = local[0] * local[0] + local[1] * local[1];
        if r2 <= ROBOT_RADIUS * ROBOT_RADIUS {
            let bearing = libm::atan2(local[1], local[0]).abs();
            if bearing > CAPTURE_HALF_ANGLE || r2 <= ROBOT_JAW_RADIUS * ROBOT_JAW_RADIUS {
                return Some(palette::ROBOT);
            }
        }
        for side in [1.0, -1.0] {
            let a = side * self.finger_angle;
            let dir = [libm::cos(a), libm::sin(a)];
            let along = local[0] * dir[0] + local[1] * dir[1];
            let across = (local[1] * dir[0] - local[0] * dir[1]).abs();
            if (FINGER_INNER..=FINGER_OUTER).contains(&along) && across <= FINGER_HALF_WIDTH {
                return Some(palette::FINGER);
            }
        }
        None
    }

    fn block_colour(b: &BlockDraw, p: [f64; 2]) -> Option<Rgb> {
        let local = b.pose.to_local(p);
        if !shape_contains_local(b.shape, local) {
            return None;
        }
        let k = BLOCK_RADIUS / (BLOCK_RADIUS - BLOCK_OUTLINE);
        if shape_contains_local(b.shape, [local[0] * k, local[1] * k]) {
            Some(b.fill)
        } else {
            Some(b.edge)
        }
    }

    fn region_colour(g: &RegionDraw, p: [f64; 2]) -> Option<Rgb> {
        let (x0, y0, x1, y1) = g.bounds;
        if p[0] < x0 || p[0] > x1 || p[1] < y0 || p[1] > y1 {
            return None;
        }
        let inset = (p[0] - x0).min(x1 - p[0]).min(p[1] - y0).min(y1 - p[1]);
        Some(if inset <= REGION_OUTLINE { g.edge } else { g.fill })
    }

    fn colour_at(&self, p: [f64; 2], candidates: &[Candidate]) -> Rgb {
        for c in candidates {
            let hit = match c {
                Candidate::Robot => self.robot_colour(p),
                Candidate::Block(i) => Self::block_colour(&self.blocks[*i], p),
                Candidate::Region(i) => Self::region_colour(&self.regions[*i], p),
            };
            if let Some(rgb) = hit {
                return rgb;
            }
        }
        floor_colour(p)
    }
}

fn floor_colour(p: [f64; 2]) -> Rgb {
    if p[0].abs() <= WORKSPACE_HALF && p[1].abs() <= WORKSPACE_HALF {
        palette::BACKGROUND
    } else {
        palette::BORDER
    }
}

/// Rasterizes a state in the given view.
pub fn render_frame(state: &WorkspaceState, view: ViewKind) -> Frame {
    let xf = ViewTransform::new(state, view);
    let scene = Scene::new(state);
    // Radius of one output pixel's footprint, with slack.
    let cell_radius = xf.pixel_size() * 0.75;
    let mut frame = Frame::filled(palette::BACKGROUND);
    let mut candidates = Vec::new();
    let step = 1.0 / SUPERSAMPLE as f64;
    for py in 0..FRAME_SIZE {
        for px in 0..FRAME_SIZE {
            let centre = xf.world(px as f64 + 0.5, py as f64 + 0.5);
            if let Some(c) = scene.candidates(centre, cell_radius, &mut candidates) {
                frame.set_pixel(px, py, c);
                continue;
            }
            let uniform_floor = candidates.is_empty() && {
                let inside = |q: f64| q.abs() <= WORKSPACE_HALF - cell_radius;
                let outside = |q: f64| q.abs() > WORKSPACE_HALF + cell_radius;
                (inside(centre[0]) && inside(centre[1])) || outside(centre[0]) || outside(centre[1])
            };
            if uniform_floor {
                frame.set_pixel(px, py, floor_colour(centre));
                continue;
            }
            let mut sum = [0u32; 3];
            for sy in 0..SUPERSAMPLE {
                for sx in 0..SUPERSAMPLE {
                    let u = px as f64 + (sx as f64 + 0.5) * step;
                    let v = py as f64 + (sy as f64 + 0.5) * step;
                    let c = scene.colour_at(xf.world(u, v), &candidates);
                    for k in 0..3 {
                        sum[k] += u32::from(c[k]);
                    }
                }
            }
            let n = (SUPERSAMPLE * SUPERSAMPLE) as u32;
            frame.set_pixel(px, py, sum.map(|s| ((s + n / 2) / n) as u8));
        }
    }
    frame
}
