use super::geometry::{self, add, cross, dot, norm, scale, sub, Collider};
use super::{
    normalize_angle, Action, Angular, DynamicsVector, Grip, Gripper, Longitudinal, Pose,
    WorkspaceState, BLOCK_RADIUS, CAPTURE_HALF_ANGLE, CAPTURE_RANGE, CONTROL_HZ, ROBOT_JAW_RADIUS,
    ROBOT_RADIUS, SUBSTEPS, WORKSPACE_HALF,
};

const FORWARD_SPEED: f64 = 0.6;
const BACK_SPEED: f64 = 0.45;
const TURN_RATE: f64 = 1.8;
/// First-order response rates (1/s) of the drive and steering motors.
const MOTOR_RATE_LONG: f64 = 20.0;
const MOTOR_RATE_ROT: f64 = 20.0;
/// Velocity damping rates (1/s) before the friction multipliers.
const ROBOT_DAMP: f64 = 0.5;
const ROBOT_LATERAL_DAMP: f64 = 30.0;
const BLOCK_DAMP: f64 = 4.0;
const BLOCK_ANG_DAMP: f64 = 6.0;
/// Rate (1/s) at which a held block is pulled to its attachment pose.
const GRIP_RATE: f64 = 40.0;

const ROBOT_MASS: f64 = 1.0;
const BLOCK_MASS: f64 = 0.25;
const CONTACT_FRICTION: f64 = 0.4;
const SOLVER_ITERATIONS: usize = 4;
const POSITION_CORRECTION: f64 = 0.8;
const PENETRATION_SLOP: f64 = 1e-4;

fn perp(v: [f64; 2]) -> [f64; 2] {
    [-v[1], v[0]]
}

/// Angular velocity `w` crossed with offset `r`.
fn spin(w: f64, r: [f64; 2]) -> [f64; 2] {
    [-w * r[1], w * r[0]]
}

/// Id of the nearest block whose centroid lies inside the gripper capture sector.
pub fn grasp_capture_check(state: &WorkspaceState) -> Option<u32> {
    let robot = &state.robot.pose;
    let mut best: Option<(f64, u32)> = None;
    for b in &state.blocks {
        let local = robot.to_local(b.pose.position());
        let dist = norm(local);
        if dist > CAPTURE_RANGE {
            continue;
        }
        let bearing = libm::atan2(local[1], local[0]);
        if bearing.abs() > CAPTURE_HALF_ANGLE {
            continue;
        }
        if best.is_none_or(|(d, _)| dist < d) {
            best = Some((dist, b.id));
        }
    }
    best.map(|(_, id)| id)
}

#[derive(Debug, Clone)]
struct Body {
    pos: [f64; 2],
    theta: f64,
    vel: [f64; 2],
    omega: f64,
    inv_mass: f64,
    inv_inertia: f64,
}

/// Advances the state by one control step (1/8 s) under `action` and `rho`.
pub fn step_sim(state: &WorkspaceState, action: Action, rho: &DynamicsVector) -> WorkspaceState {
    let mut next = state.clone();
    let (gripper, longitudinal, angular) = action.parts();

    match gripper {
        Gripper::Open => {
            next.robot.gripper_closed = false;
            next.robot.grip = None;
        }
        Gripper::Closed if !next.robot.gripper_closed => {
            next.robot.gripper_closed = true;
            next.robot.grip = grasp_capture_check(&next).map(|id| {
                let block = next.block(id).expect("captured block exists");
                let robot = next.robot.pose;
                let p = robot.to_local(block.pose.position());
                Grip {
                    block_id: id,
                    offset: Pose {
                        x: p[0],
                        y: p[1],
                        theta: normalize_angle(block.pose.theta - robot.theta),
                    },
                }
            });
        }
        Gripper::Closed => {}
    }

    let target_long = match longitudinal {
        Longitudinal::Stop => 0.0,
        Longitudinal::Forward => FORWARD_SPEED * rho.motor_long,
        Longitudinal::Back => -BACK_SPEED * rho.motor_long,
    };
    let target_rot = match angular {
        Angular::Straight => 0.0,
        Angular::Left => TURN_RATE * rho.motor_rot,
        Angular::Right => -TURN_RATE * rho.motor_rot,
    };

    let dt = 1.0 / (CONTROL_HZ * SUBSTEPS as f64);
    let coeffs = Coefficients {
        dt,
        motor_long: 1.0 - libm::exp(-MOTOR_RATE_LONG * dt),
        motor_rot: 1.0 - libm::exp(-MOTOR_RATE_ROT * dt),
        robot_damp: libm::exp(-ROBOT_DAMP * rho.robot_friction * dt),
        lateral_damp: libm::exp(-ROBOT_LATERAL_DAMP * rho.robot_friction * dt),
        block_damp: libm::exp(-BLOCK_DAMP * rho.block_friction * dt),
        block_ang_damp: libm::exp(-BLOCK_ANG_DAMP * rho.block_friction * dt),
        grip: 1.0 - libm::exp(-GRIP_RATE * rho.motor_grip * dt),
        target_long,
        target_rot,
    };

    let mut bodies = Vec::with_capacity(1 + next.blocks.len());
    bodies.push(Body {
        pos: next.robot.pose.position(),
        theta: next.robot.pose.theta,
        vel: next.robot.lin_vel,
        omega: next.robot.ang_vel,
        inv_mass: 1.0 / ROBOT_MASS,
        inv_inertia: 0.0,
    });
    for b in &next.blocks {
        bodies.push(Body {
            pos: b.pose.position(),
            theta: b.pose.theta,
            vel: b.lin_vel,
            omega: b.ang_vel,
            inv_mass: 1.0 / BLOCK_MASS,
            inv_inertia: 1.0 / (0.5 * BLOCK_MASS * BLOCK_RADIUS * BLOCK_RADIUS),
        });
    }
    let held = next
        .robot
        .grip
        .and_then(|g| next.blocks.iter().position(|b| b.id == g.block_id).map(|i| (i + 1, g.offset)));
    let shapes: Vec<_> = next.blocks.iter().map(|b| b.shape).collect();

    for _ in 0..SUBSTEPS {
        substep(&mut bodies, &shapes, held, &coeffs);
    }

    let robot = &bodies[0];
    next.robot.pose = Pose {
        x: robot.pos[0],
        y: robot.pos[1],
        theta: normalize_angle(robot.theta),
    };
    next.robot.lin_vel = robot.vel;
    next.robot.ang_vel = robot.omega;
    for (b, body) in next.blocks.iter_mut().zip(&bodies[1..]) {
        b.pose = Pose {
            x: body.pos[0],
            y: body.pos[1],
            theta: normalize_angle(body.theta),
        };
        b.lin_vel = body.vel;
        b.ang_vel = body.omega;
    }
    next.t += 1;
    next
}

struct Coefficients {
    dt: f64,
    motor_long: f64,
    motor_rot: f64,
    robot_damp: f64,
    lateral_damp: f64,
    block_damp: f64,
    block_ang_damp: f64,
    grip: f64,
    target_long: f64,
    target_rot: f64,
}

fn substep(bodies: &mut [Body], shapes: &[super::BlockShape], held: Option<(usize, Pose)>, k: &Coefficients) {
    {
        let robot = &mut bodies[0];
        let h = [libm::cos(robot.theta), libm::sin(robot.theta)];
        let side = perp(h);
        let mut v_long = dot(robot.vel, h);
        let mut v_lat = dot(robot.vel, side);
        v_long += (k.target_long - v_long) * k.motor_long;
        v_long *= k.robot_damp;
        v_lat *= k.lateral_damp;
        robot.vel = add(scale(h, v_long), scale(side, v_lat));
        robot.omega += (k.target_rot - robot.omega) * k.motor_rot;
        robot.omega *= k.robot_damp;
    }

    for (i, body) in bodies.iter_mut().enumerate().skip(1) {
        if held.is_some_and(|(h, _)| h == i) {
            continue;
        }
        body.vel = scale(body.vel, k.block_damp);
        body.omega *= k.block_ang_damp;
    }

    if let Some((idx, offset)) = held {
        let robot_next = Pose {
            x: bodies[0].pos[0] + bodies[0].vel[0] * k.dt,
            y: bodies[0].pos[1] + bodies[0].vel[1] * k.dt,
            theta: bodies[0].theta + bodies[0].omega * k.dt,
        };
        let target = robot_next.to_world([offset.x, offset.y]);
        let target_theta = robot_next.theta + offset.theta;
        let body = &mut bodies[idx];
        body.vel = scale(sub(target, body.pos), k.grip / k.dt);
        body.omega = normalize_angle(target_theta - body.theta) * k.grip / k.dt;
    }

    for body in bodies.iter_mut() {
        body.pos = add(body.pos, scale(body.vel, k.dt));
        body.theta = normalize_angle(body.theta + body.omega * k.dt);
    }

    let held_idx = held.map(|(i, _)| i);
    for _ in 0..SOLVER_ITERATIONS {
        for i in 0..bodies.len() {
            for j in (i + 1)..bodies.len() {
                if i == 0 && held_idx == Some(j) {
                    continue;
                }
                resolve_pair(bodies, shapes, i, j);
            }
        }
    }

    for (i, body) in bodies.iter_mut().enumerate() {
        let r = if i == 0 { ROBOT_RADIUS } else { BLOCK_RADIUS };
        let lim = WORKSPACE_HALF - r;
        for axis in 0..2 {
            if body.pos[axis] > lim {
                body.pos[axis] = lim;
                body.vel[axis] = body.vel[axis].min(0.0);
            } else if body.pos[axis] < -lim {
                body.pos[axis] = -lim;
                body.vel[axis] = body.vel[axis].max(0.0);
            }
        }
    }
}

fn collider(bodies: &[Body], shapes: &[super::BlockShape], i: usize, other: [f64; 2]) -> Collider {
    let b = &bodies[i];
    if i == 0 {
        // The robot body has a recess between the gripper fingers.
        let heading = [libm::cos(b.theta), libm::sin(b.theta)];
        let rel = sub(other, b.pos);
        let bearing = libm::atan2(cross(heading, rel), dot(heading, rel));
        let radius = if bearing.abs() <= CAPTURE_HALF_ANGLE {
            ROBOT_JAW_RADIUS
        } else {
            ROBOT_RADIUS
        };
        Collider::Circle { centre: b.pos, radius }
    } else {
        let pose = Pose {
            x: b.pos[0],
            y: b.pos[1],
            theta: b.theta,
        };
        Collider::for_block(shapes[i - 1], &pose)
    }
}

fn resolve_pair(bodies: &mut [Body], shapes: &[super::BlockShape], i: usize, j: usize) {
    let bound_i = if i == 0 { ROBOT_RADIUS } else { BLOCK_RADIUS };
    let bound_j = BLOCK_RADIUS;
    let d = sub(bodies[j].pos, bodies[i].pos);
    let reach = bound_i + bound_j;
    if dot(d, d) >= reach * reach {
        return;
    }
    let ci = collider(bodies, shapes, i, bodies[j].pos);
    let cj = collider(bodies, shapes, j, bodies[i].pos);
    let Some(c) = geometry::contact(&ci, &cj) else {
        return;
    };
    let n = c.normal;
    let (a, b) = {
        let (lo, hi) = bodies.split_at_mut(j);
        (&mut lo[i], &mut hi[0])
    };
    let ra = sub(c.point, a.pos);
    let rb = sub(c.point, b.pos);
    let va = add(a.vel, spin(a.omega, ra));
    let vb = add(b.vel, spin(b.omega, rb));
    let vrel = sub(vb, va);
    let vn = dot(vrel, n);
    if vn < 0.0 {
        let kn = a.inv_mass
            + b.inv_mass
            + cross(ra, n).powi(2) * a.inv_inertia
            + cross(rb, n).powi(2) * b.inv_inertia;
        let jn = -vn / kn;
        apply_impulse(a, b, ra, rb, scale(n, jn));

        let t = perp(n);
        let vt = dot(vrel, t);
        let kt = a.inv_mass
            + b.inv_mass
            + cross(ra, t).powi(2) * a.inv_inertia
            + cross(rb, t).powi(2) * b.inv_inertia;
        let limit = CONTACT_FRICTION * jn;
        let jt = (-vt / kt).clamp(-limit, limit);
        apply_impulse(a, b, ra, rb, scale(t, jt));
    }
    let excess = c.depth - PENETRATION_SLOP;
    if excess > 0.0 {
        let corr = excess * POSITION_CORRECTION / (a.inv_mass + b.inv_mass);
        a.pos = sub(a.pos, scale(n, corr * a.inv_mass));
        b.pos = add(b.pos, scale(n, corr * b.inv_mass));
    }
}

fn apply_impulse(a: &mut Body, b: &mut Body, ra: [f64; 2], rb: [f64; 2], imp: [f64; 2]) {
    a.vel = sub(a.vel, scale(imp, a.inv_mass));
    a.omega -= cross(ra, imp) * a.inv_inertia;
    b.vel = add(b.vel, scale(imp, b.inv_mass));
    b.omega += cross(rb, imp) * b.inv_inertia;
}
