//! Block outlines and contact generation between circles and convex polygons.

use std::f64::consts::PI;
use std::sync::OnceLock;

use super::{BlockShape, Pose, BLOCK_RADIUS};

/// Inner radius of the star outline relative to its circumradius.
pub const STAR_INNER_RATIO: f64 = 0.5;

pub(crate) fn add(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] + b[0], a[1] + b[1]]
}

pub(crate) fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

pub(crate) fn scale(a: [f64; 2], s: f64) -> [f64; 2] {
    [a[0] * s, a[1] * s]
}

pub(crate) fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub(crate) fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

pub(crate) fn norm(a: [f64; 2]) -> f64 {
    dot(a, a).sqrt()
}

fn regular_polygon(n: usize, radius: f64, phase: f64) -> Vec<[f64; 2]> {
    (0..n)
        .map(|k| {
            let a = phase + 2.0 * PI * k as f64 / n as f64;
            [radius * libm::cos(a), radius * libm::sin(a)]
        })
        .collect()
}

/// The drawn outline of a shape in its local frame (counter-clockwise).
///
/// Circles return `None`; the star outline is non-convex.
pub fn outline(shape: BlockShape) -> Option<Vec<[f64; 2]>> {
    match shape {
        BlockShape::Square => Some(regular_polygon(4, BLOCK_RADIUS, PI / 4.0)),
        BlockShape::Pentagon => Some(regular_polygon(5, BLOCK_RADIUS, PI / 2.0)),
        BlockShape::Star => Some(
            (0..10)
                .map(|k| {
                    let r = if k % 2 == 0 {
                        BLOCK_RADIUS
                    } else {
                        BLOCK_RADIUS * STAR_INNER_RATIO
                    };
                    let a = PI / 2.0 + PI * k as f64 / 5.0;
                    [r * libm::cos(a), r * libm::sin(a)]
                })
                .collect(),
        ),
        BlockShape::Circle => None,
    }
}

/// The convex collision hull of a shape in its local frame.
///
/// Stars collide as the pentagon through their outer points.
pub fn collision_hull(shape: BlockShape) -> Option<Vec<[f64; 2]>> {
    match shape {
        BlockShape::Star => outline(BlockShape::Pentagon),
        s => outline(s),
    }
}

/// Collision geometry in world coordinates.
#[derive(Debug, Clone)]
pub enum Collider {
    Circle { centre: [f64; 2], radius: f64 },
    Polygon { centre: [f64; 2], vertices: Vec<[f64; 2]> },
}

impl Collider {
    pub fn for_block(shape: BlockShape, pose: &Pose) -> Self {
        match collision_hull(shape) {
            None => Collider::Circle {
                centre: pose.position(),
                radius: BLOCK_RADIUS,
            },
            Some(local) => Collider::Polygon {
                centre: pose.position(),
                vertices: local.into_iter().map(|v| pose.to_world(v)).collect(),
            },
        }
    }
}

/// Contact between two colliders. `normal` points from the first collider to
/// the second; `depth` is the penetration depth (positive when overlapping).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contact {
    pub normal: [f64; 2],
    pub depth: f64,
    pub point: [f64; 2],
}

pub fn contact(a: &Collider, b: &Collider) -> Option<Contact> {
    match (a, b) {
        (
            Collider::Circle { centre: ca, radius: ra },
            Collider::Circle { centre: cb, radius: rb },
        ) => circle_circle(*ca, *ra, *cb, *rb),
        (Collider::Polygon { centre, vertices }, Collider::Circle { centre: c, radius: r }) => {
            polygon_circle(*centre, vertices, *c, *r)
        }
        (Collider::Circle { centre: c, radius: r }, Collider::Polygon { centre, vertices }) => {
            polygon_circle(*centre, vertices, *c, *r).map(|k| Contact {
                normal: scale(k.normal, -1.0),
                ..k
            })
        }
        (
            Collider::Polygon { centre: ca, vertices: va },
            Collider::Polygon { centre: cb, vertices: vb },
        ) => polygon_polygon(*ca, va, *cb, vb),
    }
}

pub fn circle_circle(ca: [f64; 2], ra: f64, cb: [f64; 2], rb: f64) -> Option<Contact> {
    let d = sub(cb, ca);
    let dist = norm(d);
    let depth = ra + rb - dist;
    if depth <= 0.0 {
        return None;
    }
    let normal = if dist > 1e-12 { scale(d, 1.0 / dist) } else { [1.0, 0.0] };
    Some(Contact {
        normal,
        depth,
        point: add(ca, scale(normal, ra - depth / 2.0)),
    })
}

fn closest_on_segment(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    let ab = sub(b, a);
    let len2 = dot(ab, ab);
    if len2 <= 0.0 {
        return a;
    }
    let t = (dot(sub(p, a), ab) / len2).clamp(0.0, 1.0);
    add(a, scale(ab, t))
}

/// Contact from a convex counter-clockwise polygon to a circle.
pub fn polygon_circle(
    poly_centre: [f64; 2],
    vertices: &[[f64; 2]],
    centre: [f64; 2],
    radius: f64,
) -> Option<Contact> {
    let n = vertices.len();
    let mut inside = true;
    let mut best = (f64::INFINITY, [0.0; 2]);
    let mut min_sep = (f64::NEG_INFINITY, [1.0, 0.0]);
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        let edge = sub(b, a);
        let outward = {
            let l = norm(edge);
            [edge[1] / l, -edge[0] / l]
        };
        let sep = dot(sub(centre, a), outward);
        if sep > 0.0 {
            inside = false;
        }
        if sep > min_sep.0 {
            min_sep = (sep, outward);
        }
        let q = closest_on_segment(centre, a, b);
        let d = norm(sub(centre, q));
        if d < best.0 {
            best = (d, q);
        }
    }
    if inside {
        let normal = min_sep.1;
        let depth = radius - min_sep.0;
        return Some(Contact {
            normal,
            depth,
            point: sub(centre, scale(normal, radius)),
        });
    }
    let (dist, q) = best;
    if dist >= radius {
        return None;
    }
    let normal = if dist > 1e-12 {
        scale(sub(centre, q), 1.0 / dist)
    } else {
        let d = sub(centre, poly_centre);
        let l = norm(d);
        if l > 1e-12 {
            scale(d, 1.0 / l)
        } else {
            [1.0, 0.0]
        }
    };
    Some(Contact {
        normal,
        depth: radius - dist,
        point: q,
    })
}

fn project(vertices: &[[f64; 2]], axis: [f64; 2]) -> (f64, f64) {
    vertices.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        let p = dot(*v, axis);
        (lo.min(p), hi.max(p))
    })
}

/// Separating-axis test between two convex counter-clockwise polygons.
pub fn polygon_polygon(
    ca: [f64; 2],
    va: &[[f64; 2]],
    cb: [f64; 2],
    vb: &[[f64; 2]],
) -> Option<Contact> {
    let mut best: Option<(f64, [f64; 2])> = None;
    for poly in [va, vb] {
        let n = poly.len();
        for i in 0..n {
            let e = sub(poly[(i + 1) % n], poly[i]);
            let l = norm(e);
            let mut axis = [e[1] / l, -e[0] / l];
            let (a0, a1) = project(va, axis);
            let (b0, b1) = project(vb, axis);
            let overlap = a1.min(b1) - a0.max(b0);
            if overlap <= 0.0 {
                return None;
            }
            if dot(sub(cb, ca), axis) < 0.0 {
                axis = scale(axis, -1.0);
            }
            if best.is_none_or(|(o, _)| overlap < o) {
                best = Some((overlap, axis));
            }
        }
    }
    let (depth, normal) = best?;
    // Deepest vertex of B along -normal, falling back to A's deepest along +normal.
    let deepest_b = vb
        .iter()
        .copied()
        .fold((f64::INFINITY, cb), |acc, v| {
            let p = dot(v, normal);
            if p < acc.0 {
                (p, v)
            } else {
                acc
            }
        })
        .1;
    let deepest_a = va
        .iter()
        .copied()
        .fold((f64::NEG_INFINITY, ca), |acc, v| {
            let p = dot(v, normal);
            if p > acc.0 {
                (p, v)
            } else {
                acc
            }
        })
        .1;
    Some(Contact {
        normal,
        depth,
        point: scale(add(deepest_a, deepest_b), 0.5),
    })
}

fn cached_outline(shape: BlockShape) -> &'static [[f64; 2]] {
    static OUTLINES: OnceLock<[Vec<[f64; 2]>; 4]> = OnceLock::new();
    let all = OUTLINES.get_or_init(|| BlockShape::ALL.map(|s| outline(s).unwrap_or_default()));
    &all[usize::from(shape.index())]
}

/// Point-in-shape test in the block's local frame.
pub fn shape_contains_local(shape: BlockShape, p: [f64; 2]) -> bool {
    match shape {
        BlockShape::Circle => dot(p, p) <= BLOCK_RADIUS * BLOCK_RADIUS,
        BlockShape::Star => {
            // Union of the ten (centre, vertex, next vertex) triangles.
            let verts = cached_outline(BlockShape::Star);
            (0..10).any(|k| {
                let a = verts[k];
                let b = verts[(k + 1) % 10];
                point_in_triangle(p, [0.0, 0.0], a, b)
            })
        }
        s => {
            let verts = cached_outline(s);
            let n = verts.len();
            (0..n).all(|i| cross(sub(verts[(i + 1) % n], verts[i]), sub(p, verts[i])) >= 0.0)
        }
    }
}

fn point_in_triangle(p: [f64; 2], a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> bool {
    let d1 = cross(sub(b, a), sub(p, a));
    let d2 = cross(sub(c, b), sub(p, b));
    let d3 = cross(sub(a, c), sub(p, c));
    let neg = d1 < 0.0 || d2 < 0.0 || d3 < 0.0;
    let pos = d1 > 0.0 || d2 > 0.0 || d3 > 0.0;
    !(neg && pos)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn outlines_have_fixed_circumradius() {
        for s in BlockShape::ALL {
            if let Some(v) = outline(s) {
                let max = v.iter().map(|p| norm(*p)).fold(0.0, f64::max);
                assert!((max - BLOCK_RADIUS).abs() < 1e-12, "{s:?}");
            }
        }
    }

    #[test]
    fn circles_touching_have_no_contact() {
        assert!(circle_circle([0.0, 0.0], 0.1, [0.2, 0.0], 0.1).is_none());
        let c = circle_circle([0.0, 0.0], 0.1, [0.15, 0.0], 0.1).unwrap();
        assert!((c.depth - 0.05).abs() < 1e-12);
        assert_eq!(c.normal, [1.0, 0.0]);
    }

    #[test]
    fn square_circle_contact_normal_points_to_circle() {
        let sq = Collider::for_block(BlockShape::Square, &Pose::new(0.0, 0.0, 0.0));
        let half = BLOCK_RADIUS / 2f64.sqrt();
        let circ = Collider::Circle {
            centre: [half + 0.05, 0.0],
            radius: 0.08,
        };
        let c = contact(&sq, &circ).unwrap();
        assert!((c.normal[0] - 1.0).abs() < 1e-12);
        assert!((c.depth - 0.03).abs() < 1e-12);
        let rev = contact(&circ, &sq).unwrap();
        assert!((rev.normal[0] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn separated_squares_have_no_contact() {
        let a = Collider::for_block(BlockShape::Square, &Pose::new(0.0, 0.0, 0.0));
        let b = Collider::for_block(BlockShape::Square, &Pose::new(0.2, 0.0, 0.3));
        assert!(contact(&a, &b).is_none());
        let c = Collider::for_block(BlockShape::Square, &Pose::new(0.1, 0.0, 0.0));
        let k = contact(&a, &c).unwrap();
        assert!(k.normal[0] > 0.99);
        assert!(k.depth > 0.0);
    }

    #[test]
    fn star_contains_centre_but_not_notch() {
        assert!(shape_contains_local(BlockShape::Star, [0.0, 0.0]));
        // Midway between two outer points, beyond the inner radius.
        let a = PI / 2.0 + PI / 5.0;
        let p = [0.07 * libm::cos(a), 0.07 * libm::sin(a)];
        assert!(!shape_contains_local(BlockShape::Star, p));
        assert!(shape_contains_local(BlockShape::Pentagon, [0.0, 0.06]));
    }
}
