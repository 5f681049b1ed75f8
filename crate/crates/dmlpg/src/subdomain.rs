//! Local subdomains around nodes, clipped against the domain rectangle.

use crate::domain::{BcKind, DomainSpec, Side};
use crate::error::{Error, Result};
use nalgebra::{Point2, Vector2};
use std::f64::consts::{PI, TAU};

/// Shape of a local subdomain before clipping. `Square(s)` has total
/// side length `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SubShape {
    Ball(f64),
    Square(f64),
}

/// Where a boundary piece of a subdomain lies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PieceTag {
    /// Inside the domain (the part cut out of the interior).
    InteriorBoundary,
    /// On a Dirichlet part of the domain boundary.
    OnDirichlet,
    /// On a Neumann part of the domain boundary.
    OnNeumann,
}

/// One piece of the subdomain boundary. Arcs are counterclockwise from
/// `theta0` to `theta1` about the subdomain center; segment normals point
/// out of the subdomain.
#[derive(Debug, Clone)]
pub enum BoundaryPiece {
    Arc {
        center: Point2<f64>,
        radius: f64,
        theta0: f64,
        theta1: f64,
        tag: PieceTag,
    },
    Segment {
        a: Point2<f64>,
        b: Point2<f64>,
        normal: Vector2<f64>,
        tag: PieceTag,
    },
}

impl BoundaryPiece {
    pub fn tag(&self) -> PieceTag {
        match self {
            BoundaryPiece::Arc { tag, .. } => *tag,
            BoundaryPiece::Segment { tag, .. } => *tag,
        }
    }

    /// Arc length of the piece.
    pub fn measure(&self) -> f64 {
        match self {
            BoundaryPiece::Arc {
                radius,
                theta0,
                theta1,
                ..
            } => radius * (theta1 - theta0),
            BoundaryPiece::Segment { a, b, .. } => (b - a).norm(),
        }
    }
}

/// Intersection of a ball or square centered at a node with the closed
/// domain, together with its tagged boundary pieces.
#[derive(Debug, Clone)]
pub struct Subdomain {
    pub center: Point2<f64>,
    pub shape: SubShape,
    pub pieces: Vec<BoundaryPiece>,
    domain: DomainSpec,
}

impl Subdomain {
    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    /// Total boundary length of the clipped shape.
    pub fn perimeter(&self) -> f64 {
        self.pieces.iter().map(|p| p.measure()).sum()
    }

    /// For `Ball` shapes: distance from the center to the boundary of the
    /// clipped region along direction `theta` (at most the ball radius).
    pub fn radius_at(&self, theta: f64) -> f64 {
        let r = match self.shape {
            SubShape::Ball(r) => r,
            SubShape::Square(s) => s, // conservative cap; not used for squares
        };
        let dir = Vector2::new(theta.cos(), theta.sin());
        let mut t_min = r;
        let d = &self.domain;
        let mut check = |num: f64, den: f64| {
            if den < 0.0 {
                // Ray moves toward this plane; positive hit distance.
                let t = num / den;
                if t >= 0.0 && t < t_min {
                    t_min = t;
                }
            }
        };
        // Planes written as (bound - coord) with the ray component.
        check(d.x_min - self.center.x, dir.x); // left: hit when dir.x < 0
        check(self.center.x - d.x_max, -dir.x); // right: hit when dir.x > 0
        check(d.y_min - self.center.y, dir.y); // bottom
        check(self.center.y - d.y_max, -dir.y); // top
        t_min.max(0.0)
    }

    /// For `Ball` shapes: sorted angles in `[0, 2pi)` between which the
    /// polar radius function is smooth (side crossings and in-disk corners).
    pub fn polar_breakpoints(&self) -> Vec<f64> {
        let r = match self.shape {
            SubShape::Ball(r) => r,
            SubShape::Square(_) => return Vec::new(),
        };
        let mut angles = circle_side_crossings(&self.domain, &self.center, r);
        let d = &self.domain;
        for corner in [
            Point2::new(d.x_min, d.y_min),
            Point2::new(d.x_max, d.y_min),
            Point2::new(d.x_min, d.y_max),
            Point2::new(d.x_max, d.y_max),
        ] {
            let v = corner - self.center;
            let dist = v.norm();
            if dist > 1e-14 * r && dist < r * (1.0 - 1e-14) {
                angles.push(normalize_angle(v.y.atan2(v.x)));
            }
        }
        dedupe_sorted_angles(angles, 1e-12)
    }

    /// For `Square` shapes: the clipped axis-aligned rectangle.
    pub fn clipped_rect(&self) -> Option<(f64, f64, f64, f64)> {
        match self.shape {
            SubShape::Square(s) => {
                let d = &self.domain;
                let half = 0.5 * s;
                Some((
                    (self.center.x - half).max(d.x_min),
                    (self.center.x + half).min(d.x_max),
                    (self.center.y - half).max(d.y_min),
                    (self.center.y + half).min(d.y_max),
                ))
            }
            SubShape::Ball(_) => None,
        }
    }
}

fn normalize_angle(theta: f64) -> f64 {
    let mut t = theta % TAU;
    if t < 0.0 {
        t += TAU;
    }
    t
}

fn dedupe_sorted_angles(mut angles: Vec<f64>, tol: f64) -> Vec<f64> {
    angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut out: Vec<f64> = Vec::with_capacity(angles.len());
    for a in angles {
        if out.last().is_none_or(|&last| a - last > tol) {
            out.push(a);
        }
    }
    // Merge a value at ~2pi with one at ~0.
    if out.len() > 1 {
        if let (Some(&first), Some(&last)) = (out.first(), out.last()) {
            if TAU - last + first < tol {
                out.pop();
            }
        }
    }
    out
}

/// Angles where the circle of radius `r` about `c` crosses a domain side
/// line, restricted to crossings at points that lie on the actual side.
fn circle_side_crossings(domain: &DomainSpec, c: &Point2<f64>, r: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut push_if_on_side = |theta: f64, side: Side| {
        let p = c + r * Vector2::new(theta.cos(), theta.sin());
        let (lo, hi, v) = match side {
            Side::Left | Side::Right => (domain.y_min, domain.y_max, p.y),
            Side::Bottom | Side::Top => (domain.x_min, domain.x_max, p.x),
        };
        if v >= lo - 1e-12 * r && v <= hi + 1e-12 * r {
            out.push(normalize_angle(theta));
        }
    };
    for side in Side::ALL {
        // Signed inward distance from the center to the side line.
        let d = match side {
            Side::Left => c.x - domain.x_min,
            Side::Right => domain.x_max - c.x,
            Side::Bottom => c.y - domain.y_min,
            Side::Top => domain.y_max - c.y,
        };
        if d >= r {
            continue;
        }
        let ratio = (d / r).clamp(-1.0, 1.0);
        match side {
            Side::Left => {
                let a = (-ratio).acos();
                push_if_on_side(a, side);
                push_if_on_side(TAU - a, side);
            }
            Side::Right => {
                let a = ratio.acos();
                push_if_on_side(a, side);
                push_if_on_side(TAU - a, side);
            }
            Side::Bottom => {
                let a = (-ratio).asin();
                push_if_on_side(a, side);
                push_if_on_side(PI - a, side);
            }
            Side::Top => {
                let a = ratio.asin();
                push_if_on_side(a, side);
                push_if_on_side(PI - a, side);
            }
        }
    }
    out
}

fn piece_tag_for_side(domain: &DomainSpec, side: Side) -> PieceTag {
    match domain.side_kind(side) {
        BcKind::Dirichlet => PieceTag::OnDirichlet,
        BcKind::Neumann => PieceTag::OnNeumann,
    }
}

/// Clips a ball or square centered at `center` against the closed domain
/// and tags the resulting boundary pieces.
pub fn clip_subdomain(
    domain: &DomainSpec,
    center: &Point2<f64>,
    shape: SubShape,
) -> Result<Subdomain> {
    let size = match shape {
        SubShape::Ball(r) => r,
        SubShape::Square(s) => s,
    };
    if size <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "subdomain size must be positive, got {size}"
        )));
    }
    if !domain.contains(center, 1e-12 * size) {
        return Err(Error::InvalidConfig(format!(
            "subdomain center ({}, {}) outside the domain",
            center.x, center.y
        )));
    }
    let pieces = match shape {
        SubShape::Ball(r) => clip_ball(domain, center, r)?,
        SubShape::Square(s) => clip_square(domain, center, s)?,
    };
    Ok(Subdomain {
        center: *center,
        shape,
        pieces,
        domain: domain.clone(),
    })
}

fn clip_ball(domain: &DomainSpec, c: &Point2<f64>, r: f64) -> Result<Vec<BoundaryPiece>> {
    let tol = 1e-12 * r;
    let mut pieces = Vec::new();

    // Straight pieces: for each side line closer than r, the chord of the
    // disk on that line, trimmed to the side extent.
    for side in Side::ALL {
        let d = match side {
            Side::Left => c.x - domain.x_min,
            Side::Right => domain.x_max - c.x,
            Side::Bottom => c.y - domain.y_min,
            Side::Top => domain.y_max - c.y,
        };
        if d >= r {
            continue;
        }
        let half = (r * r - d * d).sqrt();
        let coord = domain.side_coordinate(side);
        let (a, b) = match side {
            Side::Left | Side::Right => {
                let lo = (c.y - half).max(domain.y_min);
                let hi = (c.y + half).min(domain.y_max);
                (Point2::new(coord, lo), Point2::new(coord, hi))
            }
            Side::Bottom | Side::Top => {
                let lo = (c.x - half).max(domain.x_min);
                let hi = (c.x + half).min(domain.x_max);
                (Point2::new(lo, coord), Point2::new(hi, coord))
            }
        };
        if (b - a).norm() > tol {
            pieces.push(BoundaryPiece::Segment {
                a,
                b,
                normal: domain.outward_normal(side),
                tag: piece_tag_for_side(domain, side),
            });
        }
    }

    // Arc pieces: walk the crossing angles and keep intervals whose
    // midpoint lies inside the domain.
    let crossings = circle_side_crossings(domain, c, r);
    let crossings = dedupe_sorted_angles(crossings, 1e-12);
    if crossings.is_empty() {
        pieces.push(BoundaryPiece::Arc {
            center: *c,
            radius: r,
            theta0: 0.0,
            theta1: TAU,
            tag: PieceTag::InteriorBoundary,
        });
    } else {
        let n = crossings.len();
        for i in 0..n {
            let t0 = crossings[i];
            let t1 = if i + 1 < n {
                crossings[i + 1]
            } else {
                crossings[0] + TAU
            };
            if t1 - t0 <= 1e-12 {
                continue;
            }
            let tm = 0.5 * (t0 + t1);
            let p = c + r * Vector2::new(tm.cos(), tm.sin());
            if domain.contains(&p, -tol) {
                pieces.push(BoundaryPiece::Arc {
                    center: *c,
                    radius: r,
                    theta0: t0,
                    theta1: t1,
                    tag: PieceTag::InteriorBoundary,
                });
            }
        }
    }

    if pieces.is_empty() {
        return Err(Error::EmptyRegion(format!(
            "ball at ({}, {}) clips to nothing",
            c.x, c.y
        )));
    }
    Ok(pieces)
}

fn clip_square(domain: &DomainSpec, c: &Point2<f64>, s: f64) -> Result<Vec<BoundaryPiece>> {
    let tol = 1e-12 * s;
    let half = 0.5 * s;
    let x0 = (c.x - half).max(domain.x_min);
    let x1 = (c.x + half).min(domain.x_max);
    let y0 = (c.y - half).max(domain.y_min);
    let y1 = (c.y + half).min(domain.y_max);
    if x1 - x0 <= tol || y1 - y0 <= tol {
        return Err(Error::EmptyRegion(format!(
            "square at ({}, {}) clips to zero area",
            c.x, c.y
        )));
    }
    let face_tag = |coord: f64, side: Side| -> PieceTag {
        if (coord - domain.side_coordinate(side)).abs() <= tol {
            piece_tag_for_side(domain, side)
        } else {
            PieceTag::InteriorBoundary
        }
    };
    Ok(vec![
        BoundaryPiece::Segment {
            a: Point2::new(x0, y0),
            b: Point2::new(x0, y1),
            normal: Vector2::new(-1.0, 0.0),
            tag: face_tag(x0, Side::Left),
        },
        BoundaryPiece::Segment {
            a: Point2::new(x1, y0),
            b: Point2::new(x1, y1),
            normal: Vector2::new(1.0, 0.0),
            tag: face_tag(x1, Side::Right),
        },
        BoundaryPiece::Segment {
            a: Point2::new(x0, y0),
            b: Point2::new(x1, y0),
            normal: Vector2::new(0.0, -1.0),
            tag: face_tag(y0, Side::Bottom),
        },
        BoundaryPiece::Segment {
            a: Point2::new(x0, y1),
            b: Point2::new(x1, y1),
            normal: Vector2::new(0.0, 1.0),
            tag: face_tag(y1, Side::Top),
        },
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::BcKind;
    use approx::assert_relative_eq;

    fn unit_square_mixed() -> DomainSpec {
        DomainSpec::rectangle(
            0.0,
            1.0,
            0.0,
            1.0,
            BcKind::Dirichlet,
            BcKind::Dirichlet,
            BcKind::Neumann,
            BcKind::Neumann,
        )
    }

    #[test]
    fn interior_ball_is_a_full_circle() {
        let d = unit_square_mixed();
        let sub = clip_subdomain(&d, &Point2::new(0.5, 0.5), SubShape::Ball(0.07)).unwrap();
        assert_eq!(sub.pieces.len(), 1);
        assert_eq!(sub.pieces[0].tag(), PieceTag::InteriorBoundary);
        assert_relative_eq!(sub.perimeter(), TAU * 0.07, max_relative = 1e-12);
    }

    #[test]
    fn half_disk_on_neumann_side() {
        let d = unit_square_mixed();
        let r = 0.07;
        let sub = clip_subdomain(&d, &Point2::new(0.5, 0.0), SubShape::Ball(r)).unwrap();
        let arcs: Vec<_> = sub
            .pieces
            .iter()
            .filter(|p| matches!(p, BoundaryPiece::Arc { .. }))
            .collect();
        let segs: Vec<_> = sub
            .pieces
            .iter()
            .filter(|p| matches!(p, BoundaryPiece::Segment { .. }))
            .collect();
        assert_eq!(arcs.len(), 1);
        assert_eq!(segs.len(), 1);
        assert_eq!(arcs[0].tag(), PieceTag::InteriorBoundary);
        assert_relative_eq!(arcs[0].measure(), PI * r, max_relative = 1e-12);
        assert_eq!(segs[0].tag(), PieceTag::OnNeumann);
        assert_relative_eq!(segs[0].measure(), 2.0 * r, max_relative = 1e-12);
    }

    #[test]
    fn quarter_disk_at_corner() {
        let d = unit_square_mixed();
        let r = 0.07;
        let sub = clip_subdomain(&d, &Point2::new(0.0, 0.0), SubShape::Ball(r)).unwrap();
        assert_relative_eq!(sub.perimeter(), 0.5 * PI * r + 2.0 * r, max_relative = 1e-12);
        let dir_len: f64 = sub
            .pieces
            .iter()
            .filter(|p| p.tag() == PieceTag::OnDirichlet)
            .map(|p| p.measure())
            .sum();
        let neu_len: f64 = sub
            .pieces
            .iter()
            .filter(|p| p.tag() == PieceTag::OnNeumann)
            .map(|p| p.measure())
            .sum();
        assert_relative_eq!(dir_len, r, max_relative = 1e-12); // left side
        assert_relative_eq!(neu_len, r, max_relative = 1e-12); // bottom side
    }

    #[test]
    fn corner_square_clips_to_quarter() {
        let d = unit_square_mixed();
        let sub = clip_subdomain(&d, &Point2::new(0.0, 0.0), SubShape::Square(0.1)).unwrap();
        let (x0, x1, y0, y1) = sub.clipped_rect().unwrap();
        assert_relative_eq!((x1 - x0) * (y1 - y0), 0.0025, max_relative = 1e-12);
        assert_relative_eq!(sub.perimeter(), 0.2, max_relative = 1e-12);
    }

    #[test]
    fn rejects_degenerate_size() {
        let d = unit_square_mixed();
        let err = clip_subdomain(&d, &Point2::new(0.5, 0.5), SubShape::Ball(0.0)).unwrap_err();
        assert!(matches!(err, Error::InvalidConfig(_)));
    }

    #[test]
    fn polar_radius_matches_geometry() {
        let d = unit_square_mixed();
        // Node on the bottom side: rays pointing up see the full radius,
        // rays pointing down are cut to zero.
        let sub = clip_subdomain(&d, &Point2::new(0.5, 0.0), SubShape::Ball(0.07)).unwrap();
        assert_relative_eq!(sub.radius_at(PI / 2.0), 0.07, max_relative = 1e-12);
        assert!(sub.radius_at(-PI / 2.0).abs() < 1e-15);
        let bps = sub.polar_breakpoints();
        assert_eq!(bps.len(), 2); // theta = 0 and theta = pi
    }
}
