//! Rectangular domains with per-side boundary conditions.

use nalgebra::{Point2, Vector2};

/// One of the four sides of a rectangular domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl Side {
    /// All sides in a fixed order (Left, Right, Bottom, Top).
    pub const ALL: [Side; 4] = [Side::Left, Side::Right, Side::Bottom, Side::Top];

    fn index(self) -> usize {
        match self {
            Side::Left => 0,
            Side::Right => 1,
            Side::Bottom => 2,
            Side::Top => 3,
        }
    }
}

/// Kind of boundary condition imposed on a side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BcKind {
    Dirichlet,
    Neumann,
}

/// Classification of a node with respect to the boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryTag {
    Interior,
    Dirichlet,
    Neumann,
}

impl BoundaryTag {
    /// Short form used in CSV output.
    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryTag::Interior => "interior",
            BoundaryTag::Dirichlet => "dirichlet",
            BoundaryTag::Neumann => "neumann",
        }
    }
}

/// Axis-aligned rectangle with a boundary-condition kind per side.
///
/// The four sides cover the whole boundary; a corner belongs to both of
/// its adjacent sides and is tagged Dirichlet when either side is
/// Dirichlet (the Dirichlet datum constrains the corner value).
#[derive(Debug, Clone)]
pub struct DomainSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    sides: [BcKind; 4],
}

impl DomainSpec {
    /// Rectangle `[x_min, x_max] x [y_min, y_max]` with the given side kinds.
    #[allow(clippy::too_many_arguments)]
    pub fn rectangle(
        x_min: f64,
        x_max: f64,
        y_min: f64,
        y_max: f64,
        left: BcKind,
        right: BcKind,
        bottom: BcKind,
        top: BcKind,
    ) -> Self {
        assert!(x_max > x_min && y_max > y_min, "degenerate rectangle");
        DomainSpec {
            x_min,
            x_max,
            y_min,
            y_max,
            sides: [left, right, bottom, top],
        }
    }

    /// Unit square with Dirichlet conditions on every side.
    pub fn unit_square_dirichlet() -> Self {
        Self::rectangle(
            0.0,
            1.0,
            0.0,
            1.0,
            BcKind::Dirichlet,
            BcKind::Dirichlet,
            BcKind::Dirichlet,
            BcKind::Dirichlet,
        )
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn side_kind(&self, side: Side) -> BcKind {
        self.sides[side.index()]
    }

    /// Outward unit normal of a side.
    pub fn outward_normal(&self, side: Side) -> Vector2<f64> {
        match side {
            Side::Left => Vector2::new(-1.0, 0.0),
            Side::Right => Vector2::new(1.0, 0.0),
            Side::Bottom => Vector2::new(0.0, -1.0),
            Side::Top => Vector2::new(0.0, 1.0),
        }
    }

    /// Coordinate value of the line carrying a side.
    pub fn side_coordinate(&self, side: Side) -> f64 {
        match side {
            Side::Left => self.x_min,
            Side::Right => self.x_max,
            Side::Bottom => self.y_min,
            Side::Top => self.y_max,
        }
    }

    /// True when the point lies in the closed rectangle (within `tol`).
    pub fn contains(&self, p: &Point2<f64>, tol: f64) -> bool {
        p.x >= self.x_min - tol
            && p.x <= self.x_max + tol
            && p.y >= self.y_min - tol
            && p.y <= self.y_max + tol
    }

    /// Sides on which the point lies, within `tol`.
    pub fn sides_through(&self, p: &Point2<f64>, tol: f64) -> Vec<Side> {
        let mut out = Vec::new();
        if (p.x - self.x_min).abs() <= tol {
            out.push(Side::Left);
        }
        if (p.x - self.x_max).abs() <= tol {
            out.push(Side::Right);
        }
        if (p.y - self.y_min).abs() <= tol {
            out.push(Side::Bottom);
        }
        if (p.y - self.y_max).abs() <= tol {
            out.push(Side::Top);
        }
        out
    }

    /// Boundary tag for a point: Dirichlet wins over Neumann at corners.
    pub fn tag_for(&self, p: &Point2<f64>, tol: f64) -> BoundaryTag {
        let sides = self.sides_through(p, tol);
        if sides.is_empty() {
            return BoundaryTag::Interior;
        }
        if sides.iter().any(|s| self.side_kind(*s) == BcKind::Dirichlet) {
            BoundaryTag::Dirichlet
        } else {
            BoundaryTag::Neumann
        }
    }

    /// Outward normal at a boundary point lying on exactly one side.
    ///
    /// Returns `None` for interior points and corners (where the normal
    /// is not defined).
    pub fn normal_at(&self, p: &Point2<f64>, tol: f64) -> Option<Vector2<f64>> {
        let sides = self.sides_through(p, tol);
        if sides.len() == 1 {
            Some(self.outward_normal(sides[0]))
        } else {
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tags_and_normals() {
        let d = DomainSpec::rectangle(
            0.0,
            1.0,
            0.0,
            1.0,
            BcKind::Dirichlet,
            BcKind::Dirichlet,
            BcKind::Neumann,
            BcKind::Neumann,
        );
        let tol = 1e-12;
        assert_eq!(d.tag_for(&Point2::new(0.5, 0.5), tol), BoundaryTag::Interior);
        assert_eq!(d.tag_for(&Point2::new(0.0, 0.5), tol), BoundaryTag::Dirichlet);
        assert_eq!(d.tag_for(&Point2::new(0.5, 0.0), tol), BoundaryTag::Neumann);
        // Corner shared by a Dirichlet and a Neumann side: Dirichlet wins.
        assert_eq!(d.tag_for(&Point2::new(0.0, 0.0), tol), BoundaryTag::Dirichlet);

        let n = d.normal_at(&Point2::new(0.5, 1.0), tol).unwrap();
        assert_eq!((n.x, n.y), (0.0, 1.0));
        assert!(d.normal_at(&Point2::new(0.0, 0.0), tol).is_none());
    }
}
