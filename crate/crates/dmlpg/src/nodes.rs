//! Scattered node sets, regular grid generation, and radius queries.

use crate::domain::{BoundaryTag, DomainSpec};
use crate::error::{Error, Result};
use nalgebra::Point2;
use std::io::Write;

/// Scattered nodes covering the closed domain, with boundary tags and a
/// representative spacing `h`. Immutable after construction.
#[derive(Debug, Clone)]
pub struct NodeSet {
    domain: DomainSpec,
    points: Vec<Point2<f64>>,
    tags: Vec<BoundaryTag>,
    h: f64,
}

impl NodeSet {
    /// Builds a node set from raw data. Points must lie in the closed
    /// domain; boundary tags must be consistent with the point position
    /// within `1e-12 * h`.
    pub fn new(
        domain: DomainSpec,
        points: Vec<Point2<f64>>,
        tags: Vec<BoundaryTag>,
        h: f64,
    ) -> Result<Self> {
        assert_eq!(points.len(), tags.len());
        let tol = 1e-12 * h;
        for (p, tag) in points.iter().zip(&tags) {
            if !domain.contains(p, tol) {
                return Err(Error::InvalidConfig(format!(
                    "node ({}, {}) outside the domain",
                    p.x, p.y
                )));
            }
            if domain.tag_for(p, tol) != *tag {
                return Err(Error::InvalidConfig(format!(
                    "node ({}, {}) tagged {:?} but geometry says {:?}",
                    p.x,
                    p.y,
                    tag,
                    domain.tag_for(p, tol)
                )));
            }
        }
        Ok(NodeSet {
            domain,
            points,
            tags,
            h,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &Point2<f64> {
        &self.points[i]
    }

    pub fn points(&self) -> &[Point2<f64>] {
        &self.points
    }

    pub fn tag(&self, i: usize) -> BoundaryTag {
        self.tags[i]
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    /// Indices of all nodes with `|x - x_j| <= radius`, sorted ascending.
    ///
    /// Backed by a uniform bucket grid with cell size equal to the query
    /// radius, so a query inspects a bounded number of cells.
    pub fn neighbors_within(&self, x: &Point2<f64>, radius: f64) -> Vec<usize> {
        assert!(radius >= 0.0, "radius must be non-negative");
        if radius == 0.0 {
            return (0..self.len())
                .filter(|&j| (self.points[j] - x).norm() == 0.0)
                .collect();
        }
        BucketGrid::new(self, radius).query(x, radius)
    }

    /// Writes `x1,x2,tag` rows (with header) for debugging.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "x1,x2,tag")?;
        for (p, tag) in self.points.iter().zip(&self.tags) {
            writeln!(w, "{:.16e},{:.16e},{}", p.x, p.y, tag.as_str())?;
        }
        Ok(())
    }
}

/// Tensor-product grid with spacing `h` in both directions, including all
/// four boundaries. `h` must divide both side lengths (1e-12 relative).
pub fn make_regular_grid(domain: &DomainSpec, h: f64) -> Result<NodeSet> {
    if h <= 0.0 {
        return Err(Error::InvalidSpacing(format!("h = {h} must be positive")));
    }
    let counts = |len: f64| -> Result<usize> {
        let ratio = len / h;
        let n = ratio.round();
        if (ratio - n).abs() > 1e-12 * ratio.max(1.0) {
            return Err(Error::InvalidSpacing(format!(
                "h = {h} does not divide side length {len} (ratio {ratio})"
            )));
        }
        Ok(n as usize)
    };
    let nx = counts(domain.width())? + 1;
    let ny = counts(domain.height())? + 1;

    let coord = |min: f64, max: f64, i: usize, n: usize| -> f64 {
        // Endpoints are produced exactly so boundary tags never depend on
        // accumulated rounding.
        if i == 0 {
            min
        } else if i == n - 1 {
            max
        } else {
            min + h * i as f64
        }
    };

    let mut points = Vec::with_capacity(nx * ny);
    let mut tags = Vec::with_capacity(nx * ny);
    let tol = 1e-12 * h;
    for iy in 0..ny {
        for ix in 0..nx {
            let p = Point2::new(
                coord(domain.x_min, domain.x_max, ix, nx),
                coord(domain.y_min, domain.y_max, iy, ny),
            );
            tags.push(domain.tag_for(&p, tol));
            points.push(p);
        }
    }
    NodeSet::new(domain.clone(), points, tags, h)
}

/// Uniform bucket grid over the domain bounding box.
///
/// Cells are square with the given size; a radius query walks the
/// `ceil(r / cell)` ring of cells around the query point.
pub struct BucketGrid {
    cell: f64,
    x0: f64,
    y0: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<u32>>,
    points: Vec<Point2<f64>>,
}

impl BucketGrid {
    pub fn new(nodes: &NodeSet, cell: f64) -> Self {
        assert!(cell > 0.0);
        let d = nodes.domain();
        let x0 = d.x_min;
        let y0 = d.y_min;
        let nx = ((d.width() / cell).ceil() as usize).max(1);
        let ny = ((d.height() / cell).ceil() as usize).max(1);
        let mut buckets = vec![Vec::new(); nx * ny];
        for (j, p) in nodes.points().iter().enumerate() {
            let (ix, iy) = Self::cell_of(x0, y0, cell, nx, ny, p);
            buckets[iy * nx + ix].push(j as u32);
        }
        BucketGrid {
            cell,
            x0,
            y0,
            nx,
            ny,
            buckets,
            points: nodes.points().to_vec(),
        }
    }

    fn cell_of(
        x0: f64,
        y0: f64,
        cell: f64,
        nx: usize,
        ny: usize,
        p: &Point2<f64>,
    ) -> (usize, usize) {
        let ix = (((p.x - x0) / cell).floor() as isize).clamp(0, nx as isize - 1) as usize;
        let iy = (((p.y - y0) / cell).floor() as isize).clamp(0, ny as isize - 1) as usize;
        (ix, iy)
    }

    /// Indices with `|x - x_j| <= r`, sorted ascending.
    pub fn query(&self, x: &Point2<f64>, r: f64) -> Vec<usize> {
        let reach = (r / self.cell).ceil() as isize + 1;
        let cx = ((x.x - self.x0) / self.cell).floor() as isize;
        let cy = ((x.y - self.y0) / self.cell).floor() as isize;
        let r2 = r * r;
        let mut out = Vec::new();
        for iy in (cy - reach)..=(cy + reach) {
            if iy < 0 || iy >= self.ny as isize {
                continue;
            }
            for ix in (cx - reach)..=(cx + reach) {
                if ix < 0 || ix >= self.nx as isize {
                    continue;
                }
                for &j in &self.buckets[iy as usize * self.nx + ix as usize] {
                    let d = self.points[j as usize] - x;
                    if d.norm_squared() <= r2 {
                        out.push(j as usize);
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }
}
