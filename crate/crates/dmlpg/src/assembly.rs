//! Global assembly of the semi-discrete system `A1 du/dt + A u = b(t)`.
//!
//! Each node contributes one matrix row: a recovery of its weak-form (or
//! collocation) functionals over its stencil. Dirichlet nodes carry
//! point-value recovery rows with zeroed mass; for the collocation
//! variant, Neumann nodes carry flux recovery rows the same way.

use crate::basis::PolyBasis;
use crate::domain::BoundaryTag;
use crate::error::{Error, Result};
use crate::gmls::{
    build_stencil_from_indices, point_value_row, CoefficientRow, FunctionalVec, WeightConfig,
};
use crate::nodes::{BucketGrid, NodeSet};
use crate::quadrature::QuadratureConfig;
use crate::sparse::{CooMatrix, CsrMatrix};
use crate::subdomain::{clip_subdomain, SubShape};
use crate::weakforms::{
    dmlpg1_functionals, dmlpg2_functionals, dmlpg4_functionals, dmlpg5_functionals,
    neumann_samples, source_samples, CornerFactor, HeatProblem, NodeRole, TestFunctionKind,
    WeightedSamples,
};
use nalgebra::{DVector, Point2};
use rayon::prelude::*;
use std::sync::Arc;

/// Which local weak form drives the assembly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// First weak form, bump test function (domain integrals only).
    Dmlpg1,
    /// Strong collocation, no quadrature at all.
    Dmlpg2,
    /// Second weak form, companion-solution test function.
    Dmlpg4,
    /// First weak form, constant test function (boundary integrals).
    Dmlpg5,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Dmlpg1 => "dmlpg1",
            Method::Dmlpg2 => "dmlpg2",
            Method::Dmlpg4 => "dmlpg4",
            Method::Dmlpg5 => "dmlpg5",
        }
    }
}

/// Subdomain shape selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubdomainShape {
    Ball,
    Square,
}

/// Spatial discretization parameters.
#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    /// Basis degree m.
    pub degree: usize,
    /// Weight-function multipliers.
    pub weight: WeightConfig,
    /// Subdomain size as a multiple of the node spacing.
    pub r0_factor: f64,
    pub shape: SubdomainShape,
    pub quad: QuadratureConfig,
    /// Assemble rows in parallel.
    pub parallel: bool,
}

impl SolverConfig {
    pub fn for_degree(m: usize) -> Self {
        SolverConfig {
            degree: m,
            weight: WeightConfig::for_degree(m),
            r0_factor: 0.7,
            shape: SubdomainShape::Ball,
            quad: QuadratureConfig::default(),
            parallel: true,
        }
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self::for_degree(2)
    }
}

/// Per-row load description, evaluated lazily in time.
enum RowLoad {
    /// Weak rows: source integral plus Neumann-boundary integral.
    Weak {
        source: WeightedSamples,
        neumann: WeightedSamples,
    },
    /// Dirichlet rows: the boundary datum at the node.
    Dirichlet { at: Point2<f64> },
    /// Flux-collocation rows: the flux datum at the node.
    Flux { at: Point2<f64> },
}

/// The assembled differential-algebraic system
/// `A1 du/dt + A u = b(t)` with algebraic constraint rows listed in
/// `constraint_rows` (their `A1` rows are empty).
pub struct SemiDiscreteSystem {
    pub a1: CsrMatrix,
    pub a: CsrMatrix,
    pub constraint_rows: Vec<usize>,
    pub u0: DVector<f64>,
    pub t_final: f64,
    prob: Arc<HeatProblem>,
    loads: Vec<RowLoad>,
    is_constraint: Vec<bool>,
}

impl SemiDiscreteSystem {
    /// Raw system with zero loads; scalar surrogates in tests use this to
    /// pin the stepping formulas against closed forms.
    #[allow(dead_code)]
    pub(crate) fn surrogate(
        a1: CsrMatrix,
        a: CsrMatrix,
        u0: DVector<f64>,
        t_final: f64,
        prob: Arc<HeatProblem>,
    ) -> Self {
        let n = a.nrows();
        let loads = (0..n)
            .map(|_| RowLoad::Weak {
                source: WeightedSamples::default(),
                neumann: WeightedSamples::default(),
            })
            .collect();
        SemiDiscreteSystem {
            a1,
            a,
            constraint_rows: Vec::new(),
            u0,
            t_final,
            prob,
            loads,
            is_constraint: vec![false; n],
        }
    }

    pub fn n(&self) -> usize {
        self.loads.len()
    }

    pub fn is_constraint(&self, row: usize) -> bool {
        self.is_constraint[row]
    }

    pub fn problem(&self) -> &Arc<HeatProblem> {
        &self.prob
    }

    /// Load vector at time `t`.
    pub fn b(&self, t: f64) -> DVector<f64> {
        DVector::from_iterator(
            self.n(),
            self.loads.iter().map(|load| match load {
                RowLoad::Weak { source, neumann } => {
                    source.eval(|x| (self.prob.source)(x, t))
                        + neumann.eval(|x| (self.prob.u_neumann)(x, t))
                }
                RowLoad::Dirichlet { at } => (self.prob.u_dirichlet)(at, t),
                RowLoad::Flux { at } => (self.prob.u_neumann)(at, t),
            }),
        )
    }
}

struct NodeRow {
    mass: Option<CoefficientRow>,
    stiff: CoefficientRow,
    load: RowLoad,
    constraint: bool,
}

fn assemble_row(
    prob: &HeatProblem,
    nodes: &NodeSet,
    grid: &BucketGrid,
    method: Method,
    cfg: &SolverConfig,
    k: usize,
) -> Result<NodeRow> {
    let x_k = *nodes.point(k);
    let h = nodes.h();
    let basis = PolyBasis::new(cfg.degree, x_k, h);
    let delta = cfg.weight.support_radius(h);
    let neighbors = grid.query(&x_k, delta);
    let stencil = build_stencil_from_indices(nodes, neighbors, &x_k, &basis, &cfg.weight)?;

    // Dirichlet rows are identical across variants: point-value recovery
    // with no mass and the boundary datum as load.
    if nodes.tag(k) == BoundaryTag::Dirichlet {
        let stiff = stencil.solve(&FunctionalVec::point_value(&basis, &x_k));
        return Ok(NodeRow {
            mass: None,
            stiff,
            load: RowLoad::Dirichlet { at: x_k },
            constraint: true,
        });
    }

    let size = cfg.r0_factor * h;
    let shape = match cfg.shape {
        SubdomainShape::Ball => SubShape::Ball(size),
        SubdomainShape::Square => SubShape::Square(size),
    };
    if cfg.shape == SubdomainShape::Square
        && matches!(method, Method::Dmlpg1 | Method::Dmlpg4)
    {
        return Err(Error::InvalidConfig(format!(
            "{} uses radial test functions and requires ball subdomains",
            method.name()
        )));
    }

    match method {
        Method::Dmlpg2 => {
            if nodes.tag(k) == BoundaryTag::Neumann {
                let tol = 1e-12 * h;
                let normal = nodes.domain().normal_at(&x_k, tol).ok_or_else(|| {
                    Error::NotApplicable(format!(
                        "flux collocation at a corner node ({}, {})",
                        x_k.x, x_k.y
                    ))
                })?;
                let stiff =
                    stencil.solve(&dmlpg2_functionals(prob, &x_k, &basis, NodeRole::Neumann {
                        normal,
                    }));
                Ok(NodeRow {
                    mass: None,
                    stiff,
                    load: RowLoad::Flux { at: x_k },
                    constraint: true,
                })
            } else {
                let mut mass = stencil.solve(&FunctionalVec::point_value(&basis, &x_k));
                mass.scale((prob.rho_c)(&x_k));
                let mut stiff =
                    stencil.solve(&dmlpg2_functionals(prob, &x_k, &basis, NodeRole::Pde));
                stiff.scale(-1.0);
                Ok(NodeRow {
                    mass: Some(mass),
                    stiff,
                    load: RowLoad::Weak {
                        source: WeightedSamples {
                            points: vec![x_k],
                            factors: vec![1.0],
                        },
                        neumann: WeightedSamples::default(),
                    },
                    constraint: false,
                })
            }
        }
        Method::Dmlpg1 => {
            let sub = clip_subdomain(nodes.domain(), &x_k, shape)?;
            let v = TestFunctionKind::Mls1 {
                r0: size,
                shape: cfg.weight.shape_length(h),
            };
            let (l1, l2) = dmlpg1_functionals(prob, &sub, &basis, &v, &cfg.quad)?;
            let mass = stencil.solve(&l1);
            let mut stiff = stencil.solve(&l2);
            stiff.scale(-1.0);
            Ok(NodeRow {
                mass: Some(mass),
                stiff,
                load: RowLoad::Weak {
                    source: source_samples(prob, &sub, &v, &cfg.quad)?,
                    neumann: neumann_samples(&sub, &v, &cfg.quad),
                },
                constraint: false,
            })
        }
        Method::Dmlpg5 => {
            let sub = clip_subdomain(nodes.domain(), &x_k, shape)?;
            let v = TestFunctionKind::Constant1;
            let (l1, l3) = dmlpg5_functionals(prob, &sub, &basis, &cfg.quad)?;
            let mass = stencil.solve(&l1);
            let stiff = stencil.solve(&l3);
            Ok(NodeRow {
                mass: Some(mass),
                stiff,
                load: RowLoad::Weak {
                    source: source_samples(prob, &sub, &v, &cfg.quad)?,
                    neumann: neumann_samples(&sub, &v, &cfg.quad),
                },
                constraint: false,
            })
        }
        Method::Dmlpg4 => {
            let sub = clip_subdomain(nodes.domain(), &x_k, shape)?;
            let v = TestFunctionKind::Companion { r0: size };
            let corner = CornerFactor::for_point(nodes.domain(), &x_k, 1e-12 * h);
            let (l1, lk) = dmlpg4_functionals(prob, &sub, &basis, &corner, &cfg.quad)?;
            let mass = stencil.solve(&l1);
            let stiff = stencil.solve(&lk);
            Ok(NodeRow {
                mass: Some(mass),
                stiff,
                load: RowLoad::Weak {
                    source: source_samples(prob, &sub, &v, &cfg.quad)?,
                    neumann: neumann_samples(&sub, &v, &cfg.quad),
                },
                constraint: false,
            })
        }
    }
}

/// Assembles the semi-discrete system for one variant. Stencils,
/// functionals, and coefficient rows are built independently per node
/// (in parallel when configured) and merged in index order.
pub fn assemble(
    prob: &Arc<HeatProblem>,
    nodes: &NodeSet,
    method: Method,
    cfg: &SolverConfig,
) -> Result<SemiDiscreteSystem> {
    let n = nodes.len();
    let delta = cfg.weight.support_radius(nodes.h());
    let grid = BucketGrid::new(nodes, delta);

    let rows: Result<Vec<NodeRow>> = if cfg.parallel {
        (0..n)
            .into_par_iter()
            .map(|k| assemble_row(prob, nodes, &grid, method, cfg, k))
            .collect()
    } else {
        (0..n)
            .map(|k| assemble_row(prob, nodes, &grid, method, cfg, k))
            .collect()
    };
    let rows = rows?;

    let mut a1 = CooMatrix::new(n, n);
    let mut a = CooMatrix::new(n, n);
    let mut loads = Vec::with_capacity(n);
    let mut constraint_rows = Vec::new();
    let mut is_constraint = vec![false; n];
    for (k, row) in rows.into_iter().enumerate() {
        if let Some(mass) = row.mass {
            for (j, v) in mass.indices.iter().zip(mass.values.iter()) {
                a1.push(k, *j, *v);
            }
        }
        for (j, v) in row.stiff.indices.iter().zip(row.stiff.values.iter()) {
            a.push(k, *j, *v);
        }
        if row.constraint {
            constraint_rows.push(k);
            is_constraint[k] = true;
        }
        loads.push(row.load);
    }

    let u0 = DVector::from_iterator(n, nodes.points().iter().map(|p| (prob.u0)(p)));
    Ok(SemiDiscreteSystem {
        a1: a1.to_csr(),
        a: a.to_csr(),
        constraint_rows,
        u0,
        t_final: prob.t_final,
        prob: Arc::clone(prob),
        loads,
        is_constraint,
    })
}

/// Solves the stationary problem `A u = b(0)` by dense LU. Valid when
/// the loads and boundary data are time-independent.
pub fn solve_steady(sys: &SemiDiscreteSystem) -> Result<DVector<f64>> {
    let dense = sys.a.to_dense();
    let lu = dense.lu();
    lu.solve(&sys.b(0.0))
        .ok_or_else(|| Error::SingularSystem("stationary matrix is singular".into()))
}

/// Evaluates the nodal solution at arbitrary points by point-value
/// recovery over the same node set.
pub fn postprocess(
    nodes: &NodeSet,
    nodal: &DVector<f64>,
    queries: &[Point2<f64>],
    m: usize,
    weight: &WeightConfig,
) -> Result<Vec<f64>> {
    queries
        .iter()
        .map(|x| Ok(point_value_row(nodes, x, m, weight)?.apply(nodal)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{BcKind, DomainSpec};
    use crate::nodes::make_regular_grid;
    use approx::assert_relative_eq;
    use nalgebra::Vector2;

    /// Stationary manufactured problem with exact solution x1^2:
    /// kappa = 1, f = -2, zero flux on top/bottom, Dirichlet left/right.
    fn manufactured() -> Arc<HeatProblem> {
        Arc::new(HeatProblem {
            domain: DomainSpec::rectangle(
                0.0,
                1.0,
                0.0,
                1.0,
                BcKind::Dirichlet,
                BcKind::Dirichlet,
                BcKind::Neumann,
                BcKind::Neumann,
            ),
            kappa: Box::new(|_| 1.0),
            kappa_grad: Box::new(|_| Vector2::zeros()),
            rho_c: Box::new(|_| 1.0),
            source: Box::new(|_, _| -2.0),
            u_dirichlet: Box::new(|p, _| p.x * p.x),
            u_neumann: Box::new(|_, _| 0.0),
            u0: Box::new(|p| p.x * p.x),
            t_final: 1.0,
            exact: Some(Box::new(|p, _| p.x * p.x)),
        })
    }

    #[test]
    fn small_grid_assembly_and_dirichlet_reproduction() {
        let prob = manufactured();
        let nodes = make_regular_grid(&prob.domain, 0.5).unwrap();
        assert_eq!(nodes.len(), 9);
        let cfg = SolverConfig::default();
        let sys = assemble(&prob, &nodes, Method::Dmlpg1, &cfg).unwrap();
        assert_eq!(sys.a.nrows(), 9);
        assert_eq!(sys.a.ncols(), 9);
        assert_eq!(sys.a1.nrows(), 9);
        // Corner Dirichlet row applied to nodal samples of a quadratic
        // reproduces its value at the corner.
        let quad = |p: &Point2<f64>| 1.0 + p.x - 2.0 * p.y + 0.3 * p.x * p.y;
        let nodal = DVector::from_iterator(9, nodes.points().iter().map(quad));
        let k = 0; // corner (0, 0)
        assert!(sys.is_constraint(k));
        let (cols, vals) = sys.a.row(k);
        let recovered: f64 = cols.iter().zip(vals).map(|(j, v)| v * nodal[*j]).sum();
        assert_relative_eq!(recovered, quad(nodes.point(k)), max_relative = 1e-10);
        // Mass rows of constraints are empty.
        assert_eq!(sys.a1.row_nnz(k), 0);
    }

    #[test]
    fn row_sparsity_bounded_by_stencil_size() {
        let prob = manufactured();
        let nodes = make_regular_grid(&prob.domain, 0.1).unwrap();
        let cfg = SolverConfig::default();
        let sys = assemble(&prob, &nodes, Method::Dmlpg5, &cfg).unwrap();
        let delta = cfg.weight.support_radius(nodes.h());
        for k in 0..nodes.len() {
            let stencil_size = nodes.neighbors_within(nodes.point(k), delta).len();
            assert!(sys.a.row_nnz(k) <= stencil_size);
            assert!(sys.a1.row_nnz(k) <= stencil_size);
        }
    }

    #[test]
    fn steady_polynomial_exactness_on_coarse_grid() {
        let prob = manufactured();
        let nodes = make_regular_grid(&prob.domain, 0.2).unwrap();
        for method in [Method::Dmlpg1, Method::Dmlpg2, Method::Dmlpg5] {
            let sys = assemble(&prob, &nodes, method, &SolverConfig::default()).unwrap();
            let u = solve_steady(&sys).unwrap();
            let mut worst: f64 = 0.0;
            for (k, p) in nodes.points().iter().enumerate() {
                worst = worst.max((u[k] - p.x * p.x).abs());
            }
            assert!(worst < 1e-8, "{}: max error {worst:.3e}", method.name());
        }
    }

    #[test]
    fn serial_and_parallel_assembly_agree_bitwise() {
        let prob = manufactured();
        let nodes = make_regular_grid(&prob.domain, 0.2).unwrap();
        let mut cfg = SolverConfig {
            parallel: true,
            ..SolverConfig::default()
        };
        let par = assemble(&prob, &nodes, Method::Dmlpg1, &cfg).unwrap();
        cfg.parallel = false;
        let ser = assemble(&prob, &nodes, Method::Dmlpg1, &cfg).unwrap();
        let b_par = par.b(0.4);
        let b_ser = ser.b(0.4);
        for k in 0..nodes.len() {
            let (_, vp) = par.a.row(k);
            let (_, vs) = ser.a.row(k);
            for (x, y) in vp.iter().zip(vs) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
            assert_eq!(b_par[k].to_bits(), b_ser[k].to_bits());
        }
    }

    #[test]
    fn square_subdomains_rejected_for_radial_test_functions() {
        let prob = manufactured();
        let nodes = make_regular_grid(&prob.domain, 0.2).unwrap();
        let cfg = SolverConfig {
            shape: SubdomainShape::Square,
            ..SolverConfig::default()
        };
        assert!(matches!(
            assemble(&prob, &nodes, Method::Dmlpg1, &cfg),
            Err(Error::InvalidConfig(_))
        ));
        // The constant test function has no radial structure; squares work.
        let sys = assemble(&prob, &nodes, Method::Dmlpg5, &cfg).unwrap();
        let u = solve_steady(&sys).unwrap();
        for (k, p) in nodes.points().iter().enumerate() {
            assert!((u[k] - p.x * p.x).abs() < 1e-8);
        }
    }

    #[test]
    fn postprocess_reproduces_polynomial_data() {
        let prob = manufactured();
        let nodes = make_regular_grid(&prob.domain, 0.1).unwrap();
        let poly = |p: &Point2<f64>| 0.3 - p.x + p.y + 2.0 * p.x * p.x;
        let nodal = DVector::from_iterator(nodes.len(), nodes.points().iter().map(poly));
        let queries = [Point2::new(0.42, 0.58), Point2::new(0.0, 0.97)];
        let vals = postprocess(&nodes, &nodal, &queries, 2, &WeightConfig::for_degree(2))
            .unwrap();
        for (q, v) in queries.iter().zip(vals) {
            assert_relative_eq!(v, poly(q), max_relative = 1e-10);
        }
    }
}
