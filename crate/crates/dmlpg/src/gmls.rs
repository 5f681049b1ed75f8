//! Direct recovery of linear functionals from nodal values.
//!
//! Given a functional's action on the local polynomial space and a
//! weighted node stencil, the recovery coefficients are
//!
//! ```text
//! a(lambda) = W P^T (P W P^T)^{-1} lambda(P)
//! ```
//!
//! so that `lambda(u) ~ sum_j a_j u(x_j)`. The moment matrix `P W P^T` is
//! factorized once per stencil and reused for every functional anchored
//! at the same point; this is what makes weak-form assembly cheap, since
//! the integrations happen inside `lambda(P)` over plain polynomials.

use crate::basis::PolyBasis;
use crate::error::{Error, Result};
use crate::nodes::NodeSet;
use nalgebra::{DMatrix, DVector, Point2};

/// Condition-estimate threshold beyond which a stencil is rejected.
const COND_LIMIT: f64 = 1e12;

/// Dimensionless weight-function parameters. The support radius is
/// `delta0 * h` and the Gaussian shape length is `c0 * h` for a node set
/// of spacing `h`.
#[derive(Debug, Clone, Copy)]
pub struct WeightConfig {
    pub delta0: f64,
    pub c0: f64,
}

impl WeightConfig {
    /// Defaults tied to the basis degree: `delta0 = 2m` keeps enough
    /// nodes in the support for the moment matrix to have full rank.
    /// The shape multiplier sits in the stable range (0.4, 1); the value
    /// 0.8 exhibits the clean `h^(m+1-k)` convergence rate on coarse
    /// grid sequences, where sharper weights are still pre-asymptotic.
    pub fn for_degree(m: usize) -> Self {
        WeightConfig {
            delta0: if m == 0 { 2.0 } else { 2.0 * m as f64 },
            c0: 0.8,
        }
    }

    pub fn support_radius(&self, h: f64) -> f64 {
        self.delta0 * h
    }

    pub fn shape_length(&self, h: f64) -> f64 {
        self.c0 * h
    }
}

/// Truncated Gaussian weight: positive inside the support radius,
/// exactly zero at and beyond it, continuous at the cutoff.
pub fn gaussian_weight(cfg: &WeightConfig, h: f64, r: f64) -> f64 {
    truncated_gaussian(r, cfg.support_radius(h), cfg.shape_length(h))
}

/// `[exp(-(r/c)^2) - exp(-(d/c)^2)] / [1 - exp(-(d/c)^2)]` for `r <= d`,
/// zero beyond. Shared by the moving-least-squares weight and the
/// bump-type local test function.
pub fn truncated_gaussian(r: f64, support: f64, shape: f64) -> f64 {
    if r >= support {
        return 0.0;
    }
    let cut = (-(support / shape) * (support / shape)).exp();
    ((-(r / shape) * (r / shape)).exp() - cut) / (1.0 - cut)
}

/// One linear functional evaluated on every basis polynomial, together
/// with the basis metadata it was computed against.
#[derive(Debug, Clone)]
pub struct FunctionalVec {
    pub values: DVector<f64>,
    pub degree: usize,
    pub shift: Point2<f64>,
}

impl FunctionalVec {
    pub fn new(values: DVector<f64>, basis: &PolyBasis) -> Self {
        assert_eq!(values.len(), basis.dim());
        FunctionalVec {
            values,
            degree: basis.degree(),
            shift: *basis.shift(),
        }
    }

    /// Point-evaluation functional `u -> u(x)`.
    pub fn point_value(basis: &PolyBasis, x: &Point2<f64>) -> Self {
        Self::new(basis.eval(x), basis)
    }
}

/// Recovery coefficients for one functional: global node indices and the
/// matching coefficient values (one sparse matrix row).
#[derive(Debug, Clone)]
pub struct CoefficientRow {
    pub indices: Vec<usize>,
    pub values: DVector<f64>,
}

impl CoefficientRow {
    /// Applies the row to a global nodal vector.
    pub fn apply(&self, nodal: &DVector<f64>) -> f64 {
        self.indices
            .iter()
            .zip(self.values.iter())
            .map(|(&j, a)| a * nodal[j])
            .sum()
    }

    pub fn scale(&mut self, s: f64) {
        self.values *= s;
    }
}

/// Local node subset with its weights, basis-value matrix, and the
/// factorization backing the recovery solves. Immutable; safe to share
/// across threads.
///
/// The recovery `a = W P^T (P W P^T)^{-1} lambda(P)` is evaluated through
/// a QR factorization of `B = W^{1/2} P^T` as `a = W^{1/2} Q R^{-T}
/// lambda(P)`, which is algebraically identical but carries the square
/// root of the moment-matrix condition number. One-sided boundary
/// stencils with sharply graded weights reach moment conditions near
/// 1e11, where the normal-equations route loses the last digits of the
/// reproduction identity.
#[derive(Debug)]
pub struct GmlsStencil {
    indices: Vec<usize>,
    basis: PolyBasis,
    p: DMatrix<f64>,
    weights: DVector<f64>,
    sqrt_weights: DVector<f64>,
    q_thin: DMatrix<f64>,
    r_upper: DMatrix<f64>,
    cond: f64,
}

impl GmlsStencil {
    pub fn node_indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn basis(&self) -> &PolyBasis {
        &self.basis
    }

    /// Node weights in stencil order; zero only for nodes exactly on the
    /// support boundary.
    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    /// 1-norm condition estimate of the moment matrix.
    pub fn cond_estimate(&self) -> f64 {
        self.cond
    }

    /// One application of `W^{1/2} Q R^{-T}` to a functional vector.
    fn recover(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let w = self
            .r_upper
            .tr_solve_upper_triangular(rhs)
            .expect("rank verified at stencil construction");
        let mut a = &self.q_thin * w;
        a.component_mul_assign(&self.sqrt_weights);
        a
    }

    /// Coefficient row for one functional on this stencil.
    pub fn solve(&self, f: &FunctionalVec) -> CoefficientRow {
        debug_assert_eq!(f.degree, self.basis.degree());
        debug_assert_eq!(f.shift, *self.basis.shift());
        let mut a = self.recover(&f.values);
        // Refinement on the reproduction residual lambda(P) - P a keeps
        // the recovery identity at machine precision; the residual is
        // accumulated with error-free transformations because the basis
        // values span many orders of magnitude on graded stencils.
        for _ in 0..2 {
            let residual = compensated_residual(&self.p, &a, &f.values);
            a += self.recover(&residual);
        }
        CoefficientRow {
            indices: self.indices.clone(),
            values: a,
        }
    }
}

/// Builds a stencil over all nodes within the weight support of `center`.
///
/// Nodes exactly on the support boundary are kept with zero weight (they
/// drop out of the moment matrix and receive zero coefficients). Fails
/// when fewer nodes than the basis dimension are inside the support, or
/// when the moment matrix is numerically rank deficient.
pub fn build_stencil(
    nodes: &NodeSet,
    center: &Point2<f64>,
    basis: &PolyBasis,
    cfg: &WeightConfig,
) -> Result<GmlsStencil> {
    let delta = cfg.support_radius(nodes.h());
    let indices = nodes.neighbors_within(center, delta);
    build_stencil_from_indices(nodes, indices, center, basis, cfg)
}

/// Stencil construction from a precomputed neighbor list (assembly keeps
/// one bucket grid for the whole node set and feeds the lists here).
pub(crate) fn build_stencil_from_indices(
    nodes: &NodeSet,
    indices: Vec<usize>,
    center: &Point2<f64>,
    basis: &PolyBasis,
    cfg: &WeightConfig,
) -> Result<GmlsStencil> {
    let q = basis.dim();
    let n = indices.len();
    if n < q {
        return Err(Error::StencilDeficient {
            at: [center.x, center.y],
            needed: q,
            found: n,
        });
    }
    let h = nodes.h();
    let weights = DVector::from_iterator(
        n,
        indices
            .iter()
            .map(|&j| gaussian_weight(cfg, h, (nodes.point(j) - center).norm())),
    );
    let sqrt_weights = weights.map(f64::sqrt);
    let mut p = DMatrix::zeros(q, n);
    for (col, &j) in indices.iter().enumerate() {
        p.set_column(col, &basis.eval(nodes.point(j)));
    }
    // B = W^{1/2} P^T, one row per stencil node.
    let mut b = DMatrix::zeros(n, q);
    for row in 0..n {
        let sw = sqrt_weights[row];
        for k in 0..q {
            b[(row, k)] = sw * p[(k, row)];
        }
    }
    let qr = b.qr();
    let r_upper = qr.r();
    let q_thin = qr.q();
    let diag_max = (0..q).map(|i| r_upper[(i, i)].abs()).fold(0.0, f64::max);
    if !diag_max.is_finite()
        || diag_max <= 0.0
        || (0..q).any(|i| r_upper[(i, i)].abs() < 1e-15 * diag_max)
    {
        return Err(Error::IllConditioned {
            at: [center.x, center.y],
            cond: f64::INFINITY,
        });
    }
    let cond = moment_cond_1norm(&r_upper);
    if cond > COND_LIMIT {
        return Err(Error::IllConditioned {
            at: [center.x, center.y],
            cond,
        });
    }
    Ok(GmlsStencil {
        indices,
        basis: basis.clone(),
        p,
        weights,
        sqrt_weights,
        q_thin,
        r_upper,
        cond,
    })
}

/// Residual `b - P a` accumulated with error-free transformations
/// (two-product via fused multiply-add, two-sum): basis values on graded
/// stencils span many orders of magnitude and a plain dot product loses
/// the digits the refinement needs.
fn compensated_residual(p: &DMatrix<f64>, a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    let (q, n) = p.shape();
    DVector::from_fn(q, |i, _| {
        let mut s = b[i];
        let mut c = 0.0;
        for k in 0..n {
            let prod = -p[(i, k)] * a[k];
            let e_prod = (-p[(i, k)]).mul_add(a[k], -prod);
            let t = s + prod;
            let bv = t - s;
            let e_sum = (s - (t - bv)) + (prod - bv);
            s = t;
            c += e_prod + e_sum;
        }
        s + c
    })
}

/// Exact 1-norm condition number of the moment matrix `M = R^T R`,
/// computed from the QR factor by solving for every identity column.
fn moment_cond_1norm(r_upper: &DMatrix<f64>) -> f64 {
    let q = r_upper.nrows();
    let m = r_upper.transpose() * r_upper;
    let norm_m = (0..q)
        .map(|j| m.column(j).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0_f64, f64::max);
    let mut norm_inv: f64 = 0.0;
    let mut e = DVector::zeros(q);
    for j in 0..q {
        e.fill(0.0);
        e[j] = 1.0;
        let w = r_upper
            .tr_solve_upper_triangular(&e)
            .and_then(|w| r_upper.solve_upper_triangular(&w));
        match w {
            Some(col) => norm_inv = norm_inv.max(col.iter().map(|v| v.abs()).sum()),
            None => return f64::INFINITY,
        }
    }
    norm_m * norm_inv
}

/// Recovery coefficients for one functional; see [`GmlsStencil::solve`].
pub fn solve_coefficients(stencil: &GmlsStencil, f: &FunctionalVec) -> CoefficientRow {
    stencil.solve(f)
}

/// Row recovering the point value `u(x)` from nodal values, used both for
/// Dirichlet rows and as the postprocessing interpolant.
pub fn point_value_row(
    nodes: &NodeSet,
    x: &Point2<f64>,
    m: usize,
    cfg: &WeightConfig,
) -> Result<CoefficientRow> {
    let basis = PolyBasis::new(m, *x, nodes.h());
    let stencil = build_stencil(nodes, x, &basis, cfg)?;
    Ok(stencil.solve(&FunctionalVec::point_value(&basis, x)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{BcKind, BoundaryTag, DomainSpec};
    use crate::nodes::make_regular_grid;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::TAU;

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
    fn weight_endpoint_values() {
        let cfg = WeightConfig {
            delta0: 4.0,
            c0: 0.6,
        };
        let h = 0.1;
        assert_eq!(gaussian_weight(&cfg, h, 0.0), 1.0);
        assert_eq!(gaussian_weight(&cfg, h, cfg.support_radius(h)), 0.0);
        assert_eq!(gaussian_weight(&cfg, h, 1.0), 0.0);
        // Direct formula evaluation as the oracle.
        let (r, delta, c): (f64, f64, f64) = (0.2, 0.4, 0.06);
        let cut = (-(delta / c) * (delta / c)).exp();
        let expected = ((-(r / c) * (r / c)).exp() - cut) / (1.0 - cut);
        assert_relative_eq!(gaussian_weight(&cfg, h, r), expected, epsilon = 1e-15);
    }

    #[test]
    fn single_node_supports_the_constant_basis() {
        let domain = unit_square_mixed();
        let node = Point2::new(0.5, 0.5);
        let nodes = NodeSet::new(domain, vec![node], vec![BoundaryTag::Interior], 0.1).unwrap();
        let center = Point2::new(0.52, 0.5);
        let basis = PolyBasis::new(0, center, nodes.h());
        let cfg = WeightConfig::for_degree(0);
        let st = build_stencil(&nodes, &center, &basis, &cfg).unwrap();
        assert_eq!(st.len(), 1);
        assert!(st.weights()[0] > 0.0);
        // Recovering any constant functional returns the single value.
        let row = st.solve(&FunctionalVec::point_value(&basis, &center));
        assert_relative_eq!(row.values[0], 1.0, max_relative = 1e-14);
    }

    #[test]
    fn constant_recovery_is_weighted_mean() {
        // Six nodes on a circle around the center carry equal weights;
        // recovering u(center) with the constant basis gives the plain
        // mean.
        let domain = unit_square_mixed();
        let center = Point2::new(0.5, 0.5);
        let n = 6;
        let pts: Vec<Point2<f64>> = (0..n)
            .map(|i| {
                let t = TAU * i as f64 / n as f64;
                center + 0.1 * nalgebra::Vector2::new(t.cos(), t.sin())
            })
            .collect();
        let tags = vec![BoundaryTag::Interior; n];
        let nodes = NodeSet::new(domain, pts, tags, 0.1).unwrap();
        let basis = PolyBasis::new(0, center, nodes.h());
        let cfg = WeightConfig {
            delta0: 2.0,
            c0: 0.6,
        };
        let st = build_stencil(&nodes, &center, &basis, &cfg).unwrap();
        let row = st.solve(&FunctionalVec::point_value(&basis, &center));
        assert_eq!(row.values.len(), n);
        for a in row.values.iter() {
            assert_relative_eq!(*a, 1.0 / n as f64, max_relative = 1e-12);
        }
    }

    #[test]
    fn stencil_size_on_regular_grid() {
        let nodes = make_regular_grid(&unit_square_mixed(), 0.1).unwrap();
        let center = *nodes.point(60); // (0.5, 0.5) on the 11x11 grid
        let basis = PolyBasis::new(2, center, nodes.h());
        let cfg = WeightConfig::for_degree(2);
        let st = build_stencil(&nodes, &center, &basis, &cfg).unwrap();
        // Brute-force count of grid nodes within 4h (inclusive).
        let delta = cfg.support_radius(nodes.h());
        let brute = (0..nodes.len())
            .filter(|&j| (nodes.point(j) - center).norm() <= delta)
            .count();
        assert_eq!(brute, 49);
        assert_eq!(st.len(), 49);
    }

    #[test]
    fn deficient_stencil_reports_counts() {
        let domain = unit_square_mixed();
        let pts = vec![Point2::new(0.1, 0.1), Point2::new(0.9, 0.9)];
        let tags = vec![BoundaryTag::Interior; 2];
        let nodes = NodeSet::new(domain, pts, tags, 0.1).unwrap();
        let center = Point2::new(0.9, 0.1);
        let basis = PolyBasis::new(2, center, nodes.h());
        let err = build_stencil(&nodes, &center, &basis, &WeightConfig::for_degree(2))
            .unwrap_err();
        match err {
            Error::StencilDeficient { needed, found, .. } => {
                assert_eq!(needed, 6);
                assert_eq!(found, 0);
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn collinear_nodes_are_rejected_as_ill_conditioned() {
        // Six nodes on one horizontal line cannot support the full
        // two-variable linear space.
        let domain = unit_square_mixed();
        let pts: Vec<Point2<f64>> = (0..6).map(|i| Point2::new(0.2 + 0.1 * i as f64, 0.5)).collect();
        let tags = vec![BoundaryTag::Interior; 6];
        let nodes = NodeSet::new(domain, pts, tags, 0.1).unwrap();
        let center = Point2::new(0.45, 0.5);
        let basis = PolyBasis::new(1, center, nodes.h());
        let cfg = WeightConfig {
            delta0: 4.0,
            c0: 0.8,
        };
        let err = build_stencil(&nodes, &center, &basis, &cfg).unwrap_err();
        assert!(matches!(err, Error::IllConditioned { .. }), "{err}");
    }

    #[test]
    fn polynomial_reproduction_on_random_stencils() {
        let nodes = make_regular_grid(&unit_square_mixed(), 0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for m in 1..=3usize {
            let cfg = WeightConfig::for_degree(m);
            for _ in 0..20 {
                let center = Point2::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
                let basis = PolyBasis::new(m, center, nodes.h());
                let st = build_stencil(&nodes, &center, &basis, &cfg).unwrap();
                // lambda = gradient component at a nearby point.
                let at = Point2::new(
                    (center.x + 0.3 * nodes.h()).min(1.0),
                    (center.y - 0.2 * nodes.h()).max(0.0),
                );
                let f = FunctionalVec::new(basis.eval_gradient(&at).column(0).into(), &basis);
                let row = st.solve(&f);
                let scale = f.values.amax().max(1.0);
                for q in 0..basis.dim() {
                    let recovered: f64 = row
                        .indices
                        .iter()
                        .zip(row.values.iter())
                        .map(|(&j, a)| a * basis.eval(nodes.point(j))[q])
                        .sum();
                    assert!(
                        (recovered - f.values[q]).abs() <= 1e-10 * scale.max(f.values[q].abs()),
                        "m={m} q={q}: {recovered} vs {}",
                        f.values[q]
                    );
                }
            }
        }
    }

    #[test]
    fn derivative_recovery_converges_at_second_order() {
        let u = |p: &Point2<f64>| p.x.sin() * p.y.cos();
        let ux = |p: &Point2<f64>| p.x.cos() * p.y.cos();
        let cfg = WeightConfig::for_degree(2);
        let z = Point2::new(0.52, 0.47);
        let mut errors = Vec::new();
        for h in [0.1, 0.05, 0.025] {
            let nodes = make_regular_grid(&unit_square_mixed(), h).unwrap();
            let basis = PolyBasis::new(2, z, nodes.h());
            let st = build_stencil(&nodes, &z, &basis, &cfg).unwrap();
            let f = FunctionalVec::new(basis.eval_gradient(&z).column(0).into(), &basis);
            let row = st.solve(&f);
            let nodal = DVector::from_iterator(nodes.len(), nodes.points().iter().map(u));
            errors.push((row.apply(&nodal) - ux(&z)).abs());
        }
        let slope = ((errors[0] / errors[2]).ln() / (4.0_f64).ln()).abs();
        assert!(slope >= 1.8, "observed order {slope}, errors {errors:?}");
    }

    #[test]
    fn point_value_row_is_exact_on_polynomials() {
        let nodes = make_regular_grid(&unit_square_mixed(), 0.1).unwrap();
        let cfg = WeightConfig::for_degree(2);
        let poly = |p: &Point2<f64>| 2.0 - p.x + 3.0 * p.y + 0.5 * p.x * p.x - p.x * p.y;
        let nodal = DVector::from_iterator(nodes.len(), nodes.points().iter().map(poly));
        for x in [Point2::new(0.5, 0.5), Point2::new(0.55, 0.45)] {
            let row = point_value_row(&nodes, &x, 2, &cfg).unwrap();
            assert_relative_eq!(row.apply(&nodal), poly(&x), max_relative = 1e-10);
        }
    }

    #[test]
    fn point_value_error_shrinks_at_third_order() {
        let u = |p: &Point2<f64>| (std::f64::consts::PI * p.x).sin()
            * (std::f64::consts::PI * p.y).cos();
        let cfg = WeightConfig::for_degree(2);
        let x = Point2::new(0.525, 0.475);
        let mut errors = Vec::new();
        for h in [0.1, 0.05] {
            let nodes = make_regular_grid(&unit_square_mixed(), h).unwrap();
            let nodal = DVector::from_iterator(nodes.len(), nodes.points().iter().map(u));
            let row = point_value_row(&nodes, &x, 2, &cfg).unwrap();
            errors.push((row.apply(&nodal) - u(&x)).abs());
        }
        assert!(errors[1] < errors[0] / 4.0, "errors {errors:?}");
    }

    #[test]
    fn factorization_reuse_is_bitwise_reproducible() {
        let nodes = make_regular_grid(&unit_square_mixed(), 0.1).unwrap();
        let center = Point2::new(0.5, 0.5);
        let basis = PolyBasis::new(2, center, nodes.h());
        let cfg = WeightConfig::for_degree(2);
        let shared = build_stencil(&nodes, &center, &basis, &cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let vals =
                DVector::from_iterator(basis.dim(), (0..basis.dim()).map(|_| rng.gen::<f64>()));
            let f = FunctionalVec::new(vals, &basis);
            let from_shared = shared.solve(&f);
            let fresh = build_stencil(&nodes, &center, &basis, &cfg)
                .unwrap()
                .solve(&f);
            for (a, b) in from_shared.values.iter().zip(fresh.values.iter()) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}
