//! Local weak forms evaluated on the polynomial basis.
//!
//! Every variant reduces to a pair of functional vectors per node: a
//! mass-side functional applied to the time derivative and a
//! stiffness-side functional applied to the field, with signs arranged so
//! that assembly always produces `M du/dt + K u = b(t)` with positive
//! mass and dissipative stiffness. All functional vectors are
//! time-independent; time enters only through the load integrals.

use crate::basis::PolyBasis;
use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::gmls::{truncated_gaussian, FunctionalVec};
use crate::quadrature::{
    clipped_region_rule, gauss_segment, log_segment_rule, log_singular_rule, QuadratureConfig,
};
use crate::subdomain::{BoundaryPiece, PieceTag, Subdomain};
use nalgebra::{DVector, Point2, Vector2};
use std::f64::consts::{PI, TAU};

/// Scalar coefficient field, e.g. conductivity.
pub type ScalarField = Box<dyn Fn(&Point2<f64>) -> f64 + Send + Sync>;
/// Vector coefficient field, e.g. the conductivity gradient.
pub type VectorField = Box<dyn Fn(&Point2<f64>) -> Vector2<f64> + Send + Sync>;
/// Space-time data field, e.g. sources and boundary values.
pub type SpaceTimeField = Box<dyn Fn(&Point2<f64>, f64) -> f64 + Send + Sync>;

/// Transient heat conduction problem on a rectangular domain:
///
/// ```text
/// rho c du/dt = div(kappa grad u) + f   in Omega,
/// u = u_D on Gamma_D,   kappa du/dn = u_N on Gamma_N,
/// u(., 0) = u0.
/// ```
pub struct HeatProblem {
    pub domain: DomainSpec,
    /// Conductivity (W m^-1 C^-1), strictly positive.
    pub kappa: ScalarField,
    /// Gradient of the conductivity.
    pub kappa_grad: VectorField,
    /// Volumetric heat capacity rho*c (J m^-3 C^-1), strictly positive.
    pub rho_c: ScalarField,
    /// Internal heat source f(x, t) (W m^-3).
    pub source: SpaceTimeField,
    /// Dirichlet datum on Gamma_D.
    pub u_dirichlet: SpaceTimeField,
    /// Prescribed flux kappa du/dn on Gamma_N.
    pub u_neumann: SpaceTimeField,
    /// Initial temperature field.
    pub u0: ScalarField,
    /// Final time (s).
    pub t_final: f64,
    /// Analytic solution when available, for error reporting.
    pub exact: Option<SpaceTimeField>,
}

/// Local test function attached to a subdomain center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestFunctionKind {
    /// Truncated Gaussian bump vanishing at `r0` (first weak form with
    /// the boundary flux term suppressed).
    Mls1 { r0: f64, shape: f64 },
    /// Constant test function (first weak form, boundary-flux variant).
    Constant1,
    /// Point evaluation (strong collocation).
    Dirac,
    /// Companion solution of the 2D Laplacian, `ln(r0/r)/(2 pi)`,
    /// vanishing at `r0` (second weak form).
    Companion { r0: f64 },
}

impl TestFunctionKind {
    /// Value at distance `r` from the center. The companion kernel is
    /// singular at `r = 0`; quadrature rules for it fold the kernel into
    /// their weights instead of calling this at the singularity.
    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            TestFunctionKind::Mls1 { r0, shape } => truncated_gaussian(r, r0, shape),
            TestFunctionKind::Constant1 => 1.0,
            TestFunctionKind::Dirac => panic!("point test functions have no pointwise values"),
            TestFunctionKind::Companion { r0 } => (r0 / r).ln() / TAU,
        }
    }

    /// Radial derivative divided by `r`; finite at the center for the
    /// bump test function, which is all the gradient evaluation needs.
    fn radial_derivative_over_r(&self, r: f64) -> f64 {
        match *self {
            TestFunctionKind::Mls1 { r0, shape } => {
                if r >= r0 {
                    return 0.0;
                }
                let cut = (-(r0 / shape) * (r0 / shape)).exp();
                -2.0 / (shape * shape) * (-(r / shape) * (r / shape)).exp() / (1.0 - cut)
            }
            TestFunctionKind::Constant1 => 0.0,
            TestFunctionKind::Dirac => 0.0,
            TestFunctionKind::Companion { .. } => -1.0 / (TAU * r * r),
        }
    }

    /// Gradient at center offset `d = x - x_k`.
    pub fn gradient(&self, d: &Vector2<f64>) -> Vector2<f64> {
        d * self.radial_derivative_over_r(d.norm())
    }
}

/// Fraction of the singular point's unit mass contained in the subdomain:
/// 1 for interior nodes, 1/2 on a smooth boundary, `theta / 2 pi` at a
/// corner with interior angle `theta`.
#[derive(Debug, Clone, Copy)]
pub struct CornerFactor {
    pub alpha: f64,
    pub theta: f64,
}

impl CornerFactor {
    pub fn interior() -> Self {
        CornerFactor {
            alpha: 1.0,
            theta: TAU,
        }
    }

    pub fn smooth_boundary() -> Self {
        CornerFactor {
            alpha: 0.5,
            theta: PI,
        }
    }

    pub fn corner(theta: f64) -> Self {
        CornerFactor {
            alpha: theta / TAU,
            theta,
        }
    }

    /// Classification for a node of a rectangular domain.
    pub fn for_point(domain: &DomainSpec, p: &Point2<f64>, tol: f64) -> Self {
        match domain.sides_through(p, tol).len() {
            0 => Self::interior(),
            1 => Self::smooth_boundary(),
            _ => Self::corner(PI / 2.0),
        }
    }
}

/// Functionals of the first local weak form with a bump test function
/// vanishing on the subdomain boundary:
///
/// * `lambda1[q] = integral rho c p_q v dOmega`
/// * `lambda2[q] = -integral kappa grad p_q . grad v dOmega`
pub fn dmlpg1_functionals(
    prob: &HeatProblem,
    sub: &Subdomain,
    basis: &PolyBasis,
    v: &TestFunctionKind,
    quad: &QuadratureConfig,
) -> Result<(FunctionalVec, FunctionalVec)> {
    debug_assert!(matches!(v, TestFunctionKind::Mls1 { .. }));
    let rule = clipped_region_rule(sub, quad)?;
    let q = basis.dim();
    let mut l1 = DVector::zeros(q);
    let mut l2 = DVector::zeros(q);
    for (x, w) in rule.points.iter().zip(&rule.weights) {
        let offset = x - sub.center;
        let pv = basis.eval(x);
        let grad = basis.eval_gradient(x);
        let tv = v.eval(offset.norm());
        let gv = v.gradient(&offset);
        let rc = (prob.rho_c)(x);
        let k = (prob.kappa)(x);
        for i in 0..q {
            l1[i] += w * rc * tv * pv[i];
            l2[i] -= w * k * (grad[(i, 0)] * gv.x + grad[(i, 1)] * gv.y);
        }
    }
    Ok((
        FunctionalVec::new(l1, basis),
        FunctionalVec::new(l2, basis),
    ))
}

/// Functionals of the first local weak form with the constant test
/// function:
///
/// * `lambda1[q] = integral rho c p_q dOmega`
/// * `lambda3[q] = -integral kappa dp_q/dn dGamma` over the subdomain
///   boundary away from the Neumann part (where the flux datum is
///   inserted instead).
pub fn dmlpg5_functionals(
    prob: &HeatProblem,
    sub: &Subdomain,
    basis: &PolyBasis,
    quad: &QuadratureConfig,
) -> Result<(FunctionalVec, FunctionalVec)> {
    let rule = clipped_region_rule(sub, quad)?;
    let q = basis.dim();
    let mut l1 = DVector::zeros(q);
    for (x, w) in rule.points.iter().zip(&rule.weights) {
        let pv = basis.eval(x);
        let rc = (prob.rho_c)(x);
        for i in 0..q {
            l1[i] += w * rc * pv[i];
        }
    }
    let mut l3 = DVector::zeros(q);
    for piece in &sub.pieces {
        if piece.tag() == PieceTag::OnNeumann {
            continue;
        }
        for_piece_rule(piece, sub, quad, |x, w, n| {
            let grad = basis.eval_gradient(x);
            let k = (prob.kappa)(x);
            for i in 0..q {
                l3[i] -= w * k * (grad[(i, 0)] * n.x + grad[(i, 1)] * n.y);
            }
        });
    }
    Ok((
        FunctionalVec::new(l1, basis),
        FunctionalVec::new(l3, basis),
    ))
}

/// Quadrature walk over one boundary piece with the outward normal.
fn for_piece_rule<F: FnMut(&Point2<f64>, f64, Vector2<f64>)>(
    piece: &BoundaryPiece,
    sub: &Subdomain,
    quad: &QuadratureConfig,
    mut f: F,
) {
    match piece {
        BoundaryPiece::Arc {
            center,
            radius,
            theta0,
            theta1,
            ..
        } => {
            let rule = crate::quadrature::arc_rule(center, *radius, *theta0, *theta1, quad.n_angular);
            for (x, w) in rule.points.iter().zip(&rule.weights) {
                let n = (x - sub.center) / *radius;
                f(x, *w, n);
            }
        }
        BoundaryPiece::Segment { a, b, normal, .. } => {
            let rule = gauss_segment(a, b, quad.n_segment);
            for (x, w) in rule.points.iter().zip(&rule.weights) {
                f(x, *w, *normal);
            }
        }
    }
}

/// Role of a node in the collocation variant.
#[derive(Debug, Clone, Copy)]
pub enum NodeRole {
    /// Dirichlet boundary: recover the point value.
    Dirichlet,
    /// Neumann boundary: collocate the flux along the outward normal.
    Neumann { normal: Vector2<f64> },
    /// Interior: collocate the spatial operator of the equation.
    Pde,
}

/// Strong collocation functionals at a node:
///
/// * Dirichlet: `mu1[q] = p_q(x_k)`
/// * Neumann:   `mu2[q] = kappa(x_k) dp_q/dn (x_k)`
/// * PDE:       `mu3[q] = div(kappa grad p_q)(x_k)`
pub fn dmlpg2_functionals(
    prob: &HeatProblem,
    x_k: &Point2<f64>,
    basis: &PolyBasis,
    role: NodeRole,
) -> FunctionalVec {
    let values = match role {
        NodeRole::Dirichlet => basis.eval(x_k),
        NodeRole::Neumann { normal } => {
            let grad = basis.eval_gradient(x_k);
            let k = (prob.kappa)(x_k);
            DVector::from_fn(basis.dim(), |i, _| {
                k * (grad[(i, 0)] * normal.x + grad[(i, 1)] * normal.y)
            })
        }
        NodeRole::Pde => {
            let grad = basis.eval_gradient(x_k);
            let lap = basis.eval_laplacian(x_k);
            let k = (prob.kappa)(x_k);
            let gk = (prob.kappa_grad)(x_k);
            DVector::from_fn(basis.dim(), |i, _| {
                gk.x * grad[(i, 0)] + gk.y * grad[(i, 1)] + k * lap[i]
            })
        }
    };
    FunctionalVec::new(values, basis)
}

/// Functionals of the second local weak form with the companion test
/// function `v = ln(r0/r)/(2 pi)`:
///
/// * `lambda1[q] = integral (rho c / kappa) p_q v dOmega`
/// * `lambdaK[q] = alpha_k p_q(x_k) + cpv integral dv/dn p_q dGamma
///                 - integral (1/kappa) grad kappa . grad p_q v dOmega`
///
/// With these signs the assembled pair `M du/dt + K u = b` annihilates
/// harmonic fields for constant conductivity, which fixes the sign
/// convention left open by the principal-value rearrangement. On straight
/// boundary pieces through the node the kernel `dv/dn` vanishes
/// identically (`(x - x_k) . n = 0`), which is how the principal value is
/// realized; the remaining pieces are regular.
pub fn dmlpg4_functionals(
    prob: &HeatProblem,
    sub: &Subdomain,
    basis: &PolyBasis,
    corner: &CornerFactor,
    quad: &QuadratureConfig,
) -> Result<(FunctionalVec, FunctionalVec)> {
    let r0 = match sub.shape {
        crate::subdomain::SubShape::Ball(r) => r,
        crate::subdomain::SubShape::Square(_) => {
            return Err(Error::NotApplicable(
                "the companion test function requires ball subdomains".into(),
            ))
        }
    };
    let nq = basis.dim();
    let log_rule = log_singular_rule(sub, quad)?;

    let mut l1 = DVector::zeros(nq);
    let mut lk = corner.alpha * basis.eval(&sub.center);
    for (x, w) in log_rule.points.iter().zip(&log_rule.weights) {
        // w already carries ln(r0/r); v = ln(r0/r)/(2 pi).
        let pv = basis.eval(x);
        let grad = basis.eval_gradient(x);
        let k = (prob.kappa)(x);
        let gk = (prob.kappa_grad)(x);
        let rc = (prob.rho_c)(x);
        let w_v = w / TAU;
        for i in 0..nq {
            l1[i] += w_v * rc / k * pv[i];
            lk[i] -= w_v / k * (gk.x * grad[(i, 0)] + gk.y * grad[(i, 1)]);
        }
    }

    for piece in &sub.pieces {
        match piece {
            BoundaryPiece::Arc { radius, .. } => {
                // dv/dn = -1/(2 pi r0) on the circular part.
                let kernel = -1.0 / (TAU * radius);
                for_piece_rule(piece, sub, quad, |x, w, _| {
                    let pv = basis.eval(x);
                    for i in 0..nq {
                        lk[i] += w * kernel * pv[i];
                    }
                });
            }
            BoundaryPiece::Segment { a, normal, .. } => {
                let line_dist = ((a - sub.center).dot(normal)).abs();
                if line_dist <= 1e-12 * r0 {
                    // Straight piece through the node: the kernel is
                    // identically zero, the principal value drops out.
                    continue;
                }
                for_piece_rule(piece, sub, quad, |x, w, n| {
                    let d = x - sub.center;
                    let r2 = d.norm_squared();
                    let kernel = -d.dot(&n) / (TAU * r2);
                    let pv = basis.eval(x);
                    for i in 0..nq {
                        lk[i] += w * kernel * pv[i];
                    }
                });
            }
        }
    }

    Ok((
        FunctionalVec::new(l1, basis),
        FunctionalVec::new(lk, basis),
    ))
}

/// Quadrature samples with test-function (and kernel) factors folded into
/// the weights, for evaluating time-dependent load integrals repeatedly.
#[derive(Debug, Clone, Default)]
pub struct WeightedSamples {
    pub points: Vec<Point2<f64>>,
    pub factors: Vec<f64>,
}

impl WeightedSamples {
    pub fn eval<F: Fn(&Point2<f64>) -> f64>(&self, data: F) -> f64 {
        self.points
            .iter()
            .zip(&self.factors)
            .map(|(x, w)| w * data(x))
            .sum()
    }
}

/// Samples realizing `integral f(., t) v dOmega` over the subdomain (for
/// the companion test function the integrand is weighted by `1/kappa`,
/// matching the second weak form's right-hand side).
pub fn source_samples(
    prob: &HeatProblem,
    sub: &Subdomain,
    v: &TestFunctionKind,
    quad: &QuadratureConfig,
) -> Result<WeightedSamples> {
    match v {
        TestFunctionKind::Dirac => Ok(WeightedSamples {
            points: vec![sub.center],
            factors: vec![1.0],
        }),
        TestFunctionKind::Companion { .. } => {
            let rule = log_singular_rule(sub, quad)?;
            let factors = rule
                .points
                .iter()
                .zip(&rule.weights)
                .map(|(x, w)| w / TAU / (prob.kappa)(x))
                .collect();
            Ok(WeightedSamples {
                points: rule.points,
                factors,
            })
        }
        _ => {
            let rule = clipped_region_rule(sub, quad)?;
            let factors = rule
                .points
                .iter()
                .zip(&rule.weights)
                .map(|(x, w)| w * v.eval((x - sub.center).norm()))
                .collect();
            Ok(WeightedSamples {
                points: rule.points,
                factors,
            })
        }
    }
}

/// Samples realizing `integral u_N(., t) v dGamma` over the Neumann part
/// of the subdomain boundary.
pub fn neumann_samples(
    sub: &Subdomain,
    v: &TestFunctionKind,
    quad: &QuadratureConfig,
) -> WeightedSamples {
    let mut out = WeightedSamples::default();
    for piece in &sub.pieces {
        if piece.tag() != PieceTag::OnNeumann {
            continue;
        }
        let (a, b) = match piece {
            BoundaryPiece::Segment { a, b, .. } => (a, b),
            // Boundary pieces on a rectangle are always straight.
            BoundaryPiece::Arc { .. } => continue,
        };
        match *v {
            TestFunctionKind::Dirac => continue,
            TestFunctionKind::Companion { r0 } => {
                let seg_dir = (b - a).normalize();
                let along = (sub.center - a).dot(&seg_dir);
                let proj = a + seg_dir * along;
                let on_line = (sub.center - proj).norm() <= 1e-12 * r0;
                if on_line && along >= -1e-12 && along <= (b - a).norm() + 1e-12 {
                    // Singular point on the piece: dedicated log rule,
                    // with the 1/(2 pi) of the companion kernel.
                    let rule = log_segment_rule(a, b, &sub.center, r0, quad.n_segment);
                    out.points.extend(rule.points);
                    out.factors.extend(rule.weights.iter().map(|w| w / TAU));
                } else {
                    let rule = gauss_segment(a, b, quad.n_segment);
                    for (x, w) in rule.points.iter().zip(&rule.weights) {
                        out.points.push(*x);
                        out.factors.push(w * v.eval((x - sub.center).norm()));
                    }
                }
            }
            _ => {
                let rule = gauss_segment(a, b, quad.n_segment);
                for (x, w) in rule.points.iter().zip(&rule.weights) {
                    out.points.push(*x);
                    out.factors.push(w * v.eval((x - sub.center).norm()));
                }
            }
        }
    }
    out
}

/// `integral f(., t) v dOmega` at one time.
pub fn source_load(
    prob: &HeatProblem,
    sub: &Subdomain,
    v: &TestFunctionKind,
    t: f64,
    quad: &QuadratureConfig,
) -> Result<f64> {
    Ok(source_samples(prob, sub, v, quad)?.eval(|x| (prob.source)(x, t)))
}

/// `integral u_N(., t) v dGamma` over the Neumann boundary part at one
/// time.
pub fn neumann_load(
    prob: &HeatProblem,
    sub: &Subdomain,
    v: &TestFunctionKind,
    t: f64,
    quad: &QuadratureConfig,
) -> Result<f64> {
    Ok(neumann_samples(sub, v, quad).eval(|x| (prob.u_neumann)(x, t)))
}
