//! Numerical integration over subdomain interiors and boundaries.
//!
//! All region rules return plain point/weight pairs. The log-kernel rules
//! fold the kernel `ln(r0/r)` into the weights, so the caller integrates a
//! smooth factor only.

use crate::error::{Error, Result};
use crate::subdomain::{SubShape, Subdomain};
use nalgebra::{DMatrix, Point2, Vector2};
use std::f64::consts::TAU;

/// Orders used by the weak-form integrals. Defaults keep the quadrature
/// error far below the discretization error at the benchmark spacings.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureConfig {
    /// Radial Gauss points per disk piece.
    pub n_radial: usize,
    /// Angular points per disk (full circle) or per angular piece.
    pub n_angular: usize,
    /// Points per straight boundary segment.
    pub n_segment: usize,
    /// Tensor order per direction on square subdomains.
    pub n_square: usize,
    /// Points of the radial log-weight rule.
    pub n_log: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            n_radial: 8,
            n_angular: 16,
            n_segment: 8,
            n_square: 10,
            n_log: 10,
        }
    }
}

/// A positive-weight quadrature rule over points in the plane.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub points: Vec<Point2<f64>>,
    pub weights: Vec<f64>,
    /// Total polynomial degree integrated exactly (best effort for
    /// clipped regions, where pieces are smooth but not polynomial).
    pub degree: usize,
}

impl QuadratureRule {
    pub fn integrate<F: Fn(&Point2<f64>) -> f64>(&self, f: F) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * f(p))
            .sum()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Gauss nodes and weights from a monic three-term recurrence
/// (Golub-Welsch): eigenvalues of the Jacobi matrix are the nodes, the
/// squared first eigenvector components scaled by the total mass are the
/// weights.
fn golub_welsch(alpha: &[f64], beta: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = alpha.len();
    let mut jacobi = DMatrix::zeros(n, n);
    for i in 0..n {
        jacobi[(i, i)] = alpha[i];
    }
    for i in 1..n {
        let b = beta[i].sqrt();
        jacobi[(i, i - 1)] = b;
        jacobi[(i - 1, i)] = b;
    }
    let eig = jacobi.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let w = beta[0] * eig.eigenvectors[(0, i)] * eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], w)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    pairs.into_iter().unzip()
}

/// n-point Gauss-Legendre rule on [-1, 1]; exact for degree 2n - 1.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let alpha = vec![0.0; n];
    let mut beta = vec![0.0; n];
    beta[0] = 2.0;
    for (k, b) in beta.iter_mut().enumerate().skip(1) {
        let kf = k as f64;
        *b = kf * kf / (4.0 * kf * kf - 1.0);
    }
    golub_welsch(&alpha, &beta)
}

/// n-point Gauss rule on [0, 1] for the weight `u^p * ln(1/u)` with
/// p in {0, 1}; exact for smooth factors of degree 2n - 1.
///
/// Recurrence coefficients come from the modified Chebyshev algorithm
/// with shifted-Legendre modified moments, which are known in closed
/// form for the log weight.
pub fn gauss_log(n: usize, p: u32) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    assert!(p <= 1, "only u^0 and u^1 log weights are supported");
    let m2 = 2 * n;

    // l_k = integral of P*_k(u) ln(1/u) du for the shifted Legendre P*.
    let mut lvals = vec![0.0; m2 + 2];
    lvals[0] = 1.0;
    for (k, l) in lvals.iter_mut().enumerate().skip(1) {
        let kf = k as f64;
        *l = if k % 2 == 0 { 1.0 } else { -1.0 } / (kf * (kf + 1.0));
    }

    // Raw moments against P*_k, then rescaled to the monic polynomials.
    let mut mom = vec![0.0; m2];
    let mut monic_scale = 1.0; // (k!)^2 / (2k)!
    for (k, m) in mom.iter_mut().enumerate() {
        let raw = if p == 0 {
            lvals[k]
        } else {
            // u P*_k = P*_k / 2 + ((k+1) P*_{k+1} + k P*_{k-1}) / (2(2k+1))
            let kf = k as f64;
            let prev = if k == 0 { 0.0 } else { lvals[k - 1] };
            lvals[k] / 2.0 + ((kf + 1.0) * lvals[k + 1] + kf * prev) / (2.0 * (2.0 * kf + 1.0))
        };
        *m = raw * monic_scale;
        let next = (k + 1) as f64;
        monic_scale *= next / (2.0 * (2.0 * next - 1.0));
    }

    // Monic shifted-Legendre recurrence.
    let aux_a = vec![0.5; m2];
    let mut aux_b = vec![0.0; m2];
    for (l, b) in aux_b.iter_mut().enumerate().skip(1) {
        let lf = l as f64;
        *b = lf * lf / (4.0 * (4.0 * lf * lf - 1.0));
    }

    // Modified Chebyshev algorithm.
    let mut alpha = vec![0.0; n];
    let mut beta = vec![0.0; n];
    alpha[0] = aux_a[0] + mom[1] / mom[0];
    beta[0] = mom[0];
    let mut sigma_prev = vec![0.0; m2 + 1];
    let mut sigma_cur = vec![0.0; m2 + 1];
    sigma_cur[..m2].copy_from_slice(&mom);
    for k in 1..n {
        let mut sigma_new = vec![0.0; m2 + 1];
        for l in k..(m2 - k) {
            sigma_new[l] = sigma_cur[l + 1] - (alpha[k - 1] - aux_a[l]) * sigma_cur[l]
                - beta[k - 1] * sigma_prev[l]
                + aux_b[l] * sigma_cur[l - 1];
        }
        alpha[k] = aux_a[k] + sigma_new[k + 1] / sigma_new[k] - sigma_cur[k] / sigma_cur[k - 1];
        beta[k] = sigma_new[k] / sigma_cur[k - 1];
        sigma_prev = std::mem::replace(&mut sigma_cur, sigma_new);
    }
    golub_welsch(&alpha, &beta)
}

/// n-point Gauss-Legendre rule along the straight segment from `a` to `b`.
pub fn gauss_segment(a: &Point2<f64>, b: &Point2<f64>, n: usize) -> QuadratureRule {
    let (nodes, weights) = gauss_legendre(n);
    let mid = Point2::from((a.coords + b.coords) * 0.5);
    let half = (b - a) * 0.5;
    let jac = half.norm();
    QuadratureRule {
        points: nodes.iter().map(|&t| mid + half * t).collect(),
        weights: weights.iter().map(|&w| w * jac).collect(),
        degree: 2 * n - 1,
    }
}

/// Arc-length rule on the circular arc `theta in [theta0, theta1]` of
/// radius `r` about `center`. Full circles use equispaced midpoints
/// (exact for trigonometric degree n - 1), partial arcs use Gauss points.
pub fn arc_rule(
    center: &Point2<f64>,
    r: f64,
    theta0: f64,
    theta1: f64,
    n: usize,
) -> QuadratureRule {
    let span = theta1 - theta0;
    let at = |t: f64| center + r * Vector2::new(t.cos(), t.sin());
    if (span - TAU).abs() < 1e-12 {
        let dt = TAU / n as f64;
        QuadratureRule {
            points: (0..n).map(|i| at(theta0 + (i as f64 + 0.5) * dt)).collect(),
            weights: vec![r * dt; n],
            degree: n - 1,
        }
    } else {
        let (nodes, weights) = gauss_legendre(n);
        let mid = 0.5 * (theta0 + theta1);
        let half = 0.5 * span;
        QuadratureRule {
            points: nodes.iter().map(|&t| at(mid + half * t)).collect(),
            weights: weights.iter().map(|&w| w * half * r).collect(),
            degree: 2 * n - 1,
        }
    }
}

/// Tensor polar rule over the full disk of radius `r` about `center`.
/// Exact for total degree `min(2 n_r - 2, n_theta - 1)`.
pub fn disk_rule(center: &Point2<f64>, r: f64, n_r: usize, n_theta: usize) -> QuadratureRule {
    let (rad_nodes, rad_weights) = radial_rule(r, n_r);
    let dt = TAU / n_theta as f64;
    let mut points = Vec::with_capacity(n_r * n_theta);
    let mut weights = Vec::with_capacity(n_r * n_theta);
    for i in 0..n_theta {
        let theta = (i as f64 + 0.5) * dt;
        let dir = Vector2::new(theta.cos(), theta.sin());
        for (rho, w) in rad_nodes.iter().zip(&rad_weights) {
            points.push(center + dir * *rho);
            weights.push(w * dt);
        }
    }
    QuadratureRule {
        points,
        weights,
        degree: (2 * n_r).saturating_sub(2).min(n_theta.saturating_sub(1)),
    }
}

/// Gauss points on `[0, r]` with the polar Jacobian `rho` folded into the
/// weights.
fn radial_rule(r: f64, n_r: usize) -> (Vec<f64>, Vec<f64>) {
    let (nodes, weights) = gauss_legendre(n_r);
    let half = 0.5 * r;
    let rho: Vec<f64> = nodes.iter().map(|&t| half * (t + 1.0)).collect();
    let w: Vec<f64> = weights
        .iter()
        .zip(&rho)
        .map(|(w, rho)| w * half * rho)
        .collect();
    (rho, w)
}

/// Angular intervals of positive radial extent for a ball subdomain,
/// as `(theta0, theta1)` pairs covering the clipped region.
fn angular_pieces(sub: &Subdomain) -> Vec<(f64, f64)> {
    let bps = sub.polar_breakpoints();
    if bps.is_empty() {
        return vec![(0.0, TAU)];
    }
    let mut pieces = Vec::new();
    let n = bps.len();
    for i in 0..n {
        let t0 = bps[i];
        let t1 = if i + 1 < n { bps[i + 1] } else { bps[0] + TAU };
        if t1 - t0 < 1e-12 {
            continue;
        }
        let r_mid = sub.radius_at(0.5 * (t0 + t1));
        if r_mid > 1e-14 {
            pieces.push((t0, t1));
        }
    }
    pieces
}

/// Area rule over a clipped subdomain. Balls integrate in polar
/// coordinates about the center with angular subdivision at clip
/// intersections; squares use a tensor Gauss rule on the clipped
/// rectangle.
pub fn clipped_region_rule(sub: &Subdomain, cfg: &QuadratureConfig) -> Result<QuadratureRule> {
    match sub.shape {
        SubShape::Ball(r) => {
            let pieces = angular_pieces(sub);
            if pieces.is_empty() {
                return Err(Error::EmptyRegion("clipped ball has no interior".into()));
            }
            if pieces.len() == 1 && (pieces[0].1 - pieces[0].0 - TAU).abs() < 1e-12 {
                return Ok(disk_rule(&sub.center, r, cfg.n_radial, cfg.n_angular));
            }
            let (gl_nodes, gl_weights) = gauss_legendre(cfg.n_angular);
            let mut points = Vec::new();
            let mut weights = Vec::new();
            for (t0, t1) in pieces {
                let mid = 0.5 * (t0 + t1);
                let half = 0.5 * (t1 - t0);
                for (tn, tw) in gl_nodes.iter().zip(&gl_weights) {
                    let theta = mid + half * tn;
                    let radius = sub.radius_at(theta);
                    if radius <= 1e-14 {
                        continue;
                    }
                    let dir = Vector2::new(theta.cos(), theta.sin());
                    let (rad_nodes, rad_weights) = radial_rule(radius, cfg.n_radial);
                    for (rho, rw) in rad_nodes.iter().zip(&rad_weights) {
                        points.push(sub.center + dir * *rho);
                        weights.push(rw * tw * half);
                    }
                }
            }
            Ok(QuadratureRule {
                points,
                weights,
                degree: (2 * cfg.n_radial).saturating_sub(2),
            })
        }
        SubShape::Square(_) => {
            let (x0, x1, y0, y1) = sub.clipped_rect().expect("square subdomain");
            if x1 - x0 <= 0.0 || y1 - y0 <= 0.0 {
                return Err(Error::EmptyRegion("clipped square has no interior".into()));
            }
            let (nodes, ws) = gauss_legendre(cfg.n_square);
            let (mx, hx) = (0.5 * (x0 + x1), 0.5 * (x1 - x0));
            let (my, hy) = (0.5 * (y0 + y1), 0.5 * (y1 - y0));
            let mut points = Vec::with_capacity(nodes.len() * nodes.len());
            let mut weights = Vec::with_capacity(nodes.len() * nodes.len());
            for (tx, wx) in nodes.iter().zip(&ws) {
                for (ty, wy) in nodes.iter().zip(&ws) {
                    points.push(Point2::new(mx + hx * tx, my + hy * ty));
                    weights.push(wx * wy * hx * hy);
                }
            }
            Ok(QuadratureRule {
                points,
                weights,
                degree: 2 * cfg.n_square - 1,
            })
        }
    }
}

/// Rule for weakly singular integrals `integral g(x) ln(r0/r) dOmega`
/// over a (possibly clipped) ball subdomain, with `r` the distance to the
/// subdomain center. The log kernel is folded into the weights; `g` must
/// be smooth. Exact (per angular piece) for radial factors of degree
/// `n_log` and beyond thanks to the dedicated log-weight Gauss rule.
pub fn log_singular_rule(sub: &Subdomain, cfg: &QuadratureConfig) -> Result<QuadratureRule> {
    let r0 = match sub.shape {
        SubShape::Ball(r) => r,
        SubShape::Square(_) => {
            return Err(Error::NotApplicable(
                "log-kernel rules require ball subdomains".into(),
            ))
        }
    };
    let pieces = angular_pieces(sub);
    if pieces.is_empty() {
        return Err(Error::EmptyRegion("clipped ball has no interior".into()));
    }
    let (log_nodes, log_weights) = gauss_log(cfg.n_log, 1);
    let (gl01_nodes, gl01_weights) = {
        let (n, w) = gauss_legendre(cfg.n_log);
        // Mapped to [0, 1] with the u factor of the polar Jacobian.
        let nodes: Vec<f64> = n.iter().map(|t| 0.5 * (t + 1.0)).collect();
        let weights: Vec<f64> = w
            .iter()
            .zip(&nodes)
            .map(|(w, u)| 0.5 * w * u)
            .collect();
        (nodes, weights)
    };

    let full_circle =
        pieces.len() == 1 && (pieces[0].1 - pieces[0].0 - TAU).abs() < 1e-12;
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let mut add_ray = |theta: f64, theta_weight: f64| {
        let radius = sub.radius_at(theta);
        if radius <= 1e-14 {
            return;
        }
        let dir = Vector2::new(theta.cos(), theta.sin());
        // integral_0^R f(rho) rho ln(r0/rho) drho
        //   = R^2 [ integral f(R u) u ln(1/u) du
        //         + ln(r0/R) integral f(R u) u du ]
        let r2 = radius * radius;
        for (u, w) in log_nodes.iter().zip(&log_weights) {
            points.push(sub.center + dir * (radius * u));
            weights.push(r2 * w * theta_weight);
        }
        let shift = (r0 / radius).ln();
        if shift.abs() > 1e-15 {
            for (u, w) in gl01_nodes.iter().zip(&gl01_weights) {
                points.push(sub.center + dir * (radius * u));
                weights.push(r2 * shift * w * theta_weight);
            }
        }
    };
    if full_circle {
        let dt = TAU / cfg.n_angular as f64;
        for i in 0..cfg.n_angular {
            add_ray((i as f64 + 0.5) * dt, dt);
        }
    } else {
        let (gl_nodes, gl_weights) = gauss_legendre(cfg.n_angular);
        for (t0, t1) in pieces {
            let mid = 0.5 * (t0 + t1);
            let half = 0.5 * (t1 - t0);
            for (tn, tw) in gl_nodes.iter().zip(&gl_weights) {
                add_ray(mid + half * tn, tw * half);
            }
        }
    }
    Ok(QuadratureRule {
        points,
        weights,
        degree: cfg.n_log,
    })
}

/// Rule for `integral g(x) ln(r0/|x - x0|) ds` along the segment from `a`
/// to `b` when the singular point `x0` lies on the segment (possibly at
/// an endpoint). The kernel is folded into the weights.
pub fn log_segment_rule(
    a: &Point2<f64>,
    b: &Point2<f64>,
    x0: &Point2<f64>,
    r0: f64,
    n: usize,
) -> QuadratureRule {
    let (log_nodes, log_weights) = gauss_log(n, 0);
    let (gl_raw, glw_raw) = gauss_legendre(n);
    let gl_nodes: Vec<f64> = gl_raw.iter().map(|t| 0.5 * (t + 1.0)).collect();
    let gl_weights: Vec<f64> = glw_raw.iter().map(|w| 0.5 * w).collect();

    let mut points = Vec::new();
    let mut weights = Vec::new();
    let mut add_half = |from: &Point2<f64>, to: &Point2<f64>| {
        let len = (to - from).norm();
        if len <= 1e-300 {
            return;
        }
        let dir = (to - from) / len;
        // integral_0^L g ln(r0/s) ds = L integral g(L u) ln(1/u) du
        //                            + L ln(r0/L) integral g(L u) du
        for (u, w) in log_nodes.iter().zip(&log_weights) {
            points.push(from + dir * (len * u));
            weights.push(len * w);
        }
        let shift = (r0 / len).ln();
        if shift.abs() > 1e-15 {
            for (u, w) in gl_nodes.iter().zip(&gl_weights) {
                points.push(from + dir * (len * u));
                weights.push(len * shift * w);
            }
        }
    };
    add_half(x0, a);
    add_half(x0, b);
    QuadratureRule {
        points,
        weights,
        degree: n,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{BcKind, DomainSpec};
    use crate::subdomain::clip_subdomain;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn unit_square() -> DomainSpec {
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
    fn legendre_nodes_match_reference_values() {
        let (nodes, weights) = gauss_legendre(5);
        let nref = [
            -0.906179845938664,
            -0.5384693101056831,
            0.0,
            0.5384693101056831,
            0.906179845938664,
        ];
        let wref = [
            0.2369268850561891,
            0.4786286704993665,
            0.5688888888888889,
            0.4786286704993665,
            0.2369268850561891,
        ];
        for i in 0..5 {
            assert_relative_eq!(nodes[i], nref[i], epsilon = 1e-14);
            assert_relative_eq!(weights[i], wref[i], epsilon = 1e-14);
        }
    }

    #[test]
    fn segment_rule_hits_analytic_moments() {
        let a = Point2::new(0.0, 0.0);
        let b = Point2::new(1.0, 0.0);
        let rule = gauss_segment(&a, &b, 2);
        assert_relative_eq!(rule.integrate(|p| p.x * p.x), 1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(rule.integrate(|_| 1.0), 1.0, epsilon = 1e-15);
        let rule = gauss_segment(&a, &b, 3);
        assert_relative_eq!(rule.integrate(|p| p.x.powi(5)), 1.0 / 6.0, epsilon = 1e-15);
    }

    #[test]
    fn disk_rule_exact_on_monomials() {
        let r: f64 = 0.35;
        let rule = disk_rule(&Point2::new(0.0, 0.0), r, 8, 16);
        assert_relative_eq!(rule.total_weight(), PI * r * r, max_relative = 1e-12);
        assert_relative_eq!(
            rule.integrate(|p| p.x * p.x),
            PI * r.powi(4) / 4.0,
            max_relative = 1e-12
        );
        // Odd moments vanish.
        assert!(rule.integrate(|p| p.x).abs() < 1e-15);
        // Degree check across the advertised exactness range.
        for d in 0..=rule.degree.min(8) {
            let exact = disk_moment(r, d as i32, 0);
            let got = rule.integrate(|p| p.x.powi(d as i32));
            assert!((got - exact).abs() <= 1e-12 * exact.abs().max(1.0));
        }
    }

    /// Analytic integral of x^a y^b over the disk of radius r at the origin.
    fn disk_moment(r: f64, a: i32, b: i32) -> f64 {
        if a % 2 != 0 || b % 2 != 0 {
            return 0.0;
        }
        // In polar coordinates: r^{a+b+2}/(a+b+2) * integral cos^a sin^b.
        let ang = angular_moment(a, b);
        r.powi(a + b + 2) / (a + b + 2) as f64 * ang
    }

    fn angular_moment(a: i32, b: i32) -> f64 {
        // integral_0^{2pi} cos^a sin^b dtheta for even a, b via the beta
        // function: 2 B((a+1)/2, (b+1)/2).
        fn gamma_half_int(two_k: i32) -> f64 {
            // Gamma(two_k / 2) for positive integer two_k.
            if two_k % 2 == 0 {
                (1..two_k / 2).map(|i| i as f64).product::<f64>().max(1.0)
            } else {
                let mut g = PI.sqrt();
                let mut x = 0.5;
                while (2.0 * x) < two_k as f64 {
                    g *= x;
                    x += 1.0;
                }
                g
            }
        }
        2.0 * gamma_half_int(a + 1) * gamma_half_int(b + 1) / gamma_half_int(a + b + 2)
    }

    #[test]
    fn half_disk_area_and_moments() {
        let d = unit_square();
        let r = 0.07;
        let sub = clip_subdomain(&d, &Point2::new(0.5, 0.0), SubShape::Ball(r)).unwrap();
        let rule = clipped_region_rule(&sub, &QuadratureConfig::default()).unwrap();
        assert_relative_eq!(rule.total_weight(), 0.5 * PI * r * r, max_relative = 1e-12);
        // y integrates over the upper half disk to 2 r^3 / 3.
        assert_relative_eq!(
            rule.integrate(|p| p.y),
            2.0 * r.powi(3) / 3.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn quarter_square_area() {
        let d = unit_square();
        let sub = clip_subdomain(&d, &Point2::new(0.0, 0.0), SubShape::Square(0.1)).unwrap();
        let rule = clipped_region_rule(&sub, &QuadratureConfig::default()).unwrap();
        assert_relative_eq!(rule.total_weight(), 0.0025, max_relative = 1e-12);
    }

    #[test]
    fn log_weight_rules_match_exact_moments() {
        for p in [0u32, 1u32] {
            let n = 10;
            let (nodes, weights) = gauss_log(n, p);
            assert!(nodes.iter().all(|&x| x > 0.0 && x < 1.0));
            assert!(weights.iter().all(|&w| w > 0.0));
            for k in 0..(2 * n) {
                let exact = 1.0 / ((k as f64 + p as f64 + 1.0) * (k as f64 + p as f64 + 1.0));
                let got: f64 = nodes
                    .iter()
                    .zip(&weights)
                    .map(|(x, w)| w * x.powi(k as i32))
                    .sum();
                assert!(
                    (got - exact).abs() <= 1e-12 * exact.max(1e-6),
                    "p={p} k={k}: got {got}, want {exact}"
                );
            }
        }
    }

    #[test]
    fn log_singular_disk_integral() {
        // integral over the disk of (1/2pi) ln(r0/r) dOmega = r0^2 / 4.
        let d = unit_square();
        let r0 = 0.07;
        let sub = clip_subdomain(&d, &Point2::new(0.5, 0.5), SubShape::Ball(r0)).unwrap();
        let rule = log_singular_rule(&sub, &QuadratureConfig::default()).unwrap();
        let got = rule.integrate(|_| 1.0 / TAU);
        assert_relative_eq!(got, r0 * r0 / 4.0, max_relative = 1e-12);
        // Zero integrand gives zero.
        assert_eq!(rule.integrate(|_| 0.0), 0.0);
    }

    #[test]
    fn log_segment_building_block() {
        // integral_0^1 ln(1/s) ds = 1, realized as a segment with the
        // singular point at an endpoint and r0 = 1.
        let rule = log_segment_rule(
            &Point2::new(0.0, 0.0),
            &Point2::new(1.0, 0.0),
            &Point2::new(0.0, 0.0),
            1.0,
            10,
        );
        assert_relative_eq!(rule.integrate(|_| 1.0), 1.0, max_relative = 1e-12);
        // Symmetric case: singular point mid-segment, smooth factor x.
        let rule = log_segment_rule(
            &Point2::new(-1.0, 0.0),
            &Point2::new(1.0, 0.0),
            &Point2::new(0.0, 0.0),
            1.0,
            10,
        );
        assert!(rule.integrate(|p| p.x).abs() < 1e-14);
        assert_relative_eq!(rule.integrate(|_| 1.0), 2.0, max_relative = 1e-12);
    }

    #[test]
    fn refinement_decreases_error_on_smooth_integrand() {
        // exp(x) over a disk; compare against a much finer reference.
        let c = Point2::new(0.3, 0.4);
        let r = 0.2;
        let reference = disk_rule(&c, r, 40, 80).integrate(|p| p.x.exp());
        let mut last_err = f64::INFINITY;
        for n_r in [2usize, 4, 8] {
            let err = (disk_rule(&c, r, n_r, 2 * n_r).integrate(|p| p.x.exp()) - reference).abs();
            assert!(err < last_err, "n_r={n_r}: {err} !< {last_err}");
            last_err = err;
        }
    }
}
