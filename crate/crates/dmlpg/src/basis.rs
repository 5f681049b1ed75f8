//! Shifted-scaled monomial basis of total degree <= m in two variables.
//!
//! Basis entry `j` evaluates to `((x - z) / h)^beta_j` where `z` is the
//! evaluation center of the functional being recovered and `h` is the
//! representative node spacing. Centering and scaling keep the moment
//! matrix of the least-squares recovery well conditioned.

use nalgebra::{DMatrix, DVector, Point2};

/// Polynomial space of total degree <= `m`, shifted to `z` and scaled by
/// `h`. Multi-indices are ordered by total degree, then by decreasing
/// first exponent, which fixes matrix layouts across runs.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyBasis {
    m: usize,
    z: Point2<f64>,
    h: f64,
    exponents: Vec<(u32, u32)>,
}

impl PolyBasis {
    pub fn new(m: usize, z: Point2<f64>, h: f64) -> Self {
        assert!(h > 0.0, "basis scale must be positive");
        let mut exponents = Vec::with_capacity((m + 1) * (m + 2) / 2);
        for degree in 0..=m as u32 {
            for a in (0..=degree).rev() {
                exponents.push((a, degree - a));
            }
        }
        PolyBasis { m, z, h, exponents }
    }

    /// Basis dimension Q = (m + 1)(m + 2) / 2.
    pub fn dim(&self) -> usize {
        self.exponents.len()
    }

    pub fn degree(&self) -> usize {
        self.m
    }

    pub fn shift(&self) -> &Point2<f64> {
        &self.z
    }

    pub fn scale(&self) -> f64 {
        self.h
    }

    pub fn exponents(&self) -> &[(u32, u32)] {
        &self.exponents
    }

    /// Values of all basis polynomials at `x`.
    pub fn eval(&self, x: &Point2<f64>) -> DVector<f64> {
        let (u, v) = self.local(x);
        let (pu, pv) = self.powers(u, v);
        DVector::from_iterator(
            self.dim(),
            self.exponents
                .iter()
                .map(|&(a, b)| pu[a as usize] * pv[b as usize]),
        )
    }

    /// Gradients of all basis polynomials at `x` (rows are entries,
    /// columns the two derivative directions). Each derivative carries a
    /// factor 1/h from the scaling.
    pub fn eval_gradient(&self, x: &Point2<f64>) -> DMatrix<f64> {
        let (u, v) = self.local(x);
        let (pu, pv) = self.powers(u, v);
        let mut g = DMatrix::zeros(self.dim(), 2);
        for (j, &(a, b)) in self.exponents.iter().enumerate() {
            let (a, b) = (a as usize, b as usize);
            if a > 0 {
                g[(j, 0)] = a as f64 / self.h * pu[a - 1] * pv[b];
            }
            if b > 0 {
                g[(j, 1)] = b as f64 / self.h * pu[a] * pv[b - 1];
            }
        }
        g
    }

    /// Laplacians of all basis polynomials at `x`.
    pub fn eval_laplacian(&self, x: &Point2<f64>) -> DVector<f64> {
        let (u, v) = self.local(x);
        let (pu, pv) = self.powers(u, v);
        let h2 = self.h * self.h;
        DVector::from_iterator(
            self.dim(),
            self.exponents.iter().map(|&(a, b)| {
                let (a, b) = (a as usize, b as usize);
                let mut lap = 0.0;
                if a >= 2 {
                    lap += (a * (a - 1)) as f64 / h2 * pu[a - 2] * pv[b];
                }
                if b >= 2 {
                    lap += (b * (b - 1)) as f64 / h2 * pu[a] * pv[b - 2];
                }
                lap
            }),
        )
    }

    fn local(&self, x: &Point2<f64>) -> (f64, f64) {
        ((x.x - self.z.x) / self.h, (x.y - self.z.y) / self.h)
    }

    fn powers(&self, u: f64, v: f64) -> (Vec<f64>, Vec<f64>) {
        let mut pu = vec![1.0; self.m + 1];
        let mut pv = vec![1.0; self.m + 1];
        for k in 1..=self.m {
            pu[k] = pu[k - 1] * u;
            pv[k] = pv[k - 1] * v;
        }
        (pu, pv)
    }
}
