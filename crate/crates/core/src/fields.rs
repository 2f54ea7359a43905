//! Coefficient fields on the group: scalar zonal fields, drift vector fields
//! and diffusion matrix fields.

use std::fmt;
use std::sync::Arc;

use crate::geometry::{GroupElement, Mat2};

/// A real function of the colatitude `s ∈ [0, π]`, hence K-bi-invariant
/// when viewed on the group.
#[derive(Clone)]
pub struct ZonalField {
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    label: String,
}

impl fmt::Debug for ZonalField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("ZonalField").field(&self.label).finish()
    }
}

impl ZonalField {
    pub fn new(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            f: Arc::new(f),
            label: label.into(),
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("{c}"), move |_| c)
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    /// `c0 + c1·cos² s`.
    pub fn cos_squared(c0: f64, c1: f64) -> Self {
        Self::new(format!("{c0} + {c1} cos^2 s"), move |s: f64| {
            let c = s.cos();
            c0 + c1 * c * c
        })
    }

    /// `c0 + c1·cos s`.
    pub fn cosine(c0: f64, c1: f64) -> Self {
        Self::new(format!("{c0} + {c1} cos s"), move |s: f64| c0 + c1 * s.cos())
    }

    pub fn eval(&self, s: f64) -> f64 {
        (self.f)(s)
    }

    /// Value at the colatitude of `g·o`.
    pub fn at(&self, g: &GroupElement) -> f64 {
        self.eval(g.base_point().colatitude())
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Minimum over `points` equispaced colatitudes in `[0, π]`.
    pub fn min_on_grid(&self, points: usize) -> f64 {
        crate::spectral::dense_colatitudes(points)
            .map(|s| self.eval(s))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs_on_grid(&self, points: usize) -> f64 {
        crate::spectral::dense_colatitudes(points)
            .map(|s| self.eval(s).abs())
            .fold(0.0, f64::max)
    }

    /// Whether the field is the same number at every grid point.
    pub fn is_constant_on_grid(&self, points: usize) -> bool {
        let v0 = self.eval(0.0);
        crate::spectral::dense_colatitudes(points).all(|s| self.eval(s) == v0)
    }
}

type DriftFn = dyn Fn(&GroupElement) -> [f64; 2] + Send + Sync;

/// A drift field `b: G → R²` in the basis `(X₁, X₂)`.
#[derive(Clone)]
pub struct DriftField(Arc<DriftFn>);

impl fmt::Debug for DriftField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("DriftField")
    }
}

impl DriftField {
    pub fn new(f: impl Fn(&GroupElement) -> [f64; 2] + Send + Sync + 'static) -> Self {
        Self(Arc::new(f))
    }

    pub fn constant(b: [f64; 2]) -> Self {
        Self::new(move |_| b)
    }

    pub fn eval(&self, g: &GroupElement) -> [f64; 2] {
        (self.0)(g)
    }
}

/// A diffusion matrix field `A: G → R^{2×2}` in the basis `(X₁, X₂)`.
#[derive(Clone)]
pub struct MatrixField(Arc<dyn Fn(&GroupElement) -> Mat2 + Send + Sync>);

impl fmt::Debug for MatrixField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("MatrixField")
    }
}

impl MatrixField {
    pub fn new(f: impl Fn(&GroupElement) -> Mat2 + Send + Sync + 'static) -> Self {
        Self(Arc::new(f))
    }

    pub fn constant(a: Mat2) -> Self {
        Self::new(move |_| a)
    }

    /// `α(s(g))·I₂` for a zonal scalar `α`.
    pub fn scalar(alpha: ZonalField) -> Self {
        Self::new(move |g| {
            let a = alpha.at(g);
            [[a, 0.0], [0.0, a]]
        })
    }

    pub fn eval(&self, g: &GroupElement) -> Mat2 {
        (self.0)(g)
    }
}

pub(crate) fn mat2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    std::array::from_fn(|i| std::array::from_fn(|j| a[i][0] * b[0][j] + a[i][1] * b[1][j]))
}

pub(crate) fn mat2_transpose(a: &Mat2) -> Mat2 {
    [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]
}

pub(crate) fn mat2_vec(a: &Mat2, v: &[f64; 2]) -> [f64; 2] {
    [a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1]]
}

/// Frobenius norm of `a − b`.
pub(crate) fn mat2_dist(a: &Mat2, b: &Mat2) -> f64 {
    let mut s = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            s += (a[i][j] - b[i][j]).powi(2);
        }
    }
    s.sqrt()
}

/// Smallest eigenvalue of the symmetric part of `a`.
pub(crate) fn mat2_min_eigenvalue(a: &Mat2) -> f64 {
    let p = a[0][0];
    let q = a[1][1];
    let r = 0.5 * (a[0][1] + a[1][0]);
    0.5 * (p + q) - (0.25 * (p - q).powi(2) + r * r).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zonal_fields() {
        let a = ZonalField::cos_squared(0.5, 1.0);
        assert_eq!(a.eval(0.0), 1.5);
        assert!((a.eval(std::f64::consts::FRAC_PI_2) - 0.5).abs() < 1e-15);
        let g = GroupElement::at_colatitude(0.0, 0.0);
        assert_eq!(a.at(&g), 1.5);
        assert!(ZonalField::constant(2.0).is_constant_on_grid(33));
        assert!(!a.is_constant_on_grid(33));
        assert!((ZonalField::cosine(1.0, 0.5).min_on_grid(101) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn matrix_helpers() {
        let a = [[2.0, 1.0], [1.0, 2.0]];
        assert!((mat2_min_eigenvalue(&a) - 1.0).abs() < 1e-15);
        assert!((mat2_min_eigenvalue(&[[1.0, 0.0], [0.0, -1.0]]) + 1.0).abs() < 1e-15);
        assert_eq!(mat2_mul(&a, &[[1.0, 0.0], [0.0, 1.0]]), a);
        assert_eq!(mat2_transpose(&[[1.0, 2.0], [3.0, 4.0]]), [[1.0, 3.0], [2.0, 4.0]]);
        assert_eq!(mat2_vec(&a, &[1.0, 0.0]), [2.0, 1.0]);
        assert_eq!(mat2_dist(&a, &a), 0.0);
    }
}
