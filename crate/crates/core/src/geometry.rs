//! The rotation group SO(3) acting on the unit sphere S² = SO(3)/SO(2).
//!
//! Rotations are unit quaternions `[w, x, y, z]`. The stabilizer K of the
//! north pole `o = (0, 0, 1)` is the group of rotations about the z-axis.
//!
//! The Lie algebra so(3) carries the orthonormal basis
//!
//! * `X₁`: infinitesimal rotation about `+y` (moves `o` along azimuth 0),
//! * `X₂`: infinitesimal rotation about `−x` (moves `o` along azimuth π/2),
//! * `X₃`: infinitesimal rotation about `+z` (spans k, fixes `o`),
//!
//! so that `p = span{X₁, X₂}` is identified with the tangent plane at `o`.
//! A [`LieVector`] `(v₁, v₂, v₃)` therefore corresponds to the angular
//! velocity `ω = (−v₂, v₁, v₃)`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::ops::Mul;

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

/// Default distance from the cut locus below which `log_map` refuses to work.
pub const LOG_CUT_MARGIN: f64 = 1e-6;

/// Colatitude (or rotation angle) up to which the coordinate cutoff is 1.
pub const CUTOFF_INNER: f64 = FRAC_PI_2;
/// Colatitude (or rotation angle) from which the coordinate cutoff is 0.
pub const CUTOFF_OUTER: f64 = PI - 0.1;

const STABILIZER_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("rotation angle {angle} is within {margin} of π; logarithm undefined")]
    AngleTooLarge { angle: f64, margin: f64 },
    #[error("element does not fix the north pole (displacement {displacement:e})")]
    NotInSubgroup { displacement: f64 },
}

pub type Vec3 = [f64; 3];
pub type Mat2 = [[f64; 2]; 2];

fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

/// A rotation of R³, stored as a unit quaternion `[w, x, y, z]`.
///
/// `q` and `-q` describe the same rotation; equality checks go through
/// [`GroupElement::approx_eq`], which ignores the sign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupElement {
    q: [f64; 4],
}

impl Default for GroupElement {
    fn default() -> Self {
        Self::identity()
    }
}

impl GroupElement {
    pub const fn identity() -> Self {
        Self {
            q: [1.0, 0.0, 0.0, 0.0],
        }
    }

    /// Builds an element from a (not necessarily normalized) quaternion.
    ///
    /// # Panics
    ///
    /// Panics on the zero quaternion.
    pub fn from_quaternion(q: [f64; 4]) -> Self {
        let n = q.iter().map(|c| c * c).sum::<f64>().sqrt();
        assert!(n > 0.0, "zero quaternion is not a rotation");
        Self {
            q: [q[0] / n, q[1] / n, q[2] / n, q[3] / n],
        }
    }

    pub fn quaternion(&self) -> [f64; 4] {
        self.q
    }

    /// Rotation by `angle` about the unit axis `axis`.
    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Self {
        let n = norm(&axis);
        let (s, c) = (0.5 * angle).sin_cos();
        Self::from_quaternion([c, s * axis[0] / n, s * axis[1] / n, s * axis[2] / n])
    }

    pub fn rot_x(angle: f64) -> Self {
        Self::from_axis_angle([1.0, 0.0, 0.0], angle)
    }

    pub fn rot_y(angle: f64) -> Self {
        Self::from_axis_angle([0.0, 1.0, 0.0], angle)
    }

    pub fn rot_z(angle: f64) -> Self {
        Self::from_axis_angle([0.0, 0.0, 1.0], angle)
    }

    /// The element `rot_z(azimuth) · rot_y(colatitude)`, which carries `o`
    /// to the point with the given spherical angles.
    pub fn at_colatitude(colatitude: f64, azimuth: f64) -> Self {
        Self::rot_z(azimuth).compose(&Self::rot_y(colatitude))
    }

    /// A Haar-distributed random rotation.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let q: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
        Self::from_quaternion(q)
    }

    /// A uniformly distributed element of the stabilizer K.
    pub fn random_stabilizer<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self::rot_z(rng.random_range(0.0..TAU))
    }

    /// Group law: the rotation `self ∘ other`, renormalized.
    pub fn compose(&self, other: &Self) -> Self {
        let [a0, a1, a2, a3] = self.q;
        let [b0, b1, b2, b3] = other.q;
        Self::from_quaternion([
            a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
            a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2,
            a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1,
            a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0,
        ])
    }

    pub fn inverse(&self) -> Self {
        let [w, x, y, z] = self.q;
        Self { q: [w, -x, -y, -z] }
    }

    /// Rotates a vector of R³.
    pub fn act(&self, v: &Vec3) -> Vec3 {
        let w = self.q[0];
        let u = [self.q[1], self.q[2], self.q[3]];
        let t = cross(&u, v);
        let t = [2.0 * t[0], 2.0 * t[1], 2.0 * t[2]];
        let ut = cross(&u, &t);
        [
            v[0] + w * t[0] + ut[0],
            v[1] + w * t[1] + ut[1],
            v[2] + w * t[2] + ut[2],
        ]
    }

    /// The coset projection `g ↦ g·o`.
    pub fn base_point(&self) -> SpherePoint {
        SpherePoint::new(self.act(&[0.0, 0.0, 1.0]))
    }

    pub fn rotation_matrix(&self) -> [[f64; 3]; 3] {
        let cols = [
            self.act(&[1.0, 0.0, 0.0]),
            self.act(&[0.0, 1.0, 0.0]),
            self.act(&[0.0, 0.0, 1.0]),
        ];
        std::array::from_fn(|i| std::array::from_fn(|j| cols[j][i]))
    }

    /// Rotation angle in `[0, π]`.
    pub fn rotation_angle(&self) -> f64 {
        let [w, x, y, z] = self.q;
        let n = (x * x + y * y + z * z).sqrt();
        2.0 * n.atan2(w.abs())
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        let d: f64 = self.q.iter().zip(&other.q).map(|(a, b)| a * b).sum();
        1.0 - d.abs() <= tol
    }

    /// Logarithm with the default cut-locus margin.
    pub fn log(&self) -> Result<LieVector, GeometryError> {
        log_map_with_margin(self, LOG_CUT_MARGIN)
    }

    /// Canonical coordinates `(x₁, x₂, x₃)`.
    ///
    /// `(x₁, x₂) = χ(θ)·θ·(cos ψ, sin ψ)` where `(θ, ψ)` are the spherical
    /// angles of `g·o`, so they are right-K-invariant and rotate under left
    /// multiplication by K exactly as `Ad(k)` does. `x₃` is the k-component of
    /// `log(g)` damped by `χ` applied to the rotation angle.
    pub fn canonical_coordinates(&self) -> Vec3 {
        let p = self.base_point();
        let theta = p.colatitude();
        let psi = p.azimuth();
        let r = cutoff(theta) * theta;
        let angle = self.rotation_angle();
        let weight = cutoff(angle);
        let x3 = if weight > 0.0 {
            // cutoff vanishes well before the log cut locus
            self.log().map(|v| weight * v.0[2]).unwrap_or(0.0)
        } else {
            0.0
        };
        [r * psi.cos(), r * psi.sin(), x3]
    }

    pub fn is_in_stabilizer(&self) -> bool {
        stabilizer_displacement(self) <= STABILIZER_TOL
    }
}

impl Mul for GroupElement {
    type Output = GroupElement;

    fn mul(self, rhs: Self) -> Self::Output {
        self.compose(&rhs)
    }
}

impl Mul for &GroupElement {
    type Output = GroupElement;

    fn mul(self, rhs: Self) -> Self::Output {
        self.compose(rhs)
    }
}

fn stabilizer_displacement(k: &GroupElement) -> f64 {
    let p = k.act(&[0.0, 0.0, 1.0]);
    norm(&[p[0], p[1], p[2] - 1.0])
}

/// C² cutoff: 1 on `[0, π/2]`, 0 on `[π − 0.1, π]`, smootherstep in between.
pub fn cutoff(theta: f64) -> f64 {
    if theta <= CUTOFF_INNER {
        1.0
    } else if theta >= CUTOFF_OUTER {
        0.0
    } else {
        let u = (theta - CUTOFF_INNER) / (CUTOFF_OUTER - CUTOFF_INNER);
        1.0 - u * u * u * (10.0 + u * (-15.0 + 6.0 * u))
    }
}

/// An element of so(3) in the basis `{X₁, X₂, X₃}`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LieVector(pub Vec3);

impl LieVector {
    pub const X1: LieVector = LieVector([1.0, 0.0, 0.0]);
    pub const X2: LieVector = LieVector([0.0, 1.0, 0.0]);
    pub const X3: LieVector = LieVector([0.0, 0.0, 1.0]);

    pub fn new(v1: f64, v2: f64, v3: f64) -> Self {
        Self([v1, v2, v3])
    }

    /// Lies in p, the complement of k.
    pub fn horizontal(v1: f64, v2: f64) -> Self {
        Self([v1, v2, 0.0])
    }

    pub fn scale(self, t: f64) -> Self {
        Self(self.0.map(|c| c * t))
    }

    /// Angular velocity in R³ corresponding to this algebra element.
    pub fn angular_velocity(&self) -> Vec3 {
        [-self.0[1], self.0[0], self.0[2]]
    }

    pub fn from_angular_velocity(w: &Vec3) -> Self {
        Self([w[1], -w[0], w[2]])
    }

    /// Ad-invariant inner product; the basis is orthonormal.
    pub fn inner(&self, other: &Self) -> f64 {
        dot(&self.0, &other.0)
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn exp(&self) -> GroupElement {
        exp_map(self)
    }

    /// Orthogonal split `v = p_part ⊕ k_part`.
    pub fn cartan_split(&self) -> ([f64; 2], f64) {
        cartan_project(self)
    }
}

/// Rotation by `|v|` about the axis of `v`.
pub fn exp_map(v: &LieVector) -> GroupElement {
    let w = v.angular_velocity();
    let angle = norm(&w);
    let half = 0.5 * angle;
    // sin(half)/angle, with its series near zero
    let k = if angle < 1e-8 {
        0.5 - angle * angle / 48.0
    } else {
        half.sin() / angle
    };
    GroupElement::from_quaternion([half.cos(), k * w[0], k * w[1], k * w[2]])
}

pub fn log_map(g: &GroupElement) -> Result<LieVector, GeometryError> {
    log_map_with_margin(g, LOG_CUT_MARGIN)
}

pub fn log_map_with_margin(g: &GroupElement, margin: f64) -> Result<LieVector, GeometryError> {
    let [mut w, mut x, mut y, mut z] = g.q;
    if w < 0.0 {
        (w, x, y, z) = (-w, -x, -y, -z);
    }
    let n = (x * x + y * y + z * z).sqrt();
    let angle = 2.0 * n.atan2(w);
    if angle >= PI - margin {
        return Err(GeometryError::AngleTooLarge { angle, margin });
    }
    let k = if n < 1e-12 { 2.0 / w } else { angle / n };
    Ok(LieVector::from_angular_velocity(&[k * x, k * y, k * z]))
}

pub fn cartan_project(v: &LieVector) -> ([f64; 2], f64) {
    ([v.0[0], v.0[1]], v.0[2])
}

/// Matrix of `Ad(k)` restricted to p in the basis `(X₁, X₂)`.
///
/// For `k = rot_z(ψ)` this is the planar rotation by `+ψ`.
pub fn ad_matrix(k: &GroupElement) -> Result<Mat2, GeometryError> {
    let displacement = stabilizer_displacement(k);
    if displacement > STABILIZER_TOL {
        return Err(GeometryError::NotInSubgroup { displacement });
    }
    let basis = [LieVector::X1, LieVector::X2];
    let images = basis.map(|x| k.act(&x.angular_velocity()));
    Ok(std::array::from_fn(|i| {
        std::array::from_fn(|j| dot(&basis[i].angular_velocity(), &images[j]))
    }))
}

/// A point of the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpherePoint(Vec3);

impl SpherePoint {
    pub const NORTH_POLE: SpherePoint = SpherePoint([0.0, 0.0, 1.0]);

    /// Normalizes `v` onto the sphere.
    pub fn new(v: Vec3) -> Self {
        let n = norm(&v);
        Self(v.map(|c| c / n))
    }

    pub fn from_angles(colatitude: f64, azimuth: f64) -> Self {
        let (st, ct) = colatitude.sin_cos();
        let (sp, cp) = azimuth.sin_cos();
        Self([st * cp, st * sp, ct])
    }

    pub fn xyz(&self) -> Vec3 {
        self.0
    }

    pub fn colatitude(&self) -> f64 {
        self.0[0].hypot(self.0[1]).atan2(self.0[2])
    }

    /// Azimuth in `[0, 2π)`; 0 at the poles.
    pub fn azimuth(&self) -> f64 {
        let a = self.0[1].atan2(self.0[0]);
        if a < 0.0 {
            a + TAU
        } else {
            a
        }
    }

    /// Great-circle distance.
    pub fn distance(&self, other: &SpherePoint) -> f64 {
        norm(&cross(&self.0, &other.0)).atan2(dot(&self.0, &other.0))
    }

    /// Moves a geodesic distance `length` from `self` in the unit tangent
    /// direction `dir` (assumed orthogonal to `self`).
    pub fn geodesic_step(&self, dir: &Vec3, length: f64) -> SpherePoint {
        let (s, c) = length.sin_cos();
        SpherePoint::new(std::array::from_fn(|i| c * self.0[i] + s * dir[i]))
    }

    /// An orthonormal frame `(e₁, e₂)` of the tangent plane at `self`.
    pub fn tangent_frame(&self) -> (Vec3, Vec3) {
        let p = self.0;
        // pick the coordinate axis least aligned with p
        let helper = if p[0].abs() <= p[1].abs() && p[0].abs() <= p[2].abs() {
            [1.0, 0.0, 0.0]
        } else if p[1].abs() <= p[2].abs() {
            [0.0, 1.0, 0.0]
        } else {
            [0.0, 0.0, 1.0]
        };
        let e1 = cross(&p, &helper);
        let n1 = norm(&e1);
        let e1 = e1.map(|c| c / n1);
        let e2 = cross(&p, &e1);
        (e1, e2)
    }
}
