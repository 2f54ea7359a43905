//! Gangolli and Courrège operators on zonal functions.
//!
//! A Gangolli operator
//!
//! ```text
//! Af(σ) = a(σ) Δf(σ) + ∫ (f(στ) − f(σ)) μ(σ, dτ)
//! ```
//!
//! is evaluated two ways: directly, with spherical means against the jump
//! kernel, and spectrally, as `−Σ (2ℓ+1) η(σ, ℓ) f̂(ℓ) φ_ℓ(σ)`. The full
//! Courrège form (killing, drift, matrix diffusion, compensated jumps) is
//! evaluated with finite differences along one-parameter subgroups.

use std::cell::Cell;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI, TAU};
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::fields::{
    mat2_dist, mat2_min_eigenvalue, mat2_mul, mat2_transpose, mat2_vec, DriftField, MatrixField, ZonalField,
};
use crate::geometry::{ad_matrix, GroupElement, LieVector, Mat2, SpherePoint};
use crate::levy::{LevyKernel, SymbolEvaluator, NEIGHBORHOOD_RADIUS, SMALL_JUMP_CUTOFF};
use crate::quadrature::{gauss_legendre, QuadratureRule};
use crate::spectral::{
    dense_colatitudes, laplacian_direct, spherical_mean, SpectralError, SphericalWeight, ZonalFunction,
};

/// Threshold of the positive maximum principle check.
pub const PMP_TOL: f64 = 1e-6;
/// Number of colatitudes scanned before refining the maximum.
pub const PMP_GRID: usize = 4096;
/// Default tolerance of the Schur commutant and residual tests.
pub const SCHUR_TOL: f64 = 1e-9;
/// Default tolerance of the invariance validator.
pub const INVARIANCE_TOL: f64 = 1e-8;
/// Default bound on the truncation tail of the spectral route.
pub const TRUNCATION_TOL: f64 = 1e-6;

const COEFFICIENT_GRID: usize = 2049;
const SUP_GRID: usize = 181;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("kernel violates the first moment condition (origin exponent α ≥ 1)")]
    FirstMomentViolation,
    #[error("colatitude {0} is too close to a pole for the direct route")]
    TooCloseToPole(f64),
    #[error("truncation tail {tail:e} exceeds tolerance {tol:e}")]
    TruncationTooCoarse { tail: f64, tol: f64 },
    #[error("invalid coefficients: {}", .0.join("; "))]
    InvalidCoefficients(Vec<String>),
    #[error(
        "matrix field does not commute with Ad(k): residual {residual:e} at colatitude {colatitude}, k = rot_z({angle})"
    )]
    NotInvariant { colatitude: f64, angle: f64, residual: f64 },
    #[error("matrix field is not scalar: residual {residual:e} at colatitude {colatitude}")]
    NotScalar { colatitude: f64, residual: f64 },
    #[error("test function maximum {0} is negative")]
    NegativeMaximum(f64),
    #[error(transparent)]
    Spectral(SpectralError),
}

impl From<SpectralError> for OperatorError {
    fn from(e: SpectralError) -> Self {
        match e {
            SpectralError::TooCloseToPole(s) => OperatorError::TooCloseToPole(s),
            other => OperatorError::Spectral(other),
        }
    }
}

/// Coefficients `(a, μ)` of a Gangolli operator, optionally extended to the
/// full Courrège form with killing `c`, drift `b` and diffusion matrix `A`.
#[derive(Debug, Clone)]
pub struct GangolliCoefficients {
    diffusion: ZonalField,
    kernel: LevyKernel,
    killing: Option<ZonalField>,
    drift: Option<DriftField>,
    diffusion_matrix: Option<MatrixField>,
}

impl GangolliCoefficients {
    pub fn new(diffusion: ZonalField, kernel: LevyKernel) -> Self {
        Self {
            diffusion,
            kernel,
            killing: None,
            drift: None,
            diffusion_matrix: None,
        }
    }

    /// `a Δ` with no jumps.
    pub fn heat(a: f64) -> Self {
        Self::new(ZonalField::constant(a), LevyKernel::zero())
    }

    pub fn with_killing(mut self, c: ZonalField) -> Self {
        self.killing = Some(c);
        self
    }

    pub fn with_drift(mut self, b: DriftField) -> Self {
        self.drift = Some(b);
        self
    }

    pub fn with_diffusion_matrix(mut self, a: MatrixField) -> Self {
        self.diffusion_matrix = Some(a);
        self
    }

    pub fn diffusion(&self) -> &ZonalField {
        &self.diffusion
    }

    pub fn kernel(&self) -> &LevyKernel {
        &self.kernel
    }

    pub fn killing(&self) -> Option<&ZonalField> {
        self.killing.as_ref()
    }

    pub fn drift(&self) -> Option<&DriftField> {
        self.drift.as_ref()
    }

    pub fn diffusion_matrix(&self) -> Option<&MatrixField> {
        self.diffusion_matrix.as_ref()
    }

    pub fn killing_at(&self, g: &GroupElement) -> f64 {
        self.killing.as_ref().map_or(0.0, |c| c.at(g))
    }

    pub fn drift_at(&self, g: &GroupElement) -> [f64; 2] {
        self.drift.as_ref().map_or([0.0, 0.0], |b| b.eval(g))
    }

    /// `A(g)`, defaulting to `a(s(g))·I₂`.
    pub fn matrix_at(&self, g: &GroupElement) -> Mat2 {
        match &self.diffusion_matrix {
            Some(m) => m.eval(g),
            None => {
                let a = self.diffusion.at(g);
                [[a, 0.0], [0.0, a]]
            }
        }
    }

    /// Checks `a ≥ 0`, `c ≥ 0` on a dense colatitude grid and that `A` is
    /// symmetric with eigenvalues `≥ −1e-12` on a grid of group elements.
    pub fn validate(&self) -> Result<(), OperatorError> {
        let mut failures = Vec::new();
        let a_min = self.diffusion.min_on_grid(COEFFICIENT_GRID);
        if a_min < 0.0 {
            failures.push(format!("diffusion a has minimum {a_min:e} < 0"));
        }
        if let Some(c) = &self.killing {
            let c_min = c.min_on_grid(COEFFICIENT_GRID);
            if c_min < 0.0 {
                failures.push(format!("killing c has minimum {c_min:e} < 0"));
            }
        }
        if let Some(field) = &self.diffusion_matrix {
            'outer: for s in dense_colatitudes(65) {
                for j in 0..8 {
                    let g = GroupElement::at_colatitude(s, TAU * j as f64 / 8.0);
                    let m = field.eval(&g);
                    if (m[0][1] - m[1][0]).abs() > 1e-12 {
                        failures.push(format!("diffusion matrix not symmetric at colatitude {s}"));
                        break 'outer;
                    }
                    let ev = mat2_min_eigenvalue(&m);
                    if ev < -1e-12 {
                        failures.push(format!("diffusion matrix has eigenvalue {ev:e} at colatitude {s}"));
                        break 'outer;
                    }
                }
            }
        }
        if failures.is_empty() {
            Ok(())
        } else {
            Err(OperatorError::InvalidCoefficients(failures))
        }
    }
}

/// Evaluation route.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Direct,
    Spectral,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Direct => "direct",
            Method::Spectral => "spectral",
        })
    }
}

/// Values of `Af` at a list of colatitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorReport {
    pub method: Method,
    pub colatitudes: Vec<f64>,
    pub values: Vec<f64>,
    /// Quadrature error estimate (direct) or truncation tail (spectral).
    pub error_estimates: Vec<f64>,
}

/// Spectral evaluation with its truncation tail bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralValue {
    pub value: f64,
    pub tail: f64,
}

/// A Gangolli operator with its symbol cached up to a band limit.
#[derive(Debug, Clone)]
pub struct GangolliOperator {
    co: GangolliCoefficients,
    symbol: SymbolEvaluator,
    small_jump_moment: f64,
    truncation_tol: f64,
}

impl GangolliOperator {
    pub fn new(co: GangolliCoefficients, band_limit: usize) -> Self {
        let symbol = SymbolEvaluator::new(co.diffusion.clone(), co.kernel.clone(), band_limit);
        let small_jump_moment = co.kernel.base().density_second_moment(SMALL_JUMP_CUTOFF);
        Self {
            co,
            symbol,
            small_jump_moment,
            truncation_tol: TRUNCATION_TOL,
        }
    }

    pub fn with_truncation_tol(mut self, tol: f64) -> Self {
        self.truncation_tol = tol;
        self
    }

    pub fn coefficients(&self) -> &GangolliCoefficients {
        &self.co
    }

    pub fn symbol(&self) -> &SymbolEvaluator {
        &self.symbol
    }

    /// Direct route: `a(s)Δf(s) + m(s)∫(M_θf(s) − f(s)) ν₀(dθ)` with `M_θ` the
    /// spherical mean; jumps below `ε` use `(θ²/4)Δf(s)`.
    pub fn apply_direct(&self, f: &ZonalFunction, s: f64) -> Result<f64, OperatorError> {
        self.apply_direct_with_error(f, s).map(|(v, _)| v)
    }

    fn apply_direct_with_error(&self, f: &ZonalFunction, s: f64) -> Result<(f64, f64), OperatorError> {
        let kernel = &self.co.kernel;
        if !kernel.first_moment_finite() {
            return Err(OperatorError::FirstMomentViolation);
        }
        let lap = laplacian_direct(f, s)?;
        let mut value = self.co.diffusion.eval(s) * lap;
        let mut error = 0.0;
        if !kernel.is_zero() {
            let base = kernel.base();
            let fs = f.eval(s);
            let mut jump: f64 = base
                .atoms()
                .iter()
                .map(|a| a.mass * (spherical_mean(f, a.angle, s) - fs))
                .sum();
            if base.density().is_some() {
                let outer = base.integrate_density(SMALL_JUMP_CUTOFF, PI, |t| spherical_mean(f, t, s) - fs);
                jump += outer.value + 0.25 * self.small_jump_moment * lap;
                error = outer.error;
            }
            let m = kernel.multiplier().eval(s);
            value += m * jump;
            error *= m.abs();
        }
        Ok((value, error))
    }

    fn jump_exponent(&self, l: usize) -> f64 {
        match self.symbol.jump_exponents().get(l) {
            Some(&j) => j,
            None => self.co.kernel.base().jump_exponent(l),
        }
    }

    fn eta(&self, s: f64, l: usize) -> f64 {
        self.co.diffusion.eval(s) * SphericalWeight(l).casimir()
            + self.co.kernel.multiplier().eval(s) * self.jump_exponent(l)
    }

    /// Spectral route truncated at the cached band limit `L`:
    /// `−Σ_{ℓ≤L} (2ℓ+1) η(s,ℓ) f̂(ℓ) P_ℓ(cos s)`.
    pub fn apply_spectral(&self, f: &ZonalFunction, s: f64) -> Result<SpectralValue, OperatorError> {
        let l_sym = self.symbol.band_limit();
        let x = s.cos();
        let l_top = f.band_limit().min(l_sym);
        let mut value = 0.0;
        let (mut p0, mut p1) = (1.0, x);
        for l in 0..=l_top {
            let p = match l {
                0 => 1.0,
                1 => x,
                _ => {
                    let k = (l - 1) as f64;
                    let p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
                    p0 = p1;
                    p1 = p2;
                    p2
                }
            };
            let c = f.coefficient(l);
            if c != 0.0 {
                value -= SphericalWeight(l).dimension() as f64 * self.symbol.eta(s, l) * c * p;
            }
        }
        let tail = self.truncation_tail(f, l_sym);
        if tail > self.truncation_tol {
            return Err(OperatorError::TruncationTooCoarse {
                tail,
                tol: self.truncation_tol,
            });
        }
        Ok(SpectralValue { value, tail })
    }

    /// `Σ_{ℓ > L} (2ℓ+1) sup_s|η(s,ℓ)| |f̂(ℓ)|`.
    pub fn truncation_tail(&self, f: &ZonalFunction, l_trunc: usize) -> f64 {
        ((l_trunc + 1)..=f.band_limit())
            .filter(|&l| f.coefficient(l) != 0.0)
            .map(|l| {
                let sup = dense_colatitudes(SUP_GRID)
                    .map(|s| self.eta(s, l).abs())
                    .fold(0.0, f64::max);
                SphericalWeight(l).dimension() as f64 * sup * f.coefficient(l).abs()
            })
            .fold(0.0, |acc, t| acc + t)
    }

    /// Direct route away from the poles, spectral route within
    /// [`crate::spectral::POLE_MARGIN`] of them.
    pub fn apply_pointwise(&self, f: &ZonalFunction, s: f64) -> Result<f64, OperatorError> {
        match self.apply_direct(f, s) {
            Err(OperatorError::TooCloseToPole(_)) => self.apply_spectral(f, s).map(|v| v.value),
            other => other,
        }
    }

    /// Evaluates `Af` at every colatitude, in parallel.
    pub fn evaluate(
        &self,
        f: &ZonalFunction,
        colatitudes: &[f64],
        method: Method,
    ) -> Result<OperatorReport, OperatorError> {
        let rows: Vec<(f64, f64)> = colatitudes
            .par_iter()
            .map(|&s| match method {
                Method::Direct => self.apply_direct_with_error(f, s),
                Method::Spectral => self.apply_spectral(f, s).map(|v| (v.value, v.tail)),
            })
            .collect::<Result<_, _>>()?;
        let (values, error_estimates) = rows.into_iter().unzip();
        Ok(OperatorReport {
            method,
            colatitudes: colatitudes.to_vec(),
            values,
            error_estimates,
        })
    }
}

/// Direct evaluation of the Gangolli operator at colatitude `s`.
pub fn gangolli_apply_direct(co: &GangolliCoefficients, f: &ZonalFunction, s: f64) -> Result<f64, OperatorError> {
    GangolliOperator::new(co.clone(), 0).apply_direct(f, s)
}

/// Spectral evaluation truncated at `band_limit`.
pub fn gangolli_apply_spectral(
    co: &GangolliCoefficients,
    f: &ZonalFunction,
    s: f64,
    band_limit: usize,
) -> Result<SpectralValue, OperatorError> {
    GangolliOperator::new(co.clone(), band_limit).apply_spectral(f, s)
}

/// Step sizes and switches for [`courrege_apply_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CourregeOptions {
    /// Central-difference step for `X_i f`, one Richardson level.
    pub first_step: f64,
    /// Central-difference step for `X_j X_k f`, two Richardson levels.
    pub second_step: f64,
    pub azimuth_nodes: usize,
    /// Subtract `Σ x_i(τ) X_i f(σ)` inside the jump integral.
    pub compensate: bool,
}

impl Default for CourregeOptions {
    fn default() -> Self {
        Self {
            first_step: 1e-5,
            second_step: 1e-3,
            azimuth_nodes: 256,
            compensate: true,
        }
    }
}

/// The four terms of the Courrège form at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CourregeValue {
    pub value: f64,
    pub killing: f64,
    pub drift: f64,
    pub diffusion: f64,
    pub jump: f64,
    /// Largest azimuthally averaged compensator seen; zero for zonal kernels
    /// up to rounding.
    pub compensator_residual: f64,
}

fn zonal_at(f: &ZonalFunction, g: &GroupElement) -> f64 {
    f.eval_cos(g.act(&[0.0, 0.0, 1.0])[2])
}

/// `X f(σ)` by central differences along `σ exp(tX)`.
pub fn derivative_along(f: &ZonalFunction, sigma: &GroupElement, x: LieVector, h: f64) -> f64 {
    let d = |h: f64| {
        let plus = zonal_at(f, &(sigma * &x.scale(h).exp()));
        let minus = zonal_at(f, &(sigma * &x.scale(-h).exp()));
        (plus - minus) / (2.0 * h)
    };
    (4.0 * d(0.5 * h) - d(h)) / 3.0
}

/// `X_j X_k f(σ) = ∂_t ∂_u f(σ exp(tX_j) exp(uX_k))` at 0.
pub fn second_derivative_along(
    f: &ZonalFunction,
    sigma: &GroupElement,
    xj: LieVector,
    xk: LieVector,
    h: f64,
) -> f64 {
    let at = |t: f64, u: f64| zonal_at(f, &(sigma * &xj.scale(t).exp() * xk.scale(u).exp()));
    let e = |h: f64| (at(h, h) - at(h, -h) - at(-h, h) + at(-h, -h)) / (4.0 * h * h);
    let (e1, e2, e4) = (e(h), e(0.5 * h), e(0.25 * h));
    let r1 = (4.0 * e2 - e1) / 3.0;
    let r2 = (4.0 * e4 - e2) / 3.0;
    (16.0 * r2 - r1) / 15.0
}

pub fn courrege_apply(co: &GangolliCoefficients, f: &ZonalFunction, s: f64) -> Result<CourregeValue, OperatorError> {
    courrege_apply_with(co, f, s, &CourregeOptions::default())
}

/// Evaluates
///
/// ```text
/// −c f + Σ b_i X_i f + Σ A_jk X_j X_k f + ∫ (f(στ) − f(σ) − Σ x_i(τ) X_i f(σ)) μ(σ, dτ)
/// ```
///
/// at `σ = rot_y(s)`. Jumps are averaged over `τ = rot_z(ψ)·rot_y(θ)` with
/// uniform `ψ`.
pub fn courrege_apply_with(
    co: &GangolliCoefficients,
    f: &ZonalFunction,
    s: f64,
    opts: &CourregeOptions,
) -> Result<CourregeValue, OperatorError> {
    let kernel = &co.kernel;
    if !opts.compensate && !kernel.first_moment_finite() {
        return Err(OperatorError::FirstMomentViolation);
    }
    let sigma = GroupElement::rot_y(s);
    let fs = zonal_at(f, &sigma);
    let basis = [LieVector::X1, LieVector::X2];
    let grad = basis.map(|x| derivative_along(f, &sigma, x, opts.first_step));
    let hess: Mat2 =
        std::array::from_fn(|j| std::array::from_fn(|k| second_derivative_along(f, &sigma, basis[j], basis[k], opts.second_step)));

    let killing = -co.killing_at(&sigma) * fs;
    let b = co.drift_at(&sigma);
    let drift = b[0] * grad[0] + b[1] * grad[1];
    let a = co.matrix_at(&sigma);
    let diffusion: f64 = (0..2).flat_map(|j| (0..2).map(move |k| (j, k))).map(|(j, k)| a[j][k] * hess[j][k]).sum();

    let residual = Cell::new(0.0f64);
    let mut jump = 0.0;
    if !kernel.is_zero() {
        let n = opts.azimuth_nodes.max(1);
        let averaged = |theta: f64| {
            let (mut val, mut comp) = (0.0, 0.0);
            for j in 0..n {
                let tau = GroupElement::at_colatitude(theta, TAU * j as f64 / n as f64);
                let x = tau.canonical_coordinates();
                let c = x[0] * grad[0] + x[1] * grad[1];
                let mut v = zonal_at(f, &(sigma * tau)) - fs;
                if opts.compensate {
                    v -= c;
                }
                val += v;
                comp += c;
            }
            let comp = comp / n as f64;
            residual.set(residual.get().max(comp.abs()));
            val / n as f64
        };
        let base = kernel.base();
        jump = base.atoms().iter().map(|a| a.mass * averaged(a.angle)).sum();
        if base.density().is_some() {
            let lap = hess[0][0] + hess[1][1];
            jump += base.integrate_density(SMALL_JUMP_CUTOFF, PI, averaged).value
                + 0.25 * base.density_second_moment(SMALL_JUMP_CUTOFF) * lap;
        }
        jump *= kernel.multiplier().at(&sigma);
    }
    Ok(CourregeValue {
        value: killing + drift + diffusion + jump,
        killing,
        drift,
        diffusion,
        jump,
        compensator_residual: residual.get(),
    })
}

/// Result of a positive-maximum-principle check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PmpOutcome {
    pub argmax: f64,
    pub max_value: f64,
    pub generator_value: f64,
    pub pass: bool,
}

/// Global maximum of `F` on `[0, π]`: a [`PMP_GRID`]-point scan refined by
/// golden-section search.
pub fn locate_maximum(f: &ZonalFunction) -> (f64, f64) {
    let grid: Vec<f64> = dense_colatitudes(PMP_GRID).collect();
    let (i_best, _) = grid
        .iter()
        .map(|&s| f.eval(s))
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, v)| if v > best.1 { (i, v) } else { best });
    let lo = grid[i_best.saturating_sub(1)];
    let hi = grid[(i_best + 1).min(grid.len() - 1)];
    let s = golden_section_max(|s| f.eval(s), lo, hi, 1e-12);
    let candidates = [s, grid[i_best], 0.0, PI];
    candidates
        .into_iter()
        .map(|s| (s, f.eval(s)))
        .fold((0.0, f64::NEG_INFINITY), |best, c| if c.1 > best.1 { c } else { best })
}

fn golden_section_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Finds the global maximum `s*` of `f` and checks `Af(s*) ≤` [`PMP_TOL`].
pub fn pmp_check(
    apply: impl Fn(&ZonalFunction, f64) -> Result<f64, OperatorError>,
    f: &ZonalFunction,
) -> Result<PmpOutcome, OperatorError> {
    let (argmax, max_value) = locate_maximum(f);
    if max_value < 0.0 {
        return Err(OperatorError::NegativeMaximum(max_value));
    }
    let generator_value = apply(f, argmax)?;
    Ok(PmpOutcome {
        argmax,
        max_value,
        generator_value,
        pass: generator_value <= PMP_TOL,
    })
}

/// Sampled triples `(g, k, k′)` with `g ∈ G` Haar-random and `k, k′ ∈ K`.
/// The first triple always uses `k = rot_z(π/2)`, `k′ = rot_z(π/3)`.
#[derive(Debug, Clone)]
pub struct InvarianceSamples {
    pub triples: Vec<(GroupElement, GroupElement, GroupElement)>,
}

impl InvarianceSamples {
    pub fn random(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let triples = (0..n.max(1))
            .map(|i| {
                let g = GroupElement::random(&mut rng);
                if i == 0 {
                    (g, GroupElement::rot_z(FRAC_PI_2), GroupElement::rot_z(FRAC_PI_3))
                } else {
                    let k = GroupElement::random_stabilizer(&mut rng);
                    let kp = GroupElement::random_stabilizer(&mut rng);
                    (g, k, kp)
                }
            })
            .collect();
        Self { triples }
    }
}

/// Scalar field recovered from an Ad(K)-invariant matrix field.
#[derive(Debug, Clone)]
pub struct SchurReduction {
    pub alpha: ZonalField,
    pub max_commutator: f64,
    pub max_residual: f64,
}

/// Recovers `α` with `A(g) = α(g) I₂` from a matrix field commuting with
/// every `[Ad(k)]`.
///
/// Fails with the worst sampled commutator `‖[Ad(k)]A(g) − A(g)[Ad(k)]‖_F`
/// when it exceeds [`SCHUR_TOL`], or with the worst `‖A(g) − α(g)I₂‖_F`.
pub fn schur_reduce(field: &MatrixField, samples: &InvarianceSamples) -> Result<SchurReduction, OperatorError> {
    let mut worst_comm = (0.0, 0.0, 0.0);
    let mut worst_res = (0.0, 0.0);
    for (g, k, _) in &samples.triples {
        let a = field.eval(g);
        let ad = ad_matrix(k).expect("samples draw k from K");
        let comm = mat2_dist(&mat2_mul(&ad, &a), &mat2_mul(&a, &ad));
        let s = g.base_point().colatitude();
        if comm > worst_comm.2 {
            worst_comm = (s, rotation_about_z(k), comm);
        }
        let alpha = 0.5 * (a[0][0] + a[1][1]);
        let res = mat2_dist(&a, &[[alpha, 0.0], [0.0, alpha]]);
        if res > worst_res.1 {
            worst_res = (s, res);
        }
    }
    if worst_comm.2 > SCHUR_TOL {
        return Err(OperatorError::NotInvariant {
            colatitude: worst_comm.0,
            angle: worst_comm.1,
            residual: worst_comm.2,
        });
    }
    if worst_res.1 > SCHUR_TOL {
        return Err(OperatorError::NotScalar {
            colatitude: worst_res.0,
            residual: worst_res.1,
        });
    }
    let field = field.clone();
    Ok(SchurReduction {
        alpha: ZonalField::new("tr A / 2", move |s| {
            let a = field.eval(&GroupElement::rot_y(s));
            0.5 * (a[0][0] + a[1][1])
        }),
        max_commutator: worst_comm.2,
        max_residual: worst_res.1,
    })
}

fn rotation_about_z(k: &GroupElement) -> f64 {
    let q = k.quaternion();
    2.0 * q[3].atan2(q[0])
}

/// The invariance conditions on Courrège coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Condition {
    /// `c(gk) = c(g)`
    I,
    /// `b(g) = [Ad(k)]ᵀ b(gk)`
    II,
    /// `A(g) = [Ad(k)]ᵀ A(gk) [Ad(k)]`
    III,
    /// `μ(gk, B) = μ(g, kB)`
    IV,
    /// `c(kgk′) = c(g)`
    V,
    /// `b(g) = b(kgk′)` and `b(g)` is Ad(K)-invariant
    VI,
    /// `A(g) = A(kgk′)` and `A(g)` is Ad(K)-invariant
    VII,
    /// `μ(gk′, B) = μ(kg, k′B)`
    VIII,
}

impl Condition {
    pub const ALL: [Condition; 8] = [
        Condition::I,
        Condition::II,
        Condition::III,
        Condition::IV,
        Condition::V,
        Condition::VI,
        Condition::VII,
        Condition::VIII,
    ];
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Condition::I => "I",
            Condition::II => "II",
            Condition::III => "III",
            Condition::IV => "IV",
            Condition::V => "V",
            Condition::VI => "VI",
            Condition::VII => "VII",
            Condition::VIII => "VIII",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionCheck {
    pub condition: Condition,
    pub worst: f64,
    pub pass: bool,
    /// The `(g, k, k′)` triple attaining `worst`.
    pub witness: Option<(GroupElement, GroupElement, GroupElement)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvarianceReport {
    pub tolerance: f64,
    pub checks: Vec<ConditionCheck>,
}

impl InvarianceReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn get(&self, condition: Condition) -> &ConditionCheck {
        self.checks
            .iter()
            .find(|c| c.condition == condition)
            .expect("every condition is checked")
    }

    pub fn failed(&self) -> Vec<Condition> {
        self.checks.iter().filter(|c| !c.pass).map(|c| c.condition).collect()
    }
}

/// Bounded test functions on S² vanishing to second order at `o`, used to
/// compare kernel measures: `h_c(p) = (1 − p_z)·exp(2 p·c)`.
const TEST_CENTERS: [[f64; 3]; 3] = [[0.6, 0.0, 0.8], [0.0, -0.8, 0.6], [0.48, 0.36, -0.8]];

fn test_function(center: &[f64; 3], p: &[f64; 3]) -> f64 {
    let d = center[0] * p[0] + center[1] * p[1] + center[2] * p[2];
    (1.0 - p[2]) * (2.0 * d).exp()
}

struct KernelQuadrature {
    inner: QuadratureRule,
    outer: QuadratureRule,
    azimuth_nodes: usize,
}

impl KernelQuadrature {
    fn new() -> Self {
        Self {
            inner: gauss_legendre(48).expect("positive order"),
            outer: gauss_legendre(64).expect("positive order"),
            azimuth_nodes: 128,
        }
    }

    /// `∫ h(τ·o) μ(g, dτ)`.
    fn integrate(&self, kernel: &LevyKernel, g: &GroupElement, h: &dyn Fn(&[f64; 3]) -> f64) -> f64 {
        let m = kernel.multiplier().at(g);
        if m == 0.0 || kernel.is_zero() {
            return 0.0;
        }
        let n = self.azimuth_nodes;
        let avg = |theta: f64| {
            (0..n)
                .map(|j| h(&SpherePoint::from_angles(theta, TAU * j as f64 / n as f64).xyz()))
                .sum::<f64>()
                / n as f64
        };
        let base = kernel.base();
        let mut total: f64 = base.atoms().iter().map(|a| a.mass * avg(a.angle)).sum();
        if let Some(d) = base.density() {
            let delta = NEIGHBORHOOD_RADIUS;
            let p = 2.0 / (2.0 - d.alpha());
            total += self.inner.integrate_on(0.0, 1.0, |u| {
                let t = delta * u.powf(p);
                d.eval(t) * avg(t) * delta * p * u.powf(p - 1.0)
            });
            total += self.outer.integrate_on(delta, PI, |t| d.eval(t) * avg(t));
        }
        m * total
    }
}

/// Checks conditions (I)–(VIII) on every sampled triple.
pub fn validate_invariance(co: &GangolliCoefficients, samples: &InvarianceSamples, tolerance: f64) -> InvarianceReport {
    let quad = KernelQuadrature::new();
    let per_triple: Vec<[f64; 8]> = samples
        .triples
        .par_iter()
        .map(|(g, k, kp)| {
            let gk = g * k;
            let kgkp = k * g * *kp;
            let ad = ad_matrix(k).expect("k ∈ K");
            let ad_t = mat2_transpose(&ad);

            let c_g = co.killing_at(g);
            let cond1 = (co.killing_at(&gk) - c_g).abs();
            let cond5 = (co.killing_at(&kgkp) - c_g).abs();

            let b_g = co.drift_at(g);
            let rotated = mat2_vec(&ad_t, &co.drift_at(&gk));
            let cond2 = dist2(&b_g, &rotated);
            let cond6 = dist2(&b_g, &co.drift_at(&kgkp)).max(dist2(&b_g, &mat2_vec(&ad_t, &b_g)));

            let a_g = co.matrix_at(g);
            let conj = |m: &Mat2| mat2_mul(&mat2_mul(&ad_t, m), &ad);
            let cond3 = mat2_dist(&a_g, &conj(&co.matrix_at(&gk)));
            let cond7 = mat2_dist(&a_g, &co.matrix_at(&kgkp)).max(mat2_dist(&a_g, &conj(&a_g)));

            let (mut cond4, mut cond8) = (0.0f64, 0.0f64);
            if !co.kernel.is_zero() {
                let kg = k * g;
                let gkp = g * kp;
                let k_inv = k.inverse();
                let kp_inv = kp.inverse();
                for c in &TEST_CENTERS {
                    let h = |p: &[f64; 3]| test_function(c, p);
                    let h_k = |p: &[f64; 3]| test_function(c, &k_inv.act(p));
                    let h_kp = |p: &[f64; 3]| test_function(c, &kp_inv.act(p));
                    let lhs4 = quad.integrate(&co.kernel, &gk, &h);
                    let rhs4 = quad.integrate(&co.kernel, g, &h_k);
                    cond4 = cond4.max((lhs4 - rhs4).abs());
                    let lhs8 = quad.integrate(&co.kernel, &gkp, &h);
                    let rhs8 = quad.integrate(&co.kernel, &kg, &h_kp);
                    cond8 = cond8.max((lhs8 - rhs8).abs());
                }
            }
            [cond1, cond2, cond3, cond4, cond5, cond6, cond7, cond8]
        })
        .collect();

    let checks = Condition::ALL
        .iter()
        .enumerate()
        .map(|(i, &condition)| {
            let (idx, worst) = per_triple
                .iter()
                .enumerate()
                .map(|(t, v)| (t, v[i]))
                .fold((0, 0.0), |best, c| if c.1 > best.1 { c } else { best });
            let pass = worst <= tolerance;
            ConditionCheck {
                condition,
                worst,
                pass,
                witness: (!pass).then(|| samples.triples[idx]),
            }
        })
        .collect();
    InvarianceReport { tolerance, checks }
}

fn dist2(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}
