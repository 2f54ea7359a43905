//! K-bi-invariant Lévy measures and kernels on S², and the spherical symbol
//!
//! ```text
//! η(s, ℓ) = a(s)·ℓ(ℓ+1) + m(s)·∫ (1 − P_ℓ(cos θ)) ν₀(dθ).
//! ```
//!
//! A zonal Lévy measure is described by its law on the jump angle
//! `θ ∈ (0, π]`: finitely many atoms plus an optional density `ρ(θ)` with
//! declared origin behaviour `ρ(θ) ~ θ^{−1−α}`.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::fields::ZonalField;
use crate::quadrature::{gauss_legendre, integrate_adaptive, Integral, integrate_from_origin, integrate_graded};
use crate::spectral::{legendre_unchecked, SphericalWeight, ZonalFunction};

/// Radius of the neighbourhood `U = {θ < δ}` used for the integrability split.
pub const NEIGHBORHOOD_RADIUS: f64 = 0.1;
/// Below this jump angle `1 − P_ℓ(cos θ)` is replaced by `ℓ(ℓ+1)θ²/4`.
pub const SMALL_JUMP_CUTOFF: f64 = 1e-3;

const GRID_CHECK_POINTS: usize = 2049;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LevyError {
    #[error("invalid Lévy measure: {}", failures.join("; "))]
    InvalidMeasure { failures: Vec<String> },
    #[error("kernel multiplier is negative ({value:e}) at colatitude {colatitude}")]
    NegativeMultiplier { colatitude: f64, value: f64 },
    #[error("Sugiura zeta diverges for 2s = {two_s} ≤ rank 1")]
    DivergenceWarning { two_s: f64 },
}

/// A point mass on the jump angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub angle: f64,
    pub mass: f64,
}

/// Density `ρ(θ)` of the jump angle on `(0, π]`.
#[derive(Clone)]
pub struct Density {
    rho: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    alpha: f64,
    label: String,
}

impl fmt::Debug for Density {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Density")
            .field("label", &self.label)
            .field("alpha", &self.alpha)
            .finish()
    }
}

impl Density {
    /// `scale · θ^{−1−α}`.
    pub fn power(scale: f64, alpha: f64) -> Self {
        Self {
            rho: Arc::new(move |t: f64| scale * t.powf(-1.0 - alpha)),
            alpha,
            label: format!("{scale} theta^(-1-{alpha})"),
        }
    }

    /// An arbitrary density that behaves like `θ^{−1−α}` at the origin.
    pub fn custom(
        label: impl Into<String>,
        alpha: f64,
        rho: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            rho: Arc::new(rho),
            alpha,
            label: label.into(),
        }
    }

    pub fn eval(&self, theta: f64) -> f64 {
        (self.rho)(theta)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

/// How density integrals over `[ε, π]` are computed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuadraturePolicy {
    /// Adaptive Gauss–Kronrod to an absolute tolerance.
    Adaptive { abs_tol: f64 },
    /// Fixed composite Gauss–Legendre on geometrically graded panels.
    Graded { panels: usize, nodes: usize },
}

impl Default for QuadraturePolicy {
    fn default() -> Self {
        QuadraturePolicy::Adaptive { abs_tol: 1e-12 }
    }
}

/// A K-bi-invariant Lévy measure, given by its jump-angle law.
#[derive(Debug, Clone, Default)]
pub struct ZonalLevyMeasure {
    atoms: Vec<Atom>,
    density: Option<Density>,
    policy: QuadraturePolicy,
}

/// Outcome of [`validate_levy`].
#[derive(Debug, Clone, PartialEq)]
pub struct LevyValidation {
    pub no_atom_at_origin: bool,
    pub finite_mass_away: bool,
    pub square_integrable: bool,
    /// `ν([δ, π])`
    pub mass_away: f64,
    /// `∫₀^δ θ² ν(dθ)`
    pub second_moment_near_origin: f64,
    pub first_moment_finite: bool,
    pub failures: Vec<String>,
}

impl LevyValidation {
    pub fn is_valid(&self) -> bool {
        self.failures.is_empty()
    }
}

impl ZonalLevyMeasure {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_atoms(atoms: impl IntoIterator<Item = (f64, f64)>) -> Self {
        Self {
            atoms: atoms
                .into_iter()
                .map(|(angle, mass)| Atom { angle, mass })
                .collect(),
            ..Self::default()
        }
    }

    pub fn with_atom(mut self, angle: f64, mass: f64) -> Self {
        self.atoms.push(Atom { angle, mass });
        self
    }

    pub fn with_density(mut self, density: Density) -> Self {
        self.density = Some(density);
        self
    }

    pub fn with_policy(mut self, policy: QuadraturePolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn density(&self) -> Option<&Density> {
        self.density.as_ref()
    }

    pub fn policy(&self) -> QuadraturePolicy {
        self.policy
    }

    pub fn is_zero(&self) -> bool {
        self.density.is_none() && self.atoms.iter().all(|a| a.mass == 0.0)
    }

    /// Multiplies every mass and the density by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom {
                    angle: a.angle,
                    mass: c * a.mass,
                })
                .collect(),
            density: self.density.as_ref().map(|d| {
                let inner = d.clone();
                Density::custom(format!("{c} * ({})", d.label), d.alpha, move |t| c * inner.eval(t))
            }),
            policy: self.policy,
        }
    }

    /// Total mass, `None` when a density makes it infinite.
    pub fn total_mass(&self) -> Option<f64> {
        if self.density.is_some() {
            None
        } else {
            Some(self.atoms.iter().map(|a| a.mass).sum())
        }
    }

    /// `∫ θ ν(dθ) < ∞`.
    pub fn first_moment_finite(&self) -> bool {
        self.density.as_ref().is_none_or(|d| d.alpha < 1.0)
    }

    /// `∫_a^b ρ(θ) g(θ) dθ` under the measure's quadrature policy.
    pub fn integrate_density(&self, a: f64, b: f64, g: impl Fn(f64) -> f64) -> Integral {
        let Some(d) = &self.density else {
            return Integral { value: 0.0, error: 0.0 };
        };
        let integrand = |t: f64| d.eval(t) * g(t);
        match self.policy {
            QuadraturePolicy::Adaptive { abs_tol } => integrate_adaptive(integrand, a, b, abs_tol),
            QuadraturePolicy::Graded { panels, nodes } => {
                let rule = gauss_legendre(nodes).expect("positive order");
                Integral {
                    value: integrate_graded(integrand, a, b, panels, &rule),
                    error: 0.0,
                }
            }
        }
    }

    /// `∫₀^b θ² ρ(θ) dθ`, infinite when `α ≥ 2`.
    pub fn density_second_moment(&self, b: f64) -> f64 {
        let Some(d) = &self.density else {
            return 0.0;
        };
        if d.alpha >= 2.0 {
            return f64::INFINITY;
        }
        let integrand = |t: f64| t * t * d.eval(t);
        match self.policy {
            QuadraturePolicy::Adaptive { abs_tol } => {
                integrate_from_origin(integrand, b, d.alpha, abs_tol * 1e-3).value
            }
            QuadraturePolicy::Graded { nodes, .. } => {
                // same substitution, fixed rule
                let p = 2.0 / (2.0 - d.alpha);
                let rule = gauss_legendre(nodes).expect("positive order");
                rule.integrate_on(0.0, 1.0, |u| {
                    let t = b * u.powf(p);
                    integrand(t) * b * p * u.powf(p - 1.0)
                })
            }
        }
    }

    /// `∫ (1 − P_ℓ(cos θ)) ν(dθ)`, the jump part of the symbol.
    pub fn jump_exponent(&self, l: usize) -> f64 {
        if l == 0 {
            return 0.0;
        }
        let atoms: f64 = self
            .atoms
            .iter()
            .map(|a| a.mass * (1.0 - legendre_unchecked(l, a.angle.cos())))
            .sum();
        let density = if self.density.is_some() {
            let casimir = SphericalWeight(l).casimir();
            let outer = self.integrate_density(SMALL_JUMP_CUTOFF, std::f64::consts::PI, |t| {
                1.0 - legendre_unchecked(l, t.cos())
            });
            outer.value + 0.25 * casimir * self.density_second_moment(SMALL_JUMP_CUTOFF)
        } else {
            0.0
        };
        atoms + density
    }

    pub fn describe(&self) -> String {
        let mut parts: Vec<String> = self
            .atoms
            .iter()
            .map(|a| format!("atom({}, {})", a.angle, a.mass))
            .collect();
        if let Some(d) = &self.density {
            parts.push(format!("density({})", d.label));
        }
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join(" + ")
        }
    }
}

/// Checks `μ({e}) = 0`, `ν(U^c) < ∞` and `∫_U θ² dν < ∞` for `U = {θ < δ}`.
pub fn validate_levy(nu: &ZonalLevyMeasure) -> Result<LevyValidation, LevyError> {
    let report = levy_report(nu);
    if report.is_valid() {
        Ok(report)
    } else {
        Err(LevyError::InvalidMeasure {
            failures: report.failures,
        })
    }
}

/// The validation report without turning failures into an error.
pub fn levy_report(nu: &ZonalLevyMeasure) -> LevyValidation {
    let delta = NEIGHBORHOOD_RADIUS;
    let mut failures = Vec::new();

    let no_atom_at_origin = nu.atoms.iter().all(|a| a.angle > 0.0);
    if !no_atom_at_origin {
        failures.push("atom at the identity (jump angle 0)".to_string());
    }
    for a in &nu.atoms {
        if a.angle > std::f64::consts::PI || a.angle.is_nan() {
            failures.push(format!("atom angle {} outside (0, π]", a.angle));
        }
        if !(a.mass >= 0.0 && a.mass.is_finite()) {
            failures.push(format!("atom mass {} is not a finite nonnegative number", a.mass));
        }
    }
    if let Some(d) = &nu.density {
        let negative = crate::spectral::dense_colatitudes(GRID_CHECK_POINTS)
            .skip(1)
            .find(|&t| d.eval(t) < 0.0);
        if let Some(t) = negative {
            failures.push(format!("density negative at θ = {t}"));
        }
        if d.alpha < 0.0 {
            failures.push(format!("declared origin exponent α = {} is negative", d.alpha));
        }
    }

    let atom_mass_away: f64 = nu
        .atoms
        .iter()
        .filter(|a| a.angle >= delta)
        .map(|a| a.mass)
        .sum();
    let mass_away = atom_mass_away + nu.integrate_density(delta, std::f64::consts::PI, |_| 1.0).value;
    let finite_mass_away = mass_away.is_finite();
    if !finite_mass_away {
        failures.push("infinite mass outside the neighbourhood U".to_string());
    }

    let atom_moment: f64 = nu
        .atoms
        .iter()
        .filter(|a| a.angle > 0.0 && a.angle < delta)
        .map(|a| a.mass * a.angle * a.angle)
        .sum();
    let second_moment_near_origin = atom_moment + nu.density_second_moment(delta);
    let square_integrable = second_moment_near_origin.is_finite();
    if !square_integrable {
        failures.push(format!(
            "∫_U θ² ν(dθ) diverges (origin exponent α = {})",
            nu.density.as_ref().map_or(0.0, |d| d.alpha)
        ));
    }

    LevyValidation {
        no_atom_at_origin,
        finite_mass_away,
        square_integrable,
        mass_away,
        second_moment_near_origin,
        first_moment_finite: nu.first_moment_finite() && square_integrable,
        failures,
    }
}

/// A product-form Lévy kernel `μ(g, ·) = m(s(g))·ν₀`.
#[derive(Debug, Clone)]
pub struct LevyKernel {
    base: ZonalLevyMeasure,
    multiplier: ZonalField,
}

impl LevyKernel {
    /// Validates `ν₀` and checks `m ≥ 0` on a dense colatitude grid.
    pub fn new(base: ZonalLevyMeasure, multiplier: ZonalField) -> Result<Self, LevyError> {
        validate_levy(&base)?;
        if let Some(s) = crate::spectral::dense_colatitudes(GRID_CHECK_POINTS).find(|&s| multiplier.eval(s) < 0.0) {
            return Err(LevyError::NegativeMultiplier {
                colatitude: s,
                value: multiplier.eval(s),
            });
        }
        Ok(Self { base, multiplier })
    }

    /// Constant multiplier 1.
    pub fn homogeneous(base: ZonalLevyMeasure) -> Result<Self, LevyError> {
        Self::new(base, ZonalField::constant(1.0))
    }

    pub fn zero() -> Self {
        Self {
            base: ZonalLevyMeasure::zero(),
            multiplier: ZonalField::constant(1.0),
        }
    }

    pub fn base(&self) -> &ZonalLevyMeasure {
        &self.base
    }

    pub fn multiplier(&self) -> &ZonalField {
        &self.multiplier
    }

    pub fn first_moment_finite(&self) -> bool {
        self.base.first_moment_finite()
    }

    pub fn is_zero(&self) -> bool {
        self.base.is_zero()
    }

    pub fn describe(&self) -> String {
        format!("({}) * [{}]", self.multiplier.label(), self.base.describe())
    }
}

/// `η(s, ℓ)` for diffusion field `a` and kernel `kernel`.
pub fn symbol_eta(a: &ZonalField, kernel: &LevyKernel, s: f64, l: SphericalWeight) -> f64 {
    a.eval(s) * l.casimir() + kernel.multiplier.eval(s) * kernel.base.jump_exponent(l.0)
}

/// Evaluates `η(s, ℓ)` at arbitrary colatitudes with the s-independent jump
/// integrals cached for `ℓ ≤ L`.
#[derive(Debug, Clone)]
pub struct SymbolEvaluator {
    diffusion: ZonalField,
    kernel: LevyKernel,
    jump: Vec<f64>,
}

impl SymbolEvaluator {
    pub fn new(diffusion: ZonalField, kernel: LevyKernel, band_limit: usize) -> Self {
        let jump = (0..=band_limit)
            .into_par_iter()
            .map(|l| kernel.base.jump_exponent(l))
            .collect();
        Self {
            diffusion,
            kernel,
            jump,
        }
    }

    pub fn band_limit(&self) -> usize {
        self.jump.len() - 1
    }

    pub fn diffusion(&self) -> &ZonalField {
        &self.diffusion
    }

    pub fn kernel(&self) -> &LevyKernel {
        &self.kernel
    }

    /// `∫ (1 − P_ℓ) dν₀` for `ℓ ≤ L`.
    pub fn jump_exponents(&self) -> &[f64] {
        &self.jump
    }

    /// # Panics
    ///
    /// Panics when `l` exceeds the cached band limit.
    pub fn eta(&self, s: f64, l: usize) -> f64 {
        self.diffusion.eval(s) * SphericalWeight(l).casimir() + self.kernel.multiplier.eval(s) * self.jump[l]
    }

    /// `η` with constant coefficients evaluated at the north pole.
    pub fn constant_row(&self) -> Vec<f64> {
        (0..=self.band_limit()).map(|l| self.eta(0.0, l)).collect()
    }

    /// `max_s |η(s, ℓ)|` over `points` equispaced colatitudes.
    pub fn sup_over_s(&self, l: usize, points: usize) -> f64 {
        crate::spectral::dense_colatitudes(points)
            .map(|s| self.eta(s, l).abs())
            .fold(0.0, f64::max)
    }

    pub fn table(&self, colatitudes: &[f64]) -> SphericalSymbol {
        let l_max = self.band_limit();
        let values = colatitudes
            .iter()
            .flat_map(|&s| (0..=l_max).map(move |l| (s, l)))
            .map(|(s, l)| self.eta(s, l))
            .collect();
        SphericalSymbol {
            colatitudes: colatitudes.to_vec(),
            band_limit: l_max,
            values,
            provenance: SymbolProvenance {
                diffusion: self.diffusion.label().to_string(),
                kernel: self.kernel.describe(),
                band_limit: l_max,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymbolProvenance {
    pub diffusion: String,
    pub kernel: String,
    pub band_limit: usize,
}

/// Table `η(s_i, ℓ)`, `ℓ = 0..=L`, stored row-major by colatitude.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalSymbol {
    colatitudes: Vec<f64>,
    band_limit: usize,
    values: Vec<f64>,
    provenance: SymbolProvenance,
}

impl SphericalSymbol {
    pub fn colatitudes(&self) -> &[f64] {
        &self.colatitudes
    }

    pub fn band_limit(&self) -> usize {
        self.band_limit
    }

    pub fn provenance(&self) -> &SymbolProvenance {
        &self.provenance
    }

    pub fn eta(&self, i: usize, l: usize) -> f64 {
        self.values[i * (self.band_limit + 1) + l]
    }

    /// `η(·, ℓ)` over the colatitude grid.
    pub fn column(&self, l: usize) -> Vec<f64> {
        (0..self.colatitudes.len()).map(|i| self.eta(i, l)).collect()
    }

    /// `max_s |η(s, ℓ)|`.
    pub fn max_abs(&self, l: usize) -> f64 {
        (0..self.colatitudes.len())
            .map(|i| self.eta(i, l).abs())
            .fold(0.0, f64::max)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `s,l,eta` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["s", "l", "eta"])?;
        for (i, s) in self.colatitudes.iter().enumerate() {
            for l in 0..=self.band_limit {
                w.write_record([format!("{s:e}"), l.to_string(), format!("{:e}", self.eta(i, l))])?;
            }
        }
        w.flush()
    }
}

/// Tabulates `η` over `colatitudes × {0..=L}`.
pub fn build_symbol_table(
    a: &ZonalField,
    kernel: &LevyKernel,
    colatitudes: &[f64],
    band_limit: usize,
) -> SphericalSymbol {
    SymbolEvaluator::new(a.clone(), kernel.clone(), band_limit).table(colatitudes)
}

/// Empirical check of `sup_s |η(s, ℓ)| ≤ C(1 + ℓ² + ℓ^{3/2})`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthReport {
    pub c_fit: f64,
    /// `r(ℓ) = max_s |η(s, ℓ)| / (1 + ℓ² + ℓ^{3/2})`
    pub ratios: Vec<f64>,
    /// Least-squares slope of `log r` against `log ℓ` over the upper half.
    pub slope: f64,
    pub bounded: bool,
}

/// Largest tolerated log-log slope of the ratio sequence.
pub const GROWTH_SLOPE_TOL: f64 = 0.05;

pub fn growth_denominator(l: usize) -> f64 {
    let l = l as f64;
    1.0 + l * l + l.powf(1.5)
}

pub fn growth_bound_check(sym: &SphericalSymbol) -> GrowthReport {
    let ratios: Vec<f64> = (0..=sym.band_limit())
        .map(|l| sym.max_abs(l) / growth_denominator(l))
        .collect();
    let c_fit = ratios.iter().copied().fold(0.0, f64::max);
    let l_max = sym.band_limit();
    let slope = ratio_trend(&ratios, l_max.div_ceil(2).max(1), l_max);
    GrowthReport {
        c_fit,
        ratios,
        slope,
        bounded: slope <= GROWTH_SLOPE_TOL,
    }
}

/// Slope of `log r(ℓ)` vs `log ℓ` over `ℓ ∈ [lo, hi]`, ignoring zero ratios.
/// Zero when fewer than two usable points remain.
pub fn ratio_trend(ratios: &[f64], lo: usize, hi: usize) -> f64 {
    let pts: Vec<(f64, f64)> = (lo.max(1)..=hi.min(ratios.len().saturating_sub(1)))
        .filter(|&l| ratios[l] > 0.0)
        .map(|l| ((l as f64).ln(), ratios[l].ln()))
        .collect();
    if pts.len() < 2 {
        return 0.0;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Partial sum and tail bound of `Σ_{ℓ≥1} ℓ^{−2s}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZetaEstimate {
    pub partial_sum: f64,
    /// `Λ^{1−2s}/(2s−1)`, an upper bound for the omitted terms.
    pub tail_bound: f64,
}

/// Sugiura's zeta function of SO(3) (rank 1), truncated at `ℓ ≤ cutoff`.
pub fn sugiura_zeta(s: f64, cutoff: u64) -> Result<ZetaEstimate, LevyError> {
    let two_s = 2.0 * s;
    if two_s <= 1.0 {
        return Err(LevyError::DivergenceWarning { two_s });
    }
    // smallest terms first
    let partial_sum = (1..=cutoff).rev().map(|l| (l as f64).powf(-two_s)).sum();
    let tail_bound = (cutoff as f64).powf(1.0 - two_s) / (two_s - 1.0);
    Ok(ZetaEstimate {
        partial_sum,
        tail_bound,
    })
}

/// `Σ_{ℓ > L_trunc} (2ℓ+1)·max_s|η(s,ℓ)|·|f̂(ℓ)|`, an upper bound for the
/// sup-norm error of truncating the symbol series at `L_trunc`.
///
/// Infinite when `f` carries energy beyond the table's band limit.
pub fn truncation_tail(f: &ZonalFunction, sym: &SphericalSymbol, l_trunc: usize) -> f64 {
    let mut tail = 0.0;
    for l in (l_trunc + 1)..=f.band_limit() {
        let c = f.coefficient(l).abs();
        if c == 0.0 {
            continue;
        }
        if l > sym.band_limit() {
            return f64::INFINITY;
        }
        tail += SphericalWeight(l).dimension() as f64 * sym.max_abs(l) * c;
    }
    tail
}
