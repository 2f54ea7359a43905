//! Spherical functions, the spherical transform and its inverse on S².
//!
//! Zonal functions are functions of the colatitude `θ` only. The spherical
//! function of weight `ℓ` is `φ_ℓ(θ) = P_ℓ(cos θ)`. With Haar measure
//! normalized to total mass 1, the transform and its inverse read
//!
//! ```text
//! f̂(ℓ) = ½ ∫₋₁¹ F(arccos x) P_ℓ(x) dx,     F(θ) = Σ_ℓ (2ℓ+1) f̂(ℓ) P_ℓ(cos θ).
//! ```
//!
//! The horizontal Laplacian acts by `Δφ_ℓ = −ℓ(ℓ+1) φ_ℓ`.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::sync::OnceLock;

use thiserror::Error;

use crate::quadrature::{gauss_legendre, QuadratureRule};

/// Default band limit.
pub const DEFAULT_BAND_LIMIT: usize = 64;
/// Default number of azimuthal nodes in [`spherical_mean`].
pub const DEFAULT_AZIMUTH_NODES: usize = 256;
/// Half-width of the excluded polar caps for [`laplacian_direct`].
pub const POLE_MARGIN: f64 = 1e-3;

const DOMAIN_SLACK: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("argument {0} lies outside [-1, 1]")]
    DomainError(f64),
    #[error("a {nodes}-node grid cannot resolve band limit {band_limit}")]
    InsufficientGrid { nodes: usize, band_limit: usize },
    #[error("colatitude {0} is within {POLE_MARGIN} of a pole")]
    TooCloseToPole(f64),
    #[error("sample count {samples} does not match a {nodes}-node rule")]
    SampleMismatch { samples: usize, nodes: usize },
    #[error("malformed zonal CSV: {0}")]
    Csv(String),
}

/// Index of a spherical function; on S² this is the degree `ℓ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SphericalWeight(pub usize);

impl SphericalWeight {
    /// Dimension `2ℓ + 1` of the spherical representation.
    pub fn dimension(self) -> usize {
        2 * self.0 + 1
    }

    /// `c(ℓ) = ℓ(ℓ+1)`, so that `Δφ_ℓ = −c(ℓ) φ_ℓ`.
    pub fn casimir(self) -> f64 {
        let l = self.0 as f64;
        l * (l + 1.0)
    }

    pub fn norm(self) -> f64 {
        self.0 as f64
    }
}

impl From<usize> for SphericalWeight {
    fn from(l: usize) -> Self {
        Self(l)
    }
}

fn check_domain(x: f64) -> Result<f64, SpectralError> {
    if x.abs() > 1.0 + DOMAIN_SLACK || x.is_nan() {
        Err(SpectralError::DomainError(x))
    } else {
        Ok(x.clamp(-1.0, 1.0))
    }
}

/// `P_ℓ(x)` by the three-term recurrence.
pub fn legendre_eval(l: usize, x: f64) -> Result<f64, SpectralError> {
    let x = check_domain(x)?;
    Ok(legendre_unchecked(l, x))
}

pub(crate) fn legendre_unchecked(l: usize, x: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, x);
    if l == 0 {
        return p0;
    }
    for k in 1..l {
        let k = k as f64;
        let p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// `(P_n(x), P_n'(x))`, derivative from the recurrence
/// `P'_{k+1} = P'_{k−1} + (2k+1) P_k`, valid at `x = ±1`.
pub fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    let (mut d0, mut d1) = (0.0, 1.0);
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        let d2 = d0 + (2.0 * kf + 1.0) * p1;
        p0 = p1;
        p1 = p2;
        d0 = d1;
        d1 = d2;
    }
    (p1, d1)
}

/// All of `P_0(x), …, P_L(x)`.
pub fn legendre_table(band_limit: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(band_limit + 1);
    let (mut p0, mut p1) = (1.0, x);
    out.push(p0);
    if band_limit >= 1 {
        out.push(p1);
    }
    for k in 1..band_limit {
        let k = k as f64;
        let p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
        out.push(p2);
        p0 = p1;
        p1 = p2;
    }
    out
}

/// Samples of a zonal function at the colatitudes of a quadrature rule.
#[derive(Debug, Clone, PartialEq)]
pub struct GridView {
    pub rule: QuadratureRule,
    /// `θ_j = arccos x_j`
    pub colatitudes: Vec<f64>,
    pub values: Vec<f64>,
}

/// A zonal function on S², band-limited to degree `L`.
///
/// The coefficient view `f̂(0..=L)` is authoritative. The grid view is either
/// supplied at construction (from samples) or synthesized on first access
/// on the default `2L + 2`-node Gauss–Legendre grid; after that the value
/// never changes.
#[derive(Debug, Clone)]
pub struct ZonalFunction {
    coeffs: Vec<f64>,
    grid: OnceLock<GridView>,
}

impl PartialEq for ZonalFunction {
    fn eq(&self, other: &Self) -> bool {
        self.coeffs == other.coeffs
    }
}

impl ZonalFunction {
    /// Wraps spherical-transform coefficients `f̂(0..=L)`. An empty vector
    /// means the zero function with band limit 0.
    pub fn from_coefficients(mut coeffs: Vec<f64>) -> Self {
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Self {
            coeffs,
            grid: OnceLock::new(),
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::from_coefficients(vec![c])
    }

    /// The spherical function `φ_ℓ = P_ℓ(cos θ)`.
    pub fn spherical_function(l: usize) -> Self {
        let mut coeffs = vec![0.0; l + 1];
        coeffs[l] = 1.0 / (2 * l + 1) as f64;
        Self::from_coefficients(coeffs)
    }

    /// Analyzes samples taken at the colatitudes of `rule`.
    pub fn from_samples(
        rule: QuadratureRule,
        values: Vec<f64>,
        band_limit: usize,
    ) -> Result<Self, SpectralError> {
        let coeffs = spherical_transform(&rule, &values, band_limit)?;
        let colatitudes = rule.nodes().iter().map(|x| x.acos()).collect();
        let grid = OnceLock::new();
        let _ = grid.set(GridView {
            rule,
            colatitudes,
            values,
        });
        Ok(Self { coeffs, grid })
    }

    /// Samples `f(θ)` on the default grid and analyzes to band limit `L`.
    pub fn from_fn(band_limit: usize, f: impl Fn(f64) -> f64) -> Self {
        let rule = default_rule(band_limit);
        let values = rule.nodes().iter().map(|x| f(x.acos())).collect();
        Self::from_samples(rule, values, band_limit).expect("default grid resolves its band limit")
    }

    pub fn band_limit(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient `f̂(ℓ)`, zero beyond the band limit.
    pub fn coefficient(&self, l: usize) -> f64 {
        self.coeffs.get(l).copied().unwrap_or(0.0)
    }

    pub fn grid(&self) -> &GridView {
        self.grid.get_or_init(|| {
            let rule = default_rule(self.band_limit());
            let colatitudes: Vec<f64> = rule.nodes().iter().map(|x| x.acos()).collect();
            let values = rule.nodes().iter().map(|&x| self.eval_cos(x)).collect();
            GridView {
                rule,
                colatitudes,
                values,
            }
        })
    }

    /// `F(θ)`.
    pub fn eval(&self, theta: f64) -> f64 {
        self.eval_cos(theta.cos())
    }

    /// `F` as a function of `x = cos θ`; smooth through the poles.
    pub fn eval_cos(&self, x: f64) -> f64 {
        let x = x.clamp(-1.0, 1.0);
        let mut sum = self.coeffs[0];
        let (mut p0, mut p1) = (1.0, x);
        for (l, &c) in self.coeffs.iter().enumerate().skip(1) {
            if l > 1 {
                let k = (l - 1) as f64;
                let p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
                p0 = p1;
                p1 = p2;
            }
            sum += (2 * l + 1) as f64 * c * p1;
        }
        sum
    }

    /// `(G(x), G'(x), G''(x))` for `G(x) = F(arccos x)`.
    pub fn eval_cos_derivatives(&self, x: f64) -> (f64, f64, f64) {
        let x = x.clamp(-1.0, 1.0);
        let (mut p0, mut p1) = (1.0, x);
        let (mut d0, mut d1) = (0.0, 1.0);
        let (mut s0, mut s1) = (0.0, 0.0);
        let mut value = self.coeffs[0];
        let (mut first, mut second) = (0.0, 0.0);
        for (l, &c) in self.coeffs.iter().enumerate().skip(1) {
            if l > 1 {
                let k = (l - 1) as f64;
                let p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
                // P'_{k+1} = P'_{k-1} + (2k+1) P_k, and the same one level up
                let d2 = d0 + (2.0 * k + 1.0) * p1;
                let s2 = s0 + (2.0 * k + 1.0) * d1;
                p0 = p1;
                p1 = p2;
                d0 = d1;
                d1 = d2;
                s0 = s1;
                s1 = s2;
            }
            let w = (2 * l + 1) as f64 * c;
            value += w * p1;
            first += w * d1;
            second += w * s1;
        }
        (value, first, second)
    }

    /// `dF/dθ`.
    pub fn derivative(&self, theta: f64) -> f64 {
        let (_, g1, _) = self.eval_cos_derivatives(theta.cos());
        -theta.sin() * g1
    }

    /// `d²F/dθ²`.
    pub fn second_derivative(&self, theta: f64) -> f64 {
        let (s, c) = theta.sin_cos();
        let (_, g1, g2) = self.eval_cos_derivatives(c);
        s * s * g2 - c * g1
    }

    /// New function with `f̂(ℓ) ↦ m(ℓ, f̂(ℓ))`.
    pub fn map_coefficients(&self, m: impl Fn(usize, f64) -> f64) -> Self {
        Self::from_coefficients(self.coeffs.iter().enumerate().map(|(l, &c)| m(l, c)).collect())
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map_coefficients(|_, c| s * c)
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::from_coefficients((0..n).map(|l| self.coefficient(l) + other.coefficient(l)).collect())
    }

    /// `sup |F|` over `points` equispaced colatitudes in `[0, π]`.
    pub fn sup_norm_on(&self, points: usize) -> f64 {
        dense_colatitudes(points)
            .map(|t| self.eval(t).abs())
            .fold(0.0, f64::max)
    }

    /// `sup |F|` on a 4097-point grid.
    pub fn sup_norm(&self) -> f64 {
        self.sup_norm_on(4097)
    }

    /// `½ ∫₋₁¹ F² dx = Σ (2ℓ+1) f̂(ℓ)²`.
    pub fn energy(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(l, c)| (2 * l + 1) as f64 * c * c)
            .sum()
    }
}

/// `points` equispaced colatitudes covering `[0, π]` inclusive.
pub fn dense_colatitudes(points: usize) -> impl Iterator<Item = f64> {
    let n = points.max(2);
    (0..n).map(move |i| PI * i as f64 / (n - 1) as f64)
}

/// The `2L + 2`-node Gauss–Legendre rule.
pub fn default_rule(band_limit: usize) -> QuadratureRule {
    gauss_legendre(2 * band_limit + 2).expect("order is positive")
}

/// `f̂(ℓ) = ½ Σ_j w_j F(θ_j) P_ℓ(x_j)` for `ℓ = 0..=L`.
pub fn spherical_transform(
    rule: &QuadratureRule,
    samples: &[f64],
    band_limit: usize,
) -> Result<Vec<f64>, SpectralError> {
    if samples.len() != rule.order() {
        return Err(SpectralError::SampleMismatch {
            samples: samples.len(),
            nodes: rule.order(),
        });
    }
    if rule.order() < band_limit + 1 {
        return Err(SpectralError::InsufficientGrid {
            nodes: rule.order(),
            band_limit,
        });
    }
    let mut coeffs = vec![0.0; band_limit + 1];
    for ((&x, &w), &f) in rule.nodes().iter().zip(rule.weights()).zip(samples) {
        let wf = 0.5 * w * f;
        for (c, p) in coeffs.iter_mut().zip(legendre_table(band_limit, x)) {
            *c += wf * p;
        }
    }
    Ok(coeffs)
}

/// Peter–Weyl synthesis `F = Σ (2ℓ+1) f̂(ℓ) φ_ℓ`.
pub fn synthesis(coeffs: &[f64]) -> ZonalFunction {
    ZonalFunction::from_coefficients(coeffs.to_vec())
}

/// `f̂(ℓ) ↦ −ℓ(ℓ+1) f̂(ℓ)`.
pub fn laplacian_spectral(f: &ZonalFunction) -> ZonalFunction {
    f.map_coefficients(|l, c| -SphericalWeight(l).casimir() * c)
}

/// `F''(s) + cot(s) F'(s)` from the derivative recurrences; rejects
/// colatitudes within [`POLE_MARGIN`] of a pole.
pub fn laplacian_direct(f: &ZonalFunction, s: f64) -> Result<f64, SpectralError> {
    if !(POLE_MARGIN..=PI - POLE_MARGIN).contains(&s) {
        return Err(SpectralError::TooCloseToPole(s));
    }
    let (sn, cs) = s.sin_cos();
    let (_, g1, g2) = f.eval_cos_derivatives(cs);
    let d1 = -sn * g1;
    let d2 = sn * sn * g2 - cs * g1;
    Ok(d2 + cs / sn * d1)
}

/// Spherical mean `(1/2π) ∫₀^{2π} F(arccos(cos s cos θ + sin s sin θ cos ψ)) dψ`.
pub fn spherical_mean(f: &ZonalFunction, theta: f64, s: f64) -> f64 {
    spherical_mean_with(f, theta, s, DEFAULT_AZIMUTH_NODES)
}

/// [`spherical_mean`] with an explicit number of uniform azimuth nodes.
///
/// The integrand is even in `ψ`, so the periodic trapezoid rule is evaluated
/// on `[0, π]` only, with half weights at both ends.
pub fn spherical_mean_with(f: &ZonalFunction, theta: f64, s: f64, nodes: usize) -> f64 {
    let nodes = nodes.max(1);
    let (ss, cs) = s.sin_cos();
    let (st, ct) = theta.sin_cos();
    let a = cs * ct;
    let b = ss * st;
    if nodes == 1 || b == 0.0 {
        return f.eval_cos(a + b);
    }
    let step = 2.0 * PI / nodes as f64;
    let half = nodes / 2;
    let mut sum = 0.0;
    for j in 0..=half {
        let psi = j as f64 * step;
        let v = f.eval_cos(a + b * psi.cos());
        let paired = j != 0 && !(nodes.is_multiple_of(2) && j == half);
        sum += if paired { 2.0 * v } else { v };
    }
    sum / nodes as f64
}

/// Which view a zonal CSV file carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZonalView {
    Coefficients,
    Samples,
}

/// Writes `# view: coefficients` followed by `l,coeff` rows.
pub fn write_coefficients_csv<W: Write>(f: &ZonalFunction, out: W) -> std::io::Result<()> {
    write_view(out, ZonalView::Coefficients, ["l", "coeff"], f.coefficients().iter().enumerate().map(|(l, c)| (l as f64, *c)))
}

/// Writes `# view: samples` followed by `theta,value` rows for the grid view.
pub fn write_samples_csv<W: Write>(f: &ZonalFunction, out: W) -> std::io::Result<()> {
    let grid = f.grid();
    write_view(
        out,
        ZonalView::Samples,
        ["theta", "value"],
        grid.colatitudes.iter().copied().zip(grid.values.iter().copied()),
    )
}

fn write_view<W: Write>(
    mut out: W,
    view: ZonalView,
    header: [&str; 2],
    rows: impl Iterator<Item = (f64, f64)>,
) -> std::io::Result<()> {
    let tag = match view {
        ZonalView::Coefficients => "coefficients",
        ZonalView::Samples => "samples",
    };
    writeln!(out, "# view: {tag}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for (a, b) in rows {
        match view {
            ZonalView::Coefficients => w.write_record([format!("{}", a as usize), format!("{b:e}")])?,
            ZonalView::Samples => w.write_record([format!("{a:e}"), format!("{b:e}")])?,
        }
    }
    w.flush()
}

/// Reads either view back. Returns the view tag and the `(key, value)` rows.
pub fn read_zonal_csv<R: Read>(input: R) -> Result<(ZonalView, Vec<(f64, f64)>), SpectralError> {
    let mut text = String::new();
    let mut input = input;
    input
        .read_to_string(&mut text)
        .map_err(|e| SpectralError::Csv(e.to_string()))?;
    let view = text
        .lines()
        .find_map(|line| line.strip_prefix("# view:").map(str::trim))
        .ok_or_else(|| SpectralError::Csv("missing '# view:' header".into()))?;
    let view = match view {
        "coefficients" => ZonalView::Coefficients,
        "samples" => ZonalView::Samples,
        other => return Err(SpectralError::Csv(format!("unknown view '{other}'"))),
    };
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| SpectralError::Csv(e.to_string()))?;
        let parse = |i: usize| -> Result<f64, SpectralError> {
            record
                .get(i)
                .ok_or_else(|| SpectralError::Csv("short row".into()))?
                .trim()
                .parse::<f64>()
                .map_err(|e| SpectralError::Csv(e.to_string()))
        };
        rows.push((parse(0)?, parse(1)?));
    }
    Ok((view, rows))
}

/// Rebuilds a function from a coefficient CSV.
pub fn read_coefficients_csv<R: Read>(input: R) -> Result<ZonalFunction, SpectralError> {
    let (view, rows) = read_zonal_csv(input)?;
    if view != ZonalView::Coefficients {
        return Err(SpectralError::Csv("expected the coefficient view".into()));
    }
    let n = rows.iter().map(|(l, _)| *l as usize + 1).max().unwrap_or(1);
    let mut coeffs = vec![0.0; n];
    for (l, c) in rows {
        coeffs[l as usize] = c;
    }
    Ok(ZonalFunction::from_coefficients(coeffs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn p2(x: f64) -> f64 {
        0.5 * (3.0 * x * x - 1.0)
    }

    #[test]
    fn legendre_examples() {
        for x in [-1.0, -0.3, 0.0, 0.7, 1.0] {
            assert_eq!(legendre_eval(0, x).unwrap(), 1.0);
        }
        for l in 0..50 {
            assert_abs_diff_eq!(legendre_eval(l, 1.0).unwrap(), 1.0, epsilon = 1e-13);
        }
        assert_abs_diff_eq!(legendre_eval(2, 0.5).unwrap(), -0.125, epsilon = 1e-15);
        assert!(matches!(legendre_eval(3, 1.1), Err(SpectralError::DomainError(_))));
        assert!(legendre_eval(3, 1.0 + 1e-13).is_ok());
    }

    #[test]
    fn legendre_bounded_by_one() {
        for l in [1, 5, 17, 64, 127, 200] {
            for i in 0..=2000 {
                let x = -1.0 + 2.0 * i as f64 / 2000.0;
                assert!(legendre_eval(l, x).unwrap().abs() <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn derivative_recurrence_matches_closed_form() {
        let (p, d) = legendre_with_derivative(3, 0.4);
        assert_abs_diff_eq!(p, 0.5 * (5.0 * 0.064 - 3.0 * 0.4), epsilon = 1e-15);
        assert_abs_diff_eq!(d, 0.5 * (15.0 * 0.16 - 3.0), epsilon = 1e-15);
        let (_, d1) = legendre_with_derivative(7, 1.0);
        assert_abs_diff_eq!(d1, 28.0, epsilon = 1e-12);
    }

    #[test]
    fn transform_examples() {
        let rule = default_rule(8);
        let ones = vec![1.0; rule.order()];
        let c = spherical_transform(&rule, &ones, 8).unwrap();
        assert_abs_diff_eq!(c[0], 1.0, epsilon = 1e-14);
        assert!(c[1..].iter().all(|v| v.abs() < 1e-14));

        let f = ZonalFunction::from_fn(8, |t| p2(t.cos()));
        assert_abs_diff_eq!(f.coefficient(2), 0.2, epsilon = 1e-14);
        for l in [0, 1, 3, 4, 5, 8] {
            assert_abs_diff_eq!(f.coefficient(l), 0.0, epsilon = 1e-14);
        }

        let g = ZonalFunction::from_fn(6, |t| {
            let x = t.cos();
            x + 0.5 * (5.0 * x * x * x - 3.0 * x)
        });
        assert_abs_diff_eq!(g.coefficient(1), 1.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(g.coefficient(3), 1.0 / 7.0, epsilon = 1e-14);

        let small = gauss_legendre(3).unwrap();
        assert_eq!(
            spherical_transform(&small, &[1.0; 3], 3),
            Err(SpectralError::InsufficientGrid { nodes: 3, band_limit: 3 })
        );
    }

    #[test]
    fn synthesis_examples() {
        let one = synthesis(&[1.0, 0.0, 0.0]);
        for t in [0.0, 1.0, 2.0, PI] {
            assert_abs_diff_eq!(one.eval(t), 1.0, epsilon = 1e-15);
        }
        let f = synthesis(&[0.0, 0.0, 0.2]);
        for t in [0.0, 0.4, 1.3, 2.9] {
            assert_abs_diff_eq!(f.eval(t), p2(t.cos()), epsilon = 1e-14);
        }
    }

    #[test]
    fn laplacian_examples() {
        assert!(laplacian_spectral(&ZonalFunction::constant(1.0)).coefficients().iter().all(|&c| c == 0.0));
        let p1 = ZonalFunction::spherical_function(1);
        assert_abs_diff_eq!(laplacian_spectral(&p1).coefficient(1), -2.0 / 3.0, epsilon = 1e-15);
        let p3 = ZonalFunction::spherical_function(3);
        assert_abs_diff_eq!(laplacian_spectral(&p3).coefficient(3), -12.0 / 7.0, epsilon = 1e-15);

        assert_eq!(laplacian_direct(&ZonalFunction::constant(1.0), 1.0).unwrap(), 0.0);
        let p2f = ZonalFunction::spherical_function(2);
        assert_abs_diff_eq!(laplacian_direct(&p2f, PI / 2.0).unwrap(), 3.0, epsilon = 1e-13);
        assert!(matches!(laplacian_direct(&p2f, 5e-4), Err(SpectralError::TooCloseToPole(_))));
        assert!(matches!(laplacian_direct(&p2f, PI - 5e-4), Err(SpectralError::TooCloseToPole(_))));
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let f = synthesis(&[0.1, -0.2, 0.05, 0.03, -0.01, 0.002]);
        let h = 1e-5;
        for s in [0.3, 1.1, 2.4] {
            let fd1 = (f.eval(s + h) - f.eval(s - h)) / (2.0 * h);
            assert_abs_diff_eq!(f.derivative(s), fd1, epsilon = 1e-8);
            let h2 = 1e-4;
            let fd2 = (f.eval(s + h2) - 2.0 * f.eval(s) + f.eval(s - h2)) / (h2 * h2);
            assert_abs_diff_eq!(f.second_derivative(s), fd2, epsilon = 1e-5);
        }
    }

    #[test]
    fn spherical_mean_examples() {
        let f = synthesis(&[0.3, 0.1, -0.2, 0.05]);
        assert_abs_diff_eq!(spherical_mean(&f, 0.0, 1.3), f.eval(1.3), epsilon = 1e-15);
        let one = ZonalFunction::constant(1.0);
        assert_abs_diff_eq!(spherical_mean(&one, 0.7, 2.2), 1.0, epsilon = 1e-14);
        // odd node counts use the same symmetric evaluation
        let a = spherical_mean_with(&f, 0.9, 1.4, 255);
        let b = spherical_mean_with(&f, 0.9, 1.4, 256);
        assert_abs_diff_eq!(a, b, epsilon = 1e-14);
    }

    #[test]
    fn functional_equation_on_a_grid() {
        for l in [0, 1, 2, 5, 13, 40] {
            let phi = ZonalFunction::spherical_function(l);
            for i in 0..=8 {
                for j in 0..=8 {
                    let theta = PI * i as f64 / 8.0;
                    let s = PI * j as f64 / 8.0;
                    let lhs = spherical_mean(&phi, theta, s);
                    let rhs = legendre_unchecked(l, theta.cos()) * legendre_unchecked(l, s.cos());
                    assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn csv_round_trip() {
        let f = synthesis(&[0.25, -0.125, 1e-3, 3.5e-7]);
        let mut buf = Vec::new();
        write_coefficients_csv(&f, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# view: coefficients\nl,coeff\n"));
        assert_eq!(read_coefficients_csv(buf.as_slice()).unwrap(), f);

        let mut buf = Vec::new();
        write_samples_csv(&f, &mut buf).unwrap();
        let (view, rows) = read_zonal_csv(buf.as_slice()).unwrap();
        assert_eq!(view, ZonalView::Samples);
        assert_eq!(rows.len(), f.grid().values.len());
        for (t, v) in rows {
            assert_abs_diff_eq!(f.eval(t), v, epsilon = 1e-14);
        }
        assert!(read_zonal_csv("l,coeff\n0,1\n".as_bytes()).is_err());
    }

    fn band_limited() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-1.0f64..1.0, 1..24)
    }

    proptest! {
        #[test]
        fn round_trip_through_grid(coeffs in band_limited()) {
            let f = synthesis(&coeffs);
            let grid = f.grid();
            let g = ZonalFunction::from_samples(grid.rule.clone(), grid.values.clone(), f.band_limit()).unwrap();
            for (a, b) in g.coefficients().iter().zip(f.coefficients()) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
            for (t, v) in grid.colatitudes.iter().zip(&grid.values) {
                prop_assert!((g.eval(*t) - v).abs() <= 1e-10);
            }
        }

        #[test]
        fn parseval(coeffs in band_limited()) {
            let f = synthesis(&coeffs);
            let rule = default_rule(f.band_limit());
            let quad = 0.5 * rule.integrate(|x| f.eval_cos(x).powi(2));
            prop_assert!((f.energy() - quad).abs() <= 1e-10 * (1.0 + quad));
        }

        #[test]
        fn direct_laplacian_matches_spectral(coeffs in band_limited(), s in 0.01f64..3.13) {
            let f = synthesis(&coeffs);
            let direct = laplacian_direct(&f, s).unwrap();
            let spectral = laplacian_spectral(&f).eval(s);
            prop_assert!((direct - spectral).abs() <= 1e-8 * (1.0 + spectral.abs()));
        }
    }
}
