//! TOML job configuration.

use std::path::{Path, PathBuf};

use gangolli_core::levy::{Density, LevyError, QuadraturePolicy};
use gangolli_core::operators::{GangolliCoefficients, INVARIANCE_TOL, PMP_TOL, SCHUR_TOL, TRUNCATION_TOL};
use gangolli_core::semigroup::LevyProcessParams;
use gangolli_core::spectral::ZonalFunction;
use gangolli_core::{DriftField, LevyKernel, MatrixField, ZonalField, ZonalLevyMeasure};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(String),
    #[error("invalid config value `{key}`: {reason}")]
    Invalid { key: &'static str, reason: String },
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub coefficients: CoefficientsConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub function: FunctionConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub simulate: Option<SimulateConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

/// `a(s) = a0 + a1 cos²s`, `m(s) = m0 + m1 cos s`, jump law and the
/// optional Courrège terms.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CoefficientsConfig {
    #[serde(default = "one")]
    pub a0: f64,
    #[serde(default)]
    pub a1: f64,
    #[serde(default = "one")]
    pub m0: f64,
    #[serde(default)]
    pub m1: f64,
    #[serde(default)]
    pub atoms: Vec<AtomConfig>,
    #[serde(default)]
    pub density: Option<DensityConfig>,
    #[serde(default)]
    pub quadrature: Option<QuadratureConfig>,
    /// Constant killing rate `c`.
    #[serde(default)]
    pub killing: Option<f64>,
    /// Constant drift `b` in the basis `(X₁, X₂)`.
    #[serde(default)]
    pub drift: Option<[f64; 2]>,
    /// Constant diffusion matrix `A`, replacing `a(s)·I₂` in the Courrège form.
    #[serde(default)]
    pub diffusion_matrix: Option<[[f64; 2]; 2]>,
}

impl Default for CoefficientsConfig {
    fn default() -> Self {
        Self {
            a0: 1.0,
            a1: 0.0,
            m0: 1.0,
            m1: 0.0,
            atoms: Vec::new(),
            density: None,
            quadrature: None,
            killing: None,
            drift: None,
            diffusion_matrix: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AtomConfig {
    pub angle: f64,
    pub mass: f64,
}

/// `scale·θ^{−1−alpha}`.
#[derive(Debug, Clone, Copy, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DensityConfig {
    pub scale: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum QuadratureConfig {
    Adaptive { abs_tol: f64 },
    Graded { panels: usize, nodes: usize },
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Band limit of test functions and of the spectral route.
    #[serde(default = "default_band_limit")]
    pub band_limit: usize,
    /// Number of equispaced colatitudes for `apply`.
    #[serde(default = "default_colatitudes")]
    pub colatitudes: usize,
    /// Symbol table band limit for `symbol` and `verify --which bounds`.
    #[serde(default = "default_symbol_band_limit")]
    pub symbol_band_limit: usize,
    /// Number of colatitudes of the symbol table.
    #[serde(default = "default_symbol_colatitudes")]
    pub symbol_colatitudes: usize,
    /// Points of the dense grid used to measure round-trip errors.
    #[serde(default = "default_dense_points")]
    pub dense_points: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            band_limit: default_band_limit(),
            colatitudes: default_colatitudes(),
            symbol_band_limit: default_symbol_band_limit(),
            symbol_colatitudes: default_symbol_colatitudes(),
            dense_points: default_dense_points(),
        }
    }
}

/// The test function: explicit coefficients `f̂(ℓ)`, a single spherical
/// function, or a seeded random band-limited draw.
#[derive(Debug, Clone, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct FunctionConfig {
    #[serde(default)]
    pub coefficients: Option<Vec<f64>>,
    #[serde(default)]
    pub spherical: Option<usize>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_round_trip")]
    pub round_trip: f64,
    #[serde(default = "default_apply")]
    pub apply: f64,
    #[serde(default = "default_pmp")]
    pub pmp: f64,
    #[serde(default = "default_invariance")]
    pub invariance: f64,
    #[serde(default = "default_schur")]
    pub schur: f64,
    #[serde(default = "default_growth_slope")]
    pub growth_slope: f64,
    #[serde(default = "default_zeta")]
    pub zeta: f64,
    #[serde(default = "default_z_max")]
    pub z_max: f64,
    /// Fraction of `(ℓ, t)` cells that must satisfy `|z| ≤ z_max`.
    #[serde(default = "default_pass_fraction")]
    pub pass_fraction: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            round_trip: default_round_trip(),
            apply: default_apply(),
            pmp: default_pmp(),
            invariance: default_invariance(),
            schur: default_schur(),
            growth_slope: default_growth_slope(),
            zeta: default_zeta(),
            z_max: default_z_max(),
            pass_fraction: default_pass_fraction(),
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    /// Sampled `(g, k, k′)` triples for the invariance check.
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Random test functions for the maximum principle check.
    #[serde(default = "default_pmp_draws")]
    pub pmp_draws: usize,
    #[serde(default = "one")]
    pub zeta_s: f64,
    #[serde(default = "default_zeta_cutoff")]
    pub zeta_cutoff: u64,
    /// Lower end of the range used for the growth trend.
    #[serde(default = "default_growth_from")]
    pub growth_from: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            samples: default_samples(),
            pmp_draws: default_pmp_draws(),
            zeta_s: 1.0,
            zeta_cutoff: default_zeta_cutoff(),
            growth_from: default_growth_from(),
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub times: Vec<f64>,
    pub dt: f64,
    pub paths: usize,
    #[serde(default = "default_l_max")]
    pub l_max: usize,
}

#[derive(Debug, Clone, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<PathBuf>,
}

fn one() -> f64 {
    1.0
}
fn default_band_limit() -> usize {
    32
}
fn default_colatitudes() -> usize {
    33
}
fn default_symbol_band_limit() -> usize {
    200
}
fn default_symbol_colatitudes() -> usize {
    181
}
fn default_dense_points() -> usize {
    2001
}
fn default_round_trip() -> f64 {
    1e-10
}
fn default_apply() -> f64 {
    TRUNCATION_TOL
}
fn default_pmp() -> f64 {
    PMP_TOL
}
fn default_invariance() -> f64 {
    INVARIANCE_TOL
}
fn default_schur() -> f64 {
    SCHUR_TOL
}
fn default_growth_slope() -> f64 {
    gangolli_core::levy::GROWTH_SLOPE_TOL
}
fn default_zeta() -> f64 {
    1e-6
}
fn default_z_max() -> f64 {
    3.0
}
fn default_pass_fraction() -> f64 {
    0.9
}
fn default_samples() -> usize {
    200
}
fn default_pmp_draws() -> usize {
    100
}
fn default_zeta_cutoff() -> u64 {
    1_000_000
}
fn default_growth_from() -> usize {
    50
}
fn default_l_max() -> usize {
    5
}

/// A parsed config together with the SHA-256 of its bytes.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: JobConfig,
    pub hash: String,
}

impl LoadedConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let bytes = std::fs::read(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_bytes(&bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ConfigError> {
        let text = std::str::from_utf8(bytes).map_err(|e| ConfigError::Parse(e.to_string()))?;
        let config: JobConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        config.check()?;
        Ok(Self {
            config,
            hash: hex::encode(Sha256::digest(bytes)),
        })
    }
}

fn positive(key: &'static str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::Invalid {
            key,
            reason: format!("{v} must be positive"),
        })
    }
}

impl JobConfig {
    /// Rejects nonpositive tolerances and degenerate grids. Measure validity
    /// is a check, not a config error, and is left to the commands.
    pub fn check(&self) -> Result<(), ConfigError> {
        let t = &self.tolerances;
        positive("tolerances.round_trip", t.round_trip)?;
        positive("tolerances.apply", t.apply)?;
        positive("tolerances.pmp", t.pmp)?;
        positive("tolerances.invariance", t.invariance)?;
        positive("tolerances.schur", t.schur)?;
        positive("tolerances.growth_slope", t.growth_slope)?;
        positive("tolerances.zeta", t.zeta)?;
        positive("tolerances.z_max", t.z_max)?;
        positive("tolerances.pass_fraction", t.pass_fraction)?;
        if let Some(QuadratureConfig::Adaptive { abs_tol }) = self.coefficients.quadrature {
            positive("coefficients.quadrature.abs_tol", abs_tol)?;
        }
        if self.grid.colatitudes < 2 {
            return Err(ConfigError::Invalid {
                key: "grid.colatitudes",
                reason: "need at least 2 points".into(),
            });
        }
        if self.grid.symbol_colatitudes < 2 {
            return Err(ConfigError::Invalid {
                key: "grid.symbol_colatitudes",
                reason: "need at least 2 points".into(),
            });
        }
        if self.function.coefficients.is_some() && self.function.spherical.is_some() {
            return Err(ConfigError::Invalid {
                key: "function",
                reason: "give either `coefficients` or `spherical`, not both".into(),
            });
        }
        if let Some(sim) = &self.simulate {
            positive("simulate.dt", sim.dt)?;
            if sim.times.is_empty() {
                return Err(ConfigError::Invalid {
                    key: "simulate.times",
                    reason: "empty time list".into(),
                });
            }
        }
        Ok(())
    }

    pub fn measure(&self) -> ZonalLevyMeasure {
        let c = &self.coefficients;
        let mut nu = ZonalLevyMeasure::from_atoms(c.atoms.iter().map(|a| (a.angle, a.mass)));
        if let Some(d) = c.density {
            nu = nu.with_density(Density::power(d.scale, d.alpha));
        }
        if let Some(q) = c.quadrature {
            nu = nu.with_policy(match q {
                QuadratureConfig::Adaptive { abs_tol } => QuadraturePolicy::Adaptive { abs_tol },
                QuadratureConfig::Graded { panels, nodes } => QuadraturePolicy::Graded { panels, nodes },
            });
        }
        nu
    }

    pub fn diffusion(&self) -> ZonalField {
        let c = &self.coefficients;
        if c.a1 == 0.0 {
            ZonalField::constant(c.a0)
        } else {
            ZonalField::cos_squared(c.a0, c.a1)
        }
    }

    pub fn multiplier(&self) -> ZonalField {
        let c = &self.coefficients;
        if c.m1 == 0.0 {
            ZonalField::constant(c.m0)
        } else {
            ZonalField::cosine(c.m0, c.m1)
        }
    }

    /// Whether any Courrège term beyond `(a, μ)` is present.
    pub fn has_courrege_terms(&self) -> bool {
        let c = &self.coefficients;
        c.killing.is_some() || c.drift.is_some() || c.diffusion_matrix.is_some()
    }

    /// Builds the coefficients; fails when the Lévy measure or multiplier is
    /// invalid.
    pub fn coefficients(&self) -> Result<GangolliCoefficients, LevyError> {
        let kernel = LevyKernel::new(self.measure(), self.multiplier())?;
        let c = &self.coefficients;
        let mut co = GangolliCoefficients::new(self.diffusion(), kernel);
        if let Some(k) = c.killing {
            co = co.with_killing(ZonalField::constant(k));
        }
        if let Some(b) = c.drift {
            co = co.with_drift(DriftField::constant(b));
        }
        if let Some(a) = c.diffusion_matrix {
            co = co.with_diffusion_matrix(MatrixField::constant(a));
        }
        Ok(co)
    }

    /// The configured test function, or a seeded random draw at the grid's
    /// band limit.
    pub fn test_function(&self, seed: u64) -> ZonalFunction {
        if let Some(c) = &self.function.coefficients {
            return ZonalFunction::from_coefficients(c.clone());
        }
        if let Some(l) = self.function.spherical {
            return ZonalFunction::spherical_function(l);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        gangolli_core::random::random_band_limited(&mut rng, self.grid.band_limit)
    }

    pub fn process(&self, seed: u64) -> Option<LevyProcessParams> {
        let sim = self.simulate.as_ref()?;
        Some(LevyProcessParams {
            a: self.coefficients.a0,
            measure: self.measure(),
            times: sim.times.clone(),
            dt: sim.dt,
            paths: sim.paths,
            seed,
        })
    }
}
