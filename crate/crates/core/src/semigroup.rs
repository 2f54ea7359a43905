//! Feller semigroups of spherical Lévy processes.
//!
//! For constant coefficients the semigroup acts diagonally on spherical
//! transforms, `f̂(ℓ) ↦ e^{−tη(ℓ)} f̂(ℓ)`. The same exponents govern the
//! zonal moments `E P_ℓ(cos s(Y_t)) = e^{−tη(ℓ)}` of the process started at
//! the north pole, which [`lk_verify`] checks by Monte Carlo.

use std::f64::consts::TAU;
use std::io::Write;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp, StandardNormal};
use rayon::prelude::*;
use thiserror::Error;

use crate::fields::ZonalField;
use crate::geometry::SpherePoint;
use crate::levy::{symbol_eta, LevyError, LevyKernel, ZonalLevyMeasure};
use crate::spectral::{legendre_unchecked, SphericalWeight, ZonalFunction};

/// Largest admissible time step.
pub const MAX_DT: f64 = 1e-2;
/// Fewest paths [`mc_spherical_moment`] accepts.
pub const MIN_PATHS: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SemigroupError {
    #[error("the Lévy measure has infinite activity and cannot be simulated")]
    InfiniteActivity,
    #[error("invalid process parameters: {0}")]
    InvalidParams(String),
    #[error("{n} paths are too few for a moment estimate (need at least {MIN_PATHS})")]
    TooFewPaths { n: usize },
    #[error(transparent)]
    Levy(#[from] LevyError),
}

/// Constant-coefficient symbol `η(ℓ) = a ℓ(ℓ+1) + ∫(1 − P_ℓ(cos θ)) ν(dθ)`.
#[derive(Debug, Clone)]
pub struct ConstantSymbol {
    a: f64,
    measure: ZonalLevyMeasure,
    cached: Vec<f64>,
}

impl ConstantSymbol {
    pub fn new(a: f64, measure: ZonalLevyMeasure, band_limit: usize) -> Self {
        let cached = (0..=band_limit)
            .into_par_iter()
            .map(|l| a * SphericalWeight(l).casimir() + measure.jump_exponent(l))
            .collect();
        Self { a, measure, cached }
    }

    pub fn heat(a: f64, band_limit: usize) -> Self {
        Self::new(a, ZonalLevyMeasure::zero(), band_limit)
    }

    pub fn eta(&self, l: usize) -> f64 {
        match self.cached.get(l) {
            Some(&v) => v,
            None => self.a * SphericalWeight(l).casimir() + self.measure.jump_exponent(l),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.cached
    }
}

/// `T_t f`: multiplies `f̂(ℓ)` by `e^{−tη(ℓ)}`.
pub fn semigroup_apply(sym: &ConstantSymbol, t: f64, f: &ZonalFunction) -> ZonalFunction {
    assert!(t >= 0.0, "semigroup time must be nonnegative");
    f.map_coefficients(|l, c| (-t * sym.eta(l)).exp() * c)
}

/// Parameters of a simulated spherical Lévy process.
#[derive(Debug, Clone)]
pub struct LevyProcessParams {
    /// Diffusion constant of `aΔ`.
    pub a: f64,
    /// Jump measure; must have finite total mass.
    pub measure: ZonalLevyMeasure,
    /// Times at which endpoints are recorded.
    pub times: Vec<f64>,
    pub dt: f64,
    pub paths: usize,
    pub seed: u64,
}

impl LevyProcessParams {
    pub fn heat(a: f64, times: Vec<f64>, dt: f64, paths: usize, seed: u64) -> Self {
        Self {
            a,
            measure: ZonalLevyMeasure::zero(),
            times,
            dt,
            paths,
            seed,
        }
    }

    pub fn with_measure(mut self, measure: ZonalLevyMeasure) -> Self {
        self.measure = measure;
        self
    }

    pub fn validate(&self) -> Result<(), SemigroupError> {
        let mut problems = Vec::new();
        if !(self.a >= 0.0 && self.a.is_finite()) {
            problems.push(format!("a = {} must be finite and nonnegative", self.a));
        }
        if !(self.dt > 0.0 && self.dt <= MAX_DT) {
            problems.push(format!("dt = {} must lie in (0, {MAX_DT}]", self.dt));
        }
        if self.paths == 0 {
            problems.push("at least one path is required".to_string());
        }
        if self.times.is_empty() {
            problems.push("the time list is empty".to_string());
        }
        if let Some(t) = self.times.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
            problems.push(format!("time {t} must be finite and nonnegative"));
        }
        if !problems.is_empty() {
            return Err(SemigroupError::InvalidParams(problems.join("; ")));
        }
        crate::levy::validate_levy(&self.measure)?;
        if self.measure.total_mass().is_none() {
            return Err(SemigroupError::InfiniteActivity);
        }
        Ok(())
    }

    /// Number of `dt` steps to reach `t`, rounded to the nearest integer.
    pub fn steps_to(&self, t: f64) -> u64 {
        (t / self.dt).round() as u64
    }
}

/// Endpoints of all paths at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEndpointSample {
    pub time: f64,
    pub seed: u64,
    pub points: Vec<SpherePoint>,
    /// Diffusion steps plus jumps taken by each path up to `time`.
    pub steps: Vec<u64>,
}

impl PathEndpointSample {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Writes `path_id,x,y,z,colatitude` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["path_id", "x", "y", "z", "colatitude"])?;
        for (i, p) in self.points.iter().enumerate() {
            let [x, y, z] = p.xyz();
            w.write_record([
                i.to_string(),
                x.to_string(),
                y.to_string(),
                z.to_string(),
                p.colatitude().to_string(),
            ])?;
        }
        w.flush()
    }
}

/// One path's generator: its own ChaCha8 stream `(seed, path index)`.
fn path_rng(seed: u64, path: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path as u64);
    rng
}

struct JumpSampler {
    rate: f64,
    angles: Vec<f64>,
    index: Option<WeightedIndex<f64>>,
}

impl JumpSampler {
    fn new(measure: &ZonalLevyMeasure) -> Self {
        let atoms: Vec<_> = measure.atoms().iter().filter(|a| a.mass > 0.0).collect();
        let rate = atoms.iter().map(|a| a.mass).sum();
        let index = (!atoms.is_empty()).then(|| WeightedIndex::new(atoms.iter().map(|a| a.mass)).expect("positive masses"));
        Self {
            rate,
            angles: atoms.iter().map(|a| a.angle).collect(),
            index,
        }
    }

    fn waiting_time<R: Rng>(&self, rng: &mut R) -> f64 {
        match self.index {
            Some(_) => Exp::new(self.rate).expect("positive rate").sample(rng),
            None => f64::INFINITY,
        }
    }

    fn angle<R: Rng>(&self, rng: &mut R) -> f64 {
        self.angles[self.index.as_ref().expect("jumps need atoms").sample(rng)]
    }
}

fn random_direction<R: Rng>(p: &SpherePoint, rng: &mut R) -> [f64; 3] {
    let (e1, e2) = p.tangent_frame();
    let psi = rng.random::<f64>() * TAU;
    let (s, c) = psi.sin_cos();
    std::array::from_fn(|i| c * e1[i] + s * e2[i])
}

fn simulate_one(params: &LevyProcessParams, jumps: &JumpSampler, checkpoints: &[u64], path: usize) -> Vec<(SpherePoint, u64)> {
    let mut rng = path_rng(params.seed, path);
    let sigma = (2.0 * params.a * params.dt).sqrt();
    let mut p = SpherePoint::NORTH_POLE;
    let mut next_jump = jumps.waiting_time(&mut rng);
    let mut events = 0u64;
    let mut step = 0u64;
    let mut out = Vec::with_capacity(checkpoints.len());
    for &target in checkpoints {
        while step < target {
            if sigma > 0.0 {
                let (e1, e2) = p.tangent_frame();
                let g1: f64 = rng.sample(StandardNormal);
                let g2: f64 = rng.sample(StandardNormal);
                let v: [f64; 3] = std::array::from_fn(|i| sigma * (g1 * e1[i] + g2 * e2[i]));
                let len = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                if len > 0.0 {
                    p = p.geodesic_step(&v.map(|c| c / len), len);
                }
            }
            events += 1;
            step += 1;
            let horizon = step as f64 * params.dt;
            while next_jump <= horizon {
                let theta = jumps.angle(&mut rng);
                let dir = random_direction(&p, &mut rng);
                p = p.geodesic_step(&dir, theta);
                events += 1;
                next_jump += jumps.waiting_time(&mut rng);
            }
        }
        out.push((p, events));
    }
    out
}

/// Simulates `params.paths` independent paths from the north pole and
/// returns one endpoint sample per entry of `params.times`.
///
/// Each `dt` step moves along the geodesic of a tangent Gaussian vector with
/// covariance `2a·dt·I₂`; jumps arrive on a Poisson clock of rate `ν(total)`
/// and move a distance `θ ~ ν/ν(total)` in a uniform tangent direction.
/// Path `i` draws from its own stream, so results do not depend on the
/// number of worker threads.
pub fn simulate_path(params: &LevyProcessParams) -> Result<Vec<PathEndpointSample>, SemigroupError> {
    params.validate()?;
    let jumps = JumpSampler::new(&params.measure);
    let mut order: Vec<usize> = (0..params.times.len()).collect();
    order.sort_by(|&i, &j| params.times[i].total_cmp(&params.times[j]));
    let checkpoints: Vec<u64> = order.iter().map(|&i| params.steps_to(params.times[i])).collect();

    let per_path: Vec<Vec<(SpherePoint, u64)>> = (0..params.paths)
        .into_par_iter()
        .map(|path| simulate_one(params, &jumps, &checkpoints, path))
        .collect();

    let mut samples: Vec<PathEndpointSample> = params
        .times
        .iter()
        .map(|&time| PathEndpointSample {
            time,
            seed: params.seed,
            points: Vec::with_capacity(params.paths),
            steps: Vec::with_capacity(params.paths),
        })
        .collect();
    for path in per_path {
        for (k, (p, n)) in path.into_iter().enumerate() {
            let sample = &mut samples[order[k]];
            sample.points.push(p);
            sample.steps.push(n);
        }
    }
    Ok(samples)
}

/// Sum by recursive halving; the result depends only on the input order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 64;
    if xs.len() <= BLOCK {
        return xs.iter().sum();
    }
    let (lo, hi) = xs.split_at(xs.len() / 2);
    pairwise_sum(lo) + pairwise_sum(hi)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEstimate {
    pub estimate: f64,
    pub stderr: f64,
}

/// Mean and standard error of `P_ℓ(cos s_i)` over the endpoints.
pub fn mc_spherical_moment(sample: &PathEndpointSample, l: usize) -> Result<MomentEstimate, SemigroupError> {
    let n = sample.len();
    if n < MIN_PATHS {
        return Err(SemigroupError::TooFewPaths { n });
    }
    let values: Vec<f64> = sample
        .points
        .iter()
        .map(|p| legendre_unchecked(l, p.xyz()[2].clamp(-1.0, 1.0)))
        .collect();
    let mean = pairwise_sum(&values) / n as f64;
    let squares: Vec<f64> = values.iter().map(|v| (v - mean).powi(2)).collect();
    let variance = pairwise_sum(&squares) / (n - 1) as f64;
    Ok(MomentEstimate {
        estimate: mean,
        stderr: (variance / n as f64).sqrt(),
    })
}

/// `−log(estimate)/t`, the exponent implied by a moment estimate.
pub fn fitted_exponent(estimate: f64, t: f64) -> f64 {
    -estimate.ln() / t
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LkRow {
    pub l: usize,
    pub t: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub predicted: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LkReport {
    pub rows: Vec<LkRow>,
}

impl LkReport {
    /// Rows with `|z| ≤ z_max`.
    pub fn passing(&self, z_max: f64) -> usize {
        self.rows.iter().filter(|r| r.z.abs() <= z_max).count()
    }

    pub fn max_abs_z(&self) -> f64 {
        self.rows.iter().map(|r| r.z.abs()).fold(0.0, f64::max)
    }

    /// Writes `l,t,estimate,stderr,predicted,z` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["l", "t", "estimate", "stderr", "predicted", "z"])?;
        for r in &self.rows {
            w.write_record([
                r.l.to_string(),
                r.t.to_string(),
                r.estimate.to_string(),
                r.stderr.to_string(),
                r.predicted.to_string(),
                r.z.to_string(),
            ])?;
        }
        w.flush()
    }
}

fn z_score(estimate: f64, predicted: f64, stderr: f64) -> f64 {
    let diff = estimate - predicted;
    if stderr > 0.0 {
        diff / stderr
    } else if diff.abs() <= 1e-12 {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    }
}

/// Compares Monte Carlo zonal moments against `e^{−tη(ℓ)}` for
/// `1 ≤ ℓ ≤ l_max` at every time in `params.times`.
pub fn lk_verify(params: &LevyProcessParams, l_max: usize) -> Result<LkReport, SemigroupError> {
    let samples = simulate_path(params)?;
    lk_verify_samples(params, &samples, l_max)
}

/// [`lk_verify`] on endpoints already simulated from `params`.
pub fn lk_verify_samples(
    params: &LevyProcessParams,
    samples: &[PathEndpointSample],
    l_max: usize,
) -> Result<LkReport, SemigroupError> {
    let kernel = LevyKernel::homogeneous(params.measure.clone())?;
    let a = ZonalField::constant(params.a);
    let mut rows = Vec::new();
    for sample in samples {
        for l in 1..=l_max {
            let m = mc_spherical_moment(sample, l)?;
            let eta = symbol_eta(&a, &kernel, 0.0, SphericalWeight(l));
            let predicted = (-sample.time * eta).exp();
            rows.push(LkRow {
                l,
                t: sample.time,
                estimate: m.estimate,
                stderr: m.stderr,
                predicted,
                z: z_score(m.estimate, predicted, m.stderr),
            });
        }
    }
    Ok(LkReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::Density;
    use crate::operators::{GangolliCoefficients, GangolliOperator};
    use crate::random::random_band_limited;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn semigroup_examples() {
        let sym = ConstantSymbol::heat(0.5, 8);
        let f = ZonalFunction::from_coefficients(vec![0.3, 0.2, 0.1]);
        assert_eq!(semigroup_apply(&sym, 0.0, &f), f);

        let p1 = ZonalFunction::from_coefficients(vec![0.0, 1.0 / 3.0]);
        let g = semigroup_apply(&sym, 1.0, &p1);
        assert_abs_diff_eq!(g.coefficient(1) * 3.0, (-1.0f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(g.coefficient(1) * 3.0, 0.367879, epsilon = 1e-6);

        let nu = ZonalLevyMeasure::from_atoms([(2.0 * PI / 3.0, 0.7)]);
        let sym = ConstantSymbol::new(0.5, nu, 8);
        let ts = semigroup_apply(&sym, 0.3, &semigroup_apply(&sym, 0.4, &f));
        let direct = semigroup_apply(&sym, 0.7, &f);
        for l in 0..=2 {
            assert_abs_diff_eq!(ts.coefficient(l), direct.coefficient(l), epsilon = 1e-16);
        }
    }

    #[test]
    fn frozen_process_stays_at_the_pole() {
        let params = LevyProcessParams::heat(0.0, vec![0.5, 1.0], 1e-2, 200, 4);
        for s in simulate_path(&params).unwrap() {
            assert!(s.points.iter().all(|p| *p == SpherePoint::NORTH_POLE));
            let m = mc_spherical_moment(&s, 3).unwrap();
            assert_eq!((m.estimate, m.stderr), (1.0, 0.0));
        }
        let report = lk_verify(&params, 4).unwrap();
        assert!(report.rows.iter().all(|r| r.z == 0.0));
    }

    #[test]
    fn antipodal_jumps_alternate() {
        let params = LevyProcessParams::heat(0.0, vec![0.1, 1.0], 1e-2, 500, 8)
            .with_measure(ZonalLevyMeasure::from_atoms([(PI, 1.0)]));
        let samples = simulate_path(&params).unwrap();
        for s in &samples {
            for (p, &n) in s.points.iter().zip(&s.steps) {
                let jumps = n - params.steps_to(s.time);
                let z = p.xyz()[2];
                let expected = if jumps.is_multiple_of(2) { 1.0 } else { -1.0 };
                assert_abs_diff_eq!(z, expected, epsilon = 1e-12);
            }
        }
        // P(odd count) = (1 − e^{−2t})/2
        let odd = samples[1].points.iter().filter(|p| p.xyz()[2] < 0.0).count() as f64 / 500.0;
        assert!((odd - 0.5 * (1.0 - (-2.0f64).exp())).abs() < 0.07);
    }

    #[test]
    fn simulation_is_reproducible_across_thread_counts() {
        let params = LevyProcessParams::heat(0.5, vec![0.2, 0.05], 1e-2, 300, 42)
            .with_measure(ZonalLevyMeasure::from_atoms([(1.0, 0.5), (2.5, 0.3)]));
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| simulate_path(&params).unwrap())
        };
        let one = run(1);
        assert_eq!(one, run(4));
        assert_eq!(one, run(3));
        let mut a = Vec::new();
        let mut b = Vec::new();
        one[0].write_csv(&mut a).unwrap();
        run(2)[0].write_csv(&mut b).unwrap();
        assert_eq!(a, b);
        // times are reported in the order given
        assert_eq!(one[0].time, 0.2);
        assert!(one.iter().flat_map(|s| &s.points).all(|p| {
            let [x, y, z] = p.xyz();
            ((x * x + y * y + z * z).sqrt() - 1.0).abs() < 1e-14
        }));
    }

    #[test]
    fn parameter_errors() {
        let nu = ZonalLevyMeasure::zero().with_density(Density::power(1.0, 0.5));
        let params = LevyProcessParams::heat(0.5, vec![1.0], 1e-3, 10, 0).with_measure(nu);
        assert_eq!(simulate_path(&params).unwrap_err(), SemigroupError::InfiniteActivity);
        let bad = LevyProcessParams::heat(0.5, vec![1.0], 0.1, 10, 0);
        assert!(matches!(simulate_path(&bad), Err(SemigroupError::InvalidParams(_))));
        let few = simulate_path(&LevyProcessParams::heat(0.5, vec![0.1], 1e-2, 10, 0)).unwrap();
        assert_eq!(mc_spherical_moment(&few[0], 1), Err(SemigroupError::TooFewPaths { n: 10 }));
    }

    #[test]
    fn zeroth_moment_is_exact() {
        let params = LevyProcessParams::heat(0.5, vec![0.3], 1e-2, 400, 1);
        let s = simulate_path(&params).unwrap();
        let m = mc_spherical_moment(&s[0], 0).unwrap();
        assert_eq!((m.estimate, m.stderr), (1.0, 0.0));
    }

    #[test]
    fn heat_first_moment_matches_semigroup() {
        let params = LevyProcessParams::heat(0.5, vec![1.0], 1e-3, 20_000, 17);
        let s = simulate_path(&params).unwrap();
        let m = mc_spherical_moment(&s[0], 1).unwrap();
        let oracle = semigroup_apply(&ConstantSymbol::heat(0.5, 1), 1.0, &ZonalFunction::spherical_function(1));
        let predicted = oracle.eval(0.0);
        assert!((m.estimate - predicted).abs() <= 3.0 * m.stderr, "{m:?} vs {predicted}");
    }

    #[test]
    fn weak_step_consistency() {
        let base = LevyProcessParams::heat(0.5, vec![0.5], 1e-2, 20_000, 5);
        let fine = LevyProcessParams { dt: 2.5e-3, ..base.clone() };
        for l in [1, 2] {
            let coarse = mc_spherical_moment(&simulate_path(&base).unwrap()[0], l).unwrap();
            let fine = mc_spherical_moment(&simulate_path(&fine).unwrap()[0], l).unwrap();
            let combined = coarse.stderr.hypot(fine.stderr);
            assert!((coarse.estimate - fine.estimate).abs() < 3.0 * combined);
        }
    }

    #[test]
    fn doubling_mass_doubles_jump_exponent() {
        let nu = ZonalLevyMeasure::from_atoms([(2.0 * PI / 3.0, 0.7)]);
        let params = LevyProcessParams::heat(0.0, vec![1.0], 1e-2, 40_000, 9).with_measure(nu.clone());
        let doubled = params.clone().with_measure(nu.scaled(2.0));
        let e1 = mc_spherical_moment(&simulate_path(&params).unwrap()[0], 1).unwrap();
        let e2 = mc_spherical_moment(&simulate_path(&doubled).unwrap()[0], 1).unwrap();
        let (k1, k2) = (fitted_exponent(e1.estimate, 1.0), fitted_exponent(e2.estimate, 1.0));
        // delta method: sd(−log x) ≈ stderr / x
        let noise = 2.0 * e1.stderr / e1.estimate + e2.stderr / e2.estimate;
        assert!((k2 - 2.0 * k1).abs() <= 3.0 * noise, "{k1} {k2}");
        assert_abs_diff_eq!(k1, 1.05, epsilon = 3.0 * e1.stderr / e1.estimate);
    }

    #[test]
    fn generator_consistency() {
        let nu = ZonalLevyMeasure::from_atoms([(2.0 * PI / 3.0, 0.7)]).with_density(Density::power(0.2, 0.5));
        let a = 0.3;
        let sym = ConstantSymbol::new(a, nu.clone(), 10);
        let co = GangolliCoefficients::new(ZonalField::constant(a), LevyKernel::homogeneous(nu).unwrap());
        let op = GangolliOperator::new(co, 10);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = random_band_limited(&mut rng, 10);
        let dt = 1e-3;
        let tf = semigroup_apply(&sym, dt, &f);
        let grid: Vec<f64> = crate::spectral::dense_colatitudes(41).collect();
        let af: Vec<f64> = grid.iter().map(|&s| op.apply_spectral(&f, s).unwrap().value).collect();
        let sup = af.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (&s, &v) in grid.iter().zip(&af) {
            let quotient = (tf.eval(s) - f.eval(s)) / dt;
            assert!((quotient - v).abs() <= 5e-2 * sup);
        }
    }

    #[test]
    fn pairwise_sum_matches_naive_on_small_input() {
        let xs: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 499_500.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn contraction(seed in any::<u64>(), t in 0.0f64..2.0, a in 0.0f64..1.0, mass in 0.0f64..2.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = random_band_limited(&mut rng, 16);
            let sym = ConstantSymbol::new(a, ZonalLevyMeasure::from_atoms([(1.3, mass)]), 16);
            let g = semigroup_apply(&sym, t, &f);
            prop_assert!(g.sup_norm_on(2001) <= f.sup_norm_on(2001) + 1e-9);
        }

        #[test]
        fn positivity(n in 1usize..12, t in 0.0f64..2.0, a in 0.0f64..1.0, alpha in 0.0f64..1.5) {
            let f = ZonalFunction::from_fn(n, |s| (1.0 + s.cos()).powi(n as i32));
            let nu = ZonalLevyMeasure::from_atoms([(2.0, 0.4)]).with_density(Density::power(0.1, alpha));
            let sym = ConstantSymbol::new(a, nu, n);
            let g = semigroup_apply(&sym, t, &f);
            let min = crate::spectral::dense_colatitudes(2001).map(|s| g.eval(s)).fold(f64::INFINITY, f64::min);
            prop_assert!(min >= -1e-6);
        }
    }
}
