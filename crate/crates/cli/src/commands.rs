//! The batch jobs behind each subcommand. Every job returns its output files
//! in memory together with a pass/fail verdict.

use std::f64::consts::PI;
use std::fmt::{self, Write as _};
use std::io::Write;

use gangolli_core::levy::{build_symbol_table, growth_bound_check, growth_denominator, ratio_trend, sugiura_zeta};
use gangolli_core::operators::{
    courrege_apply, pmp_check, schur_reduce, validate_invariance, GangolliCoefficients, GangolliOperator,
    InvarianceSamples, Method, OperatorError, PmpOutcome,
};
use gangolli_core::random::random_band_limited;
use gangolli_core::semigroup::{lk_verify_samples, simulate_path};
use gangolli_core::spectral::{
    default_rule, dense_colatitudes, spherical_transform, synthesis, write_coefficients_csv, ZonalFunction,
};
use gangolli_core::{GroupElement, MatrixField};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{ConfigError, JobConfig, LoadedConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Check {
    Pmp,
    Invariance,
    Bounds,
    Zeta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Transform,
    Symbol,
    Apply,
    Verify(Check),
    Simulate,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Command::Transform => f.write_str("transform"),
            Command::Symbol => f.write_str("symbol"),
            Command::Apply => f.write_str("apply"),
            Command::Simulate => f.write_str("simulate"),
            Command::Verify(c) => {
                let which = match c {
                    Check::Pmp => "pmp",
                    Check::Invariance => "invariance",
                    Check::Bounds => "bounds",
                    Check::Zeta => "zeta",
                };
                write!(f, "verify --which {which}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputFile {
    pub name: String,
    pub contents: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub pass: bool,
    pub summary: Vec<String>,
    pub files: Vec<OutputFile>,
}

/// A job: command, effective seed and parsed config.
#[derive(Debug, Clone)]
pub struct Job {
    pub command: Command,
    pub seed: u64,
    pub config: LoadedConfig,
}

impl Job {
    /// `seed` overrides the config's seed when given.
    pub fn new(command: Command, config: LoadedConfig, seed: Option<u64>) -> Self {
        let seed = seed.unwrap_or(config.config.seed);
        Self { command, seed, config }
    }

    fn cfg(&self) -> &JobConfig {
        &self.config.config
    }

    /// Metadata lines opening every output file.
    pub fn header(&self) -> String {
        format!(
            "# gangolli-cli {}\n# command: gangolli {} --seed {}\n# config-sha256: {}\n",
            env!("CARGO_PKG_VERSION"),
            self.command,
            self.seed,
            self.config.hash
        )
    }

    fn file(&self, name: impl Into<String>, body: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> OutputFile {
        let mut contents = self.header().into_bytes();
        body(&mut contents).expect("writing to memory cannot fail");
        OutputFile {
            name: name.into(),
            contents,
        }
    }

    pub fn run(&self) -> Result<Outcome, ConfigError> {
        match self.command {
            Command::Transform => Ok(self.transform()),
            Command::Symbol => Ok(self.symbol()),
            Command::Apply => Ok(self.apply()),
            Command::Verify(Check::Pmp) => Ok(self.pmp()),
            Command::Verify(Check::Invariance) => Ok(self.invariance()),
            Command::Verify(Check::Bounds) => Ok(self.bounds()),
            Command::Verify(Check::Zeta) => Ok(self.zeta()),
            Command::Simulate => self.simulate(),
        }
    }

    fn coefficients(&self) -> Result<GangolliCoefficients, Outcome> {
        self.cfg().coefficients().map_err(|e| failure(format!("coefficients rejected: {e}")))
    }

    fn transform(&self) -> Outcome {
        let cfg = self.cfg();
        let f = cfg.test_function(self.seed);
        let l = f.band_limit();
        let rule = default_rule(l);
        let samples: Vec<f64> = rule.nodes().iter().map(|&x| f.eval_cos(x)).collect();
        let coeffs = spherical_transform(&rule, &samples, l).expect("default grid resolves its band limit");
        let analyzed = synthesis(&coeffs);
        let grid: Vec<f64> = dense_colatitudes(cfg.grid.dense_points).collect();
        let rows: Vec<(f64, f64, f64)> = grid.iter().map(|&s| (s, f.eval(s), analyzed.eval(s))).collect();
        let max_err = rows.iter().map(|r| (r.1 - r.2).abs()).fold(0.0, f64::max);
        let pass = max_err <= cfg.tolerances.round_trip;
        let nonzero = coeffs.iter().filter(|c| **c != 0.0).count();
        Outcome {
            pass,
            summary: vec![
                format!("band limit {l}, {} quadrature nodes", rule.order()),
                format!("{nonzero} nonzero coefficients"),
                verdict("round-trip max error", max_err, cfg.tolerances.round_trip, pass),
            ],
            files: vec![
                self.file("transform_coefficients.csv", |w| write_coefficients_csv(&analyzed, w)),
                self.file("transform_roundtrip.csv", |w| {
                    writeln!(w, "s,original,reconstructed,error")?;
                    for (s, a, b) in &rows {
                        writeln!(w, "{s:e},{a:e},{b:e},{:e}", (a - b).abs())?;
                    }
                    Ok(())
                }),
            ],
        }
    }

    fn symbol_table(&self, co: &GangolliCoefficients) -> gangolli_core::levy::SphericalSymbol {
        let grid: Vec<f64> = dense_colatitudes(self.cfg().grid.symbol_colatitudes).collect();
        build_symbol_table(co.diffusion(), co.kernel(), &grid, self.cfg().grid.symbol_band_limit)
    }

    fn growth_rows(&self, co: &GangolliCoefficients) -> (gangolli_core::levy::SphericalSymbol, Vec<f64>, f64) {
        let sym = self.symbol_table(co);
        let report = growth_bound_check(&sym);
        let lo = self.cfg().verify.growth_from.min(sym.band_limit());
        let slope = ratio_trend(&report.ratios, lo, sym.band_limit());
        (sym, report.ratios, slope)
    }

    fn growth_file(&self, name: &str, sym: &gangolli_core::levy::SphericalSymbol, ratios: &[f64]) -> OutputFile {
        self.file(name, |w| {
            writeln!(w, "l,sup_eta,denominator,ratio")?;
            for (l, r) in ratios.iter().enumerate() {
                writeln!(w, "{l},{:e},{:e},{r:e}", sym.max_abs(l), growth_denominator(l))?;
            }
            Ok(())
        })
    }

    fn growth_summary(&self, slope: f64, ratios: &[f64]) -> (bool, Vec<String>) {
        let tol = self.cfg().tolerances.growth_slope;
        let pass = slope <= tol;
        let c = ratios.iter().copied().fold(0.0, f64::max);
        (
            pass,
            vec![
                format!("fitted constant C = {c:e}"),
                verdict(
                    &format!("ratio trend slope on [{}, {}]", self.cfg().verify.growth_from, ratios.len() - 1),
                    slope,
                    tol,
                    pass,
                ),
            ],
        )
    }

    fn symbol(&self) -> Outcome {
        let co = match self.coefficients() {
            Ok(co) => co,
            Err(o) => return o,
        };
        let (sym, ratios, slope) = self.growth_rows(&co);
        let (pass, mut summary) = self.growth_summary(slope, &ratios);
        summary.insert(0, format!("kernel: {}", co.kernel().describe()));
        let zero_row = sym.max_abs(0);
        summary.push(format!("max |eta(s, 0)| = {zero_row:e}"));
        Outcome {
            pass: pass && zero_row == 0.0,
            summary,
            files: vec![
                self.file("symbol.csv", |w| sym.write_csv(w)),
                self.growth_file("growth.csv", &sym, &ratios),
            ],
        }
    }

    fn apply(&self) -> Outcome {
        let cfg = self.cfg();
        let co = match self.coefficients() {
            Ok(co) => co,
            Err(o) => return o,
        };
        let f = cfg.test_function(self.seed);
        let op = GangolliOperator::new(co, cfg.grid.band_limit).with_truncation_tol(f64::INFINITY);
        let n = cfg.grid.colatitudes;
        let grid: Vec<f64> = (0..n).map(|i| PI * (i as f64 + 0.5) / n as f64).collect();
        let direct = match op.evaluate(&f, &grid, Method::Direct) {
            Ok(r) => r,
            Err(e) => return failure(format!("direct route failed: {e}")),
        };
        let spectral = op.evaluate(&f, &grid, Method::Spectral).expect("tail tolerance disabled");
        let tol = cfg.tolerances.apply;
        let mut worst_excess = f64::NEG_INFINITY;
        let mut max_diff = 0.0f64;
        let mut body = String::from("s,direct,spectral,diff,tail,bound\n");
        for (i, &s) in grid.iter().enumerate() {
            let d = direct.values[i];
            let sp = spectral.values[i];
            let tail = spectral.error_estimates[i];
            let diff = (d - sp).abs();
            let bound = tol.max(tail);
            max_diff = max_diff.max(diff);
            worst_excess = worst_excess.max(diff - bound);
            let _ = writeln!(body, "{s:e},{d:e},{sp:e},{diff:e},{tail:e},{bound:e}");
        }
        let pass = worst_excess <= 0.0;
        let max_tail = spectral.error_estimates.iter().copied().fold(0.0, f64::max);
        Outcome {
            pass,
            summary: vec![
                format!("{n} colatitudes, band limit {}, f band limit {}", cfg.grid.band_limit, f.band_limit()),
                format!("max truncation tail {max_tail:e}"),
                verdict("max |direct - spectral|", max_diff, tol.max(max_tail), pass),
            ],
            files: vec![self.file("apply.csv", |w| w.write_all(body.as_bytes()))],
        }
    }

    fn pmp(&self) -> Outcome {
        let cfg = self.cfg();
        let co = match self.coefficients() {
            Ok(co) => co,
            Err(o) => return o,
        };
        let mut summary = Vec::new();
        let valid = match co.validate() {
            Ok(()) => true,
            Err(e) => {
                summary.push(format!("coefficients invalid: {e}"));
                false
            }
        };
        let courrege = cfg.has_courrege_terms();
        let op = GangolliOperator::new(co.clone(), cfg.grid.band_limit);
        let apply = |f: &ZonalFunction, s: f64| -> Result<f64, OperatorError> {
            if courrege {
                courrege_apply(&co, f, s).map(|v| v.value)
            } else {
                op.apply_pointwise(f, s)
            }
        };
        let configured = cfg.function.coefficients.is_some() || cfg.function.spherical.is_some();
        let mut functions = Vec::new();
        if configured {
            functions.push(normalize_max(&cfg.test_function(self.seed)));
        }
        let band = cfg.grid.band_limit.min(16);
        functions.extend((0..cfg.verify.pmp_draws).map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            rng.set_stream(i as u64);
            normalize_max(&random_band_limited(&mut rng, band))
        }));
        let outcomes: Vec<Result<PmpOutcome, OperatorError>> =
            functions.par_iter().map(|f| pmp_check(apply, f)).collect();
        let tol = cfg.tolerances.pmp;
        let mut failures = 0;
        let mut worst = f64::NEG_INFINITY;
        let mut body = String::from("draw,argmax,max,generator,pass\n");
        for (i, o) in outcomes.iter().enumerate() {
            match o {
                Ok(o) => {
                    let ok = o.generator_value <= tol;
                    failures += usize::from(!ok);
                    worst = worst.max(o.generator_value);
                    let _ = writeln!(body, "{i},{:e},{:e},{:e},{ok}", o.argmax, o.max_value, o.generator_value);
                }
                Err(e) => {
                    failures += 1;
                    summary.push(format!("draw {i}: {e}"));
                    let _ = writeln!(body, "{i},,,,false");
                }
            }
        }
        summary.push(format!("{} test functions, {failures} violations", functions.len()));
        summary.push(verdict("max Af(argmax)", worst, tol, failures == 0));
        Outcome {
            pass: valid && failures == 0,
            summary,
            files: vec![self.file("pmp.csv", |w| w.write_all(body.as_bytes()))],
        }
    }

    fn invariance(&self) -> Outcome {
        let cfg = self.cfg();
        let co = match self.coefficients() {
            Ok(co) => co,
            Err(o) => return o,
        };
        let samples = InvarianceSamples::random(cfg.verify.samples, self.seed);
        let report = validate_invariance(&co, &samples, cfg.tolerances.invariance);
        let mut summary = vec![format!("{} sampled triples", samples.triples.len())];
        let mut body = String::from("condition,worst,pass,g,k,k_prime\n");
        for c in &report.checks {
            let (g, k, kp) = c
                .witness
                .map(|(g, k, kp)| (quat(&g), quat(&k), quat(&kp)))
                .unwrap_or_default();
            let _ = writeln!(body, "{},{:e},{},{g},{k},{kp}", c.condition, c.worst, c.pass);
            summary.push(verdict(&format!("({})", c.condition), c.worst, report.tolerance, c.pass));
        }
        let field = cfg
            .coefficients
            .diffusion_matrix
            .map(MatrixField::constant)
            .unwrap_or_else(|| MatrixField::scalar(co.diffusion().clone()));
        let schur_pass = match schur_reduce(&field, &samples) {
            Ok(r) => {
                summary.push(verdict("Schur commutator", r.max_commutator, cfg.tolerances.schur, true));
                let _ = writeln!(body, "schur,{:e},true,,,", r.max_commutator.max(r.max_residual));
                true
            }
            Err(e) => {
                summary.push(format!("Schur reduction: {e} [FAIL]"));
                let _ = writeln!(body, "schur,,false,,,");
                false
            }
        };
        Outcome {
            pass: report.all_pass() && schur_pass,
            summary,
            files: vec![self.file("invariance.csv", |w| w.write_all(body.as_bytes()))],
        }
    }

    fn bounds(&self) -> Outcome {
        let co = match self.coefficients() {
            Ok(co) => co,
            Err(o) => return o,
        };
        let (sym, ratios, slope) = self.growth_rows(&co);
        let (pass, summary) = self.growth_summary(slope, &ratios);
        Outcome {
            pass,
            summary,
            files: vec![self.growth_file("bounds.csv", &sym, &ratios)],
        }
    }

    fn zeta(&self) -> Outcome {
        let v = &self.cfg().verify;
        let z = match sugiura_zeta(v.zeta_s, v.zeta_cutoff) {
            Ok(z) => z,
            Err(e) => return failure(format!("{e}")),
        };
        let reference = if v.zeta_s == 1.0 {
            Some(PI * PI / 6.0)
        } else if v.zeta_s == 2.0 {
            Some(PI.powi(4) / 90.0)
        } else {
            None
        };
        let tol = self.cfg().tolerances.zeta;
        let mut summary = vec![format!(
            "s = {}, cutoff = {}: partial sum {:.15}, tail bound {:e}",
            v.zeta_s, v.zeta_cutoff, z.partial_sum, z.tail_bound
        )];
        let (pass, err) = match reference {
            Some(r) => {
                let err = (r - z.partial_sum).abs();
                let pass = err <= z.tail_bound && err <= tol;
                summary.push(verdict("|reference - partial sum|", err, z.tail_bound.min(tol), pass));
                (pass, Some((r, err)))
            }
            None => (z.partial_sum.is_finite(), None),
        };
        Outcome {
            pass,
            summary,
            files: vec![self.file("zeta.csv", |w| {
                writeln!(w, "s,cutoff,partial_sum,tail_bound,reference,error")?;
                let (r, e) = err.map(|(r, e)| (format!("{r:.17e}"), format!("{e:e}"))).unwrap_or_default();
                writeln!(
                    w,
                    "{},{},{:.17e},{:e},{r},{e}",
                    v.zeta_s, v.zeta_cutoff, z.partial_sum, z.tail_bound
                )
            })],
        }
    }

    fn simulate(&self) -> Result<Outcome, ConfigError> {
        let cfg = self.cfg();
        let c = &cfg.coefficients;
        if c.a1 != 0.0 || c.m1 != 0.0 {
            return Err(ConfigError::Invalid {
                key: "coefficients",
                reason: "simulation needs constant coefficients (a1 = m1 = 0)".into(),
            });
        }
        let Some(mut params) = cfg.process(self.seed) else {
            return Err(ConfigError::Invalid {
                key: "simulate",
                reason: "missing [simulate] section".into(),
            });
        };
        params.measure = params.measure.scaled(c.m0);
        let samples = match simulate_path(&params) {
            Ok(s) => s,
            Err(e) => return Ok(failure(format!("simulation rejected: {e}"))),
        };
        let l_max = cfg.simulate.as_ref().map_or(5, |s| s.l_max);
        let report = match lk_verify_samples(&params, &samples, l_max) {
            Ok(r) => r,
            Err(e) => return Ok(failure(format!("moment check failed: {e}"))),
        };
        let z_max = cfg.tolerances.z_max;
        let cells = report.rows.len();
        let needed = (cfg.tolerances.pass_fraction * cells as f64).ceil() as usize;
        let passing = report.passing(z_max);
        let pass = passing >= needed;
        let mut files: Vec<OutputFile> = samples
            .iter()
            .map(|s| self.file(format!("endpoints_t{}.csv", s.time), |w| s.write_csv(w)))
            .collect();
        files.push(self.file("lk.csv", |w| report.write_csv(w)));
        Ok(Outcome {
            pass,
            summary: vec![
                format!("{} paths, dt = {}, times {:?}", params.paths, params.dt, params.times),
                format!("max |z| = {:.3}", report.max_abs_z()),
                format!(
                    "{passing}/{cells} cells with |z| <= {z_max} (need {needed}) [{}]",
                    if pass { "PASS" } else { "FAIL" }
                ),
            ],
            files,
        })
    }
}

fn failure(message: String) -> Outcome {
    Outcome {
        pass: false,
        summary: vec![format!("{message} [FAIL]")],
        files: Vec::new(),
    }
}

fn verdict(what: &str, value: f64, tol: f64, pass: bool) -> String {
    format!("{what} = {value:e} (tolerance {tol:e}) [{}]", if pass { "PASS" } else { "FAIL" })
}

fn quat(g: &GroupElement) -> String {
    let q = g.quaternion();
    format!("{:.12} {:.12} {:.12} {:.12}", q[0], q[1], q[2], q[3])
}

/// Shifts `f` so that its maximum is 1.
fn normalize_max(f: &ZonalFunction) -> ZonalFunction {
    let (_, max) = gangolli_core::operators::locate_maximum(f);
    f.add(&ZonalFunction::constant(1.0 - max))
}
