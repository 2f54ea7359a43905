use std::f64::consts::{PI, TAU};

use gangolli_core::geometry::GroupElement;
use gangolli_core::levy::{symbol_eta, Density, LevyKernel, ZonalLevyMeasure};
use gangolli_core::operators::{
    courrege_apply, pmp_check, validate_invariance, GangolliCoefficients, GangolliOperator, InvarianceSamples,
    INVARIANCE_TOL,
};
use gangolli_core::random::{random_band_limited, random_coefficients};
use gangolli_core::semigroup::{semigroup_apply, ConstantSymbol};
use gangolli_core::spectral::{default_rule, spherical_transform, synthesis, SphericalWeight, ZonalFunction};
use gangolli_core::{MatrixField, ZonalField};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn eigenrelation_for_random_coefficients(seed in any::<u64>(), l in 0usize..10, s in 0.05f64..3.09) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let co = random_coefficients(&mut rng);
        let op = GangolliOperator::new(co.clone(), 10);
        let phi = ZonalFunction::spherical_function(l);
        let eta = symbol_eta(co.diffusion(), co.kernel(), s, SphericalWeight(l));
        let lhs = op.apply_direct(&phi, s).unwrap();
        prop_assert!((lhs + eta * phi.eval(s)).abs() <= 1e-6);
    }

    #[test]
    fn direct_and_spectral_routes_agree(seed in any::<u64>(), s in 0.01f64..3.13) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let co = random_coefficients(&mut rng);
        let f = random_band_limited(&mut rng, 12);
        let op = GangolliOperator::new(co, 12);
        let d = op.apply_direct(&f, s).unwrap();
        let sp = op.apply_spectral(&f, s).unwrap();
        prop_assert!((d - sp.value).abs() <= 1e-6f64.max(sp.tail));
    }

    #[test]
    fn zonal_functions_are_bi_invariant(seed in any::<u64>(), s in 0.0f64..PI, psi in 0.0f64..TAU, chi in 0.0f64..TAU) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_band_limited(&mut rng, 8);
        let g = GroupElement::rot_z(psi) * GroupElement::rot_y(s) * GroupElement::rot_z(chi);
        let z = g.act(&[0.0, 0.0, 1.0])[2];
        prop_assert!((f.eval_cos(z) - f.eval(s)).abs() <= 1e-12);
    }

    #[test]
    fn transform_round_trip(seed in any::<u64>(), l in 0usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_band_limited(&mut rng, l);
        let rule = default_rule(l);
        let samples: Vec<f64> = rule.nodes().iter().map(|x| f.eval_cos(*x)).collect();
        let g = synthesis(&spherical_transform(&rule, &samples, l).unwrap());
        prop_assert!(g.add(&f.scale(-1.0)).sup_norm_on(513) <= 1e-12);
    }
}

#[test]
fn courrege_form_reduces_to_gangolli_operator() {
    let nu = ZonalLevyMeasure::from_atoms([(PI, 0.4)]).with_density(Density::power(0.2, 0.5));
    let kernel = LevyKernel::new(nu, ZonalField::cosine(1.0, 0.5)).unwrap();
    let co = GangolliCoefficients::new(ZonalField::cos_squared(0.3, 0.2), kernel);
    let op = GangolliOperator::new(co.clone(), 8);
    let f = ZonalFunction::from_coefficients(vec![0.0, 0.1, -0.06, 0.02, 0.01]);
    for s in [0.3, 1.1, 2.0, 2.9] {
        let c = courrege_apply(&co, &f, s).unwrap();
        let d = op.apply_direct(&f, s).unwrap();
        assert!((c.value - d).abs() <= 1e-6, "s = {s}: {} vs {d}", c.value);
    }
}

#[test]
fn heat_semigroup_generator_is_the_operator() {
    let co = GangolliCoefficients::heat(0.7);
    let op = GangolliOperator::new(co, 6);
    let sym = ConstantSymbol::heat(0.7, 6);
    let f = ZonalFunction::from_coefficients(vec![0.2, 0.1, 0.05, -0.02, 0.01, 0.0, 0.003]);
    let h = 1e-6;
    let forward = semigroup_apply(&sym, h, &f);
    for s in [0.4, 1.6, 2.7] {
        let quotient = (forward.eval(s) - f.eval(s)) / h;
        let af = op.apply_spectral(&f, s).unwrap().value;
        assert!((quotient - af).abs() <= 1e-4 * af.abs().max(1.0));
    }
}

#[test]
fn valid_random_operators_are_invariant_and_satisfy_pmp() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let samples = InvarianceSamples::random(8, 1);
    for _ in 0..4 {
        let co = random_coefficients(&mut rng);
        let co = co.clone().with_diffusion_matrix(MatrixField::scalar(co.diffusion().clone()));
        assert!(validate_invariance(&co, &samples, INVARIANCE_TOL).all_pass());
        let f = random_band_limited(&mut rng, 8).add(&ZonalFunction::constant(3.0));
        let out = pmp_check(|f, s| courrege_apply(&co, f, s).map(|v| v.value), &f).unwrap();
        assert!(out.pass, "{out:?}");
    }
}
