use curvinit_core::activation::ActivationKind::*;
use curvinit_core::init::{BaseScheme, InitScheme};
use curvinit_core::rng;
use curvinit_core::stats::{
    correlation_experiment, correlation_test, pearson_r, permutation_p_value, Component, CorrelationSetup, Pairing,
    PairReport,
};
use curvinit_core::{Error, LayerSpec, LossKind, Target};
use proptest::collection::vec;
use proptest::prelude::*;

fn spread(v: &[f64]) -> bool {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|a| (a - m) * (a - m)).sum::<f64>() > 1e-6
}

proptest! {
    #[test]
    fn pearson_ignores_positive_affine_maps(
        xy in vec((-10.0f64..10.0, -10.0f64..10.0), 3..40),
        a in 0.01f64..100.0,
        b in -100.0f64..100.0,
    ) {
        let (xs, ys): (Vec<f64>, Vec<f64>) = xy.into_iter().unzip();
        prop_assume!(spread(&xs) && spread(&ys));
        let r = pearson_r(&xs, &ys).unwrap();
        let mapped: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
        prop_assert!((pearson_r(&mapped, &ys).unwrap() - r).abs() <= 1e-12);
        let mapped: Vec<f64> = ys.iter().map(|y| a * y + b).collect();
        prop_assert!((pearson_r(&xs, &mapped).unwrap() - r).abs() <= 1e-12);
        prop_assert!((-1.0..=1.0).contains(&r));
    }

    #[test]
    fn p_values_lie_in_the_half_open_unit_interval(
        xy in vec((-10.0f64..10.0, -10.0f64..10.0), 3..30),
        seed in any::<u64>(),
    ) {
        let (xs, ys): (Vec<f64>, Vec<f64>) = xy.into_iter().unzip();
        prop_assume!(spread(&xs) && spread(&ys));
        let rep = correlation_test(&xs, &ys, 199, seed).unwrap();
        prop_assert!(rep.p_value > 0.0 && rep.p_value <= 1.0);
        prop_assert!(rep.p_value >= 1.0 / 200.0);
        prop_assert_eq!(rep.n_samples, xs.len());
        prop_assert_eq!(rep.n_permutations, 199);
    }
}

#[test]
fn p_value_is_seed_deterministic() {
    let xs: Vec<f64> = (0..50).map(|i| (i as f64 * 0.7).sin()).collect();
    let ys: Vec<f64> = (0..50).map(|i| (i as f64 * 1.3).cos()).collect();
    assert_eq!(permutation_p_value(&xs, &ys, 500, 4), permutation_p_value(&xs, &ys, 500, 4));
}

#[test]
fn anticorrelated_sequences_are_significant() {
    let xs: Vec<f64> = (0..20).map(f64::from).collect();
    let ys: Vec<f64> = xs.iter().map(|x| -3.0 * x + 1.0).collect();
    assert_eq!(permutation_p_value(&xs, &ys, 999, 7).unwrap(), 1.0 / 1000.0);
}

#[test]
fn null_rejection_rate_is_nominal() {
    let mut rejections = 0;
    for rep in 0..100u64 {
        let mut r = rng::seeded(rng::derive_seed(99, rep));
        let xs = rng::normal_vec(&mut r, 1000);
        let ys = rng::normal_vec(&mut r, 1000);
        if permutation_p_value(&xs, &ys, 999, rep).unwrap() < 0.05 {
            rejections += 1;
        }
    }
    let frac = rejections as f64 / 100.0;
    assert!((0.0..=0.10).contains(&frac), "{frac}");
}

fn setup(pairs: Vec<(Component, Component)>, pairing: Pairing, n_seeds: usize, n_inits: usize) -> CorrelationSetup {
    CorrelationSetup { pairs, pairing, n_seeds, n_inits, n_perm: 999, seed: 21 }
}

fn detected(reports: &[PairReport]) -> usize {
    reports.iter().filter(|r| r.report.p_value < 0.05).count()
}

#[test]
fn constant_weight_jacobian_is_degenerate() {
    let spec = [LayerSpec::new(1, 1, Linear)];
    let pair = (Component::LossGrad { index: 0 }, Component::WeightJacobian { layer: 0, output: 0, row: 0, col: 0 });
    let err = correlation_experiment(
        &spec,
        &InitScheme::plain(BaseScheme::Fixed(1.0)).unwrap(),
        LossKind::SquaredError,
        &[1.0],
        Target::Values(&[1.0]),
        &setup(vec![pair], Pairing::Raw, 1, 200),
    )
    .unwrap_err();
    assert_eq!(err, Error::DegenerateSequence);
}

#[test]
fn two_layer_linear_loss_gradient_depends_on_outer_weight() {
    let spec = LayerSpec::chain(&[1, 1, 1], Linear, Linear);
    let pair = (Component::LossGrad { index: 0 }, Component::Weight { layer: 1, row: 0, col: 0 });
    let scheme = InitScheme::plain(BaseScheme::Fixed(1.0)).unwrap();
    let s = setup(vec![pair], Pairing::Magnitude, 10, 2000);
    let run = || {
        correlation_experiment(&spec, &scheme, LossKind::SquaredError, &[1.0], Target::Values(&[1.0]), &s).unwrap()
    };
    let reports = run();
    assert_eq!(reports.len(), 10);
    assert!(detected(&reports) >= 9, "{reports:?}");
    assert_eq!(reports, run());
}

#[test]
fn tanh_net_loss_gradient_depends_on_output_jacobian() {
    // the dependence runs through one of four terms of z_0; large inputs keep |h| near 1
    let spec = LayerSpec::chain(&[4, 8, 4, 2], Tanh, Linear);
    let pair = (Component::LossGrad { index: 0 }, Component::LayerJacobian { layer: 2, row: 0, col: 0 });
    let x = [1.5, -1.5, 1.5, -1.5];
    let reports = correlation_experiment(
        &spec,
        &InitScheme::glorot(),
        LossKind::SquaredError,
        &x,
        Target::Values(&[1.0, 0.0]),
        &setup(vec![pair], Pairing::Magnitude, 10, 10_000),
    )
    .unwrap();
    assert!(detected(&reports) >= 8, "{reports:?}");
}
