//! Invariants checked over random inputs.

use bntk::activation::Activation;
use bntk::cli::{config_to_args, Manifest};
use bntk::data::{Dataset, Normalization, Split};
use bntk::dynamics::{FunctionState, Integrator, Kernels, Points};
use bntk::kernels::{sigma_grad_kernels, KernelActivation, KernelConfig};
use bntk::linear::{effective_weight, DeepLinearNet};
use bntk::oracle::init_wide_net;
use bntk::rng;
use bntk::verify::relative_frobenius;
use ndarray::{Array2, Axis};
use proptest::prelude::*;

fn vec3() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0..3.0f64, 3).prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-2)
}

fn small_state(seed: u64, lr: f64) -> (FunctionState, Array2<f64>) {
    let snap = init_wide_net((3, 2, 2), 2, Activation::Relu, 128, seed).unwrap();
    let kernels = Kernels::for_snapshot(&snap).unwrap();
    let mut r = rng::stream(seed, 4);
    let x = rng::normal_matrix(&mut r, 6, 3);
    let t = rng::normal_matrix(&mut r, 3, 3);
    let y = rng::normal_matrix(&mut r, 6, 2);
    (FunctionState::new(snap, kernels, x.view(), t.view(), lr, 1.0, Integrator::Sgd).unwrap(), y)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernels_are_symmetric_and_homogeneous(a in vec3(), b in vec3(), c in 0.1..5.0f64) {
        let cfg = KernelConfig::relu(3);
        let (s_ab, s_ba) = (cfg.nngp(&a, &b).unwrap(), cfg.nngp(&b, &a).unwrap());
        prop_assert!((s_ab - s_ba).abs() <= 1e-12 * (1.0 + s_ab.abs()));
        prop_assert!((cfg.ntk(&a, &b).unwrap() - cfg.ntk(&b, &a).unwrap()).abs() <= 1e-12 * (1.0 + s_ab.abs()));
        let ca: Vec<f64> = a.iter().map(|v| c * v).collect();
        prop_assert!((cfg.nngp(&ca, &b).unwrap() - c * s_ab).abs() <= 1e-10 * (1.0 + s_ab.abs()));
        let (saa, sbb) = (cfg.nngp(&a, &a).unwrap(), cfg.nngp(&b, &b).unwrap());
        prop_assert!(s_ab * s_ab <= saa * sbb * (1.0 + 1e-12));
        prop_assert!(s_ab >= 0.0);
    }

    #[test]
    fn sigma_second_derivative_is_transposed_by_swapping(a in vec3(), b in vec3()) {
        let (_, ab) = sigma_grad_kernels(&a, &b, 3, KernelActivation::Relu).unwrap();
        let (_, ba) = sigma_grad_kernels(&b, &a, 3, KernelActivation::Relu).unwrap();
        let diff = (&ab - &ba.t()).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assert!(diff < 1e-9 * (1.0 + ab.iter().fold(0.0f64, |m, v| m.max(v.abs()))));
    }

    #[test]
    fn xi_contracts_to_the_euler_identity(a in vec3(), b in vec3()) {
        // K(·, b) is positively homogeneous of degree one in its first argument.
        let cfg = KernelConfig::relu(3);
        let xi = cfg.xi(&a, &b).unwrap();
        let contracted: f64 = xi.iter().zip(&a).map(|(x, y)| x * y).sum();
        let k = cfg.ntk(&a, &b).unwrap();
        prop_assert!((contracted - k).abs() < 1e-5 * (1.0 + k.abs()));
    }

    #[test]
    fn normalization_is_idempotent(seed in 0u64..1000, scale in 0.01..100.0f64) {
        let mut r = rng::stream(seed, 0);
        let x = rng::normal_matrix(&mut r, 7, 4) * scale;
        let y = Array2::zeros((7, 1));
        let mut ds = Dataset::from_splits("p", Split::new(x.clone(), y.clone()).unwrap(), Split::new(x, y).unwrap(), false).unwrap();
        for mode in [Normalization::MeanSqNorm, Normalization::UnitPixels] {
            ds.normalize(mode);
            let once = ds.train_x.clone();
            ds.normalize(mode);
            let drift = (&ds.train_x - &once).iter().fold(0.0f64, |m, v| m.max(v.abs()));
            prop_assert!(drift < 1e-12 * (1.0 + once.iter().fold(0.0f64, |m, v| m.max(v.abs()))));
        }
    }

    #[test]
    fn deviation_is_scale_invariant(seed in 0u64..1000, c in 1e-3..1e3f64) {
        let mut r = rng::stream(seed, 1);
        let emp = rng::normal_matrix(&mut r, 4, 4);
        let theory = rng::normal_matrix(&mut r, 4, 4);
        let base = relative_frobenius(&emp, &theory).unwrap();
        let scaled = relative_frobenius(&(&emp * c), &(&theory * c)).unwrap();
        prop_assert!((base - scaled).abs() < 1e-12 * (1.0 + base));
    }

    #[test]
    fn collapsed_linear_net_has_identical_outputs(seed in 0u64..200, df in 1usize..4, dg in 1usize..4) {
        let deep = DeepLinearNet::random((3, 2, 2), df, dg, 8, 1.0, (1e-3, 1e-3), seed).unwrap();
        let eff = deep.collapse().unwrap();
        let x = rng::normal_matrix(&mut rng::stream(seed, 9), 5, 3);
        let gap = (&deep.forward(x.view()).unwrap() - &eff.forward(x.view()).unwrap()).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assert!(gap < 1e-10);
        let w = effective_weight(&deep.net.f.weights, 2, 8).unwrap();
        prop_assert!((&w - &deep.w_eff().unwrap()).iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn history_sums_match_incremental_g(seed in 0u64..100, steps in 1usize..6) {
        let (mut state, y) = small_state(seed, 0.3);
        let mut sampler = rng::BatchSampler::new(6, 2, seed, 1);
        for _ in 0..steps {
            let b = sampler.next_batch();
            state.sgd_step(&b, y.select(Axis(0), &b).view()).unwrap();
        }
        for j in 0..6 {
            let rebuilt = state.recompute_g(j);
            for (a, b) in rebuilt.iter().zip(state.train_g().row(j)) {
                prop_assert!((a - b).abs() < 1e-10 * (1.0 + b.abs()));
            }
        }
        prop_assert_eq!(state.history().steps(), steps);
        prop_assert_eq!(state.history().rows(), 2 * steps);
    }

    #[test]
    fn zero_learning_rate_changes_nothing(seed in 0u64..100) {
        let (mut state, y) = small_state(seed, 0.0);
        let f0 = state.eval_f(Points::Train).unwrap();
        let g0 = state.train_g().to_owned();
        let j0 = state.eval_j(&[0.5, -0.2]).unwrap();
        for b in [[0usize, 1], [2, 3], [4, 5]] {
            state.sgd_step(&b, y.select(Axis(0), &b).view()).unwrap();
        }
        prop_assert_eq!(state.eval_f(Points::Train).unwrap(), f0);
        prop_assert_eq!(state.train_g().to_owned(), g0);
        prop_assert_eq!(state.eval_j(&[0.5, -0.2]).unwrap(), j0);
    }

    #[test]
    fn manifests_read_back_as_flags(lr in 1e-6..1e4f64, steps in 1usize..100_000) {
        let mut m = Manifest::new("train-fs");
        m.set("lr", lr).set("steps", steps).set("loss_scale", "mean");
        let args: Vec<String> = config_to_args(&m.render(2)).unwrap().into_iter().map(|s| s.into_string().unwrap()).collect();
        prop_assert_eq!(args.len(), 6);
        prop_assert_eq!(args[1].parse::<f64>().unwrap(), lr);
        prop_assert_eq!(&args[4], "--loss-scale");
    }
}
