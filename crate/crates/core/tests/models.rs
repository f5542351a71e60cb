use ndarray::{Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use riskscan::model::{accuracy, fit, fit_gbm, ModelKind, ModelSpec, Parameters};

fn blobs(seed: u64, n: usize, d: usize, gap: f64) -> (Array2<f64>, Vec<bool>) {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let y: Vec<bool> = (0..n).map(|i| i % 2 == 0).collect();
    let x = Array2::from_shape_fn((n, d), |(i, _)| {
        let c = if y[i] { gap / 2.0 } else { -gap / 2.0 };
        c + r.sample::<f64, _>(StandardNormal)
    });
    (x, y)
}

fn xor(seed: u64, n: usize) -> (Array2<f64>, Vec<bool>) {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Array2::zeros((n, 2));
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let a: f64 = r.random_range(-1.0..1.0);
        let b: f64 = r.random_range(-1.0..1.0);
        x[[i, 0]] = a;
        x[[i, 1]] = b;
        y.push((a > 0.0) != (b > 0.0));
    }
    (x, y)
}

#[test]
fn every_model_separates_gaussian_blobs() {
    let (train_x, train_y) = blobs(1, 200, 4, 3.0);
    let (test_x, test_y) = blobs(2, 400, 4, 3.0);
    for kind in ModelKind::ALL {
        let m = fit(&ModelSpec::new(kind), train_x.view(), &train_y).unwrap();
        let acc = accuracy(&m.predict(test_x.view()).unwrap(), &test_y);
        assert!(acc >= 0.95, "{kind}: accuracy {acc}");
    }
}

#[test]
fn trees_learn_xor_and_linear_models_do_not() {
    let (train_x, train_y) = xor(3, 400);
    let (test_x, test_y) = xor(4, 400);
    for kind in ModelKind::ALL {
        let m = fit(&ModelSpec::new(kind), train_x.view(), &train_y).unwrap();
        let acc = accuracy(&m.predict(test_x.view()).unwrap(), &test_y);
        match kind {
            ModelKind::Gbm => assert!(acc >= 0.9, "gbm accuracy {acc}"),
            _ => assert!(acc <= 0.65, "{kind} accuracy {acc}"),
        }
    }
}

#[test]
fn linear_models_ignore_column_scale() {
    let (x, y) = blobs(5, 80, 3, 1.0);
    let mut by_8 = x.clone();
    by_8.column_mut(1).mapv_inplace(|v| v * 8.0);
    let mut by_10 = x.clone();
    by_10.column_mut(1).mapv_inplace(|v| v * 10.0);
    for kind in [ModelKind::Logistic, ModelKind::LinearSvm] {
        let spec = ModelSpec::new(kind).with_seed(2);
        let base = fit(&spec, x.view(), &y).unwrap().decision_function(x.view()).unwrap();
        // Power-of-two scaling is exact through standardization.
        let m8 = fit(&spec, by_8.view(), &y).unwrap();
        assert_eq!(m8.decision_function(by_8.view()).unwrap(), base);
        let m10 = fit(&spec, by_10.view(), &y).unwrap();
        let s10 = m10.decision_function(by_10.view()).unwrap();
        for (a, b) in s10.iter().zip(&base) {
            assert!((a - b).abs() <= 1e-6 * b.abs().max(1.0), "{kind}: {a} vs {b}");
        }
        assert_eq!(m10.predict(by_10.view()).unwrap(), m8.predict(by_8.view()).unwrap());
    }
}

#[test]
fn boosting_prefix_equals_shorter_fit() {
    let (x, y) = blobs(6, 60, 5, 0.8);
    let long = fit_gbm(x.view(), &y, 40, 0.1, 3);
    for k in [1, 7, 25, 40] {
        assert_eq!(long.truncated(k), fit_gbm(x.view(), &y, k, 0.1, 3), "k = {k}");
    }
}

#[test]
fn boosting_is_invariant_to_monotone_feature_maps() {
    let (x, y) = blobs(7, 70, 3, 1.0);
    let mut warped = x.clone();
    warped.column_mut(0).mapv_inplace(f64::exp);
    warped.column_mut(2).mapv_inplace(|v| v * v * v + 4.0);
    let spec = ModelSpec::new(ModelKind::Gbm);
    let a = fit(&spec, x.view(), &y).unwrap().decision_function(x.view()).unwrap();
    let b = fit(&spec, warped.view(), &y).unwrap().decision_function(warped.view()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn fits_are_deterministic_and_row_functions() {
    let (x, y) = blobs(8, 50, 4, 1.0);
    // Row 0 repeated at the end must score like row 0.
    let probe = ndarray::concatenate(Axis(0), &[x.view(), x.slice(ndarray::s![0..1, ..])]).unwrap();
    for kind in ModelKind::ALL {
        let spec = ModelSpec::new(kind).with_seed(4);
        let a = fit(&spec, x.view(), &y).unwrap();
        let b = fit(&spec, x.view(), &y).unwrap();
        assert_eq!(a.to_json(), b.to_json(), "{kind}");
        let s = a.decision_function(probe.view()).unwrap();
        assert_eq!(s[0], s[50], "{kind}");
    }
}

#[test]
fn svm_predictions_agree_across_seeds_on_separated_data() {
    let (x, y) = blobs(9, 60, 3, 3.0);
    let a = fit(&ModelSpec::new(ModelKind::LinearSvm).with_seed(1), x.view(), &y).unwrap();
    let b = fit(&ModelSpec::new(ModelKind::LinearSvm).with_seed(2), x.view(), &y).unwrap();
    assert_eq!(a.predict(x.view()).unwrap(), b.predict(x.view()).unwrap());
}

#[test]
fn stronger_regularization_shrinks_logistic_weights() {
    let (x, y) = blobs(10, 60, 3, 1.0);
    let norm = |lambda: f64| {
        let spec = ModelSpec { lambda, ..ModelSpec::new(ModelKind::Logistic) };
        match fit(&spec, x.view(), &y).unwrap().parameters {
            Parameters::Linear { weights, .. } => weights.iter().map(|w| w * w).sum::<f64>().sqrt(),
            Parameters::Gbm(_) => unreachable!(),
        }
    };
    let norms: Vec<f64> = [0.01, 1.0, 10.0, 100.0].into_iter().map(norm).collect();
    assert!(norms.windows(2).all(|w| w[1] < w[0]), "{norms:?}");
}

#[test]
fn fit_rejects_bad_inputs() {
    let (x, y) = blobs(11, 20, 2, 1.0);
    let spec = ModelSpec::default();
    assert!(fit(&spec, x.view(), &y[..19]).is_err());
    assert!(fit(&spec, x.slice(ndarray::s![.., 0..0]).view(), &y).is_err());
    assert!(fit(&spec, x.view(), &[true; 20]).is_err());
    let mut bad = x.clone();
    bad[[3, 1]] = f64::NAN;
    assert!(fit(&spec, bad.view(), &y).is_err());
    let m = fit(&spec, x.view(), &y).unwrap();
    assert!(m.predict(x.slice(ndarray::s![.., 0..1]).view()).is_err());
    let zero_stages = ModelSpec { stages: 0, ..ModelSpec::new(ModelKind::Gbm) };
    assert!(fit(&zero_stages, x.view(), &y).is_err());
}
