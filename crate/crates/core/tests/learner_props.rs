mod common;

use common::{config, random_model, rng, Shape};
use infolab::learner::{grad_check, train, MLPArch, MLPParams, TrainConfig};
use ndarray::Array2;
use proptest::prelude::*;
use rand::Rng;

fn random_net(seed: u64) -> (MLPParams, Array2<f64>, Vec<usize>) {
    let mut r = rng(seed);
    let input = r.random_range(1..=6);
    let hidden: Vec<usize> = (0..r.random_range(0..=2)).map(|_| r.random_range(1..=8)).collect();
    let classes = r.random_range(2..=4);
    let arch = MLPArch::new(input, hidden, classes).unwrap();
    let mut params = MLPParams::init(&arch, r.random());
    for b in &mut params.biases {
        b.mapv_inplace(|_| r.random_range(-0.5..0.5));
    }
    let rows = r.random_range(4..=16);
    let x = Array2::from_shape_fn((rows, input), |_| r.random_range(-2.0..2.0));
    let y = (0..rows).map(|_| r.random_range(0..classes)).collect();
    (params, x, y)
}

proptest! {
    #![proptest_config(config(300))]

    #[test]
    fn analytic_gradients_match_finite_differences(seed in any::<u64>()) {
        let (params, x, y) = random_net(seed);
        match grad_check(&params, x.view(), &y) {
            Ok(err) => prop_assert!(err < 1e-4, "relative error {err}"),
            // every row sat on a ReLU kink
            Err(infolab::Error::InvalidCount(_)) => {}
            Err(e) => prop_assert!(false, "{e}"),
        }
    }

    #[test]
    fn softmax_rows_are_normalized(seed in any::<u64>(), scale in 1.0f64..200.0) {
        let (mut params, x, _) = random_net(seed);
        for w in &mut params.weights {
            w.mapv_inplace(|v| v * scale);
        }
        let p = params.forward_batch(x.view()).unwrap();
        for row in p.rows() {
            prop_assert!(row.iter().all(|v| v.is_finite() && *v >= 0.0));
            prop_assert!((row.sum() - 1.0).abs() <= 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(config(6))]

    #[test]
    fn training_is_reproducible(seed in any::<u64>()) {
        let mut r = rng(seed);
        let model = random_model(&mut r, Shape::default());
        let arch = MLPArch::new(model.dim(), vec![8], model.classes()).unwrap();
        let cfg = TrainConfig { epochs: 2, seed, val_size: 500, ..TrainConfig::default() };
        let a = train(&model, 200, &arch, &cfg).unwrap();
        let b = train(&model, 200, &arch, &cfg).unwrap();
        prop_assert_eq!(&a.records, &b.records);
        prop_assert_eq!(&a.params, &b.params);
    }
}
