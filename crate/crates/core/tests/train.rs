mod common;

use common::{random_net, ref_output};
use curvinit_core::activation::ActivationKind::*;
use curvinit_core::data::{synth_dataset, SynthKind};
use curvinit_core::train::train_sgd;
use curvinit_core::{LossKind, TrainConfig};

fn cfg(seed: u64) -> TrainConfig {
    TrainConfig { learning_rate: 0.05, epochs: 3, batch_size: 7, seed, input_scale: 1.0 }
}

#[test]
fn replay_is_bit_identical() {
    let data = synth_dataset(SynthKind::Blobs, 50, 6, 3, 1.0, 1).unwrap();
    let kind = LossKind::SoftmaxCrossEntropy { num_classes: 3 };
    let net = random_net(&[6, 10, 3], Tanh, Linear, 1.0, 0.0, 5);
    let (a, ha) = train_sgd(&net, &data, kind, &cfg(9)).unwrap();
    let (b, hb) = train_sgd(&net, &data, kind, &cfg(9)).unwrap();
    assert_eq!(a, b);
    assert_eq!(ha.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), hb.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
    assert_eq!(ha.len(), 3 * 50usize.div_ceil(7));
    let (_, hc) = train_sgd(&net, &data, kind, &cfg(10)).unwrap();
    assert_ne!(ha, hc);
}

#[test]
fn history_length_counts_partial_batches() {
    let data = synth_dataset(SynthKind::LinReg, 10, 3, 2, 0.5, 2).unwrap();
    let net = random_net(&[3, 4, 2], Relu, Linear, 1.0, 0.0, 1);
    for (batch, epochs, want) in [(1, 2, 20), (3, 1, 4), (10, 3, 3), (32, 2, 2)] {
        let c = TrainConfig { batch_size: batch, epochs, ..cfg(0) };
        let (_, h) = train_sgd(&net, &data, LossKind::SquaredError, &c).unwrap();
        assert_eq!(h.len(), want, "batch {batch}, epochs {epochs}");
    }
    let c = TrainConfig { epochs: 0, ..cfg(0) };
    let (same, h) = train_sgd(&net, &data, LossKind::SquaredError, &c).unwrap();
    assert!(h.is_empty());
    assert_eq!(same, net);
}

#[test]
fn training_reduces_regression_loss() {
    let data = synth_dataset(SynthKind::LinReg, 200, 4, 2, 1.0, 3).unwrap();
    let net = random_net(&[4, 2], Linear, Linear, 0.5, 0.0, 4);
    let c = TrainConfig { learning_rate: 0.5, epochs: 20, batch_size: 20, seed: 1, input_scale: 1.0 };
    let (trained, h) = train_sgd(&net, &data, LossKind::SquaredError, &c).unwrap();
    assert!(h.last().unwrap() < &(0.1 * h[0]), "{} -> {}", h[0], h.last().unwrap());
    // biases are left alone
    assert_eq!(trained.layers()[0].bias, net.layers()[0].bias);
}

#[test]
fn dropout_masks_change_between_batches() {
    let data = synth_dataset(SynthKind::LinReg, 8, 4, 1, 1.0, 3).unwrap();
    let net = random_net(&[4, 16, 1], Dropout { keep_rate: 0.5, mask_seed: 0 }, Linear, 1.0, 0.0, 2);
    let c = TrainConfig { learning_rate: 0.0, epochs: 4, batch_size: 8, seed: 3, input_scale: 1.0 };
    let (_, h) = train_sgd(&net, &data, LossKind::SquaredError, &c).unwrap();
    assert!(h.windows(2).any(|w| w[0] != w[1]), "{h:?}");
}

#[test]
fn input_scale_multiplies_inputs() {
    let data = synth_dataset(SynthKind::LinReg, 1, 3, 1, 1.0, 3).unwrap();
    let net = random_net(&[3, 1], Linear, Linear, 1.0, 0.0, 2);
    let c = TrainConfig { learning_rate: 0.0, epochs: 1, batch_size: 1, seed: 0, input_scale: 0.25 };
    let (_, h) = train_sgd(&net, &data, LossKind::SquaredError, &c).unwrap();
    let x: Vec<f64> = data.input(0).iter().map(|a| a * 0.25).collect();
    let z = ref_output(&net, &x);
    let t = match data.target(0) {
        curvinit_core::Target::Values(v) => v[0],
        _ => unreachable!(),
    };
    assert!((h[0] - (z[0] - t) * (z[0] - t)).abs() < 1e-14);
}

#[test]
fn synthetic_data_examples() {
    for kind in [SynthKind::Blobs, SynthKind::LinReg] {
        let a = synth_dataset(kind, 300, 5, 3, 0.1, 8).unwrap();
        assert!(a.max_input_norm() <= 0.1 * (1.0 + 1e-12));
        assert_eq!(a, synth_dataset(kind, 300, 5, 3, 0.1, 8).unwrap());
        assert_eq!(synth_dataset(kind, 1, 5, 3, 0.1, 8).unwrap().len(), 1);
        assert!(synth_dataset(kind, 0, 5, 3, 0.1, 8).is_err());
    }
}
