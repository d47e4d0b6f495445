//! Training-loop behavior on synthetic data.

use ensemble_vqc_core::circuits::{AnsatzConfig, Topology};
use ensemble_vqc_core::network::{
    train, AdamHyper, HybridModel, ModelConfig, TrainSession, VariantKind,
};
use ensemble_vqc_core::rng::substream;
use ensemble_vqc_core::statevector::Observable;
use rand::Rng;

fn model_config(input_dim: usize, nq: usize, depth: usize, variant: VariantKind) -> ModelConfig {
    let ansatz = AnsatzConfig::new(
        nq,
        depth,
        Topology::NearestNeighbor,
        Observable::LocalProjector(0),
    )
    .unwrap();
    ModelConfig::new(input_dim, 2, ansatz, variant)
}

/// Two linearly separable blobs in 8 dimensions.
fn synthetic_blobs(count: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut rng = substream(seed, 0);
    let mut xs = Vec::with_capacity(count);
    let mut ys = Vec::with_capacity(count);
    for i in 0..count {
        let class = i % 2;
        let x: Vec<f64> = (0..8)
            .map(|d| {
                let center = if (d < 4) == (class == 0) { 0.8 } else { 0.1 };
                (center + rng.gen_range(-0.08..0.08f64)).clamp(0.0, 1.0)
            })
            .collect();
        xs.push(x);
        ys.push(if class == 0 {
            vec![1.0, 0.0]
        } else {
            vec![0.0, 1.0]
        });
    }
    (xs, ys)
}

#[test]
fn single_sample_overfits() {
    for (variant, seed) in [
        (VariantKind::Reference, 1u64),
        (VariantKind::Ensemble, 2u64),
    ] {
        let config = model_config(6, 2, 2, variant);
        let mut model = HybridModel::init(&config, seed).unwrap();
        let xs = vec![vec![0.9, 0.1, 0.7, 0.2, 0.4, 0.8]];
        let ys = vec![vec![1.0, 0.0]];
        let records = train(
            &mut model,
            &xs,
            &ys,
            &xs,
            &ys,
            200,
            1,
            AdamHyper::with_learning_rate(0.05),
            seed,
        )
        .unwrap();
        let final_loss = records.last().unwrap().train_loss;
        assert!(
            final_loss < 0.05,
            "{variant:?}: final loss {final_loss} did not overfit"
        );
        assert_eq!(records.last().unwrap().test_accuracy, 1.0);
    }
}

/// Full-batch training must reduce the loss from its initial value for
/// nearly every initialization (5 of 6 seeds).
#[test]
fn full_batch_loss_decreases_for_most_seeds() {
    let (xs, ys) = synthetic_blobs(64, 99);
    let mut successes = 0;
    for seed in 0..6u64 {
        let config = model_config(8, 2, 2, VariantKind::Ensemble);
        let mut model = HybridModel::init(&config, seed).unwrap();
        let records = train(
            &mut model,
            &xs,
            &ys,
            &xs,
            &ys,
            50,
            64,
            AdamHyper::with_learning_rate(0.01),
            seed,
        )
        .unwrap();
        // full batch: the first record holds the pre-update initial loss
        if records[49].train_loss < records[0].train_loss {
            successes += 1;
        }
    }
    assert!(
        successes >= 5,
        "loss decreased for only {successes}/6 seeds"
    );
}

/// The simplex constraint holds after every optimizer step, not just at
/// convergence.
#[test]
fn simplex_invariant_holds_throughout_training() {
    let (xs, ys) = synthetic_blobs(24, 5);
    let config = model_config(8, 2, 3, VariantKind::Ensemble);
    let mut model = HybridModel::init(&config, 3).unwrap();
    let mut session = TrainSession::new(&mut model, AdamHyper::with_learning_rate(0.01), 3);
    let mut steps = 0;
    for _ in 0..4 {
        session
            .run_epoch_observed(&xs, &ys, 8, &mut |m| {
                let p = m.quantum.simplex_weights().expect("ensemble model");
                assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                assert!(p.iter().all(|&v| v > 0.0));
                steps += 1;
            })
            .unwrap();
    }
    assert_eq!(steps, 4 * 3);
}

#[test]
fn learning_curve_improves_on_separable_data() {
    let (xs, ys) = synthetic_blobs(48, 7);
    let (txs, tys) = synthetic_blobs(24, 8);
    let config = model_config(8, 3, 2, VariantKind::Reference);
    let mut model = HybridModel::init(&config, 12).unwrap();
    let records = train(
        &mut model,
        &xs,
        &ys,
        &txs,
        &tys,
        30,
        16,
        AdamHyper::with_learning_rate(0.02),
        12,
    )
    .unwrap();
    let final_acc = records.last().unwrap().test_accuracy;
    assert!(final_acc >= 0.9, "final accuracy {final_acc}");
}
