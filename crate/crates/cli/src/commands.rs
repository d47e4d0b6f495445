//! Command implementations behind the CLI surface.
//!
//! Every command is deterministic given the configured seed and returns its
//! output as a string (CSV or a plain-text report); the binary writes it to
//! `--out` or stdout. CSV outputs start with a schema-version comment line
//! followed by the header row, and every data row carries the seed that
//! produced it.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use ensemble_vqc_core::circuits::AnsatzConfig;
use ensemble_vqc_core::diagnostics;
use ensemble_vqc_core::gradients::finite_diff;
use ensemble_vqc_core::network::{
    evaluate_accuracy, AdamHyper, HybridModel, ModelConfig, TrainSession,
};
use ensemble_vqc_core::rng::substream;
use rand::Rng;

use crate::config::{ExperimentConfig, ModelKind};
use crate::data::{load_mnist_dir, prepare, Dataset};
use crate::{CliError, CliResult};

/// Environment variable providing the default data directory.
pub const DATA_DIR_ENV: &str = "ENSEMBLE_VQC_DATA";

pub fn resolve_data_dir(config: &ExperimentConfig) -> CliResult<PathBuf> {
    if let Some(dir) = &config.data_dir {
        return Ok(dir.clone());
    }
    if let Some(dir) = std::env::var_os(DATA_DIR_ENV) {
        return Ok(PathBuf::from(dir));
    }
    Err(CliError::Data(crate::data::DataError::Malformed(format!(
        "no data directory: pass --data-dir or set {DATA_DIR_ENV}"
    ))))
}

fn load_datasets(config: &ExperimentConfig) -> CliResult<(Dataset, Dataset)> {
    let dir = resolve_data_dir(config)?;
    let data = load_mnist_dir(&dir)?;
    Ok(prepare(
        &data,
        &config.digits,
        config.train_size,
        config.test_size,
        config.seed,
    )?)
}

fn model_config(
    config: &ExperimentConfig,
    kind: ModelKind,
    ansatz: AnsatzConfig,
    input_dim: usize,
) -> ModelConfig {
    let mut mc = ModelConfig::new(input_dim, config.digits.len(), ansatz, kind.variant());
    mc.pre_hidden = config.pre_hidden.clone();
    mc.post_hidden = config.post_hidden.clone();
    mc
}

struct EpochRow {
    epoch: usize,
    train_loss: f64,
    test_accuracy: f64,
    wall_seconds: f64,
}

/// One full training run; wall times are measured only with `--timing` so
/// that default output stays byte-reproducible.
fn run_training(
    config: &ExperimentConfig,
    kind: ModelKind,
    train: &Dataset,
    test: &Dataset,
    seed: u64,
) -> CliResult<(Vec<EpochRow>, HybridModel)> {
    let nq = config.nq.scalar("nq")?;
    let layers = config.layers.scalar("layers")?;
    let ansatz = config.ansatz(nq, layers)?;
    let mc = model_config(config, kind, ansatz, train.feature_dim());
    let mut model = HybridModel::init(&mc, seed)?;
    let mut session = TrainSession::new(&mut model, AdamHyper::with_learning_rate(config.lr), seed);
    let mut rows = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        let started = Instant::now();
        let train_loss = session.run_epoch(&train.images, &train.labels, config.batch_size)?;
        let test_accuracy = evaluate_accuracy(session.model(), &test.images, &test.labels)?;
        let wall_seconds = if config.timing {
            started.elapsed().as_secs_f64()
        } else {
            0.0
        };
        rows.push(EpochRow {
            epoch,
            train_loss,
            test_accuracy,
            wall_seconds,
        });
    }
    Ok((rows, model))
}

/// `train`: per-epoch CSV for one model, one row per epoch per repetition.
/// Repetition i runs with seed `seed + i` so any single repetition can be
/// reproduced on its own. With `save_model`, the trained model of the last
/// repetition is written as a checkpoint.
pub fn cmd_train(
    config: &ExperimentConfig,
    save_model: Option<&std::path::Path>,
) -> CliResult<String> {
    if config.digits.len() < 2 {
        return Err(CliError::Usage(
            "training needs at least two digit classes".into(),
        ));
    }
    let (train, test) = load_datasets(config)?;
    let mut out = String::from("# ensemble-vqc train v1\n");
    out.push_str("model,seed,epoch,train_loss,test_accuracy,wall_seconds\n");
    let mut last_model = None;
    for rep in 0..config.repeats {
        let seed = config.seed + rep as u64;
        let (rows, model) = run_training(config, config.model, &train, &test, seed)?;
        for row in rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{:.3}",
                config.model.as_str(),
                seed,
                row.epoch,
                row.train_loss,
                row.test_accuracy,
                row.wall_seconds
            );
        }
        last_model = Some(model);
    }
    if let (Some(path), Some(model)) = (save_model, &last_model) {
        crate::checkpoint::save(model, path)?;
    }
    Ok(out)
}

/// `compare`: trains the reference and ensemble models on identical data
/// splits and per-repeat seeds, emitting per-epoch mean/min/max bands.
pub fn cmd_compare(config: &ExperimentConfig) -> CliResult<String> {
    if config.digits.len() < 2 {
        return Err(CliError::Usage(
            "training needs at least two digit classes".into(),
        ));
    }
    let (train, test) = load_datasets(config)?;
    let mut out = String::from("# ensemble-vqc compare v1\n");
    out.push_str(
        "model,base_seed,repeats,epoch,loss_mean,loss_min,loss_max,acc_mean,acc_min,acc_max\n",
    );
    for kind in [ModelKind::Reference, ModelKind::Ensemble] {
        let mut curves = Vec::with_capacity(config.repeats);
        for rep in 0..config.repeats {
            let seed = config.seed + rep as u64;
            curves.push(run_training(config, kind, &train, &test, seed)?.0);
        }
        for epoch_idx in 0..config.epochs {
            let losses: Vec<f64> = curves.iter().map(|c| c[epoch_idx].train_loss).collect();
            let accs: Vec<f64> = curves.iter().map(|c| c[epoch_idx].test_accuracy).collect();
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            let min = |v: &[f64]| v.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = |v: &[f64]| v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                kind.as_str(),
                config.seed,
                config.repeats,
                epoch_idx + 1,
                mean(&losses),
                min(&losses),
                max(&losses),
                mean(&accs),
                min(&accs),
                max(&accs)
            );
        }
    }
    Ok(out)
}

/// Which diagnostic sweep to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum DiagnoseKind {
    Bp,
    Concentration,
    Expressibility,
    Bound,
}

/// `diagnose`: runs one diagnostic over the (nq, layers) grid, one CSV row
/// per grid point.
pub fn cmd_diagnose(kind: DiagnoseKind, config: &ExperimentConfig) -> CliResult<String> {
    let obs = config.observable.observable();
    let topology = config.topology.topology();
    let seed = config.seed;
    let samples = config.samples;
    let mut out = String::new();
    match kind {
        DiagnoseKind::Bp => {
            out.push_str("# ensemble-vqc diagnose-bp v1\n");
            out.push_str("nq,layers,k,grad_mean,grad_var,stderr,samples,seed\n");
            for &layers in config.layers.values() {
                let rows =
                    diagnostics::bp_scan(topology, obs, config.nq.values(), layers, samples, seed)?;
                for row in rows {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{},{},{}",
                        row.n_qubits,
                        layers,
                        row.stats.parameter_index,
                        row.stats.mean,
                        row.stats.variance,
                        row.stats.std_error,
                        row.stats.samples,
                        seed
                    );
                }
            }
        }
        DiagnoseKind::Concentration => {
            out.push_str("# ensemble-vqc diagnose-concentration v1\n");
            out.push_str(
                "nq,layers,samples,seed,mean_f,var_f,stderr,target,deviation,expressibility,bound_rhs\n",
            );
            for &nq in config.nq.values() {
                for &layers in config.layers.values() {
                    let ansatz = config.ansatz(nq, layers)?;
                    let stats = diagnostics::concentration_stats(&ansatz, obs, samples, seed)?;
                    let _ = writeln!(
                        out,
                        "{nq},{layers},{samples},{seed},{},{},{},{},{},{},{}",
                        stats.mean_f,
                        stats.var_f,
                        stats.std_error,
                        stats.target,
                        stats.deviation,
                        stats.expressibility,
                        stats.bound_rhs
                    );
                }
            }
        }
        DiagnoseKind::Expressibility => {
            out.push_str("# ensemble-vqc diagnose-expressibility v1\n");
            out.push_str("nq,layers,samples,seed,expressibility,stderr\n");
            for &nq in config.nq.values() {
                for &layers in config.layers.values() {
                    let ansatz = config.ansatz(nq, layers)?;
                    let est = diagnostics::expressibility_t1_stats(&ansatz, samples, seed)?;
                    let _ = writeln!(
                        out,
                        "{nq},{layers},{samples},{seed},{},{}",
                        est.value, est.std_error
                    );
                }
            }
        }
        DiagnoseKind::Bound => {
            out.push_str("# ensemble-vqc diagnose-bound v1\n");
            out.push_str("nq,layers,samples,seed,lhs,rhs,stderr,holds\n");
            for &nq in config.nq.values() {
                for &layers in config.layers.values() {
                    let ansatz = config.ansatz(nq, layers)?;
                    let report = diagnostics::verify_bound(&ansatz, obs, samples, seed)?;
                    let _ = writeln!(
                        out,
                        "{nq},{layers},{samples},{seed},{},{},{},{}",
                        report.lhs, report.rhs, report.std_error, report.holds
                    );
                }
            }
        }
    }
    Ok(out)
}

/// `gradcheck`: compares every analytic gradient against central finite
/// differences on a small model of the configured shape (both quantum layer
/// variants), reporting the worst deviation per parameter class.
///
/// `inject_shift_error` deliberately corrupts one quantum gradient before
/// the comparison; it exists so the failure path itself can be tested.
pub fn cmd_gradcheck(
    config: &ExperimentConfig,
    tol: f64,
    inject_shift_error: bool,
) -> CliResult<String> {
    const FD_H: f64 = 1e-5;
    const INPUT_DIM: usize = 8;
    let nq = config.nq.scalar("nq")?;
    let layers = config.layers.scalar("layers")?;
    let classes = config.digits.len().max(2);

    let mut report = String::from("gradient check: analytic vs central finite differences\n");
    let _ = writeln!(
        report,
        "model shape: {INPUT_DIM} -> [{}] -> quantum(nq={nq}, layers={layers}, {}) -> [{}] -> {classes}",
        config
            .pre_hidden
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join(","),
        config.topology.as_str(),
        config
            .post_hidden
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join(","),
    );
    let _ = writeln!(report, "tolerance: {tol:e}, h = {FD_H:e}");

    let mut rng = substream(config.seed, 20);
    let x: Vec<f64> = (0..INPUT_DIM).map(|_| rng.gen_range(0.0..1.0)).collect();
    let mut target = vec![0.0; classes];
    target[0] = 1.0;
    let probe: Vec<f64> = (0..nq).map(|_| rng.gen_range(-1.0..1.0)).collect();

    let mut worst_overall: f64 = 0.0;
    for kind in [ModelKind::Reference, ModelKind::Ensemble] {
        let ansatz = config.ansatz(nq, layers)?;
        let mut mc = model_config(config, kind, ansatz, INPUT_DIM);
        mc.classes = classes;
        let model = HybridModel::init(&mc, config.seed)?;

        let (_, mut analytic) = model.loss_grads(&x, &target)?;
        if inject_shift_error {
            if let Some(("quantum_theta", range)) = model
                .param_classes()
                .iter()
                .find(|(name, _)| *name == "quantum_theta")
                .map(|(n, r)| (*n, r.clone()))
            {
                analytic[range.start] += 1e-3;
            }
        }

        let params = model.flat_params();
        let mut scratch = model.clone();
        let mut numeric = vec![0.0; params.len()];
        for idx in 0..params.len() {
            let mut shifted = params.clone();
            shifted[idx] = params[idx] + FD_H;
            scratch.set_flat_params(&shifted)?;
            let up = scratch.loss_grads(&x, &target)?.0;
            shifted[idx] = params[idx] - FD_H;
            scratch.set_flat_params(&shifted)?;
            let down = scratch.loss_grads(&x, &target)?.0;
            numeric[idx] = (up - down) / (2.0 * FD_H);
        }

        for (class, range) in model.param_classes() {
            let worst = range
                .clone()
                .map(|i| (analytic[i] - numeric[i]).abs())
                .fold(0.0f64, f64::max);
            worst_overall = worst_overall.max(worst);
            let verdict = if worst <= tol { "ok" } else { "FAIL" };
            let _ = writeln!(
                report,
                "{}/{class}: max deviation {worst:.3e} ({} params) {verdict}",
                kind.as_str(),
                range.len()
            );
        }

        // encoding inputs: gradient of a scalar probe of the quantum layer
        // with respect to its input vector
        let pre_out = {
            let mut cur = x.clone();
            for layer in &model.pre {
                cur = layer.forward(&cur)?.0;
            }
            cur
        };
        let (_, cache) = model.quantum.forward(&pre_out)?;
        let analytic_input = model.quantum.backward(&cache, &probe)?.input;
        let quantum = &model.quantum;
        let eval = |q: &[f64]| -> f64 {
            quantum
                .forward(q)
                .expect("probe evaluation")
                .0
                .iter()
                .zip(&probe)
                .map(|(y, p)| y * p)
                .sum()
        };
        let worst = analytic_input
            .iter()
            .enumerate()
            .map(|(j, a)| (a - finite_diff(eval, &pre_out, j, FD_H)).abs())
            .fold(0.0f64, f64::max);
        worst_overall = worst_overall.max(worst);
        let verdict = if worst <= tol { "ok" } else { "FAIL" };
        let _ = writeln!(
            report,
            "{}/encoding_input: max deviation {worst:.3e} ({nq} params) {verdict}",
            kind.as_str()
        );
    }

    if worst_overall <= tol {
        let _ = writeln!(
            report,
            "gradcheck: PASS (max deviation {worst_overall:.3e})"
        );
        Ok(report)
    } else {
        let _ = writeln!(
            report,
            "gradcheck: FAIL (max deviation {worst_overall:.3e})"
        );
        // the report goes to stderr via the error path
        Err(CliError::Verification(report))
    }
}

/// `plot`: renders a results CSV into an SVG chart.
pub fn cmd_plot(csv_path: &std::path::Path, out_path: &std::path::Path) -> CliResult<()> {
    let text = std::fs::read_to_string(csv_path).map_err(|source| {
        CliError::Data(crate::data::DataError::Io {
            path: csv_path.to_path_buf(),
            source,
        })
    })?;
    let svg = crate::plot::render_svg(&text)?;
    std::fs::write(out_path, svg).map_err(|source| {
        CliError::Data(crate::data::DataError::Io {
            path: out_path.to_path_buf(),
            source,
        })
    })?;
    Ok(())
}
