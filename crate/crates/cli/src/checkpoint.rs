//! Model checkpoints.
//!
//! A checkpoint is a plain-text file: a `key value` header describing the
//! architecture, then every trainable parameter as one decimal per line in
//! the model's canonical flat order (see `HybridModel::flat_params`). Floats
//! are written in Rust's shortest round-trip form, so save/load is exact and
//! two saves of the same model are byte-identical.
//!
//! ```text
//! ensemble-vqc-checkpoint v1
//! variant ensemble
//! input_dim 784
//! classes 2
//! nq 4
//! depth 4
//! topology nn
//! observable local0
//! pre_hidden -
//! post_hidden -
//! params 3216
//! <one value per line>
//! ```

use std::fmt::Write as _;
use std::path::Path;

use ensemble_vqc_core::circuits::{AnsatzConfig, Topology};
use ensemble_vqc_core::network::{HybridModel, ModelConfig, VariantKind};
use ensemble_vqc_core::statevector::Observable;

use crate::data::DataError;
use crate::{CliError, CliResult};

const MAGIC: &str = "ensemble-vqc-checkpoint v1";

fn widths_field(widths: &[usize]) -> String {
    if widths.is_empty() {
        "-".to_string()
    } else {
        widths
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join(",")
    }
}

fn parse_widths_field(text: &str) -> Option<Vec<usize>> {
    if text == "-" {
        return Some(Vec::new());
    }
    text.split(',').map(|s| s.parse().ok()).collect()
}

/// Serializes the model architecture and parameters.
pub fn to_string(model: &HybridModel) -> String {
    let config = &model.config;
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC}");
    let variant = match config.variant {
        VariantKind::Reference => "reference",
        VariantKind::Ensemble => "ensemble",
    };
    let _ = writeln!(out, "variant {variant}");
    let _ = writeln!(out, "input_dim {}", config.input_dim);
    let _ = writeln!(out, "classes {}", config.classes);
    let _ = writeln!(out, "nq {}", config.ansatz.n_qubits);
    let _ = writeln!(out, "depth {}", config.ansatz.depth);
    let topology = match config.ansatz.topology {
        Topology::NearestNeighbor => "nn",
        Topology::AllPairs => "allpairs",
    };
    let _ = writeln!(out, "topology {topology}");
    match config.ansatz.observable {
        Observable::LocalProjector(q) => {
            let _ = writeln!(out, "observable local{q}");
        }
        Observable::GlobalProjector => {
            let _ = writeln!(out, "observable global");
        }
    }
    let _ = writeln!(out, "pre_hidden {}", widths_field(&config.pre_hidden));
    let _ = writeln!(out, "post_hidden {}", widths_field(&config.post_hidden));
    let params = model.flat_params();
    let _ = writeln!(out, "params {}", params.len());
    for p in params {
        let _ = writeln!(out, "{p}");
    }
    out
}

pub fn save(model: &HybridModel, path: &Path) -> CliResult<()> {
    std::fs::write(path, to_string(model)).map_err(|source| {
        CliError::Data(DataError::Io {
            path: path.to_path_buf(),
            source,
        })
    })
}

fn malformed(path: &Path, what: impl std::fmt::Display) -> CliError {
    CliError::Data(DataError::Malformed(format!(
        "checkpoint {}: {what}",
        path.display()
    )))
}

/// Rebuilds a model from a checkpoint file.
pub fn load(path: &Path) -> CliResult<HybridModel> {
    let text = std::fs::read_to_string(path).map_err(|source| {
        CliError::Data(DataError::Io {
            path: path.to_path_buf(),
            source,
        })
    })?;
    let mut lines = text.lines();
    if lines.next() != Some(MAGIC) {
        return Err(malformed(path, "missing or unsupported header"));
    }

    let mut variant = None;
    let mut input_dim = None;
    let mut classes = None;
    let mut nq = None;
    let mut depth = None;
    let mut topology = None;
    let mut observable = None;
    let mut pre_hidden = None;
    let mut post_hidden = None;
    let mut param_count = None;

    for line in lines.by_ref() {
        let (key, value) = line
            .split_once(' ')
            .ok_or_else(|| malformed(path, format!("bad header line '{line}'")))?;
        let bad = || malformed(path, format!("bad value for {key}"));
        match key {
            "variant" => {
                variant = Some(match value {
                    "reference" => VariantKind::Reference,
                    "ensemble" => VariantKind::Ensemble,
                    _ => return Err(bad()),
                })
            }
            "input_dim" => input_dim = Some(value.parse().map_err(|_| bad())?),
            "classes" => classes = Some(value.parse().map_err(|_| bad())?),
            "nq" => nq = Some(value.parse().map_err(|_| bad())?),
            "depth" => depth = Some(value.parse().map_err(|_| bad())?),
            "topology" => {
                topology = Some(match value {
                    "nn" => Topology::NearestNeighbor,
                    "allpairs" => Topology::AllPairs,
                    _ => return Err(bad()),
                })
            }
            "observable" => {
                observable = Some(if value == "global" {
                    Observable::GlobalProjector
                } else if let Some(q) = value.strip_prefix("local") {
                    Observable::LocalProjector(q.parse().map_err(|_| bad())?)
                } else {
                    return Err(bad());
                })
            }
            "pre_hidden" => pre_hidden = Some(parse_widths_field(value).ok_or_else(bad)?),
            "post_hidden" => post_hidden = Some(parse_widths_field(value).ok_or_else(bad)?),
            "params" => {
                param_count = Some(value.parse::<usize>().map_err(|_| bad())?);
                break;
            }
            other => return Err(malformed(path, format!("unknown header key '{other}'"))),
        }
    }

    let missing = |what: &str| malformed(path, format!("missing {what}"));
    let ansatz = AnsatzConfig::new(
        nq.ok_or_else(|| missing("nq"))?,
        depth.ok_or_else(|| missing("depth"))?,
        topology.ok_or_else(|| missing("topology"))?,
        observable.ok_or_else(|| missing("observable"))?,
    )?;
    let mut config = ModelConfig::new(
        input_dim.ok_or_else(|| missing("input_dim"))?,
        classes.ok_or_else(|| missing("classes"))?,
        ansatz,
        variant.ok_or_else(|| missing("variant"))?,
    );
    config.pre_hidden = pre_hidden.ok_or_else(|| missing("pre_hidden"))?;
    config.post_hidden = post_hidden.ok_or_else(|| missing("post_hidden"))?;

    let param_count = param_count.ok_or_else(|| missing("params"))?;
    let mut params = Vec::with_capacity(param_count);
    for line in lines {
        params.push(
            line.parse::<f64>()
                .map_err(|_| malformed(path, format!("bad parameter value '{line}'")))?,
        );
    }
    if params.len() != param_count {
        return Err(malformed(
            path,
            format!("expected {param_count} parameters, found {}", params.len()),
        ));
    }

    let mut model = HybridModel::init(&config, 0)?;
    model.set_flat_params(&params)?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ensemble_vqc_core::network::VariantKind;

    fn sample_model(variant: VariantKind) -> HybridModel {
        let ansatz =
            AnsatzConfig::new(3, 2, Topology::AllPairs, Observable::LocalProjector(0)).unwrap();
        let mut config = ModelConfig::new(10, 3, ansatz, variant);
        config.post_hidden = vec![5];
        HybridModel::init(&config, 99).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        for variant in [VariantKind::Reference, VariantKind::Ensemble] {
            let model = sample_model(variant);
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("model.ckpt");
            save(&model, &path).unwrap();
            let loaded = load(&path).unwrap();
            assert_eq!(loaded.config, model.config);
            assert_eq!(loaded.flat_params(), model.flat_params());
            // stable: a second save emits identical bytes
            let again = to_string(&loaded);
            assert_eq!(again, to_string(&model));
        }
    }

    #[test]
    fn rejects_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.ckpt");
        std::fs::write(&path, "not a checkpoint\n").unwrap();
        assert!(load(&path).is_err());

        let model = sample_model(VariantKind::Reference);
        let mut text = to_string(&model);
        text.truncate(text.len() - 12); // drop some parameters
        std::fs::write(&path, text).unwrap();
        assert!(load(&path).is_err());
    }
}
