//! Experiment configuration.
//!
//! A configuration is assembled in three layers: built-in defaults, then a
//! `key = value` config file (`--config path`, `#` starts a comment), then
//! command-line flags. Flags override file values, which override defaults.
//! `--dump-config` prints the effective configuration in the same `key =
//! value` syntax, and that dump re-parses to an identical configuration.

use std::fmt;
use std::path::{Path, PathBuf};

use ensemble_vqc_core::circuits::{AnsatzConfig, Topology};
use ensemble_vqc_core::network::VariantKind;
use ensemble_vqc_core::statevector::Observable;

use crate::{CliError, CliResult};

/// Grid of integer values accepted wherever a sweep makes sense:
/// `4`, an inclusive range `2:6`, or a list `1,2,4,8`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridSpec(pub Vec<usize>);

impl GridSpec {
    pub fn single(v: usize) -> Self {
        GridSpec(vec![v])
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let text = text.trim();
        let parse_one = |s: &str| -> CliResult<usize> {
            s.trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("invalid integer '{s}' in grid '{text}'")))
        };
        let values = if let Some((lo, hi)) = text.split_once(':') {
            let (lo, hi) = (parse_one(lo)?, parse_one(hi)?);
            if lo > hi {
                return Err(CliError::Usage(format!("empty range '{text}'")));
            }
            (lo..=hi).collect()
        } else if text.contains(',') {
            text.split(',').map(parse_one).collect::<CliResult<_>>()?
        } else {
            vec![parse_one(text)?]
        };
        if values.is_empty() {
            return Err(CliError::Usage(format!("empty grid '{text}'")));
        }
        Ok(GridSpec(values))
    }

    pub fn values(&self) -> &[usize] {
        &self.0
    }

    /// The single value of a non-sweep parameter.
    pub fn scalar(&self, what: &str) -> CliResult<usize> {
        if self.0.len() == 1 {
            Ok(self.0[0])
        } else {
            Err(CliError::Usage(format!(
                "{what} must be a single value here, got a grid of {}",
                self.0.len()
            )))
        }
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(usize::to_string).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// Which quantum layer to train.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    Reference,
    Ensemble,
}

impl ModelKind {
    pub fn parse(text: &str) -> CliResult<Self> {
        match text {
            "reference" => Ok(ModelKind::Reference),
            "ensemble" => Ok(ModelKind::Ensemble),
            other => Err(CliError::Usage(format!(
                "unknown model '{other}' (expected 'reference' or 'ensemble')"
            ))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Reference => "reference",
            ModelKind::Ensemble => "ensemble",
        }
    }

    pub fn variant(self) -> VariantKind {
        match self {
            ModelKind::Reference => VariantKind::Reference,
            ModelKind::Ensemble => VariantKind::Ensemble,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TopologyKind {
    NearestNeighbor,
    AllPairs,
}

impl TopologyKind {
    pub fn parse(text: &str) -> CliResult<Self> {
        match text {
            "nn" => Ok(TopologyKind::NearestNeighbor),
            "allpairs" => Ok(TopologyKind::AllPairs),
            other => Err(CliError::Usage(format!(
                "unknown topology '{other}' (expected 'nn' or 'allpairs')"
            ))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TopologyKind::NearestNeighbor => "nn",
            TopologyKind::AllPairs => "allpairs",
        }
    }

    pub fn topology(self) -> Topology {
        match self {
            TopologyKind::NearestNeighbor => Topology::NearestNeighbor,
            TopologyKind::AllPairs => Topology::AllPairs,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ObservableKind {
    Local,
    Global,
}

impl ObservableKind {
    pub fn parse(text: &str) -> CliResult<Self> {
        match text {
            "local" => Ok(ObservableKind::Local),
            "global" => Ok(ObservableKind::Global),
            other => Err(CliError::Usage(format!(
                "unknown observable '{other}' (expected 'local' or 'global')"
            ))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ObservableKind::Local => "local",
            ObservableKind::Global => "global",
        }
    }

    /// Diagnostics measure qubit 0 in the local case.
    pub fn observable(self) -> Observable {
        match self {
            ObservableKind::Local => Observable::LocalProjector(0),
            ObservableKind::Global => Observable::GlobalProjector,
        }
    }
}

/// Effective settings of one command invocation.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelKind,
    pub topology: TopologyKind,
    pub nq: GridSpec,
    pub layers: GridSpec,
    pub digits: Vec<u8>,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
    pub train_size: usize,
    pub test_size: usize,
    pub repeats: usize,
    pub samples: usize,
    pub observable: ObservableKind,
    pub pre_hidden: Vec<usize>,
    pub post_hidden: Vec<usize>,
    pub data_dir: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            model: ModelKind::Reference,
            topology: TopologyKind::NearestNeighbor,
            nq: GridSpec::single(4),
            layers: GridSpec::single(4),
            digits: vec![0, 1],
            epochs: 10,
            batch_size: 32,
            lr: 0.001,
            seed: 0,
            train_size: 1024,
            test_size: 512,
            repeats: 1,
            samples: 2000,
            observable: ObservableKind::Local,
            pre_hidden: Vec::new(),
            post_hidden: Vec::new(),
            data_dir: None,
            out: None,
            timing: false,
        }
    }
}

/// Partial configuration collected from a file or from flags; `None` fields
/// leave the underlying value untouched.
#[derive(Clone, Debug, Default)]
pub struct ConfigOverrides {
    pub model: Option<String>,
    pub topology: Option<String>,
    pub nq: Option<String>,
    pub layers: Option<String>,
    pub digits: Option<String>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub lr: Option<f64>,
    pub seed: Option<u64>,
    pub train_size: Option<usize>,
    pub test_size: Option<usize>,
    pub repeats: Option<usize>,
    pub samples: Option<usize>,
    pub observable: Option<String>,
    pub pre_hidden: Option<String>,
    pub post_hidden: Option<String>,
    pub data_dir: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub timing: Option<bool>,
}

fn parse_digits(text: &str) -> CliResult<Vec<u8>> {
    let text = text.trim();
    if text.is_empty() {
        return Err(CliError::Usage("digit list is empty".into()));
    }
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<u8>()
                .ok()
                .filter(|&d| d <= 9)
                .ok_or_else(|| CliError::Usage(format!("invalid digit '{s}'")))
        })
        .collect()
}

fn parse_widths(text: &str) -> CliResult<Vec<usize>> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Usage(format!("invalid layer width '{s}'")))
        })
        .collect()
}

impl ExperimentConfig {
    /// Applies a layer of overrides on top of the current values.
    pub fn apply(&mut self, o: &ConfigOverrides) -> CliResult<()> {
        if let Some(v) = &o.model {
            self.model = ModelKind::parse(v)?;
        }
        if let Some(v) = &o.topology {
            self.topology = TopologyKind::parse(v)?;
        }
        if let Some(v) = &o.nq {
            self.nq = GridSpec::parse(v)?;
        }
        if let Some(v) = &o.layers {
            self.layers = GridSpec::parse(v)?;
        }
        if let Some(v) = &o.digits {
            self.digits = parse_digits(v)?;
        }
        if let Some(v) = o.epochs {
            self.epochs = v;
        }
        if let Some(v) = o.batch_size {
            self.batch_size = v;
        }
        if let Some(v) = o.lr {
            self.lr = v;
        }
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = o.train_size {
            self.train_size = v;
        }
        if let Some(v) = o.test_size {
            self.test_size = v;
        }
        if let Some(v) = o.repeats {
            self.repeats = v;
        }
        if let Some(v) = o.samples {
            self.samples = v;
        }
        if let Some(v) = &o.observable {
            self.observable = ObservableKind::parse(v)?;
        }
        if let Some(v) = &o.pre_hidden {
            self.pre_hidden = parse_widths(v)?;
        }
        if let Some(v) = &o.post_hidden {
            self.post_hidden = parse_widths(v)?;
        }
        if let Some(v) = &o.data_dir {
            self.data_dir = Some(v.clone());
        }
        if let Some(v) = &o.out {
            self.out = Some(v.clone());
        }
        if let Some(v) = o.timing {
            self.timing = v;
        }
        Ok(())
    }

    /// Defaults, then the optional config file, then flag overrides.
    pub fn resolve(file: Option<&Path>, flags: &ConfigOverrides) -> CliResult<Self> {
        let mut config = ExperimentConfig::default();
        if let Some(path) = file {
            let from_file = parse_config_file(path)?;
            config.apply(&from_file)?;
        }
        config.apply(flags)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.nq.values().iter().any(|&n| !(2..=8).contains(&n)) {
            return Err(CliError::Usage(format!(
                "nq must lie in 2..=8, got {}",
                self.nq
            )));
        }
        if self.layers.values().contains(&0) {
            return Err(CliError::Usage("layers must be at least 1".into()));
        }
        if !self.lr.is_finite() || self.lr <= 0.0 {
            return Err(CliError::Usage(format!(
                "learning rate must be positive, got {}",
                self.lr
            )));
        }
        if self.digits.is_empty() || self.digits.iter().any(|&d| d > 9) {
            return Err(CliError::Usage(
                "digits must be a non-empty subset of 0..=9".into(),
            ));
        }
        for (i, d) in self.digits.iter().enumerate() {
            if self.digits[..i].contains(d) {
                return Err(CliError::Usage(format!("digit {d} repeats in digit list")));
            }
        }
        if self.batch_size == 0 {
            return Err(CliError::Usage("batch size must be at least 1".into()));
        }
        if self.repeats == 0 {
            return Err(CliError::Usage("repeats must be at least 1".into()));
        }
        if self.samples < 2 {
            return Err(CliError::Usage("samples must be at least 2".into()));
        }
        Ok(())
    }

    /// Ansatz for a single (nq, layers) grid point.
    pub fn ansatz(&self, nq: usize, layers: usize) -> CliResult<AnsatzConfig> {
        Ok(AnsatzConfig::new(
            nq,
            layers,
            self.topology.topology(),
            self.observable.observable(),
        )?)
    }

    fn digits_string(&self) -> String {
        let parts: Vec<String> = self.digits.iter().map(u8::to_string).collect();
        parts.join(",")
    }

    fn widths_string(widths: &[usize]) -> String {
        let parts: Vec<String> = widths.iter().map(usize::to_string).collect();
        parts.join(",")
    }

    /// Effective configuration as `key = value` lines; feeding this back via
    /// `--config` reproduces the same configuration.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let mut push = |key: &str, value: String| {
            out.push_str(key);
            out.push_str(" = ");
            out.push_str(&value);
            out.push('\n');
        };
        push("model", self.model.as_str().to_string());
        push("topology", self.topology.as_str().to_string());
        push("nq", self.nq.to_string());
        push("layers", self.layers.to_string());
        push("digits", self.digits_string());
        push("epochs", self.epochs.to_string());
        push("batch_size", self.batch_size.to_string());
        push("lr", self.lr.to_string());
        push("seed", self.seed.to_string());
        push("train_size", self.train_size.to_string());
        push("test_size", self.test_size.to_string());
        push("repeats", self.repeats.to_string());
        push("samples", self.samples.to_string());
        push("observable", self.observable.as_str().to_string());
        if !self.pre_hidden.is_empty() {
            push("pre_hidden", Self::widths_string(&self.pre_hidden));
        }
        if !self.post_hidden.is_empty() {
            push("post_hidden", Self::widths_string(&self.post_hidden));
        }
        if let Some(dir) = &self.data_dir {
            push("data_dir", dir.display().to_string());
        }
        if let Some(out_path) = &self.out {
            push("out", out_path.display().to_string());
        }
        push("timing", self.timing.to_string());
        out
    }
}

/// Parses a `key = value` config file. Unknown keys are errors.
pub fn parse_config_file(path: &Path) -> CliResult<ConfigOverrides> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    parse_config_text(&text, &path.display().to_string())
}

pub fn parse_config_text(text: &str, origin: &str) -> CliResult<ConfigOverrides> {
    let mut o = ConfigOverrides::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Usage(format!("{origin}:{}: expected 'key = value'", lineno + 1))
        })?;
        let key = key.trim();
        let value = value.trim().to_string();
        let bad_int =
            |k: &str| CliError::Usage(format!("{origin}:{}: invalid integer for {k}", lineno + 1));
        match key {
            "model" => o.model = Some(value),
            "topology" => o.topology = Some(value),
            "nq" => o.nq = Some(value),
            "layers" => o.layers = Some(value),
            "digits" => o.digits = Some(value),
            "epochs" => o.epochs = Some(value.parse().map_err(|_| bad_int("epochs"))?),
            "batch_size" => o.batch_size = Some(value.parse().map_err(|_| bad_int("batch_size"))?),
            "lr" => {
                o.lr = Some(value.parse().map_err(|_| {
                    CliError::Usage(format!("{origin}:{}: invalid number for lr", lineno + 1))
                })?)
            }
            "seed" => o.seed = Some(value.parse().map_err(|_| bad_int("seed"))?),
            "train_size" => o.train_size = Some(value.parse().map_err(|_| bad_int("train_size"))?),
            "test_size" => o.test_size = Some(value.parse().map_err(|_| bad_int("test_size"))?),
            "repeats" => o.repeats = Some(value.parse().map_err(|_| bad_int("repeats"))?),
            "samples" => o.samples = Some(value.parse().map_err(|_| bad_int("samples"))?),
            "observable" => o.observable = Some(value),
            "pre_hidden" => o.pre_hidden = Some(value),
            "post_hidden" => o.post_hidden = Some(value),
            "data_dir" => o.data_dir = Some(PathBuf::from(value)),
            "out" => o.out = Some(PathBuf::from(value)),
            "timing" => {
                o.timing = Some(value.parse().map_err(|_| {
                    CliError::Usage(format!(
                        "{origin}:{}: timing must be true or false",
                        lineno + 1
                    ))
                })?)
            }
            other => {
                return Err(CliError::Usage(format!(
                    "{origin}:{}: unknown key '{other}'",
                    lineno + 1
                )))
            }
        }
    }
    Ok(o)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_forms() {
        assert_eq!(GridSpec::parse("4").unwrap().values(), &[4]);
        assert_eq!(GridSpec::parse("2:5").unwrap().values(), &[2, 3, 4, 5]);
        assert_eq!(GridSpec::parse("1,2,4,8").unwrap().values(), &[1, 2, 4, 8]);
        assert!(GridSpec::parse("5:2").is_err());
        assert!(GridSpec::parse("x").is_err());
        assert!(GridSpec::parse("4").unwrap().scalar("nq").is_ok());
        assert!(GridSpec::parse("2:6").unwrap().scalar("nq").is_err());
    }

    #[test]
    fn defaults_validate() {
        ExperimentConfig::default().validate().unwrap();
    }

    #[test]
    fn validation_rejects_bad_values() {
        let c = ExperimentConfig {
            nq: GridSpec::single(9),
            ..Default::default()
        };
        assert!(c.validate().is_err());

        let c = ExperimentConfig {
            lr: 0.0,
            ..Default::default()
        };
        assert!(c.validate().is_err());

        let c = ExperimentConfig {
            digits: vec![1, 1],
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn file_then_flags_priority() {
        let file =
            parse_config_text("seed = 5\nepochs = 3\n# comment\n\nlr = 0.01\n", "test").unwrap();
        let flags = ConfigOverrides {
            epochs: Some(7),
            ..Default::default()
        };
        let mut config = ExperimentConfig::default();
        config.apply(&file).unwrap();
        config.apply(&flags).unwrap();
        assert_eq!(config.seed, 5);
        assert_eq!(config.epochs, 7);
        assert_eq!(config.lr, 0.01);
    }

    #[test]
    fn unknown_key_is_rejected() {
        assert!(parse_config_text("nope = 1\n", "test").is_err());
    }

    #[test]
    fn dump_round_trips() {
        let config = ExperimentConfig {
            model: ModelKind::Ensemble,
            topology: TopologyKind::AllPairs,
            nq: GridSpec::parse("2:6").unwrap(),
            digits: vec![0, 1, 2],
            lr: 0.005,
            pre_hidden: vec![32, 16],
            data_dir: Some(PathBuf::from("/tmp/mnist")),
            timing: true,
            ..Default::default()
        };

        let dumped = config.dump();
        let parsed = parse_config_text(&dumped, "dump").unwrap();
        let mut round = ExperimentConfig::default();
        round.apply(&parsed).unwrap();
        assert_eq!(round, config);
    }
}
