//! Experiment configuration: a plain-text `key = value` format with `#`
//! comments. Unknown keys are errors, not warnings, so typos cannot silently
//! fall back to defaults. `parse(serialize(c))` reproduces `c` exactly.

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::aggregation::WeightingScheme;
use crate::error::{Error, Result};
use crate::extraction::{Capacity, OverlapStride, Scheme};

/// Where training and test data come from.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Synthetic {
        classes: usize,
        features: usize,
        train_per_class: usize,
        test_per_class: usize,
        spread: f64,
        data_seed: u64,
    },
    File {
        path: PathBuf,
        /// Fraction of examples held out for the test set.
        test_split: f64,
    },
}

/// How shards are assigned to clients.
#[derive(Debug, Clone, PartialEq)]
pub enum PartitionKind {
    /// Each client holds exactly this many distinct labels.
    Labels(usize),
    /// Per-client class proportions drawn from Dirichlet(alpha).
    Dirichlet(f64),
}

/// Everything a run needs. See the README for the full key reference.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scheme: Scheme,
    pub overlap: f64,
    /// Client capacities and their probabilities, parallel lists.
    pub capacities: Vec<f64>,
    pub capacity_probs: Vec<f64>,
    pub clients: usize,
    pub cohort_size: usize,
    pub rounds: u64,
    pub initial_lr: f64,
    pub decay_milestones: Vec<u64>,
    pub decay_factor: f64,
    pub local_epochs: u32,
    pub batch_size: usize,
    pub momentum: f64,
    pub weight_decay: f64,
    /// Server hidden widths are `gamma` times the client model's.
    pub gamma: usize,
    pub weighting: WeightingScheme,
    pub seeds: Vec<u64>,
    pub eval_interval: u64,
    /// Hidden widths of the full-capacity *client* model.
    pub hidden_widths: Vec<usize>,
    pub data: DataSource,
    pub partition: PartitionKind,
    pub out_dir: Option<PathBuf>,
    pub parallel: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            scheme: Scheme::Rolling,
            overlap: 1.0,
            capacities: vec![1.0, 0.5, 0.25, 0.125, 0.0625],
            capacity_probs: vec![0.2; 5],
            clients: 100,
            cohort_size: 10,
            rounds: 300,
            initial_lr: 0.1,
            decay_milestones: vec![],
            decay_factor: 0.1,
            local_epochs: 1,
            batch_size: 10,
            momentum: 0.9,
            weight_decay: 5e-4,
            gamma: 1,
            weighting: WeightingScheme::Uniform,
            seeds: vec![0],
            eval_interval: 25,
            hidden_widths: vec![32],
            data: DataSource::Synthetic {
                classes: 10,
                features: 16,
                train_per_class: 100,
                test_per_class: 50,
                spread: 1.0,
                data_seed: 1,
            },
            partition: PartitionKind::Labels(2),
            out_dir: None,
            parallel: false,
        }
    }
}

fn fmt_f64(v: f64) -> String {
    // `{:?}` prints the shortest representation that round-trips.
    format!("{v:?}")
}

fn fmt_list<T: std::fmt::Display>(items: &[T]) -> String {
    items
        .iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn fmt_f64_list(items: &[f64]) -> String {
    items
        .iter()
        .map(|&i| fmt_f64(i))
        .collect::<Vec<_>>()
        .join(",")
}

impl ExperimentConfig {
    /// Canonical `key = value` serialisation; `parse` inverts it exactly.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let mut push = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        push("scheme", self.scheme.to_string());
        push("overlap", fmt_f64(self.overlap));
        push("capacities", fmt_f64_list(&self.capacities));
        push("capacity_probs", fmt_f64_list(&self.capacity_probs));
        push("clients", self.clients.to_string());
        push("cohort_size", self.cohort_size.to_string());
        push("rounds", self.rounds.to_string());
        push("initial_lr", fmt_f64(self.initial_lr));
        push("decay_milestones", fmt_list(&self.decay_milestones));
        push("decay_factor", fmt_f64(self.decay_factor));
        push("local_epochs", self.local_epochs.to_string());
        push("batch_size", self.batch_size.to_string());
        push("momentum", fmt_f64(self.momentum));
        push("weight_decay", fmt_f64(self.weight_decay));
        push("gamma", self.gamma.to_string());
        push("weighting", self.weighting.to_string());
        push("seeds", fmt_list(&self.seeds));
        push("eval_interval", self.eval_interval.to_string());
        push("hidden_widths", fmt_list(&self.hidden_widths));
        match &self.data {
            DataSource::Synthetic {
                classes,
                features,
                train_per_class,
                test_per_class,
                spread,
                data_seed,
            } => {
                push("data", "synthetic".into());
                push("classes", classes.to_string());
                push("features", features.to_string());
                push("train_per_class", train_per_class.to_string());
                push("test_per_class", test_per_class.to_string());
                push("spread", fmt_f64(*spread));
                push("data_seed", data_seed.to_string());
            }
            DataSource::File { path, test_split } => {
                push("data", "file".into());
                push("dataset_path", path.display().to_string());
                push("test_split", fmt_f64(*test_split));
            }
        }
        match &self.partition {
            PartitionKind::Labels(l) => {
                push("partition", "labels".into());
                push("labels_per_client", l.to_string());
            }
            PartitionKind::Dirichlet(a) => {
                push("partition", "dirichlet".into());
                push("dirichlet_alpha", fmt_f64(*a));
            }
        }
        if let Some(dir) = &self.out_dir {
            push("out", dir.display().to_string());
        }
        push("parallel", self.parallel.to_string());
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut kv: BTreeMap<String, String> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::MalformedLine {
                    line: lineno + 1,
                    text: raw.to_string(),
                });
            };
            let key = key.trim().to_string();
            if kv.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(Error::field(key, "duplicate key"));
            }
        }
        Self::from_map(kv)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    fn from_map(mut kv: BTreeMap<String, String>) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        let mut take = |k: &str| kv.remove(k);

        if let Some(v) = take("scheme") {
            cfg.scheme = v.parse()?;
        }
        if let Some(v) = take("overlap") {
            cfg.overlap = parse_num(&v, "overlap")?;
        }
        if let Some(v) = take("capacities") {
            cfg.capacities = parse_list(&v, "capacities")?;
        }
        if let Some(v) = take("capacity_probs") {
            cfg.capacity_probs = parse_list(&v, "capacity_probs")?;
        }
        if let Some(v) = take("rho") {
            // Two-point shortcut: fraction rho of clients at full capacity,
            // the rest at 1/16.
            let rho: f64 = parse_num(&v, "rho")?;
            if !(0.0..=1.0).contains(&rho) {
                return Err(Error::field("rho", "must be in [0, 1]"));
            }
            cfg.capacities = vec![1.0, 0.0625];
            cfg.capacity_probs = vec![rho, 1.0 - rho];
        }
        if let Some(v) = take("clients") {
            cfg.clients = parse_num(&v, "clients")?;
        }
        if let Some(v) = take("cohort_size") {
            cfg.cohort_size = parse_num(&v, "cohort_size")?;
        }
        if let Some(v) = take("rounds") {
            cfg.rounds = parse_num(&v, "rounds")?;
        }
        if let Some(v) = take("initial_lr") {
            cfg.initial_lr = parse_num(&v, "initial_lr")?;
        }
        if let Some(v) = take("decay_milestones") {
            cfg.decay_milestones = parse_list(&v, "decay_milestones")?;
        }
        if let Some(v) = take("decay_factor") {
            cfg.decay_factor = parse_num(&v, "decay_factor")?;
        }
        if let Some(v) = take("local_epochs") {
            cfg.local_epochs = parse_num(&v, "local_epochs")?;
        }
        if let Some(v) = take("batch_size") {
            cfg.batch_size = parse_num(&v, "batch_size")?;
        }
        if let Some(v) = take("momentum") {
            cfg.momentum = parse_num(&v, "momentum")?;
        }
        if let Some(v) = take("weight_decay") {
            cfg.weight_decay = parse_num(&v, "weight_decay")?;
        }
        if let Some(v) = take("gamma") {
            cfg.gamma = parse_num(&v, "gamma")?;
        }
        if let Some(v) = take("weighting") {
            cfg.weighting = v.parse()?;
        }
        if let Some(v) = take("seeds") {
            cfg.seeds = parse_list(&v, "seeds")?;
        }
        if let Some(v) = take("eval_interval") {
            cfg.eval_interval = parse_num(&v, "eval_interval")?;
        }
        if let Some(v) = take("hidden_widths") {
            cfg.hidden_widths = parse_list(&v, "hidden_widths")?;
        }

        let data_kind = take("data").unwrap_or_else(|| "synthetic".into());
        cfg.data = match data_kind.as_str() {
            "synthetic" => {
                let defaults = match ExperimentConfig::default().data {
                    DataSource::Synthetic {
                        classes,
                        features,
                        train_per_class,
                        test_per_class,
                        spread,
                        data_seed,
                    } => (
                        classes,
                        features,
                        train_per_class,
                        test_per_class,
                        spread,
                        data_seed,
                    ),
                    _ => unreachable!(),
                };
                DataSource::Synthetic {
                    classes: take("classes")
                        .map(|v| parse_num(&v, "classes"))
                        .transpose()?
                        .unwrap_or(defaults.0),
                    features: take("features")
                        .map(|v| parse_num(&v, "features"))
                        .transpose()?
                        .unwrap_or(defaults.1),
                    train_per_class: take("train_per_class")
                        .map(|v| parse_num(&v, "train_per_class"))
                        .transpose()?
                        .unwrap_or(defaults.2),
                    test_per_class: take("test_per_class")
                        .map(|v| parse_num(&v, "test_per_class"))
                        .transpose()?
                        .unwrap_or(defaults.3),
                    spread: take("spread")
                        .map(|v| parse_num(&v, "spread"))
                        .transpose()?
                        .unwrap_or(defaults.4),
                    data_seed: take("data_seed")
                        .map(|v| parse_num(&v, "data_seed"))
                        .transpose()?
                        .unwrap_or(defaults.5),
                }
            }
            "file" => {
                let path = take("dataset_path")
                    .ok_or_else(|| Error::field("dataset_path", "required when data = file"))?;
                DataSource::File {
                    path: PathBuf::from(path),
                    test_split: take("test_split")
                        .map(|v| parse_num(&v, "test_split"))
                        .transpose()?
                        .unwrap_or(0.2),
                }
            }
            other => return Err(Error::field("data", format!("unknown source `{other}`"))),
        };

        let part_kind = take("partition").unwrap_or_else(|| "labels".into());
        cfg.partition = match part_kind.as_str() {
            "labels" => PartitionKind::Labels(
                take("labels_per_client")
                    .map(|v| parse_num(&v, "labels_per_client"))
                    .transpose()?
                    .unwrap_or(2),
            ),
            "dirichlet" => PartitionKind::Dirichlet(
                take("dirichlet_alpha")
                    .map(|v| parse_num(&v, "dirichlet_alpha"))
                    .transpose()?
                    .unwrap_or(0.1),
            ),
            other => {
                return Err(Error::field(
                    "partition",
                    format!("unknown partitioner `{other}`"),
                ))
            }
        };

        if let Some(v) = take("out") {
            cfg.out_dir = Some(PathBuf::from(v));
        }
        if let Some(v) = take("parallel") {
            cfg.parallel = v
                .parse()
                .map_err(|_| Error::field("parallel", format!("`{v}` is not true/false")))?;
        }

        if let Some(unknown) = kv.keys().next() {
            return Err(Error::UnknownKey(unknown.clone()));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Cross-field validation. Returns human-readable warnings for legal but
    /// suspicious setups (e.g. static extraction can never cover a server
    /// larger than every client).
    pub fn validate(&self) -> Result<Vec<String>> {
        let mut warnings = Vec::new();
        if self.capacities.is_empty() {
            return Err(Error::field("capacities", "must not be empty"));
        }
        if self.capacities.len() != self.capacity_probs.len() {
            return Err(Error::field(
                "capacity_probs",
                format!(
                    "{} probs for {} capacities",
                    self.capacity_probs.len(),
                    self.capacities.len()
                ),
            ));
        }
        for &c in &self.capacities {
            Capacity::new(c)?;
        }
        if self.capacity_probs.iter().any(|&p| p < 0.0) {
            return Err(Error::field("capacity_probs", "probabilities must be >= 0"));
        }
        let prob_sum: f64 = self.capacity_probs.iter().sum();
        if (prob_sum - 1.0).abs() > 1e-9 {
            return Err(Error::field(
                "capacity_probs",
                format!("probabilities sum to {prob_sum}, not 1"),
            ));
        }
        OverlapStride::new(self.overlap)?;
        if self.clients == 0 {
            return Err(Error::field("clients", "must be >= 1"));
        }
        if self.cohort_size == 0 || self.cohort_size > self.clients {
            return Err(Error::field(
                "cohort_size",
                format!(
                    "must be in [1, clients]; got {} with {} clients",
                    self.cohort_size, self.clients
                ),
            ));
        }
        if !(self.initial_lr >= 0.0 && self.initial_lr.is_finite()) {
            return Err(Error::field("initial_lr", "must be finite and >= 0"));
        }
        if !(self.decay_factor > 0.0 && self.decay_factor <= 1.0) {
            return Err(Error::field("decay_factor", "must be in (0, 1]"));
        }
        if !self.decay_milestones.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::field(
                "decay_milestones",
                "must be strictly increasing",
            ));
        }
        if let Some(&last) = self.decay_milestones.last() {
            if self.rounds > 0 && last >= self.rounds {
                return Err(Error::field(
                    "decay_milestones",
                    "milestones must be < rounds",
                ));
            }
        }
        if self.local_epochs == 0 {
            return Err(Error::field("local_epochs", "must be >= 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::field("batch_size", "must be >= 1"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::field("momentum", "must be in [0, 1)"));
        }
        if self.weight_decay < 0.0 {
            return Err(Error::field("weight_decay", "must be >= 0"));
        }
        if self.gamma == 0 {
            return Err(Error::field("gamma", "must be >= 1"));
        }
        if self.eval_interval == 0 {
            return Err(Error::field("eval_interval", "must be >= 1"));
        }
        if self.hidden_widths.is_empty() || self.hidden_widths.contains(&0) {
            return Err(Error::field(
                "hidden_widths",
                "need at least one positive width",
            ));
        }
        if self.seeds.is_empty() {
            return Err(Error::field("seeds", "need at least one seed"));
        }

        // Every capacity must select at least one node in every server layer.
        for &beta in &self.capacities {
            let effective = beta / self.gamma as f64;
            for &w in &self.hidden_widths {
                let server_nodes = w * self.gamma;
                if (effective * server_nodes as f64).floor() < 1.0 {
                    return Err(Error::field(
                        "capacities",
                        format!("capacity {beta} selects zero nodes in a layer of width {w}"),
                    ));
                }
            }
        }

        match &self.data {
            DataSource::Synthetic {
                classes,
                features,
                train_per_class,
                test_per_class,
                spread,
                ..
            } => {
                if *classes < 2 {
                    return Err(Error::field("classes", "need at least 2"));
                }
                if *features < 2 {
                    return Err(Error::field("features", "need at least 2"));
                }
                if *train_per_class == 0 || *test_per_class == 0 {
                    return Err(Error::field(
                        "train_per_class",
                        "per-class counts must be >= 1",
                    ));
                }
                if *spread < 0.0 {
                    return Err(Error::field("spread", "must be >= 0"));
                }
            }
            DataSource::File { test_split, .. } => {
                if !(*test_split > 0.0 && *test_split < 1.0) {
                    return Err(Error::field("test_split", "must be in (0, 1)"));
                }
            }
        }
        match &self.partition {
            PartitionKind::Labels(l) => {
                if *l == 0 {
                    return Err(Error::field("labels_per_client", "must be >= 1"));
                }
            }
            PartitionKind::Dirichlet(a) => {
                if !a.is_finite() || *a <= 0.0 {
                    return Err(Error::field("dirichlet_alpha", "must be > 0"));
                }
            }
        }

        if self.scheme == Scheme::Static && self.gamma > 1 {
            warnings.push(
                "static extraction with gamma > 1: server nodes beyond the largest client window can never be trained"
                    .to_string(),
            );
        }
        Ok(warnings)
    }
}

fn parse_num<T: std::str::FromStr>(v: &str, field: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.trim()
        .parse()
        .map_err(|e| Error::field(field, format!("`{v}`: {e}")))
}

fn parse_list<T: std::str::FromStr>(v: &str, field: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    let v = v.trim();
    if v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|item| parse_num(item, field)).collect()
}
