//! Synthetic dataset generation and non-IID partitioning.
//!
//! The synthetic data is a Gaussian mixture: class `c` is an isotropic blob
//! around a mean placed deterministically on a circle of radius 5 in the
//! first two feature dimensions (remaining dimensions are pure noise). The
//! spread parameter controls class overlap; spread 0 collapses every class
//! onto its mean.
//!
//! Two partitioners produce client shards with controlled label skew: a
//! hard L-labels-per-client rule and Dirichlet-proportion sampling.

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::Batch;
use crate::rng::{stream, tag};

/// Radius of the circle the class means sit on; two classes end up exactly
/// 10 apart.
pub const MEAN_RADIUS: f64 = 5.0;

/// A labelled dataset held in memory.
#[derive(Debug, Clone)]
pub struct Dataset {
    features: Matrix,
    labels: Vec<u32>,
    num_classes: usize,
}

impl Dataset {
    pub fn new(features: Matrix, labels: Vec<u32>, num_classes: usize) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} feature rows vs {} labels",
                features.rows(),
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l as usize >= num_classes) {
            return Err(Error::field(
                "labels",
                format!("label {bad} >= {num_classes} classes"),
            ));
        }
        Ok(Dataset {
            features,
            labels,
            num_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    /// Copy the named examples into a batch.
    pub fn batch_of(&self, indices: &[usize]) -> Result<Batch> {
        let mut m = Matrix::zeros(indices.len(), self.feature_dim());
        let mut labels = Vec::with_capacity(indices.len());
        for (row, &idx) in indices.iter().enumerate() {
            if idx >= self.len() {
                return Err(Error::IndexOutOfRange {
                    index: idx,
                    nodes: self.len(),
                });
            }
            m.row_mut(row).copy_from_slice(self.features.row(idx));
            labels.push(self.labels[idx]);
        }
        Batch::new(m, labels, self.num_classes)
    }

    pub fn label_histogram(&self) -> Vec<usize> {
        let mut hist = vec![0usize; self.num_classes];
        for &l in &self.labels {
            hist[l as usize] += 1;
        }
        hist
    }

    /// Share of the most frequent label; the accuracy of the best
    /// constant-output classifier.
    pub fn majority_share(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let max = self.label_histogram().into_iter().max().unwrap_or(0);
        max as f64 / self.len() as f64
    }
}

/// Per-client index lists into a dataset: disjoint, every client non-empty.
#[derive(Debug, Clone)]
pub struct PartitionPlan {
    shards: Vec<Vec<usize>>,
}

impl PartitionPlan {
    pub fn new(shards: Vec<Vec<usize>>, dataset_len: usize) -> Result<Self> {
        let mut seen = vec![false; dataset_len];
        for (client, shard) in shards.iter().enumerate() {
            if shard.is_empty() {
                return Err(Error::EmptyShard(client as u64));
            }
            for &i in shard {
                if i >= dataset_len {
                    return Err(Error::IndexOutOfRange {
                        index: i,
                        nodes: dataset_len,
                    });
                }
                if seen[i] {
                    return Err(Error::Invalid(format!(
                        "sample {i} assigned to two clients"
                    )));
                }
                seen[i] = true;
            }
        }
        Ok(PartitionPlan { shards })
    }

    pub fn num_clients(&self) -> usize {
        self.shards.len()
    }

    pub fn shard(&self, client: usize) -> &[usize] {
        &self.shards[client]
    }

    pub fn shards(&self) -> &[Vec<usize>] {
        &self.shards
    }

    pub fn shard_sizes(&self) -> Vec<usize> {
        self.shards.iter().map(Vec::len).collect()
    }

    /// Distinct labels present in each client's shard.
    pub fn labels_per_client(&self, ds: &Dataset) -> Vec<usize> {
        self.shards
            .iter()
            .map(|shard| {
                let mut seen = vec![false; ds.num_classes()];
                for &i in shard {
                    seen[ds.labels()[i] as usize] = true;
                }
                seen.into_iter().filter(|&s| s).count()
            })
            .collect()
    }

    /// Per-client label histograms (clients x classes).
    pub fn label_client_counts(&self, ds: &Dataset) -> Vec<Vec<usize>> {
        self.shards
            .iter()
            .map(|shard| {
                let mut hist = vec![0usize; ds.num_classes()];
                for &i in shard {
                    hist[ds.labels()[i] as usize] += 1;
                }
                hist
            })
            .collect()
    }
}

/// Balanced Gaussian-mixture dataset: `per_class` examples for each of
/// `classes` labels, deterministic per seed.
pub fn gen_synthetic(
    classes: usize,
    dims: usize,
    per_class: usize,
    spread: f64,
    seed: u64,
) -> Result<Dataset> {
    if classes < 2 {
        return Err(Error::field("classes", "need at least 2 classes"));
    }
    if dims < 2 {
        return Err(Error::field("features", "need at least 2 dimensions"));
    }
    if per_class == 0 {
        return Err(Error::field("per_class", "must be >= 1"));
    }
    if spread < 0.0 || !spread.is_finite() {
        return Err(Error::field("spread", "must be finite and >= 0"));
    }
    let mut rng = stream(seed, &[tag::DATA]);
    let total = classes * per_class;
    let mut features = Matrix::zeros(total, dims);
    let mut labels = Vec::with_capacity(total);
    for c in 0..classes {
        let angle = 2.0 * std::f64::consts::PI * c as f64 / classes as f64;
        let (mx, my) = (MEAN_RADIUS * angle.cos(), MEAN_RADIUS * angle.sin());
        for e in 0..per_class {
            let row = features.row_mut(c * per_class + e);
            for v in row.iter_mut() {
                let noise: f64 = StandardNormal.sample(&mut rng);
                *v = spread * noise;
            }
            row[0] += mx;
            row[1] += my;
            labels.push(c as u32);
        }
    }
    Dataset::new(features, labels, classes)
}

/// Split each label's samples evenly among the clients holding that label.
fn deal_samples(
    ds: &Dataset,
    holders_per_label: &[Vec<usize>],
    n_clients: usize,
    seed: u64,
) -> Vec<Vec<usize>> {
    let mut shards = vec![Vec::new(); n_clients];
    for (label, holders) in holders_per_label.iter().enumerate() {
        if holders.is_empty() {
            continue;
        }
        let mut pool: Vec<usize> = (0..ds.len())
            .filter(|&i| ds.labels()[i] as usize == label)
            .collect();
        let mut rng = stream(seed, &[tag::PARTITION, 2, label as u64]);
        pool.shuffle(&mut rng);
        // Near-equal consecutive chunks; the first `extra` holders get one more.
        let base = pool.len() / holders.len();
        let extra = pool.len() % holders.len();
        let mut at = 0;
        for (h, &client) in holders.iter().enumerate() {
            let take = base + usize::from(h < extra);
            shards[client].extend_from_slice(&pool[at..at + take]);
            at += take;
        }
    }
    shards
}

/// Restrict each client to `labels_per_client` distinct labels, with the
/// label-to-client assignment balanced so every label lands on roughly
/// `N*L/C` clients, and each label's samples split evenly among its holders.
pub fn partition_by_labels(
    ds: &Dataset,
    n_clients: usize,
    labels_per_client: usize,
    seed: u64,
) -> Result<PartitionPlan> {
    let classes = ds.num_classes();
    if labels_per_client == 0 {
        return Err(Error::field("labels_per_client", "must be >= 1"));
    }
    if labels_per_client > classes {
        return Err(Error::field(
            "labels_per_client",
            format!("{labels_per_client} exceeds {classes} classes"),
        ));
    }
    if n_clients == 0 {
        return Err(Error::field("clients", "must be >= 1"));
    }
    let hist = ds.label_histogram();
    if hist.contains(&0) {
        return Err(Error::Invalid(
            "every class needs at least one sample".into(),
        ));
    }

    // Token pool: label c appears with quota from largest-remainder over a
    // uniform target of N*L/C tokens each.
    let total_tokens = n_clients * labels_per_client;
    let quotas = largest_remainder(&vec![1.0; classes], total_tokens);

    'attempt: for attempt in 0..100u64 {
        let mut tokens: Vec<usize> = Vec::with_capacity(total_tokens);
        for (label, &q) in quotas.iter().enumerate() {
            tokens.extend(std::iter::repeat_n(label, q));
        }
        let mut rng = stream(seed, &[tag::PARTITION, 1, attempt]);
        tokens.shuffle(&mut rng);

        let mut holders_per_label: Vec<Vec<usize>> = vec![Vec::new(); classes];
        for client in 0..n_clients {
            let mut held: Vec<usize> = Vec::with_capacity(labels_per_client);
            for _ in 0..labels_per_client {
                match tokens.iter().position(|l| !held.contains(l)) {
                    Some(pos) => {
                        let label = tokens.swap_remove(pos);
                        held.push(label);
                        holders_per_label[label].push(client);
                    }
                    None => continue 'attempt, // dead end; reshuffle and retry
                }
            }
        }
        for holders in &mut holders_per_label {
            holders.sort_unstable();
        }
        let shards = deal_samples(ds, &holders_per_label, n_clients, seed);
        if shards.iter().any(Vec::is_empty) {
            continue 'attempt;
        }
        return PartitionPlan::new(shards, ds.len());
    }
    Err(Error::Invalid(format!(
        "could not realise {labels_per_client} labels per client over {n_clients} clients; try fewer clients or more data"
    )))
}

/// Largest-remainder apportionment of `total` units proportional to
/// `weights`. Ties break toward the larger remainder, then the lower index.
pub(crate) fn largest_remainder(weights: &[f64], total: usize) -> Vec<usize> {
    let wsum: f64 = weights.iter().sum();
    if wsum <= 0.0 {
        let mut out = vec![0usize; weights.len()];
        if !weights.is_empty() {
            // Degenerate weights: spread evenly.
            for (i, o) in out.iter_mut().enumerate() {
                *o = total / weights.len() + usize::from(i < total % weights.len());
            }
        }
        return out;
    }
    let exact: Vec<f64> = weights.iter().map(|w| w / wsum * total as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|&e| e.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    for &i in order.iter().take(total.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

/// Per-client class proportions drawn from a symmetric Dirichlet(alpha);
/// each class's sample pool is then split across clients proportionally to
/// the clients' appetite for that class. Empty shards trigger a redraw.
pub fn partition_dirichlet(
    ds: &Dataset,
    n_clients: usize,
    alpha: f64,
    seed: u64,
) -> Result<PartitionPlan> {
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::field("dirichlet_alpha", "must be finite and > 0"));
    }
    if n_clients == 0 {
        return Err(Error::field("clients", "must be >= 1"));
    }
    let classes = ds.num_classes();
    let gamma =
        Gamma::new(alpha, 1.0).map_err(|e| Error::field("dirichlet_alpha", e.to_string()))?;

    for attempt in 0..100u64 {
        let mut rng = stream(seed, &[tag::PARTITION, 3, attempt]);
        // proportions[n][c]: client n's appetite for class c.
        let proportions: Vec<Vec<f64>> = (0..n_clients)
            .map(|_| {
                let draws: Vec<f64> = (0..classes).map(|_| gamma.sample(&mut rng)).collect();
                let sum: f64 = draws.iter().sum();
                if sum > 0.0 {
                    draws.into_iter().map(|d| d / sum).collect()
                } else {
                    vec![1.0 / classes as f64; classes]
                }
            })
            .collect();

        let mut shards: Vec<Vec<usize>> = vec![Vec::new(); n_clients];
        for c in 0..classes {
            let mut pool: Vec<usize> = (0..ds.len())
                .filter(|&i| ds.labels()[i] as usize == c)
                .collect();
            let mut pool_rng = stream(seed, &[tag::PARTITION, 4, attempt, c as u64]);
            pool.shuffle(&mut pool_rng);
            let weights: Vec<f64> = proportions.iter().map(|p| p[c]).collect();
            let counts = largest_remainder(&weights, pool.len());
            let mut at = 0;
            for (client, &take) in counts.iter().enumerate() {
                shards[client].extend_from_slice(&pool[at..at + take]);
                at += take;
            }
        }
        if shards.iter().all(|s| !s.is_empty()) {
            return PartitionPlan::new(shards, ds.len());
        }
    }
    Err(Error::Invalid(
        "dirichlet partition kept producing empty shards; alpha may be too extreme for this client count".into(),
    ))
}
