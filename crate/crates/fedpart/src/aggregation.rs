//! Selective aggregation of heterogeneous sub-model updates.
//!
//! Each global parameter is replaced by the weighted mean of the values sent
//! by the clients whose sub-models contained it, and left untouched when no
//! client did. Client contributions are folded in ascending client id so the
//! result is independent of arrival (or thread) order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extraction::SubModel;
use crate::model::ParamStore;

/// One client's trained sub-model plus the bookkeeping the server needs.
#[derive(Debug, Clone)]
pub struct ClientUpdate {
    pub client_id: u64,
    pub sub: SubModel,
    /// Local sample count m_n.
    pub sample_count: usize,
    /// Number of parameters this client touched this round.
    pub update_mass: u64,
}

impl ClientUpdate {
    pub fn new(client_id: u64, sub: SubModel, sample_count: usize) -> Self {
        let update_mass = sub.param_count() as u64;
        ClientUpdate {
            client_id,
            sub,
            sample_count,
            update_mass,
        }
    }
}

/// Client weighting for the per-parameter mean. `Uniform` (no weighting) is
/// the default; the others exist for ablations and were not found to beat it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WeightingScheme {
    #[default]
    Uniform,
    /// Proportional to the sub-model's summed hidden width.
    ModelSize,
    /// Proportional to the number of parameters updated.
    ModelUpdate,
    /// Product of size and update weights.
    Hybrid,
    /// Proportional to the client's local sample count.
    SampleSize,
}

impl WeightingScheme {
    pub fn name(&self) -> &'static str {
        match self {
            WeightingScheme::Uniform => "uniform",
            WeightingScheme::ModelSize => "model_size",
            WeightingScheme::ModelUpdate => "model_update",
            WeightingScheme::Hybrid => "hybrid",
            WeightingScheme::SampleSize => "sample_size",
        }
    }
}

impl std::str::FromStr for WeightingScheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" | "none" => Ok(WeightingScheme::Uniform),
            "model_size" => Ok(WeightingScheme::ModelSize),
            "model_update" => Ok(WeightingScheme::ModelUpdate),
            "hybrid" => Ok(WeightingScheme::Hybrid),
            "sample_size" => Ok(WeightingScheme::SampleSize),
            other => Err(Error::field(
                "weighting",
                format!("unknown scheme `{other}`"),
            )),
        }
    }
}

impl std::fmt::Display for WeightingScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Unnormalised client weight; the per-parameter mean normalises per
/// parameter, so only ratios matter.
pub fn client_weight(update: &ClientUpdate, scheme: WeightingScheme) -> f64 {
    match scheme {
        WeightingScheme::Uniform => 1.0,
        WeightingScheme::ModelSize => update.sub.hidden_width_sum() as f64,
        WeightingScheme::ModelUpdate => update.update_mass as f64,
        WeightingScheme::Hybrid => update.sub.hidden_width_sum() as f64 * update.update_mass as f64,
        WeightingScheme::SampleSize => update.sample_count as f64,
    }
}

/// Per-round aggregation bookkeeping: how many clients updated each parameter
/// (canonical flat order) and how many parameters nobody touched.
#[derive(Debug, Clone)]
pub struct AggregationReport {
    pub updater_counts: Vec<u32>,
    pub untouched_params: usize,
}

impl AggregationReport {
    pub fn max_updaters(&self) -> u32 {
        self.updater_counts.iter().copied().max().unwrap_or(0)
    }
}

struct FlatLayout {
    /// (weights offset, bias offset) per connection.
    offsets: Vec<(usize, usize)>,
}

impl FlatLayout {
    fn of(store: &ParamStore) -> Self {
        let mut offsets = Vec::with_capacity(store.num_connections());
        let mut at = 0;
        for layer in store.layers() {
            let w = at;
            at += layer.weights.len();
            let b = at;
            at += layer.bias.len();
            offsets.push((w, b));
        }
        FlatLayout { offsets }
    }
}

/// Apply the selective weighted mean to every parameter the cohort touched,
/// with weights derived from `scheme`.
pub fn aggregate(
    global: &ParamStore,
    updates: &[ClientUpdate],
    scheme: WeightingScheme,
) -> Result<(ParamStore, AggregationReport)> {
    let weights: Vec<f64> = updates.iter().map(|u| client_weight(u, scheme)).collect();
    aggregate_weighted(global, updates, &weights)
}

/// Selective weighted mean with explicit per-update weights.
///
/// Summation runs in ascending `client_id` order, so permuting `updates`
/// (with their weights) cannot change the result.
pub fn aggregate_weighted(
    global: &ParamStore,
    updates: &[ClientUpdate],
    weights: &[f64],
) -> Result<(ParamStore, AggregationReport)> {
    if updates.len() != weights.len() {
        return Err(Error::Invalid("one weight per update required".into()));
    }
    if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
        return Err(Error::Invalid(format!(
            "client weights must be positive and finite, got {w}"
        )));
    }
    let total = global.param_count();
    let mut weighted_sum = vec![0.0f64; total];
    let mut weight_sum = vec![0.0f64; total];
    let mut counts = vec![0u32; total];
    let layout = FlatLayout::of(global);
    let n_conn = global.num_connections();
    let full_in: Vec<usize> = (0..global.layers()[0].weights.cols()).collect();
    let full_out: Vec<usize> = (0..global.layers()[n_conn - 1].weights.rows()).collect();

    let mut order: Vec<(&ClientUpdate, f64)> =
        updates.iter().zip(weights.iter().copied()).collect();
    order.sort_by_key(|(u, _)| u.client_id);

    for (update, w) in order {
        let sub = &update.sub;
        if sub.index_maps.len() != n_conn - 1 {
            return Err(Error::ShapeMismatch(format!(
                "client {} sent {} index maps for {} hidden layers",
                update.client_id,
                sub.index_maps.len(),
                n_conn - 1
            )));
        }
        for l in 0..n_conn {
            let src: &[usize] = if l == 0 {
                &full_in
            } else {
                sub.index_maps[l - 1].as_slice()
            };
            let dst: &[usize] = if l == n_conn - 1 {
                &full_out
            } else {
                sub.index_maps[l].as_slice()
            };
            let s = &sub.params.layers()[l];
            let g = &global.layers()[l];
            if s.weights.rows() != dst.len() || s.weights.cols() != src.len() {
                return Err(Error::ShapeMismatch(format!(
                    "client {} layer {l} is {}x{}, index maps say {}x{}",
                    update.client_id,
                    s.weights.rows(),
                    s.weights.cols(),
                    dst.len(),
                    src.len()
                )));
            }
            if let Some(&bad) = dst.iter().find(|&&i| i >= g.weights.rows()) {
                return Err(Error::IndexOutOfRange {
                    index: bad,
                    nodes: g.weights.rows(),
                });
            }
            if let Some(&bad) = src.iter().find(|&&i| i >= g.weights.cols()) {
                return Err(Error::IndexOutOfRange {
                    index: bad,
                    nodes: g.weights.cols(),
                });
            }
            let (w_off, b_off) = layout.offsets[l];
            let g_cols = g.weights.cols();
            for (a, &gr) in dst.iter().enumerate() {
                let srow = s.weights.row(a);
                for (b, &gc) in src.iter().enumerate() {
                    let flat = w_off + gr * g_cols + gc;
                    weighted_sum[flat] += w * srow[b];
                    weight_sum[flat] += w;
                    counts[flat] += 1;
                }
                let flat = b_off + gr;
                weighted_sum[flat] += w * s.bias[a];
                weight_sum[flat] += w;
                counts[flat] += 1;
            }
        }
    }

    let mut result = global.clone();
    let mut untouched = 0usize;
    for (l, layer) in result.layers_mut().iter_mut().enumerate() {
        let (w_off, b_off) = layout.offsets[l];
        for (i, v) in layer.weights.data_mut().iter_mut().enumerate() {
            let flat = w_off + i;
            if counts[flat] == 0 {
                untouched += 1;
            } else {
                *v = weighted_sum[flat] / weight_sum[flat];
            }
        }
        for (i, v) in layer.bias.iter_mut().enumerate() {
            let flat = b_off + i;
            if counts[flat] == 0 {
                untouched += 1;
            } else {
                *v = weighted_sum[flat] / weight_sum[flat];
            }
        }
    }
    Ok((
        result,
        AggregationReport {
            updater_counts: counts,
            untouched_params: untouched,
        },
    ))
}

/// Brute-force elementwise mean of full-capacity stores, folding in list
/// order. Oracle for the full-capacity reduction of [`aggregate`].
pub fn fedavg_reference(stores: &[ParamStore]) -> Result<ParamStore> {
    let first = stores
        .first()
        .ok_or(Error::Invalid("no stores to average".into()))?;
    for s in stores {
        if !s.same_shape(first) {
            return Err(Error::ShapeMismatch("stores differ in shape".into()));
        }
    }
    let mut sum = first.clone();
    for s in &stores[1..] {
        sum = sum.zip_map(s, |a, b| a + b)?;
    }
    let n = stores.len() as f64;
    sum.zip_map(&sum.clone(), |a, _| a / n)
}
