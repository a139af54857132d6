//! Sub-model extraction: per-layer node index sets for the rolling, random,
//! and static schemes, plus the slicing and scatter maps between a sub-model
//! and the global parameter store.
//!
//! Index sets are stored in ascending order regardless of how the scheme
//! walked the indices. Nothing downstream depends on intra-set order, and the
//! canonical order makes full-capacity extraction an identity slice for every
//! scheme, which keeps trajectories comparable across schemes at capacity 1.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::{LayerParams, ParamStore};
use crate::rng::{stream, tag};

/// Fraction of nodes a client keeps per hidden layer, in (0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Capacity(f64);

impl Capacity {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::field("capacity", format!("{beta} not in (0, 1]")));
        }
        Ok(Capacity(beta))
    }

    pub fn full() -> Self {
        Capacity(1.0)
    }

    pub fn value(&self) -> f64 {
        self.0
    }

    /// Nodes selected out of `k`: floor(beta * k). Zero is a config error.
    pub fn window_len(&self, k: usize) -> Result<usize> {
        let len = (self.0 * k as f64).floor() as usize;
        if len == 0 {
            return Err(Error::CapacityTooSmall {
                beta: self.0,
                nodes: k,
            });
        }
        Ok(len.min(k))
    }
}

/// Inter-round window overlap `r` in [0, 1]. At `r = 1` the window advances
/// by a single node per round; at `r = 0` consecutive windows are disjoint
/// (stride `1 + floor(beta * k)`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapStride(f64);

impl OverlapStride {
    pub fn new(r: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::field("overlap", format!("{r} not in [0, 1]")));
        }
        Ok(OverlapStride(r))
    }

    pub fn full() -> Self {
        OverlapStride(1.0)
    }

    pub fn value(&self) -> f64 {
        self.0
    }

    pub fn stride(&self, beta: Capacity, k: usize) -> u64 {
        1 + (beta.value() * (1.0 - self.0) * k as f64).floor() as u64
    }
}

/// Ordered distinct node indices of one layer, all in `[0, k)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexSet {
    indices: Vec<usize>,
}

impl IndexSet {
    /// Validates distinctness and range but preserves the given order, so a
    /// caller-supplied permutation maps sub-model rows to global rows as is.
    pub fn new(indices: Vec<usize>, k: usize) -> Result<Self> {
        let mut seen = vec![false; k];
        for &i in &indices {
            if i >= k {
                return Err(Error::IndexOutOfRange { index: i, nodes: k });
            }
            if seen[i] {
                return Err(Error::Invalid(format!("duplicate index {i} in index set")));
            }
            seen[i] = true;
        }
        Ok(IndexSet { indices })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.indices
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.contains(&i)
    }

    /// Set equality, ignoring order.
    pub fn same_set(&self, other: &IndexSet) -> bool {
        let mut a = self.indices.clone();
        let mut b = other.indices.clone();
        a.sort_unstable();
        b.sort_unstable();
        a == b
    }

    pub fn is_subset_of(&self, other: &IndexSet) -> bool {
        self.indices.iter().all(|i| other.contains(*i))
    }
}

/// Which extraction scheme a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Rolling,
    Random,
    Static,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Rolling => "rolling",
            Scheme::Random => "random",
            Scheme::Static => "static",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rolling" => Ok(Scheme::Rolling),
            "random" => Ok(Scheme::Random),
            "static" => Ok(Scheme::Static),
            other => Err(Error::field("scheme", format!("unknown scheme `{other}`"))),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Rolling window: start at `(round * stride) mod k`, take `floor(beta*k)`
/// consecutive indices with wraparound. At full overlap the stride is 1 and
/// the start reduces to `round mod k`.
pub fn rolling_index_set(
    k: usize,
    beta: Capacity,
    round: u64,
    overlap: OverlapStride,
) -> Result<IndexSet> {
    let len = beta.window_len(k)?;
    let stride = overlap.stride(beta, k);
    let start = ((round % k as u64) * (stride % k as u64) % k as u64) as usize;
    let mut indices: Vec<usize> = (0..len).map(|t| (start + t) % k).collect();
    indices.sort_unstable();
    Ok(IndexSet { indices })
}

/// Uniform sample of `floor(beta*k)` distinct indices, deterministic given
/// the stream.
pub fn random_index_set<R: Rng>(k: usize, beta: Capacity, rng: &mut R) -> Result<IndexSet> {
    let len = beta.window_len(k)?;
    let mut indices = rand::seq::index::sample(rng, k, len).into_vec();
    indices.sort_unstable();
    Ok(IndexSet { indices })
}

/// The fixed prefix window `{0, .., floor(beta*k)-1}`; independent of the
/// round.
pub fn static_index_set(k: usize, beta: Capacity) -> Result<IndexSet> {
    let len = beta.window_len(k)?;
    Ok(IndexSet {
        indices: (0..len).collect(),
    })
}

/// Extracted sub-model parameters plus the per-hidden-layer index maps needed
/// to scatter updates back into the global model.
#[derive(Debug, Clone)]
pub struct SubModel {
    pub params: ParamStore,
    pub index_maps: Vec<IndexSet>,
    pub capacity: Capacity,
}

impl SubModel {
    pub fn param_count(&self) -> usize {
        self.params.param_count()
    }

    /// Sum of hidden-layer widths, the model-size weighting basis.
    pub fn hidden_width_sum(&self) -> usize {
        self.index_maps.iter().map(IndexSet::len).sum()
    }
}

fn check_sets_against(global: &ParamStore, index_sets: &[IndexSet]) -> Result<()> {
    let hidden_layers = global.num_connections() - 1;
    if index_sets.len() != hidden_layers {
        return Err(Error::ShapeMismatch(format!(
            "{} index sets for {} hidden layers",
            index_sets.len(),
            hidden_layers
        )));
    }
    for (l, set) in index_sets.iter().enumerate() {
        let k = global.layers()[l].weights.rows();
        if let Some(&bad) = set.as_slice().iter().find(|&&i| i >= k) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                nodes: k,
            });
        }
        if set.is_empty() {
            return Err(Error::Invalid(format!(
                "empty index set for hidden layer {l}"
            )));
        }
    }
    Ok(())
}

/// Slice the global parameters down to a sub-model. Input features and output
/// nodes are never sliced; only hidden layers carry index sets. Values are
/// copied, the global store is untouched.
pub fn extract_submodel(
    global: &ParamStore,
    index_sets: &[IndexSet],
    capacity: Capacity,
) -> Result<SubModel> {
    check_sets_against(global, index_sets)?;
    let n_conn = global.num_connections();
    let full_in: Vec<usize> = (0..global.layers()[0].weights.cols()).collect();
    let full_out: Vec<usize> = (0..global.layers()[n_conn - 1].weights.rows()).collect();

    let mut layers = Vec::with_capacity(n_conn);
    for l in 0..n_conn {
        let src: &[usize] = if l == 0 {
            &full_in
        } else {
            index_sets[l - 1].as_slice()
        };
        let dst: &[usize] = if l == n_conn - 1 {
            &full_out
        } else {
            index_sets[l].as_slice()
        };
        let g = &global.layers()[l];
        let mut weights = Matrix::zeros(dst.len(), src.len());
        let mut bias = Vec::with_capacity(dst.len());
        for (a, &gr) in dst.iter().enumerate() {
            let grow = g.weights.row(gr);
            let out = weights.row_mut(a);
            for (b, &gc) in src.iter().enumerate() {
                out[b] = grow[gc];
            }
            bias.push(g.bias[gr]);
        }
        layers.push(LayerParams { weights, bias });
    }
    Ok(SubModel {
        params: ParamStore::from_layers(layers)?,
        index_maps: index_sets.to_vec(),
        capacity,
    })
}

/// Write a sub-model's values back into the global store at the positions its
/// index maps name. Inverse of [`extract_submodel`] when nothing changed.
pub fn scatter_submodel(global: &mut ParamStore, sub: &SubModel) -> Result<()> {
    check_sets_against(global, &sub.index_maps)?;
    let n_conn = global.num_connections();
    if sub.params.num_connections() != n_conn {
        return Err(Error::ShapeMismatch(
            "sub-model connection count differs".into(),
        ));
    }
    let full_in: Vec<usize> = (0..global.layers()[0].weights.cols()).collect();
    let full_out: Vec<usize> = (0..global.layers()[n_conn - 1].weights.rows()).collect();
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
        if s.weights.rows() != dst.len() || s.weights.cols() != src.len() {
            return Err(Error::ShapeMismatch(format!(
                "sub-model layer {l} is {}x{}, index maps say {}x{}",
                s.weights.rows(),
                s.weights.cols(),
                dst.len(),
                src.len()
            )));
        }
        let g = &mut global.layers_mut()[l];
        for (a, &gr) in dst.iter().enumerate() {
            let srow = s.weights.row(a);
            for (b, &gc) in src.iter().enumerate() {
                g.weights.set(gr, gc, srow[b]);
            }
            g.bias[gr] = s.bias[a];
        }
    }
    Ok(())
}

/// How many of `rounds` rounds each of the `k` indices would be selected by a
/// scheme. Pure instrumentation for evenness comparisons.
pub fn coverage_counts(
    scheme: Scheme,
    k: usize,
    beta: Capacity,
    rounds: u64,
    overlap: OverlapStride,
    seed: u64,
) -> Result<Vec<u64>> {
    let mut counts = vec![0u64; k];
    for j in 0..rounds {
        let set = match scheme {
            Scheme::Rolling => rolling_index_set(k, beta, j, overlap)?,
            Scheme::Static => static_index_set(k, beta)?,
            Scheme::Random => {
                let mut rng = stream(seed, &[tag::COVERAGE, j]);
                random_index_set(k, beta, &mut rng)?
            }
        };
        for &i in set.as_slice() {
            counts[i] += 1;
        }
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{init_params, ModelSpec};
    use proptest::prelude::*;

    fn cap(beta: f64) -> Capacity {
        Capacity::new(beta).unwrap()
    }

    #[test]
    fn rolling_first_round_is_prefix() {
        let s = rolling_index_set(5, cap(0.6), 0, OverlapStride::full()).unwrap();
        assert_eq!(s.as_slice(), &[0, 1, 2]);
    }

    #[test]
    fn rolling_wraps_around() {
        let s = rolling_index_set(5, cap(0.6), 4, OverlapStride::full()).unwrap();
        assert!(s.same_set(&IndexSet::new(vec![4, 0, 1], 5).unwrap()));
    }

    #[test]
    fn rolling_full_capacity_is_whole_layer() {
        let s = rolling_index_set(5, cap(1.0), 3, OverlapStride::full()).unwrap();
        assert_eq!(s.as_slice(), &[0, 1, 2, 3, 4]);
    }

    #[test]
    fn rolling_stride_at_zero_overlap() {
        // stride = 1 + floor(0.5 * 1.0 * 8) = 5; round 1 starts at 5.
        let s = rolling_index_set(8, cap(0.5), 1, OverlapStride::new(0.0).unwrap()).unwrap();
        assert!(s.same_set(&IndexSet::new(vec![5, 6, 7, 0], 8).unwrap()));
    }

    #[test]
    fn rolling_rejects_zero_window() {
        assert!(matches!(
            rolling_index_set(10, cap(0.05), 0, OverlapStride::full()),
            Err(Error::CapacityTooSmall { .. })
        ));
    }

    #[test]
    fn random_full_capacity_is_exhaustive() {
        let mut rng = stream(1, &[0]);
        let s = random_index_set(4, cap(1.0), &mut rng).unwrap();
        assert_eq!(s.as_slice(), &[0, 1, 2, 3]);
    }

    #[test]
    fn random_size_and_range() {
        let mut rng = stream(2, &[0]);
        let s = random_index_set(10, cap(0.3), &mut rng).unwrap();
        assert_eq!(s.len(), 3);
        assert!(s.as_slice().iter().all(|&i| i < 10));
    }

    #[test]
    fn random_is_uniform_over_many_draws() {
        // 20k draws of a single index out of 5: each index should appear with
        // frequency 0.2 +/- 0.01.
        let draws = 20_000u64;
        let mut counts = [0u64; 5];
        for j in 0..draws {
            let mut rng = stream(77, &[tag::COVERAGE, j]);
            let s = random_index_set(5, cap(0.2), &mut rng).unwrap();
            counts[s.as_slice()[0]] += 1;
        }
        for &c in &counts {
            let freq = c as f64 / draws as f64;
            assert!(
                (freq - 0.2).abs() < 0.01,
                "frequency {freq} too far from 0.2"
            );
        }
    }

    #[test]
    fn static_prefix_and_constancy() {
        let s = static_index_set(5, cap(0.6)).unwrap();
        assert_eq!(s.as_slice(), &[0, 1, 2]);
        // No round argument exists; coverage over many rounds shows constancy.
        let counts =
            coverage_counts(Scheme::Static, 5, cap(0.6), 10, OverlapStride::full(), 0).unwrap();
        assert_eq!(counts, vec![10, 10, 10, 0, 0]);
    }

    #[test]
    fn static_sets_nest_across_capacities() {
        let small = static_index_set(10, cap(0.4)).unwrap();
        let large = static_index_set(10, cap(0.8)).unwrap();
        assert!(small.is_subset_of(&large));
    }

    #[test]
    fn extract_full_capacity_is_identity() {
        let spec = ModelSpec::new(3, vec![4, 5], 2).unwrap();
        let global = init_params(&spec, 9);
        let sets = vec![
            IndexSet::new((0..4).collect(), 4).unwrap(),
            IndexSet::new((0..5).collect(), 5).unwrap(),
        ];
        let sub = extract_submodel(&global, &sets, cap(1.0)).unwrap();
        assert_eq!(sub.params, global);
    }

    #[test]
    fn extract_respects_given_row_order() {
        let spec = ModelSpec::new(2, vec![3], 2).unwrap();
        let global = init_params(&spec, 4);
        let sets = vec![IndexSet::new(vec![2, 0], 3).unwrap()];
        let sub = extract_submodel(&global, &sets, cap(0.67)).unwrap();
        assert_eq!(
            sub.params.layers()[0].weights.row(0),
            global.layers()[0].weights.row(2)
        );
        assert_eq!(
            sub.params.layers()[0].weights.row(1),
            global.layers()[0].weights.row(0)
        );
        assert_eq!(
            sub.params.layers()[1].weights.get(0, 0),
            global.layers()[1].weights.get(0, 2)
        );
        assert_eq!(
            sub.params.layers()[1].weights.get(0, 1),
            global.layers()[1].weights.get(0, 0)
        );
    }

    #[test]
    fn extract_scatter_roundtrip_leaves_global_unchanged() {
        let spec = ModelSpec::new(3, vec![6, 4], 3).unwrap();
        let global = init_params(&spec, 12);
        let mut copy = global.clone();
        let sets = vec![
            IndexSet::new(vec![1, 3, 5], 6).unwrap(),
            IndexSet::new(vec![0, 2], 4).unwrap(),
        ];
        let sub = extract_submodel(&global, &sets, cap(0.5)).unwrap();
        scatter_submodel(&mut copy, &sub).unwrap();
        assert_eq!(copy, global);
    }

    #[test]
    fn extract_rejects_out_of_range() {
        let spec = ModelSpec::new(2, vec![3], 2).unwrap();
        let global = init_params(&spec, 4);
        let sets = vec![IndexSet {
            indices: vec![0, 3],
        }];
        assert!(matches!(
            extract_submodel(&global, &sets, cap(0.67)),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn rolling_coverage_is_exactly_even_over_a_cycle() {
        let counts =
            coverage_counts(Scheme::Rolling, 5, cap(0.6), 5, OverlapStride::full(), 0).unwrap();
        assert_eq!(counts, vec![3, 3, 3, 3, 3]);
    }

    #[test]
    fn random_coverage_concentrates_binomially() {
        let rounds = 10_000u64;
        let counts = coverage_counts(
            Scheme::Random,
            5,
            cap(0.6),
            rounds,
            OverlapStride::full(),
            123,
        )
        .unwrap();
        // Each index is in the drawn 3-subset with p = 0.6 per round.
        let mean = rounds as f64 * 0.6;
        let sigma = (rounds as f64 * 0.6 * 0.4).sqrt();
        for &c in &counts {
            assert!(
                (c as f64 - mean).abs() < 3.0 * sigma,
                "count {c} outside 3 sigma of {mean}"
            );
        }
    }

    proptest! {
        #[test]
        fn window_size_distinct_and_in_range(k in 2usize..64, beta_idx in 0usize..5, j in 0u64..200) {
            let betas = [1.0, 0.5, 0.25, 0.125, 0.0625];
            let beta = Capacity::new(betas[beta_idx]).unwrap();
            if beta.window_len(k).is_ok() {
                let expect = (beta.value() * k as f64).floor() as usize;
                for set in [
                    rolling_index_set(k, beta, j, OverlapStride::full()).unwrap(),
                    static_index_set(k, beta).unwrap(),
                    random_index_set(k, beta, &mut stream(j, &[k as u64])).unwrap(),
                ] {
                    prop_assert_eq!(set.len(), expect);
                    let mut sorted = set.as_slice().to_vec();
                    sorted.dedup();
                    prop_assert_eq!(sorted.len(), set.len());
                    prop_assert!(set.as_slice().iter().all(|&i| i < k));
                }
            }
        }

        #[test]
        fn rolling_rotation_equivariance(k in 2usize..64, beta_idx in 0usize..5, j in 0u64..500) {
            let betas = [1.0, 0.5, 0.25, 0.125, 0.0625];
            let beta = Capacity::new(betas[beta_idx]).unwrap();
            if beta.window_len(k).is_ok() {
                let a = rolling_index_set(k, beta, j, OverlapStride::full()).unwrap();
                let b = rolling_index_set(k, beta, j + 1, OverlapStride::full()).unwrap();
                let rotated: Vec<usize> = a.as_slice().iter().map(|&i| (i + 1) % k).collect();
                prop_assert!(b.same_set(&IndexSet::new(rotated, k).unwrap()));
            }
        }

        #[test]
        fn extract_then_scatter_reconstructs(seed in 0u64..50) {
            let spec = ModelSpec::new(3, vec![8, 6], 2).unwrap();
            let global = init_params(&spec, seed);
            let mut rng = stream(seed, &[tag::EXTRACT]);
            let sets = vec![
                random_index_set(8, cap(0.5), &mut rng).unwrap(),
                random_index_set(6, cap(0.5), &mut rng).unwrap(),
            ];
            let sub = extract_submodel(&global, &sets, cap(0.5)).unwrap();
            let mut copy = global.clone();
            scatter_submodel(&mut copy, &sub).unwrap();
            prop_assert_eq!(copy, global);
        }

        #[test]
        fn even_coverage_holds_for_arbitrary_capacities(
            k in 2usize..64,
            beta in 0.01f64..=1.0,
            start in 0u64..1000,
        ) {
            // Over any K consecutive rounds, every index is selected exactly
            // floor(beta*K) times, whatever the capacity.
            let beta = Capacity::new(beta).unwrap();
            if let Ok(window) = beta.window_len(k) {
                let mut counts = vec![0u64; k];
                for j in start..start + k as u64 {
                    let set = rolling_index_set(k, beta, j, OverlapStride::full()).unwrap();
                    for &i in set.as_slice() {
                        counts[i] += 1;
                    }
                }
                prop_assert!(counts.iter().all(|&c| c == window as u64));
            }
        }
    }
}
