//! The federated training loop: cohort sampling, per-client sub-model
//! extraction, local training, and selective aggregation, driven round by
//! round from an [`ExperimentConfig`].
//!
//! Determinism contract: the final model is a pure function of the config and
//! the master seed. Client work is independent (each client's RNG stream is
//! derived from `(seed, client, round)`), aggregation folds in ascending
//! client id, and the cohort stream is separate from everything else, so
//! running clients in parallel cannot change a single bit of the result.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::aggregation::{aggregate, ClientUpdate, WeightingScheme};
use crate::config::{DataSource, ExperimentConfig, PartitionKind};
use crate::data::{
    gen_synthetic, largest_remainder, partition_by_labels, partition_dirichlet, Dataset,
    PartitionPlan,
};
use crate::error::{Error, Result};
use crate::extraction::{
    extract_submodel, random_index_set, rolling_index_set, static_index_set, Capacity, IndexSet,
    OverlapStride, Scheme, SubModel,
};
use crate::metrics::{
    cost_report, global_accuracy, local_accuracy, payload_bytes, ClientCost, CostReport,
    MetricsRecord, RoundTrace, RunTrace,
};
use crate::model::{init_params, loss_and_grad, sgd_step, ModelSpec, OptimizerState, ParamStore};
use crate::rng::{stream, tag};

/// A participating client: identity, capacity, and its shard of the data.
#[derive(Debug, Clone)]
pub struct ClientProfile {
    pub client_id: u64,
    /// Capacity relative to the *server* model (gamma already folded in).
    pub capacity: Capacity,
    pub shard: Vec<usize>,
}

impl ClientProfile {
    pub fn sample_count(&self) -> usize {
        self.shard.len()
    }
}

/// Discrete distribution over client capacities.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityDistribution {
    tiers: Vec<(f64, f64)>,
}

impl CapacityDistribution {
    pub fn new(tiers: Vec<(f64, f64)>) -> Result<Self> {
        if tiers.is_empty() {
            return Err(Error::field("capacities", "distribution must not be empty"));
        }
        for &(beta, p) in &tiers {
            Capacity::new(beta)?;
            if p < 0.0 || !p.is_finite() {
                return Err(Error::field("capacity_probs", "probabilities must be >= 0"));
            }
        }
        let sum: f64 = tiers.iter().map(|t| t.1).sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::field(
                "capacity_probs",
                format!("probabilities sum to {sum}"),
            ));
        }
        Ok(CapacityDistribution { tiers })
    }

    /// The standard five-tier uniform mix.
    pub fn uniform_five() -> Self {
        CapacityDistribution {
            tiers: [1.0, 0.5, 0.25, 0.125, 0.0625]
                .iter()
                .map(|&b| (b, 0.2))
                .collect(),
        }
    }

    /// Two-point mix: fraction `rho` of clients at full capacity, the rest at
    /// 1/16.
    pub fn two_point(rho: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&rho) {
            return Err(Error::field("rho", "must be in [0, 1]"));
        }
        // Degenerate endpoints collapse to a single tier.
        if rho == 0.0 {
            return Ok(CapacityDistribution {
                tiers: vec![(0.0625, 1.0)],
            });
        }
        if rho == 1.0 {
            return Ok(CapacityDistribution {
                tiers: vec![(1.0, 1.0)],
            });
        }
        Ok(CapacityDistribution {
            tiers: vec![(1.0, rho), (0.0625, 1.0 - rho)],
        })
    }

    /// Capacity mix emulating a real-world device population (income-bracket
    /// proportions): 55% at 1/16, 18% at 1/8, 11% at 1/4, 10% at 1/2, 6% at 1.
    pub fn device_population() -> Self {
        CapacityDistribution {
            tiers: vec![
                (0.0625, 0.55),
                (0.125, 0.18),
                (0.25, 0.11),
                (0.5, 0.10),
                (1.0, 0.06),
            ],
        }
    }

    pub fn tiers(&self) -> &[(f64, f64)] {
        &self.tiers
    }

    /// Expected value of `f(beta)` under the distribution.
    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.tiers.iter().map(|&(b, p)| p * f(b)).sum()
    }
}

/// Deterministic capacity assignment: largest-remainder apportionment of the
/// tier counts, then a seeded shuffle of which client gets which tier.
pub fn assign_capacities(
    n_clients: usize,
    dist: &CapacityDistribution,
    seed: u64,
) -> Result<Vec<Capacity>> {
    if n_clients == 0 {
        return Err(Error::field("clients", "must be >= 1"));
    }
    let weights: Vec<f64> = dist.tiers.iter().map(|t| t.1).collect();
    let counts = largest_remainder(&weights, n_clients);
    let mut out = Vec::with_capacity(n_clients);
    for (tier, &count) in dist.tiers.iter().zip(&counts) {
        let cap = Capacity::new(tier.0)?;
        out.extend(std::iter::repeat_n(cap, count));
    }
    let mut rng = stream(seed, &[tag::CAPACITY]);
    out.shuffle(&mut rng);
    Ok(out)
}

/// Uniform cohort sample without replacement, deterministic from
/// `(seed, round)`, returned in ascending id order.
pub fn sample_cohort(
    n_clients: usize,
    cohort_size: usize,
    round: u64,
    seed: u64,
) -> Result<Vec<u64>> {
    if cohort_size > n_clients {
        return Err(Error::CohortTooLarge {
            cohort: cohort_size,
            clients: n_clients,
        });
    }
    let mut rng = stream(seed, &[tag::COHORT, round]);
    let mut ids = rand::seq::index::sample(&mut rng, n_clients, cohort_size).into_vec();
    ids.sort_unstable();
    Ok(ids.into_iter().map(|i| i as u64).collect())
}

/// Training hyperparameters shared by every client.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub total_rounds: u64,
    pub initial_lr: f64,
    pub decay_milestones: Vec<u64>,
    pub decay_factor: f64,
    pub local_epochs: u32,
    pub batch_size: usize,
    pub cohort_size: usize,
    pub momentum: f64,
    pub weight_decay: f64,
}

impl Schedule {
    /// Learning rate in effect at `round`: the initial rate decayed once per
    /// milestone already reached.
    pub fn lr_at(&self, round: u64) -> f64 {
        let passed = self
            .decay_milestones
            .iter()
            .filter(|&&m| m <= round)
            .count() as i32;
        self.initial_lr * self.decay_factor.powi(passed)
    }
}

/// Server-to-client size ratio: server hidden widths are `gamma` times the
/// largest client model's.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ServerScale(pub usize);

impl ServerScale {
    pub fn new(gamma: usize) -> Result<Self> {
        if gamma == 0 {
            return Err(Error::field("gamma", "must be >= 1"));
        }
        Ok(ServerScale(gamma))
    }

    pub fn server_spec(&self, client_spec: &ModelSpec) -> Result<ModelSpec> {
        client_spec.scaled(self.0)
    }

    /// A client-relative capacity expressed as a fraction of the server.
    pub fn effective_capacity(&self, beta: Capacity) -> Result<Capacity> {
        Capacity::new(beta.value() / self.0 as f64)
    }
}

/// One local training pass: `local_epochs` sweeps of mini-batch SGD over the
/// shard, shuffled once per epoch from the client's stream. The input
/// sub-model is untouched; momentum starts from zero (clients are stateless
/// between rounds).
pub fn client_step(
    sub: &SubModel,
    data: &Dataset,
    shard: &[usize],
    schedule: &Schedule,
    round: u64,
    rng: &mut ChaCha8Rng,
) -> Result<(SubModel, f64)> {
    if shard.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mut params = sub.params.clone();
    let mut opt = OptimizerState::new(
        schedule.lr_at(round),
        schedule.momentum,
        schedule.weight_decay,
        &params,
    )?;
    let mut loss_sum = 0.0;
    let mut batches = 0u64;
    for _ in 0..schedule.local_epochs {
        let mut order = shard.to_vec();
        order.shuffle(rng);
        for chunk in order.chunks(schedule.batch_size) {
            let batch = data.batch_of(chunk)?;
            let (loss, grads) = loss_and_grad(&params, &batch)?;
            params = sgd_step(&params, &grads, &mut opt)?;
            loss_sum += loss;
            batches += 1;
        }
    }
    Ok((
        SubModel {
            params,
            index_maps: sub.index_maps.clone(),
            capacity: sub.capacity,
        },
        loss_sum / batches as f64,
    ))
}

/// Everything fixed across rounds of one run.
pub struct Federation<'a> {
    pub dataset: &'a Dataset,
    pub profiles: &'a [ClientProfile],
    pub server_spec: &'a ModelSpec,
    pub schedule: &'a Schedule,
    pub scheme: Scheme,
    pub overlap: OverlapStride,
    pub weighting: WeightingScheme,
    pub master_seed: u64,
    pub parallel: bool,
}

/// The result of one communication round.
pub struct RoundOutcome {
    pub params: ParamStore,
    pub mean_train_loss: f64,
    pub trace: RoundTrace,
}

impl Federation<'_> {
    fn index_sets_for(&self, client: &ClientProfile, round: u64) -> Result<Vec<IndexSet>> {
        let widths = &self.server_spec.hidden_widths;
        let mut sets = Vec::with_capacity(widths.len());
        for (layer, &k) in widths.iter().enumerate() {
            let set = match self.scheme {
                Scheme::Rolling => rolling_index_set(k, client.capacity, round, self.overlap)?,
                Scheme::Static => static_index_set(k, client.capacity)?,
                Scheme::Random => {
                    let mut rng = stream(
                        self.master_seed,
                        &[tag::EXTRACT, client.client_id, round, layer as u64],
                    );
                    random_index_set(k, client.capacity, &mut rng)?
                }
            };
            sets.push(set);
        }
        Ok(sets)
    }

    fn train_one(
        &self,
        params: &ParamStore,
        id: u64,
        round: u64,
    ) -> Result<(ClientUpdate, ClientCost, f64)> {
        let client = &self.profiles[id as usize];
        let sets = self.index_sets_for(client, round)?;
        let sub = extract_submodel(params, &sets, client.capacity)?;
        // What actually crosses the wire is the sub-model, never the full
        // server model.
        let cost = ClientCost {
            client_id: id,
            param_count: sub.param_count(),
            macs_per_example: sub
                .params
                .layers()
                .iter()
                .map(|l| (l.weights.rows() * l.weights.cols()) as u64)
                .sum(),
            payload_bytes: payload_bytes(sub.param_count()),
        };
        let mut rng = stream(self.master_seed, &[tag::CLIENT_BATCH, id, round]);
        let (trained, loss) = client_step(
            &sub,
            self.dataset,
            &client.shard,
            self.schedule,
            round,
            &mut rng,
        )?;
        Ok((
            ClientUpdate::new(id, trained, client.shard.len()),
            cost,
            loss,
        ))
    }

    /// Run round `round`: sample a cohort, extract and train sub-models, and
    /// selectively aggregate. The result does not depend on the order (or
    /// parallelism) of client execution.
    pub fn run_round(&self, params: &ParamStore, round: u64) -> Result<RoundOutcome> {
        let cohort = sample_cohort(
            self.profiles.len(),
            self.schedule.cohort_size,
            round,
            self.master_seed,
        )?;
        let results: Vec<Result<(ClientUpdate, ClientCost, f64)>> = if self.parallel {
            cohort
                .par_iter()
                .map(|&id| self.train_one(params, id, round))
                .collect()
        } else {
            cohort
                .iter()
                .map(|&id| self.train_one(params, id, round))
                .collect()
        };
        let mut updates = Vec::with_capacity(results.len());
        let mut costs = Vec::with_capacity(results.len());
        let mut loss_sum = 0.0;
        for r in results {
            let (update, cost, loss) = r?;
            updates.push(update);
            costs.push(cost);
            loss_sum += loss;
        }
        let mean_train_loss = loss_sum / updates.len().max(1) as f64;
        let (params, _report) = aggregate(params, &updates, self.weighting)?;
        Ok(RoundOutcome {
            params,
            mean_train_loss,
            trace: RoundTrace { clients: costs },
        })
    }
}

/// Everything a finished run hands back.
pub struct ExperimentResult {
    pub records: Vec<MetricsRecord>,
    pub final_params: ParamStore,
    pub trace: RunTrace,
    pub majority_baseline: f64,
    pub warnings: Vec<String>,
}

impl ExperimentResult {
    pub fn final_global_accuracy(&self) -> Option<f64> {
        self.records.last().map(|r| r.global_accuracy)
    }

    pub fn cost_report(&self) -> Result<CostReport> {
        cost_report(&self.trace)
    }
}

/// Materialised data side of a run: train set, test set, and the partition.
pub struct PreparedData {
    pub train: Dataset,
    pub test: Dataset,
    pub plan: PartitionPlan,
}

/// Build datasets and the partition from a config. Data depends only on the
/// config (its own `data_seed`), not on the per-run seed, mirroring a fixed
/// real-world dataset shared by all runs.
pub fn prepare_data(config: &ExperimentConfig) -> Result<PreparedData> {
    let (train, test) = match &config.data {
        DataSource::Synthetic {
            classes,
            features,
            train_per_class,
            test_per_class,
            spread,
            data_seed,
        } => {
            let train = gen_synthetic(*classes, *features, *train_per_class, *spread, *data_seed)?;
            let test = gen_synthetic(
                *classes,
                *features,
                *test_per_class,
                *spread,
                data_seed.wrapping_add(1),
            )?;
            (train, test)
        }
        DataSource::File { path, test_split } => {
            let full = crate::io::read_dataset_auto(path)?;
            crate::io::split_train_test(&full, *test_split, 0)?
        }
    };
    let data_seed = match &config.data {
        DataSource::Synthetic { data_seed, .. } => *data_seed,
        DataSource::File { .. } => 0,
    };
    let plan = match &config.partition {
        PartitionKind::Labels(l) => partition_by_labels(&train, config.clients, *l, data_seed)?,
        PartitionKind::Dirichlet(a) => partition_dirichlet(&train, config.clients, *a, data_seed)?,
    };
    Ok(PreparedData { train, test, plan })
}

/// Build the client profiles for one run seed: tier assignment shuffled by
/// the seed, capacities rescaled to be server-relative when gamma > 1.
pub fn build_profiles(
    config: &ExperimentConfig,
    plan: &PartitionPlan,
    seed: u64,
) -> Result<Vec<ClientProfile>> {
    let dist = CapacityDistribution::new(
        config
            .capacities
            .iter()
            .cloned()
            .zip(config.capacity_probs.iter().cloned())
            .collect(),
    )?;
    let scale = ServerScale::new(config.gamma)?;
    let caps = assign_capacities(config.clients, &dist, seed)?;
    caps.into_iter()
        .enumerate()
        .map(|(id, beta)| {
            Ok(ClientProfile {
                client_id: id as u64,
                capacity: scale.effective_capacity(beta)?,
                shard: plan.shard(id).to_vec(),
            })
        })
        .collect()
}

/// Run one full experiment for one seed: J rounds with periodic evaluation.
/// Returns the metrics series, the final model, and the cost trace.
pub fn run_experiment(config: &ExperimentConfig, seed: u64) -> Result<ExperimentResult> {
    let warnings = config.validate()?;
    for w in &warnings {
        log::warn!("{w}");
    }
    let data = prepare_data(config)?;
    run_experiment_on(config, &data, seed)
}

/// Like [`run_experiment`] but reusing already prepared data (sweeps and
/// multi-seed runs share the dataset).
pub fn run_experiment_on(
    config: &ExperimentConfig,
    data: &PreparedData,
    seed: u64,
) -> Result<ExperimentResult> {
    let warnings = config.validate()?;
    if data.plan.num_clients() != config.clients {
        return Err(Error::field(
            "clients",
            "partition does not match client count",
        ));
    }
    let profiles = build_profiles(config, &data.plan, seed)?;
    let client_spec = ModelSpec::new(
        data.train.feature_dim(),
        config.hidden_widths.clone(),
        data.train.num_classes(),
    )?;
    let server_spec = ServerScale::new(config.gamma)?.server_spec(&client_spec)?;
    let schedule = Schedule {
        total_rounds: config.rounds,
        initial_lr: config.initial_lr,
        decay_milestones: config.decay_milestones.clone(),
        decay_factor: config.decay_factor,
        local_epochs: config.local_epochs,
        batch_size: config.batch_size,
        cohort_size: config.cohort_size,
        momentum: config.momentum,
        weight_decay: config.weight_decay,
    };
    let federation = Federation {
        dataset: &data.train,
        profiles: &profiles,
        server_spec: &server_spec,
        schedule: &schedule,
        scheme: config.scheme,
        overlap: OverlapStride::new(config.overlap)?,
        weighting: config.weighting,
        master_seed: seed,
        parallel: config.parallel,
    };

    let mut params = init_params(&server_spec, seed);
    let mut records = Vec::new();
    let mut trace = RunTrace::default();
    let mut cumulative_payload = 0u64;
    for round in 0..config.rounds {
        let outcome = federation.run_round(&params, round)?;
        params = outcome.params;
        cumulative_payload += outcome
            .trace
            .clients
            .iter()
            .map(|c| c.payload_bytes)
            .sum::<u64>();
        let is_eval = (round + 1) % config.eval_interval == 0 || round + 1 == config.rounds;
        if is_eval {
            let global = global_accuracy(&params, &data.test)?;
            let local = local_accuracy(&params, &data.plan, &data.train)?;
            records.push(MetricsRecord {
                round,
                learning_rate: schedule.lr_at(round),
                train_loss: outcome.mean_train_loss,
                global_accuracy: global,
                local_accuracy_mean: local.mean,
                local_accuracy_min: local.min,
                local_accuracy_max: local.max,
                cumulative_payload_bytes: cumulative_payload,
                seed,
            });
        }
        trace.rounds.push(outcome.trace);
    }
    Ok(ExperimentResult {
        records,
        final_params: params,
        trace,
        majority_baseline: data.test.majority_share(),
        warnings,
    })
}

/// Analytic parameter count of the sub-model a capacity selects from a spec:
/// per hidden layer `floor(beta * K)` nodes, input and output unsliced.
pub fn submodel_param_count(server_spec: &ModelSpec, beta: Capacity) -> Result<usize> {
    let mut widths = Vec::with_capacity(server_spec.hidden_widths.len());
    for &k in &server_spec.hidden_widths {
        widths.push(beta.window_len(k)?);
    }
    let spec = ModelSpec::new(server_spec.input_dim, widths, server_spec.output_dim)?;
    Ok(spec.param_count())
}

/// Cohort sampling and extraction sizing only, no training: enough to
/// measure communication cost over many rounds cheaply.
pub fn trace_cohort_payloads(
    config: &ExperimentConfig,
    rounds: u64,
    seed: u64,
) -> Result<RunTrace> {
    let data = prepare_data(config)?;
    let profiles = build_profiles(config, &data.plan, seed)?;
    let client_spec = ModelSpec::new(
        data.train.feature_dim(),
        config.hidden_widths.clone(),
        data.train.num_classes(),
    )?;
    let server_spec = ServerScale::new(config.gamma)?.server_spec(&client_spec)?;
    let mut trace = RunTrace::default();
    for round in 0..rounds {
        let cohort = sample_cohort(profiles.len(), config.cohort_size, round, seed)?;
        let mut round_trace = RoundTrace::default();
        for id in cohort {
            let client = &profiles[id as usize];
            let params = submodel_param_count(&server_spec, client.capacity)?;
            let mut widths = Vec::new();
            for &k in &server_spec.hidden_widths {
                widths.push(client.capacity.window_len(k)?);
            }
            let sizes: Vec<usize> = std::iter::once(server_spec.input_dim)
                .chain(widths.iter().copied())
                .chain(std::iter::once(server_spec.output_dim))
                .collect();
            let macs: u64 = sizes.windows(2).map(|w| (w[0] * w[1]) as u64).sum();
            round_trace.clients.push(ClientCost {
                client_id: id,
                param_count: params,
                macs_per_example: macs,
                payload_bytes: payload_bytes(params),
            });
        }
        trace.rounds.push(round_trace);
    }
    Ok(trace)
}
