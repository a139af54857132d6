//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line. Run with `--nocapture` to see the lines:
//!
//! ```bash
//! cargo test -p fedpart --test acceptance -- --nocapture
//! ```
//!
//! Everything here is seeded and deterministic, so the suite either passes
//! forever or fails forever for a given build.

use fedpart::aggregation::{aggregate, fedavg_reference, ClientUpdate, WeightingScheme};
use fedpart::collector::{
    expected_rounds_m, expected_rounds_once, expected_rounds_once_integral, monte_carlo_rounds,
    rolling_rounds_to_cover,
};
use fedpart::config::{DataSource, ExperimentConfig, PartitionKind};
use fedpart::extraction::{
    coverage_counts, extract_submodel, random_index_set, static_index_set, Capacity, IndexSet,
    OverlapStride, Scheme,
};
use fedpart::federation::{
    prepare_data, run_experiment_on, sample_cohort, submodel_param_count, trace_cohort_payloads,
    CapacityDistribution, Schedule,
};
use fedpart::matrix::Matrix;
use fedpart::metrics::{cost_report, mean_and_std, payload_bytes};
use fedpart::model::{
    init_params, loss_and_grad, sgd_step, Batch, ModelSpec, OptimizerState, ParamStore,
};
use fedpart::rng::{stream, tag};
use rand::seq::SliceRandom;
use rand::Rng;

const BETAS: [f64; 5] = [1.0, 0.5, 0.25, 0.125, 0.0625];

fn pass(name: &str) {
    println!("[acceptance] {name}: PASS");
}

fn pooled_sd(a: f64, b: f64) -> f64 {
    ((a * a + b * b) / 2.0).sqrt()
}

/// C1: rolling even coverage. For every K in [2, 64] and every capacity tier
/// with a non-empty window, any K consecutive rounds select each index
/// exactly floor(beta*K) times.
#[test]
fn c01_even_coverage() {
    for k in 2..=64usize {
        for beta in BETAS {
            let cap = Capacity::new(beta).unwrap();
            let Ok(window) = cap.window_len(k) else {
                continue;
            };
            for start in [0u64, 17] {
                let mut counts = vec![0u64; k];
                for j in start..start + k as u64 {
                    let set =
                        fedpart::extraction::rolling_index_set(k, cap, j, OverlapStride::full())
                            .unwrap();
                    for &i in set.as_slice() {
                        counts[i] += 1;
                    }
                }
                assert!(
                    counts.iter().all(|&c| c == window as u64),
                    "K={k} beta={beta} from round {start}: counts {counts:?}, expected all {window}"
                );
            }
        }
    }
    pass("C1 even coverage over any K consecutive rounds");
}

/// C2: static windows nest across capacities and never change across rounds.
#[test]
fn c02_static_nesting_and_constancy() {
    for k in [5usize, 16, 32, 63] {
        let mut sets = Vec::new();
        for beta in BETAS.iter().rev() {
            let cap = Capacity::new(*beta).unwrap();
            if cap.window_len(k).is_err() {
                continue;
            }
            sets.push(static_index_set(k, cap).unwrap());
        }
        for pair in sets.windows(2) {
            assert!(
                pair[0].is_subset_of(&pair[1]),
                "K={k}: smaller static set not nested"
            );
        }
    }
    // Constancy over 1000 rounds: every index is selected either always or never.
    let counts = coverage_counts(
        Scheme::Static,
        32,
        Capacity::new(0.25).unwrap(),
        1000,
        OverlapStride::full(),
        0,
    )
    .unwrap();
    assert_eq!(&counts[..8], &[1000; 8]);
    assert_eq!(&counts[8..], &[0; 24]);
    pass("C2 static nesting and constancy");
}

/// C3: harmonic and integral forms of the single-coverage expectation agree
/// to 1e-6 for I up to 200; Monte Carlo agrees within 3 standard errors.
#[test]
fn c03_single_coverage_expectation() {
    for i in 1..=200u64 {
        let h = expected_rounds_once(i).unwrap();
        let q = expected_rounds_once_integral(i).unwrap();
        assert!((h - q).abs() < 1e-6, "I={i}: harmonic {h} vs integral {q}");
    }
    for i in [5u64, 10, 20] {
        let expect = expected_rounds_once(i).unwrap();
        let (mc, se) = monte_carlo_rounds(i, 1, 100_000, 31).unwrap();
        assert!(
            (mc - expect).abs() < 3.0 * se,
            "I={i}: monte carlo {mc} +/- {se} vs {expect}"
        );
    }
    pass("C3 single-coverage expectation (harmonic = integral = monte carlo)");
}

/// C4: the m-coverage quadrature matches Monte Carlo within 3 standard
/// errors, and reduces to the single-coverage form at m=1.
#[test]
fn c04_m_coverage_expectation() {
    for i in [5u64, 10, 20] {
        for m in [2u32, 3] {
            let expect = expected_rounds_m(i, m).unwrap();
            let (mc, se) = monte_carlo_rounds(i, m, 100_000, 37).unwrap();
            assert!(
                (mc - expect).abs() < 3.0 * se,
                "I={i} m={m}: monte carlo {mc} +/- {se} vs quadrature {expect}"
            );
        }
    }
    for i in 1..=200u64 {
        let a = expected_rounds_m(i, 1).unwrap();
        let b = expected_rounds_once(i).unwrap();
        assert!(
            (a - b).abs() < 1e-6,
            "I={i}: m=1 quadrature {a} vs harmonic {b}"
        );
    }
    pass("C4 m-coverage expectation (quadrature = monte carlo; m=1 reduction)");
}

/// C5: a stride-1 cyclic schedule needs strictly fewer rounds than the
/// expected random schedule for every I in [2, 50], m in [1, 5].
#[test]
fn c05_cyclic_beats_random() {
    for i in 2..=50u64 {
        for m in 1..=5u64 {
            let cyclic = rolling_rounds_to_cover(i, m) as f64;
            let random = expected_rounds_m(i, m as u32).unwrap();
            assert!(cyclic < random, "I={i} m={m}: {cyclic} !< {random}");
        }
    }
    pass("C5 cyclic coverage strictly beats the random expectation");
}

fn full_sets(spec: &ModelSpec) -> Vec<IndexSet> {
    spec.hidden_widths
        .iter()
        .map(|&w| IndexSet::new((0..w).collect(), w).unwrap())
        .collect()
}

/// Reference FedAvg trajectory oracle: full-capacity local SGD from the same
/// derived streams plus a brute-force mean; no extraction or selective
/// aggregation code involved.
fn fedavg_trajectory(
    spec: &ModelSpec,
    shards: &[Vec<usize>],
    ds: &fedpart::data::Dataset,
    schedule: &Schedule,
    rounds: u64,
    seed: u64,
) -> ParamStore {
    let mut params = init_params(spec, seed);
    for round in 0..rounds {
        let cohort = sample_cohort(shards.len(), schedule.cohort_size, round, seed).unwrap();
        let mut trained = Vec::new();
        for id in cohort {
            let mut local = params.clone();
            let mut opt = OptimizerState::new(
                schedule.lr_at(round),
                schedule.momentum,
                schedule.weight_decay,
                &local,
            )
            .unwrap();
            let mut rng = stream(seed, &[tag::CLIENT_BATCH, id, round]);
            for _ in 0..schedule.local_epochs {
                let mut order = shards[id as usize].clone();
                order.shuffle(&mut rng);
                for chunk in order.chunks(schedule.batch_size) {
                    let batch = ds.batch_of(chunk).unwrap();
                    let (_, grads) = loss_and_grad(&local, &batch).unwrap();
                    local = sgd_step(&local, &grads, &mut opt).unwrap();
                }
            }
            trained.push(local);
        }
        params = fedavg_reference(&trained).unwrap();
    }
    params
}

/// C6: with every client at full capacity and uniform weights, one selective
/// aggregation equals the brute-force mean bit for bit, and a 50-round run
/// reproduces the reference FedAvg trajectory exactly.
#[test]
fn c06_fedavg_equivalence() {
    // Single-round bitwise equivalence.
    let spec = ModelSpec::new(4, vec![6, 5], 3).unwrap();
    let global = init_params(&spec, 77);
    let stores: Vec<ParamStore> = (0..8).map(|s| init_params(&spec, 200 + s)).collect();
    let updates: Vec<ClientUpdate> = stores
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut sub = extract_submodel(&global, &full_sets(&spec), Capacity::full()).unwrap();
            sub.params = s.clone();
            ClientUpdate::new(i as u64, sub, 1)
        })
        .collect();
    let (agg, _) = aggregate(&global, &updates, WeightingScheme::Uniform).unwrap();
    assert_eq!(agg, fedavg_reference(&stores).unwrap());

    // 50-round trajectory equivalence against the oracle loop.
    let config = ExperimentConfig {
        clients: 10,
        cohort_size: 4,
        rounds: 50,
        hidden_widths: vec![8],
        capacities: vec![1.0],
        capacity_probs: vec![1.0],
        initial_lr: 0.05,
        eval_interval: 50,
        data: DataSource::Synthetic {
            classes: 3,
            features: 4,
            train_per_class: 40,
            test_per_class: 20,
            spread: 1.0,
            data_seed: 3,
        },
        partition: PartitionKind::Labels(2),
        ..ExperimentConfig::default()
    };
    let data = prepare_data(&config).unwrap();
    let seed = 5u64;
    let result = run_experiment_on(&config, &data, seed).unwrap();

    let spec = ModelSpec::new(4, vec![8], 3).unwrap();
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
    let shards: Vec<Vec<usize>> = (0..config.clients)
        .map(|c| data.plan.shard(c).to_vec())
        .collect();
    let oracle = fedavg_trajectory(&spec, &shards, &data.train, &schedule, config.rounds, seed);
    assert_eq!(
        result.final_params, oracle,
        "50-round trajectory diverged from FedAvg"
    );
    pass("C6 full-capacity run is bitwise FedAvg");
}

/// Random partial-overlap aggregation instance.
fn random_aggregation_instance(seed: u64) -> (ParamStore, Vec<ClientUpdate>) {
    let mut rng = stream(seed, &[4242]);
    let hidden = vec![rng.gen_range(2..8), rng.gen_range(2..8)];
    let spec = ModelSpec::new(rng.gen_range(2..5), hidden.clone(), rng.gen_range(2..4)).unwrap();
    let global = init_params(&spec, seed);
    let n_clients = rng.gen_range(1..6);
    let updates = (0..n_clients)
        .map(|id| {
            let beta = [1.0, 0.5, 0.5, 0.25][rng.gen_range(0..4)];
            let sets: Vec<IndexSet> = hidden
                .iter()
                .map(|&k| {
                    let want = ((beta * k as f64).floor() as usize).max(1);
                    let cap = Capacity::new(want as f64 / k as f64).unwrap();
                    random_index_set(k, cap, &mut rng).unwrap()
                })
                .collect();
            let mut sub = extract_submodel(&global, &sets, Capacity::new(beta).unwrap()).unwrap();
            for layer in sub.params.layers_mut() {
                for v in layer.weights.data_mut() {
                    *v += rng.gen_range(-1.0..1.0);
                }
                for v in layer.bias.iter_mut() {
                    *v += rng.gen_range(-1.0..1.0);
                }
            }
            ClientUpdate::new(id, sub, rng.gen_range(1..50))
        })
        .collect();
    (global, updates)
}

/// C7: untouched parameters stay bitwise identical and every aggregated
/// value lies in the convex hull of its contributors, over 1000 randomized
/// instances.
#[test]
fn c07_untouched_identity_and_convex_hull() {
    for seed in 0..1000u64 {
        let (global, updates) = random_aggregation_instance(seed);
        let (out, report) = aggregate(&global, &updates, WeightingScheme::Uniform).unwrap();

        // Recompute per-parameter contributor sets independently.
        let n_conn = global.num_connections();
        let full_in: Vec<usize> = (0..global.layers()[0].weights.cols()).collect();
        let full_out: Vec<usize> = (0..global.layers()[n_conn - 1].weights.rows()).collect();
        let mut untouched_seen = 0usize;
        for l in 0..n_conn {
            let g = &global.layers()[l];
            let mut weight_vals: Vec<Vec<f64>> = vec![Vec::new(); g.weights.len()];
            let mut bias_vals: Vec<Vec<f64>> = vec![Vec::new(); g.bias.len()];
            for u in &updates {
                let src: &[usize] = if l == 0 {
                    &full_in
                } else {
                    u.sub.index_maps[l - 1].as_slice()
                };
                let dst: &[usize] = if l == n_conn - 1 {
                    &full_out
                } else {
                    u.sub.index_maps[l].as_slice()
                };
                let s = &u.sub.params.layers()[l];
                for (a, &gr) in dst.iter().enumerate() {
                    for (b, &gc) in src.iter().enumerate() {
                        weight_vals[gr * g.weights.cols() + gc].push(s.weights.get(a, b));
                    }
                    bias_vals[gr].push(s.bias[a]);
                }
            }
            let check = |vals: &[Vec<f64>],
                         get_out: &dyn Fn(usize) -> f64,
                         get_global: &dyn Fn(usize) -> f64,
                         untouched: &mut usize| {
                for (idx, contributors) in vals.iter().enumerate() {
                    let v = get_out(idx);
                    if contributors.is_empty() {
                        assert_eq!(
                            v,
                            get_global(idx),
                            "untouched parameter changed (seed {seed})"
                        );
                        *untouched += 1;
                    } else {
                        let lo = contributors.iter().cloned().fold(f64::INFINITY, f64::min);
                        let hi = contributors
                            .iter()
                            .cloned()
                            .fold(f64::NEG_INFINITY, f64::max);
                        assert!(
                            v >= lo - 1e-12 && v <= hi + 1e-12,
                            "value {v} outside hull [{lo}, {hi}] (seed {seed})"
                        );
                    }
                }
            };
            let out_layer = &out.layers()[l];
            check(
                &weight_vals,
                &|i| out_layer.weights.data()[i],
                &|i| g.weights.data()[i],
                &mut untouched_seen,
            );
            check(
                &bias_vals,
                &|i| out_layer.bias[i],
                &|i| g.bias[i],
                &mut untouched_seen,
            );
        }
        assert_eq!(
            untouched_seen, report.untouched_params,
            "report disagrees (seed {seed})"
        );
    }
    pass("C7 untouched-parameter identity and convex hull on 1000 instances");
}

/// C8: analytic gradients match central finite differences (step 1e-4) to
/// relative error < 1e-4 on 100 random nets. Instances whose pre-activations
/// sit within the step of a ReLU kink are redrawn: at a kink the loss is not
/// differentiable and the difference quotient is not an oracle.
#[test]
fn c08_gradient_checks() {
    let mut rng = stream(2024, &[8]);
    let mut done = 0u32;
    let mut attempt = 0u64;
    let mut worst: f64 = 0.0;
    while done < 100 {
        attempt += 1;
        assert!(attempt < 1000, "too many rejected gradient-check instances");
        let input = rng.gen_range(2..6);
        let classes = rng.gen_range(2..5);
        let depth = rng.gen_range(1..3);
        let hidden: Vec<usize> = (0..depth).map(|_| rng.gen_range(2..=16)).collect();
        let spec = ModelSpec::new(input, hidden, classes).unwrap();
        let params = init_params(&spec, 9000 + attempt);
        let examples = rng.gen_range(1..=8);
        let rows: Vec<Vec<f64>> = (0..examples)
            .map(|_| (0..input).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        let labels: Vec<u32> = (0..examples)
            .map(|_| rng.gen_range(0..classes as u32))
            .collect();
        let batch = Batch::new(Matrix::from_rows(&rows).unwrap(), labels, classes).unwrap();
        if min_abs_preactivation(&params, &batch) <= 1e-3 {
            continue;
        }
        let (_, analytic) = loss_and_grad(&params, &batch).unwrap();
        let numeric = finite_diff_grads(&params, &batch, 1e-4);
        let err = max_rel_error(&analytic, &numeric);
        assert!(err < 1e-4, "net {attempt}: max relative error {err}");
        worst = worst.max(err);
        done += 1;
    }
    println!("[acceptance]   (worst relative error over 100 nets: {worst:.2e})");
    pass("C8 gradient checks on 100 random nets");
}

fn finite_diff_grads(params: &ParamStore, b: &Batch, h: f64) -> ParamStore {
    let mut grads = params.clone();
    for l in 0..params.layers().len() {
        for r in 0..params.layers()[l].weights.rows() {
            for c in 0..params.layers()[l].weights.cols() {
                let orig = params.layers()[l].weights.get(r, c);
                let mut plus = params.clone();
                plus.layers_mut()[l].weights.set(r, c, orig + h);
                let mut minus = params.clone();
                minus.layers_mut()[l].weights.set(r, c, orig - h);
                let (lp, _) = loss_and_grad(&plus, b).unwrap();
                let (lm, _) = loss_and_grad(&minus, b).unwrap();
                grads.layers_mut()[l]
                    .weights
                    .set(r, c, (lp - lm) / (2.0 * h));
            }
        }
        for i in 0..params.layers()[l].bias.len() {
            let orig = params.layers()[l].bias[i];
            let mut plus = params.clone();
            plus.layers_mut()[l].bias[i] = orig + h;
            let mut minus = params.clone();
            minus.layers_mut()[l].bias[i] = orig - h;
            let (lp, _) = loss_and_grad(&plus, b).unwrap();
            let (lm, _) = loss_and_grad(&minus, b).unwrap();
            grads.layers_mut()[l].bias[i] = (lp - lm) / (2.0 * h);
        }
    }
    grads
}

fn max_rel_error(a: &ParamStore, b: &ParamStore) -> f64 {
    a.flatten()
        .iter()
        .zip(b.flatten())
        .map(|(&x, y)| (x - y).abs() / (x.abs() + y.abs()).max(1e-4))
        .fold(0.0, f64::max)
}

fn min_abs_preactivation(params: &ParamStore, b: &Batch) -> f64 {
    let mut act: Vec<Vec<f64>> = (0..b.len()).map(|e| b.features().row(e).to_vec()).collect();
    let mut min_abs = f64::INFINITY;
    for (l, layer) in params.layers().iter().enumerate() {
        if l == params.num_connections() - 1 {
            break;
        }
        let mut next = Vec::with_capacity(act.len());
        for row in &act {
            let mut out = Vec::with_capacity(layer.bias.len());
            for i in 0..layer.bias.len() {
                let mut z = layer.bias[i];
                for (j, &x) in row.iter().enumerate() {
                    z += layer.weights.get(i, j) * x;
                }
                min_abs = min_abs.min(z.abs());
                out.push(z.max(0.0));
            }
            next.push(out);
        }
        act = next;
    }
    min_abs
}

/// Shared config for the scheme-ordering experiment (C9) and the
/// determinism check (C12).
fn ordering_config(scheme: Scheme) -> ExperimentConfig {
    ExperimentConfig {
        scheme,
        clients: 100,
        cohort_size: 10,
        rounds: 400,
        hidden_widths: vec![32],
        capacities: BETAS.to_vec(),
        capacity_probs: vec![0.2; 5],
        initial_lr: 0.05,
        decay_milestones: vec![250, 350],
        decay_factor: 0.1,
        eval_interval: 100,
        data: DataSource::Synthetic {
            classes: 10,
            features: 16,
            train_per_class: 300,
            test_per_class: 50,
            spread: 1.4,
            data_seed: 1,
        },
        partition: PartitionKind::Labels(2),
        seeds: vec![1, 2, 3, 4, 5],
        ..ExperimentConfig::default()
    }
}

fn scheme_final_accuracies(config: &ExperimentConfig) -> (Vec<f64>, f64) {
    let data = prepare_data(config).unwrap();
    let mut finals = Vec::new();
    let mut baseline = 0.0;
    for &seed in &config.seeds {
        let result = run_experiment_on(config, &data, seed).unwrap();
        finals.push(result.final_global_accuracy().unwrap());
        baseline = result.majority_baseline;
    }
    (finals, baseline)
}

/// C9: scheme ordering on the high-heterogeneity mixture: rolling's mean
/// final accuracy is at least each competitor's minus one pooled standard
/// deviation, and every scheme beats the majority-class baseline.
#[test]
fn c09_scheme_ordering() {
    let mut means = std::collections::HashMap::new();
    let mut stds = std::collections::HashMap::new();
    let mut baseline = 0.0;
    for scheme in [Scheme::Rolling, Scheme::Static, Scheme::Random] {
        let config = ordering_config(scheme);
        let (finals, base) = scheme_final_accuracies(&config);
        let (mean, std) = mean_and_std(&finals);
        println!(
            "[acceptance]   {}: mean {:.4} std {:.4} (seeds {:?})",
            scheme.name(),
            mean,
            std,
            finals
        );
        means.insert(scheme.name(), mean);
        stds.insert(scheme.name(), std);
        baseline = base;
    }
    for scheme in ["rolling", "static", "random"] {
        assert!(
            means[scheme] > baseline,
            "{scheme} mean {} does not beat the baseline {baseline}",
            means[scheme]
        );
    }
    for other in ["static", "random"] {
        let allowance = pooled_sd(stds["rolling"], stds[other]);
        assert!(
            means["rolling"] >= means[other] - allowance,
            "rolling {} < {other} {} - pooled sd {allowance}",
            means["rolling"],
            means[other]
        );
    }
    pass("C9 scheme ordering under high data heterogeneity");
}

/// C10: training a server model 1x/2x/4x the client size completes, and
/// rolling matches or beats random within one pooled standard deviation.
#[test]
fn c10_larger_server() {
    for gamma in [1usize, 2, 4] {
        let mut results = std::collections::HashMap::new();
        for scheme in [Scheme::Rolling, Scheme::Random] {
            let config = ExperimentConfig {
                scheme,
                clients: 50,
                cohort_size: 10,
                rounds: 500,
                hidden_widths: vec![8],
                capacities: vec![1.0],
                capacity_probs: vec![1.0],
                initial_lr: 0.05,
                decay_milestones: vec![350, 450],
                eval_interval: 250,
                gamma,
                data: DataSource::Synthetic {
                    classes: 10,
                    features: 16,
                    train_per_class: 300,
                    test_per_class: 50,
                    spread: 1.4,
                    data_seed: 1,
                },
                partition: PartitionKind::Labels(2),
                seeds: vec![7, 8, 9],
                ..ExperimentConfig::default()
            };
            let (finals, _) = scheme_final_accuracies(&config);
            results.insert(scheme.name(), mean_and_std(&finals));
        }
        let (roll_mean, roll_std) = results["rolling"];
        let (rand_mean, rand_std) = results["random"];
        let allowance = pooled_sd(roll_std, rand_std);
        println!(
            "[acceptance]   gamma={gamma}: rolling {roll_mean:.4} ({roll_std:.4}) vs random {rand_mean:.4} ({rand_std:.4})"
        );
        assert!(
            roll_mean >= rand_mean - allowance,
            "gamma={gamma}: rolling {roll_mean} < random {rand_mean} - {allowance}"
        );
    }
    pass("C10 larger-server training with rolling vs random");
}

/// C11: measured average payload under the uniform capacity mix matches the
/// analytic expectation within 2% after 1000 cohort-sampling rounds, and
/// payload is strictly monotone in capacity.
#[test]
fn c11_cost_accounting() {
    let config = ExperimentConfig {
        clients: 100,
        cohort_size: 10,
        hidden_widths: vec![32],
        capacities: BETAS.to_vec(),
        capacity_probs: vec![0.2; 5],
        ..ExperimentConfig::default()
    };

    let trace = trace_cohort_payloads(&config, 1000, 42).unwrap();
    let report = cost_report(&trace).unwrap();

    let spec = ModelSpec::new(16, vec![32], 10).unwrap();
    let dist = CapacityDistribution::uniform_five();
    let analytic = dist.expect(|beta| {
        let params = submodel_param_count(&spec, Capacity::new(beta).unwrap()).unwrap();
        payload_bytes(params) as f64
    });
    let rel = (report.avg_payload_bytes_per_client - analytic).abs() / analytic;
    println!(
        "[acceptance]   measured {:.2} vs analytic {:.2} bytes ({:+.3}%)",
        report.avg_payload_bytes_per_client,
        analytic,
        100.0 * (report.avg_payload_bytes_per_client - analytic) / analytic
    );
    assert!(
        rel < 0.02,
        "payload deviates {rel:.4} from the analytic expectation"
    );

    let mut last = 0;
    for beta in BETAS.iter().rev() {
        let params = submodel_param_count(&spec, Capacity::new(*beta).unwrap()).unwrap();
        let bytes = payload_bytes(params);
        assert!(bytes > last, "payload not monotone at beta={beta}");
        last = bytes;
    }
    pass("C11 cost accounting matches the analytic expectation");
}

/// C12: the first ordering-experiment seed produces bitwise-identical final
/// models and metrics with serial and parallel client execution.
#[test]
fn c12_parallelism_determinism() {
    let mut config = ordering_config(Scheme::Rolling);
    config.seeds = vec![1];
    let data = prepare_data(&config).unwrap();
    config.parallel = false;
    let serial = run_experiment_on(&config, &data, 1).unwrap();
    config.parallel = true;
    let parallel = run_experiment_on(&config, &data, 1).unwrap();
    assert_eq!(
        serial.final_params, parallel.final_params,
        "final models differ"
    );
    assert_eq!(serial.records, parallel.records, "metrics differ");
    // And a second serial run reproduces everything from scratch.
    config.parallel = false;
    let again = run_experiment_on(&config, &data, 1).unwrap();
    assert_eq!(serial.final_params, again.final_params);
    pass("C12 parallel and serial execution are bitwise identical");
}
