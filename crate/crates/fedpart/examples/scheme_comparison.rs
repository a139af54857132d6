//! Rolling vs random vs static on the same non-IID task, same seeds.
//!
//! ```bash
//! cargo run -p fedpart --example scheme_comparison
//! ```

use fedpart::config::{DataSource, ExperimentConfig, PartitionKind};
use fedpart::extraction::Scheme;
use fedpart::federation::{prepare_data, run_experiment_on};
use fedpart::metrics::mean_and_std;

fn main() -> fedpart::Result<()> {
    let config = ExperimentConfig {
        clients: 100,
        cohort_size: 10,
        rounds: 300,
        hidden_widths: vec![32],
        initial_lr: 0.05,
        decay_milestones: vec![200, 260],
        eval_interval: 300,
        data: DataSource::Synthetic {
            classes: 10,
            features: 16,
            train_per_class: 200,
            test_per_class: 50,
            spread: 1.4,
            data_seed: 1,
        },
        partition: PartitionKind::Labels(2),
        ..ExperimentConfig::default()
    };

    let data = prepare_data(&config)?;
    let seeds = [1u64, 2, 3];
    println!(
        "{} clients, L=2, capacities {:?}, {} rounds, seeds {:?}\n",
        config.clients, config.capacities, config.rounds, seeds
    );
    for scheme in [Scheme::Rolling, Scheme::Static, Scheme::Random] {
        let mut c = config.clone();
        c.scheme = scheme;
        let finals: Vec<f64> = seeds
            .iter()
            .map(|&s| {
                Ok(run_experiment_on(&c, &data, s)?
                    .final_global_accuracy()
                    .unwrap())
            })
            .collect::<fedpart::Result<_>>()?;
        let (mean, std) = mean_and_std(&finals);
        println!(
            "{:>8}: final global accuracy {:.4} +/- {:.4}  {:?}",
            scheme.name(),
            mean,
            std,
            finals
        );
    }
    Ok(())
}
