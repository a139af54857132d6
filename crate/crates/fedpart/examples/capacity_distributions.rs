//! Client capacity mixes: the two-point ratio sweep and the emulated
//! real-world device population.
//!
//! ```bash
//! cargo run -p fedpart --example capacity_distributions
//! ```

use fedpart::config::{DataSource, ExperimentConfig, PartitionKind};
use fedpart::federation::{assign_capacities, run_experiment, CapacityDistribution};

fn main() -> fedpart::Result<()> {
    // How assignments realise the requested proportions.
    let device = CapacityDistribution::device_population();
    let caps = assign_capacities(100, &device, 5)?;
    println!("device-population mix over 100 clients:");
    for (beta, expected) in device.tiers() {
        let got = caps.iter().filter(|c| c.value() == *beta).count();
        println!(
            "  capacity {beta:<7} expected {:>3}, assigned {got:>3}",
            (expected * 100.0).round() as usize
        );
    }

    // A coarse capacity-ratio sweep: what fraction of full-capacity clients
    // buys in accuracy.
    let base = ExperimentConfig {
        clients: 50,
        cohort_size: 10,
        rounds: 200,
        hidden_widths: vec![32],
        initial_lr: 0.05,
        decay_milestones: vec![150],
        eval_interval: 200,
        data: DataSource::Synthetic {
            classes: 10,
            features: 16,
            train_per_class: 100,
            test_per_class: 50,
            spread: 1.2,
            data_seed: 3,
        },
        partition: PartitionKind::Labels(2),
        ..ExperimentConfig::default()
    };

    println!("\ntwo-point mix {{1, 1/16}} at ratio rho (fraction of full-capacity clients):");
    for rho in [0.0, 0.1, 0.3, 0.6, 1.0] {
        let mut config = base.clone();
        if rho == 0.0 {
            config.capacities = vec![0.0625];
            config.capacity_probs = vec![1.0];
        } else if rho == 1.0 {
            config.capacities = vec![1.0];
            config.capacity_probs = vec![1.0];
        } else {
            config.capacities = vec![1.0, 0.0625];
            config.capacity_probs = vec![rho, 1.0 - rho];
        }
        let result = run_experiment(&config, 11)?;
        println!(
            "  rho {rho:<4}: final global accuracy {:.4}",
            result.final_global_accuracy().unwrap()
        );
    }
    Ok(())
}
