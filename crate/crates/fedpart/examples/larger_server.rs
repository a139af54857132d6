//! Train a server model larger than any client can hold: the server's hidden
//! layers are gamma times the client width, and each client trains a rolling
//! slice.
//!
//! ```bash
//! cargo run -p fedpart --example larger_server
//! ```

use fedpart::config::{DataSource, ExperimentConfig, PartitionKind};
use fedpart::federation::run_experiment;

fn main() -> fedpart::Result<()> {
    let base = ExperimentConfig {
        clients: 50,
        cohort_size: 10,
        rounds: 300,
        hidden_widths: vec![8], // full client model
        capacities: vec![1.0],
        capacity_probs: vec![1.0],
        initial_lr: 0.05,
        decay_milestones: vec![200, 260],
        eval_interval: 300,
        data: DataSource::Synthetic {
            classes: 10,
            features: 16,
            train_per_class: 150,
            test_per_class: 50,
            spread: 1.4,
            data_seed: 2,
        },
        partition: PartitionKind::Labels(2),
        ..ExperimentConfig::default()
    };

    println!("client hidden width 8; all clients at their largest capacity\n");
    for gamma in [1usize, 2, 4, 8] {
        let mut config = base.clone();
        config.gamma = gamma;
        let result = run_experiment(&config, 7)?;
        let server_width = result.final_params.layers()[0].weights.rows();
        println!(
            "gamma {gamma}: server hidden width {server_width:>3}, final global accuracy {:.4}",
            result.final_global_accuracy().unwrap()
        );
    }
    Ok(())
}
