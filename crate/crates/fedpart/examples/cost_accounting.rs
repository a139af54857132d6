//! Communication and computation cost of heterogeneous cohorts: measured
//! averages over many sampled rounds against the analytic expectation.
//!
//! ```bash
//! cargo run -p fedpart --example cost_accounting
//! ```

use fedpart::config::ExperimentConfig;
use fedpart::extraction::Capacity;
use fedpart::federation::{submodel_param_count, trace_cohort_payloads, CapacityDistribution};
use fedpart::metrics::{cost_report, payload_bytes};
use fedpart::model::ModelSpec;

fn main() -> fedpart::Result<()> {
    let config = ExperimentConfig::default(); // uniform five-tier capacities
    let spec = ModelSpec::new(16, vec![32], 10)?;

    println!("per-capacity sub-model sizes (input 16, hidden 32, classes 10):");
    for beta in [1.0, 0.5, 0.25, 0.125, 0.0625] {
        let params = submodel_param_count(&spec, Capacity::new(beta)?)?;
        println!(
            "  beta {beta:<7} {params:>5} params, {:>6} payload bytes",
            payload_bytes(params)
        );
    }

    let trace = trace_cohort_payloads(&config, 2000, 9)?;
    let report = cost_report(&trace)?;
    let analytic = CapacityDistribution::uniform_five().expect(|beta| {
        let params = submodel_param_count(&spec, Capacity::new(beta).unwrap()).unwrap();
        payload_bytes(params) as f64
    });
    println!(
        "\nover {} rounds x cohort {}:",
        report.rounds, config.cohort_size
    );
    println!(
        "  measured avg payload {:.2} bytes",
        report.avg_payload_bytes_per_client
    );
    println!("  analytic expectation {analytic:.2} bytes");
    println!("  measured avg params  {:.2}", report.avg_params_per_client);
    println!(
        "  measured avg MACs/example {:.2}",
        report.avg_macs_per_client
    );
    Ok(())
}
