//! Synthetic Gaussian-mixture data and the two non-IID partitioners.
//!
//! ```bash
//! cargo run -p fedpart --example data_partitioning
//! ```

use fedpart::data::{
    gen_synthetic, partition_by_labels, partition_dirichlet, Dataset, PartitionPlan,
};

fn summarize(name: &str, plan: &PartitionPlan, ds: &Dataset) {
    let sizes = plan.shard_sizes();
    let labels = plan.labels_per_client(ds);
    println!("{name}:");
    println!(
        "  shard sizes  min {} max {}",
        sizes.iter().min().unwrap(),
        sizes.iter().max().unwrap()
    );
    println!(
        "  distinct labels per client  min {} max {}",
        labels.iter().min().unwrap(),
        labels.iter().max().unwrap()
    );
    let hists = plan.label_client_counts(ds);
    let dominant: Vec<f64> = hists
        .iter()
        .map(|h| {
            let total: usize = h.iter().sum();
            *h.iter().max().unwrap() as f64 / total as f64
        })
        .collect();
    let mean_dom = dominant.iter().sum::<f64>() / dominant.len() as f64;
    println!("  mean dominant-label share {mean_dom:.3}\n");
}

fn main() {
    let ds = gen_synthetic(10, 8, 200, 1.0, 42).unwrap();
    println!(
        "dataset: {} examples, {} features, {} classes, majority share {:.3}\n",
        ds.len(),
        ds.feature_dim(),
        ds.num_classes(),
        ds.majority_share()
    );

    let two = partition_by_labels(&ds, 40, 2, 7).unwrap();
    summarize("L = 2 labels per client (high heterogeneity)", &two, &ds);

    let five = partition_by_labels(&ds, 40, 5, 7).unwrap();
    summarize("L = 5 labels per client (low heterogeneity)", &five, &ds);

    let sharp = partition_dirichlet(&ds, 40, 0.1, 7).unwrap();
    summarize("Dirichlet alpha = 0.1 (sharp)", &sharp, &ds);

    let smooth = partition_dirichlet(&ds, 40, 100.0, 7).unwrap();
    summarize("Dirichlet alpha = 100 (near uniform)", &smooth, &ds);
}
