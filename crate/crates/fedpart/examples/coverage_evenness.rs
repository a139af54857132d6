//! How evenly each scheme trains the model: per-index selection counts over
//! a fixed horizon.
//!
//! ```bash
//! cargo run -p fedpart --example coverage_evenness
//! ```

use fedpart::extraction::{coverage_counts, Capacity, OverlapStride, Scheme};

fn spread(counts: &[u64]) -> (u64, u64) {
    (*counts.iter().min().unwrap(), *counts.iter().max().unwrap())
}

fn main() {
    let k = 16;
    let beta = Capacity::new(0.25).unwrap();
    let rounds = 160; // ten full rolling cycles

    println!("width {k}, capacity {}, {rounds} rounds\n", beta.value());
    for scheme in [Scheme::Rolling, Scheme::Static, Scheme::Random] {
        let counts = coverage_counts(scheme, k, beta, rounds, OverlapStride::full(), 99).unwrap();
        let (min, max) = spread(&counts);
        println!("{:>8}: {:?}", scheme.name(), counts);
        println!("          min {min}, max {max}\n");
    }
    println!("rolling hits every index exactly floor(beta*K) times per K rounds;");
    println!("static concentrates on the prefix; random fluctuates binomially.");
}
