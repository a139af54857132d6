//! The three sub-model extraction schemes side by side.
//!
//! ```bash
//! cargo run -p fedpart --example extraction_schemes
//! ```

use fedpart::extraction::{
    random_index_set, rolling_index_set, static_index_set, Capacity, OverlapStride,
};
use fedpart::rng::stream;

fn main() {
    let k = 10;
    let beta = Capacity::new(0.3).unwrap();

    println!(
        "layer width {k}, capacity {} -> window of {} nodes\n",
        beta.value(),
        beta.window_len(k).unwrap()
    );

    println!("rolling (window advances one node per round, wraps around):");
    for round in 0..12 {
        let set = rolling_index_set(k, beta, round, OverlapStride::full()).unwrap();
        println!("  round {round:>2}: {:?}", set.as_slice());
    }

    println!("\nrolling with overlap 0 (disjoint strides of 1 + floor(beta*K)):");
    for round in 0..4 {
        let set = rolling_index_set(k, beta, round, OverlapStride::new(0.0).unwrap()).unwrap();
        println!("  round {round:>2}: {:?}", set.as_slice());
    }

    println!("\nstatic (same prefix window every round):");
    for round in 0..3 {
        let set = static_index_set(k, beta).unwrap();
        println!("  round {round:>2}: {:?}", set.as_slice());
    }

    println!("\nrandom (fresh uniform subset per round):");
    for round in 0..3 {
        let mut rng = stream(7, &[round]);
        let set = random_index_set(k, beta, &mut rng).unwrap();
        println!("  round {round:>2}: {:?}", set.as_slice());
    }
}
