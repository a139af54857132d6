//! Expected rounds for random index selection to cover everything at least
//! m times, against the exact m*I of a cyclic window: closed form, adaptive
//! quadrature, and Monte Carlo cross-checking each other.
//!
//! ```bash
//! cargo run -p fedpart --example collector_rounds
//! ```

use fedpart::collector::{
    expected_rounds_m, expected_rounds_once, monte_carlo_rounds, rolling_rounds_to_cover,
};

fn main() {
    println!("m = 1 (touch every index once)");
    println!(
        "{:>4} {:>12} {:>12} {:>10} {:>8}",
        "I", "harmonic", "monte_carlo", "std_err", "cyclic"
    );
    for i in [2u64, 5, 10, 20, 50] {
        let exact = expected_rounds_once(i).unwrap();
        let (mc, se) = monte_carlo_rounds(i, 1, 50_000, 1).unwrap();
        println!(
            "{i:>4} {exact:>12.4} {mc:>12.4} {se:>10.4} {:>8}",
            rolling_rounds_to_cover(i, 1)
        );
    }

    println!("\nm = 3 (touch every index three times)");
    println!(
        "{:>4} {:>12} {:>12} {:>10} {:>8}",
        "I", "quadrature", "monte_carlo", "std_err", "cyclic"
    );
    for i in [2u64, 5, 10, 20, 50] {
        let exact = expected_rounds_m(i, 3).unwrap();
        let (mc, se) = monte_carlo_rounds(i, 3, 50_000, 2).unwrap();
        println!(
            "{i:>4} {exact:>12.4} {mc:>12.4} {se:>10.4} {:>8}",
            rolling_rounds_to_cover(i, 3)
        );
    }

    println!("\nthe cyclic schedule needs strictly fewer rounds for every I >= 2.");
}
