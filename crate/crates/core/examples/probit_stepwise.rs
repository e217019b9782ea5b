//! Forward stepwise probit selection on simulated data.
//!
//! `cargo run --release --example probit_stepwise -- [n] [seed]`

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use rcforecast::regression::{stepwise_select, Dataset};

fn main() -> rcforecast::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(20_000);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(7);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };

    // y* = -1.8 + 0.5·a + 0.25·b + ε; c and d are noise
    let names: Vec<String> = ["a", "b", "c", "d"].map(String::from).to_vec();
    let columns: Vec<Vec<f64>> = (0..4).map(|_| (0..n).map(|_| draw()).collect()).collect();
    let y = (0..n)
        .map(|i| -1.8 + 0.5 * columns[0][i] + 0.25 * columns[1][i] + draw() > 0.0)
        .collect();
    let data = Dataset { names, columns, y };

    let result = stepwise_select(&data, 4.0)?;
    for s in &result.steps {
        println!("step {:<3} z={:>7.2} accepted={}", s.variable, s.z, s.accepted);
    }
    let f = &result.fit;
    println!("final model, {} of {} positive:", f.n_positive, f.n_obs);
    for ((v, b), se) in f.variables.iter().zip(&f.coefficients).zip(&f.standard_errors) {
        println!("  {v:<10} {b:>8.4} ± {se:.4}");
    }
    println!(
        "log-likelihood {:.2} (null {:.2})",
        f.log_likelihood, f.null_log_likelihood
    );
    Ok(())
}
