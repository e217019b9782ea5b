//! Contingency tables and CSI for forecasts with known outcomes.
//!
//! `cargo run --example csi_evaluation`

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rcforecast::evaluate::{evaluate_slices, SliceKind, SliceMode};
use rcforecast::forecast::{select_oracle_n, ForecastRecord};

fn main() -> rcforecast::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let model_year = 2010;
    let mut records = Vec::new();
    for fy in 2008..=2012 {
        for rc in 0..400u32 {
            // outcome probability rises with the score
            let score: f64 = rng.random_range(-2.0..2.0);
            let p = 0.015 * (1.5 * score).exp();
            records.push(ForecastRecord {
                rc_id: rc,
                fy,
                ty: fy + 3,
                ry: fy - model_year,
                score,
                predicted: false,
                papers_in_fy: rng.random_range(5..200),
                outcome: Some(rng.random::<f64>() < p),
                growth_rate: None,
            });
        }
    }
    let n = select_oracle_n(&mut records)?;
    println!("global oracle-n flags {n} records");

    let reports = evaluate_slices(&records, None, 20, SliceMode::Reselected, &[SliceKind::Fy, SliceKind::Ry])?;
    println!("{:<15} {:>5} {:>6} {:>4} {:>4} {:>4} {:>4} {:>6} {:>6} {:>6}", "slice", "value", "n", "xg", "tp", "fp", "fn", "prec", "rec", "csi");
    for r in &reports {
        println!(
            "{:<15} {:>5} {:>6} {:>4} {:>4} {:>4} {:>4} {:>6.3} {:>6.3} {:>6.3}",
            r.slice.name(),
            r.value.map(|v| v.to_string()).unwrap_or_default(),
            r.records,
            r.xg,
            r.counts.tp,
            r.counts.fp,
            r.counts.fn_,
            r.precision,
            r.recall,
            r.csi
        );
    }
    Ok(())
}
