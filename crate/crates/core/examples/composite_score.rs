//! The published composite score on standardized indicator rows.
//!
//! `cargo run --example composite_score`

use rcforecast::forecast::{composite_score, CompositeModel};
use rcforecast::indicators::{Indicator, StandardizedIndicators};

fn main() -> rcforecast::Result<()> {
    let model = CompositeModel::default();
    for (name, w) in &model.terms {
        println!("{name:<11} {w}");
    }
    let rows = [
        (3.47, 5.03, 0.54, 3.12, 3.80),
        (3.47, 4.95, 0.50, 1.76, 3.60),
        (3.47, 4.32, -0.05, 2.76, 3.36),
        (3.47, 3.98, 1.65, 2.32, 3.32),
        (3.47, 4.43, -0.06, 0.97, 3.21),
    ];
    println!("\n stage   cvit  Δrvit  ntopj   score  printed");
    for (stage, cvit, delta, ntopj, printed) in rows {
        let mut values = [0.0; 10];
        values[Indicator::Stage.index()] = stage;
        values[Indicator::Cvit.index()] = cvit;
        values[Indicator::DeltaRvit.index()] = delta;
        values[Indicator::Ntopj.index()] = ntopj;
        let row = StandardizedIndicators {
            rc_id: 0,
            fy: 2014,
            values,
        };
        let score = composite_score(&row, &model)?;
        println!("{stage:>6.2} {cvit:>6.2} {delta:>6.2} {ntopj:>6.2} {score:>7.3} {printed:>8.2}");
    }
    Ok(())
}
