//! Raw and standardized indicators for a planted partition.
//!
//! `cargo run --release --example indicators -- [communities] [fy]`

use std::collections::HashMap;

use rcforecast::cluster::Partition;
use rcforecast::corpus::Corpus;
use rcforecast::evaluate::lifecycle_report;
use rcforecast::indicators::{compute_indicators, Indicator, RcYearTable};
use rcforecast::synth::{generate, SynthConfig};

fn main() -> rcforecast::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(400);
    let fy: i32 = args.next().and_then(|s| s.parse().ok()).unwrap_or(2010);
    let synth = SynthConfig {
        n_communities: n,
        ..SynthConfig::default()
    };
    let out = generate(&synth)?;
    let assignment: HashMap<u64, u32> = out.truth.paper_community.iter().copied().collect();
    let truth = out.truth.xg.clone();
    let corpus = Corpus::from_papers(out.papers, out.journals)?;
    let table = RcYearTable::build(&corpus, &Partition::new(assignment, synth.last_year));

    let mut rows = compute_indicators(&table, &[fy], 10)?;
    let active = rows.len();
    rows.retain(|r| r.raw.papers_in_fy >= 20);
    rows.sort_by(|a, b| b.std.get(Indicator::Cvit).total_cmp(&a.std.get(Indicator::Cvit)));
    println!("{active} communities active in {fy}; highest standardized cvit among those with 20+ papers:");
    println!("{:>5} {:>6} {:>7} {:>7} {:>7} {:>6} {:>6}  planted xg", "rc", "papers", "stage", "cvit", "Δrvit", "ntopj", "cvit_s");
    for r in rows.iter().take(12) {
        println!(
            "{:>5} {:>6} {:>7.3} {:>7.3} {:>7.2} {:>6} {:>6.2}  {}",
            r.raw.rc_id,
            r.raw.papers_in_fy,
            r.raw.stage,
            r.raw.cvit,
            r.raw.delta_rvit,
            r.raw.ntopj,
            r.std.get(Indicator::Cvit),
            truth.get(&(r.raw.rc_id, fy)).copied().unwrap_or(false)
        );
    }

    let life = lifecycle_report(&table, synth.last_year, fy, 20, 10);
    println!("\nyears since peak in {fy}:");
    for row in &life.rows {
        println!("  gap {:<4} count {:<5} xg {:?}", row.gap, row.count, row.xg);
    }
    Ok(())
}
