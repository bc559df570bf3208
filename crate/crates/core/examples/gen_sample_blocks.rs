//! Writes the synthetic block/witness sample used to quantify the bundled
//! model.
//!
//! Generative model (all draws from one seeded ChaCha stream, per block):
//!   difficulty          ~ Normal(2.42e15, 0.10e15), floored at 1.9e15
//!   block_creation_time ~ Exponential(mean 13 s * difficulty / 2.42e15), capped at 47.9 s
//!   gas_limit           = 12.45e6 + 0.25e6 * z(difficulty) + Normal(0, 0.08e6)
//!   tx_count            = round(min(gas_limit / 21000, Normal(110 + 7 * creation_time, 35))), >= 0
//!   state_entries       = round(tx_count * Uniform(6, 12))
//!   witness_size_bytes  = round(state_entries * 310 * LogNormal(0, 0.35) * difficulty / 2.42e15)
//!   witness_creation    = 0.15 + 2.6 s per MB * LogNormal(0, 0.3), capped at 14.9 s
//!
//! Usage: cargo run -p oobn-lab-core --example gen_sample_blocks -- [out.csv] [rows] [seed]

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, LogNormal, Normal, Uniform};

fn main() -> std::io::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let out = args.get(1).map(String::as_str).unwrap_or("data/sample_blocks.csv");
    let rows: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(500);
    let seed: u64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(26_595);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let difficulty = Normal::<f64>::new(2.42e15, 0.10e15).unwrap();
    let unit = Normal::<f64>::new(0.0, 1.0).unwrap();
    let spread = Uniform::new(6.0, 12.0);
    let size_noise = LogNormal::new(0.0, 0.35).unwrap();
    let time_noise = LogNormal::new(0.0, 0.3).unwrap();

    let mut file = std::io::BufWriter::new(std::fs::File::create(out)?);
    writeln!(
        file,
        "block_number,difficulty,gas_limit,tx_count,state_entries_updated,block_creation_time_s,witness_size_bytes,witness_creation_time_s"
    )?;
    for i in 0..rows {
        let d = difficulty.sample(&mut rng).max(1.9e15);
        let rel = d / 2.42e15;
        let creation = Exp::new(1.0 / (13.0 * rel)).unwrap().sample(&mut rng).min(47.9);
        let gas = 12.45e6 + 0.25e6 * (d - 2.42e15) / 0.10e15 + 0.08e6 * unit.sample(&mut rng);
        let tx_mean = 110.0 + 7.0 * creation + 35.0 * unit.sample(&mut rng);
        let tx = tx_mean.min(gas / 21_000.0).max(0.0).round();
        let entries = (tx * spread.sample(&mut rng)).round();
        let size = (entries * 310.0 * size_noise.sample(&mut rng) * rel).round();
        let witness_time = (0.15 + 2.6 * size / 1e6 * time_noise.sample(&mut rng)).min(14.9);
        writeln!(
            file,
            "{},{:.0},{:.0},{},{},{:.3},{},{:.3}",
            12_000_000 + 53 * i as u64,
            d,
            gas,
            tx,
            entries,
            creation,
            size,
            witness_time
        )?;
    }
    Ok(())
}
