//! Writes a seeded synthetic corpus as JSON Lines to stdout.
//!
//! cargo run -p leadsheet-core --example synth_corpus -- [random|aaba|cycle] [count] [seed]

use std::io::{self, BufWriter};

use leadsheet_core::corpus::write_corpus;
use leadsheet_core::synth::{aaba_solo, key_cycle_corpus, random_bar, random_corpus};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> io::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let kind = args.first().map_or("random", String::as_str);
    let count: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let seed: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(0);
    let solos = match kind {
        "aaba" => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..count).map(|i| aaba_solo(&mut rng, &format!("aaba{i:03}"), 8, 120.0, random_bar)).collect()
        }
        "cycle" => key_cycle_corpus(count.div_ceil(12).max(1), 20),
        _ => random_corpus(seed, count, 40),
    };
    write_corpus(BufWriter::new(io::stdout().lock()), &solos)
}
