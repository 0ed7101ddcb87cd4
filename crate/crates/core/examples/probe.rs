use smallseed::chernoff::final_prg;
use smallseed::hash::HashFamily;
use smallseed::{Generator, Seed};
use rand::SeedableRng;
use std::time::Instant;
use std::hint::black_box;

fn main() {
    let g = final_prg(1 << 12, 2f64.powi(-10)).unwrap();
    let inner = g.inner();
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(7);

    // realistic random bucket partition
    let mut buckets: Vec<Vec<u32>> = vec![Vec::new(); 64];
    for i in 0..4096u32 {
        buckets[(rand::Rng::gen_range(&mut rng, 0..64u32)) as usize].push(i);
    }
    let block_seeds: Vec<Seed> = (0..64).map(|_| Seed::random(&mut rng, inner.seed_len())).collect();
    let t0 = Instant::now();
    for _ in 0..2000u32 {
        for (c, bs) in buckets.iter().zip(&block_seeds) {
            if !c.is_empty() { black_box(inner.expand_at(bs, c).unwrap()); }
        }
    }
    println!("64x inner.expand_at random gaps: {:?}", t0.elapsed() / 2000);

    // the top hash eval_all as used inside expand (gamma-biased family)
    let fam = smallseed::hash::DeltaBiasedFamily::new(4096, 64, g.params().gamma).unwrap();
    let hs = Seed::random(&mut rng, fam.seed_len());
    let t0 = Instant::now();
    for _ in 0..2000u32 { black_box(fam.eval_all(&hs).unwrap()); }
    println!("top eval_all: {:?}", t0.elapsed() / 2000);
}
