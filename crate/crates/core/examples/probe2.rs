use smallseed::inw::{random_robp, InwPrg};
use smallseed::majority::large_alpha_prg;
use smallseed::{Generator, Seed};
use rand::SeedableRng;
use std::time::Instant;

fn main() {
    // cost of one large-alpha expansion at the criterion-7a point
    let g = large_alpha_prg(1 << 10, 0.0625).unwrap();
    println!("large_alpha(1024, 2^-4): seed {} bits, m={}", g.seed_len(), g.bucket_count());
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(1);
    let t0 = Instant::now();
    let reps = 2000u32;
    let mut acc = 0u32;
    for _ in 0..reps {
        let seed = Seed::random(&mut rng, g.seed_len());
        let x = g.expand(&seed).unwrap();
        acc ^= x.bit(0) as u32;
    }
    let per = t0.elapsed() / reps;
    println!("expand: {per:?} per seed -> 1e6 samples ~ {:?} on one core (acc {acc})", per * 1_000_000);

    // INW toy-margin across corpus seeds
    let g = InwPrg::new(3, 2, 8, 0.125).unwrap();
    for cs in [1u64, 2, 3, 0xf001, 42] {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(cs);
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let robp = random_robp(&mut rng, 3, 2, 8);
            let gap = (robp.uniform_acceptance() - g.exhaustive_acceptance(&robp).unwrap()).abs();
            if gap > worst { worst = gap; }
        }
        println!("corpus seed {cs}: worst gap {worst:.5}");
    }
}
