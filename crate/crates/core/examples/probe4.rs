use std::time::Instant;
use std::hint::black_box;

fn main() {
    // integer dependent-chain baseline
    let mut x = 0x1234u64;
    let t0 = Instant::now();
    for _ in 0..100_000_000u64 { x = black_box(x).wrapping_mul(0x9e3779b97f4a7c15).rotate_left(17); }
    println!("int mul+rot chain: {:.3} ns (x={x:x})", t0.elapsed().as_nanos() as f64 / 1e8);

    // xor-shift chain
    let mut y = 0x5555u64;
    let t0 = Instant::now();
    for _ in 0..100_000_000u64 { y = black_box(y) ^ (y << 13) ^ (y >> 7); }
    println!("xor-shift chain: {:.3} ns (y={y:x})", t0.elapsed().as_nanos() as f64 / 1e8);
}
