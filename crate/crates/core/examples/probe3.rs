use smallseed::gf2::BinaryField;
use std::time::Instant;
use std::hint::black_box;

fn main() {
    let f = BinaryField::new(63).unwrap();
    // dependent chain
    let mut x = 0x1234_5678_9abc_def0u64 & f.mask();
    let t0 = Instant::now();
    for _ in 0..10_000_000u64 { x = f.mul(black_box(x), 0x9e37_79b9_7f4a_7c15); }
    println!("dependent mul: {:.2} ns (x={x:x})", t0.elapsed().as_nanos() as f64 / 1e7);

    // independent 8-batch
    let pre = [1u64, 3, 7, 0xff, 0x5a5a, 0x1234, 0x9e37, 0x4242];
    let mut base = 0x0fed_cba9_8765_4321u64 & f.mask();
    let t0 = Instant::now();
    let mut acc = 0u64;
    for _ in 0..1_250_000u64 {
        let out = f.mul8(black_box(base), &pre);
        acc ^= out.iter().fold(0, |a, b| a ^ b);
        base = base.wrapping_add(0x1111);
    }
    println!("mul8: {:.2} ns/product (acc {acc:x})", t0.elapsed().as_nanos() as f64 / 1e7);

    // 16 independent muls plain
    let t0 = Instant::now();
    let mut vals = [0u64; 16];
    for (i, v) in vals.iter_mut().enumerate() { *v = 0x1111 * (i as u64 + 1); }
    let mut acc2 = 0u64;
    for r in 0..625_000u64 {
        for v in vals.iter_mut() { *v = f.mul(black_box(*v), 0x9e37_79b9_7f4a_7c15); }
        acc2 ^= vals[(r % 16) as usize];
    }
    println!("16 independent muls: {:.2} ns/product (acc {acc2:x})", t0.elapsed().as_nanos() as f64 / 1e7);
}
