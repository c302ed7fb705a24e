//! Times SVM training on random data: `cargo run --release --example svm_bench -- 9000 768`.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use roleprobe_core::probe::{train_linear_svm, SvmConfig};

fn main() {
    let args: Vec<usize> = std::env::args().skip(1).map(|a| a.parse().expect("integer")).collect();
    let n = args.first().copied().unwrap_or(9000);
    let d = args.get(1).copied().unwrap_or(768);
    let signal = args.get(2).copied().unwrap_or(1) as f64 / 10.0;
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(0);
    let x: Vec<f64> = (0..n * d).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
    let y: Vec<bool> = x
        .chunks(d)
        .map(|r| signal * r[0] + (rng.random::<f64>() - 0.5) > 0.0)
        .collect();
    for gap_tol in [1e-6, 1e-5, 1e-4, 1e-3] {
        let cfg = SvmConfig { gap_tol, ..Default::default() };
        let start = Instant::now();
        let report = train_linear_svm(&x, d, &y, &cfg).expect("two classes");
        println!(
            "n={n} d={d} gap_tol={gap_tol:.0e} epochs={} converged={} gap={:.2e} objective={:.6} time={:.2?}",
            report.epochs,
            report.converged,
            report.duality_gap,
            report.objective_trace.last().unwrap(),
            start.elapsed()
        );
    }
}
