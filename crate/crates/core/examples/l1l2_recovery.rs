//! Sparse signal recovery with the `l1/l2` penalty model on an oversampled
//! DCT sensing matrix.
//!
//! ```text
//! cargo run --release --example l1l2_recovery -- [m] [n] [K] [F] [trials] [init iterations]
//! ```

use std::time::Instant;

use fracprox::l1l2::{
    initial_point, L1L2PenaltyProblem, RecoveryRecipe, RecoveryReport, DEFAULT_LAMBDA,
    INIT_ITERATIONS,
};
use fracprox::{run_pgsa_ls, LineSearchConfig};
use rayon::prelude::*;

fn arg<T: std::str::FromStr>(i: usize, default: T) -> T {
    std::env::args()
        .nth(i)
        .and_then(|s| s.parse().ok())
        .unwrap_or(default)
}

fn main() -> fracprox::Result<()> {
    let m: usize = arg(1, 64);
    let n: usize = arg(2, 1024);
    let k: usize = arg(3, 12);
    let coherence: f64 = arg(4, 1.0);
    let trials: u64 = arg(5, 50);
    let init_iterations: usize = arg(6, INIT_ITERATIONS);

    let reports: Vec<(RecoveryReport, f64)> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let inst = RecoveryRecipe {
                m,
                n,
                k,
                coherence,
                seed: 7,
                stream: trial,
            }
            .generate()?;
            let problem = L1L2PenaltyProblem::with_unit_box(inst.a, inst.b, DEFAULT_LAMBDA)?;
            let x0 = initial_point(&problem, init_iterations)?;
            let init_err = fracprox::linalg::norm2((&x0 - &inst.truth).view());
            let config = LineSearchConfig::recovery(&problem, 0);
            let start = Instant::now();
            let trace = run_pgsa_ls(&problem, x0.view(), &config)?;
            let time = start.elapsed().as_secs_f64();
            Ok((
                RecoveryReport::new(
                    trace.final_point.view(),
                    inst.truth.view(),
                    time,
                    trace.len(),
                ),
                init_err,
            ))
        })
        .collect::<fracprox::Result<_>>()?;

    let hits: Vec<&RecoveryReport> = reports.iter().map(|r| &r.0).filter(|r| r.success).collect();
    let rate = hits.len() as f64 / reports.len().max(1) as f64;
    let ratio = hits.iter().map(|r| r.objective).sum::<f64>() / hits.len().max(1) as f64;
    let iters =
        reports.iter().map(|r| r.0.iterations as f64).sum::<f64>() / reports.len().max(1) as f64;
    println!("(m, n, K, F) = ({m}, {n}, {k}, {coherence}), {trials} trials, PGSA_ML");
    println!(
        "success rate {rate:.2}  mean l1/l2 of successes {ratio:.3}  mean iterations {iters:.0}"
    );
    if std::env::var("VERBOSE").is_ok() {
        for (i, (r, e)) in reports.iter().enumerate() {
            println!(
                "{i:3} err {:.2e} init_err {e:.2e} iters {} l1/l2 {:.3}",
                r.relative_error, r.iterations, r.objective
            );
        }
    }
    Ok(())
}
