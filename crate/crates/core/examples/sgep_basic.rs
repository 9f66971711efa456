//! Sparse generalized eigenvalue problem on a small random pair, solved by
//! all three solvers and compared with exhaustive search over supports.
//!
//! ```text
//! cargo run --release --example sgep_basic -- [n] [r] [seed]
//! ```

use fracprox::sgep::{random_psd_pair, sgep_brute_force_optimum, sgep_default_init, SgepProblem};
use fracprox::{run_pgsa, run_pgsa_ls, LineSearchConfig, PgsaConfig};

const TOL: f64 = 1e-10;
const MAX_ITER: usize = 100_000;

fn arg(i: usize, default: u64) -> u64 {
    std::env::args()
        .nth(i)
        .map(|s| s.parse().expect("numeric argument"))
        .unwrap_or(default)
}

fn main() -> fracprox::Result<()> {
    let n = arg(1, 10) as usize;
    let r = arg(2, 3) as usize;
    let seed = arg(3, 1);
    let (a, b) = random_psd_pair(n, seed, 0);
    let problem = SgepProblem::new(a, b, r)?;
    let x0 = sgep_default_init(n, r);

    let traces = [
        run_pgsa(
            &problem,
            x0.view(),
            &PgsaConfig::for_problem(&problem)
                .with_step_tol(TOL)
                .with_max_iter(MAX_ITER),
        )?,
        run_pgsa_ls(
            &problem,
            x0.view(),
            &LineSearchConfig::monotone(&problem)
                .with_step_tol(TOL)
                .with_max_iter(MAX_ITER),
        )?,
        run_pgsa_ls(
            &problem,
            x0.view(),
            &LineSearchConfig::nonmonotone(&problem)
                .with_step_tol(TOL)
                .with_max_iter(MAX_ITER),
        )?,
    ];
    let (best, x_best) = sgep_brute_force_optimum(&problem)?;

    println!("n={n} r={r} seed={seed}");
    println!(
        "{:<8} {:>14} {:>6} {:>11}  support",
        "solver", "objective", "iters", "residual"
    );
    for trace in &traces {
        let c = &trace.certificate;
        let support: Vec<usize> = (0..n).filter(|&i| trace.final_point[i] != 0.0).collect();
        println!(
            "{:<8} {:>14.10} {:>6} {:>11.3e}  {support:?}",
            trace.meta.method.name(),
            c.objective,
            c.iterations,
            c.criticality_residual
        );
    }
    let support: Vec<usize> = (0..n).filter(|&i| x_best[i] != 0.0).collect();
    println!(
        "{:<8} {best:>14.10} {:>6} {:>11}  {support:?}",
        "optimum", "", ""
    );
    Ok(())
}
