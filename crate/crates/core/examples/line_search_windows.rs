//! Effect of the nonmonotone memory `N` on the line-search solver, on one
//! SFDA instance. `N = 0` is the monotone variant.
//!
//! ```text
//! cargo run --release --example line_search_windows -- [n] [p] [r] [max N]
//! ```

use std::time::Instant;

use fracprox::sgep::{gen_sfda, sgep_default_init, SfdaRecipe};
use fracprox::{run_pgsa, run_pgsa_ls, LineSearchConfig, PgsaConfig};

fn arg(i: usize, default: usize) -> usize {
    std::env::args()
        .nth(i)
        .map(|s| s.parse().expect("numeric argument"))
        .unwrap_or(default)
}

fn main() -> fracprox::Result<()> {
    let n = arg(1, 500);
    let p = arg(2, 1000);
    let r = arg(3, 25);
    let max_window = arg(4, 8);
    let inst = gen_sfda(&SfdaRecipe::new(n, p, r, 2024, 0))?;
    let problem = &inst.problem;
    let x0 = sgep_default_init(n, r);

    println!("SFDA n={n} p={p} r={r}");
    println!(
        "{:<6} {:>12} {:>6} {:>10} {:>9}",
        "N", "objective", "iters", "backtracks", "time"
    );
    let start = Instant::now();
    let fixed = run_pgsa(problem, x0.view(), &PgsaConfig::for_problem(problem))?;
    println!(
        "{:<6} {:>12.8} {:>6} {:>10} {:>8.3}s",
        "fixed",
        fixed.final_objective(),
        fixed.len(),
        0,
        start.elapsed().as_secs_f64()
    );
    for window in 0..=max_window {
        let start = Instant::now();
        let trace = run_pgsa_ls(
            problem,
            x0.view(),
            &LineSearchConfig::for_problem(problem, window),
        )?;
        println!(
            "{:<6} {:>12.8} {:>6} {:>10} {:>8.3}s",
            window,
            trace.final_objective(),
            trace.len(),
            trace.total_backtracks(),
            start.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
