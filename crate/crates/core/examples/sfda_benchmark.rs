//! Sparse Fisher discriminant analysis on simulated two-class data.
//!
//! Runs PGSA, PGSA_ML and PGSA_NL on the same seeded instances and prints
//! the mean final objective, iterations and time per solver.
//!
//! ```text
//! cargo run --release --example sfda_benchmark -- [n] [p] [r] [seeds]
//! ```

use std::time::Instant;

use fracprox::sgep::{gen_sfda, sgep_default_init, SfdaRecipe};
use fracprox::{run_pgsa, run_pgsa_ls, LineSearchConfig, PgsaConfig, SolverTrace};
use rayon::prelude::*;

fn arg(i: usize, default: usize) -> usize {
    std::env::args()
        .nth(i)
        .map(|s| s.parse().expect("numeric argument"))
        .unwrap_or(default)
}

fn main() -> fracprox::Result<()> {
    let n = arg(1, 1000);
    let p = arg(2, 1000);
    let r = arg(3, 50);
    let seeds = arg(4, 20);
    println!("SFDA n={n} p={p} r={r}, {seeds} instances");

    let runs: Vec<[(f64, usize, f64); 3]> = (0..seeds as u64)
        .into_par_iter()
        .map(|trial| {
            let inst = gen_sfda(&SfdaRecipe::new(n, p, r, 2024, trial))?;
            let problem = &inst.problem;
            let x0 = sgep_default_init(n, r);
            let timed = |f: &dyn Fn() -> fracprox::Result<SolverTrace>| {
                let t = Instant::now();
                f().map(|tr| (tr.final_objective(), tr.len(), t.elapsed().as_secs_f64()))
            };
            Ok([
                timed(&|| run_pgsa(problem, x0.view(), &PgsaConfig::for_problem(problem)))?,
                timed(&|| run_pgsa_ls(problem, x0.view(), &LineSearchConfig::monotone(problem)))?,
                timed(&|| {
                    run_pgsa_ls(problem, x0.view(), &LineSearchConfig::nonmonotone(problem))
                })?,
            ])
        })
        .collect::<fracprox::Result<_>>()?;

    for (j, name) in ["PGSA", "PGSA_ML", "PGSA_NL"].iter().enumerate() {
        let count = runs.len().max(1) as f64;
        let obj = runs.iter().map(|r| r[j].0).sum::<f64>() / count;
        let iters = runs.iter().map(|r| r[j].1 as f64).sum::<f64>() / count;
        let time = runs.iter().map(|r| r[j].2).sum::<f64>() / count;
        println!("{name:<8} objective {obj:.4}  iterations {iters:7.1}  time {time:.3}s");
    }
    Ok(())
}
