//! Records a trace to CSV, reads it back and re-checks it offline: the
//! sufficient-decrease and line-search audits, then a linear-rate fit.
//!
//! ```text
//! cargo run --release --example verify_trace -- [n] [r] [solver]
//! ```

use fracprox::io::{read_trace, rows_to_records, write_trace_file};
use fracprox::oracle::{audit_records, fit_linear_rate_errors};
use fracprox::sgep::{gen_sfda, sgep_default_init, SfdaRecipe};
use fracprox::{run_pgsa, run_pgsa_ls, LineSearchConfig, Method, PgsaConfig};

fn main() -> fracprox::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(200, |s| s.parse().expect("n"));
    let r: usize = args.next().map_or(10, |s| s.parse().expect("r"));
    let method: Method = args
        .next()
        .map_or(Method::PgsaMl, |s| s.parse().expect("solver"));

    let inst = gen_sfda(&SfdaRecipe::new(n, 1000, r, 11, 0))?;
    let problem = &inst.problem;
    let x0 = sgep_default_init(n, r);
    let trace = match method {
        Method::Pgsa => run_pgsa(
            problem,
            x0.view(),
            &PgsaConfig::for_problem(problem).with_trace(true),
        )?,
        Method::PgsaMl => run_pgsa_ls(
            problem,
            x0.view(),
            &LineSearchConfig::monotone(problem).with_trace(true),
        )?,
        Method::PgsaNl => run_pgsa_ls(
            problem,
            x0.view(),
            &LineSearchConfig::nonmonotone(problem).with_trace(true),
        )?,
    };

    let path = std::env::temp_dir().join(format!("fracprox_trace_{}.csv", std::process::id()));
    write_trace_file(&path, &trace).map_err(|e| fracprox::Error::InvalidConfig(e.to_string()))?;
    let rows = read_trace(&path).map_err(|e| fracprox::Error::InvalidConfig(e.to_string()))?;
    let _ = std::fs::remove_file(&path);

    let (f0, records) = rows_to_records(&rows);
    let report = audit_records(&trace.meta, f0, &records, method);
    println!(
        "{method}: {} iterations, final objective {:.10}",
        records.len(),
        trace.final_objective()
    );
    println!("audit: {} violations", report.violations.len());
    for v in report.violations.iter().take(5) {
        println!(
            "  iteration {} {:?} by {:.3e}",
            v.iteration, v.kind, v.magnitude
        );
    }
    let errors: Vec<f64> = rows.iter().filter_map(|row| row.err_to_final).collect();
    match fit_linear_rate_errors(&errors) {
        Ok(fit) => println!(
            "rate fit over {:?}: slope {:.4}, factor {:.4}, R^2 {:.4}",
            fit.window,
            fit.slope,
            fit.factor(),
            fit.r_squared
        ),
        Err(e) => println!("no rate fit: {e}"),
    }
    Ok(())
}
