//! Operation examples and oracle checks shared by the `operations` test
//! target and acceptance criterion 8. Each check returns `Err` with a
//! description of the first mismatch.

#![allow(dead_code)]


use std::path::Path;
use std::process::{Command, Output};

use fracprox::io::{read_trace, write_matrix};
use fracprox::l1l2::{
    gen_dct_matrix, gen_ground_truth, l1_box_initializer, l1_over_l2, l1l2_critical_residual,
    l2_subgradient, prox_l1_box, L1L2PenaltyProblem, RecoveryRecipe, INIT_ITERATIONS,
};
use fracprox::linalg::matrix_two_norm;
use fracprox::linesearch::{bb_initial_step, line_search_step, LineSearchConfig, ObjectiveWindow};
use fracprox::oracle::{
    audit_trace, fd_gradient_check, fit_linear_rate, fit_linear_rate_errors, ViolationKind,
};
use fracprox::pgsa::pgsa_step;
use fracprox::problem::{critical_point_check, quotient_frechet_residual};
use fracprox::rng::Stream;
use fracprox::sgep::{
    gen_sfda, project_sparse_sphere, random_psd_pair, sgep_brute_force_optimum,
    sgep_critical_residual, sgep_default_init, sgep_prox_f, SfdaInstance, SfdaRecipe, SgepProblem,
};
use fracprox::trace::{IterationRecord, TraceMeta};
use fracprox::{
    eval_objective, run_pgsa, run_pgsa_ls, Error, FractionalProblem, Method, PgsaConfig,
    SolverTrace, StopReason,
};
use ndarray::{array, Array1, Array2, ArrayView1};

use oracles::*;

pub type CheckResult = Result<(), String>;
pub type Check = (&'static str, fn() -> CheckResult);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

trait Context<T> {
    fn ctx(self, what: &str) -> Result<T, String>;
}

impl<T, E: std::fmt::Display> Context<T> for Result<T, E> {
    fn ctx(self, what: &str) -> Result<T, String> {
        self.map_err(|e| format!("{what}: {e}"))
    }
}

fn close(got: f64, want: f64, tol: f64, what: &str) -> CheckResult {
    ensure!(
        (got - want).abs() <= tol,
        "{what}: got {got:e}, want {want:e} (tol {tol:e})"
    );
    Ok(())
}

fn close_vec(got: ArrayView1<f64>, want: ArrayView1<f64>, tol: f64, what: &str) -> CheckResult {
    ensure!(
        got.len() == want.len(),
        "{what}: length {} vs {}",
        got.len(),
        want.len()
    );
    let err = max_abs_diff(got, want);
    ensure!(
        err <= tol,
        "{what}: got {got}, want {want}, max diff {err:e}"
    );
    Ok(())
}

/// Checks expected to pass.
macro_rules! with_checks {
    ($m:ident) => {
        $m! {
            core_eval_sgep_diagonal,
            core_eval_l1l2_origin,
            core_eval_sgep_outside_sparse_sphere,
            core_quotient_exact_stationarity,
            core_quotient_generalized_eigenvector,
            core_quotient_fd_probe,
            core_critical_full_support_eigenvector,
            core_critical_e1_single_support,
            core_critical_random_point_rejected,
            pgsa_step_fixed_point,
            pgsa_step_sgep_2x2,
            pgsa_step_l1l2_scalar,
            pgsa_run_sgep_2x2,
            pgsa_run_critical_start,
            pgsa_run_sfda_monotone_feasible,
            bb_orthogonal_pair,
            bb_half,
            bb_clamped,
            ls_critical_point_accepts_first_trial,
            ls_step_below_floor_accepts_first_trial,
            ls_huge_step_backtracks_to_floor,
            ls_monotone_beats_fixed_step,
            ls_nonmonotone_windowed_max,
            ls_critical_start,
            proj_feasible_point,
            proj_keeps_two_largest,
            proj_tie_lowest_index,
            prox_sgep_alpha_independent,
            residual_sgep_eigenvector,
            residual_sgep_single_support,
            residual_sgep_noncritical,
            two_norm_diagonal,
            two_norm_rank_one,
            two_norm_random_psd,
            sfda_between_class_identity,
            sfda_covariances_psd,
            default_init_examples,
            brute_force_diagonal,
            brute_force_full_support,
            brute_force_bounds_solvers,
            prox_l1_box_origin,
            prox_l1_box_soft_threshold,
            prox_l1_box_clip,
            l2_subgradient_examples,
            dct_entry_bounds,
            dct_deterministic,
            ground_truth_examples,
            initializer_zero_data,
            initializer_scalar,
            residual_l1l2_scalar_solver,
            residual_l1l2_interior,
            residual_l1l2_active_bound,
            l1l2_objective_equivalence,
            fd_sgep_quadratic,
            fd_l1l2_quadratic,
            fd_detects_wrong_gradient,
            audit_passing_pgsa_run,
            audit_fault_injection,
            audit_nonmonotone_windowed_max,
            rate_geometric_sequence,
            rate_pgsa_sfda,
            rate_constant_sequence,
            cli_bench_zero_trials,
            cli_bench_deterministic,
            cli_solve_diagonal,
            cli_solve_ragged_csv,
            cli_solve_r_exceeds_n,
            cli_verify_passing_trace,
            cli_verify_injected_violation,
            cli_verify_missing_file,
        }
    };
}

/// Checks implemented as stated whose targets are not met on the shipped
/// generators; see the README.
macro_rules! with_unattainable_checks {
    ($m:ident) => {
        $m! {
            dct_high_coherence,
            initializer_recovery_precondition,
        }
    };
}

#[allow(unused_imports)]
pub(crate) use {with_checks, with_unattainable_checks};

macro_rules! catalogue {
    ($($name:ident),* $(,)?) => {
        &[$((stringify!($name), $name as fn() -> CheckResult)),*]
    };
}

pub const CHECKS: &[Check] = with_checks!(catalogue);
pub const UNATTAINABLE: &[Check] = with_unattainable_checks!(catalogue);

/// Run every check, in catalogue order.
pub fn run_all() -> Vec<(&'static str, CheckResult)> {
    CHECKS
        .iter()
        .chain(UNATTAINABLE)
        .map(|(name, f)| (*name, f()))
        .collect()
}

// ---------------------------------------------------------------- instances

fn diag_pair(r: usize) -> SgepProblem {
    SgepProblem::new(
        Array2::from_diag(&array![1.0, 2.0]),
        Array2::from_diag(&array![2.0, 1.0]),
        r,
    )
    .expect("diagonal pair is valid")
}

fn random_pair(n: usize, r: usize, seed: u64, stream: u64) -> SgepProblem {
    let (a, b) = random_psd_pair(n, seed, stream);
    SgepProblem::new(a, b, r).expect("Wishart pair is valid")
}

fn sfda_200(stream: u64) -> SfdaInstance {
    gen_sfda(&SfdaRecipe::new(200, 1000, 10, 11, stream)).expect("sfda instance")
}

fn scalar_l1l2(a: f64, b: f64, lambda: f64) -> L1L2PenaltyProblem {
    L1L2PenaltyProblem::with_unit_box(array![[a]], array![b], lambda).expect("scalar problem")
}

fn uniform_unit(stream: &mut Stream, n: usize) -> Array1<f64> {
    let x = Array1::from_shape_simple_fn(n, || stream.normal());
    let nx = x.dot(&x).sqrt();
    x / nx
}

// ---------------------------------------------------------- fractional core

pub fn core_eval_sgep_diagonal() -> CheckResult {
    let p = SgepProblem::new(Array2::eye(2), Array2::eye(2) * 2.0, 1).ctx("problem")?;
    let obj = eval_objective(&p, array![1.0, 0.0].view()).ctx("eval")?;
    ensure!(obj.in_domain, "x = (1, 0) should be in the domain");
    close(obj.numerator, 1.0, 0.0, "numerator")?;
    close(obj.denominator, 0.5, 0.0, "denominator")?;
    close(obj.value, 2.0, 0.0, "value")
}

pub fn core_eval_l1l2_origin() -> CheckResult {
    let p =
        L1L2PenaltyProblem::with_unit_box(array![[1.0, 2.0], [0.5, -1.0]], array![1.0, 0.0], 0.1)
            .ctx("problem")?;
    let obj = eval_objective(&p, array![0.0, 0.0].view()).ctx("eval")?;
    ensure!(
        obj.denominator == 0.0,
        "denominator {} at the origin",
        obj.denominator
    );
    ensure!(
        obj.value == f64::INFINITY && !obj.in_domain,
        "value {} at the origin",
        obj.value
    );
    Ok(())
}

pub fn core_eval_sgep_outside_sparse_sphere() -> CheckResult {
    let p = SgepProblem::new(Array2::eye(3), Array2::eye(3), 1).ctx("problem")?;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let obj = eval_objective(&p, array![h, h, 0.0].view()).ctx("eval")?;
    ensure!(
        obj.value == f64::INFINITY,
        "value {} for a 2-sparse point with r = 1",
        obj.value
    );
    Ok(())
}

pub fn core_quotient_exact_stationarity() -> CheckResult {
    let p = random_pair(4, 4, 3, 0);
    let mut s = Stream::new(3, 100);
    for _ in 0..10 {
        let x = uniform_unit(&mut s, 4);
        let f = p.ratio(x.view());
        let v = &p.subgrad_g(x.view()) * f - &p.grad_h(x.view());
        let res = quotient_frechet_residual(&p, x.view(), v.view()).ctx("residual")?;
        ensure!(res <= 1e-12, "residual {res:e} with v = F grad g - grad h");
    }
    Ok(())
}

pub fn core_quotient_generalized_eigenvector() -> CheckResult {
    let p = diag_pair(2);
    let res = quotient_frechet_residual(&p, array![0.0, 1.0].view(), array![0.0, 0.0].view())
        .ctx("residual")?;
    close(res, 0.0, 0.0, "residual at (0, 1)")
}

pub fn core_quotient_fd_probe() -> CheckResult {
    let a = Array2::from_diag(&array![1.0, 2.0, 3.0]);
    let b = Array2::from_diag(&array![2.0, 1.0, 1.5]);
    let p = SgepProblem::new(a.clone(), b.clone(), 3).ctx("problem")?;
    let mut s = Stream::new(5, 0);
    for _ in 0..5 {
        let x = uniform_unit(&mut s, 3);
        let res =
            quotient_frechet_residual(&p, x.view(), Array1::zeros(3).view()).ctx("residual")?;
        let quotient = |y: ArrayView1<f64>| y.dot(&b.dot(&y)) / y.dot(&a.dot(&y));
        let fd = central_gradient(quotient, x.view(), 1e-6);
        let want = fd.dot(&fd).sqrt();
        ensure!(
            (res - want).abs() <= 1e-6,
            "residual {res} vs finite-difference probe {want}"
        );
    }
    Ok(())
}

pub fn core_critical_full_support_eigenvector() -> CheckResult {
    for stream in 0..5 {
        let p = random_pair(4, 4, 9, stream);
        let (_, vecs) = generalized_eigen(&p.a().to_owned(), &p.b().to_owned())?;
        for v in vecs {
            let ok = critical_point_check(&p, v.view(), 1e-8).ctx("check")?;
            ensure!(
                ok,
                "generalized eigenvector {v} not reported critical (stream {stream})"
            );
        }
    }
    Ok(())
}

pub fn core_critical_e1_single_support() -> CheckResult {
    let ok = critical_point_check(&diag_pair(1), array![1.0, 0.0].view(), 1e-8).ctx("check")?;
    ensure!(ok, "e1 should be critical for r = 1");
    Ok(())
}

pub fn core_critical_random_point_rejected() -> CheckResult {
    let p = random_pair(5, 5, 13, 0);
    let mut s = Stream::new(13, 1);
    for _ in 0..5 {
        let x = uniform_unit(&mut s, 5);
        let oracle = eigen_residual(&p.a().to_owned(), &p.b().to_owned(), x.view());
        ensure!(
            oracle > 1e-6,
            "random point is nearly critical by the oracle ({oracle:e})"
        );
        let ok = critical_point_check(&p, x.view(), 1e-8).ctx("check")?;
        ensure!(
            !ok,
            "random point with oracle residual {oracle:e} reported critical"
        );
    }
    Ok(())
}

// --------------------------------------------------------------------- pgsa

pub fn pgsa_step_fixed_point() -> CheckResult {
    let p = diag_pair(2);
    let x = array![0.0, 1.0];
    for alpha in [0.1, 0.4, 0.99 / p.lipschitz()] {
        let next = pgsa_step(&p, x.view(), alpha).ctx("step")?;
        close_vec(
            next.view(),
            x.view(),
            0.0,
            &format!("step from (0, 1) at alpha {alpha}"),
        )?;
    }
    Ok(())
}

pub fn pgsa_step_sgep_2x2() -> CheckResult {
    let p = diag_pair(2);
    let x = array![1.0, 0.0];
    let alpha = 0.4;
    // c = 2, grad h = B x = (2, 0), y = A x = (1, 0)
    let anchor = array![1.0 - alpha * 2.0 + alpha * 2.0 * 1.0, 0.0];
    let want = exhaustive_projection(anchor.view(), 2).0;
    let got = pgsa_step(&p, x.view(), alpha).ctx("step")?;
    close_vec(got.view(), want.view(), 1e-15, "step")?;
    close_vec(got.view(), array![1.0, 0.0].view(), 0.0, "step")
}

pub fn pgsa_step_l1l2_scalar() -> CheckResult {
    let p = scalar_l1l2(1.0, 1.0, 0.1);
    let (x, alpha, lambda) = (0.5, 0.4, 0.1);
    let c = (lambda * x + 0.5 * (x - 1.0_f64).powi(2)) / x;
    close(c, 0.35, 1e-15, "c")?;
    let anchor = x - alpha * (x - 1.0) + alpha * c * 1.0;
    close(anchor, 0.84, 1e-15, "anchor")?;
    let grid = grid_prox(anchor, alpha * lambda, -1.0, 1.0, 1e-5);
    let got = pgsa_step(&p, array![x].view(), alpha).ctx("step")?[0];
    close(got, 0.8, 1e-12, "step")?;
    close(got, grid, 2e-5, "step vs grid oracle")
}

pub fn pgsa_run_sgep_2x2() -> CheckResult {
    let p = diag_pair(2);
    let (values, _) = generalized_eigen(&p.a().to_owned(), &p.b().to_owned())?;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let config = PgsaConfig::for_problem(&p)
        .with_max_iter(10_000)
        .with_step_tol(1e-12);
    let trace = run_pgsa(&p, array![h, h].view(), &config).ctx("run")?;
    close(
        trace.final_objective(),
        values[0],
        1e-9,
        "final objective vs eigenvalue oracle",
    )?;
    close(trace.final_objective(), 0.5, 1e-9, "final objective")?;
    let x = &trace.final_point;
    close(x[0], 0.0, 1e-6, "x[0]")?;
    close(x[1].abs(), 1.0, 1e-9, "|x[1]|")
}

pub fn pgsa_run_critical_start() -> CheckResult {
    let p = diag_pair(2);
    let trace = run_pgsa(&p, array![0.0, 1.0].view(), &PgsaConfig::for_problem(&p)).ctx("run")?;
    ensure!(trace.len() == 1, "trace length {}", trace.len());
    ensure!(
        trace.certificate.converged_reason == StopReason::StepTol,
        "reason {:?}",
        trace.certificate.converged_reason
    );
    Ok(())
}

pub fn pgsa_run_sfda_monotone_feasible() -> CheckResult {
    let inst = sfda_200(0);
    let p = &inst.problem;
    let x0 = sgep_default_init(p.n(), p.r());
    let trace = run_pgsa(p, x0.view(), &PgsaConfig::for_problem(p).with_trace(true)).ctx("run")?;
    let objectives = trace.objectives();
    for k in 1..objectives.len() {
        ensure!(
            objectives[k] <= objectives[k - 1] + 1e-12,
            "F increased at iteration {k}: {} -> {}",
            objectives[k - 1],
            objectives[k]
        );
    }
    for (k, x) in trace.iterates.as_ref().unwrap().iter().enumerate() {
        let nnz = x.iter().filter(|v| **v != 0.0).count();
        ensure!(nnz <= p.r(), "iterate {k} has {nnz} nonzeros");
        close(x.dot(x).sqrt(), 1.0, 1e-12, &format!("norm of iterate {k}"))?;
    }
    Ok(())
}

// --------------------------------------------------------------- linesearch

pub fn bb_orthogonal_pair() -> CheckResult {
    close(
        bb_initial_step(array![1.0, 0.0].view(), array![0.0, 0.0].view(), 0.1, 10.0),
        10.0,
        0.0,
        "dh = 0",
    )?;
    close(
        bb_initial_step(array![1.0, 0.0].view(), array![0.0, 3.0].view(), 0.1, 10.0),
        10.0,
        0.0,
        "orthogonal",
    )
}

pub fn bb_half() -> CheckResult {
    close(
        bb_initial_step(array![1.0, 0.0].view(), array![2.0, 0.0].view(), 0.1, 10.0),
        0.5,
        0.0,
        "step",
    )
}

pub fn bb_clamped() -> CheckResult {
    close(
        bb_initial_step(array![1.0, 0.0].view(), array![0.01, 0.0].view(), 0.1, 10.0),
        10.0,
        0.0,
        "step",
    )
}

pub fn ls_critical_point_accepts_first_trial() -> CheckResult {
    let p = diag_pair(2);
    let x = array![0.0, 1.0];
    let config = LineSearchConfig::monotone(&p);
    let window = ObjectiveWindow::new(0, p.ratio(x.view()));
    for alpha0 in [0.1, 1.0, 1e3] {
        let out = line_search_step(&p, x.view(), &window, alpha0, &config).ctx("search")?;
        ensure!(
            out.backtracks == 0,
            "{} backtracks at alpha0 {alpha0}",
            out.backtracks
        );
        close_vec(out.point.view(), x.view(), 0.0, "accepted point")?;
        close(out.alpha, alpha0, 0.0, "accepted alpha")?;
    }
    Ok(())
}

pub fn ls_step_below_floor_accepts_first_trial() -> CheckResult {
    for stream in 0..10 {
        let p = random_pair(8, 3, 17, stream);
        let config = LineSearchConfig::monotone(&p);
        let m = 0.5
            * symmetric_eigenvalues(&p.a().to_owned())
                .last()
                .copied()
                .unwrap();
        let l = symmetric_eigenvalues(&p.b().to_owned())
            .last()
            .copied()
            .unwrap();
        let floor = config.eta / (config.a * m + l);
        let mut x = sgep_default_init(8, 3);
        for _ in 0..5 {
            let window = ObjectiveWindow::new(0, p.ratio(x.view()));
            let out =
                line_search_step(&p, x.view(), &window, 0.999 * floor, &config).ctx("search")?;
            ensure!(
                out.backtracks == 0,
                "{} backtracks below the floor (stream {stream})",
                out.backtracks
            );
            x = out.point;
        }
    }
    Ok(())
}

pub fn ls_huge_step_backtracks_to_floor() -> CheckResult {
    let p = scalar_l1l2(1.0, 0.5, 0.1);
    let config = LineSearchConfig::monotone(&p);
    let x = array![0.3];
    let window = ObjectiveWindow::new(0, eval_objective(&p, x.view()).ctx("eval")?.value);
    let out = line_search_step(&p, x.view(), &window, 1e3, &config).ctx("search")?;
    // M = |max(|lower|, |upper|)|_2 = 1 and L = |A|_2^2 = 1
    let floor = config.eta / (config.a * 1.0 + 1.0);
    ensure!(out.backtracks >= 1, "no backtracking from alpha0 = 1e3");
    ensure!(
        out.alpha >= floor - 1e-12,
        "accepted alpha {} below floor {floor}",
        out.alpha
    );
    Ok(())
}

pub fn ls_monotone_beats_fixed_step() -> CheckResult {
    let p = diag_pair(2);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let x0 = array![h, h];
    let fixed = run_pgsa(
        &p,
        x0.view(),
        &PgsaConfig::for_problem(&p)
            .with_max_iter(10_000)
            .with_step_tol(1e-10),
    )
    .ctx("pgsa")?;
    let ls = run_pgsa_ls(
        &p,
        x0.view(),
        &LineSearchConfig::monotone(&p)
            .with_max_iter(10_000)
            .with_step_tol(1e-10),
    )
    .ctx("pgsa_ml")?;
    close(ls.final_objective(), 0.5, 1e-9, "pgsa_ml objective")?;
    close(ls.final_point[1].abs(), 1.0, 1e-9, "|x[1]|")?;
    ensure!(
        ls.len() < fixed.len(),
        "pgsa_ml used {} iterations, pgsa {}",
        ls.len(),
        fixed.len()
    );
    Ok(())
}

fn windowed_maxima(objectives: &[f64], n: usize) -> Vec<f64> {
    (0..objectives.len())
        .map(|k| {
            objectives[k.saturating_sub(n)..=k]
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

pub fn ls_nonmonotone_windowed_max() -> CheckResult {
    for stream in 0..3 {
        let inst = sfda_200(stream);
        let p = &inst.problem;
        let x0 = sgep_default_init(p.n(), p.r());
        let trace = run_pgsa_ls(p, x0.view(), &LineSearchConfig::nonmonotone(p)).ctx("run")?;
        let maxima = windowed_maxima(&trace.objectives(), 4);
        for k in 1..maxima.len() {
            ensure!(
                maxima[k] <= maxima[k - 1] + 1e-12 * (1.0 + maxima[k - 1].abs()),
                "windowed max increased at iteration {k} (stream {stream})"
            );
        }
    }
    Ok(())
}

pub fn ls_critical_start() -> CheckResult {
    let p = diag_pair(2);
    for config in [
        LineSearchConfig::monotone(&p),
        LineSearchConfig::nonmonotone(&p),
    ] {
        let trace = run_pgsa_ls(&p, array![0.0, 1.0].view(), &config).ctx("run")?;
        ensure!(
            trace.len() == 1,
            "{} iterations from a critical start",
            trace.len()
        );
        ensure!(
            trace.certificate.converged_reason == StopReason::StepTol,
            "not stopped by step_tol"
        );
    }
    Ok(())
}

// --------------------------------------------------------------------- sgep

pub fn proj_feasible_point() -> CheckResult {
    let got = project_sparse_sphere(array![1.0, 0.0, 0.0].view(), 2).ctx("projection")?;
    close_vec(got.view(), array![1.0, 0.0, 0.0].view(), 0.0, "projection")
}

pub fn proj_keeps_two_largest() -> CheckResult {
    let x = array![3.0, -4.0, 1.0];
    let got = project_sparse_sphere(x.view(), 2).ctx("projection")?;
    close_vec(
        got.view(),
        array![0.6, -0.8, 0.0].view(),
        1e-15,
        "projection",
    )?;
    let (best, _) = exhaustive_projection(x.view(), 2);
    close_vec(
        got.view(),
        best.view(),
        1e-15,
        "projection vs exhaustive oracle",
    )
}

pub fn proj_tie_lowest_index() -> CheckResult {
    let x = array![1.0, 1.0, 0.0];
    let got = project_sparse_sphere(x.view(), 1).ctx("projection")?;
    close_vec(got.view(), array![1.0, 0.0, 0.0].view(), 0.0, "projection")?;
    let (_, minimizers) = exhaustive_projection(x.view(), 1);
    ensure!(
        minimizers.contains(&vec![0]) && minimizers.contains(&vec![1]),
        "oracle minimizing supports {minimizers:?}"
    );
    Ok(())
}

pub fn prox_sgep_alpha_independent() -> CheckResult {
    let mut s = Stream::new(23, 0);
    for r in 1..=4 {
        let z = Array1::from_shape_simple_fn(6, || s.normal());
        let reference = project_sparse_sphere(z.view(), r).ctx("projection")?;
        for alpha in [0.1, 1.0, 10.0] {
            let got = sgep_prox_f(alpha, z.view(), r).ctx("prox")?;
            ensure!(
                got == reference,
                "prox at alpha {alpha} differs from the projection"
            );
        }
    }
    Ok(())
}

pub fn residual_sgep_eigenvector() -> CheckResult {
    close(
        sgep_critical_residual(&diag_pair(2), array![0.0, 1.0].view()).ctx("residual")?,
        0.0,
        0.0,
        "residual",
    )
}

pub fn residual_sgep_single_support() -> CheckResult {
    close(
        sgep_critical_residual(&diag_pair(1), array![1.0, 0.0].view()).ctx("residual")?,
        0.0,
        0.0,
        "residual",
    )
}

pub fn residual_sgep_noncritical() -> CheckResult {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let x = array![h, h];
    let p = diag_pair(2);
    let oracle = eigen_residual(&p.a().to_owned(), &p.b().to_owned(), x.view());
    close(oracle, 1.0, 1e-15, "oracle residual")?;
    close(
        sgep_critical_residual(&p, x.view()).ctx("residual")?,
        1.0,
        1e-15,
        "residual",
    )
}

pub fn two_norm_diagonal() -> CheckResult {
    let m = Array2::from_diag(&array![1.0, 2.0, 3.0]);
    close(
        matrix_two_norm(m.view()).ctx("norm")?,
        3.0,
        1e-9,
        "|diag(1,2,3)|",
    )
}

pub fn two_norm_rank_one() -> CheckResult {
    let v = array![1.2, -1.6, 0.0];
    let m = outer(v.view(), v.view());
    close(matrix_two_norm(m.view()).ctx("norm")?, 4.0, 1e-9, "|v v^T|")
}

pub fn two_norm_random_psd() -> CheckResult {
    for stream in 0..5 {
        let (a, _) = random_psd_pair(10, 29, stream);
        let got = matrix_two_norm(a.view()).ctx("norm")?;
        let want = symmetric_eigenvalues(&a).last().copied().unwrap();
        ensure!(
            (got - want).abs() <= 1e-8 * want,
            "power iteration {got} vs eigensolver {want}"
        );
    }
    Ok(())
}

pub fn sfda_between_class_identity() -> CheckResult {
    let recipe = SfdaRecipe::new(200, 300, 10, 31, 0);
    let inst = gen_sfda(&recipe).ctx("gen")?;
    let (p1, p2, p) = (recipe.p1 as f64, recipe.p2 as f64, recipe.p() as f64);
    let want = (outer(inst.mean1.view(), inst.mean1.view()) * p1
        + outer(inst.mean2.view(), inst.mean2.view()) * p2)
        / p;
    let err = (&want - &inst.problem.a())
        .iter()
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    let scale = want.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    ensure!(err <= 1e-15 * scale, "between-class mismatch {err:e}");
    Ok(())
}

pub fn sfda_covariances_psd() -> CheckResult {
    let recipe = SfdaRecipe::new(200, 300, 10, 31, 1);
    let inst = gen_sfda(&recipe).ctx("gen")?;
    let a = inst.problem.a().to_owned();
    let mut within = inst.problem.b().to_owned();
    within.diag_mut().mapv_inplace(|v| v - recipe.ridge);
    for (name, m) in [("between", &a), ("within", &within)] {
        ensure!(m == &m.t(), "{name} not symmetric");
        let low = symmetric_eigenvalues(m)[0];
        ensure!(low >= -1e-10, "{name} smallest eigenvalue {low:e}");
    }
    Ok(())
}

pub fn default_init_examples() -> CheckResult {
    close_vec(
        sgep_default_init(4, 1).view(),
        array![1.0, 0.0, 0.0, 0.0].view(),
        0.0,
        "(4, 1)",
    )?;
    let t = 1.0 / 3.0_f64.sqrt();
    close_vec(
        sgep_default_init(3, 3).view(),
        array![t, t, t].view(),
        1e-16,
        "(3, 3)",
    )?;
    for (n, r) in [(1, 1), (7, 3), (1000, 50), (200, 10), (10, 10)] {
        let x = sgep_default_init(n, r);
        close(x.dot(&x).sqrt(), 1.0, 1e-15, &format!("norm at ({n}, {r})"))?;
    }
    Ok(())
}

pub fn brute_force_diagonal() -> CheckResult {
    let (value, x) = sgep_brute_force_optimum(&diag_pair(1)).ctx("oracle")?;
    close(value, 0.5, 1e-15, "value")?;
    close(x[0], 0.0, 0.0, "x[0]")?;
    close(x[1].abs(), 1.0, 1e-15, "|x[1]|")
}

pub fn brute_force_full_support() -> CheckResult {
    for stream in 0..5 {
        let p = random_pair(4, 4, 37, stream);
        let (values, _) = generalized_eigen(&p.a().to_owned(), &p.b().to_owned())?;
        let (value, _) = sgep_brute_force_optimum(&p).ctx("oracle")?;
        ensure!(
            (value - values[0]).abs() <= 1e-10 * values[0].abs().max(1.0),
            "oracle {value} vs eigenvalue {}",
            values[0]
        );
    }
    Ok(())
}

pub fn brute_force_bounds_solvers() -> CheckResult {
    for stream in 0..10 {
        let p = random_pair(8, 2, 41, stream);
        let (best, _) = sgep_brute_force_optimum(&p).ctx("oracle")?;
        let x0 = sgep_default_init(8, 2);
        let runs = [
            run_pgsa(
                &p,
                x0.view(),
                &PgsaConfig::for_problem(&p)
                    .with_max_iter(100_000)
                    .with_step_tol(1e-10),
            ),
            run_pgsa_ls(
                &p,
                x0.view(),
                &LineSearchConfig::monotone(&p)
                    .with_max_iter(100_000)
                    .with_step_tol(1e-10),
            ),
            run_pgsa_ls(
                &p,
                x0.view(),
                &LineSearchConfig::nonmonotone(&p)
                    .with_max_iter(100_000)
                    .with_step_tol(1e-10),
            ),
        ];
        for run in runs {
            let trace = run.ctx("run")?;
            ensure!(
                trace.final_objective() >= best - 1e-9,
                "solver value {} below the global optimum {best} (stream {stream})",
                trace.final_objective()
            );
        }
    }
    Ok(())
}

// --------------------------------------------------------------------- l1l2

fn unit_box(n: usize) -> (Array1<f64>, Array1<f64>) {
    (Array1::from_elem(n, -1.0), Array1::from_elem(n, 1.0))
}

pub fn prox_l1_box_origin() -> CheckResult {
    let (lo, hi) = unit_box(3);
    for t in [0.0, 0.2, 5.0] {
        let got = prox_l1_box(Array1::zeros(3).view(), t, lo.view(), hi.view()).ctx("prox")?;
        close_vec(got.view(), Array1::zeros(3).view(), 0.0, "prox of zero")?;
    }
    Ok(())
}

pub fn prox_l1_box_soft_threshold() -> CheckResult {
    let (lo, hi) = unit_box(1);
    let got = prox_l1_box(array![0.5].view(), 0.2, lo.view(), hi.view()).ctx("prox")?[0];
    close(got, 0.3, 1e-15, "prox")?;
    close(
        got,
        grid_prox(0.5, 0.2, -1.0, 1.0, 1e-5),
        2e-5,
        "prox vs grid oracle",
    )
}

pub fn prox_l1_box_clip() -> CheckResult {
    let (lo, hi) = unit_box(1);
    let got = prox_l1_box(array![2.0].view(), 0.2, lo.view(), hi.view()).ctx("prox")?[0];
    close(got, 1.0, 0.0, "prox")?;
    close(
        got,
        grid_prox(2.0, 0.2, -1.0, 1.0, 1e-5),
        2e-5,
        "prox vs grid oracle",
    )
}

pub fn l2_subgradient_examples() -> CheckResult {
    close_vec(
        l2_subgradient(array![3.0, 4.0].view()).view(),
        array![0.6, 0.8].view(),
        1e-15,
        "(3, 4)",
    )?;
    close_vec(
        l2_subgradient(array![0.0, 0.0].view()).view(),
        array![0.0, 0.0].view(),
        0.0,
        "origin",
    )?;
    for e in [
        array![1.0, 0.0, 0.0],
        array![0.0, -1.0, 0.0],
        array![0.6, 0.0, -0.8],
    ] {
        close_vec(
            l2_subgradient(e.view()).view(),
            e.view(),
            1e-15,
            "unit vector",
        )?;
    }
    Ok(())
}

pub fn dct_entry_bounds() -> CheckResult {
    let m = 64;
    let a = gen_dct_matrix(m, 1024, 1.0, &mut Stream::new(3, 0));
    let bound = 1.0 / (m as f64).sqrt();
    let worst = a.iter().fold(0.0_f64, |w, v| w.max(v.abs()));
    ensure!(worst <= bound, "entry {worst} exceeds {bound}");
    Ok(())
}

pub fn dct_high_coherence() -> CheckResult {
    let a = gen_dct_matrix(64, 1024, 20.0, &mut Stream::new(3, 1));
    let mut total = 0.0;
    for j in 0..50 {
        let (u, v) = (a.column(j), a.column(j + 1));
        total += u.dot(&v).abs() / (u.dot(&u).sqrt() * v.dot(&v).sqrt());
    }
    let mean = total / 50.0;
    ensure!(mean >= 0.99, "mean adjacent coherence {mean}");
    Ok(())
}

pub fn dct_deterministic() -> CheckResult {
    let a = gen_dct_matrix(16, 64, 5.0, &mut Stream::new(8, 2));
    let b = gen_dct_matrix(16, 64, 5.0, &mut Stream::new(8, 2));
    ensure!(a == b, "same seed gave different matrices");
    let c = gen_dct_matrix(16, 64, 5.0, &mut Stream::new(8, 3));
    ensure!(a != c, "different streams gave the same matrix");
    Ok(())
}

pub fn ground_truth_examples() -> CheckResult {
    for (n, k) in [(1024, 12), (50, 1), (20, 20)] {
        let x = gen_ground_truth(n, k, &mut Stream::new(4, n as u64));
        close(x.dot(&x).sqrt(), 1.0, 1e-15, "norm")?;
        let nnz = x.iter().filter(|v| **v != 0.0).count();
        ensure!(nnz == k, "{nnz} nonzeros, want {k}");
        ensure!(
            x == gen_ground_truth(n, k, &mut Stream::new(4, n as u64)),
            "not deterministic"
        );
    }
    Ok(())
}

pub fn initializer_zero_data() -> CheckResult {
    let p =
        L1L2PenaltyProblem::with_unit_box(array![[1.0, 0.5], [0.0, 1.0]], array![0.0, 0.0], 0.1)
            .ctx("problem")?;
    match l1_box_initializer(&p, 100) {
        Err(Error::Degenerate(_)) => Ok(()),
        other => Err(format!("expected a degenerate-init error, got {other:?}")),
    }
}

pub fn initializer_scalar() -> CheckResult {
    let p = scalar_l1l2(1.0, 0.5, 0.1);
    let x = l1_box_initializer(&p, INIT_ITERATIONS).ctx("initializer")?[0];
    let mu = 1e-6 * 0.5;
    close(x, 0.5 - mu, 1e-6, "scalar initializer")
}

pub fn initializer_recovery_precondition() -> CheckResult {
    let trials = 50;
    let mut good = 0;
    for stream in 0..trials {
        let inst = RecoveryRecipe {
            m: 64,
            n: 1024,
            k: 12,
            coherence: 1.0,
            seed: 7,
            stream,
        }
        .generate()
        .ctx("instance")?;
        let p = L1L2PenaltyProblem::with_unit_box(inst.a, inst.b, fracprox::l1l2::DEFAULT_LAMBDA)
            .ctx("problem")?;
        let x = l1_box_initializer(&p, INIT_ITERATIONS).ctx("initializer")?;
        let err =
            (&x - &inst.truth).mapv(|v| v * v).sum().sqrt() / inst.truth.dot(&inst.truth).sqrt();
        if err <= 0.2 {
            good += 1;
        }
    }
    let share = good as f64 / trials as f64;
    ensure!(
        share >= 0.8,
        "initializer within 0.2 of the truth in {good}/{trials} = {share:.2} of seeds, need 0.80"
    );
    Ok(())
}

pub fn residual_l1l2_scalar_solver() -> CheckResult {
    let p = scalar_l1l2(1.0, 1.0, 0.1);
    let config = LineSearchConfig::monotone(&p)
        .with_step_tol(1e-12)
        .with_max_iter(10_000);
    let trace = run_pgsa_ls(&p, array![0.5].view(), &config).ctx("run")?;
    let res = l1l2_critical_residual(&p, trace.final_point.view()).ctx("residual")?;
    ensure!(
        res <= 1e-8,
        "residual {res:e} at the solver's stationary point"
    );
    let trace = run_pgsa(
        &p,
        array![0.5].view(),
        &PgsaConfig::for_problem(&p)
            .with_step_tol(1e-12)
            .with_max_iter(10_000),
    )
    .ctx("run")?;
    let res = l1l2_critical_residual(&p, trace.final_point.view()).ctx("residual")?;
    ensure!(
        res <= 1e-8,
        "residual {res:e} at the fixed-step stationary point"
    );
    Ok(())
}

pub fn residual_l1l2_interior() -> CheckResult {
    // x = b puts h at zero, so u = F - (x - b) = lambda exactly
    let p = scalar_l1l2(1.0, 0.5, 0.1);
    close(
        l1l2_critical_residual(&p, array![0.5].view()).ctx("residual")?,
        0.0,
        0.0,
        "residual",
    )
}

pub fn residual_l1l2_active_bound() -> CheckResult {
    // at x = 1, u = lambda + d^2/2 - d with d = 1 - b; d = 1 + sqrt(11) gives u = lambda + 5
    let lambda = 0.1;
    let d = 1.0 + 11.0_f64.sqrt();
    let p = scalar_l1l2(1.0, 1.0 - d, lambda);
    let obj = eval_objective(&p, array![1.0].view()).ctx("eval")?;
    let u = obj.value - (1.0 - (1.0 - d));
    close(u, lambda + 5.0, 1e-12, "u")?;
    close(
        l1l2_critical_residual(&p, array![1.0].view()).ctx("residual")?,
        0.0,
        0.0,
        "residual",
    )
}

pub fn l1l2_objective_equivalence() -> CheckResult {
    let inst = RecoveryRecipe {
        m: 32,
        n: 128,
        k: 5,
        coherence: 1.0,
        seed: 43,
        stream: 0,
    }
    .generate()
    .ctx("instance")?;
    let lambda = 8e-5;
    let p =
        L1L2PenaltyProblem::with_unit_box(inst.a.clone(), inst.b.clone(), lambda).ctx("problem")?;
    let x = &inst.truth;
    let l1 = x.iter().map(|v| v.abs()).sum::<f64>();
    let obj = eval_objective(&p, x.view()).ctx("eval")?;
    close(obj.value, lambda * l1, 1e-15, "objective at the truth")?;
    close(
        l1_over_l2(x.view()),
        l1_over_l2((x * 3.0).view()),
        1e-15 * l1,
        "scale invariance",
    )
}

// ------------------------------------------------------------------- oracle

pub fn fd_sgep_quadratic() -> CheckResult {
    let p = random_pair(12, 3, 47, 0);
    let mut s = Stream::new(47, 1);
    let x = Array1::from_shape_simple_fn(12, || s.normal());
    let err = fd_gradient_check(|y| p.eval_h(y), |y| p.grad_h(y), x.view(), 1e-5);
    ensure!(err <= 1e-6, "sgep h gradient error {err:e}");
    Ok(())
}

pub fn fd_l1l2_quadratic() -> CheckResult {
    let inst = RecoveryRecipe {
        m: 16,
        n: 40,
        k: 3,
        coherence: 1.0,
        seed: 53,
        stream: 0,
    }
    .generate()
    .ctx("instance")?;
    let p = L1L2PenaltyProblem::with_unit_box(inst.a, inst.b, 8e-5).ctx("problem")?;
    let mut s = Stream::new(53, 1);
    let x = Array1::from_shape_simple_fn(40, || s.normal());
    let err = fd_gradient_check(|y| p.eval_h(y), |y| p.grad_h(y), x.view(), 1e-5);
    ensure!(err <= 1e-6, "l1l2 h gradient error {err:e}");
    Ok(())
}

pub fn fd_detects_wrong_gradient() -> CheckResult {
    let p = random_pair(12, 3, 47, 0);
    let mut s = Stream::new(47, 2);
    let x = Array1::from_shape_simple_fn(12, || s.normal());
    let err = fd_gradient_check(|y| p.eval_h(y), |y| p.grad_h(y) * 1.01, x.view(), 1e-5);
    ensure!(err >= 1e-3, "scaled gradient error only {err:e}");
    Ok(())
}

pub fn audit_passing_pgsa_run() -> CheckResult {
    let p = random_pair(20, 3, 59, 0);
    let trace = run_pgsa(
        &p,
        sgep_default_init(20, 3).view(),
        &PgsaConfig::for_problem(&p),
    )
    .ctx("run")?;
    let report = audit_trace(&trace, Method::Pgsa);
    ensure!(report.is_clean(), "violations {:?}", report.violations);
    ensure!(
        report.checked_iterations == trace.len(),
        "checked {} of {}",
        report.checked_iterations,
        trace.len()
    );
    Ok(())
}

fn long_trace(method: Method) -> Result<SolverTrace, String> {
    let p = random_pair(20, 3, 61, 0);
    let x0 = sgep_default_init(20, 3);
    match method {
        Method::Pgsa => run_pgsa(
            &p,
            x0.view(),
            &PgsaConfig::for_problem(&p)
                .with_step_tol(1e-10)
                .with_max_iter(1000),
        ),
        _ => run_pgsa_ls(
            &p,
            x0.view(),
            &LineSearchConfig::monotone(&p)
                .with_step_tol(1e-10)
                .with_max_iter(1000),
        ),
    }
    .ctx("run")
}

pub fn audit_fault_injection() -> CheckResult {
    for method in [Method::Pgsa, Method::PgsaMl] {
        let mut trace = long_trace(method)?;
        ensure!(
            trace.len() > 8,
            "trace too short to corrupt ({})",
            trace.len()
        );
        ensure!(
            audit_trace(&trace, method).is_clean(),
            "uncorrupted {method} trace is flagged"
        );
        let idx = trace.len() / 2;
        let rec: &mut IterationRecord = &mut trace.records[idx];
        rec.objective += 0.1 * (1.0 + rec.objective.abs());
        let flagged = audit_trace(&trace, method).flagged_iterations();
        ensure!(
            flagged == vec![rec_k(&trace, idx)],
            "{method}: flagged {flagged:?}, corrupted {}",
            rec_k(&trace, idx)
        );
    }
    Ok(())
}

fn rec_k(trace: &SolverTrace, idx: usize) -> usize {
    trace.records[idx].k
}

pub fn audit_nonmonotone_windowed_max() -> CheckResult {
    let inst = sfda_200(1);
    let p = &inst.problem;
    let trace = run_pgsa_ls(
        p,
        sgep_default_init(p.n(), p.r()).view(),
        &LineSearchConfig::nonmonotone(p),
    )
    .ctx("run")?;
    let report = audit_trace(&trace, Method::PgsaNl);
    let windowed = report
        .violations
        .iter()
        .filter(|v| v.kind == ViolationKind::WindowedMax)
        .count();
    ensure!(windowed == 0, "{windowed} windowed-max violations");
    ensure!(report.is_clean(), "violations {:?}", report.violations);
    Ok(())
}

fn synthetic_trace(iterates: Vec<Array1<f64>>, limit: Array1<f64>) -> SolverTrace {
    let meta = TraceMeta {
        method: Method::Pgsa,
        lipschitz: 1.0,
        f_is_convex: false,
        level_set_bound: None,
        alpha_lower: 0.99,
        alpha_upper: 0.99,
        decrease: None,
        eta: None,
        window: 0,
    };
    let records = (1..iterates.len())
        .map(|k| IterationRecord {
            k,
            objective: 1.0,
            alpha: 0.99,
            step_norm: 0.0,
            denominator: 1.0,
            backtracks: 0,
        })
        .collect();
    let certificate = fracprox::Certificate {
        objective: 1.0,
        criticality_residual: 0.0,
        residual_norm: "l2".into(),
        iterations: iterates.len() - 1,
        converged_reason: StopReason::MaxIter,
    };
    SolverTrace {
        meta,
        initial_objective: 1.0,
        records,
        iterates: Some(iterates),
        final_point: limit,
        certificate,
    }
}

pub fn rate_geometric_sequence() -> CheckResult {
    let limit = array![0.3, -1.0, 2.0];
    let v = array![1.0, 2.0, -0.5];
    let iterates = (0..120).map(|k| &limit + &(&v * 0.9_f64.powi(k))).collect();
    let fit = fit_linear_rate(&synthetic_trace(iterates, limit)).ctx("fit")?;
    close(fit.slope, 0.9_f64.ln(), 1e-6, "slope")?;
    ensure!(fit.r_squared >= 0.999, "R^2 {}", fit.r_squared);
    Ok(())
}

pub fn rate_pgsa_sfda() -> CheckResult {
    let inst = sfda_200(2);
    let p = &inst.problem;
    let trace = run_pgsa(
        p,
        sgep_default_init(p.n(), p.r()).view(),
        &PgsaConfig::for_problem(p).with_trace(true),
    )
    .ctx("run")?;
    let fit = fit_linear_rate(&trace).ctx("fit")?;
    ensure!(
        fit.slope < 0.0 && fit.r_squared >= 0.9,
        "slope {} R^2 {}",
        fit.slope,
        fit.r_squared
    );
    Ok(())
}

pub fn rate_constant_sequence() -> CheckResult {
    let x = array![1.0, 2.0];
    let trace = synthetic_trace(vec![x.clone(); 60], x);
    ensure!(
        fit_linear_rate(&trace).is_err(),
        "constant iterates produced a fit"
    );
    ensure!(
        fit_linear_rate_errors(&[0.25; 60]).is_err(),
        "constant errors produced a fit"
    );
    Ok(())
}

// ---------------------------------------------------------------------- cli

fn fracprox(args: &[&str]) -> Result<Output, String> {
    Command::new(env!("CARGO_BIN_EXE_fracprox"))
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .ctx("spawn fracprox")
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn cli_bench_zero_trials() -> CheckResult {
    let dir = tempfile::tempdir().ctx("tempdir")?;
    let out = fracprox(&[
        "bench",
        "--experiment",
        "sfda",
        "--trials",
        "0",
        "--out-dir",
        path_str(dir.path()),
    ])?;
    ensure!(
        out.status.code() == Some(0),
        "exit {:?}: {}",
        out.status.code(),
        stderr(&out)
    );
    let table = std::fs::read_to_string(dir.path().join("results.csv")).ctx("results.csv")?;
    let lines: Vec<&str> = table.lines().collect();
    ensure!(
        lines.len() == 1 && lines[0].starts_with("experiment,solver"),
        "table {table:?}"
    );
    Ok(())
}

pub fn cli_bench_deterministic() -> CheckResult {
    let mut outputs = Vec::new();
    for threads in ["1", "4"] {
        let dir = tempfile::tempdir().ctx("tempdir")?;
        let out = fracprox(&[
            "bench",
            "--experiment",
            "sfda",
            "--n",
            "50",
            "--p",
            "100",
            "--r",
            "5",
            "--trials",
            "6",
            "--seed",
            "9",
            "--threads",
            threads,
            "--solver",
            "pgsa_nl",
            "--out-dir",
            path_str(dir.path()),
        ])?;
        ensure!(
            out.status.success(),
            "exit {:?}: {}",
            out.status.code(),
            stderr(&out)
        );
        outputs.push(std::fs::read(dir.path().join("runs.jsonl")).ctx("runs.jsonl")?);
    }
    ensure!(!outputs[0].is_empty(), "empty run records");
    ensure!(
        outputs[0] == outputs[1],
        "run records differ between 1 and 4 threads"
    );
    Ok(())
}

fn write_pair(dir: &Path, a: &Array2<f64>, b: &Array2<f64>) -> Result<(String, String), String> {
    let (pa, pb) = (dir.join("A.csv"), dir.join("B.csv"));
    write_matrix(&pa, a).ctx("write A")?;
    write_matrix(&pb, b).ctx("write B")?;
    Ok((path_str(&pa).to_string(), path_str(&pb).to_string()))
}

pub fn cli_solve_diagonal() -> CheckResult {
    let dir = tempfile::tempdir().ctx("tempdir")?;
    let a = Array2::from_diag(&array![2.0, 1.0]);
    let b = Array2::eye(2);
    let (values, _) = generalized_eigen(&a, &b)?;
    let (pa, pb) = write_pair(dir.path(), &a, &b)?;
    let out = fracprox(&["solve", "--matrix-a", &pa, "--matrix-b", &pb, "--r", "1"])?;
    ensure!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        stderr(&out)
    );
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).ctx("certificate json")?;
    let objective = report["objective"].as_f64().ok_or("no objective")?;
    let residual = report["criticality_residual"]
        .as_f64()
        .ok_or("no residual")?;
    close(
        objective,
        values[0],
        1e-12,
        "objective vs eigenvalue oracle",
    )?;
    close(objective, 0.5, 1e-12, "objective")?;
    ensure!(residual <= 1e-8, "residual {residual:e}");
    ensure!(
        report["wall_time"].is_f64() && report["iterations"].is_u64(),
        "certificate {report}"
    );
    Ok(())
}

pub fn cli_solve_ragged_csv() -> CheckResult {
    let dir = tempfile::tempdir().ctx("tempdir")?;
    let pa = dir.path().join("A.csv");
    std::fs::write(&pa, "1,0,0\n0,1\n0,0,1\n").ctx("write")?;
    let pb = dir.path().join("B.csv");
    write_matrix(&pb, &Array2::eye(3)).ctx("write B")?;
    let out = fracprox(&[
        "solve",
        "--matrix-a",
        path_str(&pa),
        "--matrix-b",
        path_str(&pb),
        "--r",
        "1",
    ])?;
    ensure!(out.status.code() == Some(3), "exit {:?}", out.status.code());
    ensure!(
        stderr(&out).contains("line 2"),
        "message {:?} does not name line 2",
        stderr(&out)
    );
    Ok(())
}

pub fn cli_solve_r_exceeds_n() -> CheckResult {
    let dir = tempfile::tempdir().ctx("tempdir")?;
    let (pa, pb) = write_pair(dir.path(), &Array2::eye(3), &Array2::eye(3))?;
    let out = fracprox(&["solve", "--matrix-a", &pa, "--matrix-b", &pb, "--r", "4"])?;
    ensure!(
        out.status.code() == Some(2),
        "exit {:?}: {}",
        out.status.code(),
        stderr(&out)
    );
    Ok(())
}

/// Solve a 12x12 instance with the fixed step, keeping the trace file.
fn traced_solve(dir: &Path) -> Result<(String, String, String), String> {
    let (a, b) = random_psd_pair(12, 67, 0);
    let (pa, pb) = write_pair(dir, &a, &b)?;
    let trace = path_str(&dir.join("trace.csv")).to_string();
    let out = fracprox(&[
        "solve",
        "--matrix-a",
        &pa,
        "--matrix-b",
        &pb,
        "--r",
        "3",
        "--solver",
        "pgsa",
        "--step-tol",
        "1e-10",
        "--max-iter",
        "2000",
        "--trace-file",
        &trace,
    ])?;
    ensure!(
        out.status.success(),
        "solve exit {:?}: {}",
        out.status.code(),
        stderr(&out)
    );
    Ok((pa, pb, trace))
}

pub fn cli_verify_passing_trace() -> CheckResult {
    let dir = tempfile::tempdir().ctx("tempdir")?;
    let (pa, pb, trace) = traced_solve(dir.path())?;
    let out = fracprox(&[
        "verify",
        &trace,
        "--matrix-a",
        &pa,
        "--matrix-b",
        &pb,
        "--r",
        "3",
        "--solver",
        "pgsa",
    ])?;
    ensure!(
        out.status.code() == Some(0),
        "exit {:?}: {}",
        out.status.code(),
        stderr(&out)
    );
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).ctx("report json")?;
    ensure!(report["clean"] == true, "report {report}");
    Ok(())
}

pub fn cli_verify_injected_violation() -> CheckResult {
    let dir = tempfile::tempdir().ctx("tempdir")?;
    let (pa, pb, trace) = traced_solve(dir.path())?;
    let rows = read_trace(Path::new(&trace)).ctx("read trace")?;
    ensure!(rows.len() > 10, "trace has only {} rows", rows.len());
    let target = rows.len() / 2;
    let mut text = String::new();
    for (line_no, line) in std::fs::read_to_string(&trace)
        .ctx("read")?
        .lines()
        .enumerate()
    {
        if line_no == target + 1 {
            let mut fields: Vec<String> = line.split(',').map(str::to_string).collect();
            let f: f64 = fields[1].parse().ctx("parse F")?;
            fields[1] = (f + 1.0).to_string();
            text.push_str(&fields.join(","));
        } else {
            text.push_str(line);
        }
        text.push('\n');
    }
    std::fs::write(&trace, text).ctx("write")?;
    let k = rows[target].k;
    let out = fracprox(&[
        "verify",
        &trace,
        "--matrix-a",
        &pa,
        "--matrix-b",
        &pb,
        "--r",
        "3",
        "--solver",
        "pgsa",
    ])?;
    ensure!(
        out.status.code() == Some(1),
        "exit {:?}: {}",
        out.status.code(),
        stderr(&out)
    );
    ensure!(
        stderr(&out).contains(&format!("iteration {k} ")),
        "message {:?} does not name iteration {k}",
        stderr(&out)
    );
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).ctx("report json")?;
    let flagged: Vec<u64> = report["violations"]
        .as_array()
        .ok_or("no violations array")?
        .iter()
        .filter_map(|v| v["iteration"].as_u64())
        .collect();
    ensure!(
        flagged == vec![k as u64],
        "flagged {flagged:?}, corrupted {k}"
    );
    Ok(())
}

pub fn cli_verify_missing_file() -> CheckResult {
    let dir = tempfile::tempdir().ctx("tempdir")?;
    let (pa, pb) = write_pair(dir.path(), &Array2::eye(2), &Array2::eye(2))?;
    let missing = dir.path().join("absent.csv");
    let out = fracprox(&[
        "verify",
        path_str(&missing),
        "--matrix-a",
        &pa,
        "--matrix-b",
        &pb,
        "--r",
        "1",
    ])?;
    ensure!(
        out.status.code() == Some(3),
        "exit {:?}: {}",
        out.status.code(),
        stderr(&out)
    );
    Ok(())
}
