//! Plugging a user-defined problem into the solvers.
//!
//! Minimizes `(x'Qx / 2) / |x|_1` over the box `[1, 2]^n`. The box indicator
//! is convex, so the fixed-step solver may use steps up to `2/L`.
//!
//! ```text
//! cargo run --release --example custom_problem -- [n]
//! ```

use fracprox::problem::domain_eps;
use fracprox::rng::Stream;
use fracprox::{run_pgsa, run_pgsa_ls, FractionalProblem, LineSearchConfig, PgsaConfig};
use ndarray::{Array1, Array2, ArrayView1};

struct BoxQuadratic {
    q: Array2<f64>,
    lipschitz: f64,
}

impl BoxQuadratic {
    fn random(n: usize, seed: u64) -> Self {
        let mut s = Stream::new(seed, 0);
        let g = Array2::from_shape_simple_fn((n, n), || s.normal());
        let q = g.t().dot(&g) / n as f64 + Array2::<f64>::eye(n);
        let lipschitz = q.iter().map(|v| v * v).sum::<f64>().sqrt();
        BoxQuadratic { q, lipschitz }
    }
}

impl FractionalProblem for BoxQuadratic {
    fn dim(&self) -> usize {
        self.q.nrows()
    }

    fn eval_f(&self, x: ArrayView1<f64>) -> f64 {
        let eps = domain_eps(2.0);
        if x.iter().all(|&v| (1.0 - eps..=2.0 + eps).contains(&v)) {
            0.0
        } else {
            f64::INFINITY
        }
    }

    fn eval_h(&self, x: ArrayView1<f64>) -> f64 {
        0.5 * x.dot(&self.q.dot(&x))
    }

    fn grad_h(&self, x: ArrayView1<f64>) -> Array1<f64> {
        self.q.dot(&x)
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn eval_g(&self, x: ArrayView1<f64>) -> f64 {
        x.iter().map(|v| v.abs()).sum()
    }

    fn subgrad_g(&self, x: ArrayView1<f64>) -> Array1<f64> {
        x.mapv(f64::signum)
    }

    fn prox_f(&self, _alpha: f64, z: ArrayView1<f64>) -> fracprox::Result<Array1<f64>> {
        Ok(z.mapv(|v| v.clamp(1.0, 2.0)))
    }

    fn f_is_convex(&self) -> bool {
        true
    }
}

fn main() -> fracprox::Result<()> {
    let n: usize = std::env::args()
        .nth(1)
        .map_or(50, |s| s.parse().expect("n"));
    let problem = BoxQuadratic::random(n, 3);
    let x0 = Array1::from_elem(n, 2.0);

    let fixed = run_pgsa(
        &problem,
        x0.view(),
        &PgsaConfig::for_problem(&problem)
            .with_step_tol(1e-10)
            .with_max_iter(10_000),
    )?;
    let ml = run_pgsa_ls(
        &problem,
        x0.view(),
        &LineSearchConfig::monotone(&problem)
            .with_step_tol(1e-10)
            .with_max_iter(10_000),
    )?;
    for trace in [&fixed, &ml] {
        let c = &trace.certificate;
        let at_lower = trace.final_point.iter().filter(|&&v| v == 1.0).count();
        println!(
            "{:<8} objective {:.10}  iterations {:>5}  residual {:.2e}  coordinates at 1: {at_lower}/{n}",
            trace.meta.method.name(),
            c.objective,
            c.iterations,
            c.criticality_residual
        );
    }
    Ok(())
}
