//! Box-constrained `l1/l2` sparse recovery, penalty form:
//!
//! ```text
//! minimize (lambda |x|_1 + |A x - b|^2 / 2) / |x|_2   subject to  lo <= x <= hi
//! ```
//!
//! Here `f = lambda |.|_1 + indicator(box)` is convex with a closed-form
//! prox, `h = |A x - b|^2 / 2` has `L = |A|_2^2` and `g = |.|_2`.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{gram_two_norm, norm2};
use crate::problem::{
    domain_eps, eval_objective, ExtendedObjective, FirstOrder, FractionalProblem,
};
use crate::rng::Stream;

/// Relative error below which a recovery counts as a success.
pub const SUCCESS_THRESHOLD: f64 = 1e-3;
pub const DEFAULT_LAMBDA: f64 = 8e-5;

#[derive(Debug, Clone)]
pub struct L1L2PenaltyProblem {
    a: Array2<f64>,
    b: Array1<f64>,
    lambda: f64,
    lower: Array1<f64>,
    upper: Array1<f64>,
    lipschitz: f64,
}

impl L1L2PenaltyProblem {
    /// Validates shapes, `lambda > 0` and `lower <= 0 <= upper` (the prox
    /// formula is exact only when the box contains the origin).
    pub fn new(
        a: Array2<f64>,
        b: Array1<f64>,
        lambda: f64,
        lower: Array1<f64>,
        upper: Array1<f64>,
    ) -> Result<Self> {
        let (m, n) = a.dim();
        if b.len() != m {
            return Err(Error::InvalidProblem(format!(
                "observation has length {}, A has {m} rows",
                b.len()
            )));
        }
        if lower.len() != n || upper.len() != n {
            return Err(Error::InvalidProblem(format!(
                "box bounds must have length {n}"
            )));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidProblem(format!(
                "lambda = {lambda} must be positive"
            )));
        }
        check_box(lower.view(), upper.view())?;
        for j in 0..n {
            if !(lower[j] <= 0.0 && 0.0 <= upper[j]) {
                return Err(Error::InvalidProblem(format!(
                    "box [{}, {}] at coordinate {j} excludes the origin",
                    lower[j], upper[j]
                )));
            }
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidProblem("non-finite data".into()));
        }
        let lipschitz = gram_two_norm(a.view())?;
        Ok(Self {
            a,
            b,
            lambda,
            lower,
            upper,
            lipschitz,
        })
    }

    /// The box `[-1, 1]^n`.
    pub fn with_unit_box(a: Array2<f64>, b: Array1<f64>, lambda: f64) -> Result<Self> {
        let n = a.ncols();
        Self::new(
            a,
            b,
            lambda,
            Array1::from_elem(n, -1.0),
            Array1::from_elem(n, 1.0),
        )
    }

    pub fn a(&self) -> ArrayView2<'_, f64> {
        self.a.view()
    }

    pub fn b(&self) -> ArrayView1<'_, f64> {
        self.b.view()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn lower(&self) -> ArrayView1<'_, f64> {
        self.lower.view()
    }

    pub fn upper(&self) -> ArrayView1<'_, f64> {
        self.upper.view()
    }

    fn in_box(&self, x: ArrayView1<f64>) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(self.upper.iter()))
            .all(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
    }
}

fn check_box(lower: ArrayView1<f64>, upper: ArrayView1<f64>) -> Result<()> {
    if lower.len() != upper.len() {
        return Err(Error::InvalidProblem("box bounds differ in length".into()));
    }
    for (j, (lo, hi)) in lower.iter().zip(upper.iter()).enumerate() {
        if !(lo <= hi) {
            return Err(Error::InvalidProblem(format!(
                "empty box at coordinate {j}: [{lo}, {hi}]"
            )));
        }
    }
    Ok(())
}

impl FractionalProblem for L1L2PenaltyProblem {
    fn dim(&self) -> usize {
        self.a.ncols()
    }

    fn eval_f(&self, x: ArrayView1<f64>) -> f64 {
        if self.in_box(x) {
            self.lambda * x.iter().map(|v| v.abs()).sum::<f64>()
        } else {
            f64::INFINITY
        }
    }

    fn eval_h(&self, x: ArrayView1<f64>) -> f64 {
        let r = self.a.dot(&x) - &self.b;
        0.5 * r.dot(&r)
    }

    fn grad_h(&self, x: ArrayView1<f64>) -> Array1<f64> {
        let r = self.a.dot(&x) - &self.b;
        self.a.t().dot(&r)
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn eval_g(&self, x: ArrayView1<f64>) -> f64 {
        norm2(x)
    }

    fn subgrad_g(&self, x: ArrayView1<f64>) -> Array1<f64> {
        l2_subgradient(x)
    }

    fn prox_f(&self, alpha: f64, z: ArrayView1<f64>) -> Result<Array1<f64>> {
        prox_l1_box(z, alpha * self.lambda, self.lower.view(), self.upper.view())
    }

    fn f_is_convex(&self) -> bool {
        true
    }

    /// `sup |x|_2` over the box.
    fn level_set_bound(&self) -> Option<f64> {
        Some(
            self.lower
                .iter()
                .zip(self.upper.iter())
                .map(|(lo, hi)| lo.abs().max(hi.abs()).powi(2))
                .sum::<f64>()
                .sqrt(),
        )
    }

    fn first_order(&self, x: ArrayView1<f64>) -> Result<FirstOrder> {
        if x.len() != self.dim() {
            return Err(Error::Domain(format!(
                "point has dimension {}, problem has {}",
                x.len(),
                self.dim()
            )));
        }
        let resid = self.a.dot(&x) - &self.b;
        let h = 0.5 * resid.dot(&resid);
        let objective = ExtendedObjective::from_parts(self.eval_f(x), h, norm2(x))?;
        Ok(FirstOrder {
            objective,
            grad_h: self.a.t().dot(&resid),
            subgrad_g: l2_subgradient(x),
        })
    }

    fn criticality_residual(&self, x: ArrayView1<f64>) -> Result<f64> {
        l1l2_critical_residual(self, x)
    }
}

/// Soft-threshold by `threshold`, then clip to `[lower, upper]`.
///
/// This is the exact prox of `threshold |.|_1 + indicator(box)` whenever the
/// box contains the origin coordinate-wise.
pub fn prox_l1_box(
    z: ArrayView1<f64>,
    threshold: f64,
    lower: ArrayView1<f64>,
    upper: ArrayView1<f64>,
) -> Result<Array1<f64>> {
    check_box(lower, upper)?;
    if z.len() != lower.len() {
        return Err(Error::InvalidProblem(format!(
            "point has length {}, box has {}",
            z.len(),
            lower.len()
        )));
    }
    if !(threshold >= 0.0) {
        return Err(Error::InvalidProblem(format!(
            "threshold {threshold} must be >= 0"
        )));
    }
    Ok(Array1::from_shape_fn(z.len(), |j| {
        let shrunk = (z[j].abs() - threshold).max(0.0) * z[j].signum();
        let shrunk = if shrunk == 0.0 { 0.0 } else { shrunk };
        shrunk.max(lower[j]).min(upper[j])
    }))
}

/// `x / |x|_2`, or zero (a valid subgradient of the norm at the origin).
pub fn l2_subgradient(x: ArrayView1<f64>) -> Array1<f64> {
    let nx = norm2(x);
    if nx > domain_eps(0.0) {
        x.mapv(|v| v / nx)
    } else {
        Array1::zeros(x.len())
    }
}

/// Distance from `u` to the interval `[lo, hi]`.
fn interval_distance(u: f64, lo: f64, hi: f64) -> f64 {
    if u < lo {
        lo - u
    } else if u > hi {
        u - hi
    } else {
        0.0
    }
}

/// Criticality residual for the penalty model.
///
/// With `c = F(x)` the vector `u = c x / |x| - grad h(x)` must lie in the
/// subdifferential of `lambda |.|_1 + indicator(box)` at `x`, which is the
/// product of intervals `lambda d|x_j| + N_[lo_j, hi_j](x_j)`. The residual
/// is the Euclidean distance from `u` to that set.
pub fn l1l2_critical_residual(problem: &L1L2PenaltyProblem, x: ArrayView1<f64>) -> Result<f64> {
    let obj = eval_objective(problem, x)?;
    if !obj.in_domain {
        return Err(Error::Domain(
            "point outside the box or at the origin".into(),
        ));
    }
    let nx = norm2(x);
    let grad = problem.grad_h(x);
    let lambda = problem.lambda;
    let mut acc = 0.0;
    for j in 0..x.len() {
        let u = obj.value * x[j] / nx - grad[j];
        let (mut lo, mut hi) = if x[j] > 0.0 {
            (lambda, lambda)
        } else if x[j] < 0.0 {
            (-lambda, -lambda)
        } else {
            (-lambda, lambda)
        };
        let (bl, bu) = (problem.lower[j], problem.upper[j]);
        if bl == bu {
            lo = f64::NEG_INFINITY;
            hi = f64::INFINITY;
        } else if x[j] == bu {
            hi = f64::INFINITY;
        } else if x[j] == bl {
            lo = f64::NEG_INFINITY;
        }
        let d = interval_distance(u, lo, hi);
        acc += d * d;
    }
    Ok(acc.sqrt())
}

/// Oversampled DCT sensing matrix: column `j` (1-based) is
/// `cos(2 pi w j / F) / sqrt(m)` with `w` uniform on `[0, 1)^m`.
pub fn gen_dct_matrix(m: usize, n: usize, coherence: f64, stream: &mut Stream) -> Array2<f64> {
    let w: Vec<f64> = (0..m).map(|_| stream.uniform()).collect();
    let scale = 1.0 / (m as f64).sqrt();
    Array2::from_shape_fn((m, n), |(i, j)| {
        scale * (2.0 * std::f64::consts::PI * w[i] * (j + 1) as f64 / coherence).cos()
    })
}

/// Unit-norm `k`-sparse vector with a uniformly random support and standard
/// Gaussian values.
pub fn gen_ground_truth(n: usize, k: usize, stream: &mut Stream) -> Array1<f64> {
    let support = stream.sample_indices(n, k);
    let mut x = Array1::<f64>::zeros(n);
    for &i in &support {
        x[i] = stream.normal();
    }
    let nx = norm2(x.view());
    x / nx
}

/// A synthetic recovery instance: sensing matrix, ground truth and `b = A x`.
#[derive(Debug, Clone)]
pub struct RecoveryInstance {
    pub a: Array2<f64>,
    pub b: Array1<f64>,
    pub truth: Array1<f64>,
}

/// Parameters of the DCT recovery simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryRecipe {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub coherence: f64,
    pub seed: u64,
    pub stream: u64,
}

impl RecoveryRecipe {
    pub fn generate(&self) -> Result<RecoveryInstance> {
        if self.m == 0 || self.n == 0 || self.k == 0 || self.k > self.n {
            return Err(Error::InvalidProblem(format!(
                "need m, n >= 1 and 1 <= k <= n, got m={} n={} k={}",
                self.m, self.n, self.k
            )));
        }
        if !(self.coherence > 0.0) {
            return Err(Error::InvalidProblem("coherence F must be positive".into()));
        }
        let mut stream = Stream::new(self.seed, self.stream);
        let a = gen_dct_matrix(self.m, self.n, self.coherence, &mut stream);
        let truth = gen_ground_truth(self.n, self.k, &mut stream);
        let b = a.dot(&truth);
        Ok(RecoveryInstance { a, b, truth })
    }
}

/// Outcome of one recovery run measured against the ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub relative_error: f64,
    pub success: bool,
    /// `|x|_1 / |x|_2` at the solution.
    pub objective: f64,
    pub time: f64,
    pub iterations: usize,
}

impl RecoveryReport {
    pub fn new(
        solution: ArrayView1<f64>,
        truth: ArrayView1<f64>,
        time: f64,
        iterations: usize,
    ) -> Self {
        let relative_error = norm2((&solution - &truth).view()) / norm2(truth);
        Self {
            relative_error,
            success: relative_error < SUCCESS_THRESHOLD,
            objective: l1_over_l2(solution),
            time,
            iterations,
        }
    }
}

pub fn l1_over_l2(x: ArrayView1<f64>) -> f64 {
    x.iter().map(|v| v.abs()).sum::<f64>() / norm2(x)
}

/// Iterations of the `l1` initializer.
pub const INIT_ITERATIONS: usize = 2000;

/// Accelerated proximal gradient on
/// `mu |x|_1 + |A x - b|^2 / 2 + indicator(box)` with `mu = 1e-6 |A^T b|_inf`
/// and step `1/|A|_2^2`, started at the origin.
///
/// The threshold is continued geometrically from `|A^T b|_inf / 2` down to
/// `mu` over the first three quarters of the iterations and held there for
/// the rest. Returns [`Error::Degenerate`] when the result is the zero
/// vector; see [`initial_point`] for the fallback.
pub fn l1_box_initializer(problem: &L1L2PenaltyProblem, iterations: usize) -> Result<Array1<f64>> {
    let a = problem.a.view();
    let atb = a.t().dot(&problem.b);
    let atb_inf = atb.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mu = 1e-6 * atb_inf;
    let step = 1.0 / problem.lipschitz;
    let ramp = (3 * iterations / 4).max(1);
    let start = 0.5 * atb_inf;
    let decay = if start > mu {
        (mu / start).powf(1.0 / ramp as f64)
    } else {
        1.0
    };

    let mut x = Array1::<f64>::zeros(problem.dim());
    let mut y = x.clone();
    let mut t = 1.0_f64;
    let mut level = start.max(mu);
    for _ in 0..iterations {
        let grad = a.t().dot(&(a.dot(&y) - &problem.b));
        let mut z = y.clone();
        z.scaled_add(-step, &grad);
        let next = prox_l1_box(
            z.view(),
            step * level,
            problem.lower.view(),
            problem.upper.view(),
        )?;
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        y = &next + &((&next - &x) * ((t - 1.0) / t_next));
        x = next;
        t = t_next;
        level = (level * decay).max(mu);
    }
    if x.iter().all(|v| *v == 0.0) {
        return Err(Error::Degenerate(
            "l1 initializer returned the zero vector".into(),
        ));
    }
    Ok(x)
}

/// The `l1` initializer, falling back to `A^T b / |A^T b|_2` clipped to the
/// box when it degenerates.
pub fn initial_point(problem: &L1L2PenaltyProblem, iterations: usize) -> Result<Array1<f64>> {
    match l1_box_initializer(problem, iterations) {
        Ok(x) => Ok(x),
        Err(Error::Degenerate(_)) => {
            let atb = problem.a.t().dot(&problem.b);
            let nrm = norm2(atb.view());
            if nrm == 0.0 {
                return Err(Error::Degenerate(
                    "A^T b vanishes; no starting point".into(),
                ));
            }
            let x = Array1::from_shape_fn(atb.len(), |j| {
                (atb[j] / nrm).max(problem.lower[j]).min(problem.upper[j])
            });
            Ok(x)
        }
        Err(e) => Err(e),
    }
}
