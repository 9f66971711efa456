//! Sparse generalized eigenvalue problem.
//!
//! ```text
//! minimize  x^T B x / x^T A x   subject to  |x|_0 <= r,  |x|_2 = 1
//! ```
//!
//! as a fractional problem with `f` the indicator of the sparse unit sphere
//! `C`, `h(x) = x^T B x / 2` and `g(x) = x^T A x / 2`. The halves cancel in the
//! ratio; they make `grad h = B x` and `L = lambda_max(B)`.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::linalg::{
    asymmetry, cholesky, cholesky_solve, jacobi_eigh, matrix_two_norm, min_eigenvalue_estimate,
    norm2,
};
use crate::problem::{domain_eps, ExtendedObjective, FirstOrder, FractionalProblem};
use crate::rng::Stream;

/// Entries with `|x_i| <= SUPPORT_THRESHOLD * |x|_inf` count as zero when
/// classifying the support of a numerically computed point.
pub const SUPPORT_THRESHOLD: f64 = 1e-12;

const SPHERE_TOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-10;
const PD_SAMPLES: usize = 50;

#[derive(Debug, Clone)]
pub struct SgepProblem {
    a: Array2<f64>,
    b: Array2<f64>,
    r: usize,
    lipschitz: f64,
    level_bound: f64,
}

impl SgepProblem {
    /// Validate and cache `L = lambda_max(B)` and `M = lambda_max(A) / 2`.
    ///
    /// Checks symmetry (to `1e-12`), positive semidefiniteness of both
    /// matrices and positive definiteness of up to 50 sampled `r x r`
    /// principal submatrices of `B`.
    pub fn new(a: Array2<f64>, b: Array2<f64>, r: usize) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || b.nrows() != n || b.ncols() != n {
            return Err(Error::InvalidProblem(format!(
                "A is {}x{}, B is {}x{}; both must be n x n",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols()
            )));
        }
        if n == 0 {
            return Err(Error::InvalidProblem("empty matrices".into()));
        }
        if r < 1 || r > n {
            return Err(Error::InvalidProblem(format!(
                "sparsity r = {r} not in [1, {n}]"
            )));
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidProblem("non-finite matrix entry".into()));
        }
        for (name, m) in [("A", &a), ("B", &b)] {
            let asym = asymmetry(m.view());
            if asym > 1e-12 {
                return Err(Error::InvalidProblem(format!(
                    "{name} is not symmetric (max asymmetry {asym:e})"
                )));
            }
        }
        let lambda_a = matrix_two_norm(a.view())?;
        let lambda_b = matrix_two_norm(b.view())?;
        for (name, m, top) in [("A", &a, lambda_a), ("B", &b, lambda_b)] {
            let low = min_eigenvalue_estimate(m.view(), top, 300);
            if low < -PSD_TOL * top.max(1.0) {
                return Err(Error::InvalidProblem(format!(
                    "{name} is not positive semidefinite (eigenvalue estimate {low:e})"
                )));
            }
        }
        check_sampled_pd(b.view(), r)?;
        if !(lambda_b > 0.0) {
            return Err(Error::InvalidProblem("B must be nonzero".into()));
        }
        Ok(Self {
            a,
            b,
            r,
            lipschitz: lambda_b,
            level_bound: 0.5 * lambda_a,
        })
    }

    pub fn a(&self) -> ArrayView2<'_, f64> {
        self.a.view()
    }

    pub fn b(&self) -> ArrayView2<'_, f64> {
        self.b.view()
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    /// `x^T B x / x^T A x` without the sparsity constraint.
    pub fn ratio(&self, x: ArrayView1<f64>) -> f64 {
        x.dot(&self.b.dot(&x)) / x.dot(&self.a.dot(&x))
    }

    /// Whether `x` lies on the sparse unit sphere.
    pub fn contains(&self, x: ArrayView1<f64>) -> bool {
        let nnz = x.iter().filter(|v| **v != 0.0).count();
        nnz <= self.r && (x.dot(&x) - 1.0).abs() <= SPHERE_TOL
    }

    /// The same problem with `(A, B)` scaled by `t > 0`. The ratio is unchanged.
    pub fn scaled(&self, t: f64) -> Result<Self> {
        Self::new(&self.a * t, &self.b * t, self.r)
    }
}

fn check_sampled_pd(b: ArrayView2<f64>, r: usize) -> Result<()> {
    let n = b.nrows();
    let supports: Vec<Vec<usize>> = if binomial_at_most(n, r, PD_SAMPLES) {
        combinations(n, r).collect()
    } else {
        let mut stream = Stream::new(0x5eed_5eed, 0);
        (0..PD_SAMPLES)
            .map(|_| {
                let mut s = stream.sample_indices(n, r);
                s.sort_unstable();
                s
            })
            .collect()
    };
    for support in supports {
        let sub = principal(b, &support);
        if cholesky(sub.view()).is_err() {
            return Err(Error::InvalidProblem(format!(
                "principal submatrix of B on {support:?} is not positive definite"
            )));
        }
    }
    Ok(())
}

fn binomial_at_most(n: usize, k: usize, cap: usize) -> bool {
    let mut c: u128 = 1;
    for i in 0..k.min(n - k) {
        c = c * (n - i) as u128 / (i + 1) as u128;
        if c > cap as u128 {
            return false;
        }
    }
    true
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> impl Iterator<Item = Vec<usize>> {
    let mut current: Option<Vec<usize>> = if k <= n { Some((0..k).collect()) } else { None };
    std::iter::from_fn(move || {
        let out = current.clone()?;
        let cur = current.as_mut().unwrap();
        let mut i = k;
        loop {
            if i == 0 {
                current = None;
                break;
            }
            i -= 1;
            if cur[i] < n - k + i {
                cur[i] += 1;
                for j in (i + 1)..k {
                    cur[j] = cur[j - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    })
}

fn principal(m: ArrayView2<f64>, support: &[usize]) -> Array2<f64> {
    m.select(Axis(0), support).select(Axis(1), support)
}

impl FractionalProblem for SgepProblem {
    fn dim(&self) -> usize {
        self.n()
    }

    fn eval_f(&self, x: ArrayView1<f64>) -> f64 {
        if self.contains(x) {
            0.0
        } else {
            f64::INFINITY
        }
    }

    fn eval_h(&self, x: ArrayView1<f64>) -> f64 {
        0.5 * x.dot(&self.b.dot(&x))
    }

    fn grad_h(&self, x: ArrayView1<f64>) -> Array1<f64> {
        self.b.dot(&x)
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn eval_g(&self, x: ArrayView1<f64>) -> f64 {
        0.5 * x.dot(&self.a.dot(&x))
    }

    fn subgrad_g(&self, x: ArrayView1<f64>) -> Array1<f64> {
        self.a.dot(&x)
    }

    fn prox_f(&self, _alpha: f64, z: ArrayView1<f64>) -> Result<Array1<f64>> {
        project_sparse_sphere(z, self.r)
    }

    fn level_set_bound(&self) -> Option<f64> {
        Some(self.level_bound)
    }

    fn first_order(&self, x: ArrayView1<f64>) -> Result<FirstOrder> {
        if x.len() != self.n() {
            return Err(Error::Domain(format!(
                "point has dimension {}, problem has {}",
                x.len(),
                self.n()
            )));
        }
        let bx = self.b.dot(&x);
        let ax = self.a.dot(&x);
        let objective =
            ExtendedObjective::from_parts(self.eval_f(x), 0.5 * x.dot(&bx), 0.5 * x.dot(&ax))?;
        Ok(FirstOrder {
            objective,
            grad_h: bx,
            subgrad_g: ax,
        })
    }

    fn criticality_residual(&self, x: ArrayView1<f64>) -> Result<f64> {
        sgep_critical_residual(self, x)
    }
}

/// Keep the `r` largest-magnitude entries (lower index wins ties), zero the
/// rest, and normalize. This is a Euclidean projection onto the sparse unit
/// sphere. The zero vector has no canonical projection and is rejected.
pub fn project_sparse_sphere(x: ArrayView1<f64>, r: usize) -> Result<Array1<f64>> {
    let n = x.len();
    if r == 0 || r > n {
        return Err(Error::InvalidProblem(format!(
            "sparsity r = {r} not in [1, {n}]"
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("projection input"));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let by_magnitude = |&i: &usize, &j: &usize| x[j].abs().total_cmp(&x[i].abs()).then(i.cmp(&j));
    if r < n {
        order.select_nth_unstable_by(r - 1, by_magnitude);
    }
    let mut y = Array1::<f64>::zeros(n);
    for &i in &order[..r] {
        y[i] = x[i];
    }
    let norm = norm2(y.view());
    if !(norm > domain_eps(0.0)) {
        return Err(Error::Degenerate(
            "projection of the zero vector onto the sparse sphere is the whole set".into(),
        ));
    }
    y.mapv_inplace(|v| v / norm);
    Ok(y)
}

/// The prox of `alpha * indicator(C)`: a projection, independent of `alpha`.
pub fn sgep_prox_f(_alpha: f64, z: ArrayView1<f64>, r: usize) -> Result<Array1<f64>> {
    project_sparse_sphere(z, r)
}

/// `x^0` with its first `r` entries `1/sqrt(r)` and the rest zero.
pub fn sgep_default_init(n: usize, r: usize) -> Array1<f64> {
    let v = 1.0 / (r as f64).sqrt();
    Array1::from_shape_fn(n, |i| if i < r { v } else { 0.0 })
}

/// Both forms of the eigen-residual at a point of `C`.
#[derive(Debug, Clone, PartialEq)]
pub struct SgepResidual {
    /// The residual that decides criticality for the classified support.
    pub value: f64,
    /// `|B x - G(x) A x|_2`.
    pub full: f64,
    /// `|B_S x_S - G(x) A_S x_S|_2` on the support `S`.
    pub restricted: f64,
    pub support_size: usize,
    /// Some entry sits within a factor 10 of the support threshold, so the
    /// classification (and hence `value`) is fragile.
    pub ambiguous: bool,
}

/// Criticality test for the sparse sphere: at a critical point `x` with
/// support `S`, `B x = G(x) A x` when `|S| < r`, and
/// `B_S x_S = G(x) A_S x_S` when `|S| = r`.
pub fn sgep_residual_report(problem: &SgepProblem, x: ArrayView1<f64>) -> Result<SgepResidual> {
    let n = problem.n();
    if x.len() != n {
        return Err(Error::Domain(format!(
            "point has dimension {}, problem has {n}",
            x.len()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("input point"));
    }
    let inf_norm = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let threshold = SUPPORT_THRESHOLD * inf_norm;
    let support: Vec<usize> = (0..n).filter(|&i| x[i].abs() > threshold).collect();
    let ambiguous = x.iter().any(|v| {
        let a = v.abs();
        a != 0.0 && a > threshold / 10.0 && a <= threshold * 10.0
    });
    if support.len() > problem.r() || (x.dot(&x) - 1.0).abs() > 1e-8 {
        return Err(Error::Domain(
            "point is not on the sparse unit sphere".into(),
        ));
    }
    let ax = problem.a.dot(&x);
    let bx = problem.b.dot(&x);
    let denom = x.dot(&ax);
    let numer = x.dot(&bx);
    if !(0.5 * denom > domain_eps(0.5 * numer)) {
        return Err(Error::Domain("x^T A x vanishes".into()));
    }
    let ratio = numer / denom;
    let resid = &bx - &(&ax * ratio);
    let full = norm2(resid.view());
    let restricted = support
        .iter()
        .map(|&i| resid[i] * resid[i])
        .sum::<f64>()
        .sqrt();
    let value = if support.len() < problem.r() {
        full
    } else {
        restricted
    };
    Ok(SgepResidual {
        value,
        full,
        restricted,
        support_size: support.len(),
        ambiguous,
    })
}

/// The criticality residual used by [`FractionalProblem::criticality_residual`].
pub fn sgep_critical_residual(problem: &SgepProblem, x: ArrayView1<f64>) -> Result<f64> {
    Ok(sgep_residual_report(problem, x)?.value)
}

/// Global optimum by exhaustive enumeration of supports.
///
/// For each support `S` of size `r` the restricted minimum of
/// `x^T B_S x / x^T A_S x` is the smallest generalized eigenvalue of
/// `(B_S, A_S)`. When `A_S` is singular, the null-space component is
/// eliminated through the Schur complement of `B_S`. Only feasible for
/// `n <= 16` and `r <= 4`.
pub fn sgep_brute_force_optimum(problem: &SgepProblem) -> Result<(f64, Array1<f64>)> {
    let n = problem.n();
    let r = problem.r();
    if n > 16 || r > 4 {
        return Err(Error::SizeGuard(format!(
            "n = {n}, r = {r}; need n <= 16, r <= 4"
        )));
    }
    let mut best: Option<(f64, Array1<f64>)> = None;
    for support in combinations(n, r) {
        let Some(local) = restricted_minimum(problem, &support)? else {
            continue;
        };
        let mut x = Array1::<f64>::zeros(n);
        for (pos, &i) in support.iter().enumerate() {
            x[i] = local[pos];
        }
        let value = problem.ratio(x.view());
        if best.as_ref().is_none_or(|(v, _)| value < *v) {
            best = Some((value, x));
        }
    }
    best.ok_or_else(|| Error::Degenerate("x^T A x vanishes on every support".into()))
}

fn restricted_minimum(problem: &SgepProblem, support: &[usize]) -> Result<Option<Array1<f64>>> {
    let a_s = principal(problem.a.view(), support);
    let b_s = principal(problem.b.view(), support);
    let (d, q) = jacobi_eigh(a_s.view())?;
    let top = d.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if top == 0.0 {
        return Ok(None);
    }
    let range: Vec<usize> = (0..d.len()).filter(|&i| d[i] > 1e-12 * top).collect();
    let null: Vec<usize> = (0..d.len()).filter(|&i| d[i] <= 1e-12 * top).collect();
    if range.is_empty() {
        return Ok(None);
    }
    let qr = q.select(Axis(1), &range);
    let inv_sqrt = Array1::from_iter(range.iter().map(|&i| 1.0 / d[i].sqrt()));
    let b11 = qr.t().dot(&b_s).dot(&qr);

    let (effective, elimination) = if null.is_empty() {
        (b11, None)
    } else {
        let q0 = q.select(Axis(1), &null);
        let b12 = qr.t().dot(&b_s).dot(&q0);
        let b22 = q0.t().dot(&b_s).dot(&q0);
        let chol = cholesky(b22.view())?;
        // S = B11 - B12 B22^{-1} B21
        let mut solved = Array2::<f64>::zeros((null.len(), range.len()));
        for j in 0..range.len() {
            let col = cholesky_solve(chol.view(), b12.row(j));
            solved.column_mut(j).assign(&col);
        }
        (&b11 - &b12.dot(&solved), Some((q0, solved)))
    };

    let k = range.len();
    let mut scaled = effective;
    for i in 0..k {
        for j in 0..k {
            scaled[[i, j]] *= inv_sqrt[i] * inv_sqrt[j];
        }
    }
    let sym = (&scaled + &scaled.t()) * 0.5;
    let (_, vecs) = jacobi_eigh(sym.view())?;
    let z = &vecs.column(0) * &inv_sqrt;
    let mut x_s = qr.dot(&z);
    if let Some((q0, solved)) = elimination {
        // w = -B22^{-1} B21 z
        let w = -solved.dot(&z);
        x_s = x_s + q0.dot(&w);
    }
    let norm = norm2(x_s.view());
    Ok(Some(x_s / norm))
}

/// Parameters of the two-class Gaussian discriminant simulation.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SfdaRecipe {
    /// Feature dimension; a multiple of the block count.
    pub n: usize,
    pub p1: usize,
    pub p2: usize,
    pub r: usize,
    /// Mean shift of class 2 on features 2, 4, ..., 40 (1-based).
    pub shift: f64,
    /// Correlation base of each Toeplitz block, `rho^|j - j'|`.
    pub rho: f64,
    pub blocks: usize,
    /// Multiple of the identity added to the within-class covariance.
    pub ridge: f64,
    pub seed: u64,
    pub stream: u64,
}

impl SfdaRecipe {
    /// `p1 = p2 = p/2`, shift 0.5, five blocks with `rho = 0.8`, ridge 0.5.
    pub fn new(n: usize, p: usize, r: usize, seed: u64, stream: u64) -> Self {
        Self {
            n,
            p1: p / 2,
            p2: p - p / 2,
            r,
            shift: 0.5,
            rho: 0.8,
            blocks: 5,
            ridge: 0.5,
            seed,
            stream,
        }
    }

    pub fn p(&self) -> usize {
        self.p1 + self.p2
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.blocks == 0 || !self.n.is_multiple_of(self.blocks) {
            return Err(Error::InvalidProblem(format!(
                "n = {} must be a positive multiple of {}",
                self.n, self.blocks
            )));
        }
        if self.p1 == 0 || self.p2 == 0 {
            return Err(Error::InvalidProblem("both classes need samples".into()));
        }
        if self.r < 1 || self.r > self.n {
            return Err(Error::InvalidProblem(format!(
                "r = {} not in [1, {}]",
                self.r, self.n
            )));
        }
        if !(self.ridge >= 0.0) {
            return Err(Error::InvalidProblem("ridge must be nonnegative".into()));
        }
        if !(self.rho.abs() < 1.0) {
            return Err(Error::InvalidProblem("|rho| must be below 1".into()));
        }
        Ok(())
    }

    /// The class-2 mean vector.
    pub fn class2_mean(&self) -> Array1<f64> {
        Array1::from_shape_fn(self.n, |j| {
            // 0-based odd index j <=> 1-based even index j + 1
            if j % 2 == 1 && j < 40 {
                self.shift
            } else {
                0.0
            }
        })
    }
}

/// A generated discriminant problem and the class means it was built from.
#[derive(Debug, Clone)]
pub struct SfdaInstance {
    /// `A` is the between-class and `B` the within-class covariance.
    pub problem: SgepProblem,
    pub mean1: Array1<f64>,
    pub mean2: Array1<f64>,
}

/// Draw a two-class sample and form the within-class covariance
/// `B = (1/p) sum_k sum_{i in class k} (z_i - u_k)(z_i - u_k)^T + ridge I` and
/// the between-class covariance `A = (p1 u_1 u_1^T + p2 u_2 u_2^T) / p`.
///
/// Each block of the feature covariance is an AR(1) process with unit
/// variance, which has exactly the Toeplitz covariance `rho^|j - j'|`.
pub fn gen_sfda(recipe: &SfdaRecipe) -> Result<SfdaInstance> {
    recipe.validate()?;
    let n = recipe.n;
    let p = recipe.p();
    let block = n / recipe.blocks;
    let rho = recipe.rho;
    let innovation = (1.0 - rho * rho).sqrt();
    let shift = recipe.class2_mean();
    let mut stream = Stream::new(recipe.seed, recipe.stream);

    let mut z = Array2::<f64>::zeros((p, n));
    for (i, mut row) in z.axis_iter_mut(Axis(0)).enumerate() {
        for b in 0..recipe.blocks {
            let mut prev = 0.0;
            for j in 0..block {
                let e = stream.normal();
                let v = if j == 0 {
                    e
                } else {
                    rho * prev + innovation * e
                };
                row[b * block + j] = v;
                prev = v;
            }
        }
        if i >= recipe.p1 {
            row += &shift;
        }
    }

    let mean1 = z.slice(s![..recipe.p1, ..]).mean_axis(Axis(0)).unwrap();
    let mean2 = z.slice(s![recipe.p1.., ..]).mean_axis(Axis(0)).unwrap();
    {
        let (mut c1, mut c2) = z.view_mut().split_at(Axis(0), recipe.p1);
        c1 -= &mean1;
        c2 -= &mean2;
    }
    let mut within = z.t().dot(&z) / p as f64;
    symmetrize(&mut within);
    within.diag_mut().mapv_inplace(|v| v + recipe.ridge);

    let p1 = recipe.p1 as f64;
    let p2 = recipe.p2 as f64;
    let between = Array2::from_shape_fn((n, n), |(i, j)| {
        (p1 * (mean1[i] * mean1[j]) + p2 * (mean2[i] * mean2[j])) / p as f64
    });

    let problem = SgepProblem::new(between, within, recipe.r)?;
    Ok(SfdaInstance {
        problem,
        mean1,
        mean2,
    })
}

/// Replace `m` by `(m + m^T) / 2`.
pub fn symmetrize(m: &mut Array2<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[[i, j]] + m[[j, i]]);
            m[[i, j]] = v;
            m[[j, i]] = v;
        }
    }
}

/// A random pair of Wishart matrices `A = G G^T / n`, `B = H H^T / n` with
/// Gaussian `G`, `H`. Both are positive definite with probability one.
pub fn random_psd_pair(n: usize, seed: u64, stream: u64) -> (Array2<f64>, Array2<f64>) {
    let mut rng = Stream::new(seed, stream);
    let mut draw = || {
        let g = Array2::from_shape_simple_fn((n, n), || rng.normal());
        let mut w = g.dot(&g.t()) / n as f64;
        symmetrize(&mut w);
        w
    };
    let a = draw();
    let b = draw();
    (a, b)
}
