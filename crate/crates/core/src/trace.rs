//! Per-iteration solver history.

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::linalg::norm2;
use crate::problem::Certificate;

/// Solver variant that produced a trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Fixed step size.
    Pgsa,
    /// Monotone line search (window of one).
    PgsaMl,
    /// Nonmonotone line search.
    PgsaNl,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Pgsa => "pgsa",
            Method::PgsaMl => "pgsa_ml",
            Method::PgsaNl => "pgsa_nl",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "pgsa" => Ok(Method::Pgsa),
            "pgsa_ml" | "pgsa-ml" | "ml" => Ok(Method::PgsaMl),
            "pgsa_nl" | "pgsa-nl" | "nl" => Ok(Method::PgsaNl),
            other => Err(format!("unknown solver `{other}`")),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Solver and problem parameters needed to re-check a trace offline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub method: Method,
    pub lipschitz: f64,
    pub f_is_convex: bool,
    /// Bound on `g` over the initial level set, if known.
    pub level_set_bound: Option<f64>,
    pub alpha_lower: f64,
    pub alpha_upper: f64,
    /// Line-search decrease coefficient `a`.
    pub decrease: Option<f64>,
    /// Backtracking factor.
    pub eta: Option<f64>,
    /// Nonmonotone memory `N` (0 for monotone and fixed-step runs).
    pub window: usize,
}

/// One iteration `x^{k-1} -> x^k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    /// `F(x^k)`.
    pub objective: f64,
    /// Step size that produced `x^k`.
    pub alpha: f64,
    /// `|x^k - x^{k-1}|_2`.
    pub step_norm: f64,
    /// `g(x^k)`.
    pub denominator: f64,
    pub backtracks: usize,
}

#[derive(Debug, Clone)]
pub struct SolverTrace {
    pub meta: TraceMeta,
    /// `F(x^0)`.
    pub initial_objective: f64,
    pub records: Vec<IterationRecord>,
    /// `x^0, ..., x^K`, kept only when the run asked for it.
    pub iterates: Option<Vec<Array1<f64>>>,
    pub final_point: Array1<f64>,
    pub certificate: crate::problem::Certificate,
}

impl SolverTrace {
    /// Number of completed iterations.
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// `F(x^0), ..., F(x^K)`.
    pub fn objectives(&self) -> Vec<f64> {
        std::iter::once(self.initial_objective)
            .chain(self.records.iter().map(|r| r.objective))
            .collect()
    }

    /// `c_k`, the objective value the `k`-th step linearizes around. It is
    /// `F(x^k)` by definition.
    pub fn c(&self, k: usize) -> f64 {
        if k == 0 {
            self.initial_objective
        } else {
            self.records[k - 1].objective
        }
    }

    pub fn final_objective(&self) -> f64 {
        self.certificate.objective
    }

    /// `|x^k - x_final|_2` for every recorded iterate.
    pub fn errors_to_final(&self) -> Option<Vec<f64>> {
        let xs = self.iterates.as_ref()?;
        Some(
            xs.iter()
                .map(|x| norm2((x - &self.final_point).view()))
                .collect(),
        )
    }

    pub fn total_backtracks(&self) -> usize {
        self.records.iter().map(|r| r.backtracks).sum()
    }
}

pub(crate) struct TraceBuilder {
    meta: TraceMeta,
    initial_objective: f64,
    records: Vec<IterationRecord>,
    iterates: Option<Vec<Array1<f64>>>,
}

impl TraceBuilder {
    pub fn new(meta: TraceMeta, x0: &Array1<f64>, f0: f64, keep_iterates: bool) -> Self {
        Self {
            meta,
            initial_objective: f0,
            records: Vec::new(),
            iterates: keep_iterates.then(|| vec![x0.clone()]),
        }
    }

    pub fn push(&mut self, record: IterationRecord, x: &Array1<f64>) {
        self.records.push(record);
        if let Some(xs) = self.iterates.as_mut() {
            xs.push(x.clone());
        }
    }

    pub fn finish(self, final_point: Array1<f64>, certificate: Certificate) -> SolverTrace {
        SolverTrace {
            meta: self.meta,
            initial_objective: self.initial_objective,
            records: self.records,
            iterates: self.iterates,
            final_point,
            certificate,
        }
    }
}
