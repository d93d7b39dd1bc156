//! Exact belief dynamics on a fixed graph.
//!
//! One update maps the row vector `B(T-1)` to
//! `B(T) = [w* + B(T-1) A*] M + V`, i.e. every uncontrolled node takes the
//! average of its private belief and its neighbors' current beliefs,
//!
//! ```text
//! b'_i = (w_i + Σ_{j ∈ N(i)} b_j) / (1 + d_i),
//! ```
//!
//! while controlled nodes are pinned to their broadcast belief. The fixed
//! point `B(∞) = [w* M + V][I − A* M]^{-1}` is computed either by iterating
//! the update or by a direct linear solve.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, DENSE_THRESHOLD};
use crate::seed::{self, Rng};

pub const DEFAULT_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_MAX_STEPS: usize = 100_000;

const BOUND_SLACK: f64 = 1e-12;

/// Control set with the belief each controlled node broadcasts.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlStrategy {
    pub control_set: Vec<usize>,
    pub controlled_beliefs: Vec<f64>,
}

impl ControlStrategy {
    pub fn new(control_set: Vec<usize>, controlled_beliefs: Vec<f64>) -> Result<Self> {
        let strategy = ControlStrategy {
            control_set,
            controlled_beliefs,
        };
        strategy.check_shape()?;
        Ok(strategy)
    }

    /// No control nodes.
    pub fn none() -> Self {
        Self::default()
    }

    /// Every node in `nodes` broadcasts `belief`.
    pub fn uniform(nodes: Vec<usize>, belief: f64) -> Result<Self> {
        let beliefs = vec![belief; nodes.len()];
        Self::new(nodes, beliefs)
    }

    pub fn len(&self) -> usize {
        self.control_set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.control_set.is_empty()
    }

    fn check_shape(&self) -> Result<()> {
        if self.control_set.len() != self.controlled_beliefs.len() {
            return Err(Error::InvalidInput(format!(
                "{} control nodes but {} controlled beliefs",
                self.control_set.len(),
                self.controlled_beliefs.len()
            )));
        }
        if let Some(b) = self
            .controlled_beliefs
            .iter()
            .find(|b| !(-1.0..=1.0).contains(*b))
        {
            return Err(Error::InvalidInput(format!(
                "controlled belief {b} outside [-1, 1]"
            )));
        }
        let mut sorted = self.control_set.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidInput("control set has repeated nodes".into()));
        }
        Ok(())
    }

    /// Validate against a graph size.
    pub fn validate(&self, n: usize) -> Result<()> {
        self.check_shape()?;
        if let Some(&i) = self.control_set.iter().find(|&&i| i >= n) {
            return Err(Error::InvalidInput(format!(
                "control node {i} out of range for {n} nodes"
            )));
        }
        Ok(())
    }

    /// Per-node pinned belief, `None` for uncontrolled nodes.
    pub fn pins(&self, n: usize) -> Vec<Option<f64>> {
        let mut pins = vec![None; n];
        for (&i, &b) in self.control_set.iter().zip(&self.controlled_beliefs) {
            pins[i] = Some(b);
        }
        pins
    }

    pub fn is_controlled_mask(&self, n: usize) -> Vec<bool> {
        let mut mask = vec![false; n];
        for &i in &self.control_set {
            mask[i] = true;
        }
        mask
    }
}

/// Current beliefs `b` at time step `t`, with the private beliefs `w`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefState {
    pub b: Vec<f64>,
    pub w: Vec<f64>,
    pub t: usize,
}

impl BeliefState {
    /// `b(0) = w`, with controlled entries pinned.
    pub fn initial(w: Vec<f64>, strategy: &ControlStrategy) -> Result<Self> {
        check_beliefs(&w)?;
        strategy.validate(w.len())?;
        let mut b = w.clone();
        for (&i, &belief) in strategy.control_set.iter().zip(&strategy.controlled_beliefs) {
            b[i] = belief;
        }
        Ok(BeliefState { b, w, t: 0 })
    }
}

fn check_beliefs(w: &[f64]) -> Result<()> {
    match w.iter().position(|x| !(-1.0..=1.0).contains(x)) {
        Some(i) => Err(Error::InvalidInput(format!(
            "private belief w[{i}] = {} outside [-1, 1]",
            w[i]
        ))),
        None => Ok(()),
    }
}

fn check_dimension(graph: &Graph, len: usize) -> Result<()> {
    if graph.node_count() != len {
        return Err(Error::DimensionMismatch {
            expected: graph.node_count(),
            actual: len,
        });
    }
    Ok(())
}

fn update_into(graph: &Graph, w: &[f64], b: &[f64], pins: &[Option<f64>], out: &mut [f64]) {
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = match pins[i] {
            Some(pinned) => pinned,
            None => {
                let incoming: f64 = graph.neighbors(i).iter().map(|&j| b[j]).sum();
                (w[i] + incoming) / (1.0 + graph.degree(i) as f64)
            }
        };
    }
}

/// Apply one synchronous update.
pub fn step(state: &BeliefState, graph: &Graph, strategy: &ControlStrategy) -> Result<BeliefState> {
    check_dimension(graph, state.b.len())?;
    check_dimension(graph, state.w.len())?;
    strategy.validate(graph.node_count())?;
    let pins = strategy.pins(graph.node_count());
    let mut next = vec![0.0; state.b.len()];
    update_into(graph, &state.w, &state.b, &pins, &mut next);
    debug_assert!(next.iter().all(|x| x.abs() <= 1.0 + BOUND_SLACK));
    Ok(BeliefState {
        b: next,
        w: state.w.clone(),
        t: state.t + 1,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterativeOutcome {
    pub beliefs: Vec<f64>,
    pub steps: usize,
    /// ∞-norm of the last update.
    pub residual: f64,
}

/// Iterate the update from `b(0) = w` until successive iterates differ by
/// less than `tol` in the ∞-norm.
pub fn converge_iterative(
    graph: &Graph,
    w: &[f64],
    strategy: &ControlStrategy,
    tol: f64,
    t_max: usize,
) -> Result<IterativeOutcome> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    check_dimension(graph, w.len())?;
    let state = BeliefState::initial(w.to_vec(), strategy)?;
    let pins = strategy.pins(graph.node_count());
    let mut current = state.b;
    let mut next = vec![0.0; current.len()];
    let mut residual = f64::INFINITY;
    for steps in 1..=t_max {
        update_into(graph, w, &current, &pins, &mut next);
        residual = current
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        std::mem::swap(&mut current, &mut next);
        if residual < tol {
            return Ok(IterativeOutcome {
                beliefs: current,
                steps,
                residual,
            });
        }
    }
    Err(Error::NonConvergence {
        steps: t_max,
        residual,
    })
}

/// ∞-norm distance between `b` and one update applied to `b`.
pub fn fixed_point_residual(graph: &Graph, w: &[f64], strategy: &ControlStrategy, b: &[f64]) -> f64 {
    let pins = strategy.pins(graph.node_count());
    let mut next = vec![0.0; b.len()];
    update_into(graph, w, b, &pins, &mut next);
    b.iter().zip(&next).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

enum Factorization {
    Dense(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
    Sparse,
}

/// Linear solver for converged beliefs, reusable across private-belief
/// vectors for one (graph, strategy) pair.
///
/// Writing the fixed point as a column vector, `(I − A* M)^T b = (w* M + V)^T`,
/// row i of the system reads `b_i − Σ_{j∈N(i)} b_j / (1 + d_i) = w_i / (1 + d_i)`
/// for uncontrolled i and `b_i = B*_i` for controlled i.
pub struct ConvergenceSolver<'g> {
    graph: &'g Graph,
    pins: Vec<Option<f64>>,
    factorization: Factorization,
}

const GAUSS_SEIDEL_TOL: f64 = 1e-15;
const GAUSS_SEIDEL_MAX_SWEEPS: usize = 1_000_000;

impl<'g> ConvergenceSolver<'g> {
    pub fn new(graph: &'g Graph, strategy: &ControlStrategy) -> Result<Self> {
        strategy.validate(graph.node_count())?;
        let pins = strategy.pins(graph.node_count());
        let factorization = if graph.node_count() < DENSE_THRESHOLD {
            let n = graph.node_count();
            let mut system = DMatrix::<f64>::identity(n, n);
            for i in (0..n).filter(|&i| pins[i].is_none()) {
                let scale = 1.0 / (1.0 + graph.degree(i) as f64);
                for &j in graph.neighbors(i) {
                    system[(i, j)] = -scale;
                }
            }
            let lu = system.lu();
            if !lu.is_invertible() {
                let u = lu.u();
                let diag = u.diagonal().map(f64::abs);
                let condition = diag.max() / diag.min();
                return Err(Error::Solve { condition });
            }
            Factorization::Dense(lu)
        } else {
            Factorization::Sparse
        };
        Ok(ConvergenceSolver {
            graph,
            pins,
            factorization,
        })
    }

    fn rhs(&self, w: &[f64]) -> Vec<f64> {
        w.iter()
            .enumerate()
            .map(|(i, &wi)| match self.pins[i] {
                Some(pinned) => pinned,
                None => wi / (1.0 + self.graph.degree(i) as f64),
            })
            .collect()
    }

    /// Converged beliefs `B(∞)` for private beliefs `w`.
    pub fn solve(&self, w: &[f64]) -> Result<Vec<f64>> {
        check_dimension(self.graph, w.len())?;
        let rhs = self.rhs(w);
        match &self.factorization {
            Factorization::Dense(lu) => {
                let solution = lu
                    .solve(&DVector::from_vec(rhs))
                    .ok_or(Error::Solve { condition: f64::INFINITY })?;
                Ok(solution.as_slice().to_vec())
            }
            Factorization::Sparse => self.gauss_seidel(&rhs),
        }
    }

    // The system is strictly row diagonally dominant, so Gauss-Seidel converges.
    fn gauss_seidel(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let mut b = rhs.to_vec();
        let mut change = f64::INFINITY;
        for _ in 0..GAUSS_SEIDEL_MAX_SWEEPS {
            change = 0.0;
            for i in 0..b.len() {
                if self.pins[i].is_some() {
                    continue;
                }
                let incoming: f64 = self.graph.neighbors(i).iter().map(|&j| b[j]).sum();
                let updated = rhs[i] + incoming / (1.0 + self.graph.degree(i) as f64);
                change = f64::max(change, (updated - b[i]).abs());
                b[i] = updated;
            }
            if change < GAUSS_SEIDEL_TOL {
                return Ok(b);
            }
        }
        Err(Error::NonConvergence {
            steps: GAUSS_SEIDEL_MAX_SWEEPS,
            residual: change,
        })
    }
}

/// Converged beliefs by direct linear solve.
pub fn converge_exact(graph: &Graph, w: &[f64], strategy: &ControlStrategy) -> Result<Vec<f64>> {
    check_dimension(graph, w.len())?;
    check_beliefs(w)?;
    ConvergenceSolver::new(graph, strategy)?.solve(w)
}

/// Draws an `n`-vector of private beliefs.
pub type BeliefSampler = Arc<dyn Fn(&mut Rng, usize) -> Vec<f64> + Send + Sync>;

/// Distribution of the private-belief vector.
#[derive(Clone)]
pub enum PrivateBeliefDistribution {
    /// Independent uniform draws on [-1, 1]; mean zero.
    Uniform,
    /// A fixed vector.
    Constant(Vec<f64>),
    Custom { sampler: BeliefSampler, mean: Vec<f64> },
}

impl std::fmt::Debug for PrivateBeliefDistribution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Uniform => write!(f, "Uniform"),
            Self::Constant(v) => f.debug_tuple("Constant").field(v).finish(),
            Self::Custom { mean, .. } => f.debug_struct("Custom").field("mean", mean).finish(),
        }
    }
}

impl PrivateBeliefDistribution {
    pub fn sample(&self, rng: &mut Rng, n: usize) -> Result<Vec<f64>> {
        let w = match self {
            Self::Uniform => (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect(),
            Self::Constant(v) => v.clone(),
            Self::Custom { sampler, .. } => sampler(rng, n),
        };
        if w.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: w.len(),
            });
        }
        check_beliefs(&w)?;
        Ok(w)
    }

    /// Per-node expected private belief.
    pub fn mean(&self, n: usize) -> Vec<f64> {
        match self {
            Self::Uniform => vec![0.0; n],
            Self::Constant(v) => v.clone(),
            Self::Custom { mean, .. } => mean.clone(),
        }
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(self, Self::Constant(_))
    }
}

/// Monte Carlo estimate of network control power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlPowerEstimate {
    /// Signed mean of (1/N) Σ_i (B_i(∞) − w_i), with w the drawn private beliefs.
    pub mean: f64,
    pub std_error: f64,
    /// |mean|, the l1-norm reading of the same quantity.
    pub abs_mean: f64,
    /// Same mean but with controlled nodes' private beliefs set to their
    /// broadcast value, so controlled nodes contribute zero.
    pub pinned_mean: f64,
    pub samples: usize,
}

/// Per-draw control power: (signed, pinned) means of `b − w`.
pub fn control_power_of(b: &[f64], w: &[f64], strategy: &ControlStrategy) -> (f64, f64) {
    let n = b.len() as f64;
    let total: f64 = b.iter().zip(w).map(|(bi, wi)| bi - wi).sum();
    let controlled: f64 = strategy
        .control_set
        .iter()
        .zip(&strategy.controlled_beliefs)
        .map(|(&i, &pinned)| pinned - w[i])
        .sum();
    (total / n, (total - controlled) / n)
}

/// Exact control power averaged over `n_samples` private-belief draws.
/// Sample `k` uses the seed derived from `(seed, k)`.
pub fn control_power_exact(
    graph: &Graph,
    distribution: &PrivateBeliefDistribution,
    strategy: &ControlStrategy,
    n_samples: usize,
    seed: u64,
) -> Result<ControlPowerEstimate> {
    if n_samples == 0 {
        return Err(Error::InvalidInput("n_samples must be at least 1".into()));
    }
    let n = graph.node_count();
    let solver = ConvergenceSolver::new(graph, strategy)?;
    let draws: Vec<(f64, f64)> = (0..n_samples as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = seed::derived_rng(seed, &[k]);
            let w = distribution.sample(&mut rng, n)?;
            let b = solver.solve(&w)?;
            Ok(control_power_of(&b, &w, strategy))
        })
        .collect::<Result<_>>()?;
    Ok(summarize(&draws))
}

fn summarize(draws: &[(f64, f64)]) -> ControlPowerEstimate {
    let k = draws.len() as f64;
    let mean = draws.iter().map(|d| d.0).sum::<f64>() / k;
    let pinned_mean = draws.iter().map(|d| d.1).sum::<f64>() / k;
    let std_error = if draws.len() > 1 {
        let var = draws.iter().map(|d| (d.0 - mean).powi(2)).sum::<f64>() / (k - 1.0);
        (var / k).sqrt()
    } else {
        0.0
    };
    ControlPowerEstimate {
        mean,
        std_error,
        abs_mean: mean.abs(),
        pinned_mean,
        samples: draws.len(),
    }
}

/// Expected control power via linearity: `E[B(∞)]` is the converged belief
/// for the mean private-belief vector.
pub fn control_power_expected(graph: &Graph, w_bar: &[f64], strategy: &ControlStrategy) -> Result<f64> {
    let b = ConvergenceSolver::new(graph, strategy)?.solve(w_bar)?;
    Ok(control_power_of(&b, w_bar, strategy).0)
}

/// JSON document for a belief computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefDocument {
    pub w: Vec<f64>,
    pub control_set: Vec<usize>,
    pub controlled_beliefs: Vec<f64>,
    pub b_inf: Vec<f64>,
}
