//! Control-set selection.
//!
//! Under BA the literal model control power is maximized by the `c` nodes of
//! largest degree; under GMG by the `c` nodes of largest `ξ_i = d_i(1+γ_i)^α`,
//! provided the applicability condition
//!
//! ```text
//! 1/β₂ > 1 + max(1, 2^α) · Σ_{C} ξ / Σ_{k∉C} ξ_k² / (1 + d_k)
//! ```
//!
//! holds for the chosen set. [`brute_force_control_set`] enumerates every
//! subset and serves as the independent check of both rules.

use std::cmp::Ordering;

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{control_power_expected, ControlStrategy};
use crate::error::{Error, Result};
use crate::estimators::{beta, model_control_power, Model, ModelParams};
use crate::graph::Graph;

/// Largest number of subsets [`brute_force_control_set`] will enumerate.
pub const ENUMERATION_LIMIT: u128 = 1_000_000;

/// Both sides of the GMG applicability inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GmgCondition {
    pub beta: f64,
    /// 1/β₂ (infinite when β₂ = 0).
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
    /// β₂ = 0: every node with weight is controlled, the condition holds trivially.
    pub trivially_true: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub strategy: ControlStrategy,
    /// Literal model control power of `strategy`; `None` when the GMG series
    /// diverges for this set.
    pub predicted_cp: Option<f64>,
    pub beta: f64,
    /// GMG only.
    pub condition: Option<GmgCondition>,
}

impl OptimizationResult {
    pub fn condition_satisfied(&self) -> Option<bool> {
        self.condition.map(|c| c.satisfied)
    }
}

/// Indices of the `c` largest keys, ties broken by smaller index, returned in
/// ascending index order.
pub fn top_c_by(keys: &[f64], c: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|&a, &b| keys[b].partial_cmp(&keys[a]).unwrap_or(Ordering::Equal).then(a.cmp(&b)));
    let mut chosen: Vec<usize> = order.into_iter().take(c).collect();
    chosen.sort_unstable();
    chosen
}

/// Top-degree nodes of a graph (ties to smaller index).
pub fn top_degree_nodes(graph: &Graph, c: usize) -> Vec<usize> {
    let keys: Vec<f64> = graph.degrees().iter().map(|&d| d as f64).collect();
    top_c_by(&keys, c)
}

/// Evaluate the GMG applicability inequality for `strategy`.
pub fn check_gmg_condition(params: &ModelParams, strategy: &ControlStrategy) -> Result<GmgCondition> {
    if params.model != Model::Gmg {
        return Err(Error::InvalidInput("the applicability condition is defined for GMG params".into()));
    }
    let beta = beta(params, strategy)?;
    let mask = strategy.is_controlled_mask(params.len());
    let weights = params.weights();
    let controlled_mass: f64 = (0..params.len()).filter(|&i| mask[i]).map(|i| weights[i]).sum();
    let free_mass: f64 = (0..params.len())
        .filter(|&i| !mask[i])
        .map(|i| weights[i] * weights[i] / (1.0 + params.degrees[i]))
        .sum();
    if beta == 0.0 {
        return Ok(GmgCondition {
            beta,
            lhs: f64::INFINITY,
            rhs: f64::INFINITY,
            satisfied: true,
            trivially_true: true,
        });
    }
    let factor = f64::max(1.0, 2f64.powf(params.alpha));
    let lhs = 1.0 / beta;
    let rhs = 1.0 + factor * controlled_mass / free_mass;
    Ok(GmgCondition {
        beta,
        lhs,
        rhs,
        satisfied: lhs > rhs,
        trivially_true: false,
    })
}

fn evaluate(params: &ModelParams, strategy: ControlStrategy) -> Result<OptimizationResult> {
    let beta = beta(params, &strategy)?;
    let predicted_cp = match model_control_power(params, &strategy) {
        Ok(estimate) => Some(estimate.cp),
        Err(Error::NonConvergentModel { .. }) => None,
        Err(e) => return Err(e),
    };
    let condition = match params.model {
        Model::Gmg => Some(check_gmg_condition(params, &strategy)?),
        Model::Ba => None,
    };
    Ok(OptimizationResult {
        strategy,
        predicted_cp,
        beta,
        condition,
    })
}

/// The closed-form optimal control set: top-`c` degrees (BA) or top-`c`
/// weights ξ (GMG), all broadcasting belief 1.
pub fn optimal_control_set(params: &ModelParams, c: usize) -> Result<OptimizationResult> {
    params.validate()?;
    if c > params.len() {
        return Err(Error::InvalidInput(format!(
            "budget {c} exceeds the {} available nodes",
            params.len()
        )));
    }
    let chosen = top_c_by(&params.weights(), c);
    evaluate(params, ControlStrategy::uniform(chosen, 1.0)?)
}

/// What [`brute_force_control_set`] maximizes.
#[derive(Debug, Clone, Copy)]
pub enum Objective<'a> {
    /// Literal model control power from the closed-form estimator.
    ModelCp,
    /// Exact expected control power on a graph, with private beliefs at `w̄`.
    ExactCp(&'a Graph),
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Exhaustively evaluate every `c`-subset and return the best one (the
/// lexicographically smallest among exact ties). Subsets whose model series
/// diverges are skipped.
pub fn brute_force_control_set(
    params: &ModelParams,
    c: usize,
    objective: Objective<'_>,
) -> Result<OptimizationResult> {
    params.validate()?;
    let n = params.len();
    if c > n {
        return Err(Error::InvalidInput(format!("budget {c} exceeds the {n} available nodes")));
    }
    let count = binomial(n, c);
    if count > ENUMERATION_LIMIT {
        return Err(Error::EnumerationLimit {
            count,
            limit: ENUMERATION_LIMIT,
        });
    }
    if let Objective::ExactCp(graph) = objective {
        if graph.node_count() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: graph.node_count(),
            });
        }
    }

    let score = |subset: &[usize]| -> Result<Option<f64>> {
        let strategy = ControlStrategy::uniform(subset.to_vec(), 1.0)?;
        match objective {
            Objective::ModelCp => match model_control_power(params, &strategy) {
                Ok(estimate) => Ok(Some(estimate.cp)),
                Err(Error::NonConvergentModel { .. }) => Ok(None),
                Err(e) => Err(e),
            },
            Objective::ExactCp(graph) => control_power_expected(graph, &params.w_bar, &strategy).map(Some),
        }
    };

    let best = (0..n)
        .combinations(c)
        .par_bridge()
        .map(|subset| score(&subset).map(|value| value.map(|v| (v, subset))))
        .try_fold(
            || None,
            |acc: Option<(f64, Vec<usize>)>, item| item.map(|candidate| better(acc, candidate)),
        )
        .try_reduce(|| None, |a, b| Ok(better(a, b)))?;

    let (_, subset) = best.ok_or(Error::NonConvergentModel { beta: f64::NAN })?;
    evaluate(params, ControlStrategy::uniform(subset, 1.0)?)
}

fn better(a: Option<(f64, Vec<usize>)>, b: Option<(f64, Vec<usize>)>) -> Option<(f64, Vec<usize>)> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(a), Some(b)) => match a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal) {
            Ordering::Greater => Some(a),
            Ordering::Less => Some(b),
            Ordering::Equal => Some(if a.1 <= b.1 { a } else { b }),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ba_top_degree_with_index_tie_break() {
        let p = ModelParams::ba(vec![5.0, 3.0, 3.0, 2.0, 1.0]).unwrap();
        let r = optimal_control_set(&p, 2).unwrap();
        assert_eq!(r.strategy.control_set, vec![0, 1]);
        assert_eq!(r.strategy.controlled_beliefs, vec![1.0, 1.0]);
        assert!(r.condition.is_none());
        assert_eq!(
            r.predicted_cp.unwrap(),
            model_control_power(&p, &r.strategy).unwrap().cp
        );
        assert!(optimal_control_set(&p, 6).is_err());
        assert!(optimal_control_set(&p, 0).unwrap().strategy.is_empty());
    }

    #[test]
    fn gmg_ordering_follows_alpha() {
        let p = ModelParams::gmg(vec![2.0, 2.0], vec![0.5, 0.0], 1.0).unwrap();
        assert_eq!(optimal_control_set(&p, 1).unwrap().strategy.control_set, vec![0]);
        let p = ModelParams::gmg(vec![2.0, 2.0], vec![0.5, 0.0], -1.0).unwrap();
        assert_eq!(optimal_control_set(&p, 1).unwrap().strategy.control_set, vec![1]);
    }

    #[test]
    fn condition_examples() {
        let path = ModelParams::gmg(vec![1.0, 2.0, 1.0], vec![0.0; 3], 0.0).unwrap();
        let none = check_gmg_condition(&path, &ControlStrategy::none()).unwrap();
        assert_eq!(none.satisfied, none.beta < 1.0);
        assert_relative_eq!(none.rhs, 1.0);

        let center = ControlStrategy::uniform(vec![1], 1.0).unwrap();
        let cond = check_gmg_condition(&path, &center).unwrap();
        assert_relative_eq!(cond.beta, 0.4, epsilon = 1e-15);
        assert_relative_eq!(cond.lhs, 2.5, epsilon = 1e-14);
        assert_relative_eq!(cond.rhs, 3.0, epsilon = 1e-14);
        assert!(!cond.satisfied);

        let tri = ModelParams::gmg(vec![2.0; 3], vec![1.0; 3], 1.0).unwrap();
        assert!(!check_gmg_condition(&tri, &ControlStrategy::none()).unwrap().satisfied);

        let all = ControlStrategy::uniform(vec![0, 1, 2], 1.0).unwrap();
        let trivial = check_gmg_condition(&path, &all).unwrap();
        assert!(trivial.trivially_true && trivial.satisfied);

        let ba = ModelParams::ba(vec![1.0, 2.0, 1.0]).unwrap();
        assert!(check_gmg_condition(&ba, &center).is_err());
    }

    #[test]
    fn brute_force_path_prefers_center() {
        let p = ModelParams::ba(vec![1.0, 2.0, 1.0]).unwrap();
        let r = brute_force_control_set(&p, 1, Objective::ModelCp).unwrap();
        assert_eq!(r.strategy.control_set, vec![1]);
        let full = brute_force_control_set(&p, 3, Objective::ModelCp).unwrap();
        assert_eq!(full.strategy.control_set, vec![0, 1, 2]);
    }

    #[test]
    fn brute_force_exact_objective_on_a_graph() {
        let g = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let p = ModelParams::from_graph(&g, Model::Ba, 0.0).unwrap();
        let r = brute_force_control_set(&p, 1, Objective::ExactCp(&g)).unwrap();
        assert_eq!(r.strategy.control_set, vec![1]);
        let all = brute_force_control_set(&p, 3, Objective::ExactCp(&g)).unwrap();
        assert_eq!(all.strategy.control_set, vec![0, 1, 2]);
    }

    #[test]
    fn brute_force_ties_pick_smallest_subset() {
        let p = ModelParams::ba(vec![2.0; 6]).unwrap();
        let r = brute_force_control_set(&p, 2, Objective::ModelCp).unwrap();
        assert_eq!(r.strategy.control_set, vec![0, 1]);
    }

    #[test]
    fn enumeration_guard() {
        let p = ModelParams::ba(vec![1.0; 60]).unwrap();
        assert!(matches!(
            brute_force_control_set(&p, 10, Objective::ModelCp),
            Err(Error::EnumerationLimit { .. })
        ));
        assert_eq!(binomial(60, 10), 75_394_027_566);
        assert_eq!(binomial(5, 0), 1);
    }

    #[test]
    fn top_c_order() {
        assert_eq!(top_c_by(&[1.0, 3.0, 3.0, 2.0], 2), vec![1, 2]);
        assert_eq!(top_c_by(&[1.0, 3.0, 3.0, 2.0], 3), vec![1, 2, 3]);
        assert_eq!(top_c_by(&[1.0, 1.0], 0), Vec::<usize>::new());
    }
}
