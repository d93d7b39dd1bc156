//! Closed-form BA and GMG estimators.
//!
//! Both models replace the adjacency matrix by its expectation. Under BA the
//! edge probability is `d_i d_j / Σd`; under GMG it is
//! `ξ_i ξ_j Σd / η` with node weights `ξ_i = d_i (1 + γ_i)^α` and
//! `η = Σ_{i≠j} ξ_i ξ_j`. Plugging the expectation into the belief series
//! turns it into a geometric series with ratio β, which gives O(N)
//! expressions for the expected converged beliefs and the control power.

use serde::{Deserialize, Serialize};

use crate::dynamics::ControlStrategy;
use crate::error::{Error, Result};
use crate::graph::Graph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Ba,
    Gmg,
}

impl std::str::FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ba" => Ok(Model::Ba),
            "gmg" => Ok(Model::Gmg),
            other => Err(Error::Config(format!("unknown model {other:?} (expected ba or gmg)"))),
        }
    }
}

impl std::fmt::Display for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Model::Ba => "ba",
            Model::Gmg => "gmg",
        })
    }
}

/// Inputs to every closed-form estimator.
///
/// Degrees are real-valued so that ensemble-averaged degree lists can be used
/// directly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub model: Model,
    pub degrees: Vec<f64>,
    #[serde(default)]
    pub clusterings: Vec<f64>,
    #[serde(default)]
    pub alpha: f64,
    pub w_bar: Vec<f64>,
}

impl ModelParams {
    pub fn ba(degrees: Vec<f64>) -> Result<Self> {
        let n = degrees.len();
        let params = ModelParams {
            model: Model::Ba,
            degrees,
            clusterings: Vec::new(),
            alpha: 0.0,
            w_bar: vec![0.0; n],
        };
        params.validate()?;
        Ok(params)
    }

    pub fn gmg(degrees: Vec<f64>, clusterings: Vec<f64>, alpha: f64) -> Result<Self> {
        let n = degrees.len();
        let params = ModelParams {
            model: Model::Gmg,
            degrees,
            clusterings,
            alpha,
            w_bar: vec![0.0; n],
        };
        params.validate()?;
        Ok(params)
    }

    /// Degree (and for GMG, clustering) lists read off a graph; `w̄ = 0`.
    pub fn from_graph(graph: &Graph, model: Model, alpha: f64) -> Result<Self> {
        let degrees = graph.degrees().iter().map(|&d| d as f64).collect();
        match model {
            Model::Ba => Self::ba(degrees),
            Model::Gmg => Self::gmg(degrees, graph.clustering().to_vec(), alpha),
        }
    }

    pub fn with_w_bar(mut self, w_bar: Vec<f64>) -> Result<Self> {
        self.w_bar = w_bar;
        self.validate()?;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.degrees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.degrees.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.degrees.len();
        if let Some(d) = self.degrees.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
            return Err(Error::InvalidInput(format!("degree {d} is not a non-negative number")));
        }
        if self.w_bar.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: self.w_bar.len(),
            });
        }
        if self.model == Model::Gmg {
            if self.clusterings.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: self.clusterings.len(),
                });
            }
            if let Some(g) = self.clusterings.iter().find(|g| !(0.0..=1.0).contains(*g)) {
                return Err(Error::InvalidInput(format!("clustering coefficient {g} outside [0, 1]")));
            }
            if !self.alpha.is_finite() {
                return Err(Error::InvalidInput("alpha must be finite".into()));
            }
        }
        Ok(())
    }

    pub fn total_degree(&self) -> f64 {
        self.degrees.iter().sum()
    }

    /// Node weight: `d_i` under BA, `d_i (1 + γ_i)^α` under GMG.
    pub fn weight(&self, i: usize) -> f64 {
        match self.model {
            Model::Ba => self.degrees[i],
            Model::Gmg => self.degrees[i] * (1.0 + self.clusterings[i]).powf(self.alpha),
        }
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.weight(i)).collect()
    }
}

/// A raw model edge probability. The formulas can exceed 1 for hub pairs;
/// estimators use the raw value and validation experiments clamp it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeProbability(pub f64);

impl EdgeProbability {
    pub fn raw(self) -> f64 {
        self.0
    }

    pub fn exceeds_one(self) -> bool {
        self.0 > 1.0
    }

    pub fn clamped(self) -> f64 {
        self.0.clamp(0.0, 1.0)
    }
}

fn check_pair(n: usize, i: usize, j: usize) -> Result<()> {
    if i == j {
        return Err(Error::InvalidInput(format!("edge probability needs distinct nodes, got {i} twice")));
    }
    if i >= n || j >= n {
        return Err(Error::InvalidInput(format!("node index out of range for {n} nodes")));
    }
    Ok(())
}

/// BA edge probability `d_i d_j / Σ_k d_k`.
pub fn edge_prob_ba(degrees: &[f64], i: usize, j: usize) -> Result<EdgeProbability> {
    check_pair(degrees.len(), i, j)?;
    let total: f64 = degrees.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidInput("total degree is zero".into()));
    }
    Ok(EdgeProbability(degrees[i] * degrees[j] / total))
}

/// `η = Σ_{i≠j} ξ_i ξ_j`, computed as `(Σξ)² − Σξ²`.
pub fn eta(params: &ModelParams) -> Result<f64> {
    if params.len() < 2 {
        return Err(Error::InvalidInput("eta needs at least two nodes".into()));
    }
    Ok(eta_of(&params.weights()))
}

fn eta_of(weights: &[f64]) -> f64 {
    let sum: f64 = weights.iter().sum();
    let sum_sq: f64 = weights.iter().map(|x| x * x).sum();
    sum * sum - sum_sq
}

/// Precomputed pair-independent pieces for repeated GMG edge probabilities.
#[derive(Debug, Clone)]
pub struct GmgPairModel {
    weights: Vec<f64>,
    scale: f64,
}

impl GmgPairModel {
    pub fn new(params: &ModelParams) -> Result<Self> {
        let eta = eta(params)?;
        if eta <= 0.0 {
            return Err(Error::InvalidInput(format!("eta must be positive, got {eta}")));
        }
        Ok(GmgPairModel {
            weights: params.weights(),
            scale: params.total_degree() / eta,
        })
    }

    pub fn prob(&self, i: usize, j: usize) -> Result<EdgeProbability> {
        check_pair(self.weights.len(), i, j)?;
        Ok(EdgeProbability(self.weights[i] * self.weights[j] * self.scale))
    }
}

/// GMG edge probability `ξ_i ξ_j Σ_k d_k / η`. Uses the params' weights
/// regardless of `params.model`.
pub fn edge_prob_gmg(params: &ModelParams, i: usize, j: usize) -> Result<EdgeProbability> {
    let gmg = ModelParams {
        model: Model::Gmg,
        ..params.clone()
    };
    gmg.validate()?;
    GmgPairModel::new(&gmg)?.prob(i, j)
}

fn controlled_mask(params: &ModelParams, strategy: &ControlStrategy) -> Result<Vec<bool>> {
    strategy.validate(params.len())?;
    Ok(strategy.is_controlled_mask(params.len()))
}

/// Series ratio β: BA `Σ_{k∉C} d_k²/(1+d_k) / Σd`; GMG
/// `Σ_{k∉C} ξ_k²/(1+d_k) · Σd / η`.
pub fn beta(params: &ModelParams, strategy: &ControlStrategy) -> Result<f64> {
    params.validate()?;
    let mask = controlled_mask(params, strategy)?;
    Ok(Pieces::new(params, &mask)?.beta)
}

struct Pieces {
    weights: Vec<f64>,
    /// Σd / Σd (BA) or Σd / η (GMG): the factor in front of every term.
    scale: f64,
    beta: f64,
}

impl Pieces {
    fn new(params: &ModelParams, controlled: &[bool]) -> Result<Self> {
        let total = params.total_degree();
        if total <= 0.0 {
            return Err(Error::InvalidInput("total degree is zero".into()));
        }
        let weights = params.weights();
        let scale = match params.model {
            Model::Ba => 1.0 / total,
            Model::Gmg => {
                if weights.len() < 2 {
                    return Err(Error::InvalidInput("eta needs at least two nodes".into()));
                }
                let eta = eta_of(&weights);
                if eta <= 0.0 {
                    return Err(Error::InvalidInput(format!("eta must be positive, got {eta}")));
                }
                total / eta
            }
        };
        let free_mass: f64 = weights
            .iter()
            .zip(&params.degrees)
            .zip(controlled)
            .filter(|(_, &c)| !c)
            .map(|((x, d), _)| x * x / (1.0 + d))
            .sum();
        Ok(Pieces {
            beta: free_mass * scale,
            weights,
            scale,
        })
    }
}

/// Output of the closed-form estimators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEstimate {
    pub model: Model,
    /// Expected converged belief from the uncontrolled-node formula, for every node.
    pub beliefs: Vec<f64>,
    /// `Some(B*)` for controlled nodes.
    pub controlled: Vec<Option<f64>>,
    pub beta: f64,
    /// Mean over all nodes of `beliefs[i] − w̄_i` (the formula applied to every node).
    pub cp: f64,
    /// Same with controlled nodes contributing `B* − w̄_i`.
    pub cp_corrected: f64,
    pub convergent: bool,
}

/// Expected converged beliefs and model control power.
///
/// GMG estimates require `|β₂| < 1`; otherwise a non-convergence error
/// carrying β₂ is returned. BA always satisfies `β₁ < 1` for positive
/// total degree.
pub fn model_control_power(params: &ModelParams, strategy: &ControlStrategy) -> Result<ModelEstimate> {
    params.validate()?;
    let mask = controlled_mask(params, strategy)?;
    let pieces = Pieces::new(params, &mask)?;
    let convergent = pieces.beta.abs() < 1.0;
    if !convergent {
        return Err(Error::NonConvergentModel { beta: pieces.beta });
    }
    let pins = strategy.pins(params.len());
    let source: f64 = (0..params.len())
        .map(|j| match pins[j] {
            Some(pinned) => pinned * pieces.weights[j],
            None => params.w_bar[j] / (1.0 + params.degrees[j]) * pieces.weights[j],
        })
        .sum();
    let amplitude = pieces.scale * source / (1.0 - pieces.beta);
    let beliefs: Vec<f64> = (0..params.len())
        .map(|i| amplitude * pieces.weights[i] / (1.0 + params.degrees[i]))
        .collect();
    let n = params.len() as f64;
    let cp = beliefs.iter().zip(&params.w_bar).map(|(b, w)| b - w).sum::<f64>() / n;
    let cp_corrected = beliefs
        .iter()
        .zip(&params.w_bar)
        .zip(&pins)
        .map(|((b, w), pin)| pin.unwrap_or(*b) - w)
        .sum::<f64>()
        / n;
    Ok(ModelEstimate {
        model: params.model,
        beliefs,
        controlled: pins,
        beta: pieces.beta,
        cp,
        cp_corrected,
        convergent,
    })
}

/// Expected converged beliefs; same computation as [`model_control_power`].
pub fn model_converged_beliefs(params: &ModelParams, strategy: &ControlStrategy) -> Result<ModelEstimate> {
    model_control_power(params, strategy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn eta_double_loop(weights: &[f64]) -> f64 {
        let mut total = 0.0;
        for (i, a) in weights.iter().enumerate() {
            for (j, b) in weights.iter().enumerate() {
                if i != j {
                    total += a * b;
                }
            }
        }
        total
    }

    #[test]
    fn ba_edge_probabilities() {
        assert_relative_eq!(edge_prob_ba(&[2.0, 2.0, 2.0], 0, 1).unwrap().raw(), 2.0 / 3.0);
        assert_relative_eq!(edge_prob_ba(&[2.0, 1.0, 1.0], 0, 1).unwrap().raw(), 0.5);
        let p = edge_prob_ba(&[5.0, 5.0, 5.0, 5.0], 0, 1).unwrap();
        assert_relative_eq!(p.raw(), 1.25);
        assert!(p.exceeds_one());
        assert_eq!(p.clamped(), 1.0);
        assert!(edge_prob_ba(&[1.0, 1.0], 1, 1).is_err());
        assert!(edge_prob_ba(&[0.0, 0.0], 0, 1).is_err());
    }

    #[test]
    fn gmg_edge_probabilities() {
        let tri = ModelParams::gmg(vec![2.0; 3], vec![1.0; 3], 1.0).unwrap();
        assert_relative_eq!(eta(&tri).unwrap(), 96.0);
        assert_relative_eq!(eta_double_loop(&tri.weights()), 96.0);
        assert_relative_eq!(edge_prob_gmg(&tri, 0, 2).unwrap().raw(), 1.0);

        for alpha in [-2.0, 0.0, 3.0] {
            let star = ModelParams::gmg(vec![2.0, 1.0, 1.0], vec![0.0; 3], alpha).unwrap();
            assert_relative_eq!(eta(&star).unwrap(), 10.0);
            assert_relative_eq!(edge_prob_gmg(&star, 0, 1).unwrap().raw(), 0.8);
            assert_relative_eq!(edge_prob_gmg(&star, 1, 2).unwrap().raw(), 0.4);
        }

        let flat = ModelParams::gmg(vec![2.0; 3], vec![1.0; 3], 0.0).unwrap();
        assert_relative_eq!(eta(&flat).unwrap(), 24.0);
        assert_relative_eq!(edge_prob_gmg(&flat, 1, 0).unwrap().raw(), 1.0);
        assert!(edge_prob_gmg(&flat, 1, 1).is_err());
        assert!(eta(&ModelParams::gmg(vec![1.0], vec![0.0], 1.0).unwrap()).is_err());
    }

    #[test]
    fn beta_examples() {
        let star = ModelParams::ba(vec![3.0, 1.0, 1.0, 1.0]).unwrap();
        assert_relative_eq!(beta(&star, &ControlStrategy::none()).unwrap(), 0.625);
        let all = ControlStrategy::uniform(vec![0, 1, 2, 3], 1.0).unwrap();
        assert_eq!(beta(&star, &all).unwrap(), 0.0);

        let tri = ModelParams::gmg(vec![2.0; 3], vec![1.0; 3], 1.0).unwrap();
        assert_relative_eq!(beta(&tri, &ControlStrategy::none()).unwrap(), 1.0);
        assert!(matches!(
            model_control_power(&tri, &ControlStrategy::none()),
            Err(Error::NonConvergentModel { .. })
        ));
    }

    #[test]
    fn zero_source_gives_zero_beliefs() {
        let p = ModelParams::ba(vec![1.0, 2.0, 3.0, 2.0]).unwrap();
        let est = model_control_power(&p, &ControlStrategy::none()).unwrap();
        assert!(est.beliefs.iter().all(|&b| b == 0.0));
        assert_eq!(est.cp, 0.0);
        assert!(est.convergent);
    }

    #[test]
    fn ba_path_with_center_control() {
        let p = ModelParams::ba(vec![1.0, 2.0, 1.0]).unwrap();
        let strategy = ControlStrategy::uniform(vec![1], 1.0).unwrap();
        let est = model_control_power(&p, &strategy).unwrap();
        assert_relative_eq!(est.beta, 0.25);
        assert_relative_eq!(est.beliefs[0], 1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(est.beliefs[1], 4.0 / 9.0, epsilon = 1e-15);
        assert_relative_eq!(est.cp, 10.0 / 27.0, epsilon = 1e-15);
        assert_relative_eq!(est.cp_corrected, (1.0 / 3.0 + 1.0 + 1.0 / 3.0) / 3.0, epsilon = 1e-15);
        assert_eq!(est.controlled, vec![None, Some(1.0), None]);
    }

    #[test]
    fn gmg_path_with_center_control() {
        let p = ModelParams::gmg(vec![1.0, 2.0, 1.0], vec![0.0; 3], 0.0).unwrap();
        let strategy = ControlStrategy::uniform(vec![1], 1.0).unwrap();
        let est = model_control_power(&p, &strategy).unwrap();
        assert_relative_eq!(est.beta, 0.4, epsilon = 1e-15);
        assert_relative_eq!(est.beliefs[0], 2.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(est.beliefs[1], 8.0 / 9.0, epsilon = 1e-15);
        assert_relative_eq!(est.cp, 20.0 / 27.0, epsilon = 1e-15);
    }

    #[test]
    fn nonzero_mean_private_beliefs() {
        // with no control and constant w̄ the source term is w̄ Σ ξ/(1+d)
        let p = ModelParams::ba(vec![1.0, 2.0, 1.0]).unwrap().with_w_bar(vec![0.5; 3]).unwrap();
        let est = model_control_power(&p, &ControlStrategy::none()).unwrap();
        let total = 4.0;
        let ratio0 = 0.5; // d_0 / (1 + d_0)
        let source = 0.5 * (0.5 + 2.0 / 3.0 + 0.5);
        let beta = (0.5 + 4.0 / 3.0 + 0.5) / total;
        assert_relative_eq!(est.beta, beta, epsilon = 1e-15);
        assert_relative_eq!(est.beliefs[0], source * ratio0 / total / (1.0 - beta), epsilon = 1e-15);
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::ba(vec![1.0, -1.0]).is_err());
        assert!(ModelParams::gmg(vec![1.0, 1.0], vec![0.5], 1.0).is_err());
        assert!(ModelParams::gmg(vec![1.0, 1.0], vec![0.5, 1.5], 1.0).is_err());
        assert!(ModelParams::gmg(vec![1.0, 1.0], vec![0.5, 0.5], f64::NAN).is_err());
        assert!(ModelParams::ba(vec![1.0, 1.0]).unwrap().with_w_bar(vec![0.0]).is_err());
        assert_eq!("GMG".parse::<Model>().unwrap(), Model::Gmg);
        assert!("er".parse::<Model>().is_err());
    }
}
