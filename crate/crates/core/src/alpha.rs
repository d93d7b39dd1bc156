//! Learning the clustering weight α from training networks.
//!
//! Two procedures:
//!
//! * **full**: uses complete adjacency. For each candidate α, the GMG model
//!   control power of every training graph (top-degree control set, B* = 1)
//!   is compared with the exact control power over uniform private-belief
//!   draws; α minimizes the mean relative error.
//! * **partial**: uses only degree and clustering lists. For each candidate
//!   α, an ensemble of GMG graphs with the same (n, m) is synthesized and its
//!   averaged sorted degree and clustering lists are compared with each
//!   training network's sorted lists.
//!
//! Exact control powers and synthesized ensembles are seeded per
//! (graph, trial) and shared across candidates, so candidate scores differ
//! only through α.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::top_degree_nodes;
use crate::dynamics::{control_power_of, ConvergenceSolver, ControlStrategy, PrivateBeliefDistribution};
use crate::error::{Error, Result};
use crate::estimators::{model_control_power, ModelParams};
use crate::graph::Graph;
use crate::seed;
use crate::synthesis::{synthesize_gmg, SynthesisConfig};

/// Below this magnitude of exact control power the relative error falls back
/// to the absolute error.
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-9;

pub fn relative_error(estimate: f64, exact: f64) -> f64 {
    let diff = (estimate - exact).abs();
    if exact.abs() < RELATIVE_ERROR_FLOOR {
        diff
    } else {
        diff / exact.abs()
    }
}

/// Number of control nodes for a fraction of `n`: ⌈fraction·n⌉.
pub fn control_budget(n: usize, fraction: f64) -> usize {
    // guard against 0.05 * 100 = 5.000000000000001
    let raw = fraction * n as f64;
    let rounded = raw.round();
    let c = if (raw - rounded).abs() < 1e-9 { rounded } else { raw.ceil() };
    (c as usize).min(n)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Refinement {
    pub step: f64,
    pub radius: f64,
}

/// Candidate α values, optionally refined around the coarse optimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaGrid {
    pub values: Vec<f64>,
    #[serde(default)]
    pub refine: Option<Refinement>,
}

fn round_grid(x: f64) -> f64 {
    (x * 1e9).round() / 1e9
}

impl AlphaGrid {
    /// `lo, lo+step, …, hi` (inclusive, up to rounding).
    pub fn range(lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !(hi >= lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Config(format!("invalid alpha grid {lo}:{hi}:{step}")));
        }
        let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        Ok(AlphaGrid {
            values: (0..count).map(|k| round_grid(lo + k as f64 * step)).collect(),
            refine: None,
        })
    }

    /// Parse `LO:HI:STEP`.
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(':').collect();
        let nums: Vec<f64> = parts
            .iter()
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Config(format!("grid {text:?} is not LO:HI:STEP")))?;
        match nums.as_slice() {
            [lo, hi, step] => Self::range(*lo, *hi, *step),
            _ => Err(Error::Config(format!("grid {text:?} is not LO:HI:STEP"))),
        }
    }

    pub fn single(alpha: f64) -> Self {
        AlphaGrid {
            values: vec![alpha],
            refine: None,
        }
    }

    pub fn with_refinement(mut self, step: f64, radius: f64) -> Self {
        self.refine = Some(Refinement { step, radius });
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Config("alpha grid is empty".into()));
        }
        if self.values.iter().any(|v| !v.is_finite()) || self.values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("alpha grid must be finite and strictly increasing".into()));
        }
        if let Some(r) = self.refine {
            if !(r.step > 0.0 && r.radius >= 0.0) {
                return Err(Error::Config("refinement step must be positive".into()));
            }
        }
        Ok(())
    }
}

impl Default for AlphaGrid {
    /// −4..4 in steps of 0.1, refined in steps of 0.01 within ±0.1.
    fn default() -> Self {
        AlphaGrid::range(-4.0, 4.0, 0.1)
            .expect("static grid")
            .with_refinement(0.01, 0.1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaSearchConfig {
    pub grid: AlphaGrid,
    pub trials: usize,
    pub control_fraction: f64,
    pub seed: u64,
}

impl Default for AlphaSearchConfig {
    fn default() -> Self {
        AlphaSearchConfig {
            grid: AlphaGrid::default(),
            trials: 100,
            control_fraction: 0.05,
            seed: 0,
        }
    }
}

impl AlphaSearchConfig {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if !(self.control_fraction > 0.0 && self.control_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "control fraction {} outside (0, 1]",
                self.control_fraction
            )));
        }
        Ok(())
    }
}

/// Degree and clustering lists of one network, with its size and edges per node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSummary {
    pub n: usize,
    pub m: usize,
    pub degrees: Vec<usize>,
    pub clusterings: Vec<f64>,
}

impl NetworkSummary {
    /// `m` is the edge count per node, rounded, at least 1.
    pub fn from_graph(graph: &Graph) -> Self {
        let n = graph.node_count();
        let m = ((graph.edge_count() as f64 / n.max(1) as f64).round() as usize).max(1);
        NetworkSummary {
            n,
            m,
            degrees: graph.degrees().to_vec(),
            clusterings: graph.clustering().to_vec(),
        }
    }
}

#[derive(Debug, Clone)]
pub enum TrainingSet {
    Graphs(Vec<Graph>),
    Summaries(Vec<NetworkSummary>),
}

impl TrainingSet {
    pub fn len(&self) -> usize {
        match self {
            TrainingSet::Graphs(g) => g.len(),
            TrainingSet::Summaries(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn summaries(&self) -> Vec<NetworkSummary> {
        match self {
            TrainingSet::Graphs(graphs) => graphs.iter().map(NetworkSummary::from_graph).collect(),
            TrainingSet::Summaries(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Full,
    Partial,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Method::Full),
            "partial" => Ok(Method::Partial),
            other => Err(Error::Config(format!("unknown learning method {other:?}"))),
        }
    }
}

/// A learned α with the error of every evaluated candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnedAlpha {
    pub alpha: f64,
    pub error: f64,
    pub method: Method,
    /// Evaluated candidates in increasing order.
    pub candidates: Vec<f64>,
    /// Error per candidate; infinite where the model diverged on some graph.
    pub errors: Vec<f64>,
}

/// Persisted form of a learned α.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelCard {
    pub subcategory: String,
    pub alpha: f64,
    pub method: Method,
    pub grid: Vec<f64>,
    pub error_curve: Vec<Option<f64>>,
    pub seed: u64,
}

impl ModelCard {
    pub fn new(subcategory: impl Into<String>, learned: &LearnedAlpha, seed: u64) -> Self {
        ModelCard {
            subcategory: subcategory.into(),
            alpha: learned.alpha,
            method: learned.method,
            grid: learned.candidates.clone(),
            // JSON has no infinity
            error_curve: learned.errors.iter().map(|e| e.is_finite().then_some(*e)).collect(),
            seed,
        }
    }
}

fn search<F>(grid: &AlphaGrid, method: Method, score: F) -> Result<LearnedAlpha>
where
    F: Fn(f64) -> f64 + Sync,
{
    grid.validate()?;
    let mut evaluated: BTreeMap<i64, (f64, f64)> = BTreeMap::new();
    let key = |a: f64| (a * 1e9).round() as i64;

    let coarse: Vec<(f64, f64)> = grid.values.par_iter().map(|&a| (a, score(a))).collect();
    for (a, e) in coarse {
        evaluated.insert(key(a), (a, e));
    }
    if let Some(refine) = grid.refine {
        let (center, _) = argmin(evaluated.values().copied())?;
        let steps = (refine.radius / refine.step + 1e-9).floor() as i64;
        let fine: Vec<f64> = (-steps..=steps)
            .map(|k| round_grid(center + k as f64 * refine.step))
            .filter(|a| !evaluated.contains_key(&key(*a)))
            .collect();
        let scored: Vec<(f64, f64)> = fine.par_iter().map(|&a| (a, score(a))).collect();
        for (a, e) in scored {
            evaluated.insert(key(a), (a, e));
        }
    }
    let (alpha, error) = argmin(evaluated.values().copied())?;
    Ok(LearnedAlpha {
        alpha,
        error,
        method,
        candidates: evaluated.values().map(|v| v.0).collect(),
        errors: evaluated.values().map(|v| v.1).collect(),
    })
}

fn argmin<I: Iterator<Item = (f64, f64)>>(items: I) -> Result<(f64, f64)> {
    let mut best: Option<(f64, f64)> = None;
    for (a, e) in items {
        if e.is_finite() && best.is_none_or(|(_, be)| e < be) {
            best = Some((a, e));
        }
    }
    best.ok_or_else(|| Error::Learning("every candidate alpha diverged on some training network".into()))
}

/// Exact control powers of one training graph under its top-degree control set.
struct FullInfoGraph {
    degrees: Vec<f64>,
    clusterings: Vec<f64>,
    strategy: ControlStrategy,
    exact: Vec<f64>,
}

fn prepare_full(graphs: &[Graph], config: &AlphaSearchConfig) -> Result<Vec<FullInfoGraph>> {
    graphs
        .par_iter()
        .enumerate()
        .map(|(g_idx, graph)| {
            let n = graph.node_count();
            let c = control_budget(n, config.control_fraction);
            if c == 0 {
                return Err(Error::Config(format!("training graph {g_idx} is too small for any control node")));
            }
            let strategy = ControlStrategy::uniform(top_degree_nodes(graph, c), 1.0)?;
            let solver = ConvergenceSolver::new(graph, &strategy)?;
            let exact = (0..config.trials as u64)
                .map(|trial| {
                    let mut rng = seed::derived_rng(config.seed, &[g_idx as u64, trial]);
                    let w = PrivateBeliefDistribution::Uniform.sample(&mut rng, n)?;
                    let b = solver.solve(&w)?;
                    Ok(control_power_of(&b, &w, &strategy).0)
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(FullInfoGraph {
                degrees: graph.degrees().iter().map(|&d| d as f64).collect(),
                clusterings: graph.clustering().to_vec(),
                strategy,
                exact,
            })
        })
        .collect()
}

/// Mean relative error between the GMG model control power and the exact
/// control power draws of one prepared graph; infinite when β₂ ≥ 1.
fn full_info_error(graph: &FullInfoGraph, alpha: f64) -> f64 {
    let params = match ModelParams::gmg(graph.degrees.clone(), graph.clusterings.clone(), alpha) {
        Ok(p) => p,
        Err(_) => return f64::INFINITY,
    };
    match model_control_power(&params, &graph.strategy) {
        Ok(estimate) => {
            graph.exact.iter().map(|&cp| relative_error(estimate.cp, cp)).sum::<f64>()
                / graph.exact.len() as f64
        }
        Err(_) => f64::INFINITY,
    }
}

/// Learn α from complete adjacency information.
pub fn learn_alpha_full(training: &TrainingSet, config: &AlphaSearchConfig) -> Result<LearnedAlpha> {
    config.validate()?;
    let graphs = match training {
        TrainingSet::Graphs(g) if !g.is_empty() => g,
        TrainingSet::Graphs(_) => return Err(Error::Config("training set is empty".into())),
        TrainingSet::Summaries(_) => {
            return Err(Error::Config("full-information learning needs graphs, not summaries".into()))
        }
    };
    let prepared = prepare_full(graphs, config)?;
    search(&config.grid, Method::Full, |alpha| {
        prepared.iter().map(|g| full_info_error(g, alpha)).sum::<f64>() / prepared.len() as f64
    })
}

/// Elementwise mean of descending-sorted degree and clustering lists.
#[derive(Debug, Clone, PartialEq)]
pub struct SortedProfile {
    pub degrees: Vec<f64>,
    pub clusterings: Vec<f64>,
}

impl SortedProfile {
    fn of(summary: &NetworkSummary) -> Self {
        let mut degrees: Vec<f64> = summary.degrees.iter().map(|&d| d as f64).collect();
        let mut clusterings = summary.clusterings.clone();
        sort_descending(&mut degrees);
        sort_descending(&mut clusterings);
        SortedProfile { degrees, clusterings }
    }

    fn average(profiles: &[SortedProfile]) -> Self {
        let n = profiles[0].degrees.len();
        let k = profiles.len() as f64;
        let mut degrees = vec![0.0; n];
        let mut clusterings = vec![0.0; n];
        for p in profiles {
            for i in 0..n {
                degrees[i] += p.degrees[i];
                clusterings[i] += p.clusterings[i];
            }
        }
        degrees.iter_mut().for_each(|x| *x /= k);
        clusterings.iter_mut().for_each(|x| *x /= k);
        SortedProfile { degrees, clusterings }
    }

    /// Normalized L1 distance: degree term over the target's degree sum plus
    /// clustering term over the target's clustering sum.
    pub fn distance_to(&self, target: &SortedProfile) -> f64 {
        let term = |a: &[f64], b: &[f64]| {
            let l1: f64 = a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum();
            let mass: f64 = b.iter().sum();
            l1 / if mass > 0.0 { mass } else { b.len().max(1) as f64 }
        };
        term(&self.degrees, &target.degrees) + term(&self.clusterings, &target.clusterings)
    }
}

fn sort_descending(v: &mut [f64]) {
    v.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
}

/// Averaged sorted profile of `trials` GMG graphs with the given shape.
pub fn synthesized_profile(n: usize, m: usize, alpha: f64, trials: usize, master: u64) -> Result<SortedProfile> {
    let profiles = (0..trials as u64)
        .map(|trial| {
            let cfg = SynthesisConfig::new(n, m, alpha, seed::derive(master, &[n as u64, m as u64, trial]));
            let g = synthesize_gmg(&cfg)?;
            Ok(SortedProfile::of(&NetworkSummary::from_graph(&g)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SortedProfile::average(&profiles))
}

/// Learn α from degree and clustering lists only.
pub fn learn_alpha_partial(training: &TrainingSet, config: &AlphaSearchConfig) -> Result<LearnedAlpha> {
    config.validate()?;
    let summaries = training.summaries();
    if summaries.is_empty() {
        return Err(Error::Config("training set is empty".into()));
    }
    let mut groups: BTreeMap<(usize, usize), Vec<SortedProfile>> = BTreeMap::new();
    for s in &summaries {
        if s.degrees.len() != s.n || s.clusterings.len() != s.n {
            return Err(Error::InvalidInput("summary lists do not match its node count".into()));
        }
        SynthesisConfig::new(s.n, s.m, 0.0, 0).validate()?;
        groups.entry((s.n, s.m)).or_default().push(SortedProfile::of(s));
    }
    let total = summaries.len() as f64;
    let score = |alpha: f64| -> Result<f64> {
        let mut sum = 0.0;
        for (&(n, m), targets) in &groups {
            let profile = synthesized_profile(n, m, alpha, config.trials, config.seed)?;
            sum += targets.iter().map(|t| profile.distance_to(t)).sum::<f64>();
        }
        Ok(sum / total)
    };
    search(&config.grid, Method::Partial, |alpha| score(alpha).unwrap_or(f64::INFINITY))
}

pub fn learn_alpha(method: Method, training: &TrainingSet, config: &AlphaSearchConfig) -> Result<LearnedAlpha> {
    match method {
        Method::Full => learn_alpha_full(training, config),
        Method::Partial => learn_alpha_partial(training, config),
    }
}
