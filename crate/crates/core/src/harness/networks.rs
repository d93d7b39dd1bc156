use std::fs::File;
use std::io::BufReader;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{report, tag, AlphaLearning, DataSource, ExperimentConfig, ExperimentReport, Results};
use crate::alpha::{control_budget, learn_alpha, relative_error, AlphaSearchConfig, Method, TrainingSet};
use crate::control::{optimal_control_set, top_degree_nodes};
use crate::dynamics::{control_power_exact, ControlStrategy, PrivateBeliefDistribution};
use crate::error::{Error, Result};
use crate::estimators::{model_control_power, Model, ModelParams};
use crate::graph::{parse_edge_list, snowball_sample, Graph};
use crate::harness::Aggregate;
use crate::seed;
use crate::synthesis::{synthesize_ba, synthesize_gmg, SynthesisConfig};

/// The GMG estimator's α for one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellAlpha {
    pub cell: String,
    pub alpha: f64,
    pub method: Option<Method>,
    /// Training error of the learned α.
    pub training_error: Option<f64>,
}

/// Exact and model control power of one test network under its top-degree set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpRecord {
    pub cell: String,
    pub index: usize,
    pub n: usize,
    pub edges: usize,
    pub control_size: usize,
    pub exact_cp: f64,
    pub exact_std_error: f64,
    pub ba_cp: f64,
    /// `None` when the GMG series diverges (β₂ ≥ 1).
    pub gmg_cp: Option<f64>,
    pub gmg_beta: f64,
    pub ba_error: f64,
    pub gmg_error: Option<f64>,
    /// Errors of the estimates with controlled nodes pinned to their broadcast belief.
    pub ba_error_corrected: f64,
    pub gmg_error_corrected: Option<f64>,
    pub gmg_better: bool,
}

/// Exact control power of the top-degree and top-ξ sets on one network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyRecord {
    pub cell: String,
    pub index: usize,
    pub n: usize,
    pub control_size: usize,
    /// Space-separated node indices.
    pub ba_set: String,
    pub gmg_set: String,
    pub identical_sets: bool,
    pub ba_cp: f64,
    pub ba_std_error: f64,
    pub gmg_cp: f64,
    pub gmg_std_error: f64,
    pub gmg_wins: bool,
    pub condition_satisfied: Option<bool>,
}

enum CellSource {
    Synthetic { model: Model, n: usize, m: usize, alpha: f64 },
    Sampled { graph: Graph, sample_size: usize },
}

struct Cell {
    label: String,
    key: Vec<u64>,
    source: CellSource,
    tests: usize,
}

impl Cell {
    /// Network `index` of the test (`tag::TEST`) or training (`tag::TRAIN`) pool.
    fn network(&self, pool: u64, index: usize, master: u64) -> Result<Graph> {
        let mut path = vec![pool];
        path.extend(&self.key);
        path.push(index as u64);
        let seed = seed::derive(master, &path);
        match &self.source {
            CellSource::Synthetic { model, n, m, alpha } => {
                let cfg = SynthesisConfig::new(*n, *m, *alpha, seed);
                match model {
                    Model::Ba => synthesize_ba(&cfg),
                    Model::Gmg => synthesize_gmg(&cfg),
                }
            }
            CellSource::Sampled { graph, sample_size } => snowball_sample(graph, *sample_size, seed),
        }
    }

    fn beliefs_seed(&self, index: usize, master: u64) -> u64 {
        let mut path = vec![tag::BELIEFS];
        path.extend(&self.key);
        path.push(index as u64);
        seed::derive(master, &path)
    }
}

fn load_graph(path: &std::path::Path) -> Result<Graph> {
    let file = File::open(path)?;
    Ok(parse_edge_list(BufReader::new(file))?.graph)
}

fn cells(config: &ExperimentConfig) -> Result<Vec<Cell>> {
    match &config.source {
        DataSource::Synthetic(s) => {
            let alphas: Vec<Option<f64>> = match s.model {
                Model::Ba => vec![None],
                Model::Gmg => s.alpha_values.iter().map(|&a| Some(a)).collect(),
            };
            let mut out = Vec::new();
            for alpha in alphas {
                for &m in &s.m_values {
                    let a = alpha.unwrap_or(0.0);
                    out.push(Cell {
                        label: match alpha {
                            Some(a) => format!("{}_m{m}_alpha{a}", s.model),
                            None => format!("{}_m{m}", s.model),
                        },
                        key: vec![m as u64, a.to_bits()],
                        source: CellSource::Synthetic {
                            model: s.model,
                            n: s.n,
                            m,
                            alpha: a,
                        },
                        tests: config.realizations,
                    });
                }
            }
            Ok(out)
        }
        DataSource::EdgeLists(e) => e
            .paths
            .iter()
            .enumerate()
            .map(|(p, path)| {
                let graph = load_graph(path)?;
                Ok(Cell {
                    label: path
                        .file_stem()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_else(|| format!("file{p}")),
                    key: vec![tag::SNOWBALL, p as u64],
                    source: CellSource::Sampled {
                        graph,
                        sample_size: e.sample_size,
                    },
                    tests: e.samples,
                })
            })
            .collect(),
    }
}

fn cell_alpha(cell: &Cell, config: &ExperimentConfig) -> Result<CellAlpha> {
    if let Some(alpha) = config.alpha {
        return Ok(CellAlpha {
            cell: cell.label.clone(),
            alpha,
            method: None,
            training_error: None,
        });
    }
    let learning: &AlphaLearning = config
        .alpha_learning
        .as_ref()
        .ok_or_else(|| Error::Config("the GMG estimator needs either alpha or alpha_learning".into()))?;
    let graphs = (0..learning.training_networks)
        .into_par_iter()
        .map(|k| cell.network(tag::TRAIN, k, config.master_seed))
        .collect::<Result<Vec<_>>>()?;
    let training = match learning.method {
        Method::Full => TrainingSet::Graphs(graphs),
        Method::Partial => TrainingSet::Summaries(TrainingSet::Graphs(graphs).summaries()),
    };
    let mut path = vec![tag::LEARN];
    path.extend(&cell.key);
    let search = AlphaSearchConfig {
        grid: learning.grid.clone(),
        trials: learning.trials,
        control_fraction: config.control_fraction,
        seed: seed::derive(config.master_seed, &path),
    };
    let learned = learn_alpha(learning.method, &training, &search)?;
    Ok(CellAlpha {
        cell: cell.label.clone(),
        alpha: learned.alpha,
        method: Some(learning.method),
        training_error: Some(learned.error),
    })
}

fn top_degree_strategy(graph: &Graph, fraction: f64) -> Result<ControlStrategy> {
    let c = control_budget(graph.node_count(), fraction);
    ControlStrategy::uniform(top_degree_nodes(graph, c), 1.0)
}

fn format_set(nodes: &[usize]) -> String {
    nodes.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
}

fn cp_record(cell: &Cell, index: usize, alpha: f64, config: &ExperimentConfig) -> Result<CpRecord> {
    let graph = cell.network(tag::TEST, index, config.master_seed)?;
    let strategy = top_degree_strategy(&graph, config.control_fraction)?;
    let exact = control_power_exact(
        &graph,
        &PrivateBeliefDistribution::Uniform,
        &strategy,
        config.trials,
        cell.beliefs_seed(index, config.master_seed),
    )?;
    let ba = model_control_power(&ModelParams::from_graph(&graph, Model::Ba, 0.0)?, &strategy)?;
    let gmg_params = ModelParams::from_graph(&graph, Model::Gmg, alpha)?;
    let gmg_beta = crate::estimators::beta(&gmg_params, &strategy)?;
    let gmg = match model_control_power(&gmg_params, &strategy) {
        Ok(estimate) => Some(estimate),
        Err(Error::NonConvergentModel { .. }) => None,
        Err(e) => return Err(e),
    };
    let ba_error = relative_error(ba.cp, exact.mean);
    let gmg_error = gmg.as_ref().map(|g| relative_error(g.cp, exact.mean));
    Ok(CpRecord {
        cell: cell.label.clone(),
        index,
        n: graph.node_count(),
        edges: graph.edge_count(),
        control_size: strategy.len(),
        exact_cp: exact.mean,
        exact_std_error: exact.std_error,
        ba_cp: ba.cp,
        gmg_cp: gmg.as_ref().map(|g| g.cp),
        gmg_beta,
        ba_error,
        gmg_error,
        ba_error_corrected: relative_error(ba.cp_corrected, exact.mean),
        gmg_error_corrected: gmg.as_ref().map(|g| relative_error(g.cp_corrected, exact.mean)),
        gmg_better: gmg_error.is_some_and(|g| g <= ba_error),
    })
}

fn strategy_record(cell: &Cell, index: usize, alpha: f64, config: &ExperimentConfig) -> Result<StrategyRecord> {
    let graph = cell.network(tag::TEST, index, config.master_seed)?;
    let ba_strategy = top_degree_strategy(&graph, config.control_fraction)?;
    let c = ba_strategy.len();
    let gmg = optimal_control_set(&ModelParams::from_graph(&graph, Model::Gmg, alpha)?, c)?;
    // both sets see the same private-belief draws
    let seed = cell.beliefs_seed(index, config.master_seed);
    let uniform = PrivateBeliefDistribution::Uniform;
    let ba_cp = control_power_exact(&graph, &uniform, &ba_strategy, config.trials, seed)?;
    let gmg_cp = control_power_exact(&graph, &uniform, &gmg.strategy, config.trials, seed)?;
    Ok(StrategyRecord {
        cell: cell.label.clone(),
        index,
        n: graph.node_count(),
        control_size: c,
        ba_set: format_set(&ba_strategy.control_set),
        gmg_set: format_set(&gmg.strategy.control_set),
        identical_sets: ba_strategy.control_set == gmg.strategy.control_set,
        ba_cp: ba_cp.mean,
        ba_std_error: ba_cp.std_error,
        gmg_cp: gmg_cp.mean,
        gmg_std_error: gmg_cp.std_error,
        gmg_wins: gmg_cp.mean >= ba_cp.mean,
        condition_satisfied: gmg.condition_satisfied(),
    })
}

/// Learn or fix α per cell, then evaluate every test network.
fn evaluate<R, F>(config: &ExperimentConfig, record: F) -> Result<(Vec<CellAlpha>, Vec<R>)>
where
    R: Send,
    F: Fn(&Cell, usize, f64) -> Result<R> + Sync,
{
    config.validate()?;
    let mut alphas = Vec::new();
    let mut records = Vec::new();
    for cell in cells(config)? {
        let alpha = cell_alpha(&cell, config)?;
        let batch = (0..cell.tests)
            .into_par_iter()
            .map(|k| record(&cell, k, alpha.alpha))
            .collect::<Result<Vec<R>>>()?;
        records.extend(batch);
        alphas.push(alpha);
    }
    Ok((alphas, records))
}

pub fn run_cp_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let (alphas, networks) = evaluate(config, |cell, k, alpha| cp_record(cell, k, alpha, config))?;
    let ba: Vec<f64> = networks.iter().map(|r| r.ba_error).collect();
    let gmg: Vec<f64> = networks.iter().filter_map(|r| r.gmg_error).collect();
    let wins = networks.iter().filter(|r| r.gmg_better).count();
    Ok(report(
        config,
        Results::Cp {
            ba_error: Aggregate::of(&ba),
            gmg_error: Aggregate::of(&gmg),
            gmg_excluded: networks.len() - gmg.len(),
            gmg_win_rate: wins as f64 / networks.len().max(1) as f64,
            alphas,
            networks,
        },
    ))
}

pub fn run_strategy_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let (alphas, networks) = evaluate(config, |cell, k, alpha| strategy_record(cell, k, alpha, config))?;
    let ba: Vec<f64> = networks.iter().map(|r| r.ba_cp).collect();
    let gmg: Vec<f64> = networks.iter().map(|r| r.gmg_cp).collect();
    let wins = networks.iter().filter(|r| r.gmg_wins).count();
    Ok(report(
        config,
        Results::Strategy {
            ba_cp: Aggregate::of(&ba),
            gmg_cp: Aggregate::of(&gmg),
            gmg_win_rate: wins as f64 / networks.len().max(1) as f64,
            identical_sets: networks.iter().filter(|r| r.identical_sets).count(),
            alphas,
            networks,
        },
    ))
}
