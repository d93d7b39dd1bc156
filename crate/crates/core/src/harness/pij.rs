use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{report, tag, DataSource, ExperimentConfig, ExperimentReport, Results};
use crate::error::{Error, Result};
use crate::estimators::{edge_prob_ba, GmgPairModel, Model, ModelParams};
use crate::harness::Aggregate;
use crate::seed;
use crate::synthesis::{synthesize_ba, synthesize_gmg, SynthesisConfig};

/// Realizations summed sequentially inside one parallel work unit.
const CHUNK: usize = 8;

/// Model edge probabilities against one synthesized ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PijCell {
    pub cell: String,
    pub model: Model,
    pub n: usize,
    pub m: usize,
    pub alpha: Option<f64>,
    pub realizations: usize,
    /// Σ_{i≠j} |P − Ā| / Σ_{i≠j} Ā.
    pub l1_error: f64,
    /// Mean over i≠j of |P − Ā| / max(Ā, 1/realizations).
    pub per_pair_error: f64,
    /// Pairs whose raw model probability exceeded 1 and was clamped.
    pub clamped_pairs: usize,
}

/// Running sums over an ensemble: upper-triangle edge counts, degrees, clustering.
struct EnsembleSums {
    n: usize,
    edges: Vec<u32>,
    degrees: Vec<u64>,
    clustering: Vec<f64>,
}

impl EnsembleSums {
    fn new(n: usize) -> Self {
        EnsembleSums {
            n,
            edges: vec![0; n * n],
            degrees: vec![0; n],
            clustering: vec![0.0; n],
        }
    }

    fn merge(&mut self, other: &EnsembleSums) {
        self.edges.iter_mut().zip(&other.edges).for_each(|(a, b)| *a += b);
        self.degrees.iter_mut().zip(&other.degrees).for_each(|(a, b)| *a += b);
        self.clustering.iter_mut().zip(&other.clustering).for_each(|(a, b)| *a += b);
    }
}

fn cell_label(model: Model, m: usize, alpha: Option<f64>) -> String {
    match alpha {
        Some(a) => format!("{model}_m{m}_alpha{a}"),
        None => format!("{model}_m{m}"),
    }
}

/// Synthesize `realizations` graphs and sum their adjacency, degrees and clustering.
fn ensemble(model: Model, n: usize, m: usize, alpha: Option<f64>, realizations: usize, master: u64) -> Result<EnsembleSums> {
    let alpha_bits = alpha.unwrap_or(0.0).to_bits();
    let chunks: Vec<EnsembleSums> = (0..realizations.div_ceil(CHUNK))
        .into_par_iter()
        .map(|chunk| {
            let mut sums = EnsembleSums::new(n);
            for r in (chunk * CHUNK)..((chunk + 1) * CHUNK).min(realizations) {
                let seed = seed::derive(master, &[tag::ENSEMBLE, m as u64, alpha_bits, r as u64]);
                let cfg = SynthesisConfig::new(n, m, alpha.unwrap_or(0.0), seed);
                let graph = match model {
                    Model::Ba => synthesize_ba(&cfg)?,
                    Model::Gmg => synthesize_gmg(&cfg)?,
                };
                for (u, v) in graph.edges() {
                    sums.edges[u * n + v] += 1;
                }
                for i in 0..n {
                    sums.degrees[i] += graph.degree(i) as u64;
                    sums.clustering[i] += graph.clustering()[i];
                }
            }
            Ok(sums)
        })
        .collect::<Result<_>>()?;
    let mut total = EnsembleSums::new(n);
    for c in &chunks {
        total.merge(c);
    }
    Ok(total)
}

/// Compare the model edge probabilities built from ensemble-mean degree and
/// clustering lists with the ensemble-mean adjacency.
pub(super) fn pij_cell(model: Model, n: usize, m: usize, alpha: Option<f64>, realizations: usize, master: u64) -> Result<PijCell> {
    let sums = ensemble(model, n, m, alpha, realizations, master)?;
    let k = realizations as f64;
    let degrees: Vec<f64> = sums.degrees.iter().map(|&d| d as f64 / k).collect();
    let gmg = match model {
        Model::Gmg => {
            let clustering: Vec<f64> = sums.clustering.iter().map(|&c| c / k).collect();
            Some(GmgPairModel::new(&ModelParams::gmg(degrees.clone(), clustering, alpha.unwrap_or(0.0))?)?)
        }
        Model::Ba => None,
    };
    let floor = 1.0 / k;
    let (mut diff, mut mass, mut per_pair, mut clamped) = (0.0, 0.0, 0.0, 0usize);
    for i in 0..sums.n {
        for j in (i + 1)..sums.n {
            let p = match &gmg {
                Some(model) => model.prob(i, j)?,
                None => edge_prob_ba(&degrees, i, j)?,
            };
            clamped += p.exceeds_one() as usize;
            let a = sums.edges[i * sums.n + j] as f64 / k;
            let d = (p.clamped() - a).abs();
            diff += d;
            mass += a;
            per_pair += d / a.max(floor);
        }
    }
    if mass == 0.0 {
        return Err(Error::InvalidInput("ensemble has no edges".into()));
    }
    let pairs = (sums.n * (sums.n - 1) / 2) as f64;
    Ok(PijCell {
        cell: cell_label(model, m, alpha),
        model,
        n,
        m,
        alpha,
        realizations,
        l1_error: diff / mass,
        per_pair_error: per_pair / pairs,
        clamped_pairs: clamped,
    })
}

pub fn run_pij_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let DataSource::Synthetic(source) = &config.source else {
        return Err(Error::Config("the pij family needs a synthetic source".into()));
    };
    let alphas: Vec<Option<f64>> = match source.model {
        Model::Ba => vec![None],
        Model::Gmg => source.alpha_values.iter().map(|&a| Some(a)).collect(),
    };
    let mut cells = Vec::new();
    for &alpha in &alphas {
        for &m in &source.m_values {
            cells.push(pij_cell(source.model, source.n, m, alpha, config.realizations, config.master_seed)?);
        }
    }
    let errors: Vec<f64> = cells.iter().map(|c| c.l1_error).collect();
    Ok(report(
        config,
        Results::Pij {
            l1_error: Aggregate::of(&errors),
            cells,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_realization_of_minimal_graph_is_complete() {
        // n = m + 1 gives the complete graph every time; Ā ≡ 1 off the diagonal
        let cell = pij_cell(Model::Ba, 4, 3, None, 3, 1).unwrap();
        // BA probability on K4 is 3·3/12 = 0.75
        assert!((cell.l1_error - 0.25).abs() < 1e-12);
        assert_eq!(cell.clamped_pairs, 0);
    }

    #[test]
    fn chunking_does_not_change_sums() {
        let a = ensemble(Model::Gmg, 20, 2, Some(1.0), 2 * CHUNK + 3, 5).unwrap();
        let mut manual = EnsembleSums::new(20);
        for r in 0..(2 * CHUNK + 3) {
            let seed = seed::derive(5, &[tag::ENSEMBLE, 2, 1f64.to_bits(), r as u64]);
            let g = synthesize_gmg(&SynthesisConfig::new(20, 2, 1.0, seed)).unwrap();
            for (u, v) in g.edges() {
                manual.edges[u * 20 + v] += 1;
            }
            for i in 0..20 {
                manual.degrees[i] += g.degree(i) as u64;
            }
        }
        assert_eq!(a.edges, manual.edges);
        assert_eq!(a.degrees, manual.degrees);
        let edges: u64 = a.edges.iter().map(|&e| e as u64).sum();
        assert_eq!(2 * edges, a.degrees.iter().sum::<u64>());
    }
}
