use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use beliefnet::alpha::{learn_alpha, AlphaGrid, AlphaSearchConfig, Method, ModelCard, NetworkSummary, TrainingSet};
use beliefnet::control::{brute_force_control_set, optimal_control_set, Objective};
use beliefnet::dynamics::{
    converge_exact, converge_iterative, BeliefDocument, ControlStrategy, PrivateBeliefDistribution, DEFAULT_MAX_STEPS,
};
use beliefnet::estimators::{model_control_power, Model, ModelParams};
use beliefnet::graph::{parse_edge_list, write_edge_list, Graph};
use beliefnet::harness::{run_timed, write_report, DataSource, ExperimentConfig, Family};
use beliefnet::synthesis::{synthesize_ba, synthesize_gmg, SynthesisConfig};
use beliefnet::{seed, Error, Result};

#[derive(Parser)]
#[command(name = "beliefnet", version, about = "Belief diffusion, control power estimation and control-set optimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Grow a BA or GMG random graph and write it as an edge list.
    Synth {
        #[arg(long)]
        model: Model,
        #[arg(long)]
        nodes: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute converged beliefs on a graph.
    Simulate {
        #[arg(long)]
        graph: PathBuf,
        /// Private beliefs: a JSON array or whitespace-separated numbers.
        #[arg(long, conflicts_with = "w_uniform", required_unless_present = "w_uniform")]
        w: Option<PathBuf>,
        /// Draw private beliefs uniformly from [−1, 1].
        #[arg(long)]
        w_uniform: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Control strategy JSON; no control when omitted.
        #[arg(long)]
        control: Option<PathBuf>,
        /// Iterate to this tolerance instead of solving the fixed point directly.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Closed-form expected beliefs and control power.
    Estimate {
        #[arg(long)]
        model: Model,
        #[arg(long, conflicts_with = "degrees", required_unless_present = "degrees")]
        graph: Option<PathBuf>,
        /// JSON with `degrees` and optional `clusterings` and `w_bar`.
        #[arg(long)]
        degrees: Option<PathBuf>,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long)]
        control: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Choose a control set of the given size.
    Optimize {
        #[arg(long)]
        model: Model,
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        budget: usize,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        alpha: f64,
        /// Enumerate every subset instead of using the closed-form rule.
        #[arg(long)]
        brute_force: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Learn the clustering weight α from a directory of training networks.
    LearnAlpha {
        #[arg(long)]
        method: Method,
        /// Edge-list files, or (partial method) JSON network summaries.
        #[arg(long)]
        train: PathBuf,
        /// LO:HI:STEP; defaults to a coarse grid on [−4, 4] refined around its optimum.
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0.05)]
        control_fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Name recorded in the model card; defaults to the training directory name.
        #[arg(long)]
        subcategory: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an experiment family and write report.json plus CSV tables.
    Experiment {
        #[arg(long)]
        family: Family,
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Deserialize)]
struct DegreeFile {
    degrees: Vec<f64>,
    #[serde(default)]
    clusterings: Vec<f64>,
    #[serde(default)]
    w_bar: Option<Vec<f64>>,
}

fn read_graph(path: &Path) -> Result<Graph> {
    let parsed = parse_edge_list(BufReader::new(File::open(path)?))?;
    if parsed.skipped_self_loops > 0 {
        eprintln!("{}: skipped {} self-loops", path.display(), parsed.skipped_self_loops);
    }
    Ok(parsed.graph)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    serde_json::from_str(&fs::read_to_string(path)?)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path)?;
    if text.trim_start().starts_with('[') {
        return read_json(path);
    }
    text.split_whitespace()
        .map(|tok| {
            tok.parse::<f64>()
                .map_err(|_| Error::Config(format!("{}: {tok:?} is not a number", path.display())))
        })
        .collect()
}

fn read_strategy(path: Option<&Path>) -> Result<ControlStrategy> {
    match path {
        Some(p) => {
            let strategy: ControlStrategy = read_json(p)?;
            ControlStrategy::new(strategy.control_set, strategy.controlled_beliefs)
        }
        None => Ok(ControlStrategy::none()),
    }
}

fn training_set(dir: &Path, method: Method) -> Result<TrainingSet> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    paths.retain(|p| p.is_file());
    paths.sort();
    let json = |p: &PathBuf| p.extension().is_some_and(|e| e == "json");
    if paths.is_empty() {
        return Err(Error::Config(format!("{} holds no training files", dir.display())));
    }
    if paths.iter().all(json) {
        if method == Method::Full {
            return Err(Error::Config("the full method needs edge-list files".into()));
        }
        let summaries = paths.iter().map(|p| read_json::<NetworkSummary>(p)).collect::<Result<_>>()?;
        return Ok(TrainingSet::Summaries(summaries));
    }
    let graphs = paths.iter().filter(|p| !json(p)).map(|p| read_graph(p)).collect::<Result<_>>()?;
    Ok(TrainingSet::Graphs(graphs))
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Synth {
            model,
            nodes,
            m,
            alpha,
            seed,
            out,
        } => {
            let cfg = SynthesisConfig::new(nodes, m, alpha, seed);
            let graph = match model {
                Model::Ba => synthesize_ba(&cfg)?,
                Model::Gmg => synthesize_gmg(&cfg)?,
            };
            let mut writer = BufWriter::new(File::create(out)?);
            write_edge_list(&graph, &mut writer)?;
            writer.flush()?;
        }
        Command::Simulate {
            graph,
            w,
            w_uniform,
            seed: s,
            control,
            tol,
            out,
        } => {
            let graph = read_graph(&graph)?;
            let strategy = read_strategy(control.as_deref())?;
            let w = match w {
                Some(path) => read_vector(&path)?,
                None => {
                    debug_assert!(w_uniform);
                    PrivateBeliefDistribution::Uniform.sample(&mut seed::rng(s), graph.node_count())?
                }
            };
            let b_inf = match tol {
                Some(tol) => converge_iterative(&graph, &w, &strategy, tol, DEFAULT_MAX_STEPS)?.beliefs,
                None => converge_exact(&graph, &w, &strategy)?,
            };
            write_json(
                &out,
                &BeliefDocument {
                    w,
                    control_set: strategy.control_set,
                    controlled_beliefs: strategy.controlled_beliefs,
                    b_inf,
                },
            )?;
        }
        Command::Estimate {
            model,
            graph,
            degrees,
            alpha,
            control,
            out,
        } => {
            let params = match (graph, degrees) {
                (Some(path), _) => ModelParams::from_graph(&read_graph(&path)?, model, alpha)?,
                (None, Some(path)) => {
                    let file: DegreeFile = read_json(&path)?;
                    let params = match model {
                        Model::Ba => ModelParams::ba(file.degrees)?,
                        Model::Gmg => ModelParams::gmg(file.degrees, file.clusterings, alpha)?,
                    };
                    match file.w_bar {
                        Some(w_bar) => params.with_w_bar(w_bar)?,
                        None => params,
                    }
                }
                (None, None) => return Err(Error::Config("either --graph or --degrees is required".into())),
            };
            let strategy = read_strategy(Some(&control))?;
            write_json(&out, &model_control_power(&params, &strategy)?)?;
        }
        Command::Optimize {
            model,
            graph,
            budget,
            alpha,
            brute_force,
            out,
        } => {
            let graph = read_graph(&graph)?;
            let params = ModelParams::from_graph(&graph, model, alpha)?;
            let result = if brute_force {
                brute_force_control_set(&params, budget, Objective::ModelCp)?
            } else {
                optimal_control_set(&params, budget)?
            };
            if result.condition_satisfied() == Some(false) {
                eprintln!("warning: the GMG applicability condition does not hold for the chosen set");
            }
            write_json(&out, &result)?;
        }
        Command::LearnAlpha {
            method,
            train,
            grid,
            trials,
            control_fraction,
            seed,
            subcategory,
            out,
        } => {
            let grid = match grid {
                Some(text) => AlphaGrid::parse(&text)?,
                None => AlphaGrid::default(),
            };
            let training = training_set(&train, method)?;
            let config = AlphaSearchConfig {
                grid,
                trials,
                control_fraction,
                seed,
            };
            let learned = learn_alpha(method, &training, &config)?;
            let subcategory = subcategory.unwrap_or_else(|| {
                train
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default()
            });
            write_json(&out, &ModelCard::new(subcategory, &learned, seed))?;
        }
        Command::Experiment {
            family,
            config,
            seed,
            out,
        } => {
            let mut cfg = ExperimentConfig::from_json(&fs::read_to_string(&config)?)?;
            if cfg.family != family {
                return Err(Error::Config(format!(
                    "config declares family {:?} but {:?} was requested",
                    cfg.family, family
                )));
            }
            if let Some(seed) = seed {
                cfg.master_seed = seed;
            }
            // edge-list paths are relative to the config file
            if let DataSource::EdgeLists(source) = &mut cfg.source {
                let base = config.parent().unwrap_or(Path::new("."));
                for p in &mut source.paths {
                    if p.is_relative() {
                        *p = base.join(&*p);
                    }
                }
            }
            let (report, timing) = run_timed(&cfg)?;
            write_report(&out, &report, Some(&timing))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
