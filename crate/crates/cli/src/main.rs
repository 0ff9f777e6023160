/*
  Copyright 2026 The conplan Authors

  Licensed under the Apache License, Version 2.0 (the "License");
  you may not use this file except in compliance with the License.
  You may obtain a copy of the License at

      http://www.apache.org/licenses/LICENSE-2.0

  Unless required by applicable law or agreed to in writing, software
  distributed under the License is distributed on an "AS IS" BASIS,
  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
  See the License for the specific language governing permissions and
  limitations under the License.
*/

//! `conplan`: scenario generation, demonstrations, training, planning and benchmarking.
//!
//! Exit codes: 0 success, 1 run-level failure, 2 usage or precondition error.

use clap::{Args, Parser, Subcommand, ValueEnum};
use conplan::bench::{run_bench, BenchParams};
use conplan::neural::{load_weights, save_weights, train, NetworkShape, PlanningNetwork, TrainingConfig};
use conplan::planner::{
    load_path, plan, save_path, smooth, validate_path, GoalInput, PlannerParams,
};
use conplan::sampler::{SamplerKind, SamplerSetup, DEFAULT_EXPLOIT_BUDGET};
use conplan::scenario::{
    build_corpus, corpus_from_str, generate_scenarios, save_corpus, save_scenarios,
    scenarios_from_str, CorpusParams, GenerationParams, Split, Template, VOCABULARY,
};
use conplan::{Error, Scenario};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

#[derive(Parser)]
#[command(name = "conplan", version, about = "Constrained motion planning pipeline")]
struct Cli {
    /// Base seed; defaults to $COMPNET_SEED, then 0.
    #[arg(long, global = true, env = "COMPNET_SEED", default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate seeded scenarios.
    Gen {
        /// Template name, comma-separated list, or "all".
        #[arg(long)]
        template: String,
        /// Scenarios per template.
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 0.2)]
        test_fraction: f64,
        /// Queries drawn on each obstacle layout.
        #[arg(long, default_value_t = 30)]
        queries_per_layout: usize,
        /// Pick goals at random among reachable nodes rather than the farthest route.
        #[arg(long)]
        random_goals: bool,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        planner: PlannerArgs,
    },
    /// Build a demonstration corpus with the uniform-sampler oracle.
    Demos {
        #[arg(long)]
        scenarios: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 100)]
        smoothing_attempts: usize,
        #[arg(long, default_value_t = 3)]
        retries: usize,
        #[arg(long, default_value_t = 0.5)]
        min_success: f64,
        #[arg(long, default_value_t = 32)]
        grid_side: usize,
        /// Longest joint-space jump between kept waypoints.
        #[arg(long, default_value_t = 1.0)]
        max_key_spacing: f64,
        #[command(flatten)]
        planner: PlannerArgs,
    },
    /// Train the sampling network on a corpus.
    Train {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Loss history CSV; defaults to the weights path with a .csv extension.
        #[arg(long)]
        loss_csv: Option<PathBuf>,
        #[arg(long, default_value_t = 300)]
        epochs: usize,
        #[arg(long, default_value_t = 32)]
        batch_size: usize,
        #[arg(long, default_value_t = 1e-2)]
        learning_rate: f64,
        #[arg(long, default_value_t = 0.9)]
        momentum: f64,
        #[arg(long, default_value_t = 0.15)]
        heldout_fraction: f64,
        /// Train on forward pairs only.
        #[arg(long)]
        no_reverse: bool,
        /// Shuffle targets across examples (control run).
        #[arg(long)]
        permute_targets: bool,
    },
    /// Solve one query.
    Plan {
        /// Scenario or corpus file followed by `#` and a scenario id.
        #[arg(long)]
        scenario: String,
        #[arg(long, value_enum, default_value_t = SamplerArg::Uniform)]
        sampler: SamplerArg,
        #[arg(long)]
        weights: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Shortcut attempts applied to the raw path.
        #[arg(long, default_value_t = 0)]
        smooth: usize,
        #[arg(long, default_value_t = DEFAULT_EXPLOIT_BUDGET)]
        exploit_budget: usize,
        #[command(flatten)]
        planner: PlannerArgs,
    },
    /// Compare samplers on a set of scenarios.
    Bench {
        #[arg(long)]
        scenarios: PathBuf,
        #[arg(long, value_enum, default_value_t = SplitArg::Test)]
        split: SplitArg,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "uniform,neural,hybrid")]
        samplers: Vec<SamplerArg>,
        #[arg(long)]
        weights: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        repeats: usize,
        #[arg(long, default_value_t = DEFAULT_EXPLOIT_BUDGET)]
        exploit_budget: usize,
        /// Report JSON; raw records go next to it with a .csv extension.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        planner: PlannerArgs,
    },
    /// Check a path file against a scenario.
    Validate {
        #[arg(long)]
        path: PathBuf,
        #[arg(long)]
        scenario: String,
        #[command(flatten)]
        planner: PlannerArgs,
    },
}

#[derive(Args, Clone)]
struct PlannerArgs {
    #[arg(long, default_value_t = 2000)]
    max_iterations: usize,
    #[arg(long, default_value_t = 0.05)]
    step_fraction: f64,
    #[arg(long, default_value_t = 0.1)]
    max_step: f64,
    #[arg(long, default_value_t = 0.05)]
    reach: f64,
    #[arg(long, default_value_t = 50)]
    projection_iters: usize,
    #[arg(long, default_value_t = 200)]
    max_extension_steps: usize,
    #[arg(long, value_enum, default_value_t = GoalArg::Frontier)]
    goal_input: GoalArg,
}

impl PlannerArgs {
    fn params(&self) -> PlannerParams {
        PlannerParams {
            max_iterations: self.max_iterations,
            step_fraction: self.step_fraction,
            max_step: self.max_step,
            reach: self.reach,
            projection_iters: self.projection_iters,
            max_extension_steps: self.max_extension_steps,
            goal_input: match self.goal_input {
                GoalArg::Frontier => GoalInput::Frontier,
                GoalArg::OppositeRoot => GoalInput::OppositeRoot,
            },
        }
    }
}

#[derive(ValueEnum, Clone, Copy, PartialEq)]
enum GoalArg {
    Frontier,
    OppositeRoot,
}

#[derive(ValueEnum, Clone, Copy, PartialEq)]
enum SamplerArg {
    Uniform,
    Neural,
    Hybrid,
}

impl From<SamplerArg> for SamplerKind {
    fn from(s: SamplerArg) -> Self {
        match s {
            SamplerArg::Uniform => SamplerKind::Uniform,
            SamplerArg::Neural => SamplerKind::Neural,
            SamplerArg::Hybrid => SamplerKind::Hybrid,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, PartialEq)]
enum SplitArg {
    Train,
    Test,
    All,
}

/// Failure carrying its exit code.
#[derive(Debug)]
enum Failure {
    /// Exit 1.
    Run(String),
    /// Exit 2.
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NonFiniteLoss { .. } | Error::OracleTooWeak { .. } | Error::EmptyBatch => {
                Failure::Run(e.to_string())
            }
            _ => Failure::Usage(e.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen { template, count, test_fraction, queries_per_layout, random_goals, out, planner } => {
            let params = GenerationParams {
                test_fraction,
                queries_per_layout,
                farthest_goals: !random_goals,
                planner: planner.params(),
                ..Default::default()
            };
            cmd_gen(cli.seed, &template, count, &out, &params)
        }
        Command::Demos {
            scenarios,
            out,
            smoothing_attempts,
            retries,
            min_success,
            grid_side,
            max_key_spacing,
            planner,
        } => {
            let params = CorpusParams {
                planner: planner.params(),
                smoothing_attempts,
                retries,
                min_success,
                grid_side,
                max_key_spacing,
            };
            cmd_demos(cli.seed, &scenarios, &out, &params)
        }
        Command::Train {
            corpus,
            out,
            loss_csv,
            epochs,
            batch_size,
            learning_rate,
            momentum,
            heldout_fraction,
            no_reverse,
            permute_targets,
        } => {
            let cfg = TrainingConfig {
                batch_size,
                epochs,
                learning_rate,
                momentum,
                seed: cli.seed,
                heldout_fraction,
                reverse_augment: !no_reverse,
                permute_targets,
                dropout: true,
            };
            let csv = loss_csv.unwrap_or_else(|| out.with_extension("csv"));
            cmd_train(&corpus, &out, &csv, &cfg)
        }
        Command::Plan { scenario, sampler, weights, out, smooth, exploit_budget, planner } => cmd_plan(
            cli.seed,
            &scenario,
            sampler.into(),
            weights.as_deref(),
            &out,
            smooth,
            exploit_budget,
            &planner.params(),
        ),
        Command::Bench { scenarios, split, samplers, weights, repeats, exploit_budget, out, planner } => {
            let kinds: Vec<SamplerKind> = samplers.into_iter().map(Into::into).collect();
            let params = BenchParams {
                planner: planner.params(),
                repeats,
                seed: cli.seed,
                exploit_budget,
                ..Default::default()
            };
            cmd_bench(&scenarios, split, &kinds, weights.as_deref(), &params, &out)
        }
        Command::Validate { path, scenario, planner } => cmd_validate(&path, &scenario, &planner.params()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn parse_templates(arg: &str) -> Result<Vec<Template>, Failure> {
    if arg == "all" {
        return Ok(Template::ALL.to_vec());
    }
    arg.split(',').map(|t| t.trim().parse::<Template>().map_err(Failure::from)).collect()
}

fn cmd_gen(seed: u64, template: &str, count: usize, out: &Path, params: &GenerationParams) -> Outcome {
    let templates = parse_templates(template)?;
    let mut all = Vec::new();
    for t in templates {
        let g = generate_scenarios::<f64>(seed, count, t, params)?;
        let test = g.scenarios.iter().filter(|s| s.split == Split::Test).count();
        println!(
            "{t}: {} scenarios ({} train, {test} test), {} layouts skipped",
            g.scenarios.len(),
            g.scenarios.len() - test,
            g.skipped_layouts
        );
        all.extend(g.scenarios);
    }
    save_scenarios(&all, out)?;
    println!("wrote {} scenarios to {}", all.len(), out.display());
    Ok(())
}

/// Loads scenarios from a scenario file or a corpus file.
fn load_scenario_source(path: &Path) -> Result<Vec<Scenario>, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    let is_corpus = serde_json::from_str::<serde_json::Value>(&text)
        .map(|v| v.get("demonstrations").is_some())
        .unwrap_or(false);
    let scenarios = if is_corpus {
        corpus_from_str::<f64>(&text)?.scenarios
    } else {
        scenarios_from_str::<f64>(&text)?
    };
    for s in &scenarios {
        if let Some(why) = s.check()? {
            return Err(Failure::Usage(format!("scenario {}: {why}", s.id)));
        }
    }
    Ok(scenarios)
}

/// Resolves `FILE#id`.
fn load_one_scenario(reference: &str) -> Result<Scenario, Failure> {
    let (file, id) = reference
        .rsplit_once('#')
        .ok_or_else(|| Failure::Usage(format!("expected FILE#id, got {reference:?}")))?;
    load_scenario_source(Path::new(file))?
        .into_iter()
        .find(|s| s.id == id)
        .ok_or_else(|| Failure::Usage(format!("no scenario {id:?} in {file}")))
}

fn cmd_demos(seed: u64, scenarios: &Path, out: &Path, params: &CorpusParams) -> Outcome {
    let scenarios = load_scenario_source(scenarios)?;
    let corpus = build_corpus(scenarios, params, seed)?;
    println!(
        "oracle success {:.1}% over {} training scenarios, {} demonstrations",
        100.0 * corpus.oracle_success_rate(),
        corpus.oracle.len(),
        corpus.demonstrations.len()
    );
    save_corpus(&corpus, out)?;
    Ok(())
}

fn cmd_train(corpus: &Path, out: &Path, csv: &Path, cfg: &TrainingConfig) -> Outcome {
    let text = std::fs::read_to_string(corpus)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", corpus.display())))?;
    let corpus = corpus_from_str::<f64>(&text)?;
    let dof = corpus
        .scenarios
        .first()
        .map(|s| s.chain.dof())
        .ok_or_else(|| Failure::Usage("corpus has no scenarios".into()))?;
    let shape = NetworkShape::new(corpus.params.grid_side, VOCABULARY, dof);
    let net = PlanningNetwork::<f64>::new(shape, cfg.seed)?;
    let set = corpus.demonstration_set()?;
    let report = train(net, &set, cfg)?;
    report.write_csv(csv)?;
    save_weights(&report.network, out)?;
    println!(
        "{} examples from {} scenarios ({} held out)",
        report.train_examples,
        report.train_scenarios.len(),
        report.heldout_scenarios.len()
    );
    println!("initial loss {:.6}", report.initial_loss());
    println!("final loss   {:.6}", report.final_loss());
    Ok(())
}

fn load_network(weights: Option<&Path>, kinds: &[SamplerKind]) -> Result<Option<Arc<PlanningNetwork<f64>>>, Failure> {
    match weights {
        Some(w) => Ok(Some(Arc::new(load_weights(w)?))),
        None if kinds.iter().any(|k| k.needs_network()) => {
            Err(Failure::Usage("--weights is required for the neural and hybrid samplers".into()))
        }
        None => Ok(None),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_plan(
    seed: u64,
    reference: &str,
    kind: SamplerKind,
    weights: Option<&Path>,
    out: &Path,
    smoothing: usize,
    exploit_budget: usize,
    params: &PlannerParams,
) -> Outcome {
    let scenario = load_one_scenario(reference)?;
    let network = load_network(weights, &[kind])?;
    let scene = scenario.scene_input(network.as_ref().map_or(32, |n| n.shape().grid_side()))?;
    let mut setup = SamplerSetup::new(&scenario.chain, &scene).with_network(network);
    setup.exploit_budget = exploit_budget;
    let mut sampler = setup.build(kind, seed)?;
    let problem = scenario.problem();
    let outcome = plan(&problem, &mut sampler, &scenario.start, &scenario.goal, params)?;
    let s = &outcome.stats;
    println!(
        "{} iterations, {} nodes, {} projections, {:.2} ms",
        s.iterations, s.nodes_expanded, s.projection_calls, s.wall_time_ms
    );
    let Some(mut path) = outcome.path else {
        return Err(Failure::Run(format!("no path within {} iterations", params.max_iterations)));
    };
    if smoothing > 0 {
        path = smooth(&problem, &path, params, smoothing, seed)?;
    }
    save_path(&path, out)?;
    println!("path with {} waypoints, length {:.4}", path.waypoints.len(), path.length());
    Ok(())
}

fn cmd_bench(
    scenarios: &Path,
    split: SplitArg,
    kinds: &[SamplerKind],
    weights: Option<&Path>,
    params: &BenchParams,
    out: &Path,
) -> Outcome {
    let all = load_scenario_source(scenarios)?;
    let selected: Vec<Scenario> = all
        .into_iter()
        .filter(|s| match split {
            SplitArg::Train => s.split == Split::Train,
            SplitArg::Test => s.split == Split::Test,
            SplitArg::All => true,
        })
        .collect();
    let network = load_network(weights, kinds)?;
    let mut params = params.clone();
    if let Some(n) = &network {
        params.grid_side = n.shape().grid_side();
    }
    let report = run_bench(&selected, kinds, network, &params)?;
    report.save(out)?;
    report.write_csv(&out.with_extension("csv"))?;
    print!("{}", report.table());
    Ok(())
}

fn cmd_validate(path: &Path, reference: &str, params: &PlannerParams) -> Outcome {
    let scenario = load_one_scenario(reference)?;
    let path = load_path::<f64>(path)?;
    let report = validate_path(&scenario.problem(), &path.waypoints, &scenario.start, &scenario.goal, params)?;
    match report.violation {
        None => {
            println!("valid: {} waypoints", path.waypoints.len());
            Ok(())
        }
        Some(v) => Err(Failure::Run(format!("invalid path: {v}"))),
    }
}
