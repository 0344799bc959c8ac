//! The `caal` command line. Every subcommand that writes a run directory
//! also writes the resolved `config.json` and a `manifest.json` that
//! `caal --manifest <path> --out <dir>` replays.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::classifier::ForestModel;
use crate::config::{RunManifest, WorkbenchConfig};
use crate::dqn::QNetwork;
use crate::error::{Error, Result};
use crate::experiment::{self, Agents, PolicyKind, PolicySummary, PreparedScenario, RunResult};
use crate::hrv;
use crate::pipeline;
use crate::report;
use crate::subject::{write_stream_csv, write_truth_csv};

pub const FOREST_FILE: &str = "forest.json";
pub const CONTEXT_AGENT_FILE: &str = "qnet_context.json";
pub const NONCONTEXT_AGENT_FILE: &str = "qnet_noncontext.json";

#[derive(Debug, Parser)]
#[command(name = "caal", version, about = "Context-aware active labeling workbench")]
pub struct Cli {
    /// Worker threads for repeat-level parallelism (default: logical cores).
    #[arg(long, global = true)]
    pub parallel: Option<usize>,
    /// Replays the command recorded in a run manifest.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Clone, Args)]
pub struct ConfigArgs {
    /// JSON configuration; unspecified fields take their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides `master_seed`.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Writes subject profiles, interval streams and latent truth.
    GenData {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Computes HRV features from an interval CSV.
    Features {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Trains the population classifier.
    Pretrain {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Trains a query agent offline on the population streams.
    TrainAgent {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Train the agent whose reward ignores time and response context.
        #[arg(long)]
        noncontext: bool,
        /// Directory holding `forest.json` (default: the output directory).
        #[arg(long)]
        artifacts: Option<PathBuf>,
    },
    /// Runs one policy on the held-out subject.
    Run {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        policy: Option<PolicyKind>,
        #[arg(long)]
        repeats: Option<usize>,
        /// Directory with pretrained checkpoints; trains them when absent.
        #[arg(long)]
        artifacts: Option<PathBuf>,
    },
    /// Runs all three policies with matched query budgets.
    Compare {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        repeats: Option<usize>,
        #[arg(long)]
        artifacts: Option<PathBuf>,
    },
    /// Sweeps the pipeline latency over user counts.
    PipelineSim {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Comma-separated user counts, ascending.
        #[arg(long, value_delimiter = ',')]
        users: Option<Vec<usize>>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::GenData { .. } => "gen-data",
            Command::Features { .. } => "features",
            Command::Pretrain { .. } => "pretrain",
            Command::TrainAgent { .. } => "train-agent",
            Command::Run { .. } => "run",
            Command::Compare { .. } => "compare",
            Command::PipelineSim { .. } => "pipeline-sim",
        }
    }

    /// Flags that are not folded into the resolved config.
    fn residual_args(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut artifacts = |a: &Option<PathBuf>| {
            if let Some(a) = a {
                out.push("--artifacts".into());
                out.push(a.display().to_string());
            }
        };
        match self {
            Command::TrainAgent {
                noncontext, artifacts: a, ..
            } => {
                artifacts(a);
                if *noncontext {
                    out.push("--noncontext".into());
                }
            }
            Command::Run { artifacts: a, .. } | Command::Compare { artifacts: a, .. } => artifacts(a),
            _ => {}
        }
        out
    }
}

fn resolve(args: &ConfigArgs) -> Result<WorkbenchConfig> {
    let mut cfg = match &args.config {
        Some(p) => WorkbenchConfig::load(p)?,
        None => WorkbenchConfig::default(),
    };
    if let Some(s) = args.seed {
        cfg.master_seed = s;
    }
    Ok(cfg)
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

/// Parses `std::env::args` and runs the command.
pub fn main() -> Result<()> {
    run(Cli::parse())
}

pub fn run(cli: Cli) -> Result<()> {
    let (command, config_override) = match (&cli.manifest, cli.command) {
        (Some(_), Some(c)) => {
            return Err(Error::Config(format!("--manifest replays a recorded run; drop the `{}` subcommand", c.name())))
        }
        (Some(path), None) => {
            let m = RunManifest::load(path)?;
            let argv = ["caal".to_string(), m.command.clone()].into_iter().chain(m.arguments.clone());
            let replay = Cli::try_parse_from(argv).map_err(|e| Error::Config(format!("manifest arguments: {e}")))?;
            (replay.command.expect("subcommand recorded"), Some(m.config))
        }
        (None, Some(c)) => (c, None),
        (None, None) => return Err(Error::Config("no subcommand given; see `caal --help`".into())),
    };
    let threads = cli.parallel.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    pool.install(|| execute(&command, config_override, cli.out.as_deref()))
}

fn execute(command: &Command, config_override: Option<WorkbenchConfig>, out: Option<&Path>) -> Result<()> {
    if let Command::Features { input, output } = command {
        let rdr = BufReader::new(File::open(input).map_err(|e| {
            Error::InvalidInput(format!("cannot open {}: {e}", input.display()))
        })?);
        let n = hrv::process_batch(rdr, BufWriter::new(File::create(output)?))?;
        eprintln!("wrote {n} windows to {}", output.display());
        return Ok(());
    }

    let out = out.ok_or_else(|| Error::Config(format!("{} needs --out <dir>", command.name())))?;
    let mut cfg = match (config_override, command) {
        (Some(c), _) => c,
        (
            None,
            Command::GenData { cfg }
            | Command::Pretrain { cfg }
            | Command::TrainAgent { cfg, .. }
            | Command::Run { cfg, .. }
            | Command::Compare { cfg, .. }
            | Command::PipelineSim { cfg, .. },
        ) => resolve(cfg)?,
        (None, Command::Features { .. }) => unreachable!(),
    };
    match command {
        Command::Run { policy, repeats, .. } => {
            if let Some(p) = policy {
                cfg.experiment.policy = *p;
            }
            if let Some(r) = repeats {
                cfg.experiment.repeats = *r;
            }
        }
        Command::Compare { repeats: Some(r), .. } => cfg.experiment.repeats = *r,
        Command::PipelineSim { users: Some(u), .. } => cfg.sweep_users = u.clone(),
        _ => {}
    }
    cfg.validate()?;
    fs::create_dir_all(out)?;
    cfg.save(&out.join("config.json"))?;

    let outputs = match command {
        Command::GenData { .. } => gen_data(&cfg, out)?,
        Command::Pretrain { .. } => {
            let scenario = cfg.prepare()?;
            cfg.pretrain(&scenario)?.save(&out.join(FOREST_FILE))?;
            vec![FOREST_FILE.to_string()]
        }
        Command::TrainAgent {
            noncontext, artifacts, ..
        } => {
            let dir = artifacts.as_deref().unwrap_or(out);
            let model = ForestModel::load(&dir.join(FOREST_FILE))?;
            let scenario = cfg.prepare()?;
            let (net, log) = cfg.train_agent(&scenario, &model, !noncontext)?;
            let (file, log_file) = if *noncontext {
                (NONCONTEXT_AGENT_FILE, "training_log_noncontext.csv")
            } else {
                (CONTEXT_AGENT_FILE, "training_log.csv")
            };
            net.save(&out.join(file))?;
            write_file(&out.join(log_file), |w| {
                writeln!(w, "{}", report::stamp(cfg.master_seed))?;
                log.write_csv(w)
            })?;
            vec![file.to_string(), log_file.to_string()]
        }
        Command::Run { artifacts, .. } => {
            let policies = [cfg.experiment.policy];
            run_loop(&cfg, out, artifacts.as_deref(), &policies)?
        }
        Command::Compare { artifacts, .. } => run_loop(&cfg, out, artifacts.as_deref(), &PolicyKind::ALL)?,
        Command::PipelineSim { .. } => {
            let sweep = pipeline::latency_sweep(&cfg.pipeline, &cfg.sweep_users, cfg.master_seed)?;
            write_file(&out.join("latency.csv"), |w| {
                writeln!(w, "{}", report::stamp(cfg.master_seed))?;
                sweep.write_csv(w)
            })?;
            match sweep.knee {
                Some(k) => eprintln!("knee at {k} users"),
                None => eprintln!("no knee within the swept user counts"),
            }
            vec!["latency.csv".to_string()]
        }
        Command::Features { .. } => unreachable!(),
    };

    let mut files: Vec<&str> = vec!["config.json"];
    files.extend(outputs.iter().map(String::as_str));
    RunManifest::new(command.name(), command.residual_args(), &cfg, &files).save(out)?;
    eprintln!("wrote {} ({})", out.display(), files.join(", "));
    Ok(())
}

fn gen_data(cfg: &WorkbenchConfig, out: &Path) -> Result<Vec<String>> {
    let scenario = cfg.prepare()?;
    let mut outputs = Vec::new();
    let mut profiles = scenario.population.clone();
    profiles.push(scenario.subject.profile.clone());
    write_file(&out.join("profiles.json"), |w| Ok(serde_json::to_writer_pretty(w, &profiles)?))?;
    outputs.push("profiles.json".to_string());

    let streams = scenario
        .population
        .iter()
        .zip(&scenario.population_streams)
        .chain(std::iter::once((&scenario.subject.profile, &scenario.subject.instances)));
    for (profile, stream) in streams {
        let intervals = format!("{}_intervals.csv", profile.id);
        let truth = format!("{}_truth.csv", profile.id);
        write_file(&out.join(&intervals), |w| write_stream_csv(stream, w))?;
        write_file(&out.join(&truth), |w| write_truth_csv(profile, stream, w))?;
        outputs.push(intervals);
        outputs.push(truth);
    }
    Ok(outputs)
}

fn load_or_train(
    cfg: &WorkbenchConfig,
    scenario: &PreparedScenario,
    out: &Path,
    artifacts: Option<&Path>,
    policies: &[PolicyKind],
) -> Result<(ForestModel, Option<QNetwork>, Option<QNetwork>, Vec<String>)> {
    let wants = |p: PolicyKind| policies.contains(&p);
    if let Some(dir) = artifacts {
        let model = ForestModel::load(&dir.join(FOREST_FILE))?;
        let ctx = wants(PolicyKind::AlContext)
            .then(|| QNetwork::load(&dir.join(CONTEXT_AGENT_FILE)))
            .transpose()?;
        let nctx = wants(PolicyKind::AlNoncontext)
            .then(|| QNetwork::load(&dir.join(NONCONTEXT_AGENT_FILE)))
            .transpose()?;
        return Ok((model, ctx, nctx, Vec::new()));
    }
    let mut written = Vec::new();
    let model = cfg.pretrain(scenario)?;
    model.save(&out.join(FOREST_FILE))?;
    written.push(FOREST_FILE.to_string());
    let mut agent = |contextual: bool, file: &str, log_file: &str| -> Result<QNetwork> {
        let (net, log) = cfg.train_agent(scenario, &model, contextual)?;
        net.save(&out.join(file))?;
        write_file(&out.join(log_file), |w| {
            writeln!(w, "{}", report::stamp(cfg.master_seed))?;
            log.write_csv(w)
        })?;
        written.push(file.to_string());
        written.push(log_file.to_string());
        Ok(net)
    };
    let ctx = wants(PolicyKind::AlContext)
        .then(|| agent(true, CONTEXT_AGENT_FILE, "training_log.csv"))
        .transpose()?;
    let nctx = wants(PolicyKind::AlNoncontext)
        .then(|| agent(false, NONCONTEXT_AGENT_FILE, "training_log_noncontext.csv"))
        .transpose()?;
    Ok((model, ctx, nctx, written))
}

fn run_loop(cfg: &WorkbenchConfig, out: &Path, artifacts: Option<&Path>, policies: &[PolicyKind]) -> Result<Vec<String>> {
    let scenario = cfg.prepare()?;
    let (model, ctx, nctx, mut written) = load_or_train(cfg, &scenario, out, artifacts, policies)?;
    let exp = &cfg.experiment;
    let runs: Vec<RunResult> = if policies.len() == 1 {
        let agent = match policies[0] {
            PolicyKind::Random => None,
            PolicyKind::AlContext => ctx.as_ref(),
            PolicyKind::AlNoncontext => nctx.as_ref(),
        };
        use rayon::prelude::*;
        (0..exp.repeats)
            .into_par_iter()
            .map(|r| {
                experiment::run_policy(
                    exp,
                    cfg.loop_settings(),
                    &scenario.subject,
                    &scenario.pretrain_data,
                    &model,
                    agent,
                    r,
                    experiment::repeat_seed(cfg.master_seed, r),
                )
            })
            .collect::<Result<_>>()?
    } else {
        experiment::compare(
            exp,
            cfg.loop_settings(),
            &scenario.subject,
            &scenario.pretrain_data,
            &model,
            Agents {
                context: ctx.as_ref(),
                noncontext: nctx.as_ref(),
            },
            cfg.master_seed,
        )?
    };
    let summaries = PolicySummary::from_runs(&runs, exp);
    let seed = cfg.master_seed;
    write_file(&out.join("results.csv"), |w| {
        report::write_results(w, seed, &runs, exp.target_recall_gain, exp.smoothing_window)
    })?;
    write_file(&out.join("summary.csv"), |w| report::write_summary(w, seed, &summaries))?;
    write_file(&out.join("trajectory.csv"), |w| report::write_trajectory(w, seed, &runs))?;
    write_file(&out.join("response_rates.csv"), |w| report::write_response_rates(w, seed, &runs))?;
    for s in &summaries {
        eprintln!(
            "{:<14} queries {:>8.1}  response {:.3}  recall {:.3} -> {:.3}",
            s.policy.name(),
            s.mean_queries,
            s.response_ratio,
            s.mean_pretrained_recall,
            s.mean_final_recall
        );
    }
    written.extend(["results.csv", "summary.csv", "trajectory.csv", "response_rates.csv"].map(String::from));
    Ok(written)
}
