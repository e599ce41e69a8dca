//! `kred`: validate, reduce, simulate and compare rule-based models.
//!
//! Exit codes: 0 success, 1 model error, 2 usage error, 3 runtime abort.

mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::builder::PossibleValuesParser;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use kred_core::reduce::{reduce_with, PassRegistry};
use kred_core::semantics::{validate_rule, ModelError};
use kred_core::simulate::{
    compare_systems, ensemble, scaling_experiment, simulator, Limits, ScalingExperiment, SimConfig, SimError,
};
use kred_core::{expand, parse_model, print_model, KappaSystem, ReductionConfig};

use output::{Format, Manifest, Sink};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: error[E001]: cannot read: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("{path}:{}:{}: error[{}]: {}", .error.line, .error.col, .error.code, .error.message)]
    Model { path: String, error: ModelError },
    #[error("nothing to compare: no reduction applies to {0}; pass --reduced")]
    NothingToCompare(String),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("cannot write {path}: {source}")]
    Write { path: String, source: std::io::Error },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Read { .. } | CliError::Model { .. } | CliError::NothingToCompare(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Sim(_) | CliError::Write { .. } => 3,
        }
    }
}

#[derive(Parser)]
#[command(name = "kred", version, about = "Static reduction and stochastic validation of rule-based models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a model and print the edit script of every rule.
    Validate {
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Reduce a model and write the reduced model and a report.
    Reduce {
        model: PathBuf,
        #[command(flatten)]
        reduction: ReduceArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Simulate an ensemble and summarize every observable.
    Simulate {
        model: PathBuf,
        /// Simulate the reduced model instead.
        #[arg(long)]
        reduce: bool,
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        reduction: ReduceArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Compare the distributions of a model and its reduction.
    Compare {
        model: PathBuf,
        /// Reduced model to compare against instead of reducing internally.
        #[arg(long)]
        reduced: Option<PathBuf>,
        /// Scale factors for the timescale-separation experiment.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        scale: Vec<f64>,
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        reduction: ReduceArgs,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Args, Serialize)]
struct ReduceArgs {
    /// Enzymes must start with fewer copies than this.
    #[arg(long, default_value_t = 10)]
    enzyme_threshold: u64,
    /// Skip a reduction pass; may be repeated.
    #[arg(long, value_parser = PossibleValuesParser::new(["src", "me", "dimer", "enzymatic"]))]
    disable: Vec<String>,
}

impl ReduceArgs {
    fn config(&self) -> ReductionConfig {
        ReductionConfig {
            enzyme_copy_threshold: self.enzyme_threshold,
            disabled: self.disable.iter().cloned().collect(),
            ..ReductionConfig::default()
        }
    }
}

#[derive(Args, Serialize)]
struct SimArgs {
    #[arg(long, env = "KRED_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    runs: u64,
    #[arg(long, default_value_t = 10.0)]
    t_end: f64,
    /// Number of sample times after zero.
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u64).range(1..))]
    grid: u64,
    /// Mass-action constants are read as deterministic and divided by
    /// `volume^(order - 1)`.
    #[arg(long, default_value_t = 1.0)]
    volume: f64,
    #[arg(long, value_enum, default_value_t = Method::Direct)]
    method: Method,
    #[arg(long, default_value_t = kred_core::semantics::DEFAULT_MAX_SPECIES)]
    max_species: usize,
    #[arg(long, default_value_t = kred_core::semantics::DEFAULT_MAX_REACTIONS)]
    max_reactions: usize,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Method {
    Direct,
    NextReaction,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::Direct => "direct",
            Method::NextReaction => "next-reaction",
        }
    }
}

impl SimArgs {
    fn config(&self) -> Result<SimConfig, CliError> {
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(CliError::Usage("--t-end must be positive".into()));
        }
        if !(self.volume.is_finite() && self.volume > 0.0) {
            return Err(CliError::Usage("--volume must be positive".into()));
        }
        let mut cfg = SimConfig::uniform(self.t_end, self.grid as usize, self.runs, self.seed);
        cfg.volume = self.volume;
        Ok(cfg)
    }

    fn limits(&self) -> Limits {
        Limits { max_species: self.max_species, max_reactions: self.max_reactions }
    }
}

#[derive(Args, Serialize)]
struct OutArgs {
    /// Output directory; without it results go to standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

fn load(path: &Path) -> Result<KappaSystem, CliError> {
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read { path: shown.clone(), source })?;
    parse_model(&text).map_err(|error| CliError::Model { path: shown, error })
}

fn validate(model: &Path, format: Format) -> Result<(), CliError> {
    let sys = load(model)?;
    let mut rules = Vec::new();
    for r in &sys.rules {
        let edits = validate_rule(r, &sys.signature).expect("parsed rules are well formed");
        rules.push((r.name.clone(), edits));
    }
    match format {
        Format::Json => {
            let v: Vec<_> = rules
                .iter()
                .map(|(name, edits)| serde_json::json!({ "rule": name, "edits": edits }))
                .collect();
            println!("{}", serde_json::to_string_pretty(&v).expect("edits serialize"));
        }
        Format::Csv => {
            for (name, edits) in &rules {
                let e: Vec<String> = edits.iter().map(ToString::to_string).collect();
                println!("{name}: {}", if e.is_empty() { "identity".to_string() } else { e.join(", ") });
            }
            println!("ok: {} rules, {} agents", sys.rules.len(), sys.signature.agents().count());
        }
    }
    Ok(())
}

fn reduce(model: &Path, args: &ReduceArgs, out: &OutArgs) -> Result<(), CliError> {
    let sys = load(model)?;
    let (red, report) = reduce_with(&PassRegistry::standard(), &sys, &args.config());
    let mut sink = Sink::new(out.out.as_deref())?;
    sink.text("reduced.ka", &print_model(&red))?;
    match out.format {
        Format::Json => sink.text("report.json", &report.to_json())?,
        Format::Csv if out.out.is_some() => sink.text("report.json", &report.to_json())?,
        Format::Csv => eprint!("{report}"),
    }
    let manifest = Manifest::new("reduce", &[model], serde_json::json!({ "reduction": args, "out": out }), None);
    sink.finish(manifest)
}

fn simulate(model: &Path, reduce_first: bool, sim: &SimArgs, red: &ReduceArgs, out: &OutArgs) -> Result<(), CliError> {
    let cfg = sim.config()?;
    let mut sys = load(model)?.with_volume(sim.volume);
    if reduce_first {
        sys = reduce_with(&PassRegistry::standard(), &sys, &red.config()).0;
    }
    let limits = sim.limits();
    let net = expand(&sys, limits.max_species, limits.max_reactions).map_err(SimError::from)?;
    let summary = ensemble(&net, &cfg, simulator(sim.method.name())?.as_ref())?.summary();
    let mut sink = Sink::new(out.out.as_deref())?;
    sink.summary(&summary, out.format)?;
    let config = serde_json::json!({ "reduce": reduce_first, "simulation": sim, "reduction": red, "out": out });
    sink.finish(Manifest::new("simulate", &[model], config, Some(sim.seed)))
}

fn compare(
    model: &Path,
    reduced: Option<&Path>,
    scale: &[f64],
    sim: &SimArgs,
    red: &ReduceArgs,
    out: &OutArgs,
) -> Result<(), CliError> {
    let cfg = sim.config()?;
    if scale.iter().any(|&n| !(n.is_finite() && n > 0.0)) {
        return Err(CliError::Usage("--scale factors must be positive".into()));
    }
    if reduced.is_some() && !scale.is_empty() {
        return Err(CliError::Usage("--scale reduces the scaled model itself and cannot be combined with --reduced".into()));
    }
    let method = simulator(sim.method.name())?;
    let sys = load(model)?.with_volume(sim.volume);
    let mut sink = Sink::new(out.out.as_deref())?;
    let mut models = vec![model];
    let config = serde_json::json!({ "scale": scale, "simulation": sim, "reduction": red, "out": out });
    if !scale.is_empty() {
        let exp = ScalingExperiment { factors: scale.to_vec() };
        let rows = scaling_experiment(&sys, &exp, &cfg, &red.config(), method.as_ref(), sim.limits())?;
        sink.scaling(&rows, out.format)?;
        return sink.finish(Manifest::new("compare", &models, config, Some(sim.seed)));
    }
    let other = match reduced {
        Some(p) => {
            models.push(p);
            load(p)?.with_volume(sim.volume)
        }
        None => {
            let (r, report) = reduce_with(&PassRegistry::standard(), &sys, &red.config());
            if report.steps.is_empty() {
                return Err(CliError::NothingToCompare(model.display().to_string()));
            }
            if out.out.is_some() {
                sink.text("reduced.ka", &print_model(&r))?;
                sink.text("report.json", &report.to_json())?;
            }
            r
        }
    };
    let cmp = compare_systems(&sys, &other, &cfg, method.as_ref(), sim.limits())?;
    sink.comparison(&cmp, out.format)?;
    sink.finish(Manifest::new("compare", &models, config, Some(sim.seed)))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Validate { model, format } => validate(model, *format),
        Command::Reduce { model, reduction, out } => reduce(model, reduction, out),
        Command::Simulate { model, reduce, sim, reduction, out } => simulate(model, *reduce, sim, reduction, out),
        Command::Compare { model, reduced, scale, sim, reduction, out } => {
            compare(model, reduced.as_deref(), scale, sim, reduction, out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
