use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pregeomzol::config::{ENV_MAX_ASSIGNMENTS, ENV_MAX_CELLS};
use pregeomzol::output::MANIFEST;
use pregeomzol::{load, rerun, run, ExperimentKind, HarnessError, Overrides, RunReport};
use pregeomzol_core::structures::ColourRule;

#[derive(Parser)]
#[command(name = "pregeomzol", version, about = "Experiments on random l-colourable structures over finite pregeometries")]
#[command(after_help = format!(
    "Environment: {ENV_MAX_CELLS} caps enumerated objects, {ENV_MAX_ASSIGNMENTS} caps quantifier assignments.\n\
     Exit status: 0 success, 1 usage or configuration error, 2 resource cap, 3 internal invariant failure."
))]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Count (and optionally list with exact probabilities) all structures per rank.
    Enumerate(RunArgs),
    /// Draw samples and write them with a validity summary.
    Sample(RunArgs),
    /// Compare the same-colour formula with generating colours and the colouring solver.
    CheckXi(RunArgs),
    /// Estimate sentence probabilities per rank with trend annotations.
    ZeroOne(RunArgs),
    /// Estimate the fraction of samples with a unique colouring up to relabelling.
    UniqueColouring(RunArgs),
    /// Least rank whose l-colourings all contain a monochromatic flat of the target rank.
    RamseyMinDim(RunArgs),
    /// Build an extension axiom and evaluate it on structure files.
    ExtAxiom(RunArgs),
    /// Search samples for a structure needing all l colours.
    FindU(RunArgs),
    /// Check structure files against the colouring conditions.
    Validate(RunArgs),
    /// Rerun the experiment recorded in a manifest and compare data checksums.
    Rerun {
        #[arg(long)]
        manifest: PathBuf,
        /// Output directory; defaults to the manifest's directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML or JSON experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory [default: out/<subcommand>].
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_parser = ["closure", "tuple"])]
    colour_rule: Option<String>,
    #[arg(long)]
    symmetric_irreflexive: bool,
    #[arg(long)]
    strong: bool,
    /// Configuration overrides, e.g. `n_max=6` or `caps.max_cells=1000`.
    #[arg(value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

fn kind_of(cmd: &Command) -> Option<(ExperimentKind, &RunArgs)> {
    Some(match cmd {
        Command::Enumerate(a) => (ExperimentKind::Enumerate, a),
        Command::Sample(a) => (ExperimentKind::Sample, a),
        Command::CheckXi(a) => (ExperimentKind::CheckXi, a),
        Command::ZeroOne(a) => (ExperimentKind::ZeroOne, a),
        Command::UniqueColouring(a) => (ExperimentKind::UniqueColouring, a),
        Command::RamseyMinDim(a) => (ExperimentKind::RamseyMinDim, a),
        Command::ExtAxiom(a) => (ExperimentKind::ExtAxiom, a),
        Command::FindU(a) => (ExperimentKind::FindU, a),
        Command::Validate(a) => (ExperimentKind::Validate, a),
        Command::Rerun { .. } => return None,
    })
}

fn report(r: &RunReport) {
    for f in &r.manifest.outputs {
        println!("{}", r.dir.join(&f.name).display());
    }
    println!("{}", r.dir.join(MANIFEST).display());
    for c in &r.capped {
        eprintln!("resource cap: {c}");
    }
    for f in &r.failures {
        eprintln!("invariant failure: {f}");
    }
}

fn execute(cli: Cli) -> Result<i32, HarnessError> {
    if let Command::Rerun { manifest, out } = &cli.command {
        let dir = out.clone().unwrap_or_else(|| manifest.parent().map(PathBuf::from).unwrap_or_default());
        let r = rerun(manifest, &dir)?;
        report(&r.run);
        if r.mismatches.is_empty() {
            println!("rerun reproduced {} data files", r.run.manifest.outputs.len());
            return Ok(r.run.exit_code());
        }
        for m in &r.mismatches {
            eprintln!("mismatch: {m}");
        }
        return Ok(3);
    }
    let (kind, args) = kind_of(&cli.command).expect("run subcommand");
    let ov = Overrides {
        seed: args.seed,
        out: args.out.clone(),
        colour_rule: args.colour_rule.as_deref().map(|s| s.parse::<ColourRule>()).transpose()?,
        symmetric_irreflexive: args.symmetric_irreflexive,
        strong: args.strong,
        sets: args.sets.clone(),
    };
    let spec = load(kind, args.config.as_deref(), &ov)?;
    let dir = spec.out.clone().unwrap_or_else(|| PathBuf::from("out").join(kind.name()));
    let r = run(&spec, &dir)?;
    report(&r);
    Ok(r.exit_code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
