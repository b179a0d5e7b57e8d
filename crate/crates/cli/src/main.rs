use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use vnotch_cli::config::{ConfigMap, RunConfig, SweepConfig};
use vnotch_cli::run::{export_vtk, models_in, run_single};
use vnotch_cli::sweep::{run_sweep, JobState};
use vnotch_cli::{CliError, ConvergenceTable, Result};

#[derive(Parser)]
#[command(name = "vnotch", version, about = "P2 finite elements for anti-plane shear of a V-notched square")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one geometry over a refinement hierarchy.
    Run(RunArgs),
    /// Solve a grid of geometries and merge their tables.
    Sweep(SweepArgs),
    /// Print a convergence table from a run directory or `convergence.csv`.
    Table {
        path: PathBuf,
        /// Print CSV instead of the aligned text layout.
        #[arg(long)]
        csv: bool,
    },
    /// Write the finest-level field of a finished run as legacy VTK.
    ExportVtk {
        dir: PathBuf,
        /// Model name; every model in the run when omitted.
        #[arg(long)]
        model: Option<String>,
        /// Output file (single model) or directory.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// `key = value` file applied before the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Arbitrary configuration override, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    refinements: Option<usize>,
    /// `full` or `half` mesh resolution.
    #[arg(long)]
    resolution: Option<String>,
    /// Output directory. Defaults to a directory under `$VNOTCH_OUT`
    /// (or `vnotch-out`).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    alpha_deg: Option<f64>,
    #[arg(long)]
    rc: Option<f64>,
    /// Comma-separated model names, e.g. `LIN2,NLB2`.
    #[arg(long)]
    model: Option<String>,
    /// Also write `field_<model>.vtk`.
    #[arg(long)]
    vtk: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    alphas: Option<String>,
    #[arg(long)]
    rcs: Option<String>,
    #[arg(long)]
    models: Option<String>,
    /// Geometries solved concurrently.
    #[arg(long)]
    jobs: Option<usize>,
}

impl Common {
    fn map(&self, extra: &[(&str, Option<String>)]) -> Result<ConfigMap> {
        let mut map = match &self.config {
            Some(p) => ConfigMap::load(p)?,
            None => ConfigMap::new(),
        };
        let mut flag = |key: &str, value: Option<String>| {
            if let Some(v) = value {
                map.set(key, &v, format!("--{}", key.replace('_', "-")));
            }
        };
        flag("refinements", self.refinements.map(|r| r.to_string()));
        flag("resolution", self.resolution.clone());
        for (k, v) in extra {
            flag(k, v.clone());
        }
        flag("output", self.output.as_ref().map(|o| o.display().to_string()));
        for s in &self.set {
            map.set_assignment(s)?;
        }
        Ok(map)
    }
}

fn run(args: RunArgs) -> Result<()> {
    let map = args.common.map(&[
        ("alpha_deg", args.alpha_deg.map(|a| a.to_string())),
        ("rc", args.rc.map(|r| r.to_string())),
        ("models", args.model.clone()),
        ("vtk", args.vtk.then(|| "true".to_string())),
    ])?;
    let config = RunConfig::from_map(map)?;
    let summary = run_single(&config)?;
    print!("{}", summary.result.table.render_text());
    println!("wrote {}", summary.output.display());
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<()> {
    let map = args.common.map(&[
        ("alphas", args.alphas.clone()),
        ("rcs", args.rcs.clone()),
        ("models", args.models.clone()),
        ("jobs", args.jobs.map(|j| j.to_string())),
    ])?;
    let config = SweepConfig::from_map(map)?;
    let outcome = run_sweep(&config)?;
    for j in &outcome.jobs {
        let state = match j.state {
            JobState::Done => "done",
            JobState::Skipped => "skipped",
            JobState::Rejected => "rejected",
            JobState::Failed => "FAILED",
        };
        println!("alpha={:<6} rc={:<6} {state}", j.alpha_deg, j.rc);
    }
    println!(
        "{} done, {} skipped, {} rejected, {} failed; {} rows in {}",
        outcome.count(JobState::Done),
        outcome.count(JobState::Skipped),
        outcome.count(JobState::Rejected),
        outcome.count(JobState::Failed),
        outcome.rows,
        outcome.output.join("maxima.csv").display()
    );
    outcome.check()
}

fn table(path: &Path, csv: bool) -> Result<()> {
    let file = if path.is_dir() { path.join("convergence.csv") } else { path.to_path_buf() };
    let reader = File::open(&file).map_err(|e| CliError::Usage(format!("{}: {e}", file.display())))?;
    let table = ConvergenceTable::read_csv(reader)?;
    if csv {
        table.write_csv(std::io::stdout().lock())
    } else {
        print!("{}", table.render_text());
        Ok(())
    }
}

fn export(dir: &Path, model: Option<String>, output: Option<PathBuf>) -> Result<()> {
    match model {
        Some(m) => {
            let out = output.unwrap_or_else(|| dir.join(format!("field_{m}.vtk")));
            export_vtk(dir, &m, &out)?;
            println!("wrote {}", out.display());
        }
        None => {
            let models = models_in(dir)?;
            if models.is_empty() {
                return Err(CliError::Usage(format!("{}: no model reports found", dir.display())));
            }
            let out_dir = output.unwrap_or_else(|| dir.to_path_buf());
            std::fs::create_dir_all(&out_dir)?;
            for m in models {
                let out = out_dir.join(format!("field_{m}.vtk"));
                export_vtk(dir, &m, &out)?;
                println!("wrote {}", out.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Sweep(a) => sweep(a),
        Command::Table { path, csv } => table(&path, csv),
        Command::ExportVtk { dir, model, output } => export(&dir, model, output),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.kind());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
