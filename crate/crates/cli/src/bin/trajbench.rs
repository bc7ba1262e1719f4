use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use log::{info, warn};

use trajbench::report::{projection_chart, render_charts, write_charts_and_markdown};
use trajbench::run::{default_workers, run, timeouts_with_train, ModelSpec, RunConfig, RunInfo, Suite, EXIT_ERROR};
use trajbench::store::{ingest, synthetic_trajectories, write_store};
use trajbench_core::baseline::{DEFAULT_FD_STEP, DEFAULT_RIDGE_LAMBDA};
use trajbench_core::metrics::{read_records_jsonl, Axis};
use trajbench_core::soap::{
    SoapParams, DEFAULT_L_MAX, DEFAULT_MAX_PAIRS_PER_SIDE, DEFAULT_N_MAX, DEFAULT_R_CUT, DEFAULT_SIGMA,
};

#[derive(Parser)]
#[command(version, about = "Trajectory-aware benchmark harness for machine-learning force fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse, order, convert and validate a manifest's trajectories into a canonical store.
    Ingest {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a suite's fixtures, train and evaluate, and write records and charts.
    Run(RunArgs),
    /// Re-render the report and charts from a records file.
    Report {
        /// Records in JSON-lines form.
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Parameters for the report header; defaults to `run.json` next to the records.
        #[arg(long)]
        run_info: Option<PathBuf>,
        /// Also render a grouped projection of all force records.
        #[arg(long, value_enum)]
        group_by: Option<GroupBy>,
    },
    /// Write the synthetic demo datasets as a canonical store.
    Synth {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum GroupBy {
    WindowSize,
    WindowStart,
}

#[derive(Parser)]
struct RunArgs {
    #[arg(long, value_enum)]
    suite: Suite,
    /// Canonical store written by `ingest` or `synth`.
    #[arg(long)]
    data: PathBuf,
    /// `builtin` or `cmd:"<program> <args>"`.
    #[arg(long, default_value = "builtin")]
    model: ModelSpec,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_R_CUT)]
    soap_rcut: f64,
    #[arg(long, default_value_t = DEFAULT_N_MAX)]
    soap_nmax: usize,
    #[arg(long, default_value_t = DEFAULT_L_MAX)]
    soap_lmax: usize,
    #[arg(long, default_value_t = DEFAULT_SIGMA)]
    soap_sigma: f64,
    /// Comma-separated sample counts replacing the suite's defaults.
    #[arg(long, value_delimiter = ',')]
    samples: Option<Vec<usize>>,
    #[arg(long, default_value_t = 3600.0)]
    train_timeout_s: f64,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Molecule for single-molecule suites; defaults to the first in the store.
    #[arg(long)]
    molecule: Option<String>,
    #[arg(long, default_value_t = DEFAULT_RIDGE_LAMBDA)]
    ridge_lambda: f64,
    #[arg(long, default_value_t = DEFAULT_FD_STEP)]
    fd_step: f64,
    /// Frames per side in window similarity comparisons.
    #[arg(long, default_value_t = DEFAULT_MAX_PAIRS_PER_SIDE)]
    similarity_frames: usize,
}

impl RunArgs {
    fn config(self) -> RunConfig {
        let mut config = RunConfig::new(self.suite, self.data, self.out);
        config.model = self.model;
        config.soap = SoapParams {
            r_cut: self.soap_rcut,
            sigma: self.soap_sigma,
            n_max: self.soap_nmax,
            l_max: self.soap_lmax,
            ..SoapParams::with_species([])
        };
        config.samples = self.samples;
        config.workers = self.workers.unwrap_or_else(default_workers);
        config.seed = self.seed;
        config.molecule = self.molecule;
        config.ridge_lambda = self.ridge_lambda;
        config.fd_step = self.fd_step;
        config.timeouts = timeouts_with_train(self.train_timeout_s);
        config.similarity_frames = self.similarity_frames;
        config
    }
}

fn load_run_info(records: &Path, explicit: Option<PathBuf>) -> Result<Option<RunInfo>> {
    let path = match explicit {
        Some(p) => p,
        None => match records.parent().map(|d| d.join("run.json")) {
            Some(p) if p.is_file() => p,
            _ => return Ok(None),
        },
    };
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Some(serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?))
}

fn execute(command: Command) -> Result<i32> {
    match command {
        Command::Ingest { manifest, out } => {
            for m in ingest(&manifest, &out)? {
                println!("{}: {} frames, {} atoms -> {}", m.id, m.frames, m.atoms, m.path.display());
            }
            Ok(0)
        }
        Command::Synth { out } => {
            for m in write_store(&out, &synthetic_trajectories())? {
                println!("{}: {} frames, {} atoms -> {}", m.id, m.frames, m.atoms, m.path.display());
            }
            Ok(0)
        }
        Command::Run(args) => {
            let config = args.config();
            std::fs::create_dir_all(&config.out_dir)
                .with_context(|| format!("creating {}", config.out_dir.display()))?;
            let summary = run(&config)?;
            let failed = summary.failed_fixtures;
            let total = summary.info.fixtures.len();
            if failed > 0 {
                warn!("{failed} of {total} fixtures failed");
            }
            println!(
                "{}: {total} fixtures, {failed} failed, {} records -> {}",
                config.suite.as_str(),
                summary.records.len(),
                config.out_dir.display()
            );
            Ok(summary.exit_code())
        }
        Command::Report { records, out, run_info, group_by } => {
            let text = std::fs::read_to_string(&records).with_context(|| format!("reading {}", records.display()))?;
            let parsed = read_records_jsonl(&text).with_context(|| format!("reading {}", records.display()))?;
            let info = load_run_info(&records, run_info)?;
            let mut charts = render_charts(&parsed)?;
            if let Some(g) = group_by {
                let axis = match g {
                    GroupBy::WindowSize => Axis::WindowSize,
                    GroupBy::WindowStart => Axis::WindowStart,
                };
                charts.push(projection_chart(&parsed, axis)?);
            }
            let paths = write_charts_and_markdown(&out, &parsed, info.as_ref(), charts)?;
            info!("{} records, {} charts", parsed.len(), paths.len());
            println!("{} records, {} charts -> {}", parsed.len(), paths.len(), out.display());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TRAJBENCH_LOG", "info")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
