//! `workload-forecast` command line: synthesize a cohort, run the lag×pred
//! grid, render tables and the lag-horizon statistics.
//!
//! Exit codes: 0 success, 1 invalid input or configuration, 2 runtime failure.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use workload_forecast::data::WorkloadComponent;
use workload_forecast::experiment::{
    analyze_lag_horizons, prepare_cohort, read_results, render_all_tables, render_bands,
    render_lag_analysis, render_table, run_experiment, synthesize_into_data_dir, write_results,
    CellResult, ExperimentConfig, ExperimentError, LagAnalysis, ResultsFile,
};
use workload_forecast::window::InputMode;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "workload-forecast", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate the synthetic cohort into the data directory.
    Synth,
    /// Run the full grid and write the results file.
    Run,
    /// Print Spearman tables from a results file.
    Table,
    /// Print the lag-horizon Friedman/Wilcoxon report from a results file.
    Stats,
    /// synth, run, table and stats in one go; the report goes next to the results file.
    All,
}

#[derive(Debug, Args)]
struct Opts {
    /// TOML experiment config; built-in defaults otherwise.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the run seed and the synthesis seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    data_dir: Option<PathBuf>,
    /// Results file.
    #[arg(long, global = true, default_value = "results.json")]
    out: PathBuf,
    /// Comma-separated: univariate, multivariate.
    #[arg(long, global = true, value_delimiter = ',')]
    mode: Vec<InputMode>,
    /// Comma-separated component names, e.g. overall,cognitive.
    #[arg(long, global = true, value_delimiter = ',')]
    component: Vec<WorkloadComponent>,
    /// Comma-separated lag horizons in seconds.
    #[arg(long, global = true, value_delimiter = ',')]
    lag: Vec<u32>,
    /// Comma-separated prediction horizons in seconds.
    #[arg(long, global = true, value_delimiter = ',')]
    pred: Vec<u32>,
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
}

/// Parses `args` (program name first) and runs the command; returns the exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_runtime() {
                EXIT_RUNTIME
            } else {
                EXIT_INVALID
            }
        }
    }
}

fn execute(cli: &Cli) -> Result<(), ExperimentError> {
    let opts = &cli.opts;
    if opts.workers == 0 {
        return Err(ExperimentError::Config("--workers must be at least 1".into()));
    }
    match cli.command {
        Command::Synth => {
            let cfg = load_config(opts)?;
            synthesize_into_data_dir(&cfg)?;
        }
        Command::Run => {
            let cfg = load_config(opts)?;
            let cohort = prepare_cohort(&cfg)?;
            run_and_write(&cfg, &cohort, opts)?;
        }
        Command::Table => {
            let results = read_results(&opts.out)?;
            print!("{}", tables_for(&results.cells, opts)?);
        }
        Command::Stats => {
            let results = read_results(&opts.out)?;
            let analyses = analyze_lag_horizons(&filter_cells(&results.cells, opts))?;
            print!("{}", render_lag_analysis(&analyses));
        }
        Command::All => {
            let cfg = load_config(opts)?;
            // a configured synthesizer regenerates the cohort so reruns see identical data
            let cohort = if cfg.synth.is_some() {
                synthesize_into_data_dir(&cfg)?
            } else {
                prepare_cohort(&cfg)?
            };
            let results = run_and_write(&cfg, &cohort, opts)?;
            let report = full_report(&results.cells, &results.analyses)?;
            let txt = report_path(&opts.out);
            fs::write(&txt, &report).map_err(|e| ExperimentError::io(&txt, e))?;
            print!("{report}");
            info!("wrote {} and {}", opts.out.display(), txt.display());
        }
    }
    Ok(())
}

fn load_config(opts: &Opts) -> Result<ExperimentConfig, ExperimentError> {
    let mut cfg = match &opts.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
        if let Some(s) = cfg.synth.as_mut() {
            s.seed = seed;
        }
    }
    if let Some(d) = &opts.data_dir {
        cfg.data_dir = d.clone();
    }
    if !opts.mode.is_empty() {
        cfg.modes = opts.mode.clone();
    }
    if !opts.component.is_empty() {
        cfg.components = opts.component.clone();
    }
    if !opts.lag.is_empty() {
        cfg.lag_grid_s = opts.lag.clone();
    }
    if !opts.pred.is_empty() {
        cfg.pred_grid_s = opts.pred.clone();
    }
    cfg.normalized()
}

fn run_and_write(
    cfg: &ExperimentConfig,
    cohort: &[workload_forecast::data::SubjectSeries],
    opts: &Opts,
) -> Result<ResultsFile, ExperimentError> {
    let outcome = run_experiment(cfg, cohort, opts.workers)?;
    let analyses = match analyze_lag_horizons(&outcome.cells) {
        Ok(a) => a,
        Err(ExperimentError::InsufficientColumns(m)) => {
            warn!("lag analysis skipped: {m}");
            Vec::new()
        }
        Err(e) => return Err(e),
    };
    let results = ResultsFile::new(cfg.clone(), outcome.cells, analyses);
    write_results(&opts.out, &results)?;
    Ok(results)
}

fn filter_cells(cells: &[CellResult], opts: &Opts) -> Vec<CellResult> {
    cells
        .iter()
        .filter(|c| opts.mode.is_empty() || opts.mode.contains(&c.mode))
        .filter(|c| opts.component.is_empty() || opts.component.contains(&c.component))
        .filter(|c| opts.lag.is_empty() || opts.lag.contains(&c.lag_s))
        .filter(|c| opts.pred.is_empty() || opts.pred.contains(&c.pred_s))
        .cloned()
        .collect()
}

fn tables_for(cells: &[CellResult], opts: &Opts) -> Result<String, ExperimentError> {
    let cells = filter_cells(cells, opts);
    if opts.mode.len() == 1 && opts.component.len() == 1 {
        return render_table(&cells, opts.mode[0], opts.component[0]);
    }
    if cells.is_empty() {
        return Err(ExperimentError::IncompleteGrid(
            "no cells match the selection".into(),
        ));
    }
    render_all_tables(&cells)
}

fn full_report(cells: &[CellResult], analyses: &[LagAnalysis]) -> Result<String, ExperimentError> {
    let mut out = render_all_tables(cells)?;
    out.push_str("\nCorrelation bands\n");
    out.push_str(&render_bands(cells));
    if !analyses.is_empty() {
        out.push_str("\nLag-horizon analysis\n");
        out.push_str(&render_lag_analysis(analyses));
    }
    Ok(out)
}

/// Path of the plain-text report `all` writes next to `results`.
pub fn report_path(results: &Path) -> PathBuf {
    results.with_extension("txt")
}
