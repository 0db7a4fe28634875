//! Command-line front end: `simulate | run | sweep | diagnose | cost | plot`.
//!
//! Exit codes: 0 success, 1 configuration error, 2 numerical failure,
//! 3 not converged under `--require-converged`.

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use subtemper::costmodel::{cost_table, format_cost_table, write_cost_csv};
use subtemper::diagnostics::{checkpoints, convergence_time, DiagnosticReport};
use subtemper::error::{Error, Result};
use subtemper::harness::{
    emit_plots, read_plot_csv, run_experiment, sweep, write_summary_csv, ExperimentConfig, ModelKind, PlotSeries,
    Problem, SummaryRow, SweepAxis,
};
use subtemper::kernels::KernelKind;
use subtemper::tempering::{ChainTrace, Method};

#[derive(Parser)]
#[command(name = "subtemper", version, about = "Tempered MCMC by data subsampling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a dataset and write data.csv and data.json.
    Simulate(Overrides),
    /// Run one or more methods on the same dataset.
    Run(Overrides),
    /// Run every method across values of N or of the dimension.
    Sweep {
        #[command(flatten)]
        overrides: Overrides,
        /// Axis to vary: n or dim.
        #[arg(long, default_value = "n")]
        axis: String,
        /// Comma-separated, strictly ascending values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<usize>,
    },
    /// Diagnose trace CSV files, one per chain.
    Diagnose {
        #[arg(required = true)]
        traces: Vec<PathBuf>,
        /// Spacing of the convergence scan; 0 picks about 100 points.
        #[arg(long, default_value_t = 0)]
        checkpoint_step: usize,
        /// Write the report here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print predicted cost ratios relative to the inner sampler.
    Cost {
        #[arg(long, value_delimiter = ',', default_value = "6")]
        levels: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "0.125")]
        beta_star: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "1,3")]
        alpha: Vec<f64>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Render convergence plots from plot-data CSV files.
    Plot {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, required = true)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Csv,
}

/// Flags overriding keys of the configuration file.
#[derive(Args, Default)]
struct Overrides {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: Option<ModelKind>,
    /// One method, a comma-separated list, or `all`.
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    inner: Option<KernelKind>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long)]
    beta_star: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    chains: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    leapfrog: Option<usize>,
    #[arg(long)]
    mh_step: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run chains serially on one thread.
    #[arg(long)]
    single_thread: bool,
    /// Stop each run once the median r_hat drops below 1.1.
    #[arg(long)]
    stop_when_converged: bool,
    /// Exit with status 3 unless every run converged.
    #[arg(long)]
    require_converged: bool,
}

impl Overrides {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(v) = self.model {
            cfg.model.kind = v;
        }
        if let Some(v) = self.n {
            cfg.model.n = v;
        }
        if let Some(v) = self.dim {
            cfg.model.dim = v;
        }
        if let Some(v) = self.inner {
            cfg.kernel.inner = v;
        }
        if let Some(v) = self.levels {
            cfg.sampler.levels = v;
        }
        if let Some(v) = self.beta_star {
            cfg.sampler.beta_star = v;
        }
        if let Some(v) = self.samples {
            cfg.sampler.samples = v;
        }
        if let Some(v) = self.chains {
            cfg.sampler.chains = v;
        }
        if let Some(v) = self.seed {
            cfg.sampler.seed = v;
        }
        if let Some(v) = self.eps {
            cfg.kernel.eps = v;
        }
        if let Some(v) = self.leapfrog {
            cfg.kernel.leapfrog = Some(v);
        }
        if let Some(v) = self.mh_step {
            cfg.kernel.mh_step = v;
        }
        if let Some(v) = &self.out {
            cfg.output.dir = Some(v.clone());
        }
        cfg.sampler.single_thread |= self.single_thread;
        cfg.sampler.stop_when_converged |= self.stop_when_converged;
        let methods = self.methods(&cfg)?;
        cfg.sampler.method = methods[0];
        cfg.validate()?;
        Ok(cfg)
    }

    fn methods(&self, cfg: &ExperimentConfig) -> Result<Vec<Method>> {
        match self.method.as_deref() {
            None => Ok(vec![cfg.sampler.method]),
            Some("all") => Ok(vec![Method::None, Method::Pt, Method::Tt, Method::Spt, Method::Stt]),
            Some(list) => list.split(',').map(|m| m.trim().parse()).collect(),
        }
    }
}

fn print_summary(rows: &[SummaryRow]) -> Result<()> {
    write_summary_csv(rows, std::io::stdout().lock())
}

fn not_converged(rows: &[SummaryRow]) -> bool {
    rows.iter().any(|r| !r.converged)
}

fn run(o: &Overrides) -> Result<ExitCode> {
    let base = o.config()?;
    let mut rows = Vec::new();
    let mut series = Vec::new();
    for m in o.methods(&base)? {
        let mut cfg = base.clone();
        cfg.sampler.method = m;
        let r = run_experiment(&cfg)?;
        eprintln!(
            "{m}: median r_hat {:.4}, median ESS {:.1}, {:.2}s per chain",
            r.report.median_r_hat, r.report.median_ess, r.report.mean_chain_duration_s
        );
        series.push(PlotSeries {
            label: m.to_string(),
            points: r.curve.points.clone(),
        });
        rows.push(r.summary);
    }
    if let Some(dir) = &base.output.dir {
        write_summary_csv(&rows, File::create(dir.join("summary.csv"))?)?;
        emit_plots(&series, dir)?;
    }
    print_summary(&rows)?;
    Ok(finish(o.require_converged && not_converged(&rows)))
}

fn finish(failed_convergence: bool) -> ExitCode {
    if failed_convergence {
        eprintln!("not every run converged");
        ExitCode::from(3)
    } else {
        ExitCode::SUCCESS
    }
}

fn simulate(o: &Overrides) -> Result<ExitCode> {
    let cfg = o.config()?;
    let dir = cfg
        .output
        .dir
        .clone()
        .ok_or_else(|| Error::Config("simulate needs --out".into()))?;
    let problem = Problem::build(&cfg)?;
    problem.save(&dir, cfg.data_seed())?;
    eprintln!(
        "wrote {} rows to {}",
        problem.data.len(),
        dir.join("data.csv").display()
    );
    Ok(ExitCode::SUCCESS)
}

fn run_sweep(o: &Overrides, axis: &str, values: &[usize]) -> Result<ExitCode> {
    let base = o.config()?;
    let axis: SweepAxis = axis.parse()?;
    let methods = o.methods(&base)?;
    let r = sweep(&base, axis, values, &methods)?;
    print_summary(&r.rows)?;
    Ok(finish(o.require_converged && not_converged(&r.rows)))
}

fn diagnose(paths: &[PathBuf], step: usize, out: Option<&Path>) -> Result<ExitCode> {
    let traces = paths
        .iter()
        .map(|p| ChainTrace::read_csv(File::open(p)?))
        .collect::<Result<Vec<_>>>()?;
    let len = traces.first().map_or(0, ChainTrace::len);
    let step = if step == 0 { (len / 100).max(1) } else { step };
    let prefixes = checkpoints(len, step);
    let report = DiagnosticReport::from_traces(&traces, &prefixes)?;
    let json = report.to_json()?;
    match out {
        Some(path) => std::fs::write(path, json)?,
        None => println!("{json}"),
    }
    if !report.per_dim.is_empty() {
        let curve = convergence_time(&traces, &prefixes)?;
        if let Some(first) = curve.first {
            eprintln!("converged after {} samples ({:.3}s)", first.samples, first.wall_time_s);
        } else {
            eprintln!("not converged");
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cost(levels: &[usize], betas: &[f64], alphas: &[f64], format: Format) -> Result<ExitCode> {
    let rows = cost_table(levels, betas, alphas)?;
    match format {
        Format::Text => print!("{}", format_cost_table(&rows)),
        Format::Csv => write_cost_csv(&rows, std::io::stdout().lock())?,
    }
    Ok(ExitCode::SUCCESS)
}

fn plot(inputs: &[PathBuf], out: &Path) -> Result<ExitCode> {
    let mut series = Vec::new();
    for p in inputs {
        series.extend(read_plot_csv(File::open(p)?)?);
    }
    emit_plots(&series, out)?;
    Ok(ExitCode::SUCCESS)
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
    let result = match &cli.command {
        Command::Simulate(o) => simulate(o),
        Command::Run(o) => run(o),
        Command::Sweep {
            overrides,
            axis,
            values,
        } => run_sweep(overrides, axis, values),
        Command::Diagnose {
            traces,
            checkpoint_step,
            out,
        } => diagnose(traces, *checkpoint_step, out.as_deref()),
        Command::Cost {
            levels,
            beta_star,
            alpha,
            format,
        } => cost(levels, beta_star, alpha, *format),
        Command::Plot { inputs, out } => plot(inputs, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}
