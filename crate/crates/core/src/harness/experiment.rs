use super::plot::{emit_plots, write_plot_csv, PlotSeries};
use super::{initial_points, ExperimentConfig, Problem};
use crate::diagnostics::{
    checkpoints, convergence_time, ChainSet, ConvergenceCurve, DiagnosticReport, R_HAT_THRESHOLD,
};
use crate::error::{Error, Result};
use crate::kernels::KernelKind;
use crate::tempering::{ChainRunner, ChainTrace, Method};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

/// One line of the run summary table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub model: String,
    pub method: Method,
    pub inner: KernelKind,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub median_ess: Option<f64>,
    pub ess_per_sec: Option<f64>,
    pub converged: bool,
    pub convergence_time_s: Option<f64>,
}

pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub traces: Vec<ChainTrace>,
    pub report: DiagnosticReport,
    pub curve: ConvergenceCurve,
    pub summary: SummaryRow,
}

#[derive(Serialize)]
struct TraceSidecar<'a> {
    method: Method,
    chain: usize,
    seed: u64,
    samples: usize,
    config: &'a ExperimentConfig,
    kernel_acceptance: Vec<f64>,
    swap_acceptance: Vec<f64>,
    trajectory_acceptance: f64,
    total_time_s: f64,
    kernel_time_s: f64,
    tempering_time_s: f64,
}

#[derive(Serialize)]
struct ErrorManifest {
    method: Method,
    error: String,
    numerical: bool,
    completed_samples: Vec<usize>,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

fn advance_all(runners: &mut [ChainRunner], n: usize, single_thread: bool) -> Result<()> {
    let results: Vec<Result<()>> = if single_thread {
        runners.iter_mut().map(|r| r.advance(n)).collect()
    } else {
        runners.par_iter_mut().map(|r| r.advance(n)).collect()
    };
    results.into_iter().collect()
}

fn converged_now(traces: &[ChainTrace]) -> Result<bool> {
    let set = ChainSet::from_traces(traces)?;
    if set.chains() < 2 || set.samples() < 2 {
        return Ok(false);
    }
    Ok(crate::diagnostics::median_r_hat(&set)? < R_HAT_THRESHOLD)
}

/// Simulate the data and run every chain of `cfg`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let problem = Problem::build(cfg)?;
    if let Some(dir) = &cfg.output.dir {
        problem.save(dir, cfg.data_seed())?;
    }
    run_problem(cfg, &problem)
}

/// Run every chain of `cfg` on an already built problem.
///
/// Chains run concurrently unless `single_thread` is set. A failing chain
/// aborts the run; traces recorded so far and an `errors.json` manifest
/// are still written.
pub fn run_problem(cfg: &ExperimentConfig, problem: &Problem) -> Result<ExperimentResult> {
    let target = problem.model.target();
    let sc = cfg.sampler_config()?;
    sc.validate(target.n_obs())?;
    let s = &cfg.sampler;
    let mut runners = initial_points(target.as_ref(), s.chains, s.seed)
        .into_iter()
        .enumerate()
        .map(|(c, x)| ChainRunner::new(target.clone(), sc.clone(), s.seed, c, x))
        .collect::<Result<Vec<_>>>()?;

    let mut done = 0;
    let outcome = loop {
        if done >= s.samples {
            break Ok(());
        }
        let n = if s.stop_when_converged {
            s.block.min(s.samples - done)
        } else {
            s.samples - done
        };
        if let Err(e) = advance_all(&mut runners, n, s.single_thread) {
            break Err(e);
        }
        done += n;
        if s.stop_when_converged {
            let traces: Vec<ChainTrace> = runners.iter().map(|r| r.trace().clone()).collect();
            match converged_now(&traces) {
                Ok(true) => break Ok(()),
                Ok(false) => {}
                Err(e) => break Err(e),
            }
        }
    };
    let traces: Vec<ChainTrace> = runners.into_iter().map(ChainRunner::into_trace).collect();
    let method = cfg.sampler.method;

    if let Err(e) = outcome {
        if let Some(dir) = &cfg.output.dir {
            write_traces(dir, cfg, &traces)?;
            let manifest = ErrorManifest {
                method,
                error: e.to_string(),
                numerical: e.is_numerical(),
                completed_samples: traces.iter().map(ChainTrace::len).collect(),
            };
            std::fs::write(
                dir.join(format!("{method}_errors.json")),
                serde_json::to_string_pretty(&manifest)?,
            )?;
        }
        return Err(e);
    }

    let len = traces.first().map_or(0, ChainTrace::len);
    let step = match s.checkpoint_step {
        0 => (len / 100).max(1),
        k => k,
    };
    let prefixes = checkpoints(len, step);
    let report = DiagnosticReport::from_traces(&traces, &prefixes)?;
    let curve = if report.per_dim.is_empty() {
        ConvergenceCurve::default()
    } else {
        convergence_time(&traces, &prefixes)?
    };
    let summary = SummaryRow {
        model: problem.kind.to_string(),
        method,
        inner: cfg.kernel.inner,
        n: target.n_obs(),
        k: target.dim(),
        median_ess: finite(report.median_ess),
        ess_per_sec: report.ess_per_sec,
        converged: report.converged,
        convergence_time_s: report.convergence_time_s,
    };
    let result = ExperimentResult {
        config: cfg.clone(),
        traces,
        report,
        curve,
        summary,
    };
    if let Some(dir) = &cfg.output.dir {
        write_outputs(dir, &result)?;
    }
    Ok(result)
}

fn write_traces(dir: &Path, cfg: &ExperimentConfig, traces: &[ChainTrace]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let method = cfg.sampler.method;
    for t in traces {
        let path = dir.join(format!("{method}_chain{}.csv", t.chain));
        t.write_csv(BufWriter::new(File::create(path)?))?;
        let st = &t.stats;
        let side = TraceSidecar {
            method,
            chain: t.chain,
            seed: cfg.sampler.seed,
            samples: t.len(),
            config: cfg,
            kernel_acceptance: st.kernel_rates(),
            swap_acceptance: st.swap_rates(),
            trajectory_acceptance: st.trajectory.rate(),
            total_time_s: st.total_time_s,
            kernel_time_s: st.kernel_time_s,
            tempering_time_s: st.tempering_time_s,
        };
        std::fs::write(
            dir.join(format!("{method}_chain{}.json", t.chain)),
            serde_json::to_string_pretty(&side)?,
        )?;
    }
    Ok(())
}

fn write_outputs(dir: &Path, r: &ExperimentResult) -> Result<()> {
    let method = r.config.sampler.method;
    write_traces(dir, &r.config, &r.traces)?;
    std::fs::write(dir.join(format!("{method}_diagnostics.json")), r.report.to_json()?)?;
    write_summary_csv(
        std::slice::from_ref(&r.summary),
        File::create(dir.join(format!("{method}_summary.csv")))?,
    )?;
    let series = [PlotSeries {
        label: method.to_string(),
        points: r.curve.points.clone(),
    }];
    write_plot_csv(&series, File::create(dir.join(format!("{method}_convergence.csv")))?)?;
    Ok(())
}

pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record([
            "model",
            "method",
            "inner",
            "N",
            "K",
            "median_ess",
            "ess_per_sec",
            "converged",
            "convergence_time_s",
        ])?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    /// Dataset size.
    N,
    /// MVN dimension or GP input dimension.
    Dim,
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "n" => Ok(SweepAxis::N),
            "dim" | "d" | "dimension" => Ok(SweepAxis::Dim),
            other => Err(Error::config(format!("unknown sweep axis `{other}`"))),
        }
    }
}

impl SweepAxis {
    fn as_str(&self) -> &'static str {
        match self {
            SweepAxis::N => "n",
            SweepAxis::Dim => "dim",
        }
    }
}

pub struct SweepResult {
    pub axis: SweepAxis,
    pub values: Vec<usize>,
    pub methods: Vec<Method>,
    /// Value-major, then method.
    pub rows: Vec<SummaryRow>,
    pub curves: Vec<(usize, Method, ConvergenceCurve)>,
}

impl SweepResult {
    /// ESS per second with one row per axis value and one column per method.
    pub fn write_pivot<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![self.axis.as_str().to_string(), "K".to_string()];
        header.extend(self.methods.iter().map(|m| m.to_string()));
        w.write_record(&header)?;
        for (i, v) in self.values.iter().enumerate() {
            let rows = &self.rows[i * self.methods.len()..(i + 1) * self.methods.len()];
            let mut rec = vec![v.to_string(), rows.first().map_or(String::new(), |r| r.k.to_string())];
            rec.extend(
                rows.iter()
                    .map(|r| r.ess_per_sec.map_or(String::new(), |e| e.to_string())),
            );
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// One experiment per `(value, method)` with a shared seed. Each run writes
/// into `<dir>/<axis>_<value>/`; the sweep tables go to `<dir>`.
pub fn sweep(base: &ExperimentConfig, axis: SweepAxis, values: &[usize], methods: &[Method]) -> Result<SweepResult> {
    if values.is_empty() || methods.is_empty() {
        return Err(Error::config("a sweep needs at least one value and one method"));
    }
    if values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::config("sweep values must be strictly ascending"));
    }
    let mut configs = Vec::new();
    for &v in values {
        for &m in methods {
            let mut cfg = base.clone();
            match axis {
                SweepAxis::N => cfg.model.n = v,
                SweepAxis::Dim => cfg.model.dim = v,
            }
            cfg.sampler.method = m;
            cfg.output.dir = base
                .output
                .dir
                .as_ref()
                .map(|d| d.join(format!("{}_{v}", axis.as_str())));
            cfg.validate()?;
            configs.push((v, cfg));
        }
    }
    let mut rows = Vec::new();
    let mut curves = Vec::new();
    for (v, cfg) in &configs {
        let r = run_experiment(cfg)?;
        rows.push(r.summary);
        curves.push((*v, cfg.sampler.method, r.curve));
    }
    let result = SweepResult {
        axis,
        values: values.to_vec(),
        methods: methods.to_vec(),
        rows,
        curves,
    };
    if let Some(dir) = &base.output.dir {
        std::fs::create_dir_all(dir)?;
        write_summary_csv(&result.rows, File::create(dir.join("sweep_summary.csv"))?)?;
        result.write_pivot(File::create(dir.join("sweep_ess_per_sec.csv"))?)?;
        for &v in values {
            let series: Vec<PlotSeries> = result
                .curves
                .iter()
                .filter(|(cv, _, _)| *cv == v)
                .map(|(_, m, c)| PlotSeries {
                    label: m.to_string(),
                    points: c.points.clone(),
                })
                .collect();
            emit_plots(&series, &dir.join(format!("{}_{v}", axis.as_str())))?;
        }
    }
    Ok(result)
}
