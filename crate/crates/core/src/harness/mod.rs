//! Experiment orchestration: configuration, data simulation, chain
//! initialization, multi-chain runs, sweeps and plots.
//!
//! Configuration files are TOML with four sections:
//!
//! ```toml
//! [model]
//! kind = "mvn"      # or "gp"
//! n = 64            # observations
//! dim = 5           # MVN dimension, or GP input dimension
//!
//! [sampler]
//! method = "stt"    # none | pt | tt | spt | stt
//! levels = 6
//! beta_star = 0.125
//! samples = 2000
//! chains = 3
//! seed = 1
//!
//! [kernel]
//! inner = "hmc"     # or "mh"
//! eps = 0.01
//! leapfrog = 10
//!
//! [output]
//! dir = "out"
//! ```
//!
//! Every key has a default; see [`ExperimentConfig`].

mod experiment;
mod plot;

pub use experiment::{
    run_experiment, run_problem, sweep, write_summary_csv, ExperimentResult, SummaryRow, SweepAxis, SweepResult,
};
pub use plot::{emit_plots, read_plot_csv, render_svg, write_plot_csv, PlotAxis, PlotSeries};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::kernels::{KernelConfig, KernelKind};
use crate::ladder::Ladder;
use crate::models::{
    equicorrelated, simulate_gp_data, simulate_mvn_data, GpHyper, GpPriors, GpRegressionModel, LogTarget, MvnMeanModel,
};
use crate::rng::{RngStream, DATA_CHAIN, INIT_SLOT};
use crate::tempering::{Method, SamplerConfig};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::sync::Arc;

/// Largest GP dataset accepted without `allow_large`.
pub const GP_DEFAULT_MAX_N: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Mvn,
    Gp,
}

impl ModelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Mvn => "mvn",
            ModelKind::Gp => "gp",
        }
    }

    /// Default leapfrog count: 10 for the Gaussian mean, 5 for GP regression.
    pub fn default_leapfrog(&self) -> usize {
        match self {
            ModelKind::Mvn => 10,
            ModelKind::Gp => 5,
        }
    }

    /// Cost exponent of one likelihood evaluation in `N`.
    pub fn cost_alpha(&self) -> f64 {
        match self {
            ModelKind::Mvn => 1.0,
            ModelKind::Gp => 3.0,
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mvn" => Ok(ModelKind::Mvn),
            "gp" => Ok(ModelKind::Gp),
            other => Err(Error::config(format!("unknown model `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub n: usize,
    pub dim: usize,
    /// MVN prior standard deviation.
    pub sigma0: f64,
    /// MVN observation correlation (equicorrelated, unit variances).
    pub rho: f64,
    /// Seed for data simulation; defaults to the sampler seed.
    pub data_seed: Option<u64>,
    /// Load observations from this CSV instead of simulating.
    pub data: Option<PathBuf>,
    pub gp_priors: GpPriors,
    /// Permit GP datasets above [`GP_DEFAULT_MAX_N`].
    pub allow_large: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            kind: ModelKind::Mvn,
            n: 64,
            dim: 5,
            sigma0: 1.0,
            rho: 0.0,
            data_seed: None,
            data: None,
            gp_priors: GpPriors::default(),
            allow_large: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerSection {
    pub method: Method,
    pub levels: usize,
    pub beta_star: f64,
    pub samples: usize,
    pub chains: usize,
    pub seed: u64,
    /// Run chains one after another on the calling thread.
    pub single_thread: bool,
    /// Stop early once the median `r_hat` drops below the threshold,
    /// checking every `block` samples.
    pub stop_when_converged: bool,
    pub block: usize,
    /// Spacing of the convergence scan; 0 picks about 100 points.
    pub checkpoint_step: usize,
}

impl Default for SamplerSection {
    fn default() -> Self {
        Self {
            method: Method::Stt,
            levels: 6,
            beta_star: 0.125,
            samples: 2000,
            chains: 3,
            seed: 0,
            single_thread: false,
            stop_when_converged: false,
            block: 500,
            checkpoint_step: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelSection {
    pub inner: KernelKind,
    pub eps: f64,
    /// Defaults per model when absent.
    pub leapfrog: Option<usize>,
    pub mh_step: f64,
}

impl Default for KernelSection {
    fn default() -> Self {
        Self {
            inner: KernelKind::Hmc,
            eps: 0.01,
            leapfrog: None,
            mh_step: 0.1,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    /// Nothing is written when absent.
    pub dir: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub sampler: SamplerSection,
    pub kernel: KernelSection,
    pub output: OutputSection,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::config(e.to_string()))
    }

    pub fn data_seed(&self) -> u64 {
        self.model.data_seed.unwrap_or(self.sampler.seed)
    }

    pub fn kernel_config(&self) -> KernelConfig {
        KernelConfig {
            kind: self.kernel.inner,
            mh_base_step: self.kernel.mh_step,
            hmc_eps: self.kernel.eps,
            hmc_steps: self.kernel.leapfrog.unwrap_or(self.model.kind.default_leapfrog()),
        }
    }

    pub fn ladder(&self) -> Result<Ladder> {
        Ladder::geometric(self.sampler.levels, self.sampler.beta_star)
    }

    pub fn sampler_config(&self) -> Result<SamplerConfig> {
        let ladder = match self.sampler.method {
            Method::None => Ladder::target_only(),
            _ => self.ladder()?,
        };
        Ok(SamplerConfig {
            method: self.sampler.method,
            kernel: self.kernel_config(),
            ladder,
            samples: self.sampler.samples,
        })
    }

    /// Check every precondition before any work starts.
    pub fn validate(&self) -> Result<()> {
        let m = &self.model;
        if m.data.is_none() {
            if m.n == 0 {
                return Err(Error::config("model.n must be positive"));
            }
            if m.dim == 0 {
                return Err(Error::config("model.dim must be positive"));
            }
        }
        if m.kind == ModelKind::Gp && m.data.is_none() && m.n > GP_DEFAULT_MAX_N && !m.allow_large {
            return Err(Error::config(format!(
                "GP with N = {} exceeds the default cap of {GP_DEFAULT_MAX_N}; set model.allow_large",
                m.n
            )));
        }
        if m.kind == ModelKind::Mvn && !(-1.0 / ((m.dim.max(2) - 1) as f64) < m.rho && m.rho < 1.0) {
            return Err(Error::config(format!(
                "rho = {} does not give a valid covariance",
                m.rho
            )));
        }
        if self.sampler.chains == 0 {
            return Err(Error::config("sampler.chains must be at least 1"));
        }
        if self.sampler.stop_when_converged && self.sampler.block == 0 {
            return Err(Error::config("sampler.block must be positive"));
        }
        let sc = self.sampler_config()?;
        sc.kernel.validate()?;
        if m.data.is_none() {
            sc.validate(m.n)?;
        }
        Ok(())
    }

    /// Identifies everything except the method, for cost comparisons.
    pub fn fingerprint(&self) -> String {
        let k = self.kernel_config();
        format!(
            "{}:n={}:d={}:inner={}:eps={}:L={}:mh={}:M={}:b={}:seed={}",
            self.model.kind,
            self.model.n,
            self.model.dim,
            k.kind,
            k.hmc_eps,
            k.hmc_steps,
            k.mh_base_step,
            self.sampler.levels,
            self.sampler.beta_star,
            self.data_seed()
        )
    }
}

/// Ground truth behind a simulated dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Truth {
    Mvn { theta_true: Vec<f64> },
    Gp { hyper: GpHyper },
    Loaded,
}

#[derive(Clone)]
pub enum ModelHandle {
    Mvn(Arc<MvnMeanModel>),
    Gp(Arc<GpRegressionModel>),
}

impl ModelHandle {
    pub fn target(&self) -> Arc<dyn LogTarget> {
        match self {
            ModelHandle::Mvn(m) => m.clone(),
            ModelHandle::Gp(m) => m.clone(),
        }
    }

    pub fn mvn(&self) -> Option<&MvnMeanModel> {
        match self {
            ModelHandle::Mvn(m) => Some(m),
            ModelHandle::Gp(_) => None,
        }
    }
}

/// A dataset with its model.
#[derive(Clone)]
pub struct Problem {
    pub kind: ModelKind,
    pub data: Dataset,
    pub truth: Truth,
    pub model: ModelHandle,
}

#[derive(Serialize)]
struct DataSidecar<'a> {
    model: ModelKind,
    seed: u64,
    n: usize,
    dim: usize,
    truth: &'a Truth,
}

impl Problem {
    /// Simulate (or load) the data described by `cfg` and build the model.
    pub fn build(cfg: &ExperimentConfig) -> Result<Self> {
        let m = &cfg.model;
        let seed = cfg.data_seed();
        let (data, truth) = match (&m.data, m.kind) {
            (Some(path), _) => (Dataset::load(path)?, Truth::Loaded),
            (None, ModelKind::Mvn) => {
                let mut rng = RngStream::for_chain(seed, DATA_CHAIN, 0);
                let theta_true: Vec<f64> = (0..m.dim).map(|_| m.sigma0 * rng.normal()).collect();
                let mut rows = RngStream::for_chain(seed, DATA_CHAIN, 1);
                let data = simulate_mvn_data(&equicorrelated(m.dim, m.rho), &theta_true, m.n, &mut rows)?;
                (data, Truth::Mvn { theta_true })
            }
            (None, ModelKind::Gp) => {
                let (data, hyper) = simulate_gp_data(m.dim, &m.gp_priors, m.n, seed)?;
                (data, Truth::Gp { hyper })
            }
        };
        let model = match m.kind {
            ModelKind::Mvn => ModelHandle::Mvn(Arc::new(MvnMeanModel::new(
                equicorrelated(data.dim(), m.rho),
                m.sigma0,
                data.clone(),
            )?)),
            ModelKind::Gp => ModelHandle::Gp(Arc::new(GpRegressionModel::new(data.clone(), m.gp_priors.clone())?)),
        };
        Ok(Self {
            kind: m.kind,
            data,
            truth,
            model,
        })
    }

    /// Write `data.csv` and the `data.json` sidecar into `dir`.
    pub fn save(&self, dir: &Path, seed: u64) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        self.data.save(&dir.join("data.csv"))?;
        let side = DataSidecar {
            model: self.kind,
            seed,
            n: self.data.len(),
            dim: self.data.dim(),
            truth: &self.truth,
        };
        std::fs::write(dir.join("data.json"), serde_json::to_string_pretty(&side)?)?;
        Ok(())
    }
}

/// Norm below which the prior mean counts as zero.
const ZERO_MEAN_TOL: f64 = 1e-8;

/// Starting points of `chains` chains, in sampling coordinates.
///
/// For three chains the natural-scale prior mean `t` gives `{t, t/2, 2t}`.
/// A (near) zero prior mean swaps `t` for one prior draw. Any other chain
/// count starts each chain from its own prior draw.
pub fn initial_points(model: &dyn LogTarget, chains: usize, seed: u64) -> Vec<Vec<f64>> {
    if chains != 3 {
        return (0..chains)
            .map(|c| model.sample_prior(&mut RngStream::for_chain(seed, c as u32, INIT_SLOT)))
            .collect();
    }
    let mean = model.prior_mean();
    let norm = mean.iter().map(|v| v * v).sum::<f64>().sqrt();
    let center = if norm < ZERO_MEAN_TOL {
        let draw = model.sample_prior(&mut RngStream::for_chain(seed, 0, INIT_SLOT));
        model.to_natural(&draw)
    } else {
        mean
    };
    [1.0, 0.5, 2.0]
        .iter()
        .map(|s| model.from_natural(&center.iter().map(|v| s * v).collect::<Vec<_>>()))
        .collect()
}
