use super::parallel::{pt_iteration, EnsembleState};
use super::target::TemperedTarget;
use super::trace::{ChainStats, ChainTrace};
use super::transitions::{stt_iteration, tt_iteration};
use super::{powered_targets, subsampled_targets, Method, SamplerConfig};
use crate::data::SubsampleFamily;
use crate::error::{Error, Result};
use crate::kernels::{LevelState, TransitionStats};
use crate::models::LogTarget;
use crate::rng::{RngStream, CONTROL_SLOT};
use std::sync::Arc;
use std::time::Instant;

enum Position {
    Fresh,
    Single(LevelState),
    Ensemble(EnsembleState),
}

/// A resumable chain. Streams are derived from `(seed, chain)`, so advancing
/// in blocks yields the same trace as one long run.
pub struct ChainRunner {
    chain: usize,
    config: SamplerConfig,
    targets: Vec<TemperedTarget>,
    sizes: Vec<usize>,
    init: Vec<f64>,
    position: Position,
    level_rngs: Vec<RngStream>,
    control: RngStream,
    kernel_stats: Vec<TransitionStats>,
    trajectory: TransitionStats,
    last_family: Option<SubsampleFamily>,
    trace: ChainTrace,
    elapsed: f64,
}

impl ChainRunner {
    pub fn new(
        model: Arc<dyn LogTarget>,
        config: SamplerConfig,
        seed: u64,
        chain: usize,
        init: Vec<f64>,
    ) -> Result<Self> {
        config.validate(model.n_obs())?;
        if init.len() != model.dim() {
            return Err(Error::Dimension {
                expected: model.dim(),
                got: init.len(),
            });
        }
        let ladder = config.effective_ladder();
        let mut control = RngStream::for_chain(seed, chain as u32, CONTROL_SLOT);
        let (targets, sizes) = match config.method {
            Method::None | Method::Pt | Method::Tt => (powered_targets(&model, &ladder), vec![]),
            Method::Spt => (subsampled_targets(&model, &ladder, &mut control)?, vec![]),
            Method::Stt => {
                let all = (0..model.n_obs()).collect();
                let level0 = TemperedTarget::subsampled(model.clone(), 1.0, all, 0);
                (vec![level0], ladder.subsample_sizes(model.n_obs())?)
            }
        };
        let level_rngs = (0..ladder.len())
            .map(|m| RngStream::for_chain(seed, chain as u32, m as u32))
            .collect();
        Ok(Self {
            chain,
            trace: ChainTrace::new(chain, model.dim()),
            kernel_stats: vec![TransitionStats::default(); ladder.len()],
            config,
            targets,
            sizes,
            init,
            position: Position::Fresh,
            level_rngs,
            control,
            trajectory: TransitionStats::default(),
            last_family: None,
            elapsed: 0.0,
        })
    }

    pub fn method(&self) -> Method {
        self.config.method
    }

    pub fn trace(&self) -> &ChainTrace {
        &self.trace
    }

    pub fn into_trace(self) -> ChainTrace {
        self.trace
    }

    /// Fixed level targets (only level 0 for `stt`).
    pub fn targets(&self) -> &[TemperedTarget] {
        &self.targets
    }

    /// The subsample family drawn by the latest `stt` iteration.
    pub fn last_family(&self) -> Option<&SubsampleFamily> {
        self.last_family.as_ref()
    }

    pub fn ensemble(&self) -> Option<&EnsembleState> {
        match &self.position {
            Position::Ensemble(e) => Some(e),
            _ => None,
        }
    }

    fn start(&mut self) -> Result<()> {
        if !matches!(self.position, Position::Fresh) {
            return Ok(());
        }
        let grad = self.config.kernel.needs_gradient();
        self.position = if self.config.method.is_ensemble() {
            Position::Ensemble(EnsembleState::new(&self.init, &self.targets, grad)?)
        } else {
            Position::Single(LevelState::new(self.init.clone(), &self.targets[0], grad)?)
        };
        Ok(())
    }

    /// Run `n` more iterations, recording one target sample each.
    pub fn advance(&mut self, n: usize) -> Result<()> {
        if n == 0 {
            return Ok(());
        }
        let wrap = |chain: usize, iteration: usize| {
            move |e: Error| Error::Chain {
                chain,
                iteration,
                source: Box::new(e),
            }
        };
        let it0 = self.trace.len();
        self.start().map_err(wrap(self.chain, it0))?;
        for i in 0..n {
            let t0 = Instant::now();
            let accepted = self.step().map_err(wrap(self.chain, it0 + i))?;
            self.elapsed += t0.elapsed().as_secs_f64();
            let theta = match &self.position {
                Position::Single(s) => &s.theta,
                Position::Ensemble(e) => &e.levels[0].theta,
                Position::Fresh => unreachable!("started above"),
            };
            self.trace.push(theta, self.elapsed, accepted);
        }
        self.refresh_stats();
        Ok(())
    }

    fn step(&mut self) -> Result<bool> {
        let kernel = &self.config.kernel;
        match (&mut self.position, self.config.method) {
            (Position::Single(s), Method::None) => {
                kernel.timed_transition(s, &self.targets[0], &mut self.level_rngs[0], &mut self.kernel_stats[0])
            }
            (Position::Ensemble(e), Method::Pt | Method::Spt) => {
                pt_iteration(e, kernel, &self.targets, &mut self.level_rngs, &mut self.control)
            }
            (Position::Single(s), Method::Tt) => {
                let t0 = Instant::now();
                let acc = tt_iteration(
                    s,
                    kernel,
                    &self.targets,
                    &mut self.level_rngs,
                    &mut self.control,
                    &mut self.kernel_stats,
                )?;
                self.trajectory.record(acc, t0.elapsed());
                Ok(acc)
            }
            (Position::Single(s), Method::Stt) => {
                let t0 = Instant::now();
                let (acc, family) = stt_iteration(
                    s,
                    kernel,
                    &self.targets[0],
                    self.config.ladder.betas(),
                    &self.sizes,
                    &mut self.level_rngs,
                    &mut self.control,
                    &mut self.kernel_stats,
                )?;
                self.trajectory.record(acc, t0.elapsed());
                self.last_family = Some(family);
                Ok(acc)
            }
            _ => unreachable!("position matches method"),
        }
    }

    fn refresh_stats(&mut self) {
        let (kernel, swaps) = match &self.position {
            Position::Ensemble(e) => (e.kernel_stats.clone(), e.swap_stats.clone()),
            _ => (self.kernel_stats.clone(), vec![]),
        };
        let kernel_time: f64 = kernel.iter().map(|k| k.wall_time).sum();
        self.trace.stats = ChainStats {
            kernel,
            swaps,
            trajectory: self.trajectory.clone(),
            total_time_s: self.elapsed,
            kernel_time_s: kernel_time,
            tempering_time_s: (self.elapsed - kernel_time).max(0.0),
        };
    }
}

/// Run one chain for `config.samples` iterations from `init`.
pub fn run_chain(
    model: Arc<dyn LogTarget>,
    config: &SamplerConfig,
    seed: u64,
    chain: usize,
    init: Vec<f64>,
) -> Result<ChainTrace> {
    let mut runner = ChainRunner::new(model, config.clone(), seed, chain, init)?;
    runner.advance(config.samples)?;
    Ok(runner.into_trace())
}
