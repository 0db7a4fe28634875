use crate::error::{Error, Result};
use crate::kernels::TransitionStats;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

/// Per-chain acceptance and timing counters.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ChainStats {
    /// Inner-kernel counters per level.
    pub kernel: Vec<TransitionStats>,
    /// Swap counters per adjacent pair `(m - 1, m)`.
    pub swaps: Vec<TransitionStats>,
    /// Whole-trajectory counters for tempered transitions.
    pub trajectory: TransitionStats,
    pub total_time_s: f64,
    pub kernel_time_s: f64,
    /// Time outside the inner kernels: swaps, trajectory bookkeeping, subsampling.
    pub tempering_time_s: f64,
}

impl ChainStats {
    pub fn kernel_rates(&self) -> Vec<f64> {
        self.kernel.iter().map(TransitionStats::rate).collect()
    }

    pub fn swap_rates(&self) -> Vec<f64> {
        self.swaps.iter().map(TransitionStats::rate).collect()
    }
}

/// Recorded target-level samples of one chain.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ChainTrace {
    pub chain: usize,
    pub dim: usize,
    /// Row-major `S x K`.
    pub samples: Vec<f64>,
    /// Seconds since the chain started, at the end of each iteration.
    pub wall_time: Vec<f64>,
    pub accepted: Vec<bool>,
    pub stats: ChainStats,
}

impl ChainTrace {
    pub fn new(chain: usize, dim: usize) -> Self {
        Self {
            chain,
            dim,
            ..Self::default()
        }
    }

    pub fn len(&self) -> usize {
        self.wall_time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wall_time.is_empty()
    }

    pub fn sample(&self, s: usize) -> &[f64] {
        &self.samples[s * self.dim..(s + 1) * self.dim]
    }

    pub fn push(&mut self, theta: &[f64], wall_time: f64, accepted: bool) {
        debug_assert_eq!(theta.len(), self.dim);
        self.samples.extend_from_slice(theta);
        self.wall_time.push(wall_time);
        self.accepted.push(accepted);
    }

    /// Total wall time of the chain.
    pub fn duration(&self) -> f64 {
        self.wall_time.last().copied().unwrap_or(0.0)
    }

    pub fn per_sample_time(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.duration() / self.len() as f64
        }
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.accepted.iter().filter(|a| **a).count() as f64 / self.len() as f64
        }
    }

    /// The first `n` samples.
    pub fn prefix(&self, n: usize) -> ChainTrace {
        let n = n.min(self.len());
        ChainTrace {
            chain: self.chain,
            dim: self.dim,
            samples: self.samples[..n * self.dim].to_vec(),
            wall_time: self.wall_time[..n].to_vec(),
            accepted: self.accepted[..n].to_vec(),
            stats: self.stats.clone(),
        }
    }

    /// CSV with columns `iter,chain,wall_time_s,accepted,theta_0..theta_{K-1}`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = ["iter", "chain", "wall_time_s", "accepted"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        header.extend((0..self.dim).map(|k| format!("theta_{k}")));
        w.write_record(&header)?;
        for s in 0..self.len() {
            let mut rec = vec![
                s.to_string(),
                self.chain.to_string(),
                self.wall_time[s].to_string(),
                (self.accepted[s] as u8).to_string(),
            ];
            rec.extend(self.sample(s).iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let header = r.headers()?.clone();
        let fixed = ["iter", "chain", "wall_time_s", "accepted"];
        if header.len() < fixed.len() || header.iter().zip(fixed).any(|(h, f)| h != f) {
            return Err(Error::config(
                "trace CSV must start with iter,chain,wall_time_s,accepted",
            ));
        }
        let dim = header.len() - fixed.len();
        let mut trace = ChainTrace::new(0, dim);
        for rec in r.records() {
            let rec = rec?;
            let num = |k: usize| -> Result<f64> {
                rec.get(k)
                    .and_then(|s| s.trim().parse::<f64>().ok())
                    .ok_or_else(|| Error::config(format!("bad trace field in column {k}")))
            };
            trace.chain = num(1)? as usize;
            let theta = (0..dim).map(|k| num(4 + k)).collect::<Result<Vec<_>>>()?;
            trace.push(&theta, num(2)?, num(3)? != 0.0);
        }
        Ok(trace)
    }
}
