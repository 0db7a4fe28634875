use crate::data::IndexSet;
use crate::error::Result;
use crate::models::LogTarget;
use std::sync::Arc;

/// How a level is heated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Heating {
    /// `beta * log p(X | theta) + log p(theta)` over the full data.
    Power,
    /// `log p(X_m | theta) + log p(theta)` over a subsample; beta only sets `|X_m|`.
    Subsample,
}

/// Cached evaluation of one level density at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub log_lik: f64,
    pub log_prior: f64,
    pub log_density: f64,
    pub grad_lik: Option<Vec<f64>>,
    pub grad_prior: Option<Vec<f64>>,
    pub grad: Option<Vec<f64>>,
}

/// A model restricted to a row subset and heated by `beta`.
#[derive(Clone)]
pub struct TemperedTarget {
    model: Arc<dyn LogTarget>,
    beta: f64,
    rows: IndexSet,
    heating: Heating,
    level: usize,
}

impl std::fmt::Debug for TemperedTarget {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TemperedTarget")
            .field("model", &self.model.name())
            .field("beta", &self.beta)
            .field("rows", &self.rows.len())
            .field("heating", &self.heating)
            .field("level", &self.level)
            .finish()
    }
}

impl TemperedTarget {
    /// Power-heated level on `rows` (normally every row).
    pub fn powered(model: Arc<dyn LogTarget>, beta: f64, rows: IndexSet, level: usize) -> Self {
        Self {
            model,
            beta,
            rows,
            heating: Heating::Power,
            level,
        }
    }

    pub fn subsampled(model: Arc<dyn LogTarget>, beta: f64, rows: IndexSet, level: usize) -> Self {
        Self {
            model,
            beta,
            rows,
            heating: Heating::Subsample,
            level,
        }
    }

    pub fn model(&self) -> &Arc<dyn LogTarget> {
        &self.model
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn rows(&self) -> &IndexSet {
        &self.rows
    }

    pub fn heating(&self) -> Heating {
        self.heating
    }

    pub fn level(&self) -> usize {
        self.level
    }

    /// Exponent applied to the likelihood.
    pub fn weight(&self) -> f64 {
        match self.heating {
            Heating::Power => self.beta,
            Heating::Subsample => 1.0,
        }
    }

    pub fn evaluate(&self, theta: &[f64], with_grad: bool) -> Result<Evaluation> {
        let log_prior = self.model.log_prior(theta)?;
        let (log_lik, grad_lik, grad_prior) = if with_grad {
            let (v, g) = self.model.log_likelihood_and_grad(theta, &self.rows)?;
            (v, Some(g), Some(self.model.grad_log_prior(theta)?))
        } else {
            (self.model.log_likelihood(theta, &self.rows)?, None, None)
        };
        Ok(self.assemble(log_lik, log_prior, grad_lik, grad_prior))
    }

    pub fn log_density(&self, theta: &[f64]) -> Result<f64> {
        Ok(self.evaluate(theta, false)?.log_density)
    }

    fn assemble(
        &self,
        log_lik: f64,
        log_prior: f64,
        grad_lik: Option<Vec<f64>>,
        grad_prior: Option<Vec<f64>>,
    ) -> Evaluation {
        let w = self.weight();
        let grad = match (&grad_lik, &grad_prior) {
            (Some(gl), Some(gp)) => Some(gl.iter().zip(gp).map(|(l, p)| w * l + p).collect()),
            _ => None,
        };
        Evaluation {
            log_lik,
            log_prior,
            log_density: w * log_lik + log_prior,
            grad_lik,
            grad_prior,
            grad,
        }
    }

    /// Whether both targets sum the likelihood over the same rows.
    pub fn shares_rows(&self, other: &TemperedTarget) -> bool {
        Arc::ptr_eq(&self.rows, &other.rows) || self.rows[..] == other.rows[..]
    }

    /// Evaluate at `theta`, reusing `eval` (computed by `from`) when the two
    /// targets share rows. Reuse keeps any cached gradients; otherwise
    /// gradients are computed only if `with_grad`.
    pub fn transfer(
        &self,
        theta: &[f64],
        eval: &Evaluation,
        from: &TemperedTarget,
        with_grad: bool,
    ) -> Result<Evaluation> {
        if self.shares_rows(from) && (eval.grad_lik.is_some() || !with_grad) {
            Ok(self.assemble(
                eval.log_lik,
                eval.log_prior,
                eval.grad_lik.clone(),
                eval.grad_prior.clone(),
            ))
        } else {
            self.evaluate(theta, with_grad)
        }
    }
}
