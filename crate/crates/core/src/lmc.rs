//! Low-rank matrix completion by nuclear-norm minimization.
//!
//! Solves `min ||L||_*  s.t.  L = X on observed entries` with the inexact
//! augmented Lagrangian method: a singular-value-thresholding step on the
//! multiplier-corrected data, a free update of the unobserved entries, and a
//! multiplier ascent on the observed-entry residual.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{shrink_with_spectrum, Matrix};
use crate::trajectory::{IndicatorMask, TrajectorySet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopCriterion {
    /// `||S||_F < tolerance`.
    Absolute,
    /// `||S||_F / ||P_Omega(X)||_F < tolerance`.
    Relative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LmcConfig {
    pub max_iters: usize,
    pub tolerance: f64,
    /// Initial penalty; `None` picks `1.25 / ||P_Omega(X)||_F`.
    pub mu_init: Option<f64>,
    pub mu_growth: f64,
    pub stop: StopCriterion,
}

impl Default for LmcConfig {
    fn default() -> Self {
        LmcConfig { max_iters: 1000, tolerance: 1e-6, mu_init: None, mu_growth: 1.05, stop: StopCriterion::Absolute }
    }
}

impl LmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(Error::invalid("max_iters must be >= 1"));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::invalid("tolerance must be > 0"));
        }
        if !(self.mu_growth >= 1.0) || !self.mu_growth.is_finite() {
            return Err(Error::invalid("mu_growth must be >= 1"));
        }
        if let Some(mu) = self.mu_init {
            if !(mu > 0.0) || !mu.is_finite() {
                return Err(Error::invalid("mu_init must be > 0"));
            }
        }
        Ok(())
    }
}

/// Iterate of the solver.
#[derive(Debug, Clone, PartialEq)]
pub struct LmcState {
    pub l: Matrix,
    pub nu: Matrix,
    pub mu: f64,
    pub iteration: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub residual: f64,
    pub nuclear_norm: f64,
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmcOutcome {
    /// Completion with observed entries copied from the input.
    pub completed: Matrix,
    pub converged: bool,
    pub iterations: usize,
    pub final_residual: f64,
    pub mu_init: f64,
    pub trace: Vec<TraceRow>,
    /// Iterations at which the observed-entry residual grew.
    pub residual_increases: Vec<usize>,
}

impl LmcOutcome {
    /// `iter,residual,nuclear_norm,mu`.
    pub fn trace_csv(&self, comment: Option<&str>) -> String {
        let mut s = String::new();
        if let Some(c) = comment {
            s.push_str(&format!("# {c}\n"));
        }
        s.push_str("iter,residual,nuclear_norm,mu\n");
        for r in &self.trace {
            s.push_str(&format!("{},{:.16e},{:.16e},{:.16e}\n", r.iter, r.residual, r.nuclear_norm, r.mu));
        }
        s
    }
}

/// `|x - l|` on observed entries, zero elsewhere.
pub fn constraint_residual(x: &Matrix, l: &Matrix, omega: &Matrix) -> Result<Matrix> {
    x.check_same_shape(l)?;
    x.check_same_shape(omega)?;
    let data = x
        .as_slice()
        .iter()
        .zip(l.as_slice())
        .zip(omega.as_slice())
        .map(|((a, b), w)| if *w != 0.0 { (a - b).abs() } else { 0.0 })
        .collect();
    Matrix::new(x.rows(), x.cols(), data)
}

fn projected_norm(x: &Matrix, omega: &Matrix) -> f64 {
    x.as_slice()
        .iter()
        .zip(omega.as_slice())
        .filter(|(_, w)| **w != 0.0)
        .map(|(v, _)| v * v)
        .sum::<f64>()
        .sqrt()
}

pub fn complete(x_frag: &TrajectorySet, omega: &IndicatorMask, cfg: &LmcConfig) -> Result<LmcOutcome> {
    if omega.agent_count() != x_frag.agent_count() || omega.step_count() != x_frag.step_count() {
        return Err(Error::dim("mask shape differs from trajectories"));
    }
    complete_matrix(x_frag.coords(), &omega.to_matrix(), cfg)
}

/// Completes any matrix given a 0/1 observation mask of the same shape.
pub fn complete_matrix(x: &Matrix, w: &Matrix, cfg: &LmcConfig) -> Result<LmcOutcome> {
    cfg.validate()?;
    x.check_same_shape(w)?;
    if let Some(bad) = w.as_slice().iter().find(|v| **v != 0.0 && **v != 1.0) {
        return Err(Error::invalid(format!("mask entries must be 0 or 1, found {bad}")));
    }
    let observed_count = w.as_slice().iter().filter(|v| **v != 0.0).count();
    if observed_count == 0 {
        return Err(Error::Unconstrained);
    }
    let data_norm = projected_norm(x, w);
    // Nothing to infer, or a zero observation set whose unique minimizer is
    // the zero matrix.
    if observed_count == w.as_slice().len() || data_norm == 0.0 {
        let completed = if data_norm == 0.0 { Matrix::zeros(x.rows(), x.cols()) } else { x.clone() };
        return Ok(LmcOutcome {
            completed,
            converged: true,
            iterations: 0,
            final_residual: 0.0,
            mu_init: cfg.mu_init.unwrap_or(1.25 / data_norm),
            trace: Vec::new(),
            residual_increases: Vec::new(),
        });
    }
    let mu_init = cfg.mu_init.unwrap_or(1.25 / data_norm);
    let scale = match cfg.stop {
        StopCriterion::Absolute => 1.0,
        StopCriterion::Relative => data_norm,
    };
    let (rows, cols) = x.shape();
    let observed: Vec<bool> = w.as_slice().iter().map(|&v| v != 0.0).collect();

    let mut state = LmcState { l: Matrix::zeros(rows, cols), nu: Matrix::zeros(rows, cols), mu: mu_init, iteration: 0 };
    // Free (unobserved) entries of the primal split; zero on observed ones.
    let mut free = Matrix::zeros(rows, cols);
    let mut target = Matrix::zeros(rows, cols);
    let mut residual = data_norm;
    let mut trace = Vec::new();
    let mut increases = Vec::new();

    while residual / scale >= cfg.tolerance && state.iteration < cfg.max_iters {
        let inv_mu = 1.0 / state.mu;
        for (k, t) in target.as_mut_slice().iter_mut().enumerate() {
            let data = if observed[k] { x.as_slice()[k] } else { 0.0 };
            *t = data - free.as_slice()[k] + inv_mu * state.nu.as_slice()[k];
        }
        let (l, shrunk) = shrink_with_spectrum(&target, inv_mu)?;
        state.l = l;

        let mut sq = 0.0;
        let (ls, fs, ns) = (state.l.as_slice(), free.as_mut_slice(), state.nu.as_mut_slice());
        for k in 0..ls.len() {
            if observed[k] {
                let gap = x.as_slice()[k] - ls[k];
                ns[k] += state.mu * gap;
                sq += gap * gap;
            } else {
                // The multiplier stays zero off the observed set.
                fs[k] = -ls[k];
            }
        }
        let next_residual = sq.sqrt();
        state.iteration += 1;
        if next_residual > residual {
            increases.push(state.iteration);
        }
        residual = next_residual;
        trace.push(TraceRow {
            iter: state.iteration,
            residual,
            nuclear_norm: shrunk.iter().sum(),
            mu: state.mu,
        });
        state.mu *= cfg.mu_growth;
    }

    let mut out = state.l;
    for (k, v) in out.as_mut_slice().iter_mut().enumerate() {
        if observed[k] {
            *v = x.as_slice()[k];
        }
    }
    Ok(LmcOutcome {
        completed: out,
        converged: residual / scale < cfg.tolerance,
        iterations: state.iteration,
        final_residual: residual,
        mu_init,
        trace,
        residual_increases: increases,
    })
}
