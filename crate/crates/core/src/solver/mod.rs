//! Low-rank plus sparse decomposition by the inexact augmented Lagrange
//! multiplier method.
//!
//! Both solvers minimize `‖A‖_* + λ·P(E)` subject to `D = A + E`, starting
//! from `A = E = Y = 0` and iterating
//!
//! ```text
//! A ← svt(D − E + Y/μ, 1/μ)
//! E ← prox_{λP/μ}(D − A + Y/μ)
//! Y ← Y + μ(D − A − E)
//! μ ← min(ρμ, μ_cap)
//! ```
//!
//! until `‖D − A − E‖_F / ‖D‖_F ≤ tol`. `P` is the entrywise ℓ₁ norm for
//! [`solve_rpca`] and the group norm over a [`GroupPartition`] for
//! [`solve_sc_rpca`].

mod prox;
mod svd;

use ndarray::{Array2, Zip};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use prox::{
    frobenius_norm, generalized_l21_norm, group_shrink, l1_norm, l1_shrink, nuclear_norm, svt,
    weighted_group_norm, WeightMode,
};
pub use svd::{svd_economy, SvdResult};

use crate::partition::{GroupPartition, PartitionError};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("input contains non-finite entries")]
    NonFinite,
    #[error("threshold must be non-negative (got {0})")]
    Threshold(f64),
    #[error("invalid solver config: {0}")]
    Config(String),
    #[error("matrix needs at least 2 columns, got {0}")]
    TooFewColumns(usize),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error("did not converge in {iterations} iterations (relative residual {residual:.3e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        decomposition: Box<Decomposition>,
    },
}

pub const DEFAULT_MU0: f64 = 1e-6;
pub const DEFAULT_RHO: f64 = 1.1;
pub const DEFAULT_TOL: f64 = 1e-7;
pub const DEFAULT_MAX_ITER: usize = 1000;
pub const DEFAULT_MU_CAP: f64 = 1e10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Sparsity weight; `None` means `1/√max(m, n)`.
    pub lambda: Option<f64>,
    pub mu0: f64,
    pub rho: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub mu_cap: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda: None,
            mu0: DEFAULT_MU0,
            rho: DEFAULT_RHO,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            mu_cap: DEFAULT_MU_CAP,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |msg: String| Err(SolverError::Config(msg));
        if let Some(l) = self.lambda {
            if !(l > 0.0 && l.is_finite()) {
                return bad(format!("lambda must be positive (got {l})"));
            }
        }
        if !(self.mu0 > 0.0 && self.mu0.is_finite()) {
            return bad(format!("mu0 must be positive (got {})", self.mu0));
        }
        if !(self.rho > 1.0 && self.rho.is_finite()) {
            return bad(format!("rho must be greater than 1 (got {})", self.rho));
        }
        if !(self.tol > 0.0) {
            return bad(format!("tol must be positive (got {})", self.tol));
        }
        if self.max_iter == 0 {
            return bad("max_iter must be at least 1".into());
        }
        if !(self.mu_cap > 0.0) {
            return bad(format!("mu_cap must be positive (got {})", self.mu_cap));
        }
        Ok(())
    }

    pub fn lambda_for(&self, rows: usize, cols: usize) -> f64 {
        self.lambda
            .unwrap_or_else(|| 1.0 / (rows.max(cols) as f64).sqrt())
    }
}

#[derive(Clone, Debug)]
pub struct Decomposition {
    /// Low-rank term.
    pub a: Array2<f64>,
    /// Sparse term.
    pub e: Array2<f64>,
    /// Final Lagrange multipliers.
    pub y: Array2<f64>,
    pub iterations: usize,
    /// `‖D − A − E‖_F / ‖D‖_F` after the last iteration.
    pub final_residual: f64,
    /// `‖A‖_* + λ·P(E)`.
    pub objective: f64,
    pub rank: usize,
    pub lambda: f64,
    pub converged: bool,
}

/// Snapshot handed to an observer after every iteration.
#[derive(Debug)]
pub struct IterationState<'a> {
    pub iteration: usize,
    pub a: &'a Array2<f64>,
    pub e: &'a Array2<f64>,
    pub mu: f64,
    pub residual: f64,
    pub objective: f64,
    pub rank: usize,
}

/// One row of an iteration trace.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub residual: f64,
    pub objective: f64,
    pub rank: usize,
}

impl From<&IterationState<'_>> for TraceRow {
    fn from(s: &IterationState<'_>) -> Self {
        Self {
            iteration: s.iteration,
            residual: s.residual,
            objective: s.objective,
            rank: s.rank,
        }
    }
}

/// Sparse-term penalty and its proximal operator.
#[derive(Clone, Copy, Debug)]
pub enum Penalty<'a> {
    L1,
    Group {
        partition: &'a GroupPartition,
        mode: WeightMode,
    },
}

impl Penalty<'_> {
    fn prox(&self, m: &Array2<f64>, lambda: f64, mu: f64) -> Result<Array2<f64>, SolverError> {
        match *self {
            Penalty::L1 => Ok(l1_shrink(m, lambda / mu)),
            Penalty::Group { partition, mode } => group_shrink(m, partition, lambda, mu, mode),
        }
    }

    fn value(&self, e: &Array2<f64>) -> Result<f64, SolverError> {
        match *self {
            Penalty::L1 => Ok(l1_norm(e)),
            Penalty::Group { partition, mode } => weighted_group_norm(e, partition, mode),
        }
    }
}

/// Classic RPCA: `min ‖A‖_* + λ‖E‖₁ s.t. D = A + E`.
pub fn solve_rpca(d: &Array2<f64>, config: &SolverConfig) -> Result<Decomposition, SolverError> {
    solve_with(d, Penalty::L1, config, |_| {})
}

/// Segmentation-constrained RPCA: the sparse term is penalized by the
/// group norm induced by `partition`.
pub fn solve_sc_rpca(
    d: &Array2<f64>,
    partition: &GroupPartition,
    config: &SolverConfig,
    mode: WeightMode,
) -> Result<Decomposition, SolverError> {
    solve_with(d, Penalty::Group { partition, mode }, config, |_| {})
}

/// The shared inexact-ALM loop; `observe` sees every iterate.
pub fn solve_with(
    d: &Array2<f64>,
    penalty: Penalty<'_>,
    config: &SolverConfig,
    mut observe: impl FnMut(&IterationState<'_>),
) -> Result<Decomposition, SolverError> {
    config.validate()?;
    if d.iter().any(|v| !v.is_finite()) {
        return Err(SolverError::NonFinite);
    }
    if d.ncols() < 2 {
        return Err(SolverError::TooFewColumns(d.ncols()));
    }
    if let Penalty::Group { partition, .. } = penalty {
        partition.check_shape(d.nrows(), d.ncols())?;
    }
    let lambda = config.lambda_for(d.nrows(), d.ncols());
    let norm_d = frobenius_norm(d);
    let relative = |r: f64| if norm_d > 0.0 { r / norm_d } else { r };

    let mut a = Array2::zeros(d.dim());
    let mut e = Array2::<f64>::zeros(d.dim());
    let mut y = Array2::<f64>::zeros(d.dim());
    let mut mu = config.mu0;
    let mut work = Array2::<f64>::zeros(d.dim());

    let mut iteration = 0;
    let mut residual = f64::INFINITY;
    let mut objective = 0.0;
    let mut rank = 0;
    while iteration < config.max_iter {
        iteration += 1;
        let inv_mu = 1.0 / mu;

        Zip::from(&mut work)
            .and(d)
            .and(&e)
            .and(&y)
            .for_each(|w, &d, &e, &y| *w = d - e + y * inv_mu);
        let (a_next, spectrum) = prox::svt_with_spectrum(&work, inv_mu)?;
        a = a_next;

        Zip::from(&mut work)
            .and(d)
            .and(&a)
            .and(&y)
            .for_each(|w, &d, &a, &y| *w = d - a + y * inv_mu);
        e = penalty.prox(&work, lambda, mu)?;

        Zip::from(&mut work)
            .and(d)
            .and(&a)
            .and(&e)
            .for_each(|w, &d, &a, &e| *w = d - a - e);
        y.scaled_add(mu, &work);

        residual = relative(frobenius_norm(&work));
        rank = spectrum.len();
        objective = spectrum.iter().sum::<f64>() + lambda * penalty.value(&e)?;
        observe(&IterationState {
            iteration,
            a: &a,
            e: &e,
            mu,
            residual,
            objective,
            rank,
        });
        mu = (mu * config.rho).min(config.mu_cap);
        if residual <= config.tol {
            break;
        }
    }
    let converged = residual <= config.tol;
    let decomposition = Decomposition {
        a,
        e,
        y,
        iterations: iteration,
        final_residual: residual,
        objective,
        rank,
        lambda,
        converged,
    };
    if converged {
        Ok(decomposition)
    } else {
        Err(SolverError::NotConverged {
            iterations: iteration,
            residual,
            decomposition: Box::new(decomposition),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{low_rank, random_matrix};

    #[test]
    fn zero_input_finishes_in_one_iteration() {
        let d = Array2::zeros((6, 4));
        let r = solve_rpca(&d, &SolverConfig::default()).unwrap();
        assert_eq!(r.iterations, 1);
        assert!(r.a.iter().chain(r.e.iter()).all(|&x| x == 0.0));
        let p = GroupPartition::whole(6, 4);
        let r = solve_sc_rpca(&d, &p, &SolverConfig::default(), WeightMode::Sqrt).unwrap();
        assert_eq!(r.iterations, 1);
        assert!(r.e.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn clean_rank_one_goes_to_low_rank_term() {
        let d = low_rank(40, 12, 1, 3);
        let r = solve_rpca(&d, &SolverConfig::default()).unwrap();
        assert!(frobenius_norm(&r.e) / frobenius_norm(&d) <= 1e-4);
        assert!(frobenius_norm(&(&r.a - &d)) / frobenius_norm(&d) <= 1e-4);
        assert!(r.final_residual <= 1e-7);
    }

    #[test]
    fn constraint_holds_at_termination() {
        let d = random_matrix(30, 10, 8);
        let r = solve_rpca(&d, &SolverConfig::default()).unwrap();
        let gap = frobenius_norm(&(&d - &r.a - &r.e));
        assert!(gap <= 1e-7 * frobenius_norm(&d));
        assert!((gap / frobenius_norm(&d) - r.final_residual).abs() < 1e-12);
    }

    #[test]
    fn reports_non_convergence() {
        let d = random_matrix(30, 10, 8);
        let cfg = SolverConfig {
            max_iter: 5,
            ..SolverConfig::default()
        };
        match solve_rpca(&d, &cfg) {
            Err(SolverError::NotConverged {
                iterations,
                residual,
                decomposition,
            }) => {
                assert_eq!(iterations, 5);
                assert!(residual > cfg.tol);
                assert!(!decomposition.converged);
            }
            other => panic!("expected NotConverged, got {other:?}"),
        }
    }

    #[test]
    fn config_validation() {
        let d = random_matrix(4, 3, 1);
        for cfg in [
            SolverConfig {
                rho: 1.0,
                ..Default::default()
            },
            SolverConfig {
                mu0: 0.0,
                ..Default::default()
            },
            SolverConfig {
                lambda: Some(-1.0),
                ..Default::default()
            },
            SolverConfig {
                max_iter: 0,
                ..Default::default()
            },
            SolverConfig {
                tol: 0.0,
                ..Default::default()
            },
        ] {
            assert!(matches!(solve_rpca(&d, &cfg), Err(SolverError::Config(_))));
        }
        let p = GroupPartition::whole(3, 4);
        assert!(matches!(
            solve_sc_rpca(&d, &p, &SolverConfig::default(), WeightMode::Sqrt),
            Err(SolverError::Partition(_))
        ));
        assert!(matches!(
            solve_rpca(&random_matrix(4, 1, 1), &SolverConfig::default()),
            Err(SolverError::TooFewColumns(1))
        ));
    }

    #[test]
    fn scaling_rescales_prox_steps() {
        // svt(cM, cτ) = c·svt(M, τ) and the group prox scales the same way,
        // so scaling D by c with λ fixed scales every iterate by c when μ
        // is scaled by 1/c.
        let d = random_matrix(12, 6, 4);
        let c = 3.0;
        let p = crate::fixtures::random_partition(12, 6, 9, 2);
        let cfg = SolverConfig {
            max_iter: 25,
            ..Default::default()
        };
        let scaled_cfg = SolverConfig {
            mu0: cfg.mu0 / c,
            ..cfg
        };
        let mut base = Vec::new();
        let mut scaled = Vec::new();
        let pen = Penalty::Group {
            partition: &p,
            mode: WeightMode::Sqrt,
        };
        let _ = solve_with(&d, pen, &cfg, |s| base.push((s.a.clone(), s.e.clone())));
        let _ = solve_with(&(&d * c), pen, &scaled_cfg, |s| {
            scaled.push((s.a.clone(), s.e.clone()))
        });
        for ((a0, e0), (a1, e1)) in base.iter().zip(&scaled) {
            let scale = 1.0 + frobenius_norm(a0);
            assert!(frobenius_norm(&(a0 * c - a1)) <= 1e-8 * c * scale);
            assert!(frobenius_norm(&(e0 * c - e1)) <= 1e-8 * c * scale);
        }
    }
}
