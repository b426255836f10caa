//! The end-to-end decomposition: per-mode column selection on the original
//! tensor's unfoldings, factor and core construction, the reconstruction
//! objective, the a-priori error bound, and the dense HOSVD baseline.
//!
//! Each mode is solved independently on the unmodified tensor (one sweep, no
//! re-projection between modes), so mode solves are order-independent and can
//! run in parallel with bitwise-identical results.

use std::time::Instant;

use rayon::prelude::*;

use crate::pca::{projection_error_sq, truncated_left_svd};
use crate::select::{
    default_eta, select_columns, Eta, SelectorConfig, SelectorStatus, Support,
    DEFAULT_MAX_CUTS, DEFAULT_NODE_BUDGET,
};
use crate::tensor::{frobenius_norm_sq, mode_product, unfold, DenseTensor, Matrix};
use crate::{Error, Result};

/// Per-mode tolerance rule for the decomposition.
#[derive(Clone, Debug)]
pub enum EtaSpec {
    /// Derive every mode's tolerance from its classical PCA residual.
    Auto,
    /// One fixed tolerance per mode.
    PerMode(Vec<f64>),
}

/// Configuration of one decomposition run.
#[derive(Clone, Debug)]
pub struct ShopcaConfig {
    /// Target ranks `R_1 .. R_N`.
    pub ranks: Vec<usize>,
    /// Per-mode sparsity caps `k_1 .. k_N` on the selected column counts.
    pub sparsity: Vec<usize>,
    pub eta: EtaSpec,
    pub max_cuts: usize,
    pub node_budget: u64,
    /// Solve the mode subproblems concurrently; results are identical to the
    /// sequential order.
    pub parallel_modes: bool,
}

impl ShopcaConfig {
    pub fn new(ranks: Vec<usize>, sparsity: Vec<usize>) -> Self {
        Self {
            ranks,
            sparsity,
            eta: EtaSpec::Auto,
            max_cuts: DEFAULT_MAX_CUTS,
            node_budget: DEFAULT_NODE_BUDGET,
            parallel_modes: false,
        }
    }

    pub fn with_eta(mut self, eta: EtaSpec) -> Self {
        self.eta = eta;
        self
    }

    pub fn validate_against(&self, x: &DenseTensor) -> Result<()> {
        let order = x.shape().order();
        if self.ranks.len() != order {
            return Err(Error::DimMismatch {
                context: "rank count",
                expected: order,
                got: self.ranks.len(),
            });
        }
        if self.sparsity.len() != order {
            return Err(Error::DimMismatch {
                context: "sparsity count",
                expected: order,
                got: self.sparsity.len(),
            });
        }
        if let EtaSpec::PerMode(values) = &self.eta {
            if values.len() != order {
                return Err(Error::DimMismatch {
                    context: "eta count",
                    expected: order,
                    got: values.len(),
                });
            }
            if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "eta must be finite and nonnegative, got {v}"
                )));
            }
        }
        for n in 1..=order {
            let jn = x.shape().dims()[n - 1];
            let co = x.shape().co_mode_len(n)?;
            let r = self.ranks[n - 1];
            let k = self.sparsity[n - 1];
            if r == 0 || r > jn.min(k) {
                return Err(Error::in_mode(
                    n,
                    Error::InvalidConfig(format!(
                        "rank {r} must satisfy 1 <= R <= min(J = {jn}, k = {k})"
                    )),
                ));
            }
            if k == 0 || k > co {
                return Err(Error::in_mode(
                    n,
                    Error::InvalidConfig(format!(
                        "sparsity {k} must satisfy 1 <= k <= {co} unfolding columns"
                    )),
                ));
            }
        }
        Ok(())
    }

    fn selector_for_mode(&self, n: usize) -> SelectorConfig {
        let eta = match &self.eta {
            EtaSpec::Auto => Eta::Auto,
            EtaSpec::PerMode(values) => Eta::Fixed(values[n - 1]),
        };
        SelectorConfig {
            k: self.sparsity[n - 1],
            r: self.ranks[n - 1],
            eta,
            max_cuts: self.max_cuts,
            node_budget: self.node_budget,
        }
    }
}

/// Factors, core, per-mode supports and diagnostics of one decomposition.
#[derive(Clone, Debug)]
pub struct DecompositionResult {
    /// Orthonormal `J_n x R_n` factor per mode.
    pub factors: Vec<Matrix>,
    /// `R_1 x ... x R_N` core tensor.
    pub core: DenseTensor,
    /// Selected column set per mode (empty for the HOSVD baseline and for
    /// degenerate modes of extent 1).
    pub supports: Vec<Support>,
    /// Reconstruction error of each mode's selected columns.
    pub eta_achieved: Vec<f64>,
    /// The tolerance each mode ran with.
    pub eta_targets: Vec<f64>,
    pub statuses: Vec<SelectorStatus>,
    /// A-priori bound: summed leading residual energies across modes.
    pub bound: f64,
    /// Wall-clock seconds spent solving each mode.
    pub mode_seconds: Vec<f64>,
}

impl DecompositionResult {
    pub fn all_converged(&self) -> bool {
        self.statuses
            .iter()
            .all(|s| *s == SelectorStatus::Converged)
    }
}

struct ModeSolution {
    factor: Matrix,
    support: Support,
    eta: f64,
    eta_target: f64,
    status: SelectorStatus,
    seconds: f64,
}

fn solve_mode(x: &DenseTensor, config: &ShopcaConfig, n: usize) -> Result<ModeSolution> {
    let started = Instant::now();
    let jn = x.shape().dims()[n - 1];
    if jn == 1 {
        // Degenerate mode: the factor is the 1x1 identity, selection skipped.
        return Ok(ModeSolution {
            factor: Matrix::identity(1),
            support: Support::empty(x.shape().co_mode_len(n)?),
            eta: 0.0,
            eta_target: 0.0,
            status: SelectorStatus::Converged,
            seconds: started.elapsed().as_secs_f64(),
        });
    }
    let unfolding = unfold(x, n)?;
    let selector = config.selector_for_mode(n);
    let result = select_columns(&unfolding, &selector).map_err(|e| Error::in_mode(n, e))?;
    Ok(ModeSolution {
        factor: result.basis.u,
        support: result.support,
        eta: result.eta_achieved,
        eta_target: result.eta_target,
        status: result.status,
        seconds: started.elapsed().as_secs_f64(),
    })
}

/// Runs the sparse decomposition: per-mode column selection on the original
/// unfoldings, then the core `G = X x_1 U_1^T ... x_N U_N^T`.
pub fn sparse_geo_hopca(x: &DenseTensor, config: &ShopcaConfig) -> Result<DecompositionResult> {
    config.validate_against(x)?;
    let order = x.shape().order();
    let modes: Vec<usize> = (1..=order).collect();
    let solutions: Vec<ModeSolution> = if config.parallel_modes {
        modes
            .par_iter()
            .map(|&n| solve_mode(x, config, n))
            .collect::<Result<Vec<_>>>()?
    } else {
        modes
            .iter()
            .map(|&n| solve_mode(x, config, n))
            .collect::<Result<Vec<_>>>()?
    };

    let mut core = x.clone();
    for (i, solution) in solutions.iter().enumerate() {
        core = mode_product(&core, i + 1, &solution.factor.transpose())?;
    }
    let bound = tensor_error_bound(x, config)?;

    let mut factors = Vec::with_capacity(order);
    let mut supports = Vec::with_capacity(order);
    let mut eta_achieved = Vec::with_capacity(order);
    let mut eta_targets = Vec::with_capacity(order);
    let mut statuses = Vec::with_capacity(order);
    let mut mode_seconds = Vec::with_capacity(order);
    for solution in solutions {
        factors.push(solution.factor);
        supports.push(solution.support);
        eta_achieved.push(solution.eta);
        eta_targets.push(solution.eta_target);
        statuses.push(solution.status);
        mode_seconds.push(solution.seconds);
    }
    Ok(DecompositionResult {
        factors,
        core,
        supports,
        eta_achieved,
        eta_targets,
        statuses,
        bound,
        mode_seconds,
    })
}

/// Reconstruction objective `||X - X x_1 U_1 U_1^T ... x_N U_N U_N^T||_F^2`,
/// evaluated by sequential mode products.
pub fn objective_f(x: &DenseTensor, factors: &[Matrix]) -> Result<f64> {
    if factors.len() != x.shape().order() {
        return Err(Error::DimMismatch {
            context: "factor count",
            expected: x.shape().order(),
            got: factors.len(),
        });
    }
    let mut projected = x.clone();
    for (i, factor) in factors.iter().enumerate() {
        let n = i + 1;
        let compressed =
            mode_product(&projected, n, &factor.transpose()).map_err(|e| Error::in_mode(n, e))?;
        projected = mode_product(&compressed, n, factor).map_err(|e| Error::in_mode(n, e))?;
    }
    crate::tensor::frobenius_dist_sq(x, &projected)
}

/// Per-mode terms of the a-priori bound: the `k_n` largest residual column
/// energies of each unfolding's rank-`R_n` classical PCA residual.
pub fn tensor_error_bound_terms(x: &DenseTensor, config: &ShopcaConfig) -> Result<Vec<f64>> {
    config.validate_against(x)?;
    let mut terms = Vec::with_capacity(x.shape().order());
    for n in 1..=x.shape().order() {
        if x.shape().dims()[n - 1] == 1 {
            // rank-1 PCA of a single-row unfolding has zero residual
            terms.push(0.0);
            continue;
        }
        let unfolding = unfold(x, n)?;
        let k = config.sparsity[n - 1].min(unfolding.cols());
        let (eta, _) =
            default_eta(&unfolding, k, config.ranks[n - 1]).map_err(|e| Error::in_mode(n, e))?;
        terms.push(eta);
    }
    Ok(terms)
}

/// A-priori bound on the objective for data whose per-mode rank-`R_n` PCA
/// residual concentrates on at most `k_n` columns: the sum over modes of the
/// `k_n` largest residual column energies.
pub fn tensor_error_bound(x: &DenseTensor, config: &ShopcaConfig) -> Result<f64> {
    Ok(tensor_error_bound_terms(x, config)?.iter().sum())
}

/// Dense baseline: per-mode leading left singular bases and the same core
/// construction. Supports are empty; the bound degenerates to the total
/// per-mode residual energy (the full-column case of the sparse bound).
pub fn hosvd(x: &DenseTensor, ranks: &[usize]) -> Result<DecompositionResult> {
    let order = x.shape().order();
    if ranks.len() != order {
        return Err(Error::DimMismatch {
            context: "rank count",
            expected: order,
            got: ranks.len(),
        });
    }
    let mut factors = Vec::with_capacity(order);
    let mut eta_achieved = Vec::with_capacity(order);
    let mut supports = Vec::with_capacity(order);
    let mut mode_seconds = Vec::with_capacity(order);
    for n in 1..=order {
        let started = Instant::now();
        let unfolding = unfold(x, n)?;
        let r = ranks[n - 1];
        let basis = truncated_left_svd(&unfolding, r).map_err(|e| Error::in_mode(n, e))?;
        let err = projection_error_sq(&unfolding, &basis)?;
        factors.push(basis.u);
        eta_achieved.push(err);
        supports.push(Support::empty(unfolding.cols()));
        mode_seconds.push(started.elapsed().as_secs_f64());
    }
    let mut core = x.clone();
    for (i, factor) in factors.iter().enumerate() {
        core = mode_product(&core, i + 1, &factor.transpose())?;
    }
    let bound = eta_achieved.iter().sum();
    Ok(DecompositionResult {
        factors,
        core,
        supports,
        eta_targets: eta_achieved.clone(),
        eta_achieved,
        statuses: vec![SelectorStatus::Converged; order],
        bound,
        mode_seconds,
    })
}

/// The `k` rows of a factor with the largest row norms (ties: lowest index):
/// the naive thresholding support of the dense baseline.
pub fn threshold_support(u: &Matrix, k: usize) -> Result<Support> {
    if k == 0 || k > u.rows() {
        return Err(Error::InvalidConfig(format!(
            "k = {k} out of range 1..={}",
            u.rows()
        )));
    }
    let norms: Vec<f64> = (0..u.rows())
        .map(|i| (0..u.cols()).map(|c| u.get(i, c) * u.get(i, c)).sum())
        .collect();
    let mut order: Vec<usize> = (0..u.rows()).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap().then(i.cmp(&j)));
    Support::new(order[..k].iter().map(|&i| i + 1).collect(), u.rows())
}

/// Relative reconstruction quality helper: `objective / ||x||^2`.
pub fn relative_objective(x: &DenseTensor, factors: &[Matrix]) -> Result<f64> {
    let norm = frobenius_norm_sq(x);
    if norm == 0.0 {
        return Ok(0.0);
    }
    Ok(objective_f(x, factors)? / norm)
}
