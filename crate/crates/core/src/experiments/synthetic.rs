//! Synthetic support-recovery study: a planted rank-1 third-order signal with
//! sparse factor vectors under unit Gaussian noise, recovered by selecting
//! columns of the transposed mode unfolding, scored by true/false positive
//! rates and ROC sweeps against the dense-baseline thresholding.

use crate::pca::truncated_left_svd;
use crate::rng::Xoshiro256PlusPlus;
use crate::select::{select_columns, SelectorConfig, Support};
use crate::shopca::threshold_support;
use crate::tensor::{outer_rank1, unfold, DenseTensor, Matrix};
use crate::{Error, Result};

/// One synthetic scenario: dimensions, which modes carry sparse factors, the
/// zeroed fraction, the planted signal weight, and the seed.
#[derive(Clone, Debug)]
pub struct ScenarioSpec {
    pub dims: [usize; 3],
    /// 1-based modes whose factor vectors are sparsified.
    pub sparse_modes: Vec<usize>,
    /// Fraction of factor entries set to zero, in (0, 1).
    pub sparsity_fraction: f64,
    pub signal_weight: f64,
    pub seed: u64,
}

impl ScenarioSpec {
    /// The four standard scenarios: 1 and 3 are 100x100x100, 2 and 4 are
    /// 1000x20x20; 1 and 2 sparsify only mode 1, 3 and 4 all three modes.
    pub fn standard(number: usize, seed: u64) -> Result<Self> {
        let (dims, sparse_modes) = match number {
            1 => ([100, 100, 100], vec![1]),
            2 => ([1000, 20, 20], vec![1]),
            3 => ([100, 100, 100], vec![1, 2, 3]),
            4 => ([1000, 20, 20], vec![1, 2, 3]),
            other => {
                return Err(Error::InvalidConfig(format!(
                    "scenario {other} is not one of 1..=4"
                )))
            }
        };
        Ok(Self {
            dims,
            sparse_modes,
            sparsity_fraction: 0.5,
            signal_weight: 100.0,
            seed,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidConfig("dimensions must be positive".into()));
        }
        if !(self.sparsity_fraction > 0.0 && self.sparsity_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "sparsity fraction must lie in (0, 1), got {}",
                self.sparsity_fraction
            )));
        }
        if self.sparse_modes.iter().any(|&m| m == 0 || m > 3) {
            return Err(Error::InvalidConfig("sparse modes must be in 1..=3".into()));
        }
        if !self.signal_weight.is_finite() {
            return Err(Error::InvalidConfig("signal weight must be finite".into()));
        }
        Ok(())
    }

    /// Number of nonzero entries a sparse factor of extent `j` keeps.
    pub fn support_size(&self, j: usize) -> usize {
        j - (self.sparsity_fraction * j as f64).round() as usize
    }
}

/// Planted factors and their supports.
#[derive(Clone, Debug)]
pub struct GroundTruth {
    pub factors: Vec<Vec<f64>>,
    /// 1-based sorted nonzero indices per mode (all indices for dense modes).
    pub supports: Vec<Vec<usize>>,
}

/// Draws the planted tensor `d * u o v o w + noise`.
///
/// Stream order is fixed: factors mode by mode (sparse modes draw their
/// entries then the zero positions; dense modes are paired and draw one
/// Gaussian matrix whose leading left/right singular vectors they take),
/// then one noise variate per tensor entry in storage order. Identical seeds
/// give identical bytes.
pub fn gen_synthetic(spec: &ScenarioSpec) -> Result<(DenseTensor, GroundTruth)> {
    spec.validate()?;
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(spec.seed);
    let mut factors: Vec<Option<Vec<f64>>> = vec![None; 3];
    let mut supports: Vec<Vec<usize>> = vec![Vec::new(); 3];

    for mode in 0..3 {
        if factors[mode].is_some() {
            continue;
        }
        let j = spec.dims[mode];
        if spec.sparse_modes.contains(&(mode + 1)) {
            let mut factor = rng.normal_vec(j);
            let zeros = (spec.sparsity_fraction * j as f64).round() as usize;
            for &z in &rng.choose_indices(j, zeros) {
                factor[z] = 0.0;
            }
            supports[mode] = factor
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(i, _)| i + 1)
                .collect();
            factors[mode] = Some(factor);
        } else {
            // Pair this dense mode with the next dense one: both factors come
            // from one Gaussian matrix (leading left and right singular
            // vectors). An unpaired dense mode uses its own square matrix.
            let partner = (mode + 1..3)
                .find(|m| !spec.sparse_modes.contains(&(m + 1)) && factors[*m].is_none());
            let rows = j;
            let cols = partner.map_or(j, |m| spec.dims[m]);
            let gaussian =
                crate::tensor::Matrix::new(rows, cols, rng.normal_vec(rows * cols))?;
            let left = truncated_left_svd(&gaussian, 1)?;
            let u: Vec<f64> = left.u.col(0).to_vec();
            supports[mode] = (1..=j).collect();
            if let Some(m) = partner {
                let sigma = left.singular_values[0];
                let mut v = vec![0.0; cols];
                for c in 0..cols {
                    let dot: f64 = gaussian.col(c).iter().zip(&u).map(|(x, y)| x * y).sum();
                    v[c] = dot / sigma;
                }
                let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                for x in v.iter_mut() {
                    *x /= norm;
                }
                supports[m] = (1..=spec.dims[m]).collect();
                factors[m] = Some(v);
            }
            factors[mode] = Some(u);
        }
    }

    let factors: Vec<Vec<f64>> = factors.into_iter().map(Option::unwrap).collect();
    let mut x = outer_rank1(spec.signal_weight, &factors)?;
    for slot in x.data_mut().iter_mut() {
        *slot += rng.next_normal();
    }
    Ok((x, GroundTruth { factors, supports }))
}

/// Recovers a mode's factor support from the *transposed* mode unfolding, so
/// columns are directly mode indices.
///
/// The column selector runs first and fixes a basis for the dominant
/// subspace; the reported support is then the `k` columns with the largest
/// energy inside that subspace (ties: lowest index; exact-zero columns are
/// never reported). Ranking by captured energy rather than by raw column
/// norm is what separates weak factor entries from noise columns: a noise
/// column's norm matches a weak signal column's, but its projection onto the
/// signal subspace is near zero.
pub fn recover_support(x: &DenseTensor, mode: usize, cfg: &SelectorConfig) -> Result<Support> {
    let transposed = unfold(x, mode)?.transpose();
    let selection = select_columns(&transposed, cfg)?;
    let basis = &selection.basis.u;
    let p = transposed.cols();
    let mut scores = vec![0.0f64; p];
    for (j, score) in scores.iter_mut().enumerate() {
        let col = transposed.col(j);
        for c in 0..basis.cols() {
            let dot: f64 = basis.col(c).iter().zip(col).map(|(x, y)| x * y).sum();
            *score += dot * dot;
        }
    }
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&i, &j| scores[j].partial_cmp(&scores[i]).unwrap().then(i.cmp(&j)));
    let chosen: Vec<usize> = order
        .into_iter()
        .take(cfg.k.min(p))
        .filter(|&i| scores[i] > 0.0)
        .map(|i| i + 1)
        .collect();
    Support::new(chosen, p)
}

/// True/false positive rates of a recovered support.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RecoveryMetrics {
    pub tp_rate: f64,
    pub fp_rate: f64,
}

/// `tp = |est ∩ truth| / |truth|`, `fp = |est \ truth| / (total - |truth|)`,
/// with empty-denominator guards (tp reports 1, fp reports 0).
pub fn tp_fp(estimated: &Support, truth: &[usize], total: usize) -> RecoveryMetrics {
    let truth_set: std::collections::HashSet<usize> = truth.iter().copied().collect();
    let hits = estimated
        .indices()
        .iter()
        .filter(|i| truth_set.contains(i))
        .count();
    let misses = estimated.len() - hits;
    let tp_rate = if truth.is_empty() {
        1.0
    } else {
        hits as f64 / truth.len() as f64
    };
    let negatives = total - truth_set.len();
    let fp_rate = if negatives == 0 {
        0.0
    } else {
        misses as f64 / negatives as f64
    };
    RecoveryMetrics { tp_rate, fp_rate }
}

/// Which recovery method traces the curve.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RecoveryMethod {
    /// Column selection on the transposed unfolding, sweeping `k`.
    GeoHopca,
    /// Thresholding of the dense baseline's factor rows, sweeping `k`.
    HosvdThreshold,
}

impl std::fmt::Display for RecoveryMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RecoveryMethod::GeoHopca => write!(f, "geohopca"),
            RecoveryMethod::HosvdThreshold => write!(f, "hosvd_threshold"),
        }
    }
}

/// A swept operating curve with its trapezoidal area.
#[derive(Clone, Debug)]
pub struct RocCurve {
    /// `(fp, tp)` points sorted by fp, deduplicated, anchored at (0,0), (1,1).
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

/// Sweeps the selection size over `grid` and traces `(fp, tp)`.
pub fn roc_curve(
    x: &DenseTensor,
    mode: usize,
    truth: &[usize],
    method: RecoveryMethod,
    grid: &[usize],
    base: &SelectorConfig,
) -> Result<RocCurve> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("empty sweep grid".into()));
    }
    let j = x.shape().dims()[mode - 1];
    let hosvd_factor = match method {
        RecoveryMethod::HosvdThreshold => Some(truncated_left_svd(&unfold(x, mode)?, base.r)?.u),
        RecoveryMethod::GeoHopca => None,
    };
    let mut points = Vec::with_capacity(grid.len() + 2);
    for &k in grid {
        let k = k.min(j).max(1);
        let support = match method {
            RecoveryMethod::GeoHopca => {
                let cfg = SelectorConfig {
                    k,
                    r: base.r.min(k),
                    eta: base.eta,
                    max_cuts: base.max_cuts,
                    node_budget: base.node_budget,
                };
                recover_support(x, mode, &cfg)?
            }
            RecoveryMethod::HosvdThreshold => {
                threshold_support(hosvd_factor.as_ref().unwrap(), k)?
            }
        };
        let m = tp_fp(&support, truth, j);
        points.push((m.fp_rate, m.tp_rate));
    }
    Ok(curve_from_points(points))
}

/// Anchors raw `(fp, tp)` points at (0,0) and (1,1), sorts, deduplicates and
/// integrates the trapezoidal area. Also used to average swept points across
/// replicates.
pub fn curve_from_points(mut points: Vec<(f64, f64)>) -> RocCurve {
    points.push((0.0, 0.0));
    points.push((1.0, 1.0));
    points.sort_by(|a, b| a.partial_cmp(b).unwrap());
    points.dedup();
    let mut auc = 0.0;
    for pair in points.windows(2) {
        let (x0, y0) = pair[0];
        let (x1, y1) = pair[1];
        auc += (x1 - x0) * (y0 + y1) / 2.0;
    }
    RocCurve { points, auc }
}

/// False positive rate of row-norm thresholding at its full-recovery
/// operating point: the smallest `k` whose top-`k` factor rows contain the
/// whole true support (the selection a magnitude cutoff capturing every
/// support entry would make).
pub fn threshold_full_recovery_fp(factor: &Matrix, truth: &[usize], total: usize) -> Result<f64> {
    if truth.is_empty() || truth.len() == total {
        return Ok(0.0);
    }
    let norms: Vec<f64> = (0..factor.rows())
        .map(|i| (0..factor.cols()).map(|c| factor.get(i, c) * factor.get(i, c)).sum())
        .collect();
    let mut order: Vec<usize> = (0..factor.rows()).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap().then(i.cmp(&j)));
    let truth_set: std::collections::HashSet<usize> = truth.iter().copied().collect();
    let mut remaining = truth.len();
    let mut k_full = factor.rows();
    for (pos, &row) in order.iter().enumerate() {
        if truth_set.contains(&(row + 1)) {
            remaining -= 1;
            if remaining == 0 {
                k_full = pos + 1;
                break;
            }
        }
    }
    Ok((k_full - truth.len()) as f64 / (total - truth.len()) as f64)
}

/// Sample mean and standard deviation (n-1 denominator; 0 for n < 2).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
        / (values.len() - 1) as f64;
    (mean, var.sqrt())
}
