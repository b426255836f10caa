//! Nearest-subspace classification with compressed per-class bases: each
//! class keeps a column-selected subset of its training samples and projects
//! test vectors onto the rank-`r` PCA basis of that subset; the smallest
//! projection residual wins.

use crate::pca::pca_basis_for_columns;
use crate::select::{select_columns, SelectorConfig};
use crate::tensor::Matrix;
use crate::{Error, Result};

/// Per-class orthonormal bases over a shared ambient dimension.
#[derive(Clone, Debug)]
pub struct ClassifierModel {
    /// One `D x r` orthonormal basis per class.
    pub bases: Vec<Matrix>,
    pub labels: Vec<usize>,
    /// Fraction of training samples retained per class.
    pub compression_ratio: f64,
}

impl ClassifierModel {
    pub fn dimension(&self) -> usize {
        self.bases[0].rows()
    }
}

/// Trains one basis per class stack (`D x N_c` sample columns): select
/// `k = max(r, round(ratio * N_c))` sample columns, then take the rank-`r`
/// basis of the selection.
pub fn train_classifier(class_stacks: &[Matrix], ratio: f64, r: usize) -> Result<ClassifierModel> {
    if class_stacks.is_empty() {
        return Err(Error::InvalidConfig("no classes".into()));
    }
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "compression ratio must lie in (0, 1], got {ratio}"
        )));
    }
    let dim = class_stacks[0].rows();
    let mut bases = Vec::with_capacity(class_stacks.len());
    for (label, stack) in class_stacks.iter().enumerate() {
        if stack.rows() != dim {
            return Err(Error::DimMismatch {
                context: "class stack dimension",
                expected: dim,
                got: stack.rows(),
            });
        }
        let samples = stack.cols();
        if r > samples || r > dim {
            return Err(Error::in_mode(
                label + 1,
                Error::RankOutOfRange {
                    r,
                    max: samples.min(dim),
                },
            ));
        }
        let k = ((ratio * samples as f64).round() as usize).max(r).min(samples);
        let selection = select_columns(stack, &SelectorConfig::new(k, r))
            .map_err(|e| Error::in_mode(label + 1, e))?;
        let basis = pca_basis_for_columns(stack, &selection.support, r)?;
        bases.push(basis.u);
    }
    Ok(ClassifierModel {
        bases,
        labels: (0..class_stacks.len()).collect(),
        compression_ratio: ratio,
    })
}

/// Squared residual of projecting `b` onto a basis.
fn residual_sq(basis: &Matrix, b: &[f64]) -> f64 {
    let mut res = b.to_vec();
    for c in 0..basis.cols() {
        let col = basis.col(c);
        let t: f64 = col.iter().zip(b).map(|(x, y)| x * y).sum();
        for (r, &bi) in res.iter_mut().zip(col) {
            *r -= t * bi;
        }
    }
    res.iter().map(|v| v * v).sum()
}

/// Label of the class whose subspace leaves the smallest residual
/// (ties: lowest label).
pub fn classify(model: &ClassifierModel, b: &[f64]) -> Result<usize> {
    if b.len() != model.dimension() {
        return Err(Error::DimMismatch {
            context: "sample dimension",
            expected: model.dimension(),
            got: b.len(),
        });
    }
    let mut best = 0usize;
    let mut best_res = f64::INFINITY;
    for (idx, basis) in model.bases.iter().enumerate() {
        let res = residual_sq(basis, b);
        if res < best_res {
            best_res = res;
            best = idx;
        }
    }
    Ok(model.labels[best])
}

/// Classifies every test column; returns overall accuracy and the
/// row-normalized confusion matrix (rows: true class, columns: predicted).
pub fn accuracy_and_confusion(
    model: &ClassifierModel,
    test_samples: &Matrix,
    test_labels: &[usize],
) -> Result<(f64, Vec<Vec<f64>>)> {
    if test_labels.is_empty() {
        return Err(Error::InvalidConfig("empty test set".into()));
    }
    if test_samples.cols() != test_labels.len() {
        return Err(Error::DimMismatch {
            context: "test label count",
            expected: test_samples.cols(),
            got: test_labels.len(),
        });
    }
    let classes = model.bases.len();
    let mut counts = vec![vec![0usize; classes]; classes];
    let mut correct = 0usize;
    for (j, &truth) in test_labels.iter().enumerate() {
        if truth >= classes {
            return Err(Error::IndexOutOfRange {
                index: truth,
                max: classes - 1,
            });
        }
        let predicted = classify(model, test_samples.col(j))?;
        counts[truth][predicted] += 1;
        if predicted == truth {
            correct += 1;
        }
    }
    let confusion = counts
        .into_iter()
        .map(|row| {
            let total: usize = row.iter().sum();
            row.into_iter()
                .map(|c| {
                    if total == 0 {
                        0.0
                    } else {
                        c as f64 / total as f64
                    }
                })
                .collect()
        })
        .collect();
    Ok((correct as f64 / test_labels.len() as f64, confusion))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Xoshiro256PlusPlus;

    #[test]
    fn ratio_one_is_plain_pca() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(301);
        let stack = Matrix::new(6, 10, rng.normal_vec(60)).unwrap();
        let model = train_classifier(std::slice::from_ref(&stack), 1.0, 2).unwrap();
        let direct = crate::pca::truncated_left_svd(&stack, 2).unwrap();
        // Same projector.
        for i in 0..6 {
            for j in 0..6 {
                let a: f64 = (0..2).map(|c| model.bases[0].get(i, c) * model.bases[0].get(j, c)).sum();
                let b: f64 = (0..2).map(|c| direct.u.get(i, c) * direct.u.get(j, c)).sum();
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn one_sample_per_class_normalizes() {
        let sample = Matrix::new(3, 1, vec![3.0, 0.0, 4.0]).unwrap();
        let model = train_classifier(&[sample], 1.0, 1).unwrap();
        let col = model.bases[0].col(0);
        assert!((col[0] - 0.6).abs() < 1e-12);
        assert!((col[2] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn classify_examples() {
        // Two classes spanned by e1 and e2.
        let e1 = Matrix::new(2, 1, vec![1.0, 0.0]).unwrap();
        let e2 = Matrix::new(2, 1, vec![0.0, 1.0]).unwrap();
        let model = ClassifierModel {
            bases: vec![e1, e2],
            labels: vec![0, 1],
            compression_ratio: 1.0,
        };
        assert_eq!(classify(&model, &[0.9, 0.1]).unwrap(), 0);
        assert_eq!(classify(&model, &[0.1, 0.9]).unwrap(), 1);
        // Inside class 0 exactly.
        assert_eq!(classify(&model, &[2.0, 0.0]).unwrap(), 0);
        // Zero vector: all residuals zero, lowest label wins.
        assert_eq!(classify(&model, &[0.0, 0.0]).unwrap(), 0);
        assert!(classify(&model, &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn residual_pythagoras() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(307);
        let stack = Matrix::new(5, 8, rng.normal_vec(40)).unwrap();
        let model = train_classifier(&[stack], 1.0, 2).unwrap();
        for _ in 0..10 {
            let b = rng.normal_vec(5);
            let res = residual_sq(&model.bases[0], &b);
            let norm: f64 = b.iter().map(|v| v * v).sum();
            let mut captured = 0.0;
            for c in 0..2 {
                let t: f64 = model.bases[0].col(c).iter().zip(&b).map(|(x, y)| x * y).sum();
                captured += t * t;
            }
            assert!(res >= -1e-12);
            assert!((norm - captured - res).abs() <= 1e-9 * norm.max(1.0));
        }
    }

    #[test]
    fn confusion_identity_when_perfect() {
        let e1 = Matrix::new(2, 1, vec![1.0, 0.0]).unwrap();
        let e2 = Matrix::new(2, 1, vec![0.0, 1.0]).unwrap();
        let model = ClassifierModel {
            bases: vec![e1, e2],
            labels: vec![0, 1],
            compression_ratio: 1.0,
        };
        let test = Matrix::from_rows(&[&[1.0, 0.0, 2.0], &[0.0, 1.0, 0.0]]).unwrap();
        let (acc, confusion) = accuracy_and_confusion(&model, &test, &[0, 1, 0]).unwrap();
        assert_eq!(acc, 1.0);
        assert_eq!(confusion[0], vec![1.0, 0.0]);
        assert_eq!(confusion[1], vec![0.0, 1.0]);

        assert!(accuracy_and_confusion(&model, &test, &[]).is_err());
    }

    #[test]
    fn train_validation() {
        let stack = Matrix::zeros(3, 2);
        assert!(train_classifier(&[stack.clone()], 0.0, 1).is_err());
        assert!(train_classifier(&[stack.clone()], 1.5, 1).is_err());
        assert!(train_classifier(&[stack], 1.0, 3).is_err());
        assert!(train_classifier(&[], 1.0, 1).is_err());
    }
}
