//! Image reconstruction through sparse column selection: flatten an RGB image
//! into a channel-blocked matrix, select an oversampled column subset, project
//! onto its leading basis and rebuild the pixels.

use std::time::Instant;

use serde::Serialize;

use crate::io::RgbImage;
use crate::pca::{projection_error_sq, truncated_left_svd};
use crate::select::{select_columns, SelectorConfig};
use crate::tensor::Matrix;
use crate::{Error, Result};

/// Which flattening the reconstruction runs on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientation {
    /// `H x 3W`: image rows against channel-blocked columns (R block, then
    /// G, then B).
    RowWise,
    /// `W x 3H`: image columns against channel-blocked transposed rows.
    ColWise,
}

impl std::fmt::Display for Orientation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Orientation::RowWise => write!(f, "row-wise"),
            Orientation::ColWise => write!(f, "column-wise"),
        }
    }
}

/// Flattens to both orientations with pixel values scaled to `[0, 1]`.
///
/// Row-wise entry `(i, c*W + j)` and column-wise entry `(j, c*H + i)` both
/// hold channel `c` of pixel `(i, j)`.
pub fn image_to_matrices(img: &RgbImage) -> (Matrix, Matrix) {
    let (h, w) = (img.height, img.width);
    let mut row_wise = Matrix::zeros(h, 3 * w);
    let mut col_wise = Matrix::zeros(w, 3 * h);
    for i in 0..h {
        for j in 0..w {
            for c in 0..3 {
                let v = img.channel(i + 1, j + 1, c) as f64 / 255.0;
                row_wise.set(i, c * w + j, v);
                col_wise.set(j, c * h + i, v);
            }
        }
    }
    (row_wise, col_wise)
}

fn matrix_to_image(m: &Matrix, orientation: Orientation, width: usize, height: usize) -> RgbImage {
    let mut data = vec![0u8; 3 * width * height];
    for i in 0..height {
        for j in 0..width {
            for c in 0..3 {
                let v = match orientation {
                    Orientation::RowWise => m.get(i, c * width + j),
                    Orientation::ColWise => m.get(j, c * height + i),
                };
                let byte = (v.clamp(0.0, 1.0) * 255.0).round() as u8;
                data[(i * width + j) * 3 + c] = byte;
            }
        }
    }
    RgbImage {
        width,
        height,
        data,
    }
}

/// Reconstruction diagnostics (errors on the `[0, 1]`-scaled matrix).
#[derive(Clone, Debug, Serialize)]
pub struct ReconReport {
    /// `||A - U U^T A||_F` for the selected sparse basis.
    pub frobenius_error: f64,
    pub runtime_seconds: f64,
    pub n_components: usize,
    pub orientation: String,
    /// Reconstruction error of the selected columns alone.
    pub eta_achieved: f64,
    /// The a-priori tolerance the run used.
    pub eta_bound: f64,
    /// `||A - V V^T A||_F` for the dense PCA basis at the same rank.
    pub dense_error: f64,
}

/// Selects `n_components * oversample` columns of the flattened image, builds
/// the rank-`n_components` basis of the selection, projects and rebuilds.
pub fn reconstruct_image(
    img: &RgbImage,
    n_components: usize,
    oversample: usize,
    orientation: Orientation,
) -> Result<(RgbImage, ReconReport)> {
    if oversample == 0 {
        return Err(Error::InvalidConfig("oversample must be positive".into()));
    }
    let (row_wise, col_wise) = image_to_matrices(img);
    let a = match orientation {
        Orientation::RowWise => row_wise,
        Orientation::ColWise => col_wise,
    };
    let max_components = a.rows().min(a.cols());
    if n_components == 0 || n_components > max_components {
        return Err(Error::RankOutOfRange {
            r: n_components,
            max: max_components,
        });
    }
    let started = Instant::now();
    let k = (n_components * oversample).min(a.cols());
    let cfg = SelectorConfig::new(k, n_components);
    let selection = select_columns(&a, &cfg)?;
    let u = &selection.basis.u;
    let compressed = u.transpose().matmul(&a)?;
    let rebuilt = u.matmul(&compressed)?;
    let mut err_sq = 0.0;
    for (x, y) in a.data().iter().zip(rebuilt.data()) {
        err_sq += (x - y) * (x - y);
    }
    let runtime_seconds = started.elapsed().as_secs_f64();

    let dense = truncated_left_svd(&a, n_components)?;
    let dense_error = projection_error_sq(&a, &dense)?.max(0.0).sqrt();

    let out = matrix_to_image(&rebuilt, orientation, img.width, img.height);
    let report = ReconReport {
        frobenius_error: err_sq.max(0.0).sqrt(),
        runtime_seconds,
        n_components,
        orientation: orientation.to_string(),
        eta_achieved: selection.eta_achieved,
        eta_bound: selection.eta_target,
        dense_error,
    };
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Xoshiro256PlusPlus;

    #[test]
    fn single_pixel_layout() {
        let img = RgbImage::new(1, 1, vec![10, 20, 30]).unwrap();
        let (row_wise, col_wise) = image_to_matrices(&img);
        assert_eq!(row_wise.rows(), 1);
        assert_eq!(row_wise.cols(), 3);
        assert!((row_wise.get(0, 0) - 10.0 / 255.0).abs() < 1e-12);
        assert!((row_wise.get(0, 1) - 20.0 / 255.0).abs() < 1e-12);
        assert!((row_wise.get(0, 2) - 30.0 / 255.0).abs() < 1e-12);
        assert_eq!(col_wise.rows(), 1);
        assert_eq!(col_wise.cols(), 3);
    }

    #[test]
    fn explicit_two_by_two_layout() {
        // Pixel (i, j) channels: r = 10i + j, g = 100 + 10i + j, b = 200 + ...
        let mut data = Vec::new();
        for i in 1..=2u8 {
            for j in 1..=2u8 {
                data.extend_from_slice(&[10 * i + j, 100 + 10 * i + j, 200 + 10 * i + j]);
            }
        }
        let img = RgbImage::new(2, 2, data).unwrap();
        let (row_wise, _) = image_to_matrices(&img);
        assert_eq!(row_wise.rows(), 2);
        assert_eq!(row_wise.cols(), 6);
        // Row 1: R columns (11, 12), G columns (111, 112), B (211, 212).
        let want = [11.0, 12.0, 111.0, 112.0, 211.0, 212.0];
        for (col, &w) in want.iter().enumerate() {
            assert!((row_wise.get(0, col) - w / 255.0).abs() < 1e-12);
        }
    }

    #[test]
    fn grayscale_has_identical_blocks() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(401);
        let mut data = Vec::new();
        for _ in 0..6 {
            let v = (rng.next_f64() * 255.0) as u8;
            data.extend_from_slice(&[v, v, v]);
        }
        let img = RgbImage::new(3, 2, data).unwrap();
        let (row_wise, _) = image_to_matrices(&img);
        for i in 0..2 {
            for j in 0..3 {
                let r = row_wise.get(i, j);
                assert_eq!(r, row_wise.get(i, 3 + j));
                assert_eq!(r, row_wise.get(i, 6 + j));
            }
        }
    }

    #[test]
    fn solid_color_reconstructs_exactly() {
        let img = RgbImage::new(8, 6, vec![77; 8 * 6 * 3]).unwrap();
        let (out, report) = reconstruct_image(&img, 1, 2, Orientation::RowWise).unwrap();
        assert!(report.frobenius_error < 1e-9);
        assert_eq!(out, img);
    }

    #[test]
    fn full_rank_reconstruction_is_lossless() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(701);
        let data: Vec<u8> = (0..5 * 4 * 3).map(|_| (rng.next_f64() * 255.0) as u8).collect();
        let img = RgbImage::new(4, 5, data).unwrap();
        let (out, report) = reconstruct_image(&img, 5, 3, Orientation::RowWise).unwrap();
        assert!(report.frobenius_error < 1e-9);
        assert_eq!(out, img);
    }

    #[test]
    fn sparse_error_dominates_dense_error() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(409);
        let data: Vec<u8> = (0..12 * 9 * 3).map(|_| (rng.next_f64() * 255.0) as u8).collect();
        let img = RgbImage::new(9, 12, data).unwrap();
        for orientation in [Orientation::RowWise, Orientation::ColWise] {
            let (_, report) = reconstruct_image(&img, 3, 2, orientation).unwrap();
            assert!(
                report.frobenius_error + 1e-12 >= report.dense_error,
                "sparse {} < dense {}",
                report.frobenius_error,
                report.dense_error
            );
            assert!(report.eta_achieved <= report.eta_bound + 1e-12);
        }
    }

    #[test]
    fn component_cap_is_validated() {
        let img = RgbImage::new(4, 3, vec![0; 36]).unwrap();
        assert!(reconstruct_image(&img, 4, 2, Orientation::RowWise).is_err());
        assert!(reconstruct_image(&img, 0, 2, Orientation::RowWise).is_err());
        assert!(reconstruct_image(&img, 1, 0, Orientation::RowWise).is_err());
    }
}
