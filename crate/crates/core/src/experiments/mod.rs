//! The three evaluation harnesses: synthetic support recovery, projection
//! classification under compression, and image reconstruction.

pub mod classify;
pub mod image;
pub mod synthetic;

pub use classify::{accuracy_and_confusion, classify, train_classifier, ClassifierModel};
pub use image::{image_to_matrices, reconstruct_image, Orientation, ReconReport};
pub use synthetic::{
    curve_from_points, gen_synthetic, mean_std, recover_support, roc_curve, threshold_full_recovery_fp, tp_fp, GroundTruth,
    RecoveryMethod, RecoveryMetrics, RocCurve, ScenarioSpec,
};
