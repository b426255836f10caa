//! On-disk formats: NPY tensor containers, binary PPM images, IDX digit
//! files, and the decomposition archive directory.

pub mod archive;
pub mod idx;
pub mod npy;
pub mod ppm;

pub use ppm::RgbImage;
