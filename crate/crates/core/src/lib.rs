//! JPEG soft decoding.
//!
//! A baseline grayscale JPEG is parsed down to its quantization-bin indices and
//! restored by combining three priors under per-coefficient bin constraints:
//! a Laplacian prior on DCT coefficients (closed-form MMSE initialization), a
//! sparsity prior over a K-SVD trained dictionary (OMP), and a graph-signal
//! smoothness prior built from left eigenvectors of the random-walk graph
//! Laplacian.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the aliases at the
//! crate root fix the scalar to `f64`, which is what the CLI uses.

pub mod bench;
pub mod dct;
pub mod decoder;
pub mod graph;
pub mod metrics;
pub mod patching;
pub mod jpeg;
pub mod laplacian;
pub mod raster;
pub mod scalar;
pub mod sparse;
pub mod synth;

pub use dct::{Dct8x8, DctBasis};
pub use jpeg::{
    encode_jpeg, hard_decode, parse_jpeg, quantize, JpegError, QuantTable, QuantizedImage,
};
pub use raster::{GrayImage, Plane};
pub use scalar::Real;

pub type Plane64 = Plane<f64>;
pub type Plane32 = Plane<f32>;
