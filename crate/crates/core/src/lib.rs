//! Free additive convolution of compactly supported measures and numerical
//! checks of rates in the free central limit theorem.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod families;
pub mod freeconv;
pub mod measure;
pub mod oracle;
pub mod semicircle;

pub use bounds::{build_row, GrowthFunction, TriangularRow};
pub use freeconv::{clt_sum, free_convolve, free_convolve_n, ConvolutionParams};
pub use measure::{Measure, MeasureError, TruncationWindow};
pub use semicircle::SemicircleLaw;
