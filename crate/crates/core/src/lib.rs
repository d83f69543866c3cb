//! One-shot deblurring with generalized-Gaussian point spread functions.
//!
//! The crate covers four stages:
//!
//! * [`kernel`] — centered finite-difference derivative kernels and sampled
//!   generalized-Gaussian blur kernels;
//! * [`design`] — least-squares design of a polynomial inverse filter and its
//!   assembly into a single zero-sum deblurring kernel;
//! * [`blind`] — blur estimation from the ratio between an image's radial
//!   spectrum and that of its anti-aliased downsample;
//! * [`deblur`] — separable application with entropy-adaptive strength.
//!
//! [`metrics`] provides the full-reference scores used to evaluate results.

pub mod blind;
pub mod deblur;
pub mod design;
pub mod error;
pub mod image;
pub mod kernel;
pub mod metrics;
pub mod synthetic;

pub use deblur::{
    deblur, deblur_detailed, deblur_edges, deblur_unclipped, image_entropy, separable_convolve,
    Deblurred, GammaMode, TuningParams,
};
pub use design::{design_inverse, feasibility_error, BandPolicy, DesignConfig, FitBasis, InverseDesign, OutOfBand, TapPolicy};
pub use error::{DeblurError, Result};
pub use image::{BitDepth, Image, ImagePlane};
pub use kernel::{derivative_kernel, frequency_response, sample_gg_kernel, FirKernel, GeneralizedGaussianPsf};
