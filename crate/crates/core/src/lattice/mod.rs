//! Fourier analysis on the `λ`-torus with the normalised counting measure
//! `(dξ)_λ = (1/λ) Σ_{ξ ∈ Z/λ}`.

pub mod field;
pub mod grid;
pub mod hyperplane;
pub mod transform;

pub use field::SpectralField;
pub use grid::TorusGrid;
pub use hyperplane::{
    dense_functional, hyperplane_functional, symmetric_functional, symmetric_with_tail,
    tensor_functional, HyperplanePoint, SumOptions, TensorTerm,
};
pub use transform::{
    convolve, forward_transform, fractional_derivative, homogeneous_sobolev_norm, inverse_transform,
    lq_norm, project, sobolev_norm, ConvolutionBound, Projection,
};
