//! Approximation of multivariate periodic functions from samples on rank-1
//! lattices.
//!
//! The crate is organised along the pipeline:
//!
//! * [`index_sets`] builds frequency index sets (hyperbolic crosses,
//!   ℓ∞-balls, tensor grids, axis crosses, difference sets);
//! * [`lattice`] represents rank-1 lattices and checks the reconstruction
//!   property, with closed-form Fibonacci and Korobov constructions;
//! * [`cbc`] searches reconstructing lattices component by component;
//! * [`spectral`] samples functions on a lattice and recovers Fourier
//!   coefficients with a single one-dimensional FFT;
//! * [`testfn`] provides the tensor-product kink test function and its exact
//!   Fourier coefficients;
//! * [`analysis`] evaluates weighted norms, exact L2 errors and lower-bound
//!   witnesses;
//! * [`experiments`] and [`verify`] drive the command-line sweeps and
//!   invariant suites.

pub mod analysis;
pub mod cbc;
pub mod experiments;
pub mod index_sets;
pub mod lattice;
pub mod spectral;
pub mod testfn;
pub mod verify;

pub use analysis::{
    find_aliasing_pair, fooling_function, hab_norm, kink_l2_error, lower_bound_value, weight_omega,
    AliasingPair, AliasingWitness, ErrorReport, SmoothnessParams,
};
pub use cbc::{candidate_sizes, cbc_construct, CbcConfig, CbcError};
pub use index_sets::{
    anisotropic_cross, axis_cross, difference_set, dyadic_block, dyadic_cross, hyperbolic_cross,
    linf_ball_2d, tensor_grid_2d, FrequencyIndex, FrequencyIndexSet, IndexSetSpec,
};
pub use lattice::{fibonacci_lattice, korobov_lattice_2d, IntegerBox, Rank1Lattice};
pub use spectral::{
    dft_1d, evaluate_trig_poly, quadrature_coefficient, reconstruct_coefficients,
    sample_on_lattice, Direction, SampleVector, SpectralApproximation,
};
pub use testfn::{kink_coeff, kink_coeff_1d, kink_value, KinkFunction};
