//! Probabilistic neural networks learned from stationary ergodic samples.
//!
//! A network density `p(x | y) = exp(−E(x; y)) / Z` is described by neurons
//! `y_α`, the coefficients of `E` in either the Fourier basis on `[-1,1)ⁿ`
//! ([`Mode::Frequency`]) or the power basis around the origin
//! ([`Mode::Moment`]). The crate covers the whole chain:
//!
//! * [`kmd`]: standing-wave samples, snapshot matrices and dynamic mode
//!   decomposition for regenerating dense trajectories;
//! * [`ecdf`] and [`density`]: empirical CDFs, spline smoothing and
//!   finite-difference recovery of the governing density;
//! * [`frequency`] and [`moment`]: neuron learning, learning rates and
//!   partition functions;
//! * [`estimation`]: likelihoods, active paths, POAN and topological
//!   statistics.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod density;
pub mod ecdf;
pub mod error;
pub mod estimation;
pub mod frequency;
pub mod grid;
pub mod index;
pub mod kmd;
pub mod moment;
pub mod neurons;
pub mod spline;

pub use density::{
    auxiliary_density, cdf_to_grid, cdf_to_grid_with, density_from_cdf, CdfGrid, DensityGrid,
    SplineSmoothing,
};
pub use ecdf::{empirical_cdf, l1_distance, EmpiricalCdf};
pub use error::{Error, ErrorKind, Result};
pub use estimation::{
    active_path, energy_at, estimate, likelihood, poan, topo_stats, ActivePath, EstimationReport,
    TopoStats,
};
pub use frequency::{
    connection_upsilon, frequency_learning_rate, learn_frequency_grid, learn_frequency_samples,
    log_partition_function, partition_function, truncate_energy, Learned, SampleWeights,
};
pub use grid::{Axis, GridSpec};
pub use index::{
    build_dictionary, compare, enumerate_cell, evaluation_vector, BoundSpec, Cell, Dictionary,
    EvaluationVector, Mode, MultiIndex,
};
pub use kmd::{
    build_snapshots, dmd_fit, dmd_fit_samples, dmd_reconstruct, dmd_spectrum,
    simulate_standing_wave, DmdModel, SampleMatrix,
};
pub use moment::{
    central_difference, learn_moment_grid, moment_learning_rate, NodeGrid, SpacingVectors,
};
pub use neurons::{stationarity_residual, NeuronSet};

pub use num_complex::Complex64;
