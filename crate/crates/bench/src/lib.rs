//! Fixtures shared by the benchmarks: the two reference parameter sets and
//! the grids they are solved on.

use std::sync::Arc;

use nqground_core::global::gaussian_seed;
use nqground_core::{ParameterSet, RadialField, RadialGrid};

/// `(N, q, p, b) = (2, 3, 4, 0.5)`, mass-subcritical.
pub fn subcritical() -> ParameterSet {
    ParameterSet::validate(2, 3.0, 4.0, 0.5).expect("valid parameters")
}

/// `(N, q, p, b) = (3, 2.5, 3.75, 1)`, mass-supercritical.
pub fn supercritical() -> ParameterSet {
    ParameterSet::validate(3, 2.5, 3.75, 1.0).expect("valid parameters")
}

/// Geometric grid of radius 40 with the first node at `1e-5·R`.
pub fn grid(dim: usize, n: usize) -> Arc<RadialGrid> {
    Arc::new(RadialGrid::with_first_node(dim, 40.0, n, 4e-4).expect("valid grid"))
}

pub fn seed(params: &ParameterSet, n: usize, c: f64) -> RadialField {
    gaussian_seed(&grid(params.dim(), n), c).expect("nonzero seed")
}
