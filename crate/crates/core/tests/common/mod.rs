#![allow(dead_code)]

use std::sync::Arc;

use nqground_core::{ParameterSet, RadialGrid};

pub fn grid(dim: usize) -> Arc<RadialGrid> {
    Arc::new(RadialGrid::with_first_node(dim, 40.0, 4096, 4e-4).unwrap())
}

pub fn coarse(dim: usize) -> Arc<RadialGrid> {
    Arc::new(RadialGrid::with_first_node(dim, 30.0, 1024, 1e-3).unwrap())
}

pub fn params(n: i64, q: f64, p: f64, b: f64) -> ParameterSet {
    ParameterSet::validate(n, q, p, b).unwrap()
}

/// Relative sup-norm distance `max|a−b| / max|b|`.
pub fn rel_sup(a: &[f64], b: &[f64]) -> f64 {
    let d = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0_f64, f64::max);
    d / b.iter().fold(0.0_f64, |m, y| m.max(y.abs()))
}
