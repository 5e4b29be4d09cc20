//! Normalized ground states of `-Δu - Δ_q u = λu + |x|^{-b}|u|^{p-2}u`
//! with prescribed mass, for radial profiles on a graded grid.

pub mod error;
pub mod field;
pub mod functional;
pub mod global;
pub mod grid;
pub mod interp;
pub mod io;
pub mod manifold;
pub mod newton;
pub mod params;
pub mod shooting;
pub mod tridiag;
pub mod verify;
pub mod weinstein;

pub use error::{Error, Result};
pub use field::RadialField;
pub use global::{SolveReport, Status};
pub use functional::{Combo, FiberComponents, Model};
pub use grid::RadialGrid;
pub use params::{ParameterSet, Regime, RegimeTag};
pub use verify::{Check, VerificationReport};
pub use weinstein::{minimize_weinstein, GnResult, WeinsteinOptions};
