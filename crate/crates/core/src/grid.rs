//! Graded radial grids and their quadrature weights.
//!
//! Nodes `r_0 < r_1 < … < r_{n-1} = R` have gaps growing geometrically by
//! the grading ratio. A sampled field is read as piecewise linear between
//! nodes and constant on `[0, r_0]` (the radial symmetry condition), and
//! every weight integrates that interpolant exactly against
//! `omega_{N-1} r^{N-1}` (or `r^{N-1-b}` for the singular weight).

use crate::error::{Error, Result};

/// Smallest admissible first node, relative to `R`.
pub const MIN_FIRST_NODE_REL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    dim: usize,
    radius: f64,
    grading: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    cell_volumes: Vec<f64>,
}

/// Surface measure of the unit sphere in `R^N`; `2` for `N = 1` (even extension).
pub fn sphere_measure(dim: usize) -> f64 {
    match dim {
        0 => 1.0,
        1 => 2.0,
        2 => 2.0 * std::f64::consts::PI,
        d => 2.0 * std::f64::consts::PI * sphere_measure(d - 2) / (d as f64 - 2.0),
    }
}

// ∫_a^b r^k dr for 0 <= a < b, k > -1, evaluated without catastrophic cancellation.
fn moment(a: f64, b: f64, k: f64) -> f64 {
    let e = k + 1.0;
    if a == 0.0 {
        return b.powf(e) / e;
    }
    let ratio = (b - a) / a;
    a.powf(e) * (e * ratio.ln_1p()).exp_m1() / e
}

// (∫ rising hat · r^k, ∫ falling hat · r^k) over [a, b].
fn hat_moments(a: f64, b: f64, k: f64) -> (f64, f64) {
    let h = b - a;
    let m0 = moment(a, b, k);
    let m1 = moment(a, b, k + 1.0);
    let rising = (m1 - a * m0) / h;
    let falling = (b * m0 - m1) / h;
    (rising.max(0.0), falling.max(0.0))
}

fn node_weights(nodes: &[f64], k: f64, sphere: f64) -> Vec<f64> {
    let n = nodes.len();
    let mut w = vec![0.0; n];
    w[0] = moment(0.0, nodes[0], k);
    for i in 0..n - 1 {
        let (rise, fall) = hat_moments(nodes[i], nodes[i + 1], k);
        w[i] += fall;
        w[i + 1] += rise;
    }
    w.iter_mut().for_each(|x| *x *= sphere);
    w
}

fn first_node_for(radius: f64, n: usize, g: f64) -> f64 {
    if (g - 1.0).abs() < 1e-14 {
        radius / n as f64
    } else {
        // R (g-1)/(g^n - 1), in log form to stay finite for large n
        let ln_gn = n as f64 * g.ln();
        radius * (g - 1.0) / ln_gn.exp_m1()
    }
}

impl RadialGrid {
    /// Gap-geometric grid: `r_{i+1}-r_i = g·(r_i-r_{i-1})`, first gap `r_0`.
    ///
    /// When the grading would push `r_0` below `1e-8·R` the ratio is reduced
    /// so `r_0` sits exactly at that floor.
    pub fn build(dim: usize, radius: f64, n: usize, grading: f64) -> Result<Self> {
        if dim < 1 {
            return Err(Error::InvalidGrid("dimension must be >= 1".into()));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidGrid(format!("radius must be positive, got {radius}")));
        }
        if n < 16 {
            return Err(Error::InvalidGrid(format!("need at least 16 nodes, got {n}")));
        }
        if !(grading >= 1.0) || !grading.is_finite() {
            return Err(Error::InvalidGrid(format!("grading must be >= 1, got {grading}")));
        }
        let mut g = grading;
        if first_node_for(radius, n, g) < MIN_FIRST_NODE_REL * radius {
            g = grading_for_first_node(radius, n, MIN_FIRST_NODE_REL * radius);
        }
        let r0 = first_node_for(radius, n, g);
        let mut nodes = Vec::with_capacity(n);
        let mut gap = r0;
        let mut r = r0;
        nodes.push(r);
        for _ in 1..n {
            gap *= g;
            r += gap;
            nodes.push(r);
        }
        // pin the endpoint; rescale to remove summation drift
        let scale = radius / nodes[n - 1];
        nodes.iter_mut().for_each(|x| *x *= scale);
        nodes[n - 1] = radius;
        Self::assemble(dim, g, nodes)
    }

    /// Grid whose first node is (approximately) `r0`; the grading is solved for.
    pub fn with_first_node(dim: usize, radius: f64, n: usize, r0: f64) -> Result<Self> {
        if !(r0 > 0.0 && r0 * n as f64 <= radius) {
            return Err(Error::InvalidGrid(format!(
                "first node {r0} incompatible with R={radius}, n={n}"
            )));
        }
        let g = grading_for_first_node(radius, n, r0.max(MIN_FIRST_NODE_REL * radius));
        Self::build(dim, radius, n, g)
    }

    /// Grid from explicit nodes (e.g. read back from a profile file).
    pub fn from_nodes(dim: usize, nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 16 {
            return Err(Error::InvalidGrid("need at least 16 nodes".into()));
        }
        if !(nodes[0] > 0.0) || nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidGrid("nodes must be positive and strictly increasing".into()));
        }
        let grading = nodes
            .windows(3)
            .map(|w| (w[2] - w[1]) / (w[1] - w[0]))
            .fold(1.0_f64, f64::max);
        Self::assemble(dim, grading, nodes)
    }

    fn assemble(dim: usize, grading: f64, nodes: Vec<f64>) -> Result<Self> {
        if dim < 1 {
            return Err(Error::InvalidGrid("dimension must be >= 1".into()));
        }
        let sphere = sphere_measure(dim);
        let k = dim as f64 - 1.0;
        let weights = node_weights(&nodes, k, sphere);
        let cell_volumes = nodes
            .windows(2)
            .map(|w| sphere * moment(w[0], w[1], k))
            .collect();
        Ok(RadialGrid {
            dim,
            radius: *nodes.last().unwrap(),
            grading,
            nodes,
            weights,
            cell_volumes,
        })
    }

    /// The same grid with every node multiplied by `scale` (exact dilation).
    pub fn scaled(&self, scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::InvalidGrid(format!("scale must be positive, got {scale}")));
        }
        Self::assemble(
            self.dim,
            self.grading,
            self.nodes.iter().map(|r| r * scale).collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn radius(&self) -> f64 {
        self.radius
    }
    pub fn grading(&self) -> f64 {
        self.grading
    }
    pub fn len(&self) -> usize {
        self.nodes.len()
    }
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
    /// `∫ f dx` weights for the volume element (lumped, exact for linear `f`).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    /// `omega ∫_{r_i}^{r_{i+1}} r^{N-1} dr`, one per cell.
    pub fn cell_volumes(&self) -> &[f64] {
        &self.cell_volumes
    }
    pub fn gap(&self, cell: usize) -> f64 {
        self.nodes[cell + 1] - self.nodes[cell]
    }

    /// Weights for `∫ f |x|^{-b} dx`, with the first cell integrated by the exact power rule.
    pub fn singular_weights(&self, b: f64) -> Vec<f64> {
        node_weights(
            &self.nodes,
            self.dim as f64 - 1.0 - b,
            sphere_measure(self.dim),
        )
    }

    pub fn ball_volume(&self) -> f64 {
        sphere_measure(self.dim) * self.radius.powi(self.dim as i32) / self.dim as f64
    }

    /// Largest ratio between consecutive gaps.
    pub fn max_gap_ratio(&self) -> f64 {
        let mut gaps = vec![self.nodes[0]];
        gaps.extend(self.nodes.windows(2).map(|w| w[1] - w[0]));
        gaps.windows(2)
            .map(|w| (w[1] / w[0]).max(w[0] / w[1]))
            .fold(1.0, f64::max)
    }

    /// Index of the cell `[r_i, r_{i+1}]` containing `r` (clamped to the grid).
    pub fn locate(&self, r: f64) -> usize {
        let n = self.nodes.len();
        match self.nodes.binary_search_by(|x| x.total_cmp(&r)) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        }
    }
}

/// Grading ratio whose first gap equals `r0` on `n` nodes out to `radius`.
fn grading_for_first_node(radius: f64, n: usize, r0: f64) -> f64 {
    if r0 >= radius / n as f64 {
        return 1.0;
    }
    let (mut lo, mut hi) = (1.0_f64, 2.0_f64);
    while first_node_for(radius, n, hi) > r0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if first_node_for(radius, n, mid) > r0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Free-function form of [`RadialGrid::build`].
pub fn build_grid(dim: usize, radius: f64, n: usize, grading: f64) -> Result<RadialGrid> {
    RadialGrid::build(dim, radius, n, grading)
}
