//! Sampled radial profiles and the transformations acting on them.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::interp::Pchip;
use crate::params::ParameterSet;

/// A radial profile `u(r_i)` on a shared grid. The last node carries the
/// homogeneous Dirichlet condition and is always stored as `0`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialField {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
    pub metadata: Option<String>,
}

impl RadialField {
    pub fn new(grid: Arc<RadialGrid>, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "field has {} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteField);
        }
        *values.last_mut().unwrap() = 0.0;
        Ok(RadialField {
            grid,
            values,
            metadata: None,
        })
    }

    pub fn from_fn(grid: Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        Self::new(grid, values)
    }

    pub fn zeros(grid: Arc<RadialGrid>) -> Self {
        let n = grid.len();
        RadialField {
            grid,
            values: vec![0.0; n],
            metadata: None,
        }
    }

    pub fn with_metadata(mut self, meta: impl Into<String>) -> Self {
        self.metadata = Some(meta.into());
        self
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        RadialField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
            metadata: self.metadata.clone(),
        }
    }

    pub fn abs(&self) -> Self {
        RadialField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v.abs()).collect(),
            metadata: self.metadata.clone(),
        }
    }

    /// `∫ |u|^2 dx`.
    pub fn mass(&self) -> f64 {
        self.grid
            .weights()
            .iter()
            .zip(&self.values)
            .map(|(w, u)| w * u * u)
            .sum()
    }

    /// Interpolated value at an arbitrary radius: flat below `r_0`, zero beyond `R`.
    pub fn sample_with(&self, interp: &Pchip<'_>, r: f64) -> f64 {
        let nodes = self.grid.nodes();
        if r <= nodes[0] {
            self.values[0]
        } else if r >= self.grid.radius() {
            0.0
        } else {
            interp.eval(r)
        }
    }

    pub fn interpolator(&self) -> Pchip<'_> {
        Pchip::new(self.grid.nodes(), &self.values)
    }

    /// Mass-preserving dilation `u_t(x) = t^{N/2} u(t x)`, resampled on the same grid.
    pub fn dilate(&self, t: f64) -> Self {
        if t == 1.0 {
            return self.clone();
        }
        let amp = t.powf(self.grid.dim() as f64 / 2.0);
        let pchip = self.interpolator();
        let values = self
            .grid
            .nodes()
            .iter()
            .map(|&r| amp * self.sample_with(&pchip, t * r))
            .collect();
        RadialField::new(self.grid.clone(), values).expect("finite resample")
    }

    /// Mass-moving scaling `u^{t0}(x) = t0 u(x / t0)`; mass scales by `t0^{N+2}`.
    pub fn shape_scale(&self, t0: f64) -> Self {
        if t0 == 1.0 {
            return self.clone();
        }
        let pchip = self.interpolator();
        let values = self
            .grid
            .nodes()
            .iter()
            .map(|&r| t0 * self.sample_with(&pchip, r / t0))
            .collect();
        RadialField::new(self.grid.clone(), values).expect("finite resample")
    }

    /// Multiplicative normalization onto `S(c)`.
    pub fn rescale_to_mass(&self, c: f64) -> Result<Self> {
        let m = self.mass();
        if m <= 0.0 {
            return Err(Error::ZeroField);
        }
        Ok(self.scaled((c / m).sqrt()))
    }

    /// Same values carried onto a dilated copy of the grid: `v(r) = amp · u(r / scale)`.
    /// Exact, no resampling.
    pub fn on_scaled_grid(&self, scale: f64, amp: f64) -> Result<Self> {
        let grid = Arc::new(self.grid.scaled(scale)?);
        let values = self.values.iter().map(|v| v * amp).collect();
        RadialField::new(grid, values)
    }

    /// Resample onto another grid (monotone cubic).
    pub fn resample(&self, grid: Arc<RadialGrid>) -> Self {
        let pchip = self.interpolator();
        let values = grid
            .nodes()
            .iter()
            .map(|&r| self.sample_with(&pchip, r))
            .collect();
        RadialField::new(grid, values).expect("finite resample")
    }

    /// Pointwise derivative: centered differences inside, one-sided at the
    /// outer end, and the symmetry condition `u'(0) = 0` (ghost value) at the center.
    pub fn derivative(&self) -> Vec<f64> {
        let r = self.grid.nodes();
        let u = &self.values;
        let n = u.len();
        let mut du = vec![0.0; n];
        // ghost: the profile is even, so u(-r_0) = u(r_0)
        let (xm, um) = (-r[0], u[0]);
        du[0] = centered(xm, r[0], r[1], um, u[0], u[1]);
        for i in 1..n - 1 {
            du[i] = centered(r[i - 1], r[i], r[i + 1], u[i - 1], u[i], u[i + 1]);
        }
        du[n - 1] = (u[n - 1] - u[n - 2]) / (r[n - 1] - r[n - 2]);
        du
    }

    /// Discrete Schwarz symmetrization: nonincreasing in `r`, equimeasurable with `u`.
    ///
    /// Values are sorted by size and laid out in cumulative measure; each node
    /// picks up the `L^2` average of that step profile over its own measure
    /// interval, so `∫ u*^2` equals `∫ u^2` to rounding.
    pub fn decreasing_rearrangement(&self) -> Result<Self> {
        if self.values.iter().any(|&v| v < 0.0) {
            return Err(Error::NegativeValues);
        }
        let w = self.grid.weights();
        if self.values.windows(2).all(|p| p[0] >= p[1]) {
            return Ok(self.clone());
        }
        let mut order: Vec<usize> = (0..self.values.len()).collect();
        order.sort_by(|&i, &j| self.values[j].total_cmp(&self.values[i]).then(i.cmp(&j)));
        // step profile: value order[k] on [C_{k-1}, C_k]
        let mut out = vec![0.0; self.values.len()];
        let mut k = 0usize;
        let mut step_lo = 0.0;
        let mut step_hi = w[order[0]];
        let mut node_lo = 0.0_f64;
        for (j, slot) in out.iter_mut().enumerate() {
            let node_hi = node_lo + w[j];
            let mut acc = 0.0;
            loop {
                let lo = node_lo.max(step_lo);
                let hi = node_hi.min(step_hi);
                if hi > lo {
                    let v = self.values[order[k]];
                    acc += (hi - lo) * v * v;
                }
                if step_hi <= node_hi && k + 1 < order.len() {
                    k += 1;
                    step_lo = step_hi;
                    step_hi += w[order[k]];
                } else {
                    break;
                }
            }
            *slot = (acc / w[j]).max(0.0).sqrt();
            node_lo = node_hi;
        }
        // values are nonincreasing up to rounding in the averages
        for j in 1..out.len() {
            if out[j] > out[j - 1] {
                out[j] = out[j - 1];
            }
        }
        let mut field = RadialField::new(self.grid.clone(), out)?;
        field.metadata = self.metadata.clone();
        Ok(field)
    }

    /// Profile CSV: comment header with the parameters, then `r,u` rows at 17 digits.
    pub fn to_profile_csv(&self, params: &ParameterSet) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "# N={}, q={:?}, p={:?}, b={:?}, R={:?}, n={}",
            params.dim(),
            params.q(),
            params.p(),
            params.b(),
            self.grid.radius(),
            self.grid.len()
        );
        if let Some(meta) = &self.metadata {
            for line in meta.lines() {
                let _ = writeln!(s, "# {line}");
            }
        }
        s.push_str("r,u\n");
        for (r, u) in self.grid.nodes().iter().zip(&self.values) {
            let _ = writeln!(s, "{r:.16e},{u:.16e}");
        }
        s
    }

    pub fn from_profile_csv(text: &str) -> Result<(ParameterSet, RadialField)> {
        let mut params = None;
        let mut meta = Vec::new();
        let mut nodes = Vec::new();
        let mut values = Vec::new();
        let mut header_seen = false;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let rest = rest.trim();
                if params.is_none() && rest.starts_with("N=") {
                    params = Some(parse_param_header(rest)?);
                } else {
                    meta.push(rest.to_string());
                }
                continue;
            }
            if !header_seen {
                if line != "r,u" {
                    return Err(Error::Parse(format!("expected header `r,u`, got `{line}`")));
                }
                header_seen = true;
                continue;
            }
            let (r, u) = line
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("bad row `{line}`")))?;
            nodes.push(parse_f64(r)?);
            values.push(parse_f64(u)?);
        }
        let params = params.ok_or_else(|| Error::Parse("missing parameter header".into()))?;
        let grid = Arc::new(RadialGrid::from_nodes(params.dim(), nodes)?);
        let mut field = RadialField::new(grid, values)?;
        if !meta.is_empty() {
            field.metadata = Some(meta.join("\n"));
        }
        Ok((params, field))
    }
}

fn centered(x0: f64, x1: f64, x2: f64, u0: f64, u1: f64, u2: f64) -> f64 {
    let h0 = x1 - x0;
    let h1 = x2 - x1;
    (h0 * h0 * (u2 - u1) + h1 * h1 * (u1 - u0)) / (h0 * h1 * (h0 + h1))
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|e| Error::Parse(format!("`{s}`: {e}")))
}

fn parse_param_header(line: &str) -> Result<ParameterSet> {
    let mut n = None;
    let (mut q, mut p, mut b) = (None, None, None);
    for part in line.split(',') {
        let Some((k, v)) = part.trim().split_once('=') else {
            continue;
        };
        match k.trim() {
            "N" => n = Some(v.trim().parse::<i64>().map_err(|e| Error::Parse(e.to_string()))?),
            "q" => q = Some(parse_f64(v)?),
            "p" => p = Some(parse_f64(v)?),
            "b" => b = Some(parse_f64(v)?),
            _ => {}
        }
    }
    match (n, q, p, b) {
        (Some(n), Some(q), Some(p), Some(b)) => ParameterSet::validate(n, q, p, b),
        _ => Err(Error::Parse(format!("incomplete parameter header `{line}`"))),
    }
}

/// Free-function forms used by the rest of the crate and the CLI.
pub fn dilate(u: &RadialField, t: f64) -> RadialField {
    u.dilate(t)
}

pub fn shape_scale(u: &RadialField, t0: f64) -> RadialField {
    u.shape_scale(t0)
}

pub fn rescale_to_mass(u: &RadialField, c: f64) -> Result<RadialField> {
    u.rescale_to_mass(c)
}

pub fn decreasing_rearrangement(u: &RadialField) -> Result<RadialField> {
    u.decreasing_rearrangement()
}
