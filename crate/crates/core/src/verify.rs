//! Machine-checkable diagnostics on profiles and reports.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::RadialField;
use crate::functional::Model;
use crate::grid::RadialGrid;
use crate::params::ParameterSet;

/// Central-difference step for the fiber derivative.
pub const FD_STEP: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    /// `None` when the check's hypothesis does not hold.
    pub pass: Option<bool>,
    pub notes: String,
}

impl Check {
    fn new(name: &str, value: f64, threshold: f64, pass: bool, notes: String) -> Self {
        Check {
            name: name.into(),
            value,
            threshold,
            pass: Some(pass),
            notes,
        }
    }

    pub fn not_applicable(name: &str, notes: String) -> Self {
        Check {
            name: name.into(),
            value: f64::NAN,
            threshold: f64::NAN,
            pass: None,
            notes,
        }
    }

    pub fn passed(&self) -> bool {
        self.pass == Some(true)
    }
}

/// Append-only list of named checks.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct VerificationReport {
    checks: Vec<Check>,
}

impl VerificationReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn checks(&self) -> &[Check] {
        &self.checks
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// No applicable check failed.
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass != Some(false))
    }

    /// `verify.json`: an array of `{name, value, threshold, pass, notes}`.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.checks).expect("checks serialize")
    }
}

fn energy_of(params: &ParameterSet, u: &RadialField) -> f64 {
    Model::new(*params, u.grid().clone()).energy(u.values())
}

/// `d/dt I(u_t)` at `t = 1` by central differences, the dilation applied
/// exactly through the grid.
pub fn pohozaev_fd(u: &RadialField, params: &ParameterSet, h: f64) -> Result<f64> {
    let n = params.n();
    let at = |t: f64| -> Result<f64> {
        let v = u.on_scaled_grid(1.0 / t, t.powf(n / 2.0))?;
        Ok(energy_of(params, &v))
    };
    Ok((at(1.0 + h)? - at(1.0 - h)?) / (2.0 * h))
}

/// Scaled `|P(u)|` against `1e-4`, and the gap between `P(u)` and the
/// finite-difference fiber derivative against `1e-6`, both relative to
/// `a2 + aq + ap`.
pub fn check_pohozaev(u: &RadialField, params: &ParameterSet) -> Result<[Check; 2]> {
    let model = Model::new(*params, u.grid().clone());
    let comp = model.components(u.values());
    let scale = comp.scale();
    let p = comp.pohozaev(params);
    let (res, gap) = if scale == 0.0 {
        (0.0, 0.0)
    } else {
        let fd = pohozaev_fd(u, params, FD_STEP)?;
        (p.abs() / scale, (p - fd).abs() / scale)
    };
    Ok([
        Check::new("pohozaev_residual", res, 1e-4, res <= 1e-4, format!("P = {p:.6e}, scale = {scale:.6e}")),
        Check::new(
            "pohozaev_fd",
            gap,
            1e-6,
            gap <= 1e-6,
            format!("central difference of I(u_t) at t = 1, h = {FD_STEP}"),
        ),
    ])
}

/// Relative sup norm of the strong residual of `−Δu − Δ_q u − λu − |x|^{−b}|u|^{p−2}u`,
/// boundary stencils excluded.
pub fn check_el_residual(u: &RadialField, lambda: f64, params: &ParameterSet) -> Check {
    let model = Model::new(*params, u.grid().clone());
    let r = model.el_residual(u.values(), lambda);
    Check::new("el_residual", r, 1e-3, r <= 1e-3, format!("lambda = {lambda:.6e}"))
}

/// Exponential tail check under `λ < −2`: on `r ∈ [R/2, 0.9R]`, the weight
/// `e^{r/2}(|u|+|u'|)` must not grow and the fitted slope of `ln|u|` must be
/// at most `−0.4`.
pub fn check_decay(u: &RadialField, lambda: f64) -> Result<Check> {
    if !(lambda < -2.0) {
        return Err(Error::HypothesisNotMet(format!("lambda = {lambda} >= -2")));
    }
    let r = u.grid().nodes();
    let radius = u.grid().radius();
    let du = u.derivative();
    let window: Vec<usize> = (0..r.len())
        .filter(|&i| r[i] >= 0.5 * radius && r[i] <= 0.9 * radius)
        .collect();
    if window.len() < 8 {
        return Err(Error::HypothesisNotMet(format!("only {} nodes in the tail window", window.len())));
    }
    let weighted: Vec<f64> = window
        .iter()
        .map(|&i| (0.5 * r[i]).exp() * (u.values()[i].abs() + du[i].abs()))
        .collect();
    let sup = weighted.iter().cloned().fold(0.0_f64, f64::max);
    let tenth = (window.len() / 10).max(1);
    let head = weighted[..tenth].iter().cloned().fold(0.0_f64, f64::max);
    let tail = weighted[weighted.len() - tenth..].iter().cloned().fold(0.0_f64, f64::max);
    let bounded = sup.is_finite() && tail <= head;
    // least-squares slope of ln|u| over nodes where the tail is representable
    let pts: Vec<(f64, f64)> = window
        .iter()
        .filter(|&&i| u.values()[i].abs() > f64::MIN_POSITIVE)
        .map(|&i| (r[i], u.values()[i].abs().ln()))
        .collect();
    let (slope, fit_note) = if pts.len() >= 8 {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        (sxy / sxx, format!("{} fit nodes", pts.len()))
    } else {
        (f64::NEG_INFINITY, "tail below the representable range".to_string())
    };
    let threshold = -0.5 + 0.1;
    Ok(Check::new(
        "decay",
        slope,
        threshold,
        bounded && slope <= threshold,
        format!("sup e^(r/2)(|u|+|u'|) = {sup:.6e} (head {head:.3e}, tail {tail:.3e}); {fit_note}; lambda = {lambda:.6e}"),
    ))
}

/// Smooth, positive, decaying test fields with random shape parameters:
/// Gaussians, sech profiles and Gaussian-times-quadratic bumps.
pub fn random_fields(grid: &Arc<RadialGrid>, n: usize, seed: u64) -> Result<Vec<RadialField>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let radius = grid.radius();
    (0..n)
        .map(|k| {
            let amp = 10f64.powf(rng.gen_range(-1.0..1.0));
            let width = radius * 10f64.powf(rng.gen_range(-2.0..-0.7));
            let a: f64 = rng.gen_range(0.0..2.0);
            RadialField::from_fn(grid.clone(), move |r| {
                let x = r / width;
                amp * match k % 3 {
                    0 => (-x * x).exp(),
                    1 => 1.0 / x.cosh(),
                    _ => (1.0 + a * x * x) * (-x * x).exp(),
                }
            })
        })
        .collect()
}

/// GN ratio `ap / (K ‖∇u‖_q^σ ‖u‖₂^{p−σ})` of one field.
pub fn gn_ratio(u: &RadialField, k: f64, params: &ParameterSet) -> f64 {
    let comp = Model::new(*params, u.grid().clone()).components(u.values());
    let s = params.sigma();
    comp.ap / (k * comp.aq.powf(s / params.q()) * comp.m2.powf((params.p() - s) / 2.0))
}

/// Largest GN ratio over `n_samples` random fields, against `1 + 1e-3`.
pub fn check_gn(k: f64, params: &ParameterSet, grid: &Arc<RadialGrid>, n_samples: usize, seed: u64) -> Result<Check> {
    let fields = random_fields(grid, n_samples, seed)?;
    let worst = fields
        .iter()
        .map(|u| gn_ratio(u, k, params))
        .fold(f64::NEG_INFINITY, f64::max);
    let threshold = 1.0 + 1e-3;
    Ok(Check::new(
        "gn",
        worst,
        threshold,
        worst <= threshold,
        format!("max over {n_samples} random fields, seed {seed}, K = {k:.10e}"),
    ))
}

/// Symmetrization must not decrease `∫|x|^{−b}|u|^p` and must keep `m2`.
pub fn check_rearrangement(u: &RadialField, params: &ParameterSet) -> Result<Check> {
    let star = u.decreasing_rearrangement()?;
    let model = Model::new(*params, u.grid().clone());
    let (c0, c1) = (model.components(u.values()), model.components(star.values()));
    let gain = (c1.ap - c0.ap) / c0.ap.max(1e-300);
    let mass_err = (c1.m2 - c0.m2).abs() / c0.m2.max(1e-300);
    Ok(Check::new(
        "rearrangement",
        gain,
        -1e-10,
        gain >= -1e-10 && mass_err <= 1e-10,
        format!("relative ap gain; mass error {mass_err:.3e}"),
    ))
}

/// The full suite on one profile with multiplier `λ`; the GN check runs
/// only when a constant `K` is supplied.
pub fn verify_profile(
    u: &RadialField,
    lambda: f64,
    params: &ParameterSet,
    k: Option<f64>,
    seed: u64,
) -> Result<VerificationReport> {
    let mut report = VerificationReport::new();
    for c in check_pohozaev(u, params)? {
        report.push(c);
    }
    report.push(check_el_residual(u, lambda, params));
    report.push(match check_decay(u, lambda) {
        Ok(c) => c,
        Err(e) => Check::not_applicable("decay", e.to_string()),
    });
    report.push(match k {
        Some(k) => check_gn(k, params, u.grid(), 200, seed)?,
        None => Check::not_applicable("gn", "no GN constant supplied".into()),
    });
    report.push(match check_rearrangement(&u.abs(), params) {
        Ok(c) => c,
        Err(e) => Check::not_applicable("rearrangement", e.to_string()),
    });
    Ok(report)
}
