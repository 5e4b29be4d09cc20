//! Minimization of `I` on the Pohozaev manifold
//! `V(c) = {u ∈ S(c) : P(u) = 0}` in the mass-supercritical regime.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::RadialField;
use crate::functional::{fiber_energy, fiber_pohozaev, multiplier, pohozaev_energy, Combo, FiberComponents, Model};
use crate::global::{flow_step, gaussian_seed, SolveReport, Status};
use crate::grid::RadialGrid;
use crate::newton::{kkt_polish, KktOptions};
use crate::params::{ParameterSet, RegimeTag};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberRoot {
    pub t_u: f64,
    pub bracket: (f64, f64),
    /// `g(t) = P(u_t)/t²` at the bracket ends.
    pub g_values: (f64, f64),
}

fn fiber_g(comp: &FiberComponents, t: f64, params: &ParameterSet) -> f64 {
    fiber_pohozaev(comp, t, params) / (t * t)
}

/// Unique zero of `t ↦ P(u_t)`.
pub fn fiber_root(comp: &FiberComponents, params: &ParameterSet) -> Result<FiberRoot> {
    let (a, b) = (params.fiber_exp_q(), params.fiber_exp_p());
    if !(2.0 < a && a < b) {
        return Err(Error::RegimeMismatch(format!(
            "fiber exponents A = {a}, B = {b} do not satisfy 2 < A < B"
        )));
    }
    if !(comp.a2 > 0.0 && comp.aq > 0.0 && comp.ap > 0.0) {
        return Err(Error::DegenerateComponents);
    }
    let g = |t: f64| fiber_g(comp, t, params);
    // g(0+) = a2 > 0 and g → −∞, with a single sign change
    let (mut lo, mut hi) = (1.0, 1.0);
    if g(1.0) > 0.0 {
        while g(hi) > 0.0 {
            hi *= 2.0;
            if hi > 1e300 {
                return Err(Error::BracketNotFound { lo, hi });
            }
        }
        lo = hi / 2.0;
    } else {
        while g(lo) <= 0.0 {
            lo *= 0.5;
            if lo < 1e-300 {
                return Err(Error::BracketNotFound { lo, hi });
            }
        }
        hi = lo * 2.0;
    }
    let bracket = (lo, hi);
    let g_values = (g(lo), g(hi));
    let (mut x0, mut x1) = (lo, hi);
    for _ in 0..200 {
        let mid = 0.5 * (x0 + x1);
        if x1 - x0 <= 1e-15 * x1 || mid <= x0 || mid >= x1 {
            break;
        }
        if g(mid) > 0.0 {
            x0 = mid;
        } else {
            x1 = mid;
        }
    }
    // Newton polish on g
    let mut t = 0.5 * (x0 + x1);
    for _ in 0..5 {
        let h = 1e-7 * t;
        let d = (g(t + h) - g(t - h)) / (2.0 * h);
        if d == 0.0 || !d.is_finite() {
            break;
        }
        let next = t - g(t) / d;
        if !(next > x0 * (1.0 - 1e-12) && next < x1 * (1.0 + 1e-12)) {
            break;
        }
        t = next;
    }
    Ok(FiberRoot {
        t_u: t,
        bracket,
        g_values,
    })
}

/// Scaled Pohozaev residual tolerance of the projection.
pub const PROJECTION_TOL: f64 = 1e-10;

/// Mass-`c` profile on the fiber of `u` with `P = 0`, computed on the grid of
/// `u`: the dilation parameter is root-found on the resampled discrete `P`,
/// seeded with the closed-form root.
pub fn project_to_manifold(u: &RadialField, c: f64, params: &ParameterSet) -> Result<RadialField> {
    if u.is_zero() {
        return Err(Error::ZeroField);
    }
    let model = Model::new(*params, u.grid().clone());
    let base = u.abs().rescale_to_mass(c)?;
    let comp = model.components(base.values());
    let t0 = fiber_root(&comp, params)?.t_u;
    let at = |t: f64| -> Result<(RadialField, f64)> {
        let v = base.dilate(t).rescale_to_mass(c)?;
        let cv = model.components(v.values());
        Ok((v, cv.pohozaev(params) / cv.scale().max(1e-300)))
    };
    let (v0, p0) = at(t0)?;
    if p0.abs() <= PROJECTION_TOL {
        return Ok(v0);
    }
    // P(u_t) decreases through zero as t grows; bracket around t0
    let (mut lo, mut hi) = (t0, t0);
    let (mut plo, mut phi) = (p0, p0);
    let mut k = 0;
    while plo <= 0.0 {
        lo /= 1.01;
        plo = at(lo)?.1;
        k += 1;
        if k > 2000 {
            return Err(Error::BracketNotFound { lo, hi });
        }
    }
    while phi >= 0.0 {
        hi *= 1.01;
        phi = at(hi)?.1;
        k += 1;
        if k > 4000 {
            return Err(Error::BracketNotFound { lo, hi });
        }
    }
    let mut best = v0;
    for _ in 0..200 {
        // regula falsi with bisection safeguard
        let mut t = hi - phi * (hi - lo) / (phi - plo);
        if !(t > lo && t < hi) {
            t = 0.5 * (lo + hi);
        }
        let (v, pv) = at(t)?;
        best = v;
        if pv.abs() <= PROJECTION_TOL || (hi - lo) <= 1e-15 * hi {
            break;
        }
        if pv > 0.0 {
            lo = t;
            plo = pv;
        } else {
            hi = t;
            phi = pv;
        }
        // Illinois modification keeps both ends moving
        if pv > 0.0 {
            phi *= 0.5;
        } else {
            plo *= 0.5;
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaOptions {
    pub max_iters: usize,
    pub tau0: Option<f64>,
    pub tol_grad: f64,
    pub energy_window: usize,
    pub energy_tol: f64,
    pub polish: bool,
}

impl Default for GammaOptions {
    fn default() -> Self {
        GammaOptions {
            max_iters: 5_000,
            tau0: None,
            tol_grad: 1e-6,
            energy_window: 50,
            energy_tol: 1e-12,
            polish: true,
        }
    }
}

/// Extra diagnostics of a manifold solve.
#[derive(Debug, Clone)]
pub struct GammaReport {
    pub report: SolveReport,
    /// `|I − two-term expression| / |I|`
    pub identity_residual: f64,
    /// Outside the compactness hypotheses: the sign of λ is reported but not asserted.
    pub conjectural: bool,
    /// Relative residual of the constrained stationarity system (NaN if not polished).
    pub kkt_residual: f64,
    /// Multiplier of the `P = 0` constraint; vanishes for whole-space solutions.
    pub pohozaev_multiplier: f64,
}

fn check_manifold_regime(params: &ParameterSet) -> Result<()> {
    params.require_equation()?;
    if params.classify().tag != RegimeTag::Supercritical {
        return Err(Error::RegimeMismatch(format!(
            "the Pohozaev-manifold solver needs the mass-supercritical regime, got {}",
            params.classify().tag
        )));
    }
    Ok(())
}

fn is_conjectural(params: &ParameterSet) -> bool {
    let regime = params.classify();
    !regime.compactness_ok
}

pub fn minimize_gamma(params: &ParameterSet, c: f64, grid: &Arc<RadialGrid>, opts: &GammaOptions) -> Result<GammaReport> {
    let init = gaussian_seed(grid, c)?;
    minimize_gamma_from(params, c, &init, opts)
}

fn finalize(model: &Model, c: f64, v: &RadialField, status: Status, iterations: usize, conjectural: bool) -> Result<GammaReport> {
    let params = model.params();
    let comp = model.components(v.values());
    let (la, lb) = multiplier(&comp, params)?;
    let value = comp.energy(params);
    let identity_residual = (value - pohozaev_energy(&comp, params)).abs() / value.abs().max(1e-300);
    Ok(GammaReport {
        report: SolveReport {
            u: v.clone(),
            value,
            lambda: la,
            lambda_b: lb,
            pohozaev_residual: comp.pohozaev(params).abs() / comp.scale().max(1e-300),
            el_residual: model.el_residual(v.values(), la),
            status,
            iterations,
            mass: c,
            components: comp,
            witness_t: None,
            trace: Default::default(),
        },
        identity_residual,
        conjectural,
        kkt_residual: f64::NAN,
        pohozaev_multiplier: f64::NAN,
    })
}

/// Retraction descent (flow step, then projection onto `V(c)`) followed by
/// Newton–KKT with the mass and Pohozaev constraints.
pub fn minimize_gamma_from(params: &ParameterSet, c: f64, init: &RadialField, opts: &GammaOptions) -> Result<GammaReport> {
    check_manifold_regime(params)?;
    if !(c > 0.0) {
        return Err(Error::InvalidRegime(format!("mass must be positive, got {c}")));
    }
    if init.grid().dim() != params.dim() {
        return Err(Error::GridMismatch);
    }
    let conjectural = is_conjectural(params);
    let model = Model::new(*params, init.grid().clone());
    let mut u = project_to_manifold(init, c, params)?;
    let mut e = model.energy(u.values());
    if !e.is_finite() {
        return Err(Error::NonFiniteEnergy);
    }
    let tau_min = 1e-2
        * (0..model.grid().len() - 1)
            .map(|i| model.grid().gap(i))
            .fold(f64::INFINITY, f64::min)
            .powi(2);
    let mut tau = opts.tau0.unwrap_or(tau_min);
    let mut history = vec![e];
    let mut it = 0;
    let mut status = Status::IterationCap;
    while it < opts.max_iters {
        it += 1;
        let mut accepted = None;
        for _ in 0..60 {
            if let Some(v) = flow_step(&model, u.values(), tau) {
                if let Ok(f) = model.field(v) {
                    if let Ok(pv) = project_to_manifold(&f, c, params) {
                        let ev = model.energy(pv.values());
                        if ev.is_finite() && ev <= e + 1e-10 * (1.0 + e.abs()) {
                            accepted = Some((pv, ev));
                            break;
                        }
                    }
                }
            }
            tau *= 0.5;
            if tau < 1e-30 {
                break;
            }
        }
        let Some((v, ev)) = accepted else { break };
        tau = (tau * 1.5).min(1e8);
        u = v;
        e = ev;
        history.push(e);
        if opts.polish && it % 20 == 0 {
            if let Some((p, kkt, mu)) = polish(&model, c, &u, e) {
                if kkt <= opts.tol_grad && !spreading(&p) {
                    let mut rep = finalize(&model, c, &p, Status::Converged, it, conjectural)?;
                    rep.kkt_residual = kkt;
                    rep.pohozaev_multiplier = mu;
                    return Ok(rep);
                }
            }
        }
        let k = history.len();
        if k > opts.energy_window {
            let old = history[k - 1 - opts.energy_window];
            if old - e <= opts.energy_tol * (1.0 + e.abs()) {
                break;
            }
        }
    }
    let mut kkt = f64::NAN;
    let mut mu = f64::NAN;
    if opts.polish {
        if let Some((p, k, m)) = polish(&model, c, &u, e) {
            u = p;
            kkt = k;
            mu = m;
        }
    }
    let mut rep = finalize(&model, c, &u, status, it, conjectural)?;
    rep.kkt_residual = kkt;
    rep.pohozaev_multiplier = mu;
    if spreading(&u) {
        status = Status::VanishingSuspected;
    } else if kkt <= opts.tol_grad && rep.report.pohozaev_residual <= 1e-4 {
        status = Status::Converged;
    }
    rep.report.status = status;
    Ok(rep)
}

/// Profile still carries a noticeable fraction of its peak near the outer boundary.
fn spreading(u: &RadialField) -> bool {
    let r = u.grid().nodes();
    let radius = u.grid().radius();
    let peak = u.values().iter().cloned().fold(0.0_f64, f64::max);
    u.values()
        .iter()
        .zip(r)
        .any(|(v, &x)| x > 0.75 * radius && v.abs() > 1e-6 * peak)
}

/// Newton–KKT with both constraints; returns the profile, the KKT residual
/// and the multiplier of the Pohozaev constraint.
fn polish(model: &Model, c: f64, u: &RadialField, e: f64) -> Option<(RadialField, f64, f64)> {
    let params = model.params();
    let sol = kkt_polish(
        model,
        &Combo::ENERGY,
        &[(Combo::HALF_MASS, 0.5 * c), (Combo::pohozaev(params), 0.0)],
        u.values(),
        &KktOptions::default(),
    )
    .ok()?;
    let v = model.field(sol.u).ok()?;
    let peak = v.values()[0].abs();
    if v.values().iter().any(|x| *x < -1e-10 * peak) {
        return None;
    }
    let v = model.field(v.values().iter().map(|x| x.abs()).collect()).ok()?;
    let ev = model.energy(v.values());
    // the polished point must stay in the basin of the descent
    if !(ev <= e + 1e-8 * (1.0 + e.abs())) {
        return None;
    }
    Some((v, sol.residual, sol.multipliers[1]))
}

/// Threshold (relative to the peak) that defines the extent of a profile.
const EXTENT_LEVEL: f64 = 1e-8;
/// Target extent as a fraction of the domain radius.
const EXTENT_TARGET: f64 = 0.5;
/// Descent iterations between domain checks.
const ADAPT_CHUNK: usize = 250;

/// Largest node where `|u|` still exceeds `EXTENT_LEVEL` times its peak.
pub fn extent(u: &RadialField) -> f64 {
    let peak = u.values().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let r = u.grid().nodes();
    u.values()
        .iter()
        .zip(r)
        .filter(|(v, _)| v.abs() > EXTENT_LEVEL * peak)
        .map(|(_, &x)| x)
        .fold(r[0], f64::max)
}

/// Domain dilation factor that would bring the extent of `u` to the target.
fn domain_factor(u: &RadialField) -> f64 {
    extent(u) / (EXTENT_TARGET * u.grid().radius())
}

/// Carries `u` onto a copy of its grid whose radius puts the profile's extent
/// near half the domain; returns the field unchanged if it already fits.
fn refit_domain(u: &RadialField) -> Result<RadialField> {
    let f = domain_factor(u);
    if (0.8..=1.25).contains(&f) {
        return Ok(u.clone());
    }
    // a touching boundary hides the true extent: grow by a bounded step
    let f = if spreading(u) { f.max(2.0) } else { f };
    let grid = Arc::new(u.grid().scaled(f)?);
    Ok(u.resample(grid))
}

/// Exact fiber projection through grid dilation: the closed-form root `t_u`
/// of the mass-`c` components is applied by scaling the grid, so no
/// resampling is involved; the discrete `P` is then zeroed by projection.
fn fiber_place(u: &RadialField, c: f64, params: &ParameterSet) -> Result<RadialField> {
    let model = Model::new(*params, u.grid().clone());
    let base = u.abs().rescale_to_mass(c)?;
    let t = fiber_root(&model.components(base.values()), params)?.t_u;
    let v = base.on_scaled_grid(1.0 / t, t.powf(params.n() / 2.0))?;
    project_to_manifold(&v, c, params)
}

/// `minimize_gamma_from` on a domain that follows the profile: before and
/// after each solve the grid is dilated so that the profile's extent sits
/// near half the radius (small masses concentrate, large masses spread).
pub fn minimize_gamma_adaptive(params: &ParameterSet, c: f64, init: &RadialField, opts: &GammaOptions) -> Result<GammaReport> {
    check_manifold_regime(params)?;
    let mut u = fiber_place(init, c, params)?;
    for _ in 0..8 {
        let v = refit_domain(&u)?;
        if Arc::ptr_eq(v.grid(), u.grid()) {
            break;
        }
        u = project_to_manifold(&v, c, params)?;
    }
    // descend in chunks so the domain can follow the profile
    let chunk = GammaOptions {
        max_iters: opts.max_iters.min(ADAPT_CHUNK),
        ..*opts
    };
    let mut iters = 0;
    loop {
        let mut rep = minimize_gamma_from(params, c, &u, &chunk)?;
        iters += rep.report.iterations;
        rep.report.iterations = iters;
        let v = refit_domain(&rep.report.u)?;
        let fits = Arc::ptr_eq(v.grid(), rep.report.u.grid());
        if (fits && rep.report.status != Status::IterationCap) || iters >= opts.max_iters {
            return Ok(rep);
        }
        u = if fits { rep.report.u } else { project_to_manifold(&v, c, params)? };
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GammaRow {
    pub c: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub pohozaev_residual: f64,
    pub status: Status,
    pub iters: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct GammaCurve {
    pub rows: Vec<GammaRow>,
}

impl GammaCurve {
    pub fn max_increase(&self) -> f64 {
        self.rows
            .windows(2)
            .map(|w| w[1].gamma - w[0].gamma)
            .fold(0.0_f64, f64::max)
    }
}

/// Per-mass solves in increasing mass order, each warm-started from the
/// previous profile shape-scaled by `t0 = (c_next/c_prev)^{1/(N+2)}`.
pub fn gamma_curve(
    params: &ParameterSet,
    masses: &[f64],
    grid: &Arc<RadialGrid>,
    opts: &GammaOptions,
) -> Result<(GammaCurve, Vec<Result<GammaReport>>)> {
    check_manifold_regime(params)?;
    if masses.windows(2).any(|w| w[1] <= w[0]) || masses.iter().any(|&c| !(c > 0.0)) {
        return Err(Error::InvalidRegime("masses must be positive and strictly increasing".into()));
    }
    let mut reports = Vec::with_capacity(masses.len());
    let mut prev: Option<(f64, RadialField)> = None;
    for &c in masses {
        let r = match &prev {
            Some((cp, u)) => {
                let t0 = (c / cp).powf(1.0 / (params.n() + 2.0));
                let warm = minimize_gamma_adaptive(params, c, &u.shape_scale(t0), opts);
                // fall back to a cold start if the warm start fails
                match warm {
                    Ok(w) if w.report.status == Status::Converged => Ok(w),
                    other => match minimize_gamma_adaptive(params, c, &gaussian_seed(grid, c)?, opts) {
                        Ok(cold) => match other {
                            Ok(w) if w.report.value <= cold.report.value => Ok(w),
                            _ => Ok(cold),
                        },
                        Err(e) => other.or(Err(e)),
                    },
                }
            }
            None => minimize_gamma_adaptive(params, c, &gaussian_seed(grid, c)?, opts),
        };
        if let Ok(rep) = &r {
            prev = Some((c, rep.report.u.clone()));
        }
        reports.push(r);
    }
    let rows = masses
        .iter()
        .zip(&reports)
        .map(|(&c, r)| match r {
            Ok(g) => GammaRow {
                c,
                gamma: g.report.value,
                lambda: g.report.lambda,
                pohozaev_residual: g.report.pohozaev_residual,
                status: g.report.status,
                iters: g.report.iterations,
            },
            Err(_) => GammaRow {
                c,
                gamma: f64::NAN,
                lambda: f64::NAN,
                pohozaev_residual: f64::NAN,
                status: Status::IterationCap,
                iters: 0,
            },
        })
        .collect();
    Ok((GammaCurve { rows }, reports))
}

/// The fiber-maximum property: `I(u_t) ≤ I(u) + slack` over the scan, with
/// the maximizing scan point returned.
pub fn fiber_max_gap(comp: &FiberComponents, params: &ParameterSet, ts: &[f64]) -> (f64, f64) {
    let e1 = fiber_energy(comp, 1.0, params);
    ts.iter()
        .map(|&t| (t, fiber_energy(comp, t, params) - e1))
        .fold((1.0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a })
}

/// Lower bound on `‖∇u‖_q` over `V(c)` from `P(u) = 0` and the GN
/// inequality with constant `k`: `(A p / (q B K c^{(p−σ)/2}))^{1/(σ−q)}`.
pub fn gradient_lower_bound(params: &ParameterSet, k: f64, c: f64) -> f64 {
    let (q, p, s) = (params.q(), params.p(), params.sigma());
    let (a, b) = (params.fiber_exp_q(), params.fiber_exp_p());
    (a * p / (q * b * k * c.powf((p - s) / 2.0))).powf(1.0 / (s - q))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AsymptoticRow {
    pub c: f64,
    pub gamma: f64,
    pub lambda: f64,
    /// `‖∇u‖₂`
    pub grad2: f64,
    /// `‖∇u‖_q`
    pub gradq: f64,
    pub status: Status,
    /// Radius of the domain the profile was finally solved on.
    pub radius: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trend {
    pub name: String,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AsymptoticReport {
    pub rows: Vec<AsymptoticRow>,
    pub trends: Vec<Trend>,
    /// `γ(c_max) / γ(1)` when both masses are in the sweep.
    pub gamma_ratio: Option<f64>,
}

impl AsymptoticReport {
    pub fn all_hold(&self) -> bool {
        self.trends.iter().all(|t| t.holds)
    }

    pub fn trend(&self, name: &str) -> Option<bool> {
        self.trends.iter().find(|t| t.name == name).map(|t| t.holds)
    }
}

fn strictly(rows: &[&AsymptoticRow], f: impl Fn(&AsymptoticRow) -> f64, increasing: bool) -> bool {
    rows.len() >= 2
        && rows.windows(2).all(|w| {
            let (a, b) = (f(w[0]), f(w[1]));
            if increasing {
                b > a
            } else {
                b < a
            }
        })
}

/// Decade sweep `c = 10^k`, `k ∈ [lo, hi]`, through `gamma_curve`. Trends,
/// each as strict monotonicity over the sampled decades: for `c ≤ 1`, as `c`
/// decreases `I(u_c)` and the gradient norms increase and `λ_c` decreases;
/// for `c ≥ 1`, `γ` and the gradient norms decrease as `c` grows.
pub fn asymptotic_sweep(
    params: &ParameterSet,
    decades: (i32, i32),
    grid: &Arc<RadialGrid>,
    opts: &GammaOptions,
) -> Result<AsymptoticReport> {
    check_manifold_regime(params)?;
    if !params.classify().compactness_ok {
        return Err(Error::RegimeMismatch(
            "the asymptotic trends are only asserted under the compactness hypotheses".into(),
        ));
    }
    let (lo, hi) = decades;
    if hi <= lo {
        return Err(Error::InvalidRegime(format!("empty decade range [{lo}, {hi}]")));
    }
    let masses: Vec<f64> = (lo..=hi).map(|k| 10f64.powi(k)).collect();
    let (_, reports) = gamma_curve(params, &masses, grid, opts)?;
    let rows: Vec<AsymptoticRow> = masses
        .iter()
        .zip(&reports)
        .filter_map(|(&c, r)| {
            r.as_ref().ok().map(|g| {
                let comp = &g.report.components;
                AsymptoticRow {
                    c,
                    gamma: g.report.value,
                    lambda: g.report.lambda,
                    grad2: comp.a2.sqrt(),
                    gradq: comp.aq.powf(1.0 / params.q()),
                    status: g.report.status,
                    radius: g.report.u.grid().radius(),
                }
            })
        })
        .collect();
    // rows in decreasing mass for the small-mass side
    let small: Vec<&AsymptoticRow> = rows.iter().filter(|r| r.c <= 1.0).rev().collect();
    let large: Vec<&AsymptoticRow> = rows.iter().filter(|r| r.c >= 1.0).collect();
    let mut trends = Vec::new();
    let mut push = |name: &str, holds: bool| trends.push(Trend { name: name.into(), holds });
    if small.len() >= 2 {
        push("small_c_energy_increases", strictly(&small, |r| r.gamma, true));
        push("small_c_lambda_decreases", strictly(&small, |r| r.lambda, false));
        push("small_c_grad2_increases", strictly(&small, |r| r.grad2, true));
        push("small_c_gradq_increases", strictly(&small, |r| r.gradq, true));
    }
    if large.len() >= 2 {
        push("large_c_gamma_decreases", strictly(&large, |r| r.gamma, false));
        push("large_c_grad2_decreases", strictly(&large, |r| r.grad2, false));
        push("large_c_gradq_decreases", strictly(&large, |r| r.gradq, false));
    }
    let gamma_ratio = match (rows.iter().find(|r| r.c == 1.0), large.last()) {
        (Some(one), Some(last)) if last.c > 1.0 => Some(last.gamma / one.gamma),
        _ => None,
    };
    Ok(AsymptoticReport {
        rows,
        trends,
        gamma_ratio,
    })
}
