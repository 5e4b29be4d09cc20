//! Global minimization `m(c) = inf_{S(c)} I` by a mass-projected gradient flow.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::RadialField;
use crate::functional::{fiber_energy, multiplier, Combo, FiberComponents, Model};
use crate::grid::RadialGrid;
use crate::newton::{kkt_polish, KktOptions};
use crate::params::{ParameterSet, RegimeTag};

/// Fiber energies below this count as a divergence witness.
pub const UNBOUNDED_LEVEL: f64 = -1e6;
/// `m(c) < -EPS0` is the "negative" side of the `c₁*` dichotomy.
pub const EPS0: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    Converged,
    UnboundedBelow,
    IterationCap,
    /// The best fiber point ran off to the scan boundary: the profile is
    /// spreading or concentrating and the value is only an upper bound.
    VanishingSuspected,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Status::Converged => "Converged",
            Status::UnboundedBelow => "UnboundedBelow",
            Status::IterationCap => "IterationCap",
            Status::VanishingSuspected => "VanishingSuspected",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowOptions {
    /// Initial time step; `None` means `1e-2 · h_min²`.
    pub tau0: Option<f64>,
    pub max_iters: usize,
    /// Rearrange every this many steps (0 disables).
    pub rearrange_every: usize,
    /// Relative Euler–Lagrange residual required for `Converged`.
    pub tol_grad: f64,
    /// Stall test: relative energy decrease below `energy_tol` over `energy_window` steps.
    pub energy_window: usize,
    pub energy_tol: f64,
    /// Newton–KKT polish once the flow has stalled.
    pub polish: bool,
    /// Restarts allowed from a better fiber point.
    pub max_fiber_restarts: usize,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions {
            tau0: None,
            max_iters: 20_000,
            rearrange_every: 25,
            tol_grad: 1e-6,
            energy_window: 100,
            energy_tol: 1e-12,
            polish: true,
            max_fiber_restarts: 3,
        }
    }
}

/// Extremes observed along a flow, for a-priori bound checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct FlowTrace {
    pub initial_energy: f64,
    pub min_energy: f64,
    pub max_aq: f64,
    /// Largest accepted energy increase between consecutive steps.
    pub max_energy_increase: f64,
    /// Largest `|m2 − c| / c` after a projection.
    pub max_mass_error: f64,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub u: RadialField,
    pub value: f64,
    pub lambda: f64,
    pub lambda_b: f64,
    /// `|P(u)| / (a2 + aq + ap)`
    pub pohozaev_residual: f64,
    /// Relative Euler–Lagrange residual with `λ = lambda`.
    pub el_residual: f64,
    pub status: Status,
    pub iterations: usize,
    pub mass: f64,
    pub components: FiberComponents,
    /// Fiber parameter of the witness when the value comes from a fiber point.
    pub witness_t: Option<f64>,
    pub trace: FlowTrace,
}

/// The log-spaced fiber scan `t ∈ 10^{[lo..hi]}`.
pub fn fiber_scan(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|k| 10f64.powf(lo + (hi - lo) * k as f64 / (points - 1) as f64))
        .collect()
}

/// `(t, I(u_t))` minimizing the closed-form fiber over the scan grid.
pub fn fiber_min(comp: &FiberComponents, params: &ParameterSet, ts: &[f64]) -> (f64, f64) {
    ts.iter()
        .map(|&t| (t, fiber_energy(comp, t, params)))
        .fold((1.0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a })
}

/// Golden-section refinement of `t ↦ I(u_t)` on `[lo, hi]` (log scale).
fn refine_fiber_min(comp: &FiberComponents, params: &ParameterSet, lo: f64, hi: f64) -> (f64, f64) {
    let f = |x: f64| fiber_energy(comp, x.exp(), params);
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..80 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    let x = 0.5 * (a + b);
    (x.exp(), f(x))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnboundedWitness {
    pub unbounded: bool,
    /// Scan point with the lowest fiber energy.
    pub t: f64,
    pub value: f64,
}

/// Leading behaviour of `I(u_t)` as `t → ∞` is negative.
fn fiber_diverges(comp: &FiberComponents, params: &ParameterSet) -> bool {
    let (a, b) = (params.fiber_exp_q(), params.fiber_exp_p());
    let lead = if (b - a).abs() <= 1e-12 * a {
        comp.aq / params.q() - comp.ap / params.p()
    } else if b > a.max(2.0) {
        -comp.ap
    } else {
        return false;
    };
    lead < 0.0
}

/// Fiber-ray test from `probe` rescaled to mass `c`: the 25-point scan over
/// `t ∈ 10^{[−6..6]}`, extended along the ray when the closed form diverges.
pub fn detect_unbounded(params: &ParameterSet, c: f64, probe: &RadialField) -> Result<UnboundedWitness> {
    let u = probe.abs().rescale_to_mass(c)?;
    let comp = crate::functional::components(&u, params);
    let (mut t, mut value) = fiber_min(&comp, params, &fiber_scan(-6.0, 6.0, 25));
    if value >= UNBOUNDED_LEVEL && fiber_diverges(&comp, params) {
        // the closed form tends to −∞; follow the ray past the scan window
        let mut s = 1e6;
        while s < 1e300 {
            s *= 10.0;
            let e = fiber_energy(&comp, s, params);
            if e < value {
                (t, value) = (s, e);
            }
            if value < UNBOUNDED_LEVEL {
                break;
            }
        }
    }
    Ok(UnboundedWitness {
        unbounded: value < UNBOUNDED_LEVEL,
        t,
        value,
    })
}

fn min_gap(grid: &RadialGrid) -> f64 {
    (0..grid.len() - 1).map(|i| grid.gap(i)).fold(f64::INFINITY, f64::min)
}

/// One semi-implicit step: `(M + τ(K₂ + K_q(u))) ũ = M u + τ N(u)`; the
/// q-Laplacian coefficient is frozen at `u`. Returns the unnormalized `ũ`.
pub(crate) fn flow_step(model: &Model, u: &[f64], tau: f64) -> Option<Vec<f64>> {
    let m = model.unknowns();
    let w = model.grid().weights();
    let mut a = model.lagged_stiffness(tau, tau, u);
    let nl = model.nonlinear_load(u);
    let mut rhs = vec![0.0; m];
    for j in 0..m {
        a.diag[j] += w[j];
        rhs[j] = w[j] * u[j] + tau * nl[j];
    }
    let mut x = a.solve(&rhs)?;
    if x.iter().any(|v| !v.is_finite()) {
        return None;
    }
    x.push(0.0);
    Some(x)
}

fn rescale_vec(model: &Model, mut v: Vec<f64>, c: f64) -> Option<Vec<f64>> {
    let m2 = model.components(&v).m2;
    if m2 <= 0.0 || !m2.is_finite() {
        return None;
    }
    let s = (c / m2).sqrt();
    v.iter_mut().for_each(|x| *x *= s);
    Some(v)
}

fn check_flow_regime(params: &ParameterSet) -> Result<()> {
    params.require_equation()?;
    if params.classify().tag == RegimeTag::Supercritical {
        return Err(Error::RegimeMismatch(
            "the global minimizer is unbounded below in the mass-supercritical regime".into(),
        ));
    }
    Ok(())
}

/// Dilate `u` to the best point of its fiber within `[1e-2, 1e2]`.
fn fiber_optimize(u: &RadialField, params: &ParameterSet, c: f64) -> Result<RadialField> {
    let comp = crate::functional::components(u, params);
    let (t, e) = fiber_min(&comp, params, &fiber_scan(-2.0, 2.0, 41));
    if e >= fiber_energy(&comp, 1.0, params) || (t - 1.0).abs() < 1e-12 {
        return Ok(u.clone());
    }
    let (t, _) = refine_fiber_min(&comp, params, (t / 1.3).max(1e-2), (t * 1.3).min(1e2));
    u.dilate(t).abs().rescale_to_mass(c)
}

/// Gaussian `e^{-r²/2}` on `grid` normalized to mass `c`.
pub fn gaussian_seed(grid: &Arc<RadialGrid>, c: f64) -> Result<RadialField> {
    RadialField::from_fn(grid.clone(), |r| (-r * r / 2.0).exp())?.rescale_to_mass(c)
}

/// Doublings tried by the mass continuation of a cold start.
const CONTINUATION_DOUBLINGS: usize = 8;

/// Cold start from a Gaussian. Where `m(c) < 0` is possible but the cold flow
/// lands on the zero level (a Gaussian may sit in the basin of vanishing),
/// a mass continuation is tried: the flow is rerun at `2^k c` until the
/// energy is negative, then carried back down to `c` by shape scaling. The
/// lower of the two end states is returned.
pub fn flow_minimize(params: &ParameterSet, c: f64, grid: &Arc<RadialGrid>, opts: &FlowOptions) -> Result<SolveReport> {
    let init = gaussian_seed(grid, c)?;
    let cold = flow_minimize_from(params, c, &init, opts)?;
    let tag = params.classify().tag;
    if cold.value < -EPS0
        || cold.status == Status::UnboundedBelow
        || !matches!(tag, RegimeTag::SubcriticalThreshold | RegimeTag::SubcriticalHigh)
    {
        return Ok(cold);
    }
    let mut masses = vec![c];
    let mut found = None;
    for _ in 0..CONTINUATION_DOUBLINGS {
        let cm = 2.0 * masses.last().unwrap();
        let rep = flow_minimize_from(params, cm, &gaussian_seed(grid, cm)?, opts)?;
        if rep.value < -EPS0 && rep.status != Status::UnboundedBelow {
            found = Some(rep.u);
            break;
        }
        masses.push(cm);
    }
    let Some(mut u) = found else { return Ok(cold) };
    let mut iterations = cold.iterations;
    let mut warm = None;
    for &cm in masses.iter().rev() {
        let t0 = (cm / u.mass()).powf(1.0 / (params.n() + 2.0));
        let rep = flow_minimize_from(params, cm, &u.shape_scale(t0), opts)?;
        iterations += rep.iterations;
        u = rep.u.clone();
        warm = Some(rep);
    }
    let mut warm = warm.expect("at least the target mass");
    warm.iterations = iterations;
    Ok(if warm.value < cold.value { warm } else { cold })
}

/// The flow from a caller-supplied start (e.g. a warm start from a nearby mass).
pub fn flow_minimize_from(params: &ParameterSet, c: f64, init: &RadialField, opts: &FlowOptions) -> Result<SolveReport> {
    check_flow_regime(params)?;
    if !(c > 0.0) {
        return Err(Error::InvalidRegime(format!("mass must be positive, got {c}")));
    }
    if init.grid().dim() != params.dim() {
        return Err(Error::GridMismatch);
    }
    let model = Model::new(*params, init.grid().clone());
    let mut start = fiber_optimize(&init.abs().rescale_to_mass(c)?, params, c)?;
    let mut total_iters = 0;
    let mut trace = FlowTrace {
        initial_energy: model.energy(start.values()),
        min_energy: f64::INFINITY,
        ..Default::default()
    };
    let mut restarts = 0;
    loop {
        let (mut report, stalled) = run_flow(&model, c, &start, opts, &mut trace)?;
        total_iters += report.iterations;
        report.iterations = total_iters;
        if report.status == Status::UnboundedBelow {
            report.trace = trace;
            return Ok(report);
        }
        if stalled && opts.polish && report.status != Status::Converged {
            if let Some(p) = polish(&model, c, &report, opts) {
                report = p;
            }
        }
        // never accept a point that is not optimal along its own fiber
        let (t, e) = fiber_min(&report.components, params, &fiber_scan(-6.0, 6.0, 25));
        if e < UNBOUNDED_LEVEL {
            report.status = Status::UnboundedBelow;
            report.witness_t = Some(t);
            report.value = e;
            report.trace = trace;
            return Ok(report);
        }
        let tol = 1e-10 * (1.0 + report.value.abs());
        if e < report.value - tol {
            if (1e-2..=1e2).contains(&t) && restarts < opts.max_fiber_restarts {
                restarts += 1;
                start = report.u.dilate(t).abs().rescale_to_mass(c)?;
                continue;
            }
            report.value = report.value.min(e);
            report.witness_t = Some(t);
            report.status = Status::VanishingSuspected;
        }
        report.trace = trace;
        return Ok(report);
    }
}

fn finalize(model: &Model, c: f64, u: Vec<f64>, status: Status, iterations: usize) -> Result<SolveReport> {
    let params = model.params();
    let comp = model.components(&u);
    let (la, lb) = multiplier(&comp, params)?;
    let field = model.field(u)?;
    let el = model.el_residual(field.values(), la);
    Ok(SolveReport {
        value: comp.energy(params),
        lambda: la,
        lambda_b: lb,
        pohozaev_residual: comp.pohozaev(params).abs() / comp.scale().max(1e-300),
        el_residual: el,
        status,
        iterations,
        mass: c,
        components: comp,
        witness_t: None,
        trace: FlowTrace::default(),
        u: field,
    })
}

/// Returns the report and whether the energy stalled.
fn run_flow(model: &Model, c: f64, start: &RadialField, opts: &FlowOptions, trace: &mut FlowTrace) -> Result<(SolveReport, bool)> {
    let params = *model.params();
    let tau_min = 1e-2 * min_gap(model.grid()).powi(2);
    let mut tau = opts.tau0.unwrap_or(tau_min);
    let mut u = start.values().to_vec();
    let mut e = model.energy(&u);
    if !e.is_finite() {
        return Err(Error::NonFiniteEnergy);
    }
    let mut history = vec![e];
    let mut it = 0;
    let mut stalled = false;
    let scan = fiber_scan(-6.0, 6.0, 25);
    while it < opts.max_iters {
        it += 1;
        let mut accepted = None;
        for _ in 0..60 {
            if let Some(v) = flow_step(model, &u, tau).and_then(|v| rescale_vec(model, v, c)) {
                let ev = model.energy(&v);
                if ev.is_finite() && ev <= e + 1e-10 * (1.0 + e.abs()) {
                    accepted = Some((v, ev));
                    break;
                }
            }
            tau *= 0.5;
            if tau < 1e-30 {
                break;
            }
        }
        let Some((mut v, mut ev)) = accepted else {
            stalled = true;
            break;
        };
        tau = (tau * 1.5).min(1e8);
        if opts.rearrange_every > 0 && it % opts.rearrange_every == 0 {
            let f = model.field(v.iter().map(|x| x.abs()).collect())?;
            if let Ok(r) = f.decreasing_rearrangement() {
                let er = model.energy(r.values());
                if er <= ev {
                    v = r.into_values();
                    ev = er;
                }
            }
        }
        let comp = model.components(&v);
        trace.max_aq = trace.max_aq.max(comp.aq);
        trace.min_energy = trace.min_energy.min(ev);
        trace.max_energy_increase = trace.max_energy_increase.max(ev - e);
        trace.max_mass_error = trace.max_mass_error.max((comp.m2 - c).abs() / c);
        u = v;
        e = ev;
        history.push(e);
        if it % 50 == 0 {
            let (t, fe) = fiber_min(&comp, &params, &scan);
            if fe < UNBOUNDED_LEVEL {
                let mut rep = finalize(model, c, u, Status::UnboundedBelow, it)?;
                rep.value = fe;
                rep.witness_t = Some(t);
                return Ok((rep, false));
            }
        }
        if opts.polish && it % 200 == 0 {
            let rep = finalize(model, c, u.clone(), Status::IterationCap, it)?;
            if rep.el_residual < 1e-2 {
                if let Some(p) = polish(model, c, &rep, opts) {
                    if p.status == Status::Converged {
                        return Ok((p, false));
                    }
                }
            }
        }
        let k = history.len();
        if k > opts.energy_window {
            let old = history[k - 1 - opts.energy_window];
            if old - e <= opts.energy_tol * (1.0 + e.abs()) {
                stalled = true;
                break;
            }
        }
    }
    let rep = finalize(model, c, u, Status::IterationCap, it)?;
    let status = if stalled && rep.el_residual <= opts.tol_grad {
        if converged(&rep, opts) {
            Status::Converged
        } else {
            Status::VanishingSuspected
        }
    } else {
        Status::IterationCap
    };
    Ok((SolveReport { status, ..rep }, stalled))
}

/// Scaled Pohozaev residual above which a stationary profile is taken to be
/// held by the truncation boundary rather than being a whole-space solution.
pub const TRUNCATION_POHOZAEV: f64 = 1e-4;

fn converged(rep: &SolveReport, opts: &FlowOptions) -> bool {
    rep.el_residual <= opts.tol_grad && rep.pohozaev_residual <= TRUNCATION_POHOZAEV
}

/// Newton–KKT on `I` with the mass constraint; `Some` only if the result
/// is a nonnegative profile with no higher energy than `report`.
fn polish(model: &Model, c: f64, report: &SolveReport, opts: &FlowOptions) -> Option<SolveReport> {
    let sol = kkt_polish(
        model,
        &Combo::ENERGY,
        &[(Combo::HALF_MASS, 0.5 * c)],
        report.u.values(),
        &KktOptions::default(),
    )
    .ok()?;
    let v = rescale_vec(model, sol.u, c)?;
    if v.iter().any(|x| *x < 0.0 && x.abs() > 1e-10 * v[0].abs()) {
        return None;
    }
    let ev = model.energy(&v);
    if ev > report.value + 1e-10 * (1.0 + report.value.abs()) {
        return None;
    }
    let v: Vec<f64> = v.into_iter().map(f64::abs).collect();
    let mut rep = finalize(model, c, v, Status::IterationCap, report.iterations).ok()?;
    if rep.el_residual <= opts.tol_grad {
        rep.status = if converged(&rep, opts) {
            Status::Converged
        } else {
            Status::VanishingSuspected
        };
    }
    (rep.el_residual <= report.el_residual).then_some(rep)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MassRow {
    pub c: f64,
    pub m: f64,
    pub status: Status,
    pub lambda: f64,
    pub pohozaev_residual: f64,
    pub iters: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct MassCurve {
    pub rows: Vec<MassRow>,
}

impl MassCurve {
    /// Largest increase between consecutive rows (0 when non-increasing).
    pub fn max_increase(&self) -> f64 {
        self.rows
            .windows(2)
            .map(|w| w[1].m - w[0].m)
            .fold(0.0_f64, f64::max)
    }
}

fn row_from(c: f64, r: &Result<SolveReport>) -> MassRow {
    match r {
        Ok(rep) => MassRow {
            c,
            m: rep.value,
            status: rep.status,
            lambda: rep.lambda,
            pohozaev_residual: rep.pohozaev_residual,
            iters: rep.iterations,
        },
        Err(_) => MassRow {
            c,
            m: f64::NAN,
            status: Status::IterationCap,
            lambda: f64::NAN,
            pohozaev_residual: f64::NAN,
            iters: 0,
        },
    }
}

/// Independent flows per mass, in parallel; rows keep the input order.
pub fn mass_energy_curve(
    params: &ParameterSet,
    masses: &[f64],
    grid: &Arc<RadialGrid>,
    opts: &FlowOptions,
) -> Result<(MassCurve, Vec<Result<SolveReport>>)> {
    check_flow_regime(params)?;
    if masses.windows(2).any(|w| w[1] <= w[0]) || masses.iter().any(|&c| !(c > 0.0)) {
        return Err(Error::InvalidRegime("masses must be positive and strictly increasing".into()));
    }
    let reports: Vec<Result<SolveReport>> = masses
        .par_iter()
        .map(|&c| flow_minimize(params, c, grid, opts))
        .collect();
    let rows = masses.iter().zip(&reports).map(|(&c, r)| row_from(c, r)).collect();
    Ok((MassCurve { rows }, reports))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BisectionStep {
    pub c: f64,
    pub m: f64,
    pub status: Status,
    pub negative: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct C1Star {
    pub c1_star: f64,
    pub bracket: (f64, f64),
    pub log: Vec<BisectionStep>,
}

/// Bisection on the sign of `m(c) + EPS0`. The upper end doubles until the
/// flow value is below `-EPS0` (at most `2^20` times the initial guess).
/// Each flow is warm-started from the most recent negative-energy profile.
pub fn find_c1_star(
    params: &ParameterSet,
    bracket: Option<(f64, f64)>,
    tol: f64,
    grid: &Arc<RadialGrid>,
    opts: &FlowOptions,
) -> Result<C1Star> {
    check_flow_regime(params)?;
    let tag = params.classify().tag;
    if !matches!(tag, RegimeTag::SubcriticalThreshold | RegimeTag::SubcriticalHigh) {
        return Err(Error::RegimeMismatch(format!(
            "c1* is only finite and positive for p2* <= p < pq*, regime is {tag}"
        )));
    }
    let (mut lo, mut hi) = bracket.unwrap_or((1e-2, 1.0));
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::BracketInvalid(format!("[{lo}, {hi}]")));
    }
    let mut log = Vec::new();
    let mut warm: Option<RadialField> = None;
    let eval = |c: f64, warm: &mut Option<RadialField>, log: &mut Vec<BisectionStep>| -> Result<bool> {
        let rep = match warm.as_ref() {
            Some(w) => {
                // shape-scale the previous negative-energy profile to the new mass
                let t0 = (c / w.mass()).powf(1.0 / (params.n() + 2.0));
                flow_minimize_from(params, c, &w.shape_scale(t0), opts)?
            }
            None => flow_minimize(params, c, grid, opts)?,
        };
        let negative = rep.value < -EPS0;
        log.push(BisectionStep {
            c,
            m: rep.value,
            status: rep.status,
            negative,
        });
        if negative {
            *warm = Some(rep.u.clone());
        }
        Ok(negative)
    };
    let hi0 = hi;
    while !eval(hi, &mut warm, &mut log)? {
        lo = hi;
        hi *= 2.0;
        if hi > hi0 * 2f64.powi(20) {
            return Err(Error::BracketInvalid(format!("m(c) >= -{EPS0} up to c = {hi}")));
        }
    }
    if eval(lo, &mut warm, &mut log)? {
        return Err(Error::BracketInvalid(format!("m({lo}) < -{EPS0}: lower end is not on the zero side")));
    }
    while (hi - lo) > tol * 0.5 * (hi + lo) {
        let mid = 0.5 * (lo + hi);
        if eval(mid, &mut warm, &mut log)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(C1Star {
        c1_star: 0.5 * (lo + hi),
        bracket: (lo, hi),
        log,
    })
}

/// A priori bound on `‖∇u‖_q^q` along an energy-decreasing path in the
/// mass-subcritical regime: from `I(u) ≥ x/q − (K/p) x^{σ/q} c^{(p−σ)/2}`
/// with `x = ‖∇u‖_q^q` and `I(u) ≤ e0`, `x` cannot exceed the largest root of
/// `x/q − (K/p) c^{(p−σ)/2} x^{σ/q} = e0`.
pub fn aq_bound(params: &ParameterSet, k: f64, c: f64, e0: f64) -> Result<f64> {
    let (q, p, s) = (params.q(), params.p(), params.sigma());
    if !(s < q) {
        return Err(Error::RegimeMismatch(format!("sigma = {s} >= q = {q}: no coercivity bound")));
    }
    let kappa = k / p * c.powf((p - s) / 2.0);
    let f = |x: f64| x / q - kappa * x.powf(s / q) - e0;
    let mut hi = 1.0;
    while f(hi) <= 0.0 {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::BracketNotFound { lo: 0.0, hi });
        }
    }
    // f decreases up to x* and increases after it, so the last crossing is unique
    let x_star = (kappa * s).powf(q / (q - s));
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 && mid > x_star {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionStep {
    pub c: f64,
    pub unbounded: bool,
    /// Lowest fiber energy on the ray scan.
    pub ray_min: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct C2Transition {
    pub estimate: f64,
    pub bracket: (f64, f64),
    pub log: Vec<TransitionStep>,
    /// Flow from the probe at the lower bracket end: `(value, status)`.
    pub flow_below: (f64, Status),
    /// Flow from the probe at the upper bracket end.
    pub flow_above: (f64, Status),
}

impl C2Transition {
    /// The flows agree with the ray classification at both bracket ends.
    pub fn flows_confirm(&self) -> bool {
        self.flow_below.0 >= -EPS0
            && self.flow_below.1 != Status::UnboundedBelow
            && self.flow_above.1 == Status::UnboundedBelow
    }
}

/// Mass-critical threshold between `m(c) = 0` and `m(c) = −∞`: bisection on
/// the fiber-ray test from `probe` (the optimizer of the Weinstein quotient
/// is the extremal ray), confirmed by flows started from the probe at both
/// ends of the final bracket.
pub fn find_c2_transition(
    params: &ParameterSet,
    probe: &RadialField,
    bracket: Option<(f64, f64)>,
    tol: f64,
    opts: &FlowOptions,
) -> Result<C2Transition> {
    params.require_equation()?;
    if params.classify().tag != RegimeTag::MassCritical {
        return Err(Error::InvalidRegime(format!(
            "the m = 0 / m = -inf dichotomy needs p = pq*, regime is {}",
            params.classify().tag
        )));
    }
    let mut log = Vec::new();
    let mut test = |c: f64| -> Result<bool> {
        let w = detect_unbounded(params, c, probe)?;
        log.push(TransitionStep {
            c,
            unbounded: w.unbounded,
            ray_min: w.value,
        });
        Ok(w.unbounded)
    };
    let (mut lo, mut hi) = bracket.unwrap_or((1.0, 2.0));
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::BracketInvalid(format!("[{lo}, {hi}]")));
    }
    let mut k = 0;
    while test(lo)? {
        hi = lo;
        lo *= 0.5;
        k += 1;
        if k > 60 {
            return Err(Error::BracketInvalid("no bounded ray found".into()));
        }
    }
    while !test(hi)? {
        lo = hi;
        hi *= 2.0;
        k += 1;
        if k > 60 {
            return Err(Error::BracketInvalid("no unbounded ray found".into()));
        }
    }
    while (hi - lo) > tol * 0.5 * (hi + lo) {
        let mid = 0.5 * (lo + hi);
        if test(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let flow_at = |c: f64| -> Result<(f64, Status)> {
        let t0 = (c / probe.mass()).powf(1.0 / (params.n() + 2.0));
        let rep = flow_minimize_from(params, c, &probe.abs().shape_scale(t0), opts)?;
        Ok((rep.value, rep.status))
    };
    Ok(C2Transition {
        estimate: 0.5 * (lo + hi),
        bracket: (lo, hi),
        log,
        flow_below: flow_at(lo)?,
        flow_above: flow_at(hi)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fiber_scan_grid() {
        let t = fiber_scan(-6.0, 6.0, 25);
        assert_eq!(t.len(), 25);
        assert!((t[0] - 1e-6).abs() < 1e-20 && (t[24] - 1e6).abs() < 1e-6);
        assert!((t[12] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn supercritical_rays_are_unbounded() {
        let ps = ParameterSet::validate(3, 2.5, 3.75, 1.0).unwrap();
        let grid = Arc::new(RadialGrid::with_first_node(3, 20.0, 512, 1e-3).unwrap());
        let probe = gaussian_seed(&grid, 1.0).unwrap();
        for c in [1e-3, 1.0, 1e3] {
            assert!(detect_unbounded(&ps, c, &probe).unwrap().unbounded);
        }
        assert!(matches!(
            flow_minimize(&ps, 1.0, &grid, &FlowOptions::default()),
            Err(Error::RegimeMismatch(_))
        ));
    }
}
