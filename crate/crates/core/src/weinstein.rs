//! Weinstein-quotient minimization: ground state `Q`, sharp GN constant `K`,
//! and the mass-critical threshold `c₂*`.
//!
//! The minimizer is found by preconditioned descent on `log J` with
//! rearrangement and amplitude normalization, then polished by Newton on the
//! action `σ/q·aq + (p−σ)/2·m2 − ap/p`, whose critical points are the
//! solutions `Q` of `−σΔ_q Q + (p−σ)Q = |x|^{-b}Q^{p−1}`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::RadialField;
use crate::functional::{weinstein_quotient, Combo, FiberComponents, Model};
use crate::grid::RadialGrid;
use crate::newton::{kkt_polish, KktOptions};
use crate::params::{ParameterSet, EQUALITY_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeinsteinOptions {
    pub restarts: usize,
    pub seed: u64,
    pub max_iters: usize,
    /// Converged when `J` drops by less than `stall_tol` (relative) over `stall_window` iterations.
    pub stall_window: usize,
    pub stall_tol: f64,
    /// Amplitude of the random smooth perturbation applied to restarts after the first.
    pub perturbation: f64,
    /// Newton polish on the action functional.
    pub polish: bool,
}

impl Default for WeinsteinOptions {
    fn default() -> Self {
        WeinsteinOptions {
            restarts: 5,
            seed: 0,
            max_iters: 100_000,
            stall_window: 50,
            stall_tol: 1e-10,
            perturbation: 0.2,
            polish: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityResiduals {
    /// `|∫|x|^{-b}Q^p − p‖Q‖₂²| / (p‖Q‖₂²)`
    pub l2_identity: f64,
    /// `|‖∇Q‖_q^q − (1/p)∫|x|^{-b}Q^p| / ((1/p)∫|x|^{-b}Q^p)`
    pub virial: f64,
}

#[derive(Debug, Clone)]
pub struct GnResult {
    pub params: ParameterSet,
    /// Ground state of `−σΔ_q Q + (p−σ)Q = |x|^{-b}Q^{p−1}` (on a dilated copy of the input grid).
    pub q: RadialField,
    /// Minimizer normalized to `‖v‖₂ = ‖∇v‖_q = 1`.
    pub v_star: RadialField,
    pub j_min: f64,
    pub k: f64,
    /// `‖ω‖₂` for `ω = (J_min·p)^{1/(p−2)} v*`, so that `K = p / ‖ω‖₂^{p−2}`.
    pub omega_norm: f64,
    pub el_residual: f64,
    pub identity_residuals: IdentityResiduals,
    /// Final `J` of each restart, in restart order.
    pub restarts: Vec<f64>,
    pub iterations: usize,
}

impl GnResult {
    /// Spread `max − min` of the restart values.
    pub fn restart_spread(&self) -> f64 {
        let lo = self.restarts.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = self.restarts.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    }
}

/// Amplitude and length `(a, l)` with `a·u(x/l)` meeting two log-linear targets:
/// each target `(ea, el, rhs)` requires `ea·ln a + el·ln l = rhs`.
fn solve_scaling(t1: (f64, f64, f64), t2: (f64, f64, f64)) -> Option<(f64, f64)> {
    let det = t1.0 * t2.1 - t1.1 * t2.0;
    if det.abs() < 1e-14 {
        return None;
    }
    let la = (t1.2 * t2.1 - t1.1 * t2.2) / det;
    let ll = (t1.0 * t2.2 - t2.0 * t1.2) / det;
    Some((la.exp(), ll.exp()))
}

/// `a·u(x/l)` with `‖·‖₂ = ‖∇·‖_q = 1`, exact via grid scaling.
pub fn normalize_unit(u: &RadialField, params: &ParameterSet) -> Result<RadialField> {
    let comp = crate::functional::components(u, params);
    if comp.m2 <= 0.0 || comp.aq <= 0.0 {
        return Err(Error::ZeroField);
    }
    let (n, q) = (params.n(), params.q());
    // m2: a^2 l^N ; aq: a^q l^{N−q}
    let (a, l) = solve_scaling((2.0, n, -comp.m2.ln()), (q, n - q, -comp.aq.ln()))
        .ok_or_else(|| Error::InvalidRegime("degenerate normalization".into()))?;
    u.on_scaled_grid(l, a)
}

/// `a·u(x/l)` with `aq = m2` and `ap = p·m2`: the scaling that turns a
/// Weinstein critical point into a solution of the action equation.
pub fn to_solution_scale(u: &RadialField, params: &ParameterSet) -> Result<RadialField> {
    let comp = crate::functional::components(u, params);
    if comp.m2 <= 0.0 || comp.aq <= 0.0 || comp.ap <= 0.0 {
        return Err(Error::ZeroField);
    }
    let (q, p, b) = (params.q(), params.p(), params.b());
    // a^{q−2} l^{−q} = m2/aq ; a^{p−2} l^{−b} = p m2/ap
    let (a, l) = solve_scaling(
        (q - 2.0, -q, (comp.m2 / comp.aq).ln()),
        (p - 2.0, -b, (p * comp.m2 / comp.ap).ln()),
    )
    .ok_or_else(|| Error::InvalidRegime("degenerate solution scaling".into()))?;
    u.on_scaled_grid(l, a)
}

fn log_j(comp: &FiberComponents, params: &ParameterSet) -> f64 {
    let s = params.sigma();
    (s / params.q()) * comp.aq.ln() + 0.5 * (params.p() - s) * comp.m2.ln() - comp.ap.ln()
}

struct Descent {
    u: RadialField,
    j: f64,
    iterations: usize,
    converged: bool,
}

fn descend(model: &Model, init: &RadialField, opts: &WeinsteinOptions) -> Result<Descent> {
    let params = *model.params();
    let (q, p, s) = (params.q(), params.p(), params.sigma());
    let m = model.unknowns();
    let mut u = init.abs().rescale_to_mass(1.0)?;
    if let Ok(r) = u.decreasing_rearrangement() {
        u = r;
    }
    let mut comp = model.components(u.values());
    let mut lj = log_j(&comp, &params);
    let mut history = vec![lj];
    let mut step0 = 1.0_f64;
    let mut converged = false;
    let mut it = 0;
    while it < opts.max_iters {
        it += 1;
        let g = model.gradient(
            &Combo {
                c2: 0.0,
                cq: s / comp.aq,
                cm: (p - s) / comp.m2,
                cp: p / comp.ap,
            },
            u.values(),
        );
        let mut pre = model.lagged_stiffness(1e-3 / comp.a2.max(1e-300), s * (q - 1.0) / comp.aq, u.values());
        let w = model.grid().weights();
        for j in 0..m {
            pre.diag[j] += (p - s) * w[j] / comp.m2;
        }
        let neg: Vec<f64> = g.iter().map(|x| -x).collect();
        let Some(dir) = pre.solve(&neg) else {
            return Err(Error::NoConvergence {
                iterations: it,
                detail: "singular preconditioner".into(),
            });
        };
        let slope: f64 = g.iter().zip(&dir).map(|(a, b)| a * b).sum();
        if slope >= 0.0 {
            converged = true;
            break;
        }
        let mut step = step0.min(1.0);
        let mut accepted = None;
        for _ in 0..40 {
            let mut vals = u.values().to_vec();
            for (x, d) in vals[..m].iter_mut().zip(&dir) {
                *x += step * d;
            }
            let c = model.components(&vals);
            if c.ap > 0.0 && c.aq > 0.0 && c.m2 > 0.0 {
                let l = log_j(&c, &params);
                if l.is_finite() && l <= lj + 1e-4 * step * slope {
                    accepted = Some(vals);
                    break;
                }
            }
            step *= 0.5;
        }
        let Some(vals) = accepted else {
            converged = true;
            break;
        };
        step0 = (step * 2.0).min(1.0);
        let mut next = model.field(vals)?.abs();
        if let Ok(r) = next.decreasing_rearrangement() {
            let cr = model.components(r.values());
            let cn = model.components(next.values());
            if log_j(&cr, &params) <= log_j(&cn, &params) {
                next = r;
            }
        }
        u = next.rescale_to_mass(1.0)?;
        comp = model.components(u.values());
        lj = log_j(&comp, &params);
        history.push(lj);
        let k = history.len();
        if k > opts.stall_window {
            let old = history[k - 1 - opts.stall_window];
            // log J differences are relative J changes
            if old - lj < opts.stall_tol {
                converged = true;
                break;
            }
        }
    }
    Ok(Descent {
        j: lj.exp(),
        u,
        iterations: it,
        converged,
    })
}

struct Candidate {
    q: RadialField,
    j: f64,
    residual: f64,
    iterations: usize,
}

fn solve_from(params: &ParameterSet, grid: &Arc<RadialGrid>, init: &RadialField, opts: &WeinsteinOptions) -> Result<Candidate> {
    let model = Model::new(*params, grid.clone());
    let d = descend(&model, init, opts)?;
    let mut q = to_solution_scale(&d.u, params)?;
    let action = Combo::weinstein_action(params);
    let qmodel = Model::new(*params, q.grid().clone());
    if opts.polish {
        let sol = kkt_polish(&qmodel, &action, &[], q.values(), &KktOptions::default())?;
        let cand = qmodel.field(sol.u)?;
        let cc = qmodel.components(cand.values());
        // accept the Newton point only if it is a positive profile with J no worse
        if cand.values().iter().all(|&v| v >= -1e-12 * cand.values()[0].abs())
            && cc.ap > 0.0
            && weinstein_quotient(&cc, params)? <= d.j * (1.0 + 1e-6)
        {
            q = cand.abs();
        }
    }
    let comp = qmodel.components(q.values());
    let j = weinstein_quotient(&comp, params)?;
    let residual = qmodel
        .strong_terms(q.values())
        .residual(0.0, params.sigma(), params.p() - params.sigma(), 1.0);
    if !d.converged && residual > 1e-4 {
        return Err(Error::NoConvergence {
            iterations: d.iterations,
            detail: format!("Weinstein descent stalled with residual {residual:.3e}"),
        });
    }
    Ok(Candidate {
        q,
        j,
        residual,
        iterations: d.iterations,
    })
}

/// Smooth random perturbation of the Gaussian seed `e^{-r^2}`.
fn seed_profile(grid: &Arc<RadialGrid>, seed: u64, amplitude: f64) -> Result<RadialField> {
    if amplitude == 0.0 {
        return RadialField::from_fn(grid.clone(), |r| (-r * r).exp());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes: Vec<(f64, f64)> = (0..4)
        .map(|k| (rng.gen_range(-1.0..1.0) * amplitude, 0.5 + k as f64))
        .collect();
    let width = 1.0 + amplitude * rng.gen_range(-1.0..1.0);
    RadialField::from_fn(grid.clone(), |r| {
        let pert: f64 = modes.iter().map(|(a, f)| a * (f * r).cos()).sum();
        ((-r * r / (width * width)).exp() * (1.0 + pert)).abs()
    })
}

fn check_params(params: &ParameterSet, grid: &RadialGrid) -> Result<()> {
    if params.p() >= params.qb_star() || params.p() <= 2.0 {
        return Err(Error::InvalidRegime(format!(
            "p = {} outside (2, {})",
            params.p(),
            params.qb_star()
        )));
    }
    if params.q() <= 2.0 {
        return Err(Error::InvalidRegime("the Weinstein solver requires q > 2".into()));
    }
    if grid.dim() != params.dim() {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

fn finish(params: &ParameterSet, best: Candidate, restarts: Vec<f64>, iterations: usize) -> Result<GnResult> {
    let comp = crate::functional::components(&best.q, params);
    let p = params.p();
    let v_star = normalize_unit(&best.q, params)?;
    let j = best.j;
    let identity_residuals = IdentityResiduals {
        l2_identity: (comp.ap - p * comp.m2).abs() / (p * comp.m2),
        virial: (comp.aq - comp.ap / p).abs() / (comp.ap / p),
    };
    Ok(GnResult {
        params: *params,
        q: best.q.with_metadata(format!("weinstein ground state, J_min={j:.17e}")),
        v_star,
        j_min: j,
        k: 1.0 / j,
        omega_norm: (j * p).powf(1.0 / (p - 2.0)),
        el_residual: best.residual,
        identity_residuals,
        restarts,
        iterations,
    })
}

/// Best of `opts.restarts` seeded runs; restarts run in parallel and are
/// merged by minimal `J` (lowest index on ties).
pub fn minimize_weinstein(params: &ParameterSet, grid: &Arc<RadialGrid>, opts: &WeinsteinOptions) -> Result<GnResult> {
    check_params(params, grid)?;
    let runs: Vec<Result<Candidate>> = (0..opts.restarts.max(1))
        .into_par_iter()
        .map(|k| {
            let amp = if k == 0 { 0.0 } else { opts.perturbation };
            let init = seed_profile(grid, opts.seed.wrapping_add(k as u64), amp)?;
            solve_from(params, grid, &init, opts)
        })
        .collect();
    let mut restarts = Vec::with_capacity(runs.len());
    let mut best: Option<Candidate> = None;
    let mut first_err = None;
    let mut iterations = 0;
    for r in runs {
        match r {
            Ok(c) => {
                restarts.push(c.j);
                iterations += c.iterations;
                if best.as_ref().is_none_or(|b| c.j < b.j) {
                    best = Some(c);
                }
            }
            Err(e) => {
                restarts.push(f64::NAN);
                first_err.get_or_insert(e);
            }
        }
    }
    match best {
        Some(b) => finish(params, b, restarts, iterations),
        None => Err(first_err.unwrap_or(Error::NoConvergence {
            iterations: 0,
            detail: "no restart".into(),
        })),
    }
}

/// Single run from a caller-supplied profile.
pub fn minimize_weinstein_from(params: &ParameterSet, init: &RadialField, opts: &WeinsteinOptions) -> Result<GnResult> {
    check_params(params, init.grid())?;
    let c = solve_from(params, init.grid(), init, opts)?;
    let j = c.j;
    let it = c.iterations;
    finish(params, c, vec![j], it)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalMass {
    /// `q^{2/(q−p)} ‖ω‖₂^{2(p−2)/(p−q)}`
    pub c2_star: f64,
    /// `(p/(q K))^{2/(p−q)}`
    pub c2_star_alt: f64,
    pub relative_gap: f64,
}

/// Both closed forms of the threshold from `‖ω‖₂` and `K` at `p = p_q*`.
pub fn critical_mass_from(params: &ParameterSet, omega_norm: f64, k: f64) -> Result<CriticalMass> {
    let (q, p) = (params.q(), params.p());
    let ps = params.pq_star();
    if (p - ps).abs() > EQUALITY_TOL * ps {
        return Err(Error::InvalidRegime(format!("p = {p} is not the mass-critical exponent {ps}")));
    }
    let c2_star = q.powf(2.0 / (q - p)) * omega_norm.powf(2.0 * (p - 2.0) / (p - q));
    let c2_star_alt = (p / (q * k)).powf(2.0 / (p - q));
    let relative_gap = (c2_star - c2_star_alt).abs() / c2_star_alt;
    if relative_gap > 1e-6 {
        return Err(Error::NoConvergence {
            iterations: 0,
            detail: format!("closed forms of c2* disagree by {relative_gap:.3e}"),
        });
    }
    Ok(CriticalMass {
        c2_star,
        c2_star_alt,
        relative_gap,
    })
}

/// `c₂*` from a fresh Weinstein solve at `p = p_q*`.
pub fn critical_mass_c2(params: &ParameterSet, grid: &Arc<RadialGrid>, opts: &WeinsteinOptions) -> Result<(CriticalMass, GnResult)> {
    let ps = params.pq_star();
    if (params.p() - ps).abs() > EQUALITY_TOL * ps {
        return Err(Error::InvalidRegime(format!(
            "p = {} is not the mass-critical exponent {ps}",
            params.p()
        )));
    }
    let gn = minimize_weinstein(params, grid, opts)?;
    let cm = critical_mass_from(params, gn.omega_norm, gn.k)?;
    Ok((cm, gn))
}
