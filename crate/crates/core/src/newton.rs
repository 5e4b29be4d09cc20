//! Newton's method on the KKT system of `F(u)` subject to up to two
//! equality constraints `G_k(u) = g_k`, where `F` and `G_k` are [`Combo`]s.
//!
//! The Lagrangian Hessian is tridiagonal, so each step solves with the
//! tridiagonal matrix and a small Schur complement for the bordering rows.

use crate::error::{Error, Result};
use crate::functional::{Combo, Model};

#[derive(Debug, Clone, Copy)]
pub struct KktOptions {
    pub max_iters: usize,
    /// Stop when the relative KKT residual drops below this.
    pub tol: f64,
}

impl Default for KktOptions {
    fn default() -> Self {
        KktOptions {
            max_iters: 60,
            tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KktSolution {
    pub u: Vec<f64>,
    pub multipliers: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

/// Combined coefficients of `F - Σ μ_k G_k`.
fn lagrangian(objective: &Combo, constraints: &[(Combo, f64)], mu: &[f64]) -> Combo {
    constraints
        .iter()
        .zip(mu)
        .fold(*objective, |acc, ((g, _), m)| acc.add_scaled(g, -m))
}

struct Eval {
    grad_l: Vec<f64>,
    cons_grads: Vec<Vec<f64>>,
    cons_res: Vec<f64>,
    residual: f64,
}

fn evaluate(
    model: &Model,
    objective: &Combo,
    constraints: &[(Combo, f64)],
    mu: &[f64],
    u: &[f64],
) -> Eval {
    let params = model.params();
    let comp = model.components(u);
    let lag = lagrangian(objective, constraints, mu);
    let grad_l = model.gradient(&lag, u);
    let cons_grads: Vec<Vec<f64>> = constraints.iter().map(|(g, _)| model.gradient(g, u)).collect();
    let cons_res: Vec<f64> = constraints
        .iter()
        .map(|(g, target)| g.value(&comp, params) - target)
        .collect();
    let stat = model.stationarity(&lag, u);
    let feas = constraints
        .iter()
        .zip(&cons_res)
        .map(|((_, t), r)| r.abs() / t.abs().max(comp.scale()).max(1e-300))
        .fold(0.0_f64, f64::max);
    Eval {
        grad_l,
        cons_grads,
        cons_res,
        residual: stat.max(feas),
    }
}

/// Weighted least-squares multipliers for a given point.
fn initial_multipliers(model: &Model, objective: &Combo, constraints: &[(Combo, f64)], u: &[f64]) -> Vec<f64> {
    let k = constraints.len();
    if k == 0 {
        return Vec::new();
    }
    let w = model.grid().weights();
    let gf = model.gradient(objective, u);
    let gs: Vec<Vec<f64>> = constraints.iter().map(|(g, _)| model.gradient(g, u)).collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).zip(w).map(|((x, y), w)| x * y / w).sum::<f64>();
    let mut a = vec![[0.0; 2]; 2];
    let mut rhs = [0.0; 2];
    for i in 0..k {
        for j in 0..k {
            a[i][j] = dot(&gs[i], &gs[j]);
        }
        rhs[i] = dot(&gs[i], &gf);
    }
    solve_small(&a, &rhs, k).unwrap_or_else(|| vec![0.0; k])
}

fn solve_small(a: &[[f64; 2]], rhs: &[f64; 2], k: usize) -> Option<Vec<f64>> {
    match k {
        1 => {
            if a[0][0] == 0.0 {
                None
            } else {
                Some(vec![rhs[0] / a[0][0]])
            }
        }
        2 => {
            let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
            let norm = a[0][0].abs() * a[1][1].abs() + a[0][1].abs() * a[1][0].abs();
            if det == 0.0 || det.abs() < 1e-15 * norm {
                None
            } else {
                Some(vec![
                    (rhs[0] * a[1][1] - a[0][1] * rhs[1]) / det,
                    (a[0][0] * rhs[1] - a[1][0] * rhs[0]) / det,
                ])
            }
        }
        _ => None,
    }
}

/// Newton–KKT iteration from `u0` (full nodal vector, last entry is the
/// Dirichlet node). A step is accepted only if it reduces the residual.
pub fn kkt_polish(
    model: &Model,
    objective: &Combo,
    constraints: &[(Combo, f64)],
    u0: &[f64],
    opts: &KktOptions,
) -> Result<KktSolution> {
    if constraints.len() > 2 {
        return Err(Error::InvalidRegime("at most two constraints are supported".into()));
    }
    let m = model.unknowns();
    let k = constraints.len();
    let mut u = u0.to_vec();
    let mut mu = initial_multipliers(model, objective, constraints, &u);
    let mut ev = evaluate(model, objective, constraints, &mu, &u);
    let mut iterations = 0;
    while iterations < opts.max_iters && ev.residual > opts.tol {
        iterations += 1;
        let lag = lagrangian(objective, constraints, &mu);
        let h = model.hessian(&lag, &u);
        let neg: Vec<f64> = ev.grad_l.iter().map(|g| -g).collect();
        let Some(d0) = h.solve(&neg) else { break };
        let mut zs = Vec::with_capacity(k);
        for g in &ev.cons_grads {
            match h.solve(g) {
                Some(z) => zs.push(z),
                None => break,
            }
        }
        if zs.len() != k {
            break;
        }
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let mut s = vec![[0.0; 2]; 2];
        let mut rhs = [0.0; 2];
        for i in 0..k {
            for j in 0..k {
                s[i][j] = dot(&ev.cons_grads[i], &zs[j]);
            }
            rhs[i] = -ev.cons_res[i] - dot(&ev.cons_grads[i], &d0);
        }
        let dmu = if k == 0 {
            Vec::new()
        } else {
            match solve_small(&s, &rhs, k) {
                Some(v) => v,
                None => break,
            }
        };
        let mut du = d0;
        for (z, dm) in zs.iter().zip(&dmu) {
            for (x, zi) in du.iter_mut().zip(z) {
                *x += dm * zi;
            }
        }
        if du.iter().any(|x| !x.is_finite()) {
            break;
        }
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let mut trial = u.clone();
            for (x, d) in trial[..m].iter_mut().zip(&du) {
                *x += step * d;
            }
            let trial_mu: Vec<f64> = mu.iter().zip(&dmu).map(|(a, b)| a + step * b).collect();
            let tev = evaluate(model, objective, constraints, &trial_mu, &trial);
            if tev.residual.is_finite() && tev.residual < ev.residual {
                u = trial;
                mu = trial_mu;
                ev = tev;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Ok(KktSolution {
        u,
        multipliers: mu,
        residual: ev.residual,
        iterations,
    })
}
