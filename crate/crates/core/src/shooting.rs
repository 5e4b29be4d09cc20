//! Independent shooting solver for the radial ground-state ODE
//!
//! ```text
//! σ r^{1−N} (r^{N−1} |ω'|^{q−2} ω')' = (p−σ) ω − r^{−b} ω^{p−1},  ω(0) = s, ω'(0) = 0.
//! ```
//!
//! Integrated with RK4 in the flux variable `φ = r^{N−1}|ω'|^{q−2}ω'`, which
//! keeps the right-hand side finite where `ω'` vanishes. The initial height
//! is bisected between trajectories that cross zero and trajectories that
//! turn back up before reaching zero.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::RadialField;
use crate::grid::{sphere_measure, RadialGrid};
use crate::interp::Pchip;
use crate::params::ParameterSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    /// `ω` reached a negative value.
    Crossing,
    /// `ω'` became positive while `ω > 0`.
    Turnback,
    /// Neither happened before the end of the mesh.
    Undecided,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootingOptions {
    /// Start radius relative to the outer radius.
    pub start_rel: f64,
    /// Number of RK4 steps over the uniform part of the mesh.
    pub steps: usize,
    /// Relative bracket width at which bisection stops.
    pub rel_width: f64,
    pub max_bisections: usize,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        ShootingOptions {
            start_rel: 1e-6,
            steps: 200_000,
            rel_width: 1e-12,
            max_bisections: 200,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ShootingResult {
    /// The shot profile sampled on the requested grid.
    pub profile: RadialField,
    /// Converged initial height.
    pub s: f64,
    /// Final bracket `(s_lo, s_hi)` with the outcomes at each end.
    pub bracket: (f64, f64),
    pub outcomes: (Outcome, Outcome),
    /// `(s, outcome)` for every trajectory evaluated during bisection.
    pub log: Vec<(f64, Outcome)>,
    /// `1 / J(ω)` from the shooting mesh's own trapezoid quadrature.
    pub k: f64,
}

struct Ode {
    n: f64,
    q: f64,
    p: f64,
    b: f64,
    sigma: f64,
}

impl Ode {
    fn new(params: &ParameterSet) -> Self {
        Ode {
            n: params.n(),
            q: params.q(),
            p: params.p(),
            b: params.b(),
            sigma: params.sigma(),
        }
    }

    fn slope(&self, r: f64, phi: f64) -> f64 {
        let x = phi / r.powf(self.n - 1.0);
        x.signum() * x.abs().powf(1.0 / (self.q - 1.0))
    }

    fn rhs(&self, r: f64, w: f64, phi: f64) -> (f64, f64) {
        let src = (self.p - self.sigma) * w - r.powf(-self.b) * w.abs().powf(self.p - 2.0) * w;
        (self.slope(r, phi), r.powf(self.n - 1.0) * src / self.sigma)
    }

    /// Two-term expansion of the flux at the start radius.
    fn start(&self, r0: f64, s: f64) -> (f64, f64) {
        let phi = ((self.p - self.sigma) * s * r0.powf(self.n) / self.n
            - s.abs().powf(self.p - 1.0) * r0.powf(self.n - self.b) / (self.n - self.b))
            / self.sigma;
        (s, phi)
    }
}

fn mesh(r_end: f64, opts: &ShootingOptions) -> Vec<f64> {
    let r0 = opts.start_rel * r_end;
    let h_max = r_end / opts.steps as f64;
    let mut r = vec![r0];
    let mut x = r0;
    while x < r_end {
        x = (x + (0.01 * x).min(h_max)).min(r_end);
        r.push(x);
    }
    r
}

struct Trajectory {
    w: Vec<f64>,
    dw: Vec<f64>,
    outcome: Outcome,
}

fn integrate(ode: &Ode, r: &[f64], s: f64, keep: bool) -> Result<Trajectory> {
    let (mut w, mut phi) = ode.start(r[0], s);
    let mut ws = Vec::new();
    let mut dws = Vec::new();
    if keep {
        ws.push(w);
        dws.push(ode.slope(r[0], phi));
    }
    let mut outcome = Outcome::Undecided;
    for i in 0..r.len() - 1 {
        let (x, h) = (r[i], r[i + 1] - r[i]);
        let (k1w, k1p) = ode.rhs(x, w, phi);
        let (k2w, k2p) = ode.rhs(x + h / 2.0, w + h / 2.0 * k1w, phi + h / 2.0 * k1p);
        let (k3w, k3p) = ode.rhs(x + h / 2.0, w + h / 2.0 * k2w, phi + h / 2.0 * k2p);
        let (k4w, k4p) = ode.rhs(x + h, w + h * k3w, phi + h * k3p);
        w += h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
        phi += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
        if !w.is_finite() || !phi.is_finite() {
            return Err(Error::StiffFailure(format!("non-finite state at r = {}", r[i + 1])));
        }
        if w < 0.0 {
            outcome = Outcome::Crossing;
            break;
        }
        if phi > 0.0 {
            outcome = Outcome::Turnback;
            break;
        }
        if keep {
            ws.push(w);
            dws.push(ode.slope(r[i + 1], phi));
        }
    }
    Ok(Trajectory {
        w: ws,
        dw: dws,
        outcome,
    })
}

/// Bisection on the initial height; the profile is cut to zero after the
/// first event (the ground state has compact support or decays to zero).
pub fn shooting_oracle(params: &ParameterSet, grid: &Arc<RadialGrid>, opts: &ShootingOptions) -> Result<ShootingResult> {
    params.require_equation()?;
    let ode = Ode::new(params);
    let r = mesh(grid.radius(), opts);
    let mut log = Vec::new();
    let mut classify = |s: f64| -> Result<Outcome> {
        let o = integrate(&ode, &r, s, false)?.outcome;
        log.push((s, o));
        Ok(o)
    };
    // geometric scan for an outcome change
    let mut prev: Option<(f64, Outcome)> = None;
    let mut bracket = None;
    let mut s = 1e-3;
    while s <= 1e3 {
        let o = classify(s)?;
        if o != Outcome::Undecided {
            if let Some((sp, op)) = prev {
                if op != o {
                    bracket = Some((sp, op, s, o));
                    break;
                }
            }
            prev = Some((s, o));
        }
        s *= 1.25;
    }
    let Some((mut lo, olo, mut hi, ohi)) = bracket else {
        return Err(Error::BracketNotFound { lo: 1e-3, hi: 1e3 });
    };
    for _ in 0..opts.max_bisections {
        if hi - lo <= opts.rel_width * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let o = classify(mid)?;
        if o == olo {
            lo = mid;
        } else if o == ohi {
            hi = mid;
        } else {
            // undecided trajectories sit at the threshold itself
            lo = mid;
            hi = mid;
            break;
        }
    }
    let s_star = 0.5 * (lo + hi);
    let traj = integrate(&ode, &r, s_star, true)?;
    let rr = &r[..traj.w.len()];
    let k = shot_constant(&ode, rr, &traj.w, &traj.dw);
    let pchip = Pchip::new(rr, &traj.w);
    let r_last = *rr.last().unwrap();
    let values: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&x| {
            if x <= rr[0] {
                traj.w[0]
            } else if x >= r_last {
                0.0
            } else {
                pchip.eval(x).max(0.0)
            }
        })
        .collect();
    let profile = RadialField::new(grid.clone(), values)?.with_metadata(format!("shooting profile, s={s_star:.17e}"));
    Ok(ShootingResult {
        profile,
        s: s_star,
        bracket: (lo, hi),
        outcomes: (olo, ohi),
        log,
        k,
    })
}

/// `1/J` with trapezoid sums on the ODE mesh.
fn shot_constant(ode: &Ode, r: &[f64], w: &[f64], dw: &[f64]) -> f64 {
    let mut aq = 0.0;
    let mut m2 = 0.0;
    let mut ap = 0.0;
    let f = |i: usize| {
        let x = r[i];
        let jac = x.powf(ode.n - 1.0);
        (
            dw[i].abs().powf(ode.q) * jac,
            w[i] * w[i] * jac,
            x.powf(-ode.b) * w[i].abs().powf(ode.p) * jac,
        )
    };
    for i in 0..r.len().saturating_sub(1) {
        let h = r[i + 1] - r[i];
        let (a0, b0, c0) = f(i);
        let (a1, b1, c1) = f(i + 1);
        aq += 0.5 * h * (a0 + a1);
        m2 += 0.5 * h * (b0 + b1);
        ap += 0.5 * h * (c0 + c1);
    }
    // core [0, r_0] with ω ≈ s
    let s = w[0];
    m2 += s * s * r[0].powf(ode.n) / ode.n;
    ap += s.abs().powf(ode.p) * r[0].powf(ode.n - ode.b) / (ode.n - ode.b);
    let omega = sphere_measure(ode.n as usize);
    let (aq, m2, ap) = (aq * omega, m2 * omega, ap * omega);
    let sigma = ode.sigma;
    let j = aq.powf(sigma / ode.q) * m2.powf((ode.p - sigma) / 2.0) / ap;
    1.0 / j
}
