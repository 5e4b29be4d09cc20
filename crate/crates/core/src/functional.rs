//! Discrete energy functionals on a radial grid.
//!
//! With `u` piecewise linear, `d_i = (u_{i+1}-u_i)/h_i` and cell volumes
//! `V_i`:
//!
//! ```text
//! a2 = Σ V_i d_i^2        aq = Σ V_i |d_i|^q
//! ap = Σ wb_j |u_j|^p     m2 = Σ w_j u_j^2
//! ```
//!
//! Every scalar functional used by the solvers is a linear combination of
//! these four quantities, so gradients and (tridiagonal) Hessians are exact
//! derivatives of the discrete energy.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::RadialField;
use crate::grid::RadialGrid;
use crate::params::ParameterSet;
use crate::tridiag::SymTridiag;

/// Regularization of `|u'|` in the q-Laplacian coefficient.
pub const GRAD_EPS: f64 = 1e-10;

/// Nodes skipped at each end when taking residual sup norms.
pub const BOUNDARY_SKIP: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct FiberComponents {
    /// `||grad u||_2^2`
    pub a2: f64,
    /// `||grad u||_q^q`
    pub aq: f64,
    /// `∫ |x|^{-b} |u|^p`
    pub ap: f64,
    /// `||u||_2^2`
    pub m2: f64,
}

impl FiberComponents {
    pub fn energy(&self, params: &ParameterSet) -> f64 {
        self.a2 / 2.0 + self.aq / params.q() - self.ap / params.p()
    }

    pub fn pohozaev(&self, params: &ParameterSet) -> f64 {
        let a = params.fiber_exp_q();
        let b = params.fiber_exp_p();
        self.a2 + a / params.q() * self.aq - b / params.p() * self.ap
    }

    /// Magnitude used to scale Pohozaev residuals.
    pub fn scale(&self) -> f64 {
        self.a2 + self.aq + self.ap
    }

    /// Components of the mass-preserving dilation `u_t`.
    pub fn dilated(&self, t: f64, params: &ParameterSet) -> Self {
        FiberComponents {
            a2: t * t * self.a2,
            aq: t.powf(params.fiber_exp_q()) * self.aq,
            ap: t.powf(params.fiber_exp_p()) * self.ap,
            m2: self.m2,
        }
    }

    /// Components of `u^{t0}(x) = t0 u(x/t0)`.
    pub fn shape_scaled(&self, t0: f64, params: &ParameterSet) -> Self {
        let n = params.n();
        FiberComponents {
            a2: t0.powf(n) * self.a2,
            aq: t0.powf(n) * self.aq,
            ap: t0.powf(params.p() - params.b() + n) * self.ap,
            m2: t0.powf(n + 2.0) * self.m2,
        }
    }

    /// Components of `s·u`.
    pub fn amplified(&self, s: f64, params: &ParameterSet) -> Self {
        let s = s.abs();
        FiberComponents {
            a2: s * s * self.a2,
            aq: s.powf(params.q()) * self.aq,
            ap: s.powf(params.p()) * self.ap,
            m2: s * s * self.m2,
        }
    }
}

/// `I(u_t) = t^2 a2/2 + t^A aq/q - t^B ap/p`.
pub fn fiber_energy(comp: &FiberComponents, t: f64, params: &ParameterSet) -> f64 {
    comp.dilated(t, params).energy(params)
}

/// `P(u_t) = t^2 a2 + (A/q) t^A aq - (B/p) t^B ap`.
pub fn fiber_pohozaev(comp: &FiberComponents, t: f64, params: &ParameterSet) -> f64 {
    comp.dilated(t, params).pohozaev(params)
}

/// Weinstein quotient `||grad u||_q^σ ||u||_2^{p-σ} / ∫|x|^{-b}|u|^p`.
pub fn weinstein_quotient(comp: &FiberComponents, params: &ParameterSet) -> Result<f64> {
    if comp.ap <= 0.0 || comp.m2 <= 0.0 {
        return Err(Error::ZeroField);
    }
    let s = params.sigma();
    Ok(comp.aq.powf(s / params.q()) * comp.m2.powf((params.p() - s) / 2.0) / comp.ap)
}

/// Lagrange multiplier estimates `(λ_a, λ_b)`.
///
/// `λ_a` tests the equation against `u`; `λ_b` additionally eliminates the
/// weighted term through `P(u) = 0`, so the two agree only on the Pohozaev set.
pub fn multiplier(comp: &FiberComponents, params: &ParameterSet) -> Result<(f64, f64)> {
    if comp.m2 <= 0.0 {
        return Err(Error::ZeroField);
    }
    let (n, q, p, b) = (params.n(), params.q(), params.p(), params.b());
    let lam_a = (comp.a2 + comp.aq - comp.ap) / comp.m2;
    let denom = n * (p - 2.0) + 2.0 * b;
    let c2 = ((n - 2.0) * p - 2.0 * (n - b)) / denom;
    let cq = 2.0 * ((n - q) * p - q * (n - b)) / (q * denom);
    let lam_b = (c2 * comp.a2 + cq * comp.aq) / comp.m2;
    Ok((lam_a, lam_b))
}

/// The two-term form of `I` on the Pohozaev set.
pub fn pohozaev_energy(comp: &FiberComponents, params: &ParameterSet) -> f64 {
    let (n, q, p, b) = (params.n(), params.q(), params.p(), params.b());
    let denom = n * (p - 2.0) + 2.0 * b;
    (n * p - 2.0 * (n + 2.0) + 2.0 * b) / (2.0 * denom) * comp.a2
        + (n * p - q * (n + 2.0) + 2.0 * b) / (q * denom) * comp.aq
}

/// Coefficients of `c2·a2/2 + cq·aq/q + cm·m2/2 - cp·ap/p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Combo {
    pub c2: f64,
    pub cq: f64,
    pub cm: f64,
    pub cp: f64,
}

impl Combo {
    /// The energy `I`.
    pub const ENERGY: Combo = Combo {
        c2: 1.0,
        cq: 1.0,
        cm: 0.0,
        cp: 1.0,
    };
    /// `m2 / 2`.
    pub const HALF_MASS: Combo = Combo {
        c2: 0.0,
        cq: 0.0,
        cm: 1.0,
        cp: 0.0,
    };

    /// Pohozaev functional `P`.
    pub fn pohozaev(params: &ParameterSet) -> Combo {
        Combo {
            c2: 2.0,
            cq: params.fiber_exp_q(),
            cm: 0.0,
            cp: params.fiber_exp_p(),
        }
    }

    /// Action whose critical points solve `-σΔ_q w + (p-σ) w = |x|^{-b}|w|^{p-2}w`.
    pub fn weinstein_action(params: &ParameterSet) -> Combo {
        let s = params.sigma();
        Combo {
            c2: 0.0,
            cq: s,
            cm: params.p() - s,
            cp: 1.0,
        }
    }

    pub fn value(&self, comp: &FiberComponents, params: &ParameterSet) -> f64 {
        self.c2 * comp.a2 / 2.0 + self.cq * comp.aq / params.q() + self.cm * comp.m2 / 2.0
            - self.cp * comp.ap / params.p()
    }

    pub fn add_scaled(&self, other: &Combo, s: f64) -> Combo {
        Combo {
            c2: self.c2 + s * other.c2,
            cq: self.cq + s * other.cq,
            cm: self.cm + s * other.cm,
            cp: self.cp + s * other.cp,
        }
    }
}

/// Pointwise strong-form terms, each divided by the node weight.
#[derive(Debug, Clone)]
pub struct StrongTerms {
    /// `-Δu`
    pub lap2: Vec<f64>,
    /// `-Δ_q u`
    pub lapq: Vec<f64>,
    /// `|x|^{-b} |u|^{p-2} u`
    pub nonlin: Vec<f64>,
    /// `u`
    pub mass: Vec<f64>,
}

impl StrongTerms {
    /// Relative sup norm of `c2·lap2 + cq·lapq + cm·u - cp·nonlin`, normalized
    /// by the largest pointwise sum of term magnitudes; end nodes are skipped.
    pub fn residual(&self, c2: f64, cq: f64, cm: f64, cp: f64) -> f64 {
        self.residual_skipping(c2, cq, cm, cp, BOUNDARY_SKIP)
    }

    /// As [`StrongTerms::residual`] but skipping `skip` nodes at each end
    /// (the Dirichlet node is always excluded).
    pub fn residual_skipping(&self, c2: f64, cq: f64, cm: f64, cp: f64, skip: usize) -> f64 {
        let n = self.mass.len();
        let lo = skip.min(n);
        let hi = n.saturating_sub(skip.max(1)).max(lo);
        let mut num = 0.0_f64;
        let mut den = 0.0_f64;
        for j in lo..hi {
            let t = [
                c2 * self.lap2[j],
                cq * self.lapq[j],
                cm * self.mass[j],
                -cp * self.nonlin[j],
            ];
            num = num.max(t.iter().sum::<f64>().abs());
            den = den.max(t.iter().map(|x| x.abs()).sum::<f64>());
        }
        if den == 0.0 {
            0.0
        } else {
            num / den
        }
    }
}

/// Parameters + grid with the singular weights cached.
#[derive(Debug, Clone)]
pub struct Model {
    params: ParameterSet,
    grid: Arc<RadialGrid>,
    wb: Vec<f64>,
}

impl Model {
    pub fn new(params: ParameterSet, grid: Arc<RadialGrid>) -> Self {
        let wb = grid.singular_weights(params.b());
        Model { params, grid, wb }
    }

    pub fn params(&self) -> &ParameterSet {
        &self.params
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn singular_weights(&self) -> &[f64] {
        &self.wb
    }

    /// Number of free (non-Dirichlet) nodes.
    pub fn unknowns(&self) -> usize {
        self.grid.len() - 1
    }

    pub fn field(&self, values: Vec<f64>) -> Result<RadialField> {
        RadialField::new(self.grid.clone(), values)
    }

    pub fn components(&self, u: &[f64]) -> FiberComponents {
        let q = self.params.q();
        let p = self.params.p();
        let vol = self.grid.cell_volumes();
        let nodes = self.grid.nodes();
        let w = self.grid.weights();
        let n = u.len();
        let mut c = FiberComponents::default();
        for i in 0..n - 1 {
            let ui1 = if i + 1 == n - 1 { 0.0 } else { u[i + 1] };
            let d = (ui1 - u[i]) / (nodes[i + 1] - nodes[i]);
            c.a2 += vol[i] * d * d;
            c.aq += vol[i] * d.abs().powf(q);
        }
        for j in 0..n - 1 {
            let a = u[j].abs();
            c.m2 += w[j] * a * a;
            c.ap += self.wb[j] * a.powf(p);
        }
        c
    }

    pub fn components_of(&self, u: &RadialField) -> FiberComponents {
        self.components(u.values())
    }

    pub fn energy(&self, u: &[f64]) -> f64 {
        self.components(u).energy(&self.params)
    }

    /// Gradient of a combination w.r.t. the free nodal values (length `n-1`).
    pub fn gradient(&self, combo: &Combo, u: &[f64]) -> Vec<f64> {
        let q = self.params.q();
        let p = self.params.p();
        let vol = self.grid.cell_volumes();
        let nodes = self.grid.nodes();
        let w = self.grid.weights();
        let m = self.unknowns();
        let mut g = vec![0.0; m];
        for i in 0..m {
            let ui1 = if i + 1 == m { 0.0 } else { u[i + 1] };
            let h = nodes[i + 1] - nodes[i];
            let d = (ui1 - u[i]) / h;
            let flux = vol[i] / h * (combo.c2 * d + combo.cq * d.abs().powf(q - 2.0) * d);
            g[i] -= flux;
            if i + 1 < m {
                g[i + 1] += flux;
            }
        }
        for j in 0..m {
            g[j] += combo.cm * w[j] * u[j] - combo.cp * self.wb[j] * u[j].abs().powf(p - 2.0) * u[j];
        }
        g
    }

    /// Exact tridiagonal Hessian of a combination (free nodes only).
    pub fn hessian(&self, combo: &Combo, u: &[f64]) -> SymTridiag {
        let q = self.params.q();
        let p = self.params.p();
        let vol = self.grid.cell_volumes();
        let nodes = self.grid.nodes();
        let w = self.grid.weights();
        let m = self.unknowns();
        let mut h = SymTridiag::zeros(m);
        for i in 0..m {
            let ui1 = if i + 1 == m { 0.0 } else { u[i + 1] };
            let gap = nodes[i + 1] - nodes[i];
            let d = (ui1 - u[i]) / gap;
            let kq = (q - 1.0) * (d * d + GRAD_EPS * GRAD_EPS).powf((q - 2.0) / 2.0);
            let e = vol[i] / (gap * gap) * (combo.c2 + combo.cq * kq);
            h.diag[i] += e;
            if i + 1 < m {
                h.diag[i + 1] += e;
                h.off[i] -= e;
            }
        }
        for j in 0..m {
            h.diag[j] += combo.cm * w[j] - combo.cp * (p - 1.0) * self.wb[j] * u[j].abs().powf(p - 2.0);
        }
        h
    }

    /// Diffusion operator with the q-Laplacian coefficient frozen at `u`:
    /// `c2·K2 + cq·Kq(u)`, free nodes only.
    pub fn lagged_stiffness(&self, c2: f64, cq: f64, u: &[f64]) -> SymTridiag {
        let q = self.params.q();
        let vol = self.grid.cell_volumes();
        let nodes = self.grid.nodes();
        let m = self.unknowns();
        let mut h = SymTridiag::zeros(m);
        for i in 0..m {
            let ui1 = if i + 1 == m { 0.0 } else { u[i + 1] };
            let gap = nodes[i + 1] - nodes[i];
            let d = (ui1 - u[i]) / gap;
            let kq = (d * d + GRAD_EPS * GRAD_EPS).powf((q - 2.0) / 2.0);
            let e = vol[i] / (gap * gap) * (c2 + cq * kq);
            h.diag[i] += e;
            if i + 1 < m {
                h.diag[i + 1] += e;
                h.off[i] -= e;
            }
        }
        h
    }

    /// `wb_j |u_j|^{p-2} u_j` (free nodes).
    pub fn nonlinear_load(&self, u: &[f64]) -> Vec<f64> {
        let p = self.params.p();
        (0..self.unknowns())
            .map(|j| self.wb[j] * u[j].abs().powf(p - 2.0) * u[j])
            .collect()
    }

    pub fn strong_terms(&self, u: &[f64]) -> StrongTerms {
        let w = self.grid.weights();
        let m = self.unknowns();
        let g2 = self.gradient(
            &Combo {
                c2: 1.0,
                cq: 0.0,
                cm: 0.0,
                cp: 0.0,
            },
            u,
        );
        let gq = self.gradient(
            &Combo {
                c2: 0.0,
                cq: 1.0,
                cm: 0.0,
                cp: 0.0,
            },
            u,
        );
        let nl = self.nonlinear_load(u);
        let mut t = StrongTerms {
            lap2: vec![0.0; m + 1],
            lapq: vec![0.0; m + 1],
            nonlin: vec![0.0; m + 1],
            mass: vec![0.0; m + 1],
        };
        for j in 0..m {
            t.lap2[j] = g2[j] / w[j];
            t.lapq[j] = gq[j] / w[j];
            t.nonlin[j] = nl[j] / w[j];
            t.mass[j] = u[j];
        }
        t
    }

    /// Pointwise relative stationarity of a combination over all free nodes.
    pub fn stationarity(&self, combo: &Combo, u: &[f64]) -> f64 {
        self.strong_terms(u)
            .residual_skipping(combo.c2, combo.cq, combo.cm, combo.cp, 0)
    }

    /// Relative residual of `-Δu - Δ_q u - λu - |x|^{-b}|u|^{p-2}u`.
    pub fn el_residual(&self, u: &[f64], lambda: f64) -> f64 {
        self.strong_terms(u).residual(1.0, 1.0, -lambda, 1.0)
    }
}

/// Free-function forms over a field.
pub fn components(u: &RadialField, params: &ParameterSet) -> FiberComponents {
    Model::new(*params, u.grid().clone()).components(u.values())
}

pub fn energy(u: &RadialField, params: &ParameterSet) -> f64 {
    components(u, params).energy(params)
}

pub fn pohozaev(u: &RadialField, params: &ParameterSet) -> f64 {
    components(u, params).pohozaev(params)
}

pub fn weinstein(u: &RadialField, params: &ParameterSet) -> Result<f64> {
    weinstein_quotient(&components(u, params), params)
}

pub fn multiplier_of(u: &RadialField, params: &ParameterSet) -> Result<(f64, f64)> {
    multiplier(&components(u, params), params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::RadialGrid;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(dim: usize, q: f64, p: f64, b: f64, n: usize) -> (ParameterSet, Arc<RadialGrid>) {
        let params = ParameterSet::validate(dim as i64, q, p, b).unwrap();
        let grid = Arc::new(RadialGrid::with_first_node(dim, 20.0, n, 1e-4).unwrap());
        (params, grid)
    }

    fn bump(grid: &Arc<RadialGrid>, amp: f64, width: f64) -> RadialField {
        RadialField::from_fn(grid.clone(), |r| amp * (-r * r / (width * width)).exp()).unwrap()
    }

    #[test]
    fn gaussian_mass_in_one_dimension() {
        // oracle: ∫_R e^{-x^2} dx = √π; the even extension doubles the half-line integral
        let (params, grid) = setup(1, 2.0, 3.0, 0.5, 8192);
        let u = RadialField::from_fn(grid, |r| (-r * r / 2.0).exp()).unwrap();
        let c = components(&u, &params);
        assert!((c.m2 - std::f64::consts::PI.sqrt()).abs() < 1e-4, "{}", c.m2);
    }

    #[test]
    fn zero_field_components() {
        let (params, grid) = setup(2, 3.0, 4.0, 0.5, 256);
        let c = components(&RadialField::zeros(grid), &params);
        assert_eq!(c, FiberComponents::default());
        assert_eq!(c.energy(&params), 0.0);
        assert_eq!(c.pohozaev(&params), 0.0);
    }

    #[test]
    fn homogeneity_of_components() {
        let (params, grid) = setup(2, 3.0, 4.0, 0.5, 512);
        let u = bump(&grid, 1.0, 2.0);
        let c1 = components(&u, &params);
        let c2 = components(&u.scaled(2.0), &params);
        assert!((c2.a2 / c1.a2 - 4.0).abs() < 1e-12);
        assert!((c2.aq / c1.aq - 8.0).abs() < 1e-12);
        assert!((c2.ap / c1.ap - 16.0).abs() < 1e-12);
        assert!((c2.m2 / c1.m2 - 4.0).abs() < 1e-12);
    }

    #[test]
    fn energy_and_pohozaev_arithmetic() {
        let ps = ParameterSet::validate(2, 3.0, 6.0, 0.5).unwrap();
        let comp = FiberComponents {
            a2: 1.0,
            aq: 1.0,
            ap: 4.0,
            m2: 2.0,
        };
        assert!((comp.energy(&ps) - 1.0 / 6.0).abs() < 1e-15);
        assert!((comp.pohozaev(&ps) + 2.0 / 3.0).abs() < 1e-15);
        let (la, _) = multiplier(&comp, &ps).unwrap();
        assert!((la + 1.0).abs() < 1e-15);
        // fiber maps at t = 1 reproduce the plain functionals
        assert_eq!(fiber_energy(&comp, 1.0, &ps), comp.energy(&ps));
        assert_eq!(fiber_pohozaev(&comp, 1.0, &ps), comp.pohozaev(&ps));
    }

    #[test]
    fn energy_from_components_matches_direct_sum() {
        let (params, grid) = setup(3, 2.5, 3.75, 1.0, 1024);
        let u = bump(&grid, 1.3, 1.5);
        let model = Model::new(params, grid.clone());
        let direct = Combo::ENERGY.value(&model.components(u.values()), &params);
        assert!((direct - energy(&u, &params)).abs() <= 1e-12 * direct.abs());
    }

    #[test]
    fn pohozaev_is_dilation_derivative() {
        // finite-difference oracle on the resampled dilation
        let (params, grid) = setup(3, 2.5, 3.75, 1.0, 4096);
        let u = bump(&grid, 1.0, 1.5);
        let h = 1e-4;
        let ip = energy(&u.dilate(1.0 + h), &params);
        let im = energy(&u.dilate(1.0 - h), &params);
        let fd = (ip - im) / (2.0 * h);
        let p = pohozaev(&u, &params);
        let scale = components(&u, &params).scale();
        assert!((fd - p).abs() < 1e-3 * scale, "fd={fd} P={p}");
        // closed-form fiber derivative agrees to rounding
        let comp = components(&u, &params);
        let fdc = (fiber_energy(&comp, 1.0 + h, &params) - fiber_energy(&comp, 1.0 - h, &params)) / (2.0 * h);
        assert!(((fdc - p) / p.abs().max(1e-12)).abs() < 1e-6);
    }

    #[test]
    fn weinstein_zero_field() {
        let (params, grid) = setup(2, 3.0, 4.0, 0.5, 256);
        assert!(matches!(
            weinstein(&RadialField::zeros(grid), &params),
            Err(Error::ZeroField)
        ));
    }

    #[test]
    fn weinstein_scale_invariances() {
        let (params, grid) = setup(2, 3.0, 4.0, 0.5, 4096);
        let u = bump(&grid, 1.0, 1.5);
        let j = weinstein(&u, &params).unwrap();
        for a in [0.1, 3.0, 17.0] {
            let ja = weinstein(&u.scaled(a), &params).unwrap();
            assert!(((ja - j) / j).abs() < 1e-10);
        }
        for eta in [0.7, 1.4] {
            let je = weinstein(&u.dilate(eta), &params).unwrap();
            assert!(((je - j) / j).abs() < 1e-3);
        }
    }

    #[test]
    fn multiplier_forms_agree_and_sign() {
        let ps = ParameterSet::validate(3, 2.5, 3.75, 1.0).unwrap();
        let comp = FiberComponents {
            a2: 2.0,
            aq: 0.7,
            ap: 1.0,
            m2: 1.5,
        };
        let (n, q, p, b) = (3.0, 2.5, 3.75, 1.0);
        let denom = n * (p - 2.0) + 2.0 * b;
        let tb = ps.two_b_star().unwrap();
        let qb = ps.qb_star();
        let factored = ((n - 2.0) * (p - tb) / denom * comp.a2
            + 2.0 * (n - q) * (p - qb) / (q * denom) * comp.aq)
            / comp.m2;
        let (_, lb) = multiplier(&comp, &ps).unwrap();
        assert!((lb - factored).abs() < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let c = FiberComponents {
                a2: rng.gen_range(1e-3..10.0),
                aq: rng.gen_range(1e-3..10.0),
                ap: rng.gen_range(1e-3..10.0),
                m2: rng.gen_range(1e-3..10.0),
            };
            assert!(multiplier(&c, &ps).unwrap().1 < 0.0);
        }
    }

    #[test]
    fn multiplier_forms_coincide_on_pohozaev_set() {
        let ps = ParameterSet::validate(2, 3.0, 6.0, 0.5).unwrap();
        let mut c = FiberComponents {
            a2: 1.3,
            aq: 0.4,
            ap: 0.0,
            m2: 2.0,
        };
        // choose ap so that P = 0
        c.ap = (c.a2 + ps.fiber_exp_q() / ps.q() * c.aq) * ps.p() / ps.fiber_exp_p();
        let (la, lb) = multiplier(&c, &ps).unwrap();
        assert!((la - lb).abs() < 1e-13);
        assert!((pohozaev_energy(&c, &ps) - c.energy(&ps)).abs() < 1e-13);
    }

    #[test]
    fn fiber_limits() {
        let sub = ParameterSet::validate(2, 3.0, 4.0, 0.5).unwrap();
        let comp = FiberComponents {
            a2: 1.0,
            aq: 1.0,
            ap: 1.0,
            m2: 1.0,
        };
        let mut prev = fiber_energy(&comp, 1e-3, &sub);
        for k in 1..40 {
            let t = 1e-3 * 0.8f64.powi(k);
            let e = fiber_energy(&comp, t, &sub);
            assert!(e.abs() <= prev.abs());
            prev = e;
        }
        let sup = ParameterSet::validate(3, 2.5, 3.75, 1.0).unwrap();
        assert!(fiber_energy(&comp, 1e6, &sup) < 0.0);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (params, grid) = setup(3, 2.5, 3.75, 1.0, 256);
        let model = Model::new(params, grid.clone());
        let u = bump(&grid, 1.2, 3.0);
        let g = model.gradient(&Combo::ENERGY, u.values());
        let h = 1e-6;
        let gmax = g.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
        let mut worst = 0.0_f64;
        for j in (0..model.unknowns()).step_by(7) {
            let mut up = u.values().to_vec();
            let mut um = u.values().to_vec();
            up[j] += h;
            um[j] -= h;
            let fd = (model.energy(&up) - model.energy(&um)) / (2.0 * h);
            let rel = (fd - g[j]).abs() / gmax;
            worst = worst.max(rel);
        }
        assert!(worst < 1e-5, "worst relative error {worst}");
    }

    #[test]
    fn hessian_matches_gradient_differences() {
        let (params, grid) = setup(2, 3.0, 4.0, 0.5, 128);
        let model = Model::new(params, grid.clone());
        // slope bounded away from zero so |u'|^{q-2} is smooth along the probe
        let u = RadialField::from_fn(grid.clone(), |r| (-r / 3.0).exp()).unwrap();
        let combo = Combo::ENERGY.add_scaled(&Combo::HALF_MASS, 0.3);
        let hmat = model.hessian(&combo, u.values());
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let dir: Vec<f64> = (0..model.unknowns()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let eps = 1e-6;
        let shift = |s: f64| {
            let mut v = u.values().to_vec();
            for (x, d) in v.iter_mut().zip(&dir) {
                *x += s * d;
            }
            model.gradient(&combo, &v)
        };
        let gp = shift(eps);
        let gm = shift(-eps);
        let hv = hmat.mul(&dir);
        for j in 0..model.unknowns() {
            let fd = (gp[j] - gm[j]) / (2.0 * eps);
            assert!((fd - hv[j]).abs() < 1e-4 * (1.0 + hv[j].abs()), "j={j} fd={fd} hv={}", hv[j]);
        }
    }

    proptest! {
        #[test]
        fn fiber_pohozaev_is_t_times_derivative(a2 in 1e-3f64..10.0, aq in 1e-3f64..10.0,
                                                ap in 1e-3f64..10.0, t in 0.05f64..20.0) {
            let ps = ParameterSet::validate(3, 2.5, 3.75, 1.0).unwrap();
            let comp = FiberComponents { a2, aq, ap, m2: 1.0 };
            let (a, b) = (ps.fiber_exp_q(), ps.fiber_exp_p());
            let deriv = t * a2 + a / ps.q() * t.powf(a - 1.0) * aq - b / ps.p() * t.powf(b - 1.0) * ap;
            let lhs = fiber_pohozaev(&comp, t, &ps);
            prop_assert!((lhs - t * deriv).abs() <= 1e-12 * (lhs.abs() + (t * deriv).abs() + 1e-300) * 10.0);
        }
    }
}
