//! Validated exponent sets `(N, q, p, b)` and regime classification.
//!
//! All derived exponents are recomputed from the four raw inputs; nothing
//! derived is ever read back from serialized data.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance under which `p` is considered equal to a threshold exponent.
pub const EQUALITY_TOL: f64 = 1e-12;

/// Raw wire form `{"N":…, "q":…, "p":…, "b":…}`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct RawParams {
    #[serde(rename = "N")]
    pub n: i64,
    pub q: f64,
    pub p: f64,
    pub b: f64,
}

/// A validated parameter set with every derived exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct ParameterSet {
    dim: usize,
    q: f64,
    p: f64,
    b: f64,
    sigma_pq: f64,
    p2_star: f64,
    pq_star: f64,
    two_b_star: Option<f64>,
    qb_star: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegimeTag {
    SubcriticalLow,
    SubcriticalThreshold,
    SubcriticalHigh,
    MassCritical,
    Supercritical,
}

impl RegimeTag {
    pub fn is_subcritical(self) -> bool {
        matches!(
            self,
            RegimeTag::SubcriticalLow | RegimeTag::SubcriticalThreshold | RegimeTag::SubcriticalHigh
        )
    }
}

impl std::fmt::Display for RegimeTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            RegimeTag::SubcriticalLow => "SubcriticalLow",
            RegimeTag::SubcriticalThreshold => "SubcriticalThreshold",
            RegimeTag::SubcriticalHigh => "SubcriticalHigh",
            RegimeTag::MassCritical => "MassCritical",
            RegimeTag::Supercritical => "Supercritical",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Regime {
    pub tag: RegimeTag,
    /// Hypotheses under which the Pohozaev-manifold level is attained with a
    /// negative multiplier.
    pub compactness_ok: bool,
}

fn approx_eq(x: f64, target: f64) -> bool {
    (x - target).abs() <= EQUALITY_TOL * target.abs().max(1.0)
}

impl ParameterSet {
    pub fn validate(n: i64, q: f64, p: f64, b: f64) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidDimension(n));
        }
        let dim = n as usize;
        let nf = dim as f64;
        let limit = nf.min(2.0);
        if !(b > 0.0 && b < limit) || !b.is_finite() {
            return Err(Error::BOutOfRange { b, limit });
        }
        if !(q >= 2.0) || !q.is_finite() {
            return Err(Error::QTooSmall {
                q,
                requirement: "q >= 2",
            });
        }
        let qb_star = if q < nf {
            q * (nf - b) / (nf - q)
        } else {
            f64::INFINITY
        };
        if !(p > 2.0 && p < qb_star) || !p.is_finite() {
            return Err(Error::POutOfRange { p, upper: qb_star });
        }
        let sigma_pq = q * (nf * (p - 2.0) + 2.0 * b) / (nf * (q - 2.0) + 2.0 * q);
        let p2_star = 2.0 * (2.0 - b) / nf + 2.0;
        let pq_star = 2.0 * (q - b) / nf + q;
        let two_b_star = (dim >= 3).then(|| 2.0 * (nf - b) / (nf - 2.0));
        let out = ParameterSet {
            dim,
            q,
            p,
            b,
            sigma_pq,
            p2_star,
            pq_star,
            two_b_star,
            qb_star,
        };
        debug_assert!(p - sigma_pq > 0.0);
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn n(&self) -> f64 {
        self.dim as f64
    }
    pub fn q(&self) -> f64 {
        self.q
    }
    pub fn p(&self) -> f64 {
        self.p
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn sigma(&self) -> f64 {
        self.sigma_pq
    }
    pub fn p2_star(&self) -> f64 {
        self.p2_star
    }
    pub fn pq_star(&self) -> f64 {
        self.pq_star
    }
    /// `2(N-b)/(N-2)`, defined only for `N >= 3`.
    pub fn two_b_star(&self) -> Option<f64> {
        self.two_b_star
    }
    /// `q(N-b)/(N-q)` for `q < N`, `+inf` otherwise. Comparison use only.
    pub fn qb_star(&self) -> f64 {
        self.qb_star
    }

    /// Upper bound on `q` in the compactness hypotheses, `2(N^2-2b)/(N^2-4)` for `N >= 3`.
    pub fn q_compactness_bound(&self) -> Option<f64> {
        (self.dim >= 3).then(|| {
            let n2 = self.n() * self.n();
            2.0 * (n2 - 2.0 * self.b) / (n2 - 4.0)
        })
    }

    /// Equation solvers need `q > 2`; `q = 2` is only meaningful for the GN inequality.
    pub fn supports_equation(&self) -> bool {
        self.q > 2.0
    }

    pub fn require_equation(&self) -> Result<()> {
        if self.supports_equation() {
            Ok(())
        } else {
            Err(Error::QTooSmall {
                q: self.q,
                requirement: "q > 2 for the (2,q)-Laplacian equation",
            })
        }
    }

    /// Exponent of `t` in `||grad u_t||_q^q`: `[N(q-2)+2q]/2`.
    pub fn fiber_exp_q(&self) -> f64 {
        (self.n() * (self.q - 2.0) + 2.0 * self.q) / 2.0
    }

    /// Exponent of `t` in the weighted `L^p` term: `[N(p-2)+2b]/2`.
    pub fn fiber_exp_p(&self) -> f64 {
        (self.n() * (self.p - 2.0) + 2.0 * self.b) / 2.0
    }

    /// Same dimension and `(q, b)`, different `p`.
    pub fn with_p(&self, p: f64) -> Result<Self> {
        Self::validate(self.dim as i64, self.q, p, self.b)
    }

    pub fn classify(&self) -> Regime {
        let p = self.p;
        let tag = if approx_eq(p, self.pq_star) {
            RegimeTag::MassCritical
        } else if approx_eq(p, self.p2_star) {
            RegimeTag::SubcriticalThreshold
        } else if p < self.p2_star {
            RegimeTag::SubcriticalLow
        } else if p < self.pq_star {
            RegimeTag::SubcriticalHigh
        } else {
            RegimeTag::Supercritical
        };
        let compactness_ok = match (self.q_compactness_bound(), self.two_b_star) {
            (Some(qb), Some(tb)) => self.q < qb && p < tb,
            _ => true,
        };
        Regime {
            tag,
            compactness_ok,
        }
    }

    pub fn raw(&self) -> RawParams {
        RawParams {
            n: self.dim as i64,
            q: self.q,
            p: self.p,
            b: self.b,
        }
    }
}

impl TryFrom<RawParams> for ParameterSet {
    type Error = Error;
    fn try_from(r: RawParams) -> Result<Self> {
        ParameterSet::validate(r.n, r.q, r.p, r.b)
    }
}

impl From<ParameterSet> for RawParams {
    fn from(p: ParameterSet) -> Self {
        p.raw()
    }
}

impl std::fmt::Display for ParameterSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "N={}, q={}, p={}, b={}", self.dim, self.q, self.p, self.b)
    }
}

/// Free-function form of [`ParameterSet::validate`].
pub fn validate(n: i64, q: f64, p: f64, b: f64) -> Result<ParameterSet> {
    ParameterSet::validate(n, q, p, b)
}

/// `sigma_{p,q} = q[N(p-2)+2b] / [N(q-2)+2q]`.
pub fn sigma(params: &ParameterSet) -> f64 {
    params.sigma()
}

pub fn classify(params: &ParameterSet) -> Regime {
    params.classify()
}
