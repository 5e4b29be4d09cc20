//! Artifact writers. Every writer takes the hash of the run configuration
//! and embeds it: a leading comment line in CSV, a `config_hash` key in JSON.
//! Numbers are printed with `{:?}` (shortest round-trip form), so equal
//! inputs give byte-identical files.

use std::fmt::Write;

use serde_json::{json, Value};

use crate::field::RadialField;
use crate::global::MassCurve;
use crate::manifold::{AsymptoticReport, GammaCurve};
use crate::params::ParameterSet;
use crate::weinstein::{CriticalMass, GnResult};

fn header(hash: &str) -> String {
    format!("# config_hash={hash}\n")
}

pub fn mass_curve_csv(curve: &MassCurve, hash: &str) -> String {
    let mut s = header(hash);
    s.push_str("c,m,status,lambda,pohozaev_residual,iters\n");
    for r in &curve.rows {
        let _ = writeln!(s, "{:?},{:?},{},{:?},{:?},{}", r.c, r.m, r.status, r.lambda, r.pohozaev_residual, r.iters);
    }
    s
}

pub fn gamma_curve_csv(curve: &GammaCurve, hash: &str) -> String {
    let mut s = header(hash);
    s.push_str("c,gamma,lambda,pohozaev_residual,status,iters\n");
    for r in &curve.rows {
        let _ = writeln!(s, "{:?},{:?},{:?},{:?},{},{}", r.c, r.gamma, r.lambda, r.pohozaev_residual, r.status, r.iters);
    }
    s
}

pub fn asymptotics_csv(report: &AsymptoticReport, hash: &str) -> String {
    let mut s = header(hash);
    s.push_str("c,gamma,lambda,grad2,gradq,status,radius\n");
    for r in &report.rows {
        let _ = writeln!(
            s,
            "{:?},{:?},{:?},{:?},{:?},{},{:?}",
            r.c, r.gamma, r.lambda, r.grad2, r.gradq, r.status, r.radius
        );
    }
    s
}

/// Profile CSV with the hash as the first comment line.
pub fn profile_csv(u: &RadialField, params: &ParameterSet, hash: &str) -> String {
    header(hash) + &u.to_profile_csv(params)
}

/// `gnresult.json`.
pub fn gn_json(gn: &GnResult, c2: Option<&CriticalMass>, hash: &str) -> Value {
    json!({
        "config_hash": hash,
        "J_min": gn.j_min,
        "K": gn.k,
        "omega_norm": gn.omega_norm,
        "c2_star": c2.map(|c| c.c2_star),
        "c2_star_alt": c2.map(|c| c.c2_star_alt),
        "residuals": {
            "el": gn.el_residual,
            "l2_identity": gn.identity_residuals.l2_identity,
            "virial": gn.identity_residuals.virial,
        },
        "restarts": gn.restarts,
        "iterations": gn.iterations,
    })
}

pub fn to_pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("json values serialize") + "\n"
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::global::{MassRow, Status};

    #[test]
    fn mass_curve_columns() {
        let curve = MassCurve {
            rows: vec![MassRow {
                c: 1.0,
                m: -0.5,
                status: Status::Converged,
                lambda: -1.25,
                pohozaev_residual: 1e-9,
                iters: 7,
            }],
        };
        let s = mass_curve_csv(&curve, "abc");
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "# config_hash=abc");
        assert_eq!(lines[1], "c,m,status,lambda,pohozaev_residual,iters");
        assert_eq!(lines[2], "1.0,-0.5,Converged,-1.25,1e-9,7");
    }
}
