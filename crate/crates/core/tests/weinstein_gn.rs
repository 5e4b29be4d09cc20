mod common;

use common::{grid, params, rel_sup};
use nqground_core::functional::weinstein;
use nqground_core::shooting::{shooting_oracle, Outcome, ShootingOptions};
use nqground_core::weinstein::{critical_mass_from, minimize_weinstein_from};
use nqground_core::{minimize_weinstein, Error, WeinsteinOptions};

#[test]
fn weinstein_ground_state_and_invariances() {
    let ps = params(2, 3.0, 4.0, 0.5);
    let g = grid(2);
    let gn = minimize_weinstein(&ps, &g, &WeinsteinOptions::default()).unwrap();
    assert!(gn.el_residual <= 1e-4, "EL residual {}", gn.el_residual);
    assert!((gn.k * gn.j_min - 1.0).abs() < 1e-14);
    assert!((weinstein(&gn.q, &ps).unwrap() * gn.k - 1.0).abs() <= 1e-3);
    // K = p / ‖ω‖₂^{p−2}
    assert!((gn.k - ps.p() / gn.omega_norm.powf(ps.p() - 2.0)).abs() <= 1e-12 * gn.k);
    assert_eq!(gn.restarts.len(), 5);
    assert!(gn.restart_spread() >= 0.0);
    let q = &gn.q;
    // non-negative and non-increasing up to round-off in the vanishing tail
    let floor = 1e-14 * q.values()[0];
    assert!(q.values().windows(2).all(|w| w[1] <= w[0] + floor) && q.values().iter().all(|&v| v >= 0.0));
    // restarting from 3Q returns the same level
    let again = minimize_weinstein_from(&ps, &q.scaled(3.0), &WeinsteinOptions::default()).unwrap();
    assert!((again.j_min - gn.j_min).abs() <= 1e-8 * gn.j_min, "{} vs {}", again.j_min, gn.j_min);
}

#[test]
fn shooting_oracle_matches_descent() {
    let ps = params(3, 2.5, 3.75, 1.0);
    let g = grid(3);
    let gn = minimize_weinstein(&ps, &g, &WeinsteinOptions::default()).unwrap();
    let shot = shooting_oracle(&ps, &g, &ShootingOptions::default()).unwrap();
    let (lo, hi) = shot.bracket;
    assert!(hi - lo <= 1e-12 * hi, "bracket ({lo}, {hi})");
    assert_ne!(shot.outcomes.0, shot.outcomes.1);
    assert!(shot.outcomes.0 != Outcome::Undecided && shot.outcomes.1 != Outcome::Undecided);
    assert!((shot.k - gn.k).abs() <= 1e-2 * gn.k);
    let descent = gn.q.resample(g.clone());
    let d = rel_sup(shot.profile.values(), descent.values());
    assert!(d <= 1e-2, "profiles differ by {d}");
}

#[test]
fn critical_mass_needs_critical_exponent() {
    let ps = params(2, 3.0, 4.0, 0.5);
    assert!(matches!(critical_mass_from(&ps, 2.0, 1.0), Err(Error::InvalidRegime(_))));
    // both closed forms coincide whenever K = p / ‖ω‖^{p−2}
    let pc = params(2, 3.0, 5.5, 0.5);
    for omega in [0.3, 1.0, 2.0, 7.5] {
        let k = 5.5 / f64::powf(omega, 3.5);
        assert!(critical_mass_from(&pc, omega, k).unwrap().relative_gap <= 1e-12);
    }
}
