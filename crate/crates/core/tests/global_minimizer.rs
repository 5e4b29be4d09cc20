mod common;

use common::{grid, params};
use nqground_core::global::{
    aq_bound, detect_unbounded, find_c1_star, flow_minimize, flow_minimize_from, gaussian_seed, mass_energy_curve,
    FlowOptions, EPS0, UNBOUNDED_LEVEL,
};
use nqground_core::weinstein::critical_mass_c2;
use nqground_core::{minimize_weinstein, Error, Status, WeinsteinOptions};

#[test]
fn subcritical_low_flow_invariants() {
    let ps = params(2, 3.0, 3.0, 0.5);
    let g = grid(2);
    let rep = flow_minimize(&ps, 10.0, &g, &FlowOptions::default()).unwrap();
    assert!(rep.value < 0.0);
    assert_eq!(rep.status, Status::Converged);
    assert!(rep.pohozaev_residual <= 1e-4);
    assert!(((rep.u.mass() - 10.0) / 10.0).abs() <= 1e-10);
    assert!(rep.trace.max_mass_error <= 1e-12, "{}", rep.trace.max_mass_error);
    assert!(rep.trace.max_energy_increase <= 1e-10 * (1.0 + rep.trace.initial_energy.abs()));
    // a priori bound on ‖∇u‖_q^q from the GN inequality
    let gn = minimize_weinstein(&ps, &g, &WeinsteinOptions::default()).unwrap();
    let bound = aq_bound(&ps, gn.k, 10.0, rep.trace.initial_energy).unwrap();
    assert!(rep.trace.max_aq <= 1.1 * bound, "aq {} vs bound {bound}", rep.trace.max_aq);
}

#[test]
fn mass_critical_rays_around_threshold() {
    let ps = params(2, 3.0, 5.5, 0.5);
    let g = grid(2);
    let (cm, gn) = critical_mass_c2(&ps, &g, &WeinsteinOptions::default()).unwrap();
    let probe = |c: f64| {
        let t0 = (c / gn.q.mass()).powf(1.0 / 4.0);
        detect_unbounded(&ps, c, &gn.q.shape_scale(t0)).unwrap()
    };
    let above = probe(2.0 * cm.c2_star);
    assert!(above.unbounded && above.value < UNBOUNDED_LEVEL);
    let below = probe(0.5 * cm.c2_star);
    assert!(!below.unbounded && below.value >= 0.0);
    // coercivity below the threshold: no iterate goes below −1e-6
    let rep = flow_minimize(&ps, 0.9 * cm.c2_star, &g, &FlowOptions::default()).unwrap();
    assert!(rep.trace.min_energy >= -1e-6, "{}", rep.trace.min_energy);
}

#[test]
fn c1_star_bisection_contract() {
    let ps = params(2, 3.0, 4.0, 0.5);
    let g = grid(2);
    let opts = FlowOptions::default();
    let coarse = find_c1_star(&ps, Some((8.0, 16.0)), 1e-2, &g, &opts).unwrap();
    let fine = find_c1_star(&ps, Some((8.0, 16.0)), 1e-3, &g, &opts).unwrap();
    let width = |b: (f64, f64)| b.1 - b.0;
    assert!(width(fine.bracket) <= 0.2 * width(coarse.bracket));
    assert!(fine.bracket.0 >= coarse.bracket.0 && fine.bracket.1 <= coarse.bracket.1);
    // sign pattern: every step left of the final bracket is on the zero side
    for s in &fine.log {
        if s.c <= fine.bracket.0 {
            assert!(!s.negative && s.m >= -EPS0, "{s:?}");
        }
        if s.c >= fine.bracket.1 {
            assert!(s.negative, "{s:?}");
        }
    }
    assert!(matches!(
        find_c1_star(&params(2, 3.0, 3.0, 0.5), None, 1e-3, &g, &opts),
        Err(Error::RegimeMismatch(_))
    ));
    assert!(matches!(find_c1_star(&ps, Some((20.0, 40.0)), 1e-3, &g, &opts), Err(Error::BracketInvalid(_))));
}

#[test]
fn c1_star_at_threshold_exponent() {
    // p = p2* = 3.5 at (N=2, b=0.5); flows slow down sharply next to c1*,
    // so the bracket here is coarse
    let ps = params(2, 3.0, 3.5, 0.5);
    let g = grid(2);
    let opts = FlowOptions::default();
    let c1 = find_c1_star(&ps, Some((4.0, 8.0)), 0.1, &g, &opts).unwrap();
    assert!(c1.c1_star > 0.0 && c1.c1_star.is_finite());
    let rep = flow_minimize(&ps, 0.9 * c1.c1_star, &g, &opts).unwrap();
    assert!(rep.value >= -1e-5, "{}", rep.value);
}

#[test]
fn strict_decrease_after_attainment() {
    let ps = params(2, 3.0, 4.0, 0.5);
    let g = grid(2);
    let (curve, _) = mass_energy_curve(&ps, &[16.0, 20.0, 24.0, 32.0], &g, &FlowOptions::default()).unwrap();
    assert_eq!(curve.rows.len(), 4);
    for w in curve.rows.windows(2) {
        if w[0].status == Status::Converged && w[0].m < 0.0 {
            assert!(w[1].m < w[0].m - 1e-8, "{:?} -> {:?}", w[0], w[1]);
        }
    }
}

#[test]
fn flow_rejects_bad_input() {
    let g = grid(2);
    let ps = params(2, 3.0, 3.0, 0.5);
    assert!(matches!(
        flow_minimize(&ps, -1.0, &g, &FlowOptions::default()),
        Err(Error::InvalidRegime(_))
    ));
    let g3 = grid(3);
    let u = gaussian_seed(&g3, 1.0).unwrap();
    assert!(matches!(flow_minimize_from(&ps, 1.0, &u, &FlowOptions::default()), Err(Error::GridMismatch)));
}
