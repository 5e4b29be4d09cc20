mod common;

use common::{grid, params};
use nqground_core::global::gaussian_seed;
use nqground_core::manifold::{minimize_gamma_adaptive, GammaOptions};
use nqground_core::verify::{check_el_residual, check_gn, check_rearrangement, gn_ratio, verify_profile};
use nqground_core::{minimize_weinstein, Error, RadialField, WeinsteinOptions};

#[test]
fn gn_check_on_optimizer_and_two_bumps() {
    let ps = params(2, 3.0, 4.0, 0.5);
    let g = grid(2);
    let gn = minimize_weinstein(&ps, &g, &WeinsteinOptions::default()).unwrap();
    assert!(check_gn(gn.k, &ps, &g, 200, 1).unwrap().passed());
    let rq = gn_ratio(&gn.q, gn.k, &ps);
    assert!((rq - 1.0).abs() <= 1e-3);
    for d in [4.0, 8.0, 12.0] {
        let u = RadialField::from_fn(g.clone(), |r| (-r * r).exp() + (-(r - d) * (r - d)).exp()).unwrap();
        assert!(gn_ratio(&u, gn.k, &ps) < 1.0);
    }
}

#[test]
fn checks_on_a_converged_minimizer() {
    let ps = params(3, 2.5, 3.75, 1.0);
    let g = grid(3);
    let rep = minimize_gamma_adaptive(&ps, 10.0, &gaussian_seed(&g, 10.0).unwrap(), &GammaOptions::default()).unwrap();
    let (u, lambda) = (&rep.report.u, rep.report.lambda);
    let report = verify_profile(u, lambda, &ps, None, 0).unwrap();
    for name in ["pohozaev_residual", "pohozaev_fd", "el_residual", "decay", "rearrangement"] {
        let c = report.get(name).unwrap();
        assert!(c.passed(), "{c:?}");
    }
    assert_eq!(report.get("gn").unwrap().pass, None);
    // a 10% error in λ is visible well above the converged residual; the
    // normalization is dominated by the singular weight near the origin, so
    // the absolute rise stays small
    let good = check_el_residual(u, lambda, &ps).value;
    let bad = check_el_residual(u, 1.1 * lambda, &ps).value;
    assert!(bad >= 50.0 * good, "{good} -> {bad}");
}

#[test]
fn rearrangement_check_rejects_negative_fields() {
    let ps = params(2, 3.0, 4.0, 0.5);
    let u = RadialField::from_fn(grid(2), |r| (-r).exp() - 0.5).unwrap();
    assert!(matches!(check_rearrangement(&u, &ps), Err(Error::NegativeValues)));
    let shell = RadialField::from_fn(grid(2), |r| (-(r - 3.0) * (r - 3.0)).exp()).unwrap();
    assert!(check_rearrangement(&shell, &ps).unwrap().passed());
}
