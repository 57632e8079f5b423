use std::f64::consts::PI;

use revheat::degeneracy::{
    distance_to_segment, fit_cubic_degeneracy, hinged_quartic_order, offset_at_meridian,
    r_at_meridian, variation_family_exponents, ProbeDirection,
};
use revheat::geodesics::{integrate_geodesic, Point};
use revheat::ode::OdeOptions;
use revheat::profile::Profile;

fn ell() -> Profile {
    Profile::ellipsoid(2.0, 1.0).unwrap()
}

fn segment_distance(p: &Profile, eta: f64) -> f64 {
    let t_end = p.b() * p.theta_cut() * 1.05;
    let arc = integrate_geodesic(p, eta, t_end, &OdeOptions::default()).unwrap();
    distance_to_segment(p, Point::on_equator(p, p.theta_cut()), &arc).unwrap()
}

#[test]
fn meridian_offset_examples() {
    let p = ell();
    let gap = p.a() - r_at_meridian(&p, 0.05, PI / 2.0).unwrap();
    assert!((gap - 2.945e-4).abs() < 3e-6, "{gap}");
    let half = -offset_at_meridian(&p, 0.025, PI / 2.0).unwrap();
    assert!((gap / half / 8.0 - 1.0).abs() < 0.03);
}

#[test]
fn segment_distance_follows_the_cubic_law() {
    let p = ell();
    let d = segment_distance(&p, 0.05);
    assert!((d - 2.945e-4).abs() < 1e-5, "{d}");
    let half = segment_distance(&p, 0.025);
    assert!((d / half / 8.0 - 1.0).abs() < 0.05);
    for eta in [0.02, 0.05, 0.1] {
        let gap = -offset_at_meridian(&p, eta, p.theta_cut()).unwrap();
        assert!((segment_distance(&p, eta) / gap - 1.0).abs() < 0.03);
    }
}

#[test]
fn point_on_the_arc_has_zero_distance() {
    let p = ell();
    let arc = integrate_geodesic(&p, 0.0, 4.0, &OdeOptions::default()).unwrap();
    let d = distance_to_segment(&p, Point::on_equator(&p, 1.0), &arc).unwrap();
    assert!(d < 1e-8, "{d}");
}

#[test]
fn pure_cubic_residual_shrinks_with_the_window() {
    let p = ell();
    let wide = fit_cubic_degeneracy(&p, (1e-2, 2e-1), None).unwrap();
    let narrow = fit_cubic_degeneracy(&p, (1e-3, 2e-2), None).unwrap();
    assert!(narrow.fit.residual < wide.fit.residual);
    assert!((wide.richardson_constant / wide.expected_constant - 1.0).abs() < 1e-3);
}

#[test]
fn no_reparametrization_beats_cubic_order() {
    let p = ell();
    let fits = variation_family_exponents(&p, &[-1.0, 0.0, 1.0], (1e-2, 1e-1), Some(6)).unwrap();
    for (q, fit) in fits {
        assert!(fit.exponent <= 3.05, "q = {q}: {}", fit.exponent);
    }
}

#[test]
fn transverse_constant_is_stable_under_window_halving() {
    let p = ell();
    let x = Point::on_equator(&p, 0.0);
    let y = Point::on_equator(&p, p.theta_cut());
    let full = hinged_quartic_order(&p, x, y, ProbeDirection::Transverse, (0.002, 0.02), None).unwrap();
    let half = hinged_quartic_order(&p, x, y, ProbeDirection::Transverse, (0.001, 0.01), None).unwrap();
    let (f, h) = (full.fit.unwrap(), half.fit.unwrap());
    assert!((f.exponent - 4.0).abs() < 0.01 && (h.exponent - 4.0).abs() < 0.01);
    assert!((f.constant / h.constant - 1.0).abs() < 0.05);
    // fitted value on (2,1), frozen
    assert!((f.constant - 5.63).abs() < 0.1, "{}", f.constant);
}

#[test]
fn wide_transverse_window_sees_the_sixth_order_term() {
    let p = ell();
    let x = Point::on_equator(&p, 0.0);
    let y = Point::on_equator(&p, p.theta_cut());
    let wide = hinged_quartic_order(&p, x, y, ProbeDirection::Transverse, (0.02, 0.2), None).unwrap();
    let e = wide.fit.unwrap().exponent;
    // frozen: 3.766 on this window
    assert!((e - 3.766).abs() < 0.01, "{e}");
}
