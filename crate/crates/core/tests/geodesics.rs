use std::f64::consts::{FRAC_PI_2, PI};

use revheat::geodesics::{distance, integrate_geodesic, HingedProbe, Point};
use revheat::ode::OdeOptions;
use revheat::profile::{Profile, ProfileSpec};

fn ell() -> Profile {
    Profile::ellipsoid(2.0, 1.0).unwrap()
}

#[test]
fn equator_distances_below_the_cut_are_arcs() {
    let p = ell();
    let x = Point::on_equator(&p, 0.0);
    for theta in [0.3, 1.0, 1.4] {
        let d = distance(&p, x, Point::on_equator(&p, theta)).unwrap();
        assert!((d.length - 2.0 * theta).abs() < 1e-9, "{theta}: {}", d.length);
        assert_eq!(d.multiplicity, 1);
    }
}

#[test]
fn beyond_the_cut_the_equator_is_not_minimal() {
    let p = ell();
    let x = Point::on_equator(&p, 0.0);
    let d = distance(&p, x, Point::on_equator(&p, 2.0)).unwrap();
    assert!(d.length < 4.0 - 1e-6);
    assert!(d.eta.abs() > 1e-3);
    assert_eq!(d.multiplicity, 2);
}

#[test]
fn distance_is_symmetric_under_reflection() {
    let p = ell();
    let x = Point::on_equator(&p, 0.3);
    let y = Point::new(p.a() - 0.4, 1.5);
    let y_mirror = Point::new(p.a() + 0.4, 1.5);
    let d1 = distance(&p, x, y).unwrap().length;
    let d2 = distance(&p, x, y_mirror).unwrap().length;
    assert!((d1 - d2).abs() < 1e-9);
    let y_back = Point::new(p.a() - 0.4, 0.3 - 1.2);
    let d3 = distance(&p, x, y_back).unwrap().length;
    assert!((d1 - d3).abs() < 1e-9);
}

#[test]
fn point_on_a_short_arc_is_at_arc_length() {
    let p = ell();
    let arc = integrate_geodesic(&p, 0.4, 1.0, &OdeOptions::default()).unwrap();
    let z = arc.point_at(&p, 1.0).unwrap();
    let d = distance(&p, Point::on_equator(&p, 0.0), z).unwrap();
    assert!((d.length - 1.0).abs() < 1e-8, "{}", d.length);
}

#[test]
fn hinged_minimum_at_the_midpoint() {
    let p = ell();
    let probe = HingedProbe::new(&p, Point::on_equator(&p, 0.0), Point::on_equator(&p, FRAC_PI_2)).unwrap();
    assert!((probe.d_xy - PI).abs() < 1e-9);
    assert!((probe.z0.r - p.a()).abs() < 1e-9 && (probe.z0.theta - PI / 4.0).abs() < 1e-9);
    let h0 = probe.energy(&p, probe.z0).unwrap();
    assert!((h0 - PI * PI / 4.0).abs() < 1e-8);
    for (dr, dth) in [(0.05, 0.0), (-0.05, 0.0), (0.0, 0.05), (0.03, -0.03)] {
        let z = Point::new(probe.z0.r + dr, probe.z0.theta + dth);
        assert!(probe.energy(&p, z).unwrap() >= h0 - 1e-10);
    }
}

#[test]
fn sphere_antipodes_are_equidistant() {
    let s = Profile::sphere(1.0).unwrap();
    let probe = HingedProbe::new(&s, Point::on_equator(&s, 0.0), Point::on_equator(&s, PI)).unwrap();
    assert!((probe.d_xy - PI).abs() < 1e-9);
    let d = distance(&s, Point::on_equator(&s, 0.0), Point::on_equator(&s, PI)).unwrap();
    assert!(d.multiplicity >= 2);
}

#[test]
fn profile_specs_round_trip() {
    let spec: ProfileSpec = "ellipsoid:2,1".parse().unwrap();
    let json = spec.to_json();
    assert_eq!(ProfileSpec::from_json(&json).unwrap(), spec);
    let p = Profile::from_spec(&spec).unwrap();
    assert!((p.a() - 2.422_112_055_136_919).abs() < 1e-12);
    assert!("ellipsoid:1,2".parse::<ProfileSpec>().unwrap().build().is_err());
    assert!("torus:1".parse::<ProfileSpec>().is_err());
}
