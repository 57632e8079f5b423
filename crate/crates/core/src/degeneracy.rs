//! The cubic law of geodesic variations at the cut-conjugate point, the
//! distance-to-segment law and the vanishing order of the hinged energy.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit_power_law, log_space, points_per_decade, PowerLawFit};
use crate::geodesics::{
    distance, geodesic_rhs, launch, GeodesicArc, HingedProbe, Point,
};
use crate::ode::{self, Crossing, Event, OdeOptions};
use crate::profile::Profile;
use crate::roots::golden_min;

/// Samples per decade of the independent variable in every fit window.
pub const PER_DECADE: usize = 8;

/// `C` in `a − r ≈ C η³`: `(6bβ − α²)√b π / (16√2 α^{5/2})`.
pub fn cubic_constant(p: &Profile) -> f64 {
    p.singularity_defect() * p.b().sqrt() * PI / (16.0 * 2f64.sqrt() * p.alpha().powf(2.5))
}

/// Offset `σ = r − a` where the geodesic with launch angle `η > 0` first meets
/// the meridian `θ = theta_target` after its turning point.
pub fn offset_at_meridian(p: &Profile, eta: f64, theta_target: f64) -> Result<f64> {
    if !(eta > 0.0 && eta < PI / 2.0) {
        return Err(Error::OutOfRange {
            what: "eta",
            value: eta,
            range: "(0, π/2)".into(),
        });
    }
    let (y0, nu) = launch(p, eta);
    let rhs = geodesic_rhs(p, nu);
    let opts = OdeOptions::default();
    let t_max = 4.0 * (p.a() + p.b() * theta_target);
    let turn = [Event::new(Crossing::Rising, |_t, y: &[f64; 3]| y[1])];
    let at_turn = ode::integrate(&rhs, 0.0, y0, t_max, &opts, &turn, |_, _| {})?;
    if at_turn.event.is_none() || at_turn.y[2] >= theta_target {
        return Err(Error::Precondition(format!(
            "geodesic with eta = {eta} reaches theta = {theta_target} before its turning point"
        )));
    }
    let hit = [Event::new(Crossing::Rising, move |_t, y: &[f64; 3]| {
        y[2] - theta_target
    })];
    let out = ode::integrate(&rhs, at_turn.t, at_turn.y, t_max, &opts, &hit, |_, _| {})?;
    match out.event {
        Some(_) => Ok(out.y[0]),
        None => Err(Error::EventNotFound(format!(
            "meridian theta = {theta_target} not reached"
        ))),
    }
}

/// `r` at the first meeting with the meridian `θ = theta_target` after the turning point.
pub fn r_at_meridian(p: &Profile, eta: f64, theta_target: f64) -> Result<f64> {
    Ok(p.a() + offset_at_meridian(p, eta, theta_target)?)
}

/// Fit of `a − r ≈ C η^p` at the cut meridian, with its samples.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CubicLaw {
    pub fit: PowerLawFit,
    /// Closed-form constant the fit should reproduce.
    pub expected_constant: f64,
    /// `C` from the two-term model `(a − r)/η³ = C + C₂η²`.
    pub richardson_constant: f64,
    /// `(η, a − r)` pairs.
    pub samples: Vec<(f64, f64)>,
}

/// `a − r` at the cut meridian over log-spaced launch angles; no singularity check.
pub fn cut_meridian_offsets(p: &Profile, etas: &[f64]) -> Result<Vec<(f64, f64)>> {
    let theta_cut = p.theta_cut();
    etas.iter()
        .map(|&eta| Ok((eta, -offset_at_meridian(p, eta, theta_cut)?)))
        .collect()
}

/// Fits the cubic law over `eta_window`; refuses singular profiles.
pub fn fit_cubic_degeneracy(
    p: &Profile,
    eta_window: (f64, f64),
    n_samples: Option<usize>,
) -> Result<CubicLaw> {
    if p.is_singular() {
        return Err(Error::SingularProfile {
            defect: p.singularity_defect(),
        });
    }
    let (lo, hi) = eta_window;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::Precondition(format!("bad eta window ({lo}, {hi})")));
    }
    let n = n_samples.unwrap_or_else(|| points_per_decade(lo, hi, PER_DECADE));
    let samples = cut_meridian_offsets(p, &log_space(lo, hi, n))?;
    let (x, y): (Vec<f64>, Vec<f64>) = samples.iter().copied().unzip();
    let fit = fit_power_law(&x, &y)?;
    let design = nalgebra::DMatrix::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { x[i] * x[i] });
    let rhs = nalgebra::DVector::from_iterator(n, x.iter().zip(&y).map(|(e, v)| v / e.powi(3)));
    let richardson = crate::fit::least_squares(&design, &rhs)?;
    Ok(CubicLaw {
        fit,
        expected_constant: cubic_constant(p),
        richardson_constant: richardson[0],
        samples,
    })
}

/// Distance from `q` to the geodesic segment `arc`, minimized over the arc
/// parameter by a sample scan and golden-section refinement. `q` must lie on
/// the equator.
pub fn distance_to_segment(p: &Profile, q: Point, arc: &GeodesicArc) -> Result<f64> {
    let (t0, t1) = (arc.samples[0].theta, arc.samples.last().map_or(0.0, |s| s.theta));
    if !(t0 <= q.theta && q.theta <= t1) {
        return Err(Error::Precondition(format!(
            "segment spans theta in [{t0}, {t1}], which misses {}",
            q.theta
        )));
    }
    // cheap local proxy to pick the bracket
    let proxy = |k: usize| {
        let s = &arc.samples[k];
        let m = p.m_at_offset(s.r - p.a());
        ((s.r - q.r).powi(2) + (m * (s.theta - q.theta)).powi(2)).sqrt()
    };
    let k = (0..arc.samples.len())
        .min_by(|&i, &j| proxy(i).total_cmp(&proxy(j)))
        .unwrap_or(0);
    let lo = arc.samples[k.saturating_sub(1)].t;
    let hi = arc.samples[(k + 1).min(arc.samples.len() - 1)].t;
    let d = |t: f64| {
        arc.point_at(p, t)
            .and_then(|z| distance(p, q, z))
            .map_or(f64::INFINITY, |d| d.length)
    };
    let (_, best) = golden_min(d, lo, hi, 1e-9 * (hi - lo).max(1e-12));
    if best.is_finite() {
        Ok(best)
    } else {
        Err(Error::NoGeodesic("distance to segment".into()))
    }
}

/// Fit of `d((a, θ_cut), segment) ≈ C η^p` over launch angles.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SegmentLaw {
    pub fit: PowerLawFit,
    pub expected_constant: f64,
    /// `(η, distance)` pairs.
    pub samples: Vec<(f64, f64)>,
}

/// Distance from the cut point to the geodesic segment with launch angle `η`,
/// over a log-spaced window of `η`.
pub fn fit_segment_law(
    p: &Profile,
    eta_window: (f64, f64),
    n_samples: Option<usize>,
) -> Result<SegmentLaw> {
    if p.is_singular() {
        return Err(Error::SingularProfile {
            defect: p.singularity_defect(),
        });
    }
    let (lo, hi) = eta_window;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::Precondition(format!("bad eta window ({lo}, {hi})")));
    }
    let n = n_samples.unwrap_or_else(|| points_per_decade(lo, hi, PER_DECADE));
    let cut = Point::on_equator(p, p.theta_cut());
    let t_end = 1.05 * p.b() * p.theta_cut();
    let samples = log_space(lo, hi, n)
        .into_iter()
        .map(|eta| {
            let arc = crate::geodesics::integrate_geodesic(p, eta, t_end, &OdeOptions::default())?;
            Ok((eta, distance_to_segment(p, cut, &arc)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let (x, y): (Vec<f64>, Vec<f64>) = samples.iter().copied().unzip();
    Ok(SegmentLaw {
        fit: fit_power_law(&x, &y)?,
        expected_constant: cubic_constant(p),
        samples,
    })
}

/// Direction in which the hinged energy is probed away from `z0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeDirection {
    AlongGeodesic,
    Transverse,
}

/// Fit of `h(z(s)) − h(z0) ≈ c s^p`, where `z(s)` is displaced from `z0`
/// by arc length `s·d(x, y)/2`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HingedLaw {
    pub probe: HingedProbe,
    pub direction: ProbeDirection,
    pub h0: f64,
    /// `max |h − h0|` over the window.
    pub max_variation: f64,
    /// Absent when `h` is flat to solver accuracy.
    pub fit: Option<PowerLawFit>,
    /// `(s, h − h0)` pairs.
    pub samples: Vec<(f64, f64)>,
}

/// Largest tolerated `|h(z0) − d²/4|`.
pub const HINGE_GATE: f64 = 1e-6;

/// Samples `h − h0` along or across the shortest geodesic from `x` to `y`
/// (both on the equator). `window` gives the displacement range as
/// fractions of `d(x, y)`.
pub fn hinged_quartic_order(
    p: &Profile,
    x: Point,
    y: Point,
    direction: ProbeDirection,
    window: (f64, f64),
    n_samples: Option<usize>,
) -> Result<HingedLaw> {
    let probe = HingedProbe::new(p, x, y)?;
    let d = probe.d_xy;
    let h0 = probe.energy(p, probe.z0)?;
    if (h0 - 0.25 * d * d).abs() > HINGE_GATE {
        return Err(Error::Precondition(format!(
            "h(z0) = {h0} differs from d²/4 = {} beyond {HINGE_GATE}",
            0.25 * d * d
        )));
    }
    let (lo, hi) = window;
    let n = n_samples.unwrap_or_else(|| points_per_decade(lo, hi, PER_DECADE));
    let mut samples = Vec::with_capacity(n);
    for frac in log_space(lo, hi, n) {
        let shift = frac * d;
        let z = match direction {
            ProbeDirection::AlongGeodesic => {
                Point::new(probe.z0.r, probe.z0.theta + shift / p.m_at_offset(probe.z0.r - p.a()))
            }
            ProbeDirection::Transverse => Point::new(probe.z0.r + shift, probe.z0.theta),
        };
        samples.push((shift / (0.5 * d), probe.energy(p, z)? - h0));
    }
    let max_variation = samples.iter().map(|s| s.1.abs()).fold(0.0, f64::max);
    let flat = max_variation <= 1e-10 * h0.max(1.0);
    let fit = if flat {
        None
    } else {
        let (s, v): (Vec<f64>, Vec<f64>) = samples.iter().copied().unzip();
        Some(fit_power_law(&s, &v)?)
    };
    Ok(HingedLaw {
        probe,
        direction,
        h0,
        max_variation,
        fit,
        samples,
    })
}

/// For each `q`, the fitted exponent of `s ↦ d(γ_s(t_cut + q s²), y)`, where
/// `γ_s` is the geodesic from `(a, 0)` with launch angle `s` and `y` the cut point.
pub fn variation_family_exponents(
    p: &Profile,
    qs: &[f64],
    eta_window: (f64, f64),
    n_samples: Option<usize>,
) -> Result<Vec<(f64, PowerLawFit)>> {
    let theta_cut = p.theta_cut();
    let t_cut = p.b() * theta_cut;
    let y = Point::on_equator(p, theta_cut);
    let (lo, hi) = eta_window;
    let n = n_samples.unwrap_or_else(|| points_per_decade(lo, hi, PER_DECADE));
    let etas = log_space(lo, hi, n);
    qs.iter()
        .map(|&q| {
            let mut dists = Vec::with_capacity(n);
            for &eta in &etas {
                let t = t_cut + q * eta * eta;
                let arc = crate::geodesics::integrate_geodesic(p, eta, t, &OdeOptions::default())?;
                let z = arc.point_at(p, t)?;
                dists.push(distance(p, y, z)?.length);
            }
            Ok((q, fit_power_law(&etas, &dists)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_constant() {
        let p = Profile::ellipsoid(2.0, 1.0).unwrap();
        assert!((cubic_constant(&p) - 3.0 * PI / 4.0).abs() < 1e-13);
        assert_eq!(cubic_constant(&Profile::sphere(1.0).unwrap()), 0.0);
    }

    #[test]
    fn sphere_focuses_exactly() {
        let s = Profile::sphere(1.0).unwrap();
        for eta in [0.01, 0.1, 0.5] {
            assert!((r_at_meridian(&s, eta, PI).unwrap() - s.a()).abs() < 1e-10);
        }
        assert!(matches!(
            fit_cubic_degeneracy(&s, (1e-3, 1e-1), None),
            Err(Error::SingularProfile { .. })
        ));
    }

    #[test]
    fn cubic_offset_at_flagship_point() {
        let p = Profile::ellipsoid(2.0, 1.0).unwrap();
        let a_minus_r = -offset_at_meridian(&p, 0.05, PI / 2.0).unwrap();
        assert!((a_minus_r - 2.945e-4).abs() < 3e-6, "{a_minus_r}");
        let half = -offset_at_meridian(&p, 0.025, PI / 2.0).unwrap();
        assert!((a_minus_r / half / 8.0 - 1.0).abs() < 0.03);
    }

    #[test]
    fn turning_point_precondition() {
        let p = Profile::ellipsoid(2.0, 1.0).unwrap();
        assert!(matches!(
            offset_at_meridian(&p, 0.05, 0.1),
            Err(Error::Precondition(_))
        ));
    }
}
