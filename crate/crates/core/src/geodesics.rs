//! Clairaut geodesics launched from the equator, the cut-locus angle `φ(ν)`,
//! Jacobi fields, two-point distances and the hinged energy.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{self, dopri_step, Crossing, Event, OdeOptions};
use crate::profile::{Profile, ProfileKind};
use crate::quad;
use crate::roots::{brent, golden_min};
use crate::series::{phi_expansion_from_psi, TruncSeries1};

/// A point `(r, θ)` in geodesic polar coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub r: f64,
    pub theta: f64,
}

impl Point {
    pub fn new(r: f64, theta: f64) -> Self {
        Self { r, theta }
    }

    /// Equator point at angle `theta`.
    pub fn on_equator(p: &Profile, theta: f64) -> Self {
        Self { r: p.a(), theta }
    }
}

/// `ν = b cos η`.
pub fn clairaut_of_angle(p: &Profile, eta: f64) -> Result<f64> {
    if !(0.0..FRAC_PI_2).contains(&eta) {
        return Err(Error::OutOfRange {
            what: "eta",
            value: eta,
            range: "[0, π/2)".into(),
        });
    }
    Ok(p.b() * eta.cos())
}

/// Launch angle `η ∈ [0, π/2)` of the geodesic with Clairaut constant `ν`,
/// computed without cancellation as `2 asin √((b − ν)/(2b))`.
pub fn angle_of_clairaut(p: &Profile, nu: f64) -> f64 {
    2.0 * ((p.b() - nu) / (2.0 * p.b())).max(0.0).sqrt().asin()
}

/// Offset `a − R` of the turning parallel for launch angle `η`, where `m(R) = b cos η`.
pub fn turning_offset_of_angle(p: &Profile, eta: f64) -> f64 {
    let eta = eta.abs();
    if eta == 0.0 {
        return 0.0;
    }
    match p.kind() {
        ProfileKind::Ellipsoid { b, c } => {
            let kappa = (b * b - c * c) / (c * c);
            c * crate::special::ellint_e(eta, -kappa)
        }
        ProfileKind::Sphere { radius } => radius * eta,
        ProfileKind::Analytic => {
            let nu = p.b() * eta.cos();
            let g = |s: f64| p.m_at_offset(-s) - nu;
            let (lo, hi) = (0.0, p.a());
            brent(g, lo, hi, g(lo), g(hi), 1e-12 * p.a()).unwrap_or(p.a())
        }
    }
}

/// Turning radius `R ∈ (0, a]` with `m(R) = ν`.
pub fn turning_radius(p: &Profile, nu: f64) -> Result<f64> {
    if !(nu > 0.0 && nu <= p.b()) {
        return Err(Error::OutOfRange {
            what: "nu",
            value: nu,
            range: format!("(0, {}]", p.b()),
        });
    }
    Ok(p.a() - turning_offset_of_angle(p, angle_of_clairaut(p, nu)))
}

/// `φ(ν) = 2∫_R^a ν dr / (m √(m² − ν²))` by adaptive Gauss–Legendre quadrature.
pub fn phi_quadrature(p: &Profile, nu: f64) -> Result<f64> {
    if !(nu > 0.0 && nu < p.b()) {
        return Err(Error::OutOfRange {
            what: "nu",
            value: nu,
            range: format!("(0, {})", p.b()),
        });
    }
    Ok(phi_of_angle(p, angle_of_clairaut(p, nu)))
}

/// `φ` as a function of the launch angle `η ∈ (0, π/2)`.
///
/// Ellipsoids and spheres are integrated in the meridian angle `w`
/// (`m = b cos w`, `dr = S'(w) dw`) with `w = η sin²τ`, so that
/// `m² − ν² = b² sin(η cos²τ) sin(η + w)` carries no cancellation. Other
/// profiles use `a − r = (a − R) cos²τ`.
pub fn phi_of_angle(p: &Profile, eta: f64) -> f64 {
    let b = p.b();
    let nu = b * eta.cos();
    let speed: Option<Box<dyn Fn(f64) -> f64>> = match p.kind() {
        ProfileKind::Ellipsoid { b, c } => {
            Some(Box::new(move |w: f64| (c * c + (b * b - c * c) * w.sin().powi(2)).sqrt()))
        }
        ProfileKind::Sphere { radius } => Some(Box::new(move |_| radius)),
        ProfileKind::Analytic => None,
    };
    match speed {
        Some(speed) => {
            let integrand = |tau: f64| {
                let (st, ct) = tau.sin_cos();
                let w = eta * st * st;
                let root = ((eta * ct * ct).sin() * (eta + w).sin()).sqrt();
                4.0 * nu * eta * speed(w) * st * ct / (b * b * w.cos() * root)
            };
            quad::integrate(integrand, 0.0, FRAC_PI_2, 1e-13).value
        }
        None => {
            let s_r = turning_offset_of_angle(p, eta);
            let integrand = |tau: f64| {
                let (st, ct) = tau.sin_cos();
                let x = s_r * ct * ct;
                let m = p.m_at_offset(-x);
                let gap = (m - nu).max(f64::MIN_POSITIVE);
                4.0 * nu * s_r * st * ct / (m * (gap * (m + nu)).sqrt())
            };
            quad::integrate(integrand, 0.0, FRAC_PI_2, 1e-13).value
        }
    }
}

/// `φ(ν)` expanded in powers of `b − ν` to the given order.
pub fn phi_expansion(p: &Profile, order: usize) -> Result<TruncSeries1> {
    if !(p.alpha() > 0.0) {
        return Err(Error::NonPositiveCurvature { alpha: p.alpha() });
    }
    phi_expansion_from_psi(&p.psi_coefficients(order + 1)?, order)
}

/// One sample of a geodesic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArcSample {
    pub t: f64,
    pub r: f64,
    pub theta: f64,
    pub rdot: f64,
    pub thetadot: f64,
}

/// Unit-speed geodesic from the equator point `(a, 0)` with launch angle `η`
/// (positive heads towards `r < a`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeodesicArc {
    pub nu: f64,
    pub eta: f64,
    #[serde(rename = "R")]
    pub turning_radius: f64,
    pub samples: Vec<ArcSample>,
    /// Raw states `(σ = r − a, ṙ, θ)` matching `samples`.
    #[serde(skip)]
    states: Vec<[f64; 3]>,
}

pub(crate) fn geodesic_rhs(p: &Profile, nu: f64) -> impl Fn(f64, &[f64; 3]) -> [f64; 3] + '_ {
    move |_t, y| {
        let j = p.jet_at_offset(y[0]);
        let m2 = j.m * j.m;
        [y[1], nu * nu * j.dm / (m2 * j.m), nu / m2]
    }
}

/// Initial state `(σ, ṙ, θ)` and `ν` for launch angle `η ∈ (−π/2, π/2)`.
pub(crate) fn launch(p: &Profile, eta: f64) -> ([f64; 3], f64) {
    ([0.0, -eta.sin(), 0.0], p.b() * eta.cos())
}

fn chart_guard<'a>(p: &'a Profile) -> Event<'a, 3> {
    let limit = p.a() * (1.0 - 1e-9);
    Event::new(Crossing::Rising, move |_t, y: &[f64; 3]| y[0].abs() - limit)
}

/// Integrates the geodesic with launch angle `η ∈ (−π/2, π/2)` up to `t_end`.
pub fn integrate_geodesic(
    p: &Profile,
    eta: f64,
    t_end: f64,
    opts: &OdeOptions,
) -> Result<GeodesicArc> {
    if !(eta.abs() < FRAC_PI_2) {
        return Err(Error::OutOfRange {
            what: "eta",
            value: eta,
            range: "(-π/2, π/2)".into(),
        });
    }
    let (y0, nu) = launch(p, eta);
    let rhs = geodesic_rhs(p, nu);
    let mut states = Vec::new();
    let mut times = Vec::new();
    let out = ode::integrate(&rhs, 0.0, y0, t_end, opts, &[chart_guard(p)], |t, y| {
        times.push(t);
        states.push(*y);
    })?;
    if out.event.is_some() {
        return Err(Error::LeftChart { t: out.t });
    }
    let samples = times
        .iter()
        .zip(&states)
        .map(|(&t, y)| {
            let m = p.m_at_offset(y[0]);
            ArcSample {
                t,
                r: p.a() + y[0],
                theta: y[2],
                rdot: y[1],
                thetadot: nu / (m * m),
            }
        })
        .collect();
    Ok(GeodesicArc {
        nu,
        eta,
        turning_radius: p.a() - turning_offset_of_angle(p, eta),
        samples,
        states,
    })
}

impl GeodesicArc {
    pub fn t_end(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.t)
    }

    /// State `(σ, ṙ, θ)` at time `t` within the arc, by a single exact
    /// Runge–Kutta step from the preceding sample.
    pub fn state_at(&self, p: &Profile, t: f64) -> Result<[f64; 3]> {
        if !(0.0..=self.t_end()).contains(&t) {
            return Err(Error::OutOfRange {
                what: "t",
                value: t,
                range: format!("[0, {}]", self.t_end()),
            });
        }
        let k = self.samples.partition_point(|s| s.t <= t).max(1) - 1;
        let t0 = self.samples[k].t;
        if t == t0 {
            return Ok(self.states[k]);
        }
        Ok(dopri_step(&geodesic_rhs(p, self.nu), t0, &self.states[k], t - t0).0)
    }

    pub fn point_at(&self, p: &Profile, t: f64) -> Result<Point> {
        let y = self.state_at(p, t)?;
        Ok(Point::new(p.a() + y[0], y[2]))
    }

    /// Largest deviation of `m²θ̇` from `ν` over the samples.
    pub fn clairaut_residual(&self, p: &Profile) -> f64 {
        self.states
            .iter()
            .zip(&self.samples)
            .map(|(y, s)| (p.m_at_offset(y[0]).powi(2) * s.thetadot - self.nu).abs())
            .fold(0.0, f64::max)
    }

    /// Largest deviation of `ṙ² + m²θ̇²` from one over the samples.
    pub fn speed_residual(&self, p: &Profile) -> f64 {
        self.states
            .iter()
            .map(|y| {
                let m = p.m_at_offset(y[0]);
                (y[1] * y[1] + (self.nu / m).powi(2) - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// First return of the arc to the equator after its turning point, as `(t, θ)`.
pub fn first_equator_crossing(p: &Profile, arc: &GeodesicArc) -> Result<(f64, f64)> {
    if !(arc.eta > 0.0) {
        return Err(Error::Precondition(
            "equator crossing needs a launch angle eta > 0".into(),
        ));
    }
    let (y0, nu) = launch(p, arc.eta);
    let rhs = geodesic_rhs(p, nu);
    let events = [
        Event::new(Crossing::Rising, |_t, y: &[f64; 3]| y[0]),
        chart_guard(p),
    ];
    let out = ode::integrate(&rhs, 0.0, y0, arc.t_end(), &OdeOptions::default(), &events, |_, _| {})?;
    match out.event {
        Some(0) => Ok((out.t, out.y[2])),
        Some(_) => Err(Error::LeftChart { t: out.t }),
        None => Err(Error::EventNotFound(format!(
            "no equator crossing before t = {}",
            arc.t_end()
        ))),
    }
}

fn jacobi_rhs(p: &Profile, nu: f64) -> impl Fn(f64, &[f64; 5]) -> [f64; 5] + '_ {
    move |_t, y| {
        let j = p.jet_at_offset(y[0]);
        let m2 = j.m * j.m;
        let k = -j.ddm / j.m;
        [y[1], nu * nu * j.dm / (m2 * j.m), nu / m2, y[4], -k * y[3]]
    }
}

/// Normal Jacobi field `u` with `u(0) = 0, u'(0) = 1` along the arc, at the
/// integrator's accepted steps, as `(t, u)` pairs.
pub fn jacobi_field(p: &Profile, arc: &GeodesicArc) -> Result<Vec<(f64, f64)>> {
    let (g, nu) = launch(p, arc.eta);
    let y0 = [g[0], g[1], g[2], 0.0, 1.0];
    let mut out = Vec::new();
    ode::integrate(&jacobi_rhs(p, nu), 0.0, y0, arc.t_end(), &OdeOptions::default(), &[], |t, y| {
        out.push((t, y[3]))
    })?;
    Ok(out)
}

/// First positive zero of the Jacobi field `u'' + K(γ(t)) u = 0`, `u(0) = 0`, `u'(0) = 1`.
pub fn jacobi_conjugate_time(p: &Profile, arc: &GeodesicArc) -> Result<f64> {
    let (g, nu) = launch(p, arc.eta);
    let y0 = [g[0], g[1], g[2], 0.0, 1.0];
    let events = [Event::new(Crossing::Falling, |_t, y: &[f64; 5]| y[3])];
    let out = ode::integrate(
        &jacobi_rhs(p, nu),
        0.0,
        y0,
        arc.t_end(),
        &OdeOptions::default(),
        &events,
        |_, _| {},
    )?;
    match out.event {
        Some(_) => Ok(out.t),
        None => Err(Error::EventNotFound(format!(
            "Jacobi field has no zero before t = {}",
            arc.t_end()
        ))),
    }
}

/// Cut data of an equator point.
#[derive(Debug, Clone)]
pub struct CutStructure {
    pub theta_cut: f64,
    pub t_cut: f64,
    pub t_conj: f64,
    profile: Profile,
}

impl CutStructure {
    pub fn new(p: &Profile) -> Result<Self> {
        let theta_cut = p.theta_cut();
        let t_cut = p.b() * theta_cut;
        let equator = integrate_geodesic(p, 0.0, 1.5 * t_cut, &OdeOptions::default())?;
        Ok(Self {
            theta_cut,
            t_cut,
            t_conj: jacobi_conjugate_time(p, &equator)?,
            profile: p.clone(),
        })
    }

    /// `φ(ν)` by quadrature.
    pub fn phi_of_nu(&self, nu: f64) -> Result<f64> {
        phi_quadrature(&self.profile, nu)
    }
}

/// Options of the shooting distance solver.
#[derive(Debug, Clone, Copy)]
pub struct DistanceOptions {
    /// Launch angles sampled on `(−π/2, π/2)`; forced odd so that `η = 0` is included.
    pub grid: usize,
    pub ode: OdeOptions,
}

impl Default for DistanceOptions {
    fn default() -> Self {
        Self {
            grid: 65,
            ode: OdeOptions::default(),
        }
    }
}

/// Length of a shortest geodesic and the number of distinct shortest branches found.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Distance {
    pub length: f64,
    pub multiplicity: usize,
    /// Launch angle of a shortest branch, in the frame where the target
    /// lies at an angle in `[0, π]` from the source.
    pub eta: f64,
    /// Whether the shortest branch winds the long way round (`θ` target `2π − Δ`).
    pub long_way: bool,
}

fn wrap_angle(d: f64) -> f64 {
    d.rem_euclid(TAU)
}

struct Shot {
    t: f64,
    sigma: f64,
}

/// Integrates from `(a, 0)` until `θ = target`, or gives up at `t_max`.
fn shoot(p: &Profile, eta: f64, target: f64, t_max: f64, opts: &OdeOptions) -> Option<Shot> {
    let (y0, nu) = launch(p, eta);
    let rhs = geodesic_rhs(p, nu);
    let events = [
        Event::new(Crossing::Rising, move |_t, y: &[f64; 3]| y[2] - target),
        chart_guard(p),
    ];
    let out = ode::integrate(&rhs, 0.0, y0, t_max, opts, &events, |_, _| {}).ok()?;
    (out.event == Some(0)).then_some(Shot {
        t: out.t,
        sigma: out.y[0],
    })
}

/// Geodesic distance from the equator point `x` to `y` (off the poles).
pub fn distance(p: &Profile, x: Point, y: Point) -> Result<Distance> {
    distance_with(p, x, y, &DistanceOptions::default())
}

pub fn distance_with(p: &Profile, x: Point, y: Point, opts: &DistanceOptions) -> Result<Distance> {
    let a = p.a();
    if (x.r - a).abs() > 1e-12 * a {
        return Err(Error::Precondition(format!(
            "distance needs the source on the equator, got r = {}",
            x.r
        )));
    }
    if !(y.r > 0.0 && y.r < 2.0 * a) {
        return Err(Error::OutOfRange {
            what: "r",
            value: y.r,
            range: format!("(0, {})", 2.0 * a),
        });
    }
    let sigma_y = y.r - a;
    let mut delta = wrap_angle(y.theta - x.theta);
    if delta > PI {
        delta = TAU - delta;
    }
    if delta <= 1e-15 {
        return Ok(Distance {
            length: sigma_y.abs(),
            multiplicity: 1,
            eta: FRAC_PI_2.copysign(-sigma_y),
            long_way: false,
        });
    }
    let t_ub = (p.b() * delta + sigma_y.abs()).min(a + y.r).min(3.0 * a - y.r);
    let t_max = 2.0 * t_ub + 1e-9;

    let n = opts.grid | 1;
    let mut etas: Vec<f64> = (0..n)
        .map(|k| -FRAC_PI_2 + PI * (k as f64 + 0.5) / n as f64)
        .collect();
    // locally flat guess, refined by a small fan of launch angles
    let guess = (-sigma_y).atan2(p.b() * delta);
    let step = 0.005 * (4.0 * (FRAC_PI_2 - guess.abs())).min(1.0);
    for k in -4i32..=4 {
        let e = guess + step * k as f64;
        if e.abs() < FRAC_PI_2 {
            etas.push(e);
        }
    }
    etas.push(0.0);
    // targets near a pole are reached from launch angles close to ±π/2
    for k in 2..=6 {
        let gap = 10f64.powi(-k);
        etas.push(FRAC_PI_2 - gap);
        etas.push(gap - FRAC_PI_2);
    }
    etas.sort_by(f64::total_cmp);
    etas.dedup();

    let mut candidates: Vec<(f64, f64, bool)> = Vec::new();
    for (target, long_way) in [(delta, false), (TAU - delta, true)] {
        let f = |eta: f64| shoot(p, eta, target, t_max, &opts.ode);
        let shots: Vec<Option<Shot>> = etas.iter().map(|&e| f(e)).collect();
        let resid = |s: &Option<Shot>| s.as_ref().map(|s| s.sigma - sigma_y);
        let scale = 1e-12 * a;
        for k in 0..etas.len() {
            let Some(fk) = resid(&shots[k]) else { continue };
            if fk.abs() <= scale {
                candidates.push((shots[k].as_ref().unwrap().t, etas[k], long_way));
                continue;
            }
            if k + 1 < etas.len() {
                if let Some(fk1) = resid(&shots[k + 1]) {
                    if fk1.abs() > scale && fk.signum() != fk1.signum() {
                        let g = |e: f64| f(e).map_or(f64::NAN, |s| s.sigma - sigma_y);
                        if let Some(root) = brent(g, etas[k], etas[k + 1], fk, fk1, 1e-14) {
                            if let Some(s) = f(root) {
                                if (s.sigma - sigma_y).abs() <= 1e-9 * a {
                                    candidates.push((s.t, root, long_way));
                                }
                            }
                        }
                    }
                }
            }
            // a double root shows up as a local minimum of |F| without a sign change
            if k >= 1 && k + 1 < etas.len() {
                if let (Some(fp), Some(fn_)) = (resid(&shots[k - 1]), resid(&shots[k + 1])) {
                    if fk.abs() < fp.abs()
                        && fk.abs() < fn_.abs()
                        && fk.signum() == fp.signum()
                        && fk.signum() == fn_.signum()
                    {
                        let g = |e: f64| f(e).map_or(f64::INFINITY, |s| (s.sigma - sigma_y).abs());
                        let (e, v) = golden_min(g, etas[k - 1], etas[k + 1], 1e-12);
                        if v <= 1e-9 * a {
                            if let Some(s) = f(e) {
                                candidates.push((s.t, e, long_way));
                            }
                        }
                    }
                }
            }
        }
    }
    // meridians through a pole join opposite meridians
    if (delta - PI).abs() <= 1e-15 {
        candidates.push((a + y.r, FRAC_PI_2, false));
        candidates.push((3.0 * a - y.r, -FRAC_PI_2, false));
    }
    let shortest = candidates
        .iter()
        .map(|c| c.0)
        .fold(f64::INFINITY, f64::min);
    if !shortest.is_finite() {
        return Err(Error::NoGeodesic(format!(
            "from ({}, {}) to ({}, {})",
            x.r, x.theta, y.r, y.theta
        )));
    }
    // near-ties are resolved towards the branch with the smallest |η|
    let tol = 1e-9 * shortest.max(1e-3);
    let ties: Vec<(f64, f64, bool)> = candidates
        .iter()
        .copied()
        .filter(|c| c.0 - shortest <= tol)
        .collect();
    let best = ties
        .iter()
        .copied()
        .min_by(|u, v| u.1.abs().total_cmp(&v.1.abs()).then(u.0.total_cmp(&v.0)))
        .expect("at least one tie");
    let mut branches: Vec<f64> = ties
        .iter()
        .map(|c| c.1 + if c.2 { 10.0 } else { 0.0 })
        .collect();
    branches.sort_by(f64::total_cmp);
    branches.dedup_by(|u, v| (*u - *v).abs() < 1e-7);
    Ok(Distance {
        length: best.0,
        multiplicity: branches.len(),
        eta: best.1,
        long_way: best.2,
    })
}

/// Two equator points and the midpoint of a shortest geodesic between them.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HingedProbe {
    pub x: Point,
    pub y: Point,
    pub z0: Point,
    pub d_xy: f64,
}

impl HingedProbe {
    /// Builds the probe for equator points `x` and `y`.
    pub fn new(p: &Profile, x: Point, y: Point) -> Result<Self> {
        for q in [x, y] {
            if (q.r - p.a()).abs() > 1e-12 * p.a() {
                return Err(Error::Precondition(
                    "hinged probes anchor at equator points".into(),
                ));
            }
        }
        let d = distance(p, x, y)?;
        // The shortest branch with smallest |η| is reported; for equator
        // targets up to the cut point this is the equator itself.
        let arc = integrate_geodesic(p, d.eta, 0.5 * d.length, &OdeOptions::default())?;
        let mid = arc.point_at(p, 0.5 * d.length)?;
        let sign = if wrap_angle(y.theta - x.theta) > PI { -1.0 } else { 1.0 };
        let dir = if d.long_way { -sign } else { sign };
        Ok(Self {
            x,
            y,
            z0: Point::new(mid.r, x.theta + dir * mid.theta),
            d_xy: d.length,
        })
    }

    /// `h(z) = ½d(x, z)² + ½d(y, z)²`.
    pub fn energy(&self, p: &Profile, z: Point) -> Result<f64> {
        hinged_energy(p, self, z)
    }
}

/// `h_{x,y}(z) = ½d(x, z)² + ½d(y, z)²`.
pub fn hinged_energy(p: &Profile, probe: &HingedProbe, z: Point) -> Result<f64> {
    let dx = distance(p, probe.x, z)?.length;
    let dy = distance(p, probe.y, z)?.length;
    Ok(0.5 * (dx * dx + dy * dy))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ell() -> Profile {
        Profile::ellipsoid(2.0, 1.0).unwrap()
    }

    #[test]
    fn clairaut_constant() {
        let p = ell();
        assert_eq!(clairaut_of_angle(&p, 0.0).unwrap(), 2.0);
        assert!((clairaut_of_angle(&p, PI / 3.0).unwrap() - 1.0).abs() < 1e-15);
        let eta = 1e-3;
        let gap = 2.0 - clairaut_of_angle(&p, eta).unwrap();
        assert!((gap - 2.0 * eta * eta / 2.0).abs() < 1e-12);
        assert!(clairaut_of_angle(&p, FRAC_PI_2).is_err());
        assert!((angle_of_clairaut(&p, 1.0) - PI / 3.0).abs() < 1e-15);
    }

    #[test]
    fn turning_radii() {
        let p = ell();
        assert_eq!(turning_radius(&p, 2.0).unwrap(), p.a());
        let s = Profile::sphere(1.0).unwrap();
        assert!((turning_radius(&s, 0.5f64.sqrt()).unwrap() - PI / 4.0).abs() < 1e-14);
        let off = p.a() - turning_radius(&p, 2.0 - 1e-4).unwrap();
        assert!((off - 1e-2).abs() < 1e-5);
        assert!((p.m(p.a() - off).unwrap() - (2.0 - 1e-4)).abs() < 1e-14);
        assert!(turning_radius(&p, 0.0).is_err() && turning_radius(&p, 2.5).is_err());
    }

    #[test]
    fn sphere_phi_is_pi() {
        let s = Profile::sphere(1.0).unwrap();
        for nu in [0.2, 0.5, 0.9] {
            assert!((phi_quadrature(&s, nu).unwrap() - PI).abs() < 1e-10);
        }
    }

    #[test]
    fn ellipsoid_phi_near_equator() {
        let p = ell();
        let phi = phi_quadrature(&p, 2.0 - 1e-3).unwrap();
        assert!((phi - (FRAC_PI_2 + 3.0 * PI / 8.0 * 1e-3)).abs() < 5e-6);
        let mut prev = f64::INFINITY;
        for k in 1..40 {
            let v = phi_quadrature(&p, 2.0 * k as f64 / 40.0).unwrap();
            assert!(v <= prev + 1e-12);
            prev = v;
        }
    }

    #[test]
    fn equator_geodesic_and_conjugate_time() {
        let p = ell();
        let arc = integrate_geodesic(&p, 0.0, 4.0, &OdeOptions::default()).unwrap();
        for s in &arc.samples {
            assert!((s.r - p.a()).abs() < 1e-15 && (s.theta - s.t / 2.0).abs() < 1e-13);
        }
        let t = jacobi_conjugate_time(&p, &arc).unwrap();
        assert!((t - PI).abs() < 1e-9);
        let field = jacobi_field(&p, &arc).unwrap();
        for (t, u) in field {
            let exact = (2.0f64 / 2.0).sqrt() * ((2.0f64 * 1.0 / 2.0).sqrt() * t).sin();
            assert!((u - exact).abs() < 1e-8);
        }
    }

    #[test]
    fn conservation_along_arcs() {
        let p = ell();
        for eta in [0.05, 0.3, 1.0, -0.7] {
            let arc = integrate_geodesic(&p, eta, 8.0, &OdeOptions::default()).unwrap();
            assert!(arc.clairaut_residual(&p) < 1e-8);
            assert!(arc.speed_residual(&p) < 1e-8);
            let r_min = arc.samples.iter().map(|s| s.r).fold(f64::INFINITY, f64::min);
            if eta > 0.0 {
                assert!(r_min >= arc.turning_radius - 1e-9);
            }
        }
    }

    #[test]
    fn ode_and_quadrature_agree() {
        let p = ell();
        for eta in [0.05, 0.2, 0.3, 0.6, 1.0] {
            let arc = integrate_geodesic(&p, eta, 6.0, &OdeOptions::default()).unwrap();
            let (_, theta) = first_equator_crossing(&p, &arc).unwrap();
            let quad = phi_of_angle(&p, eta);
            assert!((theta - quad).abs() < 1e-6, "eta {eta}: {theta} vs {quad}");
        }
        let s = Profile::sphere(1.0).unwrap();
        let arc = integrate_geodesic(&s, 0.5, 4.0, &OdeOptions::default()).unwrap();
        let (t, theta) = first_equator_crossing(&s, &arc).unwrap();
        assert!((t - PI).abs() < 1e-9 && (theta - PI).abs() < 1e-9);
    }

    #[test]
    fn cut_structure() {
        let c = CutStructure::new(&ell()).unwrap();
        assert!((c.theta_cut - FRAC_PI_2).abs() < 1e-15);
        assert!((c.t_cut - PI).abs() < 1e-15);
        assert!((c.t_conj - c.t_cut).abs() < 1e-6);
    }

    #[test]
    fn expansion_constants() {
        let e = phi_expansion(&ell(), 1).unwrap();
        assert!((e.coeff(0) - FRAC_PI_2).abs() < 1e-14);
        assert!((e.coeff(1) - 3.0 * PI / 8.0).abs() < 1e-13);
    }

    #[test]
    fn distances_on_the_equator() {
        let p = ell();
        let x = Point::on_equator(&p, 0.0);
        assert_eq!(distance(&p, x, x).unwrap().length, 0.0);
        for theta in [0.3, 1.0, 1.5] {
            let d = distance(&p, x, Point::on_equator(&p, theta)).unwrap();
            assert!((d.length - 2.0 * theta).abs() < 1e-8, "{theta}: {d:?}");
        }
        let beyond = distance(&p, x, Point::on_equator(&p, FRAC_PI_2 + 0.1)).unwrap();
        assert!(beyond.length < 2.0 * (FRAC_PI_2 + 0.1) - 1e-6);
        assert!(beyond.multiplicity >= 2);
        let s = Profile::sphere(1.0).unwrap();
        let anti = distance(&s, Point::on_equator(&s, 0.0), Point::on_equator(&s, PI)).unwrap();
        assert!((anti.length - PI).abs() < 1e-8);
        assert!(anti.multiplicity > 2);
    }
}
