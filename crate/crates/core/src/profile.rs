//! Surfaces of revolution `dr² + m(r)² dθ²` on `r ∈ (0, 2a)`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::quad;
use crate::series::TruncSeries1;
use crate::special::ellint_e;

/// Default size of the ellipsoid arc-length table.
pub const DEFAULT_TABLE_RESOLUTION: usize = 512;

/// Relative threshold on `|6bβ − α²| / α²` below which a profile counts as singular.
pub const SINGULAR_TOLERANCE: f64 = 1e-8;

/// Profile function together with its first two derivatives in `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub m: f64,
    pub dm: f64,
    pub ddm: f64,
}

/// Serializable description of a built-in profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProfileSpec {
    Ellipsoid {
        b: f64,
        c: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        table_resolution: Option<usize>,
    },
    Sphere {
        #[serde(default = "unit")]
        radius: f64,
    },
}

fn unit() -> f64 {
    1.0
}

impl ProfileSpec {
    pub fn build(&self) -> Result<Profile> {
        match *self {
            ProfileSpec::Ellipsoid {
                b,
                c,
                table_resolution,
            } => Profile::ellipsoid_with_table(
                b,
                c,
                table_resolution.unwrap_or(DEFAULT_TABLE_RESOLUTION),
            ),
            ProfileSpec::Sphere { radius } => Profile::sphere(radius),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Serde(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("profile spec serializes")
    }
}

impl FromStr for ProfileSpec {
    type Err = Error;

    /// Accepts `ellipsoid:B,C`, `sphere` and `sphere:R`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (kind, args) = s.split_once(':').unwrap_or((s, ""));
        let nums = args
            .split(',')
            .filter(|t| !t.trim().is_empty())
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidProfile(format!("{t:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        match (kind.to_ascii_lowercase().as_str(), nums.as_slice()) {
            ("ellipsoid", [b, c]) => Ok(ProfileSpec::Ellipsoid {
                b: *b,
                c: *c,
                table_resolution: None,
            }),
            ("sphere", []) => Ok(ProfileSpec::Sphere { radius: 1.0 }),
            ("sphere", [r]) => Ok(ProfileSpec::Sphere { radius: *r }),
            _ => Err(Error::InvalidProfile(format!(
                "cannot parse {s:?}; expected ellipsoid:B,C or sphere[:R]"
            ))),
        }
    }
}

/// Meridian of the oblate ellipsoid with semi-axes `b, b, c`, parametrized by
/// `w ∈ [0, π/2]`, the complement of the parametric latitude angle: the
/// meridian point at offset `s = |r − a|` from the equator has
/// `m = b cos w` and `s = S(w) = ∫₀^w √(c² + (b² − c²) sin² v) dv`.
#[derive(Debug, Clone)]
struct EllipsoidChart {
    b: f64,
    c: f64,
    /// `S(w_k)` on the uniform grid `w_k = k·(π/2)/(n − 1)`.
    table: Vec<f64>,
}

impl EllipsoidChart {
    fn new(b: f64, c: f64, resolution: usize) -> Self {
        let mut chart = Self {
            b,
            c,
            table: Vec::new(),
        };
        let n = resolution.max(8);
        chart.table = (0..n)
            .map(|k| chart.arc(FRAC_PI_2 * k as f64 / (n - 1) as f64))
            .collect();
        chart
    }

    fn arc(&self, w: f64) -> f64 {
        let kappa = (self.b * self.b - self.c * self.c) / (self.c * self.c);
        self.c * ellint_e(w, -kappa)
    }

    fn speed(&self, w: f64) -> f64 {
        let s = w.sin();
        (self.c * self.c + (self.b * self.b - self.c * self.c) * s * s).sqrt()
    }

    /// Solves `S(w) = s` by table lookup followed by Newton iteration.
    fn angle(&self, s: f64) -> f64 {
        let n = self.table.len();
        let top = self.table[n - 1];
        if s >= top {
            return FRAC_PI_2;
        }
        let k = self.table.partition_point(|&v| v <= s).clamp(1, n - 1);
        let (s0, s1) = (self.table[k - 1], self.table[k]);
        let dw = FRAC_PI_2 / (n - 1) as f64;
        let mut w = dw * ((k - 1) as f64 + (s - s0) / (s1 - s0));
        for _ in 0..8 {
            let step = (self.arc(w) - s) / self.speed(w);
            w = (w - step).clamp(0.0, FRAC_PI_2);
            if step.abs() <= 1e-16 * (1.0 + w) {
                break;
            }
        }
        w
    }

    fn jet(&self, sigma: f64) -> Jet {
        let w = self.angle(sigma.abs());
        let (sw, cw) = w.sin_cos();
        let sp = self.speed(w);
        let m = self.b * cw;
        let curvature = self.c * self.c / sp.powi(4);
        Jet {
            m,
            dm: -sigma.signum() * self.b * sw / sp,
            ddm: -curvature * m,
        }
    }

    /// Taylor coefficients of `ψ` with `m = ψ(s²)`, to `ψ_order`.
    fn psi(&self, order: usize) -> Result<TruncSeries1> {
        let n = 2 * order + 1;
        let (b2, c2) = (self.b * self.b, self.c * self.c);
        let sin2 = TruncSeries1::sin(n).mul(&TruncSeries1::sin(n));
        let speed = TruncSeries1::constant(c2, n)
            .add(&sin2.scale(b2 - c2))
            .sqrt()?;
        let w_of_s = speed.integrate().revert()?;
        let m = TruncSeries1::cos(n).compose(&w_of_s)?.scale(self.b);
        Ok(m.even_part().with_order(order))
    }
}

type ProfileFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Shape {
    Ellipsoid(EllipsoidChart),
    Sphere { radius: f64 },
    Analytic { m: ProfileFn, psi: TruncSeries1 },
}

/// Which family a profile belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProfileKind {
    Ellipsoid { b: f64, c: f64 },
    Sphere { radius: f64 },
    Analytic,
}

/// A two-sphere of revolution with equator at `r = a`, where
/// `m(r) = b − α(a − r)² + β(a − r)⁴ + O((a − r)⁶)`.
#[derive(Clone)]
pub struct Profile {
    shape: Shape,
    a: f64,
    b: f64,
    alpha: f64,
    beta: f64,
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Profile")
            .field("kind", &self.kind())
            .field("a", &self.a)
            .field("b", &self.b)
            .field("alpha", &self.alpha)
            .field("beta", &self.beta)
            .finish()
    }
}

/// Quarter meridian length of the ellipsoid with semi-axes `b, b, c`, as the
/// integral `∫₀^b √((b² − c²)/b² + c²/(b² − t²)) dt` after `t = b − z²`.
pub fn ellipsoid_quarter_meridian(b: f64, c: f64) -> f64 {
    let e2 = (b * b - c * c) / (b * b);
    let integrand = |z: f64| {
        let z2 = z * z;
        2.0 * (z2 * e2 + c * c / (2.0 * b - z2)).sqrt()
    };
    quad::integrate(integrand, 0.0, b.sqrt(), 1e-14 * b).value
}

impl Profile {
    /// Oblate ellipsoid with equatorial semi-axis `b` and polar semi-axis `c ≤ b`.
    pub fn ellipsoid(b: f64, c: f64) -> Result<Self> {
        Self::ellipsoid_with_table(b, c, DEFAULT_TABLE_RESOLUTION)
    }

    pub fn ellipsoid_with_table(b: f64, c: f64, table_resolution: usize) -> Result<Self> {
        if !(b > 0.0 && c > 0.0) || !b.is_finite() || !c.is_finite() {
            return Err(Error::InvalidProfile(format!(
                "ellipsoid axes must be positive, got b = {b}, c = {c}"
            )));
        }
        if b < c {
            return Err(Error::InvalidProfile(format!(
                "prolate ellipsoid (b = {b} < c = {c}) is not supported"
            )));
        }
        let (b2, c2) = (b * b, c * c);
        Ok(Self {
            shape: Shape::Ellipsoid(EllipsoidChart::new(b, c, table_resolution)),
            a: ellipsoid_quarter_meridian(b, c),
            b,
            alpha: b / (2.0 * c2),
            beta: b * (4.0 * b2 - 3.0 * c2) / (24.0 * c2 * c2 * c2),
        })
    }

    /// Round sphere of the given radius.
    pub fn sphere(radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidProfile(format!(
                "sphere radius must be positive, got {radius}"
            )));
        }
        Ok(Self {
            shape: Shape::Sphere { radius },
            a: FRAC_PI_2 * radius,
            b: radius,
            alpha: 1.0 / (2.0 * radius),
            beta: 1.0 / (24.0 * radius.powi(3)),
        })
    }

    /// Profile given by an arbitrary smooth `m` on `(0, 2a)` with its equator at `a`.
    /// The equator data `α, β` are extracted numerically from samples of `m`.
    pub fn analytic<F>(a: f64, m: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::InvalidProfile(format!("half length a = {a}")));
        }
        let b = m(a);
        if !(b > 0.0) || !b.is_finite() {
            return Err(Error::InvalidProfile(format!("m(a) = {b} is not positive")));
        }
        let psi = fit_psi(&m, a, 8)?;
        let alpha = -psi.coeff(1);
        if !(alpha > 0.0) {
            return Err(Error::NonPositiveCurvature { alpha });
        }
        Ok(Self {
            a,
            b,
            alpha,
            beta: psi.coeff(2),
            shape: Shape::Analytic {
                m: Arc::new(m),
                psi,
            },
        })
    }

    pub fn from_spec(spec: &ProfileSpec) -> Result<Self> {
        spec.build()
    }

    /// The serializable description, if this is a built-in profile.
    pub fn spec(&self) -> Option<ProfileSpec> {
        match &self.shape {
            Shape::Ellipsoid(ch) => Some(ProfileSpec::Ellipsoid {
                b: ch.b,
                c: ch.c,
                table_resolution: Some(ch.table.len()),
            }),
            Shape::Sphere { radius } => Some(ProfileSpec::Sphere { radius: *radius }),
            Shape::Analytic { .. } => None,
        }
    }

    pub fn kind(&self) -> ProfileKind {
        match &self.shape {
            Shape::Ellipsoid(ch) => ProfileKind::Ellipsoid { b: ch.b, c: ch.c },
            Shape::Sphere { radius } => ProfileKind::Sphere { radius: *radius },
            Shape::Analytic { .. } => ProfileKind::Analytic,
        }
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `6bβ − α²`; zero exactly when `K''(a) = 0`.
    pub fn singularity_defect(&self) -> f64 {
        6.0 * self.b * self.beta - self.alpha * self.alpha
    }

    pub fn is_singular(&self) -> bool {
        self.singularity_defect().abs() <= SINGULAR_TOLERANCE * self.alpha * self.alpha
    }

    /// `θ_cut = π / √(2αb)`.
    pub fn theta_cut(&self) -> f64 {
        PI / (2.0 * self.alpha * self.b).sqrt()
    }

    /// `m` and its derivatives at offset `σ = r − a` from the equator; no range check.
    pub fn jet_at_offset(&self, sigma: f64) -> Jet {
        match &self.shape {
            Shape::Ellipsoid(ch) => ch.jet(sigma),
            Shape::Sphere { radius } => {
                let (s, c) = (sigma / radius).sin_cos();
                Jet {
                    m: radius * c,
                    dm: -s,
                    ddm: -c / radius,
                }
            }
            Shape::Analytic { m, .. } => {
                let r = self.a + sigma;
                let edge = r.min(2.0 * self.a - r);
                let h = (f64::EPSILON.powf(0.2) * self.a).min(0.4 * edge.max(0.0));
                let f = |x: f64| m(x);
                let (fm2, fm1, f0, fp1, fp2) =
                    (f(r - 2.0 * h), f(r - h), f(r), f(r + h), f(r + 2.0 * h));
                Jet {
                    m: f0,
                    dm: (fm2 - 8.0 * fm1 + 8.0 * fp1 - fp2) / (12.0 * h),
                    ddm: (-fm2 + 16.0 * fm1 - 30.0 * f0 + 16.0 * fp1 - fp2) / (12.0 * h * h),
                }
            }
        }
    }

    fn check_r(&self, r: f64) -> Result<()> {
        check_range("r", r, 0.0, 2.0 * self.a)
    }

    pub fn jet(&self, r: f64) -> Result<Jet> {
        self.check_r(r)?;
        Ok(self.jet_at_offset(r - self.a))
    }

    /// `m(r)` for `0 < r < 2a`.
    pub fn m(&self, r: f64) -> Result<f64> {
        self.check_r(r)?;
        Ok(self.m_at_offset(r - self.a))
    }

    /// `m(a + σ)` without range check.
    pub fn m_at_offset(&self, sigma: f64) -> f64 {
        match &self.shape {
            Shape::Ellipsoid(ch) => ch.b * ch.angle(sigma.abs()).cos(),
            Shape::Sphere { radius } => radius * (sigma / radius).cos(),
            Shape::Analytic { m, .. } => m(self.a + sigma),
        }
    }

    pub fn dm(&self, r: f64) -> Result<f64> {
        Ok(self.jet(r)?.dm)
    }

    /// Gaussian curvature `K(r) = −m''(r)/m(r)`.
    pub fn curvature(&self, r: f64) -> Result<f64> {
        self.check_r(r)?;
        Ok(self.curvature_at_offset(r - self.a))
    }

    pub fn curvature_at_offset(&self, sigma: f64) -> f64 {
        match &self.shape {
            Shape::Ellipsoid(ch) => {
                let sp = ch.speed(ch.angle(sigma.abs()));
                ch.c * ch.c / sp.powi(4)
            }
            Shape::Sphere { radius } => 1.0 / (radius * radius),
            Shape::Analytic { .. } => {
                let j = self.jet_at_offset(sigma);
                -j.ddm / j.m
            }
        }
    }

    /// Total area `2π ∫₀^{2a} m dr`.
    pub fn area(&self) -> f64 {
        let half = match &self.shape {
            // r ↦ w is singular at the pole, so integrate in w instead.
            Shape::Ellipsoid(ch) => {
                quad::integrate(|w| ch.b * w.cos() * ch.speed(w), 0.0, FRAC_PI_2, 1e-14).value
            }
            _ => quad::integrate(|s| self.m_at_offset(-s), 0.0, self.a, 1e-14).value,
        };
        4.0 * PI * half
    }

    /// Taylor coefficients `ψ₀ = b, ψ₁ = −α, ψ₂ = β, …` with `m(a ± s) = ψ(s²)`.
    /// Analytic profiles only carry a numerically fitted jet up to order 8.
    pub fn psi_coefficients(&self, order: usize) -> Result<TruncSeries1> {
        match &self.shape {
            Shape::Ellipsoid(ch) => ch.psi(order),
            Shape::Sphere { radius } => {
                let mut c = Vec::with_capacity(order + 1);
                let mut term = *radius;
                for k in 0..=order {
                    c.push(term);
                    term *= -1.0 / (((2 * k + 1) * (2 * k + 2)) as f64 * radius * radius);
                }
                Ok(TruncSeries1::new(c, order))
            }
            Shape::Analytic { psi, .. } => {
                if order > psi.order() {
                    Err(Error::Series(format!(
                        "analytic profile carries ψ only to order {}",
                        psi.order()
                    )))
                } else {
                    Ok(psi.with_order(order))
                }
            }
        }
    }

    /// Checks reflection symmetry near the equator, monotone curvature on
    /// `(0, a]` and nonsingularity at the equator.
    pub fn check_assumptions(&self, grid_size: usize) -> Result<AssumptionReport> {
        if grid_size < 16 {
            return Err(Error::Precondition(format!(
                "grid_size = {grid_size} must be at least 16"
            )));
        }
        let window = 0.25 * self.a;
        let symmetry_residual = (1..=grid_size)
            .map(|k| {
                let s = window * k as f64 / grid_size as f64;
                (self.m_at_offset(s) - self.m_at_offset(-s)).abs()
            })
            .fold(0.0, f64::max);
        let ks: Vec<f64> = (1..=grid_size)
            .map(|k| self.curvature_at_offset(self.a * (k as f64 / grid_size as f64 - 1.0)))
            .collect();
        let k_scale = ks.iter().fold(0.0f64, |acc, k| acc.max(k.abs()));
        let curvature_decrease = ks
            .windows(2)
            .map(|p| (p[0] - p[1]).max(0.0))
            .fold(0.0, f64::max);
        let defect = self.singularity_defect();
        Ok(AssumptionReport {
            symmetry_ok: symmetry_residual <= 1e-10 * self.b,
            symmetry_residual,
            curvature_monotone: curvature_decrease <= 1e-6 * k_scale,
            curvature_max_decrease: curvature_decrease,
            nonsingular: !self.is_singular(),
            six_b_beta_minus_alpha_sq: defect,
            k_at_equator: 2.0 * self.alpha / self.b,
        })
    }
}

/// Outcome of [`Profile::check_assumptions`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub symmetry_ok: bool,
    /// `max |m(a + s) − m(a − s)|` over `0 < s ≤ a/4`.
    pub symmetry_residual: f64,
    pub curvature_monotone: bool,
    /// Largest sampled decrease of `K` along `(0, a]`.
    pub curvature_max_decrease: f64,
    pub nonsingular: bool,
    pub six_b_beta_minus_alpha_sq: f64,
    pub k_at_equator: f64,
}

/// Least-squares fit of the symmetric part `(m(a + s) + m(a − s))/2 = ψ(s²)`
/// by a polynomial of the given degree in `s²` on Chebyshev nodes.
fn fit_psi<F: Fn(f64) -> f64>(m: &F, a: f64, degree: usize) -> Result<TruncSeries1> {
    let u_max = (a / 16.0).powi(2);
    let n = 4 * (degree + 1);
    let mut design = DMatrix::zeros(n, degree + 1);
    let mut rhs = DVector::zeros(n);
    for k in 0..n {
        let x = 0.5 * (1.0 - (PI * (k as f64 + 0.5) / n as f64).cos());
        let s = (x * u_max).sqrt();
        rhs[k] = 0.5 * (m(a + s) + m(a - s));
        let mut p = 1.0;
        for j in 0..=degree {
            design[(k, j)] = p;
            p *= x;
        }
    }
    let coeffs = design
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::Fit(e.to_string()))?;
    Ok(TruncSeries1::new(
        (0..=degree)
            .map(|j| coeffs[j] / u_max.powi(j as i32))
            .collect(),
        degree,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::ellint_e_complete;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn ellipsoid_closed_forms() {
        let p = Profile::ellipsoid(2.0, 1.0).unwrap();
        assert_eq!(p.alpha(), 1.0);
        assert!(rel(p.beta(), 13.0 / 12.0) < 1e-15);
        assert!((p.a() - 2.422_112_055_136_919).abs() < 1e-13);
        assert!((p.singularity_defect() - 12.0).abs() < 1e-13);
        let s = Profile::ellipsoid(1.0, 1.0).unwrap();
        assert!((s.a() - FRAC_PI_2).abs() < 1e-14);
        assert_eq!((s.alpha(), s.beta()), (0.5, 1.0 / 24.0));
    }

    #[test]
    fn quarter_meridian_matches_elliptic_integral() {
        for &(b, c) in &[(2.0, 1.0), (1.5, 1.0), (1.2, 1.0), (3.0, 0.5)] {
            let via_e = c * ellint_e_complete(-(b * b - c * c) / (c * c));
            assert!(rel(ellipsoid_quarter_meridian(b, c), via_e) < 1e-13);
        }
    }

    #[test]
    fn rejects_prolate_and_degenerate_axes() {
        assert!(Profile::ellipsoid(1.0, 2.0).is_err());
        assert!(Profile::ellipsoid(0.0, 1.0).is_err());
        assert!(Profile::ellipsoid(-2.0, 1.0).is_err());
        assert!(Profile::sphere(0.0).is_err());
    }

    #[test]
    fn m_values() {
        let s = Profile::sphere(1.0).unwrap();
        assert!((s.m(PI / 4.0).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        let p = Profile::ellipsoid(2.0, 1.0).unwrap();
        assert!((p.m(p.a()).unwrap() - 2.0).abs() < 1e-15);
        let m = p.m(p.a() - 0.1).unwrap();
        assert!((m - (2.0 - 0.01 + 13.0 / 12.0 * 1e-4)).abs() < 1e-5);
        assert!((m - 1.99011).abs() < 1e-5);
        assert!(p.m(0.0).is_err() && p.m(2.0 * p.a()).is_err());
    }

    #[test]
    fn inversion_is_accurate() {
        let p = Profile::ellipsoid(2.0, 1.0).unwrap();
        let Shape::Ellipsoid(ch) = &p.shape else {
            unreachable!()
        };
        for k in 1..200 {
            let w = FRAC_PI_2 * k as f64 / 200.0;
            let s = ch.arc(w);
            assert!((ch.angle(s) - w).abs() < 1e-13, "w = {w}");
        }
        // pole closure
        assert!(p.m_at_offset(-p.a()).abs() < 1e-7);
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        let p = Profile::ellipsoid(2.0, 1.0).unwrap();
        let h = 1e-4;
        for &r in &[0.3, 1.0, 2.0, p.a(), 2.9, 4.5] {
            let j = p.jet(r).unwrap();
            let fd = (p.m(r + h).unwrap() - p.m(r - h).unwrap()) / (2.0 * h);
            let fd2 = (p.m(r + h).unwrap() - 2.0 * j.m + p.m(r - h).unwrap()) / (h * h);
            assert!((j.dm - fd).abs() < 1e-7, "r = {r}");
            assert!((j.ddm - fd2).abs() < 1e-5, "r = {r}");
        }
    }

    #[test]
    fn curvature_values() {
        let s = Profile::sphere(1.0).unwrap();
        assert!((s.curvature(0.7).unwrap() - 1.0).abs() < 1e-12);
        let p = Profile::ellipsoid(2.0, 1.0).unwrap();
        let ka = p.curvature(p.a()).unwrap();
        assert!((ka - 1.0).abs() < 1e-12);
        assert!(rel(ka, 2.0 * p.alpha() / p.b()) < 1e-12);
        // at the poles K = c²/b⁴
        assert!(rel(p.curvature_at_offset(-p.a()), 1.0 / 16.0) < 1e-9);
    }

    #[test]
    fn psi_series() {
        let p = Profile::ellipsoid(2.0, 1.0).unwrap();
        let psi = p.psi_coefficients(8).unwrap();
        assert!(rel(psi.coeff(0), 2.0) < 1e-15);
        assert!(rel(-psi.coeff(1), 1.0) < 1e-14);
        assert!(rel(psi.coeff(2), 13.0 / 12.0) < 1e-13);
        let s = 0.05;
        assert!((psi.eval(s * s) - p.m_at_offset(s)).abs() < 1e-14);
        let sph = Profile::sphere(1.0).unwrap().psi_coefficients(3).unwrap();
        assert!((sph.coeff(3) + 1.0 / 720.0).abs() < 1e-18);
    }

    #[test]
    fn fitted_equator_data_match_closed_forms() {
        for &(b, c) in &[(2.0, 1.0), (1.5, 1.0), (1.2, 1.0)] {
            let ell = Profile::ellipsoid(b, c).unwrap();
            let inner = ell.clone();
            let an = Profile::analytic(ell.a(), move |r| inner.m(r).unwrap_or(0.0)).unwrap();
            assert!(rel(an.alpha(), ell.alpha()) < 1e-5, "{b},{c}");
            assert!(rel(an.beta(), ell.beta()) < 1e-5, "{b},{c}: {} vs {}", an.beta(), ell.beta());
            assert!(rel(an.curvature(ell.a()).unwrap(), 2.0 * ell.alpha() / b) < 1e-5);
        }
    }

    #[test]
    fn assumptions() {
        let r = Profile::ellipsoid(2.0, 1.0).unwrap().check_assumptions(64).unwrap();
        assert!(r.symmetry_ok && r.curvature_monotone && r.nonsingular, "{r:?}");
        assert!((r.six_b_beta_minus_alpha_sq - 12.0).abs() < 1e-12);
        assert!((r.k_at_equator - 1.0).abs() < 1e-15);
        let s = Profile::sphere(1.0).unwrap().check_assumptions(64).unwrap();
        assert!(!s.nonsingular && s.six_b_beta_minus_alpha_sq.abs() < 1e-15);
        assert!(Profile::sphere(1.0).unwrap().check_assumptions(8).is_err());
    }

    #[test]
    fn monotone_on_southern_half() {
        let p = Profile::ellipsoid(2.0, 1.0).unwrap();
        let mut prev = 0.0;
        for k in 1..=400 {
            let m = p.m(p.a() * k as f64 / 400.0).unwrap();
            assert!(m > prev);
            prev = m;
        }
    }

    #[test]
    fn area_matches_spheroid_formula() {
        let (b, c) = (2.0f64, 1.0f64);
        let e = (1.0 - c * c / (b * b)).sqrt();
        let exact = 2.0 * PI * b * b * (1.0 + (1.0 - e * e) / e * e.atanh());
        assert!(rel(Profile::ellipsoid(b, c).unwrap().area(), exact) < 1e-12);
        assert!(rel(Profile::sphere(1.0).unwrap().area(), 4.0 * PI) < 1e-13);
    }

    #[test]
    fn spec_round_trip() {
        let spec: ProfileSpec = "ellipsoid:2,1".parse().unwrap();
        let json = spec.to_json();
        assert_eq!(ProfileSpec::from_json(&json).unwrap(), spec);
        let parsed = ProfileSpec::from_json(r#"{"kind":"sphere"}"#).unwrap();
        assert_eq!(parsed, ProfileSpec::Sphere { radius: 1.0 });
        assert!("torus:1".parse::<ProfileSpec>().is_err());
        assert!(ProfileSpec::from_json(r#"{"kind":"ellipsoid","b":1,"c":2}"#)
            .unwrap()
            .build()
            .is_err());
    }
}
