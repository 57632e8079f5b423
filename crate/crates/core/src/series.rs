//! Truncated power series in one and two variables, and the expansion of the
//! cut-locus angle `φ(ν)` in powers of `b − ν` built from the equator Taylor
//! data `ψ` of a profile (`m(r) = ψ((a − r)²)`).

use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

/// `c₀ + c₁x + … + c_N x^N`, with everything above order `N` discarded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncSeries1 {
    coeffs: Vec<f64>,
}

impl TruncSeries1 {
    /// Series of order `order`; `coeffs` is padded with zeros or truncated.
    pub fn new(mut coeffs: Vec<f64>, order: usize) -> Self {
        coeffs.resize(order + 1, 0.0);
        Self { coeffs }
    }

    pub fn zero(order: usize) -> Self {
        Self::new(Vec::new(), order)
    }

    pub fn constant(c: f64, order: usize) -> Self {
        Self::new(vec![c], order)
    }

    /// The identity series `x`.
    pub fn variable(order: usize) -> Self {
        Self::new(vec![0.0, 1.0], order)
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient of `x^k`, zero beyond the order.
    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    pub fn with_order(&self, order: usize) -> Self {
        Self::new(self.coeffs.clone(), order)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    fn common_order(&self, other: &Self) -> usize {
        self.order().min(other.order())
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.common_order(other);
        Self::new((0..=n).map(|k| self.coeffs[k] + other.coeffs[k]).collect(), n)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.common_order(other);
        let mut out = vec![0.0; n + 1];
        for (i, &a) in self.coeffs.iter().enumerate().take(n + 1) {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate().take(n + 1 - i) {
                out[i + j] += a * b;
            }
        }
        Self { coeffs: out }
    }

    /// `self(inner(x))`; `inner` must vanish at the origin.
    pub fn compose(&self, inner: &Self) -> Result<Self> {
        if inner.coeffs[0] != 0.0 {
            return Err(Error::Series(
                "inner series of a composition must vanish at 0".into(),
            ));
        }
        let n = self.common_order(inner);
        let inner = inner.with_order(n);
        let mut acc = Self::constant(self.coeff(n), n);
        for k in (0..n).rev() {
            acc = acc.mul(&inner);
            acc.coeffs[0] += self.coeffs[k];
        }
        Ok(acc)
    }

    /// `self^p` for real `p`; requires a positive constant term.
    pub fn powf(&self, p: f64) -> Result<Self> {
        let c0 = self.coeffs[0];
        if c0 <= 0.0 {
            return Err(Error::Series(format!(
                "real power of a series needs a positive constant term, got {c0}"
            )));
        }
        let n = self.order();
        let mut w = vec![0.0; n + 1];
        w[0] = c0.powf(p);
        for k in 1..=n {
            let kf = k as f64;
            let s: f64 = (1..=k)
                .map(|j| ((p + 1.0) * j as f64 - kf) * self.coeffs[j] * w[k - j])
                .sum();
            w[k] = s / (kf * c0);
        }
        Ok(Self { coeffs: w })
    }

    pub fn reciprocal(&self) -> Result<Self> {
        let c0 = self.coeffs[0];
        if c0 == 0.0 {
            return Err(Error::Series("reciprocal of a series vanishing at 0".into()));
        }
        let n = self.order();
        let mut r = vec![0.0; n + 1];
        r[0] = 1.0 / c0;
        for k in 1..=n {
            let s: f64 = (1..=k).map(|j| self.coeffs[j] * r[k - j]).sum();
            r[k] = -s / c0;
        }
        Ok(Self { coeffs: r })
    }

    pub fn sqrt(&self) -> Result<Self> {
        let c0 = self.coeffs[0];
        if c0 <= 0.0 {
            return Err(Error::Series(format!(
                "square root needs a positive constant term, got {c0}"
            )));
        }
        let n = self.order();
        let mut s = vec![0.0; n + 1];
        s[0] = c0.sqrt();
        for k in 1..=n {
            let cross: f64 = (1..k).map(|j| s[j] * s[k - j]).sum();
            s[k] = (self.coeffs[k] - cross) / (2.0 * s[0]);
        }
        Ok(Self { coeffs: s })
    }

    /// Compositional inverse: `g` with `self(g(x)) = x`. Needs `c₀ = 0`, `c₁ ≠ 0`.
    pub fn revert(&self) -> Result<Self> {
        if self.coeffs[0] != 0.0 || self.coeff(1) == 0.0 {
            return Err(Error::Series(
                "reversion needs c0 = 0 and a nonzero linear coefficient".into(),
            ));
        }
        let n = self.order();
        let c1 = self.coeffs[1];
        let mut g = Self::new(vec![0.0, 1.0 / c1], n);
        for k in 2..=n {
            let fg = self.compose(&g)?;
            g.coeffs[k] -= fg.coeffs[k] / c1;
        }
        Ok(g)
    }

    /// Antiderivative vanishing at 0, keeping the same order.
    pub fn integrate(&self) -> Self {
        let n = self.order();
        let mut out = vec![0.0; n + 1];
        for (k, slot) in out.iter_mut().enumerate().skip(1) {
            *slot = self.coeffs[k - 1] / k as f64;
        }
        Self { coeffs: out }
    }

    pub fn derivative(&self) -> Self {
        let n = self.order();
        let coeffs = (1..=n).map(|k| k as f64 * self.coeffs[k]).collect();
        Self::new(coeffs, n.saturating_sub(1))
    }

    /// Coefficients of the even part, as a series in `x²`.
    pub fn even_part(&self) -> Self {
        let coeffs = self.coeffs.iter().step_by(2).copied().collect::<Vec<_>>();
        let n = coeffs.len() - 1;
        Self::new(coeffs, n)
    }

    /// `self(x²)` as a series in `x`, of order `2N + 1` (odd terms vanish exactly).
    pub fn substitute_square(&self) -> Self {
        let n = self.order();
        let mut out = vec![0.0; 2 * n + 2];
        for (k, &c) in self.coeffs.iter().enumerate() {
            out[2 * k] = c;
        }
        Self { coeffs: out }
    }

    /// Taylor series of `cos x` at 0.
    pub fn cos(order: usize) -> Self {
        let mut c = vec![0.0; order + 1];
        let mut term = 1.0;
        for k in (0..=order).step_by(2) {
            c[k] = term;
            term *= -1.0 / (((k + 1) * (k + 2)) as f64);
        }
        Self { coeffs: c }
    }

    /// Taylor series of `sin x` at 0.
    pub fn sin(order: usize) -> Self {
        let mut c = vec![0.0; order + 1];
        let mut term = 1.0;
        for k in (1..=order).step_by(2) {
            c[k] = term;
            term *= -1.0 / (((k + 1) * (k + 2)) as f64);
        }
        Self { coeffs: c }
    }
}

/// Bivariate series `Σ_{i+j≤N} a_{ij} x^i y^j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncSeries2 {
    order: usize,
    /// Square `(N+1)×(N+1)` row-major table; entries with `i + j > N` stay zero.
    coeffs: Vec<f64>,
}

impl TruncSeries2 {
    pub fn zero(order: usize) -> Self {
        Self {
            order,
            coeffs: vec![0.0; (order + 1) * (order + 1)],
        }
    }

    pub fn constant(c: f64, order: usize) -> Self {
        let mut s = Self::zero(order);
        s.set(0, 0, c);
        s
    }

    /// Builds a series from `(i, j, a_ij)` triples; terms above `order` are dropped.
    pub fn from_terms(order: usize, terms: &[(usize, usize, f64)]) -> Self {
        let mut s = Self::zero(order);
        for &(i, j, a) in terms {
            if i + j <= order {
                s.set(i, j, s.get(i, j) + a);
            }
        }
        s
    }

    /// `g(x)` viewed as a bivariate series in `(x, y)`.
    pub fn from_x(g: &TruncSeries1) -> Self {
        let n = g.order();
        let mut s = Self::zero(n);
        for k in 0..=n {
            s.set(k, 0, g.coeff(k));
        }
        s
    }

    /// `g(y)` viewed as a bivariate series in `(x, y)`.
    pub fn from_y(g: &TruncSeries1) -> Self {
        let n = g.order();
        let mut s = Self::zero(n);
        for k in 0..=n {
            s.set(0, k, g.coeff(k));
        }
        s
    }

    pub fn order(&self) -> usize {
        self.order
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.order + 1) + j
    }

    /// Coefficient `a_{ij}`, zero above the order.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i + j > self.order {
            0.0
        } else {
            self.coeffs[self.idx(i, j)]
        }
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        assert!(i + j <= self.order, "term ({i},{j}) above order {}", self.order);
        let k = self.idx(i, j);
        self.coeffs[k] = value;
    }

    pub fn with_order(&self, order: usize) -> Self {
        let mut s = Self::zero(order);
        for i in 0..=order {
            for j in 0..=(order - i) {
                s.set(i, j, self.get(i, j));
            }
        }
        s
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let mut total = 0.0;
        for i in (0..=self.order).rev() {
            let mut row = 0.0;
            for j in (0..=(self.order - i)).rev() {
                row = row * y + self.get(i, j);
            }
            total = total * x + row;
        }
        total
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.order.min(other.order);
        let mut s = Self::zero(n);
        for i in 0..=n {
            for j in 0..=(n - i) {
                s.set(i, j, self.get(i, j) + other.get(i, j));
            }
        }
        s
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, k: f64) -> Self {
        Self {
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| c * k).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.order.min(other.order);
        let mut s = Self::zero(n);
        for i1 in 0..=n {
            for j1 in 0..=(n - i1) {
                let a = self.get(i1, j1);
                if a == 0.0 {
                    continue;
                }
                for i2 in 0..=(n - i1 - j1) {
                    for j2 in 0..=(n - i1 - j1 - i2) {
                        let b = other.get(i2, j2);
                        if b != 0.0 {
                            let k = s.idx(i1 + i2, j1 + j2);
                            s.coeffs[k] += a * b;
                        }
                    }
                }
            }
        }
        s
    }

    /// `self^p` through the binomial series about the constant term, which must be positive.
    pub fn powf(&self, p: f64) -> Result<Self> {
        let c0 = self.get(0, 0);
        if c0 <= 0.0 {
            return Err(Error::Series(format!(
                "real power of a series needs a positive constant term, got {c0}"
            )));
        }
        let n = self.order;
        let mut delta = self.scale(1.0 / c0);
        delta.set(0, 0, 0.0);
        let mut out = Self::constant(1.0, n);
        let mut power = Self::constant(1.0, n);
        let mut binom = 1.0;
        for k in 1..=n {
            power = power.mul(&delta);
            binom *= (p - (k - 1) as f64) / k as f64;
            out = out.add(&power.scale(binom));
        }
        Ok(out.scale(c0.powf(p)))
    }

    pub fn reciprocal(&self) -> Result<Self> {
        if self.get(0, 0) == 0.0 {
            return Err(Error::Series("reciprocal of a series vanishing at 0".into()));
        }
        let c0 = self.get(0, 0);
        if c0 > 0.0 {
            self.powf(-1.0)
        } else {
            Ok(self.scale(-1.0).powf(-1.0)?.scale(-1.0))
        }
    }

    /// `self(x², y²)`, of order `2N + 1` (odd total degrees vanish exactly).
    pub fn substitute_squares(&self) -> Self {
        let mut s = Self::zero(2 * self.order + 1);
        for i in 0..=self.order {
            for j in 0..=(self.order - i) {
                s.set(2 * i, 2 * j, self.get(i, j));
            }
        }
        s
    }
}

/// `I_j = ∫₀¹ u^j / √(1 − u²) du`.
pub fn singular_moments(n: usize) -> Vec<f64> {
    let mut moments = Vec::with_capacity(n + 1);
    for j in 0..=n {
        let v = match j {
            0 => FRAC_PI_2,
            1 => 1.0,
            _ => (j as f64 - 1.0) / j as f64 * moments[j - 2],
        };
        moments.push(v);
    }
    moments
}

/// Coefficients `b_k` of `F(y) = ∫₀^y f(x, y) / √(y² − x²) dx = Σ b_k y^k`,
/// where `b_k = Σ_j a_{j,k−j} I_j`.
pub fn singular_integral_expansion(f: &TruncSeries2) -> TruncSeries1 {
    let n = f.order();
    let moments = singular_moments(n);
    let coeffs = (0..=n)
        .map(|k| (0..=k).map(|j| f.get(j, k - j) * moments[j]).sum())
        .collect();
    TruncSeries1::new(coeffs, n)
}

/// `(g(x) − g(y)) / (x − y)` as a bivariate series: the coefficient of
/// `x^i y^j` is `g_{i+j+1}`.
pub fn divided_difference_series(g: &TruncSeries1) -> TruncSeries2 {
    let n = g.order().saturating_sub(1);
    let mut f = TruncSeries2::zero(n);
    for k in 1..=g.order() {
        for i in 0..k {
            f.set(i, k - 1 - i, g.coeff(k));
        }
    }
    f
}

/// Taylor data of `ψ` with `m(r) = ψ((a − r)²)`: `ψ₀ = b`, `ψ₁ = −α`, `ψ₂ = β`, …
fn check_psi(psi: &TruncSeries1) -> Result<(f64, f64)> {
    if psi.order() < 1 {
        return Err(Error::Series("ψ needs at least a linear coefficient".into()));
    }
    let b = psi.coeff(0);
    let alpha = -psi.coeff(1);
    if !(b > 0.0) {
        return Err(Error::InvalidProfile(format!("equator radius b = {b}")));
    }
    if !(alpha > 0.0) {
        return Err(Error::NonPositiveCurvature { alpha });
    }
    Ok((b, alpha))
}

/// Integrand `f(x, y)` of `φ = ∫₀^y f(x, y)/√(y² − x²) dx`, where `x = a − r`
/// and `y = a − R`. Of order `2N − 1` when `ψ` has order `N`.
pub fn phi_integrand_series(psi: &TruncSeries1) -> Result<TruncSeries2> {
    let (_, _) = check_psi(psi)?;
    let n = psi.order() - 1;
    // In (u, v) = (x², y²): m = ψ(u), ν = ψ(v), m − ν = (u − v)·D(u, v).
    let m = TruncSeries2::from_x(psi).with_order(n);
    let nu = TruncSeries2::from_y(psi).with_order(n);
    let minus_d = divided_difference_series(psi).scale(-1.0);
    let f = nu
        .scale(2.0)
        .mul(&m.reciprocal()?)
        .mul(&minus_d.powf(-0.5)?)
        .mul(&m.add(&nu).powf(-0.5)?);
    Ok(f.substitute_squares())
}

/// `(a − R)²` as a series in `ε = b − ν`, by reverting `b − ψ(w)`.
pub fn turning_offset_series(psi: &TruncSeries1) -> Result<TruncSeries1> {
    check_psi(psi)?;
    let mut g = psi.scale(-1.0);
    g = TruncSeries1::new(
        std::iter::once(0.0).chain(g.coeffs()[1..].iter().copied()).collect(),
        psi.order(),
    );
    g.revert()
}

/// `φ(ν)` as a series in `ε = b − ν` up to `ε^order`. Needs `ψ` to order `order + 1`.
pub fn phi_expansion_from_psi(psi: &TruncSeries1, order: usize) -> Result<TruncSeries1> {
    if psi.order() < order + 1 {
        return Err(Error::Series(format!(
            "expansion to order {order} needs ψ to order {}, have {}",
            order + 1,
            psi.order()
        )));
    }
    let psi = psi.with_order(order + 1);
    let f = phi_integrand_series(&psi)?;
    // Only even powers of y = a − R survive.
    let in_y = singular_integral_expansion(&f);
    let in_w = in_y.even_part().with_order(order);
    let w_of_eps = turning_offset_series(&psi)?.with_order(order);
    in_w.compose(&w_of_eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn singular_integral_examples() {
        let one = TruncSeries2::constant(1.0, 3);
        assert!(close(singular_integral_expansion(&one).coeff(0), PI / 2.0, 1e-15));
        let x2 = TruncSeries2::from_terms(3, &[(2, 0, 1.0)]);
        assert!(close(singular_integral_expansion(&x2).coeff(2), PI / 4.0, 1e-15));
        let (a00, a20, a02) = (0.7, -1.3, 2.1);
        let f = TruncSeries2::from_terms(2, &[(0, 0, a00), (2, 0, a20), (0, 2, a02)]);
        let b = singular_integral_expansion(&f);
        assert!(close(b.coeff(0), PI / 2.0 * a00, 1e-15));
        assert!(close(b.coeff(2), PI / 2.0 * a02 + PI / 4.0 * a20, 1e-15));
    }

    #[test]
    fn divided_difference_examples() {
        let sq = TruncSeries1::new(vec![0.0, 0.0, 1.0], 2);
        let f = divided_difference_series(&sq);
        assert_eq!((f.get(1, 0), f.get(0, 1), f.get(0, 0)), (1.0, 1.0, 0.0));
        let c = divided_difference_series(&TruncSeries1::constant(3.0, 4));
        assert!((0..=3).all(|i| (0..=3 - i).all(|j| c.get(i, j) == 0.0)));
        let (b, alpha, beta) = (2.0, 1.0, 13.0 / 12.0);
        let psi = TruncSeries1::new(vec![b, -alpha, beta], 2);
        let d = divided_difference_series(&psi);
        assert_eq!(d.get(0, 0), -alpha);
        assert_eq!((d.get(1, 0), d.get(0, 1)), (beta, beta));
    }

    #[test]
    fn integrand_matches_closed_coefficients() {
        let (b, alpha, beta) = (2.0, 1.0, 13.0 / 12.0);
        let psi = TruncSeries1::new(vec![b, -alpha, beta], 2);
        let f = phi_integrand_series(&psi).unwrap();
        let ba = b * alpha;
        let a00 = 2f64.sqrt() / ba.sqrt();
        let a20 = (5.0 * alpha * alpha + 2.0 * b * beta) / (2.0 * 2f64.sqrt() * ba.powf(1.5));
        let a02 = (-3.0 * alpha * alpha + 2.0 * b * beta) / (2.0 * 2f64.sqrt() * ba.powf(1.5));
        assert!(close(f.get(0, 0), a00, 1e-14));
        assert!(close(f.get(2, 0), a20, 1e-14));
        assert!(close(f.get(0, 2), a02, 1e-14));
        assert_eq!(f.get(1, 1), 0.0);
    }

    #[test]
    fn expansion_of_flagship_ellipsoid() {
        let psi = TruncSeries1::new(vec![2.0, -1.0, 13.0 / 12.0], 2);
        let phi = phi_expansion_from_psi(&psi, 1).unwrap();
        assert!(close(phi.coeff(0), PI / 2.0, 1e-14));
        assert!(close(phi.coeff(1), 3.0 * PI / 8.0, 1e-14));
    }

    #[test]
    fn expansion_of_unit_sphere_is_flat() {
        // cos √u
        let psi = TruncSeries1::new(vec![1.0, -0.5, 1.0 / 24.0, -1.0 / 720.0, 1.0 / 40320.0], 4);
        let phi = phi_expansion_from_psi(&psi, 3).unwrap();
        assert!(close(phi.coeff(0), PI, 1e-14));
        for k in 1..=3 {
            assert!(phi.coeff(k).abs() < 1e-12, "k={k}: {}", phi.coeff(k));
        }
    }

    #[test]
    fn offset_series_reverts_psi() {
        let (b, alpha, beta) = (2.0, 1.0, 13.0 / 12.0);
        let psi = TruncSeries1::new(vec![b, -alpha, beta], 2);
        let w = turning_offset_series(&psi).unwrap();
        assert!(close(w.coeff(1), 1.0 / alpha, 1e-15));
        assert!(close(w.coeff(2), beta / alpha.powi(3), 1e-15));
    }

    #[test]
    fn elementary_series() {
        let x = 0.3;
        let s = TruncSeries1::sin(15);
        let c = TruncSeries1::cos(15);
        assert!((s.eval(x) - x.sin()).abs() < 1e-15);
        assert!((c.eval(x) - x.cos()).abs() < 1e-15);
        let g = TruncSeries1::new(vec![0.0, 2.0, 0.5, -0.25], 12);
        let inv = g.revert().unwrap();
        let id = g.compose(&inv).unwrap();
        assert!((id.coeff(1) - 1.0).abs() < 1e-14);
        assert!((2..=12).all(|k| id.coeff(k).abs() < 1e-12));
        let f = TruncSeries1::new(vec![4.0, 1.0, -2.0], 8);
        let p = f.powf(1.5).unwrap();
        let q = f.sqrt().unwrap().mul(&f);
        assert!((0..=8).all(|k| (p.coeff(k) - q.coeff(k)).abs() < 1e-12));
        let r = f.reciprocal().unwrap().mul(&f);
        assert!((r.coeff(0) - 1.0).abs() < 1e-15 && (1..=8).all(|k| r.coeff(k).abs() < 1e-13));
    }

    #[test]
    fn bivariate_power_matches_product() {
        let f = TruncSeries2::from_terms(5, &[(0, 0, 2.0), (1, 0, 0.3), (0, 1, -0.7), (1, 1, 0.2)]);
        let inv = f.reciprocal().unwrap().mul(&f);
        for i in 0..=5 {
            for j in 0..=(5 - i) {
                let want = if i + j == 0 { 1.0 } else { 0.0 };
                assert!((inv.get(i, j) - want).abs() < 1e-13);
            }
        }
        let h = f.powf(0.5).unwrap();
        let sq = h.mul(&h);
        assert!((sq.eval(0.1, 0.2) - f.eval(0.1, 0.2)).abs() < 1e-5);
    }
}
