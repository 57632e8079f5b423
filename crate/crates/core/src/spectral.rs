//! Heat kernels: exact series on the round sphere and spectral sums on
//! general profiles built from per-Fourier-mode Sturm–Liouville problems.

use std::f64::consts::PI;

use astro_float::{BigFloat, Consts, RoundingMode};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{least_squares, PowerLawFit, MIN_FIT_POINTS};
use crate::geodesics::Point;
use crate::profile::Profile;
use crate::tridiag::Factored;

pub const DEFAULT_N_MAX: usize = 128;
pub const DEFAULT_K_MAX: usize = 128;
/// Odd, so that the equator `r = a` is a cell centre.
pub const DEFAULT_GRID_SIZE: usize = 2049;
pub const MIN_GRID_SIZE: usize = 512;
pub const MIN_CELLS_PER_WAVELENGTH: f64 = 10.0;
/// Reliability gate on digits lost to cancellation.
pub const MAX_CANCELLATION_DIGITS: f64 = 10.0;
/// Reliability gate on the truncation tail relative to `|p|`.
pub const MAX_RELATIVE_TAIL: f64 = 1e-3;
pub const DEFAULT_BOOTSTRAP_SEED: u64 = 0x5eed;
const BOOTSTRAP_DRAWS: usize = 200;

/// Sizes of a spectral basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpectralOptions {
    pub n_max: usize,
    pub k_max: usize,
    pub grid_size: usize,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self {
            n_max: DEFAULT_N_MAX,
            k_max: DEFAULT_K_MAX,
            grid_size: DEFAULT_GRID_SIZE,
        }
    }
}

#[derive(Debug, Clone)]
struct Mode {
    eigenvalues: Vec<f64>,
    factored: Factored,
}

/// Per-mode eigenpairs of the Laplace–Beltrami operator on a cell-centred
/// radial grid. Eigenvectors are regenerated on demand from the stored
/// factorizations.
#[derive(Debug, Clone)]
pub struct SpectralBasis {
    profile: Profile,
    h: f64,
    centers: Vec<f64>,
    weights: Vec<f64>,
    modes: Vec<Mode>,
    /// `Σ wᵢ f₀,ₖ(rᵢ)` for the axisymmetric eigenvectors.
    zero_mode_masses: Vec<f64>,
}

/// Builds the spectral basis for Fourier indices `0..=n_max`.
pub fn assemble_spectrum(
    p: &Profile,
    n_max: usize,
    k_max: usize,
    grid_size: usize,
) -> Result<SpectralBasis> {
    if grid_size < MIN_GRID_SIZE {
        return Err(Error::Resolution(format!(
            "grid_size = {grid_size} is below the minimum {MIN_GRID_SIZE}"
        )));
    }
    if k_max == 0 {
        return Err(Error::Precondition("k_max must be positive".into()));
    }
    let cells_per_wavelength = 2.0 * grid_size as f64 / k_max as f64;
    if cells_per_wavelength < MIN_CELLS_PER_WAVELENGTH {
        return Err(Error::Resolution(format!(
            "{cells_per_wavelength:.1} cells per wavelength for k_max = {k_max}, need {MIN_CELLS_PER_WAVELENGTH}"
        )));
    }
    let n = grid_size;
    let a = p.a();
    let h = 2.0 * a / n as f64;
    let centers: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) * h).collect();
    let m_center: Vec<f64> = centers.iter().map(|&r| p.m_at_offset(r - a)).collect();
    let m_face: Vec<f64> = (1..n).map(|i| p.m_at_offset(i as f64 * h - a)).collect();
    if m_center.iter().chain(&m_face).any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidProfile("m must be positive inside (0, 2a)".into()));
    }
    let weights: Vec<f64> = m_center.iter().map(|m| m * h).collect();
    let couplings: Vec<f64> = m_face.iter().map(|m| m / h).collect();
    let modes = (0..=n_max)
        .into_par_iter()
        .map(|idx| {
            let q = (idx * idx) as f64;
            let potentials: Vec<f64> = m_center.iter().map(|m| q * h / m).collect();
            let factored = Factored::new(&couplings, &potentials, &weights)?;
            let eigenvalues = factored.smallest_eigenvalues(k_max);
            Ok(Mode {
                eigenvalues,
                factored,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut basis = SpectralBasis {
        profile: p.clone(),
        h,
        centers,
        weights,
        modes,
        zero_mode_masses: Vec::new(),
    };
    basis.zero_mode_masses = (0..basis.k_max())
        .map(|k| {
            let f = basis.eigenvector(0, k);
            neumaier(f.iter().zip(&basis.weights).map(|(v, w)| v * w))
        })
        .collect();
    Ok(basis)
}

/// [`assemble_spectrum`] with the sizes taken from `opts`.
pub fn assemble_with(p: &Profile, opts: &SpectralOptions) -> Result<SpectralBasis> {
    assemble_spectrum(p, opts.n_max, opts.k_max, opts.grid_size)
}

impl SpectralBasis {
    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Cell centres on `(0, 2a)`.
    pub fn r_grid(&self) -> &[f64] {
        &self.centers
    }

    /// Quadrature weights `m(rᵢ)·h`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn n_max(&self) -> usize {
        self.modes.len() - 1
    }

    pub fn k_max(&self) -> usize {
        self.modes[0].eigenvalues.len()
    }

    pub fn options(&self) -> SpectralOptions {
        SpectralOptions {
            n_max: self.n_max(),
            k_max: self.k_max(),
            grid_size: self.centers.len(),
        }
    }

    /// Eigenvalues `λ_{n,1} ≤ … ≤ λ_{n,k_max}` of Fourier mode `n`.
    pub fn eigenvalues(&self, n: usize) -> &[f64] {
        &self.modes[n].eigenvalues
    }

    /// Discrete area `2π Σ wᵢ`.
    pub fn discrete_area(&self) -> f64 {
        2.0 * PI * neumaier(self.weights.iter().copied())
    }

    /// Eigenvector `f_{n,k}` on the grid, normalized so that `Σ wᵢ fᵢ² = 1`.
    pub fn eigenvector(&self, n: usize, k: usize) -> Vec<f64> {
        let mode = &self.modes[n];
        let mut z = mode.factored.eigenvector(mode.eigenvalues[k]);
        if n == 0 && k == 0 {
            // the constant mode has a fixed sign
            let s: f64 = z.iter().sum();
            if s < 0.0 {
                z.iter_mut().for_each(|v| *v = -*v);
            }
        }
        z.iter()
            .zip(&self.weights)
            .map(|(v, w)| v / w.sqrt())
            .collect()
    }

    /// Residual `‖A z − λ z‖` of the symmetric scaled eigenproblem for `(n, k)`.
    pub fn residual(&self, n: usize, k: usize) -> f64 {
        let mode = &self.modes[n];
        let lam = mode.eigenvalues[k];
        mode.factored.residual(lam, &mode.factored.eigenvector(lam))
    }

    /// Largest `|Σ w f_j f_k|` over `j ≠ k` within mode `n`.
    pub fn orthogonality_defect(&self, n: usize) -> f64 {
        let vecs: Vec<Vec<f64>> = (0..self.k_max()).map(|k| self.eigenvector(n, k)).collect();
        let mut worst: f64 = 0.0;
        for j in 0..vecs.len() {
            for k in 0..j {
                let dot = neumaier(
                    vecs[j]
                        .iter()
                        .zip(&vecs[k])
                        .zip(&self.weights)
                        .map(|((a, b), w)| a * b * w),
                );
                worst = worst.max(dot.abs());
            }
        }
        worst
    }

    /// Values `f_{n,k}(r)` for every mode, interpolated from the grid.
    pub fn mode_values(&self, r: f64) -> Vec<Vec<f64>> {
        self.mode_values_at(&[r]).pop().unwrap_or_default()
    }

    /// [`SpectralBasis::mode_values`] at several radii, indexed `[point][n][k]`.
    pub fn mode_values_at(&self, radii: &[f64]) -> Vec<Vec<Vec<f64>>> {
        let stencils: Vec<Stencil> = radii.iter().map(|&r| self.stencil(r)).collect();
        let per_mode: Vec<Vec<Vec<f64>>> = (0..=self.n_max())
            .into_par_iter()
            .map(|n| {
                (0..self.k_max())
                    .map(|k| {
                        let f = self.eigenvector(n, k);
                        stencils.iter().map(|s| s.apply(&f)).collect()
                    })
                    .collect()
            })
            .collect();
        (0..radii.len())
            .map(|i| {
                per_mode
                    .iter()
                    .map(|mode| mode.iter().map(|vals| vals[i]).collect())
                    .collect()
            })
            .collect()
    }

    fn stencil(&self, r: f64) -> Stencil {
        let n = self.centers.len();
        let x = r / self.h - 0.5;
        let nearest = x.round();
        if (x - nearest).abs() < 1e-9 && nearest >= 0.0 && (nearest as usize) < n {
            return Stencil {
                start: nearest as usize,
                coeffs: vec![1.0],
            };
        }
        let start = (x.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
        let nodes: Vec<f64> = (start..start + 4).map(|i| i as f64).collect();
        let coeffs = (0..4)
            .map(|j| {
                (0..4)
                    .filter(|&i| i != j)
                    .map(|i| (x - nodes[i]) / (nodes[j] - nodes[i]))
                    .product()
            })
            .collect();
        Stencil { start, coeffs }
    }

    /// Prepares the products needed to evaluate `p_t(x, y)` at many times.
    pub fn kernel_pair(&self, x: Point, y: Point) -> KernelPair {
        let vals = self.mode_values_at(&[x.r, y.r]);
        let (fx, fy) = (&vals[0], &vals[1]);
        let dtheta = x.theta - y.theta;
        let mut terms = Vec::with_capacity((self.n_max() + 1) * self.k_max());
        let mut mode_tails = Vec::with_capacity(self.n_max() + 1);
        for (n, mode) in self.modes.iter().enumerate() {
            let c_n = if n == 0 { 1.0 / (2.0 * PI) } else { 1.0 / PI };
            let angular = c_n * (n as f64 * dtheta).cos();
            for (k, &lam) in mode.eigenvalues.iter().enumerate() {
                terms.push((lam, angular * fx[n][k] * fy[n][k]));
            }
            let kk = mode.eigenvalues.len();
            let tail_from = kk.saturating_sub(4);
            let amp_x = fx[n][tail_from..].iter().fold(0.0f64, |s, v| s.max(v.abs()));
            let amp_y = fy[n][tail_from..].iter().fold(0.0f64, |s, v| s.max(v.abs()));
            let last = mode.eigenvalues[kk - 1];
            let gap = if kk > 1 {
                last - mode.eigenvalues[kk - 2]
            } else {
                last
            };
            mode_tails.push(ModeTail {
                coeff: c_n * amp_x * amp_y,
                last,
                gap: gap.max(f64::MIN_POSITIVE),
            });
        }
        let zero_diag = |f: &Vec<Vec<f64>>| -> Vec<(f64, f64)> {
            self.modes[0]
                .eigenvalues
                .iter()
                .zip(&f[0])
                .map(|(&lam, v)| (lam, v * v))
                .collect()
        };
        let b_max = self.weights.iter().fold(0.0f64, |s, w| s.max(*w)) / self.h;
        KernelPair {
            x,
            y,
            terms,
            mode_tails,
            zero_diag_x: zero_diag(fx),
            zero_diag_y: zero_diag(fy),
            n_max: self.n_max(),
            b_max,
            zero_x: self.modes[0]
                .eigenvalues
                .iter()
                .zip(&fx[0])
                .zip(&self.zero_mode_masses)
                .map(|((&lam, v), mass)| (lam, v * mass))
                .collect(),
        }
    }

    /// Heat-trace `Σ_n mult(n) Σ_k e^{−λ_{n,k} t}` with multiplicity 1 for `n = 0`, 2 otherwise.
    pub fn heat_trace(&self, t: f64) -> f64 {
        neumaier(self.modes.iter().enumerate().flat_map(|(n, mode)| {
            let mult = if n == 0 { 1.0 } else { 2.0 };
            mode.eigenvalues.iter().map(move |lam| mult * (-lam * t).exp())
        }))
    }
}

struct Stencil {
    start: usize,
    coeffs: Vec<f64>,
}

impl Stencil {
    fn apply(&self, f: &[f64]) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| c * f[self.start + j])
            .sum()
    }
}

#[derive(Debug, Clone, Copy)]
struct ModeTail {
    coeff: f64,
    last: f64,
    gap: f64,
}

/// Pre-multiplied spectral data for one point pair.
#[derive(Debug, Clone)]
pub struct KernelPair {
    pub x: Point,
    pub y: Point,
    terms: Vec<(f64, f64)>,
    mode_tails: Vec<ModeTail>,
    zero_diag_x: Vec<(f64, f64)>,
    zero_diag_y: Vec<(f64, f64)>,
    n_max: usize,
    b_max: f64,
    zero_x: Vec<(f64, f64)>,
}

/// One heat-kernel evaluation with its diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSample {
    pub t: f64,
    pub p: f64,
    pub truncation_bound: f64,
    pub cancellation_digits: f64,
    pub reliable: bool,
}

impl KernelSample {
    fn new(t: f64, p: f64, truncation_bound: f64, cancellation_digits: f64) -> Self {
        let reliable = p > 0.0
            && cancellation_digits <= MAX_CANCELLATION_DIGITS
            && truncation_bound <= MAX_RELATIVE_TAIL * p.abs();
        Self {
            t,
            p,
            truncation_bound,
            cancellation_digits,
            reliable,
        }
    }
}

impl KernelPair {
    /// `p_t(x, y)` with a truncation bound and the digits lost to cancellation.
    pub fn evaluate(&self, t: f64) -> Result<KernelSample> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::OutOfRange {
                what: "t",
                value: t,
                range: "(0, inf)".into(),
            });
        }
        let mut acc = Neumaier::default();
        let mut abs_sum = 0.0;
        for &(lam, c) in &self.terms {
            let v = c * (-lam * t).exp();
            acc.add(v);
            abs_sum += v.abs();
        }
        let p = acc.sum();
        let digits = if p == 0.0 {
            f64::INFINITY
        } else {
            (abs_sum / p.abs()).log10().max(0.0)
        };
        Ok(KernelSample::new(t, p, self.truncation_bound(t), digits))
    }

    fn truncation_bound(&self, t: f64) -> f64 {
        let within: f64 = self
            .mode_tails
            .iter()
            .map(|m| {
                let q = (-m.gap * t).exp();
                m.coeff * (-m.last * t).exp() * q / (1.0 - q)
            })
            .sum();
        let diag = |d: &[(f64, f64)]| d.iter().map(|(lam, v)| (-lam * t).exp() * v).sum::<f64>();
        let amp = (diag(&self.zero_diag_x) * diag(&self.zero_diag_y)).sqrt();
        let rate = t / (self.b_max * self.b_max);
        let mut beyond = 0.0;
        let mut n = self.n_max + 1;
        loop {
            let term = (-((n * n) as f64) * rate).exp();
            beyond += term;
            if term <= 1e-17 * beyond || n > self.n_max + 1_000_000 {
                break;
            }
            n += 1;
        }
        within + amp * beyond / PI
    }

    /// `∫ p_t(x, z) dvol(z)` by the discrete quadrature of the grid.
    pub fn total_mass(&self, t: f64) -> f64 {
        neumaier(self.zero_x.iter().map(|(lam, v)| v * (-lam * t).exp()))
    }
}

/// `p_t(x, y)` from a basis; prefer [`SpectralBasis::kernel_pair`] for many `t`.
pub fn heat_kernel(basis: &SpectralBasis, x: Point, y: Point, t: f64) -> Result<KernelSample> {
    basis.kernel_pair(x, y).evaluate(t)
}

/// Heat-kernel samples for a fixed pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelCurve {
    pub x: Point,
    pub y: Point,
    pub d_xy: f64,
    pub samples: Vec<KernelSample>,
}

impl KernelCurve {
    pub fn reliable(&self) -> impl Iterator<Item = &KernelSample> {
        self.samples.iter().filter(|s| s.reliable)
    }
}

/// Evaluates the spectral kernel of a pair at every time in `ts`.
pub fn kernel_curve(
    basis: &SpectralBasis,
    x: Point,
    y: Point,
    d_xy: f64,
    ts: &[f64],
) -> Result<KernelCurve> {
    let pair = basis.kernel_pair(x, y);
    let samples = ts.iter().map(|&t| pair.evaluate(t)).collect::<Result<_>>()?;
    Ok(KernelCurve {
        x,
        y,
        d_xy,
        samples,
    })
}

/// Antipodal kernel of the unit sphere from the spectral sum, as an extended
/// precision evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactValue {
    pub value: f64,
    /// Set when the working precision needed exceeds [`MAX_POISSON_BITS`].
    pub flagged: bool,
    pub terms: usize,
    pub precision_bits: usize,
}

pub const MAX_POISSON_BITS: usize = 4096;

/// `p_t(x, x̂) = (1/4π) Σ_{n≥0} (−1)ⁿ (2n+1) e^{−n(n+1)t}` on the unit sphere.
pub fn s2_exact_poisson(t: f64) -> Result<ExactValue> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::OutOfRange {
            what: "t",
            value: t,
            range: "(0, inf)".into(),
        });
    }
    let needed = (PI * PI / (4.0 * t * std::f64::consts::LN_2)).ceil() as usize + 160;
    let flagged = needed > MAX_POISSON_BITS;
    let bits = needed.div_ceil(64).min(MAX_POISSON_BITS / 64) * 64;
    let rm = RoundingMode::ToEven;
    let mut cc = Consts::new().map_err(|e| Error::Precondition(format!("{e:?}")))?;
    let big_t = BigFloat::from_f64(t, bits);
    let threshold = BigFloat::from_f64(1e-18, bits);
    let mut sum = BigFloat::from_f64(0.0, bits);
    let mut n: u64 = 0;
    loop {
        let arg = BigFloat::from_u64(n * (n + 1), bits).mul(&big_t, bits, rm).neg();
        let term = arg
            .exp(bits, rm, &mut cc)
            .mul(&BigFloat::from_u64(2 * n + 1, bits), bits, rm);
        sum = if n.is_multiple_of(2) {
            sum.add(&term, bits, rm)
        } else {
            sum.sub(&term, bits, rm)
        };
        n += 1;
        let small = term.cmp(&sum.abs().mul(&threshold, bits, rm)).is_some_and(|o| o < 0);
        if small && (n as f64) * (n as f64) * t > 1.0 {
            break;
        }
    }
    let value = big_to_f64(&sum) / (4.0 * PI);
    Ok(ExactValue {
        value,
        flagged,
        terms: n as usize,
        precision_bits: bits,
    })
}

fn big_to_f64(x: &BigFloat) -> f64 {
    match x.as_raw_parts() {
        Some((words, _, sign, exponent, _)) => {
            let Some(&top) = words.last() else {
                return 0.0;
            };
            if top == 0 {
                return 0.0;
            }
            let mantissa = top as f64;
            let e = exponent - 64;
            let v = if e < -1000 {
                mantissa * 2f64.powi(-1000) * 2f64.powi(e + 1000)
            } else {
                mantissa * 2f64.powi(e)
            };
            if sign.is_negative() {
                -v
            } else {
                v
            }
        }
        None => f64::NAN,
    }
}

/// `log p_t(x, x̂)` on the unit sphere from the theta (image-sum) form.
pub fn s2_exact_theta_log(t: f64) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::OutOfRange {
            what: "t",
            value: t,
            range: "(0, inf)".into(),
        });
    }
    let q = PI * PI / (4.0 * t);
    let mut acc = Neumaier::default();
    for k in 0u32.. {
        let odd = (2 * k + 1) as f64;
        let term = odd * (-(odd * odd - 1.0) * q).exp();
        acc.add(if k % 2 == 0 { term } else { -term });
        if term < 1e-20 * acc.sum().abs() {
            break;
        }
    }
    Ok(t / 4.0 - q + (PI / (4.0 * t.powf(1.5) * PI.sqrt())).ln() + acc.sum().ln())
}

/// `p_t(x, x̂)` on the unit sphere from the theta (image-sum) form.
pub fn s2_exact_theta(t: f64) -> Result<f64> {
    Ok(s2_exact_theta_log(t)?.exp())
}

/// Antipodal curve of the unit sphere from the theta form, `d = π`.
pub fn s2_theta_curve(ts: &[f64]) -> Result<KernelCurve> {
    let samples = ts
        .iter()
        .map(|&t| Ok(KernelSample::new(t, s2_exact_theta(t)?, 0.0, 0.0)))
        .collect::<Result<_>>()?;
    Ok(KernelCurve {
        x: Point::new(0.0, 0.0),
        y: Point::new(PI, 0.0),
        d_xy: PI,
        samples,
    })
}

/// Fits `log p + d²/4t = log C − α log t + β₁ t` to the reliable samples and
/// reports `α` as the exponent, `β₁` as the nuisance coefficient and the
/// spread of `α` over random sub-windows.
pub fn fit_exponent(curve: &KernelCurve) -> Result<PowerLawFit> {
    fit_exponent_seeded(curve, DEFAULT_BOOTSTRAP_SEED)
}

pub fn fit_exponent_seeded(curve: &KernelCurve, seed: u64) -> Result<PowerLawFit> {
    let pts: Vec<(f64, f64)> = curve
        .reliable()
        .map(|s| (s.t, s.p.ln() + curve.d_xy * curve.d_xy / (4.0 * s.t)))
        .collect();
    if pts.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientSamples {
            needed: MIN_FIT_POINTS,
            have: pts.len(),
        });
    }
    let (log_c, alpha, beta) = nuisance_fit(&pts)?;
    let residual = pts
        .iter()
        .map(|(t, y)| (log_c - alpha * t.ln() + beta * t - y).exp_m1().abs())
        .fold(0.0, f64::max);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = pts.len();
    let min_len = MIN_FIT_POINTS.max(n / 2);
    let mut draws = Vec::with_capacity(BOOTSTRAP_DRAWS);
    if n > min_len {
        for _ in 0..BOOTSTRAP_DRAWS {
            let len = rng.gen_range(min_len..=n);
            let start = rng.gen_range(0..=n - len);
            if let Ok((_, a, _)) = nuisance_fit(&pts[start..start + len]) {
                draws.push(a);
            }
        }
    }
    let spread = if draws.len() > 1 {
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        Some((draws.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (draws.len() - 1) as f64).sqrt())
    } else {
        None
    };
    let ts = pts.iter().map(|p| p.0);
    let window = ts.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), t| (lo.min(t), hi.max(t)));
    Ok(PowerLawFit {
        exponent: alpha,
        constant: log_c.exp(),
        residual,
        window,
        n_samples: n,
        nuisance: Some(beta),
        spread,
    })
}

fn nuisance_fit(pts: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    let n = pts.len();
    let design = DMatrix::from_fn(n, 3, |i, j| match j {
        0 => 1.0,
        1 => -pts[i].0.ln(),
        _ => pts[i].0,
    });
    let rhs = DVector::from_iterator(n, pts.iter().map(|p| p.1));
    let beta = least_squares(&design, &rhs)?;
    Ok((beta[0], beta[1], beta[2]))
}

/// `(t, −4t log p_t)` over the reliable samples.
pub fn varadhan_check(curve: &KernelCurve) -> Vec<(f64, f64)> {
    curve.reliable().map(|s| (s.t, -4.0 * s.t * s.p.ln())).collect()
}

/// Fits `Z(t) ≈ C t^{−γ}` to the heat trace; Weyl's law predicts `γ = 1`
/// and `C = Area/4π`. The returned exponent is `−γ`.
pub fn weyl_fit(basis: &SpectralBasis, ts: &[f64]) -> Result<PowerLawFit> {
    let z: Vec<f64> = ts.iter().map(|&t| basis.heat_trace(t)).collect();
    crate::fit::fit_power_law(ts, &z)
}

/// Richardson-extrapolated eigenvalues `(4λ_{h/2} − λ_h)/3`, indexed `[n][k]`.
pub fn richardson_eigenvalues(
    p: &Profile,
    n_max: usize,
    k_max: usize,
    coarse_grid: usize,
) -> Result<Vec<Vec<f64>>> {
    let coarse = assemble_spectrum(p, n_max, k_max, coarse_grid)?;
    let fine = assemble_spectrum(p, n_max, k_max, 2 * coarse_grid)?;
    Ok((0..=n_max)
        .map(|n| {
            coarse
                .eigenvalues(n)
                .iter()
                .zip(fine.eigenvalues(n))
                .map(|(c, f)| (4.0 * f - c) / 3.0)
                .collect()
        })
        .collect())
}

#[derive(Debug, Default, Clone, Copy)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn sum(&self) -> f64 {
        self.sum + self.comp
    }
}

fn neumaier(values: impl Iterator<Item = f64>) -> f64 {
    let mut acc = Neumaier::default();
    values.for_each(|v| acc.add(v));
    acc.sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poisson_and_theta_forms_agree() {
        for &t in &[0.05, 0.1, 0.3, 0.5, 1.0, 2.0] {
            let p = s2_exact_poisson(t).unwrap();
            let q = s2_exact_theta(t).unwrap();
            assert!(!p.flagged);
            assert!(((p.value - q) / q).abs() < 1e-12, "t = {t}: {} vs {q}", p.value);
        }
        let tiny = s2_exact_poisson(5e-4).unwrap();
        assert!(tiny.flagged);
    }

    #[test]
    fn theta_form_small_time() {
        let t: f64 = 0.05;
        let lead = (t / 4.0).exp() * PI.sqrt() / (4.0 * t.powf(1.5)) * (-PI * PI / (4.0 * t)).exp();
        let v = s2_exact_theta(t).unwrap();
        assert!(((v - lead) / lead).abs() < 1e-13);
        assert!(s2_exact_theta_log(1e-4).unwrap().is_finite());
    }

    #[test]
    fn sphere_basis_basics() {
        let p = Profile::sphere(1.0).unwrap();
        let basis = assemble_spectrum(&p, 4, 8, 1025).unwrap();
        assert!(basis.eigenvalues(0)[0].abs() < 1e-12);
        for l in 0..6usize {
            let exact = (l * (l + 1)) as f64;
            assert!((basis.eigenvalues(0)[l] - exact).abs() < 1e-4 * exact.max(1.0));
        }
        let f0 = basis.eigenvector(0, 0);
        let area = basis.discrete_area() / (2.0 * PI);
        for v in &f0 {
            assert!((v - 1.0 / area.sqrt()).abs() < 1e-10);
        }
        assert!(basis.orthogonality_defect(0) < 1e-10);
        assert!(basis.orthogonality_defect(4) < 1e-10);
        let x = Point::new(1.0, 0.3);
        let y = Point::new(2.0, 1.1);
        let pxy = heat_kernel(&basis, x, y, 0.5).unwrap();
        let pyx = heat_kernel(&basis, y, x, 0.5).unwrap();
        assert!(((pxy.p - pyx.p) / pxy.p).abs() < 1e-12);
        assert!(assemble_spectrum(&p, 2, 8, 100).is_err());
        assert!(assemble_spectrum(&p, 2, 200, 600).is_err());
    }
}
