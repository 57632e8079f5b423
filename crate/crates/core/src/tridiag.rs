//! Relative-accuracy eigensolver for weighted tridiagonal Laplacians.
//!
//! The pencil `K f = λ W f` is given by positive couplings `c`, non-negative
//! potentials `V` and positive weights `w`, with
//! `K = diag(V_i + c_{i-1} + c_i) - offdiag(c)`. Its Cholesky-like factors are
//! formed without subtraction and then scaled to `W^{-1/2} K W^{-1/2} = L D Lᵀ`.
//! Eigenvalues come from bisection on stationary qd Sturm counts and
//! eigenvectors from twisted factorizations, both of which inherit the relative
//! accuracy of the factored representation.

use crate::error::{Error, Result};

/// `L D Lᵀ` representation of the symmetrically scaled pencil.
#[derive(Debug, Clone)]
pub struct Factored {
    d: Vec<f64>,
    l: Vec<f64>,
    /// `L_i² D_i`.
    lld: Vec<f64>,
    /// `L_i D_i`.
    ld: Vec<f64>,
    weights: Vec<f64>,
}

const TINY: f64 = 1e-300;

impl Factored {
    /// Factors the pencil; `couplings` has one entry fewer than `potentials`.
    pub fn new(couplings: &[f64], potentials: &[f64], weights: &[f64]) -> Result<Self> {
        let n = potentials.len();
        if n < 2 || couplings.len() + 1 != n || weights.len() != n {
            return Err(Error::Precondition("inconsistent tridiagonal dimensions".into()));
        }
        if couplings.iter().any(|c| !(*c > 0.0))
            || potentials.iter().any(|v| !(*v >= 0.0))
            || weights.iter().any(|w| !(*w > 0.0))
        {
            return Err(Error::Precondition(
                "couplings and weights must be positive, potentials non-negative".into(),
            ));
        }
        let mut dt = vec![0.0; n];
        let mut lt = vec![0.0; n - 1];
        let mut row_sum = 0.0;
        for i in 0..n {
            let carried = if i == 0 {
                0.0
            } else {
                couplings[i - 1] * row_sum / dt[i - 1]
            };
            let c = if i + 1 < n { couplings[i] } else { 0.0 };
            dt[i] = potentials[i] + c + carried;
            row_sum = potentials[i] + carried;
            if i + 1 < n {
                if dt[i] == 0.0 {
                    return Err(Error::Precondition("singular leading block".into()));
                }
                lt[i] = -couplings[i] / dt[i];
            }
        }
        let d: Vec<f64> = dt.iter().zip(weights).map(|(x, w)| x / w).collect();
        let l: Vec<f64> = (0..n - 1)
            .map(|i| lt[i] * (weights[i] / weights[i + 1]).sqrt())
            .collect();
        let lld = (0..n - 1).map(|i| l[i] * l[i] * d[i]).collect();
        let ld = (0..n - 1).map(|i| l[i] * d[i]).collect();
        Ok(Self {
            d,
            l,
            lld,
            ld,
            weights: weights.to_vec(),
        })
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Number of eigenvalues strictly below `sigma`.
    pub fn count_below(&self, sigma: f64) -> usize {
        let n = self.d.len();
        let mut neg = 0;
        let mut t = -sigma;
        for j in 0..n - 1 {
            let mut dplus = self.d[j] + t;
            if dplus.abs() < TINY {
                dplus = -TINY;
            }
            if dplus < 0.0 {
                neg += 1;
            }
            let ratio = if t.is_infinite() && dplus.is_infinite() {
                1.0
            } else {
                t / dplus
            };
            t = ratio * self.lld[j] - sigma;
        }
        if self.d[n - 1] + t < 0.0 {
            neg += 1;
        }
        neg
    }

    /// Gershgorin upper bound on the spectrum.
    pub fn upper_bound(&self) -> f64 {
        let n = self.d.len();
        (0..n)
            .map(|i| {
                let diag = self.d[i] + if i > 0 { self.lld[i - 1] } else { 0.0 };
                let off = if i > 0 { self.ld[i - 1].abs() } else { 0.0 }
                    + if i + 1 < n { self.ld[i].abs() } else { 0.0 };
                diag + off
            })
            .fold(0.0, f64::max)
    }

    /// The `k` smallest eigenvalues in ascending order, each to a few ulps.
    pub fn smallest_eigenvalues(&self, k: usize) -> Vec<f64> {
        let k = k.min(self.len());
        let mut hi = self.upper_bound().max(1.0);
        let mut n_hi = self.count_below(hi);
        while n_hi < k {
            hi *= 2.0;
            n_hi = self.count_below(hi);
        }
        let mut out = vec![f64::NAN; k];
        self.bisect(0.0, 0, hi, n_hi, &mut out);
        out
    }

    fn bisect(&self, lo: f64, n_lo: usize, hi: f64, n_hi: usize, out: &mut [f64]) {
        if n_lo >= out.len() || n_hi == n_lo {
            return;
        }
        let converged = hi - lo <= 4.0 * f64::EPSILON * hi.abs() || hi < 1e-280;
        if converged {
            let mid = 0.5 * (lo + hi);
            for slot in out.iter_mut().take(n_hi).skip(n_lo) {
                *slot = mid;
            }
            return;
        }
        let mid = if lo <= 0.0 {
            hi * 0.0625
        } else if hi > 2.0 * lo {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        let n_mid = self.count_below(mid);
        self.bisect(lo, n_lo, mid, n_mid, out);
        self.bisect(mid, n_mid, hi, n_hi, out);
    }

    /// Unit eigenvector of the scaled problem for the eigenvalue `lambda`.
    pub fn eigenvector(&self, lambda: f64) -> Vec<f64> {
        let n = self.d.len();
        let mut s = vec![0.0; n];
        let mut lplus = vec![0.0; n - 1];
        s[0] = -lambda;
        for i in 0..n - 1 {
            let mut dplus = self.d[i] + s[i];
            if dplus.abs() < TINY {
                dplus = -TINY;
            }
            lplus[i] = self.ld[i] / dplus;
            s[i + 1] = lplus[i] * self.l[i] * s[i] - lambda;
        }
        let mut p = vec![0.0; n];
        let mut uminus = vec![0.0; n - 1];
        p[n - 1] = self.d[n - 1] - lambda;
        for i in (0..n - 1).rev() {
            let mut dminus = self.lld[i] + p[i + 1];
            if dminus.abs() < TINY {
                dminus = -TINY;
            }
            let ratio = self.d[i] / dminus;
            uminus[i] = self.l[i] * ratio;
            p[i] = p[i + 1] * ratio - lambda;
        }
        let r = (0..n)
            .min_by(|&a, &b| {
                let ga = (s[a] + p[a] + lambda).abs();
                let gb = (s[b] + p[b] + lambda).abs();
                ga.total_cmp(&gb)
            })
            .unwrap_or(0);
        let mut z = vec![0.0; n];
        z[r] = 1.0;
        for i in (0..r).rev() {
            z[i] = -lplus[i] * z[i + 1];
        }
        for i in r..n - 1 {
            z[i + 1] = -uminus[i] * z[i];
        }
        let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        for v in &mut z {
            *v /= norm;
        }
        z
    }

    /// `‖A z − λ z‖₂` for the scaled matrix `A = L D Lᵀ`.
    pub fn residual(&self, lambda: f64, z: &[f64]) -> f64 {
        let n = self.d.len();
        (0..n)
            .map(|i| {
                let diag = self.d[i] + if i > 0 { self.lld[i - 1] } else { 0.0 };
                let mut az = diag * z[i];
                if i > 0 {
                    az += self.ld[i - 1] * z[i - 1];
                }
                if i + 1 < n {
                    az += self.ld[i] * z[i + 1];
                }
                (az - lambda * z[i]).powi(2)
            })
            .sum::<f64>()
            .sqrt()
    }
}
