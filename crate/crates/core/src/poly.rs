//! Complex polynomials, constant term first.

use num_complex::Complex64;

use crate::{Error, Result};

/// Polynomial with complex coefficients `a₀ + a₁z + … + a_m z^m`.
///
/// The zero polynomial is represented by an empty coefficient vector.
/// A nonzero polynomial keeps a nonzero leading coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialC {
    coeffs: Vec<Complex64>,
}

impl PolynomialC {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        let mut p = Self { coeffs };
        p.trim();
        p
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: Complex64) -> Self {
        Self::new(vec![c])
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    /// Monic polynomial with the given roots.
    pub fn from_roots(roots: &[Complex64]) -> Self {
        let mut c = vec![Complex64::new(1.0, 0.0)];
        for &r in roots {
            let mut next = vec![Complex64::new(0.0, 0.0); c.len() + 1];
            for (k, &a) in c.iter().enumerate() {
                next[k + 1] += a;
                next[k] -= a * r;
            }
            c = next;
        }
        Self::new(c)
    }

    fn trim(&mut self) {
        while let Some(last) = self.coeffs.last() {
            if last.norm() == 0.0 {
                self.coeffs.pop();
            } else {
                break;
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial reports degree 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> Complex64 {
        self.coeffs.get(k).copied().unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    pub fn derivative(&self) -> PolynomialC {
        if self.coeffs.len() <= 1 {
            return PolynomialC::zero();
        }
        let c = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &a)| a * k as f64)
            .collect();
        PolynomialC::new(c)
    }

    pub fn scale(&self, s: Complex64) -> PolynomialC {
        PolynomialC::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    /// Recenter: returns q with q(w) = p(z0 + w), by repeated synthetic division.
    pub fn taylor_shift(&self, z0: Complex64) -> PolynomialC {
        let mut c = self.coeffs.clone();
        let n = c.len();
        if n == 0 {
            return PolynomialC::zero();
        }
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for item in out.iter_mut().take(n) {
            if c.is_empty() {
                break;
            }
            let mut rem = *c.last().unwrap();
            let mut quot = vec![Complex64::new(0.0, 0.0); c.len() - 1];
            for k in (0..c.len() - 1).rev() {
                quot[k] = rem;
                rem = c[k] + rem * z0;
            }
            *item = rem;
            c = quot;
        }
        PolynomialC::new(out)
    }

    /// Drop coefficients below `rel_tol · max|coeff|`, re-trimming the degree.
    pub fn truncate_small(&self, rel_tol: f64) -> PolynomialC {
        let max = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if max == 0.0 {
            return PolynomialC::zero();
        }
        let thr = rel_tol * max;
        PolynomialC::new(
            self.coeffs
                .iter()
                .map(|&c| if c.norm() < thr { Complex64::new(0.0, 0.0) } else { c })
                .collect(),
        )
    }

    /// Leading coefficient; error on the zero polynomial.
    pub fn leading(&self) -> Result<Complex64> {
        self.coeffs
            .last()
            .copied()
            .ok_or_else(|| Error::invalid("zero polynomial has no leading coefficient"))
    }
}

/// Least squares fit of a polynomial of degree ≤ `degree_cap` through samples
/// `(z_i, w_i)`, by modified Gram–Schmidt QR on the scaled Vandermonde matrix.
///
/// Returns the polynomial and a condition estimate (ratio of extreme R-diagonal
/// magnitudes). Sample points are scaled to unit modulus internally.
pub fn fit_polynomial(
    points: &[Complex64],
    values: &[Complex64],
    degree_cap: usize,
) -> Result<(PolynomialC, f64)> {
    let n = points.len();
    let m = degree_cap + 1;
    if n < 2 * m {
        return Err(Error::invalid(format!(
            "need at least {} samples for degree cap {}, got {}",
            2 * m,
            degree_cap,
            n
        )));
    }
    let rho = points.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    // Columns of the scaled Vandermonde matrix (z/ρ)^k.
    let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(m);
    for k in 0..m {
        cols.push(points.iter().map(|&z| (z / rho).powu(k as u32)).collect());
    }
    // MGS with one re-orthogonalization pass.
    let mut q: Vec<Vec<Complex64>> = Vec::with_capacity(m);
    let mut r = vec![vec![Complex64::new(0.0, 0.0); m]; m];
    for k in 0..m {
        let mut v = cols[k].clone();
        for _pass in 0..2 {
            for (j, qj) in q.iter().enumerate() {
                let proj: Complex64 = qj.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                r[j][k] += proj;
                for (vi, qi) in v.iter_mut().zip(qj) {
                    *vi -= proj * qi;
                }
            }
        }
        let nrm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        r[k][k] = Complex64::new(nrm, 0.0);
        if nrm == 0.0 {
            return Err(Error::IllConditionedFit { cond: f64::INFINITY });
        }
        for vi in v.iter_mut() {
            *vi /= nrm;
        }
        q.push(v);
    }
    let diag_max = (0..m).map(|k| r[k][k].norm()).fold(0.0, f64::max);
    let diag_min = (0..m).map(|k| r[k][k].norm()).fold(f64::INFINITY, f64::min);
    let cond = diag_max / diag_min;
    if cond > 1e12 {
        return Err(Error::IllConditionedFit { cond });
    }
    // Back substitution for R c = Qᴴ w.
    let mut rhs: Vec<Complex64> = q
        .iter()
        .map(|qk| qk.iter().zip(values).map(|(a, b)| a.conj() * b).sum())
        .collect();
    let mut coef = vec![Complex64::new(0.0, 0.0); m];
    for k in (0..m).rev() {
        let mut acc = rhs[k];
        for j in k + 1..m {
            acc -= r[k][j] * coef[j];
        }
        coef[k] = acc / r[k][k];
        rhs[k] = coef[k];
    }
    // Undo the z/ρ scaling.
    let mut scaled = Vec::with_capacity(m);
    let mut p = 1.0;
    for c in coef {
        scaled.push(c / p);
        p *= rho;
    }
    Ok((PolynomialC::new(scaled), cond))
}
