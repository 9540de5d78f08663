//! Disturbance covariance: validation, Cholesky factor and inverse, and
//! circular complex Gaussian sampling.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Largest accepted eigenvalue spread of a covariance matrix.
pub const MAX_CONDITION: f64 = 1e12;

const HERMITIAN_TOL: f64 = 1e-10;

/// A validated Hermitian positive-definite covariance `Gamma`.
#[derive(Debug, Clone)]
pub struct Covariance {
    matrix: DMatrix<Complex64>,
    /// Lower-triangular `L` with `L L^H = Gamma`.
    factor: DMatrix<Complex64>,
    inverse: DMatrix<Complex64>,
    noise_power: f64,
}

impl Covariance {
    /// `sigma2 * I` of dimension `n`.
    pub fn white(n: usize, sigma2: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Covariance("dimension must be positive".into()));
        }
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::Covariance(format!("noise power must be positive, got {sigma2}")));
        }
        let c = Complex64::new(sigma2, 0.0);
        let ci = Complex64::new(1.0 / sigma2, 0.0);
        let cf = Complex64::new(sigma2.sqrt(), 0.0);
        Ok(Self {
            matrix: DMatrix::from_diagonal_element(n, n, c),
            factor: DMatrix::from_diagonal_element(n, n, cf),
            inverse: DMatrix::from_diagonal_element(n, n, ci),
            noise_power: sigma2,
        })
    }

    pub fn from_matrix(matrix: DMatrix<Complex64>) -> Result<Self> {
        let n = matrix.nrows();
        if n == 0 || matrix.ncols() != n {
            return Err(Error::Covariance(format!(
                "matrix must be square and non-empty, got {}x{}",
                n,
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Covariance("non-finite entry".into()));
        }
        let scale = matrix.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let asym = (&matrix - matrix.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if asym > HERMITIAN_TOL * scale.max(1.0) {
            return Err(Error::Covariance("matrix is not Hermitian".into()));
        }
        // Eigenvalues of a Hermitian matrix are real; work on the exactly
        // symmetrised copy.
        let herm = (&matrix + matrix.adjoint()).map(|z| z * 0.5);
        let eig = herm.clone().symmetric_eigenvalues();
        let lo = eig.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !(lo > 0.0) {
            return Err(Error::Covariance(format!("matrix is not positive definite (smallest eigenvalue {lo:e})")));
        }
        if hi / lo > MAX_CONDITION {
            return Err(Error::Covariance(format!("condition number {:e} exceeds {MAX_CONDITION:e}", hi / lo)));
        }
        let chol = herm.clone().cholesky().ok_or_else(|| Error::Covariance("Cholesky factorisation failed".into()))?;
        let factor = chol.l();
        let inverse = chol.inverse();
        let noise_power = (0..n).map(|i| herm[(i, i)].re).sum::<f64>() / n as f64;
        Ok(Self { matrix: herm, factor, inverse, noise_power })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn factor(&self) -> &DMatrix<Complex64> {
        &self.factor
    }

    pub fn inverse(&self) -> &DMatrix<Complex64> {
        &self.inverse
    }

    /// Mean diagonal of `Gamma`, the per-element noise power `sigma^2`.
    pub fn noise_power(&self) -> f64 {
        self.noise_power
    }

    /// `Some(sigma^2)` when `Gamma = sigma^2 I` exactly.
    pub fn scaled_identity(&self) -> Option<f64> {
        let n = self.dim();
        let d = self.matrix[(0, 0)];
        let ok = (0..n).all(|i| {
            (0..n).all(|j| {
                let v = self.matrix[(i, j)];
                if i == j {
                    v == d
                } else {
                    v == Complex64::default()
                }
            })
        });
        (ok && d.im == 0.0).then_some(d.re)
    }

    /// Draws `n = L z` with `z` i.i.d. standard circular complex Gaussian.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Complex64> {
        let mut out = vec![Complex64::default(); self.dim()];
        self.sample_into(rng, &mut out);
        out
    }

    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [Complex64]) {
        let n = self.dim();
        debug_assert_eq!(out.len(), n);
        let mut z = [Complex64::default(); 64];
        let mut z_heap;
        let z: &mut [Complex64] = if n <= z.len() {
            &mut z[..n]
        } else {
            z_heap = vec![Complex64::default(); n];
            &mut z_heap
        };
        for zi in z.iter_mut() {
            *zi = standard_circular(rng);
        }
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = Complex64::default();
            for (j, zj) in z.iter().enumerate().take(i + 1) {
                acc += self.factor[(i, j)] * zj;
            }
            *o = acc;
        }
    }
}

/// One draw of `CN(0, 1)`: real and imaginary parts each of variance 1/2.
pub fn standard_circular<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}
