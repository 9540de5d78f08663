//! CFAR adaptive matched filter with known disturbance covariance.
//!
//! For a bin with channel `h` and return `r`,
//! `Lambda = |h^H Gamma^-1 r|^2 / (h^H Gamma^-1 h)`. Under H0 it is a
//! unit-mean exponential, so `eta = -ln(P_FA)` gives exactly `P_FA`. Under
//! H1, `2 Lambda` is noncentral chi-square with 2 degrees of freedom and
//! noncentrality `2 rho`, `rho = |alpha|^2 h^H Gamma^-1 h`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::covariance::{standard_circular, Covariance};
use crate::error::{Error, Result};
use crate::scene::{BinVectors, Snapshot};
use crate::special::{marcum_q1, wilson_interval, Z95};

/// `eta = -ln(p_fa)`.
pub fn threshold(p_fa: f64) -> Result<f64> {
    if !(p_fa > 0.0 && p_fa < 1.0) {
        return Err(Error::InvalidProbability(p_fa));
    }
    Ok(-p_fa.ln())
}

/// Test statistic for one bin with an explicit inverse covariance.
pub fn amf_statistic(r: &[Complex64], h: &[Complex64], gamma_inv: &DMatrix<Complex64>) -> Result<f64> {
    let n = gamma_inv.nrows();
    if gamma_inv.ncols() != n {
        return Err(Error::DimensionMismatch { what: "inverse covariance", expected: n, got: gamma_inv.ncols() });
    }
    check_dims(r, h, n)?;
    let mut u = vec![Complex64::default(); n];
    for (j, hj) in h.iter().enumerate() {
        for (i, ui) in u.iter_mut().enumerate() {
            *ui += gamma_inv[(i, j)] * hj;
        }
    }
    ratio(&u, r, h)
}

fn check_dims(r: &[Complex64], h: &[Complex64], n: usize) -> Result<()> {
    if h.len() != n {
        return Err(Error::DimensionMismatch { what: "channel", expected: n, got: h.len() });
    }
    if r.len() != n {
        return Err(Error::DimensionMismatch { what: "return", expected: n, got: r.len() });
    }
    Ok(())
}

// u = Gamma^-1 h
fn ratio(u: &[Complex64], r: &[Complex64], h: &[Complex64]) -> Result<f64> {
    let mut num = Complex64::default();
    let mut den = Complex64::default();
    for ((ui, ri), hi) in u.iter().zip(r).zip(h) {
        num += ui.conj() * ri;
        den += hi.conj() * ui;
    }
    if !(den.re > 0.0) || !den.re.is_finite() {
        return Err(Error::ZeroChannel);
    }
    Ok(num.norm_sqr() / den.re)
}

/// Per-bin statistics and decisions for one pulse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionResult {
    pub lambda: Vec<f64>,
    pub decisions: Vec<bool>,
    pub eta: f64,
}

impl DetectionResult {
    pub fn from_statistics(lambda: Vec<f64>, eta: f64) -> Self {
        let decisions = lambda.iter().map(|&l| l > eta).collect();
        Self { lambda, decisions, eta }
    }

    /// Number of bins with `Lambda > eta`.
    pub fn count(&self) -> usize {
        self.decisions.iter().filter(|&&d| d).count()
    }

    pub fn bins(&self) -> usize {
        self.lambda.len()
    }
}

/// Detector bound to one covariance; `Gamma^-1` is formed once.
#[derive(Debug, Clone)]
pub struct Detector {
    gamma_inv: DMatrix<Complex64>,
    diagonal: Option<Vec<f64>>,
    eta: f64,
}

impl Detector {
    pub fn new(gamma: &Covariance, eta: f64) -> Result<Self> {
        if !(eta >= 0.0 && eta.is_finite()) {
            return Err(Error::Negative { what: "threshold", value: eta });
        }
        let inv = gamma.inverse().clone();
        let n = inv.nrows();
        let is_diag = (0..n).all(|i| (0..n).all(|j| i == j || inv[(i, j)] == Complex64::default()));
        let diagonal = is_diag.then(|| (0..n).map(|i| inv[(i, i)].re).collect());
        Ok(Self { gamma_inv: inv, diagonal, eta })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn dim(&self) -> usize {
        self.gamma_inv.nrows()
    }

    pub fn statistic(&self, r: &[Complex64], h: &[Complex64]) -> Result<f64> {
        match &self.diagonal {
            Some(d) => {
                check_dims(r, h, d.len())?;
                let mut u = [Complex64::default(); 64];
                if d.len() <= u.len() {
                    for ((ui, hi), di) in u.iter_mut().zip(h).zip(d) {
                        *ui = hi * di;
                    }
                    ratio(&u[..d.len()], r, h)
                } else {
                    let u: Vec<Complex64> = h.iter().zip(d).map(|(hi, di)| hi * di).collect();
                    ratio(&u, r, h)
                }
            }
            None => amf_statistic(r, h, &self.gamma_inv),
        }
    }

    pub fn detect(&self, snapshot: &Snapshot, channels: &BinVectors) -> Result<DetectionResult> {
        let bins = snapshot.returns.bins();
        if channels.bins() != bins {
            return Err(Error::DimensionMismatch { what: "channel table bins", expected: bins, got: channels.bins() });
        }
        // A bin sitting in an exact null of the transmit pattern receives no
        // energy and cannot be tested; it is reported as Lambda = 0.
        let lambda = (0..bins)
            .map(|m| {
                let h = channels.bin(m);
                if h.iter().all(|z| z.re == 0.0 && z.im == 0.0) {
                    Ok(0.0)
                } else {
                    self.statistic(snapshot.returns.bin(m), h)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DetectionResult::from_statistics(lambda, self.eta))
    }
}

pub fn detect(snapshot: &Snapshot, channels: &BinVectors, gamma: &Covariance, eta: f64) -> Result<DetectionResult> {
    Detector::new(gamma, eta)?.detect(snapshot, channels)
}

/// `P_D = Q_1(sqrt(2 rho), sqrt(2 eta))`.
pub fn theoretical_pd(rho: f64, eta: f64) -> Result<f64> {
    if !(rho >= 0.0) {
        return Err(Error::Negative { what: "noncentrality", value: rho });
    }
    if !(eta >= 0.0) {
        return Err(Error::Negative { what: "threshold", value: eta });
    }
    Ok(marcum_q1((2.0 * rho).sqrt(), (2.0 * eta).sqrt()))
}

/// One row of a false-alarm calibration run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub p_fa_target: f64,
    pub eta: f64,
    pub trials: u64,
    pub fa_observed: u64,
    pub fa_rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Calibration {
    pub const CSV_HEADER: &'static str = "p_fa_target,eta,trials,fa_observed,fa_rate,ci_low,ci_high";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.p_fa_target, self.eta, self.trials, self.fa_observed, self.fa_rate, self.ci_low, self.ci_high
        )
    }
}

/// Counts threshold crossings over `trials` H0 bin-trials with
/// `Gamma = I_{n_rx}` and a fresh random channel per trial.
pub fn calibrate_false_alarm<R: Rng + ?Sized>(p_fa: f64, trials: u64, n_rx: usize, rng: &mut R) -> Result<Calibration> {
    let eta = threshold(p_fa)?;
    if n_rx == 0 {
        return Err(Error::Config("receiver needs at least one element".into()));
    }
    let det = Detector::new(&Covariance::white(n_rx, 1.0)?, eta)?;
    let mut r = vec![Complex64::default(); n_rx];
    let mut h = vec![Complex64::default(); n_rx];
    let mut hits = 0u64;
    for _ in 0..trials {
        h.iter_mut().for_each(|x| *x = standard_circular(rng));
        r.iter_mut().for_each(|x| *x = standard_circular(rng));
        if det.statistic(&r, &h)? > eta {
            hits += 1;
        }
    }
    let (ci_low, ci_high) = wilson_interval(hits, trials, Z95);
    Ok(Calibration {
        p_fa_target: p_fa,
        eta,
        trials,
        fa_observed: hits,
        fa_rate: if trials == 0 { 0.0 } else { hits as f64 / trials as f64 },
        ci_low,
        ci_high,
    })
}
