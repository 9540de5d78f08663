//! Post-matched-filter scene synthesis.
//!
//! With perfect delay alignment the matched filter output for bin `m` at
//! pulse `k` is `r = alpha * h + n`, where `h = sqrt(P_T) (a_T^T g) a_R` and
//! `g = Phi w`. Targets are Swerling 0: constant magnitude, fresh uniform
//! phase every pulse. Noise is independent across bins and pulses.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::covariance::Covariance;
use crate::error::{Error, Result};
use crate::geometry::{steering_vector, SpatialGrid, SteeringTable, TrisArray, UpaSpec};

/// Wraps an angle into `[0, 2 pi)`.
pub fn wrap_phase(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Diagonal surface configuration `Phi`, stored as its `N` phases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseConfig {
    phases: Vec<f64>,
}

impl PhaseConfig {
    pub fn new(phases: Vec<f64>) -> Self {
        Self { phases: phases.into_iter().map(wrap_phase).collect() }
    }

    pub fn zeros(n: usize) -> Self {
        Self { phases: vec![0.0; n] }
    }

    /// Each phase drawn uniformly from `[0, 2 pi)`.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Self::new((0..n).map(|_| rng.random::<f64>() * TAU).collect())
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }
}

/// `g = Phi w`.
pub fn effective_transmission(phase: &PhaseConfig, w: &[Complex64]) -> Result<Vec<Complex64>> {
    if phase.len() != w.len() {
        return Err(Error::DimensionMismatch { what: "phase configuration", expected: w.len(), got: phase.len() });
    }
    Ok(phase.phases.iter().zip(w).map(|(&p, &wn)| Complex64::cis(p) * wn).collect())
}

/// Channel toward one direction: `h = sqrt(P_T) (a_T^T g) a_R`.
pub fn channel(nu_x: f64, nu_y: f64, g: &[Complex64], rx: &UpaSpec, tx: &UpaSpec, p_t: f64) -> Result<Vec<Complex64>> {
    if g.len() != tx.len() {
        return Err(Error::DimensionMismatch {
            what: "effective transmission vector",
            expected: tx.len(),
            got: g.len(),
        });
    }
    let a_t = steering_vector(tx, nu_x, nu_y);
    let gain = p_t.sqrt() * dot(&a_t, g);
    Ok(steering_vector(rx, nu_x, nu_y).into_iter().map(|a| gain * a).collect())
}

/// Unconjugated inner product `a^T b`.
pub(crate) fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).fold(Complex64::default(), |acc, (x, y)| acc + x * y)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub bin: usize,
    /// Per-element input SNR `|alpha|^2 / sigma^2`, in dB.
    pub snr_db: f64,
}

impl Target {
    pub fn snr_linear(&self) -> f64 {
        10f64.powf(self.snr_db / 10.0)
    }
}

/// Swerling 0 amplitude: `|alpha| = sqrt(snr * sigma^2)`, uniform phase.
pub fn swerling0_amplitude<R: Rng + ?Sized>(target: &Target, noise_power: f64, rng: &mut R) -> Complex64 {
    let magnitude = (target.snr_linear() * noise_power).sqrt();
    Complex64::from_polar(magnitude, rng.random::<f64>() * TAU)
}

/// `n ~ CN(0, Gamma)`.
pub fn draw_noise<R: Rng + ?Sized>(gamma: &Covariance, rng: &mut R) -> Vec<Complex64> {
    gamma.sample(rng)
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub grid: SpatialGrid,
    pub targets: Vec<Target>,
    pub covariance: Covariance,
    pub p_t: f64,
}

impl Scenario {
    pub fn new(grid: SpatialGrid, targets: Vec<Target>, covariance: Covariance, p_t: f64) -> Result<Self> {
        if !(p_t > 0.0 && p_t.is_finite()) {
            return Err(Error::Config(format!("transmit power must be positive, got {p_t}")));
        }
        for (k, t) in targets.iter().enumerate() {
            if t.bin >= grid.len() {
                return Err(Error::IndexOutOfRange { what: "target bin", index: t.bin, limit: grid.len() });
            }
            if !t.snr_db.is_finite() {
                return Err(Error::Config(format!("target {k} has non-finite SNR")));
            }
            if targets[..k].iter().any(|o| o.bin == t.bin) {
                return Err(Error::Config(format!("duplicate target bin {}", t.bin)));
            }
        }
        Ok(Self { grid, targets, covariance, p_t })
    }
}

/// One complex vector per grid bin, stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct BinVectors {
    dim: usize,
    data: Vec<Complex64>,
}

impl BinVectors {
    pub fn zeros(bins: usize, dim: usize) -> Self {
        Self { dim, data: vec![Complex64::default(); bins * dim] }
    }

    pub fn from_vecs(vecs: &[Vec<Complex64>]) -> Result<Self> {
        let dim = vecs.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(dim * vecs.len());
        for v in vecs {
            if v.len() != dim {
                return Err(Error::DimensionMismatch { what: "bin vector", expected: dim, got: v.len() });
            }
            data.extend_from_slice(v);
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bins(&self) -> usize {
        self.data.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn bin(&self, m: usize) -> &[Complex64] {
        &self.data[m * self.dim..(m + 1) * self.dim]
    }

    pub fn bin_mut(&mut self, m: usize) -> &mut [Complex64] {
        &mut self.data[m * self.dim..(m + 1) * self.dim]
    }
}

/// Matched-filter outputs `r_{k,m}` for every bin of one pulse.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub pulse: usize,
    pub returns: BinVectors,
}

/// Surface plus receive array, with steering vectors cached over a grid.
#[derive(Debug, Clone)]
pub struct Radar {
    pub tris: TrisArray,
    pub rx: UpaSpec,
    tx_table: SteeringTable,
    rx_table: SteeringTable,
}

impl Radar {
    pub fn new(tris: TrisArray, rx: UpaSpec, grid: &SpatialGrid) -> Self {
        let tx_table = SteeringTable::new(&tris.spec, grid);
        let rx_table = SteeringTable::new(&rx, grid);
        Self { tris, rx, tx_table, rx_table }
    }

    pub fn tx_steering(&self) -> &SteeringTable {
        &self.tx_table
    }

    pub fn rx_steering(&self) -> &SteeringTable {
        &self.rx_table
    }

    /// `a_T^T g` for every bin.
    pub fn transmit_gains(&self, g: &[Complex64]) -> Result<Vec<Complex64>> {
        if g.len() != self.tx_table.elements() {
            return Err(Error::DimensionMismatch {
                what: "effective transmission vector",
                expected: self.tx_table.elements(),
                got: g.len(),
            });
        }
        Ok((0..self.tx_table.bins()).map(|m| dot(self.tx_table.bin(m), g)).collect())
    }

    /// `h_m` for every bin under configuration `phase`.
    pub fn channels(&self, phase: &PhaseConfig, p_t: f64) -> Result<BinVectors> {
        let g = effective_transmission(phase, &self.tris.w)?;
        let gains = self.transmit_gains(&g)?;
        let mut out = BinVectors::zeros(gains.len(), self.rx.len());
        let amp = p_t.sqrt();
        for (m, gain) in gains.into_iter().enumerate() {
            let scale = amp * gain;
            for (h, a) in out.bin_mut(m).iter_mut().zip(self.rx_table.bin(m)) {
                *h = scale * a;
            }
        }
        Ok(out)
    }
}

/// Draws one pulse given precomputed channels.
///
/// Noise is drawn bin by bin in index order from `noise_rng`; target phases
/// are drawn in target order from `target_rng`.
pub fn synthesize_with_channels<R: Rng + ?Sized, S: Rng + ?Sized>(
    scn: &Scenario,
    channels: &BinVectors,
    pulse: usize,
    noise_rng: &mut R,
    target_rng: &mut S,
) -> Result<Snapshot> {
    let n_rx = scn.covariance.dim();
    if channels.dim() != n_rx || channels.bins() != scn.grid.len() {
        return Err(Error::DimensionMismatch {
            what: "channel table",
            expected: scn.grid.len() * n_rx,
            got: channels.bins() * channels.dim(),
        });
    }
    let mut returns = BinVectors::zeros(scn.grid.len(), n_rx);
    for m in 0..scn.grid.len() {
        scn.covariance.sample_into(noise_rng, returns.bin_mut(m));
    }
    let sigma2 = scn.covariance.noise_power();
    for target in &scn.targets {
        let alpha = swerling0_amplitude(target, sigma2, target_rng);
        for (r, h) in returns.bin_mut(target.bin).iter_mut().zip(channels.bin(target.bin)) {
            *r += alpha * h;
        }
    }
    Ok(Snapshot { pulse, returns })
}

pub fn synthesize_snapshot<R: Rng + ?Sized, S: Rng + ?Sized>(
    scn: &Scenario,
    radar: &Radar,
    phase: &PhaseConfig,
    pulse: usize,
    noise_rng: &mut R,
    target_rng: &mut S,
) -> Result<Snapshot> {
    let channels = radar.channels(phase, scn.p_t)?;
    synthesize_with_channels(scn, &channels, pulse, noise_rng, target_rng)
}
