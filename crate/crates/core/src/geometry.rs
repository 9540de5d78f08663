//! Array geometry: the spatial-frequency scan grid, planar-array steering
//! vectors and the near-field feed of the transmissive surface.
//!
//! Directions are expressed as spatial frequencies `(nu_x, nu_y)`, the
//! per-element phase progression (in cycles) of a half-wavelength array.
//! Elements and grid bins are both indexed y-major: `n = q * n_x + p`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const DEFAULT_CARRIER_HZ: f64 = 28.0e9;
pub const DEFAULT_FEED_DISTANCE_WAVELENGTHS: f64 = 20.0;
pub const DEFAULT_SPACING_WAVELENGTHS: f64 = 0.5;

const GRID_EPS: f64 = 1e-12;

/// The `L_x x L_y` lattice of spatial-frequency bins scanned by the radar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    nu_x: Vec<f64>,
    nu_y: Vec<f64>,
}

impl SpatialGrid {
    /// Builds the grid `lo, lo + step, ...` on both axes.
    ///
    /// Every value must lie in `[-0.5, 0.5)`; `0.5` itself aliases `-0.5`
    /// for a half-wavelength array and is rejected.
    pub fn new(l_x: usize, l_y: usize, lo: f64, step: f64) -> Result<Self> {
        if l_x == 0 || l_y == 0 {
            return Err(Error::InvalidGrid("grid needs at least one bin per axis".into()));
        }
        if !lo.is_finite() || !step.is_finite() {
            return Err(Error::InvalidGrid("non-finite grid parameters".into()));
        }
        if l_x.max(l_y) > 1 && step <= 0.0 {
            return Err(Error::InvalidGrid(format!("step must be positive, got {step}")));
        }
        let axis = |len: usize| -> Result<Vec<f64>> {
            (0..len)
                .map(|k| {
                    let v = lo + k as f64 * step;
                    if !(-0.5 - GRID_EPS..0.5 - GRID_EPS).contains(&v) {
                        Err(Error::InvalidGrid(format!("value {v} outside [-0.5, 0.5)")))
                    } else {
                        Ok(v)
                    }
                })
                .collect()
        };
        Ok(Self { nu_x: axis(l_x)?, nu_y: axis(l_y)? })
    }

    /// The 20 x 20 grid over `{-0.5, -0.45, ..., 0.45}`.
    pub fn standard() -> Self {
        Self::new(20, 20, -0.5, 0.05).expect("standard grid is valid")
    }

    pub fn l_x(&self) -> usize {
        self.nu_x.len()
    }

    pub fn l_y(&self) -> usize {
        self.nu_y.len()
    }

    /// Number of bins `M = L_x * L_y`.
    pub fn len(&self) -> usize {
        self.nu_x.len() * self.nu_y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn nu_x(&self) -> &[f64] {
        &self.nu_x
    }

    pub fn nu_y(&self) -> &[f64] {
        &self.nu_y
    }

    pub fn index(&self, i: usize, j: usize) -> Option<usize> {
        (i < self.l_x() && j < self.l_y()).then(|| j * self.l_x() + i)
    }

    /// Inverse of [`SpatialGrid::index`].
    pub fn coords(&self, m: usize) -> Option<(usize, usize)> {
        (m < self.len()).then(|| (m % self.l_x(), m / self.l_x()))
    }

    pub fn frequencies(&self, m: usize) -> Option<(f64, f64)> {
        self.coords(m).map(|(i, j)| (self.nu_x[i], self.nu_y[j]))
    }

    /// Bin closest to the given spatial frequencies.
    pub fn nearest(&self, nu_x: f64, nu_y: f64) -> usize {
        let closest = |axis: &[f64], v: f64| {
            axis.iter()
                .enumerate()
                .min_by(|a, b| (a.1 - v).abs().total_cmp(&(b.1 - v).abs()))
                .map(|(k, _)| k)
                .unwrap_or(0)
        };
        let (i, j) = (closest(&self.nu_x, nu_x), closest(&self.nu_y, nu_y));
        j * self.l_x() + i
    }
}

/// Uniform planar array layout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpaSpec {
    pub n_x: usize,
    pub n_y: usize,
    /// Element pitch in wavelengths.
    pub spacing: f64,
}

impl UpaSpec {
    pub fn new(n_x: usize, n_y: usize) -> Result<Self> {
        Self::with_spacing(n_x, n_y, DEFAULT_SPACING_WAVELENGTHS)
    }

    pub fn with_spacing(n_x: usize, n_y: usize, spacing: f64) -> Result<Self> {
        if n_x == 0 || n_y == 0 {
            return Err(Error::InvalidArray(format!("empty array {n_x}x{n_y}")));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidArray(format!("spacing must be positive, got {spacing}")));
        }
        Ok(Self { n_x, n_y, spacing })
    }

    /// Square array with `n` elements; `n` must be a perfect square.
    pub fn square(n: usize) -> Result<Self> {
        let side = (n as f64).sqrt().round() as usize;
        if side * side != n {
            return Err(Error::InvalidArray(format!("{n} elements is not a perfect square")));
        }
        Self::new(side, side)
    }

    pub fn len(&self) -> usize {
        self.n_x * self.n_y
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Array response toward `(nu_x, nu_y)`; element `(p, q)` carries
/// `exp(j 2 pi (p nu_x + q nu_y))` at half-wavelength pitch.
pub fn steering_vector(spec: &UpaSpec, nu_x: f64, nu_y: f64) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(spec.len());
    steering_into(spec, nu_x, nu_y, &mut out);
    out
}

fn steering_into(spec: &UpaSpec, nu_x: f64, nu_y: f64, out: &mut Vec<Complex64>) {
    let k = 2.0 * PI * 2.0 * spec.spacing;
    for q in 0..spec.n_y {
        for p in 0..spec.n_x {
            out.push(Complex64::cis(k * (p as f64 * nu_x + q as f64 * nu_y)));
        }
    }
}

/// Steering vectors of one array toward every bin of a grid, stored
/// contiguously (bin-major).
#[derive(Debug, Clone)]
pub struct SteeringTable {
    n: usize,
    data: Vec<Complex64>,
}

impl SteeringTable {
    pub fn new(spec: &UpaSpec, grid: &SpatialGrid) -> Self {
        let mut data = Vec::with_capacity(spec.len() * grid.len());
        for m in 0..grid.len() {
            let (nx, ny) = grid.frequencies(m).expect("bin in range");
            steering_into(spec, nx, ny, &mut data);
        }
        Self { n: spec.len(), data }
    }

    pub fn elements(&self) -> usize {
        self.n
    }

    pub fn bins(&self) -> usize {
        self.data.len() / self.n
    }

    pub fn bin(&self, m: usize) -> &[Complex64] {
        &self.data[m * self.n..(m + 1) * self.n]
    }
}

/// Physical placement of the surface relative to its feed antenna.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeedGeometry {
    pub frequency_hz: f64,
    /// Perpendicular feed-to-surface distance, in wavelengths.
    pub distance_wavelengths: f64,
    /// Element side length (square elements), in wavelengths.
    pub element_size_wavelengths: f64,
}

impl Default for FeedGeometry {
    fn default() -> Self {
        Self {
            frequency_hz: DEFAULT_CARRIER_HZ,
            distance_wavelengths: DEFAULT_FEED_DISTANCE_WAVELENGTHS,
            element_size_wavelengths: DEFAULT_SPACING_WAVELENGTHS,
        }
    }
}

/// Transmissive surface: element positions plus the feed-to-element
/// transmission vector `w`.
#[derive(Debug, Clone)]
pub struct TrisArray {
    pub spec: UpaSpec,
    pub feed: FeedGeometry,
    pub wavelength: f64,
    pub element_dx: f64,
    pub element_dy: f64,
    pub feed_distance: f64,
    /// Element centres on the surface plane in metres, centred at the origin.
    pub positions: Vec<(f64, f64)>,
    pub w: Vec<Complex64>,
}

impl TrisArray {
    pub fn new(spec: UpaSpec, feed: FeedGeometry) -> Result<Self> {
        if !(feed.frequency_hz > 0.0 && feed.frequency_hz.is_finite()) {
            return Err(Error::InvalidArray(format!("bad frequency {}", feed.frequency_hz)));
        }
        if !(feed.element_size_wavelengths > 0.0) {
            return Err(Error::InvalidArray("element size must be positive".into()));
        }
        let wavelength = SPEED_OF_LIGHT / feed.frequency_hz;
        let pitch = spec.spacing * wavelength;
        let cx = (spec.n_x as f64 - 1.0) / 2.0;
        let cy = (spec.n_y as f64 - 1.0) / 2.0;
        let positions: Vec<(f64, f64)> = (0..spec.n_y)
            .flat_map(|q| (0..spec.n_x).map(move |p| ((p as f64 - cx) * pitch, (q as f64 - cy) * pitch)))
            .collect();
        let size = feed.element_size_wavelengths * wavelength;
        let feed_distance = feed.distance_wavelengths * wavelength;
        let w = nearfield_w(&positions, wavelength, size, size, feed_distance)?;
        Ok(Self { spec, feed, wavelength, element_dx: size, element_dy: size, feed_distance, positions, w })
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    /// `sum_n |w_n|`; its square bounds the beampattern everywhere.
    pub fn coherent_amplitude(&self) -> f64 {
        self.w.iter().map(|w| w.norm()).sum()
    }
}

/// Near-field feed coefficients from Rayleigh-Sommerfeld diffraction with
/// the feed on the surface's central normal at distance `feed_distance`.
pub fn nearfield_w(
    positions: &[(f64, f64)],
    wavelength: f64,
    dx: f64,
    dy: f64,
    feed_distance: f64,
) -> Result<Vec<Complex64>> {
    if !(feed_distance > 0.0 && feed_distance.is_finite()) {
        return Err(Error::InvalidArray(format!("feed distance must be positive, got {feed_distance}")));
    }
    if !(wavelength > 0.0) {
        return Err(Error::InvalidArray("wavelength must be positive".into()));
    }
    Ok(positions
        .iter()
        .map(|&(x, y)| {
            let d = (feed_distance * feed_distance + x * x + y * y).sqrt();
            let cos_alpha = feed_distance / d;
            let amplitude = dx * dy * cos_alpha / (d * d);
            let kernel = Complex64::new(1.0 / (2.0 * PI * d), -1.0 / wavelength);
            amplitude * kernel * Complex64::cis(2.0 * PI * d / wavelength)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol * b.norm().max(1e-300)
    }

    #[test]
    fn standard_grid_has_400_bins() {
        let g = SpatialGrid::new(20, 20, -0.5, 0.05).unwrap();
        assert_eq!(g.len(), 400);
        assert!((g.nu_x()[19] - 0.45).abs() < 1e-12);
        assert!((g.nu_y()[0] + 0.5).abs() < 1e-15);
        assert!(g.nu_x().windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn single_bin_grid() {
        let g = SpatialGrid::new(1, 1, 0.0, 0.05).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.frequencies(0), Some((0.0, 0.0)));
    }

    #[test]
    fn grid_rejects_half_cycle() {
        assert!(SpatialGrid::new(2, 2, 0.0, 0.5).is_err());
        assert!(SpatialGrid::new(3, 3, -0.5, 0.5).is_err());
        assert!(SpatialGrid::new(2, 1, -0.6, 0.1).is_err());
        assert!(SpatialGrid::new(0, 4, 0.0, 0.1).is_err());
    }

    #[test]
    fn grid_index_roundtrip() {
        let g = SpatialGrid::new(7, 5, -0.5, 0.1).unwrap();
        for m in 0..g.len() {
            let (i, j) = g.coords(m).unwrap();
            assert_eq!(g.index(i, j), Some(m));
        }
        assert_eq!(g.coords(g.len()), None);
        assert_eq!(g.index(7, 0), None);
    }

    #[test]
    fn nearest_bin() {
        let g = SpatialGrid::standard();
        assert_eq!(g.coords(g.nearest(0.0, 0.0)), Some((10, 10)));
        assert_eq!(g.coords(g.nearest(-0.26, 0.31)), Some((5, 16)));
    }

    #[test]
    fn broadside_steering_is_all_ones() {
        let a = steering_vector(&UpaSpec::new(4, 4).unwrap(), 0.0, 0.0);
        assert_eq!(a.len(), 16);
        assert!(a.iter().all(|&z| close(z, Complex64::new(1.0, 0.0), 1e-15)));
    }

    #[test]
    fn endfire_phase() {
        let a = steering_vector(&UpaSpec::new(2, 1).unwrap(), 0.5, 0.0);
        assert!(close(a[0], Complex64::new(1.0, 0.0), 1e-15));
        assert!((a[1] - Complex64::new(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn steering_norm_is_element_count() {
        let a = steering_vector(&UpaSpec::new(3, 3).unwrap(), 0.25, -0.25);
        let norm2: f64 = a.iter().map(|z| z.norm_sqr()).sum();
        assert!((norm2 - 9.0).abs() < 1e-12);
        assert!(a.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn steering_uses_y_major_indexing() {
        let spec = UpaSpec::new(3, 2).unwrap();
        let a = steering_vector(&spec, 0.1, 0.2);
        // n = q * n_x + p; element (p=1, q=1) is n = 4.
        let expected = Complex64::cis(2.0 * PI * (0.1 + 0.2));
        assert!(close(a[4], expected, 1e-14));
    }

    #[test]
    fn on_axis_element_closed_form() {
        let lambda = SPEED_OF_LIGHT / DEFAULT_CARRIER_HZ;
        let w = nearfield_w(&[(0.0, 0.0)], lambda, lambda / 2.0, lambda / 2.0, 20.0 * lambda).unwrap()[0];
        let expected =
            (0.25 / 400.0) * Complex64::new(1.0 / (40.0 * PI * lambda), -1.0 / lambda) * Complex64::cis(40.0 * PI);
        assert!(close(w, expected, 1e-12));
        let mag = (1.0 / 1600.0) * (1.0 / lambda) * ((1.0 / (40.0 * PI)).powi(2) + 1.0).sqrt();
        assert!((w.norm() - mag).abs() < 1e-12 * mag);
    }

    #[test]
    fn nearfield_rejects_bad_distance() {
        assert!(nearfield_w(&[(0.0, 0.0)], 0.01, 0.005, 0.005, 0.0).is_err());
        assert!(nearfield_w(&[(0.0, 0.0)], 0.01, 0.005, 0.005, -1.0).is_err());
    }

    #[test]
    fn equidistant_elements_match() {
        let tris = TrisArray::new(UpaSpec::new(6, 6).unwrap(), FeedGeometry::default()).unwrap();
        // (p, q) = (0, 2) and (2, 0) sit at the same radius.
        let a = tris.w[2 * 6];
        let b = tris.w[2];
        assert!(close(a, b, 1e-12));
        // Corners are equidistant too.
        assert!(close(tris.w[0], tris.w[35], 1e-12));
        assert!(close(tris.w[5], tris.w[30], 1e-12));
    }

    #[test]
    fn lattice_pitch_is_half_wavelength() {
        let tris = TrisArray::new(UpaSpec::new(4, 3).unwrap(), FeedGeometry::default()).unwrap();
        let dx = tris.positions[1].0 - tris.positions[0].0;
        let dy = tris.positions[4].1 - tris.positions[0].1;
        assert!((dx - tris.wavelength / 2.0).abs() < 1e-15);
        assert!((dy - tris.wavelength / 2.0).abs() < 1e-15);
        let (sx, sy) = tris.positions.iter().fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
        assert!(sx.abs() < 1e-15 && sy.abs() < 1e-15);
    }

    #[test]
    fn magnitude_decays_with_radius() {
        let tris = TrisArray::new(UpaSpec::new(9, 9).unwrap(), FeedGeometry::default()).unwrap();
        let mut pairs: Vec<(f64, f64)> =
            tris.positions.iter().zip(&tris.w).map(|(p, w)| ((p.0 * p.0 + p.1 * p.1).sqrt(), w.norm())).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert_eq!(pairs[0].0, 0.0);
        for win in pairs.windows(2) {
            assert!(win[1].1 <= win[0].1 * (1.0 + 1e-12));
        }
        assert!(tris.w.iter().all(|w| w.norm() > 0.0 && w.norm().is_finite()));
    }

    #[test]
    fn square_spec() {
        assert_eq!(UpaSpec::square(144).unwrap().n_x, 12);
        assert!(UpaSpec::square(50).is_err());
        assert!(UpaSpec::new(0, 3).is_err());
        assert!(UpaSpec::with_spacing(2, 2, 0.0).is_err());
    }
}
