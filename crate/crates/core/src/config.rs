//! JSON experiment configuration.
//!
//! Every table rejects unknown keys, and serde's message names the key.
//! Omitted fields take the defaults below.

use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::agent::AgentParams;
use crate::beamformer::SolverParams;
use crate::covariance::Covariance;
use crate::error::{Error, Result};
use crate::geometry::{
    FeedGeometry, SpatialGrid, TrisArray, UpaSpec, DEFAULT_CARRIER_HZ, DEFAULT_FEED_DISTANCE_WAVELENGTHS,
    DEFAULT_SPACING_WAVELENGTHS,
};
use crate::harness::{EpisodeConfig, Policy};
use crate::scene::{Radar, Scenario, Target};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub l_x: usize,
    pub l_y: usize,
    pub lo: f64,
    pub step: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { l_x: 20, l_y: 20, lo: -0.5, step: 0.05 }
    }
}

/// A target placed either by flat bin index or by `(i, j)` grid coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bin: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub i: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j: Option<usize>,
    pub snr_db: f64,
}

impl TargetConfig {
    pub fn resolve(&self, grid: &SpatialGrid) -> Result<Target> {
        let bin = match (self.bin, self.i, self.j) {
            (Some(b), None, None) => b,
            (None, Some(i), Some(j)) => grid.index(i, j).ok_or_else(|| {
                Error::Config(format!("target ({i}, {j}) lies outside the {}x{} grid", grid.l_x(), grid.l_y()))
            })?,
            _ => return Err(Error::Config("a target needs either `bin` or both `i` and `j`".into())),
        };
        Ok(Target { bin, snr_db: self.snr_db })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseConfig {
    /// `power * I`.
    White { power: f64 },
    /// Full Hermitian covariance given as real and imaginary parts, row-major.
    Matrix { re: Vec<Vec<f64>>, im: Vec<Vec<f64>> },
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig::White { power: 1.0 }
    }
}

impl NoiseConfig {
    pub fn build(&self, n_rx: usize) -> Result<Covariance> {
        match self {
            NoiseConfig::White { power } => Covariance::white(n_rx, *power),
            NoiseConfig::Matrix { re, im } => {
                let rows_ok = re.len() == n_rx && im.len() == n_rx && re.iter().chain(im).all(|row| row.len() == n_rx);
                if !rows_ok {
                    return Err(Error::Config(format!(
                        "noise matrix must be {n_rx}x{n_rx} to match the receive array"
                    )));
                }
                let m = DMatrix::from_fn(n_rx, n_rx, |r, c| Complex64::new(re[r][c], im[r][c]));
                Covariance::from_matrix(m)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayConfig {
    pub n_x: usize,
    pub n_y: usize,
}

impl ArrayConfig {
    pub fn spec(&self) -> Result<UpaSpec> {
        UpaSpec::with_spacing(self.n_x, self.n_y, DEFAULT_SPACING_WAVELENGTHS)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Free text; not interpreted.
    #[serde(skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub grid: GridConfig,
    pub targets: Vec<TargetConfig>,
    pub noise: NoiseConfig,
    pub p_t: f64,
    pub tris: ArrayConfig,
    pub rx: ArrayConfig,
    pub frequency_hz: f64,
    pub d_l_wavelengths: f64,
    pub pulses: usize,
    pub p_fa: f64,
    pub agent: AgentParams,
    pub solver: SolverParams,
    pub policy: Policy,
    pub runs: usize,
    pub seed: Option<u64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            description: String::new(),
            grid: GridConfig::default(),
            targets: Vec::new(),
            noise: NoiseConfig::default(),
            p_t: 1.0,
            tris: ArrayConfig { n_x: 8, n_y: 8 },
            rx: ArrayConfig { n_x: 4, n_y: 4 },
            frequency_hz: DEFAULT_CARRIER_HZ,
            d_l_wavelengths: DEFAULT_FEED_DISTANCE_WAVELENGTHS,
            pulses: 200,
            p_fa: 1e-4,
            agent: AgentParams::default(),
            solver: SolverParams::default(),
            policy: Policy::Sarsa,
            runs: 100,
            seed: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serialises")
    }

    pub fn feed(&self) -> FeedGeometry {
        FeedGeometry {
            frequency_hz: self.frequency_hz,
            distance_wavelengths: self.d_l_wavelengths,
            element_size_wavelengths: DEFAULT_SPACING_WAVELENGTHS,
        }
    }

    pub fn spatial_grid(&self) -> Result<SpatialGrid> {
        SpatialGrid::new(self.grid.l_x, self.grid.l_y, self.grid.lo, self.grid.step)
    }

    pub fn scenario(&self) -> Result<Scenario> {
        let grid = self.spatial_grid()?;
        let targets = self.targets.iter().map(|t| t.resolve(&grid)).collect::<Result<Vec<_>>>()?;
        let covariance = self.noise.build(self.rx.spec()?.len())?;
        Scenario::new(grid, targets, covariance, self.p_t)
    }

    pub fn radar(&self, grid: &SpatialGrid) -> Result<Radar> {
        if !(self.d_l_wavelengths > 0.0) {
            return Err(Error::Config("d_l_wavelengths must be positive".into()));
        }
        let tris = TrisArray::new(self.tris.spec()?, self.feed())?;
        Ok(Radar::new(tris, self.rx.spec()?, grid))
    }

    /// Validated episode configuration.
    pub fn episode(&self) -> Result<EpisodeConfig> {
        if self.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        let scenario = self.scenario()?;
        let radar = self.radar(&scenario.grid)?;
        let cfg = EpisodeConfig {
            scenario,
            radar,
            pulses: self.pulses,
            agent: self.agent,
            p_fa: self.p_fa,
            solver: self.solver,
            policy: self.policy,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = ExperimentConfig::from_json(r#"{"targets": [{"i": 3, "j": 4, "snr_db": 5}]}"#).unwrap();
        let ep = cfg.episode().unwrap();
        assert_eq!(ep.scenario.targets, vec![Target { bin: 83, snr_db: 5.0 }]);
        assert_eq!(ep.radar.tris.len(), 64);
        assert_eq!(ep.pulses, 200);
        assert_eq!(ep.p_fa, 1e-4);
        assert_eq!(ep.agent.max_targets, 10);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = ExperimentConfig::from_json(r#"{"pulsess": 3}"#).unwrap_err().to_string();
        assert!(err.contains("pulsess"), "{err}");
        let err = ExperimentConfig::from_json(r#"{"agent": {"gamma": 0.5}}"#).unwrap_err().to_string();
        assert!(err.contains("gamma"), "{err}");
    }

    #[test]
    fn target_placement_rules() {
        let grid = SpatialGrid::standard();
        let both = TargetConfig { bin: Some(1), i: Some(0), j: Some(0), snr_db: 0.0 };
        assert!(both.resolve(&grid).is_err());
        let half = TargetConfig { bin: None, i: Some(0), j: None, snr_db: 0.0 };
        assert!(half.resolve(&grid).is_err());
        let outside = TargetConfig { bin: None, i: Some(20), j: Some(0), snr_db: 0.0 };
        assert!(outside.resolve(&grid).is_err());
    }

    #[test]
    fn matrix_noise_round_trip() {
        let text = r#"{
            "rx": {"n_x": 2, "n_y": 1},
            "noise": {"type": "matrix", "re": [[2, 0.5], [0.5, 1]], "im": [[0, 0.3], [-0.3, 0]]}
        }"#;
        let cfg = ExperimentConfig::from_json(text).unwrap();
        let scn = cfg.scenario().unwrap();
        assert_eq!(scn.covariance.dim(), 2);
        assert!((scn.covariance.noise_power() - 1.5).abs() < 1e-15);
        assert_eq!(ExperimentConfig::from_json(&cfg.to_json()).unwrap(), cfg);
        let bad = text.replace("[0.5, 1]]", "[0.5]]");
        assert!(ExperimentConfig::from_json(&bad).unwrap().scenario().is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        for text in [
            r#"{"pulses": 0}"#,
            r#"{"runs": 0}"#,
            r#"{"p_fa": 1.5}"#,
            r#"{"grid": {"l_x": 2, "l_y": 2, "lo": 0.0, "step": 0.5}}"#,
            r#"{"targets": [{"bin": 1, "snr_db": 0}, {"bin": 1, "snr_db": 3}]}"#,
        ] {
            let cfg = ExperimentConfig::from_json(text).unwrap();
            assert!(cfg.episode().is_err(), "{text}");
        }
    }
}
