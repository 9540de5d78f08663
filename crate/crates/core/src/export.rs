//! Result documents and flat CSV tables for plotting.
//!
//! Column layouts (one header row, comma separated):
//!
//! | file                  | columns |
//! |-----------------------|---------|
//! | `pd_vs_pulse.csv`     | `target,bin,snr_db,pulse,pd,ci_low,ci_high,hits,runs` |
//! | `reward_vs_pulse.csv` | `pulse,mean,ci_low,ci_high` |
//! | `pd_vs_elements.csv`  | `n_elements,n_x,n_y,n_rx,target,bin,snr_db,pd,ci_low,ci_high` |
//! | `beampattern.csv`     | `i,j,nu_x,nu_y,gain,gain_db` |
//! | `scene.csv`           | `target,bin,i,j,nu_x,nu_y,snr_db` |
//! | `geometry.csv`        | `index,p,q,x_m,y_m,w_re,w_im,w_abs` |
//! | `qtables.csv`         | `run,s,a,q` |
//!
//! Pulses, bins and grid coordinates are zero-based.

use serde::{Deserialize, Serialize};

use crate::beamformer::beampattern_map;
use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::geometry::{SpatialGrid, SteeringTable, TrisArray};
use crate::harness::{Aggregate, RunResult, SteadyState, SweepPoint};
use crate::scene::{effective_transmission, PhaseConfig, Scenario};

pub const PD_VS_PULSE: &str = "pd_vs_pulse.csv";
pub const REWARD_VS_PULSE: &str = "reward_vs_pulse.csv";
pub const PD_VS_ELEMENTS: &str = "pd_vs_elements.csv";
pub const BEAMPATTERN: &str = "beampattern.csv";
pub const SCENE: &str = "scene.csv";
pub const GEOMETRY: &str = "geometry.csv";
pub const QTABLES: &str = "qtables.csv";
pub const RESULTS: &str = "results.json";

/// Wall-clock information; left out when byte-stable output is wanted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub version: String,
    pub started_unix_s: u64,
    pub elapsed_s: f64,
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Results {
    pub config: ExperimentConfig,
    pub master_seed: u64,
    pub runs: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aggregate: Option<Aggregate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steady_state: Option<Vec<SteadyState>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Vec<SweepPoint>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub meta: Option<Meta>,
}

impl Results {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("results serialise");
        s.push('\n');
        s
    }
}

fn table<F>(header: &[&str], fill: F) -> Result<String>
where
    F: FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Config(format!("csv: {e}"));
    w.write_record(header).map_err(io)?;
    fill(&mut w).map_err(io)?;
    let bytes = w.into_inner().map_err(|e| Error::Config(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn pd_vs_pulse_csv(agg: &Aggregate) -> Result<String> {
    table(&["target", "bin", "snr_db", "pulse", "pd", "ci_low", "ci_high", "hits", "runs"], |w| {
        for c in &agg.targets {
            for k in 0..agg.pulses {
                w.serialize((c.target, c.bin, c.snr_db, k, c.pd[k], c.ci_low[k], c.ci_high[k], c.hits[k], agg.runs))?;
            }
        }
        Ok(())
    })
}

pub fn reward_vs_pulse_csv(agg: &Aggregate) -> Result<String> {
    table(&["pulse", "mean", "ci_low", "ci_high"], |w| {
        for k in 0..agg.pulses {
            w.serialize((k, agg.reward.mean[k], agg.reward.ci_low[k], agg.reward.ci_high[k]))?;
        }
        Ok(())
    })
}

pub fn pd_vs_elements_csv(points: &[SweepPoint]) -> Result<String> {
    table(&["n_elements", "n_x", "n_y", "n_rx", "target", "bin", "snr_db", "pd", "ci_low", "ci_high"], |w| {
        for p in points {
            w.serialize((p.n_elements, p.n_x, p.n_y, p.n_rx, p.target, p.bin, p.snr_db, p.pd, p.ci_low, p.ci_high))?;
        }
        Ok(())
    })
}

/// Beampattern `|a^T Phi w|^2` over every grid bin, in dB relative to 1.
pub fn beampattern_csv(tris: &TrisArray, phase: &PhaseConfig, grid: &SpatialGrid) -> Result<String> {
    let g = effective_transmission(phase, &tris.w)?;
    let table_ = SteeringTable::new(&tris.spec, grid);
    let gains = beampattern_map(&g, &table_);
    table(&["i", "j", "nu_x", "nu_y", "gain", "gain_db"], |w| {
        for (m, &b) in gains.iter().enumerate() {
            let (i, j) = grid.coords(m).expect("bin in range");
            let db = if b > 0.0 { 10.0 * b.log10() } else { f64::NEG_INFINITY };
            w.serialize((i, j, grid.nu_x()[i], grid.nu_y()[j], b, db))?;
        }
        Ok(())
    })
}

pub fn scene_csv(scn: &Scenario) -> Result<String> {
    table(&["target", "bin", "i", "j", "nu_x", "nu_y", "snr_db"], |w| {
        for (t, target) in scn.targets.iter().enumerate() {
            let (i, j) = scn.grid.coords(target.bin).expect("validated bin");
            w.serialize((t, target.bin, i, j, scn.grid.nu_x()[i], scn.grid.nu_y()[j], target.snr_db))?;
        }
        Ok(())
    })
}

pub fn geometry_csv(tris: &TrisArray) -> Result<String> {
    table(&["index", "p", "q", "x_m", "y_m", "w_re", "w_im", "w_abs"], |w| {
        for (n, ((x, y), wn)) in tris.positions.iter().zip(&tris.w).enumerate() {
            let (p, q) = (n % tris.spec.n_x, n / tris.spec.n_x);
            w.serialize((n, p, q, x, y, wn.re, wn.im, wn.norm()))?;
        }
        Ok(())
    })
}

/// Final Q-table of every run, `(T+1)^2` rows per run.
pub fn qtables_csv(runs: &[RunResult]) -> Result<String> {
    table(&["run", "s", "a", "q"], |w| {
        for r in runs {
            let side = r.q_table.side();
            for s in 0..side {
                for a in 0..side {
                    w.serialize((r.run, s, a, r.q_table.get(s, a)))?;
                }
            }
        }
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beamformer::align_single_bin;
    use crate::geometry::{FeedGeometry, UpaSpec};

    fn rows(csv: &str) -> Vec<Vec<String>> {
        csv.lines().map(|l| l.split(',').map(str::to_owned).collect()).collect()
    }

    #[test]
    fn beampattern_peaks_at_aligned_bin() {
        let grid = SpatialGrid::standard();
        let tris = TrisArray::new(UpaSpec::new(6, 6).unwrap(), FeedGeometry::default()).unwrap();
        let (nx, ny) = grid.frequencies(grid.index(5, 5).unwrap()).unwrap();
        let phase = align_single_bin(&tris.w, nx, ny, &tris.spec);
        let out = rows(&beampattern_csv(&tris, &phase, &grid).unwrap());
        assert_eq!(out[0], ["i", "j", "nu_x", "nu_y", "gain", "gain_db"]);
        assert_eq!(out.len(), 401);
        let best = out[1..]
            .iter()
            .max_by(|a, b| a[4].parse::<f64>().unwrap().total_cmp(&b[4].parse::<f64>().unwrap()))
            .unwrap();
        assert_eq!((best[0].as_str(), best[1].as_str()), ("5", "5"));
    }

    #[test]
    fn geometry_rows_follow_element_order() {
        let tris = TrisArray::new(UpaSpec::new(3, 2).unwrap(), FeedGeometry::default()).unwrap();
        let out = rows(&geometry_csv(&tris).unwrap());
        assert_eq!(out.len(), 7);
        assert_eq!(out[5][..3], ["4", "1", "1"]);
    }
}
