//! Closed-loop episodes, Monte-Carlo replication and element-count sweeps.
//!
//! One episode runs the SARSA perception-action cycle: transmit under the
//! current configuration, detect, update the agent, then either re-optimise
//! the surface toward the chosen candidate bins (some detection present) or
//! draw a fresh random configuration (nothing detected).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agent::{compute_reward, compute_state, sarsa_update, select_action, top_bins, AgentParams, QTable};
use crate::beamformer::{optimize_phases, BeamProblem, SolverParams};
use crate::covariance::Covariance;
use crate::detector::{threshold, Detector};
use crate::error::{Error, Result};
use crate::geometry::{TrisArray, UpaSpec};
use crate::rng::{RunSeed, RunStreams};
use crate::scene::{synthesize_with_channels, PhaseConfig, Radar, Scenario, Target};
use crate::special::{wilson_interval, Z95};

/// How the surface configuration evolves over an episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    /// Closed loop: SARSA picks the candidate count, the optimiser steers.
    #[default]
    Sarsa,
    /// One random configuration held for the whole episode.
    FixedRandom,
}

#[derive(Debug, Clone)]
pub struct EpisodeConfig {
    pub scenario: Scenario,
    pub radar: Radar,
    pub pulses: usize,
    pub agent: AgentParams,
    pub p_fa: f64,
    pub solver: SolverParams,
    pub policy: Policy,
}

impl EpisodeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pulses == 0 {
            return Err(Error::Config("pulses must be at least 1".into()));
        }
        self.agent.validate()?;
        self.solver.validate()?;
        threshold(self.p_fa)?;
        if self.scenario.targets.len() > self.agent.max_targets {
            return Err(Error::Config(format!(
                "{} targets exceed max_targets = {}",
                self.scenario.targets.len(),
                self.agent.max_targets
            )));
        }
        if self.agent.max_targets > self.scenario.grid.len() {
            return Err(Error::Config("max_targets exceeds the number of grid bins".into()));
        }
        if self.scenario.covariance.dim() != self.radar.rx.len() {
            return Err(Error::DimensionMismatch {
                what: "noise covariance",
                expected: self.radar.rx.len(),
                got: self.scenario.covariance.dim(),
            });
        }
        if self.radar.tx_steering().bins() != self.scenario.grid.len() {
            return Err(Error::Config("radar steering tables built for a different grid".into()));
        }
        Ok(())
    }

    /// Same experiment with a different surface and receiver size.
    pub fn resized(&self, tris: UpaSpec, rx: UpaSpec) -> Result<Self> {
        let covariance = if rx.len() == self.scenario.covariance.dim() {
            self.scenario.covariance.clone()
        } else if let Some(sigma2) = self.scenario.covariance.scaled_identity() {
            Covariance::white(rx.len(), sigma2)?
        } else {
            return Err(Error::Config("cannot resize the receiver with a non-white noise covariance".into()));
        };
        let surface = TrisArray::new(tris, self.radar.tris.feed)?;
        let radar = Radar::new(surface, rx, &self.scenario.grid);
        let scenario = Scenario { covariance, ..self.scenario.clone() };
        Ok(Self { scenario, radar, ..self.clone() })
    }
}

/// Where the configuration used at a pulse came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseSource {
    Random,
    Optimized,
    /// Detections present but no candidate bins chosen; previous phases kept.
    Held,
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseRecord {
    pub pulse: usize,
    pub state: usize,
    pub action: usize,
    pub reward: f64,
    pub next_state: usize,
    pub next_action: usize,
    pub detections: usize,
    pub phase_source: PhaseSource,
    /// Achieved `min_j B_j` over the steered bins, when optimised.
    pub min_gain: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub master_seed: u64,
    pub run: u64,
    /// `target_hits[t][k]`: target `t` declared at pulse `k`.
    pub target_hits: Vec<Vec<bool>>,
    pub trace: Vec<PulseRecord>,
    pub q_table: QTable,
}

pub fn run_episode(cfg: &EpisodeConfig, seed: RunSeed) -> Result<RunResult> {
    cfg.validate()?;
    let scn = &cfg.scenario;
    let t_max = cfg.agent.max_targets;
    let n = cfg.radar.tris.len();
    let mut rng = RunStreams::new(seed);
    let detector = Detector::new(&scn.covariance, threshold(cfg.p_fa)?)?;
    let mut q = QTable::new(cfg.agent)?;

    let mut state = 1.min(t_max);
    let mut action = 1;
    // No statistics exist before the first pulse, so the initial action
    // steers toward nothing.
    let mut theta: Vec<usize> = Vec::new();
    let mut phase = PhaseConfig::random(n, &mut rng.phases);
    let mut source = match cfg.policy {
        Policy::Sarsa => PhaseSource::Random,
        Policy::FixedRandom => PhaseSource::Fixed,
    };
    let mut min_gain = None;

    let mut target_hits = vec![Vec::with_capacity(cfg.pulses); scn.targets.len()];
    let mut trace = Vec::with_capacity(cfg.pulses);

    for k in 0..cfg.pulses {
        let at = |e: Error| Error::Episode { pulse: k, source: Box::new(e) };
        let channels = cfg.radar.channels(&phase, scn.p_t).map_err(at)?;
        let snapshot =
            synthesize_with_channels(scn, &channels, k, &mut rng.noise, &mut rng.target_phase).map_err(at)?;
        let result = detector.detect(&snapshot, &channels).map_err(at)?;

        let next_state = compute_state(&result, t_max);
        let reward = compute_reward(&result, &theta).map_err(at)?;
        let next_action = select_action(&q, next_state, &mut rng.policy).map_err(at)?;
        let next_theta = top_bins(&result.lambda, next_action).map_err(at)?;
        sarsa_update(&mut q, state, action, reward, next_state, next_action).map_err(at)?;

        for (hits, target) in target_hits.iter_mut().zip(&scn.targets) {
            hits.push(result.decisions[target.bin]);
        }
        trace.push(PulseRecord {
            pulse: k,
            state,
            action,
            reward,
            next_state,
            next_action,
            detections: result.count(),
            phase_source: source,
            min_gain,
        });

        state = next_state;
        action = next_action;
        theta = next_theta;

        if cfg.policy == Policy::FixedRandom {
            continue;
        }
        min_gain = None;
        if next_state == 0 {
            phase = PhaseConfig::random(n, &mut rng.phases);
            source = PhaseSource::Random;
        } else if theta.is_empty() {
            source = PhaseSource::Held;
        } else {
            let problem = BeamProblem::new(&cfg.radar.tris.w, cfg.radar.tx_steering(), &theta).map_err(at)?;
            let solution = optimize_phases(&problem, Some(&phase), &cfg.solver, &mut rng.optimizer).map_err(at)?;
            phase = solution.phases;
            min_gain = Some(solution.min_gain);
            source = PhaseSource::Optimized;
        }
    }

    Ok(RunResult { master_seed: seed.master, run: seed.run, target_hits, trace, q_table: q })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetCurve {
    pub target: usize,
    pub bin: usize,
    pub snr_db: f64,
    /// Runs detecting the target at each pulse.
    pub hits: Vec<u64>,
    pub pd: Vec<f64>,
    pub ci_low: Vec<f64>,
    pub ci_high: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardCurve {
    pub mean: Vec<f64>,
    pub ci_low: Vec<f64>,
    pub ci_high: Vec<f64>,
}

/// Across-run statistics; invariant to the order of the runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub runs: usize,
    pub pulses: usize,
    pub targets: Vec<TargetCurve>,
    pub reward: RewardCurve,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub target: usize,
    pub pd: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub hits: u64,
    pub trials: u64,
}

/// Number of trailing pulses averaged for steady-state figures.
pub fn steady_window(pulses: usize) -> usize {
    pulses.div_ceil(4).max(1)
}

impl Aggregate {
    pub fn from_runs(runs: &[RunResult], targets: &[Target]) -> Result<Self> {
        let first = runs.first().ok_or_else(|| Error::Config("no runs to aggregate".into()))?;
        let pulses = first.trace.len();
        if runs.iter().any(|r| r.trace.len() != pulses || r.target_hits.len() != targets.len()) {
            return Err(Error::Config("runs have inconsistent shapes".into()));
        }
        let n = runs.len() as u64;
        let curves = targets
            .iter()
            .enumerate()
            .map(|(t, target)| {
                let hits: Vec<u64> =
                    (0..pulses).map(|k| runs.iter().filter(|r| r.target_hits[t][k]).count() as u64).collect();
                let (ci_low, ci_high) = hits.iter().map(|&h| wilson_interval(h, n, Z95)).unzip();
                TargetCurve {
                    target: t,
                    bin: target.bin,
                    snr_db: target.snr_db,
                    pd: hits.iter().map(|&h| h as f64 / n as f64).collect(),
                    hits,
                    ci_low,
                    ci_high,
                }
            })
            .collect();

        let mut reward = RewardCurve { mean: Vec::new(), ci_low: Vec::new(), ci_high: Vec::new() };
        let mut column = Vec::with_capacity(runs.len());
        for k in 0..pulses {
            column.clear();
            column.extend(runs.iter().map(|r| r.trace[k].reward));
            // Sorting makes the floating-point sums independent of run order.
            column.sort_by(f64::total_cmp);
            let mean = column.iter().sum::<f64>() / n as f64;
            let half = if runs.len() > 1 {
                let var = column.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
                Z95 * (var / n as f64).sqrt()
            } else {
                0.0
            };
            reward.mean.push(mean);
            reward.ci_low.push(mean - half);
            reward.ci_high.push(mean + half);
        }
        Ok(Self { runs: runs.len(), pulses, targets: curves, reward })
    }

    /// Detection probability pooled over the last quarter of the pulses.
    pub fn steady_state(&self) -> Vec<SteadyState> {
        let window = steady_window(self.pulses);
        self.targets
            .iter()
            .map(|c| {
                let hits: u64 = c.hits[self.pulses - window..].iter().sum();
                let trials = (window * self.runs) as u64;
                let (ci_low, ci_high) = wilson_interval(hits, trials, Z95);
                SteadyState { target: c.target, pd: hits as f64 / trials as f64, ci_low, ci_high, hits, trials }
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct MonteCarlo {
    pub runs: Vec<RunResult>,
    pub aggregate: Aggregate,
}

/// Runs `0..runs` under one master seed, in parallel across runs.
pub fn monte_carlo(cfg: &EpisodeConfig, runs: usize, master_seed: u64) -> Result<MonteCarlo> {
    if runs == 0 {
        return Err(Error::Config("runs must be at least 1".into()));
    }
    cfg.validate()?;
    let results = (0..runs as u64)
        .into_par_iter()
        .map(|r| run_episode(cfg, RunSeed::new(master_seed, r)))
        .collect::<Result<Vec<_>>>()?;
    let aggregate = Aggregate::from_runs(&results, &cfg.scenario.targets)?;
    Ok(MonteCarlo { runs: results, aggregate })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub n_elements: usize,
    pub n_x: usize,
    pub n_y: usize,
    pub n_rx: usize,
    pub target: usize,
    pub bin: usize,
    pub snr_db: f64,
    pub pd: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Steady-state detection probability per target versus surface size, for
/// each receiver size. Counts must be perfect squares; duplicates are dropped
/// and the list is visited in ascending order.
pub fn sweep_elements(
    cfg: &EpisodeConfig,
    elements: &[usize],
    receivers: &[usize],
    runs: usize,
    master_seed: u64,
) -> Result<Vec<SweepPoint>> {
    let tris = elements.iter().map(|&n| UpaSpec::square(n)).collect::<Result<Vec<_>>>()?;
    let rx = receivers.iter().map(|&n| UpaSpec::square(n)).collect::<Result<Vec<_>>>()?;
    sweep_layouts(cfg, &tris, &rx, runs, master_seed)
}

/// As [`sweep_elements`] with explicit layouts, ordered by element count
/// and then by `n_x`. Every configuration reuses `master_seed`.
pub fn sweep_layouts(
    cfg: &EpisodeConfig,
    tris: &[UpaSpec],
    receivers: &[UpaSpec],
    runs: usize,
    master_seed: u64,
) -> Result<Vec<SweepPoint>> {
    let dedup = |xs: &[UpaSpec]| {
        let mut v = xs.to_vec();
        v.sort_by(|a, b| (a.len(), a.n_x).cmp(&(b.len(), b.n_x)).then(a.spacing.total_cmp(&b.spacing)));
        v.dedup();
        v
    };
    let tris = dedup(tris);
    let receivers = dedup(receivers);
    if tris.is_empty() || receivers.is_empty() {
        return Err(Error::Config("sweep needs at least one surface and one receiver size".into()));
    }
    let mut points = Vec::new();
    for &rx in &receivers {
        for &t in &tris {
            let sized = cfg.resized(t, rx)?;
            let mc = monte_carlo(&sized, runs, master_seed)?;
            for ss in mc.aggregate.steady_state() {
                let target = &cfg.scenario.targets[ss.target];
                points.push(SweepPoint {
                    n_elements: t.len(),
                    n_x: t.n_x,
                    n_y: t.n_y,
                    n_rx: rx.len(),
                    target: ss.target,
                    bin: target.bin,
                    snr_db: target.snr_db,
                    pd: ss.pd,
                    ci_low: ss.ci_low,
                    ci_high: ss.ci_high,
                });
            }
        }
    }
    Ok(points)
}
