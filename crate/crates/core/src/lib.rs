//! Cognitive radar with a transmissive reconfigurable surface.
//!
//! A SARSA agent chooses how many candidate directions to illuminate; the
//! surface phases are then optimised to maximise the weakest beampattern
//! gain over those directions, and an adaptive matched filter declares
//! detections at a fixed false-alarm rate.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agent;
pub mod beamformer;
pub mod config;
pub mod covariance;
pub mod detector;
pub mod error;
pub mod export;
pub mod geometry;
pub mod harness;
pub mod rng;
pub mod scene;
pub mod special;

pub use agent::{AgentParams, QTable};
pub use beamformer::{BeamProblem, BeamSolution, SolverParams};
pub use config::ExperimentConfig;
pub use covariance::Covariance;
pub use detector::{DetectionResult, Detector};
pub use error::{Error, Result};
pub use geometry::{FeedGeometry, SpatialGrid, SteeringTable, TrisArray, UpaSpec};
pub use harness::{Aggregate, EpisodeConfig, MonteCarlo, Policy, RunResult};
pub use rng::RunSeed;
pub use scene::{PhaseConfig, Radar, Scenario, Snapshot, Target};
