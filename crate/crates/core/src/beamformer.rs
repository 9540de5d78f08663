//! Transmit beampattern of the surface and max-min phase optimisation.
//!
//! The beampattern toward bin `j` is `B_j = |a_j^T g|^2` with `g = Phi w`.
//! Maximising `min_j B_j` over unit-modulus phases is non-convex; it is
//! solved here by backtracking gradient ascent on the soft-min surrogate
//!
//! ```text
//! f_beta(phi) = -(1/beta) ln sum_j exp(-beta B_j(phi))
//! ```
//!
//! which never exceeds `min_j B_j` and is nondecreasing in `beta`, so the
//! sharpness can be annealed upward without ever lowering the objective.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{steering_vector, SteeringTable, UpaSpec};
use crate::scene::{dot, wrap_phase, PhaseConfig};

/// `B = |a_T^T g|^2` toward `(nu_x, nu_y)`.
pub fn beampattern(g: &[Complex64], nu_x: f64, nu_y: f64, spec: &UpaSpec) -> f64 {
    dot(&steering_vector(spec, nu_x, nu_y), g).norm_sqr()
}

/// Beampattern over every bin of a cached steering table.
pub fn beampattern_map(g: &[Complex64], steering: &SteeringTable) -> Vec<f64> {
    (0..steering.bins()).map(|m| dot(steering.bin(m), g).norm_sqr()).collect()
}

/// Closed-form optimum for a single direction:
/// `phi_n = -arg(w_n) - arg(a_n)`, which makes every term of `a^T g` real
/// and positive.
pub fn align_single_bin(w: &[Complex64], nu_x: f64, nu_y: f64, spec: &UpaSpec) -> PhaseConfig {
    let a = steering_vector(spec, nu_x, nu_y);
    PhaseConfig::new(a.iter().zip(w).map(|(an, wn)| -(an * wn).arg()).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverParams {
    /// Initial sharpness is `beta_scale / scale`, where `scale` is the
    /// coherent bound divided by the number of selected bins.
    pub beta_scale: f64,
    /// Sharpness ceiling, also relative to `scale`.
    pub beta_cap: f64,
    /// Iterations per sharpness level before it is doubled.
    pub anneal_every: usize,
    pub max_iters: usize,
    /// Relative improvement below which a sharpness level counts as converged.
    pub tol: f64,
    /// Random starts in addition to the warm start.
    pub restarts: usize,
    pub shrink: f64,
    pub sufficient_increase: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            beta_scale: 50.0,
            beta_cap: 1e4,
            anneal_every: 50,
            max_iters: 500,
            tol: 1e-8,
            restarts: 4,
            shrink: 0.5,
            sufficient_increase: 1e-4,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("beta_scale", self.beta_scale),
            ("beta_cap", self.beta_cap),
            ("tol", self.tol),
            ("sufficient_increase", self.sufficient_increase),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("solver.{name} must be positive")));
            }
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::Config("solver.shrink must lie in (0, 1)".into()));
        }
        if self.anneal_every == 0 || self.max_iters == 0 {
            return Err(Error::Config("solver iteration counts must be positive".into()));
        }
        if self.beta_cap < self.beta_scale {
            return Err(Error::Config("solver.beta_cap must be at least beta_scale".into()));
        }
        Ok(())
    }
}

/// Max-min beampattern problem over a set of selected directions.
#[derive(Debug, Clone)]
pub struct BeamProblem {
    n: usize,
    bins: Vec<usize>,
    /// Row-major `|Theta| x N`, entry `a_{j,n} w_n`.
    coeffs: Vec<Complex64>,
    bound: f64,
}

impl BeamProblem {
    pub fn new(w: &[Complex64], steering: &SteeringTable, bins: &[usize]) -> Result<Self> {
        let rows = bins
            .iter()
            .map(|&m| {
                if m >= steering.bins() {
                    Err(Error::IndexOutOfRange { what: "selected bin", index: m, limit: steering.bins() })
                } else {
                    Ok(steering.bin(m).to_vec())
                }
            })
            .collect::<Result<Vec<_>>>()?;
        for (k, m) in bins.iter().enumerate() {
            if bins[..k].contains(m) {
                return Err(Error::Config(format!("bin {m} selected twice")));
            }
        }
        let mut p = Self::from_rows(w, &rows)?;
        p.bins = bins.to_vec();
        Ok(p)
    }

    /// Problem over explicit steering rows; bins are numbered `0..rows.len()`.
    pub fn from_rows(w: &[Complex64], rows: &[Vec<Complex64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptySelection);
        }
        let n = w.len();
        let mut coeffs = Vec::with_capacity(rows.len() * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch { what: "steering row", expected: n, got: row.len() });
            }
            coeffs.extend(row.iter().zip(w).map(|(a, wn)| a * wn));
        }
        let amp: f64 = w.iter().map(|z| z.norm()).sum();
        Ok(Self { n, bins: (0..rows.len()).collect(), coeffs, bound: amp * amp })
    }

    pub fn bins(&self) -> &[usize] {
        &self.bins
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn elements(&self) -> usize {
        self.n
    }

    /// `(sum_n |w_n|)^2`, an upper bound on every `B_j`.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    fn row(&self, j: usize) -> &[Complex64] {
        &self.coeffs[j * self.n..(j + 1) * self.n]
    }

    fn sums(&self, z: &[Complex64]) -> Vec<Complex64> {
        (0..self.len()).map(|j| dot(self.row(j), z)).collect()
    }

    pub fn gains(&self, phases: &[f64]) -> Vec<f64> {
        let z = phasors(phases);
        self.sums(&z).iter().map(|s| s.norm_sqr()).collect()
    }

    pub fn min_gain(&self, phases: &[f64]) -> f64 {
        self.gains(phases).into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn soft_min(&self, phases: &[f64], beta: f64) -> f64 {
        soft_min(&self.gains(phases), beta).0
    }

    /// Value of `f_beta` and its gradient with respect to the phases.
    pub fn soft_min_grad(&self, phases: &[f64], beta: f64, grad: &mut [f64]) -> f64 {
        let z = phasors(phases);
        let sums = self.sums(&z);
        let gains: Vec<f64> = sums.iter().map(|s| s.norm_sqr()).collect();
        let (value, weights) = soft_min(&gains, beta);
        // dB_j/dphi_n = -2 Im(conj(s_j) c_jn z_n)
        let mut acc = vec![Complex64::default(); self.n];
        for (j, (s, pi)) in sums.iter().zip(&weights).enumerate() {
            let wj = s.conj() * *pi;
            for (a, c) in acc.iter_mut().zip(self.row(j)) {
                *a += wj * c;
            }
        }
        for ((g, a), zn) in grad.iter_mut().zip(&acc).zip(&z) {
            *g = -2.0 * (a * zn).im;
        }
        value
    }

    /// Optimum for the single-direction case.
    fn aligned(&self) -> Vec<f64> {
        self.row(0).iter().map(|c| wrap_phase(-c.arg())).collect()
    }
}

fn phasors(phases: &[f64]) -> Vec<Complex64> {
    phases.iter().map(|&p| Complex64::cis(p)).collect()
}

// Returns the soft-min and the softmax weights of -beta * gains.
fn soft_min(gains: &[f64], beta: f64) -> (f64, Vec<f64>) {
    let lo = gains.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut weights: Vec<f64> = gains.iter().map(|&b| (-beta * (b - lo)).exp()).collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    (lo - total.ln() / beta, weights)
}

/// Outcome of one ascent from one start.
#[derive(Debug, Clone)]
pub struct Ascent {
    pub phases: Vec<f64>,
    pub beta: f64,
    pub iterations: usize,
    /// Smoothed objective after every accepted step or sharpness increase.
    pub trace: Vec<f64>,
}

/// Backtracking gradient ascent on `f_beta` with annealed sharpness.
pub fn ascend(problem: &BeamProblem, start: &[f64], params: &SolverParams) -> Ascent {
    let n = problem.elements();
    let scale = problem.bound() / problem.len() as f64;
    let beta_cap = params.beta_cap / scale;
    let mut beta = params.beta_scale / scale;
    let mut phases = start.to_vec();
    let mut grad = vec![0.0; n];
    let mut cand = vec![0.0; n];
    let mut f = problem.soft_min_grad(&phases, beta, &mut grad);
    let mut trace = vec![f];
    let mut step = initial_step(&grad);
    let mut stage = 0;
    let mut iterations = 0;

    while iterations < params.max_iters {
        iterations += 1;
        stage += 1;
        let g2: f64 = grad.iter().map(|g| g * g).sum();
        let mut improvement = 0.0;
        let mut accepted = false;
        if g2 > 0.0 {
            loop {
                for ((c, p), g) in cand.iter_mut().zip(&phases).zip(&grad) {
                    *c = p + step * g;
                }
                let fc = problem.soft_min(&cand, beta);
                if fc >= f + params.sufficient_increase * step * g2 {
                    improvement = (fc - f) / f.abs().max(scale * 1e-12);
                    std::mem::swap(&mut phases, &mut cand);
                    f = problem.soft_min_grad(&phases, beta, &mut grad);
                    trace.push(f);
                    accepted = true;
                    step /= params.shrink;
                    break;
                }
                step *= params.shrink;
                if step * g2.sqrt() < 1e-15 {
                    break;
                }
            }
        }
        let converged = !accepted || improvement < params.tol;
        if converged || stage >= params.anneal_every {
            if beta >= beta_cap {
                if converged {
                    break;
                }
            } else {
                beta = (2.0 * beta).min(beta_cap);
                f = problem.soft_min_grad(&phases, beta, &mut grad);
                trace.push(f);
                step = step.max(initial_step(&grad));
                stage = 0;
            }
        }
    }
    phases.iter_mut().for_each(|p| *p = wrap_phase(*p));
    Ascent { phases, beta, iterations, trace }
}

// First trial step moves the steepest phase by 0.5 rad.
fn initial_step(grad: &[f64]) -> f64 {
    let gmax = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    if gmax > 0.0 {
        0.5 / gmax
    } else {
        1.0
    }
}

#[derive(Debug, Clone)]
pub struct BeamSolution {
    pub phases: PhaseConfig,
    /// True `min_j B_j` at the returned phases.
    pub min_gain: f64,
    pub gains: Vec<f64>,
    /// Index of the winning start: 0 is the warm start when one was given.
    pub start: usize,
}

/// Maximises the minimum beampattern gain over the problem's bins.
///
/// Starts are the optional warm start followed by `params.restarts`
/// uniformly random configurations drawn from `rng`. The winner has the
/// largest true minimum gain; ties go to the earlier start.
pub fn optimize_phases<R: Rng + ?Sized>(
    problem: &BeamProblem,
    init: Option<&PhaseConfig>,
    params: &SolverParams,
    rng: &mut R,
) -> Result<BeamSolution> {
    if problem.is_empty() {
        return Err(Error::EmptySelection);
    }
    let n = problem.elements();
    if let Some(p) = init {
        if p.len() != n {
            return Err(Error::DimensionMismatch { what: "warm start", expected: n, got: p.len() });
        }
    }
    if problem.len() == 1 {
        let phases = PhaseConfig::new(problem.aligned());
        let gains = problem.gains(phases.phases());
        return Ok(BeamSolution { min_gain: gains[0], gains, phases, start: 0 });
    }

    let mut starts: Vec<Vec<f64>> = Vec::with_capacity(params.restarts + 1);
    if let Some(p) = init {
        starts.push(p.phases().to_vec());
    }
    for _ in 0..params.restarts {
        starts.push(PhaseConfig::random(n, rng).phases().to_vec());
    }

    let mut best: Option<BeamSolution> = None;
    for (k, start) in starts.iter().enumerate() {
        let run = ascend(problem, start, params);
        let mut phases = PhaseConfig::new(run.phases);
        let mut gains = problem.gains(phases.phases());
        let mut min_gain = gains.iter().cloned().fold(f64::INFINITY, f64::min);
        // Never hand back something worse than the warm start itself.
        if init.is_some() && k == 0 {
            let start_gains = problem.gains(start);
            let start_min = start_gains.iter().cloned().fold(f64::INFINITY, f64::min);
            if start_min > min_gain {
                phases = PhaseConfig::new(start.clone());
                gains = start_gains;
                min_gain = start_min;
            }
        }
        if best.as_ref().is_none_or(|b| min_gain > b.min_gain) {
            best = Some(BeamSolution { phases, min_gain, gains, start: k });
        }
    }
    Ok(best.expect("at least one start"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{FeedGeometry, TrisArray};
    use crate::scene::effective_transmission;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tris(n: usize) -> TrisArray {
        TrisArray::new(UpaSpec::new(n, n).unwrap(), FeedGeometry::default()).unwrap()
    }

    #[test]
    fn broadside_alignment_cancels_feed_phase() {
        let t = tris(4);
        let p = align_single_bin(&t.w, 0.0, 0.0, &t.spec);
        for (phi, w) in p.phases().iter().zip(&t.w) {
            assert!((Complex64::cis(*phi) - Complex64::cis(-w.arg())).norm() < 1e-12);
        }
    }

    #[test]
    fn aligned_gain_hits_bound() {
        let t = tris(5);
        let bound = t.coherent_amplitude().powi(2);
        for (nx, ny) in [(0.0, 0.0), (0.25, 0.1), (-0.45, 0.3)] {
            let p = align_single_bin(&t.w, nx, ny, &t.spec);
            let g = effective_transmission(&p, &t.w).unwrap();
            let b = beampattern(&g, nx, ny, &t.spec);
            assert!((b / bound - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn random_phases_stay_below_bound() {
        let t = tris(4);
        let bound = t.coherent_amplitude().powi(2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let g = effective_transmission(&PhaseConfig::random(16, &mut rng), &t.w).unwrap();
            let b = beampattern(&g, rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5, &t.spec);
            assert!(b >= 0.0 && b <= bound * (1.0 + 1e-12));
        }
    }

    #[test]
    fn soft_min_brackets_min() {
        let gains = [1.0, 2.0, 5.0];
        for beta in [0.1, 1.0, 10.0, 1000.0] {
            let (f, w) = soft_min(&gains, beta);
            assert!(f <= 1.0 + 1e-15);
            assert!(f >= 1.0 - (3f64).ln() / beta - 1e-15);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
        assert!(soft_min(&gains, 1.0).0 <= soft_min(&gains, 2.0).0);
    }

    #[test]
    fn empty_problem_rejected() {
        let t = tris(2);
        assert!(matches!(BeamProblem::from_rows(&t.w, &[]), Err(Error::EmptySelection)));
        let grid = crate::geometry::SpatialGrid::standard();
        let table = SteeringTable::new(&t.spec, &grid);
        assert!(BeamProblem::new(&t.w, &table, &[3, 3]).is_err());
        assert!(BeamProblem::new(&t.w, &table, &[400]).is_err());
    }

    #[test]
    fn single_bin_dispatches_to_closed_form() {
        let t = tris(4);
        let grid = crate::geometry::SpatialGrid::standard();
        let table = SteeringTable::new(&t.spec, &grid);
        let p = BeamProblem::new(&t.w, &table, &[123]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let sol = optimize_phases(&p, None, &SolverParams::default(), &mut rng).unwrap();
        assert!((sol.min_gain / p.bound() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn warm_start_never_worsens() {
        let t = tris(4);
        let grid = crate::geometry::SpatialGrid::standard();
        let table = SteeringTable::new(&t.spec, &grid);
        let p = BeamProblem::new(&t.w, &table, &[12, 250, 333]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let init = PhaseConfig::random(16, &mut rng);
        let params = SolverParams { restarts: 0, ..Default::default() };
        let sol = optimize_phases(&p, Some(&init), &params, &mut rng).unwrap();
        assert!(sol.min_gain >= p.min_gain(init.phases()));
        assert!(sol.min_gain <= p.bound() * (1.0 + 1e-12));
        assert!(sol.phases.phases().iter().all(|x| (0.0..std::f64::consts::TAU).contains(x)));
    }

    #[test]
    fn ascent_trace_is_monotone() {
        let t = tris(4);
        let grid = crate::geometry::SpatialGrid::standard();
        let table = SteeringTable::new(&t.spec, &grid);
        let p = BeamProblem::new(&t.w, &table, &[40, 90, 210, 380]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..5 {
            let start = PhaseConfig::random(16, &mut rng);
            let run = ascend(&p, start.phases(), &SolverParams::default());
            for w in run.trace.windows(2) {
                assert!(w[1] >= w[0], "{} -> {}", w[0], w[1]);
            }
            assert!(run.iterations <= SolverParams::default().max_iters);
        }
    }

    #[test]
    fn solver_params_validation() {
        assert!(SolverParams::default().validate().is_ok());
        assert!(SolverParams { shrink: 1.0, ..Default::default() }.validate().is_err());
        assert!(SolverParams { tol: 0.0, ..Default::default() }.validate().is_err());
        assert!(SolverParams { max_iters: 0, ..Default::default() }.validate().is_err());
    }
}
