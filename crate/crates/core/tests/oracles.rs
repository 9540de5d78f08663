mod common;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tris_core::beamformer::{beampattern, beampattern_map, optimize_phases, BeamProblem, SolverParams};
use tris_core::geometry::{steering_vector, FeedGeometry, SpatialGrid, SteeringTable, TrisArray, UpaSpec};
use tris_core::scene::{effective_transmission, PhaseConfig, Radar};
use tris_core::special::marcum_q1;

use common::*;

#[test]
fn feed_vector_matches_term_by_term_evaluation() {
    let feed = FeedGeometry::default();
    let tris = TrisArray::new(UpaSpec::new(8, 8).unwrap(), feed).unwrap();
    let lambda = 299_792_458.0 / 28e9;
    for q in 0..8 {
        for p in 0..8 {
            let x = (p as f64 - 3.5) * lambda / 2.0;
            let y = (q as f64 - 3.5) * lambda / 2.0;
            let expect = feed_coefficient(x, y, lambda, lambda / 2.0, 20.0 * lambda);
            let got = tris.w[q * 8 + p];
            assert!((got - expect).norm() <= 1e-12 * expect.norm(), "({p}, {q}): {got} vs {expect}");
        }
    }
}

#[test]
fn marcum_matches_quadrature() {
    for (a, b) in [(3.0, 2.0), (1.0, 1.0), (0.5, 3.0), (4.0, 5.0), (2.0, 0.3), (7.0, 3.034_854_258_770_293)] {
        let oracle = marcum_q1_quadrature(a, b);
        let got = marcum_q1(a, b);
        assert!((got - oracle).abs() < 1e-9, "Q1({a}, {b}) = {got}, quadrature {oracle}");
    }
    assert!((marcum_q1_quadrature(0.0, 2.0) - (-2.0f64).exp()).abs() < 1e-10);
}

#[test]
fn channel_energy_is_beampattern_times_receive_gain() {
    let grid = SpatialGrid::new(6, 5, -0.45, 0.15).unwrap();
    let tris = TrisArray::new(UpaSpec::new(4, 3).unwrap(), FeedGeometry::default()).unwrap();
    let rx = UpaSpec::new(3, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let phase = PhaseConfig::random(tris.len(), &mut rng);
    let g = effective_transmission(&phase, &tris.w).unwrap();
    let spec = tris.spec;
    let radar = Radar::new(tris, rx, &grid);
    let p_t = 2.5;
    let channels = radar.channels(&phase, p_t).unwrap();
    let map = beampattern_map(&g, &SteeringTable::new(&spec, &grid));
    for (m, &bm) in map.iter().enumerate() {
        let (nx, ny) = grid.frequencies(m).unwrap();
        let energy: f64 = channels.bin(m).iter().map(|z| z.norm_sqr()).sum();
        let b = beampattern(&g, nx, ny, &spec);
        assert!((bm - b).abs() <= 1e-12 * b.max(1e-300));
        assert!((energy - p_t * b * rx.len() as f64).abs() <= 1e-10 * energy.max(1e-300));
    }
}

#[test]
fn soft_min_gradient_matches_finite_differences() {
    let tris = TrisArray::new(UpaSpec::new(3, 3).unwrap(), FeedGeometry::default()).unwrap();
    let rows: Vec<Vec<Complex64>> =
        [(0.1, -0.2), (-0.3, 0.25), (0.4, 0.0)].iter().map(|&(x, y)| steering_vector(&tris.spec, x, y)).collect();
    let problem = BeamProblem::from_rows(&tris.w, &rows).unwrap();
    let beta = 20.0 / (problem.bound() / 3.0);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut grad = vec![0.0; 9];
    for _ in 0..25 {
        let x: Vec<f64> = (0..9).map(|_| rng.random::<f64>() * std::f64::consts::TAU).collect();
        problem.soft_min_grad(&x, beta, &mut grad);
        let fd = central_difference(|p| problem.soft_min(p, beta), &x, 1e-5);
        let scale = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        for (a, b) in grad.iter().zip(&fd) {
            assert!((a - b).abs() <= 1e-5 * scale, "{a} vs {b}");
        }
    }
}

#[test]
fn two_bin_solver_beats_coarse_enumeration() {
    let tris = TrisArray::new(UpaSpec::new(2, 2).unwrap(), FeedGeometry::default()).unwrap();
    let grid = SpatialGrid::standard();
    let table = SteeringTable::new(&tris.spec, &grid);
    let problem = BeamProblem::new(&tris.w, &table, &[grid.index(3, 4).unwrap(), grid.index(15, 11).unwrap()]).unwrap();
    // The objective ignores a global phase, so the first phase is pinned.
    let (best, _) = enumerate_phases(3, 16, |p| {
        let full = [0.0, p[0], p[1], p[2]];
        problem.min_gain(&full)
    });
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let sol = optimize_phases(&problem, None, &SolverParams::default(), &mut rng).unwrap();
    assert!(sol.min_gain >= 0.999 * best, "{} vs {best}", sol.min_gain);
    assert!(sol.min_gain <= problem.bound() * (1.0 + 1e-12));
}

#[test]
fn symmetric_pair_is_balanced() {
    // Bins mirrored through broadside see conjugate steering vectors; with
    // a real-symmetric feed magnitude the optimum balances both gains.
    let tris = TrisArray::new(UpaSpec::new(4, 4).unwrap(), FeedGeometry::default()).unwrap();
    let rows = vec![steering_vector(&tris.spec, 0.2, 0.1), steering_vector(&tris.spec, -0.2, -0.1)];
    let problem = BeamProblem::from_rows(&tris.w, &rows).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let sol = optimize_phases(&problem, None, &SolverParams::default(), &mut rng).unwrap();
    let (b0, b1) = (sol.gains[0], sol.gains[1]);
    assert!((b0 - b1).abs() <= 1e-3 * b0.max(b1), "{b0} vs {b1}");
}
