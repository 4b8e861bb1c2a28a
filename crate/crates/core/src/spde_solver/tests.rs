use ndarray::{s, Array2};

use super::*;
use crate::fractional_noise::{cell_increments, sample_field, CellIncrements, HurstPair};
use crate::grid::GridSpec;
use crate::heat_kernel::InitialData;
use crate::quadrature::GaussLegendre;

fn hurst() -> HurstPair {
    HurstPair::new(0.8, 0.7).unwrap()
}

fn noise(grid: &GridSpec, seed: u64) -> CellIncrements {
    cell_increments(&sample_field(&hurst(), grid, seed))
}

fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

#[test]
fn everything_zero_stays_zero() {
    let g = GridSpec::new(1.0, 5.0, 10, 20).unwrap();
    let cfg = SolverConfig::time_stepping(g);
    let s = solve_nonlocal(&cfg, &CellIncrements::zeros(g), &InitialData::zero(&g), &DriftSpec::zero()).unwrap();
    assert!(s.u().iter().all(|&v| v == 0.0));
    assert!(s.companion().iter().all(|&v| v == 0.0));
}

#[test]
fn constant_drift_accumulates_c_times_t() {
    let (t_end, c) = (1.0, 1.7);
    let g = GridSpec::new(t_end, 12.0, 32, 96).unwrap();
    let cfg = SolverConfig::time_stepping(g);
    let drift = DriftSpec::constant(c).unwrap();
    let s = solve_nonlocal(&cfg, &CellIncrements::zeros(g), &InitialData::zero(&g), &drift).unwrap();
    // int_0^infty p(s, x, y) dy = erf(x / sqrt(2 s))
    let gl = GaussLegendre::new(40);
    for j in [8usize, 16, 32, 48] {
        let x = g.x(j);
        let oracle = c * gl.integrate_panels(&[0.0, 0.01, 0.1, t_end], |s| libm::erf(x / libm::sqrt(2.0 * s)));
        let got = s.u()[[g.n_t(), j]];
        assert!((got - oracle).abs() < 0.02 * oracle.abs(), "x={x}: {got} vs {oracle}");
        if x >= 4.0 * libm::sqrt(t_end) {
            assert!((got - c * t_end).abs() < 0.02 * c * t_end);
        }
    }
}

fn ramp_solution(n_t: usize, n_x: usize) -> SolutionField {
    let g = GridSpec::new(0.5, 8.0, n_t, n_x).unwrap();
    let u0 = InitialData::ramp(&g, 1.0, 0.9).unwrap();
    let drift = DriftSpec::new(|_, v| v, 1.0, "v").unwrap();
    let cfg = SolverConfig::time_stepping(g).with_theta(0.125).unwrap();
    solve_nonlocal(&cfg, &CellIncrements::zeros(g), &u0, &drift).unwrap()
}

#[test]
fn ramp_with_transport_drift_self_converges() {
    let coarse = ramp_solution(16, 64);
    let fine = ramp_solution(64, 256);
    let scale = coarse.u().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut worst = 0.0f64;
    for n in 0..=16 {
        for j in 0..coarse.grid().physical_columns() {
            worst = worst.max((coarse.u()[[n, j]] - fine.u()[[4 * n, 4 * j]]).abs());
        }
    }
    assert!(worst < 0.03 * scale, "sup gap {worst} vs scale {scale}");
}

#[test]
fn boundary_initial_and_companion_invariants() {
    let g = GridSpec::new(1.0, 9.0, 16, 72).unwrap();
    let u0 = InitialData::ramp(&g, 2.0, 0.9).unwrap();
    let cfg = SolverConfig::time_stepping(g).with_theta(0.375).unwrap();
    let drift = DriftSpec::sine(0.8).unwrap();
    let s = solve_nonlocal(&cfg, &noise(&g, 3), &u0, &drift).unwrap();
    assert_eq!(cfg.shift_cells(), 3);
    assert!(s.u().column(0).iter().all(|&v| v == 0.0));
    assert_eq!(s.u().row(0).to_vec(), u0.samples().to_vec());
    assert!(s.u().iter().chain(s.companion().iter()).all(|v| v.is_finite()));
    let theta = cfg.theta();
    for n in 0..=16 {
        for j in 0..=69 {
            let expect = (s.u()[[n, j + 3]] - s.u()[[n, j]]) / theta;
            assert_eq!(s.companion()[[n, j]], expect);
        }
        for j in 70..=72 {
            assert_eq!(s.companion()[[n, j]], s.companion()[[n, 69]]);
        }
    }
    assert_eq!(s.meta().noise.unwrap().seed, 3);
    assert_eq!(s.meta().config_digest, cfg.digest());
}

#[test]
fn linear_in_the_noise() {
    let g = GridSpec::new(1.0, 5.0, 16, 32).unwrap();
    let cfg = SolverConfig::time_stepping(g);
    let u0 = InitialData::smooth_bump(&g, 1.5, 0.4).unwrap();
    let (a, b) = (noise(&g, 1), noise(&g, 2));
    let zero = DriftSpec::zero();
    let ua = solve_nonlocal(&cfg, &a, &u0, &zero).unwrap();
    let ub = solve_nonlocal(&cfg, &b, &InitialData::zero(&g), &zero).unwrap();
    let uab = solve_nonlocal(&cfg, &(&a + &b), &u0, &zero).unwrap();
    assert!(max_abs_diff(&(ua.u() + ub.u()), uab.u()) < 1e-10);
}

#[test]
fn rejects_mismatched_inputs() {
    let g = GridSpec::new(1.0, 5.0, 8, 16).unwrap();
    let other = GridSpec::new(1.0, 5.0, 8, 17).unwrap();
    let cfg = SolverConfig::time_stepping(g);
    let zero = DriftSpec::zero();
    assert!(solve_nonlocal(&cfg, &CellIncrements::zeros(other), &InitialData::zero(&g), &zero).is_err());
    assert!(solve_nonlocal(&cfg, &CellIncrements::zeros(g), &InitialData::zero(&other), &zero).is_err());
    let picard_cfg = cfg.with_mode(SolveMode::Picard);
    assert!(solve_nonlocal(&picard_cfg, &CellIncrements::zeros(g), &InitialData::zero(&g), &zero).is_err());
    assert!(picard_solve(&cfg, &CellIncrements::zeros(g), &InitialData::zero(&g), &zero).is_err());
}

#[test]
fn blow_up_is_reported_at_first_bad_node() {
    let g = GridSpec::new(1.0, 5.0, 8, 16).unwrap();
    let cfg = SolverConfig::time_stepping(g);
    let bad = DriftSpec::new(|u, _| if u > 0.5 { f64::NAN } else { 0.0 }, 1.0, "nan").unwrap();
    let u0 = InitialData::smooth_bump(&g, 2.0, 0.5).unwrap();
    match solve_nonlocal(&cfg, &CellIncrements::zeros(g), &u0, &bad) {
        Err(crate::Error::BlowUp { t_index, .. }) => assert_eq!(t_index, 1),
        other => panic!("expected blow-up, got {other:?}"),
    }
}

#[test]
fn picard_with_zero_drift_is_heat_flow_plus_noise() {
    let g = GridSpec::new(1.0, 5.0, 12, 24).unwrap();
    let cfg = SolverConfig::time_stepping(g).with_mode(SolveMode::Picard).with_picard(1e-9, 10).unwrap();
    let u0 = InitialData::smooth_bump(&g, 1.5, 0.4).unwrap();
    let inc = noise(&g, 9);
    let (s, trace) = picard_solve(&cfg, &inc, &u0, &DriftSpec::zero()).unwrap();
    assert_eq!(trace.len(), 2);
    assert_eq!(trace[1], 0.0);
    let z = stochastic_convolution(&inc, &g).unwrap();
    for n in 0..=12 {
        let heat = crate::heat_kernel::initial_convolution(&u0, g.t(n), &g).unwrap();
        for j in 1..=24 {
            assert!((s.u()[[n, j]] - heat[j] - z[[n, j]]).abs() < 1e-14);
        }
    }
}

#[test]
fn picard_contracts_and_agrees_with_time_stepping() {
    let g = GridSpec::new(1.0, 9.0, 32, 96).unwrap();
    let tol = 1e-8;
    let ts = SolverConfig::new(g, 0.1875, tol, 60, SolveMode::TimeStepping).unwrap();
    let pc = ts.with_mode(SolveMode::Picard);
    let u0 = InitialData::ramp(&g, 1.5, 0.9).unwrap();
    let drift = DriftSpec::linear(0.8, 0.5, 10.0).unwrap();
    let inc = noise(&g, 21);
    let ops = MildOperators::new(&g).unwrap().with_picard().unwrap();
    let prepared = ops.prepare(&inc).unwrap();
    let (p, trace) = ops.picard_solve(&pc, &prepared, &u0, &drift, PicardStart::HeatFlow).unwrap();
    for k in 2..trace.len() {
        assert!(trace[k] < trace[k - 1], "trace not decreasing: {trace:?}");
    }
    let step = ops.solve_nonlocal(&ts, &prepared, &u0, &drift).unwrap();
    let cols = g.physical_columns();
    let gap = max_abs_diff(&p.u().slice(s![.., ..cols]).to_owned(), &step.u().slice(s![.., ..cols]).to_owned());
    // the two discretizations differ by quadrature of the semigroup at
    // order dt; see how much a halved step moves the stepping scheme
    let g2 = GridSpec::new(1.0, 9.0, 64, 96).unwrap();
    let ts2 = SolverConfig::new(g2, 0.1875, tol, 60, SolveMode::TimeStepping).unwrap();
    let u02 = InitialData::ramp(&g2, 1.5, 0.9).unwrap();
    let fine = solve_nonlocal(&ts2, &CellIncrements::zeros(g2), &u02, &drift).unwrap();
    let coarse = solve_nonlocal(&ts, &CellIncrements::zeros(g), &u0, &drift).unwrap();
    let dt_effect = (0..=32)
        .flat_map(|n| (0..cols).map(move |j| (n, j)))
        .fold(0.0f64, |m, (n, j)| m.max((fine.u()[[2 * n, j]] - coarse.u()[[n, j]]).abs()));
    assert!(gap < 2.0 * tol + 0.1 * dt_effect, "gap {gap}, dt effect {dt_effect}");
}

#[test]
fn picard_twin_runs_meet() {
    let g = GridSpec::new(1.0, 6.0, 24, 48).unwrap();
    let tol = 1e-6;
    let cfg = SolverConfig::new(g, 0.125, tol, 80, SolveMode::Picard).unwrap();
    let u0 = InitialData::ramp(&g, 1.5, 0.9).unwrap();
    let drift = DriftSpec::sine(1.0).unwrap();
    let ops = MildOperators::new(&g).unwrap().with_picard().unwrap();
    let prepared = ops.prepare(&noise(&g, 4)).unwrap();
    let (a, _) = ops.picard_solve(&cfg, &prepared, &u0, &drift, PicardStart::HeatFlow).unwrap();
    let (b, tb) = ops.picard_solve(&cfg, &prepared, &u0, &drift, PicardStart::Zero).unwrap();
    for k in 3..tb.len() {
        assert!(tb[k] < tb[k - 1]);
    }
    let d = sup_time_mean_square_distance(&[a], &[b], Component::U).unwrap();
    assert!(d < 10.0 * tol);
}

#[test]
fn picard_reports_non_convergence_with_trace() {
    let g = GridSpec::new(1.0, 6.0, 16, 32).unwrap();
    let cfg = SolverConfig::new(g, 0.1875, 1e-14, 2, SolveMode::Picard).unwrap();
    let u0 = InitialData::ramp(&g, 1.5, 0.9).unwrap();
    match picard_solve(&cfg, &noise(&g, 1), &u0, &DriftSpec::sine(1.0).unwrap()) {
        Err(crate::Error::NonConvergence { trace }) => assert_eq!(trace.len(), 2),
        other => panic!("expected non-convergence, got {other:?}"),
    }
}

#[test]
fn coupled_gradient_of_linear_profile_is_one() {
    let g = GridSpec::new(0.5, 10.0, 16, 80).unwrap();
    let u0 = InitialData::from_fn(&g, |x| x, |_| 1.0, 1.0).unwrap();
    let cfg = SolverConfig::time_stepping(g);
    let s = solve_coupled(&cfg, &CellIncrements::zeros(g), &u0, &DriftSpec::zero()).unwrap();
    assert_eq!(s.companion_kind(), CompanionKind::Gradient);
    let interior = s.companion().slice(s![.., 1..48]);
    assert!(interior.iter().all(|&v| (v - 1.0).abs() < 1e-6), "{interior:?}");
}

#[test]
fn coupled_gradient_matches_finite_difference() {
    let g = GridSpec::new(0.5, 8.0, 32, 128).unwrap();
    let u0 = InitialData::smooth_bump(&g, 2.0, 0.5).unwrap();
    let cfg = SolverConfig::time_stepping(g);
    let s = solve_coupled(&cfg, &CellIncrements::zeros(g), &u0, &DriftSpec::sine(0.5).unwrap()).unwrap();
    let (mut num, mut den) = (0.0, 0.0);
    for n in 0..=32 {
        for j in 1..80 {
            let fd = (s.u()[[n, j + 1]] - s.u()[[n, j - 1]]) / (2.0 * g.dx());
            let v = s.companion()[[n, j]];
            num += (v - fd) * (v - fd);
            den += fd * fd;
        }
    }
    assert!(libm::sqrt(num / den) < 0.05);
}

#[test]
fn theta_sweep_contract() {
    let g = GridSpec::new(0.5, 6.0, 16, 48).unwrap();
    let base = SolverConfig::time_stepping(g);
    let u0 = InitialData::ramp(&g, 1.5, 0.9).unwrap();
    let drift = DriftSpec::sine(0.5).unwrap();
    let inc = noise(&g, 8);
    let dx = g.dx();
    let r = theta_sweep(&base, &[dx, 4.0 * dx, 2.0 * dx, 2.0 * dx], &inc, &u0, &drift).unwrap();
    assert_eq!(r.thetas.len(), 4);
    assert!(r.thetas.windows(2).all(|w| w[0] >= w[1]));
    assert_eq!(r.pairwise_d2[[1, 2]], 0.0);
    assert!(r.pairwise_d2[[0, 3]] > 0.0);
    for s in &r.solutions {
        assert_eq!(s.u().row(0), r.solutions[0].u().row(0));
    }
    assert!(theta_sweep(&base, &[dx], &inc, &u0, &drift).is_err());
}

#[test]
fn distance_examples() {
    let g = GridSpec::new(0.5, 6.0, 8, 24).unwrap();
    let cfg = SolverConfig::time_stepping(g);
    let u0 = InitialData::ramp(&g, 1.5, 0.9).unwrap();
    let a = solve_nonlocal(&cfg, &noise(&g, 1), &u0, &DriftSpec::zero()).unwrap();
    let b = solve_nonlocal(&cfg, &noise(&g, 2), &u0, &DriftSpec::zero()).unwrap();
    let ens = [a.clone(), b.clone()];
    assert_eq!(sup_mean_square_distance(&ens, &ens, 4, Component::U).unwrap(), 0.0);
    // a constant offset c moves the distance to c^2
    let c = 0.3;
    let shifted = SolutionField::new(
        a.u() + c,
        a.companion().clone(),
        a.companion_kind(),
        g,
        a.valid_columns(),
        *a.meta(),
    );
    let d = sup_mean_square_distance(&[a.clone()], &[shifted], 4, Component::U).unwrap();
    assert!((d - c * c).abs() < 1e-14);
    assert!(sup_mean_square_distance(&ens, &[a.clone()], 4, Component::U).is_err());
    assert!(sup_mean_square_distance(&[a], &[b], 9, Component::U).is_err());
}

