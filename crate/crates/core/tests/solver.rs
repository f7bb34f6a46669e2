use std::f64::consts::PI;

use fracac_core::solver::{
    energy_distance, energy_norm, initial_data_from_modes, rhs_nonlinear, solve,
};
use fracac_core::{EquationForm, Form, Kernel, Solver, SolverConfig, SolverError};

fn cfg(form: Form, k: f64, ell: f64, modes: usize, dt: f64, t_final: f64) -> SolverConfig {
    SolverConfig {
        equation: EquationForm::new(form, 1.0, k, ell),
        modes,
        grid: 2 * modes,
        dt,
        t_final,
        ..SolverConfig::default()
    }
}

fn max_l2_error_linear_wave(dt: f64) -> f64 {
    let c = cfg(Form::Kuznetsov, 0.0, 0.0, 4, dt, 1.0);
    let d = initial_data_from_modes(&[(1, 1.0)], &[], &c).unwrap();
    let sol = solve(&c, &Kernel::Zero, &d.state).unwrap();
    let tr = &sol.trajectory;
    (0..tr.len())
        .map(|n| {
            let exact = (PI * n as f64 * dt).cos();
            let p = tr.psi(n);
            let e2 = (p[0] - exact).powi(2) + p[1..].iter().map(|x| x * x).sum::<f64>();
            (0.5 * e2).sqrt()
        })
        .fold(0.0, f64::max)
}

#[test]
fn linear_wave_is_second_order() {
    let e: Vec<f64> = [0.02, 0.01, 0.005]
        .iter()
        .map(|&dt| max_l2_error_linear_wave(dt))
        .collect();
    for w in e.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((1.8..=2.2).contains(&order), "order {order} from {e:?}");
    }
}

#[test]
fn linear_undamped_energy_is_conserved() {
    let c = cfg(Form::Kuznetsov, 0.0, 0.0, 16, 1e-3, 0.5);
    let d = initial_data_from_modes(&[(1, 0.3), (3, -0.1), (7, 0.02)], &[(2, 0.4)], &c).unwrap();
    let sol = solve(&c, &Kernel::Zero, &d.state).unwrap();
    let e0 = sol.trace.rows[0].energy;
    for r in &sol.trace.rows {
        assert!(((r.energy - e0) / e0).abs() < 1e-12);
    }
}

#[test]
fn strong_damping_energy_never_increases() {
    let c = cfg(Form::Kuznetsov, 0.0, 0.0, 16, 1e-3, 0.5);
    let d = initial_data_from_modes(&[(1, 0.3), (5, 0.05)], &[(1, 0.2), (2, 0.1)], &c).unwrap();
    let sol = solve(&c, &Kernel::dirac(0.05).unwrap(), &d.state).unwrap();
    let rows = &sol.trace.rows;
    for w in rows.windows(2) {
        assert!(
            w[1].energy <= w[0].energy * (1.0 + 1e-14),
            "step {}",
            w[1].step
        );
    }
    assert!(rows.last().unwrap().energy < 0.95 * rows[0].energy);
}

#[test]
fn nonnegative_kernels_dissipate() {
    let c = cfg(Form::Kuznetsov, 0.0, 0.0, 16, 1e-3, 0.5);
    let d = initial_data_from_modes(&[(1, 0.3), (4, 0.05)], &[(2, 0.2)], &c).unwrap();
    for k in [
        Kernel::abel(0.05, 0.5).unwrap(),
        Kernel::mittag_leffler(0.1, 0.1, 1.0, 0.5, 0.75).unwrap(),
        Kernel::mittag_leffler(0.1, 0.1, 1.0, 1.0, 1.0).unwrap(),
    ] {
        let sol = solve(&c, &k, &d.state).unwrap();
        let rows = &sol.trace.rows;
        assert!(rows.last().unwrap().energy <= rows[0].energy + 1e-12, "{k}");
    }
}

#[test]
fn boundary_values_vanish_every_step() {
    let c = cfg(Form::Kuznetsov, 0.2, 1.0, 16, 1e-3, 0.1);
    let d = initial_data_from_modes(&[(1, 0.1), (2, 0.05)], &[(1, 0.5)], &c).unwrap();
    let sol = solve(&c, &Kernel::abel(0.01, 0.5).unwrap(), &d.state).unwrap();
    let tr = &sol.trajectory;
    for n in 0..tr.len() {
        for &x in &[0.0, 1.0] {
            let psi: f64 = tr
                .psi(n)
                .iter()
                .enumerate()
                .map(|(j, a)| a * ((j + 1) as f64 * PI * x).sin())
                .sum();
            let lap: f64 = tr
                .psi(n)
                .iter()
                .enumerate()
                .map(|(j, a)| -a * ((j + 1) as f64 * PI).powi(2) * ((j + 1) as f64 * PI * x).sin())
                .sum();
            assert!(psi.abs() < 1e-14 && lap.abs() < 1e-10, "{psi} {lap}");
        }
    }
}

#[test]
fn zero_data_stays_zero() {
    let c = cfg(Form::Blackstock, 0.2, 1.0, 8, 1e-3, 0.05);
    let d = initial_data_from_modes(&[], &[], &c).unwrap();
    let sol = solve(&c, &Kernel::abel(0.1, 0.5).unwrap(), &d.state).unwrap();
    for n in 0..sol.trajectory.len() {
        assert!(sol.trajectory.psi(n).iter().all(|&x| x == 0.0));
        assert!(sol.trajectory.psi_t(n).iter().all(|&x| x == 0.0));
    }
    assert_eq!(energy_norm(&sol.trace), 0.0);
}

#[test]
fn forms_coincide_without_quadratic_pressure_term() {
    let k = Kernel::abel(0.01, 0.5).unwrap();
    let mut out = Vec::new();
    for form in [Form::Kuznetsov, Form::Blackstock] {
        let c = cfg(form, 0.0, 1.0, 16, 1e-3, 0.2);
        let d = initial_data_from_modes(&[(1, 0.1)], &[(1, 0.5), (2, 0.1)], &c).unwrap();
        out.push(solve(&c, &k, &d.state).unwrap().trajectory);
    }
    assert!(energy_distance(&out[0], &out[1]).unwrap() < 1e-11);
}

#[test]
fn small_data_kuznetsov_stays_in_ball() {
    let c = cfg(Form::Kuznetsov, 0.2, 1.0, 64, 1e-3, 0.5);
    let d = initial_data_from_modes(&[(1, 0.1)], &[(1, 0.5)], &c).unwrap();
    assert!(4.0 * 0.2 * d.norms.max_abs_psi1 <= 0.5);
    let sol = solve(&c, &Kernel::abel(0.01, 0.5).unwrap(), &d.state).unwrap();
    assert!(sol.summary.ball_value <= c.ball_threshold);
    assert!(sol.summary.coefficient_min >= c.nondegeneracy_floor);
    assert!(sol.trace.rows.iter().all(|r| r.fp_residual < c.fp_tol));
    assert!(sol.summary.max_fp_iters > 1);
}

#[test]
fn refinement_changes_energy_norm_quadratically() {
    let k = Kernel::mittag_leffler(0.05, 0.1, 1.0, 1.0, 1.0).unwrap();
    let norms: Vec<f64> = [4e-3, 2e-3, 1e-3]
        .iter()
        .map(|&dt| {
            let c = cfg(Form::Kuznetsov, 0.2, 1.0, 16, dt, 0.4);
            let d = initial_data_from_modes(&[(1, 0.1)], &[(1, 0.5)], &c).unwrap();
            let sol = solve(&c, &k, &d.state).unwrap();
            // the running maximum sits at t = 0 here; compare the value at T
            let r = sol.trace.rows.last().unwrap();
            (r.l2_psi_t.powi(2) + r.h1_psi.powi(2)).sqrt()
        })
        .collect();
    let ratio = (norms[0] - norms[1]).abs() / (norms[1] - norms[2]).abs();
    assert!((3.0..5.0).contains(&ratio), "{norms:?} ratio {ratio}");
}

#[test]
fn monitors_trip_with_step_index() {
    let c = cfg(Form::Kuznetsov, 0.2, 0.0, 8, 1e-3, 0.1);
    let d = initial_data_from_modes(&[], &[(1, 2.0)], &c).unwrap();
    match solve(&c, &Kernel::Zero, &d.state) {
        Err(SolverError::BallViolation { step: 0, value, .. }) => {
            assert!((value - 1.6).abs() < 1e-12)
        }
        other => panic!("{other:?}"),
    }

    let mut c = cfg(Form::Kuznetsov, 1.0, 0.0, 8, 1e-3, 0.1);
    c.ball_threshold = 100.0;
    let d = initial_data_from_modes(&[], &[(1, -0.45)], &c).unwrap();
    assert!(matches!(
        solve(&c, &Kernel::Zero, &d.state),
        Err(SolverError::NondegeneracyViolation { step: 0, .. })
    ));

    // blows through the ball partway through the run
    let mut c = cfg(Form::Kuznetsov, 0.2, 0.0, 8, 1e-3, 1.0);
    c.ball_threshold = 0.3;
    let d = initial_data_from_modes(&[(1, 0.1)], &[(1, 0.3)], &c).unwrap();
    match solve(&c, &Kernel::Zero, &d.state) {
        Err(SolverError::BallViolation { step, time, .. }) => {
            assert!(step > 0);
            assert!((time - step as f64 * 1e-3).abs() < 1e-12);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn nonconvergence_reported() {
    let mut c = cfg(Form::Kuznetsov, 0.2, 1.0, 8, 1e-3, 0.01);
    c.fp_max_iters = 1;
    let d = initial_data_from_modes(&[(1, 0.1)], &[(1, 0.5)], &c).unwrap();
    assert!(matches!(
        solve(&c, &Kernel::Zero, &d.state),
        Err(SolverError::NonConvergence { step: 1, .. })
    ));
}

#[test]
fn gradient_term_single_mode() {
    let c = cfg(Form::Kuznetsov, 0.0, 1.0, 4, 1e-3, 0.1);
    let f = rhs_nonlinear(&[1.0, 0.0, 0.0, 0.0], &[1.0, 0.0, 0.0, 0.0], &c);
    for (x, g) in f.x.iter().zip(&f.gradient) {
        let exact = 2.0 * PI * PI * (PI * x).cos().powi(2);
        assert!((g - exact).abs() < 1e-12);
    }
    let c = cfg(Form::Blackstock, 0.3, 0.0, 4, 1e-3, 0.1);
    let f = rhs_nonlinear(&[0.0; 4], &[0.5, 0.0, 0.0, 0.0], &c);
    for (x, m) in f.x.iter().zip(&f.coefficient) {
        assert!((m - (1.0 - 0.3 * (PI * x).sin())).abs() < 1e-14);
    }
}

#[test]
fn energy_distance_matches_grid_quadrature() {
    let c = cfg(Form::Kuznetsov, 0.2, 1.0, 8, 1e-3, 0.05);
    let d1 = initial_data_from_modes(&[(1, 0.1)], &[(1, 0.5)], &c).unwrap();
    let d2 = initial_data_from_modes(&[(1, 0.1), (3, 0.01)], &[(1, 0.45)], &c).unwrap();
    let a = solve(&c, &Kernel::Zero, &d1.state).unwrap().trajectory;
    let b = solve(&c, &Kernel::abel(0.1, 0.5).unwrap(), &d2.state)
        .unwrap()
        .trajectory;
    assert_eq!(energy_distance(&a, &a).unwrap(), 0.0);

    // the trapezoid rule on [0, 1] is exact for these squared sine/cosine sums
    let pts = 256;
    let field = |c: &[f64], x: f64, deriv: bool| -> f64 {
        c.iter()
            .enumerate()
            .map(|(j, a)| {
                let w = (j + 1) as f64 * PI;
                if deriv {
                    a * w * (w * x).cos()
                } else {
                    a * (w * x).sin()
                }
            })
            .sum()
    };
    let mut worst: f64 = 0.0;
    for n in 0..a.len() {
        let dv: Vec<f64> = a
            .psi_t(n)
            .iter()
            .zip(b.psi_t(n))
            .map(|(x, y)| x - y)
            .collect();
        let dp: Vec<f64> = a.psi(n).iter().zip(b.psi(n)).map(|(x, y)| x - y).collect();
        let mut s = 0.0;
        for q in 0..=pts {
            let x = q as f64 / pts as f64;
            let w = if q == 0 || q == pts { 0.5 } else { 1.0 } / pts as f64;
            s += w
                * (field(&dv, x, false).powi(2)
                    + field(&dp, x, false).powi(2)
                    + field(&dp, x, true).powi(2));
        }
        worst = worst.max(s);
    }
    let d = energy_distance(&a, &b).unwrap();
    assert!((d - worst.sqrt()).abs() < 1e-10, "{d} vs {}", worst.sqrt());

    let c2 = SolverConfig { dt: 5e-4, ..c };
    let e = solve(&c2, &Kernel::Zero, &d1.state).unwrap().trajectory;
    assert!(matches!(
        energy_distance(&a, &e),
        Err(SolverError::GridMismatch(_))
    ));
}

#[test]
fn solver_reuse_is_deterministic() {
    let c = cfg(Form::Blackstock, 0.2, 1.0, 16, 1e-3, 0.1);
    let d = initial_data_from_modes(&[(1, 0.1)], &[(1, 0.5)], &c).unwrap();
    let s = Solver::new(c, Kernel::abel(0.01, 0.5).unwrap()).unwrap();
    let a = s.solve(&d.state).unwrap();
    let b = s.solve(&d.state).unwrap();
    assert_eq!(a.trajectory, b.trajectory);
    assert_eq!(a.trace, b.trace);
}
