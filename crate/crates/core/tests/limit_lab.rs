use fracac_core::kernels::kernel_distance;
use fracac_core::limit_lab::{
    fit_rate, run_sweep, verify_continuity, EpsGrid, InitialModes, LabError,
};
use fracac_core::{EquationForm, Family, Form, Kernel, SolverConfig, SweepSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn config(form: Form, modes: usize) -> SolverConfig {
    SolverConfig {
        equation: EquationForm::new(form, 1.0, 0.2, 1.0),
        modes,
        grid: 2 * modes,
        ..SolverConfig::default()
    }
}

fn data() -> InitialModes {
    InitialModes {
        psi0: vec![(1, 0.1)],
        psi1: vec![(1, 0.5)],
    }
}

#[test]
fn noisy_power_law_fit() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let eps: Vec<f64> = (0..12).map(|j| 10f64.powf(-0.25 * j as f64)).collect();
    let d: Vec<f64> = eps
        .iter()
        .map(|e| 2.0 * e.powf(0.75) * (1.0 + 0.05 * rng.random_range(-1.0..1.0)))
        .collect();
    let f = fit_rate(&eps, &d).unwrap();
    assert!((f.slope - 0.75).abs() < 0.05, "{f:?}");
    assert!(f.r2 > 0.99);
}

#[test]
fn diffusivity_sweep_is_linear_in_eps() {
    let spec = SweepSpec::new(
        config(Form::Kuznetsov, 16),
        Family::VanishingDiffusivity {
            base: Kernel::abel(1.0, 0.5).unwrap(),
        },
        data(),
    );
    let r = run_sweep(&spec).unwrap();
    let fit = r.fit.unwrap();
    assert!(fit.slope >= 0.85 && fit.r2 >= 0.98, "{fit:?}");
    assert_eq!(r.pass, Some(true));
    assert_eq!(r.spearman, Some(1.0));
    assert!(r.kernel_linearity.unwrap() < 1e-10);
    assert!(r.noise_floor.unwrap() > 0.0);
    for e in r.entries.iter().filter(|e| e.excluded) {
        assert!(e
            .reason
            .as_deref()
            .unwrap()
            .starts_with("below noise floor"));
        assert!(e.energy_distance.unwrap() < 10.0 * r.noise_floor.unwrap());
    }
    assert_eq!(r.continuity.rows.len(), 7);
    assert!(r.continuity.band().unwrap() < 5.0);
}

#[test]
fn relaxation_sweep_matches_order_a() {
    let spec = SweepSpec::new(
        config(Form::Blackstock, 16),
        Family::VanishingRelaxation {
            delta: 1.0,
            tau_theta: 1.0,
            a: 0.5,
            b: 0.75,
        },
        data(),
    );
    let r = run_sweep(&spec).unwrap();
    assert_eq!(r.limit_kernel, Kernel::abel(1.0, 0.25).unwrap());
    let fit = r.fit.unwrap();
    assert!(fit.slope >= 0.35 && fit.r2 >= 0.95, "{fit:?}");
}

#[test]
fn single_point_sweep_has_no_slope() {
    let mut spec = SweepSpec::new(
        config(Form::Kuznetsov, 8),
        Family::VanishingDiffusivity {
            base: Kernel::abel(1.0, 0.5).unwrap(),
        },
        data(),
    );
    spec.eps = EpsGrid {
        max: 0.01,
        min: 0.01,
        points: 1,
    };
    let r = run_sweep(&spec).unwrap();
    assert!(r.fit.is_none() && r.pass.is_none());
    assert!(r.fit_error.unwrap().contains("at least 4"));
    assert!(r.entries[0].energy_distance.unwrap() > 0.0);
}

#[test]
fn solver_failures_are_recorded_per_eps() {
    let mut spec = SweepSpec::new(
        config(Form::Kuznetsov, 8),
        Family::VanishingDiffusivity {
            base: Kernel::harmonic(-2000.0, 1.0, 0.0).unwrap(),
        },
        data(),
    );
    spec.eps = EpsGrid {
        max: 1.0,
        min: 1e-4,
        points: 5,
    };
    spec.noise_factor = 0.0;
    let r = run_sweep(&spec).unwrap();
    let failed: Vec<_> = r.entries.iter().filter(|e| e.monitors.is_none()).collect();
    assert!(!failed.is_empty());
    for e in failed {
        assert!(e.excluded);
        assert!(
            e.reason.as_deref().unwrap().starts_with("solver:"),
            "{:?}",
            e.reason
        );
    }
}

#[test]
fn limit_failure_aborts() {
    let mut c = config(Form::Kuznetsov, 8);
    c.ball_threshold = 0.1;
    let spec = SweepSpec::new(
        c,
        Family::VanishingDiffusivity {
            base: Kernel::abel(1.0, 0.5).unwrap(),
        },
        data(),
    );
    assert!(matches!(run_sweep(&spec), Err(LabError::Limit(_))));
}

#[test]
fn continuity_pairs() {
    let c = config(Form::Kuznetsov, 8);
    let k = |e: f64| Kernel::abel(e, 0.5).unwrap();
    let t = verify_continuity(
        &c,
        &data(),
        &[(k(0.1), k(0.1)), (k(0.1), k(0.01)), (k(0.01), k(0.001))],
    )
    .unwrap();
    assert!(t.rows[0].identical && t.rows[0].ratio.is_none());
    assert_eq!(t.rows[0].energy_distance, 0.0);
    assert!(t.rows[1].ratio.unwrap() > 0.0);
    assert!(
        (t.rows[2].kernel_distance - kernel_distance(&k(0.01), &k(0.001), 0.5).unwrap()).abs()
            < 1e-18
    );
    assert!(t.band().unwrap() < 5.0);
    assert!(t.passes(10.0));
}
