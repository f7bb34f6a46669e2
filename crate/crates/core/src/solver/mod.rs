//! Sine-Galerkin solver for the Kuznetsov, Blackstock and Westervelt forms
//! on `(0, L)` with homogeneous Dirichlet data:
//!
//! ```text
//! Kuznetsov/Westervelt: (1 + 2kψ_t)ψ_tt - c²Δψ - 𝔎∗Δψ_t + 2ℓ ∇ψ·∇ψ_t = 0
//! Blackstock:            ψ_tt - c²(1 - 2kψ_t)Δψ - 𝔎∗Δψ_t + 2ℓ ∇ψ·∇ψ_t = 0
//! ```
//!
//! Time stepping is Crank-Nicolson in `(ψ, ψ_t)`. The linear part and the
//! current-interval memory weight are implicit and diagonal in the sine basis;
//! the quadratic terms are frozen at the previous fixed-point iterate.

mod energy;
pub mod spectral;

pub use energy::{energy_distance, energy_norm, EnergyTrace, TraceRow};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernels::{staggered_weights, Kernel, KernelError};
use spectral::SpectralGrid;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("invalid solver setting {key}: {reason}")]
    Config { key: &'static str, reason: String },
    #[error("{which} mode index {index} outside 1..={modes}")]
    ModeOutOfRange {
        which: &'static str,
        index: usize,
        modes: usize,
    },
    #[error(
        "nondegeneracy violated at step {step} (t = {time}): coefficient min {min} < floor {floor}"
    )]
    NondegeneracyViolation {
        step: usize,
        time: f64,
        min: f64,
        floor: f64,
    },
    #[error("ball condition violated at step {step} (t = {time}): 4|k| max|ψ_t| = {value} > {threshold}")]
    BallViolation {
        step: usize,
        time: f64,
        value: f64,
        threshold: f64,
    },
    #[error("fixed point did not converge at step {step} (t = {time}): increment {residual:e} after {iterations} iterations")]
    NonConvergence {
        step: usize,
        time: f64,
        residual: f64,
        iterations: usize,
    },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

pub type Result<T> = std::result::Result<T, SolverError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Form {
    Kuznetsov,
    Blackstock,
    Westervelt,
}

impl std::fmt::Display for Form {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Kuznetsov => "kuznetsov",
            Self::Blackstock => "blackstock",
            Self::Westervelt => "westervelt",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquationForm {
    pub form: Form,
    #[serde(default = "one")]
    pub c: f64,
    #[serde(default)]
    pub k: f64,
    #[serde(default)]
    pub ell: f64,
}

fn one() -> f64 {
    1.0
}

impl EquationForm {
    pub fn new(form: Form, c: f64, k: f64, ell: f64) -> Self {
        Self { form, c, k, ell }
    }

    /// The quasilinear coefficient `1 + 2kψ_t` (Kuznetsov, Westervelt) or
    /// `1 - 2kψ_t` (Blackstock).
    pub fn coefficient(&self, psi_t: f64) -> f64 {
        match self.form {
            Form::Blackstock => 1.0 - 2.0 * self.k * psi_t,
            _ => 1.0 + 2.0 * self.k * psi_t,
        }
    }

    fn is_linear(&self) -> bool {
        self.k == 0.0 && self.ell == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub equation: EquationForm,
    /// domain length `L`
    pub length: f64,
    /// sine modes `N`
    pub modes: usize,
    /// collocation intervals `M`; the grid has `M + 1` points including the ends
    pub grid: usize,
    pub dt: f64,
    pub t_final: f64,
    pub fp_tol: f64,
    pub fp_max_iters: usize,
    pub nondegeneracy_floor: f64,
    pub ball_threshold: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            equation: EquationForm::new(Form::Kuznetsov, 1.0, 0.0, 0.0),
            length: 1.0,
            modes: 64,
            grid: 128,
            dt: 1e-3,
            t_final: 0.5,
            fp_tol: 1e-11,
            fp_max_iters: 100,
            nondegeneracy_floor: 0.25,
            ball_threshold: 1.0,
        }
    }
}

fn bad(key: &'static str, reason: impl Into<String>) -> SolverError {
    SolverError::Config {
        key,
        reason: reason.into(),
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let e = &self.equation;
        for (key, v) in [
            ("equation.c", e.c),
            ("length", self.length),
            ("dt", self.dt),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(bad(key, format!("{v} must be finite and > 0")));
            }
        }
        for (key, v) in [("equation.k", e.k), ("equation.ell", e.ell)] {
            if !v.is_finite() {
                return Err(bad(key, format!("{v} must be finite")));
            }
        }
        if e.form == Form::Westervelt && e.ell != 0.0 {
            return Err(bad("equation.ell", "the Westervelt form requires ell = 0"));
        }
        if self.modes == 0 {
            return Err(bad("modes", "need at least one mode"));
        }
        if 2 * self.grid < 3 * self.modes {
            return Err(bad(
                "grid",
                format!(
                    "{} collocation intervals cannot dealias {} modes (need >= 3N/2)",
                    self.grid, self.modes
                ),
            ));
        }
        if !(self.t_final.is_finite() && self.t_final > 0.0) {
            return Err(bad(
                "t_final",
                format!("{} must be finite and > 0", self.t_final),
            ));
        }
        let n = (self.t_final / self.dt).round();
        if n < 1.0 || (n * self.dt - self.t_final).abs() > 1e-9 * self.t_final {
            return Err(bad(
                "dt",
                format!(
                    "t_final = {} is not an integer multiple of dt = {}",
                    self.t_final, self.dt
                ),
            ));
        }
        if !(self.fp_tol.is_finite() && self.fp_tol > 0.0) {
            return Err(bad(
                "fp_tol",
                format!("{} must be finite and > 0", self.fp_tol),
            ));
        }
        if self.fp_max_iters == 0 {
            return Err(bad("fp_max_iters", "must be at least 1"));
        }
        if !(self.nondegeneracy_floor > 0.0 && self.nondegeneracy_floor < 1.0) {
            return Err(bad(
                "nondegeneracy_floor",
                format!("{} must lie in (0, 1)", self.nondegeneracy_floor),
            ));
        }
        if !(self.ball_threshold > 0.0) {
            return Err(bad(
                "ball_threshold",
                format!("{} must be > 0", self.ball_threshold),
            ));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    pub fn grid(&self) -> SpectralGrid {
        SpectralGrid::new(self.modes, self.grid, self.length)
    }
}

/// Modal coefficients of `ψ` and `ψ_t` at step `step`, plus the interval
/// averages `(ψ_t^j + ψ_t^{j+1})/2` of every completed step. The memory term
/// `𝔎∗Δψ_t` acts on them through `-λ_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalState {
    pub psi: Vec<f64>,
    pub psi_t: Vec<f64>,
    pub step: usize,
    history: Vec<f64>,
}

impl ModalState {
    pub fn new(psi: Vec<f64>, psi_t: Vec<f64>) -> Self {
        assert_eq!(psi.len(), psi_t.len());
        Self {
            psi,
            psi_t,
            step: 0,
            history: Vec::new(),
        }
    }

    pub fn modes(&self) -> usize {
        self.psi.len()
    }

    pub fn history_len(&self) -> usize {
        self.history.len() / self.modes().max(1)
    }

    fn history_at(&self, j: usize) -> &[f64] {
        let n = self.modes();
        &self.history[j * n..(j + 1) * n]
    }
}

/// Norms of the initial data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataNorms {
    pub h4_psi0: f64,
    pub h4_psi1: f64,
    /// `‖ψ₀‖²_{H¹} + ‖ψ₁‖²_{L²}`
    pub lower_order_sq: f64,
    /// `‖ψ₁‖²_{L²} + ‖ψ₀,x‖²_{L²}`
    pub energy_sq: f64,
    pub max_abs_psi1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    pub state: ModalState,
    pub norms: DataNorms,
}

/// `ψ₀ = Σ a_j sin(jπx/L)`, `ψ₁ = Σ b_j sin(jπx/L)` with 1-based mode indices.
pub fn initial_data_from_modes(
    psi0: &[(usize, f64)],
    psi1: &[(usize, f64)],
    config: &SolverConfig,
) -> Result<InitialData> {
    let n = config.modes;
    let fill = |which, spec: &[(usize, f64)]| -> Result<Vec<f64>> {
        let mut out = vec![0.0; n];
        for &(j, a) in spec {
            if j == 0 || j > n {
                return Err(SolverError::ModeOutOfRange {
                    which,
                    index: j,
                    modes: n,
                });
            }
            if !a.is_finite() {
                return Err(bad("initial", format!("amplitude {a} of {which} mode {j}")));
            }
            out[j - 1] += a;
        }
        Ok(out)
    };
    let psi = fill("psi0", psi0)?;
    let psi_t = fill("psi1", psi1)?;
    let grid = config.grid();
    let mut vals = vec![0.0; grid.intervals() + 1];
    grid.values(&psi_t, &mut vals);
    let norms = DataNorms {
        h4_psi0: grid.hk_sq(&psi, 4).sqrt(),
        h4_psi1: grid.hk_sq(&psi_t, 4).sqrt(),
        lower_order_sq: grid.hk_sq(&psi, 1) + grid.l2_sq(&psi_t),
        energy_sq: grid.l2_sq(&psi_t) + grid.grad_sq(&psi),
        max_abs_psi1: vals.iter().fold(0.0, |m, v| m.max(v.abs())),
    };
    Ok(InitialData {
        state: ModalState::new(psi, psi_t),
        norms,
    })
}

/// Pointwise fields on the collocation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearFields {
    pub x: Vec<f64>,
    /// `1 + 2kψ_t` or `1 - 2kψ_t`
    pub coefficient: Vec<f64>,
    /// `2ℓ ψ_x ψ_tx`
    pub gradient: Vec<f64>,
}

pub fn rhs_nonlinear(psi: &[f64], psi_t: &[f64], config: &SolverConfig) -> NonlinearFields {
    let grid = config.grid();
    let m = grid.intervals() + 1;
    let mut v = vec![0.0; m];
    let mut px = vec![0.0; m];
    let mut vx = vec![0.0; m];
    grid.values(psi_t, &mut v);
    grid.dx(psi, &mut px);
    grid.dx(psi_t, &mut vx);
    let eq = config.equation;
    NonlinearFields {
        x: grid.points(),
        coefficient: v.iter().map(|&u| eq.coefficient(u)).collect(),
        gradient: px
            .iter()
            .zip(&vx)
            .map(|(a, b)| 2.0 * eq.ell * a * b)
            .collect(),
    }
}

/// Per-step diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub iterations: usize,
    pub residual: f64,
}

/// A configured solver: grid tables and memory weights are built once.
#[derive(Debug, Clone)]
pub struct Solver {
    config: SolverConfig,
    kernel: Kernel,
    grid: SpectralGrid,
    weights: Vec<f64>,
    denom: Vec<f64>,
}

struct Scratch {
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    d: Vec<f64>,
    g: Vec<f64>,
    m1: Vec<f64>,
    m2: Vec<f64>,
    m3: Vec<f64>,
}

impl Scratch {
    fn new(points: usize, modes: usize) -> Self {
        let p = || vec![0.0; points];
        let n = || vec![0.0; modes];
        Self {
            a: p(),
            b: p(),
            c: p(),
            d: p(),
            g: p(),
            m1: n(),
            m2: n(),
            m3: n(),
        }
    }
}

impl Solver {
    pub fn new(config: SolverConfig, kernel: Kernel) -> Result<Self> {
        config.validate()?;
        kernel.validate()?;
        let grid = config.grid();
        let weights = staggered_weights(&kernel, config.dt, config.steps())?;
        let (dt, c2) = (config.dt, config.equation.c.powi(2));
        let w0 = weights[0];
        let denom = grid
            .lambda()
            .iter()
            .map(|l| 1.0 / dt + c2 * l * dt / 4.0 + l * w0 / 2.0)
            .collect();
        Ok(Self {
            config,
            kernel,
            grid,
            weights,
            denom,
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn spectral(&self) -> &SpectralGrid {
        &self.grid
    }

    /// Galerkin projection of the frozen quadratic terms at the half step,
    /// for the iterate `v ≈ ψ_t^{n+1}`.
    fn nonlinear(&self, st: &ModalState, v: &[f64], s: &mut Scratch, out: &mut [f64]) {
        let eq = self.config.equation;
        let dt = self.config.dt;
        for i in 0..v.len() {
            s.m1[i] = 0.5 * (st.psi_t[i] + v[i]);
            s.m2[i] = st.psi[i] + 0.25 * dt * (st.psi_t[i] + v[i]);
        }
        s.g.iter_mut().for_each(|x| *x = 0.0);
        if eq.k != 0.0 {
            self.grid.values(&s.m1, &mut s.a);
            match eq.form {
                Form::Blackstock => {
                    self.grid.laplacian(&s.m2, &mut s.b);
                    let f = 2.0 * eq.k * eq.c * eq.c;
                    for q in 0..s.g.len() {
                        s.g[q] += f * s.a[q] * s.b[q];
                    }
                }
                _ => {
                    for i in 0..v.len() {
                        s.m3[i] = (v[i] - st.psi_t[i]) / dt;
                    }
                    self.grid.values(&s.m3, &mut s.b);
                    for q in 0..s.g.len() {
                        s.g[q] += 2.0 * eq.k * s.a[q] * s.b[q];
                    }
                }
            }
        }
        if eq.ell != 0.0 {
            self.grid.dx(&s.m2, &mut s.c);
            self.grid.dx(&s.m1, &mut s.d);
            for q in 0..s.g.len() {
                s.g[q] += 2.0 * eq.ell * s.c[q] * s.d[q];
            }
        }
        self.grid.project(&s.g, out);
    }

    /// Advance `state` by one step.
    pub fn step(&self, state: &mut ModalState) -> Result<StepReport> {
        let mut s = Scratch::new(self.grid.intervals() + 1, self.config.modes);
        self.step_with(state, &mut s)
    }

    fn step_with(&self, st: &mut ModalState, s: &mut Scratch) -> Result<StepReport> {
        let cfg = &self.config;
        let n_modes = cfg.modes;
        if st.modes() != n_modes {
            return Err(SolverError::GridMismatch(format!(
                "state has {} modes, solver {}",
                st.modes(),
                n_modes
            )));
        }
        let n = st.step;
        if n >= self.weights.len() {
            return Err(bad(
                "t_final",
                format!("step {} is past the final time", n + 1),
            ));
        }
        let (dt, c2) = (cfg.dt, cfg.equation.c.powi(2));
        let lambda = self.grid.lambda();

        let mut hist = vec![0.0; n_modes];
        for j in 0..n {
            let w = self.weights[n - j];
            if w != 0.0 {
                for (h, y) in hist.iter_mut().zip(st.history_at(j)) {
                    *h += w * y;
                }
            }
        }
        let w0 = self.weights[0];
        let base: Vec<f64> = (0..n_modes)
            .map(|i| {
                let (p, v) = (st.psi[i], st.psi_t[i]);
                v / dt - c2 * lambda[i] * (p + dt * v / 4.0) - lambda[i] * (hist[i] + w0 * v / 2.0)
            })
            .collect();

        let mut v: Vec<f64> = if n > 0 {
            let last = st.history_at(n - 1);
            (0..n_modes)
                .map(|i| 3.0 * st.psi_t[i] - 2.0 * last[i])
                .collect()
        } else {
            st.psi_t.clone()
        };
        let mut nl = vec![0.0; n_modes];
        let mut report = StepReport {
            iterations: 0,
            residual: 0.0,
        };
        if cfg.equation.is_linear() {
            for i in 0..n_modes {
                v[i] = base[i] / self.denom[i];
            }
            report.iterations = 1;
        } else {
            let mut converged = false;
            for it in 1..=cfg.fp_max_iters {
                self.nonlinear(st, &v, s, &mut nl);
                let mut inc: f64 = 0.0;
                for i in 0..n_modes {
                    let next = (base[i] - nl[i]) / self.denom[i];
                    inc = inc.max((next - v[i]).abs());
                    v[i] = next;
                }
                report = StepReport {
                    iterations: it,
                    residual: inc,
                };
                if !inc.is_finite() {
                    break;
                }
                if inc < cfg.fp_tol {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(SolverError::NonConvergence {
                    step: n + 1,
                    time: (n + 1) as f64 * dt,
                    residual: report.residual,
                    iterations: report.iterations,
                });
            }
        }

        for i in 0..n_modes {
            let avg = 0.5 * (st.psi_t[i] + v[i]);
            st.history.push(avg);
            st.psi[i] += dt * avg;
        }
        st.psi_t = v;
        st.step = n + 1;
        Ok(report)
    }

    /// Grid extrema of `ψ_t` and of the quasilinear coefficient; errors if
    /// a monitor trips.
    fn monitor(&self, st: &ModalState, buf: &mut [f64]) -> Result<(f64, f64, f64)> {
        let cfg = &self.config;
        let eq = cfg.equation;
        self.grid.values(&st.psi_t, buf);
        let (mut lo, mut hi, mut vmax) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
        for &u in buf.iter() {
            let m = eq.coefficient(u);
            lo = lo.min(m);
            hi = hi.max(m);
            vmax = vmax.max(u.abs());
        }
        let time = st.step as f64 * cfg.dt;
        if !(lo >= cfg.nondegeneracy_floor) {
            return Err(SolverError::NondegeneracyViolation {
                step: st.step,
                time,
                min: lo,
                floor: cfg.nondegeneracy_floor,
            });
        }
        let ball = 4.0 * eq.k.abs() * vmax;
        if !(ball <= cfg.ball_threshold) {
            return Err(SolverError::BallViolation {
                step: st.step,
                time,
                value: ball,
                threshold: cfg.ball_threshold,
            });
        }
        Ok((vmax, lo, hi))
    }

    pub fn solve(&self, initial: &ModalState) -> Result<Solution> {
        let cfg = &self.config;
        if initial.step != 0 || initial.history_len() != 0 {
            return Err(bad("initial", "solve starts from a step-0 state"));
        }
        let steps = cfg.steps();
        let mut st = initial.clone();
        let mut s = Scratch::new(self.grid.intervals() + 1, cfg.modes);
        let mut buf = vec![0.0; self.grid.intervals() + 1];
        let mut traj = Trajectory::new(cfg.modes, cfg.dt, cfg.length, steps);
        let mut trace = EnergyTrace::default();

        let (vmax, lo, hi) = self.monitor(&st, &mut buf)?;
        traj.push(&st);
        trace.record(
            &self.grid,
            cfg,
            &st,
            vmax,
            lo,
            hi,
            StepReport {
                iterations: 0,
                residual: 0.0,
            },
        );
        for _ in 0..steps {
            let rep = self.step_with(&mut st, &mut s)?;
            let (vmax, lo, hi) = self.monitor(&st, &mut buf)?;
            traj.push(&st);
            trace.record(&self.grid, cfg, &st, vmax, lo, hi, rep);
        }
        let summary = trace.summary(cfg);
        Ok(Solution {
            trajectory: traj,
            trace,
            summary,
        })
    }
}

/// One step of the scheme for a state at any step index. Builds the memory
/// weights on every call; prefer [`Solver`] for time loops.
pub fn step(state: &mut ModalState, config: &SolverConfig, kernel: &Kernel) -> Result<StepReport> {
    Solver::new(*config, *kernel)?.step(state)
}

pub fn solve(config: &SolverConfig, kernel: &Kernel, initial: &ModalState) -> Result<Solution> {
    Solver::new(*config, *kernel)?.solve(initial)
}

/// Modal coefficients at every step `0..=steps`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub modes: usize,
    pub dt: f64,
    pub length: f64,
    psi: Vec<f64>,
    psi_t: Vec<f64>,
}

impl Trajectory {
    fn new(modes: usize, dt: f64, length: f64, steps: usize) -> Self {
        Self {
            modes,
            dt,
            length,
            psi: Vec::with_capacity(modes * (steps + 1)),
            psi_t: Vec::with_capacity(modes * (steps + 1)),
        }
    }

    fn push(&mut self, st: &ModalState) {
        self.psi.extend_from_slice(&st.psi);
        self.psi_t.extend_from_slice(&st.psi_t);
    }

    /// Number of recorded records, `steps + 1`.
    pub fn len(&self) -> usize {
        self.psi.len() / self.modes
    }

    pub fn is_empty(&self) -> bool {
        self.psi.is_empty()
    }

    pub fn psi(&self, n: usize) -> &[f64] {
        &self.psi[n * self.modes..(n + 1) * self.modes]
    }

    pub fn psi_t(&self, n: usize) -> &[f64] {
        &self.psi_t[n * self.modes..(n + 1) * self.modes]
    }
}

/// Worst values seen by the runtime monitors over a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonitorSummary {
    pub steps: usize,
    pub energy_norm: f64,
    pub coefficient_min: f64,
    pub coefficient_max: f64,
    /// `4|k| max_{t,x} |ψ_t|`
    pub ball_value: f64,
    pub max_fp_iters: usize,
    pub max_fp_residual: f64,
    /// `max_t (‖ψ_t‖² + ‖ψ_x‖²)`
    pub max_lower_order_sq: f64,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub trajectory: Trajectory,
    pub trace: EnergyTrace,
    pub summary: MonitorSummary,
}
