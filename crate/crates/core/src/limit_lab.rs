//! ε-sweeps: distances of `ψ^ε` to the limit solution, kernel distances,
//! log-log rate fits and continuity ratio tables.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernels::{kernel_distance, Kernel, KernelError, LimitRegime};
use crate::solver::{
    energy_distance, initial_data_from_modes, DataNorms, ModalState, MonitorSummary, Solver,
    SolverConfig, SolverError, Trajectory,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("invalid sweep setting {key}: {reason}")]
    Spec { key: &'static str, reason: String },
    #[error("rate fit needs at least {needed} valid points, got {got}")]
    InsufficientPoints { needed: usize, got: usize },
    #[error("limit problem: {0}")]
    Limit(SolverError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

pub type Result<T> = std::result::Result<T, LabError>;

pub const MIN_FIT_POINTS: usize = 4;
/// Kernel distances below this are treated as identical kernels.
pub const IDENTICAL_KERNELS: f64 = 1e-14;

/// How `𝔎_ε` depends on `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Family {
    /// `ε · base`, limit `0`
    VanishingDiffusivity { base: Kernel },
    /// Mittag-Leffler with `τ = ε` and `a ≤ b`
    VanishingRelaxation {
        delta: f64,
        #[serde(default = "one")]
        tau_theta: f64,
        a: f64,
        b: f64,
    },
    /// Mittag-Leffler with `b < a`, `τ = ε` and `τ_θ = ρε`, limit `0`
    WesterveltRelaxation {
        delta: f64,
        #[serde(default = "one")]
        rho: f64,
        a: f64,
        b: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl Family {
    pub fn kernel(&self, eps: f64) -> Result<Kernel> {
        Ok(match *self {
            Self::VanishingDiffusivity { base } => base.scale(eps),
            Self::VanishingRelaxation {
                delta,
                tau_theta,
                a,
                b,
            } => Kernel::mittag_leffler(delta, eps, tau_theta, a, b)?,
            Self::WesterveltRelaxation { delta, rho, a, b } => {
                Kernel::mittag_leffler(delta, eps, rho * eps, a, b)?
            }
        })
    }

    pub fn regime(&self) -> LimitRegime {
        match self {
            Self::VanishingDiffusivity { .. } | Self::WesterveltRelaxation { .. } => {
                LimitRegime::VanishingDiffusivity
            }
            Self::VanishingRelaxation { .. } => LimitRegime::VanishingRelaxation,
        }
    }

    pub fn limit(&self) -> Result<Kernel> {
        match *self {
            Self::WesterveltRelaxation { a, b, .. } if b >= a => Err(LabError::Spec {
                key: "family.b",
                reason: format!(
                    "the Westervelt relaxation family needs b < a, got a = {a}, b = {b}"
                ),
            }),
            _ => Ok(self.kernel(0.5)?.limit_kernel(self.regime())?),
        }
    }

    /// Rate predicted by the theory: `1`, `a` or `a - b`.
    pub fn predicted_rate(&self) -> f64 {
        match *self {
            Self::VanishingDiffusivity { .. } => 1.0,
            Self::VanishingRelaxation { a, .. } => a,
            Self::WesterveltRelaxation { a, b, .. } => a - b,
        }
    }
}

/// Geometric grid from `max` down to `min`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsGrid {
    pub max: f64,
    pub min: f64,
    pub points: usize,
}

impl Default for EpsGrid {
    fn default() -> Self {
        Self {
            max: 1e-1,
            min: 10f64.powf(-3.5),
            points: 8,
        }
    }
}

impl EpsGrid {
    pub fn values(&self) -> Result<Vec<f64>> {
        let bad = |reason: String| LabError::Spec { key: "eps", reason };
        if self.points == 0 {
            return Err(bad("need at least one point".into()));
        }
        if !(self.min > 0.0 && self.max.is_finite()) {
            return Err(bad(format!(
                "range [{}, {}] must be positive",
                self.min, self.max
            )));
        }
        if self.points == 1 {
            return Ok(vec![self.max]);
        }
        if !(self.max > self.min) {
            return Err(bad(format!(
                "max {} must exceed min {}",
                self.max, self.min
            )));
        }
        let (hi, lo) = (self.max.log10(), self.min.log10());
        let n = self.points - 1;
        Ok((0..=n)
            .map(|j| {
                if j == n {
                    self.min
                } else {
                    10f64.powf(hi - (hi - lo) * j as f64 / n as f64)
                }
            })
            .collect())
    }
}

/// Sine-mode amplitudes `(j, a_j)` of the initial data.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialModes {
    #[serde(default)]
    pub psi0: Vec<(usize, f64)>,
    #[serde(default)]
    pub psi1: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub config: SolverConfig,
    pub family: Family,
    pub initial: InitialModes,
    pub eps: EpsGrid,
    /// defaults to [`Family::predicted_rate`]
    pub expected_rate: Option<f64>,
    pub rate_tolerance: f64,
    /// exclude distances below `noise_factor ×` the dt-vs-dt/2 self-convergence
    /// distance of the limit problem; `0` disables the estimate
    pub noise_factor: f64,
}

impl SweepSpec {
    pub fn new(config: SolverConfig, family: Family, initial: InitialModes) -> Self {
        Self {
            config,
            family,
            initial,
            eps: EpsGrid::default(),
            expected_rate: None,
            rate_tolerance: 0.15,
            noise_factor: 10.0,
        }
    }

    pub fn expected(&self) -> f64 {
        self.expected_rate
            .unwrap_or_else(|| self.family.predicted_rate())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub eps: f64,
    pub kernel: Kernel,
    pub energy_distance: Option<f64>,
    pub kernel_distance: Option<f64>,
    pub monitors: Option<MonitorSummary>,
    /// `max_t (‖ψ_t‖² + ‖ψ_x‖²) / (‖ψ₁‖² + ‖ψ₀,x‖²)`
    pub lower_order_ratio: Option<f64>,
    pub excluded: bool,
    pub reason: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: usize,
}

/// Ratio `energy_distance / kernel_distance` for one pair of kernels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuityRow {
    pub first: Kernel,
    pub second: Kernel,
    pub energy_distance: f64,
    pub kernel_distance: f64,
    pub ratio: Option<f64>,
    pub identical: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ContinuityTable {
    pub rows: Vec<ContinuityRow>,
}

impl ContinuityTable {
    fn ratios(&self) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().filter_map(|r| r.ratio)
    }

    pub fn max_ratio(&self) -> Option<f64> {
        self.ratios().reduce(f64::max)
    }

    pub fn min_ratio(&self) -> Option<f64> {
        self.ratios().reduce(f64::min)
    }

    /// `max ratio / min ratio`
    pub fn band(&self) -> Option<f64> {
        Some(self.max_ratio()? / self.min_ratio()?)
    }

    pub fn passes(&self, cap: f64) -> bool {
        self.max_ratio().is_some_and(|m| m <= cap)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub family: Family,
    pub limit_kernel: Kernel,
    pub limit_monitors: MonitorSummary,
    pub data: DataNorms,
    pub noise_floor: Option<f64>,
    pub entries: Vec<SweepEntry>,
    pub fit: Option<RateFit>,
    pub fit_error: Option<String>,
    pub expected_rate: f64,
    pub rate_tolerance: f64,
    /// `slope ≥ expected - tolerance`; `None` without a fit
    pub pass: Option<bool>,
    pub steeper_than_expected: bool,
    /// Spearman correlation of `ε` and distance over the fitted points
    pub spearman: Option<f64>,
    /// consecutive valid `ε` pairs
    pub continuity: ContinuityTable,
    /// max relative deviation of `kernel_distance / ε` from its mean
    /// (vanishing-diffusivity families only)
    pub kernel_linearity: Option<f64>,
}

impl SweepResult {
    /// `max / min` of the lower-order ratio over entries that solved.
    pub fn lower_order_spread(&self) -> Option<f64> {
        let v: Vec<f64> = self
            .entries
            .iter()
            .filter_map(|e| e.lower_order_ratio)
            .collect();
        let hi = v.iter().copied().reduce(f64::max)?;
        let lo = v.iter().copied().reduce(f64::min)?;
        Some(hi / lo)
    }

    pub fn fitted_points(&self) -> impl Iterator<Item = &SweepEntry> {
        self.entries.iter().filter(|e| !e.excluded)
    }
}

/// Ordinary least squares of `log d` on `log ε`.
pub fn fit_rate(eps: &[f64], distances: &[f64]) -> Result<RateFit> {
    let pts: Vec<(f64, f64)> = eps
        .iter()
        .zip(distances)
        .filter(|(e, d)| **e > 0.0 && **d > 0.0 && e.is_finite() && d.is_finite())
        .map(|(e, d)| (e.ln(), d.ln()))
        .collect();
    if pts.len() < MIN_FIT_POINTS || pts.len() != eps.len().min(distances.len()) {
        return Err(LabError::InsufficientPoints {
            needed: MIN_FIT_POINTS,
            got: pts.len(),
        });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(LabError::Spec {
            key: "eps",
            reason: "all ε values coincide".into(),
        });
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    Ok(RateFit {
        slope,
        intercept,
        r2,
        points: pts.len(),
    })
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation; `None` for fewer than two points or a
/// constant input.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let m = (n + 1.0) / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - m) * (b - m);
        sxx += (a - m) * (a - m);
        syy += (b - m) * (b - m);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

/// Energy distance between a run and one with half the time step, at the
/// common time levels.
pub fn self_convergence(coarse: &Trajectory, fine: &Trajectory) -> Result<f64> {
    if coarse.modes != fine.modes
        || fine.len() != 2 * coarse.len() - 1
        || (coarse.dt - 2.0 * fine.dt).abs() > 1e-12 * coarse.dt
    {
        return Err(SolverError::GridMismatch(format!(
            "fine run must halve dt: {} records at dt {} vs {} at dt {}",
            coarse.len(),
            coarse.dt,
            fine.len(),
            fine.dt
        ))
        .into());
    }
    let lambda: Vec<f64> = (1..=coarse.modes)
        .map(|i| (i as f64 * std::f64::consts::PI / coarse.length).powi(2))
        .collect();
    let mut worst: f64 = 0.0;
    for n in 0..coarse.len() {
        let (p, pf) = (coarse.psi(n), fine.psi(2 * n));
        let (v, vf) = (coarse.psi_t(n), fine.psi_t(2 * n));
        let s: f64 = (0..coarse.modes)
            .map(|i| (v[i] - vf[i]).powi(2) + (1.0 + lambda[i]) * (p[i] - pf[i]).powi(2))
            .sum();
        worst = worst.max(0.5 * coarse.length * s);
    }
    Ok(worst.sqrt())
}

fn halved(config: &SolverConfig) -> SolverConfig {
    SolverConfig {
        dt: config.dt / 2.0,
        ..*config
    }
}

/// Energy and kernel distances for pairs of kernels sharing config and data.
pub fn verify_continuity(
    config: &SolverConfig,
    initial: &InitialModes,
    pairs: &[(Kernel, Kernel)],
) -> Result<ContinuityTable> {
    let data = initial_data_from_modes(&initial.psi0, &initial.psi1, config)?;
    let rows = pairs
        .par_iter()
        .map(|&(k1, k2)| {
            let a = Solver::new(*config, k1)?.solve(&data.state)?;
            let b = Solver::new(*config, k2)?.solve(&data.state)?;
            let ed = energy_distance(&a.trajectory, &b.trajectory)?;
            let kd = kernel_distance(&k1, &k2, config.t_final)?;
            Ok(continuity_row(k1, k2, ed, kd))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ContinuityTable { rows })
}

fn continuity_row(first: Kernel, second: Kernel, ed: f64, kd: f64) -> ContinuityRow {
    let identical = kd < IDENTICAL_KERNELS;
    ContinuityRow {
        first,
        second,
        energy_distance: ed,
        kernel_distance: kd,
        ratio: (!identical).then(|| ed / kd),
        identical,
    }
}

struct EpsRun {
    entry: SweepEntry,
    trajectory: Option<Trajectory>,
}

fn run_eps(
    spec: &SweepSpec,
    eps: f64,
    state: &ModalState,
    data: &DataNorms,
    limit: &(Kernel, Trajectory),
) -> EpsRun {
    let t = spec.config.t_final;
    let mut entry = SweepEntry {
        eps,
        kernel: Kernel::Zero,
        energy_distance: None,
        kernel_distance: None,
        monitors: None,
        lower_order_ratio: None,
        excluded: true,
        reason: None,
    };
    let kernel = match spec.family.kernel(eps) {
        Ok(k) => k,
        Err(e) => {
            entry.reason = Some(format!("kernel: {e}"));
            return EpsRun {
                entry,
                trajectory: None,
            };
        }
    };
    entry.kernel = kernel;
    match kernel_distance(&kernel, &limit.0, t) {
        Ok(d) => entry.kernel_distance = Some(d),
        Err(e) => entry.reason = Some(format!("kernel distance: {e}")),
    }
    let sol = match Solver::new(spec.config, kernel).and_then(|s| s.solve(state)) {
        Ok(s) => s,
        Err(e) => {
            entry.reason = Some(format!("solver: {e}"));
            return EpsRun {
                entry,
                trajectory: None,
            };
        }
    };
    entry.monitors = Some(sol.summary);
    if data.energy_sq > 0.0 {
        entry.lower_order_ratio = Some(sol.summary.max_lower_order_sq / data.energy_sq);
    }
    match energy_distance(&sol.trajectory, &limit.1) {
        Ok(d) => {
            entry.energy_distance = Some(d);
            if entry.reason.is_none() {
                entry.excluded = false;
            }
        }
        Err(e) => entry.reason = Some(format!("distance: {e}")),
    }
    EpsRun {
        entry,
        trajectory: Some(sol.trajectory),
    }
}

/// Solve the limit problem once, then every `ε` problem in parallel.
/// Per-`ε` failures are recorded on the entry; only a failing limit problem
/// aborts the sweep.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.config.validate()?;
    let eps = spec.eps.values()?;
    if !(spec.rate_tolerance >= 0.0) {
        return Err(LabError::Spec {
            key: "rate_tolerance",
            reason: format!("{} must be >= 0", spec.rate_tolerance),
        });
    }
    let limit_kernel = spec.family.limit()?;
    let data = initial_data_from_modes(&spec.initial.psi0, &spec.initial.psi1, &spec.config)?;

    let solve_limit = |cfg: SolverConfig| {
        Solver::new(cfg, limit_kernel)
            .and_then(|s| s.solve(&data.state))
            .map_err(LabError::Limit)
    };
    let (limit, fine) = rayon::join(
        || solve_limit(spec.config),
        || (spec.noise_factor > 0.0).then(|| solve_limit(halved(&spec.config))),
    );
    let limit = limit?;
    let noise_floor = match fine {
        Some(f) => Some(self_convergence(&limit.trajectory, &f?.trajectory)?),
        None => None,
    };
    let limit_monitors = limit.summary;
    let reference = (limit_kernel, limit.trajectory);

    let runs: Vec<EpsRun> = eps
        .par_iter()
        .map(|&e| run_eps(spec, e, &data.state, &data.norms, &reference))
        .collect();

    let mut continuity = ContinuityTable::default();
    for w in runs.windows(2) {
        if let (Some(a), Some(b)) = (&w[0].trajectory, &w[1].trajectory) {
            let ed = energy_distance(a, b)?;
            let kd = kernel_distance(&w[0].entry.kernel, &w[1].entry.kernel, spec.config.t_final)?;
            continuity
                .rows
                .push(continuity_row(w[0].entry.kernel, w[1].entry.kernel, ed, kd));
        }
    }
    let mut entries: Vec<SweepEntry> = runs.into_iter().map(|r| r.entry).collect();

    if let Some(floor) = noise_floor {
        let cut = spec.noise_factor * floor;
        for e in entries.iter_mut().filter(|e| !e.excluded) {
            if let Some(d) = e.energy_distance.filter(|&d| d < cut) {
                e.excluded = true;
                e.reason = Some(format!(
                    "below noise floor: {d:.3e} < {} × {floor:.3e}",
                    spec.noise_factor
                ));
            }
        }
    }
    for e in entries.iter_mut().filter(|e| !e.excluded) {
        if e.energy_distance.is_some_and(|d| d <= 0.0) {
            e.excluded = true;
            e.reason = Some("distance is zero".into());
        }
    }

    let (fx, fy): (Vec<f64>, Vec<f64>) = entries
        .iter()
        .filter(|e| !e.excluded)
        .map(|e| (e.eps, e.energy_distance.unwrap_or(0.0)))
        .unzip();
    let (fit, fit_error) = match fit_rate(&fx, &fy) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let expected = spec.expected();
    let pass = fit.map(|f| f.slope >= expected - spec.rate_tolerance);
    let steeper = fit.is_some_and(|f| f.slope > expected + spec.rate_tolerance);

    let kernel_linearity = match spec.family {
        Family::VanishingDiffusivity { .. } => {
            let q: Vec<f64> = entries
                .iter()
                .filter_map(|e| e.kernel_distance.map(|d| d / e.eps))
                .collect();
            (!q.is_empty()).then(|| {
                let mean = q.iter().sum::<f64>() / q.len() as f64;
                q.iter()
                    .map(|x| ((x - mean) / mean).abs())
                    .fold(0.0, f64::max)
            })
        }
        _ => None,
    };

    Ok(SweepResult {
        family: spec.family,
        limit_kernel,
        limit_monitors,
        data: data.norms,
        noise_floor,
        spearman: spearman(&fx, &fy),
        entries,
        fit,
        fit_error,
        expected_rate: expected,
        rate_tolerance: spec.rate_tolerance,
        pass,
        steeper_than_expected: steeper,
        continuity,
        kernel_linearity,
    })
}

/// Fitted slopes at `dt` and `dt/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeStability {
    pub slope: f64,
    pub refined_slope: f64,
    pub change: f64,
    /// `change < 0.05`; otherwise the sweep is discretization-limited
    pub stable: bool,
}

pub const SLOPE_STABILITY_TOL: f64 = 0.05;

/// Re-run the sweep at half the time step and compare fitted slopes.
pub fn slope_stability(spec: &SweepSpec, base: &SweepResult) -> Result<SlopeStability> {
    let refined = run_sweep(&SweepSpec {
        config: halved(&spec.config),
        ..spec.clone()
    })?;
    let pick = |r: &SweepResult| {
        r.fit.map(|f| f.slope).ok_or(LabError::InsufficientPoints {
            needed: MIN_FIT_POINTS,
            got: r.fitted_points().count(),
        })
    };
    let (slope, refined_slope) = (pick(base)?, pick(&refined)?);
    let change = (slope - refined_slope).abs();
    Ok(SlopeStability {
        slope,
        refined_slope,
        change,
        stable: change < SLOPE_STABILITY_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_laws() {
        let eps: Vec<f64> = (0..6).map(|j| 10f64.powf(-0.5 * j as f64)).collect();
        for rate in [1.0, 0.5, 0.25] {
            let d: Vec<f64> = eps.iter().map(|e| 3.0 * e.powf(rate)).collect();
            let f = fit_rate(&eps, &d).unwrap();
            assert!((f.slope - rate).abs() < 1e-12);
            assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
            assert!((f.r2 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn too_few_points() {
        assert_eq!(
            fit_rate(&[1.0, 0.1, 0.01], &[1.0, 0.1, 0.01]),
            Err(LabError::InsufficientPoints { needed: 4, got: 3 })
        );
        assert!(fit_rate(&[1.0, 0.1, 0.01, 0.001], &[1.0, 0.1, 0.0, 0.001]).is_err());
    }

    #[test]
    fn spearman_ranks() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(spearman(&x, &[10.0, 20.0, 30.0, 40.0]), Some(1.0));
        assert_eq!(spearman(&x, &[4.0, 3.0, 2.0, 1.0]), Some(-1.0));
        assert_eq!(spearman(&x, &[1.0, 1.0, 1.0, 1.0]), None);
        assert!(spearman(&x, &[1.0, 3.0, 2.0, 4.0]).unwrap() < 1.0);
    }

    #[test]
    fn eps_grid() {
        let g = EpsGrid::default().values().unwrap();
        assert_eq!(g.len(), 8);
        assert_eq!(g[0], 0.1);
        assert_eq!(g[7], 10f64.powf(-3.5));
        assert!(g.windows(2).all(|w| w[1] < w[0]));
        let one = EpsGrid {
            max: 0.1,
            min: 0.1,
            points: 1,
        };
        assert_eq!(one.values().unwrap(), vec![0.1]);
        let bad = EpsGrid {
            max: 0.01,
            min: 0.1,
            points: 3,
        };
        assert!(bad.values().is_err());
    }

    #[test]
    fn families() {
        let f = Family::VanishingRelaxation {
            delta: 1.0,
            tau_theta: 1.0,
            a: 0.5,
            b: 0.75,
        };
        assert_eq!(f.limit().unwrap(), Kernel::abel(1.0, 0.25).unwrap());
        assert_eq!(f.predicted_rate(), 0.5);
        let w = Family::WesterveltRelaxation {
            delta: 1.0,
            rho: 2.0,
            a: 0.75,
            b: 0.5,
        };
        assert_eq!(w.limit().unwrap(), Kernel::Zero);
        assert_eq!(w.predicted_rate(), 0.25);
        match w.kernel(0.01).unwrap() {
            Kernel::MittagLeffler { tau, tau_theta, .. } => {
                assert_eq!(tau, 0.01);
                assert_eq!(tau_theta, 0.02);
            }
            k => panic!("{k}"),
        }
        let bad = Family::VanishingRelaxation {
            delta: 1.0,
            tau_theta: 1.0,
            a: 0.75,
            b: 0.5,
        };
        assert!(bad.limit().is_err());
    }
}
