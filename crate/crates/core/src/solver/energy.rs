use serde::{Deserialize, Serialize};

use super::spectral::SpectralGrid;
use super::{
    ModalState, MonitorSummary, Result, SolverConfig, SolverError, StepReport, Trajectory,
};

/// One recorded step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: usize,
    pub time: f64,
    pub l2_psi_t: f64,
    pub h1_psi: f64,
    /// `‖ψ_x‖_{L²}`
    pub grad_psi: f64,
    /// max over the collocation grid
    pub linf_psi_t: f64,
    pub coef_min: f64,
    pub coef_max: f64,
    /// `½‖ψ_t‖² + ½c²‖ψ_x‖²`
    pub energy: f64,
    /// running `max (‖ψ_t‖² + ‖ψ‖²_{H¹})^{1/2}`
    pub energy_norm: f64,
    pub fp_iters: usize,
    pub fp_residual: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyTrace {
    pub rows: Vec<TraceRow>,
}

impl EnergyTrace {
    #[allow(clippy::too_many_arguments)]
    pub(super) fn record(
        &mut self,
        grid: &SpectralGrid,
        cfg: &SolverConfig,
        st: &ModalState,
        linf: f64,
        coef_min: f64,
        coef_max: f64,
        rep: StepReport,
    ) {
        let vt = grid.l2_sq(&st.psi_t);
        let gx = grid.grad_sq(&st.psi);
        let h1 = grid.l2_sq(&st.psi) + gx;
        let e = (vt + h1).sqrt();
        let prev = self.rows.last().map_or(0.0, |r| r.energy_norm);
        self.rows.push(TraceRow {
            step: st.step,
            time: st.step as f64 * cfg.dt,
            l2_psi_t: vt.sqrt(),
            h1_psi: h1.sqrt(),
            grad_psi: gx.sqrt(),
            linf_psi_t: linf,
            coef_min,
            coef_max,
            energy: 0.5 * vt + 0.5 * cfg.equation.c.powi(2) * gx,
            energy_norm: prev.max(e),
            fp_iters: rep.iterations,
            fp_residual: rep.residual,
        });
    }

    pub(super) fn summary(&self, cfg: &SolverConfig) -> MonitorSummary {
        let mut s = MonitorSummary {
            steps: self.rows.len().saturating_sub(1),
            energy_norm: energy_norm(self),
            coefficient_min: f64::INFINITY,
            coefficient_max: f64::NEG_INFINITY,
            ball_value: 0.0,
            max_fp_iters: 0,
            max_fp_residual: 0.0,
            max_lower_order_sq: 0.0,
        };
        for r in &self.rows {
            s.coefficient_min = s.coefficient_min.min(r.coef_min);
            s.coefficient_max = s.coefficient_max.max(r.coef_max);
            s.ball_value = s.ball_value.max(4.0 * cfg.equation.k.abs() * r.linf_psi_t);
            s.max_fp_iters = s.max_fp_iters.max(r.fp_iters);
            s.max_fp_residual = s.max_fp_residual.max(r.fp_residual);
            s.max_lower_order_sq = s
                .max_lower_order_sq
                .max(r.l2_psi_t.powi(2) + r.grad_psi.powi(2));
        }
        s
    }
}

/// `max_t (‖ψ_t‖² + ‖ψ‖²_{H¹})^{1/2}` over the recorded steps.
pub fn energy_norm(trace: &EnergyTrace) -> f64 {
    trace.rows.last().map_or(0.0, |r| r.energy_norm)
}

/// `max_t (‖ψ_t¹ - ψ_t²‖² + ‖ψ¹ - ψ²‖²_{H¹})^{1/2}`, norms from Parseval.
pub fn energy_distance(a: &Trajectory, b: &Trajectory) -> Result<f64> {
    if a.modes != b.modes || a.len() != b.len() || a.dt != b.dt || a.length != b.length {
        return Err(SolverError::GridMismatch(format!(
            "(N, records, dt, L) = ({}, {}, {}, {}) vs ({}, {}, {}, {})",
            a.modes,
            a.len(),
            a.dt,
            a.length,
            b.modes,
            b.len(),
            b.dt,
            b.length
        )));
    }
    let lambda: Vec<f64> = (1..=a.modes)
        .map(|i| (i as f64 * std::f64::consts::PI / a.length).powi(2))
        .collect();
    let mut worst: f64 = 0.0;
    for n in 0..a.len() {
        let mut s = 0.0;
        for i in 0..a.modes {
            let dv = a.psi_t(n)[i] - b.psi_t(n)[i];
            let dp = a.psi(n)[i] - b.psi(n)[i];
            s += dv * dv + (1.0 + lambda[i]) * dp * dp;
        }
        worst = worst.max(0.5 * a.length * s);
    }
    Ok(worst.sqrt())
}
