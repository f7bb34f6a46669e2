//! Randomized numerical checks of the kernel hypotheses.
//!
//! * A1: bounded total variation of `𝔎` on `(0, T)`.
//! * A2: `∫_0^t (𝔎∗y_t)(s) y(s) ds ≥ -C y(0)²` with `C ≤ ½‖𝔎‖_{L¹(0,T)}`, plus the
//!   sufficient structural condition (positive, nonincreasing density).
//! * A3ᴷ: `∫_0^t (𝔎∗y) y ≥ C ∫_0^t (𝔎∗y)²` with `C > 0`.
//! * A3ᴮ: `∫_0^t (𝔎∗y) y ≥ 0`.
//!
//! Test signals are random trigonometric polynomials in time. Convolutions use
//! the solver's own discretization: history values are constant on each step,
//! the convolution is evaluated at step midpoints with
//! [`staggered_weights`](crate::kernels::staggered_weights), and the outer time
//! integral is the midpoint rule. The constants reported are therefore the
//! ones the time stepper actually sees.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::kernels::{staggered_weights, Kernel, KernelError};

/// Tolerance on sign conditions.
pub const SIGN_TOL: f64 = 1e-10;
/// A3ᴷ trials whose `∫(𝔎∗y)²` falls below this are excluded.
pub const DEGENERATE_DENOMINATOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum AssumptionId {
    A1,
    A2,
    A3K,
    A3B,
}

impl std::fmt::Display for AssumptionId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::A1 => "A1",
            Self::A2 => "A2",
            Self::A3K => "A3K",
            Self::A3B => "A3B",
        })
    }
}

impl std::str::FromStr for AssumptionId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "a1" => Ok(Self::A1),
            "a2" => Ok(Self::A2),
            "a3k" => Ok(Self::A3K),
            "a3b" => Ok(Self::A3B),
            other => Err(format!(
                "unknown assumption {other:?} (expected a1, a2, a3k, a3b)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckOptions {
    pub t_final: f64,
    pub trials: usize,
    pub seed: u64,
    /// Time steps on `[0, T]`.
    pub steps: usize,
    pub max_modes: usize,
}

impl CheckOptions {
    pub fn new(t_final: f64, trials: usize, seed: u64) -> Self {
        Self {
            t_final,
            trials,
            seed,
            steps: 512,
            max_modes: 16,
        }
    }

    fn validate(&self) -> Result<(), KernelError> {
        let bad = |name, value: f64, reason| {
            Err(KernelError::InvalidParameter {
                name,
                value,
                reason,
            })
        };
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return bad("T", self.t_final, "must be finite and > 0");
        }
        if self.trials == 0 {
            return bad("trials", 0.0, "must be >= 1");
        }
        if self.steps < 2 * self.max_modes {
            return bad("steps", self.steps as f64, "must resolve the test signals");
        }
        if self.max_modes == 0 {
            return bad("max_modes", 0.0, "must be >= 1");
        }
        Ok(())
    }
}

/// The trial and time at which the extremal value was observed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub trial: usize,
    pub t: f64,
    pub value: f64,
    pub description: String,
}

/// Sampled positivity and monotonicity of the density on `[t_start, T]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuralScan {
    pub pass: bool,
    pub t_start: f64,
    /// First sampled time at which positivity or monotonicity fails; the
    /// sufficient condition holds on `(0, t_f)`.
    pub t_f: Option<f64>,
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub assumption: AssumptionId,
    pub kernel: String,
    #[serde(rename = "T")]
    pub t_final: f64,
    /// C_{A1}, C_{A2} or C_{A3}. An A3ᴷ check with every trial excluded
    /// reports `+inf` (serialized as the string `"inf"`).
    #[serde(with = "extended_f64")]
    pub estimate: f64,
    /// Threshold the estimate is compared against, when there is one.
    pub bound: Option<f64>,
    pub pass: bool,
    pub witness: Option<Witness>,
    pub trials: usize,
    pub excluded_trials: usize,
    pub seed: u64,
    pub structural: Option<StructuralScan>,
}

impl AssumptionReport {
    pub fn summary_line(&self) -> String {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        let mut line = format!(
            "{verdict} {} kernel={} T={} estimate={:e}",
            self.assumption, self.kernel, self.t_final, self.estimate
        );
        if let Some(b) = self.bound {
            line.push_str(&format!(" bound={b:e}"));
        }
        if let Some(StructuralScan { t_f: Some(t), .. }) = &self.structural {
            line.push_str(&format!(" t_f={t:e}"));
        }
        line
    }
}

mod extended_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else if x.is_nan() {
            s.serialize_str("nan")
        } else if *x > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Str(s) => match s.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("bad number {other:?}"))),
            },
        }
    }
}

/// Random trigonometric polynomial `Σ_m c_m cos(mπt/T) + s_m sin(mπt/T)`.
#[derive(Debug, Clone)]
struct TestSignal {
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl TestSignal {
    fn random(opts: &CheckOptions, trial: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(trial as u64);
        let modes = rng.random_range(1..=opts.max_modes);
        let cos = (0..modes).map(|_| rng.random_range(-1.0..1.0)).collect();
        let sin = (0..modes).map(|_| rng.random_range(-1.0..1.0)).collect();
        Self { cos, sin }
    }

    fn eval(&self, t: f64, t_final: f64) -> f64 {
        let w = std::f64::consts::PI * t / t_final;
        self.cos
            .iter()
            .zip(&self.sin)
            .enumerate()
            .map(|(m, (c, s))| {
                let (sn, cs) = (m as f64 * w).sin_cos();
                c * cs + s * sn
            })
            .sum()
    }

    fn describe(&self) -> String {
        let fmt = |v: &[f64]| {
            v.iter()
                .map(|x| format!("{x:.6}"))
                .collect::<Vec<_>>()
                .join(",")
        };
        format!(
            "y(t) = sum_m c_m cos(m pi t/T) + s_m sin(m pi t/T), m < {}, c = [{}], s = [{}] (before normalization)",
            self.cos.len(),
            fmt(&self.cos),
            fmt(&self.sin)
        )
    }
}

/// `(𝔎∗x)` at step midpoints for step-wise constant `x`.
fn convolve(weights: &[f64], x: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|n| (0..=n).map(|m| weights[m] * x[n - m]).sum())
        .collect()
}

fn report(
    assumption: AssumptionId,
    k: &Kernel,
    opts: &CheckOptions,
    estimate: f64,
    bound: Option<f64>,
    pass: bool,
) -> AssumptionReport {
    AssumptionReport {
        assumption,
        kernel: k.to_string(),
        t_final: opts.t_final,
        estimate,
        bound,
        pass,
        witness: None,
        trials: opts.trials,
        excluded_trials: 0,
        seed: opts.seed,
        structural: None,
    }
}

/// A1: `‖𝔎‖_{M(0,T)}`; the weight for a Dirac mass, the `L¹` norm otherwise.
pub fn check_a1(k: &Kernel, t_final: f64) -> Result<AssumptionReport, KernelError> {
    let opts = CheckOptions::new(t_final, 1, 0);
    opts.validate()?;
    let tv = k.total_variation(t_final)?;
    Ok(report(AssumptionId::A1, k, &opts, tv, None, tv.is_finite()))
}

/// Samples positivity and monotonicity of `𝔎` on a log grid over `[1e-6 T, T]`.
pub fn structural_scan(k: &Kernel, t_final: f64) -> Result<StructuralScan, KernelError> {
    let t_start = 1e-6 * t_final;
    if matches!(k, Kernel::Dirac { .. } | Kernel::Zero) {
        return Ok(StructuralScan {
            pass: true,
            t_start,
            t_f: None,
            reason: None,
        });
    }
    const SAMPLES: usize = 4000;
    let mut prev = f64::INFINITY;
    for i in 0..=SAMPLES {
        let t = t_start * (t_final / t_start).powf(i as f64 / SAMPLES as f64);
        let v = k.eval(t)?;
        let reason = if v < 0.0 {
            Some(format!("density {v:e} < 0"))
        } else if v > prev * (1.0 + 1e-12) {
            Some(format!("density increases from {prev:e} to {v:e}"))
        } else {
            None
        };
        if reason.is_some() {
            return Ok(StructuralScan {
                pass: false,
                t_start,
                t_f: Some(t),
                reason,
            });
        }
        prev = v;
    }
    Ok(StructuralScan {
        pass: true,
        t_start,
        t_f: None,
        reason: None,
    })
}

struct TrialOutcome {
    trial: usize,
    value: f64,
    t: f64,
    excluded: bool,
}

fn run_trials<F>(opts: &CheckOptions, f: F) -> Vec<TrialOutcome>
where
    F: Fn(usize, &[f64], &[f64]) -> TrialOutcome + Sync,
{
    let n = opts.steps;
    let h = opts.t_final / n as f64;
    (0..opts.trials)
        .into_par_iter()
        .map(|trial| {
            let sig = TestSignal::random(opts, trial);
            let nodes: Vec<f64> = (0..=n)
                .map(|i| sig.eval(i as f64 * h, opts.t_final))
                .collect();
            let mids: Vec<f64> = (0..n)
                .map(|i| sig.eval((i as f64 + 0.5) * h, opts.t_final))
                .collect();
            f(trial, &nodes, &mids)
        })
        .collect()
}

fn witness_for(opts: &CheckOptions, o: &TrialOutcome) -> Witness {
    Witness {
        trial: o.trial,
        t: o.t,
        value: o.value,
        description: TestSignal::random(opts, o.trial).describe(),
    }
}

/// A2 with `C` estimated as `max(0, -min_t I(t) / y(0)²)` over trials.
pub fn check_a2(k: &Kernel, opts: &CheckOptions) -> Result<AssumptionReport, KernelError> {
    opts.validate()?;
    let h = opts.t_final / opts.steps as f64;
    let w = staggered_weights(k, h, opts.steps)?;
    let outcomes = run_trials(opts, |trial, nodes, _| {
        let norm = l2_norm_midpoint(nodes, h);
        let y: Vec<f64> = nodes.iter().map(|v| v / norm).collect();
        let slopes: Vec<f64> = y.windows(2).map(|p| (p[1] - p[0]) / h).collect();
        let conv = convolve(&w, &slopes);
        let y0sq = y[0] * y[0];
        if y0sq < 1e-12 {
            return TrialOutcome {
                trial,
                value: 0.0,
                t: 0.0,
                excluded: true,
            };
        }
        let mut acc = 0.0;
        let mut worst = (0.0, 0.0);
        for n in 0..slopes.len() {
            acc += h * conv[n] * 0.5 * (y[n] + y[n + 1]);
            let c = -acc / y0sq;
            if c > worst.0 {
                worst = (c, (n + 1) as f64 * h);
            }
        }
        TrialOutcome {
            trial,
            value: worst.0,
            t: worst.1,
            excluded: false,
        }
    });
    let structural = structural_scan(k, opts.t_final)?;
    let bound = 0.5 * k.total_variation(opts.t_final)?;
    let excluded = outcomes.iter().filter(|o| o.excluded).count();
    let worst = outcomes
        .iter()
        .filter(|o| !o.excluded)
        .max_by(|a, b| a.value.total_cmp(&b.value));
    let estimate = worst.map_or(0.0, |o| o.value);
    let pass = structural.pass && estimate <= bound * (1.0 + 1e-8) + SIGN_TOL;
    let mut r = report(AssumptionId::A2, k, opts, estimate, Some(bound), pass);
    r.witness = worst.map(|o| witness_for(opts, o));
    r.excluded_trials = excluded;
    r.structural = Some(structural);
    Ok(r)
}

fn l2_norm_midpoint(nodes: &[f64], h: f64) -> f64 {
    let s: f64 = nodes
        .windows(2)
        .map(|p| (0.5 * (p[0] + p[1])).powi(2))
        .sum();
    (h * s).sqrt().max(f64::MIN_POSITIVE)
}

fn unit_midpoints(mids: &[f64], h: f64) -> Vec<f64> {
    let norm = (h * mids.iter().map(|v| v * v).sum::<f64>())
        .sqrt()
        .max(f64::MIN_POSITIVE);
    mids.iter().map(|v| v / norm).collect()
}

/// A3ᴷ: infimum over trials and times of `∫(𝔎∗y)y / ∫(𝔎∗y)²`.
pub fn check_a3_kuznetsov(
    k: &Kernel,
    opts: &CheckOptions,
) -> Result<AssumptionReport, KernelError> {
    opts.validate()?;
    let h = opts.t_final / opts.steps as f64;
    let w = staggered_weights(k, h, opts.steps)?;
    let outcomes = run_trials(opts, |trial, _, mids| {
        let y = unit_midpoints(mids, h);
        let conv = convolve(&w, &y);
        let (mut num, mut den) = (0.0, 0.0);
        let mut worst: Option<(f64, f64)> = None;
        for n in 0..y.len() {
            num += h * conv[n] * y[n];
            den += h * conv[n] * conv[n];
            if den < DEGENERATE_DENOMINATOR {
                continue;
            }
            let ratio = num / den;
            if worst.is_none_or(|(r, _)| ratio < r) {
                worst = Some((ratio, (n + 1) as f64 * h));
            }
        }
        match worst {
            Some((value, t)) => TrialOutcome {
                trial,
                value,
                t,
                excluded: false,
            },
            None => TrialOutcome {
                trial,
                value: f64::INFINITY,
                t: opts.t_final,
                excluded: true,
            },
        }
    });
    let excluded = outcomes.iter().filter(|o| o.excluded).count();
    let worst = outcomes
        .iter()
        .filter(|o| !o.excluded)
        .min_by(|a, b| a.value.total_cmp(&b.value));
    let estimate = worst.map_or(f64::INFINITY, |o| o.value);
    let mut r = report(
        AssumptionId::A3K,
        k,
        opts,
        estimate,
        Some(0.0),
        estimate > 0.0,
    );
    r.witness = worst.map(|o| witness_for(opts, o));
    r.excluded_trials = excluded;
    Ok(r)
}

/// A3ᴮ: minimum over trials and times of `∫(𝔎∗y)y` for unit-norm `y`.
pub fn check_a3_blackstock(
    k: &Kernel,
    opts: &CheckOptions,
) -> Result<AssumptionReport, KernelError> {
    opts.validate()?;
    let h = opts.t_final / opts.steps as f64;
    let w = staggered_weights(k, h, opts.steps)?;
    let outcomes = run_trials(opts, |trial, _, mids| {
        let y = unit_midpoints(mids, h);
        let conv = convolve(&w, &y);
        let mut acc = 0.0;
        let mut worst = (f64::INFINITY, 0.0);
        for n in 0..y.len() {
            acc += h * conv[n] * y[n];
            if acc < worst.0 {
                worst = (acc, (n + 1) as f64 * h);
            }
        }
        TrialOutcome {
            trial,
            value: worst.0,
            t: worst.1,
            excluded: false,
        }
    });
    let worst = outcomes
        .iter()
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .expect("at least one trial");
    let estimate = worst.value;
    let mut r = report(
        AssumptionId::A3B,
        k,
        opts,
        estimate,
        Some(-SIGN_TOL),
        estimate >= -SIGN_TOL,
    );
    r.witness = Some(witness_for(opts, worst));
    Ok(r)
}

/// Runs one assumption check by id.
pub fn check(
    id: AssumptionId,
    k: &Kernel,
    opts: &CheckOptions,
) -> Result<AssumptionReport, KernelError> {
    match id {
        AssumptionId::A1 => {
            let mut r = check_a1(k, opts.t_final)?;
            r.trials = opts.trials;
            r.seed = opts.seed;
            Ok(r)
        }
        AssumptionId::A2 => check_a2(k, opts),
        AssumptionId::A3K => check_a3_kuznetsov(k, opts),
        AssumptionId::A3B => check_a3_blackstock(k, opts),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> CheckOptions {
        CheckOptions::new(1.0, 32, 7)
    }

    #[test]
    fn zero_kernel() {
        let r = check_a1(&Kernel::Zero, 1.0).unwrap();
        assert_eq!(r.estimate, 0.0);
        let r = check_a2(&Kernel::Zero, &opts()).unwrap();
        assert_eq!(r.estimate, 0.0);
        assert!(r.pass);
        let r = check_a3_blackstock(&Kernel::Zero, &opts()).unwrap();
        assert_eq!(r.estimate, 0.0);
        assert!(r.pass);
        let r = check_a3_kuznetsov(&Kernel::Zero, &opts()).unwrap();
        assert!(r.estimate.is_infinite() && r.pass);
        assert_eq!(r.excluded_trials, 32);
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"estimate\":\"inf\""));
        let back: AssumptionReport = serde_json::from_str(&json).unwrap();
        assert!(back.estimate.is_infinite());
    }

    #[test]
    fn dirac_identities_are_exact() {
        let k = Kernel::dirac(0.01).unwrap();
        assert_eq!(check_a1(&k, 1.0).unwrap().estimate, 0.01);
        let r = check_a3_blackstock(&k, &opts()).unwrap();
        assert!(r.pass && r.estimate > 0.0);
        // ∫ (w y) y / ∫ (w y)² = 1/w
        let r = check_a3_kuznetsov(&k, &opts()).unwrap();
        assert!((r.estimate - 100.0).abs() < 1e-9);
        let r = check_a2(&k, &opts()).unwrap();
        assert!(r.pass);
        assert!(r.estimate <= 0.005 + 1e-15);
    }

    #[test]
    fn reports_are_deterministic() {
        let k = Kernel::abel(1.0, 0.5).unwrap();
        let a = check_a3_kuznetsov(&k, &opts()).unwrap();
        let b = check_a3_kuznetsov(&k, &opts()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn parses_ids() {
        assert_eq!("a3b".parse::<AssumptionId>().unwrap(), AssumptionId::A3B);
        assert_eq!("A3K".parse::<AssumptionId>().unwrap(), AssumptionId::A3K);
        assert!("a4".parse::<AssumptionId>().is_err());
    }
}
