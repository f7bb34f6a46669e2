//! Memory kernels `𝔎` and the operations the solver and the limit harness need:
//! pointwise density, exact first antiderivative `(𝔎∗1)(t)`, limit kernels,
//! `L¹(0,T)` distances between antiderivatives and product-integration weights.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quad::{self, QuadError, Tolerance};
use crate::special_fn::{self, rgamma, MLParams, SpecialFnError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("invalid kernel parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("{op} is not defined for the {variant} kernel")]
    Unsupported {
        op: &'static str,
        variant: &'static str,
    },
    #[error("no {regime} limit for {kernel}: {reason}")]
    UnsupportedLimit {
        regime: LimitRegime,
        kernel: String,
        reason: &'static str,
    },
    #[error("quadrature distance {quadrature:e} disagrees with closed form {closed_form:e}")]
    ClosedFormMismatch { quadrature: f64, closed_form: f64 },
    #[error("cannot parse kernel {input:?}: {reason}")]
    Parse { input: String, reason: String },
    #[error(transparent)]
    Special(#[from] SpecialFnError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

pub type Result<T> = std::result::Result<T, KernelError>;

/// A memory kernel. `Dirac` has no pointwise density; `Harmonic`
/// (`A cos(ωt + φ)`) is a sign-indefinite test kernel, not a physical one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Kernel {
    Zero,
    Dirac {
        weight: f64,
    },
    /// `coeff · t^{order-1} / Γ(order)`
    Abel {
        coeff: f64,
        order: f64,
    },
    /// `δ (τ_θ/τ)^{a-b} τ^{-b} t^{b-1} E_{a,b}(-(t/τ)^a)`
    MittagLeffler {
        delta: f64,
        tau: f64,
        tau_theta: f64,
        a: f64,
        b: f64,
    },
    Harmonic {
        amplitude: f64,
        frequency: f64,
        phase: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitRegime {
    VanishingDiffusivity,
    VanishingRelaxation,
}

impl fmt::Display for LimitRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::VanishingDiffusivity => "vanishing_diffusivity",
            Self::VanishingRelaxation => "vanishing_relaxation",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GfeLaw {
    #[serde(rename = "gfe1")]
    GfeI,
    #[serde(rename = "gfe2")]
    GfeII,
    #[serde(rename = "gfe3")]
    GfeIII,
    #[serde(rename = "gfe")]
    Gfe,
}

/// Fractional heat-flux law selecting the Mittag-Leffler orders.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxLaw {
    pub law: GfeLaw,
    pub alpha: f64,
}

impl FluxLaw {
    pub fn new(law: GfeLaw, alpha: f64) -> Result<Self> {
        let lower = if law == GfeLaw::GfeI { 0.5 } else { 0.0 };
        if !(alpha > lower && alpha < 1.0) {
            return Err(KernelError::InvalidParameter {
                name: "alpha",
                value: alpha,
                reason: if law == GfeLaw::GfeI {
                    "GFE I needs alpha in (1/2, 1)"
                } else {
                    "alpha must lie in (0, 1)"
                },
            });
        }
        Ok(Self { law, alpha })
    }

    /// Mittag-Leffler orders `(a, b)`.
    pub fn orders(&self) -> (f64, f64) {
        let al = self.alpha;
        match self.law {
            GfeLaw::GfeI => (al, 2.0 * al - 1.0),
            GfeLaw::GfeII => (al, 1.0),
            GfeLaw::GfeIII => (1.0, al),
            GfeLaw::Gfe => (al, al),
        }
    }
}

pub fn kernel_from_flux_law(f: FluxLaw, delta: f64, tau: f64, tau_theta: f64) -> Result<Kernel> {
    let f = FluxLaw::new(f.law, f.alpha)?;
    let (a, b) = f.orders();
    Kernel::mittag_leffler(delta, tau, tau_theta, a, b)
}

fn require(cond: bool, name: &'static str, value: f64, reason: &'static str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(KernelError::InvalidParameter {
            name,
            value,
            reason,
        })
    }
}

impl Kernel {
    pub fn dirac(weight: f64) -> Result<Self> {
        let k = Self::Dirac { weight };
        k.validate()?;
        Ok(k)
    }

    pub fn abel(coeff: f64, order: f64) -> Result<Self> {
        let k = Self::Abel { coeff, order };
        k.validate()?;
        Ok(k)
    }

    pub fn mittag_leffler(delta: f64, tau: f64, tau_theta: f64, a: f64, b: f64) -> Result<Self> {
        let k = Self::MittagLeffler {
            delta,
            tau,
            tau_theta,
            a,
            b,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn harmonic(amplitude: f64, frequency: f64, phase: f64) -> Result<Self> {
        let k = Self::Harmonic {
            amplitude,
            frequency,
            phase,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Zero => Ok(()),
            Self::Dirac { weight } => require(
                weight.is_finite() && weight >= 0.0,
                "weight",
                weight,
                "must be finite and >= 0",
            ),
            Self::Abel { coeff, order } => {
                require(
                    coeff.is_finite() && coeff >= 0.0,
                    "coeff",
                    coeff,
                    "must be finite and >= 0",
                )?;
                require(
                    order > 0.0 && order < 1.0,
                    "order",
                    order,
                    "must lie in (0, 1)",
                )
            }
            Self::MittagLeffler {
                delta,
                tau,
                tau_theta,
                a,
                b,
            } => {
                require(
                    delta.is_finite() && delta > 0.0,
                    "delta",
                    delta,
                    "must be > 0",
                )?;
                require(tau.is_finite() && tau > 0.0, "tau", tau, "must be > 0")?;
                require(
                    tau_theta.is_finite() && tau_theta > 0.0,
                    "tau_theta",
                    tau_theta,
                    "must be > 0",
                )?;
                require(a > 0.0 && a <= 1.0, "a", a, "must lie in (0, 1]")?;
                require(b > 0.0 && b <= 1.0, "b", b, "must lie in (0, 1]")
            }
            Self::Harmonic {
                amplitude,
                frequency,
                phase,
            } => {
                require(
                    amplitude.is_finite(),
                    "amplitude",
                    amplitude,
                    "must be finite",
                )?;
                require(
                    frequency.is_finite() && frequency > 0.0,
                    "frequency",
                    frequency,
                    "must be > 0",
                )?;
                require(phase.is_finite(), "phase", phase, "must be finite")
            }
        }
    }

    pub fn variant_name(&self) -> &'static str {
        match self {
            Self::Zero => "zero",
            Self::Dirac { .. } => "dirac",
            Self::Abel { .. } => "abel",
            Self::MittagLeffler { .. } => "mittag_leffler",
            Self::Harmonic { .. } => "harmonic",
        }
    }

    /// Whether the density is nonnegative on all of `(0, ∞)`. Mittag-Leffler
    /// kernels with `a > b` turn negative at large times
    /// (`E_{a,b}(-x) ~ 1/(Γ(b-a) x)` with `Γ(b-a) < 0`).
    pub fn is_nonnegative(&self) -> bool {
        match *self {
            Self::Harmonic { .. } => false,
            Self::MittagLeffler { a, b, .. } => a <= b,
            _ => true,
        }
    }

    /// `ε · 𝔎`.
    pub fn scale(&self, eps: f64) -> Self {
        match *self {
            Self::Zero => Self::Zero,
            Self::Dirac { weight } => Self::Dirac {
                weight: weight * eps,
            },
            Self::Abel { coeff, order } => Self::Abel {
                coeff: coeff * eps,
                order,
            },
            Self::MittagLeffler {
                delta,
                tau,
                tau_theta,
                a,
                b,
            } => Self::MittagLeffler {
                delta: delta * eps,
                tau,
                tau_theta,
                a,
                b,
            },
            Self::Harmonic {
                amplitude,
                frequency,
                phase,
            } => Self::Harmonic {
                amplitude: amplitude * eps,
                frequency,
                phase,
            },
        }
    }

    /// Pointwise density at `t > 0`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(KernelError::InvalidParameter {
                name: "t",
                value: t,
                reason: "kernel density is evaluated at t > 0",
            });
        }
        match *self {
            Self::Zero => Ok(0.0),
            Self::Dirac { .. } => Err(KernelError::Unsupported {
                op: "pointwise evaluation",
                variant: "dirac",
            }),
            Self::Abel { coeff, order } => Ok(coeff * t.powf(order - 1.0) * rgamma(order)),
            Self::MittagLeffler {
                delta,
                tau,
                tau_theta,
                a,
                b,
            } => {
                let pre = delta * (tau_theta / tau).powf(a - b) * tau.powf(-b);
                let e = special_fn::mittag_leffler(MLParams::new(a, b)?, -(t / tau).powf(a))?;
                Ok(pre * t.powf(b - 1.0) * e)
            }
            Self::Harmonic {
                amplitude,
                frequency,
                phase,
            } => Ok(amplitude * (frequency * t + phase).cos()),
        }
    }

    /// `(𝔎∗1)(t) = ∫_0^t 𝔎(s) ds`, zero for `t ≤ 0`.
    pub fn conv_one(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Ok(0.0);
        }
        match *self {
            Self::Zero => Ok(0.0),
            Self::Dirac { weight } => Ok(weight),
            Self::Abel { coeff, order } => Ok(coeff * t.powf(order) * rgamma(order + 1.0)),
            Self::MittagLeffler {
                delta,
                tau,
                tau_theta,
                a,
                b,
            } => {
                let s = t / tau;
                let e = special_fn::mittag_leffler(MLParams::new(a, b + 1.0)?, -s.powf(a))?;
                Ok(delta * (tau_theta / tau).powf(a - b) * s.powf(b) * e)
            }
            Self::Harmonic {
                amplitude,
                frequency,
                phase,
            } => {
                // sin(ωt+φ) - sin φ = 2 cos(ωt/2 + φ) sin(ωt/2)
                let h = 0.5 * frequency * t;
                Ok(amplitude * 2.0 * (h + phase).cos() * h.sin() / frequency)
            }
        }
    }

    /// `ε → 0` limit of the family this kernel belongs to.
    pub fn limit_kernel(&self, regime: LimitRegime) -> Result<Kernel> {
        match regime {
            LimitRegime::VanishingDiffusivity => Ok(Kernel::Zero),
            LimitRegime::VanishingRelaxation => match *self {
                Self::MittagLeffler {
                    delta,
                    tau_theta,
                    a,
                    b,
                    ..
                } => {
                    if a < b {
                        Kernel::abel(delta * tau_theta.powf(a - b), b - a)
                    } else if a == b {
                        Kernel::dirac(delta)
                    } else {
                        Err(KernelError::UnsupportedLimit {
                            regime,
                            kernel: self.to_string(),
                            reason: "requires a <= b",
                        })
                    }
                }
                _ => Err(KernelError::UnsupportedLimit {
                    regime,
                    kernel: self.to_string(),
                    reason: "only Mittag-Leffler kernels have a relaxation parameter",
                }),
            },
        }
    }

    /// Total variation norm on `(0, T)`.
    pub fn total_variation(&self, t_final: f64) -> Result<f64> {
        match *self {
            Self::Harmonic { .. } => Ok(quad::integrate_with_breaks(
                |t| self.eval(t).map_or(f64::NAN, f64::abs),
                0.0,
                t_final,
                &self.sign_breaks(t_final),
                Tolerance::new(1e-13, 1e-11),
            )?
            .value),
            Self::Dirac { weight } => Ok(weight),
            _ => self.conv_one(t_final),
        }
    }

    fn sign_breaks(&self, t_final: f64) -> Vec<f64> {
        let Self::Harmonic {
            frequency, phase, ..
        } = *self
        else {
            return Vec::new();
        };
        // zeros of cos(ωt+φ)
        let period = std::f64::consts::PI / frequency;
        let first = (std::f64::consts::FRAC_PI_2 - phase) / frequency;
        let shift = (-first / period).ceil();
        let mut t = first + shift * period;
        let mut out = Vec::new();
        while t < t_final {
            if t > 0.0 {
                out.push(t);
            }
            t += period;
        }
        out
    }
}

/// `δ τ_θ^{a-b} T^{1+b-a} E_{a,2+b-a}(-(T/τ)^a)`: the `L¹(0,T)` distance between
/// `(𝔎∗1)` of a Mittag-Leffler kernel with `a ≤ b` and that of its relaxation limit.
pub fn relaxation_distance_closed_form(k: &Kernel, t_final: f64) -> Result<f64> {
    let Kernel::MittagLeffler {
        delta,
        tau,
        tau_theta,
        a,
        b,
    } = *k
    else {
        return Err(KernelError::Unsupported {
            op: "relaxation distance closed form",
            variant: k.variant_name(),
        });
    };
    if a > b {
        return Err(KernelError::UnsupportedLimit {
            regime: LimitRegime::VanishingRelaxation,
            kernel: k.to_string(),
            reason: "requires a <= b",
        });
    }
    let e = special_fn::mittag_leffler(MLParams::new(a, 2.0 + b - a)?, -(t_final / tau).powf(a))?;
    Ok(delta * tau_theta.powf(a - b) * t_final.powf(1.0 + b - a) * e)
}

const DISTANCE_TOL: Tolerance = Tolerance {
    abs: 1e-10,
    rel: 1e-8,
    max_intervals: 4000,
};

/// `‖(k1 - k2)∗1‖_{L¹(0,T)}` by adaptive quadrature. For a Mittag-Leffler
/// kernel paired with its relaxation limit the closed form is evaluated too
/// and must agree to 1e-6 relative.
pub fn kernel_distance(k1: &Kernel, k2: &Kernel, t_final: f64) -> Result<f64> {
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(KernelError::InvalidParameter {
            name: "T",
            value: t_final,
            reason: "must be finite and > 0",
        });
    }
    if k1 == k2 {
        return Ok(0.0);
    }
    let mut failure = None;
    let integrand = |t: f64| match (k1.conv_one(t), k2.conv_one(t)) {
        (Ok(x), Ok(y)) => (x - y).abs(),
        (Err(e), _) | (_, Err(e)) => {
            failure.get_or_insert(e);
            0.0
        }
    };
    // geometric breaks resolve the t^β behaviour at the origin
    let mut breaks: Vec<f64> = (1..=12).map(|j| t_final * 0.1f64.powi(j)).collect();
    breaks.extend(k1.sign_breaks(t_final));
    breaks.extend(k2.sign_breaks(t_final));
    for k in [k1, k2] {
        if let Kernel::MittagLeffler { tau, .. } = *k {
            breaks.extend([tau, 10.0 * tau, 0.1 * tau]);
        }
    }
    let res = quad::integrate_with_breaks(integrand, 0.0, t_final, &breaks, DISTANCE_TOL);
    if let Some(e) = failure {
        return Err(e);
    }
    let value = res?.value;

    if let Some(ml) = relaxation_pair(k1, k2) {
        let closed = relaxation_distance_closed_form(&ml, t_final)?;
        if (value - closed).abs() > 1e-6 * closed.abs().max(1e-300) {
            return Err(KernelError::ClosedFormMismatch {
                quadrature: value,
                closed_form: closed,
            });
        }
    }
    Ok(value)
}

fn relaxation_pair(k1: &Kernel, k2: &Kernel) -> Option<Kernel> {
    for (ml, other) in [(k1, k2), (k2, k1)] {
        if let Kernel::MittagLeffler { a, b, .. } = *ml {
            if a <= b {
                if let Ok(limit) = ml.limit_kernel(LimitRegime::VanishingRelaxation) {
                    if limit == *other {
                        return Some(*ml);
                    }
                }
            }
        }
    }
    None
}

/// `w_j = (𝔎∗1)(t_n - t_j) - (𝔎∗1)(t_n - t_{j+1})`, `j = 0..n-1`: exact
/// integrals of the kernel over each history interval.
pub fn quadrature_weights(k: &Kernel, dt: f64, n: usize) -> Result<Vec<f64>> {
    if let Kernel::Dirac { .. } = k {
        return Err(KernelError::Unsupported {
            op: "quadrature weights",
            variant: "dirac",
        });
    }
    check_dt(dt)?;
    let c = (0..=n)
        .map(|m| k.conv_one(m as f64 * dt))
        .collect::<Result<Vec<_>>>()?;
    Ok((0..n).map(|j| c[n - j] - c[n - j - 1]).collect())
}

/// Product-integration weights for a memory term evaluated at the
/// half step `t_{n+1/2}` with piecewise-constant history values on each
/// interval: `W_0 = (𝔎∗1)(dt/2)` for the current interval and
/// `W_m = (𝔎∗1)((m+½)dt) - (𝔎∗1)((m-½)dt)` for the interval `m` steps back.
/// A Dirac kernel puts its whole weight on the current interval.
pub fn staggered_weights(k: &Kernel, dt: f64, len: usize) -> Result<Vec<f64>> {
    check_dt(dt)?;
    if let Kernel::Dirac { weight } = *k {
        let mut w = vec![0.0; len];
        if let Some(w0) = w.first_mut() {
            *w0 = weight;
        }
        return Ok(w);
    }
    let mut prev = 0.0;
    let mut out = Vec::with_capacity(len);
    for m in 0..len {
        let c = k.conv_one((m as f64 + 0.5) * dt)?;
        out.push(c - prev);
        prev = c;
    }
    Ok(out)
}

fn check_dt(dt: f64) -> Result<()> {
    require(
        dt.is_finite() && dt > 0.0,
        "dt",
        dt,
        "must be finite and > 0",
    )
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::Zero => write!(f, "zero"),
            Self::Dirac { weight } => write!(f, "dirac:{weight}"),
            Self::Abel { coeff, order } => write!(f, "abel:{coeff},{order}"),
            Self::MittagLeffler {
                delta,
                tau,
                tau_theta,
                a,
                b,
            } => write!(f, "ml:{delta},{tau},{tau_theta},{a},{b}"),
            Self::Harmonic {
                amplitude,
                frequency,
                phase,
            } => write!(f, "harmonic:{amplitude},{frequency},{phase}"),
        }
    }
}

/// Parses `zero`, `dirac:w`, `abel:c,order`, `ml:delta,tau,tau_theta,a,b`,
/// `harmonic:A,omega,phase` and the flux-law shorthands
/// `gfe1|gfe2|gfe3|gfe:alpha,delta,tau,tau_theta`.
impl FromStr for Kernel {
    type Err = KernelError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |reason: String| KernelError::Parse {
            input: s.to_string(),
            reason,
        };
        let s_trim = s.trim();
        let (name, rest) = s_trim.split_once(':').unwrap_or((s_trim, ""));
        let nums: Vec<f64> = if rest.trim().is_empty() {
            Vec::new()
        } else {
            rest.split(',')
                .map(|x| {
                    x.trim()
                        .parse::<f64>()
                        .map_err(|e| bad(format!("{x:?}: {e}")))
                })
                .collect::<Result<_>>()?
        };
        let arity = |n: usize| {
            if nums.len() == n {
                Ok(())
            } else {
                Err(bad(format!(
                    "{name} takes {n} parameters, got {}",
                    nums.len()
                )))
            }
        };
        let law = match name.to_ascii_lowercase().as_str() {
            "zero" => {
                arity(0)?;
                return Ok(Kernel::Zero);
            }
            "dirac" => {
                arity(1)?;
                return Kernel::dirac(nums[0]);
            }
            "abel" => {
                arity(2)?;
                return Kernel::abel(nums[0], nums[1]);
            }
            "ml" | "mittag_leffler" => {
                arity(5)?;
                return Kernel::mittag_leffler(nums[0], nums[1], nums[2], nums[3], nums[4]);
            }
            "harmonic" => {
                arity(3)?;
                return Kernel::harmonic(nums[0], nums[1], nums[2]);
            }
            "gfe1" => GfeLaw::GfeI,
            "gfe2" => GfeLaw::GfeII,
            "gfe3" => GfeLaw::GfeIII,
            "gfe" => GfeLaw::Gfe,
            other => return Err(bad(format!("unknown family {other:?}"))),
        };
        arity(4)?;
        kernel_from_flux_law(FluxLaw::new(law, nums[0])?, nums[1], nums[2], nums[3])
    }
}
