//! Period-1 potentials in units of the thermal energy.
//!
//! Every evaluation wraps its argument into `[0, 1)` first, so callers can
//! pass unwrapped trajectory positions directly. Discontinuities and kinks
//! are recorded as breakpoints; the quadrature and PDE layers align their
//! grids to them.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{refine_until_converged, Extrapolation, QuadratureConfig};
use crate::spectral::TrigInterpolant;

/// Shared scalar function, used for custom potentials.
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// JSON description of a built-in potential family.
///
/// `{"kind": "cosine", "A": 1.0}`, `{"kind": "piecewise_const", "A": 2.0}`,
/// `{"kind": "sawtooth", "A": 1.0, "alpha": 0.25}`,
/// `{"kind": "tabulated", "samples": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    Cosine {
        #[serde(rename = "A")]
        amplitude: f64,
    },
    PiecewiseConst {
        #[serde(rename = "A")]
        amplitude: f64,
    },
    Sawtooth {
        #[serde(rename = "A")]
        amplitude: f64,
        alpha: f64,
    },
    Tabulated {
        samples: Vec<f64>,
        /// Optional declared discontinuities; switches to linear interpolation.
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        breakpoints: Vec<f64>,
    },
}

#[derive(Clone)]
enum Repr {
    Cosine { amplitude: f64 },
    PiecewiseConst { amplitude: f64 },
    Sawtooth { amplitude: f64, peak: f64 },
    Tabulated { samples: Arc<[f64]>, interp: Option<Arc<TrigInterpolant>> },
    Custom { value: ScalarFn, derivative: Option<ScalarFn> },
}

/// A period-1 potential with value, derivative and breakpoint metadata.
#[derive(Clone)]
pub struct PeriodicPotential {
    repr: Repr,
    breakpoints: Vec<f64>,
}

impl fmt::Debug for PeriodicPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PeriodicPotential")
            .field("kind", &self.kind_name())
            .field("spec", &self.spec())
            .field("breakpoints", &self.breakpoints)
            .finish()
    }
}

/// Reduce `x` to `[0, 1)`. Exact: `%` on floats does not round.
pub fn wrap(x: f64) -> f64 {
    let r = x % 1.0;
    let r = if r < 0.0 { r + 1.0 } else { r };
    // r + 1.0 rounds to 1.0 for |r| below half an ulp of one
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

fn prev_float(x: f64) -> f64 {
    x.next_down()
}

fn normalise_breakpoints(mut bps: Vec<f64>) -> Result<Vec<f64>> {
    for b in bps.iter_mut() {
        if !b.is_finite() {
            return Err(Error::Domain(format!("breakpoint {b} is not finite")));
        }
        *b = wrap(*b);
    }
    bps.sort_by(f64::total_cmp);
    bps.dedup();
    Ok(bps)
}

impl PeriodicPotential {
    /// `A·cos(2πx)`.
    pub fn cosine(amplitude: f64) -> Self {
        Self { repr: Repr::Cosine { amplitude }, breakpoints: Vec::new() }
    }

    /// The free particle, `φ ≡ 0`.
    pub fn flat() -> Self {
        Self::cosine(0.0)
    }

    /// `−A` on `[0, 0.5)`, `+A` on `[0.5, 1)`.
    pub fn piecewise_const(amplitude: f64) -> Self {
        Self { repr: Repr::PiecewiseConst { amplitude }, breakpoints: vec![0.0, 0.5] }
    }

    /// Continuous piecewise-linear: 0 at `x = 0`, peak `A` at `x = alpha`.
    pub fn sawtooth(amplitude: f64, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Domain(format!("sawtooth asymmetry {alpha} outside (0, 1)")));
        }
        Ok(Self { repr: Repr::Sawtooth { amplitude, peak: alpha }, breakpoints: vec![0.0, alpha] })
    }

    /// Uniform samples at `i/N`. Trigonometric interpolation when smooth,
    /// linear interpolation when breakpoints are declared.
    pub fn tabulated(samples: Vec<f64>, breakpoints: Vec<f64>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::Domain("tabulated potential needs at least 2 samples".into()));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("tabulated samples must be finite".into()));
        }
        let breakpoints = normalise_breakpoints(breakpoints)?;
        let interp = breakpoints.is_empty().then(|| Arc::new(TrigInterpolant::new(&samples)));
        Ok(Self { repr: Repr::Tabulated { samples: samples.into(), interp }, breakpoints })
    }

    /// Arbitrary period-1 potential. `value` receives arguments in `[0, 1)`.
    pub fn custom(value: ScalarFn, derivative: Option<ScalarFn>, breakpoints: Vec<f64>) -> Result<Self> {
        Ok(Self { repr: Repr::Custom { value, derivative }, breakpoints: normalise_breakpoints(breakpoints)? })
    }

    pub fn from_spec(spec: &PotentialSpec) -> Result<Self> {
        let finite = |a: f64| {
            if a.is_finite() {
                Ok(a)
            } else {
                Err(Error::Domain(format!("amplitude {a} is not finite")))
            }
        };
        match spec {
            PotentialSpec::Cosine { amplitude } => Ok(Self::cosine(finite(*amplitude)?)),
            PotentialSpec::PiecewiseConst { amplitude } => Ok(Self::piecewise_const(finite(*amplitude)?)),
            PotentialSpec::Sawtooth { amplitude, alpha } => Self::sawtooth(finite(*amplitude)?, *alpha),
            PotentialSpec::Tabulated { samples, breakpoints } => Self::tabulated(samples.clone(), breakpoints.clone()),
        }
    }

    /// The JSON description, or `None` for custom potentials.
    pub fn spec(&self) -> Option<PotentialSpec> {
        Some(match &self.repr {
            Repr::Cosine { amplitude } => PotentialSpec::Cosine { amplitude: *amplitude },
            Repr::PiecewiseConst { amplitude } => PotentialSpec::PiecewiseConst { amplitude: *amplitude },
            Repr::Sawtooth { amplitude, peak } => PotentialSpec::Sawtooth { amplitude: *amplitude, alpha: *peak },
            Repr::Tabulated { samples, .. } => {
                PotentialSpec::Tabulated { samples: samples.to_vec(), breakpoints: self.breakpoints.clone() }
            }
            Repr::Custom { .. } => return None,
        })
    }

    pub fn kind_name(&self) -> &'static str {
        match self.repr {
            Repr::Cosine { .. } => "cosine",
            Repr::PiecewiseConst { .. } => "piecewise_const",
            Repr::Sawtooth { .. } => "sawtooth",
            Repr::Tabulated { .. } => "tabulated",
            Repr::Custom { .. } => "custom",
        }
    }

    /// Sorted discontinuity/kink locations in `[0, 1)`.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn is_smooth(&self) -> bool {
        self.breakpoints.is_empty()
    }

    pub fn has_derivative(&self) -> bool {
        match &self.repr {
            Repr::PiecewiseConst { .. } => false,
            Repr::Custom { derivative, .. } => derivative.is_some(),
            _ => true,
        }
    }

    /// `φ(x mod 1)`.
    pub fn eval(&self, x: f64) -> f64 {
        self.value_wrapped(wrap(x))
    }

    fn value_wrapped(&self, x: f64) -> f64 {
        match &self.repr {
            Repr::Cosine { amplitude } => amplitude * (2.0 * PI * x).cos(),
            Repr::PiecewiseConst { amplitude } => {
                if x < 0.5 {
                    -amplitude
                } else {
                    *amplitude
                }
            }
            Repr::Sawtooth { amplitude, peak } => {
                if x < *peak {
                    amplitude * x / peak
                } else {
                    amplitude * (1.0 - x) / (1.0 - peak)
                }
            }
            Repr::Tabulated { samples, interp } => {
                let n = samples.len();
                let pos = x * n as f64;
                let i = pos.floor() as usize % n;
                let frac = pos - pos.floor();
                if frac == 0.0 {
                    return samples[i];
                }
                match interp {
                    Some(trig) => trig.value(x),
                    None => samples[i] + frac * (samples[(i + 1) % n] - samples[i]),
                }
            }
            Repr::Custom { value, .. } => value(x),
        }
    }

    fn breakpoint_at(&self, x: f64) -> bool {
        self.breakpoints.contains(&x)
    }

    /// One-sided limits `(φ(x⁻), φ(x⁺))`. Equal except at jump discontinuities.
    pub fn limits(&self, x: f64) -> (f64, f64) {
        let x = wrap(x);
        match &self.repr {
            Repr::PiecewiseConst { amplitude } => {
                if x == 0.0 {
                    (*amplitude, -amplitude)
                } else if x == 0.5 {
                    (-amplitude, *amplitude)
                } else {
                    let v = self.value_wrapped(x);
                    (v, v)
                }
            }
            Repr::Custom { value, .. } if self.breakpoint_at(x) => {
                let left = if x == 0.0 { prev_float(1.0) } else { prev_float(x) };
                (value(left), value(x))
            }
            _ => {
                let v = self.value_wrapped(x);
                (v, v)
            }
        }
    }

    /// `φ′(x mod 1)`; fails at breakpoints or when no derivative exists.
    pub fn eval_derivative(&self, x: f64) -> Result<f64> {
        let w = wrap(x);
        if !self.has_derivative() || self.breakpoint_at(w) {
            return Err(Error::NonDifferentiable { x });
        }
        self.slope_wrapped(w).ok_or(Error::NonDifferentiable { x })
    }

    /// Right-sided slope, defined at kinks too. Used by the Langevin drift,
    /// where breakpoints are hit with probability zero.
    pub(crate) fn right_slope(&self, x: f64) -> Option<f64> {
        self.slope_wrapped(wrap(x))
    }

    fn slope_wrapped(&self, x: f64) -> Option<f64> {
        match &self.repr {
            Repr::Cosine { amplitude } => Some(-2.0 * PI * amplitude * (2.0 * PI * x).sin()),
            Repr::PiecewiseConst { .. } => None,
            Repr::Sawtooth { amplitude, peak } => {
                Some(if x < *peak { amplitude / peak } else { -amplitude / (1.0 - peak) })
            }
            Repr::Tabulated { samples, interp } => match interp {
                Some(trig) => Some(trig.derivative(x)),
                None => {
                    let n = samples.len();
                    let i = (x * n as f64).floor() as usize % n;
                    Some((samples[(i + 1) % n] - samples[i]) * n as f64)
                }
            },
            Repr::Custom { derivative, .. } => derivative.as_ref().map(|d| d(x)),
        }
    }

    /// Largest second derivative magnitude, when cheaply known.
    pub(crate) fn curvature_bound(&self) -> Option<f64> {
        match &self.repr {
            Repr::Cosine { amplitude } => Some(4.0 * PI * PI * amplitude.abs()),
            Repr::Sawtooth { .. } => Some(0.0),
            _ => None,
        }
    }

    /// `∫₀¹ (φ′)² dx` by periodic trapezoid, doubled until the relative
    /// change drops below `cfg.rel_tol`. Requires a smooth potential.
    pub fn grad_squared_integral(&self, cfg: &QuadratureConfig) -> Result<f64> {
        if !self.is_smooth() {
            return Err(Error::AsymptoteInapplicable(format!(
                "{} potential has breakpoints; ∫(φ′)² needs a smooth potential",
                self.kind_name()
            )));
        }
        if !self.has_derivative() {
            return Err(Error::AsymptoteInapplicable(format!("{} potential has no derivative", self.kind_name())));
        }
        cfg.validate()?;
        let refined = refine_until_converged(cfg.n_grid, cfg, Extrapolation::None, |n| {
            let mut total = Vec::with_capacity(n);
            for i in 0..n {
                let d = self.eval_derivative(i as f64 / n as f64)?;
                total.push(d * d);
            }
            Ok((vec![crate::par::compensated_sum(total) / n as f64], ()))
        })?;
        Ok(refined.values[0])
    }

    /// Whether `φ(x) = φ(−x)` at a set of probe points.
    pub fn is_even(&self, tol: f64) -> bool {
        (0..64).all(|k| {
            let x = (k as f64 + 0.37) / 64.0;
            (self.eval(x) - self.eval(-x)).abs() <= tol
        })
    }
}
