//! Dimensional parameters and the reduction to `L = D = kBT = 1`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::potential::{PeriodicPotential, ScalarFn};

/// Probe points used by the period checks.
pub const PERIOD_PROBES: usize = 64;
/// Period-check tolerance, relative to the sampled amplitude.
pub const PERIOD_TOL: f64 = 1e-12;

/// A force acting on a period-1 potential, in units of `kBT / L`.
#[derive(Debug, Clone)]
pub struct DimensionlessSystem {
    pub phi: PeriodicPotential,
    pub f: f64,
}

impl DimensionlessSystem {
    pub fn new(phi: PeriodicPotential, f: f64) -> Result<Self> {
        if !f.is_finite() {
            return Err(Error::Domain(format!("force {f} is not finite")));
        }
        Ok(Self { phi, f })
    }

    pub fn free(f: f64) -> Result<Self> {
        Self::new(PeriodicPotential::flat(), f)
    }

    pub fn with_force(&self, f: f64) -> Result<Self> {
        Self::new(self.phi.clone(), f)
    }

    /// Largest `|φ(x + 1) − φ(x)|` over the probe points, using the raw
    /// (unwrapped) evaluation when one is available.
    pub fn period_defect(&self) -> f64 {
        probe_defect(|x| self.phi.eval(x), 1.0)
    }
}

fn probe_defect(phi: impl Fn(f64) -> f64, period: f64) -> f64 {
    (0..PERIOD_PROBES)
        .map(|k| {
            let x = period * (k as f64 + 0.5) / PERIOD_PROBES as f64;
            (phi(x + period) - phi(x)).abs()
        })
        .fold(0.0, f64::max)
}

fn probe_amplitude(phi: impl Fn(f64) -> f64, period: f64) -> f64 {
    (0..PERIOD_PROBES)
        .map(|k| phi(period * (k as f64 + 0.5) / PERIOD_PROBES as f64).abs())
        .fold(0.0, f64::max)
}

/// Parameters of the dimensional problem.
#[derive(Clone)]
pub struct PhysicalParams {
    /// Period `L`.
    pub length: f64,
    /// Bare diffusion constant `D`.
    pub diffusion: f64,
    pub kbt: f64,
    pub force: f64,
    /// Potential energy as a function of dimensional position.
    pub potential: ScalarFn,
    /// Its derivative, if known.
    pub potential_derivative: Option<ScalarFn>,
    /// Dimensional discontinuity locations in `[0, L)`.
    pub breakpoints: Vec<f64>,
}

impl fmt::Debug for PhysicalParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PhysicalParams")
            .field("length", &self.length)
            .field("diffusion", &self.diffusion)
            .field("kbt", &self.kbt)
            .field("force", &self.force)
            .field("breakpoints", &self.breakpoints)
            .finish_non_exhaustive()
    }
}

impl PhysicalParams {
    pub fn new(length: f64, diffusion: f64, kbt: f64, force: f64, potential: ScalarFn) -> Self {
        Self { length, diffusion, kbt, force, potential, potential_derivative: None, breakpoints: Vec::new() }
    }

    pub fn with_derivative(mut self, d: ScalarFn) -> Self {
        self.potential_derivative = Some(d);
        self
    }

    pub fn with_breakpoints(mut self, b: Vec<f64>) -> Self {
        self.breakpoints = b;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("L", self.length), ("D", self.diffusion), ("kBT", self.kbt)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!("{name} = {v} must be positive and finite")));
            }
        }
        if !self.force.is_finite() {
            return Err(Error::Domain(format!("force {} is not finite", self.force)));
        }
        let defect = probe_defect(|x| (self.potential)(x), self.length);
        let amplitude = probe_amplitude(|x| (self.potential)(x), self.length);
        if defect > PERIOD_TOL * amplitude {
            return Err(Error::Domain(format!(
                "potential is not {}-periodic: |φ(x+L) − φ(x)| reaches {defect:e}",
                self.length
            )));
        }
        Ok(())
    }

    pub fn scales(&self) -> Scales {
        Scales { length: self.length, time: self.length * self.length / self.diffusion, energy: self.kbt }
    }
}

/// Units that map dimensionless results back: `x = L x̃`, `t = (L²/D) t̃`,
/// energies in `kBT`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scales {
    pub length: f64,
    pub time: f64,
    pub energy: f64,
}

/// `φ̃(x̃) = φ(L x̃)/kBT`, `f̃ = f L/kBT`.
pub fn nondimensionalize(p: &PhysicalParams) -> Result<(DimensionlessSystem, Scales)> {
    p.validate()?;
    let (l, kbt) = (p.length, p.kbt);
    let phi = p.potential.clone();
    let value: ScalarFn = Arc::new(move |x| phi(l * x) / kbt);
    let derivative: Option<ScalarFn> = p.potential_derivative.clone().map(|d| {
        let g: ScalarFn = Arc::new(move |x| l * d(l * x) / kbt);
        g
    });
    let mut bps: Vec<f64> = p.breakpoints.iter().map(|b| crate::potential::wrap(b / l)).collect();
    bps.sort_by(f64::total_cmp);
    bps.dedup();
    let potential = PeriodicPotential::custom(value, derivative, bps)?;
    let sys = DimensionlessSystem::new(potential, p.force * l / kbt)?;
    Ok((sys, p.scales()))
}

/// `V = ṽ D/L`, `D_eff = d̃ D`.
pub fn redimensionalize(v_tilde: f64, d_tilde: f64, p: &PhysicalParams) -> Result<(f64, f64)> {
    for (name, v) in [("L", p.length), ("D", p.diffusion), ("kBT", p.kbt)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Domain(format!("{name} = {v} must be positive and finite")));
        }
    }
    Ok((v_tilde * p.diffusion / p.length, d_tilde * p.diffusion))
}
