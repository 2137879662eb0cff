//! Finite-volume evolution of the folded moments `ρ₀, ρ₁, ρ₂` on the cell.
//!
//! Each moment obeys the same Fokker–Planck operator; only the boundary
//! twist differs: `ρ₁(x+1) = ρ₁(x) − ρ₀(x)`, `ρ₂(x+1) = ρ₂(x) − 2ρ₁(x) + ρ₀(x)`.
//! Face fluxes use exponential fitting: with `ψ = φ − fx` the constant flux
//! between nodes `i` and `i+1` is
//! `(e^{ψᵢ}ρᵢ − e^{ψᵢ₊₁}ρᵢ₊₁) / ∫ e^{ψ}`, so drift needs no pointwise `φ′` and
//! jumps sitting on nodes are handled exactly. Time stepping is explicit
//! Euler.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nondim::DimensionlessSystem;
use crate::par::{compensated_sum, Execution};
use crate::quad::{resolve_grid, CellDiscretization, CellGrid, QuadratureConfig};
use crate::stats::ls_slope;
use crate::transport::{compute_profiles, compute_u0_nodes, compute_velocity};

const GL8_NODES: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL8_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_3,
    0.222_381_034_453_374_5,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FpeConfig {
    /// Cells per period; a power of two, at least 16.
    pub n: usize,
    /// Requested step; must not exceed `0.4/n²`. The solver may take a
    /// smaller step where the fitted coefficients demand it.
    pub dt: f64,
    pub t_final: f64,
    /// Trailing fraction of the horizon used for slope fits.
    pub slope_window: f64,
    /// Steps between recorded samples; 0 picks about 400 samples.
    pub record_every: usize,
}

impl FpeConfig {
    pub fn new(n: usize, t_final: f64) -> Self {
        Self { n, dt: 0.4 / (n * n) as f64, t_final, slope_window: 0.5, record_every: 0 }
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n < 16 || !self.n.is_power_of_two() {
            return bad(format!("n = {} must be a power of two ≥ 16", self.n));
        }
        let limit = 0.4 * self.h() * self.h();
        if !(self.dt > 0.0 && self.dt <= limit * (1.0 + 1e-12)) {
            return bad(format!("dt = {} must lie in (0, 0.4/n² = {limit}]", self.dt));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return bad(format!("t_final = {} must be positive", self.t_final));
        }
        if !(self.slope_window > 0.0 && self.slope_window <= 1.0) {
            return bad(format!("slope_window = {} must lie in (0, 1]", self.slope_window));
        }
        Ok(())
    }
}

/// Folded moments on the node grid `x_i = i/n`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentState {
    pub n: usize,
    pub rho0: CellGrid,
    pub rho1: CellGrid,
    pub rho2: CellGrid,
    pub t: f64,
    pub steps: u64,
}

impl MomentState {
    pub fn mass(&self) -> f64 {
        self.rho0.integral()
    }

    pub fn int_rho1(&self) -> f64 {
        self.rho1.integral()
    }

    pub fn centered_second_moment(&self) -> f64 {
        let m1 = self.int_rho1();
        self.rho2.integral() - m1 * m1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistoryRow {
    pub t: f64,
    pub int_rho1: f64,
    pub centered_second_moment: f64,
    /// `∫ u₀ (ρ₀/u₀ − 1)²`.
    pub e_lyapunov: f64,
}

#[derive(Debug, Clone)]
pub struct FpeRun {
    pub v_fpe: f64,
    pub deff_fpe: f64,
    pub history: Vec<HistoryRow>,
    pub state: MomentState,
    /// Step actually taken.
    pub dt: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LyapunovTrace {
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    /// Largest single-step increase of `E`.
    pub max_increase: f64,
    pub monotone: bool,
}

impl LyapunovTrace {
    pub fn decay_ratio(&self) -> f64 {
        self.energy[self.energy.len() - 1] / self.energy[0]
    }
}

/// Fitted fluxes `F_i = α_i ρ_i − β_i ρ_{i+1}` for the face between nodes
/// `i` and `i+1`, plus the steady state they preserve.
#[derive(Debug, Clone)]
pub struct FpeSolver {
    pub n: usize,
    pub cfg: FpeConfig,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    /// Steady density on the nodes (limit means at jumps).
    pub u0: CellGrid,
    pub j0: f64,
    pub dt: f64,
}

impl FpeSolver {
    pub fn new(sys: &DimensionlessSystem, cfg: &FpeConfig) -> Result<Self> {
        cfg.validate()?;
        let n = cfg.n;
        let h = cfg.h();
        let (_, aligned) = resolve_grid(n, &sys.phi, false);
        let disc = CellDiscretization::new(&sys.phi, n, aligned, Execution::Sequential);
        // e^{−φe} is the mean of the one-sided limits of e^{−φ}
        let phi_e: Vec<f64> = disc.ln_mean_exp(-1.0).iter().map(|v| -v).collect();
        let f = sys.f;
        let mut alpha = Vec::with_capacity(n);
        let mut beta = Vec::with_capacity(n);
        for i in 0..n {
            let x0 = i as f64 * h;
            let g: Vec<f64> = GL8_NODES
                .iter()
                .map(|&z| {
                    let y = 0.5 * h * (z + 1.0);
                    sys.phi.eval(x0 + y) - phi_e[i] - f * y
                })
                .collect();
            let top = g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let s: f64 = g.iter().zip(GL8_WEIGHTS).map(|(gk, w)| w * (gk - top).exp()).sum();
            let ln_r = top + (0.5 * h * s).ln();
            alpha.push((-ln_r).exp());
            beta.push((phi_e[(i + 1) % n] - phi_e[i] - f * h - ln_r).exp());
        }
        if alpha.iter().chain(&beta).any(|c| !c.is_finite()) {
            return Err(Error::DynamicRange { spread: f64::INFINITY });
        }
        // explicit Euler keeps ρ ≥ 0 when 1 − dt/h (α_i + β_{i−1}) ≥ 0
        let worst = (0..n).map(|i| alpha[i] + beta[(i + n - 1) % n]).fold(0.0, f64::max);
        let dt_cap = 0.9 * h / worst;
        let dt_req = cfg.dt.min(dt_cap);
        let steps = (cfg.t_final / dt_req).ceil().max(1.0);
        let dt = cfg.t_final / steps;

        let qcfg = QuadratureConfig::default().with_n(n).with_execution(Execution::Sequential);
        let qcfg = QuadratureConfig { align_breakpoints: false, ..qcfg };
        let u0 = compute_u0_nodes(sys, &qcfg)?;
        let j0 = compute_velocity(sys, &QuadratureConfig::default())?.j0;
        Ok(Self { n, cfg: *cfg, alpha, beta, u0, j0, dt })
    }

    pub fn total_steps(&self) -> u64 {
        (self.cfg.t_final / self.dt).round() as u64
    }

    /// `ρ₀ = u₀`, `ρ₁ = ρ₂ = 0`.
    pub fn init_state(&self) -> MomentState {
        let n = self.n;
        MomentState {
            n,
            rho0: self.u0.clone(),
            rho1: CellGrid::constant(n, 0.0),
            rho2: CellGrid::constant(n, 0.0),
            t: 0.0,
            steps: 0,
        }
    }

    /// Face fluxes of a moment; `ghost` is its value at `x = 1`.
    fn face_fluxes(&self, rho: &[f64], ghost: f64, out: &mut [f64]) {
        let n = self.n;
        for i in 0..n - 1 {
            out[i] = self.alpha[i] * rho[i] - self.beta[i] * rho[i + 1];
        }
        out[n - 1] = self.alpha[n - 1] * rho[n - 1] - self.beta[n - 1] * ghost;
    }

    fn apply(&self, rho: &mut [f64], faces: &[f64], left: f64, source: Option<(&[f64], f64)>) {
        let lam = self.dt * self.n as f64;
        let mut prev = left;
        for i in 0..self.n {
            rho[i] -= lam * (faces[i] - prev);
            prev = faces[i];
        }
        if let Some((s, c)) = source {
            for i in 0..self.n {
                rho[i] += self.dt * c * s[i];
            }
        }
    }

    /// One explicit step of all three moments, in place.
    pub fn advance(&self, s: &mut MomentState) -> Result<()> {
        let n = self.n;
        let mut f0 = vec![0.0; n];
        let mut f1 = vec![0.0; n];
        let mut f2 = vec![0.0; n];
        let (r0, r1, r2) = (&s.rho0.values, &s.rho1.values, &s.rho2.values);
        self.face_fluxes(r0, r0[0], &mut f0);
        self.face_fluxes(r1, r1[0] - r0[0], &mut f1);
        self.face_fluxes(r2, r2[0] - 2.0 * r1[0] + r0[0], &mut f2);
        let (e0, e1, e2) = (f0[n - 1], f1[n - 1], f2[n - 1]);
        self.apply(&mut s.rho0.values, &f0, e0, None);
        self.apply(&mut s.rho1.values, &f1, e1 + e0, None);
        self.apply(&mut s.rho2.values, &f2, e2 + 2.0 * e1 + e0, None);
        s.steps += 1;
        s.t = s.steps as f64 * self.dt;
        Ok(())
    }

    /// Value-returning form of [`advance`](Self::advance), with a blow-up check.
    pub fn step(&self, state: &MomentState) -> Result<MomentState> {
        let mut next = state.clone();
        self.advance(&mut next)?;
        check_finite(&next)?;
        Ok(next)
    }

    fn lyapunov(&self, rho0: &[f64]) -> f64 {
        let h = 1.0 / self.n as f64;
        h * compensated_sum(rho0.iter().zip(&self.u0.values).map(|(r, u)| {
            let d = r - u;
            d * d / u
        }))
    }

    fn record_every(&self) -> u64 {
        if self.cfg.record_every > 0 {
            self.cfg.record_every as u64
        } else {
            (self.total_steps() / 400).max(1)
        }
    }

    fn row(&self, s: &MomentState) -> HistoryRow {
        HistoryRow {
            t: s.t,
            int_rho1: s.int_rho1(),
            centered_second_moment: s.centered_second_moment(),
            e_lyapunov: self.lyapunov(&s.rho0.values),
        }
    }

    /// Evolve from the canonical initial state to `t_final`, recording the
    /// moment integrals, and fit `V` and `D_eff`.
    pub fn run(&self) -> Result<FpeRun> {
        let mut s = self.init_state();
        let every = self.record_every();
        let total = self.total_steps();
        let mut history = vec![self.row(&s)];
        while s.steps < total {
            self.advance(&mut s)?;
            if s.steps.is_multiple_of(every) || s.steps == total {
                check_finite(&s)?;
                history.push(self.row(&s));
            }
        }
        let times: Vec<f64> = history.iter().map(|r| r.t).collect();
        let m1: Vec<f64> = history.iter().map(|r| r.int_rho1).collect();
        let m2: Vec<f64> = history.iter().map(|r| r.centered_second_moment).collect();
        let (v_fpe, deff_fpe) = extract_transport(&times, &m1, &m2, self.cfg.slope_window)?;
        Ok(FpeRun { v_fpe, deff_fpe, history, state: s, dt: self.dt })
    }

    /// Evolve `ρ₁` and `p₁ = ρ₁ − u₀J₀t` side by side up to `t_end`.
    ///
    /// `p₁` solves the same equation with source `−J₀u₀` and twist
    /// `p₁(x+1) = p₁(x) − u₀(x)`. Returns `(ρ₁, p₁, t)`.
    pub fn evolve_p1(&self, t_end: f64) -> Result<(CellGrid, CellGrid, f64)> {
        let n = self.n;
        let mut s = self.init_state();
        let mut p1 = vec![0.0; n];
        let mut fp = vec![0.0; n];
        let mut fu = vec![0.0; n];
        let u0 = &self.u0.values;
        self.face_fluxes(u0, u0[0], &mut fu);
        let u_right = fu[n - 1];
        let steps = (t_end / self.dt).round() as u64;
        while s.steps < steps {
            self.face_fluxes(&p1, p1[0] - u0[0], &mut fp);
            let left = fp[n - 1] + u_right;
            self.apply(&mut p1, &fp, left, Some((u0, -self.j0)));
            self.advance(&mut s)?;
        }
        let p1 = CellGrid::new(p1);
        check_finite(&s)?;
        if p1.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::BlowUp { step: s.steps });
        }
        Ok((s.rho1, p1, s.t))
    }
}

fn check_finite(s: &MomentState) -> Result<()> {
    let ok = [&s.rho0, &s.rho1, &s.rho2].iter().all(|g| g.values.iter().all(|v| v.is_finite()));
    if ok {
        Ok(())
    } else {
        Err(Error::BlowUp { step: s.steps })
    }
}

/// Canonical initial state for `sys`.
pub fn init_state(sys: &DimensionlessSystem, cfg: &FpeConfig) -> Result<MomentState> {
    Ok(FpeSolver::new(sys, cfg)?.init_state())
}

/// Least-squares slopes over the trailing `window` of the horizon:
/// `V = d∫ρ₁/dt`, `D_eff = ½ d(∫ρ₂ − (∫ρ₁)²)/dt`.
pub fn extract_transport(times: &[f64], int_rho1: &[f64], centered: &[f64], window: f64) -> Result<(f64, f64)> {
    let t_end = times.last().copied().unwrap_or(0.0);
    let start = t_end * (1.0 - window);
    let first = times.iter().position(|&t| t >= start).unwrap_or(times.len());
    let samples = times.len() - first;
    if samples < 10 {
        return Err(Error::InsufficientHistory { samples });
    }
    let t = &times[first..];
    Ok((ls_slope(t, &int_rho1[first..]), 0.5 * ls_slope(t, &centered[first..])))
}

/// Full oracle run: `V_fpe`, `D_eff_fpe` and the recorded history.
pub fn run(sys: &DimensionlessSystem, cfg: &FpeConfig) -> Result<FpeRun> {
    FpeSolver::new(sys, cfg)?.run()
}

/// Evolve `ρ₀ = u₀(1 + r₀)` and record `E(t) = ∫ u₀ r²` after every step.
///
/// The scheme is linear, so the deviation `δ = ρ₀ − u₀ = u₀ r` is evolved
/// directly; this avoids cancelling against `u₀` once `E` is small.
pub fn lyapunov_decay_check(sys: &DimensionlessSystem, perturbation: &CellGrid, cfg: &FpeConfig) -> Result<LyapunovTrace> {
    let solver = FpeSolver::new(sys, cfg)?;
    let n = solver.n;
    if perturbation.n() != n {
        return Err(Error::InvalidConfig(format!("perturbation has {} points, grid has {n}", perturbation.n())));
    }
    let u0 = &solver.u0.values;
    let mean = compensated_sum(u0.iter().zip(&perturbation.values).map(|(u, r)| u * r)) / n as f64;
    let scale = perturbation.values.iter().map(|r| r.abs()).fold(0.0, f64::max).max(1.0);
    if mean.abs() > 1e-10 * scale {
        return Err(Error::PerturbationNotCentered { mean });
    }
    let energy_of = |d: &[f64]| compensated_sum(d.iter().zip(u0).map(|(d, u)| d * d / u)) / n as f64;
    let mut s = solver.init_state();
    s.rho0 = CellGrid::new(u0.iter().zip(&perturbation.values).map(|(u, r)| u * r).collect());
    let total = solver.total_steps();
    let mut times = vec![0.0];
    let mut energy = vec![energy_of(&s.rho0.values)];
    let mut max_increase = f64::NEG_INFINITY;
    let mut faces = vec![0.0; n];
    while s.steps < total {
        let d = &mut s.rho0.values;
        solver.face_fluxes(d, d[0], &mut faces);
        let right = faces[n - 1];
        solver.apply(d, &faces, right, None);
        s.steps += 1;
        s.t = s.steps as f64 * solver.dt;
        let e = energy_of(&s.rho0.values);
        if !e.is_finite() {
            return Err(Error::BlowUp { step: s.steps });
        }
        max_increase = max_increase.max(e - energy[energy.len() - 1]);
        times.push(s.t);
        energy.push(e);
    }
    Ok(LyapunovTrace { times, energy, max_increase, monotone: max_increase <= 1e-12 })
}

/// `r₀ = cos 2πx − ∫ u₀ cos 2πx`, centred against the steady weight.
pub fn centred_cosine_perturbation(u0: &CellGrid) -> CellGrid {
    let n = u0.n();
    let c: Vec<f64> = (0..n).map(|i| (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos()).collect();
    let m = compensated_sum(u0.values.iter().zip(&c).map(|(u, v)| u * v)) / n as f64;
    CellGrid::new(c.iter().map(|v| v - m).collect())
}

/// Long-time `p₁` against the closed-form `u₁` on the oracle grid; returns
/// the max-norm error relative to `max|u₁|`.
pub fn p1_vs_u1(sys: &DimensionlessSystem, cfg: &FpeConfig, t_end: f64) -> Result<f64> {
    let solver = FpeSolver::new(sys, cfg)?;
    let (_, p1, _) = solver.evolve_p1(t_end)?;
    let qcfg = QuadratureConfig::default().with_n(cfg.n);
    let (_, prof) = compute_profiles(sys, &qcfg)?;
    let u1 = prof.u1.ok_or(Error::U1Undefined)?;
    let stride = u1.n() / cfg.n;
    if stride == 0 || u1.n() % cfg.n != 0 {
        return Err(Error::InvalidConfig(format!("u₁ grid of {} points does not contain the oracle grid", u1.n())));
    }
    let scale = u1.values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let err = (0..cfg.n).map(|i| (p1.values[i] - u1.values[i * stride]).abs()).fold(0.0, f64::max);
    Ok(err / scale)
}

/// CSV trace with columns `t,int_rho1,centered_second_moment,E_lyapunov`.
pub fn write_trace<W: Write>(history: &[HistoryRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "t,int_rho1,centered_second_moment,E_lyapunov")?;
    for r in history {
        writeln!(out, "{},{},{},{}", r.t, r.int_rho1, r.centered_second_moment, r.e_lyapunov)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::PeriodicPotential;
    use crate::transport::compute_diffusion;
    use std::f64::consts::PI;

    fn sys(phi: PeriodicPotential, f: f64) -> DimensionlessSystem {
        DimensionlessSystem::new(phi, f).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(FpeConfig::new(64, 1.0).validate().is_ok());
        assert!(FpeConfig { dt: 1e-3, ..FpeConfig::new(64, 1.0) }.validate().is_err());
        assert!(FpeConfig::new(48, 1.0).validate().is_err());
        assert!(FpeConfig { slope_window: 0.0, ..FpeConfig::new(64, 1.0) }.validate().is_err());
    }

    #[test]
    fn initial_state() {
        let s = init_state(&DimensionlessSystem::free(0.0).unwrap(), &FpeConfig::new(32, 1.0)).unwrap();
        assert!(s.rho0.values.iter().all(|&v| (v - 1.0).abs() < 1e-15));
        assert!(s.rho1.values.iter().all(|&v| v == 0.0) && s.rho2.values.iter().all(|&v| v == 0.0));
        let c = sys(PeriodicPotential::cosine(1.0), 1.0);
        let s = init_state(&c, &FpeConfig::new(256, 1.0)).unwrap();
        let qcfg = QuadratureConfig { align_breakpoints: false, ..QuadratureConfig::default().with_n(256) };
        let u0 = crate::transport::compute_u0(&c, &qcfg).unwrap();
        assert_eq!(s.rho0, u0);
        assert!((s.mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_equilibrium_is_fixed() {
        let solver = FpeSolver::new(&DimensionlessSystem::free(0.0).unwrap(), &FpeConfig::new(64, 1.0)).unwrap();
        let s0 = solver.init_state();
        let s1 = solver.step(&s0).unwrap();
        assert!(s1.rho0.max_abs_diff(&s0.rho0) < 1e-14);
    }

    #[test]
    fn steady_state_is_preserved() {
        for (phi, f) in [
            (PeriodicPotential::cosine(1.0), 1.0),
            (PeriodicPotential::sawtooth(2.0, 0.25).unwrap(), 2.0),
            (PeriodicPotential::piecewise_const(1.0), 0.5),
        ] {
            let solver = FpeSolver::new(&sys(phi.clone(), f), &FpeConfig::new(256, 1.0)).unwrap();
            let mut s = solver.init_state();
            let k = 1000;
            for _ in 0..k {
                solver.advance(&mut s).unwrap();
            }
            let rate = s.rho0.max_abs_diff(&solver.u0) / s.t;
            assert!(rate < 1e-8, "{phi:?}: {rate}");
        }
    }

    #[test]
    fn free_particle_flux_after_one_step() {
        let solver = FpeSolver::new(&DimensionlessSystem::free(1.0).unwrap(), &FpeConfig::new(64, 1.0)).unwrap();
        let s0 = solver.init_state();
        let s1 = solver.step(&s0).unwrap();
        let rate = (s1.int_rho1() - s0.int_rho1()) / solver.dt;
        assert!((rate - 1.0).abs() < 1e-6, "{rate}");
    }

    #[test]
    fn mass_is_conserved() {
        let solver = FpeSolver::new(&sys(PeriodicPotential::cosine(2.0), 3.0), &FpeConfig::new(64, 1.0)).unwrap();
        let mut s = solver.init_state();
        // start away from steady state
        s.rho0 = CellGrid::new(s.rho0.values.iter().enumerate().map(|(i, u)| u * (1.0 + 0.5 * (i as f64).sin())).collect());
        let m0 = s.mass();
        for _ in 0..1000 {
            solver.advance(&mut s).unwrap();
        }
        assert!((s.mass() - m0).abs() < 1e-12);
    }

    #[test]
    fn free_particle_transport() {
        let r = run(&DimensionlessSystem::free(2.0).unwrap(), &FpeConfig::new(32, 5.0)).unwrap();
        assert!((r.v_fpe - 2.0).abs() < 1e-4, "{}", r.v_fpe);
        assert!((r.deff_fpe - 1.0).abs() < 1e-3, "{}", r.deff_fpe);
    }

    #[test]
    fn insufficient_history() {
        let t: Vec<f64> = (0..12).map(|k| k as f64).collect();
        assert!(matches!(extract_transport(&t, &t, &t, 0.5), Err(Error::InsufficientHistory { samples: 6 })));
        assert!(extract_transport(&t, &t, &t, 1.0).is_ok());
    }

    #[test]
    fn twist_consistency_p1() {
        let solver = FpeSolver::new(&sys(PeriodicPotential::cosine(1.0), 1.0), &FpeConfig::new(64, 5.0)).unwrap();
        let (rho1, p1, t) = solver.evolve_p1(5.0).unwrap();
        let shifted = CellGrid::new(p1.values.iter().zip(&solver.u0.values).map(|(p, u)| p + u * solver.j0 * t).collect());
        assert!(shifted.max_abs_diff(&rho1) < 1e-8, "{}", shifted.max_abs_diff(&rho1));
    }

    #[test]
    fn lyapunov_examples() {
        let s = sys(PeriodicPotential::cosine(1.0), 1.0);
        let cfg = FpeConfig::new(64, 2.0);
        let solver = FpeSolver::new(&s, &cfg).unwrap();
        let r0 = centred_cosine_perturbation(&solver.u0);
        let trace = lyapunov_decay_check(&s, &r0, &cfg).unwrap();
        assert!(trace.monotone, "{}", trace.max_increase);
        assert!(trace.decay_ratio() < 1e-3);

        let zero = lyapunov_decay_check(&s, &CellGrid::constant(64, 0.0), &cfg).unwrap();
        assert!(zero.energy.iter().all(|&e| e == 0.0));

        let bad = CellGrid::constant(64, 1.0);
        assert!(matches!(lyapunov_decay_check(&s, &bad, &cfg), Err(Error::PerturbationNotCentered { .. })));
    }

    #[test]
    fn heat_mode_decay_rate() {
        let s = DimensionlessSystem::free(0.0).unwrap();
        let cfg = FpeConfig::new(128, 0.1);
        let r0 = CellGrid::from_fn(128, |x| (2.0 * PI * x).cos());
        let tr = lyapunov_decay_check(&s, &r0, &cfg).unwrap();
        let ln_e: Vec<f64> = tr.energy.iter().map(|e| e.ln()).collect();
        let rate = -ls_slope(&tr.times, &ln_e);
        assert!((rate / (8.0 * PI * PI) - 1.0).abs() < 0.02, "{rate}");
    }

    #[test]
    fn trace_csv_header() {
        let rows = [HistoryRow { t: 0.0, int_rho1: 0.0, centered_second_moment: 0.0, e_lyapunov: 0.0 }];
        let mut buf = Vec::new();
        write_trace(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,int_rho1,centered_second_moment,E_lyapunov\n"));
    }

    #[test]
    fn order_of_accuracy() {
        let s = sys(PeriodicPotential::cosine(1.0), 1.0);
        let exact = compute_diffusion(&s, &QuadratureConfig::default()).unwrap().d_eff;
        let err = |n: usize| (run(&s, &FpeConfig::new(n, 10.0)).unwrap().deff_fpe - exact).abs();
        let (e16, e32) = (err(16), err(32));
        assert!(e32 <= 0.5 * e16, "{e16} {e32}");
    }
}
