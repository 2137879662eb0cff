//! Velocity, effective diffusion and drag from the steady cell profiles.
//!
//! With `K(x) = ∫₀¹ e^{φ(x+s) − fs} ds` the steady profile is
//! `w₀ = e^{−φ} K`, and `w₁(x) = ∫₀¹ w₀(x+s)² e^{φ(x+s) − φ(x) − fs} ds`
//! is the inner integral of `G = K² e^{−φ}`. Everything is carried in log
//! form so large barriers and forces do not overflow.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::nondim::DimensionlessSystem;
use crate::potential::PeriodicPotential;
use crate::quad::{
    ln_abs_one_minus_exp_neg, ln_decay_mass, ln_sum_exp, refine_until_converged, CellDiscretization, CellGrid,
    Extrapolation, InnerWeight, QuadratureConfig, Shift,
};
use crate::spectral;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Velocity {
    pub v: f64,
    pub j0: f64,
    pub m0: f64,
    pub quadrature_n: usize,
    pub achieved_rel_err: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransportCoefficients {
    pub v: f64,
    pub d_eff: f64,
    pub zeta_eff: f64,
    pub j0: f64,
    pub m0: f64,
    /// `∫ w₁`.
    pub m1: f64,
    /// `M₁` from the second (backward-shift) representation.
    pub m1_dual: f64,
    /// `|M₁_dual/M₁ − 1|`, from the logs.
    pub dual_rel: f64,
    pub quadrature_n: usize,
    pub achieved_rel_err: f64,
}

impl TransportCoefficients {
    pub fn einstein_product(&self) -> f64 {
        self.zeta_eff * self.d_eff
    }

    pub fn dual_form_rel_diff(&self) -> f64 {
        self.dual_rel
    }
}

/// Steady profiles on the cell grid. Values at breakpoint nodes are right limits.
#[derive(Debug, Clone)]
pub struct CellProfiles {
    pub n: usize,
    pub w0: CellGrid,
    pub u0: CellGrid,
    pub w1: CellGrid,
    /// Absent at zero force.
    pub u1: Option<CellGrid>,
    /// `∫₀ˣ u₀`.
    pub u0_cum: CellGrid,
}

/// One resolution level, in logs.
#[derive(Debug, Clone)]
struct Level {
    disc: CellDiscretization,
    ln_k: Vec<f64>,
    ln_l: Vec<f64>,
    ln_m0: f64,
    ln_m1: f64,
    ln_m1_dual: f64,
}

fn check_spread(values: &[f64]) -> Result<()> {
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    if !(hi - lo <= crate::quad::MAX_EXPONENT_SPREAD) {
        return Err(Error::DynamicRange { spread: hi - lo });
    }
    Ok(())
}

fn plus(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn ln_trapezoid(ln_samples: &[f64]) -> f64 {
    ln_sum_exp(ln_samples) - (ln_samples.len() as f64).ln()
}

fn first_moment_level(disc: CellDiscretization, f: f64) -> Result<(CellDiscretization, Vec<f64>, f64)> {
    let ln_k = disc.ln_inner(&disc.phi_left, &disc.phi_right, Shift::Forward, InnerWeight::Decay(f))?;
    let ln_e = disc.ln_mean_exp(-1.0);
    let ln_m0 = ln_trapezoid(&plus(&ln_k, &ln_e));
    Ok((disc, ln_k, ln_m0))
}

fn full_level(disc: CellDiscretization, f: f64) -> Result<Level> {
    let (disc, ln_k, ln_m0) = first_moment_level(disc, f)?;
    let n = disc.n;
    let ln_e = disc.ln_mean_exp(-1.0);
    // G = K² e^{−φ}
    let g_left: Vec<f64> = (0..n).map(|i| 2.0 * ln_k[i] - disc.phi_left[i]).collect();
    let g_right: Vec<f64> = (0..n).map(|i| 2.0 * ln_k[i] - disc.phi_right[i]).collect();
    check_spread(&g_right)?;
    let ln_l = disc.ln_inner(&g_left, &g_right, Shift::Forward, InnerWeight::Decay(f))?;
    let ln_m1 = ln_trapezoid(&plus(&ln_l, &ln_e));
    // ∫ K² e^{−φ(x)} ∫₀¹ e^{−φ(x−s) − fs} ds dx
    let neg_left: Vec<f64> = disc.phi_left.iter().map(|p| -p).collect();
    let neg_right: Vec<f64> = disc.phi_right.iter().map(|p| -p).collect();
    let ln_b = disc.ln_inner(&neg_left, &neg_right, Shift::Backward, InnerWeight::Decay(f))?;
    let dual: Vec<f64> = (0..n).map(|i| 2.0 * ln_k[i] + ln_b[i] + ln_e[i]).collect();
    let ln_m1_dual = ln_trapezoid(&dual);
    Ok(Level { disc, ln_k, ln_l, ln_m0, ln_m1, ln_m1_dual })
}

fn extrapolation_for(phi: &PeriodicPotential) -> Extrapolation {
    if phi.is_smooth() {
        Extrapolation::None
    } else {
        Extrapolation::Romberg
    }
}

fn start_n(phi: &PeriodicPotential, cfg: &QuadratureConfig) -> Result<(usize, bool)> {
    cfg.validate()?;
    Ok(crate::quad::resolve_grid(cfg.n_grid, phi, cfg.align_breakpoints))
}

/// `(1 − e^{−f}) / M₀` from `ln M₀`; exactly zero at `f = 0`.
fn velocity_from(f: f64, ln_m0: f64) -> f64 {
    if f == 0.0 {
        0.0
    } else {
        f.signum() * (ln_abs_one_minus_exp_neg(f) - ln_m0).exp()
    }
}

/// `f M₀ / (1 − e^{−f})`, equal to `M₀` at `f = 0`.
fn drag_from(f: f64, ln_m0: f64) -> f64 {
    (ln_m0 - ln_decay_mass(f)).exp()
}

/// `w₀` at the configured resolution (breakpoint-aligned when requested).
pub fn compute_w0(sys: &DimensionlessSystem, cfg: &QuadratureConfig) -> Result<CellGrid> {
    let (n, aligned) = start_n(&sys.phi, cfg)?;
    let disc = CellDiscretization::new(&sys.phi, n, aligned, cfg.execution);
    let (disc, ln_k, _) = first_moment_level(disc, sys.f)?;
    Ok(CellGrid::new(ln_k.iter().zip(&disc.phi_right).map(|(k, p)| (k - p).exp()).collect()))
}

/// `M₀ = ∫ w₀` refined to `cfg.rel_tol`, and `V = J₀ = (1 − e^{−f})/M₀`.
pub fn compute_velocity(sys: &DimensionlessSystem, cfg: &QuadratureConfig) -> Result<Velocity> {
    let (n0, aligned) = start_n(&sys.phi, cfg)?;
    let r = refine_until_converged(n0, cfg, extrapolation_for(&sys.phi), |n| {
        let disc = CellDiscretization::new(&sys.phi, n, aligned, cfg.execution);
        let (_, _, ln_m0) = first_moment_level(disc, sys.f)?;
        Ok((vec![ln_m0.exp()], ()))
    })?;
    let m0 = r.values[0];
    let v = velocity_from(sys.f, m0.ln());
    Ok(Velocity { v, j0: v, m0, quadrature_n: r.n, achieved_rel_err: r.rel_err })
}

/// `u₀ = w₀ / M₀` at the configured resolution.
pub fn compute_u0(sys: &DimensionlessSystem, cfg: &QuadratureConfig) -> Result<CellGrid> {
    let (n, aligned) = start_n(&sys.phi, cfg)?;
    let disc = CellDiscretization::new(&sys.phi, n, aligned, cfg.execution);
    let (disc, ln_k, ln_m0) = first_moment_level(disc, sys.f)?;
    Ok(CellGrid::new(ln_k.iter().zip(&disc.phi_right).map(|(k, p)| (k - p - ln_m0).exp()).collect()))
}

/// `u₀` node samples for trapezoid sums and flux balances: the mean of the
/// one-sided limits at jumps, identical to [`compute_u0`] elsewhere.
pub fn compute_u0_nodes(sys: &DimensionlessSystem, cfg: &QuadratureConfig) -> Result<CellGrid> {
    let (n, aligned) = start_n(&sys.phi, cfg)?;
    let disc = CellDiscretization::new(&sys.phi, n, aligned, cfg.execution);
    let (disc, ln_k, ln_m0) = first_moment_level(disc, sys.f)?;
    let ln_e = disc.ln_mean_exp(-1.0);
    Ok(CellGrid::new(ln_k.iter().zip(&ln_e).map(|(k, e)| (k + e - ln_m0).exp()).collect()))
}

/// `w₁` on the grid of `w0`, which must be sampled at `x_i = i/n`.
pub fn compute_w1(sys: &DimensionlessSystem, w0: &CellGrid, cfg: &QuadratureConfig) -> Result<CellGrid> {
    cfg.validate()?;
    let n = w0.n();
    if n < 2 {
        return Err(Error::InvalidConfig("w0 grid needs at least two points".into()));
    }
    if w0.values.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::Domain("w0 must be strictly positive".into()));
    }
    let aligned = sys.phi.breakpoints().iter().all(|&b| (b * n as f64).fract() == 0.0);
    let disc = CellDiscretization::new(&sys.phi, n, aligned, cfg.execution);
    let ln_k: Vec<f64> = w0.values.iter().zip(&disc.phi_right).map(|(w, p)| w.ln() + p).collect();
    let g_left: Vec<f64> = (0..n).map(|i| 2.0 * ln_k[i] - disc.phi_left[i]).collect();
    let g_right: Vec<f64> = (0..n).map(|i| 2.0 * ln_k[i] - disc.phi_right[i]).collect();
    check_spread(&g_right)?;
    let ln_l = disc.ln_inner(&g_left, &g_right, Shift::Forward, InnerWeight::Decay(sys.f))?;
    Ok(CellGrid::new(ln_l.iter().zip(&disc.phi_right).map(|(l, p)| (l - p).exp()).collect()))
}

fn refine_full(sys: &DimensionlessSystem, cfg: &QuadratureConfig) -> Result<(TransportCoefficients, Level)> {
    let (n0, aligned) = start_n(&sys.phi, cfg)?;
    let mut offsets: Option<[f64; 3]> = None;
    let r = refine_until_converged(n0, cfg, extrapolation_for(&sys.phi), |n| {
        let disc = CellDiscretization::new(&sys.phi, n, aligned, cfg.execution);
        let level = full_level(disc, sys.f)?;
        let logs = [level.ln_m0, level.ln_m1, level.ln_m1_dual];
        // compare M's on their natural scale, normalised by the first level
        let base = *offsets.get_or_insert(logs);
        let keys = logs.iter().zip(&base).map(|(l, b)| (l - b).exp()).collect();
        Ok((keys, level))
    })?;
    let base = offsets.expect("at least one level evaluated");
    let lm: Vec<f64> = r.values.iter().zip(&base).map(|(v, b)| b + v.ln()).collect();
    let coeffs = assemble(sys.f, lm[0], lm[1], lm[2], r.n, r.rel_err);
    Ok((coeffs, r.payload))
}

fn assemble(f: f64, ln_m0: f64, ln_m1: f64, ln_m1_dual: f64, n: usize, rel_err: f64) -> TransportCoefficients {
    let v = velocity_from(f, ln_m0);
    TransportCoefficients {
        v,
        d_eff: (ln_m1 - 3.0 * ln_m0).exp(),
        zeta_eff: drag_from(f, ln_m0),
        j0: v,
        m0: ln_m0.exp(),
        m1: ln_m1.exp(),
        m1_dual: ln_m1_dual.exp(),
        dual_rel: (ln_m1_dual - ln_m1).exp_m1().abs(),
        quadrature_n: n,
        achieved_rel_err: rel_err,
    }
}

/// `D_eff = M₁/M₀³` together with `V`, `ζ_eff` and both forms of `M₁`, which
/// must agree within `10·rel_tol`.
pub fn compute_diffusion(sys: &DimensionlessSystem, cfg: &QuadratureConfig) -> Result<TransportCoefficients> {
    let (c, _) = refine_full(sys, cfg)?;
    let rel = c.dual_form_rel_diff();
    if !(rel <= 10.0 * cfg.rel_tol) {
        return Err(Error::DualFormMismatch { first: c.m1, second: c.m1_dual, rel });
    }
    Ok(c)
}

/// `∫₀ˣ u₀` on the grid: spectral for smooth potentials, cumulative
/// trapezoid over the limit means otherwise.
fn cumulative_u0(level: &Level, u0_trap: &CellGrid) -> CellGrid {
    let n = level.disc.n;
    if level.disc.spectral {
        let anti = spectral::periodic_antiderivative(&u0_trap.values);
        let mean = crate::quad::periodic_integral(u0_trap);
        CellGrid::new((0..n).map(|i| mean * i as f64 / n as f64 + anti[i]).collect())
    } else {
        u0_trap.cumulative_trapezoid()
    }
}

fn profiles_from(sys: &DimensionlessSystem, level: &Level) -> CellProfiles {
    let d = &level.disc;
    let n = d.n;
    let ln_m0 = level.ln_m0;
    let w0 = CellGrid::new((0..n).map(|i| (level.ln_k[i] - d.phi_right[i]).exp()).collect());
    let u0 = CellGrid::new((0..n).map(|i| (level.ln_k[i] - d.phi_right[i] - ln_m0).exp()).collect());
    let w1 = CellGrid::new((0..n).map(|i| (level.ln_l[i] - d.phi_right[i]).exp()).collect());
    let ln_e = d.ln_mean_exp(-1.0);
    let u0_trap = CellGrid::new((0..n).map(|i| (level.ln_k[i] + ln_e[i] - ln_m0).exp()).collect());
    let u0_cum = cumulative_u0(level, &u0_trap);
    // level-consistent M's keep ∫u₁ = 0 at the grid's own resolution
    let m0 = ln_m0.exp();
    let m1 = level.ln_m1.exp();
    let u1 = (sys.f != 0.0).then(|| {
        let j0 = velocity_from(sys.f, ln_m0);
        let scale = m0 * m0 * m0 * j0;
        let a = m1 / scale + 0.5;
        CellGrid::new((0..n).map(|i| a * u0.values[i] - u0.values[i] * u0_cum.values[i] - w1.values[i] / scale).collect())
    });
    CellProfiles { n, w0, u0, w1, u1, u0_cum }
}

/// Coefficients and profiles at the converged resolution.
pub fn compute_profiles(sys: &DimensionlessSystem, cfg: &QuadratureConfig) -> Result<(TransportCoefficients, CellProfiles)> {
    let (c, level) = refine_full(sys, cfg)?;
    let p = profiles_from(sys, &level);
    Ok((c, p))
}

/// `u₁` and its closed-form steady flux `M₁/M₀³ + J₀/2 − J₀ ∫₀ˣ u₀`.
pub fn compute_u1(sys: &DimensionlessSystem, cfg: &QuadratureConfig) -> Result<(CellGrid, CellGrid)> {
    if sys.f == 0.0 {
        return Err(Error::U1Undefined);
    }
    let (_, level) = refine_full(sys, cfg)?;
    let c = assemble(sys.f, level.ln_m0, level.ln_m1, level.ln_m1_dual, level.disc.n, 0.0);
    let p = profiles_from(sys, &level);
    let u1 = p.u1.clone().expect("f ≠ 0");
    let base = c.d_eff + 0.5 * c.j0;
    let flux = CellGrid::new(p.u0_cum.values.iter().map(|u| base - c.j0 * u).collect());
    let mean = u1_integral(&u1, &p);
    if mean.abs() > 1e-8 {
        return Err(Error::Domain(format!("∫u₁ = {mean:e} is not zero; grid under-resolved")));
    }
    Ok((u1, flux))
}

/// `∫₀¹ u₁`. `u₁` jumps by `−u₀` across the period, so integrate the
/// periodic part `u₁ + x u₀` and correct with `∫ x u₀ = 1 − ∫₀¹ U₀`.
pub fn u1_integral(u1: &CellGrid, profiles: &CellProfiles) -> f64 {
    let n = u1.n();
    let x = |i: usize| i as f64 / n as f64;
    let q = CellGrid::new((0..n).map(|i| u1.values[i] + x(i) * profiles.u0.values[i]).collect());
    // U₀ − x is periodic: U₀(1) = ∫u₀ = 1
    let p = CellGrid::new((0..n).map(|i| profiles.u0_cum.values[i] - x(i)).collect());
    q.integral() - 0.5 + p.integral()
}

/// `−((φ′ − f)u + u′)` for a periodic grid function, with `u′` spectral.
pub fn steady_flux(phi: &PeriodicPotential, f: f64, u: &CellGrid) -> Result<CellGrid> {
    let du = spectral::derivative(&u.values);
    let n = u.n();
    (0..n)
        .map(|i| {
            let dphi = phi.eval_derivative(i as f64 / n as f64)?;
            Ok(-((dphi - f) * u.values[i] + du[i]))
        })
        .collect::<Result<Vec<_>>>()
        .map(CellGrid::new)
}

/// Flux of `u₁ = a u₀ − u₀ U₀ − w₁/s` given its periodic pieces: the
/// non-periodic factor `U₀` is differentiated exactly.
pub fn u1_flux(phi: &PeriodicPotential, f: f64, profiles: &CellProfiles, coeffs: &TransportCoefficients) -> Result<CellGrid> {
    if f == 0.0 {
        return Err(Error::U1Undefined);
    }
    let n = profiles.n;
    let scale = coeffs.m0.powi(3) * coeffs.j0;
    let a = coeffs.m1 / scale + 0.5;
    let u0 = &profiles.u0.values;
    let du0 = spectral::derivative(u0);
    let dw1 = spectral::derivative(&profiles.w1.values);
    let u1 = profiles.u1.as_ref().ok_or(Error::U1Undefined)?;
    (0..n)
        .map(|i| {
            let dphi = phi.eval_derivative(i as f64 / n as f64)?;
            let du1 = a * du0[i] - du0[i] * profiles.u0_cum.values[i] - u0[i] * u0[i] - dw1[i] / scale;
            Ok(-((dphi - f) * u1.values[i] + du1))
        })
        .collect::<Result<Vec<_>>>()
        .map(CellGrid::new)
}
