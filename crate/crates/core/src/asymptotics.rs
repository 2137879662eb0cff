//! Small- and large-force expansions and the minimum of `D_eff(f)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::nondim::DimensionlessSystem;
use crate::par::map_range;
use crate::potential::PeriodicPotential;
use crate::quad::{
    ln_sum_exp, refine_until_converged, resolve_grid, CellDiscretization, Extrapolation, InnerWeight, QuadratureConfig,
    Shift,
};
use crate::transport::compute_diffusion;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmallForceCoefficients {
    /// `(∫e^{−φ})(∫e^{φ})`.
    pub a0: f64,
    /// `∫∫ e^{−φ(x) + φ(x+s)} s ds dx`.
    pub a1: f64,
    pub ratio: f64,
}

/// Truncated expansion values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Expansion {
    pub v: f64,
    pub zeta_eff: f64,
    pub d_eff: f64,
    pub einstein_product: f64,
}

pub fn small_f_coefficients(phi: &PeriodicPotential, cfg: &QuadratureConfig) -> Result<SmallForceCoefficients> {
    cfg.validate()?;
    let (n0, aligned) = resolve_grid(cfg.n_grid, phi, cfg.align_breakpoints);
    let extrapolation = if phi.is_smooth() { Extrapolation::None } else { Extrapolation::Romberg };
    let r = refine_until_converged(n0, cfg, extrapolation, |n| {
        let d = CellDiscretization::new(phi, n, aligned, cfg.execution);
        let ln_a0 = d.ln_cell_integral(-1.0) + d.ln_cell_integral(1.0);
        let ln_r = d.ln_inner(&d.phi_left, &d.phi_right, Shift::Forward, InnerWeight::Ramp)?;
        let outer: Vec<f64> = ln_r.iter().zip(d.ln_mean_exp(-1.0)).map(|(r, e)| r + e).collect();
        let ln_a1 = ln_sum_exp(&outer) - (n as f64).ln();
        Ok((vec![ln_a0.exp(), ln_a1.exp()], ()))
    })?;
    let (a0, a1) = (r.values[0], r.values[1]);
    Ok(SmallForceCoefficients { a0, a1, ratio: a1 / a0 })
}

/// First-order small-force values; the Einstein product is 1 at this order.
pub fn small_f_expansion(c: &SmallForceCoefficients, f: f64) -> Expansion {
    let lin = f * (c.ratio - 0.5);
    Expansion {
        v: f / c.a0 * (1.0 + lin),
        zeta_eff: c.a0 * (1.0 - lin),
        d_eff: (1.0 + lin) / c.a0,
        einstein_product: 1.0,
    }
}

/// `1/f²` expansion in `G = ∫(φ′)²`; needs a smooth potential and `f > 0`.
pub fn large_f_expansion(phi: &PeriodicPotential, f: f64, cfg: &QuadratureConfig) -> Result<Expansion> {
    if !(f > 0.0 && f.is_finite()) {
        return Err(Error::AsymptoteInapplicable(format!("large-force expansion needs f > 0, got {f}")));
    }
    let g = phi.grad_squared_integral(cfg)?;
    Ok(large_f_from_g(g, f))
}

pub fn large_f_from_g(g: f64, f: f64) -> Expansion {
    let q = g / (f * f);
    Expansion { v: f * (1.0 - q), zeta_eff: 1.0 + q, d_eff: 1.0 + 3.0 * q, einstein_product: 1.0 + 4.0 * q }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinScan {
    pub f_star: f64,
    pub d_min: f64,
    /// `1/a₀`, the zero-force value.
    pub d_zero_force: f64,
    /// `D_eff` constant across the scan to rounding.
    pub flat: bool,
    /// The scan did not fall then rise; `f_star` is the grid minimum.
    pub non_unimodal: bool,
    pub evaluations: usize,
}

pub const SCAN_POINTS: usize = 33;

/// Grid scan of `D_eff` over the bracket, then golden-section refinement
/// around the smallest sample.
pub fn find_min_diffusion(phi: &PeriodicPotential, bracket: (f64, f64), cfg: &QuadratureConfig) -> Result<MinScan> {
    let (lo, hi) = bracket;
    if !(lo < hi && lo.is_finite() && hi.is_finite()) {
        return Err(Error::InvalidConfig(format!("bracket [{lo}, {hi}] is empty")));
    }
    let d_at = |f: f64| -> Result<f64> { Ok(compute_diffusion(&DimensionlessSystem::new(phi.clone(), f)?, cfg)?.d_eff) };
    let fs: Vec<f64> = (0..SCAN_POINTS).map(|k| lo + (hi - lo) * k as f64 / (SCAN_POINTS - 1) as f64).collect();
    let ds = map_range(cfg.execution, SCAN_POINTS, |k| d_at(fs[k])).into_iter().collect::<Result<Vec<_>>>()?;
    let d_zero_force = 1.0 / small_f_coefficients(phi, cfg)?.a0;

    let (k_min, &d_grid) = ds.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).expect("scan is non-empty");
    let d_max = ds.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let flat = d_max - d_grid <= 1e-12 * d_max.abs();
    // noise floor for the monotonicity test
    let eps = 1e-12 * d_max.abs();
    let unimodal = !flat
        && ds[..=k_min].windows(2).all(|w| w[1] <= w[0] + eps)
        && ds[k_min..].windows(2).all(|w| w[1] + eps >= w[0]);
    if !unimodal {
        return Ok(MinScan {
            f_star: fs[k_min],
            d_min: d_grid,
            d_zero_force,
            flat,
            non_unimodal: true,
            evaluations: SCAN_POINTS,
        });
    }

    let mut a = fs[k_min.saturating_sub(1)];
    let mut b = fs[(k_min + 1).min(SCAN_POINTS - 1)];
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut dc, mut dd) = (d_at(c)?, d_at(d)?);
    let mut evaluations = SCAN_POINTS + 2;
    let tol = 1e-7 * (hi - lo);
    while b - a > tol {
        if dc < dd {
            b = d;
            d = c;
            dd = dc;
            c = b - inv_phi * (b - a);
            dc = d_at(c)?;
        } else {
            a = c;
            c = d;
            dc = dd;
            d = a + inv_phi * (b - a);
            dd = d_at(d)?;
        }
        evaluations += 1;
    }
    let (f_star, d_min) = if dc < dd { (c, dc) } else { (d, dd) };
    let (f_star, d_min) = if d_grid < d_min { (fs[k_min], d_grid) } else { (f_star, d_min) };
    Ok(MinScan { f_star, d_min, d_zero_force, flat: false, non_unimodal: false, evaluations })
}
