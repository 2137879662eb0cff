//! Periodic quadrature for the nested cell integrals.
//!
//! Two inner rules are used, chosen by the potential:
//!
//! * smooth potentials: spectral product integration. The periodic factor is
//!   replaced by its trigonometric interpolant on the uniform grid and
//!   integrated against the weight (`e^{−fs}` or `s`) exactly, so the
//!   non-periodic decay costs no accuracy at any force.
//! * potentials with breakpoints: exponential-fitted panels on a grid that
//!   contains every breakpoint. Each panel interpolates the log of the
//!   integrand linearly between one-sided limits, which is exact for
//!   piecewise-linear and piecewise-constant potentials. Outer integrals use
//!   the mean of left and right limits at breakpoint nodes, and refinement
//!   applies Romberg extrapolation.
//!
//! Both rules reduce the O(n²) double integrals to circular sums over
//! precomputed per-node factors; the outer index is data-parallel.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::par::{compensated_sum, map_range, Execution};
use crate::potential::PeriodicPotential;

/// Largest exponent spread tolerated before a computation is rejected.
pub const MAX_EXPONENT_SPREAD: f64 = 1400.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    /// Points per period; a power of two, at least 16.
    pub n_grid: usize,
    pub rel_tol: f64,
    pub max_refinements: usize,
    /// Stretch the grid so every breakpoint is a node.
    pub align_breakpoints: bool,
    pub execution: Execution,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { n_grid: 256, rel_tol: 1e-10, max_refinements: 6, align_breakpoints: true, execution: Execution::Parallel }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_grid < 16 || !self.n_grid.is_power_of_two() {
            return Err(Error::InvalidConfig(format!("n_grid = {} must be a power of two ≥ 16", self.n_grid)));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::InvalidConfig(format!("rel_tol = {} must be positive", self.rel_tol)));
        }
        Ok(())
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n_grid = n;
        self
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }
}

/// A period-1 function sampled at `x_i = i/n`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellGrid {
    pub values: Vec<f64>,
}

impl CellGrid {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Self {
        Self { values: (0..n).map(|i| f(i as f64 / n as f64)).collect() }
    }

    pub fn constant(n: usize, v: f64) -> Self {
        Self { values: vec![v; n] }
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 / self.n() as f64
    }

    /// Value at index `i` modulo `n`, for any signed `i`.
    pub fn at(&self, i: isize) -> f64 {
        self.values[i.rem_euclid(self.n() as isize) as usize]
    }

    pub fn integral(&self) -> f64 {
        periodic_integral(self)
    }

    /// `∫₀^{x_i} g` by cumulative trapezoid; entry `i` covers `[0, x_i]`.
    pub fn cumulative_trapezoid(&self) -> CellGrid {
        let n = self.n();
        let h = 1.0 / n as f64;
        let mut out = Vec::with_capacity(n);
        let mut acc = 0.0;
        for i in 0..n {
            out.push(acc);
            acc += 0.5 * h * (self.values[i] + self.values[(i + 1) % n]);
        }
        CellGrid::new(out)
    }

    pub fn max_abs_diff(&self, other: &CellGrid) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// `∫₀¹ g dx ≈ (1/n) Σ g_i`, the trapezoid rule on a periodic grid.
pub fn periodic_integral(g: &CellGrid) -> f64 {
    if g.values.is_empty() {
        return 0.0;
    }
    compensated_sum(g.values.iter().copied()) / g.n() as f64
}

/// Smallest grid size `≥ n_grid` of the form `q·2^m` whose nodes include every
/// breakpoint. Returns `(n, aligned)`; unalignable breakpoints leave `n_grid`.
pub fn resolve_grid(n_grid: usize, phi: &PeriodicPotential, align: bool) -> (usize, bool) {
    let bps = phi.breakpoints();
    if bps.is_empty() {
        return (n_grid, true);
    }
    let on_grid = |n: usize| bps.iter().all(|&b| (b * n as f64).fract() == 0.0);
    if !align {
        return (n_grid, on_grid(n_grid));
    }
    let q = (1..=1usize << 16).find(|&q| {
        bps.iter().all(|&b| {
            let p = (b * q as f64).round();
            (p / q as f64) == b
        })
    });
    match q {
        Some(q) => {
            let mut n = q;
            while n < n_grid {
                n *= 2;
            }
            (n, on_grid(n))
        }
        None => (n_grid, false),
    }
}

/// How successive refinements are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extrapolation {
    /// Compare raw values; for spectrally convergent rules.
    None,
    /// Romberg table on an error expansion in even powers of `1/n`.
    Romberg,
}

#[derive(Debug, Clone)]
pub struct Refined<T> {
    /// Converged (possibly extrapolated) key values.
    pub values: Vec<f64>,
    /// Auxiliary output of the finest evaluation.
    pub payload: T,
    /// Finest resolution evaluated.
    pub n: usize,
    /// Final relative change between successive estimates.
    pub rel_err: f64,
    pub levels: usize,
}

fn relative_change(new: &[f64], old: &[f64]) -> (f64, usize) {
    new.iter()
        .zip(old)
        .enumerate()
        .map(|(k, (a, b))| ((a - b).abs() / a.abs().max(f64::MIN_POSITIVE), k))
        .fold((0.0, 0), |acc, v| if v.0 > acc.0 { v } else { acc })
}

/// Evaluate at `n, 2n, 4n, …` until successive estimates of every key agree
/// to `cfg.rel_tol`, or `cfg.max_refinements` doublings have been spent.
pub fn refine_until_converged<T, F>(
    start_n: usize,
    cfg: &QuadratureConfig,
    extrapolation: Extrapolation,
    mut compute: F,
) -> Result<Refined<T>>
where
    F: FnMut(usize) -> Result<(Vec<f64>, T)>,
{
    let mut n = start_n;
    let mut table: Vec<Vec<Vec<f64>>> = Vec::new();
    let mut best_prev: Option<Vec<f64>> = None;
    for level in 0..=cfg.max_refinements {
        let (values, payload) = compute(n)?;
        let mut row = vec![values];
        if extrapolation == Extrapolation::Romberg {
            if let Some(prev_row) = table.last() {
                for m in 1..=prev_row.len() {
                    let factor = 4f64.powi(m as i32) - 1.0;
                    let next: Vec<f64> = row[m - 1]
                        .iter()
                        .zip(&prev_row[m - 1])
                        .map(|(fine, coarse)| fine + (fine - coarse) / factor)
                        .collect();
                    row.push(next);
                }
            }
        }
        let best = row.last().cloned().expect("row has at least one entry");
        if let Some(prev) = &best_prev {
            let (rel, k) = relative_change(&best, prev);
            if rel < cfg.rel_tol {
                return Ok(Refined { values: best, payload, n, rel_err: rel, levels: level + 1 });
            }
            if level == cfg.max_refinements {
                return Err(Error::NotConverged { n, last: best[k], previous: prev[k] });
            }
        }
        best_prev = Some(best);
        table.push(row);
        n *= 2;
    }
    unreachable!("loop returns on its final level")
}

/// Scalar form of [`refine_until_converged`]: returns `(value, rel_err)`.
pub fn refine_scalar(
    cfg: &QuadratureConfig,
    extrapolation: Extrapolation,
    mut compute: impl FnMut(usize) -> Result<f64>,
) -> Result<(f64, f64)> {
    let r = refine_until_converged(cfg.n_grid, cfg, extrapolation, |n| Ok((vec![compute(n)?], ())))?;
    Ok((r.values[0], r.rel_err))
}

// ---------------------------------------------------------------------------
// scalar helpers

/// `ln((1 − e^{−f}) / f)`, continuous through `f = 0`.
pub fn ln_decay_mass(f: f64) -> f64 {
    if f == 0.0 {
        0.0
    } else if f > 0.0 {
        (-(-f).exp_m1()).ln() - f.ln()
    } else if f > -700.0 {
        (-f).exp_m1().ln() - (-f).ln()
    } else {
        -f + (-(f.exp())).ln_1p() - (-f).ln()
    }
}

/// `ln|1 − e^{−f}|`; `−∞` at `f = 0`.
pub fn ln_abs_one_minus_exp_neg(f: f64) -> f64 {
    if f > 0.0 {
        (-(-f).exp_m1()).ln()
    } else if f == 0.0 {
        f64::NEG_INFINITY
    } else if f > -700.0 {
        (-f).exp_m1().ln()
    } else {
        -f + (-(f.exp())).ln_1p()
    }
}

/// `∫₀¹ e^{zτ} dτ` for `z ≤ 0`.
fn exp_mean(z: f64) -> f64 {
    if z == 0.0 {
        1.0
    } else {
        z.exp_m1() / z
    }
}

/// `∫₀¹ τ e^{zτ} dτ` for `z ≤ 0`.
fn exp_first_moment(z: f64) -> f64 {
    if z.abs() < 0.5 {
        // Σ z^m / (m! (m + 2))
        let mut term = 1.0;
        let mut sum = 0.5;
        for m in 1..30 {
            term *= z / m as f64;
            sum += term / (m + 2) as f64;
        }
        sum
    } else {
        (z.exp() * (z - 1.0) + 1.0) / (z * z)
    }
}

/// `ln ∫ₐᵇ e^{g}` for `g` linear between `ga` and `gb` on a panel of width `dx`.
pub fn ln_panel(ga: f64, gb: f64, dx: f64) -> f64 {
    let hi = ga.max(gb);
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + dx.ln() + exp_mean(-(gb - ga).abs()).ln()
}

/// `ln ∫ₐᵇ ((y − a)/dx) e^{g} dy` for linear `g`.
fn ln_panel_ramp(ga: f64, gb: f64, dx: f64) -> f64 {
    let z = gb - ga;
    if z <= 0.0 {
        ga + dx.ln() + exp_first_moment(z).ln()
    } else {
        gb + dx.ln() + (exp_mean(-z) - exp_first_moment(-z)).ln()
    }
}

fn ln_add_exp(a: f64, b: f64) -> f64 {
    let hi = a.max(b);
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + ((a - hi).exp() + (b - hi).exp()).ln()
}

/// `ln Σ e^{v}` for a slice.
pub fn ln_sum_exp(values: &[f64]) -> f64 {
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + compensated_sum(values.iter().map(|v| (v - hi).exp())).ln()
}

// ---------------------------------------------------------------------------
// spectral product weights

/// Weight of the inner integral over `s ∈ [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InnerWeight {
    /// `e^{−fs}`.
    Decay(f64),
    /// `s`.
    Ramp,
}

/// Product-integration weights: `∫₀¹ h(s) w(s) ds ≈ e^{ln_scale} Σ_j weights_j h(j/n)`.
#[derive(Debug, Clone)]
pub struct SpectralWeights {
    pub weights: Vec<f64>,
    pub ln_scale: f64,
}

/// Weights exact for every trigonometric polynomial resolved on the grid.
pub fn spectral_weights(n: usize, weight: InnerWeight) -> SpectralWeights {
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
    let ln_scale = match weight {
        InnerWeight::Decay(f) => {
            // ∫₀¹ e^{2πiks} e^{−fs} ds = ((1 − e^{−f})/f) · f/(f − 2πik)
            coeffs[0] = Complex64::new(1.0, 0.0);
            for k in 1..n.div_ceil(2) {
                let c = Complex64::new(f, 0.0) / Complex64::new(f, -2.0 * PI * k as f64);
                coeffs[k] = c;
                coeffs[n - k] = c.conj();
            }
            if n.is_multiple_of(2) {
                let w = PI * n as f64;
                coeffs[n / 2] = Complex64::new(f * f / (f * f + w * w), 0.0);
            }
            ln_decay_mass(f)
        }
        InnerWeight::Ramp => {
            // ∫₀¹ s e^{2πiks} ds = −i/(2πk)
            coeffs[0] = Complex64::new(0.5, 0.0);
            for k in 1..n.div_ceil(2) {
                let c = Complex64::new(0.0, -1.0 / (2.0 * PI * k as f64));
                coeffs[k] = c;
                coeffs[n - k] = c.conj();
            }
            0.0
        }
    };
    FftPlanner::new().plan_fft_forward(n).process(&mut coeffs);
    let nf = n as f64;
    let weights = coeffs.iter().map(|c| c.re / nf).collect();
    SpectralWeights { weights, ln_scale }
}

// ---------------------------------------------------------------------------
// grid kernels

/// Direction of the inner shift: `G(x + s)` or `G(x − s)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shift {
    Forward,
    Backward,
}

/// A potential sampled on an `n`-point cell grid with one-sided limits.
#[derive(Debug, Clone)]
pub struct CellDiscretization {
    pub n: usize,
    pub phi_left: Vec<f64>,
    pub phi_right: Vec<f64>,
    /// `true` → spectral rule; `false` → exponential-fitted panels.
    pub spectral: bool,
    pub aligned: bool,
    pub execution: Execution,
}

impl CellDiscretization {
    pub fn new(phi: &PeriodicPotential, n: usize, aligned: bool, execution: Execution) -> Self {
        let (phi_left, phi_right) = (0..n).map(|i| phi.limits(i as f64 / n as f64)).unzip();
        Self { n, phi_left, phi_right, spectral: phi.is_smooth(), aligned, execution }
    }

    /// Discretization at `cfg.n_grid`, stretched to align breakpoints.
    pub fn from_config(phi: &PeriodicPotential, cfg: &QuadratureConfig) -> Self {
        let (n, aligned) = resolve_grid(cfg.n_grid, phi, cfg.align_breakpoints);
        Self::new(phi, n, aligned, cfg.execution)
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// `ln` of the mean of the one-sided limits of `e^{sign·φ}` at each node:
    /// the trapezoid sample of a jump.
    pub fn ln_mean_exp(&self, sign: f64) -> Vec<f64> {
        self.phi_left
            .iter()
            .zip(&self.phi_right)
            .map(|(l, r)| {
                if l == r {
                    sign * l
                } else {
                    ln_add_exp(sign * l, sign * r) - std::f64::consts::LN_2
                }
            })
            .collect()
    }

    /// `ln ∫₀¹ e^{sign·φ} dx`: periodic trapezoid for smooth potentials,
    /// exact exponential fit across panels otherwise.
    pub fn ln_cell_integral(&self, sign: f64) -> f64 {
        let n = self.n;
        let terms: Vec<f64> = if self.spectral {
            self.phi_right.iter().map(|p| sign * p).collect()
        } else {
            (0..n)
                .map(|k| ln_panel(sign * self.phi_right[k], sign * self.phi_left[(k + 1) % n], self.h()) + (n as f64).ln())
                .collect()
        };
        ln_sum_exp(&terms) - (n as f64).ln()
    }

    /// For every node `i`, `ln ∫₀¹ G(x_i ± s) w(s) ds` where `G` is given by
    /// the logs of its one-sided limits at the nodes (`log_right` alone for the
    /// spectral rule).
    pub fn ln_inner(&self, log_left: &[f64], log_right: &[f64], shift: Shift, weight: InnerWeight) -> Result<Vec<f64>> {
        let n = self.n;
        if let (InnerWeight::Ramp, Shift::Backward) = (weight, shift) {
            return Err(Error::InvalidConfig("ramp weight is only defined for forward shifts".into()));
        }
        // Per-node factors P_k and shift-indexed coefficients c_j so that
        // row_i = Σ_j c_j P[(i ± j + offset) mod n].
        let (ln_factors, ramp_factors, coeffs, ln_coeff_scale, offset): (Vec<f64>, Option<Vec<f64>>, Vec<f64>, f64, isize) =
            if self.spectral {
                let sw = spectral_weights(n, weight);
                (log_right.to_vec(), None, sw.weights, sw.ln_scale, 0)
            } else {
                let h = self.h();
                match (weight, shift) {
                    (InnerWeight::Decay(f), Shift::Forward) => {
                        let p = (0..n).map(|k| ln_panel(log_right[k], log_left[(k + 1) % n] - f * h, h)).collect();
                        let (c, s) = decay_coefficients(n, f);
                        (p, None, c, s, 0)
                    }
                    (InnerWeight::Decay(f), Shift::Backward) => {
                        let p = (0..n).map(|k| ln_panel(log_right[k] - f * h, log_left[(k + 1) % n], h)).collect();
                        let (c, s) = decay_coefficients(n, f);
                        (p, None, c, s, -1)
                    }
                    (InnerWeight::Ramp, _) => {
                        let p0: Vec<f64> = (0..n).map(|k| ln_panel(log_right[k], log_left[(k + 1) % n], h)).collect();
                        let p1 = (0..n).map(|k| ln_panel_ramp(log_right[k], log_left[(k + 1) % n], h)).collect();
                        let c = (0..n).map(|j| j as f64 * h).collect();
                        (p0, Some(p1), c, 0.0, 0)
                    }
                }
            };

        let hi = ln_factors.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = ln_factors.iter().copied().fold(f64::INFINITY, f64::min);
        let spread = hi - lo
            + match weight {
                InnerWeight::Decay(f) => f.abs(),
                InnerWeight::Ramp => 0.0,
            };
        if !(spread <= MAX_EXPONENT_SPREAD) {
            return Err(Error::DynamicRange { spread });
        }
        let factors: Vec<f64> = ln_factors.iter().map(|v| (v - hi).exp()).collect();
        let ramp: Option<Vec<f64>> = ramp_factors.map(|r| r.iter().map(|v| (v - hi).exp()).collect());
        let h = self.h();
        let rows = map_range(self.execution, n, |i| {
            let mut acc = 0.0;
            match shift {
                Shift::Forward => {
                    // contiguous halves avoid a modulo in the hot loop
                    let (tail, head) = (&factors[i..], &factors[..i]);
                    for (c, p) in coeffs.iter().zip(tail.iter().chain(head)) {
                        acc += c * p;
                    }
                    if let Some(r) = &ramp {
                        let (tail, head) = (&r[i..], &r[..i]);
                        for p in tail.iter().chain(head) {
                            acc += h * p;
                        }
                    }
                }
                Shift::Backward => {
                    for (j, c) in coeffs.iter().enumerate() {
                        let idx = (i as isize - j as isize + offset).rem_euclid(n as isize) as usize;
                        acc += c * factors[idx];
                    }
                }
            }
            acc
        });
        rows.into_iter()
            .map(|s| {
                if s > 0.0 && s.is_finite() {
                    Ok(ln_coeff_scale + hi + s.ln())
                } else {
                    Err(Error::Domain(format!("inner quadrature under-resolved at n = {n} (row sum {s})")))
                }
            })
            .collect()
    }
}

/// `e^{−f s_j}` normalised by its maximum, and the log of that maximum.
fn decay_coefficients(n: usize, f: f64) -> (Vec<f64>, f64) {
    let h = 1.0 / n as f64;
    let top = if f < 0.0 { -f * (n - 1) as f64 * h } else { 0.0 };
    ((0..n).map(|j| (-f * j as f64 * h - top).exp()).collect(), top)
}

/// `∫₀¹ exp(sign·(φ(x + sign·s) − φ(x)) − fs) ds` at an arbitrary point.
///
/// `sign = +1` is the `w₀` integrand, `sign = −1` gives
/// `∫₀¹ exp(φ(x) − φ(x − s) − fs) ds`. With breakpoints and
/// `cfg.align_breakpoints`, panels are split at every breakpoint.
pub fn exp_integral_shifted(phi: &PeriodicPotential, f: f64, x: f64, sign: i32, cfg: &QuadratureConfig) -> Result<f64> {
    Ok(ln_exp_integral_shifted(phi, f, x, sign, cfg)?.exp())
}

/// Logarithm of [`exp_integral_shifted`].
pub fn ln_exp_integral_shifted(phi: &PeriodicPotential, f: f64, x: f64, sign: i32, cfg: &QuadratureConfig) -> Result<f64> {
    cfg.validate()?;
    if sign != 1 && sign != -1 {
        return Err(Error::Domain(format!("sign must be ±1, got {sign}")));
    }
    if !f.is_finite() {
        return Err(Error::Domain(format!("force {f} is not finite")));
    }
    let sg = sign as f64;
    let base = phi.eval(x);
    let n = cfg.n_grid;
    if phi.is_smooth() {
        let sw = spectral_weights(n, InnerWeight::Decay(f));
        let g: Vec<f64> = (0..n).map(|j| sg * (phi.eval(x + sg * j as f64 / n as f64) - base)).collect();
        let hi = g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = g.iter().copied().fold(f64::INFINITY, f64::min);
        if hi - lo > MAX_EXPONENT_SPREAD {
            return Err(Error::DynamicRange { spread: hi - lo });
        }
        let s = compensated_sum(sw.weights.iter().zip(&g).map(|(w, gj)| w * (gj - hi).exp()));
        if !(s > 0.0) {
            return Err(Error::Domain(format!("inner quadrature under-resolved at n = {n}")));
        }
        return Ok(sw.ln_scale + hi + s.ln());
    }

    // Panel nodes in s: the uniform grid plus breakpoint crossings.
    let mut nodes: Vec<f64> = (0..=n).map(|j| j as f64 / n as f64).collect();
    if cfg.align_breakpoints {
        for &b in phi.breakpoints() {
            let s = crate::potential::wrap(sg * (b - x));
            let snapped = (s * n as f64).round() / n as f64;
            if (s - snapped).abs() > 1e-12 {
                nodes.push(s);
            }
        }
        nodes.sort_by(f64::total_cmp);
    }
    // exponent at the two ends of each panel, approached from inside
    let limit = |s: f64, from_above: bool| -> f64 {
        let (l, r) = phi.limits(x + sg * s);
        // moving along +s is moving along sign·y
        let take_right = from_above == (sign == 1);
        let v = if take_right { r } else { l };
        sg * (v - base) - f * s
    };
    let ln_terms: Vec<f64> = nodes
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| ln_panel(limit(w[0], true), limit(w[1], false), w[1] - w[0]))
        .collect();
    let hi = ln_terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = ln_terms.iter().copied().fold(f64::INFINITY, f64::min);
    if hi - lo > MAX_EXPONENT_SPREAD {
        return Err(Error::DynamicRange { spread: hi - lo });
    }
    Ok(ln_sum_exp(&ln_terms))
}
