//! Euler–Maruyama ensembles of `dX = (f − φ′(X)) dt + √2 dW`.
//!
//! Stream layout: path `i` draws from `ChaCha8Rng::seed_from_u64(seed)` with
//! `set_stream(i)`. Its first `f64` picks the initial position from `u₀`; the
//! standard normals for the increments follow, `noise_substeps` of them per
//! step. Results are therefore independent of how paths are scheduled across
//! threads, and a run at `dt` with `k` substeps shares its Brownian path with
//! a run at `dt/k` with one.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nondim::DimensionlessSystem;
use crate::par::{compensated_sum, map_range, Execution};
use crate::potential::PeriodicPotential;
use crate::quad::{CellGrid, QuadratureConfig};
use crate::stats::{batch_ci, ls_slope};
use crate::transport::compute_u0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdeConfig {
    pub dt: f64,
    pub t_final: f64,
    pub n_paths: usize,
    pub seed: u64,
    /// Leading fraction of the horizon excluded from the slope fits.
    pub burn_in_fraction: f64,
    pub n_batches: usize,
    /// Recorded times, evenly spaced over the horizon.
    pub n_checkpoints: usize,
    /// Unit normals summed into each increment.
    #[serde(default = "one")]
    pub noise_substeps: usize,
    pub execution: Execution,
}

fn one() -> usize {
    1
}

impl Default for SdeConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_final: 50.0,
            n_paths: 2000,
            seed: 42,
            burn_in_fraction: 0.5,
            n_batches: 10,
            n_checkpoints: 200,
            noise_substeps: 1,
            execution: Execution::Parallel,
        }
    }
}

impl SdeConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt = {} must be positive", self.dt));
        }
        if !(self.t_final >= 100.0 * self.dt) {
            return bad(format!("t_final = {} must be at least 100·dt", self.t_final));
        }
        if self.n_paths < 100 {
            return bad(format!("n_paths = {} must be at least 100", self.n_paths));
        }
        if !(0.0..=0.5).contains(&self.burn_in_fraction) {
            return bad(format!("burn_in_fraction = {} must lie in [0, 0.5]", self.burn_in_fraction));
        }
        if self.n_batches < 10 || self.n_batches > self.n_paths {
            return bad(format!("n_batches = {} must be between 10 and n_paths", self.n_batches));
        }
        if self.n_checkpoints < 10 {
            return bad(format!("n_checkpoints = {} must be at least 10", self.n_checkpoints));
        }
        if self.noise_substeps == 0 {
            return bad("noise_substeps must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SdeEstimate {
    pub v_hat: f64,
    /// 95% half-width.
    pub v_ci: f64,
    pub deff_hat: f64,
    pub deff_ci: f64,
    pub n_paths: usize,
    pub t_final: f64,
    /// `dt · max|φ″| > 0.5`.
    pub stability_warning: bool,
}

fn path_rng(seed: u64, path: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path as u64);
    rng
}

/// Inverse-CDF draw from the piecewise-linear CDF of `u0` on `[0, 1)`.
fn invert_cdf(cdf: &[f64], u: f64) -> f64 {
    let n = cdf.len() - 1;
    let target = u * cdf[n];
    // first node with cdf ≥ target
    let k = cdf.partition_point(|&c| c < target).clamp(1, n);
    let (lo, hi) = (cdf[k - 1], cdf[k]);
    let frac = if hi > lo { (target - lo) / (hi - lo) } else { 0.0 };
    ((k - 1) as f64 + frac) / n as f64
}

fn cdf_nodes(u0: &CellGrid) -> Result<Vec<f64>> {
    let n = u0.n();
    if n == 0 {
        return Err(Error::Domain("u0 grid is empty".into()));
    }
    if u0.values.iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::Domain("u0 must be non-negative".into()));
    }
    let mut cdf = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    cdf.push(0.0);
    for i in 0..n {
        acc += 0.5 * (u0.values[i] + u0.values[(i + 1) % n]) / n as f64;
        cdf.push(acc);
    }
    if !(acc > 0.0) {
        return Err(Error::Domain("u0 has zero mass".into()));
    }
    Ok(cdf)
}

/// `count` draws from `u₀`; draw `i` is the initial position of path `i`.
pub fn sample_from_u0(u0: &CellGrid, count: usize, seed: u64) -> Result<Vec<f64>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    let cdf = cdf_nodes(u0)?;
    Ok((0..count).map(|i| invert_cdf(&cdf, path_rng(seed, i).random::<f64>())).collect())
}

fn curvature_estimate(phi: &PeriodicPotential) -> f64 {
    if let Some(c) = phi.curvature_bound() {
        return c;
    }
    let m = 4096;
    let h = 1.0 / m as f64;
    let bps = phi.breakpoints();
    (0..m)
        .filter(|&i| {
            let (a, b) = (i as f64 * h, (i + 1) as f64 * h);
            !bps.iter().any(|&p| p >= a && p <= b)
        })
        .filter_map(|i| {
            let a = phi.right_slope(i as f64 * h)?;
            let b = phi.right_slope((i + 1) as f64 * h)?;
            Some(((b - a) / h).abs())
        })
        .fold(0.0, f64::max)
}

/// Positions of one path at every checkpoint (index 0 is the start).
fn run_path(phi: &PeriodicPotential, f: f64, cfg: &SdeConfig, cdf: &[f64], steps_per: usize, path: usize) -> Vec<f64> {
    let mut rng = path_rng(cfg.seed, path);
    let mut x = invert_cdf(cdf, rng.random::<f64>());
    let noise = (2.0 * cfg.dt / cfg.noise_substeps as f64).sqrt();
    let mut out = Vec::with_capacity(cfg.n_checkpoints + 1);
    out.push(x);
    for _ in 0..cfg.n_checkpoints {
        for _ in 0..steps_per {
            let slope = phi.right_slope(x).unwrap_or(0.0);
            let z: f64 = (0..cfg.noise_substeps).map(|_| rng.sample::<f64, _>(StandardNormal)).sum();
            x += (f - slope) * cfg.dt + noise * z;
        }
        out.push(x);
    }
    out
}

fn moments(paths: &[Vec<f64>], k: usize) -> (f64, f64) {
    let n = paths.len() as f64;
    let mean = compensated_sum(paths.iter().map(|p| p[k])) / n;
    let var = compensated_sum(paths.iter().map(|p| (p[k] - mean).powi(2))) / (n - 1.0);
    (mean, var)
}

fn slopes(paths: &[Vec<f64>], times: &[f64], first: usize) -> (f64, f64) {
    let (means, vars): (Vec<f64>, Vec<f64>) = (first..times.len()).map(|k| moments(paths, k)).unzip();
    let t = &times[first..];
    (ls_slope(t, &means), ls_slope(t, &vars) / 2.0)
}

/// Ensemble estimates of `V` and `D_eff` with batch-means 95% intervals.
pub fn simulate_ensemble(sys: &DimensionlessSystem, cfg: &SdeConfig) -> Result<SdeEstimate> {
    cfg.validate()?;
    if !sys.phi.has_derivative() {
        return Err(Error::DriftUndefined(format!("{} potential has no derivative", sys.phi.kind_name())));
    }
    let total_steps = (cfg.t_final / cfg.dt).round() as usize;
    let steps_per = (total_steps / cfg.n_checkpoints).max(1);
    let dt_check = steps_per as f64 * cfg.dt;
    let times: Vec<f64> = (0..=cfg.n_checkpoints).map(|k| k as f64 * dt_check).collect();
    let first = times.iter().position(|&t| t >= cfg.burn_in_fraction * cfg.t_final).unwrap_or(0);
    if times.len() - first < 3 {
        return Err(Error::InsufficientHistory { samples: times.len() - first });
    }

    let qcfg = QuadratureConfig::default().with_execution(Execution::Sequential);
    let u0 = compute_u0(sys, &qcfg)?;
    let cdf = cdf_nodes(&u0)?;
    let paths = map_range(cfg.execution, cfg.n_paths, |i| run_path(&sys.phi, sys.f, cfg, &cdf, steps_per, i));

    let (v_hat, deff_hat) = slopes(&paths, &times, first);
    let per = cfg.n_paths / cfg.n_batches;
    let (bv, bd): (Vec<f64>, Vec<f64>) =
        (0..cfg.n_batches).map(|b| slopes(&paths[b * per..(b + 1) * per], &times, first)).unzip();
    let (_, v_ci) = batch_ci(&bv);
    let (_, deff_ci) = batch_ci(&bd);
    Ok(SdeEstimate {
        v_hat,
        v_ci,
        deff_hat,
        deff_ci,
        n_paths: cfg.n_paths,
        t_final: times[times.len() - 1],
        stability_warning: cfg.dt * curvature_estimate(&sys.phi) > 0.5,
    })
}
