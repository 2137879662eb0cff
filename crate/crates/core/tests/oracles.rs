//! End-to-end agreement between the formula engine and both oracles.

use washboard::oracle_fpe::{self, FpeConfig};
use washboard::oracle_sde::{simulate_ensemble, SdeConfig};
use washboard::transport::compute_diffusion;
use washboard::{DimensionlessSystem, PeriodicPotential, QuadratureConfig};

fn bessel_i0(a: f64) -> f64 {
    let q = a * a / 4.0;
    let (mut term, mut sum) = (1.0, 1.0);
    for k in 1..100 {
        term *= q / (k * k) as f64;
        sum += term;
    }
    sum
}

fn cosine(a: f64, f: f64) -> DimensionlessSystem {
    DimensionlessSystem::new(PeriodicPotential::cosine(a), f).unwrap()
}

fn sde(dt: f64) -> SdeConfig {
    SdeConfig { dt, t_final: 50.0, n_paths: 2000, seed: 42, ..SdeConfig::default() }
}

#[test]
fn sde_free_particle_example() {
    let e = simulate_ensemble(&DimensionlessSystem::free(2.0).unwrap(), &sde(1e-3)).unwrap();
    assert!((e.v_hat - 2.0).abs() <= e.v_ci, "{e:?}");
    assert!((e.deff_hat - 1.0).abs() <= e.deff_ci, "{e:?}");
}

#[test]
fn sde_zero_force_cosine() {
    let e = simulate_ensemble(&cosine(2.0, 0.0), &sde(1e-3)).unwrap();
    let d = 1.0 / bessel_i0(2.0).powi(2);
    assert!(e.v_hat.abs() <= e.v_ci, "{e:?}");
    assert!((e.deff_hat - d).abs() <= e.deff_ci, "{e:?} vs {d}");
}

#[test]
fn sde_dt_refinement_is_within_ci() {
    for sys in [DimensionlessSystem::free(1.0).unwrap(), cosine(1.0, 1.0)] {
        // coupled: the coarse run sums pairs of the fine run's normals
        let coarse = simulate_ensemble(&sys, &SdeConfig { noise_substeps: 2, ..sde(1e-3) }).unwrap();
        let fine = simulate_ensemble(&sys, &sde(5e-4)).unwrap();
        assert!((coarse.v_hat - fine.v_hat).abs() < coarse.v_ci, "{coarse:?} vs {fine:?}");
    }
}

#[test]
fn fpe_cosine_within_one_percent() {
    let sys = cosine(1.0, 1.0);
    let c = compute_diffusion(&sys, &QuadratureConfig::default()).unwrap();
    let r = oracle_fpe::run(&sys, &FpeConfig::new(256, 20.0)).unwrap();
    assert!((r.v_fpe / c.v - 1.0).abs() < 0.01);
    assert!((r.deff_fpe / c.d_eff - 1.0).abs() < 0.01);
}

#[test]
fn fpe_zero_force_bessel() {
    let r = oracle_fpe::run(&cosine(2.0, 0.0), &FpeConfig::new(256, 20.0)).unwrap();
    let d = 1.0 / bessel_i0(2.0).powi(2);
    assert!(r.v_fpe.abs() < 1e-6, "V = {}", r.v_fpe);
    assert!((r.deff_fpe / d - 1.0).abs() < 0.01, "D = {} vs {d}", r.deff_fpe);
}

#[test]
fn fpe_sawtooth_within_one_percent() {
    let sys = DimensionlessSystem::new(PeriodicPotential::sawtooth(4.0, 0.25).unwrap(), 2.0).unwrap();
    let c = compute_diffusion(&sys, &QuadratureConfig::default()).unwrap();
    let r = oracle_fpe::run(&sys, &FpeConfig::new(256, 20.0)).unwrap();
    assert!((r.v_fpe / c.v - 1.0).abs() < 0.01);
    assert!((r.deff_fpe / c.d_eff - 1.0).abs() < 0.01);
}

#[test]
fn fpe_trace_round_trips_through_csv() {
    let r = oracle_fpe::run(&DimensionlessSystem::free(1.0).unwrap(), &FpeConfig::new(32, 1.0)).unwrap();
    let mut buf = Vec::new();
    oracle_fpe::write_trace(&r.history, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,int_rho1,centered_second_moment,E_lyapunov"));
    assert_eq!(lines.count(), r.history.len());
}
