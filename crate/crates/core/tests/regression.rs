//! Archived transport values. Derived once from the formula engine and
//! cross-checked against the Fokker-Planck oracle; any drift here is a
//! behavioural change.

use washboard::oracle_fpe::{self, FpeConfig};
use washboard::transport::compute_diffusion;
use washboard::{DimensionlessSystem, PeriodicPotential, QuadratureConfig};

const FIXTURES: &[(&str, f64, f64, f64)] = &[
    // (potential, f, V, D_eff)
    ("cosine", 0.5, 3.127031548895606e-1, 6.310085137649794e-1),
    ("cosine", 1.0, 6.299726488643922e-1, 6.519258946349219e-1),
    ("cosine", 2.0, 1.294454674915705e0, 7.282473249891791e-1),
    ("cosine", -3.0, -2.018447011166483e0, 8.331098962285152e-1),
    ("sawtooth", 0.5, 3.609465977153123e-1, 7.264281631224643e-1),
    ("sawtooth", 1.0, 7.220971799463552e-1, 7.399808424593806e-1),
    ("sawtooth", 2.0, 1.458224236446708e0, 7.954999225838124e-1),
    ("sawtooth", -3.0, -2.33307755158314e0, 8.908654724192346e-1),
    ("piecewise_const", 0.5, 2.106194936169113e-1, 4.262904109302965e-1),
    ("piecewise_const", 1.0, 4.249845803423258e-1, 4.44912403844867e-1),
    ("piecewise_const", 2.0, 8.785578218167719e-1, 5.147744532339296e-1),
    ("piecewise_const", -3.0, -1.382740941216522e0, 6.166347028348762e-1),
];

fn potential(name: &str) -> PeriodicPotential {
    match name {
        "cosine" => PeriodicPotential::cosine(1.0),
        "sawtooth" => PeriodicPotential::sawtooth(2.0, 0.25).unwrap(),
        _ => PeriodicPotential::piecewise_const(1.0),
    }
}

#[test]
fn formula_engine_matches_fixtures() {
    for &(name, f, v, d) in FIXTURES {
        let sys = DimensionlessSystem::new(potential(name), f).unwrap();
        let c = compute_diffusion(&sys, &QuadratureConfig::default()).unwrap();
        assert!(((c.v - v) / v).abs() < 1e-9, "{name} f={f}: V {} vs {v}", c.v);
        assert!(((c.d_eff - d) / d).abs() < 1e-9, "{name} f={f}: D {} vs {d}", c.d_eff);
    }
}

#[test]
fn zero_force_fixtures_have_closed_forms() {
    let cfg = QuadratureConfig::default();
    // two-level potential ±1: D = 1/cosh²(1)
    let pc = compute_diffusion(&DimensionlessSystem::new(potential("piecewise_const"), 0.0).unwrap(), &cfg).unwrap();
    assert!((pc.d_eff - 1.0 / 1f64.cosh().powi(2)).abs() < 1e-12);
    // sawtooth of height A: D = A²/((e^A − 1)(1 − e^{−A}))
    let saw = compute_diffusion(&DimensionlessSystem::new(potential("sawtooth"), 0.0).unwrap(), &cfg).unwrap();
    let a = 2f64;
    assert!((saw.d_eff - a * a / ((a.exp() - 1.0) * (1.0 - (-a).exp()))).abs() < 1e-9);
}

#[test]
fn piecewise_const_fpe_fixtures() {
    // n = 128, t_final = 20
    let archived = [(0.5, 2.106193386152e-1, 4.262897840398e-1), (2.0, 8.785477994720e-1, 5.147637778401e-1)];
    for (f, v, d) in archived {
        let sys = DimensionlessSystem::new(potential("piecewise_const"), f).unwrap();
        let r = oracle_fpe::run(&sys, &FpeConfig::new(128, 20.0)).unwrap();
        assert!(((r.v_fpe - v) / v).abs() < 1e-7, "f={f}: V {} vs {v}", r.v_fpe);
        assert!(((r.deff_fpe - d) / d).abs() < 1e-7, "f={f}: D {} vs {d}", r.deff_fpe);
    }
}
