//! Cross-engine comparison against the acceptance tolerances.

use serde::Serialize;

use crate::engines::{RowResult, Skipped};
use crate::spec::{Engine, Regime};

/// Relative tolerances on (V, D_eff) for the deterministic engines.
pub const FPE_TOL: (f64, f64) = (0.01, 0.02);
pub const ASYMPTOTE_TOL: (f64, f64) = (0.01, 0.01);
/// Absolute slack on V, which vanishes at f = 0.
pub const V_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    OutOfRegime,
    Error,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub f: f64,
    pub engine: Engine,
    pub reference: Engine,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_rel: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deff_rel: Option<f64>,
    pub criterion: String,
}

/// The most trustworthy engine present.
pub fn reference(engines: &[Engine]) -> Engine {
    [Engine::Formula, Engine::Fpe, Engine::Sde, Engine::SmallF, Engine::LargeF]
        .into_iter()
        .find(|e| engines.contains(e))
        .expect("at least one engine")
}

fn in_regime(engine: Engine, f: f64, regime: &Regime) -> bool {
    match engine {
        Engine::SmallF => f.abs() <= regime.small_f_max,
        Engine::LargeF => f >= regime.large_f_min,
        _ => true,
    }
}

fn rel(a: f64, b: f64) -> Option<f64> {
    (b != 0.0).then(|| ((a - b) / b).abs())
}

pub fn check_row(r: &RowResult, engines: &[Engine], regime: &Regime) -> Vec<Check> {
    let reference = reference(engines);
    let f = r.row.f;
    let skipped = |e: Engine| r.skipped.iter().any(|s: &Skipped| s.engine == e);
    engines
        .iter()
        .copied()
        .filter(|&e| e != reference)
        .map(|engine| {
            let mut c = Check { f, engine, reference, status: Status::Error, v_rel: None, deff_rel: None, criterion: String::new() };
            if !in_regime(engine, f, regime) || skipped(engine) {
                c.status = Status::OutOfRegime;
                c.criterion = match engine {
                    Engine::SmallF => format!("|f| <= {}", regime.small_f_max),
                    _ => format!("f >= {}", regime.large_f_min),
                };
                return c;
            }
            let (Some((v0, d0)), Some((v, d))) = (r.row.pair(reference), r.row.pair(engine)) else {
                c.criterion = "engine failed".into();
                return c;
            };
            c.v_rel = rel(v, v0);
            c.deff_rel = rel(d, d0);
            let ok = match engine {
                Engine::Sde => {
                    let (vci, dci) = (r.row.v_sde_ci.unwrap_or(0.0), r.row.deff_sde_ci.unwrap_or(0.0));
                    c.criterion = "95% CI covers reference".into();
                    (v - v0).abs() <= vci && (d - d0).abs() <= dci
                }
                _ => {
                    let (tv, td) = if engine == Engine::Fpe { FPE_TOL } else { ASYMPTOTE_TOL };
                    c.criterion = format!("rel V <= {tv}, rel D_eff <= {td}");
                    (v - v0).abs() <= tv * v0.abs() + V_FLOOR && (d - d0).abs() <= td * d0.abs()
                }
            };
            c.status = if ok { Status::Pass } else { Status::Fail };
            c
        })
        .collect()
}
