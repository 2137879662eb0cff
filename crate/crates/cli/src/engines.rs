//! One table row per force: every selected engine, with its timing and any
//! failure kept alongside.

use std::time::Instant;

use serde::Serialize;
use washboard::asymptotics::{large_f_expansion, small_f_coefficients, small_f_expansion, SmallForceCoefficients};
use washboard::oracle_fpe;
use washboard::oracle_sde::{simulate_ensemble, SdeEstimate};
use washboard::par::{map_range, Execution};
use washboard::transport::{compute_diffusion, TransportCoefficients};
use washboard::{DimensionlessSystem, Error};

use crate::spec::{Engine, SweepSpec};

pub const COLUMNS: [&str; 17] = [
    "f",
    "V_formula",
    "Deff_formula",
    "zeta_formula",
    "einstein_formula",
    "V_smallf",
    "Deff_smallf",
    "V_largef",
    "Deff_largef",
    "V_sde",
    "V_sde_ci",
    "Deff_sde",
    "Deff_sde_ci",
    "V_fpe",
    "Deff_fpe",
    "quad_n",
    "quad_relerr",
];

#[derive(Debug, Clone, Default, Serialize)]
pub struct Row {
    pub f: f64,
    #[serde(rename = "V_formula")]
    pub v_formula: Option<f64>,
    #[serde(rename = "Deff_formula")]
    pub deff_formula: Option<f64>,
    pub zeta_formula: Option<f64>,
    pub einstein_formula: Option<f64>,
    #[serde(rename = "V_smallf")]
    pub v_smallf: Option<f64>,
    #[serde(rename = "Deff_smallf")]
    pub deff_smallf: Option<f64>,
    #[serde(rename = "V_largef")]
    pub v_largef: Option<f64>,
    #[serde(rename = "Deff_largef")]
    pub deff_largef: Option<f64>,
    #[serde(rename = "V_sde")]
    pub v_sde: Option<f64>,
    #[serde(rename = "V_sde_ci")]
    pub v_sde_ci: Option<f64>,
    #[serde(rename = "Deff_sde")]
    pub deff_sde: Option<f64>,
    #[serde(rename = "Deff_sde_ci")]
    pub deff_sde_ci: Option<f64>,
    #[serde(rename = "V_fpe")]
    pub v_fpe: Option<f64>,
    #[serde(rename = "Deff_fpe")]
    pub deff_fpe: Option<f64>,
    pub quad_n: Option<usize>,
    pub quad_relerr: Option<f64>,
}

fn num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

impl Row {
    /// Cells in `COLUMNS` order; absent values are empty strings.
    pub fn cells(&self) -> Vec<String> {
        let o = |v: Option<f64>| v.map(num).unwrap_or_default();
        vec![
            num(self.f),
            o(self.v_formula),
            o(self.deff_formula),
            o(self.zeta_formula),
            o(self.einstein_formula),
            o(self.v_smallf),
            o(self.deff_smallf),
            o(self.v_largef),
            o(self.deff_largef),
            o(self.v_sde),
            o(self.v_sde_ci),
            o(self.deff_sde),
            o(self.deff_sde_ci),
            o(self.v_fpe),
            o(self.deff_fpe),
            self.quad_n.map(|n| n.to_string()).unwrap_or_default(),
            o(self.quad_relerr),
        ]
    }

    /// `(V, D_eff)` reported by `engine`, if it produced one.
    pub fn pair(&self, engine: Engine) -> Option<(f64, f64)> {
        let (v, d) = match engine {
            Engine::Formula => (self.v_formula, self.deff_formula),
            Engine::SmallF => (self.v_smallf, self.deff_smallf),
            Engine::LargeF => (self.v_largef, self.deff_largef),
            Engine::Sde => (self.v_sde, self.deff_sde),
            Engine::Fpe => (self.v_fpe, self.deff_fpe),
        };
        Some((v?, d?))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EngineFailure {
    pub f: Option<f64>,
    pub engine: Engine,
    pub kind: &'static str,
    pub message: String,
}

/// An engine declined the row because the force is outside its domain.
#[derive(Debug, Clone, Serialize)]
pub struct Skipped {
    pub f: f64,
    pub engine: Engine,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct RowResult {
    pub row: Row,
    pub failures: Vec<EngineFailure>,
    pub skipped: Vec<Skipped>,
    /// Seconds spent per engine, in `Engine::ALL` order.
    pub seconds: [f64; 5],
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Domain(_) => "domain",
        Error::InvalidConfig(_) => "invalid_config",
        Error::NonDifferentiable { .. } => "non_differentiable",
        Error::AsymptoteInapplicable(_) => "asymptote_inapplicable",
        Error::DynamicRange { .. } => "dynamic_range",
        Error::NotConverged { .. } => "not_converged",
        Error::DualFormMismatch { .. } => "dual_form_mismatch",
        Error::U1Undefined => "u1_undefined",
        Error::DriftUndefined(_) => "drift_undefined",
        Error::BlowUp { .. } => "blow_up",
        Error::InsufficientHistory { .. } => "insufficient_history",
        Error::PerturbationNotCentered { .. } => "perturbation_not_centered",
    }
}

pub fn failure(f: Option<f64>, engine: Engine, e: &Error) -> EngineFailure {
    EngineFailure { f, engine, kind: error_kind(e), message: e.to_string() }
}

/// Work shared by all rows.
pub struct Shared {
    pub small_f: Option<Result<SmallForceCoefficients, Error>>,
}

impl Shared {
    pub fn new(spec: &SweepSpec) -> Self {
        let small_f = spec.has(Engine::SmallF).then(|| small_f_coefficients(&spec.phi, &spec.quad));
        Self { small_f }
    }
}

fn run_one(spec: &SweepSpec, shared: &Shared, f: f64) -> RowResult {
    let mut out = RowResult { row: Row { f, ..Row::default() }, failures: Vec::new(), skipped: Vec::new(), seconds: [0.0; 5] };
    let sys = match DimensionlessSystem::new(spec.phi.clone(), f) {
        Ok(s) => s,
        Err(e) => {
            for &eng in &spec.engines {
                out.failures.push(failure(Some(f), eng, &e));
            }
            return out;
        }
    };
    for (slot, &engine) in Engine::ALL.iter().enumerate() {
        if !spec.has(engine) {
            continue;
        }
        let start = Instant::now();
        let r = &mut out.row;
        let result: Result<(), Error> = match engine {
            Engine::Formula => compute_diffusion(&sys, &spec.quad).map(|c: TransportCoefficients| {
                r.v_formula = Some(c.v);
                r.deff_formula = Some(c.d_eff);
                r.zeta_formula = Some(c.zeta_eff);
                r.einstein_formula = Some(c.einstein_product());
                r.quad_n = Some(c.quadrature_n);
                r.quad_relerr = Some(c.achieved_rel_err);
            }),
            Engine::SmallF => match shared.small_f.as_ref() {
                Some(Ok(c)) => {
                    let e = small_f_expansion(c, f);
                    r.v_smallf = Some(e.v);
                    r.deff_smallf = Some(e.d_eff);
                    Ok(())
                }
                // reported once by the caller
                _ => Ok(()),
            },
            Engine::LargeF => match large_f_expansion(&spec.phi, f, &spec.quad) {
                Ok(e) => {
                    r.v_largef = Some(e.v);
                    r.deff_largef = Some(e.d_eff);
                    Ok(())
                }
                Err(Error::AsymptoteInapplicable(reason)) => {
                    out.skipped.push(Skipped { f, engine, reason });
                    Ok(())
                }
                Err(e) => Err(e),
            },
            Engine::Sde => simulate_ensemble(&sys, &spec.sde).map(|e: SdeEstimate| {
                r.v_sde = Some(e.v_hat);
                r.v_sde_ci = Some(e.v_ci);
                r.deff_sde = Some(e.deff_hat);
                r.deff_sde_ci = Some(e.deff_ci);
            }),
            Engine::Fpe => oracle_fpe::run(&sys, &spec.fpe).map(|run| {
                r.v_fpe = Some(run.v_fpe);
                r.deff_fpe = Some(run.deff_fpe);
            }),
        };
        out.seconds[slot] = start.elapsed().as_secs_f64();
        if let Err(e) = result {
            out.failures.push(failure(Some(f), engine, &e));
        }
    }
    out
}

/// All rows, computed in parallel and returned in input order.
pub fn run_rows(spec: &SweepSpec, shared: &Shared) -> Vec<RowResult> {
    map_range(Execution::Parallel, spec.forces.len(), |i| run_one(spec, shared, spec.forces[i]))
}
