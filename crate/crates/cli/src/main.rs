#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod engines;
mod output;
mod spec;
mod validate;

use std::io::Write;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::Parser;
use serde_json::{json, Value};
use washboard::asymptotics::find_min_diffusion;

use args::{Cli, Command, SweepArgs};
use engines::{failure, EngineFailure, RowResult, Shared};
use spec::{Engine, SweepSpec, UsageError};
use validate::{check_row, Status};

/// Exit codes: 0 success, 1 engine or I/O failure, 2 usage, 3 validation failed.
enum Outcome {
    Ok,
    EngineFailed(Vec<EngineFailure>),
    ValidationFailed,
}

fn emit_error(kind: &str, detail: Value) {
    let record = json!({ "error": { "kind": kind, "detail": detail } });
    eprintln!("{record}");
}

fn write_summary(spec: &SweepSpec, summary: &Value, default_stdout: bool) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(summary)?;
    match (&spec.summary, default_stdout) {
        (Some(p), _) => std::fs::write(p, text + "\n").with_context(|| format!("writing summary {p:?}"))?,
        (None, true) => println!("{text}"),
        (None, false) => eprintln!("{text}"),
    }
    Ok(())
}

fn engine_seconds(spec: &SweepSpec, rows: &[RowResult]) -> Value {
    let mut m = serde_json::Map::new();
    for (slot, e) in Engine::ALL.iter().enumerate() {
        if spec.has(*e) {
            m.insert(e.name().into(), json!(rows.iter().map(|r| r.seconds[slot]).sum::<f64>()));
        }
    }
    Value::Object(m)
}

fn min_scan(spec: &SweepSpec, failures: &mut Vec<EngineFailure>) -> Value {
    let Some(bracket) = spec.min_scan else { return Value::Null };
    let start = Instant::now();
    match find_min_diffusion(&spec.phi, bracket, &spec.quad) {
        Ok(m) => json!({
            "bracket": [bracket.0, bracket.1],
            "f_star": m.f_star,
            "d_min": m.d_min,
            "d_zero_force": m.d_zero_force,
            "below_zero_force": m.d_min < m.d_zero_force,
            "flat": m.flat,
            "non_unimodal": m.non_unimodal,
            "evaluations": m.evaluations,
            "seconds": start.elapsed().as_secs_f64(),
        }),
        Err(e) => {
            failures.push(failure(None, Engine::Formula, &e));
            Value::Null
        }
    }
}

/// Rows plus any failures of work shared across rows.
fn compute(spec: &SweepSpec) -> (Vec<RowResult>, Vec<EngineFailure>) {
    let shared = Shared::new(spec);
    let mut failures = Vec::new();
    if let Some(Err(e)) = &shared.small_f {
        failures.push(failure(None, Engine::SmallF, e));
    }
    let rows = engines::run_rows(spec, &shared);
    failures.extend(rows.iter().flat_map(|r| r.failures.iter().cloned()));
    (rows, failures)
}

fn write_rows(spec: &SweepSpec, rows: &[RowResult], to_stdout_by_default: bool) -> anyhow::Result<()> {
    if spec.forces.is_empty() || (spec.out.is_none() && !to_stdout_by_default) {
        return Ok(());
    }
    let table: Vec<_> = rows.iter().map(|r| r.row.clone()).collect();
    let out = output::open(spec.out.as_deref()).context("opening table output")?;
    output::write_table(&table, spec.format, out).context("writing table")
}

fn sweep(spec: SweepSpec) -> anyhow::Result<Outcome> {
    let start = Instant::now();
    let (rows, mut failures) = compute(&spec);
    write_rows(&spec, &rows, true)?;
    let scan = min_scan(&spec, &mut failures);
    let summary = json!({
        "command": "sweep",
        "potential": spec.potential,
        "engines": spec.engines,
        "rows": rows.len(),
        "engine_seconds": engine_seconds(&spec, &rows),
        "wall_seconds": start.elapsed().as_secs_f64(),
        "failures": failures,
        "skipped": rows.iter().flat_map(|r| r.skipped.iter()).collect::<Vec<_>>(),
        "min_scan": scan,
    });
    write_summary(&spec, &summary, false)?;
    Ok(if failures.is_empty() { Outcome::Ok } else { Outcome::EngineFailed(failures) })
}

fn validate(spec: SweepSpec) -> anyhow::Result<Outcome> {
    if spec.engines.len() < 2 {
        return Err(UsageError("validate needs at least two engines".into()).into());
    }
    if spec.forces.is_empty() {
        return Err(UsageError("validate needs a non-empty force list".into()).into());
    }
    let start = Instant::now();
    let (rows, failures) = compute(&spec);
    write_rows(&spec, &rows, false)?;
    let checks: Vec<_> = rows.iter().flat_map(|r| check_row(r, &spec.engines, &spec.regime)).collect();
    let count = |s: Status| checks.iter().filter(|c| c.status == s).count();
    let (pass, fail, oor, err) = (count(Status::Pass), count(Status::Fail), count(Status::OutOfRegime), count(Status::Error));
    let summary = json!({
        "command": "validate",
        "potential": spec.potential,
        "engines": spec.engines,
        "reference": validate::reference(&spec.engines),
        "regime": spec.regime,
        "tolerances": {
            "fpe_rel": [validate::FPE_TOL.0, validate::FPE_TOL.1],
            "asymptote_rel": [validate::ASYMPTOTE_TOL.0, validate::ASYMPTOTE_TOL.1],
            "v_abs_floor": validate::V_FLOOR,
            "sde": "95% CI covers reference",
        },
        "checks": checks,
        "counts": { "pass": pass, "fail": fail, "out-of-regime": oor, "error": err },
        "passed": fail == 0 && err == 0,
        "engine_seconds": engine_seconds(&spec, &rows),
        "wall_seconds": start.elapsed().as_secs_f64(),
        "failures": failures,
    });
    write_summary(&spec, &summary, true)?;
    Ok(if !failures.is_empty() {
        Outcome::EngineFailed(failures)
    } else if fail > 0 || err > 0 {
        Outcome::ValidationFailed
    } else {
        Outcome::Ok
    })
}

fn run(command: Command) -> anyhow::Result<Outcome> {
    let (args, is_sweep): (&SweepArgs, bool) = match &command {
        Command::Sweep(a) => (a, true),
        Command::Validate(a) => (a, false),
    };
    let spec = spec::resolve(args)?;
    if is_sweep {
        sweep(spec)
    } else {
        validate(spec)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = run(cli.command);
    let _ = std::io::stdout().flush();
    match outcome {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::ValidationFailed) => ExitCode::from(3),
        Ok(Outcome::EngineFailed(failures)) => {
            emit_error("engine", json!(failures));
            ExitCode::from(1)
        }
        Err(e) => match e.downcast_ref::<UsageError>() {
            Some(u) => {
                emit_error("usage", json!(u.0));
                ExitCode::from(2)
            }
            None => {
                emit_error("io", json!(format!("{e:#}")));
                ExitCode::from(1)
            }
        },
    }
}
