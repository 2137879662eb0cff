//! Config file plus flag overrides, resolved into a validated sweep.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use washboard::oracle_fpe::FpeConfig;
use washboard::oracle_sde::SdeConfig;
use washboard::{PeriodicPotential, PotentialSpec, QuadratureConfig};

use crate::args::{Format, SweepArgs};

/// Invalid input; maps to exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage<T>(msg: impl Into<String>) -> Result<T, UsageError> {
    Err(UsageError(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Formula,
    SmallF,
    LargeF,
    Sde,
    Fpe,
}

impl Engine {
    pub const ALL: [Engine; 5] = [Engine::Formula, Engine::SmallF, Engine::LargeF, Engine::Sde, Engine::Fpe];

    pub fn name(self) -> &'static str {
        match self {
            Engine::Formula => "formula",
            Engine::SmallF => "small_f",
            Engine::LargeF => "large_f",
            Engine::Sde => "sde",
            Engine::Fpe => "fpe",
        }
    }

    fn parse(s: &str) -> Result<Self, UsageError> {
        Engine::ALL.into_iter().find(|e| e.name() == s.trim()).ok_or_else(|| {
            UsageError(format!("unknown engine {s:?}; expected one of formula, small_f, large_f, sde, fpe"))
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum ListOrString<T> {
    Text(String),
    List(Vec<T>),
}

/// Keys accepted in the `--config` file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    potential: Option<PotentialSpec>,
    forces: Option<ListOrString<f64>>,
    engines: Option<ListOrString<String>>,
    out: Option<PathBuf>,
    format: Option<Format>,
    summary: Option<PathBuf>,
    seed: Option<u64>,
    quad_n: Option<usize>,
    quad_tol: Option<f64>,
    sde_dt: Option<f64>,
    sde_tfinal: Option<f64>,
    sde_paths: Option<usize>,
    fpe_n: Option<usize>,
    fpe_tfinal: Option<f64>,
    min_scan: Option<String>,
    small_f_max: Option<f64>,
    large_f_min: Option<f64>,
}

/// Force thresholds outside of which the expansions are not judged.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Regime {
    pub small_f_max: f64,
    pub large_f_min: f64,
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub potential: PotentialSpec,
    pub phi: PeriodicPotential,
    pub forces: Vec<f64>,
    pub engines: Vec<Engine>,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub summary: Option<PathBuf>,
    pub quad: QuadratureConfig,
    pub sde: SdeConfig,
    pub fpe: FpeConfig,
    pub min_scan: Option<(f64, f64)>,
    pub regime: Regime,
}

impl SweepSpec {
    pub fn has(&self, e: Engine) -> bool {
        self.engines.contains(&e)
    }
}

fn parse_f64(s: &str, what: &str) -> Result<f64, UsageError> {
    match s.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => usage(format!("{what}: {s:?} is not a finite number")),
    }
}

/// `1,2,4`, `a:b:n` (linear, inclusive) or `loga:b:n` (geometric, inclusive).
pub fn parse_forces(s: &str) -> Result<Vec<f64>, UsageError> {
    let s = s.trim();
    let (log, body) = match s.strip_prefix("log") {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    if log || body.contains(':') {
        let parts: Vec<&str> = body.split(':').collect();
        if parts.len() != 3 {
            return usage(format!("force range {s:?} must look like a:b:n or loga:b:n"));
        }
        let (a, b) = (parse_f64(parts[0], "force range start")?, parse_f64(parts[1], "force range end")?);
        let n: usize = match parts[2].trim().parse() {
            Ok(n) if n >= 1 => n,
            _ => return usage(format!("force range count {:?} must be a positive integer", parts[2])),
        };
        if n == 1 {
            return Ok(vec![a]);
        }
        if log && !(a > 0.0 && b > 0.0) {
            return usage(format!("logarithmic force range {s:?} needs positive endpoints"));
        }
        let t = |k: usize| k as f64 / (n - 1) as f64;
        return Ok((0..n)
            .map(|k| match (log, k) {
                (_, 0) => a,
                (_, k) if k == n - 1 => b,
                (true, k) => 10f64.powf(a.log10() + t(k) * (b.log10() - a.log10())),
                (false, k) => a + t(k) * (b - a),
            })
            .collect());
    }
    body.split(',').filter(|p| !p.trim().is_empty()).map(|p| parse_f64(p, "force")).collect()
}

pub fn parse_bracket(s: &str) -> Result<(f64, f64), UsageError> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 2 {
        return usage(format!("bracket {s:?} must look like a:b"));
    }
    let (a, b) = (parse_f64(parts[0], "bracket start")?, parse_f64(parts[1], "bracket end")?);
    if !(a < b) {
        return usage(format!("bracket {s:?} must have a < b"));
    }
    Ok((a, b))
}

fn parse_engines(list: &[String]) -> Result<Vec<Engine>, UsageError> {
    let mut out = list.iter().filter(|s| !s.trim().is_empty()).map(|s| Engine::parse(s)).collect::<Result<Vec<_>, _>>()?;
    out.sort();
    out.dedup();
    Ok(out)
}

fn parse_potential(arg: &str) -> Result<PotentialSpec, UsageError> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg).map_err(|e| UsageError(format!("cannot read potential file {arg:?}: {e}")))?
    };
    serde_json::from_str(&text).map_err(|e| UsageError(format!("invalid potential JSON: {e}")))
}

fn read_config(path: &Path) -> Result<ConfigFile, UsageError> {
    let text = std::fs::read_to_string(path).map_err(|e| UsageError(format!("cannot read config {path:?}: {e}")))?;
    serde_json::from_str(&text).map_err(|e| UsageError(format!("invalid config {path:?}: {e}")))
}

/// Merge flags over the config file and check every invariant. An empty
/// force list is allowed only together with a min-scan.
pub fn resolve(args: &SweepArgs) -> Result<SweepSpec, UsageError> {
    let file = match &args.config {
        Some(p) => read_config(p)?,
        None => ConfigFile::default(),
    };

    let potential = match (&args.potential, file.potential) {
        (Some(arg), _) => parse_potential(arg)?,
        (None, Some(spec)) => spec,
        (None, None) => return usage("no potential given (use --potential or the config key \"potential\")"),
    };
    let phi = PeriodicPotential::from_spec(&potential).map_err(|e| UsageError(format!("invalid potential: {e}")))?;

    let forces = match (&args.forces, file.forces) {
        (Some(s), _) => parse_forces(s)?,
        (None, Some(ListOrString::Text(s))) => parse_forces(&s)?,
        (None, Some(ListOrString::List(v))) => {
            if let Some(bad) = v.iter().find(|x| !x.is_finite()) {
                return usage(format!("force {bad} is not finite"));
            }
            v
        }
        (None, None) => Vec::new(),
    };

    let engines = match (&args.engines, file.engines) {
        (Some(s), _) => parse_engines(&s.split(',').map(str::to_string).collect::<Vec<_>>())?,
        (None, Some(ListOrString::Text(s))) => parse_engines(&s.split(',').map(str::to_string).collect::<Vec<_>>())?,
        (None, Some(ListOrString::List(v))) => parse_engines(&v)?,
        (None, None) => vec![Engine::Formula],
    };
    if engines.is_empty() {
        return usage("at least one engine is required");
    }

    let min_scan = match args.min_scan.as_deref().or(file.min_scan.as_deref()) {
        Some(s) => Some(parse_bracket(s)?),
        None => None,
    };
    if forces.is_empty() && min_scan.is_none() {
        return usage("the force list is empty (use --forces, or --min-scan alone)");
    }

    let mut quad = QuadratureConfig::default();
    if let Some(n) = args.quad_n.or(file.quad_n) {
        quad.n_grid = n;
    }
    if let Some(t) = args.quad_tol.or(file.quad_tol) {
        quad.rel_tol = t;
    }
    quad.validate().map_err(|e| UsageError(e.to_string()))?;

    let mut sde = SdeConfig::default();
    if let Some(v) = args.seed.or(file.seed) {
        sde.seed = v;
    }
    if let Some(v) = args.sde_dt.or(file.sde_dt) {
        sde.dt = v;
    }
    if let Some(v) = args.sde_tfinal.or(file.sde_tfinal) {
        sde.t_final = v;
    }
    if let Some(v) = args.sde_paths.or(file.sde_paths) {
        sde.n_paths = v;
    }
    if engines.contains(&Engine::Sde) {
        sde.validate().map_err(|e| UsageError(e.to_string()))?;
    }

    let fpe = FpeConfig::new(args.fpe_n.or(file.fpe_n).unwrap_or(256), args.fpe_tfinal.or(file.fpe_tfinal).unwrap_or(20.0));
    if engines.contains(&Engine::Fpe) {
        fpe.validate().map_err(|e| UsageError(e.to_string()))?;
    }

    let regime = Regime {
        small_f_max: args.small_f_max.or(file.small_f_max).unwrap_or(0.1),
        large_f_min: args.large_f_min.or(file.large_f_min).unwrap_or(20.0),
    };

    Ok(SweepSpec {
        potential,
        phi,
        forces,
        engines,
        out: args.out.clone().or(file.out),
        format: args.format.or(file.format).unwrap_or_default(),
        summary: args.summary.clone().or(file.summary),
        quad,
        sde,
        fpe,
        min_scan,
        regime,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn force_lists_and_ranges() {
        assert_eq!(parse_forces("1,2,4").unwrap(), vec![1.0, 2.0, 4.0]);
        assert_eq!(parse_forces("-1, 0.5").unwrap(), vec![-1.0, 0.5]);
        assert_eq!(parse_forces("0:1:5").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let log = parse_forces("log0.01:100:13").unwrap();
        assert_eq!(log.len(), 13);
        assert_eq!((log[0], log[12]), (0.01, 100.0));
        assert_eq!((log[3], log[6]), (0.1, 1.0));
        assert_eq!(parse_forces("3:7:1").unwrap(), vec![3.0]);
        for bad in ["log0:1:3", "1:2", "1:2:0", "a,b", "1,inf"] {
            assert!(parse_forces(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn brackets() {
        assert_eq!(parse_bracket("-2:2").unwrap(), (-2.0, 2.0));
        assert!(parse_bracket("2:-2").is_err());
        assert!(parse_bracket("2").is_err());
    }

    #[test]
    fn engines_are_canonical() {
        let e = parse_engines(&["fpe".into(), "formula".into(), "fpe".into()]).unwrap();
        assert_eq!(e, vec![Engine::Formula, Engine::Fpe]);
        assert!(parse_engines(&["euler".into()]).is_err());
    }

    #[test]
    fn flags_override_config() {
        let dir = std::env::temp_dir().join(format!("washboard-spec-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let cfg = dir.join("c.json");
        std::fs::write(&cfg, r#"{"potential": {"kind": "cosine", "A": 2}, "forces": [1, 2], "seed": 5, "quad_n": 128}"#).unwrap();
        let args = SweepArgs { config: Some(cfg), seed: Some(9), ..Default::default() };
        let s = resolve(&args).unwrap();
        assert_eq!(s.forces, vec![1.0, 2.0]);
        assert_eq!((s.sde.seed, s.quad.n_grid), (9, 128));
        assert_eq!(s.potential, PotentialSpec::Cosine { amplitude: 2.0 });
        std::fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn missing_pieces_are_usage_errors() {
        assert!(resolve(&SweepArgs::default()).is_err());
        let base = SweepArgs { potential: Some(r#"{"kind":"cosine","A":1}"#.into()), ..Default::default() };
        assert!(resolve(&base).is_err(), "empty force list");
        let bad_engine = SweepArgs { forces: Some("1".into()), engines: Some("".into()), ..base.clone() };
        assert!(resolve(&bad_engine).is_err());
        let ok = SweepArgs { min_scan: Some("-1:1".into()), ..base };
        assert!(resolve(&ok).is_ok());
    }
}
