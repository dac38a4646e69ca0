//! Batch front-end for `hadamard-core`: loads JSON inputs, runs one
//! command and writes a JSON report.
//!
//! Exit codes: 0 on success, 2 when a property check fails (the report
//! lists the failures), 1 on input or solver errors.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Map, Value};

use hadamard_core::combinations::{self, CombinationMode, KarcherConfig, SimplexWeights};
use hadamard_core::convexity::helly_check;
use hadamard_core::equilibrium::{ep_residual, proximal_point, resolvent, Problem};
use hadamard_core::suites::verify_suites;
use hadamard_core::{Exec, Manifold, ManifoldPoint};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "HADAMARD_EQ_THREADS";

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Verify {
        suites: Vec<String>,
        trials: Option<usize>,
    },
    Barycenter,
    Combine,
    Resolvent {
        lambda: Option<f64>,
    },
    Ppa {
        lambda: Option<f64>,
        iters: usize,
    },
    Helly {
        manifold: String,
        dim: usize,
        bodies: usize,
        trials: usize,
        csv: Option<PathBuf>,
    },
    Residual,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Verify { .. } => "verify",
            Command::Barycenter => "barycenter",
            Command::Combine => "combine",
            Command::Resolvent { .. } => "resolvent",
            Command::Ppa { .. } => "ppa",
            Command::Helly { .. } => "helly",
            Command::Residual => "residual",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub input_path: Option<PathBuf>,
    /// Report destination; stdout when absent.
    pub output_path: Option<PathBuf>,
    pub seed: Option<u64>,
    /// Dotted-path patches applied to the input document, e.g.
    /// `solver.tol = 1e-9`. Values are parsed as JSON when possible.
    pub overrides: BTreeMap<String, String>,
}

/// Why a run stopped early.
#[derive(Debug)]
pub enum Failure {
    /// Bad input; nothing was computed and no report is written.
    Input(String),
    /// The input parsed but a solver failed; the report carries `details`.
    Solver { message: String, details: Option<Value> },
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Input(m) => write!(f, "{m}"),
            Failure::Solver { message, .. } => write!(f, "{message}"),
        }
    }
}

fn solver_err(e: impl fmt::Display) -> Failure {
    Failure::Solver {
        message: e.to_string(),
        details: None,
    }
}

/// A finished run: the exit code and the report, if one was produced.
#[derive(Debug)]
pub struct Outcome {
    pub code: i32,
    pub report: Option<Value>,
    pub error: Option<String>,
}

/// Splits `key=value` pairs.
pub fn parse_overrides(pairs: &[String]) -> Result<BTreeMap<String, String>, String> {
    let mut out = BTreeMap::new();
    for p in pairs {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| format!("override {p:?} is not of the form key=value"))?;
        if k.is_empty() {
            return Err(format!("override {p:?} has an empty key"));
        }
        out.insert(k.to_string(), v.to_string());
    }
    Ok(out)
}

/// Reads the thread cap from the environment and picks the executor.
pub fn configure_threads() -> Result<Exec, String> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(Exec::default());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| format!("{THREADS_ENV} must be a positive integer, got {raw:?}"))?;
    if n == 1 {
        return Ok(Exec::Sequential);
    }
    #[cfg(feature = "parallel")]
    {
        // A second call in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(Exec::default())
}

fn set_path(doc: &mut Value, key: &str, value: Value) -> Result<(), String> {
    let mut cur = doc;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let last = i + 1 == parts.len();
        cur = match cur {
            Value::Object(map) => {
                if last {
                    map.insert(part.to_string(), value);
                    return Ok(());
                }
                map.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()))
            }
            Value::Array(items) => {
                let idx: usize = part
                    .parse()
                    .map_err(|_| format!("override {key:?}: {part:?} is not an array index"))?;
                let len = items.len();
                let slot = items
                    .get_mut(idx)
                    .ok_or_else(|| format!("override {key:?}: index {idx} out of range (len {len})"))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(format!("override {key:?}: {part:?} is not inside an object or array")),
        };
    }
    Ok(())
}

fn load_document(path: &Path, overrides: &BTreeMap<String, String>) -> Result<Value, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))?;
    let mut doc: Value = serde_json::from_str(&text).map_err(|e| {
        Failure::Input(format!(
            "{}:{}:{}: {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })?;
    for (k, v) in overrides {
        let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.clone()));
        set_path(&mut doc, k, value).map_err(Failure::Input)?;
    }
    Ok(doc)
}

fn typed<T: DeserializeOwned>(doc: Value, path: &Path) -> Result<T, Failure> {
    serde_path_to_error::deserialize(doc).map_err(|e| {
        let field = e.path().to_string();
        Failure::Input(format!("{}: field `{field}`: {}", path.display(), e.inner()))
    })
}

fn input<T: DeserializeOwned>(cfg: &RunConfig) -> Result<T, Failure> {
    let path = cfg
        .input_path
        .as_deref()
        .ok_or_else(|| Failure::Input(format!("{} needs an input file", cfg.command.name())))?;
    typed(load_document(path, &cfg.overrides)?, path)
}

#[derive(Deserialize)]
struct BarycenterInput {
    points: Vec<ManifoldPoint>,
    #[serde(default)]
    weights: Option<Vec<f64>>,
    #[serde(default)]
    karcher: KarcherConfig,
}

#[derive(Deserialize)]
struct CombineInput {
    points: Vec<ManifoldPoint>,
    weights: SimplexWeights,
    mode: CombinationMode,
    #[serde(default)]
    order: Option<Vec<usize>>,
    #[serde(default)]
    karcher: KarcherConfig,
}

fn problem(cfg: &RunConfig) -> Result<Problem, Failure> {
    let mut p: Problem = input(cfg)?;
    if let Some(s) = cfg.seed {
        p.solver.seed = s;
    }
    Ok(p)
}

fn to_value<T: serde::Serialize>(v: &T) -> Result<Value, Failure> {
    serde_json::to_value(v).map_err(solver_err)
}

/// Runs the command and returns the report body (without the envelope)
/// and whether every property held.
fn dispatch(cfg: &RunConfig, exec: Exec) -> Result<(Value, bool), Failure> {
    match &cfg.command {
        Command::Verify { suites, trials } => {
            if !cfg.overrides.is_empty() {
                return Err(Failure::Input("verify takes no input document; --set is not allowed".into()));
            }
            let report = verify_suites(suites, *trials, cfg.seed.unwrap_or(0), exec).map_err(|e| match e {
                hadamard_core::Error::OutOfRange(m) => Failure::Input(m),
                e => solver_err(e),
            })?;
            Ok((to_value(&report)?, report.passed))
        }
        Command::Helly {
            manifold,
            dim,
            bodies,
            trials,
            csv,
        } => {
            if !cfg.overrides.is_empty() {
                return Err(Failure::Input("helly takes no input document; --set is not allowed".into()));
            }
            let m = Manifold::new(manifold, *dim).map_err(|e| Failure::Input(e.to_string()))?;
            let report = helly_check(m, *bodies, *trials, cfg.seed.unwrap_or(0), exec).map_err(|e| match e {
                hadamard_core::Error::OutOfRange(m) => Failure::Input(m),
                e => solver_err(e),
            })?;
            if let Some(path) = csv {
                let text = report.to_csv().map_err(solver_err)?;
                fs::write(path, text).map_err(|e| solver_err(format!("cannot write {}: {e}", path.display())))?;
            }
            Ok((to_value(&report)?, report.passed()))
        }
        Command::Barycenter => {
            let inp: BarycenterInput = input(cfg)?;
            let masses = match &inp.weights {
                Some(w) => SimplexWeights::normalized(w),
                None => SimplexWeights::uniform(inp.points.len()),
            }
            .map_err(|e| Failure::Input(format!("weights: {e}")))?;
            let k = combinations::karcher_mean(&inp.points, &masses, &inp.karcher).map_err(solver_err)?;
            Ok((
                json!({
                    "result": to_value(&k.point)?,
                    "diagnostics": { "grad_norm": k.grad_norm, "iterations": k.iterations },
                }),
                true,
            ))
        }
        Command::Combine => {
            let inp: CombineInput = input(cfg)?;
            let r = combinations::combine(
                &inp.points,
                &inp.weights,
                inp.mode,
                inp.order.as_deref(),
                &inp.karcher,
                exec,
            )
            .map_err(solver_err)?;
            Ok((
                json!({
                    "result": to_value(&r.point)?,
                    "diagnostics": {
                        "mode": to_value(&inp.mode)?,
                        "grad_norm": r.grad_norm,
                        "iterations": r.iterations,
                        "orbit_size": r.orbit_size,
                    },
                }),
                true,
            ))
        }
        Command::Resolvent { lambda } => {
            let p = problem(cfg)?;
            let inst = p.instance().map_err(|e| Failure::Input(e.to_string()))?;
            let lambda = lambda.unwrap_or(p.lambda);
            let r = resolvent(&inst, lambda, &p.x0, &p.solver).map_err(solver_err)?;
            Ok((
                json!({
                    "solution": to_value(&r.point)?,
                    "residual": -r.merit,
                    "fixed_point_residual": r.fixed_point_residual,
                    "iterations": r.iterations,
                    "lambda": lambda,
                }),
                true,
            ))
        }
        Command::Ppa { lambda, iters } => {
            let p = problem(cfg)?;
            let inst = p.instance().map_err(|e| Failure::Input(e.to_string()))?;
            let lambda = lambda.unwrap_or(p.lambda);
            let trajectory = |t: &hadamard_core::equilibrium::Trajectory| -> Result<Value, Failure> {
                let steps = t
                    .iterates
                    .iter()
                    .enumerate()
                    .map(|(k, x)| {
                        let mut step = json!({ "point": to_value(x)?, "residual": t.residuals.get(k) });
                        if let Some(obj) = &t.objective {
                            step["objective"] = json!(obj.get(k));
                        }
                        Ok(step)
                    })
                    .collect::<Result<Vec<_>, Failure>>()?;
                Ok(Value::Array(steps))
            };
            match proximal_point(&inst, lambda, &p.x0, *iters, &p.solver) {
                Ok(t) => Ok((
                    json!({
                        "solution": to_value(t.last())?,
                        "residual": t.residuals.last(),
                        "iterations": t.iterations(),
                        "converged": t.converged,
                        "lambda": lambda,
                        "trajectory": trajectory(&t)?,
                    }),
                    t.converged,
                )),
                Err(f) => Err(Failure::Solver {
                    message: f.to_string(),
                    details: Some(json!({ "trajectory": trajectory(&f.partial)? })),
                }),
            }
        }
        Command::Residual => {
            let p = problem(cfg)?;
            let inst = p.instance().map_err(|e| Failure::Input(e.to_string()))?;
            let r = ep_residual(inst.bifunction(), inst.omega(), &p.x0, &p.solver).map_err(solver_err)?;
            Ok((
                json!({
                    "point": to_value(&p.x0)?,
                    "residual": r,
                    "certified": r >= -p.solver.tol,
                }),
                true,
            ))
        }
    }
}

fn envelope(cfg: &RunConfig, status: &str, body: Value) -> Value {
    let mut map = match body {
        Value::Object(m) => m,
        other => {
            let mut m = Map::new();
            m.insert("result".into(), other);
            m
        }
    };
    map.insert("command".into(), json!(cfg.command.name()));
    map.insert("status".into(), json!(status));
    map.insert("seed".into(), json!(cfg.seed));
    map.insert("timestamp".into(), json!(chrono::Utc::now().to_rfc3339()));
    Value::Object(map)
}

/// Runs `cfg` without writing anything.
pub fn execute(cfg: &RunConfig, exec: Exec) -> Outcome {
    match dispatch(cfg, exec) {
        Ok((body, passed)) => Outcome {
            code: if passed { 0 } else { 2 },
            report: Some(envelope(cfg, if passed { "pass" } else { "fail" }, body)),
            error: None,
        },
        Err(Failure::Input(m)) => Outcome {
            code: 1,
            report: None,
            error: Some(m),
        },
        Err(Failure::Solver { message, details }) => {
            let mut body = details.unwrap_or_else(|| json!({}));
            body["error"] = json!(message);
            Outcome {
                code: 1,
                report: Some(envelope(cfg, "error", body)),
                error: Some(message),
            }
        }
    }
}

/// Removes the fields excluded from the determinism contract.
pub fn strip_volatile(report: &mut Value) {
    if let Value::Object(m) = report {
        m.remove("timestamp");
    }
}

/// Runs `cfg`, writes the report and returns the exit code.
pub fn run(cfg: &RunConfig) -> i32 {
    let exec = match configure_threads() {
        Ok(e) => e,
        Err(m) => {
            eprintln!("hadamard-eq: error: {m}");
            return 1;
        }
    };
    let out = execute(cfg, exec);
    if let Some(report) = &out.report {
        let text = match serde_json::to_string_pretty(report) {
            Ok(t) => t + "\n",
            Err(e) => {
                eprintln!("hadamard-eq: error: cannot serialize report: {e}");
                return 1;
            }
        };
        match &cfg.output_path {
            Some(p) => {
                if let Err(e) = fs::write(p, text) {
                    eprintln!("hadamard-eq: error: cannot write {}: {e}", p.display());
                    return 1;
                }
            }
            None => print!("{text}"),
        }
    }
    if let Some(m) = &out.error {
        eprintln!("hadamard-eq: error: {m}");
    }
    out.code
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_patch_nested_paths() {
        let mut doc = json!({ "solver": { "tol": 1e-7 }, "x0": { "coords": [0.0, 0.0] } });
        set_path(&mut doc, "solver.tol", json!(1e-9)).unwrap();
        set_path(&mut doc, "x0.coords.1", json!(2.0)).unwrap();
        set_path(&mut doc, "lambda", json!(3.0)).unwrap();
        assert_eq!(doc["solver"]["tol"], json!(1e-9));
        assert_eq!(doc["x0"]["coords"][1], json!(2.0));
        assert_eq!(doc["lambda"], json!(3.0));
        assert!(set_path(&mut doc, "x0.coords.5", json!(1)).is_err());
        assert!(set_path(&mut doc, "lambda.x", json!(1)).is_err());
    }

    #[test]
    fn override_pairs_parse() {
        let m = parse_overrides(&["a.b=1".into(), "c=x=y".into()]).unwrap();
        assert_eq!(m["a.b"], "1");
        assert_eq!(m["c"], "x=y");
        assert!(parse_overrides(&["nokey".into()]).is_err());
        assert!(parse_overrides(&["=v".into()]).is_err());
    }
}
