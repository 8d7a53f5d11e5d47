//! Flat dotted-key configuration shared by the config file and the flags.
//!
//! Every key lives in a section (`params.sigma`, `grid.points`, ...). A TOML
//! file may spell keys dotted (`params.sigma = 2`) or as tables (`[params]`);
//! both flatten to the same map. Each key is also a `--<key> <value>` flag, and
//! flags override the file.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::Serialize;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Float,
    Int,
    Bool,
    Str,
    FloatList,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Value {
    Float(f64),
    Int(i64),
    Bool(bool),
    Str(String),
    FloatList(Vec<f64>),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Float(x) => write!(f, "{x}"),
            Value::Int(x) => write!(f, "{x}"),
            Value::Bool(x) => write!(f, "{x}"),
            Value::Str(x) => write!(f, "{x}"),
            Value::FloatList(xs) => {
                let parts: Vec<String> = xs.iter().map(|x| x.to_string()).collect();
                write!(f, "{}", parts.join(","))
            }
        }
    }
}

pub struct KeySpec {
    pub key: &'static str,
    pub kind: Kind,
    pub help: &'static str,
}

const fn key(key: &'static str, kind: Kind, help: &'static str) -> KeySpec {
    KeySpec { key, kind, help }
}

pub const KEYS: &[KeySpec] = &[
    key("params.gamma", Kind::Float, "coefficient of the bilaplacian (> 0)"),
    key("params.mu", Kind::Float, "coefficient of -Lap (>= 0)"),
    key("params.omega", Kind::Float, "standing-wave frequency (> 0)"),
    key("params.sigma", Kind::Float, "nonlinearity exponent; the power is 2 sigma"),
    key("params.dim", Kind::Int, "spatial dimension N of the model"),
    key("grid.dim", Kind::Int, "grid dimension 1-3 [default: params.dim]"),
    key("grid.points", Kind::Int, "points per axis, a power of two"),
    key("grid.half_width", Kind::Float, "half width L of the box [-L, L)^d"),
    key("solver.max_iters", Kind::Int, "iteration cap [default: 5000]"),
    key("solver.residual_tol", Kind::Float, "relative residual target [default: 1e-10]"),
    key("solver.stabilizer_exponent", Kind::Float, "stabilizer exponent [default: (2 sigma + 1)/(2 sigma)]"),
    key("solver.guess_width", Kind::Float, "width of the Gaussian initial guess [default: 1]"),
    key("solver.guess_amplitude", Kind::Float, "amplitude of the Gaussian initial guess [default: 1]"),
    key("solver.multistart", Kind::Int, "number of initial guesses; the lowest-action converged run wins [default: 1]"),
    key("solver.points", Kind::Int, "points per axis of the solve, resampled to the grid [default: grid.points]"),
    key("evolve.dt", Kind::Float, "base time step [default: 1e-3]"),
    key("evolve.t_end", Kind::Float, "final time [default: 1]"),
    key("evolve.sample_every", Kind::Int, "diagnostics cadence in accepted steps [default: 10]"),
    key("evolve.blowup_threshold", Kind::Float, "||Lap psi|| growth factor of the blow-up verdict [default: 1e3]"),
    key("evolve.dealias", Kind::Bool, "2/3-rule dealiasing of the nonlinear substep [default: true]"),
    key("evolve.adapt", Kind::Bool, "step-doubling step control [default: true]"),
    key("evolve.local_error_tol", Kind::Float, "local error tolerance of the step control [default: 1e-6]"),
    key("evolve.snapshot_every", Kind::Int, "write a snapshot every n samples, 0 = final only [default: 0]"),
    key("initial.kind", Kind::Str, "gaussian | ground_state | snapshot [default: gaussian]"),
    key("initial.path", Kind::Str, "snapshot file for initial.kind = snapshot"),
    key("initial.amplitude", Kind::Float, "Gaussian amplitude [default: 1]"),
    key("initial.width", Kind::Float, "Gaussian width [default: 1]"),
    key("initial.lambda", Kind::Float, "dilation u -> u_lambda applied to the initial data [default: 1]"),
    key("virial.radii", Kind::FloatList, "cutoff radii of the localized virial, comma separated"),
    key("instability.preset", Kind::Str, "critical-mu-positive | supercritical-mu-positive | supercritical-mu-zero | critical-mu-zero | large-sigma"),
    key("instability.lambda", Kind::Float, "dilation of the ground state, > 1 [default: 1.05]"),
    key("instability.calibration_t_end", Kind::Float, "length of the standing-wave slack calibration run [default: 1]"),
    key("instability.sign_tol", Kind::Float, "relative tolerance of the sign checks [default: 1e-10]"),
    key("instability.drift_budget", Kind::Float, "energy drift that ends the resolved window [default: 1e-3]"),
    key("instability.gap_tol", Kind::Float, "relative tolerance of the gap check [default: 1e-6]"),
    key("identities.snapshot", Kind::Str, "snapshot to evaluate"),
    key("proposition.samples", Kind::Int, "number of random profiles [default: 200]"),
    key("proposition.seed", Kind::Int, "base seed [default: 7]"),
    key("proposition.tol", Kind::Float, "violation tolerance relative to the reference action [default: 1e-6]"),
    key("output.dir", Kind::Str, "run directory [default: out]"),
    key("run.threads", Kind::Int, "worker threads, 0 = all cores, 1 = sequential [default: 0]"),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Groundstate,
    Evolve,
    Instability,
    Identities,
    Proposition,
}

impl Command {
    pub const ALL: [Command; 5] = [
        Command::Groundstate,
        Command::Evolve,
        Command::Instability,
        Command::Identities,
        Command::Proposition,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Groundstate => "groundstate",
            Command::Evolve => "evolve",
            Command::Instability => "instability",
            Command::Identities => "identities",
            Command::Proposition => "proposition",
        }
    }

    pub fn about(self) -> &'static str {
        match self {
            Command::Groundstate => "Solve for a ground state and certify it",
            Command::Evolve => "Evolve initial data and record diagnostics",
            Command::Instability => "Perturb a ground state and test instability by blow-up",
            Command::Identities => "Evaluate functionals and identity defects of a snapshot",
            Command::Proposition => "Sample the constraint set and compare actions with the ground state",
        }
    }

    fn sections(self) -> &'static [&'static str] {
        match self {
            Command::Groundstate => &["params", "grid", "solver", "output", "run"],
            Command::Evolve => &["params", "grid", "solver", "evolve", "initial", "virial", "output", "run"],
            Command::Instability => &["params", "grid", "solver", "evolve", "virial", "instability", "output", "run"],
            Command::Identities => &["params", "identities", "output", "run"],
            Command::Proposition => &["params", "grid", "solver", "proposition", "output", "run"],
        }
    }

    pub fn keys(self) -> impl Iterator<Item = &'static KeySpec> {
        KEYS.iter()
            .filter(move |k| self.sections().contains(&k.key.split('.').next().unwrap()))
    }
}

pub const PARAM_KEYS: [&str; 5] = ["params.gamma", "params.mu", "params.omega", "params.sigma", "params.dim"];
pub const GRID_KEYS: [&str; 2] = ["grid.points", "grid.half_width"];

fn spec(key: &str) -> Option<&'static KeySpec> {
    KEYS.iter().find(|k| k.key == key)
}

/// Resolved key-value map of one run.
#[derive(Clone, Debug, Default, Serialize)]
#[serde(transparent)]
pub struct Config {
    values: BTreeMap<String, Value>,
}

fn type_error(key: &str, kind: Kind, got: &str) -> CliError {
    CliError::Validation(format!("{key}: expected {kind:?}, got {got}"))
}

fn from_toml(key: &str, kind: Kind, v: &toml::Value) -> Result<Value, CliError> {
    let bad = || type_error(key, kind, &v.to_string());
    Ok(match (kind, v) {
        (Kind::Float, toml::Value::Float(x)) => Value::Float(*x),
        (Kind::Float, toml::Value::Integer(x)) => Value::Float(*x as f64),
        (Kind::Int, toml::Value::Integer(x)) => Value::Int(*x),
        (Kind::Bool, toml::Value::Boolean(x)) => Value::Bool(*x),
        (Kind::Str, toml::Value::String(x)) => Value::Str(x.clone()),
        (Kind::FloatList, toml::Value::Array(xs)) => Value::FloatList(
            xs.iter()
                .map(|x| match x {
                    toml::Value::Float(f) => Ok(*f),
                    toml::Value::Integer(i) => Ok(*i as f64),
                    _ => Err(bad()),
                })
                .collect::<Result<_, _>>()?,
        ),
        _ => return Err(bad()),
    })
}

pub fn parse_flag_value(key: &str, raw: &str) -> Result<Value, CliError> {
    let kind = spec(key)
        .ok_or_else(|| CliError::Validation(format!("unknown key {key}")))?
        .kind;
    let bad = || type_error(key, kind, raw);
    Ok(match kind {
        Kind::Float => Value::Float(raw.trim().parse().map_err(|_| bad())?),
        Kind::Int => Value::Int(raw.trim().parse().map_err(|_| bad())?),
        Kind::Bool => Value::Bool(raw.trim().parse().map_err(|_| bad())?),
        Kind::Str => Value::Str(raw.to_string()),
        Kind::FloatList => Value::FloatList(
            raw.split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| s.trim().parse().map_err(|_| bad()))
                .collect::<Result<_, _>>()?,
        ),
    })
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut Vec<(String, toml::Value)>) {
    for (k, v) in table {
        let full = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            toml::Value::Table(t) => flatten(&full, t, out),
            other => out.push((full, other.clone())),
        }
    }
}

impl Config {
    /// Parses TOML text, rejecting keys unknown to `cmd`.
    pub fn from_toml_str(text: &str, cmd: Command) -> Result<Self, CliError> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| CliError::Validation(format!("config: {}", e.message())))?;
        let mut flat = Vec::new();
        flatten("", &table, &mut flat);
        let mut cfg = Config::default();
        for (k, v) in flat {
            let kind = cfg.check_key(&k, cmd)?;
            cfg.values.insert(k.clone(), from_toml(&k, kind, &v)?);
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path, cmd: Command) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text, cmd)
    }

    fn check_key(&self, key: &str, cmd: Command) -> Result<Kind, CliError> {
        let s = spec(key).ok_or_else(|| CliError::Validation(format!("unknown key {key}")))?;
        if !cmd.keys().any(|k| k.key == key) {
            return Err(CliError::Validation(format!("key {key} does not apply to `{}`", cmd.name())));
        }
        Ok(s.kind)
    }

    /// Sets a key from its flag spelling.
    pub fn set_flag(&mut self, key: &str, raw: &str, cmd: Command) -> Result<(), CliError> {
        self.check_key(key, cmd)?;
        self.values.insert(key.to_string(), parse_flag_value(key, raw)?);
        Ok(())
    }

    pub fn set(&mut self, key: &str, v: Value) {
        self.values.insert(key.to_string(), v);
    }

    pub fn contains(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    #[cfg(test)]
    pub fn values(&self) -> &BTreeMap<String, Value> {
        &self.values
    }

    /// Errors listing every key of `keys` that is missing.
    pub fn require(&self, keys: &[&str], cmd: Command) -> Result<(), CliError> {
        let missing: Vec<&str> = keys.iter().copied().filter(|k| !self.contains(k)).collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(CliError::Validation(format!(
                "`{}` is missing required keys: {}",
                cmd.name(),
                missing.join(", ")
            )))
        }
    }

    pub fn float(&self, key: &str) -> Option<f64> {
        match self.values.get(key) {
            Some(Value::Float(x)) => Some(*x),
            _ => None,
        }
    }

    pub fn int(&self, key: &str) -> Option<i64> {
        match self.values.get(key) {
            Some(Value::Int(x)) => Some(*x),
            _ => None,
        }
    }

    /// Nonnegative integer, defaulting when absent.
    pub fn count_or(&self, key: &str, default: usize) -> Result<usize, CliError> {
        match self.int(key) {
            None => Ok(default),
            Some(x) if x >= 0 => Ok(x as usize),
            Some(x) => Err(CliError::Validation(format!("{key} must be nonnegative, got {x}"))),
        }
    }

    pub fn bool_or(&self, key: &str, default: bool) -> bool {
        match self.values.get(key) {
            Some(Value::Bool(x)) => *x,
            _ => default,
        }
    }

    /// Float value, recording `default` in the map when absent.
    pub fn resolve_float(&mut self, key: &str, default: f64) -> f64 {
        match self.float(key) {
            Some(x) => x,
            None => {
                self.set(key, Value::Float(default));
                default
            }
        }
    }

    pub fn resolve_count(&mut self, key: &str, default: usize) -> Result<usize, CliError> {
        let n = self.count_or(key, default)?;
        self.set(key, Value::Int(n as i64));
        Ok(n)
    }

    pub fn resolve_bool(&mut self, key: &str, default: bool) -> bool {
        let b = self.bool_or(key, default);
        self.set(key, Value::Bool(b));
        b
    }

    pub fn resolve_str(&mut self, key: &str, default: &str) -> String {
        let s = self.str(key).unwrap_or(default).to_string();
        self.set(key, Value::Str(s.clone()));
        s
    }

    /// The map as dotted-key TOML, readable back with [`Config::from_toml_str`].
    pub fn to_toml(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.values {
            let tv = match v {
                Value::Float(x) => toml::Value::Float(*x),
                Value::Int(x) => toml::Value::Integer(*x),
                Value::Bool(x) => toml::Value::Boolean(*x),
                Value::Str(x) => toml::Value::String(x.clone()),
                Value::FloatList(xs) => toml::Value::Array(xs.iter().map(|&x| toml::Value::Float(x)).collect()),
            };
            out.push_str(&format!("{k} = {tv}\n"));
        }
        out
    }

    pub fn str(&self, key: &str) -> Option<&str> {
        match self.values.get(key) {
            Some(Value::Str(x)) => Some(x),
            _ => None,
        }
    }

    pub fn floats(&self, key: &str) -> Option<&[f64]> {
        match self.values.get(key) {
            Some(Value::FloatList(x)) => Some(x),
            _ => None,
        }
    }
}
