//! Effective parameter table: built-in defaults, then a `key=value` file,
//! then command-line overrides. Every value remembers where it came from.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use segmat::pipeline::PipelineParams;
use segmat::region_growing::SwallowRule;
use segmat::simplify::ErrorAccounting;
use segmat::skeleton::DEFAULT_K;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    Default,
    File,
    Cli,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Setting {
    pub value: Value,
    pub source: Source,
}

pub const KEYS: [&str; 18] = [
    "alpha",
    "lambda",
    "delta0",
    "eta",
    "sigma_knee",
    "swallowing",
    "swallow_rule",
    "merging",
    "merge_tau",
    "graph_cut",
    "omega",
    "max_iterations",
    "target_error",
    "preserve_topology",
    "accounting",
    "collapse_curves",
    "prune_branches",
    "knn",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Config {
    settings: BTreeMap<&'static str, Setting>,
}

fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

fn enum_value<T: Serialize>(x: T) -> Value {
    serde_json::to_value(x).expect("unit enum serializes")
}

impl Default for Config {
    fn default() -> Self {
        let p = PipelineParams::default();
        let g = &p.growing;
        let s = &p.simplify;
        let values = [
            num(g.alpha),
            num(g.lambda),
            num(g.delta0),
            num(g.eta),
            num(g.sigma_knee),
            Value::Bool(g.swallowing),
            enum_value(g.swallow_rule),
            Value::Bool(p.merging),
            num(p.merge_tau),
            Value::Bool(p.graph_cut),
            num(p.transfer.omega),
            Value::from(p.transfer.max_iterations),
            num(s.target_error),
            Value::Bool(s.preserve_topology),
            enum_value(s.accounting),
            Value::Bool(s.collapse_curves),
            Value::Bool(s.prune_branches),
            Value::from(DEFAULT_K),
        ];
        let settings =
            KEYS.iter().zip(values).map(|(&k, value)| (k, Setting { value, source: Source::Default })).collect();
        Self { settings }
    }
}

/// Typed value for `key` parsed from its text form.
fn parse_value(key: &str, text: &str) -> Result<Value, CliError> {
    let bad = |what: &str| CliError::Config(format!("{key}: expected {what}, got {text:?}"));
    let text = text.trim();
    let current = &Config::default().settings[key].value;
    Ok(match current {
        Value::Bool(_) => match text {
            "true" | "on" | "yes" | "1" => Value::Bool(true),
            "false" | "off" | "no" | "0" => Value::Bool(false),
            _ => return Err(bad("a boolean")),
        },
        Value::Number(n) if n.is_u64() => Value::from(text.parse::<u64>().map_err(|_| bad("an integer"))?),
        Value::Number(_) => {
            let x: f64 = text.parse().map_err(|_| bad("a number"))?;
            if !x.is_finite() {
                return Err(bad("a finite number"));
            }
            num(x)
        }
        _ => {
            let v = Value::String(text.to_string());
            let known = match key {
                "swallow_rule" => serde_json::from_value::<SwallowRule>(v.clone()).is_ok(),
                "accounting" => serde_json::from_value::<ErrorAccounting>(v.clone()).is_ok(),
                _ => true,
            };
            if !known {
                return Err(bad("a known variant"));
            }
            v
        }
    })
}

fn known_key(key: &str) -> Result<&'static str, CliError> {
    KEYS.iter().copied().find(|k| *k == key).ok_or_else(|| CliError::Config(format!("unknown parameter {key:?}")))
}

impl Config {
    pub fn get(&self, key: &str) -> &Setting {
        &self.settings[key]
    }

    pub fn set(&mut self, key: &str, text: &str, source: Source) -> Result<(), CliError> {
        let key = known_key(key)?;
        let value = parse_value(key, text)?;
        self.settings.insert(key, Setting { value, source });
        Ok(())
    }

    /// Applies `key=value` lines; `#` starts a comment.
    pub fn apply_file_text(&mut self, text: &str) -> Result<(), CliError> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("config line {}: expected key=value", n + 1)))?;
            self.set(k.trim(), v, Source::File)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        self.apply_file_text(&text)
    }

    fn f64(&self, key: &str) -> f64 {
        self.settings[key].value.as_f64().expect("numeric setting")
    }

    fn bool(&self, key: &str) -> bool {
        self.settings[key].value.as_bool().expect("boolean setting")
    }

    pub fn usize(&self, key: &str) -> usize {
        self.settings[key].value.as_u64().expect("integer setting") as usize
    }

    pub fn params(&self) -> Result<PipelineParams, CliError> {
        let mut p = PipelineParams::default();
        let g = &mut p.growing;
        g.alpha = self.f64("alpha");
        g.lambda = self.f64("lambda");
        g.delta0 = self.f64("delta0");
        g.eta = self.f64("eta");
        g.sigma_knee = self.f64("sigma_knee");
        g.swallowing = self.bool("swallowing");
        g.swallow_rule = serde_json::from_value(self.settings["swallow_rule"].value.clone())
            .map_err(|e| CliError::Config(e.to_string()))?;
        p.merging = self.bool("merging");
        p.merge_tau = self.f64("merge_tau");
        p.graph_cut = self.bool("graph_cut");
        p.transfer.omega = self.f64("omega");
        p.transfer.max_iterations = self.usize("max_iterations");
        let s = &mut p.simplify;
        s.target_error = self.f64("target_error");
        s.preserve_topology = self.bool("preserve_topology");
        s.accounting = serde_json::from_value(self.settings["accounting"].value.clone())
            .map_err(|e| CliError::Config(e.to_string()))?;
        s.collapse_curves = self.bool("collapse_curves");
        s.prune_branches = self.bool("prune_branches");
        p.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if self.usize("knn") == 0 {
            return Err(CliError::Config("knn must be at least 1".into()));
        }
        Ok(p)
    }
}
