//! Run configuration: overrides, boundary data and probe files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use cylpot_core::{ModelConfig, Point};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Failure {
    /// Bad input of any kind; exit code 1.
    #[error("{0}")]
    Validation(String),
    /// The computation ran but missed a tolerance; exit code 2.
    #[error("{0}")]
    Tolerance(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Tolerance(_) => 2,
        }
    }
}

impl From<cylpot_core::Error> for Failure {
    fn from(e: cylpot_core::Error) -> Self {
        Failure::Validation(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Validation(format!("i/o: {e}"))
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Validation(format!("json: {e}"))
    }
}

pub type Outcome<T> = std::result::Result<T, Failure>;

/// `NAME=VALUE` overrides with a fixed set of admissible names.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Overrides {
    values: BTreeMap<String, String>,
}

impl Overrides {
    pub fn parse(flag: &str, items: &[String], allowed: &[&str]) -> Outcome<Self> {
        let mut values = BTreeMap::new();
        for item in items {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Failure::Validation(format!("--{flag} expects NAME=VALUE, got `{item}`")))?;
            let k = k.trim();
            if !allowed.contains(&k) {
                return Err(Failure::Validation(format!(
                    "unknown --{flag} name `{k}` (allowed: {})",
                    if allowed.is_empty() { "none".to_string() } else { allowed.join(", ") }
                )));
            }
            values.insert(k.to_string(), v.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn text(&self, name: &str) -> Option<&str> {
        self.values.get(name).map(String::as_str)
    }

    pub fn f64_or(&self, name: &str, default: f64) -> Outcome<f64> {
        match self.text(name) {
            None => Ok(default),
            Some(v) => v
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Failure::Validation(format!("`{name}` must be a finite number, got `{v}`"))),
        }
    }

    pub fn usize_or(&self, name: &str, default: usize) -> Outcome<usize> {
        match self.text(name) {
            None => Ok(default),
            Some(v) => v.parse::<usize>().map_err(|_| Failure::Validation(format!("`{name}` must be a count, got `{v}`"))),
        }
    }
}

/// Everything one invocation needs.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub subcommand: String,
    pub model: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: u64,
    pub tol: Overrides,
    pub grid: Overrides,
}

impl RunConfig {
    pub fn load_model(&self) -> Outcome<ModelConfig> {
        let path = self
            .model
            .as_ref()
            .ok_or_else(|| Failure::Validation(format!("`{}` needs --model PATH", self.subcommand)))?;
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Validation(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = ModelConfig::from_json(&text)?;
        if let Some(m) = self.grid.text("cutoff") {
            cfg.mode_cutoff = m.parse().map_err(|_| Failure::Validation(format!("`cutoff` must be a count, got `{m}`")))?;
        }
        Ok(cfg)
    }

    pub fn prepare_out(&self) -> Outcome<()> {
        std::fs::create_dir_all(&self.out)
            .map_err(|e| Failure::Validation(format!("cannot create {}: {e}", self.out.display())))
    }

    pub fn write(&self, name: &str, contents: &str) -> Outcome<PathBuf> {
        let path = self.out.join(name);
        std::fs::write(&path, contents)
            .map_err(|e| Failure::Validation(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }
}

/// Boundary data for `solve`, written `KIND:NAME=VALUE,...`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundaryData {
    /// `amp cos(xi x)` on the selected curve, or on every curve.
    Mode { xi: f64, amp: f64, curve: Option<usize> },
    /// The Green's function with source at `(x, theta)`, outside the region.
    Green { x: f64, theta: f64 },
    Const { value: f64 },
}

impl BoundaryData {
    pub fn parse(spec: &str) -> Outcome<Self> {
        let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
        let params = rest
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| s.to_string())
            .collect::<Vec<_>>();
        let bad = |m: String| Failure::Validation(format!("--bc {spec}: {m}"));
        match kind.trim() {
            "mode" => {
                let o = Overrides::parse("bc", &params, &["xi", "amp", "curve"]).map_err(|e| bad(e.to_string()))?;
                let curve = o.text("curve").map(|_| o.usize_or("curve", 0)).transpose()?;
                Ok(Self::Mode { xi: o.f64_or("xi", 1.0)?, amp: o.f64_or("amp", 1.0)?, curve })
            }
            "green" => {
                let o = Overrides::parse("bc", &params, &["x", "theta"]).map_err(|e| bad(e.to_string()))?;
                if o.text("x").is_none() || o.text("theta").is_none() {
                    return Err(bad("green data needs x and theta".into()));
                }
                Ok(Self::Green { x: o.f64_or("x", 0.0)?, theta: o.f64_or("theta", 0.0)? })
            }
            "const" => {
                let o = Overrides::parse("bc", &params, &["value"]).map_err(|e| bad(e.to_string()))?;
                Ok(Self::Const { value: o.f64_or("value", 1.0)? })
            }
            other => Err(bad(format!("unknown kind `{other}` (mode, green, const)"))),
        }
    }
}

/// Reads `x,theta` rows. A non-numeric first row is a header; `#` starts a
/// comment.
pub fn read_probes(path: &Path) -> Outcome<Vec<Point>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Validation(format!("cannot read {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: Option<Vec<f64>> = cols.iter().map(|c| c.parse::<f64>().ok().filter(|v| v.is_finite())).collect();
        match parsed {
            Some(v) if v.len() == 2 => out.push(Point::new(v[0], v[1])),
            None if out.is_empty() && line_no == 0 => continue,
            _ => {
                return Err(Failure::Validation(format!(
                    "{}:{}: expected `x,theta`, got `{line}`",
                    path.display(),
                    line_no + 1
                )))
            }
        }
    }
    if out.is_empty() {
        return Err(Failure::Validation(format!("{} contains no probes", path.display())));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_reject_unknown_names() {
        assert!(Overrides::parse("tol", &["jump=1e-3".into()], &["jump"]).is_ok());
        assert!(Overrides::parse("tol", &["jmp=1e-3".into()], &["jump"]).is_err());
        assert!(Overrides::parse("grid", &["nodes".into()], &["nodes"]).is_err());
        let o = Overrides::parse("grid", &["nodes=x".into()], &["nodes"]).unwrap();
        assert!(o.usize_or("nodes", 4).is_err());
    }

    #[test]
    fn boundary_data_forms() {
        assert_eq!(
            BoundaryData::parse("mode:xi=2,curve=0").unwrap(),
            BoundaryData::Mode { xi: 2.0, amp: 1.0, curve: Some(0) }
        );
        assert_eq!(BoundaryData::parse("const").unwrap(), BoundaryData::Const { value: 1.0 });
        assert!(BoundaryData::parse("green:x=1").is_err());
        assert!(BoundaryData::parse("wave:k=1").is_err());
    }
}
