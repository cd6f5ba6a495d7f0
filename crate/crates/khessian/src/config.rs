//! Flat key-value run configuration. One `section.key = value` per line,
//! values in JSON syntax (strings quoted, lists bracketed), `#` comments,
//! strict about unknown and duplicate keys.
//!
//! ```text
//! problem.k = 2
//! problem.domain = "ball(0,0,0; 1)"
//! problem.f = "45*(x1^2+x2^2+x3^2)"
//! problem.phi = "0"
//! problem.theta = 1e-6
//! grid.m = 33
//! schedule = [1e-1, 1e-2]
//! output.dir = "out"
//! seed = 1
//! ```

use std::fmt::Write as _;

use serde_json::Value;
use thiserror::Error;

use crate::condh::RhsSpec;
use crate::expr::{Expr, ExprError};
use crate::geometry::DomainSpec;
use crate::grid::{Grid, GridError};
use crate::solver::ProblemSpec;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {0}: expected `key = value`")]
    Syntax(usize),
    #[error("line {line}: bad value for {key}: {reason}")]
    BadValue {
        line: usize,
        key: String,
        reason: String,
    },
    #[error("line {0}: unknown key {1:?}")]
    UnknownKey(usize, String),
    #[error("line {0}: duplicate key {1:?}")]
    DuplicateKey(usize, String),
    #[error("missing required key {0:?}")]
    Missing(&'static str),
    #[error("bad domain spec {0:?}: {1}")]
    BadDomain(String, String),
    #[error("bad expression in {key:?}: {source}")]
    BadExpr {
        key: &'static str,
        source: ExprError,
    },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("problem.n = {0} disagrees with the domain dimension {1}")]
    DimensionMismatch(usize, usize),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub domain: Option<String>,
    pub f: Option<String>,
    pub phi: Option<String>,
    pub theta: Option<f64>,
    pub grid_m: Option<usize>,
    pub grid_lo: Option<Vec<f64>>,
    pub grid_hi: Option<Vec<f64>>,
    pub schedule: Option<Vec<f64>>,
    pub output_dir: Option<String>,
    pub seed: Option<u64>,
}

fn as_usize(v: &Value) -> Option<usize> {
    v.as_u64().map(|x| x as usize)
}

fn as_f64(v: &Value) -> Option<f64> {
    v.as_f64()
}

fn as_string(v: &Value) -> Option<String> {
    v.as_str().map(|s| s.to_string())
}

fn as_f64_list(v: &Value) -> Option<Vec<f64>> {
    v.as_array()
        .map(|a| a.iter().map(|x| x.as_f64()).collect::<Option<Vec<_>>>())?
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        let mut cfg = RunConfig::default();
        let mut seen: Vec<String> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let lineno = lineno + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Syntax(lineno));
            };
            let key = key.trim().to_string();
            if seen.contains(&key) {
                return Err(ConfigError::DuplicateKey(lineno, key));
            }
            let value: Value = serde_json::from_str(value.trim()).map_err(|e| {
                ConfigError::BadValue {
                    line: lineno,
                    key: key.clone(),
                    reason: e.to_string(),
                }
            })?;
            cfg.apply(&key, &value).map_err(|e| match e {
                SetError::Unknown => ConfigError::UnknownKey(lineno, key.clone()),
                SetError::Type(reason) => ConfigError::BadValue {
                    line: lineno,
                    key: key.clone(),
                    reason,
                },
            })?;
            seen.push(key);
        }
        Ok(cfg)
    }

    /// Applies a single `key=value` override, value in JSON syntax. Used by
    /// both the parser and `--set`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let value: Value = serde_json::from_str(value.trim()).map_err(|e| {
            ConfigError::BadValue {
                line: 0,
                key: key.to_string(),
                reason: e.to_string(),
            }
        })?;
        self.apply(key, &value).map_err(|e| match e {
            SetError::Unknown => ConfigError::UnknownKey(0, key.to_string()),
            SetError::Type(reason) => ConfigError::BadValue {
                line: 0,
                key: key.to_string(),
                reason,
            },
        })
    }

    fn apply(&mut self, key: &str, value: &Value) -> Result<(), SetError> {
        let type_err = |want: &str| SetError::Type(format!("expected {want}, got {value}"));
        match key {
            "problem.n" => self.n = Some(as_usize(value).ok_or_else(|| type_err("integer"))?),
            "problem.k" => self.k = Some(as_usize(value).ok_or_else(|| type_err("integer"))?),
            "problem.domain" => {
                self.domain = Some(as_string(value).ok_or_else(|| type_err("string"))?)
            }
            "problem.f" => self.f = Some(as_string(value).ok_or_else(|| type_err("string"))?),
            "problem.phi" => {
                self.phi = Some(as_string(value).ok_or_else(|| type_err("string"))?)
            }
            "problem.theta" => {
                self.theta = Some(as_f64(value).ok_or_else(|| type_err("number"))?)
            }
            "grid.m" => self.grid_m = Some(as_usize(value).ok_or_else(|| type_err("integer"))?),
            "grid.lo" => {
                self.grid_lo = Some(as_f64_list(value).ok_or_else(|| type_err("number list"))?)
            }
            "grid.hi" => {
                self.grid_hi = Some(as_f64_list(value).ok_or_else(|| type_err("number list"))?)
            }
            "schedule" => {
                self.schedule =
                    Some(as_f64_list(value).ok_or_else(|| type_err("number list"))?)
            }
            "output.dir" => {
                self.output_dir = Some(as_string(value).ok_or_else(|| type_err("string"))?)
            }
            "seed" => self.seed = Some(value.as_u64().ok_or_else(|| type_err("integer"))?),
            _ => return Err(SetError::Unknown),
        }
        Ok(())
    }

    /// Serializes set keys in a fixed order; `parse(emit(c)) == c`.
    pub fn emit(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: Value| {
            writeln!(out, "{k} = {v}").unwrap();
        };
        if let Some(v) = self.n {
            put("problem.n", v.into());
        }
        if let Some(v) = self.k {
            put("problem.k", v.into());
        }
        if let Some(v) = &self.domain {
            put("problem.domain", v.clone().into());
        }
        if let Some(v) = &self.f {
            put("problem.f", v.clone().into());
        }
        if let Some(v) = &self.phi {
            put("problem.phi", v.clone().into());
        }
        if let Some(v) = self.theta {
            put("problem.theta", v.into());
        }
        if let Some(v) = self.grid_m {
            put("grid.m", v.into());
        }
        if let Some(v) = &self.grid_lo {
            put("grid.lo", v.clone().into());
        }
        if let Some(v) = &self.grid_hi {
            put("grid.hi", v.clone().into());
        }
        if let Some(v) = &self.schedule {
            put("schedule", v.clone().into());
        }
        if let Some(v) = &self.output_dir {
            put("output.dir", v.clone().into());
        }
        if let Some(v) = self.seed {
            put("seed", v.into());
        }
        out
    }

    pub fn to_domain(&self) -> Result<DomainSpec, ConfigError> {
        let text = self.domain.as_ref().ok_or(ConfigError::Missing("problem.domain"))?;
        let d = parse_domain(text)?;
        if let Some(n) = self.n {
            if n != d.dim() {
                return Err(ConfigError::DimensionMismatch(n, d.dim()));
            }
        }
        Ok(d)
    }

    pub fn to_problem(&self) -> Result<ProblemSpec, ConfigError> {
        let domain = self.to_domain()?;
        let k = self.k.ok_or(ConfigError::Missing("problem.k"))?;
        let f_text = self.f.as_ref().ok_or(ConfigError::Missing("problem.f"))?;
        let f = Expr::parse(f_text).map_err(|source| ConfigError::BadExpr {
            key: "problem.f",
            source,
        })?;
        let phi_text = self.phi.as_deref().unwrap_or("0");
        let phi = Expr::parse(phi_text).map_err(|source| ConfigError::BadExpr {
            key: "problem.phi",
            source,
        })?;
        let theta = self.theta.unwrap_or(1e-6);
        Ok(ProblemSpec {
            k,
            domain,
            f: RhsSpec::expression(f, k),
            phi,
            theta,
        })
    }

    /// Grid for the configured domain: explicit lo/hi if given, else the
    /// domain bounding box padded enough to clear the 2h classification
    /// margin.
    pub fn to_grid(&self, domain: &DomainSpec) -> Result<Grid, ConfigError> {
        let m = self.grid_m.unwrap_or(33);
        let n = domain.dim();
        let (blo, bhi) = domain.bounding_box();
        let lo = match &self.grid_lo {
            Some(v) => v.clone(),
            None => pad_box(&blo, &bhi, m).0,
        };
        let hi = match &self.grid_hi {
            Some(v) => v.clone(),
            None => pad_box(&blo, &bhi, m).1,
        };
        Ok(Grid::new(lo, hi, vec![m; n])?)
    }
}

fn pad_box(blo: &[f64], bhi: &[f64], m: usize) -> (Vec<f64>, Vec<f64>) {
    let pad: Vec<f64> = blo
        .iter()
        .zip(bhi)
        .map(|(l, h)| 3.0 * (h - l) / (m.saturating_sub(5).max(2)) as f64)
        .collect();
    (
        blo.iter().zip(&pad).map(|(l, p)| l - p).collect(),
        bhi.iter().zip(&pad).map(|(h, p)| h + p).collect(),
    )
}

enum SetError {
    Unknown,
    Type(String),
}

/// Domain grammar: `ball(c1,..,cn; r)`, `ellipsoid(c..; a..)`,
/// `rect(lo..; hi..)`, `levelset(expr; lo..; hi..)`.
pub fn parse_domain(text: &str) -> Result<DomainSpec, ConfigError> {
    let bad = |reason: &str| ConfigError::BadDomain(text.to_string(), reason.to_string());
    let t = text.trim();
    let open = t.find('(').ok_or_else(|| bad("missing '('"))?;
    if !t.ends_with(')') {
        return Err(bad("missing ')'"));
    }
    let kind = t[..open].trim();
    let body = &t[open + 1..t.len() - 1];
    let parts: Vec<&str> = body.split(';').collect();
    let nums = |s: &str| -> Result<Vec<f64>, ConfigError> {
        s.split(',')
            .map(|x| x.trim().parse::<f64>().map_err(|_| bad("bad number")))
            .collect()
    };
    match kind {
        "ball" => {
            if parts.len() != 2 {
                return Err(bad("ball needs center; radius"));
            }
            let center = nums(parts[0])?;
            let r = nums(parts[1])?;
            if r.len() != 1 || !(r[0] > 0.0) {
                return Err(bad("radius must be one positive number"));
            }
            Ok(DomainSpec::ball(center, r[0]))
        }
        "ellipsoid" => {
            if parts.len() != 2 {
                return Err(bad("ellipsoid needs center; semi-axes"));
            }
            let center = nums(parts[0])?;
            let axes = nums(parts[1])?;
            if center.len() != axes.len() || axes.iter().any(|&a| !(a > 0.0)) {
                return Err(bad("semi-axes must be positive, one per coordinate"));
            }
            Ok(DomainSpec::ellipsoid(center, axes))
        }
        "rect" => {
            if parts.len() != 2 {
                return Err(bad("rect needs lo; hi"));
            }
            let lo = nums(parts[0])?;
            let hi = nums(parts[1])?;
            if lo.len() != hi.len() || lo.iter().zip(&hi).any(|(l, h)| !(h > l)) {
                return Err(bad("rect needs lo < hi per coordinate"));
            }
            Ok(DomainSpec::rect(lo, hi))
        }
        "levelset" => {
            if parts.len() != 3 {
                return Err(bad("levelset needs expr; lo; hi"));
            }
            let phi = Expr::parse(parts[0].trim())
                .map_err(|e| bad(&format!("bad expression: {e}")))?;
            let lo = nums(parts[1])?;
            let hi = nums(parts[2])?;
            if lo.len() != hi.len() {
                return Err(bad("lo and hi must have the same length"));
            }
            Ok(DomainSpec::level_set(phi, lo, hi))
        }
        other => Err(bad(&format!("unknown domain kind {other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
# closed-form ball example
problem.k = 2
problem.domain = "ball(0,0,0; 1)"
problem.f = "45*(x1^2+x2^2+x3^2)"
problem.phi = "0"
problem.theta = 1e-6
grid.m = 33
"#;

    #[test]
    fn minimal_solve_config() {
        let c = RunConfig::parse(MINIMAL).unwrap();
        let p = c.to_problem().unwrap();
        assert_eq!(p.k, 2);
        assert_eq!(p.theta, 1e-6);
        let g = c.to_grid(&p.domain).unwrap();
        assert_eq!(g.dim(), 3);
        assert_eq!(g.shape(), &[33, 33, 33]);
        // Default padding clears the 2h classification margin.
        assert!(g.lo()[0] <= -1.0 - 2.0 * g.spacing(0));
    }

    #[test]
    fn duplicate_and_unknown_keys_rejected() {
        let dup = "problem.k = 2\nproblem.k = 3\n";
        assert!(matches!(
            RunConfig::parse(dup),
            Err(ConfigError::DuplicateKey(2, _))
        ));
        let unk = "problem.q = 2\n";
        assert!(matches!(
            RunConfig::parse(unk),
            Err(ConfigError::UnknownKey(1, _))
        ));
        let syntax = "problem.k 2\n";
        assert!(matches!(RunConfig::parse(syntax), Err(ConfigError::Syntax(1))));
        let ty = "problem.k = \"two\"\n";
        assert!(matches!(RunConfig::parse(ty), Err(ConfigError::BadValue { .. })));
    }

    #[test]
    fn emit_parse_round_trip() {
        let mut c = RunConfig::parse(MINIMAL).unwrap();
        c.schedule = Some(vec![1e-1, 1e-2]);
        c.output_dir = Some("out".into());
        c.seed = Some(7);
        c.grid_lo = Some(vec![-1.3; 3]);
        c.grid_hi = Some(vec![1.3; 3]);
        let back = RunConfig::parse(&c.emit()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn schedule_list() {
        let c = RunConfig::parse("schedule = [1e-1, 1e-2]\n").unwrap();
        assert_eq!(c.schedule, Some(vec![1e-1, 1e-2]));
    }

    #[test]
    fn domain_grammar() {
        assert!(matches!(
            parse_domain("ball(0,0,0; 1)").unwrap(),
            DomainSpec::Ball { .. }
        ));
        assert!(matches!(
            parse_domain("ellipsoid(0,0; 1,2)").unwrap(),
            DomainSpec::Ellipsoid { .. }
        ));
        assert!(matches!(
            parse_domain("rect(-1,-1; 1,1)").unwrap(),
            DomainSpec::Rect { .. }
        ));
        assert!(matches!(
            parse_domain("levelset(x1^2 + x2^2 - 1; -1.5,-1.5; 1.5,1.5)").unwrap(),
            DomainSpec::LevelSet { .. }
        ));
        assert!(parse_domain("ball(0,0,0)").is_err());
        assert!(parse_domain("torus(1)").is_err());
    }

    #[test]
    fn dimension_cross_check() {
        let c = RunConfig::parse("problem.n = 2\nproblem.domain = \"ball(0,0,0; 1)\"\n").unwrap();
        assert!(matches!(
            c.to_domain(),
            Err(ConfigError::DimensionMismatch(2, 3))
        ));
    }
}
