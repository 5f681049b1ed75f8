//! Run configuration: `key = value` lines with `#` comments.

use dmlpg::{Method, QuadratureConfig, SolverConfig, SubdomainShape, WeightConfig};
use std::collections::BTreeMap;
use std::fmt;

/// Configuration error with the offending line number (0 for errors that
/// concern the configuration as a whole).
#[derive(Debug)]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line > 0 {
            write!(f, "config line {}: {}", self.line, self.message)
        } else {
            write!(f, "config: {}", self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Test,
    Fgm,
    Manufactured,
}

impl ProblemKind {
    pub fn name(&self) -> &'static str {
        match self {
            ProblemKind::Test => "test",
            ProblemKind::Fgm => "fgm",
            ProblemKind::Manufactured => "manufactured",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    CrankNicolson,
    BackwardEuler,
    MethodOfLines,
}

impl SchemeKind {
    pub fn name(&self) -> &'static str {
        match self {
            SchemeKind::CrankNicolson => "cn",
            SchemeKind::BackwardEuler => "be",
            SchemeKind::MethodOfLines => "mol",
        }
    }
}

/// Fully resolved run configuration. Every field has a documented
/// default, and the manifest echoes all of them.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub problem: ProblemKind,
    pub method: Method,
    pub degree: usize,
    /// Node spacing; `None` defers to the per-problem default.
    pub h: Option<f64>,
    /// Nodes per side; overrides `h` when given.
    pub grid_n: Option<usize>,
    pub gamma: f64,
    pub delta0: Option<f64>,
    pub c0: f64,
    pub r0_factor: f64,
    pub shape: SubdomainShape,
    pub scheme: SchemeKind,
    pub dt: f64,
    pub rtol: f64,
    pub atol: f64,
    pub t_final: Option<f64>,
    pub quad: QuadratureConfig,
    pub h_list: Vec<f64>,
    pub parallel: bool,
    pub out_dir: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            problem: ProblemKind::Test,
            method: Method::Dmlpg1,
            degree: 2,
            h: None,
            grid_n: None,
            gamma: 0.0,
            delta0: None,
            c0: WeightConfig::for_degree(2).c0,
            r0_factor: 0.7,
            shape: SubdomainShape::Ball,
            scheme: SchemeKind::CrankNicolson,
            dt: 0.01,
            rtol: 1e-5,
            atol: 1e-6,
            t_final: None,
            quad: QuadratureConfig::default(),
            h_list: vec![0.2, 0.1, 0.05],
            parallel: true,
        out_dir: None,
        }
    }
}

impl RunConfig {
    /// Weight parameters with the degree-dependent support default.
    pub fn weight(&self) -> WeightConfig {
        WeightConfig {
            delta0: self
                .delta0
                .unwrap_or_else(|| WeightConfig::for_degree(self.degree).delta0),
            c0: self.c0,
        }
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            degree: self.degree,
            weight: self.weight(),
            r0_factor: self.r0_factor,
            shape: self.shape,
            quad: self.quad,
            parallel: self.parallel,
        }
    }

    /// Every value that influences the run, one `key = value` per line.
    pub fn manifest(&self) -> String {
        let mut out = String::from("# resolved configuration\n");
        let shape = match self.shape {
            SubdomainShape::Ball => "ball",
            SubdomainShape::Square => "square",
        };
        let items: Vec<(&str, String)> = vec![
            ("problem", self.problem.name().into()),
            ("method", self.method.name().into()),
            ("m", self.degree.to_string()),
            ("h", fmt_opt(self.h)),
            ("n", self.grid_n.map_or("auto".into(), |n| n.to_string())),
            ("gamma", fmt_g(self.gamma)),
            ("delta0", fmt_g(self.weight().delta0)),
            ("c0", fmt_g(self.c0)),
            ("r0_factor", fmt_g(self.r0_factor)),
            ("shape", shape.into()),
            ("scheme", self.scheme.name().into()),
            ("dt", fmt_g(self.dt)),
            ("rtol", fmt_g(self.rtol)),
            ("atol", fmt_g(self.atol)),
            ("t_final", fmt_opt(self.t_final)),
            ("n_radial", self.quad.n_radial.to_string()),
            ("n_angular", self.quad.n_angular.to_string()),
            ("n_segment", self.quad.n_segment.to_string()),
            ("n_square", self.quad.n_square.to_string()),
            ("n_log", self.quad.n_log.to_string()),
            (
                "h_list",
                self.h_list
                    .iter()
                    .map(|h| fmt_g(*h))
                    .collect::<Vec<_>>()
                    .join(","),
            ),
            ("parallel", self.parallel.to_string()),
            (
                "out_dir",
                self.out_dir.clone().unwrap_or_else(|| "out".into()),
            ),
        ];
        for (k, v) in items {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }
}

fn fmt_g(v: f64) -> String {
    format!("{v}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or("auto".into(), |x| format!("{x}"))
}

fn err(line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError {
        line,
        message: message.into(),
    }
}

/// Parses and validates a configuration text. Unknown keys, malformed
/// values, and violated invariants are reported with their line number.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut entries: BTreeMap<&str, (String, usize)> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(line_no, format!("expected `key = value`, got `{line}`")))?;
        let key = key.trim();
        let value = value.trim();
        if value.is_empty() {
            return Err(err(line_no, format!("empty value for key `{key}`")));
        }
        let canonical = match key {
            "problem" | "method" | "m" | "h" | "n" | "gamma" | "delta0" | "c0" | "r0_factor"
            | "shape" | "scheme" | "dt" | "rtol" | "atol" | "t_final" | "n_radial"
            | "n_angular" | "n_segment" | "n_square" | "n_log" | "h_list" | "parallel"
            | "out_dir" => key,
            _ => return Err(err(line_no, format!("unknown key `{key}`"))),
        };
        if entries.insert(canonical, (value.to_string(), line_no)).is_some() {
            return Err(err(line_no, format!("duplicate key `{key}`")));
        }
    }

    let mut cfg = RunConfig::default();
    let get = |entries: &BTreeMap<&str, (String, usize)>, key: &str| {
        entries.get(key).cloned()
    };

    if let Some((v, l)) = get(&entries, "problem") {
        cfg.problem = match v.as_str() {
            "test" => ProblemKind::Test,
            "fgm" => ProblemKind::Fgm,
            "manufactured" => ProblemKind::Manufactured,
            other => return Err(err(l, format!("unknown problem `{other}`"))),
        };
    }
    if let Some((v, l)) = get(&entries, "method") {
        cfg.method = match v.as_str() {
            "dmlpg1" => Method::Dmlpg1,
            "dmlpg2" => Method::Dmlpg2,
            "dmlpg4" => Method::Dmlpg4,
            "dmlpg5" => Method::Dmlpg5,
            other => return Err(err(l, format!("unknown method `{other}`"))),
        };
    }
    if let Some((v, l)) = get(&entries, "m") {
        cfg.degree = parse_num::<usize>(&v, l, "m")?;
        if cfg.degree == 0 || cfg.degree > 6 {
            return Err(err(l, format!("m = {} outside the supported range 1..=6", cfg.degree)));
        }
    }
    if let Some((v, l)) = get(&entries, "h") {
        cfg.h = Some(parse_positive(&v, l, "h")?);
    }
    if let Some((v, l)) = get(&entries, "n") {
        let n = parse_num::<usize>(&v, l, "n")?;
        if n < 2 {
            return Err(err(l, format!("n = {n} must be at least 2")));
        }
        cfg.grid_n = Some(n);
    }
    if let Some((v, l)) = get(&entries, "gamma") {
        cfg.gamma = parse_num::<f64>(&v, l, "gamma")?;
        if !cfg.gamma.is_finite() || cfg.gamma < 0.0 {
            return Err(err(l, format!("gamma = {v} must be finite and non-negative")));
        }
    }
    if let Some((v, l)) = get(&entries, "delta0") {
        cfg.delta0 = Some(parse_positive(&v, l, "delta0")?);
    }
    if let Some((v, l)) = get(&entries, "c0") {
        cfg.c0 = parse_positive(&v, l, "c0")?;
    }
    if let Some((v, l)) = get(&entries, "r0_factor") {
        cfg.r0_factor = parse_positive(&v, l, "r0_factor")?;
    }
    if let Some((v, l)) = get(&entries, "shape") {
        cfg.shape = match v.as_str() {
            "ball" => SubdomainShape::Ball,
            "square" => SubdomainShape::Square,
            other => return Err(err(l, format!("unknown shape `{other}`"))),
        };
    }
    if let Some((v, l)) = get(&entries, "scheme") {
        cfg.scheme = match v.as_str() {
            "cn" | "crank-nicolson" => SchemeKind::CrankNicolson,
            "be" | "backward-euler" => SchemeKind::BackwardEuler,
            "mol" | "method-of-lines" => SchemeKind::MethodOfLines,
            other => return Err(err(l, format!("unknown scheme `{other}`"))),
        };
    }
    if let Some((v, l)) = get(&entries, "dt") {
        cfg.dt = parse_positive(&v, l, "dt")?;
    }
    if let Some((v, l)) = get(&entries, "rtol") {
        cfg.rtol = parse_positive(&v, l, "rtol")?;
    }
    if let Some((v, l)) = get(&entries, "atol") {
        cfg.atol = parse_positive(&v, l, "atol")?;
    }
    if let Some((v, l)) = get(&entries, "t_final") {
        cfg.t_final = Some(parse_positive(&v, l, "t_final")?);
    }
    if let Some((v, l)) = get(&entries, "n_radial") {
        cfg.quad.n_radial = parse_order(&v, l, "n_radial")?;
    }
    if let Some((v, l)) = get(&entries, "n_angular") {
        cfg.quad.n_angular = parse_order(&v, l, "n_angular")?;
    }
    if let Some((v, l)) = get(&entries, "n_segment") {
        cfg.quad.n_segment = parse_order(&v, l, "n_segment")?;
    }
    if let Some((v, l)) = get(&entries, "n_square") {
        cfg.quad.n_square = parse_order(&v, l, "n_square")?;
    }
    if let Some((v, l)) = get(&entries, "n_log") {
        cfg.quad.n_log = parse_order(&v, l, "n_log")?;
    }
    if let Some((v, l)) = get(&entries, "h_list") {
        let mut list = Vec::new();
        for part in v.split(',') {
            list.push(parse_positive(part.trim(), l, "h_list")?);
        }
        if list.is_empty() {
            return Err(err(l, "h_list must contain at least one spacing"));
        }
        cfg.h_list = list;
    }
    if let Some((v, l)) = get(&entries, "parallel") {
        cfg.parallel = v
            .parse::<bool>()
            .map_err(|_| err(l, format!("key `parallel`: `{v}` is not a boolean")))?;
    }
    if let Some((v, _)) = get(&entries, "out_dir") {
        cfg.out_dir = Some(v);
    }

    Ok(cfg)
}

fn parse_num<T: std::str::FromStr>(v: &str, line: usize, key: &str) -> Result<T, ConfigError> {
    v.parse::<T>()
        .map_err(|_| err(line, format!("key `{key}`: cannot parse `{v}`")))
}

fn parse_positive(v: &str, line: usize, key: &str) -> Result<f64, ConfigError> {
    let x = parse_num::<f64>(v, line, key)?;
    if !x.is_finite() || x <= 0.0 {
        return Err(err(line, format!("key `{key}`: value {v} must be positive")));
    }
    Ok(x)
}

fn parse_order(v: &str, line: usize, key: &str) -> Result<usize, ConfigError> {
    let n = parse_num::<usize>(v, line, key)?;
    if n == 0 {
        return Err(err(line, format!("key `{key}`: order must be at least 1")));
    }
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg.problem, ProblemKind::Test);
        assert_eq!(cfg.method, Method::Dmlpg1);
        assert_eq!(cfg.degree, 2);
        assert_eq!(cfg.dt, 0.01);
        assert_eq!(cfg.weight().delta0, 4.0);
    }

    #[test]
    fn fgm_gamma_is_parsed() {
        let cfg = parse_config("problem = fgm\ngamma = 50\n").unwrap();
        assert_eq!(cfg.problem, ProblemKind::Fgm);
        assert_eq!(cfg.gamma, 50.0);
    }

    #[test]
    fn negative_spacing_reports_key_and_line() {
        let e = parse_config("# comment\nh = -0.1\n").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(e.message.contains("`h`"), "{}", e.message);
    }

    #[test]
    fn unknown_key_rejected() {
        let e = parse_config("hh = 0.1\n").unwrap_err();
        assert_eq!(e.line, 1);
        assert!(e.message.contains("unknown key"));
    }

    #[test]
    fn manifest_lists_every_default() {
        let cfg = parse_config("").unwrap();
        let m = cfg.manifest();
        for key in [
            "problem", "method", "m", "h", "n", "gamma", "delta0", "c0", "r0_factor", "shape",
            "scheme", "dt", "rtol", "atol", "t_final", "n_radial", "n_angular", "n_segment",
            "n_square", "n_log", "h_list", "parallel", "out_dir",
        ] {
            assert!(m.contains(&format!("{key} = ")), "missing {key} in manifest");
        }
    }
}
