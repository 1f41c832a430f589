//! Experiment configuration: a flat `key = value` text file plus overrides.
//!
//! ```text
//! # three classes on a 20-regular graph
//! M = 200
//! r = 20
//! class_means = 0.2, 0.4, 0.8
//! sigma = 0.5
//! epsilon = 4          # or inf
//! rule = bernstein     # oracle | bernstein | optimistic | local
//! theta_exponent = 0.2 # defaults to the tuned value for (r, epsilon)
//! alpha = windowed     # simple | windowed
//! t_max = 1000
//! replicas = 200
//! seed = 1
//! ```
//!
//! Later entries and overrides replace earlier ones. Unknown keys are errors.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::consensus::AlphaSchedule;
use crate::error::{Error, Result};
use crate::privacy::PrivacySpec;
use crate::rules::{RuleSpec, ThetaSchedule};

const KEYS: &[&str] = &[
    "M",
    "r",
    "class_means",
    "sigma",
    "epsilon",
    "rule",
    "theta_cap",
    "theta_coefficient",
    "theta_exponent",
    "delta",
    "alpha",
    "alpha_window",
    "t_max",
    "replicas",
    "seed",
    "regenerate_topology",
    "graph_file",
];

/// How each agent forms its personal estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Estimator {
    /// Each agent keeps only its own sample mean.
    Local,
    /// The consensus algorithm with the given neighbor rule.
    Collaborative(RuleSpec),
}

impl Estimator {
    pub fn name(&self) -> &'static str {
        match self {
            Estimator::Local => "local",
            Estimator::Collaborative(rule) => rule.name(),
        }
    }
}

/// A fully resolved experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub num_agents: usize,
    pub degree: usize,
    pub class_means: Vec<f64>,
    /// Common data standard deviation; data are uniform with half-range `σ√3`.
    pub sigma: f64,
    pub epsilon: f64,
    pub estimator: Estimator,
    pub alpha: AlphaSchedule,
    pub t_max: u64,
    pub replicas: u64,
    pub master_seed: u64,
    /// Draw a fresh graph and class assignment for every replica.
    pub regenerate_topology: bool,
    /// Fixed graph in edge-list format, used instead of a random regular graph.
    pub graph_file: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::from_map(&BTreeMap::new()).expect("defaults are valid")
    }
}

impl ExperimentConfig {
    pub fn half_range(&self) -> f64 {
        self.sigma * 3f64.sqrt()
    }

    pub fn privacy(&self) -> Result<PrivacySpec> {
        PrivacySpec::calibrate(self.epsilon, self.half_range())
    }

    pub fn sigma_sq_of(&self) -> Vec<f64> {
        vec![self.sigma * self.sigma; self.num_agents]
    }

    /// Parses config text, then applies `key=value` overrides in order.
    pub fn parse_with_overrides<S: AsRef<str>>(text: &str, overrides: &[S]) -> Result<Self> {
        let mut map = parse_entries(text)?;
        for o in overrides {
            let (k, v) = split_entry(o.as_ref())
                .ok_or_else(|| Error::Config(format!("override `{}` is not key=value", o.as_ref())))?;
            insert_entry(&mut map, k, v)?;
        }
        Self::from_map(&map)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_with_overrides::<&str>(text, &[])
    }

    /// Loads a config file. A relative `graph_file` is resolved against the file's directory.
    pub fn load<S: AsRef<str>>(path: &Path, overrides: &[S]) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::parse_with_overrides(&text, overrides)?;
        if let (Some(gf), Some(dir)) = (cfg.graph_file.as_mut(), path.parent()) {
            if gf.is_relative() {
                *gf = dir.join(&*gf);
            }
        }
        Ok(cfg)
    }

    fn from_map(map: &BTreeMap<String, String>) -> Result<Self> {
        let get = |k: &str| map.get(k).map(String::as_str);
        let num_agents = parse_or(get("M"), 200usize, "M")?;
        let degree = parse_or(get("r"), 20usize, "r")?;
        let class_means = match get("class_means") {
            Some(v) => v
                .split(',')
                .map(|s| parse_f64(s.trim(), "class_means"))
                .collect::<Result<Vec<_>>>()?,
            None => vec![0.2, 0.4, 0.8],
        };
        let sigma = get("sigma").map_or(Ok(0.5), |v| parse_f64(v, "sigma"))?;
        let epsilon = get("epsilon").map_or(Ok(f64::INFINITY), |v| parse_f64(v, "epsilon"))?;

        let tuned = ThetaSchedule::tuned(degree, epsilon);
        let schedule = ThetaSchedule {
            cap: get("theta_cap").map_or(Ok(tuned.cap), |v| parse_f64(v, "theta_cap"))?,
            coefficient: get("theta_coefficient")
                .map_or(Ok(tuned.coefficient), |v| parse_f64(v, "theta_coefficient"))?,
            exponent: get("theta_exponent").map_or(Ok(tuned.exponent), |v| parse_f64(v, "theta_exponent"))?,
        };
        let delta = get("delta").map_or(Ok(1.0), |v| parse_f64(v, "delta"))?;
        let estimator = match get("rule").unwrap_or("oracle") {
            "oracle" => Estimator::Collaborative(RuleSpec::Oracle),
            "bernstein" => Estimator::Collaborative(RuleSpec::BernsteinTest { schedule }),
            "optimistic" => Estimator::Collaborative(RuleSpec::OptimisticDistance { delta, r_assumed: degree }),
            "local" => Estimator::Local,
            other => return Err(Error::Config(format!("unknown rule `{other}`"))),
        };
        let window = parse_or(get("alpha_window"), 10u64, "alpha_window")?;
        let alpha = match get("alpha").unwrap_or("windowed") {
            "simple" => AlphaSchedule::Simple,
            "windowed" => AlphaSchedule::Windowed { window },
            other => return Err(Error::Config(format!("unknown alpha schedule `{other}`"))),
        };
        let regenerate_topology = match get("regenerate_topology").unwrap_or("true") {
            "true" | "1" | "yes" => true,
            "false" | "0" | "no" => false,
            other => return Err(Error::Config(format!("regenerate_topology must be a boolean, got `{other}`"))),
        };
        let cfg = Self {
            num_agents,
            degree,
            class_means,
            sigma,
            epsilon,
            estimator,
            alpha,
            t_max: parse_or(get("t_max"), 1000u64, "t_max")?,
            replicas: parse_or(get("replicas"), 100u64, "replicas")?,
            master_seed: parse_or(get("seed"), 0u64, "seed")?,
            regenerate_topology,
            graph_file: get("graph_file").map(PathBuf::from),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.num_agents == 0 {
            return bad("M must be at least 1".into());
        }
        if self.class_means.is_empty() || self.class_means.iter().any(|m| !m.is_finite()) {
            return bad("class_means must be a nonempty list of finite numbers".into());
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return bad(format!("sigma must be > 0, got {}", self.sigma));
        }
        if !(self.epsilon > 0.0) {
            return bad(format!("epsilon must be > 0 or inf, got {}", self.epsilon));
        }
        if self.t_max < 1 {
            return bad("t_max must be at least 1".into());
        }
        if self.replicas < 1 {
            return bad("replicas must be at least 1".into());
        }
        if let AlphaSchedule::Windowed { window: 0 } = self.alpha {
            return bad("alpha_window must be at least 1".into());
        }
        if let Estimator::Collaborative(rule) = &self.estimator {
            rule.validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }

    /// Canonical `key = value` rendering of every resolved field.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "M = {}", self.num_agents);
        let _ = writeln!(s, "r = {}", self.degree);
        let means: Vec<String> = self.class_means.iter().map(|m| m.to_string()).collect();
        let _ = writeln!(s, "class_means = {}", means.join(", "));
        let _ = writeln!(s, "sigma = {}", self.sigma);
        let _ = writeln!(s, "epsilon = {}", format_epsilon(self.epsilon));
        let _ = writeln!(s, "rule = {}", self.estimator.name());
        match self.estimator {
            Estimator::Collaborative(RuleSpec::BernsteinTest { schedule }) => {
                let _ = writeln!(s, "theta_cap = {}", schedule.cap);
                let _ = writeln!(s, "theta_coefficient = {}", schedule.coefficient);
                let _ = writeln!(s, "theta_exponent = {}", schedule.exponent);
            }
            Estimator::Collaborative(RuleSpec::OptimisticDistance { delta, .. }) => {
                let _ = writeln!(s, "delta = {delta}");
            }
            _ => {}
        }
        let _ = writeln!(s, "alpha = {}", self.alpha.name());
        if let AlphaSchedule::Windowed { window } = self.alpha {
            let _ = writeln!(s, "alpha_window = {window}");
        }
        let _ = writeln!(s, "t_max = {}", self.t_max);
        let _ = writeln!(s, "replicas = {}", self.replicas);
        let _ = writeln!(s, "seed = {}", self.master_seed);
        let _ = writeln!(s, "regenerate_topology = {}", self.regenerate_topology);
        if let Some(gf) = &self.graph_file {
            let _ = writeln!(s, "graph_file = {}", gf.display());
        }
        s
    }

    /// First 16 hex digits of the SHA-256 of [`Self::to_config_string`].
    pub fn config_hash(&self) -> String {
        let digest = Sha256::digest(self.to_config_string().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// `inf` for infinity, shortest round-trip decimal otherwise.
pub fn format_epsilon(epsilon: f64) -> String {
    if epsilon.is_infinite() {
        "inf".to_string()
    } else {
        epsilon.to_string()
    }
}

fn parse_entries(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = split_entry(line)
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value, got `{raw}`", lineno + 1)))?;
        insert_entry(&mut map, k, v)?;
    }
    Ok(map)
}

fn split_entry(s: &str) -> Option<(&str, &str)> {
    let (k, v) = s.split_once('=')?;
    let (k, v) = (k.trim(), v.trim());
    (!k.is_empty()).then_some((k, v))
}

fn insert_entry(map: &mut BTreeMap<String, String>, key: &str, value: &str) -> Result<()> {
    if !KEYS.contains(&key) {
        return Err(Error::Config(format!("unknown key `{key}`")));
    }
    map.insert(key.to_string(), value.to_string());
    Ok(())
}

fn parse_f64(v: &str, key: &str) -> Result<f64> {
    match v {
        "inf" | "infinity" | "∞" => Ok(f64::INFINITY),
        _ => v
            .parse::<f64>()
            .ok()
            .filter(|x| !x.is_nan())
            .ok_or_else(|| Error::Config(format!("{key}: `{v}` is not a number"))),
    }
}

fn parse_or<T: std::str::FromStr>(v: Option<&str>, default: T, key: &str) -> Result<T> {
    match v {
        None => Ok(default),
        Some(v) => v.parse().map_err(|_| Error::Config(format!("{key}: cannot parse `{v}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = ExperimentConfig::default();
        assert_eq!(c.num_agents, 200);
        assert_eq!(c.class_means, vec![0.2, 0.4, 0.8]);
        assert!(c.epsilon.is_infinite());
        assert_eq!(c.alpha, AlphaSchedule::Windowed { window: 10 });
        assert_eq!(c.t_max, 1000);
        assert!((c.half_range() - 0.866_025_403_784_438_6).abs() < 1e-15);
    }

    #[test]
    fn parse_and_override() {
        let text = "M = 24\nr = 6 # comment\n\nepsilon = 2\nrule = bernstein\nseed=9\n";
        let c = ExperimentConfig::parse_with_overrides(text, &["r=4", "theta_exponent = 0.25"]).unwrap();
        assert_eq!((c.num_agents, c.degree, c.master_seed), (24, 4, 9));
        match c.estimator {
            Estimator::Collaborative(RuleSpec::BernsteinTest { schedule }) => {
                assert_eq!(schedule.exponent, 0.25);
                assert_eq!(schedule.cap, 2.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn tuned_theta_default_follows_r_and_epsilon() {
        let c = ExperimentConfig::parse("r = 5\nepsilon = 1\nrule = bernstein\n").unwrap();
        let Estimator::Collaborative(RuleSpec::BernsteinTest { schedule }) = c.estimator else { panic!() };
        assert_eq!(schedule.exponent, 1.0 / 8.0);
    }

    #[test]
    fn errors() {
        for bad in [
            "foo = 1",
            "M = x",
            "rule = magic",
            "sigma = 0",
            "epsilon = -1",
            "t_max = 0",
            "replicas = 0",
            "alpha = fast",
            "rule = optimistic\ndelta = 2",
            "line without equals",
            "regenerate_topology = maybe",
            "class_means = ",
        ] {
            assert!(matches!(ExperimentConfig::parse(bad), Err(Error::Config(_))), "{bad}");
        }
        assert!(ExperimentConfig::parse_with_overrides("", &["noequals"]).is_err());
    }

    #[test]
    fn canonical_string_round_trips() {
        let c = ExperimentConfig::parse("rule = optimistic\nepsilon = 4\nregenerate_topology = false\n").unwrap();
        let again = ExperimentConfig::parse(&c.to_config_string()).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.config_hash(), c.config_hash());
        let other = ExperimentConfig::parse("rule = optimistic\nepsilon = 2\n").unwrap();
        assert_ne!(other.config_hash(), c.config_hash());
        assert_eq!(c.config_hash().len(), 16);
    }
}
