//! CSV emission and parsing.
//!
//! Schema (one row per curve and round):
//!
//! ```text
//! curve,rule,epsilon,r,M,t,mse_mean,mse_stderr,replicas,seed
//! ```
//!
//! Analytic rows carry `replicas = 0` and `mse_stderr = 0`; infinite privacy
//! budgets are written as `inf`. Floats use the shortest representation that
//! parses back to the same value.

use std::io::{Read, Write};
use std::path::Path;

use super::config::{format_epsilon, ExperimentConfig};
use super::harness::{RunResult, TheoryConstants};
use crate::error::{Error, Result};

pub const HEADER: [&str; 10] = ["curve", "rule", "epsilon", "r", "M", "t", "mse_mean", "mse_stderr", "replicas", "seed"];

/// One named MSE trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub name: String,
    pub rule: String,
    pub epsilon: f64,
    pub degree: usize,
    pub num_agents: usize,
    pub replicas: u64,
    pub seed: u64,
    /// `(t, mse_mean, mse_stderr)`.
    pub points: Vec<(u64, f64, f64)>,
}

impl Curve {
    /// The simulated curve of a run.
    pub fn simulated(result: &RunResult) -> Self {
        Self {
            name: "simulated".to_string(),
            rule: result.rule.clone(),
            epsilon: result.epsilon,
            degree: result.degree,
            num_agents: result.num_agents,
            replicas: result.replica_count,
            seed: result.master_seed,
            points: (1..=result.mse_mean.len())
                .map(|t| (t as u64, result.mse_mean[t - 1], result.mse_stderr[t - 1]))
                .collect(),
        }
    }

    /// `theory-local`, `theory-ideal` and `theory-thm1` for rounds `1..=t_max`.
    pub fn theory(config: &ExperimentConfig, constants: &TheoryConstants) -> Vec<Self> {
        let make = |name: &str, rule: &str, c: f64| Self {
            name: name.to_string(),
            rule: rule.to_string(),
            epsilon: config.epsilon,
            degree: config.degree,
            num_agents: config.num_agents,
            replicas: 0,
            seed: config.master_seed,
            points: (1..=config.t_max).map(|t| (t, c / t as f64, 0.0)).collect(),
        };
        vec![
            make("theory-local", "local", constants.local),
            make("theory-ideal", "none", constants.ideal),
            make("theory-thm1", "oracle", constants.theorem1),
        ]
    }
}

/// Writes all curves to `out`. An empty curve list is an error.
pub fn write_csv<W: Write>(curves: &[Curve], out: W) -> Result<()> {
    if curves.is_empty() {
        return Err(Error::invalid("no curves to write"));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for c in curves {
        let eps = format_epsilon(c.epsilon);
        for &(t, mean, stderr) in &c.points {
            w.write_record([
                c.name.as_str(),
                c.rule.as_str(),
                eps.as_str(),
                &c.degree.to_string(),
                &c.num_agents.to_string(),
                &t.to_string(),
                &mean.to_string(),
                &stderr.to_string(),
                &c.replicas.to_string(),
                &c.seed.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes all curves to a file.
pub fn emit_csv(curves: &[Curve], path: &Path) -> Result<()> {
    if curves.is_empty() {
        return Err(Error::invalid("no curves to write"));
    }
    let file = std::fs::File::create(path)?;
    write_csv(curves, std::io::BufWriter::new(file))
}

/// Parses CSV written by [`write_csv`], regrouping consecutive rows into curves.
pub fn read_csv<R: Read>(input: R) -> Result<Vec<Curve>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != HEADER {
        return Err(Error::invalid(format!("unexpected CSV header {header:?}")));
    }
    let mut curves: Vec<Curve> = Vec::new();
    for record in r.records() {
        let rec = record?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let num = |i: usize| -> Result<f64> {
            let s = field(i);
            if s == "inf" {
                return Ok(f64::INFINITY);
            }
            s.parse().map_err(|_| Error::invalid(format!("bad number `{s}` in column {}", HEADER[i])))
        };
        let int = |i: usize| -> Result<u64> {
            field(i).parse().map_err(|_| Error::invalid(format!("bad integer `{}` in column {}", field(i), HEADER[i])))
        };
        let point = (int(5)?, num(6)?, num(7)?);
        let key = (field(0), field(1), num(2)?, int(3)? as usize, int(4)? as usize, int(8)?, int(9)?);
        match curves.last_mut() {
            Some(c)
                if (c.name.as_str(), c.rule.as_str(), c.epsilon, c.degree, c.num_agents, c.replicas, c.seed)
                    == key =>
            {
                c.points.push(point)
            }
            _ => curves.push(Curve {
                name: key.0.to_string(),
                rule: key.1.to_string(),
                epsilon: key.2,
                degree: key.3,
                num_agents: key.4,
                replicas: key.5,
                seed: key.6,
                points: vec![point],
            }),
        }
    }
    Ok(curves)
}
