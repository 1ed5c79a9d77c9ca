//! Problem configuration files and trajectory CSV.
//!
//! Configuration (JSON):
//!
//! ```json
//! {
//!   "alpha": 0.5, "delay": 1.0, "horizon": 2.0, "dim": 1,
//!   "steps_per_delay": 100,
//!   "history": {"constant": [1.0]},
//!   "rhs": {"expr": ["-x1 + 0.5*y1"]},
//!   "lipschitz": {"constant": 1.0}
//! }
//! ```
//!
//! `history` may also be `{"expr": "1 + t"}` (one string for every component,
//! or an array with one per component) or `{"samples": [[t, v1, ..], ..]}`.
//! `lipschitz` is required; `{"estimate": true}` asks for a sampled estimate.

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    build_grid, DelayProblem, ExprRhs, HistoryFunction, Lipschitz, ModelError, Trajectory,
};
use crate::rhs_expr::{parse, ExprContext, ParseError};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: String,
        source: std::io::Error,
    },
    #[error("config: {0}")]
    Json(#[from] serde_json::Error),
    #[error("config field {field}: {source}")]
    Expr { field: String, source: ParseError },
    #[error("config: {0}")]
    Config(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("csv: {0}")]
    Trajectory(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(String),
    Many(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HistorySpec {
    Constant(Vec<f64>),
    Expr(OneOrMany),
    /// Rows `[t, v1, .., vd]`.
    Samples(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RhsSpec {
    pub expr: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LipschitzSpec {
    Constant(f64),
    Estimate(bool),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub alpha: f64,
    pub delay: f64,
    pub horizon: f64,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps_per_delay: Option<usize>,
    pub history: HistorySpec,
    pub rhs: RhsSpec,
    pub lipschitz: LipschitzSpec,
}

impl ProblemConfig {
    pub fn from_json(text: &str) -> Result<Self, IoError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, IoError> {
        Self::from_json(&read_to_string(path)?)
    }

    /// Parses the expressions and assembles the problem; range checks are
    /// left to [`validate_problem`](crate::model::validate_problem).
    pub fn to_problem(&self) -> Result<DelayProblem, IoError> {
        if self.rhs.expr.len() != self.dim {
            return Err(IoError::Config(format!(
                "rhs.expr has {} entries but dim is {}",
                self.rhs.expr.len(),
                self.dim
            )));
        }
        let components = self
            .rhs
            .expr
            .iter()
            .enumerate()
            .map(|(i, src)| {
                parse(src, ExprContext::rhs(self.dim)).map_err(|source| IoError::Expr {
                    field: format!("rhs.expr[{i}]"),
                    source,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;

        let history = match &self.history {
            HistorySpec::Constant(v) => HistoryFunction::Constant(v.clone()),
            HistorySpec::Expr(e) => {
                let sources = match e {
                    OneOrMany::One(s) => vec![s.clone(); self.dim],
                    OneOrMany::Many(v) => v.clone(),
                };
                let exprs = sources
                    .iter()
                    .map(|src| {
                        parse(src, ExprContext::history()).map_err(|source| IoError::Expr {
                            field: "history.expr".into(),
                            source,
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                HistoryFunction::Expr(exprs)
            }
            HistorySpec::Samples(rows) => {
                if rows.iter().any(|r| r.len() < 2) {
                    return Err(IoError::Config(
                        "history.samples rows must be [t, v1, ..]".into(),
                    ));
                }
                HistoryFunction::Samples {
                    times: rows.iter().map(|r| r[0]).collect(),
                    values: rows.iter().map(|r| r[1..].to_vec()).collect(),
                }
            }
        };

        let lipschitz = match self.lipschitz {
            LipschitzSpec::Estimate(true) => Lipschitz::Estimate,
            LipschitzSpec::Constant(l) => Lipschitz::Constant(l),
            LipschitzSpec::Estimate(false) => {
                return Err(IoError::Config(
                    "lipschitz: give {\"constant\": L} or {\"estimate\": true}".into(),
                ))
            }
        };

        let mut p = DelayProblem::new(
            self.alpha,
            self.delay,
            self.horizon,
            history,
            Arc::new(ExprRhs::new(components)),
        )
        .with_lipschitz(lipschitz);
        p.dim = self.dim;
        Ok(p)
    }
}

pub(crate) fn read_to_string(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })
}

/// Writes `t,x_1,..,x_d` rows for every node, 17 significant digits.
pub fn write_trajectory<W: Write>(traj: &Trajectory, out: W) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend((1..=traj.dim()).map(|i| format!("x_{i}")));
    w.write_record(&header)?;
    let mut row = Vec::with_capacity(traj.dim() + 1);
    for (_, t, x) in traj.nodes() {
        row.clear();
        row.push(format!("{t:.16e}"));
        row.extend(x.iter().map(|v| format!("{v:.16e}")));
        w.write_record(&row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Reads a trajectory written by [`write_trajectory`].
///
/// The grid is recovered from the rows: `−r` is the first time (or `delay`
/// when given) and the number of rows before `t = 0` is the steps per delay.
pub fn read_trajectory<R: Read>(input: R, delay: Option<f64>) -> Result<Trajectory, IoError> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    let dim = header.len().saturating_sub(1);
    if dim == 0 || &header[0] != "t" {
        return Err(IoError::Trajectory("header must be t,x_1,..,x_d".into()));
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record?;
        if record.len() != dim + 1 {
            return Err(IoError::Trajectory(format!(
                "row {} has {} fields",
                line + 1,
                record.len()
            )));
        }
        let mut nums = record.iter().map(|f| {
            f.trim()
                .parse::<f64>()
                .map_err(|e| IoError::Trajectory(format!("row {}: {e}", line + 1)))
        });
        times.push(nums.next().expect("checked length")?);
        for v in nums {
            values.push(v?);
        }
    }
    let m = times.iter().take_while(|&&t| t < 0.0).count();
    if m == 0 || times.len() < m + 2 {
        return Err(IoError::Trajectory(
            "need rows before t = 0 and at least one step after it".into(),
        ));
    }
    let r_delay = delay.unwrap_or(-times[0]);
    let grid = build_grid(r_delay, times[times.len() - 1], m)?;
    if grid.node_count() != times.len() {
        return Err(IoError::Trajectory(format!(
            "{} rows do not fit a grid with delay {r_delay} and {m} steps per delay",
            times.len()
        )));
    }
    for (i, &t) in times.iter().enumerate() {
        let expected = grid.time(i as isize - m as isize);
        if (t - expected).abs() > 1e-12 * expected.abs().max(1.0) {
            return Err(IoError::Trajectory(format!(
                "row {} has t = {t}, grid node is {expected}",
                i + 1
            )));
        }
    }
    Ok(Trajectory::from_flat(grid, dim, values)?)
}
