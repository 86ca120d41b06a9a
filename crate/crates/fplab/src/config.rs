//! Config file schema and construction of problems from it.
//!
//! A run is described by a single TOML file with `problem`, `solver`,
//! `verify`, `output` and (for sweeps) `sweep` tables. Parsing either
//! succeeds completely or fails with the parser's line/field diagnostics;
//! cross-field constraints are validated before any compute starts.

use crate::error::{Error, Result};
use crate::field::Field;
use crate::geometry::{build_ball, build_interval, build_rectangle, GridDomain};
use crate::solver::{ProblemSpec, SolverConfig};
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemBlock,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub verify: VerifyBlock,
    #[serde(default)]
    pub output: OutputBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepBlock>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemBlock {
    pub p: f64,
    pub s: f64,
    pub gamma: f64,
    pub domain: DomainBlock,
    pub source: SourceBlock,
    /// Declared Lebesgue integrability of the source (omit for bounded).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrability: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainBlock {
    Interval {
        a: f64,
        b: f64,
        nodes: usize,
        #[serde(default)]
        pad: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        truncation_radius: Option<f64>,
    },
    Rectangle {
        ax: f64,
        bx: f64,
        ay: f64,
        by: f64,
        nodes_x: usize,
        nodes_y: usize,
        #[serde(default)]
        pad: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        truncation_radius: Option<f64>,
    },
    Ball {
        #[serde(default)]
        cx: f64,
        #[serde(default)]
        cy: f64,
        radius: f64,
        nodes: usize,
        #[serde(default)]
        pad: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        truncation_radius: Option<f64>,
    },
}

impl DomainBlock {
    pub fn dim(&self) -> u32 {
        match self {
            DomainBlock::Interval { .. } => 1,
            _ => 2,
        }
    }

    pub fn nodes_across(&self) -> usize {
        match self {
            DomainBlock::Interval { nodes, .. } => *nodes,
            DomainBlock::Rectangle { nodes_x, .. } => *nodes_x,
            DomainBlock::Ball { nodes, .. } => *nodes,
        }
    }

    pub fn with_nodes(&self, m: usize) -> DomainBlock {
        let mut out = self.clone();
        match &mut out {
            DomainBlock::Interval { nodes, .. } => *nodes = m,
            DomainBlock::Rectangle {
                nodes_x, nodes_y, ..
            } => {
                *nodes_x = m;
                *nodes_y = m;
            }
            DomainBlock::Ball { nodes, .. } => *nodes = m,
        }
        out
    }

    pub fn build(&self) -> Result<Arc<GridDomain>> {
        let (domain, radius) = match *self {
            DomainBlock::Interval {
                a,
                b,
                nodes,
                pad,
                truncation_radius,
            } => (build_interval(a, b, nodes, pad)?, truncation_radius),
            DomainBlock::Rectangle {
                ax,
                bx,
                ay,
                by,
                nodes_x,
                nodes_y,
                pad,
                truncation_radius,
            } => (
                build_rectangle(ax, bx, ay, by, nodes_x, nodes_y, pad)?,
                truncation_radius,
            ),
            DomainBlock::Ball {
                cx,
                cy,
                radius,
                nodes,
                pad,
                truncation_radius,
            } => (build_ball(cx, cy, radius, nodes, pad)?, truncation_radius),
        };
        match radius {
            Some(r) => Ok(Arc::new(domain.as_ref().clone().with_truncation_radius(r)?)),
            None => Ok(domain),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceBlock {
    Constant {
        value: f64,
    },
    /// `amplitude * exp(-|x - center|^2 / (2 sigma^2))`.
    Gaussian {
        amplitude: f64,
        #[serde(default)]
        center: [f64; 2],
        sigma: f64,
    },
    /// `amplitude * |x|^exponent` (radial).
    Power {
        amplitude: f64,
        exponent: f64,
    },
    /// `constant + slope * x_0`; useful as an intentionally asymmetric
    /// source.
    Affine {
        constant: f64,
        slope: f64,
    },
    /// Nodal values, one per line in grid order (`#` comments allowed).
    Csv {
        path: String,
    },
}

impl SourceBlock {
    pub fn build(&self, domain: &Arc<GridDomain>) -> Result<Field> {
        match self {
            SourceBlock::Constant { value } => Field::from_fn(domain, |_| *value),
            SourceBlock::Gaussian {
                amplitude,
                center,
                sigma,
            } => {
                if !(*sigma > 0.0) {
                    return Err(Error::Config("gaussian source needs sigma > 0".into()));
                }
                let (a, c, sg) = (*amplitude, *center, *sigma);
                Field::from_fn(domain, move |x| {
                    let dx = x[0] - c[0];
                    let dy = x[1] - c[1];
                    a * (-(dx * dx + dy * dy) / (2.0 * sg * sg)).exp()
                })
            }
            SourceBlock::Power {
                amplitude,
                exponent,
            } => {
                if *exponent < 0.0 {
                    return Err(Error::Config(
                        "power source exponent must be nonnegative (nodal values stay finite)"
                            .into(),
                    ));
                }
                let (a, e) = (*amplitude, *exponent);
                Field::from_fn(domain, move |x| {
                    let r = x[0].hypot(x[1]);
                    a * r.powf(e)
                })
            }
            SourceBlock::Affine { constant, slope } => {
                let (c, sl) = (*constant, *slope);
                Field::from_fn(domain, move |x| c + sl * x[0])
            }
            SourceBlock::Csv { path } => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Config(format!("source csv `{path}`: {e}")))?;
                let mut values = Vec::new();
                for (lineno, line) in text.lines().enumerate() {
                    let line = line.trim();
                    if line.is_empty() || line.starts_with('#') {
                        continue;
                    }
                    let v: f64 = line.parse().map_err(|e| {
                        Error::Config(format!("source csv `{path}` line {}: {e}", lineno + 1))
                    })?;
                    values.push(v);
                }
                if values.len() != domain.node_count() {
                    return Err(Error::Config(format!(
                        "problem.source: csv `{path}` holds {} values but the grid has {} nodes",
                        values.len(),
                        domain.node_count()
                    )));
                }
                // exterior entries of a nodal source are zeroed (the collar
                // never carries a source)
                let masked: Vec<f64> = values
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| if domain.is_interior(i) { v } else { 0.0 })
                    .collect();
                Field::from_values(domain, masked)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyBlock {
    #[serde(default)]
    pub checks: Vec<String>,
    #[serde(default = "default_dino_q")]
    pub dino_q: Vec<f64>,
    #[serde(default = "default_dino_eps")]
    pub dino_eps: Vec<f64>,
    #[serde(default = "default_dino_samples")]
    pub dino_samples: usize,
    #[serde(default = "default_boundary_eps")]
    pub boundary_eps: Vec<f64>,
    #[serde(default = "default_exponent_tuples")]
    pub exponent_tuples: usize,
    /// Comparison check solves the problem again with the source scaled by
    /// this factor (>= 1).
    #[serde(default = "default_comparison_scale")]
    pub comparison_scale: f64,
    /// One-sided residual tolerance of the sub/supersolution screens.
    #[serde(default = "default_screen_tol")]
    pub screen_tol: f64,
}

fn default_dino_q() -> Vec<f64> {
    vec![1.5, 2.0, 3.7]
}
fn default_dino_eps() -> Vec<f64> {
    vec![0.1, 0.5, 1.0]
}
fn default_dino_samples() -> usize {
    100_000
}
fn default_boundary_eps() -> Vec<f64> {
    vec![0.05, 0.1, 0.2]
}
fn default_exponent_tuples() -> usize {
    100
}
fn default_comparison_scale() -> f64 {
    2.0
}
fn default_screen_tol() -> f64 {
    5e-2
}

impl Default for VerifyBlock {
    fn default() -> Self {
        Self {
            checks: Vec::new(),
            dino_q: default_dino_q(),
            dino_eps: default_dino_eps(),
            dino_samples: default_dino_samples(),
            boundary_eps: default_boundary_eps(),
            exponent_tuples: default_exponent_tuples(),
            comparison_scale: default_comparison_scale(),
            screen_tol: default_screen_tol(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default = "default_out_dir")]
    pub dir: String,
    #[serde(default = "default_formats")]
    pub formats: Vec<String>,
    #[serde(default)]
    pub seed: u64,
}

fn default_out_dir() -> String {
    "out".into()
}
fn default_formats() -> Vec<String> {
    vec!["json".into(), "csv".into()]
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self {
            dir: default_out_dir(),
            formats: default_formats(),
            seed: 0,
        }
    }
}

/// Cartesian sweep lists; a missing list falls back to the problem block's
/// single value, an explicitly empty list yields no runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<Vec<usize>>,
}

pub const VALID_CHECKS: &[&str] = &[
    "exponents",
    "lemma_dino",
    "monotonicity",
    "boundary_datum",
    "convexity_inequality",
    "comparison",
    "uniqueness",
    "symmetry",
];

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read `{}`: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Cross-field validation, before any compute.
    pub fn validate(&self) -> Result<()> {
        let p = self.problem.p;
        let s = self.problem.s;
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::Config(format!(
                "problem.p must lie in (1,inf), got {p}"
            )));
        }
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::Config(format!(
                "problem.s must lie in (0,1), got {s}"
            )));
        }
        if !(self.problem.gamma >= 0.0) {
            return Err(Error::Config(format!(
                "problem.gamma must be >= 0, got {}",
                self.problem.gamma
            )));
        }
        let n = self.problem.domain.dim() as f64;
        if n <= s * p {
            return Err(Error::Config(format!(
                "N>sp violated: domain dimension N = {n} but s*p = {}",
                s * p
            )));
        }
        if let Some(q) = self.problem.integrability {
            if !(q >= 1.0) {
                return Err(Error::Config(format!(
                    "problem.integrability must be >= 1, got {q}"
                )));
            }
        }
        self.solver
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        for c in &self.verify.checks {
            if !VALID_CHECKS.contains(&c.as_str()) {
                return Err(Error::Config(format!(
                    "unknown check `{c}`; valid checks: {}",
                    VALID_CHECKS.join(", ")
                )));
            }
        }
        for f in &self.output.formats {
            if f != "json" && f != "csv" {
                return Err(Error::Config(format!("unknown output format `{f}`")));
            }
        }
        Ok(())
    }

    /// Instantiate the domain and the problem data.
    pub fn build_problem(&self) -> Result<ProblemSpec> {
        let domain = self.problem.domain.build()?;
        let source = self.problem.source.build(&domain)?;
        if !source.is_nonnegative() {
            return Err(Error::Config(
                "problem.source evaluates negative at some interior node".into(),
            ));
        }
        ProblemSpec::new(
            self.problem.p,
            self.problem.s,
            self.problem.gamma,
            source,
            self.problem.integrability,
        )
    }
}
