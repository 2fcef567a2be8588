use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{Objective, ObjectiveDef, Point};
use crate::error::{Error, Result};

pub const CORPUS_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CorpusMember {
    pub id: String,
    #[serde(flatten)]
    pub def: ObjectiveDef,
}

#[derive(Debug, Serialize, Deserialize)]
struct CorpusFile {
    schema_version: u32,
    members: Vec<CorpusMember>,
}

/// Named collection of objectives, addressable by id.
#[derive(Clone, Debug)]
pub struct Corpus {
    members: Vec<Objective>,
}

/// Starting offset from `x*` used by default runs: the pattern `(5, 3, 5, 3, …)`
/// truncated to `dim`.
pub fn default_offset(dim: usize) -> Point {
    DVector::from_fn(dim, |i, _| if i % 2 == 0 { 5.0 } else { 3.0 })
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// PD quadratic in R⁵, eigenvalues log-spaced on [0.01, 1] (condition number
/// 100), rotated by a fixed Householder reflection, minimizer at the origin.
fn quad_pd_5() -> ObjectiveDef {
    let n = 5;
    let w = DVector::from_fn(n, |i, _| (i + 1) as f64);
    let q = DMatrix::identity(n, n) - &w * w.transpose() * (2.0 / w.norm_squared());
    let lambda = DVector::from_fn(n, |i, _| 10f64.powf(-2.0 + 2.0 * i as f64 / (n - 1) as f64));
    let a = &q * DMatrix::from_diagonal(&lambda) * q.transpose();
    let a = (&a + a.transpose()) * 0.5;
    ObjectiveDef::Quadratic { a: rows(&a), b: vec![0.0; n], c: 0.0 }
}

/// `½(x₂ − 1)²` in R²: argmin is the line `x₂ = 1`, `x* = (0, 1)`.
fn quad_line_2() -> ObjectiveDef {
    ObjectiveDef::Quadratic { a: vec![vec![0.0, 0.0], vec![0.0, 1.0]], b: vec![0.0, 1.0], c: 0.5 }
}

/// `A = diag(0, 1, 2, 3, 4)`, `b = (0, 1, 1, 1, 1)`: argmin is a line along e₁.
fn quad_degen_5() -> ObjectiveDef {
    let a = DMatrix::from_diagonal(&DVector::from_fn(5, |i, _| i as f64));
    ObjectiveDef::Quadratic { a: rows(&a), b: vec![0.0, 1.0, 1.0, 1.0, 1.0], c: 0.0 }
}

/// Log-sum-exp of twelve affine forms in R⁵ (`±eᵢ` plus two mixed rows).
fn lse_5() -> ObjectiveDef {
    let n = 5;
    let mut r = Vec::new();
    for sign in [1.0, -1.0] {
        for i in 0..n {
            let mut row = vec![0.0; n];
            row[i] = sign;
            r.push(row);
        }
    }
    r.push(vec![0.5, 0.5, 0.5, 0.5, 0.5]);
    r.push(vec![0.3, -0.3, 0.3, -0.3, 0.3]);
    let offsets = vec![0.3, -0.2, 0.1, 0.4, -0.5, -0.1, 0.2, 0.0, -0.3, 0.25, 0.15, -0.35];
    ObjectiveDef::LogSumExp { rows: r, offsets }
}

impl Corpus {
    pub fn from_members(members: Vec<CorpusMember>) -> Result<Self> {
        let mut objs: Vec<Objective> = Vec::with_capacity(members.len());
        for m in members {
            if objs.iter().any(|o| o.id() == m.id) {
                return Err(Error::InvalidInput(format!("duplicate objective id `{}`", m.id)));
            }
            objs.push(Objective::from_def(m.id, m.def)?);
        }
        Ok(Self { members: objs })
    }

    /// The shipped corpus: `quad_pd_5`, `quad_line_2`, `quad_degen_5`, `lse_5`.
    pub fn builtin() -> Self {
        let members = vec![
            CorpusMember { id: "quad_pd_5".into(), def: quad_pd_5() },
            CorpusMember { id: "quad_line_2".into(), def: quad_line_2() },
            CorpusMember { id: "quad_degen_5".into(), def: quad_degen_5() },
            CorpusMember { id: "lse_5".into(), def: lse_5() },
        ];
        Self::from_members(members).expect("builtin corpus is valid")
    }

    pub fn from_json_str(s: &str) -> std::result::Result<Self, String> {
        let file: CorpusFile = serde_json::from_str(s).map_err(|e| e.to_string())?;
        if file.schema_version != CORPUS_SCHEMA_VERSION {
            return Err(format!(
                "unsupported corpus schema_version {} (expected {CORPUS_SCHEMA_VERSION})",
                file.schema_version
            ));
        }
        Self::from_members(file.members).map_err(|e| e.to_string())
    }

    /// Loads a corpus file. Every failure names the file.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::from_json_str(&text).map_err(|message| Error::Config {
            path: path.display().to_string(),
            message,
        })
    }

    pub fn to_json(&self) -> String {
        let file = CorpusFile {
            schema_version: CORPUS_SCHEMA_VERSION,
            members: self
                .members
                .iter()
                .map(|o| CorpusMember { id: o.id().to_string(), def: o.def().clone() })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("corpus serializes")
    }

    pub fn get(&self, id: &str) -> Result<&Objective> {
        self.members
            .iter()
            .find(|o| o.id() == id)
            .ok_or_else(|| Error::UnknownObjective(id.to_string()))
    }

    pub fn members(&self) -> &[Objective] {
        &self.members
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.members.iter().map(|o| o.id())
    }
}
