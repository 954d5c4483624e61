//! JSON configuration files.
//!
//! Matrices are row-major: either a flat list of `d²` entries or a list of
//! rows. An entry is a `[re, im]` pair or a bare real number.

use std::fs;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use corrproj::generator::{GeneralizedLindblad, JumpIndex, RelevantConservedSet};
use corrproj::operator::{qubit, ComplexMatrix, DimPair};
use corrproj::projection::CorrelatedProjection;
use corrproj::state::ComponentState;
use corrproj::twoband::TwoBandParams;
use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Complex([f64; 2]),
    Real(f64),
}

impl Entry {
    fn value(&self) -> Complex64 {
        match *self {
            Entry::Complex([re, im]) => Complex64::new(re, im),
            Entry::Real(re) => Complex64::new(re, 0.0),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum MatrixJson {
    Rows(Vec<Vec<Entry>>),
    Flat(Vec<Entry>),
}

impl MatrixJson {
    /// Square matrix of dimension `dim`.
    pub fn to_matrix(&self, dim: usize) -> Result<ComplexMatrix> {
        let entries: Vec<Complex64> = match self {
            MatrixJson::Rows(rows) => {
                ensure!(rows.len() == dim, "expected {dim} rows, found {}", rows.len());
                for (r, row) in rows.iter().enumerate() {
                    ensure!(row.len() == dim, "row {r} has {} entries, expected {dim}", row.len());
                }
                rows.iter().flatten().map(Entry::value).collect()
            }
            MatrixJson::Flat(flat) => {
                ensure!(flat.len() == dim * dim, "expected {} entries, found {}", dim * dim, flat.len());
                flat.iter().map(Entry::value).collect()
            }
        };
        Ok(ComplexMatrix::from_row_slice(dim, dim, &entries))
    }
}

fn matrices(list: &[MatrixJson], dim: usize, what: &str) -> Result<Vec<ComplexMatrix>> {
    list.iter()
        .enumerate()
        .map(|(k, m)| m.to_matrix(dim).with_context(|| format!("{what}[{k}]")))
        .collect()
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("malformed config {}", path.display()))
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectionConfig {
    pub dim_sys: usize,
    pub dim_env: usize,
    pub a_ops: Vec<MatrixJson>,
    pub b_ops: Vec<MatrixJson>,
}

impl ProjectionConfig {
    pub fn build(&self) -> Result<CorrelatedProjection> {
        let dims = DimPair::new(self.dim_sys, self.dim_env)?;
        let a = matrices(&self.a_ops, self.dim_env, "a_ops")?;
        let b = matrices(&self.b_ops, self.dim_env, "b_ops")?;
        Ok(CorrelatedProjection::new(dims, a, b)?)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpJson {
    pub i: usize,
    pub j: usize,
    pub lambda: usize,
    pub op: MatrixJson,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorConfig {
    pub n: usize,
    pub dim_sys: usize,
    pub h_ops: Vec<MatrixJson>,
    #[serde(default)]
    pub jumps: Vec<JumpJson>,
}

impl GeneratorConfig {
    pub fn build(&self) -> Result<GeneralizedLindblad> {
        ensure!(self.h_ops.len() == self.n, "n = {} but {} h_ops given", self.n, self.h_ops.len());
        let h = matrices(&self.h_ops, self.dim_sys, "h_ops")?;
        let mut jumps = Vec::with_capacity(self.jumps.len());
        for (k, jump) in self.jumps.iter().enumerate() {
            // component indices are 1-based in files
            ensure!(
                (1..=self.n).contains(&jump.i) && (1..=self.n).contains(&jump.j),
                "jumps[{k}]: component indices must lie in 1..={}",
                self.n
            );
            let op = jump.op.to_matrix(self.dim_sys).with_context(|| format!("jumps[{k}].op"))?;
            jumps.push((JumpIndex::new(jump.i - 1, jump.j - 1, jump.lambda), op));
        }
        Ok(GeneralizedLindblad::new(self.dim_sys, h, jumps)?)
    }
}

fn default_realizations() -> usize {
    100
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub delta_e: f64,
    pub delta_eps: f64,
    pub n1: usize,
    pub n2: usize,
    pub lambda: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_realizations")]
    pub realizations: usize,
    /// Initial components `(ρ₁, ρ₂)`; defaults to `(|1⟩⟨1|, 0)`.
    #[serde(default)]
    pub initial: Option<Vec<MatrixJson>>,
}

impl ModelConfig {
    pub fn params(&self) -> Result<TwoBandParams> {
        let params = TwoBandParams {
            delta_e: self.delta_e,
            delta_eps: self.delta_eps,
            n1: self.n1,
            n2: self.n2,
            lambda: self.lambda,
            seed: self.seed,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn initial_components(&self) -> Result<(ComplexMatrix, ComplexMatrix)> {
        match &self.initial {
            None => Ok((qubit::excited(), ComplexMatrix::zeros(2, 2))),
            Some(list) => {
                ensure!(list.len() == 2, "a two-band initial state has 2 components, found {}", list.len());
                let m = matrices(list, 2, "initial")?;
                Ok((m[0].clone(), m[1].clone()))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Rk,
    Expm,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub generator: Option<GeneratorConfig>,
    #[serde(default)]
    pub model: Option<ModelConfig>,
    pub initial: Vec<MatrixJson>,
    pub t_max: f64,
    pub steps: usize,
    /// Each entry is one conserved set `(C^1, …, C^n)`.
    #[serde(default)]
    pub conserved: Vec<Vec<MatrixJson>>,
    #[serde(default)]
    pub method: Option<Method>,
}

/// A loaded and checked [`RunConfig`].
pub struct Run {
    pub generator: GeneralizedLindblad,
    pub initial: ComponentState,
    pub t_max: f64,
    pub steps: usize,
    pub conserved: Vec<RelevantConservedSet>,
    pub method: Method,
}

impl RunConfig {
    pub fn build(&self) -> Result<Run> {
        let generator = match (&self.generator, &self.model) {
            (Some(g), None) => g.build()?,
            (None, Some(m)) => corrproj::twoband::tcl2_generator(&m.params()?)?.0,
            _ => bail!("a run config needs exactly one of \"generator\" and \"model\""),
        };
        let (n, d) = (generator.n(), generator.dim_sys());
        ensure!(self.initial.len() == n, "generator has {n} components but {} initial matrices given", self.initial.len());
        let initial = ComponentState::new(matrices(&self.initial, d, "initial")?)?;
        let diag = initial.check(1e-9);
        ensure!(
            !diag.violation,
            "initial components are not a physical state (min eigenvalue {:e}, hermiticity defect {:e}, total trace {})",
            diag.min_eigenvalue,
            diag.hermiticity_defect,
            diag.total_trace
        );
        ensure!(self.t_max.is_finite() && self.t_max >= 0.0, "t_max must be finite and nonnegative");
        let conserved = self
            .conserved
            .iter()
            .enumerate()
            .map(|(k, set)| {
                ensure!(set.len() == n, "conserved[{k}] has {} operators, expected {n}", set.len());
                Ok(RelevantConservedSet::new(matrices(set, d, "conserved")?)?)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Run {
            generator,
            initial,
            t_max: self.t_max,
            steps: self.steps,
            conserved,
            method: self.method.unwrap_or(Method::Rk),
        })
    }
}
