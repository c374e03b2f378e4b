//! JSON documents for observables, subspace families and plain matrices.
//!
//! Complex numbers are `[re, im]` pairs; matrices are row-major nested arrays.

use serde::{Deserialize, Serialize};

use crate::constructions::SubspaceFamily;
use crate::error::{PovmError, Result};
use crate::matcore::{c, CMatrix, ToleranceConfig};
use crate::observable::Observable;

pub type JsonMatrix = Vec<Vec<[f64; 2]>>;

/// Partial tolerance settings; unset fields keep the base value.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rank_rel_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub equality_abs_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub psd_eig_floor: Option<f64>,
}

impl ToleranceOverrides {
    pub fn apply(&self, base: &ToleranceConfig) -> ToleranceConfig {
        ToleranceConfig {
            rank_rel_tol: self.rank_rel_tol.unwrap_or(base.rank_rel_tol),
            equality_abs_tol: self.equality_abs_tol.unwrap_or(base.equality_abs_tol),
            psd_eig_floor: self.psd_eig_floor.unwrap_or(base.psd_eig_floor),
        }
    }

    /// Parses `key=value`.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| PovmError::InvalidInput(format!("expected key=value, got '{assignment}'")))?;
        let v: f64 = value
            .trim()
            .parse()
            .map_err(|_| PovmError::InvalidInput(format!("'{value}' is not a number")))?;
        match key.trim() {
            "rank_rel_tol" => self.rank_rel_tol = Some(v),
            "equality_abs_tol" => self.equality_abs_tol = Some(v),
            "psd_eig_floor" => self.psd_eig_floor = Some(v),
            other => return Err(PovmError::InvalidInput(format!("unknown tolerance key '{other}'"))),
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObservableFile {
    pub dim: usize,
    pub effects: Vec<JsonMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<ToleranceOverrides>,
}

impl ObservableFile {
    pub fn from_observable(obs: &Observable) -> Self {
        Self {
            dim: obs.dim(),
            effects: obs.effects().iter().map(matrix_to_json).collect(),
            labels: Some(obs.labels().to_vec()),
            tolerance: None,
        }
    }

    pub fn effect_matrices(&self) -> Result<Vec<CMatrix>> {
        self.effects
            .iter()
            .enumerate()
            .map(|(i, m)| matrix_from_json(m, self.dim, self.dim, &format!("effects[{i}]")))
            .collect()
    }

    pub fn to_observable(&self, tol: &ToleranceConfig) -> Result<Observable> {
        Observable::validate(self.effect_matrices()?, self.dim, self.labels.clone(), tol)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilyFile {
    pub dim: usize,
    /// Each member is a list of basis vectors.
    pub members: Vec<Vec<Vec<[f64; 2]>>>,
}

impl FamilyFile {
    pub fn from_family(f: &SubspaceFamily) -> Self {
        let members = f
            .members()
            .iter()
            .map(|m| m.column_iter().map(|col| col.iter().map(|z| [z.re, z.im]).collect()).collect())
            .collect();
        Self { dim: f.ambient_dim(), members }
    }

    pub fn to_family(&self, tol: &ToleranceConfig) -> Result<SubspaceFamily> {
        let mut bases = Vec::with_capacity(self.members.len());
        for (i, vectors) in self.members.iter().enumerate() {
            if vectors.is_empty() {
                return Err(PovmError::InvalidInput(format!("members[{i}] has no vectors")));
            }
            for (k, v) in vectors.iter().enumerate() {
                if v.len() != self.dim {
                    return Err(PovmError::ShapeMismatch(format!(
                        "members[{i}][{k}] has length {}, expected {}",
                        v.len(),
                        self.dim
                    )));
                }
            }
            bases.push(CMatrix::from_fn(self.dim, vectors.len(), |r, k| c(vectors[k][r][0], vectors[k][r][1])));
        }
        SubspaceFamily::from_bases(self.dim, bases, tol)
    }
}

/// A bare matrix, e.g. a Gram matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixFile {
    pub rows: usize,
    pub cols: usize,
    pub matrix: JsonMatrix,
}

impl MatrixFile {
    pub fn from_matrix(m: &CMatrix) -> Self {
        Self { rows: m.nrows(), cols: m.ncols(), matrix: matrix_to_json(m) }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        matrix_from_json(&self.matrix, self.rows, self.cols, "matrix")
    }
}

pub fn matrix_to_json(m: &CMatrix) -> JsonMatrix {
    m.row_iter().map(|r| r.iter().map(|z| [z.re, z.im]).collect()).collect()
}

/// Checks the shape and reports the first offending coordinate.
pub fn matrix_from_json(rows: &JsonMatrix, nrows: usize, ncols: usize, context: &str) -> Result<CMatrix> {
    if rows.len() != nrows {
        return Err(PovmError::ShapeMismatch(format!("{context} has {} rows, expected {nrows}", rows.len())));
    }
    for (r, row) in rows.iter().enumerate() {
        if row.len() != ncols {
            return Err(PovmError::ShapeMismatch(format!(
                "{context}[{r}] has {} entries, expected {ncols}",
                row.len()
            )));
        }
        for (k, z) in row.iter().enumerate() {
            if !z[0].is_finite() || !z[1].is_finite() {
                return Err(PovmError::InvalidInput(format!("{context}[{r}][{k}] is not finite")));
            }
        }
    }
    Ok(CMatrix::from_fn(nrows, ncols, |r, k| c(rows[r][k][0], rows[r][k][1])))
}

fn parse<T: for<'de> Deserialize<'de>>(text: &str, what: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| PovmError::InvalidInput(format!("{what}: {e}")))
}

pub fn parse_observable_file(text: &str) -> Result<ObservableFile> {
    parse(text, "observable file")
}

pub fn parse_family_file(text: &str) -> Result<FamilyFile> {
    parse(text, "subspace family file")
}

pub fn parse_matrix_file(text: &str) -> Result<MatrixFile> {
    parse(text, "matrix file")
}

pub fn observable_to_string(obs: &Observable) -> String {
    serde_json::to_string_pretty(&ObservableFile::from_observable(obs)).expect("plain data serializes")
}

/// Parses and validates with file tolerances layered over `base`.
pub fn observable_from_str(text: &str, base: &ToleranceConfig) -> Result<Observable> {
    let file = parse_observable_file(text)?;
    let tol = file.tolerance.unwrap_or_default().apply(base);
    tol.validate()?;
    file.to_observable(&tol)
}
