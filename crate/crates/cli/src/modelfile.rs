//! Matrix-file models: a JSON file listing density matrices on a lattice of
//! parameter values; derivatives are then taken by finite differences on
//! that lattice, so the file must contain every probe point the stencils
//! touch (see the README for the layout).

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64 as C64;
use qbhatt::fock::{CMatrix, DensityOperator, FockOperator};
use qbhatt::model::{ComplexModel, RealModel};
use qbhatt::Error;
use serde::Deserialize;

#[derive(Debug, Deserialize)]
pub struct ModelFile {
    /// `"real"` or `"complex"`.
    pub kind: String,
    pub dim: usize,
    /// Finite-difference step of the sample lattice.
    pub step: f64,
    pub samples: Vec<Sample>,
}

#[derive(Debug, Deserialize)]
pub struct Sample {
    /// `[re, im]`.
    pub param: [f64; 2],
    /// Row-major, `dim × dim` entries as `[re, im]` pairs.
    pub matrix: Vec<Vec<[f64; 2]>>,
}

const LOOKUP_TOL: f64 = 1e-9;

pub struct LoadedModel {
    pub kind: ModelKind,
    pub step: f64,
}

pub enum ModelKind {
    Real(RealModel),
    Complex(ComplexModel),
}

fn to_density(dim: usize, sample: &Sample, tol: f64) -> Result<DensityOperator, Error> {
    if sample.matrix.len() != dim || sample.matrix.iter().any(|row| row.len() != dim) {
        return Err(Error::DimensionMismatch {
            left: dim,
            right: sample.matrix.len(),
        });
    }
    let mat = CMatrix::from_fn(dim, dim, |r, c| {
        let [re, im] = sample.matrix[r][c];
        C64::new(re, im)
    });
    DensityOperator::new(FockOperator::from_matrix(dim, mat)?, tol)
}

pub fn load(path: &Path, tol: f64) -> Result<LoadedModel, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("cannot read model file {}: {e}", path.display())))?;
    let file: ModelFile = serde_json::from_str(&text)
        .map_err(|e| Error::Parse(format!("bad model file {}: {e}", path.display())))?;
    if file.dim < 2 {
        return Err(Error::InvalidDimension {
            dim: file.dim,
            reason: "model file needs dim >= 2",
        });
    }
    if !(file.step > 0.0) {
        return Err(Error::Parse("model file step must be positive".into()));
    }
    let dim = file.dim;
    let step = file.step;
    // Key the lookup table on rounded lattice coordinates.
    let quantize = move |v: f64| (v / LOOKUP_TOL).round() as i64;
    let mut table: BTreeMap<(i64, i64), DensityOperator> = BTreeMap::new();
    let mut staging: Vec<((i64, i64), &Sample)> = Vec::new();
    for s in &file.samples {
        staging.push(((quantize(s.param[0]), quantize(s.param[1])), s));
    }
    for (key, s) in staging {
        table.insert(key, to_density(dim, s, tol)?);
    }
    let kind = match file.kind.as_str() {
        "real" => {
            let lookup = move |theta: f64| {
                table
                    .get(&(quantize(theta), 0))
                    .cloned()
                    .ok_or_else(|| Error::InconsistentInputs(format!(
                        "model file has no sample at parameter {theta}; the finite-difference \
                         lattice around each grid point must be present"
                    )))
            };
            ModelKind::Real(RealModel::new(lookup))
        }
        "complex" => {
            let lookup = move |zeta: C64| {
                table
                    .get(&(quantize(zeta.re), quantize(zeta.im)))
                    .cloned()
                    .ok_or_else(|| Error::InconsistentInputs(format!(
                        "model file has no sample at parameter {zeta}; the finite-difference \
                         lattice around each grid point must be present"
                    )))
            };
            ModelKind::Complex(ComplexModel::new(lookup))
        }
        other => {
            return Err(Error::Parse(format!(
                "model file kind must be \"real\" or \"complex\", got {other:?}"
            )));
        }
    };
    Ok(LoadedModel { kind, step })
}
