//! JSON encoding of complex matrices and vectors as explicit `[re, im]` pairs.

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector};
use crate::states::{NamedState, PureState, QuantumState};

pub type Pair = [f64; 2];

pub fn matrix_to_rows(m: &CMatrix) -> Vec<Vec<Pair>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

/// Rebuilds a matrix from rows of pairs; `field` names the JSON field in
/// error messages.
pub fn rows_to_matrix(rows: &[Vec<Pair>], field: &str) -> Result<CMatrix> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != ncols {
            return Err(Error::Argument(format!(
                "field `{field}`: row {i} has {} entries, expected {ncols}",
                row.len()
            )));
        }
        for (j, p) in row.iter().enumerate() {
            if !p[0].is_finite() || !p[1].is_finite() {
                return Err(Error::Argument(format!("field `{field}`: entry [{i}][{j}] is not finite")));
            }
        }
    }
    Ok(CMatrix::from_fn(nrows, ncols, |i, j| Complex64::new(rows[i][j][0], rows[i][j][1])))
}

pub fn vector_to_pairs(v: &CVector) -> Vec<Pair> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

pub fn pairs_to_vector(pairs: &[Pair], field: &str) -> Result<CVector> {
    for (i, p) in pairs.iter().enumerate() {
        if !p[0].is_finite() || !p[1].is_finite() {
            return Err(Error::Argument(format!("field `{field}`: entry [{i}] is not finite")));
        }
    }
    Ok(CVector::from_iterator(
        pairs.len(),
        pairs.iter().map(|p| Complex64::new(p[0], p[1])),
    ))
}

/// On-disk state: `matrix` for mixed states, `vector` for pure ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateFile {
    Mixed {
        labels: Vec<String>,
        dims: Vec<usize>,
        matrix: Vec<Vec<Pair>>,
    },
    Pure {
        labels: Vec<String>,
        dims: Vec<usize>,
        vector: Vec<Pair>,
    },
}

impl StateFile {
    pub fn from_mixed(s: &QuantumState) -> Self {
        StateFile::Mixed {
            labels: s.labels().to_vec(),
            dims: s.dims().to_vec(),
            matrix: matrix_to_rows(s.matrix()),
        }
    }

    pub fn from_pure(s: &PureState) -> Self {
        StateFile::Pure {
            labels: s.labels().to_vec(),
            dims: s.dims().to_vec(),
            vector: vector_to_pairs(s.vector()),
        }
    }

    pub fn from_named(s: &NamedState) -> Self {
        match s {
            NamedState::Pure(p) => Self::from_pure(p),
            NamedState::Mixed(m) => Self::from_mixed(m),
        }
    }

    /// Validates against the state invariants.
    pub fn to_named(&self) -> Result<NamedState> {
        match self {
            StateFile::Mixed { labels, dims, matrix } => Ok(NamedState::Mixed(QuantumState::new(
                rows_to_matrix(matrix, "matrix")?,
                dims.clone(),
                labels.clone(),
            )?)),
            StateFile::Pure { labels, dims, vector } => Ok(NamedState::Pure(PureState::new(
                pairs_to_vector(vector, "vector")?,
                dims.clone(),
                labels.clone(),
            )?)),
        }
    }

    pub fn to_mixed(&self) -> Result<QuantumState> {
        Ok(self.to_named()?.into_mixed())
    }

    /// Parses JSON text, naming the offending field and index on failure.
    pub fn parse(text: &str) -> Result<Self> {
        let v: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Argument(format!("invalid JSON: {e}")))?;
        let obj = v
            .as_object()
            .ok_or_else(|| Error::Argument("state file must be a JSON object".into()))?;
        let labels = match obj.get("labels") {
            Some(serde_json::Value::Array(items)) => items
                .iter()
                .enumerate()
                .map(|(i, x)| {
                    x.as_str()
                        .map(str::to_string)
                        .ok_or_else(|| Error::Argument(format!("field `labels`: entry [{i}] is not a string")))
                })
                .collect::<Result<Vec<_>>>()?,
            _ => return Err(Error::Argument("field `labels`: missing or not an array".into())),
        };
        let dims = match obj.get("dims") {
            Some(serde_json::Value::Array(items)) => items
                .iter()
                .enumerate()
                .map(|(i, x)| {
                    x.as_u64()
                        .map(|d| d as usize)
                        .ok_or_else(|| Error::Argument(format!("field `dims`: entry [{i}] is not a nonnegative integer")))
                })
                .collect::<Result<Vec<_>>>()?,
            _ => return Err(Error::Argument("field `dims`: missing or not an array".into())),
        };
        let pair = |x: &serde_json::Value, at: String| -> Result<Pair> {
            match x.as_array().map(Vec::as_slice) {
                Some([re, im]) => match (re.as_f64(), im.as_f64()) {
                    (Some(re), Some(im)) => Ok([re, im]),
                    _ => Err(Error::Argument(format!("{at}: components must be numbers"))),
                },
                _ => Err(Error::Argument(format!("{at}: expected an [re, im] pair"))),
            }
        };
        match (obj.get("matrix"), obj.get("vector")) {
            (Some(m), None) => {
                let rows = m
                    .as_array()
                    .ok_or_else(|| Error::Argument("field `matrix`: not an array".into()))?;
                let mut out = Vec::with_capacity(rows.len());
                for (i, row) in rows.iter().enumerate() {
                    let row = row
                        .as_array()
                        .ok_or_else(|| Error::Argument(format!("field `matrix`: row {i} is not an array")))?;
                    out.push(
                        row.iter()
                            .enumerate()
                            .map(|(j, x)| pair(x, format!("field `matrix`: entry [{i}][{j}]")))
                            .collect::<Result<Vec<_>>>()?,
                    );
                }
                Ok(StateFile::Mixed { labels, dims, matrix: out })
            }
            (None, Some(v)) => {
                let items = v
                    .as_array()
                    .ok_or_else(|| Error::Argument("field `vector`: not an array".into()))?;
                let vector = items
                    .iter()
                    .enumerate()
                    .map(|(i, x)| pair(x, format!("field `vector`: entry [{i}]")))
                    .collect::<Result<Vec<_>>>()?;
                Ok(StateFile::Pure { labels, dims, vector })
            }
            (Some(_), Some(_)) => Err(Error::Argument("state file has both `matrix` and `vector`".into())),
            (None, None) => Err(Error::Argument("state file needs a `matrix` or a `vector` field".into())),
        }
    }
}

/// `#[serde(with = "crate::codec::matrix")]`
pub mod matrix {
    use super::*;

    pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
        matrix_to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CMatrix, D::Error> {
        let rows = Vec::<Vec<Pair>>::deserialize(d)?;
        rows_to_matrix(&rows, "matrix").map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn state_file_round_trip() {
        let s = crate::states::random_state(vec![2, 3], ["A", "B"], 2, 7).unwrap();
        let text = serde_json::to_string(&StateFile::from_mixed(&s)).unwrap();
        let back = StateFile::parse(&text).unwrap().to_mixed().unwrap();
        assert!(crate::linalg::max_abs_diff(back.matrix(), s.matrix()) < 1e-12);
        assert_eq!(back.labels(), s.labels());
    }

    #[test]
    fn parse_errors_name_field_and_index() {
        let bad = r#"{"labels":["A"],"dims":[2],"matrix":[[[1,0],[0,0]],[[0,0],"x"]]}"#;
        let err = StateFile::parse(bad).unwrap_err().to_string();
        assert!(err.contains("matrix") && err.contains("[1][1]"), "{err}");
        let err = StateFile::parse(r#"{"labels":["A"],"dims":[-2],"vector":[]}"#).unwrap_err().to_string();
        assert!(err.contains("dims") && err.contains("[0]"), "{err}");
    }

    #[test]
    fn ragged_rows_name_the_row() {
        let rows = vec![vec![[1.0, 0.0], [0.0, 0.0]], vec![[0.0, 0.0]]];
        let err = rows_to_matrix(&rows, "matrix").unwrap_err().to_string();
        assert!(err.contains("row 1"), "{err}");
    }
}
