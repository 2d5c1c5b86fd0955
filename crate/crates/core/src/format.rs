//! JSON tableau format.
//!
//! ```json
//! {"name": "imex-mono2", "components": 2, "stages": [2, 2],
//!  "A": [[A00, A01], [A10, A11]], "b": [b0, b1], "metadata": {}}
//! ```
//!
//! Each block is a row-major nested array. Coefficients are written as
//! decimal strings (shortest representation that round-trips the `f64`).
//! On input, strings may also be fractions such as `"2/3"`, and bare JSON
//! numbers are accepted.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{GarkError, Result};
use crate::linalg::{Matrix, Vector};
use crate::tableau::{GarkTableau, Metadata};

#[derive(Serialize, Deserialize)]
struct TableauFile {
    name: String,
    components: usize,
    stages: Vec<usize>,
    #[serde(rename = "A")]
    a: Vec<Vec<Vec<Vec<Coefficient>>>>,
    b: Vec<Vec<Coefficient>>,
    #[serde(default)]
    metadata: Metadata,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Coefficient {
    Text(String),
    Number(f64),
}

impl Coefficient {
    fn value(&self) -> Result<f64> {
        match self {
            Coefficient::Number(x) => Ok(*x),
            Coefficient::Text(s) => parse_decimal(s),
        }
    }
}

/// Parses a decimal literal or a fraction `p/q`.
pub fn parse_decimal(s: &str) -> Result<f64> {
    let s = s.trim();
    let bad = || GarkError::Format(format!("invalid coefficient '{s}'"));
    let value = match s.split_once('/') {
        Some((num, den)) => {
            let num: f64 = num.trim().parse().map_err(|_| bad())?;
            let den: f64 = den.trim().parse().map_err(|_| bad())?;
            num / den
        }
        None => s.parse().map_err(|_| bad())?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(bad())
    }
}

fn text(x: f64) -> Coefficient {
    Coefficient::Text(format!("{x}"))
}

pub fn to_json(t: &GarkTableau) -> Result<String> {
    let n = t.n_components();
    let file = TableauFile {
        name: t.name().to_string(),
        components: n,
        stages: t.stage_counts().to_vec(),
        a: (0..n)
            .map(|q| {
                (0..n)
                    .map(|m| {
                        t.block(q, m)
                            .row_iter()
                            .map(|row| row.iter().map(|&x| text(x)).collect())
                            .collect()
                    })
                    .collect()
            })
            .collect(),
        b: (0..n)
            .map(|q| t.weights(q).iter().map(|&x| text(x)).collect())
            .collect(),
        metadata: t.metadata().clone(),
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

pub fn from_json(s: &str) -> Result<GarkTableau> {
    let file: TableauFile = serde_json::from_str(s)?;
    if file.components != file.stages.len()
        || file.a.len() != file.components
        || file.b.len() != file.components
    {
        return Err(GarkError::Format(format!(
            "'components' = {} disagrees with stages/A/b lengths ({}, {}, {})",
            file.components,
            file.stages.len(),
            file.a.len(),
            file.b.len()
        )));
    }
    let b = file
        .b
        .iter()
        .enumerate()
        .map(|(q, w)| {
            if w.len() != file.stages[q] {
                return Err(GarkError::Format(format!(
                    "b[{q}] has {} entries, stages[{q}] = {}",
                    w.len(),
                    file.stages[q]
                )));
            }
            let values = w.iter().map(Coefficient::value).collect::<Result<Vec<_>>>()?;
            Ok(Vector::from_vec(values))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut a = Vec::with_capacity(file.components);
    for (q, row) in file.a.iter().enumerate() {
        let mut blocks = Vec::with_capacity(row.len());
        for (m, rows) in row.iter().enumerate() {
            let cols = file.stages.get(m).copied().unwrap_or(0);
            if rows.len() != file.stages[q] || rows.iter().any(|r| r.len() != cols) {
                return Err(GarkError::Format(format!(
                    "A[{q}][{m}] must be {}x{cols}",
                    file.stages[q]
                )));
            }
            let values = rows
                .iter()
                .flatten()
                .map(Coefficient::value)
                .collect::<Result<Vec<_>>>()?;
            blocks.push(Matrix::from_row_slice(rows.len(), cols, &values));
        }
        a.push(blocks);
    }
    Ok(GarkTableau::new(file.name, a, b)?.with_metadata(file.metadata))
}

pub fn load(path: impl AsRef<Path>) -> Result<GarkTableau> {
    from_json(&std::fs::read_to_string(path)?)
}

pub fn save(t: &GarkTableau, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, to_json(t)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registry;
    use proptest::prelude::*;

    #[test]
    fn registry_tableaus_round_trip_bit_exactly() {
        for name in registry::names() {
            let t = registry::get(name).unwrap();
            let back = from_json(&to_json(&t).unwrap()).unwrap();
            assert_eq!(back, t, "{name}");
        }
    }

    #[test]
    fn accepts_fractions_and_numbers() {
        let s = r#"{"name": "heun", "components": 1, "stages": [2],
                    "A": [[[["0", 0], ["1", "0"]]]], "b": [["1/2", 0.5]]}"#;
        let t = from_json(s).unwrap();
        assert_eq!(t.weights(0).as_slice(), &[0.5, 0.5]);
        assert_eq!(
            t,
            registry::get("ssp-rk2")
                .unwrap()
                .with_name("heun")
                .with_metadata(Metadata::new())
        );
    }

    #[test]
    fn rejects_inconsistent_counts() {
        let s = r#"{"name": "x", "components": 2, "stages": [1],
                    "A": [[[["0"]]]], "b": [["1"]]}"#;
        assert!(matches!(from_json(s), Err(GarkError::Format(_))));
        let s = r#"{"name": "x", "components": 1, "stages": [1],
                    "A": [[[["0", "1"]]]], "b": [["1"]]}"#;
        assert!(matches!(from_json(s), Err(GarkError::Format(_))));
    }

    #[test]
    fn rejects_garbage_coefficient() {
        let s = r#"{"name": "x", "components": 1, "stages": [1],
                    "A": [[[["zero"]]]], "b": [["1"]]}"#;
        assert!(from_json(s).is_err());
        assert!(parse_decimal("1/0").is_err());
    }

    proptest! {
        #[test]
        fn decimal_text_round_trips(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            let Coefficient::Text(s) = text(x) else { unreachable!() };
            prop_assert_eq!(parse_decimal(&s).unwrap().to_bits(), x.to_bits());
        }
    }
}
