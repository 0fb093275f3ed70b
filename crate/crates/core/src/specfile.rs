//! Operator spec files: the on-disk description of an operator field.
//!
//! Spec files are TOML with exactly these fields (unknown fields are
//! rejected, catching typos in parameter names):
//!
//! ```toml
//! dim = 3
//! vars = ["x", "y", "z"]
//! matrix = [
//!   ["-x + c", "2*y", "1/c"],
//!   ["-y/2", "-c", "0"],
//!   ["-z", "0", "0"],
//! ]
//! excluded = []            # optional: expressions whose zero sets are avoided
//!
//! [params]                 # optional
//! c = 1.0
//!
//! [domain]                 # optional; defaults to the cube [-0.5, 0.5]^dim
//! min = [-0.4, -0.4, -0.4]
//! max = [0.4, 0.4, 0.4]
//! ```
//!
//! Matrix entries and excluded expressions use the grammar documented in
//! [`crate::expr`].

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::expr::{parse_expr, Expr, ParamEnv, ParseError};
use crate::nijenhuis::{FieldError, OperatorField};
use crate::sample::SampleBox;

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("cannot read spec file: {0}")]
    Io(#[from] std::io::Error),
    #[error("spec file is not valid TOML: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("matrix entry ({row},{col}): {source}")]
    Entry {
        row: usize,
        col: usize,
        #[source]
        source: ParseError,
    },
    #[error("excluded expression {index}: {source}")]
    Excluded {
        index: usize,
        #[source]
        source: ParseError,
    },
    #[error("invalid spec: {0}")]
    Validation(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSpecFile {
    pub dim: usize,
    pub vars: Vec<String>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    pub matrix: Vec<Vec<String>>,
    #[serde(default)]
    pub domain: Option<DomainSpec>,
    #[serde(default)]
    pub excluded: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl OperatorSpecFile {
    /// Parse the TOML text of a spec file.
    pub fn parse(text: &str) -> Result<Self, SpecError> {
        Ok(toml::from_str(text)?)
    }

    /// Validate and build the operator field.
    pub fn build(&self) -> Result<OperatorField, SpecError> {
        if self.dim == 0 {
            return Err(SpecError::Validation("dim must be at least 1".into()));
        }
        if self.dim > 6 {
            return Err(SpecError::Validation(
                "sampling supports dim <= 6".into(),
            ));
        }
        if self.vars.len() != self.dim {
            return Err(SpecError::Validation(format!(
                "expected {} variable names, got {}",
                self.dim,
                self.vars.len()
            )));
        }
        for (i, v) in self.vars.iter().enumerate() {
            if self.vars[..i].contains(v) {
                return Err(SpecError::Validation(format!(
                    "duplicate variable name `{v}`"
                )));
            }
            if self.params.contains_key(v) {
                return Err(SpecError::Validation(format!(
                    "`{v}` is declared both as a variable and a parameter"
                )));
            }
        }
        if self.matrix.len() != self.dim
            || self.matrix.iter().any(|row| row.len() != self.dim)
        {
            return Err(SpecError::Validation(format!(
                "matrix must be {0} x {0}",
                self.dim
            )));
        }
        let param_names: Vec<String> = self.params.keys().cloned().collect();
        let mut entries = Vec::with_capacity(self.dim * self.dim);
        for (i, row) in self.matrix.iter().enumerate() {
            for (j, text) in row.iter().enumerate() {
                let e = parse_expr(text, &self.vars, &param_names)
                    .map_err(|source| SpecError::Entry { row: i, col: j, source })?;
                entries.push(e);
            }
        }
        let excluded: Vec<Expr> = self
            .excluded
            .iter()
            .enumerate()
            .map(|(index, text)| {
                parse_expr(text, &self.vars, &param_names)
                    .map_err(|source| SpecError::Excluded { index, source })
            })
            .collect::<Result<_, _>>()?;
        let domain = match &self.domain {
            None => SampleBox::cube(0.5, self.dim),
            Some(d) => {
                if d.min.len() != self.dim || d.max.len() != self.dim {
                    return Err(SpecError::Validation(
                        "domain bounds must have one entry per variable".into(),
                    ));
                }
                for (lo, hi) in d.min.iter().zip(&d.max) {
                    if lo >= hi {
                        return Err(SpecError::Validation(format!(
                            "degenerate domain: min {lo} is not below max {hi}"
                        )));
                    }
                }
                SampleBox::new(d.min.clone(), d.max.clone())
            }
        };
        let params: ParamEnv = self
            .params
            .iter()
            .map(|(k, v)| (k.clone(), *v))
            .collect();
        Ok(OperatorField::new(
            self.dim,
            self.vars.clone(),
            params,
            entries,
            domain,
            excluded,
        )?)
    }
}

/// Load and build an operator field from a spec file on disk, returning the
/// field together with the raw bytes (for input digests).
pub fn load_operator_spec(path: &Path) -> Result<(OperatorField, Vec<u8>), SpecError> {
    let bytes = std::fs::read(path)?;
    let text = String::from_utf8_lossy(&bytes);
    let spec = OperatorSpecFile::parse(&text)?;
    let field = spec.build()?;
    Ok((field, bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"
dim = 3
vars = ["x", "y", "z"]
matrix = [
  ["-x + c", "2*y", "1/c"],
  ["-y/2", "-c", "0"],
  ["-z", "0", "0"],
]

[params]
c = 1.0

[domain]
min = [-0.4, -0.4, -0.4]
max = [0.4, 0.4, 0.4]
"#;

    #[test]
    fn well_formed_spec_builds() {
        let spec = OperatorSpecFile::parse(GOOD).unwrap();
        let field = spec.build().unwrap();
        assert_eq!(field.dim(), 3);
        let m = field.values_at(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(m.at(0, 0), 1.0);
        assert_eq!(m.at(0, 2), 1.0);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = format!("{GOOD}\nbogus = 1\n");
        assert!(matches!(
            OperatorSpecFile::parse(&text),
            Err(SpecError::Toml(_))
        ));
    }

    #[test]
    fn entry_errors_carry_position() {
        let text = r#"
dim = 2
vars = ["x", "y"]
matrix = [["x", "x +"], ["0", "y"]]
"#;
        let spec = OperatorSpecFile::parse(text).unwrap();
        match spec.build() {
            Err(SpecError::Entry { row: 0, col: 1, .. }) => {}
            other => panic!("expected entry error, got {other:?}"),
        }
    }

    #[test]
    fn dimension_mismatches_are_rejected() {
        let text = r#"
dim = 3
vars = ["x", "y", "z"]
matrix = [["x", "y"], ["0", "z"]]
"#;
        let spec = OperatorSpecFile::parse(text).unwrap();
        assert!(matches!(spec.build(), Err(SpecError::Validation(_))));
    }

    #[test]
    fn default_domain_is_half_cube() {
        let text = r#"
dim = 2
vars = ["x", "y"]
matrix = [["x", "0"], ["0", "y"]]
"#;
        let field = OperatorSpecFile::parse(text).unwrap().build().unwrap();
        assert_eq!(field.domain().min(), &[-0.5, -0.5]);
        assert_eq!(field.domain().max(), &[0.5, 0.5]);
    }

    #[test]
    fn degenerate_domain_is_rejected() {
        let text = r#"
dim = 1
vars = ["x"]
matrix = [["x"]]

[domain]
min = [0.5]
max = [0.5]
"#;
        let spec = OperatorSpecFile::parse(text).unwrap();
        assert!(matches!(spec.build(), Err(SpecError::Validation(_))));
    }

    #[test]
    fn variable_parameter_collision_is_rejected() {
        let text = r#"
dim = 1
vars = ["x"]
matrix = [["x"]]

[params]
x = 1.0
"#;
        let spec = OperatorSpecFile::parse(text).unwrap();
        assert!(matches!(spec.build(), Err(SpecError::Validation(_))));
    }
}
