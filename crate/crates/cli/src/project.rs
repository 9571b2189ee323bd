//! One-shot projection of a vector read from a file.

use std::fs;
use std::io::Read;
use std::path::Path;

use sparseness::{project_l0, project_nonneg, project_unrestricted, sigma, SparseTarget};

use crate::error::{CliError, Result};
use crate::table::{num, Table};

#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Sigma(f64),
    Norms { lambda1: f64, lambda2: f64 },
    L0(usize),
}

/// Parses numbers separated by commas, whitespace or newlines. Lines starting
/// with `#` are ignored.
pub fn parse_vector(text: &str) -> Result<Vec<f64>> {
    text.lines()
        .filter(|l| !l.trim_start().starts_with('#'))
        .flat_map(|l| l.split(|c: char| c == ',' || c.is_whitespace()))
        .filter(|tok| !tok.is_empty())
        .map(|tok| {
            tok.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::Vector(format!("{tok:?} is not a finite number")))
        })
        .collect()
}

/// Reads a vector from `path`, or from stdin when `path` is `-`.
pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let text = if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| CliError::io("<stdin>", e))?;
        s
    } else {
        fs::read_to_string(path).map_err(|e| CliError::io(path, e))?
    };
    parse_vector(&text)
}

pub fn project(x: &[f64], target: &Target, nonneg: bool) -> Result<Table> {
    let mut table = Table::new(&["index", "value"]);
    let point = match *target {
        Target::L0(k) => {
            table.meta("projection", format!("l0 kappa={k}"));
            project_l0(x, k)?
        }
        Target::Sigma(_) | Target::Norms { .. } => {
            let t = match *target {
                Target::Sigma(s) => SparseTarget::from_sigma(x.len(), s)?,
                Target::Norms { lambda1, lambda2 } => SparseTarget::new(x.len(), lambda1, lambda2)?,
                Target::L0(_) => unreachable!(),
            };
            let out = if nonneg {
                project_nonneg(x, &t)?
            } else {
                project_unrestricted(x, &t)?
            };
            table
                .meta("projection", if nonneg { "non-negative" } else { "unrestricted" })
                .meta("lambda1", t.lambda1())
                .meta("lambda2", t.lambda2())
                .meta("iterations", out.iterations())
                .meta("unique", out.unique)
                .meta("differentiable", out.trace.is_differentiable());
            out.point
        }
    };
    if let Ok(s) = sigma(&point) {
        table.meta("sigma", s);
    }
    for (i, v) in point.iter().enumerate() {
        table.push(vec![i.to_string(), num(*v)]);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parsing() {
        assert_eq!(parse_vector("1, 2\n# c\n3 4.5\n").unwrap(), vec![1.0, 2.0, 3.0, 4.5]);
        assert!(parse_vector("1, x").is_err());
        assert!(parse_vector("nan").is_err());
    }

    #[test]
    fn l0_output() {
        let t = project(&[3.0, -1.0, 2.0], &Target::L0(2), false).unwrap();
        assert_eq!(t.rows[1], vec!["1".to_string(), "0".to_string()]);
        assert_eq!(t.rows[2][1], "2");
    }
}
