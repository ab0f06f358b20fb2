use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;

use super::config::RunConfig;
use super::protocol::evaluate;
use crate::error::{Error, Result};
use crate::skeleton::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Lambda1,
    Lambda2,
    Lambda3,
    Epsilon,
    Atoms,
    CodeLen,
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lambda1" | "λ1" | "λ₁" => Ok(SweepParam::Lambda1),
            "lambda2" | "λ2" | "λ₂" => Ok(SweepParam::Lambda2),
            "lambda3" | "λ3" | "λ₃" => Ok(SweepParam::Lambda3),
            "epsilon" | "ε" | "ϵ" => Ok(SweepParam::Epsilon),
            "atoms" | "d" => Ok(SweepParam::Atoms),
            "code_len" | "code-len" | "L" => Ok(SweepParam::CodeLen),
            other => Err(Error::Config(format!(
                "cannot sweep `{other}` (expected lambda1, lambda2, lambda3, epsilon, atoms or code_len)"
            ))),
        }
    }
}

impl SweepParam {
    pub fn key(self) -> &'static str {
        match self {
            SweepParam::Lambda1 => "lambda1",
            SweepParam::Lambda2 => "lambda2",
            SweepParam::Lambda3 => "lambda3",
            SweepParam::Epsilon => "epsilon",
            SweepParam::Atoms => "atoms",
            SweepParam::CodeLen => "code_len",
        }
    }

    fn is_integer(self) -> bool {
        matches!(self, SweepParam::Epsilon | SweepParam::Atoms | SweepParam::CodeLen)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub accuracy: f64,
    pub mean_fold_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub parameter: String,
    pub protocol: String,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn to_text(&self) -> String {
        let mut s = format!("# protocol: {}\n{}\taccuracy\n", self.protocol, self.parameter);
        for r in &self.rows {
            let _ = writeln!(s, "{}\t{:.4}", r.value, r.accuracy);
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serializes")
    }
}

/// Evaluates `config` once per value of `param`, all under the same seed.
pub fn sweep(ds: &Dataset, config: &RunConfig, param: SweepParam, values: &[f64]) -> Result<SweepTable> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    let mut rows = Vec::with_capacity(values.len());
    for &value in values {
        let mut c = config.clone();
        let text = if param.is_integer() {
            if value < 0.0 || value.fract() != 0.0 {
                return Err(Error::Config(format!("`{}` takes whole numbers, got {value}", param.key())));
            }
            format!("{}", value as u64)
        } else {
            value.to_string()
        };
        c.set(param.key(), &text)?;
        let report = evaluate(ds, &c)?;
        rows.push(SweepRow {
            value,
            accuracy: report.accuracy,
            mean_fold_accuracy: report.mean_fold_accuracy,
        });
    }
    Ok(SweepTable {
        parameter: param.key().to_string(),
        protocol: config.protocol.name().to_string(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names() {
        assert_eq!("λ3".parse::<SweepParam>().unwrap(), SweepParam::Lambda3);
        assert_eq!("d".parse::<SweepParam>().unwrap(), SweepParam::Atoms);
        let err = "tau".parse::<SweepParam>().unwrap_err();
        assert_eq!(err.exit_code(), 1);
    }
}
