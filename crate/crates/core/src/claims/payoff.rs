use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Terminal payoff `F` of a Markov claim `f = F(y(T))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PayoffSpec {
    /// `F(x) = x²`
    Square,
    /// `F(x) = cos x`
    Cosine,
    /// `F(x) = x`
    Linear,
    /// Piecewise-linear through `(xs[i], values[i])`, constant outside.
    Tabulated { xs: Vec<f64>, values: Vec<f64> },
}

impl PayoffSpec {
    pub fn tabulated(xs: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let spec = PayoffSpec::Tabulated { xs, values };
        spec.validate()?;
        Ok(spec)
    }

    /// Reads a two-column `x,F(x)` CSV with strictly increasing `x`. A
    /// non-numeric first row is treated as a header.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|source| Error::Csv {
                path: path.to_path_buf(),
                source,
            })?;
        let (mut xs, mut values) = (Vec::new(), Vec::new());
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|source| Error::Csv {
                path: path.to_path_buf(),
                source,
            })?;
            if rec.len() != 2 {
                return Err(Error::invalid(format!(
                    "{}: row {} has {} columns, expected 2",
                    path.display(),
                    i + 1,
                    rec.len()
                )));
            }
            match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
                (Ok(x), Ok(v)) => {
                    xs.push(x);
                    values.push(v);
                }
                _ if i == 0 => continue,
                _ => {
                    return Err(Error::invalid(format!(
                        "{}: row {} is not numeric",
                        path.display(),
                        i + 1
                    )))
                }
            }
        }
        Self::tabulated(xs, values)
    }

    pub fn validate(&self) -> Result<()> {
        if let PayoffSpec::Tabulated { xs, values } = self {
            if xs.len() < 2 || xs.len() != values.len() {
                return Err(Error::invalid("tabulated payoff needs at least two (x, F) pairs"));
            }
            if xs.iter().chain(values).any(|v| !v.is_finite()) {
                return Err(Error::invalid("tabulated payoff has non-finite entries"));
            }
            if xs.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::invalid("tabulated payoff abscissae must be strictly increasing"));
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            PayoffSpec::Square => x * x,
            PayoffSpec::Cosine => x.cos(),
            PayoffSpec::Linear => x,
            PayoffSpec::Tabulated { xs, values } => {
                if x <= xs[0] {
                    return values[0];
                }
                let last = xs.len() - 1;
                if x >= xs[last] {
                    return values[last];
                }
                let j = xs.partition_point(|&v| v <= x) - 1;
                let w = (x - xs[j]) / (xs[j + 1] - xs[j]);
                values[j] + w * (values[j + 1] - values[j])
            }
        }
    }

    pub fn has_closed_form(&self) -> bool {
        !matches!(self, PayoffSpec::Tabulated { .. })
    }
}
