//! File ingestion and the applied regression analysis.

mod analysis;
mod climate;
mod diagnose;

pub use analysis::{
    fit_analysis, AnalysisOptions, AnalysisReport, CoefficientDiagnostics, CoefficientRow, PartitionReport, Provenance,
    RangeChoice, ScreenRow,
};
pub use climate::{
    climate_prepare, join_climate, normalize_monthly_series, read_climate_csv, season_of, write_climate_csv,
    write_monthly_csv, ClimateRow, MonthlyValue, Season, Unit,
};
pub use diagnose::{
    diagnose_series, ecdf, histogram, write_acf_csv, write_ecdf_csv, write_histogram_csv, DiagnoseReport, HistogramBin,
    ACF_SCHEMA_LINE, ECDF_SCHEMA_LINE, HISTOGRAM_SCHEMA_LINE,
};

use std::io::{Read, Write};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::simulation::format_sig;

/// First line of a model-frame CSV.
pub const FRAME_SCHEMA_LINE: &str = "# densum-frame schema=1";

/// Name given to the intercept column.
pub const INTERCEPT: &str = "(Intercept)";

/// Hex SHA-256 of a byte string.
pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// A CSV file with a header row, kept as text until a column is requested.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    rows: Vec<csv::StringRecord>,
}

impl Table {
    pub fn read<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(reader);
        let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if headers.is_empty() || headers.iter().all(String::is_empty) {
            return Err(Error::Parse("missing header row".into()));
        }
        let rows = rdr.records().collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(Self { headers, rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.headers.iter().position(|h| h == name).ok_or_else(|| {
            Error::InvalidArgument(format!("no column '{name}' (available: {})", self.headers.join(", ")))
        })
    }

    pub fn text_column(&self, name: &str) -> Result<Vec<&str>> {
        let j = self.column_index(name)?;
        Ok(self.rows.iter().map(|r| r.get(j).unwrap_or("")).collect())
    }

    pub fn numeric_column(&self, name: &str) -> Result<Vec<f64>> {
        let j = self.column_index(name)?;
        self.rows
            .iter()
            .map(|r| {
                let cell = r.get(j).unwrap_or("");
                let line = r.position().map(|p| p.line()).unwrap_or(0);
                match cell.parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(v),
                    _ => Err(Error::Parse(format!("line {line}: column '{name}' has non-numeric value '{cell}'"))),
                }
            })
            .collect()
    }
}

/// Response and named covariates of a linear model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFrame {
    pub response_name: String,
    pub response: Vec<f64>,
    pub covariate_names: Vec<String>,
    pub covariates: Vec<Vec<f64>>,
    pub intercept: bool,
}

impl ModelFrame {
    pub fn new(
        response_name: impl Into<String>,
        response: Vec<f64>,
        covariate_names: Vec<String>,
        covariates: Vec<Vec<f64>>,
        intercept: bool,
    ) -> Result<Self> {
        if covariate_names.len() != covariates.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} covariate names for {} columns",
                covariate_names.len(),
                covariates.len()
            )));
        }
        if let Some(c) = covariates.iter().position(|c| c.len() != response.len()) {
            return Err(Error::DimensionMismatch(format!(
                "covariate '{}' has {} rows, response has {}",
                covariate_names[c],
                covariates[c].len(),
                response.len()
            )));
        }
        if !intercept && covariates.is_empty() {
            return Err(Error::InvalidArgument("model has no columns".into()));
        }
        Ok(Self {
            response_name: response_name.into(),
            response,
            covariate_names,
            covariates,
            intercept,
        })
    }

    pub fn from_table(table: &Table, response: &str, covariates: &[String], intercept: bool) -> Result<Self> {
        let y = table.numeric_column(response)?;
        let cols = covariates.iter().map(|c| table.numeric_column(c)).collect::<Result<Vec<_>>>()?;
        Self::new(response, y, covariates.to_vec(), cols, intercept)
    }

    pub fn n(&self) -> usize {
        self.response.len()
    }

    /// Column names of the design, intercept first.
    pub fn column_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.covariates.len() + 1);
        if self.intercept {
            names.push(INTERCEPT.to_string());
        }
        names.extend(self.covariate_names.iter().cloned());
        names
    }

    pub fn design(&self) -> Matrix<f64> {
        let off = self.intercept as usize;
        Matrix::from_fn(self.n(), self.covariates.len() + off, |i, j| {
            if j < off {
                1.0
            } else {
                self.covariates[j - off][i]
            }
        })
    }

    /// Same frame without covariate `j`.
    pub fn without(&self, j: usize) -> Self {
        let mut out = self.clone();
        out.covariate_names.remove(j);
        out.covariates.remove(j);
        out
    }

    /// Response then covariates, one row per observation.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{FRAME_SCHEMA_LINE}")?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(std::iter::once(&self.response_name).chain(&self.covariate_names))?;
        for i in 0..self.n() {
            w.write_record(
                std::iter::once(self.response[i])
                    .chain(self.covariates.iter().map(|c| c[i]))
                    .map(format_sig),
            )?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn description(&self) -> String {
        let mut terms = self.column_names();
        if self.intercept {
            terms[0] = "1".into();
        }
        format!("{} ~ {}", self.response_name, terms.join(" + "))
    }
}
