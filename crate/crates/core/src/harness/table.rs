use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::Result;

/// Header of the CSV form, in column order.
pub const CSV_HEADER: [&str; 9] = [
    "point",
    "method",
    "mean_rmse",
    "median_rmse",
    "success_rate",
    "mean_iterations",
    "mean_wall_time_s",
    "root_crb",
    "failures",
];

/// Aggregates over the trials of one (sweep point, method) pair. Cells with no
/// successful trial behind them are `None` (empty in CSV, `null` in JSON).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub point: f64,
    pub method: String,
    pub mean_rmse: Option<f64>,
    pub median_rmse: Option<f64>,
    pub success_rate: f64,
    pub mean_iterations: f64,
    pub mean_wall_time_s: f64,
    pub root_crb: Option<f64>,
    /// Trials that produced no estimate.
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub experiment: String,
    /// Name of the swept quantity, which `point` holds.
    pub axis: String,
    /// `deg` for direction-of-arrival presets, `cycles` otherwise.
    pub rmse_unit: String,
    pub trials: usize,
    pub rows: Vec<ResultRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = crate::StrumerError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(crate::StrumerError::InvalidInput(format!("unknown format {other:?} (csv, json)"))),
        }
    }
}

impl ResultTable {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        w.write_record(CSV_HEADER).map_err(csv_error)?;
        for r in &self.rows {
            w.serialize(r).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn emit<W: Write>(&self, format: Format, mut out: W) -> Result<()> {
        match format {
            Format::Csv => self.write_csv(out),
            Format::Json => {
                out.write_all(self.to_json()?.as_bytes())?;
                out.write_all(b"\n")?;
                Ok(())
            }
        }
    }
}

fn csv_error(e: csv::Error) -> crate::StrumerError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => io.into(),
        other => crate::StrumerError::InvalidInput(format!("csv: {other:?}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(point: f64, rmse: Option<f64>) -> ResultRow {
        ResultRow {
            point,
            method: "strumer".into(),
            mean_rmse: rmse,
            median_rmse: rmse,
            success_rate: 0.5,
            mean_iterations: 812.5,
            mean_wall_time_s: 0.25,
            root_crb: Some(1.5e-4),
            failures: 1,
        }
    }

    fn table(rows: Vec<ResultRow>) -> ResultTable {
        ResultTable { experiment: "t".into(), axis: "snr_db".into(), rmse_unit: "cycles".into(), trials: 2, rows }
    }

    #[test]
    fn empty_table_is_header_only() {
        let csv = table(Vec::new()).to_csv().unwrap();
        assert_eq!(csv, format!("{}\n", CSV_HEADER.join(",")));
    }

    #[test]
    fn csv_has_fixed_columns() {
        let csv = table(vec![row(10.0, Some(2e-4)), row(15.0, None)]).to_csv().unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines.iter().all(|l| l.split(',').count() == CSV_HEADER.len()));
        assert_eq!(lines[1], "10.0,strumer,0.0002,0.0002,0.5,812.5,0.25,0.00015,1");
        assert_eq!(lines[2], "15.0,strumer,,,0.5,812.5,0.25,0.00015,1");
    }

    #[test]
    fn json_round_trip() {
        let t = table(vec![row(0.1 + 0.2, Some(1.0 / 3.0)), row(5.0, None)]);
        assert_eq!(ResultTable::from_json(&t.to_json().unwrap()).unwrap(), t);
    }
}
