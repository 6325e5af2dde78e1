use std::io::Read;

use serde::{Deserialize, Serialize};

use super::{ModelFrame, Table};
use crate::error::{Error, Result};

/// One month of the climate series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClimateRow {
    pub year: i32,
    pub month: u32,
    /// Temperature anomaly, degrees C.
    pub temp: f64,
    /// CO2 concentration, ppm.
    pub co2: f64,
    pub index: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    Monthly,
    Yearly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Season {
    Winter,
    Spring,
    Summer,
    Fall,
}

/// December to February is winter, and so on by quarter.
pub fn season_of(month: u32) -> Season {
    match month {
        12 | 1 | 2 => Season::Winter,
        3..=5 => Season::Spring,
        6..=8 => Season::Summer,
        _ => Season::Fall,
    }
}

fn parse_date(s: &str, line: u64) -> Result<(i32, u32)> {
    let bad = || Error::Parse(format!("line {line}: date '{s}' is not YYYY-MM"));
    let mut parts = s.splitn(3, '-');
    let year = parts.next().and_then(|y| y.parse::<i32>().ok()).ok_or_else(bad)?;
    let month = parts.next().and_then(|m| m.parse::<u32>().ok()).ok_or_else(bad)?;
    if !(1..=12).contains(&month) {
        return Err(bad());
    }
    Ok((year, month))
}

/// Reads `date,temp,co2,index` rows (dates as `YYYY-MM`).
pub fn read_climate_csv<R: Read>(reader: R) -> Result<Vec<ClimateRow>> {
    let table = Table::read(reader)?;
    let dates = table.text_column("date")?;
    let temp = table.numeric_column("temp")?;
    let co2 = table.numeric_column("co2")?;
    let index = table.numeric_column("index")?;
    dates
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let (year, month) = parse_date(d, i as u64 + 2)?;
            Ok(ClimateRow {
                year,
                month,
                temp: temp[i],
                co2: co2[i],
                index: index[i],
            })
        })
        .collect()
}

/// A dated monthly value.
pub type MonthlyValue = ((i32, u32), f64);

fn year_month(field: &str) -> Option<(i32, u32)> {
    let (y, m) = match field.split_once('-') {
        Some((y, m)) => (y, m),
        None if field.len() == 6 && field.bytes().all(|b| b.is_ascii_digit()) => field.split_at(4),
        None => return None,
    };
    let y = y.parse::<i32>().ok()?;
    let m = m.parse::<u32>().ok()?;
    (y.to_string().len() == 4 && (1..=12).contains(&m)).then_some((y, m))
}

/// Reads a monthly series from a loosely formatted upstream text file.
///
/// Accepted data lines start with `YYYY-MM`, `YYYYMM`, or `YYYY,M`. Comment
/// (`#`) and title lines before the first data line are skipped; a header
/// naming `value_column` (case-insensitive) picks the value field, otherwise
/// the field after the date is used.
pub fn normalize_monthly_series(text: &str, value_column: &str) -> Result<Vec<MonthlyValue>> {
    let mut value_at: Option<usize> = None;
    let mut out: Vec<MonthlyValue> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let bad = |why: &str| Error::Parse(format!("line {line_no}: {why}: '{line}'"));
        let (date, next) = if let Some(d) = year_month(fields[0]) {
            (d, 1)
        } else if fields.len() > 1 && fields[0].len() == 4 {
            match (fields[0].parse::<i32>(), fields[1].parse::<u32>()) {
                (Ok(y), Ok(m)) if (1..=12).contains(&m) => ((y, m), 2),
                _ if out.is_empty() => {
                    value_at = fields.iter().position(|f| f.eq_ignore_ascii_case(value_column)).or(value_at);
                    continue;
                }
                _ => return Err(bad("expected a year and month")),
            }
        } else if out.is_empty() {
            value_at = fields.iter().position(|f| f.eq_ignore_ascii_case(value_column)).or(value_at);
            continue;
        } else {
            return Err(bad("expected a YYYY-MM or YYYYMM date"));
        };
        let j = value_at.unwrap_or(next);
        let v = fields
            .get(j)
            .and_then(|f| f.parse::<f64>().ok())
            .filter(|v| v.is_finite())
            .ok_or_else(|| bad(&format!("field {} is not a number", j + 1)))?;
        if let Some(&(prev, _)) = out.last() {
            if date <= prev {
                return Err(bad("dates are not increasing"));
            }
        }
        out.push((date, v));
    }
    if out.is_empty() {
        return Err(Error::Parse("no dated values found".into()));
    }
    Ok(out)
}

/// Writes `date,<name>` rows with `YYYY-MM` dates.
pub fn write_monthly_csv<W: std::io::Write>(out: W, name: &str, series: &[MonthlyValue]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["date", name])?;
    for &((y, m), v) in series {
        w.write_record([format!("{y:04}-{m:02}"), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Inner join of the three monthly series on date, in date order.
pub fn join_climate(temp: &[MonthlyValue], co2: &[MonthlyValue], index: &[MonthlyValue]) -> Result<Vec<ClimateRow>> {
    use std::collections::BTreeMap;
    let co2: BTreeMap<_, _> = co2.iter().copied().collect();
    let index: BTreeMap<_, _> = index.iter().copied().collect();
    let mut rows: Vec<ClimateRow> = temp
        .iter()
        .filter_map(|&(d, t)| {
            Some(ClimateRow {
                year: d.0,
                month: d.1,
                temp: t,
                co2: *co2.get(&d)?,
                index: *index.get(&d)?,
            })
        })
        .collect();
    rows.sort_by_key(month_number);
    rows.dedup_by_key(|r| month_number(r));
    if rows.is_empty() {
        return Err(Error::InsufficientData("the series share no months".into()));
    }
    Ok(rows)
}

/// Writes rows in the layout read by [`read_climate_csv`].
pub fn write_climate_csv<W: std::io::Write>(out: W, rows: &[ClimateRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["date", "temp", "co2", "index"])?;
    for r in rows {
        w.write_record([
            format!("{:04}-{:02}", r.year, r.month),
            r.temp.to_string(),
            r.co2.to_string(),
            r.index.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn month_number(r: &ClimateRow) -> i64 {
    r.year as i64 * 12 + r.month as i64 - 1
}

fn check_contiguous(rows: &[ClimateRow]) -> Result<()> {
    for pair in rows.windows(2) {
        if month_number(&pair[1]) != month_number(&pair[0]) + 1 {
            return Err(Error::InvalidArgument(format!(
                "climate rows are not contiguous: {}-{:02} is followed by {}-{:02}",
                pair[0].year, pair[0].month, pair[1].year, pair[1].month
            )));
        }
    }
    Ok(())
}

fn ln_positive(x: f64, what: &str) -> Result<f64> {
    if x > 0.0 {
        Ok(x.ln())
    } else {
        Err(Error::InvalidArgument(format!("{what} must be positive to take logs, got {x}")))
    }
}

/// Lagged model frame: `temp` on its own lag, lagged log CO2 and log index,
/// and (monthly only) spring, summer and fall indicators with winter as the
/// reference. The first period is consumed by the lag.
pub fn climate_prepare(rows: &[ClimateRow], unit: Unit) -> Result<ModelFrame> {
    check_contiguous(rows)?;
    let series: Vec<(f64, f64, f64, Option<Season>)> = match unit {
        Unit::Monthly => rows.iter().map(|r| (r.temp, r.co2, r.index, Some(season_of(r.month)))).collect(),
        Unit::Yearly => {
            let mut out: Vec<(i32, [f64; 3], usize)> = Vec::new();
            for r in rows {
                match out.last_mut() {
                    Some((y, sums, k)) if *y == r.year => {
                        sums[0] += r.temp;
                        sums[1] += r.co2;
                        sums[2] += r.index;
                        *k += 1;
                    }
                    _ => out.push((r.year, [r.temp, r.co2, r.index], 1)),
                }
            }
            out.into_iter()
                .map(|(_, s, k)| (s[0] / k as f64, s[1] / k as f64, s[2] / k as f64, None))
                .collect()
        }
    };
    if series.len() < 3 {
        return Err(Error::InsufficientData(format!("{} periods; need at least 3", series.len())));
    }
    let m = series.len() - 1;
    let mut y = Vec::with_capacity(m);
    let mut cols: Vec<Vec<f64>> = (0..3).map(|_| Vec::with_capacity(m)).collect();
    let mut seasons: Vec<Vec<f64>> = (0..3).map(|_| Vec::with_capacity(m)).collect();
    for t in 1..series.len() {
        let (temp, _, _, season) = series[t];
        let (temp_lag, co2_lag, index_lag, _) = series[t - 1];
        y.push(temp);
        cols[0].push(temp_lag);
        cols[1].push(ln_positive(co2_lag, "co2")?);
        cols[2].push(ln_positive(index_lag, "index")?);
        if let Some(s) = season {
            seasons[0].push((s == Season::Spring) as u8 as f64);
            seasons[1].push((s == Season::Summer) as u8 as f64);
            seasons[2].push((s == Season::Fall) as u8 as f64);
        }
    }
    let mut names: Vec<String> = ["temp_lag1", "log_co2_lag1", "log_index_lag1"].map(String::from).to_vec();
    if unit == Unit::Monthly {
        names.extend(["spring", "summer", "fall"].map(String::from));
        cols.extend(seasons);
    }
    ModelFrame::new("temp", y, names, cols, true)
}
