//! Daily precipitation ingestion and preprocessing: thinning, season
//! extraction and dry-day thresholding, applied in that order.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::{Datelike, NaiveDate};
use ziegpd_core::Sample;

use crate::error::{Error, Result};

pub const DEFAULT_MISSING: f64 = -999.0;
pub const DEFAULT_CUTOFF: f64 = 0.1;
pub const WINTER_MONTHS: [u32; 4] = [11, 12, 1, 2];

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Station {
    pub name: String,
    pub latitude: Option<f64>,
    pub longitude: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Record {
    pub date: NaiveDate,
    /// mm/day
    pub precip: f64,
}

/// Daily records in strictly increasing date order.
#[derive(Debug, Clone, PartialEq)]
pub struct DailySeries {
    pub station: Station,
    records: Vec<Record>,
}

impl DailySeries {
    pub fn new(station: Station, records: Vec<Record>) -> Result<Self> {
        if let Some(w) = records.windows(2).find(|w| w[1].date <= w[0].date) {
            return Err(Error::Config(format!(
                "dates must be strictly increasing ({} follows {})",
                w[1].date, w[0].date
            )));
        }
        if let Some(r) = records.iter().find(|r| !(r.precip >= 0.0 && r.precip.is_finite())) {
            return Err(Error::Config(format!(
                "precipitation on {} must be finite and >= 0",
                r.date
            )));
        }
        Ok(Self { station, records })
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    fn with_records(&self, records: Vec<Record>) -> Self {
        Self {
            station: self.station.clone(),
            records,
        }
    }

    /// Keeps records at `offset, offset + step, offset + 2 step, ...`.
    pub fn thin(&self, step: usize, offset: usize) -> Result<Self> {
        if step == 0 {
            return Err(Error::Config("thinning step must be >= 1".into()));
        }
        let kept = self.records.iter().skip(offset).step_by(step).copied().collect();
        Ok(self.with_records(kept))
    }

    /// Keeps indices 0, 3, 6, ...
    pub fn thin_every_third(&self) -> Self {
        self.thin(3, 0).expect("step is positive")
    }

    pub fn filter_months(&self, months: &[u32]) -> Result<Self> {
        if months.is_empty() {
            return Err(Error::Config("month set must be nonempty".into()));
        }
        if let Some(m) = months.iter().find(|m| !(1..=12).contains(*m)) {
            return Err(Error::Config(format!("month {m} is not in 1..=12")));
        }
        let kept = self
            .records
            .iter()
            .filter(|r| months.contains(&r.date.month()))
            .copied()
            .collect();
        Ok(self.with_records(kept))
    }

    /// Values strictly below `cutoff` become exactly zero.
    pub fn zero_threshold(&self, cutoff: f64) -> Result<Sample> {
        if !(cutoff >= 0.0 && cutoff.is_finite()) {
            return Err(Error::Config("cutoff must be finite and >= 0".into()));
        }
        let values = self
            .records
            .iter()
            .map(|r| if r.precip < cutoff { 0.0 } else { r.precip })
            .collect();
        Ok(Sample::new(values)?)
    }
}

/// Preprocessing settings; `apply` runs thin, then month filter, then
/// threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct Preprocess {
    pub thin_step: usize,
    pub thin_offset: usize,
    pub months: Vec<u32>,
    pub cutoff: f64,
}

impl Default for Preprocess {
    fn default() -> Self {
        Self {
            thin_step: 3,
            thin_offset: 0,
            months: WINTER_MONTHS.to_vec(),
            cutoff: DEFAULT_CUTOFF,
        }
    }
}

impl Preprocess {
    pub fn apply(&self, series: &DailySeries) -> Result<Sample> {
        series
            .thin(self.thin_step, self.thin_offset)?
            .filter_months(&self.months)?
            .zero_threshold(self.cutoff)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvSchema {
    /// Date column, ISO-8601 (`2015-01-31`) or `YYYYMMDD`.
    pub date_column: String,
    pub precip_column: String,
    pub delimiter: u8,
    pub missing: f64,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            date_column: "date".into(),
            precip_column: "precip".into(),
            delimiter: b',',
            missing: DEFAULT_MISSING,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LoadReport {
    /// Data rows read, missing ones included.
    pub rows: usize,
    /// Rows dropped as missing (sentinel or empty field).
    pub dropped: usize,
}

fn parse_date(s: &str) -> Option<NaiveDate> {
    let s = s.trim();
    if s.len() == 8 && s.bytes().all(|b| b.is_ascii_digit()) {
        return NaiveDate::parse_from_str(s, "%Y%m%d").ok();
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d").ok()
}

/// `Location: Latitude  34.0151   Longitude 71.5249`
fn parse_location(line: &str) -> Option<(f64, f64)> {
    let rest = line.split_once("Latitude")?.1;
    let (lat, lon) = rest.split_once("Longitude")?;
    let lon = lon.split_whitespace().next()?;
    Some((lat.trim().parse().ok()?, lon.parse().ok()?))
}

enum DateSource {
    Single(usize),
    Split { year: usize, month: usize, day: usize },
}

fn find_column(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers.iter().position(|h| h.trim().eq_ignore_ascii_case(name))
}

/// Parses delimiter-separated daily data. A NASA POWER header block
/// (`-BEGIN HEADER-` .. `-END HEADER-`) is skipped and its location line
/// read. When the schema's default column names are absent, the POWER
/// layout (`YEAR,MO,DY` and `PRECTOTCORR`) is recognized.
pub fn parse_daily_csv(text: &str, schema: &CsvSchema, path: &Path) -> Result<(DailySeries, LoadReport)> {
    let parse_err = |line: u64, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };

    let mut station = Station {
        name: path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default(),
        ..Default::default()
    };
    let mut body = text;
    let mut offset = 0u64;
    if text.trim_start().starts_with("-BEGIN HEADER-") {
        let mut consumed = 0;
        let mut found = false;
        for line in text.split_inclusive('\n') {
            consumed += line.len();
            offset += 1;
            if let Some((lat, lon)) = parse_location(line) {
                station.latitude = Some(lat);
                station.longitude = Some(lon);
            }
            if line.trim() == "-END HEADER-" {
                found = true;
                break;
            }
        }
        if !found {
            return Err(parse_err(1, "header block is not terminated".into()));
        }
        body = &text[consumed..];
    }

    let mut reader = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter)
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(body.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| parse_err(offset + 1, e.to_string()))?
        .clone();
    if headers.is_empty() || headers.iter().all(|h| h.is_empty()) {
        return Err(Error::Empty {
            path: path.to_path_buf(),
        });
    }
    let defaults = CsvSchema::default();
    let date_source = match find_column(&headers, &schema.date_column) {
        Some(i) => DateSource::Single(i),
        None if schema.date_column == defaults.date_column => {
            match (
                find_column(&headers, "YEAR"),
                find_column(&headers, "MO"),
                find_column(&headers, "DY"),
            ) {
                (Some(year), Some(month), Some(day)) => DateSource::Split { year, month, day },
                _ => {
                    return Err(parse_err(
                        offset + 1,
                        format!("no date column {:?}", schema.date_column),
                    ))
                }
            }
        }
        None => {
            return Err(parse_err(
                offset + 1,
                format!("no date column {:?}", schema.date_column),
            ))
        }
    };
    let precip_col = find_column(&headers, &schema.precip_column)
        .or_else(|| {
            (schema.precip_column == defaults.precip_column)
                .then(|| find_column(&headers, "PRECTOTCORR"))
                .flatten()
        })
        .ok_or_else(|| {
            parse_err(
                offset + 1,
                format!("no precipitation column {:?}", schema.precip_column),
            )
        })?;

    let mut records = Vec::new();
    let mut report = LoadReport::default();
    let mut last: Option<NaiveDate> = None;
    for row in reader.records() {
        let row = row.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_err(offset + line, e.to_string())
        })?;
        let line = offset + row.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize| row.get(i).unwrap_or("");
        let date = match date_source {
            DateSource::Single(i) => parse_date(field(i)),
            DateSource::Split { year, month, day } => {
                match (field(year).parse(), field(month).parse(), field(day).parse()) {
                    (Ok(y), Ok(m), Ok(d)) => NaiveDate::from_ymd_opt(y, m, d),
                    _ => None,
                }
            }
        }
        .ok_or_else(|| parse_err(line, "unparseable date".into()))?;
        if let Some(prev) = last {
            if date <= prev {
                return Err(parse_err(
                    line,
                    format!("date {date} is not after the previous date {prev}"),
                ));
            }
        }
        last = Some(date);
        report.rows += 1;

        let raw = field(precip_col);
        if raw.is_empty() {
            report.dropped += 1;
            continue;
        }
        let precip: f64 = raw
            .parse()
            .map_err(|_| parse_err(line, format!("unparseable precipitation {raw:?}")))?;
        if precip == schema.missing {
            report.dropped += 1;
            continue;
        }
        if !(precip >= 0.0 && precip.is_finite()) {
            return Err(parse_err(line, format!("negative or non-finite precipitation {raw}")));
        }
        records.push(Record { date, precip });
    }
    if report.rows == 0 {
        return Err(Error::Empty {
            path: path.to_path_buf(),
        });
    }
    Ok((DailySeries::new(station, records)?, report))
}

pub fn load_daily_csv(path: &Path, schema: &CsvSchema) -> Result<(DailySeries, LoadReport)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(PathBuf::from(path), e))?;
    parse_daily_csv(&text, schema, path)
}
