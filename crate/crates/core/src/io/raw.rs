//! Cumulative case tables (one row per region per day) and their reduction
//! to daily `(Z_R, Z_I)` series.

use std::collections::HashMap;
use std::path::Path;
use std::str::FromStr;

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::epidemic::ObservedSeries;
use crate::error::{Error, Result};
use crate::mcmc::RegionData;

pub const COL_DATE: &str = "date";
pub const COL_REGION: &str = "region";
pub const COL_POSITIVE: &str = "cumulative_positive";
pub const COL_RECOVERED: &str = "cumulative_recovered";
pub const COL_DEATH: &str = "cumulative_death";
pub const COL_POPULATION: &str = "population";

/// Alternative header names accepted on input (the tracking-feed spelling).
const ALIASES: [(&str, &[&str]); 5] = [
    (COL_DATE, &[]),
    (COL_REGION, &["state"]),
    (COL_POSITIVE, &["positive"]),
    (COL_RECOVERED, &["recovered"]),
    (COL_DEATH, &["death"]),
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawCovidRow {
    pub date: NaiveDate,
    pub region: String,
    pub cumulative_positive: u64,
    pub cumulative_recovered: u64,
    pub cumulative_death: u64,
    pub population: u64,
}

/// Inclusive range of days.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateWindow {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateWindow {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<Self> {
        if end < start {
            return Err(Error::config("window", format!("end {end} precedes start {start}")));
        }
        Ok(Self { start, end })
    }

    /// `days` consecutive days from `start`.
    pub fn starting(start: NaiveDate, days: usize) -> Result<Self> {
        if days == 0 {
            return Err(Error::config("window", "empty window"));
        }
        let end = start
            .checked_add_days(Days::new(days as u64 - 1))
            .ok_or_else(|| Error::config("window", "end date out of range"))?;
        Ok(Self { start, end })
    }

    pub fn days(&self) -> usize {
        (self.end - self.start).num_days() as usize + 1
    }

    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        self.start.iter_days().take(self.days())
    }
}

impl FromStr for DateWindow {
    type Err = Error;

    /// `START,END` (ISO dates) or `START+DAYS`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |what: &str| Error::config("window", format!("{what} in `{s}`; expected START,END or START+DAYS"));
        if let Some((a, b)) = s.split_once(',') {
            Self::new(parse_date(a.trim()).ok_or_else(|| bad("bad start date"))?, parse_date(b.trim()).ok_or_else(|| bad("bad end date"))?)
        } else if let Some((a, d)) = s.split_once('+') {
            let days: usize = d.trim().parse().map_err(|_| bad("bad day count"))?;
            Self::starting(parse_date(a.trim()).ok_or_else(|| bad("bad start date"))?, days)
        } else {
            Err(bad("missing separator"))
        }
    }
}

impl std::fmt::Display for DateWindow {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{},{}", self.start, self.end)
    }
}

/// ISO `YYYY-MM-DD` or compact `YYYYMMDD`.
pub fn parse_date(s: &str) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .or_else(|_| NaiveDate::parse_from_str(s, "%Y%m%d"))
        .ok()
}

/// What to do when a cumulative column decreases.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MonotonePolicy {
    /// Replace the value by the running maximum (and warn).
    #[default]
    Clamp,
    /// Use values as reported (and warn).
    Keep,
}

impl FromStr for MonotonePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "clamp" => Ok(MonotonePolicy::Clamp),
            "keep" => Ok(MonotonePolicy::Keep),
            _ => Err(Error::config("monotone", format!("expected `clamp` or `keep`, got `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WarningKind {
    /// recovered + death exceeded positive; Z_I set to 0.
    NegativeInfectious { positive: u64, removed: u64 },
    /// A cumulative column went down.
    NonMonotone { column: String, previous: u64, value: u64 },
    /// No row for this day; the previous day was carried forward.
    FilledDay,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestWarning {
    pub region: String,
    pub date: NaiveDate,
    pub kind: WarningKind,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestOptions {
    /// Days to keep; the full span of the file when absent.
    pub window: Option<DateWindow>,
    /// Regions to keep, in this order; all regions in file order when absent.
    pub regions: Option<Vec<String>>,
    /// Region populations; override the table's population column.
    pub populations: HashMap<String, u64>,
    pub monotone: MonotonePolicy,
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub data: Vec<RegionData>,
    pub window: DateWindow,
    pub warnings: Vec<IngestWarning>,
}

/// Partially-known row as read from the file: blank cumulative cells are
/// carried forward from the region's previous row.
#[derive(Debug, Clone)]
struct ParsedRow {
    date: NaiveDate,
    positive: Option<u64>,
    recovered: Option<u64>,
    death: Option<u64>,
    population: Option<u64>,
}

fn header_index(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    let alts = ALIASES.iter().find(|(n, _)| *n == name).map(|(_, a)| *a).unwrap_or(&[]);
    headers
        .iter()
        .position(|h| h.trim() == name || alts.contains(&h.trim()))
}

fn parse_count(raw: &str, column: &str, line: u64) -> Result<Option<u64>> {
    let raw = raw.trim();
    if raw.is_empty() {
        return Ok(None);
    }
    // feeds sometimes print integers as floats ("12.0")
    let value = raw
        .parse::<u64>()
        .ok()
        .or_else(|| raw.parse::<f64>().ok().filter(|v| *v >= 0.0 && v.fract() == 0.0 && *v < 9.0e15).map(|v| v as u64));
    value
        .map(Some)
        .ok_or_else(|| Error::Data(format!("line {line}: `{column}` is not a nonnegative integer: `{raw}`")))
}

/// Reads a population side table with columns `region,population`.
pub fn read_populations(path: &Path) -> Result<HashMap<String, u64>> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let ri = header_index(&headers, COL_REGION)
        .ok_or_else(|| Error::Data(format!("{}: missing `{COL_REGION}` column", path.display())))?;
    let pi = header_index(&headers, COL_POPULATION)
        .ok_or_else(|| Error::Data(format!("{}: missing `{COL_POPULATION}` column", path.display())))?;
    let mut out = HashMap::new();
    for rec in reader.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let pop = parse_count(rec.get(pi).unwrap_or(""), COL_POPULATION, line)?
            .filter(|&p| p > 0)
            .ok_or_else(|| Error::Data(format!("line {line}: population must be a positive integer")))?;
        out.insert(rec.get(ri).unwrap_or("").trim().to_string(), pop);
    }
    Ok(out)
}

pub fn write_populations(path: &Path, pops: &[(String, u64)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([COL_REGION, COL_POPULATION])?;
    for (region, pop) in pops {
        w.write_record([region.as_str(), &pop.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a cumulative table and derives per-region daily series on a
/// complete day grid: `Z_R = recovered + death`, `Z_I = positive - Z_R`
/// (floored at zero). Days without a row repeat the previous day.
pub fn ingest(path: &Path, options: &IngestOptions) -> Result<Ingested> {
    let file = std::fs::File::open(path)?;
    ingest_reader(file, options)
}

pub fn ingest_reader<R: std::io::Read>(input: R, options: &IngestOptions) -> Result<Ingested> {
    let mut reader = csv::Reader::from_reader(input);
    let headers = reader.headers()?.clone();
    let col = |name: &str| header_index(&headers, name).ok_or_else(|| Error::Data(format!("missing `{name}` column")));
    let (di, ri, pi, rci, dti) = (col(COL_DATE)?, col(COL_REGION)?, col(COL_POSITIVE)?, col(COL_RECOVERED)?, col(COL_DEATH)?);
    let popi = header_index(&headers, COL_POPULATION);

    let mut order: Vec<String> = Vec::new();
    let mut rows: HashMap<String, Vec<ParsedRow>> = HashMap::new();
    for rec in reader.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |i: usize| rec.get(i).unwrap_or("");
        let date = parse_date(field(di).trim())
            .ok_or_else(|| Error::Data(format!("line {line}: bad `{COL_DATE}` `{}`", field(di))))?;
        let region = field(ri).trim().to_string();
        if region.is_empty() {
            return Err(Error::Data(format!("line {line}: empty `{COL_REGION}`")));
        }
        let row = ParsedRow {
            date,
            positive: parse_count(field(pi), COL_POSITIVE, line)?,
            recovered: parse_count(field(rci), COL_RECOVERED, line)?,
            death: parse_count(field(dti), COL_DEATH, line)?,
            population: match popi {
                Some(i) => parse_count(field(i), COL_POPULATION, line)?,
                None => None,
            },
        };
        if !rows.contains_key(&region) {
            order.push(region.clone());
        }
        rows.entry(region).or_default().push(row);
    }
    if order.is_empty() {
        return Err(Error::Data("no data rows".into()));
    }

    let selected = match &options.regions {
        Some(wanted) => {
            for r in wanted {
                if !rows.contains_key(r) {
                    return Err(Error::Data(format!("unknown region `{r}`")));
                }
            }
            wanted.clone()
        }
        None => order,
    };

    let window = match options.window {
        Some(w) => w,
        None => {
            let dates = selected.iter().flat_map(|r| rows[r].iter().map(|row| row.date));
            let (lo, hi) = dates.fold((NaiveDate::MAX, NaiveDate::MIN), |(lo, hi), d| (lo.min(d), hi.max(d)));
            DateWindow::new(lo, hi)?
        }
    };

    let mut warnings = Vec::new();
    let mut data = Vec::with_capacity(selected.len());
    for region in &selected {
        let mut region_rows = rows.remove(region).unwrap_or_default();
        region_rows.sort_by_key(|r| r.date);
        for pair in region_rows.windows(2) {
            if pair[0].date == pair[1].date {
                return Err(Error::Data(format!("region `{region}`: duplicate rows for {}", pair[0].date)));
            }
        }
        let population = options
            .populations
            .get(region)
            .copied()
            .or_else(|| region_rows.iter().rev().find_map(|r| r.population))
            .filter(|&p| p > 0)
            .ok_or_else(|| Error::Data(format!("population missing for region `{region}`")))?;
        let series = region_series(region, &region_rows, &window, population, options.monotone, &mut warnings)?;
        data.push(RegionData::new(region.clone(), series)?);
    }
    for w in &warnings {
        log::warn!("{}: {}: {:?}", w.region, w.date, w.kind);
    }
    Ok(Ingested { data, window, warnings })
}

fn region_series(
    region: &str,
    rows: &[ParsedRow],
    window: &DateWindow,
    population: u64,
    policy: MonotonePolicy,
    warnings: &mut Vec<IngestWarning>,
) -> Result<ObservedSeries> {
    let names = [COL_POSITIVE, COL_RECOVERED, COL_DEATH];
    // current cumulative values and running maxima, updated row by row
    let mut current: [Option<u64>; 3] = [None; 3];
    let mut running = [0u64; 3];
    let mut next = 0;
    let mut z_r = Vec::with_capacity(window.days());
    let mut z_i = Vec::with_capacity(window.days());
    for day in window.dates() {
        let mut seen_today = false;
        while next < rows.len() && rows[next].date <= day {
            let row = &rows[next];
            let in_window = row.date >= window.start;
            for (c, value) in [row.positive, row.recovered, row.death].into_iter().enumerate() {
                let Some(v) = value else { continue };
                let previous = current[c].unwrap_or(0);
                let kept = if v < running[c] {
                    if in_window {
                        warnings.push(IngestWarning {
                            region: region.to_string(),
                            date: row.date,
                            kind: WarningKind::NonMonotone { column: names[c].to_string(), previous, value: v },
                        });
                    }
                    match policy {
                        MonotonePolicy::Clamp => running[c],
                        MonotonePolicy::Keep => v,
                    }
                } else {
                    v
                };
                running[c] = running[c].max(v);
                current[c] = Some(kept);
            }
            seen_today |= row.date == day;
            next += 1;
        }
        if current[0].is_none() {
            return Err(Error::Data(format!("region `{region}`: no `{COL_POSITIVE}` on or before {day}")));
        }
        if !seen_today {
            warnings.push(IngestWarning { region: region.to_string(), date: day, kind: WarningKind::FilledDay });
        }
        let positive = current[0].unwrap_or(0);
        let removed = current[1].unwrap_or(0) + current[2].unwrap_or(0);
        if removed > positive {
            warnings.push(IngestWarning {
                region: region.to_string(),
                date: day,
                kind: WarningKind::NegativeInfectious { positive, removed },
            });
        }
        z_r.push(removed);
        z_i.push(positive.saturating_sub(removed));
    }
    if z_r.is_empty() {
        return Err(Error::Data(format!("region `{region}`: empty window")));
    }
    ObservedSeries::new(z_r, z_i, population).map_err(|e| Error::Data(format!("region `{region}`: {e}")))
}

/// Rows that ingest back to exactly `data`: positive = Z_R + Z_I,
/// recovered = Z_R, death = 0, one row per day from `start`.
pub fn rows_from_series(data: &[RegionData], start: NaiveDate) -> Vec<RawCovidRow> {
    let mut out = Vec::new();
    for region in data {
        let s = &region.series;
        for (t, date) in start.iter_days().take(s.len()).enumerate() {
            out.push(RawCovidRow {
                date,
                region: region.region_id.clone(),
                cumulative_positive: s.z_r[t] + s.z_i[t],
                cumulative_recovered: s.z_r[t],
                cumulative_death: 0,
                population: s.n,
            });
        }
    }
    out
}

pub fn write_rows(path: &Path, rows: &[RawCovidRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
