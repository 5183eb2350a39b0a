use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use super::wards::{WardIdx, WardSet};
use super::{csv_reader, open, IngestError, Rejections, Result};

pub const EXPENDITURE_HEADER: &str = "borough_code,fiscal_year,category,amount";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpenditureCategory {
    CultureHeritage,
    RecreationSport,
    OpenSpaces,
    Tourism,
    LibraryService,
    TotalServices,
}

impl ExpenditureCategory {
    pub const ALL: [ExpenditureCategory; 6] = [
        Self::CultureHeritage,
        Self::RecreationSport,
        Self::OpenSpaces,
        Self::Tourism,
        Self::LibraryService,
        Self::TotalServices,
    ];

    /// The five sub-areas of cultural and related services.
    pub const CULTURAL: [ExpenditureCategory; 5] =
        [Self::CultureHeritage, Self::RecreationSport, Self::OpenSpaces, Self::Tourism, Self::LibraryService];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::CultureHeritage => "culture_heritage",
            Self::RecreationSport => "recreation_sport",
            Self::OpenSpaces => "open_spaces",
            Self::Tourism => "tourism",
            Self::LibraryService => "library_service",
            Self::TotalServices => "total_services",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for ExpenditureCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExpenditureCategory {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        Self::ALL.into_iter().find(|c| c.as_str() == s).ok_or(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpenditureRecord {
    pub borough_code: String,
    pub fiscal_year: String,
    pub category: ExpenditureCategory,
    pub amount: f64,
}

#[derive(Debug, Clone, Default)]
pub struct ExpenditureTable {
    pub records: Vec<ExpenditureRecord>,
    pub rejections: Rejections,
    pub input_rows: u64,
}

impl ExpenditureTable {
    pub fn from_records(records: impl IntoIterator<Item = ExpenditureRecord>) -> Self {
        let mut t = ExpenditureTable::default();
        let mut seen = HashSet::new();
        for r in records {
            t.input_rows += 1;
            t.insert(t.input_rows, r, &mut seen);
        }
        t
    }

    fn insert(&mut self, row: u64, r: ExpenditureRecord, seen: &mut HashSet<(String, String, ExpenditureCategory)>) {
        if !(r.amount >= 0.0) || !r.amount.is_finite() {
            self.rejections.push(row, "negative or non-finite amount");
        } else if r.borough_code.is_empty() {
            self.rejections.push(row, "empty borough_code");
        } else if !seen.insert((r.borough_code.clone(), r.fiscal_year.clone(), r.category)) {
            self.rejections.push(row, "duplicate record");
        } else {
            self.records.push(r);
        }
    }

    pub fn from_reader<R: Read>(reader: R, path: &Path) -> Result<Self> {
        let mut rdr = csv_reader(reader, path, EXPENDITURE_HEADER)?;
        let mut t = ExpenditureTable::default();
        let mut seen = HashSet::new();
        for rec in rdr.records() {
            t.input_rows += 1;
            let row = t.input_rows;
            let rec = match rec {
                Ok(r) => r,
                Err(e) if e.is_io_error() => {
                    return Err(IngestError::Format { path: path.to_path_buf(), message: e.to_string() })
                }
                Err(_) => {
                    t.rejections.push(row, "unreadable row");
                    continue;
                }
            };
            if rec.len() != 4 {
                t.rejections.push(row, "wrong field count");
                continue;
            }
            let Ok(category) = rec[2].trim().parse() else {
                t.rejections.push(row, "unknown category");
                continue;
            };
            let Ok(amount) = rec[3].trim().parse::<f64>() else {
                t.rejections.push(row, "bad amount");
                continue;
            };
            let fiscal_year = rec[1].trim().to_string();
            if super::periods::FiscalYear::parse(&fiscal_year).is_none() {
                t.rejections.push(row, "bad fiscal_year");
                continue;
            }
            let r = ExpenditureRecord { borough_code: rec[0].trim().to_string(), fiscal_year, category, amount };
            t.insert(row, r, &mut seen);
        }
        Ok(t)
    }

    /// Distinct fiscal-year labels, sorted.
    pub fn fiscal_years(&self) -> Vec<String> {
        let mut v: Vec<String> = self.records.iter().map(|r| r.fiscal_year.clone()).collect();
        v.sort();
        v.dedup();
        v
    }
}

pub fn parse_expenditure(path: &Path) -> Result<ExpenditureTable> {
    let f = open(path)?;
    ExpenditureTable::from_reader(std::io::BufReader::new(f), path)
}

pub fn write_expenditure_csv<W: Write>(out: W, records: &[ExpenditureRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(EXPENDITURE_HEADER.split(','))?;
    for r in records {
        w.write_record([r.borough_code.as_str(), &r.fiscal_year, r.category.as_str(), &r.amount.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WardAmount {
    pub amount: f64,
    /// Borough amount over borough population; absent when any ward of the
    /// borough lacks a population.
    pub per_capita: Option<f64>,
}

/// Borough spending split evenly across each borough's wards.
#[derive(Debug, Clone)]
pub struct WardExpenditure {
    fiscal_years: Vec<String>,
    // [fiscal year][category][ward]
    table: Vec<[Vec<Option<WardAmount>>; 6]>,
}

impl WardExpenditure {
    pub fn fiscal_years(&self) -> &[String] {
        &self.fiscal_years
    }

    pub fn get(&self, ward: WardIdx, fiscal_year: &str, category: ExpenditureCategory) -> Option<WardAmount> {
        let fy = self.fiscal_years.iter().position(|f| f == fiscal_year)?;
        self.table[fy][category.index()].get(ward.get()).copied().flatten()
    }

    /// Sum of the five cultural sub-areas; absent if any is missing.
    pub fn cultural(&self, ward: WardIdx, fiscal_year: &str) -> Option<f64> {
        ExpenditureCategory::CULTURAL.iter().map(|&c| self.get(ward, fiscal_year, c).map(|a| a.amount)).sum()
    }

    pub fn total(&self, ward: WardIdx, fiscal_year: &str) -> Option<f64> {
        self.get(ward, fiscal_year, ExpenditureCategory::TotalServices).map(|a| a.amount)
    }
}

pub fn apportion_expenditure(records: &ExpenditureTable, wards: &WardSet) -> Result<WardExpenditure> {
    let mut by_borough: BTreeMap<&str, Vec<WardIdx>> = BTreeMap::new();
    for (i, w) in wards.iter() {
        by_borough.entry(w.borough_code.as_str()).or_default().push(i);
    }
    let with_records: HashSet<&str> = records.records.iter().map(|r| r.borough_code.as_str()).collect();
    for r in &records.records {
        if !by_borough.contains_key(r.borough_code.as_str()) {
            return Err(IngestError::BoroughWithoutWards(r.borough_code.clone()));
        }
    }
    for (_, w) in wards.iter() {
        if !with_records.contains(w.borough_code.as_str()) {
            return Err(IngestError::MissingBoroughExpenditure {
                ward: w.ward_code.clone(),
                borough: w.borough_code.clone(),
            });
        }
    }
    let population: HashMap<&str, Option<u64>> = by_borough
        .iter()
        .map(|(&b, ws)| (b, ws.iter().map(|&w| wards.get(w).population).sum::<Option<u64>>()))
        .collect();

    let fiscal_years = records.fiscal_years();
    let empty = || std::array::from_fn(|_| vec![None; wards.len()]);
    let mut table: Vec<[Vec<Option<WardAmount>>; 6]> = (0..fiscal_years.len()).map(|_| empty()).collect();
    for r in &records.records {
        let fy = fiscal_years.binary_search(&r.fiscal_year).expect("fiscal year collected above");
        let members = &by_borough[r.borough_code.as_str()];
        let share = r.amount / members.len() as f64;
        let per_capita = population[r.borough_code.as_str()].map(|p| r.amount / p as f64);
        for &w in members {
            table[fy][r.category.index()][w.get()] = Some(WardAmount { amount: share, per_capita });
        }
    }
    Ok(WardExpenditure { fiscal_years, table })
}
