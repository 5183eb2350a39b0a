use serde::Serialize;

use super::{IngestError, Result};

/// A UK financial year such as `2010/11` (April 2010 to March 2011).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FiscalYear {
    pub start: i32,
}

impl FiscalYear {
    pub fn parse(label: &str) -> Option<Self> {
        let (a, b) = label.trim().split_once('/')?;
        if a.len() != 4 || b.len() != 2 {
            return None;
        }
        let start: i32 = a.parse().ok()?;
        let end: i32 = b.parse().ok()?;
        ((start + 1).rem_euclid(100) == end).then_some(FiscalYear { start })
    }

    pub fn label(self) -> String {
        format!("{}/{:02}", self.start, (self.start + 1).rem_euclid(100))
    }
}

#[derive(Debug, Clone)]
pub struct PeriodConfig {
    pub fiscal_years: Vec<String>,
    /// Calendar year = fiscal start year + offset. An offset of one lets
    /// spending take effect about nine months later.
    pub offset: i32,
}

impl Default for PeriodConfig {
    fn default() -> Self {
        PeriodConfig { fiscal_years: vec!["2010/11".into(), "2011/12".into(), "2012/13".into()], offset: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Period {
    /// 1-based snapshot index.
    pub t: usize,
    pub fiscal_year: String,
    pub calendar_year: i32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PeriodMap {
    periods: Vec<Period>,
}

impl PeriodMap {
    pub fn periods(&self) -> &[Period] {
        &self.periods
    }

    pub fn len(&self) -> usize {
        self.periods.len()
    }

    pub fn is_empty(&self) -> bool {
        self.periods.is_empty()
    }

    pub fn calendar_year(&self, fiscal_year: &str) -> Option<i32> {
        self.periods.iter().find(|p| p.fiscal_year == fiscal_year).map(|p| p.calendar_year)
    }

    pub fn calendar_years(&self) -> Vec<i32> {
        self.periods.iter().map(|p| p.calendar_year).collect()
    }
}

pub fn align_periods(config: &PeriodConfig) -> Result<PeriodMap> {
    let mut years = config
        .fiscal_years
        .iter()
        .map(|l| FiscalYear::parse(l).ok_or_else(|| IngestError::BadFiscalYear(l.clone())))
        .collect::<Result<Vec<_>>>()?;
    years.sort();
    years.dedup();
    if years.windows(2).any(|w| w[1].start != w[0].start + 1) {
        let labels: Vec<String> = years.iter().map(|y| y.label()).collect();
        return Err(IngestError::NonContiguousPeriods(labels.join(", ")));
    }
    let periods = years
        .iter()
        .enumerate()
        .map(|(i, fy)| Period { t: i + 1, fiscal_year: fy.label(), calendar_year: fy.start + config.offset })
        .collect();
    Ok(PeriodMap { periods })
}
