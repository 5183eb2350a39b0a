//! Input files: parsing with row-level rejection, ward assignment, expenditure
//! apportionment and fiscal/calendar period alignment.

mod assign;
mod expenditure;
mod imd;
mod periods;
pub mod time;
mod transitions;
mod venues;
mod wards;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

pub use assign::{assign_venues_to_wards, assign_venues_to_wards_with, VenueWardIndex};
pub use expenditure::{
    apportion_expenditure, parse_expenditure, write_expenditure_csv, ExpenditureCategory, ExpenditureRecord,
    ExpenditureTable, WardAmount, WardExpenditure, EXPENDITURE_HEADER,
};
pub use imd::{parse_imd, write_imd_csv, DeprivationRecord, Edition, ImdTable, IMD_HEADER};
pub use periods::{align_periods, FiscalYear, Period, PeriodConfig, PeriodMap};
pub use transitions::{parse_transitions, write_transitions_csv, Transition, TransitionLog, TRANSITIONS_HEADER};
pub use venues::{parse_venues, write_venues_csv, Venue, VenueIdx, VenueTable, VENUES_HEADER};
pub use wards::{parse_wards, ward_centroid_distance, write_wards_geojson, Ward, WardDistance, WardIdx, WardSet};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: malformed header: expected `{expected}`, found `{found}`")]
    Header { path: PathBuf, expected: String, found: String },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("borough {0} has expenditure records but no wards")]
    BoroughWithoutWards(String),
    #[error("ward {ward} belongs to borough {borough}, which has no expenditure records")]
    MissingBoroughExpenditure { ward: String, borough: String },
    #[error("bad fiscal year label `{0}`")]
    BadFiscalYear(String),
    #[error("fiscal years are not contiguous: {0}")]
    NonContiguousPeriods(String),
    #[error("IMD {edition} ranks are not a permutation of 1..={count}")]
    RankPermutation { edition: u16, count: usize },
}

pub type Result<T, E = IngestError> = std::result::Result<T, E>;

/// One dropped input row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RejectedRow {
    /// 1-based data row number (header excluded).
    pub row: u64,
    pub reason: String,
}

/// Every input row is either kept or recorded here with its reason.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Rejections {
    pub rows: Vec<RejectedRow>,
}

impl Rejections {
    pub fn push(&mut self, row: u64, reason: impl Into<String>) {
        self.rows.push(RejectedRow { row, reason: reason.into() });
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn by_reason(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        for r in &self.rows {
            *out.entry(r.reason.clone()).or_insert(0) += 1;
        }
        out
    }
}

pub(crate) fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| IngestError::Io { path: path.to_path_buf(), source })
}

/// CSV reader whose header must equal `expected` exactly (after trimming).
pub(crate) fn csv_reader<R: Read>(reader: R, path: &Path, expected: &str) -> Result<csv::Reader<R>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(reader);
    let found = match rdr.headers() {
        Ok(h) => h.iter().map(str::trim).collect::<Vec<_>>().join(","),
        Err(e) => {
            return Err(IngestError::Format { path: path.to_path_buf(), message: e.to_string() });
        }
    };
    let found = found.trim_start_matches('\u{feff}').to_string();
    if found != expected {
        return Err(IngestError::Header { path: path.to_path_buf(), expected: expected.to_string(), found });
    }
    Ok(rdr)
}
