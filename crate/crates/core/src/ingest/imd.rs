use std::collections::{HashMap, HashSet};
use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;

use super::{csv_reader, open, IngestError, Rejections, Result};

pub const IMD_HEADER: &str = "ward_code,edition,score,rank";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Edition {
    Imd2010,
    Imd2015,
}

impl Edition {
    pub fn year(self) -> u16 {
        match self {
            Edition::Imd2010 => 2010,
            Edition::Imd2015 => 2015,
        }
    }

    fn from_year(y: u16) -> Option<Self> {
        match y {
            2010 => Some(Edition::Imd2010),
            2015 => Some(Edition::Imd2015),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeprivationRecord {
    pub ward_code: String,
    pub edition: Edition,
    pub score: f64,
    /// 1 = most deprived.
    pub rank: u32,
}

#[derive(Debug, Clone, Default)]
pub struct ImdTable {
    pub records: Vec<DeprivationRecord>,
    pub rejections: Rejections,
    pub input_rows: u64,
}

impl ImdTable {
    /// Validates records; ranks within each edition must be a permutation of
    /// `1..=N`.
    pub fn from_records(records: impl IntoIterator<Item = DeprivationRecord>) -> Result<Self> {
        let mut t = ImdTable::default();
        let mut seen = HashSet::new();
        for r in records {
            t.input_rows += 1;
            t.insert(t.input_rows, r, &mut seen);
        }
        t.check_ranks()?;
        Ok(t)
    }

    fn insert(&mut self, row: u64, r: DeprivationRecord, seen: &mut HashSet<(String, Edition)>) {
        if !r.score.is_finite() {
            self.rejections.push(row, "bad score");
        } else if r.rank == 0 {
            self.rejections.push(row, "rank not positive");
        } else if !seen.insert((r.ward_code.clone(), r.edition)) {
            self.rejections.push(row, "duplicate ward/edition");
        } else {
            self.records.push(r);
        }
    }

    fn check_ranks(&self) -> Result<()> {
        for edition in [Edition::Imd2010, Edition::Imd2015] {
            let mut ranks: Vec<u32> = self.records.iter().filter(|r| r.edition == edition).map(|r| r.rank).collect();
            ranks.sort_unstable();
            if ranks.iter().enumerate().any(|(i, &r)| r as usize != i + 1) {
                return Err(IngestError::RankPermutation { edition: edition.year(), count: ranks.len() });
            }
        }
        Ok(())
    }

    pub fn from_reader<R: Read>(reader: R, path: &Path) -> Result<Self> {
        let mut rdr = csv_reader(reader, path, IMD_HEADER)?;
        let mut t = ImdTable::default();
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
            let Some(edition) = rec[1].trim().parse().ok().and_then(Edition::from_year) else {
                t.rejections.push(row, "unknown edition");
                continue;
            };
            let (Ok(score), Ok(rank)) = (rec[2].trim().parse::<f64>(), rec[3].trim().parse::<u32>()) else {
                t.rejections.push(row, "bad score or rank");
                continue;
            };
            let r = DeprivationRecord { ward_code: rec[0].trim().to_string(), edition, score, rank };
            t.insert(row, r, &mut seen);
        }
        t.check_ranks()?;
        Ok(t)
    }

    /// `ward_code → (score, rank)` for one edition.
    pub fn edition(&self, edition: Edition) -> HashMap<&str, (f64, u32)> {
        self.records
            .iter()
            .filter(|r| r.edition == edition)
            .map(|r| (r.ward_code.as_str(), (r.score, r.rank)))
            .collect()
    }
}

pub fn parse_imd(path: &Path) -> Result<ImdTable> {
    let f = open(path)?;
    ImdTable::from_reader(std::io::BufReader::new(f), path)
}

pub fn write_imd_csv<W: Write>(out: W, records: &[DeprivationRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(IMD_HEADER.split(','))?;
    for r in records {
        w.write_record([r.ward_code.as_str(), &r.edition.year().to_string(), &r.score.to_string(), &r.rank.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_indexes_editions() {
        let text = "ward_code,edition,score,rank\nA,2010,30.5,1\nB,2010,10,2\nA,2015,20,2\nB,2015,25,1\nC,2012,1,1\n";
        let t = ImdTable::from_reader(text.as_bytes(), Path::new("imd")).unwrap();
        assert_eq!(t.records.len(), 4);
        assert_eq!(t.rejections.by_reason()["unknown edition"], 1);
        assert_eq!(t.edition(Edition::Imd2015)["A"], (20.0, 2));
    }

    #[test]
    fn ranks_must_be_permutation() {
        let text = "ward_code,edition,score,rank\nA,2010,30.5,1\nB,2010,10,3\n";
        assert!(matches!(
            ImdTable::from_reader(text.as_bytes(), Path::new("imd")),
            Err(IngestError::RankPermutation { edition: 2010, count: 2 })
        ));
    }
}
