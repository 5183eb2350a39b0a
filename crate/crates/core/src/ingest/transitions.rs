use std::io::{BufWriter, Read, Write};
use std::path::Path;

use super::time::{format_timestamp, parse_timestamp};
use super::venues::{VenueIdx, VenueTable};
use super::{csv_reader, open, IngestError, Rejections, Result};

pub const TRANSITIONS_HEADER: &str = "origin_venue,dest_venue,t_origin,t_dest";

/// A successive pair of check-ins. Timestamps are Unix seconds, UTC.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transition {
    pub origin: VenueIdx,
    pub dest: VenueIdx,
    pub t_origin: i64,
    pub t_dest: i64,
}

#[derive(Debug, Clone, Default)]
pub struct TransitionLog {
    pub transitions: Vec<Transition>,
    pub rejections: Rejections,
    pub input_rows: u64,
}

impl TransitionLog {
    /// Validates already-resolved transitions (used by in-memory generators).
    pub fn from_transitions(all: impl IntoIterator<Item = Transition>, venues: &VenueTable) -> Self {
        let mut log = TransitionLog::default();
        for t in all {
            log.input_rows += 1;
            if t.origin.get() >= venues.len() || t.dest.get() >= venues.len() {
                log.rejections.push(log.input_rows, "unknown venue");
            } else if t.t_dest < t.t_origin {
                log.rejections.push(log.input_rows, "t_dest before t_origin");
            } else {
                log.transitions.push(t);
            }
        }
        log
    }

    pub fn from_reader<R: Read>(reader: R, path: &Path, venues: &VenueTable) -> Result<Self> {
        let mut rdr = csv_reader(reader, path, TRANSITIONS_HEADER)?;
        let mut log = TransitionLog::default();
        let mut record = csv::ByteRecord::new();
        loop {
            match rdr.read_byte_record(&mut record) {
                Ok(true) => {}
                Ok(false) => break,
                Err(e) => {
                    if e.is_io_error() {
                        return Err(IngestError::Format { path: path.to_path_buf(), message: e.to_string() });
                    }
                    log.input_rows += 1;
                    log.rejections.push(log.input_rows, "unreadable row");
                    continue;
                }
            }
            log.input_rows += 1;
            match parse_row(&record, venues) {
                Ok(t) => log.transitions.push(t),
                Err(reason) => log.rejections.push(log.input_rows, reason),
            }
        }
        Ok(log)
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }
}

fn field(b: &[u8]) -> std::result::Result<&str, &'static str> {
    std::str::from_utf8(b).map(str::trim).map_err(|_| "invalid utf-8")
}

fn parse_row(r: &csv::ByteRecord, venues: &VenueTable) -> std::result::Result<Transition, &'static str> {
    if r.len() != 4 {
        return Err("wrong field count");
    }
    let origin = venues.lookup(field(&r[0])?).ok_or("unknown venue")?;
    let dest = venues.lookup(field(&r[1])?).ok_or("unknown venue")?;
    let t_origin = parse_timestamp(field(&r[2])?).ok_or("bad t_origin")?;
    let t_dest = parse_timestamp(field(&r[3])?).ok_or("bad t_dest")?;
    if t_dest < t_origin {
        return Err("t_dest before t_origin");
    }
    Ok(Transition { origin, dest, t_origin, t_dest })
}

pub fn parse_transitions(path: &Path, venues: &VenueTable) -> Result<TransitionLog> {
    let f = open(path)?;
    TransitionLog::from_reader(std::io::BufReader::with_capacity(1 << 20, f), path, venues)
}

pub fn write_transitions_csv<W: Write>(out: W, transitions: &[Transition], venues: &VenueTable) -> std::io::Result<()> {
    // Plain formatting: ids and timestamps never need CSV quoting here.
    let mut w = BufWriter::with_capacity(1 << 20, out);
    writeln!(w, "{TRANSITIONS_HEADER}")?;
    for t in transitions {
        let (o, d) = (&venues.get(t.origin).id, &venues.get(t.dest).id);
        debug_assert!(!o.contains([',', '"', '\n']) && !d.contains([',', '"', '\n']));
        writeln!(w, "{o},{d},{},{}", format_timestamp(t.t_origin), format_timestamp(t.t_dest))?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::Venue;

    fn venues() -> VenueTable {
        VenueTable::from_venues(["a", "b"].map(|id| Venue {
            id: id.into(),
            lat: 51.0,
            lon: 0.0,
            category: "c".into(),
            parent_category: "p".into(),
            is_cultural: false,
            created_at: 0,
            user_count: 1,
        }))
    }

    #[test]
    fn unknown_venue_and_reversed_times_dropped() {
        let text = "origin_venue,dest_venue,t_origin,t_dest\n\
                    a,b,2011-01-01T10:00:00Z,2011-01-01T11:00:00Z\n\
                    a,zz,2011-01-01T10:00:00Z,2011-01-01T11:00:00Z\n\
                    b,a,2011-01-01T10:00:00Z,2011-01-01T09:00:00Z\n";
        let log = TransitionLog::from_reader(text.as_bytes(), Path::new("t.csv"), &venues()).unwrap();
        assert_eq!(log.len(), 1);
        assert_eq!(log.input_rows, 3);
        assert_eq!(log.len() + log.rejections.len(), log.input_rows as usize);
        let reasons = log.rejections.by_reason();
        assert_eq!(reasons["unknown venue"], 1);
        assert_eq!(reasons["t_dest before t_origin"], 1);
    }

    #[test]
    fn empty_file() {
        let log =
            TransitionLog::from_reader("origin_venue,dest_venue,t_origin,t_dest\n".as_bytes(), Path::new("t"), &venues())
                .unwrap();
        assert!(log.is_empty());
        assert_eq!(log.input_rows, 0);
        assert!(log.rejections.is_empty());
    }

    #[test]
    fn write_then_parse() {
        let v = venues();
        let ts = vec![Transition { origin: VenueIdx(1), dest: VenueIdx(0), t_origin: 1_300_000_000, t_dest: 1_300_000_600 }];
        let mut buf = Vec::new();
        write_transitions_csv(&mut buf, &ts, &v).unwrap();
        let log = TransitionLog::from_reader(&buf[..], Path::new("mem"), &v).unwrap();
        assert_eq!(log.transitions, ts);
    }
}
