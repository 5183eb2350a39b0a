use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;

use super::time::{format_timestamp, parse_timestamp};
use super::{csv_reader, open, IngestError, Rejections, Result};

pub const VENUES_HEADER: &str = "id,lat,lon,category,parent_category,is_cultural,created_at,user_count";

/// Dense index of a venue inside its [`VenueTable`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct VenueIdx(pub u32);

impl VenueIdx {
    pub fn get(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Venue {
    pub id: String,
    pub lat: f64,
    pub lon: f64,
    pub category: String,
    pub parent_category: String,
    pub is_cultural: bool,
    /// Unix seconds, UTC.
    pub created_at: i64,
    pub user_count: u64,
}

impl Venue {
    fn check(&self) -> std::result::Result<(), &'static str> {
        if self.id.is_empty() {
            return Err("empty id");
        }
        if !(-90.0..=90.0).contains(&self.lat) || !self.lat.is_finite() {
            return Err("lat out of range");
        }
        if !(-180.0..=180.0).contains(&self.lon) || !self.lon.is_finite() {
            return Err("lon out of range");
        }
        Ok(())
    }
}

/// Valid venues with unique ids, plus what was rejected on the way in.
#[derive(Debug, Clone, Default)]
pub struct VenueTable {
    venues: Vec<Venue>,
    by_id: HashMap<String, VenueIdx>,
    pub rejections: Rejections,
    pub input_rows: u64,
}

impl VenueTable {
    /// Builds a table from already-typed venues, applying the same validation
    /// as the CSV path. Later duplicates of an id are rejected.
    pub fn from_venues(venues: impl IntoIterator<Item = Venue>) -> Self {
        let mut table = VenueTable::default();
        for v in venues {
            table.input_rows += 1;
            let row = table.input_rows;
            table.insert(row, v);
        }
        table
    }

    fn insert(&mut self, row: u64, v: Venue) {
        if let Err(reason) = v.check() {
            self.rejections.push(row, reason);
            return;
        }
        if self.by_id.contains_key(&v.id) {
            self.rejections.push(row, "duplicate id");
            return;
        }
        let idx = VenueIdx(self.venues.len() as u32);
        self.by_id.insert(v.id.clone(), idx);
        self.venues.push(v);
    }

    pub fn from_reader<R: Read>(reader: R, path: &Path) -> Result<Self> {
        let mut rdr = csv_reader(reader, path, VENUES_HEADER)?;
        let mut table = VenueTable::default();
        let mut record = csv::StringRecord::new();
        loop {
            match rdr.read_record(&mut record) {
                Ok(true) => {}
                Ok(false) => break,
                Err(e) => {
                    if e.is_io_error() {
                        return Err(IngestError::Format { path: path.to_path_buf(), message: e.to_string() });
                    }
                    table.input_rows += 1;
                    table.rejections.push(table.input_rows, "unreadable row");
                    continue;
                }
            }
            table.input_rows += 1;
            let row = table.input_rows;
            match parse_row(&record) {
                Ok(v) => table.insert(row, v),
                Err(reason) => table.rejections.push(row, reason),
            }
        }
        Ok(table)
    }

    pub fn len(&self) -> usize {
        self.venues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.venues.is_empty()
    }

    pub fn venues(&self) -> &[Venue] {
        &self.venues
    }

    pub fn get(&self, idx: VenueIdx) -> &Venue {
        &self.venues[idx.get()]
    }

    pub fn lookup(&self, id: &str) -> Option<VenueIdx> {
        self.by_id.get(id).copied()
    }
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" => Some(true),
        "false" | "0" | "no" => Some(false),
        _ => None,
    }
}

fn parse_row(r: &csv::StringRecord) -> std::result::Result<Venue, &'static str> {
    if r.len() != 8 {
        return Err("wrong field count");
    }
    let lat: f64 = r[1].trim().parse().map_err(|_| "bad lat")?;
    let lon: f64 = r[2].trim().parse().map_err(|_| "bad lon")?;
    Ok(Venue {
        id: r[0].trim().to_string(),
        lat,
        lon,
        category: r[3].trim().to_string(),
        parent_category: r[4].trim().to_string(),
        is_cultural: parse_bool(&r[5]).ok_or("bad is_cultural")?,
        created_at: parse_timestamp(&r[6]).ok_or("bad created_at")?,
        user_count: r[7].trim().parse().map_err(|_| "bad user_count")?,
    })
}

pub fn parse_venues(path: &Path) -> Result<VenueTable> {
    let f = open(path)?;
    VenueTable::from_reader(std::io::BufReader::new(f), path)
}

pub fn write_venues_csv<W: Write>(out: W, venues: &[Venue]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(VENUES_HEADER.split(','))?;
    for v in venues {
        w.write_record([
            v.id.as_str(),
            &v.lat.to_string(),
            &v.lon.to_string(),
            &v.category,
            &v.parent_category,
            if v.is_cultural { "true" } else { "false" },
            &format_timestamp(v.created_at),
            &v.user_count.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<VenueTable> {
        VenueTable::from_reader(text.as_bytes(), Path::new("venues.csv"))
    }

    const HEAD: &str = "id,lat,lon,category,parent_category,is_cultural,created_at,user_count\n";

    #[test]
    fn lat_out_of_range_rejected() {
        let t = parse(&format!("{HEAD}a,91,0,Museum,Arts,true,2011-01-01T00:00:00Z,3\n")).unwrap();
        assert_eq!(t.len(), 0);
        assert_eq!(t.rejections.rows[0].reason, "lat out of range");
    }

    #[test]
    fn duplicate_ids_keep_first() {
        let t = parse(&format!(
            "{HEAD}a,51,0,Museum,Arts,true,2011-01-01T00:00:00Z,3\na,52,0,Cafe,Food,false,2011-01-01T00:00:00Z,1\n"
        ))
        .unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.get(t.lookup("a").unwrap()).lat, 51.0);
        assert_eq!(t.rejections.rows[0].reason, "duplicate id");
        assert_eq!(t.rejections.rows[0].row, 2);
    }

    #[test]
    fn bad_header_is_fatal_bad_rows_are_not() {
        assert!(matches!(parse("id,lat\n"), Err(IngestError::Header { .. })));
        let t = parse(&format!("{HEAD}a,x,0,M,A,true,2011-01-01T00:00:00Z,3\nb,1,0\n")).unwrap();
        assert_eq!(t.input_rows, 2);
        assert_eq!(t.rejections.len(), 2);
    }

    #[test]
    fn missing_file() {
        assert!(matches!(parse_venues(Path::new("/nonexistent/venues.csv")), Err(IngestError::Io { .. })));
    }

    #[test]
    fn write_then_parse() {
        let v = Venue {
            id: "v,1".into(),
            lat: 51.25,
            lon: -0.1,
            category: "Art \"Gallery\"".into(),
            parent_category: "Arts".into(),
            is_cultural: true,
            created_at: 1_300_000_000,
            user_count: 7,
        };
        let mut buf = Vec::new();
        write_venues_csv(&mut buf, std::slice::from_ref(&v)).unwrap();
        let t = VenueTable::from_reader(&buf[..], Path::new("mem")).unwrap();
        assert!(t.rejections.is_empty());
        assert_eq!(t.venues()[0], v);
    }
}
