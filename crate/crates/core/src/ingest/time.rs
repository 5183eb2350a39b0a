//! UTC timestamps as Unix seconds.
//!
//! Million-row transition files make chrono's generic parser the bottleneck,
//! so the canonical `YYYY-MM-DDTHH:MM:SSZ` form has a hand-rolled fast path.

use chrono::{DateTime, NaiveDate, NaiveDateTime};

/// Days since 1970-01-01 for a proleptic Gregorian date.
pub fn days_from_civil(y: i64, m: u32, d: u32) -> i64 {
    let y = if m <= 2 { y - 1 } else { y };
    let era = if y >= 0 { y } else { y - 399 } / 400;
    let yoe = y - era * 400;
    let m = m as i64;
    let doy = (153 * (if m > 2 { m - 3 } else { m + 9 }) + 2) / 5 + d as i64 - 1;
    let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    era * 146_097 + doe - 719_468
}

pub fn civil_from_days(z: i64) -> (i64, u32, u32) {
    let z = z + 719_468;
    let era = if z >= 0 { z } else { z - 146_096 } / 146_097;
    let doe = z - era * 146_097;
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let y = yoe + era * 400;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let d = (doy - (153 * mp + 2) / 5 + 1) as u32;
    let m = if mp < 10 { mp + 3 } else { mp - 9 } as u32;
    (if m <= 2 { y + 1 } else { y }, m, d)
}

/// Unix seconds at 00:00:00 UTC on January 1st of `year`.
pub fn year_start(year: i32) -> i64 {
    days_from_civil(year as i64, 1, 1) * 86_400
}

pub fn year_of(ts: i64) -> i32 {
    civil_from_days(ts.div_euclid(86_400)).0 as i32
}

fn digits(b: &[u8]) -> Option<u32> {
    let mut v = 0u32;
    for &c in b {
        if !c.is_ascii_digit() {
            return None;
        }
        v = v * 10 + (c - b'0') as u32;
    }
    Some(v)
}

fn fast_parse(s: &str) -> Option<i64> {
    let b = s.as_bytes();
    if b.len() != 20 || b[4] != b'-' || b[7] != b'-' || b[10] != b'T' || b[13] != b':' || b[16] != b':' || b[19] != b'Z'
    {
        return None;
    }
    let (y, mo, d) = (digits(&b[0..4])?, digits(&b[5..7])?, digits(&b[8..10])?);
    let (h, mi, se) = (digits(&b[11..13])?, digits(&b[14..16])?, digits(&b[17..19])?);
    if !(1..=12).contains(&mo) || d == 0 || h > 23 || mi > 59 || se > 59 {
        return None;
    }
    // Reject impossible days such as 02-30.
    NaiveDate::from_ymd_opt(y as i32, mo, d)?;
    Some(days_from_civil(y as i64, mo, d) * 86_400 + (h * 3600 + mi * 60 + se) as i64)
}

/// Parses an ISO 8601 timestamp and normalises it to UTC. Timestamps without
/// an offset are taken as UTC.
pub fn parse_timestamp(s: &str) -> Option<i64> {
    let s = s.trim();
    if let Some(t) = fast_parse(s) {
        return Some(t);
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.timestamp());
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(dt.and_utc().timestamp());
        }
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d").ok().map(|d| d.and_hms_opt(0, 0, 0).unwrap().and_utc().timestamp())
}

/// Canonical `YYYY-MM-DDTHH:MM:SSZ` rendering.
pub fn format_timestamp(ts: i64) -> String {
    let (y, m, d) = civil_from_days(ts.div_euclid(86_400));
    let sod = ts.rem_euclid(86_400);
    format!("{y:04}-{m:02}-{d:02}T{:02}:{:02}:{:02}Z", sod / 3600, (sod / 60) % 60, sod % 60)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn known_instants() {
        assert_eq!(parse_timestamp("1970-01-01T00:00:00Z"), Some(0));
        assert_eq!(parse_timestamp("2011-01-01T00:00:00Z"), Some(1_293_840_000));
        assert_eq!(parse_timestamp("2011-01-01T01:00:00+01:00"), Some(1_293_840_000));
        assert_eq!(parse_timestamp("2011-01-01 00:00:00"), Some(1_293_840_000));
        assert_eq!(parse_timestamp("2011-01-01"), Some(1_293_840_000));
        assert_eq!(parse_timestamp("2011-02-30T00:00:00Z"), None);
        assert_eq!(parse_timestamp("yesterday"), None);
        assert_eq!(year_start(2011), 1_293_840_000);
        assert_eq!(year_of(1_293_839_999), 2010);
    }

    proptest! {
        #[test]
        fn format_parse_agree_with_chrono(ts in -2_000_000_000i64..4_000_000_000i64) {
            let s = format_timestamp(ts);
            let chrono_s = DateTime::from_timestamp(ts, 0).unwrap().format("%Y-%m-%dT%H:%M:%SZ").to_string();
            prop_assert_eq!(&s, &chrono_s);
            prop_assert_eq!(parse_timestamp(&s), Some(ts));
        }
    }
}
