use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use serde_json::{json, Value};

use super::{open, IngestError, Rejections, Result};
use crate::geo::{haversine_km, polygon_centroid, BBox, LatLon, Polygon, Ring};

/// Index of a ward inside a [`WardSet`] (wards are held in `ward_code` order).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WardIdx(pub u32);

impl WardIdx {
    pub fn get(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ward {
    pub ward_code: String,
    pub borough_code: String,
    pub sub_region: String,
    /// One or more polygons; each polygon is an outer ring followed by holes.
    pub polygons: Vec<Polygon>,
    pub area_km2: f64,
    pub population: Option<u64>,
    pub bbox: BBox,
}

impl Ward {
    pub fn new(
        ward_code: impl Into<String>,
        borough_code: impl Into<String>,
        sub_region: impl Into<String>,
        polygons: Vec<Polygon>,
        area_km2: f64,
        population: Option<u64>,
    ) -> Self {
        let bbox = BBox::of_rings(polygons.iter().flatten());
        Ward {
            ward_code: ward_code.into(),
            borough_code: borough_code.into(),
            sub_region: sub_region.into(),
            polygons,
            area_km2,
            population,
            bbox,
        }
    }

    pub fn rings(&self) -> impl Iterator<Item = &Ring> {
        self.polygons.iter().flatten()
    }

    pub fn contains(&self, p: LatLon) -> bool {
        if !self.bbox.contains(p) {
            return false;
        }
        crate::geo::point_in_rings(p, self.rings())
    }

    fn check(&self) -> std::result::Result<(), &'static str> {
        if self.ward_code.is_empty() {
            return Err("empty ward_code");
        }
        if !(self.area_km2 > 0.0) {
            return Err("area_km2 not positive");
        }
        if self.polygons.is_empty() {
            return Err("no polygon");
        }
        for ring in self.rings() {
            if ring.len() < 4 {
                return Err("ring has fewer than 4 vertices");
            }
            if ring.first() != ring.last() {
                return Err("ring not closed");
            }
        }
        if self.population == Some(0) {
            return Err("population not positive");
        }
        Ok(())
    }
}

/// Wards sorted by `ward_code`.
#[derive(Debug, Clone, Default)]
pub struct WardSet {
    wards: Vec<Ward>,
    pub rejections: Rejections,
    pub input_rows: u64,
}

impl WardSet {
    pub fn from_wards(wards: impl IntoIterator<Item = Ward>) -> Self {
        let mut set = WardSet::default();
        let mut seen = HashSet::new();
        for w in wards {
            set.input_rows += 1;
            if let Err(reason) = w.check() {
                set.rejections.push(set.input_rows, reason);
            } else if !seen.insert(w.ward_code.clone()) {
                set.rejections.push(set.input_rows, "duplicate ward_code");
            } else {
                set.wards.push(w);
            }
        }
        set.wards.sort_by(|a, b| a.ward_code.cmp(&b.ward_code));
        set
    }

    pub fn from_reader<R: Read>(reader: R, path: &Path) -> Result<Self> {
        let fmt = |message: String| IngestError::Format { path: path.to_path_buf(), message };
        let doc: Value = serde_json::from_reader(reader).map_err(|e| fmt(e.to_string()))?;
        if doc.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
            return Err(fmt("not a GeoJSON FeatureCollection".into()));
        }
        let features = doc.get("features").and_then(Value::as_array).ok_or_else(|| fmt("missing features".into()))?;
        let mut parsed = Vec::with_capacity(features.len());
        let mut early = Rejections::default();
        for (i, f) in features.iter().enumerate() {
            match parse_feature(f) {
                Ok(w) => parsed.push((i as u64 + 1, w)),
                Err(reason) => early.push(i as u64 + 1, reason),
            }
        }
        // Feature order gives the row numbers used in rejections.
        let mut set = WardSet { input_rows: features.len() as u64, rejections: early, ..Default::default() };
        let mut seen = HashSet::new();
        for (row, w) in parsed {
            if let Err(reason) = w.check() {
                set.rejections.push(row, reason);
            } else if !seen.insert(w.ward_code.clone()) {
                set.rejections.push(row, "duplicate ward_code");
            } else {
                set.wards.push(w);
            }
        }
        set.rejections.rows.sort_by_key(|r| r.row);
        set.wards.sort_by(|a, b| a.ward_code.cmp(&b.ward_code));
        Ok(set)
    }

    pub fn wards(&self) -> &[Ward] {
        &self.wards
    }

    pub fn len(&self) -> usize {
        self.wards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wards.is_empty()
    }

    pub fn get(&self, idx: WardIdx) -> &Ward {
        &self.wards[idx.get()]
    }

    pub fn lookup(&self, code: &str) -> Option<WardIdx> {
        self.wards.binary_search_by(|w| w.ward_code.as_str().cmp(code)).ok().map(|i| WardIdx(i as u32))
    }

    pub fn iter(&self) -> impl Iterator<Item = (WardIdx, &Ward)> {
        self.wards.iter().enumerate().map(|(i, w)| (WardIdx(i as u32), w))
    }
}

fn parse_ring(v: &Value) -> std::result::Result<Ring, &'static str> {
    let pts = v.as_array().ok_or("bad ring")?;
    pts.iter()
        .map(|p| {
            let c = p.as_array().ok_or("bad coordinate")?;
            let lon = c.first().and_then(Value::as_f64).ok_or("bad coordinate")?;
            let lat = c.get(1).and_then(Value::as_f64).ok_or("bad coordinate")?;
            Ok(LatLon::new(lat, lon))
        })
        .collect()
}

fn parse_polygon(v: &Value) -> std::result::Result<Polygon, &'static str> {
    v.as_array().ok_or("bad polygon")?.iter().map(parse_ring).collect()
}

fn parse_feature(f: &Value) -> std::result::Result<Ward, &'static str> {
    let props = f.get("properties").and_then(Value::as_object).ok_or("missing properties")?;
    let text = |k: &str| -> std::result::Result<String, &'static str> {
        match props.get(k) {
            Some(Value::String(s)) => Ok(s.trim().to_string()),
            Some(Value::Number(n)) => Ok(n.to_string()),
            _ => Err("missing text property"),
        }
    };
    let ward_code = text("ward_code").map_err(|_| "missing ward_code")?;
    let borough_code = text("borough_code").map_err(|_| "missing borough_code")?;
    let sub_region = text("sub_region").map_err(|_| "missing sub_region")?;
    let area_km2 = props.get("area_km2").and_then(Value::as_f64).ok_or("missing area_km2")?;
    let population = match props.get("population") {
        None | Some(Value::Null) => None,
        Some(v) => Some(v.as_u64().ok_or("bad population")?),
    };
    let geom = f.get("geometry").ok_or("missing geometry")?;
    let coords = geom.get("coordinates").ok_or("missing coordinates")?;
    let polygons = match geom.get("type").and_then(Value::as_str) {
        Some("Polygon") => vec![parse_polygon(coords)?],
        Some("MultiPolygon") => coords.as_array().ok_or("bad multipolygon")?.iter().map(parse_polygon).collect::<std::result::Result<_, _>>()?,
        _ => return Err("unsupported geometry"),
    };
    Ok(Ward::new(ward_code, borough_code, sub_region, polygons, area_km2, population))
}

pub fn parse_wards(path: &Path) -> Result<WardSet> {
    let f = open(path)?;
    WardSet::from_reader(std::io::BufReader::new(f), path)
}

pub fn write_wards_geojson<W: Write>(out: W, wards: &[Ward]) -> serde_json::Result<()> {
    let ring_json = |r: &Ring| Value::Array(r.iter().map(|p| json!([p.lon, p.lat])).collect());
    let features: Vec<Value> = wards
        .iter()
        .map(|w| {
            let geometry = if w.polygons.len() == 1 {
                json!({"type": "Polygon", "coordinates": w.polygons[0].iter().map(ring_json).collect::<Vec<_>>()})
            } else {
                json!({"type": "MultiPolygon", "coordinates": w.polygons.iter()
                    .map(|p| p.iter().map(ring_json).collect::<Vec<_>>()).collect::<Vec<_>>()})
            };
            json!({
                "type": "Feature",
                "properties": {
                    "ward_code": w.ward_code,
                    "borough_code": w.borough_code,
                    "sub_region": w.sub_region,
                    "area_km2": w.area_km2,
                    "population": w.population,
                },
                "geometry": geometry,
            })
        })
        .collect();
    serde_json::to_writer(out, &json!({"type": "FeatureCollection", "features": features}))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WardDistance {
    pub km: f64,
    /// The polygon had zero area and the vertex mean stood in for the centroid.
    pub degenerate: bool,
}

/// Distance from `centre` to the ward's area centroid.
pub fn ward_centroid_distance(ward: &Ward, centre: LatLon) -> WardDistance {
    let c = polygon_centroid(&ward.polygons);
    WardDistance { km: haversine_km(c.point, centre), degenerate: c.degenerate }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn rect(lat0: f64, lon0: f64, dlat: f64, dlon: f64) -> Polygon {
        vec![vec![
            LatLon::new(lat0, lon0),
            LatLon::new(lat0, lon0 + dlon),
            LatLon::new(lat0 + dlat, lon0 + dlon),
            LatLon::new(lat0 + dlat, lon0),
            LatLon::new(lat0, lon0),
        ]]
    }

    #[test]
    fn geojson_roundtrip_and_sorting() {
        let wards = vec![
            Ward::new("W2", "B1", "East", vec![rect(51.0, 0.0, 0.01, 0.01)], 1.2, Some(900)),
            Ward::new("W1", "B1", "East", vec![rect(51.0, 0.01, 0.01, 0.01), rect(52.0, 0.0, 0.01, 0.01)], 2.4, None),
        ];
        let mut buf = Vec::new();
        write_wards_geojson(&mut buf, &wards).unwrap();
        let set = WardSet::from_reader(&buf[..], Path::new("mem")).unwrap();
        assert!(set.rejections.is_empty());
        assert_eq!(set.wards()[0].ward_code, "W1");
        assert_eq!(set.wards()[0].polygons.len(), 2);
        assert_eq!(set.wards()[0].population, None);
        assert_eq!(set.get(set.lookup("W2").unwrap()), &wards[0]);
    }

    #[test]
    fn unclosed_ring_and_bad_area_rejected() {
        let mut open_ring = rect(51.0, 0.0, 0.01, 0.01);
        open_ring[0].pop();
        let set = WardSet::from_wards([
            Ward::new("A", "B", "S", vec![open_ring], 1.0, None),
            Ward::new("C", "B", "S", vec![rect(51.0, 0.0, 0.01, 0.01)], 0.0, None),
        ]);
        assert!(set.is_empty());
        let reasons = set.rejections.by_reason();
        assert_eq!(reasons["ring not closed"], 1);
        assert_eq!(reasons["area_km2 not positive"], 1);
    }

    #[test]
    fn not_a_feature_collection() {
        let r = WardSet::from_reader(&br#"{"type":"Feature"}"#[..], Path::new("w"));
        assert!(matches!(r, Err(IngestError::Format { .. })));
    }

    #[test]
    fn centroid_distance_zero_at_centroid() {
        let w = Ward::new("A", "B", "S", vec![rect(51.5, -0.13, 0.02, 0.03)], 1.0, None);
        let c = polygon_centroid(&w.polygons).point;
        let d = ward_centroid_distance(&w, c);
        assert!(d.km.abs() < 1e-9);
        assert!(!d.degenerate);
    }
}
