//! Planar and spherical geometry helpers used for ward assignment and distances.

use serde::{Deserialize, Serialize};

/// Mean Earth radius in kilometres.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// A WGS84 coordinate in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatLon {
    pub lat: f64,
    pub lon: f64,
}

impl LatLon {
    pub const fn new(lat: f64, lon: f64) -> Self {
        Self { lat, lon }
    }
}

/// Closed ring of vertices; the first vertex is repeated at the end.
pub type Ring = Vec<LatLon>;

/// Kilometres per degree of arc on the mean sphere.
pub const KM_PER_DEGREE: f64 = EARTH_RADIUS_KM * std::f64::consts::PI / 180.0;

/// Great-circle (haversine) distance in kilometres.
pub fn haversine_km(a: LatLon, b: LatLon) -> f64 {
    let (lat1, lat2) = (a.lat.to_radians(), b.lat.to_radians());
    let dlat = lat2 - lat1;
    let dlon = (b.lon - a.lon).to_radians();
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

/// Axis-aligned bounding box in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub min_lat: f64,
    pub max_lat: f64,
    pub min_lon: f64,
    pub max_lon: f64,
}

impl BBox {
    pub fn of_rings<'a>(rings: impl IntoIterator<Item = &'a Ring>) -> Self {
        let mut bb = BBox {
            min_lat: f64::INFINITY,
            max_lat: f64::NEG_INFINITY,
            min_lon: f64::INFINITY,
            max_lon: f64::NEG_INFINITY,
        };
        for p in rings.into_iter().flatten() {
            bb.min_lat = bb.min_lat.min(p.lat);
            bb.max_lat = bb.max_lat.max(p.lat);
            bb.min_lon = bb.min_lon.min(p.lon);
            bb.max_lon = bb.max_lon.max(p.lon);
        }
        bb
    }

    pub fn contains(&self, p: LatLon) -> bool {
        p.lat >= self.min_lat && p.lat <= self.max_lat && p.lon >= self.min_lon && p.lon <= self.max_lon
    }
}

fn on_segment(p: LatLon, a: LatLon, b: LatLon) -> bool {
    let cross = (b.lon - a.lon) * (p.lat - a.lat) - (b.lat - a.lat) * (p.lon - a.lon);
    let scale = (b.lon - a.lon).abs().max((b.lat - a.lat).abs()).max(1e-300);
    if cross.abs() > 1e-12 * scale {
        return false;
    }
    p.lon >= a.lon.min(b.lon)
        && p.lon <= a.lon.max(b.lon)
        && p.lat >= a.lat.min(b.lat)
        && p.lat <= a.lat.max(b.lat)
}

/// Even-odd containment over all rings (holes flip parity). Points lying on
/// any edge are inside.
pub fn point_in_rings<'a>(p: LatLon, rings: impl IntoIterator<Item = &'a Ring>) -> bool {
    let mut inside = false;
    for ring in rings {
        for w in ring.windows(2) {
            let (a, b) = (w[0], w[1]);
            if on_segment(p, a, b) {
                return true;
            }
            if (a.lat > p.lat) != (b.lat > p.lat) {
                let x = a.lon + (p.lat - a.lat) * (b.lon - a.lon) / (b.lat - a.lat);
                if p.lon < x {
                    inside = !inside;
                }
            }
        }
    }
    inside
}

/// Area centroid of a polygon, computed on an equirectangular projection
/// centred on the vertex mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Centroid {
    pub point: LatLon,
    pub area_km2: f64,
    /// Zero-area polygon; `point` is the vertex mean.
    pub degenerate: bool,
}

/// Polygon as rings: the first ring is the outer boundary, the rest are holes.
pub type Polygon = Vec<Ring>;

fn vertex_mean(parts: &[Polygon]) -> LatLon {
    // Closing vertices are skipped so they are not double counted.
    let mut n = 0usize;
    let (mut lat, mut lon) = (0.0, 0.0);
    for ring in parts.iter().flatten() {
        let open = if ring.len() > 1 && ring.first() == ring.last() { &ring[..ring.len() - 1] } else { &ring[..] };
        for p in open {
            lat += p.lat;
            lon += p.lon;
            n += 1;
        }
    }
    if n == 0 {
        return LatLon::new(0.0, 0.0);
    }
    LatLon::new(lat / n as f64, lon / n as f64)
}

/// Area centroid of a (multi)polygon.
pub fn polygon_centroid(parts: &[Polygon]) -> Centroid {
    let origin = vertex_mean(parts);
    let k = KM_PER_DEGREE;
    let cos0 = origin.lat.to_radians().cos();
    let project = |p: &LatLon| ((p.lon - origin.lon) * k * cos0, (p.lat - origin.lat) * k);

    // Ring orientation is not trusted: outer rings add area, holes subtract.
    let mut total_a = 0.0;
    let mut total_cx = 0.0;
    let mut total_cy = 0.0;
    for part in parts {
        for (ri, ring) in part.iter().enumerate() {
            let (mut a, mut cx, mut cy) = (0.0, 0.0, 0.0);
            for w in ring.windows(2) {
                let (x0, y0) = project(&w[0]);
                let (x1, y1) = project(&w[1]);
                let c = x0 * y1 - x1 * y0;
                a += c;
                cx += (x0 + x1) * c;
                cy += (y0 + y1) * c;
            }
            a *= 0.5;
            if a == 0.0 {
                continue;
            }
            let (rx, ry) = (cx / (6.0 * a), cy / (6.0 * a));
            let s = if ri == 0 { a.abs() } else { -a.abs() };
            total_a += s;
            total_cx += s * rx;
            total_cy += s * ry;
        }
    }
    if total_a.abs() < 1e-12 {
        return Centroid { point: origin, area_km2: 0.0, degenerate: true };
    }
    let (x, y) = (total_cx / total_a, total_cy / total_a);
    let point = LatLon::new(origin.lat + y / k, origin.lon + x / (k * cos0));
    Centroid { point, area_km2: total_a, degenerate: false }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(x0: f64, y0: f64, s: f64) -> Ring {
        vec![
            LatLon::new(y0, x0),
            LatLon::new(y0, x0 + s),
            LatLon::new(y0 + s, x0 + s),
            LatLon::new(y0 + s, x0),
            LatLon::new(y0, x0),
        ]
    }

    #[test]
    fn containment_inside_outside_edge() {
        let r = vec![square(0.0, 0.0, 1.0)];
        assert!(point_in_rings(LatLon::new(0.5, 0.5), &r));
        assert!(!point_in_rings(LatLon::new(1.5, 0.5), &r));
        assert!(point_in_rings(LatLon::new(0.0, 0.5), &r));
        assert!(point_in_rings(LatLon::new(1.0, 1.0), &r));
    }

    #[test]
    fn hole_excludes_interior() {
        let rings = vec![square(0.0, 0.0, 4.0), square(1.0, 1.0, 2.0)];
        assert!(!point_in_rings(LatLon::new(2.0, 2.0), &rings));
        assert!(point_in_rings(LatLon::new(0.5, 0.5), &rings));
        // hole boundary is still polygon boundary
        assert!(point_in_rings(LatLon::new(1.0, 2.0), &rings));
    }

    #[test]
    fn centroid_of_square() {
        let c = polygon_centroid(&[vec![square(10.0, 50.0, 0.02)]]);
        assert!(!c.degenerate);
        assert!((c.point.lat - 50.01).abs() < 1e-5);
        assert!((c.point.lon - 10.01).abs() < 1e-5);
        assert!(c.area_km2 > 0.0);
        let holed = polygon_centroid(&[vec![square(0.0, 0.0, 0.04), square(0.0, 0.0, 0.02)]]);
        assert!(holed.point.lat > 0.02 && holed.point.lon > 0.02);
    }

    #[test]
    fn degenerate_polygon_falls_back_to_vertex_mean() {
        let line = vec![LatLon::new(0.0, 0.0), LatLon::new(1.0, 1.0), LatLon::new(0.0, 0.0)];
        let c = polygon_centroid(&[vec![line]]);
        assert!(c.degenerate);
        assert!((c.point.lat - 0.5).abs() < 1e-12);
    }
}
