use super::venues::{VenueIdx, VenueTable};
use super::wards::{WardIdx, WardSet};
use crate::geo::LatLon;
use crate::par::{self, Exec};

/// Venue → ward mapping. Each venue belongs to at most one ward.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VenueWardIndex {
    ward_of: Vec<Option<WardIdx>>,
    members: Vec<Vec<VenueIdx>>,
    pub unassigned: usize,
}

impl VenueWardIndex {
    /// Builds an index from an explicit assignment (one entry per venue).
    pub fn from_assignment(ward_of: Vec<Option<WardIdx>>, n_wards: usize) -> Self {
        let mut members = vec![Vec::new(); n_wards];
        let mut unassigned = 0;
        for (v, w) in ward_of.iter().enumerate() {
            match w {
                Some(w) => members[w.get()].push(VenueIdx(v as u32)),
                None => unassigned += 1,
            }
        }
        VenueWardIndex { ward_of, members, unassigned }
    }

    pub fn ward_of(&self, v: VenueIdx) -> Option<WardIdx> {
        self.ward_of.get(v.get()).copied().flatten()
    }

    /// Venues of a ward, in venue-index order.
    pub fn venues_in(&self, w: WardIdx) -> &[VenueIdx] {
        &self.members[w.get()]
    }

    pub fn assignment(&self) -> &[Option<WardIdx>] {
        &self.ward_of
    }

    pub fn n_wards(&self) -> usize {
        self.members.len()
    }
}

/// Assigns each venue to the first ward (in `ward_code` order) whose polygon
/// contains it; boundary points count as inside, so a point on a shared
/// edge goes to the lexicographically smaller code.
pub fn assign_venues_to_wards(venues: &VenueTable, wards: &WardSet) -> VenueWardIndex {
    assign_venues_to_wards_with(Exec::default(), venues, wards)
}

pub fn assign_venues_to_wards_with(exec: Exec, venues: &VenueTable, wards: &WardSet) -> VenueWardIndex {
    let ward_of = par::map_slice(exec, venues.venues(), |v| {
        let p = LatLon::new(v.lat, v.lon);
        wards.iter().find(|(_, w)| w.contains(p)).map(|(i, _)| i)
    });
    VenueWardIndex::from_assignment(ward_of, wards.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::{point_in_rings, Polygon};
    use crate::ingest::{Venue, Ward};
    use proptest::prelude::*;

    fn unit(lat0: f64, lon0: f64) -> Polygon {
        vec![vec![
            LatLon::new(lat0, lon0),
            LatLon::new(lat0, lon0 + 1.0),
            LatLon::new(lat0 + 1.0, lon0 + 1.0),
            LatLon::new(lat0 + 1.0, lon0),
            LatLon::new(lat0, lon0),
        ]]
    }

    fn venue(id: &str, lat: f64, lon: f64) -> Venue {
        Venue {
            id: id.into(),
            lat,
            lon,
            category: String::new(),
            parent_category: String::new(),
            is_cultural: false,
            created_at: 0,
            user_count: 0,
        }
    }

    fn two_wards() -> WardSet {
        // "B" is listed first to show that ordering comes from ward_code.
        WardSet::from_wards([
            Ward::new("B", "X", "S", vec![unit(0.0, 1.0)], 1.0, None),
            Ward::new("A", "X", "S", vec![unit(0.0, 0.0)], 1.0, None),
        ])
    }

    #[test]
    fn inside_outside_and_shared_boundary() {
        let wards = two_wards();
        let venues = VenueTable::from_venues([
            venue("in_b", 0.5, 1.5),
            venue("out", 5.0, 5.0),
            venue("edge", 0.5, 1.0),
            venue("in_a", 0.25, 0.75),
        ]);
        let idx = assign_venues_to_wards(&venues, &wards);
        let code = |id: &str| idx.ward_of(venues.lookup(id).unwrap()).map(|w| wards.get(w).ward_code.clone());
        assert_eq!(code("in_b").as_deref(), Some("B"));
        assert_eq!(code("out"), None);
        assert_eq!(code("in_a").as_deref(), Some("A"));
        // Even-odd oracle: the point is on both polygons' boundary...
        let p = LatLon::new(0.5, 1.0);
        assert!(wards.wards().iter().all(|w| point_in_rings(p, w.rings())));
        // ...and the tie rule picks the smaller code.
        assert_eq!(code("edge").as_deref(), Some("A"));
        assert_eq!(idx.unassigned, 1);
        assert_eq!(idx.venues_in(wards.lookup("A").unwrap()).len(), 2);
    }

    proptest! {
        #[test]
        fn assignment_independent_of_venue_order(
            pts in proptest::collection::vec((-0.5f64..1.5, -0.5f64..2.5), 1..40),
            seed in any::<u64>(),
        ) {
            let wards = two_wards();
            let vs: Vec<Venue> = pts.iter().enumerate().map(|(i, &(a, b))| venue(&format!("v{i}"), a, b)).collect();
            let mut shuffled = vs.clone();
            let n = shuffled.len();
            // cheap deterministic permutation
            for i in (1..n).rev() {
                let j = (seed.wrapping_mul(6364136223846793005).wrapping_add(i as u64) % (i as u64 + 1)) as usize;
                shuffled.swap(i, j);
            }
            let t1 = VenueTable::from_venues(vs);
            let t2 = VenueTable::from_venues(shuffled);
            let i1 = assign_venues_to_wards_with(Exec::Sequential, &t1, &wards);
            let i2 = assign_venues_to_wards_with(Exec::Parallel, &t2, &wards);
            for v in t1.venues() {
                prop_assert_eq!(i1.ward_of(t1.lookup(&v.id).unwrap()), i2.ward_of(t2.lookup(&v.id).unwrap()));
            }
        }
    }
}
