//! Brute-force reference computations over a generated bundle.
//!
//! Ward membership comes from grid arithmetic instead of point-in-polygon,
//! edges from a hash map instead of CSR rows, and clustering from a full
//! scan of neighbour pairs. Only meant for small cities.

use std::collections::{BTreeMap, HashMap, HashSet};

use super::SynthBundle;
use crate::geo::LatLon;
use crate::ingest::time::year_start;
use crate::ingest::{ExpenditureCategory, Period};
use crate::metrics::{WardMetricsPanel, WardMetricsRow};

fn ward_index(bundle: &SynthBundle) -> Vec<Option<usize>> {
    let cfg = &bundle.config;
    bundle
        .venues
        .iter()
        .map(|v| cfg.cell_of(LatLon::new(v.lat, v.lon)).map(|(r, c)| r * cfg.grid_cols + c))
        .collect()
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

pub fn oracle_ward_metrics(bundle: &SynthBundle) -> WardMetricsPanel {
    let cfg = &bundle.config;
    let n_wards = bundle.wards.len();
    let ward_of = ward_index(bundle);
    let periods: Vec<Period> = cfg
        .calendar_years()
        .into_iter()
        .zip(cfg.fiscal_years())
        .enumerate()
        .map(|(i, (calendar_year, fiscal_year))| Period { t: i + 1, fiscal_year, calendar_year })
        .collect();

    let mut borough_members: HashMap<&str, Vec<usize>> = HashMap::new();
    for (w, ward) in bundle.wards.iter().enumerate() {
        borough_members.entry(&ward.borough_code).or_default().push(w);
    }
    let amount = |b: &str, fy: &str, cat: ExpenditureCategory| -> f64 {
        bundle
            .expenditure
            .iter()
            .filter(|r| r.borough_code == b && r.fiscal_year == fy && r.category == cat)
            .map(|r| r.amount)
            .sum()
    };

    let mut rows = Vec::new();
    for p in &periods {
        let (lo, hi) = (year_start(p.calendar_year), year_start(p.calendar_year + 1));
        let mut weight: HashMap<(usize, usize), u64> = HashMap::new();
        for t in bundle.transitions.iter().filter(|t| t.t_origin >= lo && t.t_origin < hi) {
            *weight.entry((t.origin.get(), t.dest.get())).or_insert(0) += 1;
        }
        let nodes: HashSet<usize> = weight.keys().flat_map(|&(o, d)| [o, d]).collect();
        let mut nbrs: HashMap<usize, HashSet<usize>> = HashMap::new();
        for &(o, d) in weight.keys() {
            if o != d {
                nbrs.entry(o).or_default().insert(d);
                nbrs.entry(d).or_default().insert(o);
            }
        }
        let clustering = |v: usize| -> f64 {
            let Some(nb) = nbrs.get(&v) else { return 0.0 };
            let k = nb.len();
            if k < 2 {
                return 0.0;
            }
            let mut links = 0;
            for &a in nb {
                for &b in nb {
                    if a != b && weight.contains_key(&(a, b)) {
                        links += 1;
                    }
                }
            }
            links as f64 / (k * (k - 1)) as f64
        };

        // Cultural venue shares; city totals over assigned venues.
        let existing = |w: usize, cultural_only: bool| {
            bundle
                .venues
                .iter()
                .enumerate()
                .filter(|(i, v)| ward_of[*i] == Some(w) && v.created_at < hi && (!cultural_only || v.is_cultural))
                .count() as f64
        };
        let cv: Vec<f64> = (0..n_wards).map(|w| existing(w, true)).collect();
        let tv: Vec<f64> = (0..n_wards).map(|w| existing(w, false)).collect();
        let city_cv: f64 = (0..n_wards).filter(|&w| tv[w] > 0.0).map(|w| cv[w]).sum();
        let city_tv: f64 = tv.iter().sum();

        let fy = p.fiscal_year.as_str();
        let ward_share = |w: usize, cat| {
            let b = bundle.wards[w].borough_code.as_str();
            amount(b, fy, cat) / borough_members[b].len() as f64
        };
        let ce: Vec<f64> =
            (0..n_wards).map(|w| ExpenditureCategory::CULTURAL.iter().map(|&c| ward_share(w, c)).sum()).collect();
        let te: Vec<f64> = (0..n_wards).map(|w| ward_share(w, ExpenditureCategory::TotalServices)).collect();
        let city_ratio = ce.iter().sum::<f64>() / te.iter().sum::<f64>();

        for (w, ward) in bundle.wards.iter().enumerate() {
            let mine: Vec<usize> = nodes.iter().copied().filter(|&v| ward_of[v] == Some(w)).collect();
            let mut cl: Vec<f64> = mine.iter().map(|&v| clustering(v)).collect();
            cl.sort_by(f64::total_cmp);
            let (mut ic, mut oc) = (0, 0);
            for (&(o, d), &c) in &weight {
                let (wo, wd) = (ward_of[o], ward_of[d]);
                if wo.is_none() || wd.is_none() || wo == wd {
                    continue;
                }
                if wd == Some(w) {
                    ic += c;
                }
                if wo == Some(w) {
                    oc += c;
                }
            }
            let vc = bundle
                .venues
                .iter()
                .enumerate()
                .filter(|(i, v)| ward_of[*i] == Some(w) && v.created_at >= lo && v.created_at < hi)
                .count() as u64;
            let b = ward.borough_code.as_str();
            let pop: u64 = borough_members[b].iter().map(|&m| bundle.wards[m].population.unwrap_or(0)).sum();
            let per_capita = |cat| Some(amount(b, fy, cat) / pop as f64);
            rows.push(WardMetricsRow {
                ward_code: ward.ward_code.clone(),
                t: p.t,
                year: p.calendar_year,
                n: mine.len() as u64,
                ic,
                oc,
                ior: (oc > 0).then(|| ic as f64 / oc as f64),
                acc: mean(&cl),
                vc,
                vcd: vc as f64 / ward.area_km2,
                cva: (tv[w] > 0.0 && city_cv > 0.0).then(|| (cv[w] / tv[w]) / (city_cv / city_tv)),
                ce: Some(ce[w]),
                cea: Some((ce[w] / te[w]) / city_ratio),
                ceop: per_capita(ExpenditureCategory::OpenSpaces),
                cech: per_capita(ExpenditureCategory::CultureHeritage),
                cels: per_capita(ExpenditureCategory::LibraryService),
                cers: per_capita(ExpenditureCategory::RecreationSport),
                cet: per_capita(ExpenditureCategory::Tourism),
            });
        }
    }
    WardMetricsPanel::from_rows(periods, rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabelCounts {
    pub improved: usize,
    pub worsened: usize,
    pub unchanged: usize,
}

/// Improved/worsened counts among wards whose rank moved by more than
/// `threshold`, straight from the ledger.
pub fn oracle_label_counts(bundle: &SynthBundle, threshold: u32) -> LabelCounts {
    let mut c = LabelCounts { improved: 0, worsened: 0, unchanged: 0 };
    let deltas: BTreeMap<_, _> = bundle.ledger.delta_rank.iter().collect();
    for &d in deltas.values() {
        if *d == 0 {
            c.unchanged += 1;
        } else if d.unsigned_abs() > threshold as u64 {
            if *d > 0 {
                c.improved += 1;
            } else {
                c.worsened += 1;
            }
        }
    }
    c
}
