use std::io::Write;

use serde::Serialize;

use super::formulas::{cultural_expenditure_advantage, cultural_venue_advantage, growth_rate, growth_rate_opt, ior};
use crate::graph::SnapshotGraph;
use crate::ingest::time::year_start;
use crate::ingest::{
    ExpenditureCategory, Period, PeriodMap, VenueTable, VenueWardIndex, WardExpenditure, WardIdx, WardSet,
};
use crate::par::{self, Exec};

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("expected {expected} snapshot graphs (one per period), got {found}")]
    SnapshotCount { expected: usize, found: usize },
    #[error("period t={t} is calendar year {expected} but its graph covers {found}")]
    SnapshotYear { t: usize, expected: i32, found: i32 },
    #[error("venue index covers {found} venues, venue table has {expected}")]
    IndexSize { expected: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WardMetricsRow {
    pub ward_code: String,
    pub t: usize,
    pub year: i32,
    /// Snapshot nodes located in the ward.
    pub n: u64,
    pub ic: u64,
    pub oc: u64,
    pub ior: Option<f64>,
    pub acc: f64,
    pub vc: u64,
    pub vcd: f64,
    pub cva: Option<f64>,
    /// Apportioned cultural expenditure (sum of the five sub-areas).
    pub ce: Option<f64>,
    pub cea: Option<f64>,
    pub ceop: Option<f64>,
    pub cech: Option<f64>,
    pub cels: Option<f64>,
    pub cers: Option<f64>,
    pub cet: Option<f64>,
}

/// Ratios of one period's values over the previous period's.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct GrowthRow {
    pub grn: Option<f64>,
    pub gri: Option<f64>,
    pub gro: Option<f64>,
    pub grior: Option<f64>,
    pub gracc: Option<f64>,
    pub grvc: Option<f64>,
}

impl GrowthRow {
    pub fn between(prev: &WardMetricsRow, curr: &WardMetricsRow) -> Self {
        GrowthRow {
            grn: growth_rate(prev.n as f64, curr.n as f64),
            gri: growth_rate(prev.ic as f64, curr.ic as f64),
            gro: growth_rate(prev.oc as f64, curr.oc as f64),
            grior: growth_rate_opt(prev.ior, curr.ior),
            gracc: growth_rate(prev.acc, curr.acc),
            grvc: growth_rate(prev.vc as f64, curr.vc as f64),
        }
    }
}

/// Panel variables addressable by name (ANOVA, reports).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Variable {
    N,
    Ic,
    Oc,
    Ior,
    Acc,
    Vc,
    Vcd,
    Cva,
    Ce,
    Cea,
    Ceop,
    Cech,
    Cels,
    Cers,
    Cet,
}

impl Variable {
    pub const ALL: [Variable; 15] = [
        Variable::N,
        Variable::Ic,
        Variable::Oc,
        Variable::Ior,
        Variable::Acc,
        Variable::Vc,
        Variable::Vcd,
        Variable::Cva,
        Variable::Ce,
        Variable::Cea,
        Variable::Ceop,
        Variable::Cech,
        Variable::Cels,
        Variable::Cers,
        Variable::Cet,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variable::N => "N",
            Variable::Ic => "IC",
            Variable::Oc => "OC",
            Variable::Ior => "IOR",
            Variable::Acc => "ACC",
            Variable::Vc => "VC",
            Variable::Vcd => "VCD",
            Variable::Cva => "CVA",
            Variable::Ce => "CE",
            Variable::Cea => "CEA",
            Variable::Ceop => "CEOP",
            Variable::Cech => "CECH",
            Variable::Cels => "CELS",
            Variable::Cers => "CERS",
            Variable::Cet => "CET",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Variable::ALL.into_iter().find(|v| v.name().eq_ignore_ascii_case(name.trim()))
    }

    pub fn value(self, r: &WardMetricsRow) -> Option<f64> {
        match self {
            Variable::N => Some(r.n as f64),
            Variable::Ic => Some(r.ic as f64),
            Variable::Oc => Some(r.oc as f64),
            Variable::Ior => r.ior,
            Variable::Acc => Some(r.acc),
            Variable::Vc => Some(r.vc as f64),
            Variable::Vcd => Some(r.vcd),
            Variable::Cva => r.cva,
            Variable::Ce => r.ce,
            Variable::Cea => r.cea,
            Variable::Ceop => r.ceop,
            Variable::Cech => r.cech,
            Variable::Cels => r.cels,
            Variable::Cers => r.cers,
            Variable::Cet => r.cet,
        }
    }
}

/// Per-ward, per-period metrics. Every ward appears in every period.
#[derive(Debug, Clone, PartialEq)]
pub struct WardMetricsPanel {
    periods: Vec<Period>,
    ward_codes: Vec<String>,
    // [ward * T + (t - 1)]
    rows: Vec<WardMetricsRow>,
    // [ward * (T - 1) + (t - 2)], t >= 2
    growth: Vec<GrowthRow>,
}

impl WardMetricsPanel {
    /// Assembles a panel from rows given in any order. Growth is derived from
    /// consecutive periods. Panics if a (ward, t) cell is missing or repeated.
    pub fn from_rows(periods: Vec<Period>, mut rows: Vec<WardMetricsRow>) -> Self {
        let t_len = periods.len();
        rows.sort_by(|a, b| a.ward_code.cmp(&b.ward_code).then(a.t.cmp(&b.t)));
        let mut ward_codes: Vec<String> = rows.iter().map(|r| r.ward_code.clone()).collect();
        ward_codes.dedup();
        assert_eq!(rows.len(), ward_codes.len() * t_len, "panel must have one row per (ward, period)");
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.t, i % t_len + 1, "ward {} has a missing or repeated period", r.ward_code);
        }
        let growth = rows
            .chunks(t_len.max(1))
            .flat_map(|w| w.windows(2).map(|p| GrowthRow::between(&p[0], &p[1])))
            .collect();
        WardMetricsPanel { periods, ward_codes, rows, growth }
    }

    pub fn periods(&self) -> &[Period] {
        &self.periods
    }

    pub fn ward_codes(&self) -> &[String] {
        &self.ward_codes
    }

    pub fn rows(&self) -> &[WardMetricsRow] {
        &self.rows
    }

    fn ward_pos(&self, ward_code: &str) -> Option<usize> {
        self.ward_codes.binary_search_by(|c| c.as_str().cmp(ward_code)).ok()
    }

    pub fn ward_rows(&self, ward_code: &str) -> Option<&[WardMetricsRow]> {
        let t = self.periods.len();
        self.ward_pos(ward_code).map(|w| &self.rows[w * t..(w + 1) * t])
    }

    pub fn get(&self, ward_code: &str, t: usize) -> Option<&WardMetricsRow> {
        self.ward_rows(ward_code)?.get(t.checked_sub(1)?)
    }

    /// Growth into period `t` from `t - 1`; `None` for `t = 1`.
    pub fn growth(&self, ward_code: &str, t: usize) -> Option<&GrowthRow> {
        let steps = self.periods.len().saturating_sub(1);
        let w = self.ward_pos(ward_code)?;
        (t >= 2 && t - 2 < steps).then(|| &self.growth[w * steps + t - 2])
    }

    /// Last period over first period, the endpoint growth used as features.
    pub fn endpoint_growth(&self, ward_code: &str) -> Option<GrowthRow> {
        let rows = self.ward_rows(ward_code)?;
        (rows.len() >= 2).then(|| GrowthRow::between(&rows[0], &rows[rows.len() - 1]))
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["ward_code", "t", "year"];
        header.extend(Variable::ALL.iter().map(|v| v.name()));
        header.extend(["GRN", "GRI", "GRO", "GRIOR", "GRACC", "GRVC"]);
        w.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![r.ward_code.clone(), r.t.to_string(), r.year.to_string()];
            rec.extend(Variable::ALL.iter().map(|v| fmt_opt(v.value(r))));
            let empty = GrowthRow::default();
            let g = self.growth(&r.ward_code, r.t).unwrap_or(&empty);
            rec.extend([g.grn, g.gri, g.gro, g.grior, g.gracc, g.grvc].into_iter().map(fmt_opt));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Cross-ward in/out weight for every ward: `(IC, OC)` indexed by ward.
/// Intra-ward edges and edges with an unassigned endpoint are skipped.
pub fn all_ward_centralities(graph: &SnapshotGraph, index: &VenueWardIndex) -> Vec<(u64, u64)> {
    let mut out = vec![(0u64, 0u64); index.n_wards()];
    for (o, d, w) in graph.edges() {
        if let (Some(wo), Some(wd)) = (index.ward_of(o), index.ward_of(d)) {
            if wo != wd {
                out[wd.get()].0 += w as u64;
                out[wo.get()].1 += w as u64;
            }
        }
    }
    out
}

/// `(IC, OC)` for one ward.
pub fn ward_centralities(graph: &SnapshotGraph, index: &VenueWardIndex, ward: WardIdx) -> (u64, u64) {
    let (mut ic, mut oc) = (0, 0);
    for &v in index.venues_in(ward) {
        for (o, w) in graph.in_edges(v) {
            if index.ward_of(o).is_some_and(|wo| wo != ward) {
                ic += w as u64;
            }
        }
        for (d, w) in graph.out_edges(v) {
            if index.ward_of(d).is_some_and(|wd| wd != ward) {
                oc += w as u64;
            }
        }
    }
    (ic, oc)
}

/// Mean local clustering (whole-graph neighbourhoods) of the ward's snapshot
/// nodes; 0 when the ward has none. `clustering` is aligned with
/// `graph.nodes()`.
pub fn ward_acc(graph: &SnapshotGraph, clustering: &[f64], index: &VenueWardIndex, ward: WardIdx) -> f64 {
    let (sum, n) = graph
        .nodes()
        .iter()
        .zip(clustering)
        .filter(|(v, _)| index.ward_of(**v) == Some(ward))
        .fold((0.0, 0usize), |(s, n), (_, c)| (s + c, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Venues created in calendar `year` inside the ward and that count per km².
pub fn venue_creation(
    venues: &VenueTable,
    index: &VenueWardIndex,
    year: i32,
    ward: WardIdx,
    area_km2: f64,
) -> (u64, f64) {
    let (lo, hi) = (year_start(year), year_start(year + 1));
    let vc = index.venues_in(ward).iter().filter(|&&v| (lo..hi).contains(&venues.get(v).created_at)).count() as u64;
    (vc, vc as f64 / area_km2)
}

pub struct PanelInputs<'a> {
    pub periods: &'a PeriodMap,
    /// One graph per period, in period order.
    pub graphs: &'a [SnapshotGraph],
    /// Optional precomputed clustering per graph, aligned with its nodes.
    pub clustering: Option<&'a [Vec<f64>]>,
    pub venues: &'a VenueTable,
    pub wards: &'a WardSet,
    pub index: &'a VenueWardIndex,
    pub expenditure: &'a WardExpenditure,
}

pub fn build_metrics_panel(inputs: &PanelInputs) -> Result<WardMetricsPanel, MetricsError> {
    build_metrics_panel_with(Exec::default(), inputs)
}

pub fn build_metrics_panel_with(exec: Exec, inputs: &PanelInputs) -> Result<WardMetricsPanel, MetricsError> {
    let PanelInputs { periods, graphs, clustering, venues, wards, index, expenditure } = *inputs;
    if graphs.len() != periods.len() {
        return Err(MetricsError::SnapshotCount { expected: periods.len(), found: graphs.len() });
    }
    if index.assignment().len() != venues.len() {
        return Err(MetricsError::IndexSize { expected: venues.len(), found: index.assignment().len() });
    }
    for (p, g) in periods.periods().iter().zip(graphs) {
        if g.year() != p.calendar_year {
            return Err(MetricsError::SnapshotYear { t: p.t, expected: p.calendar_year, found: g.year() });
        }
    }
    let n_wards = wards.len();
    let mut rows = Vec::with_capacity(n_wards * periods.len());
    for (k, (p, g)) in periods.periods().iter().zip(graphs).enumerate() {
        let owned;
        let cl: &[f64] = match clustering {
            Some(c) => &c[k],
            None => {
                owned = g.all_local_clustering_with(exec);
                &owned
            }
        };
        let centrality = all_ward_centralities(g, index);
        let mut n = vec![0u64; n_wards];
        let mut cl_sum = vec![0.0f64; n_wards];
        for (&v, &c) in g.nodes().iter().zip(cl) {
            if let Some(w) = index.ward_of(v) {
                n[w.get()] += 1;
                cl_sum[w.get()] += c;
            }
        }
        // Venue counts: created this year, and existing by year end.
        let (lo, hi) = (year_start(p.calendar_year), year_start(p.calendar_year + 1));
        let mut vc = vec![0u64; n_wards];
        let mut tv = vec![0.0f64; n_wards];
        let mut cv = vec![0.0f64; n_wards];
        for (i, v) in venues.venues().iter().enumerate() {
            let Some(w) = index.assignment()[i] else { continue };
            if v.created_at >= lo && v.created_at < hi {
                vc[w.get()] += 1;
            }
            if v.created_at < hi {
                tv[w.get()] += 1.0;
                if v.is_cultural {
                    cv[w.get()] += 1.0;
                }
            }
        }
        let cva = cultural_venue_advantage(
            &cv.iter().map(|&x| Some(x)).collect::<Vec<_>>(),
            &tv.iter().map(|&x| Some(x)).collect::<Vec<_>>(),
        );
        let fy = p.fiscal_year.as_str();
        let ce: Vec<Option<f64>> = (0..n_wards).map(|w| expenditure.cultural(WardIdx(w as u32), fy)).collect();
        let te: Vec<Option<f64>> = (0..n_wards).map(|w| expenditure.total(WardIdx(w as u32), fy)).collect();
        let cea = cultural_expenditure_advantage(&ce, &te);
        let per_capita = |w: usize, c| expenditure.get(WardIdx(w as u32), fy, c).and_then(|a| a.per_capita);

        rows.extend(par::map_range(exec, n_wards, |w| {
            let ward = wards.get(WardIdx(w as u32));
            let (ic, oc) = centrality[w];
            WardMetricsRow {
                ward_code: ward.ward_code.clone(),
                t: p.t,
                year: p.calendar_year,
                n: n[w],
                ic,
                oc,
                ior: ior(ic as f64, oc as f64),
                acc: if n[w] == 0 { 0.0 } else { cl_sum[w] / n[w] as f64 },
                vc: vc[w],
                vcd: vc[w] as f64 / ward.area_km2,
                cva: cva[w],
                ce: ce[w],
                cea: cea[w],
                ceop: per_capita(w, ExpenditureCategory::OpenSpaces),
                cech: per_capita(w, ExpenditureCategory::CultureHeritage),
                cels: per_capita(w, ExpenditureCategory::LibraryService),
                cers: per_capita(w, ExpenditureCategory::RecreationSport),
                cet: per_capita(w, ExpenditureCategory::Tourism),
            }
        }));
    }
    Ok(WardMetricsPanel::from_rows(periods.periods().to_vec(), rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::LatLon;
    use crate::graph::build_snapshot;
    use crate::ingest::{
        align_periods, apportion_expenditure, ExpenditureRecord, ExpenditureTable, PeriodConfig, Transition,
        TransitionLog, Venue, VenueIdx, Ward,
    };

    fn square(lat0: f64, lon0: f64) -> Vec<crate::geo::Polygon> {
        let (a, b) = (lat0 + 0.01, lon0 + 0.01);
        vec![vec![vec![
            LatLon::new(lat0, lon0),
            LatLon::new(lat0, b),
            LatLon::new(a, b),
            LatLon::new(a, lon0),
            LatLon::new(lat0, lon0),
        ]]]
    }

    fn venue(id: usize, created_year: i32, cultural: bool) -> Venue {
        Venue {
            id: format!("v{id}"),
            lat: 0.0,
            lon: 0.0,
            category: String::new(),
            parent_category: String::new(),
            is_cultural: cultural,
            created_at: year_start(created_year) + 100,
            user_count: 1,
        }
    }

    fn t(o: u32, d: u32, year: i32) -> Transition {
        let s = year_start(year) + 10;
        Transition { origin: VenueIdx(o), dest: VenueIdx(d), t_origin: s, t_dest: s + 60 }
    }

    #[test]
    fn single_cross_edge() {
        // venues 0,1 in A; 2 in B
        let index = VenueWardIndex::from_assignment(vec![Some(WardIdx(0)), Some(WardIdx(0)), Some(WardIdx(1))], 2);
        let venues = VenueTable::from_venues((0..3).map(|i| venue(i, 2009, false)));
        let log = TransitionLog::from_transitions([t(0, 2, 2011), t(0, 2, 2011), t(0, 2, 2011), t(0, 1, 2011)], &venues);
        let g = build_snapshot(&log, 3, 2011);
        assert_eq!(ward_centralities(&g, &index, WardIdx(0)), (0, 3));
        assert_eq!(ward_centralities(&g, &index, WardIdx(1)), (3, 0));
        assert_eq!(all_ward_centralities(&g, &index), vec![(0, 3), (3, 0)]);

        let intra = TransitionLog::from_transitions([t(0, 1, 2011), t(1, 0, 2011)], &venues);
        let g = build_snapshot(&intra, 3, 2011);
        assert_eq!(all_ward_centralities(&g, &index), vec![(0, 0), (0, 0)]);
    }

    #[test]
    fn acc_cases() {
        let venues = VenueTable::from_venues((0..4).map(|i| venue(i, 2009, false)));
        // star centred on 0: leaves 1..3, no leaf links
        let star = TransitionLog::from_transitions([t(0, 1, 2011), t(0, 2, 2011), t(3, 0, 2011)], &venues);
        let g = build_snapshot(&star, 4, 2011);
        let cl = g.all_local_clustering();
        let index = VenueWardIndex::from_assignment(vec![Some(WardIdx(0)), None, None, None], 1);
        assert_eq!(ward_acc(&g, &cl, &index, WardIdx(0)), 0.0);
        // bidirectional triangle 0,1,2
        let tri: Vec<_> = [(0, 1), (1, 0), (1, 2), (2, 1), (0, 2), (2, 0)].iter().map(|&(a, b)| t(a, b, 2011)).collect();
        let g = build_snapshot(&TransitionLog::from_transitions(tri, &venues), 4, 2011);
        let cl = g.all_local_clustering();
        assert_eq!(ward_acc(&g, &cl, &index, WardIdx(0)), 1.0);
        let empty = VenueWardIndex::from_assignment(vec![None; 4], 1);
        assert_eq!(ward_acc(&g, &cl, &empty, WardIdx(0)), 0.0);
    }

    #[test]
    fn creation_density() {
        let venues = VenueTable::from_venues((0..12).map(|i| venue(i, if i < 10 { 2012 } else { 2011 }, false)));
        let index = VenueWardIndex::from_assignment(vec![Some(WardIdx(0)); 12], 1);
        assert_eq!(venue_creation(&venues, &index, 2012, WardIdx(0), 2.0), (10, 5.0));
        assert_eq!(venue_creation(&venues, &index, 2013, WardIdx(0), 2.0), (0, 0.0));
    }

    fn tiny_city() -> (PeriodMap, VenueTable, WardSet, VenueWardIndex, WardExpenditure, TransitionLog) {
        let periods = align_periods(&PeriodConfig::default()).unwrap();
        let wards = WardSet::from_wards([
            Ward::new("A", "B1", "S", square(0.0, 0.0), 2.0, Some(100)),
            Ward::new("B", "B1", "S", square(0.0, 0.01), 1.0, Some(100)),
            Ward::new("C", "B2", "S", square(0.0, 0.02), 1.0, Some(50)),
        ]);
        let venues = VenueTable::from_venues(vec![
            venue(0, 2009, true),
            venue(1, 2011, false),
            venue(2, 2012, true),
            venue(3, 2009, false),
            venue(4, 2013, false),
        ]);
        let index = VenueWardIndex::from_assignment(
            vec![Some(WardIdx(0)), Some(WardIdx(0)), Some(WardIdx(1)), Some(WardIdx(1)), None],
            3,
        );
        let mut recs = Vec::new();
        for fy in ["2010/11", "2011/12", "2012/13"] {
            for (b, scale) in [("B1", 1.0), ("B2", 2.0)] {
                for c in ExpenditureCategory::ALL {
                    let amount = if c == ExpenditureCategory::TotalServices { 1000.0 } else { 10.0 * scale };
                    recs.push(ExpenditureRecord { borough_code: b.into(), fiscal_year: fy.into(), category: c, amount });
                }
            }
        }
        let exp = apportion_expenditure(&ExpenditureTable::from_records(recs), &wards).unwrap();
        let log = TransitionLog::from_transitions(
            vec![t(0, 3, 2011), t(3, 0, 2011), t(1, 0, 2011), t(0, 3, 2012), t(0, 3, 2012), t(2, 4, 2013)],
            &venues,
        );
        (periods, venues, wards, index, exp, log)
    }

    #[test]
    fn panel_rows_and_growth() {
        let (periods, venues, wards, index, exp, log) = tiny_city();
        let graphs: Vec<_> = periods.calendar_years().iter().map(|&y| build_snapshot(&log, venues.len(), y)).collect();
        let panel = build_metrics_panel(&PanelInputs {
            periods: &periods,
            graphs: &graphs,
            clustering: None,
            venues: &venues,
            wards: &wards,
            index: &index,
            expenditure: &exp,
        })
        .unwrap();
        assert_eq!(panel.rows().len(), 9);
        let a1 = panel.get("A", 1).unwrap();
        assert_eq!((a1.n, a1.ic, a1.oc, a1.vc), (2, 1, 1, 1));
        assert_eq!(a1.ior, Some(1.0));
        assert_eq!(a1.vcd, 0.5);
        let a2 = panel.get("A", 2).unwrap();
        assert_eq!((a2.n, a2.ic, a2.oc), (1, 0, 2));
        assert_eq!(panel.growth("A", 2).unwrap().gro, Some(2.0));
        assert_eq!(panel.growth("A", 2).unwrap().grn, Some(0.5));
        assert!(panel.growth("A", 1).is_none());
        // ward C never appears in any graph
        let c = panel.get("C", 3).unwrap();
        assert_eq!((c.n, c.ic, c.oc, c.ior), (0, 0, 0, None));
        assert_eq!(panel.growth("C", 3).unwrap().grn, None);
        // B1 spends 50 on culture over 1000; B2 spends 100 over 1000.
        let (ca, cc) = (panel.get("A", 1).unwrap().cea.unwrap(), panel.get("C", 1).unwrap().cea.unwrap());
        assert!((cc / ca - 2.0).abs() < 1e-12);
        assert_eq!(panel.get("C", 1).unwrap().ceop, Some(20.0 / 50.0));
        // CVA in 2011: A has 1 of 2 cultural, B has 0 of 1, city 1/3
        assert!((a1.cva.unwrap() - 1.5).abs() < 1e-12);

        let mut buf = Vec::new();
        panel.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 10);
        assert!(text.lines().nth(1).unwrap().ends_with(",,,,,,"));
        assert_eq!(panel.endpoint_growth("A").unwrap().gro, Some(0.0));
    }

    #[test]
    fn rejects_mismatched_snapshots() {
        let (periods, venues, wards, index, exp, log) = tiny_city();
        let graphs = vec![build_snapshot(&log, venues.len(), 2011)];
        let inputs = PanelInputs {
            periods: &periods,
            graphs: &graphs,
            clustering: None,
            venues: &venues,
            wards: &wards,
            index: &index,
            expenditure: &exp,
        };
        assert!(matches!(build_metrics_panel(&inputs), Err(MetricsError::SnapshotCount { .. })));
    }
}
