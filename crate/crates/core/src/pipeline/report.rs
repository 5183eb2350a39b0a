//! Plot-ready tables: the CEA/CVA scatter and per-group yearly means.

use std::io::Write;

use serde::Serialize;

use super::fmt_opt;
use crate::cohort::{group_means, panel_observations, CohortTable, Group};
use crate::ingest::{Edition, ImdTable};
use crate::metrics::{Variable, WardMetricsPanel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Quadrant {
    #[serde(rename = "high-CEA/high-CVA")]
    HighHigh,
    #[serde(rename = "high-CEA/low-CVA")]
    HighLow,
    #[serde(rename = "low-CEA/high-CVA")]
    LowHigh,
    #[serde(rename = "low-CEA/low-CVA")]
    LowLow,
}

impl Quadrant {
    /// A value of exactly 1 counts as low.
    pub fn of(cea: f64, cva: f64) -> Self {
        match (cea > 1.0, cva > 1.0) {
            (true, true) => Quadrant::HighHigh,
            (true, false) => Quadrant::HighLow,
            (false, true) => Quadrant::LowHigh,
            (false, false) => Quadrant::LowLow,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Quadrant::HighHigh => "high-CEA/high-CVA",
            Quadrant::HighLow => "high-CEA/low-CVA",
            Quadrant::LowHigh => "low-CEA/high-CVA",
            Quadrant::LowLow => "low-CEA/low-CVA",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScatterRow {
    pub area: String,
    pub cea: f64,
    pub cva: f64,
    pub imd_score: f64,
    pub quadrant: Quadrant,
}

fn period_mean(panel: &WardMetricsPanel, ward: &str, v: Variable) -> Option<f64> {
    let rows = panel.ward_rows(ward)?;
    let vals: Option<Vec<f64>> = rows.iter().map(|r| v.value(r)).collect();
    vals.filter(|v| !v.is_empty()).map(|v| v.iter().sum::<f64>() / v.len() as f64)
}

/// One row per ward with period-mean CEA and CVA and an IMD 2010 score.
pub fn scatter_rows(panel: &WardMetricsPanel, imd: &ImdTable) -> Vec<ScatterRow> {
    let imd10 = imd.edition(Edition::Imd2010);
    panel
        .ward_codes()
        .iter()
        .filter_map(|w| {
            let cea = period_mean(panel, w, Variable::Cea)?;
            let cva = period_mean(panel, w, Variable::Cva)?;
            let &(imd_score, _) = imd10.get(w.as_str())?;
            Some(ScatterRow { area: w.clone(), cea, cva, imd_score, quadrant: Quadrant::of(cea, cva) })
        })
        .collect()
}

pub fn emit_scatter_data<W: Write>(panel: &WardMetricsPanel, imd: &ImdTable, out: W) -> csv::Result<usize> {
    let rows = scatter_rows(panel, imd);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["area", "CEA", "CVA", "imd_score", "quadrant"])?;
    for r in &rows {
        w.write_record([&r.area, &r.cea.to_string(), &r.cva.to_string(), &r.imd_score.to_string(), r.quadrant.as_str()])?;
    }
    w.flush()?;
    Ok(rows.len())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupMeanRow {
    pub group: Group,
    pub variable: &'static str,
    pub t: usize,
    pub year: i32,
    pub n: usize,
    pub mean: Option<f64>,
    pub all_ward_mean: Option<f64>,
    pub empty_group: bool,
}

/// Four groups times every period for each variable.
pub fn group_mean_rows(panel: &WardMetricsPanel, cohorts: &CohortTable, variables: &[Variable]) -> Vec<GroupMeanRow> {
    let mut out = Vec::new();
    for &v in variables {
        let (obs, _) = panel_observations(panel, cohorts, v);
        let means = group_means(&obs);
        for p in panel.periods() {
            let all = means.iter().find(|m| m.group.is_none() && m.t == p.t).and_then(|m| m.mean);
            for g in Group::ALL {
                let m = means.iter().find(|m| m.group == Some(g) && m.t == p.t);
                let (n, mean) = m.map_or((0, None), |m| (m.n, m.mean));
                out.push(GroupMeanRow {
                    group: g,
                    variable: v.name(),
                    t: p.t,
                    year: p.calendar_year,
                    n,
                    mean,
                    all_ward_mean: all,
                    empty_group: n == 0,
                });
            }
        }
    }
    out
}

pub fn emit_group_means<W: Write>(
    panel: &WardMetricsPanel,
    cohorts: &CohortTable,
    variables: &[Variable],
    out: W,
) -> csv::Result<usize> {
    let rows = group_mean_rows(panel, cohorts, variables);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["group", "variable", "t", "year", "n", "mean", "all_ward_mean", "empty_group"])?;
    for r in &rows {
        w.write_record([
            r.group.as_str(),
            r.variable,
            &r.t.to_string(),
            &r.year.to_string(),
            &r.n.to_string(),
            &fmt_opt(r.mean),
            &fmt_opt(r.all_ward_mean),
            if r.empty_group { "true" } else { "false" },
        ])?;
    }
    w.flush()?;
    Ok(rows.len())
}
