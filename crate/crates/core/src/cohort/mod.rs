//! Deprivation × cultural-spending cohorts and the ANOVA tests run on them.

mod anova;
pub mod special;

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

pub use anova::{
    mixed_anova, one_way_anova, pairwise_time_comparisons, AnovaError, AnovaResult, MixedAnova, PairwiseComparison,
    PanelObservation, SumsOfSquares,
};
pub use special::{betai, f_pvalue, ln_gamma, t_pvalue_two_sided};

use crate::ingest::{Edition, ImdTable};
use crate::metrics::{Variable, WardMetricsPanel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Group {
    /// Less deprived, CEA above 1.
    G1,
    /// More deprived, CEA at most 1.
    G2,
    /// More deprived, CEA above 1.
    G3,
    /// Less deprived, CEA at most 1.
    G4,
}

impl Group {
    pub const ALL: [Group; 4] = [Group::G1, Group::G2, Group::G3, Group::G4];

    pub fn as_str(self) -> &'static str {
        match self {
            Group::G1 => "G1",
            Group::G2 => "G2",
            Group::G3 => "G3",
            Group::G4 => "G4",
        }
    }
}

/// `cea_mean == 1` falls on the "less advantaged" side.
pub fn assign_group(more_deprived: bool, cea_mean: f64) -> Group {
    match (more_deprived, cea_mean > 1.0) {
        (false, true) => Group::G1,
        (true, false) => Group::G2,
        (true, true) => Group::G3,
        (false, false) => Group::G4,
    }
}

/// What "more deprived than the city average" means.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum DeprivationThreshold {
    /// IMD 2010 rank below the median rank (rank 1 = most deprived).
    #[default]
    MedianRank,
    /// IMD 2010 score above the mean score.
    MeanScore,
}

impl std::str::FromStr for DeprivationThreshold {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "median_rank" => Ok(DeprivationThreshold::MedianRank),
            "mean_score" => Ok(DeprivationThreshold::MeanScore),
            other => Err(format!("unknown deprivation threshold {other:?} (median_rank, mean_score)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cohort {
    pub ward_code: String,
    pub group: Group,
    pub imd_rank_2010: u32,
    pub imd_score_2010: f64,
    pub cea_mean: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CohortTable {
    /// Sorted by ward code.
    pub cohorts: Vec<Cohort>,
    pub excluded: BTreeMap<String, usize>,
}

impl CohortTable {
    pub fn group_of(&self, ward_code: &str) -> Option<Group> {
        self.cohorts.binary_search_by(|c| c.ward_code.as_str().cmp(ward_code)).ok().map(|i| self.cohorts[i].group)
    }

    pub fn sizes(&self) -> BTreeMap<Group, usize> {
        let mut m: BTreeMap<Group, usize> = Group::ALL.iter().map(|&g| (g, 0)).collect();
        for c in &self.cohorts {
            *m.get_mut(&c.group).unwrap() += 1;
        }
        m
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["ward_code", "group", "imd_rank_2010", "imd_score_2010", "cea_mean"])?;
        for c in &self.cohorts {
            w.write_record([
                c.ward_code.as_str(),
                c.group.as_str(),
                &c.imd_rank_2010.to_string(),
                &c.imd_score_2010.to_string(),
                &c.cea_mean.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Groups panel wards by IMD 2010 deprivation and mean CEA over all periods.
/// The deprivation threshold is taken over every panel ward with an IMD 2010
/// record; wards lacking either input are excluded and counted.
pub fn assign_cohorts(panel: &WardMetricsPanel, imd: &ImdTable, threshold: DeprivationThreshold) -> CohortTable {
    let imd10 = imd.edition(Edition::Imd2010);
    let known: Vec<(f64, u32)> = panel.ward_codes().iter().filter_map(|w| imd10.get(w.as_str()).copied()).collect();
    let is_more_deprived: Box<dyn Fn(f64, u32) -> bool> = match threshold {
        DeprivationThreshold::MedianRank => {
            let mut ranks: Vec<u32> = known.iter().map(|k| k.1).collect();
            ranks.sort_unstable();
            let median = match ranks.len() {
                0 => 0.0,
                n if n % 2 == 1 => ranks[n / 2] as f64,
                n => (ranks[n / 2 - 1] as f64 + ranks[n / 2] as f64) / 2.0,
            };
            Box::new(move |_, r| (r as f64) < median)
        }
        DeprivationThreshold::MeanScore => {
            let mean = known.iter().map(|k| k.0).sum::<f64>() / known.len().max(1) as f64;
            Box::new(move |s, _| s > mean)
        }
    };
    let mut table = CohortTable::default();
    for w in panel.ward_codes() {
        let Some(&(score, rank)) = imd10.get(w.as_str()) else {
            *table.excluded.entry("missing IMD 2010".into()).or_default() += 1;
            continue;
        };
        let cea: Option<Vec<f64>> = panel.ward_rows(w).unwrap().iter().map(|r| r.cea).collect();
        let Some(cea) = cea.filter(|c| !c.is_empty()) else {
            *table.excluded.entry("missing CEA".into()).or_default() += 1;
            continue;
        };
        let cea_mean = cea.iter().sum::<f64>() / cea.len() as f64;
        table.cohorts.push(Cohort {
            ward_code: w.clone(),
            group: assign_group(is_more_deprived(score, rank), cea_mean),
            imd_rank_2010: rank,
            imd_score_2010: score,
            cea_mean,
        });
    }
    table
}

/// Yearly observations of one variable for every cohort ward with a complete
/// series. Returns the observations and the number of wards dropped.
pub fn panel_observations(
    panel: &WardMetricsPanel,
    cohorts: &CohortTable,
    variable: Variable,
) -> (Vec<PanelObservation>, usize) {
    let mut out = Vec::new();
    let mut dropped = 0;
    for c in &cohorts.cohorts {
        let rows = panel.ward_rows(&c.ward_code).unwrap_or(&[]);
        let values: Option<Vec<f64>> = rows.iter().map(|r| variable.value(r).filter(|v| v.is_finite())).collect();
        match values {
            Some(vs) if !vs.is_empty() => out.extend(rows.iter().zip(vs).map(|(r, value)| PanelObservation {
                ward_code: c.ward_code.clone(),
                group: c.group,
                t: r.t,
                value,
            })),
            _ => dropped += 1,
        }
    }
    (out, dropped)
}

/// Per-group lists of each ward's mean over periods (the one-way input).
pub fn ward_means_by_group(obs: &[PanelObservation]) -> BTreeMap<Group, Vec<f64>> {
    let mut per_ward: BTreeMap<(&str, Group), (f64, usize)> = BTreeMap::new();
    for o in obs {
        let e = per_ward.entry((&o.ward_code, o.group)).or_default();
        e.0 += o.value;
        e.1 += 1;
    }
    let mut out: BTreeMap<Group, Vec<f64>> = BTreeMap::new();
    for ((_, g), (s, n)) in per_ward {
        out.entry(g).or_default().push(s / n as f64);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupMean {
    pub group: Option<Group>,
    pub t: usize,
    pub n: usize,
    /// `None` for an empty group.
    pub mean: Option<f64>,
}

/// Mean per (group, t) for all four groups, plus the all-ward mean per t
/// (with `group = None`).
pub fn group_means(obs: &[PanelObservation]) -> Vec<GroupMean> {
    let mut ts: Vec<usize> = obs.iter().map(|o| o.t).collect();
    ts.sort_unstable();
    ts.dedup();
    let mut acc: BTreeMap<(Option<Group>, usize), (f64, usize)> = BTreeMap::new();
    for o in obs {
        for key in [(Some(o.group), o.t), (None, o.t)] {
            let e = acc.entry(key).or_default();
            e.0 += o.value;
            e.1 += 1;
        }
    }
    let mut out = Vec::new();
    for g in Group::ALL.into_iter().map(Some).chain([None]) {
        for &t in &ts {
            let (s, n) = acc.get(&(g, t)).copied().unwrap_or_default();
            out.push(GroupMean { group: g, t, n, mean: (n > 0).then(|| s / n as f64) });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn group_table() {
        assert_eq!(assign_group(false, 1.3), Group::G1);
        assert_eq!(assign_group(true, 0.7), Group::G2);
        assert_eq!(assign_group(true, 1.01), Group::G3);
        assert_eq!(assign_group(false, 1.0), Group::G4);
        assert_eq!(assign_group(true, 1.0), Group::G2);
    }

    #[test]
    fn group_means_identity() {
        let obs: Vec<PanelObservation> = (0..20)
            .flat_map(|i| {
                (1..=3).map(move |t| PanelObservation {
                    ward_code: format!("w{i}"),
                    group: Group::ALL[i % 3],
                    t,
                    value: (i * t) as f64 * 0.5,
                })
            })
            .collect();
        let m = group_means(&obs);
        assert_eq!(m.len(), 15);
        let g4 = m.iter().find(|g| g.group == Some(Group::G4)).unwrap();
        assert_eq!((g4.n, g4.mean), (0, None));
        for t in 1..=3 {
            let all = m.iter().find(|g| g.group.is_none() && g.t == t).unwrap();
            let weighted: f64 =
                m.iter().filter(|g| g.group.is_some() && g.t == t && g.n > 0).map(|g| g.mean.unwrap() * g.n as f64).sum();
            assert!((all.mean.unwrap() - weighted / all.n as f64).abs() < 1e-9);
        }
    }
}
