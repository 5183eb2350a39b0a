use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::special::{f_pvalue, t_pvalue_two_sided};
use super::Group;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnovaError {
    #[error("need at least two groups with two observations each")]
    TooFewGroups,
    #[error("need at least two time points and more subjects than groups")]
    TooFewObservations,
    #[error("unbalanced panel; wards without a complete series: {}", .0.join(", "))]
    Unbalanced(Vec<String>),
    #[error("ward {0} has more than one observation for t={1}")]
    Duplicate(String, usize),
    #[error("ward {0} is assigned to more than one group")]
    GroupConflict(String),
    #[error("non-finite observation for ward {0}")]
    NonFinite(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnovaResult {
    pub effect: String,
    /// `+inf` when the error mean square is zero but the effect is not.
    pub f: f64,
    pub df1: usize,
    pub df2: usize,
    pub p: f64,
    pub degenerate: bool,
}

impl AnovaResult {
    fn from_ms(effect: &str, ms_effect: f64, ms_error: f64, df1: usize, df2: usize) -> Self {
        // Relative guard so that rounding noise on an exactly-zero error term
        // is not read as a real (if tiny) denominator.
        let scale = ms_effect.abs().max(ms_error.abs()).max(f64::MIN_POSITIVE);
        let (f, p, degenerate) = if ms_error <= 1e-13 * scale {
            if ms_effect <= 1e-13 * scale {
                (0.0, 1.0, false)
            } else {
                (f64::INFINITY, 0.0, true)
            }
        } else {
            let f = (ms_effect / ms_error).max(0.0);
            (f, f_pvalue(f, df1 as f64, df2 as f64).expect("finite F"), false)
        };
        AnovaResult { effect: effect.to_string(), f, df1, df2, p, degenerate }
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Independent one-way ANOVA over groups of observations.
pub fn one_way_anova(groups: &[Vec<f64>]) -> Result<AnovaResult, AnovaError> {
    let groups: Vec<&Vec<f64>> = groups.iter().filter(|g| !g.is_empty()).collect();
    if groups.len() < 2 || groups.iter().any(|g| g.len() < 2) {
        return Err(AnovaError::TooFewGroups);
    }
    let n: usize = groups.iter().map(|g| g.len()).sum();
    let k = groups.len();
    let grand = groups.iter().flat_map(|g| g.iter()).sum::<f64>() / n as f64;
    let mut ss_between = 0.0;
    let mut ss_within = 0.0;
    for g in &groups {
        let m = mean(g);
        ss_between += g.len() as f64 * (m - grand).powi(2);
        ss_within += g.iter().map(|x| (x - m).powi(2)).sum::<f64>();
    }
    let (df1, df2) = (k - 1, n - k);
    Ok(AnovaResult::from_ms("group", ss_between / df1 as f64, ss_within / df2 as f64, df1, df2))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PanelObservation {
    pub ward_code: String,
    pub group: Group,
    pub t: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SumsOfSquares {
    pub total: f64,
    pub group: f64,
    pub subjects: f64,
    pub time: f64,
    pub interaction: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixedAnova {
    pub group: AnovaResult,
    pub time: AnovaResult,
    pub interaction: AnovaResult,
    pub ss: SumsOfSquares,
    pub subjects: usize,
    pub groups: usize,
    pub times: Vec<usize>,
}

/// Balanced layout: subjects sorted by (group, ward) with values per time.
pub(crate) struct Balanced {
    pub groups: Vec<Group>,
    pub subject_group: Vec<usize>,
    pub times: Vec<usize>,
    // [subject][time]
    pub y: Vec<Vec<f64>>,
}

pub(crate) fn balance(obs: &[PanelObservation]) -> Result<Balanced, AnovaError> {
    let times: Vec<usize> = obs.iter().map(|o| o.t).collect::<BTreeSet<_>>().into_iter().collect();
    let mut by_ward: BTreeMap<&str, (Group, BTreeMap<usize, f64>)> = BTreeMap::new();
    for o in obs {
        if !o.value.is_finite() {
            return Err(AnovaError::NonFinite(o.ward_code.clone()));
        }
        let e = by_ward.entry(&o.ward_code).or_insert((o.group, BTreeMap::new()));
        if e.0 != o.group {
            return Err(AnovaError::GroupConflict(o.ward_code.clone()));
        }
        if e.1.insert(o.t, o.value).is_some() {
            return Err(AnovaError::Duplicate(o.ward_code.clone(), o.t));
        }
    }
    let incomplete: Vec<String> =
        by_ward.iter().filter(|(_, (_, s))| s.len() != times.len()).map(|(w, _)| w.to_string()).collect();
    if !incomplete.is_empty() {
        return Err(AnovaError::Unbalanced(incomplete));
    }
    let groups: Vec<Group> = by_ward.values().map(|(g, _)| *g).collect::<BTreeSet<_>>().into_iter().collect();
    let mut subjects: Vec<(Group, &str, Vec<f64>)> =
        by_ward.into_iter().map(|(w, (g, s))| (g, w, s.into_values().collect())).collect();
    subjects.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(b.1)));
    Ok(Balanced {
        subject_group: subjects.iter().map(|s| groups.binary_search(&s.0).unwrap()).collect(),
        y: subjects.into_iter().map(|s| s.2).collect(),
        groups,
        times,
    })
}

/// Factorial repeated-measures ANOVA: one between-subject factor (group) and
/// one within-subject factor (time), no sphericity correction.
pub fn mixed_anova(obs: &[PanelObservation]) -> Result<MixedAnova, AnovaError> {
    let b = balance(obs)?;
    let (n, g, tn) = (b.y.len(), b.groups.len(), b.times.len());
    if g < 2 {
        return Err(AnovaError::TooFewGroups);
    }
    if tn < 2 || n <= g {
        return Err(AnovaError::TooFewObservations);
    }
    let nf = n as f64;
    let tf = tn as f64;
    let grand = b.y.iter().flatten().sum::<f64>() / (nf * tf);
    let mut n_g = vec![0usize; g];
    let mut cell = vec![vec![0.0; tn]; g];
    for (s, row) in b.y.iter().enumerate() {
        n_g[b.subject_group[s]] += 1;
        for (t, &v) in row.iter().enumerate() {
            cell[b.subject_group[s]][t] += v;
        }
    }
    for (gi, c) in cell.iter_mut().enumerate() {
        c.iter_mut().for_each(|x| *x /= n_g[gi] as f64);
    }
    let group_mean: Vec<f64> = cell.iter().map(|c| mean(c)).collect();
    let time_mean: Vec<f64> = (0..tn).map(|t| b.y.iter().map(|r| r[t]).sum::<f64>() / nf).collect();
    let subj_mean: Vec<f64> = b.y.iter().map(|r| mean(r)).collect();

    let total: f64 = b.y.iter().flatten().map(|v| (v - grand).powi(2)).sum();
    let ss_group: f64 = (0..g).map(|gi| n_g[gi] as f64 * tf * (group_mean[gi] - grand).powi(2)).sum();
    let ss_subj: f64 = (0..n).map(|s| tf * (subj_mean[s] - group_mean[b.subject_group[s]]).powi(2)).sum();
    let ss_time: f64 = time_mean.iter().map(|m| nf * (m - grand).powi(2)).sum();
    let mut ss_int = 0.0;
    for gi in 0..g {
        for t in 0..tn {
            ss_int += n_g[gi] as f64 * (cell[gi][t] - group_mean[gi] - time_mean[t] + grand).powi(2);
        }
    }
    let mut ss_err = 0.0;
    for (s, row) in b.y.iter().enumerate() {
        let gi = b.subject_group[s];
        for (t, &v) in row.iter().enumerate() {
            ss_err += (v - subj_mean[s] - cell[gi][t] + group_mean[gi]).powi(2);
        }
    }

    let df_g = g - 1;
    let df_s = n - g;
    let df_t = tn - 1;
    let df_i = df_g * df_t;
    let df_e = df_t * df_s;
    let ms_err = ss_err / df_e as f64;
    Ok(MixedAnova {
        group: AnovaResult::from_ms("group", ss_group / df_g as f64, ss_subj / df_s as f64, df_g, df_s),
        time: AnovaResult::from_ms("time", ss_time / df_t as f64, ms_err, df_t, df_e),
        interaction: AnovaResult::from_ms("group_x_time", ss_int / df_i as f64, ms_err, df_i, df_e),
        ss: SumsOfSquares {
            total,
            group: ss_group,
            subjects: ss_subj,
            time: ss_time,
            interaction: ss_int,
            error: ss_err,
        },
        subjects: n,
        groups: g,
        times: b.times,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairwiseComparison {
    pub t_a: usize,
    pub t_b: usize,
    pub mean_diff: f64,
    /// `±inf` when all differences are equal and nonzero.
    pub t_stat: f64,
    pub df: usize,
    pub p_uncorrected: f64,
    /// Bonferroni over all pairs, capped at 1.
    pub p: f64,
    pub degenerate: bool,
}

/// Paired t-tests between every pair of time points, over all subjects.
pub fn pairwise_time_comparisons(obs: &[PanelObservation]) -> Result<Vec<PairwiseComparison>, AnovaError> {
    let b = balance(obs)?;
    let (n, tn) = (b.y.len(), b.times.len());
    if n < 2 || tn < 2 {
        return Err(AnovaError::TooFewObservations);
    }
    let pairs = tn * (tn - 1) / 2;
    let mut out = Vec::with_capacity(pairs);
    for a in 0..tn {
        for c in a + 1..tn {
            let d: Vec<f64> = b.y.iter().map(|r| r[c] - r[a]).collect();
            let m = mean(&d);
            let var = d.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
            let scale = d.iter().fold(0.0f64, |s, x| s.max(x.abs()));
            let (t_stat, p_unc, degenerate) = if var.sqrt() <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
                if m == 0.0 || scale == 0.0 {
                    (0.0, 1.0, false)
                } else {
                    (m.signum() * f64::INFINITY, 0.0, true)
                }
            } else {
                let t = m / (var / n as f64).sqrt();
                (t, t_pvalue_two_sided(t, (n - 1) as f64), false)
            };
            out.push(PairwiseComparison {
                t_a: b.times[a],
                t_b: b.times[c],
                mean_diff: m,
                t_stat,
                df: n - 1,
                p_uncorrected: p_unc,
                p: (p_unc * pairs as f64).min(1.0),
                degenerate,
            });
        }
    }
    Ok(out)
}
