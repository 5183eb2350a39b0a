//! Scalar and location-quotient style indicators.

/// In/out flow ratio; missing when there is no out-flow.
pub fn ior(ic: f64, oc: f64) -> Option<f64> {
    (oc != 0.0).then(|| ic / oc)
}

/// `curr / prev`; missing when `prev <= 0`.
pub fn growth_rate(prev: f64, curr: f64) -> Option<f64> {
    (prev > 0.0 && prev.is_finite() && curr.is_finite()).then(|| curr / prev)
}

/// [`growth_rate`] lifted over missing inputs.
pub fn growth_rate_opt(prev: Option<f64>, curr: Option<f64>) -> Option<f64> {
    growth_rate(prev?, curr?)
}

/// Location quotients for a region × industry matrix:
/// `(q[i][j] / Σ_j q[i][j]) / (Σ_i q[i][j] / Σ_ij q)`.
///
/// Entries whose region row or industry column sums to zero are missing.
pub fn location_quotient(q: &[Vec<f64>]) -> Vec<Vec<Option<f64>>> {
    let cols = q.first().map_or(0, Vec::len);
    let row_sums: Vec<f64> = q.iter().map(|r| r.iter().sum()).collect();
    let col_sums: Vec<f64> = (0..cols).map(|j| q.iter().map(|r| r[j]).sum()).collect();
    let grand: f64 = row_sums.iter().sum();
    q.iter()
        .zip(&row_sums)
        .map(|(row, &rs)| {
            row.iter()
                .zip(&col_sums)
                .map(|(&x, &cs)| (rs > 0.0 && cs > 0.0 && grand > 0.0).then(|| (x / rs) / (cs / grand)))
                .collect()
        })
        .collect()
}

/// Share of `part` in `whole` for each area relative to the city-wide share.
/// Areas with a missing input or a zero `whole` are missing and excluded from
/// the city totals.
fn advantage(part: &[Option<f64>], whole: &[Option<f64>]) -> Vec<Option<f64>> {
    assert_eq!(part.len(), whole.len(), "part and whole must cover the same areas");
    let usable = |i: usize| match (part[i], whole[i]) {
        (Some(p), Some(w)) if w > 0.0 => Some((p, w)),
        _ => None,
    };
    let (sp, sw) = (0..part.len()).filter_map(usable).fold((0.0, 0.0), |(a, b), (p, w)| (a + p, b + w));
    if !(sp > 0.0 && sw > 0.0) {
        return vec![None; part.len()];
    }
    let city = sp / sw;
    (0..part.len()).map(|i| usable(i).map(|(p, w)| (p / w) / city)).collect()
}

/// Cultural expenditure advantage: `(CE_i / TE_i) / (ΣCE / ΣTE)`.
pub fn cultural_expenditure_advantage(ce: &[Option<f64>], te: &[Option<f64>]) -> Vec<Option<f64>> {
    advantage(ce, te)
}

/// Cultural venue advantage: `(CV_i / TV_i) / (ΣCV / ΣTV)`.
pub fn cultural_venue_advantage(cv: &[Option<f64>], tv: &[Option<f64>]) -> Vec<Option<f64>> {
    advantage(cv, tv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn some(xs: &[f64]) -> Vec<Option<f64>> {
        xs.iter().copied().map(Some).collect()
    }

    #[test]
    fn scalar_cases() {
        assert_eq!(ior(10.0, 5.0), Some(2.0));
        assert_eq!(ior(7.0, 7.0), Some(1.0));
        assert_eq!(ior(4.0, 0.0), None);
        assert_eq!(growth_rate(100.0, 150.0), Some(1.5));
        assert_eq!(growth_rate(80.0, 80.0), Some(1.0));
        assert_eq!(growth_rate(0.0, 12.0), None);
        assert_eq!(growth_rate_opt(None, Some(1.0)), None);
    }

    #[test]
    fn lq_cases() {
        let lq = location_quotient(&[vec![30.0, 70.0], vec![10.0, 90.0]]);
        assert!((lq[0][0].unwrap() - 1.5).abs() < 1e-12);
        let eq = location_quotient(&[vec![2.0; 3], vec![2.0; 3]]);
        assert!(eq.iter().flatten().all(|v| (v.unwrap() - 1.0).abs() < 1e-15));
        let z = location_quotient(&[vec![0.0, 0.0], vec![1.0, 0.0]]);
        assert_eq!(z[0], vec![None, None]);
        assert_eq!(z[1], vec![Some(1.0), None]);
    }

    #[test]
    fn advantage_cases() {
        let cea = cultural_expenditure_advantage(&some(&[30.0, 10.0]), &some(&[100.0, 100.0]));
        assert!((cea[0].unwrap() - 1.5).abs() < 1e-12 && (cea[1].unwrap() - 0.5).abs() < 1e-12);
        // half of all venues are cultural; this area has only cultural ones
        let cva = cultural_venue_advantage(&some(&[4.0, 0.0]), &some(&[4.0, 4.0]));
        assert_eq!(cva[0], Some(2.0));
        let uniform = cultural_venue_advantage(&some(&[1.0, 2.0, 3.0]), &some(&[10.0, 20.0, 30.0]));
        assert!(uniform.iter().all(|v| (v.unwrap() - 1.0).abs() < 1e-15));
        let gap = cultural_expenditure_advantage(&some(&[1.0, 1.0]), &some(&[0.0, 2.0]));
        assert_eq!(gap, vec![None, Some(1.0)]);
    }

    proptest! {
        #[test]
        fn growth_identity(x in 1e-6f64..1e9) {
            prop_assert_eq!(growth_rate(x, x), Some(1.0));
        }

        #[test]
        fn advantage_scale_invariant(
            pairs in proptest::collection::vec((0.0f64..1e6, 1.0f64..1e6), 2..30),
            k in 1e-3f64..1e3,
        ) {
            let ce: Vec<_> = pairs.iter().map(|p| Some(p.0)).collect();
            let te: Vec<_> = pairs.iter().map(|p| Some(p.1)).collect();
            let a = cultural_expenditure_advantage(&ce, &te);
            let ce2: Vec<_> = ce.iter().map(|v| v.map(|x| x * k)).collect();
            let te2: Vec<_> = te.iter().map(|v| v.map(|x| x * k)).collect();
            let b = cultural_expenditure_advantage(&ce2, &te2);
            for (x, y) in a.iter().zip(&b) {
                match (x, y) {
                    (Some(x), Some(y)) => prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0)),
                    (None, None) => {}
                    _ => prop_assert!(false),
                }
            }
        }
    }
}
