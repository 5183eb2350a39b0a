use super::encode::Matrix;

/// Gaussian naive Bayes for two classes.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianNb {
    log_prior: [f64; 2],
    mean: [Vec<f64>; 2],
    var: [Vec<f64>; 2],
}

impl GaussianNb {
    /// `var_smoothing` times the largest feature variance is added to every
    /// per-class variance.
    pub fn fit(x: &Matrix, y: &[bool], var_smoothing: f64) -> Self {
        let d = x.cols;
        let mut count = [0usize; 2];
        let mut mean = [vec![0.0; d], vec![0.0; d]];
        for i in 0..x.rows {
            let c = y[i] as usize;
            count[c] += 1;
            for (m, v) in mean[c].iter_mut().zip(x.row(i)) {
                *m += v;
            }
        }
        for c in 0..2 {
            mean[c].iter_mut().for_each(|m| *m /= count[c].max(1) as f64);
        }
        let mut var = [vec![0.0; d], vec![0.0; d]];
        for i in 0..x.rows {
            let c = y[i] as usize;
            for j in 0..d {
                var[c][j] += (x.at(i, j) - mean[c][j]).powi(2);
            }
        }
        let mut max_var = 0.0f64;
        for j in 0..d {
            let m = (0..x.rows).map(|i| x.at(i, j)).sum::<f64>() / x.rows as f64;
            max_var = max_var.max((0..x.rows).map(|i| (x.at(i, j) - m).powi(2)).sum::<f64>() / x.rows as f64);
        }
        let eps = (var_smoothing * max_var).max(f64::MIN_POSITIVE);
        for c in 0..2 {
            var[c].iter_mut().for_each(|v| *v = *v / count[c].max(1) as f64 + eps);
        }
        let n = x.rows as f64;
        let log_prior = [(count[0] as f64 / n).ln(), (count[1] as f64 / n).ln()];
        GaussianNb { log_prior, mean, var }
    }

    fn joint(&self, c: usize, row: &[f64]) -> f64 {
        let ll: f64 = row
            .iter()
            .zip(&self.mean[c])
            .zip(&self.var[c])
            .map(|((x, m), v)| -0.5 * ((2.0 * std::f64::consts::PI * v).ln() + (x - m).powi(2) / v))
            .sum();
        self.log_prior[c] + ll
    }

    pub fn proba(&self, row: &[f64]) -> f64 {
        let (j0, j1) = (self.joint(0, row), self.joint(1, row));
        let diff = j0 - j1;
        if diff.is_nan() {
            return 0.5;
        }
        1.0 / (1.0 + diff.exp())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(xs: &[f64]) -> Matrix {
        Matrix::from_rows(xs.iter().map(|&x| vec![x]).collect())
    }

    #[test]
    fn symmetric_classes() {
        // class means 0 and 2, equal spread, equal priors
        let x = col(&[-1.0, 0.0, 1.0, 1.0, 2.0, 3.0]);
        let y = [false, false, false, true, true, true];
        let nb = GaussianNb::fit(&x, &y, 1e-9);
        assert!((nb.proba(&[1.0]) - 0.5).abs() < 1e-9);
        assert!(nb.proba(&[3.0]) > 0.9);
    }

    #[test]
    fn posterior_matches_bayes_rule() {
        let x = col(&[0.0, 1.0, 2.0, 4.0, 5.0]);
        let y = [false, false, true, true, true];
        let nb = GaussianNb::fit(&x, &y, 0.0);
        // class 0: mean 0.5, var 0.25; class 1: mean 11/3, var 14/9
        let pdf = |x: f64, m: f64, v: f64| (-(x - m) * (x - m) / (2.0 * v)).exp() / (2.0 * std::f64::consts::PI * v).sqrt();
        let q = 1.7;
        let a = 0.4 * pdf(q, 0.5, 0.25);
        let b = 0.6 * pdf(q, 11.0 / 3.0, 14.0 / 9.0);
        assert!((nb.proba(&[q]) - b / (a + b)).abs() < 1e-9);
        // equal likelihoods give the prior
        let flat = GaussianNb::fit(&col(&[1.0; 5]), &y, 1e-9);
        assert!((flat.proba(&[1.0]) - 0.6).abs() < 1e-12);
    }
}
