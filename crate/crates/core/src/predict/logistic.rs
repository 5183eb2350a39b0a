use super::encode::Matrix;

/// L2-regularised logistic regression with an unpenalised intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct Logistic {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

struct Problem<'a> {
    x: &'a Matrix,
    y: &'a [bool],
    lambda: f64,
}

impl Problem<'_> {
    // theta = [w..., b]
    fn margins(&self, theta: &[f64]) -> Vec<f64> {
        let d = self.x.cols;
        (0..self.x.rows).map(|i| self.x.row(i).iter().zip(&theta[..d]).map(|(a, b)| a * b).sum::<f64>() + theta[d]).collect()
    }

    fn loss(&self, theta: &[f64]) -> f64 {
        let n = self.x.rows as f64;
        let d = self.x.cols;
        let data: f64 = self.margins(theta).iter().zip(self.y).map(|(&z, &y)| softplus(z) - if y { z } else { 0.0 }).sum();
        data / n + self.lambda / (2.0 * n) * theta[..d].iter().map(|w| w * w).sum::<f64>()
    }

    fn grad(&self, theta: &[f64]) -> Vec<f64> {
        let n = self.x.rows as f64;
        let d = self.x.cols;
        let mut g = vec![0.0; d + 1];
        for (i, z) in self.margins(theta).into_iter().enumerate() {
            let r = sigmoid(z) - self.y[i] as u8 as f64;
            for (gj, xj) in g[..d].iter_mut().zip(self.x.row(i)) {
                *gj += r * xj;
            }
            g[d] += r;
        }
        for j in 0..=d {
            g[j] /= n;
            if j < d {
                g[j] += self.lambda / n * theta[j];
            }
        }
        g
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl Logistic {
    /// Minimises mean log-loss + `lambda / (2n) * |w|^2` by gradient descent
    /// (Barzilai-Borwein trial steps, Armijo backtracking) until the gradient
    /// norm drops below `tol` or `max_iter` steps are taken.
    pub fn fit(x: &Matrix, y: &[bool], lambda: f64, tol: f64, max_iter: usize) -> Self {
        let p = Problem { x, y, lambda };
        let d = x.cols;
        let mut theta = vec![0.0; d + 1];
        let mut f = p.loss(&theta);
        let mut g = p.grad(&theta);
        let mut step = 1.0;
        let mut converged = false;
        let mut it = 0;
        while it < max_iter {
            let gn2 = dot(&g, &g);
            if gn2.sqrt() < tol {
                converged = true;
                break;
            }
            it += 1;
            let mut alpha = step;
            let mut next;
            let mut f_next;
            let mut tries = 0;
            loop {
                next = theta.iter().zip(&g).map(|(t, gi)| t - alpha * gi).collect::<Vec<_>>();
                f_next = p.loss(&next);
                if f_next <= f - 1e-4 * alpha * gn2 || tries >= 60 {
                    break;
                }
                alpha *= 0.5;
                tries += 1;
            }
            if f_next > f {
                // no descent possible at machine precision
                break;
            }
            let g_next = p.grad(&next);
            let s: Vec<f64> = next.iter().zip(&theta).map(|(a, b)| a - b).collect();
            let yk: Vec<f64> = g_next.iter().zip(&g).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &yk);
            step = if sy > 0.0 { (dot(&s, &s) / sy).clamp(1e-10, 1e10) } else { alpha * 2.0 };
            theta = next;
            f = f_next;
            g = g_next;
        }
        if !converged && dot(&g, &g).sqrt() < tol {
            converged = true;
        }
        Logistic { intercept: theta[d], weights: theta[..d].to_vec(), iterations: it, converged }
    }

    pub fn proba(&self, row: &[f64]) -> f64 {
        sigmoid(dot(&self.weights, row) + self.intercept)
    }
}
