//! Linear mean, quantile and logistic fits.
//!
//! All three work on internally standardized columns and report coefficients
//! in the caller's units.

use nalgebra::{DMatrix, DVector};

use super::loss::{pinball, sigmoid, softplus, weighted_quantile};
use super::{LearnError, Matrix, Scaler};

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LinearModel {
    pub coef: Vec<f64>,
    pub intercept: f64,
}

impl LinearModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.intercept + self.coef.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }

    /// Converts standardized-space parameters back to raw units.
    fn from_standardized(beta: &[f64], b: f64, scaler: &Scaler) -> LinearModel {
        let coef: Vec<f64> = beta.iter().zip(&scaler.sd).map(|(c, s)| c / s).collect();
        let shift: f64 = coef.iter().zip(&scaler.mean).map(|(c, m)| c * m).sum();
        LinearModel {
            coef,
            intercept: b - shift,
        }
    }
}

fn solve_spd(a: DMatrix<f64>, rhs: DVector<f64>) -> Result<DVector<f64>, LearnError> {
    if let Some(ch) = a.clone().cholesky() {
        return Ok(ch.solve(&rhs));
    }
    a.lu()
        .solve(&rhs)
        .ok_or_else(|| LearnError::Numerical("singular normal equations".into()))
}

/// Weighted ridge least squares. The intercept is not penalized.
pub(crate) fn fit_mean(
    x: &Matrix,
    y: &[f64],
    weights: &[f64],
    ridge: f64,
) -> Result<LinearModel, LearnError> {
    let scaler = Scaler::fit(x);
    let z = scaler.transform(x);
    let p = z.cols();
    let wsum: f64 = weights.iter().sum();
    let mut zbar = vec![0.0; p];
    let mut ybar = 0.0;
    for i in 0..z.rows() {
        let w = weights[i] / wsum;
        ybar += w * y[i];
        for (m, v) in zbar.iter_mut().zip(z.row(i)) {
            *m += w * v;
        }
    }
    let lambda = ridge.max(1e-10);
    let mut a = DMatrix::<f64>::identity(p, p) * lambda;
    let mut rhs = DVector::<f64>::zeros(p);
    let mut c = vec![0.0; p];
    for i in 0..z.rows() {
        let w = weights[i] / wsum;
        if w == 0.0 {
            continue;
        }
        for (cj, (v, m)) in c.iter_mut().zip(z.row(i).iter().zip(&zbar)) {
            *cj = v - m;
        }
        let r = y[i] - ybar;
        for j in 0..p {
            rhs[j] += w * c[j] * r;
            for k in 0..=j {
                a[(j, k)] += w * c[j] * c[k];
            }
        }
    }
    for j in 0..p {
        for k in 0..j {
            a[(k, j)] = a[(j, k)];
        }
    }
    let beta = solve_spd(a, rhs)?;
    let beta: Vec<f64> = beta.iter().copied().collect();
    let b = ybar - beta.iter().zip(&zbar).map(|(c, m)| c * m).sum::<f64>();
    Ok(LinearModel::from_standardized(&beta, b, &scaler))
}

/// Weighted ridge logistic regression by damped Newton steps. Labels are
/// `{-1, +1}`; weights are normalized to mean one over the sample.
pub(crate) fn fit_logistic(
    x: &Matrix,
    labels: &[f64],
    weights: &[f64],
    ridge: f64,
) -> Result<LinearModel, LearnError> {
    let scaler = Scaler::fit(x);
    let z = scaler.transform(x);
    let n = z.rows();
    let p = z.cols();
    let mean_w = weights.iter().sum::<f64>() / n as f64;
    let w: Vec<f64> = weights.iter().map(|v| v / mean_w).collect();
    let lambda = ridge.max(1e-6);
    // theta = (beta, b)
    let mut theta = vec![0.0; p + 1];
    let objective = |theta: &[f64]| -> f64 {
        let mut total = 0.0;
        for i in 0..n {
            if w[i] == 0.0 {
                continue;
            }
            let f = theta[p] + z.row(i).iter().zip(theta).map(|(v, c)| v * c).sum::<f64>();
            total += w[i] * softplus(-labels[i] * f);
        }
        total / n as f64 + lambda * theta[..p].iter().map(|c| c * c).sum::<f64>()
    };
    let mut current = objective(&theta);
    for _ in 0..100 {
        let mut grad = DVector::<f64>::zeros(p + 1);
        let mut hess = DMatrix::<f64>::zeros(p + 1, p + 1);
        let mut feat = vec![1.0; p + 1];
        for i in 0..n {
            if w[i] == 0.0 {
                continue;
            }
            feat[..p].copy_from_slice(z.row(i));
            let f: f64 = feat.iter().zip(&theta).map(|(v, c)| v * c).sum();
            let g = -labels[i] * sigmoid(-labels[i] * f) * w[i] / n as f64;
            let h = sigmoid(f) * sigmoid(-f) * w[i] / n as f64;
            for j in 0..=p {
                grad[j] += g * feat[j];
                for k in 0..=j {
                    hess[(j, k)] += h * feat[j] * feat[k];
                }
            }
        }
        for j in 0..=p {
            for k in 0..j {
                hess[(k, j)] = hess[(j, k)];
            }
        }
        for j in 0..p {
            grad[j] += 2.0 * lambda * theta[j];
            hess[(j, j)] += 2.0 * lambda;
        }
        // tiny intercept damping keeps one-class problems solvable
        hess[(p, p)] += 1e-12;
        let step = solve_spd(hess, grad.clone())?;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let cand: Vec<f64> = theta.iter().zip(step.iter()).map(|(c, s)| c - t * s).collect();
            let val = objective(&cand);
            if val.is_finite() && val <= current {
                let improvement = current - val;
                theta = cand;
                current = val;
                accepted = improvement > 1e-14 * current.abs().max(1e-300);
                break;
            }
            t *= 0.5;
        }
        if !accepted || grad.norm() < 1e-12 {
            break;
        }
    }
    if theta.iter().any(|v| !v.is_finite()) {
        return Err(LearnError::Numerical("logistic fit diverged".into()));
    }
    Ok(LinearModel::from_standardized(&theta[..p], theta[p], &scaler))
}

/// Linear quantile regression: full-batch subgradient descent on the mean
/// pinball loss, then an exact intercept update (the `tau`-quantile of the
/// residuals). Returns the model and the per-iteration loss trace.
pub(crate) fn fit_quantile(
    x: &Matrix,
    y: &[f64],
    tau: f64,
    iterations: usize,
    learning_rate: f64,
) -> Result<(LinearModel, Vec<f64>), LearnError> {
    let scaler = Scaler::fit(x);
    let z = scaler.transform(x);
    let n = z.rows();
    let p = z.cols();
    let y_scale = {
        let m = y.iter().sum::<f64>() / n as f64;
        let v = y.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n as f64;
        if v > 0.0 { v.sqrt() } else { 1.0 }
    };
    let mut beta = vec![0.0; p];
    let mut b = weighted_quantile(y, None, tau);
    let loss_at = |beta: &[f64], b: f64| -> f64 {
        (0..n)
            .map(|i| {
                let f = b + z.row(i).iter().zip(beta).map(|(v, c)| v * c).sum::<f64>();
                pinball(y[i] - f, tau)
            })
            .sum::<f64>()
            / n as f64
    };
    let mut best = (beta.clone(), b, loss_at(&beta, b));
    let mut trace = vec![best.2];
    if p > 0 {
        // Adam on (beta, b); steps are in units of sd(y)
        let mut m = vec![0.0; p + 1];
        let mut v = vec![0.0; p + 1];
        for t in 1..=iterations {
            let mut g = vec![0.0; p + 1];
            for i in 0..n {
                let f = b + z.row(i).iter().zip(&beta).map(|(v, c)| v * c).sum::<f64>();
                let d = -(tau - if y[i] - f < 0.0 { 1.0 } else { 0.0 });
                for j in 0..p {
                    g[j] += d * z.row(i)[j] / n as f64;
                }
                g[p] += d / n as f64;
            }
            let lr = learning_rate * y_scale / (1.0 + 10.0 * t as f64 / iterations as f64);
            let bc1 = 1.0 - 0.9f64.powi(t as i32);
            let bc2 = 1.0 - 0.999f64.powi(t as i32);
            for k in 0..=p {
                m[k] = 0.9 * m[k] + 0.1 * g[k];
                v[k] = 0.999 * v[k] + 0.001 * g[k] * g[k];
                let step = lr * (m[k] / bc1) / ((v[k] / bc2).sqrt() + 1e-8);
                if k < p {
                    beta[k] -= step;
                } else {
                    b -= step;
                }
            }
            let l = loss_at(&beta, b);
            trace.push(l);
            if !l.is_finite() {
                return Err(LearnError::NonConvergence { trace });
            }
            if l < best.2 {
                best = (beta.clone(), b, l);
            }
        }
    }
    let (beta, _, _) = best;
    let resid: Vec<f64> = (0..n)
        .map(|i| y[i] - z.row(i).iter().zip(&beta).map(|(v, c)| v * c).sum::<f64>())
        .collect();
    let b = weighted_quantile(&resid, None, tau);
    Ok((LinearModel::from_standardized(&beta, b, &scaler), trace))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_line() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 * 0.3 - 1.0).collect();
        let y: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        let x = Matrix::new(20, 1, xs).unwrap();
        let m = fit_mean(&x, &y, &[1.0; 20], 0.0).unwrap();
        assert!((m.coef[0] - 2.0).abs() < 1e-6 && (m.intercept - 1.0).abs() < 1e-6, "{m:?}");
    }

    #[test]
    fn separable_logistic() {
        let x = Matrix::new(2, 1, vec![-1.0, 1.0]).unwrap();
        let m = fit_logistic(&x, &[-1.0, 1.0], &[1.0, 1.0], 0.0).unwrap();
        assert!(m.predict(&[-1.0]) < 0.0 && m.predict(&[1.0]) > 0.0);
    }

    #[test]
    fn quantile_slope_on_noiseless_line() {
        let xs: Vec<f64> = (0..50).map(|i| i as f64 / 10.0).collect();
        let y: Vec<f64> = xs.iter().map(|x| 3.0 * x - 2.0).collect();
        let x = Matrix::new(50, 1, xs).unwrap();
        let (m, trace) = fit_quantile(&x, &y, 0.5, 400, 0.1).unwrap();
        assert!(trace.last().unwrap() <= &trace[0]);
        assert!((m.coef[0] - 3.0).abs() < 0.05, "{m:?}");
    }
}
