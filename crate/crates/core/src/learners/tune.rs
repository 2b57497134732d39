use rand::seq::SliceRandom;

use super::loss::{pinball, weighted_zero_one};
use super::{fit_mean, fit_quantile, fit_weighted_classifier, LearnError, LearnerConfig, Matrix};
use crate::rng;

/// A supervised problem to select hyperparameters for.
#[derive(Debug, Clone, Copy)]
pub enum TuneTask<'a> {
    /// Out-of-fold loss: weighted mean squared error.
    Mean {
        x: &'a Matrix,
        y: &'a [f64],
        weights: Option<&'a [f64]>,
    },
    /// Out-of-fold loss: mean pinball loss.
    Quantile { x: &'a Matrix, y: &'a [f64], tau: f64 },
    /// Out-of-fold loss: weighted 0-1 loss.
    Classifier {
        x: &'a Matrix,
        labels: &'a [f64],
        weights: &'a [f64],
    },
}

impl TuneTask<'_> {
    fn x(&self) -> &Matrix {
        match self {
            TuneTask::Mean { x, .. } | TuneTask::Quantile { x, .. } | TuneTask::Classifier { x, .. } => x,
        }
    }

    fn fold_loss(&self, cfg: &LearnerConfig, train: &[usize], test: &[usize]) -> Result<f64, LearnError> {
        let pick = |v: &[f64], idx: &[usize]| idx.iter().map(|&i| v[i]).collect::<Vec<_>>();
        let xt = self.x().select_rows(train);
        let xv = self.x().select_rows(test);
        match *self {
            TuneTask::Mean { y, weights, .. } => {
                let wt = weights.map(|w| pick(w, train));
                let p = fit_mean(&xt, &pick(y, train), wt.as_deref(), cfg)?;
                let pred = p.predict_matrix(&xv);
                let wv = weights.map_or_else(|| vec![1.0; test.len()], |w| pick(w, test));
                let wsum: f64 = wv.iter().sum();
                Ok(test
                    .iter()
                    .zip(&pred)
                    .zip(&wv)
                    .map(|((&i, f), w)| w * (y[i] - f).powi(2))
                    .sum::<f64>()
                    / wsum.max(f64::MIN_POSITIVE))
            }
            TuneTask::Quantile { y, tau, .. } => {
                let p = fit_quantile(&xt, &pick(y, train), tau, cfg)?;
                let pred = p.predict_matrix(&xv);
                Ok(test.iter().zip(&pred).map(|(&i, f)| pinball(y[i] - f, tau)).sum::<f64>()
                    / test.len() as f64)
            }
            TuneTask::Classifier { labels, weights, .. } => {
                let p = fit_weighted_classifier(&xt, &pick(labels, train), &pick(weights, train), cfg)?;
                let pred = p.predict_matrix(&xv);
                Ok(weighted_zero_one(&pred, &pick(labels, test), &pick(weights, test)))
            }
        }
    }
}

fn folds_for(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>, LearnError> {
    if k < 2 {
        return Err(LearnError::InvalidConfig(format!("need at least 2 folds, got {k}")));
    }
    if n < 2 * k {
        return Err(LearnError::TooFewSamples { needed: 2 * k, got: n });
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng::stream(seed, "folds"));
    let mut folds = vec![Vec::new(); k];
    for (pos, i) in idx.into_iter().enumerate() {
        folds[pos % k].push(i);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

/// Mean out-of-fold task loss of one configuration.
pub fn cross_validate(task: &TuneTask, cfg: &LearnerConfig, folds: usize, seed: u64) -> Result<f64, LearnError> {
    let n = task.x().rows();
    let parts = folds_for(n, folds, seed)?;
    let mut total = 0.0;
    for (f, test) in parts.iter().enumerate() {
        let train: Vec<usize> = parts
            .iter()
            .enumerate()
            .filter(|(g, _)| *g != f)
            .flat_map(|(_, p)| p.iter().copied())
            .collect();
        total += task.fold_loss(cfg, &train, test)?;
    }
    Ok(total / folds as f64)
}

/// Grid element with the smallest mean out-of-fold loss; ties go to the
/// earlier element. All candidates share the same fold assignment.
pub fn tune(task: &TuneTask, grid: &[LearnerConfig], folds: usize, seed: u64) -> Result<LearnerConfig, LearnError> {
    let first = grid
        .first()
        .ok_or_else(|| LearnError::InvalidConfig("empty tuning grid".into()))?;
    if grid.len() == 1 {
        return Ok(first.clone());
    }
    let mut best: Option<(f64, &LearnerConfig)> = None;
    for cfg in grid {
        let loss = cross_validate(task, cfg, folds, seed)?;
        log::debug!("tune: {cfg:?} -> {loss}");
        if best.is_none_or(|(b, _)| loss < b) {
            best = Some((loss, cfg));
        }
    }
    Ok(best.expect("non-empty grid").1.clone())
}

/// The reduced search grid: a linear model plus feed-forward networks with
/// 1-2 relu layers of 32 or 64 units, learning rates 1e-2 / 1e-3 and 100 or
/// 200 epochs.
pub fn default_grid() -> Vec<LearnerConfig> {
    let mut grid = vec![LearnerConfig::linear()];
    for depth in [1usize, 2] {
        for width in [32usize, 64] {
            for lr in [1e-2, 1e-3] {
                for epochs in [100usize, 200] {
                    grid.push(LearnerConfig {
                        hidden_layers: vec![width; depth],
                        learning_rate: lr,
                        epochs,
                        ..LearnerConfig::default()
                    });
                }
            }
        }
    }
    grid
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic(n: usize) -> (Matrix, Vec<f64>) {
        let xs: Vec<f64> = (0..n).map(|i| i as f64 / n as f64 * 4.0 - 2.0).collect();
        let y = xs.iter().map(|x| x * x).collect();
        (Matrix::new(n, 1, xs).unwrap(), y)
    }

    #[test]
    fn singleton_grid() {
        let (x, y) = quadratic(20);
        let task = TuneTask::Mean { x: &x, y: &y, weights: None };
        let cfg = LearnerConfig::linear();
        assert_eq!(tune(&task, &[cfg.clone()], 5, 0).unwrap(), cfg);
    }

    #[test]
    fn picks_network_for_curved_target() {
        let (x, y) = quadratic(200);
        let task = TuneTask::Mean { x: &x, y: &y, weights: None };
        let ff = LearnerConfig {
            epochs: 150,
            ..LearnerConfig::feedforward(&[16])
        };
        let grid = [LearnerConfig::linear(), ff.clone()];
        let lin_loss = cross_validate(&task, &grid[0], 5, 1).unwrap();
        let ff_loss = cross_validate(&task, &grid[1], 5, 1).unwrap();
        assert!(ff_loss < lin_loss, "{ff_loss} vs {lin_loss}");
        assert_eq!(tune(&task, &grid, 5, 1).unwrap(), ff);
        // same seed, same choice
        assert_eq!(tune(&task, &grid, 5, 1).unwrap(), tune(&task, &grid, 5, 1).unwrap());
    }

    #[test]
    fn fold_errors() {
        let (x, y) = quadratic(7);
        let task = TuneTask::Mean { x: &x, y: &y, weights: None };
        let grid = [LearnerConfig::linear(), LearnerConfig::linear()];
        assert!(tune(&task, &grid, 1, 0).is_err());
        assert!(tune(&task, &grid, 5, 0).is_err());
        assert!(tune(&task, &[], 5, 0).is_err());
    }

    #[test]
    fn folds_partition_rows() {
        let f = folds_for(23, 5, 3).unwrap();
        let mut all: Vec<usize> = f.concat();
        all.sort_unstable();
        assert_eq!(all, (0..23).collect::<Vec<_>>());
        assert!(f.iter().all(|p| p.len() >= 4));
    }

    #[test]
    fn default_grid_shape() {
        let g = default_grid();
        assert_eq!(g.len(), 17);
        assert!(g.iter().all(|c| c.validate().is_ok()));
    }
}
