use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{DataError, Dataset};
use crate::rng;

/// Per-column affine standardization fitted on a training split.
///
/// Columns with at most two distinct values (indicators) are left as is.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
    pub active: Vec<bool>,
}

impl Standardizer {
    pub fn fit(ds: &Dataset) -> Standardizer {
        let n = ds.len() as f64;
        let p = ds.n_features();
        let mut mean = vec![0.0; p];
        let mut sd = vec![1.0; p];
        let mut active = vec![false; p];
        for j in 0..p {
            let col: Vec<f64> = ds.samples().iter().map(|s| s.x[j]).collect();
            let mut distinct = col.clone();
            distinct.sort_by(f64::total_cmp);
            distinct.dedup();
            if distinct.len() <= 2 {
                continue;
            }
            let m = col.iter().sum::<f64>() / n;
            // sample standard deviation
            let v = col.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
            if v > 0.0 {
                mean[j] = m;
                sd[j] = v.sqrt();
                active[j] = true;
            }
        }
        Standardizer { mean, sd, active }
    }

    pub fn apply(&self, x: &mut [f64]) {
        for (j, v) in x.iter_mut().enumerate() {
            if self.active[j] {
                *v = (*v - self.mean[j]) / self.sd[j];
            }
        }
    }
}

/// Shuffled train/test partition; both parts standardized with statistics
/// from the training part.
pub fn split(ds: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset), DataError> {
    let n = ds.len();
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(DataError::EmptySplit {
            fraction: train_fraction,
            n,
        });
    }
    let n_train = (train_fraction * n as f64).round() as usize;
    if n_train == 0 || n_train >= n {
        return Err(DataError::EmptySplit {
            fraction: train_fraction,
            n,
        });
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng::stream(seed, "split"));
    let (tr, te) = idx.split_at(n_train);
    let train = ds.subset(tr)?;
    let test = ds.subset(te)?;
    let st = Standardizer::fit(&train);
    Ok((train.standardized(&st), test.standardized(&st)))
}
