//! Supervised building blocks: mean regression (squared loss), quantile
//! regression (pinball loss) and weighted binary classification (logistic
//! surrogate of the weighted 0-1 loss). Each comes in a linear and a small
//! feed-forward flavour selected by [`LearnerConfig::family`].

pub mod linear;
pub mod loss;
pub mod mlp;
mod tune;

pub use loss::Loss;
pub use mlp::Mlp;
pub use tune::{cross_validate, default_grid, tune, TuneTask};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use linear::LinearModel;
use loss::weighted_quantile;

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("no training rows")]
    Empty,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("need at least {needed} rows, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("all sample weights are zero")]
    AllWeightsZero,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid learner configuration: {0}")]
    InvalidConfig(String),

    #[error("optimizer did not converge ({} recorded losses)", trace.len())]
    NonConvergence { trace: Vec<f64> },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Matrix, LearnError> {
        if data.len() != rows * cols {
            return Err(LearnError::Dimension(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Matrix, LearnError> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(LearnError::Dimension(format!("row {i} has {} columns, expected {cols}", r.len())));
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix { rows: rows.len(), cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }
}

/// Column centering and scaling; constant columns keep unit scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

impl Scaler {
    pub fn fit(x: &Matrix) -> Scaler {
        let n = x.rows() as f64;
        let p = x.cols();
        let mut mean = vec![0.0; p];
        for i in 0..x.rows() {
            for (m, v) in mean.iter_mut().zip(x.row(i)) {
                *m += v / n;
            }
        }
        let mut var = vec![0.0; p];
        for i in 0..x.rows() {
            for ((s, v), m) in var.iter_mut().zip(x.row(i)).zip(&mean) {
                *s += (v - m).powi(2) / n;
            }
        }
        let sd = var
            .into_iter()
            .map(|v| if v > 1e-24 { v.sqrt() } else { 1.0 })
            .collect();
        Scaler { mean, sd }
    }

    pub fn has_constant_column(&self, x: &Matrix) -> bool {
        (0..x.cols()).any(|j| (0..x.rows()).all(|i| x.row(i)[j] == x.row(0)[j])) && x.rows() > 1
    }

    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            *o = (x[j] - self.mean[j]) / self.sd[j];
        }
    }

    pub fn transform(&self, x: &Matrix) -> Matrix {
        let mut data = vec![0.0; x.rows() * x.cols()];
        for i in 0..x.rows() {
            self.apply_into(x.row(i), &mut data[i * x.cols()..(i + 1) * x.cols()]);
        }
        Matrix {
            rows: x.rows(),
            cols: x.cols(),
            data,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Linear,
    Feedforward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Sigmoid,
    Tanh,
}

/// Hyperparameters of one learner. For the linear family only
/// `ridge_penalty` is used by mean and classifier fits, and `epochs` /
/// `learning_rate` by the quantile fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerConfig {
    pub family: Family,
    pub hidden_layers: Vec<usize>,
    pub activation: Activation,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub ridge_penalty: f64,
    pub seed: u64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            family: Family::Feedforward,
            hidden_layers: vec![32],
            activation: Activation::Relu,
            learning_rate: 1e-2,
            epochs: 40,
            batch_size: 64,
            ridge_penalty: 0.0,
            seed: 0,
        }
    }
}

impl LearnerConfig {
    pub fn linear() -> Self {
        LearnerConfig {
            family: Family::Linear,
            hidden_layers: vec![],
            epochs: 300,
            learning_rate: 0.05,
            ..Default::default()
        }
    }

    pub fn feedforward(hidden: &[usize]) -> Self {
        LearnerConfig {
            hidden_layers: hidden.to_vec(),
            ..Default::default()
        }
    }

    /// Same hyperparameters, different random stream.
    pub fn reseeded(&self, seed: u64) -> Self {
        LearnerConfig {
            seed,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<(), LearnError> {
        let bad = |m: String| Err(LearnError::InvalidConfig(m));
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if self.epochs == 0 {
            return bad("epochs must be positive".into());
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive".into());
        }
        if !(self.ridge_penalty.is_finite() && self.ridge_penalty >= 0.0) {
            return bad(format!("ridge_penalty must be non-negative, got {}", self.ridge_penalty));
        }
        if self.family == Family::Feedforward && self.hidden_layers.contains(&0) {
            return bad("hidden layer widths must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PredictorKind {
    Mean,
    Quantile { tau: f64 },
    /// Real-valued score; its sign is the class and it is a logit.
    ClassifierScore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "family")]
enum Model {
    Linear(LinearModel),
    Feedforward {
        scaler: Scaler,
        net: Mlp,
        y_shift: f64,
        y_scale: f64,
    },
}

/// A fitted, immutable prediction function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predictor {
    kind: PredictorKind,
    input_dim: usize,
    model: Model,
}

impl Predictor {
    pub fn kind(&self) -> PredictorKind {
        self.kind
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.input_dim);
        match &self.model {
            Model::Linear(m) => m.predict(x),
            Model::Feedforward {
                scaler,
                net,
                y_shift,
                y_scale,
            } => {
                let mut z = vec![0.0; x.len()];
                scaler.apply_into(x, &mut z);
                y_shift + y_scale * net.forward(&z)
            }
        }
    }

    pub fn predict_matrix(&self, x: &Matrix) -> Vec<f64> {
        (0..x.rows()).map(|i| self.predict(x.row(i))).collect()
    }

    /// Linear coefficients and intercept in input units, if linear.
    pub fn linear_parameters(&self) -> Option<(&[f64], f64)> {
        match &self.model {
            Model::Linear(m) => Some((&m.coef, m.intercept)),
            Model::Feedforward { .. } => None,
        }
    }
}

fn check_xy(x: &Matrix, n_targets: usize) -> Result<(), LearnError> {
    if x.rows() == 0 {
        return Err(LearnError::Empty);
    }
    if x.rows() != n_targets {
        return Err(LearnError::Dimension(format!(
            "{} rows but {} targets",
            x.rows(),
            n_targets
        )));
    }
    Ok(())
}

fn check_weights(weights: &[f64], n: usize) -> Result<(), LearnError> {
    if weights.len() != n {
        return Err(LearnError::Dimension(format!("{} weights for {n} rows", weights.len())));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(LearnError::InvalidInput("weights must be finite and non-negative".into()));
    }
    if weights.iter().all(|w| *w == 0.0) {
        return Err(LearnError::AllWeightsZero);
    }
    Ok(())
}

fn normalized_weights(weights: Option<&[f64]>, n: usize) -> Vec<f64> {
    match weights {
        Some(w) => {
            let mean = w.iter().sum::<f64>() / n as f64;
            w.iter().map(|v| v / mean).collect()
        }
        None => vec![1.0; n],
    }
}

fn train_options(cfg: &LearnerConfig) -> mlp::TrainOptions {
    mlp::TrainOptions {
        epochs: cfg.epochs,
        batch_size: cfg.batch_size,
        learning_rate: cfg.learning_rate,
        ridge: cfg.ridge_penalty,
        seed: cfg.seed,
    }
}

fn net_outputs(net: &Mlp, z: &Matrix) -> Vec<f64> {
    (0..z.rows()).map(|i| net.forward(z.row(i))).collect()
}

/// Adds `delta` to the output bias.
fn shift_output(net: &mut Mlp, delta: f64) {
    let out = net.layers.last_mut().expect("output layer");
    out.b[0] += delta;
}

/// (Weighted) least squares with an optional ridge penalty.
pub fn fit_mean(
    x: &Matrix,
    y: &[f64],
    weights: Option<&[f64]>,
    cfg: &LearnerConfig,
) -> Result<Predictor, LearnError> {
    cfg.validate()?;
    check_xy(x, y.len())?;
    if let Some(w) = weights {
        check_weights(w, x.rows())?;
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(LearnError::InvalidInput("non-finite target".into()));
    }
    let scaler = Scaler::fit(x);
    if scaler.has_constant_column(x) {
        log::warn!("mean fit: constant input column; ridge keeps the system solvable");
    }
    let w = normalized_weights(weights, x.rows());
    let model = match cfg.family {
        Family::Linear => {
            if x.rows() < x.cols() + 1 {
                return Err(LearnError::TooFewSamples {
                    needed: x.cols() + 1,
                    got: x.rows(),
                });
            }
            Model::Linear(linear::fit_mean(x, y, &w, cfg.ridge_penalty)?)
        }
        Family::Feedforward => {
            let wsum: f64 = w.iter().sum();
            let y_shift = y.iter().zip(&w).map(|(v, w)| v * w).sum::<f64>() / wsum;
            let var = y.iter().zip(&w).map(|(v, w)| w * (v - y_shift).powi(2)).sum::<f64>() / wsum;
            let y_scale = if var > 0.0 { var.sqrt() } else { 1.0 };
            let t: Vec<f64> = y.iter().map(|v| (v - y_shift) / y_scale).collect();
            let z = scaler.transform(x);
            let mut net = Mlp::new(x.cols(), &cfg.hidden_layers, cfg.activation, cfg.seed);
            mlp::train(&mut net, &z, &t, Some(&w), Loss::Squared, &train_options(cfg))?;
            // exact minimization over the output bias
            let out = net_outputs(&net, &z);
            let delta = t.iter().zip(&out).zip(&w).map(|((t, f), w)| w * (t - f)).sum::<f64>() / wsum;
            shift_output(&mut net, delta);
            Model::Feedforward {
                scaler,
                net,
                y_shift,
                y_scale,
            }
        }
    };
    Ok(Predictor {
        kind: PredictorKind::Mean,
        input_dim: x.cols(),
        model,
    })
}

/// Conditional `tau`-quantile regression by pinball-loss subgradient descent.
/// After descent the intercept (output bias) is set to the `tau`-quantile of
/// the residuals, which minimizes the pinball loss over that coordinate; an
/// intercept-only model therefore lands on the empirical `tau`-quantile.
pub fn fit_quantile(
    x: &Matrix,
    y: &[f64],
    tau: f64,
    cfg: &LearnerConfig,
) -> Result<Predictor, LearnError> {
    cfg.validate()?;
    check_xy(x, y.len())?;
    if !(tau > 0.0 && tau < 1.0) {
        return Err(LearnError::InvalidInput(format!("tau must lie in (0, 1), got {tau}")));
    }
    if x.rows() < 10 {
        return Err(LearnError::TooFewSamples {
            needed: 10,
            got: x.rows(),
        });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(LearnError::InvalidInput("non-finite target".into()));
    }
    let model = match cfg.family {
        Family::Linear => {
            let (m, _trace) = linear::fit_quantile(x, y, tau, cfg.epochs, cfg.learning_rate)?;
            Model::Linear(m)
        }
        Family::Feedforward => {
            let scaler = Scaler::fit(x);
            let n = y.len() as f64;
            let y_shift = y.iter().sum::<f64>() / n;
            let var = y.iter().map(|v| (v - y_shift).powi(2)).sum::<f64>() / n;
            let y_scale = if var > 0.0 { var.sqrt() } else { 1.0 };
            let t: Vec<f64> = y.iter().map(|v| (v - y_shift) / y_scale).collect();
            let z = scaler.transform(x);
            let mut net = Mlp::new(x.cols(), &cfg.hidden_layers, cfg.activation, cfg.seed);
            shift_output(&mut net, weighted_quantile(&t, None, tau));
            let loss = Loss::Pinball { tau };
            mlp::train(&mut net, &z, &t, None, loss, &train_options(cfg))?;
            let out = net_outputs(&net, &z);
            let resid: Vec<f64> = t.iter().zip(&out).map(|(t, f)| t - f).collect();
            shift_output(&mut net, weighted_quantile(&resid, None, tau));
            Model::Feedforward {
                scaler,
                net,
                y_shift,
                y_scale,
            }
        }
    };
    Ok(Predictor {
        kind: PredictorKind::Quantile { tau },
        input_dim: x.cols(),
        model,
    })
}

/// Weighted binary classification with labels in `{-1, +1}`, minimizing the
/// weighted logistic surrogate `n^-1 sum w_i ln(1 + exp(-l_i f(x_i)))`.
/// Returns a score whose sign is the decision.
pub fn fit_weighted_classifier(
    x: &Matrix,
    labels: &[f64],
    weights: &[f64],
    cfg: &LearnerConfig,
) -> Result<Predictor, LearnError> {
    cfg.validate()?;
    check_xy(x, labels.len())?;
    check_weights(weights, x.rows())?;
    if labels.iter().any(|l| *l != 1.0 && *l != -1.0) {
        return Err(LearnError::InvalidInput("labels must be -1 or +1".into()));
    }
    let w = normalized_weights(Some(weights), x.rows());
    let model = match cfg.family {
        Family::Linear => Model::Linear(linear::fit_logistic(x, labels, &w, cfg.ridge_penalty)?),
        Family::Feedforward => {
            let scaler = Scaler::fit(x);
            let z = scaler.transform(x);
            let mut net = Mlp::new(x.cols(), &cfg.hidden_layers, cfg.activation, cfg.seed);
            mlp::train(&mut net, &z, labels, Some(&w), Loss::Logistic, &train_options(cfg))?;
            Model::Feedforward {
                scaler,
                net,
                y_shift: 0.0,
                y_scale: 1.0,
            }
        }
    };
    Ok(Predictor {
        kind: PredictorKind::ClassifierScore,
        input_dim: x.cols(),
        model,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate, Action, ScenarioKind, SensitiveKind, SyntheticScenario};
    use loss::weighted_zero_one;

    fn column(v: &[f64]) -> Matrix {
        Matrix::new(v.len(), 1, v.to_vec()).unwrap()
    }

    #[test]
    fn linear_mean_recovers_line() {
        let xs: Vec<f64> = (0..30).map(|i| i as f64 / 7.0).collect();
        let y: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        let p = fit_mean(&column(&xs), &y, None, &LearnerConfig::linear()).unwrap();
        let (c, b) = p.linear_parameters().unwrap();
        assert!((c[0] - 2.0).abs() < 1e-6 && (b - 1.0).abs() < 1e-6);
    }

    #[test]
    fn equal_weights_match_unweighted() {
        let xs: Vec<f64> = (0..40).map(|i| (i as f64 * 0.37).sin()).collect();
        let y: Vec<f64> = xs.iter().enumerate().map(|(i, x)| x * 3.0 + (i % 5) as f64).collect();
        let x = column(&xs);
        for cfg in [LearnerConfig::linear(), LearnerConfig::feedforward(&[8])] {
            let a = fit_mean(&x, &y, None, &cfg).unwrap();
            let b = fit_mean(&x, &y, Some(&vec![2.5; 40]), &cfg).unwrap();
            for v in [-1.0, 0.0, 0.5] {
                assert!((a.predict(&[v]) - b.predict(&[v])).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn feedforward_mean_fits_toy_cells() {
        let sc = SyntheticScenario::new(ScenarioKind::Example1, SensitiveKind::Discrete);
        let (ds, om) = generate(sc, 400, 2).unwrap();
        let idx: Vec<usize> = (0..ds.len()).filter(|&i| ds.a(i) == Action::Plus).collect();
        let sub = ds.subset(&idx).unwrap();
        let cfg = LearnerConfig {
            epochs: 200,
            ..LearnerConfig::feedforward(&[32])
        };
        let p = fit_mean(&sub.xs_matrix(), &sub.outcomes(), None, &cfg).unwrap();
        for (x, s) in [(0.2, 0.0), (0.2, 1.0), (0.8, 0.0), (0.8, 1.0)] {
            let want = om.mean(&[x], &[s], Action::Plus);
            let got = p.predict(&[x, s]);
            assert!((got - want).abs() < 0.6, "cell ({x},{s}): {got} vs {want}");
        }
    }

    #[test]
    fn intercept_only_quantile_is_empirical_quantile() {
        let y: Vec<f64> = (1..=100).map(f64::from).collect();
        let x = column(&[1.0; 100]);
        for cfg in [LearnerConfig::linear(), LearnerConfig::feedforward(&[4])] {
            let q = fit_quantile(&x, &y, 0.25, &cfg).unwrap().predict(&[1.0]);
            assert!((q - 25.75).abs() <= 1.0, "{q}");
            let med = fit_quantile(&x, &y, 0.5, &cfg).unwrap().predict(&[1.0]);
            assert!((50.0..=51.0).contains(&med), "{med}");
        }
    }

    #[test]
    fn duplicated_rows_leave_quantile_unchanged() {
        let y: Vec<f64> = (0..37).map(|i| ((i * 17) % 23) as f64 * 0.5).collect();
        let yy: Vec<f64> = y.iter().chain(&y).copied().collect();
        for cfg in [LearnerConfig::linear(), LearnerConfig::feedforward(&[4])] {
            let a = fit_quantile(&column(&[0.0; 37]), &y, 0.3, &cfg).unwrap();
            let b = fit_quantile(&column(&[0.0; 74]), &yy, 0.3, &cfg).unwrap();
            assert!((a.predict(&[0.0]) - b.predict(&[0.0])).abs() < 1e-6);
        }
    }

    #[test]
    fn quantile_rejects_bad_tau_and_tiny_samples() {
        let x = column(&[0.0; 20]);
        let y = vec![1.0; 20];
        assert!(fit_quantile(&x, &y, 0.0, &LearnerConfig::linear()).is_err());
        assert!(fit_quantile(&column(&[0.0; 5]), &[1.0; 5], 0.5, &LearnerConfig::linear()).is_err());
    }

    #[test]
    fn separable_classifier_has_zero_loss() {
        let x = column(&[-1.0, 1.0]);
        let labels = [-1.0, 1.0];
        for cfg in [LearnerConfig::linear(), LearnerConfig { epochs: 200, ..LearnerConfig::feedforward(&[4]) }] {
            let p = fit_weighted_classifier(&x, &labels, &[1.0, 1.0], &cfg).unwrap();
            let scores = p.predict_matrix(&x);
            assert_eq!(weighted_zero_one(&scores, &labels, &[1.0, 1.0]), 0.0);
        }
    }

    #[test]
    fn zero_weight_point_is_inert() {
        let xs = [-2.0, -1.0, 1.0, 2.0, 0.5];
        let x = column(&xs);
        let w = [1.0, 1.0, 1.0, 1.0, 0.0];
        let a = fit_weighted_classifier(&x, &[-1.0, -1.0, 1.0, 1.0, 1.0], &w, &LearnerConfig::linear()).unwrap();
        let b = fit_weighted_classifier(&x, &[-1.0, -1.0, 1.0, 1.0, -1.0], &w, &LearnerConfig::linear()).unwrap();
        for v in [-3.0, -0.2, 0.0, 0.3, 4.0] {
            assert!((a.predict(&[v]) - b.predict(&[v])).abs() < 1e-9);
        }
    }

    #[test]
    fn heavy_point_wins_conflict() {
        // same x, conflicting labels: labelling +1 costs 2, labelling -1 costs 10
        let x = column(&[0.0, 0.0, 0.0]);
        let labels = [1.0, -1.0, -1.0];
        let w = [10.0, 1.0, 1.0];
        let brute = |d: f64| weighted_zero_one(&[d; 3], &labels, &w);
        assert!(brute(1.0) < brute(-1.0));
        for cfg in [LearnerConfig::linear(), LearnerConfig::feedforward(&[4])] {
            let p = fit_weighted_classifier(&x, &labels, &w, &cfg).unwrap();
            assert!(p.predict(&[0.0]) > 0.0);
        }
    }

    #[test]
    fn all_zero_weights_is_an_error() {
        let x = column(&[0.0, 1.0]);
        let err = fit_weighted_classifier(&x, &[1.0, -1.0], &[0.0, 0.0], &LearnerConfig::linear()).unwrap_err();
        assert!(matches!(err, LearnError::AllWeightsZero));
    }

    #[test]
    fn weight_scaling_keeps_sign_pattern() {
        let xs: Vec<f64> = (0..60).map(|i| i as f64 / 10.0 - 3.0).collect();
        let labels: Vec<f64> = xs.iter().map(|x| if (x * 2.0).sin() > 0.0 { 1.0 } else { -1.0 }).collect();
        let w: Vec<f64> = (0..60).map(|i| 0.5 + (i % 7) as f64).collect();
        let w10: Vec<f64> = w.iter().map(|v| v * 10.0).collect();
        let x = column(&xs);
        for cfg in [LearnerConfig::linear(), LearnerConfig::feedforward(&[8])] {
            let a = fit_weighted_classifier(&x, &labels, &w, &cfg).unwrap().predict_matrix(&x);
            let b = fit_weighted_classifier(&x, &labels, &w10, &cfg).unwrap().predict_matrix(&x);
            assert!(a.iter().zip(&b).all(|(u, v)| (u > &0.0) == (v > &0.0)));
        }
    }

    #[test]
    fn fits_are_deterministic() {
        let xs: Vec<f64> = (0..50).map(|i| (i as f64).cos()).collect();
        let y: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let cfg = LearnerConfig::feedforward(&[6]).reseeded(9);
        let a = fit_mean(&column(&xs), &y, None, &cfg).unwrap();
        let b = fit_mean(&column(&xs), &y, None, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn linear_needs_enough_rows() {
        let x = Matrix::new(2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        assert!(matches!(
            fit_mean(&x, &[1.0, 2.0], None, &LearnerConfig::linear()),
            Err(LearnError::TooFewSamples { .. })
        ));
    }

    #[test]
    fn config_validation() {
        let mut cfg = LearnerConfig::default();
        cfg.learning_rate = 0.0;
        assert!(cfg.validate().is_err());
        let cfg = LearnerConfig::feedforward(&[0]);
        assert!(cfg.validate().is_err());
    }
}
