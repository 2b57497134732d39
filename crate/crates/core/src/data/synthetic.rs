//! Synthetic benchmark generators with exact access to the generating
//! conditional mean `E(Y | X, S, A)` and propensity `P(A = +1 | X, S)`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Action, DataError, Dataset, Sample, SensitiveKind};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    /// One feature; the 2x2x2 toy design with a regime switch at `x = 0.5`.
    Example1,
    /// Six features, observational design, multiplicative `s` effects.
    Example2,
    /// `s` does not enter the outcome.
    NoiseS,
    /// Example 2 with a steep propensity (coefficient `-1.2`).
    PositivityViolation,
    /// Example 2 with `N(0, 1)` measurement error on the recorded `x1`.
    ConfoundingViolation,
}

impl ScenarioKind {
    pub fn n_features(self) -> usize {
        match self {
            ScenarioKind::Example1 => 1,
            ScenarioKind::NoiseS => 2,
            _ => 6,
        }
    }

    /// Whether treatment is assigned by a fair coin independent of `(x, s)`.
    pub fn is_randomized(self) -> bool {
        matches!(self, ScenarioKind::Example1 | ScenarioKind::NoiseS)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticScenario {
    pub kind: ScenarioKind,
    pub s_kind: SensitiveKind,
    #[serde(default = "default_noise_sd")]
    pub noise_sd: f64,
}

fn default_noise_sd() -> f64 {
    1.0
}

impl SyntheticScenario {
    pub fn new(kind: ScenarioKind, s_kind: SensitiveKind) -> Self {
        SyntheticScenario {
            kind,
            s_kind,
            noise_sd: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), DataError> {
        if !(self.noise_sd.is_finite() && self.noise_sd >= 0.0) {
            return Err(DataError::Config(format!(
                "noise_sd must be finite and non-negative, got {}",
                self.noise_sd
            )));
        }
        Ok(())
    }
}

/// The true data-generating conditional mean and propensity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleModel {
    pub scenario: SyntheticScenario,
}

fn expit(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn example2_mean(x: &[f64], s: f64, a: Action) -> f64 {
    let i = a.indicator();
    let base = 1.0 + x[0] - x[1] + x[2] * x[2] + x[3].exp();
    let lin = 1.0 + 5.0 * x[0] - 2.0 * x[1] + 3.0 * x[2] + 2.0 * x[3].exp();
    (0.5 + i + s.exp() - 2.5 * s * i) * base
        + (1.0 + 2.0 * i + 0.2 * s.exp() - 3.5 * s * i) * lin
}

fn example2_logit(x: &[f64], s: f64, coef: f64) -> f64 {
    coef * (-s + x[0] - x[1] + x[2] - x[3] + x[4] - x[5])
}

impl OracleModel {
    /// `E(Y | X = x, S = s, A = a)`, evaluated at generator-side covariates.
    pub fn mean(&self, x: &[f64], s: &[f64], a: Action) -> f64 {
        let i = a.indicator();
        let s0 = s[0];
        match self.scenario.kind {
            ScenarioKind::Example1 => {
                if x[0] > 0.5 {
                    5.0 + 10.0 * i + 22.0 * s0 - 24.0 * i * s0
                } else {
                    11.0 + 19.0 * i + 2.0 * s0 - 32.0 * i * s0
                }
            }
            ScenarioKind::NoiseS => {
                if x[0] <= 0.5 {
                    8.0 + 12.0 * i + 16.0 * x[1].exp() - 26.0 * i * x[1]
                } else {
                    13.0 + 3.0 * i + 2.0 * x[1].exp() - 8.0 * i * x[1]
                }
            }
            ScenarioKind::Example2
            | ScenarioKind::PositivityViolation
            | ScenarioKind::ConfoundingViolation => example2_mean(x, s0, a),
        }
    }

    /// `P(A = +1 | X = x, S = s)`.
    pub fn propensity(&self, x: &[f64], s: &[f64]) -> f64 {
        match self.scenario.kind {
            ScenarioKind::Example1 | ScenarioKind::NoiseS => 0.5,
            ScenarioKind::Example2 | ScenarioKind::ConfoundingViolation => {
                expit(example2_logit(x, s[0], 0.6))
            }
            ScenarioKind::PositivityViolation => expit(example2_logit(x, s[0], -1.2)),
        }
    }

    /// Level set of the sensitive variable for discrete scenarios.
    pub fn sensitive_levels(&self) -> Option<Vec<Vec<f64>>> {
        match self.scenario.s_kind {
            SensitiveKind::Discrete => Some(vec![vec![0.0, 1.0]]),
            SensitiveKind::Continuous => None,
        }
    }

    /// `P(S = 1 | X = x)` for discrete scenarios.
    pub fn sensitive_probability(&self, x: &[f64]) -> Option<f64> {
        if self.scenario.s_kind != SensitiveKind::Discrete {
            return None;
        }
        Some(match self.scenario.kind {
            ScenarioKind::Example1 => 0.5,
            ScenarioKind::NoiseS => expit(-2.5 * (1.0 - x[0] - x[1])),
            _ => expit(-2.5 + 0.8 * x.iter().sum::<f64>()),
        })
    }
}

fn beta_mixture(rng: &mut ChaCha8Rng, hi: &Beta<f64>, lo: &Beta<f64>) -> f64 {
    if rng.random_bool(0.5) {
        hi.sample(rng)
    } else {
        lo.sample(rng)
    }
}

/// Draws `n` i.i.d. samples from `scenario`. Pure in `(scenario, n, seed)`.
pub fn generate(
    scenario: SyntheticScenario,
    n: usize,
    seed: u64,
) -> Result<(Dataset, OracleModel), DataError> {
    scenario.validate()?;
    if n == 0 {
        return Err(DataError::Config("n must be at least 1".into()));
    }
    let oracle = OracleModel { scenario };
    let mut rng = rng::stream(seed, "synthetic");
    let beta_hi = Beta::new(4.0, 1.0).expect("valid beta");
    let beta_lo = Beta::new(1.0, 4.0).expect("valid beta");
    let noise = Normal::new(0.0, scenario.noise_sd).expect("validated sd");
    let std_normal = Normal::new(0.0, 1.0).expect("valid normal");
    let p = scenario.kind.n_features();

    let mut samples = Vec::with_capacity(n);
    let mut oracle_x = Vec::with_capacity(n);
    for _ in 0..n {
        let x: Vec<f64> = (0..p).map(|_| rng.random::<f64>()).collect();
        let s = match (scenario.kind, scenario.s_kind) {
            (ScenarioKind::Example1, SensitiveKind::Discrete) => f64::from(u8::from(rng.random_bool(0.5))),
            (ScenarioKind::NoiseS, SensitiveKind::Continuous) => expit(-2.5 * (1.0 - x[0] - x[1])),
            (_, SensitiveKind::Continuous) => beta_mixture(&mut rng, &beta_hi, &beta_lo),
            (_, SensitiveKind::Discrete) => {
                let ps = oracle.sensitive_probability(&x).expect("discrete");
                f64::from(u8::from(rng.random_bool(ps)))
            }
        };
        let s = vec![s];
        let prop = oracle.propensity(&x, &s);
        let a = if rng.random_bool(prop) {
            Action::Plus
        } else {
            Action::Minus
        };
        let y = oracle.mean(&x, &s, a) + noise.sample(&mut rng);
        let mut recorded = x.clone();
        if scenario.kind == ScenarioKind::ConfoundingViolation {
            recorded[0] += std_normal.sample(&mut rng);
        }
        samples.push(Sample { x: recorded, s, a, y });
        oracle_x.push(x);
    }
    let feature_names = (1..=p).map(|j| format!("x{j}")).collect();
    let ds = Dataset::new(
        samples,
        feature_names,
        vec!["s".into()],
        vec![scenario.s_kind],
    )?
    .with_oracle_x(oracle_x)?;
    Ok((ds, oracle))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oracle(kind: ScenarioKind, s_kind: SensitiveKind) -> OracleModel {
        OracleModel {
            scenario: SyntheticScenario::new(kind, s_kind),
        }
    }

    #[test]
    fn example1_reproduces_toy_table() {
        let m = oracle(ScenarioKind::Example1, SensitiveKind::Discrete);
        // (x, s, a) -> cell
        let cells = [
            (0.3, 0.0, Action::Minus, 11.0),
            (0.3, 1.0, Action::Minus, 13.0),
            (0.3, 0.0, Action::Plus, 30.0),
            (0.3, 1.0, Action::Plus, 0.0),
            (0.7, 0.0, Action::Minus, 5.0),
            (0.7, 1.0, Action::Minus, 27.0),
            (0.7, 0.0, Action::Plus, 15.0),
            (0.7, 1.0, Action::Plus, 13.0),
        ];
        for (x, s, a, want) in cells {
            assert_eq!(m.mean(&[x], &[s], a), want, "cell x={x} s={s} a={a:?}");
        }
        // regime boundary belongs to the lower regime
        assert_eq!(m.mean(&[0.5], &[1.0], Action::Plus), 0.0);
    }

    #[test]
    fn example2_closed_form_at_origin() {
        let m = oracle(ScenarioKind::Example2, SensitiveKind::Discrete);
        let v = m.mean(&[0.0; 6], &[0.0], Action::Minus);
        assert!((v - 6.6).abs() < 1e-12, "{v}");
    }

    #[test]
    fn example1_treatment_is_fair_coin() {
        let sc = SyntheticScenario::new(ScenarioKind::Example1, SensitiveKind::Discrete);
        let (ds, _) = generate(sc, 10_000, 3).unwrap();
        let frac = ds.count_action(Action::Plus) as f64 / ds.len() as f64;
        assert!((frac - 0.5).abs() < 0.02, "{frac}");
    }

    #[test]
    fn generation_is_pure_in_seed() {
        let sc = SyntheticScenario::new(ScenarioKind::Example2, SensitiveKind::Continuous);
        let (a, _) = generate(sc, 200, 11).unwrap();
        let (b, _) = generate(sc, 200, 11).unwrap();
        let (c, _) = generate(sc, 200, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn outcome_noise_is_centered() {
        for kind in [
            ScenarioKind::Example1,
            ScenarioKind::Example2,
            ScenarioKind::NoiseS,
        ] {
            let sc = SyntheticScenario::new(kind, SensitiveKind::Continuous);
            let n = 100_000;
            let (ds, om) = generate(sc, n, 5).unwrap();
            let bias: f64 = (0..n)
                .map(|i| ds.y(i) - om.mean(ds.oracle_x(i), ds.s(i), ds.a(i)))
                .sum::<f64>()
                / n as f64;
            assert!(bias.abs() < 3.0 / (n as f64).sqrt(), "{kind:?}: {bias}");
        }
    }

    #[test]
    fn positivity_violation_is_nearly_violated() {
        for s_kind in [SensitiveKind::Discrete, SensitiveKind::Continuous] {
            let sc = SyntheticScenario::new(ScenarioKind::PositivityViolation, s_kind);
            let (ds, om) = generate(sc, 10_000, 9).unwrap();
            let props: Vec<f64> = (0..ds.len())
                .map(|i| om.propensity(ds.oracle_x(i), ds.s(i)))
                .collect();
            assert!(props.iter().all(|&p| p > 0.0 && p < 1.0));
            let extreme = props.iter().filter(|&&p| p.min(1.0 - p) < 0.05).count();
            assert!(extreme > 0, "{s_kind:?}");
        }
    }

    #[test]
    fn confounding_violation_hides_latent_x1() {
        let sc = SyntheticScenario::new(ScenarioKind::ConfoundingViolation, SensitiveKind::Discrete);
        let n = 10_000;
        let (ds, _) = generate(sc, n, 21).unwrap();
        let rec: Vec<f64> = (0..n).map(|i| ds.x(i)[0]).collect();
        let lat: Vec<f64> = (0..n).map(|i| ds.oracle_x(i)[0]).collect();
        assert!(rec.iter().zip(&lat).any(|(r, l)| r != l));
        // untouched coordinates agree
        assert!((0..n).all(|i| ds.x(i)[1..] == ds.oracle_x(i)[1..]));
        let corr = correlation(&rec, &lat);
        // sd(latent) / sqrt(var(latent) + 1) = sqrt(1/12) / sqrt(13/12) ~ 0.277
        assert!(corr > 0.2 && corr < 0.35, "{corr}");
    }

    fn correlation(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let ma = a.iter().sum::<f64>() / n;
        let mb = b.iter().sum::<f64>() / n;
        let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        cov / (va * vb).sqrt()
    }

    #[test]
    fn noise_s_continuous_is_deterministic_in_x() {
        let sc = SyntheticScenario::new(ScenarioKind::NoiseS, SensitiveKind::Continuous);
        let (ds, _) = generate(sc, 50, 1).unwrap();
        for i in 0..ds.len() {
            let x = ds.x(i);
            assert!((ds.s(i)[0] - expit(-2.5 * (1.0 - x[0] - x[1]))).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_noise() {
        let mut sc = SyntheticScenario::new(ScenarioKind::Example1, SensitiveKind::Discrete);
        sc.noise_sd = f64::NAN;
        assert!(generate(sc, 10, 0).is_err());
        sc.noise_sd = 1.0;
        assert!(generate(sc, 0, 0).is_err());
    }
}
