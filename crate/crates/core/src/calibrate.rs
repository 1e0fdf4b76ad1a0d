//! Additive logit-bias calibration of a classifier's predicted class
//! distribution.
//!
//! Fitting biases on the same predictions that are then scored measures how
//! far the output distribution is from the target; for a fair evaluation fit
//! on a development set and apply the biases to the test set.

use serde::{Deserialize, Serialize};

use crate::datamodel::LabelOrder;
use crate::error::{Error, Result};
use crate::stats::ClassDistribution;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct BiasVector(Vec<f64>);

impl BiasVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::arg("bias values must be finite"));
        }
        Ok(BiasVector(values))
    }

    pub fn zeros(len: usize) -> Self {
        BiasVector(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// Same decisions, zero mean.
    pub fn centered(&self) -> BiasVector {
        if self.0.is_empty() {
            return self.clone();
        }
        let mean = self.0.iter().sum::<f64>() / self.0.len() as f64;
        BiasVector(self.0.iter().map(|v| v - mean).collect())
    }

    pub fn shifted(&self, c: f64) -> BiasVector {
        BiasVector(self.0.iter().map(|v| v + c).collect())
    }
}

impl TryFrom<Vec<f64>> for BiasVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        BiasVector::new(values)
    }
}

impl From<BiasVector> for Vec<f64> {
    fn from(b: BiasVector) -> Self {
        b.0
    }
}

/// `argmax(z + b)`, ties to the lowest index. Slices must have equal length.
pub fn apply_bias_one(z: &[f64], b: &[f64]) -> usize {
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (k, (zk, bk)) in z.iter().zip(b).enumerate() {
        let s = zk + bk;
        if s > best_score {
            best = k;
            best_score = s;
        }
    }
    best
}

pub fn apply_bias(logits: &[Vec<f64>], bias: &BiasVector) -> Result<Vec<usize>> {
    logits
        .iter()
        .enumerate()
        .map(|(n, z)| {
            if z.len() != bias.len() {
                Err(Error::arg(format!(
                    "logit vector {n} has {} entries, bias has {}",
                    z.len(),
                    bias.len()
                )))
            } else {
                Ok(apply_bias_one(z, bias.values()))
            }
        })
        .collect()
}

fn check_shape(logits: &[Vec<f64>], classes: usize) -> Result<()> {
    if logits.is_empty() {
        return Err(Error::arg("no logit vectors"));
    }
    if classes < 2 {
        return Err(Error::arg("calibration needs at least two classes"));
    }
    if let Some(n) = logits.iter().position(|z| z.len() != classes) {
        return Err(Error::arg(format!(
            "logit vector {n} has {} entries, expected {classes}",
            logits[n].len()
        )));
    }
    Ok(())
}

/// Finds a bias for class `c` under which exactly the `k` examples with the
/// smallest gaps `max_{j != c}(z_j + b_j) - z_c` select `c`. When the `k`-th
/// and `k+1`-th gaps coincide no exact value exists and the result sits
/// `epsilon` above them.
pub fn set_class_bias(
    logits: &[Vec<f64>],
    biases: &BiasVector,
    c: usize,
    k: usize,
    epsilon: f64,
) -> Result<f64> {
    check_shape(logits, biases.len())?;
    if c >= biases.len() {
        return Err(Error::arg(format!("class {c} out of range")));
    }
    let n = logits.len();
    if k > n {
        return Err(Error::arg(format!("target count {k} exceeds {n} examples")));
    }
    let b = biases.values();
    let mut gaps: Vec<f64> = logits
        .iter()
        .map(|z| {
            let rival = (0..z.len())
                .filter(|&j| j != c)
                .map(|j| z[j] + b[j])
                .fold(f64::NEG_INFINITY, f64::max);
            rival - z[c]
        })
        .collect();
    gaps.sort_by(f64::total_cmp);
    Ok(match k {
        0 => gaps[0] - epsilon,
        k if k == n => gaps[n - 1] + epsilon,
        k => {
            let (lo, hi) = (gaps[k - 1], gaps[k]);
            if lo < hi {
                lo + (hi - lo) / 2.0
            } else {
                lo + epsilon
            }
        }
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CalibrationConfig {
    pub target: ClassDistribution,
    /// Largest accepted absolute per-class proportion error.
    pub tolerance: f64,
    pub max_sweeps: usize,
    pub epsilon: f64,
}

impl CalibrationConfig {
    pub fn new(target: ClassDistribution) -> Self {
        CalibrationConfig {
            target,
            tolerance: 0.005,
            max_sweeps: 50,
            epsilon: 1e-6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::arg("tolerance must be positive"));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::arg("epsilon must be positive"));
        }
        let total: f64 = self.target.probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-9 || self.target.probabilities.iter().any(|p| *p < 0.0) {
            return Err(Error::arg("target distribution is not normalized"));
        }
        Ok(())
    }
}

/// Integer counts summing to `n`, as close to `proportions * n` as possible:
/// floors first, then one extra for the largest remainders (lowest index on
/// ties).
pub fn target_counts(proportions: &[f64], n: usize) -> Vec<usize> {
    let exact: Vec<f64> = proportions.iter().map(|p| p * n as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..proportions.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &k in order.iter().cycle().take(n.saturating_sub(assigned)) {
        counts[k] += 1;
    }
    counts
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub bias: BiasVector,
    pub target: ClassDistribution,
    pub target_counts: Vec<usize>,
    pub achieved: ClassDistribution,
    pub sweeps_used: usize,
    pub converged: bool,
}

fn measure(logits: &[Vec<f64>], bias: &BiasVector, labels: &LabelOrder) -> Result<ClassDistribution> {
    let mut counts = vec![0; labels.len()];
    for z in logits {
        counts[apply_bias_one(z, bias.values())] += 1;
    }
    ClassDistribution::from_counts(labels, &counts)
}

fn within(achieved: &ClassDistribution, target: &ClassDistribution, tolerance: f64) -> bool {
    achieved.max_abs_error(target) <= tolerance
}

/// Visits classes round-robin in label order, each time resetting one
/// class's bias so it is selected for its target count given the current
/// biases of the others, until every class is within tolerance or the sweep
/// budget runs out. The returned bias is mean-centered; the logits are
/// untouched.
pub fn calibrate(logits: &[Vec<f64>], config: &CalibrationConfig) -> Result<CalibrationResult> {
    config.validate()?;
    let classes = config.target.probabilities.len();
    check_shape(logits, classes)?;
    let labels = LabelOrder::new(config.target.labels.clone())?;
    let counts = target_counts(&config.target.probabilities, logits.len());

    let mut bias = BiasVector::zeros(classes);
    let mut achieved = measure(logits, &bias, &labels)?;
    let mut sweeps = 0;
    let mut converged = within(&achieved, &config.target, config.tolerance);
    while !converged && sweeps < config.max_sweeps {
        sweeps += 1;
        for c in 0..classes {
            bias.0[c] = set_class_bias(logits, &bias, c, counts[c], config.epsilon)?;
        }
        achieved = measure(logits, &bias, &labels)?;
        converged = within(&achieved, &config.target, config.tolerance);
    }
    let bias = bias.centered();
    let achieved = measure(logits, &bias, &labels)?;
    Ok(CalibrationResult {
        converged: within(&achieved, &config.target, config.tolerance),
        bias,
        target: config.target.clone(),
        target_counts: counts,
        achieved,
        sweeps_used: sweeps,
    })
}
