use std::time::Instant;

use rand::Rng;
use transart::calibrate::{apply_bias, calibrate, set_class_bias, BiasVector, CalibrationConfig};
use transart::datamodel::LabelOrder;
use transart::stats::ClassDistribution;
use transart::synthetic::{rng, skewed_logits};

fn uniform() -> ClassDistribution {
    ClassDistribution::target(&LabelOrder::nli(), &[1.0, 1.0, 1.0]).unwrap()
}

fn counts(logits: &[Vec<f64>], bias: &[f64]) -> [usize; 3] {
    let mut c = [0; 3];
    for z in logits {
        let mut best = 0;
        for k in 1..3 {
            if z[k] + bias[k] > z[best] + bias[best] {
                best = k;
            }
        }
        c[best] += 1;
    }
    c
}

/// Every example prefers class 0; classes 1 and 2 trail by varying amounts.
fn adversarial() -> Vec<Vec<f64>> {
    vec![
        vec![5.0, 1.0, 0.5],
        vec![4.0, 3.9, -2.0],
        vec![6.0, -1.0, 5.5],
        vec![3.0, 2.0, 2.5],
        vec![7.0, 0.0, 0.0],
        vec![2.0, 1.5, 1.9],
    ]
}

/// Searches the cube `[-10, 10]^3` with step 0.01. Decisions depend only on
/// the differences `d1 = b1 - b0`, `d2 = b2 - b0`; a difference pair is
/// realized by a grid point of the cube iff the spread of `{0, d1, d2}` is
/// at most 20, which reduces the search to a 4001 x 4001 lattice.
fn grid_solutions(logits: &[Vec<f64>], want: [usize; 3]) -> usize {
    let mut found = 0;
    for k1 in -2000i32..=2000 {
        for k2 in -2000i32..=2000 {
            let spread = 0.max(k1).max(k2) - 0.min(k1).min(k2);
            if spread > 2000 {
                continue;
            }
            let b = [0.0, k1 as f64 / 100.0, k2 as f64 / 100.0];
            if counts(logits, &b) == want {
                found += 1;
            }
        }
    }
    found
}

#[test]
fn six_example_grid_oracle() {
    let z = adversarial();
    assert_eq!(counts(&z, &[0.0; 3]), [6, 0, 0]);
    assert!(grid_solutions(&z, [2, 2, 2]) > 0, "no grid bias attains the target");
    let result = calibrate(&z, &CalibrationConfig::new(uniform())).unwrap();
    assert!(result.converged, "{result:?}");
    assert_eq!(counts(&z, result.bias.values()), [2, 2, 2]);
    assert_eq!(result.target_counts, vec![2, 2, 2]);
}

#[test]
fn planted_skew_within_tolerance_quickly() {
    let z = skewed_logits(3000, &[0.20, 0.45, 0.35], 17);
    let start = Instant::now();
    let result = calibrate(&z, &CalibrationConfig::new(uniform())).unwrap();
    let elapsed = start.elapsed();
    assert!(result.converged && result.sweeps_used <= 50);
    for p in &result.achieved.probabilities {
        assert!((p - 1.0 / 3.0).abs() <= 0.005, "{p}");
    }
    let labels = apply_bias(&z, &result.bias).unwrap();
    for c in 0..3 {
        let share = labels.iter().filter(|&&l| l == c).count() as f64 / 3000.0;
        assert_eq!(share, result.achieved.probabilities[c]);
    }
    assert!(elapsed.as_secs_f64() < 1.0, "{elapsed:?}");
}

#[test]
fn two_class_grid_oracle() {
    let z = vec![vec![0.3, 1.2], vec![-0.7, 0.4], vec![2.0, 0.1], vec![0.0, 3.5]];
    for k in 0..=4 {
        let b = set_class_bias(&z, &BiasVector::zeros(2), 0, k, 1e-6).unwrap();
        let exact: Vec<i32> = (-20_000..=20_000)
            .filter(|&s| {
                let v = s as f64 / 1000.0;
                z.iter().filter(|r| r[0] + v > r[1]).count() == k
            })
            .collect();
        assert!(!exact.is_empty());
        assert_eq!(z.iter().filter(|r| r[0] + b > r[1]).count(), k);
    }
}

#[test]
fn argmax_invariance_on_random_sets() {
    let mut r = rng(4);
    for _ in 0..1000 {
        let n = r.gen_range(1..20);
        let z: Vec<Vec<f64>> = (0..n).map(|_| (0..3).map(|_| r.gen_range(-5.0..5.0)).collect()).collect();
        let b = BiasVector::new((0..3).map(|_| r.gen_range(-2.0..2.0)).collect()).unwrap();
        let base = apply_bias(&z, &b).unwrap();
        for _ in 0..10 {
            let c = r.gen_range(-100.0..100.0);
            assert_eq!(apply_bias(&z, &b.shifted(c)).unwrap(), base);
        }
    }
}
