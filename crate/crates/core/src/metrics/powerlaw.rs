use serde::{Deserialize, Serialize};

use super::DegreeHistogram;
use crate::error::{Error, Result};

/// Minimum number of usable points (regression) or tail samples (MLE).
const MIN_TAIL: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMethod {
    /// Least-squares slope of `ln count` against `ln degree`.
    LogLogRegression,
    /// Discrete maximum-likelihood estimate with the continuous
    /// approximation `1 + n / sum(ln(d / (d_min - 1/2)))`.
    DiscreteMle,
}

/// A fitted exponent. `alpha` carries the sign of the density exponent,
/// so a decaying distribution has `alpha < 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub alpha: f64,
    pub d_min: usize,
    pub method: FitMethod,
    /// R² for regression, standard error of the exponent for MLE.
    pub quality: f64,
    pub n_tail: usize,
}

impl PowerLawFit {
    pub fn magnitude(&self) -> f64 {
        self.alpha.abs()
    }
}

pub fn fit_power_law(hist: &DegreeHistogram, d_min: usize, method: FitMethod) -> Result<PowerLawFit> {
    if d_min == 0 {
        return Err(Error::Parameter("d_min must be at least 1".into()));
    }
    let tail = hist.counts.range(d_min..).filter(|(_, &c)| c > 0);
    let n_tail: usize = tail.clone().map(|(_, &c)| c).sum();
    match method {
        FitMethod::LogLogRegression => {
            let points: Vec<(f64, f64)> = tail.map(|(&d, &c)| ((d as f64).ln(), (c as f64).ln())).collect();
            if points.len() < MIN_TAIL {
                return Err(Error::Fit {
                    reason: format!("{} distinct degrees >= {d_min}, need {MIN_TAIL}", points.len()),
                    n_tail,
                });
            }
            let (slope, r2) = least_squares(&points);
            Ok(PowerLawFit {
                alpha: slope,
                d_min,
                method,
                quality: r2,
                n_tail,
            })
        }
        FitMethod::DiscreteMle => {
            if n_tail < MIN_TAIL {
                return Err(Error::Fit {
                    reason: format!("need {MIN_TAIL} samples >= {d_min}"),
                    n_tail,
                });
            }
            let shift = d_min as f64 - 0.5;
            let log_sum: f64 = tail.map(|(&d, &c)| c as f64 * (d as f64 / shift).ln()).sum();
            let magnitude = 1.0 + n_tail as f64 / log_sum;
            Ok(PowerLawFit {
                alpha: -magnitude,
                d_min,
                method,
                quality: (magnitude - 1.0) / (n_tail as f64).sqrt(),
                n_tail,
            })
        }
    }
}

/// Slope and R² of the ordinary least-squares line through `points`.
fn least_squares(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in points {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, r2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Side;
    use crate::rng::stream;
    use rand::Rng;
    use std::collections::BTreeMap;

    fn hist(counts: BTreeMap<usize, usize>) -> DegreeHistogram {
        DegreeHistogram {
            side: Side::User,
            total_nodes: counts.values().sum(),
            counts,
            recorded_at: 0,
        }
    }

    #[test]
    fn regression_recovers_exact_cube_law() {
        // d = 10·2^k with counts 2^(3(12-k)): every point lies on slope -3.
        let counts = (0..12).map(|k| (10usize << k, 1usize << (3 * (12 - k)))).collect();
        let fit = fit_power_law(&hist(counts), 10, FitMethod::LogLogRegression).unwrap();
        assert!((fit.alpha + 3.0).abs() < 1e-12, "slope {}", fit.alpha);
        assert!((fit.quality - 1.0).abs() < 1e-12);
    }

    #[test]
    fn regression_on_rounded_cube_law() {
        // round(1e6 d^-3) for d in [10, 1000]: zero bins vanish past d = 79 and
        // the small rounded counts flatten the tail.
        let counts: BTreeMap<usize, usize> = (10..=1000)
            .map(|d: usize| (d, (1e6 * (d as f64).powi(-3)).round() as usize))
            .filter(|&(_, c)| c > 0)
            .collect();
        // plain two-pass least squares, written out separately
        let xs: Vec<f64> = counts.keys().map(|&d| (d as f64).ln()).collect();
        let ys: Vec<f64> = counts.values().map(|&c| (c as f64).ln()).collect();
        let n = xs.len() as f64;
        let (sx, sy): (f64, f64) = (xs.iter().sum(), ys.iter().sum());
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
        let sxx: f64 = xs.iter().map(|x| x * x).sum();
        let oracle = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        let fit = fit_power_law(&hist(counts), 10, FitMethod::LogLogRegression).unwrap();
        assert!((fit.alpha - oracle).abs() < 1e-9, "{} vs {oracle}", fit.alpha);
        assert!((fit.alpha + 2.882).abs() < 1e-3);
    }

    #[test]
    fn regression_on_flat_counts_is_zero() {
        let counts = (10..=100).map(|d| (d, 100)).collect();
        let fit = fit_power_law(&hist(counts), 10, FitMethod::LogLogRegression).unwrap();
        assert!(fit.alpha.abs() <= 0.05);
    }

    #[test]
    fn too_few_points_is_an_error() {
        let counts: BTreeMap<_, _> = (10..15).map(|d| (d, 3)).collect();
        match fit_power_law(&hist(counts.clone()), 10, FitMethod::LogLogRegression) {
            Err(Error::Fit { n_tail, .. }) => assert_eq!(n_tail, 15),
            other => panic!("{other:?}"),
        }
        let few: BTreeMap<_, _> = [(10, 4), (20, 5)].into();
        assert!(matches!(
            fit_power_law(&hist(few), 10, FitMethod::DiscreteMle),
            Err(Error::Fit { n_tail: 9, .. })
        ));
        assert!(fit_power_law(&hist(counts), 0, FitMethod::DiscreteMle).is_err());
    }

    /// Inverse-CDF sampler over d in [d_min, 10^5] with P(d) ∝ d^-exponent.
    fn sample_discrete_power_law(n: usize, exponent: f64, d_min: usize, seed: u64) -> BTreeMap<usize, usize> {
        let support: Vec<usize> = (d_min..=100_000).collect();
        let mut cdf = Vec::with_capacity(support.len());
        let mut acc = 0.0;
        for &d in &support {
            acc += (d as f64).powf(-exponent);
            cdf.push(acc);
        }
        let mut rng = stream(seed, &[]);
        let mut counts = BTreeMap::new();
        for _ in 0..n {
            let u = rng.gen::<f64>() * acc;
            let i = cdf.partition_point(|&c| c <= u).min(support.len() - 1);
            *counts.entry(support[i]).or_insert(0) += 1;
        }
        counts
    }

    #[test]
    fn mle_recovers_exponent_three() {
        for seed in 0..3 {
            let counts = sample_discrete_power_law(100_000, 3.0, 10, seed);
            let fit = fit_power_law(&hist(counts), 10, FitMethod::DiscreteMle).unwrap();
            assert!((fit.magnitude() - 3.0).abs() <= 0.05, "seed {seed}: {}", fit.magnitude());
            assert!(fit.alpha < 0.0);
            assert_eq!(fit.n_tail, 100_000);
        }
    }
}
