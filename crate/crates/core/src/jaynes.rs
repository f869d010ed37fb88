//! Exponential first-failure benchmark.
//!
//! A process fails at `t ≥ T` with density `r e^{-r(t-T)}`. From `N` observed
//! failure times we build the two shortest confidence-interval families and
//! the flat-prior smallest credible interval for `T`, and check coverage by
//! simulation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_lr;

use crate::error::{Error, Result};

const ROOT_TOL: f64 = 1e-10;
const COVERAGE_SHARDS: u64 = 16;

/// Observed first-failure times and the known failure rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureData {
    pub times: Vec<f64>,
    pub rate: f64,
}

impl FailureData {
    pub fn new(times: Vec<f64>, rate: f64) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::InvalidInput("need at least one failure time".into()));
        }
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::InvalidInput(format!("rate must be positive, got {rate}")));
        }
        if let Some(t) = times.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
            return Err(Error::InvalidInput(format!("failure times must be positive, got {t}")));
        }
        Ok(Self { times, rate })
    }

    pub fn n(&self) -> usize {
        self.times.len()
    }

    pub fn t_av(&self) -> f64 {
        self.times.iter().sum::<f64>() / self.n() as f64
    }

    pub fn t_min(&self) -> f64 {
        self.times.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Unbiased estimator `t_av - 1/r`.
    pub fn mean_estimator(&self) -> f64 {
        self.t_av() - 1.0 / self.rate
    }

    fn nr(&self) -> f64 {
        self.n() as f64 * self.rate
    }
}

/// Closed interval `[lo, hi]` for `T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, t: f64) -> bool {
        self.lo <= t && t <= self.hi
    }
}

fn check_level(c: f64) -> Result<()> {
    if c > 0.0 && c < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("level must lie in (0, 1), got {c}")))
    }
}

/// Bisection for an increasing `g` with `g(lo) ≤ 0 ≤ g(hi)`.
fn bisect(mut lo: f64, mut hi: f64, g: impl Fn(f64) -> f64) -> f64 {
    while hi - lo > ROOT_TOL * hi.abs().max(1.0) {
        let m = 0.5 * (lo + hi);
        if g(m) > 0.0 {
            hi = m;
        } else {
            lo = m;
        }
    }
    0.5 * (lo + hi)
}

/// `(y_1, y_2)` of the shortest type-1 intervals: equal Gamma(N) densities at
/// both ends and content `coverage` between them.
pub fn type1_bounds(n: usize, coverage: f64) -> Result<(f64, f64)> {
    check_level(coverage)?;
    if n == 0 {
        return Err(Error::InvalidInput("N must be at least 1".into()));
    }
    let a = n as f64;
    if n == 1 {
        // The density e^{-y} is monotone, so the shortest interval starts at 0.
        return Ok((-(1.0 - coverage).ln(), 0.0));
    }
    let mode = a - 1.0;
    let log_density = |y: f64| mode * y.ln() - y;
    // Partner of y_2 on the far side of the mode.
    let partner = |y2: f64| {
        let level = log_density(y2);
        let mut hi = 2.0 * mode + 1.0;
        while log_density(hi) > level {
            hi *= 2.0;
        }
        bisect(mode, hi, |y| level - log_density(y))
    };
    let content = |y2: f64| gamma_lr(a, partner(y2)) - gamma_lr(a, y2);
    // Content falls from 1 to 0 as y_2 moves from 0 to the mode.
    let y2 = bisect(0.0, mode, |y2| coverage - content(y2));
    if !(y2 > 0.0 && y2 < mode) {
        return Err(Error::Numerical(format!("type-1 bounds did not converge for N = {n}")));
    }
    Ok((partner(y2), y2))
}

/// Shortest confidence interval built on the mean estimator.
pub fn ci_type1(d: &FailureData, coverage: f64) -> Result<Interval> {
    let (y1, y2) = type1_bounds(d.n(), coverage)?;
    Ok(Interval { lo: d.t_av() - y1 / d.nr(), hi: d.t_av() - y2 / d.nr() })
}

/// Shortest confidence interval built on the earliest failure time.
pub fn ci_type2(d: &FailureData, coverage: f64) -> Result<Interval> {
    check_level(coverage)?;
    let t = d.t_min();
    Ok(Interval { lo: t + (1.0 - coverage).ln() / d.nr(), hi: t })
}

/// Smallest credible interval for a flat prior on `T ≥ 0`.
pub fn sci_flat(d: &FailureData, credibility: f64) -> Result<Interval> {
    check_level(credibility)?;
    let t = d.t_min();
    let tail = (-d.nr() * t).exp();
    Ok(Interval { lo: t + ((1.0 - credibility) + tail * credibility).ln() / d.nr(), hi: t })
}

/// Interval construction checked by [`coverage_mc`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Builder {
    Type1,
    Type2,
}

/// Fraction of simulated data sets whose interval contains `T`.
pub fn coverage_mc(builder: Builder, t: f64, r: f64, n: usize, coverage: f64, trials: u64, seed: u64) -> Result<f64> {
    check_level(coverage)?;
    if trials == 0 || n == 0 || !(r > 0.0) {
        return Err(Error::InvalidInput("need trials ≥ 1, N ≥ 1 and r > 0".into()));
    }
    // Only the offsets from T matter, so bounds are computed once.
    let nr = n as f64 * r;
    let (y1, y2) = match builder {
        Builder::Type1 => type1_bounds(n, coverage)?,
        Builder::Type2 => (0.0, 0.0),
    };
    let exp = Exp::new(r).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let hits: u64 = (0..COVERAGE_SHARDS)
        .into_par_iter()
        .map(|shard| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(shard);
            let count = trials / COVERAGE_SHARDS + u64::from(shard < trials % COVERAGE_SHARDS);
            let mut hits = 0;
            for _ in 0..count {
                let times = (0..n).map(|_| t + exp.sample(&mut rng));
                let iv = match builder {
                    Builder::Type1 => {
                        let av = times.sum::<f64>() / n as f64;
                        Interval { lo: av - y1 / nr, hi: av - y2 / nr }
                    }
                    Builder::Type2 => {
                        let m = times.fold(f64::INFINITY, f64::min);
                        Interval { lo: m + (1.0 - coverage).ln() / nr, hi: m }
                    }
                };
                hits += u64::from(iv.contains(t));
            }
            hits
        })
        .sum();
    Ok(hits as f64 / trials as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(t: &[f64]) -> FailureData {
        FailureData::new(t.to_vec(), 1.0).unwrap()
    }

    #[test]
    fn type1_bounds_three_points() {
        let (y1, y2) = type1_bounds(3, 0.95).unwrap();
        // Exact roots are 6.40122 and 0.30350.
        assert!((y1 - 6.400).abs() < 2e-3, "{y1}");
        assert!((y2 - 0.3037).abs() < 3e-4, "{y2}");
        assert!((gamma_lr(3.0, y1) - gamma_lr(3.0, y2) - 0.95).abs() < 1e-8);
        assert!((2.0 * y1.ln() - y1 - 2.0 * y2.ln() + y2).abs() < 1e-8);
    }

    #[test]
    fn type1_single_failure() {
        let (y1, y2) = type1_bounds(1, 0.95).unwrap();
        assert_eq!(y2, 0.0);
        assert!((y1 - 20f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn intervals_for_three_failures() {
        let a = data(&[10.0, 12.0, 15.0]);
        let b = data(&[1.9, 2.1, 2.3]);
        let i = ci_type1(&a, 0.95).unwrap();
        assert!((i.lo - 10.2).abs() < 5e-3 && (i.hi - 12.23).abs() < 5e-3);
        let i = ci_type1(&b, 0.95).unwrap();
        assert!((i.lo + 0.033).abs() < 5e-3 && (i.hi - 2.00).abs() < 5e-3);
        let i = ci_type2(&b, 0.95).unwrap();
        assert!((i.lo - 0.90).abs() < 5e-3 && i.hi == 1.9);
        let i = sci_flat(&b, 0.95).unwrap();
        assert!((i.lo - 0.922).abs() < 5e-4 && i.hi == 1.9);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(FailureData::new(vec![], 1.0).is_err());
        assert!(FailureData::new(vec![1.0, -1.0], 1.0).is_err());
        assert!(FailureData::new(vec![1.0], 0.0).is_err());
        assert!(ci_type2(&data(&[1.0]), 1.0).is_err());
    }

    #[test]
    fn coverage_is_deterministic() {
        let a = coverage_mc(Builder::Type2, 1.0, 1.0, 3, 0.9, 1000, 7).unwrap();
        let b = coverage_mc(Builder::Type2, 1.0, 1.0, 3, 0.9, 1000, 7).unwrap();
        assert_eq!(a, b);
    }
}
