//! Nonparametric percentile bootstrap.
//!
//! Replicate `r` resamples with its own `RngStream(seed, r)`, so the output
//! does not depend on how rayon schedules the work.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{IntervalEstimate, IntervalMethod};
use crate::error::{check_range, Error, Result};
use crate::estimators::{FitResult, Fitter};
use crate::sampling::RngStream;

/// Largest tolerated share of failed replicates.
pub const MAX_FAILURE_RATE: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub level: f64,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            replicates: 1000,
            level: 0.95,
            seed: 0,
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicates < 2 {
            return Err(Error::InvalidParameter {
                name: "replicates",
                value: self.replicates as f64,
                expected: "at least 2 replicates",
            });
        }
        check_range(
            "level",
            self.level,
            self.level > 0.0 && self.level < 1.0,
            "level in (0, 1)",
        )
    }
}

/// Sorted refitted estimates of one parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateSet {
    sorted: Vec<f64>,
}

impl ReplicateSet {
    fn new(mut values: Vec<f64>) -> Self {
        values.sort_by(f64::total_cmp);
        Self { sorted: values }
    }

    pub fn values(&self) -> &[f64] {
        &self.sorted
    }

    /// Sample quantile with linear interpolation between order statistics.
    pub fn quantile(&self, p: f64) -> f64 {
        quantile_sorted(&self.sorted, p)
    }

    /// True when every replicate produced the same value.
    pub fn is_degenerate(&self) -> bool {
        match (self.sorted.first(), self.sorted.last()) {
            (Some(a), Some(b)) => a == b,
            _ => true,
        }
    }
}

fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Successful refits of every replicate, ready to be turned into intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapReplicates {
    pub point: FitResult,
    pub alpha: ReplicateSet,
    pub delta: ReplicateSet,
    pub mu: ReplicateSet,
    pub replicates: usize,
    pub failures: usize,
}

/// Percentile intervals for all three parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub point: FitResult,
    pub alpha: IntervalEstimate,
    pub delta: IntervalEstimate,
    pub mu: IntervalEstimate,
    pub replicates: usize,
    pub failures: usize,
    /// Parameters whose replicates were all identical.
    pub degenerate: Vec<String>,
    /// Parameters whose point estimate fell outside its own interval.
    pub point_outside: Vec<String>,
}

impl BootstrapReplicates {
    pub fn intervals(&self, level: f64) -> Result<BootstrapResult> {
        check_range(
            "level",
            level,
            level > 0.0 && level < 1.0,
            "level in (0, 1)",
        )?;
        let (lo, hi) = (0.5 * (1.0 - level), 0.5 * (1.0 + level));
        let mut degenerate = Vec::new();
        let mut point_outside = Vec::new();
        let mut make = |name: &str, set: &ReplicateSet, point: f64| {
            if set.is_degenerate() {
                degenerate.push(name.to_string());
            }
            let iv = IntervalEstimate {
                point,
                lower: set.quantile(lo),
                upper: set.quantile(hi),
                level,
                method: IntervalMethod::Bootstrap,
            };
            if !iv.contains(point) {
                point_outside.push(name.to_string());
            }
            iv
        };
        let alpha = make("alpha", &self.alpha, self.point.alpha);
        let delta = make("delta", &self.delta, self.point.delta);
        let mu = make("mu", &self.mu, self.point.mu);
        Ok(BootstrapResult {
            point: self.point,
            alpha,
            delta,
            mu,
            replicates: self.replicates,
            failures: self.failures,
            degenerate,
            point_outside,
        })
    }
}

/// Refits `cfg.replicates` with-replacement resamples of `data`. A replicate
/// fails when the fitter errors or its simplex search does not converge.
pub fn bootstrap_replicates(
    data: &[f64],
    fitter: &Fitter,
    cfg: &BootstrapConfig,
) -> Result<BootstrapReplicates> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    let point = fitter.fit(data)?;
    let n = data.len();
    let fits: Vec<Option<FitResult>> = (0..cfg.replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = RngStream::new(cfg.seed, r);
            let resample: Vec<f64> = (0..n).map(|_| data[rng.random_range(0..n)]).collect();
            fitter.fit(&resample).ok().filter(|f| f.converged)
        })
        .collect();
    let ok: Vec<FitResult> = fits.into_iter().flatten().collect();
    let failures = cfg.replicates - ok.len();
    if failures as f64 > MAX_FAILURE_RATE * cfg.replicates as f64 || ok.is_empty() {
        return Err(Error::ExcessiveFailures {
            failed: failures,
            total: cfg.replicates,
        });
    }
    Ok(BootstrapReplicates {
        point,
        alpha: ReplicateSet::new(ok.iter().map(|f| f.alpha).collect()),
        delta: ReplicateSet::new(ok.iter().map(|f| f.delta).collect()),
        mu: ReplicateSet::new(ok.iter().map(|f| f.mu).collect()),
        replicates: cfg.replicates,
        failures,
    })
}

/// Point estimates on the full data with percentile intervals at `cfg.level`.
pub fn bootstrap_ci(
    data: &[f64],
    fitter: &Fitter,
    cfg: &BootstrapConfig,
) -> Result<BootstrapResult> {
    bootstrap_replicates(data, fitter, cfg)?.intervals(cfg.level)
}
