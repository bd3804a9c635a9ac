//! Bias / coefficient-of-variation simulation studies for the three-parameter fits.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{Family, Fitter};
use crate::sampling::{sample_gl, sample_gml, GlParams, GmlParams, RngStream};

/// One (α, δ, μ) grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamTriple {
    pub alpha: f64,
    pub delta: f64,
    pub mu: f64,
}

impl ParamTriple {
    pub fn new(alpha: f64, delta: f64, mu: f64) -> Self {
        Self { alpha, delta, mu }
    }

    fn as_array(&self) -> [f64; 3] {
        [self.alpha, self.delta, self.mu]
    }

    fn validate(&self, family: Family) -> Result<()> {
        match family {
            Family::Gml => GmlParams::new(self.alpha, self.delta, self.mu).map(|_| ()),
            Family::Gl => GlParams::new(self.alpha, self.delta, self.mu).map(|_| ()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub family: Family,
    pub grid: Vec<ParamTriple>,
    #[serde(default = "default_sizes")]
    pub sample_sizes: Vec<usize>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    /// Extra quasi-random starts per fit (0 = default start only).
    #[serde(default)]
    pub multistart: usize,
}

fn default_sizes() -> Vec<usize> {
    vec![100, 1_000, 10_000]
}

fn default_replications() -> usize {
    1000
}

impl StudyConfig {
    /// gML design: α ∈ {0.5, 0.7, 0.95}, δ = 0.5, μ = 1.
    pub fn gml_design() -> Self {
        Self::preset(Family::Gml, &[0.5, 0.7, 0.95])
    }

    /// gL design: α ∈ {0.6, 1.2, 1.8}, δ = 0.5, μ = 1.
    pub fn gl_design() -> Self {
        Self::preset(Family::Gl, &[0.6, 1.2, 1.8])
    }

    fn preset(family: Family, alphas: &[f64]) -> Self {
        Self {
            family,
            grid: alphas
                .iter()
                .map(|&a| ParamTriple::new(a, 0.5, 1.0))
                .collect(),
            sample_sizes: default_sizes(),
            replications: default_replications(),
            seed: 0,
            multistart: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications < 2 {
            return Err(Error::InvalidParameter {
                name: "replications",
                value: self.replications as f64,
                expected: "at least 2 replications",
            });
        }
        if self.grid.is_empty() || self.sample_sizes.is_empty() {
            return Err(Error::EmptyData);
        }
        if let Some(&n) = self.sample_sizes.iter().find(|&&n| n < 10) {
            return Err(Error::InsufficientData { needed: 10, got: n });
        }
        if self.grid.len() > 1 << 24 || self.sample_sizes.len() > 256 || self.replications > 1 << 32
        {
            return Err(Error::Unsupported(
                "study too large for the stream layout".into(),
            ));
        }
        self.grid.iter().try_for_each(|t| t.validate(self.family))
    }
}

pub const PARAM_NAMES: [&str; 3] = ["alpha", "delta", "mu"];

/// Aggregated performance of one (grid point, n) cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub family: Family,
    pub truth: ParamTriple,
    pub n: usize,
    /// Mean relative absolute bias for (α̂, δ̂, μ̂).
    pub mb: [f64; 3],
    /// SD / mean for (α̂, δ̂, μ̂).
    pub cv: [f64; 3],
    pub failures: usize,
    pub replications: usize,
}

impl StudyRow {
    pub fn fail_rate(&self) -> f64 {
        self.failures as f64 / self.replications as f64
    }
}

/// Mean(|θ̂ − θ| / θ).
pub fn mean_bias(estimates: &[f64], truth: f64) -> f64 {
    estimates
        .iter()
        .map(|e| (e - truth).abs() / truth)
        .sum::<f64>()
        / estimates.len() as f64
}

/// SD(θ̂) / Mean(θ̂) with the n − 1 divisor; 0 for identical estimates.
pub fn coefficient_of_variation(estimates: &[f64]) -> f64 {
    let n = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / n;
    let var = estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0);
    if var == 0.0 {
        0.0
    } else {
        var.sqrt() / mean
    }
}

/// RNG stream of replication `rep` at sample-size index `n_idx` of grid cell `cell`.
pub fn stream_id(cell: usize, n_idx: usize, rep: usize) -> u64 {
    ((cell as u64) << 40) | ((n_idx as u64) << 32) | rep as u64
}

/// Runs every (grid point, n) cell; rows come out in grid order, then by n.
pub fn run_study(cfg: &StudyConfig) -> Result<Vec<StudyRow>> {
    cfg.validate()?;
    let fitter = Fitter::new(cfg.family, 3)?.with_multistart(cfg.multistart);
    let mut rows = Vec::with_capacity(cfg.grid.len() * cfg.sample_sizes.len());
    for (cell, truth) in cfg.grid.iter().enumerate() {
        for (n_idx, &n) in cfg.sample_sizes.iter().enumerate() {
            let fits: Vec<Option<[f64; 3]>> = (0..cfg.replications)
                .into_par_iter()
                .map(|rep| {
                    let mut rng = RngStream::new(cfg.seed, stream_id(cell, n_idx, rep));
                    let data = draw(cfg.family, truth, n, &mut rng);
                    fitter
                        .fit(&data)
                        .ok()
                        .filter(|f| f.converged)
                        .map(|f| [f.alpha, f.delta, f.mu])
                })
                .collect();
            rows.push(aggregate(cfg.family, *truth, n, &fits));
        }
    }
    Ok(rows)
}

fn draw(family: Family, t: &ParamTriple, n: usize, rng: &mut RngStream) -> Vec<f64> {
    match family {
        Family::Gml => sample_gml(
            &GmlParams::new(t.alpha, t.delta, t.mu).expect("validated"),
            n,
            rng,
        ),
        Family::Gl => sample_gl(
            &GlParams::new(t.alpha, t.delta, t.mu).expect("validated"),
            n,
            rng,
        ),
    }
}

fn aggregate(family: Family, truth: ParamTriple, n: usize, fits: &[Option<[f64; 3]>]) -> StudyRow {
    let ok: Vec<[f64; 3]> = fits.iter().flatten().copied().collect();
    let mut mb = [f64::NAN; 3];
    let mut cv = [f64::NAN; 3];
    if ok.len() >= 2 {
        let t = truth.as_array();
        for k in 0..3 {
            let est: Vec<f64> = ok.iter().map(|f| f[k]).collect();
            mb[k] = mean_bias(&est, t[k]);
            cv[k] = coefficient_of_variation(&est);
        }
    }
    StudyRow {
        family,
        truth,
        n,
        mb,
        cv,
        failures: fits.len() - ok.len(),
        replications: fits.len(),
    }
}

#[derive(Serialize)]
struct CsvRecord<'a> {
    family: &'a str,
    alpha: f64,
    delta: f64,
    mu: f64,
    n: usize,
    param: &'a str,
    mb: f64,
    cv: f64,
    fail_rate: f64,
}

/// Long-format CSV, one line per (row, parameter).
pub fn write_csv<W: Write>(rows: &[StudyRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        for (k, param) in PARAM_NAMES.iter().enumerate() {
            w.serialize(CsvRecord {
                family: r.family.as_str(),
                alpha: r.truth.alpha,
                delta: r.truth.delta,
                mu: r.truth.mu,
                n: r.n,
                param,
                mb: r.mb[k],
                cv: r.cv[k],
                fail_rate: r.fail_rate(),
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn to_csv_string(rows: &[StudyRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}
