//! Plain numeric input files and small helpers.

use std::collections::hash_map::RandomState;
use std::fmt;
use std::hash::BuildHasher;
use std::path::Path;

use anyhow::{bail, Context, Result};

/// Numbers separated by whitespace or commas; `#` comments out the rest of a line.
pub fn read_numbers(path: &Path) -> Result<Vec<f64>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_numbers(&text).with_context(|| format!("in {}", path.display()))
}

pub fn parse_numbers(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        for tok in line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
        {
            match tok.parse::<f64>() {
                Ok(v) => out.push(v),
                Err(_) => bail!("line {}: not a number: {tok:?}", line_no + 1),
            }
        }
    }
    Ok(out)
}

/// Seed drawn from the process's hash randomness.
pub fn fresh_seed() -> u64 {
    RandomState::new().hash_one(std::time::SystemTime::now())
}

pub struct Summary {
    n: usize,
    mean: f64,
    sd: f64,
    min: f64,
    median: f64,
    max: f64,
}

impl Summary {
    pub fn of(x: &[f64]) -> Self {
        let n = x.len();
        let mut s = x.to_vec();
        s.sort_by(f64::total_cmp);
        let mean = x.iter().sum::<f64>() / n as f64;
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        let median = match n {
            0 => f64::NAN,
            _ if n % 2 == 1 => s[n / 2],
            _ => 0.5 * (s[n / 2 - 1] + s[n / 2]),
        };
        Self {
            n,
            mean,
            sd: var.sqrt(),
            min: s.first().copied().unwrap_or(f64::NAN),
            median,
            max: s.last().copied().unwrap_or(f64::NAN),
        }
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "n = {}, mean = {:.6}, sd = {:.6}, min = {:.6}, median = {:.6}, max = {:.6}",
            self.n, self.mean, self.sd, self.min, self.median, self.max
        )
    }
}
