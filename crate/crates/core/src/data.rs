//! Daily price files, log returns and density exports.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};

/// Bandwidth used for the published density overlays.
pub const DEFAULT_BANDWIDTH: f64 = 0.001;
pub const DEFAULT_BINS: usize = 150;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriceColumn {
    Open,
    High,
    Low,
    Close,
    AdjClose,
}

impl PriceColumn {
    const ALL: [PriceColumn; 5] = [
        PriceColumn::Open,
        PriceColumn::High,
        PriceColumn::Low,
        PriceColumn::Close,
        PriceColumn::AdjClose,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PriceColumn::Open => "open",
            PriceColumn::High => "high",
            PriceColumn::Low => "low",
            PriceColumn::Close => "close",
            PriceColumn::AdjClose => "adj_close",
        }
    }
}

impl fmt::Display for PriceColumn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PriceColumn {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match normalize_header(s).as_str() {
            "open" => Ok(PriceColumn::Open),
            "high" => Ok(PriceColumn::High),
            "low" => Ok(PriceColumn::Low),
            "close" => Ok(PriceColumn::Close),
            "adj_close" => Ok(PriceColumn::AdjClose),
            other => Err(Error::Unsupported(format!(
                "unknown price column {other:?}"
            ))),
        }
    }
}

/// One trading day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OhlcRecord {
    pub date: NaiveDate,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    pub adj_close: f64,
    pub volume: Option<u64>,
}

impl OhlcRecord {
    pub fn price(&self, col: PriceColumn) -> f64 {
        match col {
            PriceColumn::Open => self.open,
            PriceColumn::High => self.high,
            PriceColumn::Low => self.low,
            PriceColumn::Close => self.close,
            PriceColumn::AdjClose => self.adj_close,
        }
    }
}

/// Parsed file contents.
#[derive(Debug, Clone, PartialEq)]
pub struct OhlcSeries {
    pub records: Vec<OhlcRecord>,
    /// Rows skipped because a price was missing or `null`.
    pub dropped: usize,
}

fn normalize_header(h: &str) -> String {
    let h = h.trim_start_matches('\u{feff}').trim().to_ascii_lowercase();
    match h.as_str() {
        "adj.close" | "adj close" | "adj_close" | "adjclose" | "adj. close" => "adj_close".into(),
        _ => h,
    }
}

fn parse_date(s: &str) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .or_else(|_| NaiveDate::parse_from_str(s, "%m/%d/%Y"))
        .ok()
}

fn is_missing(s: &str) -> bool {
    s.is_empty() || s.eq_ignore_ascii_case("null") || s.eq_ignore_ascii_case("na") || s == "."
}

/// Reads an OHLC file with `date, open, high, low, close, adj close, volume`
/// columns in any order.
pub fn load_ohlc_csv(path: impl AsRef<Path>) -> Result<OhlcSeries> {
    parse_ohlc(std::fs::File::open(path)?)
}

pub fn parse_ohlc<R: Read>(input: R) -> Result<OhlcSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers: HashMap<String, usize> = reader
        .headers()?
        .iter()
        .enumerate()
        .map(|(i, h)| (normalize_header(h), i))
        .collect();
    let column = |name: &str| {
        headers
            .get(name)
            .copied()
            .ok_or_else(|| Error::MalformedHeader(format!("missing column {name:?}")))
    };
    let date_col = column("date")?;
    let price_cols: Vec<usize> = PriceColumn::ALL
        .iter()
        .map(|c| column(c.as_str()))
        .collect::<Result<_>>()?;
    let volume_col = column("volume")?;

    let mut records: Vec<OhlcRecord> = Vec::new();
    let mut dropped = 0;
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        // 1-based data row index, header excluded
        let row_no = i + 1;
        let cell = |c: usize| row.get(c).unwrap_or("");
        let bad = |c: usize, name: &str| Error::ParseCell {
            row: row_no,
            column: name.to_string(),
            value: cell(c).to_string(),
        };

        let mut prices = [0.0; 5];
        let mut missing = false;
        for (k, (&c, col)) in price_cols.iter().zip(PriceColumn::ALL).enumerate() {
            let s = cell(c);
            if is_missing(s) {
                missing = true;
                continue;
            }
            let v: f64 = s.parse().map_err(|_| bad(c, col.as_str()))?;
            if !(v > 0.0 && v.is_finite()) {
                return Err(bad(c, col.as_str()));
            }
            prices[k] = v;
        }
        if missing {
            dropped += 1;
            continue;
        }
        let date = parse_date(cell(date_col)).ok_or_else(|| bad(date_col, "date"))?;
        let vol = cell(volume_col);
        let volume = if is_missing(vol) {
            None
        } else {
            let v: f64 = vol.parse().map_err(|_| bad(volume_col, "volume"))?;
            if !(v >= 0.0 && v.is_finite()) {
                return Err(bad(volume_col, "volume"));
            }
            Some(v.round() as u64)
        };
        if records.last().is_some_and(|r| r.date >= date) {
            return Err(Error::NonMonotonicDates { row: row_no });
        }
        let [open, high, low, close, adj_close] = prices;
        records.push(OhlcRecord {
            date,
            open,
            high,
            low,
            close,
            adj_close,
            volume,
        });
    }
    Ok(OhlcSeries { records, dropped })
}

/// Log returns of one price column, dated by the later day of each pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnSeries {
    pub dates: Vec<NaiveDate>,
    pub values: Vec<f64>,
    pub source_column: PriceColumn,
}

impl ReturnSeries {
    pub fn from_records(records: &[OhlcRecord], column: PriceColumn) -> Result<Self> {
        let prices: Vec<f64> = records.iter().map(|r| r.price(column)).collect();
        let values = log_returns(&prices)?;
        Ok(Self {
            dates: records.iter().skip(1).map(|r| r.date).collect(),
            values,
            source_column: column,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `ln(p[i+1] / p[i])`.
pub fn log_returns(prices: &[f64]) -> Result<Vec<f64>> {
    if prices.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: prices.len(),
        });
    }
    if let Some((index, &value)) = prices
        .iter()
        .enumerate()
        .find(|(_, p)| !(**p > 0.0 && p.is_finite()))
    {
        return Err(Error::NonPositiveInput { index, value });
    }
    Ok(prices.windows(2).map(|w| (w[1] / w[0]).ln()).collect())
}

/// Magnitudes of the strictly negative returns, in order.
pub fn negative_abs_returns(returns: &[f64]) -> Result<Vec<f64>> {
    let out: Vec<f64> = returns.iter().filter(|r| **r < 0.0).map(|r| -r).collect();
    if out.is_empty() {
        return Err(Error::EmptyData);
    }
    Ok(out)
}

fn gauss(u: f64) -> f64 {
    (-0.5 * u * u).exp() / (2.0 * PI).sqrt()
}

fn check_kde_inputs(data: &[f64], bandwidth: f64) -> Result<()> {
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    check_range(
        "bandwidth",
        bandwidth,
        bandwidth > 0.0 && bandwidth.is_finite(),
        "bandwidth > 0",
    )
}

/// Gaussian KDE on [0, ∞) with reflection about the origin.
pub fn kde_boundary_corrected(data: &[f64], bandwidth: f64, grid: &[f64]) -> Result<Vec<f64>> {
    check_kde_inputs(data, bandwidth)?;
    if let Some(&x) = grid.iter().find(|x| x.is_nan() || **x < 0.0) {
        return Err(Error::OutsideSupport {
            name: "grid point",
            value: x,
            support: "[0, inf)",
        });
    }
    let norm = 1.0 / (data.len() as f64 * bandwidth);
    Ok(grid
        .par_iter()
        .map(|&x| {
            norm * data
                .iter()
                .map(|&xi| gauss((x - xi) / bandwidth) + gauss((x + xi) / bandwidth))
                .sum::<f64>()
        })
        .collect())
}

/// Plain Gaussian KDE for data on the whole line.
pub fn kde_gaussian(data: &[f64], bandwidth: f64, grid: &[f64]) -> Result<Vec<f64>> {
    check_kde_inputs(data, bandwidth)?;
    let norm = 1.0 / (data.len() as f64 * bandwidth);
    Ok(grid
        .par_iter()
        .map(|&x| {
            norm * data
                .iter()
                .map(|&xi| gauss((x - xi) / bandwidth))
                .sum::<f64>()
        })
        .collect())
}

/// `n` equally spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Density-scaled histogram over the data range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub centers: Vec<f64>,
    pub density: Vec<f64>,
    pub width: f64,
}

pub fn histogram(data: &[f64], bins: usize) -> Result<Histogram> {
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    if bins == 0 {
        return Err(Error::InvalidParameter {
            name: "bins",
            value: 0.0,
            expected: "at least one bin",
        });
    }
    let (lo, hi) = data
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
            (a.min(x), b.max(x))
        });
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::NonFinite {
            index: data.iter().position(|x| !x.is_finite()).unwrap_or(0),
            value: f64::NAN,
        });
    }
    let width = if hi > lo {
        (hi - lo) / bins as f64
    } else {
        1.0
    };
    let mut counts = vec![0usize; bins];
    for &x in data {
        let k = (((x - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    let scale = 1.0 / (data.len() as f64 * width);
    Ok(Histogram {
        centers: (0..bins).map(|k| lo + (k as f64 + 0.5) * width).collect(),
        density: counts.iter().map(|&c| c as f64 * scale).collect(),
        width,
    })
}

/// Two-column CSV with the given header names.
pub fn write_xy_csv<W: Write>(out: W, header: (&str, &str), xs: &[f64], ys: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([header.0, header.1])?;
    for (x, y) in xs.iter().zip(ys) {
        w.write_record([x.to_string(), y.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::RngStream;
    use proptest::prelude::*;
    use rand::Rng;
    use std::f64::consts::E;

    const SAMPLE: &str = "\
Date,Open,High,Low,Close,Adj Close,Volume
2017-08-28,100,101,99,100,100,1000
2017-08-29,108,111,107,110,110,1200
2017-08-30,100,100,98,99,99,900
";

    #[test]
    fn parses_three_rows() {
        let s = parse_ohlc(SAMPLE.as_bytes()).unwrap();
        assert_eq!(s.records.len(), 3);
        assert_eq!(s.dropped, 0);
        let adj: Vec<f64> = s.records.iter().map(|r| r.adj_close).collect();
        assert_eq!(adj, vec![100.0, 110.0, 99.0]);
        assert_eq!(s.records[1].volume, Some(1200));
        assert_eq!(
            s.records[0].date,
            NaiveDate::from_ymd_opt(2017, 8, 28).unwrap()
        );
    }

    #[test]
    fn drops_null_rows() {
        let text = "\
date,open,high,low,close,adj.close,volume
01/03/1950,16.66,16.66,16.66,16.66,16.66,1260000
01/04/1950,null,null,null,null,null,null
01/05/1950,16.93,16.93,16.93,16.93,16.93,2550000
";
        let s = parse_ohlc(text.as_bytes()).unwrap();
        assert_eq!((s.records.len(), s.dropped), (2, 1));
    }

    #[test]
    fn header_spellings() {
        for adj in ["adj_close", "ADJ CLOSE", "Adj.Close", "AdjClose"] {
            let text = format!("close,{adj},volume,low,high,open,DATE\n1,2,3,1,1,1,2000-01-01\n");
            let s = parse_ohlc(text.as_bytes()).unwrap();
            assert_eq!(s.records[0].adj_close, 2.0, "{adj}");
        }
        let err = parse_ohlc("date,open,high,low,close,volume\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::MalformedHeader(_)));
    }

    #[test]
    fn reports_bad_cells() {
        let text = "date,open,high,low,close,adj close,volume\n2000-01-01,1,1,1,1,1,1\n2000-01-02,1,x,1,1,1,1\n";
        match parse_ohlc(text.as_bytes()).unwrap_err() {
            Error::ParseCell { row, column, value } => {
                assert_eq!((row, column.as_str(), value.as_str()), (2, "high", "x"));
            }
            e => panic!("{e}"),
        }
        let text = "date,open,high,low,close,adj close,volume\n2000-01-02,1,1,1,1,1,1\n2000-01-01,1,1,1,1,1,1\n";
        assert!(matches!(
            parse_ohlc(text.as_bytes()),
            Err(Error::NonMonotonicDates { row: 2 })
        ));
        let text = "date,open,high,low,close,adj close,volume\n2000-13-45,1,1,1,1,1,1\n";
        assert!(matches!(
            parse_ohlc(text.as_bytes()),
            Err(Error::ParseCell { .. })
        ));
    }

    #[test]
    fn log_return_examples() {
        let r = log_returns(&[1.0, E, E]).unwrap();
        assert!((r[0] - 1.0).abs() < 1e-15 && r[1] == 0.0);
        assert!(
            (log_returns(&[100.0, 110.0]).unwrap()[0] - 0.095_310_179_804_324_87).abs() < 1e-15
        );
        assert!(log_returns(&[5.0; 10]).unwrap().iter().all(|v| *v == 0.0));
        assert!(log_returns(&[1.0]).is_err());
        assert!(matches!(
            log_returns(&[1.0, 0.0, 2.0]),
            Err(Error::NonPositiveInput { index: 1, .. })
        ));
    }

    #[test]
    fn return_series_from_file() {
        let s = parse_ohlc(SAMPLE.as_bytes()).unwrap();
        let r = ReturnSeries::from_records(&s.records, PriceColumn::AdjClose).unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!(r.dates[0], s.records[1].date);
        assert!((r.values[1] - (99.0f64 / 110.0).ln()).abs() < 1e-15);
        assert_eq!(
            "Adj Close".parse::<PriceColumn>().unwrap(),
            PriceColumn::AdjClose
        );
    }

    #[test]
    fn negative_returns() {
        assert_eq!(
            negative_abs_returns(&[0.01, -0.02, 0.0, -0.005]).unwrap(),
            vec![0.02, 0.005]
        );
        assert!(matches!(
            negative_abs_returns(&[0.1, 0.2]),
            Err(Error::EmptyData)
        ));
    }

    #[test]
    fn kde_examples() {
        let peak = kde_boundary_corrected(&[1.0], 0.1, &[1.0]).unwrap()[0];
        assert!((peak - 3.989_422_804_014_327).abs() < 1e-12);
        let edge = kde_boundary_corrected(&[0.0], 0.1, &[0.0]).unwrap()[0];
        assert!((edge - 7.978_845_608_028_654).abs() < 1e-12);
        assert!(kde_boundary_corrected(&[], 0.1, &[0.0]).is_err());
        assert!(kde_boundary_corrected(&[1.0], 0.0, &[0.0]).is_err());
        assert!(kde_boundary_corrected(&[1.0], 0.1, &[-1.0]).is_err());
    }

    #[test]
    fn kde_recovers_uniform_density() {
        let mut rng = RngStream::new(51, 0);
        let x: Vec<f64> = (0..100_000).map(|_| rng.random::<f64>()).collect();
        let grid = linspace(0.1, 0.9, 81);
        let f = kde_boundary_corrected(&x, 0.02, &grid).unwrap();
        assert!(f.iter().all(|v| (v - 1.0).abs() < 0.05), "{f:?}");
    }

    #[test]
    fn kde_integrates_to_one() {
        let mut rng = RngStream::new(52, 0);
        let x: Vec<f64> = (0..2000)
            .map(|_| -rng.random::<f64>().ln() * 0.01)
            .collect();
        let h = 0.002;
        let grid = linspace(0.0, 0.2, 20_001);
        let f = kde_boundary_corrected(&x, h, &grid).unwrap();
        let dx = grid[1] - grid[0];
        let area: f64 = f.windows(2).map(|w| 0.5 * (w[0] + w[1]) * dx).sum();
        assert!((area - 1.0).abs() < 1e-3, "{area}");

        let y: Vec<f64> = x.iter().map(|v| v - 0.05).collect();
        let grid = linspace(-0.1, 0.2, 30_001);
        let f = kde_gaussian(&y, h, &grid).unwrap();
        let dx = grid[1] - grid[0];
        let area: f64 = f.windows(2).map(|w| 0.5 * (w[0] + w[1]) * dx).sum();
        assert!((area - 1.0).abs() < 1e-3, "{area}");
    }

    #[test]
    fn histogram_is_a_density() {
        let data: Vec<f64> = (0..1000).map(|i| i as f64 / 999.0).collect();
        let h = histogram(&data, DEFAULT_BINS).unwrap();
        assert_eq!(h.centers.len(), 150);
        let area: f64 = h.density.iter().sum::<f64>() * h.width;
        assert!((area - 1.0).abs() < 1e-12);
        assert!(histogram(&[], 10).is_err());
        let h = histogram(&[2.0, 2.0], 5).unwrap();
        assert!((h.density.iter().sum::<f64>() * h.width - 1.0).abs() < 1e-12);
    }

    #[test]
    fn xy_csv_output() {
        let mut buf = Vec::new();
        write_xy_csv(&mut buf, ("x", "density"), &[0.0, 0.5], &[1.0, 2.25]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "x,density\n0,1\n0.5,2.25\n"
        );
    }

    proptest! {
        #[test]
        fn exp_cumsum_round_trip(r in prop::collection::vec(-0.2f64..0.2, 1..200), p0 in 0.1f64..1e4) {
            let mut prices = vec![p0];
            let mut acc = p0.ln();
            for v in &r {
                acc += v;
                prices.push(acc.exp());
            }
            let back = log_returns(&prices).unwrap();
            for (a, b) in back.iter().zip(&r) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn negative_abs_is_positive_and_shorter(r in prop::collection::vec(-1.0f64..1.0, 1..100)) {
            if let Ok(out) = negative_abs_returns(&r) {
                prop_assert!(out.iter().all(|v| *v > 0.0));
                prop_assert!(out.len() <= r.len());
            } else {
                prop_assert!(r.iter().all(|v| *v >= 0.0));
            }
        }
    }
}
