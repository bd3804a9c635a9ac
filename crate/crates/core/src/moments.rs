//! Closed-form log-moments and fractional moments.
//!
//! `ln X = U'/α + S'` with `U' = ln U` (log-gamma) and `S' = ln S`
//! independent, so the moments of `ln X` follow from those of the two pieces.
//! Mean, variance and third central moment use the closed forms; the fourth
//! central moment comes from the binomial convolution of the raw moments.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{check_range, Result};
use crate::sampling::{GlParams, GmlParams};
use crate::specfun::{digamma, gamma, ln_gamma, psi, trigamma, EULER_GAMMA as C, ZETA3};

/// Raw moments `E[Z], E[Z^2], E[Z^3], E[Z^4]`.
pub type RawMoments = [f64; 4];

/// Mean and central moments of orders 2–4 of a log-transformed variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogMomentSet {
    pub mean: f64,
    pub variance: f64,
    pub mu3: f64,
    pub mu4: f64,
}

impl LogMomentSet {
    /// Central moments from raw moments.
    pub fn from_raw(raw: &RawMoments) -> Self {
        let [m1, m2, m3, m4] = *raw;
        let variance = m2 - m1 * m1;
        let mu3 = m3 - 3.0 * m1 * m2 + 2.0 * m1.powi(3);
        let mu4 = m4 - 4.0 * m1 * m3 + 6.0 * m1 * m1 * m2 - 3.0 * m1.powi(4);
        Self {
            mean: m1,
            variance,
            mu3,
            mu4,
        }
    }

    /// Checks `variance >= 0` and `mu4 >= variance^2` (up to rounding).
    pub fn is_valid(&self) -> bool {
        let slack = 1e-12 * self.mu4.abs().max(1.0);
        self.variance >= 0.0 && self.mu4 + slack >= self.variance * self.variance
    }
}

/// Raw moments of a sum of independent variables.
pub fn convolve_raw(a: &RawMoments, b: &RawMoments) -> RawMoments {
    const BINOM: [[f64; 5]; 5] = [
        [1.0, 0.0, 0.0, 0.0, 0.0],
        [1.0, 1.0, 0.0, 0.0, 0.0],
        [1.0, 2.0, 1.0, 0.0, 0.0],
        [1.0, 3.0, 3.0, 1.0, 0.0],
        [1.0, 4.0, 6.0, 4.0, 1.0],
    ];
    let get = |m: &RawMoments, k: usize| if k == 0 { 1.0 } else { m[k - 1] };
    let mut out = [0.0; 4];
    for (k, slot) in out.iter_mut().enumerate() {
        let order = k + 1;
        *slot = (0..=order)
            .map(|j| BINOM[order][j] * get(a, j) * get(b, order - j))
            .sum();
    }
    out
}

/// Raw moments of `c·Z` given those of `Z`.
pub fn scale_raw(m: &RawMoments, c: f64) -> RawMoments {
    [m[0] * c, m[1] * c * c, m[2] * c.powi(3), m[3] * c.powi(4)]
}

/// Raw log-moments of the positive α-stable law, 0 < α < 1.
pub fn stable_log_raw_moments(alpha: f64) -> Result<RawMoments> {
    check_range(
        "alpha",
        alpha,
        alpha > 0.0 && alpha < 1.0,
        "alpha in (0, 1)",
    )?;
    let a = alpha;
    let (c2, c3, c4) = (C * C, C.powi(3), C.powi(4));
    let pi2 = PI * PI;
    let pi4 = pi2 * pi2;
    let m1 = C * (1.0 / a - 1.0);
    let m2 = (1.0 / a - 1.0).powi(2) * c2 + pi2 / 6.0 * (1.0 / (a * a) - 1.0);
    let m3 = (-2.0 * (a - 1.0).powi(3) * c3 + C * pi2 * (a - 1.0).powi(2) * (1.0 + a)
        - 4.0 * (a.powi(3) - 1.0) * ZETA3)
        / (2.0 * a.powi(3));
    let m4 = (1.0 / a.powi(3) - 1.0 / a.powi(4))
        * (60.0 * c4 * (a - 1.0).powi(3) - 60.0 * c2 * pi2 * (a - 1.0).powi(2) * (1.0 + a)
            + pi4 * (a - 3.0) * (1.0 + a) * (3.0 + a)
            + 480.0 * C * (a.powi(3) - 1.0) * ZETA3)
        / 60.0;
    Ok([m1, m2, m3, m4])
}

/// Raw moments of `ln|S_α|` for the symmetric α-stable law, 0 < α ≤ 2.
pub fn sym_stable_log_raw_moments(alpha: f64) -> Result<RawMoments> {
    check_range(
        "alpha",
        alpha,
        alpha > 0.0 && alpha <= 2.0,
        "alpha in (0, 2]",
    )?;
    let a = alpha;
    let (c2, c3, c4) = (C * C, C.powi(3), C.powi(4));
    let pi2 = PI * PI;
    let pi4 = pi2 * pi2;
    let a2 = a * a;
    let m1 = C * (1.0 / a - 1.0);
    let m2 = (12.0 * c2 * (a - 1.0).powi(2) + (a2 + 2.0) * pi2) / (12.0 * a2);
    let m3 = (1.0 - a)
        * (4.0 * (a - 1.0).powi(2) * c3 + (a2 + 2.0) * C * pi2 + 8.0 * (a2 + a + 1.0) * ZETA3)
        / (4.0 * a.powi(3));
    let m4 = (240.0 * (a - 1.0).powi(4) * c4
        + 120.0 * (a - 1.0).powi(2) * (a2 + 2.0) * c2 * pi2
        + (19.0 * a2 * a2 + 20.0 * a2 + 36.0) * pi4
        + 1920.0 * (a - 1.0).powi(2) * (a2 + a + 1.0) * C * ZETA3)
        / (240.0 * a2 * a2);
    Ok([m1, m2, m3, m4])
}

/// Raw moments of `ln U` for U ~ Gamma(shape δ, rate μ).
pub fn gamma_log_raw_moments(delta: f64, mu: f64) -> Result<RawMoments> {
    check_range(
        "delta",
        delta,
        delta > 0.0 && delta.is_finite(),
        "delta > 0",
    )?;
    check_range("mu", mu, mu > 0.0 && mu.is_finite(), "mu > 0")?;
    let l = mu.ln();
    let p0 = digamma(delta);
    let p1 = psi(1, delta);
    let p2 = psi(2, delta);
    let p3 = psi(3, delta);
    let m1 = p0 - l;
    let m2 = (l - p0).powi(2) + p1;
    let m3 = -(l - p0).powi(3) + 3.0 * (p0 - l) * p1 + p2;
    let m4 = l.powi(4) - 4.0 * l * p0.powi(3)
        + p0.powi(4)
        + 6.0 * l * l * p1
        + 3.0 * p1 * p1
        + 6.0 * p0 * p0 * (l * l + p1)
        - 4.0 * p0 * (l.powi(3) + 3.0 * l * p1 - p2)
        - 4.0 * l * p2
        + p3;
    Ok([m1, m2, m3, m4])
}

fn mixing_raw(alpha: f64, delta: f64, mu: f64) -> RawMoments {
    let u = gamma_log_raw_moments(delta, mu).expect("validated params");
    scale_raw(&u, 1.0 / alpha)
}

/// Log-moments of gML (α, δ, μ) assembled by convolution only.
pub fn gml_log_moments_by_convolution(p: &GmlParams) -> LogMomentSet {
    let u = mixing_raw(p.alpha(), p.delta(), p.mu());
    if p.alpha() == 1.0 {
        return LogMomentSet::from_raw(&u);
    }
    let s = stable_log_raw_moments(p.alpha()).expect("alpha < 1");
    LogMomentSet::from_raw(&convolve_raw(&u, &s))
}

/// Log-moments of gL (α, δ, μ) assembled by convolution only.
pub fn gl_log_moments_by_convolution(p: &GlParams) -> LogMomentSet {
    let u = mixing_raw(p.alpha(), p.delta(), p.mu());
    let s = sym_stable_log_raw_moments(p.alpha()).expect("validated alpha");
    LogMomentSet::from_raw(&convolve_raw(&u, &s))
}

/// Mean of `ln X`, shared by both families.
pub fn log_mean(alpha: f64, delta: f64, mu: f64) -> f64 {
    C * (1.0 / alpha - 1.0) + (digamma(delta) - mu.ln()) / alpha
}

/// Variance of `ln X` for gML: (π²/6)(1/α² − 1) + ψ'(δ)/α².
pub fn gml_log_variance(alpha: f64, delta: f64) -> f64 {
    PI * PI / 6.0 * (1.0 / (alpha * alpha) - 1.0) + trigamma(delta) / (alpha * alpha)
}

/// Variance of `ln|Y|` for gL: π²(α²+2)/(12α²) + ψ'(δ)/α².
pub fn gl_log_variance(alpha: f64, delta: f64) -> f64 {
    let a2 = alpha * alpha;
    PI * PI * (a2 + 2.0) / (12.0 * a2) + trigamma(delta) / a2
}

/// Third central log-moment, shared by both families.
pub fn log_mu3(alpha: f64, delta: f64) -> f64 {
    (psi(2, delta) - 2.0 * (alpha.powi(3) - 1.0) * ZETA3) / alpha.powi(3)
}

/// Theoretical log-moments of gML(α, δ, μ).
pub fn gml_log_moments(p: &GmlParams) -> LogMomentSet {
    let (a, d, m) = (p.alpha(), p.delta(), p.mu());
    LogMomentSet {
        mean: log_mean(a, d, m),
        variance: gml_log_variance(a, d),
        mu3: log_mu3(a, d),
        mu4: gml_log_moments_by_convolution(p).mu4,
    }
}

/// Theoretical log-moments of gL(α, δ, μ) (moments of `ln|Y|`).
pub fn gl_log_moments(p: &GlParams) -> LogMomentSet {
    let (a, d, m) = (p.alpha(), p.delta(), p.mu());
    LogMomentSet {
        mean: log_mean(a, d, m),
        variance: gl_log_variance(a, d),
        mu3: log_mu3(a, d),
        mu4: gl_log_moments_by_convolution(p).mu4,
    }
}

/// `E U^s` for U ~ Gamma(δ, μ): Γ(δ+s) / (μ^s Γ(δ)).
fn gamma_power_moment(s: f64, delta: f64, mu: f64) -> f64 {
    (ln_gamma(delta + s) - ln_gamma(delta) - s * mu.ln()).exp()
}

/// `E X^q` for X ~ gML(α, δ, μ), 0 < q < α.
pub fn gml_fractional_moment(q: f64, p: &GmlParams) -> Result<f64> {
    let a = p.alpha();
    check_range("q", q, q > 0.0 && q < a, "0 < q < alpha")?;
    let s = q / a;
    let stable = (ln_gamma(1.0 - s) - ln_gamma(1.0 - q)).exp();
    Ok(gamma_power_moment(s, p.delta(), p.mu()) * stable)
}

/// `E|S_α|^q` for the symmetric α-stable law, written as
/// (2/π) Γ(q) sin(πq/2) Γ(1 − q/α), which stays finite at q = 1.
pub fn sym_stable_abs_moment(q: f64, alpha: f64) -> Result<f64> {
    check_range(
        "alpha",
        alpha,
        alpha > 0.0 && alpha <= 2.0,
        "alpha in (0, 2]",
    )?;
    check_range("q", q, q > 0.0 && q < alpha, "0 < q < alpha")?;
    Ok(2.0 / PI * gamma(q) * (PI * q / 2.0).sin() * gamma(1.0 - q / alpha))
}

/// `E|Y|^q` for Y ~ gL(α, δ, μ), 0 < q < α, as the product of the gamma and
/// symmetric-stable factors.
pub fn gl_abs_fractional_moment(q: f64, p: &GlParams) -> Result<f64> {
    let a = p.alpha();
    check_range("q", q, q > 0.0 && q < a, "0 < q < alpha")?;
    Ok(gamma_power_moment(q / a, p.delta(), p.mu()) * sym_stable_abs_moment(q, a)?)
}

/// The reflection-formula closed form
/// Γ(q) sin(πq) Γ(δ+q/α) / (μ^{q/α} sin(πq/α) cos(πq/2) Γ(δ) Γ(q/α)).
/// It has removable singularities (e.g. q = 1); prefer
/// [`gl_abs_fractional_moment`] for evaluation.
pub fn gl_abs_fractional_moment_closed_form(q: f64, p: &GlParams) -> f64 {
    let (a, d, m) = (p.alpha(), p.delta(), p.mu());
    let s = q / a;
    gamma(q) * (PI * q).sin() * gamma(d + s)
        / (m.powf(s) * (PI * s).sin() * (PI * q / 2.0).cos() * gamma(d) * gamma(s))
}
