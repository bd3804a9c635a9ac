//! Exact random variate generation.
//!
//! Positive α-stable variables come from Kanter's representation, symmetric
//! α-stable variables from the Chambers–Mallows–Stuck transform, and the gML
//! and gL laws from their gamma mixtures `U^{1/α} S`.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::distr::{Distribution, Open01};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_range, Result};

/// Parameters of the generalized Mittag-Leffler law gML(α, δ, μ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct GmlParams {
    alpha: f64,
    delta: f64,
    mu: f64,
}

/// Parameters of the generalized Linnik law gL(α, δ, μ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct GlParams {
    alpha: f64,
    delta: f64,
    mu: f64,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    alpha: f64,
    delta: f64,
    mu: f64,
}

fn check_shape_rate(delta: f64, mu: f64) -> Result<()> {
    check_range(
        "delta",
        delta,
        delta > 0.0 && delta.is_finite(),
        "delta > 0",
    )?;
    check_range("mu", mu, mu > 0.0 && mu.is_finite(), "mu > 0")
}

impl GmlParams {
    pub fn new(alpha: f64, delta: f64, mu: f64) -> Result<Self> {
        check_range(
            "alpha",
            alpha,
            alpha > 0.0 && alpha <= 1.0,
            "alpha in (0, 1]",
        )?;
        check_shape_rate(delta, mu)?;
        Ok(Self { alpha, delta, mu })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }
}

impl GlParams {
    pub fn new(alpha: f64, delta: f64, mu: f64) -> Result<Self> {
        check_range(
            "alpha",
            alpha,
            alpha > 0.0 && alpha <= 2.0,
            "alpha in (0, 2]",
        )?;
        check_shape_rate(delta, mu)?;
        Ok(Self { alpha, delta, mu })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }
}

macro_rules! raw_conversions {
    ($t:ty) => {
        impl TryFrom<RawParams> for $t {
            type Error = crate::Error;
            fn try_from(r: RawParams) -> Result<Self> {
                <$t>::new(r.alpha, r.delta, r.mu)
            }
        }
        impl From<$t> for RawParams {
            fn from(p: $t) -> Self {
                RawParams {
                    alpha: p.alpha,
                    delta: p.delta,
                    mu: p.mu,
                }
            }
        }
    };
}
raw_conversions!(GmlParams);
raw_conversions!(GlParams);

/// A reproducible random stream identified by `(seed, stream_id)`.
///
/// Backed by ChaCha8, whose output depends only on the key and stream number,
/// so parallel workers that each own a distinct `stream_id` produce the same
/// variates no matter how they are scheduled.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Uniform on the open interval (0, 1).
fn open01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    Open01.sample(rng)
}

/// Standard exponential via -ln(u) with u in (0, 1), so E is finite and nonzero.
fn std_exp<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    -open01(rng).ln()
}

/// Kanter's transform of a uniform angle `u ∈ (0, π)` and a unit exponential `e`.
pub fn kanter(alpha: f64, u: f64, e: f64) -> f64 {
    let b = 1.0 / alpha - 1.0;
    (alpha * u).sin() * ((1.0 - alpha) * u).sin().powf(b) / (u.sin().powf(1.0 / alpha) * e.powf(b))
}

/// Chambers–Mallows–Stuck transform for the symmetric case, `u ∈ (-π/2, π/2)`.
pub fn cms_symmetric(alpha: f64, u: f64, e: f64) -> f64 {
    if alpha == 1.0 {
        u.tan()
    } else if alpha == 2.0 {
        // Gaussian branch with variance 2
        2.0 * u.sin() * e.sqrt()
    } else {
        (alpha * u).sin() / u.cos().powf(1.0 / alpha)
            * (((1.0 - alpha) * u).cos() / e).powf(1.0 / alpha - 1.0)
    }
}

/// Positive strictly α-stable law with Laplace transform `exp(-t^α)`, 0 < α < 1.
#[derive(Debug, Clone, Copy)]
pub struct PositiveStable {
    alpha: f64,
}

impl PositiveStable {
    pub fn new(alpha: f64) -> Result<Self> {
        check_range(
            "alpha",
            alpha,
            alpha > 0.0 && alpha < 1.0,
            "alpha in (0, 1)",
        )?;
        Ok(Self { alpha })
    }
}

impl Distribution<f64> for PositiveStable {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u = PI * open01(rng);
        let e = std_exp(rng);
        kanter(self.alpha, u, e)
    }
}

/// Symmetric α-stable law with characteristic function `exp(-|t|^α)`, 0 < α ≤ 2.
#[derive(Debug, Clone, Copy)]
pub struct SymmetricStable {
    alpha: f64,
}

impl SymmetricStable {
    pub fn new(alpha: f64) -> Result<Self> {
        check_range(
            "alpha",
            alpha,
            alpha > 0.0 && alpha <= 2.0,
            "alpha in (0, 2]",
        )?;
        Ok(Self { alpha })
    }
}

impl Distribution<f64> for SymmetricStable {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u = PI * open01(rng) - FRAC_PI_2;
        if self.alpha == 1.0 {
            return u.tan();
        }
        let e = std_exp(rng);
        cms_symmetric(self.alpha, u, e)
    }
}

/// Gamma law with shape δ and rate μ (Marsaglia–Tsang, boosted for δ < 1).
#[derive(Debug, Clone, Copy)]
pub struct GammaRate {
    shape: f64,
    rate: f64,
    // Marsaglia–Tsang constants for max(shape, shape + 1)
    d: f64,
    c: f64,
}

impl GammaRate {
    pub fn new(shape: f64, rate: f64) -> Result<Self> {
        check_shape_rate(shape, rate)?;
        let boosted = if shape < 1.0 { shape + 1.0 } else { shape };
        let d = boosted - 1.0 / 3.0;
        Ok(Self {
            shape,
            rate,
            d,
            c: 1.0 / (9.0 * d).sqrt(),
        })
    }

    fn standard<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let z: f64 = rng.sample(StandardNormal);
            let v = 1.0 + self.c * z;
            if v <= 0.0 {
                continue;
            }
            let v = v * v * v;
            let u = open01(rng);
            let z2 = z * z;
            if u < 1.0 - 0.0331 * z2 * z2 || u.ln() < 0.5 * z2 + self.d * (1.0 - v + v.ln()) {
                return self.d * v;
            }
        }
    }
}

impl Distribution<f64> for GammaRate {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let g = self.standard(rng);
        let g = if self.shape < 1.0 {
            g * open01(rng).powf(1.0 / self.shape)
        } else {
            g
        };
        g / self.rate
    }
}

/// gML(α, δ, μ) as the mixture `U^{1/α} S`; α = 1 degenerates to the gamma law.
#[derive(Debug, Clone, Copy)]
pub struct Gml {
    inv_alpha: f64,
    mixing: GammaRate,
    stable: Option<PositiveStable>,
}

impl Gml {
    pub fn new(p: &GmlParams) -> Self {
        let mixing = GammaRate::new(p.delta, p.mu).expect("validated params");
        let stable = (p.alpha < 1.0).then(|| PositiveStable::new(p.alpha).expect("alpha < 1"));
        Self {
            inv_alpha: 1.0 / p.alpha,
            mixing,
            stable,
        }
    }
}

impl Distribution<f64> for Gml {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u = self.mixing.sample(rng);
        match &self.stable {
            Some(s) => u.powf(self.inv_alpha) * s.sample(rng),
            None => u,
        }
    }
}

/// gL(α, δ, μ) as the mixture `U^{1/α} S_α`.
#[derive(Debug, Clone, Copy)]
pub struct Gl {
    inv_alpha: f64,
    mixing: GammaRate,
    stable: SymmetricStable,
}

impl Gl {
    pub fn new(p: &GlParams) -> Self {
        Self {
            inv_alpha: 1.0 / p.alpha,
            mixing: GammaRate::new(p.delta, p.mu).expect("validated params"),
            stable: SymmetricStable::new(p.alpha).expect("validated params"),
        }
    }
}

impl Distribution<f64> for Gl {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u = self.mixing.sample(rng);
        u.powf(self.inv_alpha) * self.stable.sample(rng)
    }
}

pub fn sample_alpha_plus_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> Result<f64> {
    Ok(PositiveStable::new(alpha)?.sample(rng))
}

pub fn sample_sym_alpha_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> Result<f64> {
    Ok(SymmetricStable::new(alpha)?.sample(rng))
}

pub fn sample_gamma<R: Rng + ?Sized>(delta: f64, mu: f64, rng: &mut R) -> Result<f64> {
    Ok(GammaRate::new(delta, mu)?.sample(rng))
}

/// `n` independent gML draws.
pub fn sample_gml<R: Rng + ?Sized>(p: &GmlParams, n: usize, rng: &mut R) -> Vec<f64> {
    let dist = Gml::new(p);
    (0..n).map(|_| dist.sample(rng)).collect()
}

/// `n` independent gL draws.
pub fn sample_gl<R: Rng + ?Sized>(p: &GlParams, n: usize, rng: &mut R) -> Vec<f64> {
    let dist = Gl::new(p);
    (0..n).map(|_| dist.sample(rng)).collect()
}
