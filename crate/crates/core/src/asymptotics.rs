//! Delta-method variances and asymptotic intervals for the two-parameter fits.
//!
//! With `T = (mean, variance)` of the log data, `√n (T − θ)` is asymptotically
//! normal with covariance `Σ = [[σ², μ₃], [μ₃, μ₄ − σ⁴]]`, and each estimator
//! `g(T)` inherits variance `∇gᵀ Σ ∇g`.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{gl2_from_moments, gml2_from_moments, Family, FitResult};
use crate::moments::{gl_log_moments, gml_log_moments, LogMomentSet};
use crate::sampling::{GlParams, GmlParams};
use crate::specfun::{normal_quantile, EULER_GAMMA as C};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntervalMethod {
    Asymptotic,
    Bootstrap,
}

/// A point estimate with a two-sided interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalEstimate {
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub method: IntervalMethod,
}

impl IntervalEstimate {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

/// Symmetric 2×2 covariance of (sample mean, sample variance).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentCovariance {
    m: [[f64; 2]; 2],
}

impl MomentCovariance {
    pub fn new(m: [[f64; 2]; 2]) -> Result<Self> {
        let [[a, b], [c, d]] = m;
        if !m.iter().flatten().all(|x| x.is_finite()) {
            return Err(Error::InvalidCovariance("non-finite entry".into()));
        }
        if b != c {
            return Err(Error::InvalidCovariance("matrix is not symmetric".into()));
        }
        let slack = 1e-12 * (a.abs() * d.abs()).max(1.0);
        if a < 0.0 || d < 0.0 || a * d - b * c < -slack {
            return Err(Error::InvalidCovariance(format!(
                "not positive semidefinite: [[{a}, {b}], [{c}, {d}]]"
            )));
        }
        Ok(Self { m })
    }

    pub fn matrix(&self) -> [[f64; 2]; 2] {
        self.m
    }

    /// `gᵀ Σ g`.
    pub fn quadratic_form(&self, g: [f64; 2]) -> f64 {
        let [[a, b], [_, d]] = self.m;
        a * g[0] * g[0] + 2.0 * b * g[0] * g[1] + d * g[1] * g[1]
    }
}

/// `[[σ², μ₃], [μ₃, μ₄ − σ⁴]]`.
pub fn moment_covariance(m: &LogMomentSet) -> Result<MomentCovariance> {
    if !m.is_valid() {
        return Err(Error::InvalidCovariance(format!(
            "inconsistent moments {m:?}"
        )));
    }
    // μ₄ ≥ σ⁴ holds exactly; clip rounding below it
    let kurt = (m.mu4 - m.variance * m.variance).max(0.0);
    MomentCovariance::new([[m.variance, m.mu3], [m.mu3, kurt]])
}

/// Asymptotic variances `gᵢᵀ Σ gᵢ` for each gradient row.
pub fn delta_method_variance(
    gradients: &[[f64; 2]; 2],
    cov: &MomentCovariance,
) -> Result<[f64; 2]> {
    if !gradients.iter().flatten().all(|x| x.is_finite()) {
        return Err(Error::InvalidCovariance("non-finite gradient".into()));
    }
    Ok(gradients.map(|g| cov.quadratic_form(g).max(0.0)))
}

/// Gradients of (α̂, μ̂) with respect to (mean, variance) for the closed-form
/// inversions, evaluated at the given log-moments.
pub fn analytic_gradient(family: Family, m: &LogMomentSet) -> Result<[[f64; 2]; 2]> {
    let (alpha, mu, dalpha_dv) = match family {
        Family::Gml => {
            let (alpha, mu) = gml2_from_moments(m);
            let d = -3.0 * SQRT_2 * PI * (6.0 * m.variance + PI * PI).powf(-1.5);
            (alpha, mu, d)
        }
        Family::Gl => {
            let (alpha, mu) = gl2_from_moments(m)?;
            let d = -12.0 * PI * (12.0 * m.variance - PI * PI).powf(-1.5);
            (alpha, mu, d)
        }
    };
    Ok([
        [0.0, dalpha_dv],
        [-alpha * mu, -mu * (C + m.mean) * dalpha_dv],
    ])
}

/// Central finite-difference gradient of the same maps, with step `h` relative
/// to each coordinate.
pub fn finite_difference_gradient(
    family: Family,
    m: &LogMomentSet,
    h: f64,
) -> Result<[[f64; 2]; 2]> {
    let eval = |mean: f64, variance: f64| -> Result<[f64; 2]> {
        let mm = LogMomentSet {
            mean,
            variance,
            ..*m
        };
        let (a, mu) = match family {
            Family::Gml => gml2_from_moments(&mm),
            Family::Gl => gl2_from_moments(&mm)?,
        };
        Ok([a, mu])
    };
    let hm = h * m.mean.abs().max(1.0);
    let hv = h * m.variance.abs().max(1.0);
    let (mp, mn) = (
        eval(m.mean + hm, m.variance)?,
        eval(m.mean - hm, m.variance)?,
    );
    let (vp, vn) = (
        eval(m.mean, m.variance + hv)?,
        eval(m.mean, m.variance - hv)?,
    );
    let mut g = [[0.0; 2]; 2];
    for i in 0..2 {
        g[i][0] = (mp[i] - mn[i]) / (2.0 * hm);
        g[i][1] = (vp[i] - vn[i]) / (2.0 * hv);
    }
    Ok(g)
}

/// Asymptotic variances of √n(α̂ − α) and √n(μ̂ − μ) at a δ = 1 parameter point.
pub fn asymptotic_variances(family: Family, alpha: f64, mu: f64) -> Result<[f64; 2]> {
    let m = match family {
        Family::Gml => gml_log_moments(&param_in_support(
            GmlParams::new(alpha, 1.0, mu),
            "(0, 1]",
            alpha,
        )?),
        Family::Gl => gl_log_moments(&param_in_support(
            GlParams::new(alpha, 1.0, mu),
            "(0, 2]",
            alpha,
        )?),
    };
    delta_method_variance(&analytic_gradient(family, &m)?, &moment_covariance(&m)?)
}

fn param_in_support<P>(p: Result<P>, support: &'static str, alpha: f64) -> Result<P> {
    p.map_err(|_| Error::OutsideSupport {
        name: "alpha",
        value: alpha,
        support,
    })
}

/// Intervals for α and μ from a two-parameter fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticIntervals {
    pub alpha: IntervalEstimate,
    pub mu: IntervalEstimate,
}

/// `point ± z_{(1+level)/2} √(v / n)` with the covariance evaluated at the
/// fitted parameters. Fails for three-parameter fits and when α̂ falls outside
/// the family's support, where the covariance does not exist.
pub fn asymptotic_ci(fit: &FitResult, n: usize, level: f64) -> Result<AsymptoticIntervals> {
    if fit.nparams != 2 {
        return Err(Error::Unsupported(
            "asymptotic intervals are available for two-parameter fits only".into(),
        ));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidParameter {
            name: "level",
            value: level,
            expected: "level in (0, 1)",
        });
    }
    if n == 0 {
        return Err(Error::EmptyData);
    }
    let [va, vm] = asymptotic_variances(fit.family, fit.alpha, fit.mu)?;
    let z = normal_quantile(0.5 * (1.0 + level))?;
    let interval = |point: f64, v: f64| {
        let half = z * (v / n as f64).sqrt();
        IntervalEstimate {
            point,
            lower: point - half,
            upper: point + half,
            level,
            method: IntervalMethod::Asymptotic,
        }
    };
    Ok(AsymptoticIntervals {
        alpha: interval(fit.alpha, va),
        mu: interval(fit.mu, vm),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{fit_gl2, fit_gml2, fit_gml3};
    use crate::sampling::{sample_gl, sample_gml, RngStream};
    use crate::specfun::ZETA3;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn moments(mean: f64, variance: f64, mu3: f64, mu4: f64) -> LogMomentSet {
        LogMomentSet {
            mean,
            variance,
            mu3,
            mu4,
        }
    }

    fn two_param_fit(family: Family, alpha: f64, mu: f64, n: usize) -> FitResult {
        FitResult {
            family,
            nparams: 2,
            alpha,
            delta: 1.0,
            mu,
            objective: 0.0,
            converged: true,
            at_boundary: false,
            n,
            dropped: 0,
        }
    }

    #[test]
    fn covariance_examples() {
        let c = moment_covariance(&moments(0.0, 1.0, 0.0, 3.0)).unwrap();
        assert_eq!(c.matrix(), [[1.0, 0.0], [0.0, 2.0]]);

        let m = gml_log_moments(&GmlParams::new(1.0, 1.0, 1.0).unwrap());
        let c = moment_covariance(&m).unwrap().matrix();
        let pi4 = PI.powi(4);
        assert_relative_eq!(c[0][0], PI * PI / 6.0, max_relative = 1e-12);
        assert_relative_eq!(c[0][1], -2.0 * ZETA3, max_relative = 1e-12);
        assert_relative_eq!(c[1][1], 3.0 * pi4 / 20.0 - pi4 / 36.0, max_relative = 1e-10);

        assert!(moment_covariance(&moments(0.0, -1.0, 0.0, 3.0)).is_err());
        assert!(moment_covariance(&moments(0.0, 2.0, 0.0, 3.0)).is_err());
    }

    #[test]
    fn gl_alpha_two_covariance_matches_simulation() {
        let p = GlParams::new(2.0, 1.0, 1.0).unwrap();
        let c = moment_covariance(&gl_log_moments(&p)).unwrap().matrix();
        let y = sample_gl(&p, 1_000_000, &mut RngStream::new(31, 0));
        let emp = crate::estimators::sample_log_moments(&y, true).unwrap();
        let ec = moment_covariance(&emp).unwrap().matrix();
        assert!((c[0][0] - ec[0][0]).abs() < 0.01 * c[0][0]);
        assert!((c[0][1] - ec[0][1]).abs() < 0.05 * c[0][1].abs().max(1.0));
        assert!((c[1][1] - ec[1][1]).abs() < 0.05 * c[1][1]);
    }

    #[test]
    fn linear_maps() {
        let cov = MomentCovariance::new([[1.0, 0.0], [0.0, 2.0]]).unwrap();
        assert_eq!(
            delta_method_variance(&[[1.0, 0.0], [0.0, 1.0]], &cov).unwrap(),
            [1.0, 2.0]
        );
        assert_eq!(
            delta_method_variance(&[[2.0, 0.0], [0.0, 3.0]], &cov).unwrap(),
            [4.0, 18.0]
        );
        assert!(delta_method_variance(&[[f64::NAN, 0.0], [0.0, 1.0]], &cov).is_err());
    }

    #[test]
    fn covariance_validation() {
        assert!(MomentCovariance::new([[1.0, 0.5], [0.4, 1.0]]).is_err());
        assert!(MomentCovariance::new([[1.0, 2.0], [2.0, 1.0]]).is_err());
        assert!(MomentCovariance::new([[1.0, 1.0], [1.0, 1.0]]).is_ok());
    }

    #[test]
    fn gradients_match_finite_differences_on_study_grid() {
        let cells = [
            (Family::Gml, 0.5),
            (Family::Gml, 0.7),
            (Family::Gml, 0.95),
            (Family::Gl, 0.6),
            (Family::Gl, 1.2),
            (Family::Gl, 1.8),
        ];
        for (family, a) in cells {
            for mu in [0.5, 1.0, 3.0] {
                let m = match family {
                    Family::Gml => gml_log_moments(&GmlParams::new(a, 1.0, mu).unwrap()),
                    Family::Gl => gl_log_moments(&GlParams::new(a, 1.0, mu).unwrap()),
                };
                let an = analytic_gradient(family, &m).unwrap();
                let fd = finite_difference_gradient(family, &m, 1e-6).unwrap();
                for i in 0..2 {
                    for j in 0..2 {
                        let scale = an[i][j].abs().max(1e-3);
                        assert!(
                            (an[i][j] - fd[i][j]).abs() <= 1e-6 * scale,
                            "{family} {a} {mu}: {an:?} {fd:?}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn refuses_three_parameter_and_out_of_support_fits() {
        let x = sample_gml(
            &GmlParams::new(0.8, 1.0, 1.0).unwrap(),
            500,
            &mut RngStream::new(32, 0),
        );
        let f3 = fit_gml3(&x).unwrap();
        assert!(matches!(
            asymptotic_ci(&f3, 500, 0.95),
            Err(Error::Unsupported(_))
        ));
        let f = two_param_fit(Family::Gml, 1.2, 1.0, 100);
        assert!(matches!(
            asymptotic_ci(&f, 100, 0.95),
            Err(Error::OutsideSupport { .. })
        ));
        let f = two_param_fit(Family::Gml, 0.8, 1.0, 100);
        assert!(asymptotic_ci(&f, 100, 1.0).is_err());
    }

    #[test]
    fn width_shrinks_with_n() {
        for family in [Family::Gml, Family::Gl] {
            let f = two_param_fit(family, 0.9, 2.0, 0);
            let w1 = asymptotic_ci(&f, 1000, 0.95).unwrap();
            let w4 = asymptotic_ci(&f, 4000, 0.95).unwrap();
            assert!((w4.alpha.width() / w1.alpha.width() - 0.5).abs() < 1e-9);
            assert!((w4.mu.width() / w1.mu.width() - 0.5).abs() < 1e-9);
            let far = asymptotic_ci(&f, 1 << 40, 0.95).unwrap();
            assert!(far.alpha.width() < 1e-4 && far.alpha.contains(0.9));
        }
    }

    #[test]
    fn gml_alpha_variance_matches_replications() {
        // empirical variance of √n(α̂ − α) over replications
        let (alpha, n, reps) = (0.95, 10_000, 400);
        let [va, _] = asymptotic_variances(Family::Gml, alpha, 1.0).unwrap();
        let p = GmlParams::new(alpha, 1.0, 1.0).unwrap();
        let est: Vec<f64> = (0..reps)
            .map(|r| {
                fit_gml2(&sample_gml(&p, n, &mut RngStream::new(33, r)))
                    .unwrap()
                    .alpha
            })
            .collect();
        let mean = est.iter().sum::<f64>() / reps as f64;
        let var =
            est.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (reps - 1) as f64 * n as f64;
        // sd of a variance estimate from 400 draws is about 7%
        assert!(
            (var / va - 1.0).abs() < 0.2,
            "empirical {var}, asymptotic {va}"
        );
    }

    #[test]
    fn gl_interval_covers_truth_on_a_sample() {
        let p = GlParams::new(1.2, 1.0, 1.0).unwrap();
        let y = sample_gl(&p, 10_000, &mut RngStream::new(34, 0));
        let f = fit_gl2(&y).unwrap();
        let ci = asymptotic_ci(&f, f.n, 0.999).unwrap();
        assert!(ci.alpha.contains(1.2) && ci.mu.contains(1.0), "{ci:?}");
    }

    proptest! {
        #[test]
        fn variances_nonnegative(a in 0.05f64..0.999, mu in 0.05f64..20.0, gl in any::<bool>()) {
            let (family, a) = if gl { (Family::Gl, 2.0 * a) } else { (Family::Gml, a) };
            let v = asymptotic_variances(family, a, mu).unwrap();
            prop_assert!(v[0] >= 0.0 && v[1] >= 0.0);
        }
    }
}
