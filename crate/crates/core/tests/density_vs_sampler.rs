//! The series density and the mixture sampler describe the same law.

use linnik::sampling::{sample_gml, GmlParams, RngStream};
use linnik::specfun::gml_density;

fn window_density(x: &[f64], at: f64, h: f64) -> f64 {
    x.iter().filter(|v| (**v - at).abs() < h).count() as f64 / (x.len() as f64 * 2.0 * h)
}

#[test]
fn empirical_density_matches_series() {
    let p = GmlParams::new(0.7, 1.2, 1.0).unwrap();
    // mpmath, 30 digits
    let f = gml_density(0.5, &p).unwrap().value;
    assert!((f - 0.416_547_570_573_728_6).abs() < 1e-12);

    let x = sample_gml(&p, 2_000_000, &mut RngStream::new(808, 0));
    for at in [0.2, 0.5, 1.0, 2.0, 4.0] {
        let emp = window_density(&x, at, 0.01);
        let exact = gml_density(at, &p).unwrap().value;
        assert!((emp - exact).abs() < 1e-2, "x = {at}: {emp} vs {exact}");
    }
}

#[test]
fn empirical_density_tracks_heavier_tail() {
    let p = GmlParams::new(0.5, 2.0, 3.0).unwrap();
    let x = sample_gml(&p, 2_000_000, &mut RngStream::new(809, 0));
    for at in [0.05, 0.1, 0.3, 1.0] {
        let emp = window_density(&x, at, 0.005);
        let exact = gml_density(at, &p).unwrap().value;
        assert!(
            (emp - exact).abs() < 2e-2 * exact.max(1.0),
            "x = {at}: {emp} vs {exact}"
        );
    }
}
