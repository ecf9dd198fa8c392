use kms_web::{cutoff, estimator_curve, RodDemo};

#[test]
fn cutoff_and_estimator() {
    let w = cutoff(0.05, 0.01, 1e-8).unwrap();
    assert!((w - 0.0435890).abs() < 1e-6);
    let c = estimator_curve(1e-8, w, 1e-5, 1.0, 50).unwrap();
    assert_eq!(c.len(), 100);
    assert!((c[50 + 49] - estimator_at(1.0, w)).abs() < 1e-15);
    assert!(c[50..].windows(2).all(|p| p[1] >= p[0]));
}

fn estimator_at(w: f64, wm: f64) -> f64 {
    (w * w + 1e-16) / (w * w + wm * wm)
}

#[test]
fn rod_demo_stays_under_estimator() {
    let d = RodDemo::new(40, 0.05, 2).unwrap();
    assert_eq!(d.n(), 41);
    assert!(d.mu() > 0 && d.r() <= d.n());
    let c = d.error_curve(4.0, 8.0, 1e-5, 1e-2, 40).unwrap();
    let (err, est) = (&c[40..80], &c[80..]);
    for (e, b) in err.iter().zip(est) {
        assert!(e.is_nan() || e <= b, "{e} > {b}");
    }
    let s = d.spectrum(4.0, 8.0, 10).unwrap();
    assert_eq!(s.len(), 20);
    for k in 0..10 {
        assert!((s[k] - s[10 + k]).abs() <= 1e-3 * s[k]);
    }
    assert!(d.spectrum(0.0, 0.0, 10).is_ok());
}
