use proptest::prelude::*;
use waveguide_core::geometry::*;
use waveguide_core::Error;

const ASYM: [(f64, f64); 3] = [(0.0, 0.0), (0.3, 0.1), (0.2, 0.0)];

fn surface(profile_f: impl Fn(f64) -> (f64, f64), xi: impl Fn(f64) -> (f64, f64), x: f64, t: f64) -> [f64; 3] {
    let (f, g) = profile_f(x);
    let (a, b) = xi(t);
    [x, f + a, g + b]
}

#[test]
fn circle_is_unit_speed_and_closed() {
    let cs = make_circle_cross_section(256).unwrap();
    let (speed, orth) = cs.invariant_violations();
    assert!(speed < 1e-14 && orth < 1e-12, "{speed} {orth}");
    assert_eq!(cs.closure_gap, 0.0);
    assert!(cs.is_circle());
    let m1: f64 = cs.xi1.iter().sum::<f64>() / 256.0;
    assert!(m1.abs() < 1e-15);
}

#[test]
fn too_few_samples_is_an_error() {
    assert!(matches!(make_circle_cross_section(8), Err(Error::InvalidArgument(_))));
    assert!(make_tangent_angle_cross_section(&[], 4).is_err());
    assert!(make_tangent_angle_cross_section(&[(f64::NAN, 0.0)], 64).is_err());
}

#[test]
fn zero_tangent_angle_is_the_circle_rotated() {
    let c = make_circle_cross_section(128).unwrap();
    let ta = make_tangent_angle_cross_section(&[], 128).unwrap();
    // phi = 2 pi t gives xi' = (cos, sin), the circle's tangent rotated by -pi/2
    for j in 0..128 {
        assert!((ta.dxi1[j] - c.dxi2[j]).abs() < 1e-14);
        assert!((ta.dxi2[j] + c.dxi1[j]).abs() < 1e-14);
    }
}

#[test]
fn asymmetric_curve_closes_and_is_unit_speed() {
    let cs = make_tangent_angle_cross_section(&ASYM, 512).unwrap();
    assert!(cs.closure_gap < 1e-13, "{}", cs.closure_gap);
    let (speed, orth) = cs.invariant_violations();
    assert!(speed < 1e-14 && orth < 1e-11);
    let coeffs = cs.tangent_angle_coefficients().unwrap();
    // only the first pair moves
    assert_eq!(&coeffs[1..], &ASYM[1..]);
    assert!(coeffs[0] != (0.0, 0.0));
    assert!(cs.reflection_violation() > 1e-3);
}

#[test]
fn sampled_curve_matches_finite_differences_of_itself() {
    // second-order centered differences of the reconstructed xi against the
    // analytic tangent
    let n = 2048;
    let cs = make_tangent_angle_cross_section(&ASYM, n).unwrap();
    let h = 1.0 / n as f64;
    let mut err = 0.0f64;
    for j in 0..n {
        let (jp, jm) = ((j + 1) % n, (j + n - 1) % n);
        let d1 = (cs.xi1[jp] - cs.xi1[jm]) / (2.0 * h);
        let d2 = (cs.xi2[jp] - cs.xi2[jm]) / (2.0 * h);
        err = err.max((d1 - cs.dxi1[j]).abs()).max((d2 - cs.dxi2[j]).abs());
    }
    // |xi'''| <= ~ 60^2 for these coefficients; h^2/6 * 3600 ~ 1.5e-4
    assert!(err < 5e-4, "{err}");
    let mut dd = 0.0f64;
    for j in 0..n {
        let (jp, jm) = ((j + 1) % n, (j + n - 1) % n);
        dd = dd.max(((cs.dxi1[jp] - cs.dxi1[jm]) / (2.0 * h) - cs.ddxi1[j]).abs());
    }
    assert!(dd < 1e-2, "{dd}");
}

#[test]
fn metric_matches_the_parametrization() {
    // f = w log cosh(x/w), g = 0.3 w log cosh(x/w): slopes tanh profile with (1, 0.3)
    let w = 1.3;
    let p = ReferenceProfile::tanh(1.0, 0.3, w);
    let cs = make_circle_cross_section(64).unwrap();
    let tp = std::f64::consts::TAU;
    let prof = |x: f64| {
        let f = w * (x / w).cosh().ln();
        (f, 0.3 * f)
    };
    let xi = |t: f64| ((tp * t).cos() / tp, (tp * t).sin() / tp);
    let e = 1e-5;
    for &(x, t) in &[(0.3, 0.1), (-1.7, 0.55), (2.2, 0.83)] {
        let px: Vec<f64> = (0..3)
            .map(|k| (surface(prof, xi, x + e, t)[k] - surface(prof, xi, x - e, t)[k]) / (2.0 * e))
            .collect();
        let pt: Vec<f64> = (0..3)
            .map(|k| (surface(prof, xi, x, t + e)[k] - surface(prof, xi, x, t - e)[k]) / (2.0 * e))
            .collect();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| u * v).sum::<f64>();
        let m = metric_at(&cs, &p, x, t);
        assert!((m.g11 - dot(&px, &px)).abs() < 1e-8);
        assert!((m.g12 - dot(&px, &pt)).abs() < 1e-8);
        assert!((m.g22 - dot(&pt, &pt)).abs() < 1e-8);
        let det = dot(&px, &px) * dot(&pt, &pt) - dot(&px, &pt).powi(2);
        assert!((m.det - det).abs() < 1e-8);
        assert!((m.h * m.h - m.det).abs() < 1e-12);
    }
}

#[test]
fn broken_profile_slopes() {
    let p = ReferenceProfile::broken(0.5);
    assert!(p.is_broken());
    assert_eq!(p.limits(), (0.0, 0.5));
    assert_eq!(p.slopes(2.0).gp, 0.5);
    assert_eq!(p.slopes(-2.0).gp, -0.5);
    assert_eq!(p.slopes(0.0).gp, 0.0);
    assert!(ReferenceProfile::broken(0.0).validate().is_err());
    assert!(ReferenceProfile::tanh(1.0, 0.0, -1.0).validate().is_err());
}

#[test]
fn slope_table_reproduces_tanh_at_nodes_and_holds_outside() {
    let xs: Vec<f64> = (0..=80).map(|i| -4.0 + 0.1 * i as f64).collect();
    let fp: Vec<f64> = xs.iter().map(|x| x.tanh()).collect();
    let fpp: Vec<f64> = xs.iter().map(|x| 1.0 / x.cosh().powi(2)).collect();
    let z = vec![0.0; xs.len()];
    let t = ReferenceProfile::Smooth(SmoothProfile::Table(
        SlopeTable::new(xs.clone(), fp.clone(), z.clone(), fpp.clone(), z.clone()).unwrap(),
    ));
    let exact = ReferenceProfile::tanh(1.0, 0.0, 1.0);
    for x in [-3.33, -0.05, 0.77, 2.01] {
        let (a, b) = (t.slopes(x), exact.slopes(x));
        assert!((a.fp - b.fp).abs() < 1e-5, "{x}");
        assert!((a.fpp - b.fpp).abs() < 1e-3, "{x}");
    }
    assert_eq!(t.slopes(10.0).fp, fp[80]);
    assert_eq!(t.limits(), (fp[80], 0.0));
    assert!(SlopeTable::new(vec![1.0, 0.0], vec![0.0; 2], vec![0.0; 2], vec![0.0; 2], vec![0.0; 2]).is_err());
}

#[test]
fn balanced_bumps_have_the_stated_limits() {
    let p = ReferenceProfile::Smooth(SmoothProfile::BalancedBumps {
        beta1: 0.4,
        beta2: -0.2,
        amp1: 0.5,
        amp2: 0.1,
        width: 1.0,
    });
    let far = p.slopes(60.0);
    assert!((far.fp - 0.4).abs() < 1e-12 && (far.gp + 0.2).abs() < 1e-12);
    // zero-mean bump: int m = w (2 - 1/2 * 2 * 2) = 0
    let h = 1e-3;
    let s: f64 = (-60000..=60000).map(|i| p.slopes(i as f64 * h).fp - 0.4).sum::<f64>() * h;
    assert!(s.abs() < 1e-9, "{s}");
}

proptest! {
    #[test]
    fn lagrange_identity(fp in -3.0..3.0f64, gp in -3.0..3.0f64, t in 0.0..1.0f64) {
        let cs = make_tangent_angle_cross_section(&ASYM, 64).unwrap();
        let tg = cs.tangent_at(t);
        let sl = Slopes { fp, gp, fpp: 0.0, gpp: 0.0 };
        let c = local_coefficients(&sl, &tg);
        let kappa = 1.0 + fp * fp + gp * gp;
        prop_assert!((c.s * c.s + c.h2 - kappa).abs() <= 1e-12 * kappa);
        prop_assert!(c.h2 >= 1.0);
    }

    #[test]
    fn h_squared_derivatives_match_finite_differences(x in -3.0..3.0f64, t in 0.0..1.0f64, w in 0.5..2.0f64) {
        let cs = make_tangent_angle_cross_section(&ASYM, 64).unwrap();
        let p = ReferenceProfile::tanh(0.8, -0.6, w);
        let e = 1e-6;
        let (_, dt, dx) = h_squared_derivatives(&cs, &p, x, t);
        let h2 = |x: f64, t: f64| h_squared_derivatives(&cs, &p, x, t).0;
        let fdt = (h2(x, t + e) - h2(x, t - e)) / (2.0 * e);
        let fdx = (h2(x + e, t) - h2(x - e, t)) / (2.0 * e);
        prop_assert!((dt - fdt).abs() <= 1e-5 * (1.0 + dt.abs()), "{} {}", dt, fdt);
        prop_assert!((dx - fdx).abs() <= 1e-6 * (1.0 + dx.abs()), "{} {}", dx, fdx);
    }

    #[test]
    fn tangent_is_periodic(t in 0.0..1.0f64) {
        let cs = make_tangent_angle_cross_section(&ASYM, 64).unwrap();
        let (a, b) = (cs.tangent_at(t), cs.tangent_at(t + 1.0));
        prop_assert!((a.d1 - b.d1).abs() < 1e-12 && (a.dd2 - b.dd2).abs() < 1e-9);
    }
}
