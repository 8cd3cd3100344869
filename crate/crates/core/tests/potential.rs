use proptest::prelude::*;
use waveguide_core::geometry::*;
use waveguide_core::potential::*;
use waveguide_core::transverse::*;
use waveguide_core::Error;

const ASYM: [(f64, f64); 3] = [(0.0, 0.0), (0.3, 0.1), (0.2, 0.0)];

/// `(A, B, C, D)` from the defining integrands with every `t`-derivative taken by
/// centered differences of closed-form expressions, `chi` the normalized
/// `sqrt(h)` at the limiting slopes and trapezoid quadrature on `m` points.
fn direct_terms(cs: &CrossSection, sl: Slopes, lim: Slopes, m: usize) -> [f64; 4] {
    let e = 1e-5;
    let at = |t: f64, s: &Slopes| local_coefficients(s, &cs.tangent_at(t));
    let chi2_raw = |t: f64| at(t, &lim).h2.sqrt();
    let norm: f64 = (0..m).map(|j| chi2_raw(j as f64 / m as f64)).sum::<f64>() / m as f64;
    let (mut a, mut b, mut c, mut d) = (0.0, 0.0, 0.0, 0.0);
    for j in 0..m {
        let t = j as f64 / m as f64;
        let k = at(t, &sl);
        let kl = at(t, &lim);
        let chi2 = kl.h2.sqrt() / norm;
        // chi'/chi = (h^2)'/(4h^2) for chi = h^(1/2)
        let dchi_sq = chi2 * (kl.dt_h2 / (4.0 * kl.h2)).powi(2);
        let dt = |f: &dyn Fn(f64) -> f64| (f(t + e) - f(t - e)) / (2.0 * e);
        let (h2, h4) = (k.h2, k.h2 * k.h2);
        a += chi2 / h2;
        let s_over_h2 = |u: f64| {
            let q = at(u, &sl);
            q.s / q.h2
        };
        b += (k.s * k.dt_h2 / (2.0 * h4) + dt(&s_over_h2) - k.dx_h2 / (2.0 * h4)) * chi2;
        let inner_c = |u: f64| {
            let q = at(u, &sl);
            q.s * q.dx_h2 / (4.0 * q.h2 * q.h2)
        };
        c += ((k.dx_h2 / (4.0 * h2 * h2.sqrt())).powi(2) - dt(&inner_c) - k.s * k.dx_h2 * k.dt_h2 / (8.0 * h4 * h2))
            * chi2;
        let inner_d = |u: f64| {
            let q = at(u, &sl);
            q.dt_h2 / (4.0 * q.h2 * q.h2)
        };
        d += dchi_sq / h2 + (dt(&inner_d) + (k.dt_h2 / (4.0 * h2 * h2.sqrt())).powi(2)) * chi2;
    }
    let m = m as f64;
    [a / m, b / m, c / m, d / m]
}

fn gauss_legendre_8() -> ([f64; 8], [f64; 8]) {
    (
        [
            -0.9602898564975363,
            -0.7966664774136267,
            -0.525_532_409_916_329,
            -0.1834346424956498,
            0.1834346424956498,
            0.525_532_409_916_329,
            0.7966664774136267,
            0.9602898564975363,
        ],
        [
            0.1012285362903763,
            0.2223810344533745,
            0.3137066458778873,
            0.362_683_783_378_362,
            0.362_683_783_378_362,
            0.3137066458778873,
            0.2223810344533745,
            0.1012285362903763,
        ],
    )
}

#[test]
fn profile_matches_the_defining_integrands() {
    // the ground state carries an O(n_t^-2) error, so compare the Richardson
    // combination of two resolutions
    let cs = make_tangent_angle_cross_section(&ASYM, 1024).unwrap();
    let p = ReferenceProfile::tanh(0.8, 0.4, 1.5);
    let xs = [-2.0, -0.3, 0.0, 0.7, 3.1];
    let f = compute_profile(&cs, &p, &xs, 1024).unwrap();
    let c = compute_profile(&cs, &p, &xs, 512).unwrap();
    let rich = |a: f64, b: f64| (4.0 * a - b) / 3.0;
    let lim = Slopes {
        fp: 0.8,
        gp: 0.4,
        fpp: 0.0,
        gpp: 0.0,
    };
    let e_direct = direct_terms(&cs, lim, lim, 4096)[3];
    assert!(
        (rich(f.e_const, c.e_const) - e_direct).abs() < 1e-6,
        "{} {}",
        f.e_const,
        e_direct
    );
    for (i, &x) in xs.iter().enumerate() {
        let want = direct_terms(&cs, p.slopes(x), lim, 4096);
        let got = [
            rich(f.a[i], c.a[i]),
            rich(f.b[i], c.b[i]),
            rich(f.c[i], c.c[i]),
            rich(f.d[i], c.d[i]),
        ];
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() < 1e-6 * (1.0 + w.abs()), "x={x}: {got:?} vs {want:?}");
        }
        let sl = p.slopes(x);
        let v = want[2] + (1.0 + sl.fp * sl.fp + sl.gp * sl.gp) * want[3] - f.kappa() * e_direct;
        assert!((rich(f.v[i], c.v[i]) - v).abs() < 1e-6 * (1.0 + v.abs()));
    }
}

#[test]
fn simpson_and_gauss_legendre_agree_on_int_v() {
    let cs = make_circle_cross_section(1024).unwrap();
    let p = ReferenceProfile::tanh(1.0, 0.0, 1.0);
    let n_t = 256;
    let grid = uniform_grid(-20.0, 20.0, 0.05).unwrap();
    let epp = compute_profile(&cs, &p, &grid, n_t).unwrap();
    let (s, err) = integral_v(&epp).unwrap();
    let chi = transverse_eigs(&TransverseOperatorSpec::new(&cs, 1.0, 0.0, n_t), 2)
        .unwrap()
        .chi;
    let k = PotentialKernel::new(&cs, &chi, 1.0, 0.0);
    let (nodes, weights) = gauss_legendre_8();
    assert!((weights.iter().sum::<f64>() - 2.0).abs() < 1e-15);
    let panels = 160;
    let hp = 40.0 / panels as f64;
    let mut gl = 0.0;
    for i in 0..panels {
        let mid = -20.0 + (i as f64 + 0.5) * hp;
        for (z, w) in nodes.iter().zip(&weights) {
            gl += 0.5 * hp * w * k.v_at(&p, mid + 0.5 * hp * z);
        }
    }
    assert!((s - gl).abs() < 1e-8, "simpson {s} gauss {gl}");
    assert!(err < 1e-3);
}

#[test]
fn kappa_times_e_equals_the_threshold() {
    let circle = make_circle_cross_section(1024).unwrap();
    let asym = make_tangent_angle_cross_section(&ASYM, 1024).unwrap();
    for (cs, b1, b2) in [(&circle, 1.0, 0.0), (&circle, 0.5, 0.5), (&asym, 0.3, 0.7)] {
        let thr = essential_threshold(cs, b1, b2, 1024).unwrap();
        let epp = compute_profile(cs, &ReferenceProfile::constant_slope(b1, b2), &[0.0], 1024).unwrap();
        let lhs = epp.kappa() * epp.e_const;
        assert!((lhs - thr.e1).abs() <= 1e-6 * (1.0 + thr.e1.abs()), "{lhs} {}", thr.e1);
    }
}

#[test]
fn flat_profile_has_trivial_coefficients() {
    let cs = make_circle_cross_section(256).unwrap();
    let epp = compute_profile(&cs, &ReferenceProfile::flat(), &[-1.0, 0.0, 2.0], 128).unwrap();
    for i in 0..3 {
        assert!((epp.a[i] - 1.0).abs() < 1e-12);
        assert!(epp.b[i].abs() < 1e-12 && epp.v[i].abs() < 1e-12);
    }
    let c = classify(ClassifierInput::Smooth(&epp), &Tolerances::default());
    assert_eq!(c.verdict, Verdict::Inconclusive);
}

#[test]
fn constant_slope_potential_vanishes() {
    let cs = make_tangent_angle_cross_section(&ASYM, 1024).unwrap();
    let grid = uniform_grid(-5.0, 5.0, 0.5).unwrap();
    let epp = compute_profile(&cs, &ReferenceProfile::constant_slope(0.7, -0.2), &grid, 256).unwrap();
    assert!(epp.v.iter().all(|v| v.abs() <= 1e-10));
    assert!(epp.b_variation() <= 1e-12);
    let c = classify(ClassifierInput::Smooth(&epp), &Tolerances::default());
    assert_eq!(c.verdict, Verdict::Inconclusive);
    assert!(c.details.contains("V≡0"));
}

#[test]
fn truncated_domain_is_reported() {
    let cs = make_circle_cross_section(256).unwrap();
    let grid = uniform_grid(-2.0, 2.0, 0.05).unwrap();
    let epp = compute_profile(&cs, &ReferenceProfile::tanh(1.0, 0.0, 1.0), &grid, 128).unwrap();
    assert!(matches!(integral_v(&epp), Err(Error::DomainTooSmall { .. })));
}

#[test]
fn broken_profile_is_rejected_by_the_smooth_path() {
    let cs = make_circle_cross_section(256).unwrap();
    assert!(matches!(
        compute_profile(&cs, &ReferenceProfile::broken(0.5), &[0.0], 128),
        Err(Error::WrongProfileKind { .. })
    ));
    assert!(compute_broken_constants(&cs, 0.5, 130).is_err());
    assert!(compute_broken_constants(&cs, -0.5, 128).is_err());
}

#[test]
fn broken_circle_has_vanishing_b_by_symmetry() {
    let cs = make_circle_cross_section(1024).unwrap();
    let bc = compute_broken_constants(&cs, 0.5, 256).unwrap();
    assert!(bc.b_const.abs() <= 10.0 * bc.quadrature_error);
    assert!(bc.symmetry.is_some());
    let c = classify(ClassifierInput::Broken(&bc), &Tolerances::default());
    assert_eq!(c.verdict, Verdict::Inconclusive);
    assert!(c.details.contains("symmetry"));
    // A against its definition, chi = normalized sqrt(h_beta)
    let lim = Slopes {
        fp: 0.0,
        gp: 0.5,
        fpp: 0.0,
        gpp: 0.0,
    };
    let a = direct_terms(&cs, lim, lim, 2048)[0];
    assert!((bc.a_const - a).abs() < 1e-5);
}

#[test]
fn broken_asymmetric_constants_against_the_definition() {
    // B = int [ -(xi2'/h^2)' + xi2' (h^2)'/(2h^4) ] chi^2 for f = 0, g' = beta;
    // the direct evaluation gives the golden value's order of magnitude
    let cs = make_tangent_angle_cross_section(&ASYM, 1024).unwrap();
    let beta = 0.5;
    let bc = compute_broken_constants(&cs, beta, 512).unwrap();
    assert!(bc.symmetry.is_none());
    let sl = Slopes {
        fp: 0.0,
        gp: beta,
        fpp: 0.0,
        gpp: 0.0,
    };
    let m = 4096;
    let e = 1e-5;
    let at = |t: f64| local_coefficients(&sl, &cs.tangent_at(t));
    let norm: f64 = (0..m).map(|j| at(j as f64 / m as f64).h2.sqrt()).sum::<f64>() / m as f64;
    let mut b = 0.0;
    for j in 0..m {
        let t = j as f64 / m as f64;
        let k = at(t);
        let chi2 = k.h2.sqrt() / norm;
        let g = |u: f64| cs.tangent_at(u).d2 / at(u).h2;
        let dg = (g(t + e) - g(t - e)) / (2.0 * e);
        b += (-dg + cs.tangent_at(t).d2 * k.dt_h2 / (2.0 * k.h2 * k.h2)) * chi2;
    }
    b /= m as f64;
    assert!(
        (bc.b_const - b).abs() < 1e-6 + 3.0 * bc.quadrature_error,
        "{} vs {b}",
        bc.b_const
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn constant_slopes_give_zero_potential(b1 in -1.5..1.5f64, b2 in -1.5..1.5f64) {
        let cs = make_circle_cross_section(256).unwrap();
        let epp = compute_profile(&cs, &ReferenceProfile::constant_slope(b1, b2), &[-1.0, 0.0, 1.0], 64).unwrap();
        for v in &epp.v {
            prop_assert!(v.abs() <= 1e-10);
        }
        let b0 = epp.b[0];
        prop_assert!(epp.b.iter().all(|b| (b - b0).abs() <= 1e-12));
    }

    #[test]
    fn a_is_between_the_extremes_of_one_over_h2(x in -3.0..3.0f64, w in 0.5..2.0f64) {
        let cs = make_tangent_angle_cross_section(&ASYM, 256).unwrap();
        let p = ReferenceProfile::tanh(1.0, 0.5, w);
        let epp = compute_profile(&cs, &p, &[x], 64).unwrap();
        let sl = p.slopes(x);
        let inv: Vec<f64> = cs.tangents(512).iter().map(|tg| 1.0 / local_coefficients(&sl, tg).h2).collect();
        let lo = inv.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = inv.iter().cloned().fold(0.0, f64::max);
        prop_assert!(epp.a[0] >= lo - 1e-12 && epp.a[0] <= hi + 1e-12);
    }
}
