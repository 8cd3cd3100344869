use proptest::prelude::*;
use waveguide_core::linalg::*;
use waveguide_core::Error;

fn laplacian_1d(n: usize) -> SparseSymmetricMatrix {
    let mut t = Vec::new();
    for i in 0..n {
        t.push((i, i, 2.0));
        if i + 1 < n {
            t.push((i, i + 1, -1.0));
            t.push((i + 1, i, -1.0));
        }
    }
    SparseSymmetricMatrix::from_triplets(n, &t)
}

#[test]
fn triplets_sum_duplicates() {
    let m = SparseSymmetricMatrix::from_triplets(2, &[(0, 0, 1.0), (0, 0, 2.0), (0, 1, 1.0), (1, 0, 1.0)]);
    assert_eq!(m.get(0, 0), 3.0);
    assert_eq!(m.get(1, 1), 0.0);
    assert_eq!(m.nnz(), 3);
    assert!(m.is_symmetric());
}

#[test]
fn lanczos_finds_the_laplacian_spectrum() {
    let n = 400;
    let m = laplacian_1d(n);
    let exact = |k: usize| 2.0 - 2.0 * (k as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
    for transform in [
        SpectralTransform::None,
        SpectralTransform::ShiftInvert {
            sigma: -0.01,
            order: None,
        },
    ] {
        let opts = LanczosOptions {
            transform,
            max_restarts: 200,
            ..LanczosOptions::default()
        };
        let r = lowest_eigs(&m, 4, &opts).unwrap();
        for (k, l) in r.eigenvalues.iter().enumerate() {
            assert!((l - exact(k + 1)).abs() < 1e-10, "{k}: {l}");
        }
        for (v, l) in r.vectors.iter().zip(&r.eigenvalues) {
            let mv = m.apply(v);
            let res: f64 = mv.iter().zip(v).map(|(a, b)| (a - l * b).powi(2)).sum::<f64>().sqrt();
            assert!(res <= 1e-10 * r.scale);
        }
    }
}

#[test]
fn cholesky_rejects_indefinite_shifts() {
    let m = laplacian_1d(50);
    assert!(matches!(
        BandCholesky::factor(&m, 1.0, None),
        Err(Error::NotPositiveDefinite { .. })
    ));
}

#[test]
fn dense_eigen_vectors_are_orthonormal() {
    let n = 30;
    let d = laplacian_1d(n).to_dense();
    let e = symmetric_eigen(&d, n);
    for a in 0..n {
        for b in 0..n {
            let dot: f64 = (0..n).map(|i| e.vectors[a][i] * e.vectors[b][i]).sum();
            let want = if a == b { 1.0 } else { 0.0 };
            assert!((dot - want).abs() < 1e-12);
        }
    }
    assert!(e.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn banded_solve_matches_dense(n in 3usize..40, shift in -5.0..-0.1f64, seed in any::<u64>()) {
        // random symmetric banded matrix made diagonally dominant
        let mut s = seed | 1;
        let mut next = || {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 3.0));
            for d in 1..3 {
                if i + d < n {
                    let v = next();
                    t.push((i, i + d, v));
                    t.push((i + d, i, v));
                }
            }
        }
        let m = SparseSymmetricMatrix::from_triplets(n, &t);
        let perm: Vec<usize> = (0..n).rev().collect();
        let f = BandCholesky::factor(&m, shift, Some(&perm)).unwrap();
        let b: Vec<f64> = (0..n).map(|_| next()).collect();
        let x = f.solve(&b);
        let mut r = m.apply(&x);
        for i in 0..n {
            r[i] -= shift * x[i] + b[i];
        }
        prop_assert!(r.iter().all(|v| v.abs() < 1e-12));
        let p = m.permuted(&perm);
        prop_assert_eq!(p.get(0, 0), m.get(n - 1, n - 1));
        prop_assert!((m.bilinear(&x, &b) - x.iter().zip(&m.apply(&b)).map(|(a, c)| a * c).sum::<f64>()).abs() < 1e-12);
    }

    #[test]
    fn hermitian_eigenvalues_of_real_input_match_symmetric(n in 2usize..20) {
        let d = laplacian_1d(n).to_dense();
        let c: Vec<_> = d.iter().map(|&v| nalgebra::Complex::new(v, 0.0)).collect();
        let a = symmetric_eigenvalues(&d, n);
        let b = hermitian_eigenvalues(&c, n);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }
}
