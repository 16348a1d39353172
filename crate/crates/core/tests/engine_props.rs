use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use pcp_core::admissible::SpectrumFilter;
use pcp_core::chebyshev::{build_sign_approx, min_degree};
use pcp_core::engine::{poly_pcp, project, quick_pcp, ProjectionReport, RidgeSolverConfig};
use pcp_core::model::{distance, norm};
use pcp_core::operator::{
    linearity_defect, max_rayleigh_probe, power_normalize, symmetry_defect, CsrMatrix, DenseOperator,
    DiagonalOperator, GramOperator, LinearOperator, OperatorHandle, SparseOperator,
};
use pcp_core::testbed::{
    check_approx_pcp, exact_pcp, gen_matrix, relative_error, test_vector, Distribution, GeneratedMatrix,
    SyntheticSpec,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const METHODS: [&str; 3] = ["quick", "poly1", "poly2"];

fn fixture(dim: usize, lambda: f64, gamma: f64, seed: u64, distribution: Distribution) -> GeneratedMatrix {
    gen_matrix(&SyntheticSpec {
        dim,
        lambda,
        gamma,
        distribution,
        seed,
    })
    .unwrap()
}

fn run(method: &str, g: &OperatorHandle, chi: &[f64], lambda: f64, gamma: f64, n: usize) -> ProjectionReport {
    match method {
        "quick" => {
            let cfg = RidgeSolverConfig::with_default_cap(lambda, 1e-13).unwrap();
            quick_pcp(g, chi, lambda, gamma, n, &cfg).unwrap()
        }
        "poly1" => poly_pcp(g, chi, &SpectrumFilter::poly1(lambda, gamma).unwrap(), n).unwrap(),
        "poly2" => poly_pcp(g, chi, &SpectrumFilter::poly2(lambda, gamma).unwrap(), n).unwrap(),
        _ => unreachable!(),
    }
}

fn gaussian(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample(StandardNormal)).collect()
}

fn random_orthogonal(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    m.qr().q()
}

#[test]
fn pipelines_are_linear() {
    let (lambda, gamma, n) = (0.3, 0.1, 60);
    let m = fixture(60, lambda, gamma, 4, Distribution::UniformEigen);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (x1, x2) = (gaussian(&mut rng, 60), gaussian(&mut rng, 60));
    let (a, b) = (1.7, -0.6);
    let mix: Vec<f64> = x1.iter().zip(&x2).map(|(p, q)| a * p + b * q).collect();
    let scale = a.abs() * norm(&x1) + b.abs() * norm(&x2);
    for method in METHODS {
        let g = m.handle();
        let z1 = run(method, &g, &x1, lambda, gamma, n).zeta;
        let z2 = run(method, &g, &x2, lambda, gamma, n).zeta;
        let zm = run(method, &g, &mix, lambda, gamma, n).zeta;
        let combined: Vec<f64> = z1.iter().zip(&z2).map(|(p, q)| a * p + b * q).collect();
        let dev = distance(&zm, &combined);
        assert!(dev <= 1e-9 * scale, "{method}: {dev:e}");
    }
}

#[test]
fn pipelines_commute_with_rotations() {
    let d = 40;
    let (lambda, gamma, n) = (0.25, 0.2, 50);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let spectrum: Vec<f64> = (0..d)
        .map(|i| if i == 0 { 1.0 } else { rng.random_range(0.0..1.0) })
        .collect();
    let q = random_orthogonal(&mut rng, d);
    let lam = DMatrix::from_diagonal(&DVector::from_vec(spectrum.clone()));
    let rotated = &q * lam * q.transpose();
    let rotated = (&rotated + rotated.transpose()) * 0.5;
    let chi = gaussian(&mut rng, d);
    let qt_chi: Vec<f64> = (q.transpose() * DVector::from_vec(chi.clone())).iter().copied().collect();

    let g_rot = OperatorHandle::certified(Arc::new(DenseOperator::new(rotated).unwrap()));
    let g_diag = OperatorHandle::certified(Arc::new(DiagonalOperator::new(spectrum)));
    for method in METHODS {
        let direct = run(method, &g_rot, &chi, lambda, gamma, n).zeta;
        let inner = run(method, &g_diag, &qt_chi, lambda, gamma, n).zeta;
        let back: Vec<f64> = (&q * DVector::from_vec(inner)).iter().copied().collect();
        let dev = distance(&direct, &back);
        assert!(dev <= 1e-9 * norm(&chi), "{method}: {dev:e}");
    }
}

#[test]
fn projecting_twice_changes_little() {
    let (lambda, gamma, eps) = (0.3, 0.1, 1e-4);
    for (seed, dist) in [(1, Distribution::UniformEigen), (2, Distribution::RandomEigen)] {
        let m = fixture(120, lambda, gamma, seed, dist);
        let chi = test_vector(120, seed);
        let once = project(&m.handle(), &chi, lambda, gamma, eps).unwrap();
        let twice = project(&m.handle(), &once.zeta, lambda, gamma, eps).unwrap();
        let dev = distance(&once.zeta, &twice.zeta);
        assert!(dev <= 3.0 * eps * norm(&chi), "{}: {dev:e}", dist.name());
    }
}

#[test]
fn matvec_counts_are_exact() {
    let m = fixture(30, 0.2, 0.1, 0, Distribution::UniformEigen);
    let chi = test_vector(30, 0);
    for n in [1, 7, 40] {
        let g = m.handle();
        let r = run("poly1", &g, &chi, 0.2, 0.1, n);
        assert_eq!(r.matvecs, 2 * n as u64 + 1);
        assert_eq!(g.matvec_count(), 2 * n as u64 + 1);

        let g = m.handle();
        let r = run("poly2", &g, &chi, 0.2, 0.1, n);
        assert_eq!(r.matvecs, 4 * n as u64 + 2);
        assert_eq!(g.matvec_count(), 4 * n as u64 + 2);

        let g = m.handle();
        let r = run("quick", &g, &chi, 0.2, 0.1, n);
        assert_eq!(r.ridge_solves, 2 * n as u64 + 1);
        assert_eq!(r.matvecs, 2 * n as u64 + 1 + r.cg_iterations);
        assert_eq!(g.matvec_count(), r.matvecs);
    }
}

#[test]
fn project_meets_all_three_conditions() {
    for (lambda, dist, seed) in [
        (0.05, Distribution::UniformEigen, 0),
        (0.2, Distribution::UniformEigen, 1),
        (0.3, Distribution::RandomEigen, 2),
        (0.45, Distribution::UniformEigen, 3),
        (0.7, Distribution::UniformEigen, 4),
    ] {
        let (gamma, eps) = (0.1, 1e-3);
        let m = fixture(150, lambda, gamma, seed, dist);
        let chi = test_vector(150, seed);
        let r = project(&m.handle(), &chi, lambda, gamma, eps).unwrap();
        let c = check_approx_pcp(&m.decomposition, lambda, gamma, eps, &chi, &r.zeta).unwrap();
        assert!(c.all_passed(), "lambda {lambda}: {c:?}");
    }
}

#[test]
fn in_band_entries_stay_between_zero_and_chi() {
    let (lambda, gamma, eps) = (0.3, 0.2, 1e-6);
    let filter = SpectrumFilter::poly1(lambda, gamma).unwrap();
    let n = min_degree(filter.gap(), eps).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut diag = vec![1.0, 0.01];
    diag.extend((0..18).map(|_| rng.random_range((1.0 - gamma) * lambda..(1.0 + gamma) * lambda)));
    let chi = gaussian(&mut rng, diag.len());
    let g = OperatorHandle::certified(Arc::new(DiagonalOperator::new(diag.clone())));
    let r = poly_pcp(&g, &chi, &filter, n).unwrap();
    let budget = eps * norm(&chi);
    for i in 2..diag.len() {
        let t = r.zeta[i] / chi[i];
        assert!(t >= -budget / chi[i].abs() - 1e-9 && t <= 1.0 + budget / chi[i].abs() + 1e-9, "entry {i}: {t}");
    }
    assert!((r.zeta[0] - chi[0]).abs() <= budget);
    assert!(r.zeta[1].abs() <= budget);
}

#[test]
fn power_normalize_recovers_the_norm() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let q = random_orthogonal(&mut rng, 3);
    let g = &q * DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0, 0.5])) * q.transpose();
    let op: Arc<dyn LinearOperator> = Arc::new(DenseOperator::new(g).unwrap());
    let (h, s) = power_normalize(op.clone(), 1e-12).unwrap();
    assert!((s - 2.0).abs() < 1e-9, "{s}");
    assert!((h.scale() - 0.5).abs() < 1e-9);
    assert!(h.is_norm_certified());

    // normalizing an already normalized operator
    let scaled: Arc<dyn LinearOperator> = Arc::new(DenseOperator::new(
        &q * DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.5, 0.25])) * q.transpose(),
    )
    .unwrap());
    let (_, s2) = power_normalize(scaled, 1e-12).unwrap();
    assert!((s2 - 1.0).abs() < 1e-10, "{s2}");
}

#[test]
fn operators_are_symmetric_and_linear() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let a = DMatrix::from_fn(12, 8, |_, _| rng.sample::<f64, _>(StandardNormal));
    let dense_g = a.transpose() * &a;
    let triplets: Vec<(usize, usize, f64)> = (0..12)
        .flat_map(|i| (0..8).map(move |j| (i, j)))
        .map(|(i, j)| (i, j, a[(i, j)]))
        .collect();
    let csr_a = CsrMatrix::from_triplets(12, 8, &triplets);
    let g_triplets: Vec<(usize, usize, f64)> = (0..8)
        .flat_map(|i| (0..8).map(move |j| (i, j)))
        .map(|(i, j)| (i, j, dense_g[(i, j)]))
        .collect();
    let ops: Vec<Box<dyn LinearOperator>> = vec![
        Box::new(DenseOperator::new(dense_g.clone()).unwrap()),
        Box::new(SparseOperator::new(CsrMatrix::from_triplets(8, 8, &g_triplets)).unwrap()),
        Box::new(GramOperator::new(a.clone())),
        Box::new(GramOperator::new(csr_a)),
        Box::new(DiagonalOperator::new(vec![0.5; 8])),
    ];
    let top = dense_g.symmetric_eigenvalues().max();
    for op in &ops {
        let s = 1e-13 * top.max(1.0);
        assert!(symmetry_defect(op.as_ref(), 20, 1) <= s);
        // reported in units of machine epsilon
        assert!(linearity_defect(op.as_ref(), 20, 2) <= 100.0);
        assert!(max_rayleigh_probe(op.as_ref(), 20, 3) <= top * (1.0 + 1e-12));
    }
}

#[test]
fn coefficient_builds_are_deterministic() {
    for (alpha, n) in [(0.05, 300), (0.3, 17), (0.9, 1)] {
        let a = build_sign_approx(alpha, n).unwrap();
        let b = build_sign_approx(alpha, n).unwrap();
        let bits = |s: &[f64]| s.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(a.coeffs()), bits(b.coeffs()));
    }
}

#[test]
fn polynomial_pipelines_match_the_oracle() {
    let (lambda, gamma, eps) = (0.3, 0.1, 1e-6);
    for method in ["poly1", "poly2"] {
        let filter = match method {
            "poly1" => SpectrumFilter::poly1(lambda, gamma),
            _ => SpectrumFilter::poly2(lambda, gamma),
        }
        .unwrap();
        let n = min_degree(filter.gap(), eps).unwrap();
        for seed in 0..20 {
            let m = fixture(200, lambda, gamma, seed, Distribution::UniformEigen);
            let chi = test_vector(200, seed);
            let r = poly_pcp(&m.handle(), &chi, &filter, n).unwrap();
            let e = relative_error(&r.zeta, &exact_pcp(&m.decomposition, lambda, &chi)).unwrap();
            assert!(e <= eps, "{method} seed {seed}: {e:e}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn polynomial_counts_follow_degree(lambda in 0.05f64..0.95, gamma in 0.05f64..0.9, n in 1usize..60) {
        prop_assume!(lambda * (1.0 + gamma) < 1.0 && (lambda - 0.5).abs() > 1e-6);
        let g = OperatorHandle::certified(Arc::new(DiagonalOperator::new(vec![1.0, 0.6, 0.3, 0.1, 0.0])));
        let chi = vec![1.0, -2.0, 0.5, 3.0, 1.0];
        for (method, per) in [("poly1", 1u64), ("poly2", 2u64)] {
            g.reset_count();
            let r = run(method, &g, &chi, lambda, gamma, n);
            prop_assert_eq!(r.matvecs, per * (2 * n as u64 + 1));
            prop_assert_eq!(g.matvec_count(), r.matvecs);
            prop_assert_eq!(r.filter.is_reflected(), lambda > 0.5);
        }
    }
}
