use pcp_core::admissible::{
    brute_force_gap, brute_force_gap_in, poly1_gap, poly2_gap, quadratic_coefficients, region_boundary_12,
    region_boundary_23, ridge_gap, select_filter, thresholds_b, FilterKind, Region, ScanBox, SpectrumFilter,
};
use proptest::prelude::*;

fn grid(lo: f64, hi: f64, points: usize) -> impl Iterator<Item = f64> {
    (0..points).map(move |i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
}

#[test]
fn quadratic_beats_twice_linear_below_b2() {
    for gamma in [0.05, 0.1, 0.3, 0.5, 0.8, 0.95] {
        let (_, b2) = thresholds_b(gamma);
        for lambda in grid(1e-3, b2, 400) {
            let (a2, a1) = (poly2_gap(lambda, gamma), poly1_gap(lambda, gamma));
            assert!(a2 >= 2.0 * a1 - 1e-12, "({lambda}, {gamma}): {a2} < 2*{a1}");
        }
        for lambda in grid(b2, 0.5 - 1e-9, 400) {
            let (a2, a1) = (poly2_gap(lambda, gamma), poly1_gap(lambda, gamma));
            assert!(a2 <= 2.0 * a1 + 1e-12, "({lambda}, {gamma}): {a2} > 2*{a1}");
        }
    }
}

#[test]
fn quadratic_beats_ridge_above_b1() {
    for gamma in [0.05, 0.1, 0.3, 0.5, 0.8, 0.95] {
        let (b1, _) = thresholds_b(gamma);
        let ar = ridge_gap(gamma);
        for lambda in grid(b1, 0.5 - 1e-9, 400) {
            assert!(poly2_gap(lambda, gamma) >= ar - 1e-12, "({lambda}, {gamma})");
        }
        for lambda in grid(1e-3, b1, 400) {
            assert!(poly2_gap(lambda, gamma) <= ar + 1e-12, "({lambda}, {gamma})");
        }
    }
}

#[test]
fn thresholds_are_ordered() {
    for gamma in grid(0.01, 0.99, 99) {
        let (b1, b2) = thresholds_b(gamma);
        assert!(0.0 < b1 && b1 < b2 && b2 < 0.5, "gamma {gamma}: {b1} {b2}");
    }
    let b1 = (5.1 - 2.0 * 4.2f64.sqrt()) / 9.21;
    assert!((thresholds_b(0.1).0 - b1).abs() < 1e-15);
}

#[test]
fn coefficients_continuous_across_regions() {
    for gamma in grid(0.02, 0.98, 49) {
        let l12 = region_boundary_12(gamma);
        let (a1, c1) = quadratic_coefficients(Region::R1, l12, gamma);
        let (a2, c2) = quadratic_coefficients(Region::R2, l12, gamma);
        assert!((a1 - a2).abs() < 1e-9 && (c1 - c2).abs() < 1e-9, "R1/R2 at gamma {gamma}");

        let l23 = region_boundary_23();
        if l23 * (1.0 + gamma) < 1.0 {
            let (a2, c2) = quadratic_coefficients(Region::R2, l23, gamma);
            let (a3, c3) = quadratic_coefficients(Region::R3, l23, gamma);
            assert!((a2 - a3).abs() < 1e-9 && (c2 - c3).abs() < 1e-9, "R2/R3 at gamma {gamma}");
        }
    }
}

#[test]
fn spec_scores() {
    let (_, r) = select_filter(0.05, 0.1).unwrap();
    assert_eq!(r.chosen, FilterKind::Ridge);
    assert!((r.alpha_r - 0.047619).abs() < 1e-6);
    assert!((2.0 * r.alpha_1 - 0.010526).abs() < 1e-6);

    let (_, r) = select_filter(0.2, 0.1).unwrap();
    assert_eq!(r.chosen, FilterKind::Poly2);
    assert!((r.alpha_2 - 0.081127).abs() < 1e-6);
    assert!((2.0 * r.alpha_1 - 0.05).abs() < 1e-12);

    let (_, r) = select_filter(0.3, 0.1).unwrap();
    assert_eq!(r.chosen, FilterKind::Poly1);
    assert!((2.0 * r.alpha_1 - 0.085714).abs() < 1e-6);
    assert!((r.alpha_2 - 0.081143).abs() < 1e-6);
}

#[test]
fn reflected_quadratic_is_admissible_for_reflected_pair() {
    let r = SpectrumFilter::poly2(0.2, 0.1).unwrap().reflect().unwrap();
    assert!((r.lambda() - 0.8).abs() < 1e-15);
    assert!((r.gamma() - 0.025).abs() < 1e-15);
    assert!(r.is_admissible_on_grid(2001, 1e-12));
}

#[test]
fn brute_force_finds_region_three_optimum() {
    let (lambda, gamma) = (0.4, 0.1);
    let bf = brute_force_gap(lambda, gamma, 1e-3).unwrap();
    let (a, c) = ((2.0 * lambda - 1.0) / ((1.0 - lambda) * lambda), -1.0 / lambda);
    assert!((bf.a - a).abs() <= 2e-3 && (bf.c - c).abs() <= 2e-3, "({}, {}) vs ({a}, {c})", bf.a, bf.c);
    assert!((bf.gap - poly2_gap(lambda, gamma)).abs() < 5e-3);

    let bf = brute_force_gap(0.2, 0.1, 1e-3).unwrap();
    assert!((bf.gap - 0.081127).abs() < 5e-3);
}

#[test]
fn convex_quadratics_do_not_beat_linear() {
    let (lambda, gamma) = (0.45, 0.2);
    let bf = brute_force_gap_in(lambda, gamma, 2e-3, ScanBox::convex(lambda, 4.0)).unwrap();
    assert!(bf.a > 0.0);
    assert!(bf.gap <= poly1_gap(lambda, gamma) + 1e-12, "{} > {}", bf.gap, poly1_gap(lambda, gamma));
}

/// Value of `(x−λ)(a x − c)`.
fn quad(lambda: f64, a: f64, c: f64, x: f64) -> f64 {
    (x - lambda) * (a * x - c)
}

/// Largest value of the quadratic on `[lo, hi]`.
fn max_on(lambda: f64, a: f64, c: f64, lo: f64, hi: f64) -> f64 {
    let mut m = quad(lambda, a, c, lo).max(quad(lambda, a, c, hi));
    if a != 0.0 {
        let vertex = (a * lambda + c) / (2.0 * a);
        if vertex > lo && vertex < hi {
            m = m.max(quad(lambda, a, c, vertex));
        }
    }
    m
}

/// Exact admissibility for a concave `(x−λ)(a x − c)` with `c < a < 0`.
fn concave_admissible(lambda: f64, gamma: f64, a: f64, c: f64) -> bool {
    let (lo, hi) = ((1.0 - gamma) * lambda, (1.0 + gamma) * lambda);
    // increasing through λ, so the low interval is bounded by its endpoints
    let low_ok = quad(lambda, a, c, 0.0) >= -1.0 && quad(lambda, a, c, lo) < 0.0;
    let high_min = quad(lambda, a, c, hi).min(quad(lambda, a, c, 1.0));
    low_ok && high_min > 0.0 && max_on(lambda, a, c, hi, 1.0) <= 1.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn concave_gap_bounded_by_linear_gap(
        lambda in 0.02f64..0.49,
        gamma in 0.02f64..0.98,
        a_frac in 0.0f64..1.0,
        c_frac in 0.0f64..1.0,
    ) {
        prop_assume!(lambda * (1.0 + gamma) < 1.0);
        let a = -4.0 * a_frac;
        // c ranges over (a − 1/λ, a); admissibility needs c ≥ −1/λ
        let c = a - c_frac / lambda;
        prop_assume!(a < 0.0 && c < a && concave_admissible(lambda, gamma, a, c));
        let (lo, hi) = ((1.0 - gamma) * lambda, (1.0 + gamma) * lambda);
        let gap = (-quad(lambda, a, c, lo)).min(quad(lambda, a, c, hi));
        let peak = max_on(lambda, a, c, lambda, 1.0);
        prop_assert!(gap >= poly1_gap(lambda, gamma) * peak - 1e-12, "gap {gap} peak {peak}");
        // the optimum dominates every admissible concave quadratic
        prop_assert!(gap <= poly2_gap(lambda, gamma) + 1e-12);
    }

    #[test]
    fn reflection_preserves_gap(lambda in 0.01f64..0.99, gamma in 0.01f64..0.99) {
        prop_assume!(lambda * (1.0 + gamma) < 1.0 && (lambda - 0.5).abs() > 1e-9);
        for kind in [FilterKind::Poly1, FilterKind::Poly2] {
            let f = SpectrumFilter::of_kind(kind, lambda, gamma).unwrap();
            let r = f.reflect().unwrap();
            prop_assert!((r.gap() - f.gap()).abs() <= 1e-14);
            prop_assert!((r.lambda() - (1.0 - lambda)).abs() <= 1e-15);
            for x in [0.0, 0.1, 0.37, 0.8, 1.0] {
                // p'(x) = −p(1 − x)
                prop_assert!((r.eval(x) + f.eval(1.0 - x)).abs() <= 1e-13);
            }
        }
    }

    #[test]
    fn direct_gap_matches_closed_form(lambda in 0.01f64..0.99, gamma in 0.01f64..0.99) {
        prop_assume!(lambda * (1.0 + gamma) < 1.0 && (lambda - 0.5).abs() > 1e-9);
        for kind in [FilterKind::Ridge, FilterKind::Poly1, FilterKind::Poly2] {
            let f = SpectrumFilter::of_kind(kind, lambda, gamma).unwrap();
            prop_assert!((f.gap() - f.direct_gap()).abs() <= 1e-12, "{kind}");
        }
    }

    #[test]
    fn selection_takes_the_largest_score(lambda in 0.001f64..0.999, gamma in 0.01f64..0.99) {
        prop_assume!(lambda * (1.0 + gamma) < 1.0);
        let (f, r) = select_filter(lambda, gamma).unwrap();
        let best = r.alpha_r.max(2.0 * r.alpha_1).max(r.alpha_2);
        let score = match f.kind() {
            FilterKind::Ridge => r.alpha_r,
            FilterKind::Poly1 => 2.0 * r.alpha_1,
            FilterKind::Poly2 => r.alpha_2,
        };
        prop_assert!(score >= best - 1e-12);
        prop_assert_eq!(f.is_reflected(), lambda > 0.5 && f.kind() != FilterKind::Ridge);
    }
}
