//! Exhaustive grid search over quadratics `(x−λ)(a·x − c)`, used as an
//! independent reference for the closed-form optimal gap.
//!
//! For a fixed `a`, every admissibility check on the x-grid is affine in `c`,
//! so the set of grid values of `c` passing all checks is the grid points of
//! an interval. The scan computes that interval per `a` and then evaluates the
//! gap at each grid `c` inside it.

use crate::error::{PcpError, Result};
use crate::model::ThresholdSpec;

/// Number of uniform x-samples on [0, 1]; the band edges are added exactly.
const X_POINTS: usize = 2001;

/// Rectangle of `(a, c)` values to scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanBox {
    pub a_min: f64,
    pub a_max: f64,
    pub c_min: f64,
    pub c_max: f64,
}

impl ScanBox {
    /// Concave quadratics: `a ∈ [−1.5·4/D², 0]`, `c ∈ [−1/λ, 0]`, `D = 1−λ+λγ`.
    pub fn concave(lambda: f64, gamma: f64) -> Self {
        let d = 1.0 - lambda + lambda * gamma;
        Self {
            a_min: -1.5 * 4.0 / (d * d),
            a_max: 0.0,
            c_min: -1.0 / lambda,
            c_max: 0.0,
        }
    }

    /// Strictly convex quadratics: `a ∈ (0, a_max]`, `c ∈ [−1/λ, 1/λ]`.
    pub fn convex(lambda: f64, a_max: f64) -> Self {
        Self {
            a_min: 0.0,
            a_max,
            c_min: -1.0 / lambda,
            c_max: 1.0 / lambda,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BruteForceResult {
    pub a: f64,
    pub c: f64,
    pub gap: f64,
    /// Number of admissible grid pairs visited.
    pub feasible: usize,
}

/// Best admissible gap over the default concave box.
pub fn brute_force_gap(lambda: f64, gamma: f64, step: f64) -> Result<BruteForceResult> {
    brute_force_gap_in(lambda, gamma, step, ScanBox::concave(lambda, gamma))
}

/// Best admissible gap with `(a, c)` on the `step`-grid of `scan`.
/// Grid points with `a = 0` are skipped when `scan.a_min == 0` (strict convexity).
pub fn brute_force_gap_in(
    lambda: f64,
    gamma: f64,
    step: f64,
    scan: ScanBox,
) -> Result<BruteForceResult> {
    let t = ThresholdSpec::new(lambda, gamma)?;
    if !(lambda < 0.5) {
        return Err(PcpError::InvalidConfig(format!(
            "brute force scan needs lambda < 1/2, got {lambda}"
        )));
    }
    if !(step > 0.0 && step <= 1e-2) {
        return Err(PcpError::InvalidConfig(format!(
            "scan step must lie in (0, 1e-2], got {step}"
        )));
    }
    let (x_lo, x_hi) = (t.low_edge(), t.high_edge());

    // p(x) = a·w(x) − c·v(x) with w = (x−λ)x, v = x−λ
    let sample = |x: f64| ((x - lambda) * x, x - lambda);
    let grid = (0..X_POINTS).map(|i| i as f64 / (X_POINTS - 1) as f64);
    let below: Vec<(f64, f64)> = grid.clone().filter(|&x| x <= x_lo).chain([x_lo]).map(sample).collect();
    let above: Vec<(f64, f64)> = grid.filter(|&x| x >= x_hi).chain([x_hi]).map(sample).collect();
    let (w_lo, v_lo) = sample(x_lo);
    let (w_hi, v_hi) = sample(x_hi);

    let skip_zero_a = scan.a_min == 0.0;
    let a_steps = ((scan.a_max - scan.a_min) / step + 1e-9).floor() as i64;
    let c_steps = ((scan.c_max - scan.c_min) / step + 1e-9).floor() as i64;

    let mut best: Option<BruteForceResult> = None;
    let mut feasible = 0usize;
    for i in 0..=a_steps {
        if skip_zero_a && i == 0 {
            continue;
        }
        let a = scan.a_min + i as f64 * step;
        let Some((lo, hi)) = c_interval(a, (w_lo, v_lo), (w_hi, v_hi), &below, &above) else {
            continue;
        };
        let j_lo = ((lo - scan.c_min) / step).ceil().max(0.0) as i64;
        let j_hi = ((hi - scan.c_min) / step).floor().min(c_steps as f64) as i64;
        for j in j_lo..=j_hi {
            let c = scan.c_min + j as f64 * step;
            let p_lo = a * w_lo - c * v_lo;
            let p_hi = a * w_hi - c * v_hi;
            if !(p_lo < 0.0 && p_hi > 0.0) {
                continue;
            }
            feasible += 1;
            let gap = (-p_lo).min(p_hi);
            if best.is_none_or(|b| gap > b.gap) {
                best = Some(BruteForceResult { a, c, gap, feasible: 0 });
            }
        }
    }
    best.map(|b| BruteForceResult { feasible, ..b })
        .ok_or(PcpError::EmptyFeasible { lambda, gamma })
}

/// Interval of `c` satisfying the non-strict grid checks for a fixed `a`.
fn c_interval(
    a: f64,
    (w_lo, v_lo): (f64, f64),
    (w_hi, v_hi): (f64, f64),
    below: &[(f64, f64)],
    above: &[(f64, f64)],
) -> Option<(f64, f64)> {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    // constraint α + β·c ≥ 0
    let mut push = |alpha: f64, beta: f64| -> bool {
        if beta > 0.0 {
            lo = lo.max(-alpha / beta);
        } else if beta < 0.0 {
            hi = hi.min(-alpha / beta);
        } else if alpha < 0.0 {
            return false;
        }
        true
    };
    for &(w, v) in below {
        // p(x) ≥ −1 and p(x) ≤ p(x_lo)
        if !push(a * w + 1.0, -v) || !push(a * (w_lo - w), v - v_lo) {
            return None;
        }
    }
    for &(w, v) in above {
        // p(x) ≤ 1 and p(x) ≥ p(x_hi)
        if !push(1.0 - a * w, v) || !push(a * (w - w_hi), v_hi - v) {
            return None;
        }
    }
    (lo <= hi).then_some((lo, hi))
}
