//! Polynomial approximation of sgn(x) on [−1, −α] ∪ [α, 1].
//!
//! `q_n` is the degree-n Chebyshev interpolant of `((1+κ−y)/2)^{-1/2}` and
//! `g_n(x) = x · q_n(1+κ−2x²)`. With κ = 2α² and `n ≥ min_degree(α, ε)`,
//! `|g_n − sgn| ≤ ε` away from the origin and `g_n` stays within [0, 1] on [0, α].

use std::f64::consts::{PI, SQRT_2};

use crate::error::{PcpError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SignApprox {
    alpha: f64,
    kappa: f64,
    coeffs: Vec<f64>,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(PcpError::InvalidAlpha(alpha))
    }
}

/// Builds `q_n` for κ = 2α².
pub fn build_sign_approx(alpha: f64, n: usize) -> Result<SignApprox> {
    check_alpha(alpha)?;
    let kappa = 2.0 * alpha * alpha;
    let m = (n + 1) as f64;
    let samples: Vec<(f64, f64)> = (0..=n)
        .map(|j| {
            let theta = (j as f64 + 0.5) * PI / m;
            (theta, SQRT_2 / (1.0 + kappa - theta.cos()).sqrt())
        })
        .collect();
    let coeffs = (0..=n)
        .map(|k| {
            let weight = if k == 0 { 1.0 } else { 2.0 } / m;
            let sum: f64 = samples
                .iter()
                .map(|&(theta, f)| (k as f64 * theta).cos() * f)
                .sum();
            weight * sum
        })
        .collect();
    Ok(SignApprox {
        alpha,
        kappa,
        coeffs,
    })
}

/// Smallest n with `n ≥ (1/(√2 α)) · ln(3/(ε α²))`, never below 1.
pub fn min_degree(alpha: f64, eps: f64) -> Result<usize> {
    check_alpha(alpha)?;
    if !(eps > 0.0 && eps < 0.5) {
        return Err(PcpError::InvalidEps(eps));
    }
    let bound = (3.0 / (eps * alpha * alpha)).ln() / (SQRT_2 * alpha);
    Ok((bound.ceil() as usize).max(1))
}

impl SignApprox {
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `q_n(y) = Σ c_k T_k(y)` with T_k from the three-term recurrence, valid for any real y.
    pub fn eval_q(&self, y: f64) -> f64 {
        let mut t_prev = 1.0;
        let mut t = y;
        let mut acc = self.coeffs[0];
        for &c in &self.coeffs[1..] {
            acc += c * t;
            let next = 2.0 * y * t - t_prev;
            t_prev = t;
            t = next;
        }
        acc
    }

    /// `g_n(x) = x · q_n(1+κ−2x²)` for x ∈ [−1, 1].
    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(x.abs() <= 1.0 + 1e-12) {
            return Err(PcpError::OutOfRange(x));
        }
        Ok(x * self.eval_q(1.0 + self.kappa - 2.0 * x * x))
    }
}

/// Worst `|g_n − sgn|` over `points`-point uniform grids of [α, 1] and [−1, −α],
/// and the worst excursion of `g_n` outside [0, 1] on [0, α] (resp. [−1, 0] on [−α, 0]).
pub fn grid_errors(s: &SignApprox, alpha: f64, points: usize) -> (f64, f64) {
    let step = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * i as f64 / (points - 1) as f64;
    let mut sup_err: f64 = 0.0;
    let mut range_violation: f64 = 0.0;
    for i in 0..points {
        let x = step(alpha, 1.0, i);
        let (gp, gm) = (s.eval(x).expect("x in [-1, 1]"), s.eval(-x).expect("x in [-1, 1]"));
        sup_err = sup_err.max((gp - 1.0).abs()).max((gm + 1.0).abs());

        let x = step(0.0, alpha, i);
        let (gp, gm) = (s.eval(x).expect("x in [-1, 1]"), s.eval(-x).expect("x in [-1, 1]"));
        range_violation = range_violation
            .max(-gp)
            .max(gp - 1.0)
            .max(gm)
            .max(-1.0 - gm);
    }
    (sup_err, range_violation)
}
