//! Threshold parameters and the small set of dense-vector kernels shared by every module.

use crate::error::{PcpError, Result};

/// Dense real vector. Plain `Vec<f64>`; every public entry point checks finiteness.
pub type DenseVector = Vec<f64>;

/// The pair (λ, γ): project onto squared singular values ≥ λ, with an
/// uncertainty band ((1−γ)λ, (1+γ)λ) around the threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdSpec {
    lambda: f64,
    gamma: f64,
}

impl ThresholdSpec {
    pub fn new(lambda: f64, gamma: f64) -> Result<Self> {
        let ok = lambda.is_finite()
            && gamma.is_finite()
            && lambda > 0.0
            && lambda < 1.0
            && gamma > 0.0
            && gamma < 1.0
            && lambda * (1.0 + gamma) < 1.0;
        if ok {
            Ok(Self { lambda, gamma })
        } else {
            Err(PcpError::InvalidThreshold { lambda, gamma })
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// (1−γ)λ
    pub fn low_edge(&self) -> f64 {
        (1.0 - self.gamma) * self.lambda
    }

    /// (1+γ)λ
    pub fn high_edge(&self) -> f64 {
        (1.0 + self.gamma) * self.lambda
    }

    /// The pair seen by the reflected problem x ↦ 1 − x: (1−λ, λγ/(1−λ)).
    pub fn reflected(&self) -> Self {
        let lambda = 1.0 - self.lambda;
        let gamma = self.lambda * self.gamma / lambda;
        Self { lambda, gamma }
    }

    /// Degree floor applied by both pipelines: γ ← max(γ, ln(n)/n).
    ///
    /// If the floored γ would break λ(1+γ) < 1 the original γ is kept.
    pub fn floored_for_degree(&self, n: usize) -> Self {
        let n = n.max(1) as f64;
        let floor = n.ln() / n;
        if floor <= self.gamma {
            return *self;
        }
        Self::new(self.lambda, floor).unwrap_or(*self)
    }
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// y ← y + a·x
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn scale(a: f64, x: &mut [f64]) {
    for xi in x.iter_mut() {
        *xi *= a;
    }
}

pub fn distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

pub fn ensure_finite(x: &[f64], what: &'static str) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(PcpError::NonFinite(what))
    }
}
