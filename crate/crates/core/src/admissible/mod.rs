//! Spectrum filters: maps from the spectrum [0, 1] of G into [−1, 1] with a
//! zero at the threshold λ.
//!
//! Three filters are available:
//!
//! * `Ridge`: `2x/(x+λ) − 1`, applied through a ridge-regression solve.
//! * `Poly1`: the optimal (λ,γ)-admissible line `(x−λ)/(1−λ)`.
//! * `Poly2`: the optimal (λ,γ)-admissible quadratic `(x−λ)(a*x − c*)`, whose
//!   coefficients switch between three closed forms as λ crosses
//!   `1/(3+2√2−γ)` and `1−√2/2`.
//!
//! Polynomial filters are stored uniformly as `(x−λ)(a·x − c)`; the line has
//! `a = 0`. For λ > ½ the optimal polynomials come from the reflection
//! `q(x) = −p(1−x)` of the optimum for `(1−λ, λγ/(1−λ))`, which keeps the same
//! gap. Selection between the three filters maximises
//! `{α_r, 2α₁, α₂}`, where doubling α₁ credits the line with needing a single
//! matvec per application.

mod brute_force;

pub use brute_force::{brute_force_gap, brute_force_gap_in, BruteForceResult, ScanBox};

use std::f64::consts::SQRT_2;
use std::fmt;

use crate::error::{PcpError, Result};
use crate::model::ThresholdSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FilterKind {
    Ridge,
    Poly1,
    Poly2,
}

impl FilterKind {
    pub fn name(&self) -> &'static str {
        match self {
            FilterKind::Ridge => "ridge",
            FilterKind::Poly1 => "poly1",
            FilterKind::Poly2 => "poly2",
        }
    }
}

impl fmt::Display for FilterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The three λ-intervals on which the optimal quadratic changes form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// (0, 1/(3+2√2−γ)]
    R1,
    /// (1/(3+2√2−γ), 1−√2/2]
    R2,
    /// (1−√2/2, ½)
    R3,
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Region::R1 => "R1",
            Region::R2 => "R2",
            Region::R3 => "R3",
        })
    }
}

/// `1/(3+2√2−γ)`
pub fn region_boundary_12(gamma: f64) -> f64 {
    1.0 / (3.0 + 2.0 * SQRT_2 - gamma)
}

/// `1−√2/2`
pub fn region_boundary_23() -> f64 {
    1.0 - SQRT_2 / 2.0
}

/// Region of λ ∈ (0, ½); a λ sitting exactly on a boundary takes the lower region.
pub fn region_of(lambda: f64, gamma: f64) -> Region {
    if lambda <= region_boundary_12(gamma) {
        Region::R1
    } else if lambda <= region_boundary_23() {
        Region::R2
    } else {
        Region::R3
    }
}

/// Closed-form optimal quadratic coefficients `(a*, c*)` for a region.
pub fn quadratic_coefficients(region: Region, lambda: f64, gamma: f64) -> (f64, f64) {
    match region {
        Region::R1 => {
            let d = 1.0 - lambda + lambda * gamma;
            let d2 = d * d;
            (-4.0 / d2, -4.0 * (1.0 + lambda * gamma) / d2)
        }
        Region::R2 => (-1.0 / ((3.0 + 2.0 * SQRT_2) * lambda * lambda), -1.0 / lambda),
        Region::R3 => ((2.0 * lambda - 1.0) / ((1.0 - lambda) * lambda), -1.0 / lambda),
    }
}

/// Closed-form optimal quadratic gap α₂ for a region.
pub fn quadratic_gap(region: Region, lambda: f64, gamma: f64) -> f64 {
    match region {
        Region::R1 => {
            let d = 1.0 + lambda * gamma - lambda;
            4.0 * gamma * lambda * (1.0 - lambda) / (d * d)
        }
        Region::R2 => gamma * (2.0 + 2.0 * SQRT_2 - gamma) / (3.0 + 2.0 * SQRT_2),
        Region::R3 => {
            lambda * (2.0 * lambda - 1.0) * gamma * (1.0 + gamma) / (1.0 - lambda) + gamma
        }
    }
}

/// α_r = γ/(2+γ)
pub fn ridge_gap(gamma: f64) -> f64 {
    gamma / (2.0 + gamma)
}

/// α₁ = λγ/(1−λ), for λ ≤ ½.
pub fn poly1_gap(lambda: f64, gamma: f64) -> f64 {
    lambda * gamma / (1.0 - lambda)
}

/// Optimal quadratic gap α₂ for λ ∈ (0, ½).
pub fn poly2_gap(lambda: f64, gamma: f64) -> f64 {
    quadratic_gap(region_of(lambda, gamma), lambda, gamma)
}

/// A map from eigenvalues of G into [−1, 1] vanishing at λ.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumFilter {
    kind: FilterKind,
    lambda: f64,
    gamma: f64,
    /// `(a, c)` of `(x−λ)(a·x − c)`; `None` for the ridge filter.
    quad: Option<(f64, f64)>,
    region: Option<Region>,
    reflected: bool,
    gap: f64,
}

impl SpectrumFilter {
    pub fn ridge(lambda: f64, gamma: f64) -> Result<Self> {
        ThresholdSpec::new(lambda, gamma)?;
        Ok(Self {
            kind: FilterKind::Ridge,
            lambda,
            gamma,
            quad: None,
            region: None,
            reflected: false,
            gap: ridge_gap(gamma),
        })
    }

    /// Optimal degree-1 filter; λ > ½ goes through reflection.
    pub fn poly1(lambda: f64, gamma: f64) -> Result<Self> {
        let t = ThresholdSpec::new(lambda, gamma)?;
        if lambda > 0.5 {
            let r = t.reflected();
            return Self::poly1(r.lambda(), r.gamma())?.reflect();
        }
        Ok(Self {
            kind: FilterKind::Poly1,
            lambda,
            gamma,
            quad: Some((0.0, -1.0 / (1.0 - lambda))),
            region: None,
            reflected: false,
            gap: poly1_gap(lambda, gamma),
        })
    }

    /// Optimal quadratic filter; λ > ½ goes through reflection, λ = ½ is rejected.
    pub fn poly2(lambda: f64, gamma: f64) -> Result<Self> {
        let t = ThresholdSpec::new(lambda, gamma)?;
        if lambda == 0.5 {
            return Err(PcpError::LambdaHalf);
        }
        if lambda > 0.5 {
            let r = t.reflected();
            return Self::poly2(r.lambda(), r.gamma())?.reflect();
        }
        let region = region_of(lambda, gamma);
        Ok(Self {
            kind: FilterKind::Poly2,
            lambda,
            gamma,
            quad: Some(quadratic_coefficients(region, lambda, gamma)),
            region: Some(region),
            reflected: false,
            gap: quadratic_gap(region, lambda, gamma),
        })
    }

    /// Filter of the given kind at (λ, γ).
    pub fn of_kind(kind: FilterKind, lambda: f64, gamma: f64) -> Result<Self> {
        match kind {
            FilterKind::Ridge => Self::ridge(lambda, gamma),
            FilterKind::Poly1 => Self::poly1(lambda, gamma),
            FilterKind::Poly2 => Self::poly2(lambda, gamma),
        }
    }

    /// `q(x) = −p(1−x)`, admissible for `(1−λ, λγ/(1−λ))` with the same gap.
    pub fn reflect(&self) -> Result<Self> {
        let (a, c) = self.quad.ok_or(PcpError::NotAPolynomial)?;
        let r = ThresholdSpec::new(self.lambda, self.gamma)?.reflected();
        Ok(Self {
            kind: self.kind,
            lambda: r.lambda(),
            gamma: r.gamma(),
            quad: Some((-a, c - a)),
            region: self.region,
            reflected: !self.reflected,
            gap: self.gap,
        })
    }

    pub fn kind(&self) -> FilterKind {
        self.kind
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `(a, c)` of `(x−λ)(a·x − c)` for polynomial filters.
    pub fn coefficients(&self) -> Option<(f64, f64)> {
        self.quad
    }

    /// Region of the underlying (possibly reflected) quadratic problem.
    pub fn region(&self) -> Option<Region> {
        self.region
    }

    pub fn is_reflected(&self) -> bool {
        self.reflected
    }

    /// Closed-form admissible gap.
    pub fn gap(&self) -> f64 {
        self.gap
    }

    /// `min{−f((1−γ)λ), f((1+γ)λ)}` evaluated directly.
    pub fn direct_gap(&self) -> f64 {
        let t = ThresholdSpec::new(self.lambda, self.gamma).expect("filter built from a valid pair");
        (-self.eval(t.low_edge())).min(self.eval(t.high_edge()))
    }

    /// Operator applications needed for one `f(G)v`; `None` for the ridge filter,
    /// whose cost depends on the inner solver.
    pub fn matvecs_per_apply(&self) -> Option<u64> {
        match self.kind {
            FilterKind::Ridge => None,
            FilterKind::Poly1 => Some(1),
            FilterKind::Poly2 => Some(2),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self.quad {
            Some((a, c)) => (x - self.lambda) * (a * x - c),
            None => 2.0 * x / (x + self.lambda) - 1.0,
        }
    }

    /// Admissibility on a uniform `points`-point grid of [0, 1] (plus the band edges):
    /// `f(λ) = 0`, `−1 ≤ f(x) ≤ f((1−γ)λ) < 0` below the band and
    /// `0 < f((1+γ)λ) ≤ f(x) ≤ 1` above it, each with slack `tol`.
    pub fn is_admissible_on_grid(&self, points: usize, tol: f64) -> bool {
        let t = match ThresholdSpec::new(self.lambda, self.gamma) {
            Ok(t) => t,
            Err(_) => return false,
        };
        let (lo, hi) = (t.low_edge(), t.high_edge());
        let (f_lo, f_hi) = (self.eval(lo), self.eval(hi));
        if self.eval(self.lambda).abs() > tol || f_lo >= 0.0 || f_hi <= 0.0 {
            return false;
        }
        (0..points)
            .map(|i| i as f64 / (points - 1) as f64)
            .chain([lo, hi])
            .all(|x| {
                let v = self.eval(x);
                if x <= lo {
                    v >= -1.0 - tol && v <= f_lo + tol
                } else if x >= hi {
                    v >= f_hi - tol && v <= 1.0 + tol
                } else {
                    true
                }
            })
    }
}

/// λ-thresholds splitting (0, ½) into ridge / quadratic / linear regions.
pub fn thresholds_b(gamma: f64) -> (f64, f64) {
    let b1 = ((5.0 + gamma) - 2.0 * (4.0 + 2.0 * gamma).sqrt()) / (9.0 + 2.0 * gamma + gamma * gamma);
    let b2 = (2.0 + 2.0 * SQRT_2 - gamma) / (8.0 + 6.0 * SQRT_2 - gamma);
    (b1, b2)
}

/// Scores behind a filter choice.
#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    pub alpha_r: f64,
    pub alpha_1: f64,
    pub alpha_2: f64,
    /// Region of the (possibly reflected) quadratic problem; `None` at λ = ½.
    pub region: Option<Region>,
    /// Thresholds for the γ of the (possibly reflected) polynomial problem.
    pub b1: f64,
    pub b2: f64,
    pub reflected: bool,
    pub chosen: FilterKind,
}

/// Scores closer than this count as tied.
const TIE_TOLERANCE: f64 = 1e-12;

/// Picks the filter maximising `{α_r, 2α₁, α₂}`; ties favour Poly1, then Poly2, then Ridge.
pub fn select_filter(lambda: f64, gamma: f64) -> Result<(SpectrumFilter, GapReport)> {
    let t = ThresholdSpec::new(lambda, gamma)?;
    let reflected = lambda > 0.5;
    let poly_problem = if reflected { t.reflected() } else { t };
    let (pl, pg) = (poly_problem.lambda(), poly_problem.gamma());

    let alpha_r = ridge_gap(gamma);
    let alpha_1 = poly1_gap(pl, pg);
    let (alpha_2, region) = if pl < 0.5 {
        let region = region_of(pl, pg);
        (quadratic_gap(region, pl, pg), Some(region))
    } else {
        // concave or convex quadratics cannot beat the line at λ = ½
        (alpha_1, None)
    };
    let (b1, b2) = thresholds_b(pg);

    // priority order doubles as the tie-break
    let scored = [
        (FilterKind::Poly1, 2.0 * alpha_1),
        (FilterKind::Poly2, alpha_2),
        (FilterKind::Ridge, alpha_r),
    ];
    let best = scored.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    let chosen = scored
        .iter()
        .find(|s| s.1 >= best - TIE_TOLERANCE)
        .map(|s| s.0)
        .expect("non-empty score list");
    let filter = SpectrumFilter::of_kind(chosen, lambda, gamma)?;
    Ok((
        filter,
        GapReport {
            alpha_r,
            alpha_1,
            alpha_2,
            region,
            b1,
            b2,
            reflected,
            chosen,
        },
    ))
}

/// The interval rule: Ridge on (0, b₁), Poly2 on [b₁, b₂), Poly1 on [b₂, ½].
pub fn interval_rule(lambda: f64, gamma: f64) -> FilterKind {
    let (b1, b2) = thresholds_b(gamma);
    if lambda < b1 {
        FilterKind::Ridge
    } else if lambda < b2 {
        FilterKind::Poly2
    } else {
        FilterKind::Poly1
    }
}
