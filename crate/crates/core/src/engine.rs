//! Clenshaw evaluation of `½(χ + g_n(f(G))χ)` for polynomial and ridge filters,
//! and the conjugate-gradient ridge solver.

use crate::admissible::{select_filter, FilterKind, SpectrumFilter};
use crate::chebyshev::{build_sign_approx, min_degree, SignApprox};
use crate::error::{PcpError, Result};
use crate::model::{axpy, dot, ensure_finite, norm, DenseVector, ThresholdSpec};
use crate::operator::OperatorHandle;

/// Stopping rule for the ridge solver: `‖(G+λI)x − u‖ ≤ eps_prime·λ·‖u‖`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RidgeSolverConfig {
    pub eps_prime: f64,
    pub max_iter: usize,
}

impl RidgeSolverConfig {
    pub fn new(eps_prime: f64, max_iter: usize) -> Result<Self> {
        if !(eps_prime > 0.0 && eps_prime <= 1e-2) {
            return Err(PcpError::InvalidConfig(format!(
                "ridge tolerance must lie in (0, 1e-2], got {eps_prime}"
            )));
        }
        if max_iter == 0 {
            return Err(PcpError::InvalidConfig("ridge iteration cap must be positive".into()));
        }
        Ok(Self { eps_prime, max_iter })
    }

    /// Cap `⌈10·√(1/λ)·ln(1/eps_prime)⌉`.
    pub fn with_default_cap(lambda: f64, eps_prime: f64) -> Result<Self> {
        let cap = (10.0 * (1.0 / lambda).sqrt() * (1.0 / eps_prime).ln()).ceil();
        Self::new(eps_prime, (cap as usize).max(1))
    }

    /// `eps_prime = min(1e-13, εγ/(100n))`, floored at 1e-14.
    pub fn for_projection(lambda: f64, gamma: f64, eps: f64, n: usize) -> Result<Self> {
        let eps_prime = (eps * gamma / (100.0 * n.max(1) as f64)).clamp(MIN_EPS_PRIME, 1e-13);
        Self::with_default_cap(lambda, eps_prime)
    }
}

/// Below this the residual test stops being meaningful in double precision.
pub const MIN_EPS_PRIME: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct RidgeSolution {
    pub x: DenseVector,
    pub iterations: usize,
    pub converged: bool,
}

/// Something that solves `(G + λI)x = u`.
pub trait RidgeSolver {
    /// Writes the solution into `x` and returns `(operator applications, converged)`.
    fn solve(&mut self, g: &OperatorHandle, lambda: f64, u: &[f64], x: &mut [f64]) -> (usize, bool);

    /// Iteration cap reported in `MaxIterExceeded`.
    fn max_iter(&self) -> usize;
}

/// Conjugate gradient from a zero start, stopping on the recursive residual.
#[derive(Debug, Clone)]
pub struct ConjugateGradient {
    cfg: RidgeSolverConfig,
    r: Vec<f64>,
    p: Vec<f64>,
    q: Vec<f64>,
}

impl ConjugateGradient {
    pub fn new(cfg: RidgeSolverConfig) -> Self {
        Self {
            cfg,
            r: Vec::new(),
            p: Vec::new(),
            q: Vec::new(),
        }
    }
}

impl RidgeSolver for ConjugateGradient {
    fn solve(&mut self, g: &OperatorHandle, lambda: f64, u: &[f64], x: &mut [f64]) -> (usize, bool) {
        let d = u.len();
        x.iter_mut().for_each(|v| *v = 0.0);
        let un = norm(u);
        if un == 0.0 {
            return (0, true);
        }
        self.r.clear();
        self.r.extend_from_slice(u);
        self.p.clear();
        self.p.extend_from_slice(u);
        self.q.resize(d, 0.0);
        let target = (self.cfg.eps_prime * lambda * un).powi(2);
        let mut rr = dot(&self.r, &self.r);
        for k in 1..=self.cfg.max_iter {
            g.apply(&self.p, &mut self.q);
            axpy(lambda, &self.p, &mut self.q);
            let step = rr / dot(&self.p, &self.q);
            axpy(step, &self.p, x);
            axpy(-step, &self.q, &mut self.r);
            let rr_next = dot(&self.r, &self.r);
            if rr_next <= target {
                return (k, true);
            }
            let beta = rr_next / rr;
            for (pi, ri) in self.p.iter_mut().zip(&self.r) {
                *pi = ri + beta * *pi;
            }
            rr = rr_next;
        }
        (self.cfg.max_iter, false)
    }

    fn max_iter(&self) -> usize {
        self.cfg.max_iter
    }
}

/// Exact solves for a diagonal G given its (already normalized) diagonal.
#[derive(Debug, Clone)]
pub struct ExactDiagonalRidge {
    diag: Vec<f64>,
}

impl ExactDiagonalRidge {
    pub fn new(diag: Vec<f64>) -> Self {
        Self { diag }
    }
}

impl RidgeSolver for ExactDiagonalRidge {
    fn solve(&mut self, _g: &OperatorHandle, lambda: f64, u: &[f64], x: &mut [f64]) -> (usize, bool) {
        for ((xi, ui), di) in x.iter_mut().zip(u).zip(&self.diag) {
            *xi = ui / (di + lambda);
        }
        (0, true)
    }

    fn max_iter(&self) -> usize {
        0
    }
}

/// Single ridge solve by conjugate gradient.
pub fn ridge_solve(
    g: &OperatorHandle,
    lambda: f64,
    u: &[f64],
    cfg: &RidgeSolverConfig,
) -> Result<RidgeSolution> {
    check_vector(g, u, "ridge right-hand side")?;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(PcpError::InvalidConfig(format!("ridge lambda must be positive, got {lambda}")));
    }
    let mut x = vec![0.0; u.len()];
    let (iterations, converged) = ConjugateGradient::new(*cfg).solve(g, lambda, u, &mut x);
    Ok(RidgeSolution {
        x,
        iterations,
        converged,
    })
}

/// Final line of the ridge pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FinalStep {
    /// `u = M(b₀ − w)` with `M z = (G+λI)⁻¹(G−λI)z`.
    #[default]
    Filtered,
    /// `u = (G+λI)⁻¹((G−λI)b₀ − w)`, the variant as printed in the original pseudo-code.
    AsPrinted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionReport {
    pub zeta: DenseVector,
    /// Filter actually applied, rebuilt at `gamma_eff`.
    pub filter: SpectrumFilter,
    pub degree: usize,
    pub alpha: f64,
    pub kappa: f64,
    pub gamma_eff: f64,
    /// Operator applications, including those spent inside ridge solves.
    pub matvecs: u64,
    pub cg_iterations: u64,
    pub ridge_solves: u64,
    pub eps_prime: Option<f64>,
}

impl ProjectionReport {
    pub fn filter_kind(&self) -> FilterKind {
        self.filter.kind()
    }
}

fn check_vector(g: &OperatorHandle, v: &[f64], what: &'static str) -> Result<()> {
    if v.len() != g.dim() {
        return Err(PcpError::DimensionMismatch {
            expected: g.dim(),
            found: v.len(),
        });
    }
    ensure_finite(v, what)
}

fn check_inputs(g: &OperatorHandle, chi: &[f64], n: usize) -> Result<()> {
    if !g.is_norm_certified() {
        return Err(PcpError::NotNormalized);
    }
    check_vector(g, chi, "chi")?;
    if n < 1 {
        return Err(PcpError::InvalidDegree { min: 1, found: n });
    }
    Ok(())
}

/// The filter of the same kind at `γ_eff = max(γ, ln n / n)`.
fn effective_filter(filter: &SpectrumFilter, n: usize) -> Result<SpectrumFilter> {
    let t = ThresholdSpec::new(filter.lambda(), filter.gamma())?.floored_for_degree(n);
    if t.gamma() == filter.gamma() {
        Ok(filter.clone())
    } else {
        SpectrumFilter::of_kind(filter.kind(), t.lambda(), t.gamma())
    }
}

/// Clenshaw buffers: `b_{r+1}`, `b_{r+2}`, `w`, plus two scratch vectors for `f(G)`.
struct ClenshawState {
    b_next1: Vec<f64>,
    b_next2: Vec<f64>,
    w: Vec<f64>,
    y1: Vec<f64>,
    y2: Vec<f64>,
}

/// Runs the backward recurrence with `Y = (1+κ)I − 2f(G)²` and returns the state
/// holding `b₀` in `b_next1` and `w = Y b₁`.
fn clenshaw<F>(chi: &[f64], sign: &SignApprox, mut apply_filter: F) -> ClenshawState
where
    F: FnMut(&[f64], &mut [f64]),
{
    let d = chi.len();
    let c = sign.coeffs();
    let n = sign.degree();
    let kappa = sign.kappa();
    let mut st = ClenshawState {
        b_next1: chi.iter().map(|x| c[n] * x).collect(),
        b_next2: vec![0.0; d],
        w: vec![0.0; d],
        y1: vec![0.0; d],
        y2: vec![0.0; d],
    };
    for r in (0..n).rev() {
        apply_filter(&st.b_next1, &mut st.y1);
        apply_filter(&st.y1, &mut st.y2);
        for ((wi, bi), yi) in st.w.iter_mut().zip(&st.b_next1).zip(&st.y2) {
            *wi = (1.0 + kappa) * bi - 2.0 * yi;
        }
        // b_r overwrites b_{r+2}, then the two swap roles
        for ((b2, wi), xi) in st.b_next2.iter_mut().zip(&st.w).zip(chi) {
            *b2 = 2.0 * wi - *b2 + c[r] * xi;
        }
        std::mem::swap(&mut st.b_next1, &mut st.b_next2);
    }
    st
}

fn finish(chi: &[f64], u: &[f64]) -> DenseVector {
    chi.iter().zip(u).map(|(x, ui)| 0.5 * (ui + x)).collect()
}

/// `y ← p(G)x` for `p(x) = (x−λ)(a·x − c)`; one matvec when `a = 0`, two otherwise.
struct PolyApply<'a> {
    g: &'a OperatorHandle,
    lambda: f64,
    a: f64,
    c: f64,
    t: Vec<f64>,
    count: u64,
}

impl PolyApply<'_> {
    fn apply(&mut self, x: &[f64], y: &mut [f64]) {
        // t = (G − λI)x
        self.g.apply(x, &mut self.t);
        self.count += 1;
        axpy(-self.lambda, x, &mut self.t);
        if self.a == 0.0 {
            for (yi, ti) in y.iter_mut().zip(&self.t) {
                *yi = -self.c * ti;
            }
        } else {
            self.g.apply(&self.t, y);
            self.count += 1;
            for (yi, ti) in y.iter_mut().zip(&self.t) {
                *yi = self.a * *yi - self.c * ti;
            }
        }
    }
}

/// Polynomial pipeline: Clenshaw on `(1+κ)I − 2p(G)²` with a degree-1 or degree-2 filter.
///
/// Uses exactly `(2n+1)·deg(p)` operator applications.
pub fn poly_pcp(
    g: &OperatorHandle,
    chi: &[f64],
    filter: &SpectrumFilter,
    n: usize,
) -> Result<ProjectionReport> {
    check_inputs(g, chi, n)?;
    if filter.coefficients().is_none() {
        return Err(PcpError::NotAPolynomial);
    }
    let filter = effective_filter(filter, n)?;
    let (a, c) = filter.coefficients().ok_or(PcpError::NotAPolynomial)?;
    let alpha = filter.gap();
    let sign = build_sign_approx(alpha, n)?;

    let mut p = PolyApply {
        g,
        lambda: filter.lambda(),
        a,
        c,
        t: vec![0.0; chi.len()],
        count: 0,
    };
    let mut st = clenshaw(chi, &sign, |x, y| p.apply(x, y));
    axpy(-1.0, &st.w, &mut st.b_next1);
    p.apply(&st.b_next1, &mut st.y1);

    let per_apply = filter.matvecs_per_apply().expect("polynomial filter");
    let expected = (2 * n as u64 + 1) * per_apply;
    assert_eq!(p.count, expected, "polynomial pipeline matvec count");
    let zeta = finish(chi, &st.y1);
    ensure_finite(&zeta, "zeta")?;
    Ok(ProjectionReport {
        zeta,
        gamma_eff: filter.gamma(),
        filter,
        degree: n,
        alpha,
        kappa: sign.kappa(),
        matvecs: p.count,
        cg_iterations: 0,
        ridge_solves: 0,
        eps_prime: None,
    })
}

/// `y ← (G+λI)⁻¹(G−λI)x` through a ridge solver.
struct RidgeApply<'a, S: ?Sized> {
    g: &'a OperatorHandle,
    lambda: f64,
    solver: &'a mut S,
    t: Vec<f64>,
    direct: u64,
    inner: u64,
    solves: u64,
    failed: usize,
}

impl<S: RidgeSolver + ?Sized> RidgeApply<'_, S> {
    fn minus_lambda(&mut self, x: &[f64]) {
        self.g.apply(x, &mut self.t);
        self.direct += 1;
        axpy(-self.lambda, x, &mut self.t);
    }

    fn solve_into(&mut self, y: &mut [f64]) {
        let (iters, ok) = self.solver.solve(self.g, self.lambda, &self.t, y);
        self.inner += iters as u64;
        self.solves += 1;
        if !ok {
            self.failed += 1;
        }
    }

    fn apply(&mut self, x: &[f64], y: &mut [f64]) {
        self.minus_lambda(x);
        self.solve_into(y);
    }
}

/// Ridge pipeline with conjugate-gradient solves.
pub fn quick_pcp(
    g: &OperatorHandle,
    chi: &[f64],
    lambda: f64,
    gamma: f64,
    n: usize,
    cfg: &RidgeSolverConfig,
) -> Result<ProjectionReport> {
    let mut solver = ConjugateGradient::new(*cfg);
    let mut report = quick_pcp_with(g, chi, lambda, gamma, n, &mut solver, FinalStep::Filtered)?;
    report.eps_prime = Some(cfg.eps_prime);
    Ok(report)
}

/// Ridge pipeline with a caller-supplied solver and final step.
///
/// Performs exactly `2n+1` ridge solves, each preceded by one application of `G − λI`.
pub fn quick_pcp_with<S: RidgeSolver + ?Sized>(
    g: &OperatorHandle,
    chi: &[f64],
    lambda: f64,
    gamma: f64,
    n: usize,
    solver: &mut S,
    final_step: FinalStep,
) -> Result<ProjectionReport> {
    check_inputs(g, chi, n)?;
    let filter = effective_filter(&SpectrumFilter::ridge(lambda, gamma)?, n)?;
    let alpha = filter.gap();
    let sign = build_sign_approx(alpha, n)?;

    let mut m = RidgeApply {
        g,
        lambda,
        solver,
        t: vec![0.0; chi.len()],
        direct: 0,
        inner: 0,
        solves: 0,
        failed: 0,
    };
    let mut st = clenshaw(chi, &sign, |x, y| m.apply(x, y));
    match final_step {
        FinalStep::Filtered => {
            axpy(-1.0, &st.w, &mut st.b_next1);
            m.apply(&st.b_next1, &mut st.y1);
        }
        FinalStep::AsPrinted => {
            m.minus_lambda(&st.b_next1);
            axpy(-1.0, &st.w, &mut m.t);
            m.solve_into(&mut st.y1);
        }
    }

    let expected = 2 * n as u64 + 1;
    assert_eq!(m.solves, expected, "ridge pipeline solve count");
    assert_eq!(m.direct, expected, "ridge pipeline matvec count");
    if m.failed > 0 {
        return Err(PcpError::MaxIterExceeded {
            max_iter: m.solver.max_iter(),
            failed: m.failed,
        });
    }
    let zeta = finish(chi, &st.y1);
    ensure_finite(&zeta, "zeta")?;
    Ok(ProjectionReport {
        zeta,
        gamma_eff: filter.gamma(),
        filter,
        degree: n,
        alpha,
        kappa: sign.kappa(),
        matvecs: m.direct + m.inner,
        cg_iterations: m.inner,
        ridge_solves: m.solves,
        eps_prime: None,
    })
}

/// Selects a filter, sizes the degree for accuracy `eps`, and runs the matching pipeline.
pub fn project(
    g: &OperatorHandle,
    chi: &[f64],
    lambda: f64,
    gamma: f64,
    eps: f64,
) -> Result<ProjectionReport> {
    let (filter, _) = select_filter(lambda, gamma)?;
    let n = min_degree(filter.gap(), eps)?;
    match filter.kind() {
        FilterKind::Ridge => {
            let cfg = RidgeSolverConfig::for_projection(lambda, gamma, eps, n)?;
            quick_pcp(g, chi, lambda, gamma, n, &cfg)
        }
        _ => poly_pcp(g, chi, &filter, n),
    }
}

/// Scalar reference `½(1 + g_n(f(x)))` for one eigenvalue `x`, using the same
/// effective filter and sign approximation as a pipeline report.
pub fn scalar_reference(report: &ProjectionReport, x: f64) -> Result<f64> {
    let sign = build_sign_approx(report.alpha, report.degree)?;
    let f = report.filter.eval(x).clamp(-1.0, 1.0);
    Ok(0.5 * (1.0 + sign.eval(f)?))
}
