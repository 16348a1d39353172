//! Experiment drivers: error-vs-degree sweeps, cost-to-target searches and the
//! filter-selection table, all writing CSV.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::admissible::{select_filter, SpectrumFilter};
use crate::engine::{poly_pcp, quick_pcp, ProjectionReport, RidgeSolverConfig};
use crate::error::{PcpError, Result};
use crate::model::ThresholdSpec;
use crate::testbed::{exact_pcp, gen_matrix, relative_error, test_vector, Distribution, GeneratedMatrix, SyntheticSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Quick,
    Poly1,
    Poly2,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Quick, Method::Poly1, Method::Poly2];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Quick => "quick",
            Method::Poly1 => "poly1",
            Method::Poly2 => "poly2",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = PcpError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quick" => Ok(Method::Quick),
            "poly1" => Ok(Method::Poly1),
            "poly2" => Ok(Method::Poly2),
            other => Err(PcpError::InvalidConfig(format!("unknown method '{other}'"))),
        }
    }
}

/// Inclusive `start..=end` stepping by `stride`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DegreeRange {
    pub start: usize,
    pub end: usize,
    pub stride: usize,
}

impl DegreeRange {
    pub fn new(start: usize, end: usize, stride: usize) -> Result<Self> {
        if start == 0 || end < start || stride == 0 {
            return Err(PcpError::InvalidConfig(format!(
                "degree range needs 1 <= start <= end and stride >= 1, got {start}:{end}:{stride}"
            )));
        }
        Ok(Self { start, end, stride })
    }

    pub fn degrees(&self) -> impl Iterator<Item = usize> {
        (self.start..=self.end).step_by(self.stride)
    }
}

impl FromStr for DegreeRange {
    type Err = PcpError;

    /// `start:end[:stride]`
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| PcpError::InvalidConfig(format!("bad degree range '{s}'")))
        };
        match parts[..] {
            [a, b] => Self::new(num(a)?, num(b)?, 1),
            [a, b, c] => Self::new(num(a)?, num(b)?, num(c)?),
            _ => Err(PcpError::InvalidConfig(format!(
                "degree range must be start:end[:stride], got '{s}'"
            ))),
        }
    }
}

/// Shared experiment setup: which matrices, vectors and methods.
#[derive(Debug, Clone, PartialEq)]
pub struct Workload {
    pub lambdas: Vec<f64>,
    pub gamma: f64,
    pub seeds: usize,
    pub dim: usize,
    pub distribution: Distribution,
    pub methods: Vec<Method>,
}

impl Workload {
    fn validate(&self) -> Result<()> {
        if self.lambdas.is_empty() || self.methods.is_empty() || self.seeds == 0 {
            return Err(PcpError::InvalidConfig(
                "need at least one lambda, one method and one seed".into(),
            ));
        }
        if self.dim < 2 {
            return Err(PcpError::InvalidConfig(format!("dimension must be at least 2, got {}", self.dim)));
        }
        for &l in &self.lambdas {
            ThresholdSpec::new(l, self.gamma)?;
        }
        Ok(())
    }

    fn describe(&self) -> String {
        format!(
            "gamma={:.16e} dim={} dist={} seeds=0..{}",
            self.gamma,
            self.dim,
            self.distribution.name(),
            self.seeds
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub workload: Workload,
    pub degrees: DegreeRange,
}

/// One matrix/vector pair with its exact projection.
struct Fixture {
    matrix: GeneratedMatrix,
    chi: Vec<f64>,
    exact: Vec<f64>,
}

fn fixtures(w: &Workload, lambda: f64) -> Result<Vec<Fixture>> {
    (0..w.seeds as u64)
        .into_par_iter()
        .map(|seed| {
            let matrix = gen_matrix(&SyntheticSpec {
                dim: w.dim,
                lambda,
                gamma: w.gamma,
                distribution: w.distribution,
                seed,
            })?;
            let chi = test_vector(w.dim, seed);
            let exact = exact_pcp(&matrix.decomposition, lambda, &chi);
            Ok(Fixture { matrix, chi, exact })
        })
        .collect()
}

/// Runs one method; the degree-2 method falls back to degree 1 at λ = ½.
pub fn run_method(
    method: Method,
    handle: &crate::operator::OperatorHandle,
    chi: &[f64],
    lambda: f64,
    gamma: f64,
    n: usize,
    ridge: &RidgeSolverConfig,
) -> Result<ProjectionReport> {
    match method {
        Method::Quick => quick_pcp(handle, chi, lambda, gamma, n, ridge),
        Method::Poly1 => poly_pcp(handle, chi, &SpectrumFilter::poly1(lambda, gamma)?, n),
        Method::Poly2 => {
            let filter = match SpectrumFilter::poly2(lambda, gamma) {
                Err(PcpError::LambdaHalf) => SpectrumFilter::poly1(lambda, gamma)?,
                other => other?,
            };
            poly_pcp(handle, chi, &filter, n)
        }
    }
}

/// Means over seeds of error, matvecs and CG iterations, plus mean wall time in ms.
#[derive(Debug, Clone, Copy, PartialEq)]
struct CellStats {
    error: f64,
    matvecs: f64,
    cg_iterations: f64,
    wall_ms: f64,
}

fn evaluate(
    method: Method,
    lambda: f64,
    gamma: f64,
    n: usize,
    fx: &[Fixture],
    ridge: &RidgeSolverConfig,
) -> Result<CellStats> {
    let per_seed: Vec<(f64, f64, f64, f64)> = fx
        .par_iter()
        .map(|f| {
            let handle = f.matrix.handle();
            let start = Instant::now();
            let r = run_method(method, &handle, &f.chi, lambda, gamma, n, ridge)?;
            let ms = start.elapsed().as_secs_f64() * 1e3;
            let e = relative_error(&r.zeta, &f.exact)?;
            Ok((e, r.matvecs as f64, r.cg_iterations as f64, ms))
        })
        .collect::<Result<_>>()?;
    let k = per_seed.len() as f64;
    let sum = per_seed.iter().fold((0.0, 0.0, 0.0, 0.0), |a, s| {
        (a.0 + s.0, a.1 + s.1, a.2 + s.2, a.3 + s.3)
    });
    Ok(CellStats {
        error: sum.0 / k,
        matvecs: sum.1 / k,
        cg_iterations: sum.2 / k,
        wall_ms: sum.3 / k,
    })
}

/// Worker pool sized by `PCP_THREADS` when set.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("PCP_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| PcpError::InvalidConfig(format!("PCP_THREADS must be a positive integer, got '{v}'")))?;
        b = b.num_threads(n);
    }
    b.build().map_err(|e| PcpError::InvalidConfig(e.to_string()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub lambda: f64,
    pub method: Method,
    pub degree: usize,
    pub mean_error: f64,
    pub mean_matvecs: f64,
    pub mean_cg_iterations: f64,
}

/// Ridge tolerance used by sweeps, matching the usual CG setting of 1e-13.
pub const SWEEP_EPS_PRIME: f64 = 1e-13;

/// Mean relative error per (λ, method, degree), rows ordered by λ, then method, then degree.
pub fn sweep_degree(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    let w = &cfg.workload;
    w.validate()?;
    thread_pool()?.install(|| {
        let mut rows = Vec::new();
        for &lambda in &w.lambdas {
            let fx = fixtures(w, lambda)?;
            let ridge = RidgeSolverConfig::with_default_cap(lambda, SWEEP_EPS_PRIME)?;
            let cells: Vec<(Method, usize)> = w
                .methods
                .iter()
                .flat_map(|&m| cfg.degrees.degrees().map(move |n| (m, n)))
                .collect();
            let stats: Vec<CellStats> = cells
                .par_iter()
                .map(|&(m, n)| evaluate(m, lambda, w.gamma, n, &fx, &ridge))
                .collect::<Result<_>>()?;
            rows.extend(cells.iter().zip(stats).map(|(&(method, degree), s)| SweepRow {
                lambda,
                method,
                degree,
                mean_error: s.error,
                mean_matvecs: s.matvecs,
                mean_cg_iterations: s.cg_iterations,
            }));
        }
        Ok(rows)
    })
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub const SWEEP_HEADER: [&str; 6] = [
    "lambda",
    "method",
    "degree",
    "mean_rel_error",
    "mean_matvecs",
    "mean_cg_iterations",
];

pub fn write_sweep_csv<W: Write>(out: W, cfg: &SweepConfig, rows: &[SweepRow]) -> Result<()> {
    let mut out = out;
    writeln!(out, "# error-vs-degree sweep; {}", cfg.workload.describe())?;
    writeln!(out, "# mean_rel_error: mean over seeds of ||zeta - P chi|| / ||P chi||")?;
    writeln!(out, "# mean_matvecs: operator applications per run, including those inside ridge solves")?;
    writeln!(out, "# mean_cg_iterations: conjugate-gradient iterations per run (quick only)")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for r in rows {
        w.write_record([
            num(r.lambda),
            r.method.to_string(),
            r.degree.to_string(),
            num(r.mean_error),
            num(r.mean_matvecs),
            num(r.mean_cg_iterations),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostConfig {
    pub workload: Workload,
    pub target: f64,
    pub n_max: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostRow {
    pub lambda: f64,
    pub method: Method,
    /// Smallest degree found meeting the target, or `n_max` when unreachable.
    pub degree: usize,
    pub reached: bool,
    pub mean_error: f64,
    pub mean_matvecs: f64,
    pub mean_cg_iterations: f64,
    /// Informational only; excluded from determinism checks.
    pub wall_ms: f64,
}

/// Doubling then bisection for the smallest n with mean error ≤ target.
fn search_degree(
    target: f64,
    n_max: usize,
    mut eval: impl FnMut(usize) -> Result<CellStats>,
) -> Result<(usize, bool, CellStats)> {
    let mut lo = 0usize;
    let mut n = 1usize;
    let (hi, hi_stats) = loop {
        let s = eval(n)?;
        if s.error <= target {
            break (n, s);
        }
        if n >= n_max {
            return Ok((n, false, s));
        }
        lo = n;
        n = (2 * n).min(n_max);
    };
    let (mut hi, mut hi_stats) = (hi, hi_stats);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let s = eval(mid)?;
        if s.error <= target {
            hi = mid;
            hi_stats = s;
        } else {
            lo = mid;
        }
    }
    Ok((hi, true, hi_stats))
}

/// Per (λ, method): the cheapest degree reaching the target and its operator cost.
pub fn bench_cost(cfg: &CostConfig) -> Result<Vec<CostRow>> {
    let w = &cfg.workload;
    w.validate()?;
    if !(cfg.target > 0.0 && cfg.target < 1.0) {
        return Err(PcpError::InvalidConfig(format!("target must lie in (0, 1), got {}", cfg.target)));
    }
    if cfg.n_max == 0 {
        return Err(PcpError::InvalidConfig("n_max must be positive".into()));
    }
    thread_pool()?.install(|| {
        let mut rows = Vec::new();
        for &lambda in &w.lambdas {
            let fx = fixtures(w, lambda)?;
            let found: Vec<(usize, bool, CellStats)> = w
                .methods
                .par_iter()
                .map(|&m| {
                    search_degree(cfg.target, cfg.n_max, |n| {
                        let ridge = RidgeSolverConfig::for_projection(lambda, w.gamma, cfg.target, n)?;
                        evaluate(m, lambda, w.gamma, n, &fx, &ridge)
                    })
                })
                .collect::<Result<_>>()?;
            rows.extend(w.methods.iter().zip(found).map(|(&method, (degree, reached, s))| CostRow {
                lambda,
                method,
                degree,
                reached,
                mean_error: s.error,
                mean_matvecs: s.matvecs,
                mean_cg_iterations: s.cg_iterations,
                wall_ms: s.wall_ms,
            }));
        }
        Ok(rows)
    })
}

pub const COST_HEADER: [&str; 8] = [
    "lambda",
    "method",
    "degree",
    "status",
    "mean_rel_error",
    "mean_matvecs",
    "mean_cg_iterations",
    "wall_ms",
];

pub fn write_cost_csv<W: Write>(out: W, cfg: &CostConfig, rows: &[CostRow]) -> Result<()> {
    let mut out = out;
    writeln!(
        out,
        "# cost to reach mean relative error <= {:.16e}; {}; n_max={}",
        cfg.target,
        cfg.workload.describe(),
        cfg.n_max
    )?;
    writeln!(out, "# status: ok, or target_unreachable when n_max did not suffice (degree is then n_max)")?;
    writeln!(out, "# mean_matvecs: operator applications per run at that degree, including ridge solves")?;
    writeln!(out, "# wall_ms: mean wall time per run; informational")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COST_HEADER)?;
    for r in rows {
        w.write_record([
            num(r.lambda),
            r.method.to_string(),
            r.degree.to_string(),
            if r.reached { "ok" } else { "target_unreachable" }.to_string(),
            num(r.mean_error),
            num(r.mean_matvecs),
            num(r.mean_cg_iterations),
            format!("{:.3}", r.wall_ms),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `(key, value)` lines describing the filter choice at (λ, γ).
pub fn select_table(lambda: f64, gamma: f64) -> Result<Vec<(&'static str, String)>> {
    let (filter, r) = select_filter(lambda, gamma)?;
    Ok(vec![
        ("lambda", num(lambda)),
        ("gamma", num(gamma)),
        ("alpha_r", num(r.alpha_r)),
        ("alpha_1", num(r.alpha_1)),
        ("two_alpha_1", num(2.0 * r.alpha_1)),
        ("alpha_2", num(r.alpha_2)),
        ("b1", num(r.b1)),
        ("b2", num(r.b2)),
        ("region", r.region.map_or("none".to_string(), |g| g.to_string())),
        ("reflected", r.reflected.to_string()),
        ("chosen", filter.kind().to_string()),
    ])
}
