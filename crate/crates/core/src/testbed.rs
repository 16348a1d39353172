//! Synthetic test matrices with known spectra, the exact projection, and
//! checks against the approximate-projection conditions.

use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{StandardNormal, Uniform};

use crate::error::{PcpError, Result};
use crate::model::{distance, norm, ThresholdSpec};
use crate::operator::{DenseOperator, LinearOperator, OperatorHandle};

/// Stream used for test vectors so they never share draws with the matrix.
const CHI_STREAM: u64 = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Distribution {
    /// Gaussian matrix, singular values rescaled by the largest, band values zeroed.
    RandomEigen,
    /// Half the singular values below the band, half above, one pinned at 1.
    UniformEigen,
}

impl FromStr for Distribution {
    type Err = PcpError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(Distribution::RandomEigen),
            "uniform" => Ok(Distribution::UniformEigen),
            other => Err(PcpError::InvalidConfig(format!(
                "unknown distribution '{other}' (expected random or uniform)"
            ))),
        }
    }
}

impl Distribution {
    pub fn name(&self) -> &'static str {
        match self {
            Distribution::RandomEigen => "random",
            Distribution::UniformEigen => "uniform",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub dim: usize,
    pub lambda: f64,
    pub gamma: f64,
    pub distribution: Distribution,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn threshold(&self) -> Result<ThresholdSpec> {
        if self.dim < 2 {
            return Err(PcpError::InvalidConfig(format!("dimension must be at least 2, got {}", self.dim)));
        }
        ThresholdSpec::new(self.lambda, self.gamma)
    }
}

/// Eigenpairs of G, eigenvalues descending, eigenvectors as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
}

impl ExactDecomposition {
    pub fn new(eigenvalues: Vec<f64>, eigenvectors: DMatrix<f64>) -> Result<Self> {
        let d = eigenvalues.len();
        if eigenvectors.nrows() != d || eigenvectors.ncols() != d {
            return Err(PcpError::DimensionMismatch {
                expected: d,
                found: eigenvectors.ncols(),
            });
        }
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&i, &j| eigenvalues[j].total_cmp(&eigenvalues[i]));
        let values = order.iter().map(|&i| eigenvalues[i]).collect();
        let vectors = eigenvectors.select_columns(&order);
        Ok(Self {
            eigenvalues: values,
            eigenvectors: vectors,
        })
    }

    /// Dense symmetric eigendecomposition of an explicit matrix.
    pub fn from_symmetric(g: &DMatrix<f64>) -> Result<Self> {
        if !g.is_square() {
            return Err(PcpError::DimensionMismatch {
                expected: g.nrows(),
                found: g.ncols(),
            });
        }
        let sym = (g + g.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        Self::new(eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    /// `max |VᵀV − I|`
    pub fn orthogonality_defect(&self) -> f64 {
        let d = self.dim();
        (self.eigenvectors.transpose() * &self.eigenvectors - DMatrix::identity(d, d)).amax()
    }

    /// `max |V diag(σ²) Vᵀ − G|`
    pub fn reconstruction_defect(&self, g: &DMatrix<f64>) -> f64 {
        (self.reconstruct() - g).amax()
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        let v = &self.eigenvectors;
        let scaled = v * DMatrix::from_diagonal(&DVector::from_column_slice(&self.eigenvalues));
        scaled * v.transpose()
    }

    /// Coordinates `⟨v_i, χ⟩`.
    pub fn coordinates(&self, chi: &[f64]) -> Vec<f64> {
        let x = DVector::from_column_slice(chi);
        (self.eigenvectors.transpose() * x).iter().copied().collect()
    }

    /// `Σ_{i: keep(σ_i²)} coeff_i · v_i`
    fn combine(&self, coords: &[f64], keep: impl Fn(f64) -> bool) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for (i, (&ev, &c)) in self.eigenvalues.iter().zip(coords).enumerate() {
            if keep(ev) && c != 0.0 {
                for (o, v) in out.iter_mut().zip(self.eigenvectors.column(i).iter()) {
                    *o += c * v;
                }
            }
        }
        out
    }
}

/// A generated G with its eigendecomposition.
#[derive(Debug, Clone)]
pub struct GeneratedMatrix {
    pub gram: Arc<DenseOperator>,
    pub decomposition: ExactDecomposition,
    /// Singular values zeroed because they fell inside the band (RandomEigen only).
    pub zeroed: usize,
}

impl GeneratedMatrix {
    /// Fresh certified handle with its own matvec counter.
    pub fn handle(&self) -> OperatorHandle {
        OperatorHandle::certified(self.gram.clone() as Arc<dyn LinearOperator>)
    }
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
    // column-major fill keeps the draw order fixed
    DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Orthogonal factor of a Gaussian matrix with the signs of R's diagonal made positive.
fn random_orthogonal(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
    let qr = gaussian_matrix(rng, d).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Builds G = V Σ² Vᵀ for the requested spectrum shape; deterministic in the seed.
pub fn gen_matrix(spec: &SyntheticSpec) -> Result<GeneratedMatrix> {
    let t = spec.threshold()?;
    let d = spec.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (lo, hi) = (t.low_edge(), t.high_edge());

    let (eigenvalues, v, zeroed) = match spec.distribution {
        Distribution::UniformEigen => {
            let below = d.div_ceil(2);
            let low = Uniform::new_inclusive(0.0, lo.sqrt()).expect("valid range");
            let high = Uniform::new_inclusive(hi.sqrt(), 1.0).expect("valid range");
            let mut sq: Vec<f64> = Vec::with_capacity(d);
            for _ in 0..below {
                let s: f64 = rng.sample(low);
                sq.push((s * s).min(lo));
            }
            sq.push(1.0);
            for _ in below + 1..d {
                let s: f64 = rng.sample(high);
                sq.push((s * s).max(hi));
            }
            let v = random_orthogonal(&mut rng, d);
            (sq, v, 0)
        }
        Distribution::RandomEigen => {
            let b = gaussian_matrix(&mut rng, d);
            let svd = SVD::new(b, false, true);
            let vt = svd.v_t.expect("right singular vectors requested");
            let s1 = svd.singular_values.max();
            let mut zeroed = 0;
            let sq: Vec<f64> = svd
                .singular_values
                .iter()
                .map(|s| {
                    let x = (s / s1).powi(2);
                    if x > lo && x < hi {
                        zeroed += 1;
                        0.0
                    } else {
                        x
                    }
                })
                .collect();
            (sq, vt.transpose(), zeroed)
        }
    };
    let decomposition = ExactDecomposition::new(eigenvalues, v)?;
    let mut g = decomposition.reconstruct();
    g = (&g + g.transpose()) * 0.5;
    Ok(GeneratedMatrix {
        gram: Arc::new(DenseOperator::new(g)?),
        decomposition,
        zeroed,
    })
}

/// Standard Gaussian vector scaled to unit norm, drawn from a stream separate from `gen_matrix`.
pub fn test_vector(d: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(CHI_STREAM);
    let mut v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let n = norm(&v);
    v.iter_mut().for_each(|x| *x /= n);
    v
}

/// `Σ_{σ_i² ≥ λ} v_i⟨v_i, χ⟩`
pub fn exact_pcp(dec: &ExactDecomposition, lambda: f64, chi: &[f64]) -> Vec<f64> {
    dec.combine(&dec.coordinates(chi), |ev| ev >= lambda)
}

/// `‖ζ − exact‖ / ‖exact‖`
pub fn relative_error(zeta: &[f64], exact: &[f64]) -> Result<f64> {
    let n = norm(exact);
    if n == 0.0 {
        return Err(PcpError::ZeroReference);
    }
    Ok(distance(zeta, exact) / n)
}

/// One condition's verdict: `slack = bound − measured`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Condition {
    pub passed: bool,
    pub slack: f64,
}

impl Condition {
    fn from_slack(slack: f64) -> Self {
        Self {
            passed: slack >= 0.0,
            slack,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplianceReport {
    /// `‖P_{(1+γ)λ}(ζ − χ)‖ ≤ ε‖χ‖`
    pub above: Condition,
    /// `‖(I − P_{(1−γ)λ})ζ‖ ≤ ε‖χ‖`
    pub below: Condition,
    /// `|⟨v_i, ζ − χ⟩| ≤ |⟨v_i, χ⟩| + ε‖χ‖` inside the band; infinite slack if the band is empty.
    pub band: Condition,
}

impl ComplianceReport {
    pub fn all_passed(&self) -> bool {
        self.above.passed && self.below.passed && self.band.passed
    }
}

/// Evaluates the three approximate-projection conditions with exact projectors.
pub fn check_approx_pcp(
    dec: &ExactDecomposition,
    lambda: f64,
    gamma: f64,
    eps: f64,
    chi: &[f64],
    zeta: &[f64],
) -> Result<ComplianceReport> {
    let t = ThresholdSpec::new(lambda, gamma)?;
    let (lo, hi) = (t.low_edge(), t.high_edge());
    let budget = eps * norm(chi);
    let cz = dec.coordinates(zeta);
    let cx = dec.coordinates(chi);
    let ev = dec.eigenvalues();

    let mut above = 0.0;
    let mut below = 0.0;
    let mut band = f64::INFINITY;
    for i in 0..ev.len() {
        if ev[i] >= hi {
            above += (cz[i] - cx[i]).powi(2);
        }
        if ev[i] < lo {
            below += cz[i].powi(2);
        }
        if ev[i] >= lo && ev[i] <= hi {
            band = band.min(cx[i].abs() + budget - (cz[i] - cx[i]).abs());
        }
    }
    Ok(ComplianceReport {
        above: Condition::from_slack(budget - above.sqrt()),
        below: Condition::from_slack(budget - below.sqrt()),
        band: Condition::from_slack(band),
    })
}

/// Writes `index,eigenvalue` rows, eigenvalues descending, 17 significant digits.
pub fn write_eigenvalues_csv(path: &Path, dec: &ExactDecomposition) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["index", "eigenvalue"])?;
    for (i, ev) in dec.eigenvalues().iter().enumerate() {
        w.write_record([i.to_string(), format!("{ev:.16e}")])?;
    }
    w.flush()?;
    Ok(())
}
