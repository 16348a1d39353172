//! `pcp`: approximate principal component projection from the command line.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pcp_core::bench::{
    bench_cost, select_table, sweep_degree, write_cost_csv, write_sweep_csv, CostConfig, DegreeRange, Method,
    SweepConfig, Workload,
};
use pcp_core::engine::project;
use pcp_core::mmio::{read_matrix_market, read_vector, write_matrix_market, write_vector};
use pcp_core::operator::{power_normalize, CsrMatrix, GramOperator, LinearOperator, OperatorHandle, SparseOperator};
use pcp_core::testbed::{gen_matrix, write_eigenvalues_csv, Distribution, SyntheticSpec};
use pcp_core::PcpError;

#[derive(Parser)]
#[command(name = "pcp", version, about = "Principal component projection without eigendecomposition")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Project a vector onto the eigenvectors of G with eigenvalue >= lambda.
    Project(ProjectArgs),
    /// Mean relative error against degree for each method (CSV).
    SweepDegree(SweepArgs),
    /// Smallest degree and operator cost reaching a target error (CSV).
    BenchCost(CostArgs),
    /// Gap scores and the filter chosen for (lambda, gamma).
    Select(SelectArgs),
    /// Write a synthetic G with known spectrum, plus its eigenvalues.
    GenMatrix(GenArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MatrixKind {
    /// The file holds G itself (square, symmetric PSD).
    G,
    /// The file holds A; products use Aᵀ(A v).
    A,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Mm,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Dist {
    Random,
    Uniform,
}

impl From<Dist> for Distribution {
    fn from(d: Dist) -> Self {
        match d {
            Dist::Random => Distribution::RandomEigen,
            Dist::Uniform => Distribution::UniformEigen,
        }
    }
}

#[derive(Args)]
struct ProjectArgs {
    /// Matrix Market file holding G or A.
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long, value_enum, default_value = "g")]
    matrix_kind: MatrixKind,
    /// Vector file: Matrix Market d x 1, or one number per line.
    #[arg(long)]
    chi: PathBuf,
    /// Threshold, relative to the largest eigenvalue of G.
    #[arg(long)]
    lambda: f64,
    #[arg(long, default_value_t = 0.1)]
    gamma: f64,
    #[arg(long, default_value_t = 1e-6)]
    eps: f64,
    /// Relative tolerance of the power iteration that normalizes G.
    #[arg(long, default_value_t = 1e-10)]
    power_tol: f64,
    /// Largest eigenvalue of G, when known; skips the power iteration.
    #[arg(long)]
    sigma1_sq: Option<f64>,
    /// Output file for the projected vector.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args)]
struct WorkloadArgs {
    /// Comma-separated thresholds.
    #[arg(long, value_delimiter = ',', required = true)]
    lambda: Vec<f64>,
    #[arg(long, default_value_t = 0.1)]
    gamma: f64,
    /// Number of seeds; seeds 0..N are used.
    #[arg(long, default_value_t = 10)]
    seeds: usize,
    #[arg(long, default_value_t = 300)]
    dim: usize,
    #[arg(long, value_enum, default_value = "uniform")]
    dist: Dist,
    /// Comma-separated subset of quick, poly1, poly2.
    #[arg(long, value_delimiter = ',', default_value = "quick,poly1,poly2")]
    methods: Vec<String>,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl WorkloadArgs {
    fn workload(&self) -> Result<Workload, PcpError> {
        Ok(Workload {
            lambdas: self.lambda.clone(),
            gamma: self.gamma,
            seeds: self.seeds,
            dim: self.dim,
            distribution: self.dist.into(),
            methods: self.methods.iter().map(|m| m.parse::<Method>()).collect::<Result<_, _>>()?,
        })
    }
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    workload: WorkloadArgs,
    /// start:end[:stride]
    #[arg(long, default_value = "1:200:5")]
    degree_range: String,
}

#[derive(Args)]
struct CostArgs {
    #[command(flatten)]
    workload: WorkloadArgs,
    /// Mean relative error to reach.
    #[arg(long, default_value_t = 1e-10)]
    target: f64,
    /// Largest degree tried before a row is flagged unreachable.
    #[arg(long, default_value_t = 4000)]
    n_max: usize,
}

#[derive(Args)]
struct SelectArgs {
    #[arg(long)]
    lambda: f64,
    #[arg(long)]
    gamma: f64,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    dim: usize,
    #[arg(long)]
    lambda: f64,
    #[arg(long, default_value_t = 0.1)]
    gamma: f64,
    #[arg(long, value_enum, default_value = "uniform")]
    dist: Dist,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Destination for G.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "mm")]
    format: Format,
    /// Eigenvalue CSV destination; defaults to <out>.eigenvalues.csv.
    #[arg(long)]
    eigenvalues: Option<PathBuf>,
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>, PcpError> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn load_operator(path: &Path, kind: MatrixKind) -> Result<Arc<dyn LinearOperator>, PcpError> {
    let m = read_matrix_market(path)?;
    Ok(match kind {
        MatrixKind::G => {
            let scale = m.triplets().map(|(_, _, v)| v.abs()).fold(0.0, f64::max);
            let asym = m.max_asymmetry();
            if asym > 1e-12 * scale.max(f64::MIN_POSITIVE) {
                return Err(PcpError::InvalidConfig(format!(
                    "G must be square and symmetric (largest asymmetry {asym:e}); pass --matrix-kind a for a data matrix"
                )));
            }
            Arc::new(SparseOperator::new(m)?)
        }
        MatrixKind::A => Arc::new(GramOperator::<CsrMatrix>::new(m)),
    })
}

fn write_vec(path: &Path, v: &[f64], format: Format) -> Result<(), PcpError> {
    match format {
        Format::Csv => write_vector(path, v),
        Format::Mm => {
            let mut out = BufWriter::new(File::create(path)?);
            writeln!(out, "%%MatrixMarket matrix array real general")?;
            writeln!(out, "{} 1", v.len())?;
            for x in v {
                writeln!(out, "{x:.16e}")?;
            }
            out.flush()?;
            Ok(())
        }
    }
}

fn cmd_project(a: &ProjectArgs) -> Result<(), PcpError> {
    let op = load_operator(&a.matrix, a.matrix_kind)?;
    let chi = read_vector(&a.chi)?;
    if chi.len() != op.dim() {
        return Err(PcpError::DimensionMismatch {
            expected: op.dim(),
            found: chi.len(),
        });
    }
    pcp_core::model::ThresholdSpec::new(a.lambda, a.gamma)?;
    if !(a.eps > 0.0 && a.eps < 0.5) {
        return Err(PcpError::InvalidEps(a.eps));
    }
    let normalized = match a.sigma1_sq {
        Some(s) => OperatorHandle::with_known_norm(op, s).map(|h| (h, s)),
        None => power_normalize(op, a.power_tol),
    };
    let (handle, sigma_sq) = match normalized {
        Ok(h) => h,
        Err(PcpError::ZeroOperator) => {
            // every eigenvalue is 0 < lambda
            write_vec(&a.out, &vec![0.0; chi.len()], a.format)?;
            println!("operator=zero");
            println!("sigma1_sq={:.16e}", 0.0);
            return Ok(());
        }
        Err(e) => return Err(e),
    };
    let r = project(&handle, &chi, a.lambda, a.gamma, a.eps)?;
    write_vec(&a.out, &r.zeta, a.format)?;
    println!("filter={}", r.filter_kind());
    println!("degree={}", r.degree);
    println!("alpha={:.16e}", r.alpha);
    println!("kappa={:.16e}", r.kappa);
    println!("gamma_eff={:.16e}", r.gamma_eff);
    println!("matvecs={}", r.matvecs);
    println!("cg_iterations={}", r.cg_iterations);
    println!("ridge_solves={}", r.ridge_solves);
    match r.eps_prime {
        Some(e) => println!("eps_prime={e:.16e}"),
        None => println!("eps_prime=none"),
    }
    println!("sigma1_sq={sigma_sq:.16e}");
    println!("reflected={}", r.filter.is_reflected());
    Ok(())
}

fn cmd_sweep(a: &SweepArgs) -> Result<(), PcpError> {
    let cfg = SweepConfig {
        workload: a.workload.workload()?,
        degrees: a.degree_range.parse::<DegreeRange>()?,
    };
    let rows = sweep_degree(&cfg)?;
    write_sweep_csv(sink(&a.workload.out)?, &cfg, &rows)
}

fn cmd_cost(a: &CostArgs) -> Result<(), PcpError> {
    let cfg = CostConfig {
        workload: a.workload.workload()?,
        target: a.target,
        n_max: a.n_max,
    };
    let rows = bench_cost(&cfg)?;
    write_cost_csv(sink(&a.workload.out)?, &cfg, &rows)
}

fn cmd_select(a: &SelectArgs) -> Result<(), PcpError> {
    for (k, v) in select_table(a.lambda, a.gamma)? {
        println!("{k}={v}");
    }
    Ok(())
}

fn cmd_gen(a: &GenArgs) -> Result<(), PcpError> {
    let m = gen_matrix(&SyntheticSpec {
        dim: a.dim,
        lambda: a.lambda,
        gamma: a.gamma,
        distribution: a.dist.into(),
        seed: a.seed,
    })?;
    let g = m.gram.matrix();
    match a.format {
        Format::Mm => {
            let triplets: Vec<(usize, usize, f64)> = (0..g.ncols())
                .flat_map(|j| (0..g.nrows()).map(move |i| (i, j)))
                .filter(|&(i, j)| g[(i, j)] != 0.0)
                .map(|(i, j)| (i, j, g[(i, j)]))
                .collect();
            write_matrix_market(&a.out, &CsrMatrix::from_triplets(g.nrows(), g.ncols(), &triplets))?;
        }
        Format::Csv => {
            let mut out = BufWriter::new(File::create(&a.out)?);
            for i in 0..g.nrows() {
                let row: Vec<String> = g.row(i).iter().map(|x| format!("{x:.16e}")).collect();
                writeln!(out, "{}", row.join(","))?;
            }
            out.flush()?;
        }
    }
    let ev_path = a.eigenvalues.clone().unwrap_or_else(|| {
        let mut p = a.out.clone().into_os_string();
        p.push(".eigenvalues.csv");
        PathBuf::from(p)
    });
    write_eigenvalues_csv(&ev_path, &m.decomposition)?;
    println!("dim={}", a.dim);
    println!("zeroed={}", m.zeroed);
    println!("eigenvalues={}", ev_path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Project(a) => cmd_project(a),
        Command::SweepDegree(a) => cmd_sweep(a),
        Command::BenchCost(a) => cmd_cost(a),
        Command::Select(a) => cmd_select(a),
        Command::GenMatrix(a) => cmd_gen(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pcp: {e}");
            ExitCode::from(if e.is_input_error() { 2 } else { 3 })
        }
    }
}
