use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fhe_circuits::lwe::{keygen, LweParams};
use fhe_circuits::scheduler::{MAX_BATCH_ENV, WORKERS_ENV};
use fhe_circuits::torus::Torus32;
use fhe_circuits::{codec, GateKind, PoolConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use fhe_bench::dataset::{Dataset, ValueKind, GRID_SHAPES};
use fhe_bench::experiments::{self, AddVariant, BenchResult, MatmulAlgorithm, MulAlgorithm};
use fhe_bench::linreg;
use fhe_bench::report::{write_records, Format};
use fhe_bench::{build_engine, BenchError, EngineKind};

#[derive(Parser)]
#[command(name = "fhe-bench", version, about = "Benchmarks for arithmetic over bitwise-encrypted integers")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    #[arg(long, value_enum, default_value = "reference", global = true)]
    engine: EngineKind,
    /// Key file for the oracle-lwe engine
    #[arg(long, global = true)]
    key: Option<PathBuf>,
    /// Worker threads (defaults to the available cores)
    #[arg(long, env = WORKERS_ENV, global = true)]
    workers: Option<usize>,
    /// Largest number of gate jobs per launch
    #[arg(long, env = MAX_BATCH_ENV, global = true)]
    max_batch: Option<usize>,
    #[arg(long, default_value_t = 0, global = true)]
    seed: u64,
    #[arg(long, value_enum, default_value = "csv", global = true)]
    format: Format,
    /// Result file (defaults to stdout)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Report every wall time as 0 so result files are byte-reproducible
    #[arg(long, global = true)]
    no_time: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a secret key and write it with its parameters
    Keygen {
        path: PathBuf,
        #[arg(long, default_value_t = LweParams::default().dimension)]
        dimension: usize,
        /// Noise standard deviation as log2 (alpha = 2^-alpha_log2)
        #[arg(long, default_value_t = 15)]
        alpha_log2: i32,
    },
    /// Coalesced n-bit gate batches
    Gate {
        #[arg(long, value_delimiter = ',', default_value = "4,8,16,32")]
        n: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "AND")]
        kinds: Vec<GateKind>,
    },
    /// Compound gate launches against pairs of single-gate launches
    Compound {
        #[arg(long, value_delimiter = ',', default_value = "1,4,8,16,24,32")]
        n: Vec<usize>,
    },
    /// Integer or vector addition
    Add {
        #[arg(long, value_delimiter = ',', default_value = "16,24,32")]
        n: Vec<usize>,
        #[arg(long, value_enum, default_value = "bitwise")]
        variant: AddVariant,
        /// Vector lengths; 1 runs the scalar adder
        #[arg(long, value_delimiter = ',', default_value = "1")]
        len: Vec<usize>,
    },
    /// Integer or vector multiplication
    Mul {
        #[arg(long, value_delimiter = ',', default_value = "16,24,32")]
        n: Vec<usize>,
        #[arg(long, value_enum, default_value = "naive")]
        algorithm: MulAlgorithm,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        len: Vec<usize>,
    },
    /// Square matrix multiplication
    Matmul {
        #[arg(long, value_delimiter = ',', default_value = "2,4,8")]
        rank: Vec<usize>,
        #[arg(long, default_value_t = 16)]
        n: usize,
        #[arg(long, value_enum, default_value = "cannon")]
        algorithm: MatmulAlgorithm,
    },
    /// Linear regression on an encrypted CSV dataset
    Linreg {
        data: PathBuf,
        #[arg(long, value_enum, default_value = "numerical")]
        kind: ValueKind,
        #[arg(long, default_value_t = 16)]
        n: usize,
        /// Largest AND-gate count gathered into one multiplication
        #[arg(long, default_value_t = fhe_circuits::linalg::DEFAULT_FLAT_JOB_LIMIT)]
        job_limit: usize,
    },
    /// Write one synthetic regression dataset
    GenDataset {
        path: PathBuf,
        #[arg(long, default_value_t = 200)]
        rows: usize,
        #[arg(long, default_value_t = 10)]
        attrs: usize,
        #[arg(long, value_enum, default_value = "numerical")]
        kind: ValueKind,
    },
    /// Write the full synthetic grid (200/300 rows x 10/20 attributes x both kinds)
    GenGrid { dir: PathBuf },
}

#[derive(Serialize)]
struct LinregRecord {
    experiment: &'static str,
    n: usize,
    size: usize,
    engine: String,
    workers: usize,
    seconds: f64,
    single_gates: u64,
    compound_gates: u64,
    bootstraps: u64,
    batch_launches: u64,
    correct: bool,
    attributes: usize,
    kind: &'static str,
    /// Space-separated exact coefficients.
    coefficients: String,
}

fn io_err(path: &Path, e: io::Error) -> BenchError {
    BenchError::Io(format!("{}: {e}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>, BenchError> {
    File::create(path).map(BufWriter::new).map_err(|e| io_err(path, e))
}

fn emit<T: Serialize>(global: &Global, records: &[T]) -> Result<(), BenchError> {
    match &global.out {
        Some(path) => write_records(create(path)?, records, global.format),
        None => write_records(io::stdout().lock(), records, global.format),
    }
}

/// Writes the rows that passed, up to the first failure, then reports it.
fn emit_checked(global: &Global, mut rows: Vec<BenchResult>) -> Result<(), BenchError> {
    if global.no_time {
        rows.iter_mut().for_each(|r| r.seconds = 0.0);
    }
    let failed = rows.iter().position(|r| !r.correct);
    let passed = &rows[..failed.unwrap_or(rows.len())];
    emit(global, passed)?;
    match failed {
        Some(i) => Err(BenchError::Mismatch(format!(
            "{} n={} size={} disagrees with native arithmetic",
            rows[i].experiment, rows[i].n, rows[i].size
        ))),
        None => Ok(()),
    }
}

fn pool_config(global: &Global) -> Result<PoolConfig, BenchError> {
    let defaults = PoolConfig::default();
    Ok(PoolConfig::new(
        global.workers.unwrap_or(defaults.workers),
        global.max_batch.unwrap_or(defaults.max_batch),
    )?)
}

fn run(cli: Cli) -> Result<(), BenchError> {
    let global = &cli.global;
    let mut rng = ChaCha8Rng::seed_from_u64(global.seed);
    let engine = || build_engine(global.engine, global.key.as_deref(), global.seed, pool_config(global)?);
    match &cli.command {
        Command::Keygen {
            path,
            dimension,
            alpha_log2,
        } => {
            let params = LweParams::new(*dimension, 2f64.powi(-alpha_log2), Torus32::from_f64(0.125))?;
            let key = keygen(&params, global.seed);
            let mut w = create(path)?;
            codec::write_key(&mut w, &params, &key)?;
            w.flush().map_err(|e| io_err(path, e))
        }
        Command::Gate { n, kinds } => {
            let e = engine()?;
            emit_checked(global, experiments::gate_bench(e.as_ref(), n, kinds, &mut rng)?)
        }
        Command::Compound { n } => {
            let e = engine()?;
            let rows = experiments::compound_bench(e.as_ref(), n, &mut rng)?;
            for (n, ratio) in experiments::compound_launch_ratios(&rows) {
                eprintln!("compound n={n}: single-pair/compound launch ratio {ratio:.3}");
            }
            emit_checked(global, rows)
        }
        Command::Add { n, variant, len } => {
            let e = engine()?;
            let mut rows = Vec::new();
            for &n in n {
                for &len in len {
                    rows.push(experiments::add_bench(e.as_ref(), n, *variant, len, &mut rng)?);
                }
            }
            emit_checked(global, rows)
        }
        Command::Mul { n, algorithm, len } => {
            let e = engine()?;
            let mut rows = Vec::new();
            for &n in n {
                for &len in len {
                    rows.push(experiments::mul_bench(e.as_ref(), n, *algorithm, len, &mut rng)?);
                }
            }
            emit_checked(global, rows)
        }
        Command::Matmul { rank, n, algorithm } => {
            let e = engine()?;
            let mut rows = Vec::new();
            for &q in rank {
                rows.push(experiments::matmul_bench(e.as_ref(), q, *n, *algorithm, &mut rng)?);
            }
            emit_checked(global, rows)
        }
        Command::Linreg {
            data,
            kind,
            n,
            job_limit,
        } => {
            let file = File::open(data).map_err(|e| io_err(data, e))?;
            let ds = Dataset::read_csv(BufReader::new(file), *kind)?;
            let e = engine()?;
            let outcome = linreg::run(e.as_ref(), &ds, *n, *job_limit)?;
            let record = LinregRecord {
                experiment: "linreg",
                n: *n,
                size: ds.rows(),
                engine: e.name().to_owned(),
                workers: e.pool().workers(),
                seconds: if global.no_time { 0.0 } else { outcome.seconds },
                single_gates: outcome.stats.single_gates,
                compound_gates: outcome.stats.compound_gates,
                bootstraps: outcome.stats.bootstraps,
                batch_launches: outcome.stats.batch_launches,
                correct: outcome.correct,
                attributes: ds.attributes(),
                kind: kind.name(),
                coefficients: outcome
                    .coefficients
                    .iter()
                    .map(linreg::format_coefficient)
                    .collect::<Vec<_>>()
                    .join(" "),
            };
            if !outcome.correct {
                return Err(BenchError::Mismatch(
                    "encrypted aggregates differ from the cleartext X^T X / X^T y".into(),
                ));
            }
            emit(global, &[record])
        }
        Command::GenDataset {
            path,
            rows,
            attrs,
            kind,
        } => Dataset::synthetic(*rows, *attrs, *kind, global.seed)?.write_csv(create(path)?),
        Command::GenGrid { dir } => {
            std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
            for (rows, attrs) in GRID_SHAPES {
                for kind in [ValueKind::Numerical, ValueKind::Binary] {
                    let path = dir.join(format!("{}_{rows}x{attrs}.csv", kind.name()));
                    Dataset::synthetic(rows, attrs, kind, global.seed)?.write_csv(create(&path)?)?;
                }
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
