use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;

use config::CommonArgs;

#[derive(Parser, Debug)]
#[command(name = "fab", version, about = "Bootstrappable RNS-CKKS tools and accelerator cost model")]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a secret key and evaluation keys in FAB1 files.
    Keygen {
        /// Rotation amounts to generate Galois keys for.
        #[arg(long, value_delimiter = ',')]
        rotations: Vec<isize>,
    },
    /// Time Add, Mult, Rescale and Rotate next to the modeled times.
    BenchOps {
        #[arg(long, default_value_t = 3)]
        reps: usize,
    },
    /// Run bootstrapping and report precision, wall time and the model.
    Bootstrap {
        /// Only print the cost model.
        #[arg(long)]
        model_only: bool,
        /// Precision threshold in bits for the pass/fail line.
        #[arg(long, default_value_t = 12.0)]
        min_bits: f64,
    },
    /// Sweep dnum and fftIter through the cost model and write CSV.
    Explore {
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
        dnums: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
        fft_iters: Vec<usize>,
        /// Total modulus budget log(PQ); defaults to the configured one.
        #[arg(long)]
        log_pq: Option<u32>,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train logistic regression on encrypted data.
    LrTrain {
        /// CSV dataset: label (±1) first, then the features.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Use this many synthetic 3-vs-8 digits when no dataset is given.
        #[arg(long, default_value_t = 2000)]
        synthetic: usize,
        /// Held-out samples taken from the end of the dataset.
        #[arg(long)]
        holdout: Option<usize>,
        #[arg(long)]
        minibatch: Option<usize>,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
        /// Only train the cleartext shadow.
        #[arg(long)]
        shadow_only: bool,
    },
    /// Encrypt values and write the ciphertext as a FAB1 file.
    Serialize {
        #[arg(long)]
        out: PathBuf,
        /// Slot values; a ramp when absent.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        values: Vec<f64>,
        /// Limbs to encrypt at; full level when absent.
        #[arg(long)]
        limbs: Option<usize>,
    },
    /// Read a FAB1 file, check it re-encodes identically and describe it.
    Deserialize {
        path: PathBuf,
        /// Decrypt ciphertexts with the secret key derived from the seed.
        #[arg(long)]
        decrypt: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = cli.common.resolve().and_then(|cfg| match cli.cmd {
        Command::Keygen { rotations } => commands::keygen(&cfg, &rotations),
        Command::BenchOps { reps } => commands::bench_ops(&cfg, reps),
        Command::Bootstrap { model_only, min_bits } => commands::bootstrap(&cfg, model_only, min_bits),
        Command::Explore {
            dnums,
            fft_iters,
            log_pq,
            out,
        } => commands::explore(&cfg, &dnums, &fft_iters, log_pq, out.as_deref()),
        Command::LrTrain {
            data,
            synthetic,
            holdout,
            minibatch,
            iterations,
            learning_rate,
            shadow_only,
        } => {
            let mut cfg = cfg;
            if let Some(m) = minibatch {
                cfg.lr.minibatch = m;
            }
            if let Some(i) = iterations {
                cfg.lr.iterations = i;
            }
            if let Some(r) = learning_rate {
                cfg.lr.learning_rate = r;
            }
            commands::lr_train(&cfg, data.as_deref(), synthetic, holdout, shadow_only)
        }
        Command::Serialize { out, values, limbs } => commands::serialize(&cfg, &out, &values, limbs),
        Command::Deserialize { path, decrypt } => commands::deserialize(&cfg, &path, decrypt),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
