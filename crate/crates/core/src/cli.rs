//! Command-line surface for both schemes.
//!
//! Exit codes are a stable contract:
//!
//! ```text
//! 0 success          1 usage/config/other      2 infeasible threshold
//! 3 mixed key ids    4 undecodable pool        5 malformed fragment
//! 6 invalid verdict under --strict
//! ```
//!
//! Every file write goes through a temp file plus rename, so an
//! interrupted run never leaves a half-written fragment or commitment
//! file. Secret outputs (keys, reveals, private exponents) are created
//! with mode 0600.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::commitment::{
    self, format as cformat, receipt, CommitmentError, SelectionSet,
};
use crate::config::{Config, ConfigError};
use crate::overhead::Overhead;
use crate::threshold::{
    combine_fragments, format as tformat, max_threshold, plan_threshold, simulate_decodability,
    simulate_overhead, CombineOutcome, Fragment, KeyId, PlanOptions, ThresholdError,
};

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Threshold(#[from] ThresholdError),
    #[error("undecodable: {symbols} pooled symbols reached rank {rank} of {k}")]
    Undecodable { symbols: usize, rank: usize, k: u32 },
    #[error(transparent)]
    Commitment(#[from] CommitmentError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0} invalid verdict(s) under --strict")]
    InvalidVerdicts(u64),
    #[error("receipt does not match the file")]
    ReceiptMismatch,
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Threshold(ThresholdError::InfeasibleThreshold { .. }) => 2,
            CliError::Threshold(ThresholdError::MixedKeyId { .. }) => 3,
            CliError::Undecodable { .. } => 4,
            CliError::Threshold(ThresholdError::MalformedFragment(_))
            | CliError::Threshold(ThresholdError::DuplicateMember(_)) => 5,
            CliError::InvalidVerdicts(_) | CliError::ReceiptMismatch => 6,
            _ => 1,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "raptor-threshold",
    version,
    about = "Threshold presence checks from fountain-code fragments and factoring-based subset commitments"
)]
struct Cli {
    /// Base RNG seed; fixing it makes every output byte-for-byte reproducible
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Config file (TOML); overrides the RAPTOR_THRESHOLD_CONFIG env var
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by the fountain-side commands, overriding the config.
#[derive(Args, Debug)]
struct CodingOpts {
    /// Bytes per encoded symbol
    #[arg(long, value_name = "BYTES")]
    symbol_size: Option<u32>,
    /// Overhead any s members must reach, e.g. 1.1
    #[arg(long, value_name = "RATIO")]
    overhead_hi: Option<Overhead>,
    /// Overhead any s-1 members must stay under, e.g. 0.99
    #[arg(long, value_name = "RATIO")]
    overhead_lo: Option<Overhead>,
    /// Robust soliton constant c
    #[arg(long, value_name = "C")]
    c: Option<f64>,
    /// Robust soliton failure bound delta
    #[arg(long, value_name = "DELTA")]
    delta: Option<f64>,
}

impl CodingOpts {
    fn plan_options(&self, config: &Config) -> PlanOptions {
        let mut opts = config.plan_options();
        if let Some(hi) = &self.overhead_hi {
            opts.overhead_hi = hi.clone();
        }
        if let Some(lo) = &self.overhead_lo {
            opts.overhead_lo = lo.clone();
        }
        if let Some(c) = self.c {
            opts.c = c;
        }
        if let Some(delta) = self.delta {
            opts.delta = delta;
        }
        opts
    }

    fn symbol_size(&self, config: &Config) -> u32 {
        self.symbol_size.unwrap_or(config.symbol_size)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Compute fragment sizing for an s-of-n group
    Plan {
        /// Group size
        #[arg(short, long)]
        n: u32,
        /// Members that must be present to decode
        #[arg(short, long)]
        s: u16,
        /// Key length in bytes
        #[arg(long)]
        key_bytes: usize,
        #[command(flatten)]
        coding: CodingOpts,
    },
    /// Split a key into one fragment file per member
    Split {
        #[arg(short, long)]
        n: u32,
        #[arg(short, long)]
        s: u16,
        /// Length of the key to generate
        #[arg(long, conflicts_with = "key_hex")]
        key_bytes: Option<usize>,
        /// Use this key instead of generating one (leaks into shell history)
        #[arg(long, value_name = "HEX")]
        key_hex: Option<String>,
        /// Directory for fragment files
        #[arg(long, value_name = "DIR", default_value = ".")]
        out_dir: PathBuf,
        /// Where to store the generated key (mode 0600)
        #[arg(long, value_name = "PATH")]
        key_out: Option<PathBuf>,
        #[command(flatten)]
        coding: CodingOpts,
    },
    /// Pool fragment files and recover the key
    Combine {
        /// Fragment files to pool
        #[arg(required = true, value_name = "FRAGMENT")]
        fragments: Vec<PathBuf>,
        /// Where to write the recovered key as hex (mode 0600)
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
    /// Monte Carlo decode-probability sweeps, CSV on stdout
    Simulate {
        /// Group size (subset mode)
        #[arg(short, long)]
        n: Option<u32>,
        /// Threshold (subset mode)
        #[arg(short, long)]
        s: Option<u16>,
        #[arg(long)]
        key_bytes: usize,
        /// Subset sizes to sweep, e.g. 8,9,10
        #[arg(long, value_delimiter = ',', conflicts_with = "overheads")]
        subset_sizes: Option<Vec<u32>>,
        /// Overheads to sweep instead, e.g. 1.0,1.05,1.1
        #[arg(long, value_delimiter = ',')]
        overheads: Option<Vec<Overhead>>,
        #[arg(long, default_value_t = 100)]
        trials: u64,
        #[command(flatten)]
        coding: CodingOpts,
    },
    /// Commit to a subset of a universe, writing commitment + reveal files
    Commit {
        /// Universe size U; objects are indices 1..=U
        #[arg(long)]
        universe: u64,
        /// Chosen indices, e.g. 3,7,12,19,23,31,38; omit to choose none
        #[arg(long, value_delimiter = ',')]
        choose: Option<Vec<u64>>,
        /// Prime size per factor in bits
        #[arg(long)]
        prime_bits: Option<u32>,
        #[arg(long, value_name = "PATH")]
        commit_out: PathBuf,
        /// Reveal file with the prime factors (mode 0600)
        #[arg(long, value_name = "PATH")]
        reveal_out: PathBuf,
    },
    /// Check a reveal file against a commitment file
    Verify {
        #[arg(long, value_name = "PATH")]
        commitments: PathBuf,
        #[arg(long, value_name = "PATH")]
        reveals: PathBuf,
        /// Exit 6 if any verdict is invalid
        #[arg(long)]
        strict: bool,
    },
    /// Generate an RSA receipt keypair
    ReceiptKeygen {
        /// Modulus size in bits
        #[arg(long)]
        bits: Option<u32>,
        /// Key file (mode 0600)
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
    /// Sign a file, producing a receipt
    ReceiptSign {
        #[arg(long, value_name = "PATH")]
        key: PathBuf,
        #[arg(long, value_name = "PATH")]
        file: PathBuf,
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
    /// Check a receipt against a file
    ReceiptVerify {
        #[arg(long, value_name = "PATH")]
        receipt: PathBuf,
        #[arg(long, value_name = "PATH")]
        file: PathBuf,
        /// Exit 6 if the receipt does not match
        #[arg(long)]
        strict: bool,
    },
}

/// Entry point for the binary; returns the process exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                // The exit-code contract reserves 1 for usage errors;
                // clap's default would be 2, which means infeasible here.
                _ => 1,
            };
            let _ = err.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = Config::load(cli.config.as_deref())?;
    let seed = cli.seed.or(config.seed);
    match cli.command {
        Command::Plan { n, s, key_bytes, coding } => {
            cmd_plan(n, s, key_bytes, &coding, &config)
        }
        Command::Split { n, s, key_bytes, key_hex, out_dir, key_out, coding } => cmd_split(
            n,
            s,
            key_bytes,
            key_hex.as_deref(),
            &out_dir,
            key_out.as_deref(),
            &coding,
            &config,
            seed,
        ),
        Command::Combine { fragments, out } => cmd_combine(&fragments, &out),
        Command::Simulate { n, s, key_bytes, subset_sizes, overheads, trials, coding } => {
            cmd_simulate(n, s, key_bytes, subset_sizes, overheads, trials, &coding, &config, seed)
        }
        Command::Commit { universe, choose, prime_bits, commit_out, reveal_out } => cmd_commit(
            universe,
            &choose.unwrap_or_default(),
            prime_bits.unwrap_or(config.prime_bits),
            &commit_out,
            &reveal_out,
            seed,
        ),
        Command::Verify { commitments, reveals, strict } => {
            cmd_verify(&commitments, &reveals, strict)
        }
        Command::ReceiptKeygen { bits, out } => {
            cmd_receipt_keygen(bits.unwrap_or(config.receipt_bits), &out, seed)
        }
        Command::ReceiptSign { key, file, out } => cmd_receipt_sign(&key, &file, &out),
        Command::ReceiptVerify { receipt, file, strict } => {
            cmd_receipt_verify(&receipt, &file, strict)
        }
    }
}

fn rng_from(seed: Option<u64>) -> ChaCha8Rng {
    match seed {
        Some(seed) => ChaCha8Rng::seed_from_u64(seed),
        None => ChaCha8Rng::from_entropy(),
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

/// Writes via a temp file in the target directory plus an atomic rename.
fn write_atomic(path: &Path, bytes: &[u8], secret: bool) -> Result<(), CliError> {
    let io_err = |source| CliError::Io { path: path.to_path_buf(), source };
    let dir = match path.parent() {
        Some(parent) if !parent.as_os_str().is_empty() => parent,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::Builder::new()
        .prefix(".rt-tmp-")
        .tempfile_in(dir)
        .map_err(io_err)?;
    tmp.write_all(bytes).map_err(io_err)?;
    // Temp files start life 0600; loosen shareable outputs explicitly.
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        let mode = if secret { 0o600 } else { 0o644 };
        tmp.as_file()
            .set_permissions(std::fs::Permissions::from_mode(mode))
            .map_err(io_err)?;
    }
    #[cfg(not(unix))]
    let _ = secret;
    tmp.persist(path)
        .map_err(|e| io_err(e.error))?;
    Ok(())
}

fn cmd_plan(
    n: u32,
    s: u16,
    key_bytes: usize,
    coding: &CodingOpts,
    config: &Config,
) -> Result<(), CliError> {
    let opts = coding.plan_options(config);
    let symbol_size = coding.symbol_size(config);
    let max_s = max_threshold(&opts.overhead_hi, &opts.overhead_lo)?;
    let plan = plan_threshold(n, s, key_bytes, symbol_size, &opts)?;

    let k = u64::from(plan.k());
    let f = u64::from(plan.f());
    println!("plan for {}-of-{} over a {} byte key:", plan.s(), plan.n(), key_bytes);
    println!("  k            = {k} input symbols of {} byte(s)", plan.symbol_size());
    println!("  f            = {f} symbols per fragment");
    println!("  total        = {} symbols across {} fragments", f * u64::from(plan.n()), plan.n());
    println!(
        "  any {:>3}: {} symbols >= needed {}",
        plan.s(),
        u64::from(plan.s()) * f,
        opts.overhead_hi.ceil_mul(k)
    );
    println!(
        "  any {:>3}: {} symbols <= blocked {}",
        plan.s() - 1,
        u64::from(plan.s() - 1) * f,
        opts.overhead_lo.floor_mul(k).min(k - 1)
    );
    println!(
        "  max threshold for overheads ({}, {}) = {max_s}",
        opts.overhead_hi, opts.overhead_lo
    );
    Ok(())
}

fn fragment_path(out_dir: &Path, member_id: u32, n: u32) -> PathBuf {
    let width = (n.max(1) - 1).to_string().len();
    out_dir.join(format!("fragment_{member_id:0width$}.rcf"))
}

#[allow(clippy::too_many_arguments)]
fn cmd_split(
    n: u32,
    s: u16,
    key_bytes: Option<usize>,
    key_hex: Option<&str>,
    out_dir: &Path,
    key_out: Option<&Path>,
    coding: &CodingOpts,
    config: &Config,
    seed: Option<u64>,
) -> Result<(), CliError> {
    let mut rng = rng_from(seed);
    let key = match (key_hex, key_bytes) {
        (Some(hex_text), _) => {
            eprintln!(
                "warning: --key-hex exposes the key to shell history and process listings"
            );
            hex::decode(hex_text)
                .map_err(|e| CliError::Usage(format!("--key-hex is not valid hex: {e}")))?
        }
        (None, Some(len)) => {
            let mut key = vec![0u8; len];
            rng.fill_bytes(&mut key);
            key
        }
        (None, None) => {
            return Err(CliError::Usage(
                "either --key-bytes or --key-hex is required".into(),
            ))
        }
    };

    let opts = coding.plan_options(config);
    let plan = plan_threshold(n, s, key.len(), coding.symbol_size(config), &opts)?;
    let key_id = KeyId::from_rng(&mut rng);
    let fragments = crate::threshold::split_key(&key, &plan, key_id)?;

    std::fs::create_dir_all(out_dir)
        .map_err(|source| CliError::Io { path: out_dir.to_path_buf(), source })?;
    for fragment in &fragments {
        let path = fragment_path(out_dir, fragment.member_id, n);
        write_atomic(&path, &tformat::encode_fragment(fragment), false)?;
    }
    if let Some(path) = key_out {
        write_atomic(path, format!("{}\n", hex::encode(&key)).as_bytes(), true)?;
    }

    println!("key id {key_id}");
    println!(
        "wrote {} fragments of {} symbols each to {}",
        n,
        plan.f(),
        out_dir.display()
    );
    match key_out {
        Some(path) => println!("key written to {}", path.display()),
        None if key_hex.is_none() => {
            println!("key (hex, not stored anywhere else): {}", hex::encode(&key))
        }
        None => {}
    }
    Ok(())
}

fn cmd_combine(paths: &[PathBuf], out: &Path) -> Result<(), CliError> {
    let fragments: Vec<Fragment> = paths
        .iter()
        .map(|path| {
            let bytes = read_file(path)?;
            tformat::decode_fragment(&bytes).map_err(|e| match e {
                ThresholdError::MalformedFragment(reason) => {
                    ThresholdError::MalformedFragment(format!("{}: {reason}", path.display()))
                        .into()
                }
                other => CliError::Threshold(other),
            })
        })
        .collect::<Result<_, CliError>>()?;

    match combine_fragments(&fragments)? {
        CombineOutcome::Decoded { key, report } => {
            write_atomic(out, format!("{}\n", hex::encode(&key)).as_bytes(), true)?;
            println!(
                "decoded {} byte key from {} fragments ({} symbols, elimination {})",
                key.len(),
                fragments.len(),
                report.symbols_used,
                if report.elimination_used { "used" } else { "not needed" }
            );
            println!("key written to {}", out.display());
            Ok(())
        }
        CombineOutcome::Undecodable { report } => Err(CliError::Undecodable {
            symbols: report.symbols_used,
            rank: report.rank,
            k: fragments[0].k,
        }),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    n: Option<u32>,
    s: Option<u16>,
    key_bytes: usize,
    subset_sizes: Option<Vec<u32>>,
    overheads: Option<Vec<Overhead>>,
    trials: u64,
    coding: &CodingOpts,
    config: &Config,
    seed: Option<u64>,
) -> Result<(), CliError> {
    let opts = coding.plan_options(config);
    let symbol_size = coding.symbol_size(config);
    let base_seed = seed.unwrap_or_else(rand::random);
    let mut csv = String::new();

    match (subset_sizes, overheads) {
        (Some(sizes), None) => {
            let (n, s) = match (n, s) {
                (Some(n), Some(s)) => (n, s),
                _ => {
                    return Err(CliError::Usage(
                        "--subset-sizes needs -n and -s to build the plan".into(),
                    ))
                }
            };
            let plan = plan_threshold(n, s, key_bytes, symbol_size, &opts)?;
            csv.push_str("subset_size,success_ratio\n");
            for size in sizes {
                let report = simulate_decodability(&plan, size, trials, base_seed)?;
                writeln!(csv, "{size},{:.4}", report.ratio()).expect("string write");
            }
        }
        (None, Some(list)) => {
            csv.push_str("overhead,success_ratio\n");
            for overhead in list {
                let report = simulate_overhead(
                    key_bytes,
                    symbol_size,
                    opts.c,
                    opts.delta,
                    &overhead,
                    trials,
                    base_seed,
                )?;
                writeln!(csv, "{overhead},{:.4}", report.ratio()).expect("string write");
            }
        }
        _ => {
            return Err(CliError::Usage(
                "exactly one of --subset-sizes or --overheads is required".into(),
            ))
        }
    }
    print!("{csv}");
    Ok(())
}

fn cmd_commit(
    universe: u64,
    choose: &[u64],
    prime_bits: u32,
    commit_out: &Path,
    reveal_out: &Path,
    seed: Option<u64>,
) -> Result<(), CliError> {
    let sel = SelectionSet::new(universe, choose.iter().copied())?;
    let base_seed = seed.unwrap_or_else(rand::random);
    let (commitments, reveals) = commitment::commit_selection(&sel, prime_bits, base_seed)?;
    write_atomic(
        commit_out,
        cformat::encode_commitments(universe, &commitments).as_bytes(),
        false,
    )?;
    write_atomic(
        reveal_out,
        cformat::encode_reveals(universe, &reveals).as_bytes(),
        true,
    )?;
    println!(
        "committed to {} of {} indices with {}-bit primes",
        sel.chosen().len(),
        universe,
        prime_bits
    );
    println!("commitments written to {}", commit_out.display());
    println!("reveal keys written to {}", reveal_out.display());
    Ok(())
}

fn cmd_verify(commitments: &Path, reveals: &Path, strict: bool) -> Result<(), CliError> {
    let (cu, committed) = cformat::decode_commitments(&read_text(commitments)?)?;
    let (ru, revealed) = cformat::decode_reveals(&read_text(reveals)?)?;
    if cu != ru {
        return Err(CommitmentError::Malformed(format!(
            "universe mismatch: commitments say {cu}, reveals say {ru}"
        ))
        .into());
    }
    let summary = commitment::verify_selection(&committed, &revealed)?;
    for (index, verdict) in &summary.verdicts {
        println!("{index} {verdict}");
    }
    println!(
        "selected={} not_selected={} invalid={}",
        summary.selected, summary.not_selected, summary.invalid
    );
    if strict && summary.invalid > 0 {
        return Err(CliError::InvalidVerdicts(summary.invalid));
    }
    Ok(())
}

fn cmd_receipt_keygen(bits: u32, out: &Path, seed: Option<u64>) -> Result<(), CliError> {
    let mut rng = rng_from(seed);
    let keypair = receipt::receipt_keygen(bits, &mut rng)?;
    write_atomic(out, cformat::encode_keypair(&keypair).as_bytes(), true)?;
    println!("{bits}-bit receipt keypair written to {}", out.display());
    Ok(())
}

fn cmd_receipt_sign(key: &Path, file: &Path, out: &Path) -> Result<(), CliError> {
    let keypair = cformat::decode_keypair(&read_text(key)?)?;
    let bytes = read_file(file)?;
    let signature = receipt::receipt_sign(&bytes, &keypair);
    write_atomic(
        out,
        cformat::encode_receipt(&keypair.n, &keypair.e, &signature).as_bytes(),
        false,
    )?;
    println!("receipt for {} written to {}", file.display(), out.display());
    Ok(())
}

fn cmd_receipt_verify(receipt_path: &Path, file: &Path, strict: bool) -> Result<(), CliError> {
    let (n, e, signature) = cformat::decode_receipt(&read_text(receipt_path)?)?;
    let bytes = read_file(file)?;
    if receipt::receipt_verify(&bytes, &signature, &n, &e) {
        println!("receipt ok for {}", file.display());
        Ok(())
    } else {
        println!("receipt INVALID for {}", file.display());
        if strict {
            Err(CliError::ReceiptMismatch)
        } else {
            Ok(())
        }
    }
}
