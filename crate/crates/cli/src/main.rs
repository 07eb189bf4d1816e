//! `symon`: verification suites, special-set dumps, series reports and
//! simulations for symplectic similitude groups over `Z/n`.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or budget error.

mod cmd;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use symon_core::specialsets::DEFAULT_MAX_ELL;
use symon_core::sympgroup::DEFAULT_BUDGET;
use symon_core::{BSelectionStrategy, QParam, SetLevel};

#[derive(Parser, Debug)]
#[command(name = "symon", version, about = "Symplectic similitude groups, special fixed-vector sets and their measures")]
struct Cli {
    /// Worker threads; reports do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Enumeration budget in candidate matrices, ell^((2g)^2).
    #[arg(long, global = true, env = "SYMON_BUDGET", default_value_t = DEFAULT_BUDGET)]
    budget: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check every exact counting identity on a grid of primes.
    VerifyCounts(VerifyArgs),
    /// Build or verify special-set dumps.
    #[command(subcommand)]
    SpecialSet(SpecialSetCmd),
    /// Density and bound series over primes.
    #[command(subcommand)]
    Series(SeriesCmd),
    /// Seeded Monte Carlo experiments.
    #[command(subcommand)]
    Simulate(SimulateCmd),
    /// Group orders of GSp^(q)_{2g}(Z/n).
    Orders(OrdersArgs),
    /// List GSp^(q)_{2g}(F_ell) (or one multiplier coset) in canonical order.
    Enumerate(EnumerateArgs),
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, default_value_t = 2)]
    g: usize,
    #[arg(long, value_delimiter = ',', default_value = "3,5,7")]
    ells: Vec<u64>,
    #[arg(long, value_delimiter = ',', default_value = "2,inf")]
    qs: Vec<QParam>,
    #[arg(long, default_value = "lex")]
    strategy: BSelectionStrategy,
    /// Largest prime to materialize.
    #[arg(long, default_value_t = DEFAULT_MAX_ELL)]
    max_ell: u64,
    /// Perturb one expected value (negative control for the harness).
    #[arg(long, hide = true)]
    inject_fault: bool,
}

#[derive(Subcommand, Debug)]
enum SpecialSetCmd {
    /// Materialize a set and write its dump and JSON sidecar.
    Build(BuildArgs),
    /// Reload a dump and re-check its invariants.
    Verify(VerifyDumpArgs),
}

#[derive(Args, Debug)]
struct BuildArgs {
    #[arg(long, default_value_t = 2)]
    g: usize,
    #[arg(long)]
    ell: u64,
    #[arg(long, default_value = "inf")]
    q: QParam,
    #[arg(long, value_enum, default_value_t = LevelArg::Sq)]
    level: LevelArg,
    /// Multiplier for the s0 and s levels.
    #[arg(long)]
    lambda: Option<u64>,
    #[arg(long, default_value = "lex")]
    strategy: BSelectionStrategy,
    #[arg(long, default_value_t = DEFAULT_MAX_ELL)]
    max_ell: u64,
    /// Dump path; the sidecar goes to `<dump>.json`.
    #[arg(long)]
    dump: PathBuf,
}

#[derive(Args, Debug)]
struct VerifyDumpArgs {
    #[arg(long)]
    dump: PathBuf,
    /// Also rebuild from scratch and compare element lists.
    #[arg(long)]
    rebuild: bool,
    #[arg(long, default_value_t = DEFAULT_MAX_ELL)]
    max_ell: u64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum LevelArg {
    S0,
    S,
    Sq,
}

impl From<LevelArg> for SetLevel {
    fn from(l: LevelArg) -> Self {
        match l {
            LevelArg::S0 => SetLevel::S0,
            LevelArg::S => SetLevel::Full,
            LevelArg::Sq => SetLevel::QUnion,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, ValueEnum)]
enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum SeriesCmd {
    /// Density series sum_ell |S^(q)(ell)| / |GSp^(q)(F_ell)|.
    PartA(PartAArgs),
    /// Bound series sum_ell (ell^{2g}-1)/(ell-1) s_ell^{-e/2g}.
    PartB(PartBArgs),
}

#[derive(Args, Debug)]
struct PartAArgs {
    #[arg(long, default_value_t = 2)]
    g: usize,
    #[arg(long, default_value = "inf")]
    q: QParam,
    #[arg(long, default_value_t = 10_000)]
    ell_max: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args, Debug)]
struct PartBArgs {
    #[arg(long, default_value_t = 2)]
    g: usize,
    #[arg(long, default_value_t = 2)]
    e: u32,
    #[arg(long, default_value_t = 10_000)]
    ell_max: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args, Debug, Clone)]
struct SimCommon {
    #[arg(long, default_value_t = 2)]
    g: usize,
    #[arg(long, default_value = "inf")]
    q: QParam,
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value = "lex")]
    strategy: BSelectionStrategy,
    /// Materialize special sets up to this prime; larger primes use the structural test.
    #[arg(long, default_value_t = 5)]
    lookup_max_ell: u64,
}

#[derive(Subcommand, Debug)]
enum SimulateCmd {
    /// Frequency of sigma_1 landing in the special set(s).
    HitFrequency {
        #[command(flatten)]
        common: SimCommon,
        /// Modulus of the sampled group.
        #[arg(long)]
        n: u64,
        /// Single prime of `n` to test; all primes jointly when omitted.
        #[arg(long)]
        ell: Option<u64>,
        #[arg(long, default_value_t = 1)]
        e: usize,
    },
    /// Marginal and joint hit frequencies for several primes.
    Independence {
        #[command(flatten)]
        common: SimCommon,
        #[arg(long, value_delimiter = ',', default_value = "3,5")]
        ells: Vec<u64>,
    },
    /// Frequency of a common fixed vector mod ell among e-tuples.
    MuX {
        #[command(flatten)]
        common: SimCommon,
        #[arg(long)]
        ell: u64,
        /// Modulus of the sampled group (defaults to ell).
        #[arg(long)]
        n: Option<u64>,
        #[arg(long, default_value_t = 2)]
        e: usize,
    },
    /// Per-stream hit counts over a range of primes.
    BorelCantelli {
        #[command(flatten)]
        common: SimCommon,
        #[arg(long, value_delimiter = ',', default_value = "3,5,7,11,13")]
        ells: Vec<u64>,
        #[arg(long, default_value_t = 1)]
        e: usize,
    },
}

#[derive(Args, Debug)]
struct OrdersArgs {
    #[arg(long, default_value_t = 2)]
    g: usize,
    #[arg(long)]
    n: u64,
    #[arg(long, default_value = "inf")]
    q: QParam,
}

#[derive(Args, Debug)]
struct EnumerateArgs {
    #[arg(long, default_value_t = 1)]
    g: usize,
    #[arg(long)]
    ell: u64,
    #[arg(long, default_value = "inf")]
    q: QParam,
    #[arg(long)]
    lambda: Option<u64>,
    /// Print only the count.
    #[arg(long)]
    count_only: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match cmd::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(cmd::exit_code(&e))
        }
    }
}
