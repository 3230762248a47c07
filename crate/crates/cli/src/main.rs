//! Command-line surface: solvers, constructions, verification suites, and
//! table emission. Output is deterministic for fixed flags, seed, and cache
//! contents; worker count never changes emitted bytes.

mod records;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use aplab_core::cache::SolverCache;
use aplab_core::construct::{
    block_random_construct, exhaustive_offset_expectation, monte_carlo_expected_saps,
    product_construct, threeapfree_seed, BlockParams, ProductVariant,
};
use aplab_core::exact::{
    find_n_for_value, fsk_windowed_max, rk_exact, verify_table_inequalities,
    window_stability_report, SearchBudget,
};
use aplab_core::freiman::{plunnecke_check, FreimanMap};
use aplab_core::structure::{verify_bsg, ExtractionThreshold};
use aplab_core::{Error, IntSet};

use records::{
    BlockRecord, BsgRecord, CountRecord, Emitter, ExpectationRecord, FindNRecord, Format,
    FreimanRecord, FskRecord, MonteCarloRecord, PlunneckeRecord, ProductRecord, RkRecord,
    SeedRecord, StabilityRecord, TableCheckRecord, TableViolationRecord,
};

#[derive(Parser)]
#[command(
    name = "aplab",
    about = "Progression-free set laboratory: exact solvers, constructions, and structure checks",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    run: RunFlags,
}

#[derive(Args)]
struct RunFlags {
    /// Seed for every randomized operation.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Node budget for exact searches; 0 means unlimited.
    #[arg(long, global = true)]
    budget: Option<u64>,

    /// Solver cache file (line-delimited records), created if missing.
    #[arg(long, global = true, env = "APLAB_CACHE")]
    cache: Option<PathBuf>,

    /// Write records here instead of standard output.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Record rendering.
    #[arg(long, global = true, value_enum, default_value_t = Format::Lines)]
    format: Format,

    /// Worker threads for sampling commands; never affects output bytes.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Largest k-AP-free subset of {1..n}, exactly.
    Rk {
        #[arg(long)]
        k: u32,
        #[arg(long)]
        n: u32,
        /// Re-derive the lexicographically smallest witness.
        #[arg(long)]
        canonical: bool,
    },
    /// Smallest n whose k-AP-free maximum reaches the given value.
    FindN {
        #[arg(long)]
        k: u32,
        #[arg(long)]
        value: u32,
    },
    /// Maximum s-AP count over k-AP-free n-subsets of a window.
    Fsk {
        #[arg(long)]
        k: u32,
        #[arg(long)]
        s: u32,
        /// Set size; required unless --stability is given.
        #[arg(long)]
        n: Option<u32>,
        /// Window ceiling (default 4n).
        #[arg(long)]
        window: Option<u32>,
        /// Emit the window-stability table for n up to --n-max instead.
        #[arg(long)]
        stability: bool,
        #[arg(long)]
        n_max: Option<u32>,
    },
    /// Build progression-free sets.
    Construct {
        #[command(subcommand)]
        what: ConstructCmd,
    },
    /// Count s-term progressions in an explicit set.
    Count {
        #[arg(long)]
        set: Option<String>,
        #[arg(long)]
        set_file: Option<PathBuf>,
        #[arg(long)]
        s: usize,
        /// Fail (exit 1) unless the count equals this value.
        #[arg(long)]
        assert_count: Option<u64>,
        /// Fail (exit 1) if the set contains a progression of this length.
        #[arg(long)]
        assert_free: Option<usize>,
    },
    /// Sample the block construction and compare against its expectation bound.
    Montecarlo {
        #[arg(long)]
        seed_set: Option<String>,
        #[arg(long)]
        seed_file: Option<PathBuf>,
        #[arg(long)]
        window: u64,
        #[arg(long)]
        s: u32,
        #[arg(long)]
        k: u32,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        /// Enumerate all offset vectors instead of sampling.
        #[arg(long)]
        exhaustive: bool,
    },
    /// Extract a difference-controlled subset and check its clauses.
    Bsg {
        #[arg(long)]
        set: Option<String>,
        #[arg(long)]
        set_file: Option<PathBuf>,
        #[arg(long, default_value_t = 2000)]
        constant_c: u64,
        #[arg(long, default_value_t = 20)]
        retries: u32,
        #[arg(long, value_enum, default_value_t = ModeArg::AnyPositive)]
        mode: ModeArg,
    },
    /// Check a bijection for preservation of r-fold sum equalities.
    Freiman {
        /// Source set.
        #[arg(long)]
        source: String,
        /// Image values paired with source elements in ascending order.
        #[arg(long)]
        image: Option<String>,
        /// Use the map x -> a*x + b, given as "a,b".
        #[arg(long)]
        affine: Option<String>,
        #[arg(long, default_value_t = 2)]
        order: u32,
        /// Fail (exit 1) when the map is not an isomorphism.
        #[arg(long)]
        assert_iso: bool,
    },
    /// Sumset growth inequality report.
    Plunnecke {
        #[arg(long)]
        s_set: String,
        #[arg(long)]
        t_set: String,
        #[arg(long, default_value_t = 1)]
        r: u32,
        #[arg(long, default_value_t = 1)]
        r_prime: u32,
    },
    /// Re-check every inequality family on the certified cache entries.
    VerifyTables,
}

#[derive(Subcommand)]
enum ConstructCmd {
    /// Largest 3-AP-free subset of {1..bound} found by the seed sweep.
    Seed {
        #[arg(long)]
        bound: u64,
    },
    /// Combine two progression-free sets into one of multiplied size.
    Product {
        #[arg(long)]
        u: String,
        #[arg(long)]
        m: u64,
        #[arg(long)]
        v: String,
        #[arg(long)]
        n: u64,
        #[arg(long, value_enum, default_value_t = VariantArg::Corrected)]
        variant: VariantArg,
    },
    /// Place s translated copies of a seed set into spaced windows.
    Block {
        #[arg(long)]
        seed_set: Option<String>,
        #[arg(long)]
        seed_file: Option<PathBuf>,
        #[arg(long)]
        window: u64,
        #[arg(long)]
        s: u32,
        #[arg(long)]
        k: u32,
        /// Explicit offsets (comma-separated); sampled from --seed if absent.
        #[arg(long)]
        offsets: Option<String>,
        /// Trial index used when sampling offsets.
        #[arg(long, default_value_t = 0)]
        trial: u64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum VariantArg {
    Literal,
    Corrected,
}

impl From<VariantArg> for ProductVariant {
    fn from(v: VariantArg) -> ProductVariant {
        match v {
            VariantArg::Literal => ProductVariant::Literal,
            VariantArg::Corrected => ProductVariant::Corrected,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    RootDensity,
    AnyPositive,
}

impl From<ModeArg> for ExtractionThreshold {
    fn from(m: ModeArg) -> ExtractionThreshold {
        match m {
            ModeArg::RootDensity => ExtractionThreshold::RootDensity,
            ModeArg::AnyPositive => ExtractionThreshold::AnyPositive,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut emitter = Emitter::new(cli.run.format);
    match run(cli.command, &cli.run, &mut emitter) {
        Ok(code) => {
            if let Err(e) = write_output(emitter, &cli.run.output) {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
            ExitCode::from(code)
        }
        Err(e) => {
            // Emit whatever was produced before the failure, then report.
            let _ = write_output(emitter, &cli.run.output);
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

/// 2 for malformed requests, 3 for exhausted budgets, 1 for everything that
/// failed while computing.
fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Contract(_) | Error::Parse(_) | Error::Io(_) => 2,
        Error::BudgetExhausted(_) | Error::ExtractionFailed { .. } => 3,
        Error::Unsound(_) => 1,
    }
}

fn write_output(emitter: Emitter, output: &Option<PathBuf>) -> std::io::Result<()> {
    let bytes = emitter.into_bytes();
    match output {
        Some(path) => std::fs::write(path, bytes),
        None => std::io::stdout().write_all(&bytes),
    }
}

fn parse_int(field: &str, text: &str) -> Result<i64, Error> {
    text.trim()
        .parse::<i64>()
        .map_err(|_| Error::Parse(format!("{field}: {text:?} is not an integer")))
}

fn parse_list(field: &str, text: &str) -> Result<Vec<i64>, Error> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split(',').map(|t| parse_int(field, t)).collect()
}

/// Reads a set from --<flag> (comma-separated) or --<flag>-file (one integer
/// per line); exactly one must be present.
fn load_set(
    flag: &str,
    inline: &Option<String>,
    file: &Option<PathBuf>,
) -> Result<IntSet, Error> {
    match (inline, file) {
        (Some(text), None) => Ok(IntSet::new(parse_list(flag, text)?)),
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)?;
            let elems = text
                .lines()
                .filter(|l| !l.trim().is_empty())
                .map(|l| parse_int(flag, l))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(IntSet::new(elems))
        }
        _ => Err(Error::contract(format!(
            "provide exactly one of --{flag} or --{flag}-file"
        ))),
    }
}

fn budget_from(flag: &Option<u64>) -> SearchBudget {
    match flag {
        None => SearchBudget::default(),
        Some(0) => SearchBudget::unlimited(),
        Some(n) => SearchBudget::nodes(*n),
    }
}

fn load_cache(path: &Option<PathBuf>) -> Result<SolverCache, Error> {
    match path {
        Some(p) => SolverCache::load_or_default(p),
        None => Ok(SolverCache::default()),
    }
}

fn save_cache(cache: &SolverCache, path: &Option<PathBuf>) -> Result<(), Error> {
    if let Some(p) = path {
        cache.save(p)?;
    }
    Ok(())
}

fn run(command: Command, flags: &RunFlags, out: &mut Emitter) -> Result<u8, Error> {
    match command {
        Command::Rk { k, n, canonical } => {
            let mut cache = load_cache(&flags.cache)?;
            let mut budget = budget_from(&flags.budget);
            let entry = rk_exact(k, n, &mut cache, &mut budget, canonical)?;
            save_cache(&cache, &flags.cache)?;
            let certified = entry.certified;
            out.record(&RkRecord {
                kind: "rk",
                k: entry.k,
                n: entry.n,
                value: entry.value,
                certified,
                witness: entry.witness.as_slice().to_vec(),
            });
            Ok(if certified { 0 } else { 3 })
        }
        Command::FindN { k, value } => {
            let mut cache = load_cache(&flags.cache)?;
            let mut budget = budget_from(&flags.budget);
            let n = find_n_for_value(k, value, &mut cache, &mut budget)?;
            save_cache(&cache, &flags.cache)?;
            out.record(&FindNRecord {
                kind: "find-n",
                k,
                value,
                n,
            });
            Ok(0)
        }
        Command::Fsk {
            k,
            s,
            n,
            window,
            stability,
            n_max,
        } => {
            let mut cache = load_cache(&flags.cache)?;
            let mut budget = budget_from(&flags.budget);
            let code = if stability {
                let n_max = n_max.ok_or_else(|| {
                    Error::contract("--stability needs --n-max")
                })?;
                let rows = window_stability_report(k, s, n_max, &mut cache, &mut budget)?;
                let all_certified = rows.iter().all(|r| r.certified);
                for row in rows {
                    out.record(&StabilityRecord {
                        kind: "fsk-window",
                        row,
                    });
                }
                if all_certified {
                    0
                } else {
                    3
                }
            } else {
                let n = n.ok_or_else(|| Error::contract("--n is required"))?;
                let entry = fsk_windowed_max(n, k, s, window, &mut cache, &mut budget)?;
                let certified = entry.certified;
                out.record(&FskRecord {
                    kind: "fsk",
                    k: entry.k,
                    s: entry.s,
                    n: entry.n,
                    window: entry.window,
                    value: entry.value,
                    certified,
                    witness: entry.witness.as_slice().to_vec(),
                });
                if certified {
                    0
                } else {
                    3
                }
            };
            save_cache(&cache, &flags.cache)?;
            Ok(code)
        }
        Command::Construct { what } => run_construct(what, flags, out),
        Command::Count {
            set,
            set_file,
            s,
            assert_count,
            assert_free,
        } => {
            let a = load_set("set", &set, &set_file)?;
            if s < 3 {
                return Err(Error::contract("need s >= 3"));
            }
            let value = a.count_s_aps(s);
            out.record(&CountRecord {
                kind: "count",
                s,
                size: a.len(),
                value,
            });
            if let Some(expect) = assert_count {
                if value != expect {
                    return Err(Error::Unsound(format!(
                        "count is {value}, asserted {expect}"
                    )));
                }
            }
            if let Some(k) = assert_free {
                if let Some(p) = a.ap_witness(k) {
                    return Err(Error::Unsound(format!(
                        "set contains a {k}-AP starting at {} with difference {}",
                        p.start(),
                        p.diff()
                    )));
                }
            }
            Ok(0)
        }
        Command::Montecarlo {
            seed_set,
            seed_file,
            window,
            s,
            k,
            trials,
            exhaustive,
        } => {
            let seed = load_set("seed-set", &seed_set, &seed_file)?;
            if exhaustive {
                let report = exhaustive_offset_expectation(&seed, window, s, k)?;
                let ok = report.meets_bound;
                out.record(&ExpectationRecord {
                    kind: "expectation",
                    report,
                });
                Ok(if ok { 0 } else { 1 })
            } else {
                let report = monte_carlo_expected_saps(
                    &seed,
                    window,
                    s,
                    k,
                    trials,
                    flags.seed,
                    flags.threads,
                )?;
                out.record(&MonteCarloRecord {
                    kind: "montecarlo",
                    report,
                });
                Ok(0)
            }
        }
        Command::Bsg {
            set,
            set_file,
            constant_c,
            retries,
            mode,
        } => {
            let a = load_set("set", &set, &set_file)?;
            let report = verify_bsg(&a, constant_c, flags.seed, retries, mode.into())?;
            let holds = report.holds;
            out.record(&BsgRecord {
                kind: "bsg",
                report,
            });
            Ok(if holds { 0 } else { 1 })
        }
        Command::Freiman {
            source,
            image,
            affine,
            order,
            assert_iso,
        } => {
            let src = IntSet::new(parse_list("source", &source)?);
            let map = match (image, affine) {
                (Some(img), None) => {
                    FreimanMap::new(src, parse_list("image", &img)?)?
                }
                (None, Some(ab)) => {
                    let ab = parse_list("affine", &ab)?;
                    if ab.len() != 2 {
                        return Err(Error::contract("--affine takes \"a,b\""));
                    }
                    FreimanMap::affine(src, ab[0], ab[1])?
                }
                _ => {
                    return Err(Error::contract(
                        "provide exactly one of --image or --affine",
                    ))
                }
            };
            let report = map.is_freiman_isomorphism(order);
            let iso = report.is_isomorphism;
            out.record(&FreimanRecord {
                kind: "freiman",
                source_size: map.source().len(),
                report,
            });
            if assert_iso && !iso {
                return Err(Error::Unsound("map is not an isomorphism".into()));
            }
            Ok(0)
        }
        Command::Plunnecke {
            s_set,
            t_set,
            r,
            r_prime,
        } => {
            let s = IntSet::new(parse_list("s-set", &s_set)?);
            let t = IntSet::new(parse_list("t-set", &t_set)?);
            let report = plunnecke_check(&s, &t, r, r_prime)?;
            let holds = report.holds;
            out.record(&PlunneckeRecord {
                kind: "plunnecke",
                report,
            });
            Ok(if holds { 0 } else { 1 })
        }
        Command::VerifyTables => {
            if flags.cache.is_none() {
                return Err(Error::contract("verify-tables needs --cache"));
            }
            let cache = load_cache(&flags.cache)?;
            let report = verify_table_inequalities(&cache);
            let clean = report.is_clean();
            for check in &report.checks {
                out.record(&TableCheckRecord {
                    kind: "table-check",
                    check: check.clone(),
                });
            }
            for violation in &report.violations {
                out.record(&TableViolationRecord {
                    kind: "table-violation",
                    violation: violation.clone(),
                });
            }
            Ok(if clean { 0 } else { 1 })
        }
    }
}

fn run_construct(cmd: ConstructCmd, flags: &RunFlags, out: &mut Emitter) -> Result<u8, Error> {
    match cmd {
        ConstructCmd::Seed { bound } => {
            if bound < 1 {
                return Err(Error::contract("need bound >= 1"));
            }
            let set = threeapfree_seed(bound);
            out.record(&SeedRecord {
                kind: "seed",
                bound,
                size: set.len(),
                set: set.as_slice().to_vec(),
            });
            Ok(0)
        }
        ConstructCmd::Product {
            u,
            m,
            v,
            n,
            variant,
        } => {
            let u = IntSet::new(parse_list("u", &u)?);
            let v = IntSet::new(parse_list("v", &v)?);
            let w = product_construct(&u, m, &v, n, variant.into())?;
            out.record(&ProductRecord {
                kind: "product",
                variant: format!("{variant:?}").to_lowercase(),
                m,
                n,
                u_size: u.len(),
                v_size: v.len(),
                size: w.len(),
                set: w.as_slice().to_vec(),
            });
            Ok(0)
        }
        ConstructCmd::Block {
            seed_set,
            seed_file,
            window,
            s,
            k,
            offsets,
            trial,
        } => {
            let seed = load_set("seed-set", &seed_set, &seed_file)?;
            let offsets = match offsets {
                Some(text) => parse_list("offsets", &text)?
                    .into_iter()
                    .map(|d| {
                        u64::try_from(d).map_err(|_| {
                            Error::contract(format!("offset {d} must be positive"))
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()?,
                None => BlockParams::sample_offsets(window, s, flags.seed, trial),
            };
            let params = BlockParams::new(seed, window, s, k, offsets)?;
            let a = block_random_construct(&params);
            if !a.is_ap_free(k as usize) {
                return Err(Error::Unsound(format!(
                    "construction produced a {k}-term progression"
                )));
            }
            out.record(&BlockRecord {
                kind: "block",
                window,
                s,
                k,
                offsets: params.offsets().to_vec(),
                size: a.len(),
                sap_count: a.count_s_aps(s as usize),
                set: a.as_slice().to_vec(),
            });
            Ok(0)
        }
    }
}
