//! The `tabhash` command line.
//!
//! Exit codes: 0 success, 1 a witness was found (`search`) or the input is
//! not bad (`verify`), 2 usage error or unknown family, 3 search budget
//! exceeded, 4 malformed input or I/O failure.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::arrangements::{construct_bad_arrangement, first_good_column, Arrangement};
use crate::bench::{run_benchmark, BenchConfig};
use crate::derivation::Key;
use crate::error::{Error, Result};
use crate::family::HashFamily;
use crate::independence::{
    columns_all_even, incidence_matrix, is_independent_set, is_peelable, k_max_bounded,
    ExhaustionCache, SearchOptions,
};
use crate::tabulation::{fill_tables_kwise, fill_tables_random, Hasher, LookupTables};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FOUND: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;
pub const EXIT_INPUT: i32 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "tabhash",
    version,
    about = "Tabulation hashing with derived characters"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Hash keys read one per line (space-separated characters).
    Hash {
        #[arg(long)]
        family: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Key file, or `-` for standard input.
        #[arg(long)]
        keys: String,
        /// Output bits per hash value.
        #[arg(long, default_value_t = 32)]
        ell: u32,
        /// Fill tables with k-wise independent polynomials instead of random words.
        #[arg(long)]
        kwise: Option<usize>,
        /// Read tables from a TBH1 file instead of generating them.
        #[arg(long, conflicts_with_all = ["kwise"])]
        tables: Option<PathBuf>,
        /// Write the tables used to a TBH1 file.
        #[arg(long)]
        save_tables: Option<PathBuf>,
    },
    /// Rank test for a key set: prints rank, used cells and any dependent subset.
    Analyze {
        #[arg(long)]
        family: String,
        #[arg(long)]
        keys: String,
    },
    /// Exhaustive search for k keys of [n]^q whose incidence rows XOR to zero.
    Search {
        #[arg(long)]
        family: String,
        #[arg(short = 'n')]
        n: u64,
        #[arg(short = 'k')]
        k: usize,
        #[command(flatten)]
        search: SearchArgs,
        /// Memoize verdicts in this file.
        #[arg(long)]
        cache: Option<PathBuf>,
        /// Write a witness here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a bad (2, d, 2^d)-arrangement.
    Construct {
        #[arg(short = 'd')]
        d: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check that an arrangement is bad on all of its columns.
    Verify {
        /// Arrangement file, or `-` for standard input.
        file: String,
        /// Check the incidence matrix of this family instead of curve columns.
        #[arg(long)]
        family: Option<String>,
    },
    /// Largest k (up to a limit) for which no bad k-set exists in [n]^q.
    Kmax {
        #[arg(long)]
        family: String,
        #[arg(short = 'n')]
        n: u64,
        #[arg(long)]
        limit: usize,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Run the timing protocol from a key=value config file.
    Bench {
        #[arg(long)]
        config: PathBuf,
        /// Also print a markdown table grouped by guaranteed k.
        #[arg(long)]
        markdown: bool,
        /// Write the CSV here instead of standard output.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(clap::Args, Debug)]
pub struct SearchArgs {
    /// Largest number of candidate subsets C(n^q, k) to accept.
    #[arg(long, default_value_t = 10_000_000_000)]
    budget: u128,
    /// Search odd sizes too instead of skipping them by parity.
    #[arg(long)]
    no_parity_shortcut: bool,
    #[arg(long)]
    serial: bool,
}

impl SearchArgs {
    fn options(&self) -> SearchOptions {
        SearchOptions {
            budget: self.budget,
            parity_shortcut: !self.no_parity_shortcut,
            parallel: !self.serial,
        }
    }
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::UnknownFamily(_) | Error::InvalidParameter(_) | Error::UnsupportedFieldWidth(_) => {
            EXIT_USAGE
        }
        Error::BudgetExceeded { .. } => EXIT_BUDGET,
        _ => EXIT_INPUT,
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(rendered.as_bytes())
            } else {
                out.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    match execute(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn family(id: &str) -> Result<HashFamily> {
    id.parse()
}

fn read_input(source: &str) -> Result<String> {
    let mut text = String::new();
    if source == "-" {
        io::stdin().read_to_string(&mut text)?;
    } else {
        text = fs::read_to_string(source)?;
    }
    Ok(text)
}

/// One key per line, `q` decimal characters separated by whitespace; blank
/// lines and `#` comments are skipped.
pub fn parse_keys(text: &str, q: usize) -> Result<Vec<Key>> {
    let mut keys = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let chars = line
            .split_whitespace()
            .map(|t| {
                t.parse::<i64>()
                    .map_err(|_| Error::parse(i + 1, format!("bad character {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if chars.len() != q {
            return Err(Error::parse(
                i + 1,
                format!("expected {q} characters, found {}", chars.len()),
            ));
        }
        keys.push(Key(chars));
    }
    Ok(keys)
}

fn check_range(family: &HashFamily, keys: &[Key]) -> Result<()> {
    let bound = family.universe_bound();
    for &c in keys.iter().flat_map(|k| k.chars()) {
        if c < 0 || c as u64 >= bound {
            return Err(Error::CharacterOutOfRange { value: c, bound });
        }
    }
    Ok(())
}

fn write_to(path: Option<&Path>, out: &mut dyn Write, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Hash {
            family: id,
            seed,
            keys,
            ell,
            kwise,
            tables,
            save_tables,
        } => {
            let fam = family(&id)?;
            let keys = parse_keys(&read_input(&keys)?, fam.spec().q())?;
            check_range(&fam, &keys)?;
            let sizes = fam.table_sizes()?;
            let tables = match (tables, kwise) {
                (Some(path), _) => LookupTables::read_from(BufReader::new(File::open(path)?))?,
                (None, Some(k)) => fill_tables_kwise(seed, &sizes, ell, k)?,
                (None, None) => fill_tables_random(seed, &sizes, ell)?,
            };
            if let Some(path) = save_tables {
                let mut w = BufWriter::new(File::create(path)?);
                tables.write_to(&mut w)?;
                w.flush()?;
            }
            let hasher = Hasher::new(fam.spec().clone(), tables, fam.universe_bound())?;
            for key in &keys {
                writeln!(out, "{}", hasher.hash(key)?)?;
            }
            Ok(EXIT_OK)
        }
        Command::Analyze { family: id, keys } => {
            let fam = family(&id)?;
            let keys = parse_keys(&read_input(&keys)?, fam.spec().q())?;
            let verdict = is_independent_set(fam.spec(), &keys)?;
            writeln!(out, "keys: {}", keys.len())?;
            writeln!(out, "rank: {}", verdict.rank)?;
            writeln!(out, "used cells: {}", verdict.used_cells)?;
            writeln!(out, "peelable: {}", is_peelable(fam.spec(), &keys)?)?;
            match &verdict.witness {
                None => writeln!(out, "independent")?,
                Some(w) => {
                    writeln!(out, "dependent; rows XOR to zero for {} keys:", w.len())?;
                    for key in w {
                        writeln!(out, "{}", join_chars(key))?;
                    }
                }
            }
            Ok(EXIT_OK)
        }
        Command::Search {
            family: id,
            n,
            k,
            search,
            cache,
            out: path,
        } => {
            let fam = family(&id)?;
            let opts = search.options();
            let found = match cache {
                Some(p) => {
                    ExhaustionCache::open(p)?.find_bad_arrangement(fam.spec(), n, k, &opts)?
                }
                None => crate::independence::find_bad_arrangement(fam.spec(), n, k, &opts)?,
            };
            match found {
                None => {
                    writeln!(out, "no bad arrangement")?;
                    Ok(EXIT_OK)
                }
                Some(keys) => {
                    let arr = Arrangement::new(fam.spec().q(), fam.spec().d(), keys)?;
                    writeln!(err, "bad arrangement of {k} keys found")?;
                    write_to(path.as_deref(), out, &arr.to_string())?;
                    Ok(EXIT_FOUND)
                }
            }
        }
        Command::Construct { d, out: path } => {
            let arr = construct_bad_arrangement(d)?;
            write_to(path.as_deref(), out, &arr.to_string())?;
            Ok(EXIT_OK)
        }
        Command::Verify { file, family: id } => {
            let arr: Arrangement = read_input(&file)?.parse()?;
            let columns = |d: usize| {
                if d == 0 {
                    "no columns".to_string()
                } else {
                    format!("columns 0..{}", d - 1)
                }
            };
            match id {
                None => match first_good_column(&arr) {
                    None => {
                        writeln!(out, "BAD on {}", columns(arr.d()))?;
                        Ok(EXIT_OK)
                    }
                    Some(c) => {
                        writeln!(
                            out,
                            "not bad: column {c} has a value hit an odd number of times"
                        )?;
                        Ok(EXIT_FOUND)
                    }
                },
                Some(id) => {
                    let fam = family(&id)?;
                    let m = incidence_matrix(fam.spec(), arr.keys())?;
                    if columns_all_even(&m) {
                        writeln!(
                            out,
                            "BAD under {id}: all {} incidence rows XOR to zero",
                            arr.len()
                        )?;
                        Ok(EXIT_OK)
                    } else {
                        writeln!(out, "not bad under {id}: some derived character is used an odd number of times")?;
                        Ok(EXIT_FOUND)
                    }
                }
            }
        }
        Command::Kmax {
            family: id,
            n,
            limit,
            search,
        } => {
            let fam = family(&id)?;
            let bound = k_max_bounded(fam.spec(), n, limit, &search.options())?;
            let q = fam.spec().q();
            match &bound.witness {
                Some(w) => {
                    writeln!(out, "k_max = {} over [{n}]^{q}", bound.k_max)?;
                    writeln!(
                        out,
                        "every set of at most {} keys is independent in [{n}]^{q}; the dependent set below \
                         refutes {}-wise independence on every larger universe too",
                        bound.k_max,
                        w.len()
                    )?;
                    for key in w {
                        writeln!(out, "{}", join_chars(key))?;
                    }
                }
                None => {
                    writeln!(out, "k_max >= {limit} over [{n}]^{q}")?;
                    writeln!(
                        out,
                        "lower bound for this bounded universe only; larger universes may hold smaller dependent sets"
                    )?;
                }
            }
            Ok(EXIT_OK)
        }
        Command::Bench {
            config,
            markdown,
            csv,
        } => {
            let cfg: BenchConfig = fs::read_to_string(config)?.parse()?;
            let report = run_benchmark(&cfg)?;
            write_to(csv.as_deref(), out, &report.to_csv())?;
            if markdown {
                writeln!(out)?;
                out.write_all(report.to_markdown().as_bytes())?;
            }
            Ok(EXIT_OK)
        }
    }
}

fn join_chars(key: &Key) -> String {
    key.chars()
        .iter()
        .map(i64::to_string)
        .collect::<Vec<_>>()
        .join(" ")
}
