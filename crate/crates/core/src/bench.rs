//! Timing harness for the hash families.
//!
//! Each trial fills fresh tables from `seed + trial`, draws an array of
//! random 32-bit keys from a separate stream of the same generator, and hashes
//! the whole array `passes` times while XOR-folding the results into a
//! checksum. The time per hash of a trial is wall time over `keys * passes`;
//! the report gives the mean and sample standard deviation across trials.
//!
//! The family `identity` is a zero-lookup baseline (`h(x) = x`) that measures
//! loop overhead. Every other name is a [`HashFamily`] id.

use std::fmt::Write as _;
use std::hint::black_box;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rand::Rng;

use crate::derivation::{DerivationSpec, Key};
use crate::error::{Error, Result};
use crate::family::HashFamily;
use crate::gf2::BinaryField;
use crate::tabulation::{fill_tables_random, table_rng, Hasher, LookupProbe, LookupTables};

pub const BASELINE: &str = "identity";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BenchConfig {
    pub trials: usize,
    pub keys_per_trial: usize,
    pub passes: usize,
    pub families: Vec<String>,
    pub seed: u64,
    pub machine_label: String,
    /// Count evaluations and table reads during the timed loops.
    pub instrument: bool,
    /// Time families concurrently, one thread each.
    pub parallel: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            trials: 30,
            keys_per_trial: 1_000_000,
            passes: 10,
            families: [
                "identity", "id", "curve2_2", "curve2_4", "tz2_4", "tz2_6", "tz4_16", "tz5",
            ]
            .map(String::from)
            .to_vec(),
            seed: 0,
            machine_label: "local".into(),
            instrument: false,
            parallel: false,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 || self.keys_per_trial == 0 || self.passes == 0 {
            return Err(Error::InvalidParameter(
                "trials, keys and passes must be at least 1".into(),
            ));
        }
        if self.families.is_empty() {
            return Err(Error::InvalidParameter("no families configured".into()));
        }
        for name in &self.families {
            resolve(name)?;
        }
        Ok(())
    }
}

fn parse_bool(line: usize, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::parse(
            line,
            format!("expected a boolean, found {v:?}"),
        )),
    }
}

impl FromStr for BenchConfig {
    type Err = Error;

    /// `key = value` lines; `#` starts a comment. Keys: `trials`, `keys`,
    /// `passes`, `families` (comma separated), `seed`, `machine`,
    /// `instrument`, `parallel`. Missing keys keep their defaults.
    fn from_str(text: &str) -> Result<Self> {
        let mut cfg = BenchConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| Error::parse(line_no, "expected `key = value`"))?;
            let count = || -> Result<usize> {
                value
                    .replace('_', "")
                    .parse()
                    .map_err(|_| Error::parse(line_no, format!("bad count {value:?}")))
            };
            match key {
                "trials" => cfg.trials = count()?,
                "keys" | "keys_per_trial" => cfg.keys_per_trial = count()?,
                "passes" => cfg.passes = count()?,
                "seed" | "rng_seed" => {
                    cfg.seed = value
                        .parse()
                        .map_err(|_| Error::parse(line_no, format!("bad seed {value:?}")))?
                }
                "families" => {
                    cfg.families = value
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(String::from)
                        .collect()
                }
                "machine" | "machine_label" => cfg.machine_label = value.to_string(),
                "instrument" => cfg.instrument = parse_bool(line_no, value)?,
                "parallel" => cfg.parallel = parse_bool(line_no, value)?,
                other => return Err(Error::parse(line_no, format!("unknown key {other:?}"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FamilyReport {
    pub family: String,
    pub guaranteed_k: usize,
    /// Table reads per key, the family's `d`.
    pub lookups: usize,
    pub table_bytes: usize,
    /// Nanoseconds per hash, one entry per trial.
    pub trial_ns: Vec<f64>,
    pub mean_ns: f64,
    pub sd_ns: f64,
    /// XOR of all hash values of each trial.
    pub checksums: Vec<u32>,
    /// Hash evaluations counted in the timed loops (instrumented runs only).
    pub evaluations: Option<u64>,
    /// Table reads counted in the timed loops (instrumented runs only).
    pub table_reads: Option<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchReport {
    pub machine_label: String,
    pub rows: Vec<FamilyReport>,
}

pub const CSV_HEADER: &str = "family,guaranteed_k,mean_ns,sd_ns,lookups,table_bytes,machine_label";

impl BenchReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{:.3},{:.3},{},{},{}",
                r.family,
                r.guaranteed_k,
                r.mean_ns,
                r.sd_ns,
                r.lookups,
                r.table_bytes,
                self.machine_label
            );
        }
        out
    }

    /// Rows grouped by guaranteed independence, fastest first within a group.
    pub fn to_markdown(&self) -> String {
        let mut rows: Vec<&FamilyReport> = self.rows.iter().collect();
        rows.sort_by(|a, b| {
            a.guaranteed_k
                .cmp(&b.guaranteed_k)
                .then(a.mean_ns.total_cmp(&b.mean_ns))
        });
        let mut out = format!(
            "| k | family | lookups | ns/hash ({}) |\n|---|---|---|---|\n",
            self.machine_label
        );
        let mut last_k = None;
        for r in rows {
            let k = if last_k == Some(r.guaranteed_k) {
                String::new()
            } else {
                r.guaranteed_k.to_string()
            };
            last_k = Some(r.guaranteed_k);
            let _ = writeln!(
                out,
                "| {k} | {} | {} | {:.2} ± {:.2} |",
                r.family, r.lookups, r.mean_ns, r.sd_ns
            );
        }
        out
    }

    pub fn row(&self, family: &str) -> Option<&FamilyReport> {
        self.rows.iter().find(|r| r.family == family)
    }
}

/// XOR of the hashes of all keys.
pub fn checksum_hash_stream<'a>(
    h: &Hasher,
    keys: impl IntoIterator<Item = &'a Key>,
) -> Result<u32> {
    keys.into_iter()
        .try_fold(0u32, |acc, k| Ok(acc ^ h.hash(k)?))
}

enum Resolved {
    Baseline,
    Family(HashFamily),
}

fn resolve(name: &str) -> Result<Resolved> {
    if name == BASELINE {
        Ok(Resolved::Baseline)
    } else {
        Ok(Resolved::Family(name.parse()?))
    }
}

trait Instrument: LookupProbe {
    fn on_eval(&mut self);
}

impl Instrument for () {
    #[inline(always)]
    fn on_eval(&mut self) {}
}

#[derive(Default)]
struct Counts {
    evaluations: u64,
    reads: u64,
}

impl LookupProbe for Counts {
    #[inline]
    fn on_lookup(&mut self, _table: usize) {
        self.reads += 1;
    }
}

impl Instrument for Counts {
    #[inline]
    fn on_eval(&mut self) {
        self.evaluations += 1;
    }
}

/// A family specialised for 32-bit keys.
enum Evaluator {
    Baseline,
    /// Simple tabulation on two 16-bit characters.
    Simple2 {
        t: [Vec<u32>; 2],
    },
    /// `T_i[a + i b]` on two 16-bit characters.
    Curve2 {
        t: Vec<Vec<u32>>,
    },
    /// Linear map multiplied through the field's log/antilog tables.
    /// `log_g[i][j]` is the logarithm of `G[i][j]`, or `None` for zero.
    TzLog {
        bits: u32,
        field: Arc<BinaryField>,
        log_g: Vec<Vec<Option<u32>>>,
        t: Vec<Vec<u32>>,
    },
    /// Linear map over GF(2^8): the products of one input character with all
    /// columns are packed eight per word, so the derived characters come out
    /// of a single XOR per word.
    TzPacked {
        q: usize,
        words: usize,
        packed: Vec<Vec<u64>>,
        t: Vec<Vec<u32>>,
    },
    Tz5 {
        t: [Vec<u32>; 3],
    },
    Generic {
        family: HashFamily,
        hasher: Hasher,
    },
}

const MAX_PACKED_WORDS: usize = 8;
const MAX_LOG_COLUMNS: usize = 64;

impl Evaluator {
    fn new(resolved: &Resolved, tables: LookupTables) -> Result<Self> {
        let family = match resolved {
            Resolved::Baseline => return Ok(Evaluator::Baseline),
            Resolved::Family(f) => f,
        };
        let hasher = Hasher::new(family.spec().clone(), tables, family.universe_bound())?;
        let t = hasher.tables().tables().to_vec();
        let pair = |t: Vec<Vec<u32>>| -> [Vec<u32>; 2] { t.try_into().expect("two tables") };
        Ok(match (family.spec(), family.char_bits()) {
            (DerivationSpec::Identity { q: 2 }, 16) => Evaluator::Simple2 { t: pair(t) },
            (DerivationSpec::Curve { q: 2, .. }, 16) => Evaluator::Curve2 { t },
            (DerivationSpec::Tz5, 16) => Evaluator::Tz5 {
                t: t.try_into().expect("three tables"),
            },
            (DerivationSpec::TzLinear { field, matrix }, 8)
                if matrix[0].len().div_ceil(8) <= MAX_PACKED_WORDS && 8 * matrix.len() == 32 =>
            {
                Evaluator::TzPacked {
                    q: matrix.len(),
                    words: matrix[0].len().div_ceil(8),
                    packed: packed_products(field, matrix),
                    t,
                }
            }
            (DerivationSpec::TzLinear { field, matrix }, bits)
                if bits * matrix.len() as u32 == 32 && matrix[0].len() <= MAX_LOG_COLUMNS =>
            {
                Evaluator::TzLog {
                    bits,
                    field: field.clone(),
                    log_g: matrix
                        .iter()
                        .map(|row| row.iter().map(|&g| field.log(g)).collect())
                        .collect(),
                    t,
                }
            }
            _ => Evaluator::Generic {
                family: family.clone(),
                hasher,
            },
        })
    }

    #[inline(always)]
    fn eval<P: Instrument>(&self, x: u32, p: &mut P) -> u32 {
        p.on_eval();
        match self {
            Evaluator::Baseline => x,
            Evaluator::Simple2 { t } => {
                p.on_lookup(0);
                p.on_lookup(1);
                t[0][(x & 0xffff) as usize] ^ t[1][(x >> 16) as usize]
            }
            Evaluator::Curve2 { t } => {
                let (a, b) = ((x & 0xffff) as usize, (x >> 16) as usize);
                let mut h = 0;
                for (i, table) in t.iter().enumerate() {
                    p.on_lookup(i);
                    h ^= table[a + i * b];
                }
                h
            }
            Evaluator::Tz5 { t } => {
                let (a, b) = ((x & 0xffff) as usize, (x >> 16) as usize);
                p.on_lookup(0);
                p.on_lookup(1);
                p.on_lookup(2);
                t[0][a] ^ t[1][b] ^ t[2][a + b]
            }
            Evaluator::TzLog {
                bits,
                field,
                log_g,
                t,
            } => {
                let mask = (1u32 << bits) - 1;
                let mut z = [0u32; MAX_LOG_COLUMNS];
                for (i, row) in log_g.iter().enumerate() {
                    let Some(lx) = field.log((x >> (i as u32 * bits)) & mask) else {
                        continue;
                    };
                    for (zj, lg) in z.iter_mut().zip(row) {
                        if let Some(lg) = lg {
                            *zj ^= field.exp(lx + lg);
                        }
                    }
                }
                let mut h = 0;
                for (j, table) in t.iter().enumerate() {
                    p.on_lookup(j);
                    h ^= table[z[j] as usize];
                }
                h
            }
            Evaluator::TzPacked {
                q,
                words,
                packed,
                t,
            } => {
                let mut z = [0u64; MAX_PACKED_WORDS];
                for (i, row) in packed.iter().enumerate().take(*q) {
                    let base = ((x >> (8 * i)) & 0xff) as usize * words;
                    for w in 0..*words {
                        z[w] ^= row[base + w];
                    }
                }
                let mut h = 0;
                for (j, table) in t.iter().enumerate() {
                    p.on_lookup(j);
                    h ^= table[((z[j / 8] >> (8 * (j % 8))) & 0xff) as usize];
                }
                h
            }
            Evaluator::Generic { family, hasher } => hasher
                .hash_probed(&family.split_u32(x), p)
                .expect("tables were validated for the whole universe"),
        }
    }

    fn run<P: Instrument>(&self, keys: &[u32], passes: usize, p: &mut P) -> u32 {
        let mut acc = 0u32;
        for _ in 0..passes {
            for &x in keys {
                acc ^= self.eval(x, p);
            }
        }
        acc
    }
}

/// `packed[i][x * words + w]` holds byte `x * G[i][j]` at position `j % 8` of
/// word `j / 8`.
fn packed_products(field: &BinaryField, matrix: &[Vec<u32>]) -> Vec<Vec<u64>> {
    let words = matrix[0].len().div_ceil(8);
    matrix
        .iter()
        .map(|row| {
            let mut out = vec![0u64; field.order() as usize * words];
            for x in 0..field.order() {
                for (j, &g) in row.iter().enumerate() {
                    out[x as usize * words + j / 8] |= (field.mul(x, g) as u64) << (8 * (j % 8));
                }
            }
            out
        })
        .collect()
}

fn mean_and_sd(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Random 32-bit keys for one trial, from a stream no table uses.
pub fn trial_keys(seed: u64, trial: usize, n: usize) -> Vec<u32> {
    let mut rng = table_rng(seed.wrapping_add(trial as u64), u64::MAX);
    (0..n).map(|_| rng.gen()).collect()
}

fn bench_family(cfg: &BenchConfig, name: &str) -> Result<FamilyReport> {
    let resolved = resolve(name)?;
    let (guaranteed_k, lookups, sizes) = match &resolved {
        Resolved::Baseline => (0, 0, vec![]),
        Resolved::Family(f) => (f.guaranteed_k(), f.lookups(), f.table_sizes()?),
    };
    let mut trial_ns = Vec::with_capacity(cfg.trials);
    let mut checksums = Vec::with_capacity(cfg.trials);
    let mut counts = Counts::default();
    let mut table_bytes = 0;
    for trial in 0..cfg.trials {
        let tables = fill_tables_random(cfg.seed.wrapping_add(trial as u64), &sizes, 32)?;
        table_bytes = tables.byte_size();
        let eval = Evaluator::new(&resolved, tables)?;
        let keys = trial_keys(cfg.seed, trial, cfg.keys_per_trial);
        let start = Instant::now();
        let checksum = if cfg.instrument {
            eval.run(black_box(&keys), cfg.passes, &mut counts)
        } else {
            eval.run(black_box(&keys), cfg.passes, &mut ())
        };
        let elapsed = start.elapsed();
        checksums.push(black_box(checksum));
        trial_ns.push(elapsed.as_nanos() as f64 / (cfg.keys_per_trial * cfg.passes) as f64);
    }
    let (mean_ns, sd_ns) = mean_and_sd(&trial_ns);
    Ok(FamilyReport {
        family: name.to_string(),
        guaranteed_k,
        lookups,
        table_bytes,
        trial_ns,
        mean_ns,
        sd_ns,
        checksums,
        evaluations: cfg.instrument.then_some(counts.evaluations),
        table_reads: cfg.instrument.then_some(counts.reads),
    })
}

/// Runs the timing protocol for every configured family, in order.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<BenchReport> {
    cfg.validate()?;
    let rows = if cfg.parallel {
        std::thread::scope(|s| {
            let handles: Vec<_> = cfg
                .families
                .iter()
                .map(|name| s.spawn(move || bench_family(cfg, name)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("benchmark thread panicked"))
                .collect::<Result<Vec<_>>>()
        })?
    } else {
        cfg.families
            .iter()
            .map(|name| bench_family(cfg, name))
            .collect::<Result<Vec<_>>>()?
    };
    Ok(BenchReport {
        machine_label: cfg.machine_label.clone(),
        rows,
    })
}
