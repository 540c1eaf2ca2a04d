//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_rational::Ratio;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tabhash::arrangements::{construct_bad_arrangement, verify_bad};
use tabhash::bench::{run_benchmark, BenchConfig, CSV_HEADER};
use tabhash::gf2::BitMatrix;
use tabhash::independence::{
    enumerate_universe, exact_joint_distribution_of, find_bad_arrangement, incidence_matrix,
    incidence_matrix_of, is_independent_set, is_peelable_derived, k_max_bounded,
    sample_joint_counts, smallest_bad_subset, SearchOptions,
};
use tabhash::{DerivationSpec, DerivedKey, Key};

type Verdict = Result<String, String>;

/// Witness sizes seen by every exhaustive search in the suite.
#[derive(Default)]
struct Witnesses {
    sizes: Vec<usize>,
    searches: usize,
}

impl Witnesses {
    fn record(&mut self, found: Option<usize>) {
        self.searches += 1;
        self.sizes.extend(found);
    }
}

fn exhaustive() -> SearchOptions {
    SearchOptions {
        parity_shortcut: false,
        ..SearchOptions::default()
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn curve(q: usize, d: usize) -> DerivationSpec {
    DerivationSpec::curve(q, d).unwrap()
}

fn small_curves_have_no_short_dependencies(w: &mut Witnesses) -> Verdict {
    let grids = [(1, 5), (2, 5), (3, 5), (4, 4)];
    let mut searches = 0;
    for (d, n) in grids {
        let spec = curve(2, d);
        for k in 1..=2 * d - 1 {
            let found =
                find_bad_arrangement(&spec, n, k, &exhaustive()).map_err(|e| e.to_string())?;
            w.record(found.as_ref().map(Vec::len));
            searches += 1;
            if let Some(keys) = found {
                return Err(format!(
                    "d = {d}, n = {n}: dependent set of {k} keys {keys:?}"
                ));
            }
        }
    }
    Ok(format!(
        "{searches} exhaustive searches, none found a dependent set"
    ))
}

fn constructed_arrangements_are_bad() -> Verdict {
    for d in 1..=8 {
        let arr = construct_bad_arrangement(d).map_err(|e| e.to_string())?;
        ensure(arr.len() == 1 << d, || {
            format!("d = {d}: {} keys", arr.len())
        })?;
        ensure(verify_bad(&arr), || format!("d = {d}: not bad"))?;
        let max = arr.max_char().unwrap();
        let bound = if d >= 3 {
            (1i64 << (d - 1)) * (d as i64 - 2) + 1
        } else {
            2
        };
        ensure(arr.min_char().unwrap() >= 0 && max <= bound, || {
            format!("d = {d}: characters reach {max}, bound {bound}")
        })?;
        let m = incidence_matrix(&curve(2, d), arr.keys()).map_err(|e| e.to_string())?;
        ensure(m.rank() < arr.len(), || format!("d = {d}: full rank"))?;
    }
    let d8 = construct_bad_arrangement(8).unwrap();
    Ok(format!(
        "d = 1..8 verified; d = 8 has 256 keys, max character {}",
        d8.max_char().unwrap()
    ))
}

fn random_instance(rng: &mut ChaCha8Rng) -> (String, DerivationSpec, Vec<Key>) {
    loop {
        let (label, spec, n): (String, DerivationSpec, i64) = match rng.gen_range(0..4) {
            0 => {
                let d = rng.gen_range(1..=3);
                (format!("curve2_{d}"), curve(2, d), rng.gen_range(2..=4))
            }
            1 => {
                let d = rng.gen_range(2..=4);
                (
                    format!("tz2_{d}_c2"),
                    DerivationSpec::tz_linear(2, 2, d).unwrap(),
                    4,
                )
            }
            2 => ("tz5".into(), DerivationSpec::tz5(), rng.gen_range(2..=4)),
            _ => (
                "id".into(),
                DerivationSpec::identity(2).unwrap(),
                rng.gen_range(2..=3),
            ),
        };
        let k = rng.gen_range(1..=4usize);
        let mut universe: Vec<Key> = (0..n)
            .flat_map(|a| (0..n).map(move |b| Key::from([a, b])))
            .collect();
        if universe.len() < k {
            continue;
        }
        universe.shuffle(rng);
        universe.truncate(k);
        return (label, spec, universe);
    }
}

fn rank_test_matches_exact_distribution() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0003);
    let (mut independent, mut dependent, mut tried) = (0, 0, 0);
    while independent + dependent < 400 {
        tried += 1;
        let (label, spec, keys) = random_instance(&mut rng);
        let derived: Vec<DerivedKey> = keys.iter().map(|k| spec.derive(k).unwrap()).collect();
        let m = incidence_matrix_of(&derived);
        if m.cols() > 20 {
            continue;
        }
        let dist = exact_joint_distribution_of(&derived, 1).map_err(|e| e.to_string())?;
        let k = keys.len();
        let uniform = Ratio::new(1u64, 1 << k);
        let exactly_uniform = (0..1u32 << k).all(|o| {
            let outcome: Vec<u32> = (0..k).map(|t| o >> t & 1).collect();
            dist.probability(&outcome) == uniform
        });
        match m.find_dependent_rows() {
            None => {
                independent += 1;
                ensure(exactly_uniform, || {
                    format!("{label} {keys:?}: full rank but not uniform")
                })?;
            }
            Some(rows) => {
                dependent += 1;
                ensure(!exactly_uniform, || {
                    format!("{label} {keys:?}: dependent but uniform")
                })?;
                let (&last, rest) = rows.split_last().unwrap();
                let forced = dist
                    .support()
                    .all(|(o, _)| o[last] == rest.iter().fold(0, |acc, &t| acc ^ o[t]));
                ensure(forced, || {
                    format!("{label} {keys:?}: XOR relation on {rows:?} not forced")
                })?;
            }
        }
    }
    ensure(independent >= 20 && dependent >= 20, || {
        format!("unbalanced sample: {independent} independent, {dependent} dependent")
    })?;
    Ok(format!(
        "{} instances ({independent} independent, {dependent} dependent, {} skipped for size)",
        independent + dependent,
        tried - independent - dependent
    ))
}

fn random_derivation(rng: &mut ChaCha8Rng) -> Vec<DerivedKey> {
    let m = rng.gen_range(2..=10);
    let d = rng.gen_range(1..=4);
    let range = rng.gen_range(1..=4u64);
    (0..m)
        .map(|_| DerivedKey((0..d).map(|_| rng.gen_range(0..range)).collect()))
        .collect()
}

/// Every nonempty subset of rows whose XOR is zero, by brute force.
fn zero_sum_sizes(m: &BitMatrix) -> Vec<usize> {
    let rows = m.rows();
    (1u32..1 << rows)
        .filter_map(|mask| {
            let set: Vec<usize> = (0..rows).filter(|&r| mask >> r & 1 == 1).collect();
            m.rows_sum_to_zero(&set).then_some(set.len())
        })
        .collect()
}

fn dependent_sets_have_even_size(w: &mut Witnesses) -> Verdict {
    for (d, n, limit) in [(1, 5, 4), (2, 5, 6), (3, 5, 8)] {
        let spec = curve(2, d);
        let universe: Vec<DerivedKey> = enumerate_universe(2, n)
            .iter()
            .map(|k| spec.derive(k).unwrap())
            .collect();
        let found =
            smallest_bad_subset(&universe, limit, &exhaustive()).map_err(|e| e.to_string())?;
        w.record(found.as_ref().map(Vec::len));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0004);
    let mut zero_sums = 0;
    for _ in 0..1500 {
        let derived = random_derivation(&mut rng);
        let found = smallest_bad_subset(&derived, derived.len(), &exhaustive())
            .map_err(|e| e.to_string())?;
        w.record(found.as_ref().map(Vec::len));
        let sizes = zero_sum_sizes(&incidence_matrix_of(&derived));
        ensure(sizes.iter().all(|s| s % 2 == 0), || {
            format!("odd zero-sum set in {derived:?}")
        })?;
        ensure(
            found.as_ref().map(Vec::len) == sizes.iter().min().copied(),
            || format!("search and brute force disagree on {derived:?}"),
        )?;
        zero_sums += sizes.len();
    }
    let odd = w.sizes.iter().filter(|s| *s % 2 == 1).count();
    ensure(odd == 0, || format!("{odd} odd witnesses"))?;
    let distinct: BTreeSet<usize> = w.sizes.iter().copied().collect();
    Ok(format!(
        "{} searches, {} witnesses (sizes {distinct:?}), {zero_sums} zero-sum sets enumerated; none odd",
        w.searches,
        w.sizes.len()
    ))
}

fn peelable_sets_are_independent() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0005);
    let (mut peelable, mut strict) = (0, None);
    for i in 0..3000 {
        let (label, spec, keys) = match i % 3 {
            0 => random_instance(&mut rng),
            1 => {
                let d = rng.gen_range(3..=5);
                let n = rng.gen_range(3..=5);
                let mut universe = enumerate_universe(2, n);
                universe.shuffle(&mut rng);
                universe.truncate(rng.gen_range(3..=8));
                (format!("curve2_{d}"), curve(2, d), universe)
            }
            _ => {
                let m = rng.gen_range(4..=7i64);
                let d = rng.gen_range(3..=5);
                let table = (0..m).map(|x| {
                    (
                        Key::from([x]),
                        DerivedKey((0..d).map(|_| rng.gen_range(0..2)).collect()),
                    )
                });
                let spec = DerivationSpec::explicit(1, table.collect::<Vec<_>>())
                    .map_err(|e| e.to_string())?;
                (
                    "a random binary derivation".to_string(),
                    spec,
                    (0..m).map(|x| Key::from([x])).collect(),
                )
            }
        };
        let derived: Vec<DerivedKey> = keys.iter().map(|k| spec.derive(k).unwrap()).collect();
        let independent = is_independent_set(&spec, &keys)
            .map_err(|e| e.to_string())?
            .independent;
        if is_peelable_derived(&derived) {
            peelable += 1;
            ensure(independent, || {
                format!("{label} {keys:?}: peelable but dependent")
            })?;
        } else if independent && strict.is_none() {
            strict = Some((label, derived));
        }
    }
    let (label, derived) = strict.ok_or("no independent set that fails to peel was found")?;
    let shown: Vec<String> = derived.iter().map(|dk| format!("{:?}", dk.0)).collect();
    Ok(format!(
        "3000 instances, {peelable} peelable; independent but not peelable under {label}, derived keys {}",
        shown.join(" ")
    ))
}

fn all_subsets_full_rank(
    spec: &DerivationSpec,
    universe: &[Key],
    max: usize,
) -> Result<usize, String> {
    let mut checked = 0;
    let mut stack: Vec<usize> = Vec::new();
    fn walk(
        spec: &DerivationSpec,
        universe: &[Key],
        max: usize,
        from: usize,
        stack: &mut Vec<usize>,
        checked: &mut usize,
    ) -> Result<(), String> {
        if !stack.is_empty() {
            let keys: Vec<Key> = stack.iter().map(|&i| universe[i].clone()).collect();
            let m = incidence_matrix(spec, &keys).map_err(|e| e.to_string())?;
            *checked += 1;
            if m.rank() != keys.len() {
                return Err(format!("rank-deficient subset {keys:?}"));
            }
        }
        if stack.len() == max {
            return Ok(());
        }
        for next in from..universe.len() {
            stack.push(next);
            walk(spec, universe, max, next + 1, stack, checked)?;
            stack.pop();
        }
        Ok(())
    }
    walk(spec, universe, max, 0, &mut stack, &mut checked)?;
    Ok(checked)
}

fn linear_schemes_are_full_rank() -> Verdict {
    let tz = DerivationSpec::tz_linear(2, 2, 4).map_err(|e| e.to_string())?;
    let a = all_subsets_full_rank(&tz, &enumerate_universe(2, 4), 4)?;
    let b = all_subsets_full_rank(&DerivationSpec::tz5(), &enumerate_universe(2, 4), 5)?;
    ensure(a == 16 + 120 + 560 + 1820, || {
        format!("checked {a} subsets")
    })?;
    ensure(b == a + 4368, || format!("checked {b} subsets"))?;
    Ok(format!(
        "GF(4)^2 with d = 4: {a} subsets of size <= 4; tz5 on [4]^2: {b} subsets of size <= 5"
    ))
}

fn cubic_grid_has_no_small_dependencies(w: &mut Witnesses) -> Verdict {
    let d = (2.0f64 * (2.0 / 5.0) * 3.0).ceil() as usize * 2 + 1;
    ensure(d == 7, || format!("d = {d}"))?;
    let spec = curve(3, d);
    for k in 1..=4 {
        let found = find_bad_arrangement(&spec, 3, k, &exhaustive()).map_err(|e| e.to_string())?;
        w.record(found.as_ref().map(Vec::len));
        if let Some(keys) = found {
            return Err(format!("dependent set {keys:?}"));
        }
    }
    let five = find_bad_arrangement(&spec, 3, 5, &exhaustive()).map_err(|e| e.to_string())?;
    w.record(five.as_ref().map(Vec::len));
    Ok(format!(
        "(3, 7)-curve over [3]^3: no dependent set of size <= 4 (size 5: {})",
        if five.is_some() { "found" } else { "none" }
    ))
}

fn kmax_window() -> Verdict {
    let bound =
        k_max_bounded(&curve(2, 2), 3, 4, &SearchOptions::default()).map_err(|e| e.to_string())?;
    ensure(bound.k_max == 3, || format!("k_max = {}", bound.k_max))?;
    let witness = bound.witness.ok_or("no witness for the upper bound")?;
    let m = incidence_matrix(&curve(2, 2), &witness).map_err(|e| e.to_string())?;
    ensure(witness.len() == 4 && m.rank() < 4, || {
        format!("bad witness {witness:?}")
    })?;
    let shown: Vec<String> = witness.iter().map(Key::to_string).collect();
    Ok(format!(
        "k_max(curve2_2, [3]^2) = 3, witness {}",
        shown.join(" ")
    ))
}

fn sampled_frequencies_match() -> Verdict {
    let derived = [
        DerivedKey::from([4, 5, 6]),
        DerivedKey::from([4, 7, 8]),
        DerivedKey::from([5, 7, 9]),
    ];
    let samples = 1_000_000u64;
    let counts =
        sample_joint_counts(&derived, 2, samples, 0x5eed_0009).map_err(|e| e.to_string())?;
    let p = 1.0 / 64.0;
    let sigma = (p * (1.0 - p) / samples as f64).sqrt();
    let worst = counts
        .iter()
        .map(|&c| (c as f64 / samples as f64 - p).abs() / sigma)
        .fold(0.0, f64::max);
    ensure(counts.len() == 64 && worst < 5.0, || {
        format!("worst deviation {worst:.2} sigma")
    })?;
    Ok(format!("64 outcomes, largest deviation {worst:.2} sigma"))
}

fn bench_protocol() -> Verdict {
    let cfg = BenchConfig {
        trials: 3,
        keys_per_trial: 20_000,
        passes: 2,
        families: ["identity", "id", "curve2_4", "tz2_6", "tz4_16", "tz5"]
            .map(String::from)
            .to_vec(),
        instrument: true,
        ..BenchConfig::default()
    };
    let report = run_benchmark(&cfg).map_err(|e| e.to_string())?;
    let evals = (cfg.trials * cfg.passes * cfg.keys_per_trial) as u64;
    let expected_d = [0, 2, 4, 6, 16, 3];
    for (row, &d) in report.rows.iter().zip(&expected_d) {
        ensure(row.evaluations == Some(evals), || {
            format!("{}: {:?} evaluations", row.family, row.evaluations)
        })?;
        ensure(
            row.lookups == d && row.table_reads == Some(evals * d as u64),
            || {
                format!(
                    "{}: {:?} reads for d = {}",
                    row.family, row.table_reads, row.lookups
                )
            },
        )?;
        ensure(row.sd_ns >= 0.0 && row.trial_ns.len() == cfg.trials, || {
            format!("{}: bad statistics", row.family)
        })?;
    }
    let csv = report.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    ensure(
        lines[0] == CSV_HEADER && lines.len() == 1 + cfg.families.len(),
        || "CSV shape".into(),
    )?;
    for (line, family) in lines[1..].iter().zip(&cfg.families) {
        let fields: Vec<&str> = line.split(',').collect();
        ensure(fields.len() == 7 && fields[0] == family, || {
            format!("CSV row {line:?}")
        })?;
        ensure(
            fields[2].parse::<f64>().is_ok() && fields[3].parse::<f64>().is_ok(),
            || format!("CSV row {line:?}"),
        )?;
    }
    let timings: Vec<String> = report
        .rows
        .iter()
        .map(|r| format!("{} {:.2}±{:.2}ns", r.family, r.mean_ns, r.sd_ns))
        .collect();
    Ok(format!(
        "{evals} evaluations per family, reads = d per key; timings (not asserted): {}",
        timings.join(", ")
    ))
}

fn main() -> ExitCode {
    let mut witnesses = Witnesses::default();
    let mut failures = 0;
    let mut report = |n: usize, name: &str, verdict: Verdict, elapsed: Duration| {
        let secs = elapsed.as_secs_f64();
        match verdict {
            Ok(detail) => println!("PASS {n:>2} {name}: {detail} [{secs:.2}s]"),
            Err(detail) => {
                failures += 1;
                println!("FAIL {n:>2} {name}: {detail} [{secs:.2}s]");
            }
        }
    };
    macro_rules! criterion {
        ($n:expr, $name:expr, $body:expr) => {{
            let start = Instant::now();
            let verdict = $body;
            report($n, $name, verdict, start.elapsed());
        }};
    }
    criterion!(
        1,
        "(2,d)-curves are (2d-1)-wise independent on small grids",
        small_curves_have_no_short_dependencies(&mut witnesses)
    );
    criterion!(
        2,
        "constructed (2,d,2^d) arrangements are bad",
        constructed_arrangements_are_bad()
    );
    criterion!(
        3,
        "rank test agrees with the exact joint distribution",
        rank_test_matches_exact_distribution()
    );
    criterion!(
        4,
        "dependent key sets always have even size",
        dependent_sets_have_even_size(&mut witnesses)
    );
    criterion!(
        5,
        "peelable sets are independent, not conversely",
        peelable_sets_are_independent()
    );
    criterion!(
        6,
        "linear-map and tz5 derivations are full rank on small sets",
        linear_schemes_are_full_rank()
    );
    criterion!(
        7,
        "(3,7)-curve has no dependent set of size <= 4 over [3]^3",
        cubic_grid_has_no_small_dependencies(&mut witnesses)
    );
    criterion!(
        8,
        "bounded k_max for curve2_2 on [3]^2 is exactly 3",
        kmax_window()
    );
    criterion!(
        9,
        "sampled joint frequencies within 5 sigma",
        sampled_frequencies_match()
    );
    criterion!(
        10,
        "benchmark counts evaluations and lookups exactly",
        bench_protocol()
    );
    if failures == 0 {
        println!("all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("{failures} criteria failed");
        ExitCode::FAILURE
    }
}
