//! Batch verification over ranges of triples: enumerate every (p1, q1, q2)
//! matching a congruence family with primes below a bound, build the tower
//! report for each, and stream the results in a deterministic order. An
//! optional JSON-lines cache keyed by field discriminant makes reruns cheap.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, ErrorKind, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::arith::primes_up_to;
use crate::error::{Error, Result};
use crate::quadfield::{classify_triple, PrimeTriple};
use crate::tower::build_tower_report;

/// Reports are computed in batches of this size; emission stays in
/// enumeration order regardless of how a batch is scheduled.
const CHUNK: usize = 64;

/// Which congruence family to enumerate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Cond1,
    Cond2,
    All,
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Family> {
        match s {
            "cond1" => Ok(Family::Cond1),
            "cond2" => Ok(Family::Cond2),
            "all" => Ok(Family::All),
            _ => Err(Error::BadArgument {
                what: "family (cond1, cond2 or all)",
                input: s.to_string(),
            }),
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Family::Cond1 => "cond1",
            Family::Cond2 => "cond2",
            Family::All => "all",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symbol {
    S1,
    S2,
    Product,
}

/// Conjunction of constraints on the three Legendre symbols, parsed from
/// strings like "q1q2/p1=-1" or "q1/p1=1,q2/p1=-1".
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolFilter {
    terms: Vec<(Symbol, i32)>,
}

impl FromStr for SymbolFilter {
    type Err = Error;

    fn from_str(s: &str) -> Result<SymbolFilter> {
        let bad = || Error::BadArgument {
            what: "symbol filter (e.g. q1q2/p1=-1)",
            input: s.to_string(),
        };
        let mut terms = Vec::new();
        for part in s.split(',') {
            let (lhs, rhs) = part.split_once('=').ok_or_else(bad)?;
            let sym = match lhs.trim() {
                "q1/p1" => Symbol::S1,
                "q2/p1" => Symbol::S2,
                "q1q2/p1" => Symbol::Product,
                _ => return Err(bad()),
            };
            let val = match rhs.trim() {
                "1" | "+1" => 1,
                "-1" => -1,
                _ => return Err(bad()),
            };
            terms.push((sym, val));
        }
        if terms.is_empty() {
            return Err(bad());
        }
        Ok(SymbolFilter { terms })
    }
}

impl SymbolFilter {
    pub fn matches(&self, t: &PrimeTriple) -> bool {
        self.terms.iter().all(|&(sym, val)| {
            let actual = match sym {
                Symbol::S1 => t.s1,
                Symbol::S2 => t.s2,
                Symbol::Product => t.s1 * t.s2,
            };
            actual == val
        })
    }
}

#[derive(Debug, Clone)]
pub struct ScanConfig {
    pub family: Family,
    /// All three primes must be at most this.
    pub bound: i64,
    pub symbol: Option<SymbolFilter>,
    /// Worker threads; None picks the library default.
    pub jobs: Option<usize>,
    pub cache: Option<PathBuf>,
}

impl ScanConfig {
    fn validate(&self) -> Result<()> {
        if self.bound < 3 {
            return Err(Error::BadArgument {
                what: "prime bound (at least 3)",
                input: self.bound.to_string(),
            });
        }
        if self.jobs == Some(0) {
            return Err(Error::BadArgument {
                what: "worker count (at least 1)",
                input: "0".to_string(),
            });
        }
        Ok(())
    }
}

/// All triples of the family with primes at most the bound, sorted by
/// (p1, q1, q2). Cond1 pairs are canonicalized to q1 < q2; cond2 roles are
/// fixed by the congruence classes, so every ordered choice is distinct.
pub fn enumerate_triples(family: Family, bound: i64) -> Result<Vec<PrimeTriple>> {
    if bound < 3 {
        return Err(Error::BadArgument {
            what: "prime bound (at least 3)",
            input: bound.to_string(),
        });
    }
    let primes: Vec<i64> = primes_up_to(bound as u64).iter().map(|&p| p as i64).collect();
    let p5: Vec<i64> = primes.iter().copied().filter(|p| p % 8 == 5).collect();
    let q3: Vec<i64> = primes.iter().copied().filter(|p| p % 8 == 3).collect();
    let q7: Vec<i64> = primes.iter().copied().filter(|p| p % 8 == 7).collect();

    let mut out = Vec::new();
    if family != Family::Cond2 {
        for &p in &p5 {
            for (i, &a) in q3.iter().enumerate() {
                for &b in &q3[i + 1..] {
                    out.push(classify_triple(p, a, b)?);
                }
            }
        }
    }
    if family != Family::Cond1 {
        for &p in &p5 {
            for &a in &q7 {
                for &b in &q3 {
                    out.push(classify_triple(p, a, b)?);
                }
            }
        }
    }
    out.sort_by_key(|t| (t.p1, t.q1, t.q2));
    Ok(out)
}

/// One line of the scan cache: the report for the field with this
/// discriminant. The discriminant determines the triple within a family,
/// so a line is reusable verbatim.
#[derive(Debug, Serialize, Deserialize)]
struct CacheEntry {
    disc: i64,
    report: Value,
}

fn io_error(context: &'static str) -> impl Fn(std::io::Error) -> Error {
    move |e| Error::Io {
        context,
        message: e.to_string(),
    }
}

fn load_cache(path: &Path) -> Result<BTreeMap<i64, Value>> {
    let mut map = BTreeMap::new();
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == ErrorKind::NotFound => return Ok(map),
        Err(e) => return Err(io_error("opening the cache")(e)),
    };
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_error("reading the cache"))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<CacheEntry>(&line) {
            Ok(entry) => {
                map.insert(entry.disc, entry.report);
            }
            Err(err) => {
                eprintln!("warning: skipping corrupt cache line {}: {err}", idx + 1);
            }
        }
    }
    Ok(map)
}

/// Tallies from one scan run.
#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct ScanOutcome {
    pub reports: usize,
    /// Reports whose violations list is nonempty.
    pub violations: usize,
    pub tag_counts: BTreeMap<String, usize>,
}

fn report_value(t: &PrimeTriple, cached: &BTreeMap<i64, Value>) -> Result<(Value, bool)> {
    if let Some(v) = cached.get(&t.field().disc) {
        return Ok((v.clone(), true));
    }
    let report = build_tower_report(t)?;
    let value = serde_json::to_value(&report).map_err(|e| Error::Io {
        context: "serializing a report",
        message: e.to_string(),
    })?;
    Ok((value, false))
}

fn compute_chunk(
    chunk: &[PrimeTriple],
    cached: &BTreeMap<i64, Value>,
) -> Vec<Result<(Value, bool)>> {
    #[cfg(feature = "parallel")]
    {
        chunk.par_iter().map(|t| report_value(t, cached)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        chunk.iter().map(|t| report_value(t, cached)).collect()
    }
}

fn scan_inner<F>(cfg: &ScanConfig, mut emit: F) -> Result<ScanOutcome>
where
    F: FnMut(&Value) -> Result<()>,
{
    let mut triples = enumerate_triples(cfg.family, cfg.bound)?;
    if let Some(filter) = &cfg.symbol {
        triples.retain(|t| filter.matches(t));
    }

    let mut cached = BTreeMap::new();
    let mut appender = None;
    if let Some(path) = &cfg.cache {
        cached = load_cache(path)?;
        appender = Some(
            OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .map_err(io_error("opening the cache"))?,
        );
    }

    let mut outcome = ScanOutcome::default();
    for chunk in triples.chunks(CHUNK) {
        let results = compute_chunk(chunk, &cached);
        for (t, result) in chunk.iter().zip(results) {
            let (value, from_cache) = result?;
            emit(&value)?;
            outcome.reports += 1;
            if value["violations"].as_array().is_some_and(|a| !a.is_empty()) {
                outcome.violations += 1;
            }
            let tag = value["theorem"].as_str().unwrap_or("?").to_string();
            *outcome.tag_counts.entry(tag).or_insert(0) += 1;
            if !from_cache {
                if let Some(file) = appender.as_mut() {
                    let entry = CacheEntry {
                        disc: t.field().disc,
                        report: value,
                    };
                    let line = serde_json::to_string(&entry).expect("cache line serializes");
                    writeln!(file, "{line}").map_err(io_error("writing the cache"))?;
                }
            }
        }
    }
    Ok(outcome)
}

/// Runs the scan, calling `emit` once per report in (p1, q1, q2) order.
/// The emitted values are identical whatever the worker count, and a warm
/// cache replays the stored lines instead of recomputing.
pub fn scan_with<F>(cfg: &ScanConfig, emit: F) -> Result<ScanOutcome>
where
    F: FnMut(&Value) -> Result<()> + Send,
{
    cfg.validate()?;
    #[cfg(feature = "parallel")]
    if let Some(jobs) = cfg.jobs {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Io {
                context: "building the thread pool",
                message: e.to_string(),
            })?;
        return pool.install(|| scan_inner(cfg, emit));
    }
    scan_inner(cfg, emit)
}
