//! iwasawa2: query 2-class groups, fundamental units, Redei decompositions
//! and norm equations of real quadratic fields, and verify first-layer
//! 2-tower behavior for radicands p1 q1 q2, one triple at a time or in
//! bulk scans.
//!
//! Exit codes: 0 success, 2 bad usage, 3 triple outside the congruence
//! patterns, 4 a verification failed.

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use iwasawa2::forms::{ambiguous_prime_form, FormClassGroup};
use iwasawa2::genus::{prime_discriminant_factorization, redei_four_rank, redei_s1, redei_s2};
use iwasawa2::quadfield::{classify_triple, fundamental_unit, make_field, norm_equation};
use iwasawa2::scan::{Family, ScanConfig, ScanOutcome, SymbolFilter};
use iwasawa2::tower::{build_tower_report, c_invariant, reference_tables, TableRow};
use iwasawa2::Error;

#[derive(Parser)]
#[command(name = "iwasawa2", version, about = "2-class groups and first-layer 2-tower data of real quadratic fields", max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// 2-Sylow class group of Q(sqrt d) and the classes of its ramified primes
    Classgroup {
        /// Squarefree radicand > 1
        #[arg(long)]
        d: i64,
        /// Narrow (strict) group instead of the wide one
        #[arg(long)]
        narrow: bool,
        #[arg(long)]
        json: bool,
    },
    /// Fundamental unit of Q(sqrt d), with its c-invariant when the norm is +1
    Unit {
        #[arg(long)]
        d: i64,
        #[arg(long)]
        json: bool,
    },
    /// Redei decompositions S1, S2 and the 4-rank of a fundamental discriminant
    Redei {
        /// Fundamental discriminant
        #[arg(long)]
        disc: i64,
        #[arg(long)]
        json: bool,
    },
    /// Solve x^2 - d y^2 = 4n
    Normeq {
        #[arg(long)]
        d: i64,
        /// Right-hand side norm n, may be negative
        n: i64,
        #[arg(long)]
        json: bool,
    },
    /// Full first-layer report for the field of radicand p1*q1*q2
    Tower {
        p1: i64,
        q1: i64,
        q2: i64,
        #[arg(long)]
        json: bool,
    },
    /// Recompute a bundled reference table and diff it row by row
    Tables {
        /// 2 (stable rows) or 3 (growing rows)
        #[arg(long)]
        which: u32,
        /// Emit the recomputed rows as CSV instead of the diff view
        #[arg(long)]
        csv: bool,
    },
    /// Enumerate triples below a bound and stream their reports
    Scan {
        /// cond1, cond2 or all
        #[arg(long, default_value = "all")]
        family: String,
        /// Upper bound on each of the three primes
        #[arg(long)]
        bound: i64,
        /// Constraint such as "q1q2/p1=-1", comma-separated to combine
        #[arg(long)]
        symbol: Option<String>,
        /// One JSON object per report instead of the table view
        #[arg(long)]
        json: bool,
        /// CSV rows (p1,q1,q2,principal,A0,A1) instead of the table view
        #[arg(long)]
        csv: bool,
        /// JSON-lines cache file; IWASAWA2_CACHE is used when absent
        #[arg(long)]
        cache: Option<PathBuf>,
        /// Worker threads
        #[arg(long)]
        jobs: Option<usize>,
        /// Write the stream to a file instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Die quietly when the consumer closes the pipe, like any other filter.
#[cfg(unix)]
fn reset_sigpipe() {
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
}

#[cfg(not(unix))]
fn reset_sigpipe() {}

fn main() {
    reset_sigpipe();
    let cli = Cli::parse();
    let code = match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::PatternMismatch { .. } => 3,
                Error::Io { .. } => 1,
                _ => 2,
            }
        }
    };
    std::process::exit(code);
}

fn run(cmd: Cmd) -> iwasawa2::Result<i32> {
    match cmd {
        Cmd::Classgroup { d, narrow, json } => cmd_classgroup(d, narrow, json),
        Cmd::Unit { d, json } => cmd_unit(d, json),
        Cmd::Redei { disc, json } => cmd_redei(disc, json),
        Cmd::Normeq { d, n, json } => cmd_normeq(d, n, json),
        Cmd::Tower { p1, q1, q2, json } => cmd_tower(p1, q1, q2, json),
        Cmd::Tables { which, csv } => cmd_tables(which, csv),
        Cmd::Scan {
            family,
            bound,
            symbol,
            json,
            csv,
            cache,
            jobs,
            out,
        } => cmd_scan(family, bound, symbol, json, csv, cache, jobs, out),
    }
}

fn cmd_classgroup(d: i64, narrow: bool, json: bool) -> iwasawa2::Result<i32> {
    let k = make_field(d)?;
    let group = FormClassGroup::compute(k.disc)?;
    let sylow = if narrow {
        group.narrow_sylow()
    } else {
        group.wide_sylow()
    };
    let mut classes = Vec::new();
    for ell in k.ramified_primes() {
        let principal = if narrow {
            group.index_of(&ambiguous_prime_form(k.disc, ell)?) == group.principal_index()
        } else {
            group.is_wide_principal(ell)?
        };
        classes.push((ell, principal));
    }
    let principal_set: Vec<i64> = classes.iter().filter(|&&(_, p)| p).map(|&(l, _)| l).collect();

    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(&json!({
                "d": d,
                "disc": k.disc,
                "narrow": narrow,
                "order": sylow.order(),
                "invariant_factors": sylow.invariant_factors,
                "ramified": classes.iter().map(|&(l, p)| json!({"prime": l, "principal": p})).collect::<Vec<_>>(),
                "principal": principal_set,
            }))
            .expect("json")
        );
    } else {
        let kind = if narrow { "narrow" } else { "wide" };
        let shape = if sylow.two_rank() <= 1 {
            "cyclic".to_string()
        } else {
            format!("{:?}", sylow.invariant_factors)
        };
        println!("Q(sqrt {d}), discriminant {}", k.disc);
        println!(
            "{kind} 2-class group: order {}, {shape}, invariant factors {:?}",
            sylow.order(),
            sylow.invariant_factors
        );
        for (ell, principal) in &classes {
            let tag = if *principal { "principal" } else { "non-principal" };
            println!("  prime {ell}: {tag}");
        }
        let set = principal_set
            .iter()
            .map(|l| l.to_string())
            .collect::<Vec<_>>()
            .join(", ");
        println!("principal: {{{set}}}");
    }
    Ok(0)
}

fn cmd_unit(d: i64, json: bool) -> iwasawa2::Result<i32> {
    let k = make_field(d)?;
    let fu = fundamental_unit(&k);
    let c = if fu.norm == 1 {
        Some(c_invariant(&k)?.square_class.repr())
    } else {
        None
    };
    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(&json!({
                "d": d,
                "t": fu.t.to_string(),
                "u": fu.u.to_string(),
                "norm": fu.norm,
                "c": c,
            }))
            .expect("json")
        );
    } else {
        println!("fundamental unit of Q(sqrt {d}): eps = ({} + {} sqrt({d}))/2", fu.t, fu.u);
        println!("norm: {}", fu.norm);
        match c {
            Some(c) => println!("c-invariant: {c} (K(sqrt eps) = K(sqrt {c}))"),
            None => println!("c-invariant: none (norm -1)"),
        }
    }
    Ok(0)
}

fn cmd_redei(disc: i64, json: bool) -> iwasawa2::Result<i32> {
    let parts = prime_discriminant_factorization(disc)?;
    let s1 = redei_s1(disc)?;
    let s2 = redei_s2(disc)?;
    let four_rank = redei_four_rank(disc)?;
    let two_rank = parts.len() as u32 - 1;

    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(&json!({
                "disc": disc,
                "prime_discriminants": parts,
                "two_rank": two_rank,
                "four_rank": four_rank,
                "s1": s1.iter().map(|p| [p.d1, p.d2]).collect::<Vec<_>>(),
                "s2": s2.iter().map(|p| [p.d1, p.d2]).collect::<Vec<_>>(),
            }))
            .expect("json")
        );
    } else {
        let factors = parts
            .iter()
            .map(|p| p.to_string())
            .collect::<Vec<_>>()
            .join(" * ");
        println!("discriminant {disc} = {factors}");
        println!("narrow 2-rank: {two_rank}, 4-rank: {four_rank}");
        let fmt = |list: &[iwasawa2::genus::Decomposition]| {
            list.iter()
                .map(|p| format!("({}, {})", p.d1, p.d2))
                .collect::<Vec<_>>()
                .join(", ")
        };
        println!("S1 ({} splittings): {}", s1.len(), fmt(&s1));
        println!("S2 ({} splittings): {}", s2.len(), fmt(&s2));
    }
    Ok(0)
}

fn cmd_normeq(d: i64, n: i64, json: bool) -> iwasawa2::Result<i32> {
    let k = make_field(d)?;
    let witness = norm_equation(&k, n)?;
    if json {
        let (x, y) = match &witness {
            Some((x, y)) => (Some(x.to_string()), Some(y.to_string())),
            None => (None, None),
        };
        println!(
            "{}",
            serde_json::to_string_pretty(&json!({
                "d": d,
                "n": n,
                "solvable": witness.is_some(),
                "x": x,
                "y": y,
            }))
            .expect("json")
        );
    } else {
        match witness {
            Some((x, y)) => {
                println!("x^2 - {d} y^2 = {}: solution x = {x}, y = {y}", 4 * n)
            }
            None => println!("x^2 - {d} y^2 = {}: no solution", 4 * n),
        }
    }
    Ok(0)
}

fn cmd_tower(p1: i64, q1: i64, q2: i64, json: bool) -> iwasawa2::Result<i32> {
    let t = classify_triple(p1, q1, q2)?;
    let r = build_tower_report(&t)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&r).expect("json"));
    } else {
        println!(
            "K = Q(sqrt {}), d = {} * {} * {} ({})",
            t.d(),
            t.p1,
            t.q1,
            t.q2,
            t.pattern
        );
        println!(
            "symbols (q1/p1, q2/p1, q1q2/p1) = ({}, {}, {})",
            r.symbols[0], r.symbols[1], r.symbols[2]
        );
        println!("A0 = {} {:?}, A(F) = {} {:?}", r.a0, r.a0_factors, r.af, r.af_factors);
        println!("Q = {}, fundamental system {}", r.q, r.fundamental_system);
        println!(
            "A1 = {} ({})",
            r.a1,
            if r.stable { "stable" } else { "grows at layer 1" }
        );
        println!("principal: {{{}}}", r.principal.join(", "));
        println!("lambda = {}, mu = {}, nu = {}", r.lambda, r.mu, r.nu);
        println!("X_inf: {}", r.xinf);
        println!("theorem: {}", r.theorem);
        if !r.violations.is_empty() {
            println!("violations:");
            for v in &r.violations {
                println!("  {v}");
            }
        }
    }
    if r.violations.is_empty() {
        Ok(0)
    } else {
        Ok(4)
    }
}

fn cmd_tables(which: u32, csv: bool) -> iwasawa2::Result<i32> {
    let (t2, t3) = reference_tables();
    let rows = match which {
        2 => t2,
        3 => t3,
        _ => {
            return Err(Error::BadArgument {
                what: "table number (2 or 3)",
                input: which.to_string(),
            })
        }
    };

    let mut matched = 0usize;
    let mut lines = Vec::new();
    for row in &rows {
        let t = classify_triple(row.p1, row.q1, row.q2)?;
        let r = build_tower_report(&t)?;
        let principal = r.principal.join(";");
        let ok = r.a0 == row.a0 && r.a1 == row.a1 && principal == row.principal.to_string();
        if ok {
            matched += 1;
        }
        lines.push((*row, principal, r.a0, r.a1, ok));
    }

    if csv {
        println!("p1,q1,q2,principal,A0,A1");
        for (row, principal, a0, a1, _) in &lines {
            println!("{},{},{},{},{},{}", row.p1, row.q1, row.q2, principal, a0, a1);
        }
    } else {
        println!("table {which}: expected | computed (principal, A0, A1)");
        for (row, principal, a0, a1, ok) in &lines {
            let TableRow { p1, q1, q2, .. } = row;
            let verdict = if *ok { "ok" } else { "MISMATCH" };
            println!(
                "({p1}, {q1}, {q2}): {} {} {} | {} {} {} {}",
                row.principal, row.a0, row.a1, principal, a0, a1, verdict
            );
        }
        println!("{matched}/{} rows match", rows.len());
    }
    Ok(if matched == rows.len() { 0 } else { 4 })
}

fn csv_line(v: &Value) -> String {
    let principal = v["principal"]
        .as_array()
        .map(|a| {
            a.iter()
                .filter_map(|x| x.as_str())
                .collect::<Vec<_>>()
                .join(";")
        })
        .unwrap_or_default();
    format!(
        "{},{},{},{},{},{}",
        v["p1"], v["q1"], v["q2"], principal, v["A0"], v["A1"]
    )
}

fn table_line(v: &Value) -> String {
    let s = &v["symbols"];
    let principal = v["principal"]
        .as_array()
        .map(|a| {
            a.iter()
                .filter_map(|x| x.as_str())
                .collect::<Vec<_>>()
                .join(", ")
        })
        .unwrap_or_default();
    format!(
        "({}, {}, {}) {} symbols ({}, {}, {}) A0={} A1={} Q={} {} principal={{{}}} {}",
        v["p1"],
        v["q1"],
        v["q2"],
        v["pattern"].as_str().unwrap_or("?"),
        s[0],
        s[1],
        s[2],
        v["A0"],
        v["A1"],
        v["Q"],
        if v["stable"].as_bool() == Some(true) {
            "stable"
        } else {
            "grows"
        },
        principal,
        v["theorem"].as_str().unwrap_or("?"),
    )
}

#[allow(clippy::too_many_arguments)]
fn cmd_scan(
    family: String,
    bound: i64,
    symbol: Option<String>,
    json: bool,
    csv: bool,
    cache: Option<PathBuf>,
    jobs: Option<usize>,
    out: Option<PathBuf>,
) -> iwasawa2::Result<i32> {
    if json && csv {
        return Err(Error::BadArgument {
            what: "output format (pick one of --json and --csv)",
            input: "--json --csv".to_string(),
        });
    }
    let cache = cache.or_else(|| {
        std::env::var_os("IWASAWA2_CACHE")
            .filter(|v| !v.is_empty())
            .map(PathBuf::from)
    });
    let cfg = ScanConfig {
        family: family.parse::<Family>()?,
        bound,
        symbol: symbol.map(|s| s.parse::<SymbolFilter>()).transpose()?,
        jobs,
        cache,
    };

    let io_err = |e: std::io::Error| Error::Io {
        context: "writing output",
        message: e.to_string(),
    };
    let mut writer: Box<dyn Write + Send> = match &out {
        Some(path) => Box::new(std::io::BufWriter::new(
            std::fs::File::create(path).map_err(|e| Error::Io {
                context: "creating the output file",
                message: e.to_string(),
            })?,
        )),
        None => Box::new(std::io::BufWriter::new(std::io::stdout())),
    };
    if csv {
        writeln!(writer, "p1,q1,q2,principal,A0,A1").map_err(io_err)?;
    }

    let outcome: ScanOutcome = iwasawa2::scan::scan_with(&cfg, |v| {
        let line = if json {
            serde_json::to_string(v).expect("report serializes")
        } else if csv {
            csv_line(v)
        } else {
            table_line(v)
        };
        writeln!(writer, "{line}").map_err(io_err)
    })?;
    writer.flush().map_err(io_err)?;

    let tags = outcome
        .tag_counts
        .iter()
        .map(|(k, n)| format!("{k}={n}"))
        .collect::<Vec<_>>()
        .join(" ");
    eprintln!(
        "scanned {} reports, {} with violations{}{}",
        outcome.reports,
        outcome.violations,
        if tags.is_empty() { "" } else { ": " },
        tags
    );
    Ok(if outcome.violations == 0 { 0 } else { 4 })
}
