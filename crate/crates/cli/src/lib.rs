//! Command-line surface for ffsieve.
//!
//! Exit codes: 0 success or a definitive verdict, 1 error, 2 undecided,
//! 3 field too large to enumerate, 4 table found exceptions missing from the
//! published list, 64 usage error.

pub mod cache_file;
pub mod fixtures;
pub mod report;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use ffsieve::arith::cache;
use ffsieve::criteria::{CriteriaOptions, SieveOverride};
use ffsieve::par::{self, Exec};
use ffsieve::poly::Poly;
use ffsieve::search::{classify_pair, count_in, default_require_degree_m, find_witness_in, ClassifyOptions, Scanner, SearchError};
use ffsieve::tables::{plan, run_block, Block, BlockResult, ListDiff, Preset};
use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::cache_file::CacheStats;
use crate::report::{Query, RunReport, SearchOutcome, TableSummary};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_UNDECIDED: i32 = 2;
pub const EXIT_TOO_LARGE: i32 = 3;
pub const EXIT_NEW_EXCEPTIONS: i32 = 4;
pub const EXIT_USAGE: i32 = 64;

#[derive(Parser, Debug)]
#[command(name = "ffsieve", version, about = "r-primitive k-normal elements with prescribed norm and trace of the inverse")]
pub struct Cli {
    /// Cap on worker threads.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Do not read or write the factorization cache.
    #[arg(long, global = true)]
    pub no_cache: bool,
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Decide one (q, m, r, k): criteria first, enumeration if they fail and the field is small.
    Classify {
        #[arg(long)]
        q: u64,
        #[arg(long)]
        m: u64,
        #[arg(long, default_value_t = 3)]
        r: u64,
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Degree-k divisor of x^m - 1 as F_q ranks, constant term first (e.g. "2,1").
        #[arg(long, value_delimiter = ',')]
        g: Option<Vec<u32>>,
        /// Sieve e: the primes of the squarefree part that divide it are kept.
        #[arg(long, requires = "sieve_f")]
        sieve_e: Option<BigUint>,
        /// Indices of the f̃ factors to keep, as listed in the transcript.
        #[arg(long, requires = "sieve_e", value_delimiter = ',')]
        sieve_f: Option<Vec<usize>>,
        #[arg(long)]
        no_search: bool,
    },
    /// Regenerate a published exception list and compare.
    Table {
        #[arg(long)]
        preset: Preset,
        #[arg(long, value_enum, default_value_t = TableFormat::Json)]
        format: TableFormat,
        /// Progress file; an existing one for the same preset is resumed.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Exhaustive search in F_{q^m}.
    Search {
        #[arg(long)]
        q: u64,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 3)]
        r: u64,
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Prescribed N(ξ)·Tr(ξ⁻¹), as an F_q rank.
        #[arg(long, required_unless_present_any = ["all_ab", "count"])]
        a: Option<u32>,
        /// Prescribed N(ξ), as an F_q rank.
        #[arg(long, required_unless_present_any = ["all_ab", "count"])]
        b: Option<u32>,
        /// Count every (a, b) cell.
        #[arg(long)]
        all_ab: bool,
        /// Count, listing only nonzero cells.
        #[arg(long)]
        count: bool,
        #[arg(long, value_enum, default_value_t = SearchFormat::Json)]
        format: SearchFormat,
    },
}

impl Cmd {
    /// The replayable part of the command (output format and checkpoint path left out).
    pub fn query(&self) -> Query {
        match self {
            Cmd::Classify { q, m, r, k, g, sieve_e, sieve_f, no_search } => Query::Classify {
                q: *q,
                m: *m,
                r: *r,
                k: *k,
                g: g.clone(),
                sieve_e: sieve_e.as_ref().map(|e| e.to_string()),
                sieve_f: sieve_f.clone(),
                no_search: *no_search,
            },
            Cmd::Table { preset, .. } => Query::Table { preset: *preset },
            Cmd::Search { q, m, r, k, a, b, all_ab, count, .. } => {
                Query::Search { q: *q, m: *m, r: *r, k: *k, a: *a, b: *b, all_ab: *all_ab, count: *count }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TableFormat {
    /// The report as one JSON document.
    Json,
    /// One line per open pair, then the report.
    Jsonl,
    /// q,m,status rows.
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SearchFormat {
    Json,
    Csv,
}

/// Runs the tool. `out` receives the report, `err` diagnostics.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{e}");
                    EXIT_USAGE
                }
            };
            return code;
        }
    };
    if let Some(j) = cli.jobs {
        set_jobs(j, err);
    }
    let cache_path = if cli.no_cache { None } else { cache_file::default_path() };
    let mut stats = CacheStats { path: cache_path.as_ref().map(|p| p.display().to_string()), ..Default::default() };
    if let Some(p) = &cache_path {
        let (ok, bad) = cache_file::load(p, |w| {
            let _ = writeln!(err, "warning: {w}");
        });
        stats.loaded = ok;
        stats.rejected = bad;
    }
    let hits0 = cache::stats();
    let start = Instant::now();
    let (code, mut report, rendered) = match dispatch(&cli.cmd, err) {
        Ok(x) => x,
        Err((code, msg)) => {
            let _ = writeln!(err, "error: {msg}");
            finish_cache(&cache_path, stats.rejected > 0, err);
            return code;
        }
    };
    let hits1 = cache::stats();
    stats.hits = hits1.0 - hits0.0;
    stats.new_entries = hits1.1 - hits0.1;
    report.cache = stats;
    report.timing.wall_ms = start.elapsed().as_millis() as u64;
    report.timing.workers = par::workers(Exec::Auto);
    let json = serde_json::to_string(&report).expect("report serializes");
    let _ = match rendered {
        Some(prefix) if !prefix.is_empty() => write!(out, "{prefix}"),
        _ => Ok(()),
    };
    if !matches!(&cli.cmd, Cmd::Table { format: TableFormat::Csv, .. } | Cmd::Search { format: SearchFormat::Csv, .. }) {
        let _ = writeln!(out, "{json}");
    }
    finish_cache(&cache_path, report.cache.rejected > 0, err);
    code
}

/// Writes the cache back when it changed, or to drop entries that failed verification.
fn finish_cache(path: &Option<PathBuf>, purge: bool, err: &mut dyn Write) {
    let Some(p) = path else { return };
    if cache::stats().1 == 0 && !purge && p.exists() {
        return;
    }
    if let Err(e) = cache_file::save(p) {
        let _ = writeln!(err, "warning: could not write cache {}: {e}", p.display());
    }
}

#[cfg(feature = "parallel")]
fn set_jobs(j: usize, err: &mut dyn Write) {
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build_global() {
        let _ = writeln!(err, "warning: --jobs ignored: {e}");
    }
}

#[cfg(not(feature = "parallel"))]
fn set_jobs(_: usize, _: &mut dyn Write) {}

type Dispatch = Result<(i32, RunReport, Option<String>), (i32, String)>;

fn search_err(e: SearchError) -> (i32, String) {
    let code = if e.is_too_large() { EXIT_TOO_LARGE } else { EXIT_ERROR };
    (code, e.to_string())
}

fn dispatch(cmd: &Cmd, err: &mut dyn Write) -> Dispatch {
    match cmd {
        Cmd::Classify { q, m, r, k, g, sieve_e, sieve_f, no_search } => {
            let query = cmd.query();
            let mut opts = ClassifyOptions { no_search: *no_search, ..Default::default() };
            opts.criteria = CriteriaOptions {
                g: g.clone().map(Poly::from_coeffs),
                sieve: sieve_e.clone().zip(sieve_f.clone()).map(|(e, f)| SieveOverride { e, f }),
                ..CriteriaOptions::default()
            };
            let v = classify_pair(*q, *m, *r, *k, &opts).map_err(search_err)?;
            let code = if v.is_undecided() { EXIT_UNDECIDED } else { EXIT_OK };
            let mut rep = RunReport::new(query);
            rep.verdicts.push(v);
            Ok((code, rep, None))
        }
        Cmd::Table { preset, format, checkpoint } => {
            let (summary, found) = run_table(*preset, checkpoint.as_deref(), err).map_err(|e| (EXIT_ERROR, e))?;
            let code = if summary.diff.acceptable() { EXIT_OK } else { EXIT_NEW_EXCEPTIONS };
            if !summary.diff.resolved.is_empty() {
                let _ = writeln!(err, "note: published pairs settled here: {:?}", summary.diff.resolved);
            }
            if !summary.diff.new.is_empty() {
                let _ = writeln!(err, "error: exceptions missing from the published list: {:?}", summary.diff.new);
            }
            let rendered = match format {
                TableFormat::Json => None,
                TableFormat::Jsonl => Some(
                    found.iter().map(|&(q, m)| format!("{{\"q\":{q},\"m\":{m},\"status\":\"{}\"}}\n", status(&summary.diff, q, m))).collect(),
                ),
                TableFormat::Csv => Some(table_csv(&summary.diff)),
            };
            let mut rep = RunReport::new(cmd.query());
            rep.table = Some(summary);
            Ok((code, rep, rendered))
        }
        Cmd::Search { q, m, r, k, a, b, all_ab, count, format } => {
            let query = cmd.query();
            let s = Scanner::new(*q, *m, *r, *k, default_require_degree_m(*m, *k)).map_err(search_err)?;
            let outcome = if *all_ab || *count {
                let mut report = count_in(&s, Exec::Auto).map_err(search_err)?;
                if !*all_ab {
                    report.bins.retain(|x| x.count > 0);
                }
                SearchOutcome::Counts { report }
            } else {
                let (a, b) = (a.expect("clap enforces"), b.expect("clap enforces"));
                if a as u64 >= *q || b == 0 || b as u64 >= *q {
                    return Err((EXIT_ERROR, format!("a must be below q and b in 1..q (got a = {a}, b = {b})")));
                }
                SearchOutcome::Witness { a, b, witness: find_witness_in(&s, a, b).map_err(search_err)? }
            };
            let rendered = (*format == SearchFormat::Csv).then(|| search_csv(&outcome));
            let mut rep = RunReport::new(query);
            rep.search = Some(outcome);
            Ok((EXIT_OK, rep, rendered))
        }
    }
}

fn status(d: &ListDiff, q: u64, m: u64) -> &'static str {
    if d.new.contains(&(q, m)) {
        "new"
    } else {
        "open"
    }
}

fn table_csv(d: &ListDiff) -> String {
    let mut s = String::from("q,m,status\n");
    let mut rows: Vec<(u64, u64, &str)> = d.found.iter().map(|&(q, m)| (q, m, status(d, q, m))).collect();
    rows.extend(d.resolved.iter().map(|&(q, m)| (q, m, "resolved")));
    rows.sort_by_key(|&(q, m, _)| (m, q));
    for (q, m, st) in rows {
        s.push_str(&format!("{q},{m},{st}\n"));
    }
    s
}

fn search_csv(o: &SearchOutcome) -> String {
    match o {
        SearchOutcome::Counts { report } => {
            let mut s = String::from("b,a,count,feasible\n");
            for x in &report.bins {
                s.push_str(&format!("{},{},{},{}\n", x.b, x.a, x.count, x.feasible));
            }
            s
        }
        SearchOutcome::Witness { a, b, witness } => {
            let mut s = String::from("a,b,rank,order,min_poly\n");
            if let Some(w) = witness {
                let mp = w.min_poly.coeffs().iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ");
                s.push_str(&format!("{a},{b},{},{},{mp}\n", w.rank, w.order));
            }
            s
        }
    }
}

/// Progress of a table run, rewritten after every finished chunk.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub preset: Option<Preset>,
    /// Blocks finished in full.
    pub blocks_done: usize,
    /// First q of the current block not yet covered.
    pub next_q: Option<u64>,
    pub result: BlockResult,
}

fn write_checkpoint(path: &Path, c: &Checkpoint) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, serde_json::to_string_pretty(c).expect("serializes"))?;
    fs::rename(tmp, path)
}

/// Runs every block of the preset (resuming from the checkpoint when it matches) and diffs
/// the open pairs against the published list.
pub fn run_table(preset: Preset, checkpoint: Option<&Path>, err: &mut dyn Write) -> Result<(TableSummary, Vec<(u64, u64)>), String> {
    let p = plan(preset);
    let mut state = Checkpoint { preset: Some(preset), ..Default::default() };
    if let Some(path) = checkpoint {
        if let Ok(body) = fs::read_to_string(path) {
            match serde_json::from_str::<Checkpoint>(&body) {
                Ok(c) if c.preset == Some(preset) && c.blocks_done <= p.blocks.len() => state = c,
                Ok(_) => {
                    let _ = writeln!(err, "warning: checkpoint {} is for another run; starting over", path.display());
                }
                Err(e) => {
                    let _ = writeln!(err, "warning: unreadable checkpoint {} ({e}); starting over", path.display());
                }
            }
        }
    }
    let resumed = state.blocks_done;
    let opts = CriteriaOptions::default();
    for (i, block) in p.blocks.iter().enumerate().skip(state.blocks_done) {
        let b = Block { q_lo: state.next_q.unwrap_or(block.q_lo).max(block.q_lo), ..block.clone() };
        let mut io_err = None;
        run_block(&b, Exec::Auto, &opts, |_, hi, part| {
            state.result.merge(part.clone());
            state.next_q = Some(hi);
            if let Some(path) = checkpoint {
                if let Err(e) = write_checkpoint(path, &state) {
                    io_err.get_or_insert(e);
                }
            }
        });
        state.blocks_done = i + 1;
        state.next_q = None;
        if let Some(path) = checkpoint {
            write_checkpoint(path, &state).map_err(|e| format!("checkpoint {}: {e}", path.display()))?;
        }
        if let Some(e) = io_err {
            return Err(format!("checkpoint: {e}"));
        }
    }
    let mut found = state.result.exceptions.clone();
    found.sort_by_key(|&(q, m)| (m, q));
    let diff = ListDiff::new(&fixtures::expected(preset), &found);
    let r = state.result;
    Ok((
        TableSummary {
            blocks: p.blocks,
            checked: r.checked,
            proven_main: r.proven_main,
            proven_sieve: r.proven_sieve,
            diff,
            resumed_blocks: resumed,
        },
        found,
    ))
}
