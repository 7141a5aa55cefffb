//! The JSON report every command emits.

use ffsieve::criteria::Verdict;
use ffsieve::search::{BinReport, Witness};
use ffsieve::tables::{Block, ListDiff, Preset};
use serde::{Deserialize, Serialize};

use crate::cache_file::CacheStats;

pub const SCHEMA_ID: &str = "ffsieve/run-report/v1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: String,
    pub tool: String,
    pub version: String,
    pub query: Query,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub verdicts: Vec<Verdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<TableSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchOutcome>,
    pub timing: Timing,
    pub cache: CacheStats,
}

impl RunReport {
    pub fn new(query: Query) -> Self {
        RunReport {
            schema: SCHEMA_ID.into(),
            tool: "ffsieve".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            query,
            verdicts: Vec::new(),
            table: None,
            search: None,
            timing: Timing::default(),
            cache: CacheStats::default(),
        }
    }
}

/// The parsed command line, enough to replay the run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Query {
    Classify {
        q: u64,
        m: u64,
        r: u64,
        k: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        g: Option<Vec<u32>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sieve_e: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sieve_f: Option<Vec<usize>>,
        no_search: bool,
    },
    Table {
        preset: Preset,
    },
    Search {
        q: u64,
        m: usize,
        r: u64,
        k: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        a: Option<u32>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        b: Option<u32>,
        all_ab: bool,
        count: bool,
    },
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl Query {
    /// Command-line arguments (without the program name) that reproduce this query.
    pub fn to_args(&self) -> Vec<String> {
        let mut a: Vec<String> = Vec::new();
        let mut flag = |name: &str, v: String| {
            a.push(format!("--{name}"));
            a.push(v);
        };
        match self {
            Query::Classify { q, m, r, k, g, sieve_e, sieve_f, no_search } => {
                flag("q", q.to_string());
                flag("m", m.to_string());
                flag("r", r.to_string());
                flag("k", k.to_string());
                if let Some(g) = g {
                    flag("g", join(g));
                }
                if let Some(e) = sieve_e {
                    flag("sieve-e", e.clone());
                }
                if let Some(f) = sieve_f {
                    flag("sieve-f", join(f));
                }
                a.insert(0, "classify".into());
                if *no_search {
                    a.push("--no-search".into());
                }
            }
            Query::Table { preset } => {
                flag("preset", preset.to_string());
                a.insert(0, "table".into());
            }
            Query::Search { q, m, r, k, a: ta, b, all_ab, count } => {
                flag("q", q.to_string());
                flag("m", m.to_string());
                flag("r", r.to_string());
                flag("k", k.to_string());
                if let Some(x) = ta {
                    flag("a", x.to_string());
                }
                if let Some(x) = b {
                    flag("b", x.to_string());
                }
                a.insert(0, "search".into());
                if *all_ab {
                    a.push("--all-ab".into());
                }
                if *count {
                    a.push("--count".into());
                }
            }
        }
        a
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableSummary {
    pub blocks: Vec<Block>,
    pub checked: u64,
    pub proven_main: u64,
    pub proven_sieve: u64,
    pub diff: ListDiff,
    /// Blocks taken from a checkpoint instead of recomputed.
    #[serde(default)]
    pub resumed_blocks: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SearchOutcome {
    Witness {
        a: u32,
        b: u32,
        #[serde(default)]
        witness: Option<Witness>,
    },
    Counts {
        report: BinReport,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_ms: u64,
    pub workers: usize,
}
