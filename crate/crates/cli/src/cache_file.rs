//! On-disk factorization cache: a JSON object mapping decimal n to ordered
//! [prime, multiplicity] pairs. Primes may be JSON numbers or decimal strings;
//! they are written as numbers when they fit in a u64. Every entry is checked
//! (product and primality) before the solver sees it.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use ffsieve::arith::cache;
use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Number, Value};

pub const ENV_VAR: &str = "FFSIEVE_CACHE";

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheStats {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    pub loaded: u64,
    pub rejected: u64,
    pub hits: u64,
    pub new_entries: u64,
}

/// FFSIEVE_CACHE, else $XDG_CACHE_HOME/ffsieve/factors.json, else ~/.cache/ffsieve/factors.json.
pub fn default_path() -> Option<PathBuf> {
    if let Some(p) = std::env::var_os(ENV_VAR) {
        return Some(PathBuf::from(p));
    }
    let base = match std::env::var_os("XDG_CACHE_HOME") {
        Some(x) if !x.is_empty() => PathBuf::from(x),
        _ => PathBuf::from(std::env::var_os("HOME")?).join(".cache"),
    };
    Some(base.join("ffsieve").join("factors.json"))
}

fn parse_big(v: &Value) -> Option<BigUint> {
    match v {
        Value::Number(n) => n.as_u64().map(BigUint::from),
        Value::String(s) => s.parse().ok(),
        _ => None,
    }
}

fn parse_entry(v: &Value) -> Option<Vec<(BigUint, u32)>> {
    v.as_array()?
        .iter()
        .map(|pair| {
            let pair = pair.as_array()?;
            if pair.len() != 2 {
                return None;
            }
            let e = pair[1].as_u64().or_else(|| pair[1].as_str()?.parse().ok())?;
            Some((parse_big(&pair[0])?, u32::try_from(e).ok()?))
        })
        .collect()
}

/// Parses the file body and feeds verified entries to the solver's cache.
/// Returns (accepted, rejected); every rejection is reported through `warn`.
pub fn load_str(body: &str, mut warn: impl FnMut(String)) -> (u64, u64) {
    cache::enable();
    if body.trim().is_empty() {
        return (0, 0);
    }
    let map: Map<String, Value> = match serde_json::from_str(body) {
        Ok(m) => m,
        Err(e) => {
            warn(format!("cache file is not a JSON object ({e}); starting cold"));
            return (0, 1);
        }
    };
    let (mut ok, mut bad) = (0, 0);
    for (k, v) in &map {
        let accepted = match (k.parse::<BigUint>(), parse_entry(v)) {
            (Ok(n), Some(f)) => cache::insert_verified(n, f),
            _ => false,
        };
        if accepted {
            ok += 1;
        } else {
            bad += 1;
            warn(format!("dropping cache entry {k}: not a verified factorization"));
        }
    }
    (ok, bad)
}

fn big_value(x: &BigUint) -> Value {
    match u64::try_from(x) {
        Ok(v) => Value::Number(Number::from(v)),
        Err(_) => Value::String(x.to_string()),
    }
}

/// Current cache contents, one entry per line, keys in increasing numeric order.
pub fn dump() -> String {
    let entries = cache::entries();
    let lines: Vec<String> = entries
        .iter()
        .map(|(n, f)| {
            let pairs = Value::Array(f.iter().map(|(p, e)| Value::Array(vec![big_value(p), Value::from(*e)])).collect());
            format!("  \"{n}\": {pairs}")
        })
        .collect();
    if lines.is_empty() {
        "{}\n".into()
    } else {
        format!("{{\n{}\n}}\n", lines.join(",\n"))
    }
}

pub fn load(path: &Path, warn: impl FnMut(String)) -> (u64, u64) {
    match fs::read_to_string(path) {
        Ok(body) => load_str(&body, warn),
        Err(_) => {
            cache::enable();
            (0, 0)
        }
    }
}

/// Writes through a temporary file and a rename, so a crash never leaves half a file.
pub fn save(path: &Path) -> std::io::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension("json.tmp");
    let mut f = fs::File::create(&tmp)?;
    f.write_all(dump().as_bytes())?;
    f.sync_all()?;
    fs::rename(&tmp, path)
}
