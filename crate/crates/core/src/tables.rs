//! Regeneration of the exception lists and threshold tables. Each preset expands
//! to blocks of (q, m) pairs; every pair satisfying the precondition goes through
//! the criteria, and the undecided ones form the exception list.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::arith::prime_powers_in;
use crate::criteria::{
    criteria_verdict, divides_q_pow_m_minus_1, m7_bound, omega_threshold_bound, q2_cutoffs, small_q_m_bound,
    table2_regions, threshold_row, CapRule, CriteriaOptions, M7Case, OmegaReport, ThresholdRow, PUBLISHED_TABLE1,
};
use crate::par::{self, Exec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Q4q5q7,
    Q2,
    M8to11,
    M7,
    Tables12,
}

impl Preset {
    pub const ALL: [Preset; 5] = [Preset::Q4q5q7, Preset::Q2, Preset::M8to11, Preset::M7, Preset::Tables12];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Q4q5q7 => "q4q5q7",
            Preset::Q2 => "q2",
            Preset::M8to11 => "m8to11",
            Preset::M7 => "m7",
            Preset::Tables12 => "tables12",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Preset::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| format!("unknown preset {s:?}"))
    }
}

/// Prime powers q in [q_lo, q_hi) against every m in [m_lo, m_hi).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub q_lo: u64,
    pub q_hi: u64,
    pub m_lo: u64,
    pub m_hi: u64,
    /// Where the bounds come from.
    pub note: String,
}

impl Block {
    fn single_q(q: u64, m_lo: u64, m_hi: u64, note: String) -> Block {
        Block { q_lo: q, q_hi: q + 1, m_lo, m_hi, note }
    }
}

/// The blocks of a preset together with the derivations that produced their bounds.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Plan {
    pub preset: Preset,
    pub blocks: Vec<Block>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<OmegaReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub table1: Vec<ThresholdRow>,
}

const SMALL_Q: [(u64, &str); 3] = [(4, "10.3"), (5, "8.4"), (7, "8.2")];

pub fn plan(preset: Preset) -> Plan {
    let mut p = Plan { preset, blocks: Vec::new(), omega: None, table1: Vec::new() };
    match preset {
        Preset::Q4q5q7 => {
            for (q, big_r) in SMALL_Q {
                let hi = small_q_m_bound(q, big_r, 3, 1).expect("positive slope").floor_u64() + 1;
                p.blocks.push(Block::single_q(q, 7, hi, format!("R = {big_r} settles m ≥ {hi}")));
            }
        }
        Preset::Q2 => {
            let (_, hi) = q2_cutoffs();
            p.blocks.push(Block::single_q(2, 7, hi, format!("second cutoff settles m ≥ {hi}")));
        }
        Preset::M8to11 => {
            let om = omega_threshold_bound(7, 11, 3, 1, 9631, 18);
            for b in om.per_m.iter().filter(|b| b.m >= 8) {
                p.blocks.push(Block {
                    q_lo: 8,
                    q_hi: b.scan_limit,
                    m_lo: b.m,
                    m_hi: b.m + 1,
                    note: format!("q ≤ {} from T = {}", b.q_bound, om.t_printed),
                });
            }
            p.omega = Some(om);
        }
        Preset::M7 => {
            let hi = m7_scan_limit();
            p.blocks.push(Block { q_lo: 8, q_hi: hi, m_lo: 7, m_hi: 8, note: format!("both gcd cases settle q ≥ {hi}") });
        }
        Preset::Tables12 => {
            p.table1 = PUBLISHED_TABLE1.iter().filter_map(|&(r, _, m0)| threshold_row(r, m0)).collect();
            let rows: Vec<(&str, u64, u64)> =
                PUBLISHED_TABLE1.iter().zip(&p.table1).map(|(&(r, _, m0), row)| (r, row.q0, m0)).collect();
            for (q_hi, m_lo, m_hi) in table2_regions(&rows) {
                p.blocks.push(Block { q_lo: 8, q_hi, m_lo, m_hi, note: "below the closed-form threshold".into() });
            }
        }
    }
    p
}

/// Exclusive q limit for m = 7: one past the larger two-round bound of the two gcd cases.
pub fn m7_scan_limit() -> u64 {
    [M7Case::Coprime, M7Case::SevenInGcd]
        .into_iter()
        .map(|c| m7_bound(c, 54, 100_000, 2, CapRule::AllPrimes).last().expect("one round").q_bound_floor + 1)
        .max()
        .unwrap()
}

/// One classified pair, without the transcript.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairRow {
    pub q: u64,
    pub m: u64,
    pub verdict: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockResult {
    /// Pairs with r | q^m − 1 that were classified.
    pub checked: u64,
    pub proven_main: u64,
    pub proven_sieve: u64,
    /// Undecided pairs, ordered by (m, q).
    pub exceptions: Vec<(u64, u64)>,
}

impl BlockResult {
    pub fn merge(&mut self, o: BlockResult) {
        self.checked += o.checked;
        self.proven_main += o.proven_main;
        self.proven_sieve += o.proven_sieve;
        self.exceptions.extend(o.exceptions);
    }
}

/// Pairs per parallel work item in the q scans.
const Q_CHUNK: usize = 512;

/// Classifies every pair of the block with r = 3, k = 1. Chunks of q are handed to `done`
/// in order as (first q, q past the chunk, partial result), for progress and checkpoints.
pub fn run_block(block: &Block, exec: Exec, opts: &CriteriaOptions, mut done: impl FnMut(u64, u64, &BlockResult)) -> BlockResult {
    let qs = prime_powers_in(block.q_lo, block.q_hi);
    let mut total = BlockResult::default();
    // batches keep the callback granular without giving up parallelism
    let batch = Q_CHUNK * par::workers(exec).max(1) * 4;
    for group in qs.chunks(batch) {
        let parts = par::map(exec, &group.chunks(Q_CHUNK).collect::<Vec<_>>(), |qs| classify_qs(qs, block, opts));
        for (chunk, part) in group.chunks(Q_CHUNK).zip(parts) {
            let end = chunk.last().map_or(block.q_hi, |&q| q + 1);
            done(chunk[0], end, &part);
            total.merge(part);
        }
    }
    total.exceptions.sort_by_key(|&(q, m)| (m, q));
    total
}

fn classify_qs(qs: &[u64], block: &Block, opts: &CriteriaOptions) -> BlockResult {
    let mut out = BlockResult::default();
    for &q in qs {
        for m in block.m_lo..block.m_hi {
            if !divides_q_pow_m_minus_1(q, m, 3) {
                continue;
            }
            let v = criteria_verdict(q, m, 3, 1, opts).expect("q is a prime power");
            out.checked += 1;
            match v.name() {
                "ProvenMain" => out.proven_main += 1,
                "ProvenSieve" => out.proven_sieve += 1,
                _ => out.exceptions.push((q, m)),
            }
        }
    }
    out
}

/// Classifies the block keeping every row (for small blocks and reports).
pub fn block_rows(block: &Block, exec: Exec, opts: &CriteriaOptions) -> Vec<PairRow> {
    let qs = prime_powers_in(block.q_lo, block.q_hi);
    par::map(exec, &qs, |&q| {
        (block.m_lo..block.m_hi)
            .filter(|&m| divides_q_pow_m_minus_1(q, m, 3))
            .map(|m| PairRow { q, m, verdict: criteria_verdict(q, m, 3, 1, opts).expect("prime power").name().into() })
            .collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect()
}

/// Comparison with a published exception list.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ListDiff {
    pub expected: Vec<(u64, u64)>,
    pub found: Vec<(u64, u64)>,
    /// Published exceptions that the criteria settle here.
    pub resolved: Vec<(u64, u64)>,
    /// Exceptions that are not in the published list.
    pub new: Vec<(u64, u64)>,
}

impl ListDiff {
    pub fn new(expected: &[(u64, u64)], found: &[(u64, u64)]) -> ListDiff {
        let mut e = expected.to_vec();
        let mut f = found.to_vec();
        e.sort_by_key(|&(q, m)| (m, q));
        f.sort_by_key(|&(q, m)| (m, q));
        let resolved = e.iter().filter(|x| !f.contains(x)).copied().collect();
        let new = f.iter().filter(|x| !e.contains(x)).copied().collect();
        ListDiff { expected: e, found: f, resolved, new }
    }

    pub fn exact(&self) -> bool {
        self.resolved.is_empty() && self.new.is_empty()
    }

    /// Fewer exceptions than published is acceptable, more is not.
    pub fn acceptable(&self) -> bool {
        self.new.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_names_roundtrip() {
        for p in Preset::ALL {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
        assert!("m9".parse::<Preset>().is_err());
    }

    #[test]
    fn plans_have_expected_bounds() {
        let q = plan(Preset::Q4q5q7);
        assert_eq!(q.blocks.iter().map(|b| b.m_hi).collect::<Vec<_>>(), vec![757, 172, 75]);
        assert_eq!(plan(Preset::Q2).blocks[0].m_hi, 99);
        let hi: Vec<u64> = plan(Preset::M8to11).blocks.iter().map(|b| b.q_hi).collect();
        assert_eq!(hi, vec![27_500_001, 91_108, 5_245, 946]);
        assert_eq!(m7_scan_limit(), 780_098);
        let t = plan(Preset::Tables12);
        assert_eq!(t.blocks[0], Block { q_lo: 8, q_hi: 13, m_lo: 64, m_hi: 175, note: t.blocks[0].note.clone() });
        assert_eq!(t.blocks.len(), 7);
    }

    #[test]
    fn small_q_lists() {
        let opts = CriteriaOptions::default();
        let mut found = Vec::new();
        for b in plan(Preset::Q4q5q7).blocks.iter().chain(plan(Preset::Q2).blocks.iter()) {
            found.extend(run_block(b, Exec::Auto, &opts, |_, _, _| {}).exceptions);
        }
        let mut want = vec![];
        for (q, ms) in [(4u64, &[7u64, 8, 9, 10, 12][..]), (5, &[8, 10, 12]), (7, &[7, 8, 9, 12]), (2, &[8, 10, 12, 14, 16, 18])] {
            want.extend(ms.iter().map(|&m| (q, m)));
        }
        let d = ListDiff::new(&want, &found);
        assert!(d.exact(), "{d:?}");
    }

    #[test]
    fn chunk_callback_covers_block() {
        let b = Block { q_lo: 8, q_hi: 3000, m_lo: 8, m_hi: 9, note: String::new() };
        let mut seen = 0;
        let mut last_end = 8;
        let r = run_block(&b, Exec::Sequential, &CriteriaOptions::default(), |lo, hi, part| {
            assert!(lo >= last_end && hi > lo);
            last_end = hi;
            seen += part.checked;
        });
        assert_eq!(seen, r.checked);
        assert_eq!(r.exceptions.len(), 19);
        let rows = block_rows(&b, Exec::Auto, &CriteriaOptions::default());
        assert_eq!(rows.len() as u64, r.checked);
    }
}
