//! The published exception lists, embedded from `fixtures/published_lists.toml`.

use std::collections::BTreeMap;

use ffsieve::tables::Preset;
use serde::Deserialize;

pub const PUBLISHED_LISTS: &str = include_str!("../fixtures/published_lists.toml");

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(u64),
    Many(Vec<u64>),
}

impl OneOrMany {
    fn values(&self) -> Vec<u64> {
        match self {
            OneOrMany::One(x) => vec![*x],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Deserialize)]
struct Group {
    q: OneOrMany,
    m: OneOrMany,
}

/// Exception pairs per preset, sorted by (m, q).
pub fn published_lists() -> BTreeMap<Preset, Vec<(u64, u64)>> {
    let raw: BTreeMap<String, Vec<Group>> = toml::from_str(PUBLISHED_LISTS).expect("embedded fixture parses");
    raw.into_iter()
        .map(|(name, groups)| {
            let preset: Preset = name.parse().expect("fixture keys are preset names");
            let mut pairs: Vec<(u64, u64)> = groups
                .iter()
                .flat_map(|g| {
                    let ms = g.m.values();
                    g.q.values().into_iter().flat_map(move |q| ms.clone().into_iter().map(move |m| (q, m)))
                })
                .collect();
            pairs.sort_by_key(|&(q, m)| (m, q));
            (preset, pairs)
        })
        .collect()
}

pub fn expected(preset: Preset) -> Vec<(u64, u64)> {
    published_lists().remove(&preset).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_has_a_list() {
        let l = published_lists();
        assert_eq!(l.len(), Preset::ALL.len());
        assert_eq!(l[&Preset::Q4q5q7].len(), 12);
        assert_eq!(l[&Preset::Q2].len(), 6);
        assert_eq!(l[&Preset::M8to11].len(), 20);
        assert_eq!(l[&Preset::M7].len(), 40);
        assert!(l[&Preset::Tables12].is_empty());
    }
}
