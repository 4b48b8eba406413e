//! Cache placement.
//!
//! Centralized: every file is cut into `C(K, t)` equal subfiles indexed by the
//! `t`-subsets `W`, and user `j` stores `F_{i,W}` exactly when `j` is in `W`.
//! Decentralized: every user independently stores `round(qF)` uniformly chosen
//! bits of every file; each bit then belongs to the class of its exact knower set.

use std::collections::BTreeMap;

use rand::seq::index;
use serde::Serialize;

use crate::combinatorics::{subsets_colex, UserSet};
use crate::error::{Error, Result};
use crate::model::{CacheState, Mode, ProblemInstance, SubfilePartition};
use crate::seed::{label, SeedPath};

/// Largest user count for bit-level decentralized simulation.
pub const MAX_DECENTRALIZED_USERS: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlacementRecord {
    pub mode: Mode,
    pub users: usize,
    pub partition: SubfilePartition,
    pub caches: Vec<CacheState>,
    pub seed: u64,
}

/// One line of the placement transcript.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TranscriptEntry {
    pub file: usize,
    pub class: String,
    pub bits: u64,
}

impl PlacementRecord {
    /// Per user, the cached `(file, knower set, size)` triples (1-based labels).
    pub fn transcript(&self) -> Vec<Vec<TranscriptEntry>> {
        self.caches
            .iter()
            .map(|c| {
                c.items
                    .iter()
                    .map(|&(file, w)| TranscriptEntry {
                        file: file + 1,
                        class: w.to_string(),
                        bits: self.partition.size(file, w),
                    })
                    .collect()
            })
            .collect()
    }
}

fn caches_from(partition: &SubfilePartition, users: usize) -> Vec<CacheState> {
    (0..users)
        .map(|user| {
            let mut items = Vec::new();
            let mut bits = 0;
            for file in 0..partition.files() {
                for (w, pos) in partition.subfiles(file) {
                    if w.contains(user) {
                        items.push((file, w));
                        bits += pos.len() as u64;
                    }
                }
            }
            CacheState { user, items, bits }
        })
        .collect()
}

pub fn place_centralized(inst: &ProblemInstance) -> Result<PlacementRecord> {
    let level = inst.centralized_level()?;
    let k = inst.users();
    let size = level.subfile_bits as u32;
    let classes: BTreeMap<UserSet, Vec<u32>> = subsets_colex(k, level.t)
        .enumerate()
        .map(|(r, w)| {
            let start = r as u32 * size;
            (w, (start..start + size).collect())
        })
        .collect();
    let partition = SubfilePartition::new(inst.file_bits(), vec![classes; inst.files()]);
    let caches = caches_from(&partition, k);
    Ok(PlacementRecord { mode: Mode::Centralized, users: k, partition, caches, seed: 0 })
}

pub fn place_decentralized(inst: &ProblemInstance, seed: u64) -> Result<PlacementRecord> {
    let k = inst.users();
    if k > MAX_DECENTRALIZED_USERS {
        return Err(Error::TooManyUsers { users: k, max: MAX_DECENTRALIZED_USERS });
    }
    let f = inst.file_bits() as usize;
    let amount = inst.decentralized_bits_per_file() as usize;
    let root = SeedPath::new(seed).child(label::PLACEMENT);
    let classes = (0..inst.files())
        .map(|file| {
            let mut knowers = vec![0u32; f];
            for user in 0..k {
                let mut rng = root.children(&[file as u64, user as u64]).rng();
                for b in index::sample(&mut rng, f, amount) {
                    knowers[b] |= 1 << user;
                }
            }
            let mut map: BTreeMap<UserSet, Vec<u32>> = BTreeMap::new();
            for (b, &w) in knowers.iter().enumerate() {
                map.entry(UserSet(w)).or_default().push(b as u32);
            }
            map
        })
        .collect();
    let partition = SubfilePartition::new(inst.file_bits(), classes);
    let caches = caches_from(&partition, k);
    Ok(PlacementRecord { mode: Mode::Decentralized, users: k, partition, caches, seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::{binom, rat};

    fn total_bits(p: &SubfilePartition, file: usize) -> u64 {
        p.subfiles(file).map(|(_, pos)| pos.len() as u64).sum()
    }

    #[test]
    fn example_cache_of_user_one() {
        let inst = ProblemInstance::new(2, 5, rat(4, 5), 10).unwrap();
        let rec = place_centralized(&inst).unwrap();
        let z1: Vec<String> = rec.caches[0]
            .items
            .iter()
            .map(|&(f, w)| format!("{}{}", ["A", "B"][f], w.iter().map(|u| (u + 1).to_string()).collect::<String>()))
            .collect();
        assert_eq!(z1, ["A12", "A13", "A14", "A15", "B12", "B13", "B14", "B15"]);
        assert_eq!(rec.caches[0].bits, 8);
        assert!(rec.caches[0].holds(1, UserSet::from_iter([0, 4])));
    }

    #[test]
    fn centralized_invariants() {
        for (n, k) in [(2, 5), (3, 6), (2, 7)] {
            for t in 0..=k {
                let m = rat((t * n) as i64, k as i64);
                let f = binom(k as i64, t as i64) as u64 * 3;
                let inst = ProblemInstance::new(n, k, m, f).unwrap();
                let rec = place_centralized(&inst).unwrap();
                for file in 0..n {
                    assert_eq!(total_bits(&rec.partition, file), f);
                    let mut seen = vec![false; f as usize];
                    for (w, pos) in rec.partition.subfiles(file) {
                        assert_eq!(w.len(), t);
                        assert_eq!(pos.len() as u64, f / binom(k as i64, t as i64) as u64);
                        for &b in pos {
                            assert!(!std::mem::replace(&mut seen[b as usize], true));
                        }
                    }
                }
                // Every user stores exactly MF bits.
                for c in &rec.caches {
                    assert_eq!(c.bits as u128 * k as u128, (t * n) as u128 * f as u128);
                    assert!(c.items.iter().all(|(_, w)| w.contains(c.user)));
                }
            }
        }
    }

    #[test]
    fn centralized_endpoints() {
        let empty = place_centralized(&ProblemInstance::new(2, 4, rat(0, 1), 4).unwrap()).unwrap();
        assert!(empty.caches.iter().all(|c| c.bits == 0));
        let full = place_centralized(&ProblemInstance::new(2, 4, rat(2, 1), 4).unwrap()).unwrap();
        assert!(full.caches.iter().all(|c| c.bits == 8));
    }

    #[test]
    fn decentralized_caches_are_exact_size_and_classes_partition() {
        let inst = ProblemInstance::new(3, 6, rat(1, 1), 3000).unwrap();
        let rec = place_decentralized(&inst, 11).unwrap();
        for c in &rec.caches {
            assert_eq!(c.bits, 3 * 1000);
        }
        for file in 0..3 {
            assert_eq!(total_bits(&rec.partition, file), 3000);
        }
        assert_eq!(rec, place_decentralized(&inst, 11).unwrap());
    }

    #[test]
    fn decentralized_endpoints() {
        let none = place_decentralized(&ProblemInstance::new(2, 4, rat(0, 1), 100).unwrap(), 1).unwrap();
        assert_eq!(none.partition.size(0, UserSet::empty()), 100);
        let all = place_decentralized(&ProblemInstance::new(2, 4, rat(2, 1), 100).unwrap(), 1).unwrap();
        assert_eq!(all.partition.size(1, UserSet::full(4)), 100);
    }

    #[test]
    fn decentralized_class_sizes_concentrate() {
        let inst = ProblemInstance::new(4, 8, rat(6, 5), 100_000).unwrap();
        let rec = place_decentralized(&inst, 3).unwrap();
        let (q, f) = (0.3f64, 100_000f64);
        let (mut checked, mut within3) = (0, 0);
        for file in 0..4 {
            for mask in 0u32..256 {
                let w = UserSet(mask);
                let p = q.powi(w.len() as i32) * (1.0 - q).powi(8 - w.len() as i32);
                let sd = (f * p * (1.0 - p)).sqrt();
                let dev = (rec.partition.size(file, w) as f64 - f * p).abs();
                assert!(dev <= 5.0 * sd + 1.0, "file {file} class {w}");
                checked += 1;
                within3 += (dev <= 3.0 * sd + 1.0) as usize;
            }
        }
        assert!(within3 as f64 >= 0.99 * checked as f64, "{within3}/{checked}");
    }

    #[test]
    fn too_many_users_for_bit_level_simulation() {
        let inst = ProblemInstance::new(2, 21, rat(1, 1), 10).unwrap();
        assert!(matches!(place_decentralized(&inst, 0), Err(Error::TooManyUsers { .. })));
    }

    #[test]
    fn transcript_lists_cached_classes() {
        let inst = ProblemInstance::new(2, 5, rat(4, 5), 10).unwrap();
        let t = place_centralized(&inst).unwrap().transcript();
        assert_eq!(t[0].len(), 8);
        assert_eq!(t[0][0], TranscriptEntry { file: 1, class: "{1,2}".into(), bits: 1 });
    }
}
