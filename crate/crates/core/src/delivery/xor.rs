//! XOR multicast over `(l+1)`-subsets of users.
//!
//! For every subset `S` the server sends the XOR of the pieces
//! `F_{d_k, S \ {k}}`, `k` in `S`, each truncated or zero-padded to a common
//! length. With [`Cut::Longest`] nothing is truncated. With
//! [`Cut::SecondLongest`] the longest piece loses its excess, which is returned
//! as a tail span for a separate code.

use std::collections::HashMap;

use bitvec::prelude::*;
use serde::Serialize;

use super::store::{Bits, PieceStore, Span};
use crate::combinatorics::{subsets_colex, UserSet};
use crate::error::{Error, Result};
use crate::model::{DemandVector, SubfilePartition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Cut {
    Longest,
    SecondLongest,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct XorPlan {
    pub level: usize,
    /// Nonempty transmissions: the subset and its length in bits.
    pub transmissions: Vec<(UserSet, u32)>,
    /// Piece suffixes some demander still lacks.
    pub tails: Vec<Span>,
    /// For each tail, the users whose cut falls short of the piece end.
    pub tail_needers: Vec<UserSet>,
}

impl XorPlan {
    pub fn new(level: usize, partition: &SubfilePartition, demands: &DemandVector, cut: Cut) -> Self {
        let k = demands.users();
        let mut transmissions = Vec::new();
        let mut cut_of: HashMap<UserSet, u32> = HashMap::new();
        if level < k {
            for s in subsets_colex(k, level + 1) {
                let mut lens: Vec<u32> =
                    s.iter().map(|u| partition.size(demands.file_of(u), s.without(u)) as u32).collect();
                lens.sort_unstable_by(|a, b| b.cmp(a));
                if lens[0] == 0 {
                    continue;
                }
                let c = match cut {
                    Cut::Longest => lens[0],
                    Cut::SecondLongest => lens.get(1).copied().unwrap_or(0),
                };
                cut_of.insert(s, c);
                if c > 0 {
                    transmissions.push((s, c));
                }
            }
        }

        let groups = demands.groups(partition.files());
        let mut tails = Vec::new();
        let mut tail_needers = Vec::new();
        for file in groups.demanded_files() {
            for (w, pos) in partition.subfiles(file) {
                let need = groups.group(file).difference(w);
                if w.len() != level || need.is_empty() {
                    continue;
                }
                let len = pos.len() as u32;
                let cut = |u: usize| cut_of.get(&w.with(u)).copied().unwrap_or(0);
                let needers = need.iter().filter(|&u| cut(u) < len).fold(UserSet::empty(), UserSet::with);
                if let Some(start) = needers.iter().map(cut).min() {
                    tails.push(Span { file, knowers: w, start, len: len - start });
                    tail_needers.push(needers);
                }
            }
        }
        XorPlan { level, transmissions, tails, tail_needers }
    }

    pub fn bits(&self) -> u64 {
        self.transmissions.iter().map(|&(_, c)| c as u64).sum()
    }
}

#[derive(Debug, Clone)]
pub struct XorCode {
    pub plan: XorPlan,
    pub payloads: Vec<Bits>,
}

fn prefix_into(acc: &mut Bits, piece: &BitSlice<u8, Msb0>) {
    let n = piece.len().min(acc.len());
    *acc.get_mut(..n).expect("in range") ^= &piece[..n];
}

impl XorCode {
    pub fn encode(plan: XorPlan, demands: &DemandVector, store: &PieceStore) -> Self {
        let payloads = plan
            .transmissions
            .iter()
            .map(|&(s, c)| {
                let mut acc = bitvec![u8, Msb0; 0; c as usize];
                for u in s.iter() {
                    if let Some(piece) = store.piece(demands.file_of(u), s.without(u)) {
                        prefix_into(&mut acc, piece);
                    }
                }
                acc
            })
            .collect();
        XorCode { plan, payloads }
    }

    /// Prefixes of the pieces `user` lacks, recovered with its cache.
    pub fn decode(
        &self,
        user: usize,
        demands: &DemandVector,
        partition: &SubfilePartition,
        cache: &PieceStore,
    ) -> Result<Vec<(Span, Vec<bool>)>> {
        let file = demands.file_of(user);
        let mut out = Vec::new();
        for (&(s, c), payload) in self.plan.transmissions.iter().zip(&self.payloads) {
            if !s.contains(user) {
                continue;
            }
            let own = s.without(user);
            let len = partition.size(file, own) as u32;
            if len == 0 {
                continue;
            }
            let mut acc = payload.clone();
            for u in s.iter().filter(|&u| u != user) {
                let w = s.without(u);
                let f = demands.file_of(u);
                if partition.size(f, w) == 0 {
                    continue;
                }
                let piece = cache.piece(f, w).ok_or_else(|| Error::DecodeFailed {
                    user,
                    reason: format!("XOR partner piece of file {} known by {w} not cached", f + 1),
                })?;
                prefix_into(&mut acc, piece);
            }
            let n = len.min(c);
            out.push((Span { file, knowers: own, start: 0, len: n }, acc[..n as usize].iter().by_vals().collect()));
        }
        Ok(out)
    }
}

/// Tails grouped so that every needer of a member knows the whole piece of
/// every other member. Each group is sent as one XOR as long as its longest
/// member.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TailPlan {
    pub tails: Vec<Span>,
    pub needers: Vec<UserSet>,
    /// Indices into `tails`, longest member first.
    pub cliques: Vec<Vec<usize>>,
}

impl TailPlan {
    /// Greedy cover: open a group with the longest free tail, then add every
    /// free tail compatible with all current members, longest first.
    pub fn new(tails: &[Span], needers: &[UserSet]) -> Self {
        let fits =
            |a: usize, b: usize| needers[a].is_subset(tails[b].knowers) && needers[b].is_subset(tails[a].knowers);
        let mut order: Vec<usize> = (0..tails.len()).collect();
        order.sort_by_key(|&i| (std::cmp::Reverse(tails[i].len), i));
        let mut used = vec![false; tails.len()];
        let mut cliques = Vec::new();
        for (at, &a) in order.iter().enumerate() {
            if used[a] {
                continue;
            }
            used[a] = true;
            let mut clique = vec![a];
            for &b in &order[at + 1..] {
                if !used[b] && clique.iter().all(|&c| fits(b, c)) {
                    used[b] = true;
                    clique.push(b);
                }
            }
            cliques.push(clique);
        }
        TailPlan { tails: tails.to_vec(), needers: needers.to_vec(), cliques }
    }

    pub fn bits(&self) -> u64 {
        self.cliques.iter().map(|c| self.tails[c[0]].len as u64).sum()
    }
}

#[derive(Debug, Clone)]
pub struct TailCode {
    pub plan: TailPlan,
    pub payloads: Vec<Bits>,
}

impl TailCode {
    pub fn encode(plan: TailPlan, store: &PieceStore) -> Result<Self> {
        let payloads = plan
            .cliques
            .iter()
            .map(|clique| {
                let mut acc = bitvec![u8, Msb0; 0; plan.tails[clique[0]].len as usize];
                for &i in clique {
                    prefix_into(&mut acc, store.bits(&plan.tails[i])?);
                }
                Ok(acc)
            })
            .collect::<Result<_>>()?;
        Ok(TailCode { plan, payloads })
    }

    pub fn decode(&self, user: usize, cache: &PieceStore) -> Result<Vec<(Span, Vec<bool>)>> {
        let mut out = Vec::new();
        for (clique, payload) in self.plan.cliques.iter().zip(&self.payloads) {
            let Some(&mine) = clique.iter().find(|&&i| self.plan.needers[i].contains(user)) else {
                continue;
            };
            let mut acc = payload.clone();
            for &i in clique.iter().filter(|&&i| i != mine) {
                let bits = cache.bits(&self.plan.tails[i]).map_err(|_| Error::DecodeFailed {
                    user,
                    reason: format!(
                        "tail partner of file {} known by {} not cached",
                        self.plan.tails[i].file + 1,
                        self.plan.tails[i].knowers
                    ),
                })?;
                prefix_into(&mut acc, bits);
            }
            let span = self.plan.tails[mine];
            out.push((span, acc[..span.len as usize].iter().by_vals().collect()));
        }
        Ok(out)
    }
}
