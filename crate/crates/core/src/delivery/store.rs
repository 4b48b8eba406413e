use std::collections::HashMap;

use bitvec::prelude::*;
use serde::Serialize;

use crate::combinatorics::UserSet;
use crate::error::{Error, Result};
use crate::field::{pack_bits, Field};
use crate::model::{Library, SubfilePartition};
use crate::placement::PlacementRecord;

pub type Bits = BitVec<u8, Msb0>;

/// A contiguous bit range `[start, start + len)` of subfile `F_{file, knowers}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Span {
    pub file: usize,
    pub knowers: UserSet,
    pub start: u32,
    pub len: u32,
}

impl Span {
    pub fn whole(file: usize, knowers: UserSet, len: u32) -> Self {
        Span { file, knowers, start: 0, len }
    }

    /// The sub-range `[offset, offset + len)` relative to this span.
    pub fn slice(&self, offset: u32, len: u32) -> Span {
        debug_assert!(offset + len <= self.len);
        Span { start: self.start + offset, len, ..*self }
    }
}

/// Subfile contents keyed by `(file, knower set)`.
///
/// The server store holds every piece it may transmit; a user store holds only
/// that user's cache, so decoding cannot touch anything else.
#[derive(Debug, Clone, Default)]
pub struct PieceStore {
    pieces: HashMap<(usize, UserSet), Bits>,
}

fn extract(lib: &Library, positions: &[u32], file: usize) -> Bits {
    let src = lib.file(file);
    positions.iter().map(|&p| src[p as usize]).collect()
}

impl PieceStore {
    /// All pieces of the listed files.
    pub fn server(lib: &Library, partition: &SubfilePartition, files: impl IntoIterator<Item = usize>) -> Self {
        let mut pieces = HashMap::new();
        for file in files {
            for (w, pos) in partition.subfiles(file) {
                pieces.insert((file, w), extract(lib, pos, file));
            }
        }
        PieceStore { pieces }
    }

    /// The cache `Z_user`.
    pub fn user(user: usize, placement: &PlacementRecord, lib: &Library) -> Self {
        let pieces = placement.caches[user]
            .items
            .iter()
            .map(|&(file, w)| ((file, w), extract(lib, placement.partition.positions(file, w), file)))
            .collect();
        PieceStore { pieces }
    }

    pub fn insert(&mut self, file: usize, knowers: UserSet, bits: Bits) {
        self.pieces.insert((file, knowers), bits);
    }

    pub fn piece(&self, file: usize, knowers: UserSet) -> Option<&Bits> {
        self.pieces.get(&(file, knowers))
    }

    pub fn bits(&self, span: &Span) -> Result<&BitSlice<u8, Msb0>> {
        let piece = self.piece(span.file, span.knowers).ok_or_else(|| Error::DecodeFailed {
            user: usize::MAX,
            reason: format!("piece of file {} known by {} unavailable", span.file + 1, span.knowers),
        })?;
        Ok(&piece[span.start as usize..(span.start + span.len) as usize])
    }

    pub fn symbols<F: Field>(&self, span: &Span) -> Result<Vec<F::Elem>> {
        Ok(pack_bits::<F>(self.bits(span)?.iter().by_vals()))
    }

    pub fn total_bits(&self) -> u64 {
        self.pieces.values().map(|b| b.len() as u64).sum()
    }
}

/// Collects recovered segments of the pieces a user is missing.
#[derive(Debug, Default)]
pub(crate) struct Assembly {
    pieces: HashMap<(usize, UserSet), (Bits, Bits)>,
}

impl Assembly {
    pub fn put(&mut self, span: &Span, piece_len: usize, bits: impl IntoIterator<Item = bool>) {
        let (data, seen) = self
            .pieces
            .entry((span.file, span.knowers))
            .or_insert_with(|| (bitvec![u8, Msb0; 0; piece_len], bitvec![u8, Msb0; 0; piece_len]));
        for (i, b) in bits.into_iter().take(span.len as usize).enumerate() {
            let at = span.start as usize + i;
            data.set(at, b);
            seen.set(at, true);
        }
    }

    /// The full piece, if every bit was recovered.
    pub fn take(&mut self, file: usize, knowers: UserSet) -> Option<Bits> {
        let (data, seen) = self.pieces.remove(&(file, knowers))?;
        seen.all().then_some(data)
    }
}
