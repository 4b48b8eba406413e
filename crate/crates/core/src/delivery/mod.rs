//! Delivery: the two-step multicast code, the XOR baseline, the per-level
//! decentralized delivery and the matching decoders.
//!
//! Loads are counted in logical bits: a coded row over pieces of `b` bits counts
//! `b` bits even though it occupies whole field symbols on the wire. Wire and
//! coefficient-header sizes are reported separately.

mod sim;
mod store;
mod twostep;
mod xor;

pub use sim::{simulate, LevelChoice, SimulationConfig, SimulationReport, MAX_RETRIES};
pub use store::{Bits, PieceStore, Span};
pub use twostep::{
    build_groups, encode_step1, encode_step2, GroupPlan, GroupSpec, Layer, Step1Inventory, Step2Block, Step2Layer,
    TwoStepCode, TwoStepPlan, Unit, MAX_REDRAWS,
};
pub use xor::{Cut, TailCode, TailPlan, XorCode, XorPlan};

use bitvec::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::model::{DemandVector, ProblemInstance, SubfilePartition};
use crate::placement::PlacementRecord;
use crate::seed::{label, SeedPath};
use store::Assembly;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Two-step delivery; per-level choice against the cut XOR when decentralized.
    Proposed,
    /// XOR over `(t+1)`-subsets.
    Mns,
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "proposed" => Ok(Scheme::Proposed),
            "mns" => Ok(Scheme::Mns),
            _ => Err(Error::Descriptor(format!("unknown scheme {s:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Section<F: Field> {
    TwoStep { level: usize, code: TwoStepCode<F> },
    Xor { level: usize, code: XorCode },
    Tails { level: usize, code: TailCode },
}

impl<F: Field> Section<F> {
    pub fn bits(&self) -> u64 {
        match self {
            Section::TwoStep { code, .. } => code.plan.bits(),
            Section::Xor { code, .. } => code.plan.bits(),
            Section::Tails { code, .. } => code.plan.bits(),
        }
    }

    fn wire_bits(&self) -> u64 {
        match self {
            Section::TwoStep { code, .. } => code.plan.wire_bits(),
            Section::Xor { code, .. } => code.plan.bits(),
            Section::Tails { code, .. } => code.plan.bits(),
        }
    }

    fn header_bits(&self) -> u64 {
        match self {
            Section::TwoStep { code, .. } => code.plan.header_bits(),
            Section::Xor { .. } | Section::Tails { .. } => 0,
        }
    }
}

/// `X_{d,Z}`: everything the server broadcasts.
#[derive(Debug, Clone)]
pub struct BroadcastMessage<F: Field> {
    pub file_bits: u64,
    pub seed: u64,
    pub sections: Vec<Section<F>>,
    pub levels: Vec<LevelChoice>,
}

impl<F: Field> BroadcastMessage<F> {
    /// Transmitted bits; the load is this over `F`.
    pub fn bits(&self) -> u64 {
        self.sections.iter().map(Section::bits).sum()
    }

    pub fn wire_bits(&self) -> u64 {
        self.sections.iter().map(Section::wire_bits).sum()
    }

    pub fn header_bits(&self) -> u64 {
        self.sections.iter().map(Section::header_bits).sum()
    }

    pub fn two_step_plans(&self) -> impl Iterator<Item = &TwoStepPlan> {
        self.sections.iter().filter_map(|s| match s {
            Section::TwoStep { code, .. } => Some(&code.plan),
            Section::Xor { .. } | Section::Tails { .. } => None,
        })
    }
}

fn whole_spans(partition: &SubfilePartition, demands: &DemandVector, level: Option<usize>) -> Vec<Span> {
    let groups = demands.groups(partition.files());
    groups
        .demanded_files()
        .flat_map(|file| {
            partition
                .subfiles(file)
                .filter(move |(w, pos)| !pos.is_empty() && level.is_none_or(|l| w.len() == l))
                .map(move |(w, pos)| Span::whole(file, w, pos.len() as u32))
        })
        .collect()
}

/// The two-step code over the whole centralized placement.
pub fn deliver_centralized<F: Field>(
    inst: &ProblemInstance,
    placement: &PlacementRecord,
    demands: &DemandVector,
    store: &PieceStore,
    seed: u64,
) -> Result<BroadcastMessage<F>> {
    let t = inst.centralized_level()?.t;
    let spans = whole_spans(&placement.partition, demands, None);
    let plan = TwoStepPlan::new::<F>(&spans, &demands.groups(inst.files()));
    let code = TwoStepCode::encode(plan, store, &SeedPath::new(seed))?;
    Ok(BroadcastMessage {
        file_bits: inst.file_bits(),
        seed,
        sections: vec![Section::TwoStep { level: t, code }],
        levels: Vec::new(),
    })
}

/// XOR delivery over all `(t+1)`-subsets of the centralized placement.
pub fn mns_deliver<F: Field>(
    inst: &ProblemInstance,
    placement: &PlacementRecord,
    demands: &DemandVector,
    store: &PieceStore,
) -> Result<BroadcastMessage<F>> {
    let t = inst.centralized_level()?.t;
    let plan = XorPlan::new(t, &placement.partition, demands, Cut::Longest);
    Ok(BroadcastMessage {
        file_bits: inst.file_bits(),
        seed: 0,
        sections: vec![Section::Xor { level: t, code: XorCode::encode(plan, demands, store) }],
        levels: Vec::new(),
    })
}

/// Per-level delivery for the decentralized placement.
///
/// Pieces known by exactly `l` users form level `l`. With [`Scheme::Proposed`]
/// each level is sent by whichever of two plans needs fewer bits: the two-step
/// code, or the XOR cut at the second-longest piece plus the cheaper of a
/// two-step code and a greedy XOR cover for the leftover tails. With [`Scheme::Mns`] every level uses the untruncated XOR.
pub fn deliver_decentralized<F: Field>(
    inst: &ProblemInstance,
    placement: &PlacementRecord,
    demands: &DemandVector,
    store: &PieceStore,
    seed: u64,
    scheme: Scheme,
) -> Result<BroadcastMessage<F>> {
    let k = inst.users();
    let groups = demands.groups(inst.files());
    let root = SeedPath::new(seed);
    let mut sections = Vec::new();
    let mut levels = Vec::new();
    for level in 0..k {
        let spans = whole_spans(&placement.partition, demands, Some(level));
        if spans.is_empty() {
            continue;
        }
        if scheme == Scheme::Mns {
            let plan = XorPlan::new(level, &placement.partition, demands, Cut::Longest);
            levels.push(LevelChoice { level, chosen: "xor".into(), two_step_bits: None, xor_bits: plan.bits() });
            sections.push(Section::Xor { level, code: XorCode::encode(plan, demands, store) });
            continue;
        }
        let two = TwoStepPlan::new::<F>(&spans, &groups);
        let xor = XorPlan::new(level, &placement.partition, demands, Cut::SecondLongest);
        let tails = TwoStepPlan::new::<F>(&xor.tails, &groups);
        let cover = TailPlan::new(&xor.tails, &xor.tail_needers);
        let tail_bits = tails.bits().min(cover.bits());
        let (two_bits, xor_bits) = (two.bits(), xor.bits() + tail_bits);
        let path = root.child(level as u64);
        if two_bits <= xor_bits {
            levels.push(LevelChoice { level, chosen: "two-step".into(), two_step_bits: Some(two_bits), xor_bits });
            sections.push(Section::TwoStep { level, code: TwoStepCode::encode(two, store, &path)? });
        } else {
            levels.push(LevelChoice { level, chosen: "xor".into(), two_step_bits: Some(two_bits), xor_bits });
            sections.push(Section::Xor { level, code: XorCode::encode(xor, demands, store) });
            if cover.bits() < tails.bits() {
                sections.push(Section::Tails { level, code: TailCode::encode(cover, store)? });
            } else if !tails.units.is_empty() {
                let code = TwoStepCode::encode(tails, store, &path.child(label::TAILS))?;
                sections.push(Section::TwoStep { level, code });
            }
        }
    }
    Ok(BroadcastMessage { file_bits: inst.file_bits(), seed, sections, levels })
}

/// Rebuilds the file `user` requested from the broadcast and its own cache.
pub fn decode<F: Field>(
    user: usize,
    message: &BroadcastMessage<F>,
    cache: &PieceStore,
    partition: &SubfilePartition,
    demands: &DemandVector,
) -> Result<Bits> {
    let file = demands.file_of(user);
    let mut assembly = Assembly::default();
    for section in &message.sections {
        let segments = match section {
            Section::TwoStep { code, .. } => code.decode(user, file, cache)?,
            Section::Xor { code, .. } => code.decode(user, demands, partition, cache)?,
            Section::Tails { code, .. } => code.decode(user, cache)?,
        };
        for (span, bits) in segments {
            let len = partition.size(span.file, span.knowers) as usize;
            assembly.put(&span, len, bits);
        }
    }
    let mut out = bitvec![u8, Msb0; 0; partition.file_bits() as usize];
    for (w, pos) in partition.subfiles(file) {
        let piece = if w.contains(user) { cache.piece(file, w).cloned() } else { assembly.take(file, w) };
        let piece = piece.ok_or_else(|| Error::DecodeFailed {
            user,
            reason: format!("subfile of file {} known by {w} not recovered", file + 1),
        })?;
        for (bit, &p) in piece.iter().by_vals().zip(pos) {
            out.set(p as usize, bit);
        }
    }
    Ok(out)
}
