//! The two-step multicast code.
//!
//! Step 1 splits the missing pieces of file `i` into groups `O_{i,J}` by their
//! knower set outside the demand group, `J = W \ G_i`, and forms random linear
//! combinations inside each group until every demander of `i` can solve for
//! the members it lacks. Step 2 broadcasts random combinations of all step-1
//! rows; every user first rebuilds the step-1 rows whose members it caches and
//! solves for the rest.
//!
//! Members of a group may differ in length. Each group is then coded in layers:
//! the bit range `[lo, hi)` between consecutive distinct member lengths is coded
//! across the members that reach `hi`. Step 2 is layered the same way over the
//! symbol lengths of the step-1 rows. With equal lengths both steps have a
//! single layer.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::store::{PieceStore, Span};
use crate::combinatorics::UserSet;
use crate::error::{Error, Result};
use crate::field::{symbols_for_bits, unpack_bits, Field, FieldMatrix};
use crate::model::DemandGroups;
use crate::seed::{label, SeedPath};

/// Coefficient redraws before the encoder gives up on a block.
pub const MAX_REDRAWS: u64 = 8;

/// `O_{i,J}`: the members of file `i` whose knowers outside `G_i` are exactly `J`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GroupSpec {
    pub file: usize,
    pub leftover: UserSet,
    pub demanders: UserSet,
    pub members: Vec<Span>,
}

impl GroupSpec {
    /// Members cached by `user`.
    pub fn known_by(&self, user: usize) -> usize {
        self.members.iter().filter(|m| m.knowers.contains(user)).count()
    }
}

/// Groups the spans by `(file, W \ G_file)`, ordered by file then leftover set.
pub fn build_groups(spans: &[Span], groups: &DemandGroups) -> Vec<GroupSpec> {
    let mut map: BTreeMap<(usize, UserSet), Vec<Span>> = BTreeMap::new();
    for s in spans {
        let leftover = s.knowers.difference(groups.group(s.file));
        map.entry((s.file, leftover)).or_default().push(*s);
    }
    map.into_iter()
        .map(|((file, leftover), members)| GroupSpec { file, leftover, demanders: groups.group(file), members })
        .collect()
}

/// One coded layer of a step-1 group: bits `[lo, hi)` of each participant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Layer {
    pub lo: u32,
    pub hi: u32,
    pub participants: Vec<usize>,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GroupPlan {
    pub spec: GroupSpec,
    pub layers: Vec<Layer>,
}

impl GroupPlan {
    fn new(spec: GroupSpec) -> Self {
        let mut cuts: Vec<u32> = spec.members.iter().map(|m| m.len).filter(|&l| l > 0).collect();
        cuts.sort_unstable();
        cuts.dedup();
        let mut lo = 0;
        let mut layers = Vec::with_capacity(cuts.len());
        for hi in cuts {
            let participants: Vec<usize> = (0..spec.members.len()).filter(|&p| spec.members[p].len >= hi).collect();
            let min_known = spec
                .demanders
                .iter()
                .map(|u| participants.iter().filter(|&&p| spec.members[p].knowers.contains(u)).count())
                .min()
                .unwrap_or(participants.len());
            layers.push(Layer { lo, hi, rows: participants.len() - min_known, participants });
            lo = hi;
        }
        GroupPlan { spec, layers }
    }

    /// Coded bits this group contributes to the step-1 inventory.
    pub fn code_bits(&self) -> u64 {
        self.layers.iter().map(|l| l.rows as u64 * (l.hi - l.lo) as u64).sum()
    }

    /// Coded rows, counting each layer once. Equals the subfile-unit count when
    /// all members have the same length.
    pub fn code_rows(&self) -> usize {
        self.layers.iter().map(|l| l.rows).sum()
    }

    pub fn is_zero_transmission(&self) -> bool {
        self.code_rows() == 0
    }
}

/// A step-1 coded row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Unit {
    pub group: usize,
    pub layer: usize,
    pub row: usize,
    pub bits: u32,
    pub symbols: usize,
    /// Users caching every participant, who can rebuild the row locally.
    pub knowers: UserSet,
}

/// One step-2 layer: symbols `[lo, hi)` of every participating unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Step2Layer {
    pub lo: usize,
    pub hi: usize,
    pub participants: Vec<usize>,
    pub rows: usize,
    /// Logical bits carried by each row.
    pub bits: u64,
}

/// Code dimensions before any coefficients are drawn.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TwoStepPlan {
    pub groups: Vec<GroupPlan>,
    pub units: Vec<Unit>,
    pub step2: Vec<Step2Layer>,
    /// Users that need at least one step-1 row of their own file.
    pub interested: UserSet,
    pub symbol_bits: usize,
}

impl TwoStepPlan {
    pub fn new<F: Field>(spans: &[Span], demand: &DemandGroups) -> Self {
        let groups: Vec<GroupPlan> = build_groups(spans, demand).into_iter().map(GroupPlan::new).collect();
        let mut units = Vec::new();
        let mut interested = UserSet::empty();
        for (g, plan) in groups.iter().enumerate() {
            for (l, layer) in plan.layers.iter().enumerate() {
                if layer.rows == 0 {
                    continue;
                }
                let knowers = layer
                    .participants
                    .iter()
                    .fold(UserSet(u32::MAX), |acc, &p| acc.intersection(plan.spec.members[p].knowers));
                for u in plan.spec.demanders.iter() {
                    if !knowers.contains(u) {
                        interested = interested.with(u);
                    }
                }
                let bits = layer.hi - layer.lo;
                for row in 0..layer.rows {
                    units.push(Unit {
                        group: g,
                        layer: l,
                        row,
                        bits,
                        symbols: symbols_for_bits::<F>(bits as usize),
                        knowers,
                    });
                }
            }
        }

        let mut cuts: Vec<usize> = units.iter().map(|u| u.symbols).collect();
        cuts.sort_unstable();
        cuts.dedup();
        let w = F::BITS as u64;
        let mut step2 = Vec::with_capacity(cuts.len());
        let mut lo = 0;
        for hi in cuts {
            let participants: Vec<usize> = (0..units.len()).filter(|&p| units[p].symbols >= hi).collect();
            let min_known = interested
                .iter()
                .map(|u| participants.iter().filter(|&&p| units[p].knowers.contains(u)).count())
                .min()
                .unwrap_or(participants.len());
            let bits = participants
                .iter()
                .map(|&p| (units[p].bits as u64).min(hi as u64 * w) - lo as u64 * w)
                .max()
                .unwrap_or(0);
            step2.push(Step2Layer { lo, hi, rows: participants.len() - min_known, participants, bits });
            lo = hi;
        }
        TwoStepPlan { groups, units, step2, interested, symbol_bits: F::BITS }
    }

    /// Bits in the step-1 inventory.
    pub fn step1_bits(&self) -> u64 {
        self.units.iter().map(|u| u.bits as u64).sum()
    }

    /// Step-1 bits `user` can rebuild from its cache.
    pub fn known_step1_bits(&self, user: usize) -> u64 {
        self.units.iter().filter(|u| u.knowers.contains(user)).map(|u| u.bits as u64).sum()
    }

    /// Broadcast bits.
    pub fn bits(&self) -> u64 {
        self.step2.iter().map(|l| l.rows as u64 * l.bits).sum()
    }

    pub fn step2_rows(&self) -> usize {
        self.step2.iter().map(|l| l.rows).sum()
    }

    /// Bits on the wire once payload rows are padded to whole symbols.
    pub fn wire_bits(&self) -> u64 {
        self.step2.iter().map(|l| (l.rows * (l.hi - l.lo) * self.symbol_bits) as u64).sum()
    }

    /// Coefficient header bits of both steps.
    pub fn header_bits(&self) -> u64 {
        let step1: usize = self.groups.iter().flat_map(|g| &g.layers).map(|l| l.rows * l.participants.len()).sum();
        let step2: usize = self.step2.iter().map(|l| l.rows * l.participants.len()).sum();
        ((step1 + step2) * self.symbol_bits) as u64
    }
}

/// Draws a `rows x cols` matrix whose restriction to each listed column set has
/// full column rank.
fn draw_decodable<F: Field>(
    rows: usize,
    cols: usize,
    unknown: &BTreeSet<Vec<usize>>,
    path: &SeedPath,
) -> Result<FieldMatrix<F>> {
    let mut worst = (0, 0);
    for attempt in 0..MAX_REDRAWS {
        let m = FieldMatrix::<F>::random(rows, cols, &mut path.child(attempt).rng());
        let failed = unknown.iter().find_map(|cs| {
            let r = m.select_columns(cs).rank();
            (r < cs.len()).then_some((r, cs.len()))
        });
        match failed {
            None => return Ok(m),
            Some(f) => worst = f,
        }
    }
    Err(Error::RankDeficient { rank: worst.0, needed: worst.1 })
}

/// Step-1 coefficients (broadcast as headers) and coded rows (server side only).
#[derive(Debug, Clone)]
pub struct Step1Inventory<F: Field> {
    pub coeffs: Vec<Vec<FieldMatrix<F>>>,
    pub rows: Vec<Vec<F::Elem>>,
}

pub fn encode_step1<F: Field>(plan: &TwoStepPlan, store: &PieceStore, path: &SeedPath) -> Result<Step1Inventory<F>> {
    let path = path.child(label::STEP1);
    let mut coeffs = Vec::with_capacity(plan.groups.len());
    let mut rows = Vec::with_capacity(plan.units.len());
    for (g, group) in plan.groups.iter().enumerate() {
        let mut per_layer = Vec::with_capacity(group.layers.len());
        for (l, layer) in group.layers.iter().enumerate() {
            if layer.rows == 0 {
                per_layer.push(FieldMatrix::zeros(0, layer.participants.len()));
                continue;
            }
            let unknown: BTreeSet<Vec<usize>> = group
                .spec
                .demanders
                .iter()
                .map(|u| {
                    (0..layer.participants.len())
                        .filter(|&c| !group.spec.members[layer.participants[c]].knowers.contains(u))
                        .collect::<Vec<_>>()
                })
                .filter(|cs| !cs.is_empty())
                .collect();
            let m = draw_decodable::<F>(
                layer.rows,
                layer.participants.len(),
                &unknown,
                &path.children(&[g as u64, l as u64]),
            )?;
            let sources = layer
                .participants
                .iter()
                .map(|&p| store.symbols::<F>(&group.spec.members[p].slice(layer.lo, layer.hi - layer.lo)))
                .collect::<Result<Vec<_>>>()?;
            let refs: Vec<&[F::Elem]> = sources.iter().map(Vec::as_slice).collect();
            rows.extend(m.combine(&refs, symbols_for_bits::<F>((layer.hi - layer.lo) as usize))?);
            per_layer.push(m);
        }
        coeffs.push(per_layer);
    }
    Ok(Step1Inventory { coeffs, rows })
}

/// A step-2 layer on the wire.
#[derive(Debug, Clone)]
pub struct Step2Block<F: Field> {
    pub coeffs: FieldMatrix<F>,
    pub payload: Vec<Vec<F::Elem>>,
}

pub fn encode_step2<F: Field>(
    plan: &TwoStepPlan,
    inventory: &Step1Inventory<F>,
    path: &SeedPath,
) -> Result<Vec<Step2Block<F>>> {
    let path = path.child(label::STEP2);
    plan.step2
        .iter()
        .enumerate()
        .map(|(l, layer)| {
            let unknown: BTreeSet<Vec<usize>> = plan
                .interested
                .iter()
                .map(|u| {
                    (0..layer.participants.len())
                        .filter(|&c| !plan.units[layer.participants[c]].knowers.contains(u))
                        .collect::<Vec<_>>()
                })
                .filter(|cs| !cs.is_empty())
                .collect();
            let coeffs = draw_decodable::<F>(layer.rows, layer.participants.len(), &unknown, &path.child(l as u64))?;
            let refs: Vec<&[F::Elem]> =
                layer.participants.iter().map(|&p| &inventory.rows[p][layer.lo..layer.hi]).collect();
            let payload = coeffs.combine(&refs, layer.hi - layer.lo)?;
            Ok(Step2Block { coeffs, payload })
        })
        .collect()
}

/// The broadcast part of a two-step code: step-1 headers and step-2 rows.
#[derive(Debug, Clone)]
pub struct TwoStepCode<F: Field> {
    pub plan: TwoStepPlan,
    pub step1: Vec<Vec<FieldMatrix<F>>>,
    pub step2: Vec<Step2Block<F>>,
}

impl<F: Field> TwoStepCode<F> {
    pub fn encode(plan: TwoStepPlan, store: &PieceStore, path: &SeedPath) -> Result<Self> {
        let inventory = encode_step1::<F>(&plan, store, path)?;
        let step2 = encode_step2(&plan, &inventory, path)?;
        Ok(TwoStepCode { plan, step1: inventory.coeffs, step2 })
    }

    /// Recovers, from `cache` alone, every segment of file `file` that `user`
    /// lacks and this code carries.
    pub fn decode(&self, user: usize, file: usize, cache: &PieceStore) -> Result<Vec<(Span, Vec<bool>)>> {
        let plan = &self.plan;
        if !plan.interested.contains(user) {
            return Ok(Vec::new());
        }
        let fail = |reason: String| Error::DecodeFailed { user, reason };

        // Step-1 rows rebuilt from the cache.
        let mut units: Vec<Option<Vec<F::Elem>>> = vec![None; plan.units.len()];
        let mut u = 0;
        for (g, group) in plan.groups.iter().enumerate() {
            for (l, layer) in group.layers.iter().enumerate() {
                if layer.rows == 0 {
                    continue;
                }
                if plan.units[u].knowers.contains(user) {
                    let sources = layer
                        .participants
                        .iter()
                        .map(|&p| cache.symbols::<F>(&group.spec.members[p].slice(layer.lo, layer.hi - layer.lo)))
                        .collect::<Result<Vec<_>>>()?;
                    let refs: Vec<&[F::Elem]> = sources.iter().map(Vec::as_slice).collect();
                    let rows = self.step1[g][l].combine(&refs, plan.units[u].symbols)?;
                    for (r, row) in rows.into_iter().enumerate() {
                        units[u + r] = Some(row);
                    }
                }
                u += layer.rows;
            }
        }

        // Step 2: the remaining rows, layer by layer.
        let mut recovered: Vec<Vec<F::Elem>> = plan
            .units
            .iter()
            .map(|x| if x.knowers.contains(user) { Vec::new() } else { vec![F::zero(); x.symbols] })
            .collect();
        for (layer, block) in plan.step2.iter().zip(&self.step2) {
            let (mut unknown, mut known) = (Vec::new(), Vec::new());
            for (c, &p) in layer.participants.iter().enumerate() {
                if units[p].is_some() {
                    known.push(c);
                } else {
                    unknown.push(c);
                }
            }
            if unknown.is_empty() {
                continue;
            }
            let mut rhs = block.payload.clone();
            for (r, row) in rhs.iter_mut().enumerate() {
                for &c in &known {
                    let src = &units[layer.participants[c]].as_ref().expect("known")[layer.lo..layer.hi];
                    F::mul_add_slice(row, src, block.coeffs.get(r, c));
                }
            }
            let sol =
                block.coeffs.select_columns(&unknown).solve_streams(rhs).map_err(|e| fail(format!("step 2: {e}")))?;
            for (c, s) in unknown.iter().zip(sol) {
                recovered[layer.participants[*c]][layer.lo..layer.hi].copy_from_slice(&s);
            }
        }
        for (slot, rec) in units.iter_mut().zip(recovered) {
            if slot.is_none() {
                *slot = Some(rec);
            }
        }

        // Step 1: the user's own groups.
        let mut out = Vec::new();
        let mut u = 0;
        for (g, group) in plan.groups.iter().enumerate() {
            for (l, layer) in group.layers.iter().enumerate() {
                let first = u;
                u += layer.rows;
                if group.spec.file != file || !group.spec.demanders.contains(user) || layer.rows == 0 {
                    continue;
                }
                let (mut unknown, mut known) = (Vec::new(), Vec::new());
                for (c, &p) in layer.participants.iter().enumerate() {
                    if group.spec.members[p].knowers.contains(user) {
                        known.push(c);
                    } else {
                        unknown.push(c);
                    }
                }
                if unknown.is_empty() {
                    continue;
                }
                let coeffs = &self.step1[g][l];
                let width = layer.hi - layer.lo;
                let mut rhs: Vec<Vec<F::Elem>> =
                    (first..u).map(|x| units[x].clone().expect("all rows known")).collect();
                for &c in &known {
                    let src = cache.symbols::<F>(&group.spec.members[layer.participants[c]].slice(layer.lo, width))?;
                    for (r, row) in rhs.iter_mut().enumerate() {
                        F::mul_add_slice(row, &src, coeffs.get(r, c));
                    }
                }
                let sol =
                    coeffs.select_columns(&unknown).solve_streams(rhs).map_err(|e| fail(format!("step 1: {e}")))?;
                for (c, s) in unknown.iter().zip(sol) {
                    let span = group.spec.members[layer.participants[*c]].slice(layer.lo, width);
                    out.push((span, unpack_bits::<F>(&s, width as usize).collect()));
                }
            }
        }
        Ok(out)
    }
}
