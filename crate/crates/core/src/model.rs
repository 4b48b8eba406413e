//! Problem instances, demands and the subfile/cache bookkeeping shared by
//! placement and delivery.
//!
//! Files and users are 0-based internally. Demand vectors given on the command
//! line or in descriptors are 1-based and converted at the boundary.

use std::collections::BTreeMap;

use bitvec::prelude::*;
use num::{BigInt, Integer, One, Signed, ToPrimitive};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{binom, format_rational, parse_rational, rat_u, Rational, UserSet};
use crate::error::{Error, Result};
use crate::seed::{label, SeedPath};

/// Placement regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Centralized,
    Decentralized,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "centralized" => Ok(Mode::Centralized),
            "decentralized" => Ok(Mode::Decentralized),
            _ => Err(Error::Descriptor(format!("unknown mode {s:?}"))),
        }
    }
}

/// `N` files of `F` bits each, `K > N` users with caches of `M` files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProblemInstance {
    files: usize,
    users: usize,
    memory: Rational,
    file_bits: u64,
}

/// Parameters of the combinatorial placement at integer level `t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CentralizedLevel {
    pub t: usize,
    pub subfiles: u128,
    pub subfile_bits: u64,
}

impl ProblemInstance {
    pub fn new(files: usize, users: usize, memory: Rational, file_bits: u64) -> Result<Self> {
        if files == 0 || files >= users {
            return Err(Error::InvalidRegime { files, users });
        }
        if users > UserSet::MAX_USERS - 1 {
            return Err(Error::TooManyUsers { users, max: UserSet::MAX_USERS - 1 });
        }
        if memory.is_negative() || memory > rat_u(files as u128) {
            return Err(Error::MemoryOutOfRange { memory: format_rational(&memory), files });
        }
        if file_bits == 0 {
            return Err(Error::EmptyFile);
        }
        Ok(ProblemInstance { files, users, memory, file_bits })
    }

    pub fn files(&self) -> usize {
        self.files
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn memory(&self) -> &Rational {
        &self.memory
    }

    pub fn file_bits(&self) -> u64 {
        self.file_bits
    }

    /// `q = M / N`, the fraction of every file each user stores.
    pub fn cache_fraction(&self) -> Rational {
        &self.memory / rat_u(self.files as u128)
    }

    /// `t = KM / N`, possibly fractional.
    pub fn level_rational(&self) -> Rational {
        self.cache_fraction() * rat_u(self.users as u128)
    }

    /// `t` when it is an integer.
    pub fn level(&self) -> Option<usize> {
        let t = self.level_rational();
        t.is_integer().then(|| t.to_integer().to_usize().expect("0 <= t <= K"))
    }

    /// Checks that the combinatorial placement applies: integral `t` and
    /// `C(K, t)` dividing `F`.
    pub fn centralized_level(&self) -> Result<CentralizedLevel> {
        let t =
            self.level().ok_or_else(|| Error::FractionalLevel { level: format_rational(&self.level_rational()) })?;
        let subfiles = binom(self.users as i64, t as i64);
        if self.file_bits as u128 % subfiles != 0 {
            return Err(Error::GranularityMismatch { file_bits: self.file_bits, subfiles });
        }
        Ok(CentralizedLevel { t, subfiles, subfile_bits: (self.file_bits as u128 / subfiles) as u64 })
    }

    /// Bits each user may cache of a single file in the decentralized placement,
    /// `round(qF)` with halves rounded up.
    pub fn decentralized_bits_per_file(&self) -> u64 {
        let exact = self.cache_fraction() * Rational::from_integer(BigInt::from(self.file_bits));
        let (q, r) = exact.numer().div_rem(exact.denom());
        let twice = r * 2u32;
        let rounded = if &twice >= exact.denom() { q + BigInt::one() } else { q };
        rounded.to_u64().expect("bounded by F")
    }
}

/// File requested by every user, 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DemandVector(Vec<usize>);

impl DemandVector {
    pub fn new(files: usize, demands: Vec<usize>) -> Result<Self> {
        if let Some(&d) = demands.iter().find(|&&d| d >= files) {
            return Err(Error::InvalidDemand(format!("file {} out of range 1..={files}", d + 1)));
        }
        Ok(DemandVector(demands))
    }

    /// From 1-based file indices.
    pub fn from_one_based(files: usize, demands: &[usize]) -> Result<Self> {
        if demands.contains(&0) {
            return Err(Error::InvalidDemand("file indices start at 1".into()));
        }
        Self::new(files, demands.iter().map(|d| d - 1).collect())
    }

    /// Checks the vector against an instance: one entry per user.
    pub fn for_instance(inst: &ProblemInstance, demands: Vec<usize>) -> Result<Self> {
        if demands.len() != inst.users() {
            return Err(Error::InvalidDemand(format!("expected {} entries, got {}", inst.users(), demands.len())));
        }
        Self::new(inst.files(), demands)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn users(&self) -> usize {
        self.0.len()
    }

    pub fn file_of(&self, user: usize) -> usize {
        self.0[user]
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.0.iter().map(|d| d + 1).collect()
    }

    /// Every file is requested by at least one user.
    pub fn is_worst_case(&self, files: usize) -> bool {
        (0..files).all(|f| self.0.contains(&f))
    }

    pub fn groups(&self, files: usize) -> DemandGroups {
        let mut groups = vec![UserSet::empty(); files];
        for (u, &d) in self.0.iter().enumerate() {
            groups[d] = groups[d].with(u);
        }
        DemandGroups { groups }
    }
}

/// The canonical worst-case demand `(1, ..., 1, 2, 3, ..., N)` with `K - N + 1` ones.
pub fn worst_case_demand(inst: &ProblemInstance) -> DemandVector {
    let (n, k) = (inst.files(), inst.users());
    let d = (0..k).map(|u| u.saturating_sub(k - n)).collect();
    DemandVector(d)
}

/// A uniformly shuffled surjective demand: every file once, the rest uniform.
pub fn random_worst_case_demand<R: Rng + ?Sized>(files: usize, users: usize, rng: &mut R) -> DemandVector {
    assert!(files <= users);
    let mut d: Vec<usize> = (0..files).collect();
    d.extend((files..users).map(|_| rng.random_range(0..files)));
    d.shuffle(rng);
    DemandVector(d)
}

/// `G_i`, the users requesting file `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DemandGroups {
    groups: Vec<UserSet>,
}

impl DemandGroups {
    pub fn group(&self, file: usize) -> UserSet {
        self.groups[file]
    }

    pub fn files(&self) -> usize {
        self.groups.len()
    }

    /// Files requested by somebody, in increasing order.
    pub fn demanded_files(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.groups.len()).filter(|&f| !self.groups[f].is_empty())
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, UserSet)> + '_ {
        self.groups.iter().copied().enumerate()
    }
}

/// Which bits of every file each knower set holds.
///
/// `F_{i,W}` is the (sorted) list of bit positions of file `i` cached by exactly
/// the users in `W`. Only nonempty classes are stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubfilePartition {
    file_bits: u64,
    classes: Vec<BTreeMap<UserSet, Vec<u32>>>,
}

impl SubfilePartition {
    pub(crate) fn new(file_bits: u64, classes: Vec<BTreeMap<UserSet, Vec<u32>>>) -> Self {
        SubfilePartition { file_bits, classes }
    }

    pub fn files(&self) -> usize {
        self.classes.len()
    }

    pub fn file_bits(&self) -> u64 {
        self.file_bits
    }

    /// Nonempty subfiles of `file` with their bit positions.
    pub fn subfiles(&self, file: usize) -> impl Iterator<Item = (UserSet, &[u32])> + '_ {
        self.classes[file].iter().map(|(w, p)| (*w, p.as_slice()))
    }

    pub fn positions(&self, file: usize, knowers: UserSet) -> &[u32] {
        self.classes[file].get(&knowers).map_or(&[], Vec::as_slice)
    }

    pub fn size(&self, file: usize, knowers: UserSet) -> u64 {
        self.positions(file, knowers).len() as u64
    }

    /// `|F_{i,W}|` for every nonempty class of `file`.
    pub fn sizes(&self, file: usize) -> BTreeMap<UserSet, u64> {
        self.classes[file].iter().map(|(w, p)| (*w, p.len() as u64)).collect()
    }
}

/// `Z_j`: the subfiles user `j` stores.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CacheState {
    pub user: usize,
    pub items: Vec<(usize, UserSet)>,
    pub bits: u64,
}

impl CacheState {
    pub fn holds(&self, file: usize, knowers: UserSet) -> bool {
        self.items.contains(&(file, knowers))
    }
}

/// The file contents, pseudo-random bits derived from the run seed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Library {
    files: Vec<BitVec<u8, Msb0>>,
}

impl Library {
    pub fn random(files: usize, file_bits: u64, seed: u64) -> Self {
        let files = (0..files)
            .map(|i| {
                let mut rng = SeedPath::new(seed).children(&[label::PAYLOAD, i as u64]).rng();
                let bytes: Vec<u8> = (0..file_bits.div_ceil(8)).map(|_| rng.random()).collect();
                let mut bits = BitVec::<u8, Msb0>::from_vec(bytes);
                bits.truncate(file_bits as usize);
                bits
            })
            .collect();
        Library { files }
    }

    pub fn from_files(files: Vec<BitVec<u8, Msb0>>) -> Self {
        Library { files }
    }

    pub fn file(&self, i: usize) -> &BitSlice<u8, Msb0> {
        &self.files[i]
    }

    pub fn files(&self) -> usize {
        self.files.len()
    }
}

/// JSON instance descriptor, e.g.
/// `{"N": 2, "K": 5, "M": "4/5", "F": 1000, "seed": 7, "mode": "centralized"}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceDescriptor {
    #[serde(rename = "N")]
    pub files: usize,
    #[serde(rename = "K")]
    pub users: usize,
    #[serde(rename = "M")]
    pub memory: String,
    #[serde(rename = "F")]
    pub file_bits: u64,
    #[serde(default)]
    pub seed: u64,
    pub mode: Mode,
}

impl InstanceDescriptor {
    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Descriptor(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("descriptor serializes")
    }

    pub fn instance(&self) -> Result<ProblemInstance> {
        ProblemInstance::new(self.files, self.users, parse_rational(&self.memory)?, self.file_bits)
    }
}

/// Normalized size of a transmission: `bits / F`.
pub fn normalized(bits: u64, file_bits: u64) -> Rational {
    Rational::new(BigInt::from(bits), BigInt::from(file_bits))
}
