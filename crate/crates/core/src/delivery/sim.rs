use serde::Serialize;

use super::{decode, deliver_centralized, deliver_decentralized, mns_deliver, BroadcastMessage, PieceStore, Scheme};
use crate::analytics::{mns_decentralized_xor, mns_grid_load, r_d, two_step_grid_load};
use crate::combinatorics::{format_rational, to_f64};
use crate::error::{Error, Result};
use crate::field::{Field, FieldKind, Gf256, Gf65536};
use crate::model::{normalized, DemandVector, Library, Mode, ProblemInstance};
use crate::placement::{place_centralized, place_decentralized};

/// Re-encodings with `seed + 1, seed + 2, ...` after a failed attempt.
pub const MAX_RETRIES: u64 = 8;

#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub instance: ProblemInstance,
    pub mode: Mode,
    pub scheme: Scheme,
    pub demands: DemandVector,
    pub seed: u64,
    pub field: FieldKind,
}

/// The plan picked for one decentralized level.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LevelChoice {
    pub level: usize,
    pub chosen: String,
    pub two_step_bits: Option<u64>,
    pub xor_bits: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationReport {
    #[serde(rename = "N")]
    pub files: usize,
    #[serde(rename = "K")]
    pub users: usize,
    #[serde(rename = "M")]
    pub memory: String,
    #[serde(rename = "F")]
    pub file_bits: u64,
    pub mode: Mode,
    pub scheme: Scheme,
    pub field: FieldKind,
    pub seed: u64,
    pub coding_seed: u64,
    pub attempts: u64,
    pub demands: Vec<usize>,
    pub transmitted_bits: u64,
    pub load: String,
    pub normalized_load: f64,
    pub wire_bits: u64,
    pub header_bits: u64,
    pub step1_bits: Option<u64>,
    pub known_step1_bits: Option<Vec<u64>>,
    /// Exact formula value for centralized runs.
    pub expected_load: Option<String>,
    pub matches_formula: Option<bool>,
    /// Formula value the decentralized load approaches as `F` grows.
    pub reference_load: Option<f64>,
    pub decoded: Vec<bool>,
    pub all_decoded: bool,
    pub levels: Vec<LevelChoice>,
    pub failure: Option<String>,
}

pub fn simulate(cfg: &SimulationConfig) -> Result<SimulationReport> {
    match cfg.field {
        FieldKind::Gf256 => run::<Gf256>(cfg),
        FieldKind::Gf65536 => run::<Gf65536>(cfg),
    }
}

fn run<F: Field>(cfg: &SimulationConfig) -> Result<SimulationReport> {
    let inst = &cfg.instance;
    let (n, k) = (inst.files(), inst.users());
    if cfg.demands.users() != k {
        return Err(Error::InvalidDemand(format!("expected {k} entries, got {}", cfg.demands.users())));
    }
    let lib = Library::random(n, inst.file_bits(), cfg.seed);
    let placement = match cfg.mode {
        Mode::Centralized => place_centralized(inst)?,
        Mode::Decentralized => place_decentralized(inst, cfg.seed)?,
    };
    let groups = cfg.demands.groups(n);
    let demanded: Vec<usize> = groups.demanded_files().collect();
    let server = PieceStore::server(&lib, &placement.partition, demanded.iter().copied());
    let caches: Vec<PieceStore> = (0..k).map(|u| PieceStore::user(u, &placement, &lib)).collect();

    let mut failure = None;
    let mut outcome: Option<(BroadcastMessage<F>, Vec<bool>, u64)> = None;
    for attempt in 0..=MAX_RETRIES {
        let coding_seed = cfg.seed.wrapping_add(attempt);
        let encoded = match (cfg.mode, cfg.scheme) {
            (Mode::Centralized, Scheme::Proposed) => {
                deliver_centralized::<F>(inst, &placement, &cfg.demands, &server, coding_seed)
            }
            (Mode::Centralized, Scheme::Mns) => mns_deliver::<F>(inst, &placement, &cfg.demands, &server),
            (Mode::Decentralized, scheme) => {
                deliver_decentralized::<F>(inst, &placement, &cfg.demands, &server, coding_seed, scheme)
            }
        };
        let msg = match encoded {
            Ok(m) => m,
            Err(e @ Error::RankDeficient { .. }) => {
                failure = Some(e.to_string());
                continue;
            }
            Err(e) => return Err(e),
        };
        let mut decoded = Vec::with_capacity(k);
        failure = None;
        for (u, cache) in caches.iter().enumerate() {
            match decode(u, &msg, cache, &placement.partition, &cfg.demands) {
                Ok(bits) => decoded.push(bits.as_bitslice() == lib.file(cfg.demands.file_of(u))),
                Err(e) => {
                    failure.get_or_insert(e.to_string());
                    decoded.push(false);
                }
            }
        }
        let done = failure.is_none();
        outcome = Some((msg, decoded, coding_seed));
        if done {
            break;
        }
    }
    let Some((msg, decoded, coding_seed)) = outcome else {
        return Err(Error::RankDeficient { rank: 0, needed: 0 });
    };

    let bits = msg.bits();
    let load = normalized(bits, inst.file_bits());
    let plans: Vec<_> = msg.two_step_plans().collect();
    let (step1_bits, known_step1_bits) = if cfg.mode == Mode::Centralized && cfg.scheme == Scheme::Proposed {
        let p = plans[0];
        (Some(p.step1_bits()), Some((0..k).map(|u| p.known_step1_bits(u)).collect()))
    } else {
        (None, None)
    };
    let expected = match (cfg.mode, cfg.scheme) {
        (Mode::Centralized, Scheme::Proposed) => {
            Some(two_step_grid_load(demanded.len(), k, inst.level().expect("centralized level")))
        }
        (Mode::Centralized, Scheme::Mns) => Some(mns_grid_load(k, inst.level().expect("centralized level"))),
        (Mode::Decentralized, _) => None,
    };
    let m = to_f64(inst.memory());
    let reference = match (cfg.mode, cfg.scheme) {
        (Mode::Decentralized, Scheme::Proposed) if cfg.demands.is_worst_case(n) => Some(r_d(n, k, m)),
        (Mode::Decentralized, Scheme::Mns) => Some(mns_decentralized_xor(n, k, m)),
        _ => None,
    };
    let all_decoded = decoded.iter().all(|&d| d);
    Ok(SimulationReport {
        files: n,
        users: k,
        memory: format_rational(inst.memory()),
        file_bits: inst.file_bits(),
        mode: cfg.mode,
        scheme: cfg.scheme,
        field: cfg.field,
        seed: cfg.seed,
        coding_seed,
        attempts: coding_seed.wrapping_sub(cfg.seed) + 1,
        demands: cfg.demands.one_based(),
        transmitted_bits: bits,
        normalized_load: to_f64(&load),
        load: format_rational(&load),
        wire_bits: msg.wire_bits(),
        header_bits: msg.header_bits(),
        step1_bits,
        known_step1_bits,
        matches_formula: expected.as_ref().map(|e| *e == load),
        expected_load: expected.as_ref().map(format_rational),
        reference_load: reference,
        failure: if all_decoded { None } else { failure.or_else(|| Some("payload mismatch".into())) },
        decoded,
        all_decoded,
        levels: msg.levels,
    })
}
