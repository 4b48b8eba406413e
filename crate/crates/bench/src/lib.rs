//! Shared fixtures for the benchmarks.

use cocache::combinatorics::rat;
use cocache::delivery::{Scheme, SimulationConfig};
use cocache::{worst_case_demand, FieldKind, Mode, ProblemInstance};

/// A worst-case simulation of `(N, K, M)` with files of `file_bits` bits.
pub fn config(files: usize, users: usize, memory: (i64, i64), file_bits: u64, mode: Mode) -> SimulationConfig {
    let instance = ProblemInstance::new(files, users, rat(memory.0, memory.1), file_bits).expect("valid instance");
    let demands = worst_case_demand(&instance);
    SimulationConfig { instance, mode, scheme: Scheme::Proposed, demands, seed: 1, field: FieldKind::Gf256 }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_simulate() {
        let rep = cocache::delivery::simulate(&config(2, 5, (4, 5), 1000, Mode::Centralized)).unwrap();
        assert_eq!(rep.transmitted_bits, 900);
    }
}
