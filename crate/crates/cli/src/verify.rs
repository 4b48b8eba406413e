//! Identity checks by brute-force enumeration and a randomized decode battery.

use rand::Rng;

use cocache::analytics::{
    expected_level_choice, level_two_step_units, level_xor_units, m_threshold, r_d_closed, r_d_sum,
};
use cocache::combinatorics::{binom, pascal_check, rat, subsets_colex, vandermonde_known, vandermonde_total};
use cocache::delivery::{simulate, Scheme, SimulationConfig};
use cocache::model::random_worst_case_demand;
use cocache::{FieldKind, Mode, ProblemInstance, SeedPath, UserSet};

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    /// Largest `K` for the enumerations.
    pub max_users: usize,
    /// Largest `K` for the threshold property.
    pub max_threshold_users: usize,
    pub trials: usize,
    pub seed: u64,
}

impl VerifyOptions {
    pub fn new(quick: bool, trials: Option<usize>, seed: u64) -> Self {
        let (max_users, max_threshold_users, default_trials) = if quick { (7, 20, 20) } else { (10, 60, 200) };
        VerifyOptions { max_users, max_threshold_users, trials: trials.unwrap_or(default_trials), seed }
    }
}

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, f: impl FnOnce() -> Result<String, String>) -> CheckResult {
    match f() {
        Ok(detail) => CheckResult { name, passed: true, detail },
        Err(detail) => CheckResult { name, passed: false, detail },
    }
}

/// Step-1 rows of every group for a demand group `{0..g}`, counted directly.
/// Returns `(leftover, members, rows)` per group.
fn enumerate_groups(k: usize, g: usize, t: usize) -> Vec<(UserSet, usize, usize)> {
    let group = UserSet((1u32 << g) - 1);
    let mut leftovers: Vec<UserSet> = subsets_colex(k, t).map(|w| w.difference(group)).collect();
    leftovers.sort();
    leftovers.dedup();
    leftovers
        .into_iter()
        .map(|j| {
            let members: Vec<UserSet> = subsets_colex(k, t).filter(|w| w.difference(group) == j).collect();
            let known = group.iter().map(|u| members.iter().filter(|w| w.contains(u)).count()).min().unwrap_or(0);
            (j, members.len(), members.len() - known)
        })
        .collect()
}

fn triples(max_k: usize) -> impl Iterator<Item = (usize, usize, usize)> {
    (2..=max_k).flat_map(|k| (1..=k).flat_map(move |g| (0..=k).map(move |t| (k, g, t))))
}

fn pascal(max_k: usize) -> Result<String, String> {
    let mut n = 0;
    for (k, g, t) in triples(max_k) {
        for (j, members, rows) in enumerate_groups(k, g, t) {
            let (g, t, j) = (g as i64, t as i64, j.len() as i64);
            if members as u128 != binom(g, t - j) || rows as u128 != binom(g - 1, t - j) || !pascal_check(g, t, j) {
                return Err(format!("K={k} g={g} t={t} |J|={j}: {members} members, {rows} rows"));
            }
            n += 1;
        }
    }
    Ok(format!("{n} groups, K <= {max_k}"))
}

fn vandermonde(max_k: usize, known: bool) -> Result<String, String> {
    let mut n = 0;
    for (k, g, t) in triples(max_k) {
        if known && g == k {
            continue;
        }
        let outsider = g;
        let sum: usize = enumerate_groups(k, g, t)
            .into_iter()
            .filter(|(j, _, _)| !known || j.contains(outsider))
            .map(|(_, _, rows)| rows)
            .sum();
        let (want, formula) = if known {
            (binom(k as i64 - 2, t as i64 - 1), vandermonde_known(g, k, t))
        } else {
            (binom(k as i64 - 1, t as i64), vandermonde_total(g, k, t))
        };
        if sum as u128 != want || formula != want {
            return Err(format!("K={k} g={g} t={t}: enumerated {sum}, formula {formula}, expected {want}"));
        }
        n += 1;
    }
    Ok(format!("{n} (g,K,t) triples"))
}

fn threshold_levels(max_k: usize) -> Result<String, String> {
    let mut n = 0;
    for k in 3..=max_k {
        for files in 2..k {
            let th = m_threshold(files, k).map_err(|e| format!("N={files} K={k}: {e}"))?;
            for i in 0..k {
                let (two, xor) = (level_two_step_units(files, k, i), level_xor_units(k, i));
                let chosen_ok = if expected_level_choice(files, k, i) { two <= xor } else { xor <= two };
                if !chosen_ok {
                    return Err(format!("N={files} K={k} level {i}: floor(t_th) = {}", th.level_floor()));
                }
                n += 1;
            }
        }
    }
    Ok(format!("{n} levels, K <= {max_k}"))
}

fn rd_closed_form(seed: u64) -> Result<String, String> {
    let mut rng = SeedPath::new(seed).child(1).rng();
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let k = rng.random_range(3..=30);
        let n = rng.random_range(2..k);
        let m = rng.random_range(0.01..n as f64);
        let closed = r_d_closed(n, k, m).map_err(|e| e.to_string())?;
        worst = worst.max((r_d_sum(n, k, m) - closed).abs());
    }
    if worst <= 1e-9 {
        Ok(format!("100 points, max difference {worst:.1e}"))
    } else {
        Err(format!("max difference {worst:e}"))
    }
}

/// Random centralized round trips, with every fifth trial decentralized.
fn decode_battery(trials: usize, seed: u64) -> Result<String, String> {
    let mut rng = SeedPath::new(seed).child(2).rng();
    let mut ok = 0;
    let mut first_failure = None;
    for trial in 0..trials {
        let k = rng.random_range(3..=7);
        let n = rng.random_range(2..k);
        let decentralized = trial % 5 == 4;
        let (memory, file_bits, mode) = if decentralized {
            let m = rng.random_range(1..n * 4);
            (rat(m as i64, 4), 2000, Mode::Decentralized)
        } else {
            let t = rng.random_range(0..=k);
            (
                rat((t * n) as i64, k as i64),
                binom(k as i64, t as i64) as u64 * rng.random_range(1..=4),
                Mode::Centralized,
            )
        };
        let instance = ProblemInstance::new(n, k, memory, file_bits).map_err(|e| e.to_string())?;
        let demands = random_worst_case_demand(n, k, &mut rng);
        let cfg = SimulationConfig {
            instance,
            mode,
            scheme: Scheme::Proposed,
            demands,
            seed: seed.wrapping_add(trial as u64),
            field: FieldKind::Gf256,
        };
        match simulate(&cfg) {
            Ok(rep) if rep.all_decoded && rep.matches_formula != Some(false) => ok += 1,
            Ok(rep) => {
                first_failure.get_or_insert(format!("trial {trial}: {:?}", rep.failure));
            }
            Err(e) => {
                first_failure.get_or_insert(format!("trial {trial}: {e}"));
            }
        }
    }
    match first_failure {
        None => Ok(format!("{ok}/{trials} exact recoveries")),
        Some(f) => Err(format!("{ok}/{trials} exact recoveries; {f}")),
    }
}

pub fn run_checks(opts: &VerifyOptions) -> Vec<CheckResult> {
    vec![
        check("pascal", || pascal(opts.max_users)),
        check("vandermonde-total", || vandermonde(opts.max_users, false)),
        check("vandermonde-known", || vandermonde(opts.max_users, true)),
        check("threshold-levels", || threshold_levels(opts.max_threshold_users)),
        check("rd-sum-vs-closed-form", || rd_closed_form(opts.seed)),
        check("decode-battery", || decode_battery(opts.trials, opts.seed)),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_checks_pass() {
        let results = run_checks(&VerifyOptions::new(true, Some(10), 3));
        for r in &results {
            assert!(r.passed, "{}: {}", r.name, r.detail);
        }
        assert_eq!(results.len(), 6);
    }

    #[test]
    fn example_groups_by_enumeration() {
        // K=5, t=2, demand group {1,2,3}.
        let mut rows: Vec<(String, usize)> =
            enumerate_groups(5, 3, 2).into_iter().map(|(j, _, r)| (j.to_string(), r)).collect();
        rows.sort();
        assert_eq!(rows, [("{4,5}".to_string(), 1), ("{4}".into(), 2), ("{5}".into(), 2), ("{}".into(), 1)]);
    }
}
