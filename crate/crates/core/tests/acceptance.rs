//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p cocache-core --test acceptance`.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use cocache::analytics::{
    centralized_curve, f_value, m_threshold, mns_centralized, mns_continuous, r_co, r_co_curve, r_d, r_d_closed,
    r_d_sum, ThresholdValue,
};
use cocache::bounds::{certify_optimality_n2, closed_form_bound_n2, lp_bound};
use cocache::combinatorics::{pascal_check, rat, subsets_colex, to_f64, vandermonde_known, vandermonde_total};
use cocache::delivery::{simulate, Scheme, SimulationConfig, Span, TwoStepPlan};
use cocache::model::random_worst_case_demand;
use cocache::{
    place_centralized, worst_case_demand, DemandVector, FieldKind, Gf256, Mode, ProblemInstance, Rational, SeedPath,
    UserSet,
};
use num::{BigInt, One, Zero};
use rand::Rng;

const FIGURE_TOL: f64 = 1e-3;
const SUM_VS_CLOSED_TOL: f64 = 1e-9;
const CONVERGENCE_TOL: f64 = 0.02;

type Criterion = fn() -> Result<String, String>;

fn binom(n: i64, k: i64) -> i64 {
    if k < 0 || n < 0 || k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn ratio(a: i64, b: i64) -> Rational {
    Rational::new(BigInt::from(a), BigInt::from(b))
}

/// Two-step load at level `t` from subfile counting.
fn two_step_f64(n: usize, k: usize, t: usize) -> f64 {
    let (n, k, t) = (n as i64, k as i64, t as i64);
    (n * binom(k - 1, t) - (n - 1) * binom(k - 2, t - 1)) as f64 / binom(k, t) as f64
}

fn xor_f64(k: usize, t: usize) -> f64 {
    binom(k as i64, t as i64 + 1) as f64 / binom(k as i64, t as i64) as f64
}

/// Lower convex envelope at `x` as the minimum over chords through `x`.
fn chord_min(pts: &[(f64, f64)], x: f64) -> f64 {
    let mut best = f64::INFINITY;
    for &(xa, ya) in pts {
        for &(xb, yb) in pts {
            if xa <= x && x <= xb {
                let v = if xb == xa { ya.min(yb) } else { ya + (yb - ya) * (x - xa) / (xb - xa) };
                best = best.min(v);
            }
        }
    }
    best
}

fn proposed_points(n: usize, k: usize) -> Vec<(f64, f64)> {
    let nf = n as f64;
    let mut pts: Vec<_> =
        (0..=k).map(|t| (t as f64 * nf / k as f64, two_step_f64(n, k, t).min(xor_f64(k, t)))).collect();
    pts.push((1.0 / k as f64, nf * (1.0 - 1.0 / k as f64)));
    pts
}

fn mns_points(n: usize, k: usize) -> Vec<(f64, f64)> {
    let nf = n as f64;
    let mut pts: Vec<_> = (0..=k)
        .map(|t| {
            let m = t as f64 * nf / k as f64;
            (m, xor_f64(k, t).min(nf - m))
        })
        .collect();
    pts.push((1.0 / k as f64, nf * (1.0 - 1.0 / k as f64)));
    pts
}

/// Per-level mixture with the cheaper code at each level.
fn r_d_oracle(n: usize, k: usize, m: f64) -> f64 {
    let q = m / n as f64;
    (0..k)
        .map(|i| {
            let (ni, ki, ii) = (n as i64, k as i64, i as i64);
            let two = (ni * binom(ki - 1, ii) - (ni - 1) * binom(ki - 2, ii - 1)) as f64;
            let xor = binom(ki, ii + 1) as f64;
            two.min(xor) * q.powi(i as i32) * (1.0 - q).powi((k - i) as i32)
        })
        .sum()
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn worked_example() -> Result<String, String> {
    let inst = ProblemInstance::new(2, 5, rat(4, 5), 1000).map_err(|e| e.to_string())?;
    let d = DemandVector::from_one_based(2, &[1, 1, 1, 2, 2]).map_err(|e| e.to_string())?;
    let rec = place_centralized(&inst).map_err(|e| e.to_string())?;
    let spans: Vec<Span> = (0..2)
        .flat_map(|f| rec.partition.subfiles(f).map(move |(w, pos)| Span::whole(f, w, pos.len() as u32)))
        .collect();
    let groups = d.groups(2);
    let plan = TwoStepPlan::new::<Gf256>(&spans, &groups);

    // Group sizes by direct counting over the 2-subsets of five users.
    let mut expected: Vec<(usize, UserSet, u64)> = Vec::new();
    for file in 0..2 {
        let g = groups.group(file);
        let mut leftovers: Vec<UserSet> = subsets_colex(5, 2).map(|w| w.difference(g)).collect();
        leftovers.sort();
        leftovers.dedup();
        for j in leftovers {
            let members: Vec<UserSet> = subsets_colex(5, 2).filter(|w| w.difference(g) == j).collect();
            let known = g.iter().map(|u| members.iter().filter(|w| w.contains(u)).count()).min().unwrap();
            expected.push((file, j, 100 * (members.len() - known) as u64));
        }
    }
    let mut got: Vec<(usize, UserSet, u64)> =
        plan.groups.iter().map(|p| (p.spec.file, p.spec.leftover, p.code_bits())).collect();
    got.sort();
    expected.sort();
    ensure(got == expected, format!("step-1 sizes {got:?} vs {expected:?}"))?;
    let mut sizes: Vec<u64> = got.iter().map(|g| g.2).collect();
    sizes.sort();
    ensure(sizes == [0, 100, 100, 100, 100, 100, 100, 100, 100, 200, 200], format!("size multiset {sizes:?}"))?;

    let cfg = |scheme| SimulationConfig {
        instance: inst.clone(),
        mode: Mode::Centralized,
        scheme,
        demands: d.clone(),
        seed: 1,
        field: FieldKind::Gf256,
    };
    let rep = simulate(&cfg(Scheme::Proposed)).map_err(|e| e.to_string())?;
    ensure(rep.step1_bits == Some(1200), format!("step-1 total {:?}", rep.step1_bits))?;
    ensure(rep.known_step1_bits == Some(vec![300; 5]), format!("known {:?}", rep.known_step1_bits))?;
    ensure(rep.transmitted_bits == 900, format!("sent {}", rep.transmitted_bits))?;
    ensure(rep.all_decoded, "a user failed to decode")?;
    let mns = simulate(&cfg(Scheme::Mns)).map_err(|e| e.to_string())?;
    ensure(mns.transmitted_bits == 1000 && mns.all_decoded, format!("MNS sent {}", mns.transmitted_bits))?;
    Ok("step-1 1200, known 300/user, sent 900, MNS 1000, all decode".into())
}

fn thresholds() -> Result<String, String> {
    let th = m_threshold(2, 5).map_err(|e| e.to_string())?;
    ensure(th.m_th == ThresholdValue::Exact(rat(6, 5)), format!("M_th(2,5) = {}", th.to_display()))?;
    ensure(f_value(4, 8) == 289, format!("f(4,8) = {}", f_value(4, 8)))?;
    let th = m_threshold(4, 8).map_err(|e| e.to_string())?;
    ensure(th.m_th == ThresholdValue::Exact(rat(2, 3)), format!("M_th(4,8) = {}", th.to_display()))?;

    // Root of the threshold quadratic in floating point.
    for (n, k, want) in [(2usize, 5usize, 1.2f64), (4, 8, 2.0 / 3.0)] {
        let (nf, kf) = (n as f64, k as f64);
        let a = nf * kf - 2.0 * nf + 1.0;
        let f = a * a - 4.0 * (nf - 1.0) * (kf - nf) * (kf - 1.0);
        let m = nf * (a - f.sqrt()) / (2.0 * kf * (nf - 1.0));
        ensure((m - want).abs() < 1e-12, format!("quadratic root at ({n},{k}) is {m}"))?;
    }
    // R_co meets the continuous XOR load at M_th; at (4,8) the sign flips there.
    for (n, k, m) in [(2usize, 5usize, rat(6, 5)), (4, 8, rat(2, 3))] {
        ensure(r_co(n, k, &m) == mns_continuous(n, k, &m), format!("R_co and MNS differ at M_th({n},{k})"))?;
    }
    let gap = |m: f64| {
        let rco = 4.0 - m - m * 3.0 * 8.0 * (4.0 - m) / (16.0 * 7.0);
        let t = 2.0 * m;
        rco - (8.0 - t) / (1.0 + t)
    };
    let (mut lo, mut hi) = (1e-6, 2.0);
    ensure(gap(lo) < 0.0 && gap(hi) > 0.0, "no sign change at (4,8)")?;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gap(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    ensure((lo - 2.0 / 3.0).abs() < 1e-9, format!("crossover at (4,8) is {lo}"))?;
    Ok("M_th(2,5)=6/5, f(4,8)=289, M_th(4,8)=2/3, crossover agrees".into())
}

fn figure_corners() -> Result<String, String> {
    let one = Rational::one();
    let p = centralized_curve(2, 10).map_err(|e| e.to_string())?.eval(&one).ok_or("out of range")?;
    let m = mns_centralized(2, 10).map_err(|e| e.to_string())?.eval(&one).ok_or("out of range")?;
    ensure(p == rat(13, 18), format!("proposed = {p}"))?;
    let (pf, mf) = (to_f64(&p), to_f64(&m));
    ensure((pf - 0.722).abs() <= FIGURE_TOL, format!("proposed {pf}"))?;
    ensure((mf - 0.794).abs() <= FIGURE_TOL, format!("MNS {mf}"))?;
    ensure((pf - chord_min(&proposed_points(2, 10), 1.0)).abs() < 1e-12, "proposed disagrees with chord oracle")?;
    ensure((mf - chord_min(&mns_points(2, 10), 1.0)).abs() < 1e-12, "MNS disagrees with chord oracle")?;
    Ok(format!("proposed {pf:.4}, MNS {mf:.4}"))
}

fn decentralized_formula() -> Result<String, String> {
    let v = r_d(4, 8, 1.2);
    ensure((v - 1.894).abs() <= FIGURE_TOL, format!("R_d(4,8,1.2) = {v}"))?;
    ensure((v - r_d_oracle(4, 8, 1.2)).abs() < 1e-12, "R_d disagrees with per-level oracle")?;
    let mut rng = SeedPath::new(2024).rng();
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let k = rng.random_range(3..=30);
        let n = rng.random_range(2..k);
        let m = rng.random_range(0.01..n as f64);
        let sum = r_d_sum(n, k, m);
        let closed = r_d_closed(n, k, m).map_err(|e| e.to_string())?;
        worst = worst.max((sum - closed).abs());
    }
    ensure(worst <= SUM_VS_CLOSED_TOL, format!("max |sum - closed| = {worst:e}"))?;
    Ok(format!("R_d = {v:.4}, max |sum - closed| = {worst:.1e}"))
}

fn decentralized_simulation() -> Result<String, String> {
    let start = Instant::now();
    let inst = ProblemInstance::new(4, 8, rat(6, 5), 100_000).map_err(|e| e.to_string())?;
    let d = worst_case_demand(&inst);
    let reference = r_d_oracle(4, 8, 1.2);
    let mut loads = Vec::new();
    for seed in 1..=5 {
        let rep = simulate(&SimulationConfig {
            instance: inst.clone(),
            mode: Mode::Decentralized,
            scheme: Scheme::Proposed,
            demands: d.clone(),
            seed,
            field: FieldKind::Gf256,
        })
        .map_err(|e| e.to_string())?;
        ensure(rep.all_decoded, format!("seed {seed}: {:?}", rep.failure))?;
        let rel = (rep.normalized_load - reference).abs() / reference;
        ensure(rel <= CONVERGENCE_TOL, format!("seed {seed}: load {} vs {reference}", rep.normalized_load))?;
        loads.push(rep.normalized_load);
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(60), format!("took {elapsed:?}"))?;
    let mean = loads.iter().sum::<f64>() / loads.len() as f64;
    Ok(format!("mean load {mean:.4} vs R_d {reference:.4}, {:.1}s", elapsed.as_secs_f64()))
}

fn outer_bound() -> Result<String, String> {
    let b = lp_bound(2, 5, &rat(4, 5)).map_err(|e| e.to_string())?;
    ensure(b.value == rat(9, 10), format!("lp_bound(2,5,4/5) = {}", b.value))?;
    let mut points = 0;
    for k in 3..=10usize {
        for j in 0..40i64 {
            let m = ratio(2 * j, 39);
            let lp = lp_bound(2, k, &m).map_err(|e| e.to_string())?.value;
            let closed = closed_form_bound_n2(k, &m);
            ensure(lp == closed, format!("K={k} M={m}: {lp} vs {closed}"))?;
            points += 1;
        }
        let cert = certify_optimality_n2(k).map_err(|e| e.to_string())?;
        ensure(cert.certified, format!("K={k} not certified"))?;
    }
    Ok(format!("9/10 exact, {points} closed-form points, K=3..10 certified"))
}

fn identities() -> Result<String, String> {
    let start = Instant::now();
    let mut triples = 0;
    for k in 2..=10usize {
        for g in 1..=k {
            let group = UserSet((1u32 << g) - 1);
            for t in 0..=k {
                // Step-1 groups of file demanded by `group`, counted by enumeration.
                let mut rows_total = 0i64;
                let mut known_total = 0i64;
                let outsider = g; // first user outside the group, if any
                let mut leftovers: Vec<UserSet> = subsets_colex(k, t).map(|w| w.difference(group)).collect();
                leftovers.sort();
                leftovers.dedup();
                for j in leftovers {
                    let members: Vec<UserSet> = subsets_colex(k, t).filter(|w| w.difference(group) == j).collect();
                    let known = group.iter().map(|u| members.iter().filter(|w| w.contains(u)).count()).min().unwrap();
                    let rows = (members.len() - known) as i64;
                    let jl = j.len() as i64;
                    ensure(members.len() as i64 == binom(g as i64, t as i64 - jl), "group size")?;
                    ensure(rows == binom(g as i64 - 1, t as i64 - jl), format!("rows g={g} K={k} t={t}"))?;
                    ensure(pascal_check(g as i64, t as i64, jl), format!("pascal_check g={g} t={t} j={jl}"))?;
                    rows_total += rows;
                    if j.contains(outsider) {
                        known_total += rows;
                    }
                }
                ensure(rows_total == binom(k as i64 - 1, t as i64), format!("total g={g} K={k} t={t}"))?;
                ensure(vandermonde_total(g, k, t) as i64 == rows_total, "vandermonde_total")?;
                if g < k {
                    ensure(known_total == binom(k as i64 - 2, t as i64 - 1), format!("known g={g} K={k} t={t}"))?;
                    ensure(vandermonde_known(g, k, t) as i64 == known_total, "vandermonde_known")?;
                }
                triples += 1;
            }
        }
    }

    let mut rng = SeedPath::new(77).rng();
    let mut cases = 0;
    for k in 3..=8usize {
        for n in 1..k {
            for t in 0..=k {
                for _ in 0..2 {
                    let f = binom(k as i64, t as i64) as u64;
                    let m = ratio((t * n) as i64, k as i64);
                    let inst = ProblemInstance::new(n, k, m.clone(), f).map_err(|e| e.to_string())?;
                    let d = random_worst_case_demand(n, k, &mut rng);
                    let rep = simulate(&SimulationConfig {
                        instance: inst,
                        mode: Mode::Centralized,
                        scheme: Scheme::Proposed,
                        demands: d,
                        seed: cases,
                        field: FieldKind::Gf256,
                    })
                    .map_err(|e| e.to_string())?;
                    ensure(rep.all_decoded, format!("N={n} K={k} t={t}: {:?}", rep.failure))?;
                    // R_co written out independently of the library.
                    let (nn, kk) = (ratio(n as i64, 1), ratio(k as i64, 1));
                    let rco = &nn
                        - &m
                        - &m * (&nn - Rational::one()) * &kk * (&nn - &m) / (&nn * &nn * (&kk - Rational::one()));
                    let want = rco * ratio(f as i64, 1);
                    ensure(
                        want.is_integer() && want == ratio(rep.transmitted_bits as i64, 1),
                        format!("N={n} K={k} t={t}: sent {} vs {want}", rep.transmitted_bits),
                    )?;
                    cases += 1;
                }
            }
        }
    }
    ensure(cases >= 200, format!("only {cases} cases"))?;
    Ok(format!("{triples} (g,K,t) triples, {cases} simulated loads, {:.1}s", start.elapsed().as_secs_f64()))
}

fn monotonicity() -> Result<String, String> {
    for (n, k) in [(2usize, 10usize), (4, 8), (3, 7), (2, 5), (5, 9)] {
        let curve = centralized_curve(n, k).map_err(|e| e.to_string())?;
        ensure(curve.is_convex() && curve.is_non_increasing(), format!("({n},{k}) envelope shape"))?;
        let rco = r_co_curve(n, k).map_err(|e| e.to_string())?;
        ensure(rco.is_convex() && rco.is_non_increasing(), format!("({n},{k}) R_co envelope shape"))?;
        for t in 0..=k {
            let m = ratio((t * n) as i64, k as i64);
            ensure(r_co(n, k, &m) <= ratio(n as i64, 1) - &m, format!("({n},{k}) t={t}: R_co > N - M"))?;
        }
    }
    for (n, k) in [(2usize, 10usize), (4, 8), (3, 7)] {
        let prop = centralized_curve(n, k).map_err(|e| e.to_string())?;
        let mns = mns_centralized(n, k).map_err(|e| e.to_string())?;
        for j in 0..100i64 {
            let m = ratio(n as i64 * j, 99);
            let (p, q) = (prop.eval(&m).ok_or("range")?, mns.eval(&m).ok_or("range")?);
            ensure(p <= q, format!("({n},{k}) M={m}: proposed {p} > MNS {q}"))?;
        }
    }
    ensure(!centralized_curve(2, 10).unwrap().eval(&Rational::zero()).unwrap().is_zero(), "load at M=0")?;
    Ok("convex, non-increasing, R_co <= N-M, proposed <= MNS".into())
}

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 8] = [
        ("worked example", worked_example),
        ("threshold values", thresholds),
        ("centralized figure corners", figure_corners),
        ("decentralized formula", decentralized_formula),
        ("decentralized simulation", decentralized_simulation),
        ("outer bound and optimality", outer_bound),
        ("identity suite", identities),
        ("monotonicity and dominance", monotonicity),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {name} ({detail}) [{secs:.2}s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {name} ({why}) [{secs:.2}s]", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}
