//! Closed-form memory-load curves.
//!
//! Centralized quantities are exact rationals. Decentralized loads are binomial
//! mixtures evaluated in `f64`, with an exact variant for rational `M`.

use num::{BigInt, Integer, One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::bounds::lp_bound;
use crate::combinatorics::{binom, format_rational, lower_convex_envelope, rat_int, to_f64, Envelope, Rational};
use crate::error::{Error, Result};

fn r(v: i64) -> Rational {
    rat_int(v as i128)
}

fn check_regime(n: usize, k: usize) -> Result<()> {
    if n == 0 || n >= k {
        return Err(Error::InvalidRegime { files: n, users: k });
    }
    Ok(())
}

/// `R_co(M) = N - M - M(N-1)K(N-M) / (N^2 (K-1))`.
pub fn r_co(n: usize, k: usize, m: &Rational) -> Rational {
    let (nn, kk) = (r(n as i64), r(k as i64));
    let tail = m * (&nn - r(1)) * &kk * (&nn - m) / (&nn * &nn * (&kk - r(1)));
    &nn - m - tail
}

/// Two-step load at integer level `t` with `n` demanded files:
/// `[n C(K-1,t) - (n-1) C(K-2,t-1)] / C(K,t)`.
pub fn two_step_grid_load(n: usize, k: usize, t: usize) -> Rational {
    Rational::new(BigInt::from(level_two_step_units(n, k, t)), BigInt::from(binom(k as i64, t as i64)))
}

/// XOR delivery at integer level `t`: `C(K,t+1) / C(K,t)`.
pub fn mns_grid_load(k: usize, t: usize) -> Rational {
    Rational::new(BigInt::from(binom(k as i64, t as i64 + 1)), BigInt::from(binom(k as i64, t as i64)))
}

/// Subfile units sent by the two-step code at level `i`.
pub fn level_two_step_units(n: usize, k: usize, i: usize) -> i128 {
    let (n, k, i) = (n as i64, k as i64, i as i64);
    n as i128 * binom(k - 1, i) as i128 - (n - 1) as i128 * binom(k - 2, i - 1) as i128
}

/// Subfile units sent by the XOR code at level `i`.
pub fn level_xor_units(k: usize, i: usize) -> i128 {
    binom(k as i64, i as i64 + 1) as i128
}

/// `M_th`, exact when `f(N,K)` is a perfect square.
#[derive(Debug, Clone, PartialEq)]
pub enum ThresholdValue {
    Exact(Rational),
    Irrational(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Threshold {
    pub files: usize,
    pub users: usize,
    pub f: i128,
    pub m_th: ThresholdValue,
    pub t_th: f64,
}

/// `f(N,K) = (NK - 2N + 1)^2 - 4(N-1)(K-N)(K-1)`.
pub fn f_value(n: usize, k: usize) -> i128 {
    let (n, k) = (n as i128, k as i128);
    let a = n * k - 2 * n + 1;
    a * a - 4 * (n - 1) * (k - n) * (k - 1)
}

fn isqrt(v: i128) -> i128 {
    let mut x = (v as f64).sqrt() as i128;
    while x * x > v {
        x -= 1;
    }
    while (x + 1) * (x + 1) <= v {
        x += 1;
    }
    x
}

/// `M_th = N (NK - 2N + 1 - sqrt f) / (2K(N-1))` and `t_th = K M_th / N`.
pub fn m_threshold(n: usize, k: usize) -> Result<Threshold> {
    check_regime(n, k)?;
    if n < 2 {
        return Err(Error::InvalidRegime { files: n, users: k });
    }
    let f = f_value(n, k);
    if f < 0 {
        return Err(Error::NegativeDiscriminant { f });
    }
    let a = (n * k - 2 * n + 1) as i128;
    let den = 2 * k as i128 * (n as i128 - 1);
    let root = isqrt(f);
    let m_th = if root * root == f {
        ThresholdValue::Exact(Rational::new(BigInt::from(n as i128 * (a - root)), BigInt::from(den)))
    } else {
        ThresholdValue::Irrational(n as f64 * (a as f64 - (f as f64).sqrt()) / den as f64)
    };
    let t_th = (a as f64 - (f as f64).sqrt()) / (2.0 * (n as f64 - 1.0));
    Ok(Threshold { files: n, users: k, f, m_th, t_th })
}

impl Threshold {
    pub fn m_th_f64(&self) -> f64 {
        match &self.m_th {
            ThresholdValue::Exact(v) => to_f64(v),
            ThresholdValue::Irrational(v) => *v,
        }
    }

    fn a(&self) -> i128 {
        let (n, k) = (self.files as i128, self.users as i128);
        n * k - 2 * n + 1
    }

    /// `M < M_th`, decided exactly.
    pub fn below(&self, m: &Rational) -> bool {
        // x = 2K(N-1)M/N; M < M_th iff sqrt f < a - x.
        let (n, k) = (self.files as i64, self.users as i64);
        let x = m * r(2 * k * (n - 1)) / r(n);
        let gap = rat_int(self.a()) - x;
        gap.is_positive() && rat_int(self.f) < &gap * &gap
    }

    /// `t < t_th`, decided exactly.
    pub fn level_below(&self, t: usize) -> bool {
        let gap = self.a() - 2 * (self.files as i128 - 1) * t as i128;
        gap > 0 && self.f < gap * gap
    }

    /// `floor(t_th)`, decided exactly.
    pub fn level_floor(&self) -> usize {
        let mut t = 0;
        loop {
            let gap = self.a() - 2 * (self.files as i128 - 1) * (t as i128 + 1);
            if gap >= 0 && self.f <= gap * gap {
                t += 1;
            } else {
                return t;
            }
        }
    }

    pub fn to_display(&self) -> String {
        match &self.m_th {
            ThresholdValue::Exact(v) => format_rational(v),
            ThresholdValue::Irrational(v) => format!("{v:.12}"),
        }
    }
}

/// Memory grid `tN/K`, `t = 0..=K`.
pub fn memory_grid(n: usize, k: usize) -> Vec<Rational> {
    (0..=k).map(|t| Rational::new(BigInt::from(t * n), BigInt::from(k))).collect()
}

/// The small-cache point `(1/K, N(1 - 1/K))`.
pub fn small_cache_point(n: usize, k: usize) -> (Rational, Rational) {
    let m = Rational::new(BigInt::one(), BigInt::from(k));
    let load = r(n as i64) * (Rational::one() - &m);
    (m, load)
}

/// Lower convex envelope of the two-step loads at every grid point.
pub fn r_co_curve(n: usize, k: usize) -> Result<Envelope> {
    check_regime(n, k)?;
    let pts: Vec<_> = (0..=k).map(|t| (memory_grid(n, k)[t].clone(), two_step_grid_load(n, k, t))).collect();
    lower_convex_envelope(&pts)
}

/// Lower convex envelope of the scheme achieving the better of the two-step and
/// XOR loads at every grid point, memory-shared with the small-cache point.
pub fn centralized_curve(n: usize, k: usize) -> Result<Envelope> {
    check_regime(n, k)?;
    let threshold = m_threshold(n, k);
    let mut pts = vec![small_cache_point(n, k)];
    for (t, m) in memory_grid(n, k).into_iter().enumerate() {
        let two = two_step_grid_load(n, k, t);
        let xor = mns_grid_load(k, t);
        let load = match &threshold {
            Ok(th) if th.below(&m) => two,
            Ok(_) => xor,
            Err(_) => two.min(xor),
        };
        pts.push((m, load));
    }
    pts.push((Rational::zero(), r(n as i64)));
    pts.push((r(n as i64), Rational::zero()));
    lower_convex_envelope(&pts)
}

/// `K(1 - M/N) / (1 + KM/N)`, the XOR load with `t = KM/N` taken as a real.
pub fn mns_continuous(n: usize, k: usize, m: &Rational) -> Rational {
    let t = m * r(k as i64) / r(n as i64);
    (r(k as i64) - &t) / (Rational::one() + t)
}

/// XOR-delivery corner `K(1 - M/N) min{1/(1+t), N/K}` at `M = tN/K`.
pub fn mns_corner(n: usize, k: usize, t: usize) -> Rational {
    let coded = mns_grid_load(k, t);
    let uncoded = Rational::new(BigInt::from(n * (k - t)), BigInt::from(k));
    coded.min(uncoded)
}

pub fn mns_centralized(n: usize, k: usize) -> Result<Envelope> {
    check_regime(n, k)?;
    let mut pts: Vec<_> = (0..=k).map(|t| (memory_grid(n, k)[t].clone(), mns_corner(n, k, t))).collect();
    pts.push(small_cache_point(n, k));
    lower_convex_envelope(&pts)
}

/// `K(1-q) min{(N/(KM))(1 - (1-q)^K), N/K}`, `q = M/N`.
pub fn mns_decentralized(n: usize, k: usize, m: f64) -> f64 {
    let (nf, kf) = (n as f64, k as f64);
    if m <= 0.0 {
        return nf;
    }
    let q = m / nf;
    kf * (1.0 - q) * ((nf / (kf * m)) * (1.0 - (1.0 - q).powi(k as i32))).min(nf / kf)
}

/// Per-level XOR without the uncoded alternative: `((1-q)/q)(1 - (1-q)^K)`.
pub fn mns_decentralized_xor(n: usize, k: usize, m: f64) -> f64 {
    if m <= 0.0 {
        return k as f64;
    }
    let q = m / n as f64;
    (1.0 - q) / q * (1.0 - (1.0 - q).powi(k as i32))
}

/// Number of levels sent by the two-step code: `floor(t_th) + 1`, or a
/// per-level minimum when the threshold is not real.
fn level_uses_two_step(n: usize, k: usize, i: usize) -> bool {
    match m_threshold(n, k) {
        Ok(th) => i <= th.level_floor(),
        Err(_) => level_two_step_units(n, k, i) <= level_xor_units(k, i),
    }
}

/// Expected per-level choice: `true` for the two-step code.
pub fn expected_level_choice(n: usize, k: usize, i: usize) -> bool {
    level_uses_two_step(n, k, i)
}

/// `R_d(M)` as the per-level sum.
pub fn r_d_sum(n: usize, k: usize, m: f64) -> f64 {
    let q = m / n as f64;
    (0..k)
        .map(|i| {
            let units = if level_uses_two_step(n, k, i) {
                level_two_step_units(n, k, i) as f64
            } else {
                level_xor_units(k, i) as f64
            };
            units * q.powi(i as i32) * (1.0 - q).powi((k - i) as i32)
        })
        .sum()
}

/// `C(x, y, q) = sum_{i=0}^{x} C(y,i) q^i (1-q)^(y-i)`, zero for negative `x`.
pub fn binomial_cdf(x: i64, y: i64, q: f64) -> f64 {
    (0..=x.min(y)).map(|i| binom(y, i) as f64 * q.powi(i as i32) * (1.0 - q).powi((y - i) as i32)).sum()
}

/// `R_d(M)` in closed form with `T = floor(t_th)`:
/// `N(1-q) C(T,K-1,q) - (N-1) q (1-q) C(T-1,K-2,q) + ((1-q)/q)(1 - C(T+1,K,q))`.
pub fn r_d_closed(n: usize, k: usize, m: f64) -> Result<f64> {
    let th = m_threshold(n, k)?;
    let nf = n as f64;
    if m <= 0.0 {
        return Ok(nf);
    }
    let q = m / nf;
    let (t, k) = (th.level_floor() as i64, k as i64);
    Ok(nf * (1.0 - q) * binomial_cdf(t, k - 1, q) - (nf - 1.0) * q * (1.0 - q) * binomial_cdf(t - 1, k - 2, q)
        + (1.0 - q) / q * (1.0 - binomial_cdf(t + 1, k, q)))
}

/// `R_d(M)`: the per-level sum.
pub fn r_d(n: usize, k: usize, m: f64) -> f64 {
    r_d_sum(n, k, m)
}

/// `R_d(M)` in exact arithmetic.
pub fn r_d_exact(n: usize, k: usize, m: &Rational) -> Rational {
    let q = m / r(n as i64);
    let p = Rational::one() - &q;
    (0..k)
        .map(|i| {
            let units =
                if level_uses_two_step(n, k, i) { level_two_step_units(n, k, i) } else { level_xor_units(k, i) };
            rat_int(units) * num::pow(q.clone(), i) * num::pow(p.clone(), k - i)
        })
        .fold(Rational::zero(), |a, b| a + b)
}

/// A load value on a curve.
#[derive(Debug, Clone, PartialEq)]
pub enum Load {
    Exact(Rational),
    Real(f64),
}

impl Load {
    pub fn to_f64(&self) -> f64 {
        match self {
            Load::Exact(v) => to_f64(v),
            Load::Real(v) => *v,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub scheme: &'static str,
    pub memory: Rational,
    pub load: Load,
}

pub const SCHEMES: [&str; 6] =
    ["mns-centralized", "mns-decentralized", "outer-bound", "proposed-centralized", "proposed-decentralized", "rco"];

/// Memory points `jN/density`, the grid `tN/K` and `1/K`, sorted and deduplicated.
pub fn tradeoff_memories(n: usize, k: usize, density: usize) -> Vec<Rational> {
    let mut ms: Vec<Rational> =
        (0..=density).map(|j| Rational::new(BigInt::from(j * n), BigInt::from(density.max(1)))).collect();
    ms.extend(memory_grid(n, k));
    ms.push(small_cache_point(n, k).0);
    ms.sort();
    ms.dedup();
    ms
}

/// Every curve evaluated on [`tradeoff_memories`], sorted by scheme then memory.
pub fn tradeoff(n: usize, k: usize, density: usize) -> Result<Vec<CurvePoint>> {
    check_regime(n, k)?;
    let ms = tradeoff_memories(n, k, density);
    let proposed = centralized_curve(n, k)?;
    let rco = r_co_curve(n, k)?;
    let mns = mns_centralized(n, k)?;
    let mut out = Vec::with_capacity(ms.len() * SCHEMES.len());
    for m in &ms {
        let mf = to_f64(m);
        let exact = |e: &Envelope| Load::Exact(e.eval(m).expect("memory within [0, N]"));
        out.push(CurvePoint { scheme: "mns-centralized", memory: m.clone(), load: exact(&mns) });
        out.push(CurvePoint {
            scheme: "mns-decentralized",
            memory: m.clone(),
            load: Load::Real(mns_decentralized(n, k, mf)),
        });
        out.push(CurvePoint { scheme: "outer-bound", memory: m.clone(), load: Load::Exact(lp_bound(n, k, m)?.value) });
        out.push(CurvePoint { scheme: "proposed-centralized", memory: m.clone(), load: exact(&proposed) });
        out.push(CurvePoint { scheme: "proposed-decentralized", memory: m.clone(), load: Load::Real(r_d(n, k, mf)) });
        out.push(CurvePoint { scheme: "rco", memory: m.clone(), load: exact(&rco) });
    }
    out.sort_by(|a, b| a.scheme.cmp(b.scheme).then_with(|| a.memory.cmp(&b.memory)));
    Ok(out)
}

#[derive(Debug, Serialize)]
struct CurveRow<'a> {
    scheme: &'a str,
    #[serde(rename = "M_num")]
    m_num: String,
    #[serde(rename = "M_den")]
    m_den: String,
    load: String,
    exact: bool,
}

/// `scheme,M_num,M_den,load` with the load to 12 decimals.
pub fn curves_csv(points: &[CurvePoint]) -> String {
    let mut s = String::from("scheme,M_num,M_den,load\n");
    for p in points {
        s.push_str(&format!("{},{},{},{:.12}\n", p.scheme, p.memory.numer(), p.memory.denom(), p.load.to_f64()));
    }
    s
}

/// The same rows as JSON objects, flagging loads computed exactly.
pub fn curves_json(points: &[CurvePoint]) -> String {
    let rows: Vec<CurveRow> = points
        .iter()
        .map(|p| CurveRow {
            scheme: p.scheme,
            m_num: p.memory.numer().to_string(),
            m_den: p.memory.denom().to_string(),
            load: format!("{:.12}", p.load.to_f64()),
            exact: matches!(p.load, Load::Exact(_)),
        })
        .collect();
    serde_json::to_string_pretty(&rows).expect("rows serialize")
}

/// Integer part of a nonnegative rational.
pub fn floor_rational(x: &Rational) -> i128 {
    x.numer().div_floor(x.denom()).to_i128().expect("fits")
}
