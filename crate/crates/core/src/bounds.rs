//! Lower bound on the load under uncoded placement.
//!
//! With `x_i` the total length (in files) of the pieces cached by exactly `i`
//! users, any uncoded placement obeys `sum x_i = N` and `sum i x_i = KM`, and the
//! load is at least `sum c_i x_i` with
//! `c_i = [C(K-1,i) + ... + C(K-N,i)] / (N C(K,i))`.
//! The minimum over the polytope is attained at a vertex with at most two
//! nonzero coordinates, so all pairs are enumerated in exact arithmetic.

use num::{BigInt, One, Signed, Zero};
use serde::Serialize;

use crate::analytics::{memory_grid, r_co_curve};
use crate::combinatorics::{binom, format_rational, rat_int, Rational};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundProgram {
    pub files: usize,
    pub users: usize,
    pub coeffs: Vec<Rational>,
}

impl BoundProgram {
    pub fn new(n: usize, k: usize) -> Self {
        let coeffs = (0..=k)
            .map(|i| {
                let num: u128 = (1..=n).map(|j| binom(k as i64 - j as i64, i as i64)).sum();
                let den = n as u128 * binom(k as i64, i as i64);
                Rational::new(BigInt::from(num), BigInt::from(den))
            })
            .collect();
        BoundProgram { files: n, users: k, coeffs }
    }

    pub fn objective(&self, x: &[Rational]) -> Rational {
        self.coeffs.iter().zip(x).map(|(c, x)| c * x).fold(Rational::zero(), |a, b| a + b)
    }

    /// `x >= 0`, `sum x = N`, `sum i x_i = KM`.
    pub fn is_feasible(&self, x: &[Rational], m: &Rational) -> bool {
        let total = x.iter().fold(Rational::zero(), |a, b| a + b);
        let weighted = x.iter().enumerate().fold(Rational::zero(), |a, (i, v)| a + rat_int(i as i128) * v);
        x.len() == self.users + 1
            && x.iter().all(|v| !v.is_negative())
            && total == rat_int(self.files as i128)
            && weighted == m * rat_int(self.users as i128)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundCertificate {
    pub memory: Rational,
    pub value: Rational,
    pub witness: Vec<Rational>,
    /// Smallest `q` with `M <= Nq/K`, clamped to `[1, K]`.
    pub segment: usize,
}

/// Exact minimum of the bound program at memory `m`.
pub fn lp_bound(n: usize, k: usize, m: &Rational) -> Result<BoundCertificate> {
    let nn = rat_int(n as i128);
    if m.is_negative() || m > &nn || n == 0 || n >= k {
        return Err(Error::Infeasible { memory: format_rational(m) });
    }
    let prog = BoundProgram::new(n, k);
    let km = m * rat_int(k as i128);
    let mut best: Option<(Rational, usize, usize, Rational, Rational)> = None;
    for a in 0..=k {
        for b in a + 1..=k {
            // x_a + x_b = N, a x_a + b x_b = KM.
            let xb = (&km - rat_int(a as i128) * &nn) / rat_int((b - a) as i128);
            let xa = &nn - &xb;
            if xa.is_negative() || xb.is_negative() {
                continue;
            }
            let v = &prog.coeffs[a] * &xa + &prog.coeffs[b] * &xb;
            if best.as_ref().is_none_or(|bst| v < bst.0) {
                best = Some((v, a, b, xa, xb));
            }
        }
    }
    let (value, a, b, xa, xb) = best.ok_or_else(|| Error::Infeasible { memory: format_rational(m) })?;
    let mut witness = vec![Rational::zero(); k + 1];
    witness[a] = xa;
    witness[b] = xb;
    let q = (&km / &nn).ceil().to_integer();
    let segment = q.max(BigInt::one()).min(BigInt::from(k)).try_into().expect("small");
    Ok(BoundCertificate { memory: m.clone(), value, witness, segment })
}

/// The `q`-th affine piece of the two-file bound:
/// `(2K^2 - 2K - q^2 + q) / (K(K-1)) + (2q - 3K + 1) / (2(K-1)) M`.
pub fn n2_segment(k: usize, q: usize, m: &Rational) -> Rational {
    let (k, q) = (k as i128, q as i128);
    let c = Rational::new(BigInt::from(2 * k * k - 2 * k - q * q + q), BigInt::from(k * (k - 1)));
    let s = Rational::new(BigInt::from(2 * q - 3 * k + 1), BigInt::from(2 * (k - 1)));
    c + s * m
}

/// Two-file bound in closed form: the largest affine piece.
pub fn closed_form_bound_n2(k: usize, m: &Rational) -> Rational {
    (1..=k).map(|q| n2_segment(k, q, m)).max().expect("K >= 1")
}

/// Coefficients left after eliminating `x_q` and `x_{q-1}` from the two-file
/// objective: `c_i - alpha - beta i`, which equal `(q-i)(q-i-1) / (2K(K-1))`.
pub fn elimination_residuals(k: usize, q: usize) -> Vec<Rational> {
    let prog = BoundProgram::new(2, k);
    let (kk, qq) = (k as i128, q as i128);
    let alpha = Rational::new(BigInt::from(2 * kk * kk - 2 * kk - qq * qq + qq), BigInt::from(2 * kk * (kk - 1)));
    let beta = Rational::new(BigInt::from(2 * qq - 3 * kk + 1), BigInt::from(2 * kk * (kk - 1)));
    (0..=k).map(|i| &prog.coeffs[i] - &alpha - &beta * rat_int(i as i128)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CertificatePoint {
    #[serde(rename = "M")]
    pub memory: String,
    pub achievable: String,
    pub bound: String,
    pub witness: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Certificate {
    #[serde(rename = "K")]
    pub users: usize,
    #[serde(rename = "N")]
    pub files: usize,
    pub mode: &'static str,
    pub points: Vec<CertificatePoint>,
    pub certified: bool,
}

impl Certificate {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes")
    }
}

/// Grid points `Nt/K` followed by `N j / 51`, `j = 1..=50`.
pub fn certificate_memories(n: usize, k: usize) -> Vec<Rational> {
    let mut ms = memory_grid(n, k);
    ms.extend((1..=50).map(|j| Rational::new(BigInt::from(n * j), BigInt::from(51))));
    ms
}

fn point(m: &Rational, achievable: &Rational, cert: &BoundCertificate) -> CertificatePoint {
    CertificatePoint {
        memory: format_rational(m),
        achievable: format_rational(achievable),
        bound: format_rational(&cert.value),
        witness: cert.witness.iter().map(format_rational).collect(),
    }
}

/// Checks, exactly, that for two files the envelope of the two-step loads
/// equals both the program optimum and the closed form at every point of
/// [`certificate_memories`].
pub fn certify_optimality_n2(k: usize) -> Result<Certificate> {
    let curve = r_co_curve(2, k)?;
    let mut points = Vec::new();
    for m in certificate_memories(2, k) {
        let achievable = curve.eval(&m).expect("memory within [0, 2]");
        let cert = lp_bound(2, k, &m)?;
        let closed = closed_form_bound_n2(k, &m);
        if achievable != cert.value || closed != cert.value {
            return Err(Error::CertificationFailed {
                memory: format_rational(&m),
                achievable: format_rational(&achievable),
                bound: format!("{} (closed form {})", format_rational(&cert.value), format_rational(&closed)),
            });
        }
        points.push(point(&m, &achievable, &cert));
    }
    Ok(Certificate { users: k, files: 2, mode: "equality", points, certified: true })
}

/// The program bound next to the achievable envelope, with no equality claim.
/// Fails only if the bound exceeds what is achieved.
pub fn bound_report(n: usize, k: usize) -> Result<Certificate> {
    let curve = r_co_curve(n, k)?;
    let mut points = Vec::new();
    for m in certificate_memories(n, k) {
        let achievable = curve.eval(&m).expect("memory within [0, N]");
        let cert = lp_bound(n, k, &m)?;
        if cert.value > achievable {
            return Err(Error::CertificationFailed {
                memory: format_rational(&m),
                achievable: format_rational(&achievable),
                bound: format_rational(&cert.value),
            });
        }
        points.push(point(&m, &achievable, &cert));
    }
    Ok(Certificate { users: k, files: n, mode: "bound_only", points, certified: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::rat;

    #[test]
    fn coefficients() {
        let p = BoundProgram::new(2, 5);
        for i in 0..=5i64 {
            assert_eq!(p.coeffs[i as usize], rat((5 - i) * (8 - i), 40));
        }
        for (n, k) in [(2, 5), (3, 7), (4, 8)] {
            let p = BoundProgram::new(n, k);
            assert_eq!(p.coeffs[0], rat(1, 1));
            assert_eq!(p.coeffs[k], rat(0, 1));
        }
    }

    #[test]
    fn example_bound() {
        let c = lp_bound(2, 5, &rat(4, 5)).unwrap();
        assert_eq!(c.value, rat(9, 10));
        assert_eq!(c.segment, 2);
        assert!(BoundProgram::new(2, 5).is_feasible(&c.witness, &rat(4, 5)));
        assert_eq!(n2_segment(5, 2, &rat(0, 1)), rat(19, 10));
        assert_eq!(n2_segment(5, 2, &rat(4, 1)) - n2_segment(5, 2, &rat(0, 1)), rat(-5, 1));
    }

    #[test]
    fn endpoints() {
        let full = lp_bound(3, 7, &rat(3, 1)).unwrap();
        assert_eq!(full.value, rat(0, 1));
        assert_eq!(full.witness[7], rat(3, 1));
        assert_eq!(lp_bound(3, 7, &rat(0, 1)).unwrap().value, rat(3, 1));
        assert!(matches!(lp_bound(3, 7, &rat(4, 1)), Err(Error::Infeasible { .. })));
    }

    /// Minimum over a rational grid on every three-variable face.
    fn grid_oracle(n: usize, k: usize, m: &Rational) -> Rational {
        let prog = BoundProgram::new(n, k);
        let km = m * rat(k as i64, 1);
        let nn = rat(n as i64, 1);
        let mut best: Option<Rational> = None;
        for a in 0..=k {
            for b in a + 1..=k {
                for c in (0..=k).filter(|&c| c != a && c != b) {
                    for s in 0..=8 {
                        let xc = rat(s, 8) * &nn;
                        // x_a + x_b = N - x_c, a x_a + b x_b = KM - c x_c
                        let rest = &nn - &xc;
                        let w = &km - rat(c as i64, 1) * &xc;
                        let xb = (&w - rat(a as i64, 1) * &rest) / rat((b - a) as i64, 1);
                        let xa = &rest - &xb;
                        if xa < rat(0, 1) || xb < rat(0, 1) {
                            continue;
                        }
                        let v = &prog.coeffs[a] * xa + &prog.coeffs[b] * xb + &prog.coeffs[c] * &xc;
                        if best.as_ref().is_none_or(|x| &v < x) {
                            best = Some(v);
                        }
                    }
                }
            }
        }
        best.unwrap()
    }

    #[test]
    fn vertex_enumeration_matches_grid_oracle() {
        for (n, k) in [(2, 4), (2, 5), (3, 5), (3, 6)] {
            for j in 0..=12 {
                let m = rat((n * j) as i64, 12);
                let v = lp_bound(n, k, &m).unwrap().value;
                let o = grid_oracle(n, k, &m);
                assert!(v <= o, "n={n} k={k} m={m}");
                assert_eq!(v, o, "n={n} k={k} m={m}");
            }
        }
    }

    #[test]
    fn closed_form_matches_program() {
        for k in 3..=10 {
            for j in 0..40 {
                let m = rat(2 * j, 39);
                assert_eq!(lp_bound(2, k, &m).unwrap().value, closed_form_bound_n2(k, &m), "k={k} m={m}");
            }
        }
    }

    #[test]
    fn segment_endpoints() {
        for k in 3..=10usize {
            for q in 1..=k {
                let m = rat(2 * q as i64, k as i64);
                let (ki, qi) = (k as i64, q as i64);
                let expect = rat(2 * (ki - qi), ki) - rat(qi * (ki - qi), ki * (ki - 1));
                assert_eq!(n2_segment(k, q, &m), expect);
            }
        }
    }

    #[test]
    fn residuals_are_nonnegative_quadratics() {
        for k in 3..=10usize {
            for q in 1..=k {
                for (i, r) in elimination_residuals(k, q).into_iter().enumerate() {
                    let (qi, ii, ki) = (q as i64, i as i64, k as i64);
                    assert_eq!(r, rat((qi - ii) * (qi - ii - 1), 2 * ki * (ki - 1)));
                    assert!(r >= rat(0, 1));
                }
            }
        }
    }

    #[test]
    fn two_file_certificates() {
        for k in 3..=10 {
            let c = certify_optimality_n2(k).unwrap();
            assert!(c.certified);
            assert_eq!(c.points.len(), k + 1 + 50);
        }
        let c = certify_optimality_n2(5).unwrap();
        let p = c.points.iter().find(|p| p.memory == "4/5").unwrap();
        assert_eq!((p.achievable.as_str(), p.bound.as_str()), ("9/10", "9/10"));
    }

    #[test]
    fn bound_never_exceeds_achievable() {
        for k in 3..=8 {
            for n in 2..k {
                let rep = bound_report(n, k).unwrap();
                assert!(!rep.certified);
            }
        }
    }
}
